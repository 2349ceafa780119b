//! # turbokey-core
//!
//! Bit-error rates and post-selection secret key rates for BPSK coherent-state
//! links over correlated log-normal turbulent channels, comparing a
//! conditionally-displaced Kennedy (CD-Kennedy) photon-counting receiver
//! against a homodyne receiver under N-branch equal-gain combining.
//!
//! The library is organised around a single channel description,
//! [`TurbulenceParams`], from which everything else is derived:
//!
//! - [`channel`] — the N-branch correlated log-normal channel and its two
//!   single-variable log-normal reductions (Fenton-Wilkinson moment matching
//!   of the branch sum and of the sum of branch square roots).
//! - [`detection`] — receiver statistics and unconditional BER for both
//!   receivers.
//! - [`qkd`] — mutual informations, eavesdropper bounds under individual
//!   (Helstrom) and collective (Holevo) beamsplitter attacks, post-selection
//!   regions, secret key rates, and transmit-amplitude optimization.
//! - [`montecarlo`] — an independent end-to-end oracle that samples the full
//!   N-dimensional channel and simulates both receivers symbol by symbol.
//! - [`quadrature`] — shared numeric kernels: log-normal-weighted quadrature,
//!   adaptive Simpson, bisection, stable entropy evaluation.
//! - [`sweep`] — the parameter-sweep harness behind the `turbokey` CLI.
//!
//! ## Example
//!
//! ```
//! use turbokey_core::channel::TurbulenceParams;
//! use turbokey_core::detection::{kennedy_ber, homodyne_ber, SignalAmplitude};
//! use turbokey_core::qkd::{skr_kennedy, AttackModel};
//!
//! // 4 branches, total mean transmittance 0.5, log-variance 0.1, uncorrelated
//! let params = TurbulenceParams::from_total_transmittance(4, 0.5, 0.1, 0.0).unwrap();
//! let beta = SignalAmplitude::from_mean_photons(2.0).unwrap();
//!
//! let ber_k = kennedy_ber(&beta, &params).unwrap();
//! let ber_h = homodyne_ber(&beta, &params).unwrap();
//! assert!(ber_k.ber > 0.0 && ber_k.ber <= 0.5);
//! assert!(ber_h.ber > 0.0 && ber_h.ber <= 0.5);
//!
//! let skr = skr_kennedy(&beta, &params, AttackModel::CollectiveHolevo).unwrap();
//! assert!(skr.skr >= 0.0);
//! ```

pub mod channel;
pub mod detection;
pub mod montecarlo;
pub mod qkd;
pub mod quadrature;
pub mod sweep;

pub use channel::{LognormalDist, TurbulenceParams};
pub use detection::{BerResult, Receiver, SignalAmplitude};
pub use montecarlo::{McConfig, McEstimate};
pub use qkd::{AttackModel, SkrResult};

/// Errors produced by the library's fallible operations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A constructor argument violates a type invariant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An input lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical routine failed to converge; the message carries the
    /// diagnostics of the last attempt.
    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
