//! Receiver-level statistics and unconditional BER for the CD-Kennedy
//! (photon counting after conditional displacement) and homodyne receivers
//! under equal-gain combining.
//!
//! For BPSK the transmitted amplitude is -beta for bit 0 and +beta for bit 1.
//! After displacement the Kennedy branch sees a vacuum for bit 0 and a
//! Poisson photon count for bit 1, so the combined count n over N branches is
//! Poisson with rate (4 beta^2 / N) sum_i eta_i for bit 1 and exactly 0 for
//! bit 0; the decision is click / no-click. The homodyne combiner output is
//! Gaussian with mean +/- beta sum_i sqrt(eta_i) / sqrt(N) and variance N/4;
//! the decision is a sign threshold.

use crate::channel::TurbulenceParams;
use crate::montecarlo::McEstimate;
use crate::quadrature::{integrate_lognormal, QuadSpec};
use crate::{Error, Result};

/// Transmitted coherent amplitude beta >= 0; beta^2 is the mean photon
/// number per symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalAmplitude(f64);

impl SignalAmplitude {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "signal amplitude must be finite and nonnegative, got {beta}"
            )));
        }
        Ok(Self(beta))
    }

    /// Build from the mean photon number beta^2.
    pub fn from_mean_photons(beta_sq: f64) -> Result<Self> {
        if !(beta_sq >= 0.0 && beta_sq.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mean photon number must be finite and nonnegative, got {beta_sq}"
            )));
        }
        Ok(Self(beta_sq.sqrt()))
    }

    pub fn beta(&self) -> f64 {
        self.0
    }

    pub fn beta_sq(&self) -> f64 {
        self.0 * self.0
    }
}

/// Receiver selector shared by the closed-form, Monte Carlo, and sweep paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Receiver {
    Kennedy,
    Homodyne,
}

/// How a BER value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BerMethod {
    /// Quadrature against the Fenton-Wilkinson equivalent transmittance.
    ClosedFormFw,
    /// End-to-end Monte Carlo over the full N-dimensional channel.
    MonteCarlo,
}

/// A bit-error rate together with its provenance.
#[derive(Debug, Clone, Copy)]
pub struct BerResult {
    pub ber: f64,
    pub method: BerMethod,
    /// Binomial standard error; present only for Monte Carlo estimates.
    pub mc_stderr: Option<f64>,
}

impl BerResult {
    pub fn from_mc(estimate: &McEstimate) -> Self {
        Self {
            ber: estimate.value,
            method: BerMethod::MonteCarlo,
            mc_stderr: Some(estimate.stderr),
        }
    }
}

/// Poisson probability exp(-lambda) lambda^n / n!, with the 0^n convention
/// at lambda = 0 (1 at n = 0, else 0).
///
/// Large rates and counts (lambda > 700 or n > 170) are evaluated in the log
/// domain so neither lambda^n nor n! overflows.
pub fn kennedy_photon_pmf(lambda: f64, n: u64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::Domain(format!(
            "Poisson rate must be nonnegative, got {lambda}"
        )));
    }
    if lambda == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    if lambda > 700.0 || n > 170 {
        let nf = n as f64;
        return Ok((-lambda + nf * lambda.ln() - libm::lgamma(nf + 1.0)).exp());
    }
    // Iterative product keeps every partial value at or below the pmf peak,
    // so nothing overflows.
    let mut p = (-lambda).exp();
    for k in 1..=n {
        p *= lambda / k as f64;
    }
    Ok(p)
}

/// Kennedy error probability conditioned on the channel realisation:
/// (1/2) exp(-(4 beta^2 / N) sum_i eta_i).
///
/// The only error event is detecting zero photons when bit 1 was sent; any
/// click identifies bit 1 with certainty.
pub fn kennedy_conditional_ber(
    beta: &SignalAmplitude,
    n_branches: usize,
    eta_sum: f64,
) -> f64 {
    debug_assert!(eta_sum >= 0.0);
    let lambda = 4.0 * beta.beta_sq() * eta_sum / n_branches as f64;
    0.5 * (-lambda).exp()
}

/// Unconditional Kennedy BER: the expectation of the conditional BER over
/// the Fenton-Wilkinson equivalent transmittance. No closed form exists for
/// the log-normal integral, so it is evaluated by quadrature.
pub fn kennedy_ber(beta: &SignalAmplitude, params: &TurbulenceParams) -> Result<BerResult> {
    let c = 4.0 * beta.beta_sq() / params.n_branches() as f64;
    let dist = params.fw_equivalent_kennedy();
    let ber = integrate_lognormal(|t| 0.5 * (-c * t).exp(), &dist, &QuadSpec::default())?;
    Ok(BerResult {
        ber: ber.clamp(0.0, 0.5),
        method: BerMethod::ClosedFormFw,
        mc_stderr: None,
    })
}

/// Density of the combined homodyne output x given the branch realisation:
/// sqrt(2/(N pi)) exp(-(2/N) (x - beta_l sum_i sqrt(eta_i) / sqrt(N))^2),
/// where beta_l = +/- beta encodes the transmitted bit.
pub fn homodyne_conditional_pdf(
    beta_signed: f64,
    n_branches: usize,
    eta_sqrt_sum: f64,
    x: f64,
) -> f64 {
    debug_assert!(eta_sqrt_sum >= 0.0);
    let nf = n_branches as f64;
    let mean = beta_signed * eta_sqrt_sum / nf.sqrt();
    (2.0 / (nf * std::f64::consts::PI)).sqrt() * (-(2.0 / nf) * (x - mean).powi(2)).exp()
}

/// Unconditional homodyne BER: the expectation of Q((2 beta / N) eta_eq_hd)
/// over the Fenton-Wilkinson equivalent of sum_i sqrt(eta_i).
pub fn homodyne_ber(beta: &SignalAmplitude, params: &TurbulenceParams) -> Result<BerResult> {
    let c = 2.0 * beta.beta() / params.n_branches() as f64;
    let dist = params.fw_equivalent_homodyne();
    let ber = integrate_lognormal(|t| q_function(c * t), &dist, &QuadSpec::default())?;
    Ok(BerResult {
        ber: ber.clamp(0.0, 0.5),
        method: BerMethod::ClosedFormFw,
        mc_stderr: None,
    })
}

/// Standard Gaussian tail probability Q(x) = P(Z > x), evaluated through the
/// complementary error function for stability in both tails.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::TurbulenceParams;
    use crate::quadrature::{adaptive_simpson, QuadSpec};

    #[test]
    fn pmf_vacuum_convention() {
        assert_eq!(kennedy_photon_pmf(0.0, 0).unwrap(), 1.0);
        assert_eq!(kennedy_photon_pmf(0.0, 3).unwrap(), 0.0);
        assert!(kennedy_photon_pmf(-1.0, 0).is_err());
        assert!(kennedy_photon_pmf(f64::NAN, 0).is_err());
    }

    #[test]
    fn pmf_direct_value_agrees_with_log_domain_oracle() {
        let direct = kennedy_photon_pmf(8.0, 8).unwrap();
        assert!(
            (direct - 0.139_586_531_950_596_93).abs() < 1e-15,
            "P(n=8 | lambda=8) = {direct}"
        );
        // independent log-domain route
        let oracle = (-8.0 + 8.0 * 8.0_f64.ln() - libm::lgamma(9.0)).exp();
        assert!(((direct - oracle) / oracle).abs() < 1e-13);
    }

    #[test]
    fn pmf_normalizes_even_for_large_rates() {
        for &lambda in &[0.5_f64, 8.0, 120.0, 900.0] {
            let peak = lambda as u64;
            let span = (12.0 * lambda.sqrt()).ceil() as u64 + 12;
            let lo = peak.saturating_sub(span);
            let total: f64 = (lo..=peak + span)
                .map(|n| kennedy_photon_pmf(lambda, n).unwrap())
                .sum();
            assert!(
                (total - 1.0).abs() < 1e-10,
                "pmf mass at lambda = {lambda}: {total}"
            );
        }
    }

    #[test]
    fn conditional_ber_reference_points() {
        let beta0 = SignalAmplitude::new(0.0).unwrap();
        assert_eq!(kennedy_conditional_ber(&beta0, 4, 1.7), 0.5);

        let beta = SignalAmplitude::from_mean_photons(2.0).unwrap();
        assert_eq!(kennedy_conditional_ber(&beta, 1, 0.0), 0.5);
        let v = kennedy_conditional_ber(&beta, 1, 1.0);
        assert!(
            (v - 1.677_313_139_512_559e-4).abs() < 1e-18,
            "0.5 e^-8 = {v}"
        );
    }

    #[test]
    fn kennedy_ber_point_mass_channel() {
        // sigma0^2 = 0 collapses the integral to 0.5 exp(-4 beta^2 eta0)
        let beta = SignalAmplitude::from_mean_photons(2.0).unwrap();
        for &n in &[1usize, 2, 4] {
            let params = TurbulenceParams::from_total_transmittance(n, 0.6, 0.0, 0.0).unwrap();
            let eta0 = 0.6 / n as f64;
            let expected = 0.5 * (-4.0 * 2.0 * eta0).exp();
            let got = kennedy_ber(&beta, &params).unwrap().ber;
            assert!(
                ((got - expected) / expected).abs() < 1e-12,
                "N = {n}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn zero_amplitude_gives_coin_flip_ber() {
        let beta = SignalAmplitude::new(0.0).unwrap();
        let params = TurbulenceParams::from_total_transmittance(4, 0.5, 0.1, 0.0).unwrap();
        assert!((kennedy_ber(&beta, &params).unwrap().ber - 0.5).abs() < 1e-12);
        assert!((homodyne_ber(&beta, &params).unwrap().ber - 0.5).abs() < 1e-12);
    }

    #[test]
    fn homodyne_pdf_peak_and_normalization() {
        // peak at the mean
        let peak = homodyne_conditional_pdf(2.0_f64.sqrt(), 1, 1.0, 2.0_f64.sqrt());
        assert!(
            (peak - 0.797_884_560_802_865_4).abs() < 1e-15,
            "sqrt(2/pi) peak: {peak}"
        );
        for &n in &[1usize, 4] {
            let nf = n as f64;
            let mean = 2.0_f64.sqrt() * 1.3 / nf.sqrt();
            let half_width = 12.0 * (nf / 4.0).sqrt();
            let total = adaptive_simpson(
                |x| homodyne_conditional_pdf(2.0_f64.sqrt(), n, 1.3, x),
                mean - half_width,
                mean + half_width,
                &QuadSpec {
                    abs_tol: 1e-13,
                    rel_tol: 1e-12,
                    ..QuadSpec::default()
                },
            )
            .unwrap();
            assert!(
                (total - 1.0).abs() < 1e-10,
                "homodyne pdf mass at N = {n}: {total}"
            );
        }
    }

    #[test]
    fn homodyne_ber_point_mass_unit_transmittance() {
        let beta = SignalAmplitude::from_mean_photons(2.0).unwrap();
        let params = TurbulenceParams::from_total_transmittance(1, 1.0, 0.0, 0.0).unwrap();
        let got = homodyne_ber(&beta, &params).unwrap().ber;
        let expected = 2.338_867_490_523_633e-3; // Q(2 sqrt 2)
        assert!(
            ((got - expected) / expected).abs() < 1e-10,
            "Q(2 sqrt 2): {got}"
        );
    }

    #[test]
    fn q_function_reference_points() {
        assert_eq!(q_function(0.0), 0.5);
        assert_eq!(q_function(f64::NEG_INFINITY), 1.0);
        assert_eq!(q_function(f64::INFINITY), 0.0);
        assert!((q_function(1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
    }

    #[test]
    fn q_function_matches_density_integration_oracle() {
        let spec = QuadSpec {
            abs_tol: 1e-14,
            rel_tol: 1e-13,
            max_subdivisions: 40,
            ..QuadSpec::default()
        };
        for &x in &[-2.0, -0.5, 0.0, 0.37, 1.0, 2.5] {
            let tail = adaptive_simpson(
                |t| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt(),
                x,
                x + 14.0,
                &spec,
            )
            .unwrap();
            let q = q_function(x);
            assert!(
                (q - tail).abs() < 1e-12,
                "Q({x}) = {q} vs quadrature {tail}"
            );
        }
    }

    #[test]
    fn ber_monotone_in_amplitude_and_transmittance() {
        let etas = [0.1, 0.3, 0.5, 0.7, 0.9];
        let beta_sqs = [0.25, 0.5, 1.0, 2.0, 4.0];
        for &receiver in &[Receiver::Kennedy, Receiver::Homodyne] {
            // nonincreasing in beta^2 at fixed channel
            let params = TurbulenceParams::from_total_transmittance(4, 0.5, 0.1, 0.0).unwrap();
            let mut prev = f64::INFINITY;
            for &b2 in &beta_sqs {
                let beta = SignalAmplitude::from_mean_photons(b2).unwrap();
                let ber = match receiver {
                    Receiver::Kennedy => kennedy_ber(&beta, &params).unwrap().ber,
                    Receiver::Homodyne => homodyne_ber(&beta, &params).unwrap().ber,
                };
                assert!(ber > 0.0 && ber <= 0.5, "{receiver:?} range: {ber}");
                assert!(ber <= prev + 1e-12, "{receiver:?} not monotone in beta^2");
                prev = ber;
            }
            // nonincreasing in eta_bar at fixed amplitude
            let beta = SignalAmplitude::from_mean_photons(2.0).unwrap();
            let mut prev = f64::INFINITY;
            for &eta in &etas {
                let params = TurbulenceParams::from_total_transmittance(4, eta, 0.1, 0.0).unwrap();
                let ber = match receiver {
                    Receiver::Kennedy => kennedy_ber(&beta, &params).unwrap().ber,
                    Receiver::Homodyne => homodyne_ber(&beta, &params).unwrap().ber,
                };
                assert!(ber <= prev + 1e-12, "{receiver:?} not monotone in eta_bar");
                prev = ber;
            }
        }
    }

    #[test]
    fn kennedy_beats_homodyne_at_high_transmittance() {
        // crossover behaviour: at |beta|^2 = 2 the photon counter wins near
        // eta_bar = 0.9
        let beta = SignalAmplitude::from_mean_photons(2.0).unwrap();
        let params = TurbulenceParams::from_total_transmittance(4, 0.9, 0.1, 0.0).unwrap();
        let k = kennedy_ber(&beta, &params).unwrap().ber;
        let h = homodyne_ber(&beta, &params).unwrap().ber;
        assert!(k < h, "kennedy {k} vs homodyne {h}");
    }
}
