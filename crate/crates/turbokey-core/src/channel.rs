//! The N-branch correlated log-normal turbulent channel and its two
//! single-variable log-normal reductions.
//!
//! Each branch transmittance eta_i is log-normal: ln eta_i has common mean
//! mu0, common variance sigma0^2, and pairwise correlation rho. Equal-gain
//! combining makes the branch randomness enter every receiver formula only
//! through one of two scalars,
//!
//! - eta_eq     = sum_i eta_i        (photon counting),
//! - eta_eq_hd  = sum_i sqrt(eta_i)  (homodyne),
//!
//! and each scalar is approximated by a single log-normal whose first two
//! moments match the true sum exactly (Fenton-Wilkinson moment matching).

use crate::{Error, Result};

/// The correlated log-normal channel: the single source of channel truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurbulenceParams {
    n_branches: usize,
    mu0: f64,
    sigma0_sq: f64,
    rho: f64,
}

impl TurbulenceParams {
    /// Build a channel from the log-domain location parameter mu0.
    ///
    /// Rejects parameter sets whose equicorrelated covariance matrix is not
    /// positive semidefinite (rho below -1/(N-1) for N >= 2) and channels
    /// whose total mean transmittance N * exp(mu0 + sigma0_sq/2) exceeds 1,
    /// since the eavesdropper's split fraction must stay nonnegative.
    pub fn new(n_branches: usize, mu0: f64, sigma0_sq: f64, rho: f64) -> Result<Self> {
        if n_branches == 0 {
            return Err(Error::InvalidParameter(
                "n_branches must be at least 1".into(),
            ));
        }
        if !mu0.is_finite() {
            return Err(Error::InvalidParameter(format!("mu0 must be finite, got {mu0}")));
        }
        if !(sigma0_sq >= 0.0 && sigma0_sq.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma0_sq must be finite and nonnegative, got {sigma0_sq}"
            )));
        }
        if !rho.is_finite() {
            return Err(Error::InvalidParameter(format!("rho must be finite, got {rho}")));
        }
        if n_branches >= 2 {
            let lower = -1.0 / (n_branches as f64 - 1.0);
            if rho < lower - 1e-12 || rho > 1.0 + 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "rho = {rho} outside [{lower}, 1]; the equicorrelated covariance matrix \
                     of {n_branches} branches would not be positive semidefinite"
                )));
            }
        }
        let params = Self {
            n_branches,
            mu0,
            sigma0_sq,
            rho,
        };
        if params.mean_total_transmittance_raw() > 1.0 + 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "total mean transmittance {} exceeds 1",
                params.mean_total_transmittance_raw()
            )));
        }
        Ok(params)
    }

    /// Build a channel from the per-branch mean transmittance eta0, using
    /// mu0 = ln(eta0) - sigma0_sq / 2.
    pub fn from_branch_transmittance(
        n_branches: usize,
        eta0: f64,
        sigma0_sq: f64,
        rho: f64,
    ) -> Result<Self> {
        if !(eta0 > 0.0 && eta0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "per-branch mean transmittance must be positive, got {eta0}"
            )));
        }
        Self::new(n_branches, eta0.ln() - 0.5 * sigma0_sq, sigma0_sq, rho)
    }

    /// Build a channel from the total mean transmittance eta_bar = N * eta0.
    /// This is the natural entry point for sweeps indexed by average
    /// transmittance.
    pub fn from_total_transmittance(
        n_branches: usize,
        eta_bar: f64,
        sigma0_sq: f64,
        rho: f64,
    ) -> Result<Self> {
        if n_branches == 0 {
            return Err(Error::InvalidParameter(
                "n_branches must be at least 1".into(),
            ));
        }
        if !(eta_bar > 0.0 && eta_bar <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "total mean transmittance must lie in (0, 1], got {eta_bar}"
            )));
        }
        Self::from_branch_transmittance(n_branches, eta_bar / n_branches as f64, sigma0_sq, rho)
    }

    pub fn n_branches(&self) -> usize {
        self.n_branches
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn sigma0_sq(&self) -> f64 {
        self.sigma0_sq
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Per-branch mean transmittance eta0 = exp(mu0 + sigma0_sq / 2).
    pub fn mean_transmittance(&self) -> f64 {
        (self.mu0 + 0.5 * self.sigma0_sq).exp()
    }

    fn mean_total_transmittance_raw(&self) -> f64 {
        self.n_branches as f64 * self.mean_transmittance()
    }

    /// Total mean transmittance eta_bar = N * eta0, the fraction of the beam
    /// energy that reaches the receiver on average. Clamped to 1 against
    /// round-off so the eavesdropper's split fraction stays nonnegative.
    pub fn mean_total_transmittance(&self) -> f64 {
        self.mean_total_transmittance_raw().min(1.0)
    }

    /// Log-normal approximation of eta_eq = sum_i eta_i.
    ///
    /// The parameters make the approximation's first two moments equal those
    /// of the true correlated sum:
    ///
    /// mu_eq      = 1.5 ln N + mu0 - ln(A) / 2
    /// sigma_eq^2 = -ln N + sigma0^2 + ln(A),   A = 1 + (N-1) e^{(rho-1) sigma0^2}
    pub fn fw_equivalent_kennedy(&self) -> LognormalDist {
        fw_reduce(self.n_branches, self.mu0, self.sigma0_sq, self.rho)
    }

    /// Log-normal approximation of eta_eq_hd = sum_i sqrt(eta_i).
    ///
    /// sqrt(eta_i) is itself log-normal with location mu0/2 and variance
    /// sigma0^2/4, and the square root preserves the pairwise correlation,
    /// so this is exactly the Kennedy reduction applied to the transformed
    /// parameter set.
    pub fn fw_equivalent_homodyne(&self) -> LognormalDist {
        fw_reduce(self.n_branches, 0.5 * self.mu0, 0.25 * self.sigma0_sq, self.rho)
    }
}

/// Fenton-Wilkinson reduction of a sum of N equicorrelated log-normals.
fn fw_reduce(n: usize, mu0: f64, sigma0_sq: f64, rho: f64) -> LognormalDist {
    let nf = n as f64;
    let ln_n = nf.ln();
    let a = 1.0 + (nf - 1.0) * ((rho - 1.0) * sigma0_sq).exp();
    let mu_eq = 1.5 * ln_n + mu0 - 0.5 * a.ln();
    // Nonnegative for every admissible (N, rho, sigma0_sq); the max guards
    // against -0.0 and round-off at the sigma0_sq = 0 boundary.
    let sigma_eq_sq = (-ln_n + sigma0_sq + a.ln()).max(0.0);
    LognormalDist {
        mu: mu_eq,
        sigma_sq: sigma_eq_sq,
    }
}

/// A one-dimensional log-normal: ln X ~ Normal(mu, sigma_sq).
///
/// sigma_sq = 0 is admitted and denotes a point mass at exp(mu); consumers
/// branch to the deterministic path instead of evaluating the density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LognormalDist {
    mu: f64,
    sigma_sq: f64,
}

impl LognormalDist {
    pub fn new(mu: f64, sigma_sq: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu must be finite, got {mu}")));
        }
        if !(sigma_sq >= 0.0 && sigma_sq.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma_sq must be finite and nonnegative, got {sigma_sq}"
            )));
        }
        if !(mu + 0.5 * sigma_sq).exp().is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mean exp({mu} + {sigma_sq}/2) overflows"
            )));
        }
        Ok(Self { mu, sigma_sq })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }

    pub fn sigma(&self) -> f64 {
        self.sigma_sq.sqrt()
    }

    /// First moment exp(mu + sigma_sq / 2).
    pub fn mean(&self) -> f64 {
        (self.mu + 0.5 * self.sigma_sq).exp()
    }

    /// Second moment exp(2 mu + 2 sigma_sq).
    pub fn second_moment(&self) -> f64 {
        (2.0 * self.mu + 2.0 * self.sigma_sq).exp()
    }

    /// Density (1 / (t sqrt(2 pi sigma_sq))) exp(-(ln t - mu)^2 / (2 sigma_sq)).
    ///
    /// Errors on t <= 0 and on a point mass (sigma_sq = 0), which has no
    /// density.
    pub fn pdf(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!(
                "log-normal density is defined for t > 0, got {t}"
            )));
        }
        if self.sigma_sq == 0.0 {
            return Err(Error::Domain(
                "point mass (sigma_sq = 0) has no density".into(),
            ));
        }
        let z = t.ln() - self.mu;
        Ok((-z * z / (2.0 * self.sigma_sq)).exp()
            / (t * (2.0 * std::f64::consts::PI * self.sigma_sq).sqrt()))
    }
}

/// First two moments of sum_i eta_i from the closed formulas for
/// equicorrelated log-normal branches; the independent reference the
/// Fenton-Wilkinson parameters must reproduce in tests.
#[cfg(test)]
pub(crate) fn closed_sum_moments(n: usize, mu0: f64, s0: f64, rho: f64) -> (f64, f64) {
    let nf = n as f64;
    let m1 = nf * (mu0 + 0.5 * s0).exp();
    let m2 = nf * (2.0 * mu0 + 2.0 * s0).exp()
        + nf * (nf - 1.0) * (2.0 * mu0 + (1.0 + rho) * s0).exp();
    (m1, m2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{adaptive_simpson, QuadSpec};

    #[test]
    fn mean_transmittance_examples() {
        // exponent cancels
        let p = TurbulenceParams::new(1, -0.05, 0.1, 0.0).unwrap();
        assert!((p.mean_transmittance() - 1.0).abs() < 1e-15);

        // inverse of the definition: eta0 = 0.25
        let p = TurbulenceParams::from_branch_transmittance(1, 0.25, 0.1, 0.0).unwrap();
        assert!((p.mean_transmittance() - 0.25).abs() < 1e-15);

        // direct evaluation; the Monte Carlo cross-check of the same value
        // lives in the montecarlo tests
        let p = TurbulenceParams::new(4, -2.0, 0.1, 0.0).unwrap();
        let expected = (-1.95_f64).exp();
        assert!((p.mean_transmittance() - expected).abs() < 1e-15);
        assert!((expected - 0.142_274).abs() < 1e-6);
    }

    #[test]
    fn construction_rejects_bad_parameters() {
        assert!(TurbulenceParams::new(0, -2.0, 0.1, 0.0).is_err());
        assert!(TurbulenceParams::new(4, -2.0, -0.1, 0.0).is_err());
        assert!(TurbulenceParams::new(4, f64::NAN, 0.1, 0.0).is_err());
        // covariance matrix not PSD: rho < -1/(N-1)
        assert!(TurbulenceParams::new(4, -2.0, 0.1, -0.5).is_err());
        assert!(TurbulenceParams::new(4, -2.0, 0.1, -1.0 / 3.0).is_ok());
        assert!(TurbulenceParams::new(2, -2.0, 0.1, 1.5).is_err());
        // total mean transmittance above 1
        assert!(TurbulenceParams::new(4, 0.0, 0.0, 0.0).is_err());
        assert!(TurbulenceParams::from_total_transmittance(4, 1.2, 0.1, 0.0).is_err());
        assert!(TurbulenceParams::from_total_transmittance(4, 0.0, 0.1, 0.0).is_err());
        // rho unconstrained for a single branch
        assert!(TurbulenceParams::new(1, -2.0, 0.1, -5.0).is_ok());
    }

    #[test]
    fn from_total_transmittance_round_trips() {
        for &eta_bar in &[0.1, 0.5, 0.9, 1.0] {
            let p = TurbulenceParams::from_total_transmittance(4, eta_bar, 0.1, 0.0).unwrap();
            assert!(
                (p.mean_total_transmittance() - eta_bar).abs() < 1e-12,
                "eta_bar round trip at {eta_bar}"
            );
        }
    }

    #[test]
    fn fw_kennedy_collapses_for_single_branch() {
        let p = TurbulenceParams::new(1, -2.0, 0.1, 0.7).unwrap();
        let d = p.fw_equivalent_kennedy();
        assert_eq!(d.mu(), -2.0);
        assert_eq!(d.sigma_sq(), 0.1);
    }

    #[test]
    fn fw_kennedy_perfectly_correlated_branches_scale_one_branch() {
        let p = TurbulenceParams::new(4, -3.0, 0.1, 1.0).unwrap();
        let d = p.fw_equivalent_kennedy();
        assert!((d.mu() - (-3.0 + 4.0_f64.ln())).abs() < 1e-12);
        assert!((d.sigma_sq() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn fw_kennedy_matches_closed_sum_moments() {
        let p = TurbulenceParams::new(4, -2.0, 0.1, 0.0).unwrap();
        let d = p.fw_equivalent_kennedy();
        let (m1, m2) = closed_sum_moments(4, -2.0, 0.1, 0.0);
        assert!(((d.mean() - m1) / m1).abs() < 1e-14, "first moment");
        assert!(
            ((d.second_moment() - m2) / m2).abs() < 1e-14,
            "second moment"
        );
        assert!((m1 - 4.0 * (-1.95_f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn fw_homodyne_single_branch_halves_mu_and_quarters_variance() {
        let p = TurbulenceParams::new(1, -2.0, 0.1, 0.0).unwrap();
        let d = p.fw_equivalent_homodyne();
        assert_eq!(d.mu(), -1.0);
        assert_eq!(d.sigma_sq(), 0.025);
    }

    #[test]
    fn fw_homodyne_two_identical_branches() {
        let p = TurbulenceParams::new(2, -2.0, 0.1, 1.0).unwrap();
        let d = p.fw_equivalent_homodyne();
        assert!((d.mu() - (-1.0 + 2.0_f64.ln())).abs() < 1e-12);
        assert!((d.sigma_sq() - 0.025).abs() < 1e-12);
    }

    #[test]
    fn fw_homodyne_is_kennedy_of_the_transformed_parameters() {
        // chosen so that the transformed parameter set is itself a valid
        // channel (its total mean transmittance stays at or below 1)
        let grid = [
            (1usize, -2.0, 0.1, 0.0),
            (2, -1.5, 0.05, 0.4),
            (4, -3.0, 0.1, 0.0),
            (4, -3.0, 0.3, 0.9),
            (8, -4.5, 0.2, -0.1),
        ];
        for &(n, mu0, s0, rho) in &grid {
            let p = TurbulenceParams::new(n, mu0, s0, rho).unwrap();
            let direct = p.fw_equivalent_homodyne();
            let transformed = TurbulenceParams::new(n, 0.5 * mu0, 0.25 * s0, rho)
                .unwrap()
                .fw_equivalent_kennedy();
            assert_eq!(direct, transformed, "at ({n}, {mu0}, {s0}, {rho})");
        }
    }

    #[test]
    fn fw_homodyne_matches_closed_moments_of_the_sqrt_sum() {
        let p = TurbulenceParams::new(4, -2.0, 0.1, 0.0).unwrap();
        let d = p.fw_equivalent_homodyne();
        // sqrt(eta_i) is log-normal(mu0/2, sigma0^2/4) with the same rho
        let (m1, m2) = closed_sum_moments(4, -1.0, 0.025, 0.0);
        assert!(((d.mean() - m1) / m1).abs() < 1e-14);
        assert!(((d.second_moment() - m2) / m2).abs() < 1e-14);
    }

    #[test]
    fn fw_variance_nonnegative_and_narrowing_with_diversity() {
        let sigmas = [0.01, 0.05, 0.1, 0.3, 0.5];
        let rhos = [-0.2, 0.0, 0.3, 0.6, 0.9];
        for &s0 in &sigmas {
            for &rho in &rhos {
                let mut prev = f64::INFINITY;
                for &n in &[1usize, 2, 4, 8] {
                    if n >= 2 && rho < -1.0 / (n as f64 - 1.0) {
                        continue;
                    }
                    let p = TurbulenceParams::new(n, -3.0, s0, rho).unwrap();
                    let d = p.fw_equivalent_kennedy();
                    assert!(d.sigma_sq() >= 0.0, "sigma_eq^2 < 0 at ({n}, {s0}, {rho})");
                    if rho < 1.0 {
                        assert!(
                            d.sigma_sq() <= prev + 1e-15,
                            "sigma_eq^2 not nonincreasing in N at ({n}, {s0}, {rho})"
                        );
                    }
                    prev = d.sigma_sq();
                }
            }
        }
    }

    #[test]
    fn pdf_reference_points() {
        let d = LognormalDist::new(0.0, 1.0).unwrap();
        let peak = d.pdf(1.0).unwrap();
        assert!(
            (peak - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15,
            "pdf(1) for standard log-normal: {peak}"
        );
        // t -> 0+ limit
        assert!(d.pdf(1e-300).unwrap() == 0.0);
        assert!(d.pdf(0.0).is_err());
        assert!(d.pdf(-1.0).is_err());
        assert!(LognormalDist::new(-1.0, 0.0).unwrap().pdf(0.5).is_err());
    }

    #[test]
    fn pdf_integrates_to_one() {
        let spec = QuadSpec {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_subdivisions: 32,
            ..QuadSpec::default()
        };
        // integrate pdf(e^u) e^u du so wide supports stay resolvable
        for &(mu, s2) in &[(-2.0, 0.1), (0.0, 1.0), (-1.0, 0.5), (0.5, 0.05)] {
            let d = LognormalDist::new(mu, s2).unwrap();
            let sigma = s2.sqrt();
            let total = adaptive_simpson(
                |u: f64| d.pdf(u.exp()).unwrap() * u.exp(),
                mu - 10.0 * sigma,
                mu + 10.0 * sigma,
                &spec,
            )
            .unwrap();
            assert!(
                (total - 1.0).abs() < 1e-8,
                "pdf normalization at ({mu}, {s2}): {total}"
            );
        }
    }

    #[test]
    fn pdf_value_cross_checked_by_normalization_weighting() {
        // Density at one point, pinned against the normalized quadrature of
        // the same density over a bracketing interval.
        let d = LognormalDist::new(-2.0, 0.1).unwrap();
        let t0 = 0.135_335;
        let val = d.pdf(t0).unwrap();
        let spec = QuadSpec::default();
        let eps = 1e-7;
        let cell = adaptive_simpson(|t| d.pdf(t).unwrap(), t0 - eps, t0 + eps, &spec).unwrap();
        assert!(
            ((cell / (2.0 * eps) - val) / val).abs() < 1e-8,
            "pointwise density vs local quadrature: {val}"
        );
    }
}
