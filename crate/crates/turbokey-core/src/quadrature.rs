//! Shared numeric kernels: quadrature against log-normal weights, adaptive
//! Simpson integration, bisection root finding, and a numerically stable
//! binary entropy.
//!
//! Every BER and key-rate expression in this crate reduces to one-dimensional
//! integrals of bounded functions against a log-normal density. Those are
//! evaluated by substituting t = exp(mu + sigma*u), which turns the integral
//! into a standard-normal expectation handled by fixed-order Gauss-Hermite
//! rules, with an adaptive fallback when two rule orders disagree.

use std::f64::consts::{LN_2, PI, SQRT_2};
use std::sync::OnceLock;

use crate::channel::LognormalDist;
use crate::{Error, Result};

/// Tolerances and truncation controls for the quadrature kernels.
#[derive(Debug, Clone, Copy)]
pub struct QuadSpec {
    /// Absolute tolerance on the integral estimate.
    pub abs_tol: f64,
    /// Relative tolerance on the integral estimate.
    pub rel_tol: f64,
    /// Maximum bisection depth of the adaptive fallback.
    pub max_subdivisions: u32,
    /// Half-width of the integration support in units of sigma; the
    /// log-normal support is truncated to exp(mu +/- support_sigmas * sigma).
    /// The default of 8 leaves tail mass below 1e-15.
    pub support_sigmas: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-9,
            max_subdivisions: 24,
            support_sigmas: 8.0,
        }
    }
}

// ---------------------------------------------------------------------------
// Gauss-Hermite rules
// ---------------------------------------------------------------------------

/// Nodes and weights of the n-point Gauss-Hermite rule for the weight
/// exp(-x^2), computed by Newton iteration on the orthonormal Hermite
/// recurrence. Weights satisfy sum w_i = sqrt(pi).
fn hermite_rule(n: usize) -> Vec<(f64, f64)> {
    const EPS: f64 = 3e-14;
    const MAXIT: usize = 24;
    // pi^{-1/4}, the normalization of the zeroth orthonormal Hermite function
    const PIM4: f64 = 0.751_125_544_464_942_5;

    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    let mut z = 0.0_f64;
    for i in 0..m {
        // Asymptotic initial guesses, largest root first.
        z = match i {
            0 => {
                let an = (2 * n + 1) as f64;
                an.sqrt() - 1.85575 * an.powf(-1.0 / 6.0)
            }
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[0],
            3 => 1.91 * z - 0.91 * nodes[1],
            _ => 2.0 * z - nodes[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..MAXIT {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= EPS {
                break;
            }
        }
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        weights[i] = 2.0 / (pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    // pin the constant mode exactly: sum of weights = sqrt(pi)
    let total: f64 = weights.iter().sum();
    let scale = PI.sqrt() / total;
    for w in &mut weights {
        *w *= scale;
    }
    nodes.into_iter().zip(weights).collect()
}

fn gh64() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| hermite_rule(64))
}

fn gh96() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| hermite_rule(96))
}

/// Expectation of g under a standard normal via an n-point Hermite rule.
fn gauss_hermite_expectation<F: Fn(f64) -> f64>(g: &F, rule: &[(f64, f64)]) -> f64 {
    let inv_sqrt_pi = 1.0 / PI.sqrt();
    rule.iter()
        .map(|&(x, w)| w * g(SQRT_2 * x))
        .sum::<f64>()
        * inv_sqrt_pi
}

fn normal_pdf(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * PI).sqrt()
}

// ---------------------------------------------------------------------------
// Log-normal-weighted integration
// ---------------------------------------------------------------------------

/// Integral of f against the log-normal density of `dist` over (0, inf).
///
/// The substitution t = exp(mu + sigma*u) reduces the integral to a
/// standard-normal expectation, evaluated with a 64-point Gauss-Hermite rule
/// cross-checked against a 96-point rule; if the two disagree beyond the
/// tolerance, an adaptive Simpson pass over the truncated support decides.
///
/// A zero-variance distribution is a point mass and the integral collapses
/// to f(exp(mu)).
pub fn integrate_lognormal<F: Fn(f64) -> f64>(
    f: F,
    dist: &LognormalDist,
    spec: &QuadSpec,
) -> Result<f64> {
    if dist.sigma_sq() == 0.0 {
        return Ok(f(dist.mu().exp()));
    }
    let mu = dist.mu();
    let sigma = dist.sigma();
    let g = |u: f64| f((mu + sigma * u).exp());

    let coarse = gauss_hermite_expectation(&g, gh64());
    let fine = gauss_hermite_expectation(&g, gh96());
    if (coarse - fine).abs() <= spec.abs_tol.max(spec.rel_tol * fine.abs()) {
        return Ok(fine);
    }
    let s = spec.support_sigmas;
    adaptive_simpson(|u| normal_pdf(u) * g(u), -s, s, spec)
}

/// Integral of f against the log-normal density restricted to [t_lo, t_hi].
///
/// Bounds outside the truncated support exp(mu +/- support_sigmas * sigma)
/// are clipped to it; infinite bounds are allowed. For a point mass the
/// result is f(exp(mu)) if the atom lies inside the interval and 0 otherwise.
pub fn integrate_lognormal_range<F: Fn(f64) -> f64>(
    f: F,
    dist: &LognormalDist,
    t_lo: f64,
    t_hi: f64,
    spec: &QuadSpec,
) -> Result<f64> {
    if dist.sigma_sq() == 0.0 {
        let atom = dist.mu().exp();
        return Ok(if atom >= t_lo && atom <= t_hi {
            f(atom)
        } else {
            0.0
        });
    }
    let mu = dist.mu();
    let sigma = dist.sigma();
    let s = spec.support_sigmas;
    let u_lo = if t_lo <= 0.0 {
        -s
    } else {
        ((t_lo.ln() - mu) / sigma).max(-s)
    };
    let u_hi = if t_hi == f64::INFINITY {
        s
    } else {
        ((t_hi.ln() - mu) / sigma).min(s)
    };
    if u_lo >= u_hi {
        return Ok(0.0);
    }
    adaptive_simpson(
        |u| normal_pdf(u) * f((mu + sigma * u).exp()),
        u_lo,
        u_hi,
        spec,
    )
}

// ---------------------------------------------------------------------------
// Adaptive Simpson
// ---------------------------------------------------------------------------

/// Adaptive Simpson integration of f over [a, b].
///
/// The interval is primed with 16 equal panels so narrow features cannot be
/// skipped by an early coarse estimate; each panel is then refined by
/// Richardson-controlled bisection. Per-panel tolerances are floored at the
/// machine noise of the overall estimate, so panels whose contribution is
/// numerically invisible terminate instead of recursing into round-off.
/// Exceeding `max_subdivisions` levels yields a numerical error carrying the
/// last two panel estimates.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadSpec) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    const PANELS: usize = 16;
    let h = (b - a) / PANELS as f64;
    let mut cells = Vec::with_capacity(PANELS);
    let mut prev_x = a;
    let mut prev_f = f(a);
    let mut coarse_total = 0.0;
    for i in 1..=PANELS {
        let x = if i == PANELS { b } else { a + h * i as f64 };
        let m = 0.5 * (prev_x + x);
        let fm = f(m);
        let fx = f(x);
        let s = simpson_panel(prev_x, x, prev_f, fm, fx);
        coarse_total += s;
        cells.push((prev_x, x, prev_f, fm, fx, s));
        prev_x = x;
        prev_f = fx;
    }
    let tol = spec.abs_tol.max(spec.rel_tol * coarse_total.abs());
    let noise_floor = f64::EPSILON * (coarse_total.abs() + 1.0);
    let panel_tol = (tol / PANELS as f64).max(noise_floor);
    let mut total = 0.0;
    for (pa, pb, fa, fm, fb, s) in cells {
        total += simpson_recurse(
            &f,
            pa,
            pb,
            fa,
            fm,
            fb,
            s,
            panel_tol,
            noise_floor,
            spec.max_subdivisions,
        )?;
    }
    Ok(total)
}

fn simpson_panel(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    noise_floor: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_panel(a, m, fa, flm, fm);
    let right = simpson_panel(m, b, fm, frm, fb);
    let refined = left + right;
    if (refined - whole).abs() <= 15.0 * tol {
        return Ok(refined + (refined - whole) / 15.0);
    }
    if depth == 0 {
        return Err(Error::Numerical(format!(
            "adaptive Simpson failed to converge on [{a}, {b}]: last estimates {whole} and {refined}"
        )));
    }
    let half_tol = (0.5 * tol).max(noise_floor);
    Ok(simpson_recurse(f, a, m, fa, flm, fm, left, half_tol, noise_floor, depth - 1)?
        + simpson_recurse(f, m, b, fm, frm, fb, right, half_tol, noise_floor, depth - 1)?)
}

// ---------------------------------------------------------------------------
// Root finding
// ---------------------------------------------------------------------------

/// Bisection root of g on [lo, hi].
///
/// Requires a sign change over the bracket. Returns r with |g(r)| <= tol,
/// or the bracket midpoint once its width shrinks below the machine-scaled
/// minimum; gives up after 200 iterations.
pub fn bisect<F: Fn(f64) -> f64>(g: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let mut lo = lo;
    let mut hi = hi;
    let mut g_lo = g(lo);
    if g_lo.abs() <= tol {
        return Ok(lo);
    }
    let g_hi = g(hi);
    if g_hi.abs() <= tol {
        return Ok(hi);
    }
    if g_lo * g_hi > 0.0 {
        return Err(Error::Domain(format!(
            "bisection bracket [{lo}, {hi}] has no sign change: g(lo) = {g_lo}, g(hi) = {g_hi}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let g_mid = g(mid);
        if g_mid.abs() <= tol {
            return Ok(mid);
        }
        if (hi - lo).abs() <= f64::EPSILON * (lo.abs() + hi.abs() + 1.0) {
            return Ok(mid);
        }
        if g_mid * g_lo < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            g_lo = g_mid;
        }
    }
    Err(Error::Numerical(format!(
        "bisection did not reach |g| <= {tol} within 200 iterations; bracket [{lo}, {hi}]"
    )))
}

// ---------------------------------------------------------------------------
// Entropy
// ---------------------------------------------------------------------------

/// Binary entropy H(p) = -p log2 p - (1-p) log2 (1-p), with 0 log 0 = 0.
///
/// Arguments outside [0, 1] are a domain error.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "binary entropy argument {p} outside [0, 1]"
        )));
    }
    Ok(h2(p))
}

/// Unchecked binary entropy for internal callers that construct p in range.
/// Evaluated on min(p, 1-p) so both log terms stay well conditioned.
pub(crate) fn h2(p: f64) -> f64 {
    let p = if p > 0.5 { 1.0 - p } else { p };
    if p <= 0.0 {
        return 0.0;
    }
    // (1-p) log2(1-p) via ln_1p keeps precision for small p
    -(p * p.log2()) - (1.0 - p) * (-p).ln_1p() / LN_2
}
