//! Special functions: Γ, the subordination profile `F_ν`, and Hermite
//! functions, plus the parameter bundle shared across the crate.
//!
//! `F_ν(z) = ∫_0^∞ e^{-u - z²/(4u)} u^{ν-1} du` is the one-dimensional
//! profile through which the Poisson semigroup subordinates to the heat
//! semigroup: `F_ν(0) = Γ(ν)` and `F_ν` decays like `z^{ν-1/2} e^{-z}`.
//! It is computed here by direct quadrature — no Bessel machinery — so the
//! classical identity `F_ν(z) = 2 (z/2)^ν K_ν(z)` stays available as an
//! external cross-check instead of a dependency.

use crate::logscalar::LogScalar;
use crate::quad::{integrate_halfline, QuadError, QuadSpec, Substitution};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpecialError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("F_nu requires z ≥ 0, got {z}")]
    NegativeArgument { z: f64 },
    #[error("F_nu(0) requires ν > 0, got {nu}")]
    ZeroArgumentNeedsPositiveNu { nu: f64 },
    #[error("multi-index entries are capped at {max} per axis")]
    IndexTooLarge { max: usize },
    #[error("multi-index dimension {index_dim} does not match point dimension {point_dim}")]
    DimensionMismatch { index_dim: usize, point_dim: usize },
    #[error("quadrature failure: {0}")]
    Quad(#[from] QuadError),
}

/// Dimension `d`, potential shift `m`, and subordination order `ν` for the
/// operator `L = -Δ + |x|² + m` on ℝ^d.
///
/// Admissible range: `1 ≤ d ≤ 3`, `m ≥ -d`, `ν > 0`. The borderline
/// `m = -d` (ground-state energy shifted to zero) switches several
/// envelope formulas and is exposed via [`critical`](Self::critical).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Params {
    d: usize,
    m: f64,
    nu: f64,
}

impl Params {
    pub fn new(d: usize, m: f64, nu: f64) -> Result<Self, SpecialError> {
        if !(1..=3).contains(&d) {
            return Err(SpecialError::InvalidParams(format!(
                "dimension d must be 1, 2, or 3 (got {d})"
            )));
        }
        if !m.is_finite() || m < -(d as f64) {
            return Err(SpecialError::InvalidParams(format!(
                "shift m must be finite and ≥ -d = {} (got {m})",
                -(d as f64)
            )));
        }
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(SpecialError::InvalidParams(format!("order ν must be positive (got {nu})")));
        }
        Ok(Params { d, m, nu })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// True on the borderline `m = -d`, where the lowest eigenvalue is 0.
    pub fn critical(&self) -> bool {
        self.m == -(self.d as f64)
    }

    /// Eigenvalue of `L` on the Hermite function `h_k`: `2|k| + d + m`.
    pub fn eigenvalue(&self, k: &MultiIndex) -> f64 {
        2.0 * k.order() as f64 + self.d as f64 + self.m
    }
}

/// Per-axis Hermite degree cap; the scaled recurrence is stable well past
/// this, but operator sweeps have no business above it.
pub const MAX_HERMITE_DEGREE: usize = 512;

/// Multi-index `k ∈ ℕ^d` labelling the Hermite function `h_k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(entries: Vec<usize>) -> Result<Self, SpecialError> {
        if entries.is_empty() {
            return Err(SpecialError::InvalidParams("multi-index must have dimension ≥ 1".into()));
        }
        if entries.iter().any(|&k| k > MAX_HERMITE_DEGREE) {
            return Err(SpecialError::IndexTooLarge { max: MAX_HERMITE_DEGREE });
        }
        Ok(MultiIndex(entries))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    /// Order `|k| = k_1 + … + k_d`.
    pub fn order(&self) -> usize {
        self.0.iter().sum()
    }
}

// Lanczos approximation, g = 7 with 9 coefficients: relative error below
// 1e-13 across the positive axis, comfortably past the 12 significant
// digits the certificates require.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(x) for x > 0.
pub fn gamma_fn(x: f64) -> f64 {
    assert!(x > 0.0 && x.is_finite(), "gamma_fn requires finite x > 0");
    if x < 0.5 {
        // Reflection keeps the Lanczos sum in its accurate range.
        PI / ((PI * x).sin() * gamma_fn(1.0 - x))
    } else {
        let z = x - 1.0;
        let mut acc = LANCZOS_COEF[0];
        for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
            acc += c / (z + i as f64);
        }
        let t = z + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * acc
    }
}

/// ln Γ(x) for x > 0, stable for large x where Γ overflows.
pub fn ln_gamma(x: f64) -> f64 {
    assert!(x > 0.0 && x.is_finite(), "ln_gamma requires finite x > 0");
    if x < 0.5 {
        return PI.ln() - (PI * x).sin().ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Location of the integrand peak of `F_ν`: the positive root of
/// `u² + (1-ν)u - z²/4 = 0`.
fn f_nu_peak(nu: f64, z: f64) -> f64 {
    let b = nu - 1.0;
    0.5 * (b + (b * b + z * z).sqrt())
}

/// `F_ν(z) = ∫_0^∞ e^{-u - z²/(4u)} u^{ν-1} du` for `z ≥ 0`.
///
/// At `z = 0` this is `Γ(ν)` (returned directly, requiring `ν > 0`); for
/// `z > 0` the integral converges for every real `ν` and is evaluated with
/// a double-exponential endpoint map and a split at the integrand peak.
pub fn f_nu(nu: f64, z: f64, spec: &QuadSpec) -> Result<LogScalar, SpecialError> {
    if !(z >= 0.0) {
        return Err(SpecialError::NegativeArgument { z });
    }
    if z == 0.0 {
        if !(nu > 0.0) {
            return Err(SpecialError::ZeroArgumentNeedsPositiveNu { nu });
        }
        return Ok(LogScalar::from_log(ln_gamma(nu)));
    }
    let q = z * z / 4.0;
    let integrand = move |u: f64| {
        if !(u > 0.0) || !u.is_finite() {
            return LogScalar::zero();
        }
        LogScalar::from_log(-u - q / u + (nu - 1.0) * u.ln())
    };
    let peak = f_nu_peak(nu, z);
    let quad = QuadSpec {
        substitution: Substitution::DoubleExponential,
        split_points: vec![peak],
        ..spec.clone()
    };
    Ok(integrate_halfline(integrand, &quad)?.value)
}

/// `(F_ν, F_ν', F_ν'')` at `z > 0` via the shifted-order integral
/// identities `F_ν' = -(z/2) F_{ν-1}` and
/// `F_ν'' = (z²/4) F_{ν-2} - F_{ν-1}/2`.
pub fn f_nu_derivatives(
    nu: f64,
    z: f64,
    spec: &QuadSpec,
) -> Result<(LogScalar, LogScalar, LogScalar), SpecialError> {
    if !(z > 0.0) {
        return Err(SpecialError::NegativeArgument { z });
    }
    let f = f_nu(nu, z, spec)?;
    let fm1 = f_nu(nu - 1.0, z, spec)?;
    let fm2 = f_nu(nu - 2.0, z, spec)?;
    let half_z = LogScalar::from_real(0.5 * z);
    let d1 = -(half_z * fm1);
    let d2 = half_z * half_z * fm2 - LogScalar::from_real(0.5) * fm1;
    Ok((f, d1, d2))
}

/// Relative residual of the subordination ODE
/// `F'' + ((1-2ν)/z) F' - F = 0`, with derivatives from the shifted-order
/// integrals. Near machine level when the quadrature is healthy.
pub fn f_nu_ode_residual(nu: f64, z: f64, spec: &QuadSpec) -> Result<f64, SpecialError> {
    let (f, d1, d2) = f_nu_derivatives(nu, z, spec)?;
    let coeff = LogScalar::from_real((1.0 - 2.0 * nu) / z);
    let residual = (d2 + coeff * d1 - f).abs();
    Ok((residual / f.abs()).to_real())
}

/// Same residual with central finite differences in place of the shifted
/// integrals — an independent route for cross-checking. Requires z > 2h.
pub fn f_nu_fd_residual(nu: f64, z: f64, h: f64, spec: &QuadSpec) -> Result<f64, SpecialError> {
    if !(z > 2.0 * h && h > 0.0) {
        return Err(SpecialError::InvalidParams(format!(
            "finite differences need z > 2h > 0 (z = {z}, h = {h})"
        )));
    }
    let f = f_nu(nu, z, spec)?;
    let fp = f_nu(nu, z + h, spec)?;
    let fm = f_nu(nu, z - h, spec)?;
    let two_h = LogScalar::from_real(2.0 * h);
    let h2 = LogScalar::from_real(h * h);
    let d1 = (fp - fm) / two_h;
    let d2 = (fp - LogScalar::from_real(2.0) * f + fm) / h2;
    let coeff = LogScalar::from_real((1.0 - 2.0 * nu) / z);
    let residual = (d2 + coeff * d1 - f).abs();
    Ok((residual / f.abs()).to_real())
}

/// One-dimensional L²-normalized Hermite function `h_k(x)`, Gaussian
/// included: `h_0 = π^{-1/4} e^{-x²/2}`,
/// `h_{k+1} = x √(2/(k+1)) h_k - √(k/(k+1)) h_{k-1}`.
///
/// The recurrence runs on a mantissa/exponent pair and renormalizes
/// whenever the mantissa leaves `[1e-140, 1e140]`, so the value is reliable
/// for any `k` and `x` — including the deep tail where `h_k` itself
/// underflows doubles.
pub fn hermite_fn_1d(k: usize, x: f64) -> LogScalar {
    let mut exponent = -0.5 * x * x - 0.25 * PI.ln();
    let mut prev = 0.0f64;
    let mut cur = 1.0f64;
    for j in 0..k {
        let jf = j as f64;
        let next = x * (2.0 / (jf + 1.0)).sqrt() * cur - (jf / (jf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        let mag = cur.abs().max(prev.abs());
        if mag > 1e140 || (mag > 0.0 && mag < 1e-140) {
            exponent += mag.ln();
            cur /= mag;
            prev /= mag;
        }
    }
    if cur == 0.0 {
        return LogScalar::zero();
    }
    LogScalar::from_sign_log(if cur > 0.0 { 1 } else { -1 }, exponent + cur.abs().ln())
}

/// All of `h_0(x), …, h_{max_k}(x)` from one pass of the recurrence —
/// what series summation wants instead of `max_k` separate evaluations.
pub fn hermite_sweep_1d(max_k: usize, x: f64) -> Vec<LogScalar> {
    let mut out = Vec::with_capacity(max_k + 1);
    let mut exponent = -0.5 * x * x - 0.25 * PI.ln();
    let mut prev = 0.0f64;
    let mut cur = 1.0f64;
    let snapshot = |c: f64, e: f64| {
        if c == 0.0 {
            LogScalar::zero()
        } else {
            LogScalar::from_sign_log(if c > 0.0 { 1 } else { -1 }, e + c.abs().ln())
        }
    };
    out.push(snapshot(cur, exponent));
    for j in 0..max_k {
        let jf = j as f64;
        let next = x * (2.0 / (jf + 1.0)).sqrt() * cur - (jf / (jf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        let mag = cur.abs().max(prev.abs());
        if mag > 1e140 || (mag > 0.0 && mag < 1e-140) {
            exponent += mag.ln();
            cur /= mag;
            prev /= mag;
        }
        out.push(snapshot(cur, exponent));
    }
    out
}

/// Product Hermite function `h_k(x) = Π_i h_{k_i}(x_i)`.
pub fn hermite_fn(k: &MultiIndex, x: &[f64]) -> Result<LogScalar, SpecialError> {
    if k.dim() != x.len() {
        return Err(SpecialError::DimensionMismatch { index_dim: k.dim(), point_dim: x.len() });
    }
    let mut out = LogScalar::one();
    for (&ki, &xi) in k.entries().iter().zip(x) {
        out = out * hermite_fn_1d(ki, xi);
    }
    Ok(out)
}
