//! The heat (Mehler) kernel of `L = -Δ + |x|² + m` and the associated
//! operator `e^{-vL}`.
//!
//! The kernel is available in three time parametrizations, each evaluated
//! natively so the caller's coordinate is the numerically faithful one:
//!
//! * `v` — the semigroup time itself,
//! * `s = tanh v ∈ (0, 1)` — the coordinate in which the exponent splits
//!   into `s|x+y|²` and `|x-y|²/s` halves,
//! * `r = e^{-2v} ∈ (0, 1)` — the coordinate with the Gaussian-measure
//!   (Ornstein–Uhlenbeck-like) form.
//!
//! All three agree to machine accuracy; the unit tests pin that down. Times
//! below `v = 1e-6` are rejected: the kernel concentrates on a scale the
//! grid/quadrature layers cannot resolve, and every identity worth checking
//! is already sharp at `v = 1e-6`.

use crate::grid::{GridError, ScalarField};
use crate::logscalar::LogScalar;
use crate::quad::{integrate_interval, QuadError, QuadSpec};
use crate::special::Params;
use std::cell::Cell;
use std::f64::consts::PI;
use thiserror::Error;

/// Smallest admissible semigroup time.
pub const MIN_TIME: f64 = 1e-6;

/// Time coordinate for the heat semigroup. Each variant is evaluated in
/// its own parametrization; see the module docs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeVar {
    /// Semigroup time `v > 0`.
    V(f64),
    /// `s = tanh v ∈ (0, 1)`.
    S(f64),
    /// `r = e^{-2v} ∈ (0, 1)`.
    R(f64),
}

impl TimeVar {
    /// The equivalent semigroup time.
    pub fn to_v(self) -> f64 {
        match self {
            TimeVar::V(v) => v,
            TimeVar::S(s) => s.atanh(),
            TimeVar::R(r) => -0.5 * r.ln(),
        }
    }

    fn validate(self) -> Result<(), HeatError> {
        let ok = match self {
            TimeVar::V(v) => v.is_finite() && v >= MIN_TIME,
            TimeVar::S(s) => s > 0.0 && s < 1.0 && s.atanh() >= MIN_TIME,
            TimeVar::R(r) => r > 0.0 && r < 1.0 && -0.5 * r.ln() >= MIN_TIME,
        };
        if ok {
            Ok(())
        } else {
            Err(HeatError::InvalidTime { time: self })
        }
    }
}

#[derive(Debug, Error)]
pub enum HeatError {
    #[error("time {time:?} is outside the admissible range (v ≥ {MIN_TIME})")]
    InvalidTime { time: TimeVar },
    #[error("point dimension {got} does not match d = {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(
        "integrand grows like exp({growth:.3}·|y|²) but the kernel only decays like exp(-{decay:.3}·|y|²)"
    )]
    DivergentIntegrand { growth: f64, decay: f64 },
    #[error(
        "tail bound not met: at radius {radius:.1} the tail is exp({tail_log:.1}) against target exp({target_log:.1})"
    )]
    TailBound { radius: f64, tail_log: f64, target_log: f64 },
    #[error("field evaluation failed: {0}")]
    Field(#[from] GridError),
    #[error("quadrature failure: {0}")]
    Quad(#[from] QuadError),
}

/// `e^{-vL}(x, y)` evaluated natively in the given time coordinate.
pub fn mehler_kernel(
    p: &Params,
    time: TimeVar,
    x: &[f64],
    y: &[f64],
) -> Result<LogScalar, HeatError> {
    time.validate()?;
    let d = p.d();
    if x.len() != d {
        return Err(HeatError::DimensionMismatch { expected: d, got: x.len() });
    }
    if y.len() != d {
        return Err(HeatError::DimensionMismatch { expected: d, got: y.len() });
    }
    let df = d as f64;
    let xi: f64 = x.iter().map(|a| a * a).sum::<f64>() + y.iter().map(|a| a * a).sum::<f64>();
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();

    let log_kernel = match time {
        TimeVar::V(v) => {
            // coth/csch expressed through q = e^{-4v}: stable at both ends.
            // The v-linear parts of the prefactor and the spectral shift are
            // combined into one product: v is unbounded here, and at the
            // borderline shift m = -d the coefficient vanishes exactly, so
            // summing ±(d·v)-sized intermediates would swallow every O(1)
            // term long before they cancel.
            let q = (-4.0 * v).exp();
            let one_minus_q = -(-4.0 * v).exp_m1();
            let log_pref = -0.5 * df * (PI.ln() + one_minus_q.ln());
            let linear = -(df + p.m()) * v;
            let exponent =
                -0.5 * xi - xi * q / one_minus_q + 2.0 * dot * (-2.0 * v).exp() / one_minus_q;
            log_pref + linear + exponent
        }
        TimeVar::S(s) => {
            let sum_sq: f64 = x.iter().zip(y).map(|(a, b)| (a + b) * (a + b)).sum();
            let diff_sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            let log_pref = -0.5 * df * ((4.0 * PI * s).ln() - (1.0 - s).ln() - s.ln_1p());
            let exponent = -0.25 * (s * sum_sq + diff_sq / s);
            // e^{-vm} = ((1-s)/(1+s))^{m/2}.
            log_pref + exponent + 0.5 * p.m() * ((1.0 - s).ln() - s.ln_1p())
        }
        TimeVar::R(r) => {
            let log_pref = -0.5 * df * (PI.ln() + (-r).ln_1p() + r.ln_1p() - r.ln());
            let exponent = -((1.0 + r * r) * xi - 4.0 * r * dot) / (2.0 * (1.0 - r) * (1.0 + r));
            log_pref + exponent + 0.5 * p.m() * r.ln()
        }
    };
    Ok(LogScalar::from_log(log_kernel))
}

/// Controls for [`heat_apply`]'s domain truncation.
#[derive(Clone, Debug)]
pub struct ApplyOpts {
    /// Fix the integration box half-width instead of deriving it from the
    /// integrand's growth probe.
    pub box_radius: Option<f64>,
    /// Target for the analytic tail bound, relative to the integrand peak.
    pub tail_rel_tol: f64,
    /// Hard cap on the box half-width.
    pub max_radius: f64,
}

impl Default for ApplyOpts {
    fn default() -> Self {
        ApplyOpts { box_radius: None, tail_rel_tol: 1e-12, max_radius: 64.0 }
    }
}

/// Result of applying an integral operator at one point.
#[derive(Clone, Copy, Debug)]
pub struct ApplyResult {
    pub value: LogScalar,
    /// ln of the estimated absolute error (quadrature plus tail bound).
    pub error_log: f64,
    /// Number of kernel·field evaluations.
    pub evaluations: usize,
    /// Half-width of the integration box that was used.
    pub box_radius: f64,
}

/// Quadratic/linear growth fit `ln|f(y)| ≲ β|y|² + γ|y| + c` from probe
/// rays, used to budget the truncation radius.
pub(crate) struct GrowthFit {
    pub beta: f64,
    pub gamma: f64,
    pub offset: f64,
}

pub(crate) fn probe_growth(f: &ScalarField, d: usize, r_max: f64) -> Result<GrowthFit, GridError> {
    // Probe along ± axes and the main diagonals at geometric radii; per
    // radius, keep the max over directions so isolated zeros of f (Hermite
    // nodal sets and the like) do not masquerade as steep growth.
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..d {
        for sgn in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[i] = sgn;
            dirs.push(e);
        }
    }
    let diag = (d as f64).sqrt().recip();
    dirs.push(vec![diag; d]);
    dirs.push(vec![-diag; d]);

    let radii: Vec<f64> =
        (0..).map(|k| 2f64.powi(k)).take_while(|&r| r <= r_max).collect();
    let mut envelope: Vec<(f64, f64)> = Vec::new();
    for &r in &radii {
        let mut best = f64::NEG_INFINITY;
        for dir in &dirs {
            let y: Vec<f64> = dir.iter().map(|&c| c * r).collect();
            let v = f.eval(&y)?;
            if !v.is_zero() && v.logmag().is_finite() {
                best = best.max(v.logmag());
            }
        }
        if best > f64::NEG_INFINITY {
            envelope.push((r, best));
        }
    }

    // Quadratic rate from far-field chords of the envelope (inner radii
    // are skipped: there a benign linear term — an off-center Gaussian,
    // say — masquerades as quadratic growth), floored at zero so decay
    // never shrinks the integration box below its default. Growth that
    // only sets in beyond `r_max` is invisible to any finite probe and
    // out of scope here.
    let far = envelope.last().map(|&(r, _)| r / 8.0).unwrap_or(0.0);
    let mut beta: f64 = 0.0;
    for i in 0..envelope.len() {
        for j in i + 1..envelope.len() {
            let (r1, g1) = envelope[i];
            let (r2, g2) = envelope[j];
            if r1 >= far {
                beta = beta.max((g2 - g1) / (r2 * r2 - r1 * r1));
            }
        }
    }
    // Residual linear rate after removing β r².
    let resid: Vec<(f64, f64)> = envelope.iter().map(|&(r, g)| (r, g - beta * r * r)).collect();
    let mut gamma: f64 = 0.0;
    for i in 0..resid.len() {
        for j in i + 1..resid.len() {
            let (r1, h1) = resid[i];
            let (r2, h2) = resid[j];
            gamma = gamma.max((h2 - h1) / (r2 - r1));
        }
    }
    let mut offset = f64::NEG_INFINITY;
    if let Ok(v0) = f.eval(&vec![0.0; d]) {
        if v0.logmag().is_finite() {
            offset = v0.logmag();
        }
    }
    for &(r, h) in &resid {
        offset = offset.max(h - gamma * r);
    }
    Ok(GrowthFit { beta, gamma, offset })
}

/// `(e^{-vL} f)(x) = ∫_{ℝ^d} e^{-vL}(x, y) f(y) dy` by nested adaptive
/// quadrature over a truncated box, with an analytic bound on the
/// discarded Gaussian tail folded into the reported error.
pub fn heat_apply(
    p: &Params,
    time: TimeVar,
    f: &ScalarField,
    x: &[f64],
    spec: &QuadSpec,
    opts: &ApplyOpts,
) -> Result<ApplyResult, HeatError> {
    time.validate()?;
    let d = p.d();
    if x.len() != d {
        return Err(HeatError::DimensionMismatch { expected: d, got: x.len() });
    }
    let v = time.to_v();
    // Per-axis Gaussian decay rate of the kernel in |y|²: (s + 1/s)/4.
    let s = v.tanh();
    let decay = 0.25 * (s + 1.0 / s);
    let x_norm = x.iter().fold(0.0f64, |m, &c| m.max(c.abs()));

    let fit = probe_growth(f, d, opts.max_radius).map_err(HeatError::Field)?;
    if fit.beta >= decay - 1e-3 {
        return Err(HeatError::DivergentIntegrand { growth: fit.beta, decay });
    }

    // Peak-scale estimate for relative tail targeting: integrand at y = x.
    let peak_log = {
        let k = mehler_kernel(p, time, x, x)?;
        let fv = f.eval(x).map_err(HeatError::Field)?;
        if fv.is_zero() { k.logmag() + fit.offset } else { k.logmag() + fv.logmag() }
    };

    // ln of the integrand bound at distance R from the origin: kernel decay
    // beaten against the growth fit, with the kernel's linear cross term.
    let margin = decay - fit.beta;
    let tail_log_at = |radius: f64| -> f64 {
        let lin = fit.gamma + 0.5 * x_norm; // kernel cross term ≤ |x|·|y|/(2 sinh 2v) ≤ ...
        let surface = (d as f64) * (2.0 * radius).ln().max(0.0) + (2.0 * radius).ln();
        -margin * radius * radius + lin * radius + fit.offset + surface
    };
    let target_log = peak_log + opts.tail_rel_tol.ln();
    let radius = match opts.box_radius {
        Some(r) => r,
        None => {
            let mut r = (2.0 * x_norm + 6.0).max(8.0);
            while tail_log_at(r) > target_log && r < opts.max_radius {
                r *= 1.25;
            }
            r.min(opts.max_radius)
        }
    };
    let tail_log = tail_log_at(radius);
    if tail_log > target_log {
        return Err(HeatError::TailBound { radius, tail_log, target_log });
    }

    // Nested adaptive quadrature, innermost axis last. Inner integrals run
    // at a modestly tighter relative tolerance.
    let evals = Cell::new(0usize);
    let value = nested_apply(
        &|y: &[f64]| -> Result<LogScalar, HeatError> {
            evals.set(evals.get() + 1);
            let k = mehler_kernel(p, time, x, y)?;
            let fv = f.eval(y).map_err(HeatError::Field)?;
            Ok(k * fv)
        },
        x,
        radius,
        spec,
        &mut Vec::with_capacity(d),
    )?;

    let err_quad = value.value.logmag() + spec.rel_tol.ln();
    Ok(ApplyResult {
        value: value.value,
        error_log: crate::quad::log_add(err_quad.max(value.error_log), tail_log),
        evaluations: evals.get(),
        box_radius: radius,
    })
}

pub(crate) struct NestedOut {
    pub(crate) value: LogScalar,
    pub(crate) error_log: f64,
}

/// Nested d-dimensional adaptive quadrature of `f` over the box
/// `Π [center_i - radius, center_i + radius]`, shared by the heat and
/// Poisson operators.
pub(crate) fn nested_apply<F, E>(
    f: &F,
    center: &[f64],
    radius: f64,
    spec: &QuadSpec,
    prefix: &mut Vec<f64>,
) -> Result<NestedOut, E>
where
    F: Fn(&[f64]) -> Result<LogScalar, E>,
    E: From<QuadError>,
{
    let axis = prefix.len();
    let d = center.len();
    let (a, b) = (center[axis] - radius, center[axis] + radius);
    // Inner axes tolerate a bit more; their errors average out across the
    // outer nodes.
    let axis_spec = QuadSpec {
        rel_tol: if axis == 0 { spec.rel_tol } else { (spec.rel_tol * 10.0).min(1e-4) },
        split_points: vec![center[axis]],
        ..spec.clone()
    };
    let inner_err = Cell::new(f64::NEG_INFINITY);
    let result = if axis + 1 == d {
        integrate_interval(
            |t| {
                prefix_eval(f, prefix, t).unwrap_or_else(|_| LogScalar::from_real(f64::NAN))
            },
            a,
            b,
            &axis_spec,
        )?
    } else {
        integrate_interval(
            |t| {
                let mut p2 = prefix.clone();
                p2.push(t);
                match nested_apply(f, center, radius, spec, &mut p2) {
                    Ok(out) => {
                        inner_err.set(inner_err.get().max(out.error_log));
                        out.value
                    }
                    Err(_) => LogScalar::from_real(f64::NAN),
                }
            },
            a,
            b,
            &axis_spec,
        )?
    };
    Ok(NestedOut {
        value: result.value,
        error_log: crate::quad::log_add(
            result.error_log,
            inner_err.get() + (2.0 * radius).ln(),
        ),
    })
}

fn prefix_eval<F, E>(f: &F, prefix: &[f64], t: f64) -> Result<LogScalar, E>
where
    F: Fn(&[f64]) -> Result<LogScalar, E>,
{
    let mut y = Vec::with_capacity(prefix.len() + 1);
    y.extend_from_slice(prefix);
    y.push(t);
    f(&y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{hermite_fn_1d, MultiIndex};
    use approx::assert_relative_eq;

    fn params(d: usize, m: f64) -> Params {
        Params::new(d, m, 0.5).unwrap()
    }

    #[test]
    fn parametrizations_agree() {
        let p = params(2, 1.3);
        let x = [0.7, -1.2];
        let y = [-0.4, 2.1];
        for &v in &[1e-5, 0.01, 0.3, 1.0, 5.0, 20.0] {
            let kv = mehler_kernel(&p, TimeVar::V(v), &x, &y).unwrap();
            let kr = mehler_kernel(&p, TimeVar::R((-2.0 * v).exp()), &x, &y).unwrap();
            assert_relative_eq!(kv.logmag(), kr.logmag(), epsilon = 1e-11 * (1.0 + kv.logmag().abs()));
            // tanh saturates to 1.0 exactly near v ≈ 19; the s-coordinate
            // only represents times below that.
            if v < 18.0 {
                let ks = mehler_kernel(&p, TimeVar::S(v.tanh()), &x, &y).unwrap();
                assert_relative_eq!(kv.logmag(), ks.logmag(), epsilon = 1e-11 * (1.0 + kv.logmag().abs()));
            }
        }
    }

    #[test]
    fn kernel_is_symmetric_and_positive() {
        let p = params(3, -1.0);
        let x = [0.3, 1.1, -0.6];
        let y = [2.0, -0.2, 0.9];
        let a = mehler_kernel(&p, TimeVar::V(0.7), &x, &y).unwrap();
        let b = mehler_kernel(&p, TimeVar::V(0.7), &y, &x).unwrap();
        assert_eq!(a.sign(), 1);
        assert_relative_eq!(a.logmag(), b.logmag(), epsilon = 1e-13);
    }

    #[test]
    fn small_time_approaches_gauss_weierstrass() {
        let p = params(1, 0.0);
        let v = 1e-5;
        let (x, y) = ([0.4], [0.9]);
        let k = mehler_kernel(&p, TimeVar::V(v), &x, &y).unwrap();
        let heat = -0.25 * (x[0] - y[0]).powi(2) / v - 0.5 * (4.0 * PI * v).ln();
        assert_relative_eq!(k.logmag(), heat, epsilon = 1e-3 * heat.abs());
    }

    #[test]
    fn large_time_collapses_to_ground_state() {
        // e^{-vL}(x,y) → e^{-v(d+m)} h_0(x) h_0(y) as v → ∞.
        let p = params(1, 0.25);
        let v = 25.0;
        let (x, y) = ([0.8], [-0.3]);
        let k = mehler_kernel(&p, TimeVar::V(v), &x, &y).unwrap();
        let want = -v * (1.0 + p.m())
            + hermite_fn_1d(0, x[0]).logmag()
            + hermite_fn_1d(0, y[0]).logmag();
        assert_relative_eq!(k.logmag(), want, epsilon = 1e-10 * want.abs());
    }

    #[test]
    fn rejects_out_of_range_times() {
        let p = params(1, 0.0);
        for t in [
            TimeVar::V(1e-7),
            TimeVar::V(-1.0),
            TimeVar::S(0.0),
            TimeVar::S(1.0),
            TimeVar::S(1e-8),
            TimeVar::R(0.0),
            TimeVar::R(1.0),
        ] {
            assert!(matches!(
                mehler_kernel(&p, t, &[0.0], &[0.0]),
                Err(HeatError::InvalidTime { .. })
            ));
        }
    }

    #[test]
    fn semigroup_property_on_the_line() {
        let p = params(1, -0.7);
        let (v1, v2) = (0.35, 0.6);
        let (x, y) = ([0.9], [-0.5]);
        let spec = QuadSpec::default();
        let conv = integrate_interval(
            |z| {
                let a = mehler_kernel(&p, TimeVar::V(v1), &x, &[z]).unwrap();
                let b = mehler_kernel(&p, TimeVar::V(v2), &[z], &y).unwrap();
                a * b
            },
            -14.0,
            14.0,
            &spec,
        )
        .unwrap();
        let direct = mehler_kernel(&p, TimeVar::V(v1 + v2), &x, &y).unwrap();
        assert_relative_eq!(conv.value.to_real(), direct.to_real(), max_relative = 1e-9);
    }

    #[test]
    fn hermite_functions_are_eigenfunctions_1d() {
        let p = params(1, 2.0);
        let v = 0.45;
        let spec = QuadSpec::default();
        for k in [0usize, 3] {
            for &x in &[0.25, -1.4] {
                let applied = integrate_interval(
                    |y| mehler_kernel(&p, TimeVar::V(v), &[x], &[y]).unwrap() * hermite_fn_1d(k, y),
                    -16.0,
                    16.0,
                    &spec,
                )
                .unwrap();
                let lambda = p.eigenvalue(&MultiIndex::new(vec![k]).unwrap());
                let want = hermite_fn_1d(k, x) * LogScalar::from_log(-v * lambda);
                assert_relative_eq!(applied.value.to_real(), want.to_real(), max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn heat_apply_matches_eigen_decay_2d() {
        let p = params(2, -1.0);
        let v = 0.6;
        let k = MultiIndex::new(vec![1, 2]).unwrap();
        let f = ScalarField::from_fn(move |y| {
            hermite_fn_1d(1, y[0]) * hermite_fn_1d(2, y[1])
        });
        let x = [0.5, -0.8];
        let spec = QuadSpec::with_rel_tol(1e-8);
        let out = heat_apply(&p, TimeVar::V(v), &f, &x, &spec, &ApplyOpts::default()).unwrap();
        let lambda = p.eigenvalue(&k);
        let want = hermite_fn_1d(1, x[0]) * hermite_fn_1d(2, x[1]) * LogScalar::from_log(-v * lambda);
        assert_relative_eq!(out.value.to_real(), want.to_real(), max_relative = 1e-6);
        assert!(out.error_log < want.logmag() - 5.0);
    }

    #[test]
    fn ground_state_is_conserved_at_critical_shift() {
        // m = -d puts the bottom eigenvalue at zero: e^{-vL} h_0 = h_0.
        let p = params(1, -1.0);
        let f = ScalarField::from_fn(|y| hermite_fn_1d(0, y[0]));
        let spec = QuadSpec::with_rel_tol(1e-9);
        let out =
            heat_apply(&p, TimeVar::V(2.0), &f, &[1.3], &spec, &ApplyOpts::default()).unwrap();
        let want = hermite_fn_1d(0, 1.3);
        assert_relative_eq!(out.value.to_real(), want.to_real(), max_relative = 1e-7);
    }

    #[test]
    fn divergent_growth_is_rejected() {
        let p = params(1, 0.0);
        let f = ScalarField::from_fn(|y| LogScalar::from_log(y[0] * y[0]));
        let err = heat_apply(
            &p,
            TimeVar::V(1.0),
            &f,
            &[0.0],
            &QuadSpec::default(),
            &ApplyOpts::default(),
        )
        .unwrap_err();
        assert!(matches!(err, HeatError::DivergentIntegrand { .. }));
    }

    #[test]
    fn marginal_growth_integrates_when_time_is_small() {
        // f = e^{|y|²/2}: grows at rate 1/2, kernel decays at (s + 1/s)/4
        // > 1/2 for every finite v, with margin ~ (1-s)²/(4s).
        let p = params(1, 0.0);
        let f = ScalarField::from_fn(|y| LogScalar::from_log(0.5 * y[0] * y[0]));
        let spec = QuadSpec::with_rel_tol(1e-8);
        let out = heat_apply(&p, TimeVar::V(0.2), &f, &[0.4], &spec, &ApplyOpts::default())
            .unwrap();
        // Closed form: ∫ G_v(x,y) e^{y²/2} dy = e^{-vm} e^{x²/2} · e^{-v·0}…
        // For m = 0, L(e^{|x|²/2}·1)… check instead against a direct fine
        // quadrature on a wide box.
        let wide = integrate_interval(
            |y| {
                mehler_kernel(&p, TimeVar::V(0.2), &[0.4], &[y]).unwrap()
                    * LogScalar::from_log(0.5 * y * y)
            },
            -60.0,
            60.0,
            &QuadSpec::with_rel_tol(1e-11),
        )
        .unwrap();
        assert_relative_eq!(out.value.to_real(), wide.value.to_real(), max_relative = 1e-6);
    }
}
