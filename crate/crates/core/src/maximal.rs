//! The local maximal operator and the subordinated semigroup's maximal
//! function.
//!
//! `mloc` is the centered Hardy–Littlewood maximal operator with the
//! integrand cut off to the region `|y| ≤ 3 max(|x|, 1)`:
//!
//! ```text
//! M f(x) = sup_r |B_r|⁻¹ ∫_{B_r(x)} |f(y)| χ_{|y| ≤ 3max(|x|,1)} dy .
//! ```
//!
//! The sup over the continuum of radii is discretized by a geometric
//! ladder; averages are taken on the sample grid with the discrete ball
//! measure in the denominator, so the implementation agrees exactly with
//! an exhaustive enumeration over node-entry radii on the same grid and
//! the remaining error is pure ladder granularity.

use crate::estimates::{phi, EstimatesError, RefinedFit};
use crate::grid::{lp_norm, Grid, GridError, ScalarField};
use crate::logscalar::LogScalar;
use crate::poisson::{poisson_apply, ApplyOpts, PoissonError, MIN_TIME};
use crate::quad::QuadSpec;
use crate::special::Params;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MaximalError {
    #[error("field evaluation failed: {0}")]
    Field(#[from] GridError),
    #[error("semigroup application failed: {0}")]
    Poisson(#[from] PoissonError),
    #[error("estimate fitting failed: {0}")]
    Estimates(#[from] EstimatesError),
    #[error("bad configuration: {0}")]
    BadConfig(String),
}

/// Discretization ladders for the two suprema.
#[derive(Debug, Clone)]
pub struct MaximalSpec {
    /// Increasing ball radii for `mloc`.
    pub radius_ladder: Vec<f64>,
    /// Increasing times for the semigroup maximal function.
    pub t_ladder: Vec<f64>,
}

impl MaximalSpec {
    /// Radius ladder from grid spacing to twice the grid diameter, with at
    /// least 64 rungs and consecutive ratio at most 1.3. Time ladder nested
    /// under `a` (see [`MaximalSpec::t_ladder`]).
    pub fn for_grid(grid: &Grid, a: f64) -> Self {
        MaximalSpec {
            radius_ladder: Self::radii(grid.min_spacing(), 2.0 * grid.diameter()),
            t_ladder: Self::t_ladder(a),
        }
    }

    /// Geometric ladder spanning `[lo, hi]`: at least 64 rungs, consecutive
    /// ratio at most 1.3 (finer when 64 rungs already overshoot).
    pub fn radii(lo: f64, hi: f64) -> Vec<f64> {
        assert!(lo > 0.0 && hi > lo);
        let span = hi / lo;
        let need = (span.ln() / 1.3f64.ln()).ceil() as usize + 1;
        let n = need.max(64);
        let ratio = span.powf(1.0 / (n - 1) as f64);
        (0..n).map(|i| lo * ratio.powi(i as i32)).collect()
    }

    /// Quarter-octave times `MIN_TIME · 2^{j/4}` strictly below `a`.
    ///
    /// Drawing every ladder from one fixed global grid makes the ladders
    /// nested: `a₁ ≤ a₂` gives a sub-ladder, so the discretized maximal
    /// function is exactly monotone in `a`.
    pub fn t_ladder(a: f64) -> Vec<f64> {
        assert!(a > MIN_TIME, "need a > {MIN_TIME}");
        let mut out = Vec::new();
        let mut j = 0;
        loop {
            let t = MIN_TIME * 2f64.powf(j as f64 / 4.0);
            if t >= a {
                break;
            }
            out.push(t);
            j += 1;
        }
        out
    }

    /// Largest consecutive ratio of the radius ladder.
    pub fn ladder_ratio(&self) -> f64 {
        self.radius_ladder
            .windows(2)
            .map(|w| w[1] / w[0])
            .fold(1.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MlocResult {
    pub value: f64,
    /// Radius attaining the sup; 0 when every ball was empty.
    pub best_radius: f64,
    /// True when no ladder ball contained any grid node.
    pub empty: bool,
}

/// `|f|` sampled on a grid, ready for repeated maximal-function queries.
///
/// A query is a single pass over the nodes: each node is binned into the
/// ladder shell its distance falls in, masked and unmasked mass accumulate
/// per shell, and a prefix sweep yields every ball average at once.
pub struct MlocEvaluator {
    points: Vec<(Vec<f64>, f64, f64)>, // (node, |f|·measure, measure)
    norms: Vec<f64>,                   // |node| (for the cutoff)
}

impl MlocEvaluator {
    pub fn new(f: &ScalarField, grid: &Grid) -> Result<Self, MaximalError> {
        let mut points = Vec::with_capacity(grid.len());
        let mut norms = Vec::with_capacity(grid.len());
        for (flat, y) in grid.nodes() {
            let v = f.eval(&y)?;
            if v.is_nan() {
                return Err(MaximalError::Field(GridError::NanValue { point: y }));
            }
            let measure = grid.node_measure(flat);
            let fv = v.abs().to_real();
            if !fv.is_finite() {
                return Err(MaximalError::BadConfig(format!(
                    "|f| overflows f64 at {y:?}; maximal averages need finite samples"
                )));
            }
            norms.push(y.iter().map(|c| c * c).sum::<f64>().sqrt());
            points.push((y, fv * measure, measure));
        }
        Ok(MlocEvaluator { points, norms })
    }

    /// The local maximal function at `x` over the given radius ladder.
    pub fn eval(&self, x: &[f64], ladder: &[f64]) -> MlocResult {
        let xr = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        self.eval_with_cut(x, ladder, 3.0 * xr.max(1.0))
    }

    /// The uncut (global Hardy–Littlewood) variant, for comparison tests.
    pub fn eval_global(&self, x: &[f64], ladder: &[f64]) -> MlocResult {
        self.eval_with_cut(x, ladder, f64::INFINITY)
    }

    fn eval_with_cut(&self, x: &[f64], ladder: &[f64], cut: f64) -> MlocResult {
        let n_shells = ladder.len();
        let mut masked = vec![0.0f64; n_shells];
        let mut mass = vec![0.0f64; n_shells];
        for ((y, fm, m), yr) in self.points.iter().zip(&self.norms) {
            let dist = x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            // First ladder radius whose ball contains the node.
            let shell = ladder.partition_point(|&r| r < dist);
            if shell == n_shells {
                continue;
            }
            mass[shell] += m;
            if *yr <= cut {
                masked[shell] += fm;
            }
        }
        let mut best = f64::NEG_INFINITY;
        let mut best_radius = 0.0;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n_shells {
            num += masked[i];
            den += mass[i];
            if den > 0.0 {
                let avg = num / den;
                if avg > best {
                    best = avg;
                    best_radius = ladder[i];
                }
            }
        }
        if den == 0.0 {
            MlocResult { value: 0.0, best_radius: 0.0, empty: true }
        } else {
            MlocResult { value: best, best_radius, empty: false }
        }
    }
}

/// One-shot local maximal function; build an [`MlocEvaluator`] instead when
/// querying many points against the same field.
pub fn mloc(
    f: &ScalarField,
    grid: &Grid,
    x: &[f64],
    spec: &MaximalSpec,
) -> Result<MlocResult, MaximalError> {
    Ok(MlocEvaluator::new(f, grid)?.eval(x, &spec.radius_ladder))
}

pub(crate) fn unit_ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => unreachable!("dimensions above 3 are rejected at Params construction"),
    }
}

#[derive(Debug, Clone)]
pub struct MlocLowerReport {
    /// `|B₁|⁻¹ ∫_{B₁(0)} f`.
    pub c_f: f64,
    /// Discretization allowance: ladder granularity plus grid-boundary slop.
    pub eps_disc: f64,
    /// Smallest over the probe points of `mloc(f,x) / (c_f (1+|x|)^{-d})`.
    pub worst_margin: f64,
    pub worst_x: Vec<f64>,
    pub pass: bool,
}

/// Certificate for the lower bound `mloc(f)(x) ≥ c_f (1+|x|)^{-d}`: taking
/// `r = 1 + |x|` puts the unit ball inside `B_r(x)` (and inside the cutoff
/// region), so the average is at least `c_f |B₁|/|B_r|`. Discretization
/// costs one ladder rung in `r` and the grid's quadrature error, which is
/// what `eps_disc` budgets for.
pub fn check_mloc_lower(
    f: &ScalarField,
    grid: &Grid,
    xs: &[Vec<f64>],
    spec: &MaximalSpec,
) -> Result<MlocLowerReport, MaximalError> {
    let d = grid.dim();
    let ev = MlocEvaluator::new(f, grid)?;
    let mut ball_integral = 0.0;
    for ((y, fm, m), yr) in ev.points.iter().zip(&ev.norms) {
        debug_assert_eq!(y.len(), d);
        if d == 1 {
            // Clip the node's cell to the ball so the sharp boundary costs
            // O(h²) instead of O(h).
            let h = *m;
            let lo = (y[0] - 0.5 * h).max(-1.0);
            let hi = (y[0] + 0.5 * h).min(1.0);
            if hi > lo {
                ball_integral += fm / m * (hi - lo);
            }
        } else if *yr <= 1.0 {
            ball_integral += fm;
        }
    }
    let c_f = ball_integral / unit_ball_volume(d);
    if !(c_f > 0.0) {
        return Err(MaximalError::BadConfig(
            "f must have positive mass on the unit ball".into(),
        ));
    }
    let eps_disc = 1.0 - 0.92 * spec.ladder_ratio().powi(-(d as i32));
    let mut worst_margin = f64::INFINITY;
    let mut worst_x = Vec::new();
    for x in xs {
        let xr = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        let target = c_f * (1.0 + xr).powi(-(d as i32));
        let margin = ev.eval(x, &spec.radius_ladder).value / target;
        if margin < worst_margin {
            worst_margin = margin;
            worst_x = x.clone();
        }
    }
    Ok(MlocLowerReport {
        c_f,
        eps_disc,
        worst_margin,
        worst_x,
        pass: worst_margin >= 1.0 - eps_disc,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct PoissonMaxResult {
    pub value: f64,
    /// Ladder time attaining the sup.
    pub argmax_t: f64,
}

/// `sup_{0<t<a} |(P_t f)(x)|`, discretized over the nested time ladder.
pub fn poisson_maximal(
    p: &Params,
    a: f64,
    f: &ScalarField,
    x: &[f64],
    spec: &MaximalSpec,
    quad: &QuadSpec,
    opts: &ApplyOpts,
) -> Result<PoissonMaxResult, MaximalError> {
    let mut best = f64::NEG_INFINITY;
    let mut argmax_t = f64::NAN;
    for &t in &spec.t_ladder {
        if t >= a {
            continue;
        }
        let v = poisson_apply(p, t, f, x, quad, opts)?.value.abs().to_real();
        if v > best {
            best = v;
            argmax_t = t;
        }
    }
    if !best.is_finite() {
        return Err(MaximalError::BadConfig("empty time ladder".into()));
    }
    Ok(PoissonMaxResult { value: best, argmax_t })
}

#[derive(Debug, Clone)]
pub struct DominationReport {
    /// log of the single fitted slack constant `K̂`.
    pub k_hat_log: f64,
    /// `∫ |f| φ` over the sample grid.
    pub f_phi_integral: f64,
    /// Worst log-excess of the left side over `K̂`·(right side) on the
    /// verification points (midpoints between the fitted base points,
    /// budgeted with their neighbors' larger constants).
    pub verification_excess_log: f64,
    pub witness: Option<Vec<f64>>,
    /// True when the left side vanished at every base point.
    pub all_zero: bool,
    pub pass: bool,
}

/// Certifies the maximal-function domination
/// `P*_a f(x) ≤ K [ C₁(x)·mloc(f e^{-|y|²/2})(x) + C₂(x) a^{2ν} ∫|f|φ ]`
/// with `C₁, C₂` taken from the refined kernel-bound fits, `K` fitted as
/// the exact maximum over the base points and re-checked with headroom on
/// interleaved midpoints.
pub fn check_domination(
    p: &Params,
    a: f64,
    f: &ScalarField,
    grid: &Grid,
    fits: &[RefinedFit],
    spec: &MaximalSpec,
    quad: &QuadSpec,
    opts: &ApplyOpts,
) -> Result<DominationReport, MaximalError> {
    if fits.is_empty() {
        return Err(MaximalError::BadConfig("no fitted constants supplied".into()));
    }
    let gauss = ScalarField::from_real_fn(|y: &[f64]| {
        (-0.5 * y.iter().map(|c| c * c).sum::<f64>()).exp()
    });
    let weighted = f.abs().times(&gauss);
    let ev = MlocEvaluator::new(&weighted, grid)?;
    let pp = p.clone();
    let phi_field = ScalarField::from_fn(move |y| phi(&pp, y));
    let f_phi_integral = lp_norm(f, &phi_field, 1.0, grid)?;

    let rhs_log = |c1_log: f64, c2_log: f64, x: &[f64]| -> f64 {
        let m = ev.eval(x, &spec.radius_ladder).value;
        let local = LogScalar::from_real(m) * LogScalar::from_log(c1_log);
        let global = LogScalar::from_log(
            c2_log + 2.0 * p.nu() * a.ln() + f_phi_integral.ln(),
        );
        (local + global).logmag()
    };

    let mut k_hat_log = f64::NEG_INFINITY;
    let mut all_zero = true;
    for fit in fits {
        let lhs = poisson_maximal(p, a, f, &fit.x, spec, quad, opts)?.value;
        if lhs == 0.0 {
            continue;
        }
        all_zero = false;
        k_hat_log = k_hat_log.max(lhs.ln() - rhs_log(fit.c1_log, fit.c2_log, &fit.x));
    }

    let mut verification_excess_log = f64::NEG_INFINITY;
    let mut witness = None;
    if !all_zero {
        for pair in fits.windows(2) {
            let x_mid: Vec<f64> = pair[0]
                .x
                .iter()
                .zip(&pair[1].x)
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            let c1 = pair[0].c1_log.max(pair[1].c1_log);
            let c2 = pair[0].c2_log.max(pair[1].c2_log);
            let lhs = poisson_maximal(p, a, f, &x_mid, spec, quad, opts)?.value;
            if lhs == 0.0 {
                continue;
            }
            let excess = lhs.ln() - k_hat_log - rhs_log(c1, c2, &x_mid);
            if excess > verification_excess_log {
                verification_excess_log = excess;
                witness = Some(x_mid);
            }
        }
    }

    let headroom_log = 2.0f64.ln();
    let pass = if all_zero {
        true
    } else {
        k_hat_log.is_finite() && verification_excess_log <= headroom_log
    };
    Ok(DominationReport {
        k_hat_log,
        f_phi_integral,
        verification_excess_log,
        witness,
        all_zero,
        pass,
    })
}
