//! The subordinated Poisson kernel and operator of `L = -Δ + |x|² + m`.
//!
//! For order `ν > 0` the operator is
//!
//! ```text
//! P_t f = (t/2)^{2ν}/Γ(ν) · ∫_0^∞ e^{-t²/(4v)} e^{-vL} f · v^{-1-ν} dv,
//! ```
//!
//! which acts on Hermite functions as multiplication by `F_ν(t√λ)/Γ(ν)`
//! (so `ν = 1/2` gives the classical Poisson semigroup `e^{-t√L}`).
//!
//! The kernel is offered through three independent quadrature routes that
//! must agree: the `s = tanh v` form, the `r = e^{-2v}` form, and direct
//! subordination against [`mehler_kernel`]. The first two are each split
//! into two analytically reparametrized pieces, because near the
//! ground-state end (`s → 1`, `r → 0`) the borderline shift `m = -d`
//! leaves only logarithmic decay: the integrand carries mass out to
//! `ln(1/(1-s)) ~ 10^{20}`, far beyond where `1 - s` is representable. In
//! the coordinates used here (`u = ln(1/(1-s))`, `w = ln(1/r)`, each run
//! on an exponential scale) that tail is an ordinary exponentially
//! decaying integrand.

use crate::grid::ScalarField;
pub use crate::heat::{ApplyOpts, ApplyResult};

use crate::heat::{mehler_kernel, nested_apply, probe_growth, TimeVar};
use crate::logscalar::LogScalar;
use crate::quad::{integrate_halfline, integrate_interval, log_add, QuadError, QuadSpec, Substitution};
use crate::special::{f_nu, hermite_sweep_1d, ln_gamma, Params, SpecialError, MAX_HERMITE_DEGREE};
use std::cell::Cell;
use std::f64::consts::{LN_2, PI};
use thiserror::Error;

/// Smallest admissible Poisson time for the quadrature routes.
pub const MIN_TIME: f64 = 1e-3;
/// Smallest time at which the subordination route is valid: below this the
/// heat-side gate at `v = 1e-6` would clip the subordination profile.
pub const MIN_SUBORDINATION_TIME: f64 = 0.02;

/// Which 1-D quadrature realization of the kernel to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelRoute {
    /// `s = tanh v` coordinate, split at `s = 1/2`.
    SForm,
    /// `r = e^{-2v}` coordinate, split at `r = 1/2`.
    RForm,
    /// Direct `dv` subordination against the heat kernel.
    Subordination,
}

#[derive(Debug, Error)]
pub enum PoissonError {
    #[error("time {t} is outside the admissible range [{MIN_TIME}, ∞)")]
    InvalidTime { t: f64 },
    #[error("route {route:?} requires t ≥ {min}, got {t}")]
    RouteNeedsLargerTime { route: KernelRoute, t: f64, min: f64 },
    #[error("point dimension {got} does not match d = {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("integrand grows like exp({growth:.3}·|y|²), faster than the kernel's exp(-|y|²/2) decay")]
    DivergentIntegrand { growth: f64 },
    #[error("tail bound not met: radius {radius:.1}, tail exp({tail_log:.1}) vs target exp({target_log:.1})")]
    TailBound { radius: f64, tail_log: f64, target_log: f64 },
    #[error("series needs more than {max_order} total degrees: tail bound exp({tail_log:.1}) vs target exp({target_log:.1})")]
    SeriesBudget { max_order: usize, tail_log: f64, target_log: f64 },
    #[error("field evaluation failed: {0}")]
    Field(#[from] crate::grid::GridError),
    #[error("quadrature failure: {0}")]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Special(#[from] SpecialError),
}

/// Pairwise quadratic data shared by every kernel route.
struct Geom {
    xi: f64,      // |x|² + |y|²
    dot: f64,     // x·y
    sum_sq: f64,  // |x+y|²
    diff_sq: f64, // |x-y|²
}

impl Geom {
    fn new(x: &[f64], y: &[f64]) -> Geom {
        let xi = x.iter().map(|a| a * a).sum::<f64>() + y.iter().map(|a| a * a).sum::<f64>();
        let dot = x.iter().zip(y).map(|(a, b)| a * b).sum();
        let sum_sq = x.iter().zip(y).map(|(a, b)| (a + b) * (a + b)).sum();
        let diff_sq = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        Geom { xi, dot, sum_sq, diff_sq }
    }
}

/// Location of the subordination integrand's peak in `v`, used to seed
/// panel splits: balances `e^{-(t² + |x-y|²)/(4v)}` against `v^{-d/2-1-ν}`.
fn peak_v(p: &Params, t: f64, geom: &Geom) -> f64 {
    (t * t + geom.diff_sq) / (4.0 * (0.5 * p.d() as f64 + 1.0 + p.nu()))
}

/// `u`-coordinate (`u = ln(1/(1-s))`) of a given subordination time `v`.
fn u_of_v(v: f64) -> f64 {
    // 1 - tanh v = 2e^{-2v}/(1 + e^{-2v}).
    -(2.0 / (1.0 + (-2.0 * v).exp())).ln() + 2.0 * v
}

/// ln of the common kernel prefactor `(t/2)^{2ν}/Γ(ν)`.
fn prefactor_log(p: &Params, t: f64) -> f64 {
    2.0 * p.nu() * (0.5 * t).ln() - ln_gamma(p.nu())
}

/// `s`-form integrand on the near piece `s ∈ (0, 1/2]`, `ds` measure.
fn s_near(p: &Params, t: f64, geom: &Geom, s: f64) -> LogScalar {
    if !(s > 0.0) || s >= 1.0 {
        return LogScalar::zero();
    }
    let d = p.d() as f64;
    let v = s.atanh();
    let ln1m = (1.0 - s).ln();
    let ln1p = s.ln_1p();
    let log_w = -t * t / (4.0 * v)
        - (1.0 + p.nu()) * v.ln()
        - 0.5 * d * ((4.0 * PI).ln() + s.ln() - ln1m - ln1p)
        - 0.25 * (s * geom.sum_sq + geom.diff_sq / s)
        + 0.5 * p.m() * (ln1m - ln1p)
        - (ln1m + ln1p);
    LogScalar::from_log(log_w)
}

/// `s`-form far piece in the exponential coordinate `g`: the original
/// variable is `u = ln(1/(1-s)) = ln 2 · e^g`, `dg` measure on `(0, ∞)`.
/// The critical shift `m = -d` leaves only the `A^{-1-ν}` power here, so
/// the exponential scale is what turns its slow tail into fast decay.
fn s_far(p: &Params, t: f64, geom: &Geom, g: f64) -> LogScalar {
    let u = LN_2 * g.exp();
    if !u.is_finite() {
        return LogScalar::zero();
    }
    let d = p.d() as f64;
    let em_u = (-u).exp();
    let two_m = 2.0 - em_u;
    let ln_two_m = two_m.ln();
    let a = 0.5 * (u + ln_two_m); // atanh s, cancellation-free
    let s = -(-u).exp_m1(); // 1 - e^{-u}
    let ln_s = (-em_u).ln_1p();
    // The u-linear parts of the d- and m-terms are combined into a single
    // product: at the borderline shift m = -d the coefficient is exactly
    // zero, and u reaches ~1e308 here, so summing them as separate huge
    // intermediates would wipe out every O(1) term by absorption first.
    let linear = -0.5 * (d + p.m()) * u;
    let log_w = -t * t / (4.0 * a)
        - (1.0 + p.nu()) * a.ln()
        - 0.5 * d * ((4.0 * PI).ln() + ln_s - ln_two_m)
        + linear
        - 0.25 * (s * geom.sum_sq + geom.diff_sq / s)
        - 0.5 * p.m() * ln_two_m
        - ln_two_m
        + LN_2.ln()
        + g;
    LogScalar::from_log(log_w)
}

/// `r`-form integrand on the near piece `r ∈ [1/2, 1)`, `dr` measure.
fn r_near(p: &Params, t: f64, geom: &Geom, r: f64) -> LogScalar {
    if !(r > 0.0) || r >= 1.0 {
        return LogScalar::zero();
    }
    let d = p.d() as f64;
    let v = -0.5 * r.ln();
    let log_w = -t * t / (4.0 * v)
        - (1.0 + p.nu()) * v.ln()
        - 0.5 * d * (PI.ln() + (1.0 - r).ln() + r.ln_1p() - r.ln())
        - ((1.0 + r * r) * geom.xi - 4.0 * r * geom.dot) / (2.0 * (1.0 - r) * (1.0 + r))
        + 0.5 * p.m() * r.ln()
        - (LN_2 + r.ln());
    LogScalar::from_log(log_w)
}

/// `r`-form far piece in the exponential coordinate `g`: `w = ln(1/r)
/// = ln 2 · e^g`, `dg` measure on `(0, ∞)`.
fn r_far(p: &Params, t: f64, geom: &Geom, g: f64) -> LogScalar {
    let w = LN_2 * g.exp();
    if !w.is_finite() {
        return LogScalar::zero();
    }
    let d = p.d() as f64;
    let v = 0.5 * w;
    let r = (-w).exp();
    let one_m_r2 = -(-2.0 * w).exp_m1();
    // Single product for the w-linear terms; see `s_far`.
    let linear = -0.5 * (d + p.m()) * w;
    let log_w = -t * t / (4.0 * v)
        - (1.0 + p.nu()) * v.ln()
        - 0.5 * d * (PI.ln() + one_m_r2.ln())
        + linear
        - ((1.0 + r * r) * geom.xi - 4.0 * r * geom.dot) / (2.0 * one_m_r2)
        - LN_2
        + LN_2.ln()
        + g;
    LogScalar::from_log(log_w)
}

fn filtered_splits(candidates: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = candidates
        .iter()
        .copied()
        .filter(|&c| c.is_finite() && c > lo && c < hi)
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * (1.0 + a.abs()));
    pts
}

fn validate_point(p: &Params, t: f64, x: &[f64], y: &[f64]) -> Result<(), PoissonError> {
    if !t.is_finite() || t < MIN_TIME {
        return Err(PoissonError::InvalidTime { t });
    }
    if x.len() != p.d() {
        return Err(PoissonError::DimensionMismatch { expected: p.d(), got: x.len() });
    }
    if y.len() != p.d() {
        return Err(PoissonError::DimensionMismatch { expected: p.d(), got: y.len() });
    }
    Ok(())
}

/// The two halves of the kernel's defining integral, split at the midpoint
/// `s = 1/2` of the compact coordinate: the small-time half (which carries
/// the sharper-than-Gaussian decay in `y`) and the large-time half (which
/// carries the stationary envelope). Their sum is [`poisson_kernel`].
pub fn poisson_kernel_split(
    p: &Params,
    t: f64,
    x: &[f64],
    y: &[f64],
    spec: &QuadSpec,
) -> Result<(LogScalar, LogScalar), PoissonError> {
    validate_point(p, t, x, y)?;
    let geom = Geom::new(x, y);
    let (near, far) = s_form_pieces(p, t, &geom, spec)?;
    let pref = LogScalar::from_log(prefactor_log(p, t));
    Ok((pref * near, pref * far))
}

fn s_form_pieces(
    p: &Params,
    t: f64,
    geom: &Geom,
    spec: &QuadSpec,
) -> Result<(LogScalar, LogScalar), PoissonError> {
    let v_star = peak_v(p, t, geom);
    let v_onset = t * t / (4.0 * LN_2); // where e^{-t²/(4v)} switches on
    let near_splits = filtered_splits(&[v_star.tanh(), v_onset.tanh()], 1e-12, 0.5 - 1e-12);
    let near_spec = QuadSpec {
        substitution: Substitution::LogLeftEndpoint,
        split_points: near_splits,
        ..spec.clone()
    };
    let near = integrate_interval(|s| s_near(p, t, geom, s), 0.0, 0.5, &near_spec)?;

    let g_of_v = |v: f64| (u_of_v(v) / LN_2).ln();
    let far_splits = filtered_splits(&[g_of_v(v_star), g_of_v(v_onset), 1.0], 1e-9, 700.0);
    let far_spec = QuadSpec {
        substitution: Substitution::None,
        split_points: far_splits,
        ..spec.clone()
    };
    let far = integrate_halfline(|g| s_far(p, t, geom, g), &far_spec)?;
    Ok((near.value, far.value))
}

/// `p_t(x, y)` via the chosen quadrature route.
pub fn poisson_kernel(
    p: &Params,
    t: f64,
    x: &[f64],
    y: &[f64],
    route: KernelRoute,
    spec: &QuadSpec,
) -> Result<LogScalar, PoissonError> {
    validate_point(p, t, x, y)?;
    if route == KernelRoute::Subordination && t < MIN_SUBORDINATION_TIME {
        return Err(PoissonError::RouteNeedsLargerTime {
            route,
            t,
            min: MIN_SUBORDINATION_TIME,
        });
    }
    let geom = Geom::new(x, y);
    let v_star = peak_v(p, t, &geom);
    let v_onset = t * t / (4.0 * LN_2); // where e^{-t²/(4v)} switches on
    let pref = prefactor_log(p, t);

    let (near, far) = match route {
        KernelRoute::SForm => {
            let (near, far) = s_form_pieces(p, t, &geom, spec)?;
            return Ok(LogScalar::from_log(pref) * (near + far));
        }
        KernelRoute::RForm => {
            let near_splits = filtered_splits(
                &[(-2.0 * v_star).exp(), (-2.0 * v_onset).exp()],
                0.5 + 1e-12,
                1.0 - 1e-12,
            );
            let near_spec = QuadSpec {
                substitution: Substitution::LogRightEndpoint,
                split_points: near_splits,
                ..spec.clone()
            };
            let near = integrate_interval(|r| r_near(p, t, &geom, r), 0.5, 1.0, &near_spec)?;

            let g_of_v = |v: f64| (2.0 * v / LN_2).ln();
            let far_splits =
                filtered_splits(&[g_of_v(v_star), g_of_v(v_onset), 1.0], 1e-9, 700.0);
            let far_spec = QuadSpec {
                substitution: Substitution::None,
                split_points: far_splits,
                ..spec.clone()
            };
            let far = integrate_halfline(|g| r_far(p, t, &geom, g), &far_spec)?;
            (near, far)
        }
        KernelRoute::Subordination => {
            let nu = p.nu();
            let profile = |v: f64| -> LogScalar {
                if v < crate::heat::MIN_TIME || !v.is_finite() {
                    return LogScalar::zero();
                }
                match mehler_kernel(p, TimeVar::V(v), x, y) {
                    Ok(k) => k * LogScalar::from_log(-t * t / (4.0 * v) - (1.0 + nu) * v.ln()),
                    Err(_) => LogScalar::from_real(f64::NAN),
                }
            };
            let near_spec = QuadSpec {
                substitution: Substitution::LogLeftEndpoint,
                split_points: filtered_splits(
                    &[0.125 * v_star, v_star, 8.0 * v_star, v_onset],
                    1e-9,
                    1.0 - 1e-12,
                ),
                ..spec.clone()
            };
            let near = integrate_interval(profile, 0.0, 1.0, &near_spec)?;
            // Far piece on v = e^g: at the borderline shift the profile
            // decays only like v^{-1-ν}, which the exponential scale turns
            // into e^{-νg}.
            let far_spec = QuadSpec {
                substitution: Substitution::None,
                split_points: filtered_splits(
                    &[v_star.ln(), v_onset.ln(), 1.0],
                    1e-9,
                    700.0,
                ),
                ..spec.clone()
            };
            let far = integrate_halfline(
                |g| {
                    let v = g.exp();
                    profile(v) * LogScalar::from_log(g)
                },
                &far_spec,
            )?;
            return Ok(LogScalar::from_log(pref) * (near.value + far.value));
        }
    };
    Ok(LogScalar::from_log(pref) * (near.value + far.value))
}

/// `(P_t f)(x)` by nested quadrature over a truncated box, with the
/// truncation radius chosen from a growth probe of `f` and an empirical
/// ring bound on the integrand. The kernel decays like `e^{-|y|²/2}`
/// times powers, so `f` may grow up to (and marginally including) the
/// inverse Gaussian rate provided enough polynomial decay remains; the
/// ring bound decides.
pub fn poisson_apply(
    p: &Params,
    t: f64,
    f: &ScalarField,
    x: &[f64],
    spec: &QuadSpec,
    opts: &ApplyOpts,
) -> Result<ApplyResult, PoissonError> {
    if !t.is_finite() || t < MIN_TIME {
        return Err(PoissonError::InvalidTime { t });
    }
    let d = p.d();
    if x.len() != d {
        return Err(PoissonError::DimensionMismatch { expected: d, got: x.len() });
    }
    let fit = probe_growth(f, d, opts.max_radius).map_err(PoissonError::Field)?;
    if fit.beta > 0.5 + 1e-3 {
        return Err(PoissonError::DivergentIntegrand { growth: fit.beta });
    }
    let kernel_spec = QuadSpec {
        rel_tol: (spec.rel_tol * 1e-2).clamp(1e-12, 1e-8),
        ..QuadSpec::default()
    };
    let eval_integrand = |y: &[f64]| -> Result<LogScalar, PoissonError> {
        let k = poisson_kernel(p, t, x, y, KernelRoute::SForm, &kernel_spec)?;
        let fv = f.eval(y).map_err(PoissonError::Field)?;
        Ok(k * fv)
    };

    let peak_log = {
        let v = eval_integrand(x)?;
        if v.is_zero() { fit.offset } else { v.logmag() }
    };
    let target_log = peak_log + opts.tail_rel_tol.ln();

    // Ring probe: max of the integrand over directions at growing radii,
    // accepted once an exponential (or, marginally, polynomial) decay fit
    // pushes the remaining tail under the target.
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
    let ring_max = |radius: f64| -> Result<f64, PoissonError> {
        let mut best = f64::NEG_INFINITY;
        for dir in &dirs {
            let y: Vec<f64> = dir.iter().map(|&c| c * radius).collect();
            let v = eval_integrand(&y)?;
            if !v.is_zero() {
                best = best.max(v.logmag());
            }
        }
        Ok(best)
    };

    let x_norm = x.iter().fold(0.0f64, |m, &c| m.max(c.abs()));
    let mut radius = match opts.box_radius {
        Some(r) => r,
        None => (2.0 * x_norm + 4.0).max(6.0),
    };
    let mut q_prev: Option<(f64, f64)> = None;
    let mut tail_log;
    loop {
        let q = ring_max(radius)?;
        let surface_log = (2.0 * d as f64).ln() + (d as f64 - 1.0) * (2.0 * radius).ln();
        tail_log = match q_prev {
            None => q + surface_log + radius.ln().max(0.0),
            Some((r0, q0)) => {
                let rate = (q0 - q) / (radius - r0);
                if rate > 0.05 {
                    // Exponential regime: ∫_R^∞ e^{q - rate(ρ-R)} dρ.
                    q + surface_log - rate.ln()
                } else {
                    let power = (q0 - q) / (radius.ln() - r0.ln());
                    if power > d as f64 + 1.2 {
                        // Polynomial regime with enough decay to integrate.
                        q + surface_log + radius.ln() - (power - d as f64 - 1.0).ln()
                    } else {
                        f64::INFINITY
                    }
                }
            }
        };
        if q == f64::NEG_INFINITY {
            tail_log = f64::NEG_INFINITY;
        }
        if opts.box_radius.is_some() || tail_log <= target_log {
            break;
        }
        if radius >= opts.max_radius {
            return Err(PoissonError::TailBound { radius, tail_log, target_log });
        }
        q_prev = Some((radius, q));
        radius = (radius * 1.3).min(opts.max_radius);
    }

    let evals = Cell::new(0usize);
    let out = nested_apply(
        &|y: &[f64]| -> Result<LogScalar, PoissonError> {
            evals.set(evals.get() + 1);
            eval_integrand(y)
        },
        x,
        radius,
        spec,
        &mut Vec::with_capacity(d),
    )?;
    let err_quad = out.value.logmag() + spec.rel_tol.ln();
    Ok(ApplyResult {
        value: out.value,
        error_log: log_add(err_quad.max(out.error_log), tail_log),
        evaluations: evals.get(),
        box_radius: radius,
    })
}

/// Spectral-sum result with its rigorous truncation bound.
#[derive(Clone, Copy, Debug)]
pub struct SeriesResult {
    pub value: LogScalar,
    /// ln of the bound on the dropped tail.
    pub tail_log: f64,
    /// Number of Hermite terms summed.
    pub terms: usize,
}

/// `p_t(x, y) = Σ_k F_ν(t√λ_k)/Γ(ν) · h_k(x) h_k(y)`, summed by total
/// degree with the tail controlled by `F_ν(z) ≤ 2^ν Γ(ν) e^{-z/2}` and
/// `|h_k| ≤ 1`.
pub fn poisson_series(
    p: &Params,
    t: f64,
    x: &[f64],
    y: &[f64],
    max_order: usize,
    spec: &QuadSpec,
) -> Result<SeriesResult, PoissonError> {
    if !t.is_finite() || t <= 0.0 {
        return Err(PoissonError::InvalidTime { t });
    }
    let d = p.d();
    if x.len() != d {
        return Err(PoissonError::DimensionMismatch { expected: d, got: x.len() });
    }
    if y.len() != d {
        return Err(PoissonError::DimensionMismatch { expected: d, got: y.len() });
    }
    let max_order = max_order.min(MAX_HERMITE_DEGREE);
    let sweeps_x: Vec<Vec<LogScalar>> =
        x.iter().map(|&c| hermite_sweep_1d(max_order, c)).collect();
    let sweeps_y: Vec<Vec<LogScalar>> =
        y.iter().map(|&c| hermite_sweep_1d(max_order, c)).collect();

    // Tail majorant for everything of total degree > n, from the split
    // u + z²/(4u) ≥ (1-θ)u + √θ·z: the multiplier is at most
    // (1-θ)^{-ν} e^{-√θ z} for any θ ∈ (0,1), and θ ≈ 1 - 2ν/z is near
    // optimal, recovering the true e^{-z} decay up to a power of z.
    let nu = p.nu();
    let term_bound = move |j: usize| -> f64 {
        let lambda = 2.0 * j as f64 + d as f64 + p.m();
        let z = t * lambda.max(0.0).sqrt();
        let theta = (1.0 - 2.0 * nu / z.max(2.0 * nu + 1.0)).clamp(0.5, 1.0 - 1e-9);
        -nu * (1.0 - theta).ln() - theta.sqrt() * z
            + (d as f64 - 1.0) * ((j + 1) as f64).ln()
    };
    let tail_bound_log = |n: usize| -> f64 {
        let mut acc = f64::NEG_INFINITY;
        let mut j = n + 1;
        loop {
            let b = term_bound(j);
            acc = log_add(acc, b);
            let ratio = term_bound(j + 1) - b;
            if ratio < -1e-3 {
                let next = term_bound(j + 1);
                // Geometric remainder: Σ_{i>j} ≤ e^{next}/(1 - e^{ratio}).
                let rem = next - (-ratio.exp_m1()).ln();
                if rem < acc - 35.0 {
                    return log_add(acc, rem);
                }
            }
            j += 1;
            if j > n + 200_000 {
                return f64::INFINITY;
            }
        }
    };

    let mut acc = LogScalar::zero();
    let mut terms = 0usize;
    for n in 0..=max_order {
        let lambda = 2.0 * n as f64 + d as f64 + p.m();
        let u = f_nu(p.nu(), t * lambda.max(0.0).sqrt(), spec)?
            / LogScalar::from_log(ln_gamma(p.nu()));
        let mut layer = LogScalar::zero();
        match d {
            1 => layer = sweeps_x[0][n] * sweeps_y[0][n],
            2 => {
                for k1 in 0..=n {
                    let k2 = n - k1;
                    layer = layer
                        + sweeps_x[0][k1] * sweeps_y[0][k1] * sweeps_x[1][k2] * sweeps_y[1][k2];
                }
            }
            _ => {
                for k1 in 0..=n {
                    for k2 in 0..=(n - k1) {
                        let k3 = n - k1 - k2;
                        layer = layer
                            + sweeps_x[0][k1]
                                * sweeps_y[0][k1]
                                * sweeps_x[1][k2]
                                * sweeps_y[1][k2]
                                * sweeps_x[2][k3]
                                * sweeps_y[2][k3];
                    }
                }
            }
        }
        acc = acc + u * layer;
        terms += 1;
        let tail = tail_bound_log(n);
        let target = if acc.is_zero() {
            spec.abs_tol.ln()
        } else {
            acc.logmag() + spec.rel_tol.ln()
        };
        if tail <= target {
            return Ok(SeriesResult { value: acc, tail_log: tail, terms });
        }
    }
    let tail = tail_bound_log(max_order);
    let target = if acc.is_zero() {
        spec.abs_tol.ln()
    } else {
        acc.logmag() + spec.rel_tol.ln()
    };
    Err(PoissonError::SeriesBudget { max_order, tail_log: tail, target_log: target })
}

/// Relative residual of the extension equation
/// `∂_t² p + (1-2ν)/t · ∂_t p = (-Δ_x + |x|² + m) p`
/// at `(t, x, y)`, with Richardson-extrapolated central differences. All
/// differences are taken on the ratio `p(·)/p(t,x,y)` so the result is a
/// clean relative measure even deep in the Gaussian tails.
pub fn pde_residual(
    p: &Params,
    t: f64,
    x: &[f64],
    y: &[f64],
    spec: &QuadSpec,
) -> Result<f64, PoissonError> {
    let d = p.d();
    let kernel = |tt: f64, xx: &[f64]| -> Result<LogScalar, PoissonError> {
        poisson_kernel(p, tt, xx, y, KernelRoute::SForm, spec)
    };
    let p0 = kernel(t, x)?;
    let base = |v: LogScalar| (v / p0).to_real();

    let h_t = 0.02 * t;
    let d2t = |h: f64| -> Result<f64, PoissonError> {
        Ok((base(kernel(t + h, x)?) - 2.0 + base(kernel(t - h, x)?)) / (h * h))
    };
    let d1t = |h: f64| -> Result<f64, PoissonError> {
        Ok((base(kernel(t + h, x)?) - base(kernel(t - h, x)?)) / (2.0 * h))
    };
    let ptt = (4.0 * d2t(0.5 * h_t)? - d2t(h_t)?) / 3.0;
    let pt = (4.0 * d1t(0.5 * h_t)? - d1t(h_t)?) / 3.0;

    let mut laplacian = 0.0;
    for i in 0..d {
        let h_x = 0.02 * (1.0 + x[i].abs());
        let d2x = |h: f64| -> Result<f64, PoissonError> {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            Ok((base(kernel(t, &xp)?) - 2.0 + base(kernel(t, &xm)?)) / (h * h))
        };
        laplacian += (4.0 * d2x(0.5 * h_x)? - d2x(h_x)?) / 3.0;
    }
    let x_sq: f64 = x.iter().map(|c| c * c).sum();
    let lx = -laplacian + (x_sq + p.m()) * 1.0;
    let lhs = ptt + (1.0 - 2.0 * p.nu()) / t * pt;
    let scale = ptt.abs().max(lx.abs()).max(1.0);
    Ok((lhs - lx).abs() / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::hermite_fn_1d;
    use approx::assert_relative_eq;

    #[test]
    fn routes_agree_across_regimes() {
        let spec = QuadSpec::default();
        let cases = [
            (Params::new(1, 0.3, 0.5).unwrap(), [0.4], [-0.9]),
            (Params::new(1, -1.0, 0.5).unwrap(), [0.4], [-0.9]), // critical
            (Params::new(1, -1.0, 0.3).unwrap(), [1.5], [1.2]),
            (Params::new(1, 2.0, 1.7).unwrap(), [0.0], [2.0]),
        ];
        for (p, x, y) in &cases {
            for &t in &[1e-3, 0.05, 0.7, 3.0] {
                let s = poisson_kernel(p, t, x, y, KernelRoute::SForm, &spec).unwrap();
                let r = poisson_kernel(p, t, x, y, KernelRoute::RForm, &spec).unwrap();
                assert_eq!(s.sign(), 1);
                assert_relative_eq!(s.to_real(), r.to_real(), max_relative = 1e-9);
                if t >= MIN_SUBORDINATION_TIME {
                    let v =
                        poisson_kernel(p, t, x, y, KernelRoute::Subordination, &spec).unwrap();
                    assert_relative_eq!(s.to_real(), v.to_real(), max_relative = 1e-8);
                }
            }
        }
    }

    #[test]
    fn routes_agree_in_higher_dimension() {
        let spec = QuadSpec::default();
        let p = Params::new(3, -3.0, 0.5).unwrap();
        let x = [0.5, -0.2, 1.0];
        let y = [-0.3, 0.8, 0.4];
        let t = 0.5;
        let s = poisson_kernel(&p, t, &x, &y, KernelRoute::SForm, &spec).unwrap();
        let r = poisson_kernel(&p, t, &x, &y, KernelRoute::RForm, &spec).unwrap();
        let v = poisson_kernel(&p, t, &x, &y, KernelRoute::Subordination, &spec).unwrap();
        assert_relative_eq!(s.to_real(), r.to_real(), max_relative = 1e-9);
        assert_relative_eq!(s.to_real(), v.to_real(), max_relative = 1e-8);
    }

    #[test]
    fn kernel_is_symmetric() {
        let spec = QuadSpec::default();
        let p = Params::new(2, -1.0, 0.5).unwrap();
        let a = poisson_kernel(&p, 0.8, &[0.3, -1.1], &[0.9, 0.2], KernelRoute::SForm, &spec)
            .unwrap();
        let b = poisson_kernel(&p, 0.8, &[0.9, 0.2], &[0.3, -1.1], KernelRoute::SForm, &spec)
            .unwrap();
        assert_relative_eq!(a.to_real(), b.to_real(), max_relative = 1e-11);
    }

    #[test]
    fn ground_state_is_fixed_at_critical_shift() {
        // m = -d ⇒ λ_0 = 0 ⇒ P_t h_0 = F_ν(0)/Γ(ν) h_0 = h_0, for every t
        // and ν: one identity exercising every prefactor and Jacobian.
        let spec = QuadSpec::default();
        for &nu in &[0.35, 0.5, 1.2] {
            let p = Params::new(1, -1.0, nu).unwrap();
            for &t in &[0.01, 0.5, 3.0] {
                let x = [0.7];
                let applied = integrate_interval(
                    |yy| {
                        poisson_kernel(&p, t, &x, &[yy], KernelRoute::SForm, &spec).unwrap()
                            * hermite_fn_1d(0, yy)
                    },
                    -16.0,
                    16.0,
                    &QuadSpec::with_rel_tol(1e-10),
                )
                .unwrap();
                let want = hermite_fn_1d(0, 0.7);
                assert_relative_eq!(applied.value.to_real(), want.to_real(), max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn eigenfunction_decay_matches_subordination_profile() {
        // For ν = 1/2 the multiplier is exactly e^{-t√λ}.
        let spec = QuadSpec::default();
        let p = Params::new(1, 0.5, 0.5).unwrap();
        let (t, k, x) = (0.6, 2usize, 0.4);
        let lambda = 2.0 * k as f64 + 1.0 + 0.5;
        let applied = integrate_interval(
            |yy| {
                poisson_kernel(&p, t, &[x], &[yy], KernelRoute::SForm, &spec).unwrap()
                    * hermite_fn_1d(k, yy)
            },
            -16.0,
            16.0,
            &QuadSpec::with_rel_tol(1e-10),
        )
        .unwrap();
        let want = hermite_fn_1d(k, x) * LogScalar::from_log(-t * lambda.sqrt());
        assert_relative_eq!(applied.value.to_real(), want.to_real(), max_relative = 1e-8);
    }

    #[test]
    fn series_route_agrees_with_quadrature() {
        let spec = QuadSpec::with_rel_tol(1e-8);
        let p = Params::new(1, 0.5, 0.5).unwrap();
        let (t, x, y) = (1.0, [0.3], [-0.4]);
        let series = poisson_series(&p, t, &x, &y, 512, &spec).unwrap();
        let quad = poisson_kernel(&p, t, &x, &y, KernelRoute::SForm, &QuadSpec::default())
            .unwrap();
        assert_relative_eq!(series.value.to_real(), quad.to_real(), max_relative = 1e-7);
        assert!(series.tail_log < series.value.logmag() - 18.0);
    }

    #[test]
    fn series_budget_failure_is_reported() {
        let p = Params::new(1, 0.5, 0.5).unwrap();
        // Small t needs degrees far beyond 20.
        let err =
            poisson_series(&p, 0.05, &[0.0], &[0.1], 20, &QuadSpec::default()).unwrap_err();
        assert!(matches!(err, PoissonError::SeriesBudget { .. }));
    }

    #[test]
    fn extension_equation_residual_is_small() {
        let spec = QuadSpec::with_rel_tol(1e-11);
        for (p, x, y) in [
            (Params::new(1, 0.5, 0.5).unwrap(), [0.5], [-0.3]),
            (Params::new(1, -1.0, 0.8).unwrap(), [0.2], [0.9]),
        ] {
            let r = pde_residual(&p, 0.8, &x, &y, &spec).unwrap();
            assert!(r < 1e-5, "residual {r}");
        }
    }

    #[test]
    fn apply_reproduces_eigen_decay() {
        let p = Params::new(1, 0.5, 0.5).unwrap();
        let f = ScalarField::from_fn(|y| hermite_fn_1d(2, y[0]));
        let spec = QuadSpec::with_rel_tol(1e-7);
        let out =
            poisson_apply(&p, 0.6, &f, &[0.4], &spec, &ApplyOpts::default()).unwrap();
        let lambda: f64 = 2.0 * 2.0 + 1.0 + 0.5;
        let want = hermite_fn_1d(2, 0.4) * LogScalar::from_log(-0.6 * lambda.sqrt());
        assert_relative_eq!(out.value.to_real(), want.to_real(), max_relative = 1e-5);
    }

    #[test]
    fn apply_rejects_supergaussian_growth() {
        let p = Params::new(1, 0.0, 0.5).unwrap();
        let f = ScalarField::from_fn(|y| LogScalar::from_log(0.51 * y[0] * y[0]));
        let err = poisson_apply(
            &p,
            0.5,
            &f,
            &[0.0],
            &QuadSpec::default(),
            &ApplyOpts::default(),
        )
        .unwrap_err();
        assert!(matches!(err, PoissonError::DivergentIntegrand { .. }));
    }

    #[test]
    fn apply_handles_marginal_gaussian_growth_with_polynomial_decay() {
        // f = e^{|y|²/2} (1+|y|)^{-8}: exactly the kernel's inverse
        // Gaussian rate, integrable only through the polynomial factor.
        let p = Params::new(1, -1.0, 0.5).unwrap();
        let f = ScalarField::from_fn(|y| {
            LogScalar::from_log(0.5 * y[0] * y[0] - 8.0 * (1.0 + y[0].abs()).ln())
        });
        let spec = QuadSpec::with_rel_tol(1e-6);
        let opts = ApplyOpts { tail_rel_tol: 1e-6, max_radius: 512.0, ..Default::default() };
        let out = poisson_apply(&p, 0.8, &f, &[0.3], &spec, &opts).unwrap();
        assert!(out.value.sign() == 1 && out.value.is_finite());
        // Independent wide fixed-box evaluation.
        let wide_opts = ApplyOpts { box_radius: Some(out.box_radius * 2.0), ..opts.clone() };
        let wide = poisson_apply(&p, 0.8, &f, &[0.3], &spec, &wide_opts).unwrap();
        assert_relative_eq!(out.value.to_real(), wide.value.to_real(), max_relative = 1e-4);
    }

    #[test]
    fn rejects_bad_times_and_dimensions() {
        let p = Params::new(2, 0.0, 0.5).unwrap();
        let spec = QuadSpec::default();
        assert!(matches!(
            poisson_kernel(&p, 1e-4, &[0.0, 0.0], &[0.0, 0.0], KernelRoute::SForm, &spec),
            Err(PoissonError::InvalidTime { .. })
        ));
        assert!(matches!(
            poisson_kernel(&p, 0.01, &[0.0, 0.0], &[0.0, 0.0], KernelRoute::Subordination, &spec),
            Err(PoissonError::RouteNeedsLargerTime { .. })
        ));
        assert!(matches!(
            poisson_kernel(&p, 1.0, &[0.0], &[0.0, 0.0], KernelRoute::SForm, &spec),
            Err(PoissonError::DimensionMismatch { .. })
        ));
    }
}


