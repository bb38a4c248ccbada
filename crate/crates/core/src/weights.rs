//! Admissible input weights and constructed output weights for the
//! subordinated maximal operator.
//!
//! A weight `w > 0` is *admissible* for exponent `p` when the envelope norm
//! `‖w^{-1/p} φ‖_{p'}` is finite ([`dp_norm`]); by Hölder this is exactly
//! what embeds `L^p(w)` into the natural domain `L¹(φ)` of the semigroup.
//! From an admissible `w` two output weights are constructed, both powered
//! by the local maximal function of a reciprocal weight:
//!
//! * [`build_v_alpha`]: `V_α = [mloc(w^{-1/(p-1)})]^{-(p-1)α} (1+|x|)^{-(p-1)dα}`,
//!   against which `mloc` itself is `L^p(w) → L^p(V_α)` bounded;
//! * [`build_theorem_weight`]: the Gaussian-tempered variant
//!   `v = [mloc(w^{-p'/p} e^{-p'|y|²/2})]^{-α(p-1)} e^{-p|x|²/2} (1+|x|)^{-N}`,
//!   against which the full maximal function of the subordinated semigroup
//!   is bounded once `N` clears the threshold [`decay_threshold`].
//!
//! Every qualitative finiteness claim is settled by one shared numeric
//! rule, [`nested_box_integral`]: integrate over dyadically nested boxes
//! and demand geometric decay of the increments. The remaining operations
//! are falsifiable certificates: a seeded random-trial transfer check for
//! the two-weight bound, a Gaussian-integrability check with an independent
//! shell-decomposition route, a dyadic-shell probe of why local
//! integrability of `w^{-p'/p}` is necessary, and an end-to-end operator
//! bound with refinement-stability of the empirical constant.

use crate::estimates::phi;
use crate::grid::{lp_norm_log, Grid, GridError, GridField, ScalarField};
use crate::heat::ApplyOpts;
use crate::logscalar::LogScalar;
use crate::maximal::{poisson_maximal, unit_ball_volume, MaximalError, MaximalSpec, MlocEvaluator};
use crate::quad::QuadSpec;
use crate::special::Params;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WeightsError {
    #[error(transparent)]
    Field(#[from] GridError),
    #[error(transparent)]
    Maximal(#[from] MaximalError),
    #[error("weight exponent p must lie in (1, ∞), got {p}")]
    BadExponent { p: f64 },
    #[error("reciprocal weight is not locally integrable: non-finite value near {point:?}")]
    SigmaNotIntegrable { point: Vec<f64> },
    #[error("decay exponent N = {n} does not clear the threshold N₀ = {n0}")]
    BelowThreshold { n: f64, n0: f64 },
    #[error("constructed weight breaks its {cap} cap at {point:?} (log excess {excess:.3e})")]
    CapExceeded { cap: &'static str, point: Vec<f64>, excess: f64 },
    #[error("bad configuration: {0}")]
    BadConfig(String),
}

fn euclid(y: &[f64]) -> f64 {
    y.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// An input weight together with its Lᵖ exponent and derived companions.
#[derive(Clone)]
pub struct WeightPair {
    w: ScalarField,
    p: f64,
}

impl WeightPair {
    pub fn new(w: ScalarField, p: f64) -> Result<Self, WeightsError> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(WeightsError::BadExponent { p });
        }
        Ok(WeightPair { w, p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Conjugate exponent `p' = p/(p-1)`.
    pub fn p_conj(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn weight(&self) -> &ScalarField {
        &self.w
    }

    /// The same weight scaled by `c > 0` (for homogeneity tests).
    pub fn scaled(&self, c: f64) -> WeightPair {
        let w = self.w.clone();
        WeightPair {
            w: ScalarField::from_fn(move |y| {
                w.eval(y).unwrap_or(LogScalar::from_real(f64::NAN)) * LogScalar::from_real(c)
            }),
            p: self.p,
        }
    }

    /// `w` raised to a (possibly negative) real power, in log domain.
    /// Zeros of `w` map to `+∞` under negative powers so that downstream
    /// integrability checks can reject them instead of panicking.
    fn power_of_weight(&self, e: f64) -> ScalarField {
        let w = self.w.clone();
        ScalarField::from_fn(move |y| match w.eval(y) {
            Ok(v) if v.is_nan() => LogScalar::from_real(f64::NAN),
            Ok(v) if v.is_zero() => {
                if e > 0.0 {
                    LogScalar::zero()
                } else {
                    LogScalar::from_log(f64::INFINITY)
                }
            }
            Ok(v) if v.sign() < 0 => LogScalar::from_real(f64::NAN),
            Ok(v) => v.powf(e),
            Err(_) => LogScalar::from_real(f64::NAN),
        })
    }

    /// Reciprocal weight `w^{-1/(p-1)} = w^{-p'/p}`.
    pub fn sigma_weight(&self) -> ScalarField {
        self.power_of_weight(-1.0 / (self.p - 1.0))
    }

    /// Gaussian-lifted weight `W = w · e^{p|x|²/2}`.
    pub fn gaussian_weight(&self) -> ScalarField {
        let w = self.w.clone();
        let p = self.p;
        ScalarField::from_fn(move |y| {
            let lift = LogScalar::from_log(0.5 * p * y.iter().map(|c| c * c).sum::<f64>());
            w.eval(y).unwrap_or(LogScalar::from_real(f64::NAN)) * lift
        })
    }

    /// Reciprocal of the Gaussian-lifted weight,
    /// `W^{-1/(p-1)} = w^{-p'/p} · e^{-p'|x|²/2}`.
    pub fn tempered_sigma_weight(&self) -> ScalarField {
        let sigma = self.sigma_weight();
        let pc = self.p_conj();
        ScalarField::from_fn(move |y| {
            let damp = LogScalar::from_log(-0.5 * pc * y.iter().map(|c| c * c).sum::<f64>());
            sigma.eval(y).unwrap_or(LogScalar::from_real(f64::NAN)) * damp
        })
    }
}

/// Outcome of a nested-box finiteness test.
#[derive(Debug, Clone, Copy)]
pub enum IntegralVerdict {
    Finite {
        /// Natural log of the reported quantity (integral or norm).
        log_value: f64,
        /// Estimated relative mass beyond the largest box.
        tail_ratio: f64,
    },
    Divergent {
        /// Largest late-stage ratio of consecutive box increments.
        growth_ratio: f64,
        /// Log of the outermost increment.
        last_increment_log: f64,
    },
}

impl IntegralVerdict {
    pub fn is_finite(&self) -> bool {
        matches!(self, IntegralVerdict::Finite { .. })
    }

    /// The value when finite, `+∞` otherwise.
    pub fn value(&self) -> f64 {
        match self {
            IntegralVerdict::Finite { log_value, .. } => log_value.exp(),
            IntegralVerdict::Divergent { .. } => f64::INFINITY,
        }
    }

    pub fn log_value(&self) -> f64 {
        match self {
            IntegralVerdict::Finite { log_value, .. } => *log_value,
            IntegralVerdict::Divergent { .. } => f64::INFINITY,
        }
    }

    fn map_log(self, f: impl FnOnce(f64) -> f64) -> IntegralVerdict {
        match self {
            IntegralVerdict::Finite { log_value, tail_ratio } => {
                IntegralVerdict::Finite { log_value: f(log_value), tail_ratio }
            }
            d => d,
        }
    }
}

/// Integrates `|g|` over nested boxes `[-R_j, R_j]^d` carved out of the
/// grid box (`R_j = R·2^{j+1-levels}`) and classifies the result: the
/// increments between consecutive boxes must either collapse to a
/// negligible tail or decay geometrically (late-stage ratio ≤ 0.95), else
/// the integral is declared divergent. Accumulation is in log domain, so
/// integrands far beyond f64 range still classify correctly.
pub fn nested_box_integral(
    g: &ScalarField,
    grid: &Grid,
    levels: usize,
) -> Result<IntegralVerdict, WeightsError> {
    assert!(levels >= 4, "need at least 4 nested boxes for a verdict");
    let r_max = grid
        .axes()
        .iter()
        .map(|ax| ax.iter().fold(0.0f64, |m, &c| m.max(c.abs())))
        .fold(f64::INFINITY, f64::min);
    let r0 = r_max / 2f64.powi(levels as i32 - 1);
    if r0 < 4.0 * grid.min_spacing() {
        return Err(WeightsError::BadConfig(format!(
            "innermost box half-width {r0:.3e} is under-resolved at spacing {:.3e}",
            grid.min_spacing()
        )));
    }
    let boxes: Vec<f64> = (0..levels)
        .map(|j| r_max * 2f64.powi(j as i32 + 1 - levels as i32))
        .collect();

    let mut annuli: Vec<Vec<LogScalar>> = vec![Vec::new(); levels];
    for (flat, y) in grid.nodes() {
        let v = g.eval(&y)?;
        if v.is_nan() {
            return Err(WeightsError::Field(GridError::NanValue { point: y }));
        }
        let linf = y.iter().fold(0.0f64, |m, &c| m.max(c.abs()));
        let idx = boxes.partition_point(|&r| r < linf * (1.0 - 1e-12)).min(levels - 1);
        annuli[idx].push(v.abs() * LogScalar::from_real(grid.node_measure(flat)));
    }
    let masses: Vec<LogScalar> = annuli.into_iter().map(LogScalar::sum).collect();
    let mut running = LogScalar::zero();
    let mut cumulative = Vec::with_capacity(levels);
    for m in &masses {
        running = running + *m;
        cumulative.push(running);
    }
    let total = cumulative[levels - 1];
    if total.is_zero() {
        return Ok(IntegralVerdict::Finite { log_value: f64::NEG_INFINITY, tail_ratio: 0.0 });
    }

    let rel_last = masses[levels - 1].logmag() - total.logmag();
    if rel_last <= (1e-10f64).ln() {
        return Ok(IntegralVerdict::Finite { log_value: total.logmag(), tail_ratio: 0.0 });
    }
    let mut growth: f64 = 0.0;
    for k in levels - 3..levels {
        let prev = masses[k - 1].logmag();
        let cur = masses[k].logmag();
        let ratio = if prev == f64::NEG_INFINITY {
            if cur == f64::NEG_INFINITY {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (cur - prev).exp()
        };
        growth = growth.max(ratio);
    }
    if growth <= 0.95 {
        let tail_ratio = rel_last.exp() * growth / (1.0 - growth);
        Ok(IntegralVerdict::Finite { log_value: total.logmag(), tail_ratio })
    } else {
        Ok(IntegralVerdict::Divergent {
            growth_ratio: growth,
            last_increment_log: masses[levels - 1].logmag(),
        })
    }
}

/// The admissibility norm `‖w^{-1/p} φ‖_{p'} = [∫ w^{-p'/p} φ^{p'}]^{1/p'}`,
/// decided on nested boxes. A finite verdict carries the norm itself;
/// divergence is a legal answer, not an error.
pub fn dp_norm(
    p_params: &Params,
    wp: &WeightPair,
    grid: &Grid,
) -> Result<IntegralVerdict, WeightsError> {
    let sigma = wp.sigma_weight();
    let pc = wp.p_conj();
    let pars = p_params.clone();
    let g = ScalarField::from_fn(move |y| {
        let phi_pow = phi(&pars, y).powf(pc);
        sigma.eval(y).unwrap_or(LogScalar::from_real(f64::NAN)) * phi_pow
    });
    Ok(nested_box_integral(&g, grid, 7)?.map_log(|iv| iv / pc))
}

/// The output-side admissibility norm `‖v^{-σ/p} φ‖_{p'}`
/// `= [∫ v^{-σ/(p-1)} φ^{p'}]^{1/p'}` for a constructed weight `v`.
pub fn dpe_norm(
    p_params: &Params,
    v: &ScalarField,
    p: f64,
    sigma: f64,
    grid: &Grid,
) -> Result<IntegralVerdict, WeightsError> {
    if !(p > 1.0) {
        return Err(WeightsError::BadExponent { p });
    }
    let pc = p / (p - 1.0);
    let e = -sigma / (p - 1.0);
    let vf = v.clone();
    let pars = p_params.clone();
    let g = ScalarField::from_fn(move |y| {
        let vv = match vf.eval(y) {
            Ok(x) if x.sign() > 0 => x.powf(e),
            _ => LogScalar::from_real(f64::NAN),
        };
        vv * phi(&pars, y).powf(pc)
    });
    Ok(nested_box_integral(&g, grid, 7)?.map_log(|iv| iv / pc))
}

/// `|B₁(0)|⁻¹ ∫_{B₁(0)} |f|` on the grid; d = 1 clips boundary cells so the
/// sharp ball edge costs O(h²).
fn unit_ball_average(f: &ScalarField, grid: &Grid) -> Result<f64, WeightsError> {
    let d = grid.dim();
    let mut integral = 0.0;
    for (flat, y) in grid.nodes() {
        let v = f.eval(&y)?.abs().to_real();
        if v.is_nan() {
            return Err(WeightsError::Field(GridError::NanValue { point: y }));
        }
        if d == 1 {
            let h = grid.node_measure(flat);
            let lo = (y[0] - 0.5 * h).max(-1.0);
            let hi = (y[0] + 0.5 * h).min(1.0);
            if hi > lo {
                integral += v * (hi - lo);
            }
        } else if euclid(&y) <= 1.0 {
            integral += v * grid.node_measure(flat);
        }
    }
    Ok(integral / unit_ball_volume(d))
}

fn mloc_ladder(grid: &Grid) -> Vec<f64> {
    MaximalSpec::radii(grid.min_spacing(), 2.0 * grid.diameter() + 2.0)
}

fn ladder_max_ratio(ladder: &[f64]) -> f64 {
    ladder.windows(2).map(|w| w[1] / w[0]).fold(1.0, f64::max)
}

/// Samples `base` through the local maximal operator on every grid node.
fn mloc_samples(
    base: &ScalarField,
    grid: &Grid,
) -> Result<(MlocEvaluator, Vec<f64>, Vec<f64>), WeightsError> {
    let ev = MlocEvaluator::new(base, grid)?;
    let ladder = mloc_ladder(grid);
    let values: Vec<f64> = grid.nodes().map(|(_, y)| ev.eval(&y, &ladder).value).collect();
    Ok((ev, ladder, values))
}

/// The polynomially-capped output weight over a grid, with its certified
/// upper cap.
pub struct VAlpha {
    pub field: ScalarField,
    pub alpha: f64,
    /// Certified constant cap: `V_α ≤ cap` everywhere on the grid.
    pub cap: f64,
    /// Unit-ball average of the reciprocal weight behind the cap.
    pub c_sigma: f64,
    pub max_value: f64,
    pub min_value: f64,
}

fn v_alpha_unchecked(
    wp: &WeightPair,
    alpha: f64,
    grid: &Grid,
) -> Result<VAlpha, WeightsError> {
    let sigma = wp.sigma_weight();
    for (_, y) in grid.nodes() {
        let v = sigma.eval(&y)?;
        if v.is_nan() || v.logmag() == f64::INFINITY {
            return Err(WeightsError::SigmaNotIntegrable { point: y });
        }
    }
    let (_, ladder, msamples) = mloc_samples(&sigma, grid)?;
    let d = grid.dim() as f64;
    let e = -(wp.p - 1.0) * alpha;
    let mut values = Vec::with_capacity(grid.len());
    let mut max_value = f64::NEG_INFINITY;
    let mut min_value = f64::INFINITY;
    for ((_, y), m) in grid.nodes().zip(&msamples) {
        if !(*m > 0.0) {
            return Err(WeightsError::BadConfig(format!(
                "local maximal average vanished at {y:?}; grid too sparse for the weight"
            )));
        }
        let v = LogScalar::from_real(*m).powf(e)
            * LogScalar::from_real(1.0 + euclid(&y)).powf(e * d);
        let vr = v.to_real();
        max_value = max_value.max(vr);
        min_value = min_value.min(vr);
        values.push(v);
    }
    let c_sigma = unit_ball_average(&sigma, grid)?;
    // Taking r = 1+|x| puts the unit ball inside the masked ball, so
    // mloc(σ)(x) ≥ c_σ(1+|x|)^{-d} up to one ladder rung and quadrature slop.
    let slack = 0.9 * ladder_max_ratio(&ladder).powi(-(grid.dim() as i32));
    let cap = (c_sigma * slack).powf(e);
    let field = ScalarField::Samples(std::sync::Arc::new(GridField::new(
        grid.clone(),
        values,
    )?));
    Ok(VAlpha { field, alpha, cap, c_sigma, max_value, min_value })
}

/// Builds `V_α = [mloc(w^{-1/(p-1)})]^{-(p-1)α} (1+|x|)^{-(p-1)dα}` on the
/// grid. Requires `α > 1` and a locally integrable reciprocal weight;
/// certifies `0 < V_α ≤ cap` before returning.
pub fn build_v_alpha(
    wp: &WeightPair,
    alpha: f64,
    grid: &Grid,
) -> Result<VAlpha, WeightsError> {
    if !(alpha > 1.0) {
        return Err(WeightsError::BadConfig(format!(
            "power transfer needs alpha > 1 (got {alpha}); alpha ≤ 1 is diagnostic-only"
        )));
    }
    let va = v_alpha_unchecked(wp, alpha, grid)?;
    if !(va.min_value > 0.0) {
        return Err(WeightsError::BadConfig("constructed weight is not positive".into()));
    }
    if va.max_value > va.cap * (1.0 + 1e-9) {
        let (_, worst) = grid
            .nodes()
            .max_by(|a, b| {
                let fa = va.field.eval(&a.1).map(|v| v.to_real()).unwrap_or(0.0);
                let fb = va.field.eval(&b.1).map(|v| v.to_real()).unwrap_or(0.0);
                fa.total_cmp(&fb)
            })
            .expect("non-empty grid");
        return Err(WeightsError::CapExceeded {
            cap: "constant",
            point: worst,
            excess: (va.max_value / va.cap).ln(),
        });
    }
    Ok(va)
}

/// Decay threshold for the Gaussian-tempered weight:
/// `N₀ = (p-1)dα + max{(2ν+d-1)p, d + p(d+m)/2}`.
pub fn decay_threshold(p_params: &Params, p: f64, alpha: f64) -> f64 {
    let d = p_params.d() as f64;
    let local = (2.0 * p_params.nu() + d - 1.0) * p;
    let global = d + p * (d + p_params.m()) / 2.0;
    (p - 1.0) * d * alpha + local.max(global)
}

/// Exponents for [`build_theorem_weight`].
#[derive(Debug, Clone, Copy)]
pub struct TheoremWeightSpec {
    pub alpha: f64,
    /// Polynomial decay exponent `N`; must exceed [`decay_threshold`].
    pub n_exponent: f64,
    /// Strictness parameter `σ < 1` for the output-side admissibility check.
    pub sigma: f64,
}

/// The Gaussian-tempered output weight together with its two certified
/// envelope margins.
pub struct TheoremWeight {
    pub field: ScalarField,
    pub n0: f64,
    /// `min over nodes of ln v₀ - ln v` where
    /// `v₀ = V_α[tempered] · e^{-p|x|²/2} (1+|x|)^{-(2ν+d-1)p}`.
    pub power_cap_margin_log: f64,
    /// `min over nodes of ln v₁ - ln v` where
    /// `v₁ = c_V · e^{-p|x|²/2} (1+|x|)^{-(N-(p-1)dα)}`.
    pub gaussian_cap_margin_log: f64,
    /// `ln c_V`, the certified constant cap of the tempered `V_α`.
    pub cap_constant_log: f64,
}

/// Builds `v = [mloc(w^{-p'/p} e^{-p'|y|²/2})]^{-α(p-1)} e^{-p|x|²/2} (1+|x|)^{-N}`
/// and certifies it under both of its envelope caps: the pointwise product
/// cap `v ≤ v₀` (pure power bookkeeping) and the constant cap `v ≤ v₁`,
/// which rests on the unit-ball lower bound for the maximal average.
pub fn build_theorem_weight(
    p_params: &Params,
    wp: &WeightPair,
    spec: &TheoremWeightSpec,
    grid: &Grid,
) -> Result<TheoremWeight, WeightsError> {
    if !(spec.alpha > 1.0) {
        return Err(WeightsError::BadConfig(format!(
            "need alpha > 1, got {}",
            spec.alpha
        )));
    }
    let n0 = decay_threshold(p_params, wp.p, spec.alpha);
    if !(spec.n_exponent > n0) {
        return Err(WeightsError::BelowThreshold { n: spec.n_exponent, n0 });
    }
    let varpi = wp.tempered_sigma_weight();
    for (_, y) in grid.nodes() {
        let v = varpi.eval(&y)?;
        if v.is_nan() || v.logmag() == f64::INFINITY {
            return Err(WeightsError::SigmaNotIntegrable { point: y });
        }
    }
    let (_, ladder, msamples) = mloc_samples(&varpi, grid)?;
    let d = grid.dim() as f64;
    let p = wp.p;
    let e = -(p - 1.0) * spec.alpha;
    let ell = (2.0 * p_params.nu() + d - 1.0) * p;
    let m_exp = spec.n_exponent - (p - 1.0) * d * spec.alpha;

    let c_varpi = unit_ball_average(&varpi, grid)?;
    let slack = 0.9 * ladder_max_ratio(&ladder).powi(-(grid.dim() as i32));
    let cap_constant_log = e * (c_varpi * slack).ln();

    let mut values = Vec::with_capacity(grid.len());
    let mut power_margin = f64::INFINITY;
    let mut gauss_margin = f64::INFINITY;
    let mut worst_power = Vec::new();
    let mut worst_gauss = Vec::new();
    for ((_, y), m) in grid.nodes().zip(&msamples) {
        if !(*m > 0.0) {
            return Err(WeightsError::BadConfig(format!(
                "local maximal average vanished at {y:?}; grid too sparse for the weight"
            )));
        }
        let r = euclid(&y);
        let gauss_log = -0.5 * p * r * r;
        let v_log = e * m.ln() + gauss_log - spec.n_exponent * (1.0 + r).ln();
        let v_aux_log = e * m.ln() + e * d * (1.0 + r).ln();
        let v0_log = v_aux_log + gauss_log - ell * (1.0 + r).ln();
        let v1_log = cap_constant_log + gauss_log - m_exp * (1.0 + r).ln();
        if v0_log - v_log < power_margin {
            power_margin = v0_log - v_log;
            worst_power = y.clone();
        }
        if v1_log - v_log < gauss_margin {
            gauss_margin = v1_log - v_log;
            worst_gauss = y.clone();
        }
        values.push(LogScalar::from_log(v_log));
    }
    if power_margin < -1e-9 {
        return Err(WeightsError::CapExceeded {
            cap: "power-envelope",
            point: worst_power,
            excess: -power_margin,
        });
    }
    if gauss_margin < -1e-9 {
        return Err(WeightsError::CapExceeded {
            cap: "gaussian-envelope",
            point: worst_gauss,
            excess: -gauss_margin,
        });
    }
    let field = ScalarField::Samples(std::sync::Arc::new(GridField::new(
        grid.clone(),
        values,
    )?));
    Ok(TheoremWeight {
        field,
        n0,
        power_cap_margin_log: power_margin,
        gaussian_cap_margin_log: gauss_margin,
        cap_constant_log,
    })
}

/// A reproducible non-negative test profile: bump mixtures, critically
/// tempered Gaussian-growth profiles (built in log domain so `e^{+|y|²/2}`
/// factors never overflow), or stacks of box indicators.
pub fn random_admissible_profile(
    rng: &mut ChaCha8Rng,
    d: usize,
    extent: f64,
) -> (ScalarField, String) {
    match rng.gen_range(0..3u32) {
        0 => {
            let k = rng.gen_range(1..=4usize);
            let mut bumps = Vec::with_capacity(k);
            for _ in 0..k {
                let c: Vec<f64> =
                    (0..d).map(|_| rng.gen_range(-0.6 * extent..0.6 * extent)).collect();
                let s = 10f64.powf(rng.gen_range(-1.0..0.3));
                let a = 10f64.powf(rng.gen_range(-1.0..1.0));
                bumps.push((c, s, a));
            }
            let desc = format!("bumps{bumps:.3?}");
            let f = ScalarField::from_fn(move |y| {
                LogScalar::sum(bumps.iter().map(|(c, s, a)| {
                    let q: f64 =
                        y.iter().zip(c).map(|(yi, ci)| (yi - ci) * (yi - ci)).sum();
                    LogScalar::from_log(a.ln() - 0.5 * q / (s * s))
                }))
            });
            (f, desc)
        }
        1 => {
            let beta = rng.gen_range(0.55..1.2);
            let a_log = rng.gen_range(-1.2..1.2);
            let c: Vec<f64> =
                (0..d).map(|_| rng.gen_range(-0.3 * extent..0.3 * extent)).collect();
            let desc = format!("tempered[beta={beta:.3}, a_log={a_log:.3}, c={c:.3?}]");
            let f = ScalarField::from_fn(move |y| {
                let q: f64 = y.iter().zip(&c).map(|(yi, ci)| (yi - ci) * (yi - ci)).sum();
                let r2: f64 = y.iter().map(|v| v * v).sum();
                LogScalar::from_log(a_log + 0.5 * r2 - beta * q)
            });
            (f, desc)
        }
        _ => {
            let k = rng.gen_range(1..=5usize);
            let mut boxes = Vec::with_capacity(k);
            for _ in 0..k {
                let c: Vec<f64> =
                    (0..d).map(|_| rng.gen_range(-0.8 * extent..0.8 * extent)).collect();
                let h = 10f64.powf(rng.gen_range(-1.0..0.5));
                let a = 10f64.powf(rng.gen_range(-1.0..1.0));
                boxes.push((c, h, a));
            }
            let desc = format!("stack{boxes:.3?}");
            let f = ScalarField::from_real_fn(move |y| {
                boxes
                    .iter()
                    .filter(|(c, h, _)| y.iter().zip(c).all(|(yi, ci)| (yi - ci).abs() <= *h))
                    .map(|(_, _, a)| a)
                    .sum()
            });
            (f, desc)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferVerdict {
    Pass,
    Fail,
    /// Boundary configuration (α ≤ 1): reported, never asserted.
    Diagnostic,
}

#[derive(Debug, Clone)]
pub struct TwoWeightReport {
    /// Largest trial ratio `‖mloc f‖_{L^p(V_α)} / ‖f‖_{L^p(w)}` on the grid.
    pub sup_ratio: f64,
    /// Same on the once-refined grid.
    pub refined_sup_ratio: f64,
    /// `|refined/coarse - 1|`.
    pub drift: f64,
    pub divergent_witness: Option<String>,
    pub verdict: TransferVerdict,
}

/// Monte-Carlo certificate that the local maximal operator maps
/// `L^p(w) → L^p(V_α)` boundedly: over a seeded family of adversarial
/// profiles the ratio of norms must stay finite, drift at most 20% when the
/// whole pipeline is rebuilt on a refined grid, and no trial may blow up.
pub fn check_two_weight_mloc(
    wp: &WeightPair,
    alpha: f64,
    n_trials: usize,
    seed: u64,
    grid: &Grid,
) -> Result<TwoWeightReport, WeightsError> {
    let diagnostic = !(alpha > 1.0);
    let d = grid.dim();
    let extent = grid
        .axes()
        .iter()
        .map(|ax| ax.iter().fold(0.0f64, |m, &c| m.max(c.abs())))
        .fold(f64::INFINITY, f64::min);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trials: Vec<(ScalarField, String)> =
        (0..n_trials).map(|_| random_admissible_profile(&mut rng, d, extent)).collect();

    let mut sups = Vec::with_capacity(2);
    let mut witness = None;
    for level in [grid.clone(), grid.refined()] {
        let va = v_alpha_unchecked(wp, alpha, &level)?;
        let ladder = mloc_ladder(&level);
        let ratios: Vec<Result<f64, WeightsError>> = trials
            .par_iter()
            .map(|(f, _)| {
                let ev = MlocEvaluator::new(f, &level)?;
                let values: Vec<LogScalar> = level
                    .nodes()
                    .map(|(_, y)| LogScalar::from_real(ev.eval(&y, &ladder).value))
                    .collect();
                let mf = ScalarField::Samples(std::sync::Arc::new(GridField::new(
                    level.clone(),
                    values,
                )?));
                let den = lp_norm_log(f, &wp.w, wp.p, &level)?;
                if den == f64::NEG_INFINITY {
                    return Ok(f64::NEG_INFINITY);
                }
                let num = lp_norm_log(&mf, &va.field, wp.p, &level)?;
                Ok(num - den)
            })
            .collect();
        let mut sup = f64::NEG_INFINITY;
        for (ratio, (_, desc)) in ratios.into_iter().zip(&trials) {
            let r = ratio?;
            if r.is_nan() || r > (1e8f64).ln() {
                witness = Some(desc.clone());
            }
            sup = sup.max(r);
        }
        sups.push(sup.exp());
    }
    let drift = (sups[1] / sups[0] - 1.0).abs();
    let healthy =
        witness.is_none() && sups.iter().all(|s| s.is_finite()) && drift <= 0.20;
    let verdict = if diagnostic {
        TransferVerdict::Diagnostic
    } else if healthy {
        TransferVerdict::Pass
    } else {
        TransferVerdict::Fail
    };
    Ok(TwoWeightReport {
        sup_ratio: sups[0],
        refined_sup_ratio: sups[1],
        drift,
        divergent_witness: witness,
        verdict,
    })
}

#[derive(Debug, Clone)]
pub struct ShellCrossCheck {
    pub direct_log: f64,
    pub decomposed_log: f64,
    pub rel_err: f64,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct GaussIntegrabilityReport {
    /// `(a, verdict)` for `∫ ϖ_W e^{-a|x|²}` over the a-ladder.
    pub hypothesis: Vec<(f64, IntegralVerdict)>,
    pub hypothesis_met: bool,
    /// `(b, verdict)` for `∫ [mloc ϖ_W]^{ασ} (1+|x|)^{dασ} e^{-b|x|²}`.
    pub conclusions: Vec<(f64, IntegralVerdict)>,
    /// Dyadic-shell re-summation of the first conclusion integral (d = 1).
    pub shell: Option<ShellCrossCheck>,
    pub verdict: GaussVerdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaussVerdict {
    Pass,
    Fail,
    HypothesisUnmet,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Certifies Gaussian integrability of the inverse-power output weight
/// built from the tempered reciprocal `ϖ_W = w^{-p'/p} e^{-p'|x|²/2}`:
/// first the hypothesis `∫ ϖ_W e^{-a|x|²} < ∞` over an a-ladder, then
/// `∫ V_α^{-σ/(p-1)} e^{-b|x|²} < ∞` for each requested `b`, plus an
/// independent dyadic-shell decomposition of the same integral (d = 1).
pub fn check_gaussian_integrability(
    wp: &WeightPair,
    alpha: f64,
    sigma: f64,
    b_ladder: &[f64],
    grid: &Grid,
) -> Result<GaussIntegrabilityReport, WeightsError> {
    if !(alpha > 1.0) || !(sigma < 1.0) || !(alpha * sigma < 1.0) {
        return Err(WeightsError::BadConfig(format!(
            "need alpha > 1, sigma < 1 and alpha·sigma < 1 (got alpha={alpha}, sigma={sigma})"
        )));
    }
    let d = grid.dim();
    let varpi = wp.tempered_sigma_weight();
    let eval_grid = if d == 1 {
        Grid::symmetric(1, 64.0, 2049).map_err(WeightsError::Field)?
    } else {
        Grid::symmetric(d, 16.0, 65).map_err(WeightsError::Field)?
    };

    let mut hypothesis = Vec::new();
    let mut hypothesis_met = true;
    for &a in &[0.1, 0.5, 1.0] {
        let vw = varpi.clone();
        let g = ScalarField::from_fn(move |y| {
            let damp = LogScalar::from_log(-a * y.iter().map(|c| c * c).sum::<f64>());
            vw.eval(y).unwrap_or(LogScalar::from_real(f64::NAN)) * damp
        });
        let verdict = nested_box_integral(&g, &eval_grid, 6)?;
        hypothesis_met &= verdict.is_finite();
        hypothesis.push((a, verdict));
    }
    if !hypothesis_met {
        return Ok(GaussIntegrabilityReport {
            hypothesis,
            hypothesis_met,
            conclusions: Vec::new(),
            shell: None,
            verdict: GaussVerdict::HypothesisUnmet,
        });
    }

    let ev = MlocEvaluator::new(&varpi, grid)?;
    let ladder = mloc_ladder(grid);
    let s = alpha * sigma;
    let dd = d as f64;
    let base = move |y: &[f64]| {
        let m = ev.eval(y, &ladder).value;
        LogScalar::from_real(m).powf(s) * LogScalar::from_real(1.0 + euclid(y)).powf(dd * s)
    };
    let base = std::sync::Arc::new(base);

    let mut conclusions = Vec::new();
    for &b in b_ladder {
        let bb = base.clone();
        let g = ScalarField::from_fn(move |y| {
            bb(y) * LogScalar::from_log(-b * y.iter().map(|c| c * c).sum::<f64>())
        });
        conclusions.push((b, nested_box_integral(&g, &eval_grid, 6)?));
    }

    let shell = if d == 1 && !b_ladder.is_empty() {
        let b = b_ladder[0];
        let bb = base.clone();
        let g = ScalarField::from_fn(move |y| {
            bb(y) * LogScalar::from_log(-b * y.iter().map(|c| c * c).sum::<f64>())
        });
        let direct_log = conclusions[0].1.log_value();
        let r_box = 64.0;
        let mut regions: Vec<(f64, f64)> = vec![(-1.0, 1.0)];
        for j in 0..=8 {
            let lo = 2f64.powi(j);
            let hi = (2.0 * lo).min(r_box);
            if lo >= r_box {
                break;
            }
            regions.push((lo, hi));
            regions.push((-hi, -lo));
        }
        let mut parts = Vec::new();
        for (lo, hi) in regions {
            let sub = Grid::new(vec![linspace(lo, hi, 257)]).map_err(WeightsError::Field)?;
            let mut terms = Vec::with_capacity(sub.len());
            for (flat, y) in sub.nodes() {
                terms.push(g.eval(&y)? * LogScalar::from_real(sub.node_measure(flat)));
            }
            parts.push(LogScalar::sum(terms));
        }
        let decomposed_log = LogScalar::sum(parts).logmag();
        let rel_err = ((decomposed_log - direct_log).exp() - 1.0).abs();
        Some(ShellCrossCheck { direct_log, decomposed_log, rel_err, ok: rel_err <= 0.05 })
    } else {
        None
    };

    let all_finite = conclusions.iter().all(|(_, v)| v.is_finite());
    let shell_ok = shell.as_ref().map(|s| s.ok).unwrap_or(true);
    let verdict = if all_finite && shell_ok { GaussVerdict::Pass } else { GaussVerdict::Fail };
    Ok(GaussIntegrabilityReport { hypothesis, hypothesis_met, conclusions, shell, verdict })
}

#[derive(Debug, Clone)]
pub struct ShellStat {
    pub j: usize,
    pub inner_radius: f64,
    pub outer_radius: f64,
    /// `∫_{S_j} w_ε^{-p'/p}`.
    pub sigma_mass: f64,
    /// `∫_{S_j} V`.
    pub v_mass: f64,
    /// Smallest sampled `mloc(f_j)(x) · 2^{jd} / sigma_mass`, x ∈ S_j.
    pub kappa_observed: f64,
    /// Geometry floor the observation must clear.
    pub kappa_certified: f64,
    /// `‖mloc f_j‖_{L^p(V)} / ‖f_j‖_{L^p(w_ε)}`.
    pub operator_ratio: f64,
    /// `[∫_{S_j} w_ε^{-p'/p}]^{1/p'}`.
    pub lhs: f64,
    /// `2^{jd} / V(S_j)^{1/p}`.
    pub rhs_factor: f64,
    pub geometry_ok: bool,
}

#[derive(Debug, Clone)]
pub struct NecessityReport {
    pub shells: Vec<ShellStat>,
    /// Single constant `max_j operator_ratio / min_j kappa_observed`
    /// closing the chain `lhs ≤ C · rhs_factor` on every shell.
    pub c_constant: f64,
    pub chain_ok: bool,
    pub geometry_ok: bool,
    pub kappa_ok: bool,
    pub pass: bool,
}

/// Probes, shell by shell, why a bounded transfer `mloc: L^p(w) → L^p(V)`
/// forces local integrability of `w^{-p'/p}`: feed the operator the
/// indicator profiles `f_j = (w+ε)^{-p'/p} χ_{S_j}` on dyadic shells
/// (`S₀ = B₁`, `S_j = {2^{j-1} ≤ |x| < 2^j}`), confirm the ball of radius
/// `2^j + |x|` around any `x ∈ S_j` swallows the whole shell inside the
/// mask, and assemble the inequality
/// `[∫_{S_j} w_ε^{-p'/p}]^{1/p'} ≤ C · 2^{jd} / V(S_j)^{1/p}`
/// with `C` read off the observed operator and geometry constants.
/// Diagnostic: the report records everything, the caller decides.
pub fn necessity_probe(
    wp: &WeightPair,
    v: &ScalarField,
    epsilon: f64,
    j_max: usize,
    grid: &Grid,
) -> Result<NecessityReport, WeightsError> {
    if !(epsilon > 0.0) {
        return Err(WeightsError::BadConfig("epsilon must be positive".into()));
    }
    let d = grid.dim();
    let r_box = grid
        .axes()
        .iter()
        .map(|ax| ax.iter().fold(0.0f64, |m, &c| m.max(c.abs())))
        .fold(f64::INFINITY, f64::min);
    if r_box < 2f64.powi(j_max as i32) {
        return Err(WeightsError::BadConfig(format!(
            "grid box {r_box} does not contain the outermost shell radius {}",
            2f64.powi(j_max as i32)
        )));
    }
    let w = wp.w.clone();
    let pc_over_p = wp.p_conj() / wp.p;
    let varpi_eps = ScalarField::from_fn(move |y| {
        let wv = w.eval(y).map(|v| v.to_real()).unwrap_or(f64::NAN);
        LogScalar::from_real(wv + epsilon).powf(-pc_over_p)
    });
    let w_eps = {
        let w = wp.w.clone();
        ScalarField::from_fn(move |y| {
            let wv = w.eval(y).map(|v| v.to_real()).unwrap_or(f64::NAN);
            LogScalar::from_real(wv + epsilon)
        })
    };
    let ladder = mloc_ladder(grid);
    let lratio = ladder_max_ratio(&ladder);
    // r = 2^j + |x| < 2^{j+1} on the shell; one ladder rung and the cell
    // overhang of the discrete ball measure pad the denominator.
    let kappa_certified = 1.0 / (unit_ball_volume(d) * (2.0 * lratio).powi(d as i32) * 1.05);

    let mut shells = Vec::new();
    for j in 0..=j_max {
        let (lo, hi) = if j == 0 { (0.0, 1.0) } else { (2f64.powi(j as i32 - 1), 2f64.powi(j as i32)) };
        let in_shell = move |y: &[f64]| {
            let r = euclid(y);
            r >= lo && r < hi
        };
        let ve = varpi_eps.clone();
        let f_j = ScalarField::from_fn(move |y| {
            if in_shell(y) {
                ve.eval(y).unwrap_or(LogScalar::from_real(f64::NAN))
            } else {
                LogScalar::zero()
            }
        });

        let mut sigma_mass = 0.0;
        let mut v_mass = 0.0;
        let mut shell_nodes = Vec::new();
        for (flat, y) in grid.nodes() {
            if in_shell(&y) {
                sigma_mass += varpi_eps.eval(&y)?.to_real() * grid.node_measure(flat);
                v_mass += v.eval(&y)?.to_real() * grid.node_measure(flat);
                shell_nodes.push(y);
            }
        }
        if shell_nodes.is_empty() || !(sigma_mass > 0.0) {
            return Err(WeightsError::BadConfig(format!(
                "shell {j} holds no grid mass; refine the grid"
            )));
        }

        let ev = MlocEvaluator::new(&f_j, grid)?;
        let stride = (shell_nodes.len() / 21).max(1);
        let scale = 2f64.powi((j * d) as i32);
        let mut kappa_observed = f64::INFINITY;
        let mut geometry_ok = true;
        for x in shell_nodes.iter().step_by(stride) {
            let m = ev.eval(x, &ladder).value;
            kappa_observed = kappa_observed.min(m * scale / sigma_mass);
            let r = 2f64.powi(j as i32) + euclid(x);
            let cut = 3.0 * euclid(x).max(1.0);
            for y in &shell_nodes {
                let dist =
                    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                if dist > r || euclid(y) > cut {
                    geometry_ok = false;
                }
            }
        }

        let mvals: Vec<LogScalar> = grid
            .nodes()
            .map(|(_, y)| LogScalar::from_real(ev.eval(&y, &ladder).value))
            .collect();
        let mf =
            ScalarField::Samples(std::sync::Arc::new(GridField::new(grid.clone(), mvals)?));
        let num = lp_norm_log(&mf, v, wp.p, grid)?;
        let den = lp_norm_log(&f_j, &w_eps, wp.p, grid)?;
        let operator_ratio = (num - den).exp();

        shells.push(ShellStat {
            j,
            inner_radius: lo,
            outer_radius: hi,
            sigma_mass,
            v_mass,
            kappa_observed,
            kappa_certified,
            operator_ratio,
            lhs: sigma_mass.powf(1.0 / wp.p_conj()),
            rhs_factor: scale / v_mass.powf(1.0 / wp.p),
            geometry_ok,
        });
    }

    let c_constant = shells.iter().map(|s| s.operator_ratio).fold(0.0, f64::max)
        / shells.iter().map(|s| s.kappa_observed).fold(f64::INFINITY, f64::min);
    let chain_ok = shells.iter().all(|s| s.lhs <= c_constant * s.rhs_factor * (1.0 + 1e-9));
    let geometry_ok = shells.iter().all(|s| s.geometry_ok);
    let kappa_ok = shells.iter().all(|s| s.kappa_observed >= s.kappa_certified);
    Ok(NecessityReport {
        shells,
        c_constant,
        chain_ok,
        geometry_ok,
        kappa_ok,
        pass: chain_ok && geometry_ok && kappa_ok,
    })
}

#[derive(Debug, Clone)]
pub struct EndToEndOpts {
    /// Time horizon of the maximal function.
    pub a: f64,
    pub n_trials: usize,
    pub seed: u64,
    /// Keep every `t_stride`-th rung of the time ladder.
    pub t_stride: usize,
    pub quad: QuadSpec,
    pub apply: ApplyOpts,
}

#[derive(Debug, Clone)]
pub struct EndToEndReport {
    /// Largest `‖sup_{t<a}|P_t f|‖_{L^p(v)} / ‖f‖_{L^p(w)}` over the trials.
    pub c_hat: f64,
    /// Same with the evaluation grid refined once.
    pub c_refined: f64,
    pub drift: f64,
    pub pass: bool,
}

/// End-to-end certificate: the semigroup maximal function maps `L^p(w)`
/// into `L^p(v)` for the constructed `v`, with the empirical constant
/// stable (≤ 20% drift) when the evaluation grid is refined.
pub fn check_end_to_end_bound(
    p_params: &Params,
    wp: &WeightPair,
    spec: &TheoremWeightSpec,
    xgrid: &Grid,
    sample_grid: &Grid,
    opts: &EndToEndOpts,
) -> Result<EndToEndReport, WeightsError> {
    let tw = build_theorem_weight(p_params, wp, spec, sample_grid)?;
    let d = sample_grid.dim();
    let extent = 0.5
        * sample_grid
            .axes()
            .iter()
            .map(|ax| ax.iter().fold(0.0f64, |m, &c| m.max(c.abs())))
            .fold(f64::INFINITY, f64::min);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let trials: Vec<(ScalarField, String)> =
        (0..opts.n_trials).map(|_| random_admissible_profile(&mut rng, d, extent)).collect();
    let t_ladder: Vec<f64> =
        MaximalSpec::t_ladder(opts.a).into_iter().step_by(opts.t_stride.max(1)).collect();
    let mspec = MaximalSpec { radius_ladder: mloc_ladder(sample_grid), t_ladder };

    let mut cs = Vec::with_capacity(2);
    for level in [xgrid.clone(), xgrid.refined()] {
        let mut c_level = f64::NEG_INFINITY;
        for (f, _) in &trials {
            let nodes: Vec<Vec<f64>> = level.nodes().map(|(_, y)| y).collect();
            let vals: Vec<Result<LogScalar, WeightsError>> = nodes
                .par_iter()
                .map(|x| {
                    let r = poisson_maximal(p_params, opts.a, f, x, &mspec, &opts.quad, &opts.apply)?;
                    Ok(LogScalar::from_real(r.value))
                })
                .collect();
            let mut samples = Vec::with_capacity(vals.len());
            for v in vals {
                samples.push(v?);
            }
            let pf = ScalarField::Samples(std::sync::Arc::new(GridField::new(
                level.clone(),
                samples,
            )?));
            let den = lp_norm_log(f, &wp.w, wp.p, sample_grid)?;
            if den == f64::NEG_INFINITY {
                continue;
            }
            let num = lp_norm_log(&pf, &tw.field, wp.p, &level)?;
            c_level = c_level.max(num - den);
        }
        cs.push(c_level.exp());
    }
    let drift = (cs[1] / cs[0] - 1.0).abs();
    Ok(EndToEndReport {
        c_hat: cs[0],
        c_refined: cs[1],
        drift,
        pass: cs.iter().all(|c| c.is_finite()) && drift <= 0.20,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gaussian_weight_field(gamma: f64) -> ScalarField {
        ScalarField::from_fn(move |y| {
            LogScalar::from_log(-gamma * y.iter().map(|c| c * c).sum::<f64>())
        })
    }

    fn flat_weight() -> ScalarField {
        ScalarField::from_real_fn(|_| 1.0)
    }

    fn simpson(g: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        assert!(n % 2 == 0);
        let h = (b - a) / n as f64;
        let mut s = g(a) + g(b);
        for i in 1..n {
            s += g(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn weight_pair_exponent_identities() {
        let wp = WeightPair::new(gaussian_weight_field(1.0), 3.0).unwrap();
        assert_relative_eq!(wp.p_conj(), 1.5, epsilon = 1e-15);
        let sigma = wp.sigma_weight();
        let tempered = wp.tempered_sigma_weight();
        let lifted = wp.gaussian_weight();
        for &x in &[0.0, 0.7, -1.3, 2.9] {
            let y = [x];
            // σ · w^{1/(p-1)} = 1
            let prod = sigma.eval(&y).unwrap() * wp.weight().eval(&y).unwrap().powf(0.5);
            assert_relative_eq!(prod.to_real(), 1.0, epsilon = 1e-12);
            // W^{-1/(p-1)} computed through W matches the direct formula.
            let via_lift = lifted.eval(&y).unwrap().powf(-0.5);
            assert_relative_eq!(
                via_lift.logmag(),
                tempered.eval(&y).unwrap().logmag(),
                epsilon = 1e-10
            );
        }
        let tripled = wp.scaled(3.0);
        let r = tripled.weight().eval(&[0.7]).unwrap() / wp.weight().eval(&[0.7]).unwrap();
        assert_relative_eq!(r.to_real(), 3.0, epsilon = 1e-12);
        assert!(WeightPair::new(flat_weight(), 1.0).is_err());
    }

    #[test]
    fn dp_norm_separates_admissible_from_inadmissible() {
        let grid = Grid::symmetric(1, 512.0, 4097).unwrap();

        // Reciprocal of e^{-|x|²} cancels the envelope's Gaussian exactly,
        // leaving (1+|x|)^{-1} ln(e+|x|)^{-3}: finite, heavy tail.
        let p1 = Params::new(1, 0.0, 0.5).unwrap();
        let wp1 = WeightPair::new(gaussian_weight_field(1.0), 2.0).unwrap();
        let verdict = dp_norm(&p1, &wp1, &grid).unwrap();
        let IntegralVerdict::Finite { log_value, tail_ratio } = verdict else {
            panic!("expected a finite verdict, got {verdict:?}");
        };
        assert!(tail_ratio < 0.05, "tail ratio {tail_ratio}");
        let reduced = |x: f64| ((1.0 + x.abs()) * (std::f64::consts::E + x.abs()).ln().powi(3)).recip();
        let oracle = 2.0 * simpson(reduced, 0.0, 512.0, 40_000);
        assert_relative_eq!((log_value * wp1.p_conj()).exp(), oracle, max_relative = 0.02);

        // Too much Gaussian decay: the reduced integrand grows like e^{+|x|²}.
        let wp2 = WeightPair::new(gaussian_weight_field(2.0), 2.0).unwrap();
        let verdict = dp_norm(&p1, &wp2, &grid).unwrap();
        let IntegralVerdict::Divergent { growth_ratio, .. } = verdict else {
            panic!("expected divergence, got {verdict:?}");
        };
        assert!(growth_ratio > 10.0);

        // Unweighted case: envelope power p'(d+m)/2 = 3 beats d = 1.
        let p3 = Params::new(1, 2.0, 0.5).unwrap();
        let wp3 = WeightPair::new(flat_weight(), 2.0).unwrap();
        let verdict = dp_norm(&p3, &wp3, &grid).unwrap();
        assert!(verdict.is_finite());
        let IntegralVerdict::Finite { tail_ratio, .. } = verdict else { unreachable!() };
        assert!(tail_ratio < 1e-6, "Gaussian-killed tail, got {tail_ratio}");
    }

    #[test]
    fn flat_weight_power_cap_is_exact() {
        let grid = Grid::symmetric(1, 8.0, 401).unwrap();
        let wp = WeightPair::new(flat_weight(), 2.0).unwrap();
        let va = build_v_alpha(&wp, 2.0, &grid).unwrap();
        for (_, y) in grid.nodes() {
            let expect = (1.0 + y[0].abs()).powi(-2);
            assert_relative_eq!(
                va.field.eval(&y).unwrap().to_real(),
                expect,
                max_relative = 1e-12
            );
        }
        assert!(va.min_value > 0.0);
        assert!(va.max_value <= va.cap);
        assert_relative_eq!(va.c_sigma, 1.0, epsilon = 1e-12);
        assert!(matches!(
            build_v_alpha(&wp, 1.0, &grid),
            Err(WeightsError::BadConfig(_))
        ));
    }

    /// Continuous local maximal function of e^{|y|²} at x, by Simpson
    /// integration over a dense multiplicative radius ladder. Balls are
    /// clipped to the sampling box `[-box_r, box_r]` in both numerator and
    /// denominator, mirroring how a grid-backed evaluator sees them.
    fn oracle_mloc_growth(x: f64, box_r: f64) -> f64 {
        let cut = 3.0 * x.abs().max(1.0);
        let g = |y: f64| (y * y).exp();
        let mut best = 0.0f64;
        let mut r = 1e-3;
        while r < 40.0 {
            let lo = (x - r).max(-cut.min(box_r));
            let hi = (x + r).min(cut.min(box_r));
            let den = (x + r).min(box_r) - (x - r).max(-box_r);
            if hi > lo {
                best = best.max(simpson(g, lo, hi, 2000) / den);
            }
            r *= 1.01;
        }
        best
    }

    #[test]
    fn gaussian_weight_maximal_average_matches_quadrature_oracle() {
        let grid = Grid::symmetric(1, 8.0, 801).unwrap();
        let wp = WeightPair::new(gaussian_weight_field(1.0), 2.0).unwrap();
        let sigma = wp.sigma_weight();
        let ev = MlocEvaluator::new(&sigma, &grid).unwrap();
        let mut fine = vec![0.02f64];
        while *fine.last().unwrap() < 32.0 {
            let next = fine.last().unwrap() * 1.01;
            fine.push(next);
        }
        let alpha = 1.5;
        let va = build_v_alpha(&wp, alpha, &grid).unwrap();
        let h = grid.min_spacing();
        for &x in &[0.0, 1.0, 2.0] {
            let oracle = oracle_mloc_growth(x, 8.0);
            let got = ev.eval(&[x], &fine).value;
            // Boundary cells overhang the mask edge by h/2, and there the
            // integrand varies by e^{2·cut·h/2} per cell — the discrete
            // average may legitimately sit above the continuous one by
            // about that factor, and below it by one ladder rung.
            let cut = 3.0 * x.abs().max(1.0);
            let overshoot = (cut * h).exp_m1() + 0.03;
            assert!(
                got <= oracle * (1.0 + overshoot) && got >= oracle * 0.95,
                "x={x}: discrete {got} vs oracle {oracle} (allowed +{overshoot:.3})"
            );
            // The assembled weight, against the oracle-powered value; the
            // built-in ladder is coarser, so the band is wider.
            let v_oracle = oracle.powf(-1.0 * alpha) * (1.0 + x.abs()).powf(-1.0 * alpha);
            let v_got = va.field.eval(&[x]).unwrap().to_real();
            assert_relative_eq!(v_got, v_oracle, max_relative = 0.2);
        }
    }

    #[test]
    fn v_alpha_rejects_weights_with_zeros() {
        let grid = Grid::symmetric(1, 4.0, 161).unwrap();
        let wp = WeightPair::new(ScalarField::from_real_fn(|y| y[0] * y[0]), 2.0).unwrap();
        assert!(matches!(
            build_v_alpha(&wp, 1.5, &grid),
            Err(WeightsError::SigmaNotIntegrable { .. })
        ));
    }

    #[test]
    fn decay_threshold_matches_hand_value_and_gates() {
        let p = Params::new(1, 0.0, 0.5).unwrap();
        assert_eq!(decay_threshold(&p, 2.0, 1.5), 3.5);

        let grid = Grid::symmetric(1, 16.0, 801).unwrap();
        let wp = WeightPair::new(gaussian_weight_field(1.0), 2.0).unwrap();
        let at = TheoremWeightSpec { alpha: 1.5, n_exponent: 3.5, sigma: 0.5 };
        match build_theorem_weight(&p, &wp, &at, &grid) {
            Err(WeightsError::BelowThreshold { n, n0 }) => {
                assert_eq!(n, 3.5);
                assert_eq!(n0, 3.5);
            }
            other => panic!("expected threshold rejection, got {:?}", other.is_ok()),
        }

        let spec = TheoremWeightSpec { alpha: 1.5, n_exponent: 5.0, sigma: 0.5 };
        let tw = build_theorem_weight(&p, &wp, &spec, &grid).unwrap();
        assert!(tw.power_cap_margin_log >= 0.0);
        assert!(tw.gaussian_cap_margin_log >= 0.0);
        assert_eq!(tw.n0, 3.5);

        let out = dpe_norm(&p, &tw.field, wp.p(), spec.sigma, &grid).unwrap();
        assert!(out.is_finite(), "output-side admissibility failed: {out:?}");
    }

    #[test]
    fn theorem_weight_scales_exactly_with_the_input_weight() {
        let p = Params::new(1, 0.0, 0.5).unwrap();
        let grid = Grid::symmetric(1, 8.0, 241).unwrap();
        let spec = TheoremWeightSpec { alpha: 1.5, n_exponent: 5.0, sigma: 0.5 };
        let wp = WeightPair::new(gaussian_weight_field(1.0), 2.0).unwrap();
        let tw = build_theorem_weight(&p, &wp, &spec, &grid).unwrap();
        let tw3 = build_theorem_weight(&p, &wp.scaled(3.0), &spec, &grid).unwrap();
        let factor = 3f64.powf(spec.alpha);
        for (_, y) in grid.nodes().step_by(17) {
            let a = tw.field.eval(&y).unwrap().to_real();
            let b = tw3.field.eval(&y).unwrap().to_real();
            assert_relative_eq!(b / a, factor, max_relative = 1e-10);
        }
    }

    #[test]
    fn two_weight_transfer_is_stable_for_reference_weights() {
        let grid = Grid::symmetric(1, 12.0, 241).unwrap();
        let flat = WeightPair::new(flat_weight(), 2.0).unwrap();
        let report = check_two_weight_mloc(&flat, 2.0, 40, 7, &grid).unwrap();
        assert_eq!(report.verdict, TransferVerdict::Pass, "{report:?}");
        assert!(report.sup_ratio.is_finite() && report.sup_ratio > 0.0);

        let gauss = WeightPair::new(gaussian_weight_field(1.0), 2.0).unwrap();
        let report = check_two_weight_mloc(&gauss, 1.5, 30, 7, &grid).unwrap();
        assert_eq!(report.verdict, TransferVerdict::Pass, "{report:?}");
    }

    #[test]
    fn alpha_at_the_boundary_is_diagnostic_only() {
        let grid = Grid::symmetric(1, 12.0, 241).unwrap();
        let flat = WeightPair::new(flat_weight(), 2.0).unwrap();
        let report = check_two_weight_mloc(&flat, 1.0, 20, 3, &grid).unwrap();
        assert_eq!(report.verdict, TransferVerdict::Diagnostic);
    }

    #[test]
    fn gaussian_integrability_certificate_and_shells() {
        let grid = Grid::symmetric(1, 16.0, 801).unwrap();
        let wp = WeightPair::new(gaussian_weight_field(1.0), 2.0).unwrap();
        let report = check_gaussian_integrability(&wp, 1.5, 0.5, &[0.1, 1.0], &grid).unwrap();
        assert!(report.hypothesis_met, "{:?}", report.hypothesis);
        assert_eq!(report.verdict, GaussVerdict::Pass);
        assert!(report.conclusions.iter().all(|(_, v)| v.is_finite()));
        let shell = report.shell.expect("1-D run performs the shell cross-check");
        assert!(shell.ok, "shell decomposition off by {}", shell.rel_err);

        // Over-damped input: the tempered reciprocal grows like e^{+|x|²},
        // no Gaussian on the ladder can absorb it.
        let wp2 = WeightPair::new(gaussian_weight_field(2.0), 2.0).unwrap();
        let report = check_gaussian_integrability(&wp2, 1.5, 0.5, &[0.1, 1.0], &grid).unwrap();
        assert_eq!(report.verdict, GaussVerdict::HypothesisUnmet);
        assert!(report.conclusions.is_empty());
    }

    #[test]
    fn necessity_chain_holds_on_dyadic_shells() {
        let grid = Grid::symmetric(1, 32.0, 1281).unwrap();
        let wp = WeightPair::new(flat_weight(), 2.0).unwrap();
        let va = build_v_alpha(&wp, 2.0, &grid).unwrap();
        let report = necessity_probe(&wp, &va.field, 1e-2, 5, &grid).unwrap();
        assert!(report.pass, "{report:?}");
        assert_eq!(report.shells.len(), 6);
        assert!(report.kappa_ok && report.geometry_ok && report.chain_ok);

        let report2 = necessity_probe(&wp, &va.field, 1e-4, 5, &grid).unwrap();
        assert!(report2.pass);
        assert_relative_eq!(report.c_constant, report2.c_constant, max_relative = 0.05);
    }

    #[test]
    fn admissible_norm_dominates_envelope_pairings() {
        // Discrete Hölder on a shared grid: ∫|f|φ ≤ ‖f‖_{L^p(w)} · ‖w^{-1/p}φ‖_{p'}.
        let p = Params::new(1, 0.0, 0.5).unwrap();
        let grid = Grid::symmetric(1, 16.0, 801).unwrap();
        let wp = WeightPair::new(gaussian_weight_field(1.0), 2.0).unwrap();
        let dp = dp_norm(&p, &wp, &grid).unwrap();
        let dp_log = dp.log_value();
        assert!(dp_log.is_finite());
        let pars = p.clone();
        let phi_field = ScalarField::from_fn(move |y| phi(&pars, y));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let (f, desc) = random_admissible_profile(&mut rng, 1, 16.0);
            let pairing = lp_norm_log(&f, &phi_field, 1.0, &grid).unwrap();
            let norm = lp_norm_log(&f, wp.weight(), wp.p(), &grid).unwrap();
            assert!(
                pairing <= norm + dp_log + 1e-9,
                "Hölder violated for {desc}: {pairing} vs {}",
                norm + dp_log
            );
        }
    }
}
