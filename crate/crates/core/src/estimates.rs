//! Certificates for the kernel's stationary envelope and its refinements.
//!
//! The central object is the envelope `φ(y)`: a Gaussian times a power of
//! `1 + |y|` times a power of `ln(e + |y|)`, with exponents determined by
//! the operator parameters. For fixed `t` and `x` the kernel is comparable
//! to `φ` — bounded above *and* below by constant multiples — and the
//! functions here measure that comparison numerically: the two-sided band,
//! a refined upper bound with a sharper near-diagonal factor, the split of
//! the kernel into its short-time and long-time halves, and the elementary
//! logarithm inequality that the comparison argument leans on.

use crate::logscalar::LogScalar;
use crate::poisson::{poisson_kernel, poisson_kernel_split, KernelRoute, PoissonError};
use crate::quad::QuadSpec;
use crate::special::Params;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::E;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EstimatesError {
    #[error("kernel evaluation failed: {0}")]
    Poisson(#[from] PoissonError),
    #[error("bad configuration: {0}")]
    BadConfig(String),
}

/// The stationary envelope `φ`, with optional exponent perturbations.
///
/// The perturbation knobs exist so that harnesses can check their own
/// sensitivity: a detector that accepts a perturbed envelope as readily as
/// the true one is not measuring anything. `new` gives the true envelope.
#[derive(Debug, Clone)]
pub struct Envelope {
    params: Params,
    log_exponent_delta: f64,
    power_exponent_delta: f64,
}

impl Envelope {
    pub fn new(params: Params) -> Self {
        Envelope { params, log_exponent_delta: 0.0, power_exponent_delta: 0.0 }
    }

    /// Envelope with the `ln(e + |y|)` exponent shifted by `delta`.
    pub fn with_log_exponent_delta(params: Params, delta: f64) -> Self {
        Envelope { params, log_exponent_delta: delta, power_exponent_delta: 0.0 }
    }

    /// The bare Gaussian `e^{-|y|²/2}` with both correction factors
    /// removed — a deliberately wrong envelope for detector tests.
    pub fn bare_gaussian(params: Params) -> Self {
        let log_e = if params.critical() { params.nu() } else { 1.0 + params.nu() };
        let pow_e = if params.critical() {
            0.0
        } else {
            0.5 * (params.d() as f64 + params.m())
        };
        Envelope { params, log_exponent_delta: -log_e, power_exponent_delta: -pow_e }
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    /// Exponent on `ln(e + |y|)` after perturbation.
    pub fn log_exponent(&self) -> f64 {
        let base = if self.params.critical() { self.params.nu() } else { 1.0 + self.params.nu() };
        base + self.log_exponent_delta
    }

    /// Exponent on `1 + |y|` after perturbation.
    pub fn power_exponent(&self) -> f64 {
        let base = if self.params.critical() {
            0.0
        } else {
            0.5 * (self.params.d() as f64 + self.params.m())
        };
        base + self.power_exponent_delta
    }

    /// `φ(y)` as a function of the radius `|y|`.
    pub fn eval_radius(&self, r: f64) -> LogScalar {
        let log = -0.5 * r * r
            - self.power_exponent() * r.ln_1p()
            - self.log_exponent() * (E + r).ln().ln();
        LogScalar::from_log(log)
    }

    pub fn eval(&self, y: &[f64]) -> LogScalar {
        let r = y.iter().map(|c| c * c).sum::<f64>().sqrt();
        self.eval_radius(r)
    }
}

/// The stationary envelope `φ(y)` for the given parameters.
///
/// Away from the borderline shift `m = -d` this is
/// `e^{-|y|²/2} (1+|y|)^{-(d+m)/2} (ln(e+|y|))^{-(1+ν)}`; at the
/// borderline the power factor disappears and the logarithm's exponent
/// drops to `ν`.
pub fn phi(p: &Params, y: &[f64]) -> LogScalar {
    Envelope::new(p.clone()).eval(y)
}

/// Axis directions plus the two diagonal directions, all unit length.
fn probe_directions(d: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for i in 0..d {
        for sgn in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[i] = sgn;
            dirs.push(e);
        }
    }
    if d > 1 {
        let c = (d as f64).sqrt().recip();
        dirs.push(vec![c; d]);
        dirs.push(vec![-c; d]);
    }
    dirs
}

/// Log-spaced radius ladder, suited to [`check_envelope_two_sided`]: the
/// slope detector needs several points inside the outermost decade.
pub fn radius_ladder(r_min: f64, r_max: f64, n: usize) -> Vec<f64> {
    assert!(r_min > 0.0 && r_max > r_min && n >= 2);
    let lo = r_min.ln();
    let hi = r_max.ln();
    (0..n).map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp()).collect()
}

#[derive(Debug, Clone)]
pub struct TwoSidedOpts {
    /// Maximum allowed ratio between the largest and smallest value of
    /// `p_t(x,·)/φ` over the probe set.
    pub band: f64,
    /// Maximum allowed log-log slope of the ratio over the outermost
    /// decade of radii. A correct envelope leaves the ratio drifting
    /// slower than any power; a wrong logarithm exponent shows up as a
    /// persistent slope of order `1/ln r`.
    pub slope_tol: f64,
    pub quad: QuadSpec,
}

impl Default for TwoSidedOpts {
    fn default() -> Self {
        TwoSidedOpts {
            band: 1e4,
            slope_tol: 0.12,
            quad: QuadSpec { rel_tol: 1e-8, ..QuadSpec::default() },
        }
    }
}

#[derive(Debug, Clone)]
pub struct TwoSidedReport {
    pub min_log_ratio: f64,
    pub max_log_ratio: f64,
    /// `max_log_ratio - min_log_ratio`.
    pub spread_log: f64,
    /// Fitted log-log slopes of the per-radius max and min of the ratio
    /// over the outermost decade.
    pub outer_slope_hi: f64,
    pub outer_slope_lo: f64,
    pub argmin: Vec<f64>,
    pub argmax: Vec<f64>,
    pub band_ok: bool,
    pub slope_ok: bool,
    pub pass: bool,
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// Certifies that `p_t(x,·)` sits inside a constant band around the
/// envelope: the ratio `p_t(x,y)/φ(y)` over the probe set must stay
/// positive, within a bounded band, and free of power-law drift across
/// the outermost decade of radii. The last test is what separates the
/// true envelope from one with the wrong logarithm exponent, whose ratio
/// drifts like a power of `ln|y|`.
pub fn check_envelope_two_sided(
    env: &Envelope,
    t: f64,
    x: &[f64],
    radii: &[f64],
    opts: &TwoSidedOpts,
) -> Result<TwoSidedReport, EstimatesError> {
    if radii.len() < 4 {
        return Err(EstimatesError::BadConfig("need at least 4 radii".into()));
    }
    let p = env.params();
    let dirs = probe_directions(p.d());
    let mut min_log = f64::INFINITY;
    let mut max_log = f64::NEG_INFINITY;
    let mut argmin = Vec::new();
    let mut argmax = Vec::new();
    let mut per_radius_hi = Vec::with_capacity(radii.len());
    let mut per_radius_lo = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        for dir in &dirs {
            let y: Vec<f64> = dir.iter().map(|c| c * r).collect();
            let k = poisson_kernel(p, t, x, &y, KernelRoute::SForm, &opts.quad)?;
            let ratio_log = k.logmag() - env.eval(&y).logmag();
            if k.sign() <= 0 {
                return Ok(TwoSidedReport {
                    min_log_ratio: f64::NEG_INFINITY,
                    max_log_ratio: max_log,
                    spread_log: f64::INFINITY,
                    outer_slope_hi: f64::NAN,
                    outer_slope_lo: f64::NAN,
                    argmin: y,
                    argmax,
                    band_ok: false,
                    slope_ok: false,
                    pass: false,
                });
            }
            if ratio_log < min_log {
                min_log = ratio_log;
                argmin = y.clone();
            }
            if ratio_log > max_log {
                max_log = ratio_log;
                argmax = y.clone();
            }
            hi = hi.max(ratio_log);
            lo = lo.min(ratio_log);
        }
        per_radius_hi.push(hi);
        per_radius_lo.push(lo);
    }

    let r_max = radii.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let decade_lo = r_max / 10.0;
    let mut lrs = Vec::new();
    let mut his = Vec::new();
    let mut los = Vec::new();
    for (i, &r) in radii.iter().enumerate() {
        if r >= decade_lo {
            lrs.push(r.ln());
            his.push(per_radius_hi[i]);
            los.push(per_radius_lo[i]);
        }
    }
    if lrs.len() < 3 {
        return Err(EstimatesError::BadConfig(
            "radius ladder has fewer than 3 points in its outermost decade".into(),
        ));
    }
    let outer_slope_hi = fit_slope(&lrs, &his);
    let outer_slope_lo = fit_slope(&lrs, &los);

    let spread_log = max_log - min_log;
    let band_ok = spread_log < opts.band.ln();
    let slope_ok = outer_slope_hi.abs() <= opts.slope_tol && outer_slope_lo.abs() <= opts.slope_tol;
    Ok(TwoSidedReport {
        min_log_ratio: min_log,
        max_log_ratio: max_log,
        spread_log,
        outer_slope_hi,
        outer_slope_lo,
        argmin,
        argmax,
        band_ok,
        slope_ok,
        pass: band_ok && slope_ok,
    })
}

#[derive(Debug, Clone)]
pub struct RefinedUpperOpts {
    /// Allowed slack when re-checking the fitted bound on a fresh,
    /// interleaved sample: exceeding the fitted constants by more than
    /// this factor means the fit had not stabilized.
    pub headroom: f64,
    /// Allowed spread of the normalized constants along the `x` ladder.
    pub ladder_factor: f64,
    /// Allowed ratio between constants fitted at the smallest and largest
    /// `t` separately.
    pub t_uniformity_factor: f64,
    pub quad: QuadSpec,
}

impl Default for RefinedUpperOpts {
    fn default() -> Self {
        RefinedUpperOpts {
            headroom: 2.0,
            ladder_factor: 100.0,
            t_uniformity_factor: 10.0,
            quad: QuadSpec { rel_tol: 1e-8, ..QuadSpec::default() },
        }
    }
}

/// Fitted constants at one base point.
#[derive(Debug, Clone)]
pub struct RefinedFit {
    pub x: Vec<f64>,
    /// log of the constant on the near-diagonal term
    /// `t^{2ν} e^{-|y|²/2} (t+|x-y|)^{-(d+2ν)}`, fitted over `|y| ≤ 3max(|x|,1)`.
    pub c1_log: f64,
    /// log of the constant on the envelope term `t^{2ν} φ(y)`, fitted
    /// over `|y| > 3max(|x|,1)`.
    pub c2_log: f64,
    /// `c1_log` minus the growth the constant is allowed in `|x|`:
    /// `(2ν+d-1) ln(1+|x|) + |x|²/2`.
    pub c1_normalized_log: f64,
    /// `c2_log + ln φ(x)`; the envelope's own decay at `x` is the growth
    /// allowance for the second constant.
    pub c2_normalized_log: f64,
}

#[derive(Debug, Clone)]
pub struct RefinedUpperReport {
    pub fits: Vec<RefinedFit>,
    pub ladder_c1_spread_log: f64,
    pub ladder_c2_spread_log: f64,
    /// Largest over the ladder of |c-fit at t_min − c-fit at t_max| in log.
    pub t_uniformity_log: f64,
    pub verification_excess_log: f64,
    pub verification_witness: Option<(f64, Vec<f64>)>,
    pub pass: bool,
}

struct RefinedTerms<'a> {
    p: &'a Params,
    x: &'a [f64],
    cut: f64,
    env: Envelope,
}

impl<'a> RefinedTerms<'a> {
    fn new(p: &'a Params, x: &'a [f64]) -> Self {
        let xr = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        RefinedTerms { p, x, cut: 3.0 * xr.max(1.0), env: Envelope::new(p.clone()) }
    }

    fn is_local(&self, y: &[f64]) -> bool {
        y.iter().map(|c| c * c).sum::<f64>().sqrt() <= self.cut
    }

    /// log of `t^{2ν} e^{-|y|²/2} (t+|x-y|)^{-(d+2ν)}`.
    fn term1_log(&self, t: f64, y: &[f64]) -> f64 {
        let r2 = y.iter().map(|c| c * c).sum::<f64>();
        let dist = self
            .x
            .iter()
            .zip(y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let two_nu = 2.0 * self.p.nu();
        two_nu * t.ln() - 0.5 * r2 - (self.p.d() as f64 + two_nu) * (t + dist).ln()
    }

    /// log of `t^{2ν} φ(y)`.
    fn term2_log(&self, t: f64, y: &[f64]) -> f64 {
        2.0 * self.p.nu() * t.ln() + self.env.eval(y).logmag()
    }
}

fn refined_samples(x: &[f64], ts: &[f64], radii: &[f64], d: usize) -> Vec<(f64, Vec<f64>)> {
    let dirs = probe_directions(d);
    let mut out = Vec::new();
    for &t in ts {
        for &r in radii {
            for dir in &dirs {
                out.push((t, dir.iter().map(|c| c * r).collect()));
            }
        }
        // Near-diagonal points, where the first term's singular factor
        // `(t+|x-y|)^{-(d+2ν)}` is exercised.
        out.push((t, x.to_vec()));
        for dir in &dirs {
            for scale in [0.5, 1.0, 2.0] {
                let y: Vec<f64> =
                    x.iter().zip(dir).map(|(a, c)| a + c * scale * t).collect();
                out.push((t, y));
            }
        }
    }
    out
}

fn fit_constants(
    terms: &RefinedTerms,
    samples: &[(f64, Vec<f64>)],
    quad: &QuadSpec,
) -> Result<(f64, f64), EstimatesError> {
    let mut c1 = f64::NEG_INFINITY;
    let mut c2 = f64::NEG_INFINITY;
    for (t, y) in samples {
        let k = poisson_kernel(terms.p, *t, terms.x, y, KernelRoute::SForm, quad)?;
        if k.is_zero() {
            continue;
        }
        if terms.is_local(y) {
            c1 = c1.max(k.logmag() - terms.term1_log(*t, y));
        } else {
            c2 = c2.max(k.logmag() - terms.term2_log(*t, y));
        }
    }
    Ok((c1, c2))
}

/// Fits the smallest constants `Ĉ₁(x)`, `Ĉ₂(x)` making
/// `p_t(x,y) ≤ Ĉ₁ t^{2ν} e^{-|y|²/2}(t+|x-y|)^{-(d+2ν)} χ_{|y|≤3max(|x|,1)}
///             + Ĉ₂ t^{2ν} φ(y)`
/// hold on a sample grid, re-verifies the bound on interleaved fresh
/// points, and checks that the constants grow no faster than their
/// allowances along the `x` ladder and stay uniform in `t`.
pub fn check_refined_upper(
    p: &Params,
    xs: &[Vec<f64>],
    ts: &[f64],
    radii: &[f64],
    opts: &RefinedUpperOpts,
) -> Result<RefinedUpperReport, EstimatesError> {
    if ts.len() < 2 {
        return Err(EstimatesError::BadConfig("need at least two t values".into()));
    }
    let mut ts_sorted = ts.to_vec();
    ts_sorted.sort_by(f64::total_cmp);
    let t_lo = ts_sorted[0];
    let t_hi = *ts_sorted.last().unwrap();

    let mut fits = Vec::new();
    let mut t_uniformity_log = 0.0f64;
    let mut verification_excess_log = f64::NEG_INFINITY;
    let mut verification_witness = None;

    // Fresh points interleaved between the fitting radii and times.
    let mid_radii: Vec<f64> = radii.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect();
    let mid_ts: Vec<f64> = ts_sorted.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect();

    for x in xs {
        if x.len() != p.d() {
            return Err(EstimatesError::BadConfig("x dimension mismatch".into()));
        }
        let terms = RefinedTerms::new(p, x);
        let samples = refined_samples(x, &ts_sorted, radii, p.d());
        let (c1_log, c2_log) = fit_constants(&terms, &samples, &opts.quad)?;

        let lo_samples = refined_samples(x, &[t_lo], radii, p.d());
        let hi_samples = refined_samples(x, &[t_hi], radii, p.d());
        let (c1_lo, c2_lo) = fit_constants(&terms, &lo_samples, &opts.quad)?;
        let (c1_hi, c2_hi) = fit_constants(&terms, &hi_samples, &opts.quad)?;
        t_uniformity_log = t_uniformity_log
            .max((c1_lo - c1_hi).abs())
            .max((c2_lo - c2_hi).abs());

        for (t, y) in refined_samples(x, &mid_ts, &mid_radii, p.d()) {
            let k = poisson_kernel(p, t, x, &y, KernelRoute::SForm, &opts.quad)?;
            if k.is_zero() {
                continue;
            }
            let mut bound = LogScalar::from_real(0.0);
            if terms.is_local(&y) {
                bound = bound + LogScalar::from_log(c1_log + terms.term1_log(t, &y));
            }
            bound = bound + LogScalar::from_log(c2_log + terms.term2_log(t, &y));
            let excess = k.logmag() - bound.logmag();
            if excess > verification_excess_log {
                verification_excess_log = excess;
                verification_witness = Some((t, y.clone()));
            }
        }

        let xr = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        let c1_allow = (2.0 * p.nu() + p.d() as f64 - 1.0) * xr.ln_1p() + 0.5 * xr * xr;
        fits.push(RefinedFit {
            x: x.clone(),
            c1_log,
            c2_log,
            c1_normalized_log: c1_log - c1_allow,
            c2_normalized_log: c2_log + Envelope::new(p.clone()).eval(x).logmag(),
        });
    }

    let spread = |vals: Vec<f64>| -> f64 {
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        hi - lo
    };
    let ladder_c1_spread_log = spread(fits.iter().map(|f| f.c1_normalized_log).collect());
    let ladder_c2_spread_log = spread(fits.iter().map(|f| f.c2_normalized_log).collect());

    let pass = fits.iter().all(|f| f.c1_log.is_finite() && f.c2_log.is_finite())
        && ladder_c1_spread_log <= opts.ladder_factor.ln()
        && ladder_c2_spread_log <= opts.ladder_factor.ln()
        && t_uniformity_log <= opts.t_uniformity_factor.ln()
        && verification_excess_log <= opts.headroom.ln();
    Ok(RefinedUpperReport {
        fits,
        ladder_c1_spread_log,
        ladder_c2_spread_log,
        t_uniformity_log,
        verification_excess_log,
        verification_witness,
        pass,
    })
}

/// The kernel split at the midpoint of its compact time-like coordinate.
#[derive(Debug, Clone, Copy)]
pub struct SplitIntegrals {
    /// Short-time half; in the far field it decays strictly faster than
    /// the Gaussian `e^{-|y|²/2}`.
    pub i0: LogScalar,
    /// Long-time half; comparable to `t^{2ν} φ(y)` in the far field.
    pub i1: LogScalar,
}

pub fn split_integrals(
    p: &Params,
    t: f64,
    x: &[f64],
    y: &[f64],
    spec: &QuadSpec,
) -> Result<SplitIntegrals, EstimatesError> {
    let (i0, i1) = poisson_kernel_split(p, t, x, y, spec)?;
    Ok(SplitIntegrals { i0, i1 })
}

#[derive(Debug, Clone)]
pub struct SplitDecayReport {
    /// Fitted coefficient `γ̂` in `I₀ ≤ K t^{2ν} e^{-(1/2+γ̂)|y|²}` over the
    /// far-field sample; positive means genuinely better-than-Gaussian.
    pub gamma_hat: f64,
    /// Largest `I₁ / (t^{2ν} φ(y))` over the far-field sample, in log.
    pub i1_ratio_max_log: f64,
    pub additivity_err: f64,
    pub pass: bool,
}

/// Far-field behaviour of the two halves: `I₀` must beat the Gaussian by
/// a fitted margin `γ̂ > 0`, `I₁` must stay dominated by `t^{2ν} φ`, and
/// the two halves must re-sum to the kernel.
pub fn check_split_decay(
    p: &Params,
    x: &[f64],
    ts: &[f64],
    radii: &[f64],
    spec: &QuadSpec,
) -> Result<SplitDecayReport, EstimatesError> {
    let xr = x.iter().map(|c| c * c).sum::<f64>().sqrt();
    let cut = 3.0 * xr.max(1.0);
    let env = Envelope::new(p.clone());
    let dirs = probe_directions(p.d());
    let mut q = Vec::new(); // (|y|², log I0 - 2ν ln t + |y|²/2)
    let mut i1_ratio_max_log = f64::NEG_INFINITY;
    let mut additivity_err = 0.0f64;
    for &t in ts {
        for &r in radii {
            if r < cut {
                continue;
            }
            for dir in &dirs {
                let y: Vec<f64> = dir.iter().map(|c| c * r).collect();
                let s = split_integrals(p, t, x, &y, spec)?;
                let total = poisson_kernel(p, t, x, &y, KernelRoute::SForm, spec)?;
                let resum = s.i0 + s.i1;
                let err = (resum.logmag() - total.logmag()).abs();
                additivity_err = additivity_err.max(err);
                let two_nu_lnt = 2.0 * p.nu() * t.ln();
                if !s.i0.is_zero() {
                    q.push((r * r, s.i0.logmag() - two_nu_lnt + 0.5 * r * r));
                }
                let ratio = s.i1.logmag() - two_nu_lnt - env.eval(&y).logmag();
                i1_ratio_max_log = i1_ratio_max_log.max(ratio);
            }
        }
    }
    if q.len() < 3 {
        return Err(EstimatesError::BadConfig(
            "no far-field samples: widen the radius ladder".into(),
        ));
    }
    let xs: Vec<f64> = q.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = q.iter().map(|p| p.1).collect();
    let gamma_hat = -fit_slope(&xs, &ys);
    let pass = gamma_hat > 0.0 && i1_ratio_max_log.is_finite() && additivity_err < 1e-10;
    Ok(SplitDecayReport { gamma_hat, i1_ratio_max_log, additivity_err, pass })
}

#[derive(Debug, Clone)]
pub struct LogLemmaReport {
    /// Smallest sampled `ln(y/x) ln(x+e) / ln(y+e)`.
    pub c_hat: f64,
    /// Largest sampled `ln(y/x) / (ln(y+e) ln(1/x+e))`.
    pub d_hat: f64,
    pub c_required: f64,
    pub d_required: f64,
    pub samples: usize,
    pub pass: bool,
}

/// Samples the elementary two-sided logarithm inequality: for
/// `y ≥ λ max(x,1)` with `λ > 1`,
/// `c_λ · ln(y+e)/ln(x+e) ≤ ln(y/x) ≤ d_λ · ln(y+e) ln(1/x+e)`.
///
/// The certified constants are `c_λ = κ_λ · min(1/2, ln λ / 3)` — where
/// `κ_λ = ln λ / ln(λ+e)` absorbs the difference between `ln y` and
/// `ln(y+e)` on `y ≥ λ` — and `d_λ = max(2, 2/ln λ)`. Sampling is
/// log-uniform over `x ∈ (10⁻⁶, 10⁶)`, `y` up to `10⁹`, with the
/// extremal ray `y = λ max(x,1)` included explicitly.
pub fn check_log_lemma(lambda: f64, n_samples: usize, seed: u64) -> LogLemmaReport {
    assert!(lambda > 1.0, "the inequality needs λ > 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c_hat = f64::INFINITY;
    let mut d_hat = f64::NEG_INFINITY;
    let mut count = 0usize;
    let mut visit = |x: f64, y: f64| {
        let lyx = (y / x).ln();
        let lye = (y + E).ln();
        let lxe = (x + E).ln();
        let lixe = (1.0 / x + E).ln();
        c_hat = c_hat.min(lyx * lxe / lye);
        d_hat = d_hat.max(lyx / (lye * lixe));
        count += 1;
    };
    for _ in 0..n_samples {
        let x = 10f64.powf(rng.gen_range(-6.0..6.0));
        let y_lo = lambda * x.max(1.0);
        let y = (rng.gen_range(y_lo.ln()..1e9f64.ln())).exp();
        visit(x, y.max(y_lo));
    }
    // Extremal ray y = λ max(x,1): the lower constant is attained along it.
    for &x in &[1e-6, 1e-3, 0.5, 1.0, 2.0, 31.7, 1e3, 1e6] {
        visit(x, lambda * x.max(1.0));
    }
    for &y in &[1e2, 1e5, 1e9] {
        visit(y / lambda, y); // x ≥ 1 branch of the ray
    }
    let kappa = lambda.ln() / (lambda + E).ln();
    let c_required = kappa * 0.5f64.min(lambda.ln() / 3.0);
    let d_required = 2.0f64.max(2.0 / lambda.ln());
    LogLemmaReport {
        c_hat,
        d_hat,
        c_required,
        d_required,
        samples: count,
        pass: c_hat >= c_required && d_hat <= d_required && c_hat > 0.0,
    }
}
