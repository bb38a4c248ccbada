//! Adaptive Gauss–Kronrod quadrature in log domain.
//!
//! The engine uses the 15-point Kronrod / 7-point Gauss pair per panel and
//! bisects the panel with the largest error estimate until the global error
//! meets `max(rel_tol · |I|, abs_tol)`. Integrand values are [`LogScalar`]s;
//! each panel accumulates in linear space after subtracting the panel's max
//! exponent, so integrals of size `exp(±800)` lose nothing to overflow.
//!
//! Endpoint substitutions reparametrize the interval before refinement:
//! logarithmic maps for one-sided singularities and a tanh–sinh
//! (double-exponential) map for algebraic endpoint singularities on both
//! sides.
//!
//! Boundary-layer semantics: the integrand receives the abscissa as a
//! plain double, so mass closer to an endpoint than the endpoint's own
//! rounding radius is invisible to it. Nodes whose mapped abscissa rounds
//! onto the endpoint contribute zero. For an algebraic singularity
//! `|x - a|^{-p}` at a nonzero endpoint this caps accuracy near
//! `ulp(a)^{1-p}` (≈ 1e-8 for p = 1/2), and the reported error bound does
//! not include that invisible layer. Integrands that vanish at the mapped
//! endpoints — every subordination and kernel profile in this crate, which
//! decay exponentially or faster there — are integrated to full precision.
//! Singularities at 0 are also exact: `0 + tiny` needs no rounding.

use crate::logscalar::LogScalar;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

/// Endpoint treatment applied before adaptive refinement.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Substitution {
    /// Integrate in the original variable.
    #[default]
    None,
    /// Logarithmic map clustering nodes at the left endpoint.
    LogLeftEndpoint,
    /// Logarithmic map clustering nodes at the right endpoint.
    LogRightEndpoint,
    /// tanh–sinh map clustering at both endpoints.
    DoubleExponential,
}

/// Tolerances and refinement budget for one integral.
#[derive(Clone, Debug)]
pub struct QuadSpec {
    /// Target relative error against the integral's magnitude.
    pub rel_tol: f64,
    /// Absolute floor below which the result is accepted regardless.
    pub abs_tol: f64,
    /// Maximum number of panel bisections.
    pub max_subdivisions: usize,
    /// Interior points seeding the initial panel boundaries, in the
    /// coordinates of the original interval; must be strictly increasing.
    pub split_points: Vec<f64>,
    pub substitution: Substitution,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            rel_tol: 1e-10,
            abs_tol: 1e-300,
            max_subdivisions: 4000,
            split_points: Vec::new(),
            substitution: Substitution::None,
        }
    }
}

impl QuadSpec {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        QuadSpec { rel_tol, ..Default::default() }
    }

    pub fn substitution(mut self, substitution: Substitution) -> Self {
        self.substitution = substitution;
        self
    }

    pub fn split_at(mut self, points: &[f64]) -> Self {
        self.split_points = points.to_vec();
        self
    }
}

/// Integral estimate with its error bound (natural log of the absolute
/// error) and work counters.
#[derive(Clone, Copy, Debug)]
pub struct QuadResult {
    pub value: LogScalar,
    /// ln of the estimated absolute error.
    pub error_log: f64,
    pub panels: usize,
    pub evaluations: usize,
}

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("split points must be strictly increasing interior points")]
    InvalidSplitPoints,
    #[error("quadrature spec requires rel_tol > 0 and abs_tol > 0")]
    InvalidTolerance,
    #[error("integrand returned a non-finite value at x = {abscissa}")]
    NonFiniteIntegrand { abscissa: f64 },
    #[error(
        "subdivision budget exhausted: estimate {estimate}, log-error {error_log:.3} above target {target_log:.3}"
    )]
    BudgetExhausted { estimate: LogScalar, error_log: f64, target_log: f64 },
}

// 15-point Kronrod abscissae (descending |x|) with the embedded 7-point
// Gauss weights; standard QUADPACK constants.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Half-width of the tanh–sinh parameter interval. Beyond |u| = 6.5 the
/// Jacobian is below exp(-1000) against any integrable endpoint blow-up.
const DE_CUTOFF: f64 = 6.5;

/// Monotone reparametrization of the integration variable.
///
/// `forward` maps the working coordinate to the original one together with
/// the log-Jacobian; `inverse` places original-coordinate split points into
/// the working interval.
struct Map {
    lo: f64,
    hi: f64,
    kind: MapKind,
}

enum MapKind {
    Identity,
    // x = a + (b-a) e^{-v}, v = t/(1-t): clusters at the left endpoint.
    LogLeft { a: f64, width: f64 },
    // x = b - (b-a) e^{-v}: clusters at the right endpoint.
    LogRight { b: f64, width: f64 },
    // x = c + h tanh(π/2 sinh(u)), u = DE_CUTOFF (2t - 1).
    TanhSinh { c: f64, h: f64 },
}

impl Map {
    fn new(a: f64, b: f64, substitution: Substitution) -> Self {
        match substitution {
            Substitution::None => Map { lo: a, hi: b, kind: MapKind::Identity },
            Substitution::LogLeftEndpoint => {
                Map { lo: 0.0, hi: 1.0, kind: MapKind::LogLeft { a, width: b - a } }
            }
            Substitution::LogRightEndpoint => {
                Map { lo: 0.0, hi: 1.0, kind: MapKind::LogRight { b, width: b - a } }
            }
            Substitution::DoubleExponential => Map {
                lo: 0.0,
                hi: 1.0,
                kind: MapKind::TanhSinh { c: 0.5 * (a + b), h: 0.5 * (b - a) },
            },
        }
    }

    fn forward(&self, t: f64) -> (f64, f64) {
        match self.kind {
            MapKind::Identity => (t, 0.0),
            MapKind::LogLeft { a, width } => {
                let v = t / (1.0 - t);
                let e = (-v).exp();
                // |dx/dt| = width e^{-v} / (1-t)²; orientation reversed.
                (a + width * e, width.ln() - v - 2.0 * (1.0 - t).ln())
            }
            MapKind::LogRight { b, width } => {
                let v = t / (1.0 - t);
                let e = (-v).exp();
                (b - width * e, width.ln() - v - 2.0 * (1.0 - t).ln())
            }
            MapKind::TanhSinh { c, h } => {
                let u = DE_CUTOFF * (2.0 * t - 1.0);
                let s = FRAC_PI_2 * u.sinh();
                let x = c + h * s.tanh();
                let logjac = (2.0 * DE_CUTOFF * h.abs() * FRAC_PI_2 * u.cosh()).ln()
                    - 2.0 * ln_cosh(s);
                (x, logjac)
            }
        }
    }

    fn inverse(&self, x: f64) -> f64 {
        match self.kind {
            MapKind::Identity => x,
            MapKind::LogLeft { a, width } => {
                let v = (width / (x - a)).ln();
                v / (1.0 + v)
            }
            MapKind::LogRight { b, width } => {
                let v = (width / (b - x)).ln();
                v / (1.0 + v)
            }
            MapKind::TanhSinh { c, h } => {
                let w = ((x - c) / h).atanh();
                let u = (w / FRAC_PI_2).asinh();
                (u / DE_CUTOFF + 1.0) / 2.0
            }
        }
    }
}

fn ln_cosh(x: f64) -> f64 {
    let ax = x.abs();
    ax + (1.0 + (-2.0 * ax).exp()).ln() - std::f64::consts::LN_2
}

struct Panel {
    lo: f64,
    hi: f64,
    value: LogScalar,
    error_log: f64,
}

// Max-heap ordering by panel error.
struct ByError(usize, f64);

impl PartialEq for ByError {
    fn eq(&self, other: &Self) -> bool {
        self.1 == other.1
    }
}
impl Eq for ByError {}
impl PartialOrd for ByError {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for ByError {
    fn cmp(&self, other: &Self) -> Ordering {
        self.1.total_cmp(&other.1).then(self.0.cmp(&other.0))
    }
}

/// ∫_a^b f(x) dx with the substitution and split points from `spec`.
pub fn integrate_interval<F>(f: F, a: f64, b: f64, spec: &QuadSpec) -> Result<QuadResult, QuadError>
where
    F: Fn(f64) -> LogScalar,
{
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(QuadError::InvalidInterval { a, b });
    }
    if !(spec.rel_tol > 0.0 && spec.abs_tol > 0.0) {
        return Err(QuadError::InvalidTolerance);
    }
    if spec.split_points.windows(2).any(|w| w[0] >= w[1])
        || spec.split_points.iter().any(|&s| s <= a || s >= b || !s.is_finite())
    {
        return Err(QuadError::InvalidSplitPoints);
    }

    let map = Map::new(a, b, spec.substitution);
    let g = |t: f64| -> Result<LogScalar, QuadError> {
        let (x, logjac) = map.forward(t);
        // Deep inside a substitution the mapped abscissa can round onto the
        // endpoint itself (tanh saturates, a + tiny rounds to a). The true
        // abscissa lies closer to the endpoint than any representable
        // double, so the node's mass sits inside the boundary layer the
        // integrand cannot resolve anyway; drop it rather than evaluate f
        // at the (possibly singular) endpoint.
        if x <= a || x >= b {
            return Ok(LogScalar::zero());
        }
        let fx = f(x);
        if fx.is_nan() || fx.logmag() == f64::INFINITY {
            return Err(QuadError::NonFiniteIntegrand { abscissa: x });
        }
        Ok(fx * LogScalar::from_log(logjac))
    };

    // Panel seeds: the mapped split points, refined to at least 8 initial
    // panels so narrow interior features are not missed by one coarse pass.
    let mut bounds = vec![map.lo];
    for &s in &spec.split_points {
        let t = map.inverse(s).clamp(map.lo, map.hi);
        if t > *bounds.last().unwrap() && t < map.hi {
            bounds.push(t);
        }
    }
    bounds.push(map.hi);
    bounds.sort_by(f64::total_cmp);
    let per_seed = (8usize / (bounds.len() - 1)).max(2);
    let mut seeds = Vec::new();
    for w in bounds.windows(2) {
        for i in 0..per_seed {
            let s = w[0] + (w[1] - w[0]) * i as f64 / per_seed as f64;
            let e = w[0] + (w[1] - w[0]) * (i + 1) as f64 / per_seed as f64;
            seeds.push((s, e));
        }
    }

    let mut evaluations = 0usize;
    let mut panels: Vec<Panel> = Vec::with_capacity(seeds.len());
    let mut heap = BinaryHeap::new();
    for (lo, hi) in seeds {
        let p = qk15_panel(&g, lo, hi, &mut evaluations)?;
        heap.push(ByError(panels.len(), p.error_log));
        panels.push(p);
    }

    let mut bisections = 0usize;
    loop {
        let total = LogScalar::sum(panels.iter().map(|p| p.value));
        let err_log = log_sum(panels.iter().map(|p| p.error_log));
        let target_log = (spec.rel_tol.ln() + total.logmag()).max(spec.abs_tol.ln());
        if err_log <= target_log {
            return Ok(QuadResult {
                value: total,
                error_log: err_log,
                panels: panels.len(),
                evaluations,
            });
        }
        if bisections >= spec.max_subdivisions {
            return Err(QuadError::BudgetExhausted { estimate: total, error_log: err_log, target_log });
        }

        let ByError(idx, popped_err) = heap.pop().expect("non-empty panel heap");
        // Lazy deletion: entries for replaced panels no longer match.
        if panels[idx].error_log != popped_err {
            continue;
        }
        let (lo, hi) = (panels[idx].lo, panels[idx].hi);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Panel narrower than double spacing; accept its estimate.
            panels[idx].error_log = f64::NEG_INFINITY;
            continue;
        }
        let left = qk15_panel(&g, lo, mid, &mut evaluations)?;
        let right = qk15_panel(&g, mid, hi, &mut evaluations)?;
        heap.push(ByError(idx, left.error_log));
        panels[idx] = left;
        heap.push(ByError(panels.len(), right.error_log));
        panels.push(right);
        bisections += 1;
    }
}

/// ∫_0^∞ f(u) du via u = τ/(1-τ), then [`integrate_interval`] on (0, 1).
/// Split points are interpreted on the half-line and mapped along.
pub fn integrate_halfline<F>(f: F, spec: &QuadSpec) -> Result<QuadResult, QuadError>
where
    F: Fn(f64) -> LogScalar,
{
    let mapped = QuadSpec {
        split_points: spec.split_points.iter().map(|&u| u / (1.0 + u)).collect(),
        ..spec.clone()
    };
    let g = |t: f64| -> LogScalar {
        let om = 1.0 - t;
        let u = t / om;
        if !u.is_finite() {
            return LogScalar::zero();
        }
        f(u) * LogScalar::from_log(-2.0 * om.ln())
    };
    integrate_interval(g, 0.0, 1.0, &mapped)
}

/// ln(e^a + e^b) for combining error bounds.
pub(crate) fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// ln(Σ exp(e_i)) for error accumulation.
fn log_sum<I: IntoIterator<Item = f64>>(logs: I) -> f64 {
    let logs: Vec<f64> = logs.into_iter().collect();
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + logs.iter().map(|&l| (l - m).exp()).sum::<f64>().ln()
}

/// One 15-point Kronrod panel in shifted-linear space.
fn qk15_panel<G>(g: &G, lo: f64, hi: f64, evaluations: &mut usize) -> Result<Panel, QuadError>
where
    G: Fn(f64) -> Result<LogScalar, QuadError>,
{
    let center = 0.5 * (lo + hi);
    let half_len = 0.5 * (hi - lo);

    let mut vals = [LogScalar::zero(); 15];
    let mut nodes = [0.0f64; 15];
    let mut idx = 0;
    for (j, &xj) in XGK.iter().enumerate() {
        if j == 7 {
            nodes[idx] = center;
            idx += 1;
        } else {
            nodes[idx] = center - half_len * xj;
            nodes[idx + 1] = center + half_len * xj;
            idx += 2;
        }
    }
    for (i, &x) in nodes.iter().enumerate() {
        vals[i] = g(x)?;
        *evaluations += 1;
    }

    let shift = vals
        .iter()
        .filter(|v| !v.is_zero())
        .map(|v| v.logmag())
        .fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return Ok(Panel { lo, hi, value: LogScalar::zero(), error_log: f64::NEG_INFINITY });
    }

    // Shifted values in QUADPACK's center/pair layout: pair (2j, 2j+1)
    // belongs to abscissa XGK[j]; odd j are also Gauss nodes, as is the
    // center (Gauss weight WG[3]).
    let lift = |v: LogScalar| v.sign() as f64 * (v.logmag() - shift).exp();
    let mut shifted = [0.0f64; 15];
    for (i, v) in vals.iter().enumerate() {
        shifted[i] = lift(*v);
    }
    let f_center = shifted[14];
    let mut res_gauss = f_center * WG[3];
    let mut res_kronrod = f_center * WGK[7];
    let mut res_abs = res_kronrod.abs();
    for j in 0..7 {
        let (f1, f2) = (shifted[2 * j], shifted[2 * j + 1]);
        let fsum = f1 + f2;
        res_kronrod += WGK[j] * fsum;
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_gauss += WG[j / 2] * fsum;
        }
    }

    let mean = res_kronrod * 0.5;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((shifted[2 * j] - mean).abs() + (shifted[2 * j + 1] - mean).abs());
    }

    let err = (res_kronrod - res_gauss) * half_len;
    let res_abs = res_abs * half_len;
    let res_asc = res_asc * half_len;
    let scaled_err = rescale_error(err, res_abs, res_asc);

    let value = if res_kronrod == 0.0 {
        LogScalar::zero()
    } else {
        LogScalar::from_sign_log(
            if res_kronrod > 0.0 { 1 } else { -1 },
            shift + (res_kronrod.abs() * half_len).ln(),
        )
    };
    let error_log = if scaled_err == 0.0 { f64::NEG_INFINITY } else { shift + scaled_err.ln() };
    Ok(Panel { lo, hi, value, error_log })
}

/// QUADPACK's conservative error rescaling, applied in shifted space.
fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn real(f: impl Fn(f64) -> f64) -> impl Fn(f64) -> LogScalar {
        move |x| LogScalar::from_real(f(x))
    }

    #[test]
    fn cubic_on_unit_interval() {
        let r = integrate_interval(real(|x| x * x * x), 0.0, 1.0, &QuadSpec::default()).unwrap();
        assert_relative_eq!(r.value.to_real(), 0.25, max_relative = 1e-12);
    }

    #[test]
    fn inverse_sqrt_with_log_left_map() {
        let spec = QuadSpec::default().substitution(Substitution::LogLeftEndpoint);
        let r = integrate_interval(real(|x| x.powf(-0.5)), 0.0, 1.0, &spec).unwrap();
        assert_relative_eq!(r.value.to_real(), 2.0, max_relative = 1e-10);
    }

    #[test]
    fn inverse_sqrt_at_right_endpoint() {
        // The singularity sits at x = 1, whose rounding radius is ~1e-16;
        // the invisible boundary layer holds mass 2·√(1e-16) ≈ 2e-8, so
        // requesting tolerances beyond it just grinds quantization noise.
        let spec = QuadSpec::with_rel_tol(1e-8).substitution(Substitution::LogRightEndpoint);
        let r = integrate_interval(real(|x| (1.0 - x).powf(-0.5)), 0.0, 1.0, &spec).unwrap();
        assert_relative_eq!(r.value.to_real(), 2.0, max_relative = 1e-7);
    }

    #[test]
    fn tanh_sinh_handles_both_endpoints() {
        // ∫_0^1 dx / sqrt(x(1-x)) = π, up to the p = 1/2 boundary layers.
        let spec = QuadSpec::with_rel_tol(1e-8).substitution(Substitution::DoubleExponential);
        let r = integrate_interval(real(|x| (x * (1.0 - x)).powf(-0.5)), 0.0, 1.0, &spec).unwrap();
        assert_relative_eq!(r.value.to_real(), PI, max_relative = 1e-7);
    }

    #[test]
    fn gaussian_mass() {
        let r = integrate_interval(
            |x| LogScalar::from_log(-0.5 * x * x),
            -30.0,
            30.0,
            &QuadSpec::default(),
        )
        .unwrap();
        assert_relative_eq!(r.value.to_real(), (2.0 * PI).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn halfline_laplace_and_sqrt_singularity() {
        let spec = QuadSpec::default();
        let r = integrate_halfline(|u| LogScalar::from_log(-u), &spec).unwrap();
        assert_relative_eq!(r.value.to_real(), 1.0, max_relative = 1e-11);

        // Γ(1/2): e^{-u} u^{-1/2} needs the double-exponential endpoint map.
        // The composed map rounds below u ≈ 3e-17, hiding ~1e-8 of mass.
        let spec = QuadSpec::default().substitution(Substitution::DoubleExponential);
        let r = integrate_halfline(
            |u| LogScalar::from_log(-u - 0.5 * u.ln()),
            &spec,
        )
        .unwrap();
        assert_relative_eq!(r.value.to_real(), PI.sqrt(), max_relative = 1e-7);
    }

    #[test]
    fn huge_scale_stays_in_log_domain() {
        // ∫_0^1 e^{800} x dx = e^{800} / 2: value representable only in logs.
        let r = integrate_interval(
            |x| LogScalar::from_log(800.0 + x.ln()),
            0.0,
            1.0,
            &QuadSpec::default(),
        )
        .unwrap();
        assert!(r.value.is_finite());
        assert_relative_eq!(r.value.logmag(), 800.0 - std::f64::consts::LN_2, epsilon = 1e-10);
    }

    #[test]
    fn tiny_scale_stays_in_log_domain() {
        let r = integrate_interval(
            |x| LogScalar::from_log(-800.0 + x.ln()),
            0.0,
            1.0,
            &QuadSpec::default(),
        )
        .unwrap();
        assert_relative_eq!(r.value.logmag(), -800.0 - std::f64::consts::LN_2, epsilon = 1e-10);
    }

    #[test]
    fn splitting_is_additive_within_error() {
        let f = real(|x: f64| (x.sin() * 3.0).exp());
        let whole = integrate_interval(&f, 0.0, 4.0, &QuadSpec::default()).unwrap();
        for split in [0.31, 1.7, 3.9] {
            let spec = QuadSpec::default().split_at(&[split]);
            let split_run = integrate_interval(&f, 0.0, 4.0, &spec).unwrap();
            let diff = (whole.value - split_run.value).abs();
            let budget = log_sum([whole.error_log, split_run.error_log]);
            assert!(
                diff.logmag() <= budget + 1.0,
                "split at {split}: diff {} vs budget {}",
                diff.logmag(),
                budget
            );
        }
    }

    #[test]
    fn budget_exhaustion_reports_best_estimate() {
        let spec = QuadSpec { max_subdivisions: 3, rel_tol: 1e-14, ..Default::default() };
        let err = integrate_interval(real(|x| x.powf(-0.99)), 1e-12, 1.0, &spec).unwrap_err();
        match err {
            QuadError::BudgetExhausted { estimate, error_log, .. } => {
                assert!(estimate.to_real() > 0.0);
                assert!(error_log.is_finite());
            }
            other => panic!("expected budget exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn nan_integrand_is_a_hard_error() {
        let err = integrate_interval(
            |x| {
                if (0.49..0.51).contains(&x) {
                    LogScalar::from_real(f64::NAN)
                } else {
                    LogScalar::one()
                }
            },
            0.0,
            1.0,
            &QuadSpec::default(),
        )
        .unwrap_err();
        assert!(matches!(err, QuadError::NonFiniteIntegrand { .. }));
    }

    #[test]
    fn rejects_bad_inputs() {
        let one = |_x: f64| LogScalar::one();
        assert!(matches!(
            integrate_interval(one, 1.0, 0.0, &QuadSpec::default()),
            Err(QuadError::InvalidInterval { .. })
        ));
        let spec = QuadSpec::default().split_at(&[0.9, 0.2]);
        assert!(matches!(
            integrate_interval(one, 0.0, 1.0, &spec),
            Err(QuadError::InvalidSplitPoints)
        ));
    }

    #[test]
    fn split_points_map_through_substitutions() {
        let spec = QuadSpec::default()
            .substitution(Substitution::LogRightEndpoint)
            .split_at(&[0.25, 0.5]);
        let r = integrate_interval(real(|x| (1.0 - x).powf(-0.25)), 0.0, 1.0, &spec).unwrap();
        assert_relative_eq!(r.value.to_real(), 4.0 / 3.0, max_relative = 1e-10);
    }
}
