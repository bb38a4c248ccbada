//! Named verification suites.
//!
//! Each suite bundles one module's certificate operations into seeded,
//! deterministic cases and returns a [`Report`]. Identical configuration
//! and seed produce an identical report (timestamp aside): per-case RNG
//! seeds are derived by hashing the case name into the run seed, cases
//! are sorted by name before serialization, and every parallel reduction
//! collects into an ordered buffer first.

use crate::estimates::{
    check_envelope_two_sided, check_log_lemma, check_refined_upper, check_split_decay,
    radius_ladder, Envelope, RefinedUpperOpts, TwoSidedOpts,
};
use crate::grid::{Grid, ScalarField};
use crate::heat::{heat_apply, mehler_kernel, ApplyOpts, TimeVar};
use crate::logscalar::LogScalar;
use crate::maximal::{check_domination, check_mloc_lower, MaximalSpec, MlocEvaluator};
use crate::poisson::{pde_residual, poisson_apply, poisson_kernel, poisson_series, KernelRoute};
use crate::quad::{integrate_halfline, integrate_interval, QuadSpec};
use crate::report::{CaseReport, Report};
use crate::special::{
    f_nu, f_nu_ode_residual, gamma_fn, hermite_fn, hermite_fn_1d, hermite_sweep_1d, ln_gamma,
    MultiIndex, Params,
};
use crate::weights::{
    build_theorem_weight, build_v_alpha, check_end_to_end_bound, check_gaussian_integrability,
    check_two_weight_mloc, decay_threshold, dp_norm, dpe_norm, necessity_probe, EndToEndOpts,
    GaussVerdict, TheoremWeightSpec, TransferVerdict, WeightPair, WeightsError,
};
use rayon::prelude::*;
use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error(
        "unknown suite `{0}`; expected special, heat, poisson, estimates, maximal, weights, converge or all"
    )]
    UnknownSuite(String),
    #[error("bad suite configuration: {0}")]
    BadConfig(String),
    #[error("report assembly: {0}")]
    Report(#[from] crate::report::ReportError),
}

/// The selectable suites.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuiteName {
    Special,
    Heat,
    Poisson,
    Estimates,
    Maximal,
    Weights,
    Converge,
    All,
}

impl SuiteName {
    /// Every concrete suite, in execution order for `all`.
    pub const CONCRETE: [SuiteName; 7] = [
        SuiteName::Special,
        SuiteName::Heat,
        SuiteName::Poisson,
        SuiteName::Estimates,
        SuiteName::Maximal,
        SuiteName::Weights,
        SuiteName::Converge,
    ];

    fn cases(self) -> Vec<CaseSpec> {
        match self {
            SuiteName::Special => special_cases(),
            SuiteName::Heat => heat_cases(),
            SuiteName::Poisson => poisson_cases(),
            SuiteName::Estimates => estimates_cases(),
            SuiteName::Maximal => maximal_cases(),
            SuiteName::Weights => weights_cases(),
            SuiteName::Converge => converge_cases(),
            SuiteName::All => {
                SuiteName::CONCRETE.iter().flat_map(|s| s.cases()).collect()
            }
        }
    }
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SuiteName::Special => "special",
            SuiteName::Heat => "heat",
            SuiteName::Poisson => "poisson",
            SuiteName::Estimates => "estimates",
            SuiteName::Maximal => "maximal",
            SuiteName::Weights => "weights",
            SuiteName::Converge => "converge",
            SuiteName::All => "all",
        };
        write!(f, "{s}")
    }
}

impl FromStr for SuiteName {
    type Err = SuiteError;

    fn from_str(s: &str) -> Result<Self, SuiteError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "special" => Ok(SuiteName::Special),
            "heat" => Ok(SuiteName::Heat),
            "poisson" => Ok(SuiteName::Poisson),
            "estimates" => Ok(SuiteName::Estimates),
            "maximal" => Ok(SuiteName::Maximal),
            "weights" => Ok(SuiteName::Weights),
            "converge" => Ok(SuiteName::Converge),
            "all" => Ok(SuiteName::All),
            other => Err(SuiteError::UnknownSuite(other.to_string())),
        }
    }
}

/// Run-wide configuration; everything else is derived from it.
#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Worker threads for the case runner: 0 = the global pool,
    /// 1 = strictly serial, n>1 = a dedicated pool of n threads.
    pub jobs: usize,
    /// `(d, m)` pairs of the operator family under test.
    pub dm_matrix: Vec<(usize, f64)>,
    /// Subordination orders ν crossed with the `(d, m)` pairs.
    pub nus: Vec<f64>,
    /// Perturbation of the envelope's logarithm exponent. Zero means the
    /// honest envelope; anything else is a deliberate mutation that the
    /// estimates suite is expected to catch.
    pub phi_log_exponent_delta: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 42,
            jobs: 0,
            dm_matrix: vec![(1, -1.0), (1, 0.0), (1, 1.0), (2, -2.0), (2, 0.0), (2, 1.0)],
            nus: vec![0.5, 1.0],
            phi_log_exponent_delta: 0.0,
        }
    }
}

impl SuiteConfig {
    fn validate(&self) -> Result<(), SuiteError> {
        if self.dm_matrix.is_empty() {
            return Err(SuiteError::BadConfig("dm_matrix must not be empty".into()));
        }
        if self.nus.is_empty() {
            return Err(SuiteError::BadConfig("nus must not be empty".into()));
        }
        self.configs().map(|_| ())
    }

    /// The full `(d, m, ν)` parameter matrix.
    pub fn configs(&self) -> Result<Vec<Params>, SuiteError> {
        let mut out = Vec::with_capacity(self.dm_matrix.len() * self.nus.len());
        for &(d, m) in &self.dm_matrix {
            for &nu in &self.nus {
                out.push(Params::new(d, m, nu).map_err(|e| {
                    SuiteError::BadConfig(format!("(d={d}, m={m}, nu={nu}): {e}"))
                })?);
            }
        }
        Ok(out)
    }
}

/// The default RNG seed: `HERMIPOISSON_SEED` when set and parseable,
/// otherwise 42.
pub fn default_seed() -> u64 {
    std::env::var("HERMIPOISSON_SEED")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(42)
}

/// FNV-1a, fixed forever: per-case seeds must not depend on the standard
/// library's unstable default hasher.
fn fnv1a(s: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Seed for one named case, derived from the run seed.
pub fn case_seed(run_seed: u64, case_name: &str) -> u64 {
    fnv1a(case_name) ^ run_seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

type CaseOutcome = Result<CaseReport, String>;

struct CaseSpec {
    name: &'static str,
    run: fn(&'static str, &SuiteConfig, u64) -> CaseOutcome,
}

impl CaseSpec {
    fn execute(&self, cfg: &SuiteConfig) -> CaseReport {
        let seed = case_seed(cfg.seed, self.name);
        match (self.run)(self.name, cfg, seed) {
            Ok(case) => case,
            Err(msg) => CaseReport::fail(self.name, format!("execution error: {msg}")),
        }
    }
}

/// Runs the named suite and assembles its report. The exit-code contract
/// (`0` exactly when no case fails) lives on [`Report::exit_code`].
pub fn run_suite(name: SuiteName, cfg: &SuiteConfig) -> Result<Report, SuiteError> {
    cfg.validate()?;
    let specs = name.cases();
    let mut report = Report::new(name.to_string(), cfg.seed);
    report.set_param("jobs", cfg.jobs.to_string());
    report.set_param(
        "dm_matrix",
        cfg.dm_matrix
            .iter()
            .map(|(d, m)| format!("{d}:{m}"))
            .collect::<Vec<_>>()
            .join(","),
    );
    report.set_param(
        "nus",
        cfg.nus.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","),
    );
    report.set_param(
        "phi_log_exponent_delta",
        cfg.phi_log_exponent_delta.to_string(),
    );

    let cases: Vec<CaseReport> = match cfg.jobs {
        1 => specs.iter().map(|s| s.execute(cfg)).collect(),
        0 => specs.par_iter().map(|s| s.execute(cfg)).collect(),
        n => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| SuiteError::BadConfig(format!("thread pool: {e}")))?;
            pool.install(|| specs.par_iter().map(|s| s.execute(cfg)).collect())
        }
    };
    for case in cases {
        report.push(case);
    }
    report.finalize()?;
    Ok(report)
}

// ---------------------------------------------------------------------
// shared helpers
// ---------------------------------------------------------------------

fn norm2(y: &[f64]) -> f64 {
    y.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

fn fit_line_slope(xs: &[f64], ys: &[f64]) -> f64 {
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

fn err_str(e: impl fmt::Display) -> String {
    e.to_string()
}

fn gaussian_weight_field(rate: f64) -> ScalarField {
    ScalarField::from_fn(move |y: &[f64]| {
        LogScalar::from_log(-rate * y.iter().map(|c| c * c).sum::<f64>())
    })
}

fn flat_field() -> ScalarField {
    ScalarField::from_real_fn(|_| 1.0)
}

// ---------------------------------------------------------------------
// special
// ---------------------------------------------------------------------

fn special_cases() -> Vec<CaseSpec> {
    vec![
        CaseSpec { name: "special/f-nu-half-integer-closed-forms", run: case_f_nu_closed_forms },
        CaseSpec { name: "special/f-nu-ode-residual", run: case_f_nu_ode },
        CaseSpec { name: "special/f-nu-subordination-identity", run: case_f_nu_subordination },
        CaseSpec { name: "special/gamma-functional-equations", run: case_gamma_identities },
        CaseSpec { name: "special/hermite-orthonormality", run: case_hermite_orthonormality },
        CaseSpec { name: "special/spectrum-layout", run: case_spectrum_layout },
    ]
}

/// `K_{k+1/2}` in closed form: `√(π/2z) e^{-z} Σ …` for the first three
/// half-integer orders.
fn k_half_integer(nu: f64, z: f64) -> f64 {
    let base = (PI / (2.0 * z)).sqrt() * (-z).exp();
    if nu == 0.5 {
        base
    } else if nu == 1.5 {
        base * (1.0 + 1.0 / z)
    } else if nu == 2.5 {
        base * (1.0 + 3.0 / z + 3.0 / (z * z))
    } else {
        f64::NAN
    }
}

fn case_f_nu_closed_forms(name: &'static str, _cfg: &SuiteConfig, _seed: u64) -> CaseOutcome {
    let quad = QuadSpec::with_rel_tol(1e-11);
    let mut max_rel = 0.0f64;
    for &nu in &[0.5, 1.5, 2.5] {
        for i in 0..16 {
            let z = 0.1 + 7.9 * i as f64 / 15.0;
            let got = f_nu(nu, z, &quad).map_err(err_str)?.to_real();
            let want = 2.0 * (z / 2.0).powf(nu) * k_half_integer(nu, z);
            max_rel = max_rel.max(rel_err(got, want));
        }
    }
    let tol = 1e-7;
    let case = CaseReport::pass(name)
        .with_metric("max_rel_err", max_rel)
        .with_metric("tolerance", tol);
    if max_rel < tol {
        Ok(case)
    } else {
        Ok(CaseReport::fail(name, format!("closed-form mismatch {max_rel:.3e}"))
            .with_metric("max_rel_err", max_rel)
            .with_metric("tolerance", tol))
    }
}

fn case_f_nu_ode(name: &'static str, _cfg: &SuiteConfig, _seed: u64) -> CaseOutcome {
    let quad = QuadSpec::with_rel_tol(1e-11);
    let mut max_res = 0.0f64;
    let mut worst = (0.0, 0.0);
    for &nu in &[0.5, 1.0, 1.5] {
        for &z in &[0.5, 1.0, 2.0, 4.0, 8.0] {
            let r = f_nu_ode_residual(nu, z, &quad).map_err(err_str)?.abs();
            if r > max_res {
                max_res = r;
                worst = (nu, z);
            }
        }
    }
    let tol = 1e-6;
    if max_res < tol {
        Ok(CaseReport::pass(name)
            .with_metric("max_residual", max_res)
            .with_metric("tolerance", tol))
    } else {
        Ok(CaseReport::fail(
            name,
            format!("residual {max_res:.3e} at (nu, z) = {worst:?}"),
        )
        .with_metric("max_residual", max_res)
        .with_metric("tolerance", tol))
    }
}

/// Two routes to the subordination profile: the incomplete-gamma-type
/// integral directly, and the time-domain average
/// `(t²/4)^ν ∫ e^{-t²/4v - λv} v^{-1-ν} dv`.
fn case_f_nu_subordination(name: &'static str, _cfg: &SuiteConfig, _seed: u64) -> CaseOutcome {
    let quad = QuadSpec::with_rel_tol(1e-11);
    let mut max_rel = 0.0f64;
    for &nu in &[0.5, 1.0] {
        for &t in &[0.3, 1.0] {
            for &lam in &[1.0f64, 3.0, 10.0] {
                let direct = f_nu(nu, t * lam.sqrt(), &quad).map_err(err_str)?.to_real();
                let integral = integrate_halfline(
                    |v: f64| {
                        if v <= 0.0 {
                            return LogScalar::from_real(0.0);
                        }
                        let l = -t * t / (4.0 * v) - lam * v - (1.0 + nu) * v.ln();
                        if l.is_nan() {
                            LogScalar::from_real(0.0)
                        } else {
                            LogScalar::from_log(l)
                        }
                    },
                    &quad,
                )
                .map_err(err_str)?;
                let averaged =
                    (integral.value * LogScalar::from_log(nu * (t * t / 4.0).ln())).to_real();
                max_rel = max_rel.max(rel_err(averaged, direct));
            }
        }
    }
    let tol = 1e-8;
    if max_rel < tol {
        Ok(CaseReport::pass(name)
            .with_metric("max_rel_err", max_rel)
            .with_metric("tolerance", tol))
    } else {
        Ok(CaseReport::fail(name, format!("route disagreement {max_rel:.3e}"))
            .with_metric("max_rel_err", max_rel)
            .with_metric("tolerance", tol))
    }
}

fn case_gamma_identities(name: &'static str, _cfg: &SuiteConfig, _seed: u64) -> CaseOutcome {
    let mut max_rel = 0.0f64;
    for &x in &[0.3, 1.7, 4.5, 9.2] {
        max_rel = max_rel.max(rel_err(gamma_fn(x + 1.0), x * gamma_fn(x)));
    }
    max_rel = max_rel.max(rel_err(gamma_fn(0.5), PI.sqrt()));
    // Reflection at a generic point.
    let x = 0.3;
    max_rel = max_rel.max(rel_err(
        gamma_fn(x) * gamma_fn(1.0 - x),
        PI / (PI * x).sin(),
    ));
    for &x in &[2.5, 10.0, 30.0] {
        max_rel = max_rel.max(rel_err(ln_gamma(x), gamma_fn(x).ln()));
    }
    let tol = 1e-12;
    if max_rel < tol {
        Ok(CaseReport::pass(name)
            .with_metric("max_rel_err", max_rel)
            .with_metric("tolerance", tol))
    } else {
        Ok(CaseReport::fail(name, format!("gamma identity off by {max_rel:.3e}"))
            .with_metric("max_rel_err", max_rel)
            .with_metric("tolerance", tol))
    }
}

fn case_hermite_orthonormality(name: &'static str, _cfg: &SuiteConfig, _seed: u64) -> CaseOutcome {
    // Trapezoid rule on a box that contains all mass of degrees ≤ 6; the
    // integrands are entire and Gaussian-decaying, so the rule converges
    // superalgebraically in the step.
    let (a, n) = (14.0f64, 2801usize);
    let h = 2.0 * a / (n - 1) as f64;
    let k_max = 6usize;
    let mut gram = vec![vec![0.0f64; k_max + 1]; k_max + 1];
    for i in 0..n {
        let x = -a + h * i as f64;
        let w = if i == 0 || i == n - 1 { 0.5 * h } else { h };
        let sweep = hermite_sweep_1d(k_max, x);
        let vals: Vec<f64> = sweep.iter().map(|v| v.to_real()).collect();
        for j in 0..=k_max {
            for k in j..=k_max {
                gram[j][k] += w * vals[j] * vals[k];
            }
        }
    }
    let mut max_err = 0.0f64;
    for j in 0..=k_max {
        for k in j..=k_max {
            let want = if j == k { 1.0 } else { 0.0 };
            max_err = max_err.max((gram[j][k] - want).abs());
        }
    }
    let tol = 1e-7;
    if max_err < tol {
        Ok(CaseReport::pass(name)
            .with_metric("max_abs_err", max_err)
            .with_metric("tolerance", tol))
    } else {
        Ok(CaseReport::fail(name, format!("Gram defect {max_err:.3e}"))
            .with_metric("max_abs_err", max_err)
            .with_metric("tolerance", tol))
    }
}

fn case_spectrum_layout(name: &'static str, cfg: &SuiteConfig, _seed: u64) -> CaseOutcome {
    for p in cfg.configs().map_err(err_str)? {
        let d = p.d();
        for order in 0..=4usize {
            let mut entries = vec![0usize; d];
            entries[0] = order;
            let k = MultiIndex::new(entries).map_err(err_str)?;
            let want = 2.0 * order as f64 + d as f64 + p.m();
            if p.eigenvalue(&k) != want {
                return Ok(CaseReport::fail(
                    name,
                    format!("eigenvalue mismatch at d={d}, m={}, |k|={order}", p.m()),
                ));
            }
        }
        let critical = p.m() == -(p.d() as f64);
        if p.critical() != critical {
            return Ok(CaseReport::fail(
                name,
                format!("criticality flag wrong at d={d}, m={}", p.m()),
            ));
        }
    }
    Ok(CaseReport::pass(name))
}

// ---------------------------------------------------------------------
// heat
// ---------------------------------------------------------------------

fn heat_cases() -> Vec<CaseSpec> {
    vec![
        CaseSpec { name: "heat/kernel-symmetry-and-positivity", run: case_heat_symmetry },
        CaseSpec { name: "heat/time-parametrizations-agree", run: case_heat_time_params },
        CaseSpec { name: "heat/chapman-kolmogorov", run: case_heat_chapman },
        CaseSpec { name: "heat/eigenfunctions-decay-exactly", run: case_heat_eigen },
    ]
}

fn case_heat_symmetry(name: &'static str, _cfg: &SuiteConfig, seed: u64) -> CaseOutcome {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut max_gap = 0.0f64;
    for i in 0..40 {
        let d = 1 + (i % 2);
        let m = [-(d as f64), 0.0, 1.0][rng.gen_range(0..3)];
        let p = Params::new(d, m, 0.5).map_err(err_str)?;
        let v = rng.gen_range(0.05..2.0);
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let y: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let a = mehler_kernel(&p, TimeVar::V(v), &x, &y).map_err(err_str)?;
        let b = mehler_kernel(&p, TimeVar::V(v), &y, &x).map_err(err_str)?;
        if a.sign() <= 0 || b.sign() <= 0 {
            return Ok(CaseReport::fail(
                name,
                format!("kernel not positive at d={d}, v={v}, x={x:?}, y={y:?}"),
            ));
        }
        max_gap = max_gap.max((a.logmag() - b.logmag()).abs());
    }
    let tol = 1e-11;
    if max_gap < tol {
        Ok(CaseReport::pass(name)
            .with_metric("max_log_gap", max_gap)
            .with_metric("tolerance", tol))
    } else {
        Ok(CaseReport::fail(name, format!("symmetry gap {max_gap:.3e}"))
            .with_metric("max_log_gap", max_gap)
            .with_metric("tolerance", tol))
    }
}

fn case_heat_time_params(name: &'static str, _cfg: &SuiteConfig, seed: u64) -> CaseOutcome {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let p = Params::new(1, 0.0, 0.5).map_err(err_str)?;
    let mut max_gap = 0.0f64;
    for _ in 0..10 {
        let v = rng.gen_range(0.05..2.0);
        let x = [rng.gen_range(-3.0..3.0)];
        let y = [rng.gen_range(-3.0..3.0)];
        let kv = mehler_kernel(&p, TimeVar::V(v), &x, &y).map_err(err_str)?;
        let ks = mehler_kernel(&p, TimeVar::S(v.tanh()), &x, &y).map_err(err_str)?;
        let kr = mehler_kernel(&p, TimeVar::R((-2.0 * v).exp()), &x, &y).map_err(err_str)?;
        max_gap = max_gap.max((kv.logmag() - ks.logmag()).abs());
        max_gap = max_gap.max((kv.logmag() - kr.logmag()).abs());
    }
    let tol = 1e-11;
    if max_gap < tol {
        Ok(CaseReport::pass(name)
            .with_metric("max_log_gap", max_gap)
            .with_metric("tolerance", tol))
    } else {
        Ok(CaseReport::fail(name, format!("parametrization gap {max_gap:.3e}"))
            .with_metric("max_log_gap", max_gap)
            .with_metric("tolerance", tol))
    }
}

fn case_heat_chapman(name: &'static str, _cfg: &SuiteConfig, _seed: u64) -> CaseOutcome {
    let quad = QuadSpec::with_rel_tol(1e-10);
    let mut max_rel = 0.0f64;
    let mut worst = String::new();
    for &m in &[-1.0, 0.0, 1.0] {
        let p = Params::new(1, m, 0.5).map_err(err_str)?;
        for &(v, w) in &[(0.1, 0.2), (0.4, 0.7)] {
            for &(x, y) in &[(0.3, -0.7), (1.2, 0.5)] {
                let pp = p.clone();
                let composed = integrate_interval(
                    |z| {
                        mehler_kernel(&pp, TimeVar::V(v), &[x], &[z]).unwrap()
                            * mehler_kernel(&pp, TimeVar::V(w), &[z], &[y]).unwrap()
                    },
                    -16.0,
                    16.0,
                    &quad,
                )
                .map_err(err_str)?;
                let direct = mehler_kernel(&p, TimeVar::V(v + w), &[x], &[y]).map_err(err_str)?;
                let rel = rel_err(composed.value.to_real(), direct.to_real());
                if rel > max_rel {
                    max_rel = rel;
                    worst = format!("m={m}, v={v}, w={w}, x={x}, y={y}");
                }
            }
        }
    }
    let tol = 1e-7;
    if max_rel < tol {
        Ok(CaseReport::pass(name)
            .with_metric("max_rel_err", max_rel)
            .with_metric("tolerance", tol))
    } else {
        Ok(CaseReport::fail(name, format!("composition off by {max_rel:.3e} at {worst}"))
            .with_metric("max_rel_err", max_rel)
            .with_metric("tolerance", tol))
    }
}

fn case_heat_eigen(name: &'static str, _cfg: &SuiteConfig, _seed: u64) -> CaseOutcome {
    let spec = QuadSpec::with_rel_tol(1e-9);
    let opts = ApplyOpts::default();
    let mut max_rel = 0.0f64;
    let p = Params::new(1, 0.0, 0.5).map_err(err_str)?;
    for k in 0..=4usize {
        let f = ScalarField::from_fn(move |y: &[f64]| hermite_fn_1d(k, y[0]));
        for &v in &[0.25, 1.0] {
            for &x in &[0.3, 1.1] {
                let got = heat_apply(&p, TimeVar::V(v), &f, &[x], &spec, &opts)
                    .map_err(err_str)?
                    .value;
                let lambda = 2.0 * k as f64 + 1.0;
                let want = hermite_fn_1d(k, x) * LogScalar::from_log(-v * lambda);
                max_rel = max_rel.max(rel_err(got.to_real(), want.to_real()));
            }
        }
    }
    // One genuinely multi-dimensional check of the same identity.
    let p2 = Params::new(2, 0.0, 0.5).map_err(err_str)?;
    let k2 = MultiIndex::new(vec![1, 2]).map_err(err_str)?;
    let k2f = k2.clone();
    let f2 = ScalarField::from_fn(move |y: &[f64]| hermite_fn(&k2f, y).unwrap());
    let x2 = [0.3, -0.4];
    let got = heat_apply(&p2, TimeVar::V(0.5), &f2, &x2, &spec, &opts)
        .map_err(err_str)?
        .value;
    let want =
        hermite_fn(&k2, &x2).map_err(err_str)? * LogScalar::from_log(-0.5 * p2.eigenvalue(&k2));
    max_rel = max_rel.max(rel_err(got.to_real(), want.to_real()));

    let tol = 1e-6;
    if max_rel < tol {
        Ok(CaseReport::pass(name)
            .with_metric("max_rel_err", max_rel)
            .with_metric("tolerance", tol))
    } else {
        Ok(CaseReport::fail(name, format!("eigen decay off by {max_rel:.3e}"))
            .with_metric("max_rel_err", max_rel)
            .with_metric("tolerance", tol))
    }
}

// ---------------------------------------------------------------------
// poisson
// ---------------------------------------------------------------------

fn poisson_cases() -> Vec<CaseSpec> {
    vec![
        CaseSpec { name: "poisson/kernel-route-agreement", run: case_poisson_routes },
        CaseSpec { name: "poisson/series-cross-check", run: case_poisson_series },
        CaseSpec { name: "poisson/eigenfunction-action", run: case_poisson_eigen },
        CaseSpec { name: "poisson/pde-residual", run: case_poisson_pde },
    ]
}

fn case_poisson_routes(name: &'static str, _cfg: &SuiteConfig, seed: u64) -> CaseOutcome {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let quad = QuadSpec::default();
    let mut max_gap = 0.0f64;
    let mut worst = String::new();
    for i in 0..40 {
        let d = 1 + (i % 2);
        let m = [-(d as f64), 0.0, 1.0][rng.gen_range(0..3)];
        let nu = [0.5, 1.0][rng.gen_range(0..2)];
        let p = Params::new(d, m, nu).map_err(err_str)?;
        let t = rng.gen_range(0.05..2.0);
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let y: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let s = poisson_kernel(&p, t, &x, &y, KernelRoute::SForm, &quad).map_err(err_str)?;
        let r = poisson_kernel(&p, t, &x, &y, KernelRoute::RForm, &quad).map_err(err_str)?;
        let v =
            poisson_kernel(&p, t, &x, &y, KernelRoute::Subordination, &quad).map_err(err_str)?;
        let gap = (s.logmag() - r.logmag())
            .abs()
            .max((s.logmag() - v.logmag()).abs());
        if gap > max_gap {
            max_gap = gap;
            worst = format!("d={d}, m={m}, nu={nu}, t={t:.3}, x={x:?}, y={y:?}");
        }
    }
    let tol = 1e-7;
    if max_gap < tol {
        Ok(CaseReport::pass(name)
            .with_metric("max_rel_err", max_gap)
            .with_metric("tolerance", tol))
    } else {
        Ok(CaseReport::fail(name, format!("routes disagree by {max_gap:.3e} at {worst}"))
            .with_metric("max_rel_err", max_gap)
            .with_metric("tolerance", tol))
    }
}

fn case_poisson_series(name: &'static str, _cfg: &SuiteConfig, _seed: u64) -> CaseOutcome {
    let spec = QuadSpec::with_rel_tol(1e-8);
    let p = Params::new(1, 0.5, 0.5).map_err(err_str)?;
    let mut max_rel = 0.0f64;
    for &(t, x, y) in &[(1.0, 0.3, -0.4), (2.0, 1.0, 0.8), (1.5, -1.2, 0.2)] {
        let series = poisson_series(&p, t, &[x], &[y], 512, &spec).map_err(err_str)?;
        let quad = poisson_kernel(&p, t, &[x], &[y], KernelRoute::SForm, &QuadSpec::default())
            .map_err(err_str)?;
        max_rel = max_rel.max(rel_err(series.value.to_real(), quad.to_real()));
        if series.tail_log > series.value.logmag() - 16.0 {
            return Ok(CaseReport::fail(
                name,
                format!("series tail not negligible at t={t}: {}", series.tail_log),
            ));
        }
    }
    let tol = 1e-6;
    if max_rel < tol {
        Ok(CaseReport::pass(name)
            .with_metric("max_rel_err", max_rel)
            .with_metric("tolerance", tol))
    } else {
        Ok(CaseReport::fail(name, format!("series mismatch {max_rel:.3e}"))
            .with_metric("max_rel_err", max_rel)
            .with_metric("tolerance", tol))
    }
}

fn case_poisson_eigen(name: &'static str, _cfg: &SuiteConfig, _seed: u64) -> CaseOutcome {
    let spec = QuadSpec::with_rel_tol(1e-9);
    let opts = ApplyOpts::default();
    let quad = QuadSpec::with_rel_tol(1e-11);
    let mut max_rel = 0.0f64;
    for &nu in &[0.5, 1.0] {
        let p = Params::new(1, 0.0, nu).map_err(err_str)?;
        for k in 0..=4usize {
            let f = ScalarField::from_fn(move |y: &[f64]| hermite_fn_1d(k, y[0]));
            let lambda = 2.0 * k as f64 + 1.0;
            for &t in &[0.5, 1.0] {
                for &x in &[0.3, 1.1] {
                    let got = poisson_apply(&p, t, &f, &[x], &spec, &opts)
                        .map_err(err_str)?
                        .value;
                    let mult = f_nu(nu, t * lambda.sqrt(), &quad).map_err(err_str)?
                        / LogScalar::from_real(gamma_fn(nu));
                    let want = hermite_fn_1d(k, x) * mult;
                    max_rel = max_rel.max(rel_err(got.to_real(), want.to_real()));
                }
            }
        }
    }
    let tol = 1e-6;
    if max_rel < tol {
        Ok(CaseReport::pass(name)
            .with_metric("max_rel_err", max_rel)
            .with_metric("tolerance", tol))
    } else {
        Ok(CaseReport::fail(name, format!("eigen action off by {max_rel:.3e}"))
            .with_metric("max_rel_err", max_rel)
            .with_metric("tolerance", tol))
    }
}

fn case_poisson_pde(name: &'static str, _cfg: &SuiteConfig, _seed: u64) -> CaseOutcome {
    let spec = QuadSpec::with_rel_tol(1e-11);
    let mut max_res = 0.0f64;
    let mut worst = String::new();
    let tuples: [(Params, Vec<f64>, Vec<f64>); 3] = [
        (Params::new(1, 0.5, 0.5).map_err(err_str)?, vec![0.5], vec![-0.3]),
        (Params::new(1, -1.0, 1.0).map_err(err_str)?, vec![1.1], vec![0.6]),
        (Params::new(2, 0.0, 0.5).map_err(err_str)?, vec![0.5, -0.2], vec![-0.3, 0.8]),
    ];
    for (p, x, y) in &tuples {
        for &t in &[0.5, 1.0] {
            let r = pde_residual(p, t, x, y, &spec).map_err(err_str)?.abs();
            if r > max_res {
                max_res = r;
                worst = format!("d={}, m={}, nu={}, t={t}", p.d(), p.m(), p.nu());
            }
        }
    }
    let tol = 1e-3;
    if max_res < tol {
        Ok(CaseReport::pass(name)
            .with_metric("max_residual", max_res)
            .with_metric("tolerance", tol))
    } else {
        Ok(CaseReport::fail(name, format!("residual {max_res:.3e} at {worst}"))
            .with_metric("max_residual", max_res)
            .with_metric("tolerance", tol))
    }
}

// ---------------------------------------------------------------------
// estimates
// ---------------------------------------------------------------------

fn estimates_cases() -> Vec<CaseSpec> {
    vec![
        CaseSpec { name: "estimates/envelope-two-sided", run: case_envelope_two_sided },
        CaseSpec {
            name: "estimates/sharpness-bare-gaussian-fails",
            run: case_sharpness_bare_gaussian,
        },
        CaseSpec {
            name: "estimates/sharpness-wrong-log-exponent-fails",
            run: case_sharpness_wrong_log,
        },
        CaseSpec { name: "estimates/refined-upper-bound", run: case_refined_upper },
        CaseSpec { name: "estimates/split-halves-far-field", run: case_split_decay },
        CaseSpec { name: "estimates/log-inequality-monte-carlo", run: case_log_lemma },
    ]
}

/// The envelope certificate over the whole `(d, m, ν)` matrix. This is the
/// case that must fail when the envelope's logarithm exponent is perturbed
/// through [`SuiteConfig::phi_log_exponent_delta`].
fn case_envelope_two_sided(name: &'static str, cfg: &SuiteConfig, _seed: u64) -> CaseOutcome {
    let configs = cfg.configs().map_err(err_str)?;
    let radii = radius_ladder(0.25, 400.0, 32);
    let opts = TwoSidedOpts::default();
    let delta = cfg.phi_log_exponent_delta;
    let runs: Vec<(String, Result<crate::estimates::TwoSidedReport, String>)> = configs
        .par_iter()
        .flat_map_iter(|p| [(p.clone(), 0.1), (p.clone(), 1.0)])
        .map(|(p, t)| {
            let label = format!("d={}, m={}, nu={}, t={t}", p.d(), p.m(), p.nu());
            let env = Envelope::with_log_exponent_delta(p.clone(), delta);
            let x = vec![0.0; p.d()];
            let rep = check_envelope_two_sided(&env, t, &x, &radii, &opts).map_err(err_str);
            (label, rep)
        })
        .collect();
    let mut worst_spread = 0.0f64;
    let mut worst_slope = 0.0f64;
    let mut failure: Option<String> = None;
    for (label, rep) in runs {
        let rep = rep?;
        worst_spread = worst_spread.max(rep.spread_log);
        worst_slope = worst_slope
            .max(rep.outer_slope_hi.abs())
            .max(rep.outer_slope_lo.abs());
        if !rep.pass && failure.is_none() {
            failure = Some(format!(
                "{label}: band_ok={}, slope_ok={}, spread={:.3}, slopes=({:.3}, {:.3}), argmax={:?}",
                rep.band_ok,
                rep.slope_ok,
                rep.spread_log,
                rep.outer_slope_hi,
                rep.outer_slope_lo,
                rep.argmax
            ));
        }
    }
    let case = |c: CaseReport| {
        c.with_metric("worst_spread_log", worst_spread)
            .with_metric("worst_outer_slope", worst_slope)
            .with_metric("configs", configs.len() as f64)
    };
    match failure {
        None => Ok(case(CaseReport::pass(name))),
        Some(w) => Ok(case(CaseReport::fail(name, w))),
    }
}

fn expect_two_sided_failure(
    name: &'static str,
    env: Envelope,
    what: &str,
) -> CaseOutcome {
    let radii = radius_ladder(0.25, 400.0, 32);
    let opts = TwoSidedOpts::default();
    let rep = check_envelope_two_sided(&env, 1.0, &[0.0], &radii, &opts).map_err(err_str)?;
    let case = CaseReport::pass(name)
        .with_metric("spread_log", rep.spread_log)
        .with_metric("outer_slope_hi", rep.outer_slope_hi)
        .with_metric("outer_slope_lo", rep.outer_slope_lo);
    if rep.pass {
        Ok(CaseReport::fail(
            name,
            format!("{what} passed the two-sided test; the probe has lost its teeth"),
        )
        .with_metric("spread_log", rep.spread_log))
    } else {
        Ok(case)
    }
}

fn case_sharpness_bare_gaussian(
    name: &'static str,
    _cfg: &SuiteConfig,
    _seed: u64,
) -> CaseOutcome {
    let p = Params::new(1, 0.0, 0.5).map_err(err_str)?;
    expect_two_sided_failure(name, Envelope::bare_gaussian(p), "the bare Gaussian envelope")
}

fn case_sharpness_wrong_log(name: &'static str, _cfg: &SuiteConfig, _seed: u64) -> CaseOutcome {
    let p = Params::new(1, 0.0, 0.5).map_err(err_str)?;
    expect_two_sided_failure(
        name,
        Envelope::with_log_exponent_delta(p, -1.5),
        "an envelope with the logarithm exponent lowered by 1.5",
    )
}

fn case_refined_upper(name: &'static str, _cfg: &SuiteConfig, _seed: u64) -> CaseOutcome {
    let xs: Vec<Vec<f64>> = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
    let ts = [0.1, 0.3, 1.0];
    let radii = radius_ladder(0.3, 30.0, 20);
    let opts = RefinedUpperOpts::default();
    let mut worst_ladder = 0.0f64;
    let mut worst_t_uniformity = 0.0f64;
    for (d, m, nu) in [(1, 0.0, 0.5), (1, -1.0, 1.0)] {
        let p = Params::new(d, m, nu).map_err(err_str)?;
        let rep = check_refined_upper(&p, &xs, &ts, &radii, &opts).map_err(err_str)?;
        worst_ladder = worst_ladder
            .max(rep.ladder_c1_spread_log)
            .max(rep.ladder_c2_spread_log);
        worst_t_uniformity = worst_t_uniformity.max(rep.t_uniformity_log);
        if !rep.pass {
            return Ok(CaseReport::fail(
                name,
                format!(
                    "refined bound infeasible at (d,m,nu)=({d},{m},{nu}): excess={:.3e}, witness={:?}",
                    rep.verification_excess_log, rep.verification_witness
                ),
            )
            .with_metric("ladder_spread_log", worst_ladder)
            .with_metric("t_uniformity_log", worst_t_uniformity));
        }
    }
    Ok(CaseReport::pass(name)
        .with_metric("ladder_spread_log", worst_ladder)
        .with_metric("t_uniformity_log", worst_t_uniformity))
}

fn case_split_decay(name: &'static str, _cfg: &SuiteConfig, _seed: u64) -> CaseOutcome {
    let p = Params::new(1, 0.0, 0.5).map_err(err_str)?;
    let spec = QuadSpec::with_rel_tol(1e-9);
    let radii = radius_ladder(4.0, 40.0, 12);
    let rep = check_split_decay(&p, &[0.0], &[0.1, 1.0], &radii, &spec).map_err(err_str)?;
    let case = CaseReport::pass(name)
        .with_metric("gamma_hat", rep.gamma_hat)
        .with_metric("i1_ratio_max_log", rep.i1_ratio_max_log)
        .with_metric("additivity_err", rep.additivity_err);
    if rep.pass {
        Ok(case)
    } else {
        Ok(CaseReport::fail(
            name,
            format!(
                "split decay failed: gamma_hat={:.3e}, additivity={:.3e}",
                rep.gamma_hat, rep.additivity_err
            ),
        )
        .with_metric("gamma_hat", rep.gamma_hat)
        .with_metric("additivity_err", rep.additivity_err))
    }
}

fn case_log_lemma(name: &'static str, _cfg: &SuiteConfig, seed: u64) -> CaseOutcome {
    let mut c_margin = f64::INFINITY;
    let mut d_margin = f64::INFINITY;
    for (i, &lambda) in [1.5, 2.0, 4.0].iter().enumerate() {
        let rep = check_log_lemma(lambda, 20_000, seed.wrapping_add(i as u64));
        c_margin = c_margin.min(rep.c_hat - rep.c_required);
        d_margin = d_margin.min(rep.d_required - rep.d_hat);
        if !rep.pass {
            return Ok(CaseReport::fail(
                name,
                format!(
                    "lambda={lambda}: c_hat={:.6} vs required {:.6}, d_hat={:.6} vs cap {:.6}",
                    rep.c_hat, rep.c_required, rep.d_hat, rep.d_required
                ),
            )
            .with_metric("c_margin", c_margin)
            .with_metric("d_margin", d_margin));
        }
    }
    Ok(CaseReport::pass(name)
        .with_metric("c_margin", c_margin)
        .with_metric("d_margin", d_margin))
}

// ---------------------------------------------------------------------
// maximal
// ---------------------------------------------------------------------

fn maximal_cases() -> Vec<CaseSpec> {
    vec![
        CaseSpec { name: "maximal/mloc-matches-exhaustive-oracle", run: case_mloc_oracle },
        CaseSpec { name: "maximal/lower-bound-on-positive-inputs", run: case_mloc_lower },
        CaseSpec { name: "maximal/poisson-domination", run: case_domination },
    ]
}

/// Brute-force discrete local maximal function: every node distance is a
/// candidate ball radius; numerator masked to `|y| ≤ 3max(|x|,1)`,
/// denominator the full in-box ball measure.
fn exhaustive_mloc(nodes: &[(Vec<f64>, f64, f64)], x: &[f64]) -> f64 {
    let cut = 3.0 * norm2(x).max(1.0);
    let mut items: Vec<(f64, f64, f64)> = nodes
        .iter()
        .map(|(y, fm, m)| {
            let dist = x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let masked = if norm2(y) <= cut { *fm } else { 0.0 };
            (dist, masked, *m)
        })
        .collect();
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = f64::NEG_INFINITY;
    let mut num = 0.0;
    let mut den = 0.0;
    let mut i = 0;
    while i < items.len() {
        let d0 = items[i].0;
        while i < items.len() && items[i].0 == d0 {
            num += items[i].1;
            den += items[i].2;
            i += 1;
        }
        if den > 0.0 {
            best = best.max(num / den);
        }
    }
    best
}

fn oracle_nodes(f: &ScalarField, grid: &Grid) -> Result<Vec<(Vec<f64>, f64, f64)>, String> {
    grid.nodes()
        .map(|(flat, y)| {
            let v = f.eval(&y).map_err(err_str)?.abs().to_real();
            let m = grid.node_measure(flat);
            Ok((y, v * m, m))
        })
        .collect()
}

fn case_mloc_oracle(name: &'static str, _cfg: &SuiteConfig, _seed: u64) -> CaseOutcome {
    let mut max_rel = 0.0f64;

    // One dimension: mixture of bumps over a floor.
    let f1 = ScalarField::from_real_fn(|y: &[f64]| {
        0.2 + (-(y[0] - 1.0).powi(2)).exp() + 2.0 * (-2.0 * (y[0] + 2.0).powi(2)).exp()
    });
    let g1 = Grid::symmetric(1, 8.0, 161).map_err(err_str)?;
    let ev1 = MlocEvaluator::new(&f1, &g1).map_err(err_str)?;
    let nodes1 = oracle_nodes(&f1, &g1)?;
    for i in 0..21 {
        let x = [-7.5 + 15.0 * i as f64 / 20.0];
        let mut ladder: Vec<f64> = nodes1
            .iter()
            .map(|(y, _, _)| (y[0] - x[0]).abs())
            .collect();
        ladder.sort_by(f64::total_cmp);
        ladder.dedup();
        let got = ev1.eval(&x, &ladder).value;
        let want = exhaustive_mloc(&nodes1, &x);
        max_rel = max_rel.max(rel_err(got, want));
    }

    // Two dimensions: radial profile plus an off-center bump.
    let f2 = ScalarField::from_real_fn(|y: &[f64]| {
        let r2 = y[0] * y[0] + y[1] * y[1];
        (-0.5 * r2).exp() + 1.5 * (-((y[0] - 1.0).powi(2) + (y[1] - 1.0).powi(2))).exp()
    });
    let g2 = Grid::symmetric(2, 4.0, 41).map_err(err_str)?;
    let ev2 = MlocEvaluator::new(&f2, &g2).map_err(err_str)?;
    let nodes2 = oracle_nodes(&f2, &g2)?;
    for &x in &[
        [0.0, 0.0],
        [1.0, 1.0],
        [-2.0, 0.5],
        [3.0, -3.0],
        [0.2, -1.4],
    ] {
        let mut ladder: Vec<f64> = nodes2
            .iter()
            .map(|(y, _, _)| ((y[0] - x[0]).powi(2) + (y[1] - x[1]).powi(2)).sqrt())
            .collect();
        ladder.sort_by(f64::total_cmp);
        ladder.dedup();
        let got = ev2.eval(&x, &ladder).value;
        let want = exhaustive_mloc(&nodes2, &x);
        max_rel = max_rel.max(rel_err(got, want));
    }

    let tol = 0.02;
    if max_rel < tol {
        Ok(CaseReport::pass(name)
            .with_metric("max_rel_err", max_rel)
            .with_metric("tolerance", tol))
    } else {
        Ok(CaseReport::fail(name, format!("oracle mismatch {max_rel:.3e}"))
            .with_metric("max_rel_err", max_rel)
            .with_metric("tolerance", tol))
    }
}

fn case_mloc_lower(name: &'static str, _cfg: &SuiteConfig, _seed: u64) -> CaseOutcome {
    let grid = Grid::symmetric(1, 12.0, 241).map_err(err_str)?;
    let spec = MaximalSpec::for_grid(&grid, 1.0);
    let xs: Vec<Vec<f64>> = vec![vec![0.0], vec![1.0], vec![2.0], vec![4.0], vec![8.0]];
    let fields: [(&str, ScalarField); 3] = [
        ("gaussian", ScalarField::from_real_fn(|y: &[f64]| (-0.5 * y[0] * y[0]).exp())),
        ("flat", flat_field()),
        (
            "bumps",
            ScalarField::from_real_fn(|y: &[f64]| {
                0.05 + (-(y[0] - 1.0).powi(2)).exp() + 0.5 * (-2.0 * (y[0] + 2.0).powi(2)).exp()
            }),
        ),
    ];
    let mut worst_margin = f64::INFINITY;
    for (label, f) in &fields {
        let rep = check_mloc_lower(f, &grid, &xs, &spec).map_err(err_str)?;
        worst_margin = worst_margin.min(rep.worst_margin);
        if !rep.pass {
            return Ok(CaseReport::fail(
                name,
                format!(
                    "lower bound failed for {label} at x={:?}: margin {:.4} vs floor {:.4}",
                    rep.worst_x,
                    rep.worst_margin,
                    1.0 - rep.eps_disc
                ),
            )
            .with_metric("worst_margin", worst_margin));
        }
    }
    Ok(CaseReport::pass(name).with_metric("worst_margin", worst_margin))
}

fn case_domination(name: &'static str, _cfg: &SuiteConfig, _seed: u64) -> CaseOutcome {
    let p = Params::new(1, 0.0, 0.5).map_err(err_str)?;
    let xs: Vec<Vec<f64>> = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
    let fit_radii = radius_ladder(0.3, 30.0, 20);
    let fits = check_refined_upper(&p, &xs, &[0.25, 0.5, 1.0], &fit_radii, &RefinedUpperOpts::default())
        .map_err(err_str)?
        .fits;
    let f = ScalarField::from_real_fn(|y: &[f64]| {
        (1.0 + 0.5 * (3.0 * y[0]).cos()) * (-0.5 * y[0] * y[0]).exp()
    });
    let grid = Grid::symmetric(1, 12.0, 241).map_err(err_str)?;
    let full = MaximalSpec::for_grid(&grid, 1.0);
    let spec = MaximalSpec {
        radius_ladder: full.radius_ladder.clone(),
        t_ladder: full.t_ladder.iter().copied().step_by(2).collect(),
    };
    let rep = check_domination(
        &p,
        1.0,
        &f,
        &grid,
        &fits,
        &spec,
        &QuadSpec::with_rel_tol(1e-8),
        &ApplyOpts::default(),
    )
    .map_err(err_str)?;
    let case = CaseReport::pass(name)
        .with_metric("k_hat_log", rep.k_hat_log)
        .with_metric("slack_log", -rep.verification_excess_log)
        .with_metric("f_phi_integral", rep.f_phi_integral);
    if rep.pass && !rep.all_zero {
        Ok(case)
    } else {
        Ok(CaseReport::fail(
            name,
            format!(
                "domination infeasible: excess={:.3e}, witness={:?}",
                rep.verification_excess_log, rep.witness
            ),
        )
        .with_metric("k_hat_log", rep.k_hat_log)
        .with_metric("verification_excess_log", rep.verification_excess_log))
    }
}

// ---------------------------------------------------------------------
// weights
// ---------------------------------------------------------------------

fn weights_cases() -> Vec<CaseSpec> {
    vec![
        CaseSpec { name: "weights/admissibility-norm-verdicts", run: case_dp_verdicts },
        CaseSpec { name: "weights/power-weight-cap-exact", run: case_v_alpha_cap },
        CaseSpec { name: "weights/two-weight-transfer-stable", run: case_two_weight },
        CaseSpec { name: "weights/alpha-boundary-diagnostic", run: case_alpha_boundary },
        CaseSpec {
            name: "weights/gaussian-integrability-certificates",
            run: case_gauss_integrability,
        },
        CaseSpec { name: "weights/output-weight-threshold", run: case_theorem_weight },
        CaseSpec { name: "weights/necessity-chain-dyadic-shells", run: case_necessity },
        CaseSpec { name: "weights/end-to-end-maximal-transfer", run: case_end_to_end },
    ]
}

fn case_dp_verdicts(name: &'static str, _cfg: &SuiteConfig, _seed: u64) -> CaseOutcome {
    let grid = Grid::symmetric(1, 64.0, 1025).map_err(err_str)?;
    let p_std = Params::new(1, 0.0, 0.5).map_err(err_str)?;

    let gauss = WeightPair::new(gaussian_weight_field(1.0), 2.0).map_err(err_str)?;
    let v_gauss = dp_norm(&p_std, &gauss, &grid).map_err(err_str)?;

    let steep = WeightPair::new(gaussian_weight_field(2.0), 2.0).map_err(err_str)?;
    let v_steep = dp_norm(&p_std, &steep, &grid).map_err(err_str)?;

    let p_flat = Params::new(1, 2.0, 0.5).map_err(err_str)?;
    let flat = WeightPair::new(flat_field(), 2.0).map_err(err_str)?;
    let v_flat = dp_norm(&p_flat, &flat, &grid).map_err(err_str)?;

    let ok = v_gauss.is_finite() && !v_steep.is_finite() && v_flat.is_finite();
    let case = CaseReport::pass(name)
        .with_metric("gaussian_log_norm", v_gauss.log_value())
        .with_metric("steep_gaussian_log_norm", v_steep.log_value())
        .with_metric("flat_log_norm", v_flat.log_value());
    if ok {
        Ok(case)
    } else {
        Ok(CaseReport::fail(
            name,
            format!(
                "verdict pattern wrong: gaussian finite={}, steep finite={}, flat finite={}",
                v_gauss.is_finite(),
                v_steep.is_finite(),
                v_flat.is_finite()
            ),
        ))
    }
}

fn case_v_alpha_cap(name: &'static str, _cfg: &SuiteConfig, _seed: u64) -> CaseOutcome {
    let grid = Grid::symmetric(1, 16.0, 321).map_err(err_str)?;
    let wp = WeightPair::new(flat_field(), 2.0).map_err(err_str)?;
    let alpha = 1.5;
    let va = build_v_alpha(&wp, alpha, &grid).map_err(err_str)?;
    // For the flat weight the construction collapses to a pure power.
    let mut max_rel = 0.0f64;
    for (_, y) in grid.nodes() {
        let got = va.field.eval(&y).map_err(err_str)?.to_real();
        let want = (1.0 + y[0].abs()).powf(-(2.0 - 1.0) * alpha);
        max_rel = max_rel.max(rel_err(got, want));
    }
    if !(va.min_value > 0.0) || va.max_value > va.cap * (1.0 + 1e-9) {
        return Ok(CaseReport::fail(
            name,
            format!("cap violated: max={}, cap={}", va.max_value, va.cap),
        ));
    }
    // The boundary exponent must be rejected, not silently accepted.
    match build_v_alpha(&wp, 1.0, &grid) {
        Err(WeightsError::BadConfig(_)) => {}
        Err(e) => {
            return Ok(CaseReport::fail(
                name,
                format!("alpha = 1 rejected with the wrong error: {e}"),
            ))
        }
        Ok(_) => {
            return Ok(CaseReport::fail(name, "alpha = 1 must be rejected".to_string()))
        }
    }
    let tol = 1e-10;
    if max_rel < tol {
        Ok(CaseReport::pass(name)
            .with_metric("max_rel_err", max_rel)
            .with_metric("cap", va.cap)
            .with_metric("c_sigma", va.c_sigma))
    } else {
        Ok(CaseReport::fail(name, format!("closed form off by {max_rel:.3e}"))
            .with_metric("max_rel_err", max_rel))
    }
}

fn case_two_weight(name: &'static str, _cfg: &SuiteConfig, seed: u64) -> CaseOutcome {
    let grid = Grid::symmetric(1, 12.0, 241).map_err(err_str)?;
    let mut worst_drift = 0.0f64;
    let mut sup_ratio = f64::NEG_INFINITY;
    for (label, field, alpha, trials) in [
        ("flat", flat_field(), 2.0, 30usize),
        ("gaussian", gaussian_weight_field(1.0), 1.5, 20usize),
    ] {
        let wp = WeightPair::new(field, 2.0).map_err(err_str)?;
        let rep = check_two_weight_mloc(&wp, alpha, trials, seed, &grid).map_err(err_str)?;
        worst_drift = worst_drift.max(rep.drift);
        sup_ratio = sup_ratio.max(rep.sup_ratio);
        if rep.verdict != TransferVerdict::Pass {
            return Ok(CaseReport::fail(
                name,
                format!(
                    "{label}: verdict {:?}, drift {:.4}, witness {:?}",
                    rep.verdict, rep.drift, rep.divergent_witness
                ),
            )
            .with_metric("drift", rep.drift)
            .with_metric("sup_ratio", rep.sup_ratio));
        }
    }
    Ok(CaseReport::pass(name)
        .with_metric("worst_drift", worst_drift)
        .with_metric("sup_ratio", sup_ratio))
}

fn case_alpha_boundary(name: &'static str, _cfg: &SuiteConfig, seed: u64) -> CaseOutcome {
    let grid = Grid::symmetric(1, 12.0, 241).map_err(err_str)?;
    let wp = WeightPair::new(flat_field(), 2.0).map_err(err_str)?;
    let rep = check_two_weight_mloc(&wp, 1.0, 10, seed, &grid).map_err(err_str)?;
    if rep.verdict != TransferVerdict::Diagnostic {
        return Ok(CaseReport::fail(
            name,
            format!("alpha = 1 must stay diagnostic, got {:?}", rep.verdict),
        ));
    }
    Ok(CaseReport::diagnostic(name)
        .with_metric("sup_ratio", rep.sup_ratio)
        .with_metric("drift", rep.drift))
}

fn case_gauss_integrability(name: &'static str, _cfg: &SuiteConfig, _seed: u64) -> CaseOutcome {
    let grid = Grid::symmetric(1, 16.0, 801).map_err(err_str)?;
    let b_ladder = [0.1, 1.0];

    let gauss = WeightPair::new(gaussian_weight_field(1.0), 2.0).map_err(err_str)?;
    let rep = check_gaussian_integrability(&gauss, 1.5, 0.5, &b_ladder, &grid).map_err(err_str)?;
    if rep.verdict != GaussVerdict::Pass || !rep.hypothesis_met {
        return Ok(CaseReport::fail(
            name,
            format!("gaussian weight: verdict {:?}", rep.verdict),
        ));
    }
    let shell = rep.shell.ok_or("missing 1-D shell cross-check")?;
    if !shell.ok {
        return Ok(CaseReport::fail(
            name,
            format!(
                "shell decomposition disagrees with the direct integral: rel err {:.3e}",
                shell.rel_err
            ),
        )
        .with_metric("shell_rel_err", shell.rel_err));
    }

    let flat = WeightPair::new(flat_field(), 2.0).map_err(err_str)?;
    let rep_flat =
        check_gaussian_integrability(&flat, 1.5, 0.5, &b_ladder, &grid).map_err(err_str)?;
    if rep_flat.verdict != GaussVerdict::Pass {
        return Ok(CaseReport::fail(
            name,
            format!("flat weight: verdict {:?}", rep_flat.verdict),
        ));
    }

    // Over-damped weight: the tempered reciprocal grows like e^{+|x|²}, so
    // the hypothesis must be reported unmet rather than pushed through.
    let steep = WeightPair::new(gaussian_weight_field(2.0), 2.0).map_err(err_str)?;
    let rep_steep =
        check_gaussian_integrability(&steep, 1.5, 0.5, &b_ladder, &grid).map_err(err_str)?;
    if rep_steep.verdict != GaussVerdict::HypothesisUnmet || !rep_steep.conclusions.is_empty() {
        return Ok(CaseReport::fail(
            name,
            format!("steep gaussian: expected unmet hypothesis, got {:?}", rep_steep.verdict),
        ));
    }

    Ok(CaseReport::pass(name)
        .with_metric("shell_rel_err", shell.rel_err)
        .with_metric(
            "first_conclusion_log",
            rep.conclusions.first().map(|(_, v)| v.log_value()).unwrap_or(f64::NAN),
        ))
}

fn case_theorem_weight(name: &'static str, _cfg: &SuiteConfig, _seed: u64) -> CaseOutcome {
    let grid = Grid::symmetric(1, 16.0, 641).map_err(err_str)?;
    let p = Params::new(1, 0.0, 0.5).map_err(err_str)?;
    let wp = WeightPair::new(gaussian_weight_field(1.0), 2.0).map_err(err_str)?;
    let alpha = 1.5;
    let n0 = decay_threshold(&p, wp.p(), alpha);

    // At the threshold the builder must refuse.
    let at = TheoremWeightSpec { alpha, n_exponent: n0, sigma: 0.5 };
    match build_theorem_weight(&p, &wp, &at, &grid) {
        Err(WeightsError::BelowThreshold { .. }) => {}
        Err(e) => {
            return Ok(CaseReport::fail(
                name,
                format!("threshold exponent rejected with the wrong error: {e}"),
            ))
        }
        Ok(_) => {
            return Ok(CaseReport::fail(
                name,
                "an exponent at the decay threshold must be rejected".to_string(),
            ))
        }
    }

    let spec = TheoremWeightSpec { alpha, n_exponent: n0 + 1.5, sigma: 0.5 };
    let tw = build_theorem_weight(&p, &wp, &spec, &grid).map_err(err_str)?;
    if tw.power_cap_margin_log < -1e-9 || tw.gaussian_cap_margin_log < -1e-9 {
        return Ok(CaseReport::fail(
            name,
            format!(
                "cap margins negative: power {:.3e}, gaussian {:.3e}",
                tw.power_cap_margin_log, tw.gaussian_cap_margin_log
            ),
        ));
    }
    let dpe = dpe_norm(&p, &tw.field, wp.p(), spec.sigma, &grid).map_err(err_str)?;
    if !dpe.is_finite() {
        return Ok(CaseReport::fail(
            name,
            "output admissibility norm diverged for the constructed weight".to_string(),
        ));
    }
    Ok(CaseReport::pass(name)
        .with_metric("n0", tw.n0)
        .with_metric("power_cap_margin_log", tw.power_cap_margin_log)
        .with_metric("gaussian_cap_margin_log", tw.gaussian_cap_margin_log)
        .with_metric("dpe_log_norm", dpe.log_value()))
}

fn case_necessity(name: &'static str, _cfg: &SuiteConfig, _seed: u64) -> CaseOutcome {
    let grid = Grid::symmetric(1, 32.0, 1281).map_err(err_str)?;
    let wp = WeightPair::new(flat_field(), 2.0).map_err(err_str)?;
    let va = build_v_alpha(&wp, 2.0, &grid).map_err(err_str)?;
    let rep_a = necessity_probe(&wp, &va.field, 1e-2, 5, &grid).map_err(err_str)?;
    let rep_b = necessity_probe(&wp, &va.field, 1e-4, 5, &grid).map_err(err_str)?;
    let c_drift = rel_err(rep_a.c_constant, rep_b.c_constant);
    if !rep_a.pass || !rep_b.pass {
        return Ok(CaseReport::fail(
            name,
            format!(
                "chain broke: eps=1e-2 pass={}, eps=1e-4 pass={} (geometry {}, kappa {}, chain {})",
                rep_a.pass, rep_b.pass, rep_a.geometry_ok, rep_a.kappa_ok, rep_a.chain_ok
            ),
        )
        .with_metric("c_constant", rep_a.c_constant));
    }
    if c_drift > 0.05 {
        return Ok(CaseReport::fail(
            name,
            format!("bound constant depends on epsilon: drift {c_drift:.4}"),
        )
        .with_metric("c_drift", c_drift));
    }
    Ok(CaseReport::pass(name)
        .with_metric("c_constant", rep_a.c_constant)
        .with_metric("c_drift", c_drift)
        .with_metric("shells", rep_a.shells.len() as f64))
}

fn case_end_to_end(name: &'static str, _cfg: &SuiteConfig, seed: u64) -> CaseOutcome {
    let p = Params::new(1, 0.0, 0.5).map_err(err_str)?;
    let wp = WeightPair::new(gaussian_weight_field(1.0), 2.0).map_err(err_str)?;
    let alpha = 1.5;
    let n0 = decay_threshold(&p, wp.p(), alpha);
    let spec = TheoremWeightSpec { alpha, n_exponent: n0 + 1.5, sigma: 0.5 };
    let xgrid = Grid::symmetric(1, 6.0, 25).map_err(err_str)?;
    let sample_grid = Grid::symmetric(1, 12.0, 241).map_err(err_str)?;
    let opts = EndToEndOpts {
        a: 1.0,
        n_trials: 2,
        seed,
        t_stride: 8,
        quad: QuadSpec::with_rel_tol(1e-8),
        apply: ApplyOpts::default(),
    };
    let rep =
        check_end_to_end_bound(&p, &wp, &spec, &xgrid, &sample_grid, &opts).map_err(err_str)?;
    let case = CaseReport::pass(name)
        .with_metric("c_hat", rep.c_hat)
        .with_metric("c_refined", rep.c_refined)
        .with_metric("drift", rep.drift);
    if rep.pass {
        Ok(case)
    } else {
        Ok(CaseReport::fail(
            name,
            format!(
                "transfer unstable: c_hat={:.4e}, refined={:.4e}, drift={:.4}",
                rep.c_hat, rep.c_refined, rep.drift
            ),
        )
        .with_metric("c_hat", rep.c_hat)
        .with_metric("drift", rep.drift))
    }
}

// ---------------------------------------------------------------------
// converge
// ---------------------------------------------------------------------

fn converge_cases() -> Vec<CaseSpec> {
    vec![
        CaseSpec { name: "converge/growth-example-x0", run: case_converge_x0 },
        CaseSpec { name: "converge/growth-example-x1", run: case_converge_x1 },
        CaseSpec { name: "converge/growth-example-x2", run: case_converge_x2 },
        CaseSpec { name: "converge/eigenfunction-rate", run: case_converge_rate },
    ]
}

/// The admissible growth profile `e^{|y|²/2} / ((1+|y|)^d ln(e+|y|))`:
/// as fast-growing as the semigroup tolerates, hence the interesting
/// boundary test for pointwise convergence.
pub fn growth_example_field(d: usize) -> ScalarField {
    ScalarField::from_fn(move |y: &[f64]| {
        let r = norm2(y);
        LogScalar::from_log(
            0.5 * r * r - d as f64 * (1.0 + r).ln() - (E + r).ln().ln(),
        )
    })
}

/// `|P_t f(x) − f(x)|` along a decreasing time ladder for the growth
/// example; the sequence must decrease strictly and end below `1e-2`.
pub fn growth_example_errors(
    x: f64,
    t_ladder: &[f64],
) -> Result<Vec<f64>, String> {
    let p = Params::new(1, 0.0, 0.5).map_err(err_str)?;
    let f = growth_example_field(1);
    let spec = QuadSpec::with_rel_tol(1e-9);
    let opts = ApplyOpts { box_radius: Some(48.0), ..ApplyOpts::default() };
    let fx = f.eval(&[x]).map_err(err_str)?.to_real();
    let mut errs = Vec::with_capacity(t_ladder.len());
    for &t in t_ladder {
        let got = poisson_apply(&p, t, &f, &[x], &spec, &opts)
            .map_err(err_str)?
            .value
            .to_real();
        errs.push((got - fx).abs());
    }
    Ok(errs)
}

/// Five-point ladder used by the convergence table. Geometric with ratio
/// 4, ending just above the kernel's minimum admissible time: the error
/// of the growth example shrinks roughly like `t`, so reaching `1e-2`
/// needs the final rung near `1e-3`.
pub const CONVERGE_T_LADDER: [f64; 5] = [0.384, 0.096, 0.024, 0.006, 0.0015];

fn converge_case_at(name: &'static str, x: f64) -> CaseOutcome {
    let errs = growth_example_errors(x, &CONVERGE_T_LADDER)?;
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    let final_err = *errs.last().unwrap();
    let mut case = CaseReport::pass(name);
    for (t, e) in CONVERGE_T_LADDER.iter().zip(&errs) {
        case = case.with_metric(format!("err_t{t}"), *e);
    }
    case = case.with_metric("final_err", final_err);
    if monotone && final_err < 1e-2 {
        Ok(case)
    } else {
        Ok(CaseReport::fail(
            name,
            format!("error table at x={x}: {errs:?} (monotone={monotone})"),
        )
        .with_metric("final_err", final_err))
    }
}

fn case_converge_x0(name: &'static str, _cfg: &SuiteConfig, _seed: u64) -> CaseOutcome {
    converge_case_at(name, 0.0)
}

fn case_converge_x1(name: &'static str, _cfg: &SuiteConfig, _seed: u64) -> CaseOutcome {
    converge_case_at(name, 1.0)
}

fn case_converge_x2(name: &'static str, _cfg: &SuiteConfig, _seed: u64) -> CaseOutcome {
    converge_case_at(name, 2.0)
}

/// On an eigenfunction the convergence error is exactly
/// `|F_ν(t√λ)/Γ(ν) − 1|`, which vanishes like `t^{2ν}`; the fitted
/// log-log slope of the error ladder must match the order `2ν`.
fn case_converge_rate(name: &'static str, _cfg: &SuiteConfig, _seed: u64) -> CaseOutcome {
    let quad = QuadSpec::with_rel_tol(1e-12);
    let lambda = 5.0f64; // |k| = 2, d = 1, m = 0
    // Small enough that the t^{2ν} leading term dominates the analytic t²
    // correction for every ν below; large enough to stay far above the
    // quadrature floor.
    let ts = [0.08, 0.04, 0.02, 0.01, 0.005];
    let mut worst_gap = 0.0f64;
    let mut slopes = Vec::new();
    for &nu in &[0.3, 0.5, 0.75] {
        let gamma = gamma_fn(nu);
        let mut lts = Vec::new();
        let mut les = Vec::new();
        for &t in &ts {
            let mult = f_nu(nu, t * lambda.sqrt(), &quad).map_err(err_str)?.to_real() / gamma;
            let err = (mult - 1.0).abs();
            lts.push(t.ln());
            les.push(err.ln());
        }
        let slope = fit_line_slope(&lts, &les);
        slopes.push((nu, slope));
        worst_gap = worst_gap.max((slope - 2.0 * nu).abs());
    }
    let tol = 0.15;
    let mut case = CaseReport::pass(name).with_metric("worst_order_gap", worst_gap);
    for (nu, slope) in &slopes {
        case = case.with_metric(format!("order_nu{nu}"), *slope);
    }
    if worst_gap < tol {
        Ok(case)
    } else {
        Ok(CaseReport::fail(
            name,
            format!("convergence order off: fitted {slopes:?}, expected 2ν"),
        )
        .with_metric("worst_order_gap", worst_gap))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for name in [
            "special", "heat", "poisson", "estimates", "maximal", "weights", "converge", "all",
        ] {
            let s: SuiteName = name.parse().unwrap();
            assert_eq!(s.to_string(), name);
        }
        assert!("bogus".parse::<SuiteName>().is_err());
    }

    #[test]
    fn case_seeds_are_stable_and_name_sensitive() {
        let a = case_seed(42, "special/f-nu-ode-residual");
        assert_eq!(a, case_seed(42, "special/f-nu-ode-residual"));
        assert_ne!(a, case_seed(43, "special/f-nu-ode-residual"));
        assert_ne!(a, case_seed(42, "special/f-nu-half-integer-closed-forms"));
        // Pinned: the derivation is part of the determinism contract.
        assert_eq!(fnv1a("abc"), 0xe71fa2190541574b);
    }

    #[test]
    fn case_names_are_unique_and_prefixed() {
        let cases = SuiteName::All.cases();
        let mut names: Vec<&str> = cases.iter().map(|c| c.name).collect();
        let total = names.len();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), total);
        for name in names {
            let prefix = name.split('/').next().unwrap();
            assert!(prefix.parse::<SuiteName>().is_ok(), "case {name} lacks a suite prefix");
        }
    }

    #[test]
    fn special_suite_passes_and_is_deterministic() {
        let cfg = SuiteConfig { jobs: 2, ..SuiteConfig::default() };
        let mut a = run_suite(SuiteName::Special, &cfg).unwrap();
        let mut b = run_suite(SuiteName::Special, &cfg).unwrap();
        assert_eq!(a.exit_code(), 0, "{}", a.to_json());
        a.timestamp = 0;
        b.timestamp = 0;
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn bad_config_is_rejected() {
        let cfg = SuiteConfig { dm_matrix: vec![(1, -5.0)], ..SuiteConfig::default() };
        assert!(matches!(
            run_suite(SuiteName::Special, &cfg),
            Err(SuiteError::BadConfig(_))
        ));
        let cfg = SuiteConfig { nus: vec![], ..SuiteConfig::default() };
        assert!(run_suite(SuiteName::Special, &cfg).is_err());
    }
}
