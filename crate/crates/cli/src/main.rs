//! `hermipoisson` — kernels, operators, and verification suites from the
//! command line.
//!
//! Test functions and weights are given as expressions (`exp(-r^2)`,
//! `1/((1+r)*ln(e+r))`, …) so the interesting examples can be reproduced
//! without writing code. Configuration precedence is command-line flags
//! over `key=value` config file over built-in defaults; the RNG seed
//! additionally honors the `HERMIPOISSON_SEED` environment variable.

use std::fs;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hermipoisson::expr::parse_expr;
use hermipoisson::grid::{Grid, GridField, ScalarField};
use hermipoisson::heat::{mehler_kernel, ApplyOpts, TimeVar};
use hermipoisson::logscalar::LogScalar;
use hermipoisson::poisson::{poisson_apply, poisson_kernel, KernelRoute};
use hermipoisson::quad::QuadSpec;
use hermipoisson::report::fmt_sig17;
use hermipoisson::special::{f_nu, gamma_fn, hermite_fn_1d, hermite_sweep_1d, Params};
use hermipoisson::suites::{default_seed, run_suite, SuiteConfig, SuiteName, CONVERGE_T_LADDER};
use hermipoisson::weights::{build_theorem_weight, dp_norm, TheoremWeightSpec, WeightPair};

#[derive(Parser)]
#[command(
    name = "hermipoisson",
    version,
    about = "Subordinated Poisson kernels for the Hermite operator, their maximal and \
             weighted estimates, and the certificate suites that verify them"
)]
struct Cli {
    /// `key=value` configuration file (keys: seed, jobs, dm_matrix, nus,
    /// phi_log_exponent_delta). Flags take precedence over the file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the heat or Poisson kernel at one point.
    Kernel(KernelArgs),
    /// Apply the subordinated Poisson operator to an expression.
    Apply(ApplyArgs),
    /// Run a verification suite and report pass/fail per case.
    Verify(VerifyArgs),
    /// Weight construction and admissibility checks.
    #[command(subcommand)]
    Weights(WeightsCommand),
    /// Pointwise-convergence error table along a descending time ladder.
    Converge(ConvergeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelFamily {
    Heat,
    Poisson,
}

#[derive(Clone, Copy, ValueEnum)]
enum ParamKind {
    /// Heat: time in the s = tanh(v) parametrization. Poisson: the
    /// s-substituted integral route.
    S,
    /// Heat: time in the r = e^{-2v} parametrization. Poisson: the
    /// r-substituted integral route.
    R,
    /// Heat: plain time v. Poisson: direct subordination of the heat
    /// kernel in the time domain.
    V,
}

#[derive(Args)]
struct KernelArgs {
    /// Kernel family.
    #[arg(value_enum)]
    family: KernelFamily,
    /// Space dimension.
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Potential shift m (the operator is -Δ + |x|² + m).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    m: f64,
    /// Subordination order ν.
    #[arg(long, default_value_t = 0.5)]
    nu: f64,
    /// Poisson time t.
    #[arg(long)]
    t: Option<f64>,
    /// Heat time (interpreted per --param; plain v by default).
    #[arg(long)]
    v: Option<f64>,
    /// First argument, comma-separated coordinates.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    x: Vec<f64>,
    /// Second argument, comma-separated coordinates.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    y: Vec<f64>,
    /// Time parametrization (heat) or evaluation route (poisson).
    #[arg(long, value_enum)]
    param: Option<ParamKind>,
}

#[derive(Args)]
struct ApplyArgs {
    /// Input function of r (= |y|) and y1..yd.
    #[arg(long, value_name = "EXPR")]
    f: String,
    /// Poisson time t.
    #[arg(long)]
    t: f64,
    /// Evaluation point, comma-separated; its length sets the dimension.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    x: Vec<f64>,
    /// Potential shift m.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    m: f64,
    /// Subordination order ν.
    #[arg(long, default_value_t = 0.5)]
    nu: f64,
    /// Evaluate through the Hermite eigenfunction expansion instead of
    /// kernel quadrature (one dimension only).
    #[arg(long)]
    series: bool,
    /// Truncation order of the expansion.
    #[arg(long, default_value_t = 64)]
    kmax: usize,
    /// Fixed integration box half-width; derived from the integrand's
    /// growth probe when omitted.
    #[arg(long = "box")]
    box_radius: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite: special, heat, poisson, estimates, maximal, weights,
    /// converge, or all.
    suite: String,
    /// Operator family as d:m pairs, e.g. `1:0,1:-1,2:0`.
    #[arg(long, value_name = "LIST", allow_hyphen_values = true)]
    dm_matrix: Option<String>,
    /// Subordination orders, e.g. `0.5,1`.
    #[arg(long, value_name = "LIST")]
    nus: Option<String>,
    /// RNG seed (default: HERMIPOISSON_SEED or 42).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores, 1 = serial).
    #[arg(long)]
    jobs: Option<usize>,
    /// Write the JSON report here.
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Write the long-form CSV report here.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Mutation hook: perturb the decay envelope's logarithm exponent.
    /// Any nonzero value must make the estimates suite fail.
    #[arg(long, allow_hyphen_values = true)]
    phi_log_exponent_delta: Option<f64>,
}

#[derive(Subcommand)]
enum WeightsCommand {
    /// Build the theorem's output weight on a grid and export it as CSV.
    Build(WeightsBuildArgs),
    /// Admissibility verdict for an input weight.
    Check(WeightsCheckArgs),
}

#[derive(Args)]
struct WeightsBuildArgs {
    /// Input weight as an expression of r and y1..yd.
    #[arg(long, value_name = "EXPR")]
    w: String,
    /// Integrability exponent p.
    #[arg(long)]
    p: f64,
    /// Maximal-function exponent α > 1.
    #[arg(long)]
    alpha: f64,
    /// Polynomial decay exponent N (must exceed the printed threshold N₀).
    #[arg(long = "N")]
    n_exponent: f64,
    /// Grid as d:half_width:nodes_per_axis, e.g. `1:16:641`.
    #[arg(long, value_name = "SPEC")]
    grid: String,
    /// Output CSV path.
    #[arg(long, value_name = "CSV")]
    out: PathBuf,
    /// Potential shift m.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    m: f64,
    /// Subordination order ν.
    #[arg(long, default_value_t = 0.5)]
    nu: f64,
    /// Strictness parameter σ < 1 of the output admissibility check.
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
}

#[derive(Args)]
struct WeightsCheckArgs {
    /// Input weight as an expression of r and y1..yd.
    #[arg(long, value_name = "EXPR")]
    w: String,
    /// Integrability exponent p.
    #[arg(long)]
    p: f64,
    /// Grid as d:half_width:nodes_per_axis.
    #[arg(long, value_name = "SPEC", default_value = "1:64:1025")]
    grid: String,
    /// Potential shift m.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    m: f64,
    /// Subordination order ν.
    #[arg(long, default_value_t = 0.5)]
    nu: f64,
}

#[derive(Args)]
struct ConvergeArgs {
    /// Input function of r (= |y|) and y1..yd.
    #[arg(long, value_name = "EXPR")]
    f: String,
    /// Evaluation point, comma-separated; its length sets the dimension.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    x: Vec<f64>,
    /// Descending comma-separated time ladder.
    #[arg(long, value_name = "SPEC")]
    tladder: Option<String>,
    /// Output CSV path.
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
    /// Potential shift m.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    m: f64,
    /// Subordination order ν.
    #[arg(long, default_value_t = 0.5)]
    nu: f64,
    /// Fixed integration box half-width.
    #[arg(long = "box", default_value_t = 48.0)]
    box_radius: f64,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    let file_cfg = match &cli.config {
        Some(path) => Some(parse_config_file(path)?),
        None => None,
    };
    match cli.command {
        Command::Kernel(args) => cmd_kernel(args),
        Command::Apply(args) => cmd_apply(args),
        Command::Verify(args) => cmd_verify(args, file_cfg),
        Command::Weights(WeightsCommand::Build(args)) => cmd_weights_build(args),
        Command::Weights(WeightsCommand::Check(args)) => cmd_weights_check(args),
        Command::Converge(args) => cmd_converge(args),
    }
}

// ---------------------------------------------------------------------
// configuration file
// ---------------------------------------------------------------------

#[derive(Default)]
struct FileConfig {
    seed: Option<u64>,
    jobs: Option<usize>,
    dm_matrix: Option<Vec<(usize, f64)>>,
    nus: Option<Vec<f64>>,
    phi_log_exponent_delta: Option<f64>,
}

fn parse_config_file(path: &PathBuf) -> Result<FileConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    let mut cfg = FileConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected key=value", path.display(), lineno + 1))?;
        let (key, value) = (key.trim(), value.trim());
        let ctx = || format!("{}:{}: bad value for {key}", path.display(), lineno + 1);
        match key {
            "seed" => cfg.seed = Some(value.parse().with_context(ctx)?),
            "jobs" => cfg.jobs = Some(value.parse().with_context(ctx)?),
            "dm_matrix" => cfg.dm_matrix = Some(parse_dm_matrix(value).with_context(ctx)?),
            "nus" => cfg.nus = Some(parse_f64_list(value).with_context(ctx)?),
            "phi_log_exponent_delta" => {
                cfg.phi_log_exponent_delta = Some(value.parse().with_context(ctx)?)
            }
            other => bail!("{}:{}: unknown config key `{other}`", path.display(), lineno + 1),
        }
    }
    Ok(cfg)
}

fn parse_dm_matrix(src: &str) -> Result<Vec<(usize, f64)>> {
    src.split(',')
        .map(|pair| {
            let (d, m) = pair
                .trim()
                .split_once(':')
                .ok_or_else(|| anyhow!("expected d:m, got `{pair}`"))?;
            Ok((d.trim().parse()?, m.trim().parse()?))
        })
        .collect()
}

fn parse_f64_list(src: &str) -> Result<Vec<f64>> {
    src.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| anyhow!("`{v}`: {e}")))
        .collect()
}

/// `d:half_width:nodes_per_axis` → a symmetric uniform grid.
fn parse_grid_spec(src: &str) -> Result<Grid> {
    let parts: Vec<&str> = src.split(':').collect();
    if parts.len() != 3 {
        bail!("grid spec must be d:half_width:nodes_per_axis, got `{src}`");
    }
    let d: usize = parts[0].parse().context("grid dimension")?;
    let half: f64 = parts[1].parse().context("grid half-width")?;
    let nodes: usize = parts[2].parse().context("grid node count")?;
    Grid::symmetric(d, half, nodes).map_err(|e| anyhow!("{e}"))
}

fn parse_field(src: &str) -> Result<ScalarField> {
    let expr = parse_expr(src).map_err(|e| anyhow!("parsing `{src}`: {e}"))?;
    Ok(ScalarField::Expr(expr))
}

// ---------------------------------------------------------------------
// kernel / apply
// ---------------------------------------------------------------------

fn print_value(label: &str, v: LogScalar) {
    println!("{label} = {}", fmt_sig17(v.to_real()));
    let log = if v.is_zero() { f64::NEG_INFINITY } else { v.sign() as f64 * v.logmag() };
    if v.sign() < 0 {
        println!("log-{label} = -exp({})  [negative value]", fmt_sig17(v.logmag()));
    } else {
        println!("log-{label} = {}", fmt_sig17(log));
    }
}

fn cmd_kernel(args: KernelArgs) -> Result<i32> {
    let p = Params::new(args.d, args.m, args.nu).map_err(|e| anyhow!("{e}"))?;
    if args.x.len() != args.d || args.y.len() != args.d {
        bail!(
            "x and y must each have {} coordinates (got {} and {})",
            args.d,
            args.x.len(),
            args.y.len()
        );
    }
    let value = match args.family {
        KernelFamily::Heat => {
            let v = args.v.ok_or_else(|| anyhow!("the heat kernel needs --v"))?;
            let time = match args.param.unwrap_or(ParamKind::V) {
                ParamKind::V => TimeVar::V(v),
                ParamKind::S => TimeVar::S(v),
                ParamKind::R => TimeVar::R(v),
            };
            mehler_kernel(&p, time, &args.x, &args.y).map_err(|e| anyhow!("{e}"))?
        }
        KernelFamily::Poisson => {
            let t = args.t.ok_or_else(|| anyhow!("the poisson kernel needs --t"))?;
            let route = match args.param.unwrap_or(ParamKind::S) {
                ParamKind::S => KernelRoute::SForm,
                ParamKind::R => KernelRoute::RForm,
                ParamKind::V => KernelRoute::Subordination,
            };
            poisson_kernel(&p, t, &args.x, &args.y, route, &QuadSpec::default())
                .map_err(|e| anyhow!("{e}"))?
        }
    };
    print_value("value", value);
    Ok(0)
}

fn cmd_apply(args: ApplyArgs) -> Result<i32> {
    let d = args.x.len();
    let p = Params::new(d, args.m, args.nu).map_err(|e| anyhow!("{e}"))?;
    let f = parse_field(&args.f)?;
    let value = if args.series {
        if d != 1 {
            bail!("--series supports one dimension only");
        }
        series_apply(&p, args.t, &f, args.x[0], args.kmax)?
    } else {
        let opts = ApplyOpts { box_radius: args.box_radius, ..ApplyOpts::default() };
        poisson_apply(&p, args.t, &f, &args.x, &QuadSpec::with_rel_tol(1e-9), &opts)
            .map_err(|e| anyhow!("{e}"))?
            .value
    };
    print_value("value", value);
    Ok(0)
}

/// Eigenfunction-expansion route: project onto Hermite functions up to
/// `kmax`, damp each mode by its subordination multiplier, resum at x.
/// Projections use a fixed trapezoid rule — the integrands decay like
/// Gaussians, where the rule converges superalgebraically, and high modes
/// cancel to magnitudes no adaptive relative-error target could resolve.
fn series_apply(p: &Params, t: f64, f: &ScalarField, x: f64, kmax: usize) -> Result<LogScalar> {
    let quad = QuadSpec::with_rel_tol(1e-10);
    let (half_width, n) = (16.0f64, 6401usize);
    let h = 2.0 * half_width / (n - 1) as f64;
    let mut coeffs = vec![LogScalar::from_real(0.0); kmax + 1];
    for i in 0..n {
        let y = -half_width + h * i as f64;
        let fv = f.eval(&[y]).map_err(|e| anyhow!("evaluating f at y = {y}: {e}"))?;
        if fv.is_nan() {
            bail!("f is not defined at y = {y} on the projection interval");
        }
        let wt = LogScalar::from_real(if i == 0 || i == n - 1 { 0.5 * h } else { h });
        let sweep = hermite_sweep_1d(kmax, y);
        for (k, hk) in sweep.into_iter().enumerate() {
            coeffs[k] = coeffs[k] + fv * hk * wt;
        }
    }
    let gamma_nu = LogScalar::from_real(gamma_fn(p.nu()));
    let mut total = LogScalar::from_real(0.0);
    for (k, coeff) in coeffs.into_iter().enumerate() {
        let lambda = 2.0 * k as f64 + 1.0 + p.m();
        let mult = f_nu(p.nu(), t * lambda.sqrt(), &quad).map_err(|e| anyhow!("{e}"))? / gamma_nu;
        total = total + coeff * mult * hermite_fn_1d(k, x);
    }
    Ok(total)
}

// ---------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------

fn cmd_verify(args: VerifyArgs, file_cfg: Option<FileConfig>) -> Result<i32> {
    let suite: SuiteName = args.suite.parse().map_err(|e| anyhow!("{e}"))?;

    let mut cfg = SuiteConfig { seed: default_seed(), ..SuiteConfig::default() };
    if let Some(file) = file_cfg {
        if let Some(seed) = file.seed {
            cfg.seed = seed;
        }
        if let Some(jobs) = file.jobs {
            cfg.jobs = jobs;
        }
        if let Some(dm) = file.dm_matrix {
            cfg.dm_matrix = dm;
        }
        if let Some(nus) = file.nus {
            cfg.nus = nus;
        }
        if let Some(delta) = file.phi_log_exponent_delta {
            cfg.phi_log_exponent_delta = delta;
        }
    }
    if let Some(dm) = &args.dm_matrix {
        cfg.dm_matrix = parse_dm_matrix(dm)?;
    }
    if let Some(nus) = &args.nus {
        cfg.nus = parse_f64_list(nus)?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(jobs) = args.jobs {
        cfg.jobs = jobs;
    }
    if let Some(delta) = args.phi_log_exponent_delta {
        cfg.phi_log_exponent_delta = delta;
    }

    let start = std::time::Instant::now();
    let report = run_suite(suite, &cfg).map_err(|e| anyhow!("{e}"))?;
    let elapsed = start.elapsed();

    for case in &report.cases {
        match &case.witness {
            Some(w) => println!("[{}] {}: {}", case.verdict, case.name, w),
            None => println!("[{}] {}", case.verdict, case.name),
        }
    }
    let (pass, fail, diagnostic) = report.counts();
    println!(
        "suite {}: {pass} pass, {fail} fail, {diagnostic} diagnostic (seed {}, {:.1}s)",
        report.suite,
        report.seed,
        elapsed.as_secs_f64()
    );

    if let Some(path) = &args.json {
        fs::write(path, report.to_json())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.csv {
        fs::write(path, report.to_csv())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(report.exit_code())
}

// ---------------------------------------------------------------------
// weights
// ---------------------------------------------------------------------

fn cmd_weights_build(args: WeightsBuildArgs) -> Result<i32> {
    let grid = parse_grid_spec(&args.grid)?;
    let p = Params::new(grid.dim(), args.m, args.nu).map_err(|e| anyhow!("{e}"))?;
    let w = parse_field(&args.w)?;
    let wp = WeightPair::new(w, args.p).map_err(|e| anyhow!("{e}"))?;
    let spec = TheoremWeightSpec {
        alpha: args.alpha,
        n_exponent: args.n_exponent,
        sigma: args.sigma,
    };
    let tw = build_theorem_weight(&p, &wp, &spec, &grid).map_err(|e| anyhow!("{e}"))?;
    let samples: Result<Vec<LogScalar>, _> =
        grid.nodes().map(|(_, y)| tw.field.eval(&y)).collect();
    let gf = GridField::new(grid, samples.map_err(|e| anyhow!("{e}"))?)
        .map_err(|e| anyhow!("{e}"))?;
    fs::write(&args.out, gf.to_csv())
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!("decay threshold N0 = {}", fmt_sig17(tw.n0));
    println!("power cap margin (log) = {}", fmt_sig17(tw.power_cap_margin_log));
    println!("gaussian cap margin (log) = {}", fmt_sig17(tw.gaussian_cap_margin_log));
    println!("wrote {}", args.out.display());
    Ok(0)
}

fn cmd_weights_check(args: WeightsCheckArgs) -> Result<i32> {
    let grid = parse_grid_spec(&args.grid)?;
    let p = Params::new(grid.dim(), args.m, args.nu).map_err(|e| anyhow!("{e}"))?;
    let w = parse_field(&args.w)?;
    let wp = WeightPair::new(w, args.p).map_err(|e| anyhow!("{e}"))?;
    let verdict = dp_norm(&p, &wp, &grid).map_err(|e| anyhow!("{e}"))?;
    if verdict.is_finite() {
        println!("admissible: log-norm = {}", fmt_sig17(verdict.log_value()));
    } else {
        println!("not admissible: the defining integral diverges on the probe box");
    }
    Ok(0)
}

// ---------------------------------------------------------------------
// converge
// ---------------------------------------------------------------------

fn cmd_converge(args: ConvergeArgs) -> Result<i32> {
    let d = args.x.len();
    let p = Params::new(d, args.m, args.nu).map_err(|e| anyhow!("{e}"))?;
    let f = parse_field(&args.f)?;
    let ladder: Vec<f64> = match &args.tladder {
        Some(spec) => parse_f64_list(spec)?,
        None => CONVERGE_T_LADDER.to_vec(),
    };
    if ladder.is_empty() {
        bail!("the time ladder must not be empty");
    }
    let reference = f.eval(&args.x).map_err(|e| anyhow!("{e}"))?.to_real();
    let opts = ApplyOpts { box_radius: Some(args.box_radius), ..ApplyOpts::default() };
    let spec = QuadSpec::with_rel_tol(1e-9);

    let mut csv = String::from("t,value,reference,abs_err\n");
    println!("{:>12}  {:>24}  {:>24}  {:>12}", "t", "P_t f(x)", "f(x)", "abs err");
    for &t in &ladder {
        let value = poisson_apply(&p, t, &f, &args.x, &spec, &opts)
            .map_err(|e| anyhow!("t = {t}: {e}"))?
            .value
            .to_real();
        let err = (value - reference).abs();
        println!(
            "{:>12}  {:>24}  {:>24}  {:>12.5e}",
            t,
            fmt_sig17(value),
            fmt_sig17(reference),
            err
        );
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt_sig17(t),
            fmt_sig17(value),
            fmt_sig17(reference),
            fmt_sig17(err)
        ));
    }
    if let Some(path) = &args.out {
        fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(0)
}
