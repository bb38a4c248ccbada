use hermipoisson::suites::{run_suite, SuiteConfig, SuiteName};

fn main() {
    let name: SuiteName = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "special".into())
        .parse()
        .expect("suite name");
    let mut cfg = SuiteConfig::default();
    if let Some(delta) = std::env::args().nth(2).and_then(|s| s.parse().ok()) {
        cfg.phi_log_exponent_delta = delta;
    }
    let start = std::time::Instant::now();
    let report = run_suite(name, &cfg).expect("suite run");
    eprintln!("elapsed: {:.1?}", start.elapsed());
    println!("{}", report.to_json());
    std::process::exit(report.exit_code());
}
