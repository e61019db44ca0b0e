//! `typicality` command-line runner.
//!
//! Exit codes: 0 success, 2 a verdict or check failed (or the run hit a
//! numerical invariant), 3 the configuration or command line is invalid.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use typicality::consistency::{self, Certificate, Suite, SuiteConfig, SuiteReport};
use typicality::scenario::{self, EpsLevels, ScenarioConfig};
use typicality::error::json_location;
use typicality::Error;

/// Output directory used when neither `--out-dir` nor this variable is set
/// is `typicality-out` in the working directory.
const OUT_DIR_ENV: &str = "TYPICALITY_OUT_DIR";

const BUNDLED: &[(&str, &str)] = &[
    ("gaussian_crossing", include_str!("../scenarios/gaussian_crossing.json")),
    ("separating_packets", include_str!("../scenarios/separating_packets.json")),
    ("two_slit", include_str!("../scenarios/two_slit.json")),
    ("double_well", include_str!("../scenarios/double_well.json")),
    ("free_convergence", include_str!("../scenarios/free_convergence.json")),
];

#[derive(Parser)]
#[command(name = "typicality", version, about = "Typicality scenarios and verification suites")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (default: $TYPICALITY_OUT_DIR, else ./typicality-out).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a JSON config file or a bundled scenario name.
    RunScenario {
        #[arg(long)]
        config: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Use this value for every ε level of the scenario.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Run a verification suite.
    RunSuite {
        /// inequalities | implications | equal-time-reduction | pathspace-diagnostics
        suite: String,
        /// Suite config JSON; flags below override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated Hilbert-space dimensions.
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        /// Instances per dimension.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Single ε level for the ε-dependent checks.
        #[arg(long)]
        eps: Option<f64>,
        /// Allowed violation per check.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Rerun the instance a certificate file points at.
    Replay { certificate: PathBuf },
    /// List the bundled scenarios.
    ListScenarios,
}

enum Failure {
    Config(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => Failure::Config(m),
            Error::Json(j) => Failure::Config(json_location(&j)),
            other => Failure::Run(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("config error: --threads must be >= 1");
            return ExitCode::from(3);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("thread pool is configured once");
    }
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("typicality-out"));
    let result = match cli.command {
        Command::RunScenario { config, seed, eps } => run_scenario(&config, seed, eps, &out_dir),
        Command::RunSuite { suite, config, dims, count, seed, eps, tolerance } => {
            run_suite(&suite, config.as_deref(), dims, count, seed, eps, tolerance, &out_dir)
        }
        Command::Replay { certificate } => replay(&certificate, &out_dir),
        Command::ListScenarios => {
            for (name, text) in BUNDLED {
                let kind = ScenarioConfig::from_json(text).map(|c| c.experiment.kind()).unwrap_or("invalid");
                println!("{name}\t{kind}");
            }
            Ok(true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Run(m)) => {
            eprintln!("run failed: {m}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn write(path: &Path, body: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Run(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, body).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))
}

fn run_scenario(config: &str, seed: Option<u64>, eps: Option<f64>, out_dir: &Path) -> Result<bool, Failure> {
    let (label, text) = match BUNDLED.iter().find(|(n, _)| *n == config) {
        Some((n, t)) => (format!("bundled:{n}"), t.to_string()),
        None => (config.to_string(), read(Path::new(config))?),
    };
    let mut cfg = ScenarioConfig::from_json(&text).map_err(|e| match Failure::from(e) {
        Failure::Config(m) => Failure::Config(format!("{label}: {m}")),
        other => other,
    })?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(e) = eps {
        cfg.eps = EpsLevels::uniform(e);
    }
    let out = scenario::run(&cfg)?;
    let dir = out_dir.join(&cfg.name);
    out.write(&dir).map_err(Failure::from)?;
    for v in &out.report.verdicts {
        println!("{}", v.line());
    }
    println!("run {} -> {}", out.report.run_id, dir.display());
    Ok(out.report.pass)
}

#[allow(clippy::too_many_arguments)]
fn run_suite(
    suite: &str,
    config: Option<&Path>,
    dims: Option<Vec<usize>>,
    count: Option<usize>,
    seed: Option<u64>,
    eps: Option<f64>,
    tolerance: Option<f64>,
    out_dir: &Path,
) -> Result<bool, Failure> {
    let suite: Suite = suite.parse()?;
    let mut cfg = match config {
        Some(p) => serde_json::from_str::<SuiteConfig>(&read(p)?).map_err(|e| {
            Failure::Config(format!("{}: {}", p.display(), json_location(&e)))
        })?,
        None => SuiteConfig::default(),
    };
    if let Some(d) = dims {
        cfg.dims = d;
    }
    if let Some(c) = count {
        cfg.count = c;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(e) = eps {
        cfg.eps_levels = vec![e];
    }
    if let Some(t) = tolerance {
        cfg.tolerance = t;
    }
    let report = consistency::run_suite(suite, &cfg)?;
    let dir = out_dir.join(format!("suite-{}", suite.name()));
    emit_suite(&report, &dir)?;
    Ok(report.pass)
}

fn emit_suite(report: &SuiteReport, dir: &Path) -> Result<(), Failure> {
    let json = serde_json::to_string_pretty(report).map_err(Error::from)? + "\n";
    write(&dir.join("report.json"), &json)?;
    for (name, stats) in &report.checks {
        let status = if stats.failures == 0 { "PASS" } else { "FAIL" };
        println!(
            "{status} {name} checked={} vacuous={} failures={} max_violation={:?}",
            stats.checked, stats.vacuous, stats.failures, stats.max_violation
        );
        for (k, cert) in stats.certificates.iter().enumerate() {
            let body = serde_json::to_string_pretty(cert).map_err(Error::from)? + "\n";
            write(&dir.join("certificates").join(format!("{name}-{k}.json")), &body)?;
        }
    }
    println!(
        "{} {} instances={} -> {}",
        if report.pass { "PASS" } else { "FAIL" },
        report.suite,
        report.instances,
        dir.display()
    );
    Ok(())
}

fn replay(path: &Path, out_dir: &Path) -> Result<bool, Failure> {
    let text = read(path)?;
    let cert: Certificate = serde_json::from_str(&text).map_err(|e| {
        Failure::Config(format!("{}: {}", path.display(), json_location(&e)))
    })?;
    let report = consistency::replay(&cert)?;
    let exact = report
        .checks
        .get(&cert.check)
        .is_some_and(|c| c.certificates.iter().any(|r| r == &cert));
    println!(
        "replayed {} dim={} index={} check={}: {}",
        cert.suite,
        cert.dim,
        cert.index,
        cert.check,
        if exact { "reproduced bit-exactly" } else { "not reproduced" }
    );
    let dir = out_dir.join(format!("replay-{}-{}-{}", cert.suite.name(), cert.dim, cert.index));
    emit_suite(&report, &dir)?;
    Ok(report.pass)
}
