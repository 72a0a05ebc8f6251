use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use heightfrag_cli::{cmd_asymptotics, cmd_estimate, cmd_sample, cmd_verify, CliError, Report, RunConfig, SampleKind};

#[derive(Parser)]
#[command(
    name = "heightfrag",
    version,
    about = "Identities, samplers and estimates for the height fragmentation of the stable tree"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Plain-text `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replaces the alpha grid (repeatable).
    #[arg(long = "alpha")]
    alphas: Vec<f64>,
    /// Replaces the seed list (repeatable).
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    /// Output directory; defaults to $HEIGHTFRAG_OUT, then `heightfrag-out`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Any config key, as KEY=VALUE (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Exact and quadrature identity suites.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Tolerance override, NAME=VALUE (repeatable).
        #[arg(long = "tol", value_name = "NAME=VALUE")]
        tols: Vec<String>,
    },
    /// CSV dumps of a sampler.
    Sample {
        #[command(flatten)]
        common: Common,
        /// jumps, conditioned-jumps, skeleton, gw-tree, fragmentation or csbp-path.
        #[arg(long)]
        kind: String,
        /// Vertices per tree, or leaves for `skeleton`.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        trees: Option<usize>,
    },
    /// Monte Carlo functionals and sampler-versus-law tests.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Functional, e.g. `power_sum:1` or `mass_defect` (repeatable).
        #[arg(long = "functional")]
        functionals: Vec<String>,
    },
    /// Limit transforms and the large-tree invariance checks.
    Asymptotics {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_vertices: Option<usize>,
        #[arg(long)]
        trees: Option<usize>,
    },
}

fn split_pair<'a>(raw: &'a str, flag: &str) -> Result<(&'a str, &'a str), CliError> {
    raw.split_once('=').ok_or_else(|| CliError::Config {
        field: flag.to_string(),
        reason: format!("expected NAME=VALUE, got `{raw}`"),
    })
}

fn list<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn resolve(common: &Common, extra: &[(&str, String)]) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::from_env();
    if let Some(path) = &common.config {
        cfg.apply_file(path)?;
    }
    for raw in &common.sets {
        let (k, v) = split_pair(raw, "--set")?;
        cfg.set(k, v)?;
    }
    if !common.alphas.is_empty() {
        cfg.set("alpha_grid", &list(&common.alphas))?;
    }
    if !common.seeds.is_empty() {
        cfg.set("seeds", &list(&common.seeds))?;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(n) = common.samples {
        cfg.n_samples = n;
    }
    if let Some(e) = common.epsilon {
        cfg.epsilon = e;
    }
    for (k, v) in extra {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn finish(report: Report, cfg: &RunConfig) -> Result<u8, CliError> {
    let path = report.write(&cfg.output_dir)?;
    let graded = report.records.iter().filter(|r| r.pass.is_some()).count();
    println!(
        "{}: {} of {graded} graded checks passed, report {}",
        report.command,
        graded - report.failures.len(),
        path.display()
    );
    for f in &report.failures {
        println!("FAIL {f}");
    }
    for r in report.records.iter().filter(|r| r.mc.as_ref().is_some_and(|m| m.heavy_tail_warning)) {
        println!("warning: heavy-tailed weights for {} at alpha {}", r.r_or_params, r.alpha);
    }
    Ok(report.exit_code())
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Verify { common, tols } => {
            let mut cfg = resolve(&common, &[])?;
            for raw in &tols {
                let (k, v) = split_pair(raw, "--tol")?;
                cfg.set_tolerance(k, v)?;
            }
            finish(cmd_verify(&cfg)?, &cfg)
        }
        Command::Sample { common, kind, n, trees } => {
            let kind: SampleKind = kind.parse()?;
            let mut extra = Vec::new();
            if let Some(n) = n {
                extra.push(("n_vertices", n.to_string()));
            }
            if let Some(t) = trees {
                extra.push(("trees", t.to_string()));
            }
            let cfg = resolve(&common, &extra)?;
            for path in cmd_sample(kind, &cfg)? {
                println!("wrote {}", path.display());
            }
            Ok(0)
        }
        Command::Estimate { common, functionals } => {
            let extra: Vec<_> =
                if functionals.is_empty() { Vec::new() } else { vec![("functionals", functionals.join(","))] };
            let cfg = resolve(&common, &extra)?;
            finish(cmd_estimate(&cfg)?, &cfg)
        }
        Command::Asymptotics { common, n_vertices, trees } => {
            let mut extra = Vec::new();
            if let Some(n) = n_vertices {
                extra.push(("n_vertices", n.to_string()));
            }
            if let Some(t) = trees {
                extra.push(("trees", t.to_string()));
            }
            let cfg = resolve(&common, &extra)?;
            finish(cmd_asymptotics(&cfg)?, &cfg)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
