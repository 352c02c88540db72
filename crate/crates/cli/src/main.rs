mod spec;

use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use lhvpov::simplex::{marginal_moment_quadrature, moments_mc, SimplexMoments};
use lhvpov::verify::{self, VerifyConfig};
use lhvpov::werner::simulated_alpha;
use lhvpov::{EstimatorRegistry, Experiment, JointTable, RunSettings, WernerState};

#[derive(Parser)]
#[command(name = "lhvpov", version, about = "Hidden-variable simulation of POV measurements on Werner states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the identity and statistical verification suites.
    Verify(VerifyArgs),
    /// Simulate a measurement spec and write a joint-probability table.
    Simulate(SimulateArgs),
    /// Tabulate the simplex integrals and the mixing weight per dimension.
    Integrals(IntegralsArgs),
}

#[derive(Args)]
struct Common {
    /// Base seed for every random stream.
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Number of independent sampling streams (results depend on it).
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct VerifyArgs {
    /// Dimension or inclusive range, e.g. `3` or `2..4`.
    #[arg(long = "d", default_value = "2..4", value_parser = parse_range)]
    d: RangeInclusive<usize>,
    /// Monte Carlo samples per statistical check.
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    /// Replace the simulated state's alpha (falsifiability check).
    #[arg(long)]
    alpha_override: Option<f64>,
    /// Random measurement pairs per dimension for the exact checks.
    #[arg(long, default_value_t = 20)]
    pairs: usize,
    /// JSON report path.
    #[arg(long, default_value = "verify-report.json")]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SimulateArgs {
    /// Measurement spec (TOML).
    #[arg(long)]
    spec: PathBuf,
    /// Simulated runs for the `lhv-runs` column.
    #[arg(long, default_value_t = 1_000_000)]
    runs: usize,
    /// Hidden-state samples for the `lhv-mc` column.
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    /// Override the state's alpha from the spec.
    #[arg(long)]
    alpha: Option<f64>,
    /// Kraus channel file for Alice's side.
    #[arg(long)]
    channel_a: Option<PathBuf>,
    /// Kraus channel file for Bob's side.
    #[arg(long)]
    channel_b: Option<PathBuf>,
    /// Comma-separated estimator names (default: lhv-runs,closed,born and,
    /// with channels, born-pullback).
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<String>>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct IntegralsArgs {
    #[arg(long = "d", default_value = "2..8", value_parser = parse_range)]
    d: RangeInclusive<usize>,
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    /// Output CSV path; a text table goes to stdout either way.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

fn parse_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    let (lo, hi) = match s.split_once("..").or_else(|| s.split_once('-')) {
        Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
        None => {
            let v = parse(s)?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(format!("empty range {s}"));
    }
    Ok(lo..=hi)
}

fn fmt_prob(p: f64) -> String {
    format!("{p:.11e}")
}

fn cmd_verify(args: VerifyArgs) -> anyhow::Result<ExitCode> {
    let (lo, hi) = (*args.d.start(), *args.d.end());
    if lo < 2 || hi > 8 {
        bail!("verify supports 2 <= d <= 8, got {lo}..{hi}");
    }
    let config = VerifyConfig {
        d_min: lo,
        d_max: hi,
        n_samples: args.samples,
        seed: args.common.seed,
        workers: args.common.workers,
        alpha_override: args.alpha_override,
        exact_pairs: args.pairs,
    };
    let report = verify::run(&config)?;
    let json = serde_json::to_string_pretty(&report)?;
    std::fs::write(&args.out, json + "\n").with_context(|| format!("writing {}", args.out.display()))?;
    print!("{}", report.summary());
    println!("report written to {}", args.out.display());
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_simulate(args: SimulateArgs) -> anyhow::Result<ExitCode> {
    let spec = spec::load_spec(&args.spec)?;
    let d = spec.state.d();
    let state = match args.alpha {
        Some(a) => WernerState::new(d, a)?,
        None => spec.state,
    };
    let channel_a = match &args.channel_a {
        Some(p) => Some(spec::load_channel(p, d)?),
        None => spec.channel_a.clone(),
    };
    let channel_b = match &args.channel_b {
        Some(p) => Some(spec::load_channel(p, d)?),
        None => spec.channel_b.clone(),
    };
    let mut experiment = Experiment::new(state, spec.alice.clone(), spec.bob.clone())?;
    let with_channels = channel_a.is_some() || channel_b.is_some();
    if with_channels {
        let a = channel_a.unwrap_or_else(|| lhvpov::channels::KrausChannel::identity(d));
        let b = channel_b.unwrap_or_else(|| lhvpov::channels::KrausChannel::identity(d));
        experiment = experiment.with_channels(a, b)?;
    }

    let registry = EstimatorRegistry::with_builtins();
    let names = args.estimators.clone().unwrap_or_else(|| {
        let mut v = vec!["lhv-runs".to_string(), "closed".into(), "born".into()];
        if with_channels {
            v.push("born-pullback".into());
        }
        v
    });
    let settings = RunSettings {
        seed: args.common.seed,
        n_lambda: args.samples,
        n_runs: args.runs,
        workers: args.common.workers,
    };
    let mut columns: Vec<(String, JointTable)> = Vec::new();
    for name in &names {
        let estimator = registry.get(name)?;
        let table = estimator.estimate(&experiment, &settings)?;
        let total = table.total();
        if (total - 1.0).abs() > 1e-9 {
            bail!("estimator {name} produced a table summing to {total}");
        }
        columns.push((name.clone(), table));
    }

    let mut csv = String::from("outcome_a,outcome_b");
    for (name, table) in &columns {
        csv.push(',');
        csv.push_str(name);
        if table.std_errors.is_some() {
            let _ = write!(csv, ",{name}_se");
        }
    }
    csv.push('\n');
    let (rows, cols) = (experiment.povm_a().len(), experiment.povm_b().len());
    for i in 0..rows {
        for j in 0..cols {
            let _ = write!(csv, "{i},{j}");
            for (_, table) in &columns {
                let _ = write!(csv, ",{}", fmt_prob(table.get(i, j)));
                if let Some(se) = table.se(i, j) {
                    let _ = write!(csv, ",{}", fmt_prob(se));
                }
            }
            csv.push('\n');
        }
    }
    match &args.out {
        Some(path) => {
            std::fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {} rows to {}", rows * cols, path.display());
        }
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_integrals(args: IntegralsArgs) -> anyhow::Result<ExitCode> {
    let (lo, hi) = (*args.d.start(), *args.d.end());
    if lo < 2 {
        return Err(lhvpov::Error::Domain(format!("integrals need d >= 2, got {lo}")).into());
    }
    let mut csv = String::from(
        "d,j0_closed,j0_quadrature,j0_mc,j0_se,j1_closed,j1_quadrature,j1_mc,j1_se,jnu_closed,jnu_mc,jnu_se,alpha_from_moments,alpha_closed,alpha_mc\n",
    );
    println!(
        "{:>2}  {:>12} {:>12} {:>12}  {:>12} {:>12} {:>12}  {:>12} {:>12}  {:>12}",
        "d", "J0", "J0 quad", "J0 MC", "J1", "J1 quad", "J1 MC", "Jnu", "Jnu MC", "alpha"
    );
    for d in lo..=hi {
        let m = SimplexMoments::closed(d)?;
        let q0 = marginal_moment_quadrature(d, 1)?;
        let q1 = marginal_moment_quadrature(d, 2)?;
        let est = moments_mc(d, args.samples, args.common.seed.wrapping_add(d as u64), args.common.workers)?;
        let alpha = simulated_alpha(d)?;
        println!(
            "{d:>2}  {:>12.9} {:>12.9} {:>12.9}  {:>12.9} {:>12.9} {:>12.9}  {:>12.9} {:>12.9}  {:>12.9}",
            m.j0, q0, est.j0, m.j1, q1, est.j1, m.jnu, est.jnu, alpha
        );
        let fields = [
            m.j0, q0, est.j0, est.j0_se, m.j1, q1, est.j1, est.j1_se, m.jnu, est.jnu, est.jnu_se, m.alpha, alpha,
            est.alpha(),
        ];
        let _ = write!(csv, "{d}");
        for f in fields {
            let _ = write!(csv, ",{}", fmt_prob(f));
        }
        csv.push('\n');
    }
    if let Some(path) = &args.out {
        std::fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify(a) => cmd_verify(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Integrals(a) => cmd_integrals(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
