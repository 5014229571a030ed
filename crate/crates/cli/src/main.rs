use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use glacier::estimators::{
    estimate_f, estimate_l, estimate_pi, estimate_theta, theta_proxy_box, Estimate, MIN_PROBE_TRIALS,
};
use glacier::experiments::{run_manifest, with_threads, ExperimentConfig, ExperimentKind, ResultTable};
use glacier::Error;

/// Volume-frozen percolation experiments and estimators.
#[derive(Debug, Parser)]
#[command(name = "glacier", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// F̂_N(⌈C√N⌉) over an N × C grid.
    Prop1(RunArgs),
    /// Exceptional scales m_k with π̂ intervals.
    Scales(RunArgs),
    /// F̂_N at m_1, g_1, m_2, g_2, m_3.
    Profile(RunArgs),
    /// First-freeze times, holes and E1–E5 at the m_2 geometry.
    FreezeDiag(RunArgs),
    /// Single estimator calls; prints one JSON record.
    #[command(subcommand)]
    Estimate(EstimateCmd),
}

/// Experiment options. Flags override values from `--config`.
#[derive(Debug, Args)]
struct RunArgs {
    /// key=value config file (`#` comments).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated thresholds.
    #[arg(long = "N")]
    n: Option<String>,
    /// Comma-separated C grid.
    #[arg(long = "C")]
    c: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// Worker threads (`auto` for all cores).
    #[arg(long)]
    threads: Option<String>,
    #[arg(long)]
    depth: Option<String>,
    /// Use π(1) = 15/16 exactly for m_1.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    exact_pi1: Option<String>,
    #[arg(long)]
    pi_stderr: Option<String>,
    #[arg(long = "C1")]
    c1: Option<String>,
    #[arg(long = "C2")]
    c2: Option<String>,
    #[arg(long = "C3")]
    c3: Option<String>,
    #[arg(long = "C4")]
    c4: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    theta_trials: Option<String>,
    #[arg(long)]
    proxy_cap: Option<String>,
    #[arg(long)]
    radius_cap: Option<String>,
    /// Fill the wall_ms column of the CSV.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    record_timings: Option<String>,
    /// Extra key=value overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunArgs {
    fn config(&self) -> glacier::Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        let flags = [
            ("N", &self.n),
            ("C", &self.c),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("out", &self.out),
            ("threads", &self.threads),
            ("depth", &self.depth),
            ("exact_pi1", &self.exact_pi1),
            ("pi_stderr", &self.pi_stderr),
            ("C1", &self.c1),
            ("C2", &self.c2),
            ("C3", &self.c3),
            ("C4", &self.c4),
            ("delta", &self.delta),
            ("theta_trials", &self.theta_trials),
            ("proxy_cap", &self.proxy_cap),
            ("radius_cap", &self.radius_cap),
            ("record_timings", &self.record_timings),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                config.set(key, v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            config.set(k, v)?;
        }
        Ok(config)
    }
}

#[derive(Debug, Subcommand)]
enum EstimateCmd {
    /// π(n) = P_{1/2}(0 ↝ ∂B(n)).
    Pi {
        #[arg(long)]
        n: u32,
        #[command(flatten)]
        common: EstimateArgs,
    },
    /// θ̂(p) on B(n); n defaults to the enforced proxy box.
    Theta {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        n: Option<u32>,
        #[command(flatten)]
        common: EstimateArgs,
    },
    /// Characteristic length L̂(p).
    #[command(name = "L")]
    L {
        #[arg(long)]
        p: f64,
        #[command(flatten)]
        common: EstimateArgs,
    },
    /// F̂_N(n): probability that the origin ends frozen in B(n).
    #[command(name = "F")]
    F {
        #[arg(long = "N")]
        threshold: u32,
        #[arg(long)]
        n: u32,
        #[command(flatten)]
        common: EstimateArgs,
    },
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
}

fn run_estimate(cmd: EstimateCmd) -> glacier::Result<Estimate> {
    let threads = match &cmd {
        EstimateCmd::Pi { common, .. }
        | EstimateCmd::Theta { common, .. }
        | EstimateCmd::L { common, .. }
        | EstimateCmd::F { common, .. } => common.threads,
    };
    if threads == Some(0) {
        return Err(Error::Config("threads must be positive".into()));
    }
    with_threads(threads, move || match cmd {
        EstimateCmd::Pi { n, common } => estimate_pi(n, common.trials, common.seed),
        EstimateCmd::Theta { p, n, common } => {
            let n = match n {
                Some(n) => n,
                None => theta_proxy_box(p, common.seed)?,
            };
            estimate_theta(p, n, common.trials, common.seed)
        }
        EstimateCmd::L { p, common } => estimate_l(p, common.trials.max(MIN_PROBE_TRIALS), common.seed),
        EstimateCmd::F { threshold, n, common } => estimate_f(threshold, n, common.trials, common.seed),
    })?
}

fn print_table(kind: ExperimentKind, table: &ResultTable, timings: bool) {
    if kind == ExperimentKind::Scales {
        for (_, csv) in &table.extra_csv {
            print!("{csv}");
        }
    } else {
        print!("{}", table.csv(timings));
    }
    for w in &table.warnings {
        eprintln!("warning: {w}");
    }
}

fn run(command: Command) -> glacier::Result<()> {
    let (kind, args) = match command {
        Command::Prop1(a) => (ExperimentKind::Prop1, a),
        Command::Scales(a) => (ExperimentKind::Scales, a),
        Command::Profile(a) => (ExperimentKind::Profile, a),
        Command::FreezeDiag(a) => (ExperimentKind::FreezeDiag, a),
        Command::Estimate(cmd) => {
            let e = run_estimate(cmd)?;
            println!("{}", e.to_json());
            return Ok(());
        }
    };
    let config = args.config()?;
    let (table, manifest) = run_manifest(kind, &config)?;
    print_table(kind, &table, config.record_timings);
    eprintln!(
        "wrote {} to {}",
        manifest.outputs.join(", "),
        config.out_dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
