use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use fairbet::experiment::{
    run_audit, run_exactness, run_histogram, run_market, write_exactness_csv, write_histogram_csv,
    write_market_csv, ExperimentConfig, Manifest,
};
use fairbet::forecaster::{Mode, SelectorKind};

#[derive(Parser)]
#[command(
    name = "fairbet",
    version,
    about = "Seeded experiments for fair-bet forecasters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cumulative forecaster payout over time.
    RunExactness(Common),
    /// Airline market curves with and without the mechanism.
    RunMarket(Common),
    /// Histogram of interval widths over the final half.
    RunHistogram(Common),
    /// Offline calibration and soundness report.
    RunAudit(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    selector: Option<SelectorKind>,
    #[arg(long = "T")]
    horizon: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    eta: Option<f64>,
    #[arg(long)]
    mode: Option<Mode>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)
                .with_context(|| format!("reading config {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = Some(s);
        }
        if let Some(s) = self.selector {
            cfg.selector = s;
        }
        if let Some(t) = self.horizon {
            cfg.horizon = t;
        }
        if let Some(e) = self.eta {
            cfg.eta = e;
        }
        if let Some(m) = self.mode {
            cfg.mode = m;
        }
        Ok(cfg)
    }
}

fn check_out(out: &Path) -> Result<()> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        anyhow::ensure!(
            dir.is_dir(),
            "output directory {} does not exist",
            dir.display()
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<PathBuf> {
    let (name, args) = match &cli.command {
        Command::RunExactness(a) => ("run-exactness", a),
        Command::RunMarket(a) => ("run-market", a),
        Command::RunHistogram(a) => ("run-histogram", a),
        Command::RunAudit(a) => ("run-audit", a),
    };
    let cfg = args.config()?;
    cfg.seed()?;
    check_out(&args.out)?;
    let out = args.out.as_path();
    let summary = match cli.command {
        Command::RunExactness(_) => {
            let run = run_exactness(&cfg)?;
            write_exactness_csv(out, &run.rows)?;
            serde_json::to_value(&run.summary)?
        }
        Command::RunMarket(_) => {
            let rows = run_market(&cfg)?;
            write_market_csv(out, &rows)?;
            let last: Vec<_> = cfg
                .market
                .cautious_fracs
                .iter()
                .flat_map(|&f| {
                    [true, false].map(|on| {
                        rows.iter()
                            .rev()
                            .find(|r| r.cautious_frac == f && r.mechanism == on)
                            .map(|r| {
                                serde_json::json!({
                                    "cautious_frac": f,
                                    "mechanism": if on { "on" } else { "off" },
                                    "revenue_avg": r.revenue_avg,
                                    "total_utility_avg": r.total_utility_avg,
                                })
                            })
                    })
                })
                .flatten()
                .collect();
            serde_json::json!({ "final": last })
        }
        Command::RunHistogram(_) => {
            let h = run_histogram(&cfg)?;
            write_histogram_csv(out, &h.rows)?;
            serde_json::json!({ "median_abs_c": h.median_abs_c, "samples": h.samples })
        }
        Command::RunAudit(_) => {
            let report = run_audit(&cfg)?;
            let text = serde_json::to_string_pretty(&report)?;
            std::fs::write(out, text + "\n")
                .with_context(|| format!("writing {}", out.display()))?;
            serde_json::to_value(&report.before)?
        }
    };
    Manifest::new(name, &cfg, out, summary)?.write()?;
    Ok(out.to_path_buf())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let msg = e.kind().to_string();
            let detail = e.render().to_string();
            eprintln!(
                "{}",
                serde_json::json!({ "status": "error", "error": msg, "detail": detail.trim() })
            );
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(out) => {
            println!("{}", serde_json::json!({ "status": "ok", "out": out }));
            ExitCode::SUCCESS
        }
        Err(e) => {
            let msg = format!("{e:#}");
            eprintln!("{}", serde_json::json!({ "status": "error", "error": msg }));
            ExitCode::FAILURE
        }
    }
}
