//! Seeded experiment runs and their CSV and manifest outputs.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agents::AgentPolicy;
use crate::error::{Error, Result};
use crate::forecaster::{
    Arch, BaseConfig, ExactForecaster, ForecastRound, ForecasterConfig, Mode, SelectorKind,
};
use crate::market::{simulate_market, FlightRow, MarketConfig};
use crate::offline::{
    histogram_binning, mce, multicalibration_gap, soundness_gap, BetClass, DiscreteDistribution,
    MulticalibrationReport, TableForecaster,
};
use crate::rng::{substream, Purpose, RNG_ALGORITHM};
use crate::streams::{
    ingest_csv, CsvSchema, Features, Nature, NatureStream, StreamKind, TaskFamily, TaskSampler,
};

pub const HISTOGRAM_BINS: usize = 50;
pub const HISTOGRAM_RANGE: (f64, f64) = (-0.5, 1.5);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentShare {
    #[serde(flatten)]
    pub policy: AgentPolicy,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskConfig {
    pub family: TaskFamily,
    #[serde(default = "two")]
    pub actions: usize,
}

fn two() -> usize {
    2
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig {
            family: TaskFamily::Random,
            actions: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSource {
    pub path: PathBuf,
    #[serde(flatten)]
    pub schema: CsvSchema,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarketSection {
    pub flights: u64,
    pub cautious_fracs: Vec<f64>,
    pub stake_scale: f64,
    pub stream: StreamKind,
}

impl Default for MarketSection {
    fn default() -> Self {
        MarketSection {
            flights: 500,
            cautious_fracs: vec![0.25, 0.5, 0.75],
            stake_scale: 1e5,
            stream: crate::market::default_market_stream(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditDistribution {
    pub p: Vec<f64>,
    pub mu_star: Vec<f64>,
    pub mu: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSection {
    /// Finite distribution with known `mu*`.
    #[serde(default)]
    pub distribution: Option<AuditDistribution>,
    /// Sample file with `mu` and 0/1 outcome columns; rows are weighted equally
    /// and the outcome stands in for `mu*`.
    #[serde(default)]
    pub samples: Option<PathBuf>,
    #[serde(default)]
    pub c0: f64,
    #[serde(default = "unit")]
    pub bound: f64,
    #[serde(default)]
    pub subsets: Vec<Vec<usize>>,
    #[serde(default = "ten")]
    pub bins: usize,
}

fn unit() -> f64 {
    1.0
}

fn ten() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub bins: Option<usize>,
    pub eta: f64,
    pub selector: SelectorKind,
    pub mode: Mode,
    pub arch: Arch,
    /// Divisor of payout residuals in the width model; the largest stake by default.
    pub stake_scale: Option<f64>,
    pub stream: StreamKind,
    /// Replaces `stream` with rows read from a file.
    pub data: Option<CsvSource>,
    pub task: TaskConfig,
    pub agents: Vec<AgentShare>,
    /// Clips every stake at zero.
    pub long_only: bool,
    pub stride: Option<u64>,
    pub market: MarketSection,
    pub audit: Option<AuditSection>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: None,
            horizon: 10_000,
            bins: None,
            eta: 0.01,
            selector: SelectorKind::Swap,
            mode: Mode::Exactness,
            arch: Arch::default(),
            stake_scale: None,
            stream: StreamKind::Drift {
                dim: 5,
                features: Features::Gaussian,
                scale: 1.0,
                bias: 0.0,
            },
            data: None,
            task: TaskConfig::default(),
            agents: vec![AgentShare {
                policy: AgentPolicy::HonestInsured,
                weight: 1.0,
            }],
            long_only: false,
            stride: None,
            market: MarketSection::default(),
            audit: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid("config", e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::invalid("seed", "a seed is required"))
    }

    pub fn validate(&self) -> Result<()> {
        self.seed()?;
        if self.horizon < 2 {
            return Err(Error::invalid("T", "must be at least 2"));
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::invalid("eta", "must be finite and non-negative"));
        }
        if let Some(0) = self.bins {
            return Err(Error::invalid("bins", "must be positive"));
        }
        if let Some(s) = self.stake_scale {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::invalid("stake_scale", "must be positive"));
            }
        }
        if let Some(0) = self.stride {
            return Err(Error::invalid("stride", "must be positive"));
        }
        if self.agents.is_empty() {
            return Err(Error::invalid("agents", "need at least one agent"));
        }
        for a in &self.agents {
            if !(a.weight.is_finite() && a.weight >= 0.0) {
                return Err(Error::invalid("agents", "weights must be non-negative"));
            }
            match a.policy {
                AgentPolicy::Adversarial { max_stake } if !(max_stake > 0.0) => {
                    return Err(Error::invalid("agents", "max_stake must be positive"))
                }
                AgentPolicy::Adversarial { .. } if self.data.is_some() => {
                    return Err(Error::invalid(
                        "agents",
                        "adversarial agents need mu*, which file data lacks",
                    ))
                }
                _ => {}
            }
        }
        if self.agents.iter().map(|a| a.weight).sum::<f64>() <= 0.0 {
            return Err(Error::invalid("agents", "weights must not all be zero"));
        }
        if self.task.actions == 0 {
            return Err(Error::invalid("task.actions", "must be positive"));
        }
        for &f in &self.market.cautious_fracs {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::invalid(
                    "market.cautious_fracs",
                    "must lie in [0, 1]",
                ));
            }
        }
        Ok(())
    }

    /// Row thinning for CSV output.
    pub fn effective_stride(&self) -> u64 {
        self.stride.unwrap_or((self.horizon / 2000).max(1))
    }

    /// Largest stake the configured agents can place.
    pub fn max_stake(&self) -> f64 {
        let task_bound = match self.task.family {
            TaskFamily::OneSided => 11.0,
            TaskFamily::Random => crate::streams::RANDOM_TASK_BOUND,
            // three standard deviations of the widest group
            TaskFamily::DifferentStakes => 30.0,
        };
        self.agents
            .iter()
            .map(|a| match a.policy {
                AgentPolicy::HonestInsured | AgentPolicy::WorstCase => 2.0 * task_bound,
                AgentPolicy::Uninsured => 0.0,
                AgentPolicy::Adversarial { max_stake } => max_stake,
                AgentPolicy::MaliciousConstant { stake } => stake.abs(),
            })
            .fold(0.0, f64::max)
    }

    pub fn forecaster_config(&self, dim: usize, horizon: u64) -> Result<ForecasterConfig> {
        let scale = self
            .stake_scale
            .unwrap_or_else(|| self.max_stake().max(1.0));
        Ok(ForecasterConfig {
            dim,
            horizon,
            bins: self.bins,
            selector: self.selector,
            mode: self.mode,
            base: BaseConfig {
                arch: self.arch,
                eta: self.eta,
                stake_scale: scale,
            },
            seed: self.seed()?,
        })
    }
}

/// Everything known about one exactness round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub round: ForecastRound,
    pub mu_star: Option<f64>,
    pub action: usize,
    pub agent: usize,
}

fn pick_agent<R: Rng>(rng: &mut R, agents: &[AgentShare]) -> usize {
    if agents.len() == 1 {
        return 0;
    }
    let total: f64 = agents.iter().map(|a| a.weight).sum();
    let mut u = rng.random::<f64>() * total;
    for (i, a) in agents.iter().enumerate() {
        if u < a.weight {
            return i;
        }
        u -= a.weight;
    }
    agents.len() - 1
}

/// Runs the forecaster against nature and agents, calling `visit` every round.
pub fn drive_exactness<F: FnMut(&Step)>(cfg: &ExperimentConfig, mut visit: F) -> Result<u64> {
    cfg.validate()?;
    let seed = cfg.seed()?;
    let mut nature: Box<dyn Nature> = match &cfg.data {
        Some(src) => Box::new(ingest_csv(&src.path, &src.schema)?),
        None => Box::new(NatureStream::new(cfg.stream.clone(), cfg.horizon, seed)?),
    };
    let mut fc = ExactForecaster::new(&cfg.forecaster_config(nature.dim(), cfg.horizon)?)?;
    let mut tasks = TaskSampler::new(cfg.task.family, cfg.task.actions, seed)?;
    let mut agent_rng = substream(seed, Purpose::Agents);
    let mut done = 0;
    for _ in 0..cfg.horizon {
        let round = match nature.next_round() {
            Ok(r) => r,
            Err(Error::Exhausted) => break,
            Err(e) => return Err(e),
        };
        let loss = tasks.sample(round.z)?;
        let agent = pick_agent(&mut agent_rng, &cfg.agents);
        let forecast = fc.predict(&round.x)?;
        let decision = cfg.agents[agent]
            .policy
            .decide(&loss, &forecast, round.mu_star)?;
        let stake = if cfg.long_only {
            decision.stake.max(0.0)
        } else {
            decision.stake
        };
        let rec = fc.observe(round.y, stake)?;
        visit(&Step {
            round: rec,
            mu_star: round.mu_star,
            action: decision.action,
            agent,
        });
        done += 1;
    }
    Ok(done)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactnessRow {
    pub t: u64,
    pub cum_payout: f64,
    pub avg_payout: f64,
    pub avg_payout_sq_scaled: Option<f64>,
    pub c_t: f64,
    pub lambda_t: f64,
    pub mu_t: f64,
    pub mu_star_t: Option<f64>,
    pub b_t: f64,
}

/// `avg² · √(t / ln t)`, undefined for `t < 2`.
pub fn scaled_square(avg: f64, t: u64) -> Option<f64> {
    if t < 2 {
        return None;
    }
    let t = t as f64;
    Some(avg * avg * (t / t.ln()).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactnessSummary {
    pub rounds: u64,
    pub final_avg_payout: f64,
    /// Average payout after the first tenth of the run.
    pub tenth_avg_payout: f64,
    /// Largest scaled square over rounds `T/100 ..= T/2`.
    pub scaled_constant: f64,
    /// Largest scaled square over the second half.
    pub scaled_second_half_max: f64,
    pub median_abs_c_final_half: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactnessRun {
    pub rows: Vec<ExactnessRow>,
    pub summary: ExactnessSummary,
    /// `c_t` over the final half.
    pub final_half_c: Vec<f64>,
}

pub fn run_exactness(cfg: &ExperimentConfig) -> Result<ExactnessRun> {
    let stride = cfg.effective_stride();
    let horizon = cfg.horizon;
    let tenth = (horizon / 10).max(1);
    let cal_start = (horizon / 100).max(2);
    let half = horizon / 2;
    let mut rows = vec![];
    let mut last: Option<ExactnessRow> = None;
    let mut tenth_avg = f64::NAN;
    let mut cal: f64 = 0.0;
    let mut late: f64 = 0.0;
    let mut cs = vec![];
    let done = drive_exactness(cfg, |s| {
        let r = &s.round;
        let avg = r.cum_payout / r.t as f64;
        let scaled = scaled_square(avg, r.t);
        if r.t == tenth {
            tenth_avg = avg;
        }
        if let Some(v) = scaled {
            if r.t >= cal_start && r.t <= half {
                cal = cal.max(v);
            } else if r.t > half {
                late = late.max(v);
            }
        }
        if r.t > half {
            cs.push(r.forecast.c);
        }
        let row = ExactnessRow {
            t: r.t,
            cum_payout: r.cum_payout,
            avg_payout: avg,
            avg_payout_sq_scaled: scaled,
            c_t: r.forecast.c,
            lambda_t: r.lambda,
            mu_t: r.forecast.mu,
            mu_star_t: s.mu_star,
            b_t: r.stake,
        };
        if r.t % stride == 0 {
            rows.push(row.clone());
        }
        last = Some(row);
    })?;
    if let Some(row) = last {
        if rows.last().map(|r| r.t) != Some(row.t) {
            rows.push(row);
        }
    }
    let final_avg = rows.last().map_or(0.0, |r| r.avg_payout);
    let summary = ExactnessSummary {
        rounds: done,
        final_avg_payout: final_avg,
        tenth_avg_payout: tenth_avg,
        scaled_constant: cal,
        scaled_second_half_max: late,
        median_abs_c_final_half: median_abs(&cs),
    };
    Ok(ExactnessRun {
        rows,
        summary,
        final_half_c: cs,
    })
}

pub fn median_abs(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut a: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    a.sort_by(f64::total_cmp);
    let n = a.len();
    if n % 2 == 1 {
        a[n / 2]
    } else {
        0.5 * (a[n / 2 - 1] + a[n / 2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: u64,
}

/// Counts into fixed bins over `[-0.5, 1.5]`; outliers go to the edge bins.
pub fn histogram(values: &[f64]) -> Vec<HistogramRow> {
    let (lo, hi) = HISTOGRAM_RANGE;
    let width = (hi - lo) / HISTOGRAM_BINS as f64;
    let mut counts = vec![0u64; HISTOGRAM_BINS];
    for &v in values {
        let k = ((v - lo) / width).floor();
        let k = if k.is_nan() || k < 0.0 {
            0
        } else {
            (k as usize).min(HISTOGRAM_BINS - 1)
        };
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramRow {
            bin_lo: lo + i as f64 * width,
            bin_hi: lo + (i + 1) as f64 * width,
            count,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRun {
    pub rows: Vec<HistogramRow>,
    pub median_abs_c: f64,
    pub samples: usize,
}

pub fn run_histogram(cfg: &ExperimentConfig) -> Result<HistogramRun> {
    if cfg.horizon < 2 {
        return Err(Error::invalid("T", "the final half is empty for T < 2"));
    }
    let run = run_exactness(cfg)?;
    Ok(HistogramRun {
        rows: histogram(&run.final_half_c),
        median_abs_c: run.summary.median_abs_c_final_half,
        samples: run.final_half_c.len(),
    })
}

pub fn run_market(cfg: &ExperimentConfig) -> Result<Vec<FlightRow>> {
    cfg.validate()?;
    let seed = cfg.seed()?;
    let mut rows = vec![];
    for &frac in &cfg.market.cautious_fracs {
        let mut m = MarketConfig::new(cfg.market.flights, frac, seed);
        m.stream = cfg.market.stream.clone();
        m.forecaster.selector = cfg.selector;
        m.forecaster.mode = cfg.mode;
        m.forecaster.bins = cfg.bins;
        m.forecaster.base = BaseConfig {
            arch: cfg.arch,
            eta: cfg.eta,
            stake_scale: cfg.market.stake_scale,
        };
        rows.extend(simulate_market(&m)?);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditGaps {
    pub mce: f64,
    pub functions_of_mu: f64,
    pub all_functions: f64,
    pub subsets: Option<f64>,
    pub multicalibration: MulticalibrationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub bound: f64,
    pub c0: f64,
    pub bins: usize,
    pub before: AuditGaps,
    pub after_binning: AuditGaps,
    pub binned_mu: Vec<f64>,
}

fn audit_gaps(
    dist: &DiscreteDistribution,
    fc: &TableForecaster,
    a: &AuditSection,
) -> Result<AuditGaps> {
    let subsets = if a.subsets.is_empty() {
        None
    } else {
        Some(soundness_gap(
            dist,
            fc,
            &BetClass::Subsets {
                sets: a.subsets.clone(),
            },
            a.bound,
        )?)
    };
    let sets = if a.subsets.is_empty() {
        vec![(0..dist.len()).collect()]
    } else {
        a.subsets.clone()
    };
    Ok(AuditGaps {
        mce: mce(dist, fc)?,
        functions_of_mu: soundness_gap(dist, fc, &BetClass::FunctionsOfMu, a.bound)?,
        all_functions: soundness_gap(dist, fc, &BetClass::AllFunctions, a.bound)?,
        subsets,
        multicalibration: multicalibration_gap(dist, fc, &sets, a.c0)?,
    })
}

fn read_samples(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::Csv {
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    let find = |n: &str| {
        headers
            .iter()
            .position(|h| h == n)
            .ok_or_else(|| Error::Csv {
                line: 1,
                reason: format!("missing column `{n}`"),
            })
    };
    let (mc, yc) = (find("mu")?, find("y")?);
    let (mut mu, mut y) = (vec![], vec![]);
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Csv {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let m: f64 = rec[mc].trim().parse().map_err(|_| Error::Csv {
            line,
            reason: "mu is not a number".into(),
        })?;
        let v = match rec[yc].trim() {
            "0" => 0.0,
            "1" => 1.0,
            other => {
                return Err(Error::Csv {
                    line,
                    reason: format!("y must be 0 or 1, got `{other}`"),
                })
            }
        };
        mu.push(m);
        y.push(v);
    }
    Ok((mu, y))
}

pub fn run_audit(cfg: &ExperimentConfig) -> Result<AuditReport> {
    let a = cfg
        .audit
        .as_ref()
        .ok_or_else(|| Error::invalid("audit", "an audit section is required"))?;
    let (dist, fc) = match (&a.distribution, &a.samples) {
        (Some(d), _) => (
            DiscreteDistribution::new(
                d.p.iter()
                    .zip(&d.mu_star)
                    .map(|(&p, &m)| crate::offline::Point { p, mu_star: m })
                    .collect(),
            )?,
            TableForecaster::new(d.mu.clone(), d.c.clone())?,
        ),
        (None, Some(path)) => {
            let (mu, y) = read_samples(path)?;
            if mu.is_empty() {
                return Err(Error::invalid("audit.samples", "no rows"));
            }
            let n = mu.len();
            let dist = DiscreteDistribution::normalized(&vec![1.0; n], &y)?;
            (dist, TableForecaster::constant_width(mu, a.c0)?)
        }
        (None, None) => {
            return Err(Error::invalid(
                "audit",
                "needs a distribution or a samples file",
            ))
        }
    };
    let before = audit_gaps(&dist, &fc, a)?;
    let binned = histogram_binning(&dist, &fc, a.bins)?;
    let after = audit_gaps(&dist, &binned, a)?;
    Ok(AuditReport {
        bound: a.bound,
        c0: a.c0,
        bins: a.bins,
        before,
        after_binning: after,
        binned_mu: binned.mu,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn write_exactness_csv(path: &Path, rows: &[ExactnessRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "t",
        "cum_payout",
        "avg_payout",
        "avg_payout_sq_scaled",
        "c_t",
        "lambda_t",
        "mu_t",
        "mu_star_t",
        "b_t",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.t.to_string(),
            r.cum_payout.to_string(),
            r.avg_payout.to_string(),
            fmt_opt(r.avg_payout_sq_scaled),
            r.c_t.to_string(),
            r.lambda_t.to_string(),
            r.mu_t.to_string(),
            fmt_opt(r.mu_star_t),
            r.b_t.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_market_csv(path: &Path, rows: &[FlightRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "flight_idx",
        "mechanism",
        "cautious_frac",
        "price",
        "tickets",
        "revenue_avg",
        "total_utility_avg",
        "insurance_net_avg",
        "c_t",
        "lambda_t",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.flight_idx.to_string(),
            if r.mechanism { "on" } else { "off" }.to_string(),
            r.cautious_frac.to_string(),
            r.price.to_string(),
            r.tickets.to_string(),
            r.revenue_avg.to_string(),
            r.total_utility_avg.to_string(),
            r.insurance_net_avg.to_string(),
            r.c_t.to_string(),
            r.lambda_t.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_histogram_csv(path: &Path, rows: &[HistogramRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["bin_lo", "bin_hi", "count"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.bin_lo.to_string(),
            r.bin_hi.to_string(),
            r.count.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Replay information written next to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub subcommand: String,
    pub crate_version: String,
    pub seed: u64,
    pub rng: String,
    pub output: PathBuf,
    pub config: ExperimentConfig,
    pub summary: serde_json::Value,
}

impl Manifest {
    pub fn new(
        subcommand: &str,
        cfg: &ExperimentConfig,
        output: &Path,
        summary: serde_json::Value,
    ) -> Result<Self> {
        Ok(Manifest {
            subcommand: subcommand.into(),
            crate_version: env!("CARGO_PKG_VERSION").into(),
            seed: cfg.seed()?,
            rng: RNG_ALGORITHM.into(),
            output: output.to_path_buf(),
            config: cfg.clone(),
            summary,
        })
    }

    /// `<out>.manifest.json`.
    pub fn path_for(output: &Path) -> PathBuf {
        let mut s = output.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    }

    pub fn write(&self) -> Result<PathBuf> {
        let path = Self::path_for(&self.output);
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        let mut f = File::create(&path)?;
        f.write_all(text.as_bytes())?;
        f.write_all(b"\n")?;
        Ok(path)
    }
}
