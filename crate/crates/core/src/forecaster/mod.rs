//! Online interval forecaster with a width correction that drives the
//! average betting payout to zero.
//!
//! Each round the base predictor proposes `(mu_hat, c_hat)`, the selector
//! picks `λ`, and the forecast is `(mu_hat, c_hat + λ)`. After the agent's
//! stake `b` and the outcome are known, the selector sees the quadratic loss
//! `(r + sλ)²` with `r = sgn(b)√|b|(y - mu_hat) - √|b| c_hat` and `s = -√|b|`,
//! for which `-s(r + sλ)` is exactly the payout.

mod base;
mod model;
mod selector;

pub use base::{BaseConfig, BasePrediction, BasePredictor, EPS_P};
pub use model::{Arch, Model, INIT_SCALE, LEAKY_SLOPE};
pub use selector::{Choice, Selector, SelectorKind};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bet::{forecaster_payout, outcome_value, Forecast};
use crate::error::{finite, Error, Result};
use crate::rng::{substream, Purpose};

/// Version tag written into snapshots.
pub const SNAPSHOT_VERSION: u32 = 1;

const STRICT_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// `mu = mu_hat`, `c = c_hat + λ`, unclamped.
    #[default]
    Exactness,
    /// As exactness, with `c` clamped into a proper interval.
    Strict,
    /// Zero width, `mu = mu_hat + c_hat + λ`; stakes must be non-negative.
    Monotone,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Exactness => "exactness",
            Mode::Strict => "strict",
            Mode::Monotone => "monotone",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Mode::Exactness, Mode::Strict, Mode::Monotone]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid("mode", format!("unknown mode `{s}`")))
    }
}

/// `max(1, ⌈(T / ln T)^(1/4)⌉)`.
pub fn bins_for_horizon(t: u64) -> usize {
    if t < 2 {
        return 1;
    }
    let t = t as f64;
    ((t / t.ln()).powf(0.25).ceil() as usize).max(1)
}

/// The selector's quadratic-loss coefficients for one round; both zero when `b = 0`.
pub fn loss_coefficients(b: f64, y: bool, mu_hat: f64, c_hat: f64) -> (f64, f64) {
    if b == 0.0 {
        return (0.0, 0.0);
    }
    let root = b.abs().sqrt();
    let r = b.signum() * root * (outcome_value(y) - mu_hat) - root * c_hat;
    (r, -root)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecasterConfig {
    pub dim: usize,
    pub horizon: u64,
    /// Overrides the bin count derived from the horizon.
    pub bins: Option<usize>,
    pub selector: SelectorKind,
    pub mode: Mode,
    pub base: BaseConfig,
    pub seed: u64,
}

impl ForecasterConfig {
    pub fn new(dim: usize, horizon: u64, seed: u64) -> Self {
        ForecasterConfig {
            dim,
            horizon,
            bins: None,
            selector: SelectorKind::Swap,
            mode: Mode::Exactness,
            base: BaseConfig::default(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Pending {
    x: Vec<f64>,
    base: BasePrediction,
    choice: Choice,
    forecast: Forecast,
}

/// One settled round as seen by the forecaster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastRound {
    pub t: u64,
    pub forecast: Forecast,
    pub mu_hat: f64,
    pub c_hat: f64,
    pub lambda: f64,
    pub stake: f64,
    pub y: bool,
    pub payout: f64,
    pub cum_payout: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactForecaster {
    base: BasePredictor,
    selector: Selector,
    mode: Mode,
    bins: usize,
    horizon: u64,
    t: u64,
    cum_payout: f64,
    pending: Option<Pending>,
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    version: u32,
    forecaster: ExactForecaster,
}

impl ExactForecaster {
    pub fn new(cfg: &ForecasterConfig) -> Result<Self> {
        let mut init = substream(cfg.seed, Purpose::ModelInit);
        let base = BasePredictor::new(cfg.base, cfg.dim, &mut init)?;
        Self::with_base(cfg, base)
    }

    /// Uses a caller-built base predictor; `cfg.base` and `cfg.dim` are ignored.
    pub fn with_base(cfg: &ForecasterConfig, base: BasePredictor) -> Result<Self> {
        if cfg.horizon == 0 {
            return Err(Error::invalid("T", "must be positive"));
        }
        let bins = cfg.bins.unwrap_or_else(|| bins_for_horizon(cfg.horizon));
        let selector = Selector::new(cfg.selector, bins, substream(cfg.seed, Purpose::Selector))?;
        Ok(ExactForecaster {
            base,
            selector,
            mode: cfg.mode,
            bins,
            horizon: cfg.horizon,
            t: 0,
            cum_payout: 0.0,
            pending: None,
        })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn rounds(&self) -> u64 {
        self.t
    }

    pub fn cum_payout(&self) -> f64 {
        self.cum_payout
    }

    pub fn base(&self) -> &BasePredictor {
        &self.base
    }

    pub fn selector(&self) -> &Selector {
        &self.selector
    }

    pub fn predict(&mut self, x: &[f64]) -> Result<Forecast> {
        if self.pending.is_some() {
            return Err(Error::ProtocolOrder("predict called twice".into()));
        }
        let base = self.base.predict(x)?;
        let choice = self.selector.select();
        let width = base.c_hat + choice.lambda;
        let forecast = match self.mode {
            Mode::Exactness => Forecast::new(base.mu_hat, width)?,
            Mode::Strict => {
                let cap = base.mu_hat.min(1.0 - base.mu_hat) - STRICT_MARGIN;
                Forecast::new(base.mu_hat, width.clamp(0.0, cap))?
            }
            Mode::Monotone => Forecast::new(base.mu_hat + width, 0.0)?,
        };
        self.pending = Some(Pending {
            x: x.to_vec(),
            base,
            choice,
            forecast,
        });
        Ok(forecast)
    }

    pub fn observe(&mut self, y: bool, b: f64) -> Result<ForecastRound> {
        finite("b", b)?;
        let p = self
            .pending
            .take()
            .ok_or_else(|| Error::ProtocolOrder("observe without predict".into()))?;
        if self.mode == Mode::Monotone && b < 0.0 {
            self.pending = Some(p);
            return Err(Error::invalid(
                "b",
                "monotone mode needs non-negative stakes",
            ));
        }
        let payout = forecaster_payout(b, &p.forecast, y)?;
        let (r, s) = loss_coefficients(b, y, p.base.mu_hat, p.base.c_hat);
        let wo_lambda = b * (outcome_value(y) - p.base.mu_hat) - b.abs() * p.base.c_hat;
        self.selector.observe(p.choice, r, s, wo_lambda, b.abs())?;
        self.base.update(&p.x, y, b, p.base.mu_hat)?;
        self.t += 1;
        self.cum_payout += payout;
        Ok(ForecastRound {
            t: self.t,
            forecast: p.forecast,
            mu_hat: p.base.mu_hat,
            c_hat: p.base.c_hat,
            lambda: p.choice.lambda,
            stake: b,
            y,
            payout,
            cum_payout: self.cum_payout,
        })
    }

    pub fn to_snapshot(&self) -> Result<String> {
        let snap = Snapshot {
            version: SNAPSHOT_VERSION,
            forecaster: self.clone(),
        };
        serde_json::to_string(&snap).map_err(|e| Error::Snapshot(e.to_string()))
    }

    pub fn from_snapshot(text: &str) -> Result<Self> {
        let v: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Snapshot(e.to_string()))?;
        match v.get("version").and_then(|v| v.as_u64()) {
            Some(n) if n == SNAPSHOT_VERSION as u64 => {}
            Some(n) => return Err(Error::Snapshot(format!("unsupported version {n}"))),
            None => return Err(Error::Snapshot("missing version".into())),
        }
        let snap: Snapshot =
            serde_json::from_value(v).map_err(|e| Error::Snapshot(e.to_string()))?;
        Ok(snap.forecaster)
    }
}
