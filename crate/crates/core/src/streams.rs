//! Nature: features, true probabilities and outcomes, plus the decision tasks
//! agents face each round.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bet::LossSpec;
use crate::error::{Error, Result};
use crate::rng::{keyed, substream, Purpose};

pub fn logistic(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// One round drawn by nature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub x: Vec<f64>,
    /// Unknown for ingested data.
    pub mu_star: Option<f64>,
    pub y: bool,
    /// Task group in `1..=10`.
    pub z: u32,
}

pub trait Nature {
    fn dim(&self) -> usize;
    /// `Error::Exhausted` once a finite stream runs out.
    fn next_round(&mut self) -> Result<Round>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Features {
    #[default]
    Gaussian,
    OneHot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StreamKind {
    IidLogistic {
        dim: usize,
        /// Drawn from the seed when absent.
        #[serde(default)]
        w: Option<Vec<f64>>,
    },
    Drift {
        dim: usize,
        #[serde(default)]
        features: Features,
        /// Standard deviation of the endpoint weights.
        #[serde(default = "default_scale")]
        scale: f64,
        #[serde(default)]
        bias: f64,
    },
    DigitLatent {
        /// Standard deviation of the Gaussian noise on the one-hot code.
        #[serde(default = "default_noise")]
        noise: f64,
    },
    AdversarialFlip {
        period: u64,
        #[serde(default = "default_flip_dim")]
        dim: usize,
    },
}

fn default_scale() -> f64 {
    1.0
}

fn default_noise() -> f64 {
    0.3
}

fn default_flip_dim() -> usize {
    2
}

impl StreamKind {
    pub fn dim(&self) -> usize {
        match self {
            StreamKind::IidLogistic { dim, .. }
            | StreamKind::Drift { dim, .. }
            | StreamKind::AdversarialFlip { dim, .. } => *dim,
            StreamKind::DigitLatent { .. } => 10,
        }
    }
}

/// A seeded synthetic stream with known `mu*`.
#[derive(Debug, Clone)]
pub struct NatureStream {
    kind: StreamKind,
    horizon: u64,
    t: u64,
    w0: Vec<f64>,
    w1: Vec<f64>,
    nature: ChaCha8Rng,
    outcomes: ChaCha8Rng,
}

impl NatureStream {
    /// `horizon` sets the drift schedule; other kinds ignore it.
    pub fn new(kind: StreamKind, horizon: u64, seed: u64) -> Result<Self> {
        let mut nature = substream(seed, Purpose::Nature);
        let (w0, w1) = match &kind {
            StreamKind::IidLogistic { dim, w } => {
                if *dim == 0 {
                    return Err(Error::invalid("dim", "must be positive"));
                }
                let w = match w {
                    Some(w) if w.len() != *dim => {
                        return Err(Error::DimensionMismatch {
                            expected: *dim,
                            got: w.len(),
                        })
                    }
                    Some(w) => w.clone(),
                    None => gaussian_vec(&mut nature, *dim, 1.0 / (*dim as f64).sqrt()),
                };
                (w.clone(), w)
            }
            StreamKind::Drift { dim, scale, .. } => {
                if *dim == 0 {
                    return Err(Error::invalid("dim", "must be positive"));
                }
                if !(scale.is_finite() && *scale >= 0.0) {
                    return Err(Error::invalid("scale", "must be finite and non-negative"));
                }
                (
                    gaussian_vec(&mut nature, *dim, *scale),
                    gaussian_vec(&mut nature, *dim, *scale),
                )
            }
            StreamKind::DigitLatent { noise } => {
                if !(noise.is_finite() && *noise >= 0.0) {
                    return Err(Error::invalid("noise", "must be finite and non-negative"));
                }
                (vec![], vec![])
            }
            StreamKind::AdversarialFlip { period, .. } => {
                if *period == 0 {
                    return Err(Error::invalid("period", "must be positive"));
                }
                (vec![], vec![])
            }
        };
        Ok(NatureStream {
            kind,
            horizon: horizon.max(1),
            t: 0,
            w0,
            w1,
            nature,
            outcomes: substream(seed, Purpose::Outcomes),
        })
    }

    pub fn kind(&self) -> &StreamKind {
        &self.kind
    }

    /// Weights in force at round `t` (1-based) for the logistic kinds.
    pub fn weights_at(&self, t: u64) -> Vec<f64> {
        let a = (t as f64 / self.horizon as f64).min(1.0);
        self.w0
            .iter()
            .zip(&self.w1)
            .map(|(u, v)| (1.0 - a) * u + a * v)
            .collect()
    }

    fn draw(&mut self) -> (Vec<f64>, f64, u32) {
        let t = self.t;
        match self.kind.clone() {
            StreamKind::IidLogistic { dim, .. } => {
                let x = gaussian_vec(&mut self.nature, dim, 1.0);
                let p = logistic(dot(&self.w0, &x));
                (x.clone(), p, gaussian_z(&x))
            }
            StreamKind::Drift {
                dim,
                features,
                bias,
                ..
            } => {
                let (x, z) = match features {
                    Features::Gaussian => {
                        let x = gaussian_vec(&mut self.nature, dim, 1.0);
                        let z = gaussian_z(&x);
                        (x, z)
                    }
                    Features::OneHot => {
                        let cat = self.nature.random_range(0..dim);
                        let mut x = vec![0.0; dim];
                        x[cat] = 1.0;
                        (x, 1 + (cat % 10) as u32)
                    }
                };
                let w = self.weights_at(t);
                (x.clone(), logistic(bias + dot(&w, &x)), z)
            }
            StreamKind::DigitLatent { noise } => {
                let digit = self.nature.random_range(0..10usize);
                let mut x = gaussian_vec(&mut self.nature, 10, noise);
                x[digit] += 1.0;
                (x, (digit + 1) as f64 / 11.0, digit as u32 + 1)
            }
            StreamKind::AdversarialFlip { period, dim } => {
                let x = gaussian_vec(&mut self.nature, dim, 1.0);
                let p = if ((t - 1) / period).is_multiple_of(2) {
                    0.1
                } else {
                    0.9
                };
                let z = gaussian_z(&x);
                (x, p, z)
            }
        }
    }
}

impl Nature for NatureStream {
    fn dim(&self) -> usize {
        self.kind.dim()
    }

    fn next_round(&mut self) -> Result<Round> {
        self.t += 1;
        let (x, mu_star, z) = self.draw();
        let y = self.outcomes.random::<f64>() < mu_star;
        Ok(Round {
            x,
            mu_star: Some(mu_star),
            y,
            z,
        })
    }
}

fn gaussian_vec<R: Rng>(rng: &mut R, n: usize, sd: f64) -> Vec<f64> {
    (0..n)
        .map(|_| sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
        .collect()
}

fn gaussian_z(x: &[f64]) -> u32 {
    let v = x.first().copied().unwrap_or(0.0);
    1 + ((10.0 * logistic(v)).floor() as u32).min(9)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Rows read from a file, replayed in order.
#[derive(Debug, Clone, Default)]
pub struct FiniteStream {
    dim: usize,
    rows: Vec<Round>,
    pos: usize,
    levels: Vec<Vec<String>>,
}

impl FiniteStream {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Round] {
        &self.rows
    }

    /// Levels of each categorical column in one-hot order.
    pub fn levels(&self) -> &[Vec<String>] {
        &self.levels
    }
}

impl Nature for FiniteStream {
    fn dim(&self) -> usize {
        self.dim
    }

    fn next_round(&mut self) -> Result<Round> {
        let r = self.rows.get(self.pos).cloned().ok_or(Error::Exhausted)?;
        self.pos += 1;
        Ok(r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    /// Categorical feature columns; one-hot encoded.
    pub features: Vec<String>,
    pub outcome: String,
    /// Numeric column binned by quantile into the task group `z`.
    #[serde(default)]
    pub z: Option<String>,
}

pub fn ingest_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<FiniteStream> {
    let file = std::fs::File::open(path)?;
    ingest_csv_reader(file, schema)
}

pub fn ingest_csv_reader<R: Read>(reader: R, schema: &CsvSchema) -> Result<FiniteStream> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Csv {
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    if headers.is_empty() {
        return Ok(FiniteStream::default());
    }
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Csv {
                line: 1,
                reason: format!("missing column `{name}`"),
            })
    };
    let outcome_col = col(&schema.outcome)?;
    let feature_cols = schema
        .features
        .iter()
        .map(|f| col(f))
        .collect::<Result<Vec<_>>>()?;
    let z_col = schema.z.as_deref().map(col).transpose()?;

    let mut levels: Vec<Vec<String>> = vec![vec![]; feature_cols.len()];
    let mut index: Vec<HashMap<String, usize>> = vec![HashMap::new(); feature_cols.len()];
    let mut raw = vec![];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Csv {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let y = match rec.get(outcome_col).map(str::trim) {
            Some("1") => true,
            Some("0") => false,
            other => {
                return Err(Error::Csv {
                    line,
                    reason: format!("outcome must be 0 or 1, got {other:?}"),
                })
            }
        };
        let mut cats = Vec::with_capacity(feature_cols.len());
        for (j, &c) in feature_cols.iter().enumerate() {
            let v = rec.get(c).unwrap_or("").trim().to_string();
            let n = index[j].len();
            let id = *index[j].entry(v.clone()).or_insert_with(|| {
                levels[j].push(v);
                n
            });
            cats.push(id);
        }
        let zv = match z_col {
            Some(c) => {
                let s = rec.get(c).unwrap_or("").trim();
                let v: f64 = s.parse().map_err(|_| Error::Csv {
                    line,
                    reason: format!("z value `{s}` is not a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Csv {
                        line,
                        reason: "z value is not finite".into(),
                    });
                }
                Some(v)
            }
            None => None,
        };
        raw.push((cats, y, zv));
    }

    let offsets: Vec<usize> = levels
        .iter()
        .scan(0, |acc, l| {
            let o = *acc;
            *acc += l.len();
            Some(o)
        })
        .collect();
    let dim = levels.iter().map(Vec::len).sum();
    let cuts = quantile_cuts(raw.iter().filter_map(|r| r.2).collect(), 10);
    let rows = raw
        .into_iter()
        .map(|(cats, y, zv)| {
            let mut x = vec![0.0; dim];
            for (j, id) in cats.into_iter().enumerate() {
                x[offsets[j] + id] = 1.0;
            }
            let z = zv.map_or(1, |v| 1 + cuts.iter().filter(|&&c| v > c).count() as u32);
            Round {
                x,
                mu_star: None,
                y,
                z,
            }
        })
        .collect();
    Ok(FiniteStream {
        dim,
        rows,
        pos: 0,
        levels,
    })
}

/// Interior cut points splitting `values` into `bins` groups of near-equal size.
fn quantile_cuts(mut values: Vec<f64>, bins: usize) -> Vec<f64> {
    if values.is_empty() {
        return vec![];
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    (1..bins)
        .map(|i| values[(i * n / bins).min(n - 1).saturating_sub(1)])
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskFamily {
    /// Zero loss when the action matches the outcome, `1 + z` otherwise.
    OneSided,
    /// Entries drawn from a normal with standard deviation `z`.
    DifferentStakes,
    /// Entries drawn from a normal with standard deviation 10, clipped to `[-10, 10]`.
    Random,
}

pub const RANDOM_TASK_BOUND: f64 = 10.0;

/// Loss tables per task group, fixed by the seed.
#[derive(Debug, Clone)]
pub struct TaskSampler {
    family: TaskFamily,
    actions: usize,
    seed: u64,
    cache: HashMap<u32, LossSpec>,
}

impl TaskSampler {
    pub fn new(family: TaskFamily, actions: usize, seed: u64) -> Result<Self> {
        if actions == 0 {
            return Err(Error::invalid("actions", "need at least one action"));
        }
        if family == TaskFamily::OneSided && actions != 2 {
            return Err(Error::invalid(
                "actions",
                "one-sided tasks have two actions",
            ));
        }
        Ok(TaskSampler {
            family,
            actions,
            seed,
            cache: HashMap::new(),
        })
    }

    pub fn family(&self) -> TaskFamily {
        self.family
    }

    /// Largest loss magnitude any table of this sampler can have, if bounded.
    pub fn bound_for(&self, z: u32) -> Option<f64> {
        match self.family {
            TaskFamily::OneSided => Some(1.0 + z as f64),
            TaskFamily::DifferentStakes => None,
            TaskFamily::Random => Some(RANDOM_TASK_BOUND),
        }
    }

    pub fn sample(&mut self, z: u32) -> Result<LossSpec> {
        if let Some(l) = self.cache.get(&z) {
            return Ok(l.clone());
        }
        let l = sample_task(self.family, self.actions, self.seed, z)?;
        self.cache.insert(z, l.clone());
        Ok(l)
    }
}

pub fn sample_task(family: TaskFamily, actions: usize, seed: u64, z: u32) -> Result<LossSpec> {
    let mut rng = keyed(seed, Purpose::Tasks, z as u64);
    match family {
        TaskFamily::OneSided => {
            let stake = 1.0 + z as f64;
            LossSpec::new(vec![[0.0, stake], [stake, 0.0]], stake)
        }
        TaskFamily::DifferentStakes => {
            if z == 0 {
                return Err(Error::invalid("z", "different-stakes tasks need z > 0"));
            }
            table(&mut rng, actions, z as f64, f64::INFINITY).and_then(LossSpec::tight)
        }
        TaskFamily::Random => {
            let t = table(&mut rng, actions, RANDOM_TASK_BOUND, RANDOM_TASK_BOUND)?;
            LossSpec::new(t, RANDOM_TASK_BOUND)
        }
    }
}

/// Real-valued sd variant of the different-stakes family.
pub fn different_stakes_table(actions: usize, sd: f64, seed: u64) -> Result<LossSpec> {
    if !(sd.is_finite() && sd > 0.0) {
        return Err(Error::invalid("z", "standard deviation must be positive"));
    }
    let mut rng = keyed(seed, Purpose::Tasks, sd.to_bits());
    table(&mut rng, actions, sd, f64::INFINITY).and_then(LossSpec::tight)
}

fn table<R: Rng>(rng: &mut R, actions: usize, sd: f64, clip: f64) -> Result<Vec<[f64; 2]>> {
    let normal = Normal::new(0.0, sd).map_err(|e| Error::invalid("sd", e.to_string()))?;
    Ok((0..actions)
        .map(|_| {
            [
                normal.sample(rng).clamp(-clip, clip),
                normal.sample(rng).clamp(-clip, clip),
            ]
        })
        .collect())
}
