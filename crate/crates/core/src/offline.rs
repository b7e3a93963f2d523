//! Soundness checks for a fixed forecaster on a finite distribution.
//!
//! A table forecaster `(mu, c)` is sound for a class of bets when no bet in
//! the class has positive expected gain `E[b(X)(mu(X) - mu*(X)) - |b(X)| c(X)]`.
//! All gaps here are the supremum of that gain over bets bounded by `M`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{finite, Error, Result};

const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub p: f64,
    pub mu_star: f64,
}

/// Finite distribution over `x = 0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    points: Vec<Point>,
}

impl DiscreteDistribution {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("support", "empty"));
        }
        let mut total = 0.0;
        for pt in &points {
            finite("p", pt.p)?;
            finite("mu_star", pt.mu_star)?;
            if pt.p <= 0.0 {
                return Err(Error::invalid("p", "weights must be positive"));
            }
            if !(0.0..=1.0).contains(&pt.mu_star) {
                return Err(Error::invalid("mu_star", "must lie in [0, 1]"));
            }
            total += pt.p;
        }
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::invalid("p", format!("weights sum to {total}")));
        }
        Ok(DiscreteDistribution { points })
    }

    /// Rescales positive weights to sum to one.
    pub fn normalized(weights: &[f64], mu_star: &[f64]) -> Result<Self> {
        if weights.len() != mu_star.len() {
            return Err(Error::DimensionMismatch {
                expected: weights.len(),
                got: mu_star.len(),
            });
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::invalid(
                "p",
                "weights must have a positive finite sum",
            ));
        }
        let points = weights
            .iter()
            .zip(mu_star)
            .map(|(&w, &m)| Point {
                p: w / total,
                mu_star: m,
            })
            .collect::<Vec<_>>();
        let sum: f64 = points.iter().map(|p| p.p).sum();
        let mut points = points;
        // push the rounding residue onto the heaviest point
        if let Some(i) = (0..points.len()).max_by(|&a, &b| points[a].p.total_cmp(&points[b].p)) {
            points[i].p += 1.0 - sum;
        }
        DiscreteDistribution::new(points)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableForecaster {
    pub mu: Vec<f64>,
    pub c: Vec<f64>,
}

impl TableForecaster {
    pub fn new(mu: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if mu.len() != c.len() {
            return Err(Error::DimensionMismatch {
                expected: mu.len(),
                got: c.len(),
            });
        }
        for (&m, &w) in mu.iter().zip(&c) {
            finite("mu", m)?;
            finite("c", w)?;
            if !(0.0..=1.0).contains(&m) || !(0.0..=1.0).contains(&w) {
                return Err(Error::invalid("forecast", "mu and c must lie in [0, 1]"));
            }
        }
        Ok(TableForecaster { mu, c })
    }

    pub fn constant_width(mu: Vec<f64>, c0: f64) -> Result<Self> {
        let c = vec![c0; mu.len()];
        TableForecaster::new(mu, c)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BetClass {
    /// Bets that depend on `x` only through `mu(x)`.
    FunctionsOfMu,
    /// Functions of `mu` times the indicator of one of the subsets.
    Subsets { sets: Vec<Vec<usize>> },
    /// Any bounded function of `x`.
    AllFunctions,
}

fn check(dist: &DiscreteDistribution, fc: &TableForecaster) -> Result<()> {
    if fc.mu.len() != dist.len() {
        return Err(Error::DimensionMismatch {
            expected: dist.len(),
            got: fc.mu.len(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default)]
struct Group {
    mass: f64,
    // Σ p (u - mu*)
    signed: f64,
    // Σ p c
    width: f64,
}

fn groups(
    dist: &DiscreteDistribution,
    fc: &TableForecaster,
    members: impl Iterator<Item = usize>,
) -> BTreeMap<u64, Group> {
    let mut out: BTreeMap<u64, Group> = BTreeMap::new();
    for x in members {
        let pt = dist.points[x];
        let u = fc.mu[x];
        let g = out.entry(u.to_bits()).or_default();
        g.mass += pt.p;
        g.signed += pt.p * (u - pt.mu_star);
        g.width += pt.p * fc.c[x];
    }
    out
}

fn grouped_gap(groups: &BTreeMap<u64, Group>, m: f64) -> f64 {
    m * groups
        .values()
        .map(|g| (g.signed.abs() - g.width).max(0.0))
        .sum::<f64>()
}

fn check_members(dist: &DiscreteDistribution, set: &[usize]) -> Result<()> {
    if let Some(&x) = set.iter().find(|&&x| x >= dist.len()) {
        return Err(Error::invalid(
            "subset",
            format!("point {x} outside the support"),
        ));
    }
    Ok(())
}

pub fn soundness_gap(
    dist: &DiscreteDistribution,
    fc: &TableForecaster,
    class: &BetClass,
    m: f64,
) -> Result<f64> {
    check(dist, fc)?;
    finite("M", m)?;
    if m < 0.0 {
        return Err(Error::invalid("M", "must be non-negative"));
    }
    match class {
        BetClass::FunctionsOfMu => Ok(grouped_gap(&groups(dist, fc, 0..dist.len()), m)),
        BetClass::Subsets { sets } => {
            let mut best: f64 = 0.0;
            for set in sets {
                check_members(dist, set)?;
                best = best.max(grouped_gap(&groups(dist, fc, set.iter().copied()), m));
            }
            Ok(best)
        }
        BetClass::AllFunctions => Ok(m * dist
            .points
            .iter()
            .enumerate()
            .map(|(x, pt)| pt.p * ((fc.mu[x] - pt.mu_star).abs() - fc.c[x]).max(0.0))
            .sum::<f64>()),
    }
}

/// `max_u |E[mu* | mu = u] - u|` over the predicted values.
pub fn mce(dist: &DiscreteDistribution, fc: &TableForecaster) -> Result<f64> {
    check(dist, fc)?;
    Ok(groups(dist, fc, 0..dist.len())
        .values()
        .map(|g| g.signed.abs() / g.mass)
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetGap {
    pub index: usize,
    /// `None` for an empty subset.
    pub gap: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticalibrationReport {
    pub c0: f64,
    pub subsets: Vec<SubsetGap>,
    pub multicalibrated: bool,
}

/// Checks every `(S, u)` cell against the constant level `c0` with indicator bets.
pub fn multicalibration_gap(
    dist: &DiscreteDistribution,
    fc: &TableForecaster,
    sets: &[Vec<usize>],
    c0: f64,
) -> Result<MulticalibrationReport> {
    check(dist, fc)?;
    finite("c0", c0)?;
    let level = TableForecaster {
        mu: fc.mu.clone(),
        c: vec![c0; fc.mu.len()],
    };
    let mut subsets = Vec::with_capacity(sets.len());
    let mut ok = true;
    for (index, set) in sets.iter().enumerate() {
        check_members(dist, set)?;
        if set.is_empty() {
            subsets.push(SubsetGap {
                index,
                gap: None,
                note: Some("empty subset skipped".into()),
            });
            continue;
        }
        let gap = grouped_gap(&groups(dist, &level, set.iter().copied()), 1.0);
        ok &= gap == 0.0;
        subsets.push(SubsetGap {
            index,
            gap: Some(gap),
            note: None,
        });
    }
    Ok(MulticalibrationReport {
        c0,
        subsets,
        multicalibrated: ok,
    })
}

/// Piecewise-constant recalibration map over `B` equal bins of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningMap {
    /// Bin average, `None` for bins without data.
    pub values: Vec<Option<f64>>,
}

pub fn bin_of(mu: f64, bins: usize) -> usize {
    ((mu * bins as f64).floor().max(0.0) as usize).min(bins - 1)
}

impl BinningMap {
    /// Fits from weighted `(mu, target)` pairs.
    pub fn fit(bins: usize, data: impl Iterator<Item = (f64, f64, f64)>) -> Result<Self> {
        if bins == 0 {
            return Err(Error::invalid("B", "need at least one bin"));
        }
        let mut mass = vec![0.0; bins];
        let mut sum = vec![0.0; bins];
        for (w, mu, target) in data {
            let b = bin_of(mu, bins);
            mass[b] += w;
            sum[b] += w * target;
        }
        Ok(BinningMap {
            values: mass
                .iter()
                .zip(&sum)
                .map(|(&m, &s)| (m > 0.0).then(|| s / m))
                .collect(),
        })
    }

    pub fn apply(&self, mu: f64) -> f64 {
        self.values[bin_of(mu, self.values.len())].unwrap_or(mu)
    }
}

/// Replaces each `mu(x)` by the weighted mean of `mu*` in its bin.
pub fn histogram_binning(
    dist: &DiscreteDistribution,
    fc: &TableForecaster,
    bins: usize,
) -> Result<TableForecaster> {
    check(dist, fc)?;
    let map = BinningMap::fit(
        bins,
        dist.points
            .iter()
            .zip(&fc.mu)
            .map(|(pt, &mu)| (pt.p, mu, pt.mu_star)),
    )?;
    Ok(TableForecaster {
        mu: fc.mu.iter().map(|&m| map.apply(m)).collect(),
        c: fc.c.clone(),
    })
}

/// Sample version: bins predicted probabilities by empirical outcome rate.
pub fn histogram_binning_samples(mu: &[f64], y: &[bool], bins: usize) -> Result<BinningMap> {
    if mu.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: mu.len(),
            got: y.len(),
        });
    }
    BinningMap::fit(
        bins,
        mu.iter()
            .zip(y)
            .map(|(&m, &yy)| (1.0, m, if yy { 1.0 } else { 0.0 })),
    )
}
