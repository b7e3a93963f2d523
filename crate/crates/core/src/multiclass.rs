//! Bets over `K` outcomes.
//!
//! The forecaster reveals a point `mu` of the simplex and a non-negative
//! half-width vector `c`; the agent picks a payment vector `g` and the
//! forecaster loses `<g, y - mu> - <|g|, c>` where `y` is the one-hot outcome.
//!
//! The worst expected loss over `{mu + d : |d_i| <= c_i, sum d = 0}` has the
//! closed form `<mu, l> + min_gamma <c, |l - gamma 1|>`. The inner problem is a
//! weighted-L1 location problem, so some `l_i` is always a minimizer.

use serde::{Deserialize, Serialize};

use crate::error::{finite, Error, Result};

const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexForecast {
    mu: Vec<f64>,
    c: Vec<f64>,
}

impl SimplexForecast {
    pub fn new(mu: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if mu.len() < 2 {
            return Err(Error::invalid("mu", "need at least two outcomes"));
        }
        if c.len() != mu.len() {
            return Err(Error::DimensionMismatch {
                expected: mu.len(),
                got: c.len(),
            });
        }
        let mut total = 0.0;
        for (&m, &w) in mu.iter().zip(&c) {
            finite("mu", m)?;
            finite("c", w)?;
            if m < 0.0 {
                return Err(Error::invalid("mu", "entries must be non-negative"));
            }
            if w < 0.0 {
                return Err(Error::invalid("c", "entries must be non-negative"));
            }
            if m + w > 1.0 || m - w < 0.0 {
                return Err(Error::invalid("c", "mu ± c must stay inside [0, 1]"));
            }
            total += m;
        }
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::invalid("mu", format!("sums to {total}, not 1")));
        }
        Ok(SimplexForecast { mu, c })
    }

    pub fn k(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }
}

/// `l_i = l(a, Y = i)` for the chosen action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossVector {
    l: Vec<f64>,
    bound: f64,
}

impl LossVector {
    pub fn new(l: Vec<f64>, bound: f64) -> Result<Self> {
        finite("bound", bound)?;
        for &v in &l {
            finite("loss", v)?;
            if v.abs() > bound {
                return Err(Error::invalid("loss", format!("|{v}| exceeds {bound}")));
            }
        }
        Ok(LossVector { l, bound })
    }

    pub fn values(&self) -> &[f64] {
        &self.l
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }
}

fn check_dims(f: &SimplexForecast, l: &LossVector) -> Result<()> {
    if l.l.len() != f.k() {
        return Err(Error::DimensionMismatch {
            expected: f.k(),
            got: l.l.len(),
        });
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `<c, |l - gamma 1|>`.
pub fn location_objective(c: &[f64], l: &[f64], gamma: f64) -> f64 {
    c.iter().zip(l).map(|(w, v)| w * (v - gamma).abs()).sum()
}

/// Minimizer of the location objective among the `l_i`, smallest on ties.
fn best_gamma(c: &[f64], l: &[f64]) -> (f64, f64) {
    let mut best = (f64::INFINITY, f64::INFINITY);
    for &g in l {
        let obj = location_objective(c, l, g);
        if obj < best.1 || (obj == best.1 && g < best.0) {
            best = (g, obj);
        }
    }
    best
}

/// Worst expected loss and the minimizing `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxLoss {
    pub l_max: f64,
    pub gamma: f64,
}

pub fn l_max_closed_form(f: &SimplexForecast, l: &LossVector) -> Result<MaxLoss> {
    check_dims(f, l)?;
    let (gamma, obj) = best_gamma(&f.c, &l.l);
    Ok(MaxLoss {
        l_max: dot(&f.mu, &l.l) + obj,
        gamma,
    })
}

/// Best expected loss over the same neighbourhood.
pub fn l_min_closed_form(f: &SimplexForecast, l: &LossVector) -> Result<f64> {
    check_dims(f, l)?;
    let (_, obj) = best_gamma(&f.c, &l.l);
    Ok(dot(&f.mu, &l.l) - obj)
}

/// The payment vector `g = l - gamma* 1`.
pub fn optimal_payment_vector(f: &SimplexForecast, l: &LossVector) -> Result<Vec<f64>> {
    let MaxLoss { gamma, .. } = l_max_closed_form(f, l)?;
    Ok(l.l.iter().map(|v| v - gamma).collect())
}

/// Forecaster loss `<g, y - mu> - <|g|, c>` for outcome index `y`.
pub fn forecaster_payout(g: &[f64], f: &SimplexForecast, y: usize) -> Result<f64> {
    if g.len() != f.k() {
        return Err(Error::DimensionMismatch {
            expected: f.k(),
            got: g.len(),
        });
    }
    if y >= f.k() {
        return Err(Error::invalid("y", format!("outcome {y} out of range")));
    }
    let inner = g[y] - dot(g, &f.mu);
    let premium: f64 = g.iter().zip(&f.c).map(|(a, w)| a.abs() * w).sum();
    Ok(inner - premium)
}

/// Expected total loss of an agent paying with `g` when the truth is `mu_star`:
/// `<mu*, l> + <g, mu - mu*> + <|g|, c>`.
pub fn expected_total_loss(
    f: &SimplexForecast,
    l: &LossVector,
    g: &[f64],
    mu_star: &[f64],
) -> Result<f64> {
    check_dims(f, l)?;
    if g.len() != f.k() || mu_star.len() != f.k() {
        return Err(Error::DimensionMismatch {
            expected: f.k(),
            got: g.len().min(mu_star.len()),
        });
    }
    let shift: f64 = g
        .iter()
        .zip(f.mu.iter().zip(mu_star))
        .map(|(a, (m, s))| a * (m - s))
        .sum();
    let premium: f64 = g.iter().zip(&f.c).map(|(a, w)| a.abs() * w).sum();
    Ok(dot(mu_star, &l.l) + shift + premium)
}
