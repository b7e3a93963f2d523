//! Binary decision making with bets.
//!
//! A forecaster reveals a probability `mu` for the event `y = 1` together with
//! an interval half-width `c`. A decision agent picks an action and a stake
//! `b`; once the outcome is revealed the forecaster pays the agent
//! `b(y - mu) - |b|c`. Losses are negative utilities throughout, and `y = true`
//! means the event happened.
//!
//! The stake `l(a, 1) - l(a, 0)` makes the agent's expected total loss equal to
//! the worst expected loss over the forecast interval, whatever the true
//! probability is (see [`payment_guarantee`]).

use serde::{Deserialize, Serialize};

use crate::error::{finite, Error, Result};

/// Outcome as a real number, `1.0` for the event.
#[inline]
pub fn outcome_value(y: bool) -> f64 {
    if y {
        1.0
    } else {
        0.0
    }
}

/// A probability forecast with an interval half-width.
///
/// `c` is unrestricted here: the exactness forecaster and the flight market
/// both emit negative widths. Use [`Forecast::strict`] when the interval
/// `(mu - c, mu + c)` must lie inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub mu: f64,
    pub c: f64,
}

impl Forecast {
    pub fn new(mu: f64, c: f64) -> Result<Self> {
        finite("mu", mu)?;
        finite("c", c)?;
        Ok(Forecast { mu, c })
    }

    pub fn strict(mu: f64, c: f64) -> Result<Self> {
        let f = Forecast::new(mu, c)?;
        if f.is_strict() {
            Ok(f)
        } else {
            Err(Error::DegenerateInterval {
                lo: mu - c,
                hi: mu + c,
            })
        }
    }

    /// `c >= 0` and `(mu - c, mu + c)` inside `(0, 1)`.
    pub fn is_strict(&self) -> bool {
        self.c >= 0.0 && self.mu - self.c > 0.0 && self.mu + self.c < 1.0
    }

    pub fn lower(&self) -> f64 {
        self.mu - self.c
    }

    pub fn upper(&self) -> f64 {
        self.mu + self.c
    }
}

/// A bounded loss table `l(a, y)` over a finite action set.
///
/// Actions are identified by their index; ties in any argmin are broken toward
/// the smaller index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    table: Vec<[f64; 2]>,
    bound: f64,
}

impl LossSpec {
    /// `table[a] = [l(a, 0), l(a, 1)]`; every entry must satisfy `|l| <= bound`.
    pub fn new(table: Vec<[f64; 2]>, bound: f64) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::invalid("actions", "loss table has no actions"));
        }
        finite("bound", bound)?;
        if bound <= 0.0 {
            return Err(Error::invalid("bound", "must be positive"));
        }
        for row in &table {
            for &v in row {
                finite("loss", v)?;
                if v.abs() > bound {
                    return Err(Error::invalid(
                        "loss",
                        format!("|{v}| exceeds the bound {bound}"),
                    ));
                }
            }
        }
        Ok(LossSpec { table, bound })
    }

    /// Builds a table whose bound is the largest absolute entry (at least
    /// `f64::MIN_POSITIVE` so that all-zero tables are accepted).
    pub fn tight(table: Vec<[f64; 2]>) -> Result<Self> {
        let bound = table
            .iter()
            .flat_map(|r| r.iter())
            .fold(f64::MIN_POSITIVE, |m, v| m.max(v.abs()));
        LossSpec::new(table, bound)
    }

    pub fn num_actions(&self) -> usize {
        self.table.len()
    }

    /// Loss bound `M`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Largest stake an insured agent can need, `2M`.
    pub fn stake_bound(&self) -> f64 {
        2.0 * self.bound
    }

    pub fn loss(&self, action: usize, y: bool) -> Result<f64> {
        self.row(action).map(|r| r[y as usize])
    }

    fn row(&self, action: usize) -> Result<[f64; 2]> {
        self.table.get(action).copied().ok_or(Error::UnknownAction {
            action,
            available: self.table.len(),
        })
    }

    /// Expected loss of `action` when `P(y = 1) = p`.
    pub fn expected(&self, action: usize, p: f64) -> Result<f64> {
        let [l0, l1] = self.row(action)?;
        Ok(p * l1 + (1.0 - p) * l0)
    }
}

/// Payout of a bet as a function of the binary outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetFunction {
    pub f0: f64,
    pub f1: f64,
}

impl BetFunction {
    pub fn new(f0: f64, f1: f64) -> Result<Self> {
        finite("f0", f0)?;
        finite("f1", f1)?;
        Ok(BetFunction { f0, f1 })
    }

    pub fn at(&self, y: bool) -> f64 {
        if y {
            self.f1
        } else {
            self.f0
        }
    }

    /// `E[f(Y)]` for `Y ~ Bernoulli(p)`.
    pub fn expectation(&self, p: f64) -> f64 {
        p * self.f1 + (1.0 - p) * self.f0
    }
}

/// The forecaster's loss for one settled round, `b(y - mu) - |b|c`.
///
/// Evaluated as `b(y - (mu + c))` for `b >= 0` and `b(y - (mu - c))` for
/// `b < 0`, which is the same quantity. A zero-width forecast at `mu + c`
/// therefore produces bit-identical payouts for non-negative stakes.
pub fn forecaster_payout(b: f64, f: &Forecast, y: bool) -> Result<f64> {
    finite("b", b)?;
    finite("mu", f.mu)?;
    finite("c", f.c)?;
    let y = outcome_value(y);
    Ok(if b >= 0.0 {
        b * (y - (f.mu + f.c))
    } else {
        b * (y - (f.mu - f.c))
    })
}

/// The stake that insures `action` against a wrong forecast: `l(a, 1) - l(a, 0)`.
pub fn optimal_stake(l: &LossSpec, action: usize) -> Result<f64> {
    let [l0, l1] = l.row(action)?;
    Ok(l1 - l0)
}

/// Minimum, average and maximum expected loss over `mu ± c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBounds {
    pub min: f64,
    pub avg: f64,
    pub max: f64,
}

pub fn loss_bounds(l: &LossSpec, action: usize, f: &Forecast) -> Result<LossBounds> {
    let [l0, l1] = l.row(action)?;
    let avg = f.mu * l1 + (1.0 - f.mu) * l0;
    let spread = f.c * (l1 - l0).abs();
    Ok(LossBounds {
        min: avg - spread,
        avg,
        max: avg + spread,
    })
}

/// True expected total loss of an insured agent next to the forecast's worst case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaymentGuarantee {
    /// `E*[l(a, Y)] - E*[b(Y - mu)] + |b|c` with `b` the optimal stake.
    pub pay: f64,
    pub max: f64,
}

pub fn payment_guarantee(
    l: &LossSpec,
    action: usize,
    f: &Forecast,
    mu_star: f64,
) -> Result<PaymentGuarantee> {
    finite("mu_star", mu_star)?;
    if !(0.0..=1.0).contains(&mu_star) {
        return Err(Error::invalid("mu_star", "must lie in [0, 1]"));
    }
    let b = optimal_stake(l, action)?;
    let true_loss = l.expected(action, mu_star)?;
    let pay = true_loss - b * (mu_star - f.mu) + b.abs() * f.c;
    Ok(PaymentGuarantee {
        pay,
        max: loss_bounds(l, action, f)?.max,
    })
}

fn require_strict(fc: &Forecast) -> Result<()> {
    finite("mu", fc.mu)?;
    finite("c", fc.c)?;
    if fc.is_strict() {
        Ok(())
    } else {
        Err(Error::DegenerateInterval {
            lo: fc.lower(),
            hi: fc.upper(),
        })
    }
}

/// Whether the forecaster should accept losing `f(Y)`: the expectation is
/// non-positive under every probability in `mu ± c`.
///
/// The expectation is affine in the probability, so only the two interval
/// endpoints are checked.
pub fn bet_is_acceptable(f: &BetFunction, fc: &Forecast) -> Result<bool> {
    require_strict(fc)?;
    Ok(f.expectation(fc.lower()) <= 0.0 && f.expectation(fc.upper()) <= 0.0)
}

/// A stake `b` whose fair bet `b(y - mu) - |b|c` dominates `f` pointwise, if
/// `f` is acceptable.
///
/// `b` is the solution of `f1 = b(1 - mu) - |b|c`; acceptability then implies
/// the bound at `y = 0`.
pub fn dominating_stake(f: &BetFunction, fc: &Forecast) -> Result<Option<f64>> {
    if !bet_is_acceptable(f, fc)? {
        return Ok(None);
    }
    let b = if f.f1 >= 0.0 {
        f.f1 / (1.0 - fc.mu - fc.c)
    } else {
        f.f1 / (1.0 - fc.mu + fc.c)
    };
    Ok(Some(b))
}

/// The payout of the fair bet with stake `b`, as a bet function.
pub fn fair_bet(b: f64, fc: &Forecast) -> Result<BetFunction> {
    BetFunction::new(
        forecaster_payout(b, fc, false)?,
        forecaster_payout(b, fc, true)?,
    )
}

/// One fully settled round between a forecaster and an agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: u64,
    pub forecast: Forecast,
    pub action: usize,
    pub stake: f64,
    pub y: bool,
    pub forecaster_payout: f64,
    /// The agent's loss from the bet, `-(b(y - mu) - |b|c)`.
    pub agent_bet_loss: f64,
    pub agent_total_loss: f64,
}

impl RoundRecord {
    pub fn settle(
        t: u64,
        forecast: Forecast,
        l: &LossSpec,
        action: usize,
        stake: f64,
        y: bool,
    ) -> Result<Self> {
        let payout = forecaster_payout(stake, &forecast, y)?;
        let decision_loss = l.loss(action, y)?;
        Ok(RoundRecord {
            t,
            forecast,
            action,
            stake,
            y,
            forecaster_payout: payout,
            agent_bet_loss: -payout,
            agent_total_loss: decision_loss - payout,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn alice() -> LossSpec {
        // action 0 = use the product; y = 1 means it is effective
        LossSpec::new(vec![[2.0, -10.0], [0.0, 0.0]], 10.0).unwrap()
    }

    #[test]
    fn payout_examples() {
        let f = Forecast::new(0.5, 0.0).unwrap();
        assert_eq!(forecaster_payout(-12.0, &f, true).unwrap(), -6.0);
        let f = Forecast::new(0.3, 0.1).unwrap();
        assert_eq!(forecaster_payout(0.0, &f, true).unwrap(), 0.0);
        assert_eq!(forecaster_payout(0.0, &f, false).unwrap(), 0.0);
        assert!((forecaster_payout(2.0, &f, false).unwrap() + 0.8).abs() < 1e-15);
    }

    #[test]
    fn payout_rejects_non_finite() {
        let f = Forecast { mu: 0.5, c: 0.0 };
        assert_eq!(
            forecaster_payout(f64::NAN, &f, true),
            Err(Error::NonFinite("b"))
        );
        assert!(Forecast::new(f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn alice_stake_fixes_total_loss() {
        let l = alice();
        let b = optimal_stake(&l, 0).unwrap();
        assert_eq!(b, -12.0);
        let f = Forecast::new(0.5, 0.0).unwrap();
        for y in [false, true] {
            let rec = RoundRecord::settle(1, f, &l, 0, b, y).unwrap();
            assert_eq!(rec.agent_total_loss, -4.0);
        }
    }

    #[test]
    fn optimal_stake_simple_cases() {
        let l = LossSpec::new(vec![[3.0, 3.0], [0.0, 1.0]], 3.0).unwrap();
        assert_eq!(optimal_stake(&l, 0).unwrap(), 0.0);
        assert_eq!(optimal_stake(&l, 1).unwrap(), 1.0);
        assert_eq!(
            optimal_stake(&l, 2),
            Err(Error::UnknownAction {
                action: 2,
                available: 2
            })
        );
    }

    #[test]
    fn loss_spec_validation() {
        assert!(LossSpec::new(vec![], 1.0).is_err());
        assert!(LossSpec::new(vec![[2.0, 0.0]], 1.0).is_err());
        assert!(LossSpec::new(vec![[0.0, 0.0]], 0.0).is_err());
        assert_eq!(LossSpec::tight(vec![[-3.0, 2.0]]).unwrap().bound(), 3.0);
    }

    #[test]
    fn loss_bounds_examples() {
        let l = LossSpec::new(vec![[0.0, 1.0]], 1.0).unwrap();
        let b = loss_bounds(&l, 0, &Forecast::new(0.5, 0.1).unwrap()).unwrap();
        assert!((b.min - 0.4).abs() < 1e-15);
        assert_eq!(b.avg, 0.5);
        assert!((b.max - 0.6).abs() < 1e-15);
        let b = loss_bounds(&l, 0, &Forecast::new(0.3, 0.0).unwrap()).unwrap();
        assert_eq!((b.min, b.max), (b.avg, b.avg));
    }

    #[test]
    fn loss_bounds_match_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let l0 = rng.random_range(-5.0..5.0);
            let l1 = rng.random_range(-5.0..5.0);
            let l = LossSpec::new(vec![[l0, l1]], 5.0).unwrap();
            let mu = rng.random_range(0.2..0.8);
            let c = rng.random_range(0.0..0.19);
            let f = Forecast::strict(mu, c).unwrap();
            let bounds = loss_bounds(&l, 0, &f).unwrap();
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            let steps = (2.0 * c / 1e-4).ceil() as usize;
            for i in 0..=steps {
                let p = (mu - c + i as f64 * 1e-4).min(mu + c);
                let e = p * l1 + (1.0 - p) * l0;
                lo = lo.min(e);
                hi = hi.max(e);
            }
            assert!((bounds.max - hi).abs() <= 1e-3);
            assert!((bounds.min - lo).abs() <= 1e-3);
        }
    }

    #[test]
    fn payment_guarantee_examples() {
        let l = alice();
        let f = Forecast::new(0.5, 0.0).unwrap();
        let g = payment_guarantee(&l, 0, &f, 0.1).unwrap();
        assert!((g.pay + 4.0).abs() < 1e-12);
        assert_eq!(g.max, -4.0);

        let l = LossSpec::new(vec![[1.0, 4.0]], 4.0).unwrap();
        let f = Forecast::new(0.25, 0.0).unwrap();
        let g = payment_guarantee(&l, 0, &f, 0.25).unwrap();
        let avg = loss_bounds(&l, 0, &f).unwrap().avg;
        assert!((g.pay - avg).abs() < 1e-15);
        assert!(payment_guarantee(&l, 0, &f, 1.5).is_err());
    }

    #[test]
    fn fair_bet_itself_is_acceptable() {
        let fc = Forecast::strict(0.4, 0.0).unwrap();
        let f = BetFunction::new(-0.4, 0.6).unwrap();
        assert!(bet_is_acceptable(&f, &fc).unwrap());
        let b = dominating_stake(&f, &fc).unwrap().unwrap();
        assert!((b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn positive_constant_bet_rejected() {
        let fc = Forecast::strict(0.4, 0.1).unwrap();
        let f = BetFunction::new(0.1, 0.1).unwrap();
        assert!(!bet_is_acceptable(&f, &fc).unwrap());
        assert_eq!(dominating_stake(&f, &fc).unwrap(), None);
    }

    #[test]
    fn zero_worst_case_expectation_is_acceptable() {
        let fc = Forecast::strict(0.5, 0.25).unwrap();
        // expectation at the upper endpoint 0.75 is exactly zero
        let f = BetFunction::new(-3.0, 1.0).unwrap();
        assert_eq!(f.expectation(0.75), 0.0);
        assert!(bet_is_acceptable(&f, &fc).unwrap());
    }

    #[test]
    fn acceptability_requires_strict_interval() {
        let f = BetFunction::new(0.0, 0.0).unwrap();
        assert!(bet_is_acceptable(&f, &Forecast { mu: 0.9, c: 0.2 }).is_err());
        assert!(bet_is_acceptable(&f, &Forecast { mu: 0.5, c: -0.1 }).is_err());
    }

    #[test]
    fn record_is_zero_sum() {
        let l = alice();
        let f = Forecast::new(0.37, 0.05).unwrap();
        let rec = RoundRecord::settle(3, f, &l, 0, -12.0, false).unwrap();
        assert_eq!(rec.forecaster_payout + rec.agent_bet_loss, 0.0);
        assert_eq!(rec.agent_total_loss, 2.0 - rec.forecaster_payout);
    }
}
