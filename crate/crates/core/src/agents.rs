//! Decision agents: how an action and a stake are chosen from a forecast.

use serde::{Deserialize, Serialize};

use crate::bet::{loss_bounds, optimal_stake, Forecast, LossSpec};
use crate::error::{finite, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AgentPolicy {
    /// Bayes action under `mu`, insured with the optimal stake.
    HonestInsured,
    /// Bayes action, no bet.
    Uninsured,
    /// Action with the smallest worst-case loss over `mu ± c`, insured.
    WorstCase,
    /// Knows `mu*` and bets `±max_stake` whenever that has positive expectation.
    Adversarial { max_stake: f64 },
    /// Same stake every round.
    MaliciousConstant { stake: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub action: usize,
    pub stake: f64,
}

impl AgentPolicy {
    pub fn adversarial(max_stake: f64) -> Result<Self> {
        finite("max_stake", max_stake)?;
        if max_stake <= 0.0 {
            return Err(Error::invalid("max_stake", "must be positive"));
        }
        Ok(AgentPolicy::Adversarial { max_stake })
    }

    pub fn malicious_constant(stake: f64, max_stake: f64) -> Result<Self> {
        finite("stake", stake)?;
        if stake.abs() > max_stake {
            return Err(Error::invalid(
                "stake",
                format!("|{stake}| exceeds the stake bound {max_stake}"),
            ));
        }
        Ok(AgentPolicy::MaliciousConstant { stake })
    }

    pub fn name(&self) -> &'static str {
        match self {
            AgentPolicy::HonestInsured => "honest",
            AgentPolicy::Uninsured => "uninsured",
            AgentPolicy::WorstCase => "worst-case",
            AgentPolicy::Adversarial { .. } => "adversarial",
            AgentPolicy::MaliciousConstant { .. } => "constant",
        }
    }

    /// `mu_star` is only read by the adversarial policy, which requires it.
    pub fn decide(&self, l: &LossSpec, f: &Forecast, mu_star: Option<f64>) -> Result<Decision> {
        match *self {
            AgentPolicy::HonestInsured => {
                let action = bayes_action(l, f.mu)?;
                Ok(Decision {
                    action,
                    stake: optimal_stake(l, action)?,
                })
            }
            AgentPolicy::Uninsured => Ok(Decision {
                action: bayes_action(l, f.mu)?,
                stake: 0.0,
            }),
            AgentPolicy::WorstCase => {
                let action = worst_case_action(l, f)?;
                Ok(Decision {
                    action,
                    stake: optimal_stake(l, action)?,
                })
            }
            AgentPolicy::Adversarial { max_stake } => {
                let mu_star = mu_star
                    .ok_or_else(|| Error::invalid("mu_star", "adversarial agent needs mu*"))?;
                finite("mu_star", mu_star)?;
                Ok(Decision {
                    action: 0,
                    stake: adversarial_stake(max_stake, f, mu_star),
                })
            }
            AgentPolicy::MaliciousConstant { stake } => Ok(Decision { action: 0, stake }),
        }
    }
}

/// Stake in `[-m, m]` maximizing `b(mu* - mu) - |b|c`.
pub fn adversarial_stake(m: f64, f: &Forecast, mu_star: f64) -> f64 {
    let edge = mu_star - f.mu;
    if edge.abs() > f.c {
        m * edge.signum()
    } else {
        0.0
    }
}

fn argmin_by<F: Fn(usize) -> Result<f64>>(n: usize, score: F) -> Result<usize> {
    let mut best = (0, score(0)?);
    for a in 1..n {
        let v = score(a)?;
        if v < best.1 {
            best = (a, v);
        }
    }
    Ok(best.0)
}

/// `argmin_a E_{Y ~ mu} l(a, Y)`, first action on ties.
pub fn bayes_action(l: &LossSpec, mu: f64) -> Result<usize> {
    argmin_by(l.num_actions(), |a| l.expected(a, mu))
}

/// `argmin_a L_max(a)`, first action on ties.
pub fn worst_case_action(l: &LossSpec, f: &Forecast) -> Result<usize> {
    argmin_by(l.num_actions(), |a| Ok(loss_bounds(l, a, f)?.max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bet::RoundRecord;

    fn alice() -> LossSpec {
        LossSpec::new(vec![[2.0, -10.0], [0.0, 0.0]], 10.0).unwrap()
    }

    #[test]
    fn honest_alice_gains_four() {
        let f = Forecast::new(0.5, 0.0).unwrap();
        let d = AgentPolicy::HonestInsured
            .decide(&alice(), &f, None)
            .unwrap();
        assert_eq!(
            d,
            Decision {
                action: 0,
                stake: -12.0
            }
        );
        for y in [false, true] {
            let rec = RoundRecord::settle(1, f, &alice(), d.action, d.stake, y).unwrap();
            assert_eq!(rec.agent_total_loss, -4.0);
        }
    }

    #[test]
    fn uninsured_never_bets() {
        for mu in [0.05, 0.5, 0.95] {
            let f = Forecast::new(mu, 0.1).unwrap();
            assert_eq!(
                AgentPolicy::Uninsured
                    .decide(&alice(), &f, None)
                    .unwrap()
                    .stake,
                0.0
            );
        }
    }

    #[test]
    fn ties_go_to_first_action() {
        let l = LossSpec::new(vec![[1.0, 1.0], [1.0, 1.0]], 1.0).unwrap();
        assert_eq!(bayes_action(&l, 0.3).unwrap(), 0);
    }

    #[test]
    fn worst_case_prefers_safe_action() {
        // at mu = 0.2 the risky action looks slightly better on average
        let l = LossSpec::new(vec![[0.0, 5.0], [1.1, 1.1]], 5.0).unwrap();
        let f = Forecast::new(0.2, 0.1).unwrap();
        assert_eq!(bayes_action(&l, f.mu).unwrap(), 0);
        assert_eq!(worst_case_action(&l, &f).unwrap(), 1);
    }

    #[test]
    fn adversary_example() {
        let f = Forecast::new(0.7, 0.1).unwrap();
        let p = AgentPolicy::adversarial(3.0).unwrap();
        assert_eq!(p.decide(&alice(), &f, Some(0.2)).unwrap().stake, -3.0);
        assert_eq!(p.decide(&alice(), &f, Some(0.75)).unwrap().stake, 0.0);
        assert!(p.decide(&alice(), &f, None).is_err());
    }

    #[test]
    fn adversary_beats_stake_grid() {
        for &(mu, c, ms) in &[
            (0.3, 0.05, 0.9),
            (0.6, 0.2, 0.5),
            (0.5, 0.0, 0.1),
            (0.2, 0.3, 0.9),
        ] {
            let f = Forecast::new(mu, c).unwrap();
            let m = 4.0;
            let b = adversarial_stake(m, &f, ms);
            let value = |b: f64| b * (ms - mu) - b.abs() * c;
            let grid = (0..=8000)
                .map(|i| -m + i as f64 * 1e-3)
                .map(value)
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((value(b) - grid).abs() < 1e-12);
            assert!((value(b) - (m * ((ms - mu).abs() - c)).max(0.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_stake_bound() {
        assert!(AgentPolicy::malicious_constant(5.0, 4.0).is_err());
        let p = AgentPolicy::malicious_constant(-4.0, 4.0).unwrap();
        let f = Forecast::new(0.4, 0.0).unwrap();
        assert_eq!(p.decide(&alice(), &f, None).unwrap().stake, -4.0);
    }
}
