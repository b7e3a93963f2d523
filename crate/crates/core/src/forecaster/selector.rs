//! Rules for picking the width correction `λ_t`.

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::swap::SwapRegretState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectorKind {
    Swap,
    None,
    Standard,
    NaiveBr,
}

impl SelectorKind {
    pub const ALL: [SelectorKind; 4] = [
        SelectorKind::Swap,
        SelectorKind::None,
        SelectorKind::Standard,
        SelectorKind::NaiveBr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SelectorKind::Swap => "swap",
            SelectorKind::None => "none",
            SelectorKind::Standard => "standard",
            SelectorKind::NaiveBr => "naive-br",
        }
    }
}

impl fmt::Display for SelectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SelectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SelectorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid("selector", format!("unknown selector `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Selector {
    Swap(SwapRegretState),
    None,
    /// Global follow-the-leader, a single-bin swap state.
    Standard(SwapRegretState),
    /// The `λ` that would have zeroed the past payout.
    NaiveBr {
        sum_payout: f64,
        sum_abs_b: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Choice {
    pub lambda: f64,
    pub bin: Option<usize>,
}

impl Selector {
    pub fn new(kind: SelectorKind, k: usize, rng: ChaCha8Rng) -> Result<Self> {
        Ok(match kind {
            SelectorKind::Swap => Selector::Swap(SwapRegretState::with_rng(k, rng)?),
            SelectorKind::None => Selector::None,
            SelectorKind::Standard => Selector::Standard(SwapRegretState::with_rng(1, rng)?),
            SelectorKind::NaiveBr => Selector::NaiveBr {
                sum_payout: 0.0,
                sum_abs_b: 0.0,
            },
        })
    }

    pub fn kind(&self) -> SelectorKind {
        match self {
            Selector::Swap(_) => SelectorKind::Swap,
            Selector::None => SelectorKind::None,
            Selector::Standard(_) => SelectorKind::Standard,
            Selector::NaiveBr { .. } => SelectorKind::NaiveBr,
        }
    }

    pub fn select(&mut self) -> Choice {
        match self {
            Selector::Swap(st) | Selector::Standard(st) => {
                let sel = st.select_lambda();
                Choice {
                    lambda: sel.lambda,
                    bin: Some(sel.bin),
                }
            }
            Selector::None => Choice {
                lambda: 0.0,
                bin: None,
            },
            Selector::NaiveBr {
                sum_payout,
                sum_abs_b,
            } => Choice {
                lambda: if *sum_abs_b > 0.0 {
                    *sum_payout / *sum_abs_b
                } else {
                    0.0
                },
                bin: None,
            },
        }
    }

    /// `payout_wo_lambda = b(y - mu) - |b| c_hat`.
    pub fn observe(
        &mut self,
        choice: Choice,
        r: f64,
        s: f64,
        payout_wo_lambda: f64,
        abs_b: f64,
    ) -> Result<()> {
        match self {
            Selector::Swap(st) | Selector::Standard(st) => {
                let bin = choice
                    .bin
                    .ok_or_else(|| Error::ProtocolOrder("choice carries no bin".into()))?;
                st.observe(bin, r, s)
            }
            Selector::None => Ok(()),
            Selector::NaiveBr {
                sum_payout,
                sum_abs_b,
            } => {
                *sum_payout += payout_wo_lambda;
                *sum_abs_b += abs_b;
                Ok(())
            }
        }
    }
}
