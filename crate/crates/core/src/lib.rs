//! Forecasts with prediction intervals that back themselves with bets.

pub mod agents;
pub mod bet;
pub mod error;
pub mod experiment;
pub mod forecaster;
pub mod market;
pub mod multiclass;
pub mod offline;
pub mod rng;
pub mod streams;
pub mod swap;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/bets.md")]
    mod bets {}
    #[doc = include_str!("../../../book/src/multiclass.md")]
    mod multiclass {}
    #[doc = include_str!("../../../book/src/forecaster.md")]
    mod forecaster {}
    #[doc = include_str!("../../../book/src/swap.md")]
    mod swap {}
    #[doc = include_str!("../../../book/src/offline.md")]
    mod offline {}
    #[doc = include_str!("../../../book/src/market.md")]
    mod market {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
