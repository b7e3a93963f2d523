//! Binned follow-the-leader for the quadratic losses `(r_t + s_t λ)²`.
//!
//! `[-1, 1]` is split into `K` equal bins. Every bin keeps the least-squares
//! statistics of the rounds in which it was played. To pick the next `λ` the
//! state walks `v -> bin_index(optimum(v))` from the previously played bin
//! until a bin repeats, then plays a uniformly random member of that cycle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{finite, Error, Result};

/// Distance of the largest emitted `λ` from 1.
pub const EPS_OPEN: f64 = 1.0 / 4_294_967_296.0;

const LAMBDA_MAX: f64 = 1.0 - EPS_OPEN;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    pub sum_rs: f64,
    pub sum_ss: f64,
    pub count: u64,
}

impl BinStats {
    fn push(&mut self, r: f64, s: f64) {
        self.sum_rs += r * s;
        self.sum_ss += s * s;
        self.count += 1;
    }

    /// Clipped least-squares minimizer, 0 for a bin without curvature.
    pub fn optimum(&self) -> f64 {
        if self.sum_ss > 0.0 {
            (-self.sum_rs / self.sum_ss).clamp(-1.0, LAMBDA_MAX)
        } else {
            0.0
        }
    }
}

/// Bin of `[-1, 1]` holding `lambda`; values outside the range go to the edge bins.
pub fn bin_index(lambda: f64, k: usize) -> usize {
    let pos = ((lambda + 1.0) * k as f64 / 2.0).floor();
    if pos <= 0.0 {
        0
    } else {
        (pos as usize).min(k - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub lambda: f64,
    pub bin: usize,
    pub cycle_len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapRegretState {
    bins: Vec<BinStats>,
    prev_bin: usize,
    pending: Option<usize>,
    rng: ChaCha8Rng,
}

impl SwapRegretState {
    pub fn new(k: usize, seed: u64) -> Result<Self> {
        Self::with_rng(k, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn with_rng(k: usize, rng: ChaCha8Rng) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("K", "need at least one bin"));
        }
        Ok(SwapRegretState {
            bins: vec![BinStats::default(); k],
            prev_bin: bin_index(0.0, k),
            pending: None,
            rng,
        })
    }

    pub fn k(&self) -> usize {
        self.bins.len()
    }

    pub fn bins(&self) -> &[BinStats] {
        &self.bins
    }

    pub fn prev_bin(&self) -> usize {
        self.prev_bin
    }

    pub fn bin_optimum(&self, k: usize) -> Result<f64> {
        self.bins
            .get(k)
            .map(BinStats::optimum)
            .ok_or_else(|| Error::invalid("bin", format!("{k} out of range")))
    }

    /// The cycle reached by the fixed-point walk from `start`, in walk order.
    pub fn fixed_point_cycle(&self, start: usize) -> Vec<usize> {
        let k = self.k();
        let mut seen = vec![usize::MAX; k];
        let mut walk = Vec::with_capacity(k + 1);
        let mut v = start.min(k - 1);
        while seen[v] == usize::MAX {
            seen[v] = walk.len();
            walk.push(v);
            v = bin_index(self.bins[v].optimum(), k);
        }
        walk.split_off(seen[v])
    }

    pub fn select_lambda(&mut self) -> Selection {
        let cycle = self.fixed_point_cycle(self.prev_bin);
        let bin = if cycle.len() == 1 {
            cycle[0]
        } else {
            cycle[self.rng.random_range(0..cycle.len())]
        };
        self.prev_bin = bin;
        self.pending = Some(bin);
        Selection {
            lambda: self.bins[bin].optimum(),
            bin,
            cycle_len: cycle.len(),
        }
    }

    /// Adds `(r, s)` to the bin returned by the last [`select_lambda`](Self::select_lambda).
    pub fn observe(&mut self, chosen_bin: usize, r: f64, s: f64) -> Result<()> {
        finite("r", r)?;
        finite("s", s)?;
        match self.pending {
            Some(b) if b == chosen_bin => {
                self.bins[b].push(r, s);
                self.pending = None;
                Ok(())
            }
            Some(b) => Err(Error::ProtocolOrder(format!(
                "observe for bin {chosen_bin} but bin {b} was selected"
            ))),
            None => Err(Error::ProtocolOrder(
                "observe without a preceding select".into(),
            )),
        }
    }
}

/// Unconstrained follow-the-leader on `(r + sλ)²`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFtl {
    stats: BinStats,
}

impl QuadraticFtl {
    pub fn predict(&self) -> f64 {
        if self.stats.sum_ss > 0.0 {
            -self.stats.sum_rs / self.stats.sum_ss
        } else {
            0.0
        }
    }

    pub fn observe(&mut self, r: f64, s: f64) {
        self.stats.push(r, s);
    }
}

/// `Σ (r + sλ)² - inf_λ Σ (r + sλ)²` for a fixed λ sequence with one comparator.
pub fn external_regret(history: &[(f64, f64, f64)]) -> f64 {
    let mut acc = RegretAcc::default();
    for &(lambda, r, s) in history {
        acc.push(lambda, r, s);
    }
    acc.regret()
}

#[derive(Debug, Clone, Copy, Default)]
struct RegretAcc {
    // Σ (r + sλ)² - Σ r²
    excess: f64,
    sum_rs: f64,
    sum_ss: f64,
}

impl RegretAcc {
    fn push(&mut self, lambda: f64, r: f64, s: f64) {
        self.excess += s * lambda * (2.0 * r + s * lambda);
        self.sum_rs += r * s;
        self.sum_ss += s * s;
    }

    fn regret(&self) -> f64 {
        if self.sum_ss > 0.0 {
            self.excess + self.sum_rs * self.sum_rs / self.sum_ss
        } else {
            self.excess
        }
    }
}

/// Swap regret against the best per-bin constant, bins given by `bin_index(λ_t, k)`.
///
/// Each per-bin comparator ranges over all reals.
pub fn discretized_swap_regret(history: &[(f64, f64, f64)], k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let mut accs = vec![RegretAcc::default(); k];
    for &(lambda, r, s) in history {
        accs[bin_index(lambda, k)].push(lambda, r, s);
    }
    accs.iter().map(RegretAcc::regret).sum()
}

/// Cost of moving every comparator to a bin of width `2/K`: `Σ s² (2/K)²`.
pub fn discretization_penalty(history: &[(f64, f64, f64)], k: usize) -> f64 {
    let width = 2.0 / k as f64;
    history.iter().map(|&(_, _, s)| s * s).sum::<f64>() * width * width
}

/// `Σ_t β_t⁴ / Σ_{τ≤t} β_τ²`, skipping leading zero terms.
pub fn normalized_fourth_moment_sum(betas: &[f64]) -> f64 {
    let mut running = 0.0;
    let mut total = 0.0;
    for &b in betas {
        let sq = b * b;
        running += sq;
        if running > 0.0 {
            total += sq * sq / running;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bin_index_edges() {
        assert_eq!(bin_index(-1.0, 8), 0);
        assert_eq!(bin_index(1.0, 8), 7);
        assert_eq!(bin_index(0.0, 8), 4);
        assert_eq!(bin_index(0.0, 7), 3);
        assert_eq!(bin_index(-3.0, 8), 0);
        assert_eq!(bin_index(0.0, 1), 0);
    }

    #[test]
    fn bin_optimum_examples() {
        let mut b = BinStats::default();
        assert_eq!(b.optimum(), 0.0);
        b.push(0.5, -1.0);
        assert_eq!(b.optimum(), 0.5);
        let mut b = BinStats::default();
        b.push(3.0, 1.0);
        assert_eq!(b.optimum(), -1.0);
        let mut b = BinStats::default();
        b.push(-3.0, 1.0);
        assert_eq!(b.optimum(), LAMBDA_MAX);
    }

    #[test]
    fn empty_state_plays_zero() {
        let mut st = SwapRegretState::new(8, 1).unwrap();
        let sel = st.select_lambda();
        assert_eq!(sel.lambda, 0.0);
        assert_eq!(sel.bin, 4);
        assert_eq!(sel.cycle_len, 1);
    }

    #[test]
    fn self_consistent_bin_is_deterministic() {
        for seed in 0..20 {
            let mut st = SwapRegretState::new(4, seed).unwrap();
            // bin 2 is [0, 0.5); optimum 0.25 stays there
            st.select_lambda();
            st.observe(2, -0.25, 1.0).unwrap();
            let sel = st.select_lambda();
            assert_eq!((sel.bin, sel.lambda, sel.cycle_len), (2, 0.25, 1));
        }
    }

    #[test]
    fn two_cycle_is_sampled_evenly() {
        let mut st = SwapRegretState::new(4, 99).unwrap();
        // bin 2 = [0, 0.5) points at -0.75 (bin 0); bin 0 points at 0.25 (bin 2)
        st.bins[2].push(0.75, 1.0);
        st.bins[0].push(-0.25, 1.0);
        assert_eq!(st.fixed_point_cycle(2), vec![2, 0]);
        let mut hits = [0usize; 4];
        for _ in 0..10_000 {
            st.prev_bin = 2;
            hits[st.select_lambda().bin] += 1;
        }
        let freq = hits[0] as f64 / 10_000.0;
        assert!((freq - 0.5).abs() <= 0.02, "{hits:?}");
        assert_eq!(hits[0] + hits[2], 10_000);
    }

    #[test]
    fn walk_drops_the_tail_before_the_cycle() {
        let mut st = SwapRegretState::new(4, 0).unwrap();
        // 3 -> 1 -> 1
        st.bins[3].push(0.25, 1.0);
        st.bins[1].push(0.25, 1.0);
        assert_eq!(st.fixed_point_cycle(3), vec![1]);
    }

    #[test]
    fn observe_enforces_order() {
        let mut st = SwapRegretState::new(4, 0).unwrap();
        assert!(matches!(
            st.observe(2, 0.0, 0.0),
            Err(Error::ProtocolOrder(_))
        ));
        let sel = st.select_lambda();
        assert!(st.observe(sel.bin + 1, 0.0, 0.0).is_err());
        st.observe(sel.bin, 0.0, 0.0).unwrap();
        assert_eq!(st.bins[sel.bin].count, 1);
        assert_eq!(st.bins[sel.bin].sum_ss, 0.0);
        assert!(st.observe(sel.bin, 0.0, 0.0).is_err());
    }

    #[test]
    fn constant_stream_settles_immediately() {
        let mut st = SwapRegretState::new(1, 3).unwrap();
        let mut lambdas = vec![];
        for _ in 0..50 {
            let sel = st.select_lambda();
            lambdas.push(sel.lambda);
            st.observe(sel.bin, 0.5, -1.0).unwrap();
        }
        assert_eq!(lambdas[0], 0.0);
        assert!(lambdas[1..].iter().all(|&l| l == 0.5));
    }

    #[test]
    fn constant_stream_settles_once_its_bin_is_played() {
        let mut st = SwapRegretState::new(8, 3).unwrap();
        let mut played = vec![];
        for _ in 0..200 {
            let sel = st.select_lambda();
            played.push((sel.bin, sel.lambda));
            st.observe(sel.bin, 0.5, -1.0).unwrap();
        }
        // bin 6 holds 0.5; once it has data it is its own fixed point
        let first = played.iter().position(|&(b, _)| b == 6).unwrap();
        assert!(played[first + 1..].iter().all(|&p| p == (6, 0.5)));
    }

    #[test]
    fn zero_curvature_observation_is_inert() {
        let mut st = SwapRegretState::new(2, 0).unwrap();
        let sel = st.select_lambda();
        st.observe(sel.bin, 7.0, 0.0).unwrap();
        assert_eq!(st.bin_optimum(sel.bin).unwrap(), 0.0);
    }

    #[test]
    fn single_round_regret() {
        // λ already optimal for the one point
        assert!(discretized_swap_regret(&[(0.5, 0.5, -1.0)], 8).abs() < 1e-15);
        assert!(discretized_swap_regret(&[(0.0, 0.5, -1.0)], 8) > 0.0);
        assert_eq!(discretized_swap_regret(&[], 8), 0.0);
    }

    #[test]
    fn regret_matches_brute_force() {
        let hist: Vec<(f64, f64, f64)> = (0..40)
            .map(|i| {
                let t = i as f64;
                (
                    (t * 0.37).sin(),
                    (t * 1.3).cos(),
                    0.2 + (t * 0.7).sin().abs(),
                )
            })
            .collect();
        let k = 4;
        let mut brute = 0.0;
        for bin in 0..k {
            let rows: Vec<_> = hist.iter().filter(|h| bin_index(h.0, k) == bin).collect();
            let played: f64 = rows.iter().map(|&&(l, r, s)| (r + s * l).powi(2)).sum();
            let best = (-60_000..=60_000)
                .map(|j| j as f64 * 1e-4)
                .map(|l| {
                    rows.iter()
                        .map(|&&(_, r, s)| (r + s * l).powi(2))
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min);
            brute += played - best;
        }
        let exact = discretized_swap_regret(&hist, k);
        assert!(brute <= exact + 1e-9);
        assert!(exact - brute < 1e-5);
    }

    #[test]
    fn unreachable_optimum_gives_linear_regret() {
        // every observation wants λ = -2; the clipped learner pays forever
        let mut st = SwapRegretState::new(1, 0).unwrap();
        let mut hist = vec![];
        for _ in 0..1000 {
            let sel = st.select_lambda();
            hist.push((sel.lambda, 2.0, 1.0));
            st.observe(sel.bin, 2.0, 1.0).unwrap();
        }
        assert!(discretized_swap_regret(&hist, 1) > 990.0);
    }

    #[test]
    fn ftl_unconstrained_prediction() {
        let mut f = QuadraticFtl::default();
        assert_eq!(f.predict(), 0.0);
        f.observe(3.0, 1.0);
        assert_eq!(f.predict(), -3.0);
    }

    #[test]
    fn fourth_moment_sum_examples() {
        assert_eq!(normalized_fourth_moment_sum(&[0.0, 0.0]), 0.0);
        assert_eq!(normalized_fourth_moment_sum(&[2.0]), 4.0);
        assert_eq!(normalized_fourth_moment_sum(&[1.0, 1.0]), 1.5);
    }

    #[test]
    fn state_round_trips_through_json() {
        let mut st = SwapRegretState::new(5, 8).unwrap();
        let sel = st.select_lambda();
        st.observe(sel.bin, 0.3, -0.4).unwrap();
        let json = serde_json::to_string(&st).unwrap();
        let mut back: SwapRegretState = serde_json::from_str(&json).unwrap();
        assert_eq!(back, st);
        assert_eq!(back.select_lambda(), st.select_lambda());
    }
}
