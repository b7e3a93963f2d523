//! Flight-delay ticket market.
//!
//! Every flight a fresh pool of passengers values the trip. The airline sells
//! a fixed number of tickets at the highest price that fills the plane. With
//! the mechanism on, cautious passengers buy delay insurance priced from the
//! airline's forecast, which lets them value the trip at its insured worth
//! instead of assuming the worst.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bet::{forecaster_payout, Forecast};
use crate::error::{finite, Error, Result};
use crate::forecaster::{ExactForecaster, ForecasterConfig};
use crate::rng::{substream, Purpose};
use crate::streams::{Nature, NatureStream, StreamKind};

pub const POOL_SIZE: usize = 1000;
pub const CAPACITY: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PassengerType {
    /// Ignores delays.
    Naive,
    /// Takes the forecast at face value.
    Trustful,
    /// Assumes the worst it cannot insure against.
    Cautious,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Passenger {
    pub kind: PassengerType,
    pub r_alt: f64,
    pub r_trip: f64,
    pub c_delay: f64,
}

impl Passenger {
    pub fn sample<R: Rng>(rng: &mut R, cautious_frac: f64) -> Self {
        let u: f64 = rng.random();
        let kind = if u < cautious_frac {
            PassengerType::Cautious
        } else if u < cautious_frac + (1.0 - cautious_frac) / 2.0 {
            PassengerType::Naive
        } else {
            PassengerType::Trustful
        };
        Passenger {
            kind,
            r_alt: rng.random_range(0.0..200.0),
            r_trip: rng.random_range(0.0..400.0),
            c_delay: 0.2 * rng.random_range(4.0..9.0f64).exp(),
        }
    }
}

pub fn sample_pool<R: Rng>(rng: &mut R, n: usize, cautious_frac: f64) -> Vec<Passenger> {
    (0..n)
        .map(|_| Passenger::sample(rng, cautious_frac))
        .collect()
}

/// Premium `b0` owed on no delay for a delay payout `b1`.
pub fn quote(mu: f64, c: f64, b1: f64) -> Result<f64> {
    finite("mu", mu)?;
    finite("c", c)?;
    finite("b1", b1)?;
    if b1 < 0.0 {
        return Err(Error::invalid("b1", "must be non-negative"));
    }
    let hi = mu + c;
    if hi >= 1.0 {
        return Err(Error::Unquotable(hi));
    }
    Ok(b1 * hi / (1.0 - hi))
}

/// Delay payout that makes a cautious passenger indifferent to the outcome.
pub fn full_indemnity(p: &Passenger, f: &Forecast) -> f64 {
    (1.0 - f.mu - f.c) * p.c_delay
}

/// Largest ticket price the passenger accepts. `insured` means insurance is on offer.
pub fn willingness_to_pay(p: &Passenger, f: &Forecast, insured: bool) -> f64 {
    let net = p.r_trip - p.r_alt;
    match p.kind {
        PassengerType::Naive => net,
        PassengerType::Trustful => net - f.mu * p.c_delay,
        PassengerType::Cautious if insured => net - (f.mu + f.c) * p.c_delay,
        PassengerType::Cautious => net - p.c_delay,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clearing {
    pub price: f64,
    /// Passenger indices in increasing order.
    pub flyers: Vec<usize>,
}

/// Highest price that sells `capacity` tickets among positive valuations.
pub fn clear(wtp: &[f64], capacity: usize) -> Result<Clearing> {
    if wtp.is_empty() {
        return Err(Error::invalid("pool", "no passengers"));
    }
    if capacity == 0 {
        return Err(Error::invalid("capacity", "must be positive"));
    }
    let mut positive: Vec<f64> = wtp.iter().copied().filter(|&w| w > 0.0).collect();
    if positive.is_empty() {
        return Ok(Clearing {
            price: 0.0,
            flyers: vec![],
        });
    }
    positive.sort_by(|a, b| b.total_cmp(a));
    let price = if positive.len() >= capacity {
        positive[capacity - 1]
    } else {
        *positive.last().unwrap()
    };
    let flyers = wtp
        .iter()
        .enumerate()
        .filter(|(_, &w)| w >= price)
        .map(|(i, _)| i)
        .take(capacity)
        .collect();
    Ok(Clearing { price, flyers })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FlightOutcome {
    pub price: f64,
    pub tickets: usize,
    pub revenue: f64,
    /// Realized utilities of all pool passengers, insurance transfers included.
    pub passenger_utility: f64,
    /// Net amount the airline paid out on insurance.
    pub insurance_net: f64,
    pub total_utility: f64,
    /// Combined stake of all insured passengers as one bet on `mu ± c`.
    pub stake: f64,
    pub insured: usize,
}

/// Sells tickets, settles insurance and accounts one flight.
pub fn settle_flight(
    pool: &[Passenger],
    f: &Forecast,
    mechanism_on: bool,
    capacity: usize,
    y: bool,
) -> Result<FlightOutcome> {
    let offer = mechanism_on && f.mu + f.c < 1.0;
    let wtp: Vec<f64> = pool
        .iter()
        .map(|p| willingness_to_pay(p, f, offer))
        .collect();
    let Clearing { price, flyers } = clear(&wtp, capacity)?;
    let mut out = FlightOutcome {
        price,
        tickets: flyers.len(),
        revenue: price * flyers.len() as f64,
        ..Default::default()
    };
    let mut flying = vec![false; pool.len()];
    for &i in &flyers {
        flying[i] = true;
    }
    let delay = if y { 1.0 } else { 0.0 };
    for (p, &flies) in pool.iter().zip(&flying) {
        if !flies {
            out.passenger_utility += p.r_alt;
            continue;
        }
        let mut u = p.r_trip - price - delay * p.c_delay;
        if offer && p.kind == PassengerType::Cautious {
            let b1 = full_indemnity(p, f);
            let transfer = if y { b1 } else { -quote(f.mu, f.c, b1)? };
            u += transfer;
            out.insurance_net += transfer;
            out.stake += p.c_delay;
            out.insured += 1;
        }
        out.passenger_utility += u;
    }
    out.total_utility = out.revenue - out.insurance_net + out.passenger_utility;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketConfig {
    pub flights: u64,
    pub cautious_frac: f64,
    pub pool_size: usize,
    pub capacity: usize,
    pub stream: StreamKind,
    /// `dim`, `horizon` and `seed` are overwritten from the stream and run.
    pub forecaster: ForecasterConfig,
    pub seed: u64,
}

impl MarketConfig {
    pub fn new(flights: u64, cautious_frac: f64, seed: u64) -> Self {
        let stream = default_market_stream();
        let mut forecaster = ForecasterConfig::new(stream.dim(), flights, seed);
        forecaster.base.stake_scale = 1e5;
        MarketConfig {
            flights,
            cautious_frac,
            pool_size: POOL_SIZE,
            capacity: CAPACITY,
            stream,
            forecaster,
            seed,
        }
    }
}

/// Drifting delay probabilities over one-hot route features.
pub fn default_market_stream() -> StreamKind {
    StreamKind::Drift {
        dim: 20,
        features: crate::streams::Features::OneHot,
        scale: 1.0,
        bias: -1.5,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightRow {
    pub flight_idx: u64,
    pub mechanism: bool,
    pub cautious_frac: f64,
    pub price: f64,
    pub tickets: usize,
    /// Cumulative averages per pool passenger per flight.
    pub revenue_avg: f64,
    pub total_utility_avg: f64,
    pub insurance_net_avg: f64,
    pub c_t: f64,
    pub lambda_t: f64,
    pub mu_t: f64,
    pub mu_star_t: f64,
    pub forecaster_payout: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Totals {
    revenue: f64,
    total_utility: f64,
    insurance_net: f64,
}

/// Runs the mechanism-on and mechanism-off markets on the same flights,
/// pools and delays. Rows alternate on, off for each flight.
pub fn simulate_market(cfg: &MarketConfig) -> Result<Vec<FlightRow>> {
    if !(0.0..=1.0).contains(&cfg.cautious_frac) {
        return Err(Error::invalid("cautious_frac", "must lie in [0, 1]"));
    }
    if cfg.capacity > cfg.pool_size {
        return Err(Error::invalid("capacity", "exceeds the pool size"));
    }
    let mut nature = NatureStream::new(cfg.stream.clone(), cfg.flights, cfg.seed)?;
    let mut fcfg = cfg.forecaster.clone();
    fcfg.dim = nature.dim();
    fcfg.horizon = cfg.flights.max(1);
    fcfg.seed = cfg.seed;
    let mut on = ExactForecaster::new(&fcfg)?;
    let mut off = ExactForecaster::new(&fcfg)?;
    let mut passengers: ChaCha8Rng = substream(cfg.seed, Purpose::Passengers);
    let mut totals = [Totals::default(); 2];
    let mut rows = Vec::with_capacity(2 * cfg.flights as usize);
    for idx in 1..=cfg.flights {
        let round = nature.next_round()?;
        let mu_star = round.mu_star.unwrap_or(f64::NAN);
        let pool = sample_pool(&mut passengers, cfg.pool_size, cfg.cautious_frac);
        for (slot, (fc, mechanism)) in [(&mut on, true), (&mut off, false)].into_iter().enumerate()
        {
            let f = fc.predict(&round.x)?;
            let out = settle_flight(&pool, &f, mechanism, cfg.capacity, round.y)?;
            let rec = fc.observe(round.y, out.stake)?;
            debug_assert!(
                (rec.payout - forecaster_payout(out.stake, &f, round.y)?).abs()
                    <= 1e-9 * (1.0 + out.stake)
            );
            let tot = &mut totals[slot];
            tot.revenue += out.revenue;
            tot.total_utility += out.total_utility;
            tot.insurance_net += out.insurance_net;
            let denom = idx as f64 * cfg.pool_size as f64;
            rows.push(FlightRow {
                flight_idx: idx,
                mechanism,
                cautious_frac: cfg.cautious_frac,
                price: out.price,
                tickets: out.tickets,
                revenue_avg: tot.revenue / denom,
                total_utility_avg: tot.total_utility / denom,
                insurance_net_avg: tot.insurance_net / denom,
                c_t: f.c,
                lambda_t: rec.lambda,
                mu_t: f.mu,
                mu_star_t: mu_star,
                forecaster_payout: rec.payout,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn person(kind: PassengerType, r_alt: f64, r_trip: f64, c_delay: f64) -> Passenger {
        Passenger {
            kind,
            r_alt,
            r_trip,
            c_delay,
        }
    }

    #[test]
    fn quote_examples() {
        assert!((quote(0.2, 0.0, 80.0).unwrap() - 20.0).abs() < 1e-12);
        assert_eq!(quote(0.3, 0.1, 0.0).unwrap(), 0.0);
        assert!((quote(0.2, -0.05, 100.0).unwrap() - 100.0 * 0.15 / 0.85).abs() < 1e-12);
        assert_eq!(quote(0.7, 0.3, 10.0), Err(Error::Unquotable(1.0)));
    }

    #[test]
    fn quote_is_fair_at_upper_edge() {
        let (mu, c, b1) = (0.3, 0.05, 70.0);
        let b0 = quote(mu, c, b1).unwrap();
        assert!(((mu + c) * b1 - (1.0 - mu - c) * b0).abs() < 1e-12);
    }

    #[test]
    fn wtp_examples() {
        let f = Forecast::new(0.2, 0.05).unwrap();
        let naive = person(PassengerType::Naive, 100.0, 300.0, 500.0);
        assert_eq!(willingness_to_pay(&naive, &f, true), 200.0);
        let cautious = person(PassengerType::Cautious, 100.0, 300.0, 500.0);
        assert_eq!(willingness_to_pay(&cautious, &f, true), 75.0);
        assert_eq!(willingness_to_pay(&cautious, &f, false), -300.0);
        let trustful = person(PassengerType::Trustful, 100.0, 300.0, 500.0);
        assert_eq!(willingness_to_pay(&trustful, &f, false), 100.0);
    }

    #[test]
    fn clearing_rules() {
        let wtp = [5.0, 3.0, 9.0, -1.0, 3.0];
        let c = clear(&wtp, 2).unwrap();
        assert_eq!((c.price, c.flyers.clone()), (5.0, vec![0, 2]));
        // tie at the clearing price is cut by index
        let c = clear(&wtp, 3).unwrap();
        assert_eq!((c.price, c.flyers.clone()), (3.0, vec![0, 1, 2]));
        // under demand: everybody positive flies at the lowest positive value
        let c = clear(&wtp, 10).unwrap();
        assert_eq!((c.price, c.flyers.len()), (3.0, 4));
        let c = clear(&[-1.0, 0.0], 1).unwrap();
        assert_eq!((c.price, c.flyers.len()), (0.0, 0));
        assert!(clear(&[], 1).is_err());
    }

    #[test]
    fn insured_utility_ignores_outcome() {
        let f = Forecast::new(0.25, 0.05).unwrap();
        let pool = vec![person(PassengerType::Cautious, 10.0, 390.0, 300.0)];
        let a = settle_flight(&pool, &f, true, 1, false).unwrap();
        let b = settle_flight(&pool, &f, true, 1, true).unwrap();
        assert_eq!(a.tickets, 1);
        assert!((a.passenger_utility - b.passenger_utility).abs() < 1e-9);
        assert_eq!(a.stake, 300.0);
    }

    #[test]
    fn insurance_net_is_forecaster_payout() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pool = sample_pool(&mut rng, 1000, 0.5);
        let f = Forecast::new(0.3, -0.02).unwrap();
        for y in [false, true] {
            let out = settle_flight(&pool, &f, true, 300, y).unwrap();
            let pay = forecaster_payout(out.stake, &f, y).unwrap();
            assert!((out.insurance_net - pay).abs() < 1e-9 * out.stake.max(1.0));
            let direct = out.revenue - out.insurance_net + out.passenger_utility;
            assert!((out.total_utility - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn all_naive_pool_ignores_mechanism() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut pool = sample_pool(&mut rng, 1000, 0.0);
        for p in &mut pool {
            p.kind = PassengerType::Naive;
        }
        let f = Forecast::new(0.4, 0.1).unwrap();
        let on = settle_flight(&pool, &f, true, 300, true).unwrap();
        let off = settle_flight(&pool, &f, false, 300, true).unwrap();
        assert_eq!(on, off);
    }

    #[test]
    fn cautious_pool_without_mechanism_stays_home() {
        let pool: Vec<_> = (0..1000)
            .map(|i| person(PassengerType::Cautious, 50.0, 300.0, 1000.0 + i as f64))
            .collect();
        let f = Forecast::new(0.1, 0.0).unwrap();
        let out = settle_flight(&pool, &f, false, 300, false).unwrap();
        assert_eq!((out.tickets, out.revenue), (0, 0.0));
    }

    #[test]
    fn unquotable_forecast_disables_insurance() {
        let pool = vec![person(PassengerType::Cautious, 0.0, 400.0, 100.0)];
        let f = Forecast::new(0.9, 0.2).unwrap();
        let out = settle_flight(&pool, &f, true, 1, true).unwrap();
        assert_eq!(out.insured, 0);
        assert_eq!(out.price, 300.0);
    }

    #[test]
    fn pool_ranges() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pool = sample_pool(&mut rng, 5000, 0.5);
        let lo = 0.2 * 4.0f64.exp();
        let hi = 0.2 * 9.0f64.exp();
        for p in &pool {
            assert!((0.0..200.0).contains(&p.r_alt));
            assert!((0.0..400.0).contains(&p.r_trip));
            assert!(p.c_delay >= lo && p.c_delay <= hi);
        }
        let cautious = pool
            .iter()
            .filter(|p| p.kind == PassengerType::Cautious)
            .count();
        assert!((cautious as f64 / 5000.0 - 0.5).abs() < 0.03);
    }

    #[test]
    fn zero_cautious_series_match() {
        let cfg = MarketConfig::new(30, 0.0, 4);
        let rows = simulate_market(&cfg).unwrap();
        for pair in rows.chunks(2) {
            assert_eq!(pair[0].revenue_avg, pair[1].revenue_avg);
            assert_eq!(pair[0].total_utility_avg, pair[1].total_utility_avg);
        }
    }
}
