//! Online SGD predictor for `mu_hat` and `c_hat`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::{Arch, Model};
use crate::bet::outcome_value;
use crate::error::{finite, Error, Result};

pub const EPS_P: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseConfig {
    pub arch: Arch,
    pub eta: f64,
    /// Payout residuals are divided by this before squaring in the c-model loss.
    pub stake_scale: f64,
}

impl Default for BaseConfig {
    fn default() -> Self {
        BaseConfig {
            arch: Arch::default(),
            eta: 0.01,
            stake_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasePrediction {
    pub mu_hat: f64,
    pub c_hat: f64,
    pub raw_mu: f64,
    pub raw_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasePredictor {
    mu_model: Model,
    c_model: Model,
    eta: f64,
    stake_scale: f64,
}

impl BasePredictor {
    pub fn new<R: Rng>(cfg: BaseConfig, dim: usize, rng: &mut R) -> Result<Self> {
        let mu_model = Model::random(cfg.arch, dim, rng)?;
        let c_model = Model::random(cfg.arch, dim, rng)?;
        Self::from_models(mu_model, c_model, cfg.eta, cfg.stake_scale)
    }

    pub fn from_models(
        mu_model: Model,
        c_model: Model,
        eta: f64,
        stake_scale: f64,
    ) -> Result<Self> {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::invalid("eta", "must be finite and non-negative"));
        }
        if !(stake_scale.is_finite() && stake_scale > 0.0) {
            return Err(Error::invalid("stake_scale", "must be positive"));
        }
        if mu_model.dim() != c_model.dim() {
            return Err(Error::DimensionMismatch {
                expected: mu_model.dim(),
                got: c_model.dim(),
            });
        }
        Ok(BasePredictor {
            mu_model,
            c_model,
            eta,
            stake_scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu_model.dim()
    }

    pub fn mu_model(&self) -> &Model {
        &self.mu_model
    }

    pub fn c_model(&self) -> &Model {
        &self.c_model
    }

    pub fn mu_model_mut(&mut self) -> &mut Model {
        &mut self.mu_model
    }

    pub fn c_model_mut(&mut self) -> &mut Model {
        &mut self.c_model
    }

    pub fn predict(&self, x: &[f64]) -> Result<BasePrediction> {
        let raw_mu = self.mu_model.forward(x)?;
        let raw_c = self.c_model.forward(x)?;
        finite("raw mu", raw_mu)?;
        finite("raw c", raw_c)?;
        Ok(BasePrediction {
            mu_hat: raw_mu.clamp(EPS_P, 1.0 - EPS_P),
            c_hat: raw_c.clamp(0.0, 1.0),
            raw_mu,
            raw_c,
        })
    }

    /// `(mu_theta(x) - y)²` and its parameter gradient.
    pub fn mu_loss_grad(&self, x: &[f64], y: bool) -> Result<(f64, Vec<f64>)> {
        let (out, mut g) = self.mu_model.forward_grad(x)?;
        let e = out - outcome_value(y);
        for gi in &mut g {
            *gi *= 2.0 * e;
        }
        Ok((e * e, g))
    }

    /// `((b(y - mu_hat) - |b| c_phi(x)) / stake_scale)²` and its parameter gradient.
    pub fn c_loss_grad(&self, x: &[f64], y: bool, b: f64, mu_hat: f64) -> Result<(f64, Vec<f64>)> {
        let (out, mut g) = self.c_model.forward_grad(x)?;
        let e = (b * (outcome_value(y) - mu_hat) - b.abs() * out) / self.stake_scale;
        let scale = -2.0 * e * b.abs() / self.stake_scale;
        for gi in &mut g {
            *gi *= scale;
        }
        Ok((e * e, g))
    }

    /// One SGD step on both losses.
    pub fn update(&mut self, x: &[f64], y: bool, b: f64, mu_hat: f64) -> Result<()> {
        finite("b", b)?;
        let (_, gm) = self.mu_loss_grad(x, y)?;
        let (_, gc) = self.c_loss_grad(x, y, b, mu_hat)?;
        self.mu_model.descend(self.eta, &gm);
        if b != 0.0 {
            self.c_model.descend(self.eta, &gc);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zero_linear(dim: usize, eta: f64) -> BasePredictor {
        BasePredictor::from_models(
            Model::zeros(Arch::Linear, dim).unwrap(),
            Model::zeros(Arch::Linear, dim).unwrap(),
            eta,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_model_predicts_clamped_floor() {
        let p = zero_linear(2, 0.1).predict(&[0.4, -0.3]).unwrap();
        assert_eq!(p.mu_hat, EPS_P);
        assert_eq!(p.c_hat, 0.0);
    }

    #[test]
    fn clamp_high_output() {
        let mut bp = zero_linear(1, 0.1);
        bp.mu_model_mut().params_mut()[1] = 1.7;
        assert_eq!(bp.predict(&[0.0]).unwrap().mu_hat, 1.0 - 1e-6);
    }

    #[test]
    fn hand_gradient_step() {
        let mut bp = zero_linear(1, 0.1);
        bp.update(&[1.0], true, 0.0, 0.5).unwrap();
        assert_eq!(bp.mu_model().params()[0], 0.2);
    }

    #[test]
    fn zero_stake_leaves_c_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut bp = BasePredictor::new(BaseConfig::default(), 3, &mut rng).unwrap();
        let before = bp.c_model().clone();
        bp.update(&[0.1, 0.2, 0.3], true, 0.0, 0.4).unwrap();
        assert_eq!(bp.c_model(), &before);
    }

    #[test]
    fn constant_target_drives_mu_up() {
        let mut bp = zero_linear(1, 0.05);
        for _ in 0..2000 {
            let p = bp.predict(&[1.0]).unwrap();
            bp.update(&[1.0], true, 0.0, p.mu_hat).unwrap();
        }
        assert_eq!(bp.predict(&[1.0]).unwrap().mu_hat, 1.0 - EPS_P);
    }

    #[test]
    fn rejects_bad_eta_and_scale() {
        let m = Model::zeros(Arch::Linear, 1).unwrap();
        assert!(BasePredictor::from_models(m.clone(), m.clone(), -1.0, 1.0).is_err());
        assert!(BasePredictor::from_models(m.clone(), m, 0.1, 0.0).is_err());
    }
}
