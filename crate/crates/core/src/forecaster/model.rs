//! Small differentiable regressors for the base predictor.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LEAKY_SLOPE: f64 = 0.01;
pub const INIT_SCALE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Arch {
    Linear,
    /// One hidden layer of `hidden` leaky-ReLU units.
    Mlp {
        hidden: usize,
    },
}

impl Default for Arch {
    fn default() -> Self {
        Arch::Mlp { hidden: 32 }
    }
}

impl Arch {
    pub fn num_params(&self, dim: usize) -> usize {
        match *self {
            Arch::Linear => dim + 1,
            Arch::Mlp { hidden } => hidden * dim + 2 * hidden + 1,
        }
    }
}

fn leaky(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        LEAKY_SLOPE * v
    }
}

fn leaky_slope(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

/// Scalar-output model `R^d -> R`.
///
/// Parameter layout: linear `[w; bias]`; MLP `[W1 (row-major H x d); b1; w2; b2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    arch: Arch,
    dim: usize,
    params: Vec<f64>,
}

impl Model {
    pub fn zeros(arch: Arch, dim: usize) -> Result<Self> {
        if let Arch::Mlp { hidden: 0 } = arch {
            return Err(Error::invalid("hidden", "need at least one unit"));
        }
        Ok(Model {
            arch,
            dim,
            params: vec![0.0; arch.num_params(dim)],
        })
    }

    /// Parameters uniform in `[-INIT_SCALE, INIT_SCALE]`.
    pub fn random<R: Rng>(arch: Arch, dim: usize, rng: &mut R) -> Result<Self> {
        let mut m = Model::zeros(arch, dim)?;
        for p in &mut m.params {
            *p = rng.random_range(-INIT_SCALE..=INIT_SCALE);
        }
        Ok(m)
    }

    pub fn arch(&self) -> Arch {
        self.arch
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        let d = self.dim;
        Ok(match self.arch {
            Arch::Linear => dot(&self.params[..d], x) + self.params[d],
            Arch::Mlp { hidden } => {
                let (w1, rest) = self.params.split_at(hidden * d);
                let (b1, rest) = rest.split_at(hidden);
                let (w2, b2) = rest.split_at(hidden);
                let mut out = b2[0];
                for j in 0..hidden {
                    out += w2[j] * leaky(dot(&w1[j * d..(j + 1) * d], x) + b1[j]);
                }
                out
            }
        })
    }

    /// Output and its gradient with respect to the parameters.
    pub fn forward_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check(x)?;
        let d = self.dim;
        let mut g = vec![0.0; self.params.len()];
        let out = match self.arch {
            Arch::Linear => {
                g[..d].copy_from_slice(x);
                g[d] = 1.0;
                dot(&self.params[..d], x) + self.params[d]
            }
            Arch::Mlp { hidden } => {
                let (w1, rest) = self.params.split_at(hidden * d);
                let (b1, rest) = rest.split_at(hidden);
                let (w2, b2) = rest.split_at(hidden);
                let (gw1, grest) = g.split_at_mut(hidden * d);
                let (gb1, grest) = grest.split_at_mut(hidden);
                let (gw2, gb2) = grest.split_at_mut(hidden);
                gb2[0] = 1.0;
                let mut out = b2[0];
                for j in 0..hidden {
                    let pre = dot(&w1[j * d..(j + 1) * d], x) + b1[j];
                    let act = leaky(pre);
                    out += w2[j] * act;
                    gw2[j] = act;
                    let back = w2[j] * leaky_slope(pre);
                    gb1[j] = back;
                    for (gi, xi) in gw1[j * d..(j + 1) * d].iter_mut().zip(x) {
                        *gi = back * xi;
                    }
                }
                out
            }
        };
        Ok((out, g))
    }

    /// `params -= step * grad`.
    pub fn descend(&mut self, step: f64, grad: &[f64]) {
        for (p, g) in self.params.iter_mut().zip(grad) {
            *p -= step * g;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn param_counts() {
        assert_eq!(Arch::Linear.num_params(3), 4);
        assert_eq!(Arch::Mlp { hidden: 2 }.num_params(3), 6 + 2 + 2 + 1);
    }

    #[test]
    fn zero_hidden_rejected() {
        assert!(Model::zeros(Arch::Mlp { hidden: 0 }, 2).is_err());
    }

    #[test]
    fn linear_forward_by_hand() {
        let mut m = Model::zeros(Arch::Linear, 2).unwrap();
        m.params_mut().copy_from_slice(&[1.0, -2.0, 0.5]);
        assert_eq!(m.forward(&[3.0, 1.0]).unwrap(), 1.5);
        assert!(m.forward(&[1.0]).is_err());
    }

    #[test]
    fn mlp_forward_by_hand() {
        let mut m = Model::zeros(Arch::Mlp { hidden: 2 }, 1).unwrap();
        // W1 = [1, -1], b1 = [0, 0], w2 = [2, 3], b2 = 0.5
        m.params_mut()
            .copy_from_slice(&[1.0, -1.0, 0.0, 0.0, 2.0, 3.0, 0.5]);
        // x = 2: hidden pre = [2, -2] -> act [2, -0.02]
        let out = m.forward(&[2.0]).unwrap();
        assert!((out - (0.5 + 4.0 - 0.06)).abs() < 1e-15);
    }

    #[test]
    fn init_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = Model::random(Arch::default(), 5, &mut rng).unwrap();
        assert!(m.params().iter().all(|p| p.abs() <= INIT_SCALE));
        assert!(m.params().iter().any(|p| *p != 0.0));
    }

    #[test]
    fn forward_grad_agrees_with_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = Model::random(Arch::Mlp { hidden: 4 }, 3, &mut rng).unwrap();
        let x = [0.3, -1.2, 0.8];
        assert_eq!(m.forward_grad(&x).unwrap().0, m.forward(&x).unwrap());
    }
}
