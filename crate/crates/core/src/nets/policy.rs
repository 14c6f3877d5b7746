use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand_distr::{Distribution, StandardNormal};

use super::{ForwardCache, Mlp, MlpGrads, MlpSpec};
use crate::error::{Error, Result};
use crate::rng::Rng;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Diagonal Gaussian around the tanh-squashed network mean.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionDistribution {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// `Σ_j log N(a_j; μ_j, σ_j)` with `σ = exp(log_std)`.
pub fn gaussian_log_prob(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(action)
        .map(|((&m, &ls), &a)| {
            let z = (a - m) * (-ls).exp();
            -0.5 * z * z - ls - LN_SQRT_2PI
        })
        .sum()
}

/// Draws an action; the log-probability is of the unclipped sample.
pub fn sample(dist: &ActionDistribution, rng: &mut Rng) -> (Vec<f64>, f64) {
    let action: Vec<f64> = dist
        .mean
        .iter()
        .zip(&dist.std)
        .map(|(&m, &s)| {
            let eps: f64 = StandardNormal.sample(rng);
            m + s * eps
        })
        .collect();
    let log_std: Vec<f64> = dist.std.iter().map(|s| s.ln()).collect();
    let lp = gaussian_log_prob(&dist.mean, &log_std, &action);
    (action, lp)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    pub net: Mlp,
    /// State-independent, learned.
    pub log_std: Array1<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyGrads {
    pub net: MlpGrads,
    pub log_std: Array1<f64>,
}

impl PolicyGrads {
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut s = self.net.slices();
        s.push(self.log_std.as_slice().expect("contiguous"));
        s
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut s = self.net.slices_mut();
        s.push(self.log_std.as_slice_mut().expect("contiguous"));
        s
    }
}

/// Forward state kept for a log-probability gradient.
pub struct LogProbCache {
    net: ForwardCache,
}

impl LogProbCache {
    pub fn means(&self) -> &Array2<f64> {
        self.net.output()
    }
}

impl Policy {
    pub const INITIAL_LOG_STD: f64 = -std::f64::consts::LN_2;

    pub fn init(spec: &MlpSpec, seed: u64) -> Result<Self> {
        let net = Mlp::init(spec, seed)?;
        let log_std = Array1::from_elem(spec.output_dim(), Self::INITIAL_LOG_STD);
        Ok(Policy { net, log_std })
    }

    pub fn act_dim(&self) -> usize {
        self.net.output_dim()
    }

    pub fn obs_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn std(&self) -> Vec<f64> {
        self.log_std.iter().map(|l| l.exp()).collect()
    }

    pub fn distribution(&self, obs: &[f64]) -> Result<ActionDistribution> {
        Ok(ActionDistribution {
            mean: self.net.forward_one(obs)?,
            std: self.std(),
        })
    }

    pub fn means(&self, obs: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.net.forward(obs)
    }

    /// Log-probabilities of `actions` (one row per sample).
    pub fn log_probs(
        &self,
        obs: ArrayView2<f64>,
        actions: ArrayView2<f64>,
    ) -> Result<(Array1<f64>, LogProbCache)> {
        if actions.ncols() != self.act_dim() || actions.nrows() != obs.nrows() {
            return Err(Error::Shape {
                what: "action batch",
                expected: self.act_dim(),
                got: actions.ncols(),
            });
        }
        let cache = self.net.forward_cached(obs)?;
        let ls = self.log_std.as_slice().expect("contiguous");
        let lp = cache
            .output()
            .axis_iter(Axis(0))
            .zip(actions.axis_iter(Axis(0)))
            .map(|(m, a)| {
                gaussian_log_prob(
                    m.as_slice().expect("row"),
                    ls,
                    a.as_slice().expect("row"),
                )
            })
            .collect();
        Ok((lp, LogProbCache { net: cache }))
    }

    /// Gradient of `Σ_i coeff_i · log π(a_i | o_i)`.
    pub fn log_prob_grad(
        &self,
        cache: &LogProbCache,
        actions: ArrayView2<f64>,
        coeffs: &[f64],
    ) -> PolicyGrads {
        let means = cache.means();
        let inv_var: Vec<f64> = self.log_std.iter().map(|l| (-2.0 * l).exp()).collect();
        let mut d_mean = Array2::zeros(means.raw_dim());
        let mut d_log_std = Array1::zeros(self.act_dim());
        for (i, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for j in 0..self.act_dim() {
                let diff = actions[[i, j]] - means[[i, j]];
                d_mean[[i, j]] = c * diff * inv_var[j];
                d_log_std[j] += c * (diff * diff * inv_var[j] - 1.0);
            }
        }
        let (net, _) = self.net.backward(&cache.net, d_mean);
        PolicyGrads {
            net,
            log_std: d_log_std,
        }
    }

    /// Shifts the output bias of action `dim` so a zero pre-activation maps
    /// to `mean` through the tanh head.
    pub fn set_output_mean(&mut self, dim: usize, mean: f64) {
        let last = self.net.layers.last_mut().expect("at least one layer");
        last.b[dim] = mean.clamp(-0.999, 0.999).atanh();
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut p = self.net.params_mut();
        p.push(self.log_std.as_slice_mut().expect("contiguous"));
        p
    }

    pub fn is_finite(&self) -> bool {
        self.net.is_finite() && self.log_std.iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValueNet {
    pub net: Mlp,
}

impl ValueNet {
    pub fn init(spec: &MlpSpec, seed: u64) -> Result<Self> {
        if spec.output_dim() != 1 {
            return Err(Error::config("a value network has a scalar output"));
        }
        Ok(ValueNet {
            net: Mlp::init(spec, seed)?,
        })
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.net.forward_one(obs)?[0])
    }

    pub fn values(&self, obs: ArrayView2<f64>) -> Result<Array1<f64>> {
        Ok(self.net.forward(obs)?.column(0).to_owned())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::Activation;
    use crate::rng;
    use rand::Rng as _;

    #[test]
    fn log_prob_at_mode() {
        let std = [0.5, 2.0, 0.1];
        let ls: Vec<f64> = std.iter().map(|s: &f64| s.ln()).collect();
        let mean = [0.1, -0.3, 0.7];
        let lp = gaussian_log_prob(&mean, &ls, &mean);
        let expected: f64 = std
            .iter()
            .map(|s| -(s * (2.0 * std::f64::consts::PI).sqrt()).ln())
            .sum();
        assert!((lp - expected).abs() < 1e-12);
    }

    #[test]
    fn tiny_std_samples_the_mean() {
        let d = ActionDistribution {
            mean: vec![0.2, -0.4],
            std: vec![1e-8, 1e-8],
        };
        let (a, _) = sample(&d, &mut rng::seeded(0));
        assert!((a[0] - 0.2).abs() < 1e-6 && (a[1] + 0.4).abs() < 1e-6);
    }

    #[test]
    fn monte_carlo_mean() {
        let d = ActionDistribution {
            mean: vec![0.3],
            std: vec![0.5],
        };
        let mut rng = rng::seeded(42);
        let n = 1_000_000;
        let mean: f64 = (0..n).map(|_| sample(&d, &mut rng).0[0]).sum::<f64>() / n as f64;
        assert!((mean - 0.3).abs() < 3.0 * 0.5 / 1000.0, "{mean}");
    }

    #[test]
    fn log_prob_gradient_matches_finite_differences() {
        let spec = MlpSpec::new(
            vec![3, 8, 8, 2],
            vec![Activation::Softsign, Activation::Relu, Activation::Tanh],
        )
        .unwrap();
        let mut p = Policy::init(&spec, 5).unwrap();
        p.log_std = Array1::from(vec![-0.4, 0.2]);
        let mut r = rng::seeded(1);
        let obs = Array2::from_shape_simple_fn((4, 3), || r.random_range(-1.0..1.0));
        let act = Array2::from_shape_simple_fn((4, 2), || r.random_range(-1.0..1.0));
        let coeffs = [0.5, -1.0, 2.0, 0.3];
        let objective = |p: &Policy| {
            let (lp, _) = p.log_probs(obs.view(), act.view()).unwrap();
            lp.iter().zip(&coeffs).map(|(l, c)| l * c).sum::<f64>()
        };
        let (_, cache) = p.log_probs(obs.view(), act.view()).unwrap();
        let g = p.log_prob_grad(&cache, act.view(), &coeffs);
        for j in 0..2 {
            let mut plus = p.clone();
            let mut minus = p.clone();
            plus.log_std[j] += 1e-6;
            minus.log_std[j] -= 1e-6;
            let num = (objective(&plus) - objective(&minus)) / 2e-6;
            assert!((num - g.log_std[j]).abs() < 1e-6 * num.abs().max(1.0));
        }
        for (li, (i, k)) in [(0usize, (1usize, 2usize)), (2, (3, 1))] {
            let mut plus = p.clone();
            let mut minus = p.clone();
            plus.net.layers[li].w[[i, k]] += 1e-6;
            minus.net.layers[li].w[[i, k]] -= 1e-6;
            let num = (objective(&plus) - objective(&minus)) / 2e-6;
            let ana = g.net.layers[li].w[[i, k]];
            assert!((num - ana).abs() < 1e-4 * num.abs().max(1e-3), "{num} {ana}");
        }
    }
}
