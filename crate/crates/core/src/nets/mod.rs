//! Feed-forward actor/critic networks with hand-written reverse-mode gradients.

mod checkpoint;
mod normalizer;
mod policy;

pub use checkpoint::{Agent, CHECKPOINT_HEADER};
pub use normalizer::RunningNorm;
pub use policy::{gaussian_log_prob, sample, ActionDistribution, Policy, PolicyGrads, ValueNet};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::{self, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Softsign,
    Tanh,
    Linear,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Softsign => "softsign",
            Activation::Tanh => "tanh",
            Activation::Linear => "linear",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "relu" => Activation::Relu,
            "softsign" => Activation::Softsign,
            "tanh" => Activation::Tanh,
            "linear" => Activation::Linear,
            _ => return None,
        })
    }

    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Softsign => z / (1.0 + z.abs()),
            Activation::Tanh => z.tanh(),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the activation output `y`.
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Softsign => {
                let s = 1.0 - y.abs();
                s * s
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Linear => 1.0,
        }
    }
}

/// Layer widths `[input, hidden.., output]` and one activation per layer
/// (the last one is the output transform).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MlpSpec {
    pub widths: Vec<usize>,
    pub activations: Vec<Activation>,
}

impl MlpSpec {
    pub fn new(widths: Vec<usize>, activations: Vec<Activation>) -> Result<Self> {
        let spec = MlpSpec {
            widths,
            activations,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn uniform(input: usize, hidden: &[usize], output: usize, acts: Vec<Activation>) -> Self {
        let mut widths = vec![input];
        widths.extend_from_slice(hidden);
        widths.push(output);
        MlpSpec {
            widths,
            activations: acts,
        }
    }

    /// Three ReLU hidden layers of 256, tanh head.
    pub fn simple_actor(obs_dim: usize, act_dim: usize) -> Self {
        use Activation::*;
        Self::uniform(obs_dim, &[256; 3], act_dim, vec![Relu, Relu, Relu, Tanh])
    }

    pub fn simple_critic(obs_dim: usize) -> Self {
        use Activation::*;
        Self::uniform(obs_dim, &[256; 3], 1, vec![Relu, Relu, Relu, Linear])
    }

    /// Five hidden layers of 256: softsign ×3, ReLU ×2, tanh head.
    pub fn full_actor(obs_dim: usize, act_dim: usize) -> Self {
        use Activation::*;
        Self::uniform(
            obs_dim,
            &[256; 5],
            act_dim,
            vec![Softsign, Softsign, Softsign, Relu, Relu, Tanh],
        )
    }

    pub fn full_critic(obs_dim: usize) -> Self {
        use Activation::*;
        Self::uniform(obs_dim, &[256; 5], 1, vec![Relu, Relu, Relu, Relu, Relu, Linear])
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().expect("validated")
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 3 {
            return Err(Error::config("an MLP needs at least one hidden layer"));
        }
        if self.widths.contains(&0) {
            return Err(Error::config("layer widths must be positive"));
        }
        if self.activations.len() != self.widths.len() - 1 {
            return Err(Error::config("one activation per layer is required"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    /// `in × out`, so a batch `X` maps to `X·W + b`.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub spec: MlpSpec,
    pub layers: Vec<Dense>,
}

/// Post-activation outputs of every layer, input first.
pub struct ForwardCache {
    outputs: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.outputs.last().expect("non-empty cache")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<Dense>,
}

impl MlpGrads {
    pub fn zeros_like(net: &Mlp) -> Self {
        MlpGrads {
            layers: net
                .layers
                .iter()
                .map(|l| Dense {
                    w: Array2::zeros(l.w.raw_dim()),
                    b: Array1::zeros(l.b.raw_dim()),
                })
                .collect(),
        }
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &self.layers {
            out.push(l.w.as_slice().expect("standard layout"));
            out.push(l.b.as_slice().expect("standard layout"));
        }
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &mut self.layers {
            out.push(l.w.as_slice_mut().expect("standard layout"));
            out.push(l.b.as_slice_mut().expect("standard layout"));
        }
        out
    }
}

impl Mlp {
    /// Fan-in scaled uniform initialisation `U(-1/√fan_in, 1/√fan_in)`.
    pub fn init(spec: &MlpSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = rng::seeded(seed);
        Ok(Self::init_with(spec, &mut rng))
    }

    pub fn init_with(spec: &MlpSpec, rng: &mut Rng) -> Self {
        let layers = spec
            .widths
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                let w = Array2::from_shape_simple_fn((fan_in, fan_out), || {
                    rng.random_range(-bound..bound)
                });
                let b = Array1::from_shape_simple_fn(fan_out, || rng.random_range(-bound..bound));
                Dense { w, b }
            })
            .collect();
        Mlp {
            spec: spec.clone(),
            layers,
        }
    }

    pub fn zeros(spec: &MlpSpec) -> Self {
        let layers = spec
            .widths
            .windows(2)
            .map(|w| Dense {
                w: Array2::zeros((w[0], w[1])),
                b: Array1::zeros(w[1]),
            })
            .collect();
        Mlp {
            spec: spec.clone(),
            layers,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Shape {
                what: "network input",
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        Ok(())
    }

    fn layer_forward(&self, i: usize, x: &ArrayView2<f64>) -> Array2<f64> {
        let layer = &self.layers[i];
        let act = self.spec.activations[i];
        let mut z = x.dot(&layer.w);
        z += &layer.b;
        if act != Activation::Linear {
            z.mapv_inplace(|v| act.apply(v));
        }
        z
    }

    /// Batched forward pass; rows are samples.
    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(&x)?;
        let mut h = self.layer_forward(0, &x);
        for i in 1..self.layers.len() {
            h = self.layer_forward(i, &h.view());
        }
        Ok(h)
    }

    pub fn forward_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row view");
        Ok(self.forward(view)?.into_raw_vec_and_offset().0)
    }

    pub fn forward_cached(&self, x: ArrayView2<f64>) -> Result<ForwardCache> {
        self.check_input(&x)?;
        let mut outputs = Vec::with_capacity(self.layers.len() + 1);
        outputs.push(x.to_owned());
        for i in 0..self.layers.len() {
            let next = self.layer_forward(i, &outputs[i].view());
            outputs.push(next);
        }
        Ok(ForwardCache { outputs })
    }

    /// Reverse pass from `d_out = ∂L/∂output` (post output activation).
    /// Returns parameter gradients and `∂L/∂input`.
    pub fn backward(&self, cache: &ForwardCache, d_out: Array2<f64>) -> (MlpGrads, Array2<f64>) {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = d_out;
        for i in (0..self.layers.len()).rev() {
            let act = self.spec.activations[i];
            let y = &cache.outputs[i + 1];
            if act != Activation::Linear {
                ndarray::Zip::from(&mut delta)
                    .and(y)
                    .for_each(|d, &yv| *d *= act.derivative_from_output(yv));
            }
            let x = &cache.outputs[i];
            let gw = x.t().dot(&delta).as_standard_layout().into_owned();
            let gb = delta.sum_axis(Axis(0));
            let next = delta.dot(&self.layers[i].w.t());
            grads.push(Dense { w: gw, b: gb });
            delta = next;
        }
        grads.reverse();
        (MlpGrads { layers: grads }, delta)
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &mut self.layers {
            out.push(l.w.as_slice_mut().expect("standard layout"));
            out.push(l.b.as_slice_mut().expect("standard layout"));
        }
        out
    }

    pub fn params(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &self.layers {
            out.push(l.w.as_slice().expect("standard layout"));
            out.push(l.b.as_slice().expect("standard layout"));
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn random_input(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = rng::seeded(seed);
        Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-2.0..2.0))
    }

    #[test]
    fn init_is_deterministic() {
        let spec = MlpSpec::simple_actor(7, 2);
        assert_eq!(Mlp::init(&spec, 3).unwrap(), Mlp::init(&spec, 3).unwrap());
        assert_ne!(Mlp::init(&spec, 3).unwrap(), Mlp::init(&spec, 4).unwrap());
    }

    #[test]
    fn paper_architectures() {
        let a = MlpSpec::simple_actor(7, 2);
        assert_eq!(a.widths, vec![7, 256, 256, 256, 2]);
        assert_eq!(a.activations.last(), Some(&Activation::Tanh));
        let f = MlpSpec::full_actor(51, 15);
        assert_eq!(f.widths, vec![51, 256, 256, 256, 256, 256, 15]);
        assert_eq!(
            &f.activations[..5],
            &[
                Activation::Softsign,
                Activation::Softsign,
                Activation::Softsign,
                Activation::Relu,
                Activation::Relu
            ]
        );
        assert!(MlpSpec::full_critic(51).activations[..5]
            .iter()
            .all(|&a| a == Activation::Relu));
        assert!(MlpSpec::new(vec![3, 2], vec![Activation::Linear]).is_err());
        assert!(MlpSpec::new(vec![3, 0, 2], vec![Activation::Relu, Activation::Linear]).is_err());
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = Mlp::zeros(&MlpSpec::simple_actor(5, 2));
        let y = net.forward(random_input(4, 5, 1).view()).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
        let critic = Mlp::zeros(&MlpSpec::simple_critic(5));
        assert_eq!(critic.forward_one(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn tanh_head_is_bounded() {
        let mut rng = rng::seeded(8);
        for k in 0..10 {
            let net = Mlp::init_with(&MlpSpec::full_actor(6, 3), &mut rng);
            let x = random_input(1000, 6, k) * 50.0;
            let y = net.forward(x.view()).unwrap();
            assert!(y.iter().all(|v| v.abs() <= 1.0));
        }
    }

    #[test]
    fn dimension_mismatch_is_a_shape_error() {
        let net = Mlp::zeros(&MlpSpec::simple_critic(5));
        assert!(matches!(
            net.forward(random_input(2, 4, 0).view()),
            Err(Error::Shape { expected: 5, got: 4, .. })
        ));
    }

    #[test]
    fn softsign_is_bounded() {
        for i in -1000..=1000 {
            let z = i as f64 * 0.37;
            let y = Activation::Softsign.apply(z);
            assert!(y > -1.0 && y < 1.0);
            assert!((y - z / (1.0 + z.abs())).abs() < 1e-15);
        }
    }

    /// Loss = Σ c ⊙ f(X); gradient checked by central differences.
    fn check_gradients(spec: &MlpSpec, seed: u64, probes: usize) {
        let net = Mlp::init(spec, seed).unwrap();
        let x = random_input(6, spec.input_dim(), seed + 1);
        let c = random_input(6, spec.output_dim(), seed + 2);
        let loss = |n: &Mlp| (n.forward(x.view()).unwrap() * &c).sum();
        let cache = net.forward_cached(x.view()).unwrap();
        let (grads, _) = net.backward(&cache, c.clone());

        let mut rng = rng::seeded(seed + 3);
        let h = 1e-6;
        for _ in 0..probes {
            let li = rng.random_range(0..net.layers.len());
            let analytic;
            let mut plus = net.clone();
            let mut minus = net.clone();
            if rng.random_bool(0.5) {
                let (r, col) = net.layers[li].w.dim();
                let (i, j) = (rng.random_range(0..r), rng.random_range(0..col));
                plus.layers[li].w[[i, j]] += h;
                minus.layers[li].w[[i, j]] -= h;
                analytic = grads.layers[li].w[[i, j]];
            } else {
                let j = rng.random_range(0..net.layers[li].b.len());
                plus.layers[li].b[j] += h;
                minus.layers[li].b[j] -= h;
                analytic = grads.layers[li].b[j];
            }
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
            assert!(rel < 1e-4, "layer {li}: analytic {analytic} numeric {numeric}");
        }
    }

    #[test]
    fn gradients_match_finite_differences_on_every_shape() {
        use Activation::*;
        check_gradients(&MlpSpec::new(vec![4, 8, 3], vec![Tanh, Linear]).unwrap(), 10, 8);
        check_gradients(&MlpSpec::simple_actor(7, 2), 11, 8);
        check_gradients(&MlpSpec::simple_critic(25), 12, 8);
        check_gradients(&MlpSpec::full_actor(20, 15), 13, 8);
        check_gradients(&MlpSpec::full_critic(20), 14, 8);
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let spec = MlpSpec::new(vec![3, 16, 16, 2], vec![Activation::Softsign, Activation::Relu, Activation::Tanh]).unwrap();
        let net = Mlp::init(&spec, 4).unwrap();
        let x = random_input(1, 3, 9);
        let cache = net.forward_cached(x.view()).unwrap();
        let (_, dx) = net.backward(&cache, Array2::ones((1, 2)));
        for j in 0..3 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[[0, j]] += 1e-6;
            xm[[0, j]] -= 1e-6;
            let f = |a: &Array2<f64>| net.forward(a.view()).unwrap().sum();
            let num = (f(&xp) - f(&xm)) / 2e-6;
            assert!((num - dx[[0, j]]).abs() < 1e-6 * num.abs().max(1.0));
        }
    }

    #[test]
    fn gradients_are_linear_in_the_loss() {
        let spec = MlpSpec::new(vec![4, 8, 8, 2], vec![Activation::Relu, Activation::Softsign, Activation::Linear]).unwrap();
        let net = Mlp::init(&spec, 2).unwrap();
        let x = random_input(5, 4, 3);
        let c1 = random_input(5, 2, 4);
        let c2 = random_input(5, 2, 5);
        let (a, b) = (0.7, -2.3);
        let cache = net.forward_cached(x.view()).unwrap();
        let (g1, _) = net.backward(&cache, c1.clone());
        let (g2, _) = net.backward(&cache, c2.clone());
        let (g12, _) = net.backward(&cache, &c1 * a + &c2 * b);
        for ((s1, s2), s12) in g1.slices().iter().zip(g2.slices()).zip(g12.slices()) {
            for ((u, v), w) in s1.iter().zip(s2.iter()).zip(s12.iter()) {
                assert!((a * u + b * v - w).abs() < 1e-10);
            }
        }
        // constant loss: zero upstream gradient
        let (g0, _) = net.backward(&cache, Array2::zeros((5, 2)));
        assert!(g0.slices().iter().all(|s| s.iter().all(|&v| v == 0.0)));
    }
}
