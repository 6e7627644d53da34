use super::NormStats;
use crate::{Error, Result};
use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the pre-activation.
    fn slope(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let a = z.tanh();
                1.0 - a * a
            }
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Input and output standardization carried with a trained network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkNorm {
    pub input: NormStats,
    pub output: NormStats,
}

/// Dense network with a shared hidden activation and a linear output layer.
/// `weights[l]` has shape `sizes[l+1] x sizes[l]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkRepr", into = "NetworkRepr")]
pub struct FeedforwardNetwork {
    sizes: Vec<usize>,
    activation: Activation,
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
    norm: Option<NetworkNorm>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct NetworkRepr {
    sizes: Vec<usize>,
    activation: Activation,
    /// Row-major per layer.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    #[serde(default)]
    norm_stats: Option<NetworkNorm>,
}

impl TryFrom<NetworkRepr> for FeedforwardNetwork {
    type Error = Error;

    fn try_from(r: NetworkRepr) -> Result<Self> {
        validate_sizes(&r.sizes)?;
        let layers = r.sizes.len() - 1;
        if r.weights.len() != layers || r.biases.len() != layers {
            return Err(Error::DimensionMismatch {
                context: "layer count",
                expected: layers,
                found: r.weights.len().min(r.biases.len()),
            });
        }
        let mut weights = Vec::with_capacity(layers);
        let mut biases = Vec::with_capacity(layers);
        for l in 0..layers {
            let (rows, cols) = (r.sizes[l + 1], r.sizes[l]);
            let w = Array2::from_shape_vec((rows, cols), r.weights[l].clone()).map_err(|_| {
                Error::DimensionMismatch {
                    context: "weight matrix",
                    expected: rows * cols,
                    found: r.weights[l].len(),
                }
            })?;
            if r.biases[l].len() != rows {
                return Err(Error::DimensionMismatch {
                    context: "bias vector",
                    expected: rows,
                    found: r.biases[l].len(),
                });
            }
            weights.push(w);
            biases.push(Array1::from(r.biases[l].clone()));
        }
        let net = FeedforwardNetwork {
            sizes: r.sizes,
            activation: r.activation,
            weights,
            biases,
            norm: r.norm_stats,
        };
        if !net.is_finite() {
            return Err(Error::invalid("network parameters must be finite"));
        }
        Ok(net)
    }
}

impl From<FeedforwardNetwork> for NetworkRepr {
    fn from(n: FeedforwardNetwork) -> Self {
        NetworkRepr {
            weights: n
                .weights
                .iter()
                .map(|w| w.iter().copied().collect())
                .collect(),
            biases: n.biases.iter().map(|b| b.to_vec()).collect(),
            sizes: n.sizes,
            activation: n.activation,
            norm_stats: n.norm,
        }
    }
}

fn validate_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) {
        return Err(Error::invalid(format!(
            "layer sizes must be >= 1 with at least two layers, got {sizes:?}"
        )));
    }
    Ok(())
}

/// Gradients with the same layout as the network parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Gradients {
    pub fn flat(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            v.extend(w.iter());
            v.extend(b.iter());
        }
        v
    }
}

/// Xavier-uniform for tanh, He-normal for relu, zero biases.
pub fn init_network(
    sizes: &[usize],
    activation: Activation,
    seed: u64,
) -> Result<FeedforwardNetwork> {
    validate_sizes(sizes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for pair in sizes.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let w = match activation {
            Activation::Tanh => {
                let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Array2::from_shape_simple_fn((fan_out, fan_in), || rng.random_range(-a..=a))
            }
            Activation::Relu => {
                let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
                Array2::from_shape_simple_fn((fan_out, fan_in), || normal.sample(&mut rng))
            }
        };
        weights.push(w);
        biases.push(Array1::zeros(fan_out));
    }
    Ok(FeedforwardNetwork {
        sizes: sizes.to_vec(),
        activation,
        weights,
        biases,
        norm: None,
    })
}

impl FeedforwardNetwork {
    /// Builds a network from explicit parameters (row-major weights).
    pub fn from_parameters(
        sizes: Vec<usize>,
        activation: Activation,
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
    ) -> Result<Self> {
        NetworkRepr {
            sizes,
            activation,
            weights,
            biases,
            norm_stats: None,
        }
        .try_into()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("validated sizes")
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    pub fn norm(&self) -> Option<&NetworkNorm> {
        self.norm.as_ref()
    }

    pub fn set_norm(&mut self, norm: Option<NetworkNorm>) {
        self.norm = norm;
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    pub fn num_parameters(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        Gradients {
            weights: self.weights.clone(),
            biases: self.biases.clone(),
        }
        .flat()
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_parameters() {
            return Err(Error::DimensionMismatch {
                context: "flat parameters",
                expected: self.num_parameters(),
                found: flat.len(),
            });
        }
        let mut it = flat.iter().copied();
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            w.iter_mut().for_each(|v| *v = it.next().unwrap());
            b.iter_mut().for_each(|v| *v = it.next().unwrap());
        }
        Ok(())
    }

    pub(crate) fn layers_mut(&mut self) -> (&mut [Array2<f64>], &mut [Array1<f64>]) {
        (&mut self.weights, &mut self.biases)
    }

    fn check_input(&self, found: usize) -> Result<()> {
        if found != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected: self.input_dim(),
                found,
            });
        }
        Ok(())
    }

    /// Raw forward pass (no normalization).
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input.len())?;
        let mut a = input.to_vec();
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z: Vec<f64> = w
                .rows()
                .into_iter()
                .zip(b)
                .map(|(row, &bi)| row.iter().zip(&a).map(|(x, y)| x * y).sum::<f64>() + bi)
                .collect();
            if l < last {
                z.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
            a = z;
        }
        Ok(a)
    }

    /// Rows are samples.
    pub fn forward_batch(&self, inputs: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(inputs.ncols())?;
        let mut a = inputs.to_owned();
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            a = a.dot(&w.t()) + b;
            if l < last {
                a.mapv_inplace(|v| self.activation.apply(v));
            }
        }
        Ok(a)
    }

    /// Forward pass in the original units when normalization stats are attached.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        match &self.norm {
            None => self.forward(input),
            Some(n) => {
                self.check_input(input.len())?;
                let y = self.forward(&n.input.apply_vec(input))?;
                Ok(n.output.invert_vec(&y))
            }
        }
    }

    /// Gradients of `J = 1/(2B) * sum_b ||f(x_b) - t_b||^2` and the value of `J`.
    pub fn backprop(
        &self,
        inputs: ArrayView2<f64>,
        targets: ArrayView2<f64>,
    ) -> Result<(Gradients, f64)> {
        self.check_input(inputs.ncols())?;
        if targets.ncols() != self.output_dim() || targets.nrows() != inputs.nrows() {
            return Err(Error::DimensionMismatch {
                context: "backprop targets",
                expected: self.output_dim(),
                found: targets.ncols(),
            });
        }
        let batch = inputs.nrows().max(1) as f64;
        let layers = self.weights.len();
        let mut pre = Vec::with_capacity(layers);
        let mut acts = Vec::with_capacity(layers + 1);
        acts.push(inputs.to_owned());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let z = acts[l].dot(&w.t()) + b;
            let a = if l + 1 < layers {
                z.mapv(|v| self.activation.apply(v))
            } else {
                z.clone()
            };
            pre.push(z);
            acts.push(a);
        }
        let err = &acts[layers] - &targets;
        let loss = err.iter().map(|e| e * e).sum::<f64>() / (2.0 * batch);

        let mut gw = vec![Array2::zeros((0, 0)); layers];
        let mut gb = vec![Array1::zeros(0); layers];
        let mut delta = err / batch;
        for l in (0..layers).rev() {
            gw[l] = delta.t().dot(&acts[l]);
            gb[l] = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut back = delta.dot(&self.weights[l]);
                back.zip_mut_with(&pre[l - 1], |d, &z| *d *= self.activation.slope(z));
                delta = back;
            }
        }
        Ok((
            Gradients {
                weights: gw,
                biases: gb,
            },
            loss,
        ))
    }

    pub fn operator_norms(&self) -> Vec<f64> {
        self.weights
            .iter()
            .map(|w| {
                let m = DMatrix::from_row_iterator(w.nrows(), w.ncols(), w.iter().copied());
                m.singular_values().max() * (1.0 + 1e-12)
            })
            .collect()
    }

    /// Product of layer operator norms; both activations are 1-Lipschitz.
    pub fn lipschitz_bound(&self) -> f64 {
        self.operator_norms().iter().product()
    }

    /// Bound on `||forward(x)||_2` over `||x||_inf <= input_bound`:
    /// `h_0 = sqrt(N0) B`, `h_l = ||W_l|| h_{l-1} + ||b_l||`.
    pub fn output_bound(&self, input_bound: f64) -> f64 {
        let mut h = input_bound.abs() * (self.input_dim() as f64).sqrt();
        for (norm, b) in self.operator_norms().iter().zip(&self.biases) {
            h = norm * h + b.iter().map(|v| v * v).sum::<f64>().sqrt();
        }
        h
    }

    /// Per-output bound on `predict` given `|x_i| <= input_bounds[i]`, in original units.
    pub fn predict_bound(&self, input_bounds: &[f64]) -> Vec<f64> {
        let raw = input_bounds.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        match &self.norm {
            None => vec![self.output_bound(raw); self.output_dim()],
            Some(n) => {
                let scaled = input_bounds
                    .iter()
                    .zip(n.input.mean.iter().zip(&n.input.std))
                    .map(|(b, (m, s))| (b.abs() + m.abs()) / s)
                    .fold(0.0, f64::max);
                let b = self.output_bound(scaled);
                n.output
                    .mean
                    .iter()
                    .zip(&n.output.std)
                    .map(|(m, s)| b * s + m.abs())
                    .collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn xavier_bound_and_determinism() {
        let a = init_network(&[3, 5, 5, 1], Activation::Tanh, 7).unwrap();
        let b = init_network(&[3, 5, 5, 1], Activation::Tanh, 7).unwrap();
        assert_eq!(a, b);
        for (l, w) in a.weights().iter().enumerate() {
            let lim = (6.0 / (a.sizes()[l] + a.sizes()[l + 1]) as f64).sqrt();
            assert!(w.iter().all(|v| v.abs() <= lim));
        }
        let c = init_network(&[3, 5, 5, 1], Activation::Tanh, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn relu_preset_shapes() {
        let n = init_network(&[25, 128, 128, 128, 128, 6], Activation::Relu, 1).unwrap();
        let shapes: Vec<_> = n.weights().iter().map(|w| w.dim()).collect();
        assert_eq!(
            shapes,
            vec![(128, 25), (128, 128), (128, 128), (128, 128), (6, 128)]
        );
        assert!(n.biases().iter().all(|b| b.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn zero_and_linear_forward() {
        let z = FeedforwardNetwork::from_parameters(
            vec![2, 3, 1],
            Activation::Tanh,
            vec![vec![0.0; 6], vec![0.0; 3]],
            vec![vec![0.0; 3], vec![0.0]],
        )
        .unwrap();
        assert_eq!(z.forward(&[1.0, -2.0]).unwrap(), vec![0.0]);
        let lin = FeedforwardNetwork::from_parameters(
            vec![2, 1],
            Activation::Relu,
            vec![vec![2.0, -1.0]],
            vec![vec![0.5]],
        )
        .unwrap();
        assert_eq!(lin.forward(&[1.0, 3.0]).unwrap(), vec![2.0 - 3.0 + 0.5]);
        assert!(matches!(
            lin.forward(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn batch_matches_single() {
        let n = init_network(&[3, 4, 2], Activation::Tanh, 3).unwrap();
        let x = array![[0.1, -0.2, 0.3], [1.0, 0.5, -0.5]];
        let y = n.forward_batch(x.view()).unwrap();
        for (row, out) in x.rows().into_iter().zip(y.rows()) {
            let single = n.forward(&row.to_vec()).unwrap();
            for (a, b) in single.iter().zip(out) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn single_neuron_gradient_closed_form() {
        let n = FeedforwardNetwork::from_parameters(
            vec![2, 1],
            Activation::Tanh,
            vec![vec![0.5, -1.0]],
            vec![vec![0.1]],
        )
        .unwrap();
        let x = array![[2.0, 1.0]];
        let t = array![[3.0]];
        let (g, loss) = n.backprop(x.view(), t.view()).unwrap();
        let pred = 0.5 * 2.0 - 1.0 + 0.1;
        let e = pred - 3.0;
        assert!((loss - 0.5 * e * e).abs() < 1e-15);
        assert!((g.weights[0][[0, 0]] - e * 2.0).abs() < 1e-15);
        assert!((g.weights[0][[0, 1]] - e * 1.0).abs() < 1e-15);
        assert!((g.biases[0][0] - e).abs() < 1e-15);
    }

    #[test]
    fn zero_error_zero_gradient() {
        let n = init_network(&[2, 3, 1], Activation::Relu, 4).unwrap();
        let x = array![[0.3, -0.7], [1.2, 0.4]];
        let t = n.forward_batch(x.view()).unwrap();
        let (g, loss) = n.backprop(x.view(), t.view()).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.flat().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn json_layout() {
        let n = FeedforwardNetwork::from_parameters(
            vec![2, 1],
            Activation::Tanh,
            vec![vec![1.0, 2.0]],
            vec![vec![0.0]],
        )
        .unwrap();
        let s = serde_json::to_string(&n).unwrap();
        assert_eq!(
            s,
            r#"{"sizes":[2,1],"activation":"tanh","weights":[[1.0,2.0]],"biases":[[0.0]],"norm_stats":null}"#
        );
        let back: FeedforwardNetwork = serde_json::from_str(&s).unwrap();
        assert_eq!(back, n);
        let bad = r#"{"sizes":[2,1],"activation":"tanh","weights":[[1.0]],"biases":[[0.0]]}"#;
        assert!(serde_json::from_str::<FeedforwardNetwork>(bad).is_err());
    }

    #[test]
    fn flat_params_round_trip() {
        let mut n = init_network(&[3, 4, 2], Activation::Tanh, 9).unwrap();
        let p = n.params_flat();
        assert_eq!(p.len(), n.num_parameters());
        let shifted: Vec<f64> = p.iter().map(|v| v + 1.0).collect();
        n.set_params_flat(&shifted).unwrap();
        assert_eq!(n.params_flat(), shifted);
    }
}
