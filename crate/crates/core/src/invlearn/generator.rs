use super::{build_features, DatasetOptions, FeatureSpec, TrajectoryLog};
use crate::mlp::{
    init_network, train, Activation, FeedforwardNetwork, NetworkNorm, NormStats, TrainReport,
    TrainingConfig,
};
use crate::plantsim::central_difference_velocity;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Hidden layer widths and activation; input and output widths come from the data.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkPreset {
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl NetworkPreset {
    pub fn pendulum() -> Self {
        NetworkPreset {
            hidden: vec![5, 5],
            activation: Activation::Tanh,
        }
    }

    pub fn quadrotor() -> Self {
        NetworkPreset {
            hidden: vec![128; 4],
            activation: Activation::Relu,
        }
    }

    pub fn linear() -> Self {
        NetworkPreset {
            hidden: Vec::new(),
            activation: Activation::Tanh,
        }
    }
}

/// Trained inverse model plus everything needed to rebuild its inputs at runtime.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceGenerator {
    pub spec: FeatureSpec,
    pub sample_time: f64,
    pub feature_names: Vec<String>,
    pub network: FeedforwardNetwork,
}

pub fn train_inverse(
    spec: &FeatureSpec,
    logs: &[TrajectoryLog],
    preset: &NetworkPreset,
    config: &TrainingConfig,
    data: &DatasetOptions,
) -> Result<(ReferenceGenerator, TrainReport)> {
    let ds = build_features(spec, logs, data)?;
    let input = NormStats::fit(ds.features.view())?;
    let output = NormStats::fit(ds.labels.view())?;
    let x = input.apply(ds.features.view());
    let y = output.apply(ds.labels.view());
    let mut sizes = vec![ds.features.ncols()];
    sizes.extend(&preset.hidden);
    sizes.push(1);
    let mut network = init_network(&sizes, preset.activation, config.seed)?;
    let report = train(&mut network, x.view(), y.view(), config)?;
    log::info!(
        "trained {:?} on {} rows: val mse {:.3e} (initial {:.3e}) at epoch {}",
        spec.selection,
        ds.len(),
        report.best_val_loss,
        report.initial_val_loss,
        report.best_epoch
    );
    network.set_norm(Some(NetworkNorm { input, output }));
    Ok((
        ReferenceGenerator {
            spec: *spec,
            sample_time: ds.sample_time,
            feature_names: ds.feature_names,
            network,
        },
        report,
    ))
}

impl ReferenceGenerator {
    pub fn new(spec: FeatureSpec, sample_time: f64, network: FeedforwardNetwork) -> Result<Self> {
        spec.validate()?;
        if network.input_dim() != spec.feature_count() || network.output_dim() != 1 {
            return Err(Error::DimensionMismatch {
                context: "generator network",
                expected: spec.feature_count(),
                found: network.input_dim(),
            });
        }
        Ok(ReferenceGenerator {
            feature_names: spec.feature_names(),
            spec,
            sample_time,
            network,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let g: ReferenceGenerator = serde_json::from_str(s)?;
        g.spec.validate()?;
        if g.network.input_dim() != g.spec.feature_count() {
            return Err(Error::DimensionMismatch {
                context: "generator network",
                expected: g.spec.feature_count(),
                found: g.network.input_dim(),
            });
        }
        Ok(g)
    }

    /// Number of desired samples a single reference needs.
    pub fn window_len(&self) -> usize {
        let y = self.spec.y_offsets();
        (y[y.len() - 1] - y[0] + 1) as usize
    }

    /// Future samples beyond `k` the generator reads.
    pub fn preview(&self) -> usize {
        self.spec.span().1.max(0) as usize
    }

    /// `u(k)` from the desired window starting at the first output offset.
    /// Only for generators without past-reference inputs; velocities, if used,
    /// come from central differences inside the window.
    pub fn generate_reference(&self, window: &[f64]) -> Result<f64> {
        if self.spec.selection.is_recursive() {
            return Err(Error::invalid(
                "generator needs past references, use generate_sequence",
            ));
        }
        if window.len() != self.window_len() {
            return Err(Error::WindowLength {
                expected: self.window_len(),
                found: window.len(),
            });
        }
        let first = self.spec.y_offsets()[0];
        let vel = central_difference_velocity(window, self.sample_time);
        let at = |i: isize| (i - first) as usize;
        let x = self
            .spec
            .encode(&|i| window[at(i)], &|i| vel[at(i)], &|_| 0.0);
        let out = self.network.predict(&x)?[0];
        Ok(self.spec.decode(out, window[at(0)]))
    }

    /// References for a whole desired trajectory. Samples outside it hold the
    /// end values and past references before the start equal `desired[0]`.
    /// A non-finite reference ends the recursion and the rest is NaN.
    pub fn generate_sequence(&self, desired: &[f64]) -> Result<Vec<f64>> {
        if desired.is_empty() {
            return Ok(Vec::new());
        }
        let (lo, hi) = self.spec.span();
        let front = (-lo).max(0) as usize + 1;
        let back = hi.max(0) as usize + 1;
        let mut ext = vec![desired[0]; front];
        ext.extend_from_slice(desired);
        ext.extend(std::iter::repeat_n(desired[desired.len() - 1], back));
        let vel = if self.spec.velocity {
            central_difference_velocity(&ext, self.sample_time)
        } else {
            Vec::new()
        };
        let mut u: Vec<f64> = Vec::with_capacity(desired.len());
        for k in 0..desired.len() {
            let idx = |i: isize| (front as isize + k as isize + i) as usize;
            let past = |i: isize| {
                let j = k as isize + i;
                if j < 0 {
                    desired[0]
                } else {
                    u[j as usize]
                }
            };
            let x = self.spec.encode(&|i| ext[idx(i)], &|i| vel[idx(i)], &past);
            let next = self.spec.decode(self.network.predict(&x)?[0], desired[k]);
            if !next.is_finite() {
                log::debug!("reference became non-finite at k = {k}");
                u.resize(desired.len(), f64::NAN);
                break;
            }
            u.push(next);
        }
        Ok(u)
    }

    /// Bound on `|u(k)|` when `|y_d| <= b`, from the network operator norms.
    /// `None` for generators fed by their own past outputs.
    pub fn reference_bound(&self, b: f64) -> Option<f64> {
        if self.spec.selection.is_recursive() {
            return None;
        }
        let vb = b / self.sample_time;
        let feats = self.spec.feature_bounds(b.abs(), vb);
        let out = self.network.predict_bound(&feats)[0];
        Some(match self.spec.encoding {
            super::FeatureEncoding::Offsets => out + b.abs(),
            _ => out,
        })
    }

    /// Coefficients `c` and offset `c0` with `u(k) = c0 + sum c_i y_d(k + first + i)`,
    /// read off by probing. Exact for networks without hidden layers.
    pub fn linear_coefficients(&self) -> Result<(Vec<f64>, f64)> {
        let len = self.window_len();
        let c0 = self.generate_reference(&vec![0.0; len])?;
        let c = (0..len)
            .map(|i| {
                let mut w = vec![0.0; len];
                w[i] = 1.0;
                self.generate_reference(&w).map(|v| v - c0)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((c, c0))
    }
}
