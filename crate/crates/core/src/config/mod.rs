//! Run configuration: JSON with an optional `extends` preset.

use crate::invlearn::{FeatureEncoding, FeatureSpec, InputSelection, NetworkPreset};
use crate::mlp::TrainingConfig;
use crate::plantsim::{Actuation, PendulumCartParams, SimOptions, K1, K2};
use crate::strategy::Method;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

pub const PRESETS: [&str; 3] = ["pendulum_sim", "pendulum_voltage", "quad_surrogate"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    pub system: SystemConfig,
    pub training: TrainingSetup,
    #[serde(default)]
    pub generators: Vec<GeneratorConfig>,
    #[serde(default)]
    pub scenarios: Vec<ScenarioConfig>,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    #[serde(default)]
    pub service: ServiceConfig,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemConfig {
    Pendulum(PendulumSystem),
    QuadSurrogate(QuadSystem),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PendulumSystem {
    pub name: String,
    pub plant: PendulumCartParams,
    pub actuation: Actuation,
    pub gain: Vec<f64>,
    pub sim: SimOptions,
}

/// Per-axis `g (z - zero) / (z^delay (z - p)^2)` with `p = exp(-pole_rate dt)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadSystem {
    pub name: String,
    pub zero: f64,
    pub delay_steps: usize,
    pub pole_rate: f64,
    pub sample_time: f64,
    pub divergence_bound: f64,
}

impl SystemConfig {
    pub fn name(&self) -> &str {
        match self {
            SystemConfig::Pendulum(p) => &p.name,
            SystemConfig::QuadSurrogate(q) => &q.name,
        }
    }

    pub fn sample_time(&self) -> f64 {
        match self {
            SystemConfig::Pendulum(p) => p.sim.module_dt(),
            SystemConfig::QuadSurrogate(q) => q.sample_time,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrajectorySet {
    SinusoidGrid(SinusoidGrid),
    Multisine(MultisineSet),
}

/// One sinusoid per amplitude/period pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinusoidGrid {
    pub amplitudes: Vec<f64>,
    pub periods: Vec<f64>,
    pub duration: f64,
}

/// Sums of sinusoids with log-uniform periods and amplitudes scaled with the period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultisineSet {
    pub components: usize,
    pub duration: f64,
    pub min_period: f64,
    pub max_period: f64,
    #[serde(default = "one")]
    pub count: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSetup {
    pub trajectories: TrajectorySet,
    #[serde(default)]
    pub skip_initial_s: f64,
    #[serde(default)]
    pub dataset_size: Option<usize>,
    #[serde(default)]
    pub config: TrainingConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub name: String,
    pub method: Method,
    pub selection: InputSelection,
    #[serde(default)]
    pub encoding: FeatureEncoding,
    #[serde(default)]
    pub velocity: bool,
    pub network: NetworkPreset,
}

impl GeneratorConfig {
    pub fn spec(&self) -> FeatureSpec {
        FeatureSpec {
            selection: self.selection,
            encoding: self.encoding,
            velocity: self.velocity,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioConfig {
    /// Sinusoid sweep over periods, every method against the baseline.
    Fig3(SweepScenario),
    /// Past-reference ablation next to the approximate inverse.
    Fig4(SweepScenario),
    /// Synthesized drawings, every method against the baseline.
    Fig5(DrawingScenario),
    /// Exact-inverse network, ZOS and approximate-inverse network on synthesized drawings.
    Threeway(DrawingScenario),
    /// A trajectory from a `t,value` CSV file.
    Custom(CustomScenario),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepScenario {
    pub amplitude: f64,
    pub periods: Vec<f64>,
    pub duration: f64,
    /// Strategy names; empty means all that apply.
    #[serde(default)]
    pub methods: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrawingScenario {
    pub count: usize,
    pub duration: f64,
    #[serde(default)]
    pub methods: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomScenario {
    pub name: String,
    pub path: PathBuf,
    #[serde(default)]
    pub methods: Vec<String>,
}

impl ScenarioConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ScenarioConfig::Fig3(_) => "fig3",
            ScenarioConfig::Fig4(_) => "fig4",
            ScenarioConfig::Fig5(_) => "fig5",
            ScenarioConfig::Threeway(_) => "threeway",
            ScenarioConfig::Custom(_) => "custom",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationConfig {
    /// Leading seconds left out of RMS figures.
    pub skip_s: f64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig { skip_s: 5.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServiceConfig {
    pub bind: String,
    pub port: u16,
    /// Drawings are clamped to `[-workspace, workspace]`.
    pub workspace: f64,
    pub max_duration_s: f64,
    pub smoothing_window: usize,
    pub artifacts: Vec<PathBuf>,
    pub cors_origin: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: "127.0.0.1".into(),
            port: 8080,
            workspace: 3.0,
            max_duration_s: 120.0,
            smoothing_window: 5,
            artifacts: Vec::new(),
            cors_origin: None,
        }
    }
}

pub fn preset(name: &str) -> Result<Value> {
    let pendulum = json!({
        "seed": 0,
        "output_dir": "out/pendulum",
        "system": {
            "kind": "pendulum",
            "name": "pendulum",
            "plant": PendulumCartParams::default(),
            "actuation": {"kind": "force"},
            "gain": K1,
            "sim": SimOptions::default(),
        },
        "training": {
            "trajectories": {
                "kind": "sinusoid_grid",
                "amplitudes": [0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
                "periods": [5.0, 10.0, 15.0, 20.0, 25.0],
                "duration": 60.0,
            },
            "skip_initial_s": 2.0,
            "dataset_size": 20000,
            "config": {
                "optimizer": "adam",
                "learning_rate": 0.01,
                "batch_size": 64,
                "epochs": 300,
                "validation_fraction": 0.1,
                "patience": 50,
            },
        },
        "generators": [
            {
                "name": "M3_approx_dnn",
                "method": "M3_approx_dnn",
                "selection": {"kind": "approx_inverse", "n": 2},
                "encoding": "finite_difference",
                "network": {"hidden": [5, 5], "activation": "tanh"},
            },
            {
                "name": "ablation_past_u",
                "method": "ablation_past_u",
                "selection": {"kind": "augmented_past", "n": 2, "past": 1},
                "encoding": "finite_difference",
                "network": {"hidden": [5, 5], "activation": "tanh"},
            },
        ],
        "scenarios": [
            {"kind": "fig3", "amplitude": 2.5, "periods": [6.0, 8.0, 12.0, 14.0, 18.0, 22.0], "duration": 60.0},
            {"kind": "fig4", "amplitude": 2.5, "periods": [6.0, 8.0, 12.0, 14.0, 18.0, 22.0], "duration": 60.0},
        ],
    });
    match name {
        "pendulum_sim" => Ok(pendulum),
        "pendulum_voltage" => {
            let mut p = pendulum;
            merge(
                &mut p,
                json!({
                    "output_dir": "out/pendulum_voltage",
                    "system": {
                        "name": "pendulum_voltage",
                        "plant": {"length": 0.3},
                        "actuation": {"kind": "voltage", "velocity_coeff": -7.74, "voltage_coeff": 1.73},
                        "gain": K2,
                        "sim": {"substeps": 14},
                    },
                    "training": {
                        "trajectories": {
                            "kind": "sinusoid_grid",
                            "amplitudes": [0.04, 0.06, 0.08],
                            "periods": [5.0, 6.0, 7.0, 8.0, 9.0, 10.0],
                            "duration": 40.0,
                        },
                    },
                    "scenarios": [
                        {"kind": "fig3", "amplitude": 0.06, "periods": [5.5, 7.5, 9.5], "duration": 40.0},
                    ],
                }),
            );
            Ok(p)
        }
        "quad_surrogate" => Ok(json!({
            "seed": 0,
            "output_dir": "out/quad_surrogate",
            "system": {
                "kind": "quad_surrogate",
                "name": "quad_surrogate",
                "zero": 1.2,
                "delay_steps": 1,
                "pole_rate": 3.0,
                "sample_time": 1.0 / 7.0,
                "divergence_bound": 1e6,
            },
            "training": {
                "trajectories": {
                    "kind": "multisine",
                    "components": 30,
                    "duration": 400.0,
                    "min_period": 3.5,
                    "max_period": 60.0,
                },
                "skip_initial_s": 2.0,
                "dataset_size": 20000,
                "config": {
                    "optimizer": "adam",
                    "learning_rate": 0.001,
                    "batch_size": 32,
                    "epochs": 300,
                    "validation_fraction": 0.1,
                    "patience": 50,
                },
            },
            "generators": [
                {
                    "name": "M1_exact_dnn",
                    "method": "M1_exact_dnn",
                    "selection": {"kind": "exact_inverse", "n": 3, "r": 2},
                    "encoding": "offsets",
                    "network": {"hidden": [128, 128, 128, 128], "activation": "relu"},
                },
                {
                    "name": "M3_approx_dnn",
                    "method": "M3_approx_dnn",
                    "selection": {"kind": "approx_inverse", "n": 3},
                    "encoding": "offsets",
                    "velocity": true,
                    "network": {"hidden": [128, 128, 128, 128], "activation": "relu"},
                },
            ],
            "scenarios": [
                {"kind": "threeway", "count": 10, "duration": 30.0},
            ],
        })),
        other => Err(Error::Config {
            path: "extends".into(),
            message: format!("unknown preset '{other}', expected one of {PRESETS:?}"),
        }),
    }
}

/// Objects merge key by key, everything else is replaced by `over`.
pub fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn lookup<'a>(v: &'a Value, path: &str) -> Option<&'a Value> {
    let mut cur = v;
    for seg in path.split('.') {
        let (key, idx) = match seg.find('[') {
            Some(i) => (&seg[..i], seg[i + 1..seg.len() - 1].parse::<usize>().ok()),
            None => (seg, None),
        };
        cur = cur.get(key)?;
        if let Some(i) = idx {
            cur = cur.get(i)?;
        }
    }
    Some(cur)
}

fn inner_error<T: serde::de::DeserializeOwned>(
    v: &Value,
    prefix: &str,
) -> Option<(String, String)> {
    let mut body = v.clone();
    body.as_object_mut()?.remove("kind");
    serde_path_to_error::deserialize::<_, T>(&body)
        .err()
        .map(|e| {
            let inner = e.path().to_string();
            let path = if inner == "." {
                prefix.to_string()
            } else {
                format!("{prefix}.{inner}")
            };
            (path, e.inner().to_string())
        })
}

/// Tagged enums hide the location of an error inside their payload; this
/// re-reads the payload on its own to recover the full key path.
fn refine(v: &Value, path: &str) -> Option<(String, String)> {
    let sub = lookup(v, path)?;
    match sub.get("kind")?.as_str()? {
        "pendulum" => inner_error::<PendulumSystem>(sub, path),
        "quad_surrogate" => inner_error::<QuadSystem>(sub, path),
        "sinusoid_grid" => inner_error::<SinusoidGrid>(sub, path),
        "multisine" => inner_error::<MultisineSet>(sub, path),
        "fig3" | "fig4" => inner_error::<SweepScenario>(sub, path),
        "fig5" | "threeway" => inner_error::<DrawingScenario>(sub, path),
        "custom" => inner_error::<CustomScenario>(sub, path),
        _ => None,
    }
}

impl RunConfig {
    pub fn preset(name: &str) -> Result<Self> {
        Self::from_value(preset(name)?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s).map_err(|e| Error::Config {
            path: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        Self::from_value(v)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json_str(&text)
    }

    pub fn from_value(mut v: Value) -> Result<Self> {
        if let Some(obj) = v.as_object_mut() {
            if let Some(ext) = obj.remove("extends") {
                let name = ext.as_str().ok_or_else(|| Error::Config {
                    path: "extends".into(),
                    message: "expected a preset name".into(),
                })?;
                let mut base = preset(name)?;
                merge(&mut base, v);
                v = base;
            }
        }
        let cfg: RunConfig = match serde_path_to_error::deserialize(&v) {
            Ok(c) => c,
            Err(e) => {
                let path = e.path().to_string();
                let (path, message) = refine(&v, &path).unwrap_or((path, e.inner().to_string()));
                return Err(Error::Config { path, message });
            }
        };
        let seed = cfg.seed;
        let cfg = cfg.with_seed(seed);
        cfg.validate()?;
        Ok(cfg)
    }

    /// The top-level seed drives data generation, shuffling and initialization.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.training.config.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, message: String| Error::Config {
            path: path.into(),
            message,
        };
        match &self.system {
            SystemConfig::Pendulum(p) => {
                p.plant
                    .validate()
                    .map_err(|e| bad("system.plant", e.to_string()))?;
                p.sim
                    .validate()
                    .map_err(|e| bad("system.sim", e.to_string()))?;
                if p.gain.len() != 4 {
                    return Err(bad(
                        "system.gain",
                        format!("expected 4 entries, found {}", p.gain.len()),
                    ));
                }
            }
            SystemConfig::QuadSurrogate(q) => {
                if !(q.zero > 1.0) {
                    return Err(bad(
                        "system.zero",
                        "must lie outside the unit circle".into(),
                    ));
                }
                if !(q.pole_rate > 0.0 && q.sample_time > 0.0) {
                    return Err(bad(
                        "system",
                        "pole_rate and sample_time must be positive".into(),
                    ));
                }
            }
        }
        self.training
            .config
            .validate()
            .map_err(|e| bad("training.config", e.to_string()))?;
        match &self.training.trajectories {
            TrajectorySet::SinusoidGrid(g) => {
                if g.amplitudes.is_empty()
                    || g.periods.is_empty()
                    || !(g.duration > 0.0)
                    || g.periods.iter().any(|p| !(*p > 0.0))
                {
                    return Err(bad(
                        "training.trajectories",
                        "needs amplitudes, positive periods and duration".into(),
                    ));
                }
            }
            TrajectorySet::Multisine(m) => {
                if m.components == 0
                    || m.count == 0
                    || !(m.duration > 0.0)
                    || !(m.min_period > 0.0 && m.max_period >= m.min_period)
                {
                    return Err(bad(
                        "training.trajectories",
                        "bad multisine settings".into(),
                    ));
                }
            }
        }
        for (i, g) in self.generators.iter().enumerate() {
            g.spec()
                .validate()
                .map_err(|e| bad(&format!("generators[{i}]"), e.to_string()))?;
        }
        for (i, s) in self.scenarios.iter().enumerate() {
            let ok = match s {
                ScenarioConfig::Fig3(w) | ScenarioConfig::Fig4(w) => {
                    !w.periods.is_empty() && w.periods.iter().all(|p| *p > 0.0) && w.duration > 0.0
                }
                ScenarioConfig::Fig5(d) | ScenarioConfig::Threeway(d) => d.duration > 0.0,
                ScenarioConfig::Custom(_) => true,
            };
            if !ok {
                return Err(bad(
                    &format!("scenarios[{i}]"),
                    "periods and duration must be positive".into(),
                ));
            }
        }
        if !(self.evaluation.skip_s >= 0.0) {
            return Err(bad("evaluation.skip_s", "must be non-negative".into()));
        }
        Ok(())
    }

    pub fn generator(&self, name: &str) -> Option<&GeneratorConfig> {
        self.generators.iter().find(|g| g.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_load() {
        for p in PRESETS {
            let cfg = RunConfig::preset(p).unwrap();
            assert_eq!(
                cfg.system.name(),
                if p == "pendulum_sim" { "pendulum" } else { p }
            );
        }
        let v = RunConfig::preset("pendulum_voltage").unwrap();
        match v.system {
            SystemConfig::Pendulum(p) => {
                assert_eq!(p.plant.length, 0.3);
                assert_eq!(p.plant.cart_mass, 1.0);
                assert_eq!(p.sim.substeps, 14);
                assert_eq!(p.gain, K2);
            }
            _ => panic!("voltage preset is a pendulum"),
        }
    }

    #[test]
    fn extends_and_overrides() {
        let cfg = RunConfig::from_json_str(
            r#"{"extends": "pendulum_sim", "seed": 7, "training": {"config": {"epochs": 3}}}"#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.training.config.seed, 7);
        assert_eq!(cfg.training.config.epochs, 3);
        assert_eq!(cfg.training.config.batch_size, 64);
        assert_eq!(cfg.generators.len(), 2);
    }

    #[test]
    fn errors_name_the_key_path() {
        let e = RunConfig::from_json_str(
            r#"{"extends": "quad_surrogate", "system": {"zero": "high"}}"#,
        )
        .unwrap_err();
        match e {
            Error::Config { path, .. } => assert_eq!(path, "system.zero"),
            other => panic!("{other}"),
        }
        let e = RunConfig::from_json_str(
            r#"{"extends": "pendulum_sim", "training": {"config": {"bogus": 1}}}"#,
        )
        .unwrap_err();
        assert!(
            matches!(e, Error::Config { ref path, .. } if path.starts_with("training.config")),
            "{e}"
        );
        let e = RunConfig::from_json_str(r#"{"extends": "pendulum_sim", "scenarios": [{"kind": "fig3", "amplitude": 1, "periods": [2], "duration": "x"}]}"#).unwrap_err();
        assert!(
            matches!(e, Error::Config { ref path, .. } if path == "scenarios[0].duration"),
            "{e}"
        );
        let e = RunConfig::from_json_str(r#"{"extends": "nope"}"#).unwrap_err();
        assert!(matches!(e, Error::Config { ref path, .. } if path == "extends"));
        let e =
            RunConfig::from_json_str(r#"{"extends": "quad_surrogate", "system": {"zero": 0.5}}"#)
                .unwrap_err();
        assert!(matches!(e, Error::Config { ref path, .. } if path == "system.zero"));
    }
}
