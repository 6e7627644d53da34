use super::signals::multisine_trajectories;
use crate::config::{GeneratorConfig, RunConfig, SystemConfig, TrainingSetup, TrajectorySet};
use crate::invlearn::{
    collect_baseline_data, generate_training_trajectories, train_inverse, DatasetOptions,
    ReferenceGenerator, Trajectory, TrajectoryLog,
};
use crate::mlp::TrainReport;
use crate::plantsim::{
    critically_damped_poles, nmp_surrogate_axis, BaselineSystem, LtiBaseline, PendulumBaseline,
    PendulumCart, StateFeedbackController,
};
use crate::strategy::{InverseFilter, LearnedInverse, Method, Passthrough, StrategyRegistry};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

pub fn build_system(cfg: &SystemConfig) -> Result<Arc<dyn BaselineSystem>> {
    match cfg {
        SystemConfig::Pendulum(p) => {
            let plant = PendulumCart {
                params: p.plant.clone(),
                actuation: p.actuation.clone(),
            };
            let ctrl = StateFeedbackController::position_velocity(p.gain.clone())?;
            Ok(Arc::new(PendulumBaseline::new(
                &p.name,
                plant,
                ctrl,
                p.sim.clone(),
            )?))
        }
        SystemConfig::QuadSurrogate(q) => {
            let poles = critically_damped_poles(q.pole_rate, q.sample_time);
            let tf = nmp_surrogate_axis(q.zero, q.delay_steps, poles, q.sample_time)?;
            Ok(Arc::new(LtiBaseline::new(&q.name, tf, q.divergence_bound)?))
        }
    }
}

pub fn training_trajectories(setup: &TrainingSetup, dt: f64, seed: u64) -> Result<Vec<Trajectory>> {
    match &setup.trajectories {
        TrajectorySet::SinusoidGrid(g) => {
            generate_training_trajectories(&g.amplitudes, &g.periods, g.duration, dt)
        }
        TrajectorySet::Multisine(m) => Ok(multisine_trajectories(m, dt, seed)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedGenerator {
    pub name: String,
    pub method: Method,
    pub generator: ReferenceGenerator,
}

/// Everything `eval` and the service need to rebuild the trained strategies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArtifactBundle {
    pub system: SystemConfig,
    pub seed: u64,
    pub generators: Vec<NamedGenerator>,
}

impl ArtifactBundle {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let b: ArtifactBundle = serde_json::from_str(s)?;
        for g in &b.generators {
            if (g.generator.sample_time - b.system.sample_time()).abs() > 1e-12 {
                return Err(Error::invalid(format!(
                    "generator '{}' was trained at dt = {}, system runs at {}",
                    g.name,
                    g.generator.sample_time,
                    b.system.sample_time()
                )));
            }
            // re-validates dimensions against the spec
            ReferenceGenerator::new(
                g.generator.spec,
                g.generator.sample_time,
                g.generator.network.clone(),
            )?;
        }
        Ok(b)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeneratorReport {
    pub name: String,
    pub report: TrainReport,
}

pub fn collect_training_logs(
    cfg: &RunConfig,
    system: &dyn BaselineSystem,
) -> Result<Vec<TrajectoryLog>> {
    let trajectories = training_trajectories(&cfg.training, system.sample_time(), cfg.seed)?;
    collect_baseline_data(system, &trajectories)
}

fn train_one(
    g: &GeneratorConfig,
    logs: &[TrajectoryLog],
    cfg: &RunConfig,
    dt: f64,
) -> Result<(NamedGenerator, GeneratorReport)> {
    let data = DatasetOptions {
        skip_initial: (cfg.training.skip_initial_s / dt).round() as usize,
        target_size: cfg.training.dataset_size,
        seed: cfg.seed,
    };
    let (generator, report) =
        train_inverse(&g.spec(), logs, &g.network, &cfg.training.config, &data)?;
    Ok((
        NamedGenerator {
            name: g.name.clone(),
            method: g.method,
            generator,
        },
        GeneratorReport {
            name: g.name.clone(),
            report,
        },
    ))
}

/// Collects baseline logs once and trains every configured generator, in parallel.
pub fn train_generators(cfg: &RunConfig) -> Result<(ArtifactBundle, Vec<GeneratorReport>)> {
    let system = build_system(&cfg.system)?;
    let logs = collect_training_logs(cfg, system.as_ref())?;
    let dt = system.sample_time();
    let results: Vec<Result<(NamedGenerator, GeneratorReport)>> = std::thread::scope(|s| {
        let handles: Vec<_> = cfg
            .generators
            .iter()
            .map(|g| s.spawn(|| train_one(g, &logs, cfg, dt)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::invalid("training thread panicked")))
            })
            .collect()
    });
    let mut generators = Vec::new();
    let mut reports = Vec::new();
    for r in results {
        let (g, rep) = r?;
        generators.push(g);
        reports.push(rep);
    }
    Ok((
        ArtifactBundle {
            system: cfg.system.clone(),
            seed: cfg.seed,
            generators,
        },
        reports,
    ))
}

/// Baseline, ZOS inverse of the linear model (when one exists) and the trained generators.
pub fn build_registry(
    system: &dyn BaselineSystem,
    bundle: Option<&ArtifactBundle>,
) -> StrategyRegistry {
    let mut reg = StrategyRegistry::new();
    reg.register(Arc::new(Passthrough));
    match InverseFilter::zos(Method::Zos.tag(), system) {
        Ok(f) => reg.register(Arc::new(f)),
        Err(e) => log::warn!("no ZOS inverse for {}: {e}", system.name()),
    }
    for g in bundle.map(|b| b.generators.as_slice()).unwrap_or_default() {
        reg.register(Arc::new(LearnedInverse::new(
            &g.name,
            g.method,
            Arc::new(g.generator.clone()),
        )));
    }
    reg
}
