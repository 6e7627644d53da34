use super::metrics::{reduction_pct, rms_error};
use super::signals::{load_trajectory_csv, synthesize_drawing};
use crate::config::ScenarioConfig;
use crate::invlearn::Trajectory;
use crate::plantsim::BaselineSystem;
use crate::strategy::{Method, Passthrough, ReferenceStrategy, StrategyRegistry};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// One strategy on one desired trajectory. `y` stops at the divergence point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub scenario: String,
    pub strategy: String,
    pub method: Method,
    pub sample_time: f64,
    pub y_d: Vec<f64>,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    pub eval_start: usize,
    pub rms: Option<f64>,
    pub reduction_pct: Option<f64>,
    pub diverged: bool,
    pub divergence_time: Option<f64>,
    pub seed: u64,
}

impl ExperimentResult {
    pub fn times(&self) -> Vec<f64> {
        (0..self.y_d.len())
            .map(|k| k as f64 * self.sample_time)
            .collect()
    }
}

/// Shared state for running scenarios against one system.
pub struct ExperimentContext {
    pub system: Arc<dyn BaselineSystem>,
    pub registry: StrategyRegistry,
    pub seed: u64,
    /// Leading seconds excluded from the RMS.
    pub skip_s: f64,
}

fn run_one(
    scenario: &str,
    desired: &[f64],
    system: &dyn BaselineSystem,
    strategy: &dyn ReferenceStrategy,
    eval_start: usize,
    seed: u64,
) -> Result<ExperimentResult> {
    let u = strategy.references(desired)?;
    let trace = system.run(&u)?;
    let rms = if trace.diverged {
        None
    } else {
        Some(rms_error(&trace.y, desired, eval_start)?)
    };
    Ok(ExperimentResult {
        scenario: scenario.to_string(),
        strategy: strategy.name().to_string(),
        method: strategy.method(),
        sample_time: system.sample_time(),
        y_d: desired.to_vec(),
        u,
        y: trace.y,
        eval_start,
        rms,
        reduction_pct: None,
        diverged: trace.diverged,
        divergence_time: trace.divergence_time,
        seed,
    })
}

/// Runs the baseline once, then every other strategy, and fills in the
/// reduction relative to the baseline. Baseline entries in `strategies` are ignored.
pub fn evaluate(
    scenario: &str,
    desired: &[f64],
    system: &dyn BaselineSystem,
    strategies: &[Arc<dyn ReferenceStrategy>],
    eval_start: usize,
    seed: u64,
) -> Result<Vec<ExperimentResult>> {
    if eval_start >= desired.len() {
        return Err(Error::EmptyWindow);
    }
    let base = run_one(scenario, desired, system, &Passthrough, eval_start, seed)?;
    let base_rms = base.rms;
    let mut out = vec![base];
    for s in strategies.iter().filter(|s| s.method() != Method::Baseline) {
        let mut r = run_one(scenario, desired, system, s.as_ref(), eval_start, seed)?;
        if let (Some(m), Some(b)) = (r.rms, base_rms) {
            r.reduction_pct = reduction_pct(m, b);
        }
        out.push(r);
    }
    Ok(out)
}

impl ExperimentContext {
    fn eval_start(&self, skip_s: f64) -> usize {
        (skip_s / self.system.sample_time()).round() as usize
    }

    /// Named strategies, or every non-baseline strategy whose method passes `keep` when `names` is empty.
    pub fn select(
        &self,
        names: &[String],
        keep: impl Fn(Method) -> bool,
    ) -> Result<Vec<Arc<dyn ReferenceStrategy>>> {
        if names.is_empty() {
            Ok(self
                .registry
                .iter()
                .filter(|(_, s)| s.method() != Method::Baseline && keep(s.method()))
                .map(|(_, s)| s.clone())
                .collect())
        } else {
            names.iter().map(|n| self.registry.get(n)).collect()
        }
    }

    fn run_set(
        &self,
        prefix: &str,
        desired: &[Trajectory],
        strategies: &[Arc<dyn ReferenceStrategy>],
        skip_s: f64,
    ) -> Result<Vec<ExperimentResult>> {
        let start = self.eval_start(skip_s);
        let mut out = Vec::new();
        for tr in desired {
            let id = format!("{prefix}_{}", tr.name);
            out.extend(evaluate(
                &id,
                &tr.values,
                self.system.as_ref(),
                strategies,
                start,
                self.seed,
            )?);
        }
        Ok(out)
    }

    /// Sinusoids of one amplitude over a set of periods.
    pub fn run_pendulum_sweep(
        &self,
        amplitude: f64,
        periods: &[f64],
        duration: f64,
        strategies: &[Arc<dyn ReferenceStrategy>],
    ) -> Result<Vec<ExperimentResult>> {
        let dt = self.system.sample_time();
        let desired: Vec<Trajectory> = periods
            .iter()
            .map(|&p| Trajectory {
                name: format!("T{p}"),
                ..Trajectory::sinusoid(amplitude, p, duration, dt)
            })
            .collect();
        self.run_set("fig3", &desired, strategies, self.skip_s)
    }

    /// Past-reference ablation next to the approximate inverse, scored from t = 0.
    pub fn run_ablation(
        &self,
        amplitude: f64,
        periods: &[f64],
        duration: f64,
        strategies: &[Arc<dyn ReferenceStrategy>],
    ) -> Result<Vec<ExperimentResult>> {
        let dt = self.system.sample_time();
        let desired: Vec<Trajectory> = periods
            .iter()
            .map(|&p| Trajectory {
                name: format!("T{p}"),
                ..Trajectory::sinusoid(amplitude, p, duration, dt)
            })
            .collect();
        self.run_set("fig4", &desired, strategies, 0.0)
    }

    pub fn drawings(&self, count: usize, duration: f64) -> Vec<Trajectory> {
        (0..count)
            .map(|i| synthesize_drawing(self.seed, i, duration, self.system.sample_time()))
            .collect()
    }

    /// Exact-inverse network, ZOS and approximate-inverse network on the same drawings.
    pub fn run_three_way_comparison(
        &self,
        drawings: &[Trajectory],
        strategies: &[Arc<dyn ReferenceStrategy>],
    ) -> Result<Vec<ExperimentResult>> {
        for m in [Method::ExactDnn, Method::Zos, Method::ApproxDnn] {
            if !strategies.iter().any(|s| s.method() == m) {
                return Err(Error::UnknownStrategy(m.tag().to_string()));
            }
        }
        self.run_set("threeway", drawings, strategies, self.skip_s)
    }

    pub fn run_scenario(&self, scenario: &ScenarioConfig) -> Result<Vec<ExperimentResult>> {
        match scenario {
            ScenarioConfig::Fig3(s) => {
                let st = self.select(&s.methods, |_| true)?;
                self.run_pendulum_sweep(s.amplitude, &s.periods, s.duration, &st)
            }
            ScenarioConfig::Fig4(s) => {
                let st = self.select(&s.methods, |m| {
                    matches!(m, Method::ApproxDnn | Method::AblationPastU)
                })?;
                self.run_ablation(s.amplitude, &s.periods, s.duration, &st)
            }
            ScenarioConfig::Fig5(s) => {
                let st = self.select(&s.methods, |_| true)?;
                self.run_set(
                    "fig5",
                    &self.drawings(s.count, s.duration),
                    &st,
                    self.skip_s,
                )
            }
            ScenarioConfig::Threeway(s) => {
                let st = self.select(&s.methods, |m| {
                    matches!(m, Method::ExactDnn | Method::Zos | Method::ApproxDnn)
                })?;
                self.run_three_way_comparison(&self.drawings(s.count, s.duration), &st)
            }
            ScenarioConfig::Custom(s) => {
                let st = self.select(&s.methods, |_| true)?;
                let tr = Trajectory {
                    name: s.name.clone(),
                    ..load_trajectory_csv(&s.path, self.system.sample_time())?
                };
                self.run_set("custom", &[tr], &st, self.skip_s)
            }
        }
    }
}
