//! Reference-shaping strategies behind one trait, looked up by name.

use crate::invlearn::ReferenceGenerator;
use crate::plantsim::BaselineSystem;
use crate::polylti::DiscreteTransferFunction;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "baseline")]
    Baseline,
    #[serde(rename = "M1_exact_dnn")]
    ExactDnn,
    #[serde(rename = "M2_zos")]
    Zos,
    #[serde(rename = "M3_approx_dnn")]
    ApproxDnn,
    #[serde(rename = "ablation_past_u")]
    AblationPastU,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Baseline,
        Method::ExactDnn,
        Method::Zos,
        Method::ApproxDnn,
        Method::AblationPastU,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::ExactDnn => "M1_exact_dnn",
            Method::Zos => "M2_zos",
            Method::ApproxDnn => "M3_approx_dnn",
            Method::AblationPastU => "ablation_past_u",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == tag)
            .ok_or_else(|| Error::UnknownStrategy(tag.to_string()))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Maps a desired trajectory to the reference fed to the baseline system.
pub trait ReferenceStrategy: Send + Sync {
    fn name(&self) -> &str;

    fn method(&self) -> Method;

    /// Future desired samples needed per reference.
    fn preview(&self) -> usize;

    fn references(&self, desired: &[f64]) -> Result<Vec<f64>>;
}

/// The baseline system fed the desired trajectory directly.
pub struct Passthrough;

impl ReferenceStrategy for Passthrough {
    fn name(&self) -> &str {
        "baseline"
    }

    fn method(&self) -> Method {
        Method::Baseline
    }

    fn preview(&self) -> usize {
        0
    }

    fn references(&self, desired: &[f64]) -> Result<Vec<f64>> {
        Ok(desired.to_vec())
    }
}

/// A (possibly improper) inverse filter run with the desired trajectory held
/// at its last value past the end.
pub struct InverseFilter {
    name: String,
    method: Method,
    filter: DiscreteTransferFunction,
}

impl InverseFilter {
    pub fn new(name: impl Into<String>, method: Method, filter: DiscreteTransferFunction) -> Self {
        InverseFilter {
            name: name.into(),
            method,
            filter,
        }
    }

    /// ZOS inverse of the baseline's linear model.
    pub fn zos(name: impl Into<String>, baseline: &dyn BaselineSystem) -> Result<Self> {
        let filter = baseline.linear_model()?.zos_inverse()?;
        Ok(Self::new(name, Method::Zos, filter))
    }

    pub fn filter(&self) -> &DiscreteTransferFunction {
        &self.filter
    }
}

impl ReferenceStrategy for InverseFilter {
    fn name(&self) -> &str {
        &self.name
    }

    fn method(&self) -> Method {
        self.method
    }

    fn preview(&self) -> usize {
        self.filter.preview()
    }

    fn references(&self, desired: &[f64]) -> Result<Vec<f64>> {
        let Some(&last) = desired.last() else {
            return Ok(Vec::new());
        };
        let p = self.preview();
        let mut ext = desired.to_vec();
        ext.extend(std::iter::repeat_n(last, p));
        let mut u = self.filter.simulate(&ext, p)?;
        u.truncate(desired.len());
        Ok(u)
    }
}

pub struct LearnedInverse {
    name: String,
    method: Method,
    generator: Arc<ReferenceGenerator>,
}

impl LearnedInverse {
    pub fn new(
        name: impl Into<String>,
        method: Method,
        generator: Arc<ReferenceGenerator>,
    ) -> Self {
        LearnedInverse {
            name: name.into(),
            method,
            generator,
        }
    }

    pub fn generator(&self) -> &ReferenceGenerator {
        &self.generator
    }
}

impl ReferenceStrategy for LearnedInverse {
    fn name(&self) -> &str {
        &self.name
    }

    fn method(&self) -> Method {
        self.method
    }

    fn preview(&self) -> usize {
        self.generator.preview()
    }

    fn references(&self, desired: &[f64]) -> Result<Vec<f64>> {
        self.generator.generate_sequence(desired)
    }
}

/// Name-keyed store of shared trait objects.
pub struct Registry<T: ?Sized> {
    entries: BTreeMap<String, Arc<T>>,
    missing: fn(String) -> Error,
}

impl<T: ?Sized> Registry<T> {
    fn with_error(missing: fn(String) -> Error) -> Self {
        Registry {
            entries: BTreeMap::new(),
            missing,
        }
    }

    /// Replaces any entry with the same name.
    pub fn insert(&mut self, name: impl Into<String>, entry: Arc<T>) {
        self.entries.insert(name.into(), entry);
    }

    pub fn get(&self, name: &str) -> Result<Arc<T>> {
        self.entries
            .get(name)
            .cloned()
            .ok_or_else(|| (self.missing)(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Arc<T>)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub type StrategyRegistry = Registry<dyn ReferenceStrategy>;
pub type SystemRegistry = Registry<dyn BaselineSystem>;

impl StrategyRegistry {
    pub fn new() -> Self {
        Self::with_error(Error::UnknownStrategy)
    }

    pub fn register(&mut self, strategy: Arc<dyn ReferenceStrategy>) {
        self.insert(strategy.name().to_string(), strategy);
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        Self::new()
    }
}

impl SystemRegistry {
    pub fn new() -> Self {
        Self::with_error(Error::UnknownSystem)
    }

    pub fn register(&mut self, system: Arc<dyn BaselineSystem>) {
        self.insert(system.name().to_string(), system);
    }
}

impl Default for SystemRegistry {
    fn default() -> Self {
        Self::new()
    }
}
