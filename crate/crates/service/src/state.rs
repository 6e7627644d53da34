use nmpinv_core::config::{RunConfig, ServiceConfig, SystemConfig};
use nmpinv_core::experiment::{build_registry, build_system, ArtifactBundle};
use nmpinv_core::plantsim::BaselineSystem;
use nmpinv_core::strategy::StrategyRegistry;
use nmpinv_core::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

pub struct SystemEntry {
    pub system: Arc<dyn BaselineSystem>,
    pub registry: StrategyRegistry,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArtifactInfo {
    pub path: PathBuf,
    pub sha256: String,
    pub system: String,
    pub generators: Vec<String>,
}

/// Immutable snapshot shared by in-flight requests.
pub struct Loaded {
    pub systems: BTreeMap<String, SystemEntry>,
    pub artifacts: Vec<ArtifactInfo>,
}

impl Loaded {
    /// Preset systems with baseline and ZOS, then every artifact bundle on top.
    pub fn from_paths(paths: &[PathBuf]) -> Result<Self> {
        let mut systems = BTreeMap::new();
        for preset in ["pendulum_sim", "quad_surrogate"] {
            let cfg = RunConfig::preset(preset)?;
            systems.insert(cfg.system.name().to_string(), entry(&cfg.system, None)?);
        }
        let mut artifacts = Vec::new();
        for path in paths {
            let bytes = std::fs::read(path)?;
            let bundle = ArtifactBundle::from_json(&String::from_utf8_lossy(&bytes))?;
            let name = bundle.system.name().to_string();
            log::info!(
                "loaded {} generator(s) for {name} from {}",
                bundle.generators.len(),
                path.display()
            );
            artifacts.push(ArtifactInfo {
                path: path.clone(),
                sha256: hex::encode(Sha256::digest(&bytes)),
                system: name.clone(),
                generators: bundle.generators.iter().map(|g| g.name.clone()).collect(),
            });
            systems.insert(name, entry(&bundle.system, Some(&bundle))?);
        }
        Ok(Loaded { systems, artifacts })
    }
}

fn entry(cfg: &SystemConfig, bundle: Option<&ArtifactBundle>) -> Result<SystemEntry> {
    let system = build_system(cfg)?;
    let registry = build_registry(system.as_ref(), bundle);
    Ok(SystemEntry { system, registry })
}

#[derive(Clone)]
pub struct AppState {
    loaded: Arc<RwLock<Arc<Loaded>>>,
    pub config: Arc<ServiceConfig>,
}

impl AppState {
    pub fn load(config: ServiceConfig) -> Result<Self> {
        let loaded = Loaded::from_paths(&config.artifacts)?;
        Ok(AppState {
            loaded: Arc::new(RwLock::new(Arc::new(loaded))),
            config: Arc::new(config),
        })
    }

    pub fn snapshot(&self) -> Arc<Loaded> {
        self.loaded
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .clone()
    }

    /// Re-reads the artifact files; the old snapshot stays in place on failure.
    pub fn reload(&self) -> Result<()> {
        let fresh = Loaded::from_paths(&self.config.artifacts)?;
        *self.loaded.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(fresh);
        Ok(())
    }
}
