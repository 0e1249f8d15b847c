use std::path::{Path, PathBuf};

use gmwm::io::SchemaRegistry;
use gmwm::FitOptions;
use serde::Deserialize;

use crate::args::{EstimationArgs, GlobalArgs};
use crate::error::{CliError, CliResult};

/// Defaults read from the configuration file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub freq: Option<f64>,
    pub robust: Option<bool>,
    pub eff: Option<f64>,
    pub threads: Option<usize>,
    pub imu_type: Option<String>,
    pub schemas: Option<PathBuf>,
    pub levels: Option<usize>,
    pub guesses: Option<usize>,
    pub bootstrap: Option<usize>,
    pub restarts: Option<usize>,
    pub alpha: Option<f64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: ConfigFile =
            toml::from_str(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        // a relative schema path is relative to the config file
        if let (Some(s), Some(dir)) = (&cfg.schemas, path.parent()) {
            if s.is_relative() {
                cfg.schemas = Some(dir.join(s));
            }
        }
        Ok(cfg)
    }
}

/// Flags merged over the configuration file.
#[derive(Debug)]
pub struct Settings {
    pub seed: u64,
    pub freq: Option<f64>,
    pub robust: bool,
    pub eff: f64,
    pub json: bool,
    pub threads: Option<usize>,
    pub imu_type: Option<String>,
    pub registry: SchemaRegistry,
    pub output: Option<PathBuf>,
    file: ConfigFile,
}

impl Settings {
    pub fn new(g: &GlobalArgs) -> CliResult<Self> {
        let file = match &g.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let mut registry = SchemaRegistry::builtin();
        for p in file.schemas.iter().chain(&g.schemas) {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::usage(format!("cannot read schema file {}: {e}", p.display())))?;
            registry.merge_json(&text)?;
        }
        let eff = g.eff.or(file.eff).unwrap_or(0.6);
        if !(eff > 0.5 && eff <= 1.0) {
            return Err(CliError::usage(format!("--eff must lie in (0.5, 1], got {eff}")));
        }
        if let Some(f) = g.freq.or(file.freq) {
            if !(f > 0.0 && f.is_finite()) {
                return Err(CliError::usage(format!("--freq must be positive, got {f}")));
            }
        }
        Ok(Settings {
            seed: g.seed.or(file.seed).unwrap_or(0),
            freq: g.freq.or(file.freq),
            robust: g.robust || file.robust.unwrap_or(false),
            eff,
            json: g.json,
            threads: g.threads.or(file.threads),
            imu_type: file.imu_type.clone(),
            registry,
            output: g.output.clone(),
            file,
        })
    }

    /// The efficiency passed to the WV estimators: `None` when classical.
    pub fn efficiency(&self) -> Option<f64> {
        self.robust.then_some(self.eff)
    }

    pub fn fit_options(&self, e: &EstimationArgs) -> FitOptions {
        let d = FitOptions::default();
        FitOptions {
            robust: self.robust,
            efficiency: self.eff,
            guesses: e.guesses.or(self.file.guesses).unwrap_or(d.guesses),
            bootstrap: e.bootstrap.or(self.file.bootstrap).unwrap_or(d.bootstrap),
            seed: self.seed,
            levels: e.levels.or(self.file.levels),
            alpha: e.alpha.or(self.file.alpha).unwrap_or(d.alpha),
            restarts: e.restarts.or(self.file.restarts).unwrap_or(d.restarts),
        }
    }

    pub fn levels(&self, flag: Option<usize>) -> Option<usize> {
        flag.or(self.file.levels)
    }

    pub fn alpha(&self, flag: Option<f64>) -> f64 {
        flag.or(self.file.alpha).unwrap_or(0.05)
    }
}
