//! The JSON experiment config. Unknown keys are rejected; every error names
//! the field it came from.

use serde::{Deserialize, Serialize};

use crate::band::VolatilityBand;
use crate::convexity::ScanSpec;
use crate::expr::ScalarFunction;
use crate::gbsde::{BsdeOptions, GeneratorPair};
use crate::grid::{SpaceTimeGrid, MAX_THETA};

pub const SCHEMA_VERSION: u32 = 1;
pub const RNG_ALGORITHM: &str = "xoshiro256++";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl ToString) -> Self {
        Self { field: field.into(), message: message.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandConfig {
    pub sigma_min_sq: f64,
    pub sigma_max_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub horizon: f64,
    /// Defaults to `6σ̄√T`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    /// Space nodes, odd.
    pub nodes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Explicit step count; otherwise the smallest CFL-compliant one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nt: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub g: String,
    pub f: String,
    pub lipschitz: f64,
    #[serde(default)]
    pub h6: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub y_range: (f64, f64),
    pub z_range: (f64, f64),
    pub resolution: usize,
    #[serde(default)]
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub value: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub band: BandConfig,
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminal: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_list: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub picard: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expectation>,
}

/// A config with every present field parsed and checked.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub band: VolatilityBand,
    pub grid: SpaceTimeGrid,
    pub generator: GeneratorPair,
    pub h: Option<ScalarFunction>,
    pub phi: Option<ScalarFunction>,
    pub terminal: Option<ScalarFunction>,
    pub scan: Option<ScanSpec>,
    pub threads: usize,
    pub bsde: BsdeOptions,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." { "config".to_string() } else { path };
            ConfigError::new(field, e.into_inner())
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::new(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        let band = VolatilityBand::new(self.band.sigma_min_sq, self.band.sigma_max_sq)
            .map_err(|e| ConfigError::new("band", e))?;
        let grid = self.build_grid(&band)?;

        let generator = match &self.generator {
            None => GeneratorPair::zero(),
            Some(gc) => {
                let g = crate::expr::TriFunction::parse(&gc.g).map_err(|e| ConfigError::new("generator.g", e))?;
                let f = crate::expr::TriFunction::parse(&gc.f).map_err(|e| ConfigError::new("generator.f", e))?;
                GeneratorPair::new(g, f, gc.lipschitz)
                    .map_err(|e| ConfigError::new("generator.lipschitz", e))?
                    .with_h6(gc.h6)
            }
        };
        let func = |name: &str, src: &Option<String>| -> Result<Option<ScalarFunction>, ConfigError> {
            src.as_deref()
                .map(|s| ScalarFunction::parse(s).map_err(|e| ConfigError::new(name, e)))
                .transpose()
        };
        let h = func("h", &self.h)?;
        let phi = func("phi", &self.phi)?;
        let terminal = func("terminal", &self.terminal)?;

        let horizon = grid.horizon();
        for (name, v) in [("s", self.s), ("t", self.t)] {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0 && v <= horizon) {
                    return Err(ConfigError::new(name, format!("must lie in [0, {horizon}], got {v}")));
                }
            }
        }
        if let (Some(s), Some(t)) = (self.s, self.t) {
            if s > t {
                return Err(ConfigError::new("s", format!("s = {s} exceeds t = {t}")));
            }
        }
        if let Some(eps) = &self.eps_list {
            if eps.len() < 3 || eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
                return Err(ConfigError::new("eps_list", "need at least three positive, strictly decreasing values"));
            }
        }
        let scan = match &self.scan {
            None => None,
            Some(sc) => {
                let spec = ScanSpec { t: sc.t, y_range: sc.y_range, z_range: sc.z_range, resolution: sc.resolution };
                spec.validate().map_err(|e| ConfigError::new("scan", e))?;
                Some(spec)
            }
        };
        if let Some(rng) = &self.rng {
            if rng != RNG_ALGORITHM {
                return Err(ConfigError::new("rng", format!("unsupported generator '{rng}', expected '{RNG_ALGORITHM}'")));
            }
        }
        if self.tree_steps == Some(0) {
            return Err(ConfigError::new("tree_steps", "must be >= 1"));
        }
        let threads = self.threads.unwrap_or(1);
        if threads == 0 {
            return Err(ConfigError::new("threads", "must be >= 1"));
        }
        let mut bsde = BsdeOptions { threads, ..BsdeOptions::default() };
        if let Some(p) = self.picard {
            bsde.picard = p;
        }
        if let Some(c) = self.envelope {
            if !(c.is_finite() && c > 0.0) {
                return Err(ConfigError::new("envelope", format!("must be positive, got {c}")));
            }
            bsde.envelope = c;
        }
        if let Some(ex) = &self.expect {
            if !(ex.value.is_finite() && ex.tol.is_finite() && ex.tol >= 0.0) {
                return Err(ConfigError::new("expect", "value and tol must be finite, tol >= 0"));
            }
        }
        Ok(Resolved { band, grid, generator, h, phi, terminal, scan, threads, bsde })
    }

    fn build_grid(&self, band: &VolatilityBand) -> Result<SpaceTimeGrid, ConfigError> {
        let gc = &self.grid;
        let err = |e: crate::error::Error| ConfigError::new("grid", e);
        let half = gc.half_width.unwrap_or(6.0 * band.sigma_max() * gc.horizon.max(0.0).sqrt());
        let theta = gc.theta.unwrap_or(MAX_THETA);
        let grid = match gc.nt {
            None => SpaceTimeGrid::cfl_matched(band, gc.horizon, half, gc.nodes, theta).map_err(err)?,
            Some(nt) => {
                if gc.nodes < 4 {
                    return Err(ConfigError::new("grid.nodes", "need at least 4 nodes"));
                }
                let grid = SpaceTimeGrid::new(gc.horizon, -half, half, gc.nodes - 1, nt).map_err(err)?;
                grid.check_cfl(band).map_err(err)?;
                grid
            }
        };
        Ok(grid)
    }
}
