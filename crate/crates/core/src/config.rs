//! Run configuration: JSON schema, validation and kernel-source assembly.
//!
//! Configs are strict: unknown keys are rejected so typos fail loudly before
//! any computation starts.

use std::path::Path;

use serde::Deserialize;

use crate::dynamics::{cosmology_kernel, CosmologyModel, HamiltonianParams, ScaleFactor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum KSpec {
    Single(f64),
    Grid { grid: Vec<f64> },
}

impl KSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            KSpec::Single(k) => vec![*k],
            KSpec::Grid { grid } => grid.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScaleFactorSpec {
    DeSitter {
        #[serde(default = "default_hubble")]
        hubble: f64,
    },
    PowerLaw {
        a0: f64,
        eta0: f64,
        power: f64,
    },
    /// CSV with columns eta, a, app (a''), linearly interpolated.
    Table { path: String },
}

fn default_hubble() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Cosmology {
        zeta: f64,
        lambda: f64,
        scale_factor: ScaleFactorSpec,
    },
    /// CSV with columns t, F1, F2, F12, phi, R1, R2, R12, Theta1, Theta2, xi,
    /// linearly interpolated between rows.
    Table { path: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Spectra,
    PurityGaussian,
    PurityPerturbative,
    PurityFock,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default = "default_gamma_flag")]
    pub gamma_flag: f64,
    #[serde(default = "default_distortion_flag")]
    pub distortion_flag: f64,
}

fn default_gamma_flag() -> f64 {
    0.5
}

fn default_distortion_flag() -> f64 {
    0.05
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            gamma_flag: default_gamma_flag(),
            distortion_flag: default_distortion_flag(),
        }
    }
}

fn default_methods() -> Vec<Method> {
    vec![Method::Spectra, Method::PurityGaussian]
}

fn default_seed() -> u64 {
    42
}

fn default_cutoff() -> usize {
    12
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub k: KSpec,
    pub time: TimeSpec,
    pub model: ModelSpec,
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)?;
        let cfg = Self::from_json(&text)?;
        Ok((cfg, text))
    }

    pub fn validate(&self) -> Result<()> {
        let ks = self.k.values();
        if ks.is_empty() {
            return Err(Error::Config("k grid is empty".into()));
        }
        if ks.iter().any(|&k| !(k > 0.0) || !k.is_finite()) {
            return Err(Error::Config("k values must be positive and finite".into()));
        }
        if !(self.time.end > self.time.start) {
            return Err(Error::Config(format!(
                "time.end ({}) must exceed time.start ({})",
                self.time.end, self.time.start
            )));
        }
        if self.time.steps == 0 {
            return Err(Error::Config("time.steps must be >= 1".into()));
        }
        if self.cutoff == 0 {
            return Err(Error::Config("cutoff must be >= 1".into()));
        }
        Ok(())
    }
}

/// A tabulated kernel: rows of (t, ten parameters), linearly interpolated.
#[derive(Debug, Clone)]
pub struct TabulatedKernel {
    rows: Vec<(f64, [f64; 10])>,
}

impl TabulatedKernel {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with('t') {
                continue;
            }
            let cells: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| {
                    Error::Config(format!("kernel table line {}: {e}", lineno + 1))
                })?;
            if cells.len() != 11 {
                return Err(Error::Config(format!(
                    "kernel table line {} has {} columns, expected 11",
                    lineno + 1,
                    cells.len()
                )));
            }
            let mut p = [0.0; 10];
            p.copy_from_slice(&cells[1..]);
            rows.push((cells[0], p));
        }
        if rows.len() < 2 {
            return Err(Error::Config("kernel table needs at least 2 rows".into()));
        }
        rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        Ok(TabulatedKernel { rows })
    }

    pub fn at(&self, t: f64) -> Result<HamiltonianParams> {
        let first = self.rows.first().unwrap();
        let last = self.rows.last().unwrap();
        if t < first.0 || t > last.0 {
            return Err(Error::Integration {
                t,
                reason: format!("outside kernel table range [{}, {}]", first.0, last.0),
            });
        }
        let pos = self.rows.partition_point(|r| r.0 <= t).min(self.rows.len() - 1);
        let (lo, hi) = (&self.rows[pos - 1], &self.rows[pos]);
        let w = if hi.0 > lo.0 {
            (t - lo.0) / (hi.0 - lo.0)
        } else {
            0.0
        };
        let mut v = [0.0; 10];
        for i in 0..10 {
            v[i] = lo.1[i] + w * (hi.1[i] - lo.1[i]);
        }
        Ok(HamiltonianParams {
            f1: v[0],
            f2: v[1],
            f12: v[2],
            phi: v[3],
            r1: v[4],
            r2: v[5],
            r12: v[6],
            theta1: v[7],
            theta2: v[8],
            xi: v[9],
        })
    }
}

fn load_scale_factor_table(path: &Path) -> Result<ScaleFactor> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('e') {
            continue;
        }
        let cells: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("scale-factor table line {}: {e}", lineno + 1)))?;
        if cells.len() != 3 {
            return Err(Error::Config(format!(
                "scale-factor table line {} has {} columns, expected eta, a, app",
                lineno + 1,
                cells.len()
            )));
        }
        rows.push((cells[0], cells[1], cells[2]));
    }
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(ScaleFactor::Table { rows })
}

/// A kernel source assembled from the model spec for one wavenumber.
pub enum KernelSource {
    Cosmology(CosmologyModel),
    Table(TabulatedKernel),
}

impl KernelSource {
    pub fn at(&self, t: f64) -> Result<HamiltonianParams> {
        match self {
            KernelSource::Cosmology(m) => cosmology_kernel(m, t),
            KernelSource::Table(tab) => tab.at(t),
        }
    }
}

/// Build the per-k kernel source; table paths are resolved relative to `base`.
pub fn build_kernel(model: &ModelSpec, k: f64, base: &Path) -> Result<KernelSource> {
    match model {
        ModelSpec::Cosmology {
            zeta,
            lambda,
            scale_factor,
        } => {
            let sf = match scale_factor {
                ScaleFactorSpec::DeSitter { hubble } => ScaleFactor::DeSitter { hubble: *hubble },
                ScaleFactorSpec::PowerLaw { a0, eta0, power } => ScaleFactor::PowerLaw {
                    a0: *a0,
                    eta0: *eta0,
                    power: *power,
                },
                ScaleFactorSpec::Table { path } => load_scale_factor_table(&base.join(path))?,
            };
            Ok(KernelSource::Cosmology(CosmologyModel {
                zeta: *zeta,
                lambda: *lambda,
                scale_factor: sf,
                k,
            }))
        }
        ModelSpec::Table { path } => Ok(KernelSource::Table(TabulatedKernel::load(
            &base.join(path),
        )?)),
    }
}

/// Hex SHA-256 of the raw config text, stamped into every output file.
pub fn config_hash(text: &str) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{
        "k": 1.0,
        "time": {"start": -8.0, "end": -0.5, "steps": 100},
        "model": {"type": "cosmology", "zeta": 0.1666666666666667, "lambda": 0.0,
                  "scale_factor": {"type": "de_sitter", "hubble": 1.0}}
    }"#;

    #[test]
    fn good_config_parses() {
        let cfg = RunConfig::from_json(GOOD).unwrap();
        assert_eq!(cfg.k.values(), vec![1.0]);
        assert_eq!(cfg.cutoff, 12);
        assert_eq!(cfg.seed, 42);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = GOOD.replace("\"k\": 1.0", "\"k\": 1.0, \"extra\": 3");
        assert!(matches!(RunConfig::from_json(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn empty_k_grid_rejected() {
        let bad = GOOD.replace("\"k\": 1.0", "\"k\": {\"grid\": []}");
        assert!(matches!(RunConfig::from_json(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn bad_time_rejected() {
        let bad = GOOD.replace("\"end\": -0.5", "\"end\": -9.0");
        assert!(matches!(RunConfig::from_json(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(config_hash("abc"), config_hash("abc"));
        assert_ne!(config_hash("abc"), config_hash("abd"));
    }
}
