//! Versioned TOML job files.
//!
//! ```toml
//! version = 1
//! out_dir = "out"
//!
//! [polynomial]
//! alpha = "-1.3+2.1i+0.17j-0.31k"
//! beta = "1.4+0.7i-0.23j+0.28k"
//!
//! [[job]]
//! tracing = "invariant_plane:0"
//! method = "halley"
//! resolution = 100
//! ```
//!
//! The polynomial is given either by its coefficients (`b`, `c`) or by two
//! prescribed roots (`alpha`, `beta`), never both.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::iterfun::{IterationMethod, DEFAULT_CAP, DEFAULT_STOP_TOL};
use crate::qpoly::QuadraticPoly;
use crate::quat::Quaternion;
use crate::render::{Palette, RenderJob, Tracing, DEFAULT_HYBRID_EPS, DEFAULT_RESOLUTION};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read `{path}`: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialize config: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("unsupported config version {0} (expected {CONFIG_VERSION})")]
    Version(u32),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Quaternion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Quaternion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Quaternion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Quaternion>,
}

fn same(a: Option<Quaternion>, b: Option<Quaternion>) -> bool {
    a.map(|q| q.to_array().map(f64::to_bits)) == b.map(|q| q.to_array().map(f64::to_bits))
}

/// Bitwise equality of the given quaternions.
impl PartialEq for PolySpec {
    fn eq(&self, o: &Self) -> bool {
        same(self.b, o.b) && same(self.c, o.c) && same(self.alpha, o.alpha) && same(self.beta, o.beta)
    }
}

impl PolySpec {
    pub fn coefficients(b: Quaternion, c: Quaternion) -> Self {
        PolySpec {
            b: Some(b),
            c: Some(c),
            ..Default::default()
        }
    }

    pub fn roots(alpha: Quaternion, beta: Quaternion) -> Self {
        PolySpec {
            alpha: Some(alpha),
            beta: Some(beta),
            ..Default::default()
        }
    }

    /// The polynomial, and its roots when they were prescribed.
    pub fn resolve(&self) -> Result<(QuadraticPoly, Option<Vec<Quaternion>>), ConfigError> {
        match (self.b, self.c, self.alpha, self.beta) {
            (Some(b), Some(c), None, None) => Ok((QuadraticPoly::new(b, c), None)),
            (None, None, Some(a), Some(z)) => {
                let p = QuadraticPoly::from_roots(a, z).map_err(|e| ConfigError::Invalid(e.to_string()))?;
                Ok((p, Some(vec![a, z])))
            }
            _ => Err(ConfigError::Invalid(
                "polynomial needs exactly one of {b, c} or {alpha, beta}".into(),
            )),
        }
    }
}

fn default_stop_tol() -> f64 {
    DEFAULT_STOP_TOL
}
fn default_cap() -> usize {
    DEFAULT_CAP
}
fn default_true() -> bool {
    true
}
fn default_resolution() -> usize {
    DEFAULT_RESOLUTION
}
fn default_hybrid_eps() -> f64 {
    DEFAULT_HYBRID_EPS
}
fn default_repetitions() -> usize {
    3
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub tracing: Tracing,
    pub method: IterationMethod,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub center: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(default)]
    pub palette: Palette,
    #[serde(default = "default_stop_tol")]
    pub stop_tol: f64,
    #[serde(default = "default_cap")]
    pub cap: usize,
    #[serde(default = "default_true")]
    pub cycle_check: bool,
    #[serde(default = "default_hybrid_eps")]
    pub hybrid_eps: f64,
}

impl JobSpec {
    pub fn new(tracing: Tracing, method: IterationMethod) -> Self {
        JobSpec {
            tracing,
            method,
            resolution: DEFAULT_RESOLUTION,
            center: [0.0, 0.0],
            half_width: None,
            palette: Palette::Classic,
            stop_tol: DEFAULT_STOP_TOL,
            cap: DEFAULT_CAP,
            cycle_check: true,
            hybrid_eps: DEFAULT_HYBRID_EPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub version: u32,
    pub polynomial: PolySpec,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Worker threads per render; 0 lets the pool decide.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_repetitions")]
    pub timing_repetitions: usize,
    /// Also write a PNG next to every PPM.
    #[serde(default)]
    pub png: bool,
    #[serde(default, rename = "job")]
    pub jobs: Vec<JobSpec>,
}

impl Config {
    pub fn new(polynomial: PolySpec) -> Self {
        Config {
            version: CONFIG_VERSION,
            polynomial,
            out_dir: default_out_dir(),
            workers: 0,
            timing_repetitions: default_repetitions(),
            png: false,
            jobs: Vec::new(),
        }
    }

    /// The full table matrix: every table tracing with every method.
    pub fn with_table_jobs(mut self, resolution: usize) -> Self {
        for tracing in Tracing::TABLE {
            for method in IterationMethod::ALL {
                let mut job = JobSpec::new(tracing, method);
                job.resolution = resolution;
                self.jobs.push(job);
            }
        }
        self
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: Config = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.version != CONFIG_VERSION {
            return Err(ConfigError::Version(self.version));
        }
        if self.timing_repetitions < 3 {
            return Err(ConfigError::Invalid("timing_repetitions must be at least 3".into()));
        }
        self.render_jobs().map(|_| ())
    }

    pub fn render_jobs(&self) -> Result<Vec<RenderJob>, ConfigError> {
        let (poly, roots) = self.polynomial.resolve()?;
        self.jobs
            .iter()
            .map(|spec| {
                let job = RenderJob {
                    poly,
                    roots: roots.clone(),
                    method: spec.method,
                    tracing: spec.tracing,
                    center: spec.center,
                    half_width: spec.half_width,
                    resolution: spec.resolution,
                    stop_tol: spec.stop_tol,
                    cap: spec.cap,
                    cycle_check: spec.cycle_check,
                    hybrid_eps: spec.hybrid_eps,
                    palette: spec.palette,
                };
                job.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
                Ok(job)
            })
            .collect()
    }
}
