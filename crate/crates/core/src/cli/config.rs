//! Run configuration: a versioned TOML file.
//!
//! ```toml
//! version = 1
//! incidence = "left"
//!
//! [profile]
//! convention = "direct"          # "matter" (V), "optical" (n) or "direct" (U)
//! left = 2.0
//! right = 2.0
//! slabs = [{ x = 0.0, width = 1.0, value = 1.0 }]
//!
//! [energies]
//! values = [0.0]                 # or [energies.sweep] start/stop/count
//!
//! [[transforms]]
//! sigma = -1
//! rho = 1.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::potential::{Convention, Landscape, PotentialProfile, Slab, SymmetryTransform};
use crate::solver::Incidence;

pub const SCHEMA_VERSION: u32 = 1;

/// Errors found while reading or validating a configuration.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("{field}: {source}")]
    Physics {
        field: String,
        #[source]
        source: crate::Error,
    },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default)]
    pub incidence: Incidence,
    pub profile: ProfileSpec,
    #[serde(default)]
    pub energies: EnergySpec,
    #[serde(default)]
    pub transforms: Vec<TransformSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<BandSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    #[serde(default)]
    pub convention: Convention,
    /// Asymptotic value left of the scatterer (`V`, `n` or `U`).
    pub left: f64,
    pub right: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slabs: Vec<SlabSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smooth: Option<SmoothSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlabSpec {
    pub x: f64,
    pub width: f64,
    pub value: f64,
}

/// A smooth profile `baseline + Σ terms(x)` on `[start, stop]`, replaced by
/// slabs of width `step` carrying the value at their midpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    #[serde(default)]
    pub baseline: f64,
    pub terms: Vec<SmoothTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SmoothTerm {
    /// `amplitude · exp(-(x - center)² / (2 width²))`
    Gaussian { amplitude: f64, center: f64, width: f64 },
    /// `amplitude · sech²((x - center) / width)`
    Sech2 { amplitude: f64, center: f64, width: f64 },
    /// `amplitude · cos(2π (x - origin) / period)`
    Cosine { amplitude: f64, origin: f64, period: f64 },
}

impl SmoothTerm {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            SmoothTerm::Gaussian { amplitude, center, width } => {
                amplitude * (-(x - center).powi(2) / (2.0 * width * width)).exp()
            }
            SmoothTerm::Sech2 { amplitude, center, width } => {
                amplitude / ((x - center) / width).cosh().powi(2)
            }
            SmoothTerm::Cosine { amplitude, origin, period } => {
                amplitude * (2.0 * std::f64::consts::PI * (x - origin) / period).cos()
            }
        }
    }
}

impl SmoothSpec {
    pub fn eval(&self, x: f64) -> f64 {
        self.baseline + self.terms.iter().map(|t| t.eval(x)).sum::<f64>()
    }

    /// Midpoint-sampled slabs; the last slab is shortened to end at `stop`.
    pub fn discretize(&self) -> Vec<Slab> {
        let count = ((self.stop - self.start) / self.step).ceil() as usize;
        (0..count)
            .map(|i| {
                let a = self.start + self.step * i as f64;
                let b = if i + 1 == count { self.stop } else { self.start + self.step * (i + 1) as f64 };
                Slab::new(a, b - a, self.eval(0.5 * (a + b)))
            })
            .filter(|s| s.width > 0.0)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
}

impl Default for EnergySpec {
    fn default() -> Self {
        Self {
            values: Some(vec![0.0]),
            sweep: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl EnergySpec {
    /// Explicit energies, or the sweep with both endpoints included.
    pub fn list(&self) -> Vec<f64> {
        if let Some(values) = &self.values {
            return values.clone();
        }
        match self.sweep {
            Some(Sweep { start, count: 1, .. }) => vec![start],
            Some(Sweep { start, stop, count }) => (0..count)
                .map(|i| {
                    if i + 1 == count {
                        stop
                    } else {
                        start + (stop - start) * i as f64 / (count - 1) as f64
                    }
                })
                .collect(),
            None => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformSpec {
    pub sigma: i32,
    pub rho: f64,
}

impl TransformSpec {
    pub fn to_transform(&self) -> crate::Result<SymmetryTransform> {
        SymmetryTransform::new(self.sigma, self.rho)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// `tol_u` relative to `max |U|`.
    pub tol_u_rel: f64,
    /// Minimum symmetry-domain width relative to the scatterer width.
    pub min_width_rel: f64,
    /// Relative spread below which `Q`, `Q̃` count as constant.
    pub constancy: f64,
    /// Relative `|J|` below which the field mapping is refused.
    pub zero_current_rel: f64,
    /// Samples per domain component.
    pub n_samples: usize,
    /// Grid step of field-based detection.
    pub grid_step: f64,
    /// Relative window spread of field-based detection.
    pub field_tol: f64,
    /// Points of x-resolved CSV output.
    pub field_points: usize,
    /// Bounding-box padding; two average slab widths when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pad: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_u_rel: crate::potential::DEFAULT_TOL_U_REL,
            min_width_rel: crate::detector::DEFAULT_MIN_WIDTH_REL,
            constancy: crate::invariants::DEFAULT_CONSTANCY_TOL,
            zero_current_rel: crate::invariants::ZERO_CURRENT_REL,
            n_samples: crate::invariants::DEFAULT_SAMPLES,
            grid_step: 0.01,
            field_tol: 1e-9,
            field_points: 401,
            pad: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandSpec {
    pub cell_start: f64,
    pub cell_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

impl RunConfig {
    /// Parses and validates TOML text. `origin` labels diagnostics.
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Schema {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Serializes with every default made explicit.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn landscape(&self) -> Landscape {
        let slabs = match &self.profile.smooth {
            Some(smooth) => smooth.discretize(),
            None => self
                .profile
                .slabs
                .iter()
                .map(|s| Slab::new(s.x, s.width, s.value))
                .collect(),
        };
        Landscape {
            convention: self.profile.convention,
            slabs,
            left: self.profile.left,
            right: self.profile.right,
        }
    }

    pub fn energies(&self) -> Vec<f64> {
        self.energies.list()
    }

    pub fn transforms(&self) -> Vec<SymmetryTransform> {
        self.transforms
            .iter()
            .map(|t| t.to_transform().expect("validated transform"))
            .collect()
    }

    /// Profile at the `index`-th energy.
    pub fn profile_at(&self, energy: f64) -> crate::Result<PotentialProfile> {
        self.landscape().at_energy(energy)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.version != SCHEMA_VERSION {
            return Err(invalid(
                "version",
                format!("unsupported schema version {} (expected {SCHEMA_VERSION})", self.version),
            ));
        }
        match (&self.profile.smooth, self.profile.slabs.is_empty()) {
            (Some(_), false) => return Err(invalid("profile", "give either `slabs` or `smooth`, not both")),
            (Some(smooth), true) => {
                if !(smooth.step > 0.0) || !smooth.step.is_finite() {
                    return Err(invalid("profile.smooth.step", "discretization step must be > 0"));
                }
                if !(smooth.stop > smooth.start) {
                    return Err(invalid("profile.smooth", "stop must exceed start"));
                }
            }
            _ => {}
        }
        match (&self.energies.values, &self.energies.sweep) {
            (Some(_), Some(_)) => return Err(invalid("energies", "give either `values` or `sweep`, not both")),
            (None, None) => return Err(invalid("energies", "no energies given")),
            (Some(v), None) if v.is_empty() => return Err(invalid("energies.values", "empty list")),
            (None, Some(s)) if s.count < 1 => return Err(invalid("energies.sweep.count", "count must be >= 1")),
            _ => {}
        }
        for (i, t) in self.transforms.iter().enumerate() {
            t.to_transform()
                .map_err(|e| invalid(&format!("transforms[{i}]"), e.to_string()))?;
        }
        let tol = &self.tolerances;
        if tol.n_samples < 2 {
            return Err(invalid("tolerances.n_samples", "need at least 2 samples"));
        }
        if tol.field_points < 2 {
            return Err(invalid("tolerances.field_points", "need at least 2 points"));
        }
        if !(tol.grid_step > 0.0) {
            return Err(invalid("tolerances.grid_step", "must be > 0"));
        }
        for (name, v) in [
            ("tol_u_rel", tol.tol_u_rel),
            ("min_width_rel", tol.min_width_rel),
            ("constancy", tol.constancy),
            ("zero_current_rel", tol.zero_current_rel),
            ("field_tol", tol.field_tol),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(&format!("tolerances.{name}"), "must be finite and >= 0"));
            }
        }
        if let Some(band) = &self.band {
            if !(band.cell_end > band.cell_start) {
                return Err(invalid("band", "cell_end must exceed cell_start"));
            }
        }
        // physical preconditions at every requested energy
        for (i, e) in self.energies().into_iter().enumerate() {
            self.profile_at(e).map_err(|source| ConfigError::Physics {
                field: format!("profile at energies[{i}] = {e}"),
                source,
            })?;
        }
        Ok(())
    }
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    RunConfig::from_toml_str(&text, &path.display().to_string())
}
