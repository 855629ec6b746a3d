//! Run configuration: one JSON document, validated after flag overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub d: usize,
    /// Curve input file; without one every φᵢ is the identity.
    pub curve: Option<PathBuf>,
    /// Half-width `T` of the curve window `[-T, T]`. Overrides the window of
    /// a curve file when set.
    pub window: Option<f64>,
    pub center: [f64; 2],
    /// Disk radius for single-disk runs, circle radius for certificates.
    pub radius: f64,
    pub delta: f64,
    pub radii: Vec<f64>,
    pub section: SectionName,
    pub m_hat: f64,
    pub quadrature: Quadrature,
    pub tolerances: Tolerances,
    pub seed: u64,
    /// Where a run writes is not part of what it computes, so it stays out
    /// of reports and the hash.
    #[serde(skip_serializing)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SectionName {
    Standard,
    Symmetric,
}

/// Sample and quadrature sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Quadrature {
    /// Circle averages use `2n` points and are compared against `n`.
    pub circle_n: usize,
    pub ideal_samples: usize,
    pub refine: usize,
    pub mollify_pairs: usize,
    pub constant_pairs: usize,
    pub morse_geodesics: usize,
    pub morse_samples: usize,
    pub selftest_samples: usize,
    pub qs_grid: usize,
    pub subspaces: usize,
    pub curve_samples: usize,
    pub diagnostic_pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub solver: f64,
    pub max_sweeps: usize,
    pub busemann_horizon: f64,
    pub busemann: f64,
    pub inequality: f64,
    pub max_principle: f64,
    pub subharmonic: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            d: 3,
            curve: None,
            window: None,
            center: [0.0, 1.0],
            radius: 2.0,
            delta: 0.1,
            radii: vec![2.0, 4.0, 6.0],
            section: SectionName::Standard,
            m_hat: 1.0,
            quadrature: Quadrature::default(),
            tolerances: Tolerances::default(),
            seed: 0,
            out: PathBuf::from("out"),
        }
    }
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            circle_n: 128,
            ideal_samples: 64,
            refine: 64,
            mollify_pairs: 4,
            constant_pairs: 400,
            morse_geodesics: 16,
            morse_samples: 17,
            selftest_samples: 1000,
            qs_grid: 24,
            subspaces: 100,
            curve_samples: 2000,
            diagnostic_pairs: 200,
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            solver: 1e-8,
            max_sweeps: 100_000,
            busemann_horizon: 1e3,
            busemann: 1e-6,
            inequality: 1e-9,
            max_principle: 1e-8,
            subharmonic: 1e-6,
        }
    }
}

/// Invalid configuration, located by a dotted field path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config at `{}`: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn bad(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { path: path.into(), message: message.into() }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            bad(if path == "." { "<root>" } else { &path }, e.into_inner().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad("<file>", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(2..=6).contains(&self.d) {
            return Err(bad("d", format!("must lie in 2..=6, got {}", self.d)));
        }
        if let Some(t) = self.window {
            if !(t > 1.0 && t.is_finite()) {
                return Err(bad("window", "must be finite and greater than 1"));
            }
        }
        if self.center[1] <= 0.0 || !self.center.iter().all(|c| c.is_finite()) {
            return Err(bad("center", "must be a finite point with positive imaginary part"));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(bad("radius", "must be positive"));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(bad("delta", "must be positive"));
        }
        if self.radii.is_empty() {
            return Err(bad("radii", "must not be empty"));
        }
        for (i, r) in self.radii.iter().enumerate() {
            if !(*r > 0.0 && r.is_finite()) {
                return Err(bad(&format!("radii[{i}]"), "must be positive"));
            }
            if i > 0 && *r <= self.radii[i - 1] {
                return Err(bad(&format!("radii[{i}]"), "radii must be increasing"));
            }
        }
        if !(self.m_hat > 0.0 && self.m_hat.is_finite()) {
            return Err(bad("m_hat", "must be positive"));
        }
        let q = &self.quadrature;
        for (name, v) in [
            ("circle_n", q.circle_n),
            ("ideal_samples", q.ideal_samples),
            ("mollify_pairs", q.mollify_pairs),
            ("constant_pairs", q.constant_pairs),
            ("morse_geodesics", q.morse_geodesics),
            ("selftest_samples", q.selftest_samples),
            ("subspaces", q.subspaces),
        ] {
            if v == 0 {
                return Err(bad(&format!("quadrature.{name}"), "must be positive"));
            }
        }
        if q.morse_samples < 2 {
            return Err(bad("quadrature.morse_samples", "must be at least 2"));
        }
        if q.qs_grid < 2 {
            return Err(bad("quadrature.qs_grid", "must be at least 2"));
        }
        if q.curve_samples < 3 {
            return Err(bad("quadrature.curve_samples", "must be at least 3"));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("solver", t.solver),
            ("busemann_horizon", t.busemann_horizon),
            ("busemann", t.busemann),
            ("inequality", t.inequality),
            ("max_principle", t.max_principle),
            ("subharmonic", t.subharmonic),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(&format!("tolerances.{name}"), "must be positive"));
            }
        }
        if t.max_sweeps == 0 {
            return Err(bad("tolerances.max_sweeps", "must be positive"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}
