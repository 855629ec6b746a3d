//! Curve input files: the piecewise linear maps `φ₁, …, φ_{d-1}` and a window.

use std::path::Path;

use posharm::curves::{PiecewiseMonotone, PositiveCurve};
use serde::{Deserialize, Serialize};

use crate::config::ConfigError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveFile {
    pub d: usize,
    pub window: [f64; 2],
    pub breakpoints: Breakpoints,
    /// `values[i]` holds `φᵢ` at its breakpoints.
    pub values: Vec<Vec<f64>>,
}

/// One breakpoint list shared by every map, or one list per map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Breakpoints {
    Shared(Vec<f64>),
    PerMap(Vec<Vec<f64>>),
}

fn bad(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError { path: path.into(), message: message.into() }
}

impl CurveFile {
    /// Every `φᵢ` the identity on `[-t, t]`.
    pub fn identity(d: usize, t: f64) -> Self {
        let grid = vec![-t, 0.0, 1.0, t];
        Self { d, window: [-t, t], breakpoints: Breakpoints::Shared(grid.clone()), values: vec![grid; d - 1] }
    }

    /// The knots of a built curve with the values of every `φᵢ` there.
    pub fn from_curve<const D: usize>(curve: &PositiveCurve<D>) -> Self {
        let knots = curve.knots().to_vec();
        let values = (0..D - 1).map(|i| knots.iter().map(|&t| curve.phi(i, t)).collect()).collect();
        let (lo, hi) = curve.window();
        Self { d: D, window: [lo, hi], breakpoints: Breakpoints::Shared(knots), values }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad("curve", format!("{}: {e}", path.display())))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.path().to_string();
            bad(if inner == "." { "curve".into() } else { format!("curve.{inner}") }, e.into_inner().to_string())
        })
    }

    pub fn maps(&self, d: usize) -> Result<Vec<PiecewiseMonotone>, ConfigError> {
        if self.d != d {
            return Err(bad("curve.d", format!("curve file is for d = {}, run is for d = {d}", self.d)));
        }
        if self.values.len() != d - 1 {
            return Err(bad("curve.values", format!("need {} maps, found {}", d - 1, self.values.len())));
        }
        let [lo, hi] = self.window;
        if !(lo < 0.0 && hi > 1.0 && lo.is_finite() && hi.is_finite()) {
            return Err(bad("curve.window", "must be finite and contain [0, 1]"));
        }
        (0..d - 1)
            .map(|i| {
                let bp = match &self.breakpoints {
                    Breakpoints::Shared(b) => b.clone(),
                    Breakpoints::PerMap(b) => {
                        b.get(i).cloned().ok_or_else(|| bad("curve.breakpoints", format!("missing list {i}")))?
                    }
                };
                PiecewiseMonotone::new(bp, self.values[i].clone())
                    .map_err(|e| bad(format!("curve.values[{i}]"), e.to_string()))
            })
            .collect()
    }
}
