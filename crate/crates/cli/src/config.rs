use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use rtdiff_core::observables::Observable;
use rtdiff_core::IntervalMap;

/// Raised for anything wrong with the configuration file itself.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn invalid(field: &str, msg: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("field '{field}': {msg}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapDesc {
    Rotation { alpha: f64 },
    RotationRational { p: u64, q: u64 },
    LinearMod { k: u32 },
}

impl MapDesc {
    pub fn build(&self) -> Result<IntervalMap, ConfigError> {
        match *self {
            MapDesc::Rotation { alpha } => IntervalMap::rotation(alpha),
            MapDesc::RotationRational { p, q } => IntervalMap::rotation_rational(p, q),
            MapDesc::LinearMod { k } => IntervalMap::linear_mod(k),
        }
        .map_err(|e| invalid("map", e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableDesc {
    Identity,
    Constant { value: f64 },
    Indicator { a: f64, b: f64 },
    Step { breaks: Vec<f64>, values: Vec<f64> },
    Poly { coeffs: Vec<f64> },
}

impl ObservableDesc {
    pub fn build(&self) -> Result<Observable, ConfigError> {
        match self {
            ObservableDesc::Identity => Ok(Observable::identity()),
            ObservableDesc::Constant { value } => Observable::constant(*value),
            ObservableDesc::Indicator { a, b } => Observable::indicator(*a, *b),
            ObservableDesc::Step { breaks, values } => Observable::step(breaks.clone(), values.clone()),
            ObservableDesc::Poly { coeffs } => Observable::polynomial(coeffs.clone()),
        }
        .map_err(|e| invalid("observable", e))
    }
}

/// A convergence item: a declared rational `p/q` or an irrational `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ItemDesc {
    Rational {
        p: u64,
        q: u64,
        #[serde(default)]
        y: f64,
    },
    Irrational {
        alpha: f64,
        #[serde(default)]
        y: f64,
    },
}

/// Everything a run may need. Unset fields take documented defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    pub map: Option<MapDesc>,
    pub observable: Option<ObservableDesc>,
    /// Autocorrelation engines for `xi`.
    pub engines: Option<Vec<String>>,
    /// Half window `Z`.
    pub window: Option<usize>,
    /// Orbit horizon `N`.
    pub horizon: Option<usize>,
    pub n_bins: Option<usize>,
    /// Mode cutoff `M` for irrational rotations.
    pub modes: Option<usize>,
    /// Number of grid points on the circle.
    pub grid: Option<usize>,
    pub segments: Option<usize>,
    /// Reference point; a seeded typical point when absent.
    pub y: Option<f64>,
    /// Orbit representative for rational rotations.
    pub w: Option<f64>,
    /// `diffract`: estimate from a periodogram instead of the exact engine.
    pub estimate: Option<bool>,
    /// `converge`: target rotation number.
    pub alpha: Option<f64>,
    /// `converge`: use this many continued-fraction convergents as items.
    pub convergents: Option<usize>,
    pub items: Option<Vec<ItemDesc>>,
    /// `fig1`: values of `k`.
    pub ks: Option<Vec<u32>>,
    /// `fig2`: the two rotation numbers.
    pub alphas: Option<[f64; 2]>,
    /// `fig2`: number of atoms.
    pub count: Option<usize>,
    pub seed: Option<u64>,
}

pub const MAX_HORIZON: usize = 1 << 26;
pub const MAX_WINDOW: usize = 1 << 16;
pub const MAX_BINS: usize = 1 << 16;
pub const MAX_GRID: usize = 1 << 22;
pub const MAX_MODES: usize = 1 << 20;

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ConfigError(format!("{}:{}", path.display(), e.0)))
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
            ConfigError(format!(
                "{}:{}: {}",
                e.line(),
                e.column(),
                strip_position(&e.to_string())
            ))
        })?;
        cfg.check_ranges()?;
        Ok(cfg)
    }

    fn check_ranges(&self) -> Result<(), ConfigError> {
        let bounded = |field: &str, v: Option<usize>, lo: usize, hi: usize| match v {
            Some(x) if !(lo..=hi).contains(&x) => Err(invalid(field, format!("{x} not in [{lo}, {hi}]"))),
            _ => Ok(()),
        };
        bounded("window", self.window, 0, MAX_WINDOW)?;
        bounded("horizon", self.horizon, 1, MAX_HORIZON)?;
        bounded("n_bins", self.n_bins, 2, MAX_BINS)?;
        bounded("modes", self.modes, 0, MAX_MODES)?;
        bounded("grid", self.grid, 1, MAX_GRID)?;
        bounded("segments", self.segments, 1, MAX_HORIZON)?;
        bounded("convergents", self.convergents, 1, 40)?;
        bounded("count", self.count, 1, MAX_MODES)?;
        for (field, v) in [("y", self.y), ("w", self.w)] {
            if let Some(x) = v {
                if !(0.0..1.0).contains(&x) {
                    return Err(invalid(field, format!("{x} not in [0, 1)")));
                }
            }
        }
        if let Some(a) = self.alpha {
            if !(a.is_finite() && a > 0.0) {
                return Err(invalid("alpha", "must be positive and finite"));
            }
        }
        if let Some(ks) = &self.ks {
            if ks.is_empty() || ks.iter().any(|&k| k < 2) {
                return Err(invalid("ks", "need a non-empty list of integers >= 2"));
            }
        }
        if let Some(engines) = &self.engines {
            if engines.is_empty() {
                return Err(invalid("engines", "list is empty"));
            }
        }
        Ok(())
    }

    pub fn require_map(&self) -> Result<IntervalMap, ConfigError> {
        self.map.as_ref().ok_or_else(|| invalid("map", "missing"))?.build()
    }

    pub fn observable(&self) -> Result<Observable, ConfigError> {
        self.observable.as_ref().unwrap_or(&ObservableDesc::Identity).build()
    }
}

/// serde_json appends " at line L column C"; the position is reported separately.
fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}
