//! Run configuration: a JSON file, then environment, then command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use resdecay::single_particle::Summation;
use resdecay::two_particle::Exchange;

use crate::error::CliError;

/// Environment variable that replaces `outputs.directory`.
pub const OUT_ENV: &str = "RESDECAY_OUT";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub potential: PotentialConfig,
    pub initial: InitialConfig,
    pub truncation: TruncationConfig,
    pub time_grid: TimeGridConfig,
    pub spatial_grid: SpatialGridConfig,
    pub outputs: OutputConfig,
    pub summation: Summation,
    pub fit: FitConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialConfig {
    pub lambda: f64,
    pub a: f64,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self { lambda: 6.0, a: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    /// One box eigenstate `α`; for two particles the factorized state.
    FactorizedSymmetric,
    Entangled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub kind: StateKind,
    pub alpha: u32,
    pub beta: Option<u32>,
    /// `+1` symmetric, `-1` antisymmetric.
    pub sign: Option<i32>,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            kind: StateKind::FactorizedSymmetric,
            alpha: 1,
            beta: None,
            sign: None,
        }
    }
}

impl InitialConfig {
    pub fn exchange(&self) -> Result<Exchange, CliError> {
        match self.sign {
            Some(1) => Ok(Exchange::Symmetric),
            Some(-1) => Ok(Exchange::Antisymmetric),
            Some(s) => Err(CliError::field("initial.sign", format!("must be 1 or -1, got {s}"))),
            None => Err(CliError::field("initial.sign", "entangled state needs a sign")),
        }
    }
}

/// Either a strength-deficit tolerance or a fixed pole count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruncationConfig {
    pub tol: Option<f64>,
    pub n: Option<usize>,
    pub cap: usize,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self {
            tol: None,
            n: None,
            cap: 500,
        }
    }
}

impl TruncationConfig {
    pub const DEFAULT_TOL: f64 = 1e-8;

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(Self::DEFAULT_TOL)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    /// Multiples of the first lifetime `τ₁ = 1/Γ₁`.
    Lifetime,
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeGridConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    pub unit: TimeUnit,
}

impl Default for TimeGridConfig {
    fn default() -> Self {
        Self {
            t_min: 1e-3,
            t_max: 1e4,
            points: 400,
            unit: TimeUnit::Lifetime,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpatialGridConfig {
    /// Uniform radii `j·a/points` used for wavefunction frames.
    pub points: usize,
}

impl Default for SpatialGridConfig {
    fn default() -> Self {
        Self { points: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub curves: bool,
    pub frames: bool,
    /// Number of time samples, spread over the grid, that get a frame.
    pub frame_times: usize,
    pub coefficients: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            curves: true,
            frames: true,
            frame_times: 20,
            coefficients: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitQuantity {
    Survival,
    Nonescape,
    Wavefunction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub quantity: FitQuantity,
    /// Fit two-particle curves instead of single-particle ones.
    pub two_body: bool,
    /// `[t_lo, t_hi]` in the time-grid unit. Defaults to the stretch from
    /// the post-exponential onset to `t_max`.
    pub window: Option<[f64; 2]>,
    /// Probe point in units of `a`: `[r]` or `[r1, r2]`.
    pub point: Option<[f64; 2]>,
    /// Onset threshold on `|exponential| / |total|`.
    pub onset_threshold: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            quantity: FitQuantity::Survival,
            two_body: false,
            window: None,
            point: None,
            onset_threshold: 1e-3,
        }
    }
}

impl RunConfig {
    /// Parses JSON; errors name the offending field and position.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            CliError::Config {
                message: inner.to_string(),
                field: (path != ".").then_some(path),
                line: Some(inner.line()),
                column: Some(inner.column()),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    /// Range and consistency checks that the schema alone cannot express.
    pub fn validate(&self) -> Result<(), CliError> {
        let p = &self.potential;
        positive("potential.lambda", p.lambda)?;
        positive("potential.a", p.a)?;
        if self.initial.alpha == 0 {
            return Err(CliError::field("initial.alpha", "must be >= 1"));
        }
        if self.initial.beta == Some(0) {
            return Err(CliError::field("initial.beta", "must be >= 1"));
        }
        let tr = &self.truncation;
        if tr.tol.is_some() && tr.n.is_some() {
            return Err(CliError::field("truncation", "give either tol or n, not both"));
        }
        if let Some(tol) = tr.tol {
            if !(tol > 0.0 && tol < 0.1) {
                return Err(CliError::field("truncation.tol", format!("must lie in (0, 0.1), got {tol}")));
            }
        }
        if tr.n == Some(0) {
            return Err(CliError::field("truncation.n", "must be >= 1"));
        }
        if tr.cap == 0 {
            return Err(CliError::field("truncation.cap", "must be >= 1"));
        }
        let g = &self.time_grid;
        positive("time_grid.t_min", g.t_min)?;
        positive("time_grid.t_max", g.t_max)?;
        if g.t_max <= g.t_min {
            return Err(CliError::field("time_grid.t_max", "must exceed t_min"));
        }
        if g.points < 2 {
            return Err(CliError::field("time_grid.points", "must be >= 2"));
        }
        if self.spatial_grid.points == 0 {
            return Err(CliError::field("spatial_grid.points", "must be >= 1"));
        }
        if self.outputs.frame_times == 0 {
            return Err(CliError::field("outputs.frame_times", "must be >= 1"));
        }
        if let Some([lo, hi]) = self.fit.window {
            positive("fit.window", lo)?;
            if hi <= lo {
                return Err(CliError::field("fit.window", "upper end must exceed lower end"));
            }
        }
        if let Some(point) = self.fit.point {
            if point.iter().any(|&x| !(0.0..1.0).contains(&x)) {
                return Err(CliError::field("fit.point", "coordinates must lie in [0, 1)"));
            }
        }
        positive("fit.onset_threshold", self.fit.onset_threshold)?;
        Ok(())
    }

    /// Replaces the output directory from [`OUT_ENV`] when it is set.
    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(OUT_ENV).filter(|d| !d.is_empty()) {
            self.outputs.directory = PathBuf::from(dir);
        }
    }

    /// Canonical JSON of the resolved configuration.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

fn positive(field: &'static str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::field(field, format!("must be positive and finite, got {x}")))
    }
}
