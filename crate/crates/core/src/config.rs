//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::equilibrium::VorticityProfile;
use crate::error::{Error, Result};
use crate::geometry::BoundaryProfile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Wall shape at unit amplitude; channel `k` uses `shape.scaled(eps[k])`.
    pub shape: BoundaryProfile,
    pub eps: Vec<f64>,
    pub vorticity: VorticityProfile,
    pub gap: f64,
    pub grid: GridConfig,
    pub tolerances: Tolerances,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub arnold: ArnoldConfig,
    pub matrix: MatrixConfig,
    pub carleman: CarlemanConfig,
    pub topology: TopologyConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub newton: f64,
    pub eigen: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArnoldMode {
    Warn,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArnoldConfig {
    pub mode: ArnoldMode,
    /// Largest accepted positive `Affine` slope.
    pub max_affine_slope: f64,
}

/// The four cells `{flat, curved} × {gap 0, current}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatrixConfig {
    /// Amplitude of the curved gap-zero cell.
    pub eps_curved: f64,
    /// Amplitude of the curved cell carrying a current.
    pub eps_current: f64,
    pub gap_current: f64,
    pub vorticity_zero: VorticityProfile,
    pub vorticity_current: VorticityProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarlemanConfig {
    pub lambda: f64,
    pub m: Vec<f64>,
    pub test_functions: usize,
    /// Wall amplitude of the channel used for the sweeps.
    pub eps: f64,
    /// Cutoff width `c` for the proof-shaped input.
    pub cutoff_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    pub centerline_samples: usize,
    pub seed_columns: usize,
    pub seed_rows: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            shape: BoundaryProfile::cosine(1.0),
            eps: vec![0.0, 0.05, 0.1, 0.2],
            vorticity: VorticityProfile::Constant { value: 1.0 },
            gap: 0.0,
            grid: GridConfig::default(),
            tolerances: Tolerances::default(),
            output_dir: PathBuf::from("out"),
            seed: 0,
            arnold: ArnoldConfig::default(),
            matrix: MatrixConfig::default(),
            carleman: CarlemanConfig::default(),
            topology: TopologyConfig::default(),
        }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { nx: 128, ny: 65 }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            newton: 1e-10,
            eigen: 1e-9,
        }
    }
}

impl Default for ArnoldConfig {
    fn default() -> Self {
        Self {
            mode: ArnoldMode::Warn,
            max_affine_slope: 10.0,
        }
    }
}

impl Default for MatrixConfig {
    fn default() -> Self {
        Self {
            eps_curved: 0.1,
            eps_current: 0.005,
            gap_current: 2.02,
            vorticity_zero: VorticityProfile::Constant { value: 1.0 },
            vorticity_current: VorticityProfile::Constant { value: -1.0 },
        }
    }
}

impl Default for CarlemanConfig {
    fn default() -> Self {
        Self {
            lambda: 2.0,
            m: vec![4.0, 8.0, 16.0, 32.0],
            test_functions: 5,
            eps: 0.1,
            cutoff_c: 0.1,
        }
    }
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            centerline_samples: 32,
            seed_columns: 16,
            seed_rows: 8,
        }
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(format!("{name} = {v} must be positive and finite")))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| bad(e.to_string()))
    }

    /// Static checks; the Arnold condition needs `λ₁` and is checked per run.
    pub fn validate(&self) -> Result<()> {
        positive("tolerances.newton", self.tolerances.newton)?;
        positive("tolerances.eigen", self.tolerances.eigen)?;
        let GridConfig { nx, ny } = self.grid;
        if nx < 16 || ny < 17 || ny % 2 == 0 {
            return Err(bad(format!(
                "grid {nx}x{ny}: need nx >= 16 and odd ny >= 17"
            )));
        }
        if self.eps.is_empty() {
            return Err(bad("eps list is empty"));
        }
        if self.eps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("eps list must be strictly increasing"));
        }
        let amplitudes = self
            .eps
            .iter()
            .chain([&self.matrix.eps_curved, &self.matrix.eps_current, &self.carleman.eps]);
        for &e in amplitudes {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(bad(format!("eps = {e} must be finite and >= 0")));
            }
            self.shape
                .scaled(e)
                .validate(1.0)
                .map_err(|err| bad(format!("eps = {e}: {err}")))?;
        }
        if !self.gap.is_finite() || !self.matrix.gap_current.is_finite() {
            return Err(bad("gap must be finite"));
        }
        for v in [
            self.vorticity,
            self.matrix.vorticity_zero,
            self.matrix.vorticity_current,
        ] {
            self.check_vorticity(v)?;
        }
        positive("arnold.max_affine_slope", self.arnold.max_affine_slope)?;
        let c = &self.carleman;
        if !(c.lambda >= 1.0 && c.lambda.is_finite()) {
            return Err(bad(format!("carleman.lambda = {} must be >= 1", c.lambda)));
        }
        if c.m.is_empty() || c.m.iter().any(|m| !(*m >= 1.0 && m.is_finite())) {
            return Err(bad("carleman.m entries must be >= 1"));
        }
        if c.m.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("carleman.m must be strictly increasing"));
        }
        if c.test_functions == 0 {
            return Err(bad("carleman.test_functions must be >= 1"));
        }
        positive("carleman.cutoff_c", c.cutoff_c)?;
        let t = &self.topology;
        if t.centerline_samples == 0 || t.seed_columns == 0 || t.seed_rows == 0 {
            return Err(bad("topology sample counts must be >= 1"));
        }
        Ok(())
    }

    fn check_vorticity(&self, v: VorticityProfile) -> Result<()> {
        let finite = match v {
            VorticityProfile::Constant { value } => value.is_finite(),
            VorticityProfile::Affine { a, b } => a.is_finite() && b.is_finite(),
            VorticityProfile::StuartExp { kappa } => kappa.is_finite(),
        };
        if !finite {
            return Err(bad(format!("vorticity {v:?} has non-finite parameters")));
        }
        if let VorticityProfile::Affine { a, .. } = v {
            if a > self.arnold.max_affine_slope {
                return Err(bad(format!(
                    "Affine slope {a} exceeds arnold.max_affine_slope = {}",
                    self.arnold.max_affine_slope
                )));
            }
        }
        Ok(())
    }

    /// Arnold admissibility of an `Affine` slope against a computed `λ₁`:
    /// logs a warning or returns a config error depending on `arnold.mode`.
    /// Other profiles pass (a constant satisfies `F' > −λ₁`).
    pub fn check_arnold(&self, v: VorticityProfile, lambda1: f64) -> Result<()> {
        if matches!(v, VorticityProfile::Affine { .. }) && v.arnold_admissible(lambda1) == Some(false) {
            let msg = format!("{v:?} is not Arnold-admissible for lambda1 = {lambda1}");
            match self.arnold.mode {
                ArnoldMode::Warn => log::warn!("{msg}"),
                ArnoldMode::Error => return Err(bad(msg)),
            }
        }
        Ok(())
    }
}
