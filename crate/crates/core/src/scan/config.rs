use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{kbar_from_period, BetaLaw, EnsembleSpec, MomentumLaw, PhysicalConstants};
use crate::pendulum::DEFAULT_X0;
use crate::quantum::NoiseModel;

use super::EngineKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EngineSelection {
    Quantum,
    #[default]
    Eclassical,
    Both,
}

impl EngineSelection {
    pub fn engines(self) -> Vec<EngineKind> {
        match self {
            EngineSelection::Quantum => vec![EngineKind::Quantum],
            EngineSelection::Eclassical => vec![EngineKind::Eclassical],
            EngineSelection::Both => vec![EngineKind::Quantum, EngineKind::Eclassical],
        }
    }
}

impl std::str::FromStr for EngineSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quantum" => Ok(EngineSelection::Quantum),
            "eclassical" => Ok(EngineSelection::Eclassical),
            "both" => Ok(EngineSelection::Both),
            other => Err(Error::Config(format!(
                "unknown engine `{other}` (quantum, eclassical, both)"
            ))),
        }
    }
}

/// One grid axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum GridAxis {
    /// `2πℓ + i·step` for `|i·step| ≤ half_width`.
    Resonance {
        resonance: u32,
        half_width: f64,
        step: f64,
    },
    /// `start + i·step` up to `stop`.
    Range {
        start: f64,
        stop: f64,
        step: f64,
    },
    Values {
        values: Vec<f64>,
    },
}

impl GridAxis {
    pub fn points(&self) -> Result<Vec<f64>> {
        let pts = match self {
            GridAxis::Resonance {
                resonance,
                half_width,
                step,
            } => {
                check_step(*step)?;
                if !(half_width.is_finite() && *half_width >= 0.0) {
                    return Err(Error::Config("grid half_width must be finite and >= 0".into()));
                }
                let n = (half_width / step + 1e-9).floor() as i64;
                let c = TAU * *resonance as f64;
                (-n..=n).map(|i| c + i as f64 * step).collect()
            }
            GridAxis::Range { start, stop, step } => {
                check_step(*step)?;
                if !(start.is_finite() && stop.is_finite() && stop >= start) {
                    return Err(Error::Config("grid needs finite start <= stop".into()));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                (0..=n).map(|i| start + i as f64 * step).collect()
            }
            GridAxis::Values { values } => values.clone(),
        };
        if pts.is_empty() {
            return Err(Error::Config("grid is empty".into()));
        }
        if pts
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
            || pts.iter().any(|v| !v.is_finite())
        {
            return Err(Error::Config("grid must be finite and strictly ascending".into()));
        }
        Ok(pts)
    }
}

fn check_step(step: f64) -> Result<()> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Config("grid step must be positive".into()));
    }
    Ok(())
}

/// Exactly one of a `kbar` axis or a kick-period axis in μs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kbar: Option<GridAxis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period_us: Option<GridAxis>,
}

impl GridConfig {
    pub fn around_resonance(ell: u32, half_width: f64, step: f64) -> Self {
        Self {
            kbar: Some(GridAxis::Resonance {
                resonance: ell,
                half_width,
                step,
            }),
            period_us: None,
        }
    }

    pub fn kbar_values(values: Vec<f64>) -> Self {
        Self {
            kbar: Some(GridAxis::Values { values }),
            period_us: None,
        }
    }

    /// `kbar` values, ascending, each `> π`.
    pub fn kbar_points(&self, consts: &PhysicalConstants) -> Result<Vec<f64>> {
        let kbar = match (&self.kbar, &self.period_us) {
            (Some(axis), None) => axis.points()?,
            (None, Some(GridAxis::Resonance { .. })) => {
                return Err(Error::Config("a period grid cannot use the resonance form".into()))
            }
            (None, Some(axis)) => axis
                .points()?
                .into_iter()
                .map(|us| kbar_from_period(us * 1e-6, consts))
                .collect::<Result<_>>()?,
            _ => return Err(Error::Config("give exactly one of grid.kbar and grid.period_us".into())),
        };
        if let Some(bad) = kbar.iter().find(|v| **v <= PI) {
            return Err(Error::Config(format!("grid value kbar = {bad} is not above pi")));
        }
        Ok(kbar)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    pub beta: BetaLaw,
    pub n0: MomentumLaw,
    /// Atoms per quantum grid point.
    pub atoms: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            beta: BetaLaw::Uniform,
            n0: MomentumLaw::Point { value: 0 },
            atoms: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EclassicalConfig {
    /// Trajectories per grid point.
    pub trajectories: usize,
    pub trajectories_per_atom: usize,
}

impl Default for EclassicalConfig {
    fn default() -> Self {
        Self {
            trajectories: 100_000,
            trajectories_per_atom: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Scaling-variable position of the side peaks.
    pub x0: f64,
    /// Central-peak exclusion half-width in `ε`; by default half the
    /// predicted side-peak `|ε|`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exclusion: Option<f64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            x0: DEFAULT_X0,
            exclusion: None,
        }
    }
}

/// Momentum distributions for a few `kbar` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdistConfig {
    pub kbar: Vec<f64>,
    pub kicks: u32,
    #[serde(default = "PdistConfig::default_edges")]
    pub edges: GridAxis,
}

impl PdistConfig {
    fn default_edges() -> GridAxis {
        GridAxis::Range {
            start: -60.0,
            stop: 60.0,
            step: 0.5,
        }
    }

    pub fn reproduction() -> Self {
        Self {
            kbar: vec![6.3, 5.9],
            kicks: 14,
            edges: Self::default_edges(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("kickrotor-out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(default)]
    pub engine: EngineSelection,
    #[serde(default)]
    pub seed: u64,
    pub k: f64,
    pub kicks: Vec<u32>,
    #[serde(default)]
    pub constants: PhysicalConstants,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub eclassical: EclassicalConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pdist: Option<PdistConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl ScanConfig {
    /// Default reproduction scan: `t ∈ {12, 14, 16, 18}`,
    /// `kbar ∈ [2π − 0.35, 2π + 0.35]` in steps of 0.005.
    pub fn reproduction(k: f64, engine: EngineSelection, seed: u64) -> Self {
        Self {
            engine,
            seed,
            k,
            kicks: vec![12, 14, 16, 18],
            constants: PhysicalConstants::default(),
            ensemble: EnsembleConfig::default(),
            eclassical: EclassicalConfig::default(),
            grid: GridConfig::around_resonance(1, 0.35, 0.005),
            noise: NoiseModel::default(),
            analysis: AnalysisConfig::default(),
            pdist: None,
            output: OutputConfig::default(),
            threads: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScanConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k.is_finite() && self.k >= 0.0) {
            return Err(Error::Config("k must be finite and >= 0".into()));
        }
        if self.kicks.is_empty() || self.kicks.contains(&0) {
            return Err(Error::Config(
                "kicks must be a non-empty list of positive counts".into(),
            ));
        }
        if self.ensemble.atoms == 0 {
            return Err(Error::Config("ensemble.atoms must be positive".into()));
        }
        if self.eclassical.trajectories_per_atom == 0
            || self.eclassical.trajectories < self.eclassical.trajectories_per_atom
        {
            return Err(Error::Config(
                "eclassical.trajectories must be >= trajectories_per_atom >= 1".into(),
            ));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be positive".into()));
        }
        if !(self.analysis.x0.is_finite() && self.analysis.x0 > 0.0) {
            return Err(Error::Config("analysis.x0 must be positive".into()));
        }
        if let Some(e) = self.analysis.exclusion {
            if !(e.is_finite() && e >= 0.0) {
                return Err(Error::Config("analysis.exclusion must be >= 0".into()));
            }
        }
        if let Some(p) = &self.pdist {
            if p.kbar.is_empty() || p.kbar.iter().any(|v| !(*v > PI && v.is_finite())) {
                return Err(Error::Config("pdist.kbar values must be finite and above pi".into()));
            }
            if p.edges.points()?.len() < 2 {
                return Err(Error::Config("pdist.edges needs at least two edges".into()));
            }
        }
        self.constants.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.noise.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.ensemble_spec()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.kbar_grid()?;
        Ok(())
    }

    pub fn kbar_grid(&self) -> Result<Vec<f64>> {
        self.grid.kbar_points(&self.constants)
    }

    /// Quantum ensemble.
    pub fn ensemble_spec(&self) -> EnsembleSpec {
        EnsembleSpec {
            beta: self.ensemble.beta,
            n0: self.ensemble.n0,
            atoms: self.ensemble.atoms,
            seed: self.seed,
        }
    }

    /// ε-classical ensemble, `trajectories / trajectories_per_atom` atoms.
    pub fn map_ensemble_spec(&self) -> EnsembleSpec {
        EnsembleSpec {
            atoms: self.eclassical.trajectories / self.eclassical.trajectories_per_atom,
            ..self.ensemble_spec()
        }
    }

    /// SHA-256 over the canonical JSON form of everything that affects the
    /// numbers (output location and thread count excluded).
    pub fn config_hash(&self) -> String {
        let mut physics = self.clone();
        physics.output = OutputConfig::default();
        physics.threads = None;
        let value = serde_json::to_value(&physics).expect("config serialises");
        let canonical = serde_json::to_string(&value).expect("json value serialises");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
