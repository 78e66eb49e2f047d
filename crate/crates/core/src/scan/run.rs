use crate::eclassical;
use crate::error::Result;
use crate::model::{sample_ensemble, KickParams};
use crate::quantum::{self, MomentumHistogram};

use super::analysis::Exclusion;
use super::{EngineKind, ScanConfig, ScanResult, ScanRow};

/// Every `(kicks, kbar)` point of the config with each selected engine.
///
/// The quantum engine samples its atoms once and reuses them, with their
/// noise substreams, at every grid point; the ε-classical engine does the
/// same with its phases.
pub fn run_scan(config: &ScanConfig) -> Result<ScanResult> {
    config.validate()?;
    let grid = config.kbar_grid()?;
    let mut rows = Vec::new();
    for engine in config.engine.engines() {
        match engine {
            EngineKind::Quantum => {
                let spec = config.ensemble_spec();
                let atoms = sample_ensemble(&spec)?;
                for &kicks in &config.kicks {
                    for &kbar in &grid {
                        let params = KickParams::new(config.k, kbar, kicks)?;
                        let est = quantum::ensemble_energy_for(&atoms, spec.seed, &params, &config.noise)?;
                        rows.push(ScanRow::new(
                            config.k,
                            kbar,
                            kicks,
                            engine,
                            est.mean,
                            est.stderr,
                            est.atoms,
                            config.seed,
                            &config.constants,
                        )?);
                    }
                }
            }
            EngineKind::Eclassical => {
                let spec = config.map_ensemble_spec();
                for &kicks in &config.kicks {
                    let part = eclassical::scan_energy_map(
                        &spec,
                        config.k,
                        &grid,
                        kicks,
                        config.eclassical.trajectories_per_atom,
                        &config.constants,
                    )?;
                    rows.extend_from_slice(part.rows());
                }
            }
        }
    }
    Ok(ScanResult::new(config.k, rows))
}

/// Exclusion window from the config's analysis section.
pub fn exclusion_of(config: &ScanConfig) -> Exclusion {
    match config.analysis.exclusion {
        Some(w) => Exclusion::Fixed(w),
        None => Exclusion::Predicted { x0: config.analysis.x0 },
    }
}

/// Momentum distributions for the config's `pdist` section (or the given
/// `kbar` list and kick count), with the config's ensemble and noise.
pub fn run_pdist(
    config: &ScanConfig,
    kbars: &[f64],
    kicks: u32,
    edges: &[f64],
) -> Result<Vec<(f64, MomentumHistogram)>> {
    let spec = config.ensemble_spec();
    kbars
        .iter()
        .map(|&kbar| {
            let params = KickParams::new(config.k, kbar, kicks)?;
            Ok((kbar, quantum::momentum_histogram(&spec, &params, &config.noise, edges)?))
        })
        .collect()
}
