//! Configuration-driven scans, peak analysis and report output.

pub mod analysis;
mod config;
pub mod report;
mod result;
mod run;

pub use analysis::{
    find_side_peaks, fit_x0, fit_x0_points, fwhm_by_kicks, peak_fwhm, Exclusion, KickPeaks, Peak, PeakReport, X0Fit,
};
pub use config::{
    AnalysisConfig, EclassicalConfig, EngineSelection, EnsembleConfig, GridAxis, GridConfig, OutputConfig, PdistConfig,
    ScanConfig,
};
pub use report::{emit_report, read_scan_csv, Header, ReportInputs};
pub use result::{EngineKind, ScanResult, ScanRow};
pub use run::{exclusion_of, run_pdist, run_scan};
