use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pendulum::{parabolic_vertex, predict_side_peak, DEFAULT_X0};
use crate::stats;

use super::{EngineKind, ScanResult};

/// Minimum number of grid points above half maximum for a width.
pub const MIN_FWHM_POINTS: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub epsilon: f64,
    pub ratio: f64,
}

/// Side peaks and central width for one kick count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KickPeaks {
    pub kicks: u32,
    /// Exclusion half-width used, in `ε`.
    pub exclusion: f64,
    pub left: Option<Peak>,
    pub right: Option<Peak>,
    pub fwhm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakReport {
    pub engine: EngineKind,
    pub k: f64,
    pub entries: Vec<KickPeaks>,
}

impl PeakReport {
    /// `(kicks, |ε|)` of every side peak found.
    pub fn peak_points(&self) -> Vec<(u32, f64)> {
        self.entries
            .iter()
            .flat_map(|e| {
                [e.left, e.right]
                    .into_iter()
                    .flatten()
                    .map(move |p| (e.kicks, p.epsilon.abs()))
            })
            .collect()
    }
}

/// Central-peak exclusion window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exclusion {
    /// Fixed half-width in `ε`.
    Fixed(f64),
    /// Half the predicted side-peak position, `x₀² / (2 t² k)`.
    Predicted { x0: f64 },
}

impl Default for Exclusion {
    fn default() -> Self {
        Exclusion::Predicted { x0: DEFAULT_X0 }
    }
}

impl Exclusion {
    pub fn half_width(&self, kicks: u32, k: f64) -> Result<f64> {
        match *self {
            Exclusion::Fixed(w) if w.is_finite() && w >= 0.0 => Ok(w),
            Exclusion::Fixed(_) => Err(Error::invalid("exclusion", "must be finite and >= 0")),
            Exclusion::Predicted { x0 } => Ok(0.5 * predict_side_peak(kicks, k, x0)?.epsilon_abs),
        }
    }
}

/// `(ε, ratio)` sorted by `ε`.
fn curve_points(result: &ScanResult, kicks: u32, engine: EngineKind) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = result
        .curve(kicks, engine)
        .iter()
        .map(|r| (r.epsilon, r.ratio))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts
}

/// Highest discrete local maximum on each side of the exclusion window,
/// refined by a parabola through its neighbours.
pub fn side_peaks(points: &[(f64, f64)], exclusion: f64) -> (Option<Peak>, Option<Peak>) {
    let mut left: Option<(usize, f64)> = None;
    let mut right: Option<(usize, f64)> = None;
    for i in 1..points.len().saturating_sub(1) {
        let (e, y) = points[i];
        if !(y > points[i - 1].1 && y >= points[i + 1].1) {
            continue;
        }
        let slot = if e < -exclusion {
            &mut left
        } else if e > exclusion {
            &mut right
        } else {
            continue;
        };
        if slot.is_none_or(|(_, best)| y > best) {
            *slot = Some((i, y));
        }
    }
    let refine = |(i, _): (usize, f64)| {
        let (x, y) = parabolic_vertex(
            [points[i - 1].0, points[i].0, points[i + 1].0],
            [points[i - 1].1, points[i].1, points[i + 1].1],
        );
        Peak { epsilon: x, ratio: y }
    };
    (left.map(refine), right.map(refine))
}

/// Side peaks and central FWHM of every curve of `engine`.
pub fn find_side_peaks(result: &ScanResult, engine: EngineKind, exclusion: Exclusion) -> Result<PeakReport> {
    let mut entries = Vec::new();
    for kicks in result.kicks() {
        let pts = curve_points(result, kicks, engine);
        if pts.is_empty() {
            continue;
        }
        let half_width = exclusion.half_width(kicks, result.k)?;
        let (left, right) = side_peaks(&pts, half_width);
        entries.push(KickPeaks {
            kicks,
            exclusion: half_width,
            left,
            right,
            fwhm: peak_fwhm(&pts).ok(),
        });
    }
    if entries.is_empty() {
        return Err(Error::Analysis {
            what: "find_side_peaks",
            reason: format!("no {engine} rows in the scan"),
        });
    }
    Ok(PeakReport {
        engine,
        k: result.k,
        entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct X0Fit {
    pub x0: f64,
    pub stderr: f64,
    pub points: usize,
    /// Largest `|ε_found − ε_fit| / ε_fit`.
    pub max_relative_residual: f64,
}

/// Least squares of `|ε| = c / (t² k)` over `(kicks, |ε|)` points, with
/// `x₀ = √c`.
pub fn fit_x0_points(points: &[(u32, f64)], k: f64) -> Result<X0Fit> {
    let mut kicks: Vec<u32> = points.iter().map(|p| p.0).collect();
    kicks.sort_unstable();
    kicks.dedup();
    if kicks.len() < 3 {
        return Err(Error::Analysis {
            what: "fit_x0",
            reason: format!("need peaks at >= 3 kick counts, have {}", kicks.len()),
        });
    }
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::invalid("k", "must be positive"));
    }
    let a: Vec<f64> = points.iter().map(|&(t, _)| 1.0 / ((t as f64).powi(2) * k)).collect();
    let saa = stats::sum(a.iter().map(|v| v * v));
    let say = stats::sum(a.iter().zip(points).map(|(v, p)| v * p.1));
    let c = say / saa;
    if c <= 0.0 {
        return Err(Error::Analysis {
            what: "fit_x0",
            reason: "fitted x0² is not positive".into(),
        });
    }
    let resid: Vec<f64> = a.iter().zip(points).map(|(v, p)| p.1 - c * v).collect();
    let n = points.len();
    let sigma_c = if n > 1 {
        (stats::sum(resid.iter().map(|r| r * r)) / (n - 1) as f64 / saa).sqrt()
    } else {
        0.0
    };
    let x0 = c.sqrt();
    Ok(X0Fit {
        x0,
        stderr: sigma_c / (2.0 * x0),
        points: n,
        max_relative_residual: resid
            .iter()
            .zip(&a)
            .map(|(r, v)| (r / (c * v)).abs())
            .fold(0.0, f64::max),
    })
}

pub fn fit_x0(report: &PeakReport) -> Result<X0Fit> {
    fit_x0_points(&report.peak_points(), report.k)
}

/// FWHM of the highest peak of `(ε, ratio)`, relative to the mean of the two
/// end values, with linear interpolation of the half-maximum crossings.
pub fn peak_fwhm(points: &[(f64, f64)]) -> Result<f64> {
    let unresolved = |reason: String| Error::Analysis {
        what: "peak_fwhm",
        reason,
    };
    if points.len() < MIN_FWHM_POINTS {
        return Err(unresolved(format!("{} grid points", points.len())));
    }
    let baseline = 0.5 * (points[0].1 + points[points.len() - 1].1);
    let (top, peak) =
        points.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |best, (i, p)| if p.1 > best.1 { (i, p.1) } else { best },
        );
    if peak <= baseline {
        return Err(unresolved("no peak above the baseline".into()));
    }
    let half = baseline + 0.5 * (peak - baseline);
    let cross = |i: usize, j: usize| {
        let (x0, y0) = points[i];
        let (x1, y1) = points[j];
        x0 + (half - y0) * (x1 - x0) / (y1 - y0)
    };
    let lo = (0..top).rev().find(|&i| points[i].1 < half);
    let hi = (top + 1..points.len()).find(|&i| points[i].1 < half);
    let (Some(lo), Some(hi)) = (lo, hi) else {
        return Err(unresolved("half maximum not reached on both sides".into()));
    };
    let inside = hi - lo - 1;
    if inside < MIN_FWHM_POINTS {
        return Err(unresolved(format!(
            "{inside} points above half maximum, need {MIN_FWHM_POINTS}"
        )));
    }
    Ok(cross(hi - 1, hi) - cross(lo, lo + 1))
}

/// Central FWHM per kick count of one engine's curves.
pub fn fwhm_by_kicks(result: &ScanResult, engine: EngineKind) -> Vec<(u32, Result<f64>)> {
    result
        .kicks()
        .into_iter()
        .map(|t| (t, peak_fwhm(&curve_points(result, t, engine))))
        .collect()
}
