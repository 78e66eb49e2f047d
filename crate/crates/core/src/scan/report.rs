use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::error::{Error, Result};
use crate::pendulum::{one_minus_phi0, GTable, RatioMode};
use crate::quantum::MomentumHistogram;

use super::analysis::{fit_x0, PeakReport};
use super::{EngineKind, ScanResult, ScanRow};

pub const SCAN_COLUMNS: &str = "kbar,epsilon,period_us,kicks,engine,mean_energy,ratio,stderr,atoms,seed";

/// Provenance carried by every output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub config_hash: String,
    pub seed: u64,
    /// Absent for outputs that do not depend on the kick strength.
    pub k: Option<f64>,
}

impl Header {
    fn lines(&self, kind: &str) -> String {
        let v = env!("CARGO_PKG_VERSION");
        let mut out = format!(
            "# kickrotor {kind}\n# config_hash: {}\n# engines: quantum={v}, eclassical={v}, pendulum={v}\n# seed: {}\n",
            self.config_hash, self.seed
        );
        if let Some(k) = self.k {
            let _ = writeln!(out, "# k: {}", num(k));
        }
        out
    }
}

/// Twelve significant digits.
fn num(v: f64) -> String {
    format!("{v:.11e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn scan_csv(header: &Header, result: &ScanResult) -> String {
    let mut out = header.lines("scan");
    out.push_str(SCAN_COLUMNS);
    out.push('\n');
    for r in result.rows() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            num(r.kbar),
            num(r.epsilon),
            num(r.period_us),
            r.kicks,
            r.engine,
            num(r.mean_energy),
            num(r.ratio),
            num(r.stderr),
            r.atoms,
            r.seed
        );
    }
    out
}

pub fn peaks_csv(header: &Header, report: &PeakReport) -> String {
    let mut out = header.lines("peaks");
    let _ = writeln!(out, "# engine: {}", report.engine);
    match fit_x0(report) {
        Ok(fit) => {
            let _ = writeln!(
                out,
                "# x0: {}\n# x0_stderr: {}\n# max_relative_residual: {}",
                num(fit.x0),
                num(fit.stderr),
                num(fit.max_relative_residual)
            );
        }
        Err(e) => {
            let _ = writeln!(out, "# x0: unavailable ({e})");
        }
    }
    out.push_str("kicks,exclusion,left_epsilon,left_ratio,right_epsilon,right_ratio,fwhm\n");
    for e in &report.entries {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            e.kicks,
            num(e.exclusion),
            opt(e.left.map(|p| p.epsilon)),
            opt(e.left.map(|p| p.ratio)),
            opt(e.right.map(|p| p.epsilon)),
            opt(e.right.map(|p| p.ratio)),
            opt(e.fwhm)
        );
    }
    out
}

pub fn gtable_csv(header: &Header, table: &GTable) -> String {
    let mut out = header.lines("gfunc");
    let q = table.quadrature();
    let _ = writeln!(
        out,
        "# quadrature: {}x{}\n# error_estimate: {}",
        q.theta_nodes,
        q.momentum_nodes,
        num(table.error_estimate())
    );
    out.push_str("x,g\n");
    for (x, g) in table.x().iter().zip(table.g()) {
        let _ = writeln!(out, "{},{}", num(*x), num(*g));
    }
    out
}

pub fn histogram_csv(header: &Header, kicks: u32, hists: &[(f64, MomentumHistogram)]) -> String {
    let mut out = header.lines("pdist");
    let _ = writeln!(out, "# kicks: {kicks}");
    for (kbar, h) in hists {
        let _ = writeln!(
            out,
            "# kbar {}: underflow {} overflow {}",
            num(*kbar),
            num(h.underflow),
            num(h.overflow)
        );
    }
    out.push_str("kbar,p_low,p_high,mass\n");
    for (kbar, h) in hists {
        for (w, m) in h.edges.windows(2).zip(&h.mass) {
            let _ = writeln!(out, "{},{},{},{}", num(*kbar), num(w[0]), num(w[1]), num(*m));
        }
    }
    out
}

/// Everything [`emit_report`] can write; absent parts are skipped.
#[derive(Debug, Clone, Copy)]
pub struct ReportInputs<'a> {
    pub header: &'a Header,
    pub scan: Option<&'a ScanResult>,
    pub peaks: &'a [PeakReport],
    pub gtable: Option<&'a GTable>,
    pub pdist: Option<(u32, &'a [(f64, MomentumHistogram)])>,
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `scan.csv`, `peaks_<engine>.csv`, `gfunc.csv`, `pdist.csv` and
/// `figures.json` into `dir`; returns the paths written.
pub fn emit_report(dir: &Path, inputs: ReportInputs<'_>) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut put = |name: String, text: String| -> Result<()> {
        let path = dir.join(name);
        write_file(&path, &text)?;
        written.push(path);
        Ok(())
    };
    if let Some(scan) = inputs.scan {
        put("scan.csv".into(), scan_csv(inputs.header, scan))?;
    }
    for report in inputs.peaks {
        put(format!("peaks_{}.csv", report.engine), peaks_csv(inputs.header, report))?;
    }
    if let Some(table) = inputs.gtable {
        put("gfunc.csv".into(), gtable_csv(inputs.header, table))?;
    }
    if let Some((kicks, hists)) = inputs.pdist {
        put("pdist.csv".into(), histogram_csv(inputs.header, kicks, hists))?;
    }
    let figures = figures_json(inputs)?;
    put("figures.json".into(), figures)?;
    Ok(written)
}

/// Plot-ready collation: `G(x)` with the pendulum ratio, momentum
/// distributions, scan curves and side-peak positions.
pub fn figures_json(inputs: ReportInputs<'_>) -> Result<String> {
    let gfunc_json = match inputs.gtable {
        Some(t) => {
            let ratio: Vec<Option<f64>> = t.x().iter().map(|&x| t.ratio(x, RatioMode::LargeX).ok()).collect();
            let phi: Vec<f64> = t.x().iter().map(|&x| one_minus_phi0(x)).collect::<Result<_>>()?;
            json!({ "x": t.x(), "g": t.g(), "ratio_large_x": ratio, "one_minus_phi0_approx": phi })
        }
        None => json!(null),
    };
    let momentum_json = match inputs.pdist {
        Some((kicks, hists)) => json!({
            "kicks": kicks,
            "distributions": hists.iter().map(|(kbar, h)| json!({
                "kbar": kbar,
                "p_center": h.centers().collect::<Vec<_>>(),
                "mass": h.mass,
                "wing_mass_beyond_10": h.wing_mass(10.0),
            })).collect::<Vec<_>>(),
        }),
        None => json!(null),
    };
    let curves_json = match inputs.scan {
        Some(scan) => {
            let mut curves = Vec::new();
            for engine in scan.engines() {
                for kicks in scan.kicks() {
                    let rows: Vec<ScanRow> = scan.curve(kicks, engine);
                    if rows.is_empty() {
                        continue;
                    }
                    curves.push(json!({
                        "engine": engine,
                        "kicks": kicks,
                        "period_us": rows.iter().map(|r| r.period_us).collect::<Vec<_>>(),
                        "epsilon": rows.iter().map(|r| r.epsilon).collect::<Vec<_>>(),
                        "ratio": rows.iter().map(|r| r.ratio).collect::<Vec<_>>(),
                        "ratio_stderr": rows.iter().map(|r| r.ratio_stderr()).collect::<Vec<_>>(),
                    }));
                }
            }
            json!(curves)
        }
        None => json!(null),
    };
    let peak_json: Vec<_> = inputs
        .peaks
        .iter()
        .map(|r| {
            json!({
                "engine": r.engine,
                "k": r.k,
                "entries": r.entries,
                "fit": fit_x0(r).ok(),
            })
        })
        .collect();
    let doc = json!({
        "config_hash": inputs.header.config_hash,
        "seed": inputs.header.seed,
        "k": inputs.header.k,
        "gfunc": gfunc_json,
        "momentum": momentum_json,
        "scan": curves_json,
        "peaks": peak_json,
    });
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Config(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// Parse a file written by [`scan_csv`].
pub fn read_scan_csv(path: &Path) -> Result<(Header, ScanResult)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scan_csv(&text).map_err(|reason| Error::Parse {
        path: path.to_path_buf(),
        reason,
    })
}

pub fn parse_scan_csv(text: &str) -> std::result::Result<(Header, ScanResult), String> {
    let mut hash = None;
    let mut seed = None;
    let mut k = None;
    let mut rows = Vec::new();
    let mut seen_columns = false;
    for (n, line) in text.lines().enumerate() {
        let lineno = n + 1;
        if let Some(meta) = line.strip_prefix('#') {
            if let Some((key, value)) = meta.trim().split_once(": ") {
                match key {
                    "config_hash" => hash = Some(value.to_string()),
                    "seed" => seed = Some(value.parse::<u64>().map_err(|e| format!("line {lineno}: {e}"))?),
                    "k" => k = Some(value.parse::<f64>().map_err(|e| format!("line {lineno}: {e}"))?),
                    _ => {}
                }
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if !seen_columns {
            if line != SCAN_COLUMNS {
                return Err(format!("line {lineno}: expected column header `{SCAN_COLUMNS}`"));
            }
            seen_columns = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(format!("line {lineno}: expected 10 fields, found {}", f.len()));
        }
        let float = |i: usize| {
            f[i].parse::<f64>()
                .map_err(|e| format!("line {lineno} field {}: {e}", i + 1))
        };
        let int = |i: usize| {
            f[i].parse::<u64>()
                .map_err(|e| format!("line {lineno} field {}: {e}", i + 1))
        };
        rows.push(ScanRow {
            kbar: float(0)?,
            epsilon: float(1)?,
            period_us: float(2)?,
            kicks: int(3)? as u32,
            engine: f[4].parse::<EngineKind>().map_err(|e| format!("line {lineno}: {e}"))?,
            mean_energy: float(5)?,
            ratio: float(6)?,
            stderr: float(7)?,
            atoms: int(8)? as usize,
            seed: int(9)?,
        });
    }
    if !seen_columns {
        return Err("missing column header".into());
    }
    let k = k.ok_or("missing `# k:` header line")?;
    Ok((
        Header {
            config_hash: hash.ok_or("missing `# config_hash:` header line")?,
            seed: seed.ok_or("missing `# seed:` header line")?,
            k: Some(k),
        },
        ScanResult::new(k, rows),
    ))
}
