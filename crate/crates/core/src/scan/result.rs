use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{epsilon_from_kbar, period_from_kbar, PhysicalConstants};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Quantum,
    Eclassical,
}

impl EngineKind {
    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Quantum => "quantum",
            EngineKind::Eclassical => "eclassical",
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EngineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quantum" => Ok(EngineKind::Quantum),
            "eclassical" => Ok(EngineKind::Eclassical),
            other => Err(Error::Config(format!("unknown engine `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub kbar: f64,
    pub epsilon: f64,
    pub period_us: f64,
    pub kicks: u32,
    pub engine: EngineKind,
    /// Mean energy gain per atom.
    pub mean_energy: f64,
    /// `mean_energy / (k² kicks / 4)`; zero when `k = 0`.
    pub ratio: f64,
    /// Standard error of `mean_energy`.
    pub stderr: f64,
    pub atoms: usize,
    pub seed: u64,
}

impl ScanRow {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        k: f64,
        kbar: f64,
        kicks: u32,
        engine: EngineKind,
        mean_energy: f64,
        stderr: f64,
        atoms: usize,
        seed: u64,
        consts: &PhysicalConstants,
    ) -> Result<Self> {
        let resonant = k * k * kicks as f64 / 4.0;
        Ok(Self {
            kbar,
            epsilon: epsilon_from_kbar(kbar)?.epsilon,
            period_us: period_from_kbar(kbar, consts)? * 1e6,
            kicks,
            engine,
            mean_energy,
            ratio: if resonant > 0.0 { mean_energy / resonant } else { 0.0 },
            stderr,
            atoms,
            seed,
        })
    }

    /// Standard error of `ratio`.
    pub fn ratio_stderr(&self) -> f64 {
        if self.mean_energy != 0.0 {
            (self.stderr * self.ratio / self.mean_energy).abs()
        } else {
            0.0
        }
    }
}

fn row_order(a: &ScanRow, b: &ScanRow) -> Ordering {
    a.kicks
        .cmp(&b.kicks)
        .then(a.kbar.total_cmp(&b.kbar))
        .then(a.engine.cmp(&b.engine))
}

/// Scan rows for one kick strength, sorted by `(kicks, kbar, engine)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub k: f64,
    rows: Vec<ScanRow>,
}

impl ScanResult {
    pub fn new(k: f64, mut rows: Vec<ScanRow>) -> Self {
        rows.sort_by(row_order);
        Self { k, rows }
    }

    pub fn rows(&self) -> &[ScanRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn merge(mut self, other: ScanResult) -> Self {
        self.rows.extend(other.rows);
        self.rows.sort_by(row_order);
        self
    }

    /// Distinct kick counts, ascending.
    pub fn kicks(&self) -> Vec<u32> {
        let mut ks: Vec<u32> = self.rows.iter().map(|r| r.kicks).collect();
        ks.dedup();
        ks
    }

    pub fn engines(&self) -> Vec<EngineKind> {
        let mut es: Vec<EngineKind> = self.rows.iter().map(|r| r.engine).collect();
        es.sort();
        es.dedup();
        es
    }

    /// Rows of one curve, ascending in `kbar`.
    pub fn curve(&self, kicks: u32, engine: EngineKind) -> Vec<ScanRow> {
        self.rows
            .iter()
            .filter(|r| r.kicks == kicks && r.engine == engine)
            .copied()
            .collect()
    }
}
