//! Scaled units, parameter conversions and initial ensembles.
//!
//! Momentum is measured in two-photon recoils `2ħk_l`, position in units of
//! `1/(2k_l)`, time in kick periods. The scaled Planck constant is
//! `kbar = 8 ω_r T`, and near a principal resonance it splits as
//! `kbar = 2πℓ + ε` with `|ε| ≤ π`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{substream, Purpose};

pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const HBAR: f64 = 1.054_571_817e-34;
/// Mass of a ⁸⁵Rb atom in kg.
pub const RB85_MASS: f64 = 84.911_789_738 * 1.660_539_066_60e-27;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalConstants {
    /// Single-photon recoil frequency ω_r in rad/s.
    pub recoil_frequency: f64,
}

impl Default for PhysicalConstants {
    /// ⁸⁵Rb at 780 nm: ω_r = 2π · 3.86 kHz.
    fn default() -> Self {
        Self {
            recoil_frequency: 2.0 * PI * 3.86e3,
        }
    }
}

impl PhysicalConstants {
    pub fn new(recoil_frequency: f64) -> Result<Self> {
        let c = Self { recoil_frequency };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.recoil_frequency.is_finite() && self.recoil_frequency > 0.0) {
            return Err(Error::invalid("recoil_frequency", "must be positive and finite"));
        }
        Ok(())
    }
}

/// `kbar = 8 ω_r T` for a kick period `T` in seconds.
pub fn kbar_from_period(period: f64, consts: &PhysicalConstants) -> Result<f64> {
    consts.validate()?;
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::invalid("period", "must be positive and finite"));
    }
    Ok(8.0 * consts.recoil_frequency * period)
}

/// Inverse of [`kbar_from_period`], in seconds.
pub fn period_from_kbar(kbar: f64, consts: &PhysicalConstants) -> Result<f64> {
    consts.validate()?;
    if !(kbar.is_finite() && kbar > 0.0) {
        return Err(Error::invalid("kbar", "must be positive and finite"));
    }
    Ok(kbar / (8.0 * consts.recoil_frequency))
}

/// Detuning from the nearest principal resonance `2πℓ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    pub epsilon: f64,
    pub ell: u32,
}

impl Resonance {
    pub fn kbar(&self) -> f64 {
        2.0 * PI * self.ell as f64 + self.epsilon
    }

    /// `sign(ε)` with `sign(0) = +1`.
    pub fn sign(&self) -> f64 {
        if self.epsilon < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
}

/// Split `kbar` into `2πℓ + ε` with `ℓ ≥ 1` the nearest integer to `kbar/2π`.
pub fn epsilon_from_kbar(kbar: f64) -> Result<Resonance> {
    if !kbar.is_finite() || kbar <= PI {
        return Err(Error::invalid(
            "kbar",
            format!("{kbar} has no principal resonance with ell >= 1 (need kbar > pi)"),
        ));
    }
    let ell = (kbar / (2.0 * PI)).round();
    Ok(Resonance {
        epsilon: kbar - 2.0 * PI * ell,
        ell: ell as u32,
    })
}

/// Thermal momentum spread in two-photon recoil units,
/// `σ = sqrt(m k_B T) / (2 ħ k_l)` with `k_l = sqrt(2 m ω_r / ħ)`.
pub fn thermal_sigma_beta(temperature: f64, consts: &PhysicalConstants, atom_mass: f64) -> Result<f64> {
    consts.validate()?;
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::invalid("temperature", "must be positive and finite"));
    }
    if !(atom_mass.is_finite() && atom_mass > 0.0) {
        return Err(Error::invalid("atom_mass", "must be positive and finite"));
    }
    let k_l = (2.0 * atom_mass * consts.recoil_frequency / HBAR).sqrt();
    Ok((atom_mass * BOLTZMANN * temperature).sqrt() / (2.0 * HBAR * k_l))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KickParams {
    /// Dimensionless kick strength.
    pub k: f64,
    /// Scaled Planck constant.
    pub kbar: f64,
    pub kicks: u32,
}

impl KickParams {
    pub fn new(k: f64, kbar: f64, kicks: u32) -> Result<Self> {
        if !(k.is_finite() && k >= 0.0) {
            return Err(Error::invalid("k", "must be finite and non-negative"));
        }
        epsilon_from_kbar(kbar)?;
        Ok(Self { k, kbar, kicks })
    }

    pub fn resonance(&self) -> Resonance {
        epsilon_from_kbar(self.kbar).expect("validated in KickParams::new")
    }

    /// Resonant growth `k² t / 4`, the peak energy used to normalise ratios.
    pub fn resonant_energy(&self) -> f64 {
        self.k * self.k * self.kicks as f64 / 4.0
    }
}

/// Distribution of the conserved quasimomentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase", deny_unknown_fields)]
pub enum BetaLaw {
    Point {
        value: f64,
    },
    Uniform,
    /// Zero-mean gaussian of width `sigma`, wrapped into `[0, 1)`.
    Gaussian {
        sigma: f64,
    },
}

/// Distribution of the initial integer momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase", deny_unknown_fields)]
pub enum MomentumLaw {
    Point {
        value: i64,
    },
    /// Zero-mean gaussian of width `sigma`, rounded to the nearest integer.
    Gaussian {
        sigma: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub beta: BetaLaw,
    pub n0: MomentumLaw,
    pub atoms: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    /// Uniform quasimomentum, all atoms at `n₀ = 0`.
    pub fn uniform(atoms: usize, seed: u64) -> Self {
        Self {
            beta: BetaLaw::Uniform,
            n0: MomentumLaw::Point { value: 0 },
            atoms,
            seed,
        }
    }

    /// Every atom at the same `(n₀, β)`.
    pub fn point(n0: i64, beta: f64, atoms: usize) -> Self {
        Self {
            beta: BetaLaw::Point { value: beta },
            n0: MomentumLaw::Point { value: n0 },
            atoms,
            seed: 0,
        }
    }

    pub fn with_atoms(mut self, atoms: usize) -> Self {
        self.atoms = atoms;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.atoms == 0 {
            return Err(Error::invalid("atoms", "must be positive"));
        }
        match self.beta {
            BetaLaw::Point { value } if !(0.0..1.0).contains(&value) => {
                return Err(Error::invalid("beta", format!("point value {value} outside [0, 1)")))
            }
            BetaLaw::Gaussian { sigma } if !(sigma.is_finite() && sigma > 0.0) => {
                return Err(Error::invalid("beta", "gaussian sigma must be positive"))
            }
            _ => {}
        }
        if let MomentumLaw::Gaussian { sigma } = self.n0 {
            if !(sigma.is_finite() && sigma > 0.0) {
                return Err(Error::invalid("n0", "gaussian sigma must be positive"));
            }
        }
        Ok(())
    }
}

/// Initial condition of one atom: `p = n₀ + β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub n0: i64,
    pub beta: f64,
}

impl Atom {
    pub fn momentum(&self) -> f64 {
        self.n0 as f64 + self.beta
    }
}

/// Fractional part in `[0, 1)`, also for negative input.
pub fn wrap_unit(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Draw atom `index` of the ensemble. Depends only on `(spec, index)`.
pub fn sample_atom(spec: &EnsembleSpec, index: usize) -> Atom {
    let mut rng = substream(spec.seed, Purpose::Ensemble, index as u64);
    let beta = match spec.beta {
        BetaLaw::Point { value } => value,
        BetaLaw::Uniform => rng.random::<f64>(),
        BetaLaw::Gaussian { sigma } => {
            let z: f64 = rng.sample(StandardNormal);
            wrap_unit(sigma * z)
        }
    };
    let n0 = match spec.n0 {
        MomentumLaw::Point { value } => value,
        MomentumLaw::Gaussian { sigma } => {
            let z: f64 = rng.sample(StandardNormal);
            (sigma * z).round() as i64
        }
    };
    Atom { n0, beta }
}

pub fn sample_ensemble(spec: &EnsembleSpec) -> Result<Vec<Atom>> {
    spec.validate()?;
    Ok((0..spec.atoms).into_par_iter().map(|i| sample_atom(spec, i)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_recoil_maps_32_5_and_30_5_us_to_6_3_and_5_9() {
        let c = PhysicalConstants::default();
        let on = kbar_from_period(32.5e-6, &c).unwrap();
        assert!((6.25..=6.35).contains(&on), "{on}");
        assert!((on - 6.3).abs() < 0.05);
        let off = kbar_from_period(30.5e-6, &c).unwrap();
        assert!((off - 5.9).abs() < 0.05, "{off}");
    }

    #[test]
    fn kbar_is_linear_in_period() {
        let c = PhysicalConstants::default();
        let a = kbar_from_period(20e-6, &c).unwrap();
        let b = kbar_from_period(40e-6, &c).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-12);
        let t = period_from_kbar(a, &c).unwrap();
        assert!((t - 20e-6).abs() < 1e-18);
    }

    #[test]
    fn non_positive_period_rejected() {
        let c = PhysicalConstants::default();
        assert!(kbar_from_period(0.0, &c).is_err());
        assert!(kbar_from_period(-1e-6, &c).is_err());
        assert!(PhysicalConstants::new(0.0).is_err());
    }

    #[test]
    fn epsilon_examples() {
        let r = epsilon_from_kbar(2.0 * PI).unwrap();
        assert_eq!((r.epsilon, r.ell), (0.0, 1));
        let r = epsilon_from_kbar(4.0 * PI).unwrap();
        assert_eq!((r.epsilon, r.ell), (0.0, 2));
        let r = epsilon_from_kbar(6.3).unwrap();
        assert_eq!(r.ell, 1);
        assert!((r.epsilon - 0.016_814_692_820_414).abs() < 1e-12);
        assert!(epsilon_from_kbar(PI).is_err());
        assert!(epsilon_from_kbar(1.0).is_err());
    }

    #[test]
    fn thermal_width_of_rubidium_cloud() {
        let c = PhysicalConstants::default();
        let s = thermal_sigma_beta(10e-6, &c, RB85_MASS).unwrap();
        assert!((s - 2.6).abs() < 0.05, "{s}");
        let s4 = thermal_sigma_beta(40e-6, &c, RB85_MASS).unwrap();
        assert!((s4 - 2.0 * s).abs() < 1e-12);
        assert!(thermal_sigma_beta(0.0, &c, RB85_MASS).is_err());
    }

    /// Total-variation distance between the wrapped gaussian and the uniform
    /// law, by brute-force summation of the wrapped density on a fine grid.
    fn wrapped_gaussian_tv(sigma: f64) -> f64 {
        let bins = 2000;
        let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
        let reach = (12.0 * sigma).ceil() as i64 + 1;
        let mut tv = 0.0;
        for b in 0..bins {
            let beta = (b as f64 + 0.5) / bins as f64;
            let density: f64 = (-reach..=reach)
                .map(|j| {
                    let z = (beta + j as f64) / sigma;
                    norm * (-0.5 * z * z).exp()
                })
                .sum();
            tv += (density - 1.0).abs() / bins as f64;
        }
        0.5 * tv
    }

    #[test]
    fn broad_wrapped_gaussian_is_uniform() {
        assert!(wrapped_gaussian_tv(2.6) < 0.01);
        assert!(wrapped_gaussian_tv(1.0) < 0.01);
        // and the oracle is not trivially zero
        assert!(wrapped_gaussian_tv(0.1) > 0.5);
    }

    #[test]
    fn point_ensemble() {
        let atoms = sample_ensemble(&EnsembleSpec::point(0, 0.5, 3)).unwrap();
        assert_eq!(atoms, vec![Atom { n0: 0, beta: 0.5 }; 3]);
    }

    #[test]
    fn uniform_beta_mean() {
        let atoms = sample_ensemble(&EnsembleSpec::uniform(100_000, 11)).unwrap();
        let mean = atoms.iter().map(|a| a.beta).sum::<f64>() / atoms.len() as f64;
        assert!((0.497..=0.503).contains(&mean), "{mean}");
    }

    #[test]
    fn uniform_beta_passes_chi_square() {
        // 20 bins, 19 dof: the 0.999 quantile is 43.82.
        for seed in [1u64, 2, 3] {
            let atoms = sample_ensemble(&EnsembleSpec::uniform(100_000, seed)).unwrap();
            let mut counts = [0usize; 20];
            for a in &atoms {
                counts[(a.beta * 20.0) as usize] += 1;
            }
            let expected = atoms.len() as f64 / 20.0;
            let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
            assert!(chi2 < 43.82, "seed {seed}: chi2 = {chi2}");
        }
    }

    #[test]
    fn sampling_is_deterministic_and_prefix_stable() {
        let spec = EnsembleSpec {
            beta: BetaLaw::Gaussian { sigma: 2.6 },
            n0: MomentumLaw::Gaussian { sigma: 3.0 },
            atoms: 500,
            seed: 99,
        };
        let a = sample_ensemble(&spec).unwrap();
        let b = sample_ensemble(&spec).unwrap();
        assert_eq!(a, b);
        let short = sample_ensemble(&spec.with_atoms(100)).unwrap();
        assert_eq!(&a[..100], &short[..]);
        assert!(a.iter().all(|x| (0.0..1.0).contains(&x.beta)));
        let other = sample_ensemble(&EnsembleSpec { seed: 100, ..spec }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn invalid_ensembles_rejected() {
        assert!(EnsembleSpec::uniform(0, 1).validate().is_err());
        assert!(EnsembleSpec::point(0, 1.0, 1).validate().is_err());
        let bad = EnsembleSpec {
            beta: BetaLaw::Gaussian { sigma: 0.0 },
            ..EnsembleSpec::uniform(1, 1)
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn wrap_unit_stays_in_range() {
        assert_eq!(wrap_unit(-1e-18), 0.0);
        assert_eq!(wrap_unit(2.25), 0.25);
        assert_eq!(wrap_unit(-0.25), 0.75);
    }

    proptest! {
        #[test]
        fn epsilon_decomposition_round_trips(eps in -3.1f64..3.1, ell in 1u32..=10) {
            let kbar = 2.0 * PI * ell as f64 + eps;
            let r = epsilon_from_kbar(kbar).unwrap();
            prop_assert_eq!(r.ell, ell);
            prop_assert!((r.epsilon - eps).abs() < 1e-12);
            prop_assert!(r.epsilon.abs() <= PI);
        }

        #[test]
        fn kbar_strictly_increasing(t in 1e-7f64..1e-3, dt in 1e-9f64..1e-4) {
            let c = PhysicalConstants::default();
            prop_assert!(kbar_from_period(t + dt, &c).unwrap() > kbar_from_period(t, &c).unwrap());
        }
    }
}
