//! The ε-classical standard map
//!
//! ```text
//! J ← J + |ε| k sin ϑ,    ϑ ← ϑ + J  (mod 2π)
//! ```
//!
//! with `|ε|` in the role of Planck's constant. Each atom `(n₀, β)` starts at
//! `J₀ = ε n₀ + πℓ + kbar β` and `ϑ₀ = θ₀ + π(1 − sign ε)/2`, `θ₀` uniform.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{epsilon_from_kbar, sample_ensemble, wrap_unit, Atom, EnsembleSpec, PhysicalConstants, Resonance};
use crate::rng::{substream, Purpose};
use crate::scan::{EngineKind, ScanResult, ScanRow};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapParams {
    /// `|ε| k`
    pub eff_kick: f64,
    pub epsilon: f64,
    pub ell: u32,
    pub kbar: f64,
}

impl MapParams {
    pub fn new(k: f64, kbar: f64) -> Result<Self> {
        if !(k.is_finite() && k >= 0.0) {
            return Err(Error::invalid("k", "must be finite and >= 0"));
        }
        let Resonance { epsilon, ell } = epsilon_from_kbar(kbar)?;
        Ok(Self {
            eff_kick: epsilon.abs() * k,
            epsilon,
            ell,
            kbar,
        })
    }

    pub fn sign(&self) -> f64 {
        if self.epsilon < 0.0 {
            -1.0
        } else {
            1.0
        }
    }

    /// Initial `(ϑ₀, J₀)` for an atom and an initial phase `θ₀`.
    pub fn initial_point(&self, atom: Atom, theta0: f64) -> (f64, f64) {
        let j0 = self.epsilon * atom.n0 as f64 + PI * self.ell as f64 + self.kbar * atom.beta;
        let theta = (theta0 + 0.5 * PI * (1.0 - self.sign())).rem_euclid(TAU);
        (theta, j0)
    }
}

/// Trajectory arrays; `theta` is kept in `[0, 2π)`, `j` is never reduced.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MapState {
    pub theta: Vec<f64>,
    pub j: Vec<f64>,
    pub j0: Vec<f64>,
}

impl MapState {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// `|ε|⁻² (J − J₀)² / 2` per trajectory.
    pub fn energies(&self, epsilon: f64) -> Vec<f64> {
        let scale = 0.5 / (epsilon * epsilon);
        self.j
            .iter()
            .zip(&self.j0)
            .map(|(j, j0)| scale * (j - j0) * (j - j0))
            .collect()
    }
}

/// One map iteration for a single trajectory.
#[inline]
pub fn step(theta: f64, j: f64, eff_kick: f64) -> (f64, f64) {
    let j = j + eff_kick * theta.sin();
    ((theta + j).rem_euclid(TAU), j)
}

fn draw_phase<R: Rng>(rng: &mut R) -> f64 {
    TAU * rng.random::<f64>()
}

/// `trajectories_per_atom` trajectories per atom, trajectory-major within an
/// atom. Atom `i` draws its phases from substream `(seed, i)`, so the same
/// phases are reused at every `kbar`.
pub fn init_map_state(atoms: &[Atom], params: &MapParams, trajectories_per_atom: usize, seed: u64) -> MapState {
    let n = atoms.len() * trajectories_per_atom;
    let mut state = MapState {
        theta: Vec::with_capacity(n),
        j: Vec::with_capacity(n),
        j0: Vec::with_capacity(n),
    };
    for (i, atom) in atoms.iter().enumerate() {
        let mut rng = substream(seed, Purpose::Phase, i as u64);
        for _ in 0..trajectories_per_atom {
            let (theta, j0) = params.initial_point(*atom, draw_phase(&mut rng));
            state.theta.push(theta);
            state.j.push(j0);
            state.j0.push(j0);
        }
    }
    state
}

pub fn map_step(state: &mut MapState, params: &MapParams) {
    for (theta, j) in state.theta.iter_mut().zip(state.j.iter_mut()) {
        (*theta, *j) = step(*theta, *j, params.eff_kick);
    }
}

/// Exact-resonance gain of one atom, `(k²/4) |Σ_{s<t} e^{isφ}|²` with
/// `φ = πℓ(1 + 2β)`.
pub fn resonant_gain(atom: Atom, k: f64, ell: u32, kicks: u32) -> f64 {
    let phi = TAU * wrap_unit(0.5 * ell as f64 * (1.0 + 2.0 * atom.beta));
    let t = kicks as f64;
    let half = (0.5 * phi).sin();
    let fejer = if half.abs() < 1e-9 {
        t * t
    } else {
        (0.5 * t * phi).sin().powi(2) / (half * half)
    };
    0.25 * k * k * fejer
}

/// Mean energy gain over the ensemble.
///
/// `ε = 0` has no map limit and is routed to [`resonant_gain`].
pub fn ensemble_energy_map(
    spec: &EnsembleSpec,
    k: f64,
    kbar: f64,
    kicks: u32,
    trajectories_per_atom: usize,
) -> Result<stats::Estimate> {
    let atoms = sample_ensemble(spec)?;
    energy_for_atoms(&atoms, spec.seed, k, kbar, kicks, trajectories_per_atom)
}

/// As [`ensemble_energy_map`] for pre-sampled atoms.
pub fn energy_for_atoms(
    atoms: &[Atom],
    seed: u64,
    k: f64,
    kbar: f64,
    kicks: u32,
    trajectories_per_atom: usize,
) -> Result<stats::Estimate> {
    if trajectories_per_atom == 0 {
        return Err(Error::invalid("trajectories_per_atom", "must be >= 1"));
    }
    let params = MapParams::new(k, kbar)?;
    if params.epsilon == 0.0 {
        let gains: Vec<f64> = atoms.iter().map(|a| resonant_gain(*a, k, params.ell, kicks)).collect();
        return Ok(stats::Estimate::from_samples(&gains));
    }
    let scale = 0.5 / (params.epsilon * params.epsilon);
    let gains: Vec<f64> = atoms
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, atom)| {
            let mut rng = substream(seed, Purpose::Phase, i as u64);
            (0..trajectories_per_atom)
                .map(|_| {
                    let (mut theta, j0) = params.initial_point(*atom, draw_phase(&mut rng));
                    let mut j = j0;
                    for _ in 0..kicks {
                        (theta, j) = step(theta, j, params.eff_kick);
                    }
                    scale * (j - j0) * (j - j0)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(stats::Estimate::from_samples(&gains))
}

/// One [`ensemble_energy_map`] per grid point with a common ensemble and
/// common phases.
pub fn scan_energy_map(
    spec: &EnsembleSpec,
    k: f64,
    kbar_grid: &[f64],
    kicks: u32,
    trajectories_per_atom: usize,
    consts: &PhysicalConstants,
) -> Result<ScanResult> {
    let atoms = sample_ensemble(spec)?;
    let rows = kbar_grid
        .iter()
        .map(|&kbar| {
            let est = energy_for_atoms(&atoms, spec.seed, k, kbar, kicks, trajectories_per_atom)?;
            ScanRow::new(
                k,
                kbar,
                kicks,
                EngineKind::Eclassical,
                est.mean,
                est.stderr,
                est.samples,
                spec.seed,
                consts,
            )
        })
        .collect::<Result<_>>()?;
    Ok(ScanResult::new(k, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EnsembleSpec;
    use proptest::prelude::*;

    #[test]
    fn step_examples() {
        let (theta, j) = step(PI / 2.0, 0.0, 1.0);
        assert_eq!(j, 1.0);
        assert!((theta - (PI / 2.0 + 1.0)).abs() < 1e-15);

        let (mut theta, mut j) = (0.3, 0.7);
        for s in 1..=5 {
            (theta, j) = step(theta, j, 0.0);
            assert_eq!(j, 0.7);
            assert!((theta - (0.3 + 0.7 * s as f64).rem_euclid(TAU)).abs() < 1e-14);
        }

        let (mut theta, mut j) = (PI, TAU);
        for _ in 0..100 {
            (theta, j) = step(theta, j, 2.5);
        }
        assert!((theta - PI).abs() < 1e-12);
        assert!((j - TAU).abs() < 1e-12);
    }

    #[test]
    fn initial_conditions() {
        let p = MapParams::new(4.2, TAU + 1e-9).unwrap();
        let (_, j0) = p.initial_point(Atom { n0: 0, beta: 0.5 }, 0.0);
        assert!((j0 - TAU).abs() < 1e-8);
        let (_, j0) = p.initial_point(Atom { n0: 0, beta: 0.0 }, 0.0);
        assert!((j0 - PI).abs() < 1e-12);
        let (theta, _) = p.initial_point(Atom { n0: 0, beta: 0.0 }, 1.25);
        assert_eq!(theta, 1.25);
        let neg = MapParams::new(4.2, TAU - 0.1).unwrap();
        let (theta, _) = neg.initial_point(Atom { n0: 0, beta: 0.0 }, 1.25);
        assert!((theta - (1.25 + PI)).abs() < 1e-15);
        let (_, j0) = neg.initial_point(Atom { n0: 3, beta: 0.0 }, 0.0);
        assert!((j0 - (PI - 0.3)).abs() < 1e-12);
    }

    #[test]
    fn state_arrays_are_congruent() {
        let atoms = sample_ensemble(&EnsembleSpec::uniform(10, 1)).unwrap();
        let p = MapParams::new(4.2, 6.3).unwrap();
        let mut s = init_map_state(&atoms, &p, 3, 1);
        assert_eq!(s.len(), 30);
        assert_eq!(s.j.len(), 30);
        assert_eq!(s.j0.len(), 30);
        map_step(&mut s, &p);
        assert!(s.theta.iter().all(|t| (0.0..TAU).contains(t)));
    }

    #[test]
    fn map_step_matches_direct_loop() {
        let atoms = sample_ensemble(&EnsembleSpec::uniform(50, 9)).unwrap();
        let p = MapParams::new(4.2, 6.1).unwrap();
        let mut s = init_map_state(&atoms, &p, 2, 9);
        for _ in 0..14 {
            map_step(&mut s, &p);
        }
        let (mean, _) = stats::mean_stderr(&s.energies(p.epsilon));
        let est = energy_for_atoms(&atoms, 9, 4.2, 6.1, 14, 2).unwrap();
        assert_eq!(mean, est.mean);
    }

    #[test]
    fn zero_kick_gives_zero() {
        let spec = EnsembleSpec::uniform(100, 4);
        for &kbar in &[5.9, TAU, 6.5] {
            let est = ensemble_energy_map(&spec, 0.0, kbar, 12, 1).unwrap();
            assert_eq!(est.mean, 0.0);
        }
    }

    #[test]
    fn resonant_limit_formulas() {
        let k = 4.2;
        let ball = resonant_gain(Atom { n0: 0, beta: 0.5 }, k, 1, 10);
        assert!((ball - (k * 10.0).powi(2) / 4.0).abs() < 1e-9);
        assert!(resonant_gain(Atom { n0: 0, beta: 0.0 }, k, 1, 8).abs() < 1e-20);
        let spec = EnsembleSpec::uniform(40_000, 2);
        let est = ensemble_energy_map(&spec, k, TAU, 16, 1).unwrap();
        assert!((est.mean - k * k * 4.0).abs() < 3.0 * est.stderr);
    }

    #[test]
    fn small_epsilon_approaches_resonance() {
        let (k, t) = (4.2, 16);
        let spec = EnsembleSpec::uniform(50_000, 11);
        for eps in [1e-3, 1e-4] {
            let est = ensemble_energy_map(&spec, k, TAU + eps, t, 1).unwrap();
            let ratio = est.mean / (k * k * t as f64 / 4.0);
            assert!((ratio - 1.0).abs() < 0.05, "eps={eps}: {ratio}");
        }
    }

    #[test]
    fn energy_curve_is_symmetric_for_matched_initial_momenta() {
        // J₀ ≡ π + c on both sides: β = c / kbar
        let offsets: Vec<f64> = (0..20_000).map(|i| 0.9 * TAU * (i as f64 + 0.5) / 20_000.0).collect();
        for eps in [0.05, 0.15] {
            let atoms = |kbar: f64| -> Vec<Atom> { offsets.iter().map(|c| Atom { n0: 0, beta: c / kbar }).collect() };
            let a = energy_for_atoms(&atoms(TAU + eps), 6, 4.2, TAU + eps, 14, 1).unwrap();
            let b = energy_for_atoms(&atoms(TAU - eps), 6, 4.2, TAU - eps, 14, 1).unwrap();
            let tol = 3.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
            assert!((a.mean - b.mean).abs() < tol, "eps={eps}: {} vs {}", a.mean, b.mean);
        }
    }

    #[test]
    fn uniform_beta_asymmetry_is_first_order() {
        let spec = EnsembleSpec::uniform(40_000, 6);
        for eps in [0.05, 0.15] {
            let a = ensemble_energy_map(&spec, 4.2, TAU + eps, 14, 1).unwrap();
            let b = ensemble_energy_map(&spec, 4.2, TAU - eps, 14, 1).unwrap();
            let tol = 3.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt() + eps / PI * a.mean.max(b.mean);
            assert!((a.mean - b.mean).abs() < tol, "eps={eps}: {} vs {}", a.mean, b.mean);
        }
    }

    #[test]
    fn scan_rows_and_normalisation() {
        let spec = EnsembleSpec::uniform(5_000, 1);
        let consts = PhysicalConstants::default();
        let grid = [6.0, TAU, 6.5];
        let res = scan_energy_map(&spec, 4.2, &grid, 12, 1, &consts).unwrap();
        assert_eq!(res.rows().len(), 3);
        let mid = res.rows()[1];
        assert_eq!(mid.epsilon, 0.0);
        assert!((mid.ratio - 1.0).abs() < 3.0 * mid.ratio_stderr());
        assert!((mid.ratio - mid.mean_energy / (4.2 * 4.2 * 3.0)).abs() < 1e-12);
        assert!(scan_energy_map(&spec, 4.2, &[3.0], 12, 1, &consts).is_err());
        let zero = scan_energy_map(&spec, 0.0, &grid, 12, 1, &consts).unwrap();
        assert!(zero.rows().iter().all(|r| r.mean_energy == 0.0 && r.ratio == 0.0));
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let spec = EnsembleSpec::uniform(3_000, 21);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| ensemble_energy_map(&spec, 4.2, 6.2, 15, 2).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    proptest! {
        #[test]
        fn area_preserving(theta in 0.5f64..5.5, j in -10.0f64..10.0, a in 0.0f64..3.0) {
            let h = 1e-6;
            let wrap = |d: f64| (d + PI).rem_euclid(TAU) - PI;
            let (tp, jp) = step(theta + h, j, a);
            let (tm, jm) = step(theta - h, j, a);
            let (dtt, djt) = (wrap(tp - tm) / (2.0 * h), (jp - jm) / (2.0 * h));
            let (tp, jp) = step(theta, j + h, a);
            let (tm, jm) = step(theta, j - h, a);
            let (dtj, djj) = (wrap(tp - tm) / (2.0 * h), (jp - jm) / (2.0 * h));
            prop_assert!((dtt * djj - dtj * djt - 1.0).abs() < 1e-8);
        }
    }
}
