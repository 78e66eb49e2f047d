use std::f64::consts::{PI, TAU};

use kickrotor::eclassical::ensemble_energy_map;
use kickrotor::model::{EnsembleSpec, KickParams};
use kickrotor::pendulum::{one_minus_phi0, scaling_variable, GQuadrature};
use kickrotor::quantum::{ensemble_energy, NoiseModel};

const K: f64 = 4.2;

fn resonant(t: u32) -> f64 {
    K * K * t as f64 / 4.0
}

#[test]
fn quantum_and_map_ratios_agree_off_resonance() {
    let spec = EnsembleSpec::uniform(3000, 21);
    for (t, eps) in [(12, 0.05), (12, -0.2), (16, 0.03), (16, -0.1), (18, 0.25)] {
        let kbar = TAU + eps;
        let q = ensemble_energy(&spec, &KickParams::new(K, kbar, t).unwrap(), &NoiseModel::none()).unwrap();
        let c = ensemble_energy_map(&spec.with_atoms(30_000), K, kbar, t, 1).unwrap();
        let (rq, rc) = (q.mean / resonant(t), c.mean / resonant(t));
        let noise = 3.0 * (q.stderr.hypot(c.stderr)) / resonant(t);
        assert!(
            (rq - rc).abs() <= 0.1 * rc + noise,
            "t {t} eps {eps}: quantum {rq} map {rc}"
        );
    }
}

#[test]
fn pendulum_ratio_tracks_the_map_at_small_epsilon() {
    let quad = GQuadrature::new(200, 200).unwrap();
    let eps = 4e-3;
    let spec = EnsembleSpec::uniform(40_000, 9);
    for x in [5.0, 8.0, 11.2, 15.0, 20.0] {
        let t = (x / (K * eps).sqrt()).round() as u32;
        let xr = scaling_variable(t as f64, K, eps);
        let g = quad.evaluate(&[xr])[0];
        let predicted = one_minus_phi0(xr).unwrap() + 4.0 * g / (PI * xr);
        let e = ensemble_energy_map(&spec, K, TAU + eps, t, 1).unwrap();
        let (r, se) = (e.mean / resonant(t), e.stderr / resonant(t));
        assert!(
            (r - predicted).abs() <= 0.06 * predicted + 3.0 * se,
            "x {xr}: map {r} pendulum {predicted}"
        );
    }
}

#[test]
fn map_ratio_collapses_in_the_scaling_variable() {
    let spec = EnsembleSpec::uniform(40_000, 4);
    let x = 11.2;
    let ratios: Vec<f64> = [24u32, 36, 48]
        .iter()
        .map(|&t| {
            let eps = (x / t as f64).powi(2) / K;
            ensemble_energy_map(&spec, K, TAU + eps, t, 1).unwrap().mean / resonant(t)
        })
        .collect();
    let spread = ratios.iter().cloned().fold(f64::MIN, f64::max) - ratios.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread < 0.05 * ratios[2], "{ratios:?}");
}
