//! Acceptance criteria C1–C11.
//!
//! Every test writes one `[PASS]`/`[FAIL]` line to stdout (uncaptured) and
//! then asserts. Run with `cargo test --test acceptance`.

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kickrotor::eclassical::{energy_for_atoms, ensemble_energy_map};
use kickrotor::model::{sample_ensemble, Atom, EnsembleSpec, KickParams};
use kickrotor::pendulum::{GTable, PendulumOrbit};
use kickrotor::quantum::{ensemble_energy, evolve_atom, NoiseModel, Propagator, QuantumState};
use kickrotor::scan::report::{peaks_csv, scan_csv};
use kickrotor::scan::{
    find_side_peaks, fit_x0, fwhm_by_kicks, run_pdist, run_scan, EngineKind, EngineSelection, Exclusion, GridConfig,
    Header, PdistConfig, ScanConfig, ScanResult,
};

fn verdict(id: &str, pass: bool, detail: impl AsRef<str>) {
    let line = format!("\n[{}] {id}: {}\n", if pass { "PASS" } else { "FAIL" }, detail.as_ref());
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(pass, "{id} failed: {}", detail.as_ref());
}

fn resonant(k: f64, t: u32) -> f64 {
    k * k * t as f64 / 4.0
}

fn rk4(s: [f64; 2], h: f64) -> [f64; 2] {
    let f = |s: [f64; 2]| [s[1], s[0].sin()];
    let k1 = f(s);
    let k2 = f([s[0] + 0.5 * h * k1[0], s[1] + 0.5 * h * k1[1]]);
    let k3 = f([s[0] + 0.5 * h * k2[0], s[1] + 0.5 * h * k2[1]]);
    let k4 = f([s[0] + h * k3[0], s[1] + h * k3[1]]);
    [
        s[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        s[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

#[test]
fn c01_resonant_linear_growth() {
    let (k, t) = (4.2, 16);
    let target = resonant(k, t);
    let q = ensemble_energy(
        &EnsembleSpec::uniform(300_000, 1),
        &KickParams::new(k, TAU, t).unwrap(),
        &NoiseModel::none(),
    )
    .unwrap();
    let c = ensemble_energy_map(&EnsembleSpec::uniform(1_000_000, 1), k, TAU + 1e-4, t, 1).unwrap();
    let ok = |mean: f64, se: f64| (mean - target).abs() <= 3.0 * se && 3.0 * se <= 0.02 * target;
    verdict(
        "C1 resonant growth k^2 t/4 = 70.56",
        ok(q.mean, q.stderr) && ok(c.mean, c.stderr),
        format!(
            "quantum {:.3} +- {:.3}, eps-classical {:.3} +- {:.3}",
            q.mean, q.stderr, c.mean, c.stderr
        ),
    );
}

#[test]
fn c02_ballistic_resonance() {
    let k = 4.2;
    let atom = Atom { n0: 0, beta: 0.5 };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut worst = 0.0_f64;
    for t in 1..=20 {
        let params = KickParams::new(k, TAU, t).unwrap();
        let evo = evolve_atom(atom, &params, &NoiseModel::none(), &mut rng).unwrap();
        let gain = evo.state.energy_gain(0.5);
        let expected = (k * t as f64).powi(2) / 4.0;
        worst = worst.max((gain - expected).abs());
    }
    verdict(
        "C2 ballistic gain (kt)^2/4, t <= 20",
        worst <= 1e-6,
        format!("max |dE| = {worst:.2e}"),
    );
}

#[test]
fn c03_antiresonance() {
    let mut worst = 0.0_f64;
    for k in [1.0, 2.5, 4.2, 5.2] {
        for t in (2..=20).step_by(2) {
            let params = KickParams::new(k, TAU, t).unwrap();
            let prop = Propagator::new(params);
            let initial = QuantumState::centered_delta(0, 0.0, prop.half_width()).unwrap();
            let mut ws = prop.workspace();
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let evo = prop
                .evolve(Atom { n0: 0, beta: 0.0 }, &NoiseModel::none(), &mut rng, &mut ws)
                .unwrap();
            let overlap: Complex64 = initial
                .momentum_range()
                .map(|n| initial.amplitude(n).conj() * evo.state.amplitude(n))
                .sum();
            worst = worst.max((1.0 - overlap.norm_sqr()).abs());
        }
    }
    verdict(
        "C3 antiresonant revival, even t",
        worst <= 1e-8,
        format!("max |1 - F| = {worst:.2e}"),
    );
}

#[test]
fn c04_g_function() {
    let table = GTable::standard();
    let g0 = table.g()[0];
    let secondary = table
        .local_maxima()
        .into_iter()
        .filter(|&(x, _)| x > 8.0)
        .map(|(x, _)| x)
        .next()
        .unwrap_or(f64::NAN);
    let saturation = table.mean_over(50.0, 100.0).unwrap();
    let g0_ok = (g0 - 4.0 / 3.0).abs() <= 1e-3;
    let peak_ok = (secondary - 11.8).abs() <= 0.3;
    let sat_ok = (saturation - 1.3).abs() <= 0.05;
    verdict(
        "C4 G(x) table",
        g0_ok && peak_ok && sat_ok,
        format!(
            "G(0) = {g0:.3e} [{}], secondary max x = {secondary:.3} [{}], saturation {saturation:.4} [{}], \
             quadrature error {:.1e}",
            if g0_ok { "ok" } else { "want 4/3" },
            if peak_ok { "ok" } else { "want 11.8" },
            if sat_ok { "ok" } else { "want 1.3" },
            table.error_estimate()
        ),
    );
}

#[test]
fn c05_elliptic_vs_ode() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let h = 1e-4;
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let s0 = [rng.random_range(0.0..TAU), rng.random_range(-3.0..3.0)];
        let sol = PendulumOrbit::new(s0[0], s0[1]).unwrap().solution();
        let mut s = s0;
        for i in 1..=200_000 {
            s = rk4(s, h);
            if i % 100 == 0 {
                worst = worst.max((sol.momentum(i as f64 * h) - s[1]).abs());
            }
        }
    }
    verdict(
        "C5 elliptic vs RK4, 100 orbits, x <= 20",
        worst <= 1e-6,
        format!("max |dJ'| = {worst:.2e}"),
    );
}

fn paired_ratios(res: &ScanResult, t: u32) -> Vec<(f64, f64, f64)> {
    let q = res.curve(t, EngineKind::Quantum);
    let c = res.curve(t, EngineKind::Eclassical);
    q.iter().zip(&c).map(|(a, b)| (a.epsilon, a.ratio, b.ratio)).collect()
}

#[test]
fn c06_cross_engine_scans() {
    let cfg = ScanConfig::reproduction(4.2, EngineSelection::Both, 3);
    let res = run_scan(&cfg).unwrap();
    let mut worst = (0.0_f64, 0.0, 0);
    for &t in &cfg.kicks {
        for (eps, rq, rc) in paired_ratios(&res, t) {
            if (0.02..=0.3).contains(&eps.abs()) {
                let rel = (rq - rc).abs() / rc;
                if rel > worst.0 {
                    worst = (rel, eps, t);
                }
            }
        }
    }
    let mut resolved = true;
    for engine in [EngineKind::Quantum, EngineKind::Eclassical] {
        let report = find_side_peaks(&res, engine, Exclusion::default()).unwrap();
        resolved &= report.entries.iter().all(|e| e.left.is_some() && e.right.is_some());
    }
    verdict(
        "C6 quantum vs eps-classical scans, |eps| in [0.02, 0.3]",
        worst.0 <= 0.1 && resolved,
        format!(
            "max relative gap {:.3} at eps {:+.3}, t {}; side peaks resolved: {resolved}",
            worst.0, worst.1, worst.2
        ),
    );
}

#[test]
fn c07_peak_motion_law() {
    let cfg = ScanConfig::reproduction(4.1, EngineSelection::Eclassical, 5);
    let res = run_scan(&cfg).unwrap();
    let report = find_side_peaks(&res, EngineKind::Eclassical, Exclusion::default()).unwrap();
    let fit = fit_x0(&report).unwrap();
    verdict(
        "C7 side peaks |eps| = x0^2/(t^2 k), k = 4.1",
        (10.1..=12.3).contains(&fit.x0) && fit.max_relative_residual <= 0.1,
        format!(
            "x0 = {:.3} +- {:.3} from {} peaks, max residual {:.3}",
            fit.x0, fit.stderr, fit.points, fit.max_relative_residual
        ),
    );
}

#[test]
fn c08_sub_fourier_narrowing() {
    let mut cfg = ScanConfig::reproduction(4.2, EngineSelection::Eclassical, 6);
    cfg.grid = GridConfig::around_resonance(1, 0.35, 0.0025);
    let res = run_scan(&cfg).unwrap();
    let widths: Vec<(u32, f64)> = fwhm_by_kicks(&res, EngineKind::Eclassical)
        .into_iter()
        .map(|(t, w)| (t, w.unwrap()))
        .collect();
    let w = |t: u32| widths.iter().find(|p| p.0 == t).unwrap().1;
    let ratio = w(18) / w(12);
    let monotone = widths.windows(2).all(|p| p[1].1 < p[0].1);
    verdict(
        "C8 FWHM(18)/FWHM(12) < 12/18",
        ratio < 12.0 / 18.0,
        format!("FWHM {widths:.4?}, ratio {ratio:.3}, monotone {monotone}"),
    );
}

#[test]
fn c09_scaling_collapse() {
    let k = 4.2;
    let kicks = [32u32, 48, 64];
    let spec = EnsembleSpec::uniform(1_000_000, 9);
    let atoms = sample_ensemble(&spec).unwrap();
    let mut worst = (0.0_f64, 0.0);
    for i in 0..=6 {
        let x = 5.0 + 2.5 * i as f64;
        let ratios: Vec<f64> = kicks
            .iter()
            .map(|&t| {
                let eps = (x / t as f64).powi(2) / k;
                energy_for_atoms(&atoms, spec.seed, k, TAU + eps, t, 1).unwrap().mean / resonant(k, t)
            })
            .collect();
        let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
        let spread = (hi - lo) / lo;
        if spread > worst.0 {
            worst = (spread, x);
        }
    }
    verdict(
        "C9 ratio collapse in x = t sqrt(k|eps|), t in {32, 48, 64}",
        worst.0 <= 0.05,
        format!("max relative spread {:.3} at x = {}", worst.0, worst.1),
    );
}

#[test]
fn c10_momentum_wings() {
    let mut cfg = ScanConfig::reproduction(4.2, EngineSelection::Quantum, 8);
    let pd = PdistConfig::reproduction();
    let edges = pd.edges.points().unwrap();
    cfg.pdist = Some(pd.clone());
    let hists = run_pdist(&cfg, &pd.kbar, pd.kicks, &edges).unwrap();
    let wing = |kbar: f64| hists.iter().find(|h| h.0 == kbar).unwrap().1.wing_mass(10.0);
    let (on, off) = (wing(6.3), wing(5.9));
    verdict(
        "C10 t = 14 wing mass beyond |p| = 10",
        on > off,
        format!("kbar 6.3: {on:.4}, kbar 5.9: {off:.4}"),
    );
}

fn determinism_run(threads: usize) -> Vec<u8> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| {
        let mut cfg = ScanConfig::reproduction(4.2, EngineSelection::Both, 11);
        cfg.kicks = vec![12, 14, 16];
        cfg.ensemble.atoms = 400;
        cfg.eclassical.trajectories = 20_000;
        cfg.grid = GridConfig::around_resonance(1, 0.35, 0.01);
        let res = run_scan(&cfg).unwrap();
        let header = Header {
            config_hash: cfg.config_hash(),
            seed: cfg.seed,
            k: Some(cfg.k),
        };
        let mut bytes = scan_csv(&header, &res).into_bytes();
        let report = find_side_peaks(&res, EngineKind::Eclassical, Exclusion::default()).unwrap();
        bytes.extend(peaks_csv(&header, &report).into_bytes());
        bytes
    })
}

#[test]
fn c11_determinism() {
    let one = determinism_run(1);
    let again = determinism_run(1);
    let many = determinism_run(4);
    verdict(
        "C11 byte-identical CSV across runs and thread counts",
        one == again && one == many,
        format!(
            "{} bytes, rerun equal {}, 1 vs 4 threads equal {}",
            one.len(),
            one == again,
            one == many
        ),
    );
}
