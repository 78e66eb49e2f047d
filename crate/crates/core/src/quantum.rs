//! Exact Floquet evolution on an integer-momentum ladder.
//!
//! One period is `U = exp(i k cos x) exp(-i kbar p² / 2)` with `p = n + β`.
//! The quasimomentum `β` is a label of the state and is only changed by a
//! spontaneous-emission event.

use std::f64::consts::PI;
use std::ops::RangeInclusive;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{sample_ensemble, wrap_unit, Atom, EnsembleSpec, KickParams};
use crate::rng::{substream, Purpose};
use crate::special::bessel_j_orders;
use crate::stats;

/// Boundary mass above which an evolution is flagged as truncated.
pub const BOUNDARY_THRESHOLD: f64 = 1e-8;
/// Kick coefficients smaller than this are dropped.
pub const COEFFICIENT_CUTOFF: f64 = 1e-14;

/// Ladder growth allowed per kick: `⌈k⌉ + 20`.
pub fn ladder_margin(k: f64) -> usize {
    k.ceil() as usize + 20
}

/// Smallest symmetric ladder `N_max` for an atom starting at `n0`.
pub fn required_n_max(n0: i64, params: &KickParams) -> usize {
    n0.unsigned_abs() as usize + params.kicks as usize * ladder_margin(params.k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    /// Momentum of the middle ladder entry.
    center: i64,
    amplitudes: Vec<Complex64>,
    beta: f64,
}

impl QuantumState {
    /// `δ_{n,n0}` on the symmetric ladder `[-n_max, n_max]`.
    pub fn delta(n0: i64, beta: f64, n_max: usize) -> Result<Self> {
        if n0.unsigned_abs() as usize > n_max {
            return Err(Error::invalid(
                "n0",
                format!("{n0} outside ladder of half-width {n_max}"),
            ));
        }
        let mut state = Self::zeros(0, n_max, beta)?;
        state.amplitudes[(n0 + n_max as i64) as usize] = Complex64::new(1.0, 0.0);
        Ok(state)
    }

    /// `δ_{n,n0}` on a ladder of the given half-width centred on `n0`.
    pub fn centered_delta(n0: i64, beta: f64, half_width: usize) -> Result<Self> {
        let mut state = Self::zeros(n0, half_width, beta)?;
        state.amplitudes[half_width] = Complex64::new(1.0, 0.0);
        Ok(state)
    }

    /// Amplitudes for `n = center - H ..= center + H`; the length must be odd.
    pub fn from_amplitudes(center: i64, amplitudes: Vec<Complex64>, beta: f64) -> Result<Self> {
        if amplitudes.len().is_multiple_of(2) {
            return Err(Error::invalid("amplitudes", "ladder length must be odd"));
        }
        check_beta(beta)?;
        Ok(Self {
            center,
            amplitudes,
            beta,
        })
    }

    fn zeros(center: i64, half_width: usize, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self {
            center,
            amplitudes: vec![Complex64::new(0.0, 0.0); 2 * half_width + 1],
            beta,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn center(&self) -> i64 {
        self.center
    }

    pub fn half_width(&self) -> usize {
        self.amplitudes.len() / 2
    }

    pub fn momentum_range(&self) -> RangeInclusive<i64> {
        let h = self.half_width() as i64;
        self.center - h..=self.center + h
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Amplitude at integer momentum `n`; zero off the ladder.
    pub fn amplitude(&self, n: i64) -> Complex64 {
        let idx = n - self.center + self.half_width() as i64;
        usize::try_from(idx)
            .ok()
            .and_then(|i| self.amplitudes.get(i).copied())
            .unwrap_or_default()
    }

    pub fn probability(&self, n: i64) -> f64 {
        self.amplitude(n).norm_sqr()
    }

    /// `(n, |ψ_n|²)` across the ladder.
    pub fn probabilities(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let start = *self.momentum_range().start();
        self.amplitudes
            .iter()
            .enumerate()
            .map(move |(i, a)| (start + i as i64, a.norm_sqr()))
    }

    pub fn norm_sqr(&self) -> f64 {
        stats::sum(self.amplitudes.iter().map(|a| a.norm_sqr()))
    }

    /// `Σ |ψ_n|² (n + β)² / 2`.
    pub fn mean_energy(&self) -> f64 {
        let beta = self.beta;
        stats::sum(self.probabilities().map(|(n, p)| {
            let m = n as f64 + beta;
            0.5 * p * m * m
        }))
    }

    /// `Σ |ψ_n|² ((n + β)² − p0²) / 2`: the energy gained relative to a
    /// particle that started at momentum `p0`.
    pub fn energy_gain(&self, p0: f64) -> f64 {
        let beta = self.beta;
        stats::sum(self.probabilities().map(|(n, p)| {
            let m = n as f64 + beta;
            0.5 * p * (m * m - p0 * p0)
        }))
    }

    /// Probability in the outermost `margin` entries at either end.
    pub fn boundary_mass(&self, margin: usize) -> f64 {
        let len = self.amplitudes.len();
        let margin = margin.min(len / 2);
        stats::sum(
            self.amplitudes[..margin]
                .iter()
                .chain(&self.amplitudes[len - margin..])
                .map(|a| a.norm_sqr()),
        )
    }

    /// `ψ_n ← exp(−i kbar (n+β)²/2) ψ_n`.
    pub fn free_evolve(&mut self, kbar: f64) {
        let start = *self.momentum_range().start();
        let beta = self.beta;
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            *a *= free_phase(kbar, start + i as i64, beta);
        }
    }

    /// Kick by direct convolution `ψ'_{n+m} = Σ_m c_m ψ_n`, truncated to the ladder.
    pub fn apply_kick(&mut self, coeffs: &KickCoefficients) -> KickDiagnostics {
        let len = self.amplitudes.len();
        let m_max = coeffs.m_max as isize;
        let Some(lo) = self.amplitudes.iter().position(|a| a.norm_sqr() > 0.0) else {
            return KickDiagnostics::default();
        };
        let hi = self.amplitudes.iter().rposition(|a| a.norm_sqr() > 0.0).unwrap();
        let before = self.norm_sqr();
        let mut out = vec![Complex64::new(0.0, 0.0); len];
        let out_lo = (lo as isize - m_max).max(0) as usize;
        let out_hi = ((hi as isize + m_max) as usize).min(len - 1);
        for (j, o) in out.iter_mut().enumerate().take(out_hi + 1).skip(out_lo) {
            let mut acc = Complex64::new(0.0, 0.0);
            for (mi, c) in coeffs.values.iter().enumerate() {
                let src = j as isize - (mi as isize - m_max);
                if src >= lo as isize && src <= hi as isize {
                    acc += c * self.amplitudes[src as usize];
                }
            }
            *o = acc;
        }
        self.amplitudes = out;
        let dropped = (before - self.norm_sqr()).max(0.0);
        KickDiagnostics {
            boundary_mass: self.boundary_mass(coeffs.m_max) + dropped,
        }
    }

    /// Shift the quasimomentum by `delta_beta`; the integer part of the
    /// overflow moves the ladder labels.
    pub fn spontaneous_emission(&mut self, delta_beta: f64) {
        let total = self.beta + delta_beta;
        let shift = total.floor();
        self.beta = wrap_unit(total);
        self.center += shift as i64;
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::invalid("beta", format!("{beta} outside [0, 1)")));
    }
    Ok(())
}

/// `exp(−i kbar (n+β)²/2)`, with the `2πℓ` part of `kbar` reduced exactly
/// so that integer phases at resonance carry no rounding.
pub fn free_phase(kbar: f64, n: i64, beta: f64) -> Complex64 {
    let ell = (kbar / (2.0 * PI)).round();
    let eps = kbar - 2.0 * PI * ell;
    let ell_i = ell as i64;
    // πℓ(n+β)² = πℓn² + 2πℓnβ + πℓβ², with n² ≡ n (mod 2)
    let parity = (ell_i.rem_euclid(2) * n.rem_euclid(2)) as f64;
    let cross = wrap_unit((ell_i as f64 * n as f64) * beta);
    let p = n as f64 + beta;
    let angle = PI * parity + 2.0 * PI * cross + PI * ell * beta * beta + 0.5 * eps * p * p;
    Complex64::from_polar(1.0, -angle)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KickDiagnostics {
    /// Probability in the ladder margin (plus anything pushed off the ladder).
    pub boundary_mass: f64,
}

/// `c_m = i^m J_m(k)` for `m ∈ [−m_max, m_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KickCoefficients {
    m_max: usize,
    values: Vec<Complex64>,
}

impl KickCoefficients {
    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn get(&self, m: i64) -> Complex64 {
        if m.unsigned_abs() as usize > self.m_max {
            return Complex64::new(0.0, 0.0);
        }
        self.values[(m + self.m_max as i64) as usize]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Default cutoff `⌈k⌉ + 30`, trimmed to the last coefficient above
    /// [`COEFFICIENT_CUTOFF`].
    pub fn for_kick(k: f64) -> Self {
        let full = kick_coefficients(k, k.ceil() as usize + 30);
        let keep = (0..=full.m_max)
            .rev()
            .find(|&m| full.get(m as i64).norm() >= COEFFICIENT_CUTOFF)
            .unwrap_or(0);
        let start = full.m_max - keep;
        Self {
            m_max: keep,
            values: full.values[start..start + 2 * keep + 1].to_vec(),
        }
    }
}

pub fn kick_coefficients(k: f64, m_max: usize) -> KickCoefficients {
    assert!(k.is_finite() && k >= 0.0, "kick strength must be finite and >= 0");
    let j = bessel_j_orders(k, m_max);
    let values = (-(m_max as i64)..=m_max as i64)
        .map(|m| {
            // c_{-m} = c_m since exp(ik cos x) is even in x
            let a = m.unsigned_abs() as usize;
            let phase = match a % 4 {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(0.0, 1.0),
                2 => Complex64::new(-1.0, 0.0),
                _ => Complex64::new(0.0, -1.0),
            };
            phase * j[a]
        })
        .collect();
    KickCoefficients { m_max, values }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    /// Probability of a spontaneous emission after each kick.
    pub se_probability: f64,
    /// Half-width of the uniform quasimomentum jump, two-photon recoil units.
    pub se_kick_width: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            se_probability: 0.0,
            se_kick_width: 0.5,
        }
    }
}

impl NoiseModel {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.se_probability) {
            return Err(Error::invalid("se_probability", "must lie in [0, 1]"));
        }
        if !(self.se_kick_width.is_finite() && self.se_kick_width >= 0.0) {
            return Err(Error::invalid("se_kick_width", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn is_silent(&self) -> bool {
        self.se_probability == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KickMethod {
    /// FFT to a position grid, multiply by `exp(ik cos x)`, FFT back.
    #[default]
    Spectral,
    /// Direct Bessel convolution.
    Convolution,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Diagnostics {
    /// Largest per-kick boundary mass seen.
    pub boundary_mass: f64,
    pub emissions: u32,
}

impl Diagnostics {
    pub fn truncated(&self) -> bool {
        self.boundary_mass > BOUNDARY_THRESHOLD
    }
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub state: QuantumState,
    pub diagnostics: Diagnostics,
}

struct Spectral {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// `exp(i k cos x_j) / len` on the grid `x_j = 2πj/len`.
    kick: Vec<Complex64>,
}

/// Reusable per-thread buffers.
pub struct Workspace {
    buffer: Vec<Complex64>,
    scratch: Vec<Complex64>,
    phases: Vec<Complex64>,
}

/// Single-atom evolution for fixed kick parameters. Shared read-only across
/// threads; each thread owns a [`Workspace`].
pub struct Propagator {
    params: KickParams,
    half_width: usize,
    coeffs: KickCoefficients,
    spectral: Option<Spectral>,
}

impl Propagator {
    /// Ladders centred on each atom's `n0`, half-width `t(⌈k⌉ + 20)`.
    pub fn new(params: KickParams) -> Self {
        Self::with_method(params, KickMethod::default())
    }

    pub fn with_method(params: KickParams, method: KickMethod) -> Self {
        let half_width = params.kicks as usize * ladder_margin(params.k);
        Self::build(params, half_width, method)
    }

    fn build(params: KickParams, half_width: usize, method: KickMethod) -> Self {
        let coeffs = KickCoefficients::for_kick(params.k);
        let spectral = (method == KickMethod::Spectral).then(|| {
            let len = smooth_length(2 * half_width + 1);
            let mut planner = FftPlanner::new();
            let scale = 1.0 / len as f64;
            Spectral {
                len,
                forward: planner.plan_fft_forward(len),
                inverse: planner.plan_fft_inverse(len),
                kick: (0..len)
                    .map(|j| {
                        let x = 2.0 * PI * j as f64 / len as f64;
                        Complex64::from_polar(scale, params.k * x.cos())
                    })
                    .collect(),
            }
        });
        Self {
            params,
            half_width,
            coeffs,
            spectral,
        }
    }

    pub fn params(&self) -> &KickParams {
        &self.params
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn workspace(&self) -> Workspace {
        let (len, scratch) = match &self.spectral {
            Some(s) => (
                s.len,
                s.forward
                    .get_inplace_scratch_len()
                    .max(s.inverse.get_inplace_scratch_len()),
            ),
            None => (0, 0),
        };
        Workspace {
            buffer: vec![Complex64::new(0.0, 0.0); len],
            scratch: vec![Complex64::new(0.0, 0.0); scratch],
            phases: Vec::new(),
        }
    }

    /// Evolve `δ_{n,n0}` through `t` periods, each a kick, an optional
    /// spontaneous emission, then free evolution.
    pub fn evolve<R: Rng>(&self, atom: Atom, noise: &NoiseModel, rng: &mut R, ws: &mut Workspace) -> Result<Evolution> {
        let state = QuantumState::centered_delta(atom.n0, atom.beta, self.half_width)?;
        self.run(state, noise, rng, ws)
    }

    fn run<R: Rng>(
        &self,
        mut state: QuantumState,
        noise: &NoiseModel,
        rng: &mut R,
        ws: &mut Workspace,
    ) -> Result<Evolution> {
        noise.validate()?;
        let mut diag = Diagnostics::default();
        let kicked = self.params.k != 0.0;
        self.fill_phases(&state, ws);
        for _ in 0..self.params.kicks {
            if kicked {
                let kd = match &self.spectral {
                    Some(s) => spectral_kick(s, &mut state, ws),
                    None => state.apply_kick(&self.coeffs),
                };
                diag.boundary_mass = diag.boundary_mass.max(kd.boundary_mass);
            }
            if !noise.is_silent() && rng.random::<f64>() < noise.se_probability {
                let u: f64 = rng.random();
                state.spontaneous_emission(noise.se_kick_width * (2.0 * u - 1.0));
                diag.emissions += 1;
                self.fill_phases(&state, ws);
            }
            for (a, p) in state.amplitudes.iter_mut().zip(&ws.phases) {
                *a *= p;
            }
        }
        Ok(Evolution {
            state,
            diagnostics: diag,
        })
    }

    fn fill_phases(&self, state: &QuantumState, ws: &mut Workspace) {
        let start = *state.momentum_range().start();
        ws.phases.clear();
        ws.phases
            .extend((0..state.amplitudes.len()).map(|i| free_phase(self.params.kbar, start + i as i64, state.beta)));
    }
}

fn spectral_kick(s: &Spectral, state: &mut QuantumState, ws: &mut Workspace) -> KickDiagnostics {
    let h = state.half_width() as i64;
    let len = s.len as i64;
    ws.buffer.fill(Complex64::new(0.0, 0.0));
    for (i, a) in state.amplitudes.iter().enumerate() {
        ws.buffer[(i as i64 - h).rem_euclid(len) as usize] = *a;
    }
    s.inverse.process_with_scratch(&mut ws.buffer, &mut ws.scratch);
    for (b, kk) in ws.buffer.iter_mut().zip(&s.kick) {
        *b *= kk;
    }
    s.forward.process_with_scratch(&mut ws.buffer, &mut ws.scratch);
    for (i, a) in state.amplitudes.iter_mut().enumerate() {
        *a = ws.buffer[(i as i64 - h).rem_euclid(len) as usize];
    }
    // bins between the two ladder ends fell off the ladder
    let dropped = stats::sum(
        ws.buffer[(h + 1) as usize..(len - h) as usize]
            .iter()
            .map(|b| b.norm_sqr()),
    );
    KickDiagnostics {
        boundary_mass: state.boundary_mass(ladder_margin(0.0)) + dropped,
    }
}

/// Smallest `2^a 3^b 5^c ≥ n`.
fn smooth_length(n: usize) -> usize {
    let mut len = n.max(1);
    loop {
        let mut m = len;
        for p in [2, 3, 5] {
            while m.is_multiple_of(p) {
                m /= p;
            }
        }
        if m == 1 {
            return len;
        }
        len += 1;
    }
}

/// Evolve one atom on the symmetric ladder `[−n_max, n_max]`.
///
/// Fails up front if `n_max < |n0| + t(⌈k⌉ + 20)`.
pub fn evolve_atom_on_ladder<R: Rng>(
    atom: Atom,
    params: &KickParams,
    noise: &NoiseModel,
    rng: &mut R,
    n_max: usize,
) -> Result<Evolution> {
    let required = required_n_max(atom.n0, params);
    if n_max < required {
        return Err(Error::LadderTooSmall {
            required,
            actual: n_max,
        });
    }
    let prop = Propagator::build(*params, n_max, KickMethod::default());
    let mut ws = prop.workspace();
    let state = QuantumState::delta(atom.n0, atom.beta, n_max)?;
    prop.run(state, noise, rng, &mut ws)
}

/// Evolve one atom on an automatically sized ladder.
pub fn evolve_atom<R: Rng>(atom: Atom, params: &KickParams, noise: &NoiseModel, rng: &mut R) -> Result<Evolution> {
    let prop = Propagator::new(*params);
    let mut ws = prop.workspace();
    prop.evolve(atom, noise, rng, &mut ws)
}

pub fn mean_energy(state: &QuantumState) -> f64 {
    state.mean_energy()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyEstimate {
    /// Ensemble mean of the energy gain.
    pub mean: f64,
    pub stderr: f64,
    pub atoms: usize,
    /// Atoms whose evolution touched the ladder boundary.
    pub truncated: usize,
}

/// Mean energy gain `⟨(n+β)²/2⟩ − (n₀+β)²/2` over the ensemble.
pub fn ensemble_energy(spec: &EnsembleSpec, params: &KickParams, noise: &NoiseModel) -> Result<EnergyEstimate> {
    noise.validate()?;
    let atoms = sample_ensemble(spec)?;
    ensemble_energy_for(&atoms, spec.seed, params, noise)
}

/// As [`ensemble_energy`] for pre-sampled atoms; atom `i` draws its noise
/// from substream `(seed, i)`.
pub fn ensemble_energy_for(
    atoms: &[Atom],
    seed: u64,
    params: &KickParams,
    noise: &NoiseModel,
) -> Result<EnergyEstimate> {
    noise.validate()?;
    let prop = Propagator::new(*params);
    let per_atom: Vec<(f64, bool)> = atoms
        .par_iter()
        .enumerate()
        .map_init(
            || prop.workspace(),
            |ws, (i, atom)| {
                let mut rng = substream(seed, Purpose::Noise, i as u64);
                prop.evolve(*atom, noise, &mut rng, ws)
                    .map(|ev| (ev.state.energy_gain(atom.momentum()), ev.diagnostics.truncated()))
            },
        )
        .collect::<Result<_>>()?;
    let gains: Vec<f64> = per_atom.iter().map(|g| g.0).collect();
    let (mean, stderr) = stats::mean_stderr(&gains);
    Ok(EnergyEstimate {
        mean,
        stderr,
        atoms: atoms.len(),
        truncated: per_atom.iter().filter(|g| g.1).count(),
    })
}

/// Ensemble-averaged distribution of `p = n + β`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumHistogram {
    pub edges: Vec<f64>,
    /// Probability in `[edges[i], edges[i+1])`.
    pub mass: Vec<f64>,
    pub underflow: f64,
    pub overflow: f64,
}

impl MomentumHistogram {
    fn empty(edges: &[f64]) -> Self {
        Self {
            edges: edges.to_vec(),
            mass: vec![0.0; edges.len() - 1],
            underflow: 0.0,
            overflow: 0.0,
        }
    }

    fn add(&mut self, p: f64, w: f64) {
        if p < self.edges[0] {
            self.underflow += w;
        } else if p >= *self.edges.last().unwrap() {
            self.overflow += w;
        } else {
            let i = self.edges.partition_point(|e| *e <= p) - 1;
            self.mass[i] += w;
        }
    }

    fn merge(&mut self, other: &Self) {
        for (a, b) in self.mass.iter_mut().zip(&other.mass) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
    }

    pub fn total(&self) -> f64 {
        self.underflow + self.overflow + stats::sum(self.mass.iter().copied())
    }

    /// Mass with `|p| > cut`, counting a bin when it lies wholly outside
    /// `[−cut, cut]`; exact when `±cut` are bin edges.
    pub fn wing_mass(&self, cut: f64) -> f64 {
        let bins = self
            .mass
            .iter()
            .enumerate()
            .filter(|(i, _)| self.edges[*i] >= cut || self.edges[i + 1] <= -cut)
            .map(|(_, m)| *m);
        self.underflow + self.overflow + stats::sum(bins)
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1]))
    }
}

const HISTOGRAM_CHUNK: usize = 32;

/// Ensemble-summed `|ψ_n|²` binned by `p = n + β`, normalised per atom.
pub fn momentum_histogram(
    spec: &EnsembleSpec,
    params: &KickParams,
    noise: &NoiseModel,
    edges: &[f64],
) -> Result<MomentumHistogram> {
    if edges.len() < 2
        || edges
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
    {
        return Err(Error::invalid(
            "edges",
            "need at least two strictly ascending bin edges",
        ));
    }
    noise.validate()?;
    let atoms = sample_ensemble(spec)?;
    let prop = Propagator::new(*params);
    let weight = 1.0 / atoms.len() as f64;
    let partials: Vec<MomentumHistogram> = atoms
        .par_chunks(HISTOGRAM_CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let mut ws = prop.workspace();
            let mut hist = MomentumHistogram::empty(edges);
            for (j, atom) in chunk.iter().enumerate() {
                let idx = (c * HISTOGRAM_CHUNK + j) as u64;
                let mut rng = substream(spec.seed, Purpose::Noise, idx);
                let ev = prop.evolve(*atom, noise, &mut rng, &mut ws)?;
                let beta = ev.state.beta();
                for (n, p) in ev.state.probabilities() {
                    if p > 0.0 {
                        hist.add(n as f64 + beta, p * weight);
                    }
                }
            }
            Ok(hist)
        })
        .collect::<Result<_>>()?;
    let mut total = MomentumHistogram::empty(edges);
    for h in &partials {
        total.merge(h);
    }
    Ok(total)
}
