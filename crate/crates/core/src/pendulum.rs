//! Pendulum approximation near a principal resonance.
//!
//! In scaled variables `x = t √(k|ε|)`, `J′ = J / √(k|ε|)` the ε-classical map
//! reduces to `dϑ/dx = J′`, `dJ′/dx = sin ϑ` with `H′ = J′²/2 + cos ϑ`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::special::{ellip_f, GaussLegendre, Jacobi};
use crate::stats;

/// Position of the maximum of `G(x)/x`.
pub const DEFAULT_X0: f64 = 11.2;

const SEPARATRIX_TOLERANCE: f64 = 1e-12;

/// `1/√(k|ε|)`, in kicks.
pub fn t_res(k: f64, epsilon: f64) -> Result<f64> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::invalid("k", "must be positive for a finite resonance time"));
    }
    if !(epsilon.is_finite() && epsilon != 0.0) {
        return Err(Error::invalid("epsilon", "must be nonzero for a finite resonance time"));
    }
    Ok(1.0 / (k * epsilon.abs()).sqrt())
}

/// `x = t / t_res = t √(k|ε|)`.
pub fn scaling_variable(kicks: f64, k: f64, epsilon: f64) -> f64 {
    kicks * (k * epsilon.abs()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitClass {
    Trapped,
    Separatrix,
    Rotating,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumOrbit {
    pub theta0: f64,
    pub jprime0: f64,
    /// `H′ = J′₀²/2 + cos θ₀`
    pub energy: f64,
    /// `√((H′ + 1)/2)`
    pub kappa: f64,
    pub class: OrbitClass,
}

impl PendulumOrbit {
    pub fn new(theta0: f64, jprime0: f64) -> Result<Self> {
        if !(theta0.is_finite() && jprime0.is_finite()) {
            return Err(Error::invalid("orbit", "initial conditions must be finite"));
        }
        let energy = 0.5 * jprime0 * jprime0 + theta0.cos();
        let kappa = (0.5 * (energy + 1.0)).max(0.0).sqrt();
        let class = if (kappa - 1.0).abs() < SEPARATRIX_TOLERANCE {
            OrbitClass::Separatrix
        } else if kappa < 1.0 {
            OrbitClass::Trapped
        } else {
            OrbitClass::Rotating
        };
        Ok(Self {
            theta0,
            jprime0,
            energy,
            kappa,
            class,
        })
    }

    /// Closed-form solution with the elliptic parameter and phase fixed.
    pub fn solution(&self) -> OrbitSolution {
        // φ = ϑ − π puts the stable point at the origin
        let phi0 = self.theta0.rem_euclid(TAU) - PI;
        let kappa = self.kappa;
        let kind = match self.class {
            OrbitClass::Separatrix if self.jprime0 == 0.0 => Kind::Rest { angle: self.theta0 },
            OrbitClass::Separatrix => {
                let sign = if self.jprime0 < 0.0 { -1.0 } else { 1.0 };
                Kind::Separatrix {
                    u0: (sign * 0.5 * phi0).tan().asinh(),
                    sign,
                }
            }
            OrbitClass::Trapped => {
                let m = kappa * kappa;
                let am0 = (0.5 * phi0).sin().atan2(0.5 * self.jprime0);
                Kind::Trapped {
                    jacobi: Jacobi::new(m).expect("kappa < 1"),
                    kappa,
                    u0: ellip_f(am0, m),
                }
            }
            OrbitClass::Rotating => {
                let m = 1.0 / (kappa * kappa);
                let sign = if self.jprime0 < 0.0 { -1.0 } else { 1.0 };
                Kind::Rotating {
                    jacobi: Jacobi::new(m).expect("kappa > 1"),
                    kappa,
                    u0: ellip_f(sign * 0.5 * phi0, m),
                    sign,
                }
            }
        };
        OrbitSolution { kind }
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Rest {
        angle: f64,
    },
    Trapped {
        jacobi: Jacobi,
        kappa: f64,
        u0: f64,
    },
    Rotating {
        jacobi: Jacobi,
        kappa: f64,
        u0: f64,
        sign: f64,
    },
    Separatrix {
        u0: f64,
        sign: f64,
    },
}

#[derive(Debug, Clone)]
pub struct OrbitSolution {
    kind: Kind,
}

impl OrbitSolution {
    /// `J′(x)`
    pub fn momentum(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Rest { .. } => 0.0,
            Kind::Trapped { jacobi, kappa, u0 } => 2.0 * kappa * jacobi.eval(x + u0).1,
            Kind::Rotating {
                jacobi,
                kappa,
                u0,
                sign,
            } => sign * 2.0 * kappa * jacobi.eval(kappa * x + u0).2,
            Kind::Separatrix { u0, sign } => sign * 2.0 / (x + u0).cosh(),
        }
    }

    /// `ϑ(x)` reduced to `[0, 2π)`.
    pub fn angle(&self, x: f64) -> f64 {
        let half = match &self.kind {
            Kind::Rest { angle } => return angle.rem_euclid(TAU),
            Kind::Trapped { jacobi, kappa, u0 } => {
                let (sn, _, dn) = jacobi.eval(x + u0);
                (kappa * sn).atan2(dn)
            }
            Kind::Rotating {
                jacobi,
                kappa,
                u0,
                sign,
            } => {
                let (sn, cn, _) = jacobi.eval(kappa * x + u0);
                sign * sn.atan2(cn)
            }
            Kind::Separatrix { u0, sign } => sign * (x + u0).sinh().atan(),
        };
        (PI + 2.0 * half).rem_euclid(TAU)
    }
}

/// `J′(x)` on the orbit through `(θ₀, J′₀)`.
pub fn pendulum_momentum(x: f64, orbit: &PendulumOrbit) -> f64 {
    orbit.solution().momentum(x)
}

/// Product Gauss–Legendre rule over `θ₀ ∈ [0, 2π]`, `J′₀ ∈ [−2, 2]`.
///
/// For each `θ₀` the momentum interval is split at the separatrix
/// `J′₀ = ±2|sin(θ₀/2)|`; the inner panel gets half the momentum nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GQuadrature {
    pub theta_nodes: usize,
    pub momentum_nodes: usize,
}

impl Default for GQuadrature {
    fn default() -> Self {
        Self {
            theta_nodes: 400,
            momentum_nodes: 400,
        }
    }
}

impl GQuadrature {
    pub fn new(theta_nodes: usize, momentum_nodes: usize) -> Result<Self> {
        if theta_nodes < 2 || momentum_nodes < 4 {
            return Err(Error::invalid("quadrature", "need >= 2 angle and >= 4 momentum nodes"));
        }
        Ok(Self {
            theta_nodes,
            momentum_nodes,
        })
    }

    pub fn halved(&self) -> Self {
        Self {
            theta_nodes: (self.theta_nodes / 2).max(2),
            momentum_nodes: (self.momentum_nodes / 2).max(4),
        }
    }

    pub fn doubled(&self) -> Self {
        Self {
            theta_nodes: 2 * self.theta_nodes,
            momentum_nodes: 2 * self.momentum_nodes,
        }
    }

    /// `G` at each `x`: `(1/8π) ∫∫ (J′(x) − J′₀)² dθ₀ dJ′₀`.
    pub fn evaluate(&self, xs: &[f64]) -> Vec<f64> {
        let theta_rule = GaussLegendre::new(self.theta_nodes);
        let outer_n = (self.momentum_nodes / 4).max(1);
        let inner_n = (self.momentum_nodes - 2 * outer_n).max(1);
        let outer = GaussLegendre::new(outer_n);
        let inner = GaussLegendre::new(inner_n);
        let thetas: Vec<(f64, f64)> = theta_rule.on_interval(0.0, TAU).collect();
        let partials: Vec<Vec<f64>> = thetas
            .par_iter()
            .map(|&(theta0, wt)| {
                let s = 2.0 * (0.5 * theta0).sin().abs();
                let panels = [(&outer, -2.0, -s), (&inner, -s, s), (&outer, s, 2.0)];
                let mut acc = vec![0.0; xs.len()];
                let mut carry = vec![0.0; xs.len()];
                for (rule, a, b) in panels {
                    if b <= a {
                        continue;
                    }
                    for (j0, wj) in rule.on_interval(a, b) {
                        let sol = PendulumOrbit::new(theta0, j0).expect("finite nodes").solution();
                        let w = wt * wj;
                        for (i, &x) in xs.iter().enumerate() {
                            let d = sol.momentum(x) - j0;
                            // Kahan step
                            let y = w * d * d - carry[i];
                            let t = acc[i] + y;
                            carry[i] = (t - acc[i]) - y;
                            acc[i] = t;
                        }
                    }
                }
                acc
            })
            .collect();
        let norm = 1.0 / (8.0 * PI);
        (0..xs.len())
            .map(|i| norm * stats::sum(partials.iter().map(|p| p[i])))
            .collect()
    }
}

/// `G(x)` sampled on a uniform grid from 0.
#[derive(Debug, Clone, PartialEq)]
pub struct GTable {
    x: Vec<f64>,
    g: Vec<f64>,
    quadrature: GQuadrature,
    /// Largest difference from the same table at half the node density.
    error_estimate: f64,
}

/// Upper bound on `G`: `|J′ − J′₀| ≤ 2 + 2√2` inside the domain.
pub const G_BOUND: f64 = (2.0 + 2.0 * std::f64::consts::SQRT_2) * (2.0 + 2.0 * std::f64::consts::SQRT_2);

impl GTable {
    pub fn compute(x_max: f64, step: f64, quadrature: GQuadrature) -> Result<Self> {
        if !(step > 0.0 && x_max.is_finite() && x_max >= 0.0) {
            return Err(Error::invalid("x grid", "need step > 0 and finite x_max >= 0"));
        }
        let n = (x_max / step).round() as usize;
        let x: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
        let g = quadrature.evaluate(&x);
        let coarse = quadrature.halved().evaluate(&x);
        let error_estimate = g.iter().zip(&coarse).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        Ok(Self {
            x,
            g,
            quadrature,
            error_estimate,
        })
    }

    /// `x ∈ [0, 100]`, step 0.05, 400 × 400 nodes; computed once per process.
    pub fn standard() -> &'static GTable {
        static TABLE: OnceLock<GTable> = OnceLock::new();
        TABLE.get_or_init(|| GTable::compute(100.0, 0.05, GQuadrature::default()).expect("valid grid"))
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn quadrature(&self) -> GQuadrature {
        self.quadrature
    }

    pub fn error_estimate(&self) -> f64 {
        self.error_estimate
    }

    pub fn x_max(&self) -> f64 {
        *self.x.last().unwrap()
    }

    /// Linear interpolation; `None` off the grid.
    pub fn eval(&self, x: f64) -> Option<f64> {
        if !(x >= 0.0 && x <= self.x_max()) {
            return None;
        }
        if self.x.len() == 1 {
            return Some(self.g[0]);
        }
        let step = self.x[1] - self.x[0];
        let i = ((x / step).floor() as usize).min(self.x.len() - 2);
        let f = (x - self.x[i]) / step;
        Some(self.g[i] + f * (self.g[i + 1] - self.g[i]))
    }

    /// Interior local maxima of `G`, each refined by a parabola through the
    /// three nodes around it.
    pub fn local_maxima(&self) -> Vec<(f64, f64)> {
        local_maxima(&self.x, &self.g)
    }

    /// Trapezoidal mean of `G` over `[a, b]`.
    pub fn mean_over(&self, a: f64, b: f64) -> Result<f64> {
        if !(a < b && a >= 0.0 && b <= self.x_max()) {
            return Err(Error::invalid("range", "need 0 <= a < b within the table"));
        }
        let n = 4000;
        let h = (b - a) / n as f64;
        let total = stats::sum((0..=n).map(|i| {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            w * self.eval(a + i as f64 * h).unwrap()
        }));
        Ok(total * h / (b - a))
    }

    /// Energy ratio at `x` from this table.
    pub fn ratio(&self, x: f64, mode: RatioMode) -> Result<f64> {
        let g = self
            .eval(x)
            .ok_or_else(|| Error::invalid("x", format!("{x} outside the table")))?;
        ratio_from_g(x, g, mode)
    }
}

/// Parabolic refinement of the strict interior maxima of `y(x)`.
pub fn local_maxima(x: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    (1..y.len().saturating_sub(1))
        .filter(|&i| y[i] > y[i - 1] && y[i] >= y[i + 1])
        .map(|i| parabolic_vertex([x[i - 1], x[i], x[i + 1]], [y[i - 1], y[i], y[i + 1]]))
        .collect()
}

/// Vertex of the parabola through three points; falls back to the middle
/// point when they are collinear.
pub fn parabolic_vertex(x: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let curv = (d2 - d1) / (x[2] - x[0]);
    if curv >= 0.0 || !curv.is_finite() {
        return (x[1], y[1]);
    }
    let xv = 0.5 * (x[0] + x[1]) - d1 / (2.0 * curv);
    let yv = y[0] + d1 * (xv - x[0]) + curv * (xv - x[0]) * (xv - x[1]);
    (xv, yv)
}

/// `G(x)`: from [`GTable::standard`] for `x ≤ 100`, direct quadrature beyond.
pub fn g_function(x: f64) -> Result<f64> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::invalid("x", "must be finite and >= 0"));
    }
    let table = GTable::standard();
    Ok(match table.eval(x) {
        Some(g) => g,
        None => GQuadrature::default().evaluate(&[x])[0],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RatioMode {
    /// `(4/πx) G(x)`
    #[default]
    LargeX,
    /// `(1 − Φ₀(x)) + (4/πx) G(x)`, with `1 − Φ₀` from
    /// [`one_minus_phi0`]; approximate.
    Full,
}

fn ratio_from_g(x: f64, g: f64, mode: RatioMode) -> Result<f64> {
    match mode {
        RatioMode::LargeX if x <= 0.0 => Err(Error::invalid("x", "the large-x ratio needs x > 0")),
        RatioMode::LargeX => Ok(4.0 * g / (PI * x)),
        RatioMode::Full if x == 0.0 => Ok(1.0),
        RatioMode::Full => Ok(one_minus_phi0(x)? + 4.0 * g / (PI * x)),
    }
}

/// `⟨E_{t,ε}⟩ / ⟨E_{t,0}⟩` in the pendulum approximation.
pub fn energy_ratio_pendulum(x: f64, mode: RatioMode) -> Result<f64> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::invalid("x", "must be finite and >= 0"));
    }
    ratio_from_g(x, g_function(x)?, mode)
}

/// Free-rotor share of trajectories outside the island,
/// `1 − (2/π) ∫₀ˣ sin²z / z² dz`. Approximate.
pub fn one_minus_phi0(x: f64) -> Result<f64> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::invalid("x", "must be finite and >= 0"));
    }
    let rule = GaussLegendre::new(24);
    let panels = (x / FRAC_PI_2).ceil().max(1.0) as usize;
    let h = x / panels as f64;
    let integral = stats::sum((0..panels).map(|p| {
        rule.integrate(p as f64 * h, (p + 1) as f64 * h, |z| {
            let s = if z == 0.0 { 1.0 } else { z.sin() / z };
            s * s
        })
    }));
    Ok(1.0 - 2.0 / PI * integral)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidePeak {
    pub epsilon_abs: f64,
    pub x0: f64,
}

impl SidePeak {
    /// `(2πℓ − |ε|, 2πℓ + |ε|)`
    pub fn kbar_pair(&self, ell: u32) -> (f64, f64) {
        let c = TAU * ell as f64;
        (c - self.epsilon_abs, c + self.epsilon_abs)
    }
}

/// Side peak at constant `x = x₀`: `|ε| = x₀² / (t² k)`.
pub fn predict_side_peak(kicks: u32, k: f64, x0: f64) -> Result<SidePeak> {
    if kicks == 0 {
        return Err(Error::invalid("kicks", "must be >= 1"));
    }
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::invalid("k", "must be positive"));
    }
    if !(x0.is_finite() && x0 > 0.0) {
        return Err(Error::invalid("x0", "must be positive"));
    }
    let t = kicks as f64;
    Ok(SidePeak {
        epsilon_abs: x0 * x0 / (t * t * k),
        x0,
    })
}
