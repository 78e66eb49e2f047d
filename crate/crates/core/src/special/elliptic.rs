//! Jacobi elliptic functions by the descending Landen (AGM) transformation,
//! and Legendre's first-kind integrals through Carlson's `R_F`.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

const MAX_LEVELS: usize = 16;

/// Jacobi elliptic functions for a fixed parameter `m = κ²`.
///
/// The AGM ladder depends only on `m`, so it is built once and reused for
/// every argument.
#[derive(Debug, Clone)]
pub struct Jacobi {
    m: f64,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Circular,
    Hyperbolic,
    Agm {
        /// `c_i / a_i` for `i = 1..=levels`.
        ratio: [f64; MAX_LEVELS],
        levels: usize,
        /// `2^N a_N`
        scale: f64,
        /// `1 - m`
        complement: f64,
    },
}

impl Jacobi {
    pub fn new(m: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&m) {
            return Err(Error::invalid("m", format!("{m} outside [0, 1]")));
        }
        let kind = if m == 0.0 {
            Kind::Circular
        } else if m == 1.0 {
            Kind::Hyperbolic
        } else {
            let complement = 1.0 - m;
            let mut a = 1.0_f64;
            let mut b = complement.sqrt();
            let mut c = m.sqrt();
            let mut ratio = [0.0; MAX_LEVELS];
            let mut levels = 0;
            let mut twon = 1.0;
            while (c / a).abs() > f64::EPSILON && levels < MAX_LEVELS {
                let an = 0.5 * (a + b);
                c = 0.5 * (a - b);
                b = (a * b).sqrt();
                a = an;
                twon *= 2.0;
                ratio[levels] = c / a;
                levels += 1;
            }
            if levels == 0 {
                Kind::Circular
            } else {
                Kind::Agm {
                    ratio,
                    levels,
                    scale: twon * a,
                    complement,
                }
            }
        };
        Ok(Self { m, kind })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// `(sn, cn, dn)` at `u`.
    pub fn eval(&self, u: f64) -> (f64, f64, f64) {
        match &self.kind {
            Kind::Circular => {
                let (s, c) = u.sin_cos();
                (s, c, (1.0 - self.m * s * s).sqrt())
            }
            Kind::Hyperbolic => {
                let sech = 1.0 / u.cosh();
                (u.tanh(), sech, sech)
            }
            Kind::Agm {
                ratio,
                levels,
                scale,
                complement,
            } => {
                let mut phi = scale * u;
                for r in ratio[..*levels].iter().rev() {
                    phi = 0.5 * ((r * phi.sin()).asin() + phi);
                }
                let (sn, cn) = phi.sin_cos();
                // dn² = (1 - m) + m cn², free of the cancellation in 1 - m sn².
                let dn = (complement + self.m * cn * cn).sqrt();
                (sn, cn, dn)
            }
        }
    }
}

/// Jacobi `(sn, cn, dn)(u | m)` for `m ∈ [0, 1]`.
pub fn jacobi_elliptic(u: f64, m: f64) -> Result<(f64, f64, f64)> {
    Ok(Jacobi::new(m)?.eval(u))
}

/// Carlson's symmetric integral `R_F(x, y, z)` by duplication.
pub fn carlson_rf(x: f64, y: f64, z: f64) -> f64 {
    debug_assert!(x >= 0.0 && y >= 0.0 && z >= 0.0);
    let (mut x, mut y, mut z) = (x, y, z);
    loop {
        let mu = (x + y + z) / 3.0;
        let dx = 1.0 - x / mu;
        let dy = 1.0 - y / mu;
        let dz = 1.0 - z / mu;
        if dx.abs().max(dy.abs()).max(dz.abs()) < 1e-4 {
            let e2 = dx * dy - dz * dz;
            let e3 = dx * dy * dz;
            return (1.0 + (e2 / 24.0 - 0.1 - 3.0 * e3 / 44.0) * e2 + e3 / 14.0) / mu.sqrt();
        }
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        x = 0.25 * (x + lambda);
        y = 0.25 * (y + lambda);
        z = 0.25 * (z + lambda);
    }
}

/// Complete integral `K(m)` for `m ∈ [0, 1)`.
pub fn ellip_k(m: f64) -> f64 {
    carlson_rf(0.0, 1.0 - m, 1.0)
}

/// Incomplete integral `F(φ | m)` for any real amplitude, `m ∈ [0, 1]`.
///
/// Infinite at `φ = ±π/2 (mod π)` when `m = 1`.
pub fn ellip_f(phi: f64, m: f64) -> f64 {
    let turns = (phi / std::f64::consts::PI).round();
    let r = phi - turns * std::f64::consts::PI;
    let base = if m == 1.0 {
        if r.abs() >= FRAC_PI_2 {
            f64::INFINITY.copysign(r)
        } else {
            r.tan().asinh()
        }
    } else {
        let (s, c) = r.sin_cos();
        s * carlson_rf(c * c, 1.0 - m * s * s, 1.0)
    };
    if turns == 0.0 {
        base
    } else {
        base + 2.0 * turns * ellip_k(m)
    }
}
