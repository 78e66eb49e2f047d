//! Independent reference integrators for the pendulum `ϑ' = J′`, `J′' = sin ϑ`.
#![allow(dead_code)]

pub type State = [f64; 2];

pub fn pendulum_rhs(s: State) -> State {
    [s[1], s[0].sin()]
}

fn axpy(s: State, h: f64, k: State) -> State {
    [s[0] + h * k[0], s[1] + h * k[1]]
}

pub fn rk4_step(s: State, h: f64) -> State {
    let k1 = pendulum_rhs(s);
    let k2 = pendulum_rhs(axpy(s, 0.5 * h, k1));
    let k3 = pendulum_rhs(axpy(s, 0.5 * h, k2));
    let k4 = pendulum_rhs(axpy(s, h, k3));
    [
        s[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        s[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Fixed-step RK4 from `x = 0`, recording `J′` every `every` steps.
pub fn rk4_momentum_samples(s0: State, h: f64, steps: usize, every: usize) -> Vec<(f64, f64)> {
    let mut s = s0;
    let mut out = vec![(0.0, s[1])];
    for i in 1..=steps {
        s = rk4_step(s, h);
        if i % every == 0 {
            out.push((i as f64 * h, s[1]));
        }
    }
    out
}

// Dormand–Prince 5(4) tableau
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn dopri_step(s: State, h: f64) -> (State, f64) {
    let mut k = [[0.0; 2]; 7];
    for i in 0..7 {
        let mut y = s;
        for (j, a) in A[i].iter().enumerate().take(i) {
            y = axpy(y, h * a, k[j]);
        }
        k[i] = pendulum_rhs(y);
    }
    let mut hi = s;
    let mut lo = s;
    for i in 0..7 {
        hi = axpy(hi, h * B5[i], k[i]);
        lo = axpy(lo, h * B4[i], k[i]);
    }
    let err = (hi[0] - lo[0]).abs().max((hi[1] - lo[1]).abs());
    (hi, err)
}

/// Adaptive Dormand–Prince integration to `x_end`, landing exactly on it.
pub fn dopri5(s0: State, x_end: f64, tol: f64) -> State {
    let mut s = s0;
    let mut x = 0.0;
    let mut h = 1e-3_f64.min(x_end);
    while x < x_end {
        if x + h > x_end {
            h = x_end - x;
        }
        let (next, err) = dopri_step(s, h);
        if err <= tol {
            x += h;
            s = next;
        }
        let factor = if err == 0.0 { 5.0 } else { 0.9 * (tol / err).powf(0.2) };
        h *= factor.clamp(0.2, 5.0);
    }
    s
}
