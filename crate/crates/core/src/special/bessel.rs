/// `J_0(x) ..= J_max(x)` for `x ≥ 0` by Miller's backward recurrence,
/// normalised with `J_0 + 2 Σ J_{2j} = 1`.
pub fn bessel_j_orders(x: f64, max_order: usize) -> Vec<f64> {
    assert!(x.is_finite() && x >= 0.0, "bessel argument must be finite and >= 0");
    let mut out = vec![0.0; max_order + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let reach = max_order.max(x.ceil() as usize);
    let mut start = reach + 30 + ((60 * reach.max(1)) as f64).sqrt().ceil() as usize;
    start += start % 2;

    let mut vals = vec![0.0; start + 2];
    vals[start] = 1e-30;
    for n in (1..=start).rev() {
        vals[n - 1] = 2.0 * n as f64 / x * vals[n] - vals[n + 1];
        if vals[n - 1].abs() > 1e250 {
            for v in vals[n - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let norm = vals[0] + 2.0 * vals[2..=start].iter().step_by(2).sum::<f64>();
    for (o, v) in out.iter_mut().zip(&vals) {
        *o = v / norm;
    }
    out
}
