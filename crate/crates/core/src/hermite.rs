//! Normalized harmonic-oscillator eigenfunctions
//! `<n|x> = exp(-x^2/2) H_n(x) / (pi^(1/4) sqrt(2^n n!))`.

/// `pi^(-1/4)`, the ground-state amplitude at the origin.
pub const PI_M_QUARTER: f64 = 0.751_125_544_464_942_5;

/// Fills `out[n] = <n|x>` for `n = 0..out.len()` with the three-term
/// recurrence on normalized functions, which never forms `H_n` or `n!`.
pub fn fill(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = PI_M_QUARTER * (-0.5 * x * x).exp();
    if out.len() > 1 {
        out[1] = std::f64::consts::SQRT_2 * x * out[0];
    }
    for n in 1..out.len().saturating_sub(1) {
        let nf = n as f64;
        out[n + 1] = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
    }
}

pub fn values(x: f64, levels: usize) -> Vec<f64> {
    let mut v = vec![0.0; levels];
    fill(x, &mut v);
    v
}

/// Row-major table `table[i * levels + n] = <n|xs[i]>`.
pub fn table(xs: &[f64], levels: usize) -> Vec<f64> {
    let mut t = vec![0.0; xs.len() * levels];
    for (i, &x) in xs.iter().enumerate() {
        fill(x, &mut t[i * levels..(i + 1) * levels]);
    }
    t
}
