//! Figures of merit for two-mode states: fidelities, logarithmic
//! negativity, fixed-N quantum Fisher information and squeezing fits.

use nalgebra::{Matrix3, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{expectation, partial_transpose, DensityMatrix, OperatorMatrix, PureState};
use crate::linalg;
use crate::states::tmsv;
use crate::CMatrix;

/// Eigenvalue pairs with `p_k + p_k'` below this are skipped in the QFI.
pub const QFI_FLOOR: f64 = 1e-12;
/// Search interval and tolerance of [`fit_squeezing`].
pub const FIT_RANGE: (f64, f64) = (0.0, 2.0);
pub const FIT_TOL: f64 = 1e-4;

fn same_space(a: &DensityMatrix, dim: usize) -> Result<()> {
    if a.space().dim() != dim {
        return Err(Error::DimensionMismatch { expected: a.space().dim(), found: dim });
    }
    Ok(())
}

/// `sqrt(<psi| rho |psi>)`, clamped to `[0, 1]`.
pub fn fidelity_pure(rho: &DensityMatrix, psi: &PureState) -> Result<f64> {
    same_space(rho, psi.space().dim())?;
    let v = psi.amplitudes();
    let overlap = (v.adjoint() * rho.entries() * v)[(0, 0)].re;
    Ok(overlap.max(0.0).sqrt().min(1.0))
}

/// Uhlmann fidelity `Tr sqrt(sqrt(rho1) rho2 sqrt(rho1))`.
pub fn fidelity_mixed(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    same_space(rho1, rho2.space().dim())?;
    rho1.validate()?;
    rho2.validate()?;
    let s = linalg::psd_sqrt(rho1.entries());
    let m = &s * rho2.entries() * &s;
    let f: f64 = linalg::hermitian_eigenvalues(&m).iter().map(|v| v.max(0.0).sqrt()).sum();
    Ok(f.clamp(0.0, 1.0))
}

/// `log2 || rho^{T_B} ||_1`.
pub fn log_negativity(rho: &DensityMatrix) -> f64 {
    let norm: f64 = linalg::hermitian_eigenvalues(&partial_transpose(rho)).iter().map(|v| v.abs()).sum();
    norm.log2()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Qfi {
    pub f_q: f64,
    /// `F_Q / n_bar`, reported as 0 when `n_bar` vanishes.
    pub per_particle: f64,
    pub per_particle_defined: bool,
    pub n_bar: f64,
}

/// Basis indices of the sector with `n_A + n_B = total`, ordered by `n_A`.
fn sector(rho: &DensityMatrix, total: usize) -> Vec<(usize, usize)> {
    let n_cut = rho.space().n_cut();
    let lo = total.saturating_sub(n_cut);
    (lo..=total.min(n_cut)).map(|na| (na, total - na)).collect()
}

/// Collective spin components `(J_x, J_y, J_z)` restricted to a sector.
fn sector_spin(states: &[(usize, usize)]) -> [CMatrix; 3] {
    let k = states.len();
    let mut jx = CMatrix::zeros(k, k);
    let mut jy = CMatrix::zeros(k, k);
    let mut jz = CMatrix::zeros(k, k);
    for (col, &(na, nb)) in states.iter().enumerate() {
        jz[(col, col)] = Complex64::new(0.5 * (na as f64 - nb as f64), 0.0);
        // a_A^dagger a_B |na, nb> = sqrt((na + 1) nb) |na + 1, nb - 1>
        if let Some(row) = states.iter().position(|&s| nb > 0 && s == (na + 1, nb - 1)) {
            let amp = ((na + 1) as f64 * nb as f64).sqrt();
            // J_x = (a_A^+ a_B + h.c.) / 2, J_y = (a_A^+ a_B - h.c.) / 2i
            jx[(row, col)] += Complex64::new(0.5 * amp, 0.0);
            jx[(col, row)] += Complex64::new(0.5 * amp, 0.0);
            jy[(row, col)] += Complex64::new(0.0, -0.5 * amp);
            jy[(col, row)] += Complex64::new(0.0, 0.5 * amp);
        }
    }
    [jx, jy, jz]
}

/// QFI matrix of a normalized sector state.
fn sector_qfi(block: &CMatrix, spins: &[CMatrix; 3]) -> Matrix3<f64> {
    let (p, vecs) = linalg::hermitian_eigen(block);
    let rotated: Vec<CMatrix> = spins.iter().map(|j| vecs.adjoint() * j * &vecs).collect();
    let mut f = Matrix3::zeros();
    for k in 0..p.len() {
        for l in 0..p.len() {
            let s = p[k] + p[l];
            if s <= QFI_FLOOR {
                continue;
            }
            let c = 2.0 * (p[k] - p[l]).powi(2) / s;
            if c == 0.0 {
                continue;
            }
            for a in 0..3 {
                for b in 0..3 {
                    f[(a, b)] += c * (rotated[a][(k, l)] * rotated[b][(l, k)]).re;
                }
            }
        }
    }
    f
}

/// Fisher information of the state projected onto fixed total number,
/// maximized over the rotation axis.
pub fn qfi_fixed_n(rho: &DensityMatrix) -> Qfi {
    let space = rho.space();
    let mut total = Matrix3::zeros();
    for n in 0..=2 * space.n_cut() {
        let states = sector(rho, n);
        let idx: Vec<usize> = states.iter().map(|&(a, b)| space.index(a, b)).collect();
        let block = CMatrix::from_fn(idx.len(), idx.len(), |i, j| rho.entries()[(idx[i], idx[j])]);
        let q = linalg::trace(&block).re;
        if q <= QFI_FLOOR {
            continue;
        }
        total += sector_qfi(&(block / Complex64::new(q, 0.0)), &sector_spin(&states)) * q;
    }
    let sym = (total + total.transpose()) * 0.5;
    let f_q = SymmetricEigen::new(sym).eigenvalues.max().max(0.0);
    let n_bar = expectation(rho, &OperatorMatrix::number(space, None)).map(|z| z.re).unwrap_or(0.0);
    let defined = n_bar > 0.0;
    Qfi { f_q, per_particle: if defined { f_q / n_bar } else { 0.0 }, per_particle_defined: defined, n_bar }
}

/// Squeezing parameter of the closest ideal state and its fidelity.
pub fn fit_squeezing(rho: &DensityMatrix) -> Result<(f64, f64)> {
    let space = rho.space();
    let f = |xi: f64| -> Result<f64> { fidelity_pure(rho, &tmsv(xi, space)?.value) };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = FIT_RANGE;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > FIT_TOL {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let mid = 0.5 * (a + b);
    let mut best = (mid, f(mid)?);
    for x in [FIT_RANGE.0, FIT_RANGE.1] {
        let v = f(x)?;
        if v > best.1 {
            best = (x, v);
        }
    }
    Ok(best)
}

/// Coarse scan points of [`fit_phase_origin`] over one period.
const PHASE_SCAN: usize = 72;

/// Phase origin `theta` maximizing `fidelity_mixed(rho, U reference U^dagger)`
/// with `U = exp(-i theta (n_A + n_B))`, and that fidelity. Different phase
/// conventions of the same state differ only by such a rotation.
pub fn fit_phase_origin(rho: &DensityMatrix, reference: &DensityMatrix) -> Result<(f64, f64)> {
    let period = 2.0 * std::f64::consts::PI;
    let f = |theta: f64| fidelity_mixed(rho, &reference.rotated(theta));
    let step = period / PHASE_SCAN as f64;
    let mut best = (0.0, f(0.0)?);
    for k in 1..PHASE_SCAN {
        let theta = k as f64 * step;
        let v = f(theta)?;
        if v > best.1 {
            best = (theta, v);
        }
    }
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (best.0 - step, best.0 + step);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > 1e-6 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let mid = 0.5 * (a + b);
    let v = f(mid)?;
    if v > best.1 {
        best = (mid, v);
    }
    Ok((best.0.rem_euclid(period), best.1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_cut: usize,
    pub target_xi: Option<f64>,
    /// Fidelity to the ideal state at `target_xi`, if given.
    pub fidelity_to_target: Option<f64>,
    pub log_negativity: f64,
    pub qfi: f64,
    pub qfi_per_particle: f64,
    pub qfi_per_particle_defined: bool,
    pub n_bar: f64,
    pub xi_fit: f64,
    pub fit_fidelity: f64,
    pub purity: f64,
}

pub fn metrics_report(rho: &DensityMatrix, target_xi: Option<f64>) -> Result<MetricsReport> {
    let fidelity_to_target = match target_xi {
        Some(xi) => Some(fidelity_pure(rho, &tmsv(xi, rho.space())?.value)?),
        None => None,
    };
    let qfi = qfi_fixed_n(rho);
    let (xi_fit, fit_fidelity) = fit_squeezing(rho)?;
    Ok(MetricsReport {
        n_cut: rho.space().n_cut(),
        target_xi,
        fidelity_to_target,
        log_negativity: log_negativity(rho),
        qfi: qfi.f_q,
        qfi_per_particle: qfi.per_particle,
        qfi_per_particle_defined: qfi.per_particle_defined,
        n_bar: qfi.n_bar,
        xi_fit,
        fit_fidelity,
        purity: rho.purity(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockSpace;

    #[test]
    fn pure_fidelities() {
        let s = FockSpace::new(4);
        let psi = tmsv(0.7, s).unwrap().value;
        assert!((fidelity_pure(&psi.projector(), &psi).unwrap() - 1.0).abs() < 1e-12);
        let vac = DensityMatrix::vacuum(s);
        let expect = psi.amplitude(0, 0).norm();
        assert!((fidelity_pure(&vac, &psi).unwrap() - expect).abs() < 1e-12);
        let mixed = DensityMatrix::maximally_mixed(s);
        assert!((fidelity_pure(&mixed, &psi).unwrap() - 1.0 / 5.0).abs() < 1e-12);
        assert!(fidelity_pure(&mixed, &tmsv(0.7, FockSpace::new(3)).unwrap().value).is_err());
    }

    #[test]
    fn mixed_fidelity_limits() {
        let s = FockSpace::new(2);
        let a = PureState::basis_state(s, 0, 0).projector();
        let b = PureState::basis_state(s, 1, 1).projector();
        assert!(fidelity_mixed(&a, &b).unwrap() < 1e-7);
        let psi = tmsv(0.5, s).unwrap().value;
        let m = DensityMatrix::maximally_mixed(s);
        assert!((fidelity_mixed(&m, &m).unwrap() - 1.0).abs() < 1e-10);
        let direct = fidelity_pure(&m, &psi).unwrap();
        assert!((fidelity_mixed(&m, &psi.projector()).unwrap() - direct).abs() < 1e-8);
        assert!((fidelity_mixed(&psi.projector(), &m).unwrap() - direct).abs() < 1e-8);
    }

    #[test]
    fn vacuum_metrics_vanish() {
        let vac = DensityMatrix::vacuum(FockSpace::new(3));
        assert!(log_negativity(&vac).abs() < 1e-12);
        let q = qfi_fixed_n(&vac);
        assert_eq!((q.f_q, q.n_bar, q.per_particle, q.per_particle_defined), (0.0, 0.0, 0.0, false));
        let (xi, f) = fit_squeezing(&vac).unwrap();
        assert_eq!((xi, f), (0.0, 1.0));
    }

    #[test]
    fn twin_fock_qfi() {
        for n in 1..=3 {
            let s = FockSpace::new(n + 1);
            let rho = PureState::basis_state(s, n, n).projector();
            let q = qfi_fixed_n(&rho);
            let expect = 2.0 * (n * (n + 1)) as f64;
            assert!((q.f_q - expect).abs() < 1e-10, "{n}: {}", q.f_q);
        }
    }

    #[test]
    fn phase_origin_recovered() {
        let s = FockSpace::new(6);
        let real = crate::states::tmsv_rotated(0.6, 0.0, s).unwrap().value.projector();
        // (-i)^n on |n,n> is a pair phase of pi/2, i.e. theta = pi/4.
        let data = tmsv(0.6, s).unwrap().value.projector();
        let (theta, f) = fit_phase_origin(&data, &real).unwrap();
        assert!((f - 1.0).abs() < 1e-9, "{f}");
        let pair = (2.0 * theta).rem_euclid(2.0 * std::f64::consts::PI);
        assert!((pair - std::f64::consts::FRAC_PI_2).abs() < 1e-4, "{theta}");
    }

    #[test]
    fn self_fit() {
        let s = FockSpace::new(12);
        let rho = tmsv(0.5, s).unwrap().value.projector();
        let (xi, f) = fit_squeezing(&rho).unwrap();
        assert!((xi - 0.5).abs() < 1e-3 && (f - 1.0).abs() < 1e-9);
    }
}
