//! Joint quadrature densities `P(x_A, x_B | theta) = <x| U_theta^dagger rho U_theta |x>`
//! with `U_theta = exp(-i theta (n_A + n_B))`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{expectation, DensityMatrix, OperatorMatrix};
use crate::hermite;

/// Points per axis of the default grid.
pub const DEFAULT_POINTS: usize = 512;
/// Half-width of the default grid in units of `sigma_max`.
pub const DEFAULT_EXTENT_SIGMAS: f64 = 6.0;
/// Below this captured mass a grid is rejected.
pub const MIN_MASS: f64 = 0.99;

/// Uniform rectangular grid of cell midpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub xa: Vec<f64>,
    pub xb: Vec<f64>,
    pub step: f64,
}

impl Grid {
    /// `points` cells per axis tiling `[-extent, extent]`.
    pub fn square(extent: f64, points: usize) -> Self {
        let step = 2.0 * extent / points as f64;
        let axis: Vec<f64> = (0..points).map(|i| -extent + (i as f64 + 0.5) * step).collect();
        Self { xa: axis.clone(), xb: axis, step }
    }

    /// Default grid for a state: `6 sigma_max` with
    /// `sigma_max^2 = <n_A + n_B> + 1` (equal to `cosh 2 xi` for the ideal
    /// squeezed vacuum), 512 points per axis.
    pub fn for_state(rho: &DensityMatrix) -> Self {
        Self::square(DEFAULT_EXTENT_SIGMAS * sigma_max(rho), DEFAULT_POINTS)
    }

    pub fn cell_area(&self) -> f64 {
        self.step * self.step
    }

    pub fn len(&self) -> usize {
        self.xa.len() * self.xb.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn sigma_max(rho: &DensityMatrix) -> f64 {
    let n = expectation(rho, &OperatorMatrix::number(rho.space(), None)).map(|z| z.re).unwrap_or(0.0);
    (n.max(0.0) + 1.0).sqrt()
}

/// Density values on a grid, row-major in `x_A`.
#[derive(Clone, Debug)]
pub struct QuadDensity {
    pub grid: Grid,
    pub theta: f64,
    pub values: Vec<f64>,
    /// Integrated probability captured by the grid.
    pub mass: f64,
}

impl QuadDensity {
    pub fn at(&self, ia: usize, ib: usize) -> f64 {
        self.values[ia * self.grid.xb.len() + ib]
    }

    /// Grid moments `(E[d], Var[d])` of `d = x_A + sign * x_B`, normalized by
    /// the captured mass.
    pub fn combination_moments(&self, sign: f64) -> (f64, f64) {
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for (ia, &xa) in self.grid.xa.iter().enumerate() {
            for (ib, &xb) in self.grid.xb.iter().enumerate() {
                let w = self.at(ia, ib);
                let d = xa + sign * xb;
                m0 += w;
                m1 += w * d;
                m2 += w * d * d;
            }
        }
        let mean = m1 / m0;
        (mean, m2 / m0 - mean * mean)
    }
}

/// Real symmetric matrix `Re(U_theta^dagger rho U_theta)`; the imaginary part
/// is antisymmetric and drops out of every density with real wavefunctions.
pub fn measurement_frame(rho: &DensityMatrix, theta: f64) -> DMatrix<f64> {
    let space = rho.space();
    let d = space.dim();
    let m = rho.entries();
    DMatrix::from_fn(d, d, |i, j| {
        let dn = space.total(i) as f64 - space.total(j) as f64;
        let phase = num_complex::Complex64::from_polar(1.0, theta * dn);
        (phase * m[(i, j)]).re
    })
}

/// `P(x_A, x_B)` for every grid point as `Phi_A A' Phi_B^T`, where `A'`
/// regroups the frame matrix by mode and `Phi` holds products of
/// oscillator eigenfunctions.
pub fn density_on_axes(frame: &DMatrix<f64>, levels: usize, xa: &[f64], xb: &[f64]) -> Vec<f64> {
    let l2 = levels * levels;
    let mut regrouped = DMatrix::<f64>::zeros(l2, l2);
    for na in 0..levels {
        for nb in 0..levels {
            for ma in 0..levels {
                for mb in 0..levels {
                    regrouped[(na * levels + ma, nb * levels + mb)] =
                        frame[(na * levels + nb, ma * levels + mb)];
                }
            }
        }
    }
    let products = |xs: &[f64]| {
        let t = hermite::table(xs, levels);
        DMatrix::from_fn(xs.len(), l2, |i, k| t[i * levels + k / levels] * t[i * levels + k % levels])
    };
    let pa = products(xa);
    let pb = products(xb);
    // States supported on |n,n> (the squeezed vacuum and its dephased
    // versions) give a diagonal regrouped matrix.
    let diagonal = (0..l2).all(|i| (0..l2).all(|j| i == j || regrouped[(i, j)] == 0.0));
    let dens = if diagonal {
        let mut scaled = pa;
        for k in 0..l2 {
            let w = regrouped[(k, k)];
            scaled.column_mut(k).scale_mut(w);
        }
        scaled * pb.transpose()
    } else {
        (&pa * &regrouped) * pb.transpose()
    };
    let mut out = Vec::with_capacity(xa.len() * xb.len());
    for i in 0..xa.len() {
        for j in 0..xb.len() {
            out.push(dens[(i, j)]);
        }
    }
    out
}

/// Density at a single point.
pub fn density_at(rho: &DensityMatrix, theta: f64, xa: f64, xb: f64) -> f64 {
    let frame = measurement_frame(rho, theta);
    let levels = rho.space().levels();
    let fa = hermite::values(xa, levels);
    let fb = hermite::values(xb, levels);
    let u: Vec<f64> = (0..levels * levels).map(|k| fa[k / levels] * fb[k % levels]).collect();
    let mut acc = 0.0;
    for i in 0..u.len() {
        for j in 0..u.len() {
            acc += u[i] * frame[(i, j)] * u[j];
        }
    }
    acc
}

pub fn quad_pdf(state: &DensityMatrix, theta: f64, grid: &Grid) -> Result<QuadDensity> {
    let frame = measurement_frame(state, theta);
    let values = density_on_axes(&frame, state.space().levels(), &grid.xa, &grid.xb);
    let mass = crate::stats::pairwise_sum(&values) * grid.cell_area();
    if mass < MIN_MASS {
        return Err(Error::InsufficientSupport { mass });
    }
    Ok(QuadDensity { grid: grid.clone(), theta, values, mass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockSpace;
    use crate::states::{analytic_variances, tmsv};
    use std::f64::consts::PI;

    #[test]
    fn vacuum_density_at_origin() {
        let s = FockSpace::new(3);
        let vac = DensityMatrix::vacuum(s);
        for theta in [0.0, 0.7, 2.0] {
            assert!((density_at(&vac, theta, 0.0, 0.0) - 1.0 / PI).abs() < 1e-15);
        }
        let g = Grid::for_state(&vac);
        let d = quad_pdf(&vac, 0.3, &g).unwrap();
        assert!((d.mass - 1.0).abs() < 1e-9);
        let (_, var) = d.combination_moments(1.0);
        assert!((var - 1.0).abs() < 1e-6);
    }

    #[test]
    fn grid_matches_pointwise() {
        let s = FockSpace::new(6);
        let rho = tmsv(0.4, s).unwrap().value.projector();
        let g = Grid::square(4.0, 7);
        let d = quad_pdf(&rho, 0.9, &g).unwrap_or_else(|_| {
            let frame = measurement_frame(&rho, 0.9);
            QuadDensity { grid: g.clone(), theta: 0.9, values: density_on_axes(&frame, 7, &g.xa, &g.xb), mass: 0.0 }
        });
        for ia in 0..7 {
            for ib in 0..7 {
                let p = density_at(&rho, 0.9, g.xa[ia], g.xb[ib]);
                assert!((d.at(ia, ib) - p).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn squeezed_variances_from_grid() {
        let xi = 0.63;
        let s = FockSpace::new(20);
        let rho = tmsv(xi, s).unwrap().value.projector();
        let g = Grid::for_state(&rho);
        let (sq, anti) = analytic_variances(xi);
        let d = quad_pdf(&rho, PI / 4.0, &g).unwrap();
        assert!(d.mass > 0.999);
        let (_, v_minus) = d.combination_moments(-1.0);
        let (_, v_plus) = d.combination_moments(1.0);
        assert!((v_minus - sq).abs() < 1e-6, "{v_minus} vs {sq}");
        assert!((v_plus - anti).abs() < 1e-6, "{v_plus} vs {anti}");
        let d = quad_pdf(&rho, 3.0 * PI / 4.0, &g).unwrap();
        let (_, v_plus) = d.combination_moments(1.0);
        assert!((v_plus - sq).abs() < 1e-6);
    }

    #[test]
    fn narrow_grid_rejected() {
        let vac = DensityMatrix::vacuum(FockSpace::new(2));
        let err = quad_pdf(&vac, 0.0, &Grid::square(0.5, 20)).unwrap_err();
        assert!(matches!(err, Error::InsufficientSupport { .. }));
    }
}
