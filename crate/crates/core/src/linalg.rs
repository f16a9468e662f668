//! Small dense linear-algebra helpers on complex Hermitian matrices.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::CMatrix;

/// Complex product through four real products, which use the blocked
/// real kernel instead of the generic complex one.
pub fn cmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    CMatrix::from_fn(a.nrows(), b.ncols(), |i, j| Complex64::new(re[(i, j)], im[(i, j)]))
}

fn split(m: &CMatrix) -> (DMatrix<f64>, DMatrix<f64>) {
    (m.map(|z| z.re), m.map(|z| z.im))
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Largest entrywise modulus of `m - m†`.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn trace(m: &CMatrix) -> Complex64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// Replaces `m` by `(m + m†)/2`.
pub fn symmetrize(m: &mut CMatrix) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)].im = 0.0;
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

/// Index sets coupled through nonzero off-diagonal entries.
fn components(h: &CMatrix) -> Vec<Vec<usize>> {
    let n = h.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if h[(i, j)] != Complex64::new(0.0, 0.0) {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = root(&mut parent, i);
        groups[r].push(i);
    }
    groups.retain(|g| !g.is_empty());
    groups
}

/// Cyclic Jacobi sweeps; slow but unconditionally stable.
fn jacobi_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = CMatrix::identity(n, n);
    let scale = a.norm().max(f64::MIN_POSITIVE);
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.norm() <= 1e-300 {
                    continue;
                }
                // Make the pivot real, then rotate it away.
                let phase = Complex64::from_polar(1.0, -apq.arg());
                for k in 0..n {
                    a[(k, q)] *= phase;
                    v[(k, q)] *= phase;
                }
                for k in 0..n {
                    a[(q, k)] *= phase.conj();
                }
                let b = a[(p, q)].re;
                let theta = 0.5 * (2.0 * b).atan2(a[(q, q)].re - a[(p, p)].re);
                let (s, c) = theta.sin_cos();
                for k in 0..n {
                    let (x, y) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = x * c - y * s;
                    a[(k, q)] = x * s + y * c;
                    let (x, y) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = x * c - y * s;
                    v[(k, q)] = x * s + y * c;
                }
                for k in 0..n {
                    let (x, y) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = x * c - y * s;
                    a[(q, k)] = x * s + y * c;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)].re).collect(), v)
}

fn block_eigen(block: CMatrix) -> (Vec<f64>, CMatrix) {
    if block.nrows() == 1 {
        return (vec![block[(0, 0)].re], CMatrix::identity(1, 1));
    }
    let eig = SymmetricEigen::new(block.clone());
    let finite = eig.eigenvalues.iter().all(|v| v.is_finite()) && eig.eigenvectors.iter().all(|z| z.is_finite());
    if finite {
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    } else {
        // The implicit QR solver occasionally breaks down on very
        // ill-conditioned blocks.
        jacobi_eigen(&block)
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
/// Decoupled index blocks are diagonalized separately.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let mut h = m.clone();
    symmetrize(&mut h);
    let n = h.nrows();
    let mut values = Vec::with_capacity(n);
    let mut columns: Vec<Vec<(usize, Complex64)>> = Vec::with_capacity(n);
    for idx in components(&h) {
        let block = CMatrix::from_fn(idx.len(), idx.len(), |i, j| h[(idx[i], idx[j])]);
        let (vals, vecs) = block_eigen(block);
        for (k, val) in vals.into_iter().enumerate() {
            values.push(val);
            columns.push(idx.iter().enumerate().map(|(i, &row)| (row, vecs[(i, k)])).collect());
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut vectors = CMatrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        for &(row, z) in &columns[src] {
            vectors[(row, k)] = z;
        }
    }
    (order.iter().map(|&k| values[k]).collect(), vectors)
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    hermitian_eigen(m).0
}

/// Principal square root of a positive semidefinite Hermitian matrix.
/// Negative eigenvalues (floating-point drift) are clipped to zero.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let n = m.nrows();
    let mut scaled = vectors.clone();
    for (k, &v) in values.iter().enumerate() {
        let root = v.max(0.0).sqrt();
        for i in 0..n {
            scaled[(i, k)] *= root;
        }
    }
    &scaled * vectors.adjoint()
}
