//! Truncated two-mode Fock space.
//!
//! The basis is every `|n_A, n_B>` with `0 <= n_A, n_B <= n_cut`, laid out
//! row-major in `(n_A, n_B)`: `index = n_A * (n_cut + 1) + n_B`. Every
//! matrix in the crate and every serialized file uses this ordering.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::{CMatrix, CVector};

/// Ordering tag written into density-matrix files.
pub const ORDERING: &str = "row-major-(nA,nB)";

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FockSpace {
    n_cut: usize,
}

impl FockSpace {
    pub fn new(n_cut: usize) -> Self {
        Self { n_cut }
    }

    pub fn n_cut(&self) -> usize {
        self.n_cut
    }

    /// Number of levels per mode, `n_cut + 1`.
    pub fn levels(&self) -> usize {
        self.n_cut + 1
    }

    pub fn dim(&self) -> usize {
        self.levels() * self.levels()
    }

    pub fn index(&self, n_a: usize, n_b: usize) -> usize {
        debug_assert!(n_a <= self.n_cut && n_b <= self.n_cut);
        n_a * self.levels() + n_b
    }

    pub fn occupations(&self, index: usize) -> (usize, usize) {
        (index / self.levels(), index % self.levels())
    }

    pub fn total(&self, index: usize) -> usize {
        let (a, b) = self.occupations(index);
        a + b
    }

    /// Basis labels in storage order.
    pub fn basis(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.dim()).map(move |i| self.occupations(i))
    }

    fn check(&self, other: &FockSpace) -> Result<()> {
        if self != other {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Annihilate,
    Create,
}

/// Normalized pure state on a truncated space.
#[derive(Clone, Debug)]
pub struct PureState {
    space: FockSpace,
    amplitudes: CVector,
}

impl PureState {
    /// Builds a state from raw amplitudes and renormalizes it.
    pub fn new(space: FockSpace, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: amplitudes.len() });
        }
        let norm = amplitudes.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidParameter("state vector has zero or non-finite norm".into()));
        }
        Ok(Self { space, amplitudes: amplitudes / Complex64::new(norm, 0.0) })
    }

    pub fn basis_state(space: FockSpace, n_a: usize, n_b: usize) -> Self {
        let mut v = CVector::zeros(space.dim());
        v[space.index(n_a, n_b)] = Complex64::new(1.0, 0.0);
        Self { space, amplitudes: v }
    }

    pub fn vacuum(space: FockSpace) -> Self {
        Self::basis_state(space, 0, 0)
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn amplitude(&self, n_a: usize, n_b: usize) -> Complex64 {
        self.amplitudes[self.space.index(n_a, n_b)]
    }

    pub fn projector(&self) -> DensityMatrix {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix { space: self.space, entries: m }
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix on a [`FockSpace`].
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    space: FockSpace,
    entries: CMatrix,
}

impl DensityMatrix {
    /// Strict constructor: the matrix must already satisfy every invariant.
    pub fn new(space: FockSpace, entries: CMatrix) -> Result<Self> {
        check_square(&space, &entries)?;
        let rho = Self { space, entries };
        rho.validate()?;
        Ok(rho)
    }

    /// Hermitizes and rescales to unit trace, then checks positivity.
    pub fn normalized(space: FockSpace, mut entries: CMatrix) -> Result<Self> {
        check_square(&space, &entries)?;
        linalg::symmetrize(&mut entries);
        let tr = linalg::trace(&entries).re;
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr} is not positive")));
        }
        entries /= Complex64::new(tr, 0.0);
        let rho = Self { space, entries };
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps a matrix produced by an algorithm that preserves the invariants
    /// by construction (ML iterates, rotations). Only Hermiticity is restored.
    pub(crate) fn from_trusted(space: FockSpace, mut entries: CMatrix) -> Self {
        linalg::symmetrize(&mut entries);
        Self { space, entries }
    }

    pub fn vacuum(space: FockSpace) -> Self {
        PureState::vacuum(space).projector()
    }

    pub fn maximally_mixed(space: FockSpace) -> Self {
        let d = space.dim();
        let entries = CMatrix::identity(d, d) / Complex64::new(d as f64, 0.0);
        Self { space, entries }
    }

    /// Product state from two single-mode matrices of size `n_cut + 1`.
    pub fn product(space: FockSpace, rho_a: &CMatrix, rho_b: &CMatrix) -> Result<Self> {
        let l = space.levels();
        if rho_a.shape() != (l, l) || rho_b.shape() != (l, l) {
            return Err(Error::DimensionMismatch { expected: l, found: rho_a.nrows() });
        }
        Self::normalized(space, rho_a.kronecker(rho_b))
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn element(&self, bra: (usize, usize), ket: (usize, usize)) -> Complex64 {
        self.entries[(self.space.index(bra.0, bra.1), self.space.index(ket.0, ket.1))]
    }

    pub fn population(&self, n_a: usize, n_b: usize) -> f64 {
        self.element((n_a, n_b), (n_a, n_b)).re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::hermitian_eigenvalues(&self.entries)[0]
    }

    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Checks Hermiticity, unit trace and positivity, naming the first
    /// violated invariant.
    pub fn validate(&self) -> Result<()> {
        let herm = linalg::hermiticity_residual(&self.entries);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian: max |rho - rho^dagger| = {herm:.3e}"
            )));
        }
        let tr = linalg::trace(&self.entries);
        if (tr - Complex64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace is {:.12} instead of 1", tr.re)));
        }
        let min = self.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "not positive semidefinite: min eigenvalue {min:.3e}"
            )));
        }
        Ok(())
    }

    /// `U rho U^dagger` with `U = exp(-i theta (n_A + n_B))`.
    pub fn rotated(&self, theta: f64) -> Self {
        let d = self.space.dim();
        let phases: Vec<Complex64> = (0..d)
            .map(|i| Complex64::from_polar(1.0, -theta * self.space.total(i) as f64))
            .collect();
        let m = CMatrix::from_fn(d, d, |i, j| phases[i] * self.entries[(i, j)] * phases[j].conj());
        Self::from_trusted(self.space, m)
    }

    /// Same state embedded in (or truncated to) another cutoff, renormalized.
    pub fn resized(&self, space: FockSpace) -> Result<Self> {
        let keep = self.space.n_cut.min(space.n_cut);
        let mut m = CMatrix::zeros(space.dim(), space.dim());
        for (i, (a, b)) in self.space.basis().enumerate() {
            if a > keep || b > keep {
                continue;
            }
            for (j, (c, d)) in self.space.basis().enumerate() {
                if c > keep || d > keep {
                    continue;
                }
                m[(space.index(a, b), space.index(c, d))] = self.entries[(i, j)];
            }
        }
        Self::normalized(space, m)
    }

    pub fn to_file(&self) -> DensityMatrixFile {
        let d = self.space.dim();
        DensityMatrixFile {
            n_cut: self.space.n_cut,
            ordering: ORDERING.to_string(),
            re: (0..d).map(|i| (0..d).map(|j| self.entries[(i, j)].re).collect()).collect(),
            im: (0..d).map(|i| (0..d).map(|j| self.entries[(i, j)].im).collect()).collect(),
        }
    }

    /// Parses a file and enforces every density-matrix invariant.
    pub fn from_file(file: &DensityMatrixFile) -> Result<Self> {
        if file.ordering != ORDERING {
            return Err(Error::Format(format!(
                "unsupported ordering {:?}, expected {ORDERING:?}",
                file.ordering
            )));
        }
        let space = FockSpace::new(file.n_cut);
        let d = space.dim();
        let rows_ok = |rows: &Vec<Vec<f64>>| rows.len() == d && rows.iter().all(|r| r.len() == d);
        if !rows_ok(&file.re) || !rows_ok(&file.im) {
            return Err(Error::Format(format!("matrix must be {d}x{d} for n_cut = {}", file.n_cut)));
        }
        let m = CMatrix::from_fn(d, d, |i, j| Complex64::new(file.re[i][j], file.im[i][j]));
        Self::new(space, m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DensityMatrixFile = serde_json::from_str(text)?;
        Self::from_file(&file)
    }
}

fn check_square(space: &FockSpace, m: &CMatrix) -> Result<()> {
    if m.nrows() != space.dim() || m.ncols() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), found: m.nrows() });
    }
    Ok(())
}

/// On-disk density matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityMatrixFile {
    pub n_cut: usize,
    pub ordering: String,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    space: FockSpace,
    entries: CMatrix,
    hermitian: bool,
}

impl OperatorMatrix {
    /// Wraps a matrix; the Hermitian flag is set when `m = m^dagger` within 1e-10.
    pub fn new(space: FockSpace, entries: CMatrix) -> Result<Self> {
        check_square(&space, &entries)?;
        let hermitian = linalg::hermiticity_residual(&entries) <= HERMITIAN_TOL;
        Ok(Self { space, entries, hermitian })
    }

    fn build(space: FockSpace, entries: CMatrix) -> Self {
        let hermitian = linalg::hermiticity_residual(&entries) <= HERMITIAN_TOL;
        Self { space, entries, hermitian }
    }

    pub fn identity(space: FockSpace) -> Self {
        Self { space, entries: CMatrix::identity(space.dim(), space.dim()), hermitian: true }
    }

    /// `n_A`, `n_B` or, with `None`, the total number `n_A + n_B`.
    pub fn number(space: FockSpace, mode: Option<Mode>) -> Self {
        let diag = DVector::from_fn(space.dim(), |i, _| {
            let (a, b) = space.occupations(i);
            let n = match mode {
                Some(Mode::A) => a,
                Some(Mode::B) => b,
                None => a + b,
            };
            Complex64::new(n as f64, 0.0)
        });
        Self { space, entries: CMatrix::from_diagonal(&diag), hermitian: true }
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn adjoint(&self) -> Self {
        Self { space: self.space, entries: self.entries.adjoint(), hermitian: self.hermitian }
    }

    pub fn mul(&self, rhs: &OperatorMatrix) -> Self {
        Self::build(self.space, &self.entries * &rhs.entries)
    }

    pub fn add(&self, rhs: &OperatorMatrix) -> Self {
        Self::build(self.space, &self.entries + &rhs.entries)
    }

    pub fn commutator(&self, rhs: &OperatorMatrix) -> CMatrix {
        &self.entries * &rhs.entries - &rhs.entries * &self.entries
    }

    pub fn apply(&self, state: &CVector) -> CVector {
        &self.entries * state
    }
}

/// Ladder operator on one mode. The creation operator drops the component
/// that would leave the truncated space.
pub fn ladder_op(space: FockSpace, mode: Mode, kind: Ladder) -> OperatorMatrix {
    let d = space.dim();
    let mut m = CMatrix::zeros(d, d);
    for (col, (a, b)) in space.basis().enumerate() {
        let n = match mode {
            Mode::A => a,
            Mode::B => b,
        };
        if n == 0 {
            continue;
        }
        let row = match mode {
            Mode::A => space.index(a - 1, b),
            Mode::B => space.index(a, b - 1),
        };
        m[(row, col)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    let entries = match kind {
        Ladder::Annihilate => m,
        Ladder::Create => m.adjoint(),
    };
    OperatorMatrix { space, entries, hermitian: false }
}

/// `x = (a^dagger + a)/sqrt(2)` and `p = i (a^dagger - a)/sqrt(2)`.
pub fn quadrature_ops(space: FockSpace, mode: Mode) -> (OperatorMatrix, OperatorMatrix) {
    let a = ladder_op(space, mode, Ladder::Annihilate).entries;
    let ad = a.adjoint();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let x = (&ad + &a) * Complex64::new(r, 0.0);
    let p = (&ad - &a) * Complex64::new(0.0, r);
    (
        OperatorMatrix { space, entries: x, hermitian: true },
        OperatorMatrix { space, entries: p, hermitian: true },
    )
}

/// Diagonal unitary `exp(-i theta (n_A + n_B))`.
pub fn phase_rotation(space: FockSpace, theta: f64) -> OperatorMatrix {
    let diag = DVector::from_fn(space.dim(), |i, _| {
        Complex64::from_polar(1.0, -theta * space.total(i) as f64)
    });
    OperatorMatrix::build(space, CMatrix::from_diagonal(&diag))
}

/// Transposes the mode-B indices:
/// `((n_A, n_B), (m_A, m_B)) -> ((n_A, m_B), (m_A, n_B))`.
pub fn partial_transpose(rho: &DensityMatrix) -> CMatrix {
    partial_transpose_entries(rho.space, &rho.entries)
}

/// [`partial_transpose`] on a bare matrix; applying it twice is the identity.
pub fn partial_transpose_entries(space: FockSpace, m: &CMatrix) -> CMatrix {
    let d = space.dim();
    let mut out = CMatrix::zeros(d, d);
    for (i, (na, nb)) in space.basis().enumerate() {
        for (j, (ma, mb)) in space.basis().enumerate() {
            out[(space.index(na, mb), space.index(ma, nb))] = m[(i, j)];
        }
    }
    out
}

/// `Tr[rho op]`.
pub fn expectation(rho: &DensityMatrix, op: &OperatorMatrix) -> Result<Complex64> {
    rho.space.check(&op.space)?;
    let d = rho.space.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += rho.entries[(i, j)] * op.entries[(j, i)];
        }
    }
    Ok(acc)
}

/// Marginals of the number diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumberDistributions {
    /// `sum[N]` is the probability of `N_A + N_B = N`, `N = 0..=2 n_cut`.
    pub sum: Vec<f64>,
    /// `diff[k + n_cut]` is the probability of `N_A - N_B = k`.
    pub diff: Vec<f64>,
    pub n_cut: usize,
}

impl NumberDistributions {
    pub fn p_sum(&self, total: usize) -> f64 {
        self.sum.get(total).copied().unwrap_or(0.0)
    }

    pub fn p_diff(&self, k: i64) -> f64 {
        let idx = k + self.n_cut as i64;
        if idx < 0 {
            return 0.0;
        }
        self.diff.get(idx as usize).copied().unwrap_or(0.0)
    }
}

pub fn number_distributions(rho: &DensityMatrix) -> NumberDistributions {
    let n_cut = rho.space.n_cut;
    let mut sum = vec![0.0; 2 * n_cut + 1];
    let mut diff = vec![0.0; 2 * n_cut + 1];
    for (i, (a, b)) in rho.space.basis().enumerate() {
        let p = rho.entries[(i, i)].re;
        sum[a + b] += p;
        diff[a + n_cut - b] += p;
    }
    NumberDistributions { sum, diff, n_cut }
}
