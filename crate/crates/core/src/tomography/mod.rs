//! Maximum-likelihood state reconstruction from binned quadrature data.
//!
//! Each phase contributes a 2D histogram. Starting from the normalized
//! identity, the estimate is iterated as `rho <- N[R rho R]` with
//! `R = (1/N) sum n_b / P_b  U_theta |x_b><x_b| U_theta^dagger dx^2`,
//! where `P_b` is the model probability of bin `b` (midpoint density times
//! `dx^2`). When a plain step would lower the likelihood, a diluted step
//! `N[(1 + eps R) rho (1 + eps R)]` with halving `eps` is taken instead,
//! which keeps the likelihood trace monotone.

pub mod bootstrap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::group_by_theta;
use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, FockSpace, OperatorMatrix};
use crate::hermite;
use crate::homodyne::pdf::density_at;
use crate::homodyne::QuadratureSample;
use crate::linalg;
use crate::CMatrix;

pub use bootstrap::{bootstrap, bootstrap_many, BootstrapEstimate};

/// Likelihood decrease tolerated before a plain step is rejected.
const LOGLIK_SLACK: f64 = 1e-10;
const MIN_DILUTION: f64 = 1.0 / 1024.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Histogram2D {
    #[serde(rename = "theta_rad")]
    pub theta: f64,
    pub dx: f64,
    /// Lower-left corner `(x_A, x_B)`, a multiple of `dx`.
    pub origin: [f64; 2],
    /// `counts[i][j]` counts samples in
    /// `[origin_A + i dx, origin_A + (i+1) dx) x [origin_B + j dx, ...)`.
    pub counts: Vec<Vec<u64>>,
}

impl Histogram2D {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Bin midpoint `(x_A, x_B)`.
    pub fn midpoint(&self, i: usize, j: usize) -> (f64, f64) {
        (self.origin[0] + (i as f64 + 0.5) * self.dx, self.origin[1] + (j as f64 + 0.5) * self.dx)
    }

    /// Non-empty bins as `(i, j, count)`.
    pub fn occupied(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().filter(|(_, c)| **c > 0).map(move |(j, &c)| (i, j, c)))
    }
}

/// Index `k` of the half-open bin `[k dx, (k+1) dx)` holding `x`.
fn bin_index(x: f64, dx: f64) -> i64 {
    let mut k = (x / dx).floor() as i64;
    if (k + 1) as f64 * dx <= x {
        k += 1;
    } else if k as f64 * dx > x {
        k -= 1;
    }
    k
}

/// One histogram per distinct phase, ordered by phase.
pub fn bin_samples(samples: &[QuadratureSample], dx: f64) -> Result<Vec<Histogram2D>> {
    if !(dx > 0.0 && dx.is_finite()) {
        return Err(Error::InvalidParameter(format!("bin width must be positive, got {dx}")));
    }
    Ok(group_by_theta(samples)
        .into_iter()
        .map(|(theta, group)| {
            let ka: Vec<i64> = group.iter().map(|s| bin_index(s.x_a, dx)).collect();
            let kb: Vec<i64> = group.iter().map(|s| bin_index(s.x_b, dx)).collect();
            let (a0, a1) = (*ka.iter().min().unwrap(), *ka.iter().max().unwrap());
            let (b0, b1) = (*kb.iter().min().unwrap(), *kb.iter().max().unwrap());
            let mut counts = vec![vec![0u64; (b1 - b0 + 1) as usize]; (a1 - a0 + 1) as usize];
            for (a, b) in ka.iter().zip(&kb) {
                counts[(a - a0) as usize][(b - b0) as usize] += 1;
            }
            Histogram2D { theta, dx, origin: [a0 as f64 * dx, b0 as f64 * dx], counts }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographyConfig {
    pub dx: f64,
    pub n_cut: usize,
    pub max_iter: usize,
    /// Fixed-point tolerance on `max |R rho R - rho|`.
    pub tol: f64,
    pub min_bin_prob: f64,
    /// Record the smallest eigenvalue of every iterate (costly).
    #[serde(default)]
    pub record_spectrum: bool,
}

impl Default for TomographyConfig {
    fn default() -> Self {
        Self { dx: 0.25, n_cut: 8, max_iter: 2000, tol: 1e-8, min_bin_prob: 1e-12, record_spectrum: false }
    }
}

impl TomographyConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.dx > 0.0
            && self.max_iter > 0
            && self.tol > 0.0
            && self.min_bin_prob > 0.0
            && self.min_bin_prob <= 1e-8;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid tomography config {self:?}")))
        }
    }
}

/// Model probability of bin `(i, j)`: midpoint density times `dx^2`,
/// floored at `floor`.
pub fn bin_probability(rho: &DensityMatrix, hist: &Histogram2D, bin: (usize, usize), floor: f64) -> f64 {
    let (xa, xb) = hist.midpoint(bin.0, bin.1);
    (density_at(rho, hist.theta, xa, xb) * hist.dx * hist.dx).max(floor)
}

/// Occupied bins of one phase, with their quadrature kets in the Fock basis.
struct PhaseBlock {
    theta: f64,
    /// `exp(-i theta N_k)` per basis state.
    phases: Vec<Complex64>,
    /// Row `b` holds `phi_nA(x_A) phi_nB(x_B)` at the midpoint of bin `b`.
    kets: DMatrix<f64>,
    counts: Vec<f64>,
    bins: Vec<(usize, usize)>,
    area: f64,
}

struct Model {
    space: FockSpace,
    blocks: Vec<PhaseBlock>,
    total: f64,
    floor: f64,
}

struct Evaluation {
    r: CMatrix,
    loglik: f64,
}

impl Model {
    fn new(hists: &[Histogram2D], space: FockSpace, floor: f64) -> Result<Self> {
        let levels = space.levels();
        let mut order: Vec<&Histogram2D> = hists.iter().filter(|h| h.total() > 0).collect();
        if order.is_empty() {
            return Err(Error::EmptyInput("histograms contain no counts"));
        }
        // Summation order follows the phase, not the input order.
        order.sort_by(|a, b| a.theta.total_cmp(&b.theta));
        let blocks = order
            .into_iter()
            .map(|h| {
                let bins: Vec<(usize, usize, u64)> = h.occupied().collect();
                let mut kets = DMatrix::<f64>::zeros(bins.len(), space.dim());
                for (row, &(i, j, _)) in bins.iter().enumerate() {
                    let (xa, xb) = h.midpoint(i, j);
                    let fa = hermite::values(xa, levels);
                    let fb = hermite::values(xb, levels);
                    for k in 0..space.dim() {
                        let (na, nb) = space.occupations(k);
                        kets[(row, k)] = fa[na] * fb[nb];
                    }
                }
                PhaseBlock {
                    theta: h.theta,
                    phases: (0..space.dim())
                        .map(|k| Complex64::from_polar(1.0, -h.theta * space.total(k) as f64))
                        .collect(),
                    kets,
                    counts: bins.iter().map(|b| b.2 as f64).collect(),
                    bins: bins.iter().map(|b| (b.0, b.1)).collect(),
                    area: h.dx * h.dx,
                }
            })
            .collect::<Vec<_>>();
        let total = blocks.iter().map(|b| b.counts.iter().sum::<f64>()).sum();
        Ok(Self { space, blocks, total, floor })
    }

    fn evaluate(&self, rho: &CMatrix) -> Result<Evaluation> {
        let d = self.space.dim();
        let parts: Vec<(CMatrix, f64)> = self
            .blocks
            .par_iter()
            .map(|blk| {
                // Re(U^dagger rho U) in the measurement frame.
                let frame = DMatrix::from_fn(d, d, |i, j| (blk.phases[i].conj() * rho[(i, j)] * blk.phases[j]).re);
                let t = &blk.kets * &frame;
                let mut weights = Vec::with_capacity(blk.counts.len());
                let mut terms = Vec::with_capacity(blk.counts.len());
                for (b, &n) in blk.counts.iter().enumerate() {
                    let density = t.row(b).dot(&blk.kets.row(b));
                    let p = (density * blk.area).max(self.floor);
                    if !p.is_finite() {
                        return Err(Error::IllConditioned { theta: blk.theta, bin: blk.bins[b], prob: p });
                    }
                    let w = n * blk.area / (self.total * p);
                    if !w.is_finite() {
                        return Err(Error::IllConditioned { theta: blk.theta, bin: blk.bins[b], prob: p });
                    }
                    weights.push(w);
                    terms.push(n * p.ln());
                }
                let mut weighted = blk.kets.clone();
                for (b, w) in weights.iter().enumerate() {
                    weighted.row_mut(b).scale_mut(*w);
                }
                let s = blk.kets.transpose() * weighted;
                let r = CMatrix::from_fn(d, d, |i, j| blk.phases[i] * blk.phases[j].conj() * s[(i, j)]);
                Ok((r, crate::stats::pairwise_sum(&terms)))
            })
            .collect::<Result<_>>()?;
        let loglik = crate::stats::pairwise_sum(&parts.iter().map(|p| p.1).collect::<Vec<_>>());
        let mats: Vec<CMatrix> = parts.into_iter().map(|p| p.0).collect();
        Ok(Evaluation { r: pairwise_matrix_sum(&mats), loglik })
    }
}

fn pairwise_matrix_sum(ms: &[CMatrix]) -> CMatrix {
    match ms.len() {
        1 => ms[0].clone(),
        n => {
            let mid = n / 2;
            pairwise_matrix_sum(&ms[..mid]) + pairwise_matrix_sum(&ms[mid..])
        }
    }
}

/// `R` for the given state and data.
pub fn r_operator(rho: &DensityMatrix, hists: &[Histogram2D], min_bin_prob: f64) -> Result<OperatorMatrix> {
    let model = Model::new(hists, rho.space(), min_bin_prob)?;
    OperatorMatrix::new(rho.space(), model.evaluate(rho.entries())?.r)
}

/// `sum n log P` over all bins (multinomial constant dropped).
pub fn log_likelihood(rho: &DensityMatrix, hists: &[Histogram2D], min_bin_prob: f64) -> Result<f64> {
    let model = Model::new(hists, rho.space(), min_bin_prob)?;
    Ok(model.evaluate(rho.entries())?.loglik)
}

#[derive(Clone, Debug)]
pub struct MLResult {
    pub rho: DensityMatrix,
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    /// `max |R rho R - rho|` at the returned state.
    pub fixed_point_residual: f64,
    /// `|Tr[R rho] - 1|` at the returned state.
    pub trace_residual: f64,
    pub converged: bool,
    /// Steps that needed dilution to keep the likelihood from dropping.
    pub diluted_steps: usize,
    /// Smallest eigenvalue of every iterate, if recorded.
    pub min_eigenvalues: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Diagnostics {
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    pub fixed_point_residual: f64,
    pub trace_residual: f64,
    pub converged: bool,
    pub diluted_steps: usize,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub min_eigenvalues: Vec<f64>,
}

impl MLResult {
    pub fn diagnostics(&self) -> Diagnostics {
        Diagnostics {
            loglik_trace: self.loglik_trace.clone(),
            iterations: self.iterations,
            fixed_point_residual: self.fixed_point_residual,
            trace_residual: self.trace_residual,
            converged: self.converged,
            diluted_steps: self.diluted_steps,
            min_eigenvalues: self.min_eigenvalues.clone(),
        }
    }
}

fn product3(a: &CMatrix, rho: &CMatrix) -> CMatrix {
    linalg::cmul(&linalg::cmul(a, rho), a)
}

fn normalize(mut m: CMatrix) -> CMatrix {
    linalg::symmetrize(&mut m);
    let tr = linalg::trace(&m).re;
    m / Complex64::new(tr, 0.0)
}

pub fn ml_reconstruct(hists: &[Histogram2D], config: &TomographyConfig) -> Result<MLResult> {
    config.validate()?;
    let space = FockSpace::new(config.n_cut);
    let model = Model::new(hists, space, config.min_bin_prob)?;
    let d = space.dim();
    let id = CMatrix::identity(d, d);
    let mut rho = id.unscale(d as f64);
    let mut eval = model.evaluate(&rho)?;
    let mut trace = vec![eval.loglik];
    let mut min_eigs = Vec::new();
    if config.record_spectrum {
        min_eigs.push(linalg::hermitian_eigenvalues(&rho)[0]);
    }
    let mut iterations = 0;
    let mut diluted = 0;
    let mut rrr = product3(&eval.r, &rho);
    let mut res = linalg::max_abs_diff(&rrr, &rho);
    while res > config.tol && iterations < config.max_iter {
        let mut candidate = normalize(rrr);
        let mut next = model.evaluate(&candidate)?;
        if next.loglik < eval.loglik - LOGLIK_SLACK {
            diluted += 1;
            let mut eps = 0.5;
            loop {
                let step = &id + &eval.r * Complex64::new(eps, 0.0);
                candidate = normalize(product3(&step, &rho));
                next = model.evaluate(&candidate)?;
                if next.loglik >= eval.loglik - LOGLIK_SLACK || eps <= MIN_DILUTION {
                    break;
                }
                eps *= 0.5;
            }
            if next.loglik < eval.loglik - LOGLIK_SLACK {
                log::warn!("no likelihood-increasing step found; stopping at iteration {iterations}");
                break;
            }
        }
        rho = candidate;
        eval = next;
        iterations += 1;
        trace.push(eval.loglik);
        if config.record_spectrum {
            min_eigs.push(linalg::hermitian_eigenvalues(&rho)[0]);
        }
        rrr = product3(&eval.r, &rho);
        res = linalg::max_abs_diff(&rrr, &rho);
    }
    let trace_residual = (linalg::cmul(&eval.r, &rho).trace().re - 1.0).abs();
    Ok(MLResult {
        rho: DensityMatrix::normalized(space, rho)?,
        loglik_trace: trace,
        iterations,
        fixed_point_residual: res,
        trace_residual,
        converged: res <= config.tol,
        diluted_steps: diluted,
        min_eigenvalues: min_eigs,
    })
}

/// Reconstruction straight from samples.
pub fn reconstruct_samples(samples: &[QuadratureSample], config: &TomographyConfig) -> Result<MLResult> {
    ml_reconstruct(&bin_samples(samples, config.dx)?, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn single_sample_bin() {
        let h = bin_samples(&[QuadratureSample::new(0.0, 0.1, 0.1)], 0.25).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h[0].origin, [0.0, 0.0]);
        assert_eq!(h[0].counts, vec![vec![1]]);
    }

    #[test]
    fn edge_goes_up() {
        let s = [QuadratureSample::new(0.0, 0.25, -0.25), QuadratureSample::new(0.0, 0.2, -0.3)];
        let h = &bin_samples(&s, 0.25).unwrap()[0];
        assert_eq!(h.origin, [0.0, -0.5]);
        assert_eq!(h.counts, vec![vec![1, 0], vec![0, 1]]);
        assert_eq!(bin_index(0.3, 0.1), 2);
        assert_eq!(bin_index(3.0 * 0.1, 0.1), 3);
    }

    #[test]
    fn vacuum_bin_probability() {
        let vac = DensityMatrix::vacuum(FockSpace::new(2));
        let h = Histogram2D { theta: 0.4, dx: 0.25, origin: [-0.125, -0.125], counts: vec![vec![1]] };
        let p = bin_probability(&vac, &h, (0, 0), 1e-12);
        assert!((p - 0.0625 / PI).abs() < 1e-15);
    }

    #[test]
    fn histogram_json_shape() {
        let h = Histogram2D { theta: 0.5, dx: 0.25, origin: [-0.5, 0.0], counts: vec![vec![1, 2]] };
        let text = serde_json::to_string(&h).unwrap();
        assert_eq!(text, r#"{"theta_rad":0.5,"dx":0.25,"origin":[-0.5,0.0],"counts":[[1,2]]}"#);
        assert_eq!(serde_json::from_str::<Histogram2D>(&text).unwrap(), h);
    }

    #[test]
    fn single_bin_r_is_rank_one() {
        let s = FockSpace::new(2);
        let rho = DensityMatrix::maximally_mixed(s);
        let h = Histogram2D { theta: 0.3, dx: 0.25, origin: [0.0, 0.25], counts: vec![vec![4]] };
        let r = r_operator(&rho, &[h], 1e-12).unwrap();
        let ev = linalg::hermitian_eigenvalues(r.entries());
        assert!(ev[..ev.len() - 1].iter().all(|v| v.abs() < 1e-10));
        assert!(ev[ev.len() - 1] > 0.0);
        assert!(((r.entries() * rho.entries()).trace().re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn config_gate() {
        let cfg = TomographyConfig { min_bin_prob: 1e-6, ..Default::default() };
        assert!(cfg.validate().is_err());
        assert!(ml_reconstruct(&[], &TomographyConfig::default()).is_err());
    }
}
