//! Monte-Carlo homodyne data.
//!
//! Quadratures are drawn by inverse CDF on the default density grid: first
//! the `x_A` cell from the marginal, then the `x_B` cell from the row, then
//! a uniform position inside each cell. Local-oscillator jitter is drawn per
//! shot in law: averaging `P(x | theta + delta)` over the jitter equals the
//! density of the dephased state `sum_delta U_delta rho U_delta^dagger`,
//! whose matrix elements are damped by `exp(-s^2 (N_i - N_j)^2 / 2)`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::DensityMatrix;
use crate::homodyne::pdf::{quad_pdf, Grid};
use crate::homodyne::{
    calibrate_transfer, estimate_with, Calibration, HomodyneConfig, QuadratureBasis, QuadratureSample, ShotRecord,
};
use crate::rng;
use crate::states::NoiseModel;
use crate::CMatrix;

const SHOT_STREAM_LABEL: u64 = 0x5107;
const MAX_RETRIES: usize = 32;

/// State averaged over Gaussian local-oscillator jitter of width `lo_sigma`
/// per mode.
pub fn dephase(rho: &DensityMatrix, lo_sigma: f64) -> DensityMatrix {
    if lo_sigma == 0.0 {
        return rho.clone();
    }
    let space = rho.space();
    let d = space.dim();
    let m = rho.entries();
    let damped = CMatrix::from_fn(d, d, |i, j| {
        let dn = space.total(i) as f64 - space.total(j) as f64;
        m[(i, j)] * (-0.5 * (lo_sigma * dn).powi(2)).exp()
    });
    DensityMatrix::from_trusted(space, damped)
}

/// Cumulative tables for inverse-CDF draws from one density grid.
struct Sampler {
    grid: Grid,
    marginal: Vec<f64>,
    rows: Vec<f64>,
}

impl Sampler {
    fn new(rho: &DensityMatrix, theta: f64, grid: &Grid) -> Result<Self> {
        let dens = quad_pdf(rho, theta, grid)?;
        let nb = grid.xb.len();
        let mut rows = Vec::with_capacity(dens.values.len());
        let mut marginal = Vec::with_capacity(grid.xa.len());
        let mut total = 0.0;
        for row in dens.values.chunks(nb) {
            let mut acc = 0.0;
            for &v in row {
                acc += v.max(0.0);
                rows.push(acc);
            }
            total += acc;
            marginal.push(total);
        }
        Ok(Self { grid: grid.clone(), marginal, rows })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        let nb = self.grid.xb.len();
        let ua: f64 = rng.random();
        let ia = search(&self.marginal, ua * self.marginal[self.marginal.len() - 1]);
        let row = &self.rows[ia * nb..(ia + 1) * nb];
        let ub: f64 = rng.random();
        let ib = search(row, ub * row[nb - 1]);
        let half = 0.5 * self.grid.step;
        let xa = self.grid.xa[ia] - half + rng.random::<f64>() * self.grid.step;
        let xb = self.grid.xb[ib] - half + rng.random::<f64>() * self.grid.step;
        (xa, xb)
    }
}

/// First index whose cumulative value exceeds `target`.
fn search(cumulative: &[f64], target: f64) -> usize {
    cumulative.partition_point(|&c| c <= target).min(cumulative.len() - 1)
}

/// Draws `p_per_theta` samples at each nominal phase. Shot `k` of phase `j`
/// uses stream `j * p_per_theta + k` of `seed`, so any prefix of a larger
/// run reproduces a smaller one.
pub fn sample_quadratures(
    state: &DensityMatrix,
    thetas: &[f64],
    p_per_theta: usize,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Vec<QuadratureSample>> {
    if p_per_theta == 0 {
        return Err(Error::InvalidParameter("p_per_theta must be at least 1".into()));
    }
    noise.validate()?;
    let rho = dephase(state, noise.lo_jitter());
    let grid = Grid::for_state(&rho);
    let shift_sd = noise.sum_variance_shift.sqrt();
    let mut out = Vec::with_capacity(thetas.len() * p_per_theta);
    for (j, &theta) in thetas.iter().enumerate() {
        let sampler = Sampler::new(&rho, theta, &grid)?;
        let base = (j * p_per_theta) as u64;
        let chunk: Vec<QuadratureSample> = (0..p_per_theta)
            .into_par_iter()
            .map(|k| {
                let mut r = rng::stream(seed, base + k as u64);
                let (xa, xb) = sampler.draw(&mut r);
                let g: f64 = r.sample::<f64, _>(StandardNormal) * shift_sd;
                QuadratureSample::new(theta, xa + 0.5 * g, xb + 0.5 * g)
            })
            .collect();
        out.extend(chunk);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct SimulatedShots {
    pub samples: Vec<QuadratureSample>,
    pub shots: Vec<ShotRecord>,
}

/// Samples quadratures, then synthesizes atom counts by inverting the
/// estimators with a per-shot jittered transfer `s^2 (1 + rf_rel_noise g)`.
///
/// `N_A + N_B` is rounded to the nearest integer and `N_A - N_B` to the
/// nearest integer of the same parity, which keeps the round-trip error of
/// both estimators below `1 / sqrt(s^2 N_tot)`.
pub fn simulate_shots(
    state: &DensityMatrix,
    config: &HomodyneConfig,
    noise: &NoiseModel,
    thetas: &[f64],
    p_per_theta: usize,
    seed: u64,
) -> Result<SimulatedShots> {
    config.validate()?;
    let samples = sample_quadratures(state, thetas, p_per_theta, noise, seed)?;
    let shots = synthesize_counts(&samples, config, noise, seed)?;
    Ok(SimulatedShots { samples, shots })
}

pub fn synthesize_counts(
    samples: &[QuadratureSample],
    config: &HomodyneConfig,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Vec<ShotRecord>> {
    let cal = config.calibration();
    let n_tot = config.n_tot();
    let n = n_tot as f64;
    let shot_seed = rng::derive_seed(seed, SHOT_STREAM_LABEL);
    samples
        .par_iter()
        .enumerate()
        .map(|(idx, sample)| {
            let mut r = rng::stream(shot_seed, idx as u64);
            for _ in 0..MAX_RETRIES {
                let g: f64 = r.sample(StandardNormal);
                let s2 = cal.s2 * (1.0 + noise.rf_rel_noise * g);
                let c2 = 1.0 - s2;
                let det_a: f64 = r.sample::<f64, _>(StandardNormal) * noise.detection_noise;
                let det_b: f64 = r.sample::<f64, _>(StandardNormal) * noise.detection_noise;
                if !(s2 > 0.0 && c2 > 0.0) {
                    continue;
                }
                let total = s2 * n + (s2 * c2 * n).sqrt() * sample.sum() + det_a + det_b;
                let imbalance = s2 * cal.asymmetry * n / 2.0 + (s2 * n).sqrt() * sample.difference() + det_a - det_b;
                let s_int = total.round();
                let d_int = nearest_with_parity(imbalance, s_int);
                let na = 0.5 * (s_int + d_int);
                let nb = 0.5 * (s_int - d_int);
                if na >= 0.0 && nb >= 0.0 && s_int <= n {
                    return Ok(ShotRecord { n_a: na as u64, n_b: nb as u64, n_tot });
                }
            }
            Err(Error::ShotOutOfRange { retries: MAX_RETRIES })
        })
        .collect()
}

fn nearest_with_parity(x: f64, reference: f64) -> f64 {
    let parity = reference.rem_euclid(2.0);
    // Integers congruent to `reference` mod 2 are `parity + 2k`.
    2.0 * ((x - parity) / 2.0).round() + parity
}

/// Quadratures as an experiment records them: counts are synthesized, the
/// transfer and Rabi asymmetry are calibrated from the counts themselves,
/// and the estimators are applied shot by shot.
#[derive(Clone, Debug)]
pub struct Measurement {
    pub samples: Vec<QuadratureSample>,
    pub shots: Vec<ShotRecord>,
    pub calibration: Calibration,
}

pub fn simulate_measurement(
    state: &DensityMatrix,
    config: &HomodyneConfig,
    noise: &NoiseModel,
    thetas: &[f64],
    p_per_theta: usize,
    seed: u64,
) -> Result<Measurement> {
    let sim = simulate_shots(state, config, noise, thetas, p_per_theta, seed)?;
    let calibration = calibrate_transfer(&sim.shots)?;
    let labels: Vec<f64> = sim.samples.iter().map(|s| s.theta).collect();
    let samples = estimate_all(&sim.shots, &labels, &calibration)?;
    Ok(Measurement { samples, shots: sim.shots, calibration })
}

/// Reads quadratures back from counts with a fixed calibration.
pub fn estimate_all(
    shots: &[ShotRecord],
    thetas: &[f64],
    cal: &Calibration,
) -> Result<Vec<QuadratureSample>> {
    if shots.len() != thetas.len() {
        return Err(Error::DimensionMismatch { expected: shots.len(), found: thetas.len() });
    }
    shots
        .iter()
        .zip(thetas)
        .map(|(shot, &theta)| {
            let q = estimate_with(shot, cal, QuadratureBasis::PLike)?;
            let (xa, xb) = q.split();
            Ok(QuadratureSample::new(theta, xa, xb))
        })
        .collect()
}
