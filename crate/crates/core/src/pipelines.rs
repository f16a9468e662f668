//! End-to-end recipes: squeezing dynamics with the EPR criteria, and the
//! simulated tomography studies of an ideal and a noisy squeezed state.
//!
//! Every recipe returns its results in memory; [`RunFiles`] turns them
//! into named file contents so callers can write a run directory in one go.

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{self, noise_prediction, TimePoint};
use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, FockSpace};
use crate::homodyne::{sample_quadratures, HomodyneConfig, QuadratureSample};
use crate::metrics::{self, MetricsReport};
use crate::rng;
use crate::states::{self, cutoff_for, phase_noisy_state, tmsv, NoiseModel, SqueezingSchedule, SPIN_DYNAMICS_RATE};
use crate::stats;
use crate::tomography::{self, bootstrap, Diagnostics, MLResult, TomographyConfig};

pub const PRESET_NAMES: [&str; 3] = ["fig3", "fig_s2", "fig_s3"];
/// Truncation of the states data are drawn from.
pub const TRUTH_TAIL: f64 = 1e-6;
/// Iteration cap of the shipped reconstructions.
pub const PRESET_MAX_ITER: usize = 10_000;
/// Two phases leave the likelihood nearly flat in many directions, and the
/// fixed-point iteration needs ~4e4 steps to settle.
pub const TWO_PHASE_MAX_ITER: usize = 50_000;

/// `n` phases `j pi / n`, `j = 0..n`.
pub fn phase_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| j as f64 * PI / n as f64).collect()
}

/// Complete parameter set of one simulated measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPreset {
    pub name: String,
    pub xi: f64,
    pub noise: NoiseModel,
    pub thetas: Vec<f64>,
    pub p_per_theta: usize,
    pub dx: f64,
    /// Reconstruction cutoff.
    pub n_cut: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl ExperimentPreset {
    pub fn validate(&self) -> Result<()> {
        if self.p_per_theta == 0 {
            return Err(Error::InvalidParameter("p_per_theta must be at least 1".into()));
        }
        if self.thetas.is_empty() {
            return Err(Error::InvalidParameter("at least one phase is required".into()));
        }
        if !(self.xi >= 0.0 && self.xi.is_finite()) || !(self.dx > 0.0) {
            return Err(Error::InvalidParameter(format!("invalid preset {}", self.name)));
        }
        self.noise.validate()
    }

    /// Ideal squeezed vacuum the data are drawn from, truncated at
    /// [`TRUTH_TAIL`].
    pub fn truth(&self) -> Result<DensityMatrix> {
        Ok(tmsv(self.xi, FockSpace::new(cutoff_for(self.xi, TRUTH_TAIL)))?.value.projector())
    }

    pub fn tomography_config(&self) -> TomographyConfig {
        TomographyConfig { dx: self.dx, n_cut: self.n_cut, max_iter: self.max_iter, ..Default::default() }
    }
}

/// Shipped presets.
pub fn preset(name: &str) -> Result<ExperimentPreset> {
    let optimum = states::squeeze_param(SqueezingSchedule::at(states::OPTIMAL_DURATION));
    let p = match name {
        "fig3" => ExperimentPreset {
            name: name.into(),
            xi: optimum,
            noise: NoiseModel::dynamics(),
            thetas: vec![criteria::THETA_X, criteria::THETA_P],
            p_per_theta: 20_000,
            dx: 0.25,
            n_cut: 8,
            max_iter: TWO_PHASE_MAX_ITER,
            seed: 1,
        },
        "fig_s2" => ExperimentPreset {
            name: name.into(),
            xi: 0.8,
            noise: NoiseModel::NONE,
            thetas: phase_grid(29),
            p_per_theta: 100,
            dx: 0.25,
            n_cut: 8,
            max_iter: PRESET_MAX_ITER,
            seed: 1,
        },
        "fig_s3" => ExperimentPreset {
            name: name.into(),
            xi: 0.63,
            noise: NoiseModel::tomography(),
            thetas: phase_grid(29),
            p_per_theta: 100,
            dx: 0.25,
            n_cut: 8,
            max_iter: PRESET_MAX_ITER,
            seed: 1,
        },
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown preset {other:?}; valid: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(p)
}

/// Named file contents of a run.
#[derive(Clone, Debug, Default)]
pub struct RunFiles(pub Vec<(String, Vec<u8>)>);

impl RunFiles {
    pub fn push_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_vec_pretty(value)?;
        text.push(b'\n');
        self.0.push((name.into(), text));
        Ok(())
    }

    pub fn push_csv(&mut self, name: &str, write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.0.push((name.into(), buf));
        Ok(())
    }

    pub fn names(&self) -> Vec<String> {
        self.0.iter().map(|f| f.0.clone()).collect()
    }

    /// Writes every file into `dir` through a sibling staging directory
    /// that is renamed into place, so a failed run leaves nothing behind.
    /// An existing `dir` is replaced only if it is empty or holds an
    /// earlier run (has a `manifest.json`).
    pub fn write_atomic(&self, dir: &Path) -> Result<()> {
        if dir.exists() {
            let empty = std::fs::read_dir(dir)?.next().is_none();
            if !empty && !dir.join("manifest.json").is_file() {
                return Err(Error::InvalidParameter(format!(
                    "refusing to replace {} because it is not an earlier run directory",
                    dir.display()
                )));
            }
        }
        let parent = dir.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        std::fs::create_dir_all(parent)?;
        let name = dir.file_name().ok_or_else(|| Error::InvalidParameter(format!("bad output path {dir:?}")))?;
        let staging = parent.join(format!(".{}.partial", name.to_string_lossy()));
        if staging.exists() {
            std::fs::remove_dir_all(&staging)?;
        }
        std::fs::create_dir_all(&staging)?;
        let result = (|| -> Result<()> {
            for (file, bytes) in &self.0 {
                std::fs::write(staging.join(file), bytes)?;
            }
            if dir.exists() {
                std::fs::remove_dir_all(dir)?;
            }
            std::fs::rename(&staging, dir)?;
            Ok(())
        })();
        if result.is_err() {
            let _ = std::fs::remove_dir_all(&staging);
        }
        result
    }
}

/// Provenance record written next to every run's outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub preset: Option<String>,
    pub seed: u64,
    pub parameters: serde_json::Value,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, preset: Option<&str>, seed: u64, parameters: serde_json::Value) -> Self {
        Self {
            tool: "eprlab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            preset: preset.map(str::to_string),
            seed,
            parameters,
            files: Vec::new(),
        }
    }

    /// Appends `manifest.json` listing the other files.
    pub fn attach(mut self, files: &mut RunFiles) -> Result<()> {
        self.files = files.names();
        files.push_json("manifest.json", &self)
    }
}

// ---------------------------------------------------------------- fig3

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig3Config {
    /// Squeezing durations, s.
    pub times: Vec<f64>,
    pub omega: f64,
    pub noise: NoiseModel,
    pub p_per_point: usize,
    pub seed: u64,
}

impl Default for Fig3Config {
    fn default() -> Self {
        Self {
            times: (0..=20).map(|k| k as f64 * 2e-3).collect(),
            omega: SPIN_DYNAMICS_RATE,
            noise: NoiseModel::dynamics(),
            p_per_point: 20_000,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Fig3Output {
    pub rows: Vec<TimePoint>,
    /// Duration with the smallest sampled EPR product.
    pub sampled_min_t: f64,
    /// Minimum of the noise-model product on a 0.1 ms grid over the same span.
    pub model_min_t: f64,
    pub model_min_product: f64,
}

pub fn run_fig3(cfg: &Fig3Config) -> Result<Fig3Output> {
    if cfg.times.is_empty() {
        return Err(Error::EmptyInput("time grid"));
    }
    if cfg.times.iter().any(|&t| !(0.0..=0.040 + 1e-12).contains(&t)) {
        return Err(Error::InvalidParameter("times must lie within [0, 40 ms]".into()));
    }
    if cfg.p_per_point < 2 {
        return Err(Error::InvalidParameter("p_per_point must be at least 2".into()));
    }
    let hc = HomodyneConfig::experiment();
    let rows = criteria::time_sweep(&cfg.times, cfg.omega, &cfg.noise, &hc, cfg.p_per_point, cfg.seed)?;
    let sampled_min_t =
        rows.iter().min_by(|a, b| a.epr_product.total_cmp(&b.epr_product)).map(|r| r.t).unwrap_or(0.0);
    let t_max = cfg.times.iter().copied().fold(0.0, f64::max);
    let steps = (t_max / 1e-4).round() as usize;
    let (model_min_t, model_min_product) = (0..=steps)
        .map(|k| {
            let t = k as f64 * 1e-4;
            (t, noise_prediction(cfg.omega * t, &cfg.noise, &hc).epr_product)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0.0, 1.0));
    Ok(Fig3Output { rows, sampled_min_t, model_min_t, model_min_product })
}

impl Fig3Output {
    pub fn files(&self) -> Result<RunFiles> {
        let mut files = RunFiles::default();
        files.push_csv("variance_sweep.csv", |b| criteria::write_time_sweep_csv(b, &self.rows))?;
        files.push_json(
            "summary.json",
            &serde_json::json!({
                "sampled_min_t_s": self.sampled_min_t,
                "model_min_t_s": self.model_min_t,
                "model_min_product": self.model_min_product,
            }),
        )?;
        Ok(files)
    }
}

// ---------------------------------------------------------------- fig_s2

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigS2Config {
    pub xi: f64,
    pub ps: Vec<usize>,
    pub dxs: Vec<f64>,
    pub seeds: usize,
    pub n_theta: usize,
    pub n_cut: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// Bootstrap resamples per `(p, dx)` point, on the first seed; 0 skips.
    pub bootstrap: usize,
    pub seed: u64,
}

impl Default for FigS2Config {
    fn default() -> Self {
        Self {
            xi: 0.8,
            ps: vec![25, 50, 100, 200, 400],
            dxs: vec![0.25, 0.1],
            seeds: 5,
            n_theta: 29,
            n_cut: 8,
            max_iter: PRESET_MAX_ITER,
            tol: 1e-8,
            bootstrap: 0,
            seed: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FigS2Point {
    pub p: usize,
    pub dx: f64,
    pub seed_index: usize,
    pub fidelity: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FigS2Summary {
    pub p: usize,
    pub dx: f64,
    pub median_fidelity: f64,
    pub bootstrap_se: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FigS2Output {
    pub points: Vec<FigS2Point>,
    pub summary: Vec<FigS2Summary>,
}

impl FigS2Output {
    /// Median fidelity at the largest `p` for bin width `dx`.
    pub fn asymptote(&self, dx: f64) -> Option<f64> {
        self.summary.iter().filter(|s| s.dx == dx).max_by_key(|s| s.p).map(|s| s.median_fidelity)
    }

    /// Median fidelities in order of increasing `p`.
    pub fn medians(&self, dx: f64) -> Vec<f64> {
        let mut v: Vec<_> = self.summary.iter().filter(|s| s.dx == dx).collect();
        v.sort_by_key(|s| s.p);
        v.iter().map(|s| s.median_fidelity).collect()
    }

    pub fn files(&self) -> Result<RunFiles> {
        let mut files = RunFiles::default();
        files.push_csv("fidelity_points.csv", |b| {
            let mut w = csv::Writer::from_writer(b);
            let map = |e: csv::Error| Error::Format(e.to_string());
            w.write_record(["p", "dx", "seed_index", "fidelity", "iterations", "converged"]).map_err(map)?;
            for p in &self.points {
                w.write_record([
                    p.p.to_string(),
                    p.dx.to_string(),
                    p.seed_index.to_string(),
                    p.fidelity.to_string(),
                    p.iterations.to_string(),
                    p.converged.to_string(),
                ])
                .map_err(map)?;
            }
            w.flush()?;
            Ok(())
        })?;
        files.push_csv("fidelity.csv", |b| {
            let mut w = csv::Writer::from_writer(b);
            let map = |e: csv::Error| Error::Format(e.to_string());
            w.write_record(["p", "dx", "fidelity", "bootstrap_se"]).map_err(map)?;
            for s in &self.summary {
                let se = s.bootstrap_se.map(|v| v.to_string()).unwrap_or_default();
                w.write_record([s.p.to_string(), s.dx.to_string(), s.median_fidelity.to_string(), se])
                    .map_err(map)?;
            }
            w.flush()?;
            Ok(())
        })?;
        Ok(files)
    }
}

/// First `p` samples of every phase group.
pub fn per_phase_prefix(samples: &[QuadratureSample], p: usize) -> Vec<QuadratureSample> {
    criteria::group_by_theta(samples).into_iter().flat_map(|(_, g)| g.into_iter().take(p)).collect()
}

pub fn run_fig_s2(cfg: &FigS2Config) -> Result<FigS2Output> {
    if cfg.ps.is_empty() || cfg.ps.contains(&0) {
        return Err(Error::InvalidParameter("every p must be at least 1".into()));
    }
    if cfg.dxs.is_empty() || cfg.seeds == 0 || cfg.n_theta == 0 {
        return Err(Error::InvalidParameter("fig_s2 needs bin widths, seeds and phases".into()));
    }
    if cfg.bootstrap != 0 && cfg.bootstrap < bootstrap::MIN_RESAMPLES {
        return Err(Error::InvalidParameter(format!("bootstrap needs at least {} resamples", bootstrap::MIN_RESAMPLES)));
    }
    let truth = tmsv(cfg.xi, FockSpace::new(cutoff_for(cfg.xi, TRUTH_TAIL)))?.value.projector();
    let target = tmsv(cfg.xi, FockSpace::new(cfg.n_cut))?.value;
    let thetas = phase_grid(cfg.n_theta);
    let p_max = *cfg.ps.iter().max().expect("non-empty");
    // Smaller p use a prefix of the same data, so the data are nested.
    let datasets: Vec<Vec<QuadratureSample>> = (0..cfg.seeds)
        .map(|s| sample_quadratures(&truth, &thetas, p_max, &NoiseModel::NONE, rng::derive_seed(cfg.seed, s as u64)))
        .collect::<Result<_>>()?;
    let tomo = |dx: f64| TomographyConfig { dx, n_cut: cfg.n_cut, max_iter: cfg.max_iter, tol: cfg.tol, ..Default::default() };
    let jobs: Vec<(usize, f64, usize)> = cfg
        .ps
        .iter()
        .flat_map(|&p| cfg.dxs.iter().flat_map(move |&dx| (0..cfg.seeds).map(move |s| (p, dx, s))))
        .collect();
    let points: Vec<FigS2Point> = jobs
        .par_iter()
        .map(|&(p, dx, s)| {
            let data = per_phase_prefix(&datasets[s], p);
            let ml = tomography::reconstruct_samples(&data, &tomo(dx))?;
            if !ml.converged {
                log::warn!("fig_s2: p = {p}, dx = {dx}, seed {s} did not converge");
            }
            Ok(FigS2Point {
                p,
                dx,
                seed_index: s,
                fidelity: metrics::fidelity_pure(&ml.rho, &target)?,
                iterations: ml.iterations,
                converged: ml.converged,
            })
        })
        .collect::<Result<_>>()?;
    let mut summary = Vec::new();
    for &p in &cfg.ps {
        for &dx in &cfg.dxs {
            let f: Vec<f64> =
                points.iter().filter(|q| q.p == p && q.dx == dx).map(|q| q.fidelity).collect();
            let bootstrap_se = if cfg.bootstrap > 0 {
                let data = per_phase_prefix(&datasets[0], p);
                let est = bootstrap::bootstrap(&data, cfg.bootstrap, rng::derive_seed(cfg.seed, p as u64), |d| {
                    let ml = tomography::reconstruct_samples(d, &tomo(dx))?;
                    metrics::fidelity_pure(&ml.rho, &target)
                })?;
                Some(est.se)
            } else {
                None
            };
            summary.push(FigS2Summary { p, dx, median_fidelity: stats::median(&f), bootstrap_se });
        }
    }
    Ok(FigS2Output { points, summary })
}

// ---------------------------------------------------------------- fig_s3

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorDominance {
    pub total: usize,
    pub twin_population: f64,
    /// Largest population among the other states of the sector.
    pub max_other: f64,
    pub dominant: bool,
}

/// Population of `|N/2, N/2>` against the rest of each even sector
/// `N = 2, 4, ..., max_total`.
pub fn twin_fock_dominance(rho: &DensityMatrix, max_total: usize) -> Vec<SectorDominance> {
    let n_cut = rho.space().n_cut();
    (2..=max_total)
        .step_by(2)
        .filter(|&n| n / 2 <= n_cut)
        .map(|n| {
            let twin = rho.population(n / 2, n / 2);
            let max_other = (n.saturating_sub(n_cut)..=n.min(n_cut))
                .filter(|&a| a != n / 2)
                .map(|a| rho.population(a, n - a))
                .fold(0.0, f64::max);
            SectorDominance { total: n, twin_population: twin, max_other, dominant: twin > max_other }
        })
        .collect()
}

/// Sum of `|rho_ij|` over off-diagonal elements that are not pair
/// coherences `|n,n><m,m|`, i.e. those absent from any pair state.
pub fn spurious_coherence(rho: &DensityMatrix) -> f64 {
    let space = rho.space();
    let d = space.dim();
    let mut acc = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let (a, b) = space.occupations(i);
            let (c, e) = space.occupations(j);
            if i != j && !(a == b && c == e) {
                acc.push(rho.entries()[(i, j)].norm());
            }
        }
    }
    stats::pairwise_sum(&acc)
}

#[derive(Clone, Debug)]
pub struct FigS3Output {
    pub preset: ExperimentPreset,
    pub ml: MLResult,
    pub metrics: MetricsReport,
    /// Fidelity to the phase-averaged state at the preset's noise, after
    /// aligning its phase origin.
    pub fidelity_to_truth: f64,
    pub phase_origin: f64,
    pub dominance: Vec<SectorDominance>,
    pub coherence: f64,
    /// Same data size and seed without any noise.
    pub noise_free_coherence: f64,
    pub noise_free_fidelity: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FigS3Summary {
    pub fidelity_to_truth: f64,
    pub phase_origin: f64,
    pub dominance: Vec<SectorDominance>,
    pub coherence: f64,
    pub noise_free_coherence: f64,
    pub noise_free_fidelity: f64,
    pub diagnostics: Diagnostics,
}

pub fn reconstruct_preset(preset: &ExperimentPreset) -> Result<(Vec<QuadratureSample>, MLResult)> {
    preset.validate()?;
    let data = sample_quadratures(&preset.truth()?, &preset.thetas, preset.p_per_theta, &preset.noise, preset.seed)?;
    let ml = tomography::reconstruct_samples(&data, &preset.tomography_config())?;
    Ok((data, ml))
}

pub fn run_fig_s3(preset: &ExperimentPreset) -> Result<FigS3Output> {
    let (_, ml) = reconstruct_preset(preset)?;
    let space = FockSpace::new(preset.n_cut);
    // The analytic state uses real amplitudes; the data carry the (-i)^n
    // convention, so the phase origin is fitted.
    let truth = phase_noisy_state(preset.xi, preset.noise.sigma_phase, space)?.value;
    let (phase_origin, fidelity_to_truth) = metrics::fit_phase_origin(&ml.rho, &truth)?;
    let clean = ExperimentPreset { noise: NoiseModel::NONE, ..preset.clone() };
    let (_, clean_ml) = reconstruct_preset(&clean)?;
    Ok(FigS3Output {
        preset: preset.clone(),
        metrics: metrics::metrics_report(&ml.rho, Some(preset.xi))?,
        fidelity_to_truth,
        phase_origin,
        dominance: twin_fock_dominance(&ml.rho, 6),
        coherence: spurious_coherence(&ml.rho),
        noise_free_coherence: spurious_coherence(&clean_ml.rho),
        noise_free_fidelity: metrics::fidelity_pure(&clean_ml.rho, &tmsv(preset.xi, space)?.value)?,
        ml,
    })
}

impl FigS3Output {
    pub fn files(&self) -> Result<RunFiles> {
        let mut files = RunFiles::default();
        files.0.push(("rho.json".into(), {
            let mut t = self.ml.rho.to_json()?.into_bytes();
            t.push(b'\n');
            t
        }));
        files.push_json("metrics.json", &self.metrics)?;
        files.push_json(
            "summary.json",
            &FigS3Summary {
                fidelity_to_truth: self.fidelity_to_truth,
                phase_origin: self.phase_origin,
                dominance: self.dominance.clone(),
                coherence: self.coherence,
                noise_free_coherence: self.noise_free_coherence,
                noise_free_fidelity: self.noise_free_fidelity,
                diagnostics: self.ml.diagnostics(),
            },
        )?;
        Ok(files)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        for name in PRESET_NAMES {
            let p = preset(name).unwrap();
            p.validate().unwrap();
        }
        assert!(preset("fig9").is_err());
        let s3 = preset("fig_s3").unwrap();
        assert_eq!(s3.thetas.len() * s3.p_per_theta, 2900);
    }

    #[test]
    fn phase_grid_spacing() {
        let g = phase_grid(29);
        assert_eq!(g.len(), 29);
        assert_eq!(g[0], 0.0);
        assert!((g[1] - PI / 29.0).abs() < 1e-15);
    }

    #[test]
    fn pair_states_have_no_spurious_coherence() {
        let rho = phase_noisy_state(0.63, 0.36, FockSpace::new(5)).unwrap().value;
        assert_eq!(spurious_coherence(&rho), 0.0);
        assert!(twin_fock_dominance(&rho, 6).iter().all(|s| s.dominant));
    }

    #[test]
    fn zero_p_rejected() {
        let cfg = FigS2Config { ps: vec![0, 25], ..Default::default() };
        assert!(run_fig_s2(&cfg).is_err());
    }

    #[test]
    fn staged_write() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run");
        let mut files = RunFiles::default();
        files.push_json("a.json", &1).unwrap();
        Manifest::new("test", None, 3, serde_json::json!({})).attach(&mut files).unwrap();
        files.write_atomic(&out).unwrap();
        assert!(out.join("a.json").exists() && out.join("manifest.json").exists());
        assert!(!dir.path().join(".run.partial").exists());
        // Re-running replaces the earlier run.
        files.write_atomic(&out).unwrap();
        let foreign = dir.path().join("foreign");
        std::fs::create_dir(&foreign).unwrap();
        std::fs::write(foreign.join("keep.txt"), "x").unwrap();
        assert!(files.write_atomic(&foreign).is_err());
        assert!(foreign.join("keep.txt").exists());
    }
}
