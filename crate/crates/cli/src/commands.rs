use std::fs::File;
use std::path::{Path, PathBuf};

use eprlab_core::criteria::{self, Occupations};
use eprlab_core::homodyne::{io, simulate_measurement, HomodyneConfig, QuadratureSample};
use eprlab_core::pipelines::{self, phase_grid, ExperimentPreset, Fig3Config, FigS2Config, Manifest, RunFiles};
use eprlab_core::states::{cutoff_for, tmsv};
use eprlab_core::tomography::{self, TomographyConfig};
use eprlab_core::{metrics, DensityMatrix, FockSpace, NoiseModel};
use serde::{Deserialize, Serialize};

use crate::args::{Common, CriteriaArgs, Figure, MetricsArgs, ReproduceArgs, SimulateArgs, TomoArgs};
use crate::config::overlay;
use crate::CliError;

const DEFAULT_SEED: u64 = 1;
const DEFAULT_BOOTSTRAP: usize = 200;

fn usage(e: eprlab_core::Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: eprlab_core::Error) -> CliError {
    CliError::Runtime(e.into())
}

fn preset(common: &Common) -> Result<Option<ExperimentPreset>, CliError> {
    common.preset.as_deref().map(pipelines::preset).transpose().map_err(usage)
}

fn run_dir(common: &Common, stem: &str, seed: u64) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from("runs").join(format!("{stem}-seed{seed}")))
}

fn finish(
    files: &mut RunFiles,
    common: &Common,
    command: &str,
    seed: u64,
    parameters: impl Serialize,
    dir: &Path,
) -> Result<(), CliError> {
    let parameters = serde_json::to_value(parameters).map_err(|e| CliError::Runtime(e.into()))?;
    Manifest::new(command, common.preset.as_deref(), seed, parameters).attach(files).map_err(runtime)?;
    files.write_atomic(dir).map_err(runtime)?;
    log::info!("wrote {}", dir.display());
    Ok(())
}

fn read_samples(path: &Path) -> Result<Vec<QuadratureSample>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))?;
    io::read_samples(file).map_err(|e| match e {
        eprlab_core::Error::EmptyInput(_) => CliError::Usage(format!("{}: {e}", path.display())),
        e => CliError::Runtime(anyhow::anyhow!("{}: {e}", path.display())),
    })
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateParams {
    xi: Option<f64>,
    thetas: Vec<f64>,
    p_per_theta: usize,
    noise: NoiseModel,
    homodyne: HomodyneConfig,
    seed: u64,
}

pub fn simulate(common: &Common, args: &SimulateArgs) -> Result<(), CliError> {
    let base = match preset(common)? {
        Some(p) => SimulateParams {
            xi: Some(p.xi),
            thetas: p.thetas,
            p_per_theta: p.p_per_theta,
            noise: p.noise,
            homodyne: HomodyneConfig::experiment(),
            seed: p.seed,
        },
        None => SimulateParams {
            xi: None,
            thetas: phase_grid(29),
            p_per_theta: 100,
            noise: NoiseModel::NONE,
            homodyne: HomodyneConfig::experiment(),
            seed: DEFAULT_SEED,
        },
    };
    let mut params = overlay(base, common.config.as_deref())?;
    if let Some(xi) = args.xi {
        params.xi = Some(xi);
    }
    if let Some(p) = args.p {
        params.p_per_theta = p;
    }
    if let Some(t) = &args.thetas {
        params.thetas = t.clone();
    }
    if let Some(n) = args.n_theta {
        params.thetas = phase_grid(n);
    }
    let noise = &mut params.noise;
    for (flag, slot) in [
        (args.sigma_phase, &mut noise.sigma_phase),
        (args.rf_noise, &mut noise.rf_rel_noise),
        (args.sum_shift, &mut noise.sum_variance_shift),
        (args.detection_noise, &mut noise.detection_noise),
    ] {
        if let Some(v) = flag {
            *slot = v;
        }
    }
    if let Some(s2) = args.transfer {
        params.homodyne.transfer_fraction = Some(s2);
    }
    if let Some(seed) = common.seed {
        params.seed = seed;
    }
    let xi = params.xi.ok_or_else(|| CliError::Usage("no squeezing parameter: pass --xi or --preset".into()))?;
    if params.p_per_theta == 0 || params.thetas.is_empty() {
        return Err(CliError::Usage("need at least one phase and one sample per phase".into()));
    }
    params.noise.validate().map_err(usage)?;
    if !(xi >= 0.0 && xi.is_finite()) {
        return Err(CliError::Usage(format!("squeezing parameter must be >= 0, got {xi}")));
    }
    let stem = match &common.preset {
        Some(p) => format!("simulate-{p}"),
        None => "simulate".into(),
    };
    let dir = run_dir(common, &stem, params.seed);

    let truth = tmsv(xi, FockSpace::new(cutoff_for(xi, pipelines::TRUTH_TAIL))).map_err(usage)?.value.projector();
    let m = simulate_measurement(&truth, &params.homodyne, &params.noise, &params.thetas, params.p_per_theta, params.seed)
        .map_err(runtime)?;
    let mut files = RunFiles::default();
    files.push_csv("samples.csv", |b| io::write_samples(b, &m.samples)).map_err(runtime)?;
    files.push_csv("shots.csv", |b| io::write_shots(b, &m.shots)).map_err(runtime)?;
    files.push_json("calibration.json", &m.calibration).map_err(runtime)?;
    finish(&mut files, common, "simulate", params.seed, &params, &dir)
}

// ---------------------------------------------------------------- tomo

#[derive(Debug, Serialize)]
struct WithInput<'a, T: Serialize> {
    input: &'a Path,
    #[serde(flatten)]
    params: &'a T,
}

pub fn tomo(common: &Common, args: &TomoArgs) -> Result<(), CliError> {
    let preset = preset(common)?;
    let base = preset.as_ref().map(ExperimentPreset::tomography_config).unwrap_or_default();
    let mut cfg: TomographyConfig = overlay(base, common.config.as_deref())?;
    if let Some(v) = args.dx {
        cfg.dx = v;
    }
    if let Some(v) = args.n_cut {
        cfg.n_cut = v;
    }
    if let Some(v) = args.max_iter {
        cfg.max_iter = v;
    }
    if let Some(v) = args.tol {
        cfg.tol = v;
    }
    cfg.record_spectrum |= args.record_spectrum;
    cfg.validate().map_err(usage)?;
    let seed = common.seed.or(preset.map(|p| p.seed)).unwrap_or(DEFAULT_SEED);
    let dir = run_dir(common, "tomo", seed);

    let samples = read_samples(&args.samples)?;
    let hists = tomography::bin_samples(&samples, cfg.dx).map_err(runtime)?;
    let ml = tomography::ml_reconstruct(&hists, &cfg).map_err(runtime)?;
    let mut files = RunFiles::default();
    let mut rho = ml.rho.to_json().map_err(runtime)?.into_bytes();
    rho.push(b'\n');
    files.0.push(("rho.json".into(), rho));
    files.push_json("diagnostics.json", &ml.diagnostics()).map_err(runtime)?;
    files.push_json("histograms.json", &hists).map_err(runtime)?;
    finish(&mut files, common, "tomo", seed, WithInput { input: &args.samples, params: &cfg }, &dir)?;
    if !ml.converged {
        return Err(CliError::NotConverged(format!(
            "no convergence after {} iterations (residual {:.3e} > {:.1e}); results written to {}",
            ml.iterations,
            ml.fixed_point_residual,
            cfg.tol,
            dir.display()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------- criteria

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CriteriaParams {
    occupations: Occupations,
    bootstrap: usize,
    seed: u64,
}

pub fn criteria(common: &Common, args: &CriteriaArgs) -> Result<(), CliError> {
    let preset = preset(common)?;
    let base = CriteriaParams {
        occupations: Occupations::continuous_variable(),
        bootstrap: DEFAULT_BOOTSTRAP,
        seed: preset.map(|p| p.seed).unwrap_or(DEFAULT_SEED),
    };
    let mut params = overlay(base, common.config.as_deref())?;
    let occ = &mut params.occupations;
    for (flag, slot) in [(args.n_a, &mut occ.n_a), (args.n_b, &mut occ.n_b), (args.n0, &mut occ.n0)] {
        if let Some(v) = flag {
            *slot = v;
        }
    }
    if let Some(b) = args.bootstrap {
        params.bootstrap = b;
    }
    if let Some(seed) = common.seed {
        params.seed = seed;
    }
    if params.bootstrap != 0 && params.bootstrap < tomography::bootstrap::MIN_RESAMPLES {
        return Err(CliError::Usage(format!(
            "--bootstrap must be 0 or at least {}",
            tomography::bootstrap::MIN_RESAMPLES
        )));
    }
    let dir = run_dir(common, "criteria", params.seed);

    let samples = read_samples(&args.samples)?;
    let report = if params.bootstrap == 0 {
        criteria::best_report(&samples, params.occupations)
    } else {
        criteria::best_report_with_errors(&samples, params.occupations, params.bootstrap, params.seed)
    }
    .map_err(|e| match e {
        eprlab_core::Error::InvalidParameter(_) => usage(e),
        e => runtime(e),
    })?;
    let sweep = criteria::variance_sweep(&samples);
    let mut files = RunFiles::default();
    files.push_json("report.json", &report).map_err(runtime)?;
    files.push_csv("variance_sweep.csv", |b| sweep.write_csv(b)).map_err(runtime)?;
    finish(&mut files, common, "criteria", params.seed, WithInput { input: &args.samples, params: &params }, &dir)
}

// ---------------------------------------------------------------- metrics

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricsParams {
    target_xi: Option<f64>,
}

pub fn metrics(common: &Common, args: &MetricsArgs) -> Result<(), CliError> {
    let preset = preset(common)?;
    let seed = common.seed.or(preset.as_ref().map(|p| p.seed)).unwrap_or(DEFAULT_SEED);
    let base = MetricsParams { target_xi: preset.map(|p| p.xi) };
    let mut params = overlay(base, common.config.as_deref())?;
    if let Some(xi) = args.target_xi {
        params.target_xi = Some(xi);
    }
    if params.target_xi.is_some_and(|xi| !(xi >= 0.0 && xi.is_finite())) {
        return Err(CliError::Usage("--target-xi must be finite and >= 0".into()));
    }
    let dir = run_dir(common, "metrics", seed);
    let text = std::fs::read_to_string(&args.rho)
        .map_err(|e| CliError::Usage(format!("cannot open {}: {e}", args.rho.display())))?;
    let rho = DensityMatrix::from_json(&text)
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("{}: {e}", args.rho.display())))?;
    let report = metrics::metrics_report(&rho, params.target_xi).map_err(runtime)?;
    let mut files = RunFiles::default();
    files.push_json("metrics.json", &report).map_err(runtime)?;
    finish(&mut files, common, "metrics", seed, WithInput { input: &args.rho, params: &params }, &dir)
}

// ---------------------------------------------------------------- reproduce

pub fn reproduce(common: &Common, args: &ReproduceArgs) -> Result<(), CliError> {
    let from_preset = common
        .preset
        .as_deref()
        .map(|name| match name {
            "fig3" => Ok(Figure::Fig3),
            "fig_s2" => Ok(Figure::FigS2),
            "fig_s3" => Ok(Figure::FigS3),
            other => Err(CliError::Usage(format!(
                "unknown figure {other:?}; valid ids: {}",
                pipelines::PRESET_NAMES.join(", ")
            ))),
        })
        .transpose()?;
    let figure = match (args.figure, from_preset) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::Usage(format!("figure {} conflicts with --preset {}", a.id(), b.id())))
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => {
            return Err(CliError::Usage(format!(
                "missing figure id; valid ids: {}",
                pipelines::PRESET_NAMES.join(", ")
            )))
        }
    };
    let config = common.config.as_deref();
    match figure {
        Figure::Fig3 => {
            let mut cfg = overlay(Fig3Config::default(), config)?;
            cfg.seed = common.seed.unwrap_or(cfg.seed);
            let dir = run_dir(common, figure.id(), cfg.seed);
            let out = pipelines::run_fig3(&cfg).map_err(usage_or_runtime)?;
            let mut files = out.files().map_err(runtime)?;
            finish(&mut files, common, "reproduce fig3", cfg.seed, &cfg, &dir)
        }
        Figure::FigS2 => {
            let mut cfg = overlay(FigS2Config::default(), config)?;
            cfg.seed = common.seed.unwrap_or(cfg.seed);
            let dir = run_dir(common, figure.id(), cfg.seed);
            let out = pipelines::run_fig_s2(&cfg).map_err(usage_or_runtime)?;
            let mut files = out.files().map_err(runtime)?;
            finish(&mut files, common, "reproduce fig_s2", cfg.seed, &cfg, &dir)
        }
        Figure::FigS3 => {
            let mut p = overlay(pipelines::preset("fig_s3").map_err(usage)?, config)?;
            p.seed = common.seed.unwrap_or(p.seed);
            p.validate().map_err(usage)?;
            let dir = run_dir(common, figure.id(), p.seed);
            let out = pipelines::run_fig_s3(&p).map_err(usage_or_runtime)?;
            let mut files = out.files().map_err(runtime)?;
            finish(&mut files, common, "reproduce fig_s3", p.seed, &p, &dir)?;
            if !out.ml.converged {
                return Err(CliError::NotConverged(format!(
                    "reconstruction stopped after {} iterations; results written to {}",
                    out.ml.iterations,
                    dir.display()
                )));
            }
            Ok(())
        }
    }
}

fn usage_or_runtime(e: eprlab_core::Error) -> CliError {
    match e {
        eprlab_core::Error::InvalidParameter(_) => usage(e),
        e => runtime(e),
    }
}
