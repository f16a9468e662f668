//! Three-mode unbalanced homodyne readout.
//!
//! An rf pulse couples the undepleted `m_F = 0` condensate (the local
//! oscillator) to the two side modes. Counting atoms in the side modes then
//! yields the quadrature difference and sum of the two modes. This module
//! holds the mode transformation, the count-to-quadrature estimators and
//! their calibration; [`pdf`] evaluates exact quadrature densities and
//! [`sampling`] draws Monte-Carlo data from them.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod io;
pub mod pdf;
pub mod sampling;

pub use pdf::{quad_pdf, Grid, QuadDensity};
pub use sampling::{sample_quadratures, simulate_measurement, simulate_shots, Measurement, SimulatedShots};

/// Relative difference between the two Rabi frequencies in the experiment.
pub const RABI_ASYMMETRY: f64 = 0.017;
/// Fraction of the condensate transferred by the homodyne pulse.
pub const TRANSFER: f64 = 0.15;
/// Atoms in the condensate before homodyning.
pub const ATOM_NUMBER: f64 = 20_000.0;
/// Duration of the homodyne rf pulse, s.
pub const PULSE_DURATION: f64 = 30e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomodyneConfig {
    /// Rabi frequency of the `0 <-> +1` transition, rad/s.
    pub omega_p1: f64,
    /// Rabi frequency of the `0 <-> -1` transition, rad/s.
    pub omega_m1: f64,
    /// Pulse duration, s.
    pub tau: f64,
    /// Mean local-oscillator atom number before homodyning.
    pub n0: f64,
    /// Measured transfer `s^2`; when absent it follows from the pulse area.
    #[serde(default)]
    pub transfer_fraction: Option<f64>,
}

impl HomodyneConfig {
    pub fn new(omega_p1: f64, omega_m1: f64, tau: f64, n0: f64) -> Result<Self> {
        let cfg = Self { omega_p1, omega_m1, tau, n0, transfer_fraction: None };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Experimental setting: 30 us pulse, 15 % transfer, 20 000 atoms and
    /// Rabi frequencies differing by 1.7 %.
    pub fn experiment() -> Self {
        let omega = 2.0 * TRANSFER.sqrt().asin() / PULSE_DURATION;
        let r = 1.0 + RABI_ASYMMETRY;
        let omega_m1 = omega * (2.0 / (1.0 + r * r)).sqrt();
        Self { omega_p1: r * omega_m1, omega_m1, tau: PULSE_DURATION, n0: ATOM_NUMBER, transfer_fraction: None }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.omega_p1 > 0.0 && self.omega_m1 > 0.0 && self.tau > 0.0 && self.n0 > 0.0;
        let transfer_ok = self.transfer_fraction.is_none_or(|s2| (0.0..=1.0).contains(&s2));
        if !ok || !transfer_ok {
            return Err(Error::InvalidParameter(format!("invalid homodyne config {self:?}")));
        }
        Ok(())
    }

    /// `sqrt((omega_p1^2 + omega_m1^2) / 2)`.
    pub fn omega(&self) -> f64 {
        ((self.omega_p1.powi(2) + self.omega_m1.powi(2)) / 2.0).sqrt()
    }

    /// Rescaled Rabi frequencies `(omega_p1 / omega, omega_m1 / omega)`.
    pub fn rescaled(&self) -> (f64, f64) {
        let o = self.omega();
        (self.omega_p1 / o, self.omega_m1 / o)
    }

    /// `(c, s) = (cos(omega tau / 2), sin(omega tau / 2))`.
    pub fn pulse(&self) -> (f64, f64) {
        let half = 0.5 * self.omega() * self.tau;
        (half.cos(), half.sin())
    }

    pub fn calibration(&self) -> Calibration {
        let (wp, wm) = self.rescaled();
        let s2 = self.transfer_fraction.unwrap_or_else(|| self.pulse().1.powi(2));
        Calibration { s2, c2: 1.0 - s2, asymmetry: wp * wp - wm * wm, asymmetry_defined: true }
    }

    pub fn n_tot(&self) -> u64 {
        self.n0.round() as u64
    }
}

/// Transfer and Rabi asymmetry entering the estimators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub s2: f64,
    pub c2: f64,
    /// `omega~_p1^2 - omega~_m1^2`.
    pub asymmetry: f64,
    /// False when the transfer vanished and the asymmetry could not be
    /// inferred (it is then reported as 0).
    pub asymmetry_defined: bool,
}

/// Atom counts of one homodyne shot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub n_a: u64,
    pub n_b: u64,
    pub n_tot: u64,
}

impl ShotRecord {
    pub fn new(n_a: u64, n_b: u64, n_tot: u64) -> Result<Self> {
        if n_tot == 0 || n_a + n_b > n_tot {
            return Err(Error::InvalidParameter(format!("inconsistent shot ({n_a}, {n_b}, {n_tot})")));
        }
        Ok(Self { n_a, n_b, n_tot })
    }
}

/// One homodyne outcome: local-oscillator phase and the two quadratures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSample {
    pub theta: f64,
    pub x_a: f64,
    pub x_b: f64,
}

impl QuadratureSample {
    /// Stores `theta` reduced to `[0, 2 pi)`.
    pub fn new(theta: f64, x_a: f64, x_b: f64) -> Self {
        Self { theta: wrap_phase(theta), x_a, x_b }
    }

    pub fn difference(&self) -> f64 {
        self.x_a - self.x_b
    }

    pub fn sum(&self) -> f64 {
        self.x_a + self.x_b
    }
}

pub fn wrap_phase(theta: f64) -> f64 {
    let w = theta.rem_euclid(2.0 * PI);
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}

/// Which physical quadrature the upstream phase prepared. The arithmetic is
/// identical for both; the label travels with the result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadratureBasis {
    PLike,
    XLike,
}

/// Estimated `(q_A - q_B, q_A + q_B)` of one shot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraturePair {
    pub basis: QuadratureBasis,
    pub difference: f64,
    pub sum: f64,
}

impl QuadraturePair {
    pub fn split(&self) -> (f64, f64) {
        (0.5 * (self.sum + self.difference), 0.5 * (self.sum - self.difference))
    }
}

/// Output-mode matrix acting on `(a_A, a_B, a_0)`.
pub fn mode_transform(config: &HomodyneConfig) -> Matrix3<Complex64> {
    let (wp, wm) = config.rescaled();
    let (c, s) = config.pulse();
    let r = |x: f64| Complex64::new(x, 0.0);
    // s / (i sqrt 2) = -i s / sqrt 2
    let coupling = |w: f64| Complex64::new(0.0, -w * s / SQRT_2);
    Matrix3::new(
        r((wp * wp * c + wm * wm) / 2.0),
        r(wp * wm * (c - 1.0) / 2.0),
        coupling(wp),
        r(wp * wm * (c - 1.0) / 2.0),
        r((wm * wm * c + wp * wp) / 2.0),
        coupling(wm),
        coupling(wp),
        coupling(wm),
        r(c),
    )
}

/// Count-to-quadrature estimators with the configuration's own calibration.
pub fn estimate_quadratures(
    shot: &ShotRecord,
    config: &HomodyneConfig,
    basis: QuadratureBasis,
) -> Result<QuadraturePair> {
    estimate_with(shot, &config.calibration(), basis)
}

/// `difference = (N_A - N_B - s^2 (w+^2 - w-^2) N_tot / 2) / sqrt(s^2 N_tot)`,
/// `sum = (N_A + N_B - s^2 N_tot) / sqrt(s^2 c^2 N_tot)`.
///
/// The third-order Rabi-asymmetry corrections are dropped; they scale with
/// the 1.7 % asymmetry.
pub fn estimate_with(shot: &ShotRecord, cal: &Calibration, basis: QuadratureBasis) -> Result<QuadraturePair> {
    if !(cal.s2 > 0.0) {
        return Err(Error::UndefinedEstimator("transfer s^2 is zero"));
    }
    if !(cal.c2 > 0.0) {
        return Err(Error::UndefinedEstimator("c^2 is zero (complete transfer)"));
    }
    let n = shot.n_tot as f64;
    let (na, nb) = (shot.n_a as f64, shot.n_b as f64);
    let difference = (na - nb - cal.s2 * cal.asymmetry * n / 2.0) / (cal.s2 * n).sqrt();
    let sum = (na + nb - cal.s2 * n) / (cal.s2 * cal.c2 * n).sqrt();
    Ok(QuadraturePair { basis, difference, sum })
}

/// Inverts the mean transfer and mean imbalance of a set of shots.
pub fn calibrate_transfer(shots: &[ShotRecord]) -> Result<Calibration> {
    if shots.is_empty() {
        return Err(Error::EmptyInput("calibration needs at least one shot"));
    }
    let frac_sum: Vec<f64> = shots.iter().map(|s| (s.n_a + s.n_b) as f64 / s.n_tot as f64).collect();
    let frac_diff: Vec<f64> =
        shots.iter().map(|s| (s.n_a as f64 - s.n_b as f64) / s.n_tot as f64).collect();
    let s2 = crate::stats::mean(&frac_sum);
    let mean_diff = crate::stats::mean(&frac_diff);
    let (asymmetry, asymmetry_defined) = if s2 > 0.0 { (2.0 * mean_diff / s2, true) } else { (0.0, false) };
    Ok(Calibration { s2, c2: 1.0 - s2, asymmetry, asymmetry_defined })
}
