//! Source states: the ideal two-mode squeezed vacuum and its phase-noisy
//! mixture.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, FockSpace, PureState};
use crate::quadrature::adaptive_simpson;
use crate::{CMatrix, CVector};

/// Spin-dynamics rate, rad/s.
pub const SPIN_DYNAMICS_RATE: f64 = 2.0 * PI * 5.1;
/// Optimal spin-dynamics duration, s.
pub const OPTIMAL_DURATION: f64 = 0.026;
/// Largest truncation tail accepted without a signal.
pub const TAIL_LIMIT: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezingSchedule {
    /// Spin-dynamics rate, rad/s.
    pub omega: f64,
    /// Spin-dynamics duration, s.
    pub t: f64,
}

impl SqueezingSchedule {
    pub fn new(omega: f64, t: f64) -> Result<Self> {
        if !(omega >= 0.0 && t >= 0.0) {
            return Err(Error::InvalidParameter(format!("schedule needs omega, t >= 0 (got {omega}, {t})")));
        }
        Ok(Self { omega, t })
    }

    /// The measured rate with duration `t`.
    pub fn at(t: f64) -> Self {
        Self { omega: SPIN_DYNAMICS_RATE, t }
    }
}

/// Squeezing parameter `xi = omega * t`.
pub fn squeeze_param(schedule: SqueezingSchedule) -> f64 {
    schedule.omega * schedule.t
}

/// Noise acting on the homodyne readout.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Width of the Gaussian noise on the pair phase, i.e. the angle `theta`
    /// of `sum_n exp(-i n theta) ... |n,n>`. Each mode's local-oscillator
    /// phase therefore jitters by half of it.
    pub sigma_phase: f64,
    /// Relative shot-to-shot jitter of the rf transfer `s^2`.
    pub rf_rel_noise: f64,
    /// Extra variance on every quadrature sum `x_A + x_B`.
    pub sum_variance_shift: f64,
    /// Gaussian atom-number detection noise per mode (atoms, standard
    /// deviation). Off unless set explicitly.
    #[serde(default)]
    pub detection_noise: f64,
}

impl NoiseModel {
    pub const NONE: NoiseModel =
        NoiseModel { sigma_phase: 0.0, rf_rel_noise: 0.0, sum_variance_shift: 0.0, detection_noise: 0.0 };

    /// Parameters quoted for the squeezing-dynamics fit: 0.4 % rf intensity
    /// noise and 0.044 pi local-oscillator phase noise.
    pub fn dynamics_quoted() -> Self {
        Self { sigma_phase: 0.044 * PI, rf_rel_noise: 0.004, ..Self::NONE }
    }

    /// Tomography noise model: phase width 0.36 and a 0.12 variance shift of
    /// the quadrature sum.
    pub fn tomography() -> Self {
        Self { sigma_phase: 0.36, sum_variance_shift: 0.12, ..Self::NONE }
    }

    /// Noise used for the squeezing-dynamics reproduction: the tomography
    /// phase width and sum shift together with 0.4 % rf jitter.
    pub fn dynamics() -> Self {
        Self { rf_rel_noise: 0.004, ..Self::tomography() }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [self.sigma_phase, self.rf_rel_noise, self.sum_variance_shift, self.detection_noise];
        if fields.iter().all(|v| v.is_finite() && *v >= 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("noise parameters must be finite and >= 0: {self:?}")))
        }
    }

    /// Per-mode local-oscillator jitter width.
    pub fn lo_jitter(&self) -> f64 {
        0.5 * self.sigma_phase
    }
}

/// A truncated object plus the probability mass lost at the cutoff.
#[derive(Clone, Debug)]
pub struct Truncated<T> {
    pub value: T,
    pub tail: f64,
    pub n_cut: usize,
}

impl<T> Truncated<T> {
    /// Turns a tail above [`TAIL_LIMIT`] into an error.
    pub fn checked(self) -> Result<T> {
        if self.tail > TAIL_LIMIT {
            return Err(Error::TruncationTail { tail: self.tail, limit: TAIL_LIMIT, n_cut: self.n_cut });
        }
        Ok(self.value)
    }

    pub fn is_significant(&self) -> bool {
        self.tail > TAIL_LIMIT
    }
}

/// `lambda = tanh^2 xi`, the ratio of successive pair populations.
pub fn pair_ratio(xi: f64) -> f64 {
    xi.tanh().powi(2)
}

/// Mass of the ideal state above `n_cut` pairs: `lambda^(n_cut + 1)`.
pub fn tail_mass(xi: f64, n_cut: usize) -> f64 {
    pair_ratio(xi).powi(n_cut as i32 + 1)
}

/// Smallest cutoff whose tail mass is at most `tail`.
pub fn cutoff_for(xi: f64, tail: f64) -> usize {
    let lambda = pair_ratio(xi);
    if lambda <= 0.0 {
        return 0;
    }
    let n = (tail.ln() / lambda.ln()).ceil() as i64 - 1;
    n.max(0) as usize
}

fn check_xi(xi: f64) -> Result<()> {
    if !(xi >= 0.0 && xi.is_finite()) {
        return Err(Error::InvalidParameter(format!("squeezing parameter must be >= 0, got {xi}")));
    }
    Ok(())
}

fn pair_state(xi: f64, space: FockSpace, phase: impl Fn(usize) -> Complex64) -> Result<Truncated<PureState>> {
    check_xi(xi)?;
    let t = xi.tanh();
    let mut v = CVector::zeros(space.dim());
    for n in 0..=space.n_cut() {
        v[space.index(n, n)] = phase(n) * (t.powi(n as i32) / xi.cosh());
    }
    Ok(Truncated { value: PureState::new(space, v)?, tail: tail_mass(xi, space.n_cut()), n_cut: space.n_cut() })
}

/// Ideal two-mode squeezed vacuum with amplitudes `(-i tanh xi)^n / cosh xi`
/// on `|n,n>`, renormalized after truncation.
pub fn tmsv(xi: f64, space: FockSpace) -> Result<Truncated<PureState>> {
    let minus_i = Complex64::new(0.0, -1.0);
    pair_state(xi, space, |n| minus_i.powu(n as u32))
}

/// `|xi, theta> = sum_n exp(-i n theta) tanh(xi)^n / cosh(xi) |n,n>`.
pub fn tmsv_rotated(xi: f64, theta: f64, space: FockSpace) -> Result<Truncated<PureState>> {
    pair_state(xi, space, |n| Complex64::from_polar(1.0, -(n as f64) * theta))
}

/// `P~_sigma(k) = int_{-pi}^{pi} P_sigma(theta) exp(i k theta) d theta` for
/// a centered Gaussian of width `sigma`.
pub fn phase_kernel(sigma: f64, k: i64) -> f64 {
    if sigma == 0.0 {
        return 1.0;
    }
    let norm = 1.0 / (2.0 * PI * sigma * sigma).sqrt();
    let f = |th: f64| norm * (-th * th / (2.0 * sigma * sigma)).exp() * (k as f64 * th).cos();
    // Beyond 12 sigma the Gaussian is below 1e-31 of its peak.
    let half = PI.min(12.0 * sigma);
    // Split at the kernel's zeros so Simpson never straddles many periods.
    let pieces = 2 * (k.unsigned_abs() as usize + 4);
    let h = 2.0 * half / pieces as f64;
    (0..pieces)
        .map(|i| {
            let a = -half + i as f64 * h;
            adaptive_simpson(&f, a, a + h, 1e-15)
        })
        .sum()
}

/// Phase-averaged state
/// `rho = sum_{n,m} P~(n - m) tanh(xi)^(n+m) / cosh^2 xi |n,n><m,m|`,
/// renormalized to unit trace (this folds in both the cutoff tail and the
/// Gaussian mass outside `[-pi, pi]`).
pub fn phase_noisy_state(xi: f64, sigma: f64, space: FockSpace) -> Result<Truncated<DensityMatrix>> {
    check_xi(xi)?;
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("phase width must be >= 0, got {sigma}")));
    }
    let l = space.levels();
    let kernel: Vec<f64> = (0..l as i64).map(|k| phase_kernel(sigma, k)).collect();
    let t = xi.tanh();
    let c2 = xi.cosh().powi(2);
    let mut m = CMatrix::zeros(space.dim(), space.dim());
    for n in 0..l {
        for k in 0..l {
            let kern = kernel[n.abs_diff(k)];
            let v = kern * t.powi((n + k) as i32) / c2;
            m[(space.index(n, n), space.index(k, k))] = Complex64::new(v, 0.0);
        }
    }
    Ok(Truncated {
        value: DensityMatrix::normalized(space, m)?,
        tail: tail_mass(xi, space.n_cut()),
        n_cut: space.n_cut(),
    })
}

/// Ideal two-mode variances `(e^{-2 xi}, e^{2 xi})`.
pub fn analytic_variances(xi: f64) -> (f64, f64) {
    ((-2.0 * xi).exp(), (2.0 * xi).exp())
}

/// Mean total number `2 sinh^2 xi` of the untruncated state.
pub fn mean_total_number(xi: f64) -> f64 {
    2.0 * xi.sinh().powi(2)
}
