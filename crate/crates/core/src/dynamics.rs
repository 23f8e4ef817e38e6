//! Direct integration of `i dψ/dt = H(λ(t)) ψ` with classical fixed-step
//! fourth-order Runge-Kutta, intensity tracking, and adiabaticity
//! diagnostics. Fixed steps keep runs deterministic and make the integrator
//! order directly verifiable by step halving.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{fro_norm, inner, norm_sq};
use crate::parameter::{HamiltonianFamily, ParameterPoint, Path};
use crate::spectral::{
    best_overlap_index, eig_full_with, largest_im_flag, track_band_points, BandSelector,
    SpectralOptions,
};
use crate::{CMatrix, CVector};

const INTENSITY_GUARD: f64 = 1e300;
const STABILITY_BOUND: f64 = 0.1;

/// How the path fraction advances in time.
#[derive(Clone)]
pub enum SpeedProfile {
    /// Uniform in arc length: fraction = t / T.
    Constant,
    /// Explicit map from time to path fraction in [0, 1].
    Explicit(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for SpeedProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant => write!(f, "Constant"),
            Self::Explicit(_) => write!(f, "Explicit(..)"),
        }
    }
}

/// A path together with its traversal time `λ(t)` on `[0, T]`.
#[derive(Debug, Clone)]
pub struct Schedule {
    pub path: Path,
    pub total_time: f64,
    pub profile: SpeedProfile,
}

impl Schedule {
    pub fn new(path: Path, total_time: f64, profile: SpeedProfile) -> Result<Self> {
        if !(total_time.is_finite() && total_time > 0.0) {
            return Err(Error::InvalidInput("total_time must be positive".into()));
        }
        Ok(Self {
            path,
            total_time,
            profile,
        })
    }

    pub fn constant(path: Path, total_time: f64) -> Result<Self> {
        Self::new(path, total_time, SpeedProfile::Constant)
    }

    pub fn position(&self, t: f64) -> ParameterPoint {
        let fraction = match &self.profile {
            SpeedProfile::Constant => t / self.total_time,
            SpeedProfile::Explicit(f) => f(t),
        };
        self.path.at(fraction)
    }

    /// The inverse process λ(T − t).
    pub fn reversed(&self) -> Self {
        match &self.profile {
            SpeedProfile::Constant => Self {
                path: self.path.reversed(),
                total_time: self.total_time,
                profile: SpeedProfile::Constant,
            },
            SpeedProfile::Explicit(f) => {
                let f = f.clone();
                let total = self.total_time;
                Self {
                    path: self.path.clone(),
                    total_time: total,
                    profile: SpeedProfile::Explicit(Arc::new(move |t| f(total - t))),
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub schedule: Schedule,
    pub dt: f64,
    pub initial_band: BandSelector,
    pub initial_intensity: f64,
    /// Diagnostics (intensity, overlap, flags, spectra) are recorded every
    /// this many steps; the initial and final states are always recorded.
    pub record_stride: usize,
    pub record_spectra: bool,
    pub record_states: bool,
    pub spectral: SpectralOptions,
}

impl SimulationConfig {
    pub fn new(schedule: Schedule, dt: f64, initial_band: BandSelector) -> Self {
        Self {
            schedule,
            dt,
            initial_band,
            initial_intensity: 1.0,
            record_stride: 1,
            record_spectra: false,
            record_states: false,
            spectral: SpectralOptions::default(),
        }
    }

    /// Config with `dt = T/2^k` for the smallest `k` satisfying the stability
    /// guard `dt · max|H| <= 0.1`.
    pub fn with_auto_dt(
        family: &HamiltonianFamily,
        schedule: Schedule,
        initial_band: BandSelector,
    ) -> Self {
        let dt = auto_dt(family, &schedule);
        Self::new(schedule, dt, initial_band)
    }
}

/// Largest Frobenius norm of `H(λ(t))` over a uniform time sample.
pub fn max_hamiltonian_norm(family: &HamiltonianFamily, schedule: &Schedule) -> f64 {
    let n = 129;
    (0..n)
        .map(|k| {
            let t = schedule.total_time * k as f64 / (n - 1) as f64;
            fro_norm(&family.eval(&schedule.position(t)))
        })
        .fold(0.0f64, f64::max)
}

pub fn auto_dt(family: &HamiltonianFamily, schedule: &Schedule) -> f64 {
    let h_norm = max_hamiltonian_norm(family, schedule);
    let mut dt = schedule.total_time;
    while dt * h_norm > STABILITY_BOUND {
        dt *= 0.5;
    }
    dt
}

/// Time series produced by [`integrate`]. All recorded intensities are
/// strictly positive and times strictly increasing.
#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub times: Vec<f64>,
    pub intensities: Vec<f64>,
    /// Fidelity `|<R_inst|ψ>|² / (<R_inst|R_inst> <ψ|ψ>)` against the tracked
    /// instantaneous right eigenstate.
    pub instantaneous_overlap: Vec<f64>,
    /// Largest-imaginary-part condition for the tracked band, per record.
    pub adiabatic_flags: Vec<bool>,
    pub tracked_eigenvalues: Vec<C64>,
    /// Full instantaneous spectra, if requested.
    pub spectra: Option<Vec<Vec<C64>>>,
    /// State snapshots, if requested.
    pub states: Option<Vec<CVector>>,
}

impl SimulationResult {
    /// Final over initial intensity `I(T)/I(0)`.
    pub fn amplification(&self) -> f64 {
        self.intensities.last().unwrap() / self.intensities[0]
    }

    pub fn adiabatic_fraction(&self) -> f64 {
        let good = self.adiabatic_flags.iter().filter(|&&f| f).count();
        good as f64 / self.adiabatic_flags.len() as f64
    }

    pub fn first_flag_false_time(&self) -> Option<f64> {
        self.adiabatic_flags
            .iter()
            .position(|&f| !f)
            .map(|i| self.times[i])
    }

    pub fn min_overlap(&self) -> f64 {
        self.instantaneous_overlap
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b))
    }
}

/// Adiabatic amplification factor of a finished run.
pub fn amplification(result: &SimulationResult) -> f64 {
    result.amplification()
}

/// Integrate the Schrödinger equation from the selected right eigenstate at
/// `λ(0)`, with `H` evaluated at the RK4 substage times.
pub fn integrate(family: &HamiltonianFamily, config: &SimulationConfig) -> Result<SimulationResult> {
    let total = config.schedule.total_time;
    if !(config.dt.is_finite() && config.dt > 0.0 && config.dt <= total) {
        return Err(Error::InvalidInput(
            "dt must be positive and no larger than the total time".into(),
        ));
    }
    if !(config.initial_intensity.is_finite() && config.initial_intensity > 0.0) {
        return Err(Error::InvalidInput(
            "initial intensity must be positive".into(),
        ));
    }
    if config.record_stride == 0 {
        return Err(Error::InvalidInput("record_stride must be >= 1".into()));
    }
    let h_norm = max_hamiltonian_norm(family, &config.schedule);
    if config.dt * h_norm > STABILITY_BOUND * (1.0 + 1e-12) {
        return Err(Error::StepTooLarge(config.dt * h_norm));
    }

    let n_steps = (total / config.dt).ceil().max(1.0) as usize;
    let dt = total / n_steps as f64;

    let start_sys = eig_full_with(&family.eval(&config.schedule.position(0.0)), &config.spectral)?;
    let start_idx = config.initial_band.pick(&start_sys)?;
    let scale = (config.initial_intensity / norm_sq(&start_sys.pairs[start_idx].right)).sqrt();
    let mut psi = start_sys.pairs[start_idx].right.mapv(|z| z * scale);

    let mut result = SimulationResult {
        times: Vec::new(),
        intensities: Vec::new(),
        instantaneous_overlap: Vec::new(),
        adiabatic_flags: Vec::new(),
        tracked_eigenvalues: Vec::new(),
        spectra: config.record_spectra.then(Vec::new),
        states: config.record_states.then(Vec::new),
    };
    let mut tracked_right = start_sys.pairs[start_idx].right.clone();
    record(
        family,
        config,
        0.0,
        &psi,
        &mut tracked_right,
        &mut result,
    )?;

    let mut h_next = family.eval(&config.schedule.position(0.0));
    for step in 0..n_steps {
        let t = step as f64 * dt;
        let h0 = h_next;
        let h_mid = family.eval(&config.schedule.position(t + 0.5 * dt));
        h_next = family.eval(&config.schedule.position(t + dt));
        psi = rk4_step(&psi, dt, &h0, &h_mid, &h_next);
        let intensity = norm_sq(&psi);
        if !intensity.is_finite() || intensity > INTENSITY_GUARD {
            return Err(Error::Unstable(intensity));
        }
        let step_done = step + 1;
        if step_done % config.record_stride == 0 || step_done == n_steps {
            record(
                family,
                config,
                step_done as f64 * dt,
                &psi,
                &mut tracked_right,
                &mut result,
            )?;
        }
    }
    Ok(result)
}

fn rk4_step(psi: &CVector, dt: f64, h0: &CMatrix, h_mid: &CMatrix, h1: &CMatrix) -> CVector {
    let minus_i = C64::new(0.0, -1.0);
    let k1 = h0.dot(psi).mapv(|z| z * minus_i);
    let k2 = h_mid
        .dot(&(psi + &k1.mapv(|z| z * (0.5 * dt))))
        .mapv(|z| z * minus_i);
    let k3 = h_mid
        .dot(&(psi + &k2.mapv(|z| z * (0.5 * dt))))
        .mapv(|z| z * minus_i);
    let k4 = h1.dot(&(psi + &k3.mapv(|z| z * dt))).mapv(|z| z * minus_i);
    psi + &(k1 + k2.mapv(|z| z * 2.0) + k3.mapv(|z| z * 2.0) + k4).mapv(|z| z * (dt / 6.0))
}

fn record(
    family: &HamiltonianFamily,
    config: &SimulationConfig,
    t: f64,
    psi: &CVector,
    tracked_right: &mut CVector,
    result: &mut SimulationResult,
) -> Result<()> {
    let sys = eig_full_with(&family.eval(&config.schedule.position(t)), &config.spectral)?;
    let (idx, _) = best_overlap_index(tracked_right, &sys);
    let pair = &sys.pairs[idx];
    *tracked_right = pair.right.clone();
    let intensity = norm_sq(psi);
    let fidelity = inner(&pair.right, psi).norm_sqr() / (norm_sq(&pair.right) * intensity);
    let evs = sys.eigenvalues();
    result.times.push(t);
    result.intensities.push(intensity);
    result.instantaneous_overlap.push(fidelity);
    result.adiabatic_flags.push(largest_im_flag(&evs, idx));
    result.tracked_eigenvalues.push(pair.eigenvalue);
    if let Some(spectra) = result.spectra.as_mut() {
        spectra.push(evs);
    }
    if let Some(states) = result.states.as_mut() {
        states.push(psi.clone());
    }
    Ok(())
}

/// Isolate the geometric amplification factor as
/// `sqrt(Amp_forward / Amp_reverse)`: the dynamical exponential of `Im E`
/// cancels between the process and its inverse.
pub fn geometric_via_reverse(family: &HamiltonianFamily, config: &SimulationConfig) -> Result<f64> {
    let forward = integrate(family, config)?;
    let mut reverse_config = config.clone();
    reverse_config.schedule = config.schedule.reversed();
    let reverse = integrate(family, &reverse_config)?;
    for run in [&forward, &reverse] {
        let fraction = run.adiabatic_fraction();
        if fraction < 0.99 {
            return Err(Error::NotAdiabatic(100.0 * fraction));
        }
    }
    Ok((forward.amplification() / reverse.amplification()).sqrt())
}

#[derive(Debug, Clone)]
pub struct AdiabaticityReport {
    pub times: Vec<f64>,
    /// Largest-imaginary-part condition per sample.
    pub flags: Vec<bool>,
    /// Smallest gap between the tracked eigenvalue and the rest of the
    /// spectrum along the path.
    pub min_band_gap: f64,
    /// Heuristic slowness metric `min_gap · T / path length`; a diagnostic,
    /// not a guarantee.
    pub slowness: f64,
    pub first_false_time: Option<f64>,
}

pub fn adiabaticity_report(
    family: &HamiltonianFamily,
    schedule: &Schedule,
    band: &BandSelector,
) -> Result<AdiabaticityReport> {
    let n = schedule.path.n_steps().max(2);
    let times: Vec<f64> = (0..n)
        .map(|k| schedule.total_time * k as f64 / (n - 1) as f64)
        .collect();
    let points: Vec<ParameterPoint> = times.iter().map(|&t| schedule.position(t)).collect();
    let tracked = track_band_points(family, &points, band, &SpectralOptions::default())?;
    let flags = tracked.largest_im_flags.clone();
    let first_false_time = flags.iter().position(|&f| !f).map(|i| times[i]);
    let length = schedule.path.length();
    let min_band_gap = tracked.min_band_gap;
    Ok(AdiabaticityReport {
        times,
        flags,
        min_band_gap,
        slowness: min_band_gap * schedule.total_time / length.max(f64::MIN_POSITIVE),
        first_false_time,
    })
}
