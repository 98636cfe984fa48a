//! Resonant removal of non-target atoms.
//!
//! A two-level atom on the cycling transition is driven by the removing
//! laser and evolves under the optical Bloch equations. The number of
//! scattered photons is `∫ Γ ρ_ee dt`. Inputs are SI (rad/s, s); the
//! equations are integrated in units of `1/Γ`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{integrate_ode, linspace, solve_scalar, OdeProblem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObeParams {
    /// `Γ`, rad/s
    pub linewidth: f64,
    /// `Ω_L`, rad/s
    pub rabi_frequency: f64,
    /// Laser minus transition frequency, rad/s.
    pub detuning: f64,
    /// s
    pub duration: f64,
}

impl ObeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.linewidth >= 0.0) {
            return Err(Error::Domain(format!(
                "linewidth must be non-negative, got {}",
                self.linewidth
            )));
        }
        if !(self.duration >= 0.0) {
            return Err(Error::Domain(format!(
                "duration must be non-negative, got {}",
                self.duration
            )));
        }
        if !self.rabi_frequency.is_finite() || !self.detuning.is_finite() {
            return Err(Error::Domain("drive parameters must be finite".into()));
        }
        Ok(())
    }

    /// `s = 2Ω²/Γ²`
    pub fn saturation(&self) -> f64 {
        2.0 * (self.rabi_frequency / self.linewidth).powi(2)
    }

    /// Steady-state `ρ_ee = (s/2) / (1 + s + (2Δ/Γ)²)`.
    pub fn steady_state_excited(&self) -> f64 {
        let s = self.saturation();
        0.5 * s / (1.0 + s + (2.0 * self.detuning / self.linewidth).powi(2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlochState {
    pub population_excited: f64,
    pub population_ground: f64,
    /// `ρ_eg`
    #[serde(serialize_with = "serialize_complex")]
    pub coherence: Complex64,
}

fn serialize_complex<S: serde::Serializer>(c: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [c.re, c.im].serialize(s)
}

impl BlochState {
    /// From the Bloch vector `(u, v, w)` with `w = ρ_ee − ρ_gg`.
    fn from_bloch(u: f64, v: f64, w: f64) -> Self {
        Self {
            population_excited: 0.5 * (1.0 + w),
            population_ground: 0.5 * (1.0 - w),
            coherence: Complex64::new(0.5 * u, 0.5 * v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObeTrajectory {
    /// s
    pub times: Vec<f64>,
    pub states: Vec<BlochState>,
    /// Photons scattered up to each time.
    pub photons: Vec<f64>,
}

impl ObeTrajectory {
    pub fn total_photons(&self) -> f64 {
        self.photons.last().copied().unwrap_or(0.0)
    }
}

pub const OBE_REL_TOL: f64 = 1e-9;

/// Integrates from the ground state, sampling `sample_count` uniform times.
///
/// ```text
/// u̇ = Δv − (Γ/2)u
/// v̇ = −Δu − Ωw − (Γ/2)v
/// ẇ = Ωv − Γ(w + 1)
/// ṅ = Γ(1 + w)/2
/// ```
pub fn obe_evolve(params: &ObeParams, sample_count: usize) -> Result<ObeTrajectory> {
    params.validate()?;
    if params.duration == 0.0 {
        return Ok(ObeTrajectory {
            times: vec![0.0],
            states: vec![BlochState::from_bloch(0.0, 0.0, -1.0)],
            photons: vec![0.0],
        });
    }
    // Time unit 1/Γ when Γ > 0, otherwise 1/Ω.
    let scale = if params.linewidth > 0.0 {
        params.linewidth
    } else {
        params
            .rabi_frequency
            .abs()
            .max(params.detuning.abs())
            .max(1.0 / params.duration)
    };
    let gamma = params.linewidth / scale;
    let omega = params.rabi_frequency / scale;
    let delta = params.detuning / scale;
    let end = params.duration * scale;

    let rhs = move |_t: f64, y: &[f64], dy: &mut [f64]| {
        let (u, v, w) = (y[0], y[1], y[2]);
        dy[0] = delta * v - 0.5 * gamma * u;
        dy[1] = -delta * u - omega * w - 0.5 * gamma * v;
        dy[2] = omega * v - gamma * (w + 1.0);
        dy[3] = 0.5 * gamma * (1.0 + w);
    };
    let fastest = delta.abs().max(omega.abs()).max(gamma);
    let problem = OdeProblem::new(rhs, vec![0.0, 0.0, -1.0, 0.0], 0.0, end)
        .tolerances(OBE_REL_TOL, 1e-13)
        .max_step(0.5 / fastest);
    let samples = linspace(0.0, end, sample_count.max(2));
    let traj = integrate_ode(&problem, &samples)?;
    Ok(ObeTrajectory {
        times: traj.times.iter().map(|t| t / scale).collect(),
        states: traj
            .states
            .iter()
            .map(|s| BlochState::from_bloch(s[0], s[1], s[2]))
            .collect(),
        photons: traj.states.iter().map(|s| s[3]).collect(),
    })
}

/// `n_p = ∫ Γ ρ_ee dt` over the pulse.
pub fn photon_count(params: &ObeParams) -> Result<f64> {
    Ok(obe_evolve(params, 2)?.total_photons())
}

/// Photons needed to boil an atom out of a trap of depth `U₀` (in `E_R`):
/// each scattered photon deposits about two recoil energies.
pub fn removal_photon_threshold(trap_depth: f64) -> Result<f64> {
    if !(trap_depth >= 0.0) {
        return Err(Error::Domain(format!(
            "trap depth must be non-negative, got {trap_depth}"
        )));
    }
    Ok(trap_depth / 2.0)
}

/// Chance that a heated atom meets a neighbour before leaving:
/// `lifetime / tunneling_time`, clamped to `[0, 1]`.
pub fn collision_probability(hot_atom_lifetime: f64, tunneling_time: f64) -> Result<f64> {
    if !(hot_atom_lifetime >= 0.0) || !(tunneling_time > 0.0) {
        return Err(Error::Domain(
            "lifetime must be non-negative and tunneling time positive".into(),
        ));
    }
    Ok((hot_atom_lifetime / tunneling_time).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrivePolicy {
    /// Photons required within `target_duration`.
    pub target_photons: f64,
    /// s
    pub target_duration: f64,
    /// Multiple of the rate-limited minimum duration `n/(Γ/2)` used when the
    /// target duration is too short.
    pub extension_factor: f64,
}

impl Default for DrivePolicy {
    fn default() -> Self {
        Self {
            target_photons: 25.0,
            target_duration: 1e-6,
            extension_factor: 1.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DrivePlan {
    /// rad/s
    pub rabi_frequency: f64,
    /// s
    pub duration: f64,
    /// `n/(Γ/2)`, s
    pub minimum_duration: f64,
    pub target_duration_feasible: bool,
    pub saturation: f64,
}

/// Resonant drive strength that scatters `target_photons` within the
/// duration. Since a saturated atom scatters at most `Γ/2`, a duration at or
/// below `n/(Γ/2)` is replaced by `extension_factor · n/(Γ/2)`.
pub fn solve_drive(linewidth: f64, policy: &DrivePolicy) -> Result<DrivePlan> {
    if !(linewidth > 0.0) {
        return Err(Error::Domain(format!("linewidth must be positive, got {linewidth}")));
    }
    if !(policy.target_photons > 0.0) || !(policy.target_duration > 0.0) {
        return Err(Error::Domain("target photons and duration must be positive".into()));
    }
    if !(policy.extension_factor > 1.0) {
        return Err(Error::Domain(format!(
            "extension factor must exceed 1, got {}",
            policy.extension_factor
        )));
    }
    let minimum = policy.target_photons / (0.5 * linewidth);
    let extended = policy.extension_factor * minimum;
    let count = |rabi: f64, duration: f64| {
        photon_count(&ObeParams {
            linewidth,
            rabi_frequency: rabi,
            detuning: 0.0,
            duration,
        })
    };
    let strongest = 100.0 * linewidth;
    let feasible =
        policy.target_duration > minimum && count(strongest, policy.target_duration)? >= policy.target_photons;
    let duration = if feasible { policy.target_duration } else { extended };
    if !feasible && count(strongest, duration)? < policy.target_photons {
        return Err(Error::Infeasible(format!(
            "{} photons need more than {duration:e} s even at Ω = 100Γ",
            policy.target_photons
        )));
    }

    let residual = |rabi: f64| {
        count(rabi, duration)
            .map(|n| n - policy.target_photons)
            .unwrap_or(f64::NAN)
    };
    let rabi = solve_scalar(residual, (1e-3 * linewidth, strongest), 1e-9 * linewidth)?;
    Ok(DrivePlan {
        rabi_frequency: rabi,
        duration,
        minimum_duration: minimum,
        target_duration_feasible: feasible,
        saturation: 2.0 * (rabi / linewidth).powi(2),
    })
}
