//! Gaussian microwave π pulse between the two hyperfine states.
//!
//! Frequencies are in `E_R/ħ` and times in `ħ/E_R`. The rotating-frame
//! Hamiltonian is `[[0, Ω(t)/2], [Ω(t)/2, −Δ]]` with
//! `Ω(t) = Ω₀ exp(−ω₀² t²)` on `[−t_f, t_f]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::SuperlatticeConfig;
use crate::numerics::{integrate_ode, linspace, quadrature, OdeProblem};
use crate::stark::{scattering_rates, FieldAtAtom, TransitionSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPulse {
    /// `Ω₀`
    pub peak_rabi: f64,
    /// `ω₀`
    pub envelope_width: f64,
    /// `t_f`; the pulse is on for `[−t_f, t_f]`.
    pub cutoff: f64,
    pub detuning: f64,
}

impl GaussianPulse {
    /// π pulse with `ω₀ = δ/4` and `t_f = 5/ω₀` for a site detuning `δ`.
    pub fn for_site_detuning(delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::Domain(format!("site detuning must be positive, got {delta}")));
        }
        Self::pi_pulse(delta / 4.0, 5.0 / (delta / 4.0))
    }

    /// Resonant π pulse for the given envelope width and cutoff.
    pub fn pi_pulse(envelope_width: f64, cutoff: f64) -> Result<Self> {
        let pulse = Self {
            peak_rabi: pi_pulse_amplitude(envelope_width, cutoff)?,
            envelope_width,
            cutoff,
            detuning: 0.0,
        };
        Ok(pulse)
    }

    pub fn with_detuning(self, detuning: f64) -> Self {
        Self { detuning, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.peak_rabi > 0.0) || !(self.envelope_width > 0.0) {
            return Err(Error::Domain("pulse amplitude and width must be positive".into()));
        }
        if !(self.cutoff * self.envelope_width >= 3.0 - 1e-12) {
            return Err(Error::Domain(format!(
                "cutoff {} truncates the envelope (need t_f ≥ 3/ω₀)",
                self.cutoff
            )));
        }
        if !self.detuning.is_finite() {
            return Err(Error::Domain("detuning must be finite".into()));
        }
        Ok(())
    }

    pub fn rabi(&self, t: f64) -> f64 {
        if t.abs() > self.cutoff {
            0.0
        } else {
            self.peak_rabi * (-(self.envelope_width * t).powi(2)).exp()
        }
    }

    /// `2 t_f`
    pub fn length(&self) -> f64 {
        2.0 * self.cutoff
    }
}

/// `Ω₀ = π / ∫_{−t_f}^{t_f} exp(−ω₀² t²) dt`
pub fn pi_pulse_amplitude(envelope_width: f64, cutoff: f64) -> Result<f64> {
    if !(envelope_width > 0.0) {
        return Err(Error::Domain(format!(
            "envelope width must be positive, got {envelope_width}"
        )));
    }
    if !(cutoff * envelope_width >= 3.0 - 1e-12) {
        return Err(Error::Domain(format!("cutoff {cutoff} is shorter than 3/ω₀")));
    }
    let area = quadrature(|t| (-(envelope_width * t).powi(2)).exp(), -cutoff, cutoff, 1e-14)?;
    Ok(std::f64::consts::PI / area)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoLevelOutcome {
    pub p_flip: f64,
    pub p_stay: f64,
    #[serde(serialize_with = "serialize_pair")]
    pub final_amplitudes: [Complex64; 2],
    pub max_norm_error: f64,
}

fn serialize_pair<S: serde::Serializer>(pair: &[Complex64; 2], s: S) -> std::result::Result<S::Ok, S::Error> {
    [[pair[0].re, pair[0].im], [pair[1].re, pair[1].im]].serialize(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplitudeSample {
    pub t: f64,
    pub c0_re: f64,
    pub c0_im: f64,
    pub c1_re: f64,
    pub c1_im: f64,
}

pub const RABI_REL_TOL: f64 = 1e-10;
pub const RABI_ABS_TOL: f64 = 1e-13;

/// Evolves `|0⟩` from `−t_f` to `t_f` and records `sample_count` amplitudes.
pub fn rabi_trajectory(pulse: &GaussianPulse, sample_count: usize) -> Result<(TwoLevelOutcome, Vec<AmplitudeSample>)> {
    pulse.validate()?;
    let p = *pulse;
    let rhs = move |t: f64, y: &[f64], dy: &mut [f64]| {
        // i ċ₀ = (Ω/2) c₁,  i ċ₁ = (Ω/2) c₀ − Δ c₁
        let half = 0.5 * p.rabi(t);
        let c0 = Complex64::new(y[0], y[1]);
        let c1 = Complex64::new(y[2], y[3]);
        let minus_i = Complex64::new(0.0, -1.0);
        let d0 = minus_i * (half * c1);
        let d1 = minus_i * (half * c0 - p.detuning * c1);
        dy[0] = d0.re;
        dy[1] = d0.im;
        dy[2] = d1.re;
        dy[3] = d1.im;
    };
    // Resolve the detuning oscillation and the envelope.
    let max_step = (0.5 / pulse.detuning.abs().max(pulse.envelope_width)).min(pulse.cutoff / 20.0);
    let problem = OdeProblem::new(rhs, vec![1.0, 0.0, 0.0, 0.0], -pulse.cutoff, pulse.cutoff)
        .tolerances(RABI_REL_TOL, RABI_ABS_TOL)
        .max_step(max_step);
    let samples = linspace(-pulse.cutoff, pulse.cutoff, sample_count.max(2));
    let traj = integrate_ode(&problem, &samples)?;
    let mut max_norm_error: f64 = 0.0;
    let rows = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&t, s)| {
            let norm = s.iter().map(|x| x * x).sum::<f64>();
            max_norm_error = max_norm_error.max((norm - 1.0).abs());
            AmplitudeSample {
                t,
                c0_re: s[0],
                c0_im: s[1],
                c1_re: s[2],
                c1_im: s[3],
            }
        })
        .collect();
    let f = &traj.final_state;
    let c0 = Complex64::new(f[0], f[1]);
    let c1 = Complex64::new(f[2], f[3]);
    Ok((
        TwoLevelOutcome {
            p_flip: c1.norm_sqr(),
            p_stay: c0.norm_sqr(),
            final_amplitudes: [c0, c1],
            max_norm_error,
        },
        rows,
    ))
}

pub fn rabi_evolve(pulse: &GaussianPulse) -> Result<TwoLevelOutcome> {
    rabi_trajectory(pulse, 2).map(|(outcome, _)| outcome)
}

/// Trapezoidal LPOL intensity timeline around the microwave pulse, in s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntensitySchedule {
    pub ramp_up: f64,
    pub hold: f64,
    pub ramp_down: f64,
}

impl IntensitySchedule {
    pub fn total(&self) -> f64 {
        self.ramp_up + self.hold + self.ramp_down
    }

    /// Fraction of the peak intensity at time `t`.
    pub fn fraction(&self, t: f64) -> f64 {
        if t <= 0.0 || t >= self.total() {
            0.0
        } else if t < self.ramp_up {
            t / self.ramp_up
        } else if t <= self.ramp_up + self.hold {
            1.0
        } else {
            (self.total() - t) / self.ramp_down
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            ramp_up: self.ramp_up * factor,
            hold: self.hold * factor,
            ramp_down: self.ramp_down * factor,
        }
    }
}

/// `P = ∫ max(γ₀, γ₁) dt` for an atom at an LPOL antinode, whose peak
/// intensity is `lattice.lpol_intensity`.
pub fn step2_scattering_probability(lattice: &SuperlatticeConfig, schedule: &IntensitySchedule) -> Result<f64> {
    lattice.validate()?;
    if schedule.ramp_up < 0.0 || schedule.hold < 0.0 || schedule.ramp_down < 0.0 {
        return Err(Error::Domain("schedule segments must be non-negative".into()));
    }
    let transitions = TransitionSet::from_species(&lattice.species);
    let field = FieldAtAtom {
        intensity: lattice.lpol_intensity,
        wavelength: lattice.lpol_wavelength,
        polarization: lattice.polarization,
    };
    let (g0, g1) = scattering_rates(&field, &transitions, &lattice.composition)?;
    let peak_rate = g0.max(g1);
    if peak_rate == 0.0 {
        return Ok(0.0);
    }
    let knots = [
        0.0,
        schedule.ramp_up,
        schedule.ramp_up + schedule.hold,
        schedule.total(),
    ];
    let mut total = 0.0;
    for w in knots.windows(2) {
        total += quadrature(|t| peak_rate * schedule.fraction(t), w[0], w[1], 1e-13)?;
    }
    Ok(total)
}
