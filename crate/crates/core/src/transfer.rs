//! Lattice → microtrap handoff.
//!
//! The target atom sits in an effective harmonic well of angular frequency
//! `ϖ(t)`. Parity forbids coupling the ground state to the first excited
//! state, so the relevant gap is `2ϖ` with `⟨φ_e|∂H/∂ϖ|φ_g⟩ = 1/√2` (ħ = 1).
//! A schedule holding `|dϖ/dt| = 4√2 ξ ϖ²` keeps the adiabaticity constant.
//!
//! All quantities are in lattice units (energy `E_R`, time `ħ/E_R`, length `λ_s`).

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{eigh_small, integrate_ode, linspace, OdeProblem, SymmetricMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Final frequency above the initial one.
    #[default]
    Deepen,
    /// Final frequency below the initial one.
    Shallow,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Deepen => -1.0,
            Direction::Shallow => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicRamp {
    pub initial_frequency: f64,
    pub adiabaticity: f64,
    pub direction: Direction,
    pub final_frequency: f64,
}

impl HarmonicRamp {
    pub fn new(initial_frequency: f64, ratio: f64, adiabaticity: f64, direction: Direction) -> Result<Self> {
        let ramp = Self {
            initial_frequency,
            adiabaticity,
            direction,
            final_frequency: initial_frequency * ratio,
        };
        ramp.validate()?;
        Ok(ramp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.initial_frequency > 0.0) || !(self.final_frequency > 0.0) {
            return Err(Error::Domain("ramp frequencies must be positive".into()));
        }
        if !(0.0..0.1).contains(&self.adiabaticity) {
            return Err(Error::Domain(format!(
                "adiabaticity must lie in [0, 0.1), got {}",
                self.adiabaticity
            )));
        }
        let consistent = match self.direction {
            Direction::Deepen => self.final_frequency >= self.initial_frequency,
            Direction::Shallow => self.final_frequency <= self.initial_frequency,
        };
        if !consistent {
            return Err(Error::Domain(format!(
                "{:?} ramp cannot go from {} to {}",
                self.direction, self.initial_frequency, self.final_frequency
            )));
        }
        Ok(())
    }

    /// `4√2 ξ ϖ(0)`
    fn rate(&self) -> f64 {
        4.0 * SQRT_2 * self.adiabaticity * self.initial_frequency
    }

    fn denominator(&self, t: f64) -> f64 {
        1.0 + self.direction.sign() * self.rate() * t
    }

    pub fn duration(&self) -> Result<f64> {
        transfer_time(
            self.initial_frequency,
            self.final_frequency,
            self.adiabaticity,
            self.direction,
        )
    }
}

/// `ϖ(0) = 2 √V_L` in `E_R/ħ`.
pub fn initial_frequency(lattice_depth: f64) -> Result<f64> {
    if !(lattice_depth > 0.0) {
        return Err(Error::Domain(format!(
            "lattice depth must be positive, got {lattice_depth}"
        )));
    }
    Ok(2.0 * lattice_depth.sqrt())
}

/// Atomic mass in lattice units (`E_R = ħ²k²/2m` with `k = 2π/λ_s`).
fn lattice_mass() -> f64 {
    2.0 * PI * PI
}

/// Harmonic frequency of the combined microtrap + lattice well,
/// `√((4V_f/w² + 2V_L k²)/m)`. `waist` in units of `λ_s`.
pub fn combined_frequency(microtrap_depth: f64, lattice_depth: f64, waist: f64) -> f64 {
    let k = 2.0 * PI;
    ((4.0 * microtrap_depth / (waist * waist) + 2.0 * lattice_depth * k * k) / lattice_mass()).sqrt()
}

/// Microtrap depth whose harmonic frequency equals that of the lattice:
/// `V_f = V_L k² w² / 2`. `waist` in units of `λ_s`.
pub fn matched_microtrap_depth(lattice_depth: f64, waist: f64) -> Result<f64> {
    if !(waist >= 0.0) {
        return Err(Error::Domain(format!("waist must be non-negative, got {waist}")));
    }
    let k = 2.0 * PI;
    Ok(lattice_depth * k * k * waist * waist / 2.0)
}

/// Closed-form constant-adiabaticity schedule `ϖ(0)/(1 ∓ 4√2 ξ ϖ(0) t)`.
pub fn ramp_schedule(ramp: &HarmonicRamp, t: f64) -> Result<f64> {
    let den = ramp.denominator(t);
    if t < 0.0 || !(den > 0.0) {
        return Err(Error::Domain(format!("t = {t} is outside the ramp's domain")));
    }
    Ok(ramp.initial_frequency / den)
}

/// `dϖ/dt` of the closed-form schedule.
pub fn ramp_rate(ramp: &HarmonicRamp, t: f64) -> Result<f64> {
    let den = ramp.denominator(t);
    if t < 0.0 || !(den > 0.0) {
        return Err(Error::Domain(format!("t = {t} is outside the ramp's domain")));
    }
    Ok(-ramp.direction.sign() * ramp.rate() * ramp.initial_frequency / (den * den))
}

/// Residual of the adiabatic condition `|dϖ/dt| − ξ (2ϖ)² / (1/√2)`,
/// relative to `|dϖ/dt|`.
pub fn adiabatic_residual(ramp: &HarmonicRamp, t: f64) -> Result<f64> {
    let w = ramp_schedule(ramp, t)?;
    let rate = ramp_rate(ramp, t)?.abs();
    let required = ramp.adiabaticity * (2.0 * w).powi(2) / (1.0 / SQRT_2);
    Ok(if rate > 0.0 { (rate - required) / rate } else { required })
}

/// Occupation of the second excited state under the first-order adiabatic
/// solution, `4ξ² sin²(ln(1 ∓ 4√2ξϖ(0)t) / 4√2ξ)`.
pub fn excitation_analytic(ramp: &HarmonicRamp, t: f64) -> Result<f64> {
    let den = ramp.denominator(t);
    if t < 0.0 || !(den > 0.0) {
        return Err(Error::Domain(format!("t = {t} is outside the ramp's domain")));
    }
    let xi = ramp.adiabaticity;
    if xi == 0.0 {
        return Ok(0.0);
    }
    let phase = den.ln() / (4.0 * SQRT_2 * xi);
    Ok(4.0 * xi * xi * phase.sin().powi(2))
}

/// Upper envelope `4ξ²` of the analytic excitation.
pub fn excitation_ceiling(adiabaticity: f64) -> f64 {
    4.0 * adiabaticity * adiabaticity
}

/// `T = |1 − ϖ(0)/ϖ(T)| / (4√2 ξ ϖ(0))`.
pub fn transfer_time(initial: f64, final_frequency: f64, adiabaticity: f64, direction: Direction) -> Result<f64> {
    if !(initial > 0.0) || !(final_frequency > 0.0) {
        return Err(Error::Domain("frequencies must be positive".into()));
    }
    let ratio = initial / final_frequency;
    match direction {
        Direction::Deepen if ratio > 1.0 => return Err(Error::Domain("deepen ramp needs ϖ(T) ≥ ϖ(0)".into())),
        Direction::Shallow if ratio < 1.0 => return Err(Error::Domain("shallow ramp needs ϖ(T) ≤ ϖ(0)".into())),
        _ => {}
    }
    if ratio == 1.0 {
        return Ok(0.0);
    }
    if !(adiabaticity > 0.0) {
        return Err(Error::Domain("a finite ramp needs ξ > 0".into()));
    }
    Ok((1.0 - ratio).abs() / (4.0 * SQRT_2 * adiabaticity * initial))
}

/// One sample of the ground / second-excited two-state evolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExcitationSample {
    pub t: f64,
    pub omega: f64,
    pub p_excited: f64,
    /// `|c_g|² + |c_e|² − 1`
    pub norm_error: f64,
}

/// Integrates the two-state adiabatic-frame equations
///
/// ```text
/// i d/dt (c_g, c_e) = [[ϖ/2, iϰ], [−iϰ, 5ϖ/2]] (c_g, c_e),   ϰ = (dϖ/dt) / (2√2 ϖ)
/// ```
///
/// for an arbitrary schedule `t ↦ (ϖ, dϖ/dt)`, starting from `c_g = 1` (or
/// from `initial` when given). `ϰ` equals `ξ ΔE_g` with the local
/// adiabaticity `ξ = |dϖ/dt| / (4√2 ϖ²)`.
pub fn evolve_two_state<S>(
    schedule: S,
    t0: f64,
    t1: f64,
    samples: &[f64],
    initial: Option<[Complex64; 2]>,
    rel_tol: f64,
) -> Result<(Vec<ExcitationSample>, [Complex64; 2])>
where
    S: Fn(f64) -> (f64, f64),
{
    let [g, e] = initial.unwrap_or([Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let (w, wdot) = schedule(t);
        let kappa = Complex64::new(0.0, wdot / (2.0 * SQRT_2 * w));
        let cg = Complex64::new(y[0], y[1]);
        let ce = Complex64::new(y[2], y[3]);
        let minus_i = Complex64::new(0.0, -1.0);
        let dg = minus_i * (0.5 * w * cg + kappa * ce);
        let de = minus_i * (kappa.conj() * cg + 2.5 * w * ce);
        dy[0] = dg.re;
        dy[1] = dg.im;
        dy[2] = de.re;
        dy[3] = de.im;
    };
    let problem = OdeProblem::new(rhs, vec![g.re, g.im, e.re, e.im], t0, t1).tolerances(rel_tol, rel_tol * 1e-2);
    let traj = integrate_ode(&problem, samples)?;
    let out = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&t, s)| {
            let pg = s[0] * s[0] + s[1] * s[1];
            let pe = s[2] * s[2] + s[3] * s[3];
            ExcitationSample {
                t,
                omega: schedule(t).0,
                p_excited: pe,
                norm_error: pg + pe - 1.0,
            }
        })
        .collect();
    let f = &traj.final_state;
    Ok((out, [Complex64::new(f[0], f[1]), Complex64::new(f[2], f[3])]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: f64,
    pub omega: f64,
    pub pe_analytic: f64,
    pub pe_numeric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferResult {
    pub duration: f64,
    pub max_excitation: f64,
    pub max_excitation_analytic: f64,
    pub excitation_trace: Vec<TraceRow>,
    /// `sup_t |P_e,numeric − P_e,analytic|`
    pub analytic_numeric_gap: f64,
    pub max_norm_error: f64,
}

pub const TRANSFER_REL_TOL: f64 = 1e-11;

/// Numerical solution of the two-state system along the closed-form ramp,
/// sampled at `sample_count` uniform times.
///
/// A frozen ramp (`ξ = 0`) has no finite duration; it is evolved over ten
/// oscillation periods instead.
pub fn excitation_numeric(ramp: &HarmonicRamp, sample_count: usize) -> Result<TransferResult> {
    ramp.validate()?;
    let duration = if ramp.adiabaticity == 0.0 {
        10.0 * 2.0 * PI / ramp.initial_frequency
    } else {
        ramp.duration()?
    };
    if duration == 0.0 {
        return Ok(TransferResult {
            duration,
            max_excitation: 0.0,
            max_excitation_analytic: 0.0,
            excitation_trace: vec![TraceRow {
                t: 0.0,
                omega: ramp.initial_frequency,
                pe_analytic: 0.0,
                pe_numeric: 0.0,
            }],
            analytic_numeric_gap: 0.0,
            max_norm_error: 0.0,
        });
    }
    let samples = linspace(0.0, duration, sample_count.max(2));
    let schedule = |t: f64| {
        let t = t.min(duration);
        (
            ramp_schedule(ramp, t).unwrap_or(ramp.final_frequency),
            ramp_rate(ramp, t).unwrap_or(0.0),
        )
    };
    let (trace, _) = evolve_two_state(schedule, 0.0, duration, &samples, None, TRANSFER_REL_TOL)?;

    let mut rows = Vec::with_capacity(trace.len());
    let (mut max_n, mut max_a, mut gap, mut norm): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for s in &trace {
        let pa = excitation_analytic(ramp, s.t)?;
        max_n = max_n.max(s.p_excited);
        max_a = max_a.max(pa);
        gap = gap.max((s.p_excited - pa).abs());
        norm = norm.max(s.norm_error.abs());
        rows.push(TraceRow {
            t: s.t,
            omega: s.omega,
            pe_analytic: pa,
            pe_numeric: s.p_excited,
        });
    }
    Ok(TransferResult {
        duration,
        max_excitation: max_n,
        max_excitation_analytic: max_a,
        excitation_trace: rows,
        analytic_numeric_gap: gap,
        max_norm_error: norm,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoppingEstimate {
    /// Tunneling matrix element `J` (quarter of the lowest bandwidth), `E_R`.
    pub tunneling: f64,
    /// `ħ/J` in `ħ/E_R`.
    pub time: f64,
    /// `(4/√π) V^{3/4} exp(−2√V)`, `E_R`.
    pub asymptotic_tunneling: f64,
    pub warning: Option<String>,
}

fn lowest_band_energy(depth: f64, quasi_momentum: f64, cutoff: i32) -> f64 {
    // V sin²(kx) = V/2 − (V/4)(e^{2ikx} + e^{−2ikx}); plane waves e^{i(q+2l)kx}
    let n = (2 * cutoff + 1) as usize;
    let m = SymmetricMatrix::from_fn(n, |i, j| {
        if i == j {
            let l = i as i32 - cutoff;
            (quasi_momentum + 2.0 * l as f64).powi(2) + depth / 2.0
        } else if j == i + 1 {
            -depth / 4.0
        } else {
            0.0
        }
    });
    eigh_small(&m).values[0]
}

/// Tunneling time of the 1-D lattice `V sin²(kx)` from its lowest Bloch band.
pub fn hopping_time(lattice_depth: f64) -> Result<HoppingEstimate> {
    if !(lattice_depth > 0.0) {
        return Err(Error::Domain(format!(
            "lattice depth must be positive, got {lattice_depth}"
        )));
    }
    let cutoff = 15;
    let bandwidth = lowest_band_energy(lattice_depth, 1.0, cutoff) - lowest_band_energy(lattice_depth, 0.0, cutoff);
    let tunneling = bandwidth / 4.0;
    let asymptotic = 4.0 / PI.sqrt() * lattice_depth.powf(0.75) * (-2.0 * lattice_depth.sqrt()).exp();
    let warning =
        (lattice_depth < 5.0).then(|| format!("depth {lattice_depth} E_R is below the tight-binding regime (5 E_R)"));
    Ok(HoppingEstimate {
        tunneling,
        time: 1.0 / tunneling,
        asymptotic_tunneling: asymptotic,
        warning,
    })
}
