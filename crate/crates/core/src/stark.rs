//! Far-detuned light shifts and photon scattering rates of the two ground
//! hyperfine qubit states, and the choice of the state-dependent lattice
//! wavelength.
//!
//! Each fine-structure ground state `|±⟩ = |S_1/2, m_j = ±1/2⟩` couples to the
//! D1 (`q = 1`) and D2 (`q = 2`) lines with weights `|c_{±q}|²`. The shift is
//!
//! ```text
//! δE_± = (3πc² I / 2) Σ_q Γ_q |c_{±q}|² / (ω_q³ Δ_q)
//! ```
//!
//! and the hyperfine qubit states are population mixtures of `|±⟩`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::minimize_scalar;
use crate::units::{angular_frequency, AtomSpecies, HBAR, NANOMETER, SPEED_OF_LIGHT};

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Polarization {
    #[default]
    SigmaPlus,
    SigmaMinus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldAtAtom {
    /// W/m²
    pub intensity: f64,
    /// m
    pub wavelength: f64,
    pub polarization: Polarization,
}

impl FieldAtAtom {
    pub fn sigma_plus(intensity: f64, wavelength: f64) -> Self {
        Self {
            intensity,
            wavelength,
            polarization: Polarization::SigmaPlus,
        }
    }

    pub fn with_intensity(self, intensity: f64) -> Self {
        Self { intensity, ..self }
    }
}

/// Two-line coupling data for the `|±⟩` ground states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionSet {
    /// `c_{+1}, c_{+2}` for σ⁺ light
    pub coeff_plus: [f64; 2],
    /// `c_{−1}, c_{−2}` for σ⁺ light
    pub coeff_minus: [f64; 2],
    /// `Γ_1, Γ_2` in rad/s
    pub gamma: [f64; 2],
    /// `ω_1, ω_2` in rad/s
    pub omega: [f64; 2],
}

impl TransitionSet {
    pub fn from_species(species: &AtomSpecies) -> Self {
        Self {
            coeff_plus: [0.0, 1.0],
            coeff_minus: [-(2.0f64 / 3.0).sqrt(), (1.0f64 / 3.0).sqrt()],
            gamma: [species.gamma1, species.gamma2],
            omega: [species.d1_frequency(), species.d2_frequency()],
        }
    }

    /// `Δ_q = ω_L − ω_q` for both lines.
    pub fn detunings(&self, wavelength: f64) -> [f64; 2] {
        let wl = angular_frequency(wavelength);
        [wl - self.omega[0], wl - self.omega[1]]
    }

    /// Coupling weights `(|c_{+q}|², |c_{−q}|²)` seen with the given
    /// polarization; σ⁻ mirrors the roles of `m_j = ±1/2`.
    fn weights(&self, pol: Polarization) -> ([f64; 2], [f64; 2]) {
        let sq = |c: [f64; 2]| [c[0] * c[0], c[1] * c[1]];
        match pol {
            Polarization::SigmaPlus => (sq(self.coeff_plus), sq(self.coeff_minus)),
            Polarization::SigmaMinus => (sq(self.coeff_minus), sq(self.coeff_plus)),
        }
    }

    /// `α_q = 3πc² Γ_q I / (2 ω_q³)` in J·s⁻¹.
    pub fn alphas(&self, intensity: f64) -> [f64; 2] {
        let pref = 3.0 * PI * SPEED_OF_LIGHT * SPEED_OF_LIGHT * intensity / 2.0;
        [
            pref * self.gamma[0] / self.omega[0].powi(3),
            pref * self.gamma[1] / self.omega[1].powi(3),
        ]
    }
}

/// Population weights `(w₋, w₊)` of the fine-structure states in each qubit state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperfineComposition {
    pub state0: [f64; 2],
    pub state1: [f64; 2],
}

impl Default for HyperfineComposition {
    /// `|0⟩ = |F=1, m=−1⟩`: ¼ of `|−⟩`, ¾ of `|+⟩`; `|1⟩ = |F=2, m=−2⟩` is pure `|−⟩`.
    fn default() -> Self {
        Self {
            state0: [0.25, 0.75],
            state1: [1.0, 0.0],
        }
    }
}

impl HyperfineComposition {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("state0", self.state0), ("state1", self.state1)] {
            if w.iter().any(|x| !(0.0..=1.0).contains(x)) || (w[0] + w[1] - 1.0).abs() > 1e-12 {
                return Err(Error::Domain(format!(
                    "hyperfine weights for {name} must lie in [0, 1] and sum to 1, got {w:?}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HyperfineShifts {
    pub delta_e0: f64,
    pub delta_e1: f64,
    /// `δE₁ − δE₀`
    pub delta_e_diff: f64,
}

/// Everything the lattice and budget modules need at one field configuration.
/// Energies in J, rates in s⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftReport {
    pub delta_e_plus: f64,
    pub delta_e_minus: f64,
    pub delta_e0: f64,
    pub delta_e1: f64,
    pub delta_e_diff: f64,
    pub gamma0: f64,
    pub gamma1: f64,
    /// `δE / (ħ max(γ₀, γ₁))`
    pub eta: f64,
}

fn checked_detunings(field: &FieldAtAtom, transitions: &TransitionSet) -> Result<[f64; 2]> {
    let d = transitions.detunings(field.wavelength);
    for (q, dq) in d.iter().enumerate() {
        if dq.abs() < 1e-9 * transitions.omega[q] || !dq.is_finite() {
            return Err(Error::Resonance(format!(
                "laser at {:.4} nm is resonant with line {}",
                field.wavelength / NANOMETER,
                q + 1
            )));
        }
    }
    Ok(d)
}

/// `(δE₊, δE₋)` in joules.
pub fn fine_structure_shifts(field: &FieldAtAtom, transitions: &TransitionSet) -> Result<(f64, f64)> {
    let d = checked_detunings(field, transitions)?;
    let alpha = transitions.alphas(field.intensity);
    let (wp, wm) = transitions.weights(field.polarization);
    let plus = (0..2).map(|q| alpha[q] * wp[q] / d[q]).sum();
    let minus = (0..2).map(|q| alpha[q] * wm[q] / d[q]).sum();
    Ok((plus, minus))
}

pub fn hyperfine_shifts(delta_e_plus: f64, delta_e_minus: f64, composition: &HyperfineComposition) -> HyperfineShifts {
    let mix = |w: [f64; 2]| w[0] * delta_e_minus + w[1] * delta_e_plus;
    let delta_e0 = mix(composition.state0);
    let delta_e1 = mix(composition.state1);
    HyperfineShifts {
        delta_e0,
        delta_e1,
        delta_e_diff: delta_e1 - delta_e0,
    }
}

/// Photon scattering rates `(γ₀, γ₁)` in s⁻¹.
pub fn scattering_rates(
    field: &FieldAtAtom,
    transitions: &TransitionSet,
    composition: &HyperfineComposition,
) -> Result<(f64, f64)> {
    let d = checked_detunings(field, transitions)?;
    let alpha = transitions.alphas(field.intensity);
    let (wp, wm) = transitions.weights(field.polarization);
    let term = |w: [f64; 2]| -> f64 {
        (0..2)
            .map(|q| alpha[q] * w[q] * transitions.gamma[q] / (HBAR * d[q] * d[q]))
            .sum()
    };
    let rate_plus = term(wp);
    let rate_minus = term(wm);
    let mix = |w: [f64; 2]| w[0] * rate_minus + w[1] * rate_plus;
    Ok((mix(composition.state0), mix(composition.state1)))
}

pub fn shift_report(
    field: &FieldAtAtom,
    transitions: &TransitionSet,
    composition: &HyperfineComposition,
) -> Result<ShiftReport> {
    let (plus, minus) = fine_structure_shifts(field, transitions)?;
    let hf = hyperfine_shifts(plus, minus, composition);
    let (gamma0, gamma1) = scattering_rates(field, transitions, composition)?;
    let gamma = gamma0.max(gamma1);
    let eta = if gamma > 0.0 {
        hf.delta_e_diff / (HBAR * gamma)
    } else {
        0.0
    };
    Ok(ShiftReport {
        delta_e_plus: plus,
        delta_e_minus: minus,
        delta_e0: hf.delta_e0,
        delta_e1: hf.delta_e1,
        delta_e_diff: hf.delta_e_diff,
        gamma0,
        gamma1,
        eta,
    })
}

/// Shift-to-scattering ratio at unit intensity (the ratio is intensity independent).
pub fn eta_at(wavelength: f64, transitions: &TransitionSet, composition: &HyperfineComposition) -> Result<f64> {
    Ok(shift_report(&FieldAtAtom::sigma_plus(1.0, wavelength), transitions, composition)?.eta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBand {
    /// m
    pub lower: f64,
    /// m
    pub upper: f64,
    /// Excluded neighbourhood around each line, m.
    pub resonance_guard: f64,
    pub grid_points: usize,
}

impl SearchBand {
    /// Between the D2 and D1 lines with the default ±0.2 nm guard.
    pub fn between_lines(species: &AtomSpecies) -> Self {
        let guard = 0.2 * NANOMETER;
        Self {
            lower: species.d2_wavelength + guard,
            upper: species.d1_wavelength - guard,
            resonance_guard: guard,
            grid_points: 2001,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LpolOptimum {
    pub wavelength: f64,
    pub eta: f64,
}

/// Wavelength in `band` maximizing `η = δE / ħ max(γ₀, γ₁)`.
///
/// A uniform scan locates the best cell; Brent's method then polishes
/// inside the two neighbouring cells.
pub fn optimize_lpol_wavelength(
    band: &SearchBand,
    species: &AtomSpecies,
    composition: &HyperfineComposition,
) -> Result<LpolOptimum> {
    let guard = band.resonance_guard.max(0.0);
    let lo_limit = species.d2_wavelength.min(species.d1_wavelength) + guard;
    let hi_limit = species.d2_wavelength.max(species.d1_wavelength) - guard;
    if !(band.lower < band.upper) || band.lower < lo_limit || band.upper > hi_limit {
        return Err(Error::Domain(format!(
            "search band [{:.3}, {:.3}] nm must lie between the lines with a {:.3} nm guard ([{:.3}, {:.3}] nm)",
            band.lower / NANOMETER,
            band.upper / NANOMETER,
            guard / NANOMETER,
            lo_limit / NANOMETER,
            hi_limit / NANOMETER
        )));
    }
    if band.grid_points < 3 {
        return Err(Error::Domain("search band needs at least 3 grid points".into()));
    }
    let transitions = TransitionSet::from_species(species);
    let n = band.grid_points;
    let step = (band.upper - band.lower) / (n - 1) as f64;
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 0..n {
        let lam = band.lower + step * i as f64;
        let eta = eta_at(lam, &transitions, composition)?;
        if eta > best.1 {
            best = (i, eta);
        }
    }
    let lo = band.lower + step * best.0.saturating_sub(1) as f64;
    let hi = (band.lower + step * (best.0 + 1) as f64).min(band.upper);
    let objective = |lam: f64| -eta_at(lam, &transitions, composition).unwrap_or(f64::NEG_INFINITY);
    let (lam, neg_eta) = minimize_scalar(objective, (lo, hi), 1e-9 * NANOMETER)?;
    if -neg_eta >= best.1 {
        Ok(LpolOptimum {
            wavelength: lam,
            eta: -neg_eta,
        })
    } else {
        Ok(LpolOptimum {
            wavelength: band.lower + step * best.0 as f64,
            eta: best.1,
        })
    }
}
