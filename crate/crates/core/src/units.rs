//! Physical constants, the natural unit system and the atomic species data.
//!
//! Every physics module works in natural units: energies in the SPOL recoil
//! energy `E_R`, times in `ħ/E_R`, angular frequencies in `E_R/ħ` and
//! `ħ = 1`. SI values only appear at the configuration and report boundary.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = PLANCK / (2.0 * PI);
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

pub const NANOMETER: f64 = 1e-9;
pub const MICROMETER: f64 = 1e-6;
pub const MICROSECOND: f64 = 1e-6;
pub const MILLISECOND: f64 = 1e-3;

/// `h² / (2 m λ²)` in joules.
pub fn recoil_energy(wavelength: f64, mass: f64) -> Result<f64> {
    if !(wavelength > 0.0) || !(mass > 0.0) {
        return Err(Error::Domain(format!(
            "recoil energy needs positive wavelength and mass (got {wavelength:e} m, {mass:e} kg)"
        )));
    }
    Ok(PLANCK * PLANCK / (2.0 * mass * wavelength * wavelength))
}

/// Angular detuning `2πc (1/λ_laser − 1/λ_line)` in rad/s. Negative when the
/// laser is red of the line.
pub fn detuning_from_wavelength(laser_wavelength: f64, line_wavelength: f64) -> Result<f64> {
    if !(laser_wavelength > 0.0) || !(line_wavelength > 0.0) {
        return Err(Error::Domain(format!(
            "wavelengths must be positive (got {laser_wavelength:e} m, {line_wavelength:e} m)"
        )));
    }
    Ok(2.0 * PI * SPEED_OF_LIGHT * (1.0 / laser_wavelength - 1.0 / line_wavelength))
}

/// Angular frequency of light with the given vacuum wavelength.
pub fn angular_frequency(wavelength: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / wavelength
}

/// Natural unit system anchored on an energy scale and a length scale.
///
/// `base_time` is always `ħ / base_energy`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    pub base_energy: f64,
    pub base_time: f64,
    pub base_length: f64,
}

impl UnitSystem {
    pub fn new(base_energy: f64, base_length: f64) -> Result<Self> {
        if !(base_energy > 0.0) || !(base_length > 0.0) {
            return Err(Error::Domain(
                "unit system needs positive energy and length scales".into(),
            ));
        }
        Ok(Self {
            base_energy,
            base_time: HBAR / base_energy,
            base_length,
        })
    }

    /// Lattice units: `E_R(λ_s)`, `ħ/E_R`, `λ_s`.
    pub fn lattice(species: &AtomSpecies, spol_wavelength: f64) -> Result<Self> {
        Self::new(recoil_energy(spol_wavelength, species.mass)?, spol_wavelength)
    }

    /// Harmonic-oscillator style units for a beam of waist `length`:
    /// energy `ħ²/(2 m L²)`, length `L`.
    pub fn kinetic(mass: f64, length: f64) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::Domain("mass must be positive".into()));
        }
        Self::new(HBAR * HBAR / (2.0 * mass * length * length), length)
    }

    pub fn energy_to_si(&self, e: f64) -> f64 {
        e * self.base_energy
    }
    pub fn energy_from_si(&self, joules: f64) -> f64 {
        joules / self.base_energy
    }
    pub fn time_to_si(&self, t: f64) -> f64 {
        t * self.base_time
    }
    pub fn time_from_si(&self, seconds: f64) -> f64 {
        seconds / self.base_time
    }
    pub fn length_to_si(&self, x: f64) -> f64 {
        x * self.base_length
    }
    pub fn length_from_si(&self, meters: f64) -> f64 {
        meters / self.base_length
    }
    /// Angular frequency (rad/s) → natural units of `base_energy/ħ`.
    pub fn rate_from_si(&self, per_second: f64) -> f64 {
        per_second * self.base_time
    }
    pub fn rate_to_si(&self, w: f64) -> f64 {
        w / self.base_time
    }
    /// Energy expressed as a temperature `E / k_B` in kelvin.
    pub fn energy_to_kelvin(&self, e: f64) -> f64 {
        self.energy_to_si(e) / BOLTZMANN
    }
    pub fn energy_from_kelvin(&self, kelvin: f64) -> f64 {
        self.energy_from_si(kelvin * BOLTZMANN)
    }
}

/// Line, mass and hyperfine data for the simulated alkali atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomSpecies {
    /// kg
    pub mass: f64,
    /// m
    pub d1_wavelength: f64,
    /// m
    pub d2_wavelength: f64,
    /// Decay rate of the `P_1/2` level, rad/s.
    pub gamma1: f64,
    /// Decay rate of the `P_3/2` level, rad/s.
    pub gamma2: f64,
    /// Ground hyperfine splitting between |0⟩ and |1⟩, rad/s.
    pub hyperfine_splitting: f64,
}

impl AtomSpecies {
    pub fn rubidium87() -> Self {
        Self {
            mass: 86.909_180_527 * ATOMIC_MASS_UNIT,
            d1_wavelength: 794.98 * NANOMETER,
            d2_wavelength: 780.24 * NANOMETER,
            gamma1: 2.0 * PI * 5.75e6,
            gamma2: 2.0 * PI * 6.07e6,
            hyperfine_splitting: 2.0 * PI * 6.8347e9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mass", self.mass),
            ("d1_wavelength", self.d1_wavelength),
            ("d2_wavelength", self.d2_wavelength),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("hyperfine_splitting", self.hyperfine_splitting),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(
                    format!("species.{name}"),
                    format!("must be positive and finite, got {v}"),
                ));
            }
        }
        Ok(())
    }

    pub fn d1_frequency(&self) -> f64 {
        angular_frequency(self.d1_wavelength)
    }
    pub fn d2_frequency(&self) -> f64 {
        angular_frequency(self.d2_wavelength)
    }
}

impl Default for AtomSpecies {
    fn default() -> Self {
        Self::rubidium87()
    }
}
