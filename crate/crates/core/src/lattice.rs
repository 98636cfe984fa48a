//! Short-period / long-period optical superlattice.
//!
//! The short-period lattice (SPOL) sets the sites `x_j = j λ_s/2`. The
//! long-period lattice (LPOL) has period `η_l = n λ_s/2` and an intensity
//! envelope `I cos²(π(x − x_0)/η_l)`, so one site per period (label A) sees
//! the full LPOL light shift and the others (label B) see less.
//!
//! Energies are in `E_R` of the SPOL, times in `ħ/E_R`.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::linspace;
use crate::stark::{
    fine_structure_shifts, hyperfine_shifts, FieldAtAtom, HyperfineComposition, Polarization, TransitionSet,
};
use crate::transfer::evolve_two_state;
use crate::units::{AtomSpecies, UnitSystem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperlatticeConfig {
    /// m
    pub spol_wavelength: f64,
    /// `E_R`
    pub spol_depth: f64,
    pub pattern_period: usize,
    /// m
    pub lpol_wavelength: f64,
    /// W/m² at an antinode
    pub lpol_intensity: f64,
    /// Antinode offset from site 0, m.
    #[serde(default)]
    pub lpol_phase: f64,
    #[serde(default)]
    pub polarization: Polarization,
    #[serde(default)]
    pub species: AtomSpecies,
    #[serde(default)]
    pub composition: HyperfineComposition,
}

impl Default for SuperlatticeConfig {
    fn default() -> Self {
        Self {
            spol_wavelength: 850e-9,
            spol_depth: 50.0,
            pattern_period: 3,
            lpol_wavelength: 787.6e-9,
            lpol_intensity: 0.0,
            lpol_phase: 0.0,
            polarization: Polarization::SigmaPlus,
            species: AtomSpecies::rubidium87(),
            composition: HyperfineComposition::default(),
        }
    }
}

impl SuperlatticeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pattern_period < 3 {
            return Err(Error::Domain(format!(
                "pattern period must be at least 3, got {}",
                self.pattern_period
            )));
        }
        if !(self.spol_wavelength > 0.0) || !(self.lpol_wavelength > 0.0) {
            return Err(Error::Domain("wavelengths must be positive".into()));
        }
        if !(self.spol_depth > 0.0) {
            return Err(Error::Domain(format!(
                "SPOL depth must be positive, got {}",
                self.spol_depth
            )));
        }
        if !(self.lpol_intensity >= 0.0) {
            return Err(Error::Domain(format!(
                "LPOL intensity must be non-negative, got {}",
                self.lpol_intensity
            )));
        }
        self.species.validate()?;
        self.composition.validate()?;
        lpol_angle(self.pattern_period, self.spol_wavelength, self.lpol_wavelength)?;
        Ok(())
    }

    pub fn units(&self) -> Result<UnitSystem> {
        UnitSystem::lattice(&self.species, self.spol_wavelength)
    }

    pub fn lpol_period(&self) -> f64 {
        self.pattern_period as f64 * self.spol_wavelength / 2.0
    }

    pub fn site_position(&self, index: usize) -> f64 {
        index as f64 * self.spol_wavelength / 2.0
    }

    /// `cos²(π(x − x_0)/η_l)`
    pub fn envelope(&self, x: f64) -> f64 {
        (PI * (x - self.lpol_phase) / self.lpol_period()).cos().powi(2)
    }

    pub fn with_intensity(self, lpol_intensity: f64) -> Self {
        Self { lpol_intensity, ..self }
    }
}

/// Crossing angle `θ = 2 arcsin(λ_l / nλ_s)` that makes the LPOL period
/// `η_l = λ_l / (2 sin(θ/2))` equal to `n λ_s / 2`.
pub fn lpol_angle(period: usize, spol_wavelength: f64, lpol_wavelength: f64) -> Result<f64> {
    let arg = lpol_wavelength / (period as f64 * spol_wavelength);
    if !(arg > 0.0 && arg <= 1.0) {
        return Err(Error::Geometry(format!(
            "λ_l/(nλ_s) = {arg} has no crossing angle (n = {period})"
        )));
    }
    Ok(2.0 * arg.asin())
}

pub fn lpol_period_from_angle(lpol_wavelength: f64, angle: f64) -> f64 {
    lpol_wavelength / (2.0 * (angle / 2.0).sin())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SiteLabel {
    /// Target site.
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SitePattern {
    pub labels: Vec<SiteLabel>,
    /// m
    pub site_positions: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SiteShift {
    pub index: usize,
    /// m
    pub position: f64,
    pub envelope: f64,
    /// `E_R`
    pub delta_e0: f64,
    /// `E_R`
    pub delta_e1: f64,
    /// `δE₁ − δE₀`, `E_R`
    pub delta_e: f64,
    pub label: SiteLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiteDetunings {
    /// One LPOL period, sites `0..n`.
    pub sites: Vec<SiteShift>,
    /// `δE(A) − max_B δE(B)`, `E_R`
    pub delta: f64,
    pub target_index: usize,
}

impl SiteDetunings {
    pub fn target(&self) -> &SiteShift {
        &self.sites[self.target_index]
    }

    /// Labels and positions of `count` consecutive sites from index 0.
    pub fn pattern(&self, count: usize, spol_wavelength: f64) -> SitePattern {
        let n = self.sites.len();
        SitePattern {
            labels: (0..count).map(|j| self.sites[j % n].label).collect(),
            site_positions: (0..count).map(|j| j as f64 * spol_wavelength / 2.0).collect(),
        }
    }

    /// Shift of an arbitrary site index (periodic extension).
    pub fn site(&self, index: usize) -> &SiteShift {
        &self.sites[index % self.sites.len()]
    }
}

/// Hyperfine light shifts at unit LPOL intensity and full envelope, `E_R`.
fn unit_shifts(config: &SuperlatticeConfig, units: &UnitSystem) -> Result<(f64, f64)> {
    let transitions = TransitionSet::from_species(&config.species);
    let field = FieldAtAtom {
        intensity: 1.0,
        wavelength: config.lpol_wavelength,
        polarization: config.polarization,
    };
    let (plus, minus) = fine_structure_shifts(&field, &transitions)?;
    let hf = hyperfine_shifts(plus, minus, &config.composition);
    Ok((units.energy_from_si(hf.delta_e0), units.energy_from_si(hf.delta_e1)))
}

/// Per-site hyperfine shifts over one LPOL period and the worst-case
/// differential `δ` between the target and the non-target sites.
///
/// The target is the site with the largest differential shift; it is chosen
/// from the envelope alone so that the labelling does not depend on the
/// intensity.
pub fn site_hyperfine_detunings(config: &SuperlatticeConfig) -> Result<SiteDetunings> {
    config.validate()?;
    let units = config.units()?;
    let (unit0, unit1) = unit_shifts(config, &units)?;
    let unit_diff = unit1 - unit0;
    let n = config.pattern_period;

    let envelopes: Vec<f64> = (0..n).map(|j| config.envelope(config.site_position(j))).collect();
    let orient = if unit_diff < 0.0 { -1.0 } else { 1.0 };
    let score = |e: f64| orient * e;
    let best = envelopes.iter().map(|&e| score(e)).fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..n).filter(|&j| (score(envelopes[j]) - best).abs() <= 1e-9).collect();
    if tied.len() > 1 {
        return Err(Error::Ambiguity { sites: tied });
    }
    let target_index = tied[0];

    let sites: Vec<SiteShift> = (0..n)
        .map(|j| {
            let scale = config.lpol_intensity * envelopes[j];
            SiteShift {
                index: j,
                position: config.site_position(j),
                envelope: envelopes[j],
                delta_e0: unit0 * scale,
                delta_e1: unit1 * scale,
                delta_e: unit_diff * scale,
                label: if j == target_index { SiteLabel::A } else { SiteLabel::B },
            }
        })
        .collect();
    let worst_b = sites
        .iter()
        .filter(|s| s.label == SiteLabel::B)
        .map(|s| s.delta_e)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SiteDetunings {
        delta: sites[target_index].delta_e - worst_b,
        sites,
        target_index,
    })
}

/// LPOL intensity at which `δ` equals `target_delta` (in `E_R`).
pub fn solve_intensity_for_delta(config: &SuperlatticeConfig, target_delta: f64) -> Result<f64> {
    if !(target_delta >= 0.0) {
        return Err(Error::Domain(format!(
            "target δ must be non-negative, got {target_delta}"
        )));
    }
    let per_unit = site_hyperfine_detunings(&config.with_intensity(1.0))?.delta;
    if per_unit.abs() < f64::MIN_POSITIVE {
        return Err(Error::Infeasible("δ does not depend on the LPOL intensity".into()));
    }
    let intensity = target_delta / per_unit;
    if intensity < 0.0 {
        return Err(Error::Infeasible(format!(
            "δ has the wrong sign at λ_l = {} m; no intensity reaches {target_delta}",
            config.lpol_wavelength
        )));
    }
    Ok(intensity)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpolRamp {
    /// `ħ/E_R`
    pub duration: f64,
    /// s
    pub duration_si: f64,
    /// Site that sets the duration.
    pub limiting_site: usize,
    pub xi_start: f64,
    pub xi_end: f64,
    /// `(ξ_start + ξ_end)²` at `duration`; equals the target.
    pub excitation_bound: f64,
}

/// Tight-binding depth of site `j` in hyperfine state `state` (0 or 1), `E_R`.
fn site_depth(config: &SuperlatticeConfig, shift: &SiteShift, state: u8, fraction: f64) -> f64 {
    let light = if state == 0 { shift.delta_e0 } else { shift.delta_e1 };
    config.spol_depth - fraction * light
}

/// Duration of a linear LPOL intensity ramp that keeps the vibrational
/// excitation of every atom (all in state 0) below `target_excitation`.
///
/// Each site is a harmonic well of frequency `ϖ = 2√V(t)` with
/// `V(t) = V_s − δE₀(x_j) t/τ`. The local adiabaticity
/// `ξ(t) = |dϖ/dt| / (4√2 ϖ²)` is largest at one end of the ramp, and the
/// excitation after the ramp is bounded by `(ξ(0) + ξ(τ))²`, the sum of the
/// two non-adiabatic kicks at the kinks of a linear ramp.
pub fn lpol_ramp_time(config: &SuperlatticeConfig, target_excitation: f64) -> Result<LpolRamp> {
    if !(target_excitation > 0.0 && target_excitation < 0.1) {
        return Err(Error::Domain(format!(
            "target excitation must lie in (0, 0.1), got {target_excitation}"
        )));
    }
    let detunings = site_hyperfine_detunings(config)?;
    let units = config.units()?;
    // ξ·τ at a depth V for a total depth change ΔV
    let xi_tau = |delta_v: f64, v: f64| delta_v.abs() / (16.0 * SQRT_2 * v.powf(1.5));

    let mut worst: Option<(usize, f64, f64)> = None;
    for shift in &detunings.sites {
        let v_start = site_depth(config, shift, 0, 0.0);
        let v_end = site_depth(config, shift, 0, 1.0);
        if !(v_end > 0.0) {
            return Err(Error::Infeasible(format!(
                "site {} loses confinement at full LPOL intensity (depth {v_end} E_R)",
                shift.index
            )));
        }
        let change = v_end - v_start;
        let (a, b) = (xi_tau(change, v_start), xi_tau(change, v_end));
        if worst.is_none_or(|(_, wa, wb)| a + b > wa + wb) {
            worst = Some((shift.index, a, b));
        }
    }
    let (site, a, b) = worst.expect("period has at least three sites");
    let duration = (a + b) / target_excitation.sqrt();
    let (xi_start, xi_end) = if duration > 0.0 {
        (a / duration, b / duration)
    } else {
        (0.0, 0.0)
    };
    Ok(LpolRamp {
        duration,
        duration_si: units.time_to_si(duration),
        limiting_site: site,
        xi_start,
        xi_end,
        excitation_bound: (xi_start + xi_end).powi(2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RampSimulation {
    pub site: usize,
    pub final_excitation: f64,
    pub max_excitation: f64,
}

/// Integrates the two-state reduction for one site and hyperfine state along
/// a linear LPOL ramp up (`duration`), an optional hold, and an optional
/// ramp down of the same length.
pub fn simulate_lpol_ramp(
    config: &SuperlatticeConfig,
    site: usize,
    state: u8,
    duration: f64,
    hold: Option<f64>,
) -> Result<RampSimulation> {
    if !(duration > 0.0) {
        return Err(Error::Domain(format!("ramp duration must be positive, got {duration}")));
    }
    let detunings = site_hyperfine_detunings(config)?;
    let shift = *detunings.site(site);
    let v0 = site_depth(config, &shift, state, 0.0);
    let v1 = site_depth(config, &shift, state, 1.0);
    if !(v0 > 0.0 && v1 > 0.0) {
        return Err(Error::Infeasible(format!(
            "site {site} is not confining along the ramp"
        )));
    }
    let slope = (v1 - v0) / duration;
    let (total, hold_time) = match hold {
        Some(h) if h >= 0.0 => (2.0 * duration + h, h),
        Some(h) => return Err(Error::Domain(format!("hold time must be non-negative, got {h}"))),
        None => (duration, 0.0),
    };
    let schedule = move |t: f64| {
        let (v, vdot) = if t <= duration {
            (v0 + slope * t, slope)
        } else if t <= duration + hold_time {
            (v1, 0.0)
        } else {
            (v1 - slope * (t - duration - hold_time), -slope)
        };
        (2.0 * v.sqrt(), vdot / v.sqrt())
    };

    // Integrate segment by segment so that the kinks fall on step boundaries.
    let mut bounds = vec![0.0, duration];
    if hold.is_some() {
        if hold_time > 0.0 {
            bounds.push(duration + hold_time);
        }
        bounds.push(total);
    }
    let mut state_vec = None;
    let mut max_exc: f64 = 0.0;
    let mut final_exc = 0.0;
    for w in bounds.windows(2) {
        let samples = linspace(w[0], w[1], 400);
        let (trace, end) = evolve_two_state(schedule, w[0], w[1], &samples, state_vec, 1e-10)?;
        max_exc = trace.iter().map(|s| s.p_excited).fold(max_exc, f64::max);
        final_exc = end[1].norm_sqr();
        state_vec = Some(end);
    }
    Ok(RampSimulation {
        site,
        final_excitation: final_exc,
        max_excitation: max_exc,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PatternYield {
    pub targets: u64,
    pub total_sites: u64,
}

impl PatternYield {
    pub fn fraction(&self) -> f64 {
        self.targets as f64 / self.total_sites as f64
    }
}

/// One target per `n` sites in 1-D, per `n × n` block in 2-D.
pub fn pattern_yield(total_sites: u64, period: u64, dimensions: u8) -> Result<PatternYield> {
    if period == 0 || total_sites < period {
        return Err(Error::Domain(format!(
            "need at least n = {period} sites, got {total_sites}"
        )));
    }
    let block = match dimensions {
        1 => period,
        2 => period * period,
        d => return Err(Error::Domain(format!("dimensions must be 1 or 2, got {d}"))),
    };
    Ok(PatternYield {
        targets: total_sites / block,
        total_sites,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfilePoint {
    /// μm
    pub position_um: f64,
    /// `E_R`
    pub potential0: f64,
    /// `E_R`
    pub potential1: f64,
}

/// `V_s sin²(2πx/λ_s) + δE_state(x)` for both hyperfine states over
/// `periods` LPOL periods.
pub fn potential_profile(config: &SuperlatticeConfig, periods: usize, points: usize) -> Result<Vec<ProfilePoint>> {
    config.validate()?;
    let units = config.units()?;
    let (unit0, unit1) = unit_shifts(config, &units)?;
    let span = periods as f64 * config.lpol_period();
    let k = 2.0 * PI / config.spol_wavelength;
    Ok(linspace(
        -0.25 * config.spol_wavelength,
        span - 0.25 * config.spol_wavelength,
        points.max(2),
    )
    .into_iter()
    .map(|x| {
        let lattice = config.spol_depth * (k * x).sin().powi(2);
        let light = config.lpol_intensity * config.envelope(x);
        ProfilePoint {
            position_um: x * 1e6,
            potential0: lattice + unit0 * light,
            potential1: lattice + unit1 * light,
        }
    })
    .collect())
}
