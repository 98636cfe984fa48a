//! Protocol pipelines and their error budgets.
//!
//! Scheme 1 chains patterned loading, selective depopulation, removal and
//! adiabatic transfer. Scheme 2 repeats the focused-beam move over several
//! melt and re-form cycles. Failure channels combine as independent events.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{numeric_paths, set_numeric, RunConfig};
use crate::error::{Error, Result};
use crate::lattice::{lpol_ramp_time, pattern_yield, simulate_lpol_ramp, site_hyperfine_detunings};
use crate::pulse::{rabi_evolve, step2_scattering_probability, IntensitySchedule};
use crate::removal::{
    collision_probability, photon_count, removal_photon_threshold, solve_drive, DrivePlan, ObeParams,
};
use crate::speedup::{build_profile, cycle_yield, excitation_and_scattering, moving_time, MovingSchedule};
use crate::transfer::{
    excitation_ceiling, excitation_numeric, hopping_time, initial_frequency, matched_microtrap_depth, HarmonicRamp,
};
use crate::units::{MICROMETER, MICROSECOND, MILLISECOND, NANOMETER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepName {
    MottPrep,
    SelectiveDepop,
    Removal,
    Transfer,
    SpeedupMove,
}

impl StepName {
    pub fn as_str(self) -> &'static str {
        match self {
            StepName::MottPrep => "mott_prep",
            StepName::SelectiveDepop => "selective_depop",
            StepName::Removal => "removal",
            StepName::Transfer => "transfer",
            StepName::SpeedupMove => "speedup_move",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureChannel {
    pub label: String,
    #[serde(rename = "p")]
    pub probability: f64,
}

fn channel(label: &str, probability: f64) -> FailureChannel {
    FailureChannel {
        label: label.to_string(),
        probability: probability.clamp(0.0, 1.0),
    }
}

fn as_micros<S: serde::Serializer>(seconds: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(seconds / MICROSECOND)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepReport {
    pub name: StepName,
    /// s
    #[serde(rename = "duration_us", serialize_with = "as_micros")]
    pub duration: f64,
    pub channels: Vec<FailureChannel>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectiveDepopDetails {
    pub lpol_wavelength_nm: f64,
    /// W/m²
    pub lpol_intensity: f64,
    /// `E_R`
    pub site_detuning: f64,
    pub target_site: usize,
    pub ramp_us: f64,
    pub ramp_excitation_bound: f64,
    pub cycle_excitation: f64,
    /// `E_R/ħ`
    pub envelope_width: f64,
    /// `ħ/E_R`
    pub cutoff: f64,
    /// `E_R/ħ`
    pub peak_rabi: f64,
    pub pulse_us: f64,
    pub flip_detuned: f64,
    pub flip_resonant: f64,
    pub scattering: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemovalDetails {
    pub drive: DrivePlan,
    pub threshold: f64,
    pub photons_removed: f64,
    pub photons_kept: f64,
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferDetails {
    /// `E_R/ħ`
    pub initial_frequency: f64,
    pub final_frequency: f64,
    pub max_excitation_numeric: f64,
    pub max_excitation_analytic: f64,
    /// `4ξ²`
    pub excitation_ceiling: f64,
    /// Microtrap depth matching the lattice frequency, `E_R`.
    pub matched_microtrap_depth: f64,
    pub matched_microtrap_uk: f64,
    pub hopping_time_s: f64,
    pub hopping_warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scheme1Details {
    pub selective_depop: SelectiveDepopDetails,
    pub removal: RemovalDetails,
    pub transfer: TransferDetails,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scheme2Details {
    pub adiabaticity: f64,
    /// 1/s
    pub effective_linewidth: f64,
    pub move_ms: f64,
    pub refinement_change: f64,
    pub excitation: f64,
    pub scattering: f64,
    pub cycles: u32,
    /// Smallest gap along the move, `ħ²/(2mσ_c²)`.
    pub minimum_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolBudget {
    pub scheme: u8,
    pub steps: Vec<StepReport>,
    /// s
    #[serde(rename = "total_time_us", serialize_with = "as_micros")]
    pub total_time: f64,
    /// `1 − Π(1 − p)`
    pub total_failure: f64,
    /// `Σ p`
    pub channel_sum: f64,
    pub dominant_channel: Option<String>,
    pub atoms_extracted: u64,
    pub extraction_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme1: Option<Scheme1Details>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme2: Option<Scheme2Details>,
}

impl ProtocolBudget {
    /// Aggregates `steps`; `zero_channels` reports every channel as zero.
    pub fn from_steps(scheme: u8, mut steps: Vec<StepReport>, zero_channels: bool, atoms: u64, fraction: f64) -> Self {
        if zero_channels {
            for c in steps.iter_mut().flat_map(|s| s.channels.iter_mut()) {
                c.probability = 0.0;
            }
        }
        let channels = || steps.iter().flat_map(|s| s.channels.iter());
        let survival: f64 = channels().map(|c| 1.0 - c.probability).product();
        let dominant = channels()
            .filter(|c| c.probability > 0.0)
            .fold(None::<&FailureChannel>, |best, c| match best {
                Some(b) if b.probability >= c.probability => Some(b),
                _ => Some(c),
            })
            .map(|c| c.label.clone());
        let channel_sum = channels().map(|c| c.probability).sum();
        Self {
            scheme,
            total_time: steps.iter().map(|s| s.duration).sum(),
            total_failure: 1.0 - survival,
            channel_sum,
            dominant_channel: dominant,
            atoms_extracted: atoms,
            extraction_fraction: fraction,
            steps,
            scheme1: None,
            scheme2: None,
        }
    }

    pub fn channels(&self) -> impl Iterator<Item = &FailureChannel> {
        self.steps.iter().flat_map(|s| s.channels.iter())
    }

    pub fn channel(&self, label: &str) -> Option<f64> {
        self.channels().find(|c| c.label == label).map(|c| c.probability)
    }
}

/// Steps II (LPOL ramps around the microwave pulse), III (removal) and IV
/// (transfer into microtraps) for one atom per `n` sites.
pub fn run_scheme1(config: &RunConfig) -> Result<ProtocolBudget> {
    config.validate()?;
    let (depop_step, depop) = selective_depop(config).map_err(Error::in_step("selective_depop"))?;
    let (removal_step, removal) = removal(config).map_err(Error::in_step("removal"))?;
    let (transfer_step, transfer) = transfer(config).map_err(Error::in_step("transfer"))?;

    let l = &config.lattice;
    let counts = pattern_yield(l.total_sites, l.period as u64, l.dimensions).map_err(Error::in_step("mott_prep"))?;
    let steps = vec![
        StepReport {
            name: StepName::MottPrep,
            duration: 0.0,
            channels: Vec::new(),
        },
        depop_step,
        removal_step,
        transfer_step,
    ];
    let mut budget =
        ProtocolBudget::from_steps(1, steps, config.budget.zero_channels, counts.targets, counts.fraction());
    budget.scheme1 = Some(Scheme1Details {
        selective_depop: depop,
        removal,
        transfer,
    });
    Ok(budget)
}

fn selective_depop(config: &RunConfig) -> Result<(StepReport, SelectiveDepopDetails)> {
    let lattice = config.superlattice()?;
    let units = lattice.units()?;
    let detunings = site_hyperfine_detunings(&lattice)?;
    let ramp = lpol_ramp_time(&lattice, config.lattice.ramp_target_excitation)?;

    let pulse = config.pulse()?;
    let delta = detunings.delta;
    let detuned = rabi_evolve(&pulse.with_detuning(delta))?;
    let resonant = rabi_evolve(&pulse)?;
    let pulse_time = pulse.length();

    let cycle = simulate_lpol_ramp(&lattice, ramp.limiting_site, 0, ramp.duration, Some(pulse_time))?;
    let schedule = IntensitySchedule {
        ramp_up: ramp.duration_si,
        hold: units.time_to_si(pulse_time),
        ramp_down: ramp.duration_si,
    };
    let scattering = step2_scattering_probability(&lattice, &schedule)?;

    let ramp_excitation = ramp.excitation_bound.max(cycle.final_excitation);
    let flip_error = detuned.p_flip + (1.0 - resonant.p_flip);
    let step = StepReport {
        name: StepName::SelectiveDepop,
        duration: schedule.total(),
        channels: vec![
            channel("lpol_ramp_excitation", ramp_excitation),
            channel("pulse_flip_error", flip_error),
            channel("step2_scattering", scattering),
        ],
    };
    let details = SelectiveDepopDetails {
        lpol_wavelength_nm: lattice.lpol_wavelength / NANOMETER,
        lpol_intensity: lattice.lpol_intensity,
        site_detuning: delta,
        target_site: detunings.target_index,
        ramp_us: ramp.duration_si / MICROSECOND,
        ramp_excitation_bound: ramp.excitation_bound,
        cycle_excitation: cycle.final_excitation,
        envelope_width: pulse.envelope_width,
        cutoff: pulse.cutoff,
        peak_rabi: pulse.peak_rabi,
        pulse_us: units.time_to_si(pulse_time) / MICROSECOND,
        flip_detuned: detuned.p_flip,
        flip_resonant: resonant.p_flip,
        scattering,
    };
    Ok((step, details))
}

fn removal(config: &RunConfig) -> Result<(StepReport, RemovalDetails)> {
    let species = &config.species;
    let drive = solve_drive(species.gamma2, &config.drive_policy())?;
    let threshold = removal_photon_threshold(config.removal.trap_depth)?;
    let params = ObeParams {
        linewidth: species.gamma2,
        rabi_frequency: drive.rabi_frequency,
        detuning: 0.0,
        duration: drive.duration,
    };
    let removed = photon_count(&params)?;
    let kept = photon_count(&ObeParams {
        detuning: -species.hyperfine_splitting,
        ..params
    })?;
    let collision = collision_probability(
        config.removal.hot_atom_lifetime_us * MICROSECOND,
        config.removal.tunneling_time_ms * MILLISECOND,
    )?;
    let complete = removed >= threshold * (1.0 - 1e-6);
    let mut channels = vec![channel("removal_impact", kept), channel("collision", collision)];
    if !complete {
        channels.push(channel("removal_incomplete", 1.0));
    }
    let step = StepReport {
        name: StepName::Removal,
        duration: drive.duration,
        channels,
    };
    Ok((
        step,
        RemovalDetails {
            drive,
            threshold,
            photons_removed: removed,
            photons_kept: kept,
            complete,
        },
    ))
}

fn transfer(config: &RunConfig) -> Result<(StepReport, TransferDetails)> {
    let units = config.lattice_units()?;
    let t = &config.transfer;
    let depth = config.lattice.spol_depth;
    let ramp = HarmonicRamp::new(
        initial_frequency(depth)?,
        t.frequency_ratio,
        t.adiabaticity,
        t.direction,
    )?;
    let result = excitation_numeric(&ramp, t.samples)?;
    let waist = t.microtrap_waist_um * MICROMETER / units.base_length;
    let microtrap = matched_microtrap_depth(depth, waist)?;
    let hopping = hopping_time(depth)?;
    let step = StepReport {
        name: StepName::Transfer,
        duration: units.time_to_si(result.duration),
        channels: vec![channel(
            "transfer_excitation",
            result.max_excitation.max(excitation_ceiling(t.adiabaticity)),
        )],
    };
    Ok((
        step,
        TransferDetails {
            initial_frequency: ramp.initial_frequency,
            final_frequency: ramp.final_frequency,
            max_excitation_numeric: result.max_excitation,
            max_excitation_analytic: result.max_excitation_analytic,
            excitation_ceiling: excitation_ceiling(t.adiabaticity),
            matched_microtrap_depth: microtrap,
            matched_microtrap_uk: units.energy_to_kelvin(microtrap) * 1e6,
            hopping_time_s: units.time_to_si(hopping.time),
            hopping_warning: hopping.warning,
        },
    ))
}

/// Focused-beam move repeated over `cycles` melt and re-form cycles. Each
/// atom is moved once, so the per-atom failure is that of a single move; the
/// step duration covers all cycles.
pub fn run_scheme2(config: &RunConfig) -> Result<ProtocolBudget> {
    config.validate()?;
    let (step, details, fraction) = speedup_move(config).map_err(Error::in_step("speedup_move"))?;
    let atoms = (fraction * config.lattice.total_sites as f64 + 1e-9).floor() as u64;
    let mut budget = ProtocolBudget::from_steps(2, vec![step], config.budget.zero_channels, atoms, fraction);
    budget.scheme2 = Some(details);
    Ok(budget)
}

fn speedup_move(config: &RunConfig) -> Result<(StepReport, Scheme2Details, f64)> {
    let s = &config.speedup;
    let units = config.speedup_units()?;
    let adiabaticity = config.speedup_adiabaticity()?;
    let model = config.scattering_model()?;
    let profile = build_profile(
        &config.speedup_potential(),
        s.final_displacement,
        s.grid_points,
        s.basis_size,
    )?;
    let minimum_gap = profile.iter().map(|g| g.gap).fold(f64::INFINITY, f64::min);
    let schedule = MovingSchedule {
        final_displacement: s.final_displacement,
        adiabaticity,
        profile,
    };
    let move_time = moving_time(&schedule)?;
    let duration = units.time_to_si(move_time.duration);
    let errors = excitation_and_scattering(adiabaticity, duration, units.energy_to_si(s.focus_depth), Some(&model))?;
    let fraction = cycle_yield(s.cycles, s.per_cycle_fraction)?;

    let step = StepReport {
        name: StepName::SpeedupMove,
        duration: duration * s.cycles as f64,
        channels: vec![
            channel("move_excitation", errors.excitation),
            channel("move_scattering", errors.scattering),
        ],
    };
    let details = Scheme2Details {
        adiabaticity,
        effective_linewidth: model.effective_linewidth,
        move_ms: duration / MILLISECOND,
        refinement_change: move_time.refinement_change,
        excitation: errors.excitation,
        scattering: errors.scattering,
        cycles: s.cycles,
        minimum_gap,
    };
    Ok((step, details, fraction))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    One,
    Two,
}

impl Scheme {
    pub fn run(self, config: &RunConfig) -> Result<ProtocolBudget> {
        match self {
            Scheme::One => run_scheme1(config),
            Scheme::Two => run_scheme2(config),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub budget: ProtocolBudget,
}

/// Runs `scheme` once per value of the numeric field at `path`. Rows are
/// computed in parallel and returned in grid order; the first failing row
/// (in grid order) aborts the sweep.
pub fn sweep(config: &RunConfig, path: &str, values: &[f64], scheme: Scheme) -> Result<Vec<SweepRow>> {
    let numeric = numeric_paths();
    if !numeric.iter().any(|p| p == path) {
        return Err(Error::config(
            path,
            format!("not a numeric parameter; valid paths are: {}", numeric.join(", ")),
        ));
    }
    let results: Vec<Result<SweepRow>> = values
        .par_iter()
        .map(|&value| {
            let row_config = set_numeric(config, path, value)?;
            Ok(SweepRow {
                value,
                budget: scheme.run(&row_config)?,
            })
        })
        .collect();
    results.into_iter().collect()
}
