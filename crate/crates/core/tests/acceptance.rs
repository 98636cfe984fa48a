use std::process::{Command, ExitCode};
use std::time::Instant;

use mott_extract::budget::run_scheme1;
use mott_extract::config::RunConfig;
use mott_extract::lattice::{pattern_yield, SuperlatticeConfig};
use mott_extract::numerics::eigh_small;
use mott_extract::pulse::{
    pi_pulse_amplitude, rabi_evolve, step2_scattering_probability, GaussianPulse, IntensitySchedule, RABI_REL_TOL,
};
use mott_extract::removal::{
    obe_evolve, photon_count, removal_photon_threshold, solve_drive, DrivePolicy, ObeParams, OBE_REL_TOL,
};
use mott_extract::speedup::{
    build_profile, calibrate_adiabaticity, cycle_yield, gap_and_element, local_basis, moving_time, track_minimum,
    DoubleGaussianPotential, MovingSchedule,
};
use mott_extract::stark::{
    eta_at, optimize_lpol_wavelength, shift_report, FieldAtAtom, HyperfineComposition, SearchBand, TransitionSet,
};
use mott_extract::transfer::{
    excitation_ceiling, excitation_numeric, hopping_time, initial_frequency, matched_microtrap_depth, Direction,
    HarmonicRamp, TRANSFER_REL_TOL,
};
use mott_extract::units::{
    detuning_from_wavelength, AtomSpecies, UnitSystem, MICROMETER, MICROSECOND, MILLISECOND, NANOMETER,
};

/// Sub-checks that cannot pass with a correct implementation; see README.
const KNOWN_FAILURES: &[&str] = &["matched microtrap depth ≈ 104 μK"];

struct Check {
    name: String,
    pass: bool,
    detail: String,
}

fn check(name: &str, pass: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.to_string(),
        pass,
        detail: detail.into(),
    }
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target.abs()
}

type Outcome = mott_extract::Result<Vec<Check>>;
type Criterion = (&'static str, fn() -> Outcome);

fn species() -> AtomSpecies {
    AtomSpecies::rubidium87()
}

fn lattice_units() -> UnitSystem {
    UnitSystem::lattice(&species(), 850.0 * NANOMETER).unwrap()
}

fn pulse_selectivity() -> Outcome {
    let start = Instant::now();
    let pulse = GaussianPulse::pi_pulse(13.0, 5.0 / 13.0)?;
    let detuned = rabi_evolve(&pulse.with_detuning(52.0))?;
    let resonant = rabi_evolve(&pulse)?;
    let elapsed = start.elapsed().as_secs_f64();
    Ok(vec![
        check(
            "detuned flip error in [3e-6, 1.2e-5]",
            (3e-6..=1.2e-5).contains(&detuned.p_flip),
            format!("p_flip(52) = {:.4e}", detuned.p_flip),
        ),
        check(
            "resonant flip error ≤ 1e-6",
            1.0 - resonant.p_flip <= 1e-6,
            format!("1 − p_flip(0) = {:.3e}", 1.0 - resonant.p_flip),
        ),
        check("runtime < 1 s", elapsed < 1.0, format!("{elapsed:.3} s")),
    ])
}

fn pulse_amplitude() -> Outcome {
    let omega0 = 13.0;
    let amplitude = pi_pulse_amplitude(omega0, 5.0 / omega0)?;
    let reference = std::f64::consts::PI.sqrt() * omega0;
    Ok(vec![
        check(
            "Ω₀ within 1% of √π ω₀",
            within(amplitude, reference, 0.01),
            format!("Ω₀ = {amplitude:.6}, √π ω₀ = {reference:.6}"),
        ),
        check(
            "Ω₀ ≈ 23",
            (amplitude - 23.0).abs() < 0.5,
            format!("Ω₀ = {amplitude:.4}"),
        ),
    ])
}

fn transfer_ramp() -> Outcome {
    let start = Instant::now();
    let units = lattice_units();
    let ramp = |xi: f64| HarmonicRamp::new(initial_frequency(50.0).unwrap(), 4.0, xi, Direction::Deepen);
    let full = excitation_numeric(&ramp(0.005)?, 4001)?;
    let half = excitation_numeric(&ramp(0.0025)?, 4001)?;
    let elapsed = start.elapsed().as_secs_f64();
    let duration_us = units.time_to_si(full.duration) / MICROSECOND;
    let ceiling = excitation_ceiling(0.005);
    let shrink = full.analytic_numeric_gap / half.analytic_numeric_gap;
    Ok(vec![
        check(
            "T = 94 μs ± 2%",
            within(duration_us, 94.0, 0.02),
            format!("T = {duration_us:.3} μs"),
        ),
        check(
            "analytic max P_e = 4ξ² = 1.00e-4",
            ceiling == 1.0e-4 && full.max_excitation_analytic <= ceiling,
            format!(
                "4ξ² = {ceiling:e}, sampled analytic max = {:.9e}",
                full.max_excitation_analytic
            ),
        ),
        check(
            "numeric max P_e within 5% of analytic",
            within(full.max_excitation, ceiling, 0.05),
            format!("numeric max = {:.6e}", full.max_excitation),
        ),
        check(
            "sup-norm gap shrinks ≥ 4× when ξ halves",
            shrink >= 4.0,
            format!(
                "gap(0.005) = {:.3e}, gap(0.0025) = {:.3e}, ratio {shrink:.2}",
                full.analytic_numeric_gap, half.analytic_numeric_gap
            ),
        ),
        check("runtime < 5 s", elapsed < 5.0, format!("{elapsed:.3} s")),
    ])
}

fn microtrap_matching() -> Outcome {
    let units = lattice_units();
    let waist = MICROMETER / units.base_length;
    let depth = matched_microtrap_depth(50.0, waist)?;
    let microkelvin = units.energy_to_kelvin(depth) * 1e6;
    Ok(vec![
        check(
            "matched microtrap depth = 1366 E_R ± 1%",
            within(depth, 1366.0, 0.01),
            format!("V_f = {depth:.3} E_R"),
        ),
        check(
            "matched microtrap depth ≈ 104 μK",
            within(microkelvin, 104.0, 0.02),
            format!(
                "V_f/k_B = {microkelvin:.2} μK (E_R = {:.2} Hz·h)",
                units.base_energy / 6.626_070_15e-34
            ),
        ),
    ])
}

fn stark_optimization() -> Outcome {
    let sp = species();
    let composition = HyperfineComposition::default();
    let optimum = optimize_lpol_wavelength(&SearchBand::between_lines(&sp), &sp, &composition)?;
    let nm = optimum.wavelength / NANOMETER;
    let d2 = detuning_from_wavelength(787.6 * NANOMETER, sp.d2_wavelength)?;
    let reference = -2.0 * std::f64::consts::PI * 3608e9;
    let transitions = TransitionSet::from_species(&sp);
    let mut worst: f64 = 0.0;
    for wavelength in [783.0, 787.6, 791.0] {
        let base = eta_at(wavelength * NANOMETER, &transitions, &composition)?;
        for scale in [1e-3, 1.0, 1e6] {
            let field = FieldAtAtom::sigma_plus(scale * 2.8e6, wavelength * NANOMETER);
            let eta = shift_report(&field, &transitions, &composition)?.eta;
            worst = worst.max(((eta - base) / base).abs());
        }
    }
    Ok(vec![
        check(
            "λ* = 787.6 nm ± 1.5 nm",
            (nm - 787.6).abs() <= 1.5,
            format!("λ* = {nm:.3} nm"),
        ),
        check(
            "Δ₂(787.6 nm) within 1% of −2π × 3608 GHz",
            within(d2, reference, 0.01),
            format!("Δ₂/2π = {:.1} GHz", d2 / (2.0 * std::f64::consts::PI * 1e9)),
        ),
        check(
            "η invariant under intensity rescaling to 1e-12",
            worst <= 1e-12,
            format!("max relative change {worst:.2e}"),
        ),
    ])
}

fn removal() -> Outcome {
    let gamma = species().gamma2;
    let plan = solve_drive(gamma, &DrivePolicy::default())?;
    let params = ObeParams {
        linewidth: gamma,
        rabi_frequency: plan.rabi_frequency,
        detuning: 0.0,
        duration: plan.duration,
    };
    let resonant = photon_count(&params)?;
    let detuned = photon_count(&ObeParams {
        detuning: -2.0 * std::f64::consts::PI * 6.8e9,
        ..params
    })?;
    let threshold = removal_photon_threshold(50.0)?;
    Ok(vec![
        check(
            "25 photons within ≤ 1.5 μs",
            resonant >= 25.0 * (1.0 - 1e-6) && plan.duration <= 1.5 * MICROSECOND,
            format!("n = {resonant:.6} in {:.4} μs", plan.duration / MICROSECOND),
        ),
        check(
            "detuned count in [1e-6, 1e-4]",
            (1e-6..=1e-4).contains(&detuned),
            format!("n = {detuned:.3e}"),
        ),
        check(
            "threshold U₀/2E_R = 25",
            threshold == 25.0,
            format!("threshold = {threshold}"),
        ),
    ])
}

fn step2_scattering() -> Outcome {
    let config = RunConfig::default();
    let lattice: SuperlatticeConfig = config.superlattice()?;
    let units = lattice.units()?;
    let ramp = mott_extract::lattice::lpol_ramp_time(&lattice, 1e-4)?;
    let pulse = config.pulse()?;
    let schedule = IntensitySchedule {
        ramp_up: ramp.duration_si,
        hold: units.time_to_si(pulse.length()),
        ramp_down: ramp.duration_si,
    };
    let p = step2_scattering_probability(&lattice, &schedule)?;
    Ok(vec![check(
        "∫γ dt in [5e-5, 2e-4]",
        (5e-5..=2e-4).contains(&p),
        format!("P = {p:.4e} over {:.2} μs", schedule.total() / MICROSECOND),
    )])
}

fn scheme1_aggregate() -> Outcome {
    let budget = run_scheme1(&RunConfig::default())?;
    let two_d = pattern_yield(900, 3, 2)?;
    Ok(vec![
        check(
            "total time < 300 μs",
            budget.total_time < 300e-6,
            format!("{:.2} μs", budget.total_time / MICROSECOND),
        ),
        check(
            "total failure in [1e-4, 5e-4]",
            (1e-4..=5e-4).contains(&budget.total_failure),
            format!(
                "{:.4e} (sum {:.4e}, dominant {})",
                budget.total_failure,
                budget.channel_sum,
                budget.dominant_channel.clone().unwrap_or_default()
            ),
        ),
        check(
            "300 sites, n = 3 → 100 atoms",
            budget.atoms_extracted == 100,
            format!("{}", budget.atoms_extracted),
        ),
        check(
            "2-D fraction 1/9",
            two_d.fraction() == 1.0 / 9.0,
            format!("{}", two_d.fraction()),
        ),
    ])
}

fn speedup() -> Outcome {
    let config = RunConfig::default();
    let potential = config.speedup_potential();
    let adiabaticity = calibrate_adiabaticity(7e-3)?;
    let profile = build_profile(&potential, 2.0, 401, 11)?;
    let duration = moving_time(&MovingSchedule {
        final_displacement: 2.0,
        adiabaticity,
        profile,
    })?;
    let ms = config.speedup_units()?.time_to_si(duration.duration) / MILLISECOND;

    let path: Vec<f64> = (0..=40).map(|i| i as f64 * 0.05).collect();
    let minima = track_minimum(&potential, &path)?;
    let mut basis_change: f64 = 0.0;
    for m in minima.iter().step_by(10) {
        let p = potential.at(m.displacement);
        let small = gap_and_element(&p, m.position, 11)?;
        let large = gap_and_element(&p, m.position, 16)?;
        basis_change = basis_change.max(((large.gap - small.gap) / small.gap).abs());
    }

    let wide = DoubleGaussianPotential {
        confine_depth: 1.0,
        focus_depth: 0.0,
        confine_waist: 1e6,
        focus_waist: 1.0,
        displacement: 0.0,
    };
    let basis = local_basis(&wide, 0.0, 8)?;
    let omega = basis.width_parameter / 0.5;
    let levels = eigh_small(&basis.hamiltonian).values;
    let harmonic_error = levels
        .iter()
        .enumerate()
        .map(|(n, e)| (e - ((n as f64 + 0.5) * omega - 1.0)).abs())
        .fold(0.0, f64::max);
    let yield5 = cycle_yield(5, 1.0 / 3.0)?;
    Ok(vec![
        check(
            "moving time in [2.5, 10] ms",
            (2.5..=10.0).contains(&ms),
            format!("T = {ms:.3} ms (ξ̄ = {adiabaticity:.5})"),
        ),
        check(
            "basis 11 → 16 changes ΔE_g by < 1%",
            basis_change < 0.01,
            format!("max change {basis_change:.2e}"),
        ),
        check(
            "harmonic spectrum to 1e-10",
            harmonic_error <= 1e-10,
            format!("max error {harmonic_error:.2e}"),
        ),
        check(
            "5-cycle yield = 0.8683 ± 1e-4",
            (yield5 - 0.8683).abs() <= 1e-4,
            format!("{yield5:.6}"),
        ),
    ])
}

fn hopping() -> Outcome {
    let units = lattice_units();
    let estimate = hopping_time(50.0)?;
    let seconds = units.time_to_si(estimate.time);
    Ok(vec![
        check(
            "ħ/J within one order of magnitude of 5 s",
            (0.5..=50.0).contains(&seconds),
            format!("ħ/J = {seconds:.3} s"),
        ),
        check(
            "J within 20% of the asymptotic formula",
            within(estimate.tunneling, estimate.asymptotic_tunneling, 0.2),
            format!(
                "J = {:.4e}, asymptotic {:.4e} E_R",
                estimate.tunneling, estimate.asymptotic_tunneling
            ),
        ),
    ])
}

fn run_cli(args: &[&str]) -> Vec<u8> {
    let output = Command::new(env!("CARGO_BIN_EXE_mott-extract"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        output.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    output.stdout
}

fn properties() -> Outcome {
    let mut checks = Vec::new();
    let mut rabi_norm: f64 = 0.0;
    for (width, detuning) in [(13.0, 0.0), (13.0, 52.0), (13.0, 100.0), (5.0, 20.0)] {
        let pulse = GaussianPulse::pi_pulse(width, 5.0 / width)?.with_detuning(detuning);
        rabi_norm = rabi_norm.max(rabi_evolve(&pulse)?.max_norm_error);
    }
    checks.push(check(
        "Rabi norm within 10× tolerance",
        rabi_norm <= 10.0 * RABI_REL_TOL,
        format!("{rabi_norm:.2e}"),
    ));

    let mut transfer_norm: f64 = 0.0;
    for (xi, ratio, direction) in [(0.005, 4.0, Direction::Deepen), (0.01, 0.5, Direction::Shallow)] {
        let ramp = HarmonicRamp::new(initial_frequency(50.0)?, ratio, xi, direction)?;
        transfer_norm = transfer_norm.max(excitation_numeric(&ramp, 501)?.max_norm_error);
    }
    checks.push(check(
        "two-state norm within 10× tolerance",
        transfer_norm <= 10.0 * TRANSFER_REL_TOL,
        format!("{transfer_norm:.2e}"),
    ));

    let gamma = species().gamma2;
    let plan = solve_drive(gamma, &DrivePolicy::default())?;
    let mut trace: f64 = 0.0;
    for detuning in [0.0, -species().hyperfine_splitting] {
        let traj = obe_evolve(
            &ObeParams {
                linewidth: gamma,
                rabi_frequency: plan.rabi_frequency,
                detuning,
                duration: plan.duration,
            },
            401,
        )?;
        for s in &traj.states {
            let purity = s.coherence.norm_sqr() - s.population_excited * s.population_ground;
            trace = trace
                .max((s.population_excited + s.population_ground - 1.0).abs())
                .max(purity.max(0.0))
                .max((-s.population_excited).max(0.0));
        }
    }
    checks.push(check(
        "OBE trace and positivity within 10× tolerance",
        trace <= 10.0 * OBE_REL_TOL,
        format!("{trace:.2e}"),
    ));

    let commands: &[&[&str]] = &[
        &["stark-scan", "--points", "41"],
        &["lattice"],
        &["lattice", "--profile", "--format", "csv"],
        &["pulse"],
        &["pulse", "--format", "csv"],
        &["remove"],
        &["transfer"],
        &["transfer", "--format", "csv"],
        &["speedup", "--set", "speedup.grid_points=201"],
        &["speedup", "--potential-at", "0.2,0.8,1.5", "--format", "csv"],
        &["scheme1"],
        &["scheme2"],
        &[
            "sweep",
            "--param",
            "transfer.adiabaticity",
            "--values",
            "0.0025,0.005",
            "--format",
            "csv",
        ],
    ];
    let mut differing = Vec::new();
    for args in commands {
        if run_cli(args) != run_cli(args) {
            differing.push(args.join(" "));
        }
    }
    checks.push(check(
        "byte-identical reruns on all subcommands",
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} invocations", commands.len())
        } else {
            differing.join("; ")
        },
    ));
    Ok(checks)
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("π-pulse selectivity", pulse_selectivity),
        ("π-pulse amplitude", pulse_amplitude),
        ("adiabatic transfer", transfer_ramp),
        ("microtrap matching", microtrap_matching),
        ("Stark optimization", stark_optimization),
        ("removal", removal),
        ("step-II scattering budget", step2_scattering),
        ("scheme-1 aggregate", scheme1_aggregate),
        ("speedup scheme", speedup),
        ("hopping-time sanity", hopping),
        ("property suite", properties),
    ];
    let mut unexpected = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let checks = match run() {
            Ok(c) => c,
            Err(e) => vec![check("criterion evaluated", false, e.to_string())],
        };
        let pass = checks.iter().all(|c| c.pass);
        println!("{} criterion {}: {title}", if pass { "PASS" } else { "FAIL" }, i + 1);
        for c in &checks {
            let known = KNOWN_FAILURES.contains(&c.name.as_str());
            let status = match (c.pass, known) {
                (true, false) => "ok",
                (false, true) => "known failure",
                (false, false) => "FAILED",
                (true, true) => "unexpectedly passed",
            };
            if c.pass == known {
                unexpected += 1;
            }
            println!("    [{status}] {}: {}", c.name, c.detail);
        }
    }
    if unexpected > 0 {
        println!("{unexpected} sub-check(s) deviate from the expected outcome");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
