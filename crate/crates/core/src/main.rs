use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use mott_extract::budget::{run_scheme1, run_scheme2, sweep, ProtocolBudget, Scheme};
use mott_extract::config::RunConfig;
use mott_extract::lattice::{lpol_angle, lpol_ramp_time, pattern_yield, potential_profile, site_hyperfine_detunings};
use mott_extract::output::{emit, to_json, Cell, Table};
use mott_extract::pulse::rabi_trajectory;
use mott_extract::removal::{obe_evolve, photon_count, removal_photon_threshold, solve_drive, ObeParams};
use mott_extract::speedup::{build_profile, potential, MovingSchedule};
use mott_extract::stark::{optimize_lpol_wavelength, shift_report, FieldAtAtom, SearchBand, TransitionSet};
use mott_extract::transfer::{
    excitation_ceiling, excitation_numeric, hopping_time, initial_frequency, matched_microtrap_depth, HarmonicRamp,
};
use mott_extract::units::{detuning_from_wavelength, MICROMETER, MICROSECOND, MILLISECOND, NANOMETER};
use mott_extract::Error;

const OUT_DIR_ENV: &str = "MOTT_EXTRACT_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "mott-extract",
    version,
    about = "Single-atom extraction from a Mott insulator: simulations and error budget"
)]
struct Cli {
    /// TOML run configuration; defaults apply to every missing key.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set transfer.adiabaticity=0.01`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output file (relative paths resolve against $MOTT_EXTRACT_OUT_DIR when set).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Light shifts, scattering rates and η across the band between the D lines.
    StarkScan(StarkScanArgs),
    /// Site detunings, LPOL geometry and ramp time of the superlattice.
    Lattice(LatticeArgs),
    /// Microwave π pulse at a given detuning.
    Pulse(PulseArgs),
    /// Resonant removal of non-target atoms.
    Remove(RemoveArgs),
    /// Constant-adiabaticity transfer into the microtrap.
    Transfer(TransferArgs),
    /// Focused-beam move of the speedup scheme.
    Speedup(SpeedupArgs),
    /// Error budget of the four-step extraction.
    Scheme1,
    /// Error budget of the multi-cycle speedup scheme.
    Scheme2,
    /// Repeat a scheme over a grid of one configuration value.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct StarkScanArgs {
    #[arg(long, default_value_t = 781.0)]
    from_nm: f64,
    #[arg(long, default_value_t = 794.5)]
    to_nm: f64,
    #[arg(long, default_value_t = 271)]
    points: usize,
}

#[derive(Args)]
struct LatticeArgs {
    /// Number of consecutive sites listed.
    #[arg(long, default_value_t = 12)]
    sites: usize,
    /// Emit the potential along two LPOL periods instead of the site table.
    #[arg(long)]
    profile: bool,
}

#[derive(Args)]
struct PulseArgs {
    /// Envelope width ω₀ in E_R/ħ.
    #[arg(long)]
    omega0: Option<f64>,
    /// Cutoff t_f in ħ/E_R.
    #[arg(long)]
    t_f: Option<f64>,
    /// Detuning in E_R/ħ; defaults to the site detuning.
    #[arg(long)]
    detuning: Option<f64>,
}

#[derive(Args)]
struct RemoveArgs {
    /// Trap depth U₀ in E_R.
    #[arg(long)]
    trap_depth: Option<f64>,
    /// Target removal duration in μs.
    #[arg(long)]
    duration_us: Option<f64>,
    /// Detuning of the kept atoms in GHz; defaults to the hyperfine splitting.
    #[arg(long)]
    detuning_ghz: Option<f64>,
}

#[derive(Args)]
struct TransferArgs {
    #[arg(long)]
    xi: Option<f64>,
    /// Lattice depth V_L in E_R.
    #[arg(long)]
    depth: Option<f64>,
    /// Final over initial trap frequency.
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long, value_enum)]
    direction: Option<DirectionArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Deepen,
    Shallow,
}

#[derive(Args)]
struct SpeedupArgs {
    /// Mean adiabaticity ξ̄; defaults to the calibrated value.
    #[arg(long)]
    xi_bar: Option<f64>,
    /// Final displacement in units of the confining waist.
    #[arg(long)]
    final_displacement: Option<f64>,
    /// Emit potential curves at these displacements instead of the gap profile.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    potential_at: Vec<f64>,
}

#[derive(Args)]
struct SweepArgs {
    /// Dotted configuration path of a numeric value.
    #[arg(long)]
    param: String,
    /// Comma-separated grid values.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    values: Vec<f64>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    scheme: u8,
}

/// A command's result: a JSON document and a CSV table view.
struct Report {
    json: serde_json::Value,
    table: Table,
}

/// The error chain joined by `: `, skipping causes already quoted by their parent.
fn describe(err: &anyhow::Error) -> String {
    let mut text = String::new();
    let mut previous = String::new();
    for cause in err.chain() {
        let message = cause.to_string();
        if !previous.contains(&message) {
            if !text.is_empty() {
                text.push_str(": ");
            }
            text.push_str(&message);
        }
        previous = message;
    }
    text
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", describe(&err));
            let code = err
                .chain()
                .find_map(|e| e.downcast_ref::<Error>())
                .map_or(1, |e| e.class().exit_code());
            ExitCode::from(code as u8)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut overrides = cli.overrides.clone();
    overrides.extend(flag_overrides(&cli.command));
    let config = match &cli.config {
        Some(path) => RunConfig::load(path, &overrides)?,
        None => RunConfig::from_toml_str("", &overrides)?,
    };

    let report = match &cli.command {
        Command::StarkScan(a) => stark_scan(&config, a)?,
        Command::Lattice(a) => lattice(&config, a)?,
        Command::Pulse(a) => pulse(&config, a)?,
        Command::Remove(a) => remove(&config, a)?,
        Command::Transfer(_) => transfer(&config)?,
        Command::Speedup(a) => speedup(&config, a)?,
        Command::Scheme1 => budget_report(run_scheme1(&config)?),
        Command::Scheme2 => budget_report(run_scheme2(&config)?),
        Command::Sweep(a) => sweep_report(&config, a)?,
    };

    let out = cli.out.as_deref().map(resolve_out);
    let text = match cli.format {
        Format::Json => to_json(&json!({ "config": config, "report": report.json })),
        Format::Csv => {
            let echo = config.to_toml();
            match &out {
                Some(path) => {
                    let mut echo_path = path.clone().into_os_string();
                    echo_path.push(".config.toml");
                    emit(&echo, Some(Path::new(&echo_path)))?;
                }
                None => eprint!("{echo}"),
            }
            report.table.to_csv()
        }
    };
    emit(&text, out.as_deref())?;
    Ok(())
}

fn resolve_out(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

/// Subcommand flags expressed as configuration overrides, applied last.
fn flag_overrides(command: &Command) -> Vec<String> {
    let mut sets = Vec::new();
    let mut push = |key: &str, value: Option<String>| {
        if let Some(v) = value {
            sets.push(format!("{key}={v}"));
        }
    };
    let num = |v: Option<f64>| v.map(|x| format!("{x:?}"));
    match command {
        Command::Pulse(a) => {
            push("pulse.envelope_width", num(a.omega0));
            push("pulse.cutoff", num(a.t_f));
        }
        Command::Remove(a) => {
            push("removal.trap_depth", num(a.trap_depth));
            push("removal.target_duration_us", num(a.duration_us));
        }
        Command::Transfer(a) => {
            push("transfer.adiabaticity", num(a.xi));
            push("lattice.spol_depth", num(a.depth));
            push("transfer.frequency_ratio", num(a.ratio));
            push(
                "transfer.direction",
                a.direction.map(|d| {
                    match d {
                        DirectionArg::Deepen => "\"deepen\"",
                        DirectionArg::Shallow => "\"shallow\"",
                    }
                    .to_string()
                }),
            );
        }
        Command::Speedup(a) => {
            push("speedup.adiabaticity", num(a.xi_bar));
            push("speedup.final_displacement", num(a.final_displacement));
        }
        _ => {}
    }
    sets
}

fn to_value<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("reports serialize to JSON")
}

fn stark_scan(config: &RunConfig, args: &StarkScanArgs) -> anyhow::Result<Report> {
    if args.points < 2 || !(args.from_nm < args.to_nm) {
        bail!(Error::config(
            "stark-scan",
            "need from-nm < to-nm and at least 2 points"
        ));
    }
    let species = &config.species;
    let transitions = TransitionSet::from_species(species);
    let lattice = config.superlattice()?;
    let units = lattice.units()?;
    let optimum = optimize_lpol_wavelength(&SearchBand::between_lines(species), species, &config.composition)?;
    let d2_detuning = detuning_from_wavelength(optimum.wavelength, species.d2_wavelength)?;

    let mut table = Table::new(["lambda_nm", "delta_e_per_er", "gamma0_per_s", "gamma1_per_s", "eta"]);
    let mut rows = Vec::new();
    for i in 0..args.points {
        let nm = args.from_nm + (args.to_nm - args.from_nm) * i as f64 / (args.points - 1) as f64;
        let field = FieldAtAtom {
            intensity: lattice.lpol_intensity,
            wavelength: nm * NANOMETER,
            polarization: lattice.polarization,
        };
        let Ok(r) = shift_report(&field, &transitions, &config.composition) else {
            continue;
        };
        let delta_e = units.energy_from_si(r.delta_e_diff);
        table.push(vec![
            nm.into(),
            delta_e.into(),
            r.gamma0.into(),
            r.gamma1.into(),
            r.eta.into(),
        ]);
        rows.push(json!({
            "lambda_nm": nm,
            "delta_e_per_er": delta_e,
            "gamma0_per_s": r.gamma0,
            "gamma1_per_s": r.gamma1,
            "eta": r.eta,
        }));
    }
    Ok(Report {
        json: json!({
            "optimum_nm": optimum.wavelength / NANOMETER,
            "optimum_eta": optimum.eta,
            "d2_detuning_ghz": d2_detuning / (2.0 * std::f64::consts::PI) / 1e9,
            "intensity_w_per_m2": lattice.lpol_intensity,
            "rows": rows,
        }),
        table,
    })
}

fn lattice(config: &RunConfig, args: &LatticeArgs) -> anyhow::Result<Report> {
    let lattice = config.superlattice()?;
    let detunings = site_hyperfine_detunings(&lattice)?;
    let ramp = lpol_ramp_time(&lattice, config.lattice.ramp_target_excitation)?;
    let angle = lpol_angle(lattice.pattern_period, lattice.spol_wavelength, lattice.lpol_wavelength)?;
    let l = &config.lattice;
    let counts = pattern_yield(l.total_sites, l.period as u64, l.dimensions)?;

    let table = if args.profile {
        let mut t = Table::new(["position_um", "potential0_er", "potential1_er"]);
        for p in potential_profile(&lattice, 2, config.output.trajectory_samples)? {
            t.push(vec![p.position_um.into(), p.potential0.into(), p.potential1.into()]);
        }
        t
    } else {
        let mut t = Table::new([
            "site",
            "position_um",
            "envelope",
            "delta_e0_er",
            "delta_e1_er",
            "delta_e_er",
            "label",
        ]);
        for j in 0..args.sites {
            let s = detunings.site(j);
            let position = j as f64 * lattice.spol_wavelength / 2.0;
            t.push(vec![
                j.into(),
                (position / MICROMETER).into(),
                s.envelope.into(),
                s.delta_e0.into(),
                s.delta_e1.into(),
                s.delta_e.into(),
                format!("{:?}", s.label).into(),
            ]);
        }
        t
    };
    Ok(Report {
        json: json!({
            "lpol_wavelength_nm": lattice.lpol_wavelength / NANOMETER,
            "lpol_intensity_w_per_m2": lattice.lpol_intensity,
            "crossing_angle_deg": angle.to_degrees(),
            "lpol_period_um": lattice.lpol_period() / MICROMETER,
            "site_detuning_er": detunings.delta,
            "sites": to_value(&detunings.sites),
            "ramp": to_value(&ramp),
            "targets": counts.targets,
            "extraction_fraction": counts.fraction(),
        }),
        table,
    })
}

fn pulse(config: &RunConfig, args: &PulseArgs) -> anyhow::Result<Report> {
    let pulse = config.pulse()?;
    let detuning = args.detuning.unwrap_or(config.lattice.site_detuning);
    let units = config.lattice_units()?;
    let (outcome, samples) = rabi_trajectory(&pulse.with_detuning(detuning), config.output.trajectory_samples)?;
    let mut table = Table::new(["t", "c0_re", "c0_im", "c1_re", "c1_im"]);
    for s in &samples {
        table.push(vec![
            s.t.into(),
            s.c0_re.into(),
            s.c0_im.into(),
            s.c1_re.into(),
            s.c1_im.into(),
        ]);
    }
    Ok(Report {
        json: json!({
            "omega0": pulse.envelope_width,
            "t_f": pulse.cutoff,
            "peak_rabi": pulse.peak_rabi,
            "detuning": detuning,
            "length_us": units.time_to_si(pulse.length()) / MICROSECOND,
            "p_flip": outcome.p_flip,
            "p_stay": outcome.p_stay,
            "max_norm_error": outcome.max_norm_error,
        }),
        table,
    })
}

fn remove(config: &RunConfig, args: &RemoveArgs) -> anyhow::Result<Report> {
    let species = &config.species;
    let drive = solve_drive(species.gamma2, &config.drive_policy())?;
    let threshold = removal_photon_threshold(config.removal.trap_depth)?;
    let params = ObeParams {
        linewidth: species.gamma2,
        rabi_frequency: drive.rabi_frequency,
        detuning: 0.0,
        duration: drive.duration,
    };
    let kept_detuning = args
        .detuning_ghz
        .map_or(-species.hyperfine_splitting, |g| 2.0 * std::f64::consts::PI * g * 1e9);
    let trajectory = obe_evolve(&params, config.output.trajectory_samples)?;
    let removed = trajectory.total_photons();
    let kept = photon_count(&ObeParams {
        detuning: kept_detuning,
        ..params
    })?;
    let mut table = Table::new(["t_us", "rho_ee", "rho_gg", "photons"]);
    for ((t, s), n) in trajectory.times.iter().zip(&trajectory.states).zip(&trajectory.photons) {
        table.push(vec![
            (t / MICROSECOND).into(),
            s.population_excited.into(),
            s.population_ground.into(),
            (*n).into(),
        ]);
    }
    Ok(Report {
        json: json!({
            "drive": to_value(&drive),
            "duration_us": drive.duration / MICROSECOND,
            "threshold": threshold,
            "photons_removed": removed,
            "photons_kept": kept,
            "kept_detuning_ghz": kept_detuning / (2.0 * std::f64::consts::PI) / 1e9,
            "removal_complete": removed >= threshold * (1.0 - 1e-6),
        }),
        table,
    })
}

fn transfer(config: &RunConfig) -> anyhow::Result<Report> {
    let units = config.lattice_units()?;
    let t = &config.transfer;
    let depth = config.lattice.spol_depth;
    let ramp = HarmonicRamp::new(
        initial_frequency(depth)?,
        t.frequency_ratio,
        t.adiabaticity,
        t.direction,
    )?;
    let result = excitation_numeric(&ramp, config.output.trajectory_samples)?;
    let microtrap = matched_microtrap_depth(depth, t.microtrap_waist_um * MICROMETER / units.base_length)?;
    let hopping = hopping_time(depth)?;
    let mut table = Table::new(["t_us", "omega", "pe_analytic", "pe_numeric"]);
    for r in &result.excitation_trace {
        table.push(vec![
            (units.time_to_si(r.t) / MICROSECOND).into(),
            r.omega.into(),
            r.pe_analytic.into(),
            r.pe_numeric.into(),
        ]);
    }
    Ok(Report {
        json: json!({
            "duration_us": units.time_to_si(result.duration) / MICROSECOND,
            "initial_frequency": ramp.initial_frequency,
            "final_frequency": ramp.final_frequency,
            "excitation_ceiling": excitation_ceiling(t.adiabaticity),
            "max_pe_analytic": result.max_excitation_analytic,
            "max_pe_numeric": result.max_excitation,
            "analytic_numeric_gap": result.analytic_numeric_gap,
            "max_norm_error": result.max_norm_error,
            "matched_microtrap_depth_er": microtrap,
            "matched_microtrap_uk": units.energy_to_kelvin(microtrap) * 1e6,
            "hopping_time_s": units.time_to_si(hopping.time),
            "tunneling_er": hopping.tunneling,
            "asymptotic_tunneling_er": hopping.asymptotic_tunneling,
            "hopping_warning": hopping.warning,
        }),
        table,
    })
}

fn speedup(config: &RunConfig, args: &SpeedupArgs) -> anyhow::Result<Report> {
    let s = &config.speedup;
    let base = config.speedup_potential();
    if !args.potential_at.is_empty() {
        let mut header = vec!["y".to_string()];
        header.extend(args.potential_at.iter().map(|a| format!("v_at_{a}")));
        let mut table = Table::new(header);
        let ys: Vec<f64> = (0..config.output.trajectory_samples)
            .map(|i| -2.0 + 5.0 * i as f64 / (config.output.trajectory_samples - 1) as f64)
            .collect();
        for &y in &ys {
            let mut row = vec![Cell::Float(y)];
            row.extend(
                args.potential_at
                    .iter()
                    .map(|&a| Cell::Float(potential(&base.at(a), y))),
            );
            table.push(row);
        }
        return Ok(Report {
            json: json!({ "displacements": args.potential_at, "rows": table.rows.len() }),
            table,
        });
    }

    let budget = run_scheme2(config)?;
    let profile = build_profile(&base, s.final_displacement, s.grid_points, s.basis_size)?;
    let mut table = Table::new(["displacement", "position", "gap", "element", "coupled_state"]);
    for g in &profile {
        table.push(vec![
            g.displacement.into(),
            g.position.into(),
            g.gap.into(),
            g.element.into(),
            g.coupled_state.into(),
        ]);
    }
    let schedule = MovingSchedule {
        final_displacement: s.final_displacement,
        adiabaticity: config.speedup_adiabaticity()?,
        profile,
    };
    Ok(Report {
        json: json!({
            "summary": to_value(&budget.scheme2),
            "extraction_fraction": budget.extraction_fraction,
            "move_time_ms": budget.scheme2.as_ref().map(|d| d.move_ms),
            "units_time_ms": config.speedup_units()?.base_time / MILLISECOND,
            "profile": to_value(&schedule.profile),
        }),
        table,
    })
}

fn budget_table(budget: &ProtocolBudget) -> Table {
    let mut table = Table::new(["step", "duration_us", "label", "p"]);
    for step in &budget.steps {
        let name = to_value(&step.name).as_str().unwrap_or_default().to_string();
        if step.channels.is_empty() {
            table.push(vec![
                name.clone().into(),
                (step.duration / MICROSECOND).into(),
                "".into(),
                0.0.into(),
            ]);
        }
        for c in &step.channels {
            table.push(vec![
                name.clone().into(),
                (step.duration / MICROSECOND).into(),
                c.label.clone().into(),
                c.probability.into(),
            ]);
        }
    }
    table.push(vec![
        "total".into(),
        (budget.total_time / MICROSECOND).into(),
        "total_failure".into(),
        budget.total_failure.into(),
    ]);
    table
}

fn budget_report(budget: ProtocolBudget) -> Report {
    Report {
        table: budget_table(&budget),
        json: to_value(&budget),
    }
}

fn sweep_report(config: &RunConfig, args: &SweepArgs) -> anyhow::Result<Report> {
    let scheme = if args.scheme == 1 { Scheme::One } else { Scheme::Two };
    let rows =
        sweep(config, &args.param, &args.values, scheme).with_context(|| format!("sweep over `{}`", args.param))?;
    let labels: Vec<String> = rows
        .first()
        .map(|r| r.budget.channels().map(|c| c.label.clone()).collect())
        .unwrap_or_default();
    let mut header = vec![
        args.param.clone(),
        "total_time_us".into(),
        "total_failure".into(),
        "channel_sum".into(),
        "atoms_extracted".into(),
        "extraction_fraction".into(),
    ];
    header.extend(labels.iter().cloned());
    let mut table = Table::new(header);
    let mut json_rows = Vec::new();
    for row in &rows {
        let b = &row.budget;
        let mut cells = vec![
            Cell::Float(row.value),
            (b.total_time / MICROSECOND).into(),
            b.total_failure.into(),
            b.channel_sum.into(),
            b.atoms_extracted.into(),
            b.extraction_fraction.into(),
        ];
        cells.extend(labels.iter().map(|l| Cell::Float(b.channel(l).unwrap_or(0.0))));
        table.push(cells);
        json_rows.push(json!({ "value": row.value, "budget": to_value(b) }));
    }
    Ok(Report {
        json: json!({ "param": args.param, "scheme": args.scheme, "rows": json_rows }),
        table,
    })
}
