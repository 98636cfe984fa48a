//! Run configuration: a TOML document with one section per protocol step.
//!
//! Every field has a default, so an empty file is a complete configuration.
//! Rule-valued fields accept either a number or a rule string
//! (`"delta/4"`, `"5/omega0"`, `"optimize"`, `"calibrate"`).

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{solve_intensity_for_delta, SuperlatticeConfig};
use crate::pulse::GaussianPulse;
use crate::removal::DrivePolicy;
use crate::speedup::{calibrate_adiabaticity, calibrate_effective_linewidth, DoubleGaussianPotential, ScatteringModel};
use crate::stark::{optimize_lpol_wavelength, HyperfineComposition, Polarization, SearchBand};
use crate::transfer::Direction;
use crate::units::{AtomSpecies, UnitSystem, MICROMETER, MICROSECOND, MILLISECOND, NANOMETER};

/// A number or a named rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Setting {
    Value(f64),
    Rule(String),
}

impl Setting {
    fn rule(name: &str) -> Self {
        Setting::Rule(name.to_string())
    }

    /// The explicit value, or `None` when `rule` is named; any other rule is
    /// a configuration error at `path`.
    fn value_or_rule(&self, path: &str, rule: &str) -> Result<Option<f64>> {
        match self {
            Setting::Value(v) => Ok(Some(*v)),
            Setting::Rule(r) if r == rule => Ok(None),
            Setting::Rule(r) => Err(Error::config(
                path,
                format!("unknown rule `{r}` (expected a number or \"{rule}\")"),
            )),
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Setting::Value(v) => write!(f, "{v}"),
            Setting::Rule(r) => write!(f, "{r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeSection {
    pub spol_wavelength_nm: f64,
    /// `E_R`
    pub spol_depth: f64,
    pub period: usize,
    /// nm, or `"optimize"`
    pub lpol_wavelength_nm: Setting,
    pub lpol_phase_nm: f64,
    pub polarization: Polarization,
    /// Target site detuning `δ`, `E_R`.
    pub site_detuning: f64,
    /// Vibrational excitation allowed per LPOL ramp.
    pub ramp_target_excitation: f64,
    pub total_sites: u64,
    pub dimensions: u8,
}

impl Default for LatticeSection {
    fn default() -> Self {
        Self {
            spol_wavelength_nm: 850.0,
            spol_depth: 50.0,
            period: 3,
            lpol_wavelength_nm: Setting::Value(787.6),
            lpol_phase_nm: 0.0,
            polarization: Polarization::SigmaPlus,
            site_detuning: 52.0,
            ramp_target_excitation: 1e-4,
            total_sites: 300,
            dimensions: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseSection {
    /// `ω₀` in `E_R/ħ`, or `"delta/4"`
    pub envelope_width: Setting,
    /// `t_f` in `ħ/E_R`, or `"5/omega0"`
    pub cutoff: Setting,
}

impl Default for PulseSection {
    fn default() -> Self {
        Self {
            envelope_width: Setting::rule("delta/4"),
            cutoff: Setting::rule("5/omega0"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemovalSection {
    /// `U₀`, `E_R`
    pub trap_depth: f64,
    pub target_duration_us: f64,
    pub extension_factor: f64,
    pub hot_atom_lifetime_us: f64,
    pub tunneling_time_ms: f64,
}

impl Default for RemovalSection {
    fn default() -> Self {
        Self {
            trap_depth: 50.0,
            target_duration_us: 1.0,
            extension_factor: 1.1,
            hot_atom_lifetime_us: 1.0,
            tunneling_time_ms: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransferSection {
    pub adiabaticity: f64,
    /// `ϖ(T)/ϖ(0)`
    pub frequency_ratio: f64,
    pub direction: Direction,
    pub microtrap_waist_um: f64,
    pub samples: usize,
}

impl Default for TransferSection {
    fn default() -> Self {
        Self {
            adiabaticity: 0.005,
            frequency_ratio: 4.0,
            direction: Direction::Deepen,
            microtrap_waist_um: 1.0,
            samples: 2001,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScatteringSection {
    pub detuning_ghz: f64,
    /// 1/s, or `"calibrate"`
    pub effective_linewidth: Setting,
    pub calibration_probability: f64,
    pub calibration_duration_ms: f64,
}

impl Default for ScatteringSection {
    fn default() -> Self {
        Self {
            detuning_ghz: -780.0,
            effective_linewidth: Setting::rule("calibrate"),
            calibration_probability: 1e-2,
            calibration_duration_ms: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeedupSection {
    /// `V_c` in `ħ²/(2mσ_c²)`
    pub confine_depth: f64,
    /// `V_f` in `ħ²/(2mσ_c²)`
    pub focus_depth: f64,
    pub confine_waist_um: f64,
    /// `σ_f/σ_c`
    pub focus_waist_ratio: f64,
    /// `a_f/σ_c`
    pub final_displacement: f64,
    /// `ξ̄`, or `"calibrate"`
    pub adiabaticity: Setting,
    pub target_excitation: f64,
    pub basis_size: usize,
    pub grid_points: usize,
    pub cycles: u32,
    pub per_cycle_fraction: f64,
    pub scattering: ScatteringSection,
}

impl Default for SpeedupSection {
    fn default() -> Self {
        Self {
            confine_depth: 400.0,
            focus_depth: 560.0,
            confine_waist_um: 0.93,
            focus_waist_ratio: 0.5,
            final_displacement: 2.0,
            adiabaticity: Setting::rule("calibrate"),
            target_excitation: 7e-3,
            basis_size: 11,
            grid_points: 401,
            cycles: 5,
            per_cycle_fraction: 1.0 / 3.0,
            scattering: ScatteringSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetSection {
    /// Report every failure channel as zero.
    pub zero_channels: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Rows in trajectory CSVs.
    pub trajectory_samples: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            trajectory_samples: 401,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub species: AtomSpecies,
    pub composition: HyperfineComposition,
    pub lattice: LatticeSection,
    pub pulse: PulseSection,
    pub removal: RemovalSection,
    pub transfer: TransferSection,
    pub speedup: SpeedupSection,
    pub budget: BudgetSection,
    pub output: OutputSection,
}

fn parse_error(path: &str, err: toml::de::Error) -> Error {
    let location = err
        .span()
        .map(|s| format!(" (bytes {}..{})", s.start, s.end))
        .unwrap_or_default();
    Error::config(path, format!("{}{location}", err.message()))
}

impl RunConfig {
    /// Parses a TOML document and applies `overrides` (`dotted.key=value`).
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            let (line, col) = e.span().map(|s| line_col(text, s.start)).unwrap_or((0, 0));
            Error::config(format!("line {line}, column {col}"), e.message().to_string())
        })?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let config: RunConfig =
            RunConfig::deserialize(toml::Value::Table(doc)).map_err(|e| parse_error("<document>", e))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |path: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(path, format!("must be positive, got {v}")))
            }
        };
        let probability = |path: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::config(path, format!("must lie in [0, 1], got {v}")))
            }
        };
        self.species
            .validate()
            .map_err(|e| Error::config("species", e.to_string()))?;
        self.composition
            .validate()
            .map_err(|e| Error::config("composition", e.to_string()))?;

        let l = &self.lattice;
        positive("lattice.spol_wavelength_nm", l.spol_wavelength_nm)?;
        positive("lattice.spol_depth", l.spol_depth)?;
        if l.period < 3 {
            return Err(Error::config(
                "lattice.period",
                format!("must be at least 3, got {}", l.period),
            ));
        }
        if let Some(v) = l
            .lpol_wavelength_nm
            .value_or_rule("lattice.lpol_wavelength_nm", "optimize")?
        {
            positive("lattice.lpol_wavelength_nm", v)?;
        }
        if !(l.site_detuning >= 0.0) {
            return Err(Error::config(
                "lattice.site_detuning",
                format!("must be non-negative, got {}", l.site_detuning),
            ));
        }
        if !(l.ramp_target_excitation > 0.0 && l.ramp_target_excitation < 0.1) {
            return Err(Error::config(
                "lattice.ramp_target_excitation",
                format!("must lie in (0, 0.1), got {}", l.ramp_target_excitation),
            ));
        }
        if l.total_sites < l.period as u64 {
            return Err(Error::config("lattice.total_sites", "must be at least the period"));
        }
        if !matches!(l.dimensions, 1 | 2) {
            return Err(Error::config(
                "lattice.dimensions",
                format!("must be 1 or 2, got {}", l.dimensions),
            ));
        }

        if let Some(v) = self
            .pulse
            .envelope_width
            .value_or_rule("pulse.envelope_width", "delta/4")?
        {
            positive("pulse.envelope_width", v)?;
        }
        if let Some(v) = self.pulse.cutoff.value_or_rule("pulse.cutoff", "5/omega0")? {
            positive("pulse.cutoff", v)?;
        }

        let r = &self.removal;
        if !(r.trap_depth >= 0.0) {
            return Err(Error::config(
                "removal.trap_depth",
                format!("must be non-negative, got {}", r.trap_depth),
            ));
        }
        positive("removal.target_duration_us", r.target_duration_us)?;
        if !(r.extension_factor > 1.0) {
            return Err(Error::config("removal.extension_factor", "must exceed 1"));
        }
        if !(r.hot_atom_lifetime_us >= 0.0) {
            return Err(Error::config("removal.hot_atom_lifetime_us", "must be non-negative"));
        }
        positive("removal.tunneling_time_ms", r.tunneling_time_ms)?;

        let t = &self.transfer;
        if !(t.adiabaticity > 0.0 && t.adiabaticity < 0.1) {
            return Err(Error::config(
                "transfer.adiabaticity",
                format!("must lie in (0, 0.1), got {}", t.adiabaticity),
            ));
        }
        positive("transfer.frequency_ratio", t.frequency_ratio)?;
        positive("transfer.microtrap_waist_um", t.microtrap_waist_um)?;
        if t.samples < 2 {
            return Err(Error::config("transfer.samples", "must be at least 2"));
        }

        let s = &self.speedup;
        if !(s.confine_depth >= 0.0) {
            return Err(Error::config("speedup.confine_depth", "must be non-negative"));
        }
        if !(s.focus_depth >= 0.0) {
            return Err(Error::config("speedup.focus_depth", "must be non-negative"));
        }
        positive("speedup.confine_waist_um", s.confine_waist_um)?;
        positive("speedup.focus_waist_ratio", s.focus_waist_ratio)?;
        if !(s.final_displacement >= 0.0) {
            return Err(Error::config("speedup.final_displacement", "must be non-negative"));
        }
        if let Some(v) = s.adiabaticity.value_or_rule("speedup.adiabaticity", "calibrate")? {
            if !(v >= 0.0) {
                return Err(Error::config("speedup.adiabaticity", "must be non-negative"));
            }
        }
        probability("speedup.target_excitation", s.target_excitation)?;
        if s.basis_size < 2 {
            return Err(Error::config("speedup.basis_size", "must be at least 2"));
        }
        if s.grid_points < 3 {
            return Err(Error::config("speedup.grid_points", "must be at least 3"));
        }
        probability("speedup.per_cycle_fraction", s.per_cycle_fraction)?;
        if s.scattering.detuning_ghz == 0.0 || !s.scattering.detuning_ghz.is_finite() {
            return Err(Error::config("speedup.scattering.detuning_ghz", "must be nonzero"));
        }
        if let Some(v) = s
            .scattering
            .effective_linewidth
            .value_or_rule("speedup.scattering.effective_linewidth", "calibrate")?
        {
            if !(v >= 0.0) {
                return Err(Error::config(
                    "speedup.scattering.effective_linewidth",
                    "must be non-negative",
                ));
            }
        }
        probability(
            "speedup.scattering.calibration_probability",
            s.scattering.calibration_probability,
        )?;
        positive(
            "speedup.scattering.calibration_duration_ms",
            s.scattering.calibration_duration_ms,
        )?;
        if self.output.trajectory_samples < 2 {
            return Err(Error::config("output.trajectory_samples", "must be at least 2"));
        }
        Ok(())
    }

    pub fn lattice_units(&self) -> Result<UnitSystem> {
        UnitSystem::lattice(&self.species, self.lattice.spol_wavelength_nm * NANOMETER)
    }

    /// Superlattice geometry with the LPOL wavelength resolved and the LPOL
    /// intensity solved for the configured site detuning.
    pub fn superlattice(&self) -> Result<SuperlatticeConfig> {
        let l = &self.lattice;
        let wavelength = match l
            .lpol_wavelength_nm
            .value_or_rule("lattice.lpol_wavelength_nm", "optimize")?
        {
            Some(nm) => nm * NANOMETER,
            None => {
                optimize_lpol_wavelength(
                    &SearchBand::between_lines(&self.species),
                    &self.species,
                    &self.composition,
                )?
                .wavelength
            }
        };
        let base = SuperlatticeConfig {
            spol_wavelength: l.spol_wavelength_nm * NANOMETER,
            spol_depth: l.spol_depth,
            pattern_period: l.period,
            lpol_wavelength: wavelength,
            lpol_intensity: 0.0,
            lpol_phase: l.lpol_phase_nm * NANOMETER,
            polarization: l.polarization,
            species: self.species,
            composition: self.composition,
        };
        let intensity = solve_intensity_for_delta(&base, l.site_detuning)?;
        Ok(base.with_intensity(intensity))
    }

    /// π pulse for the configured site detuning (`E_R/ħ`, `ħ/E_R`).
    pub fn pulse(&self) -> Result<GaussianPulse> {
        let delta = self.lattice.site_detuning;
        let width = match self
            .pulse
            .envelope_width
            .value_or_rule("pulse.envelope_width", "delta/4")?
        {
            Some(w) => w,
            None if delta > 0.0 => delta / 4.0,
            None => {
                return Err(Error::config(
                    "pulse.envelope_width",
                    "rule delta/4 needs a positive site detuning",
                ))
            }
        };
        let cutoff = self
            .pulse
            .cutoff
            .value_or_rule("pulse.cutoff", "5/omega0")?
            .unwrap_or(5.0 / width);
        GaussianPulse::pi_pulse(width, cutoff)
    }

    pub fn drive_policy(&self) -> DrivePolicy {
        DrivePolicy {
            target_photons: self.removal.trap_depth / 2.0,
            target_duration: self.removal.target_duration_us * MICROSECOND,
            extension_factor: self.removal.extension_factor,
        }
    }

    pub fn speedup_potential(&self) -> DoubleGaussianPotential {
        DoubleGaussianPotential {
            confine_depth: self.speedup.confine_depth,
            focus_depth: self.speedup.focus_depth,
            confine_waist: 1.0,
            focus_waist: self.speedup.focus_waist_ratio,
            displacement: 0.0,
        }
    }

    pub fn speedup_units(&self) -> Result<UnitSystem> {
        UnitSystem::kinetic(self.species.mass, self.speedup.confine_waist_um * MICROMETER)
    }

    pub fn speedup_adiabaticity(&self) -> Result<f64> {
        match self
            .speedup
            .adiabaticity
            .value_or_rule("speedup.adiabaticity", "calibrate")?
        {
            Some(v) => Ok(v),
            None => calibrate_adiabaticity(self.speedup.target_excitation),
        }
    }

    /// Scattering model of the focused beam; a `"calibrate"` linewidth is
    /// chosen so that the calibration probability is reached after the
    /// calibration duration at the focus depth.
    pub fn scattering_model(&self) -> Result<ScatteringModel> {
        let sc = &self.speedup.scattering;
        let detuning = 2.0 * std::f64::consts::PI * sc.detuning_ghz * 1e9;
        let linewidth = match sc
            .effective_linewidth
            .value_or_rule("speedup.scattering.effective_linewidth", "calibrate")?
        {
            Some(v) => v,
            None => calibrate_effective_linewidth(
                sc.calibration_probability,
                sc.calibration_duration_ms * MILLISECOND,
                self.speedup_units()?.energy_to_si(self.speedup.focus_depth),
                detuning,
            )?,
        };
        Ok(ScatteringModel {
            effective_linewidth: linewidth,
            detuning,
        })
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, col)
}

/// Dotted paths of every leaf in the default configuration.
pub fn valid_paths() -> Vec<String> {
    fn walk(prefix: &str, table: &toml::Table, out: &mut Vec<String>) {
        for (k, v) in table {
            let path = if prefix.is_empty() {
                k.clone()
            } else {
                format!("{prefix}.{k}")
            };
            match v {
                toml::Value::Table(t) => walk(&path, t, out),
                _ => out.push(path),
            }
        }
    }
    let default: toml::Table = RunConfig::default().to_toml().parse().expect("default config parses");
    let mut out = Vec::new();
    walk("", &default, &mut out);
    out
}

/// Leaf paths that accept a number: numeric defaults and rule-or-number fields.
pub fn numeric_paths() -> Vec<String> {
    let default = RunConfig::default();
    valid_paths()
        .into_iter()
        .filter(|p| set_numeric(&default, p, 1.0).is_ok())
        .collect()
}

/// Copy of `config` with the numeric field at `path` set to `value`.
/// Integer fields require an integral value. The copy is not validated.
pub fn set_numeric(config: &RunConfig, path: &str, value: f64) -> Result<RunConfig> {
    let mut doc: toml::Table = config.to_toml().parse().expect("serialized config parses");
    let default: toml::Table = RunConfig::default().to_toml().parse().expect("default config parses");
    let is_integer = path
        .split('.')
        .try_fold(&toml::Value::Table(default), |v, k| v.get(k))
        .is_some_and(|v| v.is_integer());
    let literal = if is_integer {
        if value.fract() != 0.0 || value < 0.0 {
            return Err(Error::config(
                path,
                format!("needs a non-negative integer, got {value}"),
            ));
        }
        format!("{value:.0}")
    } else {
        format!("{value:?}")
    };
    apply_override(&mut doc, &format!("{path}={literal}"))?;
    RunConfig::deserialize(toml::Value::Table(doc)).map_err(|e| parse_error(path, e))
}

/// Parses a right-hand side as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or(toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Sets `dotted.key=value` in a TOML document, rejecting unknown paths.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::config(assignment, "override must have the form dotted.key=value"))?;
    let path = path.trim();
    let valid = valid_paths();
    if !valid.iter().any(|p| p == path) {
        return Err(Error::config(
            path,
            format!("unknown key; valid keys are: {}", valid.join(", ")),
        ));
    }
    let mut table = doc;
    let keys: Vec<&str> = path.split('.').collect();
    for key in &keys[..keys.len() - 1] {
        let entry = table
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(path, format!("`{key}` is not a section")))?;
    }
    table.insert(keys[keys.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = RunConfig::from_toml_str("", &[]).unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.lattice.site_detuning, 52.0);
        assert_eq!(c.transfer.adiabaticity, 0.005);
        assert_eq!(c.lattice.period, 3);
    }

    #[test]
    fn period_two_is_rejected_with_path() {
        match RunConfig::from_toml_str("[lattice]\nperiod = 2\n", &[]) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "lattice.period"),
            other => panic!("{other:?}"),
        }
        match RunConfig::from_toml_str("", &["lattice.spol_depth=-3".into()]) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "lattice.spol_depth"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_toml_str("[lattice]\nperiodd = 3\n", &[]).unwrap_err();
        assert!(err.to_string().contains("periodd"), "{err}");
        let err = RunConfig::from_toml_str("", &["lattice.nope=1".into()]).unwrap_err();
        assert!(err.to_string().contains("lattice.period"));
    }

    #[test]
    fn parse_errors_report_line_and_column() {
        match RunConfig::from_toml_str("[lattice]\nperiod = = 3\n", &[]) {
            Err(Error::Config { path, .. }) => assert!(path.starts_with("line 2"), "{path}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trip() {
        let mut c = RunConfig::default();
        c.lattice.lpol_wavelength_nm = Setting::rule("optimize");
        c.speedup.adiabaticity = Setting::Value(0.03);
        c.transfer.direction = Direction::Shallow;
        c.transfer.frequency_ratio = 0.5;
        let back = RunConfig::from_toml_str(&c.to_toml(), &[]).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn overrides_accept_numbers_and_rules() {
        let c = RunConfig::from_toml_str(
            "",
            &[
                "transfer.adiabaticity=0.0025".into(),
                "lattice.lpol_wavelength_nm=optimize".into(),
                "pulse.envelope_width=10".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.transfer.adiabaticity, 0.0025);
        assert_eq!(c.lattice.lpol_wavelength_nm, Setting::rule("optimize"));
        assert_eq!(c.pulse.envelope_width, Setting::Value(10.0));
        assert!(RunConfig::from_toml_str("", &["pulse.cutoff=sometimes".into()]).is_err());
    }

    #[test]
    fn rules_resolve() {
        let c = RunConfig::default();
        let p = c.pulse().unwrap();
        assert_eq!(p.envelope_width, 13.0);
        assert!((p.cutoff - 5.0 / 13.0).abs() < 1e-15);
        let xi = c.speedup_adiabaticity().unwrap();
        assert!((4.0 * xi * xi - 7e-3).abs() < 1e-15);
        assert!(c.scattering_model().unwrap().effective_linewidth > 0.0);
    }
}
