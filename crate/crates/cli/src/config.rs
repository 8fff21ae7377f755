//! Experiment configuration: a flat `key = value` document with sections.
//!
//! ```text
//! experiment = transmission_map
//!
//! [lattice]
//! topology = twisted
//! n_cells = 100
//!
//! [grid]
//! e_min = -4
//! e_count = 801
//! ```
//!
//! Root keys are `experiment` and `preset`. A preset applies where it appears,
//! so keys after it override the preset values.

use std::fmt;
use std::str::FromStr;

use ptladder_core::lattice::{LatticeSpec, Topology};
use ptladder_core::transport::LeadSpec;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    SpectrumSweep,
    EpSearch,
    TransmissionMap,
    ZeroEnergyTrace,
    DetangleCheck,
    ModeWeights,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::SpectrumSweep,
        Experiment::EpSearch,
        Experiment::TransmissionMap,
        Experiment::ZeroEnergyTrace,
        Experiment::DetangleCheck,
        Experiment::ModeWeights,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::SpectrumSweep => "spectrum_sweep",
            Experiment::EpSearch => "ep_search",
            Experiment::TransmissionMap => "transmission_map",
            Experiment::ZeroEnergyTrace => "zero_energy_trace",
            Experiment::DetangleCheck => "detangle_check",
            Experiment::ModeWeights => "mode_weights",
        }
    }

    pub fn is_transport(self) -> bool {
        matches!(
            self,
            Experiment::TransmissionMap | Experiment::ZeroEnergyTrace | Experiment::DetangleCheck
        )
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(format!("unknown format `{s}`, expected csv or json")),
        }
    }
}

/// `count` evenly spaced points from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        GridSpec { min, max, count }
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let span = self.max - self.min;
        let last = self.count - 1;
        (0..self.count)
            .map(|i| if i == last { self.max } else { self.min + span * i as f64 / last as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub lattice: LatticeSpec,
    pub leads: LeadSpec,
    pub gamma_grid: GridSpec,
    pub e_grid: GridSpec,
    /// Real-energy filter for `ep_search` and `mode_weights`.
    pub energy_window: Option<(f64, f64)>,
    pub output_path: Option<String>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: Experiment::SpectrumSweep,
            lattice: LatticeSpec::new(Topology::CircularPeriodic, 100),
            leads: LeadSpec::default(),
            gamma_grid: GridSpec::new(0.0, 3.0, 601),
            e_grid: GridSpec::new(-4.0, 4.0, 801),
            energy_window: None,
            output_path: None,
            format: OutputFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line in the document, `None` for command-line input.
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(line: Option<usize>, field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            line,
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

pub const PRESETS: [&str; 7] = ["fig2-cll", "fig2-mll", "fig3", "fig4", "fig6-ladder", "fig6-twisted", "default"];

/// Key/value pairs a preset stands for.
pub fn preset(name: &str) -> Option<&'static [(&'static str, &'static str)]> {
    const SWEEP: [(&str, &str); 5] = [
        ("experiment", "spectrum_sweep"),
        ("lattice.n_cells", "100"),
        ("grid.gamma_min", "0"),
        ("grid.gamma_max", "3"),
        ("grid.gamma_count", "601"),
    ];
    let table: &'static [(&str, &str)] = match name {
        "default" => &[],
        "fig2-cll" => &[
            SWEEP[0], SWEEP[1], SWEEP[2], SWEEP[3], SWEEP[4],
            ("lattice.topology", "circular"),
        ],
        "fig2-mll" => &[
            SWEEP[0], SWEEP[1], SWEEP[2], SWEEP[3], SWEEP[4],
            ("lattice.topology", "moebius"),
        ],
        "fig3" => &[
            ("experiment", "mode_weights"),
            ("lattice.topology", "circular"),
            ("lattice.n_cells", "100"),
            ("grid.gamma_min", "0"),
            ("grid.gamma_max", "1.99"),
            ("grid.gamma_count", "200"),
            ("grid.energy_window_min", "-0.1"),
            ("grid.energy_window_max", "0.1"),
        ],
        "fig4" => &[
            ("experiment", "mode_weights"),
            ("lattice.topology", "moebius"),
            ("lattice.n_cells", "100"),
            ("grid.gamma_min", "0"),
            ("grid.gamma_max", "1.99"),
            ("grid.gamma_count", "200"),
            ("grid.energy_window_min", "-0.1"),
            ("grid.energy_window_max", "0.1"),
        ],
        "fig6-ladder" => &[
            ("experiment", "transmission_map"),
            ("lattice.topology", "ladder"),
            ("lattice.n_cells", "100"),
            ("grid.e_min", "-4"),
            ("grid.e_max", "4"),
            ("grid.e_count", "801"),
            ("grid.gamma_min", "0"),
            ("grid.gamma_max", "3"),
            ("grid.gamma_count", "601"),
        ],
        "fig6-twisted" => &[
            ("experiment", "transmission_map"),
            ("lattice.topology", "twisted"),
            ("lattice.n_cells", "100"),
            ("grid.e_min", "-4"),
            ("grid.e_max", "4"),
            ("grid.e_count", "801"),
            ("grid.gamma_min", "0"),
            ("grid.gamma_max", "3"),
            ("grid.gamma_count", "601"),
        ],
        _ => return None,
    };
    Some(table)
}

fn parse_value<T: FromStr>(line: Option<usize>, key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| ConfigError::new(line, key, format!("cannot parse `{value}`: {e}")))
}

fn parse_optional(line: Option<usize>, key: &str, value: &str) -> Result<Option<f64>, ConfigError> {
    if value == "none" {
        Ok(None)
    } else {
        parse_value(line, key, value).map(Some)
    }
}

/// Applies assignments on top of a config and validates at the end.
#[derive(Debug, Clone, Default)]
pub struct ConfigBuilder {
    config: ExperimentConfig,
    window_min: Option<f64>,
    window_max: Option<f64>,
}

impl ConfigBuilder {
    pub fn new() -> Self {
        ConfigBuilder::default()
    }

    /// Sets one fully qualified key such as `lattice.gamma` or `experiment`.
    pub fn set(&mut self, key: &str, value: &str, line: Option<usize>) -> Result<(), ConfigError> {
        let c = &mut self.config;
        match key {
            "preset" => {
                let table = preset(value).ok_or_else(|| {
                    ConfigError::new(line, key, format!("unknown preset `{value}`, expected one of {PRESETS:?}"))
                })?;
                for (k, v) in table {
                    self.set(k, v, line)?;
                }
            }
            "experiment" => c.experiment = parse_value(line, key, value)?,
            "lattice.topology" => c.lattice.topology = parse_value(line, key, value)?,
            "lattice.n_cells" => c.lattice.n_cells = parse_value(line, key, value)?,
            "lattice.d" => c.lattice.intra_hop = parse_value(line, key, value)?,
            "lattice.t" => c.lattice.inter_hop = parse_value(line, key, value)?,
            "lattice.delta" => c.lattice.delta = parse_value(line, key, value)?,
            "lattice.gamma" => c.lattice.gamma = parse_value(line, key, value)?,
            "leads.v0" => c.leads.v0 = parse_value(line, key, value)?,
            "leads.gamma0" => c.leads.couplings = [parse_value(line, key, value)?; 4],
            "leads.gamma_u_in" => c.leads.couplings[0] = parse_value(line, key, value)?,
            "leads.gamma_d_in" => c.leads.couplings[1] = parse_value(line, key, value)?,
            "leads.gamma_u_out" => c.leads.couplings[2] = parse_value(line, key, value)?,
            "leads.gamma_d_out" => c.leads.couplings[3] = parse_value(line, key, value)?,
            "grid.gamma_min" => c.gamma_grid.min = parse_value(line, key, value)?,
            "grid.gamma_max" => c.gamma_grid.max = parse_value(line, key, value)?,
            "grid.gamma_count" => c.gamma_grid.count = parse_value(line, key, value)?,
            "grid.e_min" => c.e_grid.min = parse_value(line, key, value)?,
            "grid.e_max" => c.e_grid.max = parse_value(line, key, value)?,
            "grid.e_count" => c.e_grid.count = parse_value(line, key, value)?,
            "grid.energy_window_min" => self.window_min = parse_optional(line, key, value)?,
            "grid.energy_window_max" => self.window_max = parse_optional(line, key, value)?,
            "output.path" => c.output_path = (value != "none").then(|| value.to_string()),
            "output.format" => c.format = parse_value(line, key, value)?,
            _ => return Err(ConfigError::new(line, key, "unknown key")),
        }
        Ok(())
    }

    /// Parses a `key=value` override; bare keys are looked up in every section.
    pub fn set_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError::new(None, assignment, "expected key=value"))?;
        let (key, value) = (key.trim(), value.trim());
        let key = qualify(key).ok_or_else(|| ConfigError::new(None, key, "unknown key"))?;
        self.set(&key, value, None)
    }

    /// Reads a whole document.
    pub fn apply_document(&mut self, text: &str) -> Result<(), ConfigError> {
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = Some(idx + 1);
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::new(line, content, "unterminated section header"))?
                    .trim();
                if !["lattice", "leads", "grid", "output"].contains(&name) {
                    return Err(ConfigError::new(line, name, "unknown section"));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ConfigError::new(line, content, "expected key = value"))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::new(line, content, "empty key or value"));
            }
            let full = if section.is_empty() || key == "experiment" || key == "preset" {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            self.set(&full, value, line)?;
        }
        Ok(())
    }

    pub fn build(self) -> Result<ExperimentConfig, ConfigError> {
        let mut c = self.config;
        c.energy_window = match (self.window_min, self.window_max) {
            (None, None) => None,
            (Some(lo), Some(hi)) => Some((lo, hi)),
            _ => {
                return Err(ConfigError::new(
                    None,
                    "grid.energy_window_min",
                    "energy window needs both bounds",
                ))
            }
        };
        validate(&c)?;
        Ok(c)
    }
}

const KEYS: [&str; 23] = [
    "experiment",
    "preset",
    "lattice.topology",
    "lattice.n_cells",
    "lattice.d",
    "lattice.t",
    "lattice.delta",
    "lattice.gamma",
    "leads.v0",
    "leads.gamma0",
    "leads.gamma_u_in",
    "leads.gamma_d_in",
    "leads.gamma_u_out",
    "leads.gamma_d_out",
    "grid.gamma_min",
    "grid.gamma_max",
    "grid.gamma_count",
    "grid.e_min",
    "grid.e_max",
    "grid.e_count",
    "grid.energy_window_min",
    "grid.energy_window_max",
    "output.path",
];

fn qualify(key: &str) -> Option<String> {
    if key == "output.format" || key == "format" {
        return Some("output.format".into());
    }
    if KEYS.contains(&key) {
        return Some(key.to_string());
    }
    let mut hits = KEYS.iter().filter(|k| k.rsplit('.').next() == Some(key));
    match (hits.next(), hits.next()) {
        (Some(k), None) => Some(k.to_string()),
        _ => None,
    }
}

fn check_grid(name: &str, g: &GridSpec, min_count: usize) -> Result<(), ConfigError> {
    if !g.min.is_finite() || !g.max.is_finite() {
        return Err(ConfigError::new(None, format!("grid.{name}_min"), "grid bounds must be finite"));
    }
    if g.count < min_count {
        return Err(ConfigError::new(
            None,
            format!("grid.{name}_count"),
            format!("needs at least {min_count} points, got {}", g.count),
        ));
    }
    if g.min > g.max || (g.count > 1 && g.min == g.max) {
        return Err(ConfigError::new(
            None,
            format!("grid.{name}_max"),
            format!("max {} must exceed min {}", g.max, g.min),
        ));
    }
    Ok(())
}

fn validate(c: &ExperimentConfig) -> Result<(), ConfigError> {
    let lattice_field = if c.lattice.n_cells % 2 == 1 && c.lattice.topology.is_twisted() {
        "lattice.n_cells"
    } else {
        "lattice"
    };
    c.lattice
        .validate()
        .map_err(|e| ConfigError::new(None, lattice_field, e.to_string()))?;

    match c.experiment {
        Experiment::TransmissionMap | Experiment::ZeroEnergyTrace
            if !matches!(c.lattice.topology, Topology::OpenLadder | Topology::TwistedOpen) =>
        {
            return Err(ConfigError::new(
                None,
                "lattice.topology",
                format!("{} needs an open topology (ladder or twisted), got {}", c.experiment.name(), c.lattice.topology),
            ));
        }
        Experiment::DetangleCheck if c.lattice.topology != Topology::OpenLadder => {
            return Err(ConfigError::new(
                None,
                "lattice.topology",
                format!("detangle_check needs topology ladder, got {}", c.lattice.topology),
            ));
        }
        _ => {}
    }

    if c.experiment.is_transport() {
        c.leads.validate().map_err(|e| ConfigError::new(None, "leads", e.to_string()))?;
        let uses_energy_grid = c.experiment != Experiment::ZeroEnergyTrace;
        if uses_energy_grid && (c.e_grid.min.abs() >= c.leads.v0 || c.e_grid.max.abs() >= c.leads.v0) {
            return Err(ConfigError::new(
                None,
                "grid.e_max",
                format!("energies must lie inside the lead band |E| < v0 = {}", c.leads.v0),
            ));
        }
    }
    if c.experiment == Experiment::DetangleCheck {
        let [ui, _, uo, _] = c.leads.couplings;
        if !c.leads.is_symmetric() && !(ui == 0.0 && uo == 0.0) {
            return Err(ConfigError::new(
                None,
                "leads",
                "detangle_check needs symmetric contacts or gamma_u_in = gamma_u_out = 0",
            ));
        }
    }
    if c.experiment == Experiment::ModeWeights && c.lattice.intra_hop == 0.0 {
        return Err(ConfigError::new(None, "lattice.d", "mode_weights needs d != 0"));
    }

    match c.experiment {
        Experiment::TransmissionMap => {
            check_grid("e", &c.e_grid, 1)?;
            check_grid("gamma", &c.gamma_grid, 1)?;
        }
        Experiment::DetangleCheck => check_grid("e", &c.e_grid, 3)?,
        Experiment::EpSearch => check_grid("gamma", &c.gamma_grid, 2)?,
        _ => check_grid("gamma", &c.gamma_grid, 1)?,
    }
    if let Some((lo, hi)) = c.energy_window {
        if !(lo <= hi) {
            return Err(ConfigError::new(None, "grid.energy_window_max", "window max must be >= min"));
        }
    }
    Ok(())
}

/// Parses a configuration document and applies defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut b = ConfigBuilder::new();
    b.apply_document(text)?;
    b.build()
}

impl ExperimentConfig {
    /// Canonical document that [`parse_config`] maps back to `self`.
    pub fn echo(&self) -> String {
        let l = &self.lattice;
        let [ui, di, uo, d_o] = self.leads.couplings;
        let (wlo, whi) = match self.energy_window {
            Some((lo, hi)) => (lo.to_string(), hi.to_string()),
            None => ("none".into(), "none".into()),
        };
        format!(
            "experiment = {}\n\n\
             [lattice]\ntopology = {}\nn_cells = {}\nd = {}\nt = {}\ndelta = {}\ngamma = {}\n\n\
             [leads]\nv0 = {}\ngamma_u_in = {ui}\ngamma_d_in = {di}\ngamma_u_out = {uo}\ngamma_d_out = {d_o}\n\n\
             [grid]\ngamma_min = {}\ngamma_max = {}\ngamma_count = {}\ne_min = {}\ne_max = {}\ne_count = {}\n\
             energy_window_min = {wlo}\nenergy_window_max = {whi}\n\n\
             [output]\npath = {}\nformat = {}\n",
            self.experiment.name(),
            l.topology.key(),
            l.n_cells,
            l.intra_hop,
            l.inter_hop,
            l.delta,
            l.gamma,
            self.leads.v0,
            self.gamma_grid.min,
            self.gamma_grid.max,
            self.gamma_grid.count,
            self.e_grid.min,
            self.e_grid.max,
            self.e_grid.count,
            self.output_path.as_deref().unwrap_or("none"),
            self.format.extension(),
        )
    }

    /// Output path, defaulting to `<experiment>.<format>`.
    pub fn resolved_path(&self) -> String {
        self.output_path
            .clone()
            .unwrap_or_else(|| format!("{}.{}", self.experiment.name(), self.format.extension()))
    }
}
