//! `--config` files and flag resolution.
//!
//! ```toml
//! num_qubits = 4
//! coupling = "ring"            # line | ring | full | [[0, 1], [1, 2]]
//! mode = "latency"             # fidelity | latency
//! timing = "timing.json"       # relative to this file
//! seed = 7
//! format = "json"              # text | json | csv
//! ```
//!
//! Flags override the file; the file overrides the built-in defaults.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use qal::host::{CouplingSpec, DeviceConfig, Mode};
use qal::latency::TimingModel;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Fidelity,
    Latency,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Fidelity => Mode::Fidelity,
            ModeArg::Latency => Mode::Latency,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub num_qubits: Option<u16>,
    pub coupling: Option<CouplingSpec>,
    pub mode: Option<ModeArg>,
    pub bypass_transpile: Option<bool>,
    pub timing: Option<PathBuf>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub sq_len: Option<u32>,
    pub cq_len: Option<u32>,
    pub queue_high_water: Option<usize>,
}

impl CliConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: CliConfig = toml::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_owned(),
            msg: e.message().to_owned(),
        })?;
        if let (Some(t), Some(dir)) = (&cfg.timing, path.parent()) {
            if t.is_relative() {
                cfg.timing = Some(dir.join(t));
            }
        }
        Ok(cfg)
    }
}

pub fn load_timing(path: &Path) -> Result<TimingModel, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.parse()
        .map_err(|e: qal::latency::TimingConfigError| CliError::Config {
            path: path.to_owned(),
            msg: e.to_string(),
        })
}

/// Values after merging flags over the config file.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub device: DeviceConfig,
    pub format: Format,
    /// Mode given explicitly on the command line.
    pub mode_flag: Option<ModeArg>,
}

pub struct Flags<'a> {
    pub config: Option<&'a Path>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub mode: Option<ModeArg>,
}

pub fn resolve(flags: &Flags<'_>) -> Result<Resolved, CliError> {
    let file = match flags.config {
        Some(p) => CliConfig::load(p)?,
        None => CliConfig::default(),
    };
    let mut device = DeviceConfig::default();
    if let Some(n) = file.num_qubits {
        device.num_qubits = n;
    }
    if let Some(c) = file.coupling {
        device.coupling = c;
    }
    if let Some(b) = file.bypass_transpile {
        device.bypass_transpile = b;
    }
    if let Some(t) = &file.timing {
        device.timing = load_timing(t)?;
    }
    if let Some(n) = file.sq_len {
        device.sq_len = n;
    }
    if let Some(n) = file.cq_len {
        device.cq_len = n;
    }
    if let Some(n) = file.queue_high_water {
        device.queue_high_water = n;
    }
    device.mode = flags.mode.or(file.mode).map_or(Mode::Fidelity, Mode::from);
    device.seed = flags.seed.or(file.seed).unwrap_or(0);
    device.validate()?;
    Ok(Resolved {
        device,
        format: flags.format.or(file.format).unwrap_or_default(),
        mode_flag: flags.mode,
    })
}

/// Short name of the coupling for display.
pub fn coupling_name(spec: &CouplingSpec) -> String {
    match spec {
        CouplingSpec::Preset(p) => serde_json::to_value(p)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default(),
        CouplingSpec::Edges(_) => "custom".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use qal::host::CouplingPreset;

    fn parse(s: &str) -> Result<CliConfig, toml::de::Error> {
        toml::from_str(s)
    }

    #[test]
    fn file_fields() {
        let c = parse("num_qubits = 4\ncoupling = \"ring\"\nmode = \"latency\"\nformat = \"csv\"\n").unwrap();
        assert_eq!(c.num_qubits, Some(4));
        assert_eq!(c.coupling, Some(CouplingSpec::Preset(CouplingPreset::Ring)));
        assert_eq!(c.mode, Some(ModeArg::Latency));
        assert_eq!(c.format, Some(Format::Csv));
        let e = parse("coupling = [[0, 1], [1, 2]]\n").unwrap();
        assert_eq!(e.coupling, Some(CouplingSpec::Edges(vec![(0, 1), (1, 2)])));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(parse("qubits = 4\n").is_err());
    }

    #[test]
    fn flags_win() {
        let r = resolve(&Flags {
            config: None,
            seed: Some(9),
            format: Some(Format::Json),
            mode: Some(ModeArg::Latency),
        })
        .unwrap();
        assert_eq!(r.device.seed, 9);
        assert_eq!(r.device.mode, Mode::Latency);
        assert_eq!(r.format, Format::Json);
    }

    #[test]
    fn names() {
        assert_eq!(coupling_name(&CouplingSpec::Preset(CouplingPreset::Full)), "full");
        assert_eq!(coupling_name(&CouplingSpec::Edges(vec![])), "custom");
    }
}
