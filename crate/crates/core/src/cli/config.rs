//! Run configuration: defaults, figure presets, an optional JSON file and
//! command-line flags, applied in that order.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::model::SystemParams;
use crate::parallel::ExecMode;
use crate::OMEGA_A;

/// Coupling at the avoided crossing of levels 3 and 4.
pub const ANTICROSSING_G: f64 = 0.2;
/// Coupling at the crossing of levels 2 and 3.
pub const CROSSING_G: f64 = 0.7056;
/// Drive amplitude shared by all spectrum presets, in `ω_a`.
pub const PRESET_EPSILON_WA: f64 = 8.0;
/// `(κ, γ)` in `ω_a` for panels a–f.
const PANEL_RATES_WA: [(f64, f64); 6] = [(2.0, 0.1), (2.0, 0.02), (2.0, 0.01), (1.0, 0.02), (4.0, 0.02), (6.0, 0.02)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig4a,
    Fig4b,
    Fig4c,
    Fig4d,
    Fig4e,
    Fig4f,
    Fig6a,
    Fig6b,
    Fig6c,
    Fig6d,
    Fig6e,
    Fig6f,
}

impl Preset {
    pub const ALL: [Preset; 12] = [
        Self::Fig4a,
        Self::Fig4b,
        Self::Fig4c,
        Self::Fig4d,
        Self::Fig4e,
        Self::Fig4f,
        Self::Fig6a,
        Self::Fig6b,
        Self::Fig6c,
        Self::Fig6d,
        Self::Fig6e,
        Self::Fig6f,
    ];

    pub fn name(self) -> &'static str {
        const NAMES: [&str; 12] = [
            "fig4a", "fig4b", "fig4c", "fig4d", "fig4e", "fig4f", "fig6a", "fig6b", "fig6c", "fig6d", "fig6e", "fig6f",
        ];
        NAMES[self as usize]
    }

    fn panel(self) -> usize {
        self as usize % 6
    }

    pub fn g(self) -> f64 {
        if (self as usize) < 6 {
            ANTICROSSING_G
        } else {
            CROSSING_G
        }
    }

    pub fn params(self) -> SystemParams {
        let (kappa, gamma) = PANEL_RATES_WA[self.panel()];
        SystemParams {
            g: self.g(),
            epsilon: PRESET_EPSILON_WA * OMEGA_A,
            kappa: kappa * OMEGA_A,
            gamma: gamma * OMEGA_A,
            ..SystemParams::default()
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Physical overrides. Plain names are in units of `ω_q`, `_wa` names in
/// units of `ω_a`; giving both spellings of one quantity is an error.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamOverrides {
    /// Cavity frequency over qubit frequency.
    #[arg(long = "wc-ratio")]
    pub wc_ratio: Option<f64>,
    /// Qubit mixing angle in radians.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Qubit–cavity coupling.
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long = "kappa_wa")]
    pub kappa_wa: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long = "gamma_wa")]
    pub gamma_wa: Option<f64>,
    /// Drive amplitude.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long = "eps_wa")]
    pub eps_wa: Option<f64>,
    /// Drive frequency; defaults to the ground → level-3 transition.
    #[arg(long = "omega-l")]
    pub omega_l: Option<f64>,
    #[arg(long = "omega-l_wa")]
    pub omega_l_wa: Option<f64>,
    /// Fock-space cutoff.
    #[arg(long)]
    pub nmax: Option<usize>,
}

fn pick(name: &str, plain: Option<f64>, wa: Option<f64>) -> Result<Option<f64>, CliError> {
    match (plain, wa) {
        (Some(_), Some(_)) => Err(CliError::Config(format!("both {name} and {name}_wa given"))),
        (Some(v), None) => Ok(Some(v)),
        (None, Some(v)) => Ok(Some(v * OMEGA_A)),
        (None, None) => Ok(None),
    }
}

impl ParamOverrides {
    pub fn apply(&self, p: &mut SystemParams) -> Result<(), CliError> {
        if let Some(v) = self.wc_ratio {
            p.omega_c = v * p.omega_q;
        }
        if let Some(v) = self.theta {
            p.theta = v;
        }
        if let Some(v) = self.g {
            p.g = v;
        }
        if let Some(v) = pick("kappa", self.kappa, self.kappa_wa)? {
            p.kappa = v;
        }
        if let Some(v) = pick("gamma", self.gamma, self.gamma_wa)? {
            p.gamma = v;
        }
        if let Some(v) = pick("eps", self.eps, self.eps_wa)? {
            p.epsilon = v;
        }
        if let Some(v) = pick("omega-l", self.omega_l, self.omega_l_wa)? {
            p.omega_l = Some(v);
        }
        if let Some(v) = self.nmax {
            p.n_max = v;
        }
        Ok(())
    }
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<Preset>,
    pub params: ParamOverrides,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Figure parameter set.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// JSON file with `preset` and `params` keys; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub params: ParamOverrides,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    /// Disable data parallelism.
    #[arg(long)]
    pub serial: bool,
}

/// Fully resolved inputs of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub preset: Option<Preset>,
    pub params: SystemParams,
    /// Subcommand-specific settings, in insertion order.
    pub options: serde_json::Map<String, serde_json::Value>,
    pub format: Format,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub mode: ExecMode,
    /// Whether the coupling was fixed by a preset, file or flag.
    #[serde(skip)]
    pub g_explicit: bool,
}

impl RunConfig {
    pub fn resolve(command: &str, common: &CommonArgs) -> Result<Self, CliError> {
        let file = match &common.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let preset = common.preset.or(file.preset);
        let mut params = preset.map(Preset::params).unwrap_or_default();
        file.params.apply(&mut params)?;
        common.params.apply(&mut params)?;
        params
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(Self {
            command: command.to_owned(),
            preset,
            params,
            options: serde_json::Map::new(),
            format: common.format,
            out: common.out.clone(),
            mode: if common.serial { ExecMode::Serial } else { ExecMode::Parallel },
            g_explicit: preset.is_some() || file.params.g.is_some() || common.params.g.is_some(),
        })
    }

    pub fn option(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.options.insert(key.to_owned(), v);
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}
