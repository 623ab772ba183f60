use std::path::{Path, PathBuf};

use mdp_core::{build_forest, FiniteMdp};
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Single-machine scale.
    Desk,
    /// Large widths and long horizons.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestSpec {
    pub n_states: usize,
    pub r_wait_top: f64,
    pub r_cut_top: f64,
    pub p_fire: f64,
}

impl Default for ForestSpec {
    fn default() -> Self {
        ForestSpec { n_states: 3, r_wait_top: 4.0, r_cut_top: 2.0, p_fire: 0.1 }
    }
}

/// Where the MDP comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MdpSource {
    Forest { forest: ForestSpec },
    File { file: PathBuf },
    Inline(FiniteMdp),
}

impl MdpSource {
    pub fn load(&self) -> Result<FiniteMdp> {
        match self {
            MdpSource::Forest { forest: f } => Ok(build_forest(f.n_states, f.r_wait_top, f.r_cut_top, f.p_fire)?),
            MdpSource::File { file } => {
                let text = std::fs::read_to_string(file)
                    .map_err(|e| CliError::config("mdp", format!("{}: {e}", file.display())))?;
                Ok(FiniteMdp::from_json(&text)?)
            }
            MdpSource::Inline(m) => Ok(m.clone()),
        }
    }
}

/// Every knob of a run. Unset fields fall back to the preset; `beta` has no
/// fallback.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mdp: Option<MdpSource>,
    pub beta: Option<f64>,
    pub width_n: Option<usize>,
    pub widths: Option<Vec<usize>>,
    pub t_end: Option<f64>,
    pub h_ode: Option<f64>,
    pub mc_samples: Option<usize>,
    pub trials: Option<usize>,
    pub betas: Option<Vec<f64>>,
    pub seed: Option<u64>,
    /// Expansion order for `limit` and `residual`.
    pub order: Option<usize>,
    pub out: Option<PathBuf>,
    pub preset: Option<Preset>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($f:ident),*) => {
        RunConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::config("config", e.to_string()))
    }

    /// Fields set in `top` win.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        let base = self;
        overlay!(base, top, mdp, beta, width_n, widths, t_end, h_ode, mc_samples, trials, betas, seed, order, out, preset)
    }

    fn preset_defaults(p: Preset) -> RunConfig {
        match p {
            Preset::Desk => RunConfig {
                width_n: Some(2000),
                widths: Some(vec![100, 400, 1600]),
                t_end: Some(5.0),
                h_ode: Some(0.01),
                mc_samples: Some(200_000),
                trials: Some(30),
                betas: Some(vec![0.55, 0.75, 0.95]),
                ..RunConfig::default()
            },
            Preset::Full => RunConfig {
                width_n: Some(10_000),
                widths: Some(vec![1000, 3000, 10_000]),
                t_end: Some(100.0),
                h_ode: Some(0.01),
                mc_samples: Some(1_000_000),
                trials: Some(100),
                betas: Some(vec![0.55, 0.75, 0.95]),
                ..RunConfig::default()
            },
        }
    }

    /// Fills unset fields from the preset and checks every invariant that
    /// does not depend on the subcommand.
    pub fn resolve(self) -> Result<RunConfig> {
        let preset = self.preset.unwrap_or(Preset::Desk);
        let mut c = RunConfig::preset_defaults(preset).overlay(self);
        c.preset = Some(preset);
        c.mdp.get_or_insert(MdpSource::Forest { forest: ForestSpec::default() });
        c.seed.get_or_insert(0);
        c.out.get_or_insert_with(|| PathBuf::from("."));
        if let Some(b) = c.beta {
            check_beta("beta", b)?;
        }
        for &b in c.betas.iter().flatten() {
            check_beta("betas", b)?;
        }
        let t = c.t_end.unwrap_or_default();
        if !(t.is_finite() && t > 0.0) {
            return Err(CliError::config("t_end", "must be positive"));
        }
        let h = c.h_ode.unwrap_or_default();
        if !(h.is_finite() && h > 0.0) {
            return Err(CliError::config("h_ode", "must be positive"));
        }
        if c.width_n == Some(0) {
            return Err(CliError::config("width_n", "must be positive"));
        }
        if c.widths.iter().flatten().any(|w| *w == 0) {
            return Err(CliError::config("widths", "must be positive"));
        }
        if c.trials == Some(0) {
            return Err(CliError::config("trials", "must be positive"));
        }
        let out = c.out.as_ref().expect("set above");
        std::fs::create_dir_all(out).map_err(|e| CliError::config("out", format!("{}: {e}", out.display())))?;
        Ok(c)
    }

    pub fn beta(&self) -> Result<f64> {
        self.beta.ok_or_else(|| CliError::config("beta", "required (pass --beta or set it in the config file)"))
    }

    pub fn width_n(&self) -> Result<usize> {
        self.width_n.ok_or_else(|| CliError::config("width_n", "required"))
    }

    pub fn widths(&self) -> Result<Vec<usize>> {
        self.widths.clone().ok_or_else(|| CliError::config("widths", "required"))
    }

    /// `betas` if given, else the single `beta`.
    pub fn betas(&self) -> Result<Vec<f64>> {
        match &self.betas {
            Some(b) if !b.is_empty() => Ok(b.clone()),
            _ => Ok(vec![self.beta()?]),
        }
    }

    pub fn t_end(&self) -> f64 {
        self.t_end.expect("resolved")
    }

    pub fn h_ode(&self) -> f64 {
        self.h_ode.expect("resolved")
    }

    pub fn mc_samples(&self) -> usize {
        self.mc_samples.expect("resolved")
    }

    pub fn trials(&self) -> usize {
        self.trials.expect("resolved")
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("resolved")
    }

    pub fn out(&self) -> &Path {
        self.out.as_deref().expect("resolved")
    }

    pub fn mdp(&self) -> Result<FiniteMdp> {
        self.mdp.as_ref().expect("resolved").load()
    }
}

fn check_beta(field: &'static str, b: f64) -> Result<()> {
    if b > 0.5 && b <= 1.0 {
        Ok(())
    } else {
        Err(CliError::config(field, format!("{b} is outside (1/2, 1]")))
    }
}
