//! Experiment configuration: a TOML file with every field optional, then
//! command-line overrides on top.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use surface17_ion::layout::{AnnealConfig, LayoutMode, Objective};
use surface17_ion::noise::AuxSource;
use surface17_ion::sampler::EstimatorConfig;
use surface17_ion::{ChainLayout, NoiseParams, PrintedLayout, Protocol};

use crate::ConfigError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    /// A printed ordering (SM, SA, MM, MA, MT) or a layout text file.
    pub layout: String,
    pub protocol: String,
    pub noise: NoiseConfig,
    pub estimator: EstimatorSection,
    pub sweep: SweepConfig,
    pub anneal: AnnealSection,
    pub trap: TrapSection,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: None,
            out_dir: PathBuf::from("out"),
            workers: 0,
            layout: "MA".into(),
            protocol: "lookup".into(),
            noise: NoiseConfig::default(),
            estimator: EstimatorSection::default(),
            sweep: SweepConfig::default(),
            anneal: AnnealSection::default(),
            trap: TrapSection::default(),
        }
    }
}

/// Ion-trap rates. Defaults are the green-curve operating point; `p_sq`
/// sets all three rotation errors, and `p_prep`/`p_meas` follow `p_dep`/`p_sq`
/// unless given.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub p_xx: f64,
    pub p_sq: Option<f64>,
    pub r_heat: f64,
    pub p_dep: f64,
    pub r_d: f64,
    pub p_prep: Option<f64>,
    pub p_meas: Option<f64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        let g = NoiseParams::green_curve();
        NoiseConfig { p_xx: g.p_xx, p_sq: None, r_heat: g.r_heat, p_dep: g.p_dep, r_d: g.r_d, p_prep: None, p_meas: None }
    }
}

impl NoiseConfig {
    pub fn params(&self) -> NoiseParams {
        let mut n = NoiseParams::coupled(self.p_xx, self.r_heat, self.p_dep, self.r_d);
        if let Some(p) = self.p_sq {
            n.p_x = p;
            n.p_y = p;
            n.p_z = p;
            n.p_meas = p;
        }
        if let Some(p) = self.p_prep {
            n.p_prep = p;
        }
        if let Some(p) = self.p_meas {
            n.p_meas = p;
        }
        n
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSection {
    pub weight_cutoff: f64,
    pub samples_per_subset: usize,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        let d = EstimatorConfig::default();
        EstimatorSection { weight_cutoff: d.weight_cutoff, samples_per_subset: d.samples_per_subset }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Physical rates: `p` for the depolarizing sweep, `p_xx` otherwise.
    pub points: Vec<f64>,
    pub shots: u64,
    /// `cnot` (reference round) or `ms` (compiled round) for the
    /// depolarizing sweep.
    pub circuit: String,
    pub protocols: Vec<String>,
    /// Auxiliary source of the single-source sweep.
    pub source: String,
    /// Its fixed value; defaults to the green-curve value.
    pub value: Option<f64>,
    /// Also solve for the source value whose crossing sits at `critical_p_xx`.
    pub critical: bool,
    pub critical_p_xx: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            points: vec![1e-3, 1.5e-3, 2e-3, 3e-3, 4e-3, 5.5e-3, 8e-3],
            shots: 300_000,
            circuit: "cnot".into(),
            protocols: vec!["lookup".into(), "matching".into()],
            source: "r_heat".into(),
            value: None,
            critical: false,
            critical_p_xx: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealSection {
    pub mode: String,
    pub objective: String,
    pub proposals: usize,
    pub cooling: f64,
    pub cooling_steps: usize,
    pub restarts: usize,
}

impl Default for AnnealSection {
    fn default() -> Self {
        let d = AnnealConfig::default();
        AnnealSection {
            mode: "mixed".into(),
            objective: "total-time".into(),
            proposals: d.proposals,
            cooling: d.cooling,
            cooling_steps: d.cooling_steps,
            restarts: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct TrapSection {
    pub l0: f64,
    pub gamma4: f64,
    pub n: usize,
    pub scan_start: f64,
    pub scan_stop: f64,
    pub scan_step: f64,
}

impl Default for TrapSection {
    fn default() -> Self {
        TrapSection { l0: 25.0, gamma4: 0.86, n: 17, scan_start: 0.5, scan_stop: 1.1, scan_step: 0.01 }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    pub fn require_seed(&self) -> Result<u64, ConfigError> {
        self.seed.ok_or_else(|| ConfigError("this experiment is stochastic and needs a seed (--seed or `seed`)".into()))
    }

    pub fn protocol(&self) -> Result<Protocol, ConfigError> {
        self.protocol.parse().map_err(|e| ConfigError(format!("protocol: {e}")))
    }

    pub fn protocols(&self) -> Result<Vec<Protocol>, ConfigError> {
        self.sweep
            .protocols
            .iter()
            .map(|p| p.parse().map_err(|e| ConfigError(format!("sweep.protocols: {e}"))))
            .collect()
    }

    pub fn source(&self) -> Result<AuxSource, ConfigError> {
        self.sweep.source.parse().map_err(|e| ConfigError(format!("sweep.source: {e}")))
    }

    pub fn estimator(&self, seed: u64) -> Result<EstimatorConfig, ConfigError> {
        let e = &self.estimator;
        if !(e.weight_cutoff > 0.0 && e.weight_cutoff < 1.0) {
            return Err(ConfigError(format!("estimator.weight_cutoff must lie in (0, 1), got {}", e.weight_cutoff)));
        }
        if e.samples_per_subset == 0 {
            return Err(ConfigError("estimator.samples_per_subset must be positive".into()));
        }
        Ok(EstimatorConfig { weight_cutoff: e.weight_cutoff, samples_per_subset: e.samples_per_subset, seed })
    }

    pub fn anneal(&self) -> Result<(LayoutMode, Objective, AnnealConfig), ConfigError> {
        let a = &self.anneal;
        let mode = a.mode.parse().map_err(|e| ConfigError(format!("anneal.mode: {e}")))?;
        let objective = a.objective.parse().map_err(|e| ConfigError(format!("anneal.objective: {e}")))?;
        if !(a.cooling > 0.0 && a.cooling < 1.0) || a.proposals == 0 || a.restarts == 0 {
            return Err(ConfigError("anneal: need 0 < cooling < 1 and positive proposals and restarts".into()));
        }
        let config = AnnealConfig { proposals: a.proposals, cooling: a.cooling, cooling_steps: a.cooling_steps, ..AnnealConfig::default() };
        Ok((mode, objective, config))
    }

    /// The selected layout and its display label.
    pub fn layout(&self) -> anyhow::Result<(ChainLayout, String)> {
        if let Ok(p) = self.layout.parse::<PrintedLayout>() {
            return Ok((ChainLayout::printed(p), p.name().to_string()));
        }
        let path = Path::new(&self.layout);
        if !path.exists() {
            bail!(ConfigError(format!("layout {:?} is neither a printed ordering nor a file", self.layout)));
        }
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let layout = ChainLayout::from_text(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Ok((layout, path.display().to_string()))
    }

    pub fn sweep_points(&self) -> Result<Vec<f64>, ConfigError> {
        let pts = &self.sweep.points;
        if pts.is_empty() || pts.iter().any(|&p| !(p > 0.0 && p <= 1.0)) || pts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError("sweep.points must be increasing rates in (0, 1]".into()));
        }
        Ok(pts.clone())
    }
}
