//! Run configuration: a TOML file (or the `config` block of a previous run's
//! `manifest.json`). See `docs/config.md` for the schema.

use std::fs;
use std::path::{Path, PathBuf};

use mlergm::infer::{Init, Proposal, RunConfig};
use mlergm::niw::NiwParams;
use mlergm::{ModelSpec, SimControl, StatKind, StatisticDescriptor};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub model: Vec<TermConfig>,
    #[serde(default)]
    pub prior: PriorConfig,
    #[serde(default)]
    pub mcmc: McmcConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub gof: GofConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Weighted edge list (`i,j,weight`).
    pub edges: Option<PathBuf>,
    /// Node attribute table (`node,<name>,...`).
    pub attributes: Option<PathBuf>,
    /// Node count, when the edge list has no `#nodes=` line.
    pub nodes: Option<usize>,
    /// Number of layers W; defaults to the threshold count or the largest weight.
    pub layers: Option<usize>,
    /// Ordinalize raw weights at these increasing cut points.
    pub thresholds: Option<Vec<f64>>,
    /// Ordinalize raw weights at these quantiles of the positive weights.
    pub quantiles: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub kind: String,
    pub decay: Option<f64>,
    pub attribute: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    pub mu: Option<Vec<f64>>,
    pub kappa: Option<f64>,
    pub lambda: Option<Vec<Vec<f64>>>,
    pub nu: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProposalKind {
    Ads,
    RandomWalk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    Mple,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McmcConfig {
    pub chains: usize,
    pub iterations: usize,
    pub burn_in: f64,
    pub thinning: usize,
    /// Auxiliary chain length per candidate dyad.
    pub steps_per_dyad: u32,
    pub cold_start: bool,
    pub proposal: ProposalKind,
    pub gamma: f64,
    pub sigma: f64,
    pub init: InitKind,
    pub init_jitter: f64,
    pub seed: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        let run = RunConfig::default();
        let (gamma, sigma) = match run.proposal {
            Proposal::AdaptiveDirection { gamma, sigma } => (gamma, sigma),
            Proposal::RandomWalk { sigma } => (0.0, sigma),
        };
        McmcConfig {
            chains: run.chains,
            iterations: run.iterations,
            burn_in: run.burn_in,
            thinning: run.thinning,
            steps_per_dyad: run.sim.steps_per_dyad,
            cold_start: run.sim.cold_start,
            proposal: ProposalKind::Ads,
            gamma,
            sigma,
            init: InitKind::Mple,
            init_jitter: run.init_jitter,
            seed: run.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub nodes: Option<usize>,
    /// One parameter vector per layer, in model term order.
    pub parameters: Vec<Vec<f64>>,
    pub replicates: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            nodes: None,
            parameters: Vec::new(),
            replicates: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GofConfig {
    pub replicates: usize,
    pub levels: Vec<f64>,
}

impl Default for GofConfig {
    fn default() -> Self {
        GofConfig {
            replicates: 200,
            levels: mlergm::gof::DEFAULT_LEVELS.to_vec(),
        }
    }
}

/// Loads a TOML config or a `manifest.json`, resolving relative data paths
/// against the file's directory.
pub fn load(path: &Path) -> Result<Config, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        msg: format!("cannot read: {e}"),
    })?;
    let config_err = |msg: String| CliError::Config {
        path: path.to_path_buf(),
        msg,
    };
    let mut cfg = if path.extension().is_some_and(|e| e == "json") {
        let mut de = serde_json::Deserializer::from_str(&text);
        let manifest: ManifestConfig =
            serde_path_to_error::deserialize(&mut de).map_err(|e| config_err(format!("at `{}`: {}", e.path(), e.inner())))?;
        manifest.config
    } else {
        let de = toml::Deserializer::parse(&text).map_err(|e| config_err(e.to_string()))?;
        serde_path_to_error::deserialize(de).map_err(|e| config_err(format!("at `{}`: {}", e.path(), e.inner())))?
    };
    let base = path.parent().unwrap_or(Path::new("."));
    for p in [&mut cfg.data.edges, &mut cfg.data.attributes].into_iter().flatten() {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    cfg.make_paths_absolute();
    Ok(cfg)
}

/// The part of a manifest needed to replay a run.
#[derive(Deserialize)]
struct ManifestConfig {
    config: Config,
}

impl Config {
    /// Anchors data paths to the current directory so a manifest written
    /// from this config can be replayed from anywhere.
    pub fn make_paths_absolute(&mut self) {
        for p in [&mut self.data.edges, &mut self.data.attributes].into_iter().flatten() {
            if let Ok(abs) = std::path::absolute(&*p) {
                *p = abs;
            }
        }
    }

    pub fn model_spec(&self) -> Result<ModelSpec, CliError> {
        if self.model.is_empty() {
            return Err(CliError::Usage("the configuration has no [[model]] terms".into()));
        }
        let terms = self
            .model
            .iter()
            .enumerate()
            .map(|(k, t)| {
                let kind: StatKind = t.kind.parse().map_err(|e: mlergm::Error| {
                    CliError::Usage(format!("model[{k}].kind: {e}"))
                })?;
                Ok(StatisticDescriptor {
                    kind,
                    decay: t.decay,
                    attribute: t.attribute.clone(),
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(ModelSpec::new(terms)?)
    }

    /// Prior with defaults filled in for dimension `r`.
    pub fn niw_prior(&self, r: usize) -> Result<NiwParams, CliError> {
        let d = NiwParams::default_prior(r);
        let p = &self.prior;
        let mu = match &p.mu {
            Some(v) => DVector::from_column_slice(v),
            None => d.mu,
        };
        let lambda = match &p.lambda {
            Some(rows) => {
                if rows.iter().any(|row| row.len() != rows.len()) {
                    return Err(CliError::Usage("prior.lambda must be a square matrix".into()));
                }
                DMatrix::from_fn(rows.len(), rows.len(), |i, j| rows[i][j])
            }
            None => d.lambda,
        };
        let prior = NiwParams {
            mu,
            kappa: p.kappa.unwrap_or(d.kappa),
            lambda,
            nu: p.nu.unwrap_or(d.nu),
        };
        if prior.dim() != r || prior.lambda.nrows() != r {
            return Err(CliError::Usage(format!("prior dimensions must match the {r} model terms")));
        }
        prior.validate()?;
        Ok(prior)
    }

    /// Records the prior actually used, so the manifest is self-contained.
    pub fn resolve_prior(&mut self, prior: &NiwParams) {
        let r = prior.dim();
        self.prior = PriorConfig {
            mu: Some(prior.mu.iter().copied().collect()),
            kappa: Some(prior.kappa),
            lambda: Some((0..r).map(|i| (0..r).map(|j| prior.lambda[(i, j)]).collect()).collect()),
            nu: Some(prior.nu),
        };
    }

    pub fn sim_control(&self) -> SimControl {
        SimControl {
            steps_per_dyad: self.mcmc.steps_per_dyad,
            seed: self.mcmc.seed,
            cold_start: self.mcmc.cold_start,
            ..SimControl::default()
        }
    }

    pub fn run_config(&self) -> RunConfig {
        let m = &self.mcmc;
        RunConfig {
            chains: m.chains,
            iterations: m.iterations,
            burn_in: m.burn_in,
            thinning: m.thinning,
            sim: self.sim_control(),
            proposal: match m.proposal {
                ProposalKind::Ads => Proposal::AdaptiveDirection {
                    gamma: m.gamma,
                    sigma: m.sigma,
                },
                ProposalKind::RandomWalk => Proposal::RandomWalk { sigma: m.sigma },
            },
            init: match m.init {
                InitKind::Mple => Init::Mple,
                InitKind::Zero => Init::Zero,
            },
            init_jitter: m.init_jitter,
            fixed_hyper: None,
            seed: m.seed,
        }
    }
}
