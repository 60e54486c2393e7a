//! Posterior sampling for the hierarchical multilayer ERGM.
//!
//! Each iteration of every chain updates the layer parameters `phi_1..phi_W`
//! in increasing layer order with an approximate exchange move, then draws
//! the hierarchical `(mu, Sigma)` from its Normal-Inverse-Wishart full
//! conditional given that chain's current layer parameters.
//!
//! The exchange move for layer `w` proposes `phi'`, simulates an auxiliary
//! layer `y'` from the conditional ERGM at `phi'` given the observed layer
//! `w - 1` (the complete graph for `w = 1`), and accepts with log ratio
//!
//! ```text
//! (phi - phi')^T [s(y') - s(y_w)] + log N(phi'; mu, Sigma) - log N(phi; mu, Sigma)
//! ```
//!
//! Proposals use parallel adaptive direction sampling across chains: chain
//! `h` moves along the difference of two other chains' current values,
//! read from a snapshot taken at the start of the iteration.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::adjacency::Adjacency;
use crate::error::{Error, Result};
use crate::network::{BinaryLayer, LayerStack, NodeAttributes};
use crate::niw::{niw_full_conditional, sample_hyper, HyperState, MvNormal, NiwPrior};
use crate::sim::{ConstrainedSampler, SimControl};
use crate::stats::{BoundModel, ModelSpec};

/// Proposal kernel for the layer parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Proposal {
    /// `phi' = phi_h + gamma (phi_a - phi_b) + N(0, sigma^2 I)`, `a != b != h`.
    AdaptiveDirection { gamma: f64, sigma: f64 },
    /// `phi' = phi + N(0, sigma^2 I)`.
    RandomWalk { sigma: f64 },
}

impl Default for Proposal {
    fn default() -> Self {
        Proposal::AdaptiveDirection {
            gamma: 0.5,
            sigma: 0.025,
        }
    }
}

/// Starting values for the layer parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// Maximum pseudo-likelihood estimate of each layer, plus jitter.
    Mple,
    /// All zeros plus jitter.
    Zero,
    /// Explicit per-layer values plus jitter.
    Values(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub chains: usize,
    pub iterations: usize,
    /// Fraction of iterations discarded.
    pub burn_in: f64,
    pub thinning: usize,
    pub sim: SimControl,
    pub proposal: Proposal,
    pub init: Init,
    /// Standard deviation of the per-chain jitter added to the starting values.
    pub init_jitter: f64,
    /// Keep `(mu, Sigma)` fixed at this value instead of Gibbs-updating it.
    pub fixed_hyper: Option<HyperState>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            chains: 4,
            iterations: 10_000,
            burn_in: 0.5,
            thinning: 100,
            sim: SimControl::default(),
            proposal: Proposal::default(),
            init: Init::Mple,
            init_jitter: 0.1,
            fixed_hyper: None,
            seed: 1,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        if self.chains == 0 {
            return Err(Error::Config("chains must be at least 1".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.thinning == 0 {
            return Err(Error::Config("thinning must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(Error::Config(format!("burn-in fraction {} outside [0, 1)", self.burn_in)));
        }
        if !(self.init_jitter >= 0.0) {
            return Err(Error::Config("init_jitter must be non-negative".into()));
        }
        match self.proposal {
            Proposal::AdaptiveDirection { gamma, sigma } => {
                if self.chains < 3 {
                    return Err(Error::Config(format!(
                        "adaptive direction sampling needs at least 3 chains, got {}",
                        self.chains
                    )));
                }
                if !gamma.is_finite() || !(sigma >= 0.0) {
                    return Err(Error::Config("invalid adaptive direction scales".into()));
                }
            }
            Proposal::RandomWalk { sigma } => {
                if !(sigma > 0.0) {
                    return Err(Error::Config("random-walk sigma must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Number of leading iterations discarded.
    pub fn burn_in_iterations(&self) -> usize {
        (self.iterations as f64 * self.burn_in) as usize
    }
}

/// State of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub phis: Vec<Vec<f64>>,
    pub hyper: HyperState,
    pub iteration: usize,
    pub accepted: Vec<u64>,
    pub proposed: Vec<u64>,
    /// Proposals rejected because the log acceptance ratio was not finite.
    pub non_finite: u64,
}

impl ChainState {
    pub fn acceptance_rates(&self) -> Vec<f64> {
        self.accepted
            .iter()
            .zip(&self.proposed)
            .map(|(&a, &p)| if p == 0 { 0.0 } else { a as f64 / p as f64 })
            .collect()
    }
}

/// One retained posterior draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub chain: usize,
    pub iteration: usize,
    /// `phis[w][k]`: layer `w` (0-based), statistic `k`.
    pub phis: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
    /// Row-major `r x r`.
    pub sigma: Vec<f64>,
}

/// Thinned post-burn-in draws of all chains.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    pub n_layers: usize,
    pub dim: usize,
    pub draws: Vec<Draw>,
    /// `acceptance[chain][layer]` over the whole run.
    pub acceptance: Vec<Vec<f64>>,
}

impl PosteriorSamples {
    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// Values of `phi_{layer, k}` across draws.
    pub fn phi_values(&self, layer: usize, k: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d.phis[layer][k]).collect()
    }

    pub fn mu_values(&self, k: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d.mu[k]).collect()
    }

    pub fn sigma_values(&self, row: usize, col: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d.sigma[row * self.dim + col]).collect()
    }
}

/// Observed data bound to a model: conditioning layers and observed
/// statistics for every layer.
#[derive(Debug, Clone)]
pub struct ExchangeModel {
    model: BoundModel,
    lowers: Vec<BinaryLayer>,
    uppers: Vec<BinaryLayer>,
    observed: Vec<Vec<f64>>,
    sim: SimControl,
}

impl ExchangeModel {
    pub fn new(data: &LayerStack, spec: &ModelSpec, attrs: &NodeAttributes, sim: &SimControl) -> Result<Self> {
        sim.validate()?;
        let model = spec.bind(data.n_nodes(), attrs)?;
        let lowers: Vec<BinaryLayer> = (0..data.n_layers())
            .map(|w| data.conditioning_layer(w).into_owned())
            .collect();
        let observed = data
            .layers()
            .iter()
            .map(|l| model.statistics(l))
            .collect::<Result<Vec<_>>>()?;
        Ok(ExchangeModel {
            model,
            lowers,
            uppers: data.layers().to_vec(),
            observed,
            sim: sim.clone(),
        })
    }

    pub fn n_layers(&self) -> usize {
        self.lowers.len()
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn model(&self) -> &BoundModel {
        &self.model
    }

    /// Observed statistics `s(y_w)` of layer `w` (0-based).
    pub fn observed_statistics(&self, w: usize) -> &[f64] {
        &self.observed[w]
    }

    /// One auxiliary sampler per layer.
    pub fn samplers(&self) -> Result<Vec<ConstrainedSampler<'_>>> {
        self.lowers
            .iter()
            .map(|l| ConstrainedSampler::new(&self.model, l, self.sim.cold_start))
            .collect()
    }

    /// Maximum pseudo-likelihood estimate for layer `w`: logistic regression
    /// of dyad presence on change statistics over the free dyads, with a weak
    /// ridge penalty so that separable data still yield finite values.
    pub fn mple(&self, w: usize) -> Vec<f64> {
        let r = self.dim();
        let lower = &self.lowers[w];
        if lower.n_edges() == 0 {
            return vec![0.0; r];
        }
        let mut adj = Adjacency::from_layer(&self.uppers[w]);
        let mut rows = Vec::with_capacity(lower.n_edges());
        let mut delta = vec![0.0; r];
        for &(i, j) in lower.edges() {
            let present = adj.has(i, j);
            if present {
                adj.remove(i, j);
            }
            self.model.change_into(&adj, i, j, &mut delta);
            if present {
                adj.insert(i, j);
            }
            rows.push((delta.clone(), present));
        }
        penalized_logistic(&rows, r, 0.01)
    }
}

fn penalized_logistic(rows: &[(Vec<f64>, bool)], r: usize, ridge: f64) -> Vec<f64> {
    let mut beta = DVector::<f64>::zeros(r);
    for _ in 0..100 {
        let mut grad = -&beta * ridge;
        let mut hess = DMatrix::<f64>::identity(r, r) * ridge;
        for (x, y) in rows {
            let x = DVector::from_column_slice(x);
            let eta = x.dot(&beta);
            let p = 1.0 / (1.0 + (-eta).exp());
            grad += &x * ((*y as u8 as f64) - p);
            hess += (&x * x.transpose()) * (p * (1.0 - p));
        }
        let Some(step) = hess.cholesky().map(|c| c.solve(&grad)) else {
            break;
        };
        beta += &step;
        if step.amax() < 1e-10 {
            break;
        }
    }
    if beta.iter().all(|v| v.is_finite()) {
        beta.iter().copied().collect()
    } else {
        vec![0.0; r]
    }
}

/// Result of one exchange move.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeOutcome {
    pub phi: Vec<f64>,
    pub accepted: bool,
    /// Log acceptance ratio; `NaN` marks a non-finite ratio that was rejected.
    pub log_ratio: f64,
}

/// Approximate exchange update of layer `w` at the proposed value `proposal`.
///
/// With an empty conditioning layer the likelihood does not depend on
/// `phi_w`, which is then drawn directly from `N(mu, Sigma)`.
pub fn exchange_update_layer<R: Rng + ?Sized>(
    data: &ExchangeModel,
    w: usize,
    sampler: &mut ConstrainedSampler<'_>,
    current: &[f64],
    proposal: Vec<f64>,
    prior: &MvNormal,
    rng: &mut R,
) -> ExchangeOutcome {
    if sampler.n_candidates() == 0 {
        return ExchangeOutcome {
            phi: prior.sample(rng),
            accepted: true,
            log_ratio: 0.0,
        };
    }
    let steps = data.sim.steps_for(sampler.n_candidates());
    sampler.run(&proposal, steps, rng);
    let aux = sampler.statistics();
    let obs = data.observed_statistics(w);
    let likelihood: f64 = current
        .iter()
        .zip(&proposal)
        .zip(aux.iter().zip(obs))
        .map(|((c, p), (sa, so))| (c - p) * (sa - so))
        .sum();
    let log_ratio = likelihood + prior.log_density(&proposal) - prior.log_density(current);
    if !log_ratio.is_finite() {
        return ExchangeOutcome {
            phi: current.to_vec(),
            accepted: false,
            log_ratio: f64::NAN,
        };
    }
    let accepted = log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio;
    ExchangeOutcome {
        phi: if accepted { proposal } else { current.to_vec() },
        accepted,
        log_ratio,
    }
}

/// Adaptive direction proposal for chain `h` using the same-layer values of
/// all chains in `layer_values`.
pub fn ads_propose<R: Rng + ?Sized>(
    layer_values: &[&[f64]],
    h: usize,
    gamma: f64,
    sigma: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let n = layer_values.len();
    if n < 3 {
        return Err(Error::Config(format!(
            "adaptive direction sampling needs at least 3 chains, got {n}"
        )));
    }
    if h >= n {
        return Err(Error::Config(format!("chain {h} out of range for {n} chains")));
    }
    let a = pick_other(n, &[h], rng);
    let b = pick_other(n, &[h, a], rng);
    Ok(ads_point(layer_values[h], layer_values[a], layer_values[b], gamma, sigma, rng))
}

fn pick_other<R: Rng + ?Sized>(n: usize, exclude: &[usize], rng: &mut R) -> usize {
    let mut k = rng.random_range(0..n - exclude.len());
    let mut sorted = exclude.to_vec();
    sorted.sort_unstable();
    for &e in &sorted {
        if k >= e {
            k += 1;
        }
    }
    k
}

/// `current + gamma (a - b) + N(0, sigma^2 I)`.
pub fn ads_point<R: Rng + ?Sized>(current: &[f64], a: &[f64], b: &[f64], gamma: f64, sigma: f64, rng: &mut R) -> Vec<f64> {
    current
        .iter()
        .zip(a.iter().zip(b))
        .map(|(c, (x, y))| {
            let eps: f64 = StandardNormal.sample(rng);
            c + gamma * (x - y) + sigma * eps
        })
        .collect()
}

/// `log p(phi_1..phi_W | mu, Sigma)` as the product of independent layer terms.
pub fn log_prior_joint(phis: &[Vec<f64>], hyper: &HyperState) -> Result<f64> {
    let mvn = MvNormal::new(hyper)?;
    Ok(phis.iter().map(|p| mvn.log_density(p)).sum())
}

struct Chain<'a> {
    state: ChainState,
    rng: ChaCha8Rng,
    samplers: Vec<ConstrainedSampler<'a>>,
    draws: Vec<Draw>,
}

/// Runs all chains and returns the thinned post-burn-in draws.
pub fn run_inference(
    observed: &LayerStack,
    spec: &ModelSpec,
    attrs: &NodeAttributes,
    prior: &NiwPrior,
    cfg: &RunConfig,
) -> Result<PosteriorSamples> {
    cfg.validate()?;
    prior.validate()?;
    let r = spec.dim();
    if prior.dim() != r {
        return Err(Error::DimensionMismatch {
            expected: r,
            found: prior.dim(),
        });
    }
    let data = ExchangeModel::new(observed, spec, attrs, &cfg.sim)?;
    let n_layers = data.n_layers();

    let base: Vec<Vec<f64>> = match &cfg.init {
        Init::Mple => (0..n_layers).map(|w| data.mple(w)).collect(),
        Init::Zero => vec![vec![0.0; r]; n_layers],
        Init::Values(v) => {
            if v.len() != n_layers || v.iter().any(|p| p.len() != r) {
                return Err(Error::Config(format!(
                    "initial values must be {n_layers} vectors of length {r}"
                )));
            }
            v.clone()
        }
    };

    let mut chains = Vec::with_capacity(cfg.chains);
    for h in 0..cfg.chains {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(h as u64);
        let phis: Vec<Vec<f64>> = base
            .iter()
            .map(|p| {
                p.iter()
                    .map(|v| v + cfg.init_jitter * rng.sample::<f64, _>(StandardNormal))
                    .collect::<Vec<f64>>()
            })
            .collect();
        let hyper = match &cfg.fixed_hyper {
            Some(h) => h.clone(),
            None => gibbs_hyper(prior, &phis, &mut rng)?,
        };
        chains.push(Chain {
            state: ChainState {
                phis,
                hyper,
                iteration: 0,
                accepted: vec![0; n_layers],
                proposed: vec![0; n_layers],
                non_finite: 0,
            },
            rng,
            samplers: data.samplers()?,
            draws: Vec::new(),
        });
    }

    let burn = cfg.burn_in_iterations();
    for t in 0..cfg.iterations {
        let snapshot: Vec<Vec<Vec<f64>>> = chains.iter().map(|c| c.state.phis.clone()).collect();
        let keep = t >= burn && (t - burn) % cfg.thinning == 0;
        chains
            .par_iter_mut()
            .enumerate()
            .try_for_each(|(h, chain)| -> Result<()> {
                sweep(&data, prior, cfg, h, chain, &snapshot)?;
                if keep {
                    let s = &chain.state;
                    chain.draws.push(Draw {
                        chain: h,
                        iteration: t,
                        phis: s.phis.clone(),
                        mu: s.hyper.mu.iter().copied().collect(),
                        sigma: s.hyper.sigma.transpose().iter().copied().collect(),
                    });
                }
                Ok(())
            })?;
    }

    let acceptance = chains.iter().map(|c| c.state.acceptance_rates()).collect();
    let mut draws: Vec<Draw> = chains.into_iter().flat_map(|c| c.draws).collect();
    draws.sort_by_key(|d| (d.chain, d.iteration));
    Ok(PosteriorSamples {
        n_layers,
        dim: r,
        draws,
        acceptance,
    })
}

fn sweep(
    data: &ExchangeModel,
    prior: &NiwPrior,
    cfg: &RunConfig,
    h: usize,
    chain: &mut Chain<'_>,
    snapshot: &[Vec<Vec<f64>>],
) -> Result<()> {
    let mvn = MvNormal::new(&chain.state.hyper)?;
    for w in 0..data.n_layers() {
        let current = chain.state.phis[w].clone();
        let proposal = match cfg.proposal {
            Proposal::AdaptiveDirection { gamma, sigma } => {
                let mut values: Vec<&[f64]> = snapshot.iter().map(|c| c[w].as_slice()).collect();
                values[h] = &current;
                ads_propose(&values, h, gamma, sigma, &mut chain.rng)?
            }
            Proposal::RandomWalk { sigma } => current
                .iter()
                .map(|c| c + sigma * chain.rng.sample::<f64, _>(StandardNormal))
                .collect(),
        };
        let out = exchange_update_layer(
            data,
            w,
            &mut chain.samplers[w],
            &current,
            proposal,
            &mvn,
            &mut chain.rng,
        );
        chain.state.proposed[w] += 1;
        if out.accepted {
            chain.state.accepted[w] += 1;
        }
        if out.log_ratio.is_nan() {
            chain.state.non_finite += 1;
        }
        chain.state.phis[w] = out.phi;
    }
    if cfg.fixed_hyper.is_none() {
        chain.state.hyper = gibbs_hyper(prior, &chain.state.phis, &mut chain.rng)?;
    }
    chain.state.iteration += 1;
    Ok(())
}

fn gibbs_hyper<R: Rng + ?Sized>(prior: &NiwPrior, phis: &[Vec<f64>], rng: &mut R) -> Result<HyperState> {
    let refs: Vec<&[f64]> = phis.iter().map(Vec::as_slice).collect();
    sample_hyper(&niw_full_conditional(prior, &refs)?, rng).map_err(|e| match e {
        Error::Numerical(msg) => {
            let largest = phis.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            Error::Numerical(format!(
                "{msg} while drawing (mu, Sigma); largest |phi| is {largest:.3e}, \
                 which usually means a layer's observed statistics lie on the boundary of their support"
            ))
        }
        other => other,
    })
}
