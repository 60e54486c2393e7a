//! Constrained MCMC simulation of network layers.
//!
//! A layer is drawn from the conditional ERGM given the layer beneath it.
//! Only edges of the lower layer may be present (dyads absent below are
//! structural zeros), so the chain moves over the lower layer's edge set
//! with a tie-no-tie proposal: with probability 1/2 toggle off a random
//! present edge, otherwise toggle on a random absent candidate. When one of
//! the two sets is empty the other is used with probability 1 and the
//! Hastings correction accounts for the asymmetric proposal mass.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adjacency::Adjacency;
use crate::error::{Error, Result};
use crate::network::{dyad, BinaryLayer, Dyad, LayerStack, NodeAttributes};
use crate::stats::{BoundModel, ModelSpec};

/// Parameter vector of one layer transition.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams(Vec<f64>);

impl LayerParams {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite layer parameter in {values:?}")));
        }
        Ok(LayerParams(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Control of the auxiliary chains.
#[derive(Debug, Clone, PartialEq)]
pub struct SimControl {
    /// Metropolis-Hastings steps per free dyad: a layer with `E` candidate
    /// dyads runs `steps_per_dyad * E` steps.
    pub steps_per_dyad: u32,
    pub seed: u64,
    /// Fraction of a recorded chain discarded as burn-in (see [`ConstrainedSampler::record`]).
    pub burn_in: f64,
    /// Start from the empty graph instead of the lower layer. Diagnostics only.
    pub cold_start: bool,
}

impl Default for SimControl {
    fn default() -> Self {
        SimControl {
            steps_per_dyad: 50,
            seed: 1,
            burn_in: 0.5,
            cold_start: false,
        }
    }
}

impl SimControl {
    pub fn validate(&self) -> Result<()> {
        if self.steps_per_dyad == 0 {
            return Err(Error::Config("steps_per_dyad must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(Error::Config(format!("burn-in fraction {} outside [0, 1)", self.burn_in)));
        }
        Ok(())
    }

    pub fn steps_for(&self, candidates: usize) -> usize {
        self.steps_per_dyad as usize * candidates
    }
}

/// Reusable tie-no-tie sampler over the edge set of a fixed lower layer.
#[derive(Debug, Clone)]
pub struct ConstrainedSampler<'m> {
    model: &'m BoundModel,
    candidates: Vec<Dyad>,
    start: Adjacency,
    state: Adjacency,
    /// Candidate indices currently present / absent, with each candidate's slot.
    present: Vec<u32>,
    absent: Vec<u32>,
    slot: Vec<u32>,
    delta: Vec<f64>,
    cold_start: bool,
}

impl<'m> ConstrainedSampler<'m> {
    pub fn new(model: &'m BoundModel, lower: &BinaryLayer, cold_start: bool) -> Result<Self> {
        if lower.n_nodes() != model.n_nodes() {
            return Err(Error::DimensionMismatch {
                expected: model.n_nodes(),
                found: lower.n_nodes(),
            });
        }
        let candidates = lower.edges().to_vec();
        let start = if cold_start {
            Adjacency::empty(lower.n_nodes())
        } else {
            Adjacency::from_layer(lower)
        };
        let mut s = ConstrainedSampler {
            model,
            state: start.clone(),
            start,
            present: Vec::with_capacity(candidates.len()),
            absent: Vec::with_capacity(candidates.len()),
            slot: vec![0; candidates.len()],
            candidates,
            delta: vec![0.0; model.dim()],
            cold_start,
        };
        s.reset();
        Ok(s)
    }

    pub fn n_candidates(&self) -> usize {
        self.candidates.len()
    }

    /// Returns the chain to its initial state.
    pub fn reset(&mut self) {
        self.state.copy_from(&self.start);
        self.present.clear();
        self.absent.clear();
        for c in 0..self.candidates.len() {
            let (i, j) = self.candidates[c];
            if self.state.has(i, j) {
                self.slot[c] = self.present.len() as u32;
                self.present.push(c as u32);
            } else {
                self.slot[c] = self.absent.len() as u32;
                self.absent.push(c as u32);
            }
        }
    }

    /// Resets, then runs `steps` Metropolis-Hastings steps at `phi`.
    /// Returns the number of accepted toggles.
    pub fn run<R: Rng + ?Sized>(&mut self, phi: &[f64], steps: usize, rng: &mut R) -> usize {
        debug_assert_eq!(phi.len(), self.model.dim());
        self.reset();
        (0..steps).filter(|_| self.step(phi, rng)).count()
    }

    /// One tie-no-tie Metropolis-Hastings step.
    pub fn step<R: Rng + ?Sized>(&mut self, phi: &[f64], rng: &mut R) -> bool {
        let (p, a) = (self.present.len(), self.absent.len());
        if p + a == 0 {
            return false;
        }
        let remove = match (p, a) {
            (0, _) => false,
            (_, 0) => true,
            _ => rng.random::<bool>(),
        };
        let mass_now = if p > 0 && a > 0 { 0.5 } else { 1.0 };
        if remove {
            let c = self.present[rng.random_range(0..p)] as usize;
            let (i, j) = self.candidates[c];
            self.state.remove(i, j);
            self.model.change_into(&self.state, i, j, &mut self.delta);
            // Reverse move adds from an absent set of size a + 1.
            let mass_next = if p > 1 { 0.5 } else { 1.0 };
            let log_ratio =
                -dot(phi, &self.delta) + (mass_next / (a + 1) as f64).ln() - (mass_now / p as f64).ln();
            if accept(log_ratio, rng) {
                self.move_candidate(c, false);
                true
            } else {
                self.state.insert(i, j);
                false
            }
        } else {
            let c = self.absent[rng.random_range(0..a)] as usize;
            let (i, j) = self.candidates[c];
            self.model.change_into(&self.state, i, j, &mut self.delta);
            let mass_next = if a > 1 { 0.5 } else { 1.0 };
            let log_ratio =
                dot(phi, &self.delta) + (mass_next / (p + 1) as f64).ln() - (mass_now / a as f64).ln();
            if accept(log_ratio, rng) {
                self.state.insert(i, j);
                self.move_candidate(c, true);
                true
            } else {
                false
            }
        }
    }

    fn move_candidate(&mut self, c: usize, to_present: bool) {
        let (from, to) = if to_present {
            (&mut self.absent, &mut self.present)
        } else {
            (&mut self.present, &mut self.absent)
        };
        let at = self.slot[c] as usize;
        from.swap_remove(at);
        if let Some(&moved) = from.get(at) {
            self.slot[moved as usize] = at as u32;
        }
        self.slot[c] = to.len() as u32;
        to.push(c as u32);
    }

    /// Current layer.
    pub fn layer(&self) -> BinaryLayer {
        self.state.to_layer()
    }

    /// Statistic vector of the current layer.
    pub fn statistics(&self) -> Vec<f64> {
        self.model.statistics_of(&self.state)
    }

    /// Runs a chain of `steps` steps and calls `visit` with the state after
    /// every post-burn-in step, for stationary-distribution diagnostics.
    pub fn record<R: Rng + ?Sized>(
        &mut self,
        phi: &[f64],
        steps: usize,
        burn_in: f64,
        rng: &mut R,
        mut visit: impl FnMut(&BinaryLayer),
    ) {
        self.reset();
        let skip = (steps as f64 * burn_in) as usize;
        for t in 0..steps {
            self.step(phi, rng);
            if t >= skip {
                visit(&self.state.to_layer());
            }
        }
    }

    pub fn is_cold_start(&self) -> bool {
        self.cold_start
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio
}

/// Draws layer `w + 1` given its lower layer `w` with parameters `phi`.
pub fn simulate_layer(
    lower: &BinaryLayer,
    phi: &LayerParams,
    spec: &ModelSpec,
    attrs: &NodeAttributes,
    ctrl: &SimControl,
) -> Result<BinaryLayer> {
    ctrl.validate()?;
    check_dim(spec.dim(), phi.dim())?;
    if lower.n_edges() == 0 {
        return Ok(BinaryLayer::empty(lower.n_nodes()));
    }
    let model = spec.bind(lower.n_nodes(), attrs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctrl.seed);
    let mut sampler = ConstrainedSampler::new(&model, lower, ctrl.cold_start)?;
    let steps = ctrl.steps_for(sampler.n_candidates());
    sampler.run(phi.as_slice(), steps, &mut rng);
    Ok(sampler.layer())
}

/// Draws a full nested stack: layer 1 conditional on the complete graph,
/// each further layer conditional on the one below.
pub fn simulate_stack(
    phis: &[LayerParams],
    spec: &ModelSpec,
    attrs: &NodeAttributes,
    n: usize,
    ctrl: &SimControl,
) -> Result<LayerStack> {
    ctrl.validate()?;
    let model = spec.bind(n, attrs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctrl.seed);
    let phis: Vec<&[f64]> = phis.iter().map(LayerParams::as_slice).collect();
    simulate_stack_with(&model, &phis, n, ctrl, &mut rng)
}

pub(crate) fn simulate_stack_with<R: Rng + ?Sized>(
    model: &BoundModel,
    phis: &[&[f64]],
    n: usize,
    ctrl: &SimControl,
    rng: &mut R,
) -> Result<LayerStack> {
    if phis.is_empty() {
        return Err(Error::LayerCount(0));
    }
    let mut layers = Vec::with_capacity(phis.len());
    let mut lower = BinaryLayer::complete(n);
    for phi in phis {
        check_dim(model.dim(), phi.len())?;
        let next = if lower.n_edges() == 0 {
            BinaryLayer::empty(n)
        } else {
            let mut sampler = ConstrainedSampler::new(model, &lower, ctrl.cold_start)?;
            let steps = ctrl.steps_for(sampler.n_candidates());
            sampler.run(phi, steps, rng);
            sampler.layer()
        };
        layers.push(next.clone());
        lower = next;
    }
    LayerStack::new(layers)
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Edges-only dissolution parameter matching a geometric-reference parameter
/// `theta = ln p`: `phi = ln p - ln(1 - p)`.
pub fn phi_from_theta(theta: f64) -> Result<f64> {
    if !(theta < 0.0) || !theta.is_finite() {
        return Err(Error::Numerical(format!(
            "theta must be finite and negative (p = e^theta < 1), got {theta}"
        )));
    }
    Ok(theta - (-theta.exp_m1()).ln())
}

/// Conditional log-odds of dyad `(i, j)` carrying weight `target` rather than
/// zero, with the rest of every layer held fixed:
/// `sum_{w <= target} phi_w . Delta_w(i, j)`.
pub fn weighted_edge_logodds(
    pair: (usize, usize),
    target: usize,
    phis: &[LayerParams],
    stack: &LayerStack,
    spec: &ModelSpec,
    attrs: &NodeAttributes,
) -> Result<f64> {
    if target == 0 || target > stack.n_layers() {
        return Err(Error::Config(format!(
            "target weight {target} outside 1..={}",
            stack.n_layers()
        )));
    }
    if phis.len() < target {
        return Err(Error::DimensionMismatch {
            expected: target,
            found: phis.len(),
        });
    }
    let (i, j) = dyad(pair.0, pair.1);
    let model = spec.bind(stack.n_nodes(), attrs)?;
    let mut total = 0.0;
    for (w, phi) in phis.iter().enumerate().take(target) {
        check_dim(model.dim(), phi.dim())?;
        let layer = stack.layer(w);
        let without = if layer.contains(i, j) {
            BinaryLayer::from_edges(
                layer.n_nodes(),
                layer.edges().iter().copied().filter(|&e| e != (i, j)),
            )?
        } else {
            layer.clone()
        };
        let delta = model.change(&without, i, j)?;
        total += dot(phi.as_slice(), &delta);
    }
    Ok(total)
}
