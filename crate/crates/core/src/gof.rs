//! Posterior-predictive goodness of fit on weighted degrees, and posterior
//! summaries.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::infer::PosteriorSamples;
use crate::network::{recompose, NodeAttributes, WeightedNetwork};
use crate::sim::{simulate_stack_with, SimControl};
use crate::stats::ModelSpec;
use crate::summary::{mean, quantile_sorted, std_dev};

/// Weighted degree (strength) of `node`.
pub fn weighted_degree(y: &WeightedNetwork, node: usize) -> Result<u64> {
    y.weighted_degree(node)
}

pub const DEFAULT_LEVELS: [f64; 3] = [0.025, 0.5, 0.975];

/// Observed weighted degrees against their posterior-predictive envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct GofReport {
    pub observed: Vec<u64>,
    /// `simulated[replicate][node]`.
    pub simulated: Vec<Vec<u64>>,
    pub levels: Vec<f64>,
    /// `envelope[node][level]`.
    pub envelope: Vec<Vec<f64>>,
    /// Fraction of nodes whose observed degree lies within the outermost levels.
    pub coverage: f64,
}

impl GofReport {
    pub fn n_nodes(&self) -> usize {
        self.observed.len()
    }

    /// Fraction of nodes inside the pointwise `[lo, hi]` quantile band.
    pub fn coverage_between(&self, lo: f64, hi: f64) -> f64 {
        let inside = (0..self.n_nodes())
            .filter(|&i| {
                let mut col: Vec<f64> = self.simulated.iter().map(|rep| rep[i] as f64).collect();
                col.sort_by(f64::total_cmp);
                let obs = self.observed[i] as f64;
                quantile_sorted(&col, lo) <= obs && obs <= quantile_sorted(&col, hi)
            })
            .count();
        inside as f64 / self.n_nodes().max(1) as f64
    }

    /// One row per node per quantile level: `node,quantile,value`.
    pub fn envelope_csv(&self) -> String {
        let mut out = String::from("node,quantile,value\n");
        for (i, row) in self.envelope.iter().enumerate() {
            for (p, v) in self.levels.iter().zip(row) {
                let _ = writeln!(out, "{i},{p},{v}");
            }
        }
        out
    }

    /// Plot-ready long format: `series,node,weighted_degree`, where series is
    /// `observed` or the replicate number.
    pub fn long_csv(&self) -> String {
        let mut out = String::from("series,node,weighted_degree\n");
        for (i, d) in self.observed.iter().enumerate() {
            let _ = writeln!(out, "observed,{i},{d}");
        }
        for (r, rep) in self.simulated.iter().enumerate() {
            for (i, d) in rep.iter().enumerate() {
                let _ = writeln!(out, "{r},{i},{d}");
            }
        }
        out
    }
}

/// Simulates `replicates` weighted networks, each from a posterior draw
/// chosen uniformly at random, and compares their weighted degrees with the
/// observed network. Replicate `k` uses its own random stream derived from
/// `ctrl.seed`, so the report does not depend on scheduling.
pub fn posterior_predictive_gof(
    samples: &PosteriorSamples,
    spec: &ModelSpec,
    attrs: &NodeAttributes,
    observed: &WeightedNetwork,
    replicates: usize,
    levels: &[f64],
    ctrl: &SimControl,
) -> Result<GofReport> {
    ctrl.validate()?;
    if samples.is_empty() {
        return Err(Error::Config("no posterior draws".into()));
    }
    if replicates == 0 {
        return Err(Error::Config("replicate count must be at least 1".into()));
    }
    if levels.is_empty() || levels.iter().any(|p| !(0.0..=1.0).contains(p)) || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("quantile levels must be increasing values in [0, 1]".into()));
    }
    if samples.dim != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: samples.dim,
        });
    }
    let n = observed.n_nodes();
    let model = spec.bind(n, attrs)?;
    let simulated = (0..replicates)
        .into_par_iter()
        .map(|k| -> Result<Vec<u64>> {
            let mut rng = ChaCha8Rng::seed_from_u64(ctrl.seed);
            rng.set_stream(k as u64);
            let draw = &samples.draws[rng.random_range(0..samples.draws.len())];
            let phis: Vec<&[f64]> = draw.phis.iter().map(Vec::as_slice).collect();
            // LayerStack construction checks nesting before recomposition.
            let stack = simulate_stack_with(&model, &phis, n, ctrl, &mut rng)?;
            Ok(recompose(&stack)?.weighted_degrees())
        })
        .collect::<Result<Vec<_>>>()?;

    let envelope: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut col: Vec<f64> = simulated.iter().map(|rep| rep[i] as f64).collect();
            col.sort_by(f64::total_cmp);
            levels.iter().map(|&p| quantile_sorted(&col, p)).collect()
        })
        .collect();
    let observed = observed.weighted_degrees();
    let mut report = GofReport {
        observed,
        simulated,
        levels: levels.to_vec(),
        envelope,
        coverage: 0.0,
    };
    report.coverage = report.coverage_between(levels[0], levels[levels.len() - 1]);
    Ok(report)
}

/// Summary of one scalar parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSummary {
    /// `phi`, `mu` or `sigma`.
    pub parameter: String,
    pub statistic: String,
    /// 1-based layer for `phi`, `None` for hyper-parameters.
    pub layer: Option<usize>,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q500: f64,
    pub q975: f64,
}

impl ParamSummary {
    fn of(parameter: &str, statistic: &str, layer: Option<usize>, values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        ParamSummary {
            parameter: parameter.to_string(),
            statistic: statistic.to_string(),
            layer,
            mean: mean(values),
            sd: std_dev(values),
            q025: quantile_sorted(&sorted, 0.025),
            q500: quantile_sorted(&sorted, 0.5),
            q975: quantile_sorted(&sorted, 0.975),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub labels: Vec<String>,
    pub n_layers: usize,
    /// Layer-major: entry `w * r + k`.
    pub phi: Vec<ParamSummary>,
    pub mu: Vec<ParamSummary>,
    /// Diagonal of `Sigma`.
    pub sigma: Vec<ParamSummary>,
}

impl PosteriorSummary {
    /// Summary of parameter `k` in layer `layer` (both 0-based).
    pub fn phi(&self, layer: usize, k: usize) -> &ParamSummary {
        &self.phi[layer * self.labels.len() + k]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("parameter,statistic,layer,mean,sd,q2.5,q50,q97.5\n");
        for s in self.mu.iter().chain(&self.sigma).chain(&self.phi) {
            let layer = s.layer.map(|l| l.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                s.parameter, s.statistic, layer, s.mean, s.sd, s.q025, s.q500, s.q975
            );
        }
        out
    }

    /// Text tables: hyper-level mean/SD, then per-layer mean/SD columns.
    pub fn to_text(&self) -> String {
        let width = self.labels.iter().map(String::len).max().unwrap_or(0).max(9) + 6;
        let mut out = String::new();
        let _ = writeln!(out, "Posterior estimates for mu");
        let _ = writeln!(out, "{:<width$} {:>8} {:>8}", "Parameter", "Mean", "SD");
        for (k, s) in self.mu.iter().enumerate() {
            let name = format!("mu_{} ({})", k + 1, self.labels[k]);
            let _ = writeln!(out, "{name:<width$} {:>8.2} {:>8.2}", s.mean, s.sd);
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "Posterior estimates for phi by layer");
        let mut header = format!("{:<width$}", "Parameter");
        for w in 0..self.n_layers {
            let _ = write!(header, " {:>8} {:>8}", format!("L{} Mean", w + 1), "SD");
        }
        let _ = writeln!(out, "{header}");
        for (k, label) in self.labels.iter().enumerate() {
            let mut line = format!("{:<width$}", format!("phi_{} ({label})", k + 1));
            for w in 0..self.n_layers {
                let s = self.phi(w, k);
                let _ = write!(line, " {:>8.2} {:>8.2}", s.mean, s.sd);
            }
            let _ = writeln!(out, "{line}");
        }
        out
    }
}

/// Per-parameter mean, SD and quantiles of the posterior draws.
pub fn summarize_posterior(samples: &PosteriorSamples, labels: &[String]) -> Result<PosteriorSummary> {
    if samples.is_empty() {
        return Err(Error::Config("no posterior draws to summarize".into()));
    }
    if labels.len() != samples.dim {
        return Err(Error::DimensionMismatch {
            expected: samples.dim,
            found: labels.len(),
        });
    }
    let r = samples.dim;
    let mut phi = Vec::with_capacity(samples.n_layers * r);
    for w in 0..samples.n_layers {
        for (k, label) in labels.iter().enumerate() {
            phi.push(ParamSummary::of("phi", label, Some(w + 1), &samples.phi_values(w, k)));
        }
    }
    let mu = (0..r)
        .map(|k| ParamSummary::of("mu", &labels[k], None, &samples.mu_values(k)))
        .collect();
    let sigma = (0..r)
        .map(|k| ParamSummary::of("sigma", &labels[k], None, &samples.sigma_values(k, k)))
        .collect();
    Ok(PosteriorSummary {
        labels: labels.to_vec(),
        n_layers: samples.n_layers,
        phi,
        mu,
        sigma,
    })
}
