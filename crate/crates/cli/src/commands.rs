use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mlergm::io::{
    format_layer, format_weighted_edgelist, read_attributes, read_layer, read_posterior, read_raw_edgelist,
    read_weighted_edgelist,
};
use mlergm::network::quantile_thresholds;
use mlergm::{
    decompose, ordinalize, posterior_predictive_gof, recompose, run_inference, simulate_stack, summarize_posterior,
    LayerParams, LayerStack, NodeAttributes, WeightedNetwork,
};
use serde_json::json;

use crate::config::Config;
use crate::error::CliError;
use crate::manifest::OutputDir;

pub struct Data {
    pub network: WeightedNetwork,
    pub layers: usize,
    pub attrs: NodeAttributes,
    pub thresholds: Option<Vec<f64>>,
    pub inputs: Vec<PathBuf>,
}

/// Reads the network (ordinalizing raw weights if asked) and node attributes.
pub fn load_data(cfg: &Config) -> Result<Data, CliError> {
    let d = &cfg.data;
    let edges = d
        .edges
        .as_ref()
        .ok_or_else(|| CliError::Usage("no data file: set data.edges or pass --data".into()))?;
    if d.thresholds.is_some() && d.quantiles.is_some() {
        return Err(CliError::Usage("data.thresholds and data.quantiles are mutually exclusive".into()));
    }
    let (network, thresholds) = if d.thresholds.is_some() || d.quantiles.is_some() {
        let raw = read_raw_edgelist(edges, d.nodes)?.to_matrix();
        let thresholds = match (&d.thresholds, &d.quantiles) {
            (Some(t), _) => t.clone(),
            (None, Some(q)) => quantile_thresholds(&raw, q)?,
            (None, None) => unreachable!(),
        };
        (ordinalize(&raw, &thresholds)?, Some(thresholds))
    } else {
        (read_weighted_edgelist(edges, d.nodes)?, None)
    };
    let layers = d
        .layers
        .or(thresholds.as_ref().map(Vec::len))
        .unwrap_or(network.max_weight() as usize)
        .max(1);
    let mut inputs = vec![edges.clone()];
    let attrs = match &d.attributes {
        Some(path) => {
            inputs.push(path.clone());
            read_attributes(path, network.n_nodes())?
        }
        None => NodeAttributes::new(network.n_nodes()),
    };
    Ok(Data {
        network,
        layers,
        attrs,
        thresholds,
        inputs,
    })
}

fn layer_table(stack: &LayerStack) -> String {
    let mut out = String::from("layer,edges,dyads\n");
    for (w, (e, d)) in stack.edge_counts().iter().zip(stack.dyad_counts()).enumerate() {
        let _ = writeln!(out, "{},{e},{d}", w + 1);
    }
    out
}

pub fn decompose_cmd(cfg: Config, out: &Path, recompose_check: bool) -> Result<String, CliError> {
    let data = load_data(&cfg)?;
    let stack = decompose(&data.network, data.layers)?;
    let mut dir = OutputDir::create(out)?;
    dir.write("network.csv", &format_weighted_edgelist(&data.network))?;
    for (w, layer) in stack.layers().iter().enumerate() {
        dir.write(&format!("layer_{}.csv", w + 1), &format_layer(layer))?;
    }
    let table = layer_table(&stack);
    dir.write("layers.csv", &table)?;
    if recompose_check {
        let layers = (1..=stack.n_layers())
            .map(|w| read_layer(&dir.path(&format!("layer_{w}.csv"))))
            .collect::<Result<Vec<_>, _>>()?;
        let back = recompose(&LayerStack::new(layers)?)?;
        dir.write("recomposed.csv", &format_weighted_edgelist(&back))?;
    }
    let results = json!({
        "nodes": data.network.n_nodes(),
        "layers": stack.n_layers(),
        "edge_counts": stack.edge_counts(),
        "thresholds": data.thresholds,
    });
    let seed = cfg.mcmc.seed;
    let inputs = data.inputs.clone();
    dir.finish("decompose", cfg, seed, &inputs, results)?;
    Ok(table)
}

/// Seed of replicate `k`, decorrelated from neighbouring base seeds.
pub fn replicate_seed(seed: u64, k: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(seed ^ mix(k))
}

pub fn simulate_cmd(cfg: Config, out: &Path) -> Result<String, CliError> {
    let spec = cfg.model_spec()?;
    let n = cfg
        .simulate
        .nodes
        .or(cfg.data.nodes)
        .ok_or_else(|| CliError::Usage("set simulate.nodes (or pass --nodes)".into()))?;
    if cfg.simulate.parameters.is_empty() {
        return Err(CliError::Usage("simulate.parameters must list one vector per layer".into()));
    }
    if cfg.simulate.replicates == 0 {
        return Err(CliError::Usage("simulate.replicates must be at least 1".into()));
    }
    let params = cfg
        .simulate
        .parameters
        .iter()
        .map(|p| LayerParams::new(p.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut inputs = Vec::new();
    let attrs = match &cfg.data.attributes {
        Some(path) => {
            inputs.push(path.clone());
            read_attributes(path, n)?
        }
        None => NodeAttributes::new(n),
    };
    let mut dir = OutputDir::create(out)?;
    let mut counts = String::from("replicate,layer,edges,density\n");
    let dyads = (n * n.saturating_sub(1) / 2).max(1) as f64;
    let mut mean_density = vec![0.0; params.len()];
    for k in 0..cfg.simulate.replicates {
        let mut ctrl = cfg.sim_control();
        ctrl.seed = replicate_seed(cfg.mcmc.seed, k as u64);
        let stack = simulate_stack(&params, &spec, &attrs, n, &ctrl)?;
        dir.write(&format!("network_{}.csv", k + 1), &format_weighted_edgelist(&recompose(&stack)?))?;
        for (w, e) in stack.edge_counts().iter().enumerate() {
            let density = *e as f64 / dyads;
            mean_density[w] += density / cfg.simulate.replicates as f64;
            let _ = writeln!(counts, "{},{},{e},{density}", k + 1, w + 1);
        }
    }
    dir.write("layer_counts.csv", &counts)?;
    let mut report = String::from("layer,mean_density\n");
    for (w, d) in mean_density.iter().enumerate() {
        let _ = writeln!(report, "{},{d:.4}", w + 1);
    }
    let seed = cfg.mcmc.seed;
    dir.finish("simulate", cfg, seed, &inputs, json!({ "mean_density": mean_density }))?;
    Ok(report)
}

pub fn fit_cmd(mut cfg: Config, out: &Path) -> Result<String, CliError> {
    let spec = cfg.model_spec()?;
    let data = load_data(&cfg)?;
    let stack = decompose(&data.network, data.layers)?;
    let prior = cfg.niw_prior(spec.dim())?;
    cfg.resolve_prior(&prior);
    let run = cfg.run_config();
    let samples = run_inference(&stack, &spec, &data.attrs, &prior, &run)?;
    let summary = summarize_posterior(&samples, &spec.labels())?;

    let mut dir = OutputDir::create(out)?;
    let (phi, hyper) = mlergm::io::format_posterior(&samples);
    dir.write("posterior.csv", &phi)?;
    dir.write("hyper.csv", &hyper)?;
    let mut acc = String::from("chain,layer,rate\n");
    for (c, rates) in samples.acceptance.iter().enumerate() {
        for (w, r) in rates.iter().enumerate() {
            let _ = writeln!(acc, "{c},{},{r}", w + 1);
        }
    }
    dir.write("acceptance.csv", &acc)?;
    dir.write("summary.csv", &summary.to_csv())?;
    let text = summary.to_text();
    dir.write("summary.txt", &text)?;
    let mean_acceptance: Vec<f64> = (0..samples.n_layers)
        .map(|w| samples.acceptance.iter().map(|r| r[w]).sum::<f64>() / samples.acceptance.len().max(1) as f64)
        .collect();
    let results = json!({
        "labels": spec.labels(),
        "edge_counts": stack.edge_counts(),
        "thresholds": data.thresholds,
        "draws": samples.draws.len(),
        "mean_acceptance_by_layer": mean_acceptance,
    });
    let seed = cfg.mcmc.seed;
    dir.finish("fit", cfg, seed, &data.inputs, results)?;
    Ok(text)
}

fn posterior_files(path: &Path) -> (PathBuf, PathBuf) {
    if path.is_dir() {
        (path.join("posterior.csv"), path.join("hyper.csv"))
    } else {
        (path.to_path_buf(), path.with_file_name("hyper.csv"))
    }
}

pub fn gof_cmd(cfg: Config, posterior: &Path, out: &Path) -> Result<String, CliError> {
    let spec = cfg.model_spec()?;
    let data = load_data(&cfg)?;
    let (phi_path, hyper_path) = posterior_files(posterior);
    let samples = read_posterior(&phi_path, &hyper_path)?;
    if samples.n_layers != data.layers {
        return Err(CliError::Usage(format!(
            "posterior has {} layers but the data decompose into {}",
            samples.n_layers, data.layers
        )));
    }
    let report = posterior_predictive_gof(
        &samples,
        &spec,
        &data.attrs,
        &data.network,
        cfg.gof.replicates,
        &cfg.gof.levels,
        &cfg.sim_control(),
    )?;
    let mut dir = OutputDir::create(out)?;
    dir.write("gof_envelope.csv", &report.envelope_csv())?;
    dir.write("gof_degrees.csv", &report.long_csv())?;
    let text = format!(
        "Weighted-degree coverage: {:.1}% of {} nodes inside the [{}, {}] envelope over {} replicates\n",
        report.coverage * 100.0,
        report.n_nodes(),
        cfg.gof.levels[0],
        cfg.gof.levels[cfg.gof.levels.len() - 1],
        cfg.gof.replicates
    );
    dir.write("gof.txt", &text)?;
    let mut inputs = data.inputs.clone();
    inputs.extend([phi_path, hyper_path]);
    let seed = cfg.mcmc.seed;
    dir.finish("gof", cfg, seed, &inputs, json!({ "coverage": report.coverage }))?;
    Ok(text)
}

pub fn summarize_cmd(cfg: Option<Config>, posterior: &Path, out: &Path) -> Result<String, CliError> {
    let (phi_path, hyper_path) = posterior_files(posterior);
    let samples = read_posterior(&phi_path, &hyper_path)?;
    let labels = match &cfg {
        Some(c) if !c.model.is_empty() => c.model_spec()?.labels(),
        _ => (1..=samples.dim).map(|k| format!("param_{k}")).collect(),
    };
    let summary = summarize_posterior(&samples, &labels)?;
    let mut dir = OutputDir::create(out)?;
    dir.write("summary.csv", &summary.to_csv())?;
    let text = summary.to_text();
    dir.write("summary.txt", &text)?;
    let cfg = cfg.unwrap_or_default();
    let seed = cfg.mcmc.seed;
    dir.finish("summarize", cfg, seed, &[phi_path, hyper_path], json!({ "draws": samples.draws.len() }))?;
    Ok(text)
}
