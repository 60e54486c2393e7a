//! Acceptance gate. Runs every criterion in sequence and prints one
//! `PASS`/`FAIL` line per criterion; the process fails if any criterion fails.
//!
//! Pass criterion ids as arguments to run a subset, e.g.
//! `cargo test -p mlergm --test acceptance -- 2 3`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::*;
use mlergm::fixtures::{karate_attributes, karate_network};
use mlergm::gof::DEFAULT_LEVELS;
use mlergm::niw::{niw_full_conditional, sample_hyper, NiwParams};
use mlergm::stats::DEFAULT_DECAY;
use mlergm::summary::{ks_distance, mean};
use mlergm::{
    decompose, phi_from_theta, posterior_predictive_gof, recompose, run_inference, simulate_stack, summarize_posterior,
    BinaryLayer, HyperState, Init, LayerParams, LayerStack, ModelSpec, NodeAttributes, PosteriorSamples, Proposal,
    RunConfig, SimControl, StatisticDescriptor,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

// Tolerances and budgets.
const GEOMETRIC_TV_MAX: f64 = 0.02;
const GEOMETRIC_NETWORKS: u64 = 10_000;
const ORACLE_LAYERS: usize = 200;
const NIW_FIXTURES: usize = 100;
const NIW_REL_TOL: f64 = 1e-12;
const NIW_MOMENT_DRAWS: usize = 100_000;
const NIW_MOMENT_TOL: f64 = 0.02;
const EXCHANGE_KS_MAX: f64 = 0.05;
const EXCHANGE_DRAWS: usize = 10_000;
const EXCHANGE_THIN: usize = 20;
const REFERENCE_DRAWS: usize = 100_000;
const RECOVERY_RUNS: usize = 20;
const RECOVERY_MIN_COVERED: usize = 18;
const CREDIBLE_LEVEL: f64 = 0.95;
const KARATE_WITHIN_SDS: f64 = 3.0;
const KARATE_MIN_WITHIN: f64 = 0.8;
const KARATE_GOF_MIN: f64 = 0.8;
const GOF_REPLICATES: usize = 200;
const GOF_MIN_COVERAGE: f64 = 0.9;
const PROPERTY_CASES: u32 = 1000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn main() {
    let criteria: Vec<(u32, &str, fn() -> Outcome)> = vec![
        (1, "geometric-reference equivalence", geometric_reference),
        (2, "change-statistic oracle", change_statistic_oracle),
        (3, "NIW conjugacy", niw_conjugacy),
        (4, "exchange-sampler validity", exchange_validity),
        (5, "simulation-study recovery", simulation_recovery),
        (6, "karate club reproduction", karate_reproduction),
        (7, "GOF calibration", gof_calibration),
        (8, "structural invariants", structural_invariants),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failed += 1;
        }
        println!(
            "criterion {id} [{name}]: {} ({:.1}s) {}",
            if result.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            result.detail
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------------------

fn geometric_reference() -> Outcome {
    let (n, w, p) = (30usize, 5usize, 0.4f64);
    let phi = phi_from_theta(p.ln()).unwrap();
    let spec = ModelSpec::edges_only();
    let attrs = NodeAttributes::new(n);
    let params = vec![LayerParams::new(vec![phi]).unwrap(); w];
    let mut counts = vec![0u64; w + 1];
    for seed in 0..GEOMETRIC_NETWORKS {
        let ctrl = SimControl {
            seed,
            ..SimControl::default()
        };
        let y = recompose(&simulate_stack(&params, &spec, &attrs, n, &ctrl).unwrap()).unwrap();
        for (i, j) in dyads_of(n) {
            counts[y.weight(i, j) as usize] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    let tv: f64 = 0.5
        * (0..=w)
            .map(|k| {
                let exact = if k < w { p.powi(k as i32) * (1.0 - p) } else { p.powi(w as i32) };
                (counts[k] as f64 / total as f64 - exact).abs()
            })
            .sum::<f64>();
    outcome(tv < GEOMETRIC_TV_MAX, format!("TV = {tv:.5} (< {GEOMETRIC_TV_MAX}) over {GEOMETRIC_NETWORKS} networks"))
}

fn change_statistic_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let spec = full_spec();
    let (mut checked, mut mismatched) = (0usize, 0usize);
    for _ in 0..ORACLE_LAYERS {
        let n = rng.random_range(2..=10);
        let density = rng.random::<f64>();
        let bits: Vec<bool> = (0..n * (n - 1) / 2).map(|_| rng.random::<f64>() < density).collect();
        let layer = layer_from_bits(n, &bits);
        let codes: Vec<u32> = (0..n).map(|_| rng.random_range(0..3)).collect();
        let attrs = attrs_from_codes(&codes);
        let model = spec.bind(n, &attrs).unwrap();
        for (i, j) in dyads_of(n) {
            let minus = BinaryLayer::from_edges(n, layer.edges().iter().copied().filter(|&e| e != (i, j))).unwrap();
            let fast = model.change(&minus, i, j).unwrap();
            let slow = naive_change(&minus, i, j, &spec, &attrs);
            checked += fast.len();
            mismatched += fast.iter().zip(&slow).filter(|(a, b)| a != b).count();
        }
    }
    outcome(
        mismatched == 0,
        format!("{mismatched} of {checked} components differ (zero tolerance) over {ORACLE_LAYERS} layers"),
    )
}

fn random_spd(r: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(r, r, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(r, r) * 0.5
}

fn niw_conjugacy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let mut worst = 0.0f64;
    for _ in 0..NIW_FIXTURES {
        let r = rng.random_range(1..=4);
        let w = rng.random_range(0..=8);
        let prior = NiwParams {
            mu: DVector::from_fn(r, |_, _| rng.random_range(-2.0..2.0)),
            kappa: rng.random_range(0.1..5.0),
            lambda: random_spd(r, &mut rng),
            nu: r as f64 - 1.0 + rng.random_range(0.5..6.0),
        };
        let phis: Vec<Vec<f64>> = (0..w).map(|_| (0..r).map(|_| rng.random_range(-4.0..4.0)).collect()).collect();
        let refs: Vec<&[f64]> = phis.iter().map(Vec::as_slice).collect();
        let post = niw_full_conditional(&prior, &refs).unwrap();
        let lambda0: Vec<f64> = (0..r * r).map(|k| prior.lambda[(k / r, k % r)]).collect();
        let want = niw_oracle(prior.mu.as_slice(), prior.kappa, &lambda0, prior.nu, &phis);
        let got_lambda: Vec<f64> = (0..r * r).map(|k| post.lambda[(k / r, k % r)]).collect();
        worst = worst
            .max(normwise_relative_error(post.mu.as_slice(), &want.mu))
            .max(normwise_relative_error(&got_lambda, &want.lambda))
            .max((post.kappa - want.kappa).abs() / want.kappa)
            .max((post.nu - want.nu).abs() / want.nu);
    }
    let formulas_ok = worst <= NIW_REL_TOL;

    // Sampled moments against closed-form means on fixtures with |mu1| >= 1
    // and enough degrees of freedom for finite second moments.
    let mut worst_moment = 0.0f64;
    for fixture in 0..3 {
        let r = fixture + 2;
        let prior = NiwParams::default_prior(r);
        let offsets: Vec<f64> = (0..r)
            .map(|_| rng.random_range(1.5..3.0) * if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let phis: Vec<Vec<f64>> = (0..6).map(|_| offsets.iter().map(|o| o * 1.4 + rng.random_range(-0.5..0.5)).collect()).collect();
        let refs: Vec<&[f64]> = phis.iter().map(Vec::as_slice).collect();
        let post = niw_full_conditional(&prior, &refs).unwrap();
        let mut mu_sum = DVector::zeros(r);
        let mut sigma_sum = DMatrix::zeros(r, r);
        for _ in 0..NIW_MOMENT_DRAWS {
            let h = sample_hyper(&post, &mut rng).unwrap();
            mu_sum += h.mu;
            sigma_sum += h.sigma;
        }
        let mu_hat = mu_sum / NIW_MOMENT_DRAWS as f64;
        let sigma_hat = sigma_sum / NIW_MOMENT_DRAWS as f64;
        let sigma_mean = &post.lambda / (post.nu - r as f64 - 1.0);
        for a in 0..r {
            worst_moment = worst_moment.max((mu_hat[a] - post.mu[a]).abs() / post.mu[a].abs());
            for b in 0..r {
                let scale = (sigma_mean[(a, a)] * sigma_mean[(b, b)]).sqrt();
                worst_moment = worst_moment.max((sigma_hat[(a, b)] - sigma_mean[(a, b)]).abs() / scale);
            }
        }
    }
    let moments_ok = worst_moment < NIW_MOMENT_TOL;
    outcome(
        formulas_ok && moments_ok,
        format!(
            "max formula rel. error {worst:.2e} (<= {NIW_REL_TOL:e}); max moment rel. error {worst_moment:.4} (< {NIW_MOMENT_TOL}) over {NIW_MOMENT_DRAWS} draws"
        ),
    )
}

fn exchange_validity() -> Outcome {
    let n = 6;
    let observed = BinaryLayer::from_edges(n, [(0, 1), (0, 2), (1, 2), (2, 3), (4, 5)]).unwrap();
    let edges = observed.n_edges() as f64;
    let dyads = observed.n_dyads() as f64;
    let (prior_mean, prior_var) = (0.0f64, 4.0f64);
    let hyper = HyperState {
        mu: DVector::from_element(1, prior_mean),
        sigma: DMatrix::from_element(1, 1, prior_var),
    };
    let stack = LayerStack::new(vec![observed]).unwrap();
    let iterations = 2 * EXCHANGE_DRAWS * EXCHANGE_THIN;
    let cfg = RunConfig {
        chains: 1,
        iterations,
        burn_in: 0.5,
        thinning: EXCHANGE_THIN,
        proposal: Proposal::RandomWalk { sigma: 1.0 },
        init: Init::Zero,
        fixed_hyper: Some(hyper),
        seed: 40,
        ..RunConfig::default()
    };
    let post = run_inference(
        &stack,
        &ModelSpec::edges_only(),
        &NodeAttributes::new(n),
        &NiwParams::default_prior(1),
        &cfg,
    )
    .unwrap();
    let exchange = post.phi_values(0, 0);

    // Exact Bernoulli likelihood: E edges among D free dyads, each present
    // with probability e^phi / (1 + e^phi).
    let log_post = |phi: f64| {
        edges * phi - dyads * (1.0 + phi.exp()).ln() - 0.5 * (phi - prior_mean).powi(2) / prior_var
    };
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut phi = 0.0;
    let mut reference = Vec::with_capacity(REFERENCE_DRAWS);
    for t in 0..(REFERENCE_DRAWS * 10 + 10_000) {
        let z: f64 = StandardNormal.sample(&mut rng);
        let prop = phi + z;
        if rng.random::<f64>().ln() < log_post(prop) - log_post(phi) {
            phi = prop;
        }
        if t >= 10_000 && (t - 10_000) % 10 == 0 {
            reference.push(phi);
        }
    }
    let ks = ks_distance(&exchange, &reference);
    outcome(
        ks < EXCHANGE_KS_MAX && exchange.len() == EXCHANGE_DRAWS,
        format!(
            "KS = {ks:.4} (< {EXCHANGE_KS_MAX}); {} exchange draws (mean {:.3}) vs {} exact-likelihood draws (mean {:.3})",
            exchange.len(),
            mean(&exchange),
            reference.len(),
            mean(&reference)
        ),
    )
}

/// Whether `truth` lies in the central `level` region of the draws, ranked
/// by Mahalanobis distance from the posterior mean.
fn in_credible_region(draws: &[Vec<f64>], truth: &[f64], level: f64) -> bool {
    let r = truth.len();
    let m = draws.len() as f64;
    let centre: Vec<f64> = (0..r).map(|k| draws.iter().map(|d| d[k]).sum::<f64>() / m).collect();
    let cov = DMatrix::from_fn(r, r, |a, b| {
        draws.iter().map(|d| (d[a] - centre[a]) * (d[b] - centre[b])).sum::<f64>() / (m - 1.0)
    });
    let Some(inv) = cov.try_inverse() else {
        return false;
    };
    let dist = |x: &[f64]| {
        let d = DVector::from_iterator(r, x.iter().zip(&centre).map(|(a, b)| a - b));
        (d.transpose() * &inv * &d)[0]
    };
    let mut ds: Vec<f64> = draws.iter().map(|d| dist(d)).collect();
    ds.sort_by(f64::total_cmp);
    dist(truth) <= mlergm::summary::quantile_sorted(&ds, level)
}

fn recovery_config(seed: u64) -> RunConfig {
    RunConfig {
        chains: 4,
        iterations: 1500,
        thinning: 5,
        sim: SimControl {
            steps_per_dyad: 10,
            ..SimControl::default()
        },
        seed,
        ..RunConfig::default()
    }
}

/// Draws `phi_w ~ N(mu, diag(var))` for three layers and simulates the data.
fn study_data(mu: &[f64], var: &[f64], seed: u64) -> (Vec<Vec<f64>>, LayerStack) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phis: Vec<Vec<f64>> = (0..3)
        .map(|_| {
            mu.iter()
                .zip(var)
                .map(|(m, v)| m + v.sqrt() * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    let params: Vec<LayerParams> = phis.iter().map(|p| LayerParams::new(p.clone()).unwrap()).collect();
    let ctrl = SimControl {
        seed,
        ..SimControl::default()
    };
    let stack = simulate_stack(&params, &edges_gwesp(), &NodeAttributes::new(50), 50, &ctrl).unwrap();
    (phis, stack)
}

fn simulation_recovery() -> Outcome {
    let studies: [(&str, [f64; 2], [f64; 2]); 2] = [("a", [0.0, 0.0], [2.0, 1.0]), ("b", [-2.0, 0.5], [2.0, 0.5])];
    let spec = edges_gwesp();
    let attrs = NodeAttributes::new(50);
    let prior = NiwParams::default_prior(2);
    let mut pass = true;
    let mut parts = Vec::new();
    for (s, (name, mu, var)) in studies.iter().enumerate() {
        let (mut covered, mut diverged) = (0, 0);
        for run in 0..RECOVERY_RUNS {
            let seed = 5000 + 100 * s as u64 + run as u64;
            let (_, stack) = study_data(mu, var, seed);
            // A fit that diverges numerically produced no credible region, so
            // it counts as a miss; the count is reported alongside coverage.
            match run_inference(&stack, &spec, &attrs, &prior, &recovery_config(seed)) {
                Ok(post) => {
                    let draws: Vec<Vec<f64>> = post.draws.iter().map(|d| d.mu.clone()).collect();
                    if in_credible_region(&draws, mu, CREDIBLE_LEVEL) {
                        covered += 1;
                    }
                }
                Err(mlergm::Error::Numerical(_)) => diverged += 1,
                Err(e) => panic!("fit {seed} failed: {e}"),
            }
        }
        pass &= covered >= RECOVERY_MIN_COVERED;
        parts.push(format!("study ({name}) covered {covered}/{RECOVERY_RUNS}, {diverged} diverged"));
    }
    outcome(
        pass,
        format!("{} (need >= {RECOVERY_MIN_COVERED} each, {:.0}% region)", parts.join(", "), CREDIBLE_LEVEL * 100.0),
    )
}

/// Layer-specific posterior means and SDs reported for the karate club:
/// `[statistic][layer] = (mean, sd)`.
const KARATE_TABLE: [[(f64, f64); 3]; 4] = [
    [(-3.96, 0.27), (0.27, 0.68), (-1.09, 0.63)],
    [(0.53, 0.14), (0.53, 0.24), (0.51, 0.25)],
    [(0.17, 0.02), (-0.18, 0.09), (0.06, 0.17)],
    [(1.29, 0.27), (0.56, 0.43), (0.21, 0.52)],
];

fn karate_spec() -> ModelSpec {
    ModelSpec::new(vec![
        StatisticDescriptor::edges(),
        StatisticDescriptor::gwesp(DEFAULT_DECAY),
        StatisticDescriptor::gwnsp(DEFAULT_DECAY),
        StatisticDescriptor::nodematch("faction"),
    ])
    .unwrap()
}

fn karate_reproduction() -> Outcome {
    let y = karate_network().unwrap();
    let attrs = karate_attributes().unwrap();
    let stack = decompose(&y, 3).unwrap();
    let spec = karate_spec();
    let cfg = RunConfig {
        chains: 8,
        iterations: 4000,
        thinning: 20,
        seed: 60,
        ..RunConfig::default()
    };
    let post = run_inference(&stack, &spec, &attrs, &NiwParams::default_prior(4), &cfg).unwrap();
    let summary = summarize_posterior(&post, &spec.labels()).unwrap();
    let (mut within, mut signs_ok, mut large) = (0, 0, 0);
    let mut cells = Vec::new();
    for (k, row) in KARATE_TABLE.iter().enumerate() {
        for (w, &(m, sd)) in row.iter().enumerate() {
            let est = summary.phi(w, k).mean;
            if (est - m).abs() <= KARATE_WITHIN_SDS * sd {
                within += 1;
            }
            if m.abs() >= 2.0 * sd {
                large += 1;
                if est.signum() == m.signum() {
                    signs_ok += 1;
                }
            }
            cells.push(format!("{est:.2}"));
        }
    }
    let frac = within as f64 / 12.0;
    let gof = posterior_predictive_gof(
        &post,
        &spec,
        &attrs,
        &y,
        GOF_REPLICATES,
        &DEFAULT_LEVELS,
        &SimControl {
            seed: 61,
            ..SimControl::default()
        },
    )
    .unwrap();
    let pass = signs_ok == large && frac >= KARATE_MIN_WITHIN && gof.coverage >= KARATE_GOF_MIN;
    outcome(
        pass,
        format!(
            "signs {signs_ok}/{large} large entries; {within}/12 within {KARATE_WITHIN_SDS} SDs (need >= {:.0}%); GOF coverage {:.2} (>= {KARATE_GOF_MIN}); phi means [{}]",
            KARATE_MIN_WITHIN * 100.0,
            gof.coverage,
            cells.join(" ")
        ),
    )
}

fn gof_calibration() -> Outcome {
    let truth = [[0.5, 0.2], [-1.0, 0.6], [1.2, -0.3]];
    let spec = edges_gwesp();
    let attrs = NodeAttributes::new(50);
    let params: Vec<LayerParams> = truth.iter().map(|p| LayerParams::new(p.to_vec()).unwrap()).collect();
    let stack = simulate_stack(
        &params,
        &spec,
        &attrs,
        50,
        &SimControl {
            seed: 70,
            ..SimControl::default()
        },
    )
    .unwrap();
    let observed = recompose(&stack).unwrap();
    let post: PosteriorSamples =
        run_inference(&stack, &spec, &attrs, &NiwParams::default_prior(2), &recovery_config(71)).unwrap();
    let report = posterior_predictive_gof(
        &post,
        &spec,
        &attrs,
        &observed,
        GOF_REPLICATES,
        &DEFAULT_LEVELS,
        &SimControl {
            seed: 72,
            ..SimControl::default()
        },
    )
    .unwrap();
    outcome(
        report.coverage >= GOF_MIN_COVERAGE,
        format!(
            "{:.1}% of nodes inside the 95% envelope (>= {:.0}%), R = {GOF_REPLICATES}",
            report.coverage * 100.0,
            GOF_MIN_COVERAGE * 100.0
        ),
    )
}

fn structural_invariants() -> Outcome {
    let results = vec![
        ("nesting", run_property(PROPERTY_CASES, (arb_weighted(12, 5), 0usize..3), |(y, e)| check_nesting(&y, e))),
        (
            "recompose identity",
            run_property(PROPERTY_CASES, (arb_weighted(12, 6), 0usize..3), |(y, e)| check_recompose_identity(&y, e)),
        ),
        (
            "structural zeros",
            run_property(
                PROPERTY_CASES,
                (arb_layer(9), prop::collection::vec(-3.0f64..3.0, 2), any::<u64>()),
                |((l, _), phi, seed)| check_structural_zeros(&l, &phi, seed),
            ),
        ),
        (
            "permutation invariance",
            run_property(
                PROPERTY_CASES,
                arb_layer(9).prop_flat_map(|(l, c)| {
                    let n = l.n_nodes();
                    (Just(l), Just(c), arb_permutation(n))
                }),
                |(l, c, p)| check_permutation_invariance(&l, &c, &p),
            ),
        ),
        (
            "determinism",
            run_property(
                PROPERTY_CASES,
                (2usize..10, prop::collection::vec(-2.0f64..2.0, 6), any::<u64>()),
                |(n, phis, seed)| check_simulation_determinism(n, &phis, seed),
            ),
        ),
        (
            "change-statistic oracle",
            run_property(PROPERTY_CASES, arb_layer(8), |(l, c)| check_change_oracle(&l, &c)),
        ),
        (
            "disjoint-union additivity",
            run_property(PROPERTY_CASES, (arb_layer(6), arb_layer(6)), |((a, ca), (b, cb))| {
                check_disjoint_union(&a, &ca, &b, &cb)
            }),
        ),
        ("edge-list round trip", run_property(PROPERTY_CASES, arb_weighted(15, 64), |y| check_edgelist_round_trip(&y))),
        ("handshake identity", run_property(PROPERTY_CASES, arb_weighted(15, 10), |y| check_handshake(&y))),
    ];
    let failures: Vec<String> = results
        .iter()
        .filter_map(|(name, r)| r.as_ref().err().map(|e| format!("{name}: {e}")))
        .collect();
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} properties x {PROPERTY_CASES} cases", results.len())
        } else {
            failures.join("; ")
        },
    )
}
