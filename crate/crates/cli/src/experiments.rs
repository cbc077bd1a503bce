//! The experiment pipelines. Each takes a fully resolved configuration,
//! seeds its own generator, and returns the JSON results block of the
//! report; curve files are written alongside it.

use std::path::Path;

use rand::Rng;
use serde_json::{json, Value};

use coarse_learn::convex::{
    halfline_partition, relu_partition, voronoi_partition, ConvexPartitionDistribution,
    GaussianPartition, PartitionSpec,
};
use coarse_learn::discrete::{
    estimate_alpha, sample_coarse_discrete, sample_coarse_labeled, tv_discrete, Cell,
    DiscreteDistribution, DiscretePartition, FineLabeledDistribution, PartitionDistribution,
};
use coarse_learn::gaussian::{
    check_geometric_preservation, fit_gaussian_mean_traced, sample_coarse_gaussian, tv_gaussians,
    GaussianCoarseConfig,
};
use coarse_learn::maxcut::{
    max_cut_bruteforce, reduce_instance, round_and_score, sample_hard_coarse, Graph,
};
use coarse_learn::mle::{mle_fit, MleConfig};
use coarse_learn::rng;
use coarse_learn::softmax::{
    classification_accuracy, train_coarse_logreg, train_fine_logreg, CoarseLogregConfig,
    SoftmaxModel, SoftmaxSyntheticOracle,
};
use coarse_learn::sq::{
    exact_query_expectation, stat_query, DatasetOracle, GenerativeOracle, QueryFunction, SqBudget,
};
use coarse_learn::Error;

use crate::config::{
    AlphaDiagParams, CoarseLogregParams, DiscreteMleParams, GaussianMeanParams, MaxcutDemoParams,
    Resolved, SqQueryParams,
};
use crate::report::write_csv;
use crate::{classify, config_err, runtime_err, CliError, Outcome};

/// Half singletons, half the partition that merges the first two labels.
fn mixed_partition(k: usize) -> Result<PartitionDistribution<f64>, CliError> {
    let singles = DiscretePartition::singletons(k);
    let mut cells = vec![Cell::new(vec![0, 1]).map_err(config_err)?];
    cells.extend((2..k).map(Cell::singleton));
    let merged = DiscretePartition::new(cells, k).map_err(config_err)?;
    PartitionDistribution::new(vec![singles, merged], vec![0.5, 0.5]).map_err(config_err)
}

/// Fixed four-context, three-label instance with a two-partition law.
fn four_point_instance() -> (
    FineLabeledDistribution<usize, f64>,
    PartitionDistribution<f64>,
) {
    let joint = vec![
        vec![0.10, 0.05, 0.05],
        vec![0.05, 0.20, 0.05],
        vec![0.10, 0.05, 0.15],
        vec![0.05, 0.05, 0.10],
    ];
    let d = FineLabeledDistribution::new(vec![0, 1, 2, 3], joint).expect("fixed table is valid");
    let a = DiscretePartition::new(vec![Cell::singleton(0), Cell::new(vec![1, 2]).unwrap()], 3)
        .expect("fixed partition is valid");
    let b = DiscretePartition::new(vec![Cell::new(vec![0, 1]).unwrap(), Cell::singleton(2)], 3)
        .expect("fixed partition is valid");
    let pi = PartitionDistribution::new(vec![a, b], vec![0.5, 0.5]).expect("weights sum to one");
    (d, pi)
}

/// Partition named by the config, or loaded from `input` when given. Specs
/// whose cells are complements of convex sets cannot be converted and are
/// rejected as config errors.
fn build_partition(
    input: Option<&Path>,
    kind: &str,
    threshold: f64,
    sites: Option<&[Vec<f64>]>,
    dim: usize,
) -> Result<ConvexPartitionDistribution<f64>, CliError> {
    if let Some(path) = input {
        let spec = PartitionSpec::<f64>::read_json(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        return spec.try_into_convex().map_err(config_err);
    }
    let partition = match kind {
        "halfline" => GaussianPartition::Finite(halfline_partition(threshold).map_err(config_err)?),
        "voronoi" => {
            let default_sites = vec![
                vec![1.0, 1.0],
                vec![-1.0, 1.0],
                vec![-1.0, -1.0],
                vec![1.0, -1.0],
            ];
            let sites = sites.map(<[Vec<f64>]>::to_vec).unwrap_or(default_sites);
            GaussianPartition::Finite(voronoi_partition(&sites).map_err(config_err)?)
        }
        "relu" => relu_partition(dim).map_err(config_err)?,
        other => {
            return Err(CliError::Config(format!(
                "unknown partition {other:?}; expected halfline, voronoi, or relu"
            )));
        }
    };
    Ok(ConvexPartitionDistribution::pure(partition))
}

fn default_mu_star(requested: Option<&Vec<f64>>, dim: usize) -> Result<Vec<f64>, CliError> {
    match requested {
        Some(mu) if mu.len() == dim => Ok(mu.clone()),
        Some(mu) => Err(CliError::Config(format!(
            "mu_star has dimension {}, the partition has {dim}",
            mu.len()
        ))),
        None => Ok(vec![0.75; dim]),
    }
}

pub fn discrete_mle(resolved: &Resolved<DiscreteMleParams>) -> Result<Outcome, CliError> {
    let p = &resolved.parameters;
    if p.probs.len() < 2 {
        return Err(CliError::Config("need at least two labels in probs".into()));
    }
    if p.n == 0 {
        return Err(CliError::Config("need n >= 1 samples".into()));
    }
    let truth = DiscreteDistribution::new(p.probs.clone()).map_err(config_err)?;
    let k = truth.k();
    let pi = mixed_partition(k)?;

    let mut gen = rng::seeded(resolved.seed);
    let cells: Vec<Cell> = (0..p.n)
        .map(|_| sample_coarse_discrete(&truth, &pi, &mut gen))
        .collect();

    let config = MleConfig::<f64>::for_k(k);
    let checkpoints = p.checkpoints.clamp(1, p.n);
    let mut curve: Vec<(usize, f64)> = Vec::with_capacity(checkpoints);
    let mut final_fit = None;
    for i in 1..=checkpoints {
        let m = p.n * i / checkpoints;
        if m == 0 || curve.last().is_some_and(|&(prev, _)| prev == m) {
            continue;
        }
        let fit = mle_fit(&cells[..m], k, &config).map_err(classify)?;
        let tv = tv_discrete(&fit.estimate, truth.probs()).map_err(classify)?;
        curve.push((m, tv));
        if m == p.n {
            final_fit = Some(fit);
        }
    }
    let fit = final_fit.expect("the last checkpoint uses all samples");
    let tv = curve.last().expect("at least one checkpoint").1;
    write_csv(
        &resolved.out_dir.join("tv_curve.csv"),
        "n,tv",
        curve.iter().map(|(m, tv)| format!("{m},{tv}")),
    )
    .map_err(runtime_err)?;
    Ok(Outcome::Done(json!({
        "k": k,
        "n": p.n,
        "truth": truth.probs(),
        "estimate": fit.estimate,
        "tv_error": tv,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "log_likelihood": fit.log_likelihood,
        "projected_grad_norm": fit.projected_grad_norm,
        "curve_file": "tv_curve.csv",
    })))
}

pub fn sq_query(resolved: &Resolved<SqQueryParams>) -> Result<Outcome, CliError> {
    let p = &resolved.parameters;
    let (dist, pi) = four_point_instance();
    let k = pi.k();
    let (query, query_source) = match &resolved.input {
        Some(path) => (
            QueryFunction::<usize, f64>::read_table(path, k)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
            path.display().to_string(),
        ),
        None => (
            QueryFunction::new(k, |_: &usize, _| 1.0),
            "constant-1".to_string(),
        ),
    };
    let mut budget = SqBudget::new(p.tau, p.delta, p.alpha).map_err(config_err)?;
    if p.n1_cap.is_some() {
        budget.n1_cap = p.n1_cap;
    }
    if p.n2_cap.is_some() {
        budget.n2_cap = p.n2_cap;
    }
    let exact = exact_query_expectation(&dist, &query);
    let configured_total = budget.configured_total(k);

    let mut gen = rng::seeded(resolved.seed);
    let outcome = match p.dataset_size {
        Some(m) => {
            let examples = (0..m)
                .map(|_| sample_coarse_labeled(&dist, &pi, &mut gen))
                .collect();
            let mut oracle = DatasetOracle::new(examples, k).map_err(classify)?;
            stat_query(&query, &mut budget, &mut oracle, &mut gen)
        }
        None => {
            let mut oracle = GenerativeOracle::new(dist, pi);
            stat_query(&query, &mut budget, &mut oracle, &mut gen)
        }
    };
    match outcome {
        Ok(est) => Ok(Outcome::Done(json!({
            "query_source": query_source,
            "estimate": est.estimate,
            "exact": exact,
            "abs_error": (est.estimate - exact).abs(),
            "tau": est.tau,
            "delta": est.delta,
            "alpha": p.alpha,
            "samples_drawn": est.samples_drawn,
            "configured_total": configured_total,
            "clamped_evaluations": query.clamped_count(),
            "dataset_size": p.dataset_size,
        }))),
        Err(Error::BudgetExhausted { samples_drawn }) => Ok(Outcome::BudgetExhausted {
            partial: json!({
                "status": "budget-exhausted",
                "query_source": query_source,
                "samples_drawn": samples_drawn,
                "dataset_size": p.dataset_size,
                "exact": exact,
                "configured_total": configured_total,
            }),
            message: format!("the recorded dataset ran out after {samples_drawn} draws"),
        }),
        Err(e) => Err(classify(e)),
    }
}

pub fn coarse_logreg(resolved: &Resolved<CoarseLogregParams>) -> Result<Outcome, CliError> {
    let p = &resolved.parameters;
    if p.test_n == 0 {
        return Err(CliError::Config("need test_n >= 1".into()));
    }
    let mut config = CoarseLogregConfig::<f64>::new(p.n, p.k);
    config.tau = p.tau;
    config.delta = p.delta;
    config.alpha = p.alpha;
    config.steps = p.steps;
    config.lr = p.lr;
    config.feature_bound = p.feature_bound;
    config.n1_cap = p.n1_cap;
    config.n2_cap = p.n2_cap;

    let mut truth_gen = rng::stream(resolved.seed, 1);
    let weights: Vec<Vec<f64>> = (0..p.k)
        .map(|_| {
            (0..p.n)
                .map(|_| 6.0 * truth_gen.random::<f64>() - 3.0)
                .collect()
        })
        .collect();
    let truth = SoftmaxModel::new(weights, p.feature_bound).map_err(config_err)?;
    let pi = mixed_partition(p.k)?;
    let oracle = &mut SoftmaxSyntheticOracle::new(truth, pi).map_err(config_err)?;

    let mut gen = rng::seeded(resolved.seed);
    let (model, training) = train_coarse_logreg(oracle, &config, &mut gen).map_err(classify)?;

    let fine: Vec<(Vec<f64>, usize)> = (0..p.fine_n).map(|_| oracle.draw_fine(&mut gen)).collect();
    let fine_model =
        train_fine_logreg(&fine, p.k, p.feature_bound, p.steps, p.lr).map_err(classify)?;
    let test: Vec<(Vec<f64>, usize)> = (0..p.test_n).map(|_| oracle.draw_exact(&mut gen)).collect();
    let coarse_accuracy = classification_accuracy(&model, &test);
    let fine_accuracy = classification_accuracy(&fine_model, &test);

    write_csv(
        &resolved.out_dir.join("loss_curve.csv"),
        "step,loss_estimate,samples",
        training
            .loss_estimates
            .iter()
            .zip(&training.per_step_samples)
            .enumerate()
            .map(|(step, (loss, samples))| format!("{},{loss},{samples}", step + 1)),
    )
    .map_err(runtime_err)?;
    Ok(Outcome::Done(json!({
        "n": p.n,
        "k": p.k,
        "steps": p.steps,
        "coarse_accuracy": coarse_accuracy,
        "fine_accuracy": fine_accuracy,
        "accuracy_gap": fine_accuracy - coarse_accuracy,
        "total_samples": training.total_samples,
        "clamped_evaluations": training.clamped_evaluations,
        "fine_n": p.fine_n,
        "test_n": p.test_n,
        "curve_file": "loss_curve.csv",
    })))
}

pub fn gaussian_mean(resolved: &Resolved<GaussianMeanParams>) -> Result<Outcome, CliError> {
    let p = &resolved.parameters;
    let pi = build_partition(
        resolved.input.as_deref(),
        &p.partition,
        p.threshold,
        p.sites.as_deref(),
        p.dim,
    )?;
    let dim = pi.dim();
    let partition_source = match &resolved.input {
        Some(path) => path.display().to_string(),
        None => p.partition.clone(),
    };
    let mu_star = default_mu_star(p.mu_star.as_ref(), dim)?;
    let cfg = GaussianCoarseConfig {
        mc_samples: p.mc_samples,
        step0: p.step0,
        iters: p.iters,
        averaging: p.averaging,
        min_cell_hits: p.min_cell_hits,
    };
    if p.n_observations == 0 {
        return Err(CliError::Config("need n_observations >= 1".into()));
    }
    let mut gen = rng::seeded(resolved.seed);
    let sets = (0..p.n_observations)
        .map(|_| sample_coarse_gaussian(&mu_star, &pi, &mut gen))
        .collect::<Result<Vec<_>, _>>()
        .map_err(classify)?;
    let (estimate, trace) = fit_gaussian_mean_traced(&sets, &cfg, &mut gen).map_err(classify)?;
    let tv_error = tv_gaussians(&estimate, &mu_star).map_err(classify)?;

    let mut header = String::from("iter");
    for j in 1..=dim {
        header.push_str(&format!(",mu_{j}"));
    }
    header.push_str(",tv");
    write_csv(
        &resolved.out_dir.join("trace.csv"),
        &header,
        trace.iter().enumerate().map(|(t, mu)| {
            let tv_t = tv_gaussians(mu, &mu_star).expect("trace entries share the dimension");
            let mut row = format!("{}", t + 1);
            for v in mu {
                row.push_str(&format!(",{v}"));
            }
            row.push_str(&format!(",{tv_t}"));
            row
        }),
    )
    .map_err(runtime_err)?;
    Ok(Outcome::Done(json!({
        "dim": dim,
        "partition_source": partition_source,
        "mu_star": mu_star,
        "estimate": estimate,
        "tv_error": tv_error,
        "n_observations": p.n_observations,
        "iters": p.iters,
        "trace_file": "trace.csv",
    })))
}

pub fn maxcut_demo(resolved: &Resolved<MaxcutDemoParams>) -> Result<Outcome, CliError> {
    let p = &resolved.parameters;
    let g = match &resolved.input {
        Some(path) => Graph::read_edge_list(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        None => Graph::new(4, vec![(0, 1), (1, 2), (2, 3), (3, 0)]).expect("4-cycle is valid"),
    };
    let bruteforce = if g.n() <= 24 {
        Some(max_cut_bruteforce::<f64>(&g).map_err(classify)?)
    } else {
        None
    };
    let (opt, opt_source) = match (p.opt, &bruteforce) {
        (Some(v), _) => (v, "parameter"),
        (None, Some((v, _))) => (*v, "bruteforce"),
        (None, None) => {
            return Err(CliError::Config(
                "graphs over 24 vertices need parameters.opt".into(),
            ));
        }
    };
    let inst = reduce_instance(&g, opt).map_err(classify)?;
    let d = inst.d();

    let mut gen = rng::seeded(resolved.seed);
    let mut draws = vec![0usize; d + 1];
    let mut inside = vec![0usize; d + 1];
    for _ in 0..p.n_samples {
        let (set_id, is_inside) = sample_hard_coarse(&inst, &mut gen);
        draws[set_id] += 1;
        if is_inside {
            inside[set_id] += 1;
        }
    }
    let observed = |i: usize| {
        if draws[i] == 0 {
            0.0
        } else {
            inside[i] as f64 / draws[i] as f64
        }
    };
    let kind_of = |i: usize| if i == d { "ellipsoid" } else { "band" };
    let frequencies: Vec<Value> = (0..=d)
        .map(|i| {
            json!({
                "set_id": i,
                "kind": kind_of(i),
                "draws": draws[i],
                "inside": inside[i],
                "observed_freq": observed(i),
                "expected_prob": inst.cell_probs()[i],
            })
        })
        .collect();
    let max_freq_deviation = (0..=d)
        .map(|i| (observed(i) - inst.cell_probs()[i]).abs())
        .fold(0.0, f64::max);

    let rounded = match &bruteforce {
        Some((_, witness)) => {
            let witness_f: Vec<f64> = witness.iter().map(|&s| f64::from(s)).collect();
            let mut mu: Vec<f64> = inst
                .isometry()
                .iter()
                .map(|row| row.iter().zip(&witness_f).map(|(a, b)| a * b).sum())
                .collect();
            for v in &mut mu {
                *v += p.noise * (2.0 * gen.random::<f64>() - 1.0);
            }
            let cut = round_and_score(&mu, &inst, &g).map_err(classify)?;
            json!({
                "corner": cut.corner,
                "cut_quadratic": cut.cut_quadratic,
                "ratio": cut.ratio,
            })
        }
        None => Value::Null,
    };

    inst.to_partition_spec()
        .map_err(classify)?
        .write_json(&resolved.out_dir.join("partition.json"))
        .map_err(runtime_err)?;
    write_csv(
        &resolved.out_dir.join("frequencies.csv"),
        "set_id,kind,draws,inside,observed_freq,expected_prob",
        (0..=d).map(|i| {
            format!(
                "{i},{},{},{},{},{}",
                kind_of(i),
                draws[i],
                inside[i],
                observed(i),
                inst.cell_probs()[i]
            )
        }),
    )
    .map_err(runtime_err)?;
    Ok(Outcome::Done(json!({
        "graph": { "n": g.n(), "edges": g.edges().len() },
        "opt": opt,
        "opt_source": opt_source,
        "d": d,
        "q": inst.ellipsoid_threshold(),
        "cell_probs": inst.cell_probs(),
        "n_samples": p.n_samples,
        "frequencies": frequencies,
        "max_freq_deviation": max_freq_deviation,
        "rounded": rounded,
        "partition_file": "partition.json",
        "frequencies_file": "frequencies.csv",
    })))
}

pub fn alpha_diag(resolved: &Resolved<AlphaDiagParams>) -> Result<Outcome, CliError> {
    let p = &resolved.parameters;
    let mut gen = rng::seeded(resolved.seed);
    match p.mode.as_str() {
        "discrete" => {
            if p.k < 2 {
                return Err(CliError::Config("need k >= 2 labels".into()));
            }
            if p.trials == 0 {
                return Err(CliError::Config("need trials >= 1".into()));
            }
            let pi = mixed_partition(p.k)?;
            let alpha: f64 = estimate_alpha(&pi, p.trials, &mut gen);
            Ok(Outcome::Done(json!({
                "mode": "discrete",
                "k": p.k,
                "trials": p.trials,
                "alpha_upper_bound": alpha,
            })))
        }
        "geometric" => {
            let pi = build_partition(
                resolved.input.as_deref(),
                &p.partition,
                p.threshold,
                p.sites.as_deref(),
                p.dim,
            )?;
            let dim = pi.dim();
            let partition_source = match &resolved.input {
                Some(path) => path.display().to_string(),
                None => p.partition.clone(),
            };
            let mu_star = default_mu_star(p.mu_star.as_ref(), dim)?;
            let cfg = GaussianCoarseConfig::<f64> {
                mc_samples: p.mc_samples,
                min_cell_hits: p.min_cell_hits,
                ..GaussianCoarseConfig::new()
            };
            let min_uncut_mass =
                check_geometric_preservation(&pi, &mu_star, p.n_hyperplanes, &cfg, &mut gen)
                    .map_err(classify)?;
            Ok(Outcome::Done(json!({
                "mode": "geometric",
                "dim": dim,
                "partition_source": partition_source,
                "mu_star": mu_star,
                "n_hyperplanes": p.n_hyperplanes,
                "min_uncut_mass": min_uncut_mass,
            })))
        }
        other => Err(CliError::Config(format!(
            "unknown mode {other:?}; expected discrete or geometric"
        ))),
    }
}
