//! Multiclass logistic regression trained from coarse labels.
//!
//! The fine-label log likelihood of a softmax model is concave in the weight
//! matrix, and each gradient coordinate is a bounded expectation over
//! `(x, z)` pairs, so the statistical-query engine can estimate it from
//! coarse examples alone. Gradient ascent on those estimates trains the model
//! without ever seeing a fine label; the fine-label trainer in this module
//! exists as the paired baseline.

use std::io::{BufRead, BufReader, Write as IoWrite};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::discrete::{DiscreteDistribution, PartitionDistribution};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sq::{stat_query, CoarseOracle, CoarseExampleOwned, QueryFunction, SqBudget};

/// Softmax classifier with one weight row per class; features are assumed to
/// satisfy `‖x‖∞ ≤ feature_bound`, which bounds every gradient query.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftmaxModel<F> {
    weights: Vec<Vec<F>>,
    feature_bound: F,
}

impl<F: Real> SoftmaxModel<F> {
    pub fn new(weights: Vec<Vec<F>>, feature_bound: F) -> Result<Self> {
        let k = weights.len();
        if k < 2 {
            return Err(Error::invalid("need at least two classes"));
        }
        let n = weights[0].len();
        if n == 0 || weights.iter().any(|row| row.len() != n) {
            return Err(Error::invalid("weight rows must share one positive length"));
        }
        if weights.iter().flatten().any(|w| !w.is_finite()) {
            return Err(Error::invalid("weights must be finite"));
        }
        if !(feature_bound > F::zero()) || !feature_bound.is_finite() {
            return Err(Error::invalid("feature bound must be positive and finite"));
        }
        Ok(Self {
            weights,
            feature_bound,
        })
    }

    pub fn zeros(k: usize, n: usize, feature_bound: F) -> Result<Self> {
        Self::new(vec![vec![F::zero(); n]; k], feature_bound)
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn n(&self) -> usize {
        self.weights[0].len()
    }

    pub fn weights(&self) -> &[Vec<F>] {
        &self.weights
    }

    pub fn feature_bound(&self) -> F {
        self.feature_bound
    }

    /// Writes the weight matrix as CSV, one row per class.
    pub fn write_weights_csv(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        for row in &self.weights {
            let line: Vec<String> = row.iter().map(|w| format!("{}", w.as_f64())).collect();
            writeln!(file, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Reads a CSV weight matrix; the feature bound is not part of the
    /// checkpoint and must be supplied.
    pub fn read_weights_csv(path: &Path, feature_bound: F) -> Result<Self> {
        let reader = BufReader::new(std::fs::File::open(path)?);
        let mut weights = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let text = line.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            let row: Vec<F> = text
                .split(',')
                .map(|field| {
                    field
                        .trim()
                        .parse::<f64>()
                        .map(F::of)
                        .map_err(|_| Error::Parse {
                            line: idx + 1,
                            message: format!("bad weight {field:?}"),
                        })
                })
                .collect::<Result<_>>()?;
            weights.push(row);
        }
        Self::new(weights, feature_bound)
    }
}

/// Class distribution `exp(w_z·x) / Σ_y exp(w_y·x)`, computed with
/// max-subtraction so large scores cannot overflow.
pub fn softmax_predict<F: Real>(model: &SoftmaxModel<F>, x: &[F]) -> DiscreteDistribution<F> {
    assert_eq!(x.len(), model.n(), "feature dimension mismatch");
    let scores: Vec<F> = model.weights.iter().map(|row| dot(row, x)).collect();
    let max = scores
        .iter()
        .copied()
        .fold(F::neg_infinity(), F::max);
    let weights: Vec<F> = scores.into_iter().map(|s| (s - max).exp()).collect();
    DiscreteDistribution::from_weights(weights).expect("positive exponentials")
}

/// Mean fine-label log likelihood `w_z·x − log Σ_y exp(w_y·x)` over examples.
pub fn fine_loglik<F: Real>(model: &SoftmaxModel<F>, examples: &[(Vec<F>, usize)]) -> F {
    assert!(!examples.is_empty(), "need at least one example");
    let total: F = examples
        .iter()
        .map(|(x, z)| {
            assert!(*z < model.k(), "label {z} out of range");
            let scores: Vec<F> = model.weights.iter().map(|row| dot(row, x)).collect();
            scores[*z] - log_sum_exp(&scores)
        })
        .sum();
    total / F::of(examples.len() as f64)
}

/// Gradient of [`fine_loglik`] in the weights: mean of
/// `xᵢ·(1{z=c} − σ_c(W, x))` per entry `(c, i)`.
pub fn fine_loglik_gradient<F: Real>(
    model: &SoftmaxModel<F>,
    examples: &[(Vec<F>, usize)],
) -> Vec<Vec<F>> {
    assert!(!examples.is_empty(), "need at least one example");
    let mut grad = vec![vec![F::zero(); model.n()]; model.k()];
    for (x, z) in examples {
        let probs = softmax_predict(model, x);
        for (c, row) in grad.iter_mut().enumerate() {
            let residual = if *z == c { F::one() } else { F::zero() } - probs.probs()[c];
            for (g, &xi) in row.iter_mut().zip(x) {
                *g += xi * residual;
            }
        }
    }
    let n = F::of(examples.len() as f64);
    for row in &mut grad {
        for g in row {
            *g /= n;
        }
    }
    grad
}

/// Fraction of examples whose most likely class under the model matches the
/// fine label.
pub fn classification_accuracy<F: Real>(
    model: &SoftmaxModel<F>,
    examples: &[(Vec<F>, usize)],
) -> F {
    assert!(!examples.is_empty(), "need at least one example");
    let hits = examples
        .iter()
        .filter(|(x, z)| {
            let probs = softmax_predict(model, x);
            let best = probs
                .probs()
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite probabilities"))
                .map(|(c, _)| c)
                .expect("nonempty distribution");
            best == *z
        })
        .count();
    F::of(hits as f64) / F::of(examples.len() as f64)
}

/// Full-batch gradient ascent on fine labels, the paired baseline for the
/// coarse trainer; same initialization and step schedule.
pub fn train_fine_logreg<F: Real>(
    examples: &[(Vec<F>, usize)],
    k: usize,
    feature_bound: F,
    steps: usize,
    lr: F,
) -> Result<SoftmaxModel<F>> {
    if examples.is_empty() {
        return Err(Error::invalid("need at least one example"));
    }
    let n = examples[0].0.len();
    let mut model = SoftmaxModel::zeros(k, n, feature_bound)?;
    for _ in 0..steps {
        let grad = fine_loglik_gradient(&model, examples);
        for (row, grow) in model.weights.iter_mut().zip(&grad) {
            for (w, &g) in row.iter_mut().zip(grow) {
                *w += lr * g;
            }
        }
    }
    Ok(model)
}

/// The bounded query for one gradient coordinate:
/// `q(x, z) = xᵢ·(1{z=c} − σ_c(W, x)) / G` with `G = 2·feature_bound`, so the
/// range is within `[−1/2, 1/2]`.
pub fn gradient_query<F: Real>(
    model: &SoftmaxModel<F>,
    class: usize,
    coord: usize,
) -> QueryFunction<Vec<F>, F> {
    assert!(class < model.k() && coord < model.n(), "coordinate out of range");
    let model = model.clone();
    let scale = F::of(2.0) * model.feature_bound;
    QueryFunction::new(model.k(), move |x: &Vec<F>, z| {
        let probs = softmax_predict(&model, x);
        let residual = if z == class { F::one() } else { F::zero() } - probs.probs()[class];
        x[coord] * residual / scale
    })
}

/// Bounded query for the log likelihood itself, used for the per-step loss
/// estimates in the training report.
fn loglik_query<F: Real>(model: &SoftmaxModel<F>) -> (QueryFunction<Vec<F>, F>, F) {
    let max_weight = model
        .weights
        .iter()
        .flatten()
        .map(|w| w.abs())
        .fold(F::zero(), F::max);
    let bound = F::one()
        + F::of(model.k() as f64).ln()
        + F::of(2.0) * F::of(model.n() as f64) * model.feature_bound * max_weight;
    let model = model.clone();
    let q = QueryFunction::new(model.k(), move |x: &Vec<F>, z| {
        let scores: Vec<F> = model.weights.iter().map(|row| dot(row, x)).collect();
        (scores[z] - log_sum_exp(&scores)) / bound
    });
    (q, bound)
}

/// Configuration for [`train_coarse_logreg`];
/// [`CoarseLogregConfig::new`] gives usable defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct CoarseLogregConfig<F> {
    pub n: usize,
    pub k: usize,
    /// Tolerance passed to every per-coordinate statistical query.
    pub tau: F,
    /// Overall confidence, split as `delta/(steps·k·n)` per query.
    pub delta: F,
    /// Information preservation assumed when sizing rejection batches.
    pub alpha: F,
    pub steps: usize,
    pub lr: F,
    pub feature_bound: F,
    pub n1_cap: Option<usize>,
    pub n2_cap: Option<usize>,
}

impl<F: Real> CoarseLogregConfig<F> {
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            tau: F::of(0.05),
            delta: F::of(0.1),
            alpha: F::one(),
            steps: 50,
            lr: F::one(),
            feature_bound: F::one(),
            n1_cap: Some(4_000),
            n2_cap: Some(40_000),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k < 2 {
            return Err(Error::invalid("need n ≥ 1 features and k ≥ 2 classes"));
        }
        if self.steps == 0 {
            return Err(Error::invalid("need at least one step"));
        }
        if !(self.lr > F::zero()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if !(self.feature_bound > F::zero()) {
            return Err(Error::invalid("feature bound must be positive"));
        }
        Ok(())
    }
}

/// Per-run accounting of the coarse trainer, also the JSON report schema.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingReport<F> {
    pub steps: usize,
    pub tau: F,
    pub delta: F,
    /// Oracle draws consumed by each step.
    pub per_step_samples: Vec<usize>,
    /// Coarse SQ estimate of the fine log likelihood after each step.
    pub loss_estimates: Vec<F>,
    pub total_samples: usize,
    /// Query evaluations that fell outside [−1, 1] and were clamped.
    pub clamped_evaluations: usize,
}

#[derive(Serialize, Deserialize)]
struct TrainingReportJson {
    steps: usize,
    tau: f64,
    delta: f64,
    per_step_samples: Vec<usize>,
    loss_estimates: Vec<f64>,
    total_samples: usize,
    clamped_evaluations: usize,
}

impl<F: Real> TrainingReport<F> {
    pub fn to_json_string(&self) -> String {
        let doc = TrainingReportJson {
            steps: self.steps,
            tau: self.tau.as_f64(),
            delta: self.delta.as_f64(),
            per_step_samples: self.per_step_samples.clone(),
            loss_estimates: self.loss_estimates.iter().map(|l| l.as_f64()).collect(),
            total_samples: self.total_samples,
            clamped_evaluations: self.clamped_evaluations,
        };
        serde_json::to_string_pretty(&doc).expect("serializable document")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: TrainingReportJson = serde_json::from_str(text)?;
        Ok(Self {
            steps: doc.steps,
            tau: F::of(doc.tau),
            delta: F::of(doc.delta),
            per_step_samples: doc.per_step_samples,
            loss_estimates: doc.loss_estimates.into_iter().map(F::of).collect(),
            total_samples: doc.total_samples,
            clamped_evaluations: doc.clamped_evaluations,
        })
    }
}

/// Trains a softmax model on coarse examples by estimating every fine-label
/// gradient coordinate with a statistical query per step.
///
/// Starts from `W = 0` and runs `steps` fixed-rate ascent updates. Each of
/// the `k·n` coordinate queries gets confidence `delta/(steps·k·n)`; queries
/// within a step run sequentially against the shared oracle, while each
/// query parallelizes internally over its per-label components.
pub fn train_coarse_logreg<F: Real, R: Rng>(
    oracle: &mut dyn CoarseOracle<Vec<F>>,
    config: &CoarseLogregConfig<F>,
    rng: &mut R,
) -> Result<(SoftmaxModel<F>, TrainingReport<F>)> {
    config.validate()?;
    if oracle.k() != config.k {
        return Err(Error::invalid(format!(
            "config has k={} but oracle has k={}",
            config.k,
            oracle.k()
        )));
    }
    let mut model = SoftmaxModel::zeros(config.k, config.n, config.feature_bound)?;
    let scale = F::of(2.0) * config.feature_bound;
    let queries = F::of((config.steps * config.k * config.n) as f64);
    let delta_q = config.delta / queries;

    let mut per_step_samples = Vec::with_capacity(config.steps);
    let mut loss_estimates = Vec::with_capacity(config.steps);
    let mut total_samples = 0usize;
    let mut clamped = 0usize;

    for _ in 0..config.steps {
        let step_start = total_samples;
        let mut grad = vec![vec![F::zero(); config.n]; config.k];
        for (c, grow) in grad.iter_mut().enumerate() {
            for (i, g) in grow.iter_mut().enumerate() {
                let q = gradient_query(&model, c, i);
                let mut budget = SqBudget::new(config.tau, delta_q, config.alpha)?;
                budget.n1_cap = config.n1_cap;
                budget.n2_cap = config.n2_cap;
                let out = stat_query(&q, &mut budget, oracle, rng)?;
                total_samples += out.samples_drawn;
                clamped += q.clamped_count();
                *g = out.estimate * scale;
            }
        }
        for (row, grow) in model.weights.iter_mut().zip(&grad) {
            for (w, &g) in row.iter_mut().zip(grow) {
                *w += config.lr * g;
            }
        }

        let (q_loss, loss_bound) = loglik_query(&model);
        let mut budget = SqBudget::new(config.tau, delta_q, config.alpha)?;
        budget.n1_cap = config.n1_cap;
        budget.n2_cap = config.n2_cap;
        let out = stat_query(&q_loss, &mut budget, oracle, rng)?;
        total_samples += out.samples_drawn;
        clamped += q_loss.clamped_count();
        loss_estimates.push(out.estimate * loss_bound);
        per_step_samples.push(total_samples - step_start);
    }

    let report = TrainingReport {
        steps: config.steps,
        tau: config.tau,
        delta: config.delta,
        per_step_samples,
        loss_estimates,
        total_samples,
        clamped_evaluations: clamped,
    };
    Ok((model, report))
}

/// Synthetic coarse stream: `x` uniform over `[−B, B]ⁿ`, `z` from the ground
/// truth model's class posterior, coarsened through an independent partition
/// draw.
pub struct SoftmaxSyntheticOracle<F> {
    truth: SoftmaxModel<F>,
    pi: PartitionDistribution<F>,
}

impl<F: Real> SoftmaxSyntheticOracle<F> {
    pub fn new(truth: SoftmaxModel<F>, pi: PartitionDistribution<F>) -> Result<Self> {
        if truth.k() != pi.k() {
            return Err(Error::invalid(format!(
                "model has k={} but partitions have k={}",
                truth.k(),
                pi.k()
            )));
        }
        Ok(Self { truth, pi })
    }

    pub fn truth(&self) -> &SoftmaxModel<F> {
        &self.truth
    }

    /// One fine-labeled draw, for building exact train or test sets.
    pub fn draw_fine<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<F>, usize) {
        let b = self.truth.feature_bound();
        let x: Vec<F> = (0..self.truth.n())
            .map(|_| (F::of(2.0) * F::unit_uniform(rng) - F::one()) * b)
            .collect();
        let z = softmax_predict(&self.truth, &x).sample(rng);
        (x, z)
    }

    /// Like [`draw_fine`](Self::draw_fine) but labels by the most likely
    /// class instead of sampling, for noise-free test sets.
    pub fn draw_exact<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<F>, usize) {
        let (x, _) = self.draw_fine(rng);
        let probs = softmax_predict(&self.truth, &x);
        let best = probs
            .probs()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite probabilities"))
            .map(|(c, _)| c)
            .expect("nonempty distribution");
        (x, best)
    }
}

impl<F: Real> CoarseOracle<Vec<F>> for SoftmaxSyntheticOracle<F> {
    fn k(&self) -> usize {
        self.pi.k()
    }

    fn draw(&mut self, rng: &mut dyn rand::RngCore) -> Result<CoarseExampleOwned<Vec<F>>> {
        let (x, z) = self.draw_fine(rng);
        let cell = self.pi.sample(rng).locate(z).clone();
        Ok(CoarseExampleOwned { context: x, cell })
    }
}

fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn log_sum_exp<F: Real>(scores: &[F]) -> F {
    let max = scores
        .iter()
        .copied()
        .fold(F::neg_infinity(), F::max);
    let sum: F = scores.iter().map(|&s| (s - max).exp()).sum();
    max + sum.ln()
}
