//! Statistical queries over fine labels, answered from coarse examples.
//!
//! A statistical query asks for `E[q(x, z)]` to additive tolerance `τ`, where
//! `z` is the fine label the coarse process never reveals. The simulation
//! splits the query per label and sign into nonnegative context functions
//! `f`, estimates each `E[f(x)·1{z = j}]` as `E[f] · D̃(j)` where `D̃` is the
//! coarse MLE of the fine-label law conditioned on accepting a context with
//! probability `f(x)`, and sums the pieces. Everything runs on coarse draws
//! alone, so any learner that consumes statistical queries can be trained on
//! coarse data through this module.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrete::{
    sample_coarse_labeled, Cell, DiscreteDistribution, FineLabeledDistribution,
    PartitionDistribution,
};
use crate::error::{Error, Result};
use crate::mle::{mle_fit, MleConfig};
use crate::rng::derive;
use crate::scalar::Real;

/// Bounded query `q : X × [k] → [−1, 1]`.
///
/// Evaluations outside the range are clamped and counted; a nonzero
/// [`QueryFunction::clamped_count`] after a run means the caller's function
/// violated its own bound and results rest on the clamped version.
pub struct QueryFunction<X, F> {
    inner: Arc<QueryInner<X, F>>,
}

struct QueryInner<X, F> {
    eval: Box<dyn Fn(&X, usize) -> F + Send + Sync>,
    k: usize,
    clamped: AtomicUsize,
}

impl<X, F> Clone for QueryFunction<X, F> {
    fn clone(&self) -> Self {
        Self {
            inner: Arc::clone(&self.inner),
        }
    }
}

impl<X, F> std::fmt::Debug for QueryFunction<X, F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QueryFunction")
            .field("k", &self.inner.k)
            .field("clamped", &self.inner.clamped.load(Ordering::Relaxed))
            .finish_non_exhaustive()
    }
}

impl<X, F: Real> QueryFunction<X, F> {
    pub fn new(k: usize, eval: impl Fn(&X, usize) -> F + Send + Sync + 'static) -> Self {
        assert!(k >= 1, "need at least one label");
        Self {
            inner: Arc::new(QueryInner {
                eval: Box::new(eval),
                k,
                clamped: AtomicUsize::new(0),
            }),
        }
    }

    pub fn k(&self) -> usize {
        self.inner.k
    }

    /// `q(x, z)` clamped into `[−1, 1]`.
    pub fn eval(&self, x: &X, z: usize) -> F {
        let raw = (self.inner.eval)(x, z);
        if raw < -F::one() || raw > F::one() || !raw.is_finite() {
            self.inner.clamped.fetch_add(1, Ordering::Relaxed);
            if raw.is_finite() {
                raw.clamp(-F::one(), F::one())
            } else {
                F::zero()
            }
        } else {
            raw
        }
    }

    /// Number of evaluations that had to be clamped so far.
    pub fn clamped_count(&self) -> usize {
        self.inner.clamped.load(Ordering::Relaxed)
    }
}

impl<F: Real> QueryFunction<usize, F> {
    /// Query over an indexed finite context set; absent pairs evaluate to 0.
    pub fn from_table(k: usize, entries: impl IntoIterator<Item = ((usize, usize), F)>) -> Self {
        let table: BTreeMap<(usize, usize), F> = entries.into_iter().collect();
        Self::new(k, move |x: &usize, z| {
            table.get(&(*x, z)).copied().unwrap_or_else(F::zero)
        })
    }

    /// Reads a tabulated query from CSV lines `x_index,z,value` with 1-based
    /// `x_index` and `z`. An optional header line naming the columns is
    /// skipped; blank lines and `#` comments too.
    pub fn read_table(path: &Path, k: usize) -> Result<Self> {
        let reader = BufReader::new(std::fs::File::open(path)?);
        let mut entries = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let text = line.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = text.split(',').map(str::trim).collect();
            if idx == 0 && fields.first() == Some(&"x_index") {
                continue;
            }
            let parse = |field: &str, name: &str| -> Result<usize> {
                let v: usize = field.parse().map_err(|_| Error::Parse {
                    line: idx + 1,
                    message: format!("bad {name} {field:?}"),
                })?;
                if v == 0 {
                    return Err(Error::Parse {
                        line: idx + 1,
                        message: format!("{name} is 1-based, got 0"),
                    });
                }
                Ok(v)
            };
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected x_index,z,value, got {} fields", fields.len()),
                });
            }
            let x = parse(fields[0], "x_index")?;
            let z = parse(fields[1], "z")?;
            if z > k {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("label {z} outside 1..={k}"),
                });
            }
            let value: f64 = fields[2].parse().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("bad value {:?}", fields[2]),
            })?;
            entries.push(((x - 1, z - 1), F::of(value)));
        }
        Ok(Self::from_table(k, entries))
    }
}

/// One sign-definite slice of a query: `x ↦ max(±q(x, j), 0) ∈ [0, 1]`.
pub struct ContextQuery<X, F> {
    query: QueryFunction<X, F>,
    label: usize,
    negative_part: bool,
}

impl<X, F> Clone for ContextQuery<X, F> {
    fn clone(&self) -> Self {
        Self {
            query: self.query.clone(),
            label: self.label,
            negative_part: self.negative_part,
        }
    }
}

impl<X, F: Real> ContextQuery<X, F> {
    pub fn eval(&self, x: &X) -> F {
        let v = self.query.eval(x, self.label);
        if self.negative_part {
            (-v).max(F::zero())
        } else {
            v.max(F::zero())
        }
    }

    pub fn label(&self) -> usize {
        self.label
    }
}

/// Splits `q(·, j)` into its positive and negative parts, both into `[0, 1]`,
/// with `f_plus(x) − f_minus(x) = q(x, j)` pointwise.
pub fn decompose_query<X, F: Real>(
    q: &QueryFunction<X, F>,
    j: usize,
) -> (ContextQuery<X, F>, ContextQuery<X, F>) {
    assert!(j < q.k(), "label {j} out of range for k={}", q.k());
    (
        ContextQuery {
            query: q.clone(),
            label: j,
            negative_part: false,
        },
        ContextQuery {
            query: q.clone(),
            label: j,
            negative_part: true,
        },
    )
}

/// Source of independent coarse examples distributed as the coarse law.
pub trait CoarseOracle<X> {
    /// Number of fine labels underlying the coarse cells.
    fn k(&self) -> usize;

    /// One fresh coarse example. A finite source fails with
    /// [`Error::BudgetExhausted`] when drained.
    fn draw(&mut self, rng: &mut dyn RngCore) -> Result<CoarseExampleOwned<X>>;
}

/// Owned coarse example as produced by oracles.
pub type CoarseExampleOwned<X> = crate::discrete::CoarseExample<X>;

/// Unbounded oracle sampling from a known finite joint and partition law,
/// used for synthetic experiments and tests.
pub struct GenerativeOracle<X, F> {
    dist: FineLabeledDistribution<X, F>,
    pi: PartitionDistribution<F>,
}

impl<X: Clone, F: Real> GenerativeOracle<X, F> {
    pub fn new(dist: FineLabeledDistribution<X, F>, pi: PartitionDistribution<F>) -> Self {
        assert_eq!(dist.k(), pi.k(), "distribution and partitions disagree on k");
        Self { dist, pi }
    }
}

impl<X: Clone, F: Real> CoarseOracle<X> for GenerativeOracle<X, F> {
    fn k(&self) -> usize {
        self.pi.k()
    }

    fn draw(&mut self, rng: &mut dyn RngCore) -> Result<CoarseExampleOwned<X>> {
        Ok(sample_coarse_labeled(&self.dist, &self.pi, rng))
    }
}

/// Finite recorded dataset, served in order; drained draws fail rather than
/// resample so that sample counts stay honest.
pub struct DatasetOracle<X> {
    examples: Vec<CoarseExampleOwned<X>>,
    cursor: usize,
    k: usize,
}

impl<X: Clone> DatasetOracle<X> {
    pub fn new(examples: Vec<CoarseExampleOwned<X>>, k: usize) -> Result<Self> {
        if let Some(ex) = examples.iter().find(|ex| ex.cell.max_label() >= k) {
            return Err(Error::invalid(format!(
                "cell {} references a label outside 1..={k}",
                ex.cell
            )));
        }
        Ok(Self {
            examples,
            cursor: 0,
            k,
        })
    }

    pub fn remaining(&self) -> usize {
        self.examples.len() - self.cursor
    }
}

impl<X: Clone> CoarseOracle<X> for DatasetOracle<X> {
    fn k(&self) -> usize {
        self.k
    }

    fn draw(&mut self, _rng: &mut dyn RngCore) -> Result<CoarseExampleOwned<X>> {
        if self.cursor == self.examples.len() {
            return Err(Error::BudgetExhausted {
                samples_drawn: self.cursor,
            });
        }
        let ex = self.examples[self.cursor].clone();
        self.cursor += 1;
        Ok(ex)
    }
}

/// Tolerance, confidence, assumed information preservation, and the sampling
/// constants of the simulation; also the running count of oracle draws.
///
/// The stage sizes follow `N₁ = ⌈c₁·ln(2/δ)/ρ²⌉` and
/// `N₂ = ⌈c₂·k·ln(2/δ)/(ρ³α²)⌉`. The theory constants are very conservative,
/// so both stages honor optional caps; a capped run trades the formal
/// confidence statement for tractable sample sizes and the report always
/// carries the count actually drawn.
#[derive(Clone, Debug, PartialEq)]
pub struct SqBudget<F> {
    pub tau: F,
    pub delta: F,
    pub alpha: F,
    pub hoeffding_constant: F,
    pub rejection_constant: F,
    pub n1_cap: Option<usize>,
    pub n2_cap: Option<usize>,
    pub samples_drawn: usize,
}

impl<F: Real> SqBudget<F> {
    pub fn new(tau: F, delta: F, alpha: F) -> Result<Self> {
        let unit = F::zero()..=F::one();
        if !(tau > F::zero() && tau < F::one()) {
            return Err(Error::invalid(format!("tau {tau} outside (0,1)")));
        }
        if !(delta > F::zero() && delta < F::one()) {
            return Err(Error::invalid(format!("delta {delta} outside (0,1)")));
        }
        if !(alpha > F::zero() && unit.contains(&alpha)) {
            return Err(Error::invalid(format!("alpha {alpha} outside (0,1]")));
        }
        Ok(Self {
            tau,
            delta,
            alpha,
            hoeffding_constant: F::of(8.0),
            rejection_constant: F::of(4.0),
            n1_cap: Some(1_000_000),
            n2_cap: Some(500_000),
            samples_drawn: 0,
        })
    }

    /// Per-component rejection threshold `ρ = τ/(4k)`.
    pub fn rho(&self, k: usize) -> F {
        self.tau / (F::of(4.0) * F::of(k as f64))
    }

    /// First-stage size for threshold `rho` and confidence `delta_c`.
    pub fn n1(&self, rho: F, delta_c: F) -> usize {
        let raw = self.hoeffding_constant * (F::of(2.0) / delta_c).ln() / (rho * rho);
        cap(raw, self.n1_cap)
    }

    /// Second-stage size for `k` labels, threshold `rho`, confidence
    /// `delta_c`.
    pub fn n2(&self, k: usize, rho: F, delta_c: F) -> usize {
        let raw = self.rejection_constant * F::of(k as f64) * (F::of(2.0) / delta_c).ln()
            / (rho * rho * rho * self.alpha * self.alpha);
        cap(raw, self.n2_cap)
    }

    /// Total draws a full [`stat_query`] run is configured to use.
    pub fn configured_total(&self, k: usize) -> usize {
        let rho = self.rho(k);
        let delta_c = self.delta / (F::of(2.0) * F::of(k as f64));
        self.n1(rho, delta_c) + self.n2(k, rho, delta_c)
    }
}

fn cap<F: Real>(raw: F, cap: Option<usize>) -> usize {
    let ceil = raw.ceil().as_f64();
    let n = if ceil >= usize::MAX as f64 {
        usize::MAX
    } else {
        ceil as usize
    };
    match cap {
        Some(c) => n.min(c),
        None => n,
    }
    .max(1)
}

/// Query answer with its accounting, also the JSON report schema.
#[derive(Clone, Debug, PartialEq)]
pub struct SqEstimate<F> {
    pub estimate: F,
    pub tau: F,
    pub delta: F,
    pub samples_drawn: usize,
}

#[derive(Serialize, Deserialize)]
struct SqEstimateJson {
    estimate: f64,
    tau: f64,
    delta: f64,
    samples_drawn: usize,
}

impl<F: Real> SqEstimate<F> {
    pub fn to_json_string(&self) -> String {
        let doc = SqEstimateJson {
            estimate: self.estimate.as_f64(),
            tau: self.tau.as_f64(),
            delta: self.delta.as_f64(),
            samples_drawn: self.samples_drawn,
        };
        serde_json::to_string_pretty(&doc).expect("serializable document")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: SqEstimateJson = serde_json::from_str(text)?;
        Ok(Self {
            estimate: F::of(doc.estimate),
            tau: F::of(doc.tau),
            delta: F::of(doc.delta),
            samples_drawn: doc.samples_drawn,
        })
    }
}

/// Estimates `E[f(x)·1{z = j}]` from coarse draws alone.
///
/// Stage one estimates `μ = E[f]` from `N₁` draws and returns 0 outright when
/// `μ̂ ≤ rho`; the discarded mass is then at most `2·rho`. Stage two draws
/// `N₂` more examples, keeps each cell with probability `f(x)`, fits the
/// fine-label law of the accepted subsample by coarse MLE with floor `rho/k`,
/// and returns `μ̂ · D̃(j)`. When no cell is accepted the estimate is 0.
pub fn sq_component<X, F: Real, R: Rng>(
    f: impl Fn(&X) -> F + Sync,
    j: usize,
    rho: F,
    delta: F,
    budget: &mut SqBudget<F>,
    oracle: &mut dyn CoarseOracle<X>,
    rng: &mut R,
) -> Result<F> {
    let k = oracle.k();
    if j >= k {
        return Err(Error::invalid(format!("label {j} out of range for k={k}")));
    }
    if !(rho > F::zero() && rho < F::one()) {
        return Err(Error::invalid(format!("rho {rho} outside (0,1)")));
    }
    let batch1 = draw_batch(oracle, budget.n1(rho, delta), budget, rng)?;
    let mu = mean_of(&f, &batch1);
    if mu <= rho {
        return Ok(F::zero());
    }
    let batch2 = draw_batch(oracle, budget.n2(k, rho, delta), budget, rng)?;
    component_estimate(&f, j, k, rho, mu, &batch2, rng)
}

/// Answers `E[q(x, z)]` to tolerance `budget.tau` with confidence
/// `budget.delta` from coarse draws.
///
/// The 2k sign-definite components share one pair of sample batches, as a
/// single recorded training set would be reused; each component flips its own
/// acceptance coins from an independent derived stream, so the result is
/// deterministic per seed no matter how the components are scheduled. The
/// second batch is only drawn when some component survives its early exit.
pub fn stat_query<X: Sync, F: Real, R: Rng>(
    q: &QueryFunction<X, F>,
    budget: &mut SqBudget<F>,
    oracle: &mut dyn CoarseOracle<X>,
    rng: &mut R,
) -> Result<SqEstimate<F>> {
    let k = q.k();
    if oracle.k() != k {
        return Err(Error::invalid(format!(
            "query has k={k} but oracle has k={}",
            oracle.k()
        )));
    }
    let rho = budget.rho(k);
    let delta_c = budget.delta / (F::of(2.0) * F::of(k as f64));

    let mut components = Vec::with_capacity(2 * k);
    for j in 0..k {
        let (plus, minus) = decompose_query(q, j);
        components.push(plus);
        components.push(minus);
    }

    let batch1 = draw_batch(oracle, budget.n1(rho, delta_c), budget, rng)?;
    let means: Vec<F> = components.iter().map(|f| mean_of(|x| f.eval(x), &batch1)).collect();

    if means.iter().all(|&mu| mu <= rho) {
        return Ok(SqEstimate {
            estimate: F::zero(),
            tau: budget.tau,
            delta: budget.delta,
            samples_drawn: budget.samples_drawn,
        });
    }

    let batch2 = draw_batch(oracle, budget.n2(k, rho, delta_c), budget, rng)?;
    let jobs: Vec<(ContextQuery<X, F>, F, ChaCha8Rng)> = components
        .into_iter()
        .zip(means)
        .map(|(f, mu)| {
            let child = derive(rng);
            (f, mu, child)
        })
        .collect();

    let estimates: Result<Vec<F>> = jobs
        .into_par_iter()
        .map(|(f, mu, mut child)| {
            if mu <= rho {
                return Ok(F::zero());
            }
            component_estimate(|x| f.eval(x), f.label(), k, rho, mu, &batch2, &mut child)
        })
        .collect();

    let mut estimate = F::zero();
    for (idx, value) in estimates?.into_iter().enumerate() {
        if idx % 2 == 0 {
            estimate += value;
        } else {
            estimate -= value;
        }
    }
    Ok(SqEstimate {
        estimate,
        tau: budget.tau,
        delta: budget.delta,
        samples_drawn: budget.samples_drawn,
    })
}

fn draw_batch<X, F: Real, R: Rng>(
    oracle: &mut dyn CoarseOracle<X>,
    n: usize,
    budget: &mut SqBudget<F>,
    rng: &mut R,
) -> Result<Vec<CoarseExampleOwned<X>>> {
    let mut batch = Vec::with_capacity(n);
    for _ in 0..n {
        match oracle.draw(rng) {
            Ok(ex) => {
                budget.samples_drawn += 1;
                batch.push(ex);
            }
            Err(Error::BudgetExhausted { .. }) => {
                return Err(Error::BudgetExhausted {
                    samples_drawn: budget.samples_drawn,
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(batch)
}

fn mean_of<X, F: Real>(f: impl Fn(&X) -> F, batch: &[CoarseExampleOwned<X>]) -> F {
    let total: F = batch
        .iter()
        .map(|ex| f(&ex.context).clamp(F::zero(), F::one()))
        .sum();
    total / F::of(batch.len() as f64)
}

fn component_estimate<X, F: Real, R: Rng>(
    f: impl Fn(&X) -> F,
    j: usize,
    k: usize,
    rho: F,
    mu: F,
    batch2: &[CoarseExampleOwned<X>],
    rng: &mut R,
) -> Result<F> {
    let mut accepted: Vec<Cell> = Vec::new();
    for ex in batch2 {
        let p = f(&ex.context).clamp(F::zero(), F::one());
        if F::unit_uniform(rng) < p {
            accepted.push(ex.cell.clone());
        }
    }
    if accepted.is_empty() {
        return Ok(F::zero());
    }
    let mut config = MleConfig::<F>::for_k(k);
    config.floor = rho / F::of(k as f64);
    let fit = mle_fit(&accepted, k, &config)?;
    Ok(mu * fit.estimate[j])
}

/// Exact `E[q(x, z)]` by enumeration of a finite joint.
pub fn exact_query_expectation<X, F: Real>(
    d: &FineLabeledDistribution<X, F>,
    q: &QueryFunction<X, F>,
) -> F {
    let mut total = F::zero();
    for (x, row) in d.support().iter().zip(d.joint()) {
        for (z, &p) in row.iter().enumerate() {
            total += p * q.eval(x, z);
        }
    }
    total
}

/// Exact `E[f(x)·1{z = j}]` by enumeration of a finite joint.
pub fn exact_component_expectation<X, F: Real>(
    d: &FineLabeledDistribution<X, F>,
    f: &ContextQuery<X, F>,
    j: usize,
) -> F {
    d.support()
        .iter()
        .zip(d.joint())
        .map(|(x, row)| f.eval(x) * row[j])
        .sum()
}

/// Law of the fine label conditioned on accepting the context with
/// probability `f(x)`; `None` when the acceptance mass is zero.
pub fn acceptance_label_marginal<X, F: Real>(
    d: &FineLabeledDistribution<X, F>,
    f: &ContextQuery<X, F>,
) -> Option<DiscreteDistribution<F>> {
    let mut mass = vec![F::zero(); d.k()];
    for (x, row) in d.support().iter().zip(d.joint()) {
        let w = f.eval(x);
        for (z, &p) in row.iter().enumerate() {
            mass[z] += w * p;
        }
    }
    DiscreteDistribution::from_weights(mass).ok()
}
