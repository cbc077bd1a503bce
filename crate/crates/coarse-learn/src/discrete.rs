//! Discrete coarse-label domain: distributions over `[k]`, partitions of the
//! label set, the coarse sampling process, its exact pushforward law, total
//! variation distance, and an information-preservation diagnostic.
//!
//! Labels are `0..k` internally. The text and JSON interchange formats use
//! 1-based labels; conversion happens only in [`Cell`]'s `Display`/`FromStr`
//! impls and in the partition JSON codec.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Probability distribution over fine labels `0..k`.
///
/// Invariants: every entry is nonnegative and the entries sum to one (within
/// [`Real::mass_tolerance`]).
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDistribution<F> {
    probs: Vec<F>,
}

impl<F: Real> DiscreteDistribution<F> {
    pub fn new(probs: Vec<F>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("distribution needs at least one label"));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= F::zero()) || !p.is_finite()) {
            return Err(Error::invalid(format!("negative or non-finite mass {p}")));
        }
        let total: F = probs.iter().copied().sum();
        if (total - F::one()).abs() > F::mass_tolerance(probs.len()) {
            return Err(Error::invalid(format!("masses sum to {total}, expected 1")));
        }
        Ok(Self { probs })
    }

    /// Normalizes arbitrary nonnegative weights into a distribution.
    pub fn from_weights(weights: Vec<F>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("distribution needs at least one label"));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= F::zero()) || !w.is_finite()) {
            return Err(Error::invalid(format!("negative or non-finite weight {w}")));
        }
        let total: F = weights.iter().copied().sum();
        if total <= F::zero() {
            return Err(Error::invalid("weights sum to zero"));
        }
        Ok(Self {
            probs: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k >= 1, "need at least one label");
        Self {
            probs: vec![F::one() / F::of(k as f64); k],
        }
    }

    pub fn point_mass(k: usize, label: usize) -> Self {
        assert!(label < k, "label {label} out of range for k={k}");
        let mut probs = vec![F::zero(); k];
        probs[label] = F::one();
        Self { probs }
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[F] {
        &self.probs
    }

    /// Total mass of the labels in `cell`.
    pub fn cell_mass(&self, cell: &Cell) -> F {
        cell.labels().iter().map(|&i| self.probs[i]).sum()
    }

    /// One draw by inversion of the CDF.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = F::unit_uniform(rng);
        let mut acc = F::zero();
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }
}

/// Nonempty subset of labels, held sorted; equality is set equality.
///
/// `Display` and `FromStr` speak the 1-based comma-separated syntax of the
/// sample file format ("2,3" is the internal set `{1, 2}`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell(Vec<usize>);

impl Cell {
    pub fn new(mut labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("cell must be nonempty"));
        }
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("duplicate label in cell {labels:?}")));
        }
        Ok(Self(labels))
    }

    pub fn singleton(label: usize) -> Self {
        Self(vec![label])
    }

    pub fn labels(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, label: usize) -> bool {
        self.0.binary_search(&label).is_ok()
    }

    pub fn max_label(&self) -> usize {
        *self.0.last().expect("cell is nonempty")
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, label) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", label + 1)?;
        }
        Ok(())
    }
}

impl FromStr for Cell {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut labels = Vec::new();
        for part in s.split(',') {
            let text = part.trim();
            let label: usize = text
                .parse()
                .map_err(|_| Error::invalid(format!("bad label {text:?} in cell {s:?}")))?;
            if label == 0 {
                return Err(Error::invalid(format!("labels are 1-based, got 0 in {s:?}")));
            }
            labels.push(label - 1);
        }
        Cell::new(labels)
    }
}

/// Partition of the label set `0..k` into disjoint nonempty cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscretePartition {
    cells: Vec<Cell>,
    cell_of: Vec<usize>,
}

impl DiscretePartition {
    pub fn new(cells: Vec<Cell>, k: usize) -> Result<Self> {
        let mut cell_of = vec![usize::MAX; k];
        for (idx, cell) in cells.iter().enumerate() {
            for &label in cell.labels() {
                if label >= k {
                    return Err(Error::partition(format!(
                        "label {} outside 1..={k}",
                        label + 1
                    )));
                }
                if cell_of[label] != usize::MAX {
                    return Err(Error::partition(format!(
                        "label {} appears in two cells",
                        label + 1
                    )));
                }
                cell_of[label] = idx;
            }
        }
        if let Some(missing) = cell_of.iter().position(|&c| c == usize::MAX) {
            return Err(Error::partition(format!(
                "label {} not covered by any cell",
                missing + 1
            )));
        }
        Ok(Self { cells, cell_of })
    }

    /// The partition into singletons: coarsening reveals the fine label.
    pub fn singletons(k: usize) -> Self {
        Self {
            cells: (0..k).map(Cell::singleton).collect(),
            cell_of: (0..k).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.cell_of.len()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// The unique cell containing `label`.
    pub fn locate(&self, label: usize) -> &Cell {
        &self.cells[self.cell_of[label]]
    }
}

/// Distribution `π` over partitions of the same label set.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionDistribution<F> {
    partitions: Vec<DiscretePartition>,
    weights: Vec<F>,
}

impl<F: Real> PartitionDistribution<F> {
    pub fn new(partitions: Vec<DiscretePartition>, weights: Vec<F>) -> Result<Self> {
        if partitions.is_empty() {
            return Err(Error::partition("need at least one partition"));
        }
        if partitions.len() != weights.len() {
            return Err(Error::partition(format!(
                "{} partitions but {} weights",
                partitions.len(),
                weights.len()
            )));
        }
        let k = partitions[0].k();
        if partitions.iter().any(|p| p.k() != k) {
            return Err(Error::partition("partitions are over different label sets"));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= F::zero()) || !w.is_finite()) {
            return Err(Error::partition(format!("negative or non-finite weight {w}")));
        }
        let total: F = weights.iter().copied().sum();
        if (total - F::one()).abs() > F::mass_tolerance(weights.len()) {
            return Err(Error::partition(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { partitions, weights })
    }

    /// Point mass on a single partition.
    pub fn pure(partition: DiscretePartition) -> Self {
        Self {
            partitions: vec![partition],
            weights: vec![F::one()],
        }
    }

    pub fn k(&self) -> usize {
        self.partitions[0].k()
    }

    pub fn partitions(&self) -> &[DiscretePartition] {
        &self.partitions
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &DiscretePartition {
        let u = F::unit_uniform(rng);
        let mut acc = F::zero();
        for (part, &w) in self.partitions.iter().zip(&self.weights) {
            acc += w;
            if u < acc {
                return part;
            }
        }
        self.partitions.last().expect("at least one partition")
    }

    pub fn to_json_string(&self) -> String {
        let doc = PartitionDistJson {
            k: self.k(),
            partitions: self
                .partitions
                .iter()
                .zip(&self.weights)
                .map(|(p, &w)| PartitionJson {
                    weight: w.as_f64(),
                    cells: p
                        .cells()
                        .iter()
                        .map(|c| c.labels().iter().map(|&l| l + 1).collect())
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("serializable document")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: PartitionDistJson = serde_json::from_str(text)?;
        let mut partitions = Vec::with_capacity(doc.partitions.len());
        let mut weights = Vec::with_capacity(doc.partitions.len());
        for entry in doc.partitions {
            let cells = entry
                .cells
                .into_iter()
                .map(|labels| {
                    if labels.contains(&0) {
                        return Err(Error::invalid("labels are 1-based, got 0"));
                    }
                    Cell::new(labels.into_iter().map(|l| l - 1).collect())
                })
                .collect::<Result<Vec<_>>>()?;
            partitions.push(DiscretePartition::new(cells, doc.k)?);
            weights.push(F::of(entry.weight));
        }
        Self::new(partitions, weights)
    }

    pub fn write_json(&self, path: &std::path::Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_json_string())?)
    }

    pub fn read_json(path: &std::path::Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct PartitionDistJson {
    k: usize,
    partitions: Vec<PartitionJson>,
}

#[derive(Serialize, Deserialize)]
struct PartitionJson {
    weight: f64,
    cells: Vec<Vec<usize>>,
}

/// One coarsely labeled observation: a context point and the cell that
/// contained the latent fine label.
#[derive(Clone, Debug, PartialEq)]
pub struct CoarseExample<X> {
    pub context: X,
    pub cell: Cell,
}

/// Joint distribution over (context, fine label) pairs with finite context
/// support. Streaming problems with continuous contexts use the oracle
/// abstraction in the `sq` module instead.
#[derive(Clone, Debug, PartialEq)]
pub struct FineLabeledDistribution<X, F> {
    support: Vec<X>,
    joint: Vec<Vec<F>>,
}

impl<X, F: Real> FineLabeledDistribution<X, F> {
    /// `joint[i][z]` is the probability of context `support[i]` with label `z`.
    pub fn new(support: Vec<X>, joint: Vec<Vec<F>>) -> Result<Self> {
        if support.is_empty() || support.len() != joint.len() {
            return Err(Error::invalid(format!(
                "support of {} contexts with {} joint rows",
                support.len(),
                joint.len()
            )));
        }
        let k = joint[0].len();
        if k == 0 || joint.iter().any(|row| row.len() != k) {
            return Err(Error::invalid("joint rows must share one label count"));
        }
        let mut total = F::zero();
        for row in &joint {
            for &p in row {
                if !(p >= F::zero()) || !p.is_finite() {
                    return Err(Error::invalid(format!("negative or non-finite mass {p}")));
                }
                total += p;
            }
        }
        if (total - F::one()).abs() > F::mass_tolerance(support.len() * k) {
            return Err(Error::invalid(format!("joint mass is {total}, expected 1")));
        }
        Ok(Self { support, joint })
    }

    pub fn k(&self) -> usize {
        self.joint[0].len()
    }

    pub fn support(&self) -> &[X] {
        &self.support
    }

    pub fn joint(&self) -> &[Vec<F>] {
        &self.joint
    }

    /// Marginal over contexts, indexed like `support`.
    pub fn context_marginal(&self) -> Vec<F> {
        self.joint.iter().map(|row| row.iter().copied().sum()).collect()
    }

    /// Marginal over fine labels.
    pub fn label_marginal(&self) -> DiscreteDistribution<F> {
        let mut mass = vec![F::zero(); self.k()];
        for row in &self.joint {
            for (z, &p) in row.iter().enumerate() {
                mass[z] += p;
            }
        }
        DiscreteDistribution::from_weights(mass).expect("marginal of a valid joint")
    }

    /// One draw of (context index, fine label).
    pub fn sample_fine<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let u = F::unit_uniform(rng);
        let mut acc = F::zero();
        for (i, row) in self.joint.iter().enumerate() {
            for (z, &p) in row.iter().enumerate() {
                acc += p;
                if u < acc {
                    return (i, z);
                }
            }
        }
        (self.joint.len() - 1, self.k() - 1)
    }
}

/// Draws a fine label from `dist`, a partition from `pi`, and returns the cell
/// containing the label; the output is distributed as the coarse law of
/// `(dist, pi)`.
///
/// Panics if `dist` and `pi` disagree on the label count (a caller bug, not a
/// data condition).
pub fn sample_coarse_discrete<F: Real, R: Rng + ?Sized>(
    dist: &DiscreteDistribution<F>,
    pi: &PartitionDistribution<F>,
    rng: &mut R,
) -> Cell {
    assert_eq!(dist.k(), pi.k(), "distribution and partitions disagree on k");
    let label = dist.sample(rng);
    pi.sample(rng).locate(label).clone()
}

/// Draws (context, fine label) from `d`, coarsens the label through a
/// partition drawn from `pi`, and discards the fine label.
pub fn sample_coarse_labeled<X: Clone, F: Real, R: Rng + ?Sized>(
    d: &FineLabeledDistribution<X, F>,
    pi: &PartitionDistribution<F>,
    rng: &mut R,
) -> CoarseExample<X> {
    assert_eq!(d.k(), pi.k(), "distribution and partitions disagree on k");
    let (i, z) = d.sample_fine(rng);
    CoarseExample {
        context: d.support()[i].clone(),
        cell: pi.sample(rng).locate(z).clone(),
    }
}

/// Exact law of the coarse sample: cell `S` receives
/// `Σ_{partitions containing S} weight · mass(S)`. Identical cells appearing
/// in several partitions are merged; the output is sorted by cell and its
/// probabilities sum to one.
pub fn coarse_pushforward<F: Real>(
    dist: &DiscreteDistribution<F>,
    pi: &PartitionDistribution<F>,
) -> Vec<(Cell, F)> {
    assert_eq!(dist.k(), pi.k(), "distribution and partitions disagree on k");
    let mut law: BTreeMap<&Cell, F> = BTreeMap::new();
    for (part, &w) in pi.partitions().iter().zip(pi.weights()) {
        for cell in part.cells() {
            *law.entry(cell).or_insert_with(F::zero) += w * dist.cell_mass(cell);
        }
    }
    law.into_iter().map(|(cell, p)| (cell.clone(), p)).collect()
}

/// Total variation distance `‖p − q‖₁ / 2` between two mass lists.
pub fn tv_discrete<F: Real>(p: &[F], q: &[F]) -> Result<F> {
    if p.len() != q.len() {
        return Err(Error::invalid(format!(
            "mass lists of different lengths {} and {}",
            p.len(),
            q.len()
        )));
    }
    let sum: F = p.iter().zip(q).map(|(&a, &b)| (a - b).abs()).sum();
    Ok(sum / F::of(2.0))
}

/// Upper-bound estimate of the information-preservation constant
/// `α = inf TV(coarse₁, coarse₂) / TV(fine₁, fine₂)`.
///
/// The coarsening map is linear on differences of distributions, so the ratio
/// is evaluated as `‖A·δ‖₁ / ‖δ‖₁` over sum-zero directions `δ`: every pair
/// direction `eᵢ − eⱼ` (these witness outright merges with ratio zero) plus
/// `trials` random centered Gaussian directions. The result is a minimum over
/// that finite set, hence an upper bound on the true infimum; it is exact for
/// the hand-constructed cases in the tests but is a diagnostic, not a
/// certificate. Deterministic given the generator state.
pub fn estimate_alpha<F: Real, R: Rng + ?Sized>(
    pi: &PartitionDistribution<F>,
    trials: usize,
    rng: &mut R,
) -> F {
    assert!(trials >= 1, "need at least one random direction");
    let k = pi.k();
    if k < 2 {
        return F::one();
    }
    let mut best = F::one();
    let mut delta = vec![F::zero(); k];
    for i in 0..k {
        for j in (i + 1)..k {
            delta[i] = F::one();
            delta[j] = -F::one();
            best = best.min(l1_contraction(pi, &delta));
            delta[i] = F::zero();
            delta[j] = F::zero();
        }
    }
    for _ in 0..trials {
        let mut g: Vec<F> = (0..k).map(|_| F::std_normal(rng)).collect();
        let mean = g.iter().copied().sum::<F>() / F::of(k as f64);
        for v in &mut g {
            *v -= mean;
        }
        let norm: F = g.iter().map(|v| v.abs()).sum();
        if norm > F::of(1e-9) {
            best = best.min(l1_contraction(pi, &g));
        }
    }
    best.clamp(F::zero(), F::one())
}

/// `‖A·δ‖₁ / ‖δ‖₁` for one sum-zero direction, merging identical cells across
/// partitions exactly as the pushforward does.
fn l1_contraction<F: Real>(pi: &PartitionDistribution<F>, delta: &[F]) -> F {
    let mut image: BTreeMap<&Cell, F> = BTreeMap::new();
    for (part, &w) in pi.partitions().iter().zip(pi.weights()) {
        for cell in part.cells() {
            let signed: F = cell.labels().iter().map(|&i| delta[i]).sum();
            *image.entry(cell).or_insert_with(F::zero) += w * signed;
        }
    }
    let image_norm: F = image.values().map(|v| v.abs()).sum();
    let norm: F = delta.iter().map(|v| v.abs()).sum();
    image_norm / norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;
    use rand::Rng;

    fn cell(labels: &[usize]) -> Cell {
        Cell::new(labels.to_vec()).unwrap()
    }

    /// π = ½·{{1},{2,3}} + ½·{{1,2},{3}} over k=3, written 0-based.
    fn mixed_pi() -> PartitionDistribution<f64> {
        let a = DiscretePartition::new(vec![cell(&[0]), cell(&[1, 2])], 3).unwrap();
        let b = DiscretePartition::new(vec![cell(&[0, 1]), cell(&[2])], 3).unwrap();
        PartitionDistribution::new(vec![a, b], vec![0.5, 0.5]).unwrap()
    }

    fn p_star() -> DiscreteDistribution<f64> {
        DiscreteDistribution::new(vec![0.2, 0.3, 0.5]).unwrap()
    }

    #[test]
    fn distribution_validation() {
        assert!(DiscreteDistribution::new(vec![0.5, 0.5]).is_ok());
        assert!(DiscreteDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(DiscreteDistribution::new(vec![1.2, -0.2]).is_err());
        assert!(DiscreteDistribution::<f64>::new(vec![]).is_err());
        let d = DiscreteDistribution::from_weights(vec![2.0, 6.0]).unwrap();
        assert_eq!(d.probs(), &[0.25, 0.75]);
    }

    #[test]
    fn cell_normalizes_and_validates() {
        assert_eq!(cell(&[2, 0, 1]).labels(), &[0, 1, 2]);
        assert!(Cell::new(vec![]).is_err());
        assert!(Cell::new(vec![1, 1]).is_err());
        assert!(cell(&[0, 2]).contains(2));
        assert!(!cell(&[0, 2]).contains(1));
    }

    #[test]
    fn cell_text_syntax_is_one_based() {
        let c: Cell = "2,3".parse().unwrap();
        assert_eq!(c.labels(), &[1, 2]);
        assert_eq!(c.to_string(), "2,3");
        assert_eq!("3,1".parse::<Cell>().unwrap().to_string(), "1,3");
        assert!("0,1".parse::<Cell>().is_err());
        assert!("a,b".parse::<Cell>().is_err());
    }

    #[test]
    fn partition_validation() {
        assert!(DiscretePartition::new(vec![cell(&[0]), cell(&[1, 2])], 3).is_ok());
        // Overlap.
        assert!(DiscretePartition::new(vec![cell(&[0, 1]), cell(&[1, 2])], 3).is_err());
        // Missing coverage.
        assert!(DiscretePartition::new(vec![cell(&[0]), cell(&[2])], 3).is_err());
        // Label out of range.
        assert!(DiscretePartition::new(vec![cell(&[0, 3])], 3).is_err());
        let singles = DiscretePartition::singletons(4);
        assert_eq!(singles.cells().len(), 4);
        assert_eq!(singles.locate(2), &cell(&[2]));
    }

    #[test]
    fn partition_weights_must_sum_to_one() {
        let part = DiscretePartition::singletons(2);
        assert!(PartitionDistribution::new(vec![part.clone()], vec![0.9]).is_err());
        assert!(PartitionDistribution::new(vec![part], vec![1.0]).is_ok());
    }

    #[test]
    fn point_mass_always_yields_its_cell() {
        let dist = DiscreteDistribution::<f64>::point_mass(3, 0);
        let pi = PartitionDistribution::pure(
            DiscretePartition::new(vec![cell(&[0]), cell(&[1, 2])], 3).unwrap(),
        );
        let mut rng = seeded(0);
        for _ in 0..100 {
            assert_eq!(sample_coarse_discrete(&dist, &pi, &mut rng), cell(&[0]));
        }
    }

    #[test]
    fn uniform_two_cell_frequencies() {
        // dist uniform on [3], single partition {{1,2},{3}}: cell {1,2} has
        // mass 2/3 and {3} has 1/3.
        let dist = DiscreteDistribution::<f64>::uniform(3);
        let pi = PartitionDistribution::pure(
            DiscretePartition::new(vec![cell(&[0, 1]), cell(&[2])], 3).unwrap(),
        );
        let mut rng = seeded(1);
        let n = 100_000;
        let mut hits = 0usize;
        for _ in 0..n {
            if sample_coarse_discrete(&dist, &pi, &mut rng) == cell(&[0, 1]) {
                hits += 1;
            }
        }
        let freq = hits as f64 / n as f64;
        let se = (2.0 / 9.0 / n as f64).sqrt();
        assert!((freq - 2.0 / 3.0).abs() < 3.0 * se, "freq={freq}");
    }

    #[test]
    fn pushforward_restores_dist_under_singletons() {
        let dist = p_star();
        let pi = PartitionDistribution::pure(DiscretePartition::singletons(3));
        let law = coarse_pushforward(&dist, &pi);
        assert_eq!(law.len(), 3);
        for (i, (c, p)) in law.iter().enumerate() {
            assert_eq!(c, &cell(&[i]));
            assert!((p - dist.probs()[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn pushforward_hand_sum() {
        // p★=(0.2,0.3,0.5), π = ½·{{1},{2,3}} + ½·{{1,2},{3}}:
        // {1}: 0.1, {2,3}: 0.4, {1,2}: 0.25, {3}: 0.25.
        let law = coarse_pushforward(&p_star(), &mixed_pi());
        let expect = [
            (cell(&[0]), 0.10),
            (cell(&[0, 1]), 0.25),
            (cell(&[1, 2]), 0.40),
            (cell(&[2]), 0.25),
        ];
        assert_eq!(law.len(), expect.len());
        for ((c, p), (ec, ep)) in law.iter().zip(&expect) {
            assert_eq!(c, ec);
            assert!((p - ep).abs() < 1e-15, "{c}: {p} vs {ep}");
        }
    }

    #[test]
    fn mixed_sampler_matches_pushforward() {
        // Empirical cell frequencies over many draws track the exact law.
        let dist = p_star();
        let pi = mixed_pi();
        let law = coarse_pushforward(&dist, &pi);
        let n = 1_000_000usize;
        let mut rng = seeded(2);
        let mut counts: BTreeMap<Cell, usize> = BTreeMap::new();
        for _ in 0..n {
            *counts.entry(sample_coarse_discrete(&dist, &pi, &mut rng)).or_default() += 1;
        }
        for (c, p) in &law {
            let freq = counts.get(c).copied().unwrap_or(0) as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((freq - p).abs() < 3.0 * se, "{c}: freq={freq} p={p}");
        }
    }

    #[test]
    fn sampler_matches_pushforward_across_seeds() {
        // 4·sqrt(p(1-p)/N) per cell at N=1e5, allowing one bad seed in 100.
        let dist = p_star();
        let pi = mixed_pi();
        let law = coarse_pushforward(&dist, &pi);
        let n = 100_000usize;
        let mut bad_seeds = 0;
        for seed in 0..100u64 {
            let mut rng = seeded(seed);
            let mut counts: BTreeMap<Cell, usize> = BTreeMap::new();
            for _ in 0..n {
                *counts.entry(sample_coarse_discrete(&dist, &pi, &mut rng)).or_default() += 1;
            }
            let ok = law.iter().all(|(c, p)| {
                let freq = counts.get(c).copied().unwrap_or(0) as f64 / n as f64;
                (freq - p).abs() <= 4.0 * (p * (1.0 - p) / n as f64).sqrt()
            });
            if !ok {
                bad_seeds += 1;
            }
        }
        assert!(bad_seeds <= 1, "{bad_seeds} seeds out of tolerance");
    }

    #[test]
    fn labeled_sampler_keeps_context_and_coarsens() {
        let d = FineLabeledDistribution::new(
            vec!["x0"],
            vec![vec![0.2, 0.3, 0.5]],
        )
        .unwrap();
        let pi = mixed_pi();
        let mut rng = seeded(3);
        for _ in 0..50 {
            let ex = sample_coarse_labeled(&d, &pi, &mut rng);
            assert_eq!(ex.context, "x0");
        }

        // All-singleton π reproduces the joint exactly in distribution.
        let d2 = FineLabeledDistribution::new(
            vec![0usize, 1],
            vec![vec![0.1, 0.3], vec![0.4, 0.2]],
        )
        .unwrap();
        let singles = PartitionDistribution::pure(DiscretePartition::singletons(2));
        let n = 200_000;
        let mut counts = [[0usize; 2]; 2];
        for _ in 0..n {
            let ex = sample_coarse_labeled(&d2, &singles, &mut rng);
            assert_eq!(ex.cell.len(), 1);
            counts[ex.context][ex.cell.labels()[0]] += 1;
        }
        for x in 0..2 {
            for z in 0..2 {
                let p = d2.joint()[x][z];
                let freq = counts[x][z] as f64 / n as f64;
                let se = (p * (1.0 - p) / n as f64).sqrt();
                assert!((freq - p).abs() < 4.0 * se, "({x},{z}): {freq} vs {p}");
            }
        }
    }

    #[test]
    fn two_context_sampler_matches_full_pushforward() {
        // Exact law over (context, cell) by enumerating (x, partition, label).
        let d = FineLabeledDistribution::new(
            vec![0usize, 1],
            vec![vec![0.05, 0.15, 0.10], vec![0.30, 0.20, 0.20]],
        )
        .unwrap();
        let pi = mixed_pi();
        let mut exact: BTreeMap<(usize, Cell), f64> = BTreeMap::new();
        for (x, row) in d.joint().iter().enumerate() {
            for (part, &w) in pi.partitions().iter().zip(pi.weights()) {
                for (z, &p) in row.iter().enumerate() {
                    *exact.entry((x, part.locate(z).clone())).or_default() += w * p;
                }
            }
        }
        let n = 400_000usize;
        let mut rng = seeded(4);
        let mut counts: BTreeMap<(usize, Cell), usize> = BTreeMap::new();
        for _ in 0..n {
            let ex = sample_coarse_labeled(&d, &pi, &mut rng);
            *counts.entry((ex.context, ex.cell)).or_default() += 1;
        }
        for (key, p) in &exact {
            let freq = counts.get(key).copied().unwrap_or(0) as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((freq - p).abs() < 3.0 * se, "{key:?}: {freq} vs {p}");
        }
    }

    #[test]
    fn tv_examples() {
        assert_eq!(tv_discrete::<f64>(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), 0.0);
        assert_eq!(tv_discrete::<f64>(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        let tv = tv_discrete::<f64>(&[0.2, 0.3, 0.5], &[0.3, 0.3, 0.4]).unwrap();
        assert!((tv - 0.1).abs() < 1e-15);
        assert!(tv_discrete::<f64>(&[0.5, 0.5], &[1.0]).is_err());
    }

    #[test]
    fn alpha_identity_and_merge() {
        let mut rng = seeded(5);
        let singles = PartitionDistribution::<f64>::pure(DiscretePartition::singletons(4));
        assert_eq!(estimate_alpha(&singles, 50, &mut rng), 1.0);

        let merge = PartitionDistribution::<f64>::pure(
            DiscretePartition::new(vec![cell(&[0, 1]), cell(&[2])], 3).unwrap(),
        );
        assert_eq!(estimate_alpha(&merge, 50, &mut rng), 0.0);
    }

    #[test]
    fn alpha_matches_direction_grid() {
        // Exhaustive sum-zero directions (1, a, -1-a) and permutations at
        // resolution 0.01 bottom out at 0.5 for the mixed two-partition π;
        // the estimator must agree.
        let pi = mixed_pi();
        let mut grid_min = f64::INFINITY;
        let mut check = |delta: [f64; 3]| {
            let norm: f64 = delta.iter().map(|v| v.abs()).sum();
            if norm < 1e-9 {
                return;
            }
            let cells = [
                (0.5, delta[0]),
                (0.5, delta[1] + delta[2]),
                (0.5, delta[0] + delta[1]),
                (0.5, delta[2]),
            ];
            let image: f64 = cells.iter().map(|(w, s)| (w * s).abs()).sum();
            grid_min = grid_min.min(image / norm);
        };
        let steps = 201;
        for i in 0..steps {
            for j in 0..steps {
                let a = -1.0 + 0.01 * i as f64;
                let b = -1.0 + 0.01 * j as f64;
                check([a, b, -a - b]);
            }
        }
        let mut rng = seeded(6);
        let est = estimate_alpha(&pi, 500, &mut rng);
        assert!((grid_min - 0.5).abs() < 1e-12, "grid found {grid_min}");
        assert!((est - 0.5).abs() < 1e-12, "estimator found {est}");
    }

    #[test]
    fn alpha_monotone_under_refinement() {
        let mut rng_a = seeded(7);
        let mut rng_b = seeded(7);
        let singles = PartitionDistribution::<f64>::pure(DiscretePartition::singletons(3));
        let fine = estimate_alpha(&singles, 100, &mut rng_a);
        let coarse = estimate_alpha(&mixed_pi(), 100, &mut rng_b);
        assert!(fine >= coarse);
    }

    #[test]
    fn partition_json_round_trip() {
        let pi = mixed_pi();
        let text = pi.to_json_string();
        let back = PartitionDistribution::<f64>::from_json_str(&text).unwrap();
        assert_eq!(pi, back);
    }

    #[test]
    fn partition_json_hand_written() {
        let text = r#"{
            "k": 3,
            "partitions": [
                { "weight": 0.5, "cells": [[1], [2, 3]] },
                { "weight": 0.5, "cells": [[1, 2], [3]] }
            ]
        }"#;
        let pi = PartitionDistribution::<f64>::from_json_str(text).unwrap();
        assert_eq!(pi, mixed_pi());
        // 0 labels and non-partitions are rejected.
        assert!(PartitionDistribution::<f64>::from_json_str(
            r#"{"k": 2, "partitions": [{"weight": 1.0, "cells": [[0, 1]]}]}"#
        )
        .is_err());
        assert!(PartitionDistribution::<f64>::from_json_str(
            r#"{"k": 2, "partitions": [{"weight": 1.0, "cells": [[1]]}]}"#
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn pushforward_is_a_distribution(seed in 0u64..500) {
            let mut rng = seeded(seed);
            let k = rng.random_range(2usize..8);
            let weights: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
            let dist = DiscreteDistribution::from_weights(weights).unwrap();
            let parts: Vec<DiscretePartition> =
                (0..rng.random_range(1usize..4)).map(|_| random_partition(k, &mut rng)).collect();
            let raw: Vec<f64> = (0..parts.len()).map(|_| rng.random::<f64>() + 1e-3).collect();
            let total: f64 = raw.iter().sum();
            let pi = PartitionDistribution::new(
                parts,
                raw.into_iter().map(|w| w / total).collect(),
            ).unwrap();
            let law = coarse_pushforward(&dist, &pi);
            let total: f64 = law.iter().map(|(_, p)| p).sum();
            prop_assert!((total - 1.0).abs() < 1e-10);
            prop_assert!(law.iter().all(|(_, p)| *p >= 0.0));
        }

        #[test]
        fn tv_is_a_metric(
            a in proptest::collection::vec(0.0f64..1.0, 4),
            b in proptest::collection::vec(0.0f64..1.0, 4),
            c in proptest::collection::vec(0.0f64..1.0, 4),
        ) {
            let ab = tv_discrete(&a, &b).unwrap();
            let ba = tv_discrete(&b, &a).unwrap();
            let ac = tv_discrete(&a, &c).unwrap();
            let cb = tv_discrete(&c, &b).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!(ab <= ac + cb + 1e-12);
            prop_assert!(tv_discrete(&a, &a).unwrap() == 0.0);
        }
    }

    /// Random partition of `0..k`: shuffled labels split at random points.
    fn random_partition<R: Rng>(k: usize, rng: &mut R) -> DiscretePartition {
        let mut labels: Vec<usize> = (0..k).collect();
        for i in (1..k).rev() {
            let j = rng.random_range(0..=i);
            labels.swap(i, j);
        }
        let mut cells = Vec::new();
        let mut start = 0;
        while start < k {
            let len = rng.random_range(1..=(k - start));
            cells.push(Cell::new(labels[start..start + len].to_vec()).unwrap());
            start += len;
        }
        DiscretePartition::new(cells, k).unwrap()
    }
}
