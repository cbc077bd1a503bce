//! Maximum likelihood for a discrete distribution observed through coarse
//! labels.
//!
//! Given samples `S₁, …, S_N` of cells, the empirical log likelihood
//! `L(p) = (1/N) Σ log p(Sₙ)` is concave in `p`, so projected gradient
//! ascent over the floored simplex `{p : pᵢ ≥ floor, Σ pᵢ = 1}` finds a
//! global maximizer. The floor keeps every observable cell mass bounded away
//! from zero, which also bounds the gradient.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write as IoWrite};
use std::path::Path;

use crate::discrete::Cell;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Step-size policy for projected gradient ascent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepRule<F> {
    /// Armijo backtracking from step 1, halving until sufficient increase.
    Backtracking,
    /// Constant step size.
    Fixed(F),
}

/// Solver configuration; [`MleConfig::for_k`] gives usable defaults.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MleConfig<F> {
    /// Lower bound kept on every coordinate; must satisfy `0 < k·floor < 1`.
    pub floor: F,
    /// Convergence threshold on the unit-step projected gradient residual.
    pub tol: F,
    pub max_iters: usize,
    pub step_rule: StepRule<F>,
}

impl<F: Real> MleConfig<F> {
    pub fn for_k(k: usize) -> Self {
        assert!(k >= 1, "need at least one label");
        Self {
            floor: F::of(1e-3) / F::of(k as f64),
            tol: F::of(1e-8),
            max_iters: 10_000,
            step_rule: StepRule::Backtracking,
        }
    }

    fn validate(&self, k: usize) -> Result<()> {
        let kf = F::of(k as f64);
        if !(self.floor > F::zero()) || !(self.floor * kf < F::one()) {
            return Err(Error::invalid(format!(
                "floor {} outside (0, 1/{k})",
                self.floor
            )));
        }
        if !(self.tol > F::zero()) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        if let StepRule::Fixed(step) = self.step_rule {
            if !(step > F::zero()) {
                return Err(Error::invalid("fixed step must be positive"));
            }
        }
        Ok(())
    }
}

/// Result of a [`mle_fit`] run.
#[derive(Clone, Debug, PartialEq)]
pub struct MleFit<F> {
    /// Maximizer over the floored simplex.
    pub estimate: Vec<F>,
    pub iterations: usize,
    /// Whether the residual dropped below `tol` before `max_iters`.
    pub converged: bool,
    pub log_likelihood: F,
    /// Final `‖P(p + ∇L(p)) − p‖₂`, zero exactly at a constrained maximizer.
    pub projected_grad_norm: F,
}

/// `(1/N) Σ log p(Sₙ)`.
pub fn empirical_log_likelihood<F: Real>(p: &[F], samples: &[Cell]) -> Result<F> {
    let counts = dedupe(samples, p.len())?;
    Ok(weighted_log_likelihood(p, &counts))
}

/// Gradient `∂ᵢ L(p) = (1/N) Σₙ 1{i ∈ Sₙ} / p(Sₙ)`.
pub fn likelihood_gradient<F: Real>(p: &[F], samples: &[Cell]) -> Result<Vec<F>> {
    let counts = dedupe(samples, p.len())?;
    Ok(weighted_gradient(p, &counts))
}

/// Euclidean projection onto `{x : xᵢ ≥ floor, Σ xᵢ = 1}`.
///
/// Shifts by the floor and projects onto the simplex of the remaining mass
/// with the sort-based pivot rule, so the cost is `O(k log k)`.
pub fn project_to_floored_simplex<F: Real>(v: &[F], floor: F) -> Vec<F> {
    let k = v.len();
    let kf = F::of(k as f64);
    assert!(k >= 1, "cannot project an empty vector");
    assert!(
        floor >= F::zero() && floor * kf <= F::one(),
        "floor must satisfy 0 <= k*floor <= 1"
    );
    let mass = F::one() - floor * kf;
    let shifted: Vec<F> = v.iter().map(|&x| x - floor).collect();
    let mut sorted = shifted.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite entries"));
    let mut cumulative = F::zero();
    let mut theta = F::zero();
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - mass) / F::of((j + 1) as f64);
        if u - candidate > F::zero() {
            theta = candidate;
        }
    }
    shifted
        .into_iter()
        .map(|x| (x - theta).max(F::zero()) + floor)
        .collect()
}

/// Maximizes the empirical coarse log likelihood over the floored simplex by
/// projected gradient ascent, starting from the uniform distribution.
///
/// Deterministic: the solve involves no randomness, so equal inputs give
/// equal outputs bit for bit.
pub fn mle_fit<F: Real>(samples: &[Cell], k: usize, config: &MleConfig<F>) -> Result<MleFit<F>> {
    config.validate(k)?;
    let counts = dedupe(samples, k)?;
    let mut p = project_to_floored_simplex(&vec![F::one() / F::of(k as f64); k], config.floor);
    let mut value = weighted_log_likelihood(&p, &counts);
    let mut iterations = 0;
    let mut converged = false;
    let mut residual_norm = F::zero();

    while iterations < config.max_iters {
        let grad = weighted_gradient(&p, &counts);
        let ascent: Vec<F> = p.iter().zip(&grad).map(|(&pi, &gi)| pi + gi).collect();
        let residual = project_to_floored_simplex(&ascent, config.floor);
        residual_norm = norm2_diff(&residual, &p);
        if residual_norm <= config.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let (next, next_value) = match config.step_rule {
            StepRule::Fixed(step) => {
                let trial: Vec<F> =
                    p.iter().zip(&grad).map(|(&pi, &gi)| pi + step * gi).collect();
                let projected = project_to_floored_simplex(&trial, config.floor);
                let v = weighted_log_likelihood(&projected, &counts);
                (projected, v)
            }
            StepRule::Backtracking => backtrack(&p, value, &grad, config.floor, &counts)
                .unwrap_or_else(|| {
                    // Near the maximizer the objective is flat to machine
                    // precision and the Armijo test cannot certify progress.
                    // A step below the inverse curvature bound keeps the
                    // iteration a contraction toward the fixed point, which
                    // drives the residual down without consulting L.
                    let step = F::one() / (F::of(2.0) * curvature_bound(&p, &counts));
                    let trial: Vec<F> =
                        p.iter().zip(&grad).map(|(&pi, &gi)| pi + step * gi).collect();
                    let projected = project_to_floored_simplex(&trial, config.floor);
                    let v = weighted_log_likelihood(&projected, &counts);
                    (projected, v)
                }),
        };
        p = next;
        value = next_value;
    }

    Ok(MleFit {
        estimate: p,
        iterations,
        converged,
        log_likelihood: value,
        projected_grad_norm: residual_norm,
    })
}

/// Armijo search: halve the step until
/// `L(P(p + t·g)) ≥ L(p) + σ·⟨g, P(p + t·g) − p⟩` with `σ = 1e-4`; `None`
/// when no step certifies sufficient increase.
fn backtrack<F: Real>(
    p: &[F],
    value: F,
    grad: &[F],
    floor: F,
    counts: &[(Vec<usize>, F)],
) -> Option<(Vec<F>, F)> {
    let sigma = F::of(1e-4);
    let mut step = F::one();
    for _ in 0..60 {
        let trial: Vec<F> = p.iter().zip(grad).map(|(&pi, &gi)| pi + step * gi).collect();
        let projected = project_to_floored_simplex(&trial, floor);
        let moved: F = grad
            .iter()
            .zip(projected.iter().zip(p))
            .map(|(&gi, (&xi, &pi))| gi * (xi - pi))
            .sum();
        let trial_value = weighted_log_likelihood(&projected, counts);
        if trial_value >= value + sigma * moved && trial_value > value {
            return Some((projected, trial_value));
        }
        step /= F::of(2.0);
    }
    None
}

/// Upper bound on the largest eigenvalue of `−∇²L(p)` via the trace:
/// each observed cell contributes `w·|S| / p(S)²`.
fn curvature_bound<F: Real>(p: &[F], counts: &[(Vec<usize>, F)]) -> F {
    counts
        .iter()
        .map(|(labels, w)| {
            let mass = cell_mass(p, labels);
            *w * F::of(labels.len() as f64) / (mass * mass)
        })
        .sum()
}

/// Collapses the sample list into `(labels, count/N)` pairs; repeated cells
/// are the common case and this makes each likelihood pass linear in the
/// number of distinct cells.
fn dedupe<F: Real>(samples: &[Cell], k: usize) -> Result<Vec<(Vec<usize>, F)>> {
    if samples.is_empty() {
        return Err(Error::invalid("no samples"));
    }
    let mut counts: BTreeMap<&Cell, usize> = BTreeMap::new();
    for cell in samples {
        if cell.max_label() >= k {
            return Err(Error::invalid(format!(
                "cell {cell} references a label outside 1..={k}"
            )));
        }
        *counts.entry(cell).or_default() += 1;
    }
    let n = F::of(samples.len() as f64);
    Ok(counts
        .into_iter()
        .map(|(cell, c)| (cell.labels().to_vec(), F::of(c as f64) / n))
        .collect())
}

fn cell_mass<F: Real>(p: &[F], labels: &[usize]) -> F {
    labels.iter().map(|&i| p[i]).sum()
}

fn weighted_log_likelihood<F: Real>(p: &[F], counts: &[(Vec<usize>, F)]) -> F {
    counts
        .iter()
        .map(|(labels, w)| *w * cell_mass(p, labels).ln())
        .sum()
}

fn weighted_gradient<F: Real>(p: &[F], counts: &[(Vec<usize>, F)]) -> Vec<F> {
    let mut grad = vec![F::zero(); p.len()];
    for (labels, w) in counts {
        let inv = *w / cell_mass(p, labels);
        for &i in labels {
            grad[i] += inv;
        }
    }
    grad
}

fn norm2_diff<F: Real>(a: &[F], b: &[F]) -> F {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<F>()
        .sqrt()
}

/// Reads one cell per line in the 1-based comma syntax ("2,3"); blank lines
/// and lines starting with `#` are skipped.
pub fn read_samples(path: &Path) -> Result<Vec<Cell>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut cells = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        cells.push(text.parse().map_err(|e| Error::Parse {
            line: idx + 1,
            message: format!("{e}"),
        })?);
    }
    Ok(cells)
}

/// Writes one cell per line in the 1-based comma syntax.
pub fn write_samples(path: &Path, samples: &[Cell]) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    for cell in samples {
        writeln!(file, "{cell}")?;
    }
    Ok(())
}
