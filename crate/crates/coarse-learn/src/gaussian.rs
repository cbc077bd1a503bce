//! Gaussian mean estimation from coarse observations.
//!
//! Observations are convex cells known to contain a latent draw from
//! 𝒩(μ★, I). The log likelihood of a candidate mean sums log-masses of the
//! observed cells and is concave, with gradient equal to the average gap
//! between conditional cell means and the candidate. All cell integrals run
//! by rejection sampling against explicit draw caps, so low-mass cells fail
//! loudly instead of biasing the estimate.

use rand::Rng;
use rayon::prelude::*;

use crate::convex::{ConvexPartitionDistribution, ConvexSet};
use crate::error::{Error, Result};
use crate::rng::derive;
use crate::scalar::Real;

/// Monte Carlo budgets and optimizer schedule for the Gaussian fitter.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianCoarseConfig<F> {
    /// Baseline draws per conditional-mean estimate.
    pub mc_samples: usize,
    /// Initial step size; step `t` uses `step0/√t`.
    pub step0: F,
    /// Stochastic gradient iterations.
    pub iters: usize,
    /// Return the iterate average instead of the last iterate.
    pub averaging: bool,
    /// Keep drawing past `mc_samples` until this many accepted points, up to
    /// the hard cap of `200·mc_samples` total draws.
    pub min_cell_hits: usize,
}

impl<F: Real> GaussianCoarseConfig<F> {
    pub fn new() -> Self {
        Self {
            mc_samples: 2_000,
            step0: F::one(),
            iters: 2_000,
            averaging: true,
            min_cell_hits: 20,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mc_samples == 0 || self.iters == 0 || self.min_cell_hits == 0 {
            return Err(Error::invalid("counts must be at least 1"));
        }
        if !(self.step0 > F::zero()) || !self.step0.is_finite() {
            return Err(Error::invalid("step0 must be positive and finite"));
        }
        Ok(())
    }
}

impl<F: Real> Default for GaussianCoarseConfig<F> {
    fn default() -> Self {
        Self::new()
    }
}

/// One coarse draw: sample `z ∼ 𝒩(μ★, I)`, draw a partition, return the
/// cell containing `z`.
pub fn sample_coarse_gaussian<F: Real, R: Rng + ?Sized>(
    mu_star: &[F],
    pi: &ConvexPartitionDistribution<F>,
    rng: &mut R,
) -> Result<ConvexSet<F>> {
    if mu_star.len() != pi.dim() {
        return Err(Error::invalid(format!(
            "mean has dimension {} but partitions have dimension {}",
            mu_star.len(),
            pi.dim()
        )));
    }
    let z: Vec<F> = mu_star.iter().map(|&m| m + F::std_normal(rng)).collect();
    let partition = pi.sample(rng);
    partition.locate_cell(&z).ok_or_else(|| {
        Error::partition(format!("drawn point {z:?} is not covered by any cell"))
    })
}

struct RejectionRun<F> {
    points: Vec<Vec<F>>,
    draws: usize,
}

/// Draws `x ∼ 𝒩(μ, I)` and keeps points inside `set` until the baseline
/// budget is spent and the hit floor is met, or the hard cap is reached.
fn rejection_points<F: Real, R: Rng + ?Sized>(
    mu: &[F],
    set: &ConvexSet<F>,
    cfg: &GaussianCoarseConfig<F>,
    rng: &mut R,
) -> RejectionRun<F> {
    let cap = 200 * cfg.mc_samples;
    let mut points = Vec::new();
    let mut draws = 0usize;
    let mut x = vec![F::zero(); mu.len()];
    while draws < cap && (draws < cfg.mc_samples || points.len() < cfg.min_cell_hits) {
        for (v, &m) in x.iter_mut().zip(mu) {
            *v = m + F::std_normal(rng);
        }
        draws += 1;
        if set.contains(&x) {
            points.push(x.clone());
        }
    }
    RejectionRun { points, draws }
}

/// Conditional mean and mass of `set` under `𝒩(μ, I)` by rejection
/// sampling.
///
/// Accepts at least `min_cell_hits` points when the cell mass allows it
/// within the draw cap; zero acceptances at the cap raise a low-mass error
/// carrying the rule-of-three rate bound `3/draws`.
pub fn conditional_mean<F: Real, R: Rng + ?Sized>(
    mu: &[F],
    set: &ConvexSet<F>,
    cfg: &GaussianCoarseConfig<F>,
    rng: &mut R,
) -> Result<(Vec<F>, F)> {
    cfg.validate()?;
    if mu.len() != set.dim() {
        return Err(Error::invalid(format!(
            "mean has dimension {} but the set has dimension {}",
            mu.len(),
            set.dim()
        )));
    }
    let run = rejection_points(mu, set, cfg, rng);
    summarize_run(&run, mu.len()).map(|s| (s.mean, s.mass))
}

struct RunSummary<F> {
    mean: Vec<F>,
    mass: F,
    log_mass_se: F,
    mean_se: Vec<F>,
}

fn summarize_run<F: Real>(run: &RejectionRun<F>, dim: usize) -> Result<RunSummary<F>> {
    let hits = run.points.len();
    if hits == 0 {
        return Err(Error::LowMassCell {
            draws: run.draws,
            rate_bound: 3.0 / run.draws as f64,
        });
    }
    let nf = F::of(hits as f64);
    let mut mean = vec![F::zero(); dim];
    for p in &run.points {
        for (m, &v) in mean.iter_mut().zip(p) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= nf;
    }
    let mut mean_se = vec![F::zero(); dim];
    if hits >= 2 {
        for p in &run.points {
            for ((s, &m), &v) in mean_se.iter_mut().zip(&mean).zip(p) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut mean_se {
            *s = (*s / (nf - F::one())).sqrt() / nf.sqrt();
        }
    } else {
        // A single accepted point: fall back to the unit variance bound.
        for s in &mut mean_se {
            *s = F::one();
        }
    }
    let mass = nf / F::of(run.draws as f64);
    let log_mass_se = ((F::one() - mass) / (mass * F::of(run.draws as f64))).sqrt();
    Ok(RunSummary {
        mean,
        mass,
        log_mass_se,
        mean_se,
    })
}

/// Monte Carlo estimate of the empirical log likelihood and its gradient,
/// with standard errors for both.
#[derive(Clone, Debug, PartialEq)]
pub struct McEstimate<F> {
    pub loglik: F,
    pub grad: Vec<F>,
    pub loglik_se: F,
    pub grad_se: Vec<F>,
}

/// Empirical coarse log likelihood `(1/N) Σ log 𝒩(μ; Sᵢ)` and its gradient
/// `(1/N) Σ (E[x | x ∈ Sᵢ] − μ)`, both by rejection sampling.
///
/// Per-set integrals are independent; they run in parallel on pre-derived
/// random streams, so the result is deterministic for a given generator
/// state.
pub fn loglik_and_grad<F: Real, R: Rng + ?Sized>(
    mu: &[F],
    sets: &[ConvexSet<F>],
    cfg: &GaussianCoarseConfig<F>,
    rng: &mut R,
) -> Result<McEstimate<F>> {
    cfg.validate()?;
    if sets.is_empty() {
        return Err(Error::invalid("need at least one observed set"));
    }
    if let Some(set) = sets.iter().find(|s| s.dim() != mu.len()) {
        return Err(Error::invalid(format!(
            "mean has dimension {} but a set has dimension {}",
            mu.len(),
            set.dim()
        )));
    }
    let jobs: Vec<(usize, rand_chacha::ChaCha8Rng)> = (0..sets.len())
        .map(|idx| (idx, derive(rng)))
        .collect();
    let summaries: Vec<Result<RunSummary<F>>> = jobs
        .into_par_iter()
        .map(|(idx, mut child)| {
            let run = rejection_points(mu, &sets[idx], cfg, &mut child);
            summarize_run(&run, mu.len())
        })
        .collect();

    let nf = F::of(sets.len() as f64);
    let mut loglik = F::zero();
    let mut loglik_var = F::zero();
    let mut grad = vec![F::zero(); mu.len()];
    let mut grad_var = vec![F::zero(); mu.len()];
    for summary in summaries {
        let s = summary?;
        loglik += s.mass.ln();
        loglik_var += s.log_mass_se * s.log_mass_se;
        for ((g, gv), (m, se)) in grad
            .iter_mut()
            .zip(&mut grad_var)
            .zip(s.mean.iter().zip(&s.mean_se))
        {
            *g += *m;
            *gv += *se * *se;
        }
    }
    loglik /= nf;
    for (g, &m) in grad.iter_mut().zip(mu) {
        *g = *g / nf - m;
    }
    Ok(McEstimate {
        loglik,
        loglik_se: loglik_var.sqrt() / nf,
        grad,
        grad_se: grad_var.iter().map(|v| v.sqrt() / nf).collect(),
    })
}

/// Stochastic gradient ascent on the coarse log likelihood from the origin:
/// at step `t`, one uniformly chosen set contributes the gradient estimate
/// `E[x | x ∈ S] − μ`, applied with step `step0/√t`. Returns the final
/// iterate, or the iterate average when `cfg.averaging` is set.
pub fn fit_gaussian_mean<F: Real, R: Rng + ?Sized>(
    sets: &[ConvexSet<F>],
    cfg: &GaussianCoarseConfig<F>,
    rng: &mut R,
) -> Result<Vec<F>> {
    fit_gaussian_mean_traced(sets, cfg, rng).map(|(mu, _)| mu)
}

/// As [`fit_gaussian_mean`], also returning the reported estimate after
/// every iteration (the running average when averaging is on).
pub fn fit_gaussian_mean_traced<F: Real, R: Rng + ?Sized>(
    sets: &[ConvexSet<F>],
    cfg: &GaussianCoarseConfig<F>,
    rng: &mut R,
) -> Result<(Vec<F>, Vec<Vec<F>>)> {
    cfg.validate()?;
    let Some(first) = sets.first() else {
        return Err(Error::invalid("need at least one observed set"));
    };
    let dim = first.dim();
    if sets.iter().any(|s| s.dim() != dim) {
        return Err(Error::invalid("sets disagree on dimension"));
    }
    let mut mu = vec![F::zero(); dim];
    let mut sum = vec![F::zero(); dim];
    let mut trace = Vec::with_capacity(cfg.iters);
    for t in 1..=cfg.iters {
        let idx = rng.random_range(0..sets.len());
        let (cond_mean, _) = conditional_mean(&mu, &sets[idx], cfg, rng)?;
        let eta = cfg.step0 / F::of(t as f64).sqrt();
        for (m, c) in mu.iter_mut().zip(&cond_mean) {
            *m += eta * (*c - *m);
        }
        for (s, &m) in sum.iter_mut().zip(&mu) {
            *s += m;
        }
        if cfg.averaging {
            let tf = F::of(t as f64);
            trace.push(sum.iter().map(|&s| s / tf).collect());
        } else {
            trace.push(mu.clone());
        }
    }
    let estimate = trace.last().cloned().unwrap_or(mu);
    Ok((estimate, trace))
}

/// Total variation distance between `𝒩(mu1, I)` and `𝒩(mu2, I)`:
/// `2Φ(‖Δ‖₂/2) − 1`.
pub fn tv_gaussians<F: Real>(mu1: &[F], mu2: &[F]) -> Result<F> {
    if mu1.len() != mu2.len() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            mu1.len(),
            mu2.len()
        )));
    }
    let dist_sq: F = mu1
        .iter()
        .zip(mu2)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum();
    Ok(F::of(2.0) * F::norm_cdf(dist_sq.sqrt() / F::of(2.0)) - F::one())
}

/// Expected 𝒩(μ★, I)-mass of the cells left strictly uncut by the
/// hyperplane `{x : w·x = c}`, averaged over partitions from `pi`.
///
/// Each trial draws a partition and a point, locates the point's cell, and
/// declares the cell uncut when the point together with its rejection-
/// sampled cellmates all fall strictly on one side.
pub fn uncut_mass_for_hyperplane<F: Real, R: Rng + ?Sized>(
    pi: &ConvexPartitionDistribution<F>,
    mu_star: &[F],
    w: &[F],
    c: F,
    cfg: &GaussianCoarseConfig<F>,
    rng: &mut R,
) -> Result<F> {
    cfg.validate()?;
    if mu_star.len() != pi.dim() || w.len() != pi.dim() {
        return Err(Error::invalid("dimension mismatch"));
    }
    let side = |p: &[F]| -> F {
        let dot: F = w.iter().zip(p).map(|(&a, &b)| a * b).sum();
        dot - c
    };
    let mut uncut = 0usize;
    let mut z = vec![F::zero(); mu_star.len()];
    for _ in 0..cfg.mc_samples {
        for (v, &m) in z.iter_mut().zip(mu_star) {
            *v = m + F::std_normal(rng);
        }
        let partition = pi.sample(rng);
        let cell = partition.locate_cell(&z).ok_or_else(|| {
            Error::partition(format!("drawn point {z:?} is not covered by any cell"))
        })?;
        let reference = side(&z);
        if reference == F::zero() {
            continue;
        }
        let run = rejection_points(mu_star, &cell, cfg, rng);
        let one_sided = run
            .points
            .iter()
            .all(|p| side(p) * reference > F::zero());
        if one_sided {
            uncut += 1;
        }
    }
    Ok(F::of(uncut as f64) / F::of(cfg.mc_samples as f64))
}

/// Worst-case uncut mass over sampled hyperplanes: a Monte Carlo diagnostic
/// of how much cell mass survives every direction. Near-zero values flag a
/// partition family that hides some direction of the mean.
///
/// Hyperplane normals are uniform on the sphere with offsets drawn around
/// `w·μ★`; all hyperplanes are drawn before any trial runs, so a fixed seed
/// compares different partition families against identical hyperplanes.
pub fn check_geometric_preservation<F: Real, R: Rng + ?Sized>(
    pi: &ConvexPartitionDistribution<F>,
    mu_star: &[F],
    n_hyperplanes: usize,
    cfg: &GaussianCoarseConfig<F>,
    rng: &mut R,
) -> Result<F> {
    cfg.validate()?;
    if n_hyperplanes == 0 {
        return Err(Error::invalid("need at least one hyperplane"));
    }
    if mu_star.len() != pi.dim() {
        return Err(Error::invalid("dimension mismatch"));
    }
    let dim = pi.dim();
    let mut hyperplanes = Vec::with_capacity(n_hyperplanes);
    for _ in 0..n_hyperplanes {
        let mut w: Vec<F> = (0..dim).map(|_| F::std_normal(rng)).collect();
        let norm: F = w.iter().map(|&v| v * v).sum::<F>().sqrt();
        for v in &mut w {
            *v /= norm;
        }
        let center: F = w.iter().zip(mu_star).map(|(&a, &b)| a * b).sum();
        let c = center + F::std_normal(rng);
        hyperplanes.push((w, c));
    }
    let mut min = F::infinity();
    for (w, c) in &hyperplanes {
        let mass = uncut_mass_for_hyperplane(pi, mu_star, w, *c, cfg, rng)?;
        min = min.min(mass);
    }
    Ok(min)
}
