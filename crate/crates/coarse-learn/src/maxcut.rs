//! Hardness reduction from Max-Cut to coarse Gaussian mean estimation.
//!
//! A connected graph turns into a Gaussian estimation problem whose coarse
//! observations come from axis bands and one ellipsoid: any mean estimate
//! whose coarse likelihood is near-optimal rounds to a near-maximum cut.
//! The sampler needs only the precomputed cell probabilities, never a
//! planted mean, and the ellipsoid's complement cell is deliberately
//! non-convex, which is exactly what locks the concave fitter out.
//!
//! Cut values are quoted as the Laplacian quadratic form `yᵀ·L·y`, which is
//! four times the number of cut edges.

use std::collections::VecDeque;
use std::path::Path;

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::convex::{ConvexSet, PartitionSpec, Region};
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

/// Largest band variance the band sensitivity bound is calibrated for.
pub const BAND_VARIANCE_CAP: f64 = 9.0;

/// Calibrated constant in the band sensitivity bound: the largest power of
/// two below the smallest observed ratio of gap to `min(1,(1−|μ|)²)/cap⁴`
/// over the grid `μ ∈ [−2,2]` (step 0.05), `σ ∈ [0.5,3]` (step 0.05).
pub const BAND_GAP_CONSTANT: f64 = 64.0;

/// Undirected graph with unit edge weights, vertices numbered from zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Validates vertex indices, forbids self-loops and duplicate edges,
    /// and requires the graph to be connected.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph has no vertices".into()));
        }
        let mut normalized = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) references a vertex outside 0..{n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {u}")));
            }
            let edge = (u.min(v), u.max(v));
            if normalized.contains(&edge) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    edge.0, edge.1
                )));
            }
            normalized.push(edge);
        }
        let graph = Graph {
            n,
            edges: normalized,
        };
        if !graph.is_connected() {
            return Err(Error::InvalidGraph("graph is not connected".into()));
        }
        Ok(graph)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    fn is_connected(&self) -> bool {
        let mut adjacency = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.n
    }

    /// Graph Laplacian: degree matrix minus adjacency matrix.
    pub fn laplacian<F: Real>(&self) -> Vec<Vec<F>> {
        let mut l = vec![vec![F::zero(); self.n]; self.n];
        for &(u, v) in &self.edges {
            l[u][u] += F::one();
            l[v][v] += F::one();
            l[u][v] -= F::one();
            l[v][u] -= F::one();
        }
        l
    }

    /// Reads a graph from edge-list text: one `u v` pair per line with
    /// vertices numbered from 1; blank lines and `#` comments are skipped.
    /// The vertex count is the largest index mentioned.
    pub fn read_edge_list(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut edges = Vec::new();
        let mut max_vertex = 0usize;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let tokens: Vec<&str> = trimmed.split_whitespace().collect();
            if tokens.len() != 2 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected `u v`, found {} tokens", tokens.len()),
                });
            }
            let mut pair = [0usize; 2];
            for (slot, token) in pair.iter_mut().zip(&tokens) {
                let value: usize = token.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("`{token}` is not a vertex index"),
                })?;
                if value == 0 {
                    return Err(Error::Parse {
                        line,
                        message: "vertices are numbered from 1".into(),
                    });
                }
                *slot = value;
            }
            max_vertex = max_vertex.max(pair[0]).max(pair[1]);
            edges.push((pair[0] - 1, pair[1] - 1));
        }
        Graph::new(max_vertex, edges)
    }

    /// Writes the edge list in the same 1-based `u v` text format.
    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        let mut text = String::new();
        for &(u, v) in &self.edges {
            text.push_str(&format!("{} {}\n", u + 1, v + 1));
        }
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Exhaustive Max-Cut over all sign assignments, for graphs of at most 24
/// vertices. Returns the optimal quadratic value `yᵀ·L·y` (four times the
/// cut edge count) and a witness assignment.
pub fn max_cut_bruteforce<F: Real>(g: &Graph) -> Result<(F, Vec<i8>)> {
    if g.n > 24 {
        return Err(Error::invalid(format!(
            "exhaustive search supports at most 24 vertices, got {}",
            g.n
        )));
    }
    let mut best_cut = 0usize;
    let mut witness = vec![1i8; g.n];
    for mask in 0u32..(1u32 << (g.n - 1)) {
        let sides: Vec<i8> = std::iter::once(1)
            .chain((0..g.n - 1).map(|v| if mask >> v & 1 == 1 { -1 } else { 1 }))
            .collect();
        let cut = g
            .edges
            .iter()
            .filter(|&&(u, v)| sides[u] != sides[v])
            .count();
        if cut > best_cut || mask == 0 {
            best_cut = cut;
            witness = sides;
        }
    }
    Ok((F::of(4.0 * best_cut as f64), witness))
}

/// Coarse Gaussian instance derived from a graph: covariance from the
/// reduced Laplacian, one axis band per reduced dimension, one ellipsoid,
/// and the coin-flip probabilities for each cell. There is deliberately no
/// mean field: sampling never needs one.
#[derive(Clone, Debug, PartialEq)]
pub struct HardInstance<F> {
    d: usize,
    isometry: Vec<Vec<F>>,
    sigma: Vec<Vec<F>>,
    bands: Vec<ConvexSet<F>>,
    ellipsoid_threshold: F,
    cell_probs: Vec<F>,
    opt: F,
}

impl<F: Real> HardInstance<F> {
    /// Ambient dimension, one less than the vertex count.
    pub fn d(&self) -> usize {
        self.d
    }

    /// `d×(d+1)` matrix whose rows form an orthonormal basis of the
    /// hyperplane orthogonal to the all-ones vector.
    pub fn isometry(&self) -> &[Vec<F>] {
        &self.isometry
    }

    pub fn sigma(&self) -> &[Vec<F>] {
        &self.sigma
    }

    /// Band sets `{x : −1 ≤ xᵢ ≤ 1}`, one per ambient coordinate.
    pub fn bands(&self) -> &[ConvexSet<F>] {
        &self.bands
    }

    /// Threshold `q` of the ellipsoid `{x : xᵀ·Σ⁻¹·x ≤ q}`.
    pub fn ellipsoid_threshold(&self) -> F {
        self.ellipsoid_threshold
    }

    /// Cell probabilities, bands first, ellipsoid last.
    pub fn cell_probs(&self) -> &[F] {
        &self.cell_probs
    }

    pub fn opt(&self) -> F {
        self.opt
    }

    /// Number of observation sets: `d` bands plus the ellipsoid.
    pub fn set_count(&self) -> usize {
        self.d + 1
    }

    /// The ellipsoid as an explicit convex set: the preimage of the radius
    /// `√q` ball under the whitening map.
    pub fn ellipsoid_set(&self) -> Result<ConvexSet<F>> {
        let chol = linalg::cholesky(&self.sigma)?;
        let whitening = linalg::lower_triangular_inverse(&chol);
        ConvexSet::affine_image(
            whitening,
            ConvexSet::ball(vec![F::zero(); self.d], self.ellipsoid_threshold.sqrt())?,
        )
    }

    /// Observation set by index: `0..d` are bands, `d` is the ellipsoid.
    pub fn cell_set(&self, set_id: usize) -> Result<ConvexSet<F>> {
        if set_id < self.d {
            Ok(self.bands[set_id].clone())
        } else if set_id == self.d {
            self.ellipsoid_set()
        } else {
            Err(Error::invalid(format!(
                "set index {set_id} out of range 0..={}",
                self.d
            )))
        }
    }

    /// Structural invariants: orthonormal sum-free isometry rows, symmetric
    /// positive definite covariance, probabilities strictly inside (0,1).
    pub fn validate(&self) -> Result<()> {
        let n = self.d + 1;
        let tol = F::of(1e-10);
        if self.isometry.len() != self.d || self.isometry.iter().any(|row| row.len() != n) {
            return Err(Error::invalid("isometry must be d rows of d+1 entries"));
        }
        for (i, row) in self.isometry.iter().enumerate() {
            let sum: F = row.iter().copied().sum();
            if sum.abs() > tol {
                return Err(Error::invalid(format!(
                    "isometry row {i} is not orthogonal to the all-ones vector"
                )));
            }
            for (j, other) in self.isometry.iter().enumerate() {
                let dot: F = row.iter().zip(other).map(|(&a, &b)| a * b).sum();
                let want = if i == j { F::one() } else { F::zero() };
                if (dot - want).abs() > tol {
                    return Err(Error::invalid(format!(
                        "isometry rows {i} and {j} are not orthonormal"
                    )));
                }
            }
        }
        if self.sigma.len() != self.d || self.sigma.iter().any(|row| row.len() != self.d) {
            return Err(Error::invalid("covariance must be d×d"));
        }
        for i in 0..self.d {
            for j in 0..i {
                if (self.sigma[i][j] - self.sigma[j][i]).abs() > tol {
                    return Err(Error::invalid("covariance is not symmetric"));
                }
            }
        }
        linalg::cholesky(&self.sigma)
            .map_err(|_| Error::invalid("covariance is not positive definite"))?;
        if self.bands.len() != self.d || self.cell_probs.len() != self.d + 1 {
            return Err(Error::invalid("band and probability counts must match d"));
        }
        if self
            .cell_probs
            .iter()
            .any(|&p| !(p > F::zero() && p < F::one()))
        {
            return Err(Error::invalid("cell probabilities must lie strictly in (0,1)"));
        }
        if !(self.opt > F::zero()) || !(self.ellipsoid_threshold > F::zero()) {
            return Err(Error::invalid("opt and threshold must be positive"));
        }
        Ok(())
    }

    /// Exports the instance as a partition distribution: each observation
    /// set becomes a two-cell partition of set and complement, all equally
    /// weighted. The complement cells are non-convex, so converting the
    /// result for the concave Gaussian fitter fails by design.
    pub fn to_partition_spec(&self) -> Result<PartitionSpec<F>> {
        let weight = F::one() / F::of(self.set_count() as f64);
        let mut partitions = Vec::with_capacity(self.set_count());
        for set_id in 0..self.set_count() {
            let set = self.cell_set(set_id)?;
            partitions.push((
                weight,
                vec![Region::Convex(set.clone()), Region::Complement(set)],
            ));
        }
        Ok(PartitionSpec {
            d: self.d,
            partitions,
        })
    }
}

/// Gaussian mass of the band `[−1,1]` under mean `mu` and the given
/// standard deviation.
fn band_mass<F: Real>(mu: F, sigma: F) -> F {
    ((F::one() - mu) / sigma).norm_cdf() - ((-F::one() - mu) / sigma).norm_cdf()
}

/// CDF of the noncentral chi-square distribution via its Poisson mixture of
/// central chi-squares; the tail beyond 64 terms is negligible for the
/// noncentralities used here.
fn noncentral_chi_squared_cdf(dof: usize, lambda: f64, q: f64) -> f64 {
    let mut total = 0.0;
    let mut weight = (-lambda / 2.0).exp();
    for j in 0..64 {
        if weight > 0.0 {
            let central = ChiSquared::new((dof + 2 * j) as f64)
                .expect("degrees of freedom are positive");
            total += weight * central.cdf(q);
        }
        weight *= lambda / (2.0 * (j as f64 + 1.0));
    }
    total
}

/// Builds the hard coarse-Gaussian instance for a graph with claimed
/// optimal quadratic value `opt`.
///
/// The covariance is `opt` times the inverse reduced Laplacian, the
/// threshold is `q = d + 1 + √(2d+4)`, band probabilities put the band mean
/// at 1 with the covariance diagonal as variance, and the ellipsoid
/// probability is the noncentral chi-square mass at noncentrality 1.
pub fn reduce_instance<F: Real>(g: &Graph, opt: F) -> Result<HardInstance<F>> {
    if !(opt > F::zero()) || !opt.is_finite() {
        return Err(Error::invalid("opt must be positive and finite"));
    }
    if g.n < 2 {
        return Err(Error::InvalidGraph(
            "the reduction needs at least two vertices".into(),
        ));
    }
    let d = g.n - 1;
    let isometry = linalg::ones_complement_basis::<F>(g.n);
    let laplacian = g.laplacian::<F>();
    let reduced = linalg::matmul(
        &linalg::matmul(&isometry, &laplacian),
        &linalg::transpose(&isometry),
    );
    let chol = linalg::cholesky(&reduced)
        .map_err(|_| Error::InvalidGraph("reduced Laplacian is singular".into()))?;
    let mut sigma = linalg::cholesky_inverse(&chol);
    for row in &mut sigma {
        for value in row.iter_mut() {
            *value *= opt;
        }
    }
    let q = F::of((d + 1) as f64) + F::of((2 * d + 4) as f64).sqrt();

    let mut bands = Vec::with_capacity(d);
    let mut cell_probs = Vec::with_capacity(d + 1);
    for i in 0..d {
        let mut lo = vec![F::neg_infinity(); d];
        let mut hi = vec![F::infinity(); d];
        lo[i] = -F::one();
        hi[i] = F::one();
        bands.push(ConvexSet::axis_box(lo, hi)?);
        cell_probs.push(band_mass(F::one(), sigma[i][i].sqrt()));
    }
    cell_probs.push(F::of(noncentral_chi_squared_cdf(d, 1.0, q.as_f64())));

    let instance = HardInstance {
        d,
        isometry,
        sigma,
        bands,
        ellipsoid_threshold: q,
        cell_probs,
        opt,
    };
    instance.validate()?;
    Ok(instance)
}

/// One coarse observation by coin flips alone: a uniformly chosen set index
/// and whether the latent point fell inside it, per the precomputed cell
/// probability.
pub fn sample_hard_coarse<F: Real, R: Rng + ?Sized>(
    inst: &HardInstance<F>,
    rng: &mut R,
) -> (usize, bool) {
    let set_id = rng.random_range(0..inst.set_count());
    let inside = F::unit_uniform(rng) < inst.cell_probs[set_id];
    (set_id, inside)
}

/// A candidate mean rounded back to a cut assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundedCut<F> {
    /// Sign per vertex; ties at zero round to +1.
    pub corner: Vec<i8>,
    /// Quadratic value `ŷᵀ·L·ŷ` of the rounded assignment.
    pub cut_quadratic: F,
    /// `cut_quadratic` relative to the instance's claimed optimum.
    pub ratio: F,
}

/// Rounds a candidate mean to the cut assignment whose per-vertex sign is
/// the sign of the mean pulled back through the isometry, and scores it
/// against the graph.
pub fn round_and_score<F: Real>(
    mu_tilde: &[F],
    inst: &HardInstance<F>,
    g: &Graph,
) -> Result<RoundedCut<F>> {
    if mu_tilde.len() != inst.d {
        return Err(Error::invalid(format!(
            "candidate mean has dimension {}, instance has {}",
            mu_tilde.len(),
            inst.d
        )));
    }
    if g.n != inst.d + 1 {
        return Err(Error::invalid(format!(
            "graph has {} vertices, instance expects {}",
            g.n,
            inst.d + 1
        )));
    }
    let lifted = linalg::matvec(&linalg::transpose(&inst.isometry), mu_tilde);
    let corner: Vec<i8> = lifted
        .iter()
        .map(|&v| if v >= F::zero() { 1 } else { -1 })
        .collect();
    let cut_edges = g
        .edges
        .iter()
        .filter(|&&(u, v)| corner[u] != corner[v])
        .count();
    let cut_quadratic = F::of(4.0 * cut_edges as f64);
    Ok(RoundedCut {
        corner,
        cut_quadratic,
        ratio: cut_quadratic / inst.opt,
    })
}

/// A Monte Carlo sensitivity estimate next to its analytic lower bound.
#[derive(Clone, Debug, PartialEq)]
pub struct McGap<F> {
    pub gap: F,
    pub bound: F,
    pub se: F,
}

/// Gap between the ellipsoid masses of two isotropic Gaussians whose means
/// have squared norms `v_star_sq` (fixed at 1, where the threshold formula
/// and bound are calibrated) and `v_sq ≤ v_star_sq`.
///
/// Both masses are estimated on shared draws, reduced by rotation to means
/// along the first axis; the bound is `(v_star_sq − v_sq)/(6·√(2d+4))`.
pub fn ellipsoid_gap<F: Real, R: Rng + ?Sized>(
    v_star_sq: F,
    v_sq: F,
    d: usize,
    n_mc: usize,
    rng: &mut R,
) -> Result<McGap<F>> {
    if v_star_sq != F::one() {
        return Err(Error::invalid("the bound is calibrated at ‖v★‖² = 1"));
    }
    if !(v_sq >= F::zero() && v_sq <= v_star_sq) {
        return Err(Error::invalid("need 0 ≤ v_sq ≤ v_star_sq"));
    }
    if d == 0 || n_mc < 2 {
        return Err(Error::invalid("need d ≥ 1 and at least two draws"));
    }
    let q = F::of(d as f64) + v_star_sq + (F::of(2.0 * d as f64) + F::of(4.0) * v_star_sq).sqrt();
    let v_star = v_star_sq.sqrt();
    let v = v_sq.sqrt();
    let mut sum = F::zero();
    let mut sum_sq = F::zero();
    for _ in 0..n_mc {
        let first = F::std_normal(rng);
        let mut tail = F::zero();
        for _ in 1..d {
            let z = F::std_normal(rng);
            tail += z * z;
        }
        let inside = |shift: F| (first + shift) * (first + shift) + tail <= q;
        let diff = match (inside(v), inside(v_star)) {
            (true, false) => F::one(),
            (false, true) => -F::one(),
            _ => F::zero(),
        };
        sum += diff;
        sum_sq += diff * diff;
    }
    let nf = F::of(n_mc as f64);
    let mean = sum / nf;
    let variance = (sum_sq - nf * mean * mean) / (nf - F::one());
    Ok(McGap {
        gap: mean.abs(),
        bound: (v_star_sq - v_sq) / (F::of(6.0) * (F::of(2.0 * d as f64) + F::of(4.0)).sqrt()),
        se: (variance / nf).sqrt(),
    })
}

/// Gap between the band masses at mean `mu_i` and at the reference mean 1,
/// with its calibrated lower bound `c·min(1,(1−|μ|)²)/cap⁴`. Exact in the
/// normal CDF, no sampling.
pub fn band_gap<F: Real>(mu_i: F, variance: F) -> Result<(F, F)> {
    if !(variance > F::zero()) || variance > F::of(BAND_VARIANCE_CAP) {
        return Err(Error::invalid(format!(
            "variance must lie in (0, {BAND_VARIANCE_CAP}]"
        )));
    }
    if !mu_i.is_finite() {
        return Err(Error::invalid("mean must be finite"));
    }
    let sigma = variance.sqrt();
    let gap = (band_mass(F::one(), sigma) - band_mass(mu_i, sigma)).abs();
    let weight = (F::one() - mu_i.abs()) * (F::one() - mu_i.abs());
    let bound = F::of(BAND_GAP_CONSTANT) * weight.min(F::one())
        / F::of(BAND_VARIANCE_CAP * BAND_VARIANCE_CAP * BAND_VARIANCE_CAP * BAND_VARIANCE_CAP);
    Ok((gap, bound))
}

/// Rewrites one observation cell in whitened coordinates, where the
/// instance's Gaussian becomes standard: bands become slabs against rows of
/// the Cholesky factor, the ellipsoid becomes the radius `√q` ball, and
/// `inside = false` selects the complement cell.
pub fn rotate_to_identity<F: Real>(
    inst: &HardInstance<F>,
    set_id: usize,
    inside: bool,
) -> Result<Region<F>> {
    if set_id > inst.d {
        return Err(Error::invalid(format!(
            "set index {set_id} out of range 0..={}",
            inst.d
        )));
    }
    let set = if set_id < inst.d {
        let chol = linalg::cholesky(&inst.sigma)?;
        ConvexSet::affine_image(
            vec![chol[set_id].clone()],
            ConvexSet::axis_box(vec![-F::one()], vec![F::one()])?,
        )?
    } else {
        ConvexSet::ball(vec![F::zero(); inst.d], inst.ellipsoid_threshold.sqrt())?
    };
    Ok(if inside {
        Region::Convex(set)
    } else {
        Region::Complement(set)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn single_edge() -> Graph {
        Graph::new(2, vec![(0, 1)]).unwrap()
    }

    fn triangle() -> Graph {
        Graph::new(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    fn four_cycle() -> Graph {
        Graph::new(4, vec![(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap()
    }

    fn corpus() -> Vec<Graph> {
        let mut graphs = vec![single_edge(), triangle(), four_cycle()];
        // Paths.
        for n in [3usize, 5, 8] {
            graphs.push(Graph::new(n, (0..n - 1).map(|v| (v, v + 1)).collect()).unwrap());
        }
        // Cycles.
        for n in [5usize, 6] {
            graphs.push(Graph::new(n, (0..n).map(|v| (v, (v + 1) % n)).collect()).unwrap());
        }
        // Stars.
        for n in [4usize, 7] {
            graphs.push(Graph::new(n, (1..n).map(|v| (0, v)).collect()).unwrap());
        }
        // Complete graphs.
        for n in [4usize, 5] {
            let edges = (0..n)
                .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
                .collect();
            graphs.push(Graph::new(n, edges).unwrap());
        }
        // Random connected graphs: a spanning path plus extra edges.
        let mut rng = seeded(90);
        for n in [6usize, 9, 10] {
            let mut edges: Vec<(usize, usize)> = (0..n - 1).map(|v| (v, v + 1)).collect();
            for _ in 0..n {
                let u = rng.random_range(0..n);
                let v = rng.random_range(0..n);
                let edge = (u.min(v), u.max(v));
                if u != v && !edges.contains(&edge) {
                    edges.push(edge);
                }
            }
            graphs.push(Graph::new(n, edges).unwrap());
        }
        graphs
    }

    #[test]
    fn laplacian_hand_values() {
        let l = single_edge().laplacian::<f64>();
        assert_eq!(l, vec![vec![1.0, -1.0], vec![-1.0, 1.0]]);

        let l = four_cycle().laplacian::<f64>();
        for (i, row) in l.iter().enumerate() {
            assert_eq!(row[i], 2.0);
            assert_eq!(row.iter().sum::<f64>(), 0.0);
        }
        let x = [1.0, -1.0, 1.0, -1.0];
        let lx = linalg::matvec(&l, &x);
        let quad: f64 = x.iter().zip(&lx).map(|(a, b)| a * b).sum();
        assert_eq!(quad, 16.0);
    }

    #[test]
    fn graph_validation_rejects_malformed_input() {
        assert!(matches!(
            Graph::new(0, vec![]),
            Err(Error::InvalidGraph(_))
        ));
        assert!(matches!(
            Graph::new(3, vec![(0, 0)]),
            Err(Error::InvalidGraph(_))
        ));
        assert!(matches!(
            Graph::new(3, vec![(0, 1), (1, 0), (1, 2)]),
            Err(Error::InvalidGraph(_))
        ));
        assert!(matches!(
            Graph::new(3, vec![(0, 3)]),
            Err(Error::InvalidGraph(_))
        ));
        assert!(matches!(
            Graph::new(4, vec![(0, 1), (2, 3)]),
            Err(Error::InvalidGraph(_))
        ));
        assert!(Graph::new(1, vec![]).is_ok());
    }

    #[test]
    fn bruteforce_hand_values() {
        let (opt, witness) = max_cut_bruteforce::<f64>(&single_edge()).unwrap();
        assert_eq!(opt, 4.0);
        assert_eq!(witness, vec![1, -1]);

        let (opt, _) = max_cut_bruteforce::<f64>(&triangle()).unwrap();
        assert_eq!(opt, 8.0);

        let (opt, witness) = max_cut_bruteforce::<f64>(&four_cycle()).unwrap();
        assert_eq!(opt, 16.0);
        assert_eq!(witness, vec![1, -1, 1, -1]);
    }

    #[test]
    fn bruteforce_refuses_large_graphs() {
        let n = 25;
        let path = Graph::new(n, (0..n - 1).map(|v| (v, v + 1)).collect()).unwrap();
        assert!(matches!(
            max_cut_bruteforce::<f64>(&path),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn single_edge_instance_matches_hand_algebra() {
        let inst = reduce_instance::<f64>(&single_edge(), 4.0).unwrap();
        assert_eq!(inst.d(), 1);
        assert!((inst.sigma()[0][0] - 2.0).abs() < 1e-12);
        assert!((inst.ellipsoid_threshold() - (2.0 + 6.0f64.sqrt())).abs() < 1e-12);
        // Band mass of 𝒩(1, 2) on [−1,1] and the noncentral chi-square
        // ellipsoid mass, both frozen from an independent implementation.
        assert!((inst.cell_probs()[0] - 0.4213503964748574).abs() < 1e-6);
        assert!((inst.cell_probs()[1] - 0.865429753233).abs() < 1e-6);
        inst.validate().unwrap();
    }

    #[test]
    fn unit_variance_band_instance() {
        // Claimed opt 2 halves the covariance of the single edge: Σ = [1].
        let inst = reduce_instance::<f64>(&single_edge(), 2.0).unwrap();
        assert!((inst.sigma()[0][0] - 1.0).abs() < 1e-12);
        assert!((inst.cell_probs()[0] - 0.4772498680518208).abs() < 1e-6);
    }

    #[test]
    fn four_cycle_instance_matches_reference() {
        let inst = reduce_instance::<f64>(&four_cycle(), 16.0).unwrap();
        assert_eq!(inst.d(), 3);
        assert!((inst.ellipsoid_threshold() - 7.1622776601683795).abs() < 1e-10);
        let diag: Vec<f64> = (0..3).map(|i| inst.sigma()[i][i]).collect();
        let expected = [6.0, 22.0 / 3.0, 20.0 / 3.0];
        for (have, want) in diag.iter().zip(expected) {
            assert!((have - want).abs() < 1e-8, "{diag:?}");
        }
        let probs = inst.cell_probs();
        let frozen = [0.292891910879, 0.269909532276, 0.280710986960, 0.855602538057];
        for (have, want) in probs.iter().zip(frozen) {
            assert!((have - want).abs() < 1e-6, "{probs:?}");
        }
        inst.validate().unwrap();
    }

    #[test]
    fn covariance_inverts_the_reduced_laplacian() {
        for g in corpus() {
            let (opt, _) = max_cut_bruteforce::<f64>(&g).unwrap();
            let inst = reduce_instance(&g, opt).unwrap();
            let reduced = linalg::matmul(
                &linalg::matmul(inst.isometry(), &g.laplacian()),
                &linalg::transpose(inst.isometry()),
            );
            let product = linalg::matmul(inst.sigma(), &reduced);
            for (i, row) in product.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    let want = if i == j { opt } else { 0.0 };
                    assert!((v - want).abs() < 1e-8, "graph n={} ({i},{j})", g.n());
                }
            }
        }
    }

    #[test]
    fn corners_keep_their_objective_through_the_isometry() {
        for g in corpus().into_iter().filter(|g| g.n() <= 6) {
            let inst = reduce_instance(&g, 4.0 * g.edges().len() as f64).unwrap();
            let laplacian = g.laplacian::<f64>();
            let reduced = linalg::matmul(
                &linalg::matmul(inst.isometry(), &laplacian),
                &linalg::transpose(inst.isometry()),
            );
            for mask in 0u32..(1u32 << g.n()) {
                let y: Vec<f64> = (0..g.n())
                    .map(|v| if mask >> v & 1 == 1 { -1.0 } else { 1.0 })
                    .collect();
                let ly = linalg::matvec(&laplacian, &y);
                let direct: f64 = y.iter().zip(&ly).map(|(a, b)| a * b).sum();
                let projected = linalg::matvec(inst.isometry(), &y);
                let rp = linalg::matvec(&reduced, &projected);
                let through: f64 = projected.iter().zip(&rp).map(|(a, b)| a * b).sum();
                assert!(
                    (direct - through).abs() < 1e-8,
                    "graph n={} corner {mask:b}: {direct} vs {through}",
                    g.n()
                );
            }
        }
    }

    #[test]
    fn sampler_frequencies_match_declared_probabilities() {
        let mut rng = seeded(91);
        let inst = reduce_instance(&single_edge(), 2.0).unwrap();
        let n = 40_000;
        let mut set_counts = vec![0usize; inst.set_count()];
        let mut inside_counts = vec![0usize; inst.set_count()];
        for _ in 0..n {
            let (set_id, inside) = sample_hard_coarse(&inst, &mut rng);
            set_counts[set_id] += 1;
            if inside {
                inside_counts[set_id] += 1;
            }
        }
        for (set_id, &count) in set_counts.iter().enumerate() {
            let freq = count as f64 / n as f64;
            let p = 1.0 / inst.set_count() as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((freq - p).abs() < 4.0 * se, "set {set_id} freq {freq}");

            let inside_freq = inside_counts[set_id] as f64 / count as f64;
            let prob = inst.cell_probs()[set_id];
            let se = (prob * (1.0 - prob) / count as f64).sqrt();
            assert!(
                (inside_freq - prob).abs() < 4.0 * se,
                "set {set_id} inside {inside_freq} vs {prob}"
            );
        }
    }

    #[test]
    fn rounding_recovers_the_witness() {
        let g = four_cycle();
        let (opt, witness) = max_cut_bruteforce::<f64>(&g).unwrap();
        let inst = reduce_instance(&g, opt).unwrap();
        let witness_f: Vec<f64> = witness.iter().map(|&s| s as f64).collect();
        let mu = linalg::matvec(inst.isometry(), &witness_f);

        let rounded = round_and_score(&mu, &inst, &g).unwrap();
        assert_eq!(rounded.corner, witness);
        assert_eq!(rounded.cut_quadratic, 16.0);
        assert_eq!(rounded.ratio, 1.0);

        let mut rng = seeded(92);
        for _ in 0..50 {
            let noisy: Vec<f64> = mu
                .iter()
                .map(|&v| v + 0.8 * (rng.random::<f64>() - 0.5))
                .collect();
            let rounded = round_and_score(&noisy, &inst, &g).unwrap();
            assert_eq!(rounded.corner, witness);
            assert_eq!(rounded.ratio, 1.0);
        }
    }

    #[test]
    fn rounding_edge_cases() {
        let g = four_cycle();
        let inst = reduce_instance(&g, 16.0).unwrap();
        let rounded = round_and_score(&[0.0, 0.0, 0.0], &inst, &g).unwrap();
        assert_eq!(rounded.corner, vec![1, 1, 1, 1]);
        assert_eq!(rounded.cut_quadratic, 0.0);

        assert!(round_and_score(&[0.0, 0.0], &inst, &g).is_err());
        assert!(round_and_score(&[0.0, 0.0, 0.0], &inst, &triangle()).is_err());
    }

    #[test]
    fn ellipsoid_gap_vanishes_at_equal_norms() {
        let mut rng = seeded(93);
        let est = ellipsoid_gap::<f64, _>(1.0, 1.0, 10, 1_000, &mut rng).unwrap();
        assert_eq!(est.gap, 0.0);
        assert_eq!(est.se, 0.0);
        assert_eq!(est.bound, 0.0);
    }

    #[test]
    fn ellipsoid_gap_beats_its_bound() {
        let mut rng = seeded(94);
        let est = ellipsoid_gap::<f64, _>(1.0, 0.0, 100, 50_000, &mut rng).unwrap();
        assert!(
            est.gap >= est.bound - 3.0 * est.se,
            "gap {} bound {} se {}",
            est.gap,
            est.bound,
            est.se
        );
        // Frozen from an independent noncentral chi-square implementation.
        assert!((est.gap - 0.017102).abs() < 5.0 * est.se.max(1e-4), "{}", est.gap);
    }

    #[test]
    fn ellipsoid_gap_is_monotone_in_the_second_norm() {
        let mut gaps = Vec::new();
        for step in 0..5 {
            let v_sq = step as f64 * 0.25;
            let est = ellipsoid_gap::<f64, _>(1.0, v_sq, 50, 40_000, &mut seeded(95)).unwrap();
            gaps.push(est.gap);
        }
        for pair in gaps.windows(2) {
            assert!(pair[1] <= pair[0] + 2e-3, "{gaps:?}");
        }
        assert_eq!(gaps[4], 0.0);
    }

    #[test]
    fn ellipsoid_gap_validates_input() {
        let mut rng = seeded(96);
        assert!(ellipsoid_gap(0.9, 0.5, 10, 100, &mut rng).is_err());
        assert!(ellipsoid_gap(1.0, 1.5, 10, 100, &mut rng).is_err());
        assert!(ellipsoid_gap(1.0, -0.1, 10, 100, &mut rng).is_err());
        assert!(ellipsoid_gap(1.0, 0.5, 0, 100, &mut rng).is_err());
        assert!(ellipsoid_gap(1.0, 0.5, 10, 1, &mut rng).is_err());
    }

    #[test]
    fn band_gap_hand_values() {
        let (gap, bound) = band_gap::<f64>(1.0, 1.0).unwrap();
        assert_eq!(gap, 0.0);
        assert_eq!(bound, 0.0);

        let (gap, bound) = band_gap::<f64>(0.0, 1.0).unwrap();
        assert!((gap - 0.20543962408526506).abs() < 1e-9);
        assert!(gap >= bound);

        assert!(band_gap(0.0, 9.5).is_err());
        assert!(band_gap(0.0, 0.0).is_err());
        assert!(band_gap(f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn band_gap_clears_its_bound_on_a_coarse_grid() {
        let mut mu = -2.0;
        while mu <= 2.0 + 1e-9 {
            let mut sigma = 0.5f64;
            while sigma <= 3.0 + 1e-9 {
                let (gap, bound) = band_gap(mu, sigma * sigma).unwrap();
                assert!(gap >= bound, "mu {mu} sigma {sigma}: {gap} < {bound}");
                sigma += 0.25;
            }
            mu += 0.25;
        }
    }

    #[test]
    fn whitening_preserves_membership() {
        let g = four_cycle();
        let inst = reduce_instance(&g, 16.0).unwrap();
        let chol = linalg::cholesky(inst.sigma()).unwrap();
        let mut rng = seeded(97);
        for set_id in 0..inst.set_count() {
            let original = inst.cell_set(set_id).unwrap();
            let whitened = rotate_to_identity(&inst, set_id, true).unwrap();
            for _ in 0..1_000 {
                let z: Vec<f64> = (0..3).map(|_| 3.0 * f64::std_normal(&mut rng)).collect();
                let x = linalg::matvec(&chol, &z);
                assert_eq!(
                    original.contains(&x),
                    whitened.contains(&z),
                    "set {set_id} at {z:?}"
                );
            }
        }
    }

    #[test]
    fn whitening_identity_covariance_keeps_the_band() {
        let inst = reduce_instance(&single_edge(), 2.0).unwrap();
        let whitened = rotate_to_identity(&inst, 0, true).unwrap();
        for v in [-1.2, -0.99, 0.0, 0.99, 1.2] {
            assert_eq!(whitened.contains(&[v]), (-1.0..=1.0).contains(&v), "{v}");
        }
    }

    #[test]
    fn whitened_band_halves_under_doubled_scale() {
        // Claimed opt 8 doubles the single-edge covariance to Σ = [4], so
        // the whitened band shrinks to [−1/2, 1/2].
        let inst = reduce_instance::<f64>(&single_edge(), 8.0).unwrap();
        assert!((inst.sigma()[0][0] - 4.0).abs() < 1e-12);
        let whitened = rotate_to_identity(&inst, 0, true).unwrap();
        assert!(whitened.contains(&[0.49]));
        assert!(!whitened.contains(&[0.51]));
        assert!(whitened.contains(&[-0.49]));
        assert!(!whitened.contains(&[-0.51]));
        // Standard mass of [−1/2,1/2] equals the 𝒩(0,4) mass of [−1,1].
        let whitened_mass = 2.0 * f64::norm_cdf(0.5) - 1.0;
        let original_mass = band_mass(0.0, 2.0);
        assert!((whitened_mass - original_mass).abs() < 1e-12);
    }

    #[test]
    fn whitening_complement_flag_and_range_check() {
        let inst = reduce_instance(&four_cycle(), 16.0).unwrap();
        let outside = rotate_to_identity(&inst, 3, false).unwrap();
        assert!(!outside.is_convex());
        assert!(matches!(outside.inner(), ConvexSet::Ball { .. }));
        assert!(rotate_to_identity(&inst, 4, true).is_err());
    }

    #[test]
    fn ellipsoid_probability_depends_only_on_whitened_norm() {
        let inst = reduce_instance(&four_cycle(), 16.0).unwrap();
        let chol = linalg::cholesky(inst.sigma()).unwrap();
        let q = inst.ellipsoid_threshold();
        // Two means with the same whitened norm 1.
        let directions = [vec![1.0, 0.0, 0.0], vec![0.0, 0.6, 0.8]];
        let mut rng = seeded(98);
        let n = 40_000;
        let estimates: Vec<f64> = directions
            .iter()
            .map(|u| {
                let mut hits = 0usize;
                for _ in 0..n {
                    let z: Vec<f64> = (0..3).map(|_| f64::std_normal(&mut rng)).collect();
                    let shifted: Vec<f64> = z.iter().zip(u).map(|(a, b)| a + b).collect();
                    let x = linalg::matvec(&chol, &shifted);
                    let white = linalg::matvec(
                        &linalg::lower_triangular_inverse(&chol),
                        &x,
                    );
                    if white.iter().map(|v| v * v).sum::<f64>() <= q {
                        hits += 1;
                    }
                }
                hits as f64 / n as f64
            })
            .collect();
        let se = (estimates[0] * (1.0 - estimates[0]) / n as f64).sqrt();
        let combined = (2.0f64).sqrt() * se;
        assert!(
            (estimates[0] - estimates[1]).abs() < 3.0 * combined,
            "{estimates:?}"
        );
        // Both match the declared ellipsoid probability.
        for est in &estimates {
            assert!((est - inst.cell_probs()[3]).abs() < 5.0 * se, "{estimates:?}");
        }
    }

    #[test]
    fn export_is_rejected_by_the_convex_gate() {
        let inst = reduce_instance::<f64>(&four_cycle(), 16.0).unwrap();
        let spec = inst.to_partition_spec().unwrap();
        assert_eq!(spec.partitions.len(), 4);
        for (weight, cells) in &spec.partitions {
            assert!((weight - 0.25).abs() < 1e-12);
            assert_eq!(cells.len(), 2);
            assert!(cells[0].is_convex());
            assert!(!cells[1].is_convex());
        }
        let text = spec.to_json_string();
        let reread = PartitionSpec::<f64>::from_json_str(&text).unwrap();
        assert_eq!(reread.partitions.len(), 4);
        assert!(matches!(
            reread.try_into_convex(),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn exported_cells_complement_each_other() {
        let inst = reduce_instance(&triangle(), 8.0).unwrap();
        let spec = inst.to_partition_spec().unwrap();
        let mut rng = seeded(99);
        for (_, cells) in &spec.partitions {
            for _ in 0..500 {
                let x: Vec<f64> = (0..2).map(|_| 4.0 * f64::std_normal(&mut rng)).collect();
                assert_ne!(cells[0].contains(&x), cells[1].contains(&x));
            }
        }
    }

    #[test]
    fn edge_list_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("graph.txt");
        let g = four_cycle();
        g.write_edge_list(&path).unwrap();
        let reread = Graph::read_edge_list(&path).unwrap();
        assert_eq!(g, reread);

        let cases = [
            ("1 2 3\n", "expected"),
            ("1 b\n", "not a vertex"),
            ("0 2\n", "numbered from 1"),
        ];
        for (text, needle) in cases {
            std::fs::write(&path, text).unwrap();
            match Graph::read_edge_list(&path) {
                Err(Error::Parse { line, message }) => {
                    assert_eq!(line, 1);
                    assert!(message.contains(needle), "{message}");
                }
                other => panic!("expected parse error, got {other:?}"),
            }
        }

        std::fs::write(&path, "# only comments\n\n").unwrap();
        assert!(matches!(
            Graph::read_edge_list(&path),
            Err(Error::InvalidGraph(_))
        ));

        std::fs::write(&path, "2 2\n").unwrap();
        assert!(matches!(
            Graph::read_edge_list(&path),
            Err(Error::InvalidGraph(_))
        ));

        std::fs::write(&path, "# path with comment\n1 2\n\n2 3\n").unwrap();
        let parsed = Graph::read_edge_list(&path).unwrap();
        assert_eq!(parsed.n(), 3);
        assert_eq!(parsed.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn reduction_rejects_degenerate_input() {
        assert!(reduce_instance(&single_edge(), 0.0).is_err());
        assert!(reduce_instance(&single_edge(), -1.0).is_err());
        let lonely = Graph::new(1, vec![]).unwrap();
        assert!(matches!(
            reduce_instance(&lonely, 4.0),
            Err(Error::InvalidGraph(_))
        ));
    }
}
