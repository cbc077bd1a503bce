//! Convex set descriptors and partitions of ℝᵈ.
//!
//! Cells are described by closed membership predicates built from a few
//! convex primitives. A partition is an ordered list of cells with
//! first-match tie-breaking, validated by Monte Carlo coverage under the
//! standard Gaussian. The ReLU partition has uncountably many cells, so it
//! is a separate variant whose cells are constructed per located point.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::scalar::Real;

/// Number of standard-Gaussian test points used to validate coverage.
const VALIDATION_POINTS: usize = 10_000;
/// Fixed stream for the validation points, so validation is deterministic.
const VALIDATION_SEED: u64 = 0x7061_7274;

/// A convex subset of ℝᵈ with a deterministic membership predicate.
///
/// Every constructor preserves convexity: halfspaces, axis boxes (possibly
/// unbounded or degenerate), balls, finite intersections, preimages under
/// linear maps, and the whole space.
#[derive(Clone, Debug, PartialEq)]
pub enum ConvexSet<F> {
    /// `{x : w·x ≤ c}`.
    Halfspace { w: Vec<F>, c: F },
    /// `{x : lo ≤ x ≤ hi}` coordinatewise; infinite bounds leave a side
    /// open, and `lo == hi` pins a coordinate.
    Box { lo: Vec<F>, hi: Vec<F> },
    /// `{x : ‖x − center‖₂ ≤ radius}`.
    Ball { center: Vec<F>, radius: F },
    /// Intersection of finitely many sets of equal dimension.
    Intersection(Vec<ConvexSet<F>>),
    /// `{x : M·x ∈ inner}`, the preimage of a convex set under a linear map.
    AffineImage {
        matrix: Vec<Vec<F>>,
        inner: Box<ConvexSet<F>>,
    },
    /// All of ℝᵈ.
    WholeSpace { dim: usize },
}

impl<F: Real> ConvexSet<F> {
    pub fn halfspace(w: Vec<F>, c: F) -> Result<Self> {
        let set = Self::Halfspace { w, c };
        set.validate()?;
        Ok(set)
    }

    pub fn axis_box(lo: Vec<F>, hi: Vec<F>) -> Result<Self> {
        let set = Self::Box { lo, hi };
        set.validate()?;
        Ok(set)
    }

    pub fn ball(center: Vec<F>, radius: F) -> Result<Self> {
        let set = Self::Ball { center, radius };
        set.validate()?;
        Ok(set)
    }

    pub fn intersection(sets: Vec<ConvexSet<F>>) -> Result<Self> {
        let set = Self::Intersection(sets);
        set.validate()?;
        Ok(set)
    }

    pub fn affine_image(matrix: Vec<Vec<F>>, inner: ConvexSet<F>) -> Result<Self> {
        let set = Self::AffineImage {
            matrix,
            inner: Box::new(inner),
        };
        set.validate()?;
        Ok(set)
    }

    pub fn whole_space(dim: usize) -> Result<Self> {
        let set = Self::WholeSpace { dim };
        set.validate()?;
        Ok(set)
    }

    /// Checks structural well-formedness and returns the ambient dimension.
    pub fn validate(&self) -> Result<usize> {
        match self {
            Self::Halfspace { w, c } => {
                if w.is_empty() || w.iter().any(|v| !v.is_finite()) || !c.is_finite() {
                    return Err(Error::invalid("halfspace needs a finite normal and offset"));
                }
                if w.iter().all(|v| *v == F::zero()) {
                    return Err(Error::invalid("halfspace normal must be nonzero"));
                }
                Ok(w.len())
            }
            Self::Box { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() {
                    return Err(Error::invalid("box bounds must share a positive length"));
                }
                for (l, h) in lo.iter().zip(hi) {
                    if l.is_nan() || h.is_nan() || *l == F::infinity() || *h == F::neg_infinity() {
                        return Err(Error::invalid("box bounds must be ordered, not NaN"));
                    }
                    if l > h {
                        return Err(Error::invalid(format!("box bound {l} exceeds {h}")));
                    }
                }
                Ok(lo.len())
            }
            Self::Ball { center, radius } => {
                if center.is_empty() || center.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("ball center must be finite and nonempty"));
                }
                if !(*radius > F::zero()) || !radius.is_finite() {
                    return Err(Error::invalid("ball radius must be positive and finite"));
                }
                Ok(center.len())
            }
            Self::Intersection(sets) => {
                let Some(first) = sets.first() else {
                    return Err(Error::invalid("intersection needs at least one set"));
                };
                let dim = first.validate()?;
                for set in &sets[1..] {
                    if set.validate()? != dim {
                        return Err(Error::invalid("intersection members disagree on dimension"));
                    }
                }
                Ok(dim)
            }
            Self::AffineImage { matrix, inner } => {
                let rows = matrix.len();
                let Some(cols) = matrix.first().map(Vec::len) else {
                    return Err(Error::invalid("affine image needs a nonempty matrix"));
                };
                if cols == 0
                    || matrix.iter().any(|r| r.len() != cols)
                    || matrix.iter().flatten().any(|v| !v.is_finite())
                {
                    return Err(Error::invalid("affine image matrix must be finite rectangular"));
                }
                if inner.validate()? != rows {
                    return Err(Error::invalid(
                        "affine image inner dimension must match the matrix row count",
                    ));
                }
                Ok(cols)
            }
            Self::WholeSpace { dim } => {
                if *dim == 0 {
                    return Err(Error::invalid("whole space needs dimension at least 1"));
                }
                Ok(*dim)
            }
        }
    }

    /// Ambient dimension (assumes a validated set).
    pub fn dim(&self) -> usize {
        match self {
            Self::Halfspace { w, .. } => w.len(),
            Self::Box { lo, .. } => lo.len(),
            Self::Ball { center, .. } => center.len(),
            Self::Intersection(sets) => sets[0].dim(),
            Self::AffineImage { matrix, .. } => matrix[0].len(),
            Self::WholeSpace { dim } => *dim,
        }
    }

    /// Deterministic membership test.
    pub fn contains(&self, x: &[F]) -> bool {
        debug_assert_eq!(x.len(), self.dim(), "point dimension mismatch");
        match self {
            Self::Halfspace { w, c } => {
                let dot: F = w.iter().zip(x).map(|(&a, &b)| a * b).sum();
                dot <= *c
            }
            Self::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .zip(x)
                .all(|((l, h), v)| *l <= *v && *v <= *h),
            Self::Ball { center, radius } => {
                let sq: F = center
                    .iter()
                    .zip(x)
                    .map(|(&c, &v)| (v - c) * (v - c))
                    .sum();
                sq <= *radius * *radius
            }
            Self::Intersection(sets) => sets.iter().all(|s| s.contains(x)),
            Self::AffineImage { matrix, inner } => {
                let image: Vec<F> = matrix
                    .iter()
                    .map(|row| row.iter().zip(x).map(|(&a, &b)| a * b).sum())
                    .collect();
                inner.contains(&image)
            }
            Self::WholeSpace { .. } => true,
        }
    }
}

/// A cell that is either a convex set or the complement of one.
///
/// Complements arise in hardness constructions; the Gaussian fitter only
/// accepts convex cells, so [`Region::into_convex`] is the checked gate.
#[derive(Clone, Debug, PartialEq)]
pub enum Region<F> {
    Convex(ConvexSet<F>),
    Complement(ConvexSet<F>),
}

impl<F: Real> Region<F> {
    pub fn validate(&self) -> Result<usize> {
        self.inner().validate()
    }

    pub fn dim(&self) -> usize {
        self.inner().dim()
    }

    pub fn contains(&self, x: &[F]) -> bool {
        match self {
            Self::Convex(set) => set.contains(x),
            Self::Complement(set) => !set.contains(x),
        }
    }

    pub fn is_convex(&self) -> bool {
        matches!(self, Self::Convex(_))
    }

    pub fn inner(&self) -> &ConvexSet<F> {
        match self {
            Self::Convex(set) | Self::Complement(set) => set,
        }
    }

    /// The convex payload, or an error for a complement-flagged cell.
    pub fn into_convex(self) -> Result<ConvexSet<F>> {
        match self {
            Self::Convex(set) => Ok(set),
            Self::Complement(_) => Err(Error::invalid(
                "cell is a complement of a convex set, which is not convex",
            )),
        }
    }
}

/// Ordered list of convex cells covering ℝᵈ, with first-match lookup.
///
/// Construction draws 10⁴ standard-Gaussian test points from a fixed stream
/// and fails if any point is uncovered; overlaps are resolved by cell order.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPartition<F> {
    cells: Vec<ConvexSet<F>>,
    dim: usize,
}

impl<F: Real> ConvexPartition<F> {
    pub fn new(cells: Vec<ConvexSet<F>>) -> Result<Self> {
        let Some(first) = cells.first() else {
            return Err(Error::partition("partition needs at least one cell"));
        };
        let dim = first.validate()?;
        for cell in &cells[1..] {
            if cell.validate()? != dim {
                return Err(Error::partition("cells disagree on dimension"));
            }
        }
        let partition = Self { cells, dim };
        let mut rng = seeded(VALIDATION_SEED);
        let mut x = vec![F::zero(); dim];
        for _ in 0..VALIDATION_POINTS {
            for v in &mut x {
                *v = F::std_normal(&mut rng);
            }
            if partition.locate(&x).is_none() {
                return Err(Error::partition(format!(
                    "uncovered test point {x:?} among {VALIDATION_POINTS} Gaussian draws"
                )));
            }
        }
        Ok(partition)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> &[ConvexSet<F>] {
        &self.cells
    }

    /// Index of the first cell containing `x`, if any.
    pub fn locate(&self, x: &[F]) -> Option<usize> {
        self.cells.iter().position(|cell| cell.contains(x))
    }
}

/// A partition usable by the coarse Gaussian sampler: either a finite list
/// of convex cells, or the partition induced by the coordinatewise ReLU map
/// whose cells are preimages of single outputs.
#[derive(Clone, Debug, PartialEq)]
pub enum GaussianPartition<F> {
    Finite(ConvexPartition<F>),
    Relu { dim: usize },
}

impl<F: Real> GaussianPartition<F> {
    pub fn dim(&self) -> usize {
        match self {
            Self::Finite(p) => p.dim(),
            Self::Relu { dim } => *dim,
        }
    }

    /// The cell containing `x`: an indexed cell for finite partitions, or
    /// the ReLU preimage box (positive coordinates pinned, the rest capped
    /// at zero) constructed for this point.
    pub fn locate_cell(&self, x: &[F]) -> Option<ConvexSet<F>> {
        match self {
            Self::Finite(p) => p.locate(x).map(|idx| p.cells()[idx].clone()),
            Self::Relu { dim } => {
                debug_assert_eq!(x.len(), *dim, "point dimension mismatch");
                let mut lo = Vec::with_capacity(*dim);
                let mut hi = Vec::with_capacity(*dim);
                for &v in x {
                    if v > F::zero() {
                        lo.push(v);
                        hi.push(v);
                    } else {
                        lo.push(F::neg_infinity());
                        hi.push(F::zero());
                    }
                }
                Some(ConvexSet::Box { lo, hi })
            }
        }
    }
}

/// Mixture of partitions of a common ℝᵈ with sampling weights.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPartitionDistribution<F> {
    partitions: Vec<GaussianPartition<F>>,
    weights: Vec<F>,
}

impl<F: Real> ConvexPartitionDistribution<F> {
    pub fn new(partitions: Vec<GaussianPartition<F>>, weights: Vec<F>) -> Result<Self> {
        let Some(first) = partitions.first() else {
            return Err(Error::invalid("need at least one partition"));
        };
        let dim = first.dim();
        if partitions.iter().any(|p| p.dim() != dim) {
            return Err(Error::invalid("partitions disagree on dimension"));
        }
        if partitions.len() != weights.len() {
            return Err(Error::invalid("one weight per partition required"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < F::zero()) {
            return Err(Error::invalid("weights must be finite and nonnegative"));
        }
        let total: F = weights.iter().copied().sum();
        if (total - F::one()).abs() > F::mass_tolerance(weights.len()) {
            return Err(Error::invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(Self {
            partitions,
            weights,
        })
    }

    pub fn pure(partition: GaussianPartition<F>) -> Self {
        Self {
            weights: vec![F::one()],
            partitions: vec![partition],
        }
    }

    pub fn dim(&self) -> usize {
        self.partitions[0].dim()
    }

    pub fn partitions(&self) -> &[GaussianPartition<F>] {
        &self.partitions
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &GaussianPartition<F> {
        let u = F::unit_uniform(rng);
        let mut acc = F::zero();
        for (partition, &w) in self.partitions.iter().zip(&self.weights) {
            acc += w;
            if u < acc {
                return partition;
            }
        }
        self.partitions.last().expect("nonempty by construction")
    }
}

/// Voronoi partition of the sites: cell `i` is the set of points at least
/// as close to site `i` as to every other site, written as an intersection
/// of bisector halfspaces. Shared faces go to the earlier site.
pub fn voronoi_partition<F: Real>(sites: &[Vec<F>]) -> Result<ConvexPartition<F>> {
    let Some(first) = sites.first() else {
        return Err(Error::invalid("need at least one site"));
    };
    let dim = first.len();
    if dim == 0 || sites.iter().any(|s| s.len() != dim) {
        return Err(Error::invalid("sites must share a positive dimension"));
    }
    if sites.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("sites must be finite"));
    }
    let norm_sq = |s: &[F]| -> F { s.iter().map(|&v| v * v).sum() };
    let mut cells = Vec::with_capacity(sites.len());
    for (i, si) in sites.iter().enumerate() {
        let mut halves = Vec::new();
        for (j, sj) in sites.iter().enumerate() {
            if i == j || si == sj {
                continue;
            }
            let w: Vec<F> = sj
                .iter()
                .zip(si)
                .map(|(&a, &b)| F::of(2.0) * (a - b))
                .collect();
            let c = norm_sq(sj) - norm_sq(si);
            halves.push(ConvexSet::Halfspace { w, c });
        }
        if halves.is_empty() {
            cells.push(ConvexSet::WholeSpace { dim });
        } else {
            cells.push(ConvexSet::Intersection(halves));
        }
    }
    ConvexPartition::new(cells)
}

/// Grid of axis-aligned boxes from strictly increasing breakpoints per
/// dimension; outer cells are unbounded. Cells are enumerated row-major.
pub fn axis_box_partition<F: Real>(breaks: &[Vec<F>]) -> Result<ConvexPartition<F>> {
    if breaks.is_empty() {
        return Err(Error::invalid("need breakpoints for at least one dimension"));
    }
    for axis in breaks {
        if axis.iter().any(|b| !b.is_finite()) {
            return Err(Error::invalid("breakpoints must be finite"));
        }
        if axis.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("breakpoints must be strictly increasing"));
        }
    }
    let dim = breaks.len();
    let intervals: Vec<Vec<(F, F)>> = breaks
        .iter()
        .map(|axis| {
            let mut edges = vec![F::neg_infinity()];
            edges.extend_from_slice(axis);
            edges.push(F::infinity());
            edges.windows(2).map(|w| (w[0], w[1])).collect()
        })
        .collect();
    let mut cells = Vec::new();
    let mut index = vec![0usize; dim];
    loop {
        let lo: Vec<F> = (0..dim).map(|a| intervals[a][index[a]].0).collect();
        let hi: Vec<F> = (0..dim).map(|a| intervals[a][index[a]].1).collect();
        cells.push(ConvexSet::Box { lo, hi });
        let mut axis = dim;
        loop {
            if axis == 0 {
                return ConvexPartition::new(cells);
            }
            axis -= 1;
            index[axis] += 1;
            if index[axis] < intervals[axis].len() {
                break;
            }
            index[axis] = 0;
        }
    }
}

/// Two half-lines split at a threshold, the 1-D two-cell partition.
pub fn halfline_partition<F: Real>(threshold: F) -> Result<ConvexPartition<F>> {
    if !threshold.is_finite() {
        return Err(Error::invalid("threshold must be finite"));
    }
    axis_box_partition(&[vec![threshold]])
}

/// The partition induced by the coordinatewise ReLU map on ℝᵈ.
pub fn relu_partition<F: Real>(dim: usize) -> Result<GaussianPartition<F>> {
    if dim == 0 {
        return Err(Error::invalid("need dimension at least 1"));
    }
    Ok(GaussianPartition::Relu { dim })
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum SetJson {
    Halfspace {
        w: Vec<f64>,
        c: f64,
    },
    Box {
        lo: Vec<Option<f64>>,
        hi: Vec<Option<f64>>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Intersection {
        sets: Vec<SetJson>,
    },
    AffineImage {
        matrix: Vec<Vec<f64>>,
        inner: Box<SetJson>,
    },
    WholeSpace {
        dim: usize,
    },
    Complement {
        inner: Box<SetJson>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartitionEntryJson {
    weight: f64,
    cells: Vec<SetJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartitionDistJson {
    d: usize,
    partitions: Vec<PartitionEntryJson>,
}

fn set_to_json<F: Real>(set: &ConvexSet<F>) -> SetJson {
    match set {
        ConvexSet::Halfspace { w, c } => SetJson::Halfspace {
            w: w.iter().map(|v| v.as_f64()).collect(),
            c: c.as_f64(),
        },
        ConvexSet::Box { lo, hi } => SetJson::Box {
            lo: lo
                .iter()
                .map(|v| if v.is_finite() { Some(v.as_f64()) } else { None })
                .collect(),
            hi: hi
                .iter()
                .map(|v| if v.is_finite() { Some(v.as_f64()) } else { None })
                .collect(),
        },
        ConvexSet::Ball { center, radius } => SetJson::Ball {
            center: center.iter().map(|v| v.as_f64()).collect(),
            radius: radius.as_f64(),
        },
        ConvexSet::Intersection(sets) => SetJson::Intersection {
            sets: sets.iter().map(set_to_json).collect(),
        },
        ConvexSet::AffineImage { matrix, inner } => SetJson::AffineImage {
            matrix: matrix
                .iter()
                .map(|row| row.iter().map(|v| v.as_f64()).collect())
                .collect(),
            inner: Box::new(set_to_json(inner)),
        },
        ConvexSet::WholeSpace { dim } => SetJson::WholeSpace { dim: *dim },
    }
}

fn region_to_json<F: Real>(region: &Region<F>) -> SetJson {
    match region {
        Region::Convex(set) => set_to_json(set),
        Region::Complement(set) => SetJson::Complement {
            inner: Box::new(set_to_json(set)),
        },
    }
}

fn set_from_json<F: Real>(doc: &SetJson) -> Result<ConvexSet<F>> {
    let set = match doc {
        SetJson::Halfspace { w, c } => ConvexSet::Halfspace {
            w: w.iter().map(|&v| F::of(v)).collect(),
            c: F::of(*c),
        },
        SetJson::Box { lo, hi } => ConvexSet::Box {
            lo: lo
                .iter()
                .map(|v| v.map(F::of).unwrap_or_else(F::neg_infinity))
                .collect(),
            hi: hi
                .iter()
                .map(|v| v.map(F::of).unwrap_or_else(F::infinity))
                .collect(),
        },
        SetJson::Ball { center, radius } => ConvexSet::Ball {
            center: center.iter().map(|&v| F::of(v)).collect(),
            radius: F::of(*radius),
        },
        SetJson::Intersection { sets } => {
            ConvexSet::Intersection(sets.iter().map(set_from_json).collect::<Result<_>>()?)
        }
        SetJson::AffineImage { matrix, inner } => ConvexSet::AffineImage {
            matrix: matrix
                .iter()
                .map(|row| row.iter().map(|&v| F::of(v)).collect())
                .collect(),
            inner: Box::new(set_from_json(inner)?),
        },
        SetJson::WholeSpace { dim } => ConvexSet::WholeSpace { dim: *dim },
        SetJson::Complement { .. } => {
            return Err(Error::invalid("complement cell in a convex-only position"))
        }
    };
    set.validate()?;
    Ok(set)
}

fn region_from_json<F: Real>(doc: &SetJson) -> Result<Region<F>> {
    match doc {
        SetJson::Complement { inner } => {
            if matches!(**inner, SetJson::Complement { .. }) {
                return Err(Error::invalid("nested complements are not supported"));
            }
            Ok(Region::Complement(set_from_json(inner)?))
        }
        other => Ok(Region::Convex(set_from_json(other)?)),
    }
}

/// Raw parsed form of a partition-distribution JSON document: weighted
/// lists of cells that may carry complement flags.
///
/// This is the interchange layer; [`PartitionSpec::try_into_convex`] is the
/// checked conversion into the sampler-ready distribution, and it rejects
/// any complement-flagged cell.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionSpec<F> {
    pub d: usize,
    pub partitions: Vec<(F, Vec<Region<F>>)>,
}

impl<F: Real> PartitionSpec<F> {
    pub fn to_json_string(&self) -> String {
        let doc = PartitionDistJson {
            d: self.d,
            partitions: self
                .partitions
                .iter()
                .map(|(weight, cells)| PartitionEntryJson {
                    weight: weight.as_f64(),
                    cells: cells.iter().map(region_to_json).collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("serializable document")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: PartitionDistJson = serde_json::from_str(text)?;
        let mut partitions = Vec::with_capacity(doc.partitions.len());
        for entry in &doc.partitions {
            let cells: Vec<Region<F>> = entry
                .cells
                .iter()
                .map(region_from_json)
                .collect::<Result<_>>()?;
            for cell in &cells {
                if cell.validate()? != doc.d {
                    return Err(Error::invalid(format!(
                        "cell dimension {} does not match document dimension {}",
                        cell.dim(),
                        doc.d
                    )));
                }
            }
            partitions.push((F::of(entry.weight), cells));
        }
        Ok(Self {
            d: doc.d,
            partitions,
        })
    }

    pub fn write_json(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }

    pub fn read_json(path: &std::path::Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Converts into a sampler-ready distribution over finite convex
    /// partitions; complement-flagged cells are rejected and each partition
    /// must pass Gaussian coverage validation.
    pub fn try_into_convex(self) -> Result<ConvexPartitionDistribution<F>> {
        let mut partitions = Vec::with_capacity(self.partitions.len());
        let mut weights = Vec::with_capacity(self.partitions.len());
        for (weight, cells) in self.partitions {
            let convex: Vec<ConvexSet<F>> = cells
                .into_iter()
                .map(Region::into_convex)
                .collect::<Result<_>>()?;
            partitions.push(GaussianPartition::Finite(ConvexPartition::new(convex)?));
            weights.push(weight);
        }
        ConvexPartitionDistribution::new(partitions, weights)
    }
}

impl<F: Real> ConvexPartitionDistribution<F> {
    /// The JSON-facing form; errors on a ReLU partition, which has no
    /// finite cell list.
    pub fn to_spec(&self) -> Result<PartitionSpec<F>> {
        let mut partitions = Vec::with_capacity(self.partitions.len());
        for (partition, &weight) in self.partitions.iter().zip(&self.weights) {
            match partition {
                GaussianPartition::Finite(p) => partitions.push((
                    weight,
                    p.cells().iter().cloned().map(Region::Convex).collect(),
                )),
                GaussianPartition::Relu { .. } => {
                    return Err(Error::invalid("ReLU partitions have no finite JSON form"))
                }
            }
        }
        Ok(PartitionSpec {
            d: self.dim(),
            partitions,
        })
    }
}
