//! Fixed-radius neighbor counting.
//!
//! Two points are ε-close when their Euclidean distance is strictly below ε.
//! All comparisons are made on squared distances against ε², with the same
//! arithmetic in the indexed and the exhaustive paths so that both agree
//! exactly.

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};

/// An `n × d` sample stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    dim: usize,
    coords: Vec<f64>,
}

impl Sample {
    /// Builds a sample from row-major coordinates.
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("sample dimension must be at least 1"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "{} coordinates do not form rows of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite coordinate in row {} (column {})",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Sample { dim, coords })
    }

    pub fn empty(dim: usize) -> Self {
        Sample {
            dim: dim.max(1),
            coords: Vec::new(),
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Ok(Sample::empty(1));
        };
        let dim = first.as_ref().len();
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::invalid(format!(
                    "row {i} has {} coordinates, expected {dim}",
                    row.len()
                )));
            }
            coords.extend_from_slice(row);
        }
        Sample::new(dim, coords)
    }

    /// One-dimensional sample.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        Sample::new(1, values.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    /// Multiplies every coordinate by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Sample {
            dim: self.dim,
            coords: self.coords.iter().map(|x| x * c).collect(),
        }
    }

    /// Reorders points by `perm` (a permutation of `0..len`).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(self.coords.len());
        for &i in perm {
            coords.extend_from_slice(self.point(i));
        }
        Sample {
            dim: self.dim,
            coords,
        }
    }

    /// Dimension shared with `other`. An empty sample is compatible with any
    /// dimension.
    pub fn common_dim(&self, other: &Sample) -> Result<usize> {
        if self.dim == other.dim || other.is_empty() {
            Ok(self.dim)
        } else if self.is_empty() {
            Ok(other.dim)
        } else {
            Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            })
        }
    }
}

#[inline]
pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let t = x - y;
            t * t
        })
        .sum()
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "epsilon must be positive and finite, got {eps}"
        )))
    }
}

/// Volume of the unit ball in `R^d`, `2π^{d/2} / (d Γ(d/2))`.
///
/// Uses the recursion `V_d = (2π/d) V_{d-2}` from `V_0 = 1`, `V_1 = 2`, which
/// evaluates the Gamma function exactly at integer and half-integer points.
pub fn unit_ball_volume(d: usize) -> f64 {
    let mut v = if d.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut m = if d.is_multiple_of(2) { 2 } else { 3 };
    while m <= d {
        v *= 2.0 * std::f64::consts::PI / m as f64;
        m += 2;
    }
    v
}

/// Volume `b_ε(d) = ε^d b_1(d)` of the ε-ball in `R^d`.
pub fn ball_volume(d: usize, eps: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    check_eps(eps)?;
    Ok(eps.powi(d as i32) * unit_ball_volume(d))
}

/// Per-point counts of other same-sample points within ε.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WithinCounts {
    pub per_point: Vec<u64>,
    /// Number of unordered ε-close pairs.
    pub pair_total: u64,
}

/// Per-point counts of points of the other sample within ε.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossCounts {
    pub per_point: Vec<u64>,
    /// Number of ε-close ordered (this, other) pairs.
    pub total: u64,
}

/// Neighbor counts of one sample: within itself and against another sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborCounts {
    pub within: WithinCounts,
    pub cross: CrossCounts,
}

impl WithinCounts {
    fn from_per_point(per_point: Vec<u64>) -> Self {
        let twice: u64 = per_point.iter().sum();
        debug_assert_eq!(twice % 2, 0);
        WithinCounts {
            per_point,
            pair_total: twice / 2,
        }
    }
}

impl CrossCounts {
    fn from_per_point(per_point: Vec<u64>) -> Self {
        let total = per_point.iter().sum();
        CrossCounts { per_point, total }
    }
}

/// Immutable ε-radius counting index over one sample.
///
/// One-dimensional samples are kept sorted and answered by binary search;
/// higher dimensions use a uniform grid of cell side ε, scanning the `3^d`
/// cells around the query (or every occupied cell when that is fewer).
#[derive(Debug, Clone)]
pub struct BallIndex {
    dim: usize,
    eps: f64,
    eps2: f64,
    len: usize,
    layout: Layout,
}

#[derive(Debug, Clone)]
enum Layout {
    Empty,
    Sorted(Vec<f64>),
    Grid(Grid),
}

#[derive(Debug, Clone)]
struct Grid {
    inv_side: f64,
    origin: Vec<f64>,
    // Points reordered so that each cell is a contiguous run.
    coords: Vec<f64>,
    cells: FxHashMap<Box<[i64]>, (usize, usize)>,
    // Flattened neighbor offsets, `dim` entries each; `None` scans all cells.
    offsets: Option<Vec<i64>>,
}

/// Builds a counting index for radius `eps`.
pub fn build_index(s: &Sample, eps: f64) -> Result<BallIndex> {
    check_eps(eps)?;
    let dim = s.dim();
    let layout = if s.is_empty() {
        Layout::Empty
    } else if dim == 1 {
        let mut xs = s.coords().to_vec();
        xs.sort_by(f64::total_cmp);
        Layout::Sorted(xs)
    } else {
        Layout::Grid(Grid::build(s, eps))
    };
    Ok(BallIndex {
        dim,
        eps,
        eps2: eps * eps,
        len: s.len(),
        layout,
    })
}

impl Grid {
    fn build(s: &Sample, eps: f64) -> Self {
        let dim = s.dim();
        let mut origin = vec![f64::INFINITY; dim];
        for p in s.points() {
            for (o, &x) in origin.iter_mut().zip(p) {
                *o = o.min(x);
            }
        }
        // Inflated side so that rounding in the key computation never puts
        // two ε-close points more than one cell apart.
        let inv_side = 1.0 / (eps * (1.0 + 1e-9));

        let keys: Vec<Box<[i64]>> = s
            .points()
            .map(|p| cell_key(p, &origin, inv_side).collect())
            .collect();
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&a, &b| keys[a].cmp(&keys[b]));

        let mut coords = Vec::with_capacity(s.coords().len());
        let mut cells = FxHashMap::default();
        let mut start = 0;
        for (pos, &i) in order.iter().enumerate() {
            coords.extend_from_slice(s.point(i));
            let last = pos + 1 == order.len() || keys[order[pos + 1]] != keys[i];
            if last {
                cells.insert(keys[i].clone(), (start, pos + 1));
                start = pos + 1;
            }
        }

        let neighborhood = 3usize.checked_pow(dim as u32);
        let offsets = match neighborhood {
            Some(m) if m <= cells.len() => {
                let mut flat = Vec::with_capacity(m * dim);
                for code in 0..m {
                    let mut c = code;
                    for _ in 0..dim {
                        flat.push((c % 3) as i64 - 1);
                        c /= 3;
                    }
                }
                Some(flat)
            }
            _ => None,
        };

        Grid {
            inv_side,
            origin,
            coords,
            cells,
            offsets,
        }
    }

    fn count(&self, q: &[f64], eps2: f64) -> u64 {
        let dim = q.len();
        let key: Vec<i64> = cell_key(q, &self.origin, self.inv_side).collect();
        let scan = |&(a, b): &(usize, usize)| -> u64 {
            self.coords[a * dim..b * dim]
                .chunks_exact(dim)
                .filter(|p| dist2(q, p) < eps2)
                .count() as u64
        };
        match &self.offsets {
            Some(offsets) => {
                let mut probe = vec![0i64; dim];
                offsets
                    .chunks_exact(dim)
                    .map(|off| {
                        for ((p, k), o) in probe.iter_mut().zip(&key).zip(off) {
                            *p = k.saturating_add(*o);
                        }
                        self.cells.get(probe.as_slice()).map_or(0, scan)
                    })
                    .sum()
            }
            None => self
                .cells
                .iter()
                .filter(|(cell, _)| cell.iter().zip(&key).all(|(c, k)| c.abs_diff(*k) <= 1))
                .map(|(_, range)| scan(range))
                .sum(),
        }
    }
}

fn cell_key<'a>(p: &'a [f64], origin: &'a [f64], inv_side: f64) -> impl Iterator<Item = i64> + 'a {
    p.iter()
        .zip(origin)
        .map(move |(x, o)| ((x - o) * inv_side).floor() as i64)
}

impl BallIndex {
    pub fn epsilon(&self) -> f64 {
        self.eps
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of indexed points at distance `< ε` from `q`.
    pub fn count(&self, q: &[f64]) -> u64 {
        debug_assert_eq!(q.len(), self.dim);
        match &self.layout {
            Layout::Empty => 0,
            Layout::Sorted(xs) => {
                let x = q[0];
                let eps2 = self.eps2;
                let lo = xs.partition_point(|&v| v < x && (x - v) * (x - v) >= eps2);
                let hi = xs.partition_point(|&v| v < x || (x - v) * (x - v) < eps2);
                (hi - lo) as u64
            }
            Layout::Grid(grid) => grid.count(q, self.eps2),
        }
    }
}

#[cfg(feature = "parallel")]
fn per_point<F>(s: &Sample, f: F) -> Vec<u64>
where
    F: Fn(&[f64]) -> u64 + Sync + Send,
{
    use rayon::prelude::*;
    if s.len() >= 4096 {
        s.coords().par_chunks_exact(s.dim()).map(f).collect()
    } else {
        s.points().map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
fn per_point<F>(s: &Sample, f: F) -> Vec<u64>
where
    F: Fn(&[f64]) -> u64,
{
    s.points().map(f).collect()
}

/// `within(i) = #{j ≠ i : |x_i − x_j| < ε}`.
pub fn count_within(s: &Sample, eps: f64) -> Result<WithinCounts> {
    let index = build_index(s, eps)?;
    Ok(count_within_indexed(s, &index))
}

/// Within-sample counts against a prebuilt index of the same sample.
pub fn count_within_indexed(s: &Sample, index: &BallIndex) -> WithinCounts {
    // Each point finds itself at distance 0.
    WithinCounts::from_per_point(per_point(s, |p| index.count(p) - 1))
}

/// `cross(i) = #{j : |a_i − b_j| < ε}`.
pub fn count_cross(a: &Sample, b: &Sample, eps: f64) -> Result<CrossCounts> {
    a.common_dim(b)?;
    let index = build_index(b, eps)?;
    Ok(count_cross_indexed(a, &index))
}

/// Counts of `a`'s points against a prebuilt index of the other sample.
pub fn count_cross_indexed(a: &Sample, other: &BallIndex) -> CrossCounts {
    CrossCounts::from_per_point(per_point(a, |p| other.count(p)))
}

/// Within counts of `a` and cross counts of `a` against `b`.
pub fn neighbor_counts(a: &Sample, b: &Sample, eps: f64) -> Result<NeighborCounts> {
    Ok(NeighborCounts {
        within: count_within(a, eps)?,
        cross: count_cross(a, b, eps)?,
    })
}

/// Exhaustive `O(n²)` within-sample counts; the reference for the index.
pub fn count_within_exhaustive(s: &Sample, eps: f64) -> Result<WithinCounts> {
    check_eps(eps)?;
    let eps2 = eps * eps;
    let n = s.len();
    let mut per_point = vec![0u64; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dist2(s.point(i), s.point(j)) < eps2 {
                per_point[i] += 1;
                per_point[j] += 1;
            }
        }
    }
    Ok(WithinCounts::from_per_point(per_point))
}

/// Exhaustive `O(n m)` cross counts.
pub fn count_cross_exhaustive(a: &Sample, b: &Sample, eps: f64) -> Result<CrossCounts> {
    check_eps(eps)?;
    a.common_dim(b)?;
    let eps2 = eps * eps;
    let per_point = a
        .points()
        .map(|p| b.points().filter(|q| dist2(p, q) < eps2).count() as u64)
        .collect();
    Ok(CrossCounts::from_per_point(per_point))
}
