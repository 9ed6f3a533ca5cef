//! Finite point-set discretizations of the closed domain.
//!
//! A [`PointSet`] is an arbitrary cloud of distinct points split into a
//! boundary part (where Dirichlet data lives) and an interior part (where the
//! equation is imposed). The nonlocal operator only ever needs pairwise
//! distances, so no mesh connectivity is stored.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pairs closer than this are rejected so that `1/|y-x|^α` stays bounded.
pub const MIN_SEPARATION: f64 = 1e-12;

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("alpha must lie in (0, 1], got {alpha}")))
    }
}

#[inline]
pub(crate) fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// `|x - y|^α`.
pub fn alpha_distance(x: &[f64], y: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if x.len() != y.len() {
        return Err(Error::Usage(format!(
            "dimension mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    Ok(euclidean(x, y).powf(alpha))
}

/// Maximum pairwise Euclidean distance of a set of coordinate rows.
pub fn max_pairwise_distance(coords: &[f64], dim: usize) -> f64 {
    let n = coords.len() / dim;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = &coords[i * dim..(i + 1) * dim];
            (i + 1..n)
                .map(|j| euclidean(xi, &coords[j * dim..(j + 1) * dim]))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

fn min_pairwise_distance(coords: &[f64], dim: usize) -> (f64, usize, usize) {
    let n = coords.len() / dim;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = &coords[i * dim..(i + 1) * dim];
            (i + 1..n)
                .map(|j| (euclidean(xi, &coords[j * dim..(j + 1) * dim]), i, j))
                .fold((f64::INFINITY, i, i), |a, b| if b.0 < a.0 { b } else { a })
        })
        .reduce(
            || (f64::INFINITY, 0, 0),
            |a, b| if b.0 < a.0 { b } else { a },
        )
}

/// Discretized closure of the domain with its interior/boundary partition.
///
/// Immutable once built; share it behind an `Arc`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    boundary_idx: Vec<usize>,
    interior_idx: Vec<usize>,
    is_boundary: Vec<bool>,
    alpha: f64,
    diameter: f64,
}

impl PointSet {
    pub fn new(dim: usize, points: &[Vec<f64>], boundary: &[usize], alpha: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Geometry("dimension must be positive".into()));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::Geometry(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::Geometry(format!("point {i} has a non-finite coordinate")));
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(dim, coords, boundary, alpha)
    }

    /// Build from row-major coordinates (`n * dim` values).
    pub fn from_flat(dim: usize, coords: Vec<f64>, boundary: &[usize], alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if dim == 0 || !coords.len().is_multiple_of(dim) {
            return Err(Error::Geometry(format!(
                "{} coordinates do not split into rows of {dim}",
                coords.len()
            )));
        }
        let n = coords.len() / dim;
        if n < 2 {
            return Err(Error::Geometry("need at least two points".into()));
        }
        let mut is_boundary = vec![false; n];
        for &b in boundary {
            if b >= n {
                return Err(Error::Geometry(format!("boundary index {b} out of range (n = {n})")));
            }
            if is_boundary[b] {
                return Err(Error::Geometry(format!("boundary index {b} listed twice")));
            }
            is_boundary[b] = true;
        }
        let boundary_idx: Vec<usize> = (0..n).filter(|&i| is_boundary[i]).collect();
        let interior_idx: Vec<usize> = (0..n).filter(|&i| !is_boundary[i]).collect();
        if boundary_idx.is_empty() {
            return Err(Error::Geometry("boundary is empty".into()));
        }
        if interior_idx.is_empty() {
            return Err(Error::Geometry("no interior".into()));
        }
        let (sep, a, b) = min_pairwise_distance(&coords, dim);
        if sep < MIN_SEPARATION {
            return Err(Error::Geometry(format!(
                "points {a} and {b} are {sep:e} apart (minimum {MIN_SEPARATION:e})"
            )));
        }
        let diameter = max_pairwise_distance(&coords, dim);
        Ok(Self {
            dim,
            coords,
            boundary_idx,
            interior_idx,
            is_boundary,
            alpha,
            diameter,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.is_boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.is_boundary.is_empty()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Cached maximum pairwise distance.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary_idx
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior_idx
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.is_boundary[i]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        euclidean(self.point(i), self.point(j))
    }

    /// `|x_i - x_j|^α` with the set's own exponent.
    pub fn alpha_distance(&self, i: usize, j: usize) -> f64 {
        self.distance(i, j).powf(self.alpha)
    }

    /// Same points and partition with a different exponent.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            alpha,
            ..self.clone()
        })
    }

    /// Index of the point with exactly these coordinates, if present.
    pub fn find(&self, x: &[f64]) -> Option<usize> {
        self.points().position(|p| p == x)
    }
}

/// Uniform tensor-product lattice over an axis-aligned box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub counts: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub alpha: f64,
}

impl GridSpec {
    pub fn unit(counts: &[usize], alpha: f64) -> Self {
        Self {
            counts: counts.to_vec(),
            lower: vec![0.0; counts.len()],
            upper: vec![1.0; counts.len()],
            alpha,
        }
    }

    /// Length of the box diagonal.
    pub fn diagonal(&self) -> f64 {
        euclidean(&self.lower, &self.upper)
    }
}

/// Lattice points in row-major order (last axis varies fastest); every point
/// with some coordinate on a box face is a boundary point.
pub fn build_grid(spec: &GridSpec) -> Result<PointSet> {
    let dim = spec.counts.len();
    if dim == 0 || spec.lower.len() != dim || spec.upper.len() != dim {
        return Err(Error::Config(
            "grid counts, lower and upper bounds must share a positive dimension".into(),
        ));
    }
    if let Some(c) = spec.counts.iter().find(|&&c| c < 3) {
        return Err(Error::Config(format!("no interior: axis count {c} < 3")));
    }
    for (lo, hi) in spec.lower.iter().zip(&spec.upper) {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config(format!("bounds [{lo}, {hi}] are not well ordered")));
        }
    }
    let n: usize = spec.counts.iter().product();
    let mut coords = Vec::with_capacity(n * dim);
    let mut boundary = Vec::new();
    let mut multi = vec![0usize; dim];
    for flat in 0..n {
        let mut rem = flat;
        for axis in (0..dim).rev() {
            multi[axis] = rem % spec.counts[axis];
            rem /= spec.counts[axis];
        }
        let mut on_face = false;
        for (axis, &k) in multi.iter().enumerate() {
            let last = spec.counts[axis] - 1;
            on_face |= k == 0 || k == last;
            let (lo, hi) = (spec.lower[axis], spec.upper[axis]);
            // endpoints are exact so box faces compare equal to the bounds
            let x = if k == last {
                hi
            } else {
                lo + (hi - lo) * k as f64 / last as f64
            };
            coords.push(x);
        }
        if on_face {
            boundary.push(flat);
        }
    }
    PointSet::from_flat(dim, coords, &boundary, spec.alpha)
}

/// Free-function form of [`PointSet::diameter`], recomputed from scratch.
pub fn diameter(ps: &PointSet) -> f64 {
    max_pairwise_distance(ps.coords(), ps.dim())
}

/// Dirichlet data on the boundary points, in the order of
/// [`PointSet::boundary`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    values: Vec<f64>,
    beta: f64,
    seminorm: f64,
}

impl BoundaryData {
    pub fn new(ps: &PointSet, values: Vec<f64>, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= ps.alpha()) {
            return Err(Error::Config(format!(
                "beta must lie in (0, alpha = {}], got {beta}",
                ps.alpha()
            )));
        }
        if values.len() != ps.boundary().len() {
            return Err(Error::Usage(format!(
                "{} boundary values for {} boundary points",
                values.len(),
                ps.boundary().len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Usage("boundary values must be finite".into()));
        }
        let b = ps.boundary();
        let seminorm = (0..b.len())
            .into_par_iter()
            .map(|k| {
                (k + 1..b.len())
                    .map(|l| (values[k] - values[l]).abs() / ps.distance(b[k], b[l]).powf(beta))
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max);
        Ok(Self {
            values,
            beta,
            seminorm,
        })
    }

    /// Boundary data sampled from a function of the coordinates.
    pub fn from_fn(ps: &PointSet, beta: f64, g: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = ps.boundary().iter().map(|&i| g(ps.point(i))).collect();
        Self::new(ps, values, beta)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// β-Hölder seminorm over boundary pairs.
    pub fn seminorm(&self) -> f64 {
        self.seminorm
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Same values measured with another exponent.
    pub fn with_beta(&self, ps: &PointSet, beta: f64) -> Result<Self> {
        Self::new(ps, self.values.clone(), beta)
    }
}

/// On-disk point-set format shared by the `grid`, `solve` and related
/// commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSetFile {
    pub dim: usize,
    pub alpha: f64,
    pub points: Vec<Vec<f64>>,
    pub boundary: Vec<usize>,
    /// Boundary values aligned with `boundary`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<f64>>,
}

impl PointSetFile {
    pub fn from_point_set(ps: &PointSet, g: Option<&BoundaryData>) -> Self {
        Self {
            dim: ps.dim(),
            alpha: ps.alpha(),
            points: ps.points().map(<[f64]>::to_vec).collect(),
            boundary: ps.boundary().to_vec(),
            g: g.map(|g| g.values().to_vec()),
        }
    }

    pub fn point_set(&self) -> Result<PointSet> {
        PointSet::new(self.dim, &self.points, &self.boundary, self.alpha)
    }

    /// Boundary data aligned with `ps.boundary()`. The file lists values in
    /// the order of its own `boundary` array, which need not be sorted.
    pub fn boundary_data(&self, ps: &PointSet, beta: f64) -> Result<BoundaryData> {
        let g = self
            .g
            .as_ref()
            .ok_or_else(|| Error::Usage("point-set file has no \"g\" array".into()))?;
        if g.len() != self.boundary.len() {
            return Err(Error::Usage(format!(
                "\"g\" has {} entries but \"boundary\" has {}",
                g.len(),
                self.boundary.len()
            )));
        }
        let mut by_index = vec![f64::NAN; ps.len()];
        for (&i, &v) in self.boundary.iter().zip(g) {
            by_index[i] = v;
        }
        let values = ps.boundary().iter().map(|&i| by_index[i]).collect();
        BoundaryData::new(ps, values, beta)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("point-set file serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}
