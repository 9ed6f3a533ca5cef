//! Discrete nonlocal operators `L⁺`, `L⁻`, `L = L⁺ + L⁻` and equation
//! residuals.
//!
//! For a field `u` on a point set and a point `x_i`,
//!
//! ```text
//! L⁺[u](i) = max_{j≠i} (u_j − u_i) / |x_j − x_i|^α
//! L⁻[u](i) = min_{j≠i} (u_j − u_i) / |x_j − x_i|^α
//! ```
//!
//! with `j` ranging over every point of the set, boundary included. Each
//! evaluation is a full O(N) scan.

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{euclidean, BoundaryData, PointSet};

/// One finite real value per point of a shared [`PointSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    points: Arc<PointSet>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(points: Arc<PointSet>, values: Vec<f64>) -> Result<Self> {
        if values.len() != points.len() {
            return Err(Error::Usage(format!(
                "{} values for {} points",
                values.len(),
                points.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Usage(format!("value at point {i} is not finite")));
        }
        Ok(Self { points, values })
    }

    pub fn constant(points: Arc<PointSet>, c: f64) -> Self {
        let n = points.len();
        Self::new(points, vec![c; n]).expect("constant field is valid")
    }

    /// Sample a function of the coordinates.
    pub fn from_fn(points: Arc<PointSet>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = points.points().map(f).collect();
        Self::new(points, values)
    }

    /// Interior values from `interior`, boundary values copied from `g`.
    pub fn with_boundary(points: Arc<PointSet>, g: &BoundaryData, interior: f64) -> Self {
        let mut values = vec![interior; points.len()];
        for (&i, &v) in points.boundary().iter().zip(g.values()) {
            values[i] = v;
        }
        Self { points, values }
    }

    pub fn point_set(&self) -> &Arc<PointSet> {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max_i |self_i − other_i|`.
    pub fn sup_distance(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn same_points(&self, other: &ScalarField) -> bool {
        Arc::ptr_eq(&self.points, &other.points) || *self.points == *other.points
    }

    /// Pointwise map, keeping the point set.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.points.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Boundary trace in the order of [`PointSet::boundary`].
    pub fn boundary_trace(&self) -> Vec<f64> {
        self.points.boundary().iter().map(|&i| self.values[i]).collect()
    }
}

/// `(max, min)` of the difference quotients at `i` over all `j ≠ i`.
pub(crate) fn quotient_extrema(ps: &PointSet, values: &[f64], i: usize) -> (f64, f64) {
    let xi = ps.point(i);
    let ui = values[i];
    let alpha = ps.alpha();
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for (j, xj) in ps.points().enumerate() {
        if j == i {
            continue;
        }
        let q = (values[j] - ui) / euclidean(xi, xj).powf(alpha);
        hi = hi.max(q);
        lo = lo.min(q);
    }
    (hi, lo)
}

pub fn l_plus(u: &ScalarField, i: usize) -> f64 {
    quotient_extrema(&u.points, &u.values, i).0
}

pub fn l_minus(u: &ScalarField, i: usize) -> f64 {
    quotient_extrema(&u.points, &u.values, i).1
}

pub fn l_full(u: &ScalarField, i: usize) -> f64 {
    let (hi, lo) = quotient_extrema(&u.points, &u.values, i);
    hi + lo
}

/// `L[u](i)` at every point.
pub fn l_full_map(u: &ScalarField) -> Vec<f64> {
    (0..u.len()).into_par_iter().map(|i| l_full(u, i)).collect()
}

/// `L[u](i) − f(u(i))` at an interior point.
pub fn residual(u: &ScalarField, f: &MonotoneSource, i: usize) -> Result<f64> {
    if u.points.is_boundary(i) {
        return Err(Error::Usage(format!("point {i} is a boundary point")));
    }
    Ok(l_full(u, i) - f.eval(u.values[i]))
}

/// `max |residual|` over `region` (0 when empty). Boundary indices in the
/// region are rejected.
pub fn residual_norm(u: &ScalarField, f: &MonotoneSource, region: &[usize]) -> Result<f64> {
    region
        .par_iter()
        .map(|&i| residual(u, f, i).map(f64::abs))
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Residual at every point, `None` on the boundary.
pub fn residual_map(u: &ScalarField, f: &MonotoneSource) -> Vec<Option<f64>> {
    (0..u.len())
        .into_par_iter()
        .map(|i| residual(u, f, i).ok())
        .collect()
}

/// A continuous non-decreasing scalar function `f`.
///
/// Only the validated constructors below produce values, so every instance
/// is monotone by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneSource {
    kind: SourceKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum SourceKind {
    Constant {
        value: f64,
    },
    /// `scale · max(t, 0)^exponent`
    Power {
        scale: f64,
        exponent: f64,
    },
    /// Piecewise linear through the knots, constant beyond the ends.
    Table {
        t: Vec<f64>,
        f: Vec<f64>,
    },
    /// 0 on `t ≤ 0`, linear ramp to `base(eps)` on `(0, eps)`, `base` beyond.
    Ramp {
        base: Box<MonotoneSource>,
        eps: f64,
    },
    /// `base` on `t ≥ 0`, 0 below.
    ZeroExtended {
        base: Box<MonotoneSource>,
    },
}

impl MonotoneSource {
    pub fn constant(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::Config(format!("constant source {value} is not finite")));
        }
        Ok(Self {
            kind: SourceKind::Constant { value },
        })
    }

    pub fn zero() -> Self {
        Self::constant(0.0).unwrap()
    }

    pub fn power(scale: f64, exponent: f64) -> Result<Self> {
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(Error::Config(format!(
                "power source scale must be finite and non-negative, got {scale}"
            )));
        }
        if !(exponent.is_finite() && exponent > 0.0) {
            return Err(Error::Config(format!(
                "power source exponent must be positive, got {exponent}"
            )));
        }
        Ok(Self {
            kind: SourceKind::Power { scale, exponent },
        })
    }

    pub fn table(t: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if t.is_empty() || t.len() != f.len() {
            return Err(Error::Config(format!(
                "table needs matching non-empty columns, got {} and {}",
                t.len(),
                f.len()
            )));
        }
        if t.iter().chain(&f).any(|v| !v.is_finite()) {
            return Err(Error::Config("table entries must be finite".into()));
        }
        if let Some(k) = t.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Config(format!(
                "table abscissae must strictly increase (rows {k} and {})",
                k + 1
            )));
        }
        if let Some(k) = f.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::Domain(format!(
                "table ordinates decrease between rows {k} and {}; only non-decreasing sources are supported",
                k + 1
            )));
        }
        Ok(Self {
            kind: SourceKind::Table { t, f },
        })
    }

    pub(crate) fn ramp(base: MonotoneSource, eps: f64) -> Self {
        Self {
            kind: SourceKind::Ramp {
                base: Box::new(base),
                eps,
            },
        }
    }

    pub(crate) fn zero_extended(base: MonotoneSource) -> Self {
        Self {
            kind: SourceKind::ZeroExtended {
                base: Box::new(base),
            },
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            SourceKind::Constant { value } => *value,
            SourceKind::Power { scale, exponent } => scale * t.max(0.0).powf(*exponent),
            SourceKind::Table { t: ts, f } => {
                let last = ts.len() - 1;
                if t <= ts[0] {
                    return f[0];
                }
                if t >= ts[last] {
                    return f[last];
                }
                let k = ts.partition_point(|&x| x <= t) - 1;
                let w = (t - ts[k]) / (ts[k + 1] - ts[k]);
                f[k] + w * (f[k + 1] - f[k])
            }
            SourceKind::Ramp { base, eps } => {
                if t <= 0.0 {
                    0.0
                } else if t < *eps {
                    t / eps * base.eval(*eps)
                } else {
                    base.eval(t)
                }
            }
            SourceKind::ZeroExtended { base } => {
                if t < 0.0 {
                    0.0
                } else {
                    base.eval(t)
                }
            }
        }
    }

    /// `f ≡ c`, if this source is a plain constant.
    pub fn as_constant(&self) -> Option<f64> {
        match self.kind {
            SourceKind::Constant { value } => Some(value),
            _ => None,
        }
    }

    /// Parse `const:C`, `power:A,P` or `table:PATH`. Table files hold two
    /// comma-separated columns `t,f`; blank lines, `#` comments and a
    /// non-numeric header row are skipped.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Config(format!("source `{spec}`: {msg}"));
        let (kind, arg) = spec
            .split_once(':')
            .ok_or_else(|| bad("expected const:C, power:A,P or table:PATH"))?;
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| bad(&format!("`{s}` is not a number")))
        };
        match kind.trim() {
            "const" => Self::constant(num(arg)?),
            "power" => {
                let (a, p) = arg.split_once(',').ok_or_else(|| bad("expected power:A,P"))?;
                Self::power(num(a)?, num(p)?)
            }
            "table" => Self::read_table(Path::new(arg.trim())),
            other => Err(bad(&format!("unknown source kind `{other}`"))),
        }
    }

    fn read_table(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let (mut t, mut f) = (Vec::new(), Vec::new());
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: Option<Vec<f64>> = cols.iter().map(|c| c.parse().ok()).collect();
            match parsed.as_deref() {
                Some([a, b]) => {
                    t.push(*a);
                    f.push(*b);
                }
                None if t.is_empty() && lineno == 0 => continue,
                _ => {
                    return Err(Error::parse(
                        path,
                        format!("line {}: expected two numeric columns", lineno + 1),
                    ))
                }
            }
        }
        Self::table(t, f)
    }
}
