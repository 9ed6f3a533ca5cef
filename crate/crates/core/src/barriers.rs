//! Cone barriers `ψ_{β,x₀}(x) = |x − x₀|^β`, their operator bounds, and the
//! boundary envelopes built from them.
//!
//! For `0 < β < α < 1` the supremum of `Ψ(r) = (r^β − 1)/(r − 1)^α` over
//! `r > 1` is attained at the unique root `r★ > r₀ = (1 − β)/(α − β)` of
//! `p(r) = (β − α) r^β − β r^{β−1} + α`, and
//!
//! ```text
//! L[ψ_{β,x₀}](x) ≤ |x − x₀|^{β−α} (Ψ(r★) − 1) < 0.
//! ```
//!
//! For `β = α` the bound is `−1 + Ψ(diam/|x − x₀|)` instead.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{euclidean, BoundaryData, PointSet};
use crate::operator::{MonotoneSource, ScalarField};

/// Offset of the lower bracket end above `r₀`, where `p` is still positive.
const R0_OFFSET: f64 = 1e-9;
/// Absolute bisection tolerance for `r★`.
const R_STAR_TOL: f64 = 1e-12;

pub fn psi(x: &[f64], x0: &[f64], beta: f64) -> f64 {
    euclidean(x, x0).powf(beta)
}

/// `p(r) = (β − α) r^β − β r^{β−1} + α`; `Ψ'(r)` has the sign of `p(r)`.
pub fn p_poly(r: f64, alpha: f64, beta: f64) -> f64 {
    (beta - alpha) * r.powf(beta) + alpha - beta * r.powf(beta - 1.0)
}

/// `Ψ(r) = (r^β − 1)/(r − 1)^α` for `r > 1`.
pub fn psi_ratio(r: f64, alpha: f64, beta: f64) -> f64 {
    (r.powf(beta) - 1.0) / (r - 1.0).powf(alpha)
}

fn check_exponents(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(beta > 0.0 && beta <= alpha) {
        return Err(Error::Config(format!(
            "beta must lie in (0, alpha = {alpha}], got {beta}"
        )));
    }
    Ok(())
}

/// Constants of the strict-subsolution estimate for `β < α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BarrierConstants {
    /// `(1 − β)/(α − β)`, the critical point of `p`.
    pub r0: f64,
    pub r_star: f64,
    /// `Ψ(r★) ∈ (0, 1)`.
    pub psi_ratio: f64,
    /// `p(r★)`, zero up to the root tolerance.
    pub p_residual: f64,
}

/// Locate `r★` by bisection on `(r₀, R)`, doubling `R` from `2 r₀` until `p`
/// changes sign. The trivial root `r = 1 < r₀` is never bracketed.
pub fn r_star(alpha: f64, beta: f64) -> Result<BarrierConstants> {
    check_exponents(alpha, beta)?;
    if beta >= alpha {
        return Err(Error::Domain(format!(
            "r_star needs beta < alpha (got beta = {beta}, alpha = {alpha}); use the beta = alpha bound"
        )));
    }
    let p = |r: f64| p_poly(r, alpha, beta);
    let r0 = (1.0 - beta) / (alpha - beta);
    let mut lo = r0 * (1.0 + R0_OFFSET);
    let mut hi = 2.0 * r0;
    while p(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Domain(format!(
                "no sign change of p found for alpha = {alpha}, beta = {beta}"
            )));
        }
    }
    debug_assert!(p(lo) > 0.0);
    while hi - lo > R_STAR_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if p(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    Ok(BarrierConstants {
        r0,
        r_star: r,
        psi_ratio: psi_ratio(r, alpha, beta),
        p_residual: p(r),
    })
}

/// `(α, β, x₀, C)` for the cone `g(x₀) ± C ψ_{β,x₀}` together with the
/// constants of its operator bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierSpec {
    pub alpha: f64,
    pub beta: f64,
    pub x0: Vec<f64>,
    pub scale: f64,
    /// Present only for `β < α`.
    pub constants: Option<BarrierConstants>,
}

impl BarrierSpec {
    pub fn new(alpha: f64, beta: f64, x0: Vec<f64>, scale: f64) -> Result<Self> {
        check_exponents(alpha, beta)?;
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(Error::Config(format!("cone scale must be non-negative, got {scale}")));
        }
        let constants = if beta < alpha {
            Some(r_star(alpha, beta)?)
        } else {
            None
        };
        Ok(Self {
            alpha,
            beta,
            x0,
            scale,
            constants,
        })
    }

    /// Unit cone `ψ_{β,x₀}` sampled on a point set.
    pub fn sample(&self, ps: &Arc<PointSet>) -> ScalarField {
        ScalarField::from_fn(ps.clone(), |x| psi(x, &self.x0, self.beta))
            .expect("cone values are finite")
    }
}

/// Upper bound on `L[ψ_{β,x₀}](x)` for `x ≠ x₀` in a set of diameter `diam`.
pub fn psi_upper_bound(x: &[f64], spec: &BarrierSpec, diam: f64) -> Result<f64> {
    let d = euclidean(x, &spec.x0);
    if d == 0.0 {
        return Err(Error::Domain("barrier bound is undefined at the apex x = x0".into()));
    }
    match spec.constants {
        Some(c) => Ok(d.powf(spec.beta - spec.alpha) * (c.psi_ratio - 1.0)),
        None => {
            let ratio = diam / d;
            // no point lies farther from x0 than x does, so L⁺ ≤ 0
            if ratio <= 1.0 {
                return Ok(-1.0);
            }
            Ok(-1.0 + psi_ratio(ratio, spec.alpha, spec.alpha))
        }
    }
}

/// Cone constant `C` large enough for both boundary envelopes to be
/// sub/supersolutions:
/// `max([g]_β, diam^{α−β} · max(f(‖g‖∞), [f(−‖g‖∞)]₋, 0) / (1 − Ψ(r★)))`.
pub fn envelope_constant(ps: &PointSet, g: &BoundaryData, f: &MonotoneSource) -> Result<f64> {
    let (alpha, beta) = (ps.alpha(), g.beta());
    if beta >= alpha {
        return Err(Error::Domain(format!(
            "envelopes need beta < alpha (beta = {beta}, alpha = {alpha})"
        )));
    }
    let consts = r_star(alpha, beta)?;
    let gmax = g.sup_norm();
    let source = f.eval(gmax).max(-f.eval(-gmax)).max(0.0);
    let from_source = ps.diameter().powf(alpha - beta) * source / (1.0 - consts.psi_ratio);
    Ok(g.seminorm().max(from_source))
}

fn envelope(ps: &Arc<PointSet>, g: &BoundaryData, c: f64, sign: f64) -> ScalarField {
    let beta = g.beta();
    let bnd = ps.boundary();
    let mut values: Vec<f64> = (0..ps.len())
        .into_par_iter()
        .map(|i| {
            let x = ps.point(i);
            let cones = bnd
                .iter()
                .zip(g.values())
                .map(|(&b, &gv)| gv - sign * c * psi(x, ps.point(b), beta));
            if sign > 0.0 {
                cones.fold(f64::NEG_INFINITY, f64::max)
            } else {
                cones.fold(f64::INFINITY, f64::min)
            }
        })
        .collect();
    // exact trace even when C < [g]_β
    for (&b, &gv) in bnd.iter().zip(g.values()) {
        values[b] = gv;
    }
    ScalarField::new(ps.clone(), values).expect("envelope values are finite")
}

/// `u⁻(x) = max_{x₀ ∈ ∂} g(x₀) − C |x − x₀|^β`.
pub fn sub_envelope(ps: &Arc<PointSet>, g: &BoundaryData, c: f64) -> ScalarField {
    envelope(ps, g, c, 1.0)
}

/// `u⁺(x) = min_{x₀ ∈ ∂} g(x₀) + C |x − x₀|^β`.
pub fn super_envelope(ps: &Arc<PointSet>, g: &BoundaryData, c: f64) -> ScalarField {
    envelope(ps, g, c, -1.0)
}
