//! Fiberwise convexity of the level curves of `H_p(q) = <p⊥, q> - 1/|q| + 2C`.
//!
//! Every routine here takes the effective momentum: callers working with a
//! rotating frame pass `a p` (see [`CartesianFiberPoint::with_rotation`]).
//! Points on the bounded component `Σ_p` are produced by rescaling an
//! arbitrary `q` by its positive root `λ₀`, so no curve tracing is needed.

use serde::Serialize;

use crate::error::{DomainViolation, Error, Result};
use crate::metric::CartesianFiberPoint;

/// Relative tolerance between the matrix and reduced routes of
/// [`hessian_form`].
pub const FORM_AGREEMENT: f64 = 1e-10;

pub fn hp_value(pt: &CartesianFiberPoint) -> Result<f64> {
    let qn = pt.q_norm();
    if qn == 0.0 {
        return Err(DomainViolation::ZeroFiber.into());
    }
    Ok(pt.perp_dot() - 1.0 / qn + 2.0 * pt.half_offset)
}

/// The three nonzero real solutions `λ` of `H_p(q/λ) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaRoots {
    pub lambda0: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    /// `q` was reflected across `p` to make `<p⊥, q> ≥ 0`.
    pub sign_flipped: bool,
    /// `λ₋ = 0`, which happens when `<p⊥, q> = 0`: the unbounded branch has
    /// receded to infinity in this direction.
    pub lambda_minus_degenerate: bool,
}

pub fn lambda_roots(pt: &CartesianFiberPoint) -> Result<LambdaRoots> {
    let qn = pt.q_norm();
    if qn == 0.0 {
        return Err(DomainViolation::ZeroFiber.into());
    }
    let cc = pt.half_offset;
    let pn = pt.p_norm();
    if !(pn < cc * cc) {
        return Err(Error::Precondition(format!(
            "|p| = {pn} must be below C² = {}",
            cc * cc
        )));
    }
    let raw = pt.perp_dot();
    let sign_flipped = raw < 0.0;
    let ratio = raw.abs() / (qn * cc * cc);
    let scale = cc * qn;
    let inner = (1.0 - ratio).sqrt();
    let lambda_minus = -scale * (1.0 - inner);
    Ok(LambdaRoots {
        lambda0: scale * (1.0 + (1.0 + ratio).sqrt()),
        lambda_plus: -scale * (1.0 + inner),
        lambda_minus,
        sign_flipped,
        lambda_minus_degenerate: lambda_minus == 0.0,
    })
}

/// `f(t) = a² + 2a cos t + 1 - 3a² sin² t`.
pub fn f_of_t(a: f64, t: f64) -> f64 {
    let (s, c) = t.sin_cos();
    a * a + 2.0 * a * c + 1.0 - 3.0 * a * a * s * s
}

/// `|q|⁵ <v, Hess H_p(q) v>` with `v = -(∇H_p(q))⊥`, the tangent to the
/// level curve through `q`.
///
/// Computed from the explicit gradient and Hessian, then checked against
/// the reduced expression
/// `|q|⁻² (|p|²|q|⁴ + 2|q|<p⊥,q> + 1 - 3|q|²<p,q>²)`.
pub fn hessian_form(pt: &CartesianFiberPoint) -> Result<f64> {
    let matrix = hessian_form_matrix(pt)?;
    let reduced = hessian_form_reduced(pt)?;
    let scale = matrix.abs().max(reduced.abs());
    if (matrix - reduced).abs() > FORM_AGREEMENT * scale {
        return Err(Error::Consistency(format!(
            "hessian form: matrix route {matrix} vs reduced {reduced}"
        )));
    }
    Ok(matrix)
}

pub fn hessian_form_matrix(pt: &CartesianFiberPoint) -> Result<f64> {
    let qn = pt.q_norm();
    if qn == 0.0 {
        return Err(DomainViolation::ZeroFiber.into());
    }
    let [p1, p2] = pt.p;
    let [q1, q2] = pt.q;
    let q2n = qn * qn;
    let q3 = q2n * qn;
    // |q|⁵ Hess H_p
    let m11 = q2n - 3.0 * q1 * q1;
    let m12 = -3.0 * q1 * q2;
    let m22 = q2n - 3.0 * q2 * q2;
    let v1 = p1 - q2 / q3;
    let v2 = p2 + q1 / q3;
    Ok(m11 * v1 * v1 + 2.0 * m12 * v1 * v2 + m22 * v2 * v2)
}

pub fn hessian_form_reduced(pt: &CartesianFiberPoint) -> Result<f64> {
    let qn = pt.q_norm();
    if qn == 0.0 {
        return Err(DomainViolation::ZeroFiber.into());
    }
    let pn = pt.p_norm();
    let q2n = qn * qn;
    let dot = pt.dot();
    Ok((pn * pn * q2n * q2n + 2.0 * qn * pt.perp_dot() + 1.0 - 3.0 * q2n * dot * dot) / q2n)
}

/// Rescales `q` onto `Σ_p` by its root `λ₀`.
pub fn project_to_level(pt: &CartesianFiberPoint) -> Result<CartesianFiberPoint> {
    let qn = pt.q_norm();
    if qn == 0.0 {
        return Err(DomainViolation::ZeroFiber.into());
    }
    let cc = pt.half_offset;
    let lambda0 = cc * qn * (1.0 + (1.0 + pt.perp_dot() / (qn * cc * cc)).sqrt());
    Ok(CartesianFiberPoint {
        q: [pt.q[0] / lambda0, pt.q[1] / lambda0],
        ..*pt
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Convex,
    NotConvex,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub n: usize,
    pub min_form: Option<f64>,
    /// Angle of the sampled direction `q/|q|` where the minimum occurs.
    pub argmin_direction: Option<f64>,
    /// `None` when nothing was sampled.
    pub verdict: Option<Verdict>,
    /// First sampled point of `Σ_p` with a non-positive form.
    pub failure: Option<[f64; 2]>,
}

/// Samples `n` equally spaced directions, moves each onto `Σ_p` for the
/// momentum `a p`, and evaluates [`hessian_form`] there.
pub fn verify_convexity(p: [f64; 2], half_offset: f64, a: f64, n: usize) -> Result<ConvexityReport> {
    let base = CartesianFiberPoint::new(p, [1.0, 0.0], half_offset).with_rotation(a);
    let pn = base.p_norm();
    if !(pn < half_offset * half_offset) {
        return Err(Error::Precondition(format!(
            "a|p| = {pn} must be below C² = {}",
            half_offset * half_offset
        )));
    }
    let mut report = ConvexityReport {
        n,
        min_form: None,
        argmin_direction: None,
        verdict: None,
        failure: None,
    };
    for k in 0..n {
        let angle = std::f64::consts::TAU * k as f64 / n as f64;
        let (s, c) = angle.sin_cos();
        let on_level = project_to_level(&CartesianFiberPoint { q: [c, s], ..base })?;
        let form = hessian_form(&on_level)?;
        if report.min_form.is_none_or(|m| form < m) {
            report.min_form = Some(form);
            report.argmin_direction = Some(angle);
        }
        if form <= 0.0 && report.failure.is_none() {
            report.failure = Some(on_level.q);
        }
    }
    if n > 0 {
        report.verdict = Some(if report.failure.is_none() {
            Verdict::Convex
        } else {
            Verdict::NotConvex
        });
    }
    Ok(report)
}
