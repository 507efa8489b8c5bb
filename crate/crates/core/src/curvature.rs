//! Spray coefficients and flag curvature of a Cartan surface, computed from
//! `L* = F*²/2` without ever forming the Legendre dual `L` explicitly.
//!
//! With the cometric `g^ij` (fiber Hessian of `L*`) and its inverse `g_ij`,
//! the spray coefficients on the cotangent side are
//!
//! ```text
//! 2G = (g¹¹L*_x + g¹²L*_y) - (g¹¹L*_rx + g¹²L*_ry) r - (g¹²L*_rx + g²²L*_ry) t
//! 2H = (g¹²L*_x + g²²L*_y) - (g¹²L*_tx + g²²L*_ty) t - (g¹¹L*_tx + g¹²L*_ty) r
//! ```
//!
//! using `L_u = r` and `L_v = t`. The flag curvature
//!
//! ```text
//! K = ((G_xv - G_yu) v + 2G G_uu + 2H G_uv - G_u G_u - G_v H_u) / (v L_v)
//! ```
//!
//! is written in the tangent variables `(x, y, u, v)`. Fiber derivatives are
//! pulled back with `∂_u = g₁₁∂_r + g₂₁∂_t` and `∂_v = g₁₂∂_r + g₂₂∂_t`; base
//! derivatives at fixed `(u, v)` pick up the extra terms
//! `∂r/∂x = -(g₁₁L*_rx + g₁₂L*_tx)` and `∂t/∂x = -(g₂₁L*_rx + g₂₂L*_tx)`.
//!
//! Everything is assembled from a single order-4 jet of `L*` per point.

mod closed_form;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jets::Jet;
use crate::metric::{self, MetricParams, PhasePoint};

pub use closed_form::{closed_form_bracket, flag_curvature_closed_form, ClosedFormBracket};

/// `|v·t|` below this is reported as [`SampleStatus::SingularV`].
pub const SINGULAR_V_THRESHOLD: f64 = 1e-12;

/// Relative tolerance of the internal consistency checks (cometric
/// inversion, Legendre reconstruction).
pub const CONSISTENCY_TOL: f64 = 1e-10;

/// A fundamental function on the cotangent bundle of a surface, expressed as
/// `L*` on jets of the chart coordinates.
pub trait CartanMetric: Sync {
    /// When false, `y` is not seeded and every `y`-derivative is zero.
    fn depends_on_y(&self) -> bool;

    fn validate(&self, pt: &PhasePoint) -> Result<()>;

    /// `L*` evaluated on jets of `(x, y, r, t)`; `y` is `None` exactly when
    /// [`depends_on_y`](Self::depends_on_y) is false.
    fn lstar(&self, x: &Jet, y: Option<&Jet>, r: &Jet, t: &Jet) -> Result<Jet>;
}

impl CartanMetric for MetricParams {
    fn depends_on_y(&self) -> bool {
        false
    }

    fn validate(&self, pt: &PhasePoint) -> Result<()> {
        Ok(metric::validate_domain(self, pt)?)
    }

    fn lstar(&self, x: &Jet, _y: Option<&Jet>, r: &Jet, t: &Jet) -> Result<Jet> {
        metric::lstar_from_jets(self, x, r, t)
    }
}

/// A user-supplied `L*` given as a closure over jets of `(x, y, r, t)`.
pub struct FnMetric<F> {
    lstar: F,
}

impl<F> FnMetric<F>
where
    F: Fn(&Jet, &Jet, &Jet, &Jet) -> Result<Jet> + Sync,
{
    pub fn new(lstar: F) -> Self {
        FnMetric { lstar }
    }
}

impl<F> CartanMetric for FnMetric<F>
where
    F: Fn(&Jet, &Jet, &Jet, &Jet) -> Result<Jet> + Sync,
{
    fn depends_on_y(&self) -> bool {
        true
    }

    fn validate(&self, pt: &PhasePoint) -> Result<()> {
        use crate::error::DomainViolation;
        if ![pt.x, pt.y, pt.r, pt.t].iter().all(|v| v.is_finite()) {
            return Err(DomainViolation::NonFinite.into());
        }
        if pt.r == 0.0 && pt.t == 0.0 {
            return Err(DomainViolation::ZeroFiber.into());
        }
        Ok(())
    }

    fn lstar(&self, x: &Jet, y: Option<&Jet>, r: &Jet, t: &Jet) -> Result<Jet> {
        let y = y.expect("FnMetric always seeds y");
        (self.lstar)(x, y, r, t)
    }
}

/// Fiber Hessian of `L*` and its inverse at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CometricBlock {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
    pub det: f64,
    pub inv11: f64,
    pub inv12: f64,
    pub inv22: f64,
}

impl CometricBlock {
    pub fn from_hessian(g11: f64, g12: f64, g22: f64) -> Result<Self> {
        let det = g11 * g22 - g12 * g12;
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::Degenerate { det });
        }
        Ok(CometricBlock {
            g11,
            g12,
            g22,
            det,
            inv11: g22 / det,
            inv12: -g12 / det,
            inv22: g11 / det,
        })
    }

    /// `inverse · cometric`, row-major.
    pub fn product_with_inverse(&self) -> [[f64; 2]; 2] {
        [
            [
                self.inv11 * self.g11 + self.inv12 * self.g12,
                self.inv11 * self.g12 + self.inv12 * self.g22,
            ],
            [
                self.inv12 * self.g11 + self.inv22 * self.g12,
                self.inv12 * self.g12 + self.inv22 * self.g22,
            ],
        ]
    }
}

/// Spray coefficients `G` and `H` (the latter renamed to keep it apart from
/// the Hamiltonian).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SprayPair {
    pub g: f64,
    pub h_spray: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "reason", rename_all = "snake_case")]
pub enum SampleStatus {
    Ok,
    DomainError(String),
    SingularV(String),
}

impl SampleStatus {
    pub fn code(&self) -> &'static str {
        match self {
            SampleStatus::Ok => "ok",
            SampleStatus::DomainError(_) => "domain_error",
            SampleStatus::SingularV(_) => "singular_v",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureSample {
    pub point: PhasePoint,
    /// Present exactly when `status` is `Ok`.
    pub k: Option<f64>,
    pub status: SampleStatus,
}

impl CurvatureSample {
    pub fn skipped(point: PhasePoint, status: SampleStatus) -> Self {
        CurvatureSample { point, k: None, status }
    }

    pub fn is_ok(&self) -> bool {
        self.status == SampleStatus::Ok
    }
}

/// Variable slots inside the jets. `y` is absent for `y`-independent
/// metrics, in which case its derivatives are zero jets.
#[derive(Clone, Copy)]
struct Slots {
    x: usize,
    y: Option<usize>,
    r: usize,
    t: usize,
}

struct Expansion {
    slots: Slots,
    lstar: Jet,
    r: Jet,
    t: Jet,
}

impl Expansion {
    fn new<M: CartanMetric + ?Sized>(metric: &M, pt: &PhasePoint, order: usize) -> Result<Self> {
        metric.validate(pt)?;
        let (slots, nv) = if metric.depends_on_y() {
            (
                Slots {
                    x: 0,
                    y: Some(1),
                    r: 2,
                    t: 3,
                },
                4,
            )
        } else {
            (
                Slots {
                    x: 0,
                    y: None,
                    r: 1,
                    t: 2,
                },
                3,
            )
        };
        let x = Jet::variable(slots.x, pt.x, nv, order)?;
        let y = slots.y.map(|i| Jet::variable(i, pt.y, nv, order)).transpose()?;
        let r = Jet::variable(slots.r, pt.r, nv, order)?;
        let t = Jet::variable(slots.t, pt.t, nv, order)?;
        let lstar = metric.lstar(&x, y.as_ref(), &r, &t)?;
        Ok(Expansion { slots, lstar, r, t })
    }

    fn d(&self, jet: &Jet, slot: Option<usize>) -> Result<Jet> {
        match slot {
            Some(i) => Ok(jet.derivative(i)?),
            None => Ok(jet.derivative(self.slots.x)?.zeros_like()),
        }
    }

    fn dx(&self, jet: &Jet) -> Result<Jet> {
        self.d(jet, Some(self.slots.x))
    }

    fn dy(&self, jet: &Jet) -> Result<Jet> {
        self.d(jet, self.slots.y)
    }

    fn dr(&self, jet: &Jet) -> Result<Jet> {
        self.d(jet, Some(self.slots.r))
    }

    fn dt(&self, jet: &Jet) -> Result<Jet> {
        self.d(jet, Some(self.slots.t))
    }

    fn partial(&self, jet: &Jet, slot: Option<usize>) -> Result<f64> {
        match slot {
            Some(i) => {
                let mut mu = [0u8; 4];
                mu[i] = 1;
                Ok(jet.extract(&mu[..jet.num_vars()])?)
            }
            None => Ok(0.0),
        }
    }
}

/// The jets shared by the spray and curvature assembly, all of order
/// `lstar.order - 2`.
struct SprayJets {
    g11: Jet,
    g12: Jet,
    g22: Jet,
    l_rx: Jet,
    l_tx: Jet,
    l_ry: Jet,
    l_ty: Jet,
    g: Jet,
    h_spray: Jet,
}

fn spray_jets(e: &Expansion) -> Result<SprayJets> {
    let order = e.lstar.max_order() - 2;
    let l_r = e.dr(&e.lstar)?;
    let l_t = e.dt(&e.lstar)?;
    let l_x = e.dx(&e.lstar)?.truncate(order)?;
    let l_y = e.dy(&e.lstar)?.truncate(order)?;
    let g11 = e.dr(&l_r)?;
    let g12 = e.dt(&l_r)?;
    let g22 = e.dt(&l_t)?;
    let l_rx = e.dx(&l_r)?;
    let l_tx = e.dx(&l_t)?;
    let l_ry = e.dy(&l_r)?;
    let l_ty = e.dy(&l_t)?;
    let r = e.r.truncate(order)?;
    let t = e.t.truncate(order)?;

    let two_g = (&g11 * &l_x + &g12 * &l_y) - (&g11 * &l_rx + &g12 * &l_ry) * &r - (&g12 * &l_rx + &g22 * &l_ry) * &t;
    let two_h = (&g12 * &l_x + &g22 * &l_y) - (&g12 * &l_tx + &g22 * &l_ty) * &t - (&g11 * &l_tx + &g12 * &l_ty) * &r;
    Ok(SprayJets {
        g11,
        g12,
        g22,
        l_rx,
        l_tx,
        l_ry,
        l_ty,
        g: two_g.scale(0.5),
        h_spray: two_h.scale(0.5),
    })
}

pub fn cometric_at<M: CartanMetric + ?Sized>(metric: &M, pt: &PhasePoint) -> Result<CometricBlock> {
    let e = Expansion::new(metric, pt, 2)?;
    let l_r = e.dr(&e.lstar)?;
    let l_t = e.dt(&e.lstar)?;
    let g11 = e.dr(&l_r)?.value();
    let g12 = e.dt(&l_r)?.value();
    let g22 = e.dt(&l_t)?.value();
    let block = CometricBlock::from_hessian(g11, g12, g22)?;
    let prod = block.product_with_inverse();
    let off = prod[0][1].abs().max(prod[1][0].abs());
    let diag = (prod[0][0] - 1.0).abs().max((prod[1][1] - 1.0).abs());
    if off.max(diag) > CONSISTENCY_TOL {
        return Err(Error::Consistency(format!(
            "cometric inverse deviates from identity by {}",
            off.max(diag)
        )));
    }
    Ok(block)
}

/// Tangent fiber coordinates `(u, v) = (L*_r, L*_t)`.
pub fn legendre_fiber<M: CartanMetric + ?Sized>(metric: &M, pt: &PhasePoint) -> Result<(f64, f64)> {
    let e = Expansion::new(metric, pt, 2)?;
    let l_r = e.dr(&e.lstar)?;
    let l_t = e.dt(&e.lstar)?;
    let (u, v) = (l_r.value(), l_t.value());
    let block = CometricBlock::from_hessian(e.dr(&l_r)?.value(), e.dt(&l_r)?.value(), e.dt(&l_t)?.value())?;
    check_reconstruction(&block, pt, u, v)?;
    Ok((u, v))
}

fn check_reconstruction(block: &CometricBlock, pt: &PhasePoint, u: f64, v: f64) -> Result<()> {
    let r = block.inv11 * u + block.inv12 * v;
    let t = block.inv12 * u + block.inv22 * v;
    let scale = pt.r.abs().max(pt.t.abs());
    let err = (r - pt.r).abs().max((t - pt.t).abs());
    if err > CONSISTENCY_TOL * scale {
        return Err(Error::Consistency(format!(
            "Legendre reconstruction gives ({r}, {t}) for ({}, {})",
            pt.r, pt.t
        )));
    }
    Ok(())
}

pub fn spray_coeffs<M: CartanMetric + ?Sized>(metric: &M, pt: &PhasePoint) -> Result<SprayPair> {
    let e = Expansion::new(metric, pt, 3)?;
    let s = spray_jets(&e)?;
    Ok(SprayPair {
        g: s.g.value(),
        h_spray: s.h_spray.value(),
    })
}

/// Flag curvature at `pt`, or the error explaining why it is undefined.
/// [`Error::Argument`] is never returned; see [`flag_curvature`] for the
/// status-carrying form.
pub fn flag_curvature_value<M: CartanMetric + ?Sized>(metric: &M, pt: &PhasePoint) -> Result<f64> {
    let e = Expansion::new(metric, pt, 4)?;
    let s = spray_jets(&e)?;

    // cometric and its inverse as order-1 jets
    let det = (&s.g11 * &s.g22 - &s.g12 * &s.g12).truncate(1)?;
    if !(det.value() > 0.0) {
        return Err(Error::Degenerate { det: det.value() });
    }
    let inv_det = det.recip()?;
    let inv11 = s.g22.truncate(1)? * &inv_det;
    let inv12 = -(s.g12.truncate(1)? * &inv_det);
    let inv22 = s.g11.truncate(1)? * &inv_det;
    let (i11, i12, i22) = (inv11.value(), inv12.value(), inv22.value());

    // G_u, G_v as functions of (x, y, r, t)
    let g_r = e.dr(&s.g)?;
    let g_t = e.dt(&s.g)?;
    let g_u = &inv11 * &g_r + &inv12 * &g_t;
    let g_v = &inv12 * &g_r + &inv22 * &g_t;

    let (x, y, r, t) = (Some(e.slots.x), e.slots.y, Some(e.slots.r), Some(e.slots.t));
    let g_u_r = e.partial(&g_u, r)?;
    let g_u_t = e.partial(&g_u, t)?;
    let g_uu = i11 * g_u_r + i12 * g_u_t;
    let g_uv = i12 * g_u_r + i22 * g_u_t;

    let h_u = i11 * e.partial(&s.h_spray, r)? + i12 * e.partial(&s.h_spray, t)?;

    let (l_rx, l_tx) = (s.l_rx.value(), s.l_tx.value());
    let (l_ry, l_ty) = (s.l_ry.value(), s.l_ty.value());
    let r_x = -(i11 * l_rx + i12 * l_tx);
    let t_x = -(i12 * l_rx + i22 * l_tx);
    let r_y = -(i11 * l_ry + i12 * l_ty);
    let t_y = -(i12 * l_ry + i22 * l_ty);

    let g_xv = e.partial(&g_v, x)? + e.partial(&g_v, r)? * r_x + e.partial(&g_v, t)? * t_x;
    let g_yu = e.partial(&g_u, y)? + g_u_r * r_y + g_u_t * t_y;

    // v = L*_t, L_v = t
    let v = s.g12.value() * pt.r + s.g22.value() * pt.t;
    let l_v = pt.t;
    let denom = v * l_v;
    if denom.abs() < SINGULAR_V_THRESHOLD {
        return Err(Error::SingularV(denom));
    }
    let (g, h, gu, gv) = (s.g.value(), s.h_spray.value(), g_u.value(), g_v.value());
    let numer = (g_xv - g_yu) * v + 2.0 * g * g_uu + 2.0 * h * g_uv - gu * gu - gv * h_u;
    Ok(numer / denom)
}

pub fn flag_curvature<M: CartanMetric + ?Sized>(metric: &M, pt: &PhasePoint) -> CurvatureSample {
    match flag_curvature_value(metric, pt) {
        Ok(k) if k.is_finite() => CurvatureSample {
            point: *pt,
            k: Some(k),
            status: SampleStatus::Ok,
        },
        Ok(k) => CurvatureSample::skipped(*pt, SampleStatus::DomainError(format!("non-finite K = {k}"))),
        Err(Error::SingularV(d)) => CurvatureSample::skipped(
            *pt,
            SampleStatus::SingularV(format!("v·t = {d:e} below {SINGULAR_V_THRESHOLD:e}")),
        ),
        Err(err) => CurvatureSample::skipped(*pt, SampleStatus::DomainError(err.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn flat() -> FnMetric<impl Fn(&Jet, &Jet, &Jet, &Jet) -> Result<Jet> + Sync> {
        FnMetric::new(|_x: &Jet, _y: &Jet, r: &Jet, t: &Jet| Ok(0.5 * (r * r + t * t)))
    }

    #[test]
    fn flat_quadratic_cometric() {
        let pt = PhasePoint::new(0.3, 0.1, 0.7, -0.2);
        let block = cometric_at(&flat(), &pt).unwrap();
        assert_eq!((block.g11, block.g12, block.g22, block.det), (1.0, 0.0, 1.0, 1.0));
        assert_eq!((block.inv11, block.inv12, block.inv22), (1.0, 0.0, 1.0));
        assert_eq!(legendre_fiber(&flat(), &pt).unwrap(), (0.7, -0.2));
        let spray = spray_coeffs(&flat(), &pt).unwrap();
        assert_eq!((spray.g, spray.h_spray), (0.0, 0.0));
    }

    #[test]
    fn degenerate_cometric_is_an_error() {
        let m = FnMetric::new(|_x: &Jet, _y: &Jet, r: &Jet, _t: &Jet| Ok(0.5 * (r * r)));
        let pt = PhasePoint::new(0.3, 0.1, 0.7, -0.2);
        assert!(matches!(cometric_at(&m, &pt), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn kepler_cometric_is_positive() {
        let params = MetricParams::new(1.0, 2.0);
        let pt = PhasePoint::new(1.0, 0.0, 0.0, 1.0);
        let block = cometric_at(&params, &pt).unwrap();
        assert!(block.det > 0.0);
        let (u, v) = legendre_fiber(&params, &pt).unwrap();
        assert!(v > 0.0);
        let l = metric::lstar(&params, &pt).unwrap();
        assert_relative_eq!(pt.r * u + pt.t * v, 2.0 * l, max_relative = 1e-10);
    }

    #[test]
    fn kepler_matches_closed_form_at_unit_point() {
        let params = MetricParams::new(1.0, 2.0);
        let k = flag_curvature_value(&params, &PhasePoint::new(1.0, 0.0, 0.0, 1.0)).unwrap();
        let oracle = flag_curvature_closed_form(2.0, 1.0).unwrap();
        assert_relative_eq!(k, oracle, max_relative = 1e-8);
    }

    #[test]
    fn singular_direction_is_flagged() {
        let params = MetricParams::new(1.0, 2.0);
        let sample = flag_curvature(&params, &PhasePoint::new(1.0, 0.0, 1.0, 0.0));
        assert!(matches!(sample.status, SampleStatus::SingularV(_)));
        assert_eq!(sample.k, None);
    }

    #[test]
    fn domain_errors_become_statuses() {
        let params = MetricParams::new(1.0, 1.4);
        let sample = flag_curvature(&params, &PhasePoint::new(1.0, 0.0, 0.0, 1.0));
        assert_eq!(sample.status.code(), "domain_error");
        assert_eq!(sample.k, None);
    }
}
