//! Fundamental functions of the rotating Kepler problem.
//!
//! Two forms are kept side by side. The Cartesian form works on a single
//! cotangent fiber over a momentum `p`:
//!
//! ```text
//! F*_p(q) = C|q| (1 + sqrt(1 + a<p⊥, q> / (|q| C²))),   p⊥ = (p2, -p1)
//! ```
//!
//! and the polar form covers the whole family in the chart `(x, y, r, t)`
//! with `p = (x cos y, x sin y)`:
//!
//! ```text
//! F* = (x² + 2c)/4 · s · (1 + sqrt(1 - 16 a t / (s (x² + 2c)²))),   s = sqrt(r² + t²/x²)
//! ```
//!
//! The two agree under `C = (x²/2 + c)/2` and the fiber change of
//! variables in [`cartesian_from_polar`]; the test suite holds them to each
//! other.

use serde::{Deserialize, Serialize};

use crate::error::{DomainViolation, Error, Result};
use crate::jets::Jet;

/// Radicands in `[-RADICAND_SLACK, 0)` are treated as zero in scalar mode.
pub const RADICAND_SLACK: f64 = 1e-12;

/// Rotation rate `a` and energy parameter `c` (the level set is `H = -c`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricParams {
    pub a: f64,
    pub c: f64,
}

impl MetricParams {
    pub fn new(a: f64, c: f64) -> Self {
        MetricParams { a, c }
    }

    /// `3/2 a^(2/3)`, the energy below which the bounded component of the
    /// level set disappears.
    pub fn critical_energy(&self) -> f64 {
        1.5 * self.a.powf(2.0 / 3.0)
    }

    pub fn validate(&self) -> Result<(), DomainViolation> {
        let MetricParams { a, c } = *self;
        if !a.is_finite() || !c.is_finite() {
            return Err(DomainViolation::NonFinite);
        }
        if a < 0.0 {
            return Err(DomainViolation::NegativeRotation { a });
        }
        if c <= 0.0 {
            return Err(DomainViolation::NonPositiveEnergy { c });
        }
        if a > 0.0 {
            let critical = self.critical_energy();
            if c <= critical {
                return Err(DomainViolation::BelowCriticalEnergy { c, critical });
            }
        }
        Ok(())
    }
}

/// Cotangent-bundle coordinates in the polar chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub y: f64,
    pub r: f64,
    pub t: f64,
}

impl PhasePoint {
    pub fn new(x: f64, y: f64, r: f64, t: f64) -> Self {
        PhasePoint { x, y, r, t }
    }
}

/// A point `q` in the cotangent fiber over `p`, together with the offset `C`
/// of the level function `H_p(q) = <p⊥, q> - 1/|q| + 2C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianFiberPoint {
    pub p: [f64; 2],
    pub q: [f64; 2],
    pub half_offset: f64,
}

impl CartesianFiberPoint {
    pub fn new(p: [f64; 2], q: [f64; 2], half_offset: f64) -> Self {
        CartesianFiberPoint { p, q, half_offset }
    }

    /// The same fiber point with `p` replaced by `a p`.
    pub fn with_rotation(&self, a: f64) -> Self {
        CartesianFiberPoint {
            p: [a * self.p[0], a * self.p[1]],
            ..*self
        }
    }

    pub fn q_norm(&self) -> f64 {
        self.q[0].hypot(self.q[1])
    }

    pub fn p_norm(&self) -> f64 {
        self.p[0].hypot(self.p[1])
    }

    /// `<p⊥, q>`.
    pub fn perp_dot(&self) -> f64 {
        self.p[1] * self.q[0] - self.p[0] * self.q[1]
    }

    /// `<p, q>`.
    pub fn dot(&self) -> f64 {
        self.p[0] * self.q[0] + self.p[1] * self.q[1]
    }
}

fn clamp_radicand(value: f64) -> Result<f64, DomainViolation> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -RADICAND_SLACK {
        Ok(0.0)
    } else {
        Err(DomainViolation::NegativeRadicand { value })
    }
}

/// `F*_p(q)` with `p` replaced by `a p`: the unique `λ > 0` with
/// `q / λ` on the bounded zero level of `H_p`.
pub fn fstar_cartesian(pt: &CartesianFiberPoint, a: f64) -> Result<f64> {
    let qn = pt.q_norm();
    if qn == 0.0 {
        return Err(DomainViolation::ZeroFiber.into());
    }
    let cc = pt.half_offset;
    let radicand = clamp_radicand(1.0 + a * pt.perp_dot() / (qn * cc * cc))?;
    Ok(cc * qn * (1.0 + radicand.sqrt()))
}

/// Maps a polar phase point to its Cartesian fiber point, with
/// `2C = x²/2 + c`.
pub fn cartesian_from_polar(params: &MetricParams, pt: &PhasePoint) -> CartesianFiberPoint {
    let (sy, cy) = pt.y.sin_cos();
    let p = [pt.x * cy, pt.x * sy];
    let q = [cy * pt.r - sy * pt.t / pt.x, sy * pt.r + cy * pt.t / pt.x];
    CartesianFiberPoint::new(p, q, 0.5 * (0.5 * pt.x * pt.x + params.c))
}

fn check_point(pt: &PhasePoint) -> Result<(), DomainViolation> {
    if ![pt.x, pt.y, pt.r, pt.t].iter().all(|v| v.is_finite()) {
        return Err(DomainViolation::NonFinite);
    }
    if pt.x == 0.0 {
        return Err(DomainViolation::ChartSingularity { x: pt.x });
    }
    if pt.r == 0.0 && pt.t == 0.0 {
        return Err(DomainViolation::ZeroFiber);
    }
    Ok(())
}

/// Inner radicand `1 - 16 a t / (s (x² + 2c)²)` of the polar form, unclamped.
pub fn inner_radicand(params: &MetricParams, pt: &PhasePoint) -> f64 {
    let s = (pt.r * pt.r + pt.t * pt.t / (pt.x * pt.x)).sqrt();
    let w = pt.x * pt.x + 2.0 * params.c;
    1.0 - 16.0 * params.a * pt.t / (s * w * w)
}

/// Polar form of `F*`. Checks the point (chart, fiber, radicand) but not the
/// admissibility of `params`; see [`validate_domain`] for the full check.
pub fn fstar_polar(params: &MetricParams, pt: &PhasePoint) -> Result<f64> {
    check_point(pt)?;
    let s = (pt.r * pt.r + pt.t * pt.t / (pt.x * pt.x)).sqrt();
    let w = pt.x * pt.x + 2.0 * params.c;
    let radicand = clamp_radicand(1.0 - 16.0 * params.a * pt.t / (s * w * w))?;
    Ok(0.25 * w * s * (1.0 + radicand.sqrt()))
}

/// Polar form of `F*` evaluated on jets of `x`, `r` and `t` of a common
/// shape. `y` never enters.
pub fn fstar_from_jets(params: &MetricParams, x: &Jet, r: &Jet, t: &Jet) -> Result<Jet> {
    let x2 = x * x;
    let s = (r * r + t * t * x2.recip()?).sqrt()?;
    let w = &x2 + 2.0 * params.c;
    let radicand = (16.0 * params.a * t * (&s * &w * &w).recip()?).scale(-1.0) + 1.0;
    if radicand.value() <= 0.0 {
        return Err(DomainViolation::NegativeRadicand {
            value: radicand.value(),
        }
        .into());
    }
    Ok(0.25 * (&w * &s) * (radicand.sqrt()? + 1.0))
}

/// Jet of `F*` in the variables `(x, r, t)` at `pt`.
pub fn fstar_polar_jet(params: &MetricParams, pt: &PhasePoint, max_order: usize) -> Result<Jet> {
    check_point(pt)?;
    let [x, r, t] = seed_xrt(pt, max_order)?;
    fstar_from_jets(params, &x, &r, &t)
}

/// `L* = F*² / 2`.
pub fn lstar(params: &MetricParams, pt: &PhasePoint) -> Result<f64> {
    let f = fstar_polar(params, pt)?;
    Ok(0.5 * f * f)
}

pub fn lstar_from_jets(params: &MetricParams, x: &Jet, r: &Jet, t: &Jet) -> Result<Jet> {
    let f = fstar_from_jets(params, x, r, t)?;
    Ok(0.5 * (&f * &f))
}

/// Jet of `L*` in the variables `(x, r, t)` at `pt`.
pub fn lstar_jet(params: &MetricParams, pt: &PhasePoint, max_order: usize) -> Result<Jet> {
    check_point(pt)?;
    let [x, r, t] = seed_xrt(pt, max_order)?;
    lstar_from_jets(params, &x, &r, &t)
}

fn seed_xrt(pt: &PhasePoint, max_order: usize) -> Result<[Jet; 3]> {
    Ok([
        Jet::variable(0, pt.x, 3, max_order)?,
        Jet::variable(1, pt.r, 3, max_order)?,
        Jet::variable(2, pt.t, 3, max_order)?,
    ])
}

/// Full domain check: admissible parameters, a regular chart point, a
/// nonzero fiber direction and a non-negative inner radicand.
pub fn validate_domain(params: &MetricParams, pt: &PhasePoint) -> Result<(), DomainViolation> {
    params.validate()?;
    check_point(pt)?;
    clamp_radicand(inner_radicand(params, pt)).map(|_| ())
}

/// The convexity hypothesis at momentum norm `|p|`:
/// `a|p| < (|p|²/4 + c/2)²`.
pub fn hypothesis_holds(params: &MetricParams, p_norm: f64) -> bool {
    let rhs = 0.25 * p_norm * p_norm + 0.5 * params.c;
    params.a * p_norm < rhs * rhs
}

/// `g(x) = x⁴ + 6x² - 16x + 9`; non-negativity of `g` on `x ≥ 0` is what
/// makes the hypothesis hold for every admissible energy.
pub fn hypothesis_margin(x: f64) -> f64 {
    let x2 = x * x;
    x2 * x2 + 6.0 * x2 - 16.0 * x + 9.0
}

/// Reduces `(a, c)` to rotation rate one:
/// `F*_{c,a}(x, y, r, t) = a^(1/3) F*_{c a^(-2/3), 1}(x a^(-1/3), y, r a^(1/3), t)`.
pub fn scaling_reduce(params: &MetricParams, pt: &PhasePoint) -> Result<(MetricParams, PhasePoint)> {
    if !(params.a > 0.0) {
        return Err(Error::Argument(format!(
            "scaling reduction needs a > 0, got a = {}",
            params.a
        )));
    }
    let cube_root = params.a.cbrt();
    let reduced = MetricParams::new(1.0, params.c / (cube_root * cube_root));
    let point = PhasePoint::new(pt.x / cube_root, pt.y, pt.r * cube_root, pt.t);
    Ok((reduced, point))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn round_case_of_cartesian_form() {
        let pt = CartesianFiberPoint::new([0.0, 0.0], [0.3, 0.4], 1.0);
        assert_relative_eq!(fstar_cartesian(&pt, 1.0).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn cartesian_form_solves_root_equation() {
        // positive root of λ² - 2C|q|λ - |q|<ap⊥, q> = 0, by bisection
        let pt = CartesianFiberPoint::new([0.5, 0.0], [0.0, 0.6], 1.2);
        let qn = pt.q_norm();
        let s = pt.perp_dot();
        let poly = |l: f64| l * l.abs() - 2.0 * pt.half_offset * qn * l - qn * s;
        let (mut lo, mut hi) = (1e-9, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if poly(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert_relative_eq!(fstar_cartesian(&pt, 1.0).unwrap(), lo, max_relative = 1e-13);
    }

    #[test]
    fn cartesian_form_errors() {
        let zero = CartesianFiberPoint::new([1.0, 0.0], [0.0, 0.0], 1.0);
        assert!(matches!(
            fstar_cartesian(&zero, 1.0),
            Err(Error::Domain(DomainViolation::ZeroFiber))
        ));
        // <p⊥, q> = -|p||q| with |p| >> C²
        let bad = CartesianFiberPoint::new([10.0, 0.0], [0.0, 1.0], 1.0);
        assert!(matches!(
            fstar_cartesian(&bad, 1.0),
            Err(Error::Domain(DomainViolation::NegativeRadicand { .. }))
        ));
    }

    #[test]
    fn inertial_value() {
        let params = MetricParams::new(0.0, 2.0);
        let pt = PhasePoint::new(1.0, 0.0, 0.0, 1.0);
        assert_relative_eq!(fstar_polar(&params, &pt).unwrap(), 2.5, epsilon = 1e-15);
        assert_relative_eq!(lstar(&params, &pt).unwrap(), 3.125, epsilon = 1e-15);
    }

    #[test]
    fn fiber_homogeneity() {
        let params = MetricParams::new(1.0, 1.7);
        let pt = PhasePoint::new(0.8, 0.3, -0.4, 0.9);
        let scaled = PhasePoint::new(0.8, 0.3, -1.0, 2.25);
        assert_relative_eq!(
            fstar_polar(&params, &scaled).unwrap(),
            2.5 * fstar_polar(&params, &pt).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn y_does_not_enter() {
        let params = MetricParams::new(1.0, 1.7);
        let a = fstar_polar(&params, &PhasePoint::new(0.8, 0.3, -0.4, 0.9)).unwrap();
        let b = fstar_polar(&params, &PhasePoint::new(0.8, -2.0, -0.4, 0.9)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn non_reversible_only_when_rotating() {
        let pt = PhasePoint::new(1.1, 0.0, 0.3, 0.8);
        let flipped = PhasePoint::new(1.1, 0.0, -0.3, -0.8);
        let rot = MetricParams::new(1.0, 2.0);
        assert!((fstar_polar(&rot, &pt).unwrap() - fstar_polar(&rot, &flipped).unwrap()).abs() > 1e-3);
        let inertial = MetricParams::new(0.0, 2.0);
        assert_eq!(
            fstar_polar(&inertial, &pt).unwrap(),
            fstar_polar(&inertial, &flipped).unwrap()
        );
    }

    #[test]
    fn jet_value_matches_scalar() {
        let params = MetricParams::new(1.0, 2.0);
        let pt = PhasePoint::new(1.3, 0.0, 0.2, -0.7);
        let jet = lstar_jet(&params, &pt, 4).unwrap();
        assert_relative_eq!(
            jet.extract(&[0, 0, 0]).unwrap(),
            lstar(&params, &pt).unwrap(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn euler_identity_from_jet() {
        let params = MetricParams::new(1.0, 1.6);
        let pt = PhasePoint::new(0.6, 0.0, 0.7, 0.4);
        let jet = lstar_jet(&params, &pt, 1).unwrap();
        let lr = jet.extract(&[0, 1, 0]).unwrap();
        let lt = jet.extract(&[0, 0, 1]).unwrap();
        assert_relative_eq!(pt.r * lr + pt.t * lt, 2.0 * jet.value(), max_relative = 1e-10);
    }

    #[test]
    fn domain_validation() {
        let pt = PhasePoint::new(1.0, 0.0, 0.0, 1.0);
        assert!(matches!(
            validate_domain(&MetricParams::new(1.0, 1.4), &pt),
            Err(DomainViolation::BelowCriticalEnergy { .. })
        ));
        // radicand 1 - 16/36² > 0
        let rad = inner_radicand(&MetricParams::new(1.0, 2.0), &pt);
        assert_relative_eq!(rad, 1.0 - 16.0 / 25.0, epsilon = 1e-15);
        assert!(validate_domain(&MetricParams::new(1.0, 2.0), &pt).is_ok());
        assert_eq!(
            validate_domain(&MetricParams::new(1.0, 2.0), &PhasePoint::new(0.0, 0.0, 0.0, 1.0)),
            Err(DomainViolation::ChartSingularity { x: 0.0 })
        );
        assert_eq!(
            validate_domain(&MetricParams::new(1.0, 2.0), &PhasePoint::new(1.0, 0.0, 0.0, 0.0)),
            Err(DomainViolation::ZeroFiber)
        );
        assert!(validate_domain(&MetricParams::new(0.0, 0.1), &pt).is_ok());
    }

    #[test]
    fn hypothesis_certificate() {
        let params = MetricParams::new(1.0, 1.51);
        for i in 0..200 {
            assert!(hypothesis_holds(&params, i as f64 * 0.05));
        }
        assert!(!hypothesis_holds(&MetricParams::new(1.0, 1.4), 1.0));
        assert_eq!(hypothesis_margin(1.0), 0.0);
    }

    #[test]
    fn scaling_examples() {
        let pt = PhasePoint::new(2.0, 0.4, 0.5, 1.0);
        let (p1, q1) = scaling_reduce(&MetricParams::new(1.0, 2.0), &pt).unwrap();
        assert_eq!(p1, MetricParams::new(1.0, 2.0));
        assert_eq!(q1, pt);

        let params = MetricParams::new(8.0, 6.0);
        let (reduced, point) = scaling_reduce(&params, &pt).unwrap();
        assert_relative_eq!(reduced.c, 1.5, epsilon = 1e-15);
        assert_eq!(reduced.a, 1.0);
        assert_relative_eq!(point.x, 1.0, epsilon = 1e-15);
        assert_relative_eq!(point.r, 1.0, epsilon = 1e-15);
        assert_eq!(point.t, 1.0);
        assert_eq!(point.y, 0.4);
        assert_relative_eq!(
            fstar_polar(&params, &pt).unwrap(),
            2.0 * fstar_polar(&reduced, &point).unwrap(),
            max_relative = 1e-12
        );

        assert!(matches!(
            scaling_reduce(&MetricParams::new(0.0, 2.0), &pt),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn polar_matches_cartesian_at_a_point() {
        let params = MetricParams::new(1.0, 1.8);
        let pt = PhasePoint::new(0.9, 1.2, -0.3, 0.5);
        let cart = cartesian_from_polar(&params, &pt);
        assert_relative_eq!(cart.perp_dot(), -pt.t, epsilon = 1e-15);
        assert_relative_eq!(
            fstar_polar(&params, &pt).unwrap(),
            fstar_cartesian(&cart, params.a).unwrap(),
            max_relative = 1e-12
        );
    }
}
