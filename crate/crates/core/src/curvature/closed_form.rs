//! Closed-form flag curvature of `F*_{c,1}` along the fiber direction
//! `(r, t) = (0, x)`, evaluated in double-double arithmetic.
//!
//! With `α = sqrt(x⁴ + 4x²c + 4c² - 16x)`,
//!
//! ```text
//! K = 2 (P + α Q) / ((x² + 2c + α) (x²α + 2cα + x⁴ + 4x²c + 4c² - 8x) α⁴)
//! ```
//!
//! where `P` and `Q` are the integer polynomials in `TERMS`.

use twofloat::TwoFloat;

use crate::error::{DomainViolation, Error, Result};

/// `(coefficient, power of x, power of c, carries α)`, in source order.
const TERMS: [(f64, i32, i32, bool); 49] = [
    (5824.0, 2, 4, false),
    (-5888.0, 3, 5, false),
    (-3840.0, 2, 1, false),
    (-2240.0, 1, 6, false),
    (-6320.0, 5, 4, false),
    (-384.0, 2, 0, true),
    (1120.0, 6, 5, false),
    (2.0, 14, 1, false),
    //
    (28.0, 12, 2, false),
    (-6528.0, 5, 1, false),
    (256.0, 0, 8, false),
    (-864.0, 1, 5, true),
    (-1872.0, 3, 4, true),
    (896.0, 2, 7, false),
    (-1296.0, 7, 0, false),
    (204.0, 10, 0, false),
    //
    (-768.0, 0, 5, false),
    (-9.0, 13, 0, false),
    (2096.0, 8, 1, false),
    (-160.0, 11, 1, false),
    (-1060.0, 9, 2, false),
    (-3520.0, 7, 3, false),
    (11520.0, 4, 3, false),
    (3840.0, 1, 3, false),
    //
    (7584.0, 6, 2, false),
    (-5952.0, 3, 2, false),
    (-648.0, 7, 2, true),
    (-126.0, 9, 1, true),
    (-1120.0, 3, 1, true),
    (2448.0, 4, 2, true),
    (1152.0, 1, 2, true),
    //
    (1920.0, 4, 0, false),
    (168.0, 10, 3, false),
    (1344.0, 4, 6, false),
    (560.0, 8, 4, false),
    (1032.0, 6, 1, true),
    (-1584.0, 5, 3, true),
    (1632.0, 2, 3, true),
    //
    (128.0, 0, 7, true),
    (384.0, 2, 6, true),
    (-9.0, 11, 0, true),
    (2.0, 12, 1, true),
    (132.0, 8, 0, true),
    (320.0, 6, 4, true),
    (120.0, 8, 3, true),
    //
    (24.0, 10, 2, true),
    (480.0, 4, 5, true),
    (-528.0, 5, 0, true),
    (-384.0, 0, 4, true),
];

/// The two halves of the bracket, each as a double-double `(hi, lo)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormBracket {
    /// Terms without `α`.
    pub alpha_free: (f64, f64),
    /// Coefficient of `α`.
    pub alpha_coeff: (f64, f64),
}

fn powers(base: TwoFloat, n: usize) -> Vec<TwoFloat> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(TwoFloat::from(1.0));
    for k in 1..=n {
        out.push(out[k - 1] * base);
    }
    out
}

fn bracket_dd(c: f64, x: f64) -> (TwoFloat, TwoFloat) {
    let xp = powers(TwoFloat::from(x), 14);
    let cp = powers(TwoFloat::from(c), 8);
    let mut free = TwoFloat::from(0.0);
    let mut with_alpha = TwoFloat::from(0.0);
    for &(coef, i, j, alpha) in TERMS.iter() {
        let term = xp[i as usize] * cp[j as usize] * coef;
        if alpha {
            with_alpha += term;
        } else {
            free += term;
        }
    }
    (free, with_alpha)
}

/// `P(c, x)` and `Q(c, x)` of the bracket, for transcription checks.
pub fn closed_form_bracket(c: f64, x: f64) -> ClosedFormBracket {
    let (p, q) = bracket_dd(c, x);
    ClosedFormBracket {
        alpha_free: (p.hi(), p.lo()),
        alpha_coeff: (q.hi(), q.lo()),
    }
}

/// Flag curvature of `F*_{c,1}` at `(x, 0, 0, x)`. Valid for either sign of
/// `x`; by 0-homogeneity this is the direction `(0, sign x)`.
pub fn flag_curvature_closed_form(c: f64, x: f64) -> Result<f64> {
    if !c.is_finite() || !x.is_finite() {
        return Err(DomainViolation::NonFinite.into());
    }
    let xd = TwoFloat::from(x);
    let cd = TwoFloat::from(c);
    let x2 = xd * xd;
    // (x² + 2c)² - 16x
    let sum = x2 + cd * 2.0;
    let radicand = sum * sum - xd * 16.0;
    if radicand.hi() < 0.0 {
        return Err(DomainViolation::NegativeRadicand { value: radicand.hi() }.into());
    }
    let alpha = radicand.sqrt();
    let (p, q) = bracket_dd(c, x);
    let numer = (p + alpha * q) * 2.0;
    let denom = (sum + alpha) * (sum * alpha + sum * sum - xd * 8.0) * radicand * radicand;
    if denom.hi() == 0.0 {
        return Err(Error::Domain(DomainViolation::NegativeRadicand { value: 0.0 }));
    }
    let k = (numer / denom).hi();
    if !k.is_finite() {
        return Err(Error::Domain(DomainViolation::NonFinite));
    }
    Ok(k)
}
