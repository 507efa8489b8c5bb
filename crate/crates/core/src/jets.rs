//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] stores the Taylor coefficients of a scalar function around a
//! point, in up to [`MAX_VARS`] variables and up to total order
//! [`MAX_ORDER`]. Coefficients are kept in Taylor convention (partial
//! derivative divided by the multi-index factorial); [`Jet::extract`] is the
//! only place where the factorial is applied.
//!
//! Coefficients are stored densely in a degree-graded layout. Every shape
//! `(num_vars, max_order)` has a precomputed table of index pairs whose
//! multi-indices sum to a third one, so a product is a single pass over that
//! table.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use thiserror::Error;

pub const MAX_VARS: usize = 4;
pub const MAX_ORDER: usize = 4;

/// A multi-index over at most four variables. Unused trailing slots are zero.
pub type MultiIndex = [u8; MAX_VARS];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("variable index {index} out of range for {num_vars} variables")]
    IndexOutOfRange { index: usize, num_vars: usize },
    #[error("unsupported jet shape: {num_vars} variables, order {max_order}")]
    UnsupportedShape { num_vars: usize, max_order: usize },
    #[error("jet shapes differ: ({0}, {1}) vs ({2}, {3})")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("multi-index of degree {degree} exceeds jet order {max_order}")]
    DegreeTooHigh { degree: usize, max_order: usize },
    #[error("multi-index has {got} entries, jet has {num_vars} variables")]
    IndexLength { got: usize, num_vars: usize },
    #[error("cannot differentiate an order-0 jet")]
    OrderExhausted,
    #[error("{op} is undefined at constant term {value}")]
    Domain { op: &'static str, value: f64 },
}

#[derive(Debug)]
struct Layout {
    num_vars: usize,
    max_order: usize,
    indices: Vec<MultiIndex>,
    /// `(i, j, k)` with `indices[i] + indices[j] == indices[k]`.
    products: Vec<(u16, u16, u16)>,
}

impl Layout {
    fn build(num_vars: usize, max_order: usize) -> Self {
        let mut indices = Vec::new();
        for degree in 0..=max_order {
            push_degree(&mut indices, [0; MAX_VARS], 0, num_vars, degree);
        }
        let mut products = Vec::new();
        for (i, a) in indices.iter().enumerate() {
            for (j, b) in indices.iter().enumerate() {
                if degree(a) + degree(b) > max_order {
                    continue;
                }
                let mut sum = [0u8; MAX_VARS];
                for v in 0..MAX_VARS {
                    sum[v] = a[v] + b[v];
                }
                let k = indices.iter().position(|m| *m == sum).unwrap();
                products.push((i as u16, j as u16, k as u16));
            }
        }
        Layout {
            num_vars,
            max_order,
            indices,
            products,
        }
    }

    fn position(&self, mu: &MultiIndex) -> Option<usize> {
        self.indices.iter().position(|m| m == mu)
    }
}

// Enumerates multi-indices of one degree in lexicographically descending
// order of the leading variables: (2,0), (1,1), (0,2).
fn push_degree(out: &mut Vec<MultiIndex>, mut prefix: MultiIndex, var: usize, num_vars: usize, remaining: usize) {
    if var + 1 == num_vars {
        prefix[var] = remaining as u8;
        out.push(prefix);
        return;
    }
    for k in (0..=remaining).rev() {
        prefix[var] = k as u8;
        push_degree(out, prefix, var + 1, num_vars, remaining - k);
    }
}

fn degree(mu: &MultiIndex) -> usize {
    mu.iter().map(|&k| k as usize).sum()
}

fn layouts() -> &'static [Layout] {
    static LAYOUTS: OnceLock<Vec<Layout>> = OnceLock::new();
    LAYOUTS.get_or_init(|| {
        let mut all = Vec::with_capacity(MAX_VARS * (MAX_ORDER + 1));
        for nv in 1..=MAX_VARS {
            for ord in 0..=MAX_ORDER {
                all.push(Layout::build(nv, ord));
            }
        }
        all
    })
}

fn layout(num_vars: usize, max_order: usize) -> Result<&'static Layout, JetError> {
    if !(1..=MAX_VARS).contains(&num_vars) || max_order > MAX_ORDER {
        return Err(JetError::UnsupportedShape { num_vars, max_order });
    }
    Ok(&layouts()[(num_vars - 1) * (MAX_ORDER + 1) + max_order])
}

/// Univariate functions that can be composed with a jet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnaryFn {
    Reciprocal,
    Sqrt,
    Power(f64),
}

/// Truncated Taylor expansion of a scalar function of `num_vars` variables.
#[derive(Clone)]
pub struct Jet {
    layout: &'static Layout,
    coeffs: Vec<f64>,
}

impl std::fmt::Debug for Jet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut map = f.debug_map();
        for (mu, c) in self.layout.indices.iter().zip(&self.coeffs) {
            map.entry(&&mu[..self.layout.num_vars], c);
        }
        map.finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.shape() == other.shape() && self.coeffs == other.coeffs
    }
}

impl Jet {
    pub fn constant(value: f64, num_vars: usize, max_order: usize) -> Result<Self, JetError> {
        let layout = layout(num_vars, max_order)?;
        let mut coeffs = vec![0.0; layout.indices.len()];
        coeffs[0] = value;
        Ok(Jet { layout, coeffs })
    }

    /// The coordinate function `x_index` expanded around `value`.
    pub fn variable(index: usize, value: f64, num_vars: usize, max_order: usize) -> Result<Self, JetError> {
        if max_order == 0 {
            return Err(JetError::UnsupportedShape { num_vars, max_order });
        }
        let mut jet = Jet::constant(value, num_vars, max_order)?;
        if index >= num_vars {
            return Err(JetError::IndexOutOfRange { index, num_vars });
        }
        // degree-1 block starts at 1 and is ordered by variable
        jet.coeffs[1 + index] = 1.0;
        Ok(jet)
    }

    /// A jet with the same shape as `self` and every coefficient zero.
    pub fn zeros_like(&self) -> Self {
        Jet {
            layout: self.layout,
            coeffs: vec![0.0; self.coeffs.len()],
        }
    }

    pub fn constant_like(&self, value: f64) -> Self {
        let mut jet = self.zeros_like();
        jet.coeffs[0] = value;
        jet
    }

    pub fn num_vars(&self) -> usize {
        self.layout.num_vars
    }

    pub fn max_order(&self) -> usize {
        self.layout.max_order
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.layout.num_vars, self.layout.max_order)
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Iterates `(multi-index, Taylor coefficient)` pairs in graded order.
    pub fn terms(&self) -> impl Iterator<Item = (&[u8], f64)> + '_ {
        let nv = self.layout.num_vars;
        self.layout
            .indices
            .iter()
            .zip(self.coeffs.iter().copied())
            .map(move |(mu, c)| (&mu[..nv], c))
    }

    fn check_index(&self, mu: &[u8]) -> Result<MultiIndex, JetError> {
        if mu.len() != self.layout.num_vars {
            return Err(JetError::IndexLength {
                got: mu.len(),
                num_vars: self.layout.num_vars,
            });
        }
        let mut full = [0u8; MAX_VARS];
        full[..mu.len()].copy_from_slice(mu);
        let d = degree(&full);
        if d > self.layout.max_order {
            return Err(JetError::DegreeTooHigh {
                degree: d,
                max_order: self.layout.max_order,
            });
        }
        Ok(full)
    }

    /// Taylor coefficient at `mu` (no factorial applied).
    pub fn coeff(&self, mu: &[u8]) -> Result<f64, JetError> {
        let full = self.check_index(mu)?;
        Ok(self.coeffs[self.layout.position(&full).unwrap()])
    }

    /// Partial derivative `∂^mu f` at the expansion point.
    pub fn extract(&self, mu: &[u8]) -> Result<f64, JetError> {
        let c = self.coeff(mu)?;
        let factorial: f64 = mu.iter().map(|&k| (1..=k as u32).product::<u32>() as f64).product();
        Ok(c * factorial)
    }

    fn check_compatible(&self, other: &Jet) -> Result<(), JetError> {
        if std::ptr::eq(self.layout, other.layout) {
            Ok(())
        } else {
            let (a, b) = self.shape();
            let (c, d) = other.shape();
            Err(JetError::ShapeMismatch(a, b, c, d))
        }
    }

    pub fn try_add(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_compatible(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Jet {
            layout: self.layout,
            coeffs,
        })
    }

    pub fn try_sub(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_compatible(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(Jet {
            layout: self.layout,
            coeffs,
        })
    }

    /// Truncated Cauchy product.
    pub fn multiply(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_compatible(other)?;
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for &(i, j, k) in &self.layout.products {
            coeffs[k as usize] += self.coeffs[i as usize] * other.coeffs[j as usize];
        }
        Ok(Jet {
            layout: self.layout,
            coeffs,
        })
    }

    pub fn scale(&self, factor: f64) -> Jet {
        Jet {
            layout: self.layout,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn add_scalar(&self, value: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += value;
        out
    }

    /// Composes `f` with this jet, where `taylor[k] = f^(k)(a0) / k!` at the
    /// constant term `a0`. Entries past `max_order` are ignored; missing ones
    /// count as zero.
    pub fn compose_univariate(&self, taylor: &[f64]) -> Jet {
        let order = self.layout.max_order;
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let at = |k: usize| taylor.get(k).copied().unwrap_or(0.0);
        let mut acc = self.constant_like(at(order));
        for k in (0..order).rev() {
            acc = acc.multiply(&h).unwrap().add_scalar(at(k));
        }
        acc
    }

    pub fn apply(&self, f: UnaryFn) -> Result<Jet, JetError> {
        let a0 = self.value();
        let order = self.layout.max_order;
        match f {
            UnaryFn::Reciprocal => {
                if a0 == 0.0 || !a0.is_finite() {
                    return Err(JetError::Domain {
                        op: "reciprocal",
                        value: a0,
                    });
                }
                let inv = 1.0 / a0;
                let taylor: Vec<f64> = std::iter::successors(Some(inv), |c| Some(-c * inv))
                    .take(order + 1)
                    .collect();
                Ok(self.compose_univariate(&taylor))
            }
            UnaryFn::Sqrt => {
                if !(a0 > 0.0) || !a0.is_finite() {
                    return Err(JetError::Domain { op: "sqrt", value: a0 });
                }
                Ok(self.compose_univariate(&power_taylor(a0, 0.5, order)))
            }
            UnaryFn::Power(p) => {
                if p.fract() == 0.0 && p >= 0.0 && p <= i32::MAX as f64 {
                    return Ok(self.powi(p as u32));
                }
                let ok = if p.fract() == 0.0 { a0 != 0.0 } else { a0 > 0.0 };
                if !ok || !a0.is_finite() {
                    return Err(JetError::Domain { op: "power", value: a0 });
                }
                Ok(self.compose_univariate(&power_taylor(a0, p, order)))
            }
        }
    }

    pub fn recip(&self) -> Result<Jet, JetError> {
        self.apply(UnaryFn::Reciprocal)
    }

    pub fn sqrt(&self) -> Result<Jet, JetError> {
        self.apply(UnaryFn::Sqrt)
    }

    pub fn powf(&self, p: f64) -> Result<Jet, JetError> {
        self.apply(UnaryFn::Power(p))
    }

    pub fn powi(&self, n: u32) -> Jet {
        let mut acc = self.constant_like(1.0);
        for _ in 0..n {
            acc = acc.multiply(self).unwrap();
        }
        acc
    }

    pub fn try_div(&self, other: &Jet) -> Result<Jet, JetError> {
        self.multiply(&other.recip()?)
    }

    /// Partial derivative with respect to variable `var`, as a jet of one
    /// lower order.
    pub fn derivative(&self, var: usize) -> Result<Jet, JetError> {
        let (nv, ord) = self.shape();
        if var >= nv {
            return Err(JetError::IndexOutOfRange {
                index: var,
                num_vars: nv,
            });
        }
        if ord == 0 {
            return Err(JetError::OrderExhausted);
        }
        let lower = layout(nv, ord - 1)?;
        let coeffs = lower
            .indices
            .iter()
            .map(|mu| {
                let mut up = *mu;
                up[var] += 1;
                let pos = self.layout.position(&up).unwrap();
                self.coeffs[pos] * up[var] as f64
            })
            .collect();
        Ok(Jet { layout: lower, coeffs })
    }

    /// Drops every coefficient above `order`.
    pub fn truncate(&self, order: usize) -> Result<Jet, JetError> {
        if order > self.layout.max_order {
            return Err(JetError::UnsupportedShape {
                num_vars: self.layout.num_vars,
                max_order: order,
            });
        }
        let lower = layout(self.layout.num_vars, order)?;
        // graded layout: the lower shape is a prefix
        Ok(Jet {
            layout: lower,
            coeffs: self.coeffs[..lower.indices.len()].to_vec(),
        })
    }
}

fn power_taylor(a0: f64, p: f64, order: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(order + 1);
    let mut c = a0.powf(p);
    out.push(c);
    for k in 1..=order {
        c *= (p - (k as f64 - 1.0)) / (k as f64 * a0);
        out.push(c);
    }
    out
}

// Operator forms panic on mismatched shapes; the checked methods above
// return the error instead.
macro_rules! binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                self.$checked(rhs).expect("incompatible jet shapes")
            }
        }
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, multiply);

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<&Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        rhs.scale(self)
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs.scale(self)
    }
}

impl Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        self.add_scalar(rhs)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        self.add_scalar(rhs)
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(self, rhs: f64) -> Jet {
        self.add_scalar(-rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}
