//! Flag curvature of two-dimensional Cartan metrics, computed on the
//! cotangent side from the fundamental function alone.
//!
//! The derivative substrate is [`jets`]: truncated multivariate Taylor
//! arithmetic that delivers exact partial derivatives up to total order 4.
//! [`metric`] provides the rotating Kepler family of fundamental functions,
//! [`convexity`] checks the fiberwise convexity of its level curves,
//! [`curvature`] assembles spray coefficients and the flag curvature, and
//! [`scan`] evaluates curvature over slices and lattices. [`identities`]
//! runs the seeded structural checks behind `cartan verify-identities`.
//!
//! # Symbols
//!
//! | code            | meaning                                                   |
//! |-----------------|-----------------------------------------------------------|
//! | `x, y`          | polar coordinates of the base point (`|p|` and its angle) |
//! | `r, t`          | cotangent fiber coordinates dual to `x, y`                |
//! | `u, v`          | tangent fiber coordinates, `u = L*_r`, `v = L*_t`         |
//! | `lstar`         | `L* = F*^2 / 2`                                           |
//! | `g11, g12, g22` | cometric, the fiber Hessian of `L*`                       |
//! | `inv11, ...`    | its inverse, the Finsler metric coefficients              |
//! | `g`, `h_spray`  | spray coefficients `G` and `H`                            |

// `!(x > 0.0)` is used on purpose so that NaN lands on the error path.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convexity;
pub mod curvature;
pub mod error;
pub mod identities;
pub mod jets;
pub mod metric;
pub mod scan;

pub use error::{DomainViolation, Error, Result};
pub use jets::{Jet, JetError};
pub use metric::{MetricParams, PhasePoint};
