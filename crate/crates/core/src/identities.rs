//! Structural identities of the metric family and the curvature pipeline,
//! checked on seeded random samples.
//!
//! [`run_identities`] is what `cartan verify-identities` prints. Every check
//! reports the worst deviation it saw next to the tolerance it was held to.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::curvature::{flag_curvature_closed_form, flag_curvature_value, FnMetric};
use crate::error::Result;
use crate::jets::Jet;
use crate::metric::{self, MetricParams, PhasePoint};

/// Seed used by `verify-identities` unless overridden.
pub const DEFAULT_SEED: u64 = 0x00C0_FFEE_2013;

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub samples: usize,
    pub worst: f64,
    pub tolerance: f64,
}

fn outcome(name: &'static str, samples: usize, worst: f64, tolerance: f64) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: worst.is_finite() && worst <= tolerance,
        samples,
        worst,
        tolerance,
    }
}

fn rel_dev(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Draws admissible parameters with `a ∈ [0, 3]`, a quarter of them with
/// `a = 0`.
pub fn random_params(rng: &mut impl Rng) -> MetricParams {
    let a = if rng.gen_bool(0.25) {
        0.0
    } else {
        rng.gen_range(0.05..3.0)
    };
    let critical = MetricParams::new(a, 1.0).critical_energy();
    MetricParams::new(a, critical + rng.gen_range(0.01..4.0))
}

/// Draws a phase point with `|x| ∈ [0.1, 5]` and a unit-scale fiber.
pub fn random_point(rng: &mut impl Rng) -> PhasePoint {
    let x = rng.gen_range(0.1..5.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let rho = rng.gen_range(0.2..3.0);
    PhasePoint::new(x, rng.gen_range(-3.0..3.0), rho * phi.sin(), rho * phi.cos())
}

fn random_curvature_point(rng: &mut impl Rng) -> PhasePoint {
    // keep |t| away from zero so the flag pole is regular
    loop {
        let pt = random_point(rng);
        if pt.t.abs() > 0.05 * pt.r.abs().max(pt.t.abs()) {
            return pt;
        }
    }
}

pub fn check_fstar_homogeneity(rng: &mut impl Rng, n: usize) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let params = random_params(rng);
        let pt = random_point(rng);
        let lambda = rng.gen_range(0.1..10.0);
        let scaled = PhasePoint::new(pt.x, pt.y, lambda * pt.r, lambda * pt.t);
        match (metric::fstar_polar(&params, &pt), metric::fstar_polar(&params, &scaled)) {
            (Ok(f), Ok(g)) => worst = worst.max(rel_dev(g, lambda * f)),
            _ => worst = f64::INFINITY,
        }
    }
    outcome("fstar fiber 1-homogeneity", n, worst, 1e-12)
}

pub fn check_euler_identity(rng: &mut impl Rng, n: usize) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let params = random_params(rng);
        let pt = random_point(rng);
        let Ok(jet) = metric::lstar_jet(&params, &pt, 1) else {
            worst = f64::INFINITY;
            continue;
        };
        let lr = jet.extract(&[0, 1, 0]).unwrap();
        let lt = jet.extract(&[0, 0, 1]).unwrap();
        worst = worst.max(rel_dev(pt.r * lr + pt.t * lt, 2.0 * jet.value()));
    }
    outcome("lstar Euler identity", n, worst, 1e-10)
}

pub fn check_fstar_y_invariance(rng: &mut impl Rng, n: usize) -> CheckOutcome {
    let mut mismatches = 0.0;
    for _ in 0..n {
        let params = random_params(rng);
        let pt = random_point(rng);
        let moved = PhasePoint::new(pt.x, rng.gen_range(-10.0..10.0), pt.r, pt.t);
        let a = metric::fstar_polar(&params, &pt).map(f64::to_bits);
        let b = metric::fstar_polar(&params, &moved).map(f64::to_bits);
        if a.is_err() || a.ok() != b.ok() {
            mismatches += 1.0;
        }
    }
    outcome("fstar y-invariance (bitwise)", n, mismatches, 0.0)
}

pub fn check_scaling(rng: &mut impl Rng, n: usize) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let a = rng.gen_range(0.05..20.0);
        let params = MetricParams::new(
            a,
            MetricParams::new(a, 1.0).critical_energy() + rng.gen_range(0.01..5.0),
        );
        let pt = random_point(rng);
        let result = metric::scaling_reduce(&params, &pt)
            .and_then(|(p1, q1)| Ok((metric::fstar_polar(&params, &pt)?, metric::fstar_polar(&p1, &q1)?)));
        match result {
            Ok((lhs, rhs)) => worst = worst.max(rel_dev(lhs, a.cbrt() * rhs)),
            Err(_) => worst = f64::INFINITY,
        }
    }
    outcome("scaling reduction to a = 1", n, worst, 1e-12)
}

pub fn check_polar_cartesian(rng: &mut impl Rng, n: usize) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let params = random_params(rng);
        let pt = random_point(rng);
        let cart = metric::cartesian_from_polar(&params, &pt);
        match (
            metric::fstar_polar(&params, &pt),
            metric::fstar_cartesian(&cart, params.a),
        ) {
            (Ok(f), Ok(g)) => worst = worst.max(rel_dev(f, g)),
            _ => worst = f64::INFINITY,
        }
    }
    outcome("polar vs Cartesian fstar", n, worst, 1e-12)
}

/// `|ΔK| / max(1, |K|)`.
fn k_dev(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

pub fn check_curvature_symmetries(rng: &mut impl Rng, n: usize) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let params = random_params(rng);
        let pt = random_curvature_point(rng);
        let lambda = rng.gen_range(0.2..5.0);
        let moved = PhasePoint::new(pt.x, rng.gen_range(-10.0..10.0), lambda * pt.r, lambda * pt.t);
        match (
            flag_curvature_value(&params, &pt),
            flag_curvature_value(&params, &moved),
        ) {
            (Ok(k1), Ok(k2)) => worst = worst.max(k_dev(k1, k2)),
            _ => worst = f64::INFINITY,
        }
    }
    outcome("K fiber 0-homogeneity and y-invariance", n, worst, 1e-9)
}

/// The Kepler `L*` routed through the generic callback, where `y` is seeded
/// and its derivatives are computed rather than assumed zero.
pub fn check_callback_path(rng: &mut impl Rng, n: usize) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let params = random_params(rng);
        let pt = random_curvature_point(rng);
        let callback =
            FnMetric::new(move |x: &Jet, _y: &Jet, r: &Jet, t: &Jet| metric::lstar_from_jets(&params, x, r, t));
        match (flag_curvature_value(&params, &pt), flag_curvature_value(&callback, &pt)) {
            (Ok(k1), Ok(k2)) => worst = worst.max(k_dev(k1, k2)),
            _ => worst = f64::INFINITY,
        }
    }
    outcome("K via generic callback path", n, worst, 1e-9)
}

/// Central finite-difference estimate of `∂^mu f` at `point`, using the
/// tensor product of one-dimensional stencils with step `h`.
pub fn central_difference<F>(f: &F, point: &[f64], mu: &[u8], h: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    fn stencil(order: u8) -> &'static [(f64, f64)] {
        // (offset in steps, weight) before dividing by h^order
        match order {
            0 => &[(0.0, 1.0)],
            1 => &[(1.0, 0.5), (-1.0, -0.5)],
            2 => &[(1.0, 1.0), (0.0, -2.0), (-1.0, 1.0)],
            3 => &[(2.0, 0.5), (1.0, -1.0), (-1.0, 1.0), (-2.0, -0.5)],
            4 => &[(2.0, 1.0), (1.0, -4.0), (0.0, 6.0), (-1.0, -4.0), (-2.0, 1.0)],
            _ => panic!("stencil order {order} unsupported"),
        }
    }
    fn recurse<F: Fn(&[f64]) -> f64>(f: &F, pt: &mut Vec<f64>, mu: &[u8], var: usize, h: f64) -> f64 {
        if var == mu.len() {
            return f(pt);
        }
        let base = pt[var];
        let mut acc = 0.0;
        for &(offset, weight) in stencil(mu[var]) {
            pt[var] = base + offset * h;
            acc += weight * recurse(f, pt, mu, var + 1, h);
        }
        pt[var] = base;
        acc / h.powi(mu[var] as i32)
    }
    let mut pt = point.to_vec();
    recurse(f, &mut pt, mu, 0, h)
}

/// Step and relative tolerance for a finite-difference derivative of the
/// given total order.
pub fn fd_step_and_tolerance(order: usize) -> (f64, f64) {
    match order {
        0 => (0.0, 1e-15),
        1 => (1e-6, 1e-5),
        2 => (1e-4, 1e-5),
        3 => (2e-3, 1e-3),
        _ => (5e-3, 1e-3),
    }
}

/// Compares every partial of `jet` (up to its order) against central
/// differences of `f`. Returns the worst ratio of error to tolerance. Errors
/// are measured relative to the largest partial of the same total order (at
/// least 1), since stencil truncation error is driven by the neighbouring
/// derivatives and a partial that happens to vanish has no scale of its own.
pub fn fd_worst_ratio<F>(jet: &Jet, f: &F, point: &[f64]) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let order_of = |mu: &[u8]| mu.iter().map(|&k| k as usize).sum::<usize>();
    let mut layer_scale = vec![1.0f64; jet.max_order() + 1];
    for (mu, _) in jet.terms() {
        let k = order_of(mu);
        layer_scale[k] = layer_scale[k].max(jet.extract(mu).unwrap().abs());
    }
    let mut worst: f64 = 0.0;
    for (mu, _) in jet.terms() {
        let order = order_of(mu);
        if order == 0 {
            continue;
        }
        let exact = jet.extract(mu).unwrap();
        let (h, tol) = fd_step_and_tolerance(order);
        let approx = central_difference(f, point, mu, h);
        worst = worst.max((approx - exact).abs() / layer_scale[order] / tol);
    }
    worst
}

fn smooth_test_function(v: &[Jet; 4]) -> Result<Jet> {
    let [x, y, z, w] = v;
    let base = (x * x + y * z + 2.0).sqrt()?;
    let denom = (w * w + x * 0.5 + 3.0).recip()?;
    Ok(base * denom + (y * y + 1.0).powf(1.5)? * z)
}

pub fn check_jets_against_fd(rng: &mut impl Rng, n: usize) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        // Kepler L* in (x, r, t)
        let params = random_params(rng);
        let x = rng.gen_range(0.5..3.0);
        let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let pt = PhasePoint::new(x, 0.0, phi.sin(), phi.cos());
        let f = |v: &[f64]| metric::lstar(&params, &PhasePoint::new(v[0], 0.0, v[1], v[2])).unwrap_or(f64::NAN);
        match metric::lstar_jet(&params, &pt, 4) {
            Ok(jet) => worst = worst.max(fd_worst_ratio(&jet, &f, &[pt.x, pt.r, pt.t])),
            Err(_) => worst = f64::INFINITY,
        }

        // four-variable test function
        let point: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let seeded = |i: usize| Jet::variable(i, point[i], 4, 4).unwrap();
        let jets = [seeded(0), seeded(1), seeded(2), seeded(3)];
        let g = |v: &[f64]| {
            let c = |i: usize| Jet::constant(v[i], 4, 0).unwrap();
            smooth_test_function(&[c(0), c(1), c(2), c(3)])
                .map(|j| j.value())
                .unwrap_or(f64::NAN)
        };
        match smooth_test_function(&jets) {
            Ok(jet) => worst = worst.max(fd_worst_ratio(&jet, &g, &point)),
            Err(_) => worst = f64::INFINITY,
        }
    }
    // ratio of error to the per-order tolerance
    outcome("jets vs central differences (error/tol)", 2 * n, worst, 1.0)
}

/// The closed-form grid: `c ∈ {1.51, 1.55, 1.65, 2, 5}`, 200 points on each
/// of `x ∈ [0.3, 10]` and `x ∈ [-10, -0.3]`.
pub fn closed_form_grid() -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &c in &[1.51, 1.55, 1.65, 2.0, 5.0] {
        for sign in [-1.0, 1.0] {
            for i in 0..200 {
                out.push((c, sign * (0.3 + 9.7 * i as f64 / 199.0)));
            }
        }
    }
    out
}

/// Worst relative deviation between the pipeline and the closed form over
/// [`closed_form_grid`], and the number of points compared.
pub fn closed_form_agreement() -> (f64, usize) {
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for (c, x) in closed_form_grid() {
        let Ok(oracle) = flag_curvature_closed_form(c, x) else {
            continue;
        };
        compared += 1;
        match flag_curvature_value(&MetricParams::new(1.0, c), &PhasePoint::new(x, 0.0, 0.0, x)) {
            Ok(k) => worst = worst.max(rel_dev(k, oracle)),
            Err(_) => worst = f64::INFINITY,
        }
    }
    (worst, compared)
}

pub fn check_closed_form() -> CheckOutcome {
    let (worst, compared) = closed_form_agreement();
    outcome("pipeline vs closed form on (0, x)", compared, worst, 1e-8)
}

/// Max pairwise relative deviation of `K` at `a = 0` over `n` random points,
/// together with the mean value.
pub fn inertial_spread(rng: &mut impl Rng, c: f64, n: usize) -> (f64, f64) {
    let params = MetricParams::new(0.0, c);
    let mut values = Vec::with_capacity(n);
    while values.len() < n {
        let pt = random_curvature_point(rng);
        if let Ok(k) = flag_curvature_value(&params, &pt) {
            values.push(k);
        } else {
            return (f64::INFINITY, f64::NAN);
        }
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / n as f64;
    // max over pairs of |k_i - k_j| / min(|k_i|, |k_j|) is attained at the extremes
    ((hi - lo) / lo.abs().min(hi.abs()), mean)
}

pub fn check_inertial_constancy(rng: &mut impl Rng, n: usize) -> CheckOutcome {
    let (spread, _) = inertial_spread(rng, 2.0, n);
    outcome("K constant at a = 0 (max pairwise rel.)", n, spread, 1e-6)
}

pub fn run_identities(seed: u64) -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        check_fstar_homogeneity(&mut rng, 1000),
        check_euler_identity(&mut rng, 1000),
        check_fstar_y_invariance(&mut rng, 1000),
        check_scaling(&mut rng, 1000),
        check_polar_cartesian(&mut rng, 100),
        check_curvature_symmetries(&mut rng, 200),
        check_callback_path(&mut rng, 100),
        check_jets_against_fd(&mut rng, 20),
        check_closed_form(),
        check_inertial_constancy(&mut rng, 500),
    ]
}
