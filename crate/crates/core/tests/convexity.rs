use approx::assert_relative_eq;
use cartan_core::convexity::{
    f_of_t, hessian_form, hessian_form_matrix, hessian_form_reduced, lambda_roots, project_to_level, verify_convexity,
    Verdict,
};
use cartan_core::metric::{fstar_cartesian, CartesianFiberPoint};
use cartan_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};

/// Random `(p, C, a)` with `a|p| < C²`, returned as a fiber point carrying
/// the effective momentum `a p` and a random `q`.
fn random_admissible(rng: &mut impl Rng) -> CartesianFiberPoint {
    loop {
        let a = rng.gen_range(0.0..3.0);
        let pn = rng.gen_range(0.0..3.0);
        let pa: f64 = rng.gen_range(0.0..TAU);
        let c_half = rng.gen_range(0.2..3.0);
        if a * pn >= c_half * c_half {
            continue;
        }
        let qa: f64 = rng.gen_range(0.0..TAU);
        let qn = rng.gen_range(0.1..5.0);
        let pt = CartesianFiberPoint::new([pn * pa.cos(), pn * pa.sin()], [qn * qa.cos(), qn * qa.sin()], c_half);
        return pt.with_rotation(a);
    }
}

#[test]
fn periodic_function_is_positive_below_four_ninths() {
    for i in 0..200 {
        let a = (4.0 / 9.0) * i as f64 / 200.0;
        for j in 0..720 {
            let t = TAU * j as f64 / 720.0;
            assert!(f_of_t(a, t) > 0.0, "f({a}, {t}) = {}", f_of_t(a, t));
        }
    }
}

#[test]
fn periodic_function_special_values() {
    for &a in &[0.1, 0.35, 0.44] {
        assert_relative_eq!(f_of_t(a, PI), (1.0 - a) * (1.0 - a), epsilon = 1e-15);
        assert_relative_eq!(f_of_t(a, 0.0), (1.0 + a) * (1.0 + a), epsilon = 1e-15);
    }
    for &a in &[0.34f64, 0.4, 0.44] {
        let t = (-1.0 / (3.0 * a)).acos();
        assert_relative_eq!(f_of_t(a, t), 2.0 * (1.0 / 3.0 - a * a), epsilon = 1e-14);
    }
    // both candidate minima stay positive at the 4/9 bound
    let a = 4.0f64 / 9.0;
    assert!((1.0 - a).powi(2) > 0.0 && 2.0 * (1.0 / 3.0 - a * a) > 0.0);
}

#[test]
fn form_without_momentum() {
    let pt = CartesianFiberPoint::new([0.0, 0.0], [0.3, -1.1], 1.0);
    let qn: f64 = 0.3f64.hypot(1.1);
    assert_relative_eq!(hessian_form(&pt).unwrap(), qn.powi(-2), max_relative = 1e-14);
}

#[test]
fn form_matches_periodic_function() {
    // <p⊥, q> = |p||q| cos t and |<p, q>| = |p||q| |sin t| give
    // form = |q|⁻² f(|p||q|², t)
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..500 {
        let pt = random_admissible(&mut rng);
        let (pn, qn) = (pt.p_norm(), pt.q_norm());
        if pn < 1e-3 {
            continue;
        }
        let t = pt.dot().abs().atan2(pt.perp_dot());
        let expected = f_of_t(pn * qn * qn, t) / (qn * qn);
        assert_relative_eq!(
            hessian_form(&pt).unwrap(),
            expected,
            max_relative = 1e-10,
            epsilon = 1e-14
        );
    }
}

#[test]
fn form_positive_on_level_curves() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..1000 {
        let on_level = project_to_level(&random_admissible(&mut rng)).unwrap();
        let matrix = hessian_form_matrix(&on_level).unwrap();
        let reduced = hessian_form_reduced(&on_level).unwrap();
        assert!(matrix > 0.0, "{on_level:?}");
        assert!((matrix - reduced).abs() <= 1e-10 * matrix.abs().max(reduced.abs()));
    }
}

#[test]
fn level_projection_zeroes_the_hamiltonian() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..200 {
        let pt = random_admissible(&mut rng);
        let on_level = project_to_level(&pt).unwrap();
        let h = cartan_core::convexity::hp_value(&on_level).unwrap();
        assert!(h.abs() < 1e-12 * (1.0 + 2.0 * pt.half_offset), "{h}");
    }
}

#[test]
fn root_ordering() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..100 {
        let pt = random_admissible(&mut rng);
        let roots = lambda_roots(&pt).unwrap();
        let scale = pt.half_offset * pt.q_norm();
        assert!(roots.lambda_minus.abs() < scale || roots.lambda_minus_degenerate);
        assert!(roots.lambda0.abs() > scale);
        assert!(roots.lambda_plus.abs() > scale);
        if !roots.sign_flipped {
            // fstar_cartesian already carries the effective momentum
            assert_relative_eq!(roots.lambda0, fstar_cartesian(&pt, 1.0).unwrap(), max_relative = 1e-12);
        }
    }
}

#[test]
fn degenerate_root_is_flagged() {
    // p parallel to q
    let pt = CartesianFiberPoint::new([0.5, 0.0], [2.0, 0.0], 1.0);
    let roots = lambda_roots(&pt).unwrap();
    assert_relative_eq!(roots.lambda0, 4.0);
    assert_relative_eq!(roots.lambda_plus, -4.0);
    assert_eq!(roots.lambda_minus, 0.0);
    assert!(roots.lambda_minus_degenerate);
}

#[test]
fn lowest_energy_is_convex() {
    // a = 1, c = 1.51, |p| = 1: 2C = 1/2 + c
    let c_half = 0.5 * (0.5 + 1.51);
    let report = verify_convexity([1.0, 0.0], c_half, 1.0, 720).unwrap();
    assert_eq!(report.verdict, Some(Verdict::Convex));
    assert!(report.min_form.unwrap() > 0.0);
    assert!(report.failure.is_none());
}

#[test]
fn hypothesis_violation_is_a_precondition_error() {
    assert!(matches!(
        verify_convexity([3.0, 0.0], 1.0, 1.0, 16),
        Err(Error::Precondition(_))
    ));
    assert!(matches!(
        lambda_roots(&CartesianFiberPoint::new([3.0, 0.0], [1.0, 0.0], 1.0)),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn empty_sample_has_no_verdict() {
    let report = verify_convexity([0.2, 0.1], 1.0, 1.0, 0).unwrap();
    assert_eq!(report.verdict, None);
}
