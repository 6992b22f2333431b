use nzbc_core::branchfn::*;
use nzbc_core::ellipticwave::EllipticGeometry;
use nzbc_core::C64;
use proptest::prelude::*;

const I: C64 = C64::new(0.0, 1.0);

fn bg1() -> Background {
    Background::symmetric(1.0).unwrap()
}

fn sample_bp() -> BranchPoints {
    BranchPoints::new(C64::new(-0.5, 0.8), -0.7).unwrap()
}

#[test]
fn im_lambda_zero_on_axis_and_cut() {
    let bg = bg1();
    for k in [-4.0, -0.3, 0.0, 0.7, 12.0] {
        assert_eq!(im_lambda(C64::new(k, 0.0), &bg), 0.0);
    }
    assert!(im_lambda(C64::new(0.0, 0.5), &bg).abs() < 1e-15);
}

#[test]
fn im_lambda_satisfies_cauchy_riemann() {
    let bg = bg1();
    let k = C64::new(0.5, 0.1);
    let v = im_lambda(k, &bg);
    assert!(v > 0.0);
    let h = 1e-5;
    let re = |z: C64| lambda(z, &bg, LimitSide::Right).re;
    let dre_dx = (re(k + h) - re(k - h)) / (2.0 * h);
    let dim_dy = (im_lambda(k + I * h, &bg) - im_lambda(k - I * h, &bg)) / (2.0 * h);
    assert!((dre_dx - dim_dy).abs() < 1e-8, "{dre_dx} vs {dim_dy}");
}

#[test]
fn gamma_tends_to_k_squared() {
    let bg = bg1();
    let k = C64::new(1e6, 0.0);
    let g = gamma(k, &bg, &sample_bp(), LimitSide::Right);
    assert!((g / (k * k) - 1.0).norm() < 1e-5);
}

#[test]
fn gamma_jumps_across_b() {
    let bg = bg1();
    let bp = sample_bp();
    let k = C64::new(0.0, 0.4);
    let r = gamma(k, &bg, &bp, LimitSide::Right);
    let l = gamma(k, &bg, &bp, LimitSide::Left);
    assert!((r + l).norm() < 1e-14);
}

/// Continue `k² √((1 + q0²/k²)(1 - α/k)(1 - ᾱ/k))` from large `k` down the
/// positive axis, choosing at each step the root nearest the previous one.
#[test]
fn gamma_matches_tracked_continuation() {
    let bg = bg1();
    let bp = sample_bp();
    let a = bp.alpha();
    let prod = |k: C64| (k * k + 1.0) * (k - a) * (k - a.conj());
    let mut k = C64::new(1e3, 0.0);
    let mut root = k * k * ((1.0 + 1.0 / (k * k)) * (1.0 - a / k) * (1.0 - a.conj() / k)).sqrt();
    let steps = 20000;
    for j in 1..=steps {
        let s = j as f64 / steps as f64;
        k = C64::new(1e3 * (1.0 - s) + s, 0.0);
        let cand = prod(k).sqrt();
        root = if (cand - root).norm() < (cand + root).norm() { cand } else { -cand };
    }
    let g = gamma(C64::new(1.0, 0.0), &bg, &bp, LimitSide::Right);
    assert!((g - root).norm() < 1e-12, "{g} vs {root}");
}

#[test]
fn lambda_qr_limits() {
    let bg = bg1();
    assert!((lambda_qr(C64::new(1e9, 3.0), &bg) - 1.0).norm() < 1e-8);
    for k in [-5.0, -0.2, 0.4, 3.0] {
        assert!((lambda_qr(C64::new(k, 0.0), &bg).norm() - 1.0).abs() < 1e-15);
    }
}

#[test]
fn p_expansion_at_infinity() {
    let bg = bg1();
    let bp = sample_bp();
    let c = C64::new(0.0, -(1.0 + bp.alpha().im) / 2.0);
    for phi in [0.3, 1.4, 2.9, -0.8, -2.2] {
        let k = C64::from_polar(1e3, phi);
        let p = p_fn(k, &bg, &bp, LimitSide::Right);
        let rem = (p - 1.0 - c / k).norm() * k.norm_sqr();
        assert!(rem < 5.0, "remainder {rem} at phase {phi}");
    }
}

#[test]
fn p_jumps_by_i_on_b() {
    let bg = bg1();
    let bp = sample_bp();
    let k = C64::new(0.0, -0.2);
    let ratio = p_fn(k, &bg, &bp, LimitSide::Left) / p_fn(k, &bg, &bp, LimitSide::Right);
    assert!((ratio - I).norm() < 1e-14);
}

#[test]
fn p_minus_inverse_vanishes_at_k_star() {
    let bg = bg1();
    let geo = EllipticGeometry::new(-2.0 * 2f64.sqrt(), &bg).unwrap();
    let bp = geo.branch_points();
    let a = geo.alpha;
    let k_star = a.re / (1.0 + a.im);
    assert!((geo.k_star - k_star).abs() < 1e-15);
    let p = p_fn(C64::new(k_star, 0.0), &bg, bp, LimitSide::Right);
    assert!((p - 1.0 / p).norm() < 1e-12, "p(k*) = {p}");
    let off = p_fn(C64::new(k_star + 0.3, 0.0), &bg, bp, LimitSide::Right);
    assert!((off - 1.0 / off).norm() > 1e-3);
}

#[test]
fn theta_phase_vanishes_at_origin_when_xi_zero() {
    assert_eq!(theta_phase(0.0, C64::new(0.0, 0.0), &bg1(), LimitSide::Right), C64::new(0.0, 0.0));
}

#[test]
fn re_i_theta_near_real_axis() {
    let bg = bg1();
    let xi = -3.0;
    let y = 1e-4;
    for kr in [-2.0f64, -0.6, 0.5, 1.7] {
        let th = theta_phase(xi, C64::new(kr, y), &bg, LimitSide::Right);
        let got = (I * th).re;
        let want = kr.signum() * 4.0 * (kr * kr - xi / 4.0 * kr + 0.5) * y / (kr * kr + 1.0).sqrt();
        assert!((got - want).abs() < 10.0 * y.powi(3) + 1e-15, "{got} vs {want} at {kr}");
    }
}

#[test]
fn re_i_theta_far_above() {
    let bg = bg1();
    let xi = -3.0;
    let kr = 0.4;
    let y = 1e4;
    let got = (I * theta_phase(xi, C64::new(kr, y), &bg, LimitSide::Right)).re;
    let want = (4.0 * kr - xi) * y;
    assert!((got - want).abs() < 10.0 / y, "{got} vs {want}");
}

#[test]
fn sign_changes_at_plane_wave_roots() {
    let bg = bg1();
    let xi = -6.0;
    let s = |k: f64| (I * theta_phase(xi, C64::new(k, 1e-6), &bg, LimitSide::Right)).re.signum();
    let eps = 1e-4;
    let mut changes = Vec::new();
    let n = 4000;
    let grid: Vec<f64> = (0..=n).map(|j| -3.0 + 3.0 * j as f64 / n as f64).collect();
    for w in grid.windows(2) {
        if s(w[0]) != s(w[1]) {
            changes.push(0.5 * (w[0] + w[1]));
        }
    }
    // sign also flips at k = 0 where λ changes branch on the real axis
    let interior: Vec<f64> = changes.into_iter().filter(|k| k.abs() > 1e-3).collect();
    assert_eq!(interior.len(), 2, "{interior:?}");
    assert!((interior[0] + 1.0).abs() < 1e-3 + eps);
    assert!((interior[1] + 0.5).abs() < 1e-3 + eps);
}

#[test]
fn eigenmatrix_determinant_and_limit() {
    let bg = bg1();
    let k = C64::new(0.7, 0.0);
    for at in [Infinity::Minus, Infinity::Plus] {
        let e = boundary_eigenmatrix(&bg, at, k, LimitSide::Right).unwrap();
        let d = d_det(k, &bg, LimitSide::Right).unwrap();
        assert!((e.det() - d).norm() < 1e-14);
        let far = boundary_eigenmatrix(&bg, at, C64::new(1e8, 0.0), LimitSide::Right).unwrap();
        assert!((far - nzbc_core::mat2::Mat2::identity()).max_abs() < 1e-7);
    }
    assert!(boundary_eigenmatrix(&bg, Infinity::Plus, -I, LimitSide::Right).is_err());
}

#[test]
fn background_rejects_wrong_modulus() {
    assert!(Background::new(1.0, C64::new(1.1, 0.0), C64::new(1.0, 0.0)).is_err());
    assert!(Background::new(-1.0, C64::new(-1.0, 0.0), C64::new(-1.0, 0.0)).is_err());
    assert!(BranchPoints::new(C64::new(0.0, -1.0), 0.0).is_err());
}

fn off_cut() -> impl Strategy<Value = C64> {
    (-4.0f64..4.0, -4.0f64..4.0)
        .prop_filter("away from the cuts", |(x, y)| x.abs() > 1e-3 && (x + 0.5).abs() > 1e-3 && (x + 0.7).abs() > 1e-3 || y.abs() > 1.01)
        .prop_map(|(x, y)| C64::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lambda_squares_to_quadratic(k in off_cut()) {
        let bg = bg1();
        let l = lambda(k, &bg, LimitSide::Right);
        prop_assert!((l * l - (k * k + 1.0)).norm() < 1e-13 * (1.0 + k.norm_sqr()));
        prop_assert_eq!(l, lambda(k, &bg, LimitSide::Left));
    }

    #[test]
    fn sides_differ_only_on_b(y in -0.999f64..0.999) {
        let bg = bg1();
        let k = C64::new(0.0, y);
        prop_assert!((lambda(k, &bg, LimitSide::Right) + lambda(k, &bg, LimitSide::Left)).norm() < 1e-15);
    }

    #[test]
    fn gamma_squares_to_quartic(k in off_cut()) {
        let bg = bg1();
        let bp = sample_bp();
        let a = bp.alpha();
        let g = gamma(k, &bg, &bp, LimitSide::Right);
        let want = (k * k + 1.0) * (k - a) * (k - a.conj());
        prop_assert!((g * g - want).norm() < 1e-12 * (1.0 + want.norm()));
    }

    #[test]
    fn p_fourth_power(k in off_cut()) {
        let bg = bg1();
        let bp = sample_bp();
        let a = bp.alpha();
        let p = p_fn(k, &bg, &bp, LimitSide::Right);
        let want = (k - I) * (k - a) / ((k + I) * (k - a.conj()));
        prop_assert!((p.powi(4) - want).norm() < 1e-12 * (1.0 + want.norm()));
    }
}
