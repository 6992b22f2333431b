use nzbc_core::branchfn::Background;
use nzbc_core::elliptic::{theta_j, theta_j_prime};
use nzbc_core::ellipticwave::*;
use nzbc_core::planewave::region_boundary;
use nzbc_core::quad::QuadratureSpec;
use nzbc_core::scattering::{BoxDatum, InitialDatum, ReflectionData};
use nzbc_core::{Error, C64};
use proptest::prelude::*;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::OnceLock;

const I: C64 = C64::new(0.0, 1.0);

fn bg(q0: f64) -> Background {
    Background::symmetric(q0).unwrap()
}

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn box_datum() -> InitialDatum {
    InitialDatum::Box(BoxDatum::new(0.5, 0.45, 0.0, 1.0).unwrap())
}

/// Constants of the `L = 1` box at `ξ = -1`, shared by several tests.
fn params() -> &'static EllipticParams {
    static P: OnceLock<EllipticParams> = OnceLock::new();
    P.get_or_init(|| EllipticParams::for_datum(-1.0, &box_datum(), &spec()).unwrap())
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn k0_endpoints_and_range() {
    let b = bg(1.0);
    let bound = region_boundary(&b);
    assert_eq!(solve_k0(0.0, &b).unwrap(), 0.0);
    assert!((solve_k0(-bound, &b).unwrap() + FRAC_1_SQRT_2).abs() < 1e-12);
    assert!(solve_k0(-1.01 * bound, &b).is_err());
    assert!(solve_k0(0.5, &b).is_err());
    let mut last = 0.0;
    for j in 1..12 {
        let xi = -bound * j as f64 / 12.0;
        let k0 = solve_k0(xi, &b).unwrap();
        assert!(k0 >= xi / 4.0 && k0 < xi / 8.0, "k0 {k0} at {xi}");
        assert!(k0 < last);
        last = k0;
    }
}

/// Plain bisection on the scaled condition, started from the same bracket.
#[test]
fn k0_matches_bisection() {
    let q0 = 0.5;
    let b = bg(q0);
    let xi = -1.7;
    let x = -xi / (8.0 * q0);
    let s = QuadratureSpec { rel_tol: 1e-13, abs_tol: 1e-15, ..spec() };
    let f = |y: f64| k0_condition(y, x, &s).unwrap();
    let (mut lo, mut hi) = (0.0, 2.0 * x);
    let flo = f(lo);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let k0 = q0 * (0.5 * (lo + hi) - 2.0 * x);
    assert!((solve_k0(xi, &b).unwrap() - k0).abs() < 1e-12);
}

#[test]
fn alpha_and_modulus() {
    let q0 = 0.5;
    let b = bg(q0);
    for xi in [-0.3, -1.0, -2.0, -2.7] {
        let g = EllipticGeometry::new(xi, &b).unwrap();
        assert!((g.alpha.re - (-g.k0 + xi / 4.0)).abs() < 1e-15);
        let im2 = 2.0 * g.k0 * g.k0 - 0.5 * xi * g.k0 + q0 * q0;
        assert!((g.alpha.im - im2.sqrt()).abs() < 1e-15);
        let m = 2.0 * (q0 * g.alpha.im).sqrt() / (g.alpha + I * q0).norm();
        assert!((g.m.value() - m).abs() < 1e-15 && m > 0.0 && m < 1.0);
        assert!((g.k_star - q0 * g.alpha.re / (q0 + g.alpha.im)).abs() < 1e-15);
    }
    assert!(EllipticGeometry::new(0.0, &b).is_err());
    let edge = EllipticGeometry::new(-region_boundary(&b), &b).unwrap();
    assert_eq!(edge.m.value(), 0.0);
    assert_eq!(edge.alpha.im, 0.0);
}

#[test]
fn normalisation_and_periods() {
    let b = bg(0.5);
    for xi in [-0.4, -1.3, -2.5] {
        let g = EllipticGeometry::new(xi, &b).unwrap();
        let c = g.c_quadrature(&spec()).unwrap();
        assert!(rel(c, g.c_norm) < 1e-8, "C {c} vs {}", g.c_norm);
        let tau = g.tau_from_cycles(&spec()).unwrap();
        assert!((tau - g.tau).norm() < 1e-8, "τ {tau} vs {}", g.tau);
    }
}

#[test]
fn omega_big_forms() {
    let b = bg(0.5);
    for xi in [-0.2, -0.9, -1.8, -2.6] {
        let g = EllipticGeometry::new(xi, &b).unwrap();
        let contour = g.omega_big_contour(&spec()).unwrap();
        assert!(contour.im.abs() < 1e-9);
        assert!((contour.re + g.omega_big).abs() < 1e-8 * g.omega_big.abs());
        // the jump of h equals 2h(α)
        let h = h_at_alpha(xi, g.k0, &b, &spec()).unwrap();
        assert!((2.0 * h - contour).norm() < 1e-8 * contour.norm());
        assert!(g.omega_big * (xi - 2.0 * g.alpha.re) > 0.0);
    }
    let one = bg(1.0);
    let near = EllipticGeometry::new(-region_boundary(&one) * (1.0 - 1e-10), &one).unwrap();
    assert!((near.omega_big + 6.0 * 3f64.sqrt()).abs() < 1e-5);
}

#[test]
fn h_condition_at_alpha() {
    let b = bg(0.5);
    for xi in [-0.5, -1.2, -2.0, -2.7] {
        let g = EllipticGeometry::new(xi, &b).unwrap();
        assert!(g.h_residual_at_alpha(&spec()).unwrap().abs() < 1e-8);
        let off = h_at_alpha(xi, g.k0 + 1e-3, &b, &spec()).unwrap();
        assert!(off.im.abs() > 1e-5, "insensitive at {xi}: {off}");
    }
    let edge = -region_boundary(&b);
    assert_eq!(h_at_alpha(edge, -0.5 * FRAC_1_SQRT_2, &b, &spec()).unwrap(), C64::new(0.0, 0.0));
}

#[test]
fn abel_map_values() {
    let b = bg(0.5);
    let g = EllipticGeometry::new(-1.1, &b).unwrap();
    let s = spec();
    assert_eq!(g.abel_map(I * 0.5, &s).unwrap(), C64::new(0.0, 0.0));
    let va = g.abel_map(g.alpha.conj(), &s).unwrap();
    assert!(g.lattice_distance(2.0 * va) < 1e-8, "{va}");
    // v∞: 2v∞ - 1/2 is imaginary modulo ℤ
    let v = g.v_infinity(&s).unwrap();
    let w = 2.0 * v - 0.5;
    assert!((w.re - w.re.round()).abs() < 1e-8, "{w}");
    // c = v(k*) + (1 + τ)/2 satisfies c ≡ 1/2 - v∞
    let c = g.c_const(&s).unwrap();
    assert!(g.lattice_distance(c - (0.5 - v)) < 1e-8, "{c} vs {}", 0.5 - v);
    // crossing a cut is refused
    assert!(g.abel_map_along(&[I * 0.5, C64::new(-1.0, 0.0), C64::new(1.0, 0.0)], &s).is_err());
}

#[test]
fn v_infinity_has_finite_boundary_limit() {
    let b = bg(0.5);
    let bound = region_boundary(&b);
    let a = EllipticGeometry::new(-bound * (1.0 - 1e-6), &b).unwrap().v_infinity(&spec()).unwrap();
    let c = EllipticGeometry::new(-bound * (1.0 - 1e-4), &b).unwrap().v_infinity(&spec()).unwrap();
    assert!(a.norm().is_finite() && (a - c).norm() < 1e-2);
}

#[test]
fn h0_is_real_and_decays() {
    let b = bg(0.5);
    for xi in [-0.5, -1.5, -2.5] {
        let g = EllipticGeometry::new(xi, &b).unwrap();
        assert!(g.h0(&spec()).unwrap().im.abs() < 1e-8);
        for r in [1e2, 1e4, 1e6] {
            for phase in [0.3, 1.7, -2.4] {
                let z = C64::from_polar(r, phase);
                assert!((g.h0_integrand(z) * z * z).norm() < 10.0);
            }
        }
        // far form agrees with the direct difference where both are accurate
        let z = C64::new(40.0, 3.0);
        let direct = g.cubic(z) / g.gamma(z) - (z - 0.25 * xi);
        assert!((g.h0_integrand(z) - direct).norm() < 1e-9);
    }
}

#[test]
fn omega_small_is_real_and_path_independent() {
    let b = bg(0.5);
    let r = ReflectionData::for_datum(&box_datum());
    let g = EllipticGeometry::new(-1.0, &b).unwrap();
    let straight = reflection_constants(&g, &r, &JumpContours::straight(&g), &spec()).unwrap();
    assert!(straight.omega_residue < 1e-8);
    assert!(straight.g_inf_residue < 1e-8);
    let mid = 0.5 * (g.alpha + g.k0) + C64::new(0.05, -0.03);
    let bent = reflection_constants(&g, &r, &JumpContours::through(&g, mid), &spec()).unwrap();
    assert!((straight.omega_small - bent.omega_small).abs() < 1e-7);
    assert!((straight.g_inf - bent.g_inf).abs() < 1e-7);
    let p = params();
    assert!((p.omega_small - straight.omega_small).abs() < 1e-12);
    assert!((p.x_offset - x_offset(p.omega_small, &b)).abs() < 1e-15);
}

#[test]
fn reflectionless_data_are_rejected() {
    let b = bg(0.5);
    let g = EllipticGeometry::new(-1.0, &b).unwrap();
    let err = reflection_constants(&g, &ReflectionData::Constant(C64::new(0.0, 0.0)), &JumpContours::straight(&g), &spec());
    assert!(matches!(err, Err(Error::Region(nzbc_core::error::RegionError::Reflectionless { .. }))), "{err:?}");
}

#[test]
fn params_realness_and_side() {
    let p = params();
    assert_eq!(p.side, EllipticSide::Left);
    assert!(p.omega_residue < 1e-8 && p.g_inf_residue < 1e-8 && p.h0_residue < 1e-8);
    assert!((p.g_inf_big - p.h0 - 0.25).abs() < 1e-15);
    assert!(EllipticParams::for_datum(0.0, &box_datum(), &spec()).is_err());
    assert!(p.q_asymp(-10.0, 5.0).is_err());
    assert!(p.q_asymp(-10.0, 10.0).is_ok());
}

/// `|q_asymp|²` from the theta quotient equals the `sn` form.
#[test]
fn theta_modulus_matches_sn_form() {
    let p = params();
    let mut seed = 7u64;
    let mut next = || {
        seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (seed >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..200 {
        let t = 1.0 + 99.0 * next();
        let x = -t + 20.0 * (next() - 0.5);
        let theta = p.q_asymp_unchecked(x, t).unwrap().norm_sqr();
        let sn = p.q_abs2_sn(x, t).unwrap();
        assert!((theta - sn).abs() < 1e-8, "{theta} vs {sn} at ({x}, {t})");
    }
}

#[test]
fn sn_form_properties() {
    let b = bg(0.5);
    let xi = -1.3;
    let g = EllipticGeometry::new(xi, &b).unwrap();
    let (lo, hi) = envelope_bounds(&g);
    let x_off = 0.17;
    let big = (g.alpha + I * 0.5).norm();
    for j in 0..100 {
        let t = 1.0 + 0.37 * j as f64;
        let x = xi * t + 0.11 * j as f64;
        let v = modulus_sq_sn(&g, x, t, x_off).unwrap();
        assert!(v >= lo * lo - 1e-12 && v <= hi * hi + 1e-12);
        // constant along crests x - 2α_re t = const
        let s = 0.9 * j as f64;
        let moved = modulus_sq_sn(&g, x + 2.0 * g.alpha.re * s, t + s, x_off).unwrap();
        assert!((v - moved).abs() < 1e-9);
        // period 2π/|Ω| along the ray x = ξt
        let period = 2.0 * PI / g.omega_big.abs();
        let a = modulus_sq_sn(&g, xi * t, t, x_off).unwrap();
        let c = modulus_sq_sn(&g, xi * (t + period), t + period, x_off).unwrap();
        assert!((a - c).abs() < 1e-9);
        // spatial period 2K/|α + iq0| in the sn argument
        let d = modulus_sq_sn(&g, x + 2.0 * g.k_val / big, t, x_off).unwrap();
        assert!((v - d).abs() < 1e-9);
    }
    // extrema are attained
    let top = modulus_sq_sn(&g, 2.0 * g.alpha.re + x_off * 2.0 * g.k_val / big, 1.0, x_off).unwrap();
    assert!((top - hi * hi).abs() < 1e-12);
    let bottom = modulus_sq_sn(&g, 2.0 * g.alpha.re + (x_off + 0.5) * 2.0 * g.k_val / big, 1.0, x_off).unwrap();
    assert!((bottom - lo * lo).abs() < 1e-10);
}

#[test]
fn boundary_profile_is_the_background() {
    let b = bg(0.5);
    let g = EllipticGeometry::new(-region_boundary(&b), &b).unwrap();
    for x in [-20.0, -3.0, 4.0] {
        assert_eq!(modulus_sq_sn(&g, x, 5.0, 0.3).unwrap(), 0.25);
    }
    let near = EllipticGeometry::new(-region_boundary(&b) * (1.0 - 1e-8), &b).unwrap();
    let v = modulus_sq_sn(&near, -10.0, 5.0, 0.3).unwrap();
    assert!((v - 0.25).abs() < 1e-3);
}

/// Closed forms of the theta ratios at `y = πv∞`.
#[test]
fn theta_ratio_identities() {
    let q0 = 0.5;
    let b = bg(q0);
    let bound = region_boundary(&b);
    for j in 1..=5 {
        let xi = -bound * j as f64 / 6.0;
        let g = EllipticGeometry::new(xi, &b).unwrap();
        let ctx = g.theta_context().unwrap();
        let y = PI * g.v_infinity(&spec()).unwrap();
        let t = |j, z| theta_j(j, z, ctx).unwrap();
        let m = g.m.value();
        let mp = (1.0 - m * m).sqrt();
        let a = g.alpha;
        let s2 = (a + I * q0).norm_sqr();
        let iq = I * q0;
        let f42 = -2.0 * iq * (iq + a.conj()) / (m * mp * s2);
        assert!(rel(t(4, y).powi(2) / t(2, y).powi(2), f42) < 1e-8, "theta4/theta2 at {xi}");
        let f12 = -(iq + a) * (iq + a.conj()) / (mp * s2);
        assert!(rel(t(1, y).powi(2) / t(2, y).powi(2), f12) < 1e-8, "theta1/theta2 at {xi}");
        let f32 = -2.0 * iq * (iq + a) / (m * s2);
        assert!(rel(t(3, y).powi(2) / t(2, y).powi(2), f32) < 1e-8, "theta3/theta2 at {xi}");
        let t14 = 4.0 * q0 * a.im / (m * (q0 + a.im).powi(2));
        let lhs = t(1, 2.0 * y).powi(2) / t(4, 2.0 * y).powi(2);
        assert!(rel(lhs, C64::new(t14, 0.0)) < 1e-8, "theta1/theta4 at {xi}");
        let z = C64::new(0.0, 0.0);
        let d1 = theta_j_prime(1, z, ctx).unwrap();
        assert!(rel(d1, t(2, z) * t(3, z) * t(4, z)) < 1e-10);
    }
}

#[test]
fn mirrored_side_agrees_for_symmetric_box() {
    let d = box_datum();
    let right = EllipticParams::for_datum(1.0, &d, &spec()).unwrap();
    let left = params();
    assert_eq!(right.side, EllipticSide::Right);
    assert!((right.omega_small - left.omega_small).abs() < 1e-12);
    for (x, t) in [(10.0, 10.0), (13.0, 12.5), (30.0, 31.0)] {
        let a = right.q_abs2_sn(x, t).unwrap();
        let b = left.q_abs2_sn(-x, t).unwrap();
        assert!((a - b).abs() < 1e-14);
    }
}

/// `ω` and `g∞` are built from the contour pieces exactly as written in
/// their defining sums.
#[test]
fn constants_recombine_from_pieces() {
    let b = bg(0.5);
    let g = EllipticGeometry::new(-1.0, &b).unwrap();
    let r = ReflectionData::for_datum(&box_datum());
    let c = reflection_constants(&g, &r, &JumpContours::straight(&g), &spec()).unwrap();
    let p = c.plain;
    let w = I * (p.b + p.l7 - p.l8) / (p.j7 - p.j8);
    assert!((w.re - c.omega_small).abs() < 1e-14);
    let q = c.weighted;
    let gi = -(q.b + q.l7 - q.l8 + I * c.omega_small * (q.j7 - q.j8)) / (2.0 * PI);
    assert!((gi.re - c.g_inf).abs() < 1e-14);
    // B̃ runs from ᾱ to α, half of the normalised cycle
    let cycle = g.c_norm * (p.j7 - p.j8);
    assert!((cycle + 0.5).norm() < 1e-8, "{cycle}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn geometry_invariants(q0 in 0.2f64..2.0, s in 0.02f64..0.98) {
        let b = bg(q0);
        let xi = -s * region_boundary(&b);
        let g = EllipticGeometry::new(xi, &b).unwrap();
        prop_assert!(g.alpha.im > 0.0 && g.alpha.im <= q0 * (1.0 + 1e-12));
        prop_assert!(g.k0 < 0.0 && g.k0 >= xi / 4.0);
        prop_assert!(g.c_norm.re == 0.0 && g.c_norm.im < 0.0);
        prop_assert!(g.tau.re == 0.0 && g.tau.im > 0.0);
        prop_assert!(g.omega_big < 0.0);
        let (lo, hi) = envelope_bounds(&g);
        prop_assert!(lo < hi && hi <= 2.0 * q0 + 1e-12);
    }

    #[test]
    fn x_offset_is_affine_in_omega(w in -10.0f64..10.0, phi in -3.0f64..3.0) {
        let b = Background::with_phases(1.0, phi, phi).unwrap();
        let x = x_offset(w, &b);
        prop_assert!((x + (w + phi) / (2.0 * PI) + 0.25).abs() < 1e-12);
        prop_assert!((x_offset(w + 2.0 * PI, &b) - (x - 1.0)).abs() < 1e-12);
    }
}
