use nzbc_core::branchfn::{Background, LimitSide};
use nzbc_core::planewave::*;
use nzbc_core::quad::{self, PathSegment, QuadratureSpec, Singularity};
use nzbc_core::scattering::{BoxDatum, InitialDatum, ReflectionData};
use nzbc_core::C64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn preset() -> InitialDatum {
    InitialDatum::Box(BoxDatum::new(0.5, 0.45, 0.0, 1.0).unwrap())
}

#[test]
fn delta_jump_matches_reflection() {
    let b = BoxDatum::new(1.0, 1.0, PI / 2.0, 1.0).unwrap();
    let r = ReflectionData::ClosedForm(b);
    let k1 = -1.0;
    let d = DeltaFunction::new(&r, k1, QuadratureSpec::default()).unwrap();
    let nu0 = k1 - 1.0;
    let k = C64::new(nu0, 0.0);
    let plus = d.delta(k, CutSide::Plus).unwrap();
    let minus = d.delta(k, CutSide::Minus).unwrap();
    let want = 1.0 + r.r(k, LimitSide::Right).unwrap().norm_sqr();
    assert!((plus / minus - want).norm() < 1e-8, "{} vs {}", plus / minus, want);
    // the on-cut values are limits of nearby off-axis values
    let above = d.delta(C64::new(nu0, 1e-7), CutSide::Plus).unwrap();
    assert!((above - plus).norm() < 1e-5);
}

#[test]
fn delta_tends_to_one() {
    let r = ReflectionData::ClosedForm(BoxDatum::new(1.0, 1.0, PI / 2.0, 1.0).unwrap());
    let d = DeltaFunction::new(&r, -1.0, QuadratureSpec::default()).unwrap();
    let v = d.delta(C64::new(1e6, 0.0), CutSide::Plus).unwrap();
    assert!((v - 1.0).norm() < 1e-5);
}

#[test]
fn g_inf_vanishes_far_left() {
    let p = PlaneWaveParams::for_datum(-100.0, &preset(), &QuadratureSpec::default()).unwrap();
    assert!(p.g_inf.abs() < 1e-3, "g_inf = {}", p.g_inf);
    assert!(p.g_inf_residue < 1e-9);
}

#[test]
fn zero_reflection_gives_background() {
    let bg = Background::symmetric(1.0).unwrap();
    let r = ReflectionData::Constant(C64::new(0.0, 0.0));
    let p = PlaneWaveParams::from_reflection(-7.0, &bg, &r, &QuadratureSpec::default()).unwrap();
    assert_eq!(p.g_inf, 0.0);
    assert_eq!(q_asymp_pw(-70.0, 10.0, &p, &bg).unwrap(), bg.q_minus());
}

/// Fubini form: g∞ = -(1/2iπ²) ∫ f(ν) ∫_B dζ/(λ(ζ)(ν - ζ)) dν.
#[test]
fn single_and_double_integral_forms_agree() {
    let datum = preset();
    let bg = datum.background();
    let r = ReflectionData::for_datum(&datum);
    let spec = QuadratureSpec::default();
    let (k1, _) = stationary_points(-4.0, &bg).unwrap();
    let single = g_inf_pw(&r, k1, &bg, &spec).unwrap();
    let q0 = bg.q0();
    let inner = |nu: f64| -> C64 {
        let seg = PathSegment::new(C64::new(0.0, -q0), C64::new(0.0, q0)).with_singularities(Singularity::InvSqrt, Singularity::InvSqrt);
        quad::integrate_segment(|z| 1.0 / (nzbc_core::branchfn::lambda(z, &bg, LimitSide::Right) * (nu - z)), &seg, &spec).unwrap().0
    };
    let outer = |z: C64| C64::new(r.log_one_plus(z.re).unwrap(), 0.0) * inner(z.re);
    let (tail, _) = quad::integrate_ray(outer, C64::new(k1, 0.0), C64::new(-1.0, 0.0), &spec).unwrap();
    let double = -(-tail) / (2.0 * C64::i() * PI * PI);
    assert!((single - double).norm() < 1e-7, "{single} vs {double}");
}

#[test]
fn re_i_theta_changes_sign_at_stationary_points() {
    let bg = Background::symmetric(1.0).unwrap();
    let (k1, k2) = stationary_points(-6.0, &bg).unwrap();
    let eps = 1e-3;
    let s = |k: f64| re_i_theta(-6.0, C64::new(k, 1e-6), &bg).signum();
    assert_ne!(s(k1 - eps), s(k1 + eps));
    assert_ne!(s(k2 - eps), s(k2 + eps));
    assert_eq!(s(k1 + eps), s(k2 - eps));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn roots_solve_the_quadratic(xi in 5.66f64..40.0, sign in prop::bool::ANY) {
        let xi = if sign { xi } else { -xi };
        let bg = Background::symmetric(1.0).unwrap();
        let (k1, k2) = stationary_points(xi, &bg).unwrap();
        prop_assert!(k1 <= k2);
        for k in [k1, k2] {
            prop_assert!((k * k - xi / 4.0 * k + 0.5).abs() < 1e-12 * (1.0 + k * k));
        }
    }

    #[test]
    fn plane_wave_modulus_is_background(g in -10.0f64..10.0, phase in -3.0f64..3.0) {
        let bg = Background::with_phases(0.5, phase, phase).unwrap();
        let p = PlaneWaveParams { xi: -8.0, k1: -1.0, k2: -0.1, g_inf: g, g_inf_residue: 0.0, side: PlaneWaveSide::Left };
        let q = q_asymp_pw(-80.0, 10.0, &p, &bg).unwrap();
        prop_assert!((q.norm() - 0.5).abs() < 1e-15);
    }
}
