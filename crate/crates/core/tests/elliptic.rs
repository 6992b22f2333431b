use nzbc_core::elliptic::*;
use nzbc_core::quad::{self, PathSegment, QuadratureSpec, Singularity};
use nzbc_core::C64;
use proptest::prelude::*;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn modulus(m: f64) -> EllipticModulus {
    EllipticModulus::new(m).unwrap()
}

/// `F(φ, m) = ∫_0^φ (1 - m² sin²θ)^{-1/2} dθ` by adaptive quadrature.
fn incomplete_f(phi: f64, m: f64) -> f64 {
    let seg = PathSegment::new(c(0.0, 0.0), c(phi, 0.0));
    let f = |z: C64| C64::new(1.0 / (1.0 - m * m * z.re.sin().powi(2)).sqrt(), 0.0);
    quad::integrate_segment(f, &seg, &QuadratureSpec::default()).unwrap().0.re
}

fn ctx_from_rho(rho: f64) -> ThetaContext {
    ThetaContext::from_tau(c(0.0, -rho.ln() / PI)).unwrap()
}

#[test]
fn complete_k_matches_quadrature() {
    assert!((complete_k(modulus(0.0)) - PI / 2.0).abs() < 1e-15);
    let k = complete_k(modulus(0.8));
    assert!((k - incomplete_f(PI / 2.0, 0.8)).abs() < 1e-12 * k);
    let s = modulus(FRAC_1_SQRT_2);
    assert!((s.complementary() - FRAC_1_SQRT_2).abs() < 1e-15);
    assert!((complete_k(s) - complete_k(modulus(s.complementary()))).abs() < 1e-14);
}

#[test]
fn nome_values() {
    let ctx = ThetaContext::from_modulus(modulus(FRAC_1_SQRT_2)).unwrap();
    assert!((ctx.rho() - (-PI).exp()).abs() < 1e-15);
    let small = ThetaContext::from_modulus(modulus(1e-6)).unwrap();
    assert!(small.rho() > 0.0 && small.rho() < 1e-12);
    let half = ThetaContext::from_modulus(modulus(0.5)).unwrap();
    let want = (-PI * complete_k(modulus(0.75f64.sqrt())) / complete_k(modulus(0.5))).exp();
    assert!((half.rho() - want).abs() < 1e-15);
    assert!(ThetaContext::from_modulus(modulus(0.0)).is_err());
    assert!(ThetaContext::from_tau(c(0.3, 1.0)).is_err());
}

#[test]
fn theta_trivial_values() {
    let tiny = ctx_from_rho(1e-30);
    assert!((theta_j(3, c(0.0, 0.0), &tiny).unwrap() - 1.0).norm() < 1e-15);
    let ctx = ctx_from_rho(0.1);
    assert!(theta_j(1, c(0.0, 0.0), &ctx).unwrap().norm() < 1e-16);
    let ctx = ctx_from_rho(0.2);
    let z = c(0.3, 0.1);
    let a = theta_j(3, z, &ctx).unwrap();
    let b = theta_j(3, z + PI, &ctx).unwrap();
    assert!((a - b).norm() < 1e-14);
}

#[test]
fn parity_of_thetas() {
    let ctx = ctx_from_rho(0.3);
    let z = c(0.41, -0.23);
    assert!((theta_j(1, -z, &ctx).unwrap() + theta_j(1, z, &ctx).unwrap()).norm() < 1e-14);
    for j in 2..=4 {
        assert!((theta_j(j, -z, &ctx).unwrap() - theta_j(j, z, &ctx).unwrap()).norm() < 1e-14);
    }
}

#[test]
fn big_theta_translations() {
    let tau = c(0.0, 1.5);
    let ctx = ThetaContext::from_tau(tau).unwrap();
    let k = c(0.2, 0.0);
    let base = theta_cap(k, &ctx).unwrap();
    assert!((theta_cap(k + 1.0, &ctx).unwrap() - base).norm() < 1e-14);
    let shifted = theta_cap(k + tau, &ctx).unwrap();
    let factor = (c(0.0, -2.0 * PI) * k - C64::i() * PI * tau).exp();
    assert!((shifted - factor * base).norm() < 1e-13 * base.norm());
    let k = c(0.37, 0.0);
    assert!((theta_cap(-k, &ctx).unwrap() - theta_cap(k, &ctx).unwrap()).norm() < 1e-15);
}

#[test]
fn sn_special_values() {
    assert!(sn(c(0.0, 0.0), modulus(0.6)).unwrap().norm() < 1e-16);
    assert!((sn(c(0.7, 0.0), modulus(0.0)).unwrap() - 0.7f64.sin()).norm() < 1e-15);
    // invert the incomplete integral: sn(F(φ)) = sin φ
    for phi in [PI / 2.0, 0.9, 0.25] {
        let u = incomplete_f(phi, 0.6);
        let s = sn(c(u, 0.0), modulus(0.6)).unwrap();
        assert!((s - phi.sin()).norm() < 1e-12, "sn(F({phi})) = {s}");
    }
}

#[test]
fn zeros_identities() {
    for m in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let mm = modulus(m);
        let k = complete_k(mm);
        let ctx = ThetaContext::from_modulus(mm).unwrap();
        let z = c(0.0, 0.0);
        let t = |j| theta_j(j, z, &ctx).unwrap().re;
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        assert!(rel(t(2).powi(2), 2.0 * m * k / PI) < 1e-10);
        assert!(rel(t(3).powi(2), 2.0 * k / PI) < 1e-10);
        assert!(rel(t(4).powi(2), 2.0 * (1.0 - m * m).sqrt() * k / PI) < 1e-10);
        let d1 = theta_j_prime(1, z, &ctx).unwrap().re;
        assert!(rel(d1, t(2) * t(3) * t(4)) < 1e-10);
        assert!((ctx.modulus() - m).abs() < 1e-10);
    }
}

#[test]
fn theta_shift_identities() {
    let tau = c(0.0, 0.8);
    let ctx = ThetaContext::from_tau(tau).unwrap();
    let k = c(0.31, 0.12);
    let t = |j, z| theta_j(j, z, &ctx).unwrap();
    let i = C64::i();
    let lhs = t(1, k);
    let rhs = -i * (i * k + i * PI * tau / 4.0).exp() * t(4, k + PI * tau / 2.0);
    assert!((lhs - rhs).norm() < 1e-13);
    assert!((t(2, k) - t(1, k + PI / 2.0)).norm() < 1e-13);
    assert!((t(3, k) - t(4, k + PI / 2.0)).norm() < 1e-13);
}

#[test]
fn sn_period_and_range() {
    let m = modulus(0.8);
    let k = complete_k(m);
    for j in 0..40 {
        let u = -3.0 + 0.37 * j as f64;
        let s = sn(c(u, 0.0), m).unwrap();
        assert!(s.im.abs() < 1e-14 && s.re.abs() <= 1.0 + 1e-14);
        let p = sn(c(u + 4.0 * k, 0.0), m).unwrap();
        assert!((p - s).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn duplication_identities(y in 0.0f64..PI, tau_im in 0.3f64..2.0) {
        let ctx = ThetaContext::from_tau(c(0.0, tau_im)).unwrap();
        let y = c(y, 0.0);
        let z = c(0.0, 0.0);
        let t = |j, w| theta_j(j, w, &ctx).unwrap();
        let lhs = t(1, 2.0 * y) * t(2, z) * t(3, z) * t(4, z);
        let rhs = 2.0 * t(1, y) * t(2, y) * t(3, y) * t(4, y);
        prop_assert!((lhs - rhs).norm() <= 1e-9 * rhs.norm().max(lhs.norm()).max(1e-300) + 1e-15);
        let lhs = t(4, 2.0 * y) * t(4, z).powi(3);
        let rhs = t(3, y).powi(4) - t(2, y).powi(4);
        prop_assert!((lhs - rhs).norm() <= 1e-9 * rhs.norm().max(1e-300) + 1e-15);
    }

    #[test]
    fn modulus_round_trip(m in 0.01f64..0.99) {
        let ctx = ThetaContext::from_modulus(modulus(m)).unwrap();
        prop_assert!((ctx.modulus() - m).abs() < 1e-10);
        prop_assert!(ctx.rho() > 0.0 && ctx.rho() < 1.0);
    }
}

#[test]
fn inverse_sqrt_annotation_is_exercised() {
    // K as an integral with an inverse-square-root endpoint in the t = sin θ variable
    let m: f64 = 0.6;
    let seg = PathSegment::new(c(0.0, 0.0), c(1.0, 0.0)).with_singularities(Singularity::None, Singularity::InvSqrt);
    let f = |z: C64| 1.0 / ((1.0 - z * z) * (1.0 - m * m * z * z)).sqrt();
    let v = quad::integrate_segment(f, &seg, &QuadratureSpec::default()).unwrap().0.re;
    assert!((v - complete_k(modulus(m))).abs() < 1e-12);
}
