use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resdecay::quadrature::adaptive_gk15;
use resdecay::specfun::{
    faddeeva_w, moshinsky_m, moshinsky_m_mirror, moshinsky_m_mirror_subtracted,
    moshinsky_m_subtracted, MoshinskyArgs,
};
use std::f64::consts::{FRAC_PI_4, PI};

/// `(i/2π) ∫ e^{ikx} e^{-ik²t} / (k - κ) dk` along the real axis.
///
/// `[-K, K]` is integrated directly. The two tails are rotated onto the rays
/// `K + e^{-iπ/4}s` and `-K + e^{3iπ/4}s`, where the integrand decays like a
/// Gaussian and no pole is crossed as long as `K > |Re κ| + |Im κ|`.
fn moshinsky_by_quadrature(x: f64, kappa: Complex64, t: f64) -> Complex64 {
    let i = Complex64::i();
    let f = |k: Complex64| (i * k * x - i * k * k * t).exp() / (k - kappa);
    let big_k = kappa.re.abs() + kappa.im.abs() + 6.0 + 4.0 / t.sqrt();
    let mid = adaptive_gk15(|k| f(Complex64::new(k, 0.0)), -big_k, big_k, 1e-13, 1e-13).unwrap();
    let reach = (60.0 / t).sqrt() + 2.0 * x.abs() / t + 1.0;
    let e1 = Complex64::from_polar(1.0, -FRAC_PI_4);
    let e2 = Complex64::from_polar(1.0, 3.0 * FRAC_PI_4);
    let right = adaptive_gk15(|s| f(big_k + e1 * s) * e1, 0.0, reach, 1e-14, 1e-13).unwrap();
    let left = -adaptive_gk15(|s| f(-big_k + e2 * s) * e2, 0.0, reach, 1e-14, 1e-13).unwrap();
    i / (2.0 * PI) * (mid + right + left)
}

#[test]
fn reflection_identity_on_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 10_000 {
        let z = Complex64::new(rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0));
        if z.norm() > 20.0 {
            continue;
        }
        let two_gauss = 2.0 * (-z * z).exp();
        if !two_gauss.is_finite() {
            continue;
        }
        let lhs = faddeeva_w(z) + faddeeva_w(-z);
        assert!(
            (lhs - two_gauss).norm() <= 1e-10 * (1.0 + two_gauss.norm()),
            "z={z}"
        );
        checked += 1;
    }
}

#[test]
fn real_axis_real_part_is_gaussian() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..2000 {
        let x: f64 = rng.gen_range(-30.0..30.0);
        let w = faddeeva_w(Complex64::new(x, 0.0));
        assert!((w.re - (-x * x).exp()).abs() <= 1e-12, "x={x}");
    }
}

#[test]
fn frozen_moshinsky_value() {
    // Contour quadrature at 30 digits (independent of the w kernel).
    let want = Complex64::new(-0.097_401_128_766_882_02, -0.104_334_233_480_639_44);
    let kappa = Complex64::new(3.0, -0.5);
    let got = moshinsky_m(MoshinskyArgs::at_boundary(kappa, 1.0)).unwrap();
    assert!((got - want).norm() <= 1e-13, "{got} vs {want}");
    let quad = moshinsky_by_quadrature(0.0, kappa, 1.0);
    assert!((quad - want).norm() <= 1e-8, "{quad} vs {want}");

    let cases = [
        (0.7, Complex64::new(2.0, -0.3), 0.4, Complex64::new(0.550_427_566_898_773_1, -0.359_829_252_411_546_56)),
        (-0.5, Complex64::new(5.0, -1.0), 2.5, Complex64::new(-0.018_682_919_920_766_02, -0.028_910_270_456_014_468)),
        (0.0, Complex64::new(-3.0, -0.5), 1.0, Complex64::new(0.076_209_369_858_155_87, 0.049_286_709_297_782_485)),
    ];
    for (x, kappa, t, want) in cases {
        let got = moshinsky_m(MoshinskyArgs::new(x, kappa, t)).unwrap();
        assert!((got - want).norm() <= 1e-13, "x={x} κ={kappa} t={t}: {got}");
    }
}

#[test]
fn moshinsky_matches_defining_integral_on_random_sample() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let x = rng.gen_range(-1.0..1.0);
        let kappa = Complex64::new(rng.gen_range(0.3..8.0), -rng.gen_range(0.02..1.5));
        let t = 10f64.powf(rng.gen_range(-1.0..0.7));
        let got = moshinsky_m(MoshinskyArgs::new(x, kappa, t)).unwrap();
        let want = moshinsky_by_quadrature(x, kappa, t);
        assert!(
            (got - want).norm() <= 1e-8,
            "x={x} κ={kappa} t={t}: {got} vs {want}"
        );
    }
}

#[test]
fn split_identity_on_random_fourth_quadrant_poles() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..1000 {
        let kappa = Complex64::new(rng.gen_range(0.1..200.0), -rng.gen_range(1e-3..5.0));
        let t = 10f64.powf(rng.gen_range(-2.0..4.0));
        let args = MoshinskyArgs::at_boundary(kappa, t);
        let plus = moshinsky_m(args).unwrap();
        let minus = moshinsky_m_mirror(args).unwrap();
        let plane = (-Complex64::i() * kappa * kappa * t).exp();
        assert!((plus + minus - plane).norm() <= 1e-10, "κ={kappa} t={t}");
    }
}

#[test]
fn mirror_moshinsky_decays_as_inverse_square_root() {
    let kappa = Complex64::new(2.757_938_321_294_924_5, -0.140_432_732_466_233_28);
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    let n = 41;
    for j in 0..n {
        let t = 10f64.powf(3.0 + 2.0 * j as f64 / (n - 1) as f64);
        let m = moshinsky_m_mirror(MoshinskyArgs::at_boundary(kappa, t)).unwrap();
        let (x, y) = (t.ln(), m.norm().ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let nf = n as f64;
    let slope = (nf * sxy - sx * sy) / (nf * sxx - sx * sx);
    assert!((slope + 0.5).abs() <= 0.01, "slope {slope}");
}

proptest! {
    #[test]
    fn conjugate_symmetry(x in -15.0f64..15.0, y in -5.0f64..15.0) {
        // w(-z*) = w(z)*
        let z = Complex64::new(x, y);
        let a = faddeeva_w(-z.conj());
        let b = faddeeva_w(z).conj();
        prop_assert!((a - b).norm() <= 1e-13 * (1.0 + b.norm()));
    }

    #[test]
    fn bounded_in_upper_half_plane(x in -50.0f64..50.0, y in 0.0f64..50.0) {
        let w = faddeeva_w(Complex64::new(x, y));
        prop_assert!(w.is_finite());
        prop_assert!(w.norm() <= 1.0 + 1e-14);
    }
}

fn leading_term(args: MoshinskyArgs) -> Complex64 {
    let gauss = Complex64::from_polar(1.0, args.x * args.x / (4.0 * args.t));
    gauss / (2.0 * PI.sqrt() * args.y())
}

#[test]
fn subtracted_kernel_removes_the_leading_term() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..300 {
        let kappa = Complex64::new(rng.gen_range(0.5..40.0), -rng.gen_range(0.01..2.0));
        let x = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(-1.0..3.0) };
        let args = MoshinskyArgs::new(x, kappa, rng.gen_range(0.01..2.0));
        let y = args.y();
        if y.norm() > 6.0 || y.norm() < 0.5 {
            continue;
        }
        let direct = moshinsky_m(args).unwrap() - leading_term(args);
        let sub = moshinsky_m_subtracted(args).unwrap();
        assert!((sub - direct).norm() <= 1e-13 * (1.0 + direct.norm()), "{args:?}");
        let mirror = moshinsky_m_mirror(args).unwrap() + leading_term(args);
        let sub = moshinsky_m_mirror_subtracted(args).unwrap();
        assert!((sub - mirror).norm() <= 1e-13 * (1.0 + mirror.norm()), "{args:?}");
    }
}

#[test]
fn subtracted_kernel_follows_the_asymptotic_series() {
    // Far past the lifetime the kernel is -w̃(u)/2 with u = -iy in the upper
    // half plane and w̃(u) = (i/√π u)(1/2u² + 3/4u⁴ + 15/8u⁶ + ...).
    let kappa = kappa_one();
    for &t in &[1e4, 1e6, 1e8] {
        let args = MoshinskyArgs::at_boundary(kappa, t);
        let u = -Complex64::i() * args.y();
        assert!(u.im > 0.0);
        let u2 = u * u;
        let series = Complex64::i() / (PI.sqrt() * u)
            * (0.5 / u2 + 0.75 / (u2 * u2) + 1.875 / (u2 * u2 * u2));
        let got = moshinsky_m_subtracted(args).unwrap();
        let want = -0.5 * series;
        assert!((got - want).norm() <= 1e-12 * want.norm(), "t={t}: {got} vs {want}");
    }
}

#[test]
fn subtracted_pair_keeps_the_split_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let i = Complex64::i();
    for _ in 0..500 {
        let kappa = Complex64::new(rng.gen_range(0.5..60.0), -rng.gen_range(0.01..3.0));
        let t = 10f64.powf(rng.gen_range(-3.0..1.0));
        let args = MoshinskyArgs::at_boundary(kappa, t);
        let plane = (-i * kappa * kappa * t).exp();
        let sum = moshinsky_m_subtracted(args).unwrap() + moshinsky_m_mirror_subtracted(args).unwrap();
        assert!((sum - plane).norm() <= 1e-12 * (1.0 + plane.norm()), "{args:?}");
    }
    assert!(moshinsky_m_subtracted(MoshinskyArgs::at_boundary(kappa_one(), 0.0)).is_err());
}

fn kappa_one() -> Complex64 {
    Complex64::new(2.757_938_321_294_924_5, -0.140_432_732_466_233_28)
}
