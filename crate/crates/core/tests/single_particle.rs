use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resdecay::delta_shell::ShellPotential;
use resdecay::fit::{exponential_fit, tail_fit};
use resdecay::quadrature::GaussLegendre;
use resdecay::resonant_basis::{InitialState, ResonantBasis};
use resdecay::single_particle::{
    log_time_grid, uniform_grid, write_frames_csv, SingleParticle, Summation,
};
use resdecay::Error;

fn basis(n: usize) -> Arc<ResonantBasis> {
    let p = ShellPotential::new(6.0, 1.0).unwrap();
    Arc::new(ResonantBasis::new(&p, n).unwrap())
}

fn particle(b: &Arc<ResonantBasis>, alpha: u32) -> SingleParticle {
    SingleParticle::new(b.clone(), InitialState::box_eigenstate(alpha, 1.0).unwrap()).unwrap()
}

#[test]
fn short_time_limit_recovers_the_initial_state() {
    let b = basis(200);
    for alpha in [1, 2] {
        for summation in [Summation::Plain, Summation::Subtracted] {
            let sp = particle(&b, alpha).with_summation(summation);
            for &r in &[0.25, 0.5] {
                let psi = sp.initial().value(r);
                let v = sp.evolve(r, 1e-6).unwrap();
                assert!((v - psi).norm() <= 1e-3, "α={alpha} {summation:?} r={r}: {v}");
            }
            assert_eq!(sp.evolve(0.5, 0.0).unwrap(), sp.initial().value(0.5));
        }
    }
}

#[test]
fn split_identity_at_random_points() {
    let b = basis(200);
    let tau = b.lifetime();
    // The plain series cancels by about three orders of magnitude once the
    // exponential part is gone, which costs the same in rounding.
    for (summation, tol) in [(Summation::Subtracted, 1e-12), (Summation::Plain, 1e-11)] {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sp = particle(&b, 1).with_summation(summation);
        for _ in 0..500 {
            let r = rng.gen_range(0.0..1.0);
            let t = tau * 10f64.powf(rng.gen_range(-3.0..3.0));
            let whole = sp.evolve(r, t).unwrap();
            let split = sp.evolve_split(r, t).unwrap();
            assert!(
                (split.total() - whole).norm() <= tol * whole.norm(),
                "{summation:?} r={r} t={t}"
            );
        }
    }
}

#[test]
fn exponential_part_dominates_near_the_lifetime() {
    let b = basis(200);
    let sp = particle(&b, 1);
    let tau = b.lifetime();
    let s = sp.survival_split(2.0 * tau).unwrap();
    assert!(s.nonexponential.norm() < 1e-2 * s.exponential.norm());
    let late = sp.survival_split(100.0 * tau).unwrap();
    assert!(late.exponential.norm() < late.nonexponential.norm());
}

#[test]
fn initial_values_and_survival_routes() {
    let b = basis(200);
    let sp = particle(&b, 2);
    assert_eq!(sp.survival_amplitude(0.0).unwrap(), Complex64::new(1.0, 0.0));
    assert_eq!(sp.survival_probability(0.0).unwrap(), 1.0);
    assert_eq!(sp.nonescape_probability(0.0).unwrap(), 1.0);
    for &t in &[1e-4, 0.01, 0.3, 3.0, 50.0] {
        let a = sp.survival_amplitude(t).unwrap();
        let q = sp.survival_amplitude_quadrature(t).unwrap();
        assert!((a - q).norm() <= 1e-8, "t={t}: {a} vs {q}");
    }
}

#[test]
fn survival_decays_at_the_first_width() {
    let b = basis(200);
    let sp = particle(&b, 1);
    let tau = b.lifetime();
    let gamma = b.poles().poles()[0].width();
    let times: Vec<f64> = (0..=40).map(|j| tau * (1.0 + 0.1 * j as f64)).collect();
    let curves = sp.curves(&times).unwrap();
    let f = exponential_fit(&times, &curves.survival, tau, 5.0 * tau).unwrap();
    assert!((f.slope + gamma).abs() <= 0.02 * gamma, "{} vs {gamma}", f.slope);
}

#[test]
fn nonescape_over_survival_in_the_exponential_regime() {
    let b = basis(200);
    let sp = particle(&b, 1);
    let tau = b.lifetime();
    let u1 = &b.states()[0];
    let c1 = sp.coefficients().entries()[0].c;
    let gl = GaussLegendre::new(64);
    let norm_u1 = gl.integrate(0.0, 1.0, |r| u1.value(r).norm_sqr());
    let want = norm_u1 / c1.norm_sqr();
    for &t in &[3.0 * tau, 5.0 * tau] {
        let ratio = sp.nonescape_probability(t).unwrap() / sp.survival_probability(t).unwrap();
        assert!((ratio - want).abs() <= 0.01 * want, "t={t}: {ratio} vs {want}");
    }
}

#[test]
fn curves_stay_in_bounds() {
    let b = basis(200);
    for alpha in [1, 2] {
        let sp = particle(&b, alpha);
        let mut times = vec![0.0];
        times.extend(log_time_grid(1e-4, 1e4, 120).unwrap());
        let c = sp.curves(&times).unwrap();
        for (s, p) in c.survival.iter().zip(&c.nonescape) {
            assert!((0.0..=1.0 + 1e-6).contains(s));
            assert!((0.0..=1.0 + 1e-6).contains(p));
        }
        assert_eq!(c.survival[0], 1.0);
        assert!(c.survival.last().unwrap() < &1e-6);
    }
}

#[test]
fn long_time_power_laws() {
    let b = basis(400);
    let tau = b.lifetime();
    let times = log_time_grid(1e2 * tau, 1e3 * tau, 21).unwrap();
    let sp = particle(&b, 1);
    let c = sp.curves(&times).unwrap();
    let s = tail_fit(&times, &c.survival, times[0], times[20]).unwrap();
    let p = tail_fit(&times, &c.nonescape, times[0], times[20]).unwrap();
    assert!((s.slope + 3.0).abs() <= 0.15, "S: {}", s.slope);
    assert!((p.slope + 3.0).abs() <= 0.15, "P: {}", p.slope);
    let psi: Vec<f64> = times.iter().map(|&t| sp.evolve(0.5, t).unwrap().norm()).collect();
    let w = tail_fit(&times, &psi, times[0], times[20]).unwrap();
    assert!((w.slope + 1.5).abs() <= 0.02, "Ψ: {}", w.slope);
}

#[test]
fn plain_truncation_leaves_a_slow_remainder() {
    // A finite plain sum keeps a t^{-1/2} piece in Ψ that the subtracted
    // sum does not have.
    let b = basis(200);
    let tau = b.lifetime();
    let times = log_time_grid(1e3 * tau, 1e4 * tau, 11).unwrap();
    let plain = particle(&b, 1).with_summation(Summation::Plain);
    let p = plain.curves(&times).unwrap();
    let f = tail_fit(&times, &p.nonescape, times[0], times[10]).unwrap();
    assert!(f.slope > -1.5, "{}", f.slope);
}

#[test]
fn csv_output() {
    let b = basis(20);
    let sp = particle(&b, 1);
    let c = sp.curves(&[0.0, 0.5, 1.0]).unwrap();
    let mut buf = Vec::new();
    c.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,S,P,re_A,im_A");
    assert_eq!(
        lines[1],
        "0.00000000000000e0,1.00000000000000e0,1.00000000000000e0,1.00000000000000e0,0.00000000000000e0"
    );
    let frames = sp.frames(&[0.0, 2.0], 4).unwrap();
    assert_eq!(frames[1].samples.len(), 4);
    let mut buf = Vec::new();
    write_frames_csv(&frames, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,r,re_psi,im_psi,abs_psi_sq");
    assert_eq!(text.lines().count(), 9);
    let field: Vec<&str> = text.lines().nth(6).unwrap().split(',').collect();
    let mantissa = field[2].split('e').next().unwrap().trim_start_matches('-');
    assert_eq!(mantissa.replace('.', "").len(), 15);
}

#[test]
fn grids_and_domain_errors() {
    assert_eq!(uniform_grid(1.0, 4).unwrap(), vec![0.0, 0.25, 0.5, 0.75]);
    let g = log_time_grid(1e-2, 1e2, 5).unwrap();
    assert_eq!(g[0], 1e-2);
    assert_eq!(g[4], 1e2);
    assert!((g[2] - 1.0).abs() < 1e-14);
    assert!(log_time_grid(0.0, 1.0, 5).is_err());
    assert!(uniform_grid(1.0, 0).is_err());

    let b = basis(5);
    let sp = particle(&b, 1);
    assert!(matches!(sp.evolve(1.0, 1.0), Err(Error::Domain { .. })));
    assert!(matches!(sp.evolve(0.5, -1.0), Err(Error::Domain { .. })));
    assert!(matches!(sp.survival_amplitude(f64::NAN), Err(Error::Domain { .. })));
    assert!(sp.evolve_split(0.5, 0.0).is_err());
}
