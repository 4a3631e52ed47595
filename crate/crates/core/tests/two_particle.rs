use std::sync::Arc;

use num_complex::Complex64;
use resdecay::delta_shell::ShellPotential;
use resdecay::fit::tail_fit;
use resdecay::resonant_basis::{InitialState, ResonantBasis};
use resdecay::single_particle::{log_time_grid, SingleParticle};
use resdecay::two_particle::{write_two_body_frames_csv, Exchange, TwoBodyKind, TwoBodyState};
use resdecay::Error;

fn basis(n: usize) -> Arc<ResonantBasis> {
    let p = ShellPotential::new(6.0, 1.0).unwrap();
    Arc::new(ResonantBasis::new(&p, n).unwrap())
}

fn pair(b: &Arc<ResonantBasis>, exchange: Exchange) -> TwoBodyState {
    TwoBodyState::box_states(b.clone(), 1, Some((2, exchange))).unwrap()
}

#[test]
fn equal_orbitals_are_degenerate() {
    let b = basis(10);
    let r = TwoBodyState::box_states(b.clone(), 2, Some((2, Exchange::Symmetric)));
    assert!(matches!(r, Err(Error::DegenerateState(_))));
    let psi = InitialState::box_eigenstate(1, 1.0).unwrap();
    let r = TwoBodyState::entangled(b, psi.clone(), psi, Exchange::Antisymmetric);
    assert!(matches!(r, Err(Error::DegenerateState(_))));
}

#[test]
fn initial_values() {
    let b = basis(40);
    for ex in [Exchange::Symmetric, Exchange::Antisymmetric] {
        let s = pair(&b, ex);
        assert_eq!(s.kind(), TwoBodyKind::Entangled(ex));
        assert_eq!(s.survival_amplitude(0.0).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(s.nonescape_probability(0.0).unwrap(), 1.0);
        let a0 = s.survival_amplitude_quadrature(0.0).unwrap();
        assert!((a0 - 1.0).norm() < 1e-12, "{a0}");
        let p0 = s.nonescape_probability_grid(0.0).unwrap();
        assert!((p0 - 1.0).abs() < 1e-12);
    }
    let anti = pair(&b, Exchange::Antisymmetric);
    assert_eq!(anti.evolve(0.4, 0.4, 0.0).unwrap(), Complex64::new(0.0, 0.0));
    assert_eq!(anti.evolve(0.4, 0.4, 3.0).unwrap(), Complex64::new(0.0, 0.0));
}

#[test]
fn exchange_symmetry_is_exact() {
    let b = basis(60);
    for ex in [Exchange::Symmetric, Exchange::Antisymmetric] {
        let s = pair(&b, ex);
        for &t in &[0.0, 0.05, 1.0, 40.0, 1e4] {
            let frames = s.frames(&[t], 9).unwrap();
            let grid = &frames[0].samples;
            for i in 0..9 {
                for j in 0..9 {
                    let v = grid[i * 9 + j].2;
                    let w = grid[j * 9 + i].2;
                    assert!((v - ex.sign() * w).norm() <= 1e-12 * v.norm().max(1e-300));
                }
            }
        }
    }
}

#[test]
fn product_form_matches_double_sum() {
    let b = basis(40);
    let states = [
        TwoBodyState::box_states(b.clone(), 1, None).unwrap(),
        pair(&b, Exchange::Symmetric),
        pair(&b, Exchange::Antisymmetric),
    ];
    for s in &states {
        for &t in &[0.02, 0.7, 25.0] {
            let v = s.evolve(0.3, 0.6, t).unwrap();
            let d = s.evolve_double_sum(0.3, 0.6, t).unwrap();
            assert!((v - d).norm() <= 1e-12 * v.norm().max(1e-3), "t={t}: {v} vs {d}");
        }
    }
}

#[test]
fn coefficient_amplitude_matches_product_quadrature() {
    let b = basis(80);
    for ex in [Exchange::Symmetric, Exchange::Antisymmetric] {
        let s = pair(&b, ex);
        for &t in &[0.01, 0.3, 2.0] {
            let a = s.survival_amplitude(t).unwrap();
            let q = s.survival_amplitude_quadrature(t).unwrap();
            assert!((a - q).norm() <= 1e-8, "t={t}: {a} vs {q}");
            let p = s.nonescape_probability(t).unwrap();
            let g = s.nonescape_probability_grid(t).unwrap();
            assert!((p - g).abs() <= 1e-12, "t={t}");
        }
    }
}

#[test]
fn factorized_state_squares_the_single_particle_curves() {
    let b = basis(80);
    let two = TwoBodyState::box_states(b.clone(), 1, None).unwrap();
    let one = SingleParticle::new(b, InitialState::box_eigenstate(1, 1.0).unwrap()).unwrap();
    let times = log_time_grid(1e-3, 1e3, 60).unwrap();
    let c2 = two.curves(&times).unwrap();
    let c1 = one.curves(&times).unwrap();
    for i in 0..times.len() {
        let a1 = c1.amplitude[i];
        assert!((c2.amplitude[i] - a1 * a1).norm() <= 1e-10);
        assert!((c2.nonescape[i] - c1.nonescape[i].powi(2)).abs() <= 1e-10);
        let grid = two.nonescape_probability_grid(times[i]).unwrap();
        assert!((grid - c1.nonescape[i].powi(2)).abs() <= 1e-10);
    }
}

#[test]
fn exchange_separates_the_long_time_tails() {
    let b = basis(2000);
    let times = log_time_grid(1e2, 1e4, 21).unwrap();
    let (sym, anti) = (pair(&b, Exchange::Symmetric), pair(&b, Exchange::Antisymmetric));
    let gap = (sym.nonescape_probability(1e4).unwrap() / anti.nonescape_probability(1e4).unwrap())
        .log10();
    assert!(gap >= 2.0, "decades between tails: {gap}");
    let survival = |s: &TwoBodyState| -> Vec<f64> {
        times.iter().map(|&t| s.survival_probability(t).unwrap()).collect()
    };
    let fs = tail_fit(&times, &survival(&sym), 1e3, 1e4).unwrap();
    let fa = tail_fit(&times, &survival(&anti), 1e3, 1e4).unwrap();
    assert!((fs.slope + 6.0).abs() <= 0.3, "{}", fs.slope);
    assert!((fa.slope + 10.0).abs() <= 0.5, "{}", fa.slope);
}

#[test]
fn wavefunction_tails_at_an_interior_point() {
    let b = basis(2000);
    let times = log_time_grid(1e2, 1e4, 21).unwrap();
    for (ex, want, tol) in [(Exchange::Symmetric, -3.0, 0.15), (Exchange::Antisymmetric, -5.0, 0.2)] {
        let s = pair(&b, ex);
        let v: Vec<f64> = times
            .iter()
            .map(|&t| s.evolve(0.3, 0.6, t).unwrap().norm())
            .collect();
        let f = tail_fit(&times, &v, 1e3, 1e4).unwrap();
        assert!((f.slope - want).abs() <= tol, "{ex:?}: {}", f.slope);
    }
}

#[test]
fn split_parts_sum_to_the_total() {
    let b = basis(60);
    let s = pair(&b, Exchange::Antisymmetric);
    for &t in &[0.5, 5.0, 200.0] {
        let split = s.survival_split(t).unwrap();
        let a = s.survival_amplitude(t).unwrap();
        assert!((split.total() - a).norm() <= 1e-12 * a.norm().max(1e-6));
        let w = s.evolve_split(0.2, 0.7, t).unwrap();
        let v = s.evolve(0.2, 0.7, t).unwrap();
        assert!((w.total() - v).norm() <= 1e-12 * v.norm().max(1e-6));
    }
    let early = s.survival_split(1.0).unwrap().exponential_fraction();
    let late = s.survival_split(1e3).unwrap().exponential_fraction();
    assert!(early > 0.9 && late < 1e-3, "{early} {late}");
}

#[test]
fn frame_csv_layout() {
    let b = basis(10);
    let s = pair(&b, Exchange::Symmetric);
    let frames = s.frames(&[0.0, 1.0], 3).unwrap();
    let mut buf = Vec::new();
    write_two_body_frames_csv(&frames, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,r1,r2,re_psi,im_psi,abs_psi_sq");
    assert_eq!(lines.len(), 1 + 2 * 9);
    assert!(s.evolve(1.0, 0.5, 1.0).is_err());
}
