use std::sync::Arc;

use resdecay::delta_shell::ShellPotential;
use resdecay::fit::tail_fit;
use resdecay::reference_oracle::{default_k_max, spectral_amplitude, ContinuumState, SpectralOracle};
use resdecay::resonant_basis::{InitialState, ResonantBasis};
use resdecay::single_particle::{log_time_grid, SingleParticle};
use resdecay::Error;

fn shell() -> ShellPotential {
    ShellPotential::new(6.0, 1.0).unwrap()
}

fn box_state(alpha: u32) -> InitialState {
    InitialState::box_eigenstate(alpha, 1.0).unwrap()
}

#[test]
fn continuum_states_satisfy_the_matching_conditions() {
    let p = shell();
    for &k in &[0.3, 2.75, 7.1, 40.0] {
        let s = ContinuumState::new(&p, k).unwrap();
        let (inside, outside) = (s.value(1.0), s.value(1.0 + 1e-13));
        assert!((inside - outside).abs() < 1e-11);
        let norm = (2.0 / std::f64::consts::PI).sqrt();
        let d_in = s.amplitude() * k * k.cos();
        let d_out = norm * k * (k + s.phase()).cos();
        assert!((d_out - d_in - 6.0 * inside).abs() <= 1e-12 * (1.0 + d_in.abs()), "k={k}");
    }
    // Near a resonance the interior amplitude peaks.
    let on = ContinuumState::new(&p, 2.757_938).unwrap().amplitude();
    let off = ContinuumState::new(&p, 1.5).unwrap().amplitude();
    assert!(on > 5.0 * off);
    assert!(ContinuumState::new(&p, 0.0).is_err());
}

#[test]
fn spectral_weight_is_normalized() {
    let p = shell();
    for alpha in [1, 2] {
        let oracle = SpectralOracle::new(&p, &box_state(alpha)).unwrap();
        let a0 = oracle.amplitude(0.0).unwrap();
        assert!((a0.re - 1.0).abs() <= 1e-8, "α={alpha}: {a0}");
        assert!(a0.im.abs() <= 1e-12);
    }
}

#[test]
fn cutoff_grows_with_the_state_index() {
    let p = shell();
    let k1 = default_k_max(&p, &box_state(1)).unwrap();
    let k2 = default_k_max(&p, &box_state(2)).unwrap();
    assert!(k1 >= 16.0 && k2 >= k1);
    let oracle = SpectralOracle::new(&p, &box_state(1)).unwrap();
    assert!(oracle.weight(k1) < 1e-12);
    assert!(SpectralOracle::with_cutoff(&p, &box_state(1), -1.0).is_err());
    assert!(oracle.clone().with_panels(0).is_err());
}

#[test]
fn resonant_expansion_matches_the_spectrum() {
    let p = shell();
    let basis = Arc::new(ResonantBasis::new(&p, 200).unwrap());
    let tau = basis.lifetime();
    for alpha in [1, 2] {
        let sp = SingleParticle::new(basis.clone(), box_state(alpha)).unwrap();
        let oracle = SpectralOracle::new(&p, &box_state(alpha)).unwrap();
        for &t in &[0.1 * tau, tau, 10.0 * tau] {
            let a = sp.survival_amplitude(t).unwrap();
            let b = oracle.amplitude(t).unwrap();
            assert!((a - b).norm() <= 1e-4, "α={alpha} t={t}");
        }
        let t = 2.0 * tau;
        let psi = sp.evolve(0.5, t).unwrap();
        let spectral = oracle.wavefunction(0.5, t).unwrap();
        assert!((psi - spectral).norm() <= 1e-6, "α={alpha}: {psi} vs {spectral}");
    }
}

#[test]
fn spectral_tail_follows_the_cubic_law() {
    let p = shell();
    let basis = Arc::new(ResonantBasis::new(&p, 200).unwrap());
    let tau = basis.lifetime();
    let sp = SingleParticle::new(basis, box_state(1)).unwrap();
    let oracle = SpectralOracle::new(&p, &box_state(1))
        .unwrap()
        .with_tolerance(0.0, 1e-4);
    let times = log_time_grid(1e2 * tau, 1e3 * tau, 6).unwrap();
    let s: Vec<f64> = times
        .iter()
        .map(|&t| oracle.amplitude(t).unwrap().norm_sqr())
        .collect();
    let f = tail_fit(&times, &s, times[0], times[5]).unwrap();
    assert!((f.slope + 3.0).abs() <= 0.1, "{}", f.slope);
    for (&t, &spectral) in times.iter().zip(&s) {
        let res = sp.survival_probability(t).unwrap();
        assert!((res - spectral).abs() <= 0.05 * spectral, "t={t}: {res} vs {spectral}");
        assert!((0.0..=1.0).contains(&spectral));
    }
}

#[test]
fn explicit_grid_and_domain_errors() {
    let p = shell();
    let psi = box_state(1);
    let a = spectral_amplitude(&p, &psi, 0.5, 4096.0, 256).unwrap();
    let b = SpectralOracle::new(&p, &psi).unwrap().amplitude(0.5).unwrap();
    assert!((a - b).norm() <= 1e-8);
    let oracle = SpectralOracle::new(&p, &psi).unwrap();
    assert!(matches!(oracle.amplitude(-1.0), Err(Error::Domain { .. })));
    assert!(matches!(oracle.wavefunction(0.5, 0.0), Err(Error::Domain { .. })));
    // Rounding alone keeps a zero tolerance from ever being met.
    let strict = SpectralOracle::with_cutoff(&p, &psi, 64.0)
        .unwrap()
        .with_tolerance(0.0, 0.0);
    assert!(matches!(
        strict.amplitude(3.0),
        Err(Error::QuadratureNotConverged { .. })
    ));
}
