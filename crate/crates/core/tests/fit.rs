use proptest::prelude::*;
use resdecay::fit::{exponential_fit, line_fit, post_exponential_onset, tail_fit};
use resdecay::single_particle::log_time_grid;
use resdecay::Error;

#[test]
fn synthetic_cubic_tail() {
    let t = log_time_grid(1.0, 1e3, 40).unwrap();
    let y: Vec<f64> = t.iter().map(|x| 2.5 * x.powi(-3)).collect();
    let f = tail_fit(&t, &y, 1.0, 1e3).unwrap();
    assert!((f.slope + 3.0).abs() <= 1e-6);
    assert!(f.stderr < 1e-10);
    assert!((f.intercept - 2.5f64.ln()).abs() < 1e-9);
    assert_eq!(f.points, 40);
    assert!((f.decades - 3.0).abs() < 1e-12);
}

#[test]
fn short_window_is_rejected() {
    let t = log_time_grid(1.0, 1e3, 40).unwrap();
    let y: Vec<f64> = t.iter().map(|x| x.powi(-3)).collect();
    match tail_fit(&t, &y, 10.0, 50.0) {
        Err(Error::WindowTooShort { decades }) => assert!(decades < 1.0),
        other => panic!("{other:?}"),
    }
    assert!(tail_fit(&t, &y, 5.0, 200.0).is_ok());
    assert!(tail_fit(&t, &y, 0.0, 100.0).is_err());
    let mut bad = y.clone();
    bad[10] = 0.0;
    assert!(tail_fit(&t, &bad, 1.0, 1e3).is_err());
}

#[test]
fn exponential_rate() {
    let t: Vec<f64> = (0..50).map(|j| j as f64 * 0.1).collect();
    let y: Vec<f64> = t.iter().map(|x| 3.0 * (-1.55 * x).exp()).collect();
    let f = exponential_fit(&t, &y, 0.5, 4.0).unwrap();
    assert!((f.slope + 1.55).abs() < 1e-12);
    assert!(line_fit(&[1.0], &[1.0]).is_err());
    assert!(line_fit(&[1.0, 1.0], &[1.0, 2.0]).is_err());
}

#[test]
fn onset_is_the_last_crossing() {
    let t = [1.0, 2.0, 3.0, 4.0, 5.0];
    assert_eq!(post_exponential_onset(&t, &[1.0, 0.5, 1e-4, 2e-3, 1e-4], 1e-3), Some(5.0));
    assert_eq!(post_exponential_onset(&t, &[1.0, 0.5, 1e-4, 1e-5, 1e-6], 1e-3), Some(3.0));
    assert_eq!(post_exponential_onset(&t, &[1.0; 5], 1e-3), None);
    assert_eq!(post_exponential_onset(&t, &[0.0; 5], 1e-3), Some(1.0));
}

proptest! {
    #[test]
    fn recovers_any_power_law(p in -12.0f64..-0.5, c in 0.01f64..100.0) {
        let t = log_time_grid(1.0, 1e2, 25).unwrap();
        let y: Vec<f64> = t.iter().map(|x| c * x.powf(p)).collect();
        let f = tail_fit(&t, &y, 1.0, 1e2).unwrap();
        prop_assert!((f.slope - p).abs() < 1e-9);
    }
}
