use oneshot_core::divergences::{laser_example_kl, LaserParams};
use oneshot_web::{laser_table, meteor_betas, qubit_betas, MAX_K};
use proptest::prelude::*;

/// Closed form for `|0⟩` against `|+⟩`: `½(1 − 2√(ε(1−ε)))` below ε = ½.
fn quantum_closed_form(eps: f64) -> f64 {
    0.5 * (1.0 - 2.0 * (eps * (1.0 - eps)).sqrt())
}

#[test]
fn meteor_curve_shape() {
    let b = meteor_betas(3.0, 0.01, 15).unwrap();
    assert_eq!(b.len(), 16);
    assert!((b[0] - 0.99).abs() < 1e-9);
    assert!(b.windows(2).all(|w| w[1] <= w[0] + 1e-12));
}

#[test]
fn meteor_rejects_bad_input() {
    assert!(meteor_betas(3.0, 1.5, 5).is_err());
    assert!(meteor_betas(-1.0, 0.1, 5).is_err());
    assert!(meteor_betas(3.0, 0.1, MAX_K + 1).is_err());
}

#[test]
fn qubit_pair_at_one_tenth() {
    let b = qubit_betas(0.1).unwrap();
    assert!((b[0] - 0.2).abs() < 1e-8);
    assert!((b[1] - 0.45).abs() < 1e-12);
}

#[test]
fn laser_table_is_flat() {
    let csv = laser_table(6, 1, 1, 0.2, 0.1, 5).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("power,kl_bits,reference_bits"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), LaserParams::admissible_powers(1, 1, 6).len());
    let reference = laser_example_kl(&LaserParams {
        power: 2,
        c: 1,
        s: 1,
        g: 6,
        q: 0.2,
        delta: 0.1,
        n: 5,
    })
    .unwrap()
    .bits();
    for r in rows {
        assert!((r[1] - reference).abs() < 1e-9);
    }
    assert!(laser_table(3, 3, 1, 0.2, 0.1, 5).is_err());
}

proptest! {
    #[test]
    fn quantum_beats_readout(eps in 0.01f64..0.49) {
        let b = qubit_betas(eps).unwrap();
        prop_assert!((b[0] - quantum_closed_form(eps)).abs() < 1e-8);
        prop_assert!(b[0] < b[1]);
    }
}
