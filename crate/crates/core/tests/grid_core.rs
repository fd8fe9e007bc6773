mod common;

use std::f64::consts::PI;

use common::grid;
use kcontact::{random_basic_form, DerivativeMode, KError, ScalarField, TransverseGrid, TrigField};
use proptest::prelude::*;
use rand::SeedableRng;

#[test]
fn grid_shapes_and_rejections() {
    let g = grid(1, 32);
    assert_eq!((g.dim(), g.points()), (2, 1024));
    let g = grid(2, 16);
    assert_eq!((g.dim(), g.points()), (4, 65536));
    assert!(matches!(TransverseGrid::new(3, 32, DerivativeMode::Spectral), Err(KError::UnsupportedDimension(3))));
    assert!(matches!(TransverseGrid::new(1, 24, DerivativeMode::Spectral), Err(KError::BadResolution(24))));
    assert!(matches!(TransverseGrid::new(1, 4, DerivativeMode::Spectral), Err(KError::BadResolution(4))));
}

#[test]
fn sine_derivative_matches_closed_form() {
    let g = grid(1, 32);
    let f = ScalarField::from_fn(&g, |x| (2.0 * PI * x[0]).sin());
    let exact = ScalarField::from_fn(&g, |x| 2.0 * PI * (2.0 * PI * x[0]).cos());
    let d = f.partial_derivative(0).unwrap();
    assert!(d.sub(&exact).max_abs() <= 1e-10 * exact.max_abs());
    assert!(f.partial_derivative(1).unwrap().max_abs() <= 1e-12);
    assert!(ScalarField::constant(&g, 3.0).partial_derivative(1).unwrap().max_abs() <= 1e-12);
    assert!(matches!(f.partial_derivative(2), Err(KError::AxisOutOfRange { .. })));
}

#[test]
fn quadrature_examples() {
    let g = grid(1, 16);
    let one = ScalarField::constant(&g, 1.0);
    assert!((one.integrate(&one).unwrap() - 1.0).abs() < 1e-15);
    let s = ScalarField::from_fn(&g, |x| (2.0 * PI * x[0]).sin());
    assert!(s.integrate(&one).unwrap().abs() < 1e-15);
    assert!((s.mul(&s).integrate(&one).unwrap() - 0.5).abs() <= 1e-12);
    let bad = ScalarField::constant(&g, 0.0);
    assert!(matches!(one.integrate(&bad), Err(KError::NonPositiveDensity(_))));
}

#[test]
fn random_form_contract() {
    let g = grid(2, 8);
    let a = random_basic_form(&g, 2, 7, 3).unwrap();
    let b = random_basic_form(&g, 2, 7, 3).unwrap();
    assert_eq!(a.data(), b.data());
    assert_eq!(a.ncomp(), 6);
    let f = random_basic_form(&g, 0, 1, 2).unwrap().to_scalar();
    assert!(f.mean().abs() < 1e-14);
    assert!(matches!(random_basic_form(&g, 1, 1, 4), Err(KError::Aliasing { .. })));
}

#[test]
fn fourth_order_mode_converges() {
    let err = |size: usize| {
        let g = TransverseGrid::new(1, size, DerivativeMode::FiniteDifference4).unwrap();
        let f = ScalarField::from_fn(&g, |x| (2.0 * PI * x[1]).sin());
        let exact = ScalarField::from_fn(&g, |x| 2.0 * PI * (2.0 * PI * x[1]).cos());
        f.partial_derivative(1).unwrap().sub(&exact).max_abs()
    };
    let ratio = err(16) / err(32);
    assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
}

fn band_limited(n: usize, size: usize, seed: u64) -> ScalarField {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    TrigField::random(2 * n, 3, 1.0, false, &mut rng).sample(&grid(n, size)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mixed_partials_commute(seed in any::<u64>(), n in 1usize..=2, i in 0usize..4, j in 0usize..4) {
        let size = if n == 1 { 32 } else { 8 };
        let (i, j) = (i % (2 * n), j % (2 * n));
        let f = band_limited(n, size, seed);
        let ij = f.partial_derivative(i).unwrap().partial_derivative(j).unwrap();
        let ji = f.partial_derivative(j).unwrap().partial_derivative(i).unwrap();
        prop_assert!(ij.sub(&ji).max_abs() <= 1e-10 * ij.max_abs().max(1.0));
    }

    #[test]
    fn derivatives_integrate_to_zero(seed in any::<u64>(), n in 1usize..=2, i in 0usize..4) {
        let size = if n == 1 { 32 } else { 8 };
        let f = band_limited(n, size, seed);
        let d = f.partial_derivative(i % (2 * n)).unwrap();
        prop_assert!(d.integral().abs() <= 1e-12 * d.max_abs().max(1.0));
    }

    #[test]
    fn single_mode_derivative_is_exact(k in -7i64..=7, l in -7i64..=7, phase in 0.0..6.28f64) {
        let g = grid(1, 16);
        let f = ScalarField::from_fn(&g, |x| (2.0 * PI * (k as f64 * x[0] + l as f64 * x[1]) + phase).cos());
        let exact = ScalarField::from_fn(&g, |x| {
            -2.0 * PI * l as f64 * (2.0 * PI * (k as f64 * x[0] + l as f64 * x[1]) + phase).sin()
        });
        prop_assert!(f.partial_derivative(1).unwrap().sub(&exact).max_abs() <= 1e-11);
    }
}
