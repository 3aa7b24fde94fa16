use std::f64::consts::PI;
use std::sync::Arc;

use prestrain_core::spectral::{
    derivative_norm2, divergence, divergence_rowwise, gradient, inverse_laplacian, laplacian, pointwise_map_fields,
    sobolev_norm, sobolev_norm2, truncate_modes, Grid, ScalarField, Space, VectorField,
};
use prestrain_core::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn space(n: usize) -> Arc<Space> {
    Space::new(Grid::standard(n).unwrap())
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn gradient_of_product_of_modes_matches_closed_form() {
    let s = space(16);
    let f = ScalarField::from_fn(&s, |x| [x[0].sin() * (2.0 * x[1]).cos()]);
    let g = gradient(&f).to_physical();
    let exact = VectorField::from_fn(&s, |x| {
        [
            x[0].cos() * (2.0 * x[1]).cos(),
            -2.0 * x[0].sin() * (2.0 * x[1]).sin(),
            0.0,
        ]
    })
    .to_physical();
    for c in 0..3 {
        assert!(max_abs_diff(&g[c], &exact[c]) < 1e-12);
    }
}

// fourth-order central differences on the nodal samples
fn fd4(values: &[f64], n: usize, h: f64, axis: usize) -> Vec<f64> {
    let at = |i: usize, j: usize, k: usize| values[(i * n + j) * n + k];
    let mut out = vec![0.0; values.len()];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let shift = |d: isize| {
                    let w = |a: usize| ((a as isize + d).rem_euclid(n as isize)) as usize;
                    match axis {
                        0 => at(w(i), j, k),
                        1 => at(i, w(j), k),
                        _ => at(i, j, w(k)),
                    }
                };
                out[(i * n + j) * n + k] =
                    (-shift(2) + 8.0 * shift(1) - 8.0 * shift(-1) + shift(-2)) / (12.0 * h);
            }
        }
    }
    out
}

#[test]
fn gradient_agrees_with_finite_differences() {
    let n = 48;
    let s = space(n);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let f = ScalarField::random_band(&s, 2, &mut rng);
    let phys = f.to_physical().remove(0);
    let g = gradient(&f).to_physical();
    let h = s.grid().spacing();
    let scale = g.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs()));
    for axis in 0..3 {
        let fd = fd4(&phys, n, h, axis);
        assert!(max_abs_diff(&fd, &g[axis]) < 2e-3 * scale);
    }
}

#[test]
fn divergence_of_gradient_is_laplacian() {
    let s = space(16);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let f = ScalarField::random_band(&s, 4, &mut rng);
    let a = divergence(&gradient(&f));
    let b = laplacian(&f);
    assert!(a.sub(&b).norm_l2() < 1e-12 * b.norm_l2());

    let v = VectorField::random_band(&s, 4, &mut rng);
    let rows = divergence_rowwise(&gradient(&v));
    assert!(rows.sub(&laplacian(&v)).norm_l2() < 1e-12 * v.norm_l2().max(1.0));
}

#[test]
fn gradient_and_divergence_are_adjoint() {
    let s = space(12);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f = ScalarField::random_band(&s, 3, &mut rng);
    let v = VectorField::random_band(&s, 3, &mut rng);
    let lhs = gradient(&f).inner(&v);
    let rhs = -f.inner(&divergence(&v));
    assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
}

#[test]
fn inverse_laplacian_of_single_mode() {
    let s = space(16);
    let f = ScalarField::from_fn(&s, |x| [(2.0 * x[0]).sin()]);
    let psi = inverse_laplacian(&f, None).unwrap().to_physical();
    let exact = ScalarField::from_fn(&s, |x| [(2.0 * x[0]).sin() / 4.0]).to_physical();
    assert!(max_abs_diff(&psi[0], &exact[0]) < 1e-14);
}

#[test]
fn inverse_laplacian_round_trip_and_mean_rejection() {
    let s = space(16);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut f = ScalarField::random_band(&s, 5, &mut rng);
    f.set_mean([0.0]);
    let psi = inverse_laplacian(&f, None).unwrap();
    assert!(psi.mean()[0].abs() < 1e-15);
    let back = laplacian(&psi).scaled(-1.0);
    assert!(back.sub(&f).norm_l2() < 1e-12 * f.norm_l2());

    f.set_mean([0.5]);
    match inverse_laplacian(&f, None) {
        Err(Error::NonZeroMean { mean, .. }) => assert!((mean - 0.5).abs() < 1e-14),
        other => panic!("expected NonZeroMean, got {other:?}"),
    }
}

#[test]
fn sobolev_norms_of_a_sine() {
    let s = space(16);
    let f = ScalarField::from_fn(&s, |x| [x[0].sin()]);
    let half_vol = (2.0 * PI).powi(3) / 2.0;
    assert!((sobolev_norm(&f, 0) - half_vol.sqrt()).abs() < 1e-12);
    assert!((sobolev_norm(&f, 1) - (2.0 * half_vol).sqrt()).abs() < 1e-12);
    assert!((sobolev_norm2(&f, 3) - 8.0 * half_vol).abs() < 1e-9);
    assert!((derivative_norm2(&f, 1, 0) - half_vol).abs() < 1e-10);
}

#[test]
fn parseval_matches_nodal_quadrature() {
    let s = space(12);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let f = ScalarField::random_band(&s, 5, &mut rng);
    let cell = s.grid().spacing().powi(3);
    let nodal: f64 = f.to_physical()[0].iter().map(|x| x * x).sum::<f64>() * cell;
    assert!((nodal - sobolev_norm2(&f, 0)).abs() < 1e-12 * nodal);
}

#[test]
fn truncation_keeps_low_modes_only() {
    let s = space(16);
    let f = ScalarField::from_fn(&s, |x| [x[0].sin() + (5.0 * x[0]).sin()]);
    let t = truncate_modes(&f, 2).unwrap().to_physical();
    let exact = ScalarField::from_fn(&s, |x| [x[0].sin()]).to_physical();
    assert!(max_abs_diff(&t[0], &exact[0]) < 1e-14);
    assert!(truncate_modes(&f, 0).is_err());
    assert!(truncate_modes(&f, 9).is_err());
}

#[test]
fn truncation_tail_shrinks_monotonically() {
    let s = space(16);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let f = ScalarField::random_band(&s, 8, &mut rng);
    let mut last = f64::INFINITY;
    for n_modes in 1..=8 {
        let tail = f.sub(&truncate_modes(&f, n_modes).unwrap()).norm_l2();
        assert!(tail <= last + 1e-15);
        last = tail;
    }
    assert!(last < 1e-14);
}

#[test]
fn product_below_the_cutoff_is_exact() {
    let s = space(16);
    let a = ScalarField::from_fn(&s, |x| [x[0].sin()]);
    let b = ScalarField::from_fn(&s, |x| [(2.0 * x[0]).sin()]);
    let p = pointwise_map_fields::<1, 1, Error, _>(&[&a, &b], |v| Ok([v[0] * v[1]])).unwrap();
    let exact = ScalarField::from_fn(&s, |x| [0.5 * (x[0].cos() - (3.0 * x[0]).cos())]);
    assert!(p.sub(&exact).norm_l2() < 1e-13);
}

#[test]
fn product_above_the_cutoff_is_removed() {
    let s = space(16);
    assert_eq!(s.grid().cutoff(), 5);
    let a = ScalarField::from_fn(&s, |x| [(4.0 * x[0]).cos()]);
    let p = pointwise_map_fields::<1, 1, Error, _>(&[&a, &a], |v| Ok([v[0] * v[0]])).unwrap();
    // cos^2(4x) = (1 + cos 8x) / 2, and mode 8 lies above the cutoff
    let phys = p.to_physical();
    assert!(phys[0].iter().all(|x| (x - 0.5).abs() < 1e-14));
}

#[test]
fn blob_round_trip_is_bit_exact() {
    let s = space(8);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let f = VectorField::random_band(&s, 3, &mut rng);
    let mut bytes = Vec::new();
    f.write_blob(&mut bytes).unwrap();
    let g = VectorField::read_blob(&s, bytes.as_slice()).unwrap();
    assert_eq!(f.coefficients(), g.coefficients());
    assert!(matches!(VectorField::read_blob(&space(16), bytes.as_slice()), Err(Error::GridMismatch)));
    assert!(ScalarField::read_blob(&s, bytes.as_slice()).is_err());
}

#[test]
fn mixing_grids_is_rejected() {
    let a = ScalarField::zeros(&space(8));
    let b = ScalarField::zeros(&space(16));
    assert!(matches!(a.check_grid(&b), Err(Error::GridMismatch)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_fields_stay_real_and_norms_are_ordered(seed in 0u64..10_000, band in 1usize..6) {
        let s = space(12);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = ScalarField::random_band(&s, band, &mut rng);
        prop_assert!(f.hermitian_defect() < 1e-14);
        let mut last = 0.0;
        for k in 0..4 {
            let h = sobolev_norm(&f, k);
            prop_assert!(h >= last);
            last = h;
        }
    }

    #[test]
    fn gradient_is_linear(seed in 0u64..10_000, a in -3.0f64..3.0) {
        let s = space(8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = ScalarField::random_band(&s, 3, &mut rng);
        let g = ScalarField::random_band(&s, 3, &mut rng);
        let mut comb = f.clone();
        comb.axpy(a, &g);
        let mut expect = gradient(&f);
        expect.axpy(a, &gradient(&g));
        prop_assert!(gradient(&comb).sub(&expect).norm_l2() < 1e-12 * (1.0 + expect.norm_l2()));
    }
}
