use prestrain_core::energy::{
    appendix_inequality_check, axiom_check, coercivity_check, derivatives, dist_to_so3, eval_density,
    random_rotation, sqrt_spd, BaseDensity, Composition, DensityModel, PrestrainMap, M3, NCOORD,
};
use prestrain_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ID: M3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

fn w01() -> BaseDensity {
    BaseDensity::W01 { q: 2.0 }
}

fn w1(base: BaseDensity, m: f64) -> DensityModel {
    DensityModel::w1(base, PrestrainMap::isotropic(m))
}

fn matmul(a: &M3, b: &M3) -> M3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

fn unpack(x: &[f64; NCOORD]) -> (f64, M3) {
    let mut f = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            f[i][j] = x[1 + 3 * i + j];
        }
    }
    (x[0], f)
}

fn eval_at(model: &DensityModel, x: &[f64; NCOORD]) -> f64 {
    let (phi, f) = unpack(x);
    eval_density(model, phi, &f).unwrap()
}

fn shifted(x: &[f64; NCOORD], moves: &[(usize, f64)]) -> [f64; NCOORD] {
    let mut y = *x;
    for &(a, h) in moves {
        y[a] += h;
    }
    y
}

fn fd_hessian(model: &DensityModel, x: &[f64; NCOORD], h: f64, a: usize, b: usize) -> f64 {
    let e = |sa: f64, sb: f64| eval_at(model, &shifted(x, &[(a, sa * h), (b, sb * h)]));
    (e(1.0, 1.0) - e(1.0, -1.0) - e(-1.0, 1.0) + e(-1.0, -1.0)) / (4.0 * h * h)
}

fn admissible_point(rng: &mut ChaCha8Rng) -> (f64, M3) {
    let mut f = ID;
    for row in f.iter_mut() {
        for x in row.iter_mut() {
            *x += 0.15 * rng.random_range(-1.0..1.0);
        }
    }
    (0.2 * rng.random_range(-1.0..1.0), f)
}

#[test]
fn sqrt_spd_cases() {
    assert_eq!(sqrt_spd(&ID).unwrap(), ID);
    let r = sqrt_spd(&[[4.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let e = if i == j { if i == 0 { 2.0 } else { 1.0 } } else { 0.0 };
            assert!((r[i][j] - e).abs() < 1e-14);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let (_, a) = admissible_point(&mut rng);
        let mut s = matmul(&a, &[[a[0][0], a[1][0], a[2][0]], [a[0][1], a[1][1], a[2][1]], [a[0][2], a[1][2], a[2][2]]]);
        s[0][0] += 0.1;
        let x = sqrt_spd(&s).unwrap();
        let back = matmul(&x, &x);
        for i in 0..3 {
            for j in 0..3 {
                assert!((back[i][j] - s[i][j]).abs() < 1e-12);
            }
        }
    }
    assert!(matches!(
        sqrt_spd(&[[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]]),
        Err(Error::NotSpd { .. })
    ));
}

#[test]
fn closed_form_values() {
    let m = w1(w01(), 0.1);
    assert_eq!(eval_density(&m, 0.0, &ID).unwrap(), 0.0);
    let f = [[2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let expect = 1.0 + 2f64.ln().powi(2);
    assert!((eval_density(&m, 0.0, &f).unwrap() - expect).abs() < 1e-14);
    assert!((w01().eval(&f).unwrap() - expect).abs() < 1e-14);
    let refl = [[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    assert_eq!(BaseDensity::CaseStudy.eval(&refl).unwrap(), 0.0);
    // W02 with q = 2 at diag(2,1,1): 1 + (1/2 - 1)^2
    assert!((BaseDensity::W02 { q: 2.0 }.eval(&f).unwrap() - 1.25).abs() < 1e-14);
}

#[test]
fn out_of_domain_carries_the_determinant() {
    let m = w1(w01(), 0.1);
    let refl = [[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    match eval_density(&m, 0.0, &refl) {
        Err(Error::OutOfDomain { det }) => assert!(det < 0.0),
        other => panic!("expected OutOfDomain, got {other:?}"),
    }
    let cs = DensityModel::w1(BaseDensity::CaseStudy, PrestrainMap::isotropic(0.1));
    assert!(eval_density(&cs, 0.3, &refl).unwrap().is_finite());
    assert!(BaseDensity::W01 { q: 1.5 }.validate().is_err());
}

#[test]
fn first_derivatives_vanish_at_the_reference_state() {
    for model in [
        w1(w01(), 0.1),
        DensityModel::w2(BaseDensity::W02 { q: 3.0 }, PrestrainMap::isotropic(0.2)),
        w1(BaseDensity::CaseStudy, 0.1),
    ] {
        let s = derivatives(&model, 0.0, &ID, 1).unwrap();
        assert!(s.value.abs() < 1e-14);
        assert!(s.d1.iter().all(|v| v.abs() < 1e-10));
    }
}

#[test]
fn hessian_at_reference_is_the_explicit_form() {
    let m = w1(w01(), 0.0);
    let s = derivatives(&m, 0.0, &ID, 2).unwrap();
    let x0 = [0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let mut d = [0.0; NCOORD];
        for v in d.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        let (phi, ft) = unpack(&d);
        let mut sym2 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                sym2 += (0.5 * (ft[i][j] + ft[j][i])).powi(2);
            }
        }
        let tr = ft[0][0] + ft[1][1] + ft[2][2];
        let form = phi * phi + 2.0 * sym2 + 2.0 * tr * tr;
        assert!((s.contract(&[&d, &d]) - form).abs() < 1e-12 * form.max(1.0));
    }
    // finite-difference oracle on the same form, with a step sweep
    let mut errors = Vec::new();
    for h in [1e-2, 1e-3, 1e-4] {
        let mut worst: f64 = 0.0;
        for a in 0..NCOORD {
            for b in 0..NCOORD {
                worst = worst.max((fd_hessian(&m, &x0, h, a, b) - s.d2(a, b)).abs());
            }
        }
        errors.push(worst);
    }
    assert!(errors[2] < 1e-6);
    assert!(errors[1] < errors[0]);
}

#[test]
fn stack_matches_finite_differences_away_from_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for model in [
        w1(w01(), 0.1),
        DensityModel::w2(BaseDensity::W02 { q: 2.0 }, PrestrainMap::isotropic(0.1)),
        w1(BaseDensity::W01 { q: 4.0 }, 0.3),
    ] {
        let (phi, f) = admissible_point(&mut rng);
        let x = prestrain_core::energy::coords(phi, &f);
        let s = derivatives(&model, phi, &f, 4).unwrap();
        let h = 1e-5;
        for a in 0..NCOORD {
            let g = (eval_at(&model, &shifted(&x, &[(a, h)])) - eval_at(&model, &shifted(&x, &[(a, -h)]))) / (2.0 * h);
            assert!((g - s.d1[a]).abs() < 1e-8 * (1.0 + g.abs()));
        }
        let h3 = 1e-4;
        for (a, b, c) in [(0, 0, 0), (0, 1, 5), (2, 4, 9), (1, 1, 1), (3, 7, 0)] {
            let up = {
                let (p, g) = unpack(&shifted(&x, &[(c, h3)]));
                derivatives(&model, p, &g, 2).unwrap().d2(a, b)
            };
            let dn = {
                let (p, g) = unpack(&shifted(&x, &[(c, -h3)]));
                derivatives(&model, p, &g, 2).unwrap().d2(a, b)
            };
            let fd = (up - dn) / (2.0 * h3);
            assert!((fd - s.d3(a, b, c)).abs() < 1e-6 * (1.0 + fd.abs()));
        }
        for (a, b, c, d) in [(0, 0, 0, 0), (0, 1, 5, 9), (1, 1, 2, 2), (4, 4, 4, 4)] {
            let third = |sign: f64| {
                let (p, g) = unpack(&shifted(&x, &[(d, sign * h3)]));
                derivatives(&model, p, &g, 3).unwrap().d3(a, b, c)
            };
            let fd = (third(1.0) - third(-1.0)) / (2.0 * h3);
            assert!((fd - s.d4(a, b, c, d)).abs() < 1e-5 * (1.0 + fd.abs()));
        }
    }
}

#[test]
fn third_and_fourth_derivatives_are_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let model = w1(w01(), 0.1);
    let (phi, f) = admissible_point(&mut rng);
    let s = derivatives(&model, phi, &f, 4).unwrap();
    for _ in 0..200 {
        let i: [usize; 4] = std::array::from_fn(|_| rng.random_range(0..NCOORD));
        let base3 = s.d3(i[0], i[1], i[2]);
        for p in [(i[1], i[0], i[2]), (i[2], i[1], i[0]), (i[0], i[2], i[1])] {
            assert!((s.d3(p.0, p.1, p.2) - base3).abs() <= 1e-8 * (1.0 + base3.abs()));
        }
        let base4 = s.d4(i[0], i[1], i[2], i[3]);
        let swapped = s.d4(i[3], i[2], i[0], i[1]);
        assert!((swapped - base4).abs() <= 1e-8 * (1.0 + base4.abs()));
    }
}

#[test]
fn coercivity_constants() {
    let r = coercivity_check(&w1(w01(), 0.0)).unwrap();
    assert!((r.gamma_estimate - 1.0).abs() < 1e-6);
    assert!(r.pass);
    assert!(r.skew_residual < 1e-10);
    // deviatoric eigenvalue 2 and volumetric eigenvalue 2 + 2 * 3
    let ev = &r.restricted_eigenvalues;
    assert!((ev[ev.len() - 1] - 8.0).abs() < 1e-8);

    let p = PrestrainMap::isotropic(0.1);
    let g1 = coercivity_check(&DensityModel::w1(w01(), p.clone())).unwrap().gamma_estimate;
    let g2 = coercivity_check(&DensityModel::w2(w01(), p)).unwrap().gamma_estimate;
    assert!(g1 > 0.0);
    assert!((g1 - g2).abs() < 1e-8);
}

#[test]
fn rotation_distance_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        assert!(dist_to_so3(&random_rotation(&mut rng)) < 1e-12);
    }
    let two = [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]];
    assert!((dist_to_so3(&two) - 3f64.sqrt()).abs() < 1e-12);
    let refl = [[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    assert!((dist_to_so3(&refl) - 2.0).abs() < 1e-12);
}

#[test]
fn reflection_distance_matches_sampled_minimum() {
    let refl = [[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut best = f64::INFINITY;
    for _ in 0..200_000 {
        let r = random_rotation(&mut rng);
        let d2: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| (refl[i][j] - r[i][j]).powi(2)).sum();
        best = best.min(d2);
    }
    assert!(best >= 4.0 - 1e-12);
    assert!(best < 4.0 + 5e-2);
    assert!((dist_to_so3(&refl).powi(2) - best).abs() < 5e-2);
}

#[test]
fn axioms_of_the_bases() {
    let r = axiom_check(&w01(), 10_000, 1);
    assert!(r.all_pass(), "{r:?}");
    let r = axiom_check(&BaseDensity::W02 { q: 2.0 }, 2_000, 1);
    assert!(r.all_pass(), "{r:?}");

    let cs = axiom_check(&BaseDensity::CaseStudy, 2_000, 1);
    assert!(cs.frame_invariance.pass);
    assert!(cs.normalization.pass);
    assert!(!cs.non_degeneracy.pass);
    let w = cs.non_degeneracy.witness.expect("witness");
    assert!(w.w0.abs() < 1e-12);
    assert!((w.dist2 - 4.0).abs() < 1e-6);
}

#[test]
fn appendix_criterion_cases() {
    let zero = PrestrainMap::isotropic(0.0);
    let r = appendix_inequality_check(0.9, &zero, 10_000, 1);
    assert!(r.criterion_holds && r.sampled_min_margin >= 0.0);

    let unit = PrestrainMap::isotropic(1.0 / 3f64.sqrt());
    let r = appendix_inequality_check(0.3, &unit, 100_000, 2);
    assert!((r.criterion_value - (1.0 - 0.3 - 0.3 / 0.7)).abs() < 1e-12);
    assert!((r.criterion_value - 0.2714).abs() < 1e-4);
    assert!(r.certified());
    assert!(r.sampled_min_margin >= -1e-10);

    let r = appendix_inequality_check(0.99, &unit, 1_000, 3);
    assert!(!r.criterion_holds);
    assert!(!r.certified());
}

#[test]
fn prestrain_map_properties() {
    let p = PrestrainMap::new([[0.2, 0.05, 0.0], [0.05, -0.1, 0.0], [0.0, 0.0, 0.3]]).unwrap();
    let b0 = p.b(&0.0f64).values();
    assert_eq!(b0, ID);
    let h = 1e-6;
    let fd: Vec<f64> = (0..9)
        .map(|k| (p.b(&h).values()[k / 3][k % 3] - p.b(&-h).values()[k / 3][k % 3]) / (2.0 * h))
        .collect();
    for k in 0..9 {
        assert!((fd[k] - p.m_b()[k / 3][k % 3]).abs() < 1e-9);
    }
    assert!(PrestrainMap::new([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]).is_err());
    let model = DensityModel { composition: Composition::None, ..DensityModel::default() };
    assert!((eval_density(&model, 0.4, &ID).unwrap() - 0.08).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn right_composite_is_frame_invariant(seed in 0u64..100_000, m in 0.0f64..0.4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = w1(w01(), m);
        let (phi, f) = admissible_point(&mut rng);
        let r = random_rotation(&mut rng);
        let a = eval_density(&model, phi, &f).unwrap();
        let b = eval_density(&model, phi, &matmul(&r, &f)).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
    }

    #[test]
    fn densities_are_nonnegative_near_identity(seed in 0u64..100_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, f) = admissible_point(&mut rng);
        for base in [w01(), BaseDensity::W02 { q: 2.0 }, BaseDensity::CaseStudy] {
            prop_assert!(base.eval(&f).unwrap() >= 0.0);
        }
    }
}
