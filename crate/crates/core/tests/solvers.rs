use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use prestrain_core::energy::{derivatives, random_rotation, BaseDensity, DensityModel, PrestrainMap, M3};
use prestrain_core::run::{dynamic_initial, DataConfig};
use prestrain_core::solver::{
    advance_quasistatic, assemble_symbols, diffusion_rhs, elliptic_residual, initial_equilibrium, momentum_rhs,
    newton_refine, residual_ab, run_dynamic, stable_dt, wave_speed2_at, DynamicConfig, DynamicSolver,
    DynamicState, NewtonOptions, QuasiState, RecordOptions, RunStatus,
};
use prestrain_core::spectral::{
    divergence, gradient, laplacian, sobolev_norm, Grid, MatrixField, ScalarField, Space, VectorField,
};
use prestrain_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ID: M3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

fn space(n: usize) -> Arc<Space> {
    Space::new(Grid::standard(n).unwrap())
}

fn model(m: f64) -> DensityModel {
    DensityModel::w1(BaseDensity::W01 { q: 2.0 }, PrestrainMap::isotropic(m))
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

// A(k) v = |k|^2 v + 3 (v.k) k for the prestrain-free model
fn acoustic_closed_form(k: [f64; 3], v: [f64; 3]) -> [f64; 3] {
    let kk = dot(k, k);
    let vk = dot(v, k);
    std::array::from_fn(|i| kk * v[i] + 3.0 * vk * k[i])
}

fn random_fields(s: &Arc<Space>, seed: u64, amp_w: f64, amp_phi: f64) -> (VectorField, ScalarField) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = VectorField::random_band(s, 3, &mut rng);
    w.scale(amp_w / sobolev_norm(&w, 1));
    let mut phi = ScalarField::random_band(s, 3, &mut rng);
    phi.set_mean([0.0]);
    phi.scale(amp_phi / sobolev_norm(&phi, 0));
    (w, phi)
}

// sum_{lm} C_{ij lm} d_m w_l as a matrix field
fn apply_c(c: &[[f64; 9]; 9], w: &VectorField) -> MatrixField {
    let g = gradient(w);
    let mut out = MatrixField::zeros(w.space());
    for p in 0..9 {
        for q in 0..9 {
            if c[p][q] != 0.0 {
                let mut comp = out.scalar(p);
                comp.axpy(c[p][q], &g.scalar(q));
                out.set_scalar(p, &comp);
            }
        }
    }
    out
}

#[test]
fn equilibrium_is_a_fixed_point_of_both_steps() {
    let s = space(8);
    let m = model(0.1);
    let mut solver = DynamicSolver::new(&m, DynamicConfig::default(), DynamicState::equilibrium(&s)).unwrap();
    for _ in 0..10 {
        solver.step().unwrap();
    }
    let st = solver.state();
    assert!(st.w.is_zero() && st.v.is_zero() && st.phi.is_zero());
    assert!(momentum_rhs(st, &m, 0.1).unwrap().is_zero());
    assert!(diffusion_rhs(&st.phi, &st.w, &m).unwrap().is_zero());

    let symbols = assemble_symbols(&m, &s).unwrap();
    let (next, report) = advance_quasistatic(&QuasiState::equilibrium(&s), 0.01, &m, &symbols, 1e-10, 20).unwrap();
    assert!(next.w.is_zero() && next.phi.is_zero());
    assert!(report.iterations <= 1);
}

#[test]
fn momentum_rhs_linearizes_to_the_acoustic_symbol() {
    let s = space(16);
    let m = model(0.0);
    let k = [1.0, 2.0, 0.0];
    let pol = [1.0, 0.5, -0.3];
    let alpha = 1e-6;
    let w = VectorField::from_fn(&s, |x| {
        let ph = dot(k, x).sin();
        std::array::from_fn(|i| alpha * pol[i] * ph)
    });
    let mut st = DynamicState::equilibrium(&s);
    st.w = w;
    let rhs = momentum_rhs(&st, &m, 0.0).unwrap();
    let av = acoustic_closed_form(k, pol);
    let lin = VectorField::from_fn(&s, |x| {
        let ph = dot(k, x).sin();
        std::array::from_fn(|i| -alpha * av[i] * ph)
    });
    assert!(rhs.sub(&lin).norm_l2() < 1e-5 * lin.norm_l2());

    let with_eps = momentum_rhs(&st, &m, 0.1).unwrap();
    let expect = rhs.add(&laplacian(&st.w).scaled(0.1));
    assert!(with_eps.sub(&expect).norm_l2() < 1e-13 * expect.norm_l2());
}

#[test]
fn diffusion_rhs_is_mean_free_and_linearizes() {
    let s = space(16);
    let m = model(0.1);
    let symbols = assemble_symbols(&m, &s).unwrap();
    for seed in 0..5 {
        let (w, phi) = random_fields(&s, seed, 0.05, 0.05);
        let out = diffusion_rhs(&phi, &w, &m).unwrap();
        assert!(out.mean()[0].abs() < 1e-13);
    }
    let (w, phi) = random_fields(&s, 11, 1e-6, 1e-6);
    let out = diffusion_rhs(&phi, &w, &m).unwrap();
    // lap(a phi + G : grad w)
    let g = gradient(&w);
    let mut lin = phi.scaled(symbols.a);
    for i in 0..3 {
        for j in 0..3 {
            lin.axpy(symbols.g[i][j], &g.scalar(3 * i + j));
        }
    }
    let lin = laplacian(&lin);
    assert!(out.sub(&lin).norm_l2() < 1e-5 * lin.norm_l2());
}

#[test]
fn stable_dt_at_rest_is_spacing_over_two() {
    let m = model(0.0);
    assert!((wave_speed2_at(&m, 0.0, &ID).unwrap() - 4.0).abs() < 1e-10);
    let dt16 = stable_dt(&DynamicState::equilibrium(&space(16)), &m, 0.0).unwrap();
    let dt32 = stable_dt(&DynamicState::equilibrium(&space(32)), &m, 0.0).unwrap();
    let h = 2.0 * std::f64::consts::PI / 32.0;
    assert!((dt32 - h / 2.0).abs() < 1e-10);
    assert!((dt16 / dt32 - 2.0).abs() < 1e-12);
}

#[test]
fn wave_speed_is_frame_invariant() {
    let m = model(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let mut f = ID;
        for row in f.iter_mut() {
            for x in row.iter_mut() {
                *x += 0.2 * rng.random_range(-1.0..1.0);
            }
        }
        let r = random_rotation(&mut rng);
        let rf: M3 = std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|k| r[i][k] * f[k][j]).sum()));
        let phi = rng.random_range(-0.2..0.2);
        let a = wave_speed2_at(&m, phi, &f).unwrap();
        let b = wave_speed2_at(&m, phi, &rf).unwrap();
        assert!((a - b).abs() < 1e-9 * a);
    }
}

#[test]
fn means_are_conserved_by_the_dynamic_step() {
    let s = space(8);
    let m = model(0.1);
    let data = DataConfig { mean_zero_phi: false, phi_mean: 0.02, ..DataConfig::default() };
    let mut init = dynamic_initial(&s, &data);
    init.v.set_mean([1e-3, -2e-3, 5e-4]);
    let (phi0, v0) = (init.phi.mean()[0], init.v.mean());
    let mut solver = DynamicSolver::new(&m, DynamicConfig::default(), init).unwrap();
    for _ in 0..200 {
        solver.step().unwrap();
    }
    let st = solver.state();
    assert!((st.phi.mean()[0] - phi0).abs() <= 1e-12 * phi0.abs());
    for c in 0..3 {
        assert!((st.v.mean()[c] - v0[c]).abs() <= 1e-12 * v0[c].abs());
    }
}

#[test]
fn galerkin_cutoff_is_invisible_below_it_in_the_linear_regime() {
    let s = space(16);
    let m = model(0.1);
    let mut init = DynamicState::equilibrium(&s);
    init.w = VectorField::from_fn(&s, |x| [1e-6 * x[1].sin(), 0.0, 1e-6 * (x[0] + x[2]).cos()]);
    init.phi = ScalarField::from_fn(&s, |x| [1e-6 * x[0].cos()]);
    let cfg = DynamicConfig { dt: 1e-2, t_end: 0.2, ..DynamicConfig::default() };
    let truncated = DynamicConfig { n_galerkin: Some(2), ..cfg.clone() };
    let mut a = DynamicSolver::new(&m, cfg.clone(), init.clone()).unwrap();
    let mut b = DynamicSolver::new(&m, truncated, init).unwrap();
    for _ in 0..cfg.steps() {
        a.step().unwrap();
        b.step().unwrap();
    }
    let dw = a.state().w.sub(&b.state().w).norm_l2();
    let dphi = a.state().phi.sub(&b.state().phi).norm_l2();
    assert!(dw < 1e-5 * a.state().w.norm_l2());
    assert!(dphi < 1e-5 * a.state().phi.norm_l2());
}

#[test]
fn large_data_fails_with_a_time_instead_of_nan() {
    let s = space(8);
    let m = model(0.1);
    let cfg = DynamicConfig { dt: 1e-2, t_end: 2.0, ..DynamicConfig::default() };
    let mut amplitude = 1.0;
    let mut failure = None;
    for _ in 0..12 {
        let data = DataConfig { amplitude, ..DataConfig::default() };
        let init = dynamic_initial(&s, &data);
        let summary = match run_dynamic(&cfg, &m, init, RecordOptions { stride: 10, big_stride: 0 }, &mut |_| {}) {
            Ok(summary) => summary,
            Err(e) => {
                failure = Some((0.0, e));
                break;
            }
        };
        if let RunStatus::Failed { t, error } = summary.status {
            failure = Some((t, error));
            break;
        }
        assert!(summary.records.iter().all(|r| r.e0.is_finite()));
        amplitude *= 2.0;
    }
    let (t, error) = failure.expect("doubling the data never failed");
    assert!(t.is_finite() && t >= 0.0);
    assert!(
        matches!(error, Error::OutOfDomain { .. } | Error::UnstableStep { .. }),
        "unexpected error {error:?}"
    );
}

#[test]
fn too_large_a_step_is_rejected() {
    let s = space(16);
    let m = model(0.1);
    let cfg = DynamicConfig { dt: 0.2, ..DynamicConfig::default() };
    let mut solver = DynamicSolver::new(&m, cfg, DynamicState::equilibrium(&s)).unwrap();
    assert!(matches!(solver.step(), Err(Error::UnstableStep { .. })));
}

#[test]
fn symbols_of_the_prestrain_free_model() {
    let s = space(8);
    let sym = assemble_symbols(&model(0.0), &s).unwrap();
    assert!((sym.a - 1.0).abs() < 1e-12);
    assert!(sym.g.iter().flatten().all(|g| g.abs() < 1e-12));
    for k in [[1i64, 0, 0], [1, -2, 1], [0, 3, 2]] {
        let idx = s.index_of(k).unwrap();
        let kv = s.kd(idx);
        let a = sym.acoustic(idx);
        for e in 0..3 {
            let mut v = [0.0; 3];
            v[e] = 1.0;
            let exp = acoustic_closed_form(kv, v);
            for i in 0..3 {
                assert!((a[i][e] - exp[i]).abs() < 1e-10);
            }
        }
        let ev = Matrix3::from_fn(|i, j| a[i][j]).symmetric_eigenvalues();
        let mut ev: Vec<f64> = ev.iter().copied().collect();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let kk = dot(kv, kv);
        assert!((ev[0] - kk).abs() < 1e-10 && (ev[1] - kk).abs() < 1e-10 && (ev[2] - 4.0 * kk).abs() < 1e-10);
    }
}

#[test]
fn coupling_matches_a_finite_difference_mixed_partial() {
    let m = model(0.1);
    let sym = assemble_symbols(&m, &space(8)).unwrap();
    let h = 1e-5;
    for i in 0..3 {
        for j in 0..3 {
            let df = |p: f64| derivatives(&m, p, &ID, 1).unwrap().d_f()[i][j];
            let fd = (df(h) - df(-h)) / (2.0 * h);
            assert!((fd - sym.g[i][j]).abs() < 1e-8);
        }
    }
    // right composition: G = 2 M_B + 2 tr(M_B) I = 0.8 I for M_B = 0.1 I
    assert!((sym.g[0][0] - 0.8).abs() < 1e-10);
}

#[test]
fn single_mode_elliptic_solve_matches_hand_assembly() {
    let s = space(8);
    let m = model(0.1);
    let sym = assemble_symbols(&m, &s).unwrap();
    let stack = derivatives(&m, 0.0, &ID, 2).unwrap();
    let k = [1.0, -2.0, 1.0];
    let a = Matrix3::from_fn(|i, l| {
        let mut acc = 0.0;
        for j in 0..3 {
            for mm in 0..3 {
                acc += stack.d2(1 + 3 * i + j, 1 + 3 * l + mm) * k[j] * k[mm];
            }
        }
        acc
    });
    let gk = Vector3::from_fn(|i, _| (0..3).map(|j| stack.d2(0, 1 + 3 * i + j) * k[j]).sum());
    let amp = -(a.try_inverse().unwrap() * gk);
    let phi = ScalarField::from_fn(&s, |x| [dot(k, x).cos()]);
    let w = sym.solve_linear_elliptic(&MatrixField::zeros(&s), &phi);
    let expect = VectorField::from_fn(&s, |x| {
        let sn = dot(k, x).sin();
        [amp[0] * sn, amp[1] * sn, amp[2] * sn]
    });
    assert!(w.sub(&expect).norm_l2() < 1e-12 * expect.norm_l2());
    assert!(sym.apply_linear(&w, &phi).norm_l2() < 1e-12 * expect.norm_l2());
    assert!(sym.solve_linear_elliptic(&MatrixField::zeros(&s), &ScalarField::zeros(&s)).is_zero());
}

#[test]
fn manufactured_elliptic_solution_is_recovered() {
    let s = space(16);
    let m = model(0.1);
    let sym = assemble_symbols(&m, &s).unwrap();
    let (mut w_star, _) = random_fields(&s, 3, 1.0, 1.0);
    w_star.set_mean([0.0; 3]);
    let rhs = apply_c(&sym.c, &w_star);
    let w = sym.solve_linear_elliptic(&rhs, &ScalarField::zeros(&s));
    assert!(w.sub(&w_star).norm_l2() < 1e-10 * w_star.norm_l2());
}

#[test]
fn remainders_are_quadratic_in_the_amplitude() {
    let s = space(16);
    let m = model(0.1);
    let sym = assemble_symbols(&m, &s).unwrap();
    let (w1, phi1) = random_fields(&s, 4, 1.0, 1.0);
    let (mut la, mut lb) = (Vec::new(), Vec::new());
    let alphas = [1e-1, 1e-2, 1e-3];
    for &alpha in &alphas {
        let (a, b) = residual_ab(&phi1.scaled(alpha * 0.1), &w1.scaled(alpha * 0.1), &m, &sym).unwrap();
        la.push(a.norm_l2().ln());
        lb.push(b.norm_l2().ln());
    }
    for l in [la, lb] {
        let slope = (l[0] - l[2]) / (alphas[0].ln() - alphas[2].ln());
        assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
    }
    let (a, b) = residual_ab(&ScalarField::zeros(&s), &VectorField::zeros(&s), &m, &sym).unwrap();
    assert!(a.is_zero() && b.is_zero());
}

#[test]
fn rigid_rotation_is_stress_free() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let m = model(0.1);
    for _ in 0..10 {
        let r = random_rotation(&mut rng);
        let st = derivatives(&m, 0.0, &r, 1).unwrap();
        assert!(st.d_phi().abs() < 1e-12);
        assert!(st.d_f().iter().flatten().all(|x| x.abs() < 1e-12));
    }
}

#[test]
fn newton_on_an_equilibrium_is_a_no_op() {
    let s = space(8);
    let m = model(0.1);
    let sym = assemble_symbols(&m, &s).unwrap();
    let (out, report) = newton_refine(&QuasiState::equilibrium(&s), &m, &sym, &NewtonOptions::default(), None).unwrap();
    assert_eq!(report.iterations, 0);
    assert!(out.w.is_zero());
}

#[test]
fn newton_converges_quadratically_to_a_manufactured_solution() {
    let s = space(16);
    let m = model(0.1);
    let sym = assemble_symbols(&m, &s).unwrap();
    let (mut w_star, phi) = random_fields(&s, 8, 0.3, 0.05);
    w_star.set_mean([0.0; 3]);
    let mut target = DynamicState::equilibrium(&s);
    target.w = w_star.clone();
    target.phi = phi.clone();
    let forcing = momentum_rhs(&target, &m, 0.0).unwrap().scaled(-1.0);
    let start = QuasiState { w: VectorField::zeros(&s), phi, t: 0.0 };
    let opts = NewtonOptions { tol: 1e-13, ..NewtonOptions::default() };
    let (out, report) = newton_refine(&start, &m, &sym, &opts, Some(&forcing)).unwrap();
    assert!(out.w.sub(&w_star).norm_l2() < 1e-9 * w_star.norm_l2());
    let r = &report.residuals;
    let mut orders = Vec::new();
    for k in 1..r.len() - 1 {
        if r[k + 1] > 1e-11 && r[k] < 1e-1 * r[0] {
            orders.push(r[k + 1].ln() / r[k].ln());
        }
    }
    let e: Vec<f64> = r.iter().map(|x| x.log10()).collect();
    assert!(!orders.is_empty(), "residuals {e:?}");
    assert!(orders.iter().any(|p| *p > 1.6), "residuals {e:?}");
}

#[test]
fn newton_polishes_a_loosely_solved_equilibrium() {
    let s = space(16);
    let m = model(0.1);
    let sym = assemble_symbols(&m, &s).unwrap();
    let (_, phi) = random_fields(&s, 9, 0.0, 0.2);
    let loose = initial_equilibrium(&phi, &m, &sym, 1e-3, 50).unwrap();
    let before = elliptic_residual(&loose, &m).unwrap();
    let opts = NewtonOptions { tol: before * 1e-3, max_iter: 3, ..NewtonOptions::default() };
    let (out, report) = newton_refine(&loose, &m, &sym, &opts, None).unwrap();
    assert!(report.iterations <= 3);
    assert!(elliptic_residual(&out, &m).unwrap() <= before * 1e-2);
}

#[test]
fn quasistatic_species_decays_and_keeps_its_mean() {
    let s = space(16);
    let m = model(0.1);
    let sym = assemble_symbols(&m, &s).unwrap();
    let (_, phi) = random_fields(&s, 10, 0.0, 0.05);
    let mut st = initial_equilibrium(&phi, &m, &sym, 1e-12, 50).unwrap();
    let mut last = st.phi.norm_l2();
    for _ in 0..10 {
        let (next, report) = advance_quasistatic(&st, 0.02, &m, &sym, 1e-10, 50).unwrap();
        assert!(report.iterations <= 8);
        let now = next.phi.norm_l2();
        assert!(now <= last + 1e-10);
        assert!(next.phi.mean()[0].abs() < 1e-15);
        last = now;
        st = next;
    }
    assert!(divergence(&st.w).mean()[0].abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn diffusion_rhs_has_zero_mean(seed in 0u64..100_000, amp in 1e-3f64..0.1) {
        let s = space(8);
        let (w, phi) = random_fields(&s, seed, amp, amp);
        let out = diffusion_rhs(&phi, &w, &model(0.1)).unwrap();
        prop_assert!(out.mean()[0].abs() < 1e-13);
    }
}
