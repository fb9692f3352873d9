use halflie::groups::{GroupModel, GroupPoint};
use halflie::riemann::chart::christoffel_at;
use halflie::riemann::{
    christoffel_fd, lagrangian_step, no_loss_no_gain_check, shoot, shoot_adaptive, trajectory_csv, ChartAtlas, Metric,
};
use halflie::Error;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rigid_body() -> Metric {
    Metric::diagonal(GroupModel::so3(), &[1.0, 2.0, 3.0]).unwrap()
}

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    use rand::Rng;
    let b = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
    &b * b.transpose() + DMatrix::identity(n, n)
}

#[test]
fn rigid_body_conserves_energy_and_casimir() {
    let m = rigid_body();
    let tr = shoot(&m, &v(&[1.0, 1.0, 0.0]), 10.0, 1e-3).unwrap();
    assert!(tr.max_energy_drift <= 1e-8, "drift {}", tr.max_energy_drift);
    let c0 = (m.gram() * &tr.states[0].u).norm();
    for s in &tr.states {
        assert!(((m.gram() * &s.u).norm() - c0).abs() <= 1e-8 * c0);
    }
}

#[test]
fn energy_is_conserved_on_other_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let se2 = GroupModel::special_euclidean(2);
    let a = random_spd(&mut rng, 3);
    let m = Metric::new(se2, a).unwrap();
    let tr = shoot(&m, &v(&[0.7, -0.4, 1.1]), 10.0, 1e-3).unwrap();
    assert!(tr.max_energy_drift <= 1e-8, "se2 drift {}", tr.max_energy_drift);

    let diff = GroupModel::fourier_diffeo(8).unwrap();
    let m = Metric::sobolev(diff, 2.0).unwrap();
    let mut u0 = DVector::zeros(17);
    u0[1] = 0.3;
    u0[4] = 0.1;
    let tr = shoot(&m, &u0, 1.0, 1e-3).unwrap();
    assert!(tr.max_energy_drift <= 1e-8, "diff drift {}", tr.max_energy_drift);
}

#[test]
fn ad_transpose_identity_dense_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for model in [GroupModel::so3(), GroupModel::special_euclidean(2), GroupModel::special_euclidean(3)] {
        let n = model.algebra_dim();
        let m = Metric::new(model.clone(), random_spd(&mut rng, n)).unwrap();
        for _ in 0..20 {
            let u = model.sample_algebra(&mut rng, 1.0);
            let w = model.sample_algebra(&mut rng, 1.0);
            let x = model.sample_algebra(&mut rng, 1.0);
            let lhs = m.inner(&m.ad_transpose(&u, &w).unwrap(), &x);
            let rhs = m.inner(&w, &model.bracket(&u, &x).unwrap());
            assert!((lhs - rhs).abs() <= 1e-10, "{} {lhs} {rhs}", model.name());
        }
    }
}

#[test]
fn ad_transpose_identity_diffeo() {
    let model = GroupModel::fourier_diffeo(8).unwrap();
    let m = Metric::sobolev(model.clone(), 1.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // Keep u and w in the lower half so the products stay within the retained modes.
    let half = |rng: &mut ChaCha8Rng| {
        let mut x = model.sample_algebra(rng, 5.0);
        for i in 9..17 {
            x[i] = 0.0;
        }
        x
    };
    for _ in 0..20 {
        let u = half(&mut rng);
        let w = half(&mut rng);
        let x = half(&mut rng);
        let lhs = m.inner(&m.ad_transpose(&u, &w).unwrap(), &x);
        let rhs = m.inner(&w, &model.bracket(&u, &x).unwrap());
        assert!((lhs - rhs).abs() <= 1e-8, "{lhs} {rhs}");
    }
}

#[test]
fn metric_is_independent_of_base_point() {
    let m = rigid_body();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = v(&[0.2, -1.0, 0.5]);
    let b = v(&[1.0, 0.3, 0.0]);
    let at_e = m.metric_eval(&GroupModel::so3().identity(), &a, &b).unwrap();
    for _ in 0..10 {
        let x = GroupModel::so3().sample(&mut rng, 2.0);
        assert_eq!(m.metric_eval(&x, &a, &b).unwrap(), at_e);
    }
    assert!(matches!(m.metric_eval(&GroupPoint::vector(&[1.0]), &a, &b), Err(Error::ModelMismatch(_) | Error::DimensionMismatch(_))));
}

#[test]
fn christoffel_bi_invariant_vanishes_at_identity() {
    let model = GroupModel::so3();
    let m = Metric::identity(model.clone()).unwrap();
    let atlas = ChartAtlas::new(model.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let x = model.sample_algebra(&mut rng, 1.0);
        let g = christoffel_fd(&m, &atlas, &model.identity(), &x, &x, None).unwrap();
        assert!(g.amax() <= 1e-5, "{g}");
    }
}

#[test]
fn christoffel_rigid_body_matches_euler_arnold() {
    let m = rigid_body();
    let atlas = ChartAtlas::new(GroupModel::so3());
    let x = v(&[1.0, 1.0, 0.0]);
    let g = christoffel_fd(&m, &atlas, &GroupModel::so3().identity(), &x, &x, None).unwrap();
    // At z = 0 the chart acceleration is the Euler-Arnold right-hand side -ad_u^T u.
    assert!((&g - m.euler_arnold(&x).unwrap()).amax() <= 1e-4, "{g}");
    assert!((&g - v(&[0.0, 0.0, 1.0 / 3.0])).amax() <= 1e-4);
}

#[test]
fn christoffel_is_symmetric() {
    let m = rigid_body();
    let atlas = ChartAtlas::new(GroupModel::so3());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let z = GroupModel::so3().sample_algebra(&mut rng, 1.5);
        let x = GroupModel::so3().sample_algebra(&mut rng, 1.0);
        let y = GroupModel::so3().sample_algebra(&mut rng, 1.0);
        let a = christoffel_at(&m, &atlas, &z, &x, &y, None).unwrap();
        let b = christoffel_at(&m, &atlas, &z, &y, &x, None).unwrap();
        assert!((a - b).amax() <= 1e-12);
    }
}

fn lagrangian_vs_shoot(m: &Metric, u0: &DVector<f64>) -> f64 {
    let model = m.model().clone();
    let atlas = ChartAtlas::new(model.clone());
    let tr = shoot(m, u0, 1.0, 1e-3).unwrap();
    let lg = lagrangian_step(m, &atlas, &model.identity(), u0, 1.0, 1e-3).unwrap();
    assert_eq!(tr.states.len(), lg.len());
    tr.states
        .iter()
        .zip(&lg)
        .map(|(a, b)| model.chart_distance(&a.g, &b.g).unwrap().max((&a.u - &b.u).amax()))
        .fold(0.0, f64::max)
}

#[test]
fn lagrangian_agrees_with_shoot_bi_invariant() {
    let m = Metric::identity(GroupModel::so3()).unwrap();
    let d = lagrangian_vs_shoot(&m, &v(&[0.3, -0.8, 1.2]));
    assert!(d <= 1e-6, "deviation {d:e}");
}

#[test]
fn lagrangian_agrees_with_shoot_rigid_body() {
    let d = lagrangian_vs_shoot(&rigid_body(), &v(&[1.0, 1.0, 0.0]));
    assert!(d <= 1e-6, "deviation {d:e}");
}

#[test]
fn lagrangian_agrees_with_shoot_se2() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let m = Metric::new(GroupModel::special_euclidean(2), random_spd(&mut rng, 3)).unwrap();
    let d = lagrangian_vs_shoot(&m, &v(&[0.5, 0.2, -0.4]));
    assert!(d <= 1e-6, "deviation {d:e}");
}

#[test]
fn chart_roundtrip() {
    for model in [GroupModel::so3(), GroupModel::special_euclidean(2), GroupModel::fourier_diffeo(8).unwrap()] {
        let translated = !matches!(model, GroupModel::FourierDiffeo(_));
        let atlas = ChartAtlas::new(model);
        assert!(atlas.roundtrip_residual(10, 0.8, 4, false).unwrap() <= 1e-10);
        if translated {
            assert!(atlas.roundtrip_residual(10, 0.8, 4, true).unwrap() <= 1e-10);
        }
    }
}

fn power_law(n_modes: usize, p: f64) -> DVector<f64> {
    DVector::from_fn(2 * n_modes + 1, |i, _| {
        if i == 0 {
            0.0
        } else {
            let k = i.div_ceil(2);
            0.05 * (k as f64).powf(-p)
        }
    })
}

#[test]
fn no_loss_no_gain_power_law() {
    let model = GroupModel::fourier_diffeo(32).unwrap();
    let m = Metric::sobolev(model, 2.0).unwrap();
    let r = no_loss_no_gain_check(&m, &power_law(32, 4.0), 1.0, 1e-2).unwrap();
    let last = r.checkpoints.last().unwrap().velocity_exponent.unwrap();
    assert!((-4.5..=-3.5).contains(&last), "exponent {last}");
    assert!(r.pass, "{r:?}");
}

#[test]
fn no_loss_no_gain_single_mode() {
    let model = GroupModel::fourier_diffeo(32).unwrap();
    let m = Metric::sobolev(model, 2.0).unwrap();
    let mut u0 = DVector::zeros(65);
    u0[1] = 0.5;
    let r = no_loss_no_gain_check(&m, &u0, 0.1, 1e-3).unwrap();
    assert!(r.exponent_spread.is_none());
    assert!(r.max_high_mode_ratio <= 1e-8, "{}", r.max_high_mode_ratio);
    assert!(r.pass);
}

#[test]
fn no_loss_no_gain_zero() {
    let model = GroupModel::fourier_diffeo(16).unwrap();
    let m = Metric::sobolev(model, 1.0).unwrap();
    let r = no_loss_no_gain_check(&m, &DVector::zeros(33), 1.0, 1e-2).unwrap();
    assert!(r.trivial && r.pass);
}

#[test]
fn adaptive_long_run_stays_bounded() {
    let model = GroupModel::fourier_diffeo(8).unwrap();
    let m = Metric::sobolev(model, 1.0).unwrap();
    let mut u0 = DVector::zeros(17);
    u0[1] = 0.5;
    u0[2] = -0.2;
    let run = shoot_adaptive(&m, &u0, 20.0, 1e-10, 1e6).unwrap();
    assert_eq!(run.t_final, 20.0);
    assert!(run.max_energy_drift <= 1e-6, "{}", run.max_energy_drift);
}

#[test]
fn csv_has_header_and_rows() {
    let m = rigid_body();
    let tr = shoot(&m, &v(&[1.0, 0.5, 0.0]), 0.1, 1e-2).unwrap();
    let csv = trajectory_csv(&m, &tr, false);
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0].split(',').count(), 2 + 3 + 9);
    assert_eq!(lines.len(), 12);
    assert_eq!(csv, trajectory_csv(&m, &shoot(&m, &v(&[1.0, 0.5, 0.0]), 0.1, 1e-2).unwrap(), false));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn energy_conserved_short_runs(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0) {
        let m = rigid_body();
        let tr = shoot(&m, &v(&[a, b, c]), 1.0, 1e-2).unwrap();
        prop_assert!(tr.max_energy_drift <= 1e-7);
    }
}
