use halflie::bvp::{
    bvp_csv, completeness_probe, energy, geodesic_distance, minimality_check, nondegeneracy_probe, shooting_gap, solve_bvp,
    BvpOptions, BvpProblem, GradientMethod,
};
use halflie::groups::{ControlPath, GroupModel, Interpolation, Representation};
use halflie::riemann::Metric;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

fn fast() -> BvpOptions {
    BvpOptions { restarts: 2, gradient: GradientMethod::Adjoint, ..Default::default() }
}

#[test]
fn energy_quadrature() {
    let so3 = GroupModel::so3();
    let bi = Metric::identity(so3.clone()).unwrap();
    let rb = Metric::diagonal(so3, &[1.0, 2.0, 3.0]).unwrap();
    let u = v(&[1.0, 1.0, 0.0]);
    assert!((energy(&ControlPath::constant(&u, 10), &rb) - 3.0).abs() < 1e-14);
    assert_eq!(energy(&ControlPath::zero(3, 10), &rb), 0.0);
    let theta = 1.3;
    assert!((energy(&ControlPath::constant(&v(&[0.0, 0.0, theta]), 7), &bi) - theta * theta).abs() < 1e-14);
    let lin = ControlPath::new(vec![u.clone(); 5], Interpolation::Linear).unwrap();
    assert!((energy(&lin, &rb) - 3.0).abs() < 1e-14);
}

#[test]
fn identical_endpoints_give_zero() {
    let so3 = GroupModel::so3();
    let m = Metric::identity(so3.clone()).unwrap();
    let x = so3.exp(&v(&[0.2, 0.1, -0.4])).unwrap();
    let p = BvpProblem::new(&m, &x, &x, 8).unwrap();
    let s = solve_bvp(&p, &BvpOptions::default()).unwrap();
    assert!(s.converged);
    assert!(s.energy < 1e-20);
    assert_eq!(geodesic_distance(&m, &x, &x, &BvpOptions::default()).unwrap(), 0.0);
}

#[test]
fn rotation_angle_oracle() {
    let so3 = GroupModel::so3();
    let m = Metric::identity(so3.clone()).unwrap();
    for theta in [0.5, 1.0, 2.0] {
        let x1 = so3.exp(&v(&[0.0, 0.0, theta])).unwrap();
        let p = BvpProblem::new(&m, &so3.identity(), &x1, 16).unwrap();
        let s = solve_bvp(&p, &BvpOptions::default()).unwrap();
        assert!(s.converged && s.monotone);
        assert!((s.distance() - theta).abs() <= 1e-4, "{theta} {}", s.distance());
        let xs = s.xi.samples();
        let mean = xs.iter().fold(DVector::zeros(3), |a, b| a + b) / xs.len() as f64;
        let sd = (xs.iter().map(|x| (x - &mean).norm_squared()).sum::<f64>() / (xs.len() - 1) as f64).sqrt();
        assert!(sd <= 1e-4);
        assert!(minimality_check(&s, &m).unwrap().pass);
    }
}

#[test]
fn gradient_methods_agree() {
    let so3 = GroupModel::so3();
    let m = Metric::diagonal(so3.clone(), &[1.0, 2.0, 3.0]).unwrap();
    let x1 = so3.exp(&v(&[0.4, -0.3, 0.5])).unwrap();
    let p = BvpProblem::new(&m, &so3.identity(), &x1, 8).unwrap();
    let a = solve_bvp(&p, &BvpOptions { restarts: 1, ..Default::default() }).unwrap();
    let b = solve_bvp(&p, &BvpOptions { restarts: 1, gradient: GradientMethod::Adjoint, ..Default::default() }).unwrap();
    assert!(a.converged && b.converged);
    assert!((a.energy - b.energy).abs() <= 1e-9);
}

#[test]
fn direct_product_splits() {
    let model = GroupModel::semidirect(GroupModel::so2(), Representation::trivial(2)).unwrap();
    let a = DMatrix::from_diagonal(&v(&[1.5, 2.0, 3.0]));
    let m = Metric::new(model.clone(), a).unwrap();
    let target = model.chart_inv(&v(&[0.0, 0.4, -0.7])).unwrap();
    let p = BvpProblem::new(&m, &model.identity(), &target, 8).unwrap();
    let s = solve_bvp(&p, &fast()).unwrap();
    assert!(s.converged);
    assert!((s.energy - (2.0 * 0.16 + 3.0 * 0.49)).abs() <= 1e-8, "{}", s.energy);
    for x in s.xi.samples() {
        assert!((x - v(&[0.0, 0.4, -0.7])).amax() <= 1e-6);
    }
}

#[test]
fn rigid_body_minimizer_is_a_geodesic() {
    let so3 = GroupModel::so3();
    let m = Metric::diagonal(so3.clone(), &[1.0, 2.0, 3.0]).unwrap();
    let x1 = so3.exp(&v(&[0.6, 0.3, -0.2])).unwrap();
    let p = BvpProblem::new(&m, &so3.identity(), &x1, 16).unwrap();
    let s = solve_bvp(&p, &fast()).unwrap();
    assert!(s.converged);
    let r = minimality_check(&s, &m).unwrap();
    assert!(r.pass, "{r:?}");
    let dt = s.xi.dt();
    assert!(shooting_gap(&p, &s, 1e-3).unwrap() <= 10.0 * dt * dt);
    // Perturbed controls lose constant speed.
    let mut bad = s.clone();
    let mut xs = bad.xi.samples().to_vec();
    xs[3] *= 1.1;
    bad.xi = ControlPath::new(xs, Interpolation::PiecewiseConstant).unwrap();
    assert!(!minimality_check(&bad, &m).unwrap().constant_speed);
}

#[test]
fn distance_symmetry_invariance_and_triangle() {
    let so3 = GroupModel::so3();
    let m = Metric::diagonal(so3.clone(), &[1.0, 2.0, 3.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let o = fast();
    for _ in 0..2 {
        let x = so3.sample(&mut rng, 0.6);
        let y = so3.sample(&mut rng, 0.6);
        let z = so3.sample(&mut rng, 0.6);
        let dxy = geodesic_distance(&m, &x, &y, &o).unwrap();
        let dyx = geodesic_distance(&m, &y, &x, &o).unwrap();
        assert!((dxy - dyx).abs() <= 1e-5, "{dxy} {dyx}");
        let dyz = geodesic_distance(&m, &y, &z, &o).unwrap();
        let dxz = geodesic_distance(&m, &x, &z, &o).unwrap();
        assert!(dxz <= dxy + dyz + 1e-4);
        let w = so3.sample(&mut rng, 1.0);
        let shifted = geodesic_distance(&m, &so3.multiply(&x, &w).unwrap(), &so3.multiply(&y, &w).unwrap(), &o).unwrap();
        assert!((shifted - dxy).abs() <= 1e-6);
    }
}

#[test]
fn solve_is_deterministic() {
    let so3 = GroupModel::so3();
    let m = Metric::diagonal(so3.clone(), &[1.0, 2.0, 3.0]).unwrap();
    let x1 = so3.exp(&v(&[0.3, 0.3, 0.3])).unwrap();
    let p = BvpProblem::new(&m, &so3.identity(), &x1, 8).unwrap();
    let a = solve_bvp(&p, &fast()).unwrap();
    let b = solve_bvp(&p, &fast()).unwrap();
    assert_eq!(a.xi, b.xi);
    assert_eq!(bvp_csv(&[(&p, &a)]).unwrap(), bvp_csv(&[(&p, &b)]).unwrap());
}

#[test]
fn completeness_on_rotations() {
    let m = Metric::diagonal(GroupModel::so3(), &[1.0, 2.0, 3.0]).unwrap();
    let r = completeness_probe(&m, 5, 50.0, 1).unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn completeness_on_diffeomorphisms() {
    let m = Metric::sobolev(GroupModel::fourier_diffeo(16).unwrap(), 2.0).unwrap();
    let r = completeness_probe(&m, 4, 50.0, 2).unwrap();
    assert!(r.pass && r.blow_ups == 0, "{r:?}");
}

#[test]
fn nondegeneracy_small_sample() {
    let so3 = GroupModel::so3();
    for m in [Metric::identity(so3.clone()).unwrap(), Metric::diagonal(so3.clone(), &[1.0, 2.0, 3.0]).unwrap()] {
        let r = nondegeneracy_probe(&m, 5, 3, &fast()).unwrap();
        assert!(r.pass, "{r:?}");
    }
    let bi = Metric::identity(so3).unwrap();
    let r = nondegeneracy_probe(&bi, 5, 4, &fast()).unwrap();
    assert!(r.ratios.iter().all(|x| (x - 1.0).abs() <= 1e-6), "{:?}", r.ratios);
}
