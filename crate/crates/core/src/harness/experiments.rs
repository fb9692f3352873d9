use super::{stream, sub_seed, Artifact, Assertion, ExperimentConfig, MetricSpec, ModelSpec};
use crate::bvp::{minimality_check, solve_bvp, BvpOptions, BvpProblem, GradientMethod};
use crate::curvature::{
    curvature_csv, curvature_row, curvature_terms, ChartMetricField, CovectorPair, CurvatureRow,
};
use crate::error::{Error, Result};
use crate::groups::{
    bracket_flow_study, validate_extension_datum, DiffeoModel, ExtensionDatum, GroupModel, Representation,
};
use crate::jets::oracle::{functoriality_suite, inversion_and_bounds_suite};
use crate::riemann::{lagrangian_step, no_loss_no_gain_check, shoot as shoot_geodesic, trajectory_csv, ChartAtlas, Metric, Trajectory};
use nalgebra::DVector;
use rand::Rng;
use std::fmt::Write as _;

type Outcome = Result<(Vec<Assertion>, Vec<Artifact>)>;

/// Longest trajectory table written; longer runs are thinned evenly.
const MAX_TRAJECTORY_ROWS: usize = 1001;

fn artifact(name: String, contents: String) -> Artifact {
    Artifact { name, contents }
}

fn model_or(c: &ExperimentConfig, kind: &str, modes: Option<usize>) -> Result<GroupModel> {
    match &c.model {
        Some(m) => m.build(),
        None => ModelSpec { kind: kind.into(), modes }.build(),
    }
}

fn metrics_or(c: &ExperimentConfig, model: &GroupModel, default: Vec<MetricSpec>) -> Result<Vec<(String, Metric)>> {
    let specs = if c.metric.is_empty() { default } else { c.metric.clone() };
    specs.iter().map(|s| Ok((s.label(), s.build(model)?))).collect()
}

fn suffixed(stem: &str, i: usize, count: usize) -> String {
    if count == 1 {
        format!("{stem}.csv")
    } else {
        format!("{stem}_{i}.csv")
    }
}

fn assertions_csv(list: &[Assertion]) -> String {
    let mut out = String::from("check,value,tolerance,pass\n");
    for a in list {
        let _ = writeln!(out, "{},{:e},{:e},{}", a.name, a.value, a.tolerance, a.pass);
    }
    out
}

fn vector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

/// Functoriality on random polynomial pairs, inversion round trips and the
/// composition, continuity and evaluation bounds on random jets.
/// Options: `samples` (200), `bound_samples` (1000).
pub(super) fn jets_selftest(c: &ExperimentConfig) -> Outcome {
    let seed = c.seed();
    let f = functoriality_suite(&mut stream(seed, 0), c.options.samples.unwrap_or(200))?;
    let b = inversion_and_bounds_suite(&mut stream(seed, 1), c.options.bound_samples.unwrap_or(1000))?;
    let list = vec![
        Assertion::at_most("functoriality max error", f.max_error, 1e-10),
        Assertion::holds("functoriality exact in rationals", f.rational_exact),
        Assertion::at_most("inversion round trip", b.max_inversion_error, 1e-9),
        Assertion::at_most("composition bound violations", b.composition_bound_violations as f64, 0.0),
        Assertion::at_most("continuity bound violations", b.continuity_bound_violations as f64, 0.0),
        Assertion::at_most("evaluation bound violations", b.evaluation_bound_violations as f64, 0.0),
    ];
    let csv = assertions_csv(&list);
    Ok((list, vec![artifact(format!("{}.csv", c.stem()), csv)]))
}

fn trig_field(n: usize, entries: &[(usize, f64)]) -> DVector<f64> {
    let mut v = DVector::zeros(2 * n + 1);
    for &(i, a) in entries {
        v[i] = a;
    }
    v
}

/// Flow brackets on SO(3), SE(2), Heisenberg and circle diffeomorphisms
/// (`options.modes`, default 16); Heisenberg and perturbed cocycles; the
/// split extension law against SE(2) on `samples` (1000) seeded pairs.
pub(super) fn group_validate(c: &ExperimentConfig) -> Outcome {
    let seed = c.seed();
    let n = c.options.modes.unwrap_or(16);
    let cases = vec![
        (GroupModel::so3(), vector(&[0.3, -0.5, 0.8]), vector(&[-0.6, 0.2, 0.4])),
        (GroupModel::special_euclidean(2), vector(&[0.7, 0.4, -0.3]), vector(&[-0.5, 0.9, 0.6])),
        (GroupModel::heisenberg(), vector(&[0.5, -0.2, 0.3]), vector(&[0.1, 0.7, -0.4])),
        (
            GroupModel::fourier_diffeo(n).map_err(|e| Error::Config(e.to_string()))?,
            trig_field(n, &[(1, 0.5), (4, 0.2)]),
            trig_field(n, &[(2, 0.4), (3, -0.3), (0, 0.1)]),
        ),
    ];
    let mut list = Vec::new();
    let mut csv = String::from("model,t,error,order\n");
    for (g, x, y) in &cases {
        let s = bracket_flow_study(g, x, y, &[0.16, 0.08, 0.04], 1e-2)?;
        for (i, (t, e)) in s.steps.iter().zip(&s.errors).enumerate() {
            let order = if i == 0 { String::new() } else { s.orders[i - 1].map(|o| format!("{o:.4}")).unwrap_or_default() };
            let _ = writeln!(csv, "{},{t},{e:e},{order}", s.model);
        }
        let _ = writeln!(csv, "{},{},{:e},", s.model, s.final_step, s.final_error);
        list.push(Assertion::at_least(format!("{} flow bracket order", s.model), s.min_order(), 2.0));
        list.push(Assertion::at_most(format!("{} flow bracket error", s.model), s.final_error, 1e-3));
    }

    let base = GroupModel::euclidean(2);
    let fiber = GroupModel::euclidean(1);
    let ok = validate_extension_datum(&ExtensionDatum::heisenberg(), &fiber, &base, 200, sub_seed(seed, 0));
    list.push(Assertion::at_most("heisenberg cocycle residual", ok.max_residual, 0.0));
    list.push(Assertion::holds("heisenberg cocycle accepted", ok.pass));
    let bad = validate_extension_datum(&ExtensionDatum::perturbed_heisenberg(), &fiber, &base, 200, sub_seed(seed, 1));
    list.push(Assertion::holds("perturbed cocycle rejected", !bad.pass));
    let mismatch = bad
        .triples
        .iter()
        .zip(&bad.cocycle_residuals)
        .map(|(t, r)| {
            let expected = 2.0 * (t[0][1] * t[1][1] * t[2][1]).abs();
            (r - expected).abs() / (1.0 + expected)
        })
        .fold(0.0, f64::max);
    list.push(Assertion::at_most("perturbed residual vs 2|x2 y2 z2|", mismatch, 1e-12));

    let so2 = GroupModel::so2();
    let semi = GroupModel::special_euclidean(2);
    let ext = GroupModel::extension(so2.clone(), base, ExtensionDatum::split(so2, Representation::rotation(2)));
    let mut rng = stream(seed, 2);
    let mut wrong = 0usize;
    for _ in 0..c.options.samples.unwrap_or(1000) {
        let a = semi.sample(&mut rng, 2.0);
        let b = semi.sample(&mut rng, 2.0);
        if semi.multiply(&a, &b)? != ext.multiply(&a, &b)? {
            wrong += 1;
        }
    }
    list.push(Assertion::at_most("semidirect law mismatches", wrong as f64, 0.0));
    Ok((list, vec![artifact(format!("{}.csv", c.stem()), csv)]))
}

fn thinned(traj: &Trajectory) -> Trajectory {
    let stride = traj.states.len().div_ceil(MAX_TRAJECTORY_ROWS).max(1);
    let last = traj.states.len() - 1;
    let states = traj.states.iter().enumerate().filter(|(i, _)| i % stride == 0 || *i == last).map(|(_, s)| s.clone()).collect();
    Trajectory { states, h: traj.h * stride as f64, ..traj.clone() }
}

/// `max |<A ad^T_u w, v> - <A w, [u, v]>|` over seeded unit-ball triples.
fn ad_transpose_residual(metric: &Metric, rng: &mut rand_chacha::ChaCha8Rng, samples: usize) -> Result<f64> {
    let model = metric.model();
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let u = model.sample_algebra(rng, 1.0);
        let w = model.sample_algebra(rng, 1.0);
        let v = model.sample_algebra(rng, 1.0);
        let lhs = metric.inner(&metric.ad_transpose(&u, &w)?, &v);
        let rhs = metric.inner(&w, &model.bracket(&u, &v)?);
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Shoots `u0` (default `(1, 1, 0)`) to `t` (10) with step `h` (1e-3) for each
/// metric (default: rigid body `diag(1, 2, 3)` on SO(3)). Checks relative
/// energy drift, the `|A u|` Casimir on SO(3), the ad-transpose identity and,
/// with `lagrangian = true`, agreement with chart geodesics.
pub(super) fn shoot(c: &ExperimentConfig) -> Outcome {
    let model = model_or(c, "so3", None)?;
    let metrics = metrics_or(c, &model, vec![MetricSpec { inertia: Some(vec![1.0, 2.0, 3.0]), ..Default::default() }])?;
    let u0 = match &c.options.u0 {
        Some(v) => vector(v),
        None if model.algebra_dim() == 3 => vector(&[1.0, 1.0, 0.0]),
        None => return Err(Error::Config("`options.u0` is required for this model".into())),
    };
    if u0.len() != model.algebra_dim() {
        return Err(Error::Config(format!("`u0` needs {} entries", model.algebra_dim())));
    }
    let t_end = c.options.t.unwrap_or(10.0);
    let h = c.options.h.unwrap_or(1e-3);
    let lagrangian = c.options.lagrangian.unwrap_or(false);
    if lagrangian && matches!(model, GroupModel::FourierDiffeo(_)) {
        return Err(Error::Config("chart geodesics are available for matrix models only".into()));
    }
    let mut list = Vec::new();
    let mut artifacts = Vec::new();
    for (i, (label, metric)) in metrics.iter().enumerate() {
        let traj = shoot_geodesic(metric, &u0, t_end, h)?;
        list.push(Assertion::at_most(format!("{label} energy drift"), traj.max_energy_drift, 1e-8));
        if matches!(model, GroupModel::Rotation(3)) {
            let c0 = (metric.gram() * &traj.states[0].u).norm();
            let drift = traj.states.iter().map(|s| ((metric.gram() * &s.u).norm() - c0).abs() / c0).fold(0.0, f64::max);
            list.push(Assertion::at_most(format!("{label} Casimir drift"), drift, 1e-8));
        }
        let res = ad_transpose_residual(metric, &mut stream(c.seed(), i as u64), 100)?;
        list.push(Assertion::at_most(format!("{label} ad-transpose identity"), res, 1e-10));
        if lagrangian {
            let atlas = ChartAtlas::new(model.clone());
            let lg = lagrangian_step(metric, &atlas, &model.identity(), &u0, t_end, h)?;
            let mut dev = 0.0f64;
            for (a, b) in traj.states.iter().zip(&lg) {
                dev = dev.max(model.chart_distance(&a.g, &b.g)?.max((&a.u - &b.u).amax()));
            }
            list.push(Assertion::at_most(format!("{label} shoot vs chart geodesic"), dev, 1e-6));
        }
        artifacts.push(artifact(suffixed(&c.stem(), i, metrics.len()), trajectory_csv(metric, &thinned(&traj), false)));
    }
    Ok((list, artifacts))
}

/// Distances from `e` to `exp(theta a)` for `thetas` (0.5, 1, 2) and a seeded
/// unit axis `a`. With the bi-invariant metric on SO(3) the distance must be
/// `theta`. Options: `intervals` (16), `restarts` (8), `gradient`.
pub(super) fn bvp_distance(c: &ExperimentConfig) -> Outcome {
    let model = model_or(c, "so3", None)?;
    let metrics = metrics_or(c, &model, vec![MetricSpec::default()])?;
    let thetas = c.options.thetas.clone().unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
    let gradient = match c.options.gradient.as_deref() {
        Some("adjoint") => GradientMethod::Adjoint,
        _ => GradientMethod::FiniteDifference,
    };
    let opts = BvpOptions {
        intervals: c.options.intervals.unwrap_or(16),
        restarts: c.options.restarts.unwrap_or(8),
        seed: sub_seed(c.seed(), 1),
        gradient,
        ..Default::default()
    };
    let axis = {
        let mut rng = stream(c.seed(), 0);
        let mut a = model.sample_algebra(&mut rng, 1.0);
        while a.norm() < 1e-3 {
            a = model.sample_algebra(&mut rng, 1.0);
        }
        a.normalize()
    };
    let mut list = Vec::new();
    let mut csv = String::from("metric,theta,distance,abs_error,energy,endpoint_error,stationarity,converged,minimal,restarts_used\n");
    for (label, metric) in &metrics {
        let oracle = matches!(model, GroupModel::Rotation(3)) && label == "identity";
        for &theta in &thetas {
            let x1 = model.exp(&(&axis * theta))?;
            let p = BvpProblem::new(metric, &model.identity(), &x1, opts.intervals)?;
            let s = solve_bvp(&p, &opts)?;
            let minimal = minimality_check(&s, metric)?;
            let d = s.distance();
            let _ = writeln!(
                csv,
                "{label},{theta},{d:e},{:e},{:e},{:e},{:e},{},{},{}",
                (d - theta).abs(),
                s.energy,
                s.endpoint_error,
                s.stationarity,
                s.converged,
                minimal.pass,
                s.restarts_used
            );
            list.push(Assertion::holds(format!("{label} theta={theta} converged"), s.converged));
            list.push(Assertion::holds(format!("{label} theta={theta} minimality"), minimal.pass));
            if oracle {
                list.push(Assertion::at_most(format!("{label} theta={theta} distance error"), (d - theta).abs(), 1e-4));
            }
        }
    }
    Ok((list, vec![artifact(format!("{}.csv", c.stem()), csv)]))
}

fn random_vec(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

fn within_oracle(r: &CurvatureRow) -> f64 {
    r.discrepancy / (1.0 + r.numerator_formula.abs())
}

/// Formula against oracle on the hyperbolic plane, SO(3) bi-invariant, the
/// rigid body and `samples` (50) random 3D chart metrics at step `h` (1e-3);
/// the random metrics are also evaluated at 1e-2 and 5e-3 for the halving ratio.
pub(super) fn curvature_table(c: &ExperimentConfig) -> Outcome {
    let h = c.options.h.unwrap_or(1e-3);
    let mut rng = stream(c.seed(), 0);
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    let mut r3_max = f64::NEG_INFINITY;
    let mut push = |rows: &mut Vec<CurvatureRow>, f: &ChartMetricField, p: &CovectorPair, plane: &str| -> Result<CurvatureRow> {
        let r = curvature_row(f, p, plane, h)?;
        worst = worst.max(within_oracle(&r));
        r3_max = r3_max.max(curvature_terms(f, p, h)?.r3);
        rows.push(r.clone());
        Ok(r)
    };

    let hyp = ChartMetricField::hyperbolic();
    let mut hyp_err = 0.0f64;
    let p = CovectorPair::new(vector(&[0.0, 1.0]), vector(&[1.0, 0.0]), vector(&[0.0, 1.0]))?;
    hyp_err = hyp_err.max((push(&mut rows, &hyp, &p, "dx dy")?.sectional + 1.0).abs());
    for k in 0..4 {
        let x = vector(&[rng.random_range(-2.0..2.0), rng.random_range(0.3..3.0)]);
        let p = CovectorPair::from_vectors(&hyp, &x, &random_vec(&mut rng, 2), &random_vec(&mut rng, 2))?;
        hyp_err = hyp_err.max((push(&mut rows, &hyp, &p, &format!("random {k}"))?.sectional + 1.0).abs());
    }

    let so3 = ChartMetricField::from_metric(&Metric::identity(GroupModel::so3())?);
    let p = CovectorPair::new(DVector::zeros(3), vector(&[1.0, 0.0, 0.0]), vector(&[0.0, 1.0, 0.0]))?;
    let so3_err = (push(&mut rows, &so3, &p, "e1 e2")?.sectional - 0.25).abs();

    let rb = ChartMetricField::from_metric(&Metric::diagonal(GroupModel::so3(), &[1.0, 2.0, 3.0])?);
    for k in 0..3 {
        let x = random_vec(&mut rng, 3) * 0.5;
        let p = CovectorPair::from_vectors(&rb, &x, &random_vec(&mut rng, 3), &random_vec(&mut rng, 3))?;
        push(&mut rows, &rb, &p, &format!("random {k}"))?;
    }

    let mut min_ratio = f64::INFINITY;
    for k in 0..c.options.samples.unwrap_or(50) {
        let trig = k % 2 == 0;
        let mut f = ChartMetricField::random(&mut rng, 3, trig);
        f.name = format!("random3d-{k}");
        let x = random_vec(&mut rng, 3) * 0.5;
        let p = CovectorPair::from_vectors(&f, &x, &random_vec(&mut rng, 3), &random_vec(&mut rng, 3))?;
        push(&mut rows, &f, &p, if trig { "trig" } else { "poly" })?;
        let coarse = curvature_row(&f, &p, "", 1e-2)?.discrepancy;
        let fine = curvature_row(&f, &p, "", 5e-3)?.discrepancy;
        min_ratio = min_ratio.min(coarse / fine);
    }

    let list = vec![
        Assertion::at_most("formula vs oracle (relative)", worst, 1e-3),
        Assertion::at_most("hyperbolic sectional + 1", hyp_err, 1e-3),
        Assertion::at_most("SO(3) sectional - 1/4", so3_err, 1e-3),
        Assertion::at_least("h-halving discrepancy ratio", min_ratio, 2.0),
        Assertion::at_most("max R3", r3_max, 0.0),
    ];
    Ok((list, vec![artifact(format!("{}.csv", c.stem()), curvature_csv(&rows))]))
}

/// Seeded unit-energy velocities shot to `t` (50) with adaptive steps.
/// Defaults: circle diffeomorphisms with 16 modes, Sobolev order 2, 20 samples.
pub(super) fn completeness(c: &ExperimentConfig) -> Outcome {
    let model = model_or(c, "diffeo", Some(16))?;
    let metrics = metrics_or(c, &model, vec![MetricSpec { sobolev: Some(2.0), ..Default::default() }])?;
    let n = c.options.samples.unwrap_or(20);
    let t_end = c.options.t.unwrap_or(50.0);
    let mut list = Vec::new();
    let mut csv = String::from("metric,samples,horizon,blow_ups,max_energy_drift,min_eigenvalue,pass\n");
    for (i, (label, metric)) in metrics.iter().enumerate() {
        let r = crate::bvp::completeness_probe(metric, n, t_end, sub_seed(c.seed(), i as u64))?;
        let _ = writeln!(
            csv,
            "{label},{},{},{},{:e},{:e},{}",
            r.samples, r.horizon, r.blow_ups, r.max_energy_drift, r.min_eigenvalue, r.pass
        );
        list.push(Assertion::at_most(format!("{label} blow-ups"), r.blow_ups as f64, 0.0));
        list.push(Assertion::at_most(format!("{label} energy drift"), r.max_energy_drift, 1e-6));
    }
    Ok((list, vec![artifact(format!("{}.csv", c.stem()), csv)]))
}

/// Decay exponents along the geodesic from `u0` with cosine and sine
/// coefficients `amplitude * n^-exponent` (0.05, 4) on `modes` (32) Fourier modes, Sobolev order 2,
/// horizon `t` (1), step `h` (1e-2). Each checkpoint exponent must lie
/// within 0.5 of `-exponent`.
pub(super) fn noloss(c: &ExperimentConfig) -> Outcome {
    let model = model_or(c, "diffeo", Some(32))?;
    let GroupModel::FourierDiffeo(d) = &model else {
        return Err(Error::Config("noloss needs the `diffeo` model".into()));
    };
    let d: &DiffeoModel = d;
    let metrics = metrics_or(c, &model, vec![MetricSpec { sobolev: Some(2.0), ..Default::default() }])?;
    let a = c.options.amplitude.unwrap_or(0.05);
    let p = c.options.exponent.unwrap_or(4.0);
    let u0 = DVector::from_fn(d.dim(), |i, _| if i == 0 { 0.0 } else { a * (DiffeoModel::mode_of(i) as f64).powf(-p) });
    let t_end = c.options.t.unwrap_or(1.0);
    let h = c.options.h.unwrap_or(1e-2);
    let mut list = Vec::new();
    let mut csv = String::from("metric,t,velocity_exponent,velocity_residual,group_exponent,high_mode_ratio\n");
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for (label, metric) in &metrics {
        let r = no_loss_no_gain_check(metric, &u0, t_end, h)?;
        let mut worst = 0.0f64;
        for cp in &r.checkpoints {
            let _ = writeln!(
                csv,
                "{label},{},{},{},{},{:e}",
                cp.t,
                opt(cp.velocity_exponent),
                opt(cp.velocity_residual),
                opt(cp.group_exponent),
                cp.high_mode_ratio
            );
            worst = worst.max(cp.velocity_exponent.map(|e| (e + p).abs()).unwrap_or(f64::INFINITY));
        }
        list.push(Assertion::at_most(format!("{label} max |exponent + {p}|"), worst, 0.5));
        list.push(Assertion::holds(format!("{label} no loss no gain"), r.pass));
    }
    Ok((list, vec![artifact(format!("{}.csv", c.stem()), csv)]))
}

/// Ratios `d(e, x) / |kappa(x)|` for `samples` (100) seeded targets per
/// metric (default: identity and `diag(1, 2, 3)` on SO(3)); the minimum must
/// reach `0.9 sqrt(lambda_min(A))`. Solver defaults: adjoint gradient,
/// 2 restarts, 16 intervals.
pub(super) fn nondegeneracy(c: &ExperimentConfig) -> Outcome {
    let model = model_or(c, "so3", None)?;
    let metrics = metrics_or(
        c,
        &model,
        vec![MetricSpec::default(), MetricSpec { inertia: Some(vec![1.0, 2.0, 3.0]), ..Default::default() }],
    )?;
    let gradient = match c.options.gradient.as_deref() {
        Some("finite-difference") => GradientMethod::FiniteDifference,
        _ => GradientMethod::Adjoint,
    };
    let n = c.options.samples.unwrap_or(100);
    let mut list = Vec::new();
    let mut csv = String::from("metric,sample,ratio,bound\n");
    for (i, (label, metric)) in metrics.iter().enumerate() {
        let opts = BvpOptions {
            intervals: c.options.intervals.unwrap_or(16),
            restarts: c.options.restarts.unwrap_or(2),
            seed: sub_seed(c.seed(), 2 * i as u64 + 1),
            gradient,
            ..Default::default()
        };
        let r = crate::bvp::nondegeneracy_probe(metric, n, sub_seed(c.seed(), 2 * i as u64), &opts)?;
        for (k, ratio) in r.ratios.iter().enumerate() {
            let _ = writeln!(csv, "{label},{k},{ratio:e},{:e}", r.bound);
        }
        list.push(Assertion::at_least(format!("{label} min ratio"), r.min_ratio, r.bound));
        list.push(Assertion::at_most(format!("{label} unconverged solves"), r.not_converged as f64, 0.0));
    }
    Ok((list, vec![artifact(format!("{}.csv", c.stem()), csv)]))
}
