//! Geodesic boundary value problems as L^2 optimal control:
//! minimize `sum_i dt <A xi_i, xi_i>` over piecewise-constant controls subject
//! to `Evol(xi)(1) = x1 x0^-1`, by an augmented Lagrangian with penalty
//! continuation and L-BFGS inner solves.

use crate::error::{Error, Result};
use crate::groups::{evolve, AlgebraVector, ControlPath, GroupModel, GroupPoint, Interpolation};
use crate::riemann::{shoot, shoot_adaptive, Metric};
use argmin::core::{CostFunction, Executor, Gradient, State};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use std::fmt::Write as _;

/// `energy(xi) = int_0^1 <A xi, xi> dt`; midpoint rule on piecewise-constant
/// paths, trapezoid rule on linear ones.
pub fn energy(xi: &ControlPath, metric: &Metric) -> f64 {
    let dt = xi.dt();
    let s = xi.samples();
    match xi.interpolation() {
        Interpolation::PiecewiseConstant => s.iter().map(|u| metric.energy(u)).sum::<f64>() * dt,
        Interpolation::Linear => s.windows(2).map(|w| 0.5 * (metric.energy(&w[0]) + metric.energy(&w[1]))).sum::<f64>() * dt,
    }
}

#[derive(Clone, Debug)]
pub struct BvpProblem {
    pub metric: Metric,
    pub x0: GroupPoint,
    pub x1: GroupPoint,
    pub intervals: usize,
    /// `x1 x0^-1`.
    pub target: GroupPoint,
}

impl BvpProblem {
    pub fn new(metric: &Metric, x0: &GroupPoint, x1: &GroupPoint, intervals: usize) -> Result<Self> {
        let model = metric.model();
        model.check(x0)?;
        model.check(x1)?;
        if intervals < 4 {
            return Err(Error::InvalidInput("at least 4 control intervals are required".into()));
        }
        let target = model.multiply(x1, &model.inverse(x0)?)?;
        Ok(BvpProblem { metric: metric.clone(), x0: x0.clone(), x1: x1.clone(), intervals, target })
    }

    fn model(&self) -> &GroupModel {
        self.metric.model()
    }
}

#[derive(Clone, Debug)]
pub struct BvpOptions {
    pub intervals: usize,
    pub penalties: Vec<f64>,
    pub restarts: usize,
    pub seed: u64,
    pub max_iters: u64,
    /// Standard deviation of the restart perturbations.
    pub sigma: f64,
    pub tol: f64,
    /// If set, perturbed initializers are shrunk toward the chart-log
    /// initializer until their energy is at most `factor` times its energy.
    pub ball_factor: Option<f64>,
    /// Relative finite-difference step for the endpoint Jacobian.
    pub fd_step: f64,
    pub gradient: GradientMethod,
    /// Newton steps on the optimality system after the penalty stages.
    pub polish_iters: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMethod {
    /// Central differences of the endpoint defect in every control coefficient.
    #[default]
    FiniteDifference,
    /// Chain rule through the product of interval exponentials:
    /// `d c / d xi_i = dkappa_c Ad_{S_i} dt dexp_{dt xi_i}`, `S_i` the later factors.
    Adjoint,
}

impl Default for BvpOptions {
    fn default() -> Self {
        BvpOptions {
            intervals: 16,
            penalties: vec![1e1, 1e2, 1e3, 1e4, 1e5, 1e6],
            restarts: 8,
            seed: 0,
            max_iters: 500,
            sigma: 0.1,
            tol: 1e-6,
            ball_factor: None,
            fd_step: 1e-6,
            gradient: GradientMethod::FiniteDifference,
            polish_iters: 20,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BvpSolution {
    #[serde(skip)]
    pub xi: ControlPath,
    pub energy: f64,
    /// `|kappa(Evol(xi)(1) target^-1)|`.
    pub endpoint_error: f64,
    /// Max-norm of the Lagrangian gradient per unit time.
    pub stationarity: f64,
    pub converged: bool,
    pub restarts_used: usize,
    /// Index of the restart that produced this solution.
    pub best_restart: usize,
    /// Endpoint error after each penalty stage of the returned run.
    pub stage_errors: Vec<f64>,
    pub monotone: bool,
}

impl BvpSolution {
    pub fn distance(&self) -> f64 {
        self.energy.max(0.0).sqrt()
    }
}

struct Objective<'a> {
    problem: &'a BvpProblem,
    model: &'a GroupModel,
    target_inv: GroupPoint,
    dim: usize,
    dt: f64,
    mu: f64,
    lambda: DVector<f64>,
    fd_step: f64,
    gradient: GradientMethod,
}

impl Objective<'_> {
    fn path(&self, p: &[f64]) -> ControlPath {
        let samples = p.chunks(self.dim).map(DVector::from_column_slice).collect();
        ControlPath::new(samples, Interpolation::PiecewiseConstant).expect("nonempty control")
    }

    /// Endpoint defect `kappa(Evol(xi)(1) target^-1)`.
    fn defect(&self, p: &[f64]) -> Result<DVector<f64>> {
        let xi = self.path(p);
        let g = evolve(self.model, &xi, self.dt)?.pop().expect("evolution has an endpoint");
        self.model.chart(&self.model.multiply(&g, &self.target_inv)?)
    }

    fn energy_of(&self, p: &[f64]) -> f64 {
        energy(&self.path(p), &self.problem.metric)
    }

    fn energy_grad(&self, p: &[f64]) -> DVector<f64> {
        let g = self.problem.metric.gram();
        let mut out = DVector::zeros(p.len());
        for (i, chunk) in p.chunks(self.dim).enumerate() {
            let v = g * DVector::from_column_slice(chunk) * (2.0 * self.dt);
            out.rows_mut(i * self.dim, self.dim).copy_from(&v);
        }
        out
    }

    fn jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        match self.gradient {
            GradientMethod::FiniteDifference => self.jacobian_fd(p),
            GradientMethod::Adjoint => self.jacobian_adjoint(p),
        }
    }

    fn jacobian_adjoint(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let m = self.model;
        let d = self.dim;
        let k = p.len() / d;
        let factors: Vec<GroupPoint> =
            p.chunks(d).map(|c| m.exp(&(DVector::from_column_slice(c) * self.dt))).collect::<Result<_>>()?;
        let mut g = m.identity();
        for f in &factors {
            g = m.multiply(f, &g)?;
        }
        let c = m.chart(&m.multiply(&g, &self.target_inv)?)?;
        let mut dkappa = DMatrix::zeros(d, d);
        let mut e = DVector::zeros(d);
        for j in 0..d {
            e.fill(0.0);
            e[j] = 1.0;
            dkappa.set_column(j, &m.chart_velocity(&c, &e)?);
        }
        let mut jac = DMatrix::zeros(d, p.len());
        let mut suffix = m.identity();
        for i in (0..k).rev() {
            let x = DVector::from_column_slice(&p[i * d..(i + 1) * d]) * self.dt;
            let block = &dkappa * adjoint_matrix(m, &suffix)? * dexp_matrix(m, &x)? * self.dt;
            jac.columns_mut(i * d, d).copy_from(&block);
            suffix = m.multiply(&suffix, &factors[i])?;
        }
        Ok(jac)
    }

    fn jacobian_fd(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let n = p.len();
        let mut jac = DMatrix::zeros(self.dim, n);
        let mut q = p.to_vec();
        for j in 0..n {
            let h = self.fd_step * (1.0 + p[j].abs());
            q[j] = p[j] + h;
            let a = self.defect(&q)?;
            q[j] = p[j] - h;
            let b = self.defect(&q)?;
            q[j] = p[j];
            jac.set_column(j, &((a - b) / (2.0 * h)));
        }
        Ok(jac)
    }

    fn value(&self, p: &[f64]) -> Result<f64> {
        let c = self.defect(p)?;
        Ok(self.energy_of(p) + self.lambda.dot(&c) + self.mu * c.norm_squared())
    }

    fn grad(&self, p: &[f64]) -> Result<DVector<f64>> {
        let c = self.defect(p)?;
        let jac = self.jacobian(p)?;
        Ok(self.energy_grad(p) + jac.transpose() * (&self.lambda + c * (2.0 * self.mu)))
    }
}

/// `Ad_s` in algebra coordinates: columns `d/dt kappa(s exp(t e_j) s^-1)`.
fn adjoint_matrix(m: &GroupModel, s: &GroupPoint) -> Result<DMatrix<f64>> {
    let d = m.algebra_dim();
    let sinv = m.inverse(s)?;
    let mut out = DMatrix::zeros(d, d);
    let h = 1e-3;
    for j in 0..d {
        let at = |t: f64| -> Result<DVector<f64>> {
            let mut e = DVector::zeros(d);
            e[j] = t;
            m.chart(&m.multiply(&m.multiply(s, &m.exp(&e)?)?, &sinv)?)
        };
        let col = ((at(h)? - at(-h)?) * 8.0 - (at(2.0 * h)? - at(-2.0 * h)?)) / (12.0 * h);
        out.set_column(j, &col);
    }
    Ok(out)
}

/// Right-trivialized differential of `exp` at `x`: `sum_k ad_x^k / (k+1)!`.
fn dexp_matrix(m: &GroupModel, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    let d = x.len();
    let ad = m.ad_matrix(x)?;
    let mut term = DMatrix::identity(d, d);
    let mut sum = term.clone();
    for k in 1..40 {
        term = &ad * term / (k as f64 + 1.0);
        sum += &term;
        if term.amax() < 1e-18 {
            break;
        }
    }
    Ok(sum)
}

fn to_argmin(e: Error) -> argmin::core::Error {
    argmin::core::Error::msg(e.to_string())
}

impl CostFunction for &Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;
    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        // Leaving the chart reads as an infinite cost so the line search backs off.
        Ok(self.value(p).unwrap_or(f64::INFINITY))
    }
}

impl Gradient for &Objective<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;
    fn gradient(&self, p: &Vec<f64>) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        Ok(self.grad(p).map_err(to_argmin)?.as_slice().to_vec())
    }
}

struct RunResult {
    params: Vec<f64>,
    energy: f64,
    endpoint_error: f64,
    stationarity: f64,
    stage_errors: Vec<f64>,
}

fn run_once(problem: &BvpProblem, opts: &BvpOptions, init: Vec<f64>) -> Result<RunResult> {
    let model = problem.model();
    let dim = model.algebra_dim();
    let mut obj = Objective {
        problem,
        model,
        target_inv: model.inverse(&problem.target)?,
        dim,
        dt: 1.0 / opts.intervals as f64,
        mu: opts.penalties[0],
        lambda: DVector::zeros(dim),
        fd_step: opts.fd_step,
        gradient: opts.gradient,
    };
    let mut p = init;
    let mut stage_errors = Vec::with_capacity(opts.penalties.len());
    for &mu in &opts.penalties {
        obj.mu = mu;
        let linesearch: MoreThuenteLineSearch<Vec<f64>, Vec<f64>, f64> = MoreThuenteLineSearch::new();
        let solver = LBFGS::new(linesearch, 10)
            .with_tolerance_grad(1e-12)
            .and_then(|s| s.with_tolerance_cost(1e-16))
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        let start = p.clone();
        let res = Executor::new(&obj, solver).configure(|s| s.param(start).max_iters(opts.max_iters)).run();
        let next = match res {
            Ok(r) => { let b: Option<&Vec<f64>> = r.state().get_best_param(); b.cloned() },
            Err(_) => None,
        };
        if let Some(q) = next {
            if obj.value(&q).unwrap_or(f64::INFINITY) <= obj.value(&p).unwrap_or(f64::INFINITY) {
                p = q;
            }
        }
        let c = obj.defect(&p)?;
        stage_errors.push(c.norm());
        obj.lambda += c * (2.0 * mu);
    }
    let (mut c, mut station) = optimality(&obj, &p)?;
    for _ in 0..opts.polish_iters {
        if c.norm() <= 0.01 * opts.tol && station <= 0.01 * opts.tol {
            break;
        }
        let Ok((q, nu)) = newton_kkt(&obj, &p) else { break };
        let saved = std::mem::replace(&mut obj.lambda, nu);
        match optimality(&obj, &q) {
            Ok((c2, s2)) if c2.norm().max(s2) < c.norm().max(station) => {
                p = q;
                c = c2;
                station = s2;
            }
            _ => {
                obj.lambda = saved;
                break;
            }
        }
    }
    Ok(RunResult {
        energy: obj.energy_of(&p),
        endpoint_error: c.norm(),
        stationarity: station,
        params: p,
        stage_errors,
    })
}

/// Endpoint defect and `max |grad E + J^T lambda| / dt`.
fn optimality(obj: &Objective, p: &[f64]) -> Result<(DVector<f64>, f64)> {
    let c = obj.defect(p)?;
    let g = obj.energy_grad(p) + obj.jacobian(p)?.transpose() * &obj.lambda;
    Ok((c, g.amax() / obj.dt))
}

/// Largest problem size for which the constraint curvature enters the
/// Newton matrix (it costs one Jacobian per coordinate).
const CURVATURE_MAX_PARAMS: usize = 200;

/// One Newton step on `grad E + J^T nu = 0`, `c = 0`; returns the new point
/// and multiplier.
fn newton_kkt(obj: &Objective, p: &[f64]) -> Result<(Vec<f64>, DVector<f64>)> {
    let n = p.len();
    let d = obj.dim;
    let jac = obj.jacobian(p)?;
    let c = obj.defect(p)?;
    let mut hess = DMatrix::zeros(n, n);
    let g = obj.problem.metric.gram() * (2.0 * obj.dt);
    for i in 0..n / d {
        hess.view_mut((i * d, i * d), (d, d)).copy_from(&g);
    }
    if n <= CURVATURE_MAX_PARAMS {
        let mut q = p.to_vec();
        let mut curv = DMatrix::zeros(n, n);
        for j in 0..n {
            let h = 1e-4 * (1.0 + p[j].abs());
            q[j] = p[j] + h;
            let a = obj.jacobian(&q)?.transpose() * &obj.lambda;
            q[j] = p[j] - h;
            let b = obj.jacobian(&q)?.transpose() * &obj.lambda;
            q[j] = p[j];
            curv.set_column(j, &((a - b) / (2.0 * h)));
        }
        hess += (&curv + curv.transpose()) * 0.5;
    }
    let mut kkt = DMatrix::zeros(n + d, n + d);
    kkt.view_mut((0, 0), (n, n)).copy_from(&hess);
    kkt.view_mut((n, 0), (d, n)).copy_from(&jac);
    kkt.view_mut((0, n), (n, d)).copy_from(&jac.transpose());
    let mut rhs = DVector::zeros(n + d);
    rhs.rows_mut(0, n).copy_from(&(-obj.energy_grad(p)));
    rhs.rows_mut(n, d).copy_from(&(-c));
    let sol = kkt.lu().solve(&rhs).ok_or(Error::NotConverged { endpoint_error: f64::NAN, energy: f64::NAN })?;
    let q = p.iter().zip(sol.rows(0, n).iter()).map(|(a, b)| a + b).collect();
    Ok((q, sol.rows(n, d).into_owned()))
}

/// Multi-start augmented-Lagrangian solve. The first start is the constant
/// chart-log control `kappa(x1 x0^-1)`; later starts add seeded Gaussian
/// noise. Non-convergence is flagged in the returned solution.
pub fn solve_bvp(problem: &BvpProblem, opts: &BvpOptions) -> Result<BvpSolution> {
    let model = problem.model();
    let dim = model.algebra_dim();
    let m = problem.intervals;
    let opts = BvpOptions { intervals: m, ..opts.clone() };
    if opts.penalties.is_empty() {
        return Err(Error::InvalidInput("empty penalty schedule".into()));
    }
    let log = model.chart(&problem.target)?;
    if log.amax() == 0.0 {
        return Ok(BvpSolution {
            xi: ControlPath::zero(dim, m),
            energy: 0.0,
            endpoint_error: 0.0,
            stationarity: 0.0,
            converged: true,
            restarts_used: 0,
            best_restart: 0,
            stage_errors: vec![],
            monotone: true,
        });
    }
    let base: Vec<f64> = (0..m).flat_map(|_| log.iter().cloned()).collect();
    let base_energy = problem.metric.energy(&log);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let normal = Normal::new(0.0, opts.sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let runs = opts.restarts.max(1);
    let mut best: Option<(usize, RunResult, bool)> = None;
    for r in 0..runs {
        let mut init = base.clone();
        if r > 0 {
            let noise: Vec<f64> = (0..init.len()).map(|_| normal.sample(&mut rng)).collect();
            let mut scale = 1.0;
            loop {
                let cand: Vec<f64> = base.iter().zip(&noise).map(|(b, n)| b + scale * n).collect();
                let e = energy(
                    &ControlPath::new(cand.chunks(dim).map(DVector::from_column_slice).collect(), Interpolation::PiecewiseConstant)?,
                    &problem.metric,
                );
                match opts.ball_factor {
                    Some(f) if e > f * base_energy.max(1e-300) && scale > 1e-3 => scale *= 0.5,
                    _ => {
                        init = cand;
                        break;
                    }
                }
            }
        }
        let run = match run_once(problem, &opts, init) {
            Ok(run) => run,
            Err(Error::BlowUp { .. }) | Err(Error::ChartBoundary(_)) | Err(Error::NotADiffeomorphism { .. }) => continue,
            Err(e) => return Err(e),
        };
        let ok = run.endpoint_error <= opts.tol && run.stationarity <= opts.tol;
        let better = match &best {
            None => true,
            Some((_, b, bok)) => match (ok, *bok) {
                (true, false) => true,
                (false, true) => false,
                (true, true) => run.energy < b.energy,
                (false, false) => run.endpoint_error < b.endpoint_error,
            },
        };
        if better {
            best = Some((r, run, ok));
        }
    }
    let (idx, run, ok) = best.ok_or(Error::NotConverged { endpoint_error: f64::INFINITY, energy: f64::INFINITY })?;
    // Roundoff-level increases below 1e-12 do not count.
    let monotone = run.stage_errors.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    Ok(BvpSolution {
        xi: ControlPath::new(run.params.chunks(dim).map(DVector::from_column_slice).collect(), Interpolation::PiecewiseConstant)?,
        energy: run.energy,
        endpoint_error: run.endpoint_error,
        stationarity: run.stationarity,
        converged: ok,
        restarts_used: runs,
        best_restart: idx,
        stage_errors: run.stage_errors,
        monotone,
    })
}

/// `sqrt(E)` of a converged minimizer; `NotConverged` otherwise.
pub fn geodesic_distance(metric: &Metric, x0: &GroupPoint, x1: &GroupPoint, opts: &BvpOptions) -> Result<f64> {
    let problem = BvpProblem::new(metric, x0, x1, opts.intervals)?;
    let sol = solve_bvp(&problem, opts)?;
    if sol.converged {
        Ok(sol.distance())
    } else {
        Err(Error::NotConverged { endpoint_error: sol.endpoint_error, energy: sol.energy })
    }
}

/// Endpoint mismatch of the geodesic shot from the control extrapolated to
/// `t = 0`, `u(0) ~ (3 xi_0 - xi_1) / 2`, against `x1 x0^-1`.
pub fn shooting_gap(problem: &BvpProblem, solution: &BvpSolution, h: f64) -> Result<f64> {
    let s = solution.xi.samples();
    let u0 = (&s[0] * 3.0 - &s[1]) * 0.5;
    let tr = shoot(&problem.metric, &u0, 1.0, h)?;
    problem.model().chart_distance(&tr.last().g, &problem.target)
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimalityReport {
    /// `(max - min) / mean` of `|xi_i|_A`.
    pub speed_variation: f64,
    /// Max-norm of `(xi_{i+1} - xi_i)/dt + ad^T_{xibar} xibar` over the grid.
    pub euler_arnold_residual: f64,
    pub euler_arnold_tol: f64,
    pub constant_speed: bool,
    pub euler_arnold: bool,
    pub pass: bool,
}

pub const SPEED_TOL: f64 = 1e-4;

/// Checks that a minimizer has constant speed and solves the discretized
/// Euler-Arnold equation; the residual tolerance is `5 dt^2 max|u|^3 + 1e-5`.
pub fn minimality_check(solution: &BvpSolution, metric: &Metric) -> Result<MinimalityReport> {
    let s = solution.xi.samples();
    let dt = solution.xi.dt();
    let speeds: Vec<f64> = s.iter().map(|u| metric.norm(u)).collect();
    let max = speeds.iter().cloned().fold(0.0, f64::max);
    let min = speeds.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = speeds.iter().sum::<f64>() / speeds.len() as f64;
    let speed_variation = if mean > 0.0 { (max - min) / mean } else { 0.0 };
    let mut residual = 0.0f64;
    for w in s.windows(2) {
        let mid = (&w[0] + &w[1]) * 0.5;
        let r = (&w[1] - &w[0]) / dt - metric.euler_arnold(&mid)?;
        residual = residual.max(r.amax());
    }
    let euler_arnold_tol = 5.0 * dt * dt * max.powi(3) + 1e-5;
    let constant_speed = speed_variation <= SPEED_TOL;
    let euler_arnold = residual <= euler_arnold_tol;
    Ok(MinimalityReport {
        speed_variation,
        euler_arnold_residual: residual,
        euler_arnold_tol,
        constant_speed,
        euler_arnold,
        pass: constant_speed && euler_arnold,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CompletenessReport {
    pub samples: usize,
    pub horizon: f64,
    pub blow_ups: usize,
    pub max_energy_drift: f64,
    pub min_eigenvalue: f64,
    pub pass: bool,
}

pub const COMPLETENESS_DRIFT_TOL: f64 = 1e-6;

/// Shoots `n_samples` seeded unit-energy velocities to `T` with adaptive steps.
pub fn completeness_probe(metric: &Metric, n_samples: usize, horizon: f64, seed: u64) -> Result<CompletenessReport> {
    let model = metric.model();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CompletenessReport {
        samples: n_samples,
        horizon,
        blow_ups: 0,
        max_energy_drift: 0.0,
        min_eigenvalue: metric.min_eigenvalue(),
        pass: false,
    };
    for _ in 0..n_samples {
        let mut u = model.sample_algebra(&mut rng, 1.0);
        let e = metric.energy(&u);
        if e == 0.0 {
            continue;
        }
        u /= e.sqrt();
        match shoot_adaptive(metric, &u, horizon, 1e-10, 1e6) {
            Ok(run) => report.max_energy_drift = report.max_energy_drift.max(run.max_energy_drift),
            Err(Error::BlowUp { .. }) => report.blow_ups += 1,
            Err(e) => return Err(e),
        }
    }
    report.pass = report.blow_ups == 0 && report.max_energy_drift <= COMPLETENESS_DRIFT_TOL;
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct NondegeneracyReport {
    pub samples: usize,
    pub min_ratio: f64,
    pub ratios: Vec<f64>,
    pub not_converged: usize,
    /// `0.9 sqrt(lambda_min(A))`.
    pub bound: f64,
    pub pass: bool,
}

/// Distances `d(e, x)` against chart norms for seeded `x` with `|kappa(x)|`
/// uniform in `[0.1, 1]`.
pub fn nondegeneracy_probe(metric: &Metric, n_samples: usize, seed: u64, opts: &BvpOptions) -> Result<NondegeneracyReport> {
    let model = metric.model();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = model.identity();
    let mut ratios = Vec::with_capacity(n_samples);
    let mut not_converged = 0;
    for k in 0..n_samples {
        let dir = model.sample_algebra(&mut rng, 1.0);
        if dir.norm() == 0.0 {
            continue;
        }
        let r = 0.1 + 0.9 * rand::Rng::random::<f64>(&mut rng);
        let z = &dir * (r / dir.norm());
        let x = model.chart_inv(&z)?;
        let sub = BvpOptions { seed: opts.seed.wrapping_add(k as u64), ..opts.clone() };
        match geodesic_distance(metric, &e, &x, &sub) {
            Ok(d) => ratios.push(d / r),
            Err(Error::NotConverged { .. }) => not_converged += 1,
            Err(err) => return Err(err),
        }
    }
    let min_ratio = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let bound = 0.9 * metric.min_eigenvalue().sqrt();
    Ok(NondegeneracyReport {
        samples: n_samples,
        min_ratio,
        ratios,
        not_converged,
        bound,
        pass: not_converged == 0 && min_ratio >= bound,
    })
}

fn join_coords(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ")
}

/// One row per solve: `x0, x1, energy, distance, endpoint_error, converged,
/// restarts_used`, with chart coordinates space-separated inside a field.
pub fn bvp_csv(rows: &[(&BvpProblem, &BvpSolution)]) -> Result<String> {
    let mut out = String::from("x0,x1,energy,distance,endpoint_error,converged,restarts_used\n");
    for (p, s) in rows {
        let m = p.model();
        let _ = writeln!(
            out,
            "{},{},{:e},{:e},{:e},{},{}",
            join_coords(m.chart(&p.x0)?.as_slice()),
            join_coords(m.chart(&p.x1)?.as_slice()),
            s.energy,
            s.distance(),
            s.endpoint_error,
            s.converged,
            s.restarts_used
        );
    }
    Ok(out)
}

/// Control samples as a plain vector (for reports).
pub fn control_norms(xi: &ControlPath, metric: &Metric) -> Vec<f64> {
    xi.samples().iter().map(|u: &AlgebraVector| metric.norm(u)).collect()
}
