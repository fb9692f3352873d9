//! Independent reference computations and the seeded property suite for
//! the jet algebra.
//!
//! The reference route for `j^k(g o f)` substitutes the re-expanded `f`
//! into `g` as ordinary polynomials and never touches [`compose`].

use super::poly::{substitute, Poly, PolyMap};
use super::{
    compose, evaluate, invert, jet_distance, jet_norm, jet_of_polynomial, vec_norm, Jet, SymBlock,
    TangentPoint,
};
use crate::error::Result;
use crate::scalar::{Rational, Scalar};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Uniform dyadic number in `[-1, 1]` with denominator 8, exact in every scalar type.
fn dyadic(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(-8i32..=8) as f64 / 8.0
}

pub fn random_polymap(rng: &mut ChaCha8Rng, nvars: usize, nout: usize, degree: usize) -> PolyMap<f64> {
    let comps = (0..nout)
        .map(|_| {
            let mut p = Poly::zero(nvars);
            for d in 0..=degree {
                for idx in super::sorted_indices(nvars, d.max(1)) {
                    if d == 0 {
                        p.add_term(vec![0; nvars], dyadic(rng));
                        break;
                    }
                    let mut e = vec![0u8; nvars];
                    for &i in &idx {
                        e[i] += 1;
                    }
                    p.add_term(e, dyadic(rng));
                }
            }
            p
        })
        .collect();
    PolyMap::new(nvars, comps)
}

fn convert_map<S: Scalar>(f: &PolyMap<f64>) -> PolyMap<S> {
    let comps = f
        .components
        .iter()
        .map(|p| {
            let mut q = Poly::zero(f.nvars);
            for (e, c) in p.terms() {
                q.add_term(e.clone(), S::from_f64(*c));
            }
            q
        })
        .collect();
    PolyMap::new(f.nvars, comps)
}

/// `j^k_x (g o f)` by direct truncated substitution.
pub fn composite_jet_reference<S: Scalar>(
    g: &PolyMap<S>,
    f: &PolyMap<S>,
    x: &[S],
    k: usize,
) -> Result<Jet<S>> {
    let n = f.nvars;
    let f_shift = f.shifted(x, k);
    let comps: Vec<Poly<S>> = g.components.iter().map(|gc| substitute(gc, &f_shift.components, k)).collect();
    let target = comps.iter().map(|p| p.coeff(&vec![0; n])).collect();
    let blocks = (1..=k)
        .map(|j| {
            let parts: Vec<_> = comps.iter().map(|p| p.degree_part(j)).collect();
            SymBlock::from_polys(j, n, &parts)
        })
        .collect();
    Jet::new(x.to_vec(), target, blocks)
}

/// Random jet with entries uniform in `[-scale, scale]`.
pub fn random_jet(rng: &mut ChaCha8Rng, n: usize, m: usize, k: usize, scale: f64) -> Jet<f64> {
    let u = |rng: &mut ChaCha8Rng| scale * (rng.random::<f64>() * 2.0 - 1.0);
    let source = (0..n).map(|_| u(rng)).collect();
    let target = (0..m).map(|_| u(rng)).collect();
    let blocks = (1..=k)
        .map(|j| {
            let len = super::sorted_indices(n, j).len() * m;
            SymBlock::from_canonical(j, n, m, (0..len).map(|_| u(rng)).collect()).expect("shape")
        })
        .collect();
    Jet::new(source, target, blocks).expect("shape")
}

/// Random square jet whose linear part is `I + 0.3 * noise`, hence well conditioned.
pub fn random_invertible_jet(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Jet<f64> {
    let base = random_jet(rng, n, n, k, 1.0);
    let mut lin = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            lin[i * n + j] = if i == j { 1.0 } else { 0.0 } + 0.3 * (rng.random::<f64>() * 2.0 - 1.0);
        }
    }
    let mut blocks = base.blocks().to_vec();
    blocks[0] = SymBlock::linear(n, n, &lin);
    Jet::new(base.source().to_vec(), base.target().to_vec(), blocks).expect("shape")
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct FunctorialityReport {
    pub samples: usize,
    pub max_error: f64,
    pub rational_samples: usize,
    pub rational_exact: bool,
}

/// `compose(j^k g, j^k f)` against the substitution reference on random
/// polynomial pairs (dims <= 3, degree <= 4, k <= 4). Samples with dims <= 2
/// and k <= 3 are repeated in exact rational arithmetic.
pub fn functoriality_suite(rng: &mut ChaCha8Rng, samples: usize) -> Result<FunctorialityReport> {
    let mut report = FunctorialityReport { samples, rational_exact: true, ..Default::default() };
    for _ in 0..samples {
        let n = rng.random_range(1..=3);
        let m = rng.random_range(1..=3);
        let l = rng.random_range(1..=3);
        let k = rng.random_range(1..=4);
        let df = rng.random_range(1..=4);
        let dg = rng.random_range(1..=4);
        let f = random_polymap(rng, n, m, df);
        let g = random_polymap(rng, m, l, dg);
        let x: Vec<f64> = (0..n).map(|_| dyadic(rng)).collect();
        let jf = jet_of_polynomial(&f, &x, k)?;
        let jg = jet_of_polynomial(&g, jf.target(), k)?;
        let lhs = compose(&jg, &jf)?;
        let rhs = composite_jet_reference(&g, &f, &x, k)?;
        report.max_error = report.max_error.max(lhs.max_abs_diff(&rhs));

        if n <= 2 && m <= 2 && l <= 2 && k <= 3 {
            report.rational_samples += 1;
            let fq: PolyMap<Rational> = convert_map(&f);
            let gq: PolyMap<Rational> = convert_map(&g);
            let xq: Vec<Rational> = x.iter().map(|&v| Rational::from_f64(v)).collect();
            let jfq = jet_of_polynomial(&fq, &xq, k)?;
            let jgq = jet_of_polynomial(&gq, jfq.target(), k)?;
            let lhs = compose(&jgq, &jfq)?;
            let rhs = composite_jet_reference(&gq, &fq, &xq, k)?;
            report.rational_exact &= lhs == rhs;
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct InversionBoundsReport {
    pub samples: usize,
    pub max_inversion_error: f64,
    pub composition_bound_violations: usize,
    pub continuity_bound_violations: usize,
    pub evaluation_bound_violations: usize,
    /// Smallest slack `rhs - lhs` seen for each bound.
    pub min_composition_slack: f64,
    pub min_continuity_slack: f64,
    pub min_evaluation_slack: f64,
}

fn perturb(rng: &mut ChaCha8Rng, j: &Jet<f64>, eps: f64) -> Jet<f64> {
    let d = random_jet(rng, j.input_dim(), j.output_dim(), j.order(), eps);
    let add = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<_>>();
    let blocks = j
        .blocks()
        .iter()
        .zip(d.blocks())
        .map(|(a, b)| a.zip_with(b, |x, y| x + y).expect("shape"))
        .collect();
    Jet::new(add(j.source(), d.source()), add(j.target(), d.target()), blocks).expect("shape")
}

/// Inversion round trips plus the composition and evaluation norm bounds on
/// random jets in dimensions 1..=2 and orders 1..=4.
pub fn inversion_and_bounds_suite(rng: &mut ChaCha8Rng, samples: usize) -> Result<InversionBoundsReport> {
    let mut r = InversionBoundsReport {
        samples,
        min_composition_slack: f64::INFINITY,
        min_continuity_slack: f64::INFINITY,
        min_evaluation_slack: f64::INFINITY,
        ..Default::default()
    };
    for _ in 0..samples {
        let n = rng.random_range(1..=2);
        let k = rng.random_range(1..=4);

        let sigma = random_invertible_jet(rng, n, k);
        let inv = invert(&sigma)?;
        let left = compose(&inv, &sigma)?;
        let right = compose(&sigma, &inv)?;
        let err = left
            .max_abs_diff(&Jet::identity(sigma.source().to_vec(), k))
            .max(right.max_abs_diff(&Jet::identity(sigma.target().to_vec(), k)));
        r.max_inversion_error = r.max_inversion_error.max(err);

        // composition bound ||tau . sigma|| <= (1 + ||tau||)(1 + ||sigma||^k)
        let m = rng.random_range(1..=2);
        let inner = random_jet(rng, n, m, k, 1.0);
        let outer = {
            let l = rng.random_range(1..=2);
            let t = random_jet(rng, m, l, k, 1.0);
            Jet::new(inner.target().to_vec(), t.target().to_vec(), t.blocks().to_vec())?
        };
        let comp = compose(&outer, &inner)?;
        let ns = jet_norm(&inner);
        let nt = jet_norm(&outer);
        let slack = (1.0 + nt) * (1.0 + ns.powi(k as i32)) - jet_norm(&comp);
        r.min_composition_slack = r.min_composition_slack.min(slack);
        if slack < 0.0 {
            r.composition_bound_violations += 1;
        }

        // continuity bound for perturbed pairs
        let inner2 = perturb(rng, &inner, 0.1);
        let outer2 = {
            let t = perturb(rng, &outer, 0.1);
            Jet::new(inner2.target().to_vec(), t.target().to_vec(), t.blocks().to_vec())?
        };
        let comp2 = compose(&outer2, &inner2)?;
        let ns2 = jet_norm(&inner2);
        let k1 = (k as i32) - 1;
        let rhs = jet_distance(&outer2, &outer) * (1.0 + ns2.powi(k as i32))
            + (1.0 + nt)
                * jet_distance(&inner2, &inner)
                * (1.0 + k as f64 * ns2.powi(k1) + k as f64 * ns.powi(k1));
        let slack = rhs - jet_distance(&comp2, &comp);
        r.min_continuity_slack = r.min_continuity_slack.min(slack);
        if slack < 0.0 {
            r.continuity_bound_violations += 1;
        }

        // evaluation bound ||sigma . xi|| <= ||xi|| + (k+1)||sigma|| + ||xi|| ||sigma||
        let xv: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let xi = TangentPoint::new(inner.source().to_vec(), xv.clone())?;
        let ev = evaluate(&inner, &xi)?;
        let mut xi_flat = inner.source().to_vec();
        xi_flat.extend(&xv);
        let nxi = vec_norm(&xi_flat);
        let slack = nxi + (k as f64 + 1.0) * ns + nxi * ns - jet_norm(&ev);
        r.min_evaluation_slack = r.min_evaluation_slack.min(slack);
        if slack < 0.0 {
            r.evaluation_bound_violations += 1;
        }
    }
    Ok(r)
}
