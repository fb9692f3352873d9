//! Jets of concrete maps: exact for stored polynomials, central finite
//! differences for black boxes.

use super::block::{factorial, sorted_indices, SymBlock};
use super::poly::PolyMap;
use super::Jet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use std::collections::HashMap;

/// Highest order supported by the finite-difference stencils.
pub const MAX_FD_ORDER: usize = 4;

/// Second-order accurate central stencil for the `e`-th derivative in one
/// variable: (offset in units of h, weight); divide by `h^e`.
fn stencil(e: usize) -> &'static [(i32, f64)] {
    match e {
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        4 => &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
        _ => unreachable!("stencil order"),
    }
}

/// Jet of a black-box map by tensor-product central differences.
///
/// Block `j` approximates `d^j f(x) / j!` with error `O(h^2)`; roundoff grows
/// like `eps / h^k`, and steps where that exceeds `1e-3` are rejected.
pub fn jet_of_map<F>(f: F, x: &[f64], k: usize, h: f64) -> Result<Jet<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if k > MAX_FD_ORDER {
        return Err(Error::OrderMismatch(format!(
            "finite-difference jets support order <= {MAX_FD_ORDER}, got {k}"
        )));
    }
    if !(h > 0.0) || f64::EPSILON / h.powi(k as i32) > 1e-3 {
        return Err(Error::StepTooSmall { h, order: k });
    }
    let n = x.len();
    let mut cache: HashMap<Vec<i32>, Vec<f64>> = HashMap::new();
    let mut eval = |offs: &[i32]| -> Vec<f64> {
        cache
            .entry(offs.to_vec())
            .or_insert_with(|| {
                let p: Vec<f64> = x.iter().zip(offs).map(|(xi, &o)| xi + o as f64 * h).collect();
                f(&p)
            })
            .clone()
    };
    let y = eval(&vec![0; n]);
    let m = y.len();
    let mut blocks = Vec::with_capacity(k);
    for j in 1..=k {
        let mut block = SymBlock::zeros(j, n, m);
        for idx in sorted_indices(n, j) {
            let mut exps = vec![0usize; n];
            for &i in &idx {
                exps[i] += 1;
            }
            // tensor product of 1d stencils
            let mut points: Vec<(Vec<i32>, f64)> = vec![(vec![0; n], 1.0)];
            for (var, &e) in exps.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let mut next = Vec::new();
                for (offs, w) in &points {
                    for &(o, sw) in stencil(e) {
                        let mut no = offs.clone();
                        no[var] = o;
                        next.push((no, w * sw));
                    }
                }
                points = next;
            }
            let mut deriv = vec![0.0; m];
            for (offs, w) in &points {
                let v = eval(offs);
                for (d, vi) in deriv.iter_mut().zip(&v) {
                    *d += w * vi;
                }
            }
            let scale = h.powi(j as i32) * factorial(j) as f64;
            for (o, d) in deriv.iter().enumerate() {
                block.set(o, &idx, d / scale);
            }
        }
        blocks.push(block);
    }
    Jet::new(x.to_vec(), y, blocks)
}

/// Exact jet of a stored polynomial map at `x`.
pub fn jet_of_polynomial<S: Scalar>(f: &PolyMap<S>, x: &[S], k: usize) -> Result<Jet<S>> {
    if x.len() != f.nvars {
        return Err(Error::DimensionMismatch("point dimension".into()));
    }
    let shifted = f.shifted(x, k);
    let target: Vec<S> = shifted.components.iter().map(|p| p.coeff(&vec![0; f.nvars])).collect();
    let blocks = (1..=k)
        .map(|j| {
            let parts: Vec<_> = shifted.components.iter().map(|p| p.degree_part(j)).collect();
            SymBlock::from_polys(j, f.nvars, &parts)
        })
        .collect();
    Jet::new(x.to_vec(), target, blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::{compose, Poly};

    #[test]
    fn sine_jet_by_differences() {
        let j = jet_of_map(|x| vec![x[0].sin()], &[0.0], 3, 1e-3).unwrap();
        let expected = [1.0, 0.0, -1.0 / 6.0];
        for (b, e) in j.blocks().iter().zip(expected) {
            assert!((b.canonical_coeffs()[0] - e).abs() < 1e-6, "{b:?} vs {e}");
        }
    }

    #[test]
    fn mixed_partials_2d() {
        // f(x, y) = x^2 y + y^3 at (1, 2): d2f/dxdy = 2x = 2, block entry = 2/2! = 1
        let f = |p: &[f64]| vec![p[0] * p[0] * p[1] + p[1].powi(3)];
        let j = jet_of_map(f, &[1.0, 2.0], 3, 1e-3).unwrap();
        assert!((j.block(2).get(0, &[0, 1]) - 1.0).abs() < 1e-6);
        assert!((j.block(3).get(0, &[1, 1, 1]) - 1.0).abs() < 1e-5);
        assert!((j.block(3).get(0, &[0, 0, 1]) - 1.0 / 3.0).abs() < 1e-5);
    }

    #[test]
    fn tiny_step_rejected() {
        let r = jet_of_map(|x| vec![x[0]], &[0.0], 4, 1e-5);
        assert!(matches!(r, Err(Error::StepTooSmall { .. })));
        assert!(matches!(jet_of_map(|x| vec![x[0]], &[0.0], 5, 1e-2), Err(Error::OrderMismatch(_))));
    }

    fn cubic() -> PolyMap<f64> {
        // f(x) = 1 + 2x - x^2 + 0.5 x^3
        let mut p = Poly::constant(1, 1.0);
        p.add_term(vec![1], 2.0);
        p.add_term(vec![2], -1.0);
        p.add_term(vec![3], 0.5);
        PolyMap::new(1, vec![p])
    }

    #[test]
    fn polynomial_jet_is_exact() {
        let j = jet_of_polynomial(&cubic(), &[0.0], 3).unwrap();
        assert_eq!(j.target(), &[1.0]);
        let c: Vec<f64> = j.blocks().iter().map(|b| b.canonical_coeffs()[0]).collect();
        assert_eq!(c, vec![2.0, -1.0, 0.5]);
    }

    #[test]
    fn polynomial_functoriality() {
        // g(y) = y^2 + y, composed with the cubic at x = 0.5
        let mut g = Poly::var(1, 0);
        g.add_term(vec![2], 1.0);
        let g = PolyMap::new(1, vec![g]);
        let f = cubic();
        let x = [0.5];
        let jf = jet_of_polynomial(&f, &x, 3).unwrap();
        let jg = jet_of_polynomial(&g, jf.target(), 3).unwrap();
        let gf = PolyMap::new(1, vec![crate::jets::poly::substitute(&g.components[0], &f.components, 9)]);
        let direct = jet_of_polynomial(&gf, &x, 3).unwrap();
        assert!(compose(&jg, &jf).unwrap().max_abs_diff(&direct) < 1e-12);
    }
}
