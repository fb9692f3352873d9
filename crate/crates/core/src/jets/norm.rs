//! Norms on jets: `||x|| + ||y|| + sum_j ||p_j||` with operator norms of the
//! symmetric blocks.
//!
//! For a symmetric multilinear map between Euclidean spaces the operator
//! norm equals `sup_{|v|=1} |p(v, ..., v)|`, so only the diagonal is searched.
//! Order 1 uses the exact spectral norm and a single input dimension is
//! exact as well. Otherwise the supremum is estimated from a fixed
//! deterministic set of unit vectors followed by projected gradient ascent,
//! which can only underestimate.

use super::block::SymBlock;
use super::Jet;
use crate::scalar::Scalar;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SAMPLE_DIRECTIONS: usize = 96;
const REFINE_STARTS: usize = 4;
const REFINE_ITERS: usize = 60;

pub fn vec_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diag_value(b: &SymBlock<f64>, v: &[f64]) -> Vec<f64> {
    b.eval(&vec![v; b.order()])
}

/// Gradient of `|p(v^j)|^2`, i.e. `2 j sum_o p_o(v^j) p_o(v^{j-1}, .)`.
fn diag_grad(b: &SymBlock<f64>, v: &[f64]) -> Vec<f64> {
    let j = b.order();
    let val = diag_value(b, v);
    let n = b.n_in();
    let mut g = vec![0.0; n];
    let mut e = vec![0.0; n];
    for (i, gi) in g.iter_mut().enumerate() {
        e.iter_mut().for_each(|x| *x = 0.0);
        e[i] = 1.0;
        let mut args: Vec<&[f64]> = vec![v; j - 1];
        args.push(&e);
        let d = b.eval(&args);
        *gi = 2.0 * j as f64 * val.iter().zip(&d).map(|(a, c)| a * c).sum::<f64>();
    }
    g
}

fn normalize(v: &mut [f64]) {
    let n = vec_norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

pub fn block_norm(b: &SymBlock<f64>) -> f64 {
    let n = b.n_in();
    if b.order() == 1 {
        let m = DMatrix::from_row_slice(b.n_out(), n, b.canonical_coeffs());
        return m.singular_values().iter().cloned().fold(0.0, f64::max);
    }
    if n == 1 {
        return vec_norm(b.canonical_coeffs());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x6a65_745f_6e6f_726d);
    let mut candidates: Vec<Vec<f64>> = Vec::with_capacity(2 * n + SAMPLE_DIRECTIONS);
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        candidates.push(e);
    }
    for _ in 0..SAMPLE_DIRECTIONS {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        normalize(&mut v);
        candidates.push(v);
    }
    let mut scored: Vec<(f64, Vec<f64>)> =
        candidates.into_iter().map(|v| (vec_norm(&diag_value(b, &v)), v)).collect();
    scored.sort_by(|a, c| c.0.total_cmp(&a.0));
    let mut best = scored[0].0;
    for (start_val, start) in scored.into_iter().take(REFINE_STARTS) {
        let mut v = start;
        let mut f = start_val * start_val;
        let mut step = 1.0 / (1.0 + f.sqrt());
        for _ in 0..REFINE_ITERS {
            let g = diag_grad(b, &v);
            let mut accepted = false;
            for _ in 0..20 {
                let mut cand: Vec<f64> = v.iter().zip(&g).map(|(a, d)| a + step * d).collect();
                normalize(&mut cand);
                let fc = vec_norm(&diag_value(b, &cand)).powi(2);
                if fc > f {
                    v = cand;
                    f = fc;
                    step *= 1.5;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        best = best.max(f.sqrt());
    }
    best
}

pub fn jet_norm<S: Scalar>(jet: &Jet<S>) -> f64 {
    let j = jet.to_f64();
    vec_norm(j.source()) + vec_norm(j.target()) + j.blocks().iter().map(block_norm).sum::<f64>()
}

/// Norm of the componentwise difference of two jets of equal shape, as
/// elements of the ambient linear space of jets.
pub fn jet_distance(a: &Jet<f64>, b: &Jet<f64>) -> f64 {
    let ds: Vec<f64> = a.source().iter().zip(b.source()).map(|(x, y)| x - y).collect();
    let dt: Vec<f64> = a.target().iter().zip(b.target()).map(|(x, y)| x - y).collect();
    let blocks: f64 = a
        .blocks()
        .iter()
        .zip(b.blocks())
        .map(|(p, q)| block_norm(&p.zip_with(q, |x, y| x - y).expect("same shape")))
        .sum();
    vec_norm(&ds) + vec_norm(&dt) + blocks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_norm_is_exact() {
        let j = Jet::scalar(0.0, 0.0, &[2.0, 0.5]);
        assert_eq!(jet_norm(&j), 2.5);
        assert_eq!(jet_norm(&Jet::scalar(0.0, 0.0, &[0.0, 0.0])), 0.0);
    }

    #[test]
    fn quadratic_form_norm_is_largest_eigenvalue() {
        // p(v, v) = v^T diag(3, -5) v  ->  operator norm 5
        let b = SymBlock::from_canonical(2, 2, 1, vec![3.0, 0.0, -5.0]).unwrap();
        assert!((block_norm(&b) - 5.0).abs() < 1e-9);
        // rotated: [[1, 2], [2, 1]] has eigenvalues 3, -1
        let b = SymBlock::from_canonical(2, 2, 1, vec![1.0, 2.0, 1.0]).unwrap();
        assert!((block_norm(&b) - 3.0).abs() < 1e-9);
    }
}
