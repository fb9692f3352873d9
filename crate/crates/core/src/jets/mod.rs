//! Truncated jet calculus between open subsets of coordinate spaces.
//!
//! A k-jet `(x, y, p_1, ..., p_k)` stores the scaled Taylor coefficients
//! `p_j = d^j f(x) / j!` of a map at `x`, each as a [`SymBlock`]. In this
//! scaling, composition is plain truncated polynomial substitution and the
//! ordered-composition sums below (the Bell-polynomial structure of Faa di
//! Bruno's formula) carry no multinomial weights.
//!
//! Everything here is generic over [`Scalar`], so the same code runs on
//! `f64` and on exact rationals.

mod block;
mod fd;
mod norm;
pub mod oracle;
pub mod poly;

pub use block::{factorial, multiplicity, sorted_indices, SymBlock};
pub use fd::{jet_of_map, jet_of_polynomial, MAX_FD_ORDER};
pub use norm::{block_norm, jet_distance, jet_norm, vec_norm};
pub use poly::{Poly, PolyMap};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Default lower bound on the reciprocal condition number of `p_1` for inversion.
pub const DEFAULT_MIN_RCOND: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Jet<S = f64> {
    source: Vec<S>,
    target: Vec<S>,
    blocks: Vec<SymBlock<S>>,
}

/// A tangent vector `X` attached to the base point `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentPoint<S = f64> {
    pub base: Vec<S>,
    pub vector: Vec<S>,
}

impl<S: Scalar> TangentPoint<S> {
    pub fn new(base: Vec<S>, vector: Vec<S>) -> Result<Self> {
        if base.len() != vector.len() {
            return Err(Error::DimensionMismatch("tangent point base and vector".into()));
        }
        Ok(Self { base, vector })
    }
}

impl<S: Scalar> Jet<S> {
    pub fn new(source: Vec<S>, target: Vec<S>, blocks: Vec<SymBlock<S>>) -> Result<Self> {
        if source.is_empty() || target.is_empty() {
            return Err(Error::DimensionMismatch("jet dimensions must be positive".into()));
        }
        for (j, b) in blocks.iter().enumerate() {
            if b.order() != j + 1 || b.n_in() != source.len() || b.n_out() != target.len() {
                return Err(Error::DimensionMismatch(format!(
                    "block {} has order {} and dims ({}, {}); expected order {} and dims ({}, {})",
                    j + 1,
                    b.order(),
                    b.n_in(),
                    b.n_out(),
                    j + 1,
                    source.len(),
                    target.len()
                )));
            }
        }
        Ok(Self { source, target, blocks })
    }

    /// `id_x = (x, x, [I, 0, ..., 0])`.
    pub fn identity(x: Vec<S>, order: usize) -> Self {
        let n = x.len();
        let blocks = (1..=order)
            .map(|j| {
                if j == 1 {
                    let mut m = vec![S::zero(); n * n];
                    for i in 0..n {
                        m[i * n + i] = S::one();
                    }
                    SymBlock::linear(n, n, &m)
                } else {
                    SymBlock::zeros(j, n, n)
                }
            })
            .collect();
        Self { source: x.clone(), target: x, blocks }
    }

    /// One-dimensional convenience constructor: blocks given as scalars.
    pub fn scalar(x: S, y: S, coeffs: &[S]) -> Self {
        let blocks = coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| SymBlock::from_canonical(j + 1, 1, 1, vec![c.clone()]).expect("1d block"))
            .collect();
        Self { source: vec![x], target: vec![y], blocks }
    }

    pub fn order(&self) -> usize {
        self.blocks.len()
    }
    pub fn source(&self) -> &[S] {
        &self.source
    }
    pub fn target(&self) -> &[S] {
        &self.target
    }
    pub fn blocks(&self) -> &[SymBlock<S>] {
        &self.blocks
    }
    pub fn block(&self, j: usize) -> &SymBlock<S> {
        &self.blocks[j - 1]
    }
    pub fn input_dim(&self) -> usize {
        self.source.len()
    }
    pub fn output_dim(&self) -> usize {
        self.target.len()
    }

    pub fn to_f64(&self) -> Jet<f64> {
        Jet {
            source: self.source.iter().map(|v| v.to_f64()).collect(),
            target: self.target.iter().map(|v| v.to_f64()).collect(),
            blocks: self.blocks.iter().map(|b| b.to_f64()).collect(),
        }
    }

    pub fn from_f64_jet(j: &Jet<f64>) -> Self {
        Jet {
            source: j.source.iter().map(|&v| S::from_f64(v)).collect(),
            target: j.target.iter().map(|&v| S::from_f64(v)).collect(),
            blocks: j.blocks.iter().map(SymBlock::from_f64_block).collect(),
        }
    }

    /// Homogeneous polynomial of each block, `polys[j-1][o]`.
    fn block_polys(&self) -> Vec<Vec<Poly<S>>> {
        self.blocks.iter().map(|b| b.to_polys()).collect()
    }
}

/// Ordered sequences of `parts` positive integers summing to `total`.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 0 {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for first in 1..=left.saturating_sub(parts - 1) {
            cur.push(first);
            rec(left - first, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if parts >= 1 && parts <= total {
        rec(total, parts, &mut Vec::new(), &mut out);
    }
    out
}

/// Degree-`m` part of `q o p`: `sum_j sum_{i_1+..+i_j=m} q_j(p_{i_1}, ..., p_{i_j})`,
/// where `inner[i-1]` is the homogeneous degree-`i` polynomial of the inner map.
fn faa_di_bruno_degree<S: Scalar>(
    outer: &[SymBlock<S>],
    inner: &[Vec<Poly<S>>],
    m: usize,
    max_outer: usize,
) -> Vec<Poly<S>> {
    let nvars = inner[0][0].nvars();
    let n_out = outer[0].n_out();
    let mut acc = vec![Poly::zero(nvars); n_out];
    for j in 1..=m.min(max_outer) {
        for comp in compositions(m, j) {
            let args: Vec<&[Poly<S>]> = comp.iter().map(|&i| inner[i - 1].as_slice()).collect();
            let term = outer[j - 1].apply(&args, m);
            for (a, t) in acc.iter_mut().zip(&term) {
                a.add_assign(t);
            }
        }
    }
    acc
}

/// Jet composition `outer . inner`: truncated polynomial composition of the
/// Taylor parts, computed degree by degree with Faa di Bruno's formula.
pub fn compose<S: Scalar>(outer: &Jet<S>, inner: &Jet<S>) -> Result<Jet<S>> {
    if outer.order() != inner.order() {
        return Err(Error::OrderMismatch(format!(
            "outer order {} vs inner order {}",
            outer.order(),
            inner.order()
        )));
    }
    if outer.source != inner.target {
        return Err(Error::SourceTargetMismatch);
    }
    let k = outer.order();
    let n = inner.input_dim();
    if k == 0 {
        return Jet::new(inner.source.clone(), outer.target.clone(), Vec::new());
    }
    let inner_polys = inner.block_polys();
    let blocks = (1..=k)
        .map(|m| {
            let polys = faa_di_bruno_degree(&outer.blocks, &inner_polys, m, k);
            SymBlock::from_polys(m, n, &polys)
        })
        .collect();
    Jet::new(inner.source.clone(), outer.target.clone(), blocks)
}

/// Jet evaluation `(x, y, p) . (x, X)`: the (k-1)-jet of the tangent map
/// `Tf(x, X) = (f(x), df(x) X)` at `(x, X)`.
///
/// In the scaled convention block `d` of the result is
/// `(p_d(a^d), (d+1) p_{d+1}(a^d, X) + d p_d(a^{d-1}, b))` for an increment
/// `(a, b)` of `(x, X)`; the factors `d+1` and `d` come from rescaling
/// `d^{d+1} f / d!` and `d * d^d f / d!` by the block normalisation.
pub fn evaluate<S: Scalar>(jet: &Jet<S>, xi: &TangentPoint<S>) -> Result<Jet<S>> {
    let k = jet.order();
    if k == 0 {
        return Err(Error::OrderMismatch("evaluation needs a jet of order at least 1".into()));
    }
    if xi.base != jet.source {
        return Err(Error::BaseMismatch);
    }
    let n = jet.input_dim();
    let nv = 2 * n;
    let a: Vec<Poly<S>> = (0..n).map(|i| Poly::var(nv, i)).collect();
    let b: Vec<Poly<S>> = (0..n).map(|i| Poly::var(nv, n + i)).collect();
    let xc: Vec<Poly<S>> = xi.vector.iter().map(|v| Poly::constant(nv, v.clone())).collect();

    let linear_x = jet.block(1).eval(&[xi.vector.as_slice()]);
    let mut source = jet.source.clone();
    source.extend(xi.vector.iter().cloned());
    let mut target = jet.target.clone();
    target.extend(linear_x);

    let mut blocks = Vec::with_capacity(k - 1);
    for d in 1..k {
        let pd = jet.block(d);
        let pd1 = jet.block(d + 1);
        let horizontal = pd.apply(&vec![a.as_slice(); d], d);
        let mut args: Vec<&[Poly<S>]> = vec![a.as_slice(); d];
        args.push(xc.as_slice());
        let vertical_x = pd1.apply(&args, d);
        let mut args: Vec<&[Poly<S>]> = vec![a.as_slice(); d - 1];
        args.push(b.as_slice());
        let vertical_b = pd.apply(&args, d);
        let s_d1 = S::from_i64(d as i64 + 1);
        let s_d = S::from_i64(d as i64);
        let mut polys = horizontal;
        for (vx, vb) in vertical_x.iter().zip(&vertical_b) {
            let mut p = vx.scaled(&s_d1);
            p.add_scaled(vb, &s_d);
            polys.push(p);
        }
        blocks.push(SymBlock::from_polys(d, nv, &polys));
    }
    Jet::new(source, target, blocks)
}

/// Reciprocal 2-norm condition number of a square matrix.
pub fn reciprocal_condition(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 || !max.is_finite() {
        0.0
    } else {
        min / max
    }
}

/// Gauss-Jordan inverse over an arbitrary field (pivot chosen by magnitude).
fn invert_matrix<S: Scalar>(n: usize, m: &[S]) -> Option<Vec<S>> {
    let mut a = m.to_vec();
    let mut inv = vec![S::zero(); n * n];
    for i in 0..n {
        inv[i * n + i] = S::one();
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| {
            a[r * n + col].to_f64().abs().total_cmp(&a[s * n + col].to_f64().abs())
        })?;
        if a[piv * n + col].is_zero() {
            return None;
        }
        if piv != col {
            for c in 0..n {
                a.swap(piv * n + c, col * n + c);
                inv.swap(piv * n + c, col * n + c);
            }
        }
        let p = a[col * n + col].clone();
        for c in 0..n {
            a[col * n + c] = a[col * n + c].clone() / p.clone();
            inv[col * n + c] = inv[col * n + c].clone() / p.clone();
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r * n + col].clone();
            if f.is_zero() {
                continue;
            }
            for c in 0..n {
                a[r * n + c] = a[r * n + c].clone() - f.clone() * a[col * n + c].clone();
                inv[r * n + c] = inv[r * n + c].clone() - f.clone() * inv[col * n + c].clone();
            }
        }
    }
    Some(inv)
}

/// Jet inversion with the default invertibility threshold.
pub fn invert<S: Scalar>(jet: &Jet<S>) -> Result<Jet<S>> {
    invert_with(jet, DEFAULT_MIN_RCOND)
}

/// Jet inversion: `q_1 = p_1^{-1}` and, for `k >= 2`,
/// `q_k = - sum_{j<k} sum_{i_1+..+i_j=k} q_j(p_{i_1} o q_1, ..., p_{i_j} o q_1)`.
pub fn invert_with<S: Scalar>(jet: &Jet<S>, min_rcond: f64) -> Result<Jet<S>> {
    let k = jet.order();
    let n = jet.input_dim();
    if k == 0 {
        return Err(Error::OrderMismatch("inversion needs a jet of order at least 1".into()));
    }
    if jet.output_dim() != n {
        return Err(Error::SingularLinearPart { rcond: 0.0 });
    }
    let p1 = jet.block(1).canonical_coeffs().to_vec();
    let rcond = reciprocal_condition(&DMatrix::from_row_slice(
        n,
        n,
        &p1.iter().map(|v| v.to_f64()).collect::<Vec<_>>(),
    ));
    if !(rcond >= min_rcond) {
        return Err(Error::SingularLinearPart { rcond });
    }
    let q1 = invert_matrix(n, &p1).ok_or(Error::SingularLinearPart { rcond })?;
    let q1_block = SymBlock::linear(n, n, &q1);

    // p_i o q_1 as homogeneous polynomials in the new variable.
    let lin: Vec<Poly<S>> = (0..n)
        .map(|r| Poly::linear(n, S::zero(), &q1[r * n..(r + 1) * n]))
        .collect();
    let pre: Vec<Vec<Poly<S>>> = (1..=k)
        .map(|i| jet.block(i).apply(&vec![lin.as_slice(); i], i))
        .collect();

    let mut q_blocks = vec![q1_block];
    for m in 2..=k {
        let polys = faa_di_bruno_degree(&q_blocks, &pre, m, m - 1);
        let neg: Vec<Poly<S>> = polys.iter().map(|p| p.scaled(&-S::one())).collect();
        q_blocks.push(SymBlock::from_polys(m, n, &neg));
    }
    Jet::new(jet.target.clone(), jet.source.clone(), q_blocks)
}

/// Plain-text record used by fixtures and the CLI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JetRecord {
    pub order: usize,
    pub source: Vec<f64>,
    pub target: Vec<f64>,
    pub blocks: Vec<BlockRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub order: usize,
    pub input_dim: usize,
    pub output_dim: usize,
    /// Canonical coefficients, output-major, nondecreasing multi-indices in
    /// lexicographic order.
    pub coeffs: Vec<f64>,
}

impl From<&Jet<f64>> for JetRecord {
    fn from(j: &Jet<f64>) -> Self {
        JetRecord {
            order: j.order(),
            source: j.source.clone(),
            target: j.target.clone(),
            blocks: j
                .blocks
                .iter()
                .map(|b| BlockRecord {
                    order: b.order(),
                    input_dim: b.n_in(),
                    output_dim: b.n_out(),
                    coeffs: b.canonical_coeffs().to_vec(),
                })
                .collect(),
        }
    }
}

impl TryFrom<&JetRecord> for Jet<f64> {
    type Error = Error;
    fn try_from(r: &JetRecord) -> Result<Self> {
        if r.blocks.len() != r.order {
            return Err(Error::OrderMismatch(format!(
                "record declares order {} but has {} blocks",
                r.order,
                r.blocks.len()
            )));
        }
        let blocks = r
            .blocks
            .iter()
            .map(|b| SymBlock::from_canonical(b.order, b.input_dim, b.output_dim, b.coeffs.clone()))
            .collect::<Result<Vec<_>>>()?;
        Jet::new(r.source.clone(), r.target.clone(), blocks)
    }
}

impl Jet<f64> {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&JetRecord::from(self)).expect("jet record serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: JetRecord = serde_json::from_str(s).map_err(|e| Error::InvalidInput(e.to_string()))?;
        Jet::try_from(&r)
    }

    /// Largest absolute componentwise difference (including base points).
    pub fn max_abs_diff(&self, other: &Jet<f64>) -> f64 {
        let mut d = 0.0f64;
        for (a, b) in self.source.iter().zip(&other.source).chain(self.target.iter().zip(&other.target)) {
            d = d.max((a - b).abs());
        }
        for (ba, bb) in self.blocks.iter().zip(&other.blocks) {
            for (a, b) in ba.canonical_coeffs().iter().zip(bb.canonical_coeffs()) {
                d = d.max((a - b).abs());
            }
        }
        if self.order() != other.order()
            || self.input_dim() != other.input_dim()
            || self.output_dim() != other.output_dim()
        {
            return f64::INFINITY;
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn approx(a: &Jet<f64>, b: &Jet<f64>, tol: f64) {
        let d = a.max_abs_diff(b);
        assert!(d <= tol, "jets differ by {d}: {a:?} vs {b:?}");
    }

    #[test]
    fn compose_quadratics_1d() {
        let inner = Jet::scalar(0.0, 0.0, &[2.0, 0.5]);
        let outer = Jet::scalar(0.0, 0.0, &[3.0, 1.0]);
        let r = compose(&outer, &inner).unwrap();
        approx(&r, &Jet::scalar(0.0, 0.0, &[6.0, 5.5]), 1e-15);
    }

    #[test]
    fn compose_matches_polynomial_expansion() {
        // f = x + x^2, g = 2y + y^2, g(f(x)) = 2x + 3x^2 + O(x^3)
        let f = Jet::scalar(0.0, 0.0, &[1.0, 1.0]);
        let g = Jet::scalar(0.0, 0.0, &[2.0, 1.0]);
        approx(&compose(&g, &f).unwrap(), &Jet::scalar(0.0, 0.0, &[2.0, 3.0]), 1e-15);
    }

    #[test]
    fn identity_is_neutral() {
        let s = SymBlock::from_canonical(2, 2, 2, vec![1.0, -2.0, 0.5, 0.25, 3.0, -1.0]).unwrap();
        let l = SymBlock::linear(2, 2, &[1.0, 2.0, -1.0, 0.5]);
        let sigma = Jet::new(vec![1.0, 2.0], vec![-1.0, 0.0], vec![l, s]).unwrap();
        let left = compose(&Jet::identity(vec![-1.0, 0.0], 2), &sigma).unwrap();
        let right = compose(&sigma, &Jet::identity(vec![1.0, 2.0], 2)).unwrap();
        approx(&left, &sigma, 1e-15);
        approx(&right, &sigma, 1e-15);
    }

    #[test]
    fn compose_errors() {
        let a = Jet::scalar(0.0, 1.0, &[1.0, 0.0]);
        let b = Jet::scalar(0.0, 0.0, &[1.0, 0.0]);
        assert_eq!(compose(&a, &a), Err(Error::SourceTargetMismatch));
        let c = Jet::scalar(0.0, 0.0, &[1.0]);
        assert!(matches!(compose(&c, &b), Err(Error::OrderMismatch(_))));
    }

    #[test]
    fn invert_series_reversion() {
        let inv = invert(&Jet::scalar(0.0, 0.0, &[2.0, 1.0])).unwrap();
        approx(&inv, &Jet::scalar(0.0, 0.0, &[0.5, -0.125]), 1e-15);
        let inv = invert(&Jet::scalar(0.0, 0.0, &[1.0, 1.0])).unwrap();
        approx(&inv, &Jet::scalar(0.0, 0.0, &[1.0, -1.0]), 1e-15);
    }

    #[test]
    fn invert_linear() {
        let a = SymBlock::linear(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        let j = Jet::new(vec![1.0, 0.0], vec![3.0, 4.0], vec![a]).unwrap();
        let inv = invert(&j).unwrap();
        assert_eq!(inv.source(), &[3.0, 4.0]);
        assert_eq!(inv.target(), &[1.0, 0.0]);
        let expected = [1.0, -1.0, -1.0, 2.0];
        for (a, b) in inv.block(1).canonical_coeffs().iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn invert_singular() {
        let j = Jet::scalar(0.0, 0.0, &[0.0, 1.0]);
        assert!(matches!(invert(&j), Err(Error::SingularLinearPart { .. })));
        let a = SymBlock::linear(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let j = Jet::new(vec![0.0, 0.0], vec![0.0, 0.0], vec![a]).unwrap();
        assert!(matches!(invert(&j), Err(Error::SingularLinearPart { .. })));
    }

    #[test]
    fn invert_round_trip_rational_exact() {
        let r = |n: i64, d: i64| Rational::new(n.into(), d.into());
        let sigma = Jet::<Rational>::scalar(r(1, 3), r(2, 1), &[r(3, 2), r(-1, 5), r(7, 4)]);
        let inv = invert(&sigma).unwrap();
        let id = compose(&inv, &sigma).unwrap();
        assert_eq!(id, Jet::identity(vec![r(1, 3)], 3));
    }

    #[test]
    fn evaluate_linear_map() {
        let jet = Jet::scalar(1.0, 3.0, &[3.0, 0.0]);
        let xi = TangentPoint::new(vec![1.0], vec![5.0]).unwrap();
        let r = evaluate(&jet, &xi).unwrap();
        assert_eq!(r.source(), &[1.0, 5.0]);
        assert_eq!(r.target(), &[3.0, 15.0]);
        let lin = r.block(1);
        assert_eq!(lin.get(0, &[0]), 3.0);
        assert_eq!(lin.get(0, &[1]), 0.0);
        assert_eq!(lin.get(1, &[0]), 0.0);
        assert_eq!(lin.get(1, &[1]), 3.0);
    }

    #[test]
    fn evaluate_square() {
        // f(x) = x^2 at x = 1: jet (1, 1, [2, 1]); T f(x, X) = (x^2, 2 x X)
        let jet = Jet::scalar(1.0, 1.0, &[2.0, 1.0]);
        let xi = TangentPoint::new(vec![1.0], vec![3.0]).unwrap();
        let r = evaluate(&jet, &xi).unwrap();
        assert_eq!(r.target(), &[1.0, 6.0]);
        let lin = r.block(1);
        let rows = [[lin.get(0, &[0]), lin.get(0, &[1])], [lin.get(1, &[0]), lin.get(1, &[1])]];
        assert_eq!(rows, [[2.0, 0.0], [6.0, 2.0]]);
    }

    #[test]
    fn evaluate_zero_vector_has_zero_vertical_value() {
        let jet = Jet::scalar(0.5, -2.0, &[1.5, -0.25, 4.0]);
        let r = evaluate(&jet, &TangentPoint::new(vec![0.5], vec![0.0]).unwrap()).unwrap();
        assert_eq!(r.target()[1], 0.0);
    }

    #[test]
    fn evaluate_errors() {
        let j0 = Jet::<f64>::new(vec![0.0], vec![0.0], vec![]).unwrap();
        let xi = TangentPoint::new(vec![0.0], vec![1.0]).unwrap();
        assert!(matches!(evaluate(&j0, &xi), Err(Error::OrderMismatch(_))));
        let j = Jet::scalar(1.0, 0.0, &[1.0]);
        assert_eq!(evaluate(&j, &xi), Err(Error::BaseMismatch));
    }

    #[test]
    fn compositions_enumerate() {
        assert_eq!(compositions(4, 2), vec![vec![1, 3], vec![2, 2], vec![3, 1]]);
        assert_eq!(compositions(3, 3), vec![vec![1, 1, 1]]);
        assert!(compositions(2, 3).is_empty());
    }

    #[test]
    fn json_record_roundtrip() {
        let s = SymBlock::from_canonical(2, 2, 1, vec![1.0, -2.0, 0.5]).unwrap();
        let l = SymBlock::linear(2, 1, &[1.0, 2.0]);
        let j = Jet::new(vec![1.0, 2.0], vec![-1.0], vec![l, s]).unwrap();
        let text = j.to_json();
        assert!(text.contains("\"order\":2"));
        assert_eq!(Jet::from_json(&text).unwrap(), j);
    }
}
