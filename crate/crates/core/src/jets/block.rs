//! Symmetric multilinear blocks stored on canonical (nondecreasing) multi-indices.

use super::poly::Poly;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// All nondecreasing index sequences of length `j` over `0..n`, in
/// lexicographic order.
pub fn sorted_indices(n: usize, j: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, j: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == j {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, j, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, j, 0, &mut Vec::with_capacity(j), &mut out);
    out
}

/// Number of distinct orderings of a multi-index, `j! / prod(count_i!)`.
pub fn multiplicity(idx: &[usize]) -> u64 {
    let mut m = factorial(idx.len());
    let mut run = 1;
    for w in 1..=idx.len() {
        if w < idx.len() && idx[w] == idx[w - 1] {
            run += 1;
        } else {
            m /= factorial(run);
            run = 1;
        }
    }
    m
}

pub fn factorial(k: usize) -> u64 {
    (1..=k as u64).product()
}

fn exponents(idx: &[usize], n: usize) -> Vec<u8> {
    let mut e = vec![0u8; n];
    for &i in idx {
        e[i] += 1;
    }
    e
}

/// A symmetric `order`-linear map `R^n_in x ... x R^n_in -> R^n_out`.
///
/// `coeffs[o * len + r]` holds the tensor entry for output `o` and the
/// `r`-th canonical multi-index; any permutation of the input slots reads
/// the same entry.
#[derive(Clone, Debug, PartialEq)]
pub struct SymBlock<S> {
    order: usize,
    n_in: usize,
    n_out: usize,
    indices: Vec<Vec<usize>>,
    coeffs: Vec<S>,
}

impl<S: Scalar> SymBlock<S> {
    pub fn zeros(order: usize, n_in: usize, n_out: usize) -> Self {
        assert!(order >= 1 && n_in >= 1 && n_out >= 1);
        let indices = sorted_indices(n_in, order);
        let coeffs = vec![S::zero(); indices.len() * n_out];
        Self { order, n_in, n_out, indices, coeffs }
    }

    /// Builds a block from canonical coefficients laid out output-major.
    pub fn from_canonical(order: usize, n_in: usize, n_out: usize, coeffs: Vec<S>) -> Result<Self> {
        let mut b = Self::zeros(order, n_in, n_out);
        if coeffs.len() != b.coeffs.len() {
            return Err(Error::DimensionMismatch(format!(
                "block of order {order} with dims ({n_in},{n_out}) needs {} coefficients, got {}",
                b.coeffs.len(),
                coeffs.len()
            )));
        }
        b.coeffs = coeffs;
        Ok(b)
    }

    /// Linear block from a row-major `n_out x n_in` matrix.
    pub fn linear(n_in: usize, n_out: usize, matrix: &[S]) -> Self {
        let mut b = Self::zeros(1, n_in, n_out);
        b.coeffs.clone_from_slice(matrix);
        b
    }

    pub fn order(&self) -> usize {
        self.order
    }
    pub fn n_in(&self) -> usize {
        self.n_in
    }
    pub fn n_out(&self) -> usize {
        self.n_out
    }
    pub fn canonical_indices(&self) -> &[Vec<usize>] {
        &self.indices
    }
    pub fn canonical_coeffs(&self) -> &[S] {
        &self.coeffs
    }

    fn rank(&self, sorted: &[usize]) -> usize {
        self.indices
            .binary_search_by(|probe| probe.as_slice().cmp(sorted))
            .expect("canonical multi-index")
    }

    /// Entry for an arbitrary (not necessarily sorted) index tuple.
    pub fn get(&self, out: usize, idx: &[usize]) -> S {
        let mut s = idx.to_vec();
        s.sort_unstable();
        self.coeffs[out * self.indices.len() + self.rank(&s)].clone()
    }

    pub fn set(&mut self, out: usize, idx: &[usize], value: S) {
        let mut s = idx.to_vec();
        s.sort_unstable();
        let r = self.rank(&s);
        let len = self.indices.len();
        self.coeffs[out * len + r] = value;
    }

    /// Full tensor in row-major `(out, i_1, ..., i_order)` layout.
    pub fn to_full(&self) -> Vec<S> {
        let mut full = Vec::with_capacity(self.n_out * self.n_in.pow(self.order as u32));
        let mut idx = vec![0usize; self.order];
        for o in 0..self.n_out {
            loop {
                full.push(self.get(o, &idx));
                if !odometer(&mut idx, self.n_in) {
                    break;
                }
            }
        }
        full
    }

    /// Inverse of [`SymBlock::to_full`]; the input is symmetrized first.
    pub fn from_full(order: usize, n_in: usize, n_out: usize, full: &[S]) -> Result<Self> {
        let per = n_in.pow(order as u32);
        if full.len() != per * n_out {
            return Err(Error::DimensionMismatch("full tensor length".into()));
        }
        let mut b = Self::zeros(order, n_in, n_out);
        let mut sums = vec![S::zero(); b.coeffs.len()];
        let mut counts = vec![0i64; b.coeffs.len()];
        let len = b.indices.len();
        for o in 0..n_out {
            let mut idx = vec![0usize; order];
            let mut flat = 0;
            loop {
                let mut s = idx.clone();
                s.sort_unstable();
                let r = o * len + b.rank(&s);
                sums[r] = sums[r].clone() + full[o * per + flat].clone();
                counts[r] += 1;
                flat += 1;
                if !odometer(&mut idx, n_in) {
                    break;
                }
            }
        }
        for (c, (s, k)) in b.coeffs.iter_mut().zip(sums.into_iter().zip(counts)) {
            *c = s / S::from_i64(k);
        }
        Ok(b)
    }

    /// Homogeneous polynomial `v -> p(v, ..., v)`, one per output.
    pub fn to_polys(&self) -> Vec<Poly<S>> {
        let len = self.indices.len();
        (0..self.n_out)
            .map(|o| {
                let mut p = Poly::zero(self.n_in);
                for (r, idx) in self.indices.iter().enumerate() {
                    let m = S::from_i64(multiplicity(idx) as i64);
                    p.add_term(exponents(idx, self.n_in), m * self.coeffs[o * len + r].clone());
                }
                p
            })
            .collect()
    }

    /// Reads the degree-`order` part of each polynomial back into a block.
    pub fn from_polys(order: usize, n_in: usize, polys: &[Poly<S>]) -> Self {
        let mut b = Self::zeros(order, n_in, polys.len());
        let len = b.indices.len();
        for (o, p) in polys.iter().enumerate() {
            for r in 0..len {
                let idx = &b.indices[r];
                let c = p.coeff(&exponents(idx, n_in));
                b.coeffs[o * len + r] = c / S::from_i64(multiplicity(idx) as i64);
            }
        }
        b
    }

    /// Multilinear application to polynomial-valued arguments:
    /// `sum_{l_1..l_j} p[o; l_1..l_j] * args[0][l_1] * ... * args[j-1][l_j]`,
    /// truncated at `max_deg`.
    pub fn apply(&self, args: &[&[Poly<S>]], max_deg: usize) -> Vec<Poly<S>> {
        assert_eq!(args.len(), self.order);
        let nvars = args[0][0].nvars();
        let mut out = vec![Poly::zero(nvars); self.n_out];
        let mut idx = Vec::with_capacity(self.order);
        self.apply_rec(args, max_deg, &Poly::constant(nvars, S::one()), &mut idx, &mut out);
        out
    }

    fn apply_rec(
        &self,
        args: &[&[Poly<S>]],
        max_deg: usize,
        partial: &Poly<S>,
        idx: &mut Vec<usize>,
        out: &mut [Poly<S>],
    ) {
        let t = idx.len();
        if t == self.order {
            for (o, acc) in out.iter_mut().enumerate() {
                let c = self.get(o, idx);
                if !c.is_zero() {
                    acc.add_scaled(partial, &c);
                }
            }
            return;
        }
        for l in 0..self.n_in {
            let a = &args[t][l];
            if a.is_zero() {
                continue;
            }
            let next = partial.mul_trunc(a, max_deg);
            if next.is_zero() {
                continue;
            }
            idx.push(l);
            self.apply_rec(args, max_deg, &next, idx, out);
            idx.pop();
        }
    }

    /// Multilinear evaluation on plain vectors.
    pub fn eval(&self, vectors: &[&[S]]) -> Vec<S> {
        assert_eq!(vectors.len(), self.order);
        let mut out = vec![S::zero(); self.n_out];
        let mut idx = vec![0usize; self.order];
        loop {
            let mut w = S::one();
            for (t, &l) in idx.iter().enumerate() {
                w = w * vectors[t][l].clone();
            }
            if !w.is_zero() {
                for (o, acc) in out.iter_mut().enumerate() {
                    *acc = acc.clone() + self.get(o, &idx) * w.clone();
                }
            }
            if !odometer(&mut idx, self.n_in) {
                break;
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(&S) -> S) -> Self {
        let mut b = self.clone();
        b.coeffs = self.coeffs.iter().map(f).collect();
        b
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(&S, &S) -> S) -> Result<Self> {
        if self.order != other.order || self.n_in != other.n_in || self.n_out != other.n_out {
            return Err(Error::DimensionMismatch("blocks differ in shape".into()));
        }
        let mut b = self.clone();
        b.coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, c)| f(a, c)).collect();
        Ok(b)
    }

    pub fn to_f64(&self) -> SymBlock<f64> {
        SymBlock {
            order: self.order,
            n_in: self.n_in,
            n_out: self.n_out,
            indices: self.indices.clone(),
            coeffs: self.coeffs.iter().map(|c| c.to_f64()).collect(),
        }
    }

    pub fn from_f64_block(b: &SymBlock<f64>) -> Self {
        SymBlock {
            order: b.order,
            n_in: b.n_in,
            n_out: b.n_out,
            indices: b.indices.clone(),
            coeffs: b.coeffs.iter().map(|&c| S::from_f64(c)).collect(),
        }
    }
}

/// Advances a base-`n` counter; returns `false` after wrapping around.
pub(crate) fn odometer(idx: &mut [usize], n: usize) -> bool {
    for d in (0..idx.len()).rev() {
        idx[d] += 1;
        if idx[d] < n {
            return true;
        }
        idx[d] = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn index_counts() {
        assert_eq!(sorted_indices(3, 2).len(), 6);
        assert_eq!(sorted_indices(2, 4).len(), 5);
        assert_eq!(multiplicity(&[0, 0, 1]), 3);
        assert_eq!(multiplicity(&[0, 1, 2]), 6);
        assert_eq!(multiplicity(&[2, 2, 2, 2]), 1);
    }

    #[test]
    fn full_expansion_is_symmetric() {
        let b = SymBlock::from_canonical(2, 2, 1, vec![1.0, 2.0, 3.0]).unwrap();
        let full = b.to_full();
        assert_eq!(full, vec![1.0, 2.0, 2.0, 3.0]);
        // p(v, v) = v0^2 + 4 v0 v1 + 3 v1^2
        let p = &b.to_polys()[0];
        assert_eq!(p.coeff(&[1, 1]), 4.0);
    }

    proptest! {
        #[test]
        fn canonical_full_roundtrip(
            order in 1usize..4, n_in in 1usize..4, n_out in 1usize..3,
            seed in proptest::collection::vec(-5i64..5, 64)
        ) {
            let len = sorted_indices(n_in, order).len() * n_out;
            let coeffs: Vec<f64> = (0..len).map(|i| seed[i % seed.len()] as f64 * 0.5).collect();
            let b = SymBlock::from_canonical(order, n_in, n_out, coeffs).unwrap();
            let back = SymBlock::from_full(order, n_in, n_out, &b.to_full()).unwrap();
            prop_assert_eq!(&back, &b);
            let via_poly = SymBlock::from_polys(order, n_in, &b.to_polys());
            prop_assert_eq!(via_poly, b);
        }
    }
}
