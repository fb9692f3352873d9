//! Sparse multivariate polynomials with degree truncation.
//!
//! Monomials are keyed by their exponent vector. Every product takes an
//! explicit maximal degree; terms above it are dropped, which is the
//! `pi_k` truncation used by jet composition.

use crate::scalar::Scalar;
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq)]
pub struct Poly<S> {
    nvars: usize,
    terms: BTreeMap<Vec<u8>, S>,
}

impl<S: Scalar> Poly<S> {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: S) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// The coordinate function `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0u8; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(e, S::one());
        p
    }

    /// Affine linear form `c + sum_i coeffs[i] x_i`.
    pub fn linear(nvars: usize, c: S, coeffs: &[S]) -> Self {
        let mut p = Self::constant(nvars, c);
        for (i, a) in coeffs.iter().enumerate() {
            let mut e = vec![0u8; nvars];
            e[i] = 1;
            p.add_term(e, a.clone());
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u8>, &S)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| c.is_zero())
    }

    pub fn coeff(&self, exps: &[u8]) -> S {
        self.terms.get(exps).cloned().unwrap_or_else(S::zero)
    }

    pub fn add_term(&mut self, exps: Vec<u8>, c: S) {
        debug_assert_eq!(exps.len(), self.nvars);
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&exps) {
            Some(v) => {
                let s = v.clone() + c;
                if s.is_zero() {
                    self.terms.remove(&exps);
                } else {
                    *v = s;
                }
            }
            None => {
                self.terms.insert(exps, c);
            }
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (e, c) in &other.terms {
            self.add_term(e.clone(), c.clone());
        }
    }

    pub fn add_scaled(&mut self, other: &Self, s: &S) {
        for (e, c) in &other.terms {
            self.add_term(e.clone(), c.clone() * s.clone());
        }
    }

    pub fn scaled(&self, s: &S) -> Self {
        let mut out = Self::zero(self.nvars);
        out.add_scaled(self, s);
        out
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|e| total_degree(e)).max().unwrap_or(0)
    }

    /// Product with all monomials of total degree above `max_deg` discarded.
    pub fn mul_trunc(&self, other: &Self, max_deg: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (ea, ca) in &self.terms {
            let da = total_degree(ea);
            if da > max_deg {
                continue;
            }
            for (eb, cb) in &other.terms {
                if da + total_degree(eb) > max_deg {
                    continue;
                }
                let e: Vec<u8> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca.clone() * cb.clone());
            }
        }
        out
    }

    pub fn pow_trunc(&self, k: usize, max_deg: usize) -> Self {
        let mut out = Self::constant(self.nvars, S::one());
        for _ in 0..k {
            out = out.mul_trunc(self, max_deg);
        }
        out
    }

    /// Homogeneous component of total degree `d`.
    pub fn degree_part(&self, d: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if total_degree(e) == d {
                out.add_term(e.clone(), c.clone());
            }
        }
        out
    }

    pub fn truncated(&self, max_deg: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if total_degree(e) <= max_deg {
                out.add_term(e.clone(), c.clone());
            }
        }
        out
    }

    pub fn eval(&self, x: &[S]) -> S {
        let mut acc = S::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &k) in x.iter().zip(e) {
                for _ in 0..k {
                    t = t * xi.clone();
                }
            }
            acc = acc + t;
        }
        acc
    }
}

pub fn total_degree(e: &[u8]) -> usize {
    e.iter().map(|&k| k as usize).sum()
}

/// Vector-valued polynomial map `R^n -> R^m`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMap<S> {
    pub nvars: usize,
    pub components: Vec<Poly<S>>,
}

impl<S: Scalar> PolyMap<S> {
    pub fn new(nvars: usize, components: Vec<Poly<S>>) -> Self {
        debug_assert!(components.iter().all(|p| p.nvars() == nvars));
        Self { nvars, components }
    }

    pub fn output_dim(&self) -> usize {
        self.components.len()
    }

    pub fn eval(&self, x: &[S]) -> Vec<S> {
        self.components.iter().map(|p| p.eval(x)).collect()
    }

    pub fn degree(&self) -> usize {
        self.components.iter().map(|p| p.degree()).max().unwrap_or(0)
    }

    /// Re-expands every component around `x`, i.e. returns `a -> P(x + a)`
    /// truncated at degree `max_deg`.
    pub fn shifted(&self, x: &[S], max_deg: usize) -> Self {
        let n = self.nvars;
        let shifts: Vec<Poly<S>> = (0..n)
            .map(|i| {
                let mut p = Poly::var(n, i);
                p.add_term(vec![0; n], x[i].clone());
                p
            })
            .collect();
        let components = self
            .components
            .iter()
            .map(|comp| substitute(comp, &shifts, max_deg))
            .collect();
        Self { nvars: n, components }
    }
}

/// `p(q_1, ..., q_m)` truncated at `max_deg`; the `q_i` may carry constant terms.
pub fn substitute<S: Scalar>(p: &Poly<S>, args: &[Poly<S>], max_deg: usize) -> Poly<S> {
    let nvars = args.first().map(|a| a.nvars()).unwrap_or(0);
    let mut out = Poly::zero(nvars);
    let max_exp = p.terms().flat_map(|(e, _)| e.iter().copied()).max().unwrap_or(0) as usize;
    let powers: Vec<Vec<Poly<S>>> = args
        .iter()
        .map(|a| {
            let mut v = vec![Poly::constant(nvars, S::one())];
            for k in 1..=max_exp {
                let next = v[k - 1].mul_trunc(a, max_deg);
                v.push(next);
            }
            v
        })
        .collect();
    for (e, c) in p.terms() {
        let mut term = Poly::constant(nvars, c.clone());
        for (i, &k) in e.iter().enumerate() {
            if k > 0 {
                term = term.mul_trunc(&powers[i][k as usize], max_deg);
            }
        }
        out.add_assign(&term);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncated_product_drops_high_degrees() {
        let x = Poly::<f64>::var(1, 0);
        let one_plus_x = Poly::linear(1, 1.0, &[1.0]);
        let sq = one_plus_x.mul_trunc(&one_plus_x, 1);
        assert_eq!(sq.coeff(&[0]), 1.0);
        assert_eq!(sq.coeff(&[1]), 2.0);
        assert_eq!(sq.coeff(&[2]), 0.0);
        assert_eq!(x.pow_trunc(3, 2), Poly::zero(1));
    }

    #[test]
    fn shift_of_square() {
        // (x + a)^2 at x = 3 -> 9 + 6a + a^2
        let x = Poly::<f64>::var(1, 0);
        let f = PolyMap::new(1, vec![x.mul_trunc(&x, 2)]);
        let s = f.shifted(&[3.0], 2);
        assert_eq!(s.components[0].coeff(&[0]), 9.0);
        assert_eq!(s.components[0].coeff(&[1]), 6.0);
        assert_eq!(s.components[0].coeff(&[2]), 1.0);
    }
}
