//! Polynomials in the modulation parameters `b_1..b_L` with field coefficients.

use crate::linop::RadialPair;
use crate::numerics::RadialField;
use std::collections::BTreeMap;

/// Exponent vector: entry `j - 1` is the power of `b_j`.
pub type Exponents = Vec<u32>;

/// `sum_j j m_j`.
pub fn weight(e: &[u32]) -> usize {
    e.iter().enumerate().map(|(i, m)| (i + 1) * *m as usize).sum()
}

pub fn unit(len: usize, j: usize) -> Exponents {
    let mut e = vec![0; len];
    e[j - 1] = 1;
    e
}

pub fn add_exponents(a: &[u32], b: &[u32]) -> Exponents {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// `prod_j b_j^{m_j}`; `b[j - 1]` is `b_j`.
pub fn eval_monomial(e: &[u32], b: &[f64]) -> f64 {
    e.iter().zip(b).map(|(m, x)| x.powi(*m as i32)).product()
}

/// Coefficient types that can be combined linearly.
pub trait Coefficient: Clone {
    fn axpy(&self, c: f64, other: &Self) -> Self;
    fn scale(&self, c: f64) -> Self;
}

impl Coefficient for RadialField {
    fn axpy(&self, c: f64, other: &Self) -> Self {
        RadialField::axpy(self, c, other)
    }
    fn scale(&self, c: f64) -> Self {
        RadialField::scale(self, c)
    }
}

impl Coefficient for RadialPair {
    fn axpy(&self, c: f64, other: &Self) -> Self {
        RadialPair::axpy(self, c, other)
    }
    fn scale(&self, c: f64) -> Self {
        RadialPair::scale(self, c)
    }
}

/// Finite sum of monomials in `b` with coefficients of type `C`.
#[derive(Debug, Clone)]
pub struct Poly<C> {
    pub len: usize,
    pub terms: BTreeMap<Exponents, C>,
}

impl<C: Coefficient> Poly<C> {
    pub fn zero(len: usize) -> Self {
        Poly { len, terms: BTreeMap::new() }
    }

    pub fn monomial(e: Exponents, c: C) -> Self {
        let len = e.len();
        let mut terms = BTreeMap::new();
        terms.insert(e, c);
        Poly { len, terms }
    }

    /// `self += c * e * coef`.
    pub fn add_term(&mut self, e: Exponents, c: f64, coef: &C) {
        match self.terms.get_mut(&e) {
            Some(v) => *v = v.axpy(c, coef),
            None => {
                self.terms.insert(e, coef.scale(c));
            }
        }
    }

    /// `self += c * other`.
    pub fn add_poly(&mut self, c: f64, other: &Poly<C>) {
        for (e, v) in &other.terms {
            self.add_term(e.clone(), c, v);
        }
    }

    /// `self * b^e * c`.
    pub fn shift(&self, e: &[u32], c: f64) -> Poly<C> {
        Poly { len: self.len, terms: self.terms.iter().map(|(k, v)| (add_exponents(k, e), v.scale(c))).collect() }
    }

    /// `d / d b_j`.
    pub fn partial(&self, j: usize) -> Poly<C> {
        let mut out = Poly::zero(self.len);
        for (e, v) in &self.terms {
            let m = e[j - 1];
            if m > 0 {
                let mut e2 = e.clone();
                e2[j - 1] -= 1;
                out.add_term(e2, m as f64, v);
            }
        }
        out
    }

    pub fn map<D>(&self, mut f: impl FnMut(&C) -> D) -> Poly<D> {
        Poly { len: self.len, terms: self.terms.iter().map(|(e, v)| (e.clone(), f(v))).collect() }
    }

    pub fn try_map<D, E>(&self, mut f: impl FnMut(&C) -> std::result::Result<D, E>) -> std::result::Result<Poly<D>, E> {
        let mut terms = BTreeMap::new();
        for (e, v) in &self.terms {
            terms.insert(e.clone(), f(v)?);
        }
        Ok(Poly { len: self.len, terms })
    }

    /// Terms of weight exactly `w`.
    pub fn of_weight(&self, w: usize) -> Poly<C> {
        Poly { len: self.len, terms: self.terms.iter().filter(|(e, _)| weight(e) == w).map(|(e, v)| (e.clone(), v.clone())).collect() }
    }

    /// Whether any monomial contains `b_j`.
    pub fn depends_on(&self, j: usize) -> bool {
        self.terms.keys().any(|e| e[j - 1] > 0)
    }

    /// `sum_e b^e coef_e`, or `None` for the empty polynomial.
    pub fn evaluate(&self, b: &[f64]) -> Option<C> {
        let mut it = self.terms.iter();
        let (e, v) = it.next()?;
        let mut acc = v.scale(eval_monomial(e, b));
        for (e, v) in it {
            acc = acc.axpy(eval_monomial(e, b), v);
        }
        Some(acc)
    }
}

impl Poly<RadialField> {
    /// Product truncated to total weight at most `max_weight`.
    pub fn mul_truncated(&self, other: &Poly<RadialField>, max_weight: usize) -> Poly<RadialField> {
        let mut out = Poly::zero(self.len);
        for (ea, va) in &self.terms {
            for (eb, vb) in &other.terms {
                let e = add_exponents(ea, eb);
                if weight(&e) <= max_weight {
                    out.add_term(e, 1.0, &va.mul(vb));
                }
            }
        }
        out
    }
}
