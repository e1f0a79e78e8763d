//! Truncated Laurent series in one formal variable with tracked precision.
//!
//! An element is either *exact* (a Laurent polynomial, e.g. `q^{-1}` or an
//! eigenvalue `s₁q^j + s₂q^{-j}`) or known modulo `X^prec`. Products follow
//! the capped-relative-precision rule, so the reported precision is always a
//! valid lower bound and negative valuations never silently corrupt results.

use super::poly::Var;
use super::{Rat, Scalar};
use crate::error::ScalarError;

#[derive(Clone)]
pub struct Laurent<C> {
    var: Var,
    one: C,
    val: i32,
    coeffs: Vec<C>,
    /// Absolute precision: coefficients at exponents `>= prec` are unknown.
    /// For exact elements this is the working cap used when an inverse must
    /// be expanded.
    prec: i32,
    exact: bool,
}

/// The q-adic scalar of the spec: coefficients free of `Q`.
pub type QAdicScalar = Laurent<super::ParamScalar>;

const INF: i64 = i64::MAX / 4;

impl<C: Scalar> Laurent<C> {
    pub fn from_parts(var: Var, one: C, val: i32, coeffs: Vec<C>, prec: i32) -> Self {
        let mut l = Laurent { var, one, val, coeffs, prec, exact: false };
        l.normalize();
        l
    }
    pub fn exact_from_parts(var: Var, one: C, val: i32, coeffs: Vec<C>, cap: i32) -> Self {
        let mut l = Laurent { var, one, val, coeffs, prec: cap, exact: true };
        l.normalize();
        l
    }
    pub fn zero_exact(var: Var, one: C, cap: i32) -> Self {
        Laurent { var, one, val: 0, coeffs: Vec::new(), prec: cap, exact: true }
    }
    /// The series variable `X` itself, exact, with working cap `cap`.
    pub fn gen(var: Var, one: C, cap: i32) -> Self {
        Self::exact_from_parts(var, one.clone(), 1, vec![one], cap)
    }
    pub fn constant(var: Var, c: C, cap: i32) -> Self {
        let one = c.one_like();
        Self::exact_from_parts(var, one, 0, vec![c], cap)
    }

    fn normalize(&mut self) {
        let lead = self.coeffs.iter().position(|c| !c.is_zero());
        match lead {
            None => {
                self.coeffs.clear();
                self.val = 0;
            }
            Some(k) => {
                if k > 0 {
                    self.coeffs.drain(..k);
                    self.val += k as i32;
                }
                if !self.exact {
                    let keep = (self.prec as i64 - self.val as i64).max(0) as usize;
                    self.coeffs.truncate(keep);
                }
                while self.coeffs.last().is_some_and(|c| c.is_zero()) {
                    self.coeffs.pop();
                }
                if self.coeffs.is_empty() {
                    self.val = 0;
                }
            }
        }
        // Exact elements whose support runs far past the working cap are
        // demoted to truncated ones; nothing downstream can use those terms.
        if self.exact && !self.coeffs.is_empty() {
            let limit = 2 * self.prec.max(8) + 16;
            if self.val as i64 + self.coeffs.len() as i64 > limit as i64 {
                self.exact = false;
                self.prec = limit;
                let keep = (limit - self.val).max(0) as usize;
                self.coeffs.truncate(keep);
            }
        }
    }

    pub fn var(&self) -> Var {
        self.var
    }
    pub fn is_exact(&self) -> bool {
        self.exact
    }
    /// Absolute precision (`i32::MAX` for exact elements).
    pub fn prec(&self) -> i32 {
        if self.exact {
            i32::MAX
        } else {
            self.prec
        }
    }
    pub fn cap_hint(&self) -> i32 {
        self.prec
    }
    /// Valuation; for elements with no known nonzero coefficient this is the precision.
    pub fn val(&self) -> i32 {
        if self.coeffs.is_empty() {
            self.prec()
        } else {
            self.val
        }
    }
    fn val_i64(&self) -> i64 {
        if self.coeffs.is_empty() {
            if self.exact {
                INF
            } else {
                self.prec as i64
            }
        } else {
            self.val as i64
        }
    }
    fn prec_i64(&self) -> i64 {
        if self.exact {
            INF
        } else {
            self.prec as i64
        }
    }

    pub fn coeff(&self, e: i32) -> C {
        if e >= self.val && ((e - self.val) as usize) < self.coeffs.len() {
            self.coeffs[(e - self.val) as usize].clone()
        } else {
            self.one.zero_like()
        }
    }
    /// Nonzero known terms as `(exponent, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (i32, C)> + '_ {
        self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(move |(k, c)| (self.val + k as i32, c.clone()))
    }

    /// Truncate modulo `X^prec`.
    pub fn truncate(&self, prec: i32) -> Self {
        let p = (self.prec() as i64).min(prec as i64) as i32;
        Self::from_parts(self.var, self.one.clone(), self.val, self.coeffs.clone(), p)
    }

    /// Map every coefficient through `f` (e.g. evaluation of symbolic coefficients).
    pub fn map_coeffs<D: Scalar>(&self, one: D, f: impl Fn(&C) -> Result<D, ScalarError>) -> Result<Laurent<D>, ScalarError> {
        let coeffs = self.coeffs.iter().map(f).collect::<Result<Vec<_>, _>>()?;
        let mut l = Laurent { var: self.var, one, val: self.val, coeffs, prec: self.prec, exact: self.exact };
        l.normalize();
        Ok(l)
    }

    fn combine_cap(&self, o: &Self) -> i32 {
        self.prec.max(o.prec)
    }

    fn raw_add(&self, o: &Self, sign: bool) -> Self {
        let exact = self.exact && o.exact;
        let prec = if exact { self.combine_cap(o) } else { self.prec_i64().min(o.prec_i64()) as i32 };
        if self.coeffs.is_empty() && o.coeffs.is_empty() {
            return Laurent { var: self.var, one: self.one.clone(), val: 0, coeffs: vec![], prec, exact };
        }
        let lo = self.val_i64().min(o.val_i64()) as i32;
        let hi_a = self.val as i64 + self.coeffs.len() as i64;
        let hi_b = o.val as i64 + o.coeffs.len() as i64;
        let mut hi = hi_a.max(hi_b);
        if !exact {
            hi = hi.min(prec as i64);
        }
        let len = (hi - lo as i64).max(0) as usize;
        let mut coeffs = vec![self.one.zero_like(); len];
        for (k, c) in self.coeffs.iter().enumerate() {
            let idx = self.val as i64 + k as i64 - lo as i64;
            if (idx as usize) < len {
                coeffs[idx as usize] = c.clone();
            }
        }
        for (k, c) in o.coeffs.iter().enumerate() {
            let idx = o.val as i64 + k as i64 - lo as i64;
            if (idx as usize) < len {
                let cur = &coeffs[idx as usize];
                coeffs[idx as usize] = if sign { cur.add(c) } else { cur.sub(c) };
            }
        }
        let mut l = Laurent { var: self.var, one: self.one.clone(), val: lo, coeffs, prec, exact };
        l.normalize();
        l
    }

    /// Multiply by `X^k`.
    pub fn shift(&self, k: i32) -> Self {
        let mut l = self.clone();
        if !l.coeffs.is_empty() {
            l.val += k;
        }
        if !l.exact {
            l.prec += k;
        }
        l
    }

    /// Equality modulo the common precision.
    pub fn eq_mod(&self, o: &Self, prec: i32) -> bool {
        self.sub(o).truncate(prec).coeffs.is_empty()
    }

    /// First exponent where `self` and `o` differ below `prec`, if any.
    pub fn first_difference(&self, o: &Self, prec: i32) -> Option<i32> {
        let d = self.sub(o).truncate(prec);
        let first = d.terms().next().map(|(e, _)| e);
        first
    }
}

impl<C: Scalar> PartialEq for Laurent<C> {
    fn eq(&self, o: &Self) -> bool {
        self.raw_add(o, false).coeffs.is_empty()
    }
}

impl<C: Scalar> std::fmt::Debug for Laurent<C> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl<C: Scalar> Scalar for Laurent<C> {
    fn zero_like(&self) -> Self {
        Laurent { var: self.var, one: self.one.clone(), val: 0, coeffs: vec![], prec: self.prec, exact: true }
    }
    fn one_like(&self) -> Self {
        Laurent { var: self.var, one: self.one.clone(), val: 0, coeffs: vec![self.one.clone()], prec: self.prec, exact: true }
    }
    fn from_rat_like(&self, r: &Rat) -> Self {
        let c = self.one.from_rat_like(r);
        let mut l = Laurent { var: self.var, one: self.one.clone(), val: 0, coeffs: vec![c], prec: self.prec, exact: true };
        l.normalize();
        l
    }
    fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
    fn add(&self, o: &Self) -> Self {
        self.raw_add(o, true)
    }
    fn sub(&self, o: &Self) -> Self {
        self.raw_add(o, false)
    }
    fn neg(&self) -> Self {
        let mut l = self.clone();
        for c in l.coeffs.iter_mut() {
            *c = c.neg();
        }
        l
    }
    fn mul(&self, o: &Self) -> Self {
        let exact = self.exact && o.exact;
        let (va, vb) = (self.val_i64(), o.val_i64());
        // exact zero times anything is exactly zero
        if (self.exact && self.coeffs.is_empty()) || (o.exact && o.coeffs.is_empty()) {
            return Laurent { var: self.var, one: self.one.clone(), val: 0, coeffs: vec![], prec: self.combine_cap(o), exact: true };
        }
        let prec = if exact {
            self.combine_cap(o) as i64
        } else {
            (self.prec_i64() + vb).min(o.prec_i64() + va).min(INF)
        };
        if self.coeffs.is_empty() || o.coeffs.is_empty() {
            return Laurent { var: self.var, one: self.one.clone(), val: 0, coeffs: vec![], prec: prec as i32, exact: false };
        }
        let val = self.val + o.val;
        let mut len = self.coeffs.len() + o.coeffs.len() - 1;
        if !exact {
            len = len.min((prec - val as i64).max(0) as usize);
        }
        let mut coeffs = vec![self.one.zero_like(); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if i >= len {
                break;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                if i + j >= len {
                    break;
                }
                coeffs[i + j] = coeffs[i + j].add(&a.mul(b));
            }
        }
        let mut l = Laurent { var: self.var, one: self.one.clone(), val, coeffs, prec: prec as i32, exact };
        l.normalize();
        l
    }
    fn inv(&self) -> Result<Self, ScalarError> {
        if self.coeffs.is_empty() {
            return Err(if self.exact {
                ScalarError::DivisionByZero
            } else {
                ScalarError::InsufficientOrder(format!("inverting a series known to vanish mod {}^{}", self.var.name(), self.prec))
            });
        }
        let v = self.val;
        let u0inv = self.coeffs[0].inv()?;
        if self.exact && self.coeffs.len() == 1 {
            return Ok(Laurent { var: self.var, one: self.one.clone(), val: -v, coeffs: vec![u0inv], prec: self.prec, exact: true });
        }
        let rel = if self.exact { (self.prec + v.abs()).max(1) } else { self.prec - v };
        let n = rel.max(0) as usize;
        let mut out: Vec<C> = Vec::with_capacity(n);
        for k in 0..n {
            let mut acc = if k == 0 { self.one.clone() } else { self.one.zero_like() };
            for j in 1..=k.min(self.coeffs.len() - 1) {
                acc = acc.sub(&self.coeffs[j].mul(&out[k - j]));
            }
            out.push(acc.mul(&u0inv));
        }
        let mut l = Laurent { var: self.var, one: self.one.clone(), val: -v, coeffs: out, prec: -v + rel, exact: false };
        l.normalize();
        Ok(l)
    }
    fn to_text(&self) -> String {
        let name = self.var.name();
        let mut parts: Vec<String> = self
            .terms()
            .map(|(e, c)| match e {
                0 => format!("({})", c.to_text()),
                1 => format!("({})*{name}", c.to_text()),
                _ => format!("({})*{name}^{e}", c.to_text()),
            })
            .collect();
        if !self.exact {
            parts.push(format!("O({name}^{})", self.prec));
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat_int, Rat};

    fn q(cap: i32) -> Laurent<Rat> {
        Laurent::gen(Var::Q, rat_int(1), cap)
    }

    #[test]
    fn geometric_inverse() {
        let x = q(10);
        let one = x.one_like();
        let g = one.sub(&x).inv().unwrap();
        assert_eq!(g.prec(), 10);
        for k in 0..10 {
            assert_eq!(g.coeff(k), rat_int(1));
        }
    }

    #[test]
    fn negative_valuation_costs_precision() {
        let x = q(10);
        let g = x.one_like().sub(&x).inv().unwrap(); // known mod Q^10
        let qinv2 = x.pow_i(-2).unwrap(); // exact
        let prod = g.mul(&qinv2);
        assert_eq!(prod.prec(), 8);
        assert_eq!(prod.val(), -2);
        // multiplying two truncated series uses the relative precision rule
        let h = g.shift(-3);
        let p2 = g.mul(&h);
        assert_eq!(p2.prec(), 7);
    }

    #[test]
    fn exact_arithmetic_stays_exact() {
        let x = q(6);
        let p = x.pow_i(-1).unwrap().add(&x.scale(&rat_int(3)));
        assert!(p.is_exact());
        let sq = p.mul(&p);
        assert_eq!(sq.coeff(-2), rat_int(1));
        assert_eq!(sq.coeff(0), rat_int(6));
        assert_eq!(sq.coeff(2), rat_int(9));
    }
}
