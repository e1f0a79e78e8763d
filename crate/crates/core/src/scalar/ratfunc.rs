//! Exact rational functions in the formal parameters.

use super::laurent::Laurent;
use super::poly::{gcd, Poly, Var};
use super::{Rat, Scalar};
use crate::error::ScalarError;
use num_traits::{One, Zero};
use std::fmt;

/// Canonical rational function `num/den` over ℚ.
///
/// Canonical form: `gcd(num, den) = 1`, and `den` has coprime integer
/// coefficients with a positive graded-lex leading coefficient. Two scalars
/// are equal iff their canonical forms coincide.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ParamScalar {
    num: Poly,
    den: Poly,
}

impl ParamScalar {
    pub fn zero() -> Self {
        ParamScalar { num: Poly::zero(), den: Poly::one() }
    }
    pub fn one() -> Self {
        ParamScalar { num: Poly::one(), den: Poly::one() }
    }
    pub fn constant(r: Rat) -> Self {
        ParamScalar { num: Poly::constant(r), den: Poly::one() }
    }
    pub fn int(v: i64) -> Self {
        Self::constant(super::rat_int(v))
    }
    pub fn var(v: Var) -> Self {
        ParamScalar { num: Poly::var(v), den: Poly::one() }
    }
    pub fn from_poly(p: Poly) -> Self {
        ParamScalar { num: p, den: Poly::one() }
    }

    /// Reduce `num/den` to canonical form.
    pub fn normalize(num: Poly, den: Poly) -> Result<Self, ScalarError> {
        if den.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(Self::zero());
        }
        let g = gcd(&num, &den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (num.div_exact(&g).expect("gcd divides"), den.div_exact(&g).expect("gcd divides"))
        };
        Ok(Self::scale_canonical(num, den))
    }

    fn scale_canonical(num: Poly, den: Poly) -> Self {
        let (c, den) = den.primitive();
        let num = if One::is_one(&c) { num } else { num.scale(&c.recip()) };
        ParamScalar { num, den }
    }

    pub fn numer(&self) -> &Poly {
        &self.num
    }
    pub fn denom(&self) -> &Poly {
        &self.den
    }
    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }
    pub fn constant_value(&self) -> Option<Rat> {
        let n = self.num.constant_value()?;
        let d = self.den.constant_value()?;
        Some(n / d)
    }
    pub fn vars(&self) -> Vec<Var> {
        let mut v = self.num.vars();
        v.extend(self.den.vars());
        v.sort();
        v.dedup();
        v
    }

    /// Exact value at a rational point.
    pub fn eval(&self, point: &dyn Fn(Var) -> Option<Rat>) -> Result<Rat, ScalarError> {
        let d = self.den.eval(point)?;
        if Zero::is_zero(&d) {
            return Err(ScalarError::Pole(format!("denominator {} vanishes at point", self.den)));
        }
        Ok(self.num.eval(point)? / d)
    }

    /// Substitute `v := r` for a rational-function value `r`.
    pub fn subst(&self, v: Var, r: &ParamScalar) -> Result<Self, ScalarError> {
        let ev = |p: &Poly| -> ParamScalar {
            let mut acc = ParamScalar::zero();
            for c in p.coeffs_in(v).iter().rev() {
                acc = acc.mul(r).add(&ParamScalar::from_poly(c.clone()));
            }
            acc
        };
        ev(&self.num).div(&ev(&self.den))
    }

    /// Partially evaluate: every variable mapped to `Some` is replaced by its value.
    pub fn specialize(&self, point: &dyn Fn(Var) -> Option<Rat>) -> Result<Self, ScalarError> {
        let mut out = self.clone();
        for v in self.vars() {
            if let Some(x) = point(v) {
                out = out.subst(v, &ParamScalar::constant(x))?;
            }
        }
        Ok(out)
    }

    /// Rename variables through an injective map (e.g. the swap `S_i ↔ S_{i+1}`).
    pub fn map_vars(&self, f: &impl Fn(Var) -> Var) -> Self {
        Self::scale_canonical(self.num.map_vars(f), self.den.map_vars(f))
    }

    /// Canonical text `(num)/(den)`.
    pub fn to_text(&self) -> String {
        if self.den.is_one() {
            format!("({})", self.num)
        } else {
            format!("({})/({})", self.num, self.den)
        }
    }

    pub fn parse(s: &str) -> Result<Self, ScalarError> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix('(') {
            // find the matching close paren of the numerator
            let close = rest.find(')').ok_or_else(|| ScalarError::Parse(format!("unbalanced '{s}'")))?;
            let num = Poly::parse(&rest[..close])?;
            let tail = rest[close + 1..].trim();
            if tail.is_empty() {
                return Ok(Self::from_poly(num));
            }
            let den_src = tail
                .strip_prefix("/(")
                .and_then(|t| t.strip_suffix(')'))
                .ok_or_else(|| ScalarError::Parse(format!("bad denominator in '{s}'")))?;
            return Self::normalize(num, Poly::parse(den_src)?);
        }
        Ok(Self::from_poly(Poly::parse(s)?))
    }
}

impl fmt::Debug for ParamScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl fmt::Display for ParamScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl Scalar for ParamScalar {
    fn zero_like(&self) -> Self {
        Self::zero()
    }
    fn one_like(&self) -> Self {
        Self::one()
    }
    fn from_rat_like(&self, r: &Rat) -> Self {
        Self::constant(r.clone())
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
    fn add(&self, o: &Self) -> Self {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        if self.den == o.den {
            let num = self.num.add(&o.num);
            return Self::normalize(num, self.den.clone()).expect("nonzero denominator");
        }
        // Henrici: only factors of g = gcd(b, d) can survive in the sum
        let g = gcd(&self.den, &o.den);
        let b_g = self.den.div_exact(&g).expect("gcd divides");
        let d_g = o.den.div_exact(&g).expect("gcd divides");
        let num = self.num.mul(&d_g).add(&o.num.mul(&b_g));
        let den = self.den.mul(&d_g);
        if num.is_zero() {
            return Self::zero();
        }
        if g.is_one() {
            return Self::scale_canonical(num, den);
        }
        let h = gcd(&num, &g);
        if h.is_one() {
            Self::scale_canonical(num, den)
        } else {
            Self::scale_canonical(num.div_exact(&h).unwrap(), den.div_exact(&h).unwrap())
        }
    }
    fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }
    fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        if let Some(c) = o.constant_value() {
            return ParamScalar { num: self.num.scale(&c), den: self.den.clone() };
        }
        if let Some(c) = self.constant_value() {
            return ParamScalar { num: o.num.scale(&c), den: o.den.clone() };
        }
        let g1 = gcd(&self.num, &o.den);
        let g2 = gcd(&o.num, &self.den);
        let (a, d) = if g1.is_one() { (self.num.clone(), o.den.clone()) } else { (self.num.div_exact(&g1).unwrap(), o.den.div_exact(&g1).unwrap()) };
        let (c, b) = if g2.is_one() { (o.num.clone(), self.den.clone()) } else { (o.num.div_exact(&g2).unwrap(), self.den.div_exact(&g2).unwrap()) };
        Self::scale_canonical(a.mul(&c), b.mul(&d))
    }
    fn neg(&self) -> Self {
        ParamScalar { num: self.num.neg(), den: self.den.clone() }
    }
    fn inv(&self) -> Result<Self, ScalarError> {
        if self.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        Ok(Self::scale_canonical(self.den.clone(), self.num.clone()))
    }
    fn to_text(&self) -> String {
        ParamScalar::to_text(self)
    }
}

fn series_quotient<C: Scalar>(num: &[C], den: &[C], terms: usize) -> Result<Vec<C>, ScalarError> {
    let inv0 = den[0].inv()?;
    let mut out: Vec<C> = Vec::with_capacity(terms);
    for k in 0..terms {
        let mut acc = if k < num.len() { num[k].clone() } else { inv0.zero_like() };
        for j in 1..=k.min(den.len() - 1) {
            acc = acc.sub(&den[j].mul(&out[k - j]));
        }
        out.push(acc.mul(&inv0));
    }
    Ok(out)
}

/// Split a polynomial into its coefficient list in `v`, dropping leading zeros;
/// returns the valuation and the ParamScalar coefficients.
fn coefficient_list(p: &Poly, v: Var) -> (usize, Vec<ParamScalar>) {
    let cs = p.coeffs_in(v);
    let val = cs.iter().position(|c| !c.is_zero()).unwrap_or(0);
    (val, cs[val..].iter().map(|c| ParamScalar::from_poly(c.clone())).collect())
}

/// Laurent expansion of `f` in the variable `v` about `v = 0`, keeping terms
/// of exponent below `prec`.
pub fn laurent_in(f: &ParamScalar, v: Var, prec: i32) -> Result<Laurent<ParamScalar>, ScalarError> {
    if f.is_zero() {
        return Ok(Laurent::zero_exact(v, ParamScalar::one(), prec));
    }
    let (vn, n) = coefficient_list(&f.num, v);
    let (vd, d) = coefficient_list(&f.den, v);
    let val = vn as i32 - vd as i32;
    let terms = (prec - val).max(0) as usize;
    let coeffs = series_quotient(&n, &d, terms)?;
    Ok(Laurent::from_parts(v, ParamScalar::one(), val, coeffs, prec))
}

/// Power series of `f` in `Q` through `Q^M`.
pub fn qadic_truncate(f: &ParamScalar, m: u32) -> Result<Laurent<ParamScalar>, ScalarError> {
    let (vd, _) = coefficient_list(&f.den, Var::Q);
    if vd > 0 && !f.is_zero() {
        return Err(ScalarError::QAdicPole(format!("denominator {} vanishes at Q=0", f.den)));
    }
    laurent_in(f, Var::Q, m as i32 + 1)
}

/// Expansion of `f` at `S_j = 1` in `ε = 1 − S_j`, through `ε^order`.
pub fn eps_expand(f: &ParamScalar, pivot: Var, order: i32) -> Result<Laurent<ParamScalar>, ScalarError> {
    if f.vars().contains(&Var::EPS) {
        return Err(ScalarError::Expansion("input already depends on ε".into()));
    }
    let one_minus_eps = Poly::one().sub(&Poly::var(Var::EPS));
    let num = f.num.subst(pivot, &one_minus_eps);
    let den = f.den.subst(pivot, &one_minus_eps);
    if den.is_zero() {
        return Err(ScalarError::Expansion("denominator vanishes identically".into()));
    }
    let g = ParamScalar::normalize(num, den)?;
    laurent_in(&g, Var::EPS, order + 1)
}

/// Ring morphism check helper: evaluate a Laurent expansion back into a ParamScalar.
pub fn laurent_sum(l: &Laurent<ParamScalar>, x: &ParamScalar) -> Result<ParamScalar, ScalarError> {
    let mut acc = ParamScalar::zero();
    for (e, c) in l.terms() {
        acc = acc.add(&c.mul(&x.pow_i(e as i64)?));
    }
    Ok(acc)
}

impl From<Rat> for ParamScalar {
    fn from(r: Rat) -> Self {
        ParamScalar::constant(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{qpoch, rat};

    fn ps(s: &str) -> ParamScalar {
        ParamScalar::parse(s).unwrap()
    }

    #[test]
    fn normalize_common_factor() {
        let f = ParamScalar::normalize(Poly::parse("Q^2 - 1").unwrap(), Poly::parse("Q - 1").unwrap()).unwrap();
        assert_eq!(f, ps("Q + 1"));
        let z = ParamScalar::normalize(Poly::zero(), Poly::parse("T - 1").unwrap()).unwrap();
        assert!(z.is_zero());
        assert!(ParamScalar::normalize(Poly::one(), Poly::zero()).is_err());
    }

    #[test]
    fn denominator_sign_is_canonical() {
        let a = ps("(1)/(1 - Q)");
        let b = ps("(-1)/(Q - 1)");
        assert_eq!(a, b);
        assert_eq!(a.to_text(), "(-1)/(Q - 1)");
    }

    #[test]
    fn qpoch_symbolic() {
        let a = ParamScalar::var(Var::A);
        let q = ParamScalar::var(Var::Q).pow_i(2).unwrap();
        let p2 = qpoch(&a, &q, 2).unwrap();
        assert_eq!(p2, ps("A^2*Q^2 - A*Q^2 - A + 1"));
        let pm1 = qpoch(&a, &q, -1).unwrap();
        let back = pm1.mul(&qpoch(&a.div(&q).unwrap(), &q, 1).unwrap());
        assert!(back.is_one());
    }

    #[test]
    fn eval_example() {
        let a = ParamScalar::var(Var::A);
        let q = ParamScalar::var(Var::Q).pow_i(2).unwrap();
        let p2 = qpoch(&a, &q, 2).unwrap();
        let v = p2.eval(&|v| if v == Var::A { Some(rat(2, 1)) } else { Some(rat(1, 2)) }).unwrap();
        assert_eq!(v, rat(-1, 2));
    }

    #[test]
    fn eps_expand_examples() {
        let s = Var::s(1);
        let one = ps("(1)/(1 - S1)");
        let e = eps_expand(&one, s, 2).unwrap();
        assert_eq!(e.val(), -1);
        assert_eq!(e.coeff(-1), ParamScalar::one());
        assert!(e.coeff(0).is_zero());
        let f = ps("(1 - Q^2*S1)/(1 - S1)");
        let e = eps_expand(&f, s, 1).unwrap();
        assert_eq!(e.coeff(-1), ps("1 - Q^2"));
        assert_eq!(e.coeff(0), ps("Q^2"));
        assert!(e.coeff(1).is_zero());
        let reg = eps_expand(&ps("1 + S1"), s, 2).unwrap();
        assert_eq!(reg.coeff(0), ParamScalar::int(2));
        assert_eq!(reg.coeff(1), ParamScalar::int(-1));
    }

    #[test]
    fn qadic_geometric() {
        let f = ps("(1)/(1 - Q^2)");
        let l = qadic_truncate(&f, 4).unwrap();
        for k in 0..=4 {
            let want = if k % 2 == 0 { ParamScalar::one() } else { ParamScalar::zero() };
            assert_eq!(l.coeff(k), want);
        }
        assert!(qadic_truncate(&ps("(1)/(Q)"), 3).is_err());
    }
}
