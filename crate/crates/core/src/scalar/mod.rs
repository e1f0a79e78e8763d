//! Scalar fields used as coefficients of every series in the engine.
//!
//! Three backings implement [`Scalar`]:
//! * [`Rat`] for fully sampled parameters,
//! * [`ParamScalar`] for exact rational functions in the formal parameters,
//! * [`Laurent`] for truncated Laurent series in one variable (the q-adic mode
//!   in `Q`, and the `ε = 1 − s` expansions).

mod laurent;
mod poly;
mod ratfunc;
mod sample;

pub use laurent::{Laurent, QAdicScalar};
pub use poly::{Mono, Poly, Var};
pub use ratfunc::{eps_expand, laurent_in, laurent_sum, qadic_truncate, ParamScalar};
pub use sample::{random_rat, Sampler};

pub use crate::error::ScalarError;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;

/// Arbitrary precision rational number.
pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// A commutative field (or a truncation of one) carrying series coefficients.
///
/// Constants are always built relative to an existing element so that
/// context-dependent backings (truncation caps) propagate their settings.
pub trait Scalar: Clone + PartialEq + fmt::Debug + Send + Sync + 'static {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn from_rat_like(&self, r: &Rat) -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn inv(&self) -> Result<Self, ScalarError>;
    fn to_text(&self) -> String;

    fn from_i64_like(&self, v: i64) -> Self {
        self.from_rat_like(&rat_int(v))
    }
    fn div(&self, o: &Self) -> Result<Self, ScalarError> {
        Ok(self.mul(&o.inv()?))
    }
    fn scale(&self, r: &Rat) -> Self {
        self.mul(&self.from_rat_like(r))
    }
    fn is_one(&self) -> bool {
        self.sub(&self.one_like()).is_zero()
    }
    /// Integer power; negative exponents invert.
    fn pow_i(&self, e: i64) -> Result<Self, ScalarError> {
        if e < 0 {
            return self.inv()?.pow_i(-e);
        }
        let mut base = self.clone();
        let mut acc = self.one_like();
        let mut e = e as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        Ok(acc)
    }
    /// `1 - self`, the building block of every Pochhammer factor.
    fn one_minus(&self) -> Self {
        self.one_like().sub(self)
    }
}

impl Scalar for Rat {
    fn zero_like(&self) -> Self {
        Rat::zero()
    }
    fn one_like(&self) -> Self {
        Rat::one()
    }
    fn from_rat_like(&self, r: &Rat) -> Self {
        r.clone()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn inv(&self) -> Result<Self, ScalarError> {
        if Zero::is_zero(self) {
            Err(ScalarError::DivisionByZero)
        } else {
            Ok(self.recip())
        }
    }
    fn to_text(&self) -> String {
        rat_text(self)
    }
}

pub fn rat_text(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rat(s: &str) -> Result<Rat, ScalarError> {
    let s = s.trim();
    let bad = || ScalarError::Parse(format!("bad rational '{s}'"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(ScalarError::DivisionByZero);
            }
            Ok(Rat::new(n, d))
        }
        None => Ok(Rat::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

/// `(a;q)_k` for any integer `k`, with the negative-index convention
/// `(a;q)_{-m} = 1/(a q^{-m};q)_m`.
pub fn qpoch<F: Scalar>(a: &F, q: &F, k: i64) -> Result<F, ScalarError> {
    if k >= 0 {
        let mut acc = a.one_like();
        let mut aq = a.clone();
        for _ in 0..k {
            acc = acc.mul(&aq.one_minus());
            aq = aq.mul(q);
        }
        Ok(acc)
    } else {
        let m = -k;
        let qinv = q.inv()?;
        let mut aq = a.clone();
        let mut den = a.one_like();
        for j in 1..=m {
            aq = aq.mul(&qinv);
            let f = aq.one_minus();
            if f.is_zero() {
                return Err(ScalarError::Pole(format!("(a;q)_{k}: factor 1 - a q^-{j} vanishes")));
            }
            den = den.mul(&f);
        }
        den.inv()
    }
}

/// Product `∏ (a_i;q)_k`.
pub fn qpoch_multi<F: Scalar>(args: &[F], q: &F, k: i64) -> Result<F, ScalarError> {
    let mut acc = q.one_like();
    for a in args {
        acc = acc.mul(&qpoch(a, q, k)?);
    }
    Ok(acc)
}

/// q-integer `[n]_q = (1 - q^n)/(1 - q)` computed as the finite sum.
pub fn qint<F: Scalar>(q: &F, n: u32) -> F {
    let mut acc = q.zero_like();
    let mut p = q.one_like();
    for _ in 0..n {
        acc = acc.add(&p);
        p = p.mul(q);
    }
    acc
}

/// q-factorial `[n]_q!`.
pub fn qfactorial<F: Scalar>(q: &F, n: u32) -> F {
    let mut acc = q.one_like();
    for k in 1..=n {
        acc = acc.mul(&qint(q, k));
    }
    acc
}

/// Gaussian binomial `[n choose k]_q`.
pub fn qbinom<F: Scalar>(q: &F, n: u32, k: u32) -> Result<F, ScalarError> {
    if k > n {
        return Ok(q.zero_like());
    }
    qfactorial(q, n).div(&qfactorial(q, k).mul(&qfactorial(q, n - k)))
}

pub fn rat_abs_height(r: &Rat) -> usize {
    (r.numer().abs().bits().max(r.denom().bits())) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qpoch_small_cases() {
        let a = rat(2, 1);
        let q = rat(1, 4);
        assert_eq!(qpoch(&a, &q, 0).unwrap(), rat_int(1));
        assert_eq!(qpoch(&a, &q, 2).unwrap(), rat(-1, 2));
        // (a;q)_0 = (a;q)_{-1} (a q^{-1};q)_1
        let m1 = qpoch(&a, &q, -1).unwrap();
        let shifted = qpoch(&(a.clone() / q.clone()), &q, 1).unwrap();
        assert_eq!(m1 * shifted, rat_int(1));
    }

    #[test]
    fn qpoch_negative_pole_is_reported() {
        // a = q makes 1 - a q^{-1} vanish
        let q = rat(1, 3);
        let err = qpoch(&q, &q, -1).unwrap_err();
        assert!(matches!(err, ScalarError::Pole(_)));
    }

    #[test]
    fn parse_roundtrip() {
        for s in ["3", "-7/5", "0"] {
            assert_eq!(rat_text(&parse_rat(s).unwrap()), s);
        }
    }
}
