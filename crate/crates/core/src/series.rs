//! The truncated ratio-series ring 𝓕_n = F[[ζ₂/ζ₁, …, ζ_n/ζ_{n−1}]] and its
//! Laurent-windowed extension.
//!
//! Coordinates are `x_k = ζ_{k+1}/ζ_k`; truncation is by total degree.

use crate::error::{EngineError, Result};
use crate::scalar::{Scalar, ScalarError};
use smallvec::SmallVec;
use std::cmp::Ordering;
use std::collections::BTreeMap;

/// Exponent vector `(i₁, …, i_{n−1})`, ordered graded-lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Exps(pub SmallVec<[i32; 4]>);

impl Exps {
    pub fn zero(len: usize) -> Exps {
        Exps(SmallVec::from_elem(0, len))
    }
    pub fn from_slice(v: &[i32]) -> Exps {
        Exps(SmallVec::from_slice(v))
    }
    pub fn degree(&self) -> i32 {
        self.0.iter().sum()
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    pub fn add(&self, o: &Exps) -> Exps {
        Exps(self.0.iter().zip(o.0.iter()).map(|(a, b)| a + b).collect())
    }
    pub fn sub(&self, o: &Exps) -> Exps {
        Exps(self.0.iter().zip(o.0.iter()).map(|(a, b)| a - b).collect())
    }
    pub fn scale(&self, k: i32) -> Exps {
        Exps(self.0.iter().map(|a| a * k).collect())
    }
    pub fn text(&self) -> String {
        self.0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(",")
    }
    pub fn parse(s: &str) -> Result<Exps> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Exps::default());
        }
        let v: std::result::Result<SmallVec<[i32; 4]>, _> = s.split(',').map(|p| p.trim().parse::<i32>()).collect();
        v.map(Exps).map_err(|_| EngineError::Scalar(ScalarError::Parse(format!("bad exponent vector '{s}'"))))
    }
    /// Exponent of `ζ_i` (1-based) in `x^self`, i.e. `i_{k−1} − i_k` with `i_0 = i_n = 0`.
    pub fn zeta_exponent(&self, i: usize) -> i32 {
        let n = self.0.len() + 1;
        let prev = if i >= 2 { self.0[i - 2] } else { 0 };
        let cur = if i < n { self.0[i - 1] } else { 0 };
        prev - cur
    }
}

impl Ord for Exps {
    fn cmp(&self, o: &Self) -> Ordering {
        self.degree().cmp(&o.degree()).then_with(|| self.0.cmp(&o.0))
    }
}

impl PartialOrd for Exps {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Exponents of `ζ_j/ζ_i` (1-based, `i ≠ j`) in ratio coordinates for `n` variables.
pub fn ratio_exps(n: usize, i: usize, j: usize) -> Exps {
    let mut e = Exps::zero(n - 1);
    if i < j {
        for k in i..j {
            e.0[k - 1] += 1;
        }
    } else {
        for k in j..i {
            e.0[k - 1] -= 1;
        }
    }
    e
}

/// Convert a ζ-monomial `∏ ζ_k^{e_k}` to ratio coordinates; requires `Σ e_k = 0`.
pub fn zeta_to_exps(e: &[i32]) -> Result<Exps> {
    if e.iter().sum::<i32>() != 0 {
        return Err(EngineError::Precondition(format!("ζ-monomial {e:?} is not translation invariant")));
    }
    let n = e.len();
    let mut out = Exps::zero(n - 1);
    for j in 0..n - 1 {
        out.0[j] = e[j + 1..].iter().sum();
    }
    Ok(out)
}

/// Inverse of [`zeta_to_exps`], anchored so that `ζ` exponents follow `x^i`'s expansion.
pub fn exps_to_zeta(x: &Exps) -> Vec<i32> {
    let n = x.len() + 1;
    (1..=n).map(|i| x.zeta_exponent(i)).collect()
}

/// All exponent vectors of length `len` with entries `>= window[k]` and total degree `<= cap`,
/// in increasing graded-lex order.
pub fn basis_window(window: &[i32], cap: i32) -> Vec<Exps> {
    let len = window.len();
    let wsum: i32 = window.iter().sum();
    let mut out = Vec::new();
    if len == 0 {
        if cap >= 0 {
            out.push(Exps::default());
        }
        return out;
    }
    let mut cur = vec![0i32; len];
    fn rec(k: usize, window: &[i32], remaining: i32, cur: &mut Vec<i32>, out: &mut Vec<Exps>) {
        let len = window.len();
        if k == len {
            out.push(Exps::from_slice(cur));
            return;
        }
        let rest_min: i32 = window[k + 1..].iter().sum();
        let mut e = window[k];
        while e + rest_min <= remaining {
            cur[k] = e;
            rec(k + 1, window, remaining - e, cur, out);
            e += 1;
        }
    }
    if wsum <= cap {
        rec(0, window, cap, &mut cur, &mut out);
    }
    out.sort();
    out
}

/// Monomial basis of 𝓕_n up to total degree `cap`.
pub fn basis(n: usize, cap: i32) -> Vec<Exps> {
    basis_window(&vec![0; n.saturating_sub(1)], cap)
}

#[derive(Clone, Debug)]
pub struct RatioSeries<F> {
    n: usize,
    window: Vec<i32>,
    cap: i32,
    terms: BTreeMap<Exps, F>,
}

impl<F: Scalar> PartialEq for RatioSeries<F> {
    fn eq(&self, o: &Self) -> bool {
        self.n == o.n && self.first_mismatch(o).is_none()
    }
}

impl<F: Scalar> RatioSeries<F> {
    pub fn zero(n: usize, cap: i32) -> Self {
        RatioSeries { n, window: vec![0; n.saturating_sub(1)], cap, terms: BTreeMap::new() }
    }
    pub fn zero_window(n: usize, window: Vec<i32>, cap: i32) -> Self {
        assert_eq!(window.len(), n - 1);
        RatioSeries { n, window, cap, terms: BTreeMap::new() }
    }
    pub fn constant(n: usize, cap: i32, c: F) -> Self {
        let mut s = Self::zero(n, cap);
        s.add_term(Exps::zero(n - 1), c);
        s
    }
    pub fn monomial(n: usize, cap: i32, e: Exps, c: F) -> Self {
        let mut s = Self::zero(n, cap);
        s.add_term(e, c);
        s
    }
    /// Same shape (n, window, cap), no terms.
    pub fn empty_like(&self) -> Self {
        RatioSeries { n: self.n, window: self.window.clone(), cap: self.cap, terms: BTreeMap::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn cap(&self) -> i32 {
        self.cap
    }
    pub fn window(&self) -> &[i32] {
        &self.window
    }
    pub fn terms(&self) -> &BTreeMap<Exps, F> {
        &self.terms
    }
    pub fn len(&self) -> usize {
        self.terms.len()
    }
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn coeff(&self, e: &Exps) -> Option<&F> {
        self.terms.get(e)
    }
    pub fn coeff_or_zero(&self, e: &Exps, zero: &F) -> F {
        self.terms.get(e).cloned().unwrap_or_else(|| zero.zero_like())
    }

    pub fn try_add_term(&mut self, e: Exps, c: F) -> Result<()> {
        if e.degree() > self.cap {
            return Ok(());
        }
        if e.0.iter().zip(self.window.iter()).any(|(a, w)| a < w) {
            return Err(EngineError::Window(format!("exponent {} below window {:?}", e.text(), self.window)));
        }
        if c.is_zero() {
            return Ok(());
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let s = o.get().add(&c);
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
        Ok(())
    }

    /// [`try_add_term`](Self::try_add_term) for nonnegative-window series, where underflow cannot happen.
    pub fn add_term(&mut self, e: Exps, c: F) {
        self.try_add_term(e, c).expect("window underflow");
    }

    fn check_shape(&self, o: &Self) -> Result<()> {
        if self.n != o.n {
            return Err(EngineError::Shape(format!("series in {} vs {} variables", self.n, o.n)));
        }
        Ok(())
    }

    fn merged_window(&self, o: &Self) -> Vec<i32> {
        self.window.iter().zip(o.window.iter()).map(|(a, b)| *a.min(b)).collect()
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.check_shape(o)?;
        let mut out = RatioSeries { n: self.n, window: self.merged_window(o), cap: self.cap.min(o.cap), terms: BTreeMap::new() };
        for (e, c) in self.terms.iter().chain(o.terms.iter()) {
            out.try_add_term(e.clone(), c.clone())?;
        }
        Ok(out)
    }
    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.neg())
    }
    pub fn neg(&self) -> Self {
        let mut out = self.empty_like();
        out.terms = self.terms.iter().map(|(e, c)| (e.clone(), c.neg())).collect();
        out
    }
    pub fn scale(&self, c: &F) -> Self {
        let mut out = self.empty_like();
        if c.is_zero() {
            return out;
        }
        for (e, v) in &self.terms {
            let p = v.mul(c);
            if !p.is_zero() {
                out.terms.insert(e.clone(), p);
            }
        }
        out
    }
    pub fn map_coeffs<G: Scalar>(&self, f: impl Fn(&F) -> std::result::Result<G, ScalarError>) -> Result<RatioSeries<G>> {
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            let v = f(c)?;
            if !v.is_zero() {
                terms.insert(e.clone(), v);
            }
        }
        Ok(RatioSeries { n: self.n, window: self.window.clone(), cap: self.cap, terms })
    }

    /// Lowest total degree the window allows (0 for 𝓕_n).
    fn min_degree(&self) -> i32 {
        self.window.iter().sum::<i32>().min(0)
    }

    /// Truncated product. With negative windows the cap shrinks so that no
    /// discarded high-degree term could have contributed.
    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.check_shape(o)?;
        let cap = (self.cap + o.min_degree()).min(o.cap + self.min_degree());
        let window: Vec<i32> = self.window.iter().zip(o.window.iter()).map(|(a, b)| a + b).collect();
        let mut out = RatioSeries { n: self.n, window, cap, terms: BTreeMap::new() };
        for (e1, c1) in &self.terms {
            let d1 = e1.degree();
            for (e2, c2) in &o.terms {
                if d1 + e2.degree() > cap {
                    continue;
                }
                out.try_add_term(e1.add(e2), c1.mul(c2))?;
            }
        }
        Ok(out)
    }

    /// Multiply by `x^e` (the Laurent shift), checking the target window.
    pub fn shift(&self, e: &Exps, window: Option<Vec<i32>>) -> Result<Self> {
        let window = window.unwrap_or_else(|| self.window.clone());
        let mut out = RatioSeries { n: self.n, window, cap: self.cap + e.degree(), terms: BTreeMap::new() };
        for (k, c) in &self.terms {
            out.try_add_term(k.add(e), c.clone())?;
        }
        Ok(out)
    }

    /// Drop terms of total degree above `cap`.
    pub fn truncate(&self, cap: i32) -> Self {
        let mut out = self.empty_like();
        out.cap = cap.min(self.cap);
        out.terms = self.terms.iter().filter(|(e, _)| e.degree() <= out.cap).map(|(e, c)| (e.clone(), c.clone())).collect();
        out
    }

    /// Restrict to the terms accepted by `keep`.
    pub fn filter(&self, keep: impl Fn(&Exps) -> bool) -> Self {
        let mut out = self.empty_like();
        out.terms = self.terms.iter().filter(|(e, _)| keep(e)).map(|(e, c)| (e.clone(), c.clone())).collect();
        out
    }

    /// Replace the window (e.g. to embed 𝓕_n in a Laurent-windowed space).
    pub fn with_window(&self, window: Vec<i32>) -> Result<Self> {
        let mut out = RatioSeries { n: self.n, window, cap: self.cap, terms: BTreeMap::new() };
        for (e, c) in &self.terms {
            out.try_add_term(e.clone(), c.clone())?;
        }
        Ok(out)
    }

    /// First monomial (in graded-lex order, up to the common cap) where the
    /// two series differ, with both coefficients.
    pub fn first_mismatch(&self, o: &Self) -> Option<(Exps, Option<F>, Option<F>)> {
        self.first_mismatch_by(o, |a, b| a.sub(b).is_zero())
    }

    pub fn first_mismatch_by(&self, o: &Self, eq: impl Fn(&F, &F) -> bool) -> Option<(Exps, Option<F>, Option<F>)> {
        let cap = self.cap.min(o.cap);
        let mut keys: Vec<&Exps> = self.terms.keys().chain(o.terms.keys()).filter(|e| e.degree() <= cap).collect();
        keys.sort();
        keys.dedup();
        for e in keys {
            let (a, b) = (self.terms.get(e), o.terms.get(e));
            let same = match (a, b) {
                (Some(a), Some(b)) => eq(a, b),
                (Some(a), None) | (None, Some(a)) => a.is_zero(),
                (None, None) => true,
            };
            if !same {
                return Some((e.clone(), a.cloned(), b.cloned()));
            }
        }
        None
    }

    /// Fixture text: one `i1,i2,… : scalar` line per term in graded-lex order.
    pub fn to_fixture(&self) -> String {
        let mut s = String::new();
        for (e, c) in &self.terms {
            s.push_str(&format!("{} : {}\n", e.text(), c.to_text()));
        }
        s
    }

    pub fn from_fixture(n: usize, cap: i32, text: &str, parse: impl Fn(&str) -> std::result::Result<F, ScalarError>) -> Result<Self> {
        let mut out = Self::zero(n, cap);
        let mut min_w = vec![0; n - 1];
        let mut rows = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (e, c) = line.split_once(':').ok_or_else(|| EngineError::Scalar(ScalarError::Parse(format!("bad fixture line '{line}'"))))?;
            let e = Exps::parse(e)?;
            if e.len() != n - 1 {
                return Err(EngineError::Shape(format!("fixture exponent {} has wrong length", e.text())));
            }
            for (w, x) in min_w.iter_mut().zip(e.0.iter()) {
                *w = (*w).min(*x);
            }
            rows.push((e, parse(c)?));
        }
        out.window = min_w;
        for (e, c) in rows {
            out.try_add_term(e, c)?;
        }
        Ok(out)
    }
}

/// Coefficients `c_k`, `k ≤ kmax`, of `(a z;p)_∞/(b z;p)_∞ = Σ_k c_k z^k`
/// by the q-binomial theorem: `c_k = ∏_{j<k}(b − a p^j)/(p;p)_k`.
/// `b = 0` gives the pure numerator product.
pub fn qbinomial_coeffs<F: Scalar>(a: &F, b: &F, p: &F, kmax: usize) -> std::result::Result<Vec<F>, ScalarError> {
    let mut out = Vec::with_capacity(kmax + 1);
    let mut num = a.one_like();
    let mut den = a.one_like();
    let mut ap = a.clone();
    let mut pp = p.clone();
    out.push(a.one_like());
    for _ in 1..=kmax {
        num = num.mul(&b.sub(&ap));
        den = den.mul(&pp.one_minus());
        ap = ap.mul(p);
        pp = pp.mul(p);
        out.push(num.div(&den)?);
    }
    Ok(out)
}

/// Embed a univariate series `Σ c_m y^m` at `y = z·x^e` (with `deg e > 0`).
pub fn compose<F: Scalar>(n: usize, cap: i32, coeffs: &[F], e: &Exps, z: &F) -> RatioSeries<F> {
    let d = e.degree();
    assert!(d > 0, "composition needs a positive-degree monomial");
    let mut out = RatioSeries::zero(n, cap);
    let mut zp = z.one_like();
    for (m, c) in coeffs.iter().enumerate() {
        let m = m as i32;
        if m * d > cap {
            break;
        }
        out.add_term(e.scale(m), c.mul(&zp));
        zp = zp.mul(z);
    }
    out
}

/// `(a·z·x^e; p)_∞ / (b·z·x^e; p)_∞` expanded to total degree `cap`.
pub fn expand_qbinomial<F: Scalar>(n: usize, a: &F, b: &F, p: &F, e: &Exps, z: &F, cap: i32) -> Result<RatioSeries<F>> {
    let d = e.degree();
    let kmax = if d > 0 { (cap / d).max(0) as usize } else { 0 };
    let cs = qbinomial_coeffs(a, b, p, kmax)?;
    Ok(compose(n, cap, &cs, e, z))
}

/// `1 − z·x^e`.
pub fn one_minus<F: Scalar>(n: usize, e: &Exps, z: &F, cap: i32) -> RatioSeries<F> {
    let mut out = RatioSeries::constant(n, cap, z.one_like());
    out.add_term(e.clone(), z.neg());
    out
}

/// A finite expression in ζ-ratio monomials and q-product factors,
/// rewritten into ratio coordinates by [`zeta_substitute`].
#[derive(Clone, Debug)]
pub enum ZetaExpr<F> {
    Const(F),
    /// `c · ∏ ζ_k^{e_k}`
    Mono(F, Vec<i32>),
    /// `(a·M; p)_∞ / (b·M; p)_∞` with `M = ∏ ζ_k^{e_k}`
    QRatio { a: F, b: F, p: F, zeta: Vec<i32> },
    Sum(Vec<ZetaExpr<F>>),
    Prod(Vec<ZetaExpr<F>>),
}

pub fn zeta_substitute<F: Scalar>(n: usize, cap: i32, one: &F, expr: &ZetaExpr<F>) -> Result<RatioSeries<F>> {
    match expr {
        ZetaExpr::Const(c) => Ok(RatioSeries::constant(n, cap, c.clone())),
        ZetaExpr::Mono(c, z) => {
            let e = zeta_to_exps(z)?;
            let mut s = RatioSeries::zero_window(n, e.0.iter().map(|&x| x.min(0)).collect(), cap);
            s.try_add_term(e, c.clone())?;
            Ok(s)
        }
        ZetaExpr::QRatio { a, b, p, zeta } => {
            let e = zeta_to_exps(zeta)?;
            if e.0.iter().any(|&x| x < 0) || e.degree() == 0 {
                return Err(EngineError::Precondition("q-product argument must lie in the positive cone".into()));
            }
            expand_qbinomial(n, a, b, p, &e, one, cap)
        }
        ZetaExpr::Sum(parts) => {
            let mut acc = RatioSeries::zero(n, cap);
            for p in parts {
                acc = acc.add(&zeta_substitute(n, cap, one, p)?)?;
            }
            Ok(acc)
        }
        ZetaExpr::Prod(parts) => {
            let mut acc = RatioSeries::constant(n, cap, one.clone());
            for p in parts {
                acc = acc.mul(&zeta_substitute(n, cap, one, p)?)?;
            }
            Ok(acc)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int, Rat};

    #[test]
    fn basis_counts_and_order() {
        let b = basis(3, 2);
        assert_eq!(b.len(), 6);
        assert_eq!(b[0], Exps::from_slice(&[0, 0]));
        assert!(b.windows(2).all(|w| w[0] < w[1]));
        let lw = basis_window(&[-2], 1);
        assert_eq!(lw.len(), 4);
    }

    #[test]
    fn truncating_product() {
        let one = rat_int(1);
        let x = Exps::from_slice(&[1]);
        let mut a = RatioSeries::constant(2, 1, one.clone());
        a.add_term(x.clone(), one.clone());
        let sq = a.mul(&a).unwrap();
        assert_eq!(sq.coeff(&x), Some(&rat_int(2)));
        assert_eq!(sq.len(), 2);
    }

    #[test]
    fn geometric_inverse() {
        let one = rat_int(1);
        let x = Exps::from_slice(&[1]);
        let geo = compose(2, 6, &vec![one.clone(); 7], &x, &one);
        let prod = one_minus(2, &x, &one, 6).mul(&geo).unwrap();
        assert_eq!(prod, RatioSeries::constant(2, 6, one));
    }

    #[test]
    fn qbinomial_telescopes() {
        // (q z;q)_∞/(z;q)_∞ = 1/(1-z)
        let q = rat(2, 7);
        let cs = qbinomial_coeffs(&q, &rat_int(1), &q, 6).unwrap();
        assert!(cs.iter().all(|c| *c == rat_int(1)));
        // a = b gives 1
        let cs = qbinomial_coeffs(&q, &q, &q, 4).unwrap();
        assert!(cs[1..].iter().all(|c| *c == Rat::from_integer(0.into())));
    }

    #[test]
    fn zeta_ratio_translation() {
        assert_eq!(zeta_to_exps(&[-1, 0, 1]).unwrap(), Exps::from_slice(&[1, 1]));
        assert!(zeta_to_exps(&[1, 0, 0]).is_err());
        assert_eq!(ratio_exps(3, 1, 3), Exps::from_slice(&[1, 1]));
        assert_eq!(ratio_exps(3, 2, 1), Exps::from_slice(&[-1, 0]));
        let e = Exps::from_slice(&[2, 1]);
        assert_eq!(zeta_to_exps(&exps_to_zeta(&e)).unwrap(), e);
    }

    #[test]
    fn laurent_shift_roundtrip() {
        let one = rat_int(1);
        let s = RatioSeries::constant(2, 3, one.clone()).with_window(vec![-2]).unwrap();
        let down = s.shift(&Exps::from_slice(&[-1]), None).unwrap();
        assert_eq!(down.coeff(&Exps::from_slice(&[-1])), Some(&one));
        let back = down.shift(&Exps::from_slice(&[1]), None).unwrap();
        assert_eq!(back.terms(), s.terms());
        assert!(down.shift(&Exps::from_slice(&[-2]), None).is_err());
    }

    #[test]
    fn fixture_roundtrip() {
        let mut s = RatioSeries::zero(3, 3);
        s.add_term(Exps::from_slice(&[1, 0]), rat(3, 2));
        s.add_term(Exps::from_slice(&[0, 0]), rat_int(1));
        let text = s.to_fixture();
        assert_eq!(text, "0,0 : 1\n1,0 : 3/2\n");
        let back = RatioSeries::from_fixture(3, 3, &text, crate::scalar::parse_rat).unwrap();
        assert_eq!(back, s);
    }
}
