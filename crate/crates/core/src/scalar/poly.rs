//! Sparse multivariate polynomials over ℚ with a recursive gcd.

use super::{parse_rat, rat_text, Rat};
use crate::error::ScalarError;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use smallvec::SmallVec;
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

/// A formal variable. The index fixes the monomial order:
/// `Q < T < S1 < … < S24 < A < U < E < X0 < …`.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Var(pub u8);

const MAX_S: u8 = 24;

impl Var {
    pub const Q: Var = Var(0);
    pub const T: Var = Var(1);
    pub const A: Var = Var(2 + MAX_S);
    /// `t^{1/4}`, only introduced by the G_ℓ product checks.
    pub const U: Var = Var(3 + MAX_S);
    /// The deformation variable `ε` of the generalized-eigenfunction scheme.
    pub const EPS: Var = Var(4 + MAX_S);

    /// `S_i`, 1-based.
    pub fn s(i: usize) -> Var {
        assert!(i >= 1 && i <= MAX_S as usize, "S index out of range");
        Var(1 + i as u8)
    }
    pub fn aux(k: u8) -> Var {
        Var(5 + MAX_S + k)
    }

    pub fn name(self) -> String {
        match self.0 {
            0 => "Q".into(),
            1 => "T".into(),
            i if (2..2 + MAX_S).contains(&i) => format!("S{}", i - 1),
            i if i == 2 + MAX_S => "A".into(),
            i if i == 3 + MAX_S => "U".into(),
            i if i == 4 + MAX_S => "E".into(),
            i => format!("X{}", i - 5 - MAX_S),
        }
    }

    pub fn parse(s: &str) -> Option<Var> {
        match s {
            "Q" => Some(Var::Q),
            "T" => Some(Var::T),
            "A" => Some(Var::A),
            "U" => Some(Var::U),
            "E" => Some(Var::EPS),
            _ => {
                let (head, tail) = s.split_at(1);
                let k: usize = tail.parse().ok()?;
                match head {
                    "S" if k >= 1 && k <= MAX_S as usize => Some(Var::s(k)),
                    "X" if k < 64 => Some(Var::aux(k as u8)),
                    _ => None,
                }
            }
        }
    }
}

/// Monomial as a sparse exponent list sorted by variable; never stores zero exponents.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Mono(pub SmallVec<[(Var, u32); 4]>);

impl Mono {
    pub fn one() -> Mono {
        Mono(SmallVec::new())
    }
    pub fn var(v: Var, e: u32) -> Mono {
        let mut m = Mono::one();
        if e > 0 {
            m.0.push((v, e));
        }
        m
    }
    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }
    pub fn exp(&self, v: Var) -> u32 {
        self.0.iter().find(|&&(w, _)| w == v).map_or(0, |&(_, e)| e)
    }
    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }
    pub fn mul(&self, o: &Mono) -> Mono {
        let mut out = SmallVec::with_capacity(self.0.len() + o.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < o.0.len() {
            let (a, b) = (self.0[i], o.0[j]);
            match a.0.cmp(&b.0) {
                Ordering::Less => {
                    out.push(a);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a.0, a.1 + b.1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&o.0[j..]);
        Mono(out)
    }
    /// `self / o` when `o` divides `self`.
    pub fn div(&self, o: &Mono) -> Option<Mono> {
        let mut out = SmallVec::new();
        let mut j = 0;
        for &(v, e) in &self.0 {
            let mut sub = 0;
            if j < o.0.len() {
                if o.0[j].0 < v {
                    return None;
                }
                if o.0[j].0 == v {
                    sub = o.0[j].1;
                    j += 1;
                }
            }
            if sub > e {
                return None;
            }
            if e > sub {
                out.push((v, e - sub));
            }
        }
        if j < o.0.len() {
            return None;
        }
        Some(Mono(out))
    }
    /// Remove variable `v`, returning its exponent.
    fn split_var(&self, v: Var) -> (u32, Mono) {
        let mut out = SmallVec::new();
        let mut e = 0;
        for &(w, k) in &self.0 {
            if w == v {
                e = k;
            } else {
                out.push((w, k));
            }
        }
        (e, Mono(out))
    }
    /// Rename variables through `f`; the caller guarantees `f` is injective on the support.
    pub fn map_vars(&self, f: impl Fn(Var) -> Var) -> Mono {
        let mut v: SmallVec<[(Var, u32); 4]> = self.0.iter().map(|&(w, e)| (f(w), e)).collect();
        v.sort_by_key(|p| p.0);
        Mono(v)
    }
}

impl Ord for Mono {
    /// Graded lexicographic: total degree first, then the exponent of the
    /// largest variable.
    fn cmp(&self, o: &Self) -> Ordering {
        let d = self.degree().cmp(&o.degree());
        if d != Ordering::Equal {
            return d;
        }
        let (mut i, mut j) = (self.0.len(), o.0.len());
        while i > 0 && j > 0 {
            let (a, b) = (self.0[i - 1], o.0[j - 1]);
            if a.0 != b.0 {
                return a.0.cmp(&b.0);
            }
            if a.1 != b.1 {
                return a.1.cmp(&b.1);
            }
            i -= 1;
            j -= 1;
        }
        i.cmp(&j)
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Polynomial over ℚ; terms are kept in graded-lex order so the leading term is last.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Poly {
    pub terms: BTreeMap<Mono, Rat>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }
    pub fn one() -> Poly {
        Poly::constant(Rat::one())
    }
    pub fn constant(c: Rat) -> Poly {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(Mono::one(), c);
        }
        p
    }
    pub fn var(v: Var) -> Poly {
        Poly::term(Mono::var(v, 1), Rat::one())
    }
    pub fn term(m: Mono, c: Rat) -> Poly {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.is_one())
    }
    pub fn constant_value(&self) -> Option<Rat> {
        if self.is_zero() {
            return Some(Rat::zero());
        }
        if self.is_constant() {
            return self.terms.get(&Mono::one()).cloned();
        }
        None
    }
    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.get(&Mono::one()).is_some_and(|c| c.is_one())
    }
    pub fn leading(&self) -> Option<(&Mono, &Rat)> {
        self.terms.iter().next_back()
    }
    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    fn add_term(&mut self, m: Mono, c: Rat) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let (mut big, small) = if self.terms.len() >= o.terms.len() { (self.clone(), o) } else { (o.clone(), self) };
        for (m, c) in &small.terms {
            big.add_term(m.clone(), c.clone());
        }
        big
    }
    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }
    pub fn sub(&self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
    pub fn scale(&self, r: &Rat) -> Poly {
        if r.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * r)).collect() }
    }
    pub fn mul_term(&self, m: &Mono, r: &Rat) -> Poly {
        if r.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(k, c)| (k.mul(m), c * r)).collect() }
    }
    pub fn mul(&self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        if let Some(c) = o.constant_value() {
            return self.scale(&c);
        }
        if let Some(c) = self.constant_value() {
            return o.scale(&c);
        }
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one();
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut v: Vec<Var> = self.terms.keys().flat_map(|m| m.0.iter().map(|p| p.0)).collect();
        v.sort();
        v.dedup();
        v
    }
    pub fn degree_in(&self, v: Var) -> u32 {
        self.terms.keys().map(|m| m.exp(v)).max().unwrap_or(0)
    }
    /// Coefficients with respect to `v`, indexed by power.
    pub fn coeffs_in(&self, v: Var) -> Vec<Poly> {
        let mut out = vec![Poly::zero(); self.degree_in(v) as usize + 1];
        for (m, c) in &self.terms {
            let (e, rest) = m.split_var(v);
            out[e as usize].terms.insert(rest, c.clone());
        }
        out
    }
    pub fn from_coeffs_in(v: Var, cs: &[Poly]) -> Poly {
        let mut out = Poly::zero();
        for (e, c) in cs.iter().enumerate() {
            let vm = Mono::var(v, e as u32);
            for (m, r) in &c.terms {
                out.terms.insert(m.mul(&vm), r.clone());
            }
        }
        out
    }

    /// Evaluate at a full assignment; unassigned variables raise an error.
    pub fn eval(&self, point: &dyn Fn(Var) -> Option<Rat>) -> Result<Rat, ScalarError> {
        let mut acc = Rat::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for &(v, e) in &m.0 {
                let x = point(v).ok_or_else(|| ScalarError::Pole(format!("variable {} unassigned", v.name())))?;
                t *= num_traits::pow(x, e as usize);
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Substitute `v := p`.
    pub fn subst(&self, v: Var, p: &Poly) -> Poly {
        let cs = self.coeffs_in(v);
        let mut acc = Poly::zero();
        for c in cs.iter().rev() {
            acc = acc.mul(p).add(c);
        }
        acc
    }

    /// Rename variables through an injective map.
    pub fn map_vars(&self, f: &impl Fn(Var) -> Var) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.map_vars(f), c.clone())).collect() }
    }

    /// Exact division; `None` when `o` does not divide `self`.
    pub fn div_exact(&self, o: &Poly) -> Option<Poly> {
        if o.is_zero() {
            return None;
        }
        if let Some(c) = o.constant_value() {
            return Some(self.scale(&c.recip()));
        }
        let (lm, lc) = o.leading().map(|(m, c)| (m.clone(), c.clone()))?;
        let mut r = self.clone();
        let mut q = Poly::zero();
        while let Some((m, c)) = r.leading().map(|(m, c)| (m.clone(), c.clone())) {
            let tm = m.div(&lm)?;
            let tc = c / &lc;
            r = r.sub(&o.mul_term(&tm, &tc));
            q.add_term(tm, tc);
        }
        Some(q)
    }

    /// Split `self = c · p` with `p` having coprime integer coefficients and
    /// positive leading coefficient.
    pub fn primitive(&self) -> (Rat, Poly) {
        if self.is_zero() {
            return (Rat::one(), Poly::zero());
        }
        let mut den_lcm = num_bigint::BigInt::one();
        for c in self.terms.values() {
            den_lcm = den_lcm.lcm(c.denom());
        }
        let mut num_gcd = num_bigint::BigInt::zero();
        for c in self.terms.values() {
            let n = c.numer() * (&den_lcm / c.denom());
            num_gcd = num_gcd.gcd(&n);
        }
        let mut content = Rat::new(num_gcd, den_lcm);
        if self.leading().unwrap().1.is_negative() {
            content = -content;
        }
        let inv = content.recip();
        (content, self.scale(&inv))
    }

    pub fn to_text(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut s = String::new();
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if i == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let mono = m.0.iter().map(|&(v, e)| if e == 1 { v.name() } else { format!("{}^{}", v.name(), e) }).collect::<Vec<_>>().join("*");
            if mono.is_empty() {
                s.push_str(&rat_text(&a));
            } else if a.is_one() {
                s.push_str(&mono);
            } else {
                s.push_str(&rat_text(&a));
                s.push('*');
                s.push_str(&mono);
            }
        }
        s
    }

    /// Parse the output of [`Poly::to_text`].
    pub fn parse(src: &str) -> Result<Poly, ScalarError> {
        let bad = |m: &str| ScalarError::Parse(format!("{m} in polynomial '{src}'"));
        let s: String = src.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err(bad("empty"));
        }
        let mut out = Poly::zero();
        let bytes = s.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let mut sign = Rat::one();
            if bytes[i] == b'+' || bytes[i] == b'-' {
                if bytes[i] == b'-' {
                    sign = -sign;
                }
                i += 1;
            }
            let start = i;
            while i < bytes.len() && bytes[i] != b'+' && bytes[i] != b'-' {
                i += 1;
            }
            let term = &s[start..i];
            if term.is_empty() {
                return Err(bad("empty term"));
            }
            let mut coeff = sign;
            let mut mono = Mono::one();
            for factor in term.split('*') {
                if factor.starts_with(|c: char| c.is_ascii_digit()) {
                    coeff *= parse_rat(factor)?;
                } else {
                    let (name, e) = match factor.split_once('^') {
                        Some((n, e)) => (n, e.parse::<u32>().map_err(|_| bad("bad exponent"))?),
                        None => (factor, 1),
                    };
                    let v = Var::parse(name).ok_or_else(|| bad("unknown variable"))?;
                    mono = mono.mul(&Mono::var(v, e));
                }
            }
            out.add_term(mono, coeff);
        }
        Ok(out)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

// ---------------------------------------------------------------------------
// gcd

/// Greatest common divisor, normalized by [`Poly::primitive`]; `gcd(0,0) = 0`.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.primitive().1;
    }
    if b.is_zero() {
        return a.primitive().1;
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    let mut vars = a.vars();
    vars.extend(b.vars());
    vars.sort();
    vars.dedup();
    if vars.len() == 1 {
        return univariate_gcd(a, b, vars[0]);
    }
    if coprime_by_specialization(a, b, &vars) {
        return Poly::one();
    }
    let v = *vars.last().unwrap();
    let (da, db) = (a.degree_in(v), b.degree_in(v));
    if da == 0 {
        return gcd(a, &content(&b.coeffs_in(v)));
    }
    if db == 0 {
        return gcd(&content(&a.coeffs_in(v)), b);
    }
    let (ac, bc) = (a.coeffs_in(v), b.coeffs_in(v));
    let (ca, cb) = (content(&ac), content(&bc));
    let c = gcd(&ca, &cb);
    let pa: Vec<Poly> = ac.iter().map(|x| x.div_exact(&ca).expect("content divides")).collect();
    let pb: Vec<Poly> = bc.iter().map(|x| x.div_exact(&cb).expect("content divides")).collect();
    let g = prs(pa, pb);
    Poly::from_coeffs_in(v, &g).mul(&c).primitive().1
}

fn content(cs: &[Poly]) -> Poly {
    let mut g = Poly::zero();
    for c in cs {
        if c.is_zero() {
            continue;
        }
        g = gcd(&g, c);
        if g.is_constant() {
            return Poly::one();
        }
    }
    if g.is_zero() {
        Poly::one()
    } else {
        g
    }
}

fn trim(v: &mut Vec<Poly>) {
    while v.len() > 1 && v.last().unwrap().is_zero() {
        v.pop();
    }
}

fn primitive_vec(v: Vec<Poly>) -> Vec<Poly> {
    let c = content(&v);
    if c.is_one() {
        return v;
    }
    v.iter().map(|x| x.div_exact(&c).expect("content divides")).collect()
}

/// Primitive polynomial remainder sequence in the main variable.
fn prs(mut f: Vec<Poly>, mut g: Vec<Poly>) -> Vec<Poly> {
    trim(&mut f);
    trim(&mut g);
    if f.len() < g.len() {
        std::mem::swap(&mut f, &mut g);
    }
    loop {
        let r = prem(&f, &g);
        if r.iter().all(|x| x.is_zero()) {
            return primitive_vec(g);
        }
        if r.len() == 1 {
            return vec![Poly::one()];
        }
        f = g;
        g = primitive_vec(r);
    }
}

fn prem(f: &[Poly], g: &[Poly]) -> Vec<Poly> {
    let dg = g.len() - 1;
    let lc = &g[dg];
    let mut r: Vec<Poly> = f.to_vec();
    trim(&mut r);
    while r.len() > dg && !(r.len() == 1 && r[0].is_zero()) {
        let dr = r.len() - 1;
        let lr = r[dr].clone();
        let shift = dr - dg;
        for x in r.iter_mut() {
            *x = x.mul(lc);
        }
        for (k, gk) in g.iter().enumerate() {
            r[k + shift] = r[k + shift].sub(&lr.mul(gk));
        }
        debug_assert!(r[dr].is_zero());
        r.pop();
        trim(&mut r);
        if r.is_empty() {
            r.push(Poly::zero());
        }
    }
    r
}

fn to_dense(p: &Poly, v: Var) -> Vec<Rat> {
    let mut out = vec![Rat::zero(); p.degree_in(v) as usize + 1];
    for (m, c) in &p.terms {
        out[m.exp(v) as usize] = c.clone();
    }
    out
}

fn from_dense(d: &[Rat], v: Var) -> Poly {
    let mut p = Poly::zero();
    for (e, c) in d.iter().enumerate() {
        if !c.is_zero() {
            p.terms.insert(Mono::var(v, e as u32), c.clone());
        }
    }
    p
}

fn dense_rem(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let inv = b[db].recip();
    while r.len() > db {
        let top = r.last().unwrap().clone();
        if !top.is_zero() {
            let f = &top * &inv;
            let shift = r.len() - 1 - db;
            for (k, bk) in b.iter().enumerate() {
                r[k + shift] -= &f * bk;
            }
        }
        r.pop();
    }
    while r.last().is_some_and(|c| c.is_zero()) {
        r.pop();
    }
    r
}

const P: u64 = (1 << 61) - 1;

fn mulm(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % P as u128) as u64
}

fn powm(mut a: u64, mut e: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mulm(r, a);
        }
        a = mulm(a, a);
        e >>= 1;
    }
    r
}

fn invm(a: u64) -> u64 {
    powm(a, P - 2)
}

/// `r mod P`, or `None` when the denominator vanishes there.
fn rat_mod(r: &Rat) -> Option<u64> {
    let p = num_bigint::BigInt::from(P);
    let res = |x: &num_bigint::BigInt| -> u64 { x.mod_floor(&p).try_into().expect("reduced below P") };
    let d = res(r.denom());
    (d != 0).then(|| mulm(res(r.numer()), invm(d)))
}

/// Dense coefficients in `v` mod `P` after fixing every other variable at a fixed residue.
fn specialize_except(p: &Poly, v: Var) -> Option<Vec<u64>> {
    let mut out = vec![0u64; p.degree_in(v) as usize + 1];
    for (m, c) in &p.terms {
        let mut x = rat_mod(c)?;
        for &(w, e) in m.0.iter().filter(|(w, _)| *w != v) {
            let at = 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(w.0 as u64 + 1) % P;
            x = mulm(x, powm(at, e as u64));
        }
        let slot = &mut out[m.exp(v) as usize];
        *slot = (*slot + x) % P;
    }
    Some(out)
}

/// Cheap sufficient test for `gcd(a, b) = 1`.
///
/// Specializing all variables but `v` and reducing mod a prime keeps the degree in `v` of
/// the true gcd as long as the leading coefficients in `v` survive, so a constant image
/// for every variable proves coprimality. Anything else is inconclusive.
fn coprime_by_specialization(a: &Poly, b: &Poly, vars: &[Var]) -> bool {
    vars.iter().all(|&v| {
        let (Some(x), Some(y)) = (specialize_except(a, v), specialize_except(b, v)) else {
            return false;
        };
        if x.last() == Some(&0) || y.last() == Some(&0) {
            return false;
        }
        x.len() == 1 || y.len() == 1 || gcd_degree_mod(x, y) == 0
    })
}

fn rem_mod(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let inv = invm(b[db]);
    while r.len() > db {
        let top = *r.last().unwrap();
        if top != 0 {
            let f = mulm(top, inv);
            let shift = r.len() - 1 - db;
            for (k, &bk) in b.iter().enumerate() {
                r[k + shift] = (r[k + shift] + P - mulm(f, bk)) % P;
            }
        }
        r.pop();
    }
    while r.last() == Some(&0) {
        r.pop();
    }
    r
}

fn gcd_degree_mod(mut x: Vec<u64>, mut y: Vec<u64>) -> usize {
    if x.len() < y.len() {
        std::mem::swap(&mut x, &mut y);
    }
    while !y.is_empty() {
        let r = rem_mod(&x, &y);
        x = y;
        y = r;
    }
    x.len() - 1
}

fn univariate_gcd(a: &Poly, b: &Poly, v: Var) -> Poly {
    let mut x = to_dense(a, v);
    let mut y = to_dense(b, v);
    if x.len() < y.len() {
        std::mem::swap(&mut x, &mut y);
    }
    while !y.is_empty() {
        let r = dense_rem(&x, &y);
        x = y;
        // keep coefficients small by making the remainder monic
        y = match r.last() {
            Some(l) => {
                let inv = l.recip();
                r.iter().map(|c| c * &inv).collect()
            }
            None => r,
        };
    }
    from_dense(&x, v).primitive().1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat_int;

    fn p(s: &str) -> Poly {
        Poly::parse(s).unwrap()
    }

    #[test]
    fn grlex_order() {
        let q = Mono::var(Var::Q, 1);
        let t = Mono::var(Var::T, 1);
        let q2 = Mono::var(Var::Q, 2);
        assert!(q < t);
        assert!(t < q2);
        assert!(Mono::one() < q);
    }

    #[test]
    fn parse_print_roundtrip() {
        for s in ["Q^2*T - 3/2*S1 + 1", "-A", "0", "7"] {
            assert_eq!(p(s).to_text(), s);
        }
    }

    #[test]
    fn exact_division() {
        let a = p("Q^2 - 1");
        let b = p("Q - 1");
        assert_eq!(a.div_exact(&b).unwrap(), p("Q + 1"));
        assert!(p("Q^2 + 1").div_exact(&b).is_none());
    }

    #[test]
    fn multivariate_gcd() {
        let f = p("Q*T - S1 + 2");
        let g1 = p("Q^2 + T*S1 - 1");
        let g2 = p("A*Q - T + 3");
        let g = gcd(&f.mul(&g1), &f.mul(&g2));
        assert_eq!(g, f.primitive().1);
        assert!(gcd(&g1, &g2).is_one());
    }

    #[test]
    fn modular_coprimality_is_only_a_shortcut() {
        let vars = [Var::Q, Var::T, Var::s(1)];
        let a = p("Q^4*T^2*S1 - T^2*S1 + 3/7*Q");
        let b = p("Q^2*T*S1 - T^4 + 1");
        assert!(coprime_by_specialization(&a, &b, &vars));
        // a shared factor must never be reported coprime
        let f = p("1 - Q*T*S1");
        assert!(!coprime_by_specialization(&a.mul(&f), &b.mul(&f), &vars));
        assert_eq!(gcd(&a.mul(&f), &b.mul(&f)), f.primitive().1);
    }

    #[test]
    fn univariate_gcd_monic() {
        let a = p("Q^3 - Q");
        let b = p("2*Q^2 - 2");
        assert_eq!(gcd(&a, &b), p("Q^2 - 1"));
    }

    #[test]
    fn eval_and_subst() {
        let f = p("Q^2*T + 1");
        let val = f.eval(&|v| if v == Var::Q { Some(rat_int(2)) } else { Some(rat_int(3)) }).unwrap();
        assert_eq!(val, rat_int(13));
        let g = f.subst(Var::T, &p("Q + 1"));
        assert_eq!(g, p("Q^3 + Q^2 + 1"));
    }
}
