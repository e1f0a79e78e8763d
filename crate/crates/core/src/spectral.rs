//! Eigenfunctions of `D` (and hence of `I(α)`), the shift relation, the
//! product formula, the Weyl group action and the degenerate spectrum.

use crate::check::{Job, Outcome};
use crate::error::{EngineError, Result};
use crate::operators::{build_d, d_eigenvalue, OpMatrix};
use crate::params::Params;
use crate::qhyper::{phi_series, PhiSpec};
use crate::scalar::{qpoch_multi, ParamScalar, Scalar, Var};
use crate::series::{exps_to_zeta, expand_qbinomial, ratio_exps, zeta_to_exps, Exps, RatioSeries};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigenStatus {
    Regular,
    DivergentAtHomogeneous,
    Generalized,
}

#[derive(Clone, Debug)]
pub struct EigenRecord<F> {
    pub j: Exps,
    pub eigenvalue_d: F,
    pub series: RatioSeries<F>,
    pub status: EigenStatus,
}

impl<F: Scalar> EigenRecord<F> {
    /// Fixture text: a header with the index and eigenvalue, then the series.
    pub fn to_fixture(&self) -> String {
        format!("# j {}\n# lambda {}\n# status {:?}\n{}", self.j.text(), self.eigenvalue_d.to_text(), self.status, self.series.to_fixture())
    }
}

/// Back-substitution for `D f = λ_j f`, `f = x^j + (terms dominating j)`.
pub fn solve_with<F: Scalar>(d: &OpMatrix<F>, p: &Params<F>, j: &Exps) -> Result<EigenRecord<F>> {
    let lam = d_eigenvalue(p, j)?;
    let zero = p.zero();
    let mut coeffs: BTreeMap<Exps, F> = BTreeMap::new();
    // acc[i] = Σ_{k already solved} D_{ik} c_k
    let mut acc: BTreeMap<Exps, F> = BTreeMap::new();
    for (k, e) in d.basis.iter().enumerate() {
        if e < j || !e.0.iter().zip(j.0.iter()).all(|(a, b)| a >= b) {
            continue;
        }
        let c = if e == j {
            p.one()
        } else {
            let rhs = match acc.get(e) {
                Some(v) if !v.is_zero() => v.clone(),
                _ => continue,
            };
            let gap = lam.sub(&d.diagonal(k, &zero));
            if gap.is_zero() {
                return Err(EngineError::Degenerate(format!("diagonal of D at x^({}) equals λ at x^({})", e.text(), j.text())));
            }
            rhs.div(&gap)?
        };
        for (r, v) in d.cols[k].terms() {
            if r == e {
                continue;
            }
            let slot = acc.entry(r.clone()).or_insert_with(|| zero.clone());
            *slot = slot.add(&v.mul(&c));
        }
        coeffs.insert(e.clone(), c);
    }
    let mut series = RatioSeries::zero_window(d.n, d.window.clone(), d.cap);
    for (e, c) in coeffs {
        series.try_add_term(e, c)?;
    }
    Ok(EigenRecord { j: j.clone(), eigenvalue_d: lam, series, status: EigenStatus::Regular })
}

/// `solve_eigen(n, s, j, cap)`.
pub fn solve_eigen<F: Scalar>(p: &Params<F>, j: &Exps, cap: i32) -> Result<EigenRecord<F>> {
    let d = build_d(p, cap)?;
    solve_with(&d, p, j)
}

/// `D f − λ f`, which must vanish to the cap.
pub fn residual<F: Scalar>(d: &OpMatrix<F>, rec: &EigenRecord<F>) -> Result<RatioSeries<F>> {
    d.apply(&rec.series)?.sub(&rec.series.scale(&rec.eigenvalue_d))
}

// ---------------------------------------------------------------------------
// closed forms

/// `1 − c·x^e` as a series.
fn one_minus_mono<F: Scalar>(n: usize, e: &Exps, c: &F, cap: i32) -> RatioSeries<F> {
    crate::series::one_minus(n, e, c, cap)
}

/// `∏_{i<j} (1 − ζ_j/ζ_i)`.
pub fn vandermonde<F: Scalar>(p: &Params<F>, cap: i32) -> Result<RatioSeries<F>> {
    let n = p.n();
    let mut acc = RatioSeries::constant(n, cap, p.one());
    for i in 1..=n {
        for j in i + 1..=n {
            acc = acc.mul(&one_minus_mono(n, &ratio_exps(n, i, j), &p.one(), cap))?;
        }
    }
    Ok(acc)
}

/// `₂φ₁(q^{k+1} t^{-1}, q t^{-1} s_i/s_j; q^{k+1} s_i/s_j; q, t ζ_j/ζ_i)`.
pub fn pair_block<F: Scalar>(p: &Params<F>, i: usize, j: usize, k: i64, cap: i32) -> Result<RatioSeries<F>> {
    let sij = p.s[i - 1].div(&p.s[j - 1])?;
    let qk1 = p.qpow(k + 1)?;
    let tinv = p.t.inv()?;
    let spec = PhiSpec::new(vec![qk1.mul(&tinv), p.q.mul(&tinv).mul(&sij)], vec![qk1.mul(&sij)], p.q.clone());
    phi_series(p.n(), &spec, &ratio_exps(p.n(), i, j), &p.t, cap)
}

/// The n = 2 first eigenfunction `(1 − ζ₂/ζ₁) ₂φ₁(q t^{-1}, q t^{-1} s₁/s₂; q s₁/s₂; q, t ζ₂/ζ₁)`.
pub fn first_eigenfunction_n2<F: Scalar>(p: &Params<F>, cap: i32) -> Result<RatioSeries<F>> {
    if p.n() != 2 {
        return Err(EngineError::Precondition("the ₂φ₁ closed form needs n = 2".into()));
    }
    vandermonde(p, cap)?.mul(&pair_block(p, 1, 2, 0, cap)?)
}

/// `φ_k` of the n = 3 expansion, without the `∏(1 − ζ_j/ζ_i)` factor.
pub fn phi_k_n3<F: Scalar>(p: &Params<F>, k: i64, cap: i32) -> Result<RatioSeries<F>> {
    if p.n() != 3 {
        return Err(EngineError::Precondition("φ_k needs n = 3".into()));
    }
    let (q, t) = (&p.q, &p.t);
    let qt = q.div(t)?;
    let s = &p.s;
    let s12 = s[0].div(&s[1])?;
    let s23 = s[1].div(&s[2])?;
    let s13 = s[0].div(&s[2])?;
    let num = qpoch_multi(&[qt.clone(), qt, t.clone(), t.clone()], q, k)?;
    let den = qpoch_multi(&[q.clone(), q.mul(&s12), q.mul(&s23), q.mul(&s13)], q, k)?;
    let coef = num.div(&den)?.mul(&q.mul(&s13).pow_i(k)?);
    let e13 = ratio_exps(3, 1, 3);
    let mut acc = RatioSeries::monomial(3, cap, e13.scale(k as i32), coef);
    for (i, j) in [(1, 2), (1, 3), (2, 3)] {
        if acc.is_empty() {
            break;
        }
        acc = acc.mul(&pair_block(p, i, j, k, cap)?)?;
    }
    Ok(acc)
}

/// The n = 3 double series `∏(1 − ζ_j/ζ_i) Σ_k φ_k`.
pub fn first_eigenfunction_n3<F: Scalar>(p: &Params<F>, cap: i32) -> Result<RatioSeries<F>> {
    let mut sum = RatioSeries::zero(3, cap);
    for k in 0..=(cap / 2) as i64 {
        sum = sum.add(&phi_k_n3(p, k, cap)?)?;
    }
    vandermonde(p, cap)?.mul(&sum)
}

/// `∏_{i<j} (1 − ζ_j/ζ_i) (a ζ_j/ζ_i;q)_∞/(b ζ_j/ζ_i;q)_∞`.
pub fn pair_product<F: Scalar>(p: &Params<F>, a: &F, b: &F, base: &F, cap: i32) -> Result<RatioSeries<F>> {
    let n = p.n();
    let mut acc = vandermonde(p, cap)?;
    for i in 1..=n {
        for j in i + 1..=n {
            acc = acc.mul(&expand_qbinomial(n, a, b, base, &ratio_exps(n, i, j), &p.one(), cap)?)?;
        }
    }
    Ok(acc)
}

/// Solver output against the closed forms (n = 2 and n = 3).
pub struct ClosedFormJob {
    pub cap: i32,
}

impl Job for ClosedFormJob {
    fn run<F: Scalar>(&self, p: &Params<F>) -> Result<Outcome> {
        let want = match p.n() {
            2 => first_eigenfunction_n2(p, self.cap)?,
            3 => first_eigenfunction_n3(p, self.cap)?,
            n => return Err(EngineError::Precondition(format!("no closed form for n = {n}"))),
        };
        let got = solve_eigen(p, &Exps::zero(p.n() - 1), self.cap)?;
        let mut out = Outcome::new();
        out.expect_series("solver vs closed form", &got.series, &want);
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// shift relation

/// `f_j = ζ^{z(j)} · f_0 |_{s_i → q^{-z_i} s_i}` with `z(j)_i = j_{i−1} − j_i`.
pub struct ShiftJob {
    pub j: Exps,
    pub cap: i32,
}

impl Job for ShiftJob {
    fn run<F: Scalar>(&self, p: &Params<F>) -> Result<Outcome> {
        let n = p.n();
        let window: Vec<i32> = self.j.0.iter().map(|&x| x.min(0)).collect();
        let d = crate::operators::build_dr_window(p, 1, window.clone(), self.cap)?;
        let fj = solve_with(&d, p, &self.j)?;
        let z = exps_to_zeta(&self.j);
        let shifted: Vec<F> = p.s.iter().zip(z.iter()).map(|(s, &zi)| Ok(s.mul(&p.qpow(-(zi as i64))?))).collect::<Result<_>>()?;
        let p0 = p.with_s(shifted);
        let f0 = solve_eigen(&p0, &Exps::zero(n - 1), self.cap - self.j.degree())?;
        let rhs = f0.series.shift(&self.j, Some(window))?.truncate(self.cap);
        let mut out = Outcome::new();
        out.expect_series(&format!("f_({}) vs shifted f_0", self.j.text()), &fj.series, &rhs);
        out.expect(fj.eigenvalue_d.sub(&f0.eigenvalue_d).is_zero(), || "eigenvalues of the two sides differ".into());
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// product formula

/// Principal specialization `s = (1, t, …, t^{n−1})`: (a) the solver output
/// equals the pair product, (b) `D` maps the pair product to `[n]_t` times itself.
pub struct ProductJob {
    pub cap: i32,
    pub route_a: bool,
    pub route_b: bool,
}

impl Job for ProductJob {
    fn run<F: Scalar>(&self, p: &Params<F>) -> Result<Outcome> {
        let n = p.n();
        let p = p.principal(n);
        let qt = p.q.div(&p.t)?;
        let prod = pair_product(&p, &qt, &p.t, &p.q, self.cap)?;
        let mut out = Outcome::new();
        if self.route_a {
            let f = solve_eigen(&p, &Exps::zero(n - 1), self.cap)?;
            out.expect_series("solver at s=(1,t,…) vs product", &f.series, &prod);
        }
        if self.route_b {
            let d = build_d(&p, self.cap)?;
            let lhs = d.apply(&prod)?;
            let nt = crate::scalar::qint(&p.t, n as u32);
            out.expect_series("D·product vs [n]_t·product", &lhs, &prod.scale(&nt));
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Weyl group action

/// A Laurent polynomial in `ζ_1..ζ_n`, keyed by full exponent vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct ZetaPoly<F> {
    pub n: usize,
    pub terms: BTreeMap<Vec<i32>, F>,
}

impl<F: Scalar> ZetaPoly<F> {
    pub fn zero(n: usize) -> Self {
        ZetaPoly { n, terms: BTreeMap::new() }
    }
    /// `∏ ζ_k^{shift_k} · f` for a ratio series `f`.
    pub fn from_series(f: &RatioSeries<F>, shift: &[i32]) -> Self {
        let mut terms = BTreeMap::new();
        for (e, c) in f.terms() {
            let z: Vec<i32> = exps_to_zeta(e).iter().zip(shift).map(|(a, b)| a + b).collect();
            terms.insert(z, c.clone());
        }
        ZetaPoly { n: f.n(), terms }
    }
    pub fn add_term(&mut self, e: Vec<i32>, c: F) {
        let v = match self.terms.get(&e) {
            Some(x) => x.add(&c),
            None => c,
        };
        if v.is_zero() {
            self.terms.remove(&e);
        } else {
            self.terms.insert(e, v);
        }
    }
    /// Swap `ζ_i` and `ζ_{i+1}` (1-based).
    pub fn swap(&self, i: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mut e = e.clone();
                e.swap(i - 1, i);
                (e, c.clone())
            })
            .collect();
        ZetaPoly { n: self.n, terms }
    }
    pub fn scale(&self, c: &F) -> Self {
        let mut out = Self::zero(self.n);
        for (e, v) in &self.terms {
            out.add_term(e.clone(), v.mul(c));
        }
        out
    }
    pub fn neg(&self) -> Self {
        ZetaPoly { n: self.n, terms: self.terms.iter().map(|(e, c)| (e.clone(), c.neg())).collect() }
    }
    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero(self.n);
        for (a, x) in &self.terms {
            for (b, y) in &o.terms {
                out.add_term(a.iter().zip(b).map(|(u, v)| u + v).collect(), x.mul(y));
            }
        }
        out
    }
    pub fn is_polynomial(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&x| x >= 0))
    }
}

/// A word `σ_{i_1} ⋯ σ_{i_k}` acting through `π_m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeylElement {
    pub word: Vec<usize>,
    pub m: u32,
}

/// `∏_{k=1}^{m−1} (s_i − q^k s_{i+1})/(s_{i+1} − q^k s_i)`.
pub fn weyl_prefactor<F: Scalar>(q: &F, s: &[F], i: usize, m: u32) -> Result<F> {
    let (a, b) = (&s[i - 1], &s[i]);
    let mut acc = q.one_like();
    let mut qk = q.one_like();
    for _ in 1..m {
        qk = qk.mul(q);
        let den = b.sub(&qk.mul(a));
        if den.is_zero() {
            return Err(EngineError::Scalar(crate::scalar::ScalarError::Pole(format!("Weyl prefactor of σ_{i} vanishes in the denominator"))));
        }
        acc = acc.mul(&a.sub(&qk.mul(b))).div(&den)?;
    }
    Ok(acc)
}

/// `π_m(w)` on a polynomial with symbolic coefficients in `Q` and `S_1..S_n`.
/// The rightmost letter acts first.
pub fn weyl_action(w: &WeylElement, f: &ZetaPoly<ParamScalar>) -> Result<ZetaPoly<ParamScalar>> {
    let n = f.n;
    let q = ParamScalar::var(Var::Q).mul(&ParamScalar::var(Var::Q));
    let s: Vec<ParamScalar> = (1..=n).map(|i| ParamScalar::var(Var::s(i))).collect();
    let mut cur = f.clone();
    for &i in w.word.iter().rev() {
        if i == 0 || i >= n {
            return Err(EngineError::Precondition(format!("σ_{i} is not a generator of W(A_{})", n - 1)));
        }
        let (a, b) = (Var::s(i), Var::s(i + 1));
        let swap = |v: Var| if v == a { b } else if v == b { a } else { v };
        let pref = weyl_prefactor(&q, &s, i, w.m)?;
        let mut next = ZetaPoly::zero(n);
        for (e, c) in cur.swap(i).terms {
            next.add_term(e, c.map_vars(&swap).mul(&pref));
        }
        cur = next;
    }
    Ok(cur)
}

/// A polynomial family `s ↦ P(ζ; s)`, known exactly only on some monomials.
trait Family<F> {
    fn at(&self, s: &[F]) -> Result<ZetaPoly<F>>;
    /// Whether the coefficient of `ζ^e` is determined by the truncation.
    fn known(&self, e: &[i32]) -> bool;
}

/// `π_m(σ_i) P` evaluated at `s`, by re-evaluating the family at swapped `s`.
fn pi_generator<F: Scalar, Fam: Family<F>>(q: &F, s: &[F], i: usize, m: u32, fam: &Fam) -> Result<ZetaPoly<F>> {
    let mut s2 = s.to_vec();
    s2.swap(i - 1, i);
    let inner = fam.at(&s2)?;
    Ok(inner.swap(i).scale(&weyl_prefactor(q, s, i, m)?))
}

/// Compare `π_m(σ_i) P` with `sign · P` on every monomial known on both sides.
fn expect_weyl<F: Scalar, Fam: Family<F>>(out: &mut Outcome, label: &str, q: &F, s: &[F], m: u32, sign: i64, fam: &Fam) -> Result<usize> {
    let base = fam.at(s)?;
    let n = base.n;
    let mut compared = 0;
    for i in 1..n {
        let lhs = pi_generator(q, s, i, m, fam)?;
        let rhs = if sign < 0 { base.neg() } else { base.clone() };
        let mut keys: Vec<&Vec<i32>> = lhs.terms.keys().chain(rhs.terms.keys()).collect();
        keys.sort();
        keys.dedup();
        for e in keys {
            let mut sw = e.clone();
            sw.swap(i - 1, i);
            if !fam.known(e) || !fam.known(&sw) {
                continue;
            }
            compared += 1;
            let zero = q.zero_like();
            let a = lhs.terms.get(e).cloned().unwrap_or_else(|| zero.clone());
            let b = rhs.terms.get(e).cloned().unwrap_or(zero);
            out.expect(a.sub(&b).is_zero(), || {
                format!("{label}: π_{m}(σ_{i}) at ζ^{e:?}: got {} want {}", a.to_text(), b.to_text())
            });
        }
    }
    Ok(compared)
}

/// Series-backed family: `∏ ζ^{shift} · f(s)` with `f` computed to `cap`.
struct SeriesFamily<'a, F> {
    shift: Vec<i32>,
    cap: i32,
    make: Box<dyn Fn(&[F]) -> Result<RatioSeries<F>> + 'a>,
}

impl<F: Scalar> Family<F> for SeriesFamily<'_, F> {
    fn at(&self, s: &[F]) -> Result<ZetaPoly<F>> {
        Ok(ZetaPoly::from_series(&(self.make)(s)?, &self.shift))
    }
    fn known(&self, e: &[i32]) -> bool {
        let z: Vec<i32> = e.iter().zip(&self.shift).map(|(a, b)| a - b).collect();
        match zeta_to_exps(&z) {
            // outside the positive cone the coefficient is zero by construction
            Ok(x) => x.0.iter().any(|&v| v < 0) || x.degree() <= self.cap,
            Err(_) => true,
        }
    }
}

/// Every term of `P` lies in the box `0 ≤ e_k ≤ hi`.
fn expect_box<F: Scalar>(out: &mut Outcome, label: &str, p: &ZetaPoly<F>, hi: i32) {
    for (e, c) in &p.terms {
        out.expect(e.iter().all(|&x| (0..=hi).contains(&x)), || format!("{label}: term ζ^{e:?} (coefficient {}) outside the box [0,{hi}]", c.to_text()));
    }
}

/// The n = 4 four-term combination of pair blocks, as a fixture.
/// `phi(k)` takes `(k12, k23, k34, k13, k24, k14)` and includes `∏(1 − ζ_j/ζ_i)`.
pub fn four_term_n4<F: Scalar>(p: &Params<F>, cap: i32) -> Result<RatioSeries<F>> {
    if p.n() != 4 {
        return Err(EngineError::Precondition("the four-term combination needs n = 4".into()));
    }
    let (q, t) = (&p.q, &p.t);
    let qt = q.div(t)?;
    let s = |i: usize| &p.s[i - 1];
    let qs = |i: usize, j: usize| -> Result<F> { Ok(q.mul(&s(i).div(s(j))?)) };
    let pairs = [(1, 2), (2, 3), (3, 4), (1, 3), (2, 4), (1, 4)];
    let phi = |k: [i64; 6]| -> Result<RatioSeries<F>> {
        let mut acc = vandermonde(p, cap)?;
        for (idx, &(i, j)) in pairs.iter().enumerate() {
            acc = acc.mul(&pair_block(p, i, j, k[idx], cap)?)?;
        }
        Ok(acc)
    };
    let common = qt.one_minus().mul(&qt.one_minus()).mul(&t.one_minus()).mul(&t.one_minus()).div(&q.one_minus())?;
    // (ζ_b/ζ_a)(q s_a/s_b) · common / ((q s_{ij})_1 ⋯) · φ(k)
    let terms: [((usize, usize), [(usize, usize); 3], [i64; 6]); 4] = [
        ((1, 3), [(1, 2), (2, 3), (1, 3)], [1, 1, 0, 1, 0, 0]),
        ((2, 4), [(2, 3), (3, 4), (2, 4)], [0, 1, 1, 0, 1, 0]),
        ((1, 4), [(1, 2), (2, 4), (1, 4)], [1, 0, 0, 0, 1, 1]),
        ((1, 4), [(1, 3), (3, 4), (1, 4)], [0, 0, 1, 1, 0, 1]),
    ];
    let mut sum = RatioSeries::zero(4, cap);
    for ((a, b), dens, k) in terms {
        let mut c = common.mul(&qs(a, b)?);
        for (i, j) in dens {
            c = c.div(&qs(i, j)?.one_minus())?;
        }
        let mono = RatioSeries::monomial(4, cap, ratio_exps(4, a, b), c);
        sum = sum.add(&mono.mul(&phi(k)?)?)?;
    }
    Ok(sum)
}

/// Termination and antisymmetry at `t = q^m`, plus the symmetric building blocks.
pub struct WeylJob {
    pub m: u32,
    pub cap: i32,
}

impl Job for WeylJob {
    fn run<F: Scalar>(&self, p: &Params<F>) -> Result<Outcome> {
        let n = p.n();
        let m = self.m as i32;
        let cap = self.cap;
        let p = p.at_t_qm(m as i64)?;
        let mut out = Outcome::new();
        let shift: Vec<i32> = (1..=n as i32).map(|k| (n as i32 - k) * m).collect();
        let zero = Exps::zero(n - 1);
        let pp = &p;
        let fam = SeriesFamily { shift: shift.clone(), cap, make: Box::new(move |s: &[F]| Ok(solve_eigen(&pp.with_s(s.to_vec()), &zero, cap)?.series)) };
        let base = fam.at(&p.s)?;
        expect_box(&mut out, "f_0 termination", &base, (n as i32 - 1) * m);
        let k = expect_weyl(&mut out, "f_0 antisymmetry", &p.q, &p.s, self.m, -1, &fam)?;
        out.note(format!("f_0: {k} monomial comparisons under the generators"));
        match n {
            2 => {
                let blk = SeriesFamily { shift: vec![m - 1, 0], cap, make: Box::new(move |s: &[F]| pair_block(&pp.with_s(s.to_vec()), 1, 2, 0, cap)) };
                expect_box(&mut out, "₂φ₁ block termination", &blk.at(&p.s)?, m - 1);
                expect_weyl(&mut out, "₂φ₁ block symmetry", &p.q, &p.s, self.m, 1, &blk)?;
            }
            3 => {
                for kk in 0..m as i64 {
                    let blk = SeriesFamily {
                        shift: vec![2 * m - 2, m - 1, 0],
                        cap,
                        make: Box::new(move |s: &[F]| phi_k_n3(&pp.with_s(s.to_vec()), kk, cap)),
                    };
                    expect_box(&mut out, &format!("φ_{kk} termination"), &blk.at(&p.s)?, 2 * m - 2);
                    expect_weyl(&mut out, &format!("φ_{kk} symmetry"), &p.q, &p.s, self.m, 1, &blk)?;
                }
            }
            4 => {
                let comb = SeriesFamily { shift: vec![3 * m, 2 * m, m, 0], cap, make: Box::new(move |s: &[F]| four_term_n4(&pp.with_s(s.to_vec()), cap)) };
                let c = comb.at(&p.s)?;
                if c.terms.is_empty() {
                    out.note("four-term combination vanishes identically at this m");
                }
                expect_box(&mut out, "four-term termination", &c, 3 * m);
                expect_weyl(&mut out, "four-term antisymmetry", &p.q, &p.s, self.m, -1, &comb)?;
            }
            _ => {}
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// degenerate spectrum

/// Rank of a dense matrix by fraction-free-free Gaussian elimination.
pub fn rank<F: Scalar>(mut rows: Vec<Vec<F>>) -> Result<usize> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..ncols {
        let Some(piv) = (r..nrows).find(|&k| !rows[k][c].is_zero()) else { continue };
        rows.swap(r, piv);
        let inv = rows[r][c].inv()?;
        for k in r + 1..nrows {
            if rows[k][c].is_zero() {
                continue;
            }
            let f = rows[k][c].mul(&inv);
            for cc in c..ncols {
                let v = rows[k][cc].sub(&f.mul(&rows[r][cc]));
                rows[k][cc] = v;
            }
        }
        r += 1;
        if r == nrows {
            break;
        }
    }
    Ok(r)
}

fn dense<F: Scalar>(m: &OpMatrix<F>, zero: &F) -> Vec<Vec<F>> {
    let d = m.dim();
    let mut rows = vec![vec![zero.clone(); d]; d];
    for (c, col) in m.cols.iter().enumerate() {
        for (e, v) in col.terms() {
            if let Some(r) = m.position(e) {
                rows[r][c] = v.clone();
            }
        }
    }
    rows
}

fn dense_mul<F: Scalar>(a: &[Vec<F>], b: &[Vec<F>], zero: &F) -> Vec<Vec<F>> {
    let d = a.len();
    let mut out = vec![vec![zero.clone(); d]; d];
    for i in 0..d {
        for k in 0..d {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..d {
                if !b[k][j].is_zero() {
                    out[i][j] = out[i][j].add(&a[i][k].mul(&b[k][j]));
                }
            }
        }
    }
    out
}

/// The ε-coordinates `c_i = −z_i` of a root-lattice element: `α = Σ c_i ε_i`.
fn zeta_of(j: &Exps) -> Vec<i32> {
    exps_to_zeta(j)
}

/// `α ∈ C(Δ)`: `(α, α_i) ≥ 0` for every simple root, i.e. `z` is nondecreasing.
pub fn in_chamber(j: &Exps) -> bool {
    zeta_of(j).windows(2).all(|w| w[0] <= w[1])
}

/// `{σ(α) ∈ Q₊ : σ ∈ W(A_{n−1})}` by enumerating permutations of the ε-coordinates.
pub fn weyl_orbit_positive(j: &Exps) -> Vec<Exps> {
    fn perms(v: &mut Vec<i32>, k: usize, out: &mut Vec<Vec<i32>>) {
        if k == v.len() {
            out.push(v.clone());
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            perms(v, k + 1, out);
            v.swap(k, i);
        }
    }
    let mut all = Vec::new();
    perms(&mut zeta_of(j), 0, &mut all);
    let mut out: Vec<Exps> = all
        .into_iter()
        .filter_map(|z| {
            let mut acc = 0;
            let mut e = Vec::with_capacity(z.len() - 1);
            for zi in &z[..z.len() - 1] {
                acc -= zi;
                if acc < 0 {
                    return None;
                }
                e.push(acc);
            }
            Some(Exps::from_slice(&e))
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Per-eigenvalue data of the truncated `D` at `s = (1, …, 1)`.
#[derive(Clone, Debug, Serialize)]
pub struct JordanBlock {
    /// chamber representative
    pub alpha: String,
    pub eigenvalue: String,
    /// indices sharing the eigenvalue in the truncated basis
    pub indices: Vec<String>,
    pub orbit: Vec<String>,
    pub generalized_dim: usize,
    pub geometric_dim: usize,
    /// Jordan block sizes, largest first
    pub jordan: Vec<usize>,
}

/// Generalized eigenspaces of `D` at the homogeneous point against the Weyl orbits.
pub fn jordan_structure<F: Scalar>(p: &Params<F>, cap: i32) -> Result<(Vec<JordanBlock>, Outcome)> {
    let n = p.n();
    let p = p.homogeneous(n);
    let d = build_d(&p, cap)?;
    let zero = p.zero();
    let mat = dense(&d, &zero);
    let dim = d.dim();
    let mut out = Outcome::new();
    let mut blocks = Vec::new();
    for j in d.basis.iter().filter(|j| in_chamber(j)) {
        let lam = d_eigenvalue(&p, j)?;
        let indices: Vec<Exps> = d.basis.iter().enumerate().filter(|(k, _)| d.diagonal(*k, &zero).sub(&lam).is_zero()).map(|(_, e)| e.clone()).collect();
        let orbit = weyl_orbit_positive(j);
        // nullities of (D − λ)^k
        let mut shifted = mat.clone();
        for (k, row) in shifted.iter_mut().enumerate() {
            row[k] = row[k].sub(&lam);
        }
        let mut power = shifted.clone();
        let mut null = vec![0usize];
        loop {
            let nk = dim - rank(power.clone())?;
            if nk == *null.last().unwrap() {
                break;
            }
            null.push(nk);
            power = dense_mul(&power, &shifted, &zero);
        }
        let gen_dim = *null.last().unwrap();
        let geo = null.get(1).copied().unwrap_or(0);
        // number of blocks of size >= k is null_k − null_{k−1}
        let ge: Vec<usize> = null.windows(2).map(|w| w[1] - w[0]).collect();
        let mut jordan = Vec::new();
        for k in 0..ge.len() {
            let next = ge.get(k + 1).copied().unwrap_or(0);
            for _ in 0..ge[k] - next {
                jordan.push(k + 1);
            }
        }
        jordan.sort_by(|a, b| b.cmp(a));
        out.expect(gen_dim == orbit.len(), || {
            format!("α=({}): generalized eigenspace has dimension {gen_dim}, the positive Weyl orbit has {} elements", j.text(), orbit.len())
        });
        out.expect(indices == orbit, || format!("α=({}): eigenvalue shared by {:?}, orbit {:?}", j.text(), indices, orbit));
        blocks.push(JordanBlock {
            alpha: j.text(),
            eigenvalue: lam.to_text(),
            indices: indices.iter().map(|e| e.text()).collect(),
            orbit: orbit.iter().map(|e| e.text()).collect(),
            generalized_dim: gen_dim,
            geometric_dim: geo,
            jordan,
        });
    }
    Ok((blocks, out))
}

/// One-parameter deformation of the parameters used for ε-expansions:
/// `Q`, `T` and the non-pivot `s` are fixed rationals, the pivot is formal.
fn deformation(raw: &crate::params::RawPoint, s: Vec<ParamScalar>) -> Params<ParamScalar> {
    let c = |r: &crate::scalar::Rat| ParamScalar::constant(r.clone());
    Params::new(c(&raw.qh), c(&raw.th), s, c(&raw.alpha))
}

/// Expand every coefficient of `f` at `ε = 0` (pivot `= 1 − ε`) through `ε^order`;
/// returns the ε-components from `ε^{lo}` on.
fn eps_components(f: &RatioSeries<ParamScalar>, pivot: Var, lo: i32, order: i32) -> Result<Vec<RatioSeries<crate::scalar::Rat>>> {
    let mut comps: Vec<RatioSeries<crate::scalar::Rat>> = (lo..=order).map(|_| RatioSeries::zero_window(f.n(), f.window().to_vec(), f.cap())).collect();
    for (e, c) in f.terms() {
        let l = crate::scalar::eps_expand(c, pivot, order)?;
        if l.val() < lo && !l.is_zero() {
            return Err(EngineError::Precondition(format!("coefficient of x^({}) has a pole of order {} in ε, beyond {}", e.text(), -l.val(), -lo)));
        }
        for k in lo..=order {
            let v = l.coeff(k);
            let r = v.constant_value().ok_or_else(|| EngineError::Other(format!("ε-coefficient {} is not a number", v.to_text())))?;
            comps[(k - lo) as usize].try_add_term(e.clone(), r)?;
        }
    }
    Ok(comps)
}

fn eps_scalar(f: &ParamScalar, pivot: Var, k: i32) -> Result<crate::scalar::Rat> {
    let l = crate::scalar::eps_expand(f, pivot, k.max(0))?;
    l.coeff(k).constant_value().ok_or_else(|| EngineError::Other("non-numeric ε coefficient".into()))
}

/// Result of the Jordan-chain construction for one colliding pair.
#[derive(Clone, Debug)]
pub struct GeneralizedPair {
    /// regular eigenfunction `g_{[0]}` at the collision
    pub regular: EigenRecord<crate::scalar::Rat>,
    /// generalized eigenfunction `f_{[0]} − c g_{[1]}`
    pub generalized: EigenRecord<crate::scalar::Rat>,
    pub c: crate::scalar::Rat,
    /// `(λ_{[1]} − μ_{[1]}) c`, the off-diagonal entry of the Jordan block
    pub nu: crate::scalar::Rat,
    /// ε-components `f_{[-1]}, f_{[0]}, f_{[1]}` of the divergent eigenfunction
    pub f_parts: Vec<RatioSeries<crate::scalar::Rat>>,
}

/// Jordan chain at `s_b → s_a` (both 1 at the collision): `f = f_{jf}` diverges like `1/ε`,
/// `g = f_{jg}` stays regular, and `X_{[0]}(f_{[0]} − c g_{[1]}) = λ_{[0]}(…) + (λ_{[1]} − μ_{[1]}) c g_{[0]}`.
pub fn generalized_eigen(n: usize, pair: (usize, usize), jf: &Exps, jg: &Exps, window: Vec<i32>, cap: i32, seed: u64) -> Result<(GeneralizedPair, Outcome)> {
    let (a, b) = pair;
    let raw = crate::params::RawPoint::draw(n, seed);
    let pivot = Var::s(b);
    let s: Vec<ParamScalar> = (1..=n)
        .map(|i| if i == a { ParamScalar::one() } else if i == b { ParamScalar::var(pivot) } else { ParamScalar::constant(raw.s[i - 1].clone()) })
        .collect();
    let p = deformation(&raw, s);
    let d = crate::operators::build_dr_window(&p, 1, window.clone(), cap)?;
    let f = solve_with(&d, &p, jf)?;
    let g = solve_with(&d, &p, jg)?;
    let fp = eps_components(&f.series, pivot, -1, 1)?;
    let gp = eps_components(&g.series, pivot, 0, 1)?;
    let lam0 = eps_scalar(&f.eigenvalue_d, pivot, 0)?;
    let lam1 = eps_scalar(&f.eigenvalue_d, pivot, 1)?;
    let mu0 = eps_scalar(&g.eigenvalue_d, pivot, 0)?;
    let mu1 = eps_scalar(&g.eigenvalue_d, pivot, 1)?;
    let mut out = Outcome::new();
    out.expect(lam0 == mu0, || format!("λ_[0] = {} differs from μ_[0] = {}", lam0.to_text(), mu0.to_text()));
    // f_{[-1]} = c g_{[0]}
    let c = fp[0].coeff_or_zero(jg, &crate::scalar::rat_int(0));
    out.expect(!c.is_zero(), || format!("f_({}) has no 1/ε part at x^({})", jf.text(), jg.text()));
    out.expect_series("f_[-1] proportional to g_[0]", &fp[0], &gp[0].scale(&c));
    // X_{[0]}: D at the collision point
    let s0: Vec<crate::scalar::Rat> = (1..=n).map(|i| if i == a || i == b { crate::scalar::rat_int(1) } else { raw.s[i - 1].clone() }).collect();
    let p0 = Params::new(raw.qh.clone(), raw.th.clone(), s0, raw.alpha.clone());
    let x0 = crate::operators::build_dr_window(&p0, 1, window, cap)?;
    let h = fp[1].sub(&gp[1].scale(&c))?;
    let nu = lam1.clone().sub(&mu1).mul(&c);
    let lhs = x0.apply(&h)?;
    let rhs = h.scale(&lam0).add(&gp[0].scale(&nu))?;
    out.expect_series("X_[0](f_[0] − c g_[1]) Jordan relation", &lhs, &rhs);
    out.expect_series("X_[0] g_[0] = μ_[0] g_[0]", &x0.apply(&gp[0])?, &gp[0].scale(&mu0));
    let regular = EigenRecord { j: jg.clone(), eigenvalue_d: mu0.clone(), series: gp[0].clone(), status: EigenStatus::Regular };
    let generalized = EigenRecord { j: jf.clone(), eigenvalue_d: lam0, series: h, status: EigenStatus::Generalized };
    Ok((GeneralizedPair { regular, generalized, c, nu, f_parts: fp }, out))
}

/// The two ε-expansion formulas for `₂φ₁(q t^{-1}, q^{1±2i} t^{-1} s; q^{1±2i} s; q, t ζ)` at `s = 1 − ε`,
/// checked against the eigenfunctions `f_{∓i}` of `D` on the Laurent-windowed space.
/// `power_q` swaps the argument of the regular tail to `(qζ)^n` as printed in one source; kept to
/// document that only `(tζ)^n` matches.
pub fn lemma_expansions(i: i32, cap: i32, seed: u64, power_q: bool) -> Result<Outcome> {
    use crate::scalar::{qpoch, rat_int, Rat};
    let raw = crate::params::RawPoint::draw(2, seed);
    let pr = Params::new(raw.qh.clone(), raw.th.clone(), vec![rat_int(1), rat_int(1)], raw.alpha.clone());
    let (q, t) = (pr.q.clone(), pr.t.clone());
    let qt = q.div(&t)?;
    let x = Exps::from_slice(&[1]);
    let mut out = Outcome::new();
    let w = vec![-i.abs().max(0)];
    let one_minus_x = |cap: i32| RatioSeries::<Rat>::zero_window(2, w.clone(), cap).add(&crate::series::one_minus(2, &x, &rat_int(1), cap).with_window(w.clone())?);
    // a Laurent eigenfunction family at s1 = 1 − ε, s2 = 1
    let sp = vec![ParamScalar::var(Var::s(1)), ParamScalar::one()];
    let p = deformation(&raw, sp);
    let d = crate::operators::build_dr_window(&p, 1, w.clone(), cap)?;
    let term_sum = |cs: &dyn Fn(i32) -> Result<Rat>, lo: i32| -> Result<RatioSeries<Rat>> {
        let mut acc = RatioSeries::zero_window(2, w.clone(), cap);
        for k in lo..=cap + i.abs() {
            acc.try_add_term(Exps::from_slice(&[k]), cs(k)?)?;
        }
        Ok(acc)
    };
    // first expansion: index +i, regular in ε
    {
        let b = q.pow_i(1 + 2 * i as i64)?;
        let base = |k: i32| -> Result<Rat> {
            Ok(qpoch(&qt, &q, k as i64)?.mul(&qpoch(&b.mul(&t.inv()?), &q, k as i64)?).div(&qpoch(&q, &q, k as i64)?.mul(&qpoch(&b, &q, k as i64)?))?.mul(&t.pow_i(k as i64)?))
        };
        let a0 = term_sum(&|k| base(k), 0)?;
        let a1 = term_sum(
            &|k| {
                let mut br = rat_int(0);
                for kk in 1..=k as i64 {
                    let u = q.pow_i(-2 * i as i64 - kk)?;
                    br = br.add(&u.one_minus().inv()?).sub(&u.mul(&t).one_minus().inv()?);
                }
                Ok(base(k)?.mul(&br))
            },
            0,
        )?;
        let shift = Exps::from_slice(&[i]);
        let want0 = one_minus_x(cap)?.mul(&a0)?.shift(&shift, Some(w.clone()))?.truncate(cap);
        let want1 = one_minus_x(cap)?.mul(&a1)?.shift(&shift, Some(w.clone()))?.truncate(cap);
        let f = solve_with(&d, &p, &shift)?;
        let parts = eps_components(&f.series, Var::s(1), 0, 1)?;
        out.expect_series(&format!("i={i}: order ε^0"), &parts[0], &want0);
        out.expect_series(&format!("i={i}: order ε^1"), &parts[1], &want1);
    }
    // second expansion: index −i, simple pole
    if i >= 1 {
        let ii = i as i64;
        let b = q.pow_i(1 - 2 * ii)?;
        let tinv = t.inv()?;
        let lead = qpoch(&qt, &q, 2 * ii)?.mul(&qpoch(&b.mul(&tinv), &q, 2 * ii)?).div(&qpoch(&q, &q, 2 * ii)?.mul(&qpoch(&b, &q, 2 * ii - 1)?))?;
        let b_up = q.pow_i(1 + 2 * ii)?;
        let pole = term_sum(
            &|k| {
                if k < 2 * i {
                    return Ok(rat_int(0));
                }
                let m = (k - 2 * i) as i64;
                let c = qpoch(&qt, &q, m)?.mul(&qpoch(&b_up.mul(&tinv), &q, m)?).div(&qpoch(&q, &q, m)?.mul(&qpoch(&b_up, &q, m)?))?;
                Ok(lead.mul(&c).mul(&t.pow_i(k as i64)?))
            },
            0,
        )?;
        let arg = if power_q { q.clone() } else { t.clone() };
        let finite = term_sum(
            &|k| {
                let kk = k as i64;
                let num = qpoch(&qt, &q, kk)?.mul(&qpoch(&b.mul(&tinv), &q, kk)?);
                if k < 2 * i {
                    return Ok(num.div(&qpoch(&q, &q, kk)?.mul(&qpoch(&b, &q, kk)?))?.mul(&t.pow_i(kk)?));
                }
                let den = qpoch(&q, &q, kk)?.mul(&qpoch(&b, &q, 2 * ii - 1)?).mul(&qpoch(&q, &q, kk - 2 * ii)?);
                let mut br = rat_int(0);
                for j in 1..=kk {
                    if j != 2 * ii {
                        br = br.add(&q.pow_i(2 * ii - j)?.one_minus().inv()?);
                    }
                    br = br.sub(&q.pow_i(2 * ii - j)?.mul(&t).one_minus().inv()?);
                }
                Ok(num.div(&den)?.mul(&arg.pow_i(kk)?).mul(&br))
            },
            0,
        )?;
        let shift = Exps::from_slice(&[-i]);
        let wantm1 = one_minus_x(cap + i)?.mul(&pole)?.shift(&shift, Some(w.clone()))?.truncate(cap);
        let want0 = one_minus_x(cap + i)?.mul(&finite)?.shift(&shift, Some(w.clone()))?.truncate(cap);
        let f = solve_with(&d, &p, &shift)?;
        let parts = eps_components(&f.series, Var::s(1), -1, 0)?;
        out.expect_series(&format!("i=-{i}: order ε^-1"), &parts[0], &wantm1);
        out.expect_series(&format!("i=-{i}: order ε^0"), &parts[1], &want0);
    }
    Ok(out)
}

/// Finiteness at the homogeneous point along a generic line `s_i = 1 − r_i ε`:
/// every `f_j` with `j` in the Weyl chamber stays finite. Off-chamber indices that
/// happen to stay finite are only noted.
pub fn chamber_finiteness(n: usize, cap: i32, seed: u64) -> Result<Outcome> {
    let raw = crate::params::RawPoint::draw(n, seed);
    let e = ParamScalar::var(Var::s(1));
    // s_1 = S1 and s_i = 1 + r_i (S1 − 1) for i > 1, so all s_i → 1 together
    let mut s = vec![e.clone()];
    for i in 1..n {
        let r = ParamScalar::constant(raw.s[i].clone());
        s.push(ParamScalar::one().add(&r.mul(&e.sub(&ParamScalar::one()))));
    }
    let p = deformation(&raw, s);
    let d = build_d(&p, cap)?;
    let mut out = Outcome::new();
    for j in d.basis.clone() {
        let f = solve_with(&d, &p, &j)?;
        let mut worst = 0;
        for c in f.series.terms().values() {
            let l = crate::scalar::eps_expand(c, Var::s(1), 0)?;
            if !l.is_zero() {
                worst = worst.min(l.val());
            }
        }
        let finite = worst >= 0;
        if in_chamber(&j) {
            out.expect(finite, || format!("f_({}) lies in the Weyl chamber but has a pole of order {} at the homogeneous point", j.text(), -worst));
        } else if finite {
            out.note(format!("f_({}) is outside the chamber and still finite at the homogeneous point", j.text()));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{sampled, symbolic};

    #[test]
    fn f0_n2_first_coefficient() {
        let p = symbolic(2);
        let rec = solve_eigen(&p, &Exps::from_slice(&[0]), 2).unwrap();
        // −1 + t (1 − q/t)(1 − q s1/(t s2)) / ((1 − q)(1 − q s1/s2))
        let qt = p.q.div(&p.t).unwrap();
        let r = p.s[0].div(&p.s[1]).unwrap();
        let want = p
            .t
            .mul(&qt.one_minus())
            .mul(&qt.mul(&r).one_minus())
            .div(&p.q.one_minus().mul(&p.q.mul(&r).one_minus()))
            .unwrap()
            .sub(&p.one());
        assert_eq!(rec.series.coeff(&Exps::from_slice(&[1])).unwrap(), &want);
    }

    #[test]
    fn residual_vanishes_n3() {
        let (p, _) = sampled(3, 11);
        let d = build_d(&p, 4).unwrap();
        for j in [Exps::from_slice(&[0, 0]), Exps::from_slice(&[1, 0]), Exps::from_slice(&[1, 2])] {
            let rec = solve_with(&d, &p, &j).unwrap();
            assert!(residual(&d, &rec).unwrap().is_empty());
        }
    }
}
