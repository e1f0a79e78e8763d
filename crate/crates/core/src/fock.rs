//! Heisenberg/Fock realization of the Macdonald operators: the commuting
//! family `H_r`, the vertex operators `η` and `φ`, a Gram–Schmidt Macdonald
//! oracle and the raising-operator integral.
//!
//! Vectors live in the power-sum basis under `a_{-n} ↔ p_n`, `|0⟩ ↔ 1`.
//! `q`, `t` here are the ordinary Macdonald parameters, i.e. `Params::q`, `Params::t`.

use crate::check::Outcome;
use crate::error::{EngineError, Result};
use crate::operators::build_dr;
use crate::params::Params;
use crate::scalar::{qbinom, qfactorial, rat_int, ParamScalar, Rat, Scalar, ScalarError, Var};
use crate::series::{exps_to_zeta, Exps, RatioSeries};
use crate::spectral::solve_eigen;
use std::collections::BTreeMap;

// ---------------------------------------------------------------------------
// partitions

/// A partition, stored weakly decreasing without zero parts.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Partition(pub Vec<u32>);

impl Partition {
    pub fn new(mut v: Vec<u32>) -> Self {
        v.retain(|&x| x > 0);
        v.sort_unstable_by(|a, b| b.cmp(a));
        Partition(v)
    }
    pub fn empty() -> Self {
        Partition(Vec::new())
    }
    pub fn size(&self) -> u32 {
        self.0.iter().sum()
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    pub fn multiplicity(&self, m: u32) -> usize {
        self.0.iter().filter(|&&x| x == m).count()
    }
    pub fn with(&self, m: u32) -> Partition {
        let mut v = self.0.clone();
        v.push(m);
        Partition::new(v)
    }
    pub fn without(&self, m: u32) -> Option<Partition> {
        let i = self.0.iter().position(|&x| x == m)?;
        let mut v = self.0.clone();
        v.remove(i);
        Some(Partition(v))
    }
    pub fn union(&self, o: &Partition) -> Partition {
        let mut v = self.0.clone();
        v.extend_from_slice(&o.0);
        Partition::new(v)
    }
    /// `z_λ = ∏_m m^{k_m} k_m!`.
    pub fn z(&self) -> Rat {
        let mut acc = rat_int(1);
        let mut seen = std::collections::BTreeMap::<u32, i64>::new();
        for &m in &self.0 {
            let k = seen.entry(m).or_insert(0);
            *k += 1;
            acc = acc * rat_int(m as i64) * rat_int(*k);
        }
        acc
    }
    /// Dominance order on partitions of the same size.
    pub fn dominates(&self, o: &Partition) -> bool {
        let (mut a, mut b) = (0u32, 0u32);
        for i in 0..self.len().max(o.len()) {
            a += self.0.get(i).copied().unwrap_or(0);
            b += o.0.get(i).copied().unwrap_or(0);
            if a < b {
                return false;
            }
        }
        true
    }
    pub fn text(&self) -> String {
        format!("({})", self.0.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
    }
    pub fn parse(s: &str) -> Result<Partition> {
        let s = s.trim().trim_start_matches('(').trim_end_matches(')').trim();
        if s.is_empty() {
            return Ok(Partition::empty());
        }
        let v: std::result::Result<Vec<u32>, _> = s.split(',').map(|x| x.trim().parse::<u32>()).collect();
        v.map(Partition::new).map_err(|_| EngineError::Scalar(ScalarError::Parse(format!("bad partition '{s}'"))))
    }
}

/// Partitions of `k`, in increasing lexicographic order (a linear extension of dominance).
pub fn partitions(k: u32) -> Vec<Partition> {
    fn rec(rem: u32, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Partition>) {
        if rem == 0 {
            out.push(Partition(cur.clone()));
            return;
        }
        for m in (1..=rem.min(max)).rev() {
            cur.push(m);
            rec(rem - m, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, k, &mut Vec::new(), &mut out);
    out.sort();
    out
}

/// Compositions of `k` into `n` nonnegative parts.
pub fn compositions(k: u32, n: usize) -> Vec<Vec<u32>> {
    if n == 0 {
        return if k == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 0..=k {
        for mut rest in compositions(k - first, n - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// vectors

/// A vector of the Fock space truncated at degree `cap`, in the power-sum basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector<F> {
    pub cap: u32,
    terms: BTreeMap<Partition, F>,
}

impl<F: Scalar> FockVector<F> {
    pub fn zero(cap: u32) -> Self {
        FockVector { cap, terms: BTreeMap::new() }
    }
    pub fn basis(l: Partition, one: &F, cap: u32) -> Self {
        let mut v = Self::zero(cap);
        v.add_term(l, one.clone());
        v
    }
    pub fn vacuum(one: &F, cap: u32) -> Self {
        Self::basis(Partition::empty(), one, cap)
    }
    pub fn terms(&self) -> &BTreeMap<Partition, F> {
        &self.terms
    }
    pub fn coeff(&self, l: &Partition) -> Option<&F> {
        self.terms.get(l)
    }
    /// Add `c·p_λ`; terms above the cap are dropped.
    pub fn add_term(&mut self, l: Partition, c: F) {
        if l.size() > self.cap || c.is_zero() {
            return;
        }
        match self.terms.get_mut(&l) {
            Some(v) => {
                *v = v.add(&c);
                if v.is_zero() {
                    self.terms.remove(&l);
                }
            }
            None => {
                self.terms.insert(l, c);
            }
        }
    }
    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        out.cap = self.cap.min(o.cap);
        out.terms.retain(|l, _| l.size() <= o.cap);
        for (l, c) in &o.terms {
            out.add_term(l.clone(), c.clone());
        }
        out
    }
    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }
    pub fn neg(&self) -> Self {
        FockVector { cap: self.cap, terms: self.terms.iter().map(|(l, c)| (l.clone(), c.neg())).collect() }
    }
    pub fn scale(&self, s: &F) -> Self {
        let mut out = Self::zero(self.cap);
        for (l, c) in &self.terms {
            out.add_term(l.clone(), c.mul(s));
        }
        out
    }
    /// Product of symmetric functions, truncated at the smaller cap.
    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero(self.cap.min(o.cap));
        for (a, x) in &self.terms {
            for (b, y) in &o.terms {
                if a.size() + b.size() <= out.cap {
                    out.add_term(a.union(b), x.mul(y));
                }
            }
        }
        out
    }
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(|l| l.size()).max().unwrap_or(0)
    }
    pub fn with_cap(&self, cap: u32) -> Self {
        let mut out = Self::zero(cap);
        for (l, c) in &self.terms {
            out.add_term(l.clone(), c.clone());
        }
        out
    }
    pub fn first_mismatch(&self, o: &Self) -> Option<(Partition, Option<F>, Option<F>)> {
        let keys: std::collections::BTreeSet<&Partition> = self.terms.keys().chain(o.terms.keys()).collect();
        for l in keys {
            let a = self.terms.get(l);
            let b = o.terms.get(l);
            let same = match (a, b) {
                (Some(x), Some(y)) => x.sub(y).is_zero(),
                _ => false,
            };
            if !same {
                return Some((l.clone(), a.cloned(), b.cloned()));
            }
        }
        None
    }
    /// If `self = c·o` with `o ≠ 0`, return `c`.
    pub fn ratio_to(&self, o: &Self) -> Option<F> {
        let (l, b) = o.terms.iter().next()?;
        let a = self.terms.get(l)?;
        let c = a.div(b).ok()?;
        if self.first_mismatch(&o.scale(&c)).is_none() {
            Some(c)
        } else {
            None
        }
    }
    /// Fixture text, one `λ : scalar` line per term.
    pub fn to_fixture(&self) -> String {
        let mut s = format!("# cap {}\n", self.cap);
        for (l, c) in &self.terms {
            s.push_str(&format!("{} : {}\n", l.text(), c.to_text()));
        }
        s
    }
    pub fn from_fixture(text: &str, parse: impl Fn(&str) -> std::result::Result<F, ScalarError>) -> Result<Self> {
        let mut cap = None;
        let mut terms = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(c) = line.strip_prefix("# cap") {
                cap = Some(c.trim().parse::<u32>().map_err(|_| EngineError::Scalar(ScalarError::Parse(line.into())))?);
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let (l, c) = line.split_once(':').ok_or_else(|| EngineError::Scalar(ScalarError::Parse(line.into())))?;
            terms.push((Partition::parse(l)?, parse(c.trim())?));
        }
        let cap = cap.unwrap_or_else(|| terms.iter().map(|(l, _)| l.size()).max().unwrap_or(0));
        let mut v = Self::zero(cap);
        for (l, c) in terms {
            v.add_term(l, c);
        }
        Ok(v)
    }
}

fn expect_fock<F: Scalar>(out: &mut Outcome, label: &str, got: &FockVector<F>, want: &FockVector<F>) {
    let mm = got.first_mismatch(want);
    out.expect(mm.is_none(), || {
        let (l, a, b) = mm.unwrap();
        let show = |x: Option<F>| x.map(|v| v.to_text()).unwrap_or_else(|| "0".into());
        format!("{label}: coefficient of p_{} differs: got {} want {}", l.text(), show(a), show(b))
    });
}

// ---------------------------------------------------------------------------
// the Heisenberg algebra and vertex operators

/// The Fock space at fixed `(q, t)`.
#[derive(Clone, Debug)]
pub struct Fock<F> {
    pub q: F,
    pub t: F,
}

impl<F: Scalar> Fock<F> {
    pub fn new(p: &Params<F>) -> Self {
        Fock { q: p.q.clone(), t: p.t.clone() }
    }
    pub fn one(&self) -> F {
        self.q.one_like()
    }
    fn zero(&self) -> F {
        self.q.zero_like()
    }

    /// `[a_m, a_{-m}] = m(1 − q^m)/(1 − t^m)` for `m > 0`.
    pub fn bracket(&self, m: u32) -> Result<F> {
        let num = self.q.pow_i(m as i64)?.one_minus();
        let den = self.t.pow_i(m as i64)?.one_minus();
        Ok(num.div(&den)?.scale(&rat_int(m as i64)))
    }

    /// `a_m v`: multiplication by `p_{-m}` for `m < 0`, and
    /// `m(1 − q^m)/(1 − t^m) ∂/∂p_m` for `m > 0`.
    pub fn heisenberg(&self, m: i32, v: &FockVector<F>) -> Result<FockVector<F>> {
        if m == 0 {
            return Err(EngineError::Precondition("a_0 is not part of the algebra".into()));
        }
        let mut out = FockVector::zero(v.cap);
        if m < 0 {
            let k = (-m) as u32;
            for (l, c) in v.terms() {
                out.add_term(l.with(k), c.clone());
            }
        } else {
            let k = m as u32;
            let b = self.bracket(k)?;
            for (l, c) in v.terms() {
                if let Some(rest) = l.without(k) {
                    out.add_term(rest, c.mul(&b).scale(&rat_int(l.multiplicity(k) as i64)));
                }
            }
        }
        Ok(out)
    }

    /// Coefficient of `y^k` in `exp(Σ_{m≥1} c_m X_m y^m)` for commuting `X_m`,
    /// as a list `(ν, ∏ c_m^{k_m}/k_m!)` over `ν ⊢ k`.
    fn exp_coeffs(&self, k: u32, c: &dyn Fn(u32) -> Result<F>) -> Result<Vec<(Partition, F)>> {
        let cs: Vec<F> = (1..=k).map(c).collect::<Result<_>>()?;
        let mut out = Vec::new();
        for nu in partitions(k) {
            let mut acc = self.one();
            for &m in &nu.0 {
                acc = acc.mul(&cs[m as usize - 1]);
            }
            let mut fact = rat_int(1);
            for m in 1..=k {
                for j in 1..=nu.multiplicity(m) {
                    fact *= rat_int(j as i64);
                }
            }
            out.push((nu, acc.scale(&(rat_int(1) / fact))));
        }
        Ok(out)
    }

    fn creation(&self, k: u32, cap: u32, c: &dyn Fn(u32) -> Result<F>) -> Result<FockVector<F>> {
        let mut v = FockVector::zero(cap);
        for (nu, x) in self.exp_coeffs(k, c)? {
            v.add_term(nu, x);
        }
        Ok(v)
    }

    /// `φ_{-k}|0⟩`, the coefficient of `x^k` in `φ(x)|0⟩`; equal to `Q_{(k)}`.
    pub fn phi_mode(&self, k: u32, cap: u32) -> Result<FockVector<F>> {
        self.creation(k, cap, &|m| {
            let num = self.t.pow_i(m as i64)?.one_minus();
            let den = self.q.pow_i(m as i64)?.one_minus().scale(&rat_int(m as i64));
            Ok(num.div(&den)?)
        })
    }

    /// `φ_{-λ}|0⟩ = g_λ`.
    pub fn phi_vector(&self, l: &[u32], cap: u32) -> Result<FockVector<F>> {
        let mut v = FockVector::vacuum(&self.one(), cap);
        for &k in l {
            v = v.mul(&self.phi_mode(k, cap)?);
        }
        Ok(v)
    }

    /// Creation half of `η(z)`: coefficient of `z^k` in `exp(Σ (1 − t^{-m})/m a_{-m} z^m)`.
    pub fn eta_creation(&self, k: u32, cap: u32) -> Result<FockVector<F>> {
        self.creation(k, cap, &|m| Ok(self.t.pow_i(-(m as i64))?.one_minus().scale(&Rat::new(1.into(), (m as i64).into()))))
    }

    /// Annihilation half of `η(z)`: the coefficient of `z^{-k}` in
    /// `exp(−Σ (1 − t^m)/m a_m z^{-m})`, applied to `v`.
    pub fn eta_annihilate(&self, k: u32, v: &FockVector<F>) -> Result<FockVector<F>> {
        if k == 0 {
            return Ok(v.clone());
        }
        let mut out = FockVector::zero(v.cap);
        for (nu, c) in self.exp_coeffs(k, &|m| Ok(self.t.pow_i(m as i64)?.one_minus().scale(&Rat::new((-1).into(), (m as i64).into()))))? {
            let mut w = v.clone();
            for &m in &nu.0 {
                w = self.heisenberg(m as i32, &w)?;
                if w.is_zero() {
                    break;
                }
            }
            out = out.add(&w.scale(&c));
        }
        Ok(out)
    }

    /// Coefficient of `z^k` (`k ∈ ℤ`) in `ω(z)`.
    pub fn omega_coeff(&self, k: i32) -> Result<F> {
        let u = self.t.inv()?;
        let den = self.one().add(&u);
        if k == 0 {
            return Ok(self.one().scale(&rat_int(2)).div(&den)?);
        }
        let a = k.unsigned_abs() as i64;
        Ok(u.pow_i(a)?.sub(&u.pow_i(a - 1)?).div(&den)?)
    }

    /// Coefficients of `∏_{i<j} (1 − z_i/z_j)/(1 − t^{-1} z_i/z_j)` as a power series in the
    /// positive roots, restricted to exponents whose partial sums stay `<= bound`.
    fn half_weight(&self, r: usize, bound: u32) -> Result<Vec<(Vec<i32>, F)>> {
        let u = self.t.inv()?;
        let mut fac = vec![self.one()];
        for k in 1..=bound as i64 {
            fac.push(u.pow_i(k)?.sub(&u.pow_i(k - 1)?));
        }
        let mut acc: BTreeMap<Vec<i32>, F> = BTreeMap::new();
        acc.insert(vec![0; r], self.one());
        for i in 0..r {
            for j in i + 1..r {
                let mut next: BTreeMap<Vec<i32>, F> = BTreeMap::new();
                for (d, c) in &acc {
                    for (k, f) in fac.iter().enumerate() {
                        let mut e = d.clone();
                        e[i] += k as i32;
                        e[j] -= k as i32;
                        let ok = (0..r).all(|l| e[..=l].iter().sum::<i32>() <= bound as i32);
                        if !ok {
                            break;
                        }
                        let slot = next.entry(e).or_insert_with(|| self.zero());
                        *slot = slot.add(&c.mul(f));
                    }
                }
                acc = next;
            }
        }
        Ok(acc.into_iter().filter(|(_, c)| !c.is_zero()).collect())
    }

    /// `H_r v`.
    ///
    /// The integrand `∏ω(z_j/z_i) :η(z_1)…η(z_r):` is symmetric in the `z_i`, so its torus
    /// constant term equals `r!/[r]_{t^{-1}}!` times the formal constant term against the half
    /// weight above. With the `[r]_{t^{-1}}!/r!` normalization only the latter remains, and it
    /// is a finite sum on degree-capped vectors.
    pub fn apply_hr(&self, r: usize, v: &FockVector<F>) -> Result<FockVector<F>> {
        if r == 0 {
            return Err(EngineError::Precondition("H_r needs r >= 1".into()));
        }
        let dmax = v.max_degree();
        // annihilation part, variable by variable: (β, v_β) with z^{-β}
        let mut states: Vec<(Vec<u32>, FockVector<F>)> = vec![(Vec::new(), v.clone())];
        for _ in 0..r {
            let mut next = Vec::new();
            for (beta, w) in &states {
                for k in 0..=w.max_degree() {
                    let x = self.eta_annihilate(k, w)?;
                    if !x.is_zero() {
                        let mut b = beta.clone();
                        b.push(k);
                        next.push((b, x));
                    }
                }
            }
            states = next;
        }
        let table = self.half_weight(r, dmax)?;
        let creations: Vec<FockVector<F>> = (0..=dmax).map(|k| self.eta_creation(k, v.cap)).collect::<Result<_>>()?;
        let mut out = FockVector::zero(v.cap);
        for (beta, w) in &states {
            for (delta, c) in &table {
                if delta.iter().zip(beta).any(|(d, b)| *d > *b as i32) {
                    continue;
                }
                let mut x = w.scale(c);
                for (d, b) in delta.iter().zip(beta) {
                    let g = (*b as i32 - d) as usize;
                    if g > 0 {
                        x = x.mul(&creations[g]);
                    }
                }
                out = out.add(&x);
            }
        }
        Ok(out)
    }

    /// Matrix of `H_r` on all `p_λ` with `|λ| <= cap`, column by column.
    pub fn hr_columns(&self, r: usize, cap: u32) -> Result<Vec<(Partition, FockVector<F>)>> {
        let basis: Vec<Partition> = (0..=cap).flat_map(partitions).collect();
        crate::par::try_map(basis, |l| Ok((l.clone(), self.apply_hr(r, &FockVector::basis(l, &self.one(), cap))?)))
    }

    // -----------------------------------------------------------------------
    // the Macdonald oracle

    /// `⟨p_λ, p_μ⟩ = δ_{λμ} z_λ ∏ (1 − q^{λ_i})/(1 − t^{λ_i})`, extended bilinearly.
    pub fn inner(&self, a: &FockVector<F>, b: &FockVector<F>) -> Result<F> {
        let mut acc = self.zero();
        for (l, x) in a.terms() {
            if let Some(y) = b.coeff(l) {
                let mut w = self.one().scale(&l.z());
                for &m in &l.0 {
                    w = w.mul(&self.q.pow_i(m as i64)?.one_minus()).div(&self.t.pow_i(m as i64)?.one_minus())?;
                }
                acc = acc.add(&x.mul(y).mul(&w));
            }
        }
        Ok(acc)
    }

    /// `m_λ` in the power-sum basis.
    pub fn monomial(&self, l: &Partition, cap: u32) -> Result<FockVector<F>> {
        let d = l.size();
        let parts = partitions(d);
        let inv = power_to_monomial_inverse(&parts)?;
        let i = parts.iter().position(|x| x == l).unwrap();
        let mut v = FockVector::zero(cap);
        for (j, mu) in parts.iter().enumerate() {
            v.add_term(mu.clone(), self.one().scale(&inv[i][j]));
        }
        Ok(v)
    }

    /// `(λ, P_λ, Q_λ)` for all `λ ⊢ d`, by Gram–Schmidt on `m_λ` in lexicographic order.
    pub fn macdonald_basis(&self, d: u32, cap: u32) -> Result<Vec<(Partition, FockVector<F>, FockVector<F>)>> {
        let parts = partitions(d);
        let mut done: Vec<(Partition, FockVector<F>, F)> = Vec::new();
        for l in &parts {
            let m = self.monomial(l, cap)?;
            let mut p = m.clone();
            for (_, pm, norm) in &done {
                let c = self.inner(&m, pm)?.div(norm)?;
                p = p.sub(&pm.scale(&c));
            }
            let norm = self.inner(&p, &p)?;
            if norm.is_zero() {
                return Err(EngineError::Degenerate(format!("P_{} has zero norm at this point", l.text())));
            }
            done.push((l.clone(), p, norm));
        }
        done.into_iter().map(|(l, p, norm)| Ok((l, p.clone(), p.scale(&norm.inv()?)))).collect()
    }

    /// `Q_λ(q, t)`, normalized so that `⟨Q_λ, P_λ⟩ = 1`.
    pub fn macdonald_oracle(&self, l: &Partition, cap: u32) -> Result<FockVector<F>> {
        let basis = self.macdonald_basis(l.size(), cap)?;
        Ok(basis.into_iter().find(|(m, _, _)| m == l).unwrap().2)
    }

    /// `(t − 1) Σ_{i≥1} t^{-i}(q^{λ_i} − 1) + 1`.
    pub fn h1_eigenvalue(&self, l: &Partition) -> Result<F> {
        let mut acc = self.zero();
        for (i, &m) in l.0.iter().enumerate() {
            acc = acc.add(&self.t.pow_i(-(i as i64 + 1))?.mul(&self.q.pow_i(m as i64)?.sub(&self.one())));
        }
        Ok(self.t.sub(&self.one()).mul(&acc).add(&self.one()))
    }

    // -----------------------------------------------------------------------
    // the raising operator

    /// Constant term of `x^{-λ} f(x) φ(x_1)…φ(x_n)|0⟩` for a ratio series `f`.
    pub fn raising_from_series(&self, l: &[u32], f: &RatioSeries<F>) -> Result<FockVector<F>> {
        let cap: u32 = l.iter().sum();
        let mut out = FockVector::zero(cap);
        let modes: Vec<FockVector<F>> = (0..=cap).map(|k| self.phi_mode(k, cap)).collect::<Result<_>>()?;
        for (e, c) in f.terms() {
            let z = exps_to_zeta(e);
            let kappa: Vec<i64> = l.iter().zip(&z).map(|(&a, &b)| a as i64 - b as i64).collect();
            if kappa.iter().any(|&k| k < 0) {
                continue;
            }
            let mut v = FockVector::vacuum(&self.one(), cap);
            for &k in &kappa {
                v = v.mul(&modes[k as usize]);
            }
            out = out.add(&v.scale(c));
        }
        Ok(out)
    }
}

/// Inverse of the integer matrix `p_μ = Σ_λ R_{μλ} m_λ`, so `m_λ = Σ_μ R^{-1}_{λμ} p_μ`.
fn power_to_monomial_inverse(parts: &[Partition]) -> Result<Vec<Vec<Rat>>> {
    fn count(mu: &[u32], rem: &mut Vec<u32>) -> i64 {
        match mu.split_first() {
            None => rem.iter().all(|&r| r == 0) as i64,
            Some((&m, rest)) => {
                let mut acc = 0;
                for i in 0..rem.len() {
                    if rem[i] >= m {
                        rem[i] -= m;
                        acc += count(rest, rem);
                        rem[i] += m;
                    }
                }
                acc
            }
        }
    }
    let k = parts.len();
    let r: Vec<Vec<Rat>> = parts.iter().map(|mu| parts.iter().map(|l| rat_int(count(&mu.0, &mut l.0.clone()))).collect()).collect();
    // Gauss–Jordan on [R | I]
    let mut a: Vec<Vec<Rat>> = r.into_iter().enumerate().map(|(i, mut row)| {
        row.extend((0..k).map(|j| if i == j { rat_int(1) } else { rat_int(0) }));
        row
    }).collect();
    for col in 0..k {
        let piv = (col..k).find(|&i| !a[i][col].is_zero()).ok_or_else(|| EngineError::Degenerate("singular p→m matrix".into()))?;
        a.swap(col, piv);
        let pv = a[col][col].clone();
        for x in a[col].iter_mut() {
            *x = x.clone() / pv.clone();
        }
        for i in 0..k {
            if i != col && !a[i][col].is_zero() {
                let f = a[i][col].clone();
                let prow = a[col].clone();
                for (x, y) in a[i].iter_mut().zip(prow) {
                    *x = x.clone() - f.clone() * y;
                }
            }
        }
    }
    Ok(a.into_iter().map(|row| row[k..].to_vec()).collect())
}

/// The specialization `s_i = t^{n−i} q^{λ_i}`.
pub fn raising_params<F: Scalar>(p: &Params<F>, l: &[u32]) -> Result<Params<F>> {
    let n = l.len();
    let s: Vec<F> = l.iter().enumerate().map(|(i, &m)| Ok(p.t.pow_i((n - 1 - i) as i64)?.mul(&p.q.pow_i(m as i64)?))).collect::<Result<_>>()?;
    Ok(p.with_s(s))
}

/// `raising_integral(λ)` with `f` from the eigen-solver at `s_i = t^{n−i}q^{λ_i}`; `n = len(λ)`
/// and trailing zero parts are allowed.
pub fn raising_integral<F: Scalar>(p: &Params<F>, l: &[u32]) -> Result<FockVector<F>> {
    let fk = Fock::new(p);
    let n = l.len();
    if n == 0 {
        return Ok(FockVector::vacuum(&p.one(), 0));
    }
    if n == 1 {
        return fk.phi_mode(l[0], l[0]);
    }
    let ps = raising_params(p, l)?;
    // x^e contributes only when e_k <= λ_{k+1} + … + λ_n
    let rcap: u32 = l.iter().enumerate().map(|(i, &m)| i as u32 * m).sum();
    let f = solve_eigen(&ps, &Exps::zero(n - 1), rcap as i32)?;
    fk.raising_from_series(l, &f.series)
}

// ---------------------------------------------------------------------------
// x-side polynomials with Fock coefficients

type XPoly<F> = BTreeMap<(Vec<u32>, Partition), F>;

fn xpoly_add<F: Scalar>(acc: &mut XPoly<F>, key: (Vec<u32>, Partition), c: F) {
    if c.is_zero() {
        return;
    }
    let zero = c.zero_like();
    let slot = acc.entry(key.clone()).or_insert(zero);
    *slot = slot.add(&c);
    if slot.is_zero() {
        acc.remove(&key);
    }
}

/// Divide by `x_i − x_j` exactly; fails if there is a remainder.
fn xpoly_div_diff<F: Scalar>(f: &XPoly<F>, i: usize, j: usize) -> Result<XPoly<F>> {
    let mut rem = f.clone();
    let mut quo: XPoly<F> = BTreeMap::new();
    loop {
        // a term of maximal x_i-degree with positive x_i-degree
        let lead = rem.iter().filter(|((e, _), _)| e[i] > 0).max_by_key(|((e, _), _)| e[i]).map(|(k, c)| (k.clone(), c.clone()));
        let Some(((e, l), c)) = lead else { break };
        let mut e1 = e.clone();
        e1[i] -= 1;
        xpoly_add(&mut quo, (e1.clone(), l.clone()), c.clone());
        // subtract (x_i − x_j)·c·x^{e1}
        xpoly_add(&mut rem, (e, l.clone()), c.neg());
        let mut e2 = e1;
        e2[j] += 1;
        xpoly_add(&mut rem, (e2, l), c);
    }
    if !rem.is_empty() {
        return Err(EngineError::Degenerate(format!("division by x_{} − x_{} left a remainder", i + 1, j + 1)));
    }
    Ok(quo)
}

/// Classical `D_n^k` on a symmetric polynomial with Fock coefficients, via
/// `D_n^k = a_δ^{-1} Σ_{|I|=k} (T_{t,I} a_δ) T_{q,I}`.
fn macdonald_dnk<F: Scalar>(fk: &Fock<F>, n: usize, k: usize, f: &XPoly<F>) -> Result<XPoly<F>> {
    if k == 0 {
        return Ok(f.clone());
    }
    let mut total: XPoly<F> = BTreeMap::new();
    for set in subsets(n, k) {
        // T_{t,I} a_δ as a scalar polynomial
        let mut ad: BTreeMap<Vec<u32>, F> = BTreeMap::new();
        ad.insert(vec![0; n], fk.one());
        for i in 0..n {
            for j in i + 1..n {
                let ci = if set.contains(&i) { fk.t.clone() } else { fk.one() };
                let cj = if set.contains(&j) { fk.t.clone() } else { fk.one() };
                let mut next = BTreeMap::new();
                for (e, c) in &ad {
                    let mut a = e.clone();
                    a[i] += 1;
                    let mut b = e.clone();
                    b[j] += 1;
                    let sa: &mut F = next.entry(a).or_insert_with(|| fk.zero());
                    *sa = sa.add(&c.mul(&ci));
                    let sb: &mut F = next.entry(b).or_insert_with(|| fk.zero());
                    *sb = sb.sub(&c.mul(&cj));
                }
                ad = next;
            }
        }
        for ((e, l), c) in f {
            let mut shift = fk.one();
            for &i in &set {
                shift = shift.mul(&fk.q.pow_i(e[i] as i64)?);
            }
            let c = c.mul(&shift);
            for (a, x) in &ad {
                let sum: Vec<u32> = e.iter().zip(a).map(|(u, v)| u + v).collect();
                xpoly_add(&mut total, (sum, l.clone()), c.mul(x));
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            total = xpoly_div_diff(&total, i, j)?;
        }
    }
    Ok(total)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Degree-`d` part of `φ(x_1)…φ(x_n)|0⟩`.
fn phi_product<F: Scalar>(fk: &Fock<F>, n: usize, d: u32) -> Result<XPoly<F>> {
    let mut out = BTreeMap::new();
    for kappa in compositions(d, n) {
        let v = fk.phi_vector(&kappa, d)?;
        for (l, c) in v.terms() {
            xpoly_add(&mut out, (kappa.clone(), l.clone()), c.clone());
        }
    }
    Ok(out)
}

fn expect_xpoly<F: Scalar>(out: &mut Outcome, label: &str, got: &XPoly<F>, want: &XPoly<F>) {
    let keys: std::collections::BTreeSet<_> = got.keys().chain(want.keys()).collect();
    let mm = keys.into_iter().find(|k| match (got.get(*k), want.get(*k)) {
        (Some(a), Some(b)) => !a.sub(b).is_zero(),
        _ => true,
    });
    out.expect(mm.is_none(), || {
        let (e, l) = mm.unwrap();
        let show = |x: Option<&F>| x.map(|v| v.to_text()).unwrap_or_else(|| "0".into());
        format!("{label}: coefficient of x^{e:?} p_{} differs: got {} want {}", l.text(), show(got.get(&(e.clone(), l.clone()))), show(want.get(&(e.clone(), l.clone()))))
    });
}

// ---------------------------------------------------------------------------
// checks

/// `[a_m, a_n] = m(1 − q^{|m|})/(1 − t^{|m|}) δ_{m+n,0}` on every basis vector of degree `<= cap`.
pub fn heisenberg_check<F: Scalar>(p: &Params<F>, cap: u32) -> Result<Outcome> {
    let fk = Fock::new(p);
    let mut out = Outcome::new();
    let modes: Vec<i32> = (1..=cap as i32).flat_map(|m| [m, -m]).collect();
    for d in 0..cap {
        for l in partitions(d) {
            // room for one creation step of any mode
            let room = d + cap;
            let v = FockVector::basis(l.clone(), &fk.one(), room);
            for &m in &modes {
                for &k in &modes {
                    let mk = fk.heisenberg(m, &fk.heisenberg(k, &v)?)?;
                    let km = fk.heisenberg(k, &fk.heisenberg(m, &v)?)?;
                    let want = if m + k == 0 {
                        let b = fk.bracket(m.unsigned_abs())?;
                        v.scale(&if m > 0 { b } else { b.neg() })
                    } else {
                        FockVector::zero(room)
                    };
                    expect_fock(&mut out, &format!("[a_{m}, a_{k}] on p_{}", l.text()), &mk.sub(&km).with_cap(cap), &want.with_cap(cap));
                }
            }
        }
    }
    Ok(out)
}

/// `[H_r, H_s] v = 0` for all basis vectors of degree `<= cap`.
pub fn commute_check_hr<F: Scalar>(p: &Params<F>, r: usize, s: usize, cap: u32) -> Result<Outcome> {
    let fk = Fock::new(p);
    let mut out = Outcome::new();
    let basis: Vec<Partition> = (0..=cap).flat_map(partitions).collect();
    let res = crate::par::try_map(basis, |l| {
        let v = FockVector::basis(l.clone(), &fk.one(), cap);
        let rs = fk.apply_hr(r, &fk.apply_hr(s, &v)?)?;
        let sr = fk.apply_hr(s, &fk.apply_hr(r, &v)?)?;
        Ok::<_, EngineError>((l, rs.sub(&sr)))
    })?;
    for (l, c) in res {
        expect_fock(&mut out, &format!("[H_{r}, H_{s}] p_{}", l.text()), &c, &FockVector::zero(cap));
    }
    Ok(out)
}

/// `H_1 Q_λ = ((t − 1)Σ t^{-i}(q^{λ_i} − 1) + 1) Q_λ` for `|λ| <= maxdeg`, plus
/// the oracle's own orthonormality `⟨Q_λ, P_μ⟩ = δ_{λμ}`.
pub fn h1_eigen_check<F: Scalar>(p: &Params<F>, maxdeg: u32) -> Result<Outcome> {
    let fk = Fock::new(p);
    let mut out = Outcome::new();
    for d in 0..=maxdeg {
        let basis = fk.macdonald_basis(d, d)?;
        for (l, _, qv) in &basis {
            let got = fk.apply_hr(1, qv)?;
            let want = qv.scale(&fk.h1_eigenvalue(l)?);
            expect_fock(&mut out, &format!("H_1 Q_{}", l.text()), &got, &want);
            for (m, pv, _) in &basis {
                let ip = fk.inner(qv, pv)?;
                let want = if l == m { fk.one() } else { fk.zero() };
                out.expect(ip.sub(&want).is_zero(), || format!("⟨Q_{}, P_{}⟩ = {}", l.text(), m.text(), ip.to_text()));
            }
        }
    }
    Ok(out)
}

/// Sanity of the Gram–Schmidt oracle up to degree `maxdeg`: `⟨Q_λ, P_μ⟩ = δ`, the
/// one-row `Q_(k)` is the mode `φ_k`, and the `φ`-products `g_λ` are dual to `m_μ`.
pub fn oracle_check<F: Scalar>(p: &Params<F>, maxdeg: u32) -> Result<Outcome> {
    let fk = Fock::new(p);
    let mut out = Outcome::new();
    for d in 1..=maxdeg {
        let basis = fk.macdonald_basis(d, d)?;
        for (l, _, qv) in &basis {
            for (m, pv, _) in &basis {
                let ip = fk.inner(qv, pv)?;
                let want = if l == m { fk.one() } else { fk.zero() };
                out.expect(ip.sub(&want).is_zero(), || format!("⟨Q_{}, P_{}⟩ = {}", l.text(), m.text(), ip.to_text()));
            }
            if l.len() == 1 {
                expect_fock(&mut out, &format!("Q_{} vs φ_{d}", l.text()), qv, &fk.phi_mode(d, d)?);
            }
        }
        for l in partitions(d) {
            let g = fk.phi_vector(&l.0, d)?;
            for m in partitions(d) {
                let ip = fk.inner(&g, &fk.monomial(&m, d)?)?;
                let want = if l == m { fk.one() } else { fk.zero() };
                out.expect(ip.sub(&want).is_zero(), || format!("⟨g_{}, m_{}⟩ = {}", l.text(), m.text(), ip.to_text()));
            }
        }
    }
    Ok(out)
}

/// `raising_integral(λ) ∝ Q_λ` for all `λ` with at most `n` parts (padded with zeros to
/// length `n`) and `1 <= |λ| <= maxdeg`. The proportionality constants go to the notes.
pub fn raising_check<F: Scalar>(p: &Params<F>, n: usize, maxdeg: u32) -> Result<Outcome> {
    let fk = Fock::new(p);
    let mut out = Outcome::new();
    for d in 1..=maxdeg {
        let basis = fk.macdonald_basis(d, d)?;
        for (l, _, qv) in &basis {
            if l.len() > n {
                continue;
            }
            let mut lam = l.0.clone();
            lam.resize(n, 0);
            let got = raising_integral(p, &lam)?;
            let c = got.ratio_to(qv);
            out.expect(c.as_ref().is_some_and(|c| !c.is_zero()), || {
                // scale by the ratio at the first oracle term so the witness is a coefficient
                let guess = qv.terms().iter().next().and_then(|(m, b)| got.coeff(m).and_then(|a| a.div(b).ok())).unwrap_or_else(|| fk.zero());
                let show = |x: Option<F>| x.map(|v| v.to_text()).unwrap_or_else(|| "0".into());
                match got.first_mismatch(&qv.scale(&guess)) {
                    Some((m, a, b)) => format!("raising integral for λ = {lam:?} is not a multiple of Q_{}: at p_{} got {} want {}", l.text(), m.text(), show(a), show(b)),
                    None => format!("raising integral for λ = {lam:?} vanishes"),
                }
            });
            if let Some(c) = c {
                out.note(format!("n={n} λ={}: constant {}", l.text(), c.to_text()));
            }
        }
    }
    Ok(out)
}

/// `H_r φ(x_1)…φ(x_n)|0⟩ = t^{-rn} Σ_k (t−1)^k [r,k]_t [k]_t! D_n^k φ(x_1)…φ(x_n)|0⟩` to x-degree `cap`.
pub fn eqhr_crosscheck<F: Scalar>(p: &Params<F>, r: usize, n: usize, cap: u32) -> Result<Outcome> {
    if r == 0 || r > n {
        return Err(EngineError::Precondition(format!("eqHr needs 1 <= r <= n, got r={r}, n={n}")));
    }
    let fk = Fock::new(p);
    let mut out = Outcome::new();
    let pref = fk.t.pow_i(-((r * n) as i64))?;
    for d in 0..=cap {
        let phi = phi_product(&fk, n, d)?;
        // left: H_r on each Fock coefficient
        let mut lhs: XPoly<F> = BTreeMap::new();
        let mut by_x: BTreeMap<Vec<u32>, FockVector<F>> = BTreeMap::new();
        for ((e, l), c) in &phi {
            let slot = by_x.entry(e.clone()).or_insert_with(|| FockVector::zero(d));
            slot.add_term(l.clone(), c.clone());
        }
        for (e, v) in &by_x {
            for (l, c) in fk.apply_hr(r, v)?.terms() {
                xpoly_add(&mut lhs, (e.clone(), l.clone()), c.clone());
            }
        }
        let mut rhs: XPoly<F> = BTreeMap::new();
        for k in 0..=r {
            let coef = fk.t.sub(&fk.one()).pow_i(k as i64)?.mul(&qbinom(&fk.t, r as u32, k as u32)?).mul(&qfactorial(&fk.t, k as u32)).mul(&pref);
            for (key, c) in macdonald_dnk(&fk, n, k, &phi)? {
                xpoly_add(&mut rhs, key, c.mul(&coef));
            }
        }
        expect_xpoly(&mut out, &format!("eqHr r={r} n={n} degree {d}"), &lhs, &rhs);
    }
    Ok(out)
}

/// `[D^r, D^s] = 0` on the truncated ratio-series space at the point `p`.
pub fn family_commute_check<F: Scalar>(p: &Params<F>, r: usize, s: usize, cap: i32) -> Result<Outcome> {
    let a = build_dr(p, r, cap)?;
    let b = build_dr(p, s, cap)?;
    let c = a.commutator(&b)?;
    let mut out = Outcome::new();
    let first = c.first_nonzero();
    out.expect(first.is_none(), || {
        let (row, col, v) = first.unwrap();
        format!("[D^{r}, D^{s}] has entry {} at (x^({}), x^({}))", v.to_text(), row.text(), col.text())
    });
    Ok(out)
}

/// The operator product `η(z)φ(x) = μ(x/z):η(z)φ(x):`, the difference property
/// `:η(tx)φ(x):|0⟩ = φ(qx)|0⟩`, and the symmetrization identity for `n = 2, 3`.
pub fn ope_checks<F: Scalar>(p: &Params<F>, cap: u32) -> Result<Outcome> {
    let fk = Fock::new(p);
    let mut out = Outcome::new();
    let c = cap as i32;
    let mu = |k: u32| -> Result<F> {
        if k == 0 {
            Ok(fk.one())
        } else {
            Ok(fk.t.pow_i(k as i64)?.sub(&fk.t.pow_i(k as i64 - 1)?))
        }
    };
    // intermediate vectors reach degree 2·cap before the annihilators bring them back
    let wide = 2 * cap;
    let phis: Vec<FockVector<F>> = (0..=cap).map(|k| fk.phi_mode(k, wide)).collect::<Result<_>>()?;
    let etas: Vec<FockVector<F>> = (0..=wide).map(|k| fk.eta_creation(k, wide)).collect::<Result<_>>()?;
    // coefficient of z^a x^b in η(z)φ(x)v and in :η(z)φ(x):v
    let plain = |v: &FockVector<F>, a: i32, b: u32| -> Result<FockVector<F>> {
        let w = phis[b as usize].mul(v);
        let mut acc = FockVector::zero(wide);
        for i in 0..=w.max_degree() as i32 {
            let j = a + i;
            if j < 0 || j > wide as i32 {
                continue;
            }
            acc = acc.add(&etas[j as usize].mul(&fk.eta_annihilate(i as u32, &w)?));
        }
        Ok(acc)
    };
    let normal = |v: &FockVector<F>, a: i32, b: u32| -> Result<FockVector<F>> {
        let mut acc = FockVector::zero(wide);
        for i in 0..=v.max_degree() as i32 {
            let j = a + i;
            if j < 0 || j > wide as i32 {
                continue;
            }
            acc = acc.add(&etas[j as usize].mul(&phis[b as usize]).mul(&fk.eta_annihilate(i as u32, v)?));
        }
        Ok(acc)
    };
    for d in 0..=cap {
        for l in partitions(d) {
            let v = FockVector::basis(l.clone(), &fk.one(), wide);
            for b in 0..=cap {
                // result degree d + b + a must lie in [0, cap]
                for a in -((d + b) as i32)..=(c - (d + b) as i32) {
                    let lhs = plain(&v, a, b)?;
                    let mut rhs = FockVector::zero(cap);
                    for k in 0..=b {
                        rhs = rhs.add(&normal(&v, a + k as i32, b - k)?.scale(&mu(k)?));
                    }
                    expect_fock(&mut out, &format!("OPE on p_{} at z^{a} x^{b}", l.text()), &lhs.with_cap(cap), &rhs.with_cap(cap));
                }
            }
        }
    }
    // difference property, coefficient of x^k
    for k in 0..=cap {
        let mut lhs = FockVector::zero(cap);
        for j in 0..=k {
            lhs = lhs.add(&etas[j as usize].mul(&phis[(k - j) as usize]).scale(&fk.t.pow_i(j as i64)?));
        }
        let rhs = phis[k as usize].scale(&fk.q.pow_i(k as i64)?);
        expect_fock(&mut out, &format!("difference property at x^{k}"), &lhs, &rhs);
    }
    for n in [2, 3] {
        out.merge(symmetrization_identity(n)?);
    }
    Ok(out)
}

/// `Symm ∏_{i<j} (1 − x_j/x_i)/(1 − t^{-1}x_j/x_i) = ([n]_{t^{-1}}!/n!) ∏_{i<j} ω(x_j/x_i)`
/// as an identity of rational functions in `x_1..x_n`, `t`.
pub fn symmetrization_identity(n: usize) -> Result<Outcome> {
    let x: Vec<ParamScalar> = (1..=n).map(|i| ParamScalar::var(Var::s(i))).collect();
    let t = ParamScalar::var(Var::T);
    let u = t.inv()?;
    let one = ParamScalar::one();
    let factor = |y: &ParamScalar| -> Result<ParamScalar> { Ok(y.one_minus().div(&u.mul(y).one_minus())?) };
    let omega = |y: &ParamScalar| -> Result<ParamScalar> {
        let yi = y.inv()?;
        Ok(y.one_minus().mul(&yi.one_minus()).div(&u.mul(y).one_minus().mul(&u.mul(&yi).one_minus()))?)
    };
    let mut lhs = ParamScalar::zero();
    let perms = permutations(n);
    for w in &perms {
        let mut term = one.clone();
        for i in 0..n {
            for j in i + 1..n {
                term = term.mul(&factor(&x[w[j]].div(&x[w[i]])?)?);
            }
        }
        lhs = lhs.add(&term);
    }
    lhs = lhs.scale(&(rat_int(1) / rat_int(perms.len() as i64)));
    let mut rhs = qfactorial(&u, n as u32).scale(&(rat_int(1) / rat_int(perms.len() as i64)));
    for i in 0..n {
        for j in i + 1..n {
            rhs = rhs.mul(&omega(&x[j].div(&x[i])?)?);
        }
    }
    let mut out = Outcome::new();
    let diff = lhs.sub(&rhs);
    out.expect(diff.is_zero(), || format!("symmetrization identity n={n}: difference {}", diff.to_text()));
    Ok(out)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for w in permutations(n - 1) {
        for pos in 0..=w.len() {
            let mut v = w.clone();
            v.insert(pos, n - 1);
            out.push(v);
        }
    }
    out
}

/// Triangularity of `H_r` on the `g_λ` basis with respect to dominance, observed on all
/// partitions of each degree `<= cap`. Returned as a note per `(r, degree)`.
pub fn hr_triangularity<F: Scalar>(p: &Params<F>, r: usize, cap: u32) -> Result<Outcome> {
    let fk = Fock::new(p);
    let mut out = Outcome::new();
    for d in 1..=cap {
        let parts = partitions(d);
        // expand H_r g_λ in the g basis by solving against the g_μ
        let gs: Vec<FockVector<F>> = parts.iter().map(|l| fk.phi_vector(&l.0, d)).collect::<Result<_>>()?;
        let ms: Vec<FockVector<F>> = parts.iter().map(|l| fk.monomial(l, d)).collect::<Result<_>>()?;
        // g_λ is dual to m_λ, so the g-coordinates of w are ⟨w, m_μ⟩
        let mut upper = true;
        let mut lower = true;
        for (i, l) in parts.iter().enumerate() {
            let w = fk.apply_hr(r, &gs[i])?;
            for (j, m) in parts.iter().enumerate() {
                if fk.inner(&w, &ms[j])?.is_zero() || l == m {
                    continue;
                }
                if !l.dominates(m) {
                    lower = false;
                }
                if !m.dominates(l) {
                    upper = false;
                }
            }
        }
        out.note(format!("H_{r} on g_λ, degree {d}: image below in dominance {lower}, above {upper}"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::sampled;
    use crate::scalar::rat;

    fn fock(seed: u64) -> Fock<Rat> {
        let (p, _) = sampled(2, seed);
        Fock::new(&p)
    }

    /// Torus constant term of `∏_{i<j} ω(z_j/z_i) z^μ` for `r <= 3`, summed as geometric series.
    fn torus_ct(fk: &Fock<Rat>, mu: &[i32]) -> Rat {
        let c = |k: i32| fk.omega_coeff(k).unwrap();
        match mu.len() {
            1 => if mu[0] == 0 { rat(1, 1) } else { rat(0, 1) },
            2 => {
                // z_1^{-k} z_2^k against z^μ
                if mu[0] + mu[1] != 0 { rat(0, 1) } else { c(mu[0]) }
            }
            3 => {
                if mu.iter().sum::<i32>() != 0 {
                    return rat(0, 1);
                }
                let (m1, m2) = (mu[0], mu[1]);
                let b = m1.abs().max(m2.abs()) + 1;
                let u = fk.t.inv().unwrap();
                let a = c(1) / u.clone();
                let mut acc = rat(0, 1);
                for k in -b + 1..b {
                    acc += c(k) * c(m1 - k) * c(k + m2);
                }
                let tail = |e: i32| a.clone().pow(3) * u.pow_i(e as i64).unwrap() / (rat(1, 1) - u.pow_i(3).unwrap());
                acc + tail(3 * b + m2 - m1) + tail(3 * b + m1 - m2)
            }
            _ => unreachable!(),
        }
    }

    /// `H_r` from the full bilateral kernel, for comparison with the half-weight route.
    fn apply_hr_torus(fk: &Fock<Rat>, r: usize, v: &FockVector<Rat>) -> FockVector<Rat> {
        let dmax = v.max_degree();
        let mut states = vec![(Vec::<u32>::new(), v.clone())];
        for _ in 0..r {
            let mut next = Vec::new();
            for (b, w) in &states {
                for k in 0..=w.max_degree() {
                    let x = fk.eta_annihilate(k, w).unwrap();
                    if !x.is_zero() {
                        let mut b = b.clone();
                        b.push(k);
                        next.push((b, x));
                    }
                }
            }
            states = next;
        }
        let norm = qfactorial(&fk.t.inv().unwrap(), r as u32) / (1..=r as i64).map(rat_int).product::<Rat>();
        let mut out = FockVector::zero(v.cap);
        for (beta, w) in &states {
            let total: u32 = beta.iter().sum();
            for gamma in compositions(total, r) {
                // monomial z^{γ−β}
                let mu: Vec<i32> = gamma.iter().zip(beta).map(|(g, b)| *g as i32 - *b as i32).collect();
                let ct = torus_ct(fk, &mu);
                if ct.is_zero() {
                    continue;
                }
                let mut x = w.scale(&(ct * norm.clone()));
                for &g in &gamma {
                    x = x.mul(&fk.eta_creation(g, v.cap).unwrap());
                }
                out = out.add(&x);
            }
        }
        let _ = dmax;
        out
    }

    #[test]
    fn half_weight_matches_torus_kernel() {
        let fk = fock(3);
        for r in 1..=3 {
            for d in 0..=3 {
                for l in partitions(d) {
                    let v = FockVector::basis(l.clone(), &rat(1, 1), 4);
                    assert_eq!(fk.apply_hr(r, &v).unwrap().first_mismatch(&apply_hr_torus(&fk, r, &v)), None, "r={r} λ={}", l.text());
                }
            }
        }
    }

    #[test]
    fn vacuum_and_first_level() {
        let fk = fock(7);
        let one = rat(1, 1);
        let vac = FockVector::vacuum(&one, 3);
        assert_eq!(fk.apply_hr(1, &vac).unwrap(), vac);
        assert!(fk.heisenberg(1, &vac).unwrap().is_zero());
        let comm = fk.heisenberg(1, &fk.heisenberg(-1, &vac).unwrap()).unwrap();
        let want = (rat(1, 1) - fk.q.clone()) / (rat(1, 1) - fk.t.clone());
        assert_eq!(comm, vac.scale(&want));
        let pp = fk.heisenberg(-2, &fk.heisenberg(-1, &vac).unwrap()).unwrap();
        assert_eq!(pp, FockVector::basis(Partition::new(vec![2, 1]), &one, 3));
        // φ_{-1}|0⟩ = (1 − t)/(1 − q) p_1 = Q_(1)
        let phi1 = fk.phi_mode(1, 3).unwrap();
        let want = FockVector::basis(Partition::new(vec![1]), &one, 3).scale(&((rat(1, 1) - fk.t.clone()) / (rat(1, 1) - fk.q.clone())));
        assert_eq!(phi1, want);
        assert_eq!(fk.macdonald_oracle(&Partition::new(vec![1]), 3).unwrap().with_cap(3), want);
        // H_1 Q_(1) = (1 + (t − 1)(q − 1)/t) Q_(1)
        let ev = rat(1, 1) + (fk.t.clone() - rat(1, 1)) * (fk.q.clone() - rat(1, 1)) / fk.t.clone();
        assert_eq!(fk.apply_hr(1, &want).unwrap(), want.scale(&ev));
        assert_eq!(fk.omega_coeff(0).unwrap(), rat(2, 1) / (rat(1, 1) + fk.t.inv().unwrap()));
    }

    #[test]
    fn one_row_oracle_is_phi_mode() {
        let fk = fock(11);
        for k in 1..=4 {
            let q = fk.macdonald_oracle(&Partition::new(vec![k]), k).unwrap();
            assert_eq!(q, fk.phi_mode(k, k).unwrap(), "k={k}");
        }
    }

    #[test]
    fn g_is_dual_to_m() {
        let fk = fock(5);
        for d in 1..=4 {
            for l in partitions(d) {
                let g = fk.phi_vector(&l.0, d).unwrap();
                for m in partitions(d) {
                    let ip = fk.inner(&g, &fk.monomial(&m, d).unwrap()).unwrap();
                    assert_eq!(ip, if l == m { rat(1, 1) } else { rat(0, 1) }, "{} {}", l.text(), m.text());
                }
            }
        }
    }

    #[test]
    fn jing_jozefiak_case() {
        let (p, _) = sampled(2, 13);
        let fk = Fock::new(&p);
        let ps = raising_params(&p, &[1, 1]).unwrap();
        let f = crate::spectral::first_eigenfunction_n2(&ps, 2).unwrap();
        let got = fk.raising_from_series(&[1, 1], &f).unwrap();
        let q11 = fk.macdonald_oracle(&Partition::new(vec![1, 1]), 2).unwrap();
        assert!(got.ratio_to(&q11).is_some_and(|c| !c.is_zero()));
        // single variable: f = 1
        assert_eq!(raising_integral(&p, &[1]).unwrap(), fk.phi_mode(1, 1).unwrap());
    }

    #[test]
    fn guessed_n3_series_raises() {
        let (p, _) = sampled(3, 17);
        let fk = Fock::new(&p);
        let ps = raising_params(&p, &[2, 1, 0]).unwrap();
        let f = crate::spectral::first_eigenfunction_n3(&ps, 3).unwrap();
        let got = fk.raising_from_series(&[2, 1, 0], &f).unwrap();
        let q21 = fk.macdonald_oracle(&Partition::new(vec![2, 1]), 3).unwrap();
        assert!(got.ratio_to(&q21).is_some_and(|c| !c.is_zero()));
    }

    #[test]
    fn symmetrization_identity_holds() {
        assert!(symmetrization_identity(2).unwrap().passed());
    }

    #[test]
    fn fixture_roundtrip() {
        let fk = fock(2);
        let v = fk.macdonald_oracle(&Partition::new(vec![2, 1]), 3).unwrap();
        let back = FockVector::from_fixture(&v.to_fixture(), crate::scalar::parse_rat).unwrap();
        assert_eq!(back, v);
    }
}
