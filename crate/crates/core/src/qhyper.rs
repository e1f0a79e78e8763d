//! Basic hypergeometric series `_{r+1}φ_r` and the identity suite.

use crate::check::Outcome;
use crate::error::{EngineError, Result};
use crate::params::{self, Mode, QAdic};
use crate::scalar::{qpoch, qpoch_multi, Laurent, ParamScalar, Rat, Sampler, Scalar, ScalarError, Var};
use crate::series::{expand_qbinomial, Exps, RatioSeries};

/// `_{r+1}φ_r(num; den; p, z)` with the convention that term `k` is
/// `∏(num;p)_k / ∏(den;p)_k · z^k / (p;p)_k`.
#[derive(Clone, Debug)]
pub struct PhiSpec<F> {
    pub num: Vec<F>,
    pub den: Vec<F>,
    pub base: F,
}

impl<F: Scalar> PhiSpec<F> {
    pub fn new(num: Vec<F>, den: Vec<F>, base: F) -> Self {
        PhiSpec { num, den, base }
    }

    /// Coefficients of `z^k` for `k ≤ kmax`. Terminates early (remaining
    /// coefficients zero) when a numerator factor vanishes; a vanishing
    /// denominator factor before that is a pole error.
    pub fn coeffs(&self, kmax: usize) -> std::result::Result<Vec<F>, ScalarError> {
        let one = self.base.one_like();
        let mut out = vec![one.clone()];
        let mut term = one.clone();
        let mut pk = one.clone(); // p^{k-1}
        for k in 1..=kmax {
            let mut num = one.clone();
            for a in &self.num {
                num = num.mul(&a.mul(&pk).one_minus());
            }
            if num.is_zero() {
                out.resize(kmax + 1, one.zero_like());
                return Ok(out);
            }
            let mut den = pk.mul(&self.base).one_minus();
            for b in &self.den {
                den = den.mul(&b.mul(&pk).one_minus());
            }
            if den.is_zero() {
                return Err(ScalarError::Pole(format!("denominator parameter pole at k={k}")));
            }
            term = term.mul(&num).div(&den)?;
            out.push(term.clone());
            pk = pk.mul(&self.base);
        }
        Ok(out)
    }

    /// Finite sum `Σ_{k ≤ kmax} c_k z^k` for a scalar argument.
    pub fn sum(&self, z: &F, kmax: usize) -> std::result::Result<F, ScalarError> {
        let cs = self.coeffs(kmax)?;
        let mut acc = z.zero_like();
        let mut zp = z.one_like();
        for c in cs {
            acc = acc.add(&c.mul(&zp));
            zp = zp.mul(z);
        }
        Ok(acc)
    }
}

/// The series `φ(z)` with `z = coef · x^e`, truncated at total degree `cap`.
pub fn phi_series<F: Scalar>(n: usize, spec: &PhiSpec<F>, e: &Exps, coef: &F, cap: i32) -> Result<RatioSeries<F>> {
    let d = e.degree().max(1);
    let kmax = (cap / d).max(0) as usize;
    let cs = spec.coeffs(kmax)?;
    Ok(crate::series::compose(n, cap, &cs, e, coef))
}

/// `(x;p)_∞` truncated to `terms` factors; exact modulo the q-adic precision
/// when `p` has positive valuation and enough factors are taken.
pub fn qinf<F: Scalar>(x: &F, p: &F, terms: usize) -> F {
    let mut acc = x.one_like();
    let mut cur = x.clone();
    for _ in 0..terms {
        acc = acc.mul(&cur.one_minus());
        cur = cur.mul(p);
    }
    acc
}

/// Number of factors of `(x;q)_∞` that matter modulo `Q^prec` when `x` has
/// valuation `>= 0`.
pub fn qinf_terms(prec: i32) -> usize {
    (prec.max(0) as usize) / 2 + 2
}

fn z1() -> Exps {
    Exps::from_slice(&[1])
}

// ---------------------------------------------------------------------------
// identity checks, generic in the scalar backing

/// Eq. (2phi1-1) via the q-binomial theorem, plus the functional equation
/// `(1 − z) f(z) = (1 − a z) f(qz)` as an independent check of the product side.
pub fn check_qbinomial<F: Scalar>(a: &F, b: &F, q: &F, cap: i32) -> Result<Outcome> {
    let one = q.one_like();
    let mut out = Outcome::new();
    let lhs = phi_series(2, &PhiSpec::new(vec![a.clone(), b.clone()], vec![b.clone()], q.clone()), &z1(), &one, cap)?;
    let rhs = expand_qbinomial(2, a, &one, q, &z1(), &one, cap)?;
    out.expect_series("2phi1(a,b;b;q,z) vs (az)_inf/(z)_inf", &lhs, &rhs);
    // f(qz): scale coefficient k by q^k
    let mut fq = rhs.empty_like();
    for (e, c) in rhs.terms() {
        fq.add_term(e.clone(), c.mul(&q.pow_i(e.degree() as i64)?));
    }
    let left = crate::series::one_minus(2, &z1(), &one, cap).mul(&rhs)?;
    let right = crate::series::one_minus(2, &z1(), a, cap).mul(&fq)?;
    out.expect_series("functional equation of (az)_inf/(z)_inf", &left, &right);
    Ok(out)
}

/// Eqs. (2phi1-2) and (2phi1-3).
pub fn check_product_forms<F: Scalar>(a: &F, q: &F, cap: i32) -> Result<Outcome> {
    let one = q.one_like();
    let mut out = Outcome::new();
    let a2 = a.mul(a);
    let lhs = phi_series(2, &PhiSpec::new(vec![a2.clone(), a.mul(q)], vec![a.clone()], q.clone()), &z1(), &one, cap)?;
    let mut onepaz = RatioSeries::constant(2, cap, one.clone());
    onepaz.add_term(z1(), a.clone());
    let rhs = onepaz.mul(&expand_qbinomial(2, &a2.mul(q), &one, q, &z1(), &one, cap)?)?;
    out.expect_series("2phi1(a^2,aq;a;q,z) vs (1+az)(a^2qz)_inf/(z)_inf", &lhs, &rhs);
    let lhs = phi_series(2, &PhiSpec::new(vec![a.clone(), a.neg()], vec![q.neg()], q.clone()), &z1(), &one, cap)?;
    let rhs = expand_qbinomial(2, &a2, &one, &q.mul(q), &z1(), &one, cap)?;
    out.expect_series("2phi1(a,-a;-q;q,z) vs (a^2z;q^2)_inf/(z;q^2)_inf", &lhs, &rhs);
    Ok(out)
}

/// Balancing condition of the q-Pfaff-Saalschütz sum: `q · ∏num = ∏den`.
pub fn saalschutz_balanced<F: Scalar>(num: &[F], den: &[F], q: &F) -> bool {
    let pn = num.iter().fold(q.clone(), |acc, x| acc.mul(x));
    let pd = den.iter().fold(q.one_like(), |acc, x| acc.mul(x));
    pn.sub(&pd).is_zero()
}

/// GR (1.7.2): `3φ2(a,b,q^{-n}; c, ab q^{1-n}/c; q,q) = (c/a,c/b;q)_n/(c,c/(ab);q)_n`, `n ≤ nmax`.
pub fn check_saalschutz<F: Scalar>(a: &F, b: &F, c: &F, q: &F, nmax: usize) -> Result<Outcome> {
    let mut out = Outcome::new();
    for n in 0..=nmax {
        let qmn = q.pow_i(-(n as i64))?;
        let num = vec![a.clone(), b.clone(), qmn.clone()];
        let den = vec![c.clone(), a.mul(b).mul(&q.pow_i(1 - n as i64)?).div(c)?];
        if !saalschutz_balanced(&num, &den, q) {
            return Err(EngineError::Precondition(format!("Saalschütz balancing fails at n={n}")));
        }
        let lhs = PhiSpec::new(num, den, q.clone()).sum(q, n)?;
        let rhs = qpoch_multi(&[c.div(a)?, c.div(b)?], q, n as i64)?.div(&qpoch_multi(&[c.clone(), c.div(&a.mul(b))?], q, n as i64)?)?;
        out.expect(lhs.sub(&rhs).is_zero(), || format!("q-Pfaff-Saalschütz mismatch at n={n}: {} vs {}", lhs.to_text(), rhs.to_text()));
    }
    Ok(out)
}

/// Very-well-poised shape of a `6φ5`: numerators `(a, q√a, −q√a, b, c, d)`,
/// denominators `(√a, −√a, aq/b, aq/c, aq/d)`, argument `aq/(bcd)`.
pub fn very_well_poised<F: Scalar>(num: &[F], den: &[F], z: &F, q: &F) -> bool {
    if num.len() != 6 || den.len() != 5 {
        return false;
    }
    let a = &num[0];
    let aq = a.mul(q);
    let ok_root = den[0].mul(&den[0]).sub(a).is_zero() && den[1].add(&den[0]).is_zero();
    let ok_q = num[1].sub(&q.mul(&den[0])).is_zero() && num[2].sub(&q.mul(&den[1])).is_zero();
    let ok_pairs = (3..6).all(|k| num[k].mul(&den[k - 1]).sub(&aq).is_zero());
    let ok_z = z.mul(&num[3]).mul(&num[4]).mul(&num[5]).sub(&aq).is_zero();
    ok_root && ok_q && ok_pairs && ok_z
}

fn six_phi_five<F: Scalar>(ah: &F, b: &F, c: &F, d: &F, q: &F) -> Result<(PhiSpec<F>, F)> {
    let a = ah.mul(ah);
    let aq = a.mul(q);
    let num = vec![a.clone(), q.mul(ah), q.mul(ah).neg(), b.clone(), c.clone(), d.clone()];
    let den = vec![ah.clone(), ah.neg(), aq.div(b)?, aq.div(c)?, aq.div(d)?];
    let z = aq.div(&b.mul(c).mul(d))?;
    if !very_well_poised(&num, &den, &z, q) {
        return Err(EngineError::Precondition("6phi5 parameters are not very-well-poised".into()));
    }
    Ok((PhiSpec::new(num, den, q.clone()), z))
}

/// Terminating GR (2.4.2) with `b = q^{-n}`:
/// `6φ5(...) = (aq, aq/(cd);q)_n / (aq/c, aq/d;q)_n`.
pub fn check_6phi5_terminating<F: Scalar>(ah: &F, c: &F, d: &F, q: &F, nmax: usize) -> Result<Outcome> {
    let mut out = Outcome::new();
    for n in 0..=nmax {
        let b = q.pow_i(-(n as i64))?;
        let (spec, z) = six_phi_five(ah, &b, c, d, q)?;
        let lhs = spec.sum(&z, n)?;
        let a = ah.mul(ah);
        let aq = a.mul(q);
        let rhs = qpoch_multi(&[aq.clone(), aq.div(&c.mul(d))?], q, n as i64)?.div(&qpoch_multi(&[aq.div(c)?, aq.div(d)?], q, n as i64)?)?;
        out.expect(lhs.sub(&rhs).is_zero(), || format!("terminating 6phi5 mismatch at n={n}"));
    }
    Ok(out)
}

/// Nonterminating GR (2.4.2) in q-adic mode, modulo `Q^prec`.
pub fn check_6phi5_qadic(ah: &QAdic, b: &QAdic, c: &QAdic, d: &QAdic, q: &QAdic, prec: i32) -> Result<Outcome> {
    let mut out = Outcome::new();
    let (spec, z) = six_phi_five(ah, b, c, d, q)?;
    let kmax = (prec.max(0) as usize) / 2 + 1;
    let lhs = spec.sum(&z, kmax)?;
    let a = ah.mul(ah);
    let aq = a.mul(q);
    let terms = qinf_terms(prec);
    let inf = |x: QAdic| qinf(&x, q, terms);
    let num = inf(aq.clone()).mul(&inf(aq.div(&b.mul(c))?)).mul(&inf(aq.div(&b.mul(d))?)).mul(&inf(aq.div(&c.mul(d))?));
    let den = inf(aq.div(b)?).mul(&inf(aq.div(c)?)).mul(&inf(aq.div(d)?)).mul(&inf(z.clone()));
    let rhs = num.div(&den)?;
    let ok = lhs.eq_mod(&rhs, prec);
    out.expect(ok, || format!("nonterminating 6phi5 differs at Q^{:?}", lhs.first_difference(&rhs, prec)));
    if lhs.sub(&rhs).prec() < prec {
        return Err(EngineError::Scalar(ScalarError::InsufficientOrder(format!("6phi5 comparison reached only Q^{}", lhs.sub(&rhs).prec()))));
    }
    Ok(out)
}

/// Jackson's transformation, as polynomials in `z` for each `n ≤ nmax`:
/// `2φ1(q^{-n},b;c;q,z) = (c/b;q)_n/(c;q)_n · 3φ2(q^{-n}, b, bzq^{-n}/c; bq^{1-n}/c, 0; q, q)`.
pub fn check_jackson<F: Scalar>(b: &F, c: &F, q: &F, nmax: usize) -> Result<Outcome> {
    let one = q.one_like();
    let mut out = Outcome::new();
    for n in 0..=nmax {
        let cap = n as i32;
        let qmn = q.pow_i(-(n as i64))?;
        let lhs = phi_series(2, &PhiSpec::new(vec![qmn.clone(), b.clone()], vec![c.clone()], q.clone()), &z1(), &one, cap)?;
        let pref = qpoch(&c.div(b)?, q, n as i64)?.div(&qpoch(c, q, n as i64)?)?;
        let d1 = b.mul(&q.pow_i(1 - n as i64)?).div(c)?;
        let mut rhs = RatioSeries::zero(2, cap);
        let mut zfac = RatioSeries::constant(2, cap, one.clone()); // (b z q^{-n}/c; q)_k
        let base = b.mul(&qmn).div(c)?;
        for k in 0..=n {
            let coef = qpoch_multi(&[qmn.clone(), b.clone()], q, k as i64)?
                .div(&qpoch_multi(&[d1.clone(), q.clone()], q, k as i64)?)?
                .mul(&q.pow_i(k as i64)?);
            rhs = rhs.add(&zfac.scale(&coef))?;
            let factor = crate::series::one_minus(2, &z1(), &base.mul(&q.pow_i(k as i64)?), cap);
            zfac = zfac.mul(&factor)?;
        }
        let rhs = rhs.scale(&pref);
        out.expect_series(&format!("Jackson transformation at n={n}"), &lhs, &rhs);
    }
    Ok(out)
}

/// The n = 3 resummation of the product-formula proof, including the
/// intermediate 3φ2 form obtained by changing the order of summation.
pub fn check_n3_resummation<F: Scalar>(q: &F, t: &F, cap: i32) -> Result<Outcome> {
    let one = q.one_like();
    let mut out = Outcome::new();
    let tinv = t.inv()?;
    let qt1 = q.mul(&tinv);
    let qt2 = qt1.mul(&tinv);
    let qt3 = qt2.mul(&tinv);
    let mut lhs = RatioSeries::zero(2, cap);
    for k in 0..=cap.max(0) as usize {
        let coef = qpoch(t, q, k as i64)?
            .mul(&qpoch(t, q, k as i64)?)
            .div(&qpoch(q, q, k as i64)?.mul(&qpoch(&qt2, q, k as i64)?))?
            .mul(&qt2.pow_i(k as i64)?);
        let qk1 = q.pow_i(k as i64 + 1)?;
        let spec = PhiSpec::new(vec![qk1.mul(&tinv), qt3.clone()], vec![qk1.mul(&tinv).mul(&tinv)], q.clone());
        let inner = phi_series(2, &spec, &z1(), t, cap - k as i32)?;
        // cap of the product is min(cap + 0, (cap - k) + k) = cap
        let inner = RatioSeries::monomial(2, cap, z1().scale(k as i32), coef).mul(&inner)?;
        lhs = lhs.add(&inner)?;
    }
    let mut mid = RatioSeries::zero(2, cap);
    for m in 0..=cap.max(0) as usize {
        let qmm = q.pow_i(-(m as i64))?;
        let inner = PhiSpec::new(vec![t.clone(), t.clone(), qmm.clone()], vec![qt1.clone(), qmm.mul(&t.pow_i(3)?)], q.clone()).sum(q, m)?;
        let coef = qpoch_multi(&[qt1.clone(), qt3.clone()], q, m as i64)?
            .div(&qpoch_multi(&[qt2.clone(), q.clone()], q, m as i64)?)?
            .mul(&t.pow_i(m as i64)?)
            .mul(&inner);
        mid.add_term(z1().scale(m as i32), coef);
    }
    let rhs = expand_qbinomial(2, &qt1, t, q, &z1(), &one, cap)?;
    out.expect_series("resummed double series vs 3phi2 form", &lhs, &mid);
    out.expect_series("3phi2 form vs (qt^-1 z)_inf/(t z)_inf", &mid, &rhs);
    Ok(out)
}

// ---------------------------------------------------------------------------
// driver

pub const TAGS: [&str; 6] = ["q-binomial", "product-forms", "q-pfaff-saalschutz", "6phi5", "jackson", "n3-resummation"];

/// Run one identity tag at one instance drawn from `seed`.
pub fn verify_identity(tag: &str, seed: u64, cap: i32, mode: Mode) -> Result<Outcome> {
    let mut sm = Sampler::new(seed);
    let vals: Vec<Rat> = sm.rats(6);
    match mode {
        Mode::Symbolic => {
            let v = |x: Var| ParamScalar::var(x);
            let p = params::symbolic(2);
            run_tag(tag, &[v(Var::A), v(Var::s(1)), v(Var::s(2)), v(Var::T)], &p.q, &p.t, cap)
        }
        Mode::Sampled => {
            let (p, _) = params::sampled(2, seed);
            run_tag(tag, &vals[..4], &p.q, &p.t, cap)
        }
        Mode::QAdic => {
            let prec = 2 * cap + 2;
            let (p, _) = params::qadic(2, seed, prec);
            let c = |r: &Rat| Laurent::constant(Var::Q, r.clone(), prec);
            let xs: Vec<QAdic> = vals[..4].iter().map(c).collect();
            if tag == "6phi5" {
                let mut o = check_6phi5_qadic(&xs[0], &xs[1], &xs[2], &xs[3], &p.q, prec)?;
                o.merge(check_6phi5_terminating(&xs[0], &xs[2], &xs[3], &p.q, cap.max(0) as usize)?);
                return Ok(o);
            }
            run_tag(tag, &xs, &p.q, &p.t, cap)
        }
    }
}

fn run_tag<F: Scalar>(tag: &str, v: &[F], q: &F, t: &F, cap: i32) -> Result<Outcome> {
    let nmax = cap.max(0) as usize;
    match tag {
        "q-binomial" => check_qbinomial(&v[0], &v[1], q, cap),
        "product-forms" => check_product_forms(&v[0], q, cap),
        "q-pfaff-saalschutz" => check_saalschutz(&v[0], &v[1], &v[2], q, nmax),
        "6phi5" => check_6phi5_terminating(&v[0], &v[1], &v[2], q, nmax),
        "jackson" => check_jackson(&v[0], &v[1], q, nmax),
        "n3-resummation" => check_n3_resummation(q, t, cap),
        _ => Err(EngineError::Precondition(format!("unknown identity tag '{tag}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int};

    #[test]
    fn numerator_one_gives_unit_series() {
        let q = rat(1, 9);
        let spec = PhiSpec::new(vec![rat_int(1), rat(3, 5)], vec![rat(2, 7)], q);
        let cs = spec.coeffs(6).unwrap();
        assert_eq!(cs[0], rat_int(1));
        assert!(cs[1..].iter().all(Scalar::is_zero));
    }

    #[test]
    fn terminates_at_q_minus_m() {
        let q = rat(1, 4);
        let spec = PhiSpec::new(vec![q.pow_i(-2).unwrap(), rat(3, 5)], vec![rat(2, 7)], q);
        let cs = spec.coeffs(6).unwrap();
        assert!(!Scalar::is_zero(&cs[2]));
        assert!(cs[3..].iter().all(Scalar::is_zero));
    }

    #[test]
    fn denominator_pole_reports_k() {
        let q = rat(1, 4);
        // c = q^{-1} makes (c;q)_2 vanish
        let spec = PhiSpec::new(vec![rat(3, 5), rat(2, 5)], vec![q.pow_i(-1).unwrap()], q);
        match spec.coeffs(4) {
            Err(ScalarError::Pole(m)) => assert!(m.contains("k=2")),
            other => panic!("expected pole, got {other:?}"),
        }
    }

    #[test]
    fn every_tag_passes_sampled() {
        for tag in TAGS {
            let o = verify_identity(tag, 7, 6, Mode::Sampled).unwrap();
            assert!(o.passed(), "{tag}: {:?}", o.failures);
        }
    }
}
