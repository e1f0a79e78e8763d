//! Parameter contexts: the values of `Q = q^{1/2}`, `T = t^{1/2}`, `s_i` and `α`
//! in whichever scalar backing a computation runs.

use crate::scalar::{Laurent, ParamScalar, Rat, Sampler, Scalar, ScalarError, Var};
use serde::Serialize;
use std::collections::BTreeMap;

/// Computation mode, as reported in check output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Symbolic,
    Sampled,
    QAdic,
}

impl Mode {
    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "symbolic" => Some(Mode::Symbolic),
            "sampled" => Some(Mode::Sampled),
            "q-adic" | "qadic" => Some(Mode::QAdic),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Params<F> {
    /// `Q = q^{1/2}`
    pub qh: F,
    /// `T = t^{1/2}`
    pub th: F,
    pub q: F,
    pub t: F,
    pub s: Vec<F>,
    pub alpha: F,
}

impl<F: Scalar> Params<F> {
    pub fn new(qh: F, th: F, s: Vec<F>, alpha: F) -> Self {
        let q = qh.mul(&qh);
        let t = th.mul(&th);
        Params { qh, th, q, t, s, alpha }
    }
    pub fn n(&self) -> usize {
        self.s.len()
    }
    pub fn one(&self) -> F {
        self.q.one_like()
    }
    pub fn zero(&self) -> F {
        self.q.zero_like()
    }
    pub fn c(&self, v: i64) -> F {
        self.q.from_i64_like(v)
    }
    pub fn r(&self, v: &Rat) -> F {
        self.q.from_rat_like(v)
    }
    /// `q^k` for any integer `k`.
    pub fn qpow(&self, k: i64) -> Result<F, ScalarError> {
        self.q.pow_i(k)
    }
    pub fn tpow(&self, k: i64) -> Result<F, ScalarError> {
        self.t.pow_i(k)
    }
    /// `q^{a/2} t^{b/2}`.
    pub fn qt_half(&self, a: i64, b: i64) -> Result<F, ScalarError> {
        Ok(self.qh.pow_i(a)?.mul(&self.th.pow_i(b)?))
    }

    pub fn with_s(&self, s: Vec<F>) -> Self {
        Params { s, ..self.clone() }
    }
    pub fn with_alpha(&self, alpha: F) -> Self {
        Params { alpha, ..self.clone() }
    }
    pub fn with_th(&self, th: F) -> Self {
        Params::new(self.qh.clone(), th, self.s.clone(), self.alpha.clone())
    }
    /// Same values with `n` parameters `s_i = 1`.
    pub fn homogeneous(&self, n: usize) -> Self {
        self.with_s(vec![self.one(); n])
    }
    /// The principal specialization `s = (1, t, …, t^{n-1})`.
    pub fn principal(&self, n: usize) -> Self {
        let mut s = Vec::with_capacity(n);
        let mut cur = self.one();
        for _ in 0..n {
            s.push(cur.clone());
            cur = cur.mul(&self.t);
        }
        self.with_s(s)
    }
    /// Specialize `t = q^m` (that is `T = Q^m`).
    pub fn at_t_qm(&self, m: i64) -> Result<Self, ScalarError> {
        Ok(self.with_th(self.qh.pow_i(m)?))
    }
}

/// Fully symbolic parameters `Q, T, S_1..S_n, A`.
pub fn symbolic(n: usize) -> Params<ParamScalar> {
    Params::new(
        ParamScalar::var(Var::Q),
        ParamScalar::var(Var::T),
        (1..=n).map(|i| ParamScalar::var(Var::s(i))).collect(),
        ParamScalar::var(Var::A),
    )
}

/// A random rational point; the values are also returned for the report.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SamplePoint {
    pub seed: u64,
    pub values: BTreeMap<String, String>,
}

pub struct RawPoint {
    pub qh: Rat,
    pub th: Rat,
    pub s: Vec<Rat>,
    pub alpha: Rat,
}

impl RawPoint {
    pub fn draw(n: usize, seed: u64) -> RawPoint {
        let mut sm = Sampler::new(seed);
        RawPoint { qh: sm.rat(), th: sm.rat(), s: sm.rats(n), alpha: sm.rat() }
    }
    pub fn record(&self, seed: u64, with_q: bool) -> SamplePoint {
        let mut values = BTreeMap::new();
        if with_q {
            values.insert("Q".into(), self.qh.to_text());
        }
        values.insert("T".into(), self.th.to_text());
        for (i, s) in self.s.iter().enumerate() {
            values.insert(format!("S{}", i + 1), s.to_text());
        }
        values.insert("A".into(), self.alpha.to_text());
        SamplePoint { seed, values }
    }
}

/// Sampled parameters: every formal variable replaced by a random rational.
pub fn sampled(n: usize, seed: u64) -> (Params<Rat>, SamplePoint) {
    let p = RawPoint::draw(n, seed);
    let rec = p.record(seed, true);
    (Params::new(p.qh, p.th, p.s, p.alpha), rec)
}

pub type QAdic = Laurent<Rat>;

/// q-adic parameters: `Q` stays formal (working precision `prec`), the rest are sampled.
pub fn qadic(n: usize, seed: u64, prec: i32) -> (Params<QAdic>, SamplePoint) {
    let p = RawPoint::draw(n, seed);
    let rec = p.record(seed, false);
    let one = Rat::from_integer(1.into());
    let gen = Laurent::gen(Var::Q, one.clone(), prec);
    let c = |r: Rat| Laurent::constant(Var::Q, r, prec);
    (Params::new(gen, c(p.th), p.s.into_iter().map(c).collect(), c(p.alpha)), rec)
}

/// q-adic parameters with explicit values.
pub fn qadic_with(th: Rat, s: Vec<Rat>, alpha: Rat, prec: i32) -> Params<QAdic> {
    let one = Rat::from_integer(1.into());
    let gen = Laurent::gen(Var::Q, one, prec);
    let c = |r: Rat| Laurent::constant(Var::Q, r, prec);
    Params::new(gen, c(th), s.into_iter().map(c).collect(), c(alpha))
}
