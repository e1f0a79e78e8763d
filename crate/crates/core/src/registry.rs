//! Every addressable check, its defaults, and the desk-scale suite.
//!
//! A [`Request`] names a check id and optionally overrides its defaults; [`run`]
//! resolves it and turns the outcome into a [`CheckReport`]. Unknown ids are the
//! only hard error, everything else is reported through the verdict.

use crate::cache;
use crate::check::{run_job, CheckReport, Job, Outcome, RunEnv};
use crate::error::{EngineError, Result};
use crate::fock;
use crate::golden;
use crate::operators;
use crate::params::{self, Mode, Params};
use crate::qhyper;
use crate::quasi::{self, Provenance, QuasiFunction, Special, Variant};
use crate::scalar::{parse_rat, ParamScalar, Scalar, ScalarError};
use crate::series::{Exps, RatioSeries};
use crate::spectral::{self, ClosedFormJob, ProductJob, ShiftJob, WeylJob};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;

/// One check invocation, as given on the command line or in a manifest.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Request {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qorder: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, String>,
}

impl Request {
    pub fn new(id: &str) -> Self {
        Request { id: id.to_string(), ..Request::default() }
    }
    pub fn n(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }
    pub fn cap(mut self, cap: i32) -> Self {
        self.cap = Some(cap);
        self
    }
    pub fn qorder(mut self, m: i32) -> Self {
        self.qorder = Some(m);
        self
    }
    pub fn seed(mut self, s: u64) -> Self {
        self.seed = Some(s);
        self
    }
    pub fn mode(mut self, m: &str) -> Self {
        self.mode = Some(m.to_string());
        self
    }
    pub fn points(mut self, k: usize) -> Self {
        self.points = Some(k);
        self
    }
    pub fn param(mut self, k: &str, v: &str) -> Self {
        self.params.insert(k.to_string(), v.to_string());
        self
    }
}

/// A manifest is either `{"checks": [...]}` or a bare array of requests.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Manifest {
    Wrapped { checks: Vec<Request> },
    Bare(Vec<Request>),
}

impl Manifest {
    pub fn parse(text: &str) -> std::result::Result<Vec<Request>, serde_json::Error> {
        Ok(match serde_json::from_str::<Manifest>(text)? {
            Manifest::Wrapped { checks } => checks,
            Manifest::Bare(v) => v,
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("unknown check id '{0}' (see `qmacv list`)")]
    UnknownId(String),
}

/// Registered check with its defaults.
#[derive(Clone, Debug)]
pub struct Entry {
    pub id: String,
    pub topic: &'static str,
    pub about: String,
    pub n: usize,
    pub cap: i32,
    /// `None` means `2·cap + 4`
    pub qorder: Option<i32>,
    pub mode: Mode,
    /// modes the check accepts; the first is the default
    pub modes: &'static [Mode],
    pub points: usize,
    pub params: Vec<(&'static str, String)>,
}

const GENERIC: &[Mode] = &[Mode::Sampled, Mode::Symbolic];
const QADIC: &[Mode] = &[Mode::QAdic];
const EXACT: &[Mode] = &[Mode::Sampled];
const SYMBOLIC: &[Mode] = &[Mode::Symbolic];

fn entry(id: &str, topic: &'static str, about: &str, n: usize, cap: i32, modes: &'static [Mode]) -> Entry {
    Entry { id: id.to_string(), topic, about: about.to_string(), n, cap, qorder: None, mode: modes[0], modes, points: if modes[0] == Mode::QAdic { 2 } else { 5 }, params: vec![] }
}

impl Entry {
    fn qorder(mut self, m: i32) -> Self {
        self.qorder = Some(m);
        self
    }
    fn points(mut self, k: usize) -> Self {
        self.points = k;
        self
    }
    fn param(mut self, k: &'static str, v: &str) -> Self {
        self.params.push((k, v.to_string()));
        self
    }
}

/// All registered checks, in listing order.
pub fn entries() -> Vec<Entry> {
    let mut v = vec![entry("qhyper.identity", "q-series identities", "one identity tag (param tag, default all) at random instances", 2, 10, GENERIC)
        .param("tag", "all")
        .param("instances", "3")];
    for tag in qhyper::TAGS {
        v.push(entry(&format!("qhyper.{tag}"), "q-series identities", &format!("the {tag} identity at random instances"), 2, 10, GENERIC).param("instances", "3"));
    }
    v.extend([
        entry("operators.integral-vs-spectral", "integral transform", "I(α) by constant terms vs its spectral definition, mod Q^(M+1)", 2, 3, QADIC).qorder(8),
        entry("operators.commute-d", "integral transform", "[I(α), D] = 0 on the integral side at `points` α-values", 2, 3, QADIC).qorder(8),
        entry("operators.integral-pair", "integral transform", "[I(α), I(β)] = 0 on the integral side", 2, 3, QADIC).qorder(6),
        entry("spectral.solve", "eigenfunctions", "solve D f = λ_j f (param j), check the residual, cached on disk", 2, 6, GENERIC),
        entry("spectral.closed-form", "eigenfunctions", "solver output vs the closed forms of f_0 for n = 2, 3", 2, 8, GENERIC),
        entry("spectral.shift", "eigenfunctions", "f_j as a shifted f_0 (param j)", 2, 4, GENERIC),
        entry("spectral.product_f0", "eigenfunctions", "f_0 at the principal specialization is a pair product (param route = a, b or both)", 2, 8, GENERIC).param("route", "both"),
        entry("spectral.weyl", "Weyl symmetry", "antisymmetrized Weyl images terminate (param m); four-term fixture for n = 4", 2, 6, GENERIC).param("m", "1"),
        entry("spectral.jordan", "Jordan structure", "generalized eigenspaces of D at homogeneous s vs Weyl orbits", 3, 3, EXACT),
        entry("spectral.generalized", "Jordan structure", "generalized eigenfunctions from the s → 1 limit", 2, 4, EXACT),
        entry("spectral.lemma", "Jordan structure", "expansions in (1 − s) of the degenerate eigenfunctions, to first order", 2, 4, EXACT).param("power-q", "false"),
        entry("spectral.chamber", "Jordan structure", "eigenfunctions indexed outside the chamber reduce to finitely many", 2, 4, EXACT),
        entry("quasi.build", "quasi-eigenfunction", "reconstruct F(α) from exact samples and compare with the closed form, cached on disk", 2, 3, EXACT),
        entry("quasi.covariance", "quasi-eigenfunction", "conditions (I) and (I') for F(α) (param variant = I, I' or both)", 2, 3, QADIC).qorder(8).points(3).param("variant", "both"),
        entry("quasi.iterative", "quasi-eigenfunction", "iterated integral construction vs the closed form (param kmax)", 2, 3, QADIC).qorder(8).param("kmax", "2"),
        entry("quasi.eigen-expansion", "quasi-eigenfunction", "F(α) expanded in eigenfunctions for n = 2", 2, 4, GENERIC),
        entry("quasi.product-simple", "special α products", "F at a special α is a product (param which = neg-sqrt-t, t, neg-one-n2)", 2, 8, GENERIC).param("which", "neg-sqrt-t"),
        entry("quasi.pfaffian", "special α products", "F at α = ±1 as a Pfaffian (param sign = 1, -1 or both)", 2, 6, GENERIC).param("sign", "both"),
        entry("quasi.gl", "special α products", "the G_ℓ product formula (params l, sign, budget)", 2, 3, GENERIC).param("l", "1").param("sign", "both").param("budget", "4096"),
        entry("quasi.embed", "special α products", "F at a special α lies in the expected generalized eigenspaces (param perturb)", 3, 3, GENERIC).param("perturb", "false"),
        entry("quasi.n4-initial", "quasi-eigenfunction", "the n = 4 fixture solves the initial condition", 4, 3, GENERIC),
        entry("quasi.n4-iterative", "quasi-eigenfunction", "the n = 4 fixture vs the iterated construction (slow)", 4, 3, QADIC).qorder(6),
        entry("fock.heisenberg", "Fock space", "Heisenberg commutation relations", 2, 4, GENERIC),
        entry("fock.hr", "Fock space", "[H_r, H_s] = 0 (params r, s; default all pairs up to rmax)", 2, 6, GENERIC).param("rmax", "3"),
        entry("fock.h1", "Fock space", "H_1 eigenvalues on the oracle Q_λ, |λ| ≤ cap", 2, 5, GENERIC),
        entry("fock.oracle", "Fock space", "pairing and one-row sanity of the Gram–Schmidt oracle", 2, 4, GENERIC),
        entry("fock.raising", "Fock space", "the raising integral is proportional to Q_λ, ℓ(λ) ≤ n, |λ| ≤ cap", 3, 4, GENERIC),
        entry("fock.eqhr", "Fock space", "H_r on symmetric functions in n variables vs D_n^r (param rmax)", 2, 3, GENERIC).param("rmax", "2"),
        entry("fock.family", "Fock space", "[D^r, D^s] = 0 on ratio series (params r, s)", 3, 4, GENERIC).param("r", "1").param("s", "2"),
        entry("fock.ope", "Fock space", "vertex operator products and the symmetrization identity", 2, 3, GENERIC),
        entry("fock.triangularity", "Fock space", "H_r in the dominance-ordered g_λ basis (observation only, param r)", 2, 4, GENERIC).param("r", "2"),
    ]);
    for g in golden::GOLDEN {
        v.push(entry(&format!("golden.{}", g.name), "golden fixtures", &format!("fresh computation vs fixtures/{} (param perturb = k bumps coefficient k)", g.file), 2, 0, SYMBOLIC));
    }
    v
}

pub fn find(id: &str) -> Option<Entry> {
    entries().into_iter().find(|e| e.id == id)
}

/// Request with all defaults filled in.
#[derive(Clone, Debug)]
pub struct Opts {
    pub n: usize,
    pub cap: i32,
    /// q-adic order `M`; results are compared modulo `Q^(M+1)`
    pub m: i32,
    pub seed: u64,
    pub mode: Mode,
    pub points: usize,
    pub params: BTreeMap<String, String>,
}

fn bad(msg: String) -> EngineError {
    EngineError::Precondition(msg)
}

impl Opts {
    pub fn get(&self, k: &str) -> Option<&str> {
        self.params.get(k).map(|s| s.as_str())
    }
    fn int(&self, k: &str) -> Result<i64> {
        let v = self.get(k).ok_or_else(|| bad(format!("missing parameter {k}")))?;
        v.parse().map_err(|_| bad(format!("parameter {k}={v} is not an integer")))
    }
    fn flag(&self, k: &str) -> Result<bool> {
        match self.get(k) {
            None | Some("false") | Some("0") => Ok(false),
            Some("true") | Some("1") => Ok(true),
            Some(v) => Err(bad(format!("parameter {k}={v} is not a boolean"))),
        }
    }
    fn signs(&self) -> Result<Vec<i32>> {
        match self.get("sign") {
            None | Some("both") => Ok(vec![-1, 1]),
            Some("1") | Some("+1") => Ok(vec![1]),
            Some("-1") => Ok(vec![-1]),
            Some(v) => Err(bad(format!("sign={v} must be 1, -1 or both"))),
        }
    }
    fn exps(&self, k: &str, default: Exps) -> Result<Exps> {
        let e = match self.get(k) {
            Some(v) => Exps::parse(v)?,
            None => default,
        };
        if e.len() != self.n - 1 {
            return Err(bad(format!("{k} = ({}) needs {} entries for n = {}", e.text(), self.n - 1, self.n)));
        }
        Ok(e)
    }
    fn env(&self) -> RunEnv {
        RunEnv::new(self.n, self.mode, self.seed).points(self.points).prec(self.m + 1)
    }
    fn ucap(&self) -> Result<u32> {
        u32::try_from(self.cap).map_err(|_| bad(format!("cap {} must be non-negative", self.cap)))
    }
    fn report_params(&self) -> BTreeMap<String, serde_json::Value> {
        let mut m = BTreeMap::new();
        m.insert("n".into(), self.n.into());
        m.insert("cap".into(), self.cap.into());
        m.insert("qorder".into(), self.m.into());
        m.insert("seed".into(), self.seed.into());
        m.insert("points".into(), self.points.into());
        for (k, v) in &self.params {
            m.insert(k.clone(), v.clone().into());
        }
        m
    }
}

fn resolve(e: &Entry, r: &Request) -> Result<Opts> {
    let mode = match &r.mode {
        None => e.mode,
        Some(s) => Mode::parse(s).ok_or_else(|| bad(format!("unknown mode '{s}'")))?,
    };
    if !e.modes.contains(&mode) {
        return Err(bad(format!("{} does not run in {mode:?} mode", e.id)));
    }
    let n = r.n.unwrap_or(e.n);
    if n < 1 {
        return Err(bad("n must be at least 1".into()));
    }
    let cap = r.cap.unwrap_or(e.cap);
    let mut params: BTreeMap<String, String> = e.params.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
    params.extend(r.params.clone());
    Ok(Opts { n, cap, m: r.qorder.or(e.qorder).unwrap_or(2 * cap + 4), seed: r.seed.unwrap_or(1), mode, points: r.points.unwrap_or(e.points), params })
}

/// Run one request. `timing` controls whether wall-clock time is recorded; without it
/// `timing-ms` is 0 so that identical invocations give identical reports.
pub fn run(req: &Request, timing: bool) -> std::result::Result<CheckReport, RegistryError> {
    let e = find(&req.id).ok_or_else(|| RegistryError::UnknownId(req.id.clone()))?;
    let start = Instant::now();
    let (res, params, mode, seed) = match resolve(&e, req) {
        Ok(o) => {
            // a panicking check becomes a failed report instead of taking its siblings down
            let res = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| execute(&e.id, &o))).unwrap_or_else(|p| {
                let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default();
                Err(EngineError::Other(format!("check panicked: {msg}")))
            });
            (res, o.report_params(), o.mode, o.seed)
        }
        Err(err) => (Err(err), BTreeMap::new(), e.mode, req.seed.unwrap_or(1)),
    };
    let ms = if timing { start.elapsed().as_millis() as u64 } else { 0 };
    Ok(CheckReport::from_result(&e.id, params, mode, vec![seed], ms, res))
}

/// Checks that run under any scalar backing.
struct Generic<'a> {
    id: &'a str,
    o: &'a Opts,
}

impl Job for Generic<'_> {
    fn run<F: Scalar>(&self, p: &Params<F>) -> Result<Outcome> {
        let o = self.o;
        let cap = o.cap;
        match self.id {
            "spectral.closed-form" => ClosedFormJob { cap }.run(p),
            "spectral.shift" => {
                let mut first = vec![0; o.n - 1];
                if let Some(x) = first.first_mut() {
                    *x = 1;
                }
                ShiftJob { j: o.exps("j", Exps(first.into()))?, cap }.run(p)
            }
            "spectral.product_f0" => {
                let (a, b) = match o.get("route") {
                    Some("a") => (true, false),
                    Some("b") => (false, true),
                    Some("both") | None => (true, true),
                    Some(r) => return Err(bad(format!("route={r} must be a, b or both"))),
                };
                ProductJob { cap, route_a: a, route_b: b }.run(p)
            }
            "spectral.weyl" => {
                let m = u32::try_from(o.int("m")?).map_err(|_| bad("m must be non-negative".into()))?;
                WeylJob { m, cap }.run(p)
            }
            "spectral.jordan" => {
                let (blocks, mut out) = spectral::jordan_structure(p, cap)?;
                let sizes: Vec<String> = blocks.iter().map(|b| format!("{:?}", b)).collect();
                out.note(format!("{} generalized eigenspaces", sizes.len()));
                Ok(out)
            }
            "quasi.eigen-expansion" => quasi::eigen_expansion_n2(p, cap),
            "quasi.product-simple" => {
                let w = o.get("which").unwrap_or("neg-sqrt-t");
                let which = Special::parse(w).ok_or_else(|| bad(format!("which={w} must be neg-sqrt-t, t or neg-one-n2")))?;
                quasi::product_check_simple(p, which, cap)
            }
            "quasi.pfaffian" => {
                let mut out = Outcome::new();
                for s in o.signs()? {
                    out.merge(quasi::product_check_pfaffian(p, s, cap)?);
                }
                Ok(out)
            }
            "quasi.gl" => {
                let l = usize::try_from(o.int("l")?).map_err(|_| bad("l must be positive".into()))?;
                let budget = o.int("budget")? as usize;
                let mut out = Outcome::new();
                for s in o.signs()? {
                    out.merge(quasi::product_check_gl(p, l, s, cap, budget)?);
                }
                Ok(out)
            }
            "quasi.embed" => quasi::embed_check(p, cap, o.flag("perturb")?),
            "quasi.n4-initial" => quasi::n4_initial_check(p, cap),
            "fock.heisenberg" => fock::heisenberg_check(p, o.ucap()?),
            "fock.hr" => {
                let pairs: Vec<(usize, usize)> = match (o.get("r"), o.get("s")) {
                    (Some(_), Some(_)) => vec![(o.int("r")? as usize, o.int("s")? as usize)],
                    _ => {
                        let rmax = o.int("rmax")? as usize;
                        (1..=rmax).flat_map(|r| (r + 1..=rmax).map(move |s| (r, s))).collect()
                    }
                };
                let mut out = Outcome::new();
                for (r, s) in pairs {
                    out.merge(fock::commute_check_hr(p, r, s, o.ucap()?)?);
                }
                Ok(out)
            }
            "fock.h1" => fock::h1_eigen_check(p, o.ucap()?),
            "fock.oracle" => fock::oracle_check(p, o.ucap()?),
            "fock.raising" => {
                let mut out = Outcome::new();
                for n in 1..=o.n {
                    out.merge(fock::raising_check(p, n, o.ucap()?)?);
                }
                Ok(out)
            }
            "fock.eqhr" => {
                let rmax = o.int("rmax")? as usize;
                let mut out = Outcome::new();
                for n in 1..=o.n {
                    for r in 1..=rmax.min(n) {
                        out.merge(fock::eqhr_crosscheck(p, r, n, o.ucap()?)?);
                    }
                }
                Ok(out)
            }
            "fock.family" => fock::family_commute_check(p, o.int("r")? as usize, o.int("s")? as usize, cap),
            "fock.ope" => fock::ope_checks(p, o.ucap()?),
            "fock.triangularity" => fock::hr_triangularity(p, o.int("r")? as usize, o.ucap()?),
            other => unreachable!("{other} is not a generic check"),
        }
    }
}

fn execute(id: &str, o: &Opts) -> Result<Outcome> {
    if let Some(name) = id.strip_prefix("golden.") {
        let g = golden::find(name).expect("registered golden fixture");
        let k = match o.get("perturb") {
            None => None,
            Some(_) => Some(o.int("perturb")? as usize),
        };
        return golden::check_golden(g, k);
    }
    if let Some(tag) = id.strip_prefix("qhyper.") {
        let tags: Vec<&str> = match (tag, o.get("tag")) {
            ("identity", None | Some("all")) => qhyper::TAGS.to_vec(),
            ("identity", Some(t)) => vec![t],
            (t, _) => vec![t],
        };
        let instances = o.int("instances")?.max(1) as u64;
        let mut out = Outcome::new();
        for t in tags {
            if !qhyper::TAGS.contains(&t) {
                return Err(bad(format!("unknown identity tag '{t}'")));
            }
            for k in 0..instances {
                out.merge(qhyper::verify_identity(t, o.seed.wrapping_add(k), o.cap, o.mode)?);
            }
        }
        return Ok(out);
    }
    let (n, cap, m, seed) = (o.n, o.cap, o.m, o.seed);
    match id {
        "operators.integral-vs-spectral" => operators::check_integral_vs_spectral(n, seed, cap, m),
        "operators.commute-d" => {
            let mut out = Outcome::new();
            for k in 0..o.points as u64 {
                out.merge(operators::check_integral_commutes_with_d(n, seed + k, cap, m)?);
            }
            Ok(out)
        }
        "operators.integral-pair" => operators::check_integral_pair_commutes(n, seed, cap, m),
        "spectral.solve" => solve_check(o),
        "spectral.generalized" => {
            let (pair, jf, jg, window) = match n {
                2 => ((2, 1), vec![-1], vec![1], vec![-1]),
                3 => ((2, 3), vec![1, 0], vec![1, 1], vec![0, 0]),
                _ => return Err(bad("generalized eigenfunction examples exist for n = 2, 3".into())),
            };
            let (_, out) = spectral::generalized_eigen(n, pair, &Exps::from_slice(&jf), &Exps::from_slice(&jg), window, cap, seed)?;
            Ok(out)
        }
        "spectral.lemma" => {
            let power_q = o.flag("power-q")?;
            let mut out = Outcome::new();
            for i in 0..=2 {
                out.merge(spectral::lemma_expansions(i, cap, seed, power_q)?);
            }
            Ok(out)
        }
        "spectral.chamber" => spectral::chamber_finiteness(n, cap, seed),
        "quasi.build" => build_check(o),
        "quasi.covariance" => {
            let variants = match o.get("variant") {
                Some("I") => vec![Variant::I],
                Some("I'") => vec![Variant::IPrime],
                Some("both") | None => vec![Variant::I, Variant::IPrime],
                Some(v) => return Err(bad(format!("variant={v} must be I, I' or both"))),
            };
            let mut out = Outcome::new();
            for v in variants {
                out.merge(quasi::covariance_check(n, v, cap, m, o.points, seed)?);
            }
            Ok(out)
        }
        "quasi.iterative" => quasi::iterative_vs_closed(n, o.int("kmax")? as usize, cap, m, seed),
        "quasi.n4-iterative" => quasi::n4_iterative_check(cap, m, seed),
        _ => run_job(&Generic { id, o }, &o.env()),
    }
}

/// Solve for `f_j` and check `D f = λ_j f` exactly. The series is cached on disk keyed by
/// `(n, j, cap, mode, s-pattern)`; a cached series is re-verified, never trusted.
fn solve_check(o: &Opts) -> Result<Outcome> {
    let n = o.n;
    if n < 2 {
        return Err(bad("spectral.solve needs n ≥ 2".into()));
    }
    let j = o.exps("j", Exps::zero(n - 1))?;
    if j.0.iter().any(|&x| x < 0) {
        return Err(bad(format!("spectral.solve needs j ≥ 0, got ({})", j.text())));
    }
    let key = |pattern: &str| format!("eigen-n{n}-j{}-cap{}-{pattern}.txt", j.text(), o.cap);
    match o.mode {
        Mode::Symbolic => solve_cached(&params::symbolic(n), &j, o.cap, &key("symbolic"), ParamScalar::parse),
        _ => {
            let mut out = Outcome::new();
            for s in o.env().seeds() {
                let (p, rec) = params::sampled(n, s);
                out.merge(solve_cached(&p, &j, o.cap, &key(&format!("sampled{s}")), parse_rat)?);
                out.samples.push(rec);
            }
            Ok(out)
        }
    }
}

fn solve_cached<F: Scalar>(p: &Params<F>, j: &Exps, cap: i32, key: &str, parse: impl Fn(&str) -> std::result::Result<F, ScalarError>) -> Result<Outcome> {
    let n = p.n();
    let d = operators::build_d(p, cap)?;
    let series = match cache::load(key).and_then(|t| RatioSeries::from_fixture(n, cap, &t, &parse).ok()) {
        Some(s) => s,
        None => {
            let rec = spectral::solve_with(&d, p, j)?;
            cache::store(key, &rec.series.to_fixture());
            rec.series
        }
    };
    let lam = operators::d_eigenvalue(p, j)?;
    let mut out = Outcome::new();
    out.expect_series(&format!("D f_({}) vs λ f_({})", j.text(), j.text()), &d.apply(&series)?, &series.scale(&lam));
    let lead = series.coeff_or_zero(j, &p.zero());
    out.expect(lead.is_one(), || format!("leading coefficient of f_({}) is {}", j.text(), lead.to_text()));
    if j.0.iter().all(|&x| x == 0) && (n == 2 || n == 3) {
        let want = if n == 2 { spectral::first_eigenfunction_n2(p, cap)? } else { spectral::first_eigenfunction_n3(p, cap)? };
        out.expect_series("f_0 vs closed form", &series, &want);
    }
    Ok(out)
}

/// Reconstruct `F(α)` (or load the cached table) and compare with the closed form.
fn build_check(o: &Opts) -> Result<Outcome> {
    let (n, cap, seed) = (o.n, o.cap, o.seed);
    if !(n == 2 || n == 3) {
        return Err(bad("reconstruction is compared with a closed form, available for n = 2, 3".into()));
    }
    let key = format!("quasi-n{n}-cap{cap}-seed{seed}.txt");
    let cached = cache::load(&key).and_then(|t| QuasiFunction::from_text(n, cap, Provenance::Reconstructed, &t).ok());
    let qf = match cached {
        Some(qf) => qf,
        None => {
            let (qf, fit) = quasi::reconstruct_table(n, cap, seed)?;
            if !fit.passed() {
                return Ok(fit);
            }
            cache::store(&key, &qf.to_text());
            qf
        }
    };
    quasi::compare_with_closed(&qf, seed)
}

/// The desk-scale suite, grouped by acceptance criterion.
pub fn suite() -> Vec<(u32, &'static str, Vec<Request>)> {
    let r = Request::new;
    let mut c9 = Vec::new();
    for tag in qhyper::TAGS {
        c9.push(r(&format!("qhyper.{tag}")).cap(10).param("instances", "3"));
    }
    vec![
        (1, "eigen-solver vs closed forms", vec![r("spectral.closed-form").n(2).cap(8).mode("symbolic"), r("spectral.closed-form").n(3).cap(5)]),
        (2, "integral vs spectral transform", vec![r("operators.integral-vs-spectral").n(2).cap(3).qorder(8)]),
        (3, "commutativity of I(α) with D", vec![r("operators.commute-d").n(2).cap(3).qorder(8).points(2), r("operators.commute-d").n(3).cap(2).qorder(6).points(2)]),
        (
            4,
            "Weyl termination and antisymmetry",
            vec![
                r("spectral.weyl").n(2).cap(6).param("m", "1"),
                r("spectral.weyl").n(2).cap(6).param("m", "2"),
                r("spectral.weyl").n(2).cap(6).param("m", "3"),
                r("spectral.weyl").n(3).cap(6).param("m", "1"),
                r("spectral.weyl").n(3).cap(6).param("m", "2"),
                r("spectral.weyl").n(4).cap(4).param("m", "1"),
            ],
        ),
        (
            5,
            "principal specialization product",
            vec![r("spectral.product_f0").n(2).cap(8), r("spectral.product_f0").n(3).cap(5), r("spectral.product_f0").n(4).cap(4).param("route", "b")],
        ),
        (
            6,
            "quasi-eigenfunction covariance and reconstruction",
            vec![
                r("quasi.covariance").n(2).cap(3).qorder(8).points(3),
                r("quasi.covariance").n(3).cap(2).qorder(6).points(2),
                r("quasi.build").n(2).cap(3),
            ],
        ),
        (
            7,
            "special α products",
            vec![
                r("quasi.product-simple").n(2).cap(8).param("which", "neg-sqrt-t"),
                r("quasi.product-simple").n(2).cap(8).param("which", "t"),
                r("quasi.product-simple").n(3).cap(5).param("which", "neg-sqrt-t"),
                r("quasi.product-simple").n(3).cap(5).param("which", "t"),
                r("quasi.product-simple").n(2).cap(8).param("which", "neg-one-n2"),
                r("quasi.pfaffian").n(2).cap(6),
                r("quasi.pfaffian").n(3).cap(4),
                r("quasi.gl").n(2).cap(3).param("l", "1"),
                r("quasi.gl").n(3).cap(3).param("l", "1"),
                r("quasi.gl").n(2).cap(3).param("l", "2"),
            ],
        ),
        (
            8,
            "Fock space operators",
            vec![
                r("fock.hr").cap(6).param("rmax", "3"),
                r("fock.h1").cap(5),
                r("fock.raising").n(3).cap(4),
                r("fock.eqhr").n(2).cap(3).param("rmax", "2"),
                r("fock.family").n(3).cap(4),
                r("fock.ope").cap(3),
            ],
        ),
        (9, "q-series identities", c9),
        (
            10,
            "Jordan structure",
            vec![r("spectral.jordan").n(3).cap(3), r("spectral.lemma").cap(4), r("spectral.generalized").n(2).cap(4), r("spectral.generalized").n(3).cap(3)],
        ),
        (11, "golden fixtures", golden::GOLDEN.iter().map(|g| r(&format!("golden.{}", g.name))).collect()),
    ]
}

/// The default manifest: every request of [`suite`].
pub fn default_manifest() -> Vec<Request> {
    suite().into_iter().flat_map(|(_, _, v)| v).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_suite_id_is_registered() {
        for req in default_manifest() {
            assert!(find(&req.id).is_some(), "{}", req.id);
        }
    }

    #[test]
    fn unknown_id_is_an_error() {
        assert!(matches!(run(&Request::new("no.such"), false), Err(RegistryError::UnknownId(_))));
    }

    #[test]
    fn bad_mode_is_a_precondition_error() {
        let rep = run(&Request::new("operators.integral-pair").mode("symbolic"), false).unwrap();
        assert_eq!(rep.verdict, crate::check::Verdict::PreconditionError);
        assert!(rep.witness.is_some());
    }

    #[test]
    fn manifest_forms() {
        let a = Manifest::parse(r#"{"checks": [{"id": "fock.h1", "cap": 2}]}"#).unwrap();
        let b = Manifest::parse(r#"[{"id": "fock.h1", "cap": 2}]"#).unwrap();
        assert_eq!(a, b);
        assert!(Manifest::parse(r#"[]"#).unwrap().is_empty());
        assert!(Manifest::parse(r#"[{"id": "fock.h1", "nope": 1}]"#).is_err());
    }

    #[test]
    fn reports_are_deterministic() {
        let req = Request::new("qhyper.q-binomial").cap(4).param("instances", "1");
        let a = serde_json::to_string(&run(&req, false).unwrap()).unwrap();
        let b = serde_json::to_string(&run(&req, false).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("\"verdict\":\"pass\""));
    }
}
