//! Check outcomes and the common report format.

use crate::error::EngineError;
use crate::par;
use crate::params::{self, Mode, Params, SamplePoint};
use crate::scalar::ScalarError;
use crate::scalar::Scalar;
use crate::series::RatioSeries;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    PreconditionError,
    BudgetExceeded,
}

/// Result of one verification run before it is wrapped into a report.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub failures: Vec<String>,
    pub notes: Vec<String>,
    pub samples: Vec<SamplePoint>,
    pub checked: usize,
}

impl Outcome {
    pub fn new() -> Self {
        Outcome::default()
    }
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
    /// Record one comparison; `witness` is only evaluated on failure.
    pub fn expect(&mut self, ok: bool, witness: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures.push(witness());
        }
    }
    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
    pub fn merge(&mut self, o: Outcome) {
        self.failures.extend(o.failures);
        for n in o.notes {
            if !self.notes.contains(&n) {
                self.notes.push(n);
            }
        }
        self.samples.extend(o.samples);
        self.checked += o.checked;
    }
    /// Compare two series exactly; on mismatch the witness names the first
    /// differing monomial and both coefficients.
    pub fn expect_series<F: Scalar>(&mut self, label: &str, got: &RatioSeries<F>, want: &RatioSeries<F>) {
        self.expect_series_by(label, got, want, |a, b| a.sub(b).is_zero());
    }
    pub fn expect_series_by<F: Scalar>(&mut self, label: &str, got: &RatioSeries<F>, want: &RatioSeries<F>, eq: impl Fn(&F, &F) -> bool) {
        let mm = got.first_mismatch_by(want, eq);
        self.expect(mm.is_none(), || {
            let (e, a, b) = mm.unwrap();
            let show = |x: Option<F>| x.map(|v| v.to_text()).unwrap_or_else(|| "0".into());
            format!("{label}: coefficient of x^({}) differs: got {} want {}", e.text(), show(a), show(b))
        });
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    #[serde(rename = "check-id")]
    pub check_id: String,
    pub params: BTreeMap<String, serde_json::Value>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(rename = "timing-ms")]
    pub timing_ms: u64,
    pub mode: Mode,
    pub seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<SamplePoint>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub comparisons: usize,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn from_result(
        check_id: &str,
        params: BTreeMap<String, serde_json::Value>,
        mode: Mode,
        seeds: Vec<u64>,
        timing_ms: u64,
        res: Result<Outcome, EngineError>,
    ) -> CheckReport {
        let (verdict, witness, samples, notes, comparisons) = match res {
            Ok(o) => {
                let v = if o.passed() { Verdict::Pass } else { Verdict::Fail };
                let w = o.failures.first().cloned();
                (v, w, o.samples, o.notes, o.checked)
            }
            Err(EngineError::Precondition(m)) => (Verdict::PreconditionError, Some(m), vec![], vec![], 0),
            Err(EngineError::Budget(m)) => (Verdict::BudgetExceeded, Some(m), vec![], vec![], 0),
            Err(e) => (Verdict::Fail, Some(e.to_string()), vec![], vec![], 0),
        };
        CheckReport { check_id: check_id.to_string(), params, verdict, witness, timing_ms, mode, seeds, samples, notes, comparisons }
    }
}

/// A check body that runs in any scalar backing.
pub trait Job: Sync {
    fn run<F: Scalar>(&self, p: &Params<F>) -> Result<Outcome, EngineError>;
}

/// How a [`Job`] is instantiated: which backing, which random points.
#[derive(Clone, Debug)]
pub struct RunEnv {
    pub n: usize,
    pub mode: Mode,
    pub seed: u64,
    /// independent random points in sampled mode
    pub points: usize,
    /// q-adic working precision (`M + 1`)
    pub prec: i32,
}

impl RunEnv {
    pub fn new(n: usize, mode: Mode, seed: u64) -> Self {
        RunEnv { n, mode, seed, points: 5, prec: 9 }
    }
    pub fn points(mut self, k: usize) -> Self {
        self.points = k;
        self
    }
    pub fn prec(mut self, prec: i32) -> Self {
        self.prec = prec;
        self
    }
    /// Seeds of the sampled points, in order.
    pub fn seeds(&self) -> Vec<u64> {
        let mut sm = crate::scalar::Sampler::new(self.seed);
        (0..self.points).map(|_| sm.next_seed()).collect()
    }
}

/// Run `job` under `env`. In sampled mode a point whose parameters hit a
/// denominator of the job is replaced by a fresh draw (at most as many
/// replacements as requested points), and is mentioned in the notes.
pub fn run_job<J: Job>(job: &J, env: &RunEnv) -> Result<Outcome, EngineError> {
    match env.mode {
        Mode::Symbolic => job.run(&params::symbolic(env.n)),
        Mode::QAdic => {
            let (p, rec) = params::qadic(env.n, env.seed, env.prec);
            let mut o = job.run(&p)?;
            o.samples.push(rec);
            Ok(o)
        }
        Mode::Sampled => {
            let mut sm = crate::scalar::Sampler::new(env.seed);
            let mut out = Outcome::new();
            let mut used = 0;
            let mut tried = 0;
            // draw replacements only for points that hit a pole, at most `points` of them
            while used < env.points && tried < 2 * env.points {
                let batch: Vec<u64> = (0..(env.points - used).min(2 * env.points - tried)).map(|_| sm.next_seed()).collect();
                tried += batch.len();
                let results = par::map(batch, |s| {
                    let (p, rec) = params::sampled(env.n, s);
                    (job.run(&p), rec)
                });
                for (res, rec) in results {
                    match res {
                        Ok(o) => {
                            used += 1;
                            out.merge(o);
                            out.samples.push(rec);
                        }
                        Err(EngineError::Scalar(e @ (ScalarError::DivisionByZero | ScalarError::Pole(_)))) => {
                            out.note(format!("sample seed {} skipped: {e}", rec.seed));
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
            if used < env.points {
                return Err(EngineError::Precondition(format!("only {used} of {} sample points avoided the poles", env.points)));
            }
            Ok(out)
        }
    }
}
