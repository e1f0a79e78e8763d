//! Golden fixtures shipped with the crate, their regeneration, and the
//! comparison checks used for regression and for the perturbation controls.

use crate::check::Outcome;
use crate::error::{EngineError, Result};
use crate::fock::{Fock, FockVector, Partition};
use crate::operators::{build_d, build_i_spectral, OpMatrix};

use crate::quasi::QuasiFunction;
use crate::params::{symbolic, Params, RawPoint};
use crate::scalar::{ParamScalar, Var};
use crate::series::{Exps, RatioSeries};
use crate::spectral::solve_eigen;

/// What a fixture file holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    /// eigenfunction `f_0` for generic symbolic `s`, series format with a header
    Eigen { n: usize, cap: i32 },
    /// `D` as sparse triplets
    DMatrix { n: usize, cap: i32 },
    /// `I(α)` from the spectral side at the sampled point `seed`, `α = A` formal
    IMatrix { n: usize, cap: i32, seed: u64 },
    /// closed-form table of `F(α)`
    Quasi { n: usize, cap: i32 },
    /// `Q_λ` from the Gram–Schmidt oracle
    Macdonald { part: &'static [u32] },
}

#[derive(Clone, Copy, Debug)]
pub struct Golden {
    pub name: &'static str,
    pub file: &'static str,
    pub kind: Kind,
    pub text: &'static str,
}

pub const GOLDEN: &[Golden] = &[
    Golden { name: "eigen-n2", file: "eigen_n2.txt", kind: Kind::Eigen { n: 2, cap: 5 }, text: include_str!("../fixtures/eigen_n2.txt") },
    Golden { name: "eigen-n3", file: "eigen_n3.txt", kind: Kind::Eigen { n: 3, cap: 3 }, text: include_str!("../fixtures/eigen_n3.txt") },
    Golden { name: "eigen-n4", file: "eigen_n4.txt", kind: Kind::Eigen { n: 4, cap: 2 }, text: include_str!("../fixtures/eigen_n4.txt") },
    Golden { name: "d-n2-cap3", file: "d_n2_cap3.txt", kind: Kind::DMatrix { n: 2, cap: 3 }, text: include_str!("../fixtures/d_n2_cap3.txt") },
    Golden { name: "i-n2-cap3", file: "i_n2_cap3.txt", kind: Kind::IMatrix { n: 2, cap: 3, seed: 1 }, text: include_str!("../fixtures/i_n2_cap3.txt") },
    Golden { name: "quasi-n2", file: "quasi_n2.txt", kind: Kind::Quasi { n: 2, cap: 3 }, text: include_str!("../fixtures/quasi_n2.txt") },
    Golden { name: "macdonald-q21", file: "macdonald_q21.txt", kind: Kind::Macdonald { part: &[2, 1] }, text: include_str!("../fixtures/macdonald_q21.txt") },
];

pub fn find(name: &str) -> Option<&'static Golden> {
    GOLDEN.iter().find(|g| g.name == name)
}

/// The typed content of a fixture.
enum Content {
    Series(RatioSeries<ParamScalar>),
    Matrix(OpMatrix<ParamScalar>),
    Fock(FockVector<ParamScalar>),
}

fn compute(kind: Kind) -> Result<(Content, String)> {
    match kind {
        Kind::Eigen { n, cap } => {
            let rec = solve_eigen(&symbolic(n), &Exps::zero(n - 1), cap)?;
            let text = rec.to_fixture();
            Ok((Content::Series(rec.series), text))
        }
        Kind::DMatrix { n, cap } => {
            let d = build_d(&symbolic(n), cap)?;
            let text = d.to_triplets();
            Ok((Content::Matrix(d), text))
        }
        Kind::IMatrix { n, cap, seed } => {
            let raw = RawPoint::draw(n, seed);
            let c = |r: &crate::scalar::Rat| ParamScalar::constant(r.clone());
            let p = Params::new(c(&raw.qh), c(&raw.th), raw.s.iter().map(c).collect(), ParamScalar::var(Var::A));
            let i = build_i_spectral(&p, &ParamScalar::var(Var::A), cap)?;
            let text = i.to_triplets();
            Ok((Content::Matrix(i), text))
        }
        Kind::Quasi { n, cap } => {
            let f = QuasiFunction::closed_form(&symbolic(n), cap)?;
            let mut s = RatioSeries::zero(n, cap);
            for (e, c) in &f.table {
                s.add_term(e.clone(), c.clone());
            }
            let text = f.to_text();
            Ok((Content::Series(s), text))
        }
        Kind::Macdonald { part } => {
            let fk = Fock::new(&symbolic(1));
            let l = Partition::new(part.to_vec());
            let v = fk.macdonald_oracle(&l, l.size())?;
            let text = v.to_fixture();
            Ok((Content::Fock(v), text))
        }
    }
}

/// Fresh fixture text.
pub fn regenerate(g: &Golden) -> Result<String> {
    Ok(compute(g.kind)?.1)
}

fn parse(kind: Kind, text: &str) -> Result<Content> {
    let ps = ParamScalar::parse;
    match kind {
        Kind::Eigen { n, cap } | Kind::Quasi { n, cap } => Ok(Content::Series(RatioSeries::from_fixture(n, cap, text, ps)?)),
        Kind::DMatrix { .. } | Kind::IMatrix { .. } => {
            let n = match kind {
                Kind::DMatrix { n, .. } | Kind::IMatrix { n, .. } => n,
                _ => unreachable!(),
            };
            Ok(Content::Matrix(OpMatrix::from_triplets(text, vec![0; n - 1], ps, &ParamScalar::zero())?))
        }
        Kind::Macdonald { .. } => Ok(Content::Fock(FockVector::from_fixture(text, ps)?)),
    }
}

/// Number of coefficients a fixture stores.
fn count(c: &Content) -> usize {
    match c {
        Content::Series(s) => s.terms().len(),
        Content::Matrix(m) => m.cols.iter().map(|c| c.terms().len()).sum(),
        Content::Fock(v) => v.terms().len(),
    }
}

/// Add 1 to the `k`-th stored coefficient (in file order, modulo the count).
fn perturb(c: &mut Content, k: usize) {
    let total = count(c);
    if total == 0 {
        return;
    }
    let k = k % total;
    let one = ParamScalar::one();
    match c {
        Content::Series(s) => {
            let e = s.terms().keys().nth(k).unwrap().clone();
            s.add_term(e, one);
        }
        Content::Matrix(m) => {
            let mut k = k;
            for col in m.cols.iter_mut() {
                let len = col.terms().len();
                if k < len {
                    let e = col.terms().keys().nth(k).unwrap().clone();
                    col.add_term(e, one);
                    return;
                }
                k -= len;
            }
        }
        Content::Fock(v) => {
            let l = v.terms().keys().nth(k).unwrap().clone();
            v.add_term(l, one);
        }
    }
}

/// Compare the stored fixture (optionally with coefficient `perturb_at` bumped by 1) against a
/// fresh computation.
pub fn check_golden(g: &Golden, perturb_at: Option<usize>) -> Result<Outcome> {
    let mut stored = parse(g.kind, g.text)?;
    let mut out = Outcome::new();
    if count(&stored) == 0 {
        return Err(EngineError::Precondition(format!("fixture {} is empty; regenerate it", g.file)));
    }
    if let Some(k) = perturb_at {
        perturb(&mut stored, k);
        out.note(format!("coefficient {k} of {} perturbed by +1", g.file));
    }
    let (fresh, _) = compute(g.kind)?;
    match (&stored, &fresh) {
        (Content::Series(a), Content::Series(b)) => out.expect_series(g.name, b, a),
        (Content::Matrix(a), Content::Matrix(b)) => {
            out.expect(a.basis == b.basis, || format!("{}: basis manifest differs", g.name));
            for (k, (x, y)) in b.cols.iter().zip(&a.cols).enumerate() {
                out.expect_series(&format!("{} column {}", g.name, b.basis[k].text()), x, y);
            }
        }
        (Content::Fock(a), Content::Fock(b)) => {
            let mm = b.first_mismatch(a);
            out.expect(mm.is_none(), || {
                let (l, x, y) = mm.unwrap();
                let show = |v: Option<ParamScalar>| v.map(|v| v.to_text()).unwrap_or_else(|| "0".into());
                format!("{}: coefficient of p_{} differs: got {} want {}", g.name, l.text(), show(x), show(y))
            });
        }
        _ => unreachable!("fixture kinds match"),
    }
    Ok(out)
}

/// Write every fixture into `dir`.
pub fn write_all(dir: &std::path::Path) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir).map_err(|e| EngineError::Io(e.to_string()))?;
    let mut written = Vec::new();
    for g in GOLDEN {
        let text = regenerate(g)?;
        std::fs::write(dir.join(g.file), text).map_err(|e| EngineError::Io(e.to_string()))?;
        written.push(g.file.to_string());
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_fixtures_match_and_perturbation_is_caught() {
        for name in ["d-n2-cap3", "macdonald-q21", "quasi-n2"] {
            let g = find(name).unwrap();
            let ok = check_golden(g, None).unwrap();
            assert!(ok.passed(), "{name}: {:?}", ok.failures);
            let bad = check_golden(g, Some(1)).unwrap();
            assert!(!bad.passed(), "{name}: perturbation went unnoticed");
        }
    }
}
