//! Desk-scale acceptance run: one line per criterion, non-zero exit if any fails.
//!
//! Criteria 1 to 10 run the grouped requests of `registry::suite`; criterion 11 checks
//! that perturbed golden fixtures and a perturbed eigenspace embedding are rejected
//! with a witness. A criterion passes only if every check in it passes within its
//! time budget.

use qmacv::check::{CheckReport, Verdict};
use qmacv::golden::GOLDEN;
use qmacv::registry::{self, Request};
use std::time::{Duration, Instant};

fn budget(criterion: u32) -> Duration {
    let s = match criterion {
        1 => 30,
        2 => 120,
        3 => 600,
        4 => 300,
        5 => 180,
        6 => 600,
        7 => 600,
        8 => 900,
        9 => 60,
        10 => 300,
        _ => 60,
    };
    Duration::from_secs(s)
}

fn run(req: &Request) -> CheckReport {
    registry::run(req, false).expect("registered id")
}

/// Controls that must fail, each with a witness.
fn negative_controls() -> Vec<(String, CheckReport)> {
    let mut reqs = Vec::new();
    for g in GOLDEN {
        for k in [0usize, 1, 7] {
            reqs.push(Request::new(&format!("golden.{}", g.name)).param("perturb", &k.to_string()));
        }
    }
    reqs.push(Request::new("quasi.embed").n(3).cap(3).param("perturb", "true"));
    reqs.into_iter().map(|r| (format!("{} {:?}", r.id, r.params), run(&r))).collect()
}

fn main() {
    let cache = std::env::temp_dir().join(format!("qmacv-acceptance-{}", std::process::id()));
    std::env::set_var("QMACV_CACHE_DIR", &cache);
    let mut all_ok = true;
    for (no, title, reqs) in registry::suite() {
        let start = Instant::now();
        let reports: Vec<CheckReport> = reqs.iter().map(run).collect();
        let mut problems: Vec<String> = reports
            .iter()
            .filter(|r| !r.passed())
            .map(|r| format!("{} {:?} {:?}: {}", r.check_id, r.params, r.verdict, r.witness.as_deref().unwrap_or("")))
            .collect();
        if no == 11 {
            for (label, r) in negative_controls() {
                let caught = r.verdict == Verdict::Fail && r.witness.is_some();
                if !caught {
                    problems.push(format!("negative control {label} was not rejected ({:?})", r.verdict));
                }
            }
        }
        let took = start.elapsed();
        if took > budget(no) {
            problems.push(format!("took {:.1}s, budget {}s", took.as_secs_f64(), budget(no).as_secs()));
        }
        let ok = problems.is_empty();
        all_ok &= ok;
        let checks: usize = reports.iter().map(|r| r.comparisons).sum();
        println!("criterion {no:>2} {} {title} ({} checks, {} comparisons, {:.1}s)", if ok { "PASS" } else { "FAIL" }, reports.len(), checks, took.as_secs_f64());
        for p in problems {
            println!("    {p}");
        }
    }
    let _ = std::fs::remove_dir_all(&cache);
    if !all_ok {
        std::process::exit(1);
    }
}
