//! `qmacv`: run registered checks one at a time or as a suite.

use clap::{Args, Parser, Subcommand};
use qmacv::check::CheckReport;
use qmacv::registry::{self, Manifest, Request};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qmacv", version, about = "Exact verification checks for q-difference operators and their eigenfunctions")]
struct Cli {
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// List registered check ids with their defaults.
    List,
    /// Run one check and print its JSON report.
    Check {
        id: String,
        #[command(flatten)]
        over: Overrides,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Record wall-clock time (reports are then no longer byte-identical).
        #[arg(long)]
        timing: bool,
    },
    /// Run a manifest of checks (default: the desk-scale suite).
    Suite {
        manifest: Option<PathBuf>,
        /// Number of checks run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// JSON report destination.
        #[arg(long, default_value = "qmacv-report.json")]
        out: PathBuf,
        #[arg(long)]
        timing: bool,
    },
    /// Print the default suite as a manifest, one request per line.
    Manifest,
    /// Recompute the golden fixtures into a directory.
    Fixtures {
        #[arg(long, default_value = "crates/core/fixtures")]
        dir: PathBuf,
    },
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    cap: Option<i32>,
    /// q-adic order M; comparisons are modulo Q^(M+1).
    #[arg(long)]
    qorder: Option<i32>,
    #[arg(long)]
    seed: Option<u64>,
    /// symbolic, sampled or q-adic
    #[arg(long)]
    mode: Option<String>,
    /// Number of random sample points.
    #[arg(long)]
    points: Option<usize>,
    /// Check-specific parameter, repeatable.
    #[arg(long = "param", short = 'p', value_name = "KEY=VALUE", value_parser = parse_kv)]
    params: Vec<(String, String)>,
}

fn parse_kv(s: &str) -> Result<(String, String), String> {
    s.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())).ok_or_else(|| format!("expected KEY=VALUE, got '{s}'"))
}

fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

/// Print to stdout; a closed pipe is not an error worth a panic.
fn emit(text: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn write_out(path: Option<&PathBuf>, text: &str) -> Result<(), ExitCode> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| usage_error(format!("cannot write {}: {e}", p.display()))),
        None => {
            emit(text);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.sequential {
        qmacv::par::set_sequential(true);
    }
    match cli.cmd {
        Cmd::List => {
            use std::io::Write;
            let mut w = std::io::stdout().lock();
            for e in registry::entries() {
                let extras: Vec<String> = e.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                let q = e.qorder.map(|m| format!(" qorder={m}")).unwrap_or_default();
                // a closed pipe (`qmacv list | head`) just ends the listing
                if writeln!(w, "{:32} n={} cap={}{q} mode={:?} {}", e.id, e.n, e.cap, e.mode, extras.join(" ")).is_err() || writeln!(w, "{:32} {}", "", e.about).is_err() {
                    break;
                }
            }
            ExitCode::SUCCESS
        }
        Cmd::Check { id, over, out, timing } => {
            let req = Request {
                id,
                n: over.n,
                cap: over.cap,
                qorder: over.qorder,
                seed: over.seed,
                mode: over.mode,
                points: over.points,
                params: over.params.into_iter().collect(),
            };
            let rep = match registry::run(&req, timing) {
                Ok(r) => r,
                Err(e) => return usage_error(e),
            };
            let text = serde_json::to_string_pretty(&rep).expect("report serializes");
            if let Err(code) = write_out(out.as_ref(), &text) {
                return code;
            }
            if out.is_some() {
                eprintln!("{} {:?}", rep.check_id, rep.verdict);
            }
            if rep.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Cmd::Suite { manifest, jobs, out, timing } => {
            let reqs = match manifest {
                None => registry::default_manifest(),
                Some(p) => {
                    let text = match std::fs::read_to_string(&p) {
                        Ok(t) => t,
                        Err(e) => return usage_error(format!("cannot read {}: {e}", p.display())),
                    };
                    match Manifest::parse(&text) {
                        Ok(r) => r,
                        Err(e) => return usage_error(format!("bad manifest {}: {e}", p.display())),
                    }
                }
            };
            if let Some(r) = reqs.iter().find(|r| registry::find(&r.id).is_none()) {
                return usage_error(registry::RegistryError::UnknownId(r.id.clone()));
            }
            let reports: Vec<CheckReport> = qmacv::par::map_jobs(jobs, reqs, |r| registry::run(&r, timing).expect("ids validated"));
            let failed = reports.iter().filter(|r| !r.passed()).count();
            let doc = serde_json::json!({ "checks": reports, "passed": reports.len() - failed, "failed": failed });
            if let Err(code) = write_out(Some(&out), &serde_json::to_string_pretty(&doc).expect("report serializes")) {
                return code;
            }
            print_summary(&reports);
            if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Cmd::Manifest => {
            let lines: Vec<String> = registry::default_manifest().iter().map(|r| format!("    {}", serde_json::to_string(r).expect("request serializes"))).collect();
            emit(&format!("{{\"checks\": [\n{}\n]}}", lines.join(",\n")));
            ExitCode::SUCCESS
        }
        Cmd::Fixtures { dir } => match qmacv::golden::write_all(&dir) {
            Ok(files) => {
                for f in files {
                    println!("{}", dir.join(f).display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
    }
}

/// Per-topic counts, then one line per failing check with its witness.
fn print_summary(reports: &[CheckReport]) {
    let topics: BTreeMap<String, &'static str> = registry::entries().into_iter().map(|e| (e.id, e.topic)).collect();
    let mut rows: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for r in reports {
        let row = rows.entry(topics.get(&r.check_id).copied().unwrap_or("other")).or_default();
        row.0 += r.passed() as usize;
        row.1 += 1;
    }
    println!("{:36} {:>6} {:>6}", "topic", "pass", "total");
    for (t, (p, n)) in &rows {
        println!("{t:36} {p:>6} {n:>6}");
    }
    for r in reports.iter().filter(|r| !r.passed()) {
        println!("FAIL {} {:?}: {}", r.check_id, r.verdict, r.witness.as_deref().unwrap_or(""));
    }
}
