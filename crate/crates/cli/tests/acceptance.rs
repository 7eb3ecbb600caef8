//! Runs every acceptance criterion and prints one line per criterion.
//! Wall-clock budgets are enforced here rather than in the report, which
//! must stay byte-identical between runs.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use trolab_cli::suite::{run_criterion, SuiteConfig, CORE_SOURCES, CRITERIA};

fn budget(id: u32) -> Option<Duration> {
    match id {
        1 => Some(Duration::from_secs(120)),
        5 => Some(Duration::from_secs(600)),
        _ => None,
    }
}

/// Every file under the core sources must be in the embedded audit list.
fn audit_covers_core() -> Result<(), String> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/src");
    let on_disk: BTreeSet<String> = std::fs::read_dir(&dir)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".rs"))
        .collect();
    let listed: BTreeSet<String> = CORE_SOURCES.iter().map(|(n, _)| n.to_string()).collect();
    if on_disk == listed {
        Ok(())
    } else {
        Err(format!("audit list {listed:?} differs from sources {on_disk:?}"))
    }
}

/// Two concurrent `selftest --seed 42` runs of the binary.
fn binary_reports_identical() -> Result<usize, String> {
    let spawn = || {
        Command::new(env!("CARGO_BIN_EXE_trolab"))
            .args(["selftest", "--seed", "42"])
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| e.to_string())
    };
    let (a, b) = (spawn()?, spawn()?);
    let (a, b) = (a.wait_with_output().map_err(|e| e.to_string())?, b.wait_with_output().map_err(|e| e.to_string())?);
    if !a.status.success() || !b.status.success() {
        return Err(format!("selftest exited with {} and {}", a.status, b.status));
    }
    if a.stdout != b.stdout {
        return Err("the two reports differ".into());
    }
    Ok(a.stdout.len())
}

fn main() {
    let cfg = SuiteConfig { seed: 42, samples: 100, parallel: true };
    let mut failed = 0;
    for (id, title) in CRITERIA {
        let start = Instant::now();
        let mut report = run_criterion(id, &cfg);
        let elapsed = start.elapsed();
        if let Some(limit) = budget(id) {
            if elapsed > limit {
                report.passed = false;
                report.failures.push(format!("took {elapsed:?}, budget {limit:?}"));
            }
        }
        match id {
            8 => {
                if let Err(e) = audit_covers_core() {
                    report.passed = false;
                    report.failures.push(e);
                }
            }
            9 => match binary_reports_identical() {
                Ok(bytes) => {
                    report.counts.insert("binary report bytes".into(), bytes as u64);
                }
                Err(e) => {
                    report.passed = false;
                    report.failures.push(e);
                }
            },
            _ => {}
        }
        let verdict = if report.passed { "PASS" } else { "FAIL" };
        println!("criterion {id}: {verdict} {title} ({} instances, {:.1}s)", report.instances, elapsed.as_secs_f64());
        for f in report.failures.iter().take(10) {
            println!("    {f}");
        }
        if !report.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all {} criteria passed", CRITERIA.len());
}
