//! Acceptance criteria 1 to 10 at pinned tolerances. One PASS/FAIL line per
//! criterion; the process fails if any criterion does.
//!
//! IRRPER_CRITERIA=3,5 restricts the run to the listed criteria.

use irrper_cli::acceptance::{run_criterion, CriterionReport};
use irrper_core::numeric::Execution;

fn main() {
    let ids: Vec<u8> = match std::env::var("IRRPER_CRITERIA") {
        Ok(s) if !s.trim().is_empty() => s.split(',').map(|t| t.trim().parse().expect("criterion number")).collect(),
        _ => (1..=10).collect(),
    };
    let mut reports: Vec<CriterionReport> = Vec::new();
    for id in ids {
        let r = run_criterion(id, Execution::Parallel, true);
        println!("{}", r.render());
        reports.push(r);
    }
    let failed: Vec<u8> = reports.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!();
    println!("acceptance: {} of {} criteria pass", reports.len() - failed.len(), reports.len());
    if !failed.is_empty() {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
