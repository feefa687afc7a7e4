//! Per-iteration trace for a few trials and relay budgets, written as CSV.

use robust_thp::harness::{run_convergence, ExperimentKind, ExperimentSpec};
use robust_thp::SystemConfig;

fn main() -> robust_thp::Result<()> {
    let mut spec = ExperimentSpec::new(ExperimentKind::Convergence, SystemConfig::default());
    spec.realizations = 5;
    spec.output = std::env::temp_dir().join("convergence.csv");
    let rows = run_convergence(&spec)?;
    for r in rows.iter().filter(|r| r.trial == 0) {
        println!("p_rt={:<4} iteration {:>2}: objective {:.5} sum MSE {:.5}", r.point, r.iteration, r.objective, r.sum_mse);
    }
    println!("{} rows written to {}", rows.len(), spec.output.display());
    Ok(())
}
