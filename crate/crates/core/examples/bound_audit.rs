//! Bound audit over a handful of optimized instances.

use robust_thp::harness::{run_bound_audit, ExperimentKind, ExperimentSpec};
use robust_thp::SystemConfig;

fn main() -> robust_thp::Result<()> {
    let base = SystemConfig {
        sigma2_g1: 0.05,
        sigma2_g2: 0.05,
        ..SystemConfig::default()
    };
    let mut spec = ExperimentSpec::new(ExperimentKind::BoundAudit, base);
    spec.realizations = 5;
    spec.audit_samples = 2000;
    spec.output = std::env::temp_dir().join("bound_audit.csv");
    for r in run_bound_audit(&spec)? {
        println!("trial {}: bound {:.5} max sampled {:.5} slack {:.5}", r.trial, r.bound, r.max_sampled, r.slack);
    }
    Ok(())
}
