//! Mean worst-case sum MSE against the source power budget for three
//! uncertainty levels, at a reduced number of realizations.

use robust_thp::harness::{run_power_sweep, ExperimentKind, ExperimentSpec};
use robust_thp::SystemConfig;

fn main() -> robust_thp::Result<()> {
    let mut spec = ExperimentSpec::new(ExperimentKind::PowerSweep, SystemConfig::default());
    spec.realizations = 10;
    spec.sweep = vec![5.0, 10.0, 20.0, 30.0];
    spec.output = std::env::temp_dir().join("power_sweep.csv");
    for p in run_power_sweep(&spec)? {
        println!("sigma2_g={:<5} P_t={:<3} mean {:.5} std {:.5}", p.sigma2_g, p.p_t, p.mean_sum_mse, p.std_sum_mse);
    }
    Ok(())
}
