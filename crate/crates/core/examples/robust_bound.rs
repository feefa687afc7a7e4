//! The worst-case MSE bound against exact MSEs at sampled channel errors.

use robust_thp::harness::audit_max_exact;
use robust_thp::random::{stream_rng, Role};
use robust_thp::robust_mse::{exact_mse, sum_worst_case_mse};
use robust_thp::socp::alternate_optimize;
use robust_thp::system::generate_channels;
use robust_thp::{Node, SystemConfig};

fn main() -> robust_thp::Result<()> {
    for sigma2_g in [0.0, 0.01, 0.05] {
        let config = SystemConfig {
            sigma2_g1: sigma2_g,
            sigma2_g2: sigma2_g,
            ..SystemConfig::default()
        };
        let channels = generate_channels(&config, &mut stream_rng(9, 0, Role::Channels));
        let design = alternate_optimize(&config, &channels)?.solution;
        let bound = sum_worst_case_mse(&config, &channels, &design);
        let nominal = exact_mse(&config, &channels, &design, Node::One) + exact_mse(&config, &channels, &design, Node::Two);
        let sampled = audit_max_exact(&config, &channels, &design, 5000, &mut stream_rng(9, 0, Role::Audit));
        println!("sigma2_g={sigma2_g:<5} bound={bound:.5} nominal={nominal:.5} max sampled={sampled:.5}");
    }
    Ok(())
}
