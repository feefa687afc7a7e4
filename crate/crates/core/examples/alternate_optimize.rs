//! Alternating optimization of the three power spectra on one instance.

use robust_thp::random::{stream_rng, Role};
use robust_thp::robust_mse::{node_power, relay_power};
use robust_thp::socp::alternate_optimize;
use robust_thp::system::generate_channels;
use robust_thp::{Node, SystemConfig};

fn main() -> robust_thp::Result<()> {
    let config = SystemConfig::default();
    let channels = generate_channels(&config, &mut stream_rng(config.rng_seed, 0, Role::Channels));
    let out = alternate_optimize(&config, &channels)?;

    println!("initial objective {:.6}", out.initial_objective);
    for (k, v) in out.state.objective_trace.iter().enumerate() {
        println!("iteration {:>2}: objective {v:.6}", k + 1);
    }
    println!("lambda_1 = {:.4?}", out.allocation.lambda1);
    println!("lambda_2 = {:.4?}", out.allocation.lambda2);
    println!("lambda_r = {:.4?}", out.allocation.lambda_r);
    println!("selected iterate {} with sum worst-case MSE {:.6}", out.selected_iteration, out.sum_mse);
    let s = &out.solution;
    println!(
        "powers: relay {:.4}/{}, node 1 {:.4}/{}, node 2 {:.4}/{}",
        relay_power(&config, &channels, s),
        config.p_rt,
        node_power(&config, s, Node::One),
        config.p_1t,
        node_power(&config, s, Node::Two),
        config.p_2t
    );
    Ok(())
}
