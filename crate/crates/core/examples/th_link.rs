//! Tomlinson-Harashima encoding and one noisy exchange through the relay.

use robust_thp::random::{qam_vector, stream_rng, Role};
use robust_thp::socp::alternate_optimize;
use robust_thp::system::{generate_channels, simulate_link, th_encode, LinkNoise};
use robust_thp::SystemConfig;

fn main() -> robust_thp::Result<()> {
    let config = SystemConfig::default();
    let channels = generate_channels(&config, &mut stream_rng(config.rng_seed, 0, Role::Channels));
    let design = alternate_optimize(&config, &channels)?.solution;

    let mut symbols = stream_rng(config.rng_seed, 0, Role::Symbols);
    let s1 = qam_vector(&mut symbols, config.n_t, config.qam_m);
    let (x1, v1) = th_encode(&s1, &design.c1, config.qam_m);
    println!("s1 = {:?}", s1.as_slice());
    println!("x1 = {:.3?}", x1.as_slice());
    println!("v1 = {:?}", v1.as_slice());

    let mut relay_rng = stream_rng(config.rng_seed, 0, Role::RelayNoise);
    let mut rx_rng = stream_rng(config.rng_seed, 0, Role::ReceiverNoise);
    let (mut errors, mut total) = (0, 0);
    for _ in 0..2000 {
        let s1 = qam_vector(&mut symbols, config.n_t, config.qam_m);
        let s2 = qam_vector(&mut symbols, config.n_t, config.qam_m);
        let noise = LinkNoise::draw(&config, &mut relay_rng, &mut rx_rng);
        let out = simulate_link(&config, &channels, &design, &s1, &s2, &noise)?;
        errors += (0..config.n_t).filter(|&k| out.s2_hat[k] != s1[k] || out.s1_hat[k] != s2[k]).count();
        total += 2 * config.n_t;
    }
    println!("symbol error rate at the configured noise: {:.4}", errors as f64 / total as f64);
    Ok(())
}
