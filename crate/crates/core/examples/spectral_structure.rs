//! Joint SVD directions and their comparison with random unitary choices.

use robust_thp::random::{stream_rng, Role};
use robust_thp::spectral::{joint_svd, proposition1_dominance, uniform_allocation};
use robust_thp::system::generate_channels;
use robust_thp::SystemConfig;

fn main() -> robust_thp::Result<()> {
    let config = SystemConfig {
        sigma2_g1: 0.0,
        sigma2_g2: 0.0,
        ..SystemConfig::default()
    };
    let channels = generate_channels(&config, &mut stream_rng(2, 0, Role::Channels));
    let spectra = joint_svd(&channels)?;
    println!("lambda_h = {:.4?}", spectra.lambda_h);
    println!("lambda_g = {:.4?}", spectra.lambda_g);
    let alloc = uniform_allocation(&config, &spectra);
    let report = proposition1_dominance(&config, &channels, &spectra, &alloc, 500, &mut stream_rng(2, 0, Role::Audit))?;
    println!(
        "structured objective {:.5}, best random {:.5}, dominated {}/{}",
        report.structured_objective, report.best_random_objective, report.dominated, report.trials
    );
    Ok(())
}
