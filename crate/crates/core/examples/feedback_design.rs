//! The LDL feedback matrix against random unit-lower-triangular candidates.

use robust_thp::numerics::{c64, trace_re, CMatrix};
use robust_thp::random::{complex_gaussian_matrix, stream_rng, Role};
use robust_thp::thp::compute_feedback_matrix;

fn main() -> robust_thp::Result<()> {
    let mut rng = stream_rng(4, 0, Role::Channels);
    let a = complex_gaussian_matrix(&mut rng, 3, 3, 1.0);
    let j = &a * a.adjoint() + CMatrix::identity(3, 3).scale(0.1);
    let design = compute_feedback_matrix(&j)?;
    println!("C =\n{:.3}", design.c);
    println!("tr(C J Cᴴ) = {:.6}", design.achieved_mse);

    let mut best_random = f64::INFINITY;
    for _ in 0..10_000 {
        let mut q = complex_gaussian_matrix(&mut rng, 3, 3, 1.0);
        for r in 0..3 {
            q[(r, r)] = c64(1.0, 0.0);
            for k in r + 1..3 {
                q[(r, k)] = c64(0.0, 0.0);
            }
        }
        best_random = best_random.min(trace_re(&(&q * &j * q.adjoint())));
    }
    println!("best of 10000 random candidates = {best_random:.6}");
    Ok(())
}
