//! Ordered SVD, LDLᴴ and the trace-determinant inequality on a random matrix.

use robust_thp::numerics::{det_hpd, ldl_unit_lower, svd_ordered, trace_re, CMatrix};
use robust_thp::random::{complex_gaussian_matrix, stream_rng, Role};

fn main() -> robust_thp::Result<()> {
    let mut rng = stream_rng(3, 0, Role::Channels);
    let a = complex_gaussian_matrix(&mut rng, 4, 4, 1.0);

    let svd = svd_ordered(&a)?;
    println!("singular values: {:.4?}", svd.sigma);
    println!("reconstruction error: {:.2e}", (svd.reconstruct() - &a).norm());

    let j = &a * a.adjoint() + CMatrix::identity(4, 4).scale(0.1);
    let (l, delta) = ldl_unit_lower(&j)?;
    println!("LDL pivots: {delta:.4?}");
    let rebuilt = &l * CMatrix::from_diagonal(&delta.iter().map(|&d| d.into()).collect::<Vec<_>>().into()) * l.adjoint();
    println!("LDL error: {:.2e}", (rebuilt - &j).norm());

    let n = 4.0;
    println!("tr(J) = {:.4}  >=  N|J|^(1/N) = {:.4}", trace_re(&j), n * det_hpd(&j)?.powf(1.0 / n));
    Ok(())
}
