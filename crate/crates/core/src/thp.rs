//! Feedback matrix of the Tomlinson-Harashima precoder.
//!
//! For a fixed error covariance `J`, the receiver MSE is `σ²_x tr(C J Cᴴ)`.
//! Over unit-lower-triangular `C` this is minimized by `C = L⁻¹` where
//! `J = L Δ Lᴴ`, which leaves `C J Cᴴ = Δ` diagonal.

use crate::error::Result;
use crate::numerics::{ldl_unit_lower, unit_lower_inverse, CMatrix};
use crate::robust_mse::EffectiveFactors;

#[derive(Debug, Clone)]
pub struct FeedbackDesign {
    /// Unit-lower-triangular feedback matrix.
    pub c: CMatrix,
    /// `tr(C J Cᴴ) = Σ Δ_k`.
    pub achieved_mse: f64,
}

pub fn compute_feedback_matrix(j_inner: &CMatrix) -> Result<FeedbackDesign> {
    let (l, delta) = ldl_unit_lower(j_inner)?;
    let c = unit_lower_inverse(&l);
    Ok(FeedbackDesign {
        c,
        achieved_mse: delta.iter().sum(),
    })
}

/// Feedback design for a receiver, with `achieved_mse` scaled by `σ²_x`
/// so it equals the reduced MSE at the returned `C`.
pub fn design_for_receiver(factors: &EffectiveFactors) -> Result<FeedbackDesign> {
    let mut design = compute_feedback_matrix(&factors.j_inner()?)?;
    design.achieved_mse *= factors.sigma2_xj;
    Ok(design)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c64, det_hpd, frob2, real_diag, trace_re};
    use crate::random::{complex_gaussian_matrix, stream_rng, Role};

    fn objective(c: &CMatrix, j: &CMatrix) -> f64 {
        trace_re(&(c * j * c.adjoint()))
    }

    #[test]
    fn diagonal_input_needs_no_feedback() {
        let d = compute_feedback_matrix(&real_diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(d.c, CMatrix::identity(3, 3));
        assert!((d.achieved_mse - 6.0).abs() < 1e-15);
    }

    #[test]
    fn two_by_two_against_grid() {
        let j = CMatrix::from_row_slice(2, 2, &[c64(2.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(2.0, 0.0)]);
        let d = compute_feedback_matrix(&j).unwrap();
        assert!((d.c[(1, 0)] - c64(-0.5, 0.0)).norm() < 1e-15);
        let cjc = &d.c * &j * d.c.adjoint();
        assert!((cjc[(0, 0)].re - 2.0).abs() < 1e-14 && (cjc[(1, 1)].re - 1.5).abs() < 1e-14);
        assert!(cjc[(0, 1)].norm() < 1e-14);
        assert!((d.achieved_mse - 3.5).abs() < 1e-14);
        // Grid over the single free real coefficient.
        let best = (-2000..=2000)
            .map(|k| {
                let mut c = CMatrix::identity(2, 2);
                c[(1, 0)] = c64(k as f64 * 1e-3, 0.0);
                objective(&c, &j)
            })
            .fold(f64::INFINITY, f64::min);
        assert!((best - 3.5).abs() < 1e-9);
    }

    #[test]
    fn beats_random_unit_lower_matrices() {
        let mut rng = stream_rng(8, 0, Role::Audit);
        for _ in 0..10 {
            let a = complex_gaussian_matrix(&mut rng, 4, 4, 1.0);
            let j = &a * a.adjoint() + CMatrix::identity(4, 4).scale(0.05);
            let d = compute_feedback_matrix(&j).unwrap();
            let cjc = &d.c * &j * d.c.adjoint();
            for r in 0..4 {
                for c in 0..4 {
                    if r != c {
                        assert!(cjc[(r, c)].norm() < 1e-10);
                    }
                }
            }
            assert!((det_hpd(&(&d.c * d.c.adjoint())).unwrap() - 1.0).abs() < 1e-10);
            for _ in 0..200 {
                let mut q = complex_gaussian_matrix(&mut rng, 4, 4, 1.0);
                for r in 0..4 {
                    q[(r, r)] = c64(1.0, 0.0);
                    for c in (r + 1)..4 {
                        q[(r, c)] = c64(0.0, 0.0);
                    }
                }
                assert!(d.achieved_mse <= objective(&q, &j) + 1e-12);
            }
            assert!(d.achieved_mse <= trace_re(&j));
            assert!(frob2(&d.c) >= 4.0);
        }
    }

    #[test]
    fn rejects_indefinite() {
        assert!(compute_feedback_matrix(&real_diag(&[1.0, -2.0])).is_err());
    }
}
