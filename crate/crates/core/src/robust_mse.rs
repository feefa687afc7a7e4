//! Closed-form MSE and power expressions of the robust design.
//!
//! Receiver `i` estimates the partner's modified symbols `v_j = C_j x_j`. With
//! the downlink known only up to `‖ΔG_i‖² ≤ σ²_{g_i}`, the per-receiver MSE is
//! replaced by a norm-product upper bound; minimizing that bound over `Γ_i`
//! gives the MMSE equalizer and the reduced MSE
//! `tr(σ²_x C (I + σ²_x Dᴴ Eᴴ (A I + B)⁻¹ E D)⁻¹ Cᴴ)`.

use crate::error::Result;
use crate::numerics::{det_hpd, frob2, hermitian_inverse, hermitian_solve, trace_re, CMatrix};
use crate::system::{ChannelSet, DesignSolution, Node, SystemConfig};

/// Quantities that fix receiver `i`'s reduced MSE.
#[derive(Debug, Clone)]
pub struct EffectiveFactors {
    /// Scalar load `A_i = σ²_{x_j}σ²_{g_i}‖F_r D_j‖² + σ²_{nr}σ²_{g_i}‖F_r‖² + σ²_{n_i}`.
    pub a: f64,
    /// `E_i = Ĝ_i F_r`.
    pub e: CMatrix,
    /// `D_j = H_j F_j`, the partner's uplink through its precoder.
    pub d: CMatrix,
    /// Relay-noise Gram `σ²_{nr} E_i E_iᴴ`.
    pub b: CMatrix,
    /// Partner signal variance `σ²_{x_j}`.
    pub sigma2_xj: f64,
}

impl EffectiveFactors {
    /// `A I + B`.
    pub fn noise_matrix(&self) -> CMatrix {
        let n = self.b.nrows();
        &self.b + CMatrix::identity(n, n).scale(self.a)
    }

    /// `I + σ²_x Dᴴ Eᴴ (A I + B)⁻¹ E D`, Hermitian positive definite.
    pub fn inner_matrix(&self) -> Result<CMatrix> {
        let ed = &self.e * &self.d;
        let solved = hermitian_solve(&self.noise_matrix(), &ed)?;
        let n = self.d.ncols();
        let m = CMatrix::identity(n, n) + (ed.adjoint() * solved).scale(self.sigma2_xj);
        Ok((&m + m.adjoint()).scale(0.5))
    }

    /// Inverse of [`Self::inner_matrix`]; the matrix the feedback design
    /// diagonalizes.
    pub fn j_inner(&self) -> Result<CMatrix> {
        let inv = hermitian_inverse(&self.inner_matrix()?)?;
        Ok((&inv + inv.adjoint()).scale(0.5))
    }
}

pub fn effective_factors(config: &SystemConfig, channels: &ChannelSet, solution: &DesignSolution, node: Node) -> EffectiveFactors {
    let partner = node.other();
    let sigma2_xj = config.sigma2_x(partner);
    let sigma2_g = config.sigma2_g(node);
    let d = channels.h(partner) * solution.f(partner);
    let e = channels.g_hat(node) * &solution.fr;
    let a = sigma2_xj * sigma2_g * frob2(&(&solution.fr * &d))
        + config.sigma2_nr * sigma2_g * frob2(&solution.fr)
        + config.sigma2_n(node);
    let b = (&e * e.adjoint()).scale(config.sigma2_nr);
    EffectiveFactors { a, e, d, b, sigma2_xj }
}

/// Worst-case MSE bound at receiver `node` for an arbitrary equalizer.
pub fn worst_case_mse_with(
    config: &SystemConfig,
    channels: &ChannelSet,
    solution: &DesignSolution,
    node: Node,
    gamma: &CMatrix,
) -> f64 {
    let partner = node.other();
    let sx = config.sigma2_x(partner);
    let sg = config.sigma2_g(node);
    let snr = config.sigma2_nr;
    let frd = &solution.fr * (channels.h(partner) * solution.f(partner));
    let gamma_e = gamma * (channels.g_hat(node) * &solution.fr);
    let g2 = frob2(gamma);
    sx * frob2(&(&gamma_e * (channels.h(partner) * solution.f(partner)) - solution.c(partner)))
        + sx * sg * g2 * frob2(&frd)
        + snr * frob2(&gamma_e)
        + snr * sg * g2 * frob2(&solution.fr)
        + config.sigma2_n(node) * g2
}

/// Worst-case MSE bound at `node` using the solution's own equalizer.
pub fn worst_case_mse(config: &SystemConfig, channels: &ChannelSet, solution: &DesignSolution, node: Node) -> f64 {
    worst_case_mse_with(config, channels, solution, node, solution.gamma(node))
}

pub fn sum_worst_case_mse(config: &SystemConfig, channels: &ChannelSet, solution: &DesignSolution) -> f64 {
    Node::BOTH.iter().map(|&n| worst_case_mse(config, channels, solution, n)).sum()
}

/// Exact MSE at `node` for the true downlink `G_i = Ĝ_i + ΔG_i`.
pub fn exact_mse(config: &SystemConfig, channels: &ChannelSet, solution: &DesignSolution, node: Node) -> f64 {
    let partner = node.other();
    let gamma = solution.gamma(node);
    let gamma_gf = gamma * (channels.g_true(node) * &solution.fr);
    let signal = &gamma_gf * (channels.h(partner) * solution.f(partner)) - solution.c(partner);
    config.sigma2_x(partner) * frob2(&signal)
        + config.sigma2_nr * frob2(&gamma_gf)
        + config.sigma2_n(node) * frob2(gamma)
}

/// Stationary point of the worst-case bound in `Γ_i`:
/// `Γ_i = σ²_x C_j Dᴴ Eᴴ (σ²_x E D Dᴴ Eᴴ + A I + B)⁻¹`.
pub fn mmse_equalizer(config: &SystemConfig, channels: &ChannelSet, solution: &DesignSolution, node: Node) -> Result<CMatrix> {
    let f = effective_factors(config, channels, solution, node);
    let ed = &f.e * &f.d;
    let m = (&ed * ed.adjoint()).scale(f.sigma2_xj) + f.noise_matrix();
    let rhs = (&ed * solution.c(node.other()).adjoint()).scale(f.sigma2_xj);
    Ok(hermitian_solve(&m, &rhs)?.adjoint())
}

/// Reduced MSE after substituting the MMSE equalizer.
pub fn reduced_mse(factors: &EffectiveFactors, c_j: &CMatrix) -> Result<f64> {
    let j = factors.j_inner()?;
    Ok(factors.sigma2_xj * trace_re(&(c_j * j * c_j.adjoint())))
}

/// The same reduced MSE written before the matrix-inversion lemma:
/// `tr(σ²_x C (I − σ²_x Dᴴ Eᴴ (A I + B + σ²_x E D Dᴴ Eᴴ)⁻¹ E D) Cᴴ)`.
pub fn reduced_mse_unlemma(factors: &EffectiveFactors, c_j: &CMatrix) -> Result<f64> {
    let sx = factors.sigma2_xj;
    let ed = &factors.e * &factors.d;
    let big = factors.noise_matrix() + (&ed * ed.adjoint()).scale(sx);
    let solved = hermitian_solve(&big, &ed)?;
    let n = factors.d.ncols();
    let middle = CMatrix::identity(n, n) - (ed.adjoint() * solved).scale(sx);
    Ok(sx * trace_re(&(c_j * middle * c_j.adjoint())))
}

/// Determinant lower bound `|I + σ²_x Dᴴ Eᴴ (A I + B)⁻¹ E D|^(−1/n)`.
pub fn mse_lower_bound(factors: &EffectiveFactors, n: usize) -> Result<f64> {
    Ok(det_hpd(&factors.inner_matrix()?)?.powf(-1.0 / n as f64))
}

/// Relay transmit power
/// `σ²_{x1}‖F_r H_1 F_1‖² + σ²_{x2}‖F_r H_2 F_2‖² + σ²_{nr}‖F_r‖²`.
pub fn relay_power(config: &SystemConfig, channels: &ChannelSet, solution: &DesignSolution) -> f64 {
    let fr = &solution.fr;
    config.sigma2_x1 * frob2(&(fr * (&channels.h1 * &solution.f1)))
        + config.sigma2_x2 * frob2(&(fr * (&channels.h2 * &solution.f2)))
        + config.sigma2_nr * frob2(fr)
}

/// Transmit power `σ²_{x_i} tr(F_i F_iᴴ)` of end node `node`.
pub fn node_power(config: &SystemConfig, solution: &DesignSolution, node: Node) -> f64 {
    config.sigma2_x(node) * trace_re(&(solution.f(node) * solution.f(node).adjoint()))
}
