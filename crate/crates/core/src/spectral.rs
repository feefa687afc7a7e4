//! Joint SVD structure of the precoders and the diagonalized design problem.
//!
//! The stacked uplink `[H_1, H_2] = U_h Λ_h^½ V_hᴴ` and downlink estimate
//! `[Ĝ_1; Ĝ_2] = U_g Λ_g^½ V_gᴴ` fix the precoder directions:
//! `F_i = V_{h,i} Λ_i^½` and `F_r = V_g Λ_r^½ U_hᴴ`. What remains to be
//! optimized are the three power spectra `Λ_1`, `Λ_2`, `Λ_r`, and along these
//! directions each receiver's determinant objective becomes a product of
//! per-mode signal-to-interference ratios.

use rand::Rng;

use crate::error::Result;
use crate::numerics::{c64, real_diag, svd_ordered, CMatrix};
use crate::random::complex_gaussian_matrix;
use crate::robust_mse::{effective_factors, relay_power};
use crate::system::{ChannelSet, DesignSolution, Node, SystemConfig};

/// Factors of the joint uplink and downlink decompositions.
#[derive(Debug, Clone)]
pub struct JointSpectra {
    /// Squared singular values of `[H_1, H_2]`, descending.
    pub lambda_h: Vec<f64>,
    /// Squared singular values of `[Ĝ_1; Ĝ_2]`, descending.
    pub lambda_g: Vec<f64>,
    pub u_h: CMatrix,
    pub v_h1: CMatrix,
    pub v_h2: CMatrix,
    pub u_g1: CMatrix,
    pub u_g2: CMatrix,
    pub v_g: CMatrix,
}

impl JointSpectra {
    pub fn v_h(&self, node: Node) -> &CMatrix {
        match node {
            Node::One => &self.v_h1,
            Node::Two => &self.v_h2,
        }
    }

    pub fn u_g(&self, node: Node) -> &CMatrix {
        match node {
            Node::One => &self.u_g1,
            Node::Two => &self.u_g2,
        }
    }

    pub fn len(&self) -> usize {
        self.lambda_h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda_h.is_empty()
    }
}

/// Power spectra along the fixed precoder directions.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralAllocation {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub lambda_r: Vec<f64>,
}

impl SpectralAllocation {
    pub fn source(&self, node: Node) -> &[f64] {
        match node {
            Node::One => &self.lambda1,
            Node::Two => &self.lambda2,
        }
    }

    pub fn source_mut(&mut self, node: Node) -> &mut Vec<f64> {
        match node {
            Node::One => &mut self.lambda1,
            Node::Two => &mut self.lambda2,
        }
    }

    /// Relay power of the diagonal model,
    /// `σ²_{x1}Σλ_rλ_1λ_h + σ²_{x2}Σλ_rλ_2λ_h + σ²_{nr}Σλ_r`.
    pub fn relay_power(&self, config: &SystemConfig, lambda_h: &[f64]) -> f64 {
        (0..self.lambda_r.len())
            .map(|k| {
                self.lambda_r[k]
                    * (config.sigma2_x1 * self.lambda1[k] * lambda_h[k]
                        + config.sigma2_x2 * self.lambda2[k] * lambda_h[k]
                        + config.sigma2_nr)
            })
            .sum()
    }

    pub fn node_power(&self, config: &SystemConfig, node: Node) -> f64 {
        config.sigma2_x(node) * self.source(node).iter().sum::<f64>()
    }

    /// Largest budget overshoot across the three power constraints.
    pub fn power_violation(&self, config: &SystemConfig, lambda_h: &[f64]) -> f64 {
        let relay = self.relay_power(config, lambda_h) - config.p_rt;
        let n1 = self.node_power(config, Node::One) - config.p_1t;
        let n2 = self.node_power(config, Node::Two) - config.p_2t;
        relay.max(n1).max(n2)
    }
}

/// Decomposes the stacked channels.
pub fn joint_svd(channels: &ChannelSet) -> Result<JointSpectra> {
    let nt = channels.h1.ncols();
    let nr = channels.h1.nrows();

    let mut h = CMatrix::zeros(nr, 2 * nt);
    h.view_mut((0, 0), (nr, nt)).copy_from(&channels.h1);
    h.view_mut((0, nt), (nr, nt)).copy_from(&channels.h2);
    let hs = svd_ordered(&h)?;

    let mut g = CMatrix::zeros(2 * nt, nr);
    g.view_mut((0, 0), (nt, nr)).copy_from(&channels.g1_hat);
    g.view_mut((nt, 0), (nt, nr)).copy_from(&channels.g2_hat);
    let gs = svd_ordered(&g)?;

    let k = hs.sigma.len();
    Ok(JointSpectra {
        lambda_h: hs.sigma.iter().map(|s| s * s).collect(),
        lambda_g: gs.sigma.iter().map(|s| s * s).collect(),
        u_h: hs.u,
        v_h1: hs.v.rows(0, nt).into_owned(),
        v_h2: hs.v.rows(nt, nt).into_owned(),
        u_g1: gs.u.rows(0, nt).into_owned(),
        u_g2: gs.u.rows(nt, nt).into_owned(),
        v_g: gs.v.columns(0, k.min(gs.v.ncols())).into_owned(),
    })
}

/// Columns scaled to unit norm; zero columns stay zero.
fn unit_columns(m: &CMatrix) -> CMatrix {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let n = col.norm();
        if n > 1e-300 {
            col /= c64(n, 0.0);
        }
    }
    out
}

fn sqrt_diag(values: &[f64]) -> CMatrix {
    real_diag(&values.iter().map(|v| v.max(0.0).sqrt()).collect::<Vec<_>>())
}

/// Builds `F_1`, `F_2`, `F_r` from the joint factors and a spectrum.
///
/// Source directions are the slices `V_{h,i}` with columns normalized to unit
/// length, so `σ²_{x_i}tr(F_i F_iᴴ) = σ²_{x_i}Σλ_{i,k}` exactly. The relay is
/// `V_g Λ_r^½ U_hᴴ`.
pub fn assemble_precoders(spectra: &JointSpectra, alloc: &SpectralAllocation) -> (CMatrix, CMatrix, CMatrix) {
    let f1 = unit_columns(&spectra.v_h1) * sqrt_diag(&alloc.lambda1);
    let f2 = unit_columns(&spectra.v_h2) * sqrt_diag(&alloc.lambda2);
    let fr = &spectra.v_g * sqrt_diag(&alloc.lambda_r) * spectra.u_h.adjoint();
    (f1, f2, fr)
}

/// Per-mode signal and interference-plus-noise of the data sent by `source`
/// and received at its partner, in the diagonalized model.
///
/// `signal_k = σ²_{x_i}λ_{i,k}λ_{h,k}λ_{g,k}λ_{r,k}` and
/// `den_k = σ²_{x_i}σ²_{g_j}Σλ_rλ_hλ_i + σ²_{nr}σ²_{g_j}Σλ_r + σ²_{n_j} + σ²_{nr}λ_{r,k}λ_{g,k}`.
pub fn mode_terms(
    config: &SystemConfig,
    lambda_h: &[f64],
    lambda_g: &[f64],
    alloc: &SpectralAllocation,
    source: Node,
) -> Vec<(f64, f64)> {
    let receiver = source.other();
    let sx = config.sigma2_x(source);
    let sg = config.sigma2_g(receiver);
    let lam = alloc.source(source);
    let lr = &alloc.lambda_r;
    let cross: f64 = (0..lr.len()).map(|k| lr[k] * lambda_h[k] * lam[k]).sum();
    let relay_total: f64 = lr.iter().sum();
    let base = sx * sg * cross + config.sigma2_nr * sg * relay_total + config.sigma2_n(receiver);
    (0..lr.len())
        .map(|k| {
            let signal = sx * lam[k] * lambda_h[k] * lambda_g[k] * lr[k];
            let den = base + config.sigma2_nr * lr[k] * lambda_g[k];
            (signal, den)
        })
        .collect()
}

/// Per-mode ratios `t_k = 1 + signal_k / den_k`.
pub fn mode_ratios(config: &SystemConfig, spectra: &JointSpectra, alloc: &SpectralAllocation, source: Node) -> Vec<f64> {
    mode_terms(config, &spectra.lambda_h, &spectra.lambda_g, alloc, source)
        .into_iter()
        .map(|(s, d)| 1.0 + s / d)
        .collect()
}

/// Sum over both links of the diagonal determinant `Π_k t_k`.
pub fn diagonal_objective(config: &SystemConfig, spectra: &JointSpectra, alloc: &SpectralAllocation) -> f64 {
    Node::BOTH
        .iter()
        .map(|&n| mode_ratios(config, spectra, alloc, n).iter().product::<f64>())
        .sum()
}

/// Uniform spectra that exhaust every budget: `λ_{i,k} = P_{i,t}/(σ²_{x_i}N)`
/// and a flat `λ_r` meeting the relay constraint with equality.
pub fn uniform_allocation(config: &SystemConfig, spectra: &JointSpectra) -> SpectralAllocation {
    let n = spectra.len();
    let lambda1 = vec![config.p_1t / (config.sigma2_x1 * n as f64); n];
    let lambda2 = vec![config.p_2t / (config.sigma2_x2 * n as f64); n];
    let per_unit: f64 = (0..n)
        .map(|k| config.sigma2_x1 * lambda1[k] * spectra.lambda_h[k] + config.sigma2_x2 * lambda2[k] * spectra.lambda_h[k] + config.sigma2_nr)
        .sum();
    let lambda_r = vec![config.p_rt / per_unit; n];
    SpectralAllocation { lambda1, lambda2, lambda_r }
}

/// Sum of the determinant objectives `|I + σ²_x Dᴴ Eᴴ (A I + B)⁻¹ E D|`
/// evaluated on full precoder matrices.
pub fn matrix_objective(config: &SystemConfig, channels: &ChannelSet, f1: CMatrix, f2: CMatrix, fr: CMatrix) -> Result<f64> {
    let sol = DesignSolution::from_precoders(f1, f2, fr);
    let mut total = 0.0;
    for node in Node::BOTH {
        let factors = effective_factors(config, channels, &sol, node);
        total += crate::numerics::det_hpd(&factors.inner_matrix()?)?;
    }
    Ok(total)
}

/// Outcome of comparing the structured precoder directions against random
/// unitary directions at the same spectra.
#[derive(Debug, Clone)]
pub struct DominanceReport {
    pub trials: usize,
    /// Random draws whose objective did not exceed the structured one.
    pub dominated: usize,
    pub structured_objective: f64,
    pub best_random_objective: f64,
}

impl DominanceReport {
    pub fn fraction(&self) -> f64 {
        self.dominated as f64 / self.trials.max(1) as f64
    }
}

/// Haar-distributed unitary via QR of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let a = complex_gaussian_matrix(rng, n, n, 1.0);
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    q
}

fn scale_relay_to_budget(config: &SystemConfig, channels: &ChannelSet, f1: &CMatrix, f2: &CMatrix, fr: CMatrix) -> CMatrix {
    let sol = DesignSolution::from_precoders(f1.clone(), f2.clone(), fr);
    let p = relay_power(config, channels, &sol);
    if p > 0.0 {
        sol.fr.scale((config.p_rt / p).sqrt())
    } else {
        sol.fr
    }
}

/// Compares the structured directions with `trials` random unitary choices
/// of `X_r`, `Z_r`, `X_1`, `X_2`. Both sides use the same spectra, and each
/// candidate's relay matrix is rescaled to spend exactly the relay budget.
pub fn proposition1_dominance<R: Rng + ?Sized>(
    config: &SystemConfig,
    channels: &ChannelSet,
    spectra: &JointSpectra,
    alloc: &SpectralAllocation,
    trials: usize,
    rng: &mut R,
) -> Result<DominanceReport> {
    let n = spectra.len();
    let (f1, f2, fr) = assemble_precoders(spectra, alloc);
    let fr = scale_relay_to_budget(config, channels, &f1, &f2, fr);
    let structured = matrix_objective(config, channels, f1, f2, fr)?;
    let mut dominated = 0;
    let mut best = f64::NEG_INFINITY;
    for _ in 0..trials {
        let x1 = random_unitary(rng, n) * sqrt_diag(&alloc.lambda1);
        let x2 = random_unitary(rng, n) * sqrt_diag(&alloc.lambda2);
        let fr = random_unitary(rng, n) * sqrt_diag(&alloc.lambda_r) * random_unitary(rng, n);
        let fr = scale_relay_to_budget(config, channels, &x1, &x2, fr);
        let value = matrix_objective(config, channels, x1, x2, fr)?;
        best = best.max(value);
        if value <= structured * (1.0 + 1e-12) {
            dominated += 1;
        }
    }
    Ok(DominanceReport {
        trials,
        dominated,
        structured_objective: structured,
        best_random_objective: best,
    })
}
