//! Outer loop: cycle the relay, node-1 and node-2 spectra through their
//! conic subproblems, then re-tighten the surrogate at the new point.

use super::design::{build_subproblem, update_phi, FreeBlock};
use super::solver::{ConicSolver, InteriorPointSolver, SolveStatus};
use crate::error::Result;
use crate::robust_mse::{effective_factors, mmse_equalizer, relay_power, sum_worst_case_mse};
use crate::spectral::{assemble_precoders, joint_svd, mode_terms, uniform_allocation, JointSpectra, SpectralAllocation};
use crate::system::{ChannelSet, DesignSolution, Node, SystemConfig};
use crate::thp::design_for_receiver;

#[derive(Debug, Clone)]
pub struct SurrogateState {
    /// Surrogate parameters of the link carrying node 1's data.
    pub phi: Vec<f64>,
    /// Same for node 2's data.
    pub phi_prime: Vec<f64>,
    /// Completed outer iterations.
    pub iteration: usize,
    /// Objective after each outer iteration.
    pub objective_trace: Vec<f64>,
}

impl SurrogateState {
    /// Parameters that make the surrogate tight at `alloc`.
    pub fn tight_at(config: &SystemConfig, spectra: &JointSpectra, alloc: &SpectralAllocation) -> Self {
        let phi_for = |node: Node| {
            mode_terms(config, &spectra.lambda_h, &spectra.lambda_g, alloc, node)
                .into_iter()
                .map(|(s, d)| update_phi(1.0 + s / d, d))
                .collect()
        };
        SurrogateState {
            phi: phi_for(Node::One),
            phi_prime: phi_for(Node::Two),
            iteration: 0,
            objective_trace: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AlternateOptions {
    pub max_outer: usize,
    /// Stop when `|Δobjective| / max(1, objective)` falls below this.
    pub tolerance: f64,
    pub max_consecutive_failures: usize,
}

impl Default for AlternateOptions {
    fn default() -> Self {
        AlternateOptions {
            max_outer: 50,
            tolerance: 1e-4,
            max_consecutive_failures: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AlternateOutcome {
    /// Design at the iterate with the lowest sum worst-case MSE, see
    /// [`Self::selected_iteration`].
    pub solution: DesignSolution,
    pub state: SurrogateState,
    pub spectra: JointSpectra,
    /// Last iterate of the alternating loop.
    pub allocation: SpectralAllocation,
    /// Iterate behind `solution`: 0 for the initial allocation, `k` for the
    /// allocation after outer iteration `k`.
    pub selected_iteration: usize,
    /// Sum worst-case MSE of `solution`.
    pub sum_mse: f64,
    pub initial_allocation: SpectralAllocation,
    pub initial_objective: f64,
    /// Allocation after each outer iteration, aligned with the trace.
    pub history: Vec<SpectralAllocation>,
    /// Set when the loop gave up after repeated solver failures.
    pub degraded: bool,
    pub solver_failures: usize,
}

/// Tree objective at `alloc`: `Σ_links (Π_k t_k)^(1/2^q)` with the true
/// ratios `t_k = 1 + signal_k/den_k`.
pub fn surrogate_objective(config: &SystemConfig, spectra: &JointSpectra, alloc: &SpectralAllocation) -> f64 {
    let root = 1.0 / spectra.len().next_power_of_two() as f64;
    Node::BOTH
        .iter()
        .map(|&n| {
            mode_terms(config, &spectra.lambda_h, &spectra.lambda_g, alloc, n)
                .iter()
                .map(|(s, d)| (1.0 + s / d).powf(root))
                .product::<f64>()
        })
        .sum()
}

pub fn alternate_optimize(config: &SystemConfig, channels: &ChannelSet) -> Result<AlternateOutcome> {
    alternate_optimize_from(config, channels, None, &AlternateOptions::default(), &InteriorPointSolver::default())
}

/// Alternating optimization from `start`, or from uniform spectra that
/// saturate every budget.
pub fn alternate_optimize_from(
    config: &SystemConfig,
    channels: &ChannelSet,
    start: Option<&SpectralAllocation>,
    options: &AlternateOptions,
    solver: &dyn ConicSolver,
) -> Result<AlternateOutcome> {
    config.validate()?;
    let spectra = joint_svd(channels)?;
    let initial_allocation = start.cloned().unwrap_or_else(|| uniform_allocation(config, &spectra));
    let mut alloc = initial_allocation.clone();
    let mut state = SurrogateState::tight_at(config, &spectra, &alloc);
    let initial_objective = surrogate_objective(config, &spectra, &alloc);
    let mut previous = initial_objective;
    let mut history = Vec::new();
    let mut consecutive = 0;
    let mut failures = 0;
    let mut degraded = false;

    'outer: for outer in 1..=options.max_outer {
        for free in FreeBlock::CYCLE {
            let solved = build_subproblem(config, &spectra, &alloc, free, [&state.phi, &state.phi_prime])
                .and_then(|sub| Ok((solver.solve(&sub.problem)?, sub)));
            match solved {
                Ok((sol, sub)) if sol.status == SolveStatus::Optimal => {
                    consecutive = 0;
                    let values = sub.spectrum_values(&sol.x);
                    set_block(&mut alloc, free, values);
                    repair_budgets(config, &spectra, &mut alloc, free);
                }
                _ => {
                    consecutive += 1;
                    failures += 1;
                    if consecutive >= options.max_consecutive_failures {
                        degraded = true;
                        break 'outer;
                    }
                }
            }
        }
        let tightened = SurrogateState::tight_at(config, &spectra, &alloc);
        state.phi = tightened.phi;
        state.phi_prime = tightened.phi_prime;
        let objective = surrogate_objective(config, &spectra, &alloc);
        state.objective_trace.push(objective);
        state.iteration = outer;
        history.push(alloc.clone());
        if (objective - previous).abs() / objective.abs().max(1.0) < options.tolerance {
            break;
        }
        previous = objective;
    }

    // The diagonal model is exact only when the slices of the joint factors
    // are unitary, so an ascent step on it can still raise the matrix-level
    // MSE. Return the iterate that is best on the true robust objective.
    let mut best: Option<(f64, usize, DesignSolution)> = None;
    for (k, a) in std::iter::once(&initial_allocation).chain(&history).enumerate() {
        let sol = finalize_design(config, channels, &spectra, a)?;
        let mse = sum_worst_case_mse(config, channels, &sol);
        if best.as_ref().is_none_or(|b| mse < b.0) {
            best = Some((mse, k, sol));
        }
    }
    let (sum_mse, selected_iteration, solution) = best.expect("initial allocation is always a candidate");
    Ok(AlternateOutcome {
        solution,
        state,
        spectra,
        allocation: alloc,
        selected_iteration,
        sum_mse,
        initial_allocation,
        initial_objective,
        history,
        degraded,
        solver_failures: failures,
    })
}

fn set_block(alloc: &mut SpectralAllocation, free: FreeBlock, values: Vec<f64>) {
    let values = values.into_iter().map(|v| v.max(0.0)).collect();
    match free {
        FreeBlock::Relay => alloc.lambda_r = values,
        FreeBlock::Source(node) => *alloc.source_mut(node) = values,
    }
}

/// Scales the free block down when solver round-off overshoots a budget.
fn repair_budgets(config: &SystemConfig, spectra: &JointSpectra, alloc: &mut SpectralAllocation, free: FreeBlock) {
    let lh = &spectra.lambda_h;
    let mut scale: f64 = 1.0;
    match free {
        FreeBlock::Relay => {
            let p = alloc.relay_power(config, lh);
            if p > config.p_rt {
                scale = config.p_rt / p;
            }
            alloc.lambda_r.iter_mut().for_each(|v| *v *= scale);
        }
        FreeBlock::Source(node) => {
            let p = alloc.node_power(config, node);
            if p > config.power_budget(node) {
                scale = config.power_budget(node) / p;
            }
            let sx = config.sigma2_x(node);
            let lam = alloc.source(node);
            let coupled: f64 = (0..lam.len()).map(|k| alloc.lambda_r[k] * sx * lam[k] * lh[k]).sum();
            let total = alloc.relay_power(config, lh);
            if total > config.p_rt && coupled > 0.0 {
                scale = scale.min(((config.p_rt - (total - coupled)) / coupled).max(0.0));
            }
            alloc.source_mut(node).iter_mut().for_each(|v| *v *= scale);
        }
    }
}

/// Full transceiver at `alloc`: precoders from the joint factors (relay
/// scaled into its budget if the matrix power exceeds it), feedback matrices
/// from the LDL of each receiver's error covariance, then MMSE equalizers.
pub fn finalize_design(
    config: &SystemConfig,
    channels: &ChannelSet,
    spectra: &JointSpectra,
    alloc: &SpectralAllocation,
) -> Result<DesignSolution> {
    let (f1, f2, fr) = assemble_precoders(spectra, alloc);
    let mut sol = DesignSolution::from_precoders(f1, f2, fr);
    let p = relay_power(config, channels, &sol);
    if p > config.p_rt {
        sol.fr *= crate::numerics::c64((config.p_rt / p).sqrt(), 0.0);
    }
    sol.lambda1 = alloc.lambda1.clone();
    sol.lambda2 = alloc.lambda2.clone();
    sol.lambda_r = alloc.lambda_r.clone();
    for node in Node::BOTH {
        let design = design_for_receiver(&effective_factors(config, channels, &sol, node))?;
        sol.set_c(node.other(), design.c);
    }
    for node in Node::BOTH {
        let gamma = mmse_equalizer(config, channels, &sol, node)?;
        sol.set_gamma(node, gamma);
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::numerics::{c64, CMatrix};
    use crate::random::{stream_rng, Role};
    use crate::robust_mse::node_power;
    use crate::socp::problem::ConicProblem;
    use crate::socp::solver::ConicSolution;
    use crate::system::generate_channels;

    #[test]
    fn ascent_on_random_instances() {
        let cfg = SystemConfig::default();
        for trial in 0..5 {
            let ch = generate_channels(&cfg, &mut stream_rng(11, trial, Role::Channels));
            let out = alternate_optimize(&cfg, &ch).unwrap();
            assert!(!out.degraded);
            let mut prev = out.initial_objective;
            for &v in &out.state.objective_trace {
                assert!(v >= prev - 1e-6, "trial {trial}: {v} < {prev}");
                prev = v;
            }
            for a in &out.history {
                assert!(a.power_violation(&cfg, &out.spectra.lambda_h) <= 1e-8);
            }
            let s = &out.solution;
            assert!(relay_power(&cfg, &ch, s) <= cfg.p_rt * (1.0 + 1e-10));
            for n in Node::BOTH {
                assert!(node_power(&cfg, s, n) <= cfg.power_budget(n) * (1.0 + 1e-10));
            }
            let init = finalize_design(&cfg, &ch, &out.spectra, &out.initial_allocation).unwrap();
            assert!(out.sum_mse <= sum_worst_case_mse(&cfg, &ch, &init));
            assert!((out.sum_mse - sum_worst_case_mse(&cfg, &ch, s)).abs() < 1e-12);
        }
    }

    fn scalar_case() -> (SystemConfig, ChannelSet) {
        let cfg = SystemConfig {
            n_t: 1,
            n_r: 1,
            sigma2_g1: 0.0,
            sigma2_g2: 0.0,
            ..SystemConfig::default()
        };
        let s = |x: f64| CMatrix::from_element(1, 1, c64(x, 0.0));
        let ch = ChannelSet {
            h1: s(1.0),
            h2: s(0.5),
            g1_hat: s(0.9),
            g2_hat: s(0.8),
            dg1: s(0.0),
            dg2: s(0.0),
        };
        (cfg, ch)
    }

    #[test]
    fn scalar_optimum_saturates_budgets() {
        let (cfg, ch) = scalar_case();
        let out = alternate_optimize(&cfg, &ch).unwrap();
        let a = &out.allocation;
        let lh = out.spectra.lambda_h[0];
        assert!((a.lambda1[0] - cfg.p_1t / cfg.sigma2_x1).abs() < 1e-6);
        assert!((a.lambda2[0] - cfg.p_2t / cfg.sigma2_x2).abs() < 1e-6);
        let boundary = cfg.p_rt / (cfg.sigma2_x1 * a.lambda1[0] * lh + cfg.sigma2_x2 * a.lambda2[0] * lh + cfg.sigma2_nr);
        assert!((a.lambda_r[0] - boundary).abs() < 1e-6 * boundary);

        // Grid oracle over the node spectra with the relay on its boundary.
        let mut best = f64::NEG_INFINITY;
        for i in 0..=100 {
            for j in 0..=100 {
                let (l1, l2) = (cfg.p_1t * i as f64 / 100.0, cfg.p_2t * j as f64 / 100.0);
                let lr = cfg.p_rt / (cfg.sigma2_x1 * l1 * lh + cfg.sigma2_x2 * l2 * lh + cfg.sigma2_nr);
                let cand = SpectralAllocation {
                    lambda1: vec![l1],
                    lambda2: vec![l2],
                    lambda_r: vec![lr],
                };
                best = best.max(surrogate_objective(&cfg, &out.spectra, &cand));
            }
        }
        let reached = surrogate_objective(&cfg, &out.spectra, a);
        assert!(reached >= best - 1e-6 * best, "{reached} < grid {best}");
    }

    #[test]
    fn relay_coupling_blocks_single_block_moves() {
        // With the relay budget active, raising a node spectrum alone breaks
        // the relay constraint, so block ascent stays put.
        let (cfg, ch) = scalar_case();
        let spectra = joint_svd(&ch).unwrap();
        let lh = spectra.lambda_h[0];
        let lr = cfg.p_rt / (2.0 * lh + 3.0 * lh + cfg.sigma2_nr);
        let start = SpectralAllocation {
            lambda1: vec![2.0],
            lambda2: vec![3.0],
            lambda_r: vec![lr],
        };
        let out = alternate_optimize_from(&cfg, &ch, Some(&start), &AlternateOptions::default(), &InteriorPointSolver::default()).unwrap();
        assert!((out.allocation.lambda1[0] - 2.0).abs() < 1e-6);
        assert!(out.state.iteration <= 2);
    }

    #[test]
    fn converged_start_is_a_fixed_point() {
        let cfg = SystemConfig::default();
        let ch = generate_channels(&cfg, &mut stream_rng(4, 0, Role::Channels));
        let first = alternate_optimize(&cfg, &ch).unwrap();
        let again = alternate_optimize_from(
            &cfg,
            &ch,
            Some(&first.allocation),
            &AlternateOptions::default(),
            &InteriorPointSolver::default(),
        )
        .unwrap();
        assert_eq!(again.state.iteration, 1);
        let change = (again.state.objective_trace[0] - again.initial_objective).abs();
        assert!(change / again.initial_objective.max(1.0) < 1e-4);
    }

    struct Failing;

    impl ConicSolver for Failing {
        fn solve(&self, _: &ConicProblem) -> Result<ConicSolution> {
            Err(Error::InvalidParameter("always fails".into()))
        }
    }

    #[test]
    fn persistent_failures_return_incumbent() {
        let cfg = SystemConfig::default();
        let ch = generate_channels(&cfg, &mut stream_rng(4, 1, Role::Channels));
        let out = alternate_optimize_from(&cfg, &ch, None, &AlternateOptions::default(), &Failing).unwrap();
        assert!(out.degraded);
        assert_eq!(out.solver_failures, 3);
        assert_eq!(out.allocation, out.initial_allocation);
        assert_eq!(out.selected_iteration, 0);
    }
}
