//! Convex subproblems over one power spectrum with the other two fixed.
//!
//! For each link the objective `Π_k t_k` is replaced by the root of a binary
//! tree of hyperbolic cones, and the bilinear constraint
//! `signal_k ≥ β_k (t_k − 1)` by its convex upper bound
//! `φ_k β_k²/2 + (t_k − 1)²/(2φ_k)`.

use super::problem::{Affine, ConicProblem, Sense, Var};
use crate::error::{Error, Result};
use crate::spectral::{mode_terms, JointSpectra, SpectralAllocation};
use crate::system::{Node, SystemConfig};

/// Lower clamp for `φ` so the surrogate stays finite when `t → 1`.
pub const PHI_FLOOR: f64 = 1e-9;

pub fn amgm_surrogate(t: f64, beta: f64, phi: f64) -> Result<f64> {
    if !(phi.is_finite() && phi > 0.0) {
        return Err(Error::InvalidParameter(format!("phi must be positive, got {phi}")));
    }
    Ok(phi * beta * beta / 2.0 + (t - 1.0) * (t - 1.0) / (2.0 * phi))
}

/// The `φ` at which the surrogate touches `β (t − 1)`, floored at
/// [`PHI_FLOOR`].
pub fn update_phi(t: f64, beta: f64) -> f64 {
    let phi = (t - 1.0) / beta;
    if phi.is_finite() {
        phi.max(PHI_FLOOR)
    } else {
        PHI_FLOOR
    }
}

/// Variables of one product tree.
#[derive(Debug, Clone)]
pub struct ProductTree {
    /// Objective variable, bounded by the root.
    pub tau: Var,
    /// Internal nodes, level by level from the leaves up; the last is the root.
    pub nodes: Vec<Var>,
    /// Unit of each internal node, aligned with `nodes`.
    pub node_units: Vec<f64>,
    /// Unit of `tau`.
    pub tau_unit: f64,
    pub depth: u32,
}

impl ProductTree {
    pub fn leaf_count(&self) -> usize {
        1 << self.depth
    }
}

/// Adds `τ ≤ (Π leaves · 1^pad)^(1/2^q)` as hyperbolic cones
/// `‖[2v, u − w]‖ ≤ u + w`, one per internal node.
pub fn build_product_tree(problem: &mut ConicProblem, leaves: &[Var], prefix: &str) -> ProductTree {
    build_product_tree_scaled(problem, leaves, &vec![1.0; leaves.len()], prefix)
}

/// Same tree over leaves measured in `units`: leaf `k` stands for
/// `units[k]·x_k`. Each node is measured in the geometric mean of its
/// children's units, which turns every cone into the plain form on the
/// scaled variables, and `τ` in the root's unit. Choosing units near the
/// expected values keeps all variables of order one.
pub fn build_product_tree_scaled(problem: &mut ConicProblem, leaves: &[Var], units: &[f64], prefix: &str) -> ProductTree {
    assert!(!leaves.is_empty(), "product tree needs at least one leaf");
    assert_eq!(leaves.len(), units.len());
    let depth = leaves.len().next_power_of_two().trailing_zeros();
    let mut level: Vec<(Affine, f64)> = leaves.iter().zip(units).map(|(&v, &u)| (Affine::from(v), u)).collect();
    // Padding leaves are the constant 1 in unit 1.
    level.resize(1 << depth, (Affine::constant(1.0), 1.0));
    let mut nodes = Vec::new();
    let mut node_units = Vec::new();
    let mut height = 1;
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len() / 2);
        for (j, pair) in level.chunks(2).enumerate() {
            let v = problem.add_var(format!("{prefix}v[{height},{}]", j + 1));
            let ((u, hu), (w, hw)) = (pair[0].clone(), pair[1].clone());
            problem.cone(
                vec![u.clone() + w.clone(), Affine::term(v, 2.0), u - w],
                format!("{prefix}tree[{height},{}]", j + 1),
            );
            let unit = (hu * hw).sqrt();
            nodes.push(v);
            node_units.push(unit);
            next.push((Affine::from(v), unit));
        }
        level = next;
        height += 1;
    }
    let (root, tau_unit) = level.pop().unwrap();
    let tau = problem.add_var(format!("{prefix}tau"));
    problem.le(tau, root, format!("{prefix}root"));
    ProductTree {
        tau,
        nodes,
        node_units,
        tau_unit,
        depth,
    }
}

/// Which spectrum a subproblem optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreeBlock {
    Relay,
    Source(Node),
}

impl FreeBlock {
    /// Cycle order of one outer iteration.
    pub const CYCLE: [FreeBlock; 3] = [FreeBlock::Relay, FreeBlock::Source(Node::One), FreeBlock::Source(Node::Two)];
}

/// Per-link variables of a subproblem. Link `i` carries node `i`'s data.
#[derive(Debug, Clone)]
pub struct LinkVars {
    pub t: Vec<Var>,
    pub beta: Vec<Var>,
    pub tree: ProductTree,
}

/// A subproblem in scaled variables: solver variable `j` stands for the
/// physical value `units[j]·x_j`. Units come from the incumbent allocation,
/// so every variable is of order one near it whatever the noise level.
#[derive(Debug, Clone)]
pub struct Subproblem {
    pub problem: ConicProblem,
    pub free: FreeBlock,
    pub spectrum: Vec<Var>,
    pub links: [LinkVars; 2],
    pub units: Vec<f64>,
}

fn product(a: &Affine, b: &Affine) -> Affine {
    match (a.terms.is_empty(), b.terms.is_empty()) {
        (true, _) => b.clone() * a.constant,
        (_, true) => a.clone() * b.constant,
        _ => unreachable!("at most one spectrum is free"),
    }
}

/// Builds the subproblem for `free` around the fixed part of `alloc`.
///
/// `phi[i]` holds the surrogate parameters of link `i`.
pub fn build_subproblem(
    config: &SystemConfig,
    spectra: &JointSpectra,
    alloc: &SpectralAllocation,
    free: FreeBlock,
    phi: [&[f64]; 2],
) -> Result<Subproblem> {
    let n = spectra.len();
    for (name, values) in [("lambda_1", &alloc.lambda1), ("lambda_2", &alloc.lambda2), ("lambda_r", &alloc.lambda_r)] {
        if values.len() != n {
            return Err(Error::DimensionMismatch {
                context: "spectrum length",
                expected: n.to_string(),
                found: values.len().to_string(),
            });
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Infeasible(format!("{name} has a negative or non-finite entry")));
        }
    }
    for p in phi {
        if p.len() != n || p.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidParameter("phi must hold one positive value per mode".into()));
        }
    }
    check_fixed_feasible(config, spectra, alloc, free)?;

    let mut problem = ConicProblem::new(Sense::Maximize);
    let label = match free {
        FreeBlock::Relay => "lambda_r",
        FreeBlock::Source(Node::One) => "lambda_1",
        FreeBlock::Source(Node::Two) => "lambda_2",
    };
    let spectrum: Vec<Var> = (0..n).map(|k| problem.add_nonneg(format!("{label}[{}]", k + 1))).collect();
    let lh = &spectra.lambda_h;
    let lg = &spectra.lambda_g;
    let level = spectrum_unit(config, lh, alloc, free);
    let mut units = vec![level; n];
    let as_affine = |values: &[f64], block: FreeBlock| -> Vec<Affine> {
        if block == free {
            spectrum.iter().map(|&v| Affine::term(v, level)).collect()
        } else {
            values.iter().map(|&v| Affine::constant(v)).collect()
        }
    };
    let l1 = as_affine(&alloc.lambda1, FreeBlock::Source(Node::One));
    let l2 = as_affine(&alloc.lambda2, FreeBlock::Source(Node::Two));
    let lr = as_affine(&alloc.lambda_r, FreeBlock::Relay);
    let current: [Vec<(f64, f64)>; 2] = Node::BOTH.map(|source| mode_terms(config, lh, lg, alloc, source));

    // Units: incumbent ratio for t, incumbent denominator for β.
    let t_units: [Vec<f64>; 2] = [0, 1].map(|i| current[i].iter().map(|(s, d)| 1.0 + s / d).collect());
    let b_units: [Vec<f64>; 2] = [0, 1].map(|i| current[i].iter().map(|(_, d)| *d).collect());
    let t: [Vec<Var>; 2] = [0, 1].map(|i| {
        let tag = if i == 0 { "t" } else { "t'" };
        (0..n).map(|k| problem.add_var(format!("{tag}[{}]", k + 1))).collect()
    });
    units.extend(t_units.iter().flatten());
    let beta: [Vec<Var>; 2] = [0, 1].map(|i| {
        let tag = if i == 0 { "beta" } else { "beta'" };
        (0..n).map(|k| problem.add_var(format!("{tag}[{}]", k + 1))).collect()
    });
    units.extend(b_units.iter().flatten());

    let mut trees = Vec::with_capacity(2);
    for (i, source) in Node::BOTH.into_iter().enumerate() {
        let prefix = if i == 0 { "" } else { "'" };
        let tree = build_product_tree_scaled(&mut problem, &t[i], &t_units[i], prefix);
        units.extend(&tree.node_units);
        units.push(tree.tau_unit);
        trees.push(tree);
        let receiver = source.other();
        let sx = config.sigma2_x(source);
        let sg = config.sigma2_g(receiver);
        let lam = if source == Node::One { &l1 } else { &l2 };
        let mut base = Affine::constant(config.sigma2_n(receiver));
        for m in 0..n {
            base = base + product(&lr[m], &lam[m]) * (sx * sg * lh[m]) + lr[m].clone() * (config.sigma2_nr * sg);
        }
        for k in 0..n {
            let signal = product(&lam[k], &lr[k]) * (sx * lh[k] * lg[k]);
            let den = base.clone() + lr[k].clone() * (config.sigma2_nr * lg[k]);
            let (tu, bu) = (t_units[i][k], b_units[i][k]);
            problem.ge(Affine::term(beta[i][k], bu), den, format!("beta{prefix}-def[{}]", k + 1));
            if signal.is_constant() && signal.constant == 0.0 {
                problem.le(Affine::term(t[i][k], tu), 1.0, format!("signal{prefix}[{}]", k + 1));
                continue;
            }
            // (signal + r)² − (signal − r)² = 4r·signal for any r > 0; r near
            // the current signal keeps the entries balanced.
            let p = phi[i][k];
            let r = if current[i][k].0 > 0.0 { current[i][k].0 } else { 1.0 };
            problem.cone(
                vec![
                    signal.clone() + r,
                    Affine::term(beta[i][k], (2.0 * p * r).sqrt() * bu),
                    (Affine::term(t[i][k], tu) - 1.0) * (2.0 * r / p).sqrt(),
                    signal - r,
                ],
                format!("signal{prefix}[{}]", k + 1),
            );
        }
    }

    let mut relay = Affine::default();
    for k in 0..n {
        let load = product(&l1[k], &Affine::constant(config.sigma2_x1 * lh[k]))
            + product(&l2[k], &Affine::constant(config.sigma2_x2 * lh[k]))
            + config.sigma2_nr;
        relay = relay + product(&lr[k], &load);
    }
    problem.le(relay, config.p_rt, "relay power");
    for (node, lam) in [(Node::One, &l1), (Node::Two, &l2)] {
        let total = lam.iter().fold(Affine::default(), |acc, e| acc + e.clone()) * config.sigma2_x(node);
        problem.le(total, config.power_budget(node), format!("node {} power", node.index() + 1));
    }

    let trees: [ProductTree; 2] = trees.try_into().expect("two links");
    problem.set_objective(Affine::term(trees[0].tau, trees[0].tau_unit) + Affine::term(trees[1].tau, trees[1].tau_unit));
    debug_assert_eq!(units.len(), problem.num_vars());
    let [tr0, tr1] = trees;
    let [t0, t1] = t;
    let [b0, b1] = beta;
    Ok(Subproblem {
        problem,
        free,
        spectrum,
        links: [
            LinkVars { t: t0, beta: b0, tree: tr0 },
            LinkVars { t: t1, beta: b1, tree: tr1 },
        ],
        units,
    })
}

/// Typical size of the free spectrum: the uniform level that meets its budget.
fn spectrum_unit(config: &SystemConfig, lambda_h: &[f64], alloc: &SpectralAllocation, free: FreeBlock) -> f64 {
    let n = lambda_h.len() as f64;
    let level = match free {
        FreeBlock::Source(node) => config.power_budget(node) / (config.sigma2_x(node) * n),
        FreeBlock::Relay => {
            let load: f64 = (0..lambda_h.len())
                .map(|k| (config.sigma2_x1 * alloc.lambda1[k] + config.sigma2_x2 * alloc.lambda2[k]) * lambda_h[k] + config.sigma2_nr)
                .sum();
            config.p_rt / load
        }
    };
    if level.is_finite() && level > 0.0 {
        level
    } else {
        1.0
    }
}

/// Rejects fixed spectra that leave no feasible point even with the free
/// block switched off.
fn check_fixed_feasible(config: &SystemConfig, spectra: &JointSpectra, alloc: &SpectralAllocation, free: FreeBlock) -> Result<()> {
    let mut floor = alloc.clone();
    match free {
        FreeBlock::Relay => floor.lambda_r.iter_mut().for_each(|v| *v = 0.0),
        FreeBlock::Source(node) => floor.source_mut(node).iter_mut().for_each(|v| *v = 0.0),
    }
    let slack = |budget: f64| budget * (1.0 + 1e-9) + 1e-12;
    let relay = floor.relay_power(config, &spectra.lambda_h);
    if relay > slack(config.p_rt) {
        return Err(Error::Infeasible(format!("relay power {relay} exceeds budget {} with the free block at zero", config.p_rt)));
    }
    for node in Node::BOTH {
        let p = floor.node_power(config, node);
        if p > slack(config.power_budget(node)) {
            return Err(Error::Infeasible(format!(
                "node {} power {p} exceeds budget {}",
                node.index() + 1,
                config.power_budget(node)
            )));
        }
    }
    Ok(())
}

impl Subproblem {
    /// Solver point representing `alloc` itself: `β = den`,
    /// `t = 1 + signal/den`, tree nodes at their geometric means.
    pub fn incumbent_point(&self, config: &SystemConfig, spectra: &JointSpectra, alloc: &SpectralAllocation) -> Vec<f64> {
        let mut x = vec![0.0; self.problem.num_vars()];
        let current = match self.free {
            FreeBlock::Relay => &alloc.lambda_r,
            FreeBlock::Source(node) => alloc.source(node),
        };
        for (v, val) in self.spectrum.iter().zip(current) {
            x[v.0] = *val;
        }
        for (i, source) in Node::BOTH.into_iter().enumerate() {
            let link = &self.links[i];
            let terms = mode_terms(config, &spectra.lambda_h, &spectra.lambda_g, alloc, source);
            let mut level: Vec<f64> = Vec::new();
            for (k, (signal, den)) in terms.into_iter().enumerate() {
                x[link.beta[k].0] = den;
                x[link.t[k].0] = 1.0 + signal / den;
                level.push(1.0 + signal / den);
            }
            level.resize(link.tree.leaf_count(), 1.0);
            let mut idx = 0;
            while level.len() > 1 {
                level = level.chunks(2).map(|p| (p[0] * p[1]).sqrt()).collect();
                for v in &level {
                    x[link.tree.nodes[idx].0] = *v;
                    idx += 1;
                }
            }
            x[link.tree.tau.0] = level[0];
        }
        x.iter().zip(&self.units).map(|(v, u)| v / u).collect()
    }

    /// Physical values of all variables at a solver point.
    pub fn physical(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.units).map(|(v, u)| v * u).collect()
    }

    /// Free-spectrum values at a solver point.
    pub fn spectrum_values(&self, x: &[f64]) -> Vec<f64> {
        self.spectrum.iter().map(|v| x[v.0] * self.units[v.0]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c64, CMatrix};
    use crate::socp::solver::{solve_conic, SolveStatus};
    use crate::spectral::{joint_svd, uniform_allocation};
    use crate::system::ChannelSet;

    fn fixed_tree(values: &[f64]) -> f64 {
        let mut p = ConicProblem::new(Sense::Maximize);
        let leaves: Vec<Var> = values
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let t = p.add_var(format!("t{k}"));
                p.eq(t, v, "fix");
                t
            })
            .collect();
        let tree = build_product_tree(&mut p, &leaves, "");
        p.set_objective(tree.tau);
        let sol = solve_conic(&p).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        sol.objective
    }

    #[test]
    fn tree_maxima() {
        assert!((fixed_tree(&[4.0, 1.0]) - 2.0).abs() < 1e-7);
        assert!((fixed_tree(&[16.0, 1.0, 1.0, 1.0]) - 2.0).abs() < 1e-7);
        assert!((fixed_tree(&[2.5]) - 2.5).abs() < 1e-7);
        // Three leaves are padded with a one.
        assert!((fixed_tree(&[2.0, 4.0, 8.0]) - 64f64.powf(0.25)).abs() < 1e-7);
    }

    #[test]
    fn single_leaf_tree_has_no_cones() {
        let mut p = ConicProblem::new(Sense::Maximize);
        let t = p.add_var("t");
        let tree = build_product_tree(&mut p, &[t], "");
        assert_eq!((p.num_cones(), tree.nodes.len(), tree.depth), (0, 0, 0));
    }

    #[test]
    fn surrogate_values() {
        assert_eq!(amgm_surrogate(1.0, 3.0, 1.0).unwrap(), 4.5);
        assert!((amgm_surrogate(3.0, 1.0, update_phi(3.0, 1.0)).unwrap() - 2.0).abs() < 1e-15);
        assert!(amgm_surrogate(2.0, 1.0, 0.0).is_err());
        assert!(amgm_surrogate(2.0, 1.0, -1.0).is_err());
        assert_eq!(update_phi(3.0, 1.0), 2.0);
        assert_eq!(update_phi(1.0, 5.0), PHI_FLOOR);
        assert_eq!(update_phi(2.0, 4.0), 0.25);
    }

    fn scalar_setup(g: f64) -> (SystemConfig, JointSpectra) {
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
            g1_hat: s(g),
            g2_hat: s(0.8),
            dg1: s(0.0),
            dg2: s(0.0),
        };
        (cfg, joint_svd(&ch).unwrap())
    }

    #[test]
    fn relay_off_forces_unit_root() {
        let cfg = SystemConfig::default();
        let (_, spectra) = scalar_setup(1.0);
        let mut alloc = uniform_allocation(&cfg, &spectra);
        alloc.lambda_r = vec![0.0];
        let phi = vec![1.0];
        let sub = build_subproblem(&cfg, &spectra, &alloc, FreeBlock::Source(Node::One), [&phi, &phi]).unwrap();
        let sol = solve_conic(&sub.problem).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sub.physical(&sol.x)[sub.links[0].tree.tau.0] - 1.0).abs() < 1e-7);
        assert!((sol.objective - 2.0).abs() < 1e-7);
    }

    #[test]
    fn structural_counts() {
        let cfg = SystemConfig::default();
        let ch = crate::system::generate_channels(&cfg, &mut crate::random::stream_rng(5, 0, crate::random::Role::Channels));
        let spectra = joint_svd(&ch).unwrap();
        let alloc = uniform_allocation(&cfg, &spectra);
        let phi = vec![0.5; 4];
        for free in FreeBlock::CYCLE {
            let sub = build_subproblem(&cfg, &spectra, &alloc, free, [&phi, &phi]).unwrap();
            let n = 4;
            let q = 2;
            assert_eq!(sub.problem.num_vars(), n + 2 * n + 2 * n + 2 * ((1 << q) - 1) + 2);
            assert_eq!(sub.problem.num_cones(), 2 * ((1 << q) - 1) + 2 * n);
        }
    }

    #[test]
    fn incumbent_is_feasible() {
        use crate::socp::alternate::SurrogateState;
        let cfg = SystemConfig::default();
        for trial in 0..10 {
            let ch = crate::system::generate_channels(&cfg, &mut crate::random::stream_rng(6, trial, crate::random::Role::Channels));
            let spectra = joint_svd(&ch).unwrap();
            let alloc = uniform_allocation(&cfg, &spectra);
            let st = SurrogateState::tight_at(&cfg, &spectra, &alloc);
            for free in FreeBlock::CYCLE {
                let sub = build_subproblem(&cfg, &spectra, &alloc, free, [&st.phi, &st.phi_prime]).unwrap();
                let x = sub.incumbent_point(&cfg, &spectra, &alloc);
                let (v, label) = sub.problem.max_scaled_violation(&x);
                assert!(v < 1e-12, "{label}: {v}");
                let sol = solve_conic(&sub.problem).unwrap();
                assert_eq!(sol.status, SolveStatus::Optimal);
                assert!(sol.objective >= sub.problem.objective_value(&x) - 1e-6);
                assert!(sol.primal_residual < 1e-8 && sol.relative_gap < 1e-8);
            }
        }
    }

    #[test]
    fn infeasible_fixed_spectra_are_named() {
        let cfg = SystemConfig::default();
        let (_, spectra) = scalar_setup(1.0);
        let mut alloc = uniform_allocation(&cfg, &spectra);
        alloc.lambda_r = vec![1e6];
        let phi = vec![1.0];
        let err = build_subproblem(&cfg, &spectra, &alloc, FreeBlock::Source(Node::One), [&phi, &phi]).unwrap_err();
        assert!(err.to_string().contains("relay power"));
        alloc.lambda_r = vec![-1.0];
        assert!(build_subproblem(&cfg, &spectra, &alloc, FreeBlock::Relay, [&phi, &phi]).is_err());
    }
}
