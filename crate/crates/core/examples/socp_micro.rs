//! Small conic programs: a geometric mean through a product tree and the
//! AM-GM bound on a bilinear term.

use robust_thp::socp::{amgm_surrogate, build_product_tree, solve_conic, update_phi, ConicProblem, Sense};

fn main() -> robust_thp::Result<()> {
    for leaves in [vec![4.0, 1.0], vec![16.0, 1.0, 1.0, 1.0], vec![2.0, 3.0, 5.0]] {
        let mut p = ConicProblem::new(Sense::Maximize);
        let vars: Vec<_> = leaves
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let x = p.add_var(format!("t{k}"));
                p.set_bounds(x, Some(v), Some(v));
                x
            })
            .collect();
        let tree = build_product_tree(&mut p, &vars, "");
        p.set_objective(tree.tau);
        let sol = solve_conic(&p)?;
        println!("leaves {leaves:?}: tau = {:.9} ({:?}, {} iterations)", sol.objective, sol.status, sol.iterations);
    }

    let (t, beta) = (3.0, 0.5);
    for phi in [0.5, 2.0, update_phi(t, beta), 8.0] {
        println!("phi = {phi:<4}: surrogate {:.6} vs beta(t-1) = {:.6}", amgm_surrogate(t, beta, phi)?, beta * (t - 1.0));
    }
    Ok(())
}
