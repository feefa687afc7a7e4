//! End-to-end acceptance checks. Each test writes one PASS/FAIL line to
//! stderr (unbuffered, so it shows up even when output is captured).

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use robust_thp::numerics::{c64, det_hpd, frob2, trace_re, CMatrix};
use robust_thp::random::{complex_gaussian_matrix, qam_vector, stream_rng, Role};
use robust_thp::robust_mse::{effective_factors, mmse_equalizer, node_power, reduced_mse, relay_power, worst_case_mse_with};
use robust_thp::socp::{amgm_surrogate, build_product_tree, solve_conic, alternate_optimize, ConicProblem, Sense, SolveStatus, Var};
use robust_thp::system::{generate_channels, simulate_link, LinkNoise};
use robust_thp::thp::compute_feedback_matrix;
use robust_thp::{ChannelSet, DesignSolution, Node, SystemConfig};

fn report(id: u32, name: &str, pass: bool, detail: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "[{tag}] criterion {id:>2} {name}: {detail}");
}

fn unit_lower(rng: &mut impl rand::Rng, n: usize) -> CMatrix {
    let mut c = complex_gaussian_matrix(rng, n, n, 1.0);
    for i in 0..n {
        c[(i, i)] = c64(1.0, 0.0);
        for j in i + 1..n {
            c[(i, j)] = c64(0.0, 0.0);
        }
    }
    c
}

/// Random channels, precoders and feedback matrices at `σ²_g = 0.05`.
fn random_instance(seed: u64, trial: u64) -> (SystemConfig, ChannelSet, DesignSolution) {
    let config = SystemConfig {
        sigma2_g1: 0.05,
        sigma2_g2: 0.03,
        ..SystemConfig::default()
    };
    let mut rng = stream_rng(seed, trial, Role::Channels);
    let channels = generate_channels(&config, &mut rng);
    let n = config.n_t;
    let mut sol = DesignSolution::from_precoders(
        complex_gaussian_matrix(&mut rng, n, n, 0.5),
        complex_gaussian_matrix(&mut rng, n, n, 0.5),
        complex_gaussian_matrix(&mut rng, n, n, 0.3),
    );
    for node in Node::BOTH {
        let c = unit_lower(&mut rng, n);
        sol.set_c(node, c);
    }
    (config, channels, sol)
}

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_thp-sim")
}

fn run_cli(args: &[&str]) {
    let out = Command::new(binary()).args(args).output().expect("spawn thp-sim");
    assert!(out.status.success(), "thp-sim {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn read_csv(path: &Path) -> Vec<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(|f| f.parse::<f64>().unwrap()).collect())
        .collect()
}

#[test]
fn c01_bound_at_equalizer_equals_reduced_form() {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    for trial in 0..50 {
        let (config, channels, sol) = random_instance(101, trial);
        for node in Node::BOTH {
            let gamma = mmse_equalizer(&config, &channels, &sol, node).unwrap();
            let bound = worst_case_mse_with(&config, &channels, &sol, node, &gamma);
            let factors = effective_factors(&config, &channels, &sol, node);
            let reduced = reduced_mse(&factors, sol.c(node.other())).unwrap();
            worst = worst.max((bound - reduced).abs() / bound.abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst < 1e-10 && secs < 1.0;
    report(1, "MSE forms agree", pass, format!("max rel diff {worst:.2e} over 50 instances, {secs:.3} s"));
    assert!(pass);
}

#[test]
fn c02_equalizer_is_stationary() {
    let h = 1e-5;
    let mut worst = 0.0_f64;
    for trial in 0..20 {
        let (config, channels, sol) = random_instance(202, trial);
        for node in Node::BOTH {
            let gamma = mmse_equalizer(&config, &channels, &sol, node).unwrap();
            let f = |g: &CMatrix| worst_case_mse_with(&config, &channels, &sol, node, g);
            for idx in 0..gamma.len() {
                for dir in [c64(h, 0.0), c64(0.0, h)] {
                    let mut plus = gamma.clone();
                    let mut minus = gamma.clone();
                    plus[idx] += dir;
                    minus[idx] -= dir;
                    let grad = (f(&plus) - f(&minus)) / (2.0 * h);
                    worst = worst.max(grad.abs());
                }
            }
        }
    }
    let pass = worst < 1e-6;
    report(2, "equalizer stationarity", pass, format!("max |finite-difference gradient| {worst:.2e} on 20 instances"));
    assert!(pass);
}

#[test]
fn c03_bound_dominates_sampled_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("g05.toml");
    std::fs::write(&cfg, "sigma2_g1 = 0.05\nsigma2_g2 = 0.05\n").unwrap();
    let out = dir.path().join("audit.csv");
    run_cli(&[
        "bound-audit",
        "--config",
        cfg.to_str().unwrap(),
        "--realizations",
        "20",
        "--samples",
        "10000",
        "--out",
        out.to_str().unwrap(),
    ]);
    let rows = read_csv(&out);
    let violations = rows.iter().filter(|r| r[2] > r[1] + 1e-9).count();
    let min_slack = rows.iter().map(|r| r[3]).fold(f64::INFINITY, f64::min);
    let pass = rows.len() == 20 && violations == 0;
    report(3, "bound dominance", pass, format!("{} trials x 1e4 samples, {violations} violations, min slack {min_slack:.3e}", rows.len()));
    assert!(pass);
}

/// Cyclic coordinate descent on the real and imaginary parts of the free
/// entries, each step an exact minimization of a 1-D parabola fitted from
/// three evaluations.
fn brute_force_feedback(j: &CMatrix) -> f64 {
    let n = j.nrows();
    let obj = |c: &CMatrix| trace_re(&(c * j * c.adjoint()));
    let mut c = CMatrix::identity(n, n);
    let mut slots = Vec::new();
    for r in 0..n {
        for k in 0..r {
            slots.push(((r, k), c64(1.0, 0.0)));
            slots.push(((r, k), c64(0.0, 1.0)));
        }
    }
    for _ in 0..500 {
        for &(pos, dir) in &slots {
            let f0 = obj(&c);
            let mut cp = c.clone();
            cp[pos] += dir;
            let mut cm = c.clone();
            cm[pos] -= dir;
            let (fp, fm) = (obj(&cp), obj(&cm));
            let curv = fp + fm - 2.0 * f0;
            if curv > 0.0 {
                let step = -(fp - fm) / (2.0 * curv);
                c[pos] += dir * step;
            }
        }
    }
    obj(&c)
}

#[test]
fn c04_feedback_matrix_matches_brute_force() {
    let mut worst = 0.0_f64;
    for n in [2usize, 3] {
        let mut rng = stream_rng(404, n as u64, Role::Channels);
        for _ in 0..20 {
            let a = complex_gaussian_matrix(&mut rng, n, n, 1.0);
            let j = &a * a.adjoint() + CMatrix::identity(n, n).scale(0.1);
            let design = compute_feedback_matrix(&j).unwrap();
            let achieved = trace_re(&(&design.c * &j * design.c.adjoint()));
            worst = worst.max((achieved - brute_force_feedback(&j)).abs());
        }
    }
    let pass = worst < 1e-6;
    report(4, "feedback optimality", pass, format!("max |LDL - brute force| {worst:.2e} for N_t in {{2,3}}"));
    assert!(pass);
}

#[test]
fn c05_monotone_ascent_and_fast_convergence() {
    let config = SystemConfig::default();
    let start = Instant::now();
    let (mut bad_steps, mut iterations, mut failures, mut fallback, mut worse) = (0, 0usize, 0usize, 0, 0);
    for trial in 0..50 {
        let channels = generate_channels(&config, &mut stream_rng(505, trial, Role::Channels));
        let out = alternate_optimize(&config, &channels).unwrap();
        let mut prev = out.initial_objective;
        for &v in &out.state.objective_trace {
            if v < prev - 1e-6 {
                bad_steps += 1;
            }
            prev = v;
        }
        iterations += out.state.iteration;
        failures += out.solver_failures;
        fallback += (out.selected_iteration == 0) as usize;
        let init = robust_thp::socp::finalize_design(&config, &channels, &out.spectra, &out.initial_allocation).unwrap();
        worse += (out.sum_mse > robust_thp::robust_mse::sum_worst_case_mse(&config, &channels, &init)) as usize;
    }
    let secs = start.elapsed().as_secs_f64();
    let mean = iterations as f64 / 50.0;
    let pass = bad_steps == 0 && mean <= 20.0 && secs < 300.0;
    report(
        5,
        "monotone ascent",
        pass,
        format!(
            "{bad_steps} decreasing steps, mean {mean:.2} outer iterations, {failures} solver failures, \
             {fallback}/50 kept the initial allocation, {worse}/50 worse than initial, {secs:.1} s"
        ),
    );
    assert!(pass);
}

#[test]
fn c06_power_sweep_ordering() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let start = Instant::now();
    run_cli(&["power-sweep", "--realizations", "100", "--sweep", "5,10,15,20,25", "--out", out.to_str().unwrap()]);
    let secs = start.elapsed().as_secs_f64();
    let rows = read_csv(&out);
    let levels = [0.0, 0.01, 0.05];
    let curve = |sg: f64| -> Vec<f64> { rows.iter().filter(|r| r[0] == sg).map(|r| r[2]).collect() };
    let curves: Vec<Vec<f64>> = levels.iter().map(|&s| curve(s)).collect();
    let points = curves[0].len();
    let ordered = (0..points).all(|k| curves[0][k] < curves[1][k] && curves[1][k] < curves[2][k]);
    let monotone = curves.iter().all(|c| c.windows(2).all(|w| w[1] <= w[0]));
    let pass = points >= 5 && curves.iter().all(|c| c.len() == points) && ordered && monotone && secs < 1800.0;
    let summary: Vec<String> = curves
        .iter()
        .zip(levels)
        .map(|(c, s)| format!("sg={s}: {:.4}..{:.4}", c[0], c[points - 1]))
        .collect();
    report(6, "MSE vs power ordering", pass, format!("ordered={ordered} monotone={monotone} [{}], {secs:.0} s", summary.join(", ")));
    assert!(pass);
}

/// Symbol errors over 1000 vector pairs through a noiseless link, with the
/// design optimized for noise variance `design_noise`.
fn round_trip_errors(design_noise: f64) -> usize {
    let config = SystemConfig {
        sigma2_g1: 0.0,
        sigma2_g2: 0.0,
        sigma2_nr: design_noise,
        sigma2_n1: design_noise,
        sigma2_n2: design_noise,
        qam_m: 4,
        ..SystemConfig::default()
    };
    let channels = generate_channels(&config, &mut stream_rng(707, 0, Role::Channels));
    let out = alternate_optimize(&config, &channels).unwrap();
    let mut rng = stream_rng(707, 0, Role::Symbols);
    let noise = LinkNoise::zero(&config);
    let mut errors = 0;
    for _ in 0..1000 {
        let s1 = qam_vector(&mut rng, config.n_t, 4);
        let s2 = qam_vector(&mut rng, config.n_t, 4);
        let link = simulate_link(&config, &channels, &out.solution, &s1, &s2, &noise).unwrap();
        errors += (0..config.n_t).filter(|&k| link.s2_hat[k] != s1[k]).count();
        errors += (0..config.n_t).filter(|&k| link.s1_hat[k] != s2[k]).count();
    }
    errors
}

#[test]
fn c07_noiseless_round_trip() {
    // Noise variances must be positive, so "zero noise" is a design at a
    // vanishing variance, where the MMSE equalizer becomes zero forcing.
    let errors = round_trip_errors(1e-9);
    // For reference only: the MMSE design at the default variance is biased,
    // so silencing the noise realizations alone leaves residual interference.
    let biased = round_trip_errors(0.1);
    let pass = errors == 0;
    report(
        7,
        "zero-noise round trip",
        pass,
        format!("{errors} symbol errors over 1000 vector pairs (design noise 1e-9); design noise 0.1 would give {biased}"),
    );
    assert!(pass);
}

#[test]
fn c08_trace_determinant_inequality() {
    let mut rng = stream_rng(808, 0, Role::Channels);
    let mut violations = 0;
    for k in 0..1000 {
        let n = 1 + k % 6;
        let a = complex_gaussian_matrix(&mut rng, n, n, 1.0);
        let x = &a * a.adjoint() + CMatrix::identity(n, n).scale(1e-9);
        let lhs = trace_re(&x);
        let rhs = n as f64 * det_hpd(&x).unwrap().powf(1.0 / n as f64);
        if lhs < rhs * (1.0 - 1e-12) {
            violations += 1;
        }
    }
    let mut worst_eq = 0.0_f64;
    for n in 1..=6 {
        for c in [1e-3, 0.7, 5.0, 123.0] {
            let x = CMatrix::identity(n, n).scale(c);
            let lhs = trace_re(&x);
            let rhs = n as f64 * det_hpd(&x).unwrap().powf(1.0 / n as f64);
            worst_eq = worst_eq.max((lhs - rhs).abs() / lhs);
        }
    }
    let pass = violations == 0 && worst_eq < 1e-10;
    report(8, "trace-determinant inequality", pass, format!("{violations}/1000 violations, scaled-identity gap {worst_eq:.2e}"));
    assert!(pass);
}

fn tree_max(leaves: &[f64]) -> f64 {
    let mut p = ConicProblem::new(Sense::Maximize);
    let vars: Vec<Var> = leaves
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let x = p.add_var(format!("leaf{i}"));
            p.set_bounds(x, Some(v), Some(v));
            x
        })
        .collect();
    let tree = build_product_tree(&mut p, &vars, "tree");
    p.set_objective(tree.tau);
    let sol = solve_conic(&p).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    sol.objective
}

#[test]
fn c09_conic_micro_oracles() {
    let a = tree_max(&[4.0, 1.0]);
    let b = tree_max(&[16.0, 1.0, 1.0, 1.0]);
    let mut worst = 0.0_f64;
    for &(t, beta) in &[(2.0, 1.0), (1.5, 0.3), (7.0, 12.0), (1.01, 1e-3), (40.0, 2.5)] {
        let g = amgm_surrogate(t, beta, (t - 1.0) / beta).unwrap();
        let exact = beta * (t - 1.0);
        worst = worst.max((g - exact).abs() / exact.max(1.0));
    }
    let pass = (a - 2.0).abs() < 1e-6 && (b - 2.0).abs() < 1e-6 && worst < 1e-12;
    report(9, "conic micro-oracles", pass, format!("tree(4,1)={a:.9}, tree(16,1,1,1)={b:.9}, surrogate gap {worst:.1e}"));
    assert!(pass);
}

#[test]
fn c10_cli_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        run_cli(&["convergence", "--seed", "7", "--realizations", "3", "--threads", threads, "--out", out.to_str().unwrap()]);
        std::fs::read(out).unwrap()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "1");
    let c = run("c.csv", "4");
    let lines = a.iter().filter(|&&b| b == b'\n').count();
    let pass = a == b && a == c && lines > 1;
    report(10, "deterministic CSV", pass, format!("two runs and 1 vs 4 threads byte-identical: {pass} ({lines} lines)"));
    assert!(pass);
}

#[test]
fn demo_reports_budgets() {
    let out = Command::new(binary()).arg("demo").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("sum worst-case MSE"));
    let config = SystemConfig::default();
    let channels = generate_channels(&config, &mut stream_rng(config.rng_seed, 0, Role::Channels));
    let sol = alternate_optimize(&config, &channels).unwrap().solution;
    assert!(relay_power(&config, &channels, &sol) <= config.p_rt * (1.0 + 1e-8));
    for node in Node::BOTH {
        assert!(node_power(&config, &sol, node) <= config.power_budget(node) * (1.0 + 1e-8));
    }
    assert!(frob2(&sol.fr) > 0.0);
}

#[test]
fn cli_exit_codes() {
    let status = |args: &[&str]| Command::new(binary()).args(args).output().unwrap();
    let missing = status(&["demo", "--config", "/nonexistent/dir/cfg.toml"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nonexistent/dir/cfg.toml"));
    assert_eq!(status(&["demo", "--bogus"]).status.code(), Some(1));
    assert_eq!(status(&["convergence", "--realizations", "0"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let unwritable = dir.path().join("missing").join("out.csv");
    let r = status(&["convergence", "--realizations", "1", "--sweep", "10", "--out", unwritable.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    assert_eq!(status(&["--help"]).status.code(), Some(0));
}
