//! Two-slot MIMO two-way relay link: configuration, channels, the
//! Tomlinson-Harashima transmitter and the end-to-end signal chain.
//!
//! Slot one: both nodes precode `x_i = C_i⁻¹ v_i` (modulo feedback) and send
//! `F_i x_i` to the relay. Slot two: the relay forwards `F_r y_r`. Each node
//! cancels its own contribution using the equivalent channel, equalizes with
//! `Γ_i` and recovers the partner's symbols by modulo reduction and slicing.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{c64, frob2, CMatrix, CVector, C64};
use crate::random::{complex_gaussian_matrix, complex_gaussian_vector};

/// One of the two end nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    One,
    Two,
}

impl Node {
    pub const BOTH: [Node; 2] = [Node::One, Node::Two];

    /// The partner node whose data this node receives.
    pub fn other(self) -> Node {
        match self {
            Node::One => Node::Two,
            Node::Two => Node::One,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Node::One => 0,
            Node::Two => 1,
        }
    }
}

/// Physical parameters of the relay network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub n_t: usize,
    pub n_r: usize,
    pub sigma2_x1: f64,
    pub sigma2_x2: f64,
    pub sigma2_nr: f64,
    pub sigma2_n1: f64,
    pub sigma2_n2: f64,
    pub p_rt: f64,
    pub p_1t: f64,
    pub p_2t: f64,
    pub sigma2_g1: f64,
    pub sigma2_g2: f64,
    pub qam_m: u32,
    pub rng_seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            n_t: 4,
            n_r: 4,
            sigma2_x1: 1.0,
            sigma2_x2: 1.0,
            sigma2_nr: 0.1,
            sigma2_n1: 0.1,
            sigma2_n2: 0.1,
            p_rt: 10.0,
            p_1t: 10.0,
            p_2t: 10.0,
            sigma2_g1: 0.01,
            sigma2_g2: 0.01,
            qam_m: 4,
            rng_seed: 1,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_t == 0 || self.n_r == 0 {
            return bad("antenna counts must be positive".into());
        }
        if self.n_t != self.n_r {
            return bad(format!("n_t ({}) must equal n_r ({})", self.n_t, self.n_r));
        }
        let positive = [
            ("sigma2_x1", self.sigma2_x1),
            ("sigma2_x2", self.sigma2_x2),
            ("sigma2_nr", self.sigma2_nr),
            ("sigma2_n1", self.sigma2_n1),
            ("sigma2_n2", self.sigma2_n2),
            ("p_rt", self.p_rt),
            ("p_1t", self.p_1t),
            ("p_2t", self.p_2t),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be finite and > 0, got {v}"));
            }
        }
        for (name, v) in [("sigma2_g1", self.sigma2_g1), ("sigma2_g2", self.sigma2_g2)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if ![4, 16, 64].contains(&self.qam_m) {
            return bad(format!("qam_m must be one of 4, 16, 64, got {}", self.qam_m));
        }
        Ok(())
    }

    pub fn sigma2_x(&self, node: Node) -> f64 {
        match node {
            Node::One => self.sigma2_x1,
            Node::Two => self.sigma2_x2,
        }
    }

    /// Receiver noise variance at `node`.
    pub fn sigma2_n(&self, node: Node) -> f64 {
        match node {
            Node::One => self.sigma2_n1,
            Node::Two => self.sigma2_n2,
        }
    }

    /// Uncertainty radius of the relay→`node` channel estimate.
    pub fn sigma2_g(&self, node: Node) -> f64 {
        match node {
            Node::One => self.sigma2_g1,
            Node::Two => self.sigma2_g2,
        }
    }

    pub fn power_budget(&self, node: Node) -> f64 {
        match node {
            Node::One => self.p_1t,
            Node::Two => self.p_2t,
        }
    }

    /// Half-width `√M` of the modulo region.
    pub fn modulo_half_width(&self) -> f64 {
        (self.qam_m as f64).sqrt()
    }
}

/// Channel realization: uplinks `H_i`, downlink estimates `Ĝ_i` and the
/// estimation errors `ΔG_i` (true downlink `G_i = Ĝ_i + ΔG_i`).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h1: CMatrix,
    pub h2: CMatrix,
    pub g1_hat: CMatrix,
    pub g2_hat: CMatrix,
    pub dg1: CMatrix,
    pub dg2: CMatrix,
}

impl ChannelSet {
    pub fn h(&self, node: Node) -> &CMatrix {
        match node {
            Node::One => &self.h1,
            Node::Two => &self.h2,
        }
    }

    pub fn g_hat(&self, node: Node) -> &CMatrix {
        match node {
            Node::One => &self.g1_hat,
            Node::Two => &self.g2_hat,
        }
    }

    pub fn dg(&self, node: Node) -> &CMatrix {
        match node {
            Node::One => &self.dg1,
            Node::Two => &self.dg2,
        }
    }

    pub fn g_true(&self, node: Node) -> CMatrix {
        self.g_hat(node) + self.dg(node)
    }

    /// Same channels with the estimation errors replaced.
    pub fn with_errors(&self, dg1: CMatrix, dg2: CMatrix) -> ChannelSet {
        ChannelSet {
            dg1,
            dg2,
            ..self.clone()
        }
    }

    /// True when every `‖ΔG_i‖²` lies inside its uncertainty sphere.
    pub fn errors_within(&self, config: &SystemConfig) -> bool {
        Node::BOTH
            .iter()
            .all(|&n| frob2(self.dg(n)) <= config.sigma2_g(n) * (1.0 + 1e-12) + 1e-300)
    }
}

/// Draws `H_i` and `Ĝ_i` with i.i.d. CN(0, 1) entries; errors start at zero.
pub fn generate_channels<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> ChannelSet {
    let (nt, nr) = (config.n_t, config.n_r);
    let h1 = complex_gaussian_matrix(rng, nr, nt, 1.0);
    let h2 = complex_gaussian_matrix(rng, nr, nt, 1.0);
    let g1_hat = complex_gaussian_matrix(rng, nt, nr, 1.0);
    let g2_hat = complex_gaussian_matrix(rng, nt, nr, 1.0);
    ChannelSet {
        h1,
        h2,
        g1_hat,
        g2_hat,
        dg1: CMatrix::zeros(nt, nr),
        dg2: CMatrix::zeros(nt, nr),
    }
}

/// Complete transceiver design.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSolution {
    pub f1: CMatrix,
    pub f2: CMatrix,
    pub fr: CMatrix,
    pub c1: CMatrix,
    pub c2: CMatrix,
    pub gamma1: CMatrix,
    pub gamma2: CMatrix,
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub lambda_r: Vec<f64>,
}

impl DesignSolution {
    /// Identity feedback and zero equalizers around the given precoders.
    pub fn from_precoders(f1: CMatrix, f2: CMatrix, fr: CMatrix) -> Self {
        let nt = f1.nrows();
        Self {
            c1: CMatrix::identity(nt, nt),
            c2: CMatrix::identity(nt, nt),
            gamma1: CMatrix::zeros(nt, nt),
            gamma2: CMatrix::zeros(nt, nt),
            lambda1: Vec::new(),
            lambda2: Vec::new(),
            lambda_r: Vec::new(),
            f1,
            f2,
            fr,
        }
    }

    pub fn f(&self, node: Node) -> &CMatrix {
        match node {
            Node::One => &self.f1,
            Node::Two => &self.f2,
        }
    }

    pub fn c(&self, node: Node) -> &CMatrix {
        match node {
            Node::One => &self.c1,
            Node::Two => &self.c2,
        }
    }

    pub fn gamma(&self, node: Node) -> &CMatrix {
        match node {
            Node::One => &self.gamma1,
            Node::Two => &self.gamma2,
        }
    }

    pub fn set_gamma(&mut self, node: Node, gamma: CMatrix) {
        match node {
            Node::One => self.gamma1 = gamma,
            Node::Two => self.gamma2 = gamma,
        }
    }

    pub fn set_c(&mut self, node: Node, c: CMatrix) {
        match node {
            Node::One => self.c1 = c,
            Node::Two => self.c2 = c,
        }
    }

    pub fn check_dimensions(&self, config: &SystemConfig) -> Result<()> {
        let (nt, nr) = (config.n_t, config.n_r);
        let expect = |name: &'static str, m: &CMatrix, r: usize, c: usize| -> Result<()> {
            if m.shape() == (r, c) {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    context: name,
                    expected: format!("{r}x{c}"),
                    found: format!("{}x{}", m.nrows(), m.ncols()),
                })
            }
        };
        expect("F_1", &self.f1, nt, nt)?;
        expect("F_2", &self.f2, nt, nt)?;
        expect("F_r", &self.fr, nr, nr)?;
        expect("C_1", &self.c1, nt, nt)?;
        expect("C_2", &self.c2, nt, nt)?;
        expect("Gamma_1", &self.gamma1, nt, nt)?;
        expect("Gamma_2", &self.gamma2, nt, nt)
    }
}

/// Reduces each axis of `z` into `(−√M, √M]` by multiples of `2√M`.
pub fn modulo_reduce(z: C64, m: u32) -> C64 {
    let a = (m as f64).sqrt();
    let wrap = |x: f64| x - 2.0 * a * ((x - a) / (2.0 * a)).ceil();
    c64(wrap(z.re), wrap(z.im))
}

/// Tomlinson-Harashima precoding by successive feedback cancellation.
///
/// Returns `(x, v)` with `C·x = v = s + d`, where `d` has components in
/// `2√M·(ℤ + iℤ)` and every component of `x` lies in the modulo region.
pub fn th_encode(s: &CVector, c: &CMatrix, m: u32) -> (CVector, CVector) {
    let n = s.len();
    let period = 2.0 * (m as f64).sqrt();
    let mut x = CVector::zeros(n);
    let mut v = CVector::zeros(n);
    for k in 0..n {
        let mut raw = s[k];
        for l in 0..k {
            raw -= c[(k, l)] * x[l];
        }
        let reduced = modulo_reduce(raw, m);
        let offset = reduced - raw;
        let d = c64((offset.re / period).round() * period, (offset.im / period).round() * period);
        x[k] = reduced;
        v[k] = s[k] + d;
    }
    (x, v)
}

/// Nearest square-QAM point, ties broken toward the smaller magnitude.
pub fn slice_qam(z: C64, m: u32) -> C64 {
    let lim = (m as f64).sqrt() - 1.0;
    let axis = |x: f64| {
        let lo = 2.0 * ((x - 1.0) / 2.0).floor() + 1.0;
        let hi = lo + 2.0;
        let (dlo, dhi) = (x - lo, hi - x);
        let pick = if dlo < dhi {
            lo
        } else if dhi < dlo {
            hi
        } else if lo.abs() < hi.abs() {
            lo
        } else {
            hi
        };
        pick.clamp(-lim, lim)
    };
    c64(axis(z.re), axis(z.im))
}

/// Noise realizations for one channel use.
#[derive(Debug, Clone)]
pub struct LinkNoise {
    pub relay: CVector,
    pub node1: CVector,
    pub node2: CVector,
}

impl LinkNoise {
    pub fn zero(config: &SystemConfig) -> Self {
        Self {
            relay: CVector::zeros(config.n_r),
            node1: CVector::zeros(config.n_t),
            node2: CVector::zeros(config.n_t),
        }
    }

    pub fn draw<R: Rng + ?Sized>(config: &SystemConfig, relay_rng: &mut R, receiver_rng: &mut R) -> Self {
        Self {
            relay: complex_gaussian_vector(relay_rng, config.n_r, config.sigma2_nr),
            node1: complex_gaussian_vector(receiver_rng, config.n_t, config.sigma2_n1),
            node2: complex_gaussian_vector(receiver_rng, config.n_t, config.sigma2_n2),
        }
    }

    fn at(&self, node: Node) -> &CVector {
        match node {
            Node::One => &self.node1,
            Node::Two => &self.node2,
        }
    }
}

/// Receiver-side quantities of one channel use.
///
/// `s1_hat` is node 1's decision on the symbols sent by node 2, and
/// `s2_hat` node 2's decision on node 1's symbols.
#[derive(Debug, Clone)]
pub struct LinkOutput {
    pub s1_hat: CVector,
    pub s2_hat: CVector,
    pub y1_bar: CVector,
    pub y2_bar: CVector,
    pub v1_hat: CVector,
    pub v2_hat: CVector,
    /// Relay transmit vector `x_r`.
    pub relay_tx: CVector,
}

/// Runs both slots of the two-way exchange for one symbol vector per node.
pub fn simulate_link(
    config: &SystemConfig,
    channels: &ChannelSet,
    solution: &DesignSolution,
    s1: &CVector,
    s2: &CVector,
    noise: &LinkNoise,
) -> Result<LinkOutput> {
    solution.check_dimensions(config)?;
    for (name, v, len) in [
        ("s_1", s1, config.n_t),
        ("s_2", s2, config.n_t),
        ("relay noise", &noise.relay, config.n_r),
        ("node 1 noise", &noise.node1, config.n_t),
        ("node 2 noise", &noise.node2, config.n_t),
    ] {
        if v.len() != len {
            return Err(Error::DimensionMismatch {
                context: name,
                expected: len.to_string(),
                found: v.len().to_string(),
            });
        }
    }

    let m = config.qam_m;
    let (x1, _) = th_encode(s1, &solution.c1, m);
    let (x2, _) = th_encode(s2, &solution.c2, m);

    // Slot 1: superposition at the relay.
    let tx1 = &channels.h1 * (&solution.f1 * &x1);
    let tx2 = &channels.h2 * (&solution.f2 * &x2);
    let y_r = &tx1 + &tx2 + &noise.relay;
    // Slot 2: amplify-and-forward through F_r.
    let x_r = &solution.fr * y_r;

    let receive = |node: Node| {
        let g = channels.g_true(node);
        let own = match node {
            Node::One => &tx1,
            Node::Two => &tx2,
        };
        let y = &g * &x_r + noise.at(node);
        let y_bar = y - &g * (&solution.fr * own);
        let v_hat = solution.gamma(node) * &y_bar;
        let s_hat = v_hat.map(|z| slice_qam(modulo_reduce(z, m), m));
        (s_hat, y_bar, v_hat)
    };
    let (s1_hat, y1_bar, v1_hat) = receive(Node::One);
    let (s2_hat, y2_bar, v2_hat) = receive(Node::Two);

    Ok(LinkOutput {
        s1_hat,
        s2_hat,
        y1_bar,
        y2_bar,
        v1_hat,
        v2_hat,
        relay_tx: x_r,
    })
}

/// Monte Carlo estimate of `𝔼‖v̂_i − C_j x_j‖²` at both receivers, with
/// white `x_j ~ CN(0, σ²_{x_j} I)` and the true downlink channels.
pub fn empirical_mse<R: Rng + ?Sized>(
    config: &SystemConfig,
    channels: &ChannelSet,
    solution: &DesignSolution,
    trials: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    solution.check_dimensions(config)?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let g1 = channels.g_true(Node::One);
    let g2 = channels.g_true(Node::Two);
    let mut acc = [0.0_f64; 2];
    for _ in 0..trials {
        let x1 = complex_gaussian_vector(rng, config.n_t, config.sigma2_x1);
        let x2 = complex_gaussian_vector(rng, config.n_t, config.sigma2_x2);
        let nr = complex_gaussian_vector(rng, config.n_r, config.sigma2_nr);
        let n1 = complex_gaussian_vector(rng, config.n_t, config.sigma2_n1);
        let n2 = complex_gaussian_vector(rng, config.n_t, config.sigma2_n2);
        let relay_in = &channels.h1 * (&solution.f1 * &x1) + &channels.h2 * (&solution.f2 * &x2) + nr;
        let x_r = &solution.fr * relay_in;
        for node in Node::BOTH {
            let (g, n, x_own, x_other) = match node {
                Node::One => (&g1, &n1, &x1, &x2),
                Node::Two => (&g2, &n2, &x2, &x1),
            };
            let own = channels.h(node) * (solution.f(node) * x_own);
            let y_bar = g * &x_r + n - g * (&solution.fr * own);
            let err = solution.gamma(node) * y_bar - solution.c(node.other()) * x_other;
            acc[node.index()] += err.norm_squared();
        }
    }
    Ok((acc[0] / trials as f64, acc[1] / trials as f64))
}

/// Monte Carlo estimate of the relay transmit power `𝔼‖x_r‖²`.
pub fn empirical_relay_power<R: Rng + ?Sized>(
    config: &SystemConfig,
    channels: &ChannelSet,
    solution: &DesignSolution,
    trials: usize,
    rng: &mut R,
) -> f64 {
    let mut acc = 0.0;
    for _ in 0..trials {
        let x1 = complex_gaussian_vector(rng, config.n_t, config.sigma2_x1);
        let x2 = complex_gaussian_vector(rng, config.n_t, config.sigma2_x2);
        let nr = complex_gaussian_vector(rng, config.n_r, config.sigma2_nr);
        let relay_in = &channels.h1 * (&solution.f1 * &x1) + &channels.h2 * (&solution.f2 * &x2) + nr;
        acc += (&solution.fr * relay_in).norm_squared();
    }
    acc / trials.max(1) as f64
}
