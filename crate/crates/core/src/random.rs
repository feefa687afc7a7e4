//! Seeded random streams and the complex Gaussian / QAM draws built on them.
//!
//! Every trial owns independent ChaCha streams keyed by `(seed, trial, role)`,
//! so results never depend on which worker thread ran a trial.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::numerics::{c64, CMatrix, CVector, C64};

/// Purpose of a random stream inside one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Channels = 0,
    Symbols = 1,
    RelayNoise = 2,
    ReceiverNoise = 3,
    Uncertainty = 4,
    Audit = 5,
}

/// Deterministic stream for `(seed, trial, role)`.
pub fn stream_rng(seed: u64, trial: u64, role: Role) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((trial << 8) | role as u64);
    rng
}

/// Circularly symmetric complex Gaussian scalar with the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(s * re, s * im)
}

pub fn complex_gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, variance: f64) -> CMatrix {
    // Column-major fill order, fixed for reproducibility.
    let mut m = CMatrix::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            m[(r, c)] = complex_gaussian(rng, variance);
        }
    }
    m
}

pub fn complex_gaussian_vector<R: Rng + ?Sized>(rng: &mut R, len: usize, variance: f64) -> CVector {
    CVector::from_iterator(len, (0..len).map(|_| complex_gaussian(rng, variance)))
}

/// Uniform draw from the square M-QAM grid `{±1, ±3, …, ±(√M−1)}²`.
pub fn qam_symbol<R: Rng + ?Sized>(rng: &mut R, m: u32) -> C64 {
    let side = (m as f64).sqrt().round() as i64;
    let axis = |rng: &mut R| (2 * rng.random_range(0..side) - (side - 1)) as f64;
    let re = axis(rng);
    let im = axis(rng);
    c64(re, im)
}

pub fn qam_vector<R: Rng + ?Sized>(rng: &mut R, len: usize, m: u32) -> CVector {
    CVector::from_iterator(len, (0..len).map(|_| qam_symbol(rng, m)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream_rng(7, 3, Role::Symbols).random();
        let b: u64 = stream_rng(7, 3, Role::Symbols).random();
        let c: u64 = stream_rng(7, 4, Role::Symbols).random();
        let d: u64 = stream_rng(7, 3, Role::RelayNoise).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn qam_points_on_grid() {
        let mut rng = stream_rng(1, 0, Role::Symbols);
        for m in [4u32, 16, 64] {
            let lim = (m as f64).sqrt() - 1.0;
            for _ in 0..500 {
                let s = qam_symbol(&mut rng, m);
                for x in [s.re, s.im] {
                    assert!(x.abs() <= lim && (x + 1.0).rem_euclid(2.0) == 0.0);
                }
            }
        }
    }
}
