#![allow(dead_code)]

use faer::Mat;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sbs_core::linalg::{DensityMatrix, HermitianOperator, Propagator, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(r: &mut impl Rng, rows: usize, cols: usize) -> Mat<C64> {
    Mat::from_fn(rows, cols, |_, _| {
        C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
    })
}

/// `G G† / Tr` for a random `dim × rank` matrix `G`.
pub fn random_state(r: &mut impl Rng, dim: usize, rank: usize) -> DensityMatrix {
    let g = random_matrix(r, dim, rank);
    let m = g.as_ref() * g.as_ref().adjoint();
    DensityMatrix::normalized(m).unwrap()
}

pub fn random_hermitian(r: &mut impl Rng, dim: usize) -> HermitianOperator {
    let g = random_matrix(r, dim, dim);
    let h = Mat::from_fn(dim, dim, |a, b| (g[(a, b)] + g[(b, a)].conj()) * 0.5);
    HermitianOperator::new(h).unwrap()
}

pub fn random_unitary(r: &mut impl Rng, dim: usize) -> Mat<C64> {
    Propagator::new(&random_hermitian(r, dim))
        .unwrap()
        .unitary(1.0)
}

pub fn conjugate(u: &Mat<C64>, rho: &DensityMatrix) -> DensityMatrix {
    let left = u.as_ref() * rho.matrix().as_ref();
    DensityMatrix::from_trusted(left.as_ref() * u.as_ref().adjoint())
}

/// Minimum error of discriminating `ρ₀` (prior `p0`) from `ρ₁`: `(1 − ‖p₀ρ₀ − p₁ρ₁‖₁)/2`.
pub fn helstrom_error(p0: f64, rho0: &DensityMatrix, rho1: &DensityMatrix) -> f64 {
    let n = rho0.dim();
    let diff = Mat::from_fn(n, n, |a, b| {
        rho0.get(a, b) * p0 - rho1.get(a, b) * (1.0 - p0)
    });
    let eig = sbs_core::linalg::HermitianEigen::eigenvalues_of(&diff).unwrap();
    let norm: f64 = eig.iter().map(|e| e.abs()).sum();
    0.5 * (1.0 - norm)
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
pub mod gaussian_oracles;
