//! Hamiltonians of the tripartite ring model `S ⊗ E₁ ⊗ E₂`.

use std::f64::consts::PI;

use faer::Mat;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{hermitize, kron, HermitianOperator, C64};
use crate::ring::RingCoordinate;
use crate::rng::stream;

fn check_d(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("ring dimension {d} < 2")));
    }
    Ok(())
}

/// Cyclic shift `X|k⟩ = |k ⊕ 1⟩`.
pub fn shift(d: usize) -> Mat<C64> {
    Mat::from_fn(d, d, |a, b| {
        C64::new(if a == (b + 1) % d { 1.0 } else { 0.0 }, 0.0)
    })
}

/// Principal-branch generator `G_s` with `exp(−i G_s) = X^s`.
///
/// `X` is diagonal in the Fourier basis `f_m(k) = ω^{−mk}/√D` with eigenvalue
/// `ω^m`, so `G_s` has eigenvalue `−2π ms/D` folded into `(−π, π]`.
pub fn shift_generator(d: usize, s: usize) -> Mat<C64> {
    let norm = 1.0 / (d as f64).sqrt();
    let fourier = Mat::from_fn(d, d, |k, m| {
        C64::from_polar(norm, -2.0 * PI * ((m * k) % d) as f64 / d as f64)
    });
    let phase = |m: usize| {
        let r = (m * s) % d;
        if 2 * r < d {
            -2.0 * PI * r as f64 / d as f64
        } else {
            2.0 * PI * (d - r) as f64 / d as f64
        }
    };
    let scaled = Mat::from_fn(d, d, |k, m| fourier[(k, m)] * phase(m));
    hermitize(&(scaled.as_ref() * fourier.as_ref().adjoint()))
}

/// `Σ_s |s⟩⟨s|_S ⊗ (G_s ⊗ I + I ⊗ G_s)`; after unit time each environment
/// at `|k⟩` has moved to `|k ⊕ s⟩`.
pub fn build_central_hamiltonian(d: usize) -> Result<HermitianOperator> {
    check_d(d)?;
    let block = d * d;
    let id = Mat::<C64>::identity(d, d);
    let mut h = Mat::<C64>::zeros(d * block, d * block);
    for s in 0..d {
        let g = shift_generator(d, s);
        let local = kron(&g, &id) + kron(&id, &g);
        for b in 0..block {
            for a in 0..block {
                h[(s * block + a, s * block + b)] = local[(a, b)];
            }
        }
    }
    HermitianOperator::new(h)
}

/// Nearest-neighbour hopping `c Σ_k (|k⊕1⟩⟨k| + |k⟩⟨k⊕1|)` on one environment.
pub fn build_self_hamiltonian(d: usize, coupling: f64) -> Result<HermitianOperator> {
    check_d(d)?;
    let mut h = Mat::<C64>::zeros(d, d);
    for k in 0..d {
        let up = (k + 1) % d;
        h[(up, k)] += C64::new(coupling, 0.0);
        h[(k, up)] += C64::new(coupling, 0.0);
    }
    HermitianOperator::new(h)
}

/// Moves bringing `(k, l)` one step closer from each side, with amplitudes.
fn approach_moves(k: usize, l: usize, d: usize, amplitude: f64) -> Vec<((usize, usize), f64)> {
    let (rk, rl) = (
        RingCoordinate::new(k as i64, d),
        RingCoordinate::new(l as i64, d),
    );
    let one = RingCoordinate::new(1, d);
    // Forward offset from k to l.
    let offset = (rl - rk).value();
    let step = |dir: i64| {
        let dk = if dir > 0 { rk + one } else { rk - one };
        let dl = if dir > 0 { rl - one } else { rl + one };
        (dk.value(), dl.value())
    };
    let mut out: Vec<((usize, usize), f64)> = Vec::new();
    let mut push = |target, amp| match out.iter_mut().find(|(t, _)| *t == target) {
        Some((_, a)) => *a += amp,
        None => out.push((target, amp)),
    };
    if 2 * offset < d {
        push(step(1), amplitude);
    } else if 2 * offset > d {
        push(step(-1), amplitude);
    } else {
        push(step(1), amplitude / 2.0);
        push(step(-1), amplitude / 2.0);
    }
    out
}

/// Environment–environment coupling on `E₁ ⊗ E₂`.
///
/// A pair at ring distance `r > 0` moves one step towards each other (both
/// environments at once) with amplitude `c/(1+r)`; antipodal pairs split the
/// amplitude evenly between the two directions. Adjacent pairs swap places.
pub fn build_env_interaction(d: usize, coupling: f64) -> Result<HermitianOperator> {
    check_d(d)?;
    let mut h = Mat::<C64>::zeros(d * d, d * d);
    for k in 0..d {
        for l in 0..d {
            let r = RingCoordinate::new(k as i64, d).distance(RingCoordinate::new(l as i64, d));
            if r == 0 {
                continue;
            }
            let source = k * d + l;
            for ((tk, tl), amp) in approach_moves(k, l, d, coupling / (1.0 + r as f64)) {
                let target = tk * d + tl;
                h[(target, source)] = C64::new(amp, 0.0);
                h[(source, target)] = C64::new(amp, 0.0);
            }
        }
    }
    HermitianOperator::new(h)
}

/// Real symmetric matrix with zero diagonal and off-diagonal entries drawn
/// from `U[0, max_rate]`, pairs `(a, b)`, `a < b`, in row-major order.
pub fn random_symmetric(
    dim: usize,
    max_rate: f64,
    rng: &mut impl Rng,
) -> Result<HermitianOperator> {
    if !(max_rate >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "rate bound {max_rate} must be nonnegative"
        )));
    }
    let mut h = Mat::<C64>::zeros(dim, dim);
    for a in 0..dim {
        for b in a + 1..dim {
            let u = rng.gen_range(0.0..=max_rate);
            h[(a, b)] = C64::new(u, 0.0);
            h[(b, a)] = C64::new(u, 0.0);
        }
    }
    HermitianOperator::new(h)
}

/// Random jumps between any two joint basis states of `S ⊗ E₁ ⊗ E₂`.
pub fn build_global_random(d: usize, seed: u64, max_rate: f64) -> Result<HermitianOperator> {
    check_d(d)?;
    random_symmetric(d * d * d, max_rate, &mut stream(seed, "global"))
}

/// Random jumps inside one environment; `which` names the stream.
pub fn build_self_random(
    d: usize,
    seed: u64,
    max_rate: f64,
    which: &str,
) -> Result<HermitianOperator> {
    check_d(d)?;
    random_symmetric(d, max_rate, &mut stream(seed, &format!("self/{which}")))
}

/// Random jumps of the environment pair.
pub fn build_env_random(d: usize, seed: u64, max_rate: f64) -> Result<HermitianOperator> {
    check_d(d)?;
    random_symmetric(d * d, max_rate, &mut stream(seed, "env-interaction"))
}

/// `I_S ⊗ h ⊗ I` (`slot = 1`) or `I_S ⊗ I ⊗ h` (`slot = 2`).
pub fn on_environment(h: &HermitianOperator, slot: usize) -> HermitianOperator {
    let d = h.dim();
    let id = HermitianOperator::identity(d);
    match slot {
        1 => id.tensor(h).tensor(&id),
        2 => id.tensor(&id).tensor(h),
        _ => panic!("environment slot must be 1 or 2"),
    }
}

/// `I_S ⊗ h` for an operator on `E₁ ⊗ E₂`.
pub fn on_environment_pair(h: &HermitianOperator, d: usize) -> HermitianOperator {
    HermitianOperator::identity(d).tensor(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, HermitianEigen};

    fn expm_minus_i(h: &Mat<C64>) -> Mat<C64> {
        HermitianEigen::new(h)
            .unwrap()
            .apply_function(|e| C64::from_polar(1.0, -e))
    }

    fn power(x: &Mat<C64>, s: usize) -> Mat<C64> {
        let mut out = Mat::<C64>::identity(x.nrows(), x.ncols());
        for _ in 0..s {
            out = out.as_ref() * x.as_ref();
        }
        out
    }

    #[test]
    fn generator_exponentiates_to_shift_power() {
        for d in [2, 3, 12] {
            let x = shift(d);
            for s in 0..d {
                let u = expm_minus_i(&shift_generator(d, s));
                assert!(max_abs_diff(&u, &power(&x, s)) < 1e-12, "d={d} s={s}");
            }
        }
        assert!(max_abs_diff(&shift_generator(12, 0), &Mat::zeros(12, 12)) < 1e-14);
    }

    #[test]
    fn qubit_swap_closed_form() {
        // D = 2, s = 1: G = π/2 (I − X), the principal logarithm of the swap.
        let g = shift_generator(2, 1);
        let half = PI / 2.0;
        assert!((g[(0, 0)].re - half).abs() < 1e-14);
        assert!((g[(0, 1)].re + half).abs() < 1e-14);
        let u = expm_minus_i(&g);
        assert!(u[(1, 0)].norm() > 1.0 - 1e-12);
    }

    #[test]
    fn hopping_structure() {
        let h = build_self_hamiltonian(12, 0.01).unwrap();
        for a in 0..12 {
            let off: Vec<f64> = (0..12)
                .filter(|&b| b != a)
                .map(|b| h.get(a, b).re)
                .filter(|v| *v != 0.0)
                .collect();
            assert_eq!(off, vec![0.01, 0.01]);
        }
        let x = shift(12);
        let comm = h.matrix().as_ref() * x.as_ref() - x.as_ref() * h.matrix().as_ref();
        assert!(max_abs_diff(&comm, &Mat::zeros(12, 12)) < 1e-14);
    }

    #[test]
    fn env_interaction_examples() {
        let d = 12;
        let h = build_env_interaction(d, 0.01).unwrap();
        // Same site: (3, 3) only appears as the meeting point of the
        // distance-2 pairs (2, 4) and (4, 2), through the conjugate moves.
        let same = 3 * d + 3;
        let linked: Vec<usize> = (0..d * d)
            .filter(|&a| h.get(a, same).norm() != 0.0)
            .collect();
        assert_eq!(linked, vec![2 * d + 4, 4 * d + 2]);
        assert!((h.get(2 * d + 4, same).re - 0.01 / 3.0).abs() < 1e-18);
        // Adjacent (0, 1) swaps to (1, 0) with 0.01/2.
        assert_eq!(h.get(d, 1).re, 0.005);
        // Distance 3 moves to distance 1.
        assert_eq!(h.get(d + 2, 3).re, 0.01 / 4.0);
        // Antipodal pair (0, 6) splits between (1, 5) and (11, 7).
        assert!((h.get(d + 5, 6).re - 0.01 / 14.0).abs() < 1e-18);
        assert!((h.get(11 * d + 7, 6).re - 0.01 / 14.0).abs() < 1e-18);
        // Simultaneous translation of both environments is a symmetry.
        let t = kron(&shift(d), &shift(d));
        let comm = h.matrix().as_ref() * t.as_ref() - t.as_ref() * h.matrix().as_ref();
        assert!(max_abs_diff(&comm, &Mat::zeros(d * d, d * d)) < 1e-14);
    }

    #[test]
    fn random_terms_are_reproducible_and_bounded() {
        let a = build_global_random(3, 5, 0.001).unwrap();
        let b = build_global_random(3, 5, 0.001).unwrap();
        assert_eq!(max_abs_diff(a.matrix(), b.matrix()), 0.0);
        for i in 0..27 {
            for j in 0..27 {
                let v = a.get(i, j);
                assert!(v.im == 0.0 && (0.0..=0.001).contains(&v.re));
            }
        }
        assert!(a.gershgorin_bound() <= 0.001 * 27.0);
        let c = build_global_random(3, 6, 0.001).unwrap();
        assert!(max_abs_diff(a.matrix(), c.matrix()) > 0.0);
        let e1 = build_self_random(4, 5, 0.01, "E1").unwrap();
        let e2 = build_self_random(4, 5, 0.01, "E2").unwrap();
        assert!(max_abs_diff(e1.matrix(), e2.matrix()) > 0.0);
    }
}
