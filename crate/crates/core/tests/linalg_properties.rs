mod common;

use approx::assert_abs_diff_eq;
use common::*;
use faer::Mat;
use proptest::prelude::*;
use sbs_core::linalg::*;

/// Uhlmann form `Tr √(√ρ σ √ρ)`, independent of the trace-norm route.
fn uhlmann(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let r = matrix_sqrt(rho.matrix()).unwrap();
    let inner = r.as_ref() * sigma.matrix().as_ref() * r.as_ref();
    let inner = hermitize(&inner);
    HermitianEigen::eigenvalues_of(&inner)
        .unwrap()
        .iter()
        .map(|e| e.max(0.0).sqrt())
        .sum()
}

#[test]
fn fidelity_matches_uhlmann_on_qubits() {
    let mut r = rng(1);
    for _ in 0..200 {
        let a = random_state(&mut r, 2, 2);
        let b = random_state(&mut r, 2, 2);
        assert_abs_diff_eq!(
            fidelity_b(&a, &b).unwrap(),
            uhlmann(&a, &b),
            epsilon = 1e-10
        );
    }
}

#[test]
fn fidelity_symmetric_and_unitarily_invariant() {
    let mut r = rng(2);
    for dim in [2, 3, 5, 8] {
        let a = random_state(&mut r, dim, dim);
        let b = random_state(&mut r, dim, 2);
        let u = random_unitary(&mut r, dim);
        let f = fidelity_b(&a, &b).unwrap();
        assert_abs_diff_eq!(f, fidelity_b(&b, &a).unwrap(), epsilon = 1e-10);
        let g = fidelity_b(&conjugate(&u, &a), &conjugate(&u, &b)).unwrap();
        assert_abs_diff_eq!(f, g, epsilon = 1e-10);
        assert!(f < 1.0 - 1e-6);
        assert_abs_diff_eq!(fidelity_b(&a, &a).unwrap(), 1.0, epsilon = 1e-10);
    }
}

#[test]
fn fidelity_zero_on_orthogonal_supports() {
    let a = DensityMatrix::diagonal(&[0.3, 0.7, 0.0, 0.0]).unwrap();
    let b = DensityMatrix::diagonal(&[0.0, 0.0, 0.5, 0.5]).unwrap();
    assert_abs_diff_eq!(fidelity_b(&a, &b).unwrap(), 0.0, epsilon = 1e-12);
}

#[test]
fn overlap_below_fidelity_squared() {
    let mut r = rng(3);
    for k in 0..1000 {
        let dim = 2 + k % 4;
        let a = random_state(&mut r, dim, 1 + k % dim);
        let b = random_state(&mut r, dim, dim);
        let b2 = fidelity_b(&a, &b).unwrap().powi(2);
        assert!(overlap_l(&a, &b).unwrap() <= b2 + 1e-12);
    }
}

#[test]
fn trace_norm_unitary_invariance() {
    let mut r = rng(4);
    for dim in [2, 4, 7] {
        let m = random_matrix(&mut r, dim, dim);
        let u = random_unitary(&mut r, dim);
        let v = random_unitary(&mut r, dim);
        let umv = u.as_ref() * m.as_ref() * v.as_ref();
        assert_abs_diff_eq!(trace_norm(&m), trace_norm(&umv), epsilon = 1e-10);
    }
}

#[test]
fn sqrt_round_trip_on_random_psd() {
    let mut r = rng(5);
    for dim in [3, 16, 64] {
        let g = random_matrix(&mut r, dim, dim / 2 + 1);
        let m = g.as_ref() * g.as_ref().adjoint();
        let s = matrix_sqrt(&m).unwrap();
        let back = s.as_ref() * s.as_ref();
        assert!(max_abs_diff(&back, &m) < 1e-10, "dim {dim}");
    }
}

#[test]
fn evolve_preserves_spectrum() {
    let mut r = rng(6);
    let rho = random_state(&mut r, 9, 3);
    let h = random_hermitian(&mut r, 9);
    let before = rho.eigenvalues().unwrap();
    for t in [0.3, 2.0, 17.5] {
        let out = evolve(&rho, &h, t).unwrap();
        assert_abs_diff_eq!(out.trace(), 1.0, epsilon = 1e-10);
        assert!(hermitian_deviation(out.matrix()) < 1e-12);
        let after = out.eigenvalues().unwrap();
        for (x, y) in before.iter().zip(&after) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-10);
        }
    }
}

#[test]
fn propagator_agrees_with_dense_unitary() {
    let mut r = rng(7);
    // Block-diagonal up to a permutation: 0-2-4 and 1-3 are separate components.
    let mut h = Mat::<C64>::zeros(5, 5);
    for (a, b, v) in [(0, 2, 0.7), (2, 4, -0.3), (1, 3, 1.1)] {
        h[(a, b)] = c(v, 0.2);
        h[(b, a)] = c(v, -0.2);
    }
    for k in 0..5 {
        h[(k, k)] = c(k as f64 * 0.1, 0.0);
    }
    assert_eq!(connected_blocks(&h), vec![vec![0, 2, 4], vec![1, 3]]);
    let h = HermitianOperator::new(h).unwrap();
    let prop = Propagator::new(&h).unwrap();
    assert_eq!(prop.eigen().block_count(), 2);
    let rho = random_state(&mut r, 5, 5);
    let u = prop.unitary(1.3);
    let direct = conjugate(&u, &rho);
    assert!(prop.evolve(&rho, 1.3).unwrap().max_abs_diff(&direct) < 1e-12);
    let uu = u.as_ref() * u.as_ref().adjoint();
    assert!(max_abs_diff(&uu, &Mat::identity(5, 5)) < 1e-12);
}

#[test]
fn density_matrix_validation() {
    let bad_trace = Mat::from_fn(2, 2, |a, b| if a == b { c(0.6, 0.0) } else { c(0.0, 0.0) });
    assert!(matches!(
        DensityMatrix::new(bad_trace),
        Err(sbs_core::Error::Trace(_))
    ));
    let negative = Mat::from_fn(2, 2, |a, b| match (a, b) {
        (0, 0) => c(1.5, 0.0),
        (1, 1) => c(-0.5, 0.0),
        _ => c(0.0, 0.0),
    });
    assert!(matches!(
        DensityMatrix::new(negative),
        Err(sbs_core::Error::NotPositive(_))
    ));
    let skew = Mat::from_fn(2, 2, |a, b| match (a, b) {
        (0, 1) => c(0.1, 0.0),
        (a, b) if a == b => c(0.5, 0.0),
        _ => c(0.0, 0.0),
    });
    assert!(matches!(
        DensityMatrix::new(skew),
        Err(sbs_core::Error::NotHermitian(_))
    ));
}

fn product_inputs() -> impl Strategy<Value = (u64, usize, usize)> {
    (any::<u64>(), 1usize..5, 1usize..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partial_trace_inverts_tensor((seed, da, db) in product_inputs()) {
        let mut r = rng(seed);
        let a = random_state(&mut r, da, da);
        let b = random_state(&mut r, db, db);
        let layout = SubsystemLayout::new([("A", da), ("B", db)]).unwrap();
        let ab = tensor(&a, &b);
        prop_assert!(partial_trace(&ab, &layout, &["A"]).unwrap().max_abs_diff(&a) < 1e-12);
        prop_assert!(partial_trace(&ab, &layout, &["B"]).unwrap().max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn layout_index_round_trip(dims in prop::collection::vec(1usize..5, 1..5), pick in any::<prop::sample::Index>()) {
        let labels: Vec<String> = (0..dims.len()).map(|k| format!("X{k}")).collect();
        let layout = SubsystemLayout::new(labels.iter().cloned().zip(dims.iter().copied())).unwrap();
        let flat = pick.index(layout.total_dim());
        prop_assert_eq!(layout.flat_index(&layout.digits(flat)), flat);
    }
}
