mod common;

use approx::assert_abs_diff_eq;
use common::*;
use faer::Mat;
use sbs_core::linalg::*;
use sbs_core::metrics::*;
use sbs_core::ring::FramedState;

const POS: PointerBasis = PointerBasis::Position;

fn layout(labels: &[&str], d: usize) -> SubsystemLayout {
    SubsystemLayout::uniform(labels, d).unwrap()
}

fn ghz(n: usize) -> DensityMatrix {
    let dim = 1 << n;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let amps: Vec<C64> = (0..dim)
        .map(|k| c(if k == 0 || k == dim - 1 { s } else { 0.0 }, 0.0))
        .collect();
    DensityMatrix::pure(&amps).unwrap()
}

/// `Σ p_i |i⟩⟨i| ⊗ ρ_{E1|i} ⊗ ρ_{E2|i}` on qutrits.
fn sbs_state(p: &[f64], e1: &[DensityMatrix], e2: &[DensityMatrix]) -> DensityMatrix {
    let d = p.len();
    let mut m = Mat::<C64>::zeros(d * d * d, d * d * d);
    for i in 0..p.len() {
        let branch = DensityMatrix::basis_state(d, i)
            .tensor(&e1[i])
            .tensor(&e2[i]);
        for b in 0..m.ncols() {
            for a in 0..m.nrows() {
                m[(a, b)] += branch.get(a, b) * p[i];
            }
        }
    }
    DensityMatrix::new(m).unwrap()
}

#[test]
fn spectrum_of_pure_system() {
    let mut r = rng(10);
    let env = random_state(&mut r, 4, 4);
    let rho = DensityMatrix::basis_state(3, 0).tensor(&env);
    let l = SubsystemLayout::new([("S", 3), ("E", 4)]).unwrap();
    let p = system_spectrum(&rho, &l, "S", &POS).unwrap();
    assert_eq!(p.len(), 3);
    assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-14);
    assert_abs_diff_eq!(p[1] + p[2], 0.0, epsilon = 1e-14);
}

#[test]
fn conditional_of_sbs_is_stored_branch() {
    let mut r = rng(11);
    let p = [0.2, 0.5, 0.3];
    let e1: Vec<_> = (0..3).map(|_| random_state(&mut r, 3, 2)).collect();
    let e2: Vec<_> = (0..3).map(|_| random_state(&mut r, 3, 3)).collect();
    let rho = sbs_state(&p, &e1, &e2);
    let l = layout(&["S", "E1", "E2"], 3);
    for i in 0..3 {
        let got = conditional_state(&rho, &l, "S", &["E1"], i, &POS).unwrap();
        assert!(got.max_abs_diff(&e1[i]) < 1e-13);
        let joint = conditional_state(&rho, &l, "S", &["E1", "E2"], i, &POS).unwrap();
        assert!(joint.max_abs_diff(&e1[i].tensor(&e2[i])) < 1e-13);
    }
    // Product branches: strong independence holds exactly.
    let cmi = conditional_mutual_information(&rho, &l, "S", &POS, ("E1", "E2")).unwrap();
    assert_abs_diff_eq!(cmi, 0.0, epsilon = 1e-10);
}

#[test]
fn conditional_of_bell_pair() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let bell = DensityMatrix::pure(&[c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]).unwrap();
    let l = layout(&["S", "E"], 2);
    let got = conditional_state(&bell, &l, "S", &["E"], 0, &POS).unwrap();
    assert!(got.max_abs_diff(&DensityMatrix::basis_state(2, 0)) < 1e-15);
    let zero_branch = DensityMatrix::basis_state(2, 0).tensor(&DensityMatrix::basis_state(2, 1));
    assert!(matches!(
        conditional_state(&zero_branch, &l, "S", &["E"], 1, &POS),
        Err(sbs_core::Error::UndefinedConditional { index: 1, .. })
    ));
}

#[test]
fn error_bound_examples() {
    let zero = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let b = error_bounds(&[0.5, 0.5], &zero);
    assert_eq!((b.lower, b.upper), (0.0, 0.0));
    let ones = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
    let b = error_bounds(&[0.5, 0.5], &ones);
    assert_abs_diff_eq!(b.lower, 0.25, epsilon = 1e-15);
    assert_abs_diff_eq!(b.upper, 1.0, epsilon = 1e-15);
    assert!(b.trivial());
}

#[test]
fn helstrom_inside_error_sandwich() {
    let mut r = rng(12);
    use rand::Rng;
    for k in 0..1000 {
        let dim = 2 + k % 7;
        let (k0, k1) = (1 + r.gen_range(0..dim), 1 + r.gen_range(0..dim));
        let rho0 = random_state(&mut r, dim, k0);
        let rho1 = random_state(&mut r, dim, k1);
        let p0: f64 = r.gen_range(0.05..0.95);
        let f = fidelity_b(&rho0, &rho1).unwrap();
        let b = error_bounds(&[p0, 1.0 - p0], &[vec![1.0, f], vec![f, 1.0]]);
        let pe = helstrom_error(p0, &rho0, &rho1);
        assert!(
            b.lower <= pe + 1e-10 && pe <= b.upper + 1e-10,
            "{b:?} vs {pe}"
        );
    }
}

#[test]
fn eta_examples() {
    // Orthogonal branches, no coherence.
    let p = [0.4, 0.6];
    let e: Vec<_> = (0..2).map(|i| DensityMatrix::basis_state(2, i)).collect();
    let l2 = layout(&["S", "E1", "E2"], 2);
    let mut m = Mat::<C64>::zeros(8, 8);
    for i in 0..2 {
        let branch = DensityMatrix::basis_state(2, i).tensor(&e[i]).tensor(&e[i]);
        for b in 0..8 {
            for a in 0..8 {
                m[(a, b)] += branch.get(a, b) * p[i];
            }
        }
    }
    let rho = DensityMatrix::new(m).unwrap();
    assert_abs_diff_eq!(
        eta_bound(&rho, &l2, "S", &POS).unwrap(),
        0.0,
        epsilon = 1e-10
    );

    // Classical correlations with one indistinguishable environment.
    let l1 = layout(&["S", "E"], 2);
    let classical = DensityMatrix::diagonal(&[0.5, 0.0, 0.5, 0.0]).unwrap();
    assert_abs_diff_eq!(
        eta_bound(&classical, &l1, "S", &POS).unwrap(),
        1.0,
        epsilon = 1e-12
    );

    // GHZ: the reduced system is diagonal, so only block coherence sees the superposition.
    let g = ghz(3);
    assert_abs_diff_eq!(eta_bound(&g, &l2, "S", &POS).unwrap(), 0.0, epsilon = 1e-10);
    assert_abs_diff_eq!(
        block_coherence(&g, &l2, "S", &POS).unwrap(),
        1.0,
        epsilon = 1e-12
    );
}

#[test]
fn gamma_examples() {
    let l = layout(&["S", "E"], 2);
    let diag = DensityMatrix::diagonal(&[0.1, 0.2, 0.3, 0.4]).unwrap();
    assert_abs_diff_eq!(decoherence_gamma(&diag, &l, "S", &POS).unwrap(), 0.0);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = DensityMatrix::pure(&[c(s, 0.0), c(s, 0.0)]).unwrap();
    let rho = plus.tensor(&DensityMatrix::basis_state(2, 0));
    assert_abs_diff_eq!(
        decoherence_gamma(&rho, &l, "S", &POS).unwrap(),
        1.0,
        epsilon = 1e-14
    );
    // In the Hadamard basis |+⟩ is a pointer state.
    let h = Mat::from_fn(2, 2, |a, b| c(if a == 1 && b == 1 { -s } else { s }, 0.0));
    let basis = PointerBasis::Custom(h);
    assert_abs_diff_eq!(
        decoherence_gamma(&rho, &l, "S", &basis).unwrap(),
        0.0,
        epsilon = 1e-14
    );
    let p = system_spectrum(&rho, &l, "S", &basis).unwrap();
    assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-14);
    let bad = PointerBasis::Custom(Mat::from_fn(2, 2, |_, _| c(1.0, 0.0)));
    assert!(matches!(
        system_spectrum(&rho, &l, "S", &bad),
        Err(sbs_core::Error::Basis(_))
    ));
}

#[test]
fn mutual_information_examples() {
    let d = 12;
    let l = layout(&["A", "B"], d);
    let prod = DensityMatrix::maximally_mixed(d).tensor(&DensityMatrix::basis_state(d, 3));
    assert_abs_diff_eq!(
        quantum_mutual_information(&prod, &l, "A", "B").unwrap(),
        0.0,
        epsilon = 1e-10
    );
    let norm = 1.0 / (d as f64).sqrt();
    let phi: Vec<C64> = (0..d * d)
        .map(|k| c(if k / d == k % d { norm } else { 0.0 }, 0.0))
        .collect();
    let ent = DensityMatrix::pure(&phi).unwrap();
    let two_log = 2.0 * (d as f64).log2();
    assert_abs_diff_eq!(
        quantum_mutual_information(&ent, &l, "A", "B").unwrap(),
        two_log,
        epsilon = 1e-9
    );
    assert_abs_diff_eq!(two_log, 7.170, epsilon = 1e-3);
    let w: Vec<f64> = (0..d * d)
        .map(|k| if k / d == k % d { 1.0 / d as f64 } else { 0.0 })
        .collect();
    let classical = DensityMatrix::diagonal(&w).unwrap();
    assert_abs_diff_eq!(
        quantum_mutual_information(&classical, &l, "A", "B").unwrap(),
        (d as f64).log2(),
        epsilon = 1e-9
    );
}

#[test]
fn holevo_examples() {
    let mut r = rng(13);
    let s = random_state(&mut r, 4, 2);
    let same = vec![s.clone(), s.clone(), s];
    assert_abs_diff_eq!(
        holevo_information(&[0.2, 0.3, 0.5], &same).unwrap(),
        0.0,
        epsilon = 1e-10
    );
    let orth: Vec<_> = (0..12).map(|k| DensityMatrix::basis_state(12, k)).collect();
    let p = vec![1.0 / 12.0; 12];
    assert_abs_diff_eq!(
        holevo_information(&p, &orth).unwrap(),
        12f64.log2(),
        epsilon = 1e-10
    );
}

#[test]
fn entropy_inequalities_on_random_states() {
    let mut r = rng(14);
    let l = layout(&["S", "E1", "E2"], 3);
    for k in 0..40 {
        let rho = random_state(&mut r, 27, 1 + k % 27);
        let cmi = conditional_mutual_information(&rho, &l, "S", &POS, ("E1", "E2")).unwrap();
        assert!(cmi >= -1e-9);
        let state = FramedState::lab(rho.clone(), l.clone()).unwrap();
        let rep = SbsReport::compute(&state, "S", &POS).unwrap();
        assert_abs_diff_eq!(rep.i_mean.unwrap(), cmi, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.spectrum.iter().sum::<f64>(), 1.0, epsilon = 1e-10);
        for obs in &rep.observers {
            assert!(obs.holevo <= obs.qmi + 1e-9, "{} > {}", obs.holevo, obs.qmi);
            assert!(obs.bounds.lower <= obs.bounds.upper);
            for i in 0..3 {
                assert_eq!(obs.fidelity[i][i], 1.0);
                for j in 0..3 {
                    assert_eq!(obs.fidelity[i][j], obs.fidelity[j][i]);
                }
            }
        }
        let eta = eta_bound(&rho, &l, "S", &POS).unwrap();
        assert_abs_diff_eq!(rep.eta, eta, epsilon = 1e-12);
    }
}

#[test]
fn report_on_sbs_state() {
    let p = [0.25, 0.75, 0.0];
    let e: Vec<_> = (0..3).map(|i| DensityMatrix::basis_state(3, i)).collect();
    let rho = sbs_state(&p, &e, &e);
    let state = FramedState::lab(rho, layout(&["S", "E1", "E2"], 3)).unwrap();
    let rep = SbsReport::compute(&state, "S", &POS).unwrap();
    assert_eq!(rep.frame, "C");
    assert_abs_diff_eq!(rep.eta, 0.0, epsilon = 1e-10);
    assert_abs_diff_eq!(rep.i_mean.unwrap(), 0.0, epsilon = 1e-10);
    let e1 = rep.observer("E1").unwrap();
    assert!(e1.fidelity[0][2].is_nan());
    assert_abs_diff_eq!(e1.fidelity[0][1], 0.0, epsilon = 1e-12);
    let h = -(0.25f64 * 0.25f64.log2() + 0.75 * 0.75f64.log2());
    assert_abs_diff_eq!(e1.holevo, h, epsilon = 1e-10);
    assert_abs_diff_eq!(e1.qmi, h, epsilon = 1e-10);
}

#[test]
fn saturation_examples() {
    let constant: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, 2.5)).collect();
    let s = saturation_stats(&constant, (3.0, 9.0)).unwrap();
    assert_eq!(
        (s.i_sat, s.sigma_i, s.t_sat, s.n_window),
        (2.5, 0.0, 0.0, 7)
    );

    // Ramp 0, 1, 2, 3.95 then plateau alternating 3.9 / 4.1: mean 4, RMS 0.1,
    // and the first sample above 3.9 is the last ramp point at t = 3.
    let mut series: Vec<(f64, f64)> = vec![(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (3.0, 3.95)];
    for k in 4..12 {
        series.push((k as f64, if k % 2 == 0 { 3.9 } else { 4.1 }));
    }
    let s = saturation_stats(&series, (4.0, 11.0)).unwrap();
    assert_abs_diff_eq!(s.i_sat, 4.0, epsilon = 1e-12);
    assert_abs_diff_eq!(s.sigma_i, 0.1, epsilon = 1e-12);
    assert_eq!(s.t_sat, 3.0);
    assert!(saturation_stats(&series, (100.0, 200.0)).is_err());
}
