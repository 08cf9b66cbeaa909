//! Grid discretizations of the Gaussian conditional states. Everything here is
//! built from the state definitions and numerical quadrature only.
#![allow(dead_code)]

pub const SPAN: f64 = 8.0;

pub fn normal(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

fn normalize(w: &mut [f64]) {
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
}

/// `Σ_k √(p_k q_k)`: the trace norm of `√ρ√σ` for diagonal states.
pub fn bhattacharyya_sum(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum()
}

/// Two position densities discretized on a common uniform grid of `n` points
/// covering both `μ ± 8σ` ranges, then compared.
pub fn grid_fidelity(d1: (f64, f64), d2: (f64, f64), n: usize) -> f64 {
    let lo = (d1.0 - SPAN * d1.1).min(d2.0 - SPAN * d2.1);
    let hi = (d1.0 + SPAN * d1.1).max(d2.0 + SPAN * d2.1);
    let grid = linspace(lo, hi, n);
    let mut p: Vec<f64> = grid.iter().map(|&x| normal(x, d1.0, d1.1)).collect();
    let mut q: Vec<f64> = grid.iter().map(|&x| normal(x, d2.0, d2.1)).collect();
    normalize(&mut p);
    normalize(&mut q);
    bhattacharyya_sum(&p, &q)
}

/// Incoherent environment branches `f(x|μ, σ)`.
pub fn oracle_incoherent_pair(b1: (f64, f64), b2: (f64, f64)) -> f64 {
    grid_fidelity(b1, b2, 2048)
}

/// Conditional system state in the frame of `E₁`: weight `f(−q_C|μ, σ)` at
/// position `x + q_C`, read off on a grid of system positions.
pub fn oracle_transformed_system(x_i: f64, x_ip: f64, e1_i: (f64, f64), e1_ip: (f64, f64)) -> f64 {
    let reach = |x: f64, e: (f64, f64)| (x - e.0 - SPAN * e.1, x - e.0 + SPAN * e.1);
    let (a0, a1) = reach(x_i, e1_i);
    let (b0, b1) = reach(x_ip, e1_ip);
    let grid = linspace(a0.min(b0), a1.max(b1), 2048);
    let mut p: Vec<f64> = grid
        .iter()
        .map(|&x| normal(-(x - x_i), e1_i.0, e1_i.1))
        .collect();
    let mut q: Vec<f64> = grid
        .iter()
        .map(|&x| normal(-(x - x_ip), e1_ip.0, e1_ip.1))
        .collect();
    normalize(&mut p);
    normalize(&mut q);
    bhattacharyya_sum(&p, &q)
}

/// Lattice pmf `∝ f(kh)` for integer `k` covering `μ ± 8σ`; returns the
/// first lattice index and the weights.
fn lattice(mu: f64, sigma: f64, h: f64) -> (i64, Vec<f64>) {
    let k0 = ((mu - SPAN * sigma) / h).floor() as i64;
    let k1 = ((mu + SPAN * sigma) / h).ceil() as i64;
    let mut w: Vec<f64> = (k0..=k1).map(|k| normal(k as f64 * h, mu, sigma)).collect();
    normalize(&mut w);
    (k0, w)
}

fn convolve(a: &(i64, Vec<f64>), b: &(i64, Vec<f64>)) -> (i64, Vec<f64>) {
    let mut out = vec![0.0; a.1.len() + b.1.len() - 1];
    for (i, x) in a.1.iter().enumerate() {
        for (j, y) in b.1.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    (a.0 + b.0, out)
}

fn aligned_bhattacharyya(p: &(i64, Vec<f64>), q: &(i64, Vec<f64>)) -> f64 {
    let mut s = 0.0;
    for (i, x) in p.1.iter().enumerate() {
        let k = p.0 + i as i64 - q.0;
        if k >= 0 && (k as usize) < q.1.len() {
            s += (x * q.1[k as usize]).sqrt();
        }
    }
    s
}

/// Conditional state of `E_j` in the frame of `E₁`: `q_{E_j} = (q_{E_j} − q_C) + q_C`
/// with `q_{E_j} − q_C ~ f(·|μ_{E_j}, σ_{E_j})` and `−q_C ~ f(·|μ_{E₁}, σ_{E₁})`,
/// built as a discrete convolution on a common lattice.
pub fn oracle_transformed_env(
    e1_i: (f64, f64),
    e1_ip: (f64, f64),
    ej_i: (f64, f64),
    ej_ip: (f64, f64),
) -> f64 {
    let smallest = [e1_i.1, e1_ip.1, ej_i.1, ej_ip.1]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let h = smallest / 12.0;
    let branch = |e1: (f64, f64), ej: (f64, f64)| {
        let rel = lattice(ej.0, ej.1, h);
        let qc = lattice(-e1.0, e1.1, h);
        convolve(&rel, &qc)
    };
    aligned_bhattacharyya(&branch(e1_i, ej_i), &branch(e1_ip, ej_ip))
}

/// `Tr[ρρ′]` for `ρ = ∫dq_C f(−q_C|μ_{E₁}, σ_{E₁}) |φ_{q_C}⟩⟨φ_{q_C}|`,
/// `φ_{q_C}(q_S) = f^{1/2}(q_S − q_C|μ_S, σ_S)`, by quadrature over both
/// `q_C` integrals and the wave-function overlaps.
pub fn oracle_linear_fidelity(
    s_i: (f64, f64),
    s_ip: (f64, f64),
    e1_i: (f64, f64),
    e1_ip: (f64, f64),
) -> f64 {
    let nq = 161;
    let nx = 1024;
    let qgrid = |e: (f64, f64)| linspace(-e.0 - SPAN * e.1, -e.0 + SPAN * e.1, nq);
    let (qa, qb) = (qgrid(e1_i), qgrid(e1_ip));
    let weights = |q: &[f64], e: (f64, f64)| {
        let mut w: Vec<f64> = q.iter().map(|&x| normal(-x, e.0, e.1)).collect();
        normalize(&mut w);
        w
    };
    let (wa, wb) = (weights(&qa, e1_i), weights(&qb, e1_ip));
    let lo = (qa[0] + s_i.0 - SPAN * s_i.1).min(qb[0] + s_ip.0 - SPAN * s_ip.1);
    let hi = (qa[nq - 1] + s_i.0 + SPAN * s_i.1).max(qb[nq - 1] + s_ip.0 + SPAN * s_ip.1);
    let x = linspace(lo, hi, nx);
    let packets = |q: &[f64], s: (f64, f64)| -> Vec<Vec<f64>> {
        q.iter()
            .map(|&qc| {
                let mut row: Vec<f64> = x
                    .iter()
                    .map(|&xs| normal(xs - qc, s.0, s.1).sqrt())
                    .collect();
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                row.iter_mut().for_each(|v| *v /= norm);
                row
            })
            .collect()
    };
    let (pa, pb) = (packets(&qa, s_i), packets(&qb, s_ip));
    let mut total = 0.0;
    for (a, wa) in pa.iter().zip(&wa) {
        for (b, wb) in pb.iter().zip(&wb) {
            let ov: f64 = a.iter().zip(b).map(|(u, v)| u * v).sum();
            total += wa * wb * ov * ov;
        }
    }
    total
}
