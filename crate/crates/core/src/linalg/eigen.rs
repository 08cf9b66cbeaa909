//! Block-aware Hermitian eigendecomposition and the cached propagator built on it.
//!
//! Operators on the ring model are frequently block diagonal up to a
//! permutation (the central interaction never changes the system position),
//! so the factorization first splits the index set into connected components
//! of the nonzero pattern and diagonalizes each component separately.

use faer::{Mat, Side};

use super::{zero, DensityMatrix, HermitianOperator, C64};
use crate::error::{Error, Result};

/// Connected components of the graph with an edge `a-b` whenever `m[a][b] ≠ 0`.
///
/// Components are ordered by their smallest index; indices inside a component
/// are ascending.
pub fn connected_blocks(m: &Mat<C64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for b in 0..n {
        for a in 0..n {
            if a != b && m[(a, b)] != zero() {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
                    parent[hi] = lo;
                }
            }
        }
    }
    let mut root_slot = vec![usize::MAX; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for x in 0..n {
        let r = find(&mut parent, x);
        if root_slot[r] == usize::MAX {
            root_slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[root_slot[r]].push(x);
    }
    blocks
}

fn gather(m: &Mat<C64>, rows: &[usize], cols: &[usize]) -> Mat<C64> {
    Mat::from_fn(rows.len(), cols.len(), |a, b| m[(rows[a], cols[b])])
}

fn is_zero_block(m: &Mat<C64>, rows: &[usize], cols: &[usize]) -> bool {
    cols.iter()
        .all(|&b| rows.iter().all(|&a| m[(a, b)] == zero()))
}

fn dense_eigen(m: &Mat<C64>) -> Result<(Vec<f64>, Mat<C64>)> {
    if m.nrows() == 1 {
        return Ok((vec![m[(0, 0)].re], Mat::identity(1, 1)));
    }
    let evd = m
        .as_ref()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::Eigen)?;
    let s = evd.S().column_vector();
    let values = (0..m.nrows()).map(|k| s[k].re).collect();
    Ok((values, evd.U().to_owned()))
}

fn dense_eigenvalues(m: &Mat<C64>) -> Result<Vec<f64>> {
    if m.nrows() == 1 {
        return Ok(vec![m[(0, 0)].re]);
    }
    m.as_ref()
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::Eigen)
}

#[derive(Clone, Debug)]
struct EigenBlock {
    indices: Vec<usize>,
    values: Vec<f64>,
    vectors: Mat<C64>,
}

/// Eigendecomposition `H = V diag(λ) V†` stored per connected block.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    dim: usize,
    blocks: Vec<EigenBlock>,
}

impl HermitianEigen {
    /// Factorizes a Hermitian matrix (only the lower triangle of each block is read).
    pub fn new(m: &Mat<C64>) -> Result<Self> {
        let blocks = connected_blocks(m)
            .into_iter()
            .map(|indices| {
                let (values, vectors) = dense_eigen(&gather(m, &indices, &indices))?;
                Ok(EigenBlock {
                    indices,
                    values,
                    vectors,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(HermitianEigen {
            dim: m.nrows(),
            blocks,
        })
    }

    /// Eigenvalues only, in nondecreasing order.
    pub fn eigenvalues_of(m: &Mat<C64>) -> Result<Vec<f64>> {
        let mut all = Vec::with_capacity(m.nrows());
        for indices in connected_blocks(m) {
            all.extend(dense_eigenvalues(&gather(m, &indices, &indices))?);
        }
        all.sort_by(f64::total_cmp);
        Ok(all)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Eigenvalues in nondecreasing order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self
            .blocks
            .iter()
            .flat_map(|b| b.values.iter().copied())
            .collect();
        all.sort_by(f64::total_cmp);
        all
    }

    /// `V diag(f(λ)) V†` as a dense matrix.
    pub fn apply_function(&self, f: impl Fn(f64) -> C64) -> Mat<C64> {
        let mut out = Mat::<C64>::zeros(self.dim, self.dim);
        for b in &self.blocks {
            let k = b.indices.len();
            let scaled = Mat::from_fn(k, k, |a, c| b.vectors[(a, c)] * f(b.values[c]));
            let local = scaled.as_ref() * b.vectors.as_ref().adjoint();
            for (ra, &ga) in b.indices.iter().enumerate() {
                for (rc, &gc) in b.indices.iter().enumerate() {
                    out[(ga, gc)] = local[(ra, rc)];
                }
            }
        }
        out
    }
}

/// Cached factorization of a Hamiltonian for evaluating `e^{−iHt} ρ e^{iHt}`
/// at arbitrary times.
#[derive(Clone, Debug)]
pub struct Propagator {
    eigen: HermitianEigen,
}

/// A state expressed in the propagator's eigenbasis, `ρ̃ = V† ρ V`, stored per
/// block pair `(I, J)` with `I ≤ J`; pairs where `ρ` vanishes are dropped.
#[derive(Clone, Debug)]
pub struct EigenbasisState {
    dim: usize,
    pairs: Vec<(usize, usize, Mat<C64>)>,
}

impl Propagator {
    pub fn new(h: &HermitianOperator) -> Result<Self> {
        Ok(Propagator {
            eigen: HermitianEigen::new(h.matrix())?,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigen.dim
    }

    pub fn eigen(&self) -> &HermitianEigen {
        &self.eigen
    }

    /// Dense `U(t) = exp(−iHt)`.
    pub fn unitary(&self, t: f64) -> Mat<C64> {
        self.eigen.apply_function(|e| C64::from_polar(1.0, -e * t))
    }

    /// One-off change of basis; subsequent [`Propagator::state_at`] calls only
    /// apply phases and rotate back.
    pub fn rotate(&self, rho: &DensityMatrix) -> Result<EigenbasisState> {
        if rho.dim() != self.dim() {
            return Err(Error::Dimension(format!(
                "state has dim {}, Hamiltonian has dim {}",
                rho.dim(),
                self.dim()
            )));
        }
        let m = rho.matrix();
        let blocks = &self.eigen.blocks;
        let mut pairs = Vec::new();
        for (bi, bl) in blocks.iter().enumerate() {
            for (bj, br) in blocks.iter().enumerate().skip(bi) {
                if is_zero_block(m, &bl.indices, &br.indices) {
                    continue;
                }
                let r = gather(m, &bl.indices, &br.indices);
                let left = bl.vectors.as_ref().adjoint() * r.as_ref();
                let rotated = left.as_ref() * br.vectors.as_ref();
                pairs.push((bi, bj, rotated));
            }
        }
        Ok(EigenbasisState {
            dim: self.dim(),
            pairs,
        })
    }

    pub fn state_at(&self, state: &EigenbasisState, t: f64) -> DensityMatrix {
        assert_eq!(
            state.dim,
            self.dim(),
            "eigenbasis state from another propagator"
        );
        let blocks = &self.eigen.blocks;
        let phases: Vec<Vec<C64>> = blocks
            .iter()
            .map(|b| {
                b.values
                    .iter()
                    .map(|&e| C64::from_polar(1.0, -e * t))
                    .collect()
            })
            .collect();
        let mut out = Mat::<C64>::zeros(self.dim(), self.dim());
        for (bi, bj, rotated) in &state.pairs {
            let (bl, br) = (&blocks[*bi], &blocks[*bj]);
            let (pl, pr) = (&phases[*bi], &phases[*bj]);
            let phased = Mat::from_fn(rotated.nrows(), rotated.ncols(), |a, c| {
                rotated[(a, c)] * pl[a] * pr[c].conj()
            });
            let left = bl.vectors.as_ref() * phased.as_ref();
            let local = left.as_ref() * br.vectors.as_ref().adjoint();
            for (rc, &gc) in br.indices.iter().enumerate() {
                for (ra, &ga) in bl.indices.iter().enumerate() {
                    let v = local[(ra, rc)];
                    if bi == bj {
                        out[(ga, gc)] = v;
                    } else {
                        out[(ga, gc)] = v;
                        out[(gc, ga)] = v.conj();
                    }
                }
            }
        }
        // Diagonal blocks come out Hermitian only up to rounding; fold them.
        for (bi, bj, _) in &state.pairs {
            if bi == bj {
                let idx = &blocks[*bi].indices;
                for (p, &a) in idx.iter().enumerate() {
                    out[(a, a)] = C64::new(out[(a, a)].re, 0.0);
                    for &c in &idx[p + 1..] {
                        let v = (out[(a, c)] + out[(c, a)].conj()) * 0.5;
                        out[(a, c)] = v;
                        out[(c, a)] = v.conj();
                    }
                }
            }
        }
        DensityMatrix::from_trusted(out)
    }

    pub fn evolve(&self, rho: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        Ok(self.state_at(&self.rotate(rho)?, t))
    }
}
