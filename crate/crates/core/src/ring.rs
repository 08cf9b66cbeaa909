//! The discrete ring ℤ_D and reference-frame changes on it.
//!
//! Moving to the frame of subsystem `T` replaces every coordinate `x_j` by
//! `x_j ⊖ x_T` and the coordinate of `T` itself by `⊖x_T`; that slot then
//! describes the old frame and takes its label. On the joint position basis
//! this is a permutation of flat indices, so it acts on density matrices by
//! relabeling rows and columns.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg::{DensityMatrix, SubsystemLayout, C64};

/// Label of the laboratory frame.
pub const LAB_FRAME: &str = "C";

/// Element of ℤ_D.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RingCoordinate {
    value: usize,
    d: usize,
}

impl RingCoordinate {
    /// Canonicalizes any integer into `[0, d)`.
    pub fn new(value: i64, d: usize) -> Self {
        assert!(d > 0, "ring dimension must be positive");
        RingCoordinate {
            value: value.rem_euclid(d as i64) as usize,
            d,
        }
    }

    pub fn value(self) -> usize {
        self.value
    }

    pub fn modulus(self) -> usize {
        self.d
    }

    /// Shortest distance around the ring.
    pub fn distance(self, other: Self) -> usize {
        let diff = (self - other).value;
        diff.min(self.d - diff)
    }
}

impl Add for RingCoordinate {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        debug_assert_eq!(self.d, rhs.d);
        RingCoordinate {
            value: (self.value + rhs.value) % self.d,
            d: self.d,
        }
    }
}

impl Sub for RingCoordinate {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        debug_assert_eq!(self.d, rhs.d);
        RingCoordinate {
            value: (self.value + self.d - rhs.value) % self.d,
            d: self.d,
        }
    }
}

impl Neg for RingCoordinate {
    type Output = Self;
    fn neg(self) -> Self {
        RingCoordinate {
            value: (self.d - self.value) % self.d,
            d: self.d,
        }
    }
}

impl fmt::Display for RingCoordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.d)
    }
}

/// Frame change as an explicit permutation of flat basis indices.
#[derive(Clone, Debug)]
pub struct FramePermutation {
    d: usize,
    before: SubsystemLayout,
    after: SubsystemLayout,
    source_frame: String,
    target_frame: String,
    target_slot: usize,
    map: Vec<usize>,
    inverse: Vec<usize>,
}

/// Coordinate rule on one basis tuple.
pub fn transform_tuple(digits: &[usize], target_slot: usize, d: usize) -> Vec<usize> {
    let xt = digits[target_slot];
    digits
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            if k == target_slot {
                (d - xt) % d
            } else {
                (x + d - xt) % d
            }
        })
        .collect()
}

impl FramePermutation {
    /// Permutation taking a state described in `source_frame` to the frame of
    /// subsystem `target`.
    pub fn new(
        d: usize,
        layout: &SubsystemLayout,
        source_frame: &str,
        target: &str,
    ) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!("ring dimension {d} < 2")));
        }
        if let Some(bad) = layout.dims().iter().find(|&&k| k != d) {
            return Err(Error::Layout(format!(
                "frame change needs every subsystem of dimension {d}, found {bad}"
            )));
        }
        if source_frame == target {
            return Err(Error::InvalidParameter(format!(
                "state is already in frame {target}"
            )));
        }
        if layout.index_of(source_frame).is_ok() {
            return Err(Error::Layout(format!(
                "frame label {source_frame} clashes with a subsystem label"
            )));
        }
        let target_slot = layout.index_of(target)?;
        let after = layout.relabeled(target_slot, source_frame)?;
        let n = layout.total_dim();
        let mut map = vec![0usize; n];
        for (flat, slot) in map.iter_mut().enumerate() {
            let moved = transform_tuple(&layout.digits(flat), target_slot, d);
            *slot = layout.flat_index(&moved);
        }
        let mut inverse = vec![0usize; n];
        for (a, &b) in map.iter().enumerate() {
            inverse[b] = a;
        }
        Ok(FramePermutation {
            d,
            before: layout.clone(),
            after,
            source_frame: source_frame.to_string(),
            target_frame: target.to_string(),
            target_slot,
            map,
            inverse,
        })
    }

    pub fn ring_dim(&self) -> usize {
        self.d
    }

    pub fn layout_before(&self) -> &SubsystemLayout {
        &self.before
    }

    /// Layout in the new frame: the target slot carries the old frame's label.
    pub fn layout_after(&self) -> &SubsystemLayout {
        &self.after
    }

    pub fn source_frame(&self) -> &str {
        &self.source_frame
    }

    pub fn target_frame(&self) -> &str {
        &self.target_frame
    }

    pub fn target_slot(&self) -> usize {
        self.target_slot
    }

    /// `π(a)` for every flat index `a`.
    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse(&self) -> &[usize] {
        &self.inverse
    }

    pub fn fixed_points(&self) -> usize {
        self.map
            .iter()
            .enumerate()
            .filter(|&(a, &b)| a == b)
            .count()
    }

    /// Cycle lengths from an explicit decomposition.
    pub fn cycle_lengths(&self) -> Vec<usize> {
        let mut seen = vec![false; self.map.len()];
        let mut out = Vec::new();
        for start in 0..self.map.len() {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                x = self.map[x];
                len += 1;
            }
            out.push(len);
        }
        out
    }

    /// Permutes the rows and columns of a matrix: `out[π(a)][π(b)] = m[a][b]`.
    pub fn permute_matrix(&self, m: &Mat<C64>) -> Mat<C64> {
        let inv = &self.inverse;
        Mat::from_fn(m.nrows(), m.ncols(), |a, b| m[(inv[a], inv[b])])
    }
}

/// Frame change from the laboratory frame to `target`.
pub fn build_frame_permutation(
    d: usize,
    layout: &SubsystemLayout,
    target: &str,
) -> Result<FramePermutation> {
    FramePermutation::new(d, layout, LAB_FRAME, target)
}

pub fn apply_frame_transform(
    rho: &DensityMatrix,
    perm: &FramePermutation,
) -> Result<DensityMatrix> {
    if rho.dim() != perm.map.len() {
        return Err(Error::Dimension(format!(
            "state has dim {}, permutation acts on {}",
            rho.dim(),
            perm.map.len()
        )));
    }
    Ok(DensityMatrix::from_trusted(
        perm.permute_matrix(rho.matrix()),
    ))
}

fn three_party(d: usize) -> FramePermutation {
    let layout = SubsystemLayout::uniform(&["S", "E1", "E2"], d).expect("valid layout");
    build_frame_permutation(d, &layout, "E1").expect("valid permutation")
}

/// Fixed points of the three-party frame change to `E1`.
pub fn permutation_character(d: usize) -> usize {
    three_party(d).fixed_points()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CycleStructure {
    pub fixed: usize,
    pub two_cycles: usize,
    /// Cycles of length three or more; zero for an involution.
    pub longer: usize,
}

/// Cycle type of the three-party frame change to `E1`.
pub fn cycle_structure(d: usize) -> CycleStructure {
    let mut out = CycleStructure {
        fixed: 0,
        two_cycles: 0,
        longer: 0,
    };
    for len in three_party(d).cycle_lengths() {
        match len {
            1 => out.fixed += 1,
            2 => out.two_cycles += 1,
            _ => out.longer += 1,
        }
    }
    out
}

/// A state together with its layout and the frame it is described in.
#[derive(Clone, Debug)]
pub struct FramedState {
    pub rho: DensityMatrix,
    pub layout: SubsystemLayout,
    pub frame: String,
}

impl FramedState {
    pub fn new(
        rho: DensityMatrix,
        layout: SubsystemLayout,
        frame: impl Into<String>,
    ) -> Result<Self> {
        layout.check_dim(rho.dim())?;
        let frame = frame.into();
        if layout.index_of(&frame).is_ok() {
            return Err(Error::Layout(format!(
                "frame label {frame} clashes with a subsystem label"
            )));
        }
        Ok(FramedState { rho, layout, frame })
    }

    /// Laboratory-frame state.
    pub fn lab(rho: DensityMatrix, layout: SubsystemLayout) -> Result<Self> {
        Self::new(rho, layout, LAB_FRAME)
    }

    pub fn permutation_to(&self, target: &str) -> Result<FramePermutation> {
        let d = self.layout.dims()[0];
        FramePermutation::new(d, &self.layout, &self.frame, target)
    }

    /// The same state in the frame of subsystem `target`.
    pub fn to_frame(&self, target: &str) -> Result<FramedState> {
        if target == self.frame {
            return Ok(self.clone());
        }
        let perm = self.permutation_to(target)?;
        self.apply(&perm)
    }

    pub fn apply(&self, perm: &FramePermutation) -> Result<FramedState> {
        if perm.layout_before() != &self.layout || perm.source_frame() != self.frame {
            return Err(Error::Layout(format!(
                "permutation built for {} in frame {}, state is {} in frame {}",
                perm.layout_before(),
                perm.source_frame(),
                self.layout,
                self.frame
            )));
        }
        Ok(FramedState {
            rho: apply_frame_transform(&self.rho, perm)?,
            layout: perm.layout_after().clone(),
            frame: perm.target_frame().to_string(),
        })
    }
}
