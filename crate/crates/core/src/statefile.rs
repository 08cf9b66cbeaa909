//! Plain-text density-matrix files.
//!
//! ```text
//! sbs-state v1
//! dim 4
//! layout S=2,E1=2
//! frame C
//! 0.5 0 0 0 0 0 0.5 0
//! …
//! ```
//!
//! The `layout` line is optional. Each matrix row is one line of `re im` pairs.

use std::fmt::Write as _;

use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg::{SubsystemLayout, C64};

pub const HEADER: &str = "sbs-state v1";

#[derive(Clone, Debug, PartialEq)]
pub struct StateFile {
    pub matrix: Mat<C64>,
    pub layout: Option<SubsystemLayout>,
    pub frame: String,
}

impl StateFile {
    pub fn to_text(&self) -> String {
        let n = self.matrix.nrows();
        let mut out = format!("{HEADER}\ndim {n}\n");
        if let Some(l) = &self.layout {
            writeln!(out, "layout {l}").unwrap();
        }
        writeln!(out, "frame {}", self.frame).unwrap();
        for a in 0..n {
            let row: Vec<String> = (0..n)
                .map(|b| {
                    let v = self.matrix[(a, b)];
                    format!("{:e} {:e}", v.re, v.im)
                })
                .collect();
            writeln!(out, "{}", row.join(" ")).unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let err = |m: String| Error::Parse(m);
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        if lines.next() != Some(HEADER) {
            return Err(err(format!("missing `{HEADER}` header")));
        }
        let dim: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("dim "))
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| err("expected `dim <n>`".into()))?;
        if dim == 0 {
            return Err(err("dimension must be positive".into()));
        }
        let mut next = lines.next();
        let mut layout = None;
        if let Some(spec) = next.and_then(|l| l.strip_prefix("layout ")) {
            let l: SubsystemLayout = spec.trim().parse()?;
            l.check_dim(dim)?;
            layout = Some(l);
            next = lines.next();
        }
        let frame = next
            .and_then(|l| l.strip_prefix("frame "))
            .map(|f| f.trim().to_string())
            .filter(|f| !f.is_empty())
            .ok_or_else(|| err("expected `frame <label>`".into()))?;
        let mut matrix = Mat::<C64>::zeros(dim, dim);
        for a in 0..dim {
            let line = lines
                .next()
                .ok_or_else(|| err(format!("file ends before row {a}")))?;
            let nums = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| err(format!("bad number `{t}` in row {a}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if nums.len() != 2 * dim {
                return Err(err(format!(
                    "row {a} has {} numbers, expected {}",
                    nums.len(),
                    2 * dim
                )));
            }
            for b in 0..dim {
                matrix[(a, b)] = C64::new(nums[2 * b], nums[2 * b + 1]);
            }
        }
        if lines.next().is_some() {
            return Err(err("trailing data after the matrix".into()));
        }
        Ok(StateFile {
            matrix,
            layout,
            frame,
        })
    }
}
