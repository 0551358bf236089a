//! Bipolar encodings of scalars and image positions.
//!
//! A coordinate range is split into `n` equal subintervals whose `n + 1`
//! borders each own a random bipolar basis vector. A value inside a
//! subinterval is encoded by splicing the left border's vector (leading
//! dimensions) onto the right border's vector (trailing dimensions), with the
//! split index proportional to the distance from the right border. Nearby
//! values therefore share most of their dimensions, and the expected cosine
//! between two encodings falls off linearly, reaching zero at one subinterval
//! width.
//!
//! A 2-D pose is the binding of its x and y encodings.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypervector::{bind, check_dims, HdVector, SymbolTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
        })
    }
}

/// Border vectors for one axis over one coordinate range.
#[derive(Debug, Clone)]
pub struct BasisBank {
    axis: Axis,
    seed: u64,
    lo: f64,
    hi: f64,
    basis: Arc<[Arc<HdVector>]>,
}

impl BasisBank {
    pub fn axis(&self) -> Axis {
        self.axis
    }

    /// Master seed of the symbol table the basis came from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Number of subintervals.
    pub fn intervals(&self) -> usize {
        self.basis.len() - 1
    }

    pub fn interval_width(&self) -> f64 {
        (self.hi - self.lo) / self.intervals() as f64
    }

    pub fn basis(&self) -> &[Arc<HdVector>] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis[0].dim()
    }

    /// Same basis vectors over a different coordinate range.
    pub fn with_range(&self, lo: f64, hi: f64) -> Result<BasisBank> {
        check_range(lo, hi)?;
        Ok(BasisBank {
            axis: self.axis,
            seed: self.seed,
            lo,
            hi,
            basis: Arc::clone(&self.basis),
        })
    }

    /// Subinterval index and split index for `v` (clamped into range).
    ///
    /// A value on an interior border belongs to the subinterval on its right.
    pub fn split(&self, v: f64) -> (usize, usize) {
        let n = self.intervals();
        let d = self.dim();
        let v = if v.is_nan() { self.lo } else { v.clamp(self.lo, self.hi) };
        let t = (v - self.lo) / self.interval_width();
        let cell = (t.floor() as usize).min(n - 1);
        let delta_left = t - cell as f64;
        let delta_right = 1.0 - delta_left;
        // f64::round rounds half away from zero
        let alpha = (d as f64 * delta_right / (delta_left + delta_right)).round() as usize;
        (cell, alpha.min(d))
    }

    /// Encodes one scalar.
    pub fn encode(&self, v: f64) -> HdVector {
        let (cell, alpha) = self.split(v);
        let left = self.basis[cell].as_slice();
        let right = self.basis[cell + 1].as_slice();
        let mut out = Vec::with_capacity(left.len());
        out.extend_from_slice(&left[..alpha]);
        out.extend_from_slice(&right[alpha..]);
        HdVector::from_vec_unchecked(out)
    }
}

fn check_range(lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::invalid(format!("degenerate coordinate range [{lo}, {hi}]")));
    }
    Ok(())
}

/// Symbol name of the `index`-th border vector on `axis`.
pub fn basis_symbol_name(axis: Axis, index: usize) -> String {
    format!("pos/{axis}/{index}")
}

/// Builds the `n + 1` border vectors for `axis` over `[range.0, range.1]`.
pub fn make_basis_bank(
    table: &SymbolTable,
    axis: Axis,
    range: (f64, f64),
    n: usize,
) -> Result<BasisBank> {
    if n < 1 {
        return Err(Error::invalid("subinterval count must be at least 1"));
    }
    check_range(range.0, range.1)?;
    let basis = (0..=n)
        .map(|i| table.symbol(&basis_symbol_name(axis, i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(BasisBank {
        axis,
        seed: table.master_seed(),
        lo: range.0,
        hi: range.1,
        basis: basis.into(),
    })
}

pub fn encode_scalar(bank: &BasisBank, v: f64) -> HdVector {
    bank.encode(v)
}

/// An encoded image position.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseEncoding {
    pub vector: HdVector,
    pub x: f64,
    pub y: f64,
}

/// `P = X ⊗ Y`.
pub fn encode_pose(bx: &BasisBank, by: &BasisBank, x: f64, y: f64) -> Result<PoseEncoding> {
    if bx.axis != Axis::X || by.axis != Axis::Y {
        return Err(Error::invalid(format!(
            "pose banks must be (x, y), got ({}, {})",
            bx.axis, by.axis
        )));
    }
    check_dims(bx.dim(), by.dim())?;
    let vector = bind(&bx.encode(x), &by.encode(y))?;
    Ok(PoseEncoding { vector, x, y })
}

/// Expected cosine between scalar encodings at separation `delta` for
/// subinterval width `width`.
pub fn expected_scalar_cosine(delta: f64, width: f64) -> f64 {
    (1.0 - delta.abs() / width).max(0.0)
}
