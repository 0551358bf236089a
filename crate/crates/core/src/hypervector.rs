//! The vector space, random symbols, and the two operators.
//!
//! Binding is elementwise multiplication and bundling is elementwise
//! addition. For bipolar operands binding is exactly self-inverse and exactly
//! preserves cosine similarity; for real-valued operands both properties hold
//! only approximately.

use std::collections::HashMap;
use std::ops::Index;
use std::sync::{Arc, Mutex};

use rand::RngCore;

use crate::error::{Error, Result};
use crate::seed;

/// A dense `d`-dimensional real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct HdVector {
    values: Vec<f64>,
}

impl HdVector {
    /// Wraps `values`, rejecting empty input and non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("hypervector"));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(HdVector { values })
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty());
        HdVector { values }
    }

    pub fn zeros(dim: usize) -> Self {
        HdVector::from_vec_unchecked(vec![0.0; dim])
    }

    /// The neutral element of binding.
    pub fn ones(dim: usize) -> Self {
        HdVector::from_vec_unchecked(vec![1.0; dim])
    }

    /// Draws a bipolar vector from `rng`, one bit per dimension.
    pub fn random_bipolar(dim: usize, rng: &mut impl RngCore) -> Self {
        let mut values = Vec::with_capacity(dim);
        while values.len() < dim {
            let mut word = rng.next_u64();
            for _ in 0..64.min(dim - values.len()) {
                values.push(if word & 1 == 1 { 1.0 } else { -1.0 });
                word >>= 1;
            }
        }
        HdVector::from_vec_unchecked(values)
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn is_bipolar(&self) -> bool {
        self.values.iter().all(|&v| v == 1.0 || v == -1.0)
    }

    pub fn dot(&self, other: &HdVector) -> Result<f64> {
        check_dims(self.dim(), other.dim())?;
        Ok(dot(&self.values, &other.values))
    }

    pub fn norm(&self) -> f64 {
        dot(&self.values, &self.values).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// In-place `self += other`.
    pub fn add_assign(&mut self, other: &HdVector) -> Result<()> {
        check_dims(self.dim(), other.dim())?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }

    /// In-place `self -= other`.
    pub fn sub_assign(&mut self, other: &HdVector) -> Result<()> {
        check_dims(self.dim(), other.dim())?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a -= b;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    pub fn divide(&mut self, divisor: f64) {
        for v in &mut self.values {
            *v /= divisor;
        }
    }
}

impl Index<usize> for HdVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl TryFrom<Vec<f64>> for HdVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        HdVector::new(values)
    }
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators let the compiler vectorize without fast-math
    let mut acc = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let (tail_a, tail_b) = (chunks_a.remainder(), chunks_b.remainder());
    for (x, y) in chunks_a.zip(chunks_b) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in tail_a.iter().zip(tail_b) {
        sum += x * y;
    }
    sum
}

/// Binding: `out[i] = x[i] * y[i]`.
pub fn bind(x: &HdVector, y: &HdVector) -> Result<HdVector> {
    check_dims(x.dim(), y.dim())?;
    Ok(HdVector::from_vec_unchecked(
        x.values.iter().zip(&y.values).map(|(a, b)| a * b).collect(),
    ))
}

/// Bundling: `out[i] = sum_j vs[j][i]`. The result is not renormalized.
pub fn bundle<'a, I>(vs: I) -> Result<HdVector>
where
    I: IntoIterator<Item = &'a HdVector>,
{
    let mut iter = vs.into_iter();
    let mut acc = iter.next().ok_or(Error::Empty("bundle input"))?.clone();
    for v in iter {
        acc.add_assign(v)?;
    }
    Ok(acc)
}

/// Normalized dot product. Zero-norm operands give 0.
pub fn cosine(x: &HdVector, y: &HdVector) -> Result<f64> {
    check_dims(x.dim(), y.dim())?;
    Ok(cosine_slices(&x.values, &y.values))
}

pub(crate) fn cosine_slices(x: &[f64], y: &[f64]) -> f64 {
    let nx = dot(x, x);
    let ny = dot(y, y);
    if nx == 0.0 || ny == 0.0 {
        return 0.0;
    }
    (dot(x, y) / (nx * ny).sqrt()).clamp(-1.0, 1.0)
}

/// Named random bipolar symbols under one master seed.
///
/// A symbol's vector depends only on the master seed, the dimensionality and
/// its name, never on lookup order. Lookups are memoized behind a mutex, so a
/// shared table can be used from parallel code.
#[derive(Debug)]
pub struct SymbolTable {
    master_seed: u64,
    dim: usize,
    entries: Mutex<HashMap<String, Arc<HdVector>>>,
}

impl SymbolTable {
    pub fn new(master_seed: u64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimensionality must be at least 1"));
        }
        Ok(SymbolTable {
            master_seed,
            dim,
            entries: Mutex::new(HashMap::new()),
        })
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Returns the symbol called `name`, generating it on first use.
    pub fn symbol(&self, name: &str) -> Result<Arc<HdVector>> {
        if name.is_empty() {
            return Err(Error::Empty("symbol name"));
        }
        let mut entries = self.entries.lock().expect("symbol table poisoned");
        if let Some(v) = entries.get(name) {
            return Ok(Arc::clone(v));
        }
        let mut rng = seed::stream(self.master_seed, &format!("symbol/{}/{name}", self.dim));
        let v = Arc::new(HdVector::random_bipolar(self.dim, &mut rng));
        entries.insert(name.to_owned(), Arc::clone(&v));
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("symbol table poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Clone for SymbolTable {
    fn clone(&self) -> Self {
        SymbolTable {
            master_seed: self.master_seed,
            dim: self.dim,
            entries: Mutex::new(self.entries.lock().expect("symbol table poisoned").clone()),
        }
    }
}

/// Free-function form of [`SymbolTable::symbol`].
pub fn random_symbol(table: &SymbolTable, name: &str) -> Result<Arc<HdVector>> {
    table.symbol(name)
}
