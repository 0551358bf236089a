//! Exhaustive pairwise comparison of local features.
//!
//! Every database feature is compared with every query feature; only mutual
//! best matches contribute. Image similarity is
//!
//! ```text
//! s = 1 / sqrt(n_db * n_q) * Σ_{(i, j) ∈ M} p_ij * sim(i, j)
//! ```
//!
//! with `p_ij = 1` (uniform) or a spatial weight that decays linearly with
//! the per-axis displacement, reaching zero at one grid cell (positional).
//! This is the accuracy reference the holistic vectors approximate, at
//! `O(n_db * n_q * d)` cost per image pair.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypervector::{check_dims, cosine_slices};
use crate::preprocess::PreparedFeatures;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    /// Database feature index.
    pub db: usize,
    /// Query feature index.
    pub query: usize,
    pub sim: f64,
    pub weight: f64,
}

/// Mutual best matches, sorted by database index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchSet {
    pub pairs: Vec<Match>,
}

impl MatchSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    #[default]
    Uniform,
    Positional,
}

impl fmt::Display for WeightMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightMode::Uniform => "uniform",
            WeightMode::Positional => "positional",
        })
    }
}

impl FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(WeightMode::Uniform),
            "positional" => Ok(WeightMode::Positional),
            other => Err(Error::invalid(format!("unknown weighting mode `{other}`"))),
        }
    }
}

/// Spatial weight in `[0, 1]` for a displacement `(dx, dy)`.
pub fn position_weight(dx: f64, dy: f64, w: f64, h: f64, n_x: usize, n_y: usize) -> f64 {
    let wx = (1.0 - dx.abs() / (w / n_x as f64)).max(0.0);
    let wy = (1.0 - dy.abs() / (h / n_y as f64)).max(0.0);
    wx.min(wy)
}

/// Row-major `n_db x n_q` cosine matrix between the two descriptor lists.
pub fn pairwise_cosines(db: &PreparedFeatures, q: &PreparedFeatures) -> Result<Vec<f64>> {
    if let (Some(a), Some(b)) = (db.descriptors.first(), q.descriptors.first()) {
        check_dims(a.dim(), b.dim())?;
    }
    let n_q = q.len();
    let mut out = vec![0.0; db.len() * n_q];
    out.par_chunks_mut(n_q.max(1))
        .zip(db.descriptors.par_iter())
        .for_each(|(row, a)| {
            for (cell, b) in row.iter_mut().zip(&q.descriptors) {
                *cell = cosine_slices(a.as_slice(), b.as_slice());
            }
        });
    Ok(out)
}

// first index wins ties
fn argmax(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Mutual best matches from a row-major `n_db x n_q` similarity matrix.
pub fn mutual_matches_from_matrix(sims: &[f64], n_db: usize, n_q: usize) -> Vec<(usize, usize, f64)> {
    if n_db == 0 || n_q == 0 {
        return Vec::new();
    }
    let best_q: Vec<usize> = (0..n_db)
        .map(|i| argmax(sims[i * n_q..(i + 1) * n_q].iter().copied()).expect("non-empty row"))
        .collect();
    let best_db: Vec<usize> = (0..n_q)
        .map(|j| argmax((0..n_db).map(|i| sims[i * n_q + j])).expect("non-empty column"))
        .collect();
    best_q
        .iter()
        .enumerate()
        .filter(|&(i, &j)| best_db[j] == i)
        .map(|(i, &j)| (i, j, sims[i * n_q + j]))
        .collect()
}

/// Mutual best matches with uniform weights.
pub fn mutual_matches(db: &PreparedFeatures, q: &PreparedFeatures) -> Result<MatchSet> {
    let sims = pairwise_cosines(db, q)?;
    Ok(MatchSet {
        pairs: mutual_matches_from_matrix(&sims, db.len(), q.len())
            .into_iter()
            .map(|(i, j, sim)| Match {
                db: i,
                query: j,
                sim,
                weight: 1.0,
            })
            .collect(),
    })
}

/// Grid parameters for positional weighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub n_x: usize,
    pub n_y: usize,
}

/// Weighted mutual matches; positional weights use the database image size.
pub fn weighted_matches(db: &PreparedFeatures, q: &PreparedFeatures, mode: WeightMode, grid: Grid) -> Result<MatchSet> {
    if grid.n_x == 0 || grid.n_y == 0 {
        return Err(Error::invalid("grid cell counts must be at least 1"));
    }
    let mut m = mutual_matches(db, q)?;
    if mode == WeightMode::Positional {
        for pair in &mut m.pairs {
            let (xi, yi) = db.positions[pair.db];
            let (xj, yj) = q.positions[pair.query];
            pair.weight = position_weight(xi - xj, yi - yj, db.width, db.height, grid.n_x, grid.n_y);
        }
    }
    Ok(m)
}

/// Image similarity from weighted mutual matches; 0 if either side is empty.
pub fn exhaustive_similarity(db: &PreparedFeatures, q: &PreparedFeatures, mode: WeightMode, grid: Grid) -> Result<f64> {
    if db.is_empty() || q.is_empty() {
        return Ok(0.0);
    }
    let m = weighted_matches(db, q, mode, grid)?;
    let total: f64 = m.pairs.iter().map(|p| p.weight * p.sim).sum();
    Ok(total / ((db.len() * q.len()) as f64).sqrt())
}
