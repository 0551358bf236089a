//! Similarity matrices and place-recognition metrics.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::aggregate::HolisticDescriptor;
use crate::error::{Error, Result};
use crate::hypervector::cosine_slices;

/// Database-by-query similarity values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n_db: usize,
    n_q: usize,
    values: Vec<f64>,
    pub db_ids: Vec<String>,
    pub q_ids: Vec<String>,
    /// Free-form tag for the method that produced the values.
    pub method: String,
    /// Encoder fingerprint of the compared descriptors.
    pub fingerprint: String,
}

impl SimilarityMatrix {
    pub fn new(
        values: Vec<f64>,
        db_ids: Vec<String>,
        q_ids: Vec<String>,
        method: impl Into<String>,
        fingerprint: impl Into<String>,
    ) -> Result<Self> {
        let (n_db, n_q) = (db_ids.len(), q_ids.len());
        if values.len() != n_db * n_q {
            return Err(Error::invalid(format!(
                "{} values for a {n_db}x{n_q} matrix",
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(SimilarityMatrix {
            n_db,
            n_q,
            values,
            db_ids,
            q_ids,
            method: method.into(),
            fingerprint: fingerprint.into(),
        })
    }

    /// Unlabelled matrix with index ids, mostly for tests and experiments.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_db = rows.len();
        let n_q = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_q) {
            return Err(Error::invalid("ragged similarity rows"));
        }
        SimilarityMatrix::new(
            rows.concat(),
            (0..n_db).map(|i| i.to_string()).collect(),
            (0..n_q).map(|j| j.to_string()).collect(),
            "",
            "",
        )
    }

    pub fn n_db(&self) -> usize {
        self.n_db
    }

    pub fn n_q(&self) -> usize {
        self.n_q
    }

    pub fn get(&self, db: usize, q: usize) -> f64 {
        self.values[db * self.n_q + q]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, db: usize) -> &[f64] {
        &self.values[db * self.n_q..(db + 1) * self.n_q]
    }
}

/// Cosine between every database and query descriptor.
pub fn similarity_matrix(
    db: &[HolisticDescriptor],
    q: &[HolisticDescriptor],
    method: &str,
) -> Result<SimilarityMatrix> {
    let reference = db
        .first()
        .or(q.first())
        .ok_or(Error::Empty("descriptor list"))?;
    for h in db.iter().chain(q) {
        reference.check_compatible(h)?;
    }
    let n_q = q.len();
    let mut values = vec![0.0; db.len() * n_q];
    values
        .par_chunks_mut(n_q.max(1))
        .zip(db.par_iter())
        .for_each(|(row, a)| {
            for (cell, b) in row.iter_mut().zip(q) {
                *cell = cosine_slices(a.vector.as_slice(), b.vector.as_slice());
            }
        });
    SimilarityMatrix::new(
        values,
        db.iter().map(|h| h.id.clone()).collect(),
        q.iter().map(|h| h.id.clone()).collect(),
        method,
        reference.fingerprint(),
    )
}

/// Same-place pairs `(db_index, query_index)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    n_db: usize,
    n_q: usize,
    positives: BTreeSet<(usize, usize)>,
}

impl GroundTruth {
    pub fn new(n_db: usize, n_q: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let positives: BTreeSet<_> = pairs.into_iter().collect();
        if let Some(&(i, j)) = positives.iter().find(|&&(i, j)| i >= n_db || j >= n_q) {
            return Err(Error::invalid(format!(
                "ground-truth pair ({i}, {j}) outside a {n_db}x{n_q} matrix"
            )));
        }
        Ok(GroundTruth { n_db, n_q, positives })
    }

    /// Query `j` matches database entry `j`.
    pub fn diagonal(n: usize) -> Self {
        GroundTruth {
            n_db: n,
            n_q: n,
            positives: (0..n).map(|i| (i, i)).collect(),
        }
    }

    pub fn is_positive(&self, db: usize, q: usize) -> bool {
        self.positives.contains(&(db, q))
    }

    pub fn positives(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.positives.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.positives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positives.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_db, self.n_q)
    }

    fn check_against(&self, m: &SimilarityMatrix) -> Result<()> {
        if (self.n_db, self.n_q) != (m.n_db, m.n_q) {
            return Err(Error::invalid(format!(
                "ground truth is {}x{} but the matrix is {}x{}",
                self.n_db, self.n_q, m.n_db, m.n_q
            )));
        }
        Ok(())
    }
}

/// One point of the threshold-swept precision-recall curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Precision and recall at every distinct similarity value, from the
/// highest threshold down. Thresholds that accept no positive are omitted.
pub fn pr_curve(m: &SimilarityMatrix, gt: &GroundTruth) -> Result<Vec<PrPoint>> {
    gt.check_against(m)?;
    if gt.is_empty() {
        return Err(Error::Empty("ground truth"));
    }
    let mut scored: Vec<(f64, bool)> = (0..m.n_db)
        .flat_map(|i| (0..m.n_q).map(move |j| (i, j)))
        .map(|(i, j)| (m.get(i, j), gt.is_positive(i, j)))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let total_pos = gt.len() as f64;
    let mut points = Vec::new();
    let (mut tp, mut predicted) = (0usize, 0usize);
    let mut k = 0;
    while k < scored.len() {
        let threshold = scored[k].0;
        while k < scored.len() && scored[k].0 == threshold {
            predicted += 1;
            tp += usize::from(scored[k].1);
            k += 1;
        }
        if tp > 0 {
            points.push(PrPoint {
                threshold,
                precision: tp as f64 / predicted as f64,
                recall: tp as f64 / total_pos,
            });
        }
    }
    Ok(points)
}

/// Area under the precision-recall curve.
///
/// Trapezoidal over recall; the curve is extended flat from its first point
/// to recall 0.
pub fn average_precision(m: &SimilarityMatrix, gt: &GroundTruth) -> Result<f64> {
    Ok(area_under_pr(&pr_curve(m, gt)?))
}

pub fn area_under_pr(points: &[PrPoint]) -> f64 {
    let Some(first) = points.first() else {
        return 0.0;
    };
    let mut area = first.recall * first.precision;
    for w in points.windows(2) {
        area += (w[1].recall - w[0].recall) * (w[0].precision + w[1].precision) / 2.0;
    }
    area.clamp(0.0, 1.0)
}

/// Fraction of queries (with at least one positive) whose `k` most similar
/// database entries contain a positive. Equal similarities rank the lower
/// database index first.
pub fn recall_at_k(m: &SimilarityMatrix, gt: &GroundTruth, ks: &[usize]) -> Result<Vec<(usize, f64)>> {
    gt.check_against(m)?;
    if ks.contains(&0) {
        return Err(Error::invalid("k must be at least 1"));
    }
    // rank of the best-ranked positive for every query that has one
    let mut first_hit = Vec::new();
    for j in 0..m.n_q {
        if !(0..m.n_db).any(|i| gt.is_positive(i, j)) {
            continue;
        }
        let mut order: Vec<usize> = (0..m.n_db).collect();
        order.sort_by(|&a, &b| m.get(b, j).total_cmp(&m.get(a, j)).then(a.cmp(&b)));
        let rank = order.iter().position(|&i| gt.is_positive(i, j)).expect("query has a positive");
        first_hit.push(rank);
    }
    Ok(ks
        .iter()
        .map(|&k| {
            let recall = if first_hit.is_empty() {
                0.0
            } else {
                first_hit.iter().filter(|&&r| r < k).count() as f64 / first_hit.len() as f64
            };
            (k, recall)
        })
        .collect())
}

/// Average precision plus recall@k for one matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub average_precision: f64,
    pub recall_at_k: Vec<(usize, f64)>,
    pub pr_curve: Vec<PrPoint>,
}

pub fn evaluate(m: &SimilarityMatrix, gt: &GroundTruth, ks: &[usize]) -> Result<EvalReport> {
    let pr_curve = pr_curve(m, gt)?;
    Ok(EvalReport {
        average_precision: area_under_pr(&pr_curve),
        recall_at_k: recall_at_k(m, gt, ks)?,
        pr_curve,
    })
}

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut k = 0;
    while k < order.len() {
        let mut end = k;
        while end + 1 < order.len() && xs[order[end + 1]] == xs[order[k]] {
            end += 1;
        }
        let rank = (k + end) as f64 / 2.0 + 1.0;
        for &i in &order[k..=end] {
            ranks[i] = rank;
        }
        k = end + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::invalid("rank correlation needs at least two samples"));
    }
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return Ok(0.0);
    }
    Ok(cov / (va * vb).sqrt())
}
