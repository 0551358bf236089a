//! Brute-force reference implementations, written independently of the
//! library code paths they check. Shared by the integration tests and the
//! acceptance suite.

#![allow(dead_code)]
// The references index explicitly on purpose: they mirror the definitions.
#![allow(clippy::needless_range_loop)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Naive cosine with the zero-norm convention.
pub fn ref_cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut ab = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for k in 0..a.len() {
        ab += a[k] * b[k];
        aa += a[k] * a[k];
        bb += b[k] * b[k];
    }
    if aa == 0.0 || bb == 0.0 {
        0.0
    } else {
        ab / (aa.sqrt() * bb.sqrt())
    }
}

/// Area under the PR curve by explicit threshold enumeration: for every
/// distinct value `t`, every cell with value `>= t` is predicted positive.
/// Thresholds without a true positive contribute no point; the curve starts
/// flat at recall 0 with the precision of its first point.
pub fn ref_average_precision(values: &[Vec<f64>], positives: &[(usize, usize)]) -> f64 {
    let mut thresholds: Vec<f64> = values.iter().flatten().copied().collect();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let is_pos = |i: usize, j: usize| positives.contains(&(i, j));
    let total = positives.len() as f64;
    let mut curve: Vec<(f64, f64)> = Vec::new(); // (recall, precision)
    for &t in &thresholds {
        let mut tp = 0usize;
        let mut predicted = 0usize;
        for (i, row) in values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v >= t {
                    predicted += 1;
                    if is_pos(i, j) {
                        tp += 1;
                    }
                }
            }
        }
        if tp > 0 {
            curve.push((tp as f64 / total, tp as f64 / predicted as f64));
        }
    }
    let mut area = 0.0;
    let mut prev = (0.0, curve[0].1);
    for &(r, p) in &curve {
        area += (r - prev.0) * (p + prev.1) / 2.0;
        prev = (r, p);
    }
    area
}

/// recall@k by counting, for every positive, the database entries ranked
/// ahead of it (higher value, or equal value and lower index).
pub fn ref_recall_at_k(values: &[Vec<f64>], positives: &[(usize, usize)], k: usize) -> f64 {
    let n_db = values.len();
    let n_q = values[0].len();
    let mut queries = 0;
    let mut hits = 0;
    for j in 0..n_q {
        let pos: Vec<usize> = (0..n_db).filter(|&i| positives.contains(&(i, j))).collect();
        if pos.is_empty() {
            continue;
        }
        queries += 1;
        let hit = pos.iter().any(|&p| {
            let ahead = (0..n_db)
                .filter(|&i| values[i][j] > values[p][j] || (values[i][j] == values[p][j] && i < p))
                .count();
            ahead < k
        });
        if hit {
            hits += 1;
        }
    }
    if queries == 0 {
        0.0
    } else {
        hits as f64 / queries as f64
    }
}

/// Mutual best matches by checking the definition cell by cell: `(i, j)`
/// qualifies when no other cell in row `i` or column `j` beats it, where an
/// equal value at a lower index counts as beating.
pub fn ref_mutual(sims: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let n_db = sims.len();
    let n_q = if n_db == 0 { 0 } else { sims[0].len() };
    let mut out = Vec::new();
    for i in 0..n_db {
        for j in 0..n_q {
            let s = sims[i][j];
            let row_ok = (0..n_q).all(|jj| jj == j || sims[i][jj] < s || (sims[i][jj] == s && jj > j));
            let col_ok = (0..n_db).all(|ii| ii == i || sims[ii][j] < s || (sims[ii][j] == s && ii > i));
            if row_ok && col_ok {
                out.push((i, j));
            }
        }
    }
    out
}

/// One image for the exhaustive reference: raw descriptors and positions.
pub struct RefImage {
    pub descriptors: Vec<Vec<f64>>,
    pub positions: Vec<(f64, f64)>,
    pub width: f64,
    pub height: f64,
}

fn ref_standardize(descs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let normed: Vec<Vec<f64>> = descs
        .iter()
        .map(|d| {
            let n = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-12 {
                d.iter().map(|x| x / n).collect()
            } else {
                d.clone()
            }
        })
        .collect();
    let dim = normed[0].len();
    let mean: Vec<f64> = (0..dim)
        .map(|k| normed.iter().map(|d| d[k]).sum::<f64>() / normed.len() as f64)
        .collect();
    normed
        .iter()
        .map(|d| d.iter().zip(&mean).map(|(a, m)| a - m).collect())
        .collect()
}

/// Mutual-match image similarity, optionally weighted by the triangular
/// positional kernel (minimum over the two axes, cell size `w/n_x`, `h/n_y`
/// of the database image).
pub fn ref_exhaustive(db: &RefImage, q: &RefImage, positional: bool, n_x: usize, n_y: usize) -> f64 {
    if db.descriptors.is_empty() || q.descriptors.is_empty() {
        return 0.0;
    }
    let a = ref_standardize(&db.descriptors);
    let b = ref_standardize(&q.descriptors);
    let sims: Vec<Vec<f64>> = a.iter().map(|x| b.iter().map(|y| ref_cosine(x, y)).collect()).collect();
    let mut total = 0.0;
    for (i, j) in ref_mutual(&sims) {
        let p = if positional {
            let (xi, yi) = db.positions[i];
            let (xj, yj) = q.positions[j];
            let px = 1.0 - (xi - xj).abs() / (db.width / n_x as f64);
            let py = 1.0 - (yi - yj).abs() / (db.height / n_y as f64);
            f64::min(px.max(0.0), py.max(0.0))
        } else {
            1.0
        };
        total += p * sims[i][j];
    }
    total / ((a.len() * b.len()) as f64).sqrt()
}

/// Random matrix whose entries come from a coarse grid so that ties occur.
pub fn random_matrix(rng: &mut ChaCha8Rng, n_db: usize, n_q: usize) -> Vec<Vec<f64>> {
    let coarse = rng.random_bool(0.5);
    (0..n_db)
        .map(|_| {
            (0..n_q)
                .map(|_| {
                    if coarse {
                        f64::from(rng.random_range(-4i32..=4)) / 4.0
                    } else {
                        rng.random_range(-1.0..1.0)
                    }
                })
                .collect()
        })
        .collect()
}

/// At least one random positive, sometimes several per query, sometimes
/// queries without any.
pub fn random_positives(rng: &mut ChaCha8Rng, n_db: usize, n_q: usize) -> Vec<(usize, usize)> {
    let mut pos = Vec::new();
    for j in 0..n_q {
        for i in 0..n_db {
            if rng.random_bool((1.5 / n_db as f64).min(1.0)) {
                pos.push((i, j));
            }
        }
    }
    if pos.is_empty() {
        pos.push((rng.random_range(0..n_db), rng.random_range(0..n_q)));
    }
    pos
}

/// Random image with `n` features of dimension `dim`.
pub fn random_image(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> RefImage {
    RefImage {
        descriptors: (0..n)
            .map(|_| (0..dim).map(|_| f64::from(rng.random_range(-1.0f32..1.0))).collect())
            .collect(),
        positions: (0..n)
            .map(|_| (rng.random_range(1.0..=640.0), rng.random_range(1.0..=480.0)))
            .collect(),
        width: 640.0,
        height: 480.0,
    }
}
