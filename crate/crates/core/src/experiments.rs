//! Experiment drivers: the capacity curve and parameter sweeps over the
//! synthetic benchmark. Every record is a pure function of its config.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregate::{center_holistic, EncoderMeta, HolisticDescriptor, LocalEncoder};
use crate::baseline::{exhaustive_similarity, Grid, WeightMode};
use crate::error::{Error, Result};
use crate::eval::{average_precision, similarity_matrix, SimilarityMatrix};
use crate::features::FeatureSet;
use crate::hypervector::{bind, cosine, HdVector, SymbolTable};
use crate::position::{make_basis_bank, Axis};
use crate::preprocess::{l2_normalize, standardize_per_image, CenteringMode};
use crate::seed;
use crate::synth::{generate, Benchmark, BenchmarkConfig};

/// Named numeric columns, one row per parameter setting.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl SweepTable {
    pub fn new(columns: &[&str]) -> Self {
        SweepTable {
            columns: columns.iter().map(|c| (*c).to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Uniformly random unit vector.
pub fn unit_gaussian(rng: &mut ChaCha8Rng, dim: usize) -> HdVector {
    let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    l2_normalize(&HdVector::from_vec_unchecked(v))
}

// unit vector with cosine `c` to unit `base`
fn correlated(base: &HdVector, c: f64, rng: &mut ChaCha8Rng) -> HdVector {
    if c >= 1.0 {
        return base.clone();
    }
    let mut noise = unit_gaussian(rng, base.dim()).into_vec();
    let along: f64 = noise.iter().zip(base.as_slice()).map(|(a, b)| a * b).sum();
    noise.iter_mut().zip(base.as_slice()).for_each(|(n, b)| *n -= along * b);
    let noise = l2_normalize(&HdVector::from_vec_unchecked(noise));
    let s = (1.0 - c * c).max(0.0).sqrt();
    HdVector::from_vec_unchecked(
        base.as_slice()
            .iter()
            .zip(noise.as_slice())
            .map(|(b, n)| c * b + s * n)
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacityConfig {
    pub dim: usize,
    /// Bundle sizes to report; the true match counts as one.
    pub counts: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Cosine between the database feature and its true match.
    pub match_cosine: f64,
    /// Cosine between the database feature and every distractor.
    pub distractor_cosine: f64,
    /// Maximum displacement of the true match, as a fraction of the image size.
    pub match_jitter: f64,
    pub n_x: usize,
    pub n_y: usize,
    pub width: f64,
    pub height: f64,
}

impl Default for CapacityConfig {
    fn default() -> Self {
        CapacityConfig {
            dim: 4096,
            counts: vec![1, 2, 4, 8, 16, 25, 50, 75, 100, 125, 150, 175, 200],
            trials: 100,
            seed: 42,
            match_cosine: 1.0,
            distractor_cosine: 0.0,
            match_jitter: 0.0,
            n_x: EncoderMeta::DEFAULT_NX,
            n_y: EncoderMeta::DEFAULT_NY,
            width: 640.0,
            height: 480.0,
        }
    }
}

const RANDOM_PAIRS_PER_TRIAL: usize = 10;

/// Similarity of one database feature to a bundle holding its true match
/// plus `n - 1` distractors, with and without pose binding, next to the
/// similarity of random descriptor pairs.
///
/// Columns: `n, with_binding_mean, with_binding_std, without_binding_mean,
/// without_binding_std, random_mean, random_std, inverse_sqrt_n`.
pub fn capacity_experiment(cfg: &CapacityConfig) -> Result<SweepTable> {
    if cfg.counts.is_empty() || cfg.counts.contains(&0) {
        return Err(Error::invalid("bundle sizes must be at least 1"));
    }
    if cfg.trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    let max_n = *cfg.counts.iter().max().expect("non-empty");
    let table = SymbolTable::new(cfg.seed, cfg.dim)?;
    let bx = make_basis_bank(&table, Axis::X, (1.0, cfg.width), cfg.n_x)?;
    let by = make_basis_bank(&table, Axis::Y, (1.0, cfg.height), cfg.n_y)?;
    let pose = |x: f64, y: f64| bind(&bx.encode(x), &by.encode(y));

    // per trial: cosines at each requested n, plus random-pair cosines
    let trials: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| -> Result<_> {
            let mut rng = seed::stream(cfg.seed, &format!("capacity/trial/{t}"));
            let position = |rng: &mut ChaCha8Rng| {
                (rng.random_range(1.0..=cfg.width), rng.random_range(1.0..=cfg.height))
            };
            let f_db = unit_gaussian(&mut rng, cfg.dim);
            let (x, y) = position(&mut rng);
            let db_bound = bind(&f_db, &pose(x, y)?)?;

            let f_q = correlated(&f_db, cfg.match_cosine, &mut rng);
            let jx = rng.random_range(-1.0..=1.0) * cfg.match_jitter * cfg.width;
            let jy = rng.random_range(-1.0..=1.0) * cfg.match_jitter * cfg.height;
            let mut with = bind(&f_q, &pose(x + jx, y + jy)?)?;
            let mut without = f_q;

            let mut with_curve = Vec::with_capacity(cfg.counts.len());
            let mut without_curve = Vec::with_capacity(cfg.counts.len());
            for n in 1..=max_n {
                if n > 1 {
                    let d = correlated(&f_db, cfg.distractor_cosine, &mut rng);
                    let (dx, dy) = position(&mut rng);
                    with.add_assign(&bind(&d, &pose(dx, dy)?)?)?;
                    without.add_assign(&d)?;
                }
                if cfg.counts.contains(&n) {
                    with_curve.push(cosine(&db_bound, &with)?);
                    without_curve.push(cosine(&f_db, &without)?);
                }
            }
            let mut pair_rng = seed::stream(cfg.seed, &format!("capacity/random/{t}"));
            let random = (0..RANDOM_PAIRS_PER_TRIAL)
                .map(|_| {
                    let a = unit_gaussian(&mut pair_rng, cfg.dim);
                    let b = unit_gaussian(&mut pair_rng, cfg.dim);
                    cosine(&a, &b)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((with_curve, without_curve, random))
        })
        .collect::<Result<_>>()?;

    let random: Vec<f64> = trials.iter().flat_map(|t| t.2.iter().copied()).collect();
    let (random_mean, random_std) = mean_std(&random);
    let mut counts = cfg.counts.clone();
    counts.sort_unstable();
    counts.dedup();
    let mut out = SweepTable::new(&[
        "n",
        "with_binding_mean",
        "with_binding_std",
        "without_binding_mean",
        "without_binding_std",
        "random_mean",
        "random_std",
        "inverse_sqrt_n",
    ]);
    for (k, &n) in counts.iter().enumerate() {
        let with: Vec<f64> = trials.iter().map(|t| t.0[k]).collect();
        let without: Vec<f64> = trials.iter().map(|t| t.1[k]).collect();
        let (wm, ws) = mean_std(&with);
        let (om, os) = mean_std(&without);
        out.push(vec![n as f64, wm, ws, om, os, random_mean, random_std, 1.0 / (n as f64).sqrt()]);
    }
    Ok(out)
}

fn in_dim(b: &Benchmark) -> usize {
    b.config.descriptor_dim
}

/// Encodes every image with one shared encoder. In set-centering mode the
/// population is the union of `db` and `queries`.
pub fn encode_sets(
    meta: &EncoderMeta,
    descriptor_dim: usize,
    db: &[FeatureSet],
    queries: &[FeatureSet],
) -> Result<(Vec<HolisticDescriptor>, Vec<HolisticDescriptor>)> {
    let mut encoder = LocalEncoder::new(meta.clone(), descriptor_dim)?;
    if meta.centering == CenteringMode::Set {
        let center = encoder.population_center(db.iter().chain(queries))?;
        encoder.set_center(center)?;
    }
    let enc = |sets: &[FeatureSet]| {
        sets.par_iter()
            .map(|fs| encoder.encode(fs))
            .collect::<Result<Vec<_>>>()
    };
    Ok((enc(db)?, enc(queries)?))
}

/// Pose-bound holistic similarities for a benchmark.
pub fn hdc_matrix(bench: &Benchmark, meta: &EncoderMeta) -> Result<SimilarityMatrix> {
    let (db, q) = encode_sets(meta, in_dim(bench), &bench.database, &bench.queries)?;
    similarity_matrix(&db, &q, "hdc")
}

/// Unbound bundles of normalized descriptors, centered over database and
/// queries together.
pub fn unbound_matrix(bench: &Benchmark, meta: &EncoderMeta) -> Result<SimilarityMatrix> {
    let encoder = LocalEncoder::new(meta.clone(), in_dim(bench))?;
    let enc = |sets: &[FeatureSet]| {
        sets.par_iter()
            .map(|fs| encoder.encode_unbound(fs))
            .collect::<Result<Vec<_>>>()
    };
    let mut all = enc(&bench.database)?;
    let n_db = all.len();
    all.extend(enc(&bench.queries)?);
    center_holistic(&mut all)?;
    let q = all.split_off(n_db);
    similarity_matrix(&all, &q, "bundle")
}

/// Exhaustive mutual-match similarities on per-image standardized raw
/// descriptors, keeping each image's `budget` best-scoring features
/// (0 keeps all).
pub fn exhaustive_matrix(
    db: &[FeatureSet],
    queries: &[FeatureSet],
    mode: WeightMode,
    grid: Grid,
    budget: usize,
) -> Result<SimilarityMatrix> {
    let prep = |sets: &[FeatureSet]| {
        sets.par_iter()
            .map(|fs| {
                let fs = if budget == 0 { fs.clone() } else { fs.select_top(budget) };
                if fs.is_empty() {
                    Ok(crate::preprocess::PreparedFeatures {
                        image_id: fs.image_id.clone(),
                        width: fs.width,
                        height: fs.height,
                        descriptors: Vec::new(),
                        positions: Vec::new(),
                        scores: Vec::new(),
                    })
                } else {
                    standardize_per_image(&fs)
                }
            })
            .collect::<Result<Vec<_>>>()
    };
    let pdb = prep(db)?;
    let pq = prep(queries)?;
    let n_q = pq.len();
    let values = (0..pdb.len() * n_q)
        .into_par_iter()
        .map(|k| exhaustive_similarity(&pdb[k / n_q], &pq[k % n_q], mode, grid))
        .collect::<Result<Vec<_>>>()?;
    SimilarityMatrix::new(
        values,
        db.iter().map(|f| f.image_id.clone()).collect(),
        queries.iter().map(|f| f.image_id.clone()).collect(),
        format!("exhaustive-{mode}"),
        format!("nx={};ny={};budget={budget}", grid.n_x, grid.n_y),
    )
}

/// Per-seed benchmark configuration and encoder seed for sweep trial `i`.
fn trial(base: &BenchmarkConfig, meta: &EncoderMeta, i: usize) -> (BenchmarkConfig, EncoderMeta) {
    let s = seed::derive(base.seed, &format!("sweep/trial/{i}"));
    let bench = BenchmarkConfig { seed: s, ..base.clone() };
    let mut m = meta.clone();
    m.seed = s;
    if m.projection_seed.is_some() {
        m.projection_seed = Some(seed::derive(s, "projection"));
    }
    (bench, m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub benchmark: BenchmarkConfig,
    /// Number of independently seeded benchmark instances.
    pub seeds: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            benchmark: BenchmarkConfig::default(),
            seeds: 10,
        }
    }
}

fn check_seeds(cfg: &SweepConfig) -> Result<()> {
    if cfg.seeds == 0 {
        return Err(Error::invalid("at least one seed is required"));
    }
    Ok(())
}

fn summary_row(lead: &[f64], aps: &[f64]) -> Vec<f64> {
    let (m, s) = mean_std(aps);
    let min = aps.iter().copied().fold(f64::INFINITY, f64::min);
    let max = aps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut row = lead.to_vec();
    row.extend([aps.len() as f64, m, s, min, max]);
    row
}

/// Average precision over hypervector dimensionalities.
///
/// Columns: `d, seeds, ap_mean, ap_std, ap_min, ap_max`.
pub fn dimension_sweep(cfg: &SweepConfig, meta: &EncoderMeta, dims: &[usize]) -> Result<SweepTable> {
    check_seeds(cfg)?;
    if let Some(&d) = dims.iter().find(|&&d| d < 16) {
        return Err(Error::invalid(format!("dimension {d} is below the minimum of 16")));
    }
    // aps[seed][dim]
    let aps: Vec<Vec<f64>> = (0..cfg.seeds)
        .into_par_iter()
        .map(|i| {
            let (bcfg, m) = trial(&cfg.benchmark, meta, i);
            let bench = generate(&bcfg)?;
            dims.iter()
                .map(|&d| {
                    let m = EncoderMeta { dim: d, ..m.clone() };
                    average_precision(&hdc_matrix(&bench, &m)?, &bench.ground_truth)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut out = SweepTable::new(&["d", "seeds", "ap_mean", "ap_std", "ap_min", "ap_max"]);
    for (k, &d) in dims.iter().enumerate() {
        let col: Vec<f64> = aps.iter().map(|r| r[k]).collect();
        out.push(summary_row(&[d as f64], &col));
    }
    Ok(out)
}

/// Average precision over every `(n_x, n_y)` combination.
///
/// Columns: `n_x, n_y, seeds, ap_mean, ap_std, ap_min, ap_max`.
pub fn grid_sweep(cfg: &SweepConfig, meta: &EncoderMeta, nxs: &[usize], nys: &[usize]) -> Result<SweepTable> {
    check_seeds(cfg)?;
    if nxs.contains(&0) || nys.contains(&0) {
        return Err(Error::invalid("grid cell counts must be at least 1"));
    }
    let cells: Vec<(usize, usize)> = nxs.iter().flat_map(|&x| nys.iter().map(move |&y| (x, y))).collect();
    let aps: Vec<Vec<f64>> = (0..cfg.seeds)
        .into_par_iter()
        .map(|i| {
            let (bcfg, m) = trial(&cfg.benchmark, meta, i);
            let bench = generate(&bcfg)?;
            cells
                .iter()
                .map(|&(n_x, n_y)| {
                    let m = EncoderMeta { n_x, n_y, ..m.clone() };
                    average_precision(&hdc_matrix(&bench, &m)?, &bench.ground_truth)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut out = SweepTable::new(&["n_x", "n_y", "seeds", "ap_mean", "ap_std", "ap_min", "ap_max"]);
    for (k, &(x, y)) in cells.iter().enumerate() {
        let col: Vec<f64> = aps.iter().map(|r| r[k]).collect();
        out.push(summary_row(&[x as f64, y as f64], &col));
    }
    Ok(out)
}

/// Average precision of the holistic vectors and of the positional
/// exhaustive comparison as the per-image feature budget grows.
///
/// Columns: `features, seeds, hdc_ap_mean, hdc_ap_std, exhaustive_ap_mean,
/// exhaustive_ap_std`.
pub fn feature_count_sweep(cfg: &SweepConfig, meta: &EncoderMeta, budgets: &[usize]) -> Result<SweepTable> {
    check_seeds(cfg)?;
    if budgets.contains(&0) {
        return Err(Error::invalid("feature budgets must be at least 1"));
    }
    let grid = Grid {
        n_x: meta.n_x,
        n_y: meta.n_y,
    };
    let aps: Vec<Vec<(f64, f64)>> = (0..cfg.seeds)
        .into_par_iter()
        .map(|i| {
            let (bcfg, m) = trial(&cfg.benchmark, meta, i);
            let bench = generate(&bcfg)?;
            budgets
                .iter()
                .map(|&budget| {
                    let m = EncoderMeta { budget, ..m.clone() };
                    let hdc = average_precision(&hdc_matrix(&bench, &m)?, &bench.ground_truth)?;
                    let ex = exhaustive_matrix(&bench.database, &bench.queries, WeightMode::Positional, grid, budget)?;
                    Ok((hdc, average_precision(&ex, &bench.ground_truth)?))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut out = SweepTable::new(&[
        "features",
        "seeds",
        "hdc_ap_mean",
        "hdc_ap_std",
        "exhaustive_ap_mean",
        "exhaustive_ap_std",
    ]);
    for (k, &b) in budgets.iter().enumerate() {
        let hdc: Vec<f64> = aps.iter().map(|r| r[k].0).collect();
        let ex: Vec<f64> = aps.iter().map(|r| r[k].1).collect();
        let (hm, hs) = mean_std(&hdc);
        let (em, es) = mean_std(&ex);
        out.push(vec![b as f64, cfg.seeds as f64, hm, hs, em, es]);
    }
    Ok(out)
}
