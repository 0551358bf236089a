//! Synthetic place-recognition benchmark.
//!
//! Each place is one database image holding `features_per_place` local
//! features at uniformly random positions. Descriptors are drawn around a
//! small vocabulary of shared "visual word" prototypes, so the same kind of
//! descriptor appears in many places and only the spatial arrangement tells
//! places apart reliably. The query of a place re-observes it:
//!
//! * every descriptor is perturbed to a target cosine with its original,
//! * positions are jittered and optionally shifted sideways,
//! * a fraction of features is dropped and unrelated distractors are added.
//!
//! Query `j` depicts database place `j`.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::GroundTruth;
use crate::features::{Feature, FeatureSet};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub places: usize,
    pub features_per_place: usize,
    /// Raw descriptor dimensionality before projection.
    pub descriptor_dim: usize,
    /// Number of shared descriptor prototypes; 0 draws every descriptor independently.
    pub vocabulary: usize,
    /// Cosine between a descriptor and its prototype.
    pub word_cosine: f64,
    /// Cosine between a query descriptor and the database descriptor it re-observes.
    pub noise_cosine: f64,
    /// Maximum positional jitter as a fraction of the image size, per axis.
    pub jitter: f64,
    /// Fraction of each place's features missing from its query.
    pub dropout: f64,
    /// Unrelated features injected into each query, as a fraction of `features_per_place`.
    pub distractors: f64,
    /// Horizontal shift of every query feature as a fraction of the width.
    /// Features shifted out of the image are lost.
    pub viewpoint_shift: f64,
    pub width: f64,
    pub height: f64,
    pub seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            places: 200,
            features_per_place: 50,
            descriptor_dim: 128,
            vocabulary: 64,
            word_cosine: 0.8,
            noise_cosine: 0.6,
            jitter: 0.05,
            dropout: 0.2,
            distractors: 0.2,
            viewpoint_shift: 0.0,
            width: 640.0,
            height: 480.0,
            seed: 42,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        if self.places == 0 || self.features_per_place == 0 || self.descriptor_dim == 0 {
            return Err(Error::invalid("places, features_per_place and descriptor_dim must be positive"));
        }
        if !(self.width > 1.0 && self.height > 1.0) {
            return Err(Error::invalid("image size must exceed one pixel"));
        }
        unit("word_cosine", self.word_cosine)?;
        unit("noise_cosine", self.noise_cosine)?;
        unit("jitter", self.jitter)?;
        unit("dropout", self.dropout)?;
        unit("viewpoint_shift", self.viewpoint_shift)?;
        if !(self.distractors >= 0.0 && self.distractors.is_finite()) {
            return Err(Error::invalid("distractors must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub config: BenchmarkConfig,
    pub database: Vec<FeatureSet>,
    pub queries: Vec<FeatureSet>,
    pub ground_truth: GroundTruth,
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    v
}

/// `c * base + sqrt(1 - c^2) * noise` with `noise` a fresh unit vector
/// orthogonalized against `base` (unit), so the result is unit and has cosine
/// exactly `c` with `base`.
fn perturb(base: &[f64], c: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut noise = gaussian(rng, base.len());
    let along: f64 = noise.iter().zip(base).map(|(a, b)| a * b).sum();
    noise.iter_mut().zip(base).for_each(|(n, b)| *n -= along * b);
    let noise = unit(noise);
    let s = (1.0 - c * c).max(0.0).sqrt();
    base.iter().zip(&noise).map(|(b, n)| c * b + s * n).collect()
}

struct Generator<'a> {
    cfg: &'a BenchmarkConfig,
    vocabulary: Vec<Vec<f64>>,
}

impl Generator<'_> {
    fn descriptor(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        if self.vocabulary.is_empty() {
            return unit(gaussian(rng, self.cfg.descriptor_dim));
        }
        let word = &self.vocabulary[rng.random_range(0..self.vocabulary.len())];
        perturb(word, self.cfg.word_cosine, rng)
    }

    fn position(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        (
            rng.random_range(1.0..=self.cfg.width),
            rng.random_range(1.0..=self.cfg.height),
        )
    }

    fn feature(&self, descriptor: &[f64], (x, y): (f64, f64), rng: &mut ChaCha8Rng) -> Feature {
        Feature {
            descriptor: descriptor.iter().map(|&v| v as f32).collect(),
            x,
            y,
            score: rng.random_range(0.0..1.0),
        }
    }

    fn place(&self, index: usize) -> (FeatureSet, FeatureSet) {
        let cfg = self.cfg;
        let mut rng = seed::stream(cfg.seed, &format!("synth/place/{index}"));
        let originals: Vec<(Vec<f64>, (f64, f64))> = (0..cfg.features_per_place)
            .map(|_| (self.descriptor(&mut rng), self.position(&mut rng)))
            .collect();

        let mut db = FeatureSet::new(format!("db_{index:04}"), cfg.width, cfg.height);
        db.features = originals
            .iter()
            .map(|(d, p)| self.feature(d, *p, &mut rng))
            .collect();

        let mut kept: Vec<usize> = (0..originals.len()).collect();
        kept.shuffle(&mut rng);
        let n_drop = (cfg.dropout * originals.len() as f64).round() as usize;
        kept.truncate(originals.len() - n_drop.min(originals.len()));
        kept.sort_unstable();

        let mut q = FeatureSet::new(format!("q_{index:04}"), cfg.width, cfg.height);
        for i in kept {
            let (d, (x, y)) = &originals[i];
            let jx = rng.random_range(-1.0..=1.0) * cfg.jitter * cfg.width;
            let jy = rng.random_range(-1.0..=1.0) * cfg.jitter * cfg.height;
            let descriptor = perturb(d, cfg.noise_cosine, &mut rng);
            let x = x + cfg.viewpoint_shift * cfg.width;
            if x > cfg.width {
                continue;
            }
            let x = x + jx;
            let pos = (x.clamp(1.0, cfg.width), (y + jy).clamp(1.0, cfg.height));
            q.features.push(self.feature(&descriptor, pos, &mut rng));
        }
        let n_distract = (cfg.distractors * cfg.features_per_place as f64).round() as usize;
        for _ in 0..n_distract {
            let d = self.descriptor(&mut rng);
            let p = self.position(&mut rng);
            q.features.push(self.feature(&d, p, &mut rng));
        }
        (db, q)
    }
}

/// Generates the benchmark; a pure function of the configuration.
pub fn generate(cfg: &BenchmarkConfig) -> Result<Benchmark> {
    cfg.validate()?;
    let mut vocab_rng = seed::stream(cfg.seed, "synth/vocabulary");
    let vocabulary = (0..cfg.vocabulary)
        .map(|_| unit(gaussian(&mut vocab_rng, cfg.descriptor_dim)))
        .collect();
    let generator = Generator { cfg, vocabulary };
    let (database, queries): (Vec<_>, Vec<_>) =
        (0..cfg.places).into_par_iter().map(|i| generator.place(i)).unzip();
    Ok(Benchmark {
        config: cfg.clone(),
        database,
        queries,
        ground_truth: GroundTruth::diagonal(cfg.places),
    })
}
