use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hdagg::aggregate::center_holistic;
use hdagg::experiments::{
    capacity_experiment, dimension_sweep, exhaustive_matrix, feature_count_sweep, grid_sweep, SweepTable,
};
use hdagg::eval::evaluate;
use hdagg::io;
use hdagg::synth::{generate, BenchmarkConfig};
use hdagg::{
    similarity_matrix, CenteringMode, FeatureSet, Grid, HolisticDescriptor, LocalEncoder, RunConfig,
    WeightMode,
};

use crate::args::{BenchArgs, Cli, Command, Global, SweepArgs, SynthArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] hdagg::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Configuration file (or defaults) with command-line overrides applied.
pub fn resolve_config(g: &Global) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(path) => RunConfig::load(path).map_err(|e| usage(e.to_string()))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = g.seed {
        cfg.seed = seed;
        cfg.benchmark.seed = seed;
        cfg.capacity.seed = seed;
    }
    if let Some(dim) = g.dim {
        cfg.dim = dim;
        cfg.capacity.dim = dim;
    }
    if let Some(n) = g.nx {
        cfg.n_x = n;
        cfg.capacity.n_x = n;
    }
    if let Some(n) = g.ny {
        cfg.n_y = n;
        cfg.capacity.n_y = n;
    }
    if let Some(b) = g.budget {
        cfg.budget = b;
    }
    if let Some(c) = g.centering {
        cfg.centering = c.into();
    }
    if g.no_project {
        cfg.project = false;
    }
    if let Some(ks) = &g.k {
        cfg.ks = ks.clone();
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn apply_bench(b: &mut BenchmarkConfig, args: &BenchArgs) -> Result<()> {
    if let Some(s) = args.shift {
        b.viewpoint_shift = s;
    }
    if let Some(c) = args.noise_cosine {
        b.noise_cosine = c;
    }
    b.validate().map_err(|e| usage(e.to_string()))
}

fn out_path(g: &Global) -> Result<&Path> {
    g.out.as_deref().ok_or_else(|| usage("--out is required for this command"))
}

/// Feature sets from one file or every file of a directory (sorted by name).
fn load_features(path: &Path) -> Result<Vec<FeatureSet>> {
    let files: Vec<PathBuf> = if path.is_dir() { io::list_files(path)? } else { vec![path.to_path_buf()] };
    if files.is_empty() {
        return Err(hdagg::Error::Empty("feature directory").into());
    }
    Ok(files.iter().map(io::read_feature_file).collect::<hdagg::Result<_>>()?)
}

fn descriptor_dim(sets: &[FeatureSet]) -> Result<usize> {
    let mut dim = None;
    for fs in sets {
        match (dim, fs.descriptor_dim()) {
            (_, None) => {}
            (None, d) => dim = d,
            (Some(a), Some(b)) if a != b => {
                return Err(hdagg::Error::DimensionMismatch { expected: a, found: b }.into());
            }
            _ => {}
        }
    }
    dim.ok_or_else(|| hdagg::Error::Empty("features in every input file").into())
}

pub fn run(cli: &Cli, stdout: &mut String) -> Result<()> {
    let g = &cli.global;
    let cfg = resolve_config(g)?;
    match &cli.command {
        Command::Encode { db, query, unbound } => encode(g, &cfg, db, query.as_deref(), *unbound, stdout),
        Command::Similarity { db, query } => similarity(g, db, query, stdout),
        Command::Evaluate { sim, gt, db, query } => {
            evaluate_cmd(g, &cfg, sim, gt, db.as_deref(), query.as_deref(), stdout)
        }
        Command::Baseline { db, query } => baseline(g, &cfg, db, query, stdout),
        Command::Synth(args) => synth(g, &cfg, args, stdout),
        Command::Capacity { trials, counts } => {
            let mut c = cfg.capacity.clone();
            if let Some(t) = trials {
                c.trials = *t;
            }
            if let Some(n) = counts {
                c.counts = n.clone();
            }
            let table = capacity_experiment(&c)?;
            let meta = format!(
                "dim={};seed={};trials={};nx={};ny={};match_cosine={};distractor_cosine={};match_jitter={}",
                c.dim, c.seed, c.trials, c.n_x, c.n_y, c.match_cosine, c.distractor_cosine, c.match_jitter
            );
            write_table(g, &table, "capacity", &meta, stdout)
        }
        Command::SweepDims { dims, sweep } => {
            let (scfg, fp) = sweep_setup(&cfg, sweep)?;
            let table = dimension_sweep(&scfg, &cfg.encoder_meta(), dims)?;
            write_table(g, &table, "sweep-dims", &fp, stdout)
        }
        Command::SweepGrid { nx_values, ny_values, sweep } => {
            let (scfg, fp) = sweep_setup(&cfg, sweep)?;
            let table = grid_sweep(&scfg, &cfg.encoder_meta(), nx_values, ny_values)?;
            write_table(g, &table, "sweep-grid", &fp, stdout)
        }
        Command::SweepFeatures { budgets, sweep } => {
            let (scfg, fp) = sweep_setup(&cfg, sweep)?;
            let table = feature_count_sweep(&scfg, &cfg.encoder_meta(), budgets)?;
            write_table(g, &table, "sweep-features", &fp, stdout)
        }
    }
}

fn encode(
    g: &Global,
    cfg: &RunConfig,
    db: &Path,
    query: Option<&Path>,
    unbound: bool,
    stdout: &mut String,
) -> Result<()> {
    let out = out_path(g)?;
    let db_sets = load_features(db)?;
    let q_sets = match query {
        Some(q) => load_features(q)?,
        None => Vec::new(),
    };
    let all: Vec<FeatureSet> = db_sets.iter().chain(&q_sets).cloned().collect();
    let meta = cfg.encoder_meta();
    let mut encoder = LocalEncoder::new(meta.clone(), descriptor_dim(&all)?)?;
    let mut encoded: Vec<HolisticDescriptor> = if unbound {
        let mut hs = all.iter().map(|fs| encoder.encode_unbound(fs)).collect::<hdagg::Result<Vec<_>>>()?;
        center_holistic(&mut hs)?;
        hs
    } else {
        if meta.centering == CenteringMode::Set {
            let center = encoder.population_center(&all)?;
            encoder.set_center(center)?;
        }
        all.iter().map(|fs| encoder.encode(fs)).collect::<hdagg::Result<_>>()?
    };
    let q_encoded = encoded.split_off(db_sets.len());
    io::write_holistic(out.join("db.hv"), &encoded)?;
    let _ = writeln!(stdout, "wrote {} database descriptors to {}", encoded.len(), out.join("db.hv").display());
    if !q_encoded.is_empty() {
        io::write_holistic(out.join("query.hv"), &q_encoded)?;
        let _ = writeln!(stdout, "wrote {} query descriptors to {}", q_encoded.len(), out.join("query.hv").display());
    }
    Ok(())
}

fn similarity(g: &Global, db: &Path, query: &Path, stdout: &mut String) -> Result<()> {
    let out = out_path(g)?;
    let d = io::read_holistic(db)?;
    let q = io::read_holistic(query)?;
    let method = d.first().map_or("hdc", |h| h.kind.as_str());
    let m = similarity_matrix(&d, &q, method)?;
    io::write_similarity_csv(out, &m)?;
    let _ = writeln!(stdout, "wrote {}x{} {} similarities to {}", m.n_db(), m.n_q(), method, out.display());
    Ok(())
}

fn check_provenance(m: &hdagg::SimilarityMatrix, path: &Path, ids: &[String]) -> Result<()> {
    let hs = io::read_holistic(path)?;
    let found: Vec<String> = hs.iter().map(|h| h.id.clone()).collect();
    if let Some(h) = hs.first() {
        if h.fingerprint() != m.fingerprint {
            return Err(hdagg::Error::FingerprintMismatch {
                left: m.fingerprint.clone(),
                right: h.fingerprint(),
            }
            .into());
        }
    }
    if found != ids {
        return Err(hdagg::Error::Format {
            path: path.to_path_buf(),
            message: "descriptor ids differ from the similarity matrix".into(),
        }
        .into());
    }
    Ok(())
}

fn evaluate_cmd(
    g: &Global,
    cfg: &RunConfig,
    sim: &Path,
    gt: &Path,
    db: Option<&Path>,
    query: Option<&Path>,
    stdout: &mut String,
) -> Result<()> {
    let m = io::read_similarity_csv(sim)?;
    if let Some(db) = db {
        check_provenance(&m, db, &m.db_ids)?;
    }
    if let Some(q) = query {
        check_provenance(&m, q, &m.q_ids)?;
    }
    let truth = io::read_ground_truth_csv(gt, m.n_db(), m.n_q())?;
    let report = evaluate(&m, &truth, &cfg.ks)?;
    let _ = writeln!(stdout, "method {}", m.method);
    let _ = writeln!(stdout, "average_precision {}", report.average_precision);
    for (k, r) in &report.recall_at_k {
        let _ = writeln!(stdout, "recall@{k} {r}");
    }
    if let Some(out) = &g.out {
        io::write_pr_curve_csv(out, &report.pr_curve, &m.fingerprint)?;
        let _ = writeln!(stdout, "wrote {} precision-recall points to {}", report.pr_curve.len(), out.display());
    }
    Ok(())
}

fn baseline(g: &Global, cfg: &RunConfig, db: &Path, query: &Path, stdout: &mut String) -> Result<()> {
    let out = out_path(g)?;
    let d = load_features(db)?;
    let q = load_features(query)?;
    let mode: WeightMode = g.mode.into();
    let grid = Grid { n_x: cfg.n_x, n_y: cfg.n_y };
    let m = exhaustive_matrix(&d, &q, mode, grid, cfg.budget)?;
    io::write_similarity_csv(out, &m)?;
    let _ = writeln!(stdout, "wrote {}x{} {} similarities to {}", m.n_db(), m.n_q(), m.method, out.display());
    Ok(())
}

fn synth(g: &Global, cfg: &RunConfig, args: &SynthArgs, stdout: &mut String) -> Result<()> {
    let out = out_path(g)?;
    let mut cfg = cfg.clone();
    if let Some(p) = args.places {
        cfg.benchmark.places = p;
    }
    if let Some(f) = args.features {
        cfg.benchmark.features_per_place = f;
    }
    apply_bench(&mut cfg.benchmark, &args.bench)?;
    let bench = generate(&cfg.benchmark)?;
    type Writer = fn(&Path, &FeatureSet) -> hdagg::Result<()>;
    let (ext, write): (&str, Writer) = if args.binary {
        ("featbin", |p, fs| io::write_feature_binary(p, fs))
    } else {
        ("feat", |p, fs| io::write_feature_text(p, fs))
    };
    for (dir, sets) in [("db", &bench.database), ("query", &bench.queries)] {
        for fs in sets {
            write(&out.join(dir).join(format!("{}.{ext}", fs.image_id)), fs)?;
        }
    }
    io::write_ground_truth_csv(out.join("ground_truth.csv"), &bench.ground_truth)?;
    std::fs::write(out.join("config.toml"), cfg.to_toml()).map_err(|source| hdagg::Error::Io {
        path: out.join("config.toml"),
        source,
    })?;
    let _ = writeln!(
        stdout,
        "wrote {} places ({} features each) to {}",
        cfg.benchmark.places,
        cfg.benchmark.features_per_place,
        out.display()
    );
    Ok(())
}

fn sweep_setup(cfg: &RunConfig, args: &SweepArgs) -> Result<(hdagg::experiments::SweepConfig, String)> {
    let mut s = cfg.sweep_config();
    if let Some(n) = args.seeds {
        s.seeds = n;
    }
    if let Some(p) = args.places {
        s.benchmark.places = p;
    }
    apply_bench(&mut s.benchmark, &args.bench)?;
    let b = &s.benchmark;
    let fp = format!(
        "{};seeds={};places={};features={};noise_cosine={};jitter={};dropout={};distractors={};shift={};bench_seed={}",
        cfg.encoder_meta().fingerprint(),
        s.seeds,
        b.places,
        b.features_per_place,
        b.noise_cosine,
        b.jitter,
        b.dropout,
        b.distractors,
        b.viewpoint_shift,
        b.seed
    );
    Ok((s, fp))
}

fn write_table(g: &Global, table: &SweepTable, experiment: &str, fingerprint: &str, stdout: &mut String) -> Result<()> {
    let out = out_path(g)?;
    io::write_sweep_csv(out, table, &[("experiment", experiment), ("fingerprint", fingerprint)])?;
    let _ = writeln!(stdout, "wrote {} {experiment} rows to {}", table.rows.len(), out.display());
    Ok(())
}
