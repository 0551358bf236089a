//! Round trips and failure modes of the on-disk formats.

use hdagg::io::*;
use hdagg::synth::{generate, BenchmarkConfig};
use hdagg::{Error, EncoderMeta, Feature, FeatureSet, GroundTruth, HdVector, HolisticDescriptor, LocalEncoder};
use hdagg::aggregate::DescriptorKind;
use hdagg::experiments::{unit_gaussian, SweepTable};
use hdagg::eval::SimilarityMatrix;
use hdagg::preprocess::CenteringMode;

fn two_features() -> FeatureSet {
    let mut fs = FeatureSet::new("img_1", 640.0, 480.0);
    fs.features = vec![
        Feature { descriptor: vec![0.1, -0.25, 1.0 / 3.0], x: 10.5, y: 20.0, score: 0.9 },
        Feature { descriptor: vec![1e-7, 2.0, -3.5], x: 639.0, y: 1.0, score: 0.0 },
    ];
    fs
}

fn f32_exact(fs: &FeatureSet) -> FeatureSet {
    let mut out = fs.clone();
    for f in &mut out.features {
        f.x = f64::from(f.x as f32);
        f.y = f64::from(f.y as f32);
        f.score = f64::from(f.score as f32);
    }
    out
}

#[test]
fn feature_files_round_trip_in_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let fs = two_features();
    let text = dir.path().join("a.feat");
    write_feature_text(&text, &fs).unwrap();
    let back = read_feature_file(&text).unwrap();
    assert_eq!(back, fs);
    assert_eq!(back.len(), 2);

    let bin = dir.path().join("a.featbin");
    write_feature_binary(&bin, &fs).unwrap();
    assert_eq!(read_feature_file(&bin).unwrap(), f32_exact(&fs));
}

#[test]
fn feature_count_mismatch_is_reported() {
    let text = "FEAT v1\nimage x\nsize 10 10\ncount 3 dim 2\n1 1 1 0.5 0.5\n2 2 1 0.1 0.2\n";
    let err = parse_feature_text(text, "x.feat".as_ref()).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains('3') && msg.contains('2'), "{msg}");
}

#[test]
fn malformed_rows_name_their_line() {
    let cases = [
        ("FEAT v1\nimage x\nsize 10 10\ncount 1 dim 2\n1 1 1 0.5\n", 5),
        ("FEAT v1\nimage x\nsize 10 10\ncount 1 dim 2\n1 1 1 0.5 NaN\n", 5),
        ("FEAT v2\n", 1),
        ("FEAT v1\nimage x\nsize ten 10\n", 3),
    ];
    for (text, line) in cases {
        match parse_feature_text(text, "x.feat".as_ref()) {
            Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
            other => panic!("expected a parse error for {text:?}, got {other:?}"),
        }
    }
}

fn encoded(dim: usize, n: usize) -> Vec<HolisticDescriptor> {
    let cfg = BenchmarkConfig { places: n, features_per_place: 8, descriptor_dim: 16, ..BenchmarkConfig::default() };
    let bench = generate(&cfg).unwrap();
    let meta = EncoderMeta { dim, ..EncoderMeta::new(5) };
    let enc = LocalEncoder::new(meta, 16).unwrap();
    bench.database.iter().map(|fs| enc.encode(fs).unwrap()).collect()
}

#[test]
fn holistic_files_round_trip_at_f32_precision() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("db.hv");
    let hs = encoded(256, 4);
    write_holistic(&path, &hs).unwrap();
    let back = read_holistic(&path).unwrap();
    assert_eq!(back.len(), hs.len());
    for (a, b) in hs.iter().zip(&back) {
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.id, b.id);
        for (x, y) in a.vector.as_slice().iter().zip(b.vector.as_slice()) {
            assert_eq!(*x as f32, *y as f32);
        }
    }
    // second write of the read-back data is byte-identical
    let again = dir.path().join("again.hv");
    write_holistic(&again, &back).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn dimension_mismatch_is_rejected_on_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("small.hv");
    write_holistic(&path, &encoded(2048, 2)).unwrap();
    let session = EncoderMeta::new(5);
    assert_eq!(session.dim, 4096);
    assert!(matches!(read_holistic_expect(&path, &session), Err(Error::FingerprintMismatch { .. })));
    let ok = EncoderMeta { dim: 2048, ..session };
    assert_eq!(read_holistic_expect(&path, &ok).unwrap().len(), 2);
}

#[test]
fn mixed_fingerprints_cannot_share_a_file() {
    let mut hs = encoded(256, 2);
    hs[1].meta.centering = CenteringMode::Set;
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(write_holistic(dir.path().join("x.hv"), &hs), Err(Error::FingerprintMismatch { .. })));
}

#[test]
fn truncated_and_foreign_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("db.hv");
    write_holistic(&path, &encoded(128, 2)).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    let cut = dir.path().join("cut.hv");
    std::fs::write(&cut, &bytes[..bytes.len() - 3]).unwrap();
    assert!(read_holistic(&cut).is_err());
    let mut bumped = bytes.clone();
    bumped[8] = 9; // version
    let v = dir.path().join("v.hv");
    std::fs::write(&v, &bumped).unwrap();
    assert!(read_holistic(&v).unwrap_err().to_string().contains("version"));
    let junk = dir.path().join("junk.hv");
    std::fs::write(&junk, b"hello").unwrap();
    assert!(read_holistic(&junk).is_err());
}

#[test]
fn thousand_descriptors_keep_their_pairwise_cosines() {
    let d = 512;
    let mut rng = hdagg::seed::stream(1000, "file-cosines");
    let meta = EncoderMeta { dim: d, ..EncoderMeta::new(1) };
    let hs: Vec<HolisticDescriptor> = (0..1000)
        .map(|i| {
            let mut v = unit_gaussian(&mut rng, d);
            v.scale(10.0 + i as f64);
            HolisticDescriptor { id: format!("h{i}"), vector: v, kind: DescriptorKind::LocalPose, meta: meta.clone(), degenerate: false }
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("many.hv");
    write_holistic(&path, &hs).unwrap();
    let back = read_holistic(&path).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..hs.len() {
        for j in i + 1..hs.len() {
            let before = hdagg::cosine(&hs[i].vector, &hs[j].vector).unwrap();
            let after = hdagg::cosine(&back[i].vector, &back[j].vector).unwrap();
            worst = worst.max((before - after).abs());
        }
    }
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn similarity_and_ground_truth_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = SimilarityMatrix::new(
        vec![0.5, -0.25, 1.0 / 3.0, 0.0, 1e-17, 1.0],
        vec!["db_0".into(), "db_1".into()],
        vec!["q_0".into(), "q_1".into(), "q_2".into()],
        "hdc",
        "kind=local_pose;d=8",
    )
    .unwrap();
    let path = dir.path().join("sim.csv");
    write_similarity_csv(&path, &m).unwrap();
    assert_eq!(read_similarity_csv(&path).unwrap(), m);

    let gt = GroundTruth::new(2, 3, [(0, 0), (1, 2)]).unwrap();
    let gpath = dir.path().join("gt.csv");
    write_ground_truth_csv(&gpath, &gt).unwrap();
    assert_eq!(read_ground_truth_csv(&gpath, 2, 3).unwrap(), gt);
    assert!(read_ground_truth_csv(&gpath, 1, 3).is_err());
}

#[test]
fn sweep_csv_carries_metadata() {
    let mut t = SweepTable::new(&["d", "ap_mean"]);
    t.push(vec![64.0, 0.5]);
    let text = format_sweep_csv(&t, &[("fingerprint", "seed=42")]);
    assert!(text.starts_with("# fingerprint=seed=42\n"));
    assert!(text.contains("d,ap_mean\n64,0.5"));
}

#[test]
fn zero_vectors_survive_as_degenerate() {
    let meta = EncoderMeta { dim: 16, ..EncoderMeta::new(2) };
    let h = HolisticDescriptor { id: "empty".into(), vector: HdVector::zeros(16), kind: DescriptorKind::LocalPose, meta, degenerate: true };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("z.hv");
    write_holistic(&path, std::slice::from_ref(&h)).unwrap();
    assert_eq!(read_holistic(&path).unwrap(), vec![h]);
}
