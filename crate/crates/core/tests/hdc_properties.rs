//! Algebraic identities and Monte Carlo statistics of the vector space,
//! the position encoding and the aggregation operators.

mod support;

use hdagg::aggregate::bind_and_bundle;
use hdagg::experiments::{mean_std, unit_gaussian};
use hdagg::preprocess::{mean, ProjectionSpec};
use hdagg::*;
use rand::Rng;
use support::ref_cosine;

fn bipolar(seed: u64, label: &str, d: usize) -> HdVector {
    HdVector::random_bipolar(d, &mut hdagg::seed::stream(seed, label))
}

fn real(seed: u64, label: &str, d: usize) -> HdVector {
    let mut rng = hdagg::seed::stream(seed, label);
    HdVector::new((0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

#[test]
fn algebra_is_exact_on_seeded_instances() {
    for d in [64, 4096] {
        for s in 0..100 {
            let b = bipolar(s, "b", d);
            let x = bipolar(s, "x", d);
            let (a, c) = (real(s, "a", d), real(s, "c", d));
            assert_eq!(bind(&b, &b).unwrap(), HdVector::ones(d));
            assert_eq!(bind(&HdVector::ones(d), &a).unwrap(), a);
            let lhs = bind(&x, &bundle([&a, &c]).unwrap()).unwrap();
            let rhs = bundle([&bind(&x, &a).unwrap(), &bind(&x, &c).unwrap()]).unwrap();
            for (l, r) in lhs.as_slice().iter().zip(rhs.as_slice()) {
                assert!((l - r).abs() < 1e-12);
            }
            let before = cosine(&a, &c).unwrap();
            let after = cosine(&bind(&x, &a).unwrap(), &bind(&x, &c).unwrap()).unwrap();
            assert!((before - after).abs() < 1e-12);
        }
    }
}

#[test]
fn fresh_symbols_are_quasi_orthogonal() {
    let d = 4096;
    let table = SymbolTable::new(2024, d).unwrap();
    let cos: Vec<f64> = (0..1000)
        .map(|i| {
            let a = table.symbol(&format!("a{i}")).unwrap();
            let b = table.symbol(&format!("b{i}")).unwrap();
            cosine(&a, &b).unwrap()
        })
        .collect();
    let (m, s) = mean_std(&cos);
    let abs_mean = cos.iter().map(|c| c.abs()).sum::<f64>() / cos.len() as f64;
    assert!(m.abs() <= 0.005, "mean {m}");
    assert!((0.012..=0.020).contains(&s), "std {s}");
    assert!(cos.iter().all(|c| c.abs() < 0.08));
    // half-normal mean sqrt(2 / (pi d))
    let expected = (2.0 / (std::f64::consts::PI * d as f64)).sqrt();
    assert!((abs_mean - expected).abs() < 0.002, "{abs_mean} vs {expected}");
}

#[test]
fn binding_preserves_similarity_of_real_vectors_approximately() {
    let d = 4096;
    for s in 0..20 {
        let x = bipolar(s, "x", d);
        let a = real(s, "a", d);
        let mut b = real(s, "b", d);
        b.add_assign(&a).unwrap();
        let want = cosine(&a, &b).unwrap();
        let got = cosine(&bind(&x, &a).unwrap(), &bind(&x, &b).unwrap()).unwrap();
        assert!((want - got).abs() < 0.05);
    }
}

#[test]
fn bundle_similarity_decays_as_inverse_sqrt() {
    let d = 4096;
    let f = unit_gaussian(&mut hdagg::seed::stream(5, "f"), d);
    let mut members = vec![f.clone()];
    for i in 1..4 {
        members.push(unit_gaussian(&mut hdagg::seed::stream(5, &format!("n{i}")), d));
    }
    let c = cosine(&f, &bundle(&members).unwrap()).unwrap();
    assert!((c - 0.5).abs() < 0.05, "{c}");
}

fn banks(seed: u64, d: usize) -> (BasisBank, BasisBank) {
    let table = SymbolTable::new(seed, d).unwrap();
    (
        make_basis_bank(&table, Axis::X, (1.0, 641.0), 4).unwrap(),
        make_basis_bank(&table, Axis::Y, (1.0, 481.0), 6).unwrap(),
    )
}

#[test]
fn scalar_encoding_follows_the_distance_law() {
    let l = 160.0;
    let deltas = [0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0];
    let mut sums = [0.0; 7];
    let seeds = 100;
    for s in 0..seeds {
        let (bx, _) = banks(s, 4096);
        let v0 = hdagg::seed::stream(s, "start").random_range(1.0..=161.0);
        let e0 = encode_scalar(&bx, v0);
        for (k, f) in deltas.iter().enumerate() {
            sums[k] += cosine(&e0, &encode_scalar(&bx, v0 + f * l)).unwrap();
        }
    }
    for (k, f) in deltas.iter().enumerate() {
        let got = sums[k] / seeds as f64;
        let want = f64::max(0.0, 1.0 - f);
        assert!((got - want).abs() < 0.05, "delta {f}L: {got} vs {want}");
    }
    // monotone in expectation
    for w in sums[..4].windows(2) {
        assert!(w[0] > w[1]);
    }
}

#[test]
fn pose_similarity_factorizes_over_axes() {
    let offsets = [(0.0, 0.0), (0.5, 0.5), (0.25, 0.75), (1.0, 0.3), (0.5, 2.5)];
    let seeds = 100;
    for (fx, fy) in offsets {
        let (mut pose, mut cx, mut cy) = (0.0, 0.0, 0.0);
        for s in 0..seeds {
            let (bx, by) = banks(s, 4096);
            let mut rng = hdagg::seed::stream(s, "pose-start");
            let x0 = rng.random_range(1.0..=161.0);
            let y0 = rng.random_range(1.0..=81.0);
            let (x1, y1) = (x0 + fx * 160.0, y0 + fy * 80.0);
            let p0 = encode_pose(&bx, &by, x0, y0).unwrap();
            let p1 = encode_pose(&bx, &by, x1, y1).unwrap();
            assert!(p0.vector.is_bipolar());
            pose += cosine(&p0.vector, &p1.vector).unwrap();
            cx += cosine(&bx.encode(x0), &bx.encode(x1)).unwrap();
            cy += cosine(&by.encode(y0), &by.encode(y1)).unwrap();
        }
        let n = seeds as f64;
        let (pose, prod) = (pose / n, (cx / n) * (cy / n));
        assert!((pose - prod).abs() < 0.05, "({fx}, {fy}): {pose} vs {prod}");
    }
}

#[test]
fn banks_on_different_axes_share_no_vector() {
    let (bx, by) = banks(8, 4096);
    for a in bx.basis() {
        for b in by.basis() {
            assert!(cosine(a, b).unwrap().abs() < 0.08);
        }
    }
}

#[test]
fn typed_recovery_levels() {
    let d = 4096;
    let table = SymbolTable::new(77, d).unwrap();
    let random_std = {
        let c: Vec<f64> = (0..200)
            .map(|i| {
                let a = unit_gaussian(&mut hdagg::seed::stream(1, &format!("r{i}")), d);
                let b = unit_gaussian(&mut hdagg::seed::stream(2, &format!("r{i}")), d);
                cosine(&a, &b).unwrap()
            })
            .collect();
        mean_std(&c).1
    };
    for k in [3usize, 5] {
        let mut levels = Vec::new();
        for trial in 0..20 {
            let hs: Vec<HdVector> = (0..k)
                .map(|i| unit_gaussian(&mut hdagg::seed::stream(trial, &format!("h{k}/{i}")), d))
                .collect();
            let names: Vec<String> = (0..k).map(|i| format!("t{i}")).collect();
            let pairs: Vec<(&str, &HdVector)> = names.iter().map(String::as_str).zip(&hs).collect();
            let h = typed_bundle(&table, &pairs).unwrap();
            for (name, orig) in &pairs {
                levels.push(cosine(&recover_typed(&table, &h, name).unwrap(), orig).unwrap());
            }
        }
        let (m, _) = mean_std(&levels);
        let want = 1.0 / (k as f64).sqrt();
        assert!((m - want).abs() < 0.05, "k={k}: {m} vs {want}");
        assert!(m > 5.0 * random_std);
    }
    // unknown names recover noise
    let a = unit_gaussian(&mut hdagg::seed::stream(3, "a"), d);
    let h = typed_bundle(&table, &[("a", &a)]).unwrap();
    assert!(cosine(&recover_typed(&table, &h, "nope").unwrap(), &a).unwrap().abs() < 0.08);
}

#[test]
fn bundled_classes_average_their_similarities() {
    let d = 4096;
    let k = 3;
    let mut rng = hdagg::seed::stream(12, "classes");
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut per_class = Vec::new();
    for i in 0..k {
        let base = unit_gaussian(&mut rng, d);
        let noise = unit_gaussian(&mut rng, d);
        let mix = 0.2 + 0.3 * i as f64;
        let mut other = base.clone();
        other.scale(mix);
        let mut n = noise;
        n.scale((1.0 - mix * mix).sqrt());
        other.add_assign(&n).unwrap();
        per_class.push(cosine(&base, &other).unwrap());
        a.push(base);
        b.push(other);
    }
    let ha = bundle_holistic(&a).unwrap();
    let hb = bundle_holistic(&b).unwrap();
    let avg = per_class.iter().sum::<f64>() / k as f64;
    assert!((compare(&ha, &hb).unwrap() - avg).abs() < 0.05);
}

#[test]
fn projection_roughly_preserves_geometry() {
    let spec = ProjectionSpec::new(9, 1024, 4096).unwrap();
    let mut rng = hdagg::seed::stream(9, "jl");
    let mut within = 0;
    for _ in 0..100 {
        let a = unit_gaussian(&mut rng, 1024);
        let mut b = unit_gaussian(&mut rng, 1024);
        b.add_assign(&a).unwrap();
        let pa = spec.project(a.as_slice()).unwrap();
        let pb = spec.project(b.as_slice()).unwrap();
        assert!((0.8..=1.2).contains(&pa.norm()));
        if (cosine(&a, &b).unwrap() - cosine(&pa, &pb).unwrap()).abs() < 0.1 {
            within += 1;
        }
    }
    assert!(within >= 99);
    let sum = {
        let mut rng = hdagg::seed::stream(10, "lin");
        let a = unit_gaussian(&mut rng, 1024);
        let b = unit_gaussian(&mut rng, 1024);
        let mut s = a.clone();
        s.add_assign(&b).unwrap();
        let lhs = spec.project(s.as_slice()).unwrap();
        let rhs = bundle([&spec.project(a.as_slice()).unwrap(), &spec.project(b.as_slice()).unwrap()]).unwrap();
        lhs.as_slice().iter().zip(rhs.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    };
    assert!(sum < 1e-12);
    assert!(spec.project(&[0.0; 1024]).unwrap().is_zero());
}

#[test]
fn centering_improves_quasi_orthogonality() {
    let d = 4096;
    let mut rng = hdagg::seed::stream(4, "centering");
    // shared offset makes raw descriptors strongly correlated
    let offset = unit_gaussian(&mut rng, d);
    let vs: Vec<HdVector> = (0..50)
        .map(|_| {
            let mut v = unit_gaussian(&mut rng, d);
            v.add_assign(&offset).unwrap();
            l2_normalize(&v)
        })
        .collect();
    let centered = mean_center_set(&vs).unwrap();
    assert!(mean(&centered).unwrap().norm() < 1e-9);
    let pairwise = |xs: &[HdVector]| {
        let mut c = Vec::new();
        for i in 0..xs.len() {
            for j in i + 1..xs.len() {
                c.push(ref_cosine(xs[i].as_slice(), xs[j].as_slice()));
            }
        }
        mean_std(&c).0
    };
    assert!(pairwise(&vs) > 0.4);
    assert!(pairwise(&centered).abs() < 0.03);
}

fn image(descs: &[HdVector], positions: &[(f64, f64)]) -> FeatureSet {
    let mut fs = FeatureSet::new("img", 640.0, 480.0);
    fs.features = descs
        .iter()
        .zip(positions)
        .map(|(d, &(x, y))| Feature {
            descriptor: d.as_slice().iter().map(|&v| v as f32).collect(),
            x,
            y,
            score: 1.0,
        })
        .collect();
    fs
}

#[test]
fn standardization_zeroes_the_image_mean() {
    let mut rng = hdagg::seed::stream(6, "std");
    let offset = unit_gaussian(&mut rng, 128);
    let descs: Vec<HdVector> = (0..200)
        .map(|_| {
            let mut v = unit_gaussian(&mut rng, 128);
            v.add_assign(&offset).unwrap();
            v
        })
        .collect();
    let positions = vec![(10.0, 10.0); 200];
    let p = standardize_per_image(&image(&descs, &positions)).unwrap();
    assert!(mean(&p.descriptors).unwrap().norm() < 1e-9);
    let avg_cos = |xs: &[HdVector]| {
        let mut c = Vec::new();
        for i in 0..40 {
            c.push(cosine(&xs[i], &xs[i + 1]).unwrap());
        }
        mean_std(&c).0
    };
    assert!(avg_cos(&p.descriptors).abs() < avg_cos(&descs).abs());
    assert_eq!(p.positions, positions);
}

#[test]
fn local_aggregation_is_order_independent_and_counted() {
    let d = 1024;
    let (bx, by) = banks(21, d);
    let mut rng = hdagg::seed::stream(21, "agg");
    let descs: Vec<HdVector> = (0..30).map(|_| unit_gaussian(&mut rng, d)).collect();
    let positions: Vec<(f64, f64)> = (0..30)
        .map(|_| (rng.random_range(1.0..=640.0), rng.random_range(1.0..=480.0)))
        .collect();
    let fs = image(&descs, &positions);
    let (a, counts) = aggregate_local_counted(&fs, &bx, &by, None).unwrap();
    assert_eq!((counts.sums, counts.multiplications, counts.concatenations), (29, 60, 60));
    let mut shuffled = fs.clone();
    shuffled.features.reverse();
    shuffled.features.swap(3, 17);
    let b = aggregate_local(&shuffled, &bx, &by, None).unwrap();
    for (x, y) in a.vector.as_slice().iter().zip(b.vector.as_slice()) {
        assert!((x - y).abs() < 1e-9);
    }
    // direct evaluation of the sum of bound terms
    let prepared = standardize_per_image(&fs).unwrap();
    let mut direct = HdVector::zeros(d);
    for (v, &(x, y)) in prepared.descriptors.iter().zip(&prepared.positions) {
        let p = bind(&encode_scalar(&bx, x), &encode_scalar(&by, y)).unwrap();
        direct.add_assign(&bind(v, &p).unwrap()).unwrap();
    }
    let (via, _) = bind_and_bundle(&prepared, &bx, &by).unwrap();
    assert!(via.unwrap().as_slice().iter().zip(direct.as_slice()).all(|(x, y)| (x - y).abs() < 1e-12));
}

#[test]
fn distant_copies_of_a_feature_are_unrelated() {
    // A single feature would be zeroed by per-image centering, so bind the
    // normalized descriptor directly.
    let d = 4096;
    let mut levels = Vec::new();
    for s in 0..100 {
        let (bx, by) = banks(s, d);
        let desc = [unit_gaussian(&mut hdagg::seed::stream(s, "far"), d)];
        let at = |x: f64| {
            let p = hdagg::preprocess::normalize_features(&image(&desc, &[(x, 200.0)]), None).unwrap();
            bind_and_bundle(&p, &bx, &by).unwrap().0.unwrap()
        };
        let here = at(20.0);
        assert!((cosine(&here, &at(20.0)).unwrap() - 1.0).abs() < 1e-12);
        levels.push(cosine(&here, &at(20.0 + 2.5 * 160.0)).unwrap());
    }
    // For a Gaussian descriptor the spread is sqrt(E[v^4] / d) = sqrt(3 / d),
    // so 0.08 is about three standard deviations.
    let (m, s) = mean_std(&levels);
    let analytic = (3.0 / d as f64).sqrt();
    assert!(m.abs() < 0.01, "mean {m}");
    assert!((s - analytic).abs() < 0.2 * analytic, "std {s} vs {analytic}");
    assert!(levels.iter().filter(|c| c.abs() < 0.08).count() >= 97);
}

#[test]
fn empty_images_are_degenerate() {
    let (bx, by) = banks(1, 256);
    let h = aggregate_local(&FeatureSet::new("none", 640.0, 480.0), &bx, &by, None).unwrap();
    assert!(h.degenerate && h.vector.is_zero());
    let other = aggregate_local(&image(&[HdVector::ones(256), HdVector::zeros(256)], &[(1.0, 1.0), (5.0, 5.0)]), &bx, &by, None).unwrap();
    assert_eq!(compare(&h, &other).unwrap(), 0.0);
}
