//! Acceptance suite: one test per release criterion, each printing a PASS
//! line (visible with `cargo test --release --test acceptance -- --nocapture`).

mod common;

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;

use landfuse_cli::config::{FeatureItem, ScenarioConfig};
use landfuse_cli::harness::EvalReport;
use landfuse_cli::io::raster as raster_io;
use landfuse_cli::pipeline;
use landfuse_core::classify::ClassifierKind;
use landfuse_core::linalg::{dist_sq, Matrix};
use landfuse_core::metrics::{self, ConfusionMatrix, SplitParams};
use landfuse_core::profiles::{self, ProfileParams};
use landfuse_core::raster::{GrayImage, RasterGrid, DEFAULT_NODATA};
use landfuse_core::scene::{generate_synthetic_scene, SceneSpec};
use landfuse_core::seed::stage_rng;
use landfuse_core::tin;
use landfuse_core::tos::{self, Attribute};
use landfuse_core::kpca;

fn pass(line: &str) {
    println!("[PASS] {line}");
}

/// Criterion 1: the tree of shapes agrees with the naive saturation oracle —
/// exhaustively for 3x3 images over 3 gray levels, and on 10,000 random
/// 4x4 and 5x5 images. Exact equality of the shape families.
#[test]
fn criterion_1_tree_of_shapes_oracle_equivalence() {
    let mut checked = 0u64;
    for code in 0..3u32.pow(9) {
        let mut v = code;
        let data: Vec<u16> = (0..9)
            .map(|_| {
                let d = (v % 3) as u16;
                v /= 3;
                d
            })
            .collect();
        check_tree_matches_oracle(3, 3, 3, &data);
        checked += 1;
    }
    let mut rng = stage_rng(0, "acceptance-tos", 0);
    for case in 0..10_000 {
        let side = if case % 2 == 0 { 4 } else { 5 };
        let data: Vec<u16> = (0..side * side).map(|_| rng.random_range(0..3)).collect();
        check_tree_matches_oracle(side, side, 3, &data);
        checked += 1;
    }
    pass(&format!(
        "criterion 1: tree-of-shapes shape family equals the naive saturation oracle on {checked} images"
    ));
}

fn check_tree_matches_oracle(rows: usize, cols: usize, levels: u32, data: &[u16]) {
    let img = GrayImage::new(rows, cols, levels, data.to_vec());
    let tree = tos::build_tree(&img).unwrap_or_else(|e| panic!("build failed on {data:?}: {e}"));
    assert_eq!(tree.reconstruct(), img, "reconstruction differs on {data:?}");
    let got = common::tree_shape_family(&tree);
    let want = common::naive_shape_family(rows, cols, data);
    assert_eq!(got, want, "shape family differs on {data:?}");
}

/// Criterion 2: filter properties on 1,000 random fixtures each — area
/// idempotence, the lambda = 1 identity, flattening above the root area,
/// and bright/dark symmetry on diagonal-free fixtures. Exact pixel equality.
#[test]
fn criterion_2_filter_properties() {
    let mut rng = stage_rng(0, "acceptance-filters", 0);
    for _ in 0..1000 {
        let rows = rng.random_range(4..9);
        let cols = rng.random_range(4..9);
        let levels = rng.random_range(2..6);
        let data: Vec<u16> =
            (0..rows * cols).map(|_| rng.random_range(0..levels as u16)).collect();
        let img = GrayImage::new(rows, cols, levels, data);
        let tree = tos::build_tree(&img).unwrap();
        let attrs = tos::compute_attributes(&tree, &img);
        // Identity at lambda = 1.
        assert_eq!(tos::filter_tree(&tree, &attrs, Attribute::Area, 1.0), img);
        // Flat at lambda above the root area.
        let flat = tos::filter_tree(
            &tree,
            &attrs,
            Attribute::Area,
            (rows * cols) as f64 + 1.0,
        );
        assert!(flat.data.iter().all(|&v| v == tree.level(0)));
        // Idempotence at a random threshold.
        let lambda = rng.random_range(1.0..=(rows * cols) as f64);
        let once = tos::filter_tree(&tree, &attrs, Attribute::Area, lambda);
        let tree2 = tos::build_tree(&once).unwrap();
        let attrs2 = tos::compute_attributes(&tree2, &once);
        assert_eq!(tos::filter_tree(&tree2, &attrs2, Attribute::Area, lambda), once);
    }
    // Bright/dark symmetry: filter(complement) = complement(filter) for the
    // area attribute on fixtures where 4- and 8-connectivity coincide.
    let mut rng = stage_rng(0, "acceptance-selfdual", 0);
    for _ in 0..1000 {
        let img = diagonal_free_fixture(&mut rng);
        let tree = tos::build_tree(&img).unwrap();
        let attrs = tos::compute_attributes(&tree, &img);
        let lambda = rng.random_range(1.0..30.0);
        let filtered = tos::filter_tree(&tree, &attrs, Attribute::Area, lambda);
        let comp = img.complement();
        let comp_tree = tos::build_tree(&comp).unwrap();
        let comp_attrs = tos::compute_attributes(&comp_tree, &comp);
        let comp_filtered = tos::filter_tree(&comp_tree, &comp_attrs, Attribute::Area, lambda);
        assert_eq!(
            comp_filtered,
            filtered.complement(),
            "self-dual symmetry failed on {:?}",
            img.data
        );
    }
    pass("criterion 2: filter identity, flattening, idempotence and self-dual symmetry on 1000 fixtures each");
}

/// Axis-aligned rectangles separated by a Chebyshev gap of at least 2 on a
/// constant border: parallel 4- and 8-connectivity components coincide for
/// every threshold set.
fn diagonal_free_fixture(rng: &mut impl Rng) -> GrayImage {
    let rows = rng.random_range(10..16);
    let cols = rng.random_range(10..16);
    let levels = 8u32;
    let background = rng.random_range(0..levels as u16);
    let mut data = vec![background; rows * cols];
    let mut boxes: Vec<(usize, usize, usize, usize)> = Vec::new();
    for _ in 0..rng.random_range(1..4) {
        for _attempt in 0..20 {
            let h = rng.random_range(1..4);
            let w = rng.random_range(1..4);
            if rows < h + 4 || cols < w + 4 {
                continue;
            }
            let r0 = rng.random_range(2..rows - h - 1);
            let c0 = rng.random_range(2..cols - w - 1);
            let clash = boxes.iter().any(|&(br0, bc0, br1, bc1)| {
                // Chebyshev distance below 2 between rectangles.
                r0 <= br1 + 1 && br0 <= r0 + h && c0 <= bc1 + 1 && bc0 <= c0 + w
            });
            if clash {
                continue;
            }
            let value = rng.random_range(0..levels as u16);
            for r in r0..r0 + h {
                for c in c0..c0 + w {
                    data[r * cols + c] = value;
                }
            }
            boxes.push((r0, c0, r0 + h - 1, c0 + w - 1));
            break;
        }
    }
    GrayImage::new(rows, cols, levels, data)
}

/// Criterion 3: KPCA numerics — eigendecomposition residual at 1e-6
/// relative, centered unit-variance training projections, and the exact
/// minimal component-selection rule on 100 random spectra sets (m <= 300).
#[test]
fn criterion_3_kpca_numerics() {
    let mut rng = stage_rng(0, "acceptance-kpca", 0);
    for set_index in 0..100 {
        let m = if set_index % 10 == 9 {
            rng.random_range(200..=300)
        } else {
            rng.random_range(20..=120)
        };
        let d = rng.random_range(3..12);
        let samples = Matrix::from_fn(m, d, |_, _| rng.random_range(-1.0..1.0));
        let gamma = kpca::estimate_gamma(&samples).unwrap();
        let model = kpca::fit_kpca(samples.clone(), gamma, 0.95).unwrap();
        // Reconstruction residual of the centered kernel.
        let denom = 2.0 * gamma * gamma;
        let mut kernel = Matrix::from_fn(m, m, |i, j| {
            (-dist_sq(samples.row(i), samples.row(j)) / denom).exp()
        });
        let row_means: Vec<f64> =
            (0..m).map(|i| kernel.row(i).iter().sum::<f64>() / m as f64).collect();
        let total_mean = row_means.iter().sum::<f64>() / m as f64;
        for i in 0..m {
            for j in 0..m {
                let v = kernel.get(i, j) - row_means[i] - row_means[j] + total_mean;
                kernel.set(i, j, v);
            }
        }
        let eig = landfuse_core::linalg::jacobi_eigh(&kernel, 1e-10, 100).unwrap();
        let mut residual = 0.0;
        for i in 0..m {
            for j in 0..m {
                let mut acc = 0.0;
                for q in 0..m {
                    acc += eig.vectors.get(i, q) * eig.values[q] * eig.vectors.get(j, q);
                }
                residual += (acc - kernel.get(i, j)).powi(2);
            }
        }
        assert!(residual.sqrt() <= 1e-6 * kernel.frobenius_norm().max(1e-30));
        // Training projections: centered, unit population variance.
        let proj = model.project(&samples).unwrap();
        for q in 0..model.kept {
            let mean: f64 = (0..m).map(|r| proj.get(r, q)).sum::<f64>() / m as f64;
            let var: f64 =
                (0..m).map(|r| (proj.get(r, q) - mean).powi(2)).sum::<f64>() / m as f64;
            assert!(mean.abs() <= 1e-6);
            assert!((var - 1.0).abs() <= 1e-3);
        }
        // Selection rule: minimal count reaching 95% of the clamped sum,
        // recomputed independently.
        let clamped: Vec<f64> = model.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
        let total: f64 = clamped.iter().sum();
        let mut cum = 0.0;
        let mut expect = clamped.len();
        for (i, &l) in clamped.iter().enumerate() {
            cum += l;
            if cum >= 0.95 * total {
                expect = i + 1;
                break;
            }
        }
        assert_eq!(model.kept, expect);
    }
    pass("criterion 3: KPCA residual, projection contract and selection rule on 100 random sets");
}

/// Criterion 4: Delaunay validity on 100 instances of up to 500 sites
/// (exhaustive empty-circumcircle check), and TIN rasterization reproducing
/// affine fields within 1e-6.
#[test]
fn criterion_4_delaunay_and_tin() {
    let mut rng = stage_rng(0, "acceptance-delaunay", 0);
    for case in 0..100 {
        let n = rng.random_range(10..=500);
        let sites: Vec<(f64, f64, f64)> = (0..n)
            .map(|_| {
                (
                    rng.random_range(0.0..200.0),
                    rng.random_range(0.0..200.0),
                    rng.random_range(-10.0..10.0),
                )
            })
            .collect();
        let tin = tin::build_tin(&sites).unwrap();
        tin::validate_delaunay(&tin)
            .unwrap_or_else(|e| panic!("case {case} ({n} sites): {e}"));
    }
    // Affine reproduction on a random TIN whose vertex values sample the
    // plane z = a x + b y + c.
    for _ in 0..10 {
        let (a, b, c) =
            (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-5.0..5.0));
        let sites: Vec<(f64, f64, f64)> = (0..60)
            .map(|_| {
                let x = rng.random_range(0.0..32.0);
                let y = rng.random_range(0.0..32.0);
                (x, y, a * x + b * y + c)
            })
            .collect();
        let tin = tin::build_tin(&sites).unwrap();
        let grid = tin::rasterize_tin(&tin, 32, 32, 0.0, 32.0, 1.0);
        for r in 0..32 {
            for col in 0..32 {
                let v = grid.get(0, r, col);
                if grid.is_nodata(v) {
                    continue;
                }
                let (x, y) = grid.pixel_center(r, col);
                assert!((f64::from(v) - (a * x + b * y + c)).abs() < 1e-6);
            }
        }
    }
    pass("criterion 4: empty-circumcircle validity on 100 instances and affine TIN reproduction at 1e-6");
}

/// Criterion 5: the confusion-matrix fixtures at 1e-12 and metric bounds on
/// 10,000 random matrices.
#[test]
fn criterion_5_metrics_fixtures_and_bounds() {
    let fill = |entries: &[&[u64]]| {
        let mut cm = ConfusionMatrix::new(entries.len());
        for (t, row) in entries.iter().enumerate() {
            for (p, &count) in row.iter().enumerate() {
                for _ in 0..count {
                    cm.record(t as u16 + 1, p as u16 + 1);
                }
            }
        }
        cm
    };
    let perfect = metrics::metrics(&fill(&[&[50, 0], &[0, 50]])).unwrap();
    assert!((perfect.oa - 1.0).abs() < 1e-12);
    assert!((perfect.aa - 1.0).abs() < 1e-12);
    assert!((perfect.kappa - 1.0).abs() < 1e-12);
    let mixed = metrics::metrics(&fill(&[&[45, 5], &[15, 35]])).unwrap();
    assert!((mixed.oa - 0.80).abs() < 1e-12);
    assert!((mixed.aa - 0.80).abs() < 1e-12);
    assert!((mixed.kappa - 0.60).abs() < 1e-12);
    let inverted = metrics::metrics(&fill(&[&[0, 10], &[10, 0]])).unwrap();
    assert!(inverted.oa.abs() < 1e-12);
    assert!((inverted.kappa + 1.0).abs() < 1e-12);

    let mut rng = stage_rng(0, "acceptance-metrics", 0);
    for _ in 0..10_000 {
        let k = rng.random_range(2..7);
        let mut cm = ConfusionMatrix::new(k);
        let mut total = 0u64;
        for t in 0..k {
            for p in 0..k {
                let count = rng.random_range(0..12u64);
                for _ in 0..count {
                    cm.record(t as u16 + 1, p as u16 + 1);
                }
                total += count;
            }
        }
        if total == 0 {
            continue;
        }
        let m = metrics::metrics(&cm).unwrap();
        assert!((0.0..=1.0).contains(&m.oa));
        assert!((0.0..=1.0).contains(&m.aa));
        assert!((-1.0..=1.0).contains(&m.kappa));
    }
    pass("criterion 5: metric fixtures at 1e-12 and bounds over 10,000 random matrices");
}

/// Criterion 6: the split reproduces the study's per-class training counts
/// from its class pool sizes, exactly.
#[test]
fn criterion_6_protocol_training_counts() {
    let pools = [290usize, 2166, 4186, 1108, 2927, 838];
    let expected = [20usize, 22, 42, 20, 29, 20];
    let counts = metrics::training_counts(&pools, &SplitParams::default());
    assert_eq!(counts, expected);
    // And through an actual split over a materialized map.
    let total: usize = pools.iter().sum();
    let cols = 101;
    let rows = total / cols + 1;
    let mut labels = vec![0u16; rows * cols];
    let mut at = 0;
    for (class, &n) in pools.iter().enumerate() {
        for _ in 0..n {
            labels[at] = class as u16 + 1;
            at += 1;
        }
    }
    let map = landfuse_core::raster::ClassMap::new(rows, cols, 6, labels).unwrap();
    let split = metrics::split_reference(&map, &SplitParams::default(), 123).unwrap();
    let mut got = [0usize; 6];
    for &p in &split.train {
        got[usize::from(map.labels()[p]) - 1] += 1;
    }
    assert_eq!(got, expected);
    pass("criterion 6: per-class training counts 20/22/42/20/29/20 reproduced exactly");
}

/// Common fixture for criteria 7 and 9: the synthetic scene written as
/// toolkit rasters plus the three scenario configurations.
fn scene_fixture(dir: &Path) -> (ScenarioConfig, ScenarioConfig, ScenarioConfig) {
    let spec = SceneSpec::default();
    assert_eq!((spec.rows, spec.cols, spec.bands), (128, 128, 32));
    let scene = generate_synthetic_scene(&spec, 0).unwrap();
    raster_io::write_raster(&dir.join("hyper.hdr"), &scene.hyper, &BTreeMap::new()).unwrap();
    raster_io::write_raster(&dir.join("ndsm.hdr"), &scene.ndsm, &BTreeMap::new()).unwrap();
    raster_io::write_raster(&dir.join("intensity.hdr"), &scene.intensity, &BTreeMap::new())
        .unwrap();
    raster_io::write_class_map(&dir.join("classmap.hdr"), &scene.class_map).unwrap();
    let base = ScenarioConfig {
        hyper: Some(dir.join("hyper.hdr")),
        ndsm: Some(dir.join("ndsm.hdr")),
        intensity: Some(dir.join("intensity.hdr")),
        classmap: dir.join("classmap.hdr"),
        classifiers: vec![ClassifierKind::Svm, ClassifierKind::RandomForest],
        runs: 10,
        seed: 0,
        ..ScenarioConfig::default()
    };
    let s1 = ScenarioConfig {
        scenario: 1,
        recipe: vec![FeatureItem::Hyper],
        output_dir: dir.join("s1"),
        render_maps: false,
        ..base.clone()
    };
    let s2 = ScenarioConfig {
        scenario: 2,
        recipe: vec![FeatureItem::Hyper, FeatureItem::Intensity, FeatureItem::Ndsm],
        output_dir: dir.join("s2"),
        render_maps: false,
        ..base.clone()
    };
    let s3 = ScenarioConfig {
        scenario: 3,
        recipe: vec![FeatureItem::EsdapKpca, FeatureItem::Intensity, FeatureItem::Ndsm],
        output_dir: dir.join("s3"),
        render_maps: true,
        ..base
    };
    (s1, s2, s3)
}

fn mean_oa(reports: &[EvalReport], classifier: &str) -> f64 {
    reports
        .iter()
        .find(|r| r.classifier == classifier)
        .unwrap_or_else(|| panic!("no report for {classifier}"))
        .oa()
        .mean
}

/// Criterion 7: end-to-end fusion ordering on the synthetic scene — for SVM
/// and RF, mean OA(scenario 3) >= mean OA(scenario 2) >= mean OA(scenario 1)
/// over the ten runs, and scenario 3 beats scenario 1 by at least five
/// percentage points.
#[test]
fn criterion_7_fusion_ordering() {
    let dir = tempfile::tempdir().unwrap();
    let (s1, s2, s3) = scene_fixture(dir.path());
    let r1 = pipeline::run_scenario(&s1).unwrap();
    let r2 = pipeline::run_scenario(&s2).unwrap();
    let r3 = pipeline::run_scenario(&s3).unwrap();
    for classifier in ["svm", "rf"] {
        let oa1 = mean_oa(&r1.reports, classifier);
        let oa2 = mean_oa(&r2.reports, classifier);
        let oa3 = mean_oa(&r3.reports, classifier);
        println!(
            "  {classifier}: scenario1 {:.2}%  scenario2 {:.2}%  scenario3 {:.2}%",
            oa1 * 100.0,
            oa2 * 100.0,
            oa3 * 100.0
        );
        assert!(oa3 >= oa2, "{classifier}: scenario 3 ({oa3}) below scenario 2 ({oa2})");
        assert!(oa2 >= oa1, "{classifier}: scenario 2 ({oa2}) below scenario 1 ({oa1})");
        assert!(
            oa3 - oa1 >= 0.05,
            "{classifier}: scenario 3 - scenario 1 = {:.4} below 5 points",
            oa3 - oa1
        );
    }
    pass("criterion 7: fusion ordering holds for SVM and RF with a >= 5 point spread");
}

/// Criterion 8: feature counts — the extended profile of 3 components at
/// default thresholds yields 15 bands, and 17 after stacking intensity and
/// nDSM.
#[test]
fn criterion_8_feature_counts() {
    let mut rng = stage_rng(0, "acceptance-counts", 0);
    let data: Vec<f32> = (0..3 * 32 * 32).map(|_| rng.random_range(0.0..1.0)).collect();
    let components = RasterGrid::new(32, 32, 3, data, DEFAULT_NODATA).unwrap();
    let stack = profiles::esdap(&components, &ProfileParams::default()).unwrap();
    assert_eq!(stack.len(), 15);
    let profile_grid = stack.to_raster(DEFAULT_NODATA, None);
    let intensity = RasterGrid::filled(32, 32, 1, 0.5, DEFAULT_NODATA);
    let ndsm = RasterGrid::filled(32, 32, 1, 2.0, DEFAULT_NODATA);
    let (stacked, labels) = pipeline::stack_features(&[
        (&profile_grid, stack.labels().iter().map(|l| format!("esdap:{l}")).collect()),
        (&intensity, vec!["intensity".into()]),
        (&ndsm, vec!["ndsm".into()]),
    ])
    .unwrap();
    assert_eq!(stacked.bands(), 17);
    assert_eq!(labels.len(), 17);
    pass("criterion 8: 15 profile bands from 3 components, 17 after +I+nDSM");
}

/// Criterion 9: determinism — executing the scenario twice with different
/// thread counts produces byte-identical metric reports, manifests and maps.
#[test]
fn criterion_9_determinism_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (_, _, s3) = scene_fixture(dir.path());
    let run_with = |threads: usize, out: &Path| -> Vec<(String, Vec<u8>)> {
        let cfg = ScenarioConfig { output_dir: out.to_path_buf(), ..s3.clone() };
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| pipeline::run_scenario(&cfg)).unwrap();
        // Deterministic artifacts: everything except the timing table.
        let mut artifacts = Vec::new();
        let mut names: Vec<String> = std::fs::read_dir(out)
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .filter(|name| name != "timing.tsv")
            .collect();
        names.sort();
        for name in names {
            artifacts.push((name.clone(), std::fs::read(out.join(name)).unwrap()));
        }
        artifacts
    };
    let a = run_with(1, &dir.path().join("det-a"));
    let b = run_with(4, &dir.path().join("det-b"));
    assert_eq!(a.len(), b.len());
    for ((name_a, bytes_a), (name_b, bytes_b)) in a.iter().zip(&b) {
        assert_eq!(name_a, name_b);
        assert_eq!(bytes_a, bytes_b, "{name_a} differs between thread counts");
    }
    assert!(a.iter().any(|(name, _)| name.ends_with(".ppm")), "no maps rendered");
    pass("criterion 9: reports, manifests and maps byte-identical across thread counts");
}
