// Scratch probe for the scenario ordering on the synthetic scene.
// Not part of the deliverable surface; run with --release.

use std::collections::BTreeMap;
use std::time::Instant;

use landfuse_cli::config::{FeatureItem, ScenarioConfig};
use landfuse_cli::io::raster;
use landfuse_cli::pipeline;
use landfuse_core::classify::ClassifierKind;
use landfuse_core::scene::{generate_synthetic_scene, SceneSpec};

fn main() {
    let dir = std::env::temp_dir().join("landfuse-ordering-probe");
    std::fs::create_dir_all(&dir).unwrap();
    let spec = SceneSpec::default();
    let t0 = Instant::now();
    let scene = generate_synthetic_scene(&spec, 0).unwrap();
    println!("scene generated in {:.1}s", t0.elapsed().as_secs_f64());
    raster::write_raster(&dir.join("hyper.hdr"), &scene.hyper, &BTreeMap::new()).unwrap();
    raster::write_raster(&dir.join("ndsm.hdr"), &scene.ndsm, &BTreeMap::new()).unwrap();
    raster::write_raster(&dir.join("intensity.hdr"), &scene.intensity, &BTreeMap::new()).unwrap();
    raster::write_class_map(&dir.join("classmap.hdr"), &scene.class_map).unwrap();

    let base = ScenarioConfig {
        hyper: Some(dir.join("hyper.hdr")),
        ndsm: Some(dir.join("ndsm.hdr")),
        intensity: Some(dir.join("intensity.hdr")),
        classmap: dir.join("classmap.hdr"),
        classifiers: vec![ClassifierKind::Svm, ClassifierKind::RandomForest],
        runs: 10,
        seed: 0,
        render_maps: false,
        ..ScenarioConfig::default()
    };
    let scenarios = [
        (1u8, vec![FeatureItem::Hyper]),
        (2, vec![FeatureItem::Hyper, FeatureItem::Intensity, FeatureItem::Ndsm]),
        (3, vec![FeatureItem::EsdapKpca, FeatureItem::Intensity, FeatureItem::Ndsm]),
    ];
    for (id, recipe) in scenarios {
        let cfg = ScenarioConfig {
            scenario: id,
            recipe,
            output_dir: dir.join(format!("s{id}")),
            ..base.clone()
        };
        let t = Instant::now();
        let outcome = pipeline::run_scenario(&cfg).unwrap();
        print!("scenario {id} ({} bands", outcome.feature_bands);
        if let Some(k) = outcome.kpca_kept {
            print!(", kpca kept {k}");
        }
        println!(", {:.1}s):", t.elapsed().as_secs_f64());
        for report in &outcome.reports {
            let oa = report.oa();
            println!(
                "  {:5}  OA {:6.2} ± {:.2}%",
                report.classifier,
                oa.mean * 100.0,
                oa.std * 100.0
            );
        }
    }
}
