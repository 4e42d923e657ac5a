//! Scenario orchestration: feature assembly from a recipe, vector stacking,
//! Monte-Carlo train/test evaluation per classifier, map rendering, and the
//! replayable manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use landfuse_core::classify::{forest, rbfnn, svm, ClassifierKind, TrainingSet};
use landfuse_core::kpca;
use landfuse_core::linalg::Matrix;
use landfuse_core::metrics::{self, SplitParams};
use landfuse_core::profiles::{self, ProfileParams};
use landfuse_core::raster::{default_palette, ClassMap, RasterGrid, Rgb};
use landfuse_core::seed::{derive_seed, fnv1a64, stage_rng};

use crate::config::{FeatureItem, ScenarioConfig, ThresholdSpec};
use crate::error::{CliError, Result};
use crate::harness::{monte_carlo, EvalReport, RunRecord};
use crate::io::model::AnyModel;
use crate::io::{ppm, raster};

/// Stacked features plus per-band provenance labels.
pub struct FeatureAssembly {
    pub grid: RasterGrid,
    pub band_labels: Vec<String>,
    /// Components the variance rule kept, when the recipe ran KPCA.
    pub kpca_kept: Option<usize>,
}

/// Band-wise concatenation of same-shaped grids with provenance labels.
pub fn stack_features(
    inputs: &[(&RasterGrid, Vec<String>)],
) -> Result<(RasterGrid, Vec<String>)> {
    let grids: Vec<&RasterGrid> = inputs.iter().map(|(g, _)| *g).collect();
    let stacked = RasterGrid::stack(&grids)?;
    let mut labels = Vec::with_capacity(stacked.bands());
    for (grid, names) in inputs {
        if names.len() != grid.bands() {
            return Err(CliError::data(format!(
                "provenance labels ({}) do not match bands ({})",
                names.len(),
                grid.bands()
            )));
        }
        labels.extend(names.iter().cloned());
    }
    Ok((stacked, labels))
}

fn profile_params(cfg: &ScenarioConfig) -> ProfileParams {
    let mut params = ProfileParams { levels: cfg.esdap_levels, ..ProfileParams::default() };
    match &cfg.esdap_area_thresholds {
        ThresholdSpec::Auto(n) => params.area_count = *n,
        ThresholdSpec::Explicit(v) => {
            params.area_count = v.len();
            params.area_thresholds = Some(v.clone());
        }
    }
    match &cfg.esdap_std_thresholds {
        ThresholdSpec::Auto(n) => params.std_count = *n,
        ThresholdSpec::Explicit(v) => {
            params.std_count = v.len();
            params.std_thresholds = Some(v.clone());
        }
    }
    params
}

/// Loaded scenario inputs.
pub struct ScenarioInputs {
    pub hyper: Option<RasterGrid>,
    pub ndsm: Option<RasterGrid>,
    pub intensity: Option<RasterGrid>,
    pub classmap: ClassMap,
}

pub fn load_inputs(cfg: &ScenarioConfig) -> Result<ScenarioInputs> {
    let load = |path: &Option<PathBuf>| -> Result<Option<RasterGrid>> {
        match path {
            Some(p) => Ok(Some(raster::read_raster(p)?.0)),
            None => Ok(None),
        }
    };
    Ok(ScenarioInputs {
        hyper: load(&cfg.hyper)?,
        ndsm: load(&cfg.ndsm)?,
        intensity: load(&cfg.intensity)?,
        classmap: raster::read_class_map(&cfg.classmap)?,
    })
}

/// Fit KPCA on a seeded pixel sample of the cube and project every pixel.
pub fn kpca_features(
    cube: &RasterGrid,
    samples: usize,
    variance: f64,
    seed: u64,
) -> Result<(RasterGrid, usize, f64)> {
    let mut rng = stage_rng(seed, "kpca-sample", 0);
    let (sample, _) = kpca::sample_pixels(cube, samples, &mut rng)?;
    let gamma = kpca::estimate_gamma(&sample)?;
    let model = kpca::fit_kpca(sample, gamma, variance)?;
    let features = model.project_grid(cube)?;
    Ok((features, model.kept, gamma))
}

/// Assemble the stacked feature raster for a recipe. KPCA runs at most once
/// and feeds both the `kpca` and `esdap_kpca` items.
pub fn assemble_features(
    cfg: &ScenarioConfig,
    inputs: &ScenarioInputs,
) -> Result<FeatureAssembly> {
    let needs_kpca = cfg
        .recipe
        .iter()
        .any(|i| matches!(i, FeatureItem::Kpca | FeatureItem::EsdapKpca));
    let kpca_out = if needs_kpca {
        let cube = inputs
            .hyper
            .as_ref()
            .ok_or_else(|| CliError::data("recipe needs the hyperspectral cube"))?;
        Some(kpca_features(cube, cfg.kpca_samples, cfg.kpca_variance, cfg.seed)?)
    } else {
        None
    };
    let mut parts: Vec<(RasterGrid, Vec<String>)> = Vec::new();
    for item in &cfg.recipe {
        match item {
            FeatureItem::Hyper => {
                let cube = inputs
                    .hyper
                    .as_ref()
                    .ok_or_else(|| CliError::data("recipe needs the hyperspectral cube"))?;
                let labels = (0..cube.bands()).map(|b| format!("hyper:{b}")).collect();
                parts.push((cube.clone(), labels));
            }
            FeatureItem::Kpca => {
                let (features, _, _) = kpca_out.as_ref().expect("kpca computed above");
                let labels = (0..features.bands()).map(|q| format!("kpca:{q}")).collect();
                parts.push((features.clone(), labels));
            }
            FeatureItem::EsdapKpca => {
                let (features, _, _) = kpca_out.as_ref().expect("kpca computed above");
                let stack = profiles::esdap(features, &profile_params(cfg))?;
                let mask: Vec<bool> =
                    (0..features.pixels()).map(|p| !features.pixel_valid(p)).collect();
                let labels =
                    stack.labels().iter().map(|tag| format!("esdap:{tag}")).collect();
                let grid = stack.to_raster(features.nodata, Some(&mask));
                parts.push((grid, labels));
            }
            FeatureItem::Ndsm => {
                let grid = inputs
                    .ndsm
                    .as_ref()
                    .ok_or_else(|| CliError::data("recipe needs the nDSM raster"))?;
                parts.push((grid.clone(), vec!["ndsm".to_string()]));
            }
            FeatureItem::Intensity => {
                let grid = inputs
                    .intensity
                    .as_ref()
                    .ok_or_else(|| CliError::data("recipe needs the intensity raster"))?;
                parts.push((grid.clone(), vec!["intensity".to_string()]));
            }
        }
    }
    let borrowed: Vec<(&RasterGrid, Vec<String>)> =
        parts.iter().map(|(g, l)| (g, l.clone())).collect();
    let (grid, band_labels) = stack_features(&borrowed)?;
    Ok(FeatureAssembly { grid, band_labels, kpca_kept: kpca_out.map(|(_, kept, _)| kept) })
}

/// Zero out labels whose feature vector holds nodata; returns the masked
/// map and the dropped-pixel count.
pub fn mask_invalid(map: &ClassMap, features: &RasterGrid) -> Result<(ClassMap, usize)> {
    if map.rows() != features.rows() || map.cols() != features.cols() {
        return Err(CliError::data(format!(
            "class map is {}x{} but features are {}x{}",
            map.rows(),
            map.cols(),
            features.rows(),
            features.cols()
        )));
    }
    let mut labels = map.labels().to_vec();
    let mut dropped = 0usize;
    for (p, label) in labels.iter_mut().enumerate() {
        if *label != 0 && !features.pixel_valid(p) {
            *label = 0;
            dropped += 1;
        }
    }
    Ok((ClassMap::new(map.rows(), map.cols(), map.num_classes(), labels)?, dropped))
}

fn rows_matrix(features: &RasterGrid, indices: &[usize]) -> Matrix {
    let mut m = Matrix::zeros(indices.len(), features.bands());
    for (row, &p) in indices.iter().enumerate() {
        features.pixel_vector(p, m.row_mut(row));
    }
    m
}

fn train_model(
    kind: ClassifierKind,
    cfg: &ScenarioConfig,
    set: &TrainingSet,
    seed: u64,
) -> Result<AnyModel> {
    Ok(match kind {
        ClassifierKind::Svm => {
            let mut params = svm::SvmParams::default();
            if let Some(grid) = &cfg.svm_c_grid {
                params.c_grid = grid.clone();
            }
            if let Some(grid) = &cfg.svm_gamma_grid {
                params.gamma_grid = grid.clone();
            }
            params.folds = cfg.svm_folds;
            AnyModel::Svm(svm::train(set, &params, seed)?)
        }
        ClassifierKind::RandomForest => {
            let params = forest::ForestParams { trees: cfg.rf_trees, ..Default::default() };
            AnyModel::Forest(forest::train(set, &params, seed)?)
        }
        ClassifierKind::Rbfnn => {
            let params = rbfnn::RbfnnParams {
                centers_per_class: cfg.rbfnn_centers_per_class,
                ..Default::default()
            };
            AnyModel::Rbfnn(rbfnn::train(set, &params, seed)?)
        }
    })
}

/// Palette sized for `k` classes: the six thematic colors, then a
/// golden-angle hue wheel.
pub fn palette_for(k: u16) -> Vec<Rgb> {
    let mut palette = default_palette();
    let mut hue = 0.1f64;
    while palette.len() < usize::from(k) {
        hue = (hue + 0.618_033_988_749_895) % 1.0;
        let h = hue * 6.0;
        let sector = h as usize % 6;
        let f = h.fract();
        let (v, p, q, t) = (230u8, 40u8, (230.0 - 190.0 * f) as u8, (40.0 + 190.0 * f) as u8);
        let rgb = match sector {
            0 => [v, t, p],
            1 => [q, v, p],
            2 => [p, v, t],
            3 => [p, q, v],
            4 => [t, p, v],
            _ => [v, p, q],
        };
        palette.push(rgb);
    }
    palette
}

/// Everything a scenario run produces.
pub struct ScenarioOutcome {
    pub reports: Vec<EvalReport>,
    pub manifest: String,
    pub written: Vec<PathBuf>,
    pub kpca_kept: Option<usize>,
    pub feature_bands: usize,
    pub dropped_pixels: usize,
}

/// Execute a scenario end to end: assemble features once, evaluate every
/// classifier over the Monte-Carlo runs (splits are shared across
/// classifiers run by run), render the first run's map per classifier, and
/// write the reports plus a manifest that can replay the scenario.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutcome> {
    cfg.validate()?;
    let inputs = load_inputs(cfg)?;
    let assembly = assemble_features(cfg, &inputs)?;
    let (effective_map, dropped) = mask_invalid(&inputs.classmap, &assembly.grid)?;
    let split_params =
        SplitParams { fraction: cfg.fraction, min_per_class: cfg.min_per_class };
    let features = &assembly.grid;
    let num_classes = effective_map.num_classes();

    fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| CliError::data(format!("{}: {e}", cfg.output_dir.display())))?;
    let mut written = Vec::new();
    let mut reports = Vec::new();
    for &kind in &cfg.classifiers {
        let records = monte_carlo(cfg.runs, |r| -> Result<RunRecord> {
            let split =
                metrics::split_reference(&effective_map, &split_params, derive_seed(cfg.seed, "split", r as u64))?;
            let train_x = rows_matrix(features, &split.train);
            let train_y: Vec<u16> =
                split.train.iter().map(|&p| effective_map.labels()[p]).collect();
            let set = TrainingSet::new(train_x, train_y, num_classes)?;
            let train_seed = derive_seed(cfg.seed, kind.name(), r as u64);
            let start = Instant::now();
            let model = train_model(kind, cfg, &set, train_seed)?;
            let train_seconds = start.elapsed().as_secs_f64();
            let test_x = rows_matrix(features, &split.test);
            let test_y: Vec<u16> =
                split.test.iter().map(|&p| effective_map.labels()[p]).collect();
            let start = Instant::now();
            let predicted = model.predict(&test_x);
            let test_seconds = start.elapsed().as_secs_f64();
            let confusion =
                metrics::ConfusionMatrix::from_labels(&test_y, &predicted, num_classes)?;
            let m = metrics::metrics(&confusion)?;
            Ok(RunRecord { run: r, confusion, metrics: m, train_seconds, test_seconds })
        })?;
        reports.push(EvalReport { classifier: kind.name().to_string(), runs: records });

        if cfg.render_maps {
            // Re-derive run 0's model (training is deterministic) and
            // classify the full image for the map.
            let split = metrics::split_reference(
                &effective_map,
                &split_params,
                derive_seed(cfg.seed, "split", 0),
            )?;
            let train_x = rows_matrix(features, &split.train);
            let train_y: Vec<u16> =
                split.train.iter().map(|&p| effective_map.labels()[p]).collect();
            let set = TrainingSet::new(train_x, train_y, num_classes)?;
            let model = train_model(kind, cfg, &set, derive_seed(cfg.seed, kind.name(), 0))?;
            let valid: Vec<usize> =
                (0..features.pixels()).filter(|&p| features.pixel_valid(p)).collect();
            let predicted = model.predict(&rows_matrix(features, &valid));
            let mut labels = vec![0u16; features.pixels()];
            for (&p, &label) in valid.iter().zip(&predicted) {
                labels[p] = label;
            }
            let map = ClassMap::new(features.rows(), features.cols(), num_classes, labels)?;
            let path = cfg.output_dir.join(format!("map_{}_run0.ppm", kind.name()));
            ppm::render_class_map(&path, &map, &palette_for(num_classes))?;
            written.push(path);
        }
    }

    let manifest = build_manifest(cfg, &assembly, dropped);
    for (name, text) in [
        ("report.tsv", crate::harness::metrics_tsv(&reports)),
        ("timing.tsv", crate::harness::timing_tsv(&reports)),
        ("report.txt", crate::harness::text_table(&reports)),
        ("manifest.txt", manifest.clone()),
    ] {
        let path = cfg.output_dir.join(name);
        fs::write(&path, text)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        written.push(path);
    }
    Ok(ScenarioOutcome {
        reports,
        manifest,
        written,
        kpca_kept: assembly.kpca_kept,
        feature_bands: features.bands(),
        dropped_pixels: dropped,
    })
}

/// The manifest is the canonical config (replayable as-is) followed by
/// comment lines recording what the run resolved: toolkit version, config
/// hash, seed derivations, feature provenance.
fn build_manifest(cfg: &ScenarioConfig, assembly: &FeatureAssembly, dropped: usize) -> String {
    let config_text = cfg.canonical_text();
    let mut out = config_text.clone();
    out.push_str("# --- manifest ---\n");
    let _ = writeln!(out, "# toolkit_version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "# config_hash = {:016x}", fnv1a64(config_text.as_bytes()));
    let _ = writeln!(
        out,
        "# seed_derivation = splitmix64(splitmix64(master ^ fnv1a64(stage)) ^ index)"
    );
    let _ = writeln!(out, "# stages = kpca-sample, split, svm, rf, rbfnn");
    if let Some(kept) = assembly.kpca_kept {
        let _ = writeln!(out, "# kpca_kept = {kept}");
    }
    let _ = writeln!(out, "# dropped_labeled_pixels = {dropped}");
    let _ = writeln!(out, "# feature_bands = {}", assembly.band_labels.len());
    for (i, label) in assembly.band_labels.iter().enumerate() {
        let _ = writeln!(out, "# band_{i} = {label}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use landfuse_core::raster::DEFAULT_NODATA;

    #[test]
    fn stack_counts_and_labels() {
        let a = RasterGrid::filled(4, 4, 2, 1.0, DEFAULT_NODATA);
        let b = RasterGrid::filled(4, 4, 1, 2.0, DEFAULT_NODATA);
        let (stacked, labels) = stack_features(&[
            (&a, vec!["hyper:0".into(), "hyper:1".into()]),
            (&b, vec!["ndsm".into()]),
        ])
        .unwrap();
        assert_eq!(stacked.bands(), 3);
        assert_eq!(labels, vec!["hyper:0", "hyper:1", "ndsm"]);
    }

    #[test]
    fn stack_rejects_mismatched_dims() {
        let a = RasterGrid::filled(4, 4, 1, 1.0, DEFAULT_NODATA);
        let b = RasterGrid::filled(5, 4, 1, 2.0, DEFAULT_NODATA);
        assert!(stack_features(&[(&a, vec!["a".into()]), (&b, vec!["b".into()])]).is_err());
    }

    #[test]
    fn single_ndsm_recipe_is_identity() {
        let b = RasterGrid::filled(4, 4, 1, 2.5, DEFAULT_NODATA);
        let (stacked, labels) = stack_features(&[(&b, vec!["ndsm".into()])]).unwrap();
        assert_eq!(stacked.bands(), 1);
        assert_eq!(stacked.data(), b.data());
        assert_eq!(labels, vec!["ndsm"]);
    }

    #[test]
    fn mask_invalid_zeroes_nodata_pixels() {
        let mut grid = RasterGrid::filled(2, 2, 2, 1.0, DEFAULT_NODATA);
        grid.set(1, 0, 1, DEFAULT_NODATA);
        let map = ClassMap::new(2, 2, 2, vec![1, 2, 1, 2]).unwrap();
        let (masked, dropped) = mask_invalid(&map, &grid).unwrap();
        assert_eq!(dropped, 1);
        assert_eq!(masked.labels(), &[1, 0, 1, 2]);
    }

    #[test]
    fn palette_extends_past_six() {
        let palette = palette_for(9);
        assert_eq!(palette.len(), 9);
        let mut unique = palette.clone();
        unique.sort();
        unique.dedup();
        assert_eq!(unique.len(), 9);
    }
}
