//! Scenario configuration: a flat `key = value` text format with
//! comma-separated lists, diff-friendly and replayable (the manifest a run
//! emits is itself a valid config).

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use landfuse_core::classify::ClassifierKind;

use crate::error::{CliError, Result};

/// One entry of the feature recipe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureItem {
    Hyper,
    Kpca,
    EsdapKpca,
    Ndsm,
    Intensity,
}

impl FeatureItem {
    pub fn name(&self) -> &'static str {
        match self {
            FeatureItem::Hyper => "hyper",
            FeatureItem::Kpca => "kpca",
            FeatureItem::EsdapKpca => "esdap_kpca",
            FeatureItem::Ndsm => "ndsm",
            FeatureItem::Intensity => "intensity",
        }
    }

    fn parse(text: &str) -> Result<Self> {
        match text {
            "hyper" => Ok(FeatureItem::Hyper),
            "kpca" => Ok(FeatureItem::Kpca),
            "esdap_kpca" => Ok(FeatureItem::EsdapKpca),
            "ndsm" => Ok(FeatureItem::Ndsm),
            "intensity" => Ok(FeatureItem::Intensity),
            other => Err(CliError::data(format!("unknown recipe item {other:?}"))),
        }
    }
}

/// Attribute threshold selection: automatic with a count, or explicit.
#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdSpec {
    Auto(usize),
    Explicit(Vec<f64>),
}

impl ThresholdSpec {
    fn parse(text: &str) -> Result<Self> {
        if let Some(count) = text.strip_prefix("auto:") {
            let count = count
                .parse()
                .map_err(|_| CliError::data(format!("bad auto threshold count {text:?}")))?;
            return Ok(ThresholdSpec::Auto(count));
        }
        let values: std::result::Result<Vec<f64>, _> =
            text.split(',').map(|v| v.trim().parse::<f64>()).collect();
        match values {
            Ok(v) if !v.is_empty() => Ok(ThresholdSpec::Explicit(v)),
            _ => Err(CliError::data(format!("bad threshold list {text:?}"))),
        }
    }

    fn render(&self) -> String {
        match self {
            ThresholdSpec::Auto(n) => format!("auto:{n}"),
            ThresholdSpec::Explicit(v) => {
                v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
            }
        }
    }
}

/// Full description of one scenario run.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub scenario: u8,
    pub hyper: Option<PathBuf>,
    pub ndsm: Option<PathBuf>,
    pub intensity: Option<PathBuf>,
    pub classmap: PathBuf,
    pub recipe: Vec<FeatureItem>,
    pub classifiers: Vec<ClassifierKind>,
    pub runs: usize,
    pub seed: u64,
    pub fraction: f64,
    pub min_per_class: usize,
    pub kpca_samples: usize,
    pub kpca_variance: f64,
    pub esdap_area_thresholds: ThresholdSpec,
    pub esdap_std_thresholds: ThresholdSpec,
    pub esdap_levels: u32,
    pub svm_c_grid: Option<Vec<f64>>,
    pub svm_gamma_grid: Option<Vec<f64>>,
    pub svm_folds: usize,
    pub rf_trees: usize,
    pub rbfnn_centers_per_class: usize,
    pub output_dir: PathBuf,
    pub render_maps: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scenario: 1,
            hyper: None,
            ndsm: None,
            intensity: None,
            classmap: PathBuf::new(),
            recipe: Vec::new(),
            classifiers: vec![ClassifierKind::Svm],
            runs: 10,
            seed: 0,
            fraction: 0.01,
            min_per_class: 20,
            kpca_samples: 500,
            kpca_variance: 0.95,
            esdap_area_thresholds: ThresholdSpec::Auto(2),
            esdap_std_thresholds: ThresholdSpec::Auto(2),
            esdap_levels: 256,
            svm_c_grid: None,
            svm_gamma_grid: None,
            svm_folds: 5,
            rf_trees: 200,
            rbfnn_centers_per_class: 5,
            output_dir: PathBuf::from("scenario-out"),
            render_maps: true,
        }
    }
}

fn parse_list<T, F>(text: &str, f: F) -> Result<Vec<T>>
where
    F: Fn(&str) -> Result<T>,
{
    text.split(',').map(|item| f(item.trim())).collect()
}

fn parse_classifier(text: &str) -> Result<ClassifierKind> {
    match text {
        "svm" => Ok(ClassifierKind::Svm),
        "rf" => Ok(ClassifierKind::RandomForest),
        "rbfnn" => Ok(ClassifierKind::Rbfnn),
        other => Err(CliError::data(format!("unknown classifier {other:?}"))),
    }
}

impl ScenarioConfig {
    /// Parse the flat text form. Relative paths resolve against `base_dir`
    /// (the config file's directory).
    pub fn parse(text: &str, base_dir: &Path) -> Result<ScenarioConfig> {
        let mut cfg = ScenarioConfig::default();
        let mut seen: BTreeSet<String> = BTreeSet::new();
        let resolve = |value: &str| -> PathBuf {
            let p = PathBuf::from(value);
            if p.is_absolute() {
                p
            } else {
                base_dir.join(p)
            }
        };
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::data(format!(
                    "config line {}: expected `key = value`, got {raw_line:?}",
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if !seen.insert(key.to_string()) {
                return Err(CliError::data(format!("config key {key:?} appears twice")));
            }
            let bad =
                |what: &str| CliError::data(format!("config key {key}: {what}: {value:?}"));
            match key {
                "scenario" => cfg.scenario = value.parse().map_err(|_| bad("not a number"))?,
                "hyper" => cfg.hyper = Some(resolve(value)),
                "ndsm" => cfg.ndsm = Some(resolve(value)),
                "intensity" => cfg.intensity = Some(resolve(value)),
                "classmap" => cfg.classmap = resolve(value),
                "recipe" => cfg.recipe = parse_list(value, FeatureItem::parse)?,
                "classifiers" => cfg.classifiers = parse_list(value, parse_classifier)?,
                "runs" => cfg.runs = value.parse().map_err(|_| bad("not a count"))?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad("not a seed"))?,
                "fraction" => cfg.fraction = value.parse().map_err(|_| bad("not a number"))?,
                "min_per_class" => {
                    cfg.min_per_class = value.parse().map_err(|_| bad("not a count"))?
                }
                "kpca_samples" => {
                    cfg.kpca_samples = value.parse().map_err(|_| bad("not a count"))?
                }
                "kpca_variance" => {
                    cfg.kpca_variance = value.parse().map_err(|_| bad("not a number"))?
                }
                "esdap_area_thresholds" => {
                    cfg.esdap_area_thresholds = ThresholdSpec::parse(value)?
                }
                "esdap_std_thresholds" => cfg.esdap_std_thresholds = ThresholdSpec::parse(value)?,
                "esdap_levels" => {
                    cfg.esdap_levels = value.parse().map_err(|_| bad("not a count"))?
                }
                "svm_c_grid" => {
                    cfg.svm_c_grid = Some(parse_list(value, |v| {
                        v.parse::<f64>().map_err(|_| bad("not a number list"))
                    })?)
                }
                "svm_gamma_grid" => {
                    cfg.svm_gamma_grid = Some(parse_list(value, |v| {
                        v.parse::<f64>().map_err(|_| bad("not a number list"))
                    })?)
                }
                "svm_folds" => cfg.svm_folds = value.parse().map_err(|_| bad("not a count"))?,
                "rf_trees" => cfg.rf_trees = value.parse().map_err(|_| bad("not a count"))?,
                "rbfnn_centers_per_class" => {
                    cfg.rbfnn_centers_per_class =
                        value.parse().map_err(|_| bad("not a count"))?
                }
                "output_dir" => cfg.output_dir = resolve(value),
                "render_maps" => {
                    cfg.render_maps = match value {
                        "true" | "1" => true,
                        "false" | "0" => false,
                        _ => return Err(bad("expected true or false")),
                    }
                }
                other => {
                    return Err(CliError::data(format!("unknown config key {other:?}")));
                }
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base_dir.join(&cfg.output_dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.recipe.is_empty() {
            return Err(CliError::data("recipe must not be empty"));
        }
        if self.classifiers.is_empty() {
            return Err(CliError::data("classifiers must not be empty"));
        }
        if self.classmap.as_os_str().is_empty() {
            return Err(CliError::data("classmap is required"));
        }
        if self.runs == 0 {
            return Err(CliError::data("runs must be at least 1"));
        }
        let needs_hyper = self.recipe.iter().any(|i| {
            matches!(i, FeatureItem::Hyper | FeatureItem::Kpca | FeatureItem::EsdapKpca)
        });
        if needs_hyper && self.hyper.is_none() {
            return Err(CliError::data("recipe references the hyperspectral cube but no `hyper` path is set"));
        }
        if self.recipe.contains(&FeatureItem::Ndsm) && self.ndsm.is_none() {
            return Err(CliError::data("recipe references ndsm but no `ndsm` path is set"));
        }
        if self.recipe.contains(&FeatureItem::Intensity) && self.intensity.is_none() {
            return Err(CliError::data(
                "recipe references intensity but no `intensity` path is set",
            ));
        }
        Ok(())
    }

    /// Canonical text form: fixed key order, resolved paths. Parsing this
    /// text reproduces the configuration, which is what makes manifests
    /// replayable.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("scenario", self.scenario.to_string());
        if let Some(p) = &self.hyper {
            kv("hyper", p.display().to_string());
        }
        if let Some(p) = &self.ndsm {
            kv("ndsm", p.display().to_string());
        }
        if let Some(p) = &self.intensity {
            kv("intensity", p.display().to_string());
        }
        kv("classmap", self.classmap.display().to_string());
        kv(
            "recipe",
            self.recipe.iter().map(|i| i.name()).collect::<Vec<_>>().join(", "),
        );
        kv(
            "classifiers",
            self.classifiers.iter().map(|c| c.name()).collect::<Vec<_>>().join(", "),
        );
        kv("runs", self.runs.to_string());
        kv("seed", self.seed.to_string());
        kv("fraction", format!("{:?}", self.fraction));
        kv("min_per_class", self.min_per_class.to_string());
        kv("kpca_samples", self.kpca_samples.to_string());
        kv("kpca_variance", format!("{:?}", self.kpca_variance));
        kv("esdap_area_thresholds", self.esdap_area_thresholds.render());
        kv("esdap_std_thresholds", self.esdap_std_thresholds.render());
        kv("esdap_levels", self.esdap_levels.to_string());
        if let Some(grid) = &self.svm_c_grid {
            kv(
                "svm_c_grid",
                grid.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", "),
            );
        }
        if let Some(grid) = &self.svm_gamma_grid {
            kv(
                "svm_gamma_grid",
                grid.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", "),
            );
        }
        kv("svm_folds", self.svm_folds.to_string());
        kv("rf_trees", self.rf_trees.to_string());
        kv("rbfnn_centers_per_class", self.rbfnn_centers_per_class.to_string());
        kv("output_dir", self.output_dir.display().to_string());
        kv("render_maps", self.render_maps.to_string());
        out
    }
}
