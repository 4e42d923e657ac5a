//! Synthetic test scene: polygonal regions of six land-cover classes with
//! controlled spectral signatures, object heights, LiDAR-style intensity,
//! and a matching point cloud.
//!
//! The scene is built so that the failure modes of interest actually occur:
//!
//! * grass and trees (and roof-tops and roads) get signatures closer than
//!   the per-band noise, so spectra alone cannot separate them — but their
//!   heights differ by several meters;
//! * every pixel carries a strong spectrally-flat brightness wobble on top
//!   of a small independent per-band noise, the mosaicking-style artifact
//!   that scatters per-pixel classifications of same-height classes (bare
//!   ground against roads differs mostly in brightness) while leaving a
//!   region's central level intact — which is what attribute-profile
//!   smoothing recovers;
//! * the LiDAR intensity separates water well but overlaps heavily across
//!   the other classes.
//!
//! Class ids: 1 bare ground, 2 roof-top, 3 grass, 4 roads, 5 trees,
//! 6 water.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::raster::{ClassMap, RasterGrid, DEFAULT_NODATA};
use crate::seed::stage_rng;
use crate::tin::LidarPoint;

pub const CLASS_BARE: u16 = 1;
pub const CLASS_ROOF: u16 = 2;
pub const CLASS_GRASS: u16 = 3;
pub const CLASS_ROAD: u16 = 4;
pub const CLASS_TREES: u16 = 5;
pub const CLASS_WATER: u16 = 6;
pub const NUM_CLASSES: u16 = 6;

const MIN_SIDE: usize = 48;
const MIN_BANDS: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("scene must be at least {MIN_SIDE}x{MIN_SIDE} pixels, got {0}x{1}")]
    TooSmall(usize, usize),
    #[error("scene needs at least {MIN_BANDS} spectral bands, got {0}")]
    TooFewBands(usize),
    #[error("layout left class {0} with only {1} pixels")]
    DegenerateLayout(u16, usize),
}

/// Scene parameters.
#[derive(Debug, Clone)]
pub struct SceneSpec {
    pub rows: usize,
    pub cols: usize,
    pub bands: usize,
    /// Independent per-band Gaussian noise on the spectra.
    pub noise_sigma: f64,
    /// Per-pixel brightness wobble added equally to every band.
    pub brightness_sigma: f64,
    /// Gaussian noise on the intensity raster and point intensities.
    pub intensity_noise: f64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            rows: 128,
            cols: 128,
            bands: 32,
            noise_sigma: 0.025,
            brightness_sigma: 0.1,
            intensity_noise: 0.06,
        }
    }
}

/// Everything the generator emits. `ndsm` and `intensity` hold the exact
/// ground-truth fields; the point cloud reproduces them through the TIN
/// pipeline.
#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub hyper: RasterGrid,
    pub ndsm: RasterGrid,
    pub intensity: RasterGrid,
    pub class_map: ClassMap,
    pub points: Vec<LidarPoint>,
}

/// Noise-free spectral signature of a class at one band.
///
/// Grass and trees share a vegetation curve, roofs and roads a flat bright
/// curve; within each pair the difference is a sub-noise ripple
/// (`0.2 * noise_sigma` per band), so the pair's signature distance stays
/// below one noise sigma while bare ground and water sit far from
/// everything.
pub fn class_signature(spec: &SceneSpec, class: u16, band: usize) -> f64 {
    let t = band as f64 / (spec.bands - 1).max(1) as f64;
    let ripple = 0.2 * spec.noise_sigma;
    let veg = 0.25 + 0.45 * (-(t - 0.7) * (t - 0.7) / 0.05).exp();
    let built = 0.45 + 0.10 * t;
    match class {
        // Bare ground is the built curve plus a flat offset: the difference
        // from roads points exactly along the brightness wobble, so spectra
        // alone cannot separate the two beyond the wobble's noise floor.
        CLASS_BARE => built + 0.15,
        CLASS_ROOF => built,
        CLASS_GRASS => veg,
        CLASS_ROAD => built + ripple * (core::f64::consts::TAU * t).sin(),
        CLASS_TREES => veg + ripple * (core::f64::consts::TAU * t).cos(),
        CLASS_WATER => 0.30 * (-3.0 * t).exp(),
        _ => 0.0,
    }
}

/// Object height above ground per class, meters.
pub fn class_height(class: u16) -> f64 {
    match class {
        CLASS_ROOF => 6.0,
        CLASS_TREES => 8.0,
        _ => 0.0,
    }
}

/// LiDAR return intensity per class. Water absorbs the pulse; the other
/// classes overlap within the intensity noise, mirroring how little the
/// intensity image separates on its own.
pub fn class_intensity(class: u16) -> f64 {
    match class {
        CLASS_BARE => 0.60,
        CLASS_ROOF => 0.58,
        CLASS_GRASS => 0.56,
        CLASS_ROAD => 0.55,
        CLASS_TREES => 0.52,
        CLASS_WATER => 0.15,
        _ => 0.0,
    }
}

/// Gentle terrain elevation under the scene.
fn terrain(x: f64, y: f64) -> f64 {
    0.01 * x + 0.005 * y
}

/// Even-odd point-in-polygon test.
fn inside_polygon(poly: &[(f64, f64)], x: f64, y: f64) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Paint the class layout: grass background, polygonal patches of the
/// quota classes placed block by block, roads drawn last so they stay
/// continuous.
fn paint_layout(spec: &SceneSpec, seed: u64) -> Vec<u16> {
    let (rows, cols) = (spec.rows, spec.cols);
    let mut labels = vec![CLASS_GRASS; rows * cols];
    let mut rng = stage_rng(seed, "scene-layout", 0);
    let blocks = 4usize;
    let bh = rows as f64 / blocks as f64;
    let bw = cols as f64 / blocks as f64;
    let quota = [CLASS_ROOF, CLASS_TREES, CLASS_BARE, CLASS_WATER];
    for br in 0..blocks {
        for bc in 0..blocks {
            let class = quota[(br * blocks + bc) % quota.len()];
            let cx = (bc as f64 + 0.5) * bw + rng.random_range(-bw / 8.0..bw / 8.0);
            let cy = (br as f64 + 0.5) * bh + rng.random_range(-bh / 8.0..bh / 8.0);
            let base_r = bh.min(bw) * rng.random_range(0.28..0.42);
            let verts = 6usize;
            let poly: Vec<(f64, f64)> = (0..verts)
                .map(|i| {
                    let angle = core::f64::consts::TAU * i as f64 / verts as f64
                        + rng.random_range(-0.2..0.2);
                    let r = base_r * rng.random_range(0.7..1.0);
                    (cx + r * angle.cos(), cy + r * angle.sin())
                })
                .collect();
            let min_r = (cy - base_r).floor().max(0.0) as usize;
            let max_r = ((cy + base_r).ceil() as usize).min(rows - 1);
            let min_c = (cx - base_r).floor().max(0.0) as usize;
            let max_c = ((cx + base_r).ceil() as usize).min(cols - 1);
            for r in min_r..=max_r {
                for c in min_c..=max_c {
                    if inside_polygon(&poly, c as f64 + 0.5, r as f64 + 0.5) {
                        labels[r * cols + c] = class;
                    }
                }
            }
        }
    }
    // Roads: one horizontal and one vertical strip across the whole scene.
    let road_w = (rows.min(cols) / 24).max(3);
    let h_at = rows / 2 - road_w / 2;
    let v_at = cols / 5;
    for r in 0..rows {
        for c in 0..cols {
            if (h_at..h_at + road_w).contains(&r) || (v_at..v_at + road_w).contains(&c) {
                labels[r * cols + c] = CLASS_ROAD;
            }
        }
    }
    labels
}

/// Generate the scene: class layout, noisy spectra with speckle outliers,
/// ground-truth nDSM and intensity rasters, and the classified point cloud
/// (one ground return per pixel, plus a first return on elevated objects).
pub fn generate_synthetic_scene(
    spec: &SceneSpec,
    seed: u64,
) -> Result<SyntheticScene, SceneError> {
    if spec.rows < MIN_SIDE || spec.cols < MIN_SIDE {
        return Err(SceneError::TooSmall(spec.rows, spec.cols));
    }
    if spec.bands < MIN_BANDS {
        return Err(SceneError::TooFewBands(spec.bands));
    }
    let (rows, cols) = (spec.rows, spec.cols);
    let labels = paint_layout(spec, seed);
    let counts = {
        let mut c = vec![0usize; usize::from(NUM_CLASSES) + 1];
        for &l in &labels {
            c[usize::from(l)] += 1;
        }
        c
    };
    for class in 1..=NUM_CLASSES {
        let n = counts[usize::from(class)];
        if n < 25 {
            return Err(SceneError::DegenerateLayout(class, n));
        }
    }
    let class_map = ClassMap::new(rows, cols, NUM_CLASSES, labels.clone())
        .expect("layout labels are in range");

    // Spectra: signature + per-pixel brightness wobble (flat across bands)
    // + small independent per-band noise.
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut noise_rng = stage_rng(seed, "scene-noise", 0);
    let mut brightness_rng = stage_rng(seed, "scene-brightness", 0);
    let brightness: Vec<f64> = (0..rows * cols)
        .map(|_| spec.brightness_sigma * normal.sample(&mut brightness_rng))
        .collect();
    let mut hyper_data = vec![0f32; rows * cols * spec.bands];
    for p in 0..rows * cols {
        let class = labels[p];
        for b in 0..spec.bands {
            let v = class_signature(spec, class, b)
                + brightness[p]
                + spec.noise_sigma * normal.sample(&mut noise_rng);
            hyper_data[b * rows * cols + p] = v as f32;
        }
    }
    let hyper = RasterGrid::new(rows, cols, spec.bands, hyper_data, DEFAULT_NODATA)
        .expect("finite spectra")
        .with_geo(0.0, rows as f64, 1.0);

    // Ground-truth surfaces.
    let mut ndsm_data = vec![0f32; rows * cols];
    let mut intensity_data = vec![0f32; rows * cols];
    let mut surface_rng = stage_rng(seed, "scene-surfaces", 0);
    for p in 0..rows * cols {
        ndsm_data[p] = class_height(labels[p]) as f32;
        intensity_data[p] = (class_intensity(labels[p])
            + spec.intensity_noise * normal.sample(&mut surface_rng))
            as f32;
    }
    let ndsm = RasterGrid::new(rows, cols, 1, ndsm_data, DEFAULT_NODATA)
        .expect("finite heights")
        .with_geo(0.0, rows as f64, 1.0);
    let intensity = RasterGrid::new(rows, cols, 1, intensity_data, DEFAULT_NODATA)
        .expect("finite intensities")
        .with_geo(0.0, rows as f64, 1.0);

    // Point cloud: pixel centers with planimetric jitter. Map y runs
    // against row index (north-up anchor at y = rows).
    let mut point_rng = stage_rng(seed, "scene-points", 0);
    let mut points = Vec::with_capacity(rows * cols * 2);
    for r in 0..rows {
        for c in 0..cols {
            let p = r * cols + c;
            let class = labels[p];
            let height = class_height(class);
            let jitter = |rng: &mut rand_chacha::ChaCha8Rng| {
                (rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3))
            };
            let (dx, dy) = jitter(&mut point_rng);
            let (x, y) = (c as f64 + 0.5 + dx, rows as f64 - (r as f64 + 0.5) + dy);
            let ground_z = terrain(x, y);
            if height == 0.0 {
                points.push(LidarPoint {
                    x,
                    y,
                    z: ground_z,
                    intensity: (class_intensity(class)
                        + spec.intensity_noise * normal.sample(&mut point_rng))
                    .max(0.0),
                    return_number: 1,
                    is_ground: true,
                });
            } else {
                // First return off the object top, later ground return
                // displaced by its own jitter.
                points.push(LidarPoint {
                    x,
                    y,
                    z: ground_z + height,
                    intensity: (class_intensity(class)
                        + spec.intensity_noise * normal.sample(&mut point_rng))
                    .max(0.0),
                    return_number: 1,
                    is_ground: false,
                });
                let (dx2, dy2) = jitter(&mut point_rng);
                let (gx, gy) = (c as f64 + 0.5 + dx2, rows as f64 - (r as f64 + 0.5) + dy2);
                points.push(LidarPoint {
                    x: gx,
                    y: gy,
                    z: terrain(gx, gy),
                    intensity: (0.25 + spec.intensity_noise * normal.sample(&mut point_rng))
                        .max(0.0),
                    return_number: 2,
                    is_ground: true,
                });
            }
        }
    }

    Ok(SyntheticScene { hyper, ndsm, intensity, class_map, points })
}

impl SyntheticScene {
    /// Pixels whose `margin`-neighborhood lies in one class: region
    /// interiors, away from boundary interpolation effects.
    pub fn interior_mask(&self, margin: usize) -> Vec<bool> {
        let (rows, cols) = (self.class_map.rows(), self.class_map.cols());
        let mut mask = vec![false; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                let class = self.class_map.get(r, c);
                let mut interior = r >= margin
                    && c >= margin
                    && r + margin < rows
                    && c + margin < cols;
                if interior {
                    'scan: for dr in r - margin..=r + margin {
                        for dc in c - margin..=c + margin {
                            if self.class_map.get(dr, dc) != class {
                                interior = false;
                                break 'scan;
                            }
                        }
                    }
                }
                mask[r * cols + c] = interior;
            }
        }
        mask
    }
}
