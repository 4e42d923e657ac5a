//! Multi-band raster data model: grids, quantization, class maps.
//!
//! Conventions used across the toolkit:
//!
//! * Pixel data is band-sequential (all of band 0, then band 1, ...), each
//!   band stored row-major.
//! * The geo anchor is the top-left corner of the top-left pixel; map `y`
//!   decreases downward, so pixel `(row, col)` has center
//!   `(origin_x + (col + 0.5) * pixel_size, origin_y - (row + 0.5) * pixel_size)`.
//! * A pixel equal to the `nodata` sentinel is missing. Operations consuming
//!   a nodata pixel emit nodata unless documented otherwise.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

/// Default nodata sentinel for rasters produced by this crate.
pub const DEFAULT_NODATA: f32 = -9999.0;

#[derive(Debug, Error, PartialEq)]
pub enum RasterError {
    #[error("raster dimensions {rows}x{cols}x{bands} do not match {len} data values")]
    SizeMismatch { rows: usize, cols: usize, bands: usize, len: usize },
    #[error("rows, cols and bands must all be at least 1")]
    EmptyDimensions,
    #[error("pixel_size must be positive, got {0}")]
    BadPixelSize(f64),
    #[error("non-nodata value at band {band}, pixel {pixel} is not finite")]
    NonFiniteValue { band: usize, pixel: usize },
    #[error("band index {0} out of range ({1} bands)")]
    BandOutOfRange(usize, usize),
    #[error("quantization levels {0} outside [2, 65536]")]
    BadLevels(u32),
    #[error("band has no valid (non-nodata) pixels")]
    EmptyBand,
    #[error("class label {label} exceeds declared class count {classes}")]
    LabelOutOfRange { label: u16, classes: u16 },
    #[error("class map dimensions {0}x{1} do not match {2} labels")]
    ClassMapSize(usize, usize, usize),
    #[error("class label {0} has no palette entry ({1} colors)")]
    MissingPaletteEntry(u16, usize),
}

/// Multi-band raster of 32-bit reals with a geo anchor and a nodata sentinel.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterGrid {
    rows: usize,
    cols: usize,
    bands: usize,
    data: Vec<f32>,
    pub nodata: f32,
    pub origin_x: f64,
    pub origin_y: f64,
    pub pixel_size: f64,
}

impl RasterGrid {
    /// Build a grid from band-sequential data, validating the invariants.
    pub fn new(
        rows: usize,
        cols: usize,
        bands: usize,
        data: Vec<f32>,
        nodata: f32,
    ) -> Result<Self, RasterError> {
        let grid = RasterGrid {
            rows,
            cols,
            bands,
            data,
            nodata,
            origin_x: 0.0,
            origin_y: 0.0,
            pixel_size: 1.0,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Grid of constant `value`.
    pub fn filled(rows: usize, cols: usize, bands: usize, value: f32, nodata: f32) -> Self {
        RasterGrid {
            rows,
            cols,
            bands,
            data: vec![value; rows * cols * bands],
            nodata,
            origin_x: 0.0,
            origin_y: 0.0,
            pixel_size: 1.0,
        }
    }

    pub fn with_geo(mut self, origin_x: f64, origin_y: f64, pixel_size: f64) -> Self {
        self.origin_x = origin_x;
        self.origin_y = origin_y;
        self.pixel_size = pixel_size;
        self
    }

    /// Check every invariant; used after construction and before writing.
    pub fn validate(&self) -> Result<(), RasterError> {
        if self.rows == 0 || self.cols == 0 || self.bands == 0 {
            return Err(RasterError::EmptyDimensions);
        }
        if self.data.len() != self.rows * self.cols * self.bands {
            return Err(RasterError::SizeMismatch {
                rows: self.rows,
                cols: self.cols,
                bands: self.bands,
                len: self.data.len(),
            });
        }
        if !(self.pixel_size > 0.0) {
            return Err(RasterError::BadPixelSize(self.pixel_size));
        }
        let plane = self.rows * self.cols;
        for (i, &v) in self.data.iter().enumerate() {
            if !self.is_nodata(v) && !v.is_finite() {
                return Err(RasterError::NonFiniteValue { band: i / plane, pixel: i % plane });
            }
        }
        Ok(())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn bands(&self) -> usize {
        self.bands
    }

    #[inline]
    pub fn pixels(&self) -> usize {
        self.rows * self.cols
    }

    #[inline]
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn is_nodata(&self, v: f32) -> bool {
        v == self.nodata || (self.nodata.is_nan() && v.is_nan())
    }

    #[inline]
    pub fn band(&self, b: usize) -> &[f32] {
        let plane = self.rows * self.cols;
        &self.data[b * plane..(b + 1) * plane]
    }

    #[inline]
    pub fn band_mut(&mut self, b: usize) -> &mut [f32] {
        let plane = self.rows * self.cols;
        &mut self.data[b * plane..(b + 1) * plane]
    }

    #[inline]
    pub fn get(&self, band: usize, row: usize, col: usize) -> f32 {
        self.data[band * self.rows * self.cols + row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, band: usize, row: usize, col: usize, v: f32) {
        self.data[band * self.rows * self.cols + row * self.cols + col] = v;
    }

    /// Map coordinates of the center of pixel `(row, col)`.
    #[inline]
    pub fn pixel_center(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.origin_x + (col as f64 + 0.5) * self.pixel_size,
            self.origin_y - (row as f64 + 0.5) * self.pixel_size,
        )
    }

    /// True when no band holds nodata at this flat pixel index.
    pub fn pixel_valid(&self, pixel: usize) -> bool {
        let plane = self.rows * self.cols;
        (0..self.bands).all(|b| !self.is_nodata(self.data[b * plane + pixel]))
    }

    /// The spectrum at a flat pixel index as `f64`.
    pub fn pixel_vector(&self, pixel: usize, out: &mut [f64]) {
        let plane = self.rows * self.cols;
        for (b, slot) in out.iter_mut().enumerate() {
            *slot = f64::from(self.data[b * plane + pixel]);
        }
    }

    /// Concatenate the bands of several same-shaped grids into one.
    ///
    /// The output keeps the geo anchor and nodata sentinel of the first
    /// input; values equal to an input's own nodata are rewritten to it.
    pub fn stack(grids: &[&RasterGrid]) -> Result<RasterGrid, RasterError> {
        let first = grids.first().ok_or(RasterError::EmptyDimensions)?;
        let mut data = Vec::new();
        let mut bands = 0;
        for g in grids {
            if g.rows != first.rows || g.cols != first.cols {
                return Err(RasterError::SizeMismatch {
                    rows: g.rows,
                    cols: g.cols,
                    bands: g.bands,
                    len: first.rows * first.cols,
                });
            }
            bands += g.bands;
            if g.nodata == first.nodata {
                data.extend_from_slice(&g.data);
            } else {
                data.extend(g.data.iter().map(|&v| {
                    if g.is_nodata(v) {
                        first.nodata
                    } else {
                        v
                    }
                }));
            }
        }
        let mut out = RasterGrid::new(first.rows, first.cols, bands, data, first.nodata)?;
        out.origin_x = first.origin_x;
        out.origin_y = first.origin_y;
        out.pixel_size = first.pixel_size;
        Ok(out)
    }
}

/// Single-band integer raster, the input domain of the tree of shapes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub rows: usize,
    pub cols: usize,
    /// Number of quantization levels; values lie in `0..levels`.
    pub levels: u32,
    pub data: Vec<u16>,
}

impl GrayImage {
    pub fn new(rows: usize, cols: usize, levels: u32, data: Vec<u16>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        debug_assert!(data.iter().all(|&v| u32::from(v) < levels));
        GrayImage { rows, cols, levels, data }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.data[row * self.cols + col]
    }

    /// Gray-level complement `levels - 1 - v`.
    pub fn complement(&self) -> GrayImage {
        let top = (self.levels - 1) as u16;
        GrayImage {
            rows: self.rows,
            cols: self.cols,
            levels: self.levels,
            data: self.data.iter().map(|&v| top - v).collect(),
        }
    }
}

/// Linear min-max quantization of one band onto `{0 .. levels-1}`.
///
/// Nodata pixels map to level 0 (callers that build trees fill holes first
/// with [`fill_nodata_nearest`]). A constant band maps to all zeros. The
/// mapping is monotone non-decreasing in the input value.
pub fn quantize_band(grid: &RasterGrid, band: usize, levels: u32) -> Result<GrayImage, RasterError> {
    if band >= grid.bands() {
        return Err(RasterError::BandOutOfRange(band, grid.bands()));
    }
    if !(2..=65536).contains(&levels) {
        return Err(RasterError::BadLevels(levels));
    }
    let values = grid.band(band);
    let mut min = f32::INFINITY;
    let mut max = f32::NEG_INFINITY;
    let mut any = false;
    for &v in values {
        if grid.is_nodata(v) {
            continue;
        }
        any = true;
        min = min.min(v);
        max = max.max(v);
    }
    if !any {
        return Err(RasterError::EmptyBand);
    }
    let top = (levels - 1) as f64;
    let range = f64::from(max) - f64::from(min);
    let data = values
        .iter()
        .map(|&v| {
            if grid.is_nodata(v) || range == 0.0 {
                0u16
            } else {
                let t = (f64::from(v) - f64::from(min)) / range;
                ((t * top + 0.5).floor() as u32).min(levels - 1) as u16
            }
        })
        .collect();
    Ok(GrayImage::new(grid.rows(), grid.cols(), levels, data))
}

/// Fill nodata holes in one band with the value of the nearest valid pixel.
///
/// Implemented as repeated 8-neighbor dilation: on each pass a hole adjacent
/// to at least one valid pixel takes the value of the first valid neighbor
/// in fixed scan order (N, NE, E, SE, S, SW, W, NW). Deterministic, and
/// exact Euclidean nearest within one ring.
pub fn fill_nodata_nearest(grid: &RasterGrid, band: usize) -> Result<Vec<f32>, RasterError> {
    if band >= grid.bands() {
        return Err(RasterError::BandOutOfRange(band, grid.bands()));
    }
    let (rows, cols) = (grid.rows(), grid.cols());
    let mut current: Vec<f32> = grid.band(band).to_vec();
    if current.iter().all(|&v| grid.is_nodata(v)) {
        return Err(RasterError::EmptyBand);
    }
    const OFFSETS: [(isize, isize); 8] =
        [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)];
    loop {
        let mut next = current.clone();
        let mut changed = false;
        for r in 0..rows {
            for c in 0..cols {
                let i = r * cols + c;
                if !grid.is_nodata(current[i]) {
                    continue;
                }
                for (dr, dc) in OFFSETS {
                    let nr = r as isize + dr;
                    let nc = c as isize + dc;
                    if nr < 0 || nc < 0 || nr >= rows as isize || nc >= cols as isize {
                        continue;
                    }
                    let v = current[nr as usize * cols + nc as usize];
                    if !grid.is_nodata(v) {
                        next[i] = v;
                        changed = true;
                        break;
                    }
                }
            }
        }
        current = next;
        if !changed {
            break;
        }
    }
    Ok(current)
}

/// Per-pixel class labels: 0 is unlabeled, 1..=K are the thematic classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMap {
    rows: usize,
    cols: usize,
    num_classes: u16,
    labels: Vec<u16>,
}

impl ClassMap {
    pub fn new(
        rows: usize,
        cols: usize,
        num_classes: u16,
        labels: Vec<u16>,
    ) -> Result<Self, RasterError> {
        if labels.len() != rows * cols {
            return Err(RasterError::ClassMapSize(rows, cols, labels.len()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l > num_classes) {
            return Err(RasterError::LabelOutOfRange { label: bad, classes: num_classes });
        }
        Ok(ClassMap { rows, cols, num_classes, labels })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn num_classes(&self) -> u16 {
        self.num_classes
    }

    #[inline]
    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.labels[row * self.cols + col]
    }

    /// Count of pixels per class, index 0 holding the unlabeled count.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; usize::from(self.num_classes) + 1];
        for &l in &self.labels {
            counts[usize::from(l)] += 1;
        }
        counts
    }
}

/// RGB color triple.
pub type Rgb = [u8; 3];

/// Palette for the six thematic classes: bare ground, roof-top, grass,
/// roads, trees, water.
pub fn default_palette() -> Vec<Rgb> {
    vec![
        [168, 120, 72],  // bare ground
        [200, 50, 50],   // roof-top
        [120, 200, 80],  // grass
        [130, 130, 130], // roads
        [20, 110, 40],   // trees
        [40, 80, 200],   // water
    ]
}

/// Render a class map into an RGB pixel buffer (3 bytes per pixel,
/// row-major). Label 0 renders black; other labels index the palette.
pub fn class_map_to_rgb(map: &ClassMap, palette: &[Rgb]) -> Result<Vec<u8>, RasterError> {
    let mut out = Vec::with_capacity(map.rows() * map.cols() * 3);
    for &label in map.labels() {
        if label == 0 {
            out.extend_from_slice(&[0, 0, 0]);
        } else {
            let color = palette
                .get(usize::from(label) - 1)
                .ok_or(RasterError::MissingPaletteEntry(label, palette.len()))?;
            out.extend_from_slice(color);
        }
    }
    Ok(out)
}
