//! Self-dual attribute profiles: automatic threshold plans, the per-band
//! profile (original image plus its filterings at increasing thresholds),
//! and the extended profile concatenated over several base components.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::raster::{self, GrayImage, RasterGrid};
use crate::tos::{self, Attribute, AttributeTable, TosError, TreeOfShapes};

/// Threshold plan for one attribute. `degenerate` flags a collapsed
/// distribution where only a single threshold could be derived.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdPlan {
    pub values: Vec<f64>,
    pub degenerate: bool,
}

/// Derive `count` strictly increasing thresholds from the non-root node
/// attributes.
///
/// Area thresholds are log-spaced interior points between the 5th and 95th
/// percentiles of the non-root areas; standard-deviation thresholds are the
/// interior quantiles `i / (count + 1)`. Duplicate candidates collapse and
/// are back-filled with midpoints where possible; a fully collapsed
/// distribution yields a single threshold flagged degenerate.
pub fn auto_thresholds(
    attrs: &AttributeTable,
    attribute: Attribute,
    count: usize,
) -> Result<ThresholdPlan, TosError> {
    if count == 0 {
        return Err(TosError::BadThresholdCount);
    }
    if attrs.area.len() < 2 {
        return Err(TosError::NoInnerNodes);
    }
    let mut values: Vec<f64> = match attribute {
        Attribute::Area => attrs.area[1..].iter().map(|&a| f64::from(a)).collect(),
        Attribute::StdDev => attrs.stddev[1..].to_vec(),
    };
    values.sort_by(f64::total_cmp);
    let quantile = |vals: &[f64], q: f64| -> f64 {
        let idx = (q * (vals.len() - 1) as f64).round() as usize;
        vals[idx.min(vals.len() - 1)]
    };
    let mut out: Vec<f64> = match attribute {
        Attribute::Area => {
            let lo = quantile(&values, 0.05);
            let hi = quantile(&values, 0.95);
            if lo == hi {
                return Ok(ThresholdPlan { values: vec![lo], degenerate: true });
            }
            let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
            (1..=count)
                .map(|i| (ln_lo + (ln_hi - ln_lo) * i as f64 / (count + 1) as f64).exp())
                .collect()
        }
        Attribute::StdDev => {
            if values.first() == values.last() {
                return Ok(ThresholdPlan { values: vec![values[0]], degenerate: true });
            }
            (1..=count).map(|i| quantile(&values, i as f64 / (count + 1) as f64)).collect()
        }
    };
    out.sort_by(f64::total_cmp);
    out.dedup();
    // Back-fill collapsed duplicates by inserting midpoints between the
    // widest remaining gaps until the plan is full or no gap is left.
    while out.len() < count {
        let mut best_gap = 0.0;
        let mut best_at = None;
        for i in 0..out.len() - 1 {
            let gap = out[i + 1] - out[i];
            if gap > best_gap {
                best_gap = gap;
                best_at = Some(i);
            }
        }
        match best_at {
            Some(i) if best_gap > 0.0 => {
                let mid = (out[i] + out[i + 1]) / 2.0;
                if out.contains(&mid) {
                    break;
                }
                out.insert(i + 1, mid);
            }
            _ => break,
        }
    }
    let degenerate = out.len() < count;
    Ok(ThresholdPlan { values: out, degenerate })
}

/// Which filtering produced a profile plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileKind {
    Original,
    Area,
    StdDev,
}

/// Provenance of one plane in a profile stack.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTag {
    /// Index of the base component the plane was filtered from.
    pub component: usize,
    pub kind: ProfileKind,
    /// Threshold applied; 0 for the original plane.
    pub threshold: f64,
}

impl ProfileTag {
    /// Compact `component:kind:threshold` form used in raster headers.
    pub fn label(&self) -> String {
        match self.kind {
            ProfileKind::Original => format!("{}:original", self.component),
            ProfileKind::Area => format!("{}:area:{}", self.component, self.threshold),
            ProfileKind::StdDev => format!("{}:std:{}", self.component, self.threshold),
        }
    }
}

/// Ordered profile planes with provenance.
///
/// Plane values are gray levels mapped back onto the normalized `[0, 1]`
/// scale of the base component (`level / (levels - 1)`): filtering happens
/// on the quantized image, but the profile features live in the normalized
/// domain of the component they filter.
#[derive(Debug, Clone)]
pub struct ProfileStack {
    pub rows: usize,
    pub cols: usize,
    pub planes: Vec<(ProfileTag, Vec<f32>)>,
}

impl ProfileStack {
    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }

    /// Bundle the planes into a multi-band raster, re-imposing nodata from a
    /// mask of originally missing pixels (nodata propagates through the
    /// profiles even though trees are built on hole-filled bands).
    pub fn to_raster(&self, nodata: f32, nodata_mask: Option<&[bool]>) -> RasterGrid {
        let plane_len = self.rows * self.cols;
        let mut data = Vec::with_capacity(plane_len * self.planes.len());
        for (_, plane) in &self.planes {
            match nodata_mask {
                Some(mask) => data
                    .extend(plane.iter().zip(mask).map(|(&v, &m)| if m { nodata } else { v })),
                None => data.extend_from_slice(plane),
            }
        }
        let mut grid = RasterGrid::new(self.rows, self.cols, self.planes.len(), data, nodata)
            .expect("profile planes share the stack dimensions");
        grid.pixel_size = 1.0;
        grid
    }

    pub fn labels(&self) -> Vec<String> {
        self.planes.iter().map(|(tag, _)| tag.label()).collect()
    }
}

/// Parameters for profile construction.
#[derive(Debug, Clone)]
pub struct ProfileParams {
    /// Number of area thresholds (ignored when `area_thresholds` is set).
    pub area_count: usize,
    /// Number of standard-deviation thresholds (ignored when
    /// `std_thresholds` is set).
    pub std_count: usize,
    /// Quantization levels applied to each base component.
    pub levels: u32,
    /// Explicit area thresholds overriding the automatic plan.
    pub area_thresholds: Option<Vec<f64>>,
    /// Explicit standard-deviation thresholds overriding the automatic plan.
    pub std_thresholds: Option<Vec<f64>>,
}

impl Default for ProfileParams {
    fn default() -> Self {
        ProfileParams {
            area_count: 2,
            std_count: 2,
            levels: 256,
            area_thresholds: None,
            std_thresholds: None,
        }
    }
}

fn plan_for(
    tree_attrs: &AttributeTable,
    attribute: Attribute,
    count: usize,
    explicit: &Option<Vec<f64>>,
) -> Result<Vec<f64>, TosError> {
    if let Some(values) = explicit {
        let mut v = values.clone();
        v.sort_by(f64::total_cmp);
        return Ok(v);
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    Ok(auto_thresholds(tree_attrs, attribute, count)?.values)
}

/// Profile of one quantized band: the original plane followed by the area
/// filterings then the standard-deviation filterings, thresholds ascending.
pub fn sdap(
    band: &GrayImage,
    params: &ProfileParams,
    component: usize,
) -> Result<ProfileStack, TosError> {
    let tree = tos::build_tree(band)?;
    let attrs = tos::compute_attributes(&tree, band);
    sdap_with_tree(band, &tree, &attrs, params, component)
}

fn sdap_with_tree(
    band: &GrayImage,
    tree: &TreeOfShapes,
    attrs: &AttributeTable,
    params: &ProfileParams,
    component: usize,
) -> Result<ProfileStack, TosError> {
    let top = (band.levels - 1).max(1) as f32;
    let to_f32 =
        |img: &GrayImage| -> Vec<f32> { img.data.iter().map(|&v| f32::from(v) / top).collect() };
    let mut planes = Vec::new();
    planes.push((
        ProfileTag { component, kind: ProfileKind::Original, threshold: 0.0 },
        to_f32(band),
    ));
    let wants_filters = params.area_count > 0
        || params.std_count > 0
        || params.area_thresholds.is_some()
        || params.std_thresholds.is_some();
    if wants_filters && tree.node_count() > 1 {
        for lambda in plan_for(attrs, Attribute::Area, params.area_count, &params.area_thresholds)?
        {
            let filtered = tos::filter_tree(tree, attrs, Attribute::Area, lambda);
            planes.push((
                ProfileTag { component, kind: ProfileKind::Area, threshold: lambda },
                to_f32(&filtered),
            ));
        }
        for lambda in plan_for(attrs, Attribute::StdDev, params.std_count, &params.std_thresholds)?
        {
            let filtered = tos::filter_tree(tree, attrs, Attribute::StdDev, lambda);
            planes.push((
                ProfileTag { component, kind: ProfileKind::StdDev, threshold: lambda },
                to_f32(&filtered),
            ));
        }
    } else if wants_filters {
        // A flat band has no inner nodes: every filtering is the band
        // itself, so emit the requested number of copies to keep the stack
        // length contract.
        let n = params.area_count.max(params.area_thresholds.as_ref().map_or(0, Vec::len))
            + params.std_count.max(params.std_thresholds.as_ref().map_or(0, Vec::len));
        for i in 0..n {
            planes.push((
                ProfileTag { component, kind: ProfileKind::Area, threshold: i as f64 },
                to_f32(band),
            ));
        }
    }
    Ok(ProfileStack { rows: band.rows, cols: band.cols, planes })
}

/// Extended profile: the concatenation of per-component profiles, each base
/// component min-max scaled onto the quantization grid first (the linear
/// normalization and the quantization fold into one step). Trees and
/// automatic thresholds are derived per component.
pub fn esdap(components: &RasterGrid, params: &ProfileParams) -> Result<ProfileStack, TosError> {
    let mut planes = Vec::new();
    for band in 0..components.bands() {
        let filled = raster::fill_nodata_nearest(components, band)
            .map_err(|_| TosError::EmptyImage)?;
        let filled_grid =
            RasterGrid::new(components.rows(), components.cols(), 1, filled, components.nodata)
                .map_err(|_| TosError::Internal("hole filling produced an invalid band"))?;
        let quantized = raster::quantize_band(&filled_grid, 0, params.levels)
            .map_err(|_| TosError::EmptyImage)?;
        let stack = sdap(&quantized, params, band)?;
        planes.extend(stack.planes);
    }
    Ok(ProfileStack { rows: components.rows(), cols: components.cols(), planes })
}
