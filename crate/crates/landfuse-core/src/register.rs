//! Image-to-image co-registration: first-order polynomial (affine) fit to
//! ground control points and nearest-neighbor resampling.

#[allow(unused_imports)]
use num_traits::Float;

use thiserror::Error;

use crate::linalg::{self, Matrix};
use crate::raster::RasterGrid;

#[derive(Debug, Error, PartialEq)]
pub enum RegisterError {
    #[error("need at least 3 control point pairs, got {0}")]
    TooFewPairs(usize),
    #[error("control points are collinear or otherwise rank-deficient")]
    Degenerate,
    #[error("control point coordinates must be finite")]
    NonFinite,
    #[error("transform is not invertible (zero determinant)")]
    NotInvertible,
}

/// One ground control point: pixel coordinates in the moving image and the
/// matching pixel coordinates in the reference image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcpPair {
    pub src_x: f64,
    pub src_y: f64,
    pub dst_x: f64,
    pub dst_y: f64,
}

/// First-order polynomial transform `(x, y) -> (a x + b y + c, d x + e y + f)`
/// plus the root-mean-square residual of the fit, in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineTransform {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
    pub rmse: f64,
}

impl AffineTransform {
    pub fn identity() -> Self {
        AffineTransform { a: 1.0, b: 0.0, c: 0.0, d: 0.0, e: 1.0, f: 0.0, rmse: 0.0 }
    }

    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (self.a * x + self.b * y + self.c, self.d * x + self.e * y + self.f)
    }

    /// Determinant of the linear part.
    pub fn det(&self) -> f64 {
        self.a * self.e - self.b * self.d
    }

    /// Inverse transform. The inverse carries `rmse = 0` since it is exact
    /// with respect to this transform, not refitted to data.
    pub fn invert(&self) -> Result<AffineTransform, RegisterError> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return Err(RegisterError::NotInvertible);
        }
        let ia = self.e / det;
        let ib = -self.b / det;
        let id = -self.d / det;
        let ie = self.a / det;
        Ok(AffineTransform {
            a: ia,
            b: ib,
            c: -(ia * self.c + ib * self.f),
            d: id,
            e: ie,
            f: -(id * self.c + ie * self.f),
            rmse: 0.0,
        })
    }
}

/// Least-squares fit of a first-order polynomial transform to control points.
///
/// Solves the two 3-unknown normal-equation systems (one per output axis)
/// and reports the RMS of the residual distances over all pairs. With
/// exactly three non-collinear pairs the fit is exact and the RMSE is zero
/// to solver precision.
pub fn fit_affine_gcps(pairs: &[GcpPair]) -> Result<AffineTransform, RegisterError> {
    if pairs.len() < 3 {
        return Err(RegisterError::TooFewPairs(pairs.len()));
    }
    for p in pairs {
        if ![p.src_x, p.src_y, p.dst_x, p.dst_y].iter().all(|v| v.is_finite()) {
            return Err(RegisterError::NonFinite);
        }
    }
    // Normal matrix of the design [x y 1] and the two right-hand sides.
    let mut m = [[0.0f64; 3]; 3];
    let mut rx = [0.0f64; 3];
    let mut ry = [0.0f64; 3];
    for p in pairs {
        let u = [p.src_x, p.src_y, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += u[i] * u[j];
            }
            rx[i] += u[i] * p.dst_x;
            ry[i] += u[i] * p.dst_y;
        }
    }
    let normal = Matrix::from_fn(3, 3, |r, c| m[r][c]);
    let sol_x = linalg::solve(normal.clone(), &rx).map_err(|_| RegisterError::Degenerate)?;
    let sol_y = linalg::solve(normal, &ry).map_err(|_| RegisterError::Degenerate)?;
    let mut t = AffineTransform {
        a: sol_x[0],
        b: sol_x[1],
        c: sol_x[2],
        d: sol_y[0],
        e: sol_y[1],
        f: sol_y[2],
        rmse: 0.0,
    };
    let mut sum_sq = 0.0;
    for p in pairs {
        let (px, py) = t.apply(p.src_x, p.src_y);
        sum_sq += (px - p.dst_x).powi(2) + (py - p.dst_y).powi(2);
    }
    t.rmse = (sum_sq / pairs.len() as f64).sqrt();
    Ok(t)
}

/// Resample a grid through an affine transform with nearest-neighbor lookup.
///
/// `t` maps moving-image pixel coordinates to output pixel coordinates; each
/// output pixel pulls the source pixel nearest to its inverse image
/// (`round` half-away-from-zero). Out-of-bounds lookups produce nodata.
/// Pixel coordinates are `(x, y) = (col, row)`. The geo anchor of the output
/// is copied from the input; callers registering onto a reference grid
/// overwrite it with the reference anchor.
pub fn resample_nearest(
    grid: &RasterGrid,
    t: &AffineTransform,
    out_rows: usize,
    out_cols: usize,
) -> Result<RasterGrid, RegisterError> {
    let inv = t.invert()?;
    let mut out =
        RasterGrid::filled(out_rows, out_cols, grid.bands(), grid.nodata, grid.nodata)
            .with_geo(grid.origin_x, grid.origin_y, grid.pixel_size);
    for r in 0..out_rows {
        for c in 0..out_cols {
            let (sx, sy) = inv.apply(c as f64, r as f64);
            let sc = sx.round();
            let sr = sy.round();
            if sr < 0.0 || sc < 0.0 || sr >= grid.rows() as f64 || sc >= grid.cols() as f64 {
                continue;
            }
            let (sr, sc) = (sr as usize, sc as usize);
            for b in 0..grid.bands() {
                out.set(b, r, c, grid.get(b, sr, sc));
            }
        }
    }
    Ok(out)
}
