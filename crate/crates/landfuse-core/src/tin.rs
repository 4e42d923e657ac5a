//! LiDAR surface modelling: Delaunay triangulation (Bowyer–Watson) of
//! scattered points and barycentric rasterization into elevation and
//! intensity grids.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::raster::{RasterGrid, DEFAULT_NODATA};

#[derive(Debug, Error, PartialEq)]
pub enum TinError {
    #[error("need at least 3 distinct sites, got {0}")]
    TooFewSites(usize),
    #[error("all sites are collinear")]
    Collinear,
    #[error("site coordinates must be finite")]
    NonFinite,
    #[error("not enough {0} points to triangulate")]
    InsufficientPoints(&'static str),
    #[error("triangle {0} violates the empty-circumcircle property")]
    NotDelaunay(usize),
    #[error("triangulation does not tile the convex hull (area mismatch)")]
    BadCoverage,
}

/// One LiDAR return.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub intensity: f64,
    pub return_number: u32,
    pub is_ground: bool,
}

/// Triangulated irregular network: vertices carrying a value and CCW
/// triangles indexing them.
#[derive(Debug, Clone)]
pub struct Tin {
    pub vertices: Vec<(f64, f64, f64)>,
    pub triangles: Vec<[usize; 3]>,
}

impl Tin {
    /// Same triangulation with vertex values swapped out, for rasterizing a
    /// second attribute (e.g. intensity) over an existing triangulation.
    pub fn with_values(&self, values: &[f64]) -> Tin {
        debug_assert_eq!(values.len(), self.vertices.len());
        Tin {
            vertices: self
                .vertices
                .iter()
                .zip(values)
                .map(|(&(x, y, _), &v)| (x, y, v))
                .collect(),
            triangles: self.triangles.clone(),
        }
    }
}

/// Twice the signed area of triangle (a, b, c); positive when CCW.
#[inline]
fn orient2d(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

/// Circumcenter and squared circumradius of a non-degenerate triangle.
fn circumcircle(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> (f64, f64, f64) {
    let d = 2.0 * (a.0 * (b.1 - c.1) + b.0 * (c.1 - a.1) + c.0 * (a.1 - b.1));
    let a2 = a.0 * a.0 + a.1 * a.1;
    let b2 = b.0 * b.0 + b.1 * b.1;
    let c2 = c.0 * c.0 + c.1 * c.1;
    let ux = (a2 * (b.1 - c.1) + b2 * (c.1 - a.1) + c2 * (a.1 - b.1)) / d;
    let uy = (a2 * (c.0 - b.0) + b2 * (a.0 - c.0) + c2 * (b.0 - a.0)) / d;
    let r2 = (a.0 - ux) * (a.0 - ux) + (a.1 - uy) * (a.1 - uy);
    (ux, uy, r2)
}

/// Relative tolerance for the in-circle test. A point on the circle (within
/// tolerance) counts as outside, so co-circular configurations keep the
/// diagonal chosen by insertion order.
const IN_CIRCLE_REL_TOL: f64 = 1e-9;

#[inline]
fn strictly_in_circle(center: (f64, f64), r2: f64, p: (f64, f64)) -> bool {
    let dx = p.0 - center.0;
    let dy = p.1 - center.1;
    r2 - (dx * dx + dy * dy) > IN_CIRCLE_REL_TOL * r2
}

struct Triangle {
    v: [usize; 3],
    center: (f64, f64),
    r2: f64,
    alive: bool,
}

/// Delaunay triangulation of `(x, y, value)` sites by incremental insertion
/// with a super-triangle (Bowyer–Watson).
///
/// Duplicate `(x, y)` sites collapse to the last-seen value. Sites are then
/// sorted by `(x, y)` before insertion so the triangulation is a function of
/// the input set, not its order; co-circular ties resolve by that insertion
/// order.
pub fn build_tin(sites: &[(f64, f64, f64)]) -> Result<Tin, TinError> {
    for &(x, y, v) in sites {
        if !x.is_finite() || !y.is_finite() || !v.is_finite() {
            return Err(TinError::NonFinite);
        }
    }
    // Last-seen wins for duplicate planimetric coordinates.
    let mut dedup: BTreeMap<(u64, u64), (f64, f64, f64)> = BTreeMap::new();
    for &s in sites {
        dedup.insert((s.0.to_bits(), s.1.to_bits()), s);
    }
    let mut pts: Vec<(f64, f64, f64)> = dedup.into_values().collect();
    if pts.len() < 3 {
        return Err(TinError::TooFewSites(pts.len()));
    }
    pts.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
    // Collinearity check against the first non-degenerate pair.
    let mut area_scale = 0.0f64;
    {
        let a = (pts[0].0, pts[0].1);
        let b = (pts[1].0, pts[1].1);
        for p in &pts[2..] {
            area_scale = area_scale.max(orient2d(a, b, (p.0, p.1)).abs());
        }
        let span = pts
            .iter()
            .fold(0.0f64, |m, p| m.max(p.0.abs()).max(p.1.abs()))
            .max(1.0);
        if area_scale <= span * span * 1e-12 {
            return Err(TinError::Collinear);
        }
    }
    let n = pts.len();
    // Super-triangle comfortably containing the bounding box.
    let (mut min_x, mut min_y, mut max_x, mut max_y) =
        (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in &pts {
        min_x = min_x.min(p.0);
        min_y = min_y.min(p.1);
        max_x = max_x.max(p.0);
        max_y = max_y.max(p.1);
    }
    let span = (max_x - min_x).max(max_y - min_y).max(1.0);
    let (cx, cy) = ((min_x + max_x) / 2.0, (min_y + max_y) / 2.0);
    let big = 64.0 * span;
    let mut verts: Vec<(f64, f64, f64)> = pts.clone();
    verts.push((cx - big, cy - big, 0.0));
    verts.push((cx + big, cy - big, 0.0));
    verts.push((cx, cy + big, 0.0));
    let (s0, s1, s2) = (n, n + 1, n + 2);

    let make_triangle = |v: [usize; 3], verts: &[(f64, f64, f64)]| -> Triangle {
        let a = (verts[v[0]].0, verts[v[0]].1);
        let b = (verts[v[1]].0, verts[v[1]].1);
        let c = (verts[v[2]].0, verts[v[2]].1);
        // Keep CCW orientation.
        let v = if orient2d(a, b, c) >= 0.0 { v } else { [v[0], v[2], v[1]] };
        let a = (verts[v[0]].0, verts[v[0]].1);
        let b = (verts[v[1]].0, verts[v[1]].1);
        let c = (verts[v[2]].0, verts[v[2]].1);
        let (ux, uy, r2) = circumcircle(a, b, c);
        Triangle { v, center: (ux, uy), r2, alive: true }
    };

    let mut tris: Vec<Triangle> = vec![make_triangle([s0, s1, s2], &verts)];
    let mut bad: Vec<usize> = Vec::new();
    let mut boundary: Vec<(usize, usize)> = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        let pt = (p.0, p.1);
        bad.clear();
        for (ti, t) in tris.iter().enumerate() {
            if t.alive && strictly_in_circle(t.center, t.r2, pt) {
                bad.push(ti);
            }
        }
        // Boundary of the cavity: edges used by exactly one bad triangle,
        // kept in the orientation of their triangle.
        boundary.clear();
        for &ti in &bad {
            let v = tris[ti].v;
            for k in 0..3 {
                let e = (v[k], v[(k + 1) % 3]);
                // An edge shared with another bad triangle appears reversed there.
                let mut shared = false;
                for &tj in &bad {
                    if tj == ti {
                        continue;
                    }
                    let w = tris[tj].v;
                    for m in 0..3 {
                        if w[m] == e.1 && w[(m + 1) % 3] == e.0 {
                            shared = true;
                            break;
                        }
                    }
                    if shared {
                        break;
                    }
                }
                if !shared {
                    boundary.push(e);
                }
            }
        }
        for &ti in &bad {
            tris[ti].alive = false;
        }
        for &(ea, eb) in &boundary {
            tris.push(make_triangle([ea, eb, i], &verts));
        }
    }
    // Drop triangles touching the super-triangle and compact.
    let triangles: Vec<[usize; 3]> = tris
        .iter()
        .filter(|t| t.alive && t.v.iter().all(|&v| v < n))
        .map(|t| t.v)
        .collect();
    if triangles.is_empty() {
        return Err(TinError::Collinear);
    }
    Ok(Tin { vertices: pts, triangles })
}

/// Verify the Delaunay invariants exhaustively: every triangle is CCW and
/// non-degenerate, no vertex lies strictly inside any circumcircle, and the
/// triangle areas tile the convex hull. O(triangles * vertices).
pub fn validate_delaunay(tin: &Tin) -> Result<(), TinError> {
    let pts: Vec<(f64, f64)> = tin.vertices.iter().map(|&(x, y, _)| (x, y)).collect();
    let mut area_sum = 0.0;
    for (ti, t) in tin.triangles.iter().enumerate() {
        let (a, b, c) = (pts[t[0]], pts[t[1]], pts[t[2]]);
        let area2 = orient2d(a, b, c);
        if area2 <= 0.0 {
            return Err(TinError::NotDelaunay(ti));
        }
        area_sum += area2 / 2.0;
        let (ux, uy, r2) = circumcircle(a, b, c);
        for (vi, &p) in pts.iter().enumerate() {
            if t.contains(&vi) {
                continue;
            }
            if strictly_in_circle((ux, uy), r2, p) {
                return Err(TinError::NotDelaunay(ti));
            }
        }
    }
    let hull = convex_hull(&pts);
    let mut hull_area = 0.0;
    for i in 0..hull.len() {
        let p = pts[hull[i]];
        let q = pts[hull[(i + 1) % hull.len()]];
        hull_area += p.0 * q.1 - q.0 * p.1;
    }
    let hull_area = hull_area / 2.0;
    if (area_sum - hull_area).abs() > 1e-9 * hull_area.max(1.0) {
        return Err(TinError::BadCoverage);
    }
    Ok(())
}

/// Indices of the convex hull in CCW order (Andrew's monotone chain).
fn convex_hull(pts: &[(f64, f64)]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&i, &j| pts[i].0.total_cmp(&pts[j].0).then(pts[i].1.total_cmp(&pts[j].1)));
    let chain = |order: &mut dyn Iterator<Item = usize>| -> Vec<usize> {
        let mut half: Vec<usize> = Vec::new();
        for i in order {
            while half.len() >= 2
                && orient2d(pts[half[half.len() - 2]], pts[half[half.len() - 1]], pts[i]) <= 0.0
            {
                half.pop();
            }
            half.push(i);
        }
        half.pop();
        half
    };
    let mut hull = chain(&mut idx.iter().copied());
    hull.extend(chain(&mut idx.iter().rev().copied()));
    hull
}

/// Rasterize a TIN: pixel centers inside a triangle take the barycentric
/// interpolation of the vertex values; pixels outside the hull get nodata.
///
/// Triangles are visited in index order and a pixel keeps the first triangle
/// that contains it, so centers exactly on a shared edge resolve to the
/// lowest triangle index.
pub fn rasterize_tin(
    tin: &Tin,
    rows: usize,
    cols: usize,
    origin_x: f64,
    origin_y: f64,
    pixel_size: f64,
) -> RasterGrid {
    let mut out = RasterGrid::filled(rows, cols, 1, DEFAULT_NODATA, DEFAULT_NODATA)
        .with_geo(origin_x, origin_y, pixel_size);
    let mut assigned = vec![false; rows * cols];
    let px = |c: usize| origin_x + (c as f64 + 0.5) * pixel_size;
    let py = |r: usize| origin_y - (r as f64 + 0.5) * pixel_size;
    for t in &tin.triangles {
        let a = tin.vertices[t[0]];
        let b = tin.vertices[t[1]];
        let c = tin.vertices[t[2]];
        let area2 = orient2d((a.0, a.1), (b.0, b.1), (c.0, c.1));
        if area2 <= 0.0 {
            continue;
        }
        let eps = 1e-12 * area2;
        // Pixel bounding box of the triangle. y decreases with row index.
        let min_x = a.0.min(b.0).min(c.0);
        let max_x = a.0.max(b.0).max(c.0);
        let min_y = a.1.min(b.1).min(c.1);
        let max_y = a.1.max(b.1).max(c.1);
        let c0 = (((min_x - origin_x) / pixel_size - 0.5).floor().max(0.0)) as usize;
        let c1 = (((max_x - origin_x) / pixel_size - 0.5).ceil().min(cols as f64 - 1.0)) as usize;
        let r0 = (((origin_y - max_y) / pixel_size - 0.5).floor().max(0.0)) as usize;
        let r1 = (((origin_y - min_y) / pixel_size - 0.5).ceil().min(rows as f64 - 1.0)) as usize;
        if min_x > origin_x + cols as f64 * pixel_size || max_y < origin_y - rows as f64 * pixel_size
        {
            continue;
        }
        for r in r0..=r1 {
            for col in c0..=c1 {
                let i = r * cols + col;
                if assigned[i] {
                    continue;
                }
                let p = (px(col), py(r));
                let w0 = orient2d((b.0, b.1), (c.0, c.1), p);
                let w1 = orient2d((c.0, c.1), (a.0, a.1), p);
                let w2 = orient2d((a.0, a.1), (b.0, b.1), p);
                if w0 >= -eps && w1 >= -eps && w2 >= -eps {
                    let v = (w0 * a.2 + w1 * b.2 + w2 * c.2) / area2;
                    out.set(0, r, col, v as f32);
                    assigned[i] = true;
                }
            }
        }
    }
    out
}

/// The four surfaces derived from a classified point cloud.
#[derive(Debug, Clone)]
pub struct Surfaces {
    pub dem: RasterGrid,
    pub dsm: RasterGrid,
    pub ndsm: RasterGrid,
    pub intensity: RasterGrid,
}

/// Build DEM (ground returns), DSM and intensity (first returns) by TIN
/// interpolation, and the nDSM as `max(dsm - dem, 0)` where both surfaces
/// are defined.
pub fn derive_surfaces(
    points: &[LidarPoint],
    rows: usize,
    cols: usize,
    origin_x: f64,
    origin_y: f64,
    pixel_size: f64,
) -> Result<Surfaces, TinError> {
    let ground: Vec<(f64, f64, f64)> =
        points.iter().filter(|p| p.is_ground).map(|p| (p.x, p.y, p.z)).collect();
    let first: Vec<&LidarPoint> = points.iter().filter(|p| p.return_number == 1).collect();
    if ground.len() < 3 {
        return Err(TinError::InsufficientPoints("ground"));
    }
    if first.len() < 3 {
        return Err(TinError::InsufficientPoints("first-return"));
    }
    let ground_tin = build_tin(&ground).map_err(|e| match e {
        TinError::TooFewSites(_) => TinError::InsufficientPoints("ground"),
        other => other,
    })?;
    let first_z: Vec<(f64, f64, f64)> = first.iter().map(|p| (p.x, p.y, p.z)).collect();
    let first_tin = build_tin(&first_z).map_err(|e| match e {
        TinError::TooFewSites(_) => TinError::InsufficientPoints("first-return"),
        other => other,
    })?;
    // Intensity shares the first-return triangulation; remap the vertex
    // values through the dedup/sort done by build_tin.
    let mut by_xy: BTreeMap<(u64, u64), f64> = BTreeMap::new();
    for p in &first {
        by_xy.insert((p.x.to_bits(), p.y.to_bits()), p.intensity);
    }
    let intensities: Vec<f64> = first_tin
        .vertices
        .iter()
        .map(|&(x, y, _)| by_xy[&(x.to_bits(), y.to_bits())])
        .collect();
    let intensity_tin = first_tin.with_values(&intensities);

    let dem = rasterize_tin(&ground_tin, rows, cols, origin_x, origin_y, pixel_size);
    let dsm = rasterize_tin(&first_tin, rows, cols, origin_x, origin_y, pixel_size);
    let intensity = rasterize_tin(&intensity_tin, rows, cols, origin_x, origin_y, pixel_size);
    let mut ndsm = RasterGrid::filled(rows, cols, 1, DEFAULT_NODATA, DEFAULT_NODATA)
        .with_geo(origin_x, origin_y, pixel_size);
    for r in 0..rows {
        for c in 0..cols {
            let d = dem.get(0, r, c);
            let s = dsm.get(0, r, c);
            if dem.is_nodata(d) || dsm.is_nodata(s) {
                continue;
            }
            ndsm.set(0, r, c, (s - d).max(0.0));
        }
    }
    Ok(Surfaces { dem, dsm, ndsm, intensity })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;
    use rand::Rng;

    #[test]
    fn three_points_one_triangle() {
        let tin = build_tin(&[(0.0, 0.0, 1.0), (4.0, 0.0, 2.0), (0.0, 4.0, 3.0)]).unwrap();
        assert_eq!(tin.triangles.len(), 1);
        validate_delaunay(&tin).unwrap();
    }

    #[test]
    fn square_two_triangles() {
        let tin = build_tin(&[
            (0.0, 0.0, 0.0),
            (1.0, 0.0, 0.0),
            (0.0, 1.0, 0.0),
            (1.0, 1.0, 0.0),
        ])
        .unwrap();
        assert_eq!(tin.triangles.len(), 2);
        validate_delaunay(&tin).unwrap();
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert_eq!(
            build_tin(&[(0.0, 0.0, 0.0), (1.0, 1.0, 0.0)]).unwrap_err(),
            TinError::TooFewSites(2)
        );
        let line: Vec<(f64, f64, f64)> = (0..5).map(|i| (i as f64, 2.0 * i as f64, 0.0)).collect();
        assert_eq!(build_tin(&line).unwrap_err(), TinError::Collinear);
    }

    #[test]
    fn duplicates_collapse_to_last_seen() {
        let tin = build_tin(&[
            (0.0, 0.0, 1.0),
            (4.0, 0.0, 2.0),
            (0.0, 4.0, 3.0),
            (0.0, 0.0, 9.0),
        ])
        .unwrap();
        assert_eq!(tin.vertices.len(), 3);
        let v = tin
            .vertices
            .iter()
            .find(|&&(x, y, _)| x == 0.0 && y == 0.0)
            .unwrap();
        assert_eq!(v.2, 9.0);
    }

    #[test]
    fn random_sites_are_delaunay() {
        let mut rng = crate::seed::stage_rng(5, "test-delaunay", 0);
        for case in 0..5 {
            let n = 50 + case * 30;
            let sites: Vec<(f64, f64, f64)> = (0..n)
                .map(|_| {
                    (
                        rng.random_range(0.0..100.0),
                        rng.random_range(0.0..100.0),
                        rng.random_range(-5.0..5.0),
                    )
                })
                .collect();
            let tin = build_tin(&sites).unwrap();
            validate_delaunay(&tin).unwrap();
        }
    }

    #[test]
    fn rasterize_reproduces_plane() {
        // Vertex values sample z = 2x + 3y + 1; interior pixels must match.
        let plane = |x: f64, y: f64| 2.0 * x + 3.0 * y + 1.0;
        let mut sites = Vec::new();
        for &(x, y) in &[(0.0, 0.0), (20.0, 0.0), (0.0, 20.0), (20.0, 20.0), (7.0, 13.0)] {
            sites.push((x, y, plane(x, y)));
        }
        let tin = build_tin(&sites).unwrap();
        let grid = rasterize_tin(&tin, 20, 20, 0.0, 20.0, 1.0);
        for r in 0..20 {
            for c in 0..20 {
                let v = grid.get(0, r, c);
                if grid.is_nodata(v) {
                    continue;
                }
                let (x, y) = grid.pixel_center(r, c);
                assert!(
                    (f64::from(v) - plane(x, y)).abs() < 1e-6,
                    "pixel ({r},{c}) = {v}, want {}",
                    plane(x, y)
                );
            }
        }
        // Interior pixel must be covered.
        assert!(!grid.is_nodata(grid.get(0, 10, 10)));
    }

    #[test]
    fn rasterize_constant_tin() {
        let tin = build_tin(&[(0.0, 0.0, 5.0), (8.0, 0.0, 5.0), (4.0, 8.0, 5.0)]).unwrap();
        let grid = rasterize_tin(&tin, 8, 8, 0.0, 8.0, 1.0);
        let mut covered = 0;
        for &v in grid.band(0) {
            if !grid.is_nodata(v) {
                assert!((v - 5.0).abs() < 1e-6);
                covered += 1;
            }
        }
        assert!(covered > 0);
    }

    #[test]
    fn rasterize_matches_bruteforce_scan() {
        let mut rng = crate::seed::stage_rng(6, "test-rasterize", 0);
        let sites: Vec<(f64, f64, f64)> = (0..40)
            .map(|_| {
                (
                    rng.random_range(0.0..16.0),
                    rng.random_range(0.0..16.0),
                    rng.random_range(0.0..10.0),
                )
            })
            .collect();
        let tin = build_tin(&sites).unwrap();
        let fast = rasterize_tin(&tin, 16, 16, 0.0, 16.0, 1.0);
        // Oracle: per pixel, scan all triangles in order without any bbox
        // logic and take the first containing triangle.
        for r in 0..16 {
            for c in 0..16 {
                let (x, y) = fast.pixel_center(r, c);
                let mut expect = None;
                'tri: for t in &tin.triangles {
                    let a = tin.vertices[t[0]];
                    let b = tin.vertices[t[1]];
                    let cc = tin.vertices[t[2]];
                    let area2 = orient2d((a.0, a.1), (b.0, b.1), (cc.0, cc.1));
                    let eps = 1e-12 * area2;
                    let w0 = orient2d((b.0, b.1), (cc.0, cc.1), (x, y));
                    let w1 = orient2d((cc.0, cc.1), (a.0, a.1), (x, y));
                    let w2 = orient2d((a.0, a.1), (b.0, b.1), (x, y));
                    if w0 >= -eps && w1 >= -eps && w2 >= -eps {
                        expect = Some(((w0 * a.2 + w1 * b.2 + w2 * cc.2) / area2) as f32);
                        break 'tri;
                    }
                }
                let got = fast.get(0, r, c);
                match expect {
                    Some(v) => assert_eq!(got, v),
                    None => assert!(fast.is_nodata(got)),
                }
            }
        }
    }

    fn flat_cloud(z_ground: f64, object_z: Option<f64>) -> Vec<LidarPoint> {
        let mut pts = Vec::new();
        for r in 0..12 {
            for c in 0..12 {
                let (x, y) = (c as f64, r as f64);
                pts.push(LidarPoint {
                    x,
                    y,
                    z: z_ground,
                    intensity: 1.0,
                    return_number: if object_z.is_some() && (4..8).contains(&r) && (4..8).contains(&c)
                    {
                        2
                    } else {
                        1
                    },
                    is_ground: true,
                });
                if let Some(oz) = object_z {
                    if (4..8).contains(&r) && (4..8).contains(&c) {
                        pts.push(LidarPoint {
                            x: x + 0.01,
                            y: y + 0.01,
                            z: oz,
                            intensity: 2.0,
                            return_number: 1,
                            is_ground: false,
                        });
                    }
                }
            }
        }
        pts
    }

    #[test]
    fn flat_scene_gives_zero_ndsm() {
        let pts = flat_cloud(10.0, None);
        let s = derive_surfaces(&pts, 12, 12, 0.0, 12.0, 1.0).unwrap();
        for &v in s.ndsm.band(0) {
            if !s.ndsm.is_nodata(v) {
                assert!(v.abs() < 1e-6);
            }
        }
    }

    #[test]
    fn raised_cluster_shows_in_ndsm() {
        let pts = flat_cloud(0.0, Some(8.0));
        let s = derive_surfaces(&pts, 12, 12, 0.0, 12.0, 1.0).unwrap();
        // Interior of the cluster hull: rows/cols 5..7 of pixel centers.
        for r in 5..7 {
            for c in 5..7 {
                let v = s.ndsm.get(0, r, c);
                assert!(!s.ndsm.is_nodata(v));
                assert!((v - 8.0).abs() < 0.5, "ndsm at ({r},{c}) = {v}");
            }
        }
        // Far corner is flat ground.
        assert!(s.ndsm.get(0, 1, 1).abs() < 1e-6);
    }

    #[test]
    fn ndsm_clamped_at_zero() {
        // First returns below the ground surface (noise): nDSM clamps to 0.
        let mut pts = flat_cloud(5.0, None);
        for p in pts.iter_mut() {
            p.z = 5.0;
        }
        pts.push(LidarPoint {
            x: 5.5,
            y: 5.5,
            z: 3.0,
            intensity: 1.0,
            return_number: 1,
            is_ground: false,
        });
        let s = derive_surfaces(&pts, 12, 12, 0.0, 12.0, 1.0).unwrap();
        for &v in s.ndsm.band(0) {
            if !s.ndsm.is_nodata(v) {
                assert!(v >= 0.0);
            }
        }
    }

    #[test]
    fn insufficient_points_error() {
        let pts = vec![LidarPoint {
            x: 0.0,
            y: 0.0,
            z: 0.0,
            intensity: 0.0,
            return_number: 1,
            is_ground: true,
        }];
        assert_eq!(
            derive_surfaces(&pts, 4, 4, 0.0, 4.0, 1.0).unwrap_err(),
            TinError::InsufficientPoints("ground")
        );
    }
}
