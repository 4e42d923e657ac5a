//! Tree of shapes (inclusion tree) construction, per-shape attributes, and
//! self-dual attribute filtering.
//!
//! A *shape* is the saturation (hole filling) of a connected component of an
//! upper threshold set `[u >= λ]` (8-connectivity) or a lower threshold set
//! `[u < λ]` (4-connectivity). Saturation and the root are defined against a
//! one-pixel frame around the image carrying the lower median of the border
//! values: a component containing the frame stands for the root, and a hole
//! is a complement component (dual connectivity) not reachable from the
//! frame. Shapes ordered by inclusion form a tree with the full image
//! domain as root; pruning nodes and reading each pixel from its nearest
//! preserved ancestor realizes the self-dual attribute filters.
//!
//! Construction sweeps the levels once per polarity with an incremental
//! union-find, saturating only components that changed at each level, so
//! the work is O(levels · pixels · α) and memory stays linear in the image.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::raster::GrayImage;

#[derive(Debug, Error, PartialEq)]
pub enum TosError {
    #[error("image is empty")]
    EmptyImage,
    #[error("attribute distribution is degenerate and no thresholds can be derived")]
    DegenerateAttribute,
    #[error("tree has no non-root nodes")]
    NoInnerNodes,
    #[error("threshold count must be at least 1")]
    BadThresholdCount,
    #[error("internal tree construction invariant violated: {0}")]
    Internal(&'static str),
}

/// Inclusion tree over one quantized band.
#[derive(Debug, Clone)]
pub struct TreeOfShapes {
    pub rows: usize,
    pub cols: usize,
    /// Quantization level count of the source image.
    pub levels: u32,
    parent: Vec<u32>,
    level: Vec<u16>,
    area: Vec<u32>,
    pixel_node: Vec<u32>,
}

impl TreeOfShapes {
    pub const ROOT: u32 = 0;

    /// Number of nodes including the root (node 0).
    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    #[inline]
    pub fn parent(&self, node: u32) -> u32 {
        self.parent[node as usize]
    }

    #[inline]
    pub fn level(&self, node: u32) -> u16 {
        self.level[node as usize]
    }

    /// Pixel count of the shape's full support (descendants included).
    #[inline]
    pub fn area(&self, node: u32) -> u32 {
        self.area[node as usize]
    }

    /// Smallest shape containing the flat pixel index.
    #[inline]
    pub fn pixel_node(&self, pixel: usize) -> u32 {
        self.pixel_node[pixel]
    }

    /// Reconstruct the image: each pixel takes the level of its smallest
    /// containing shape. For an unfiltered tree this reproduces the input.
    pub fn reconstruct(&self) -> GrayImage {
        let data = self.pixel_node.iter().map(|&n| self.level[n as usize]).collect();
        GrayImage::new(self.rows, self.cols, self.levels, data)
    }
}

const NONE: u32 = u32::MAX;

/// Union-find over extended-grid pixels with per-root component metadata.
struct Components {
    parent: Vec<u32>,
    size: Vec<u32>,
    bbox: Vec<[u32; 4]>, // min_r, min_c, max_r, max_c in extended coords
    has_frame: Vec<bool>,
    /// Shape id of the component's largest predecessor saturation, NONE
    /// before the first saturation. When chains merge, the larger
    /// saturation wins: it is the only candidate the merged component's
    /// saturation can still equal (a smaller one cannot contain the rest).
    shape: Vec<u32>,
    active: Vec<bool>,
}

impl Components {
    fn new(n: usize) -> Self {
        Components {
            parent: vec![NONE; n],
            size: vec![0; n],
            bbox: vec![[0; 4]; n],
            has_frame: vec![false; n],
            shape: vec![NONE; n],
            active: vec![false; n],
        }
    }

    fn activate(&mut self, e: usize, r: u32, c: u32, frame: bool) {
        self.parent[e] = e as u32;
        self.size[e] = 1;
        self.bbox[e] = [r, c, r, c];
        self.has_frame[e] = frame;
        self.shape[e] = NONE;
        self.active[e] = true;
    }

    fn find(&mut self, mut e: u32) -> u32 {
        while self.parent[e as usize] != e {
            let grand = self.parent[self.parent[e as usize] as usize];
            self.parent[e as usize] = grand;
            e = grand;
        }
        e
    }

    fn union(&mut self, a: u32, b: u32) -> u32 {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return ra;
        }
        let (big, small) =
            if self.size[ra as usize] >= self.size[rb as usize] { (ra, rb) } else { (rb, ra) };
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
        let sb = self.bbox[small as usize];
        let bb = &mut self.bbox[big as usize];
        bb[0] = bb[0].min(sb[0]);
        bb[1] = bb[1].min(sb[1]);
        bb[2] = bb[2].max(sb[2]);
        bb[3] = bb[3].max(sb[3]);
        self.has_frame[big as usize] |= self.has_frame[small as usize];
        big
    }
}

/// Per-polarity sweep output.
struct SweepShapes {
    /// Saturated area per shape.
    area: Vec<u32>,
    /// Smallest shape of the same polarity strictly containing each shape.
    parent: Vec<u32>,
    /// Per image pixel: the smallest shape of this polarity covering it.
    smallest: Vec<u32>,
}

struct Sweep<'a> {
    cols: usize,
    ext_rows: usize,
    ext_cols: usize,
    img: &'a GrayImage,
    vinf: u16,
    comps: Components,
    reach_gen: Vec<u32>,
    generation: u32,
    queue: VecDeque<u32>,
    shapes_area: Vec<u32>,
    shapes_parent: Vec<u32>,
    /// Per pixel: the smallest shape seen covering it (the bottom of its
    /// containment chain so far).
    bottom: Vec<u32>,
    /// Connectivity of the threshold set: true = 8-connected (upper sets).
    set_conn8: bool,
}

impl<'a> Sweep<'a> {
    fn new(img: &'a GrayImage, vinf: u16, set_conn8: bool) -> Self {
        let ext_rows = img.rows + 2;
        let ext_cols = img.cols + 2;
        let ext_n = ext_rows * ext_cols;
        Sweep {
            cols: img.cols,
            ext_rows,
            ext_cols,
            img,
            vinf,
            comps: Components::new(ext_n),
            reach_gen: vec![0; ext_n],
            generation: 0,
            queue: VecDeque::new(),
            shapes_area: Vec::new(),
            shapes_parent: Vec::new(),
            bottom: vec![NONE; img.rows * img.cols],
            set_conn8,
        }
    }

    #[inline]
    fn is_frame(&self, er: usize, ec: usize) -> bool {
        er == 0 || ec == 0 || er == self.ext_rows - 1 || ec == self.ext_cols - 1
    }

    #[inline]
    fn ext_value(&self, er: usize, ec: usize) -> u16 {
        if self.is_frame(er, ec) {
            self.vinf
        } else {
            self.img.get(er - 1, ec - 1)
        }
    }

    /// Activate all extended pixels holding `value`, union them with their
    /// active neighbors, then saturate every component that changed.
    fn add_level(&mut self, value: u16) {
        let mut newly: Vec<u32> = Vec::new();
        for er in 0..self.ext_rows {
            for ec in 0..self.ext_cols {
                if self.ext_value(er, ec) == value {
                    let e = (er * self.ext_cols + ec) as u32;
                    self.comps.activate(e as usize, er as u32, ec as u32, self.is_frame(er, ec));
                    newly.push(e);
                }
            }
        }
        for &e in &newly {
            let er = e as usize / self.ext_cols;
            let ec = e as usize % self.ext_cols;
            for &(dr, dc) in neighbor_offsets(self.set_conn8) {
                let nr = er as isize + dr;
                let nc = ec as isize + dc;
                if nr < 0 || nc < 0 || nr >= self.ext_rows as isize || nc >= self.ext_cols as isize
                {
                    continue;
                }
                let ne = (nr as usize * self.ext_cols + nc as usize) as u32;
                if !self.comps.active[ne as usize] {
                    continue;
                }
                let ra = self.comps.find(e);
                let rb = self.comps.find(ne);
                if ra == rb {
                    continue;
                }
                let merged = match (self.comps.shape[ra as usize], self.comps.shape[rb as usize])
                {
                    (NONE, s) | (s, NONE) => s,
                    (a, b) if a == b => a,
                    (a, b) => {
                        let (aa, ab) =
                            (self.shapes_area[a as usize], self.shapes_area[b as usize]);
                        if aa > ab {
                            a
                        } else if ab > aa {
                            b
                        } else {
                            a.min(b)
                        }
                    }
                };
                let root = self.comps.union(ra, rb);
                self.comps.shape[root as usize] = merged;
            }
        }
        let mut roots: Vec<u32> = newly.iter().map(|&e| self.comps.find(e)).collect();
        roots.sort_unstable();
        roots.dedup();
        for root in roots {
            if self.comps.has_frame[root as usize] {
                continue;
            }
            self.saturate(root);
        }
    }

    /// Saturate one component: find the hole pixels within its bounding box,
    /// then (unless the saturated set is unchanged) register a new shape and
    /// update pixel coverage.
    fn saturate(&mut self, root: u32) {
        let [br0, bc0, br1, bc1] = self.comps.bbox[root as usize];
        // Window: bbox expanded by one, clipped. Everything outside the bbox
        // is connected around it to the frame, so seeding the reachability
        // pass from the window rim is equivalent to seeding from the frame.
        let wr0 = br0.saturating_sub(1) as usize;
        let wc0 = bc0.saturating_sub(1) as usize;
        let wr1 = ((br1 + 1) as usize).min(self.ext_rows - 1);
        let wc1 = ((bc1 + 1) as usize).min(self.ext_cols - 1);
        self.generation += 1;
        let generation = self.generation;
        self.queue.clear();
        for er in wr0..=wr1 {
            for ec in wc0..=wc1 {
                if er != wr0 && er != wr1 && ec != wc0 && ec != wc1 {
                    continue;
                }
                let e = (er * self.ext_cols + ec) as u32;
                if !(self.comps.active[e as usize] && self.comps.find(e) == root) {
                    self.reach_gen[e as usize] = generation;
                    self.queue.push_back(e);
                }
            }
        }
        // Complement reachability uses the dual connectivity.
        let dual8 = !self.set_conn8;
        while let Some(e) = self.queue.pop_front() {
            let er = e as usize / self.ext_cols;
            let ec = e as usize % self.ext_cols;
            for &(dr, dc) in neighbor_offsets(dual8) {
                let nr = er as isize + dr;
                let nc = ec as isize + dc;
                if nr < wr0 as isize || nc < wc0 as isize || nr > wr1 as isize || nc > wc1 as isize
                {
                    continue;
                }
                let ne = (nr as usize * self.ext_cols + nc as usize) as u32;
                if self.reach_gen[ne as usize] != generation
                    && !(self.comps.active[ne as usize] && self.comps.find(ne) == root)
                {
                    self.reach_gen[ne as usize] = generation;
                    self.queue.push_back(ne);
                }
            }
        }
        let mut sat_area = 0u32;
        for er in wr0..=wr1 {
            for ec in wc0..=wc1 {
                let e = er * self.ext_cols + ec;
                if self.reach_gen[e] != generation {
                    sat_area += 1;
                }
            }
        }
        // Unchanged saturation means the same shape as before. This also
        // covers chains merging inside a hole: the merged saturation can
        // equal the enclosing predecessor's, and then no new shape exists.
        let prev = self.comps.shape[root as usize];
        if prev != NONE && self.shapes_area[prev as usize] == sat_area {
            return;
        }
        let id = self.shapes_area.len() as u32;
        self.shapes_area.push(sat_area);
        self.shapes_parent.push(NONE);
        self.comps.shape[root as usize] = id;
        // Update per-pixel chain bottoms. Shapes covering a pixel are
        // totally ordered by inclusion, so area comparisons place the new
        // shape against the current bottom; the smaller of the two proposes
        // itself and learns the other as a parent candidate. Accumulating
        // the minimum-area candidate yields exactly the immediate parent:
        // whichever of a shape and its true parent appears second registers
        // the pair at the child's proper pixels.
        for er in wr0..=wr1 {
            for ec in wc0..=wc1 {
                let e = er * self.ext_cols + ec;
                if self.reach_gen[e] == generation {
                    continue;
                }
                debug_assert!(!self.is_frame(er, ec));
                let p = (er - 1) * self.cols + (ec - 1);
                let old = self.bottom[p];
                if old == NONE {
                    self.bottom[p] = id;
                } else if old != id {
                    let (child, parent) = if sat_area < self.shapes_area[old as usize] {
                        self.bottom[p] = id;
                        (id, old)
                    } else {
                        (old, id)
                    };
                    let known = self.shapes_parent[child as usize];
                    if known == NONE
                        || self.shapes_area[parent as usize] < self.shapes_area[known as usize]
                    {
                        self.shapes_parent[child as usize] = parent;
                    }
                }
            }
        }
    }

    fn finish(self) -> SweepShapes {
        SweepShapes {
            area: self.shapes_area,
            parent: self.shapes_parent,
            smallest: self.bottom,
        }
    }
}

#[inline]
fn neighbor_offsets(conn8: bool) -> &'static [(isize, isize)] {
    const N4: [(isize, isize); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];
    const N8: [(isize, isize); 8] =
        [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];
    if conn8 {
        &N8
    } else {
        &N4
    }
}

/// Lower median of the border pixel values: the frame level.
fn border_median(img: &GrayImage) -> u16 {
    let mut border: Vec<u16> = Vec::new();
    for r in 0..img.rows {
        for c in 0..img.cols {
            if r == 0 || c == 0 || r == img.rows - 1 || c == img.cols - 1 {
                border.push(img.get(r, c));
            }
        }
    }
    border.sort_unstable();
    border[(border.len() - 1) / 2]
}

/// Build the tree of shapes of a quantized band.
pub fn build_tree(img: &GrayImage) -> Result<TreeOfShapes, TosError> {
    if img.rows == 0 || img.cols == 0 {
        return Err(TosError::EmptyImage);
    }
    let vinf = border_median(img);
    let mut values: Vec<u16> = img.data.clone();
    values.push(vinf);
    values.sort_unstable();
    values.dedup();

    // Upper sweep: [u >= λ] with 8-connectivity, levels descending.
    let mut upper = Sweep::new(img, vinf, true);
    for &v in values.iter().rev() {
        upper.add_level(v);
    }
    let upper = upper.finish();
    // Lower sweep: [u < t] with 4-connectivity, thresholds ascending. The
    // set changes exactly at t = v + 1 for each distinct value v, where the
    // pixels holding v enter.
    let mut lower = Sweep::new(img, vinf, false);
    for &v in values.iter() {
        lower.add_level(v);
    }
    let lower = lower.finish();

    assemble(img, vinf, upper, lower)
}

fn find_alias(alias: &mut [u32], mut i: u32) -> u32 {
    while alias[i as usize] != i {
        let g = alias[alias[i as usize] as usize];
        alias[i as usize] = g;
        i = g;
    }
    i
}

/// Merge the two polarity sweeps into the final tree.
fn assemble(
    img: &GrayImage,
    vinf: u16,
    upper: SweepShapes,
    lower: SweepShapes,
) -> Result<TreeOfShapes, TosError> {
    let pixels = img.rows * img.cols;
    let nu = upper.area.len();
    let nl = lower.area.len();
    // Cross-polarity duplicates: an upper and a lower shape covering a common
    // pixel with equal areas are the same pixel set (shapes are nested or
    // disjoint, so equal area plus a common pixel forces set equality).
    let mut alias: Vec<u32> = (0..(nu + nl) as u32).collect();
    for p in 0..pixels {
        let su = upper.smallest[p];
        let sl = lower.smallest[p];
        if su != NONE && sl != NONE && upper.area[su as usize] == lower.area[sl as usize] {
            let a = find_alias(&mut alias, su);
            let b = find_alias(&mut alias, nu as u32 + sl);
            if a != b {
                let (keep, drop) = if a < b { (a, b) } else { (b, a) };
                alias[drop as usize] = keep;
            }
        }
    }
    // Canonical shape classes, ordered by (area desc, raw id asc) so that a
    // parent always gets a smaller node id than its children. Node 0 is the
    // root.
    let raw_area = |i: u32| -> u32 {
        if (i as usize) < nu {
            upper.area[i as usize]
        } else {
            lower.area[i as usize - nu]
        }
    };
    let mut canon_ids: Vec<u32> = Vec::new();
    for i in 0..(nu + nl) as u32 {
        if find_alias(&mut alias, i) == i {
            canon_ids.push(i);
        }
    }
    canon_ids.sort_by(|&a, &b| raw_area(b).cmp(&raw_area(a)).then(a.cmp(&b)));
    let mut node_of_canon: Vec<u32> = vec![NONE; nu + nl];
    for (slot, &id) in canon_ids.iter().enumerate() {
        node_of_canon[id as usize] = slot as u32 + 1;
    }
    let node_count = canon_ids.len() + 1;

    let mut area = vec![0u32; node_count];
    area[0] = pixels as u32;
    for (slot, &id) in canon_ids.iter().enumerate() {
        area[slot + 1] = raw_area(id);
    }
    // Smallest containing shape per pixel: the smaller-area of the two
    // polarity covers (they are nested, so area decides; ties are the same
    // node after aliasing).
    let mut pixel_node = vec![0u32; pixels];
    for p in 0..pixels {
        let su = upper.smallest[p];
        let sl = lower.smallest[p];
        let up_node =
            if su == NONE { NONE } else { node_of_canon[find_alias(&mut alias, su) as usize] };
        let lo_node = if sl == NONE {
            NONE
        } else {
            node_of_canon[find_alias(&mut alias, nu as u32 + sl) as usize]
        };
        pixel_node[p] = match (up_node, lo_node) {
            (NONE, NONE) => 0,
            (n, NONE) | (NONE, n) => n,
            (a, b) => {
                if area[a as usize] <= area[b as usize] {
                    a
                } else {
                    b
                }
            }
        };
    }
    // Representative (proper) pixel per node.
    let mut rep = vec![usize::MAX; node_count];
    for p in 0..pixels {
        let n = pixel_node[p] as usize;
        if rep[n] == usize::MAX {
            rep[n] = p;
        }
    }
    let mut level = vec![vinf; node_count];
    for n in 1..node_count {
        if rep[n] == usize::MAX {
            return Err(TosError::Internal("node without proper pixels"));
        }
        level[n] = img.data[rep[n]];
    }
    debug_assert!(rep[0] == usize::MAX || img.data[rep[0]] == vinf);

    // Parent: the smallest strictly containing shape. Candidates are the
    // in-polarity successors recorded during the sweeps, plus — for a
    // single-polarity node — the smallest shape of the other polarity
    // covering its representative pixel.
    let mut parent = vec![0u32; node_count];
    for (slot, &canon) in canon_ids.iter().enumerate() {
        let node = slot as u32 + 1;
        let mut best: u32 = 0; // root fallback
        let mut best_area = area[0];
        let consider = |cand: u32, best: &mut u32, best_area: &mut u32| {
            if cand != NONE && cand != node && area[cand as usize] < *best_area {
                *best = cand;
                *best_area = area[cand as usize];
            }
        };
        // Raw members of this class (at most one per polarity).
        let mut members: [u32; 2] = [NONE, NONE];
        if (canon as usize) < nu {
            members[0] = canon;
        } else {
            members[1] = canon;
        }
        for raw in 0..(nu + nl) as u32 {
            if raw != canon && find_alias(&mut alias, raw) == canon {
                if (raw as usize) < nu {
                    members[0] = raw;
                } else {
                    members[1] = raw;
                }
            }
        }
        let r = rep[node as usize];
        if members[0] != NONE {
            let in_parent = upper.parent[members[0] as usize];
            if in_parent != NONE {
                let cand = node_of_canon[find_alias(&mut alias, in_parent) as usize];
                consider(cand, &mut best, &mut best_area);
            }
        } else {
            // No upper member: the smallest upper shape over the proper
            // pixel strictly contains this node.
            let su = upper.smallest[r];
            if su != NONE {
                let cand = node_of_canon[find_alias(&mut alias, su) as usize];
                consider(cand, &mut best, &mut best_area);
            }
        }
        if members[1] != NONE {
            let in_parent = lower.parent[members[1] as usize - nu];
            if in_parent != NONE {
                let cand = node_of_canon[find_alias(&mut alias, nu as u32 + in_parent) as usize];
                consider(cand, &mut best, &mut best_area);
            }
        } else {
            let sl = lower.smallest[r];
            if sl != NONE {
                let cand = node_of_canon[find_alias(&mut alias, nu as u32 + sl) as usize];
                consider(cand, &mut best, &mut best_area);
            }
        }
        if best_area <= area[node as usize] {
            return Err(TosError::Internal("parent not strictly larger"));
        }
        parent[node as usize] = best;
    }

    Ok(TreeOfShapes {
        rows: img.rows,
        cols: img.cols,
        levels: img.levels,
        parent,
        level,
        area,
        pixel_node,
    })
}

/// Per-node area, mean and population standard deviation of the gray values
/// over each shape's full pixel support.
#[derive(Debug, Clone)]
pub struct AttributeTable {
    pub area: Vec<u32>,
    pub mean: Vec<f64>,
    pub stddev: Vec<f64>,
}

/// Attribute driving a filter or a threshold plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attribute {
    Area,
    StdDev,
}

/// Compute the attribute table by accumulating proper pixels and folding
/// children into parents (ids descend by area, so a reverse walk visits
/// children first).
pub fn compute_attributes(tree: &TreeOfShapes, img: &GrayImage) -> AttributeTable {
    let n = tree.node_count();
    let mut count = vec![0u64; n];
    let mut sum = vec![0f64; n];
    let mut sum_sq = vec![0f64; n];
    for (p, &node) in tree.pixel_node.iter().enumerate() {
        let v = f64::from(img.data[p]);
        count[node as usize] += 1;
        sum[node as usize] += v;
        sum_sq[node as usize] += v * v;
    }
    for node in (1..n).rev() {
        let parent = tree.parent(node as u32) as usize;
        count[parent] += count[node];
        sum[parent] += sum[node];
        sum_sq[parent] += sum_sq[node];
    }
    let mut mean = vec![0f64; n];
    let mut stddev = vec![0f64; n];
    for node in 0..n {
        debug_assert_eq!(count[node], u64::from(tree.area(node as u32)));
        let c = count[node] as f64;
        mean[node] = sum[node] / c;
        let var = (sum_sq[node] / c - mean[node] * mean[node]).max(0.0);
        stddev[node] = num_traits::Float::sqrt(var);
    }
    AttributeTable { area: tree.area.clone(), mean, stddev }
}

/// Self-dual attribute filter: prune every non-root node whose attribute is
/// below `lambda` and reconstruct, each pruned pixel taking the level of its
/// nearest preserved ancestor.
pub fn filter_tree(
    tree: &TreeOfShapes,
    attrs: &AttributeTable,
    attribute: Attribute,
    lambda: f64,
) -> GrayImage {
    let n = tree.node_count();
    let value = |node: usize| -> f64 {
        match attribute {
            Attribute::Area => f64::from(attrs.area[node]),
            Attribute::StdDev => attrs.stddev[node],
        }
    };
    // Parents precede children in id order (ids sorted by decreasing area),
    // so one ascending pass resolves the nearest preserved ancestor level.
    let mut resolved = vec![0u16; n];
    resolved[0] = tree.level(0);
    for node in 1..n {
        resolved[node] = if value(node) >= lambda {
            tree.level(node as u32)
        } else {
            resolved[tree.parent(node as u32) as usize]
        };
    }
    let data = tree.pixel_node.iter().map(|&node| resolved[node as usize]).collect();
    GrayImage::new(tree.rows, tree.cols, tree.levels, data)
}
