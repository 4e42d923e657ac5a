//! Shared oracles for the integration and acceptance suites.
//!
//! Everything here recomputes results through deliberately naive routes —
//! flood fills over explicit pixel sets, quadratic scans — and must stay
//! independent of the library's implementation paths.

use std::collections::BTreeSet;

/// Shape family of an image computed by direct enumeration: for every
/// threshold, flood-fill the threshold-set components (8-connectivity for
/// upper sets, 4 for lower), discard components touching the frame, and
/// fill holes by removing everything the frame reaches through the
/// complement (dual connectivity). The family is the set of distinct pixel
/// sets, with the full domain added as root.
pub fn naive_shape_family(rows: usize, cols: usize, data: &[u16]) -> BTreeSet<BTreeSet<usize>> {
    assert_eq!(data.len(), rows * cols);
    let ext_rows = rows + 2;
    let ext_cols = cols + 2;
    // Lower median of the border values plays the value at infinity.
    let mut border = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if r == 0 || c == 0 || r == rows - 1 || c == cols - 1 {
                border.push(data[r * cols + c]);
            }
        }
    }
    border.sort_unstable();
    let vinf = border[(border.len() - 1) / 2];
    let value = |er: usize, ec: usize| -> u16 {
        if er == 0 || ec == 0 || er == ext_rows - 1 || ec == ext_cols - 1 {
            vinf
        } else {
            data[(er - 1) * cols + (ec - 1)]
        }
    };
    let neighbors = |er: usize, ec: usize, conn8: bool| -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for dr in -1isize..=1 {
            for dc in -1isize..=1 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                if !conn8 && dr != 0 && dc != 0 {
                    continue;
                }
                let nr = er as isize + dr;
                let nc = ec as isize + dc;
                if nr >= 0 && nc >= 0 && (nr as usize) < ext_rows && (nc as usize) < ext_cols {
                    out.push((nr as usize, nc as usize));
                }
            }
        }
        out
    };

    let max_level = data.iter().copied().max().unwrap_or(0).max(vinf);
    let mut family: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
    family.insert((0..rows * cols).collect());

    // Both polarities over every integer threshold.
    for lambda in 0..=u32::from(max_level) + 1 {
        for upper in [true, false] {
            let in_set = |er: usize, ec: usize| -> bool {
                if upper {
                    u32::from(value(er, ec)) >= lambda
                } else {
                    u32::from(value(er, ec)) < lambda
                }
            };
            let set_conn8 = upper;
            // Flood-fill components of the threshold set.
            let mut seen = vec![false; ext_rows * ext_cols];
            for sr in 0..ext_rows {
                for sc in 0..ext_cols {
                    if seen[sr * ext_cols + sc] || !in_set(sr, sc) {
                        continue;
                    }
                    let mut comp = Vec::new();
                    let mut stack = vec![(sr, sc)];
                    seen[sr * ext_cols + sc] = true;
                    let mut touches_frame = false;
                    while let Some((er, ec)) = stack.pop() {
                        if er == 0 || ec == 0 || er == ext_rows - 1 || ec == ext_cols - 1 {
                            touches_frame = true;
                        }
                        comp.push((er, ec));
                        for (nr, nc) in neighbors(er, ec, set_conn8) {
                            if !seen[nr * ext_cols + nc] && in_set(nr, nc) {
                                seen[nr * ext_cols + nc] = true;
                                stack.push((nr, nc));
                            }
                        }
                    }
                    if touches_frame {
                        continue;
                    }
                    // Saturate: remove everything the frame reaches through
                    // the complement of this component (dual connectivity).
                    let in_comp: BTreeSet<(usize, usize)> = comp.iter().copied().collect();
                    let mut reached = vec![false; ext_rows * ext_cols];
                    let mut stack = vec![(0usize, 0usize)];
                    reached[0] = true;
                    while let Some((er, ec)) = stack.pop() {
                        for (nr, nc) in neighbors(er, ec, !set_conn8) {
                            if !reached[nr * ext_cols + nc] && !in_comp.contains(&(nr, nc)) {
                                reached[nr * ext_cols + nc] = true;
                                stack.push((nr, nc));
                            }
                        }
                    }
                    let mut shape = BTreeSet::new();
                    for er in 1..ext_rows - 1 {
                        for ec in 1..ext_cols - 1 {
                            if !reached[er * ext_cols + ec] {
                                shape.insert((er - 1) * cols + (ec - 1));
                            }
                        }
                    }
                    family.insert(shape);
                }
            }
        }
    }
    family
}

/// Extract the shape family of a built tree: each node's full pixel support
/// via ancestor walks from every pixel's smallest shape.
pub fn tree_shape_family(tree: &landfuse_core::tos::TreeOfShapes) -> BTreeSet<BTreeSet<usize>> {
    let n = tree.node_count();
    let mut supports: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for p in 0..tree.rows * tree.cols {
        let mut node = tree.pixel_node(p);
        loop {
            supports[node as usize].insert(p);
            if node == landfuse_core::tos::TreeOfShapes::ROOT {
                break;
            }
            node = tree.parent(node);
        }
    }
    supports.into_iter().collect()
}
