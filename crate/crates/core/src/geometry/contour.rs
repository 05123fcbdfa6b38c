//! Border following from a bitmask back to polygons.
//!
//! Contours run along pixel edges (integer corner coordinates) rather than
//! through pixel centers, so re-rasterizing a traced ring reproduces the
//! component exactly, minus any holes.

use std::collections::VecDeque;

use super::simplify::segment_distance;
use super::{Point, PolygonSet, Ring};
use crate::morphology::InstanceMask;

const COLLINEAR_EPS: f64 = 1e-6;

/// Labels 8-connected components in raster order; 0 is background.
fn label_components(m: &InstanceMask) -> (Vec<u32>, u32) {
    let (h, w) = m.dims();
    let mut labels = vec![0u32; h * w];
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for (x, y) in m.iter_ones() {
        if labels[y * w + x] != 0 {
            continue;
        }
        next += 1;
        labels[y * w + x] = next;
        queue.push_back((x, y));
        while let Some((cx, cy)) = queue.pop_front() {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (nx, ny) = (cx as i64 + dx, cy as i64 + dy);
                    if !m.get_or_bg(nx, ny) {
                        continue;
                    }
                    let idx = ny as usize * w + nx as usize;
                    if labels[idx] == 0 {
                        labels[idx] = next;
                        queue.push_back((nx as usize, ny as usize));
                    }
                }
            }
        }
    }
    (labels, next)
}

// Headings: 0 = +x, 1 = +y, 2 = -x, 3 = -y (image coordinates, y down).
const STEP: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

/// Pixels ahead-left and ahead-right of corner `(cx, cy)` when heading `dir`.
fn ahead(cx: i64, cy: i64, dir: usize) -> ((i64, i64), (i64, i64)) {
    match dir {
        0 => ((cx, cy - 1), (cx, cy)),
        1 => ((cx, cy), (cx - 1, cy)),
        2 => ((cx - 1, cy), (cx - 1, cy - 1)),
        _ => ((cx - 1, cy - 1), (cx, cy - 1)),
    }
}

/// Traces the outer boundary of component `label`, starting at the top-left
/// corner of its first pixel in raster order. Foreground stays on the right;
/// left turns take priority so diagonal neighbours stay connected.
fn trace_outer(labels: &[u32], h: usize, w: usize, label: u32, start: (usize, usize)) -> Vec<Point> {
    let fg = |(x, y): (i64, i64)| {
        x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && labels[y as usize * w + x as usize] == label
    };
    let origin = (start.0 as i64, start.1 as i64);
    let mut corner = origin;
    let mut dir = 0usize;
    let mut out = vec![Point::new(origin.0 as f64, origin.1 as f64)];
    loop {
        corner = (corner.0 + STEP[dir].0, corner.1 + STEP[dir].1);
        let (left, right) = ahead(corner.0, corner.1, dir);
        let next = if fg(left) {
            (dir + 3) % 4
        } else if fg(right) {
            dir
        } else {
            (dir + 1) % 4
        };
        if corner == origin && next == 0 {
            break;
        }
        if next != dir {
            out.push(Point::new(corner.0 as f64, corner.1 as f64));
        }
        dir = next;
    }
    out
}

/// Removes vertices lying within `COLLINEAR_EPS` of the segment joining
/// their neighbours.
fn prune_collinear(mut pts: Vec<Point>) -> Vec<Point> {
    while pts.len() > 3 {
        let n = pts.len();
        let hit = (0..n).find(|&i| {
            segment_distance(pts[i], pts[(i + n - 1) % n], pts[(i + 1) % n]) < COLLINEAR_EPS
        });
        match hit {
            Some(i) => {
                pts.remove(i);
            }
            None => break,
        }
    }
    pts
}

/// One exterior ring per 8-connected component, in raster order of each
/// component's first pixel. Holes are not represented.
pub fn extract_contours(m: &InstanceMask) -> PolygonSet {
    let (h, w) = m.dims();
    let (labels, count) = label_components(m);
    let mut starts = vec![None; count as usize];
    for (x, y) in m.iter_ones() {
        let l = labels[y * w + x] as usize - 1;
        if starts[l].is_none() {
            starts[l] = Some((x, y));
        }
    }
    let rings = starts
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let pts = trace_outer(&labels, h, w, i as u32 + 1, s.expect("every label has a pixel"));
            Ring::new(prune_collinear(pts)).expect("traced boundaries have at least 4 corners")
        })
        .collect();
    PolygonSet::new(rings)
}
