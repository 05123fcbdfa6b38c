//! Douglas–Peucker simplification of closed rings.

use super::{Point, Ring};

/// Fewer than three vertices survived simplification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("simplification left {survivors} vertices")]
pub struct SimplificationCollapse {
    pub survivors: usize,
}

fn dist_sq(a: Point, b: Point) -> f64 {
    let (dx, dy) = (a.x - b.x, a.y - b.y);
    dx * dx + dy * dy
}

/// Distance from `p` to the segment `a`–`b`.
pub(crate) fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (vx, vy) = (b.x - a.x, b.y - a.y);
    let len_sq = vx * vx + vy * vy;
    if len_sq == 0.0 {
        return dist_sq(p, a).sqrt();
    }
    let t = (((p.x - a.x) * vx + (p.y - a.y) * vy) / len_sq).clamp(0.0, 1.0);
    dist_sq(p, Point::new(a.x + t * vx, a.y + t * vy)).sqrt()
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Indices of the convex hull (monotone chain).
fn hull_indices(pts: &[Point]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&i, &j| {
        pts[i]
            .x
            .total_cmp(&pts[j].x)
            .then(pts[i].y.total_cmp(&pts[j].y))
            .then(i.cmp(&j))
    });
    if idx.len() < 3 {
        return idx;
    }
    let mut hull: Vec<usize> = Vec::with_capacity(2 * idx.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &usize>> = if pass == 0 {
            Box::new(idx.iter())
        } else {
            Box::new(idx.iter().rev())
        };
        for &i in iter {
            while hull.len() >= start + 2
                && cross(pts[hull[hull.len() - 2]], pts[hull[hull.len() - 1]], pts[i]) <= 0.0
            {
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    if hull.is_empty() {
        // All points coincide.
        hull.push(idx[0]);
    }
    hull
}

/// The two mutually farthest vertices, as an ordered index pair. Ties go to
/// the lexicographically smallest pair.
fn farthest_pair(pts: &[Point]) -> (usize, usize) {
    let mut hull = hull_indices(pts);
    hull.sort_unstable();
    hull.dedup();
    let mut best = (0, pts.len() - 1, -1.0);
    for (a, &i) in hull.iter().enumerate() {
        for &j in &hull[a + 1..] {
            let d = dist_sq(pts[i], pts[j]);
            if d > best.2 || (d == best.2 && (i, j) < (best.0, best.1)) {
                best = (i, j, d);
            }
        }
    }
    (best.0, best.1)
}

/// Marks vertices of the open chain `chain[0] .. chain[last]` to keep.
fn simplify_chain(pts: &[Point], chain: &[usize], epsilon: f64, keep: &mut [bool]) {
    if chain.len() < 3 {
        return;
    }
    let mut stack = vec![(0usize, chain.len() - 1)];
    while let Some((first, last)) = stack.pop() {
        if last <= first + 1 {
            continue;
        }
        let (a, b) = (pts[chain[first]], pts[chain[last]]);
        let mut far = (first, -1.0);
        for (k, &ci) in chain.iter().enumerate().take(last).skip(first + 1) {
            let d = segment_distance(pts[ci], a, b);
            if d > far.1 {
                far = (k, d);
            }
        }
        if far.1 > epsilon {
            keep[chain[far.0]] = true;
            stack.push((first, far.0));
            stack.push((far.0, last));
        }
    }
}

/// Douglas–Peucker simplification of a closed ring with tolerance `epsilon`.
///
/// The ring is split at its two mutually farthest vertices and each of the
/// two open chains is simplified independently. Surviving vertices keep
/// their original order, so the output is a subsequence of the input.
/// `epsilon <= 0` returns the ring unchanged.
pub fn simplify(r: &Ring, epsilon: f64) -> Result<Ring, SimplificationCollapse> {
    if epsilon <= 0.0 || r.len() <= 3 {
        return Ok(r.clone());
    }
    let pts = r.vertices();
    let n = pts.len();
    let (i, j) = farthest_pair(pts);
    let mut keep = vec![false; n];
    keep[i] = true;
    keep[j] = true;
    let forward: Vec<usize> = (i..=j).collect();
    let backward: Vec<usize> = (j..n).chain(0..=i).collect();
    simplify_chain(pts, &forward, epsilon, &mut keep);
    simplify_chain(pts, &backward, epsilon, &mut keep);

    let kept: Vec<Point> = pts
        .iter()
        .zip(&keep)
        .filter_map(|(p, &k)| k.then_some(*p))
        .collect();
    if kept.len() < 3 {
        return Err(SimplificationCollapse {
            survivors: kept.len(),
        });
    }
    Ok(Ring::new(kept).expect("subsequence of a valid ring"))
}
