//! Slow, obviously-correct reference implementations used by the
//! integration and acceptance tests. Nothing here calls into the library's
//! algorithms; masks are plain `Vec<Vec<bool>>` indexed `[row][col]`.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::VecDeque;

use rand::Rng;
use segnoise::InstanceMask;

pub type Grid = Vec<Vec<bool>>;

pub fn to_grid(m: &InstanceMask) -> Grid {
    (0..m.height())
        .map(|y| (0..m.width()).map(|x| m.get(x, y)).collect())
        .collect()
}

pub fn from_grid(g: &Grid) -> InstanceMask {
    let h = g.len();
    let w = g.first().map_or(0, Vec::len);
    InstanceMask::from_fn(h, w, |x, y| g[y][x])
}

fn at(g: &Grid, x: i64, y: i64) -> bool {
    y >= 0 && x >= 0 && (y as usize) < g.len() && (x as usize) < g[0].len() && g[y as usize][x as usize]
}

/// Offsets covered by a k-wide window anchored at floor(k/2).
fn window(k: usize) -> std::ops::RangeInclusive<i64> {
    let lo = -((k / 2) as i64);
    lo..=lo + k as i64 - 1
}

/// Min filter over the k x k square; pixels outside the image are background.
pub fn erode(g: &Grid, k: usize) -> Grid {
    if k <= 1 {
        return g.clone();
    }
    let (h, w) = (g.len(), g[0].len());
    (0..h as i64)
        .map(|y| {
            (0..w as i64)
                .map(|x| window(k).all(|dy| window(k).all(|dx| at(g, x + dx, y + dy))))
                .collect()
        })
        .collect()
}

/// Max filter with the reflected square.
pub fn dilate(g: &Grid, k: usize) -> Grid {
    if k <= 1 {
        return g.clone();
    }
    let (h, w) = (g.len(), g[0].len());
    (0..h as i64)
        .map(|y| {
            (0..w as i64)
                .map(|x| window(k).any(|dy| window(k).any(|dx| at(g, x - dx, y - dy))))
                .collect()
        })
        .collect()
}

pub fn opening(g: &Grid, k: usize) -> Grid {
    dilate(&erode(g, k), k)
}

pub fn count(g: &Grid) -> u64 {
    g.iter().flatten().filter(|&&b| b).count() as u64
}

/// (intersection, union) pixel counts.
pub fn counts(a: &Grid, b: &Grid) -> (u64, u64) {
    let mut i = 0;
    let mut u = 0;
    for (ra, rb) in a.iter().zip(b) {
        for (&p, &q) in ra.iter().zip(rb) {
            i += (p && q) as u64;
            u += (p || q) as u64;
        }
    }
    (i, u)
}

pub fn iou(a: &Grid, b: &Grid) -> f64 {
    let (i, u) = counts(a, b);
    if u == 0 {
        1.0
    } else {
        i as f64 / u as f64
    }
}

/// Foreground pixels within Chebyshev distance `d` of the background (or
/// the image border).
pub fn band(g: &Grid, d: usize) -> Grid {
    let (h, w) = (g.len() as i64, g[0].len() as i64);
    let d = d as i64;
    (0..h)
        .map(|y| {
            (0..w)
                .map(|x| {
                    at(g, x, y)
                        && (-d..=d).any(|dy| (-d..=d).any(|dx| !at(g, x + dx, y + dy)))
                })
                .collect()
        })
        .collect()
}

pub fn boundary_iou(a: &Grid, b: &Grid, d: usize) -> f64 {
    iou(&band(a, d), &band(b, d))
}

/// Foreground plus every background pixel not 4-connected to the outside.
pub fn fill_holes(g: &Grid) -> Grid {
    let (h, w) = (g.len(), g[0].len());
    let mut outside = vec![vec![false; w]; h];
    let mut queue = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            if (y == 0 || x == 0 || y == h - 1 || x == w - 1) && !g[y][x] {
                outside[y][x] = true;
                queue.push_back((x, y));
            }
        }
    }
    while let Some((x, y)) = queue.pop_front() {
        let n = [(x.wrapping_sub(1), y), (x + 1, y), (x, y.wrapping_sub(1)), (x, y + 1)];
        for (nx, ny) in n {
            if nx < w && ny < h && !g[ny][nx] && !outside[ny][nx] {
                outside[ny][nx] = true;
                queue.push_back((nx, ny));
            }
        }
    }
    outside
        .iter()
        .map(|r| r.iter().map(|&o| !o).collect())
        .collect()
}

/// A mask built from a few random rectangles and discs plus salt noise,
/// so both thin and solid structures occur.
pub fn random_grid<R: Rng>(rng: &mut R, h: usize, w: usize) -> Grid {
    let mut g = vec![vec![false; w]; h];
    for _ in 0..rng.random_range(1..5) {
        let (x0, y0) = (rng.random_range(0..w), rng.random_range(0..h));
        let (bw, bh) = (rng.random_range(1..w / 2), rng.random_range(1..h / 2));
        let disc = rng.random::<bool>();
        for y in y0..(y0 + bh).min(h) {
            for x in x0..(x0 + bw).min(w) {
                let inside = if disc {
                    let (cx, cy) = (x0 as f64 + bw as f64 / 2.0, y0 as f64 + bh as f64 / 2.0);
                    let (rx, ry) = (bw as f64 / 2.0, bh as f64 / 2.0);
                    ((x as f64 + 0.5 - cx) / rx).powi(2) + ((y as f64 + 0.5 - cy) / ry).powi(2) <= 1.0
                } else {
                    true
                };
                g[y][x] |= inside;
            }
        }
    }
    for _ in 0..rng.random_range(0..40) {
        let (x, y) = (rng.random_range(0..w), rng.random_range(0..h));
        g[y][x] = !g[y][x];
    }
    g
}

/// `a/b >= c/d` for nonnegative counts, with 0/0 read as 1.
fn ratio_ge(a: u64, b: u64, c: u64, d: u64) -> bool {
    let (a, b) = if b == 0 { (1, 1) } else { (a, b) };
    let (c, d) = if d == 0 { (1, 1) } else { (c, d) };
    a as u128 * d as u128 >= c as u128 * b as u128
}

/// Exhaustive matching oracle. `overlaps[p][g]` holds (intersection,
/// union); `order` lists predictions from highest to lowest priority.
/// Enumerates every one-to-one assignment that respects the threshold and
/// keeps the one whose per-prediction outcomes, read in priority order,
/// are lexicographically best: matched beats unmatched, then higher IoU,
/// then lower ground-truth index.
pub fn exhaustive_match(overlaps: &[Vec<(u64, u64)>], order: &[usize], n_gt: usize, threshold_pct: u64) -> Vec<Option<usize>> {
    fn better(a: &[Option<usize>], b: &[Option<usize>], overlaps: &[Vec<(u64, u64)>], order: &[usize]) -> bool {
        for &p in order {
            match (a[p], b[p]) {
                (Some(x), Some(y)) if x != y => {
                    let (ia, ua) = overlaps[p][x];
                    let (ib, ub) = overlaps[p][y];
                    let ge = ratio_ge(ia, ua, ib, ub);
                    let le = ratio_ge(ib, ub, ia, ua);
                    if ge && !le {
                        return true;
                    }
                    if le && !ge {
                        return false;
                    }
                    return x < y;
                }
                (Some(_), None) => return true,
                (None, Some(_)) => return false,
                _ => {}
            }
        }
        false
    }
    fn search(
        i: usize,
        cur: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        best: &mut Vec<Option<usize>>,
        overlaps: &[Vec<(u64, u64)>],
        order: &[usize],
        t: u64,
    ) {
        if i == order.len() {
            if better(cur, best, overlaps, order) {
                *best = cur.clone();
            }
            return;
        }
        let p = order[i];
        search(i + 1, cur, used, best, overlaps, order, t);
        for g in 0..used.len() {
            let (inter, union) = overlaps[p][g];
            let passes = if union == 0 { true } else { 100 * inter >= t * union };
            if !used[g] && passes {
                used[g] = true;
                cur[p] = Some(g);
                search(i + 1, cur, used, best, overlaps, order, t);
                cur[p] = None;
                used[g] = false;
            }
        }
    }
    let mut best = vec![None; overlaps.len()];
    let mut cur = vec![None; overlaps.len()];
    let mut used = vec![false; n_gt];
    search(0, &mut cur, &mut used, &mut best, overlaps, order, threshold_pct);
    best
}

/// Largest number of threshold-passing pairs in any one-to-one assignment.
pub fn max_cardinality(overlaps: &[Vec<(u64, u64)>], n_gt: usize, threshold_pct: u64) -> usize {
    fn go(p: usize, used: &mut Vec<bool>, overlaps: &[Vec<(u64, u64)>], t: u64) -> usize {
        if p == overlaps.len() {
            return 0;
        }
        let mut best = go(p + 1, used, overlaps, t);
        for g in 0..used.len() {
            let (i, u) = overlaps[p][g];
            if !used[g] && (u == 0 || 100 * i >= t * u) {
                used[g] = true;
                best = best.max(1 + go(p + 1, used, overlaps, t));
                used[g] = false;
            }
        }
        best
    }
    go(0, &mut vec![false; n_gt], overlaps, threshold_pct)
}

/// Compressed COCO RLE string, written from the format description with
/// two's-complement arithmetic rather than shifts of a signed value.
pub fn rle_string(counts: &[u32]) -> String {
    let mut out = String::new();
    for (i, &c) in counts.iter().enumerate() {
        let mut v = c as i64;
        if i > 2 {
            v -= counts[i - 2] as i64;
        }
        loop {
            let chunk = (v.rem_euclid(32)) as u8;
            v = v.div_euclid(32);
            let done = (v == 0 && chunk & 0x10 == 0) || (v == -1 && chunk & 0x10 != 0);
            let byte = if done { chunk } else { chunk | 0x20 };
            out.push((byte + 48) as char);
            if done {
                break;
            }
        }
    }
    out
}

/// Mean of |N(0, sigma)|.
pub fn half_normal_mean(sigma: f64) -> f64 {
    sigma * (2.0 / std::f64::consts::PI).sqrt()
}
