//! Even-odd scanline fill sampled at pixel centers.

use super::{PolygonSet, Ring};
use crate::morphology::InstanceMask;

/// Fills `r` into `mask` using the even-odd rule at pixel centers `(c + 0.5, r + 0.5)`.
fn fill_ring(r: &Ring, mask: &mut InstanceMask) {
    let (h, w) = (mask.height(), mask.width());
    let pts = r.vertices();
    let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in pts {
        ymin = ymin.min(p.y);
        ymax = ymax.max(p.y);
    }
    let row_lo = (ymin - 0.5).ceil().max(0.0);
    let row_hi = (ymax - 0.5).ceil().min(h as f64);
    if row_lo >= row_hi {
        return;
    }
    let mut xs: Vec<f64> = Vec::new();
    for row in row_lo as usize..row_hi as usize {
        let yc = row as f64 + 0.5;
        xs.clear();
        for i in 0..pts.len() {
            let a = pts[i];
            let b = pts[(i + 1) % pts.len()];
            if (a.y <= yc) != (b.y <= yc) {
                xs.push(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            // Columns whose center lies in [x0, x1).
            let c0 = (pair[0] - 0.5).ceil().clamp(0.0, w as f64) as usize;
            let c1 = (pair[1] - 0.5).ceil().clamp(0.0, w as f64) as usize;
            mask.fill_span(row, c0, c1);
        }
    }
}

pub fn rasterize_ring(r: &Ring, height: usize, width: usize) -> InstanceMask {
    let mut m = InstanceMask::new(height, width);
    fill_ring(r, &mut m);
    m
}

/// Rasterizes every ring with the even-odd rule and takes the union of the
/// parts. Pixels outside the image are discarded.
pub fn rasterize(p: &PolygonSet, height: usize, width: usize) -> InstanceMask {
    let mut m = InstanceMask::new(height, width);
    for r in &p.rings {
        let mut part = InstanceMask::new(height, width);
        fill_ring(r, &mut part);
        m.union_with(&part).expect("same dims");
    }
    m
}
