//! Polygon-domain primitives.
//!
//! Coordinates are in pixels with the origin at the top-left image corner;
//! pixel `(c, r)` covers `[c, c+1) × [r, r+1)` and is sampled at its center.

mod contour;
mod raster;
mod simplify;

pub use contour::extract_contours;
pub use raster::{rasterize, rasterize_ring};
pub use simplify::{simplify, SimplificationCollapse};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

/// A closed polygon; the last vertex connects back to the first.
#[derive(Debug, Clone, PartialEq)]
pub struct Ring {
    vertices: Vec<Point>,
}

impl Ring {
    /// Validates that the ring has at least three finite vertices.
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Validation(format!(
                "ring has {} vertices, need at least 3",
                vertices.len()
            )));
        }
        if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::Validation("ring has a non-finite coordinate".into()));
        }
        Ok(Ring { vertices })
    }

    /// Builds a ring from COCO's flat `[x0, y0, x1, y1, ...]` layout.
    pub fn from_flat(coords: &[f64]) -> Result<Self> {
        if !coords.len().is_multiple_of(2) {
            return Err(Error::Validation(format!(
                "polygon has an odd number of coordinates ({})",
                coords.len()
            )));
        }
        Ring::new(coords.chunks_exact(2).map(|c| Point::new(c[0], c[1])).collect())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.vertices.iter().flat_map(|p| [p.x, p.y]).collect()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Absolute shoelace area.
    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        let mut twice = 0.0;
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            twice += p.x * q.y - q.x * p.y;
        }
        (twice * 0.5).abs()
    }

    pub fn map_points(&self, f: impl FnMut(&Point) -> Point) -> Ring {
        Ring {
            vertices: self.vertices.iter().map(f).collect(),
        }
    }
}

/// The polygon parts of one instance.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolygonSet {
    pub rings: Vec<Ring>,
}

impl PolygonSet {
    pub fn new(rings: Vec<Ring>) -> Self {
        PolygonSet { rings }
    }

    pub fn is_empty(&self) -> bool {
        self.rings.is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        self.rings.iter().map(Ring::len).sum()
    }
}

/// Shoelace area summed over rings.
pub fn polygon_area(p: &PolygonSet) -> f64 {
    p.rings.iter().map(Ring::area).sum()
}

/// Tight axis-aligned hull as `(x, y, w, h)`; all zeros for an empty set.
pub fn polygon_bbox(p: &PolygonSet) -> [f64; 4] {
    let mut pts = p.rings.iter().flat_map(|r| r.vertices.iter());
    let Some(first) = pts.next() else {
        return [0.0; 4];
    };
    let (mut x0, mut y0, mut x1, mut y1) = (first.x, first.y, first.x, first.y);
    for q in pts {
        x0 = x0.min(q.x);
        y0 = y0.min(q.y);
        x1 = x1.max(q.x);
        y1 = y1.max(q.y);
    }
    [x0, y0, x1 - x0, y1 - y0]
}

pub fn shift(r: &Ring, dx: f64, dy: f64) -> Ring {
    r.map_points(|p| Point::new(p.x + dx, p.y + dy))
}

/// How Rademacher signs are shared between the two axes of a displacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignMode {
    /// Independent sign per coordinate.
    #[default]
    PerCoordinate,
    /// One sign draw shared by both coordinates of a vertex.
    Shared,
}

/// Signed displacement `B · |N(mu, sigma)|` with `B` uniform on `{-1, +1}`.
#[derive(Debug, Clone, Copy)]
pub struct Jitter {
    magnitude: Normal<f64>,
    signs: SignMode,
}

impl Jitter {
    pub fn new(mu: f64, sigma: f64, signs: SignMode) -> Result<Self> {
        let magnitude = Normal::new(mu, sigma)
            .map_err(|e| Error::Config(format!("invalid normal ({mu}, {sigma}): {e}")))?;
        Ok(Jitter { magnitude, signs })
    }

    fn sign<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        if rng.random::<bool>() {
            1.0
        } else {
            -1.0
        }
    }

    /// Draws one `(dx, dy)` pair.
    ///
    /// Draw order is fixed: sign x, magnitude x, sign y, magnitude y (the
    /// second sign is skipped in shared mode).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let sx = Self::sign(rng);
        let mx = self.magnitude.sample(rng).abs();
        let sy = match self.signs {
            SignMode::PerCoordinate => Self::sign(rng),
            SignMode::Shared => sx,
        };
        let my = self.magnitude.sample(rng).abs();
        (sx * mx, sy * my)
    }
}

/// Applies a displacement given as `(sign, magnitude)` per axis.
pub fn displace(p: Point, x: (f64, f64), y: (f64, f64)) -> Point {
    Point::new(p.x + x.0 * x.1.abs(), p.y + y.0 * y.1.abs())
}

/// Displaces every vertex by an independent jitter draw. Clamping to the
/// image is left to the caller.
pub fn perturb_vertices<R: Rng + ?Sized>(r: &Ring, jitter: &Jitter, rng: &mut R) -> Ring {
    r.map_points(|p| {
        let (dx, dy) = jitter.sample(rng);
        Point::new(p.x + dx, p.y + dy)
    })
}
