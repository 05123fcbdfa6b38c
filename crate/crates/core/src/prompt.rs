//! Point and box prompts for promptable segmenters.
//!
//! Points are pixel indices `(column, row)`. Boxes are half-open pixel
//! extents `(x1, y1, x2, y2)`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coco::Dataset;
use crate::error::{Error, Result};
use crate::morphology::{erode, InstanceMask};
use crate::noise::{stream, stream_rng, sub_seed};

/// Standard deviation of the corner noise added to boxes, in pixels.
pub const BOX_CORNER_SIGMA: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Point,
    Box,
}

impl std::str::FromStr for PromptKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "point" => Ok(PromptKind::Point),
            "box" => Ok(PromptKind::Box),
            _ => Err(Error::Config(format!("unknown prompt kind {s:?}"))),
        }
    }
}

/// One line of `prompts.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prompt {
    pub image_id: i64,
    pub annotation_id: i64,
    pub kind: PromptKind,
    /// `[x, y]` for points, `[x1, y1, x2, y2]` for boxes.
    pub payload: Vec<f64>,
    pub perturbed: bool,
    pub seed: u64,
}

/// The foreground pixel deepest inside the mask under the Chebyshev
/// distance to background (outside the image counts as background). Ties
/// go to the smallest row, then the smallest column.
pub fn center_point(m: &InstanceMask) -> Result<(usize, usize)> {
    if m.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut core = m.clone();
    loop {
        let next = erode(&core, 3);
        if next.is_empty() {
            break;
        }
        core = next;
    }
    let first = core.iter_ones().next().expect("nonempty");
    Ok(first)
}

/// Uniform draw over foreground pixels.
pub fn random_point<R: Rng + ?Sized>(m: &InstanceMask, rng: &mut R) -> Result<(usize, usize)> {
    let n = m.count();
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    let k = rng.random_range(0..n) as usize;
    Ok(m.iter_ones().nth(k).expect("k < count"))
}

pub fn tight_box(m: &InstanceMask) -> Result<[f64; 4]> {
    let (x0, y0, x1, y1) = m.bounds().ok_or(Error::EmptyMask)?;
    Ok([x0 as f64, y0 as f64, x1 as f64, y1 as f64])
}

/// A perturbation of one box corner. Corners are numbered clockwise from
/// `(x1, y1)`: 0 = top-left, 1 = top-right, 2 = bottom-right, 3 = bottom-left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerJitter {
    pub corner: usize,
    pub dx: f64,
    pub dy: f64,
}

impl CornerJitter {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let noise = Normal::new(0.0, BOX_CORNER_SIGMA).expect("valid sigma");
        let corner = rng.random_range(0..4);
        let dx = noise.sample(rng);
        let dy = noise.sample(rng);
        CornerJitter { corner, dx, dy }
    }

    /// Moves the chosen corner, re-orders the coordinates and clamps to the
    /// image. A box squeezed to zero width or height is widened to one pixel.
    pub fn apply(&self, b: [f64; 4], width: usize, height: usize) -> [f64; 4] {
        let [mut x1, mut y1, mut x2, mut y2] = b;
        match self.corner {
            0 => (x1, y1) = (x1 + self.dx, y1 + self.dy),
            1 => (x2, y1) = (x2 + self.dx, y1 + self.dy),
            2 => (x2, y2) = (x2 + self.dx, y2 + self.dy),
            _ => (x1, y2) = (x1 + self.dx, y2 + self.dy),
        }
        let (xa, xb) = order_span(x1, x2, width as f64);
        let (ya, yb) = order_span(y1, y2, height as f64);
        [xa, ya, xb, yb]
    }
}

fn order_span(a: f64, b: f64, limit: f64) -> (f64, f64) {
    let lo = a.min(b).clamp(0.0, limit);
    let hi = a.max(b).clamp(0.0, limit);
    if hi > lo {
        (lo, hi)
    } else if hi + 1.0 <= limit {
        (lo, hi + 1.0)
    } else {
        (lo - 1.0, hi)
    }
}

/// Adds `N(0, 2)` noise to both coordinates of one uniformly chosen corner.
pub fn noisy_box<R: Rng + ?Sized>(b: [f64; 4], width: usize, height: usize, rng: &mut R) -> [f64; 4] {
    CornerJitter::sample(rng).apply(b, width, height)
}

/// One prompt per non-crowd annotation with a nonempty mask, ordered by
/// annotation id. Random choices use the annotation's sub-seed.
pub fn generate_prompts(d: &Dataset, kind: PromptKind, noisy: bool, seed: u64) -> Result<Vec<Prompt>> {
    d.validate()?;
    let images = d.image_index();
    let mut anns: Vec<_> = d.annotations.iter().filter(|a| !a.iscrowd).collect();
    anns.sort_by_key(|a| a.id);
    let prompts = anns
        .par_iter()
        .filter_map(|ann| {
            let image = images[&ann.image_id];
            let mask = ann.mask(image);
            if mask.is_empty() {
                return None;
            }
            let s = sub_seed(seed, ann.id);
            let mut rng = stream_rng(s, stream::PROMPT);
            let payload = match (kind, noisy) {
                (PromptKind::Point, false) => {
                    let (x, y) = center_point(&mask).ok()?;
                    vec![x as f64, y as f64]
                }
                (PromptKind::Point, true) => {
                    let (x, y) = random_point(&mask, &mut rng).ok()?;
                    vec![x as f64, y as f64]
                }
                (PromptKind::Box, false) => tight_box(&mask).ok()?.to_vec(),
                (PromptKind::Box, true) => {
                    let b = tight_box(&mask).ok()?;
                    noisy_box(b, image.width, image.height, &mut rng).to_vec()
                }
            };
            Some(Prompt {
                image_id: ann.image_id,
                annotation_id: ann.id,
                kind,
                payload,
                perturbed: noisy,
                seed: s,
            })
        })
        .collect();
    Ok(prompts)
}

pub fn prompts_to_jsonl(prompts: &[Prompt]) -> Vec<u8> {
    let mut out = Vec::new();
    for p in prompts {
        serde_json::to_writer(&mut out, p).expect("prompt serialization cannot fail");
        out.push(b'\n');
    }
    out
}
