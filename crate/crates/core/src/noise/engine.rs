//! Per-annotation noise pipeline.
//!
//! Every annotation gets its own sub-seed, and every noise type draws from
//! its own ChaCha stream under that seed. Turning one noise type on or off
//! therefore never shifts the draws seen by another, and results are
//! independent of worker count.
//!
//! Composite order: deletion, class confusion, approximation, localization,
//! scale. Polygon-domain steps run before the single rasterize/morph/trace
//! round trip of the scale step. Crowd (RLE) annotations skip the polygon
//! steps.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Gaussian, NoiseConfig, NoiseKind, NoiseMode};
use super::seed::sub_seed;
use crate::coco::{rle_encode, Annotation, Dataset, ImageInfo, Segmentation};
use crate::error::{Error, Result};
use crate::geometry::{
    extract_contours, rasterize, shift, simplify, Jitter, Point, PolygonSet, Ring,
};
use crate::morphology::{dilate, erode, opening, InstanceMask};

/// ChaCha stream ids, one per random source.
pub(crate) mod stream {
    pub const DELETION: u64 = 1;
    pub const CLASS: u64 = 2;
    pub const APPROXIMATION: u64 = 3;
    pub const LOCALIZATION: u64 = 4;
    pub const SCALE: u64 = 5;
    pub const SHIFT: u64 = 6;
    pub const PROMPT: u64 = 7;
    pub const SYNTH: u64 = 8;
}

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Kept,
    Deleted,
    /// Dropped because a spatial operation left nothing behind.
    Collapsed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MorphOp {
    Erode,
    Dilate,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSwap {
    pub from: i64,
    pub to: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplacementSummary {
    pub vertices: usize,
    pub mean_abs_dx: f64,
    pub mean_abs_dy: f64,
    pub max_abs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleEvent {
    pub op: MorphOp,
    pub k: usize,
}

/// Audit record for one input annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeRecord {
    pub annotation_id: i64,
    pub image_id: i64,
    pub sub_seed: u64,
    pub mode: NoiseMode,
    pub outcome: Outcome,
    pub collapse_reason: Option<String>,
    pub class_swap: Option<ClassSwap>,
    pub epsilon: Option<f64>,
    pub dropped_rings: usize,
    pub localization: Option<DisplacementSummary>,
    pub shift: Option<[f64; 2]>,
    pub scale: Option<ScaleEvent>,
    /// Pixels added by discarding holes during contour tracing, when that
    /// changed the area by more than 1%.
    pub filled_hole_pixels: Option<u64>,
    pub skipped: Vec<String>,
}

impl ChangeRecord {
    fn new(ann: &Annotation, seed: u64, mode: NoiseMode) -> Self {
        ChangeRecord {
            annotation_id: ann.id,
            image_id: ann.image_id,
            sub_seed: seed,
            mode,
            outcome: Outcome::Kept,
            collapse_reason: None,
            class_swap: None,
            epsilon: None,
            dropped_rings: 0,
            localization: None,
            shift: None,
            scale: None,
            filled_hole_pixels: None,
            skipped: Vec::new(),
        }
    }

    fn collapse(&mut self, reason: &str) {
        self.outcome = Outcome::Collapsed;
        self.collapse_reason = Some(reason.to_string());
    }

    /// True when nothing about the annotation changed.
    pub fn is_identity(&self) -> bool {
        self.outcome == Outcome::Kept
            && self.class_swap.is_none()
            && self.dropped_rings == 0
            && self.epsilon.is_none_or(|e| e == 0.0)
            && self.localization.is_none_or(|l| l.max_abs == 0.0)
            && self.shift.is_none_or(|s| s == [0.0, 0.0])
            && self.scale.is_none_or(|s| s.k <= 1)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ChangeSummary {
    pub instances_in: usize,
    pub instances_out: usize,
    pub deleted: usize,
    pub collapsed: usize,
    pub class_swaps: usize,
}

/// One record per input annotation, ordered by annotation id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChangeLog {
    pub records: Vec<ChangeRecord>,
}

impl ChangeLog {
    /// JSON-lines rendering, one record per line.
    pub fn to_jsonl(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for r in &self.records {
            serde_json::to_writer(&mut out, r).expect("record serialization cannot fail");
            out.push(b'\n');
        }
        out
    }

    pub fn summary(&self) -> ChangeSummary {
        let mut s = ChangeSummary {
            instances_in: self.records.len(),
            ..Default::default()
        };
        for r in &self.records {
            match r.outcome {
                Outcome::Kept => s.instances_out += 1,
                Outcome::Deleted => s.deleted += 1,
                Outcome::Collapsed => s.collapsed += 1,
            }
            s.class_swaps += r.class_swap.is_some() as usize;
        }
        s
    }
}

/// `max(0, N(mu, sigma))`.
fn rectified(g: Gaussian, rng: &mut ChaCha8Rng) -> f64 {
    let n = Normal::new(g.mu, g.sigma).expect("validated config");
    n.sample(rng).max(0.0)
}

/// `max(0, floor(N(mu, sigma)))` as a kernel size.
pub fn sample_kernel(g: Gaussian, rng: &mut ChaCha8Rng) -> usize {
    let n = Normal::new(g.mu, g.sigma).expect("validated config");
    let k = n.sample(rng).floor();
    if k <= 0.0 {
        0
    } else {
        k as usize
    }
}

/// Fair coin (true = dilate) followed by the kernel size.
fn sample_scale(g: Gaussian, rng: &mut ChaCha8Rng) -> (bool, usize) {
    let grow = rng.random::<bool>();
    (grow, sample_kernel(g, rng))
}

fn clamp_point(p: Point, image: &ImageInfo) -> Point {
    Point::new(
        p.x.clamp(0.0, image.width as f64),
        p.y.clamp(0.0, image.height as f64),
    )
}

/// Working state of one annotation while noise is applied.
struct Work<'a> {
    ann: Annotation,
    image: &'a ImageInfo,
    record: ChangeRecord,
    seed: u64,
    modified: bool,
}

impl Work<'_> {
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        stream_rng(self.seed, stream)
    }

    fn alive(&self) -> bool {
        self.record.outcome == Outcome::Kept
    }

    fn deletion(&mut self, p: f64) {
        let mut rng = self.rng(stream::DELETION);
        if rng.random::<f64>() < p {
            self.record.outcome = Outcome::Deleted;
        }
    }

    fn class_confusion(&mut self, p: f64, candidates: &HashMap<i64, Vec<i64>>) {
        let mut rng = self.rng(stream::CLASS);
        let fire = rng.random::<f64>() < p;
        let pool = candidates.get(&self.ann.category_id).map(Vec::as_slice).unwrap_or(&[]);
        if fire && !pool.is_empty() {
            let to = pool[rng.random_range(0..pool.len())];
            self.record.class_swap = Some(ClassSwap {
                from: self.ann.category_id,
                to,
            });
            self.ann.category_id = to;
        }
    }

    fn approximation(&mut self, g: Gaussian) {
        let mut rng = self.rng(stream::APPROXIMATION);
        let eps = rectified(g, &mut rng);
        self.record.epsilon = Some(eps);
        let Segmentation::Polygons(p) = &self.ann.segmentation else {
            self.record.skipped.push("approximation: rle segmentation".into());
            return;
        };
        if eps == 0.0 {
            return;
        }
        let mut rings = Vec::with_capacity(p.rings.len());
        for r in &p.rings {
            match simplify(r, eps) {
                Ok(s) => rings.push(s),
                Err(_) => self.record.dropped_rings += 1,
            }
        }
        self.modified = true;
        if rings.is_empty() {
            self.record.collapse("simplification");
        } else {
            self.ann.segmentation = Segmentation::Polygons(PolygonSet::new(rings));
        }
    }

    fn localization(&mut self, jitter: &Jitter) {
        let mut rng = self.rng(stream::LOCALIZATION);
        let Segmentation::Polygons(p) = &self.ann.segmentation else {
            self.record.skipped.push("localization: rle segmentation".into());
            return;
        };
        let (mut sx, mut sy, mut max_abs, mut n) = (0.0, 0.0, 0.0f64, 0usize);
        let image = self.image;
        let rings: Vec<Ring> = p
            .rings
            .iter()
            .map(|r| {
                r.map_points(|&v| {
                    let (dx, dy) = jitter.sample(&mut rng);
                    sx += dx.abs();
                    sy += dy.abs();
                    max_abs = max_abs.max(dx.abs()).max(dy.abs());
                    n += 1;
                    if dx == 0.0 && dy == 0.0 {
                        v
                    } else {
                        clamp_point(Point::new(v.x + dx, v.y + dy), image)
                    }
                })
            })
            .collect();
        self.record.localization = Some(DisplacementSummary {
            vertices: n,
            mean_abs_dx: if n > 0 { sx / n as f64 } else { 0.0 },
            mean_abs_dy: if n > 0 { sy / n as f64 } else { 0.0 },
            max_abs,
        });
        if max_abs > 0.0 {
            self.modified = true;
            self.ann.segmentation = Segmentation::Polygons(PolygonSet::new(rings));
        }
    }

    fn shifting(&mut self, jitter: &Jitter) {
        let mut rng = self.rng(stream::SHIFT);
        let (dx, dy) = jitter.sample(&mut rng);
        self.record.shift = Some([dx, dy]);
        if dx == 0.0 && dy == 0.0 {
            return;
        }
        self.modified = true;
        let image = self.image;
        self.ann.segmentation = match &self.ann.segmentation {
            Segmentation::Polygons(p) => Segmentation::Polygons(PolygonSet::new(
                p.rings
                    .iter()
                    .map(|r| shift(r, dx, dy).map_points(|&q| clamp_point(q, image)))
                    .collect(),
            )),
            Segmentation::Rle { rle, compressed } => {
                let m = crate::coco::rle_decode(rle).translate(dx.round() as i64, dy.round() as i64);
                Segmentation::Rle {
                    rle: rle_encode(&m),
                    compressed: *compressed,
                }
            }
        };
    }

    /// Rasterize, apply `op` with kernel `k`, and convert back.
    fn morph(&mut self, op: MorphOp, k: usize) {
        self.record.scale = Some(ScaleEvent { op, k });
        if k <= 1 {
            return;
        }
        self.modified = true;
        let (h, w) = (self.image.height, self.image.width);
        let mask = self.ann.segmentation.to_mask(h, w);
        let out: InstanceMask = match op {
            MorphOp::Erode => erode(&mask, k),
            MorphOp::Dilate => dilate(&mask, k),
            MorphOp::Open => opening(&mask, k),
        };
        if out.is_empty() {
            self.record.collapse("empty_mask");
            return;
        }
        self.ann.segmentation = match &self.ann.segmentation {
            Segmentation::Polygons(_) => {
                let traced = extract_contours(&out);
                let filled = rasterize(&traced, h, w).count() - out.count();
                if filled * 100 > out.count() {
                    self.record.filled_hole_pixels = Some(filled);
                }
                Segmentation::Polygons(traced)
            }
            Segmentation::Rle { compressed, .. } => Segmentation::Rle {
                rle: rle_encode(&out),
                compressed: *compressed,
            },
        };
    }

    fn random_scale(&mut self, g: Gaussian) {
        let mut rng = self.rng(stream::SCALE);
        let (grow, k) = sample_scale(g, &mut rng);
        self.morph(if grow { MorphOp::Dilate } else { MorphOp::Erode }, k);
    }

    fn fixed_scale(&mut self, op: MorphOp, g: Gaussian) {
        // Same draws as `random_scale`, so K matches across operator modes.
        let mut rng = self.rng(stream::SCALE);
        let (_, k) = sample_scale(g, &mut rng);
        self.morph(op, k);
    }

    fn finish(mut self) -> (Option<Annotation>, ChangeRecord) {
        if self.alive() && self.modified {
            let (area, bbox) =
                crate::coco::derived_fields(&self.ann.segmentation, self.image.height, self.image.width);
            if area == 0.0 {
                self.record.collapse("empty_mask");
            } else {
                self.ann.area = area;
                self.ann.bbox = bbox;
            }
        }
        let ann = self.alive().then_some(self.ann);
        (ann, self.record)
    }
}

/// For each category, the ids a confused label may switch to: the other
/// members of its supercategory, or every other category when it is alone.
fn confusion_candidates(d: &Dataset) -> HashMap<i64, Vec<i64>> {
    let mut cats: Vec<_> = d.categories.iter().collect();
    cats.sort_by_key(|c| c.id);
    cats.iter()
        .map(|c| {
            let same: Vec<i64> = cats
                .iter()
                .filter(|o| o.id != c.id && o.supercategory == c.supercategory)
                .map(|o| o.id)
                .collect();
            let pool = if same.is_empty() {
                cats.iter().filter(|o| o.id != c.id).map(|o| o.id).collect()
            } else {
                same
            };
            (c.id, pool)
        })
        .collect()
}

fn run<F>(d: &Dataset, c: &NoiseConfig, per_annotation: F) -> Result<(Dataset, ChangeLog)>
where
    F: Fn(&mut Work<'_>) + Sync,
{
    c.validate()?;
    d.validate()?;
    let images = d.image_index();
    let mut order: Vec<&Annotation> = d.annotations.iter().collect();
    order.sort_by_key(|a| a.id);

    let results: Vec<(Option<Annotation>, ChangeRecord)> = order
        .par_iter()
        .map(|ann| {
            let image = images[&ann.image_id];
            let seed = sub_seed(c.seed, ann.id);
            let mut work = Work {
                ann: (*ann).clone(),
                image,
                record: ChangeRecord::new(ann, seed, c.mode),
                seed,
                modified: false,
            };
            per_annotation(&mut work);
            work.finish()
        })
        .collect();

    let mut out = Dataset {
        images: d.images.clone(),
        categories: d.categories.clone(),
        annotations: Vec::with_capacity(results.len()),
        extra: d.extra.clone(),
    };
    let mut log = ChangeLog::default();
    for (ann, rec) in results {
        out.annotations.extend(ann);
        log.records.push(rec);
    }
    out.sort_by_id();
    Ok((out, log))
}

fn composite(d: &Dataset, c: &NoiseConfig) -> Result<(Dataset, ChangeLog)> {
    let candidates = confusion_candidates(d);
    let jitter = Jitter::new(c.loc.mu, c.loc.sigma, c.signs)?;
    run(d, c, |w| {
        if c.is_enabled(NoiseKind::Deletion) {
            w.deletion(c.p_delete);
        }
        if w.alive() && c.is_enabled(NoiseKind::ClassConfusion) {
            w.class_confusion(c.p_class, &candidates);
        }
        if w.alive() && c.is_enabled(NoiseKind::Approximation) {
            w.approximation(c.approx);
        }
        if w.alive() && c.is_enabled(NoiseKind::Localization) {
            w.localization(&jitter);
        }
        if w.alive() && c.is_enabled(NoiseKind::Scale) {
            w.random_scale(c.scale);
        }
    })
}

/// Applies the configured noise to every annotation.
///
/// Composite mode runs the enabled noise types in order; single-operator
/// modes delegate to [`apply_single_operator`]. The output is sorted by id
/// and the log holds one record per input annotation.
pub fn apply_noise(d: &Dataset, c: &NoiseConfig) -> Result<(Dataset, ChangeLog)> {
    match c.mode {
        NoiseMode::Composite => composite(d, c),
        _ => apply_single_operator(d, c),
    }
}

/// Applies exactly one ablation operator to every annotation. Deletion and
/// class confusion are not applied.
pub fn apply_single_operator(d: &Dataset, c: &NoiseConfig) -> Result<(Dataset, ChangeLog)> {
    let jitter = Jitter::new(c.loc.mu, c.loc.sigma, c.signs)?;
    match c.mode {
        NoiseMode::Composite => Err(Error::Config(
            "apply_single_operator needs a single-operator mode".into(),
        )),
        NoiseMode::Dilation => run(d, c, |w| w.fixed_scale(MorphOp::Dilate, c.scale)),
        NoiseMode::Erosion => run(d, c, |w| w.fixed_scale(MorphOp::Erode, c.scale)),
        NoiseMode::Opening => run(d, c, |w| w.fixed_scale(MorphOp::Open, c.scale)),
        NoiseMode::RandomScale => run(d, c, |w| w.random_scale(c.scale)),
        NoiseMode::Shifting => run(d, c, |w| w.shifting(&jitter)),
        NoiseMode::Localization => run(d, c, |w| w.localization(&jitter)),
        NoiseMode::Approximation => run(d, c, |w| w.approximation(c.approx)),
    }
}
