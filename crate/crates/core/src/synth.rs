//! Clean synthetic corpora of star-convex instances.
//!
//! Shapes are star-convex polygons: vertices at sorted random angles around
//! a center, each at a random radius. They never self-intersect, and their
//! jagged outlines give the boundary metrics something to measure.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coco::{Annotation, Category, Dataset, ImageInfo, Segmentation};
use crate::error::{Error, Result};
use crate::eval::SizeBucket;
use crate::geometry::{rasterize, PolygonSet, Ring};
use crate::noise::{named_seed, stream, stream_rng, sub_seed};

/// Radial jitter: each vertex radius is `r * (1 ± RADIAL_JITTER)`.
const RADIAL_JITTER: f64 = 0.35;

/// Area ranges sampled for each size bucket, kept clear of the bucket edges.
const SMALL_AREA: (f64, f64) = (150.0, 800.0);
const MEDIUM_AREA: (f64, f64) = (1400.0, 8000.0);
const LARGE_AREA: (f64, f64) = (11000.0, 30000.0);

/// Redraws allowed when a shape rasterizes outside its target bucket.
const MAX_REDRAWS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSpec {
    pub n_images: usize,
    pub height: usize,
    pub width: usize,
    /// Inclusive range of instances per image.
    pub instances: [usize; 2],
    pub categories: usize,
    pub supercategories: usize,
    /// Inclusive range of vertex counts per ring.
    pub vertices: [usize; 2],
    /// Range of the mean vertex radius, in pixels.
    pub radius: [f64; 2],
    /// Relative frequencies of small, medium and large instances.
    pub size_mix: [f64; 3],
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            n_images: 200,
            height: 480,
            width: 640,
            instances: [6, 10],
            categories: 10,
            supercategories: 3,
            vertices: [8, 24],
            radius: [5.0, 120.0],
            size_mix: [1.0 / 3.0; 3],
            seed: 0,
        }
    }
}

impl CorpusSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: CorpusSpec =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("corpus spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.height == 0 || self.width == 0 {
            return fail("image size must be positive".into());
        }
        if self.supercategories == 0 || self.categories < self.supercategories {
            return fail(format!(
                "need categories >= supercategories >= 1, got {} and {}",
                self.categories, self.supercategories
            ));
        }
        if self.instances[0] > self.instances[1] {
            return fail(format!("empty instance range {:?}", self.instances));
        }
        if self.vertices[0] < 3 || self.vertices[0] > self.vertices[1] {
            return fail(format!("vertex range {:?} must start at 3 or more", self.vertices));
        }
        let [r0, r1] = self.radius;
        if !(r0.is_finite() && r1.is_finite() && r0 > 0.0 && r0 <= r1) {
            return fail(format!("bad radius range {:?}", self.radius));
        }
        let reach = 2.0 * r1 * (1.0 + RADIAL_JITTER);
        if reach > self.height.min(self.width) as f64 {
            return fail(format!(
                "radius {r1} does not fit a {}x{} image",
                self.height, self.width
            ));
        }
        if self.size_mix.iter().any(|&p| !p.is_finite() || p < 0.0) || self.size_mix.iter().sum::<f64>() <= 0.0 {
            return fail(format!("bad size mix {:?}", self.size_mix));
        }
        Ok(())
    }
}

fn pick_bucket(mix: &[f64; 3], rng: &mut ChaCha8Rng) -> SizeBucket {
    let total: f64 = mix.iter().sum();
    let u = rng.random::<f64>() * total;
    if u < mix[0] {
        SizeBucket::Small
    } else if u < mix[0] + mix[1] || mix[2] == 0.0 {
        SizeBucket::Medium
    } else {
        SizeBucket::Large
    }
}

fn area_range(b: SizeBucket) -> (f64, f64) {
    match b {
        SizeBucket::Small => SMALL_AREA,
        SizeBucket::Medium => MEDIUM_AREA,
        SizeBucket::Large => LARGE_AREA,
    }
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Unit-scale star profile as `(angle, relative radius)` pairs.
fn star_profile(n: usize, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let step = TAU / n as f64;
    (0..n)
        .map(|i| {
            let angle = (i as f64 + rng.random_range(0.1..0.9)) * step;
            let rel = 1.0 + RADIAL_JITTER * rng.random_range(-1.0..1.0);
            (angle, rel)
        })
        .collect()
}

fn star_ring(spec: &CorpusSpec, bucket: SizeBucket, rng: &mut ChaCha8Rng) -> Ring {
    let n = rng.random_range(spec.vertices[0]..=spec.vertices[1]);
    let profile = star_profile(n, rng);
    let unit: Vec<f64> = profile
        .iter()
        .flat_map(|&(a, r)| [r * a.cos(), r * a.sin()])
        .collect();
    let unit_area = Ring::from_flat(&unit).expect("finite profile").area();
    let (lo, hi) = area_range(bucket);
    let target = rng.random_range(lo..hi);
    let radius = (target / unit_area).sqrt().clamp(spec.radius[0], spec.radius[1]);

    let reach = radius * (1.0 + RADIAL_JITTER);
    let cx = rng.random_range(reach..=spec.width as f64 - reach);
    let cy = rng.random_range(reach..=spec.height as f64 - reach);
    let flat: Vec<f64> = profile
        .iter()
        .flat_map(|&(a, r)| {
            let x = (cx + radius * r * a.cos()).clamp(0.0, spec.width as f64);
            let y = (cy + radius * r * a.sin()).clamp(0.0, spec.height as f64);
            [round2(x), round2(y)]
        })
        .collect();
    Ring::from_flat(&flat).expect("star rings have at least 3 finite vertices")
}

/// One instance aimed at `bucket`. Shapes whose rasterized area lands in a
/// different bucket (or is empty) are redrawn a bounded number of times.
fn instance(spec: &CorpusSpec, bucket: SizeBucket, rng: &mut ChaCha8Rng) -> Result<PolygonSet> {
    let mut last = None;
    for _ in 0..MAX_REDRAWS {
        let set = PolygonSet::new(vec![star_ring(spec, bucket, rng)]);
        let area = rasterize(&set, spec.height, spec.width).count();
        if area > 0 {
            if SizeBucket::of_area(area as f64) == bucket {
                return Ok(set);
            }
            last = Some(set);
        }
    }
    last.ok_or_else(|| Error::Config(format!("radius range {:?} yields empty masks", spec.radius)))
}

fn image_instances(spec: &CorpusSpec, image_id: i64, base: u64) -> Result<Vec<(i64, PolygonSet)>> {
    let mut rng = stream_rng(sub_seed(base, image_id), stream::SYNTH);
    let count = rng.random_range(spec.instances[0]..=spec.instances[1]);
    (0..count)
        .map(|_| {
            let category = rng.random_range(1..=spec.categories) as i64;
            let bucket = pick_bucket(&spec.size_mix, &mut rng);
            Ok((category, instance(spec, bucket, &mut rng)?))
        })
        .collect()
}

/// Builds the corpus described by `spec`. Images are generated in parallel
/// from per-image seeds; annotation ids are then assigned in image order.
pub fn generate(spec: &CorpusSpec) -> Result<Dataset> {
    spec.validate()?;
    let base = named_seed(spec.seed, "synth");
    let images: Vec<ImageInfo> = (1..=spec.n_images as i64)
        .map(|id| {
            let mut img = ImageInfo::new(id, spec.width, spec.height);
            img.file_name = Some(format!("synth_{id:06}.png"));
            img
        })
        .collect();
    let per_image: Vec<Vec<(i64, PolygonSet)>> = images
        .par_iter()
        .map(|img| image_instances(spec, img.id, base))
        .collect::<Result<_>>()?;

    let mut annotations = Vec::new();
    for (img, shapes) in images.iter().zip(per_image) {
        for (category, set) in shapes {
            let id = annotations.len() as i64 + 1;
            let mut a = Annotation::new(id, img.id, category, Segmentation::Polygons(set));
            a.refresh_derived(img);
            annotations.push(a);
        }
    }
    let categories = (1..=spec.categories as i64)
        .map(|id| {
            let sup = id % spec.supercategories as i64;
            Category::new(id, format!("cat_{id}"), format!("super_{sup}"))
        })
        .collect();
    let d = Dataset {
        images,
        categories,
        annotations,
        extra: Default::default(),
    };
    d.validate()?;
    Ok(d)
}

/// Flat-color 8-bit PGM of one image: background 0, each instance painted
/// in a gray level derived from its category, later annotations on top.
pub fn render_pgm(d: &Dataset, image_id: i64) -> Result<Vec<u8>> {
    let image = d
        .images
        .iter()
        .find(|i| i.id == image_id)
        .ok_or_else(|| Error::Validation(format!("no image with id {image_id}")))?;
    let mut pixels = vec![0u8; image.width * image.height];
    let mut anns: Vec<_> = d.annotations.iter().filter(|a| a.image_id == image_id).collect();
    anns.sort_by_key(|a| a.id);
    for a in anns {
        let level = 64 + (a.category_id.rem_euclid(8) as u8) * 24;
        for (x, y) in a.mask(image).iter_ones() {
            pixels[y * image.width + x] = level;
        }
    }
    let mut header = String::new();
    write!(header, "P5\n{} {}\n255\n", image.width, image.height).expect("string write");
    let mut out = header.into_bytes();
    out.extend_from_slice(&pixels);
    Ok(out)
}
