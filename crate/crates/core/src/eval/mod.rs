//! Annotation-vs-annotation evaluation.
//!
//! A noisy annotation set is scored as if it were model output (every
//! instance with score 1.0) against the clean set. Mask AP uses plain mask
//! IoU; boundary AP uses boundary IoU over a band of width `d`.

mod matching;
mod report;
mod sweep;

pub use matching::{
    average_precision, match_instances, score_order, Detection, GroundTruth, Matches,
    ScoredPrediction,
};
pub use report::{emit_report, report_to_csv, report_to_json, CSV_HEADER};
pub use sweep::{mean_instance_iou, sweep, sweep_to_csv, tier_config, SweepRow, SWEEP_HEADER};

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coco::{Annotation, Dataset, ImageInfo};
use crate::error::{Error, Result};
use crate::morphology::{boundary_band, default_band_width, InstanceMask, Overlap};

/// IoU thresholds 0.50, 0.55, ..., 0.95, in percent.
pub const IOU_THRESHOLDS_PCT: [u32; 10] = [50, 55, 60, 65, 70, 75, 80, 85, 90, 95];

/// Upper bound (exclusive) of the small bucket, 32².
pub const SMALL_AREA_MAX: f64 = 1024.0;
/// Upper bound (inclusive) of the medium bucket, 96².
pub const MEDIUM_AREA_MAX: f64 = 9216.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeBucket {
    Small,
    Medium,
    Large,
}

impl SizeBucket {
    pub const ALL: [SizeBucket; 3] = [SizeBucket::Small, SizeBucket::Medium, SizeBucket::Large];

    pub fn of_area(area: f64) -> SizeBucket {
        if area < SMALL_AREA_MAX {
            SizeBucket::Small
        } else if area <= MEDIUM_AREA_MAX {
            SizeBucket::Medium
        } else {
            SizeBucket::Large
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SizeBucket::Small => "small",
            SizeBucket::Medium => "medium",
            SizeBucket::Large => "large",
        }
    }
}

/// AP per IoU threshold and its mean. `None` where there is no ground truth.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ApSeries {
    #[serde(rename = "mAP")]
    pub map: Option<f64>,
    pub per_threshold: Vec<Option<f64>>,
}

impl ApSeries {
    fn from_per_threshold(per_threshold: Vec<Option<f64>>) -> Self {
        let map = mean(per_threshold.iter().copied());
        ApSeries { map, per_threshold }
    }

    /// AP at the given threshold percentage.
    pub fn at(&self, threshold_pct: u32) -> Option<f64> {
        let i = IOU_THRESHOLDS_PCT.iter().position(|&t| t == threshold_pct)?;
        self.per_threshold.get(i).copied().flatten()
    }
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values.flatten() {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchCounts {
    pub category_id: i64,
    pub threshold_pct: u32,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricReport {
    pub all: ApSeries,
    pub small: ApSeries,
    pub medium: ApSeries,
    pub large: ApSeries,
    pub per_category: BTreeMap<i64, ApSeries>,
    /// Per category and threshold, over all sizes.
    pub counts: Vec<MatchCounts>,
}

impl MetricReport {
    pub fn map(&self) -> Option<f64> {
        self.all.map
    }

    pub fn bucket(&self, b: SizeBucket) -> &ApSeries {
        match b {
            SizeBucket::Small => &self.small,
            SizeBucket::Medium => &self.medium,
            SizeBucket::Large => &self.large,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub thresholds: Vec<f64>,
    /// Fixed band width, or `None` for the per-image default.
    pub band_width: Option<usize>,
    pub num_gt: usize,
    pub num_pred: usize,
    pub mask: MetricReport,
    pub boundary: MetricReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Metric {
    Mask,
    Boundary,
}

/// Accumulated detections for one (metric, scope, category, threshold).
#[derive(Default)]
struct Bin {
    detections: Vec<Detection>,
    num_gt: usize,
}

/// Scopes: `None` = every size, `Some(b)` = size bucket `b`.
type Scope = Option<SizeBucket>;
const SCOPES: [Scope; 4] = [
    None,
    Some(SizeBucket::Small),
    Some(SizeBucket::Medium),
    Some(SizeBucket::Large),
];

struct Instance {
    id: i64,
    area: f64,
    mask: InstanceMask,
    band: InstanceMask,
}

impl Instance {
    fn new(a: &Annotation, image: &ImageInfo, d: usize) -> Self {
        let mask = a.mask(image);
        let band = boundary_band(&mask, d);
        Instance {
            id: a.id,
            area: mask.count() as f64,
            mask,
            band,
        }
    }
}

#[derive(Default)]
struct Partial {
    bins: HashMap<(Metric, Scope, i64, usize), Bin>,
    counts: HashMap<(Metric, i64, usize), (usize, usize, usize)>,
}

fn in_scope(scope: Scope, area: f64) -> bool {
    scope.is_none_or(|b| SizeBucket::of_area(area) == b)
}

fn evaluate_group(
    image_id: i64,
    category_id: i64,
    gts: &[Instance],
    preds: &[Instance],
    partial: &mut Partial,
) {
    let scored: Vec<ScoredPrediction> = preds
        .iter()
        .map(|p| ScoredPrediction { id: p.id, score: 1.0 })
        .collect();
    for metric in [Metric::Mask, Metric::Boundary] {
        let table: Vec<Vec<Overlap>> = preds
            .iter()
            .map(|p| {
                gts.iter()
                    .map(|g| match metric {
                        Metric::Mask => p.mask.overlap(&g.mask),
                        Metric::Boundary => p.band.overlap(&g.band),
                    }
                    .expect("same image dims"))
                    .collect()
            })
            .collect();
        for scope in SCOPES {
            let truths: Vec<GroundTruth> = gts
                .iter()
                .map(|g| GroundTruth {
                    id: g.id,
                    ignore: !in_scope(scope, g.area),
                })
                .collect();
            for (ti, &t) in IOU_THRESHOLDS_PCT.iter().enumerate() {
                let m = match_instances(&truths, &scored, |p, g| table[p][g], t);
                let bin = partial.bins.entry((metric, scope, category_id, ti)).or_default();
                bin.num_gt += truths.iter().filter(|g| !g.ignore).count();
                for (p, matched) in m.pred_to_gt.iter().enumerate() {
                    let ignored = match matched {
                        Some(g) => truths[*g].ignore,
                        None => !in_scope(scope, preds[p].area),
                    };
                    if !ignored {
                        bin.detections.push(Detection {
                            score: scored[p].score,
                            key: (image_id, scored[p].id),
                            true_positive: matched.is_some(),
                        });
                    }
                }
                if scope.is_none() {
                    let tp = m.pred_to_gt.iter().filter(|x| x.is_some()).count();
                    let c = partial.counts.entry((metric, category_id, ti)).or_default();
                    c.0 += tp;
                    c.1 += preds.len() - tp;
                    c.2 += gts.len() - tp;
                }
            }
        }
    }
}

fn group_by_image(d: &Dataset) -> HashMap<i64, Vec<&Annotation>> {
    let mut m: HashMap<i64, Vec<&Annotation>> = HashMap::new();
    for a in d.annotations.iter().filter(|a| !a.iscrowd) {
        m.entry(a.image_id).or_default().push(a);
    }
    m
}

fn check_tables(clean: &Dataset, noisy: &Dataset) -> Result<()> {
    let dims = |d: &Dataset| -> BTreeMap<i64, (usize, usize)> {
        d.images.iter().map(|i| (i.id, (i.height, i.width))).collect()
    };
    if dims(clean) != dims(noisy) {
        return Err(Error::Validation(
            "clean and noisy datasets have different image tables".into(),
        ));
    }
    let cats = |d: &Dataset| -> BTreeSet<i64> { d.categories.iter().map(|c| c.id).collect() };
    if cats(clean) != cats(noisy) {
        return Err(Error::Validation(
            "clean and noisy datasets have different category tables".into(),
        ));
    }
    Ok(())
}

/// Scores `noisy` against `clean`. `band_width` fixes the boundary band; by
/// default each image uses 2% of its diagonal. Crowd annotations are left
/// out on both sides.
pub fn evaluate_ann_vs_ann(clean: &Dataset, noisy: &Dataset, band_width: Option<usize>) -> Result<EvalReport> {
    clean.validate()?;
    noisy.validate()?;
    check_tables(clean, noisy)?;

    let mut images: Vec<&ImageInfo> = clean.images.iter().collect();
    images.sort_by_key(|i| i.id);
    let gt_by_image = group_by_image(clean);
    let pred_by_image = group_by_image(noisy);
    let categories: BTreeSet<i64> = clean.categories.iter().map(|c| c.id).collect();

    let partials: Vec<Partial> = images
        .par_iter()
        .map(|img| {
            let d = band_width.unwrap_or_else(|| default_band_width(img.height, img.width));
            let mut partial = Partial::default();
            let empty = Vec::new();
            let gts = gt_by_image.get(&img.id).unwrap_or(&empty);
            let preds = pred_by_image.get(&img.id).unwrap_or(&empty);
            for &cat in &categories {
                let g: Vec<Instance> = gts
                    .iter()
                    .filter(|a| a.category_id == cat)
                    .map(|a| Instance::new(a, img, d))
                    .collect();
                let p: Vec<Instance> = preds
                    .iter()
                    .filter(|a| a.category_id == cat)
                    .map(|a| Instance::new(a, img, d))
                    .collect();
                if g.is_empty() && p.is_empty() {
                    continue;
                }
                evaluate_group(img.id, cat, &g, &p, &mut partial);
            }
            partial
        })
        .collect();

    let mut total = Partial::default();
    for part in partials {
        for (k, bin) in part.bins {
            let t = total.bins.entry(k).or_default();
            t.num_gt += bin.num_gt;
            t.detections.extend(bin.detections);
        }
        for (k, c) in part.counts {
            let t = total.counts.entry(k).or_default();
            t.0 += c.0;
            t.1 += c.1;
            t.2 += c.2;
        }
    }

    let metric_report = |metric: Metric| -> MetricReport {
        let ap = |scope: Scope, cat: i64, ti: usize| -> Option<f64> {
            total
                .bins
                .get(&(metric, scope, cat, ti))
                .and_then(|b| average_precision(&b.detections, b.num_gt))
        };
        let series = |scope: Scope| {
            ApSeries::from_per_threshold(
                (0..IOU_THRESHOLDS_PCT.len())
                    .map(|ti| mean(categories.iter().map(|&c| ap(scope, c, ti))))
                    .collect(),
            )
        };
        let per_category = categories
            .iter()
            .map(|&c| {
                let s = ApSeries::from_per_threshold(
                    (0..IOU_THRESHOLDS_PCT.len()).map(|ti| ap(None, c, ti)).collect(),
                );
                (c, s)
            })
            .collect();
        let mut counts = Vec::new();
        for &c in &categories {
            for (ti, &t) in IOU_THRESHOLDS_PCT.iter().enumerate() {
                let (tp, fp, fn_) = total.counts.get(&(metric, c, ti)).copied().unwrap_or_default();
                counts.push(MatchCounts {
                    category_id: c,
                    threshold_pct: t,
                    tp,
                    fp,
                    fn_,
                });
            }
        }
        MetricReport {
            all: series(None),
            small: series(Some(SizeBucket::Small)),
            medium: series(Some(SizeBucket::Medium)),
            large: series(Some(SizeBucket::Large)),
            per_category,
            counts,
        }
    };

    Ok(EvalReport {
        thresholds: IOU_THRESHOLDS_PCT.iter().map(|&t| t as f64 / 100.0).collect(),
        band_width,
        num_gt: clean.annotations.iter().filter(|a| !a.iscrowd).count(),
        num_pred: noisy.annotations.iter().filter(|a| !a.iscrowd).count(),
        mask: metric_report(Metric::Mask),
        boundary: metric_report(Metric::Boundary),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coco::{Category, Segmentation};
    use crate::geometry::{PolygonSet, Ring};

    fn rect(id: i64, cat: i64, x: f64, y: f64, w: f64, h: f64) -> Annotation {
        let r = Ring::from_flat(&[x, y, x + w, y, x + w, y + h, x, y + h]).unwrap();
        Annotation::new(id, 1, cat, Segmentation::Polygons(PolygonSet::new(vec![r])))
    }

    fn ds(anns: Vec<Annotation>) -> Dataset {
        let mut d = Dataset {
            images: vec![ImageInfo::new(1, 100, 100)],
            categories: vec![Category::new(1, "a", "s"), Category::new(2, "b", "s")],
            annotations: anns,
            extra: Default::default(),
        };
        d.refresh_derived();
        d
    }

    #[test]
    fn self_evaluation_is_perfect() {
        let d = ds(vec![rect(1, 1, 5., 5., 10., 10.), rect(2, 2, 40., 40., 50., 50.), rect(3, 1, 20., 60., 40., 30.)]);
        let r = evaluate_ann_vs_ann(&d, &d, None).unwrap();
        assert_eq!(r.mask.map(), Some(1.0));
        assert_eq!(r.boundary.map(), Some(1.0));
        for c in &r.mask.counts {
            assert_eq!(c.fp, 0);
            assert_eq!(c.fn_, 0);
        }
    }

    #[test]
    fn iou_point_six_gives_point_three() {
        // 10x10 GT vs a 6x10 prediction inside it: IoU = 60/100.
        let clean = ds(vec![rect(1, 1, 10., 10., 10., 10.)]);
        let noisy = ds(vec![rect(1, 1, 10., 10., 6., 10.)]);
        let r = evaluate_ann_vs_ann(&clean, &noisy, None).unwrap();
        assert!((r.mask.map().unwrap() - 0.3).abs() < 1e-9);
        assert_eq!(r.mask.all.at(60), Some(1.0));
        assert_eq!(r.mask.all.at(65), Some(0.0));
        // Area 100 falls in the small bucket only.
        assert!(r.mask.small.map.is_some());
        assert_eq!(r.mask.large.map, None);
    }

    #[test]
    fn everything_dropped_scores_zero() {
        let clean = ds(vec![rect(1, 1, 10., 10., 10., 10.)]);
        let noisy = ds(vec![]);
        let r = evaluate_ann_vs_ann(&clean, &noisy, None).unwrap();
        assert_eq!(r.mask.map(), Some(0.0));
        assert_eq!(r.boundary.map(), Some(0.0));
    }

    #[test]
    fn mismatched_images_rejected() {
        let clean = ds(vec![]);
        let mut noisy = ds(vec![]);
        noisy.images[0].width = 99;
        assert!(evaluate_ann_vs_ann(&clean, &noisy, None).is_err());
    }

    #[test]
    fn size_buckets() {
        assert_eq!(SizeBucket::of_area(1023.0), SizeBucket::Small);
        assert_eq!(SizeBucket::of_area(1024.0), SizeBucket::Medium);
        assert_eq!(SizeBucket::of_area(9216.0), SizeBucket::Medium);
        assert_eq!(SizeBucket::of_area(9217.0), SizeBucket::Large);
    }
}
