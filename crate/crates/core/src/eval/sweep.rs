use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate_ann_vs_ann, EvalReport, MetricReport};
use crate::coco::Dataset;
use crate::error::Result;
use crate::morphology::{boundary_overlap, default_band_width};
use crate::noise::{apply_noise, named_seed, preset, NoiseConfig, Tier};

/// Mean mask IoU and boundary IoU of every clean, non-crowd instance
/// against the noisy instance with the same id. Instances missing from
/// `noisy` score zero.
pub fn mean_instance_iou(clean: &Dataset, noisy: &Dataset, band_width: Option<usize>) -> (f64, f64) {
    let images = clean.image_index();
    let by_id: HashMap<i64, _> = noisy.annotations.iter().map(|a| (a.id, a)).collect();
    let gts: Vec<_> = clean.annotations.iter().filter(|a| !a.iscrowd).collect();
    if gts.is_empty() {
        return (1.0, 1.0);
    }
    let per_instance: Vec<(f64, f64)> = gts
        .par_iter()
        .map(|g| {
            let Some(n) = by_id.get(&g.id) else {
                return (0.0, 0.0);
            };
            let image = images[&g.image_id];
            let d = band_width.unwrap_or_else(|| default_band_width(image.height, image.width));
            let (a, b) = (g.mask(image), n.mask(image));
            let m = a.overlap(&b).expect("same image").iou();
            let bd = boundary_overlap(&a, &b, d).expect("same image").iou();
            (m, bd)
        })
        .collect();
    // Summed sequentially so the result does not depend on the thread count.
    let (mask_sum, band_sum) = per_instance
        .iter()
        .fold((0.0, 0.0), |acc, x| (acc.0 + x.0, acc.1 + x.1));
    let n = gts.len() as f64;
    (mask_sum / n, band_sum / n)
}

/// One (tier, metric) line of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tier: String,
    pub seed: u64,
    pub metric: String,
    #[serde(rename = "mAP")]
    pub map: Option<f64>,
    #[serde(rename = "AP50")]
    pub ap50: Option<f64>,
    #[serde(rename = "AP75")]
    pub ap75: Option<f64>,
    #[serde(rename = "AP_small")]
    pub ap_small: Option<f64>,
    #[serde(rename = "AP_medium")]
    pub ap_medium: Option<f64>,
    #[serde(rename = "AP_large")]
    pub ap_large: Option<f64>,
    pub mean_iou: f64,
}

fn rows_for(tier: &str, seed: u64, r: &EvalReport, ious: (f64, f64)) -> [SweepRow; 2] {
    let row = |metric: &str, m: &MetricReport, mean_iou: f64| SweepRow {
        tier: tier.to_string(),
        seed,
        metric: metric.to_string(),
        map: m.all.map,
        ap50: m.all.at(50),
        ap75: m.all.at(75),
        ap_small: m.small.map,
        ap_medium: m.medium.map,
        ap_large: m.large.map,
        mean_iou,
    };
    [row("mask", &r.mask, ious.0), row("boundary", &r.boundary, ious.1)]
}

/// The config used for `tier` in a sweep: the tier's preset parameters,
/// with mode, enabled noise types and sign handling taken from `template`
/// and a seed derived from the template seed and the tier name.
pub fn tier_config(template: &NoiseConfig, tier: Tier) -> NoiseConfig {
    NoiseConfig {
        seed: named_seed(template.seed, tier.as_str()),
        mode: template.mode,
        enabled: template.enabled.clone(),
        signs: template.signs,
        ..preset(tier)
    }
}

/// Evaluates the clean dataset against itself and against one independent
/// corruption per tier. Returns two rows (mask, boundary) per tier, in the
/// order clean, low, medium, high.
pub fn sweep(clean: &Dataset, template: &NoiseConfig, band_width: Option<usize>) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(8);
    let r = evaluate_ann_vs_ann(clean, clean, band_width)?;
    rows.extend(rows_for("clean", template.seed, &r, (1.0, 1.0)));
    for tier in Tier::ALL {
        let c = tier_config(template, tier);
        let (noisy, _) = apply_noise(clean, &c)?;
        let r = evaluate_ann_vs_ann(clean, &noisy, band_width)?;
        let ious = mean_instance_iou(clean, &noisy, band_width);
        rows.extend(rows_for(tier.as_str(), c.seed, &r, ious));
    }
    Ok(rows)
}

pub const SWEEP_HEADER: [&str; 10] = [
    "tier", "seed", "metric", "mAP", "AP50", "AP75", "AP_small", "AP_medium", "AP_large", "mean_iou",
];

pub fn sweep_to_csv(rows: &[SweepRow]) -> Vec<u8> {
    let f = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.tier.clone(),
            r.seed.to_string(),
            r.metric.clone(),
            f(r.map),
            f(r.ap50),
            f(r.ap75),
            f(r.ap_small),
            f(r.ap_medium),
            f(r.ap_large),
            format!("{:.6}", r.mean_iou),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}
