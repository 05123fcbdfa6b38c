//! JSON wire format.
//!
//! Output is canonical: compact JSON, known keys in a fixed order followed by
//! pass-through keys in sorted order, tables sorted by id, floats in shortest
//! round-trip form.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{derived_fields, Annotation, Category, Dataset, ImageInfo, Rle, Segmentation};
use super::rle::{rle_compress, rle_decompress};
use crate::error::{Error, Result};
use crate::geometry::{PolygonSet, Ring};

#[derive(Serialize, Deserialize)]
struct RawDataset {
    images: Vec<RawImage>,
    categories: Vec<RawCategory>,
    annotations: Vec<RawAnnotation>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct RawImage {
    id: i64,
    width: usize,
    height: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    file_name: Option<String>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct RawCategory {
    id: i64,
    name: String,
    #[serde(default)]
    supercategory: Option<String>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct RawAnnotation {
    id: i64,
    image_id: i64,
    category_id: i64,
    segmentation: RawSegmentation,
    #[serde(default)]
    area: Option<f64>,
    #[serde(default)]
    bbox: Option<[f64; 4]>,
    #[serde(default)]
    iscrowd: u8,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawSegmentation {
    Polygons(Vec<Vec<f64>>),
    Rle { size: [usize; 2], counts: RawCounts },
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawCounts {
    Compressed(String),
    Runs(Vec<u32>),
}

fn byte_offset(input: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut offset = 0;
    for (i, l) in input.split_inclusive('\n').enumerate() {
        if i + 1 == line {
            return (offset + column.saturating_sub(1)).min(input.len());
        }
        offset += l.len();
    }
    input.len()
}

fn convert_segmentation(ann_id: i64, raw: RawSegmentation) -> Result<Segmentation> {
    let invalid = |e: Error| Error::Validation(format!("annotation {ann_id}: {e}"));
    match raw {
        RawSegmentation::Polygons(rings) => {
            let rings = rings
                .iter()
                .map(|flat| Ring::from_flat(flat))
                .collect::<Result<Vec<_>>>()
                .map_err(invalid)?;
            Ok(Segmentation::Polygons(PolygonSet::new(rings)))
        }
        RawSegmentation::Rle { size, counts } => {
            let (runs, compressed) = match counts {
                RawCounts::Compressed(s) => (rle_decompress(&s).map_err(invalid)?, true),
                RawCounts::Runs(r) => (r, false),
            };
            let rle = Rle::new(size[0], size[1], runs).map_err(invalid)?;
            Ok(Segmentation::Rle { rle, compressed })
        }
    }
}

/// Parses and validates a COCO document. Derived fields are recomputed.
pub fn parse_dataset(input: &[u8]) -> Result<Dataset> {
    let text = std::str::from_utf8(input).map_err(|e| Error::Parse {
        offset: e.valid_up_to(),
        message: "invalid UTF-8".into(),
    })?;
    let raw: RawDataset = serde_json::from_str(text).map_err(|e| Error::Parse {
        offset: byte_offset(text, e.line(), e.column()),
        message: e.to_string(),
    })?;

    let images = raw
        .images
        .into_iter()
        .map(|i| ImageInfo {
            id: i.id,
            width: i.width,
            height: i.height,
            file_name: i.file_name,
            extra: i.extra,
        })
        .collect();
    let categories = raw
        .categories
        .into_iter()
        .map(|c| Category {
            supercategory: c.supercategory.unwrap_or_else(|| c.name.clone()),
            id: c.id,
            name: c.name,
            extra: c.extra,
        })
        .collect();
    let annotations = raw
        .annotations
        .into_iter()
        .map(|a| {
            if a.iscrowd > 1 {
                return Err(Error::Validation(format!(
                    "annotation {}: iscrowd must be 0 or 1",
                    a.id
                )));
            }
            let segmentation = convert_segmentation(a.id, a.segmentation)?;
            Ok(Annotation {
                id: a.id,
                image_id: a.image_id,
                category_id: a.category_id,
                segmentation,
                bbox: a.bbox.unwrap_or([0.0; 4]),
                area: a.area.unwrap_or(0.0),
                iscrowd: a.iscrowd == 1,
                extra: a.extra,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut d = Dataset {
        images,
        categories,
        annotations,
        extra: raw.extra,
    };
    d.validate()?;
    d.refresh_derived();
    Ok(d)
}

/// Folds `-0.0` into `0.0` so equal geometry always prints the same.
fn canon(v: f64) -> f64 {
    v + 0.0
}

fn raw_segmentation(seg: &Segmentation) -> RawSegmentation {
    match seg {
        Segmentation::Polygons(p) => RawSegmentation::Polygons(
            p.rings
                .iter()
                .map(|r| r.to_flat().into_iter().map(canon).collect())
                .collect(),
        ),
        Segmentation::Rle { rle, compressed } => RawSegmentation::Rle {
            size: [rle.height(), rle.width()],
            counts: if *compressed {
                RawCounts::Compressed(rle_compress(rle.counts()))
            } else {
                RawCounts::Runs(rle.counts().to_vec())
            },
        },
    }
}

/// Canonical compact JSON. Derived fields are recomputed for every
/// annotation whose image is present.
pub fn serialize_dataset(d: &Dataset) -> Vec<u8> {
    let dims: HashMap<i64, (usize, usize)> =
        d.images.iter().map(|i| (i.id, (i.height, i.width))).collect();

    let mut images: Vec<&ImageInfo> = d.images.iter().collect();
    images.sort_by_key(|i| i.id);
    let mut categories: Vec<&Category> = d.categories.iter().collect();
    categories.sort_by_key(|c| c.id);
    let mut annotations: Vec<&Annotation> = d.annotations.iter().collect();
    annotations.sort_by_key(|a| a.id);

    let raw = RawDataset {
        images: images
            .into_iter()
            .map(|i| RawImage {
                id: i.id,
                width: i.width,
                height: i.height,
                file_name: i.file_name.clone(),
                extra: i.extra.clone(),
            })
            .collect(),
        categories: categories
            .into_iter()
            .map(|c| RawCategory {
                id: c.id,
                name: c.name.clone(),
                supercategory: Some(c.supercategory.clone()),
                extra: c.extra.clone(),
            })
            .collect(),
        annotations: annotations
            .into_iter()
            .map(|a| {
                let (area, bbox) = match dims.get(&a.image_id) {
                    Some(&(h, w)) => derived_fields(&a.segmentation, h, w),
                    None => (a.area, a.bbox),
                };
                RawAnnotation {
                    id: a.id,
                    image_id: a.image_id,
                    category_id: a.category_id,
                    segmentation: raw_segmentation(&a.segmentation),
                    area: Some(canon(area)),
                    bbox: Some(bbox.map(canon)),
                    iscrowd: a.iscrowd as u8,
                    extra: a.extra.clone(),
                }
            })
            .collect(),
        extra: d.extra.clone(),
    };
    serde_json::to_vec(&raw).expect("dataset serialization cannot fail")
}
