//! COCO instance-segmentation datasets.
//!
//! `area` and `bbox` are derived fields: they are recomputed from the
//! segmentation on parse and on serialization and never trusted from input.
//! `area` is the rasterized foreground pixel count.

mod json;
mod rle;

pub use json::{parse_dataset, serialize_dataset};
pub use rle::{rle_compress, rle_decode, rle_decompress, rle_encode, Rle};

use std::collections::{HashMap, HashSet};

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::geometry::{polygon_bbox, rasterize, PolygonSet};
use crate::morphology::InstanceMask;

#[derive(Debug, Clone, PartialEq)]
pub struct ImageInfo {
    pub id: i64,
    pub width: usize,
    pub height: usize,
    pub file_name: Option<String>,
    /// Unrecognized keys, re-emitted verbatim.
    pub extra: Map<String, Value>,
}

impl ImageInfo {
    pub fn new(id: i64, width: usize, height: usize) -> Self {
        ImageInfo {
            id,
            width,
            height,
            file_name: None,
            extra: Map::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Category {
    pub id: i64,
    pub name: String,
    pub supercategory: String,
    pub extra: Map<String, Value>,
}

impl Category {
    pub fn new(id: i64, name: impl Into<String>, supercategory: impl Into<String>) -> Self {
        Category {
            id,
            name: name.into(),
            supercategory: supercategory.into(),
            extra: Map::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Segmentation {
    Polygons(PolygonSet),
    /// `compressed` records whether counts were (and will be) written as a
    /// COCO counts string rather than an integer array.
    Rle { rle: Rle, compressed: bool },
}

impl Segmentation {
    pub fn to_mask(&self, height: usize, width: usize) -> InstanceMask {
        match self {
            Segmentation::Polygons(p) => rasterize(p, height, width),
            Segmentation::Rle { rle, .. } => rle_decode(rle),
        }
    }

    pub fn is_rle(&self) -> bool {
        matches!(self, Segmentation::Rle { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub id: i64,
    pub image_id: i64,
    pub category_id: i64,
    pub segmentation: Segmentation,
    /// `(x, y, w, h)` in pixels.
    pub bbox: [f64; 4],
    pub area: f64,
    pub iscrowd: bool,
    pub extra: Map<String, Value>,
}

impl Annotation {
    pub fn new(id: i64, image_id: i64, category_id: i64, segmentation: Segmentation) -> Self {
        Annotation {
            id,
            image_id,
            category_id,
            segmentation,
            bbox: [0.0; 4],
            area: 0.0,
            iscrowd: false,
            extra: Map::new(),
        }
    }

    pub fn mask(&self, image: &ImageInfo) -> InstanceMask {
        self.segmentation.to_mask(image.height, image.width)
    }

    /// Recomputes `area` and `bbox` from the segmentation.
    pub fn refresh_derived(&mut self, image: &ImageInfo) {
        let (area, bbox) = derived_fields(&self.segmentation, image.height, image.width);
        self.area = area;
        self.bbox = bbox;
    }
}

/// Pixel area and bounding box of a segmentation. Polygon boxes are the
/// vertex hull clipped to the image; RLE boxes are the foreground hull.
pub fn derived_fields(seg: &Segmentation, height: usize, width: usize) -> (f64, [f64; 4]) {
    let mask = seg.to_mask(height, width);
    let area = mask.count() as f64;
    let bbox = match seg {
        Segmentation::Polygons(p) => {
            if p.is_empty() {
                [0.0; 4]
            } else {
                let [x, y, w, h] = polygon_bbox(p);
                let (wf, hf) = (width as f64, height as f64);
                let (x0, y0) = (x.clamp(0.0, wf), y.clamp(0.0, hf));
                let (x1, y1) = ((x + w).clamp(0.0, wf), (y + h).clamp(0.0, hf));
                [x0, y0, x1 - x0, y1 - y0]
            }
        }
        Segmentation::Rle { .. } => match mask.bounds() {
            Some((x0, y0, x1, y1)) => [x0 as f64, y0 as f64, (x1 - x0) as f64, (y1 - y0) as f64],
            None => [0.0; 4],
        },
    };
    (area, bbox)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub images: Vec<ImageInfo>,
    pub categories: Vec<Category>,
    pub annotations: Vec<Annotation>,
    /// Unrecognized top-level keys (`info`, `licenses`, ...).
    pub extra: Map<String, Value>,
}

impl Dataset {
    pub fn image_index(&self) -> HashMap<i64, &ImageInfo> {
        self.images.iter().map(|i| (i.id, i)).collect()
    }

    pub fn category_index(&self) -> HashMap<i64, &Category> {
        self.categories.iter().map(|c| (c.id, c)).collect()
    }

    /// Checks id uniqueness, referential integrity and per-annotation shape
    /// constraints.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for img in &self.images {
            if !seen.insert(img.id) {
                return Err(Error::Validation(format!("duplicate image id {}", img.id)));
            }
            if img.width == 0 || img.height == 0 {
                return Err(Error::Validation(format!(
                    "image {} has zero size {}x{}",
                    img.id, img.width, img.height
                )));
            }
        }
        seen.clear();
        for cat in &self.categories {
            if !seen.insert(cat.id) {
                return Err(Error::Validation(format!("duplicate category id {}", cat.id)));
            }
            if cat.name.is_empty() {
                return Err(Error::Validation(format!("category {} has an empty name", cat.id)));
            }
        }
        let images = self.image_index();
        let categories = self.category_index();
        seen.clear();
        for ann in &self.annotations {
            let integrity = |message: String| Error::Integrity {
                annotation_id: ann.id,
                message,
            };
            if !seen.insert(ann.id) {
                return Err(integrity("duplicate annotation id".into()));
            }
            let Some(img) = images.get(&ann.image_id) else {
                return Err(integrity(format!("unknown image_id {}", ann.image_id)));
            };
            if !categories.contains_key(&ann.category_id) {
                return Err(integrity(format!("unknown category_id {}", ann.category_id)));
            }
            match &ann.segmentation {
                Segmentation::Polygons(p) => {
                    if ann.iscrowd {
                        return Err(Error::Validation(format!(
                            "annotation {}: iscrowd=1 requires an RLE segmentation",
                            ann.id
                        )));
                    }
                    if p.is_empty() {
                        return Err(Error::Validation(format!(
                            "annotation {} has no polygon rings",
                            ann.id
                        )));
                    }
                }
                Segmentation::Rle { rle, .. } => {
                    if (rle.height(), rle.width()) != (img.height, img.width) {
                        return Err(Error::Validation(format!(
                            "annotation {}: RLE size {}x{} does not match image {}x{}",
                            ann.id,
                            rle.height(),
                            rle.width(),
                            img.height,
                            img.width
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Recomputes `area` and `bbox` of every annotation whose image is known.
    pub fn refresh_derived(&mut self) {
        let images: HashMap<i64, ImageInfo> =
            self.images.iter().map(|i| (i.id, i.clone())).collect();
        for ann in &mut self.annotations {
            if let Some(img) = images.get(&ann.image_id) {
                ann.refresh_derived(img);
            }
        }
    }

    /// Sorts every table by id.
    pub fn sort_by_id(&mut self) {
        self.images.sort_by_key(|i| i.id);
        self.categories.sort_by_key(|c| c.id);
        self.annotations.sort_by_key(|a| a.id);
    }
}
