//! Deterministic annotation-noise injection for instance-segmentation
//! datasets, plus the annotation-level measurement tools used to quantify
//! the resulting degradation.

pub mod coco;
pub mod error;
pub mod geometry;
pub mod morphology;
pub mod eval;
pub mod noise;
pub mod prompt;
pub mod synth;

pub use coco::{parse_dataset, serialize_dataset, Annotation, Category, Dataset, ImageInfo, Rle, Segmentation};
pub use error::{Error, Result};
pub use geometry::{Point, PolygonSet, Ring};
pub use morphology::InstanceMask;
