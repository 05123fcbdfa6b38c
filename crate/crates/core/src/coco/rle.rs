//! COCO run-length encoding.
//!
//! Runs are taken over pixels in column-major (Fortran) order: index
//! `x * height + y`. The first run always counts background pixels and may be
//! zero; every other run is positive.

use crate::error::{Error, Result};
use crate::morphology::InstanceMask;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rle {
    height: usize,
    width: usize,
    counts: Vec<u32>,
}

impl Rle {
    /// Validates that runs cover exactly `height * width` pixels and that no
    /// run after the first is zero.
    pub fn new(height: usize, width: usize, counts: Vec<u32>) -> Result<Self> {
        let total: u64 = counts.iter().map(|&c| c as u64).sum();
        if total != (height * width) as u64 {
            return Err(Error::Codec(format!(
                "run lengths sum to {total}, expected {height}x{width} = {}",
                height * width
            )));
        }
        if let Some(i) = counts.iter().skip(1).position(|&c| c == 0) {
            return Err(Error::Codec(format!("zero-length run at index {}", i + 1)));
        }
        Ok(Rle {
            height,
            width,
            counts,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Foreground pixel count (sum of odd-indexed runs).
    pub fn area(&self) -> u64 {
        self.counts.iter().skip(1).step_by(2).map(|&c| c as u64).sum()
    }
}

pub fn rle_encode(m: &InstanceMask) -> Rle {
    let (h, w) = m.dims();
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0u32;
    for x in 0..w {
        for y in 0..h {
            let v = m.get(x, y);
            if v != current {
                counts.push(run);
                run = 0;
                current = v;
            }
            run += 1;
        }
    }
    if run > 0 || counts.is_empty() {
        counts.push(run);
    }
    Rle {
        height: h,
        width: w,
        counts,
    }
}

pub fn rle_decode(r: &Rle) -> InstanceMask {
    let h = r.height;
    let mut m = InstanceMask::new(r.height, r.width);
    let mut idx = 0usize;
    for (i, &c) in r.counts.iter().enumerate() {
        let c = c as usize;
        if i % 2 == 1 {
            for p in idx..idx + c {
                m.set(p / h, p % h, true);
            }
        }
        idx += c;
    }
    m
}

/// COCO's compressed counts string.
///
/// From the fourth run on, each value is stored as the difference from the
/// run two places earlier. Values are written as little-endian groups of 5
/// data bits; bit 5 (0x20) flags a following group and the top data bit of
/// the last group carries the sign. Each group is offset by 48 into
/// printable ASCII.
pub fn rle_compress(counts: &[u32]) -> String {
    let mut s = String::new();
    for (i, &c) in counts.iter().enumerate() {
        let mut x = c as i64;
        if i > 2 {
            x -= counts[i - 2] as i64;
        }
        loop {
            let mut chunk = (x & 0x1f) as u8;
            x >>= 5;
            let more = if chunk & 0x10 != 0 { x != -1 } else { x != 0 };
            if more {
                chunk |= 0x20;
            }
            s.push((chunk + 48) as char);
            if !more {
                break;
            }
        }
    }
    s
}

pub fn rle_decompress(s: &str) -> Result<Vec<u32>> {
    let bytes = s.as_bytes();
    let mut counts: Vec<u32> = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let mut x: i64 = 0;
        let mut shift = 0u32;
        loop {
            let Some(&b) = bytes.get(i) else {
                return Err(Error::Codec(format!(
                    "truncated continuation at byte {i}"
                )));
            };
            if !(48..=111).contains(&b) {
                return Err(Error::Codec(format!(
                    "byte {b} at offset {i} outside [48, 111]"
                )));
            }
            if shift > 58 {
                return Err(Error::Codec(format!("value overflows at offset {i}")));
            }
            let chunk = (b - 48) as i64;
            i += 1;
            x |= (chunk & 0x1f) << shift;
            shift += 5;
            if chunk & 0x20 == 0 {
                if chunk & 0x10 != 0 {
                    x |= -1i64 << shift;
                }
                break;
            }
        }
        let k = counts.len();
        if k > 2 {
            x += counts[k - 2] as i64;
        }
        let v = u32::try_from(x)
            .map_err(|_| Error::Codec(format!("run {k} decodes to {x}")))?;
        counts.push(v);
    }
    Ok(counts)
}
