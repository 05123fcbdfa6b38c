//! Bit-packed binary masks and square-kernel morphology.
//!
//! Masks are stored row-major with each row padded to a whole number of
//! 64-bit words. Padding bits are always zero, so word-parallel set
//! operations and population counts never need a tail mask.
//!
//! Structuring elements are `k × k` squares whose origin sits at
//! `floor(k / 2)` along each axis. For odd `k` this is the center; for even
//! `k` the element covers offsets `[-k/2, k/2 - 1]`, which introduces a
//! half-pixel bias toward the top-left. Dilation uses the reflected element
//! so that `dilate` is the adjoint of `erode` and `opening` is a true
//! morphological opening (anti-extensive and idempotent) for every `k`.

use crate::error::{Error, Result};

const WORD: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct InstanceMask {
    height: usize,
    width: usize,
    stride: usize,
    words: Vec<u64>,
}

impl std::fmt::Debug for InstanceMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "InstanceMask {}x{} ({} set)", self.height, self.width, self.count())?;
        if self.height * self.width <= 4096 {
            for y in 0..self.height {
                let row: String = (0..self.width)
                    .map(|x| if self.get(x, y) { '#' } else { '.' })
                    .collect();
                writeln!(f, "{row}")?;
            }
        }
        Ok(())
    }
}

impl InstanceMask {
    /// An all-background mask.
    pub fn new(height: usize, width: usize) -> Self {
        let stride = width.div_ceil(WORD);
        InstanceMask {
            height,
            width,
            stride,
            words: vec![0; stride * height],
        }
    }

    /// An all-foreground mask.
    pub fn full(height: usize, width: usize) -> Self {
        let mut m = InstanceMask::new(height, width);
        for w in &mut m.words {
            *w = !0;
        }
        m.clear_padding();
        m
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = InstanceMask::new(height, width);
        for y in 0..height {
            for x in 0..width {
                if f(x, y) {
                    m.set(x, y, true);
                }
            }
        }
        m
    }

    /// Builds a mask from a row-major slice of `height * width` flags.
    pub fn from_row_major(height: usize, width: usize, bits: &[bool]) -> Result<Self> {
        if bits.len() != height * width {
            return Err(Error::Validation(format!(
                "expected {} mask bits, got {}",
                height * width,
                bits.len()
            )));
        }
        Ok(InstanceMask::from_fn(height, width, |x, y| bits[y * width + x]))
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        debug_assert!(x < self.width && y < self.height);
        let w = self.words[y * self.stride + x / WORD];
        (w >> (x % WORD)) & 1 == 1
    }

    /// Like `get`, but coordinates outside the image read as background.
    #[inline]
    pub fn get_or_bg(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.get(x as usize, y as usize)
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        assert!(x < self.width && y < self.height, "pixel ({x}, {y}) out of bounds");
        let w = &mut self.words[y * self.stride + x / WORD];
        let bit = 1u64 << (x % WORD);
        if value {
            *w |= bit;
        } else {
            *w &= !bit;
        }
    }

    /// Sets pixels `x0..x1` of row `y`.
    pub fn fill_span(&mut self, y: usize, x0: usize, x1: usize) {
        let x1 = x1.min(self.width);
        if x0 >= x1 {
            return;
        }
        let row = &mut self.words[y * self.stride..(y + 1) * self.stride];
        let (w0, w1) = (x0 / WORD, (x1 - 1) / WORD);
        for (i, word) in row.iter_mut().enumerate().take(w1 + 1).skip(w0) {
            let lo = if i == w0 { x0 % WORD } else { 0 };
            let hi = if i == w1 { (x1 - 1) % WORD + 1 } else { WORD };
            let span = if hi - lo == WORD {
                !0
            } else {
                ((1u64 << (hi - lo)) - 1) << lo
            };
            *word |= span;
        }
    }

    /// Number of foreground pixels.
    pub fn count(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Foreground pixels as `(x, y)` in row-major order.
    pub fn iter_ones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.height).flat_map(move |y| {
            let row = &self.words[y * self.stride..(y + 1) * self.stride];
            row.iter().enumerate().flat_map(move |(i, &word)| {
                let mut w = word;
                std::iter::from_fn(move || {
                    if w == 0 {
                        return None;
                    }
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some((i * WORD + b, y))
                })
            })
        })
    }

    /// Tight half-open bounding box `(x0, y0, x1, y1)` of the foreground.
    pub fn bounds(&self) -> Option<(usize, usize, usize, usize)> {
        let mut out: Option<(usize, usize, usize, usize)> = None;
        for y in 0..self.height {
            let row = &self.words[y * self.stride..(y + 1) * self.stride];
            let first = row.iter().position(|&w| w != 0);
            let Some(first) = first else { continue };
            let last = row.iter().rposition(|&w| w != 0).unwrap_or(first);
            let xa = first * WORD + row[first].trailing_zeros() as usize;
            let xb = last * WORD + (WORD - row[last].leading_zeros() as usize);
            out = Some(match out {
                None => (xa, y, xb, y + 1),
                Some((x0, y0, x1, _)) => (x0.min(xa), y0, x1.max(xb), y + 1),
            });
        }
        out
    }

    fn check_dims(&self, other: &InstanceMask) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                left: self.dims(),
                right: other.dims(),
            });
        }
        Ok(())
    }

    fn zip_with(&self, other: &InstanceMask, f: impl Fn(u64, u64) -> u64) -> Result<InstanceMask> {
        self.check_dims(other)?;
        let mut out = self.clone();
        for (a, &b) in out.words.iter_mut().zip(&other.words) {
            *a = f(*a, b);
        }
        Ok(out)
    }

    pub fn and(&self, other: &InstanceMask) -> Result<InstanceMask> {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn or(&self, other: &InstanceMask) -> Result<InstanceMask> {
        self.zip_with(other, |a, b| a | b)
    }

    /// Pixels in `self` but not in `other`.
    pub fn and_not(&self, other: &InstanceMask) -> Result<InstanceMask> {
        self.zip_with(other, |a, b| a & !b)
    }

    pub fn complement(&self) -> InstanceMask {
        let mut out = self.clone();
        for w in &mut out.words {
            *w = !*w;
        }
        out.clear_padding();
        out
    }

    /// In-place union; dimensions must match.
    pub fn union_with(&mut self, other: &InstanceMask) -> Result<()> {
        self.check_dims(other)?;
        for (a, &b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
        Ok(())
    }

    /// Intersection and union pixel counts.
    pub fn overlap(&self, other: &InstanceMask) -> Result<Overlap> {
        self.check_dims(other)?;
        let mut inter = 0u64;
        let mut union = 0u64;
        for (&a, &b) in self.words.iter().zip(&other.words) {
            inter += (a & b).count_ones() as u64;
            union += (a | b).count_ones() as u64;
        }
        Ok(Overlap {
            intersection: inter,
            union,
        })
    }

    /// Translates the foreground by whole pixels; pixels leaving the image are lost.
    pub fn translate(&self, dx: i64, dy: i64) -> InstanceMask {
        let mut out = InstanceMask::new(self.height, self.width);
        for (x, y) in self.iter_ones() {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if nx >= 0 && ny >= 0 && (nx as usize) < self.width && (ny as usize) < self.height {
                out.set(nx as usize, ny as usize, true);
            }
        }
        out
    }

    fn clear_padding(&mut self) {
        let tail = self.width % WORD;
        if tail == 0 || self.stride == 0 {
            return;
        }
        let keep = (1u64 << tail) - 1;
        for y in 0..self.height {
            self.words[y * self.stride + self.stride - 1] &= keep;
        }
    }

    fn row(&self, y: usize) -> &[u64] {
        &self.words[y * self.stride..(y + 1) * self.stride]
    }
}

/// Pixel counts behind an IoU, kept as integers so that threshold tests
/// can be done exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Overlap {
    pub intersection: u64,
    pub union: u64,
}

impl Overlap {
    /// IoU, with two empty masks counting as a perfect match.
    pub fn iou(&self) -> f64 {
        if self.union == 0 {
            1.0
        } else {
            self.intersection as f64 / self.union as f64
        }
    }

    /// `iou >= percent / 100`, evaluated without rounding.
    pub fn meets_percent(&self, percent: u32) -> bool {
        if self.union == 0 {
            return true;
        }
        self.intersection as u128 * 100 >= percent as u128 * self.union as u128
    }

    /// Exact comparison of two IoU ratios.
    pub fn cmp_iou(&self, other: &Overlap) -> std::cmp::Ordering {
        let a = if self.union == 0 { (1, 1) } else { (self.intersection, self.union) };
        let b = if other.union == 0 { (1, 1) } else { (other.intersection, other.union) };
        (a.0 as u128 * b.1 as u128).cmp(&(b.0 as u128 * a.1 as u128))
    }
}

/// `dst[x] = src[x + offset]`, zero where `x + offset` leaves the row.
fn shift_row(src: &[u64], offset: isize, dst: &mut [u64]) {
    let n = src.len();
    let mag = offset.unsigned_abs();
    let (ws, bs) = (mag / WORD, mag % WORD);
    for (i, d) in dst.iter_mut().enumerate() {
        *d = if offset >= 0 {
            let lo = src.get(i + ws).copied().unwrap_or(0);
            let hi = src.get(i + ws + 1).copied().unwrap_or(0);
            if bs == 0 {
                lo
            } else {
                (lo >> bs) | (hi << (WORD - bs))
            }
        } else {
            let hi = if i >= ws { src[i - ws] } else { 0 };
            let lo = if i > ws { src[i - ws - 1] } else { 0 };
            if bs == 0 {
                hi
            } else {
                (hi << bs) | (lo >> (WORD - bs))
            }
        };
    }
    debug_assert_eq!(dst.len(), n);
}

#[derive(Clone, Copy)]
enum Filter {
    Min,
    Max,
}

/// Separable rank filter over offsets `lo..=hi` on both axes.
/// `Min` reads `src[p + o]`, out-of-image counts as background.
fn rank_filter(m: &InstanceMask, lo: isize, hi: isize, filter: Filter) -> InstanceMask {
    let stride = m.stride;
    let mut horiz = InstanceMask::new(m.height, m.width);
    let mut tmp = vec![0u64; stride];
    for y in 0..m.height {
        let src = m.row(y);
        let acc = &mut horiz.words[y * stride..(y + 1) * stride];
        match filter {
            Filter::Min => acc.fill(!0),
            Filter::Max => acc.fill(0),
        }
        for o in lo..=hi {
            shift_row(src, o, &mut tmp);
            for (a, &t) in acc.iter_mut().zip(&tmp) {
                match filter {
                    Filter::Min => *a &= t,
                    Filter::Max => *a |= t,
                }
            }
        }
    }
    horiz.clear_padding();

    let mut out = InstanceMask::new(m.height, m.width);
    let h = m.height as isize;
    for y in 0..h {
        let acc = &mut out.words[y as usize * stride..(y as usize + 1) * stride];
        match filter {
            Filter::Min => {
                if y + lo < 0 || y + hi >= h {
                    continue;
                }
                acc.fill(!0);
            }
            Filter::Max => acc.fill(0),
        }
        for o in lo..=hi {
            let yy = y + o;
            if yy < 0 || yy >= h {
                continue;
            }
            let src = &horiz.words[yy as usize * stride..(yy as usize + 1) * stride];
            for (a, &s) in acc.iter_mut().zip(src) {
                match filter {
                    Filter::Min => *a &= s,
                    Filter::Max => *a |= s,
                }
            }
        }
    }
    out.clear_padding();
    out
}

/// Offsets covered by a `k × k` element anchored at `floor(k / 2)`.
fn element_offsets(k: usize) -> (isize, isize) {
    let a = (k / 2) as isize;
    (-a, k as isize - 1 - a)
}

/// Erosion with a `k × k` square. `k <= 1` returns the input unchanged.
pub fn erode(m: &InstanceMask, k: usize) -> InstanceMask {
    if k <= 1 {
        return m.clone();
    }
    let (lo, hi) = element_offsets(k);
    rank_filter(m, lo, hi, Filter::Min)
}

/// Dilation with the reflected `k × k` square. `k <= 1` returns the input unchanged.
pub fn dilate(m: &InstanceMask, k: usize) -> InstanceMask {
    if k <= 1 {
        return m.clone();
    }
    let (lo, hi) = element_offsets(k);
    rank_filter(m, -hi, -lo, Filter::Max)
}

pub fn opening(m: &InstanceMask, k: usize) -> InstanceMask {
    dilate(&erode(m, k), k)
}

pub fn mask_iou(a: &InstanceMask, b: &InstanceMask) -> Result<f64> {
    Ok(a.overlap(b)?.iou())
}

/// Foreground pixels within Chebyshev distance `d` of the background.
pub fn boundary_band(m: &InstanceMask, d: usize) -> InstanceMask {
    let d = d.max(1);
    let inner = erode(m, 2 * d + 1);
    m.and_not(&inner).expect("same dimensions")
}

pub fn boundary_overlap(a: &InstanceMask, b: &InstanceMask, d: usize) -> Result<Overlap> {
    a.check_dims(b)?;
    boundary_band(a, d).overlap(&boundary_band(b, d))
}

/// IoU of the two masks' boundary bands.
pub fn boundary_iou(a: &InstanceMask, b: &InstanceMask, d: usize) -> Result<f64> {
    Ok(boundary_overlap(a, b, d)?.iou())
}

/// Default band width: 2% of the image diagonal, at least one pixel.
pub fn default_band_width(height: usize, width: usize) -> usize {
    let diag = ((height * height + width * width) as f64).sqrt();
    ((0.02 * diag).round() as usize).max(1)
}
