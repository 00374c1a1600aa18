//! Mask data model and the post-processing chain from raw annotation
//! images to clean binary masks: background removal, binarization,
//! connected-component labelling, and speckle removal.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Neighborhood used when grouping foreground pixels into components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    /// N, S, E, W neighbors.
    Four,
    /// All eight neighbors, including diagonals.
    #[default]
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(i32, i32)] {
        match self {
            Connectivity::Four => &[(-1, 0), (1, 0), (0, -1), (0, 1)],
            Connectivity::Eight => &[
                (-1, -1),
                (0, -1),
                (1, -1),
                (-1, 0),
                (1, 0),
                (-1, 1),
                (0, 1),
                (1, 1),
            ],
        }
    }
}

impl TryFrom<u8> for Connectivity {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        match value {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            other => Err(Error::InvalidConnectivity(other)),
        }
    }
}

/// Whether the alpha channel participates in the binarization channel sum.
///
/// A fully opaque alpha plane would make every pixel foreground under the
/// plain sum rule, so alpha is excluded by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlphaPolicy {
    #[default]
    IgnoreAlpha,
    IncludeAlpha,
}

/// An 8-bit raster image as decoded from an annotation file.
///
/// `channels` is 1 (gray), 3 (RGB) or 4 (RGBA); samples are stored
/// row-major, interleaved per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImage {
    width: u32,
    height: u32,
    channels: u8,
    samples: Vec<u8>,
}

impl RawImage {
    pub fn new(width: u32, height: u32, channels: u8, samples: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ZeroDimension);
        }
        if !matches!(channels, 1 | 3 | 4) {
            return Err(Error::UnsupportedChannelCount(channels));
        }
        let expected = width as usize * height as usize * channels as usize;
        if samples.len() != expected {
            return Err(Error::SampleCountMismatch {
                expected,
                actual: samples.len(),
            });
        }
        Ok(RawImage {
            width,
            height,
            channels,
            samples,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    /// Channel `c` of pixel (`x`, `y`).
    pub fn sample(&self, x: u32, y: u32, c: u8) -> u8 {
        debug_assert!(x < self.width && y < self.height && c < self.channels);
        let idx = (y as usize * self.width as usize + x as usize) * self.channels as usize;
        self.samples[idx + c as usize]
    }

    /// Gray value of pixel (`x`, `y`): the sample itself for gray images,
    /// the rounded mean of the color channels otherwise. Alpha never
    /// contributes.
    pub fn gray(&self, x: u32, y: u32) -> u8 {
        match self.channels {
            1 => self.sample(x, y, 0),
            _ => {
                let sum = self.sample(x, y, 0) as u32
                    + self.sample(x, y, 1) as u32
                    + self.sample(x, y, 2) as u32;
                ((2 * sum + 3) / 6) as u8
            }
        }
    }
}

/// A binary segmentation mask. Foreground bits are packed into 64-bit
/// words with one row stride per scanline; padding bits past the row
/// width are kept zero so word-level counting stays exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    words: Vec<u64>,
}

impl Mask {
    /// All-background mask. Panics on zero dimensions.
    pub fn new(width: u32, height: u32) -> Self {
        assert!(width > 0 && height > 0, "mask dimensions must be nonzero");
        let stride = (width as usize).div_ceil(64);
        Mask {
            width,
            height,
            words: vec![0; stride * height as usize],
        }
    }

    /// Builds a mask by evaluating `f` at every pixel in raster order.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut mask = Mask::new(width, height);
        let stride = mask.stride();
        for y in 0..height {
            let row = y as usize * stride;
            for x in 0..width {
                if f(x, y) {
                    mask.words[row + (x as usize >> 6)] |= 1u64 << (x & 63);
                }
            }
        }
        mask
    }

    fn stride(&self) -> usize {
        (self.width as usize).div_ceil(64)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn same_dimensions(&self, other: &Mask) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        assert!(x < self.width && y < self.height, "pixel out of bounds");
        let idx = y as usize * self.stride() + (x as usize >> 6);
        self.words[idx] >> (x & 63) & 1 == 1
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        assert!(x < self.width && y < self.height, "pixel out of bounds");
        let stride = self.stride();
        let idx = y as usize * stride + (x as usize >> 6);
        if value {
            self.words[idx] |= 1u64 << (x & 63);
        } else {
            self.words[idx] &= !(1u64 << (x & 63));
        }
    }

    /// Number of foreground pixels.
    pub fn count_foreground(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty_foreground(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Foreground pixel coordinates in raster order.
    pub fn foreground_pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let stride = self.stride();
        (0..self.height).flat_map(move |y| {
            let row = y as usize * stride;
            (0..self.width).filter_map(move |x| {
                let set = self.words[row + (x as usize >> 6)] >> (x & 63) & 1 == 1;
                set.then_some((x, y))
            })
        })
    }

    /// True if every foreground pixel of `self` is foreground in `other`.
    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.same_dimensions(other)
            && self
                .words
                .iter()
                .zip(&other.words)
                .all(|(a, b)| a & !b == 0)
    }

    pub(crate) fn intersection_count(&self, other: &Mask) -> usize {
        debug_assert!(self.same_dimensions(other));
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub(crate) fn or_assign(&mut self, other: &Mask) {
        debug_assert!(self.same_dimensions(other));
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub(crate) fn and_assign(&mut self, other: &Mask) {
        debug_assert!(self.same_dimensions(other));
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub(crate) fn xor_assign(&mut self, other: &Mask) {
        debug_assert!(self.same_dimensions(other));
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }
}

/// Connected-component labelling of a mask. Labels are dense (1..=max)
/// and assigned in raster order of each component's first pixel;
/// 0 marks background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: u32,
    height: u32,
    labels: Vec<u32>,
    component_sizes: Vec<usize>,
}

impl LabelMap {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn label(&self, x: u32, y: u32) -> u32 {
        assert!(x < self.width && y < self.height, "pixel out of bounds");
        self.labels[y as usize * self.width as usize + x as usize]
    }

    pub fn max_label(&self) -> u32 {
        self.component_sizes.len() as u32
    }

    /// Pixel counts indexed by `label - 1`.
    pub fn component_sizes(&self) -> &[usize] {
        &self.component_sizes
    }

    pub fn size_of(&self, label: u32) -> Option<usize> {
        if label == 0 {
            return None;
        }
        self.component_sizes.get(label as usize - 1).copied()
    }

    pub fn foreground_count(&self) -> usize {
        self.component_sizes.iter().sum()
    }
}

/// Zeroes every pixel where `raw` matches `background` within `tolerance`.
///
/// Matching is per channel when the channel counts agree and on the shared
/// gray interpretation otherwise (gray reference image against a color
/// annotation). Non-matching pixels keep their original samples.
pub fn subtract_background(raw: &RawImage, background: &RawImage, tolerance: u8) -> Result<RawImage> {
    if raw.dimensions() != background.dimensions() {
        return Err(Error::dimension_mismatch(
            raw.dimensions(),
            background.dimensions(),
        ));
    }
    let channels = raw.channels as usize;
    let mut samples = raw.samples.clone();
    for y in 0..raw.height {
        for x in 0..raw.width {
            let matched = if raw.channels == background.channels {
                (0..raw.channels)
                    .all(|c| raw.sample(x, y, c).abs_diff(background.sample(x, y, c)) <= tolerance)
            } else {
                raw.gray(x, y).abs_diff(background.gray(x, y)) <= tolerance
            };
            if matched {
                let idx = (y as usize * raw.width as usize + x as usize) * channels;
                samples[idx..idx + channels].fill(0);
            }
        }
    }
    Ok(RawImage {
        width: raw.width,
        height: raw.height,
        channels: raw.channels,
        samples,
    })
}

/// Binarizes a raw image: a pixel is foreground iff the sum of its counted
/// channels is larger than 0. With [`AlphaPolicy::IgnoreAlpha`] the alpha
/// channel of RGBA images is excluded from the sum.
pub fn binarize(raw: &RawImage, alpha_policy: AlphaPolicy) -> Mask {
    let counted = match (raw.channels, alpha_policy) {
        (4, AlphaPolicy::IgnoreAlpha) => 3,
        (c, _) => c,
    };
    Mask::from_fn(raw.width, raw.height, |x, y| {
        (0..counted).map(|c| raw.sample(x, y, c) as u32).sum::<u32>() > 0
    })
}

/// Labels the connected components of a mask's foreground.
pub fn connected_components(mask: &Mask, connectivity: Connectivity) -> LabelMap {
    let (width, height) = mask.dimensions();
    let mut labels = vec![0u32; width as usize * height as usize];
    let mut component_sizes = Vec::new();
    let offsets = connectivity.offsets();
    let mut stack: Vec<(u32, u32)> = Vec::new();

    for y in 0..height {
        for x in 0..width {
            let idx = y as usize * width as usize + x as usize;
            if !mask.get(x, y) || labels[idx] != 0 {
                continue;
            }
            let label = component_sizes.len() as u32 + 1;
            let mut size = 0usize;
            labels[idx] = label;
            stack.push((x, y));
            while let Some((cx, cy)) = stack.pop() {
                size += 1;
                for &(dx, dy) in offsets {
                    let nx = cx as i64 + dx as i64;
                    let ny = cy as i64 + dy as i64;
                    if nx < 0 || ny < 0 || nx >= width as i64 || ny >= height as i64 {
                        continue;
                    }
                    let (nx, ny) = (nx as u32, ny as u32);
                    let nidx = ny as usize * width as usize + nx as usize;
                    if mask.get(nx, ny) && labels[nidx] == 0 {
                        labels[nidx] = label;
                        stack.push((nx, ny));
                    }
                }
            }
            component_sizes.push(size);
        }
    }

    LabelMap {
        width,
        height,
        labels,
        component_sizes,
    }
}

/// Keeps only the foreground pixels belonging to components of at least
/// `min_size` pixels. `min_size = 2` discards single-pixel speckles.
pub fn remove_speckles(mask: &Mask, min_size: usize, connectivity: Connectivity) -> Mask {
    let label_map = connected_components(mask, connectivity);
    let keep: Vec<bool> = label_map
        .component_sizes()
        .iter()
        .map(|&size| size >= min_size)
        .collect();
    Mask::from_fn(mask.width, mask.height, |x, y| {
        let label = label_map.labels[y as usize * mask.width as usize + x as usize];
        label != 0 && keep[label as usize - 1]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_from_rows(rows: &[&str]) -> Mask {
        let height = rows.len() as u32;
        let width = rows[0].len() as u32;
        Mask::from_fn(width, height, |x, y| {
            rows[y as usize].as_bytes()[x as usize] == b'1'
        })
    }

    #[test]
    fn raw_image_validates_invariants() {
        assert_eq!(RawImage::new(0, 3, 1, vec![]), Err(Error::ZeroDimension));
        assert_eq!(
            RawImage::new(2, 2, 2, vec![0; 8]),
            Err(Error::UnsupportedChannelCount(2))
        );
        assert_eq!(
            RawImage::new(2, 2, 3, vec![0; 11]),
            Err(Error::SampleCountMismatch {
                expected: 12,
                actual: 11
            })
        );
        assert!(RawImage::new(2, 2, 3, vec![0; 12]).is_ok());
    }

    #[test]
    fn binarize_sum_rule() {
        // RGB (0,0,0) stays background, any positive channel flips it.
        let raw = RawImage::new(2, 1, 3, vec![0, 0, 0, 0, 1, 0]).unwrap();
        let mask = binarize(&raw, AlphaPolicy::IgnoreAlpha);
        assert!(!mask.get(0, 0));
        assert!(mask.get(1, 0));
    }

    #[test]
    fn binarize_alpha_policy() {
        let raw = RawImage::new(1, 1, 4, vec![0, 0, 0, 255]).unwrap();
        assert!(!binarize(&raw, AlphaPolicy::IgnoreAlpha).get(0, 0));
        assert!(binarize(&raw, AlphaPolicy::IncludeAlpha).get(0, 0));
    }

    #[test]
    fn binarize_gray_single_value() {
        let raw = RawImage::new(1, 1, 1, vec![1]).unwrap();
        assert!(binarize(&raw, AlphaPolicy::IgnoreAlpha).get(0, 0));
    }

    #[test]
    fn subtract_identical_inputs_is_zero() {
        let raw = RawImage::new(2, 2, 3, (0..12).collect()).unwrap();
        let out = subtract_background(&raw, &raw, 0).unwrap();
        assert!(out.samples().iter().all(|&s| s == 0));
    }

    #[test]
    fn subtract_zero_background_is_identity() {
        let raw = RawImage::new(2, 2, 3, (1..13).collect()).unwrap();
        let zero = RawImage::new(2, 2, 3, vec![0; 12]).unwrap();
        let out = subtract_background(&raw, &zero, 0).unwrap();
        assert_eq!(out, raw);
    }

    #[test]
    fn subtract_tolerance_keeps_only_outliers() {
        // Pixel 1 differs from background by 10, the rest by at most 5.
        let raw = RawImage::new(3, 1, 1, vec![100, 110, 105]).unwrap();
        let background = RawImage::new(3, 1, 1, vec![100, 100, 100]).unwrap();
        let out = subtract_background(&raw, &background, 5).unwrap();
        assert_eq!(out.samples(), &[0, 110, 0]);
    }

    #[test]
    fn subtract_mixed_channels_compares_gray() {
        // Gray background vs RGB annotation: (60,60,60) matches gray 60;
        // (200,0,0) has gray 67 and survives against background 0.
        let raw = RawImage::new(2, 1, 3, vec![60, 60, 60, 200, 0, 0]).unwrap();
        let background = RawImage::new(2, 1, 1, vec![60, 0]).unwrap();
        let out = subtract_background(&raw, &background, 0).unwrap();
        assert_eq!(out.samples(), &[0, 0, 0, 200, 0, 0]);
    }

    #[test]
    fn subtract_dimension_mismatch() {
        let a = RawImage::new(2, 2, 1, vec![0; 4]).unwrap();
        let b = RawImage::new(3, 2, 1, vec![0; 6]).unwrap();
        assert!(matches!(
            subtract_background(&a, &b, 0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn components_empty_mask() {
        let mask = Mask::new(4, 4);
        let labels = connected_components(&mask, Connectivity::Eight);
        assert_eq!(labels.max_label(), 0);
        assert_eq!(labels.foreground_count(), 0);
    }

    #[test]
    fn components_diagonal_depends_on_connectivity() {
        let mask = mask_from_rows(&["100", "010", "000"]);
        let eight = connected_components(&mask, Connectivity::Eight);
        assert_eq!(eight.max_label(), 1);
        assert_eq!(eight.component_sizes(), &[2]);

        let four = connected_components(&mask, Connectivity::Four);
        assert_eq!(four.max_label(), 2);
        assert_eq!(four.component_sizes(), &[1, 1]);
    }

    #[test]
    fn components_full_mask_is_one_component() {
        let mask = Mask::from_fn(5, 3, |_, _| true);
        let labels = connected_components(&mask, Connectivity::Four);
        assert_eq!(labels.max_label(), 1);
        assert_eq!(labels.component_sizes(), &[15]);
    }

    #[test]
    fn components_partition_foreground() {
        let mask = mask_from_rows(&["11010", "00010", "10011"]);
        let labels = connected_components(&mask, Connectivity::Eight);
        assert_eq!(labels.foreground_count(), mask.count_foreground());
    }

    #[test]
    fn speckles_isolated_pixel_removed_blob_kept() {
        let mask = mask_from_rows(&["10000", "00111", "00111"]);
        let cleaned = remove_speckles(&mask, 2, Connectivity::Eight);
        assert!(!cleaned.get(0, 0));
        assert_eq!(cleaned.count_foreground(), 6);
    }

    #[test]
    fn speckles_min_size_one_is_identity() {
        let mask = mask_from_rows(&["101", "010"]);
        assert_eq!(remove_speckles(&mask, 1, Connectivity::Eight), mask);
    }

    #[test]
    fn speckles_idempotent() {
        let mask = mask_from_rows(&["10010", "00110", "10000"]);
        let once = remove_speckles(&mask, 2, Connectivity::Four);
        let twice = remove_speckles(&once, 2, Connectivity::Four);
        assert_eq!(once, twice);
    }

    #[test]
    fn mask_padding_stays_clear_across_word_boundary() {
        // Width 70 forces two words per row.
        let mut mask = Mask::new(70, 2);
        mask.set(69, 1, true);
        mask.set(0, 0, true);
        assert_eq!(mask.count_foreground(), 2);
        mask.set(69, 1, false);
        assert_eq!(mask.count_foreground(), 1);
        assert_eq!(
            mask.foreground_pixels().collect::<alloc::vec::Vec<_>>(),
            [(0, 0)]
        );
    }
}
