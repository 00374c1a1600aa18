//! Fusion of an annotation set into mean, union, intersection, and
//! disagreement maps, plus the interior/boundary/full decomposition of
//! the residual variation.

use alloc::vec;
use alloc::vec::Vec;

use crate::agreement::AnnotationSet;
use crate::error::{Error, Result};
use crate::mask::Mask;

/// Per-pixel mean of the binary masks, kept as exact counts: the value at
/// a pixel is k/n where k annotators marked it out of n. Storing counts
/// instead of floats keeps the union/intersection relations drift-free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbabilityMap {
    width: u32,
    height: u32,
    counts: Vec<u32>,
    annotator_count: u32,
}

impl ProbabilityMap {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn annotator_count(&self) -> u32 {
        self.annotator_count
    }

    /// Number of annotators that marked (`x`, `y`).
    pub fn count(&self, x: u32, y: u32) -> u32 {
        assert!(x < self.width && y < self.height, "pixel out of bounds");
        self.counts[y as usize * self.width as usize + x as usize]
    }

    /// Mean value at (`x`, `y`), exactly k/n.
    pub fn value(&self, x: u32, y: u32) -> f64 {
        self.count(x, y) as f64 / self.annotator_count as f64
    }
}

/// Decomposition of an annotation set's variation: unanimous interior,
/// the band marked by some but not all annotators, and the full extent.
/// `interior` and `boundary_band` are disjoint and union to `full`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticSplit {
    pub interior: Mask,
    pub boundary_band: Mask,
    pub full: Mask,
}

fn require_nonempty(set: &AnnotationSet) -> Result<()> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(())
}

/// Per-pixel mean of the set's masks.
pub fn mean_map(set: &AnnotationSet) -> Result<ProbabilityMap> {
    require_nonempty(set)?;
    let (width, height) = (set.width(), set.height());
    let mut counts = vec![0u32; width as usize * height as usize];
    for mask in set.masks() {
        for (x, y) in mask.foreground_pixels() {
            counts[y as usize * width as usize + x as usize] += 1;
        }
    }
    Ok(ProbabilityMap {
        width,
        height,
        counts,
        annotator_count: set.len() as u32,
    })
}

/// Pixels marked by at least one annotator.
pub fn union(set: &AnnotationSet) -> Result<Mask> {
    require_nonempty(set)?;
    let mut out = Mask::new(set.width(), set.height());
    for mask in set.masks() {
        out.or_assign(mask);
    }
    Ok(out)
}

/// Pixels marked by every annotator.
pub fn intersection(set: &AnnotationSet) -> Result<Mask> {
    require_nonempty(set)?;
    let mut out = set.mask(0).clone();
    for mask in &set.masks()[1..] {
        out.and_assign(mask);
    }
    Ok(out)
}

/// Pixels marked by some but not all annotators: union minus intersection.
pub fn disagreement(set: &AnnotationSet) -> Result<Mask> {
    let mut out = union(set)?;
    out.xor_assign(&intersection(set)?);
    Ok(out)
}

/// Thresholds a mean map: a pixel is foreground iff its value is at least
/// `t`. Ties go to foreground, so `t = 0.5` is a majority vote and
/// `t = 1` recovers the intersection; `t = 0` marks every pixel.
pub fn threshold_map(map: &ProbabilityMap, t: f64) -> Mask {
    Mask::from_fn(map.width, map.height, |x, y| map.value(x, y) >= t)
}

/// Splits the set's variation into interior (intersection), boundary band
/// (disagreement), and full extent (union).
pub fn semantic_split(set: &AnnotationSet) -> Result<SemanticSplit> {
    if set.len() < 2 {
        return Err(Error::TooFewAnnotators { found: set.len() });
    }
    let interior = intersection(set)?;
    let full = union(set)?;
    let mut boundary_band = full.clone();
    boundary_band.xor_assign(&interior);
    Ok(SemanticSplit {
        interior,
        boundary_band,
        full,
    })
}
