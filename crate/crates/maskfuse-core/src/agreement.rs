//! Pairwise Dice agreement over an annotation set and exclusion of
//! annotators whose median pairwise agreement falls below a threshold.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mask::Mask;

/// The masks of every annotator for one image, in submission order.
/// All masks share the set's dimensions; annotator ids are unique.
///
/// An empty set is representable so that filtering every annotator out
/// stays a value rather than an error; fusion operations reject it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationSet {
    image_id: String,
    width: u32,
    height: u32,
    annotators: Vec<String>,
    masks: Vec<Mask>,
}

impl AnnotationSet {
    /// Empty set for an image of the given dimensions.
    pub fn new(image_id: impl Into<String>, width: u32, height: u32) -> Self {
        assert!(width > 0 && height > 0, "set dimensions must be nonzero");
        AnnotationSet {
            image_id: image_id.into(),
            width,
            height,
            annotators: Vec::new(),
            masks: Vec::new(),
        }
    }

    pub fn push(&mut self, annotator: impl Into<String>, mask: Mask) -> Result<()> {
        let annotator = annotator.into();
        if mask.dimensions() != (self.width, self.height) {
            return Err(Error::dimension_mismatch(
                (self.width, self.height),
                mask.dimensions(),
            ));
        }
        if self.annotators.contains(&annotator) {
            return Err(Error::DuplicateAnnotator(annotator));
        }
        self.annotators.push(annotator);
        self.masks.push(mask);
        Ok(())
    }

    pub fn image_id(&self) -> &str {
        &self.image_id
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn annotators(&self) -> &[String] {
        &self.annotators
    }

    pub fn masks(&self) -> &[Mask] {
        &self.masks
    }

    pub fn mask(&self, index: usize) -> &Mask {
        &self.masks[index]
    }

    pub fn mask_of(&self, annotator: &str) -> Option<&Mask> {
        self.annotators
            .iter()
            .position(|a| a == annotator)
            .map(|i| &self.masks[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Mask)> {
        self.annotators
            .iter()
            .map(String::as_str)
            .zip(self.masks.iter())
    }

    /// New set containing the annotators at `indices`, order preserved.
    pub fn subset(&self, indices: &[usize]) -> AnnotationSet {
        let mut subset = AnnotationSet::new(self.image_id.clone(), self.width, self.height);
        for &i in indices {
            subset.annotators.push(self.annotators[i].clone());
            subset.masks.push(self.masks[i].clone());
        }
        subset
    }
}

/// Dice score between two masks: 2|A∩B| / (|A|+|B|) over foreground
/// pixel sets. Two empty masks score 1.0 by convention.
pub fn dice(a: &Mask, b: &Mask) -> Result<f64> {
    if !a.same_dimensions(b) {
        return Err(Error::dimension_mismatch(a.dimensions(), b.dimensions()));
    }
    let total = a.count_foreground() + b.count_foreground();
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * a.intersection_count(b) as f64 / total as f64)
}

/// Symmetric matrix of pairwise Dice scores with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct AgreementMatrix {
    annotators: Vec<String>,
    scores: Vec<f64>,
}

impl AgreementMatrix {
    /// Builds a matrix from raw scores, validating symmetry, the unit
    /// diagonal, and the [0, 1] range. `scores` is row-major n×n.
    pub fn from_scores(annotators: Vec<String>, scores: Vec<f64>) -> Result<Self> {
        let n = annotators.len();
        if n < 2 {
            return Err(Error::TooFewAnnotators { found: n });
        }
        if scores.len() != n * n {
            return Err(Error::MalformedMatrix("score count is not n*n"));
        }
        for i in 0..n {
            if scores[i * n + i] != 1.0 {
                return Err(Error::MalformedMatrix("diagonal entry is not 1"));
            }
            for j in 0..n {
                let s = scores[i * n + j];
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::MalformedMatrix("entry outside [0, 1]"));
                }
                if scores[j * n + i] != s {
                    return Err(Error::MalformedMatrix("matrix is not symmetric"));
                }
            }
        }
        Ok(AgreementMatrix { annotators, scores })
    }

    pub fn len(&self) -> usize {
        self.annotators.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn annotators(&self) -> &[String] {
        &self.annotators
    }

    pub fn score(&self, i: usize, j: usize) -> f64 {
        self.scores[i * self.annotators.len() + j]
    }

    /// Row `i` of the matrix, including the diagonal entry.
    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.annotators.len();
        &self.scores[i * n..(i + 1) * n]
    }
}

/// Computes the full pairwise Dice matrix; each unordered pair is
/// evaluated once and mirrored.
pub fn pairwise_matrix(set: &AnnotationSet) -> Result<AgreementMatrix> {
    let n = set.len();
    if n < 2 {
        return Err(Error::TooFewAnnotators { found: n });
    }
    let mut scores = alloc::vec![0.0; n * n];
    for i in 0..n {
        scores[i * n + i] = 1.0;
        for j in i + 1..n {
            let d = dice(set.mask(i), set.mask(j))?;
            scores[i * n + j] = d;
            scores[j * n + i] = d;
        }
    }
    Ok(AgreementMatrix {
        annotators: set.annotators().to_vec(),
        scores,
    })
}

/// Per-annotator median of the off-diagonal scores (self-pair excluded);
/// even-count medians are the mean of the two middle values.
pub fn median_agreement(matrix: &AgreementMatrix) -> Vec<f64> {
    let n = matrix.len();
    (0..n)
        .map(|i| {
            let mut others: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| matrix.score(i, j)).collect();
            others.sort_unstable_by(|a, b| a.partial_cmp(b).expect("dice scores are never NaN"));
            let mid = others.len() / 2;
            if others.len() % 2 == 1 {
                others[mid]
            } else {
                (others[mid - 1] + others[mid]) / 2.0
            }
        })
        .collect()
}

/// One annotator's filtering outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterRecord {
    pub annotator: String,
    pub median: f64,
    pub included: bool,
}

/// Outcome of one filtering pass over an annotation set.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterReport {
    pub threshold: f64,
    pub records: Vec<FilterRecord>,
    pub excluded_count: usize,
}

impl FilterReport {
    /// True when the pass excluded every annotator; not an error, but
    /// downstream fusion of the included set will be.
    pub fn all_excluded(&self) -> bool {
        self.excluded_count == self.records.len()
    }
}

/// Single-pass filter: medians are computed once on the full set and an
/// annotator is kept iff its median is at least `threshold` (exclusion is
/// strictly below). Order is preserved.
pub fn filter_annotators(
    set: &AnnotationSet,
    threshold: f64,
) -> Result<(AnnotationSet, FilterReport)> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidThreshold(threshold));
    }
    let matrix = pairwise_matrix(set)?;
    let medians = median_agreement(&matrix);

    let mut records = Vec::with_capacity(set.len());
    let mut kept_indices = Vec::new();
    for (i, median) in medians.into_iter().enumerate() {
        let included = median >= threshold;
        if included {
            kept_indices.push(i);
        }
        records.push(FilterRecord {
            annotator: set.annotators()[i].clone(),
            median,
            included,
        });
    }
    let excluded_count = records.len() - kept_indices.len();
    let report = FilterReport {
        threshold,
        records,
        excluded_count,
    };
    Ok((set.subset(&kept_indices), report))
}
