//! On-disk document formats: CSV exports of agreement matrices and
//! medians, and the TOML report, manifest, and summary documents.

use maskfuse_core::{AgreementMatrix, FilterReport};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Agreement matrix as CSV: a header row of annotator ids, then n rows
/// of n scores with six fractional digits.
pub fn matrix_to_csv(matrix: &AgreementMatrix) -> String {
    let mut out = String::new();
    out.push_str(&matrix.annotators().join(","));
    out.push('\n');
    for i in 0..matrix.len() {
        let row: Vec<String> = matrix.row(i).iter().map(|s| format!("{s:.6}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Per-annotator median table as CSV. Medians are written with Rust's
/// shortest round-trip float formatting so parsed values match the
/// computed ones bit for bit.
pub fn medians_to_csv(matrix: &AgreementMatrix, medians: &[f64]) -> String {
    let mut out = String::from("annotator,median_dice\n");
    for (id, median) in matrix.annotators().iter().zip(medians) {
        writeln!(out, "{id},{median}").unwrap();
    }
    out
}

/// Per-annotator score distributions in long form, one row per ordered
/// annotator pair, suitable for external plotting.
pub fn distributions_to_csv(matrix: &AgreementMatrix) -> String {
    let mut out = String::from("annotator,peer,dice\n");
    let ids = matrix.annotators();
    for i in 0..matrix.len() {
        for j in 0..matrix.len() {
            if i != j {
                writeln!(out, "{},{},{:.6}", ids[i], ids[j], matrix.score(i, j)).unwrap();
            }
        }
    }
    out
}

/// Filter outcome document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterReportDoc {
    pub threshold: f64,
    pub excluded_count: usize,
    pub all_excluded: bool,
    pub annotators: Vec<FilterRecordDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterRecordDoc {
    pub id: String,
    pub median_dice: f64,
    pub included: bool,
}

impl From<&FilterReport> for FilterReportDoc {
    fn from(report: &FilterReport) -> Self {
        FilterReportDoc {
            threshold: report.threshold,
            excluded_count: report.excluded_count,
            all_excluded: report.all_excluded(),
            annotators: report
                .records
                .iter()
                .map(|r| FilterRecordDoc {
                    id: r.annotator.clone(),
                    median_dice: r.median,
                    included: r.included,
                })
                .collect(),
        }
    }
}

/// Per-image ingest manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestManifest {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    pub background_removed: bool,
    pub annotations: Vec<IngestRecord>,
    #[serde(default)]
    pub skipped: Vec<SkippedFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestRecord {
    pub id: String,
    pub source: String,
    pub foreground_pixels: usize,
    pub empty: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkippedFile {
    pub file: String,
    pub reason: String,
}

/// Whole-run summary: configuration echo plus one entry per image.
/// Paths are relative to the output root and no timestamps are recorded,
/// so identical runs produce identical documents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub pipeline_version: String,
    pub config: ConfigEcho,
    pub images: Vec<ImageSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub threshold: f64,
    pub min_speckle_size: usize,
    pub connectivity: u8,
    pub alpha: String,
    pub background_tolerance: u8,
    pub use_filtered: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImageSummary {
    pub image_id: String,
    pub annotator_count: usize,
    pub excluded_count: usize,
    pub excluded: Vec<String>,
    pub outputs: Vec<String>,
}

/// Manifest written next to a simulated cohort: annotator id to profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CohortManifest {
    pub truth: String,
    pub connectivity: u8,
    pub annotators: Vec<CohortEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CohortEntry {
    pub id: String,
    pub file: String,
    pub jitter_radius: u32,
    pub p_drop: f64,
    pub p_add: f64,
    pub add_size: u32,
    pub speckle_count: u32,
    pub seed: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use maskfuse_core::{AnnotationSet, Mask, median_agreement, pairwise_matrix};

    fn two_annotator_matrix() -> AgreementMatrix {
        let mut set = AnnotationSet::new("img", 2, 2);
        let mut a = Mask::new(2, 2);
        a.set(0, 0, true);
        set.push("alice", a.clone()).unwrap();
        set.push("bob", a).unwrap();
        pairwise_matrix(&set).unwrap()
    }

    #[test]
    fn matrix_csv_layout() {
        let csv = matrix_to_csv(&two_annotator_matrix());
        assert_eq!(csv, "alice,bob\n1.000000,1.000000\n1.000000,1.000000\n");
    }

    #[test]
    fn medians_csv_round_trips_exactly() {
        let matrix = two_annotator_matrix();
        let medians = median_agreement(&matrix);
        let csv = medians_to_csv(&matrix, &medians);
        for (line, expected) in csv.lines().skip(1).zip(&medians) {
            let parsed: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert_eq!(parsed.to_bits(), expected.to_bits());
        }
    }

    #[test]
    fn distributions_exclude_self_pairs() {
        let csv = distributions_to_csv(&two_annotator_matrix());
        let rows: Vec<&str> = csv.lines().skip(1).collect();
        assert_eq!(rows, vec!["alice,bob,1.000000", "bob,alice,1.000000"]);
    }
}
