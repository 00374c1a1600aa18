//! Pipeline orchestration over an on-disk tree.
//!
//! Input layout: `<input>/<image_id>/<annotator_id>.png`, with an optional
//! background image at `<input>/<image_id>/_background.png` (underscore
//! names are reserved and never read as annotations). Each stage writes
//! into `<output>/<image_id>/`: normalized masks under `masks/`, CSV and
//! TOML documents beside them, and consensus maps under `consensus_all/`
//! or `consensus_filtered/`.
//!
//! Unreadable annotator files are skipped with a warning record instead of
//! aborting the image; callers collect the returned [`Issue`]s and exit
//! nonzero when any occurred.

use std::fs;
use std::path::{Path, PathBuf};

use maskfuse_core::{
    AlphaPolicy, AnnotationSet, Connectivity, GroundTruthScene, binarize, disagreement,
    filter_annotators, intersection, mean_map, median_agreement, pairwise_matrix,
    remove_speckles, semantic_split, simulate_cohort, subtract_background, union,
};
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};
use crate::formats::{
    CohortEntry, CohortManifest, ConfigEcho, FilterReportDoc, ImageSummary, IngestManifest,
    IngestRecord, RunSummary, SkippedFile, matrix_to_csv, medians_to_csv,
};
use crate::formats::{FilterRecordDoc, distributions_to_csv};
use crate::png;
use crate::profiles::ProfileEntry;

pub const DEFAULT_THRESHOLD: f64 = 0.9;
pub const DEFAULT_MIN_SPECKLE_SIZE: usize = 2;
pub const DEFAULT_BACKGROUND_TOLERANCE: u8 = 0;

/// Resolved configuration for the pipeline stages.
#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub input: PathBuf,
    pub output: PathBuf,
    pub threshold: f64,
    pub min_speckle_size: usize,
    pub connectivity: Connectivity,
    pub alpha: AlphaPolicy,
    pub background_tolerance: u8,
}

impl PipelineOptions {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(PipelineError::InvalidArgument(format!(
                "threshold {} is outside [0, 1]",
                self.threshold
            )));
        }
        if self.min_speckle_size == 0 {
            return Err(PipelineError::InvalidArgument(
                "min speckle size must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Optional values loaded from `--config`; explicit flags override them.
#[derive(Debug, Default, Clone, Deserialize)]
pub struct ConfigFile {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub threshold: Option<f64>,
    pub min_speckle_size: Option<usize>,
    pub connectivity: Option<u8>,
    pub alpha: Option<String>,
    pub background_tolerance: Option<u8>,
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ConfigFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    toml::from_str(&text).map_err(|e| PipelineError::ConfigParse {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn parse_connectivity(code: u8) -> Result<Connectivity> {
    Connectivity::try_from(code)
        .map_err(|e| PipelineError::InvalidArgument(e.to_string()))
}

pub fn parse_alpha(value: &str) -> Result<AlphaPolicy> {
    match value {
        "ignore" => Ok(AlphaPolicy::IgnoreAlpha),
        "include" => Ok(AlphaPolicy::IncludeAlpha),
        other => Err(PipelineError::InvalidArgument(format!(
            "alpha policy must be `ignore` or `include`, got `{other}`"
        ))),
    }
}

fn connectivity_code(connectivity: Connectivity) -> u8 {
    match connectivity {
        Connectivity::Four => 4,
        Connectivity::Eight => 8,
    }
}

fn alpha_name(alpha: AlphaPolicy) -> &'static str {
    match alpha {
        AlphaPolicy::IgnoreAlpha => "ignore",
        AlphaPolicy::IncludeAlpha => "include",
    }
}

/// A recorded partial failure; the run continues but exits nonzero.
#[derive(Debug, Clone, Serialize)]
pub struct Issue {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    pub message: String,
}

impl Issue {
    fn image(image: &str, message: impl Into<String>) -> Self {
        Issue {
            image: Some(image.to_string()),
            file: None,
            message: message.into(),
        }
    }

    fn file(image: &str, file: &str, message: impl Into<String>) -> Self {
        Issue {
            image: Some(image.to_string()),
            file: Some(file.to_string()),
            message: message.into(),
        }
    }
}

struct InputImage {
    id: String,
    annotations: Vec<(String, PathBuf)>,
    background: Option<PathBuf>,
}

/// PNG files of a directory as (stem, path), sorted by file name.
fn list_pngs(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut files = Vec::new();
    let entries = fs::read_dir(dir).map_err(|e| PipelineError::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| PipelineError::io(dir, e))?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        let is_png = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if !is_png {
            continue;
        }
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        files.push((stem, path));
    }
    files.sort();
    Ok(files)
}

fn discover_input_images(input: &Path) -> Result<Vec<InputImage>> {
    let mut images = Vec::new();
    let entries = fs::read_dir(input).map_err(|e| PipelineError::io(input, e))?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    for dir in dirs {
        let id = dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let pngs = list_pngs(&dir)?;
        let background = pngs
            .iter()
            .find(|(stem, _)| stem == "_background")
            .map(|(_, path)| path.clone());
        let annotations = pngs
            .into_iter()
            .filter(|(stem, _)| !stem.starts_with('_'))
            .collect();
        images.push(InputImage {
            id,
            annotations,
            background,
        });
    }
    if images.is_empty() {
        return Err(PipelineError::InvalidArgument(format!(
            "{}: no image directories found",
            input.display()
        )));
    }
    Ok(images)
}

/// Image ids under the output root that have ingested masks, sorted.
fn discover_ingested_images(output: &Path) -> Result<Vec<String>> {
    let entries = fs::read_dir(output).map_err(|e| PipelineError::io(output, e))?;
    let mut ids: Vec<String> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir() && p.join("masks").is_dir())
        .filter_map(|p| p.file_name().map(|s| s.to_string_lossy().into_owned()))
        .collect();
    ids.sort();
    if ids.is_empty() {
        return Err(PipelineError::InvalidArgument(format!(
            "{}: no ingested images found, run `ingest` first",
            output.display()
        )));
    }
    Ok(ids)
}

fn read_mask_set(output: &Path, image_id: &str) -> Result<AnnotationSet> {
    let masks_dir = output.join(image_id).join("masks");
    let files = list_pngs(&masks_dir)?;
    if files.is_empty() {
        return Err(PipelineError::InvalidArgument(format!(
            "{image_id}: no ingested masks"
        )));
    }
    let first = png::load_mask(&files[0].1)?;
    let mut set = AnnotationSet::new(image_id, first.width(), first.height());
    set.push(files[0].0.clone(), first)
        .map_err(|e| PipelineError::core(image_id.to_string(), e))?;
    for (stem, path) in &files[1..] {
        let mask = png::load_mask(path)?;
        set.push(stem.clone(), mask)
            .map_err(|e| PipelineError::core(image_id.to_string(), e))?;
    }
    Ok(set)
}

fn write_toml(path: &Path, doc: &impl Serialize) -> Result<()> {
    let text = toml::to_string_pretty(doc)?;
    fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}

fn read_filter_report(path: &Path) -> Result<FilterReportDoc> {
    let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    toml::from_str(&text).map_err(|e| PipelineError::ConfigParse {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Normalizes every input image: background removal when a background is
/// supplied, channel-sum binarization, then speckle removal. Writes the
/// per-annotator masks and an ingest manifest per image.
pub fn run_ingest(opts: &PipelineOptions) -> Result<Vec<Issue>> {
    let images = discover_input_images(&opts.input)?;
    fs::create_dir_all(&opts.output).map_err(|e| PipelineError::io(&opts.output, e))?;
    let mut issues = Vec::new();

    for image in images {
        let background = match &image.background {
            Some(path) => match png::load_raw(path) {
                Ok(raw) => Some(raw),
                Err(e) => {
                    issues.push(Issue::image(
                        &image.id,
                        format!("background unreadable, image skipped: {e}"),
                    ));
                    continue;
                }
            },
            None => None,
        };

        let mut decoded = Vec::new();
        let mut skipped = Vec::new();
        for (id, path) in &image.annotations {
            let name = path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            match png::load_raw(path) {
                Ok(raw) => decoded.push((id.clone(), name, raw)),
                Err(e) => {
                    issues.push(Issue::file(&image.id, &name, e.to_string()));
                    skipped.push(SkippedFile {
                        file: name,
                        reason: e.to_string(),
                    });
                }
            }
        }
        if decoded.is_empty() {
            issues.push(Issue::image(&image.id, "no decodable annotations"));
            continue;
        }

        let (width, height) = decoded[0].2.dimensions();
        let group_matches = decoded.iter().all(|(_, _, raw)| raw.dimensions() == (width, height))
            && background
                .as_ref()
                .is_none_or(|bg| bg.dimensions() == (width, height));
        if !group_matches {
            issues.push(Issue::image(
                &image.id,
                "dimension mismatch within image group, image skipped",
            ));
            continue;
        }

        let image_dir = opts.output.join(&image.id);
        let masks_dir = image_dir.join("masks");
        fs::create_dir_all(&masks_dir).map_err(|e| PipelineError::io(&masks_dir, e))?;

        let mut records = Vec::new();
        for (id, source, raw) in decoded {
            let cleared = match &background {
                Some(bg) => subtract_background(&raw, bg, opts.background_tolerance)
                    .map_err(|e| PipelineError::core(image.id.clone(), e))?,
                None => raw,
            };
            let mask = remove_speckles(
                &binarize(&cleared, opts.alpha),
                opts.min_speckle_size,
                opts.connectivity,
            );
            png::save_mask(masks_dir.join(format!("{id}.png")), &mask)?;
            records.push(IngestRecord {
                id,
                source,
                foreground_pixels: mask.count_foreground(),
                empty: mask.is_empty_foreground(),
            });
        }

        let manifest = IngestManifest {
            image_id: image.id.clone(),
            width,
            height,
            background_removed: background.is_some(),
            annotations: records,
            skipped,
        };
        write_toml(&image_dir.join("ingest.toml"), &manifest)?;
        println!(
            "ingest {}: {} annotators normalized, {} skipped",
            image.id,
            manifest.annotations.len(),
            manifest.skipped.len()
        );
    }
    Ok(issues)
}

/// Writes the pairwise Dice matrix, the per-annotator median table, and
/// the long-form score distributions for every ingested image.
pub fn run_agreement(opts: &PipelineOptions) -> Result<Vec<Issue>> {
    let mut issues = Vec::new();
    for image_id in discover_ingested_images(&opts.output)? {
        let set = match read_mask_set(&opts.output, &image_id) {
            Ok(set) => set,
            Err(e) => {
                issues.push(Issue::image(&image_id, e.to_string()));
                continue;
            }
        };
        if set.len() < 2 {
            issues.push(Issue::image(
                &image_id,
                format!("agreement needs at least 2 annotators, found {}", set.len()),
            ));
            continue;
        }
        let matrix = pairwise_matrix(&set).map_err(|e| PipelineError::core(&image_id, e))?;
        let medians = median_agreement(&matrix);
        let image_dir = opts.output.join(&image_id);
        fs::write(image_dir.join("agreement.csv"), matrix_to_csv(&matrix))
            .map_err(|e| PipelineError::io(image_dir.join("agreement.csv"), e))?;
        fs::write(
            image_dir.join("medians.csv"),
            medians_to_csv(&matrix, &medians),
        )
        .map_err(|e| PipelineError::io(image_dir.join("medians.csv"), e))?;
        fs::write(
            image_dir.join("dice_distributions.csv"),
            distributions_to_csv(&matrix),
        )
        .map_err(|e| PipelineError::io(image_dir.join("dice_distributions.csv"), e))?;
        println!("agreement {image_id}: {}x{} matrix", set.len(), set.len());
    }
    Ok(issues)
}

/// Runs one filtering pass per image and writes the filter report plus
/// the included-annotator list consumed by `consensus --use-filtered`.
pub fn run_filter(opts: &PipelineOptions) -> Result<Vec<Issue>> {
    let mut issues = Vec::new();
    for image_id in discover_ingested_images(&opts.output)? {
        let set = match read_mask_set(&opts.output, &image_id) {
            Ok(set) => set,
            Err(e) => {
                issues.push(Issue::image(&image_id, e.to_string()));
                continue;
            }
        };
        if set.len() < 2 {
            issues.push(Issue::image(
                &image_id,
                format!("filtering needs at least 2 annotators, found {}", set.len()),
            ));
            continue;
        }
        let (included, report) = filter_annotators(&set, opts.threshold)
            .map_err(|e| PipelineError::core(&image_id, e))?;
        let image_dir = opts.output.join(&image_id);
        write_toml(
            &image_dir.join("filter_report.toml"),
            &FilterReportDoc::from(&report),
        )?;
        let list: String = included
            .annotators()
            .iter()
            .map(|id| format!("{id}\n"))
            .collect();
        fs::write(image_dir.join("included.txt"), list)
            .map_err(|e| PipelineError::io(image_dir.join("included.txt"), e))?;
        println!(
            "filter {image_id}: {} of {} annotators kept at threshold {}",
            included.len(),
            set.len(),
            opts.threshold
        );
        if report.all_excluded() {
            println!("filter {image_id}: every annotator fell below the threshold");
        }
    }
    Ok(issues)
}

/// The seven map files for one image, in output order.
const MAP_KINDS: [&str; 7] = [
    "mean",
    "union",
    "intersection",
    "disagreement",
    "interior",
    "boundary",
    "full",
];

fn write_maps(dir: &Path, image_id: &str, set: &AnnotationSet) -> Result<Vec<String>> {
    fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    let core_err = |e| PipelineError::core(image_id.to_string(), e);
    let mean = mean_map(set).map_err(core_err)?;
    let union_mask = union(set).map_err(core_err)?;
    let intersection_mask = intersection(set).map_err(core_err)?;
    let disagreement_mask = disagreement(set).map_err(core_err)?;
    let (interior, boundary, full) = if set.len() >= 2 {
        let split = semantic_split(set).map_err(core_err)?;
        (split.interior, split.boundary_band, split.full)
    } else {
        // A single annotator has no variation to decompose: interior and
        // full coincide with the mask and the band is empty.
        (
            intersection_mask.clone(),
            disagreement_mask.clone(),
            union_mask.clone(),
        )
    };

    png::save_probability_map(dir.join(format!("{image_id}_mean.png")), &mean)?;
    for (kind, mask) in [
        ("union", &union_mask),
        ("intersection", &intersection_mask),
        ("disagreement", &disagreement_mask),
        ("interior", &interior),
        ("boundary", &boundary),
        ("full", &full),
    ] {
        png::save_mask(dir.join(format!("{image_id}_{kind}.png")), mask)?;
    }
    Ok(MAP_KINDS
        .iter()
        .map(|kind| format!("{image_id}_{kind}.png"))
        .collect())
}

/// Fuses each image into its consensus maps. With `use_filtered` the set
/// is restricted to exactly the annotators marked included by the filter
/// report; otherwise the full ingested cohort is used.
pub fn run_consensus(
    opts: &PipelineOptions,
    use_filtered: bool,
) -> Result<(Vec<ImageSummary>, Vec<Issue>)> {
    let mut issues = Vec::new();
    let mut summaries = Vec::new();
    let subdir = if use_filtered {
        "consensus_filtered"
    } else {
        "consensus_all"
    };

    for image_id in discover_ingested_images(&opts.output)? {
        let set = match read_mask_set(&opts.output, &image_id) {
            Ok(set) => set,
            Err(e) => {
                issues.push(Issue::image(&image_id, e.to_string()));
                continue;
            }
        };
        let (used, excluded) = if use_filtered {
            let report_path = opts.output.join(&image_id).join("filter_report.toml");
            let report = match read_filter_report(&report_path) {
                Ok(report) => report,
                Err(e) => {
                    issues.push(Issue::image(
                        &image_id,
                        format!("missing or unreadable filter report (run `filter` first): {e}"),
                    ));
                    continue;
                }
            };
            let included: Vec<&FilterRecordDoc> =
                report.annotators.iter().filter(|r| r.included).collect();
            if included.is_empty() {
                issues.push(Issue::image(&image_id, "empty included set, image skipped"));
                continue;
            }
            let mut indices = Vec::new();
            let mut missing = Vec::new();
            for record in &included {
                match set.annotators().iter().position(|a| *a == record.id) {
                    Some(i) => indices.push(i),
                    None => missing.push(record.id.clone()),
                }
            }
            if !missing.is_empty() {
                issues.push(Issue::image(
                    &image_id,
                    format!("filter report names unknown annotators: {}", missing.join(", ")),
                ));
                continue;
            }
            let excluded: Vec<String> = report
                .annotators
                .iter()
                .filter(|r| !r.included)
                .map(|r| r.id.clone())
                .collect();
            (set.subset(&indices), excluded)
        } else {
            (set, Vec::new())
        };

        let dir = opts.output.join(&image_id).join(subdir);
        let files = write_maps(&dir, &image_id, &used)?;
        let outputs = files
            .into_iter()
            .map(|f| format!("{image_id}/{subdir}/{f}"))
            .collect();
        summaries.push(ImageSummary {
            image_id: image_id.clone(),
            annotator_count: used.len(),
            excluded_count: excluded.len(),
            excluded,
            outputs,
        });
        println!("consensus {image_id}: {subdir} maps written");
    }
    Ok((summaries, issues))
}

pub fn write_run_summary(
    opts: &PipelineOptions,
    use_filtered: bool,
    images: Vec<ImageSummary>,
) -> Result<()> {
    let summary = RunSummary {
        pipeline_version: env!("CARGO_PKG_VERSION").to_string(),
        config: ConfigEcho {
            threshold: opts.threshold,
            min_speckle_size: opts.min_speckle_size,
            connectivity: connectivity_code(opts.connectivity),
            alpha: alpha_name(opts.alpha).to_string(),
            background_tolerance: opts.background_tolerance,
            use_filtered,
        },
        images,
    };
    write_toml(&opts.output.join("run_summary.toml"), &summary)
}

/// Full chain: ingest, agreement, filter, then consensus both before and
/// after filtering, summarized at the output root.
pub fn run_report(opts: &PipelineOptions) -> Result<Vec<Issue>> {
    let mut issues = run_ingest(opts)?;
    issues.extend(run_agreement(opts)?);
    issues.extend(run_filter(opts)?);
    let (all_pass, more) = run_consensus(opts, false)?;
    issues.extend(more);
    let (filtered_pass, more) = run_consensus(opts, true)?;
    issues.extend(more);

    // Per image: annotator count of the full cohort, exclusions from the
    // filtered pass, outputs of both passes.
    let mut composed = all_pass;
    for filtered in filtered_pass {
        if let Some(entry) = composed
            .iter_mut()
            .find(|e| e.image_id == filtered.image_id)
        {
            entry.excluded_count = filtered.excluded_count;
            entry.excluded = filtered.excluded;
            entry.outputs.extend(filtered.outputs);
        } else {
            composed.push(filtered);
        }
    }
    write_run_summary(opts, true, composed)?;
    Ok(issues)
}

/// Options for cohort simulation.
#[derive(Debug, Clone)]
pub struct SimulateOptions {
    pub truth: PathBuf,
    pub profiles: PathBuf,
    pub output: PathBuf,
    pub manifest: Option<PathBuf>,
    pub connectivity: Connectivity,
}

/// Simulates an annotator cohort from a binary truth PNG and writes one
/// mask per annotator plus a manifest mapping annotator id to profile.
pub fn run_simulate(opts: &SimulateOptions) -> Result<()> {
    let truth = png::load_binary_truth(&opts.truth)?;
    let entries = crate::profiles::load_profiles(&opts.profiles)?;
    let profiles: Vec<_> = entries.iter().map(ProfileEntry::to_profile).collect();
    let scene = GroundTruthScene::new(truth, opts.connectivity);
    let cohort = simulate_cohort(&scene, &profiles)
        .map_err(|e| PipelineError::core("cohort simulation", e))?;

    fs::create_dir_all(&opts.output).map_err(|e| PipelineError::io(&opts.output, e))?;
    let mut manifest_entries = Vec::new();
    for ((id, mask), entry) in cohort.iter().zip(&entries) {
        let file = format!("{id}.png");
        png::save_mask(opts.output.join(&file), mask)?;
        manifest_entries.push(CohortEntry {
            id: id.to_string(),
            file,
            jitter_radius: entry.jitter_radius,
            p_drop: entry.p_drop,
            p_add: entry.p_add,
            add_size: entry.add_size,
            speckle_count: entry.speckle_count,
            seed: entry.seed,
        });
    }
    let manifest = CohortManifest {
        truth: opts
            .truth
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        connectivity: connectivity_code(opts.connectivity),
        annotators: manifest_entries,
    };
    let manifest_path = opts
        .manifest
        .clone()
        .unwrap_or_else(|| opts.output.join("manifest.toml"));
    write_toml(&manifest_path, &manifest)?;
    println!(
        "simulate: {} annotators written to {}",
        manifest.annotators.len(),
        opts.output.display()
    );
    Ok(())
}
