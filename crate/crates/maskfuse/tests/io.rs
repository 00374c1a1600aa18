//! PNG decode/encode behavior: lossless round trips, exact trivial
//! decodes, and explicit errors for unsupported inputs.

use maskfuse::error::PipelineError;
use maskfuse::png::{load_binary_truth, load_mask, load_raw, save_mask, save_probability_map, save_raw};
use maskfuse_core::{AnnotationSet, Mask, RawImage, mean_map};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn decodes_all_black_rgb() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("black.png");
    image::RgbImage::new(3, 3).save(&path).unwrap();
    let raw = load_raw(&path).unwrap();
    assert_eq!(raw.dimensions(), (3, 3));
    assert_eq!(raw.channels(), 3);
    assert!(raw.samples().iter().all(|&s| s == 0));
}

#[test]
fn decodes_single_rgba_pixel() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pixel.png");
    image::RgbaImage::from_pixel(1, 1, image::Rgba([255, 0, 0, 255]))
        .save(&path)
        .unwrap();
    let raw = load_raw(&path).unwrap();
    assert_eq!(raw.dimensions(), (1, 1));
    assert_eq!(raw.channels(), 4);
    assert_eq!(raw.samples(), &[255, 0, 0, 255]);
}

#[test]
fn raw_round_trip_is_lossless() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    for case in 0..30 {
        let channels = [1u8, 3, 4][case % 3];
        let w = rng.random_range(1..20u32);
        let h = rng.random_range(1..20u32);
        let samples: Vec<u8> = (0..(w * h * channels as u32)).map(|_| rng.random()).collect();
        let raw = RawImage::new(w, h, channels, samples).unwrap();
        let path = dir.path().join(format!("rt_{case}.png"));
        save_raw(&path, &raw).unwrap();
        assert_eq!(load_raw(&path).unwrap(), raw, "case {case}");
    }
}

#[test]
fn mask_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for case in 0..20 {
        let w = rng.random_range(1..40u32);
        let h = rng.random_range(1..40u32);
        let bits: Vec<bool> = (0..w as usize * h as usize).map(|_| rng.random()).collect();
        let mask = Mask::from_fn(w, h, |x, y| bits[(y * w + x) as usize]);
        let path = dir.path().join(format!("mask_{case}.png"));
        save_mask(&path, &mask).unwrap();
        assert_eq!(load_mask(&path).unwrap(), mask, "case {case}");
    }
}

#[test]
fn missing_file_is_reported_with_path() {
    let err = load_raw("/nonexistent/annotation.png").unwrap_err();
    assert!(matches!(err, PipelineError::FileMissing { .. }));
    assert!(err.to_string().contains("/nonexistent/annotation.png"));
}

#[test]
fn garbage_bytes_fail_to_decode() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("garbage.png");
    std::fs::write(&path, b"not a png at all").unwrap();
    let err = load_raw(&path).unwrap_err();
    assert!(matches!(err, PipelineError::Decode { .. }));
    assert!(err.to_string().contains("garbage.png"));
}

#[test]
fn sixteen_bit_depth_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("deep.png");
    let img = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::from_pixel(2, 2, image::Luma([40_000]));
    img.save(&path).unwrap();
    let err = load_raw(&path).unwrap_err();
    assert!(matches!(err, PipelineError::UnsupportedPixelFormat { .. }));
    assert!(err.to_string().contains("deep.png"));
}

#[test]
fn truth_must_be_strict_binary_gray() {
    let dir = tempfile::tempdir().unwrap();
    let gray_path = dir.path().join("gray.png");
    image::GrayImage::from_pixel(2, 2, image::Luma([128])).save(&gray_path).unwrap();
    assert!(matches!(
        load_binary_truth(&gray_path).unwrap_err(),
        PipelineError::NotBinaryTruth { .. }
    ));

    let ok_path = dir.path().join("ok.png");
    let mut mask = Mask::new(3, 3);
    mask.set(1, 1, true);
    save_mask(&ok_path, &mask).unwrap();
    assert_eq!(load_binary_truth(&ok_path).unwrap(), mask);
}

#[test]
fn probability_map_renders_rounded_gray() {
    let dir = tempfile::tempdir().unwrap();
    let mut set = AnnotationSet::new("img", 2, 1);
    let mut a = Mask::new(2, 1);
    a.set(0, 0, true);
    let mut b = Mask::new(2, 1);
    b.set(0, 0, true);
    let mut c = Mask::new(2, 1);
    c.set(0, 0, true);
    c.set(1, 0, true);
    set.push("a", a).unwrap();
    set.push("b", b).unwrap();
    set.push("c", c).unwrap();
    let map = mean_map(&set).unwrap();

    let path = dir.path().join("mean.png");
    save_probability_map(&path, &map).unwrap();
    let raw = load_raw(&path).unwrap();
    // 3/3 -> 255, 1/3 -> round(85.0) = 85
    assert_eq!(raw.samples(), &[255, 85]);
}
