//! PNG decode and encode for raw annotation images, binary masks, and
//! probability maps. Only 8-bit gray, RGB, and RGBA inputs are accepted;
//! other depths are an explicit error rather than a silent conversion.

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageFormat, ImageReader, Luma, RgbImage, RgbaImage};
use maskfuse_core::{Mask, ProbabilityMap, RawImage};

use crate::error::{PipelineError, Result};

/// Decodes a PNG into a [`RawImage`], losslessly.
pub fn load_raw(path: impl AsRef<Path>) -> Result<RawImage> {
    let path = path.as_ref();
    let reader = ImageReader::open(path).map_err(|e| PipelineError::io(path, e))?;
    let decoded = reader.decode().map_err(|e| PipelineError::Decode {
        path: path.to_path_buf(),
        source: e,
    })?;
    let width = decoded.width();
    let height = decoded.height();
    let (channels, samples) = match decoded {
        DynamicImage::ImageLuma8(img) => (1, img.into_raw()),
        DynamicImage::ImageRgb8(img) => (3, img.into_raw()),
        DynamicImage::ImageRgba8(img) => (4, img.into_raw()),
        other => {
            return Err(PipelineError::UnsupportedPixelFormat {
                path: path.to_path_buf(),
                detail: format!("{:?}", other.color()),
            });
        }
    };
    RawImage::new(width, height, channels, samples).map_err(|e| {
        PipelineError::core(format!("invalid image data in {}", path.display()), e)
    })
}

/// Encodes a [`RawImage`] as PNG with its original channel layout.
pub fn save_raw(path: impl AsRef<Path>, raw: &RawImage) -> Result<()> {
    let path = path.as_ref();
    let encode_err = |e| PipelineError::Encode {
        path: path.to_path_buf(),
        source: e,
    };
    let (w, h) = raw.dimensions();
    let samples = raw.samples().to_vec();
    match raw.channels() {
        1 => GrayImage::from_raw(w, h, samples)
            .expect("sample count validated by RawImage")
            .save_with_format(path, ImageFormat::Png)
            .map_err(encode_err),
        3 => RgbImage::from_raw(w, h, samples)
            .expect("sample count validated by RawImage")
            .save_with_format(path, ImageFormat::Png)
            .map_err(encode_err),
        _ => RgbaImage::from_raw(w, h, samples)
            .expect("sample count validated by RawImage")
            .save_with_format(path, ImageFormat::Png)
            .map_err(encode_err),
    }
}

/// Loads a mask from any supported PNG by the channel-sum rule: a pixel
/// is foreground iff its color channels sum above zero. Masks written by
/// [`save_mask`] round-trip bit-exactly.
pub fn load_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let raw = load_raw(path)?;
    Ok(maskfuse_core::binarize(
        &raw,
        maskfuse_core::AlphaPolicy::IgnoreAlpha,
    ))
}

/// Writes a mask as 8-bit gray PNG, foreground 255 and background 0.
pub fn save_mask(path: impl AsRef<Path>, mask: &Mask) -> Result<()> {
    let path = path.as_ref();
    let img = GrayImage::from_fn(mask.width(), mask.height(), |x, y| {
        Luma([if mask.get(x, y) { 255 } else { 0 }])
    });
    img.save_with_format(path, ImageFormat::Png)
        .map_err(|e| PipelineError::Encode {
            path: path.to_path_buf(),
            source: e,
        })
}

/// Loads a ground-truth mask, requiring strict binary gray input: an
/// 8-bit single-channel PNG whose pixels are all 0 or 255.
pub fn load_binary_truth(path: impl AsRef<Path>) -> Result<Mask> {
    let path = path.as_ref();
    let raw = load_raw(path)?;
    if raw.channels() != 1 || raw.samples().iter().any(|&s| s != 0 && s != 255) {
        return Err(PipelineError::NotBinaryTruth {
            path: path.to_path_buf(),
        });
    }
    Ok(Mask::from_fn(raw.width(), raw.height(), |x, y| {
        raw.sample(x, y, 0) == 255
    }))
}

/// Writes a probability map as 8-bit gray PNG, linearly scaled so that
/// k of n votes renders as round(k·255/n). The rounding is integer
/// arithmetic, so output bytes are exact.
pub fn save_probability_map(path: impl AsRef<Path>, map: &ProbabilityMap) -> Result<()> {
    let path = path.as_ref();
    let n = map.annotator_count() as u64;
    let img = GrayImage::from_fn(map.width(), map.height(), |x, y| {
        let k = map.count(x, y) as u64;
        Luma([((2 * 255 * k + n) / (2 * n)) as u8])
    });
    img.save_with_format(path, ImageFormat::Png)
        .map_err(|e| PipelineError::Encode {
            path: path.to_path_buf(),
            source: e,
        })
}
