//! Per-crop intensity normalization: subtract the minimum, then divide by
//! the mean of the shifted values.

use crate::error::{Error, Result};
use crate::tensor::Image;

/// Statistics recorded by [`normalize`]; enough to invert it exactly.
///
/// `mean` is measured after the minimum has been subtracted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormStats {
    pub min: f64,
    pub mean: f64,
}

impl NormStats {
    pub const IDENTITY: NormStats = NormStats { min: 0.0, mean: 1.0 };
}

/// Returns `(img − min) / mean(img − min)` and the stats used.
pub fn normalize(img: &Image) -> Result<(Image, NormStats)> {
    let min = img.min();
    let n = img.len() as f64;
    let mean = img.data().iter().map(|&v| v - min).sum::<f64>() / n;
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(Error::Degenerate(format!(
            "image of {} pixels has zero spread (constant value {min})",
            img.len()
        )));
    }
    let out = img.map(|v| (v - min) / mean);
    Ok((out, NormStats { min, mean }))
}

/// Like [`normalize`] but substitutes an all-zeros image with stats
/// `{min, mean: 1}` for constant input instead of failing.
pub fn normalize_or_zeros(img: &Image) -> (Image, NormStats) {
    match normalize(img) {
        Ok(v) => v,
        Err(_) => (
            Image::zeros(img.height(), img.width()),
            NormStats {
                min: img.min(),
                mean: 1.0,
            },
        ),
    }
}

/// Inverse of [`normalize`]: `img · mean + min`.
pub fn denormalize(img: &Image, stats: NormStats) -> Result<Image> {
    if !stats.min.is_finite() || !stats.mean.is_finite() {
        return Err(Error::Validation(format!(
            "non-finite normalization stats {stats:?}"
        )));
    }
    Ok(img.map(|v| v * stats.mean + stats.min))
}
