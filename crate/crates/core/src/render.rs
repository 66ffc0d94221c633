//! Chart rendering for reports: confusion heatmaps and run-score box
//! plots as PNG images.
//!
//! Images carry no text. Row/column labels and the plotted numbers belong
//! in a JSON sidecar written next to each image, which keeps this module
//! free of font rasterization and the images trivially reproducible.

use std::path::Path;

use image::{Rgb, RgbImage};

const WHITE: Rgb<u8> = Rgb([255, 255, 255]);
const GRID: Rgb<u8> = Rgb([204, 204, 204]);
/// Endpoints of the heatmap ramp, light to dark blue.
const RAMP_LO: [u8; 3] = [247, 251, 255];
const RAMP_HI: [u8; 3] = [8, 48, 107];
const BOX_FILL: Rgb<u8> = Rgb([176, 196, 222]);
const BOX_EDGE: Rgb<u8> = Rgb([70, 130, 180]);
const MEDIAN: Rgb<u8> = Rgb([178, 34, 34]);

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error("nothing to draw")]
    Empty,
    #[error("row {row} has {got} cells, expected {want}")]
    Ragged { row: usize, got: usize, want: usize },
    #[error("cell value {value} outside [0, 1]")]
    OutOfRange { value: f64 },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("geometry parameter must be positive")]
    ZeroGeometry,
    #[error(transparent)]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn ramp(value: f64) -> Rgb<u8> {
    let mix = |lo: u8, hi: u8| (lo as f64 + value * (hi as f64 - lo as f64)).round() as u8;
    Rgb([
        mix(RAMP_LO[0], RAMP_HI[0]),
        mix(RAMP_LO[1], RAMP_HI[1]),
        mix(RAMP_LO[2], RAMP_HI[2]),
    ])
}

/// Draws a matrix of values in [0, 1] as square cells on a light grid,
/// darker meaning larger; rows keep their input order top to bottom.
/// Sized `(cols, rows) * (cell + 1) + 1` pixels.
pub fn heatmap(rows: &[Vec<f64>], cell: u32) -> Result<RgbImage, RenderError> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(RenderError::Empty);
    }
    if cell == 0 {
        return Err(RenderError::ZeroGeometry);
    }
    let want = rows[0].len();
    for (row, values) in rows.iter().enumerate() {
        if values.len() != want {
            return Err(RenderError::Ragged { row, got: values.len(), want });
        }
        for &value in values {
            if !value.is_finite() {
                return Err(RenderError::NonFinite);
            }
            if !(0.0..=1.0).contains(&value) {
                return Err(RenderError::OutOfRange { value });
            }
        }
    }
    let step = cell + 1;
    let mut img = RgbImage::from_pixel(
        want as u32 * step + 1,
        rows.len() as u32 * step + 1,
        GRID,
    );
    for (r, values) in rows.iter().enumerate() {
        for (c, &value) in values.iter().enumerate() {
            let color = ramp(value);
            let (x0, y0) = (c as u32 * step + 1, r as u32 * step + 1);
            for y in y0..y0 + cell {
                for x in x0..x0 + cell {
                    img.put_pixel(x, y, color);
                }
            }
        }
    }
    Ok(img)
}

/// Five-number summary used by [`boxplot`]. Quartiles interpolate
/// linearly between order statistics (the common "linear" quantile rule).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

pub fn box_stats(values: &[f64]) -> Result<BoxStats, RenderError> {
    if values.is_empty() {
        return Err(RenderError::Empty);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(RenderError::NonFinite);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let quantile = |q: f64| {
        let pos = q * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    };
    Ok(BoxStats {
        min: sorted[0],
        q1: quantile(0.25),
        median: quantile(0.5),
        q3: quantile(0.75),
        max: sorted[sorted.len() - 1],
    })
}

/// Draws one box-and-whisker column per group on a shared value axis:
/// whisker from min to max, box from the first to the third quartile,
/// and a contrasting median line. Larger values sit higher.
pub fn boxplot(groups: &[Vec<f64>], height: u32, box_width: u32) -> Result<RgbImage, RenderError> {
    if groups.is_empty() {
        return Err(RenderError::Empty);
    }
    if height < 2 || box_width < 3 {
        return Err(RenderError::ZeroGeometry);
    }
    let stats: Vec<BoxStats> = groups
        .iter()
        .map(|g| box_stats(g))
        .collect::<Result<_, _>>()?;

    let mut lo = stats.iter().map(|s| s.min).fold(f64::INFINITY, f64::min);
    let mut hi = stats.iter().map(|s| s.max).fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        // A flat distribution still gets a visible mid-height box.
        lo -= 1.0;
        hi += 1.0;
    }
    let pad = (hi - lo) * 0.05;
    let (lo, hi) = (lo - pad, hi + pad);
    let to_y = |value: f64| {
        let unit = (value - lo) / (hi - lo);
        ((1.0 - unit) * (height - 1) as f64).round() as u32
    };

    let gap = box_width / 2 + 1;
    let slot = box_width + 2 * gap;
    let mut img = RgbImage::from_pixel(groups.len() as u32 * slot, height, WHITE);
    for (i, s) in stats.iter().enumerate() {
        let x0 = i as u32 * slot + gap;
        let center = x0 + box_width / 2;
        for y in to_y(s.max)..=to_y(s.min) {
            img.put_pixel(center, y, BOX_EDGE);
        }
        let (top, bottom) = (to_y(s.q3), to_y(s.q1));
        for y in top..=bottom {
            for x in x0..x0 + box_width {
                let edge = y == top || y == bottom || x == x0 || x == x0 + box_width - 1;
                img.put_pixel(x, y, if edge { BOX_EDGE } else { BOX_FILL });
            }
        }
        let med = to_y(s.median);
        for x in x0..x0 + box_width {
            img.put_pixel(x, med, MEDIAN);
        }
    }
    Ok(img)
}

/// Encodes the image as a PNG at `path`, creating parent directories.
pub fn write_png(path: &Path, img: &RgbImage) -> Result<(), RenderError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    img.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}
