//! Saliency and fixation maps, and the map-level arithmetic the rest of the
//! crate is built on.
//!
//! Intensities live in `[0, 1]`. 8-bit files map to `v / 255`.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Result<Self> {
                let id = id.into();
                if id.is_empty() {
                    return Err(Error::Config(concat!(stringify!($name), " must be non-empty").into()));
                }
                Ok(Self(id))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            /// Panics on an empty string; use [`Self::new`] for untrusted input.
            fn from(s: &str) -> Self {
                Self::new(s).expect("non-empty id")
            }
        }
    };
}

string_id!(
    /// Key of a stimulus image.
    ImageId
);
string_id!(
    /// Key of an eye-tracking subject.
    SubjectId
);

/// Dense grayscale grid, row-major, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl SaliencyMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidMap(format!(
                "zero dimension {width}x{height}"
            )));
        }
        if values.len() != width * height {
            return Err(Error::InvalidMap(format!(
                "{} values for a {width}x{height} map",
                values.len()
            )));
        }
        if let Some(v) = values
            .iter()
            .find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0)
        {
            return Err(Error::InvalidMap(format!("value {v} outside [0, 1]")));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    /// Builds a map from arbitrary reals by clamping into `[0, 1]`.
    /// Non-finite inputs are rejected.
    pub fn from_clamped(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMap("non-finite value".into()));
        }
        Self::new(
            width,
            height,
            values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        )
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                values.push(f(r, c));
            }
        }
        Self::from_clamped(width, height, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    /// Row-major copy of the pixel values.
    pub fn flatten(&self) -> Vec<f64> {
        self.values.clone()
    }

    /// Inverse of [`flatten`](Self::flatten).
    pub fn from_flat(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(width, height, values)
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub(crate) fn check_same_dims(&self, other: &SaliencyMap) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::dims(self.dims(), other.dims()));
        }
        Ok(())
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn is_constant(&self) -> bool {
        let (lo, hi) = self.min_max();
        lo == hi
    }

    /// Applies `f` pixel-wise and clamps the result into `[0, 1]`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_clamped(
            self.width,
            self.height,
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Reads an 8-bit (or 16-bit) grayscale PNG. Three-channel images are
    /// accepted only when all bands are equal.
    pub fn load_png(path: &Path) -> Result<Self> {
        let img = image::open(path)?;
        let (w, h) = (img.width() as usize, img.height() as usize);
        let bad = |msg: &str| Error::Dataset {
            path: path.to_path_buf(),
            msg: msg.to_string(),
        };
        let values: Vec<f64> = match img {
            image::DynamicImage::ImageLuma8(buf) => buf
                .into_raw()
                .into_iter()
                .map(|v| f64::from(v) / 255.0)
                .collect(),
            image::DynamicImage::ImageLumaA8(buf) => buf
                .into_raw()
                .chunks_exact(2)
                .map(|p| f64::from(p[0]) / 255.0)
                .collect(),
            image::DynamicImage::ImageLuma16(buf) => buf
                .into_raw()
                .into_iter()
                .map(|v| f64::from(v) / 65535.0)
                .collect(),
            image::DynamicImage::ImageRgb8(buf) => collapse_bands(&buf.into_raw(), 3)
                .ok_or_else(|| bad("color image with unequal bands"))?,
            image::DynamicImage::ImageRgba8(buf) => collapse_bands(&buf.into_raw(), 4)
                .ok_or_else(|| bad("color image with unequal bands"))?,
            _ => return Err(bad("unsupported pixel format")),
        };
        Self::new(w, h, values).map_err(|e| bad(&e.to_string()))
    }

    /// Writes the map as an 8-bit grayscale PNG.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let bytes: Vec<u8> = self.values.iter().map(|&v| to_u8(v)).collect();
        image::save_buffer(
            path,
            &bytes,
            self.width as u32,
            self.height as u32,
            image::ExtendedColorType::L8,
        )?;
        Ok(())
    }
}

pub(crate) fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn collapse_bands(raw: &[u8], channels: usize) -> Option<Vec<f64>> {
    raw.chunks_exact(channels)
        .map(|p| (p[0] == p[1] && p[1] == p[2]).then(|| f64::from(p[0]) / 255.0))
        .collect()
}

/// Set of fixated pixels, stored as `(row, col)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixationMap {
    width: usize,
    height: usize,
    fixated: BTreeSet<(usize, usize)>,
}

impl FixationMap {
    pub fn new(
        width: usize,
        height: usize,
        points: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidMap(format!(
                "zero dimension {width}x{height}"
            )));
        }
        let fixated: BTreeSet<_> = points.into_iter().collect();
        if let Some(&(r, c)) = fixated.iter().find(|&&(r, c)| r >= height || c >= width) {
            return Err(Error::InvalidMap(format!(
                "fixation ({r}, {c}) outside {width}x{height}"
            )));
        }
        Ok(Self {
            width,
            height,
            fixated,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.fixated.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixated.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.fixated.iter().copied()
    }

    /// Row-major indices of fixated pixels, ascending.
    pub fn indices(&self) -> Vec<usize> {
        self.fixated
            .iter()
            .map(|&(r, c)| r * self.width + c)
            .collect()
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.fixated.contains(&(row, col))
    }

    /// Fixations at every pixel whose value is strictly above `threshold`.
    pub fn from_mask(mask: &SaliencyMap, threshold: f64) -> Result<Self> {
        let w = mask.width();
        let points = mask
            .values()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > threshold)
            .map(|(i, _)| (i / w, i % w));
        Self::new(w, mask.height(), points)
    }

    /// Fixations taken as the pixels at or above the map's given percentile
    /// (and strictly positive). Falls back to the arg-max pixel when that
    /// leaves nothing.
    pub fn from_percentile(map: &SaliencyMap, percentile: f64) -> Result<Self> {
        let mut sorted = map.values().to_vec();
        sorted.sort_by(f64::total_cmp);
        let rank = ((percentile / 100.0) * sorted.len() as f64).ceil() as usize;
        let cut = sorted[rank.clamp(1, sorted.len()) - 1];
        let w = map.width();
        let mut points: Vec<(usize, usize)> = map
            .values()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v >= cut && v > 0.0)
            .map(|(i, _)| (i / w, i % w))
            .collect();
        if points.is_empty() {
            let (arg, _) =
                map.values()
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
                        if v > best.1 {
                            (i, v)
                        } else {
                            best
                        }
                    });
            points.push((arg / w, arg % w));
        }
        Self::new(w, map.height(), points)
    }

    /// Reads a binary mask PNG; any non-zero pixel is a fixation.
    pub fn load_png(path: &Path) -> Result<Self> {
        let mask = SaliencyMap::load_png(path)?;
        Self::from_mask(&mask, 0.0)
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let mut bytes = vec![0u8; self.width * self.height];
        for &(r, c) in &self.fixated {
            bytes[r * self.width + c] = 255;
        }
        image::save_buffer(
            path,
            &bytes,
            self.width as u32,
            self.height as u32,
            image::ExtendedColorType::L8,
        )?;
        Ok(())
    }
}

/// Superposes an isotropic Gaussian at each fixation and rescales so the
/// peak is 1. The kernel is truncated at `4 * sigma`.
pub fn blur_fixations(fixations: &FixationMap, sigma: f64) -> Result<SaliencyMap> {
    if fixations.is_empty() {
        return Err(Error::NoFixations);
    }
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::Config(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let (w, h) = fixations.dims();
    let radius = (4.0 * sigma).ceil() as isize;
    let cutoff2 = (4.0 * sigma) * (4.0 * sigma);
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut acc = vec![0.0f64; w * h];
    for (fr, fc) in fixations.points() {
        let (fr, fc) = (fr as isize, fc as isize);
        for r in (fr - radius).max(0)..=(fr + radius).min(h as isize - 1) {
            for c in (fc - radius).max(0)..=(fc + radius).min(w as isize - 1) {
                let d2 = ((r - fr).pow(2) + (c - fc).pow(2)) as f64;
                if d2 <= cutoff2 {
                    acc[r as usize * w + c as usize] += (-d2 * inv).exp();
                }
            }
        }
    }
    let peak = acc.iter().cloned().fold(0.0, f64::max);
    SaliencyMap::from_clamped(w, h, acc.into_iter().map(|v| v / peak).collect())
}

/// Pixel-wise arithmetic mean.
pub fn average_maps(maps: &[&SaliencyMap]) -> Result<SaliencyMap> {
    let first = maps.first().ok_or(Error::Empty("no maps to average"))?;
    let mut acc = vec![0.0f64; first.len()];
    for m in maps {
        first.check_same_dims(m)?;
        for (a, v) in acc.iter_mut().zip(m.values()) {
            *a += v;
        }
    }
    let n = maps.len() as f64;
    SaliencyMap::from_clamped(
        first.width,
        first.height,
        acc.into_iter().map(|v| v / n).collect(),
    )
}

/// Sum of absolute pixel differences.
pub fn l1_distance(a: &SaliencyMap, b: &SaliencyMap) -> Result<f64> {
    a.check_same_dims(b)?;
    Ok(a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .sum())
}

/// Bilinear resampling with pixel-center alignment; edges are clamped.
pub fn resize_map(m: &SaliencyMap, width: usize, height: usize) -> Result<SaliencyMap> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidMap(format!(
            "zero target dimension {width}x{height}"
        )));
    }
    if m.dims() == (width, height) {
        return Ok(m.clone());
    }
    let sx = m.width as f64 / width as f64;
    let sy = m.height as f64 / height as f64;
    let axis = |dst: usize, scale: f64, n: usize| -> (usize, usize, f64) {
        let src = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (n - 1) as f64);
        let lo = src.floor() as usize;
        let hi = (lo + 1).min(n - 1);
        (lo, hi, src - lo as f64)
    };
    let cols: Vec<_> = (0..width).map(|c| axis(c, sx, m.width)).collect();
    let mut out = Vec::with_capacity(width * height);
    for r in 0..height {
        let (r0, r1, fy) = axis(r, sy, m.height);
        for &(c0, c1, fx) in &cols {
            let top = m.get(r0, c0) * (1.0 - fx) + m.get(r0, c1) * fx;
            let bottom = m.get(r1, c0) * (1.0 - fx) + m.get(r1, c1) * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    SaliencyMap::from_clamped(width, height, out)
}
