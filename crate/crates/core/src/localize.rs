//! Patch partitions to pixel maps and binary forgery masks.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::patching::{ImageBuffer, PatchSet};
use crate::spectral::Partition;

/// Per-pixel coverage maps, row-major with the analyzed image's dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelMaps {
    width: usize,
    height: usize,
    /// Patches of the selected community covering each pixel.
    p: Vec<u32>,
    /// All patches covering each pixel.
    t: Vec<u32>,
    p_norm: Vec<f64>,
}

impl PixelMaps {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn p(&self) -> &[u32] {
        &self.p
    }

    pub fn t(&self) -> &[u32] {
        &self.t
    }

    pub fn p_norm(&self) -> &[f64] {
        &self.p_norm
    }

    /// `P_norm` scaled to 0..=255, rounded half-up.
    pub fn p_norm_image(&self) -> ImageBuffer {
        let data = self.p_norm.iter().map(|&v| to_gray(v)).collect();
        ImageBuffer::new(self.width, self.height, data).expect("dimensions match")
    }
}

fn to_gray(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    values: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, values: Vec<bool>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::invalid(format!(
                "mask of {} values for {width}x{height}",
                values.len()
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let values = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self {
            width,
            height,
            values,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.values[y * self.width + x]
    }

    pub fn count_ones(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }

    pub fn complement(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|v| !v).collect(),
        }
    }

    /// Intersection over union; 1 when both masks are empty.
    pub fn iou(&self, other: &BinaryMask) -> f64 {
        let (mut inter, mut union) = (0usize, 0usize);
        for (&a, &b) in self.values.iter().zip(&other.values) {
            inter += (a && b) as usize;
            union += (a || b) as usize;
        }
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// 255 for set pixels, 0 otherwise.
    pub fn to_image(&self) -> ImageBuffer {
        let data = self
            .values
            .iter()
            .map(|&v| if v { 255 } else { 0 })
            .collect();
        ImageBuffer::new(self.width, self.height, data).expect("dimensions match")
    }

    /// Any nonzero pixel counts as set.
    pub fn from_image(img: &ImageBuffer) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            values: img.data().iter().map(|&v| v != 0).collect(),
        }
    }
}

pub fn build_pixel_maps(patches: &PatchSet, part: &Partition, alpha: usize) -> Result<PixelMaps> {
    if part.len() != patches.len() {
        return Err(Error::invalid(format!(
            "{} labels for {} patches",
            part.len(),
            patches.len()
        )));
    }
    if alpha == 0 || alpha > part.k() {
        return Err(Error::invalid(format!(
            "alpha = {alpha} outside 1..={}",
            part.k()
        )));
    }
    let (w, h) = (patches.image_width(), patches.image_height());
    let mut p = vec![0u32; w * h];
    let mut t = vec![0u32; w * h];
    for (g, &label) in patches.geometries().iter().zip(part.labels()) {
        let hit = (label == alpha) as u32;
        for y in g.y0..g.y0 + g.size {
            let row = y * w;
            for x in g.x0..g.x0 + g.size {
                t[row + x] += 1;
                p[row + x] += hit;
            }
        }
    }
    let p_norm = p
        .iter()
        .zip(&t)
        .map(|(&p, &t)| if t == 0 { 0.0 } else { p as f64 / t as f64 })
        .collect();
    Ok(PixelMaps {
        width: w,
        height: h,
        p,
        t,
        p_norm,
    })
}

/// The smaller of two communities (label 2 on a tie).
pub fn select_alpha(part: &Partition) -> Result<usize> {
    if part.k() != 2 {
        return Err(Error::invalid(format!(
            "automatic alpha needs exactly 2 communities, got {}",
            part.k()
        )));
    }
    let sizes = part.sizes();
    Ok(if sizes[0] < sizes[1] { 1 } else { 2 })
}

/// Default Gaussian width for a smoothing window: ±3 sigma fits inside it.
pub fn default_sigma(window: usize) -> f64 {
    window as f64 / 6.0
}

fn odd_window(window: usize) -> usize {
    if window.is_multiple_of(2) {
        window + 1
    } else {
        window
    }
}

fn gaussian_kernel(window: usize, sigma: f64) -> Vec<f64> {
    let half = (window / 2) as isize;
    (-half..=half)
        .map(|x| (-((x * x) as f64) / (2.0 * sigma * sigma)).exp())
        .collect()
}

/// One 1-D pass along rows (`stride == 1`) or columns (`stride == width`).
/// Kernel mass falling outside the image is dropped and the rest renormalized.
fn convolve_pass(
    src: &[f64],
    len: usize,
    lines: usize,
    along_rows: bool,
    kernel: &[f64],
) -> Vec<f64> {
    let half = kernel.len() / 2;
    let (lo, hi) = src
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let mut out = vec![0.0; src.len()];
    let index = |line: usize, pos: usize| {
        if along_rows {
            line * len + pos
        } else {
            pos * lines + line
        }
    };
    for line in 0..lines {
        for pos in 0..len {
            let start = pos.saturating_sub(half);
            let end = (pos + half).min(len - 1);
            let (mut acc, mut mass) = (0.0, 0.0);
            for q in start..=end {
                let wk = kernel[q + half - pos];
                acc += wk * src[index(line, q)];
                mass += wk;
            }
            // renormalization can overshoot by an ulp; keep the input range
            out[index(line, pos)] = (acc / mass).clamp(lo, hi);
        }
    }
    out
}

/// Separable Gaussian blur of a row-major map. Even windows grow by one.
pub fn gaussian_smooth(
    values: &[f64],
    width: usize,
    height: usize,
    window: usize,
    sigma: f64,
) -> Result<Vec<f64>> {
    if values.len() != width * height {
        return Err(Error::invalid("map size does not match dimensions"));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!("sigma = {sigma} must be positive")));
    }
    if window == 0 || window > width.min(height) {
        return Err(Error::invalid(format!(
            "smoothing window {window} does not fit a {width}x{height} image"
        )));
    }
    let kernel = gaussian_kernel(odd_window(window), sigma);
    let rows = convolve_pass(values, width, height, true, &kernel);
    Ok(convolve_pass(&rows, height, width, false, &kernel))
}

pub fn smooth_and_threshold(
    maps: &PixelMaps,
    window: usize,
    sigma: f64,
    thresh: f64,
) -> Result<BinaryMask> {
    let smoothed = gaussian_smooth(&maps.p_norm, maps.width, maps.height, window, sigma)?;
    Ok(threshold_map(&smoothed, maps.width, maps.height, thresh))
}

pub fn threshold_map(values: &[f64], width: usize, height: usize, thresh: f64) -> BinaryMask {
    BinaryMask {
        width,
        height,
        values: values.iter().map(|&v| v >= thresh).collect(),
    }
}

/// Row-major map to 8-bit gray, ×255 rounded half-up.
pub fn map_to_image(values: &[f64], width: usize, height: usize) -> Result<ImageBuffer> {
    ImageBuffer::new(width, height, values.iter().map(|&v| to_gray(v)).collect())
}
