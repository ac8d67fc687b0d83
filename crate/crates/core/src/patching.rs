//! Regular overlapping patch grids over grayscale images.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Row-major 8-bit grayscale image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be at least 1x1"));
        }
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "image data has {} values, expected {}x{} = {}",
                data.len(),
                width,
                height,
                width * height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }
}

/// Square patch anchored at its top-left pixel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PatchGeometry {
    pub x0: usize,
    pub y0: usize,
    pub size: usize,
}

impl PatchGeometry {
    pub fn new(x0: usize, y0: usize, size: usize) -> Self {
        Self { x0, y0, size }
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.size >= 1 && self.x0 + self.size <= width && self.y0 + self.size <= height
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x0 + self.size && y >= self.y0 && y < self.y0 + self.size
    }
}

/// Square block of pixels copied out of an image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatchPixels {
    pub size: usize,
    pub data: Vec<u8>,
}

/// The sampled patches of one image. Index `i` in [`PatchSet::geometries`]
/// is graph vertex `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchSet {
    geometries: Vec<PatchGeometry>,
    image_width: usize,
    image_height: usize,
    patch_size: usize,
    overlap: f64,
    stride: usize,
}

impl PatchSet {
    /// Builds a patch set from explicit geometries; used for irregular layouts in tests
    /// and for reloading exported sets.
    pub fn from_geometries(
        geometries: Vec<PatchGeometry>,
        image_width: usize,
        image_height: usize,
    ) -> Result<Self> {
        for (i, g) in geometries.iter().enumerate() {
            if !g.fits(image_width, image_height) {
                return Err(Error::invalid(format!(
                    "patch {i} at ({}, {}) size {} does not fit a {image_width}x{image_height} image",
                    g.x0, g.y0, g.size
                )));
            }
        }
        let patch_size = geometries.first().map_or(0, |g| g.size);
        Ok(Self {
            geometries,
            image_width,
            image_height,
            patch_size,
            overlap: 0.0,
            stride: patch_size.max(1),
        })
    }

    pub fn geometries(&self) -> &[PatchGeometry] {
        &self.geometries
    }

    pub fn len(&self) -> usize {
        self.geometries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.geometries.is_empty()
    }

    pub fn image_width(&self) -> usize {
        self.image_width
    }

    pub fn image_height(&self) -> usize {
        self.image_height
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    pub fn overlap(&self) -> f64 {
        self.overlap
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    /// One line per patch: `index<TAB>x0<TAB>y0<TAB>size`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (i, g) in self.geometries.iter().enumerate() {
            let _ = writeln!(out, "{i}\t{}\t{}\t{}", g.x0, g.y0, g.size);
        }
        out
    }
}

/// Grid stride for a patch size and fractional overlap, never below 1.
pub fn stride_for(patch_size: usize, overlap: f64) -> usize {
    ((patch_size as f64 * (1.0 - overlap)).round() as usize).max(1)
}

/// Samples a row-major grid of square patches starting at multiples of the stride.
/// Pixels past the last full patch on the right and bottom edges stay uncovered.
pub fn sample_patches(img: &ImageBuffer, patch_size: usize, overlap: f64) -> Result<PatchSet> {
    if patch_size == 0 {
        return Err(Error::invalid("patch size must be at least 1"));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::invalid(format!("overlap {overlap} outside [0, 1)")));
    }
    if patch_size > img.width().min(img.height()) {
        return Err(Error::invalid(format!(
            "patch size {patch_size} larger than {}x{} image",
            img.width(),
            img.height()
        )));
    }
    let stride = stride_for(patch_size, overlap);
    let xs: Vec<usize> = (0..=img.width() - patch_size).step_by(stride).collect();
    let ys: Vec<usize> = (0..=img.height() - patch_size).step_by(stride).collect();
    let geometries = ys
        .iter()
        .flat_map(|&y0| {
            xs.iter()
                .map(move |&x0| PatchGeometry::new(x0, y0, patch_size))
        })
        .collect();
    Ok(PatchSet {
        geometries,
        image_width: img.width(),
        image_height: img.height(),
        patch_size,
        overlap,
        stride,
    })
}

pub fn extract_pixels(img: &ImageBuffer, g: &PatchGeometry) -> Result<PatchPixels> {
    if !g.fits(img.width(), img.height()) {
        return Err(Error::invalid(format!(
            "patch at ({}, {}) size {} out of bounds for {}x{} image",
            g.x0,
            g.y0,
            g.size,
            img.width(),
            img.height()
        )));
    }
    let mut data = Vec::with_capacity(g.size * g.size);
    for y in g.y0..g.y0 + g.size {
        let row = y * img.width();
        data.extend_from_slice(&img.data()[row + g.x0..row + g.x0 + g.size]);
    }
    Ok(PatchPixels { size: g.size, data })
}
