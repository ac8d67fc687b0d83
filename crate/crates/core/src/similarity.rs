//! Pairwise forensic similarity between patches and the Forensic Similarity
//! Matrix file format.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::patching::{extract_pixels, ImageBuffer, PatchPixels, PatchSet};

const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// Scores whether two equal-size patches share forensic traces.
///
/// Scoring is split in two stages so that per-patch work (feature
/// extraction) runs once per patch and only the cheap comparison runs for
/// each of the `n(n-1)/2` pairs. Implementations must be symmetric in
/// `compare` and give `1.0` for a patch compared with itself.
pub trait SimilarityProvider: Sync {
    type Features: Send + Sync;

    fn features(&self, patch: &PatchPixels) -> Result<Self::Features>;

    fn compare(&self, a: &Self::Features, b: &Self::Features) -> Result<f64>;

    fn score(&self, a: &PatchPixels, b: &PatchPixels) -> Result<f64> {
        if a.size != b.size {
            return Err(Error::invalid(format!(
                "patch sizes differ: {} vs {}",
                a.size, b.size
            )));
        }
        self.compare(&self.features(a)?, &self.features(b)?)
    }
}

/// Summary statistics of a patch's high-pass residual.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualFeatures {
    pub mean: f64,
    pub std_dev: f64,
    pub mean_abs: f64,
    pub lag1_autocorr: f64,
}

impl ResidualFeatures {
    fn as_array(&self) -> [f64; 4] {
        [self.mean, self.std_dev, self.mean_abs, self.lag1_autocorr]
    }
}

/// Residual filter: 4-neighbour Laplacian, applied to interior pixels only.
pub fn residual(patch: &PatchPixels) -> Vec<f64> {
    let s = patch.size;
    if s < 3 {
        return Vec::new();
    }
    let px = |x: usize, y: usize| f64::from(patch.data[y * s + x]);
    let mut out = Vec::with_capacity((s - 2) * (s - 2));
    for y in 1..s - 1 {
        for x in 1..s - 1 {
            out.push(4.0 * px(x, y) - px(x, y - 1) - px(x, y + 1) - px(x - 1, y) - px(x + 1, y));
        }
    }
    out
}

pub fn residual_features(patch: &PatchPixels) -> ResidualFeatures {
    let r = residual(patch);
    if r.is_empty() {
        return ResidualFeatures {
            mean: 0.0,
            std_dev: 0.0,
            mean_abs: 0.0,
            lag1_autocorr: 0.0,
        };
    }
    let count = r.len() as f64;
    let mean = r.iter().sum::<f64>() / count;
    let var_sum: f64 = r.iter().map(|v| (v - mean) * (v - mean)).sum();
    let mean_abs = r.iter().map(|v| v.abs()).sum::<f64>() / count;
    let w = patch.size - 2;
    let mut lag_sum = 0.0;
    for row in r.chunks_exact(w) {
        for pair in row.windows(2) {
            lag_sum += (pair[0] - mean) * (pair[1] - mean);
        }
    }
    let lag1_autocorr = if var_sum > 0.0 {
        lag_sum / var_sum
    } else {
        0.0
    };
    ResidualFeatures {
        mean,
        std_dev: (var_sum / count).sqrt(),
        mean_abs,
        lag1_autocorr,
    }
}

/// Built-in deterministic stand-in for a learned similarity network:
/// `exp(-gamma * |f_a - f_b|^2)` over [`ResidualFeatures`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualProvider {
    pub gamma: f64,
}

impl Default for ResidualProvider {
    fn default() -> Self {
        Self { gamma: 1.0 }
    }
}

impl ResidualProvider {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        Ok(Self { gamma })
    }
}

impl SimilarityProvider for ResidualProvider {
    type Features = (usize, ResidualFeatures);

    fn features(&self, patch: &PatchPixels) -> Result<Self::Features> {
        Ok((patch.size, residual_features(patch)))
    }

    fn compare(&self, a: &Self::Features, b: &Self::Features) -> Result<f64> {
        if a.0 != b.0 {
            return Err(Error::invalid(format!(
                "patch sizes differ: {} vs {}",
                a.0, b.0
            )));
        }
        let (fa, fb) = (a.1.as_array(), b.1.as_array());
        let dist2: f64 = fa.iter().zip(&fb).map(|(x, y)| (x - y) * (x - y)).sum();
        Ok((-self.gamma * dist2).exp())
    }
}

/// `residual_similarity(a, b, gamma)` with the built-in provider.
pub fn residual_similarity(a: &PatchPixels, b: &PatchPixels, gamma: f64) -> Result<f64> {
    ResidualProvider::new(gamma)?.score(a, b)
}

/// Dense symmetric similarity scores with a zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    /// Validates a row-major `n x n` matrix. The diagonal is forced to zero.
    pub fn new(n: usize, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::format(format!(
                "dimension mismatch: {} values for n = {n}",
                values.len()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let v = values[i * n + j];
                if i != j && !(0.0..=1.0).contains(&v) {
                    return Err(Error::format(format!(
                        "value {v} at row {i}, col {j} outside [0, 1]"
                    )));
                }
            }
        }
        for i in 0..n {
            values[i * n + i] = 0.0;
            for j in i + 1..n {
                let (a, b) = (values[i * n + j], values[j * n + i]);
                if (a - b).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::format(format!(
                        "asymmetric at row {i}, col {j}: {a} vs {b}"
                    )));
                }
                let sym = if a == b { a } else { 0.5 * (a + b) };
                values[i * n + j] = sym;
                values[j * n + i] = sym;
            }
        }
        Ok(Self { n, values })
    }

    /// Builds a matrix from the upper-triangle entries of a scoring function.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Self::new(n, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Upper-triangle scores in row-major order.
    pub fn pair_scores(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).flat_map(move |i| (i + 1..self.n).map(move |j| self.get(i, j)))
    }

    pub fn to_fsm_string(&self) -> String {
        let mut out = format!("FSM {}\n", self.n);
        for row in self.values.chunks(self.n.max(1)).take(self.n) {
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_fsm(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::format("empty FSM file"))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("FSM") {
            return Err(Error::format("missing \"FSM <n>\" header"));
        }
        let n: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format("bad matrix size in FSM header"))?;
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| Error::format(format!("dimension mismatch: missing row {i}")))?;
            let before = values.len();
            for (j, tok) in line.split_whitespace().enumerate() {
                let v: f64 = tok.parse().map_err(|_| {
                    Error::format(format!("unparsable value {tok:?} at row {i}, col {j}"))
                })?;
                if !v.is_finite() {
                    return Err(Error::format(format!(
                        "value {v} at row {i}, col {j} outside [0, 1]"
                    )));
                }
                values.push(v);
            }
            if values.len() - before != n {
                return Err(Error::format(format!(
                    "dimension mismatch: row {i} has {} values, expected {n}",
                    values.len() - before
                )));
            }
        }
        if lines.next().is_some() {
            return Err(Error::format(format!(
                "dimension mismatch: more than {n} rows"
            )));
        }
        Self::new(n, values)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_fsm_string()).map_err(|e| Error::io(path, e))
    }
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<SimilarityMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SimilarityMatrix::parse_fsm(&text)
}

/// Scores all unordered patch pairs. Each cell is computed independently, so
/// the result does not depend on evaluation order or thread count.
pub fn compute_matrix<P: SimilarityProvider>(
    patches: &PatchSet,
    img: &ImageBuffer,
    provider: &P,
) -> Result<SimilarityMatrix> {
    let n = patches.len();
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 patches, got {n}")));
    }
    let features = patches
        .geometries()
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            let pixels = extract_pixels(img, g)?;
            provider.features(&pixels).map_err(|e| Error::Provider {
                i,
                j: i,
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| {
                    let v = provider.compare(&features[i], &features[j]).map_err(|e| {
                        Error::Provider {
                            i,
                            j,
                            message: e.to_string(),
                        }
                    })?;
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::Provider {
                            i,
                            j,
                            message: format!("score {v} outside [0, 1]"),
                        });
                    }
                    Ok(v)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut values = vec![0.0; n * n];
    for (i, row) in rows.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + 1 + off;
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    SimilarityMatrix::new(n, values)
}
