//! Spectral analysis of the similarity graph: Laplacian eigendecomposition,
//! the spectral-gap detection rule and eigenvector-based partitions.

mod eigen;
mod kmeans;

use std::fmt::{self, Write as _};

use serde::Serialize;

pub use eigen::{canonicalize_sign, check_symmetric, symmetric_eigen, EigenSolver, SymmetricEigen};
pub use kmeans::{kmeans, maximin_centers};

use crate::error::{Error, Result};
use crate::graph::LaplacianMatrix;

/// Eigenvalues at or below this multiple of `eps * ||L||_F` are treated as
/// exact zeros when aligning the null space.
const NULL_CLUSTER_FACTOR: f64 = 1e3;

/// Ascending Laplacian spectrum with orthonormal eigenvectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    n: usize,
    eigenvalues: Vec<f64>,
    vectors: Vec<f64>,
}

impl Spectrum {
    /// Assembles a spectrum from ascending eigenvalues and row-stacked
    /// eigenvectors.
    pub fn from_parts(eigenvalues: Vec<f64>, vectors: Vec<f64>) -> Result<Self> {
        let n = eigenvalues.len();
        if vectors.len() != n * n {
            return Err(Error::invalid(
                "eigenvector storage does not match eigenvalue count",
            ));
        }
        if eigenvalues.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid("eigenvalues must be ascending"));
        }
        Ok(Self {
            n,
            eigenvalues,
            vectors,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvector `k` (0-based; `vector(1)` is `u_2`).
    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.n..(k + 1) * self.n]
    }

    /// Second-smallest eigenvalue, the spectral gap.
    pub fn lambda2(&self) -> f64 {
        self.eigenvalues[1]
    }

    pub fn u2(&self) -> &[f64] {
        self.vector(1)
    }

    /// `lambda_i<TAB>value` lines, `i` counted from 1.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, v) in self.eigenvalues.iter().enumerate() {
            let _ = writeln!(out, "lambda_{}\t{v}", i + 1);
        }
        out
    }
}

/// Eigendecomposition of a graph Laplacian with the default solver.
pub fn eigh(l: &LaplacianMatrix) -> Result<Spectrum> {
    eigh_with(l, EigenSolver::default())
}

/// Eigendecomposition of a graph Laplacian.
///
/// When the zero eigenvalue is repeated (disconnected graph) the basis of
/// that eigenspace is rotated so that the first vector is the trivial null
/// vector of the Laplacian and the rest are orthogonal to it. Each vector's
/// largest-magnitude component is then made positive.
pub fn eigh_with(l: &LaplacianMatrix, solver: EigenSolver) -> Result<Spectrum> {
    let n = l.n();
    let SymmetricEigen {
        values,
        mut vectors,
        ..
    } = symmetric_eigen(n, l.values(), solver)?;
    let tol = NULL_CLUSTER_FACTOR * f64::EPSILON * l.frobenius_norm().max(1.0);
    let cluster = values.iter().take_while(|&&v| v <= tol).count();
    if cluster >= 2 {
        align_null_space(n, cluster, &mut vectors, &l.trivial_null_vector());
        for k in 0..cluster {
            canonicalize_sign(&mut vectors[k * n..(k + 1) * n]);
        }
    }
    Ok(Spectrum {
        n,
        eigenvalues: values,
        vectors,
    })
}

/// Rotates the first `c` eigenvectors with a Householder reflection in
/// coefficient space so that the first becomes the projection of `z`.
fn align_null_space(n: usize, c: usize, vectors: &mut [f64], z: &[f64]) {
    let z_norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
    if z_norm == 0.0 {
        return;
    }
    let mut coef: Vec<f64> = (0..c)
        .map(|k| {
            vectors[k * n..(k + 1) * n]
                .iter()
                .zip(z)
                .map(|(u, w)| u * w)
                .sum::<f64>()
                / z_norm
        })
        .collect();
    let a_norm = coef.iter().map(|x| x * x).sum::<f64>().sqrt();
    if a_norm < 0.5 {
        return;
    }
    coef.iter_mut().for_each(|x| *x /= a_norm);
    // v = a + sign(a_0) e_1; H = I - 2 v v^T / (v^T v) maps a to -sign(a_0) e_1
    let mut v = coef;
    v[0] += if v[0] >= 0.0 { 1.0 } else { -1.0 };
    let vv: f64 = v.iter().map(|x| x * x).sum();
    let old: Vec<f64> = vectors[..c * n].to_vec();
    for k in 0..c {
        let out = &mut vectors[k * n..(k + 1) * n];
        out.iter_mut().for_each(|x| *x = 0.0);
        for j in 0..c {
            let h = if j == k { 1.0 } else { 0.0 } - 2.0 * v[j] * v[k] / vv;
            if h != 0.0 {
                for (o, u) in out.iter_mut().zip(&old[j * n..(j + 1) * n]) {
                    *o += h * u;
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Decision {
    Unaltered,
    Forged,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Unaltered => "Unaltered",
            Decision::Forged => "Forged",
        })
    }
}

/// Image-level detection statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectionMethod {
    SpectralGap,
    Modularity,
    MeanSim,
    MinSim,
}

impl DetectionMethod {
    pub const ALL: [DetectionMethod; 4] = [
        DetectionMethod::SpectralGap,
        DetectionMethod::Modularity,
        DetectionMethod::MeanSim,
        DetectionMethod::MinSim,
    ];

    /// Whether a larger statistic means "forged".
    pub fn larger_is_forged(self) -> bool {
        matches!(self, DetectionMethod::Modularity)
    }

    pub fn decide(self, statistic: f64, tau: f64) -> Decision {
        let high = statistic >= tau;
        match (self.larger_is_forged(), high) {
            (true, true) | (false, false) => Decision::Forged,
            _ => Decision::Unaltered,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DetectionMethod::SpectralGap => "spectral-gap",
            DetectionMethod::Modularity => "modularity",
            DetectionMethod::MeanSim => "mean-sim",
            DetectionMethod::MinSim => "min-sim",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| Error::invalid(format!("unknown detection method {name:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DetectionResult {
    pub statistic: f64,
    pub method: DetectionMethod,
    pub decision: Decision,
    pub tau: f64,
}

impl DetectionResult {
    pub fn new(method: DetectionMethod, statistic: f64, tau: f64) -> Self {
        Self {
            statistic,
            method,
            decision: method.decide(statistic, tau),
            tau,
        }
    }
}

/// Unaltered iff `lambda_2 >= tau`.
pub fn detect_spectral_gap(spec: &Spectrum, tau: f64) -> Result<DetectionResult> {
    if spec.n() < 2 {
        return Err(Error::invalid("spectral gap needs at least 2 vertices"));
    }
    Ok(DetectionResult::new(
        DetectionMethod::SpectralGap,
        spec.lambda2(),
        tau,
    ))
}

/// Community labels `1..=k` per vertex, plus the quality score that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
    score: f64,
}

impl Partition {
    pub fn new(labels: Vec<usize>, k: usize, score: f64) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&c| c == 0 || c > k) {
            return Err(Error::invalid(format!("label {bad} outside 1..={k}")));
        }
        Ok(Self { labels, k, score })
    }

    /// Relabels arbitrary community ids to `1..` in order of first appearance.
    pub fn from_raw_labels(raw: &[usize], score: f64) -> Self {
        let mut map: Vec<(usize, usize)> = Vec::new();
        let labels = raw
            .iter()
            .map(|&r| match map.iter().find(|(from, _)| *from == r) {
                Some(&(_, to)) => to,
                None => {
                    map.push((r, map.len() + 1));
                    map.len()
                }
            })
            .collect();
        Self {
            labels,
            k: map.len(),
            score,
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Member count per community id `1..=k` (index 0 is community 1).
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.labels {
            sizes[c - 1] += 1;
        }
        sizes
    }

    pub fn members(&self, community: usize) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i] == community)
            .collect()
    }

    /// `vertex<TAB>label` lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (i, c) in self.labels.iter().enumerate() {
            let _ = writeln!(out, "{i}\t{c}");
        }
        out
    }
}

/// Sign rule on `u_2`: community 1 where `u_{i,2} >= 0`, else community 2.
pub fn partition_sign(spec: &Spectrum) -> Result<Partition> {
    if spec.n() < 2 {
        return Err(Error::invalid("sign partition needs at least 2 vertices"));
    }
    let labels = spec
        .u2()
        .iter()
        .map(|&u| if u >= 0.0 { 1 } else { 2 })
        .collect();
    Partition::new(labels, 2, spec.lambda2())
}

/// k-means on the rows of the first `k` eigenvectors.
pub fn partition_kmeans(spec: &Spectrum, k: usize, seed: u64) -> Result<Partition> {
    let n = spec.n();
    if k < 2 || k > n {
        return Err(Error::invalid(format!("k = {k} must be in 2..={n}")));
    }
    let points: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..k).map(|c| spec.vector(c)[i]).collect())
        .collect();
    let raw = kmeans(&points, k, seed)?;
    let mut part = Partition::from_raw_labels(&raw, spec.lambda2());
    // communities that ended up empty still count towards k
    part.k = k;
    Ok(part)
}

#[cfg(test)]
mod tests;
