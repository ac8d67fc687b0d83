//! The Forensic Similarity Graph and its Laplacians.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::similarity::SimilarityMatrix;

/// Dense weighted graph over patches with thresholded similarity edges.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityGraph {
    n: usize,
    weights: Vec<f64>,
    threshold: f64,
    degrees: Vec<f64>,
    total_weight: f64,
}

impl SimilarityGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.n..(i + 1) * self.n]
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Weighted degrees `d_i = sum_j W_ij`.
    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Total edge weight `m = sum_i d_i / 2`.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n)
            .map(|i| self.row(i)[i + 1..].iter().filter(|&&w| w > 0.0).count())
            .sum()
    }

    /// Builds a graph directly from a symmetric weight matrix (zero diagonal),
    /// with threshold 0. Useful for synthetic graphs.
    pub fn from_weights(n: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != n * n {
            return Err(Error::invalid(format!(
                "weight matrix has {} entries, expected {}",
                weights.len(),
                n * n
            )));
        }
        for i in 0..n {
            if weights[i * n + i] != 0.0 {
                return Err(Error::invalid(format!("nonzero diagonal at vertex {i}")));
            }
            for j in i + 1..n {
                let w = weights[i * n + j];
                if w != weights[j * n + i] || !(w >= 0.0) || !w.is_finite() {
                    return Err(Error::invalid(format!(
                        "weight ({i}, {j}) is asymmetric, negative or not finite"
                    )));
                }
            }
        }
        Ok(Self::assemble(n, weights, 0.0))
    }

    fn assemble(n: usize, weights: Vec<f64>, threshold: f64) -> Self {
        let degrees: Vec<f64> = weights
            .chunks(n.max(1))
            .take(n)
            .map(|r| r.iter().sum())
            .collect();
        let total_weight = degrees.iter().sum::<f64>() / 2.0;
        Self {
            n,
            weights,
            threshold,
            degrees,
            total_weight,
        }
    }

    /// Edge list, one line `i<TAB>j<TAB>w` per edge with `i < j` and `w > 0`.
    pub fn edge_list_tsv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                let w = self.weight(i, j);
                if w > 0.0 {
                    let _ = writeln!(out, "{i}\t{j}\t{w}");
                }
            }
        }
        out
    }
}

/// Keeps similarities at or above `threshold` as edge weights, zeroes the rest.
pub fn build_graph(s: &SimilarityMatrix, threshold: f64) -> Result<SimilarityGraph> {
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::invalid(format!(
            "edge threshold {threshold} outside [0, 1)"
        )));
    }
    let n = s.n();
    if n < 2 {
        return Err(Error::invalid(format!(
            "graph needs at least 2 vertices, got {n}"
        )));
    }
    let weights = s
        .values()
        .iter()
        .map(|&v| if v >= threshold { v } else { 0.0 })
        .collect();
    Ok(SimilarityGraph::assemble(n, weights, threshold))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LaplacianKind {
    /// `L = D - W`
    Unnormalized,
    /// `D^-1/2 L D^-1/2`, with zero rows and columns for isolated vertices.
    Normalized,
}

/// Dense symmetric Laplacian, together with the degrees it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct LaplacianMatrix {
    n: usize,
    values: Vec<f64>,
    kind: LaplacianKind,
    degrees: Vec<f64>,
}

impl LaplacianMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn kind(&self) -> LaplacianKind {
        self.kind
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// A vector in the null space for every graph: constant for `L`,
    /// `sqrt(d)` for the normalized form. Zero when the graph has no edges.
    pub fn trivial_null_vector(&self) -> Vec<f64> {
        match self.kind {
            LaplacianKind::Unnormalized => vec![1.0; self.n],
            LaplacianKind::Normalized => self.degrees.iter().map(|d| d.sqrt()).collect(),
        }
    }
}

pub fn laplacian(g: &SimilarityGraph, kind: LaplacianKind) -> LaplacianMatrix {
    let n = g.n();
    let d = g.degrees();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            values[i * n + j] = if i == j { d[i] } else { -g.weight(i, j) };
        }
    }
    if kind == LaplacianKind::Normalized {
        let inv_sqrt: Vec<f64> = d
            .iter()
            .map(|&di| if di > 0.0 { 1.0 / di.sqrt() } else { 0.0 })
            .collect();
        for i in 0..n {
            for j in 0..n {
                values[i * n + j] *= inv_sqrt[i] * inv_sqrt[j];
            }
        }
        // exact ones on the diagonal of non-isolated vertices
        for i in 0..n {
            if d[i] > 0.0 {
                values[i * n + i] = 1.0;
            }
        }
    }
    LaplacianMatrix {
        n,
        values,
        kind,
        degrees: d.to_vec(),
    }
}
