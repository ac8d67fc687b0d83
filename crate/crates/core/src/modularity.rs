//! Modularity of vertex partitions and fast-greedy modularity optimization.
//!
//! Modularity here uses the `1/(4m)` prefactor:
//!
//! ```text
//! Q = 1/(4m) * sum_{i,j} (W_ij - d_i d_j / 2m) * [c_i == c_j]
//! ```
//!
//! The sum runs over ordered pairs including `i == j`. This is half the more
//! common `1/(2m)` convention; the maximizing partition is the same, but
//! detection thresholds on `Q` scale accordingly.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::SimilarityGraph;
use crate::spectral::{DetectionMethod, DetectionResult, Partition};

/// Graphs up to this size re-check the incremental Q against a direct
/// evaluation after every merge in debug builds.
const DEBUG_VERIFY_MAX_N: usize = 128;

pub fn modularity_q(g: &SimilarityGraph, labels: &[usize]) -> Result<f64> {
    let n = g.n();
    if labels.len() != n {
        return Err(Error::invalid(format!(
            "{} labels for {n} vertices",
            labels.len()
        )));
    }
    let m = g.total_weight();
    if !(m > 0.0) {
        return Err(Error::UndefinedModularity);
    }
    let two_m = 2.0 * m;
    let mut ids: Vec<usize> = labels.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let slot = |c: usize| ids.binary_search(&c).unwrap();
    let mut inside = vec![0.0; ids.len()];
    let mut degree = vec![0.0; ids.len()];
    for i in 0..n {
        let ci = slot(labels[i]);
        degree[ci] += g.degrees()[i];
        let row = g.row(i);
        for j in 0..n {
            if labels[j] == labels[i] {
                inside[ci] += row[j];
            }
        }
    }
    let total: f64 = inside
        .iter()
        .zip(&degree)
        .map(|(w, d)| w - d * d / two_m)
        .sum();
    Ok(total / (2.0 * two_m))
}

/// One agglomeration step: community `b` merged into `a` (`a < b`), with the
/// modularity after the merge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub q_after: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModularityResult {
    pub q_opt: f64,
    pub initial_q: f64,
    pub partition: Partition,
    pub merge_trace: Vec<Merge>,
    n: usize,
}

impl ModularityResult {
    /// Number of merges applied to reach the optimum.
    pub fn optimal_step(&self) -> usize {
        self.n - self.partition.k()
    }

    /// Vertex labels after the first `steps` merges, renumbered `1..` by first
    /// appearance.
    pub fn labels_after(&self, steps: usize) -> Vec<usize> {
        let mut owner: Vec<usize> = (0..self.n).collect();
        for merge in &self.merge_trace[..steps.min(self.merge_trace.len())] {
            for o in owner.iter_mut() {
                if *o == merge.b {
                    *o = merge.a;
                }
            }
        }
        Partition::from_raw_labels(&owner, 0.0).labels().to_vec()
    }

    pub fn q_after(&self, steps: usize) -> f64 {
        if steps == 0 {
            self.initial_q
        } else {
            self.merge_trace[steps - 1].q_after
        }
    }

    /// `step<TAB>a<TAB>b<TAB>Q`, steps counted from 1.
    pub fn trace_tsv(&self) -> String {
        let mut out = String::new();
        for (s, m) in self.merge_trace.iter().enumerate() {
            let _ = writeln!(out, "{}\t{}\t{}\t{}", s + 1, m.a, m.b, m.q_after);
        }
        out
    }
}

struct Agglomeration {
    n: usize,
    two_m: f64,
    /// Between-community weight sums, kept symmetric.
    w: Vec<f64>,
    degree: Vec<f64>,
    active: Vec<bool>,
    /// Best connected partner `p > c` of each community and its gain.
    best: Vec<Option<(usize, f64)>>,
}

impl Agglomeration {
    fn gain(&self, a: usize, b: usize) -> f64 {
        (self.w[a * self.n + b] - self.degree[a] * self.degree[b] / self.two_m) / self.two_m
    }

    fn connected(&self, a: usize, b: usize) -> bool {
        self.w[a * self.n + b] > 0.0
    }

    fn row_best(&self, c: usize) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for p in c + 1..self.n {
            if self.active[p] && self.connected(c, p) {
                let v = self.gain(c, p);
                if best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((p, v));
                }
            }
        }
        best
    }

    /// Largest gain over connected pairs, ties to the smallest `(a, b)`.
    /// Falls back to all active pairs once no connected pair remains.
    fn choose(&self) -> (usize, usize) {
        let mut pick: Option<(usize, usize, f64)> = None;
        for c in 0..self.n {
            if let (true, Some((p, v))) = (self.active[c], self.best[c]) {
                if pick.is_none_or(|(_, _, bv)| v > bv) {
                    pick = Some((c, p, v));
                }
            }
        }
        if let Some((a, b, _)) = pick {
            return (a, b);
        }
        for a in 0..self.n {
            if !self.active[a] {
                continue;
            }
            for b in a + 1..self.n {
                if self.active[b] {
                    let v = self.gain(a, b);
                    if pick.is_none_or(|(_, _, bv)| v > bv) {
                        pick = Some((a, b, v));
                    }
                }
            }
        }
        let (a, b, _) = pick.expect("at least two active communities");
        (a, b)
    }

    fn merge(&mut self, a: usize, b: usize) {
        let n = self.n;
        for c in 0..n {
            if self.active[c] && c != a && c != b {
                let merged = self.w[a * n + c] + self.w[b * n + c];
                self.w[a * n + c] = merged;
                self.w[c * n + a] = merged;
            }
        }
        self.degree[a] += self.degree[b];
        self.active[b] = false;
        self.best[b] = None;
        self.best[a] = self.row_best(a);
        for c in 0..n {
            if !self.active[c] || c == a {
                continue;
            }
            let stale = matches!(self.best[c], Some((p, _)) if p == a || p == b);
            if c < a {
                if stale {
                    self.best[c] = self.row_best(c);
                } else if self.connected(c, a) {
                    let v = self.gain(c, a);
                    let better = match self.best[c] {
                        None => true,
                        Some((p, bv)) => v > bv || (v == bv && a < p),
                    };
                    if better {
                        self.best[c] = Some((a, v));
                    }
                }
            } else if c < b && stale {
                self.best[c] = self.row_best(c);
            }
        }
    }
}

/// Agglomerative fast-greedy optimization: starting from singletons, merge
/// the connected pair with the largest modularity gain until one community
/// remains, and report the dendrogram cut with the highest Q.
pub fn fast_greedy(g: &SimilarityGraph) -> Result<ModularityResult> {
    let n = g.n();
    if n < 2 {
        return Err(Error::invalid("fast-greedy needs at least 2 vertices"));
    }
    let m = g.total_weight();
    if !(m > 0.0) {
        return Err(Error::UndefinedModularity);
    }
    let two_m = 2.0 * m;
    let mut state = Agglomeration {
        n,
        two_m,
        w: g.weights().to_vec(),
        degree: g.degrees().to_vec(),
        active: vec![true; n],
        best: Vec::new(),
    };
    state.best = (0..n).map(|c| state.row_best(c)).collect();

    let initial_q = -g.degrees().iter().map(|d| d * d).sum::<f64>() / (2.0 * two_m * two_m);
    let mut q = initial_q;
    let (mut best_q, mut best_step) = (initial_q, 0);
    let mut trace = Vec::with_capacity(n - 1);
    let mut owner: Vec<usize> = (0..n).collect();
    for step in 1..n {
        let (a, b) = state.choose();
        q += state.gain(a, b);
        state.merge(a, b);
        for o in owner.iter_mut() {
            if *o == b {
                *o = a;
            }
        }
        if cfg!(debug_assertions) && n <= DEBUG_VERIFY_MAX_N {
            let direct = modularity_q(g, &owner)?;
            debug_assert!(
                (direct - q).abs() <= 1e-10,
                "incremental Q {q} drifted from direct {direct}"
            );
        }
        trace.push(Merge { a, b, q_after: q });
        if q > best_q {
            best_q = q;
            best_step = step;
        }
    }
    let mut result = ModularityResult {
        q_opt: best_q,
        initial_q,
        partition: Partition::from_raw_labels(&[], 0.0),
        merge_trace: trace,
        n,
    };
    result.partition = Partition::from_raw_labels(&result.labels_after(best_step), best_q);
    Ok(result)
}

/// Forged iff `Q_opt >= tau`.
pub fn detect_modularity(res: &ModularityResult, tau: f64) -> DetectionResult {
    DetectionResult::new(DetectionMethod::Modularity, res.q_opt, tau)
}

/// Cuts the fast-greedy dendrogram where exactly `k` communities remain.
pub fn localize_modularity(g: &SimilarityGraph, k: usize) -> Result<Partition> {
    if k < 2 || k > g.n() {
        return Err(Error::invalid(format!("k = {k} must be in 2..={}", g.n())));
    }
    fast_greedy(g)?.cut(k)
}

impl ModularityResult {
    /// Partition after merging down to `k` communities.
    pub fn cut(&self, k: usize) -> Result<Partition> {
        if k == 0 || k > self.n {
            return Err(Error::invalid(format!("k = {k} must be in 1..={}", self.n)));
        }
        let steps = self.n - k;
        Partition::new(self.labels_after(steps), k, self.q_after(steps))
    }
}
