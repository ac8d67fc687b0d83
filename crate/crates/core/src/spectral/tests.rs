use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::graph::{laplacian, LaplacianKind, SimilarityGraph};

fn graph_from(n: usize, mut w: impl FnMut(usize, usize) -> f64) -> SimilarityGraph {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = w(i, j);
            m[i * n + j] = v;
            m[j * n + i] = v;
        }
    }
    SimilarityGraph::from_weights(n, m).unwrap()
}

fn cliques(sizes: &[usize]) -> SimilarityGraph {
    let block: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect();
    graph_from(
        block.len(),
        |i, j| if block[i] == block[j] { 1.0 } else { 0.0 },
    )
}

fn spectrum(g: &SimilarityGraph) -> Spectrum {
    eigh(&laplacian(g, LaplacianKind::Unnormalized)).unwrap()
}

/// Determinant by cofactor expansion; only for tiny matrices.
fn det(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    if n == 0 {
        return 1.0;
    }
    (0..n)
        .map(|c| {
            let minor: Vec<Vec<f64>> = m[1..]
                .iter()
                .map(|row| (0..n).filter(|&j| j != c).map(|j| row[j]).collect())
                .collect();
            let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
            sign * m[0][c] * det(&minor)
        })
        .sum()
}

/// Coefficients of the characteristic polynomial as sums of principal minors:
/// `e_k(lambda) = sum over k-subsets S of det(A[S, S])`.
fn charpoly_coefficients(n: usize, a: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; n + 1];
    for mask in 0u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let sub: Vec<Vec<f64>> = idx
            .iter()
            .map(|&i| idx.iter().map(|&j| a[i * n + j]).collect())
            .collect();
        e[idx.len()] += det(&sub);
    }
    e
}

fn elementary_symmetric(values: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; values.len() + 1];
    e[0] = 1.0;
    for &v in values {
        for k in (1..e.len()).rev() {
            e[k] += e[k - 1] * v;
        }
    }
    e
}

fn components(g: &SimilarityGraph) -> Vec<usize> {
    let n = g.n();
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        comp[s] = next;
        while let Some(v) = stack.pop() {
            for u in 0..n {
                if g.weight(v, u) > 0.0 && comp[u] == usize::MAX {
                    comp[u] = next;
                    stack.push(u);
                }
            }
        }
        next += 1;
    }
    comp
}

fn same_grouping(a: &[usize], b: &[usize]) -> bool {
    (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

#[test]
fn complete_graph_gap_equals_n() {
    for n in 3..=12 {
        let s = spectrum(&graph_from(n, |_, _| 1.0));
        assert!(s.eigenvalues()[0].abs() < 1e-12);
        for &v in &s.eigenvalues()[1..] {
            assert!((v - n as f64).abs() < 1e-9, "K_{n}: {v}");
        }
    }
}

#[test]
fn complete_graph_matches_charpoly() {
    for n in [3, 4] {
        let g = graph_from(n, |_, _| 1.0);
        let l = laplacian(&g, LaplacianKind::Unnormalized);
        let s = eigh(&l).unwrap();
        let want = charpoly_coefficients(n, l.values());
        let got = elementary_symmetric(s.eigenvalues());
        for (w, g) in want.iter().zip(&got) {
            assert!((w - g).abs() < 1e-8, "{want:?} vs {got:?}");
        }
    }
}

#[test]
fn path_graph_spectrum() {
    let g = graph_from(3, |i, j| if j == i + 1 { 1.0 } else { 0.0 });
    let s = spectrum(&g);
    for (got, want) in s.eigenvalues().iter().zip([0.0, 1.0, 3.0]) {
        assert!((got - want).abs() < 1e-12);
    }
}

#[test]
fn disjoint_cliques_zero_multiplicity_and_sign_split() {
    let s = spectrum(&cliques(&[3, 3]));
    assert!(s.eigenvalues()[0].abs() < 1e-12);
    assert!(s.eigenvalues()[1].abs() < 1e-12);
    assert!(s.eigenvalues()[2] > 1.0);
    let p = partition_sign(&s).unwrap();
    let l = p.labels();
    assert!(l[..3].iter().all(|&c| c == l[0]));
    assert!(l[3..].iter().all(|&c| c == l[3]));
    assert_ne!(l[0], l[3]);
}

#[test]
fn disjoint_cliques_both_solvers_agree_on_partition() {
    let g = cliques(&[4, 2, 3]);
    let l = laplacian(&g, LaplacianKind::Unnormalized);
    let a = partition_sign(&eigh_with(&l, EigenSolver::Tridiagonal).unwrap()).unwrap();
    let b = partition_sign(&eigh_with(&l, EigenSolver::Jacobi).unwrap()).unwrap();
    // u_2 is orthogonal to the constant vector, so both signs occur and
    // each clique stays whole
    let comp = components(&g);
    for p in [a, b] {
        assert_eq!(p.sizes().iter().filter(|&&s| s > 0).count(), 2);
        for i in 0..9 {
            for j in 0..9 {
                if comp[i] == comp[j] {
                    assert_eq!(p.labels()[i], p.labels()[j]);
                }
            }
        }
    }
}

#[test]
fn detection_rule_examples() {
    let spec = |l2: f64| Spectrum::from_parts(vec![0.0, l2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
    let r = detect_spectral_gap(&spec(318.42), 100.0).unwrap();
    assert_eq!(r.decision, Decision::Unaltered);
    assert_eq!(r.statistic, 318.42);
    assert_eq!(
        detect_spectral_gap(&spec(4.28), 100.0).unwrap().decision,
        Decision::Forged
    );
    assert_eq!(
        detect_spectral_gap(&spec(100.0), 100.0).unwrap().decision,
        Decision::Unaltered
    );
}

#[test]
fn nonnegative_u2_is_one_community() {
    let s = Spectrum::from_parts(
        vec![0.0, 1.0, 2.0],
        vec![1.0, 0.0, 0.0, 0.5, 0.0, 0.5, 0.0, 1.0, 0.0],
    )
    .unwrap();
    assert_eq!(partition_sign(&s).unwrap().labels(), &[1, 1, 1]);
}

/// Brute force over all bipartitions: minimizes cut(A,B) * (1/|A| + 1/|B|).
fn min_ratio_cut(g: &SimilarityGraph) -> Vec<usize> {
    let n = g.n();
    let mut best = (f64::INFINITY, 0u32);
    for mask in 1u32..(1 << (n - 1)) {
        let side = |i: usize| mask & (1 << i) != 0;
        let a = (0..n).filter(|&i| side(i)).count() as f64;
        let cut: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| side(i) && !side(j))
            .map(|(i, j)| g.weight(i, j))
            .sum();
        let ratio = cut * (1.0 / a + 1.0 / (n as f64 - a));
        if ratio < best.0 {
            best = (ratio, mask);
        }
    }
    (0..n)
        .map(|i| usize::from(best.1 & (1 << i) != 0))
        .collect()
}

#[test]
fn planted_blocks_match_exhaustive_ratio_cut() {
    let block = |i: usize| usize::from(i >= 4);
    let g = graph_from(8, |i, j| if block(i) == block(j) { 0.9 } else { 0.1 });
    let oracle = min_ratio_cut(&g);
    let truth: Vec<usize> = (0..8).map(block).collect();
    assert!(same_grouping(&oracle, &truth));
    let p = partition_sign(&spectrum(&g)).unwrap();
    assert!(same_grouping(p.labels(), &oracle));
    let normed = partition_sign(&eigh(&laplacian(&g, LaplacianKind::Normalized)).unwrap()).unwrap();
    assert!(same_grouping(normed.labels(), &oracle));
}

#[test]
fn kmeans_two_cliques_matches_sign() {
    let s = spectrum(&cliques(&[3, 3]));
    let a = partition_kmeans(&s, 2, 0).unwrap();
    let b = partition_sign(&s).unwrap();
    assert!(same_grouping(a.labels(), b.labels()));
    assert_eq!(a.labels()[0], 1);
}

#[test]
fn kmeans_three_cliques_recovers_components() {
    let g = cliques(&[3, 3, 3]);
    let s = spectrum(&g);
    assert!(s.eigenvalues()[2].abs() < 1e-12);
    for seed in 0..9 {
        let p = partition_kmeans(&s, 3, seed).unwrap();
        assert!(same_grouping(p.labels(), &components(&g)));
    }
}

#[test]
fn kmeans_k_equals_n_singletons() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = graph_from(6, |_, _| rng.gen_range(0.1..1.0));
    let p = partition_kmeans(&spectrum(&g), 6, 2).unwrap();
    assert_eq!(p.sizes(), vec![1; 6]);
    assert!(partition_kmeans(&spectrum(&g), 7, 0).is_err());
    assert!(partition_kmeans(&spectrum(&g), 1, 0).is_err());
}

#[test]
fn solvers_agree_on_random_laplacians() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for n in [2, 5, 13, 30] {
        let g = graph_from(n, |_, _| rng.gen::<f64>());
        let l = laplacian(&g, LaplacianKind::Unnormalized);
        let q = eigh_with(&l, EigenSolver::Tridiagonal).unwrap();
        let j = eigh_with(&l, EigenSolver::Jacobi).unwrap();
        for (a, b) in q.eigenvalues().iter().zip(j.eigenvalues()) {
            assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
        }
        // simple eigenvalues: canonical vectors agree
        for (x, y) in q.u2().iter().zip(j.u2()) {
            assert!((x - y).abs() < 1e-7);
        }
    }
}

fn check_spectrum(l: &LaplacianMatrix, s: &Spectrum) -> std::result::Result<(), TestCaseError> {
    let n = l.n();
    let fro = l.frobenius_norm();
    prop_assert!(s.eigenvalues()[0] >= -1e-9);
    for k in 0..n {
        let u = s.vector(k);
        let lam = s.eigenvalues()[k];
        for r in 0..n {
            let lu: f64 = (0..n).map(|c| l.get(r, c) * u[c]).sum();
            prop_assert!((lu - lam * u[r]).abs() <= 1e-8 * lam.abs().max(1.0));
        }
        let norm: f64 = u.iter().map(|x| x * x).sum();
        prop_assert!((norm.sqrt() - 1.0).abs() <= 1e-10);
        for k2 in 0..k {
            let d: f64 = u.iter().zip(s.vector(k2)).map(|(a, b)| a * b).sum();
            prop_assert!(d.abs() <= 1e-8);
        }
    }
    for r in 0..n {
        for c in 0..n {
            let rec: f64 = (0..n)
                .map(|k| s.vector(k)[r] * s.eigenvalues()[k] * s.vector(k)[c])
                .sum();
            prop_assert!((rec - l.get(r, c)).abs() <= 1e-8 * fro.max(1.0));
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn spectrum_invariants(n in 2usize..25, seed in any::<u64>(), t in 0.0f64..0.8, normalized in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = graph_from(n, |_, _| { let w: f64 = rng.gen(); if w >= t { w } else { 0.0 } });
        let kind = if normalized { LaplacianKind::Normalized } else { LaplacianKind::Unnormalized };
        let l = laplacian(&g, kind);
        check_spectrum(&l, &eigh(&l).unwrap())?;
        check_spectrum(&l, &eigh_with(&l, EigenSolver::Jacobi).unwrap())?;
    }

    #[test]
    fn zero_multiplicity_counts_components(sizes in prop::collection::vec(1usize..8, 1..6), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let block: Vec<usize> = sizes.iter().enumerate().flat_map(|(b, &s)| std::iter::repeat_n(b, s)).collect();
        // a random spanning path inside each block keeps it connected
        let g = graph_from(block.len(), |i, j| {
            if block[i] != block[j] { 0.0 } else if j == i + 1 { rng.gen_range(0.2..1.0) } else if rng.gen_bool(0.5) { rng.gen_range(0.0..1.0) } else { 0.0 }
        });
        let s = spectrum(&g);
        let zeros = s.eigenvalues().iter().filter(|&&v| v < 1e-8).count();
        prop_assert_eq!(zeros, sizes.len());
    }

    #[test]
    fn sign_rule_ignores_incoming_sign(n in 2usize..20, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = graph_from(n, |_, _| rng.gen::<f64>());
        let s = spectrum(&g);
        let mut flipped = s.vectors.clone();
        flipped[n..2 * n].iter_mut().for_each(|x| *x = -*x);
        canonicalize_sign(&mut flipped[n..2 * n]);
        let s2 = Spectrum::from_parts(s.eigenvalues().to_vec(), flipped).unwrap();
        prop_assert_eq!(partition_sign(&s).unwrap(), partition_sign(&s2).unwrap());
    }

    #[test]
    fn permutation_equivariance(n in 3usize..16, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = vec![0.0; n * n];
        for i in 0..n { for j in i + 1..n { let v = rng.gen::<f64>(); w[i * n + j] = v; w[j * n + i] = v; } }
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let g = SimilarityGraph::from_weights(n, w.clone()).unwrap();
        let gp = graph_from(n, |i, j| w[perm[i] * n + perm[j]]);
        let (s, sp) = (spectrum(&g), spectrum(&gp));
        prop_assert!((s.lambda2() - sp.lambda2()).abs() <= 1e-9);
        let (p, pp) = (partition_sign(&s).unwrap(), partition_sign(&sp).unwrap());
        let permuted: Vec<usize> = (0..n).map(|i| p.labels()[perm[i]]).collect();
        prop_assert!(same_grouping(&permuted, pp.labels()));
    }
}
