//! Dense symmetric eigensolvers.
//!
//! Two independent routes are provided: Householder tridiagonalization
//! followed by implicit QL (the default, `O(n^3)` with a small constant) and
//! cyclic Jacobi rotations (slower, kept as a cross-check and for callers
//! that want it).

use crate::error::{Error, Result};

const SYMMETRY_TOLERANCE: f64 = 1e-9;
const JACOBI_MAX_SWEEPS: usize = 100;
const QL_MAX_ITERATIONS: usize = 60;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EigenSolver {
    #[default]
    Tridiagonal,
    Jacobi,
}

/// Eigenpairs sorted by ascending eigenvalue. `vectors` holds one
/// eigenvector per row, `n` entries each.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricEigen {
    pub n: usize,
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
}

impl SymmetricEigen {
    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.n..(k + 1) * self.n]
    }
}

pub fn check_symmetric(n: usize, a: &[f64]) -> Result<()> {
    if a.len() != n * n {
        return Err(Error::invalid(format!(
            "matrix has {} entries, expected {}",
            a.len(),
            n * n
        )));
    }
    if let Some(v) = a.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "matrix contains non-finite value {v}"
        )));
    }
    for i in 0..n {
        for j in i + 1..n {
            let diff = (a[i * n + j] - a[j * n + i]).abs();
            if diff > SYMMETRY_TOLERANCE {
                return Err(Error::invalid(format!(
                    "matrix not symmetric at ({i}, {j}): difference {diff:e}"
                )));
            }
        }
    }
    Ok(())
}

/// Flips each eigenvector so that its largest-magnitude component is
/// positive; on magnitude ties the lowest index decides.
pub fn canonicalize_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Full eigendecomposition of a symmetric row-major matrix.
pub fn symmetric_eigen(n: usize, a: &[f64], solver: EigenSolver) -> Result<SymmetricEigen> {
    check_symmetric(n, a)?;
    if n == 0 {
        return Ok(SymmetricEigen {
            n,
            values: Vec::new(),
            vectors: Vec::new(),
        });
    }
    // symmetrize exactly so both solvers see the same matrix
    let mut m = a.to_vec();
    for i in 0..n {
        for j in i + 1..n {
            let s = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = s;
            m[j * n + i] = s;
        }
    }
    let (values, vectors) = match solver {
        EigenSolver::Tridiagonal => tridiagonal_ql(n, m)?,
        EigenSolver::Jacobi => cyclic_jacobi(n, m)?,
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    let mut sorted_vectors = Vec::with_capacity(n * n);
    for &k in &order {
        let start = sorted_vectors.len();
        sorted_vectors.extend_from_slice(&vectors[k * n..(k + 1) * n]);
        canonicalize_sign(&mut sorted_vectors[start..]);
    }
    Ok(SymmetricEigen {
        n,
        values: order.iter().map(|&k| values[k]).collect(),
        vectors: sorted_vectors,
    })
}

/// Householder reduction to tridiagonal form followed by implicit QL.
///
/// Works on the transposed accumulator `s[j*n + k] = V[k][j]` so every inner
/// loop walks contiguous memory; on return row `j` of `s` is eigenvector `j`.
fn tridiagonal_ql(n: usize, mut s: Vec<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    householder_tridiagonalize(n, &mut s, &mut d, &mut e);
    implicit_ql(n, &mut s, &mut d, &mut e)?;
    Ok((d, s))
}

fn householder_tridiagonalize(n: usize, s: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    for j in 0..n {
        d[j] = s[j * n + n - 1];
    }
    for i in (1..n).rev() {
        let scale: f64 = d[..i].iter().map(|x| x.abs()).sum();
        let mut h = 0.0;
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = s[j * n + i - 1];
                s[j * n + i] = 0.0;
                s[i * n + j] = 0.0;
            }
        } else {
            for x in &mut d[..i] {
                *x /= scale;
                h += *x * *x;
            }
            let mut f = d[i - 1];
            let mut g = if f > 0.0 { -h.sqrt() } else { h.sqrt() };
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            e[..i].iter_mut().for_each(|x| *x = 0.0);
            for j in 0..i {
                f = d[j];
                s[i * n + j] = f;
                let row = &s[j * n..j * n + i];
                g = e[j] + row[j] * f;
                for k in j + 1..i {
                    g += row[k] * d[k];
                    e[k] += row[k] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                let row = &mut s[j * n..j * n + i];
                for k in j..i {
                    row[k] -= f * e[k] + g * d[k];
                }
                d[j] = row[i - 1];
                s[j * n + i] = 0.0;
            }
        }
        d[i] = h;
    }
    // accumulate the transformations
    for i in 0..n - 1 {
        s[i * n + n - 1] = s[i * n + i];
        s[i * n + i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = s[(i + 1) * n + k] / h;
            }
            let (lo, hi) = s.split_at_mut((i + 1) * n);
            let reflector = &hi[..=i];
            for j in 0..=i {
                let rj = &mut lo[j * n..j * n + i + 1];
                let g: f64 = reflector.iter().zip(rj.iter()).map(|(a, b)| a * b).sum();
                for (x, dk) in rj.iter_mut().zip(&d[..=i]) {
                    *x -= g * dk;
                }
            }
        }
        for k in 0..=i {
            s[(i + 1) * n + k] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = s[j * n + n - 1];
        s[j * n + n - 1] = 0.0;
    }
    s[(n - 1) * n + n - 1] = 1.0;
    e[0] = 0.0;
}

fn implicit_ql(n: usize, s: &mut [f64], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut shift = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > QL_MAX_ITERATIONS {
                    return Err(Error::Numerical(format!(
                        "QL iteration did not converge for eigenvalue {l}: residual {:e}",
                        e[l].abs()
                    )));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for x in &mut d[l + 2..n] {
                    *x -= h;
                }
                shift += h;
                p = d[m];
                let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
                let el1 = e[l + 1];
                let (mut sn, mut s2) = (0.0, 0.0);
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = sn;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = sn * r;
                    sn = e[i] / r;
                    c = p / r;
                    p = c * d[i] - sn * g;
                    d[i + 1] = h + sn * (c * g + sn * d[i]);
                    let (lo, hi) = s.split_at_mut((i + 1) * n);
                    let vi = &mut lo[i * n..i * n + n];
                    let vnext = &mut hi[..n];
                    for (a, b) in vi.iter_mut().zip(vnext.iter_mut()) {
                        let t = *b;
                        *b = sn * *a + c * t;
                        *a = c * *a - sn * t;
                    }
                }
                p = -sn * s2 * c3 * el1 * e[l] / dl1;
                e[l] = sn * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += shift;
        e[l] = 0.0;
    }
    Ok(())
}

/// Two-sided cyclic Jacobi. Sweeps row by row over the upper triangle until
/// the largest off-diagonal magnitude is at most `1e-12 * ||A||_F`.
fn cyclic_jacobi(n: usize, mut a: Vec<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let fro = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-12 * fro;
    let max_off = |a: &[f64]| {
        let mut m: f64 = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                m = m.max(a[p * n + q].abs());
            }
        }
        m
    };
    let mut sweeps = 0;
    loop {
        let off = max_off(&a);
        if off <= tol {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::Numerical(format!(
                "Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps: max off-diagonal {off:e}"
            )));
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (a[p * n + p], a[q * n + q]);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + theta.hypot(1.0))
                };
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                {
                    let (lo, hi) = a.split_at_mut(q * n);
                    let rp = &mut lo[p * n..p * n + n];
                    let rq = &mut hi[..n];
                    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
                        let (u, w) = (*x, *y);
                        *x = c * u - s * w;
                        *y = s * u + c * w;
                    }
                    rp[p] = app - t * apq;
                    rq[q] = aqq + t * apq;
                    rp[q] = 0.0;
                    rq[p] = 0.0;
                }
                for k in 0..n {
                    if k != p && k != q {
                        a[k * n + p] = a[p * n + k];
                        a[k * n + q] = a[q * n + k];
                    }
                }
                let (lo, hi) = v.split_at_mut(q * n);
                let vp = &mut lo[p * n..p * n + n];
                let vq = &mut hi[..n];
                for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
                    let (u, w) = (*x, *y);
                    *x = c * u - s * w;
                    *y = s * u + c * w;
                }
            }
        }
    }
    let values = (0..n).map(|i| a[i * n + i]).collect();
    Ok((values, v))
}
