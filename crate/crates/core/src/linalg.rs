//! Symmetric matrices and the eigensolvers behind [`crate::spectral`].
//!
//! Small and medium problems use Householder tridiagonalization followed by
//! the implicit QL algorithm. Large sparse problems use Lanczos with full
//! reorthogonalization from a fixed-seed start vector. Both paths are
//! single-threaded and bit-for-bit deterministic.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

/// Above this order the Lanczos path is used.
pub const DENSE_LIMIT: usize = 4096;
pub const LANCZOS_TOL: f64 = 1e-10;

/// Symmetric matrix in compressed sparse row form; both triangles stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricCsr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SymmetricCsr {
    /// Builds from per-row `(column, value)` lists. Caller guarantees symmetry.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                debug_assert!(c < n);
                if v != 0.0 {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        SymmetricCsr {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn from_dense(n: usize, dense: &[f64]) -> Self {
        assert_eq!(dense.len(), n * n);
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| dense[i * n + j] != 0.0)
                    .map(|j| (j, dense[i * n + j]))
                    .collect()
            })
            .collect();
        SymmetricCsr::from_rows(rows)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[span.clone()].binary_search(&j) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).map(|(_, v)| v).sum()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                out[i * self.n + j] = v;
            }
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// `‖A·v − λ·v‖₂`.
pub fn residual(a: &SymmetricCsr, value: f64, vector: &[f64]) -> f64 {
    let mut av = vec![0.0; a.order()];
    a.matvec(vector, &mut av);
    libm::sqrt(
        av.iter()
            .zip(vector)
            .map(|(x, v)| (x - value * v) * (x - value * v))
            .sum(),
    )
}

/// Eigenpairs with eigenvalues in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Flips the sign so that the entry of largest magnitude is positive
/// (first such entry on ties).
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &x in v.iter() {
        if libm::fabs(x) > best {
            best = libm::fabs(x);
            sign = if x < 0.0 { -1.0 } else { 1.0 };
        }
    }
    if sign < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Top `m` eigenpairs of a symmetric matrix, dispatching on its order.
pub fn top_eigenpairs(a: &SymmetricCsr, m: usize) -> Result<EigenPairs> {
    if a.order() <= DENSE_LIMIT {
        dense_top(a, m)
    } else {
        lanczos_top(a, m, LANCZOS_TOL, 10 * a.order())
    }
}

/// Dense symmetric eigendecomposition, returning the `m` largest pairs.
pub fn dense_top(a: &SymmetricCsr, m: usize) -> Result<EigenPairs> {
    let n = a.order();
    let mut z = a.to_dense();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(n, &mut z, &mut d, &mut e);
    transpose(n, &mut z);
    tql2(n, &mut z, &mut d, &mut e)?;
    // eigenvalues ascending; row k of z is the k-th vector
    let mut values = Vec::with_capacity(m);
    let mut vectors = Vec::with_capacity(m);
    for k in (n - m..n).rev() {
        values.push(d[k]);
        let mut v = z[k * n..(k + 1) * n].to_vec();
        fix_sign(&mut v);
        vectors.push(v);
    }
    Ok(EigenPairs { values, vectors })
}

/// Householder reduction of a dense symmetric matrix (row-major `z`) to
/// tridiagonal form, accumulating the orthogonal transform in `z`.
fn tred2(n: usize, z: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let at = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = z[at(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += libm::fabs(d[k]);
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = z[at(i - 1, j)];
                z[at(i, j)] = 0.0;
                z[at(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = libm::sqrt(h);
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for j in 0..i {
                e[j] = 0.0;
            }
            for j in 0..i {
                f = d[j];
                z[at(j, i)] = f;
                g = e[j] + z[at(j, j)] * f;
                for k in j + 1..i {
                    g += z[at(k, j)] * d[k];
                    e[k] += z[at(k, j)] * f;
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
                for k in j..i {
                    z[at(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = z[at(i - 1, j)];
                z[at(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        z[at(n - 1, i)] = z[at(i, i)];
        z[at(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = z[at(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += z[at(k, i + 1)] * z[at(k, j)];
                }
                for k in 0..=i {
                    z[at(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            z[at(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = z[at(n - 1, j)];
        z[at(n - 1, j)] = 0.0;
    }
    if n > 0 {
        z[at(n - 1, n - 1)] = 1.0;
    }
    e[0] = 0.0;
}

fn transpose(n: usize, z: &mut [f64]) {
    for i in 0..n {
        for j in i + 1..n {
            z.swap(i * n + j, j * n + i);
        }
    }
}

/// Implicit QL on the tridiagonal `(d, e)`. `z` holds the accumulated
/// transform with one vector per row, and its rows are rotated alongside.
/// Eigenvalues are returned in `d`, sorted ascending with their vectors.
fn tql2(n: usize, z: &mut [f64], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    const MAX_SWEEPS: usize = 60;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    if n > 0 {
        e[n - 1] = 0.0;
    }
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(libm::fabs(d[l]) + libm::fabs(e[l]));
        let mut m = l;
        while m < n {
            if libm::fabs(e[m]) <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_SWEEPS {
                    return Err(Error::NoConvergence {
                        worst_residual: libm::fabs(e[l]),
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = libm::hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = libm::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (lo, hi) = z.split_at_mut((i + 1) * n);
                    let row_i = &mut lo[i * n..];
                    let row_next = &mut hi[..n];
                    for (zi, zn) in row_i.iter_mut().zip(row_next.iter_mut()) {
                        let t = *zn;
                        *zn = s * *zi + c * t;
                        *zi = c * *zi - s * t;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if libm::fabs(e[l]) <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    // selection sort, ascending
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for j in i + 1..n {
            if d[j] < p {
                k = j;
                p = d[j];
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            for j in 0..n {
                z.swap(i * n + j, k * n + j);
            }
        }
    }
    Ok(())
}

/// Lanczos with full reorthogonalization. Stops once the Ritz residual
/// estimate of each of the top `m` pairs is below `tol`, or after
/// `max_iter` steps.
///
/// A single Krylov sequence sees one vector per eigenspace; further copies
/// of a repeated eigenvalue are only picked up after the sequence hits an
/// invariant subspace and restarts. Graphs with several large connected
/// components should be decomposed per component.
pub fn lanczos_top(a: &SymmetricCsr, m: usize, tol: f64, max_iter: usize) -> Result<EigenPairs> {
    let n = a.order();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut q = random_unit_orthogonal(&mut rng, n, &basis);
    let mut w = vec![0.0; n];
    let limit = max_iter.min(n);
    let mut worst = f64::INFINITY;

    while basis.len() < limit {
        a.matvec(&q, &mut w);
        let alpha = dot(&w, &q);
        basis.push(core::mem::take(&mut q));
        alphas.push(alpha);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for v in &basis {
                let c = dot(&w, v);
                w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
            }
        }
        let beta = norm(&w);
        let k = basis.len();
        if k >= m && (k % 8 == 0 || k == limit || beta < 1e-12) {
            let (vals, s) = tridiagonal_eigen(&alphas, &betas)?;
            worst = (k - m..k)
                .map(|j| libm::fabs(beta * s[j * k + k - 1]))
                .fold(0.0, f64::max);
            if worst <= tol || k == limit {
                return ritz_pairs(a, &basis, &vals, &s, m, tol, k == limit);
            }
        }
        if basis.len() == limit {
            break;
        }
        if beta < 1e-12 {
            // invariant subspace found: continue with a fresh direction
            betas.push(0.0);
            q = random_unit_orthogonal(&mut rng, n, &basis);
        } else {
            betas.push(beta);
            q = w.iter().map(|x| x / beta).collect();
        }
        w.iter_mut().for_each(|x| *x = 0.0);
    }
    Err(Error::NoConvergence {
        worst_residual: worst,
    })
}

fn ritz_pairs(
    a: &SymmetricCsr,
    basis: &[Vec<f64>],
    vals: &[f64],
    s: &[f64],
    m: usize,
    tol: f64,
    exhausted: bool,
) -> Result<EigenPairs> {
    let n = a.order();
    let k = basis.len();
    let mut values = Vec::with_capacity(m);
    let mut vectors = Vec::with_capacity(m);
    let mut worst = 0.0f64;
    for j in (k - m..k).rev() {
        let mut v = vec![0.0; n];
        for (i, b) in basis.iter().enumerate() {
            let c = s[j * k + i];
            v.iter_mut().zip(b).for_each(|(vi, bi)| *vi += c * bi);
        }
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        fix_sign(&mut v);
        worst = worst.max(residual(a, vals[j], &v));
        values.push(vals[j]);
        vectors.push(v);
    }
    // The Ritz estimate can be optimistic after heavy cancellation; the
    // true residual is the contract.
    if worst > tol * 100.0 && !(exhausted && worst <= 1e-8) {
        return Err(Error::NoConvergence {
            worst_residual: worst,
        });
    }
    Ok(EigenPairs { values, vectors })
}

/// Eigendecomposition of the symmetric tridiagonal matrix with diagonal
/// `alphas` and off-diagonal `betas`. Values ascending; vectors are the
/// rows of the returned `k × k` matrix.
fn tridiagonal_eigen(alphas: &[f64], betas: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = alphas.len();
    let mut z = vec![0.0; k * k];
    for i in 0..k {
        z[i * k + i] = 1.0;
    }
    let mut d = alphas.to_vec();
    // tql2 expects the subdiagonal in e[1..]
    let mut e = vec![0.0; k];
    for i in 1..k {
        e[i] = betas[i - 1];
    }
    tql2(k, &mut z, &mut d, &mut e)?;
    Ok((d, z))
}

fn random_unit_orthogonal(rng: &mut ChaCha8Rng, n: usize, basis: &[Vec<f64>]) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n)
            .map(|_| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
            .collect();
        for _ in 0..2 {
            for b in basis {
                let c = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= c * bi);
            }
        }
        let nv = norm(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            return v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_symmetric(n: usize, seed: u64) -> SymmetricCsr {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dense = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let x = (rng.next_u64() % 1000) as f64 / 1000.0 - 0.5;
                dense[i * n + j] = x;
                dense[j * n + i] = x;
            }
        }
        SymmetricCsr::from_dense(n, &dense)
    }

    #[test]
    fn dense_exchange_matrix() {
        let a = SymmetricCsr::from_dense(2, &[0.0, 1.0, 1.0, 0.0]);
        let p = dense_top(&a, 2).unwrap();
        assert!((p.values[0] - 1.0).abs() < 1e-14);
        assert!((p.values[1] + 1.0).abs() < 1e-14);
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert!((p.vectors[0][0] - h).abs() < 1e-14 && (p.vectors[0][1] - h).abs() < 1e-14);
        // (1, -1)/√2 with the first max-magnitude entry positive
        assert!((p.vectors[1][0] - h).abs() < 1e-14 && (p.vectors[1][1] + h).abs() < 1e-14);
    }

    #[test]
    fn dense_residuals_and_orthonormality() {
        for seed in 0..5 {
            let a = random_symmetric(30, seed);
            let p = dense_top(&a, 6).unwrap();
            for w in p.values.windows(2) {
                assert!(w[0] >= w[1]);
            }
            for i in 0..6 {
                assert!(residual(&a, p.values[i], &p.vectors[i]) < 1e-12);
                for j in 0..6 {
                    let g = dot(&p.vectors[i], &p.vectors[j]);
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((g - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn lanczos_matches_dense() {
        for seed in 0..3 {
            let a = random_symmetric(80, seed + 10);
            let d = dense_top(&a, 4).unwrap();
            let l = lanczos_top(&a, 4, 1e-10, 800).unwrap();
            for i in 0..4 {
                assert!((d.values[i] - l.values[i]).abs() < 1e-9, "{seed} {i}");
                let overlap = dot(&d.vectors[i], &l.vectors[i]).abs();
                assert!((overlap - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn lanczos_restarts_on_invariant_subspace() {
        // the start vector's Krylov space is exhausted after three steps;
        // the fourth eigenpair needs a fresh direction
        let n = 8;
        let mut dense = vec![0.0; n * n];
        for (i, v) in [5.0, 4.0, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0].iter().enumerate() {
            dense[i * n + i] = *v;
        }
        let a = SymmetricCsr::from_dense(n, &dense);
        let l = lanczos_top(&a, 4, 1e-10, 80).unwrap();
        assert_eq!(l.values.len(), 4);
        for (got, want) in l.values.iter().zip([5.0, 4.0, 3.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        for i in 0..4 {
            assert!(residual(&a, l.values[i], &l.vectors[i]) < 1e-10);
        }
        assert!(dot(&l.vectors[2], &l.vectors[3]).abs() < 1e-12);
    }

    #[test]
    fn deterministic_output() {
        let a = random_symmetric(40, 99);
        assert_eq!(dense_top(&a, 5).unwrap(), dense_top(&a, 5).unwrap());
        assert_eq!(
            lanczos_top(&a, 3, 1e-10, 400).unwrap(),
            lanczos_top(&a, 3, 1e-10, 400).unwrap()
        );
    }

    #[test]
    fn sign_convention() {
        let mut v = [0.1, -0.9, 0.5];
        fix_sign(&mut v);
        assert_eq!(v, [-0.1, 0.9, -0.5]);
    }
}
