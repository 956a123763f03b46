//! Similarity graphs, Laplacians and their leading eigenvectors.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::linalg::{self, SymmetricCsr};

/// Number of eigenvectors kept by default.
pub const DEFAULT_M: usize = 5;

/// Symmetric nonnegative document similarities with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    matrix: SymmetricCsr,
    degrees: Vec<f64>,
}

impl SimilarityGraph {
    /// Builds a graph from a dense symmetric matrix. The diagonal is
    /// zeroed; asymmetric or negative input is rejected.
    pub fn from_dense(n: usize, dense: &[f64]) -> Result<Self> {
        if dense.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries, got {}",
                n * n,
                dense.len()
            )));
        }
        let mut rows = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                let v = dense[i * n + j];
                if !(v >= 0.0) || v != dense[j * n + i] {
                    return Err(Error::InvalidArgument(format!(
                        "similarity ({i},{j}) must be symmetric and nonnegative"
                    )));
                }
                if i != j && v != 0.0 {
                    rows[i].push((j, v));
                }
            }
        }
        Ok(Self::from_matrix(SymmetricCsr::from_rows(rows)))
    }

    fn from_matrix(matrix: SymmetricCsr) -> Self {
        let degrees = (0..matrix.order()).map(|i| matrix.row_sum(i)).collect();
        SimilarityGraph { matrix, degrees }
    }

    pub fn len(&self) -> usize {
        self.matrix.order()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.matrix.row(i)
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn matrix(&self) -> &SymmetricCsr {
        &self.matrix
    }
}

/// Dot-product similarity of the binary document vectors: the number of
/// shared vocabulary terms. The diagonal is zero.
pub fn similarity_matrix(corpus: &Corpus) -> SimilarityGraph {
    let n = corpus.len();
    // inverted index: term -> documents containing it
    let mut postings = vec![Vec::new(); corpus.vocabulary().len()];
    for (i, v) in corpus.vectors().enumerate() {
        for &t in v.indices() {
            postings[t as usize].push(i);
        }
    }
    let mut counts = vec![0u32; n];
    let mut touched = Vec::new();
    let rows = corpus
        .vectors()
        .enumerate()
        .map(|(i, v)| {
            for &t in v.indices() {
                for &j in &postings[t as usize] {
                    if j != i {
                        if counts[j] == 0 {
                            touched.push(j);
                        }
                        counts[j] += 1;
                    }
                }
            }
            touched.sort_unstable();
            let row = touched
                .drain(..)
                .map(|j| {
                    let c = counts[j];
                    counts[j] = 0;
                    (j, c as f64)
                })
                .collect();
            row
        })
        .collect();
    SimilarityGraph::from_matrix(SymmetricCsr::from_rows(rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LaplacianKind {
    /// `D^{-1/2} S D^{-1/2}`.
    Normalized,
    /// Interested Reader Model: `(S' + d_max I − D') / d_max` over a
    /// k-nearest-neighbour sparsified `S'`.
    Irm,
}

impl core::str::FromStr for LaplacianKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normalized" => Ok(LaplacianKind::Normalized),
            "irm" => Ok(LaplacianKind::Irm),
            other => Err(Error::Config(format!("unknown laplacian kind `{other}`"))),
        }
    }
}

/// A Laplacian over the documents with nonzero degree. Row `r` of the
/// matrix corresponds to corpus position `active[r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    matrix: SymmetricCsr,
    kind: LaplacianKind,
    active: Vec<usize>,
    isolated: Vec<usize>,
    degrees: Vec<f64>,
}

impl Laplacian {
    pub fn matrix(&self) -> &SymmetricCsr {
        &self.matrix
    }

    pub fn kind(&self) -> LaplacianKind {
        self.kind
    }

    /// Corpus positions of the documents in the decomposition.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    /// Corpus positions of zero-degree documents left out.
    pub fn isolated(&self) -> &[usize] {
        &self.isolated
    }

    /// Degrees of the active documents in the graph the matrix was built from.
    pub fn active_degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn n_total(&self) -> usize {
        self.active.len() + self.isolated.len()
    }
}

fn split_isolated(degrees: &[f64]) -> Result<(Vec<usize>, Vec<usize>)> {
    let (active, isolated): (Vec<usize>, Vec<usize>) =
        (0..degrees.len()).partition(|&i| degrees[i] > 0.0);
    if active.is_empty() {
        return Err(Error::DegenerateGraph("every document is isolated".to_string()));
    }
    if !isolated.is_empty() {
        log::warn!(
            "{} isolated document(s) excluded from the decomposition",
            isolated.len()
        );
    }
    Ok((active, isolated))
}

/// `L = D^{-1/2} S D^{-1/2}` over the documents with positive degree.
pub fn normalized_laplacian(g: &SimilarityGraph) -> Result<Laplacian> {
    let (active, isolated) = split_isolated(g.degrees())?;
    let mut row_of = vec![usize::MAX; g.len()];
    for (r, &i) in active.iter().enumerate() {
        row_of[i] = r;
    }
    let d = g.degrees();
    // d(i)·d(j) commutes, so the result is exactly symmetric
    let rows = active
        .iter()
        .map(|&i| {
            g.neighbors(i)
                .map(|(j, s)| (row_of[j], s / libm::sqrt(d[i] * d[j])))
                .collect()
        })
        .collect();
    let matrix = SymmetricCsr::from_rows(rows);
    Ok(Laplacian {
        degrees: active.iter().map(|&i| g.degree(i)).collect(),
        matrix,
        kind: LaplacianKind::Normalized,
        active,
        isolated,
    })
}

/// The k-nearest-neighbour sparsification: `S'_{ij}` survives when `i` is
/// among `j`'s `k` most similar documents or `j` among `i`'s. Neighbours
/// are ranked by similarity descending, then position ascending.
pub fn knn_sparsify(g: &SimilarityGraph, k: usize) -> Result<SimilarityGraph> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".to_string()));
    }
    let n = g.len();
    let mut keep: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let mut nbrs: Vec<(usize, f64)> = g.neighbors(i).collect();
        nbrs.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for &(j, _) in nbrs.iter().take(k) {
            keep[i].push(j);
            keep[j].push(i);
        }
    }
    let rows = keep
        .into_iter()
        .enumerate()
        .map(|(i, mut js)| {
            js.sort_unstable();
            js.dedup();
            js.into_iter().map(|j| (j, g.get(i, j))).collect()
        })
        .collect();
    Ok(SimilarityGraph::from_matrix(SymmetricCsr::from_rows(rows)))
}

/// Interested Reader Model Laplacian `(S' + d_max I − D') / d_max`, with
/// degrees recomputed on the sparsified graph. Documents left with zero
/// degree are excluded as in [`normalized_laplacian`].
pub fn irm_laplacian(g: &SimilarityGraph, k: usize) -> Result<Laplacian> {
    let sparse = knn_sparsify(g, k)?;
    let (active, isolated) = split_isolated(sparse.degrees())?;
    let d_max = sparse.degrees().iter().copied().fold(0.0, f64::max);
    let mut row_of = vec![usize::MAX; g.len()];
    for (r, &i) in active.iter().enumerate() {
        row_of[i] = r;
    }
    let rows = active
        .iter()
        .map(|&i| {
            let mut row: Vec<(usize, f64)> = sparse
                .neighbors(i)
                .map(|(j, s)| (row_of[j], s / d_max))
                .collect();
            row.push((row_of[i], (d_max - sparse.degree(i)) / d_max));
            row
        })
        .collect();
    Ok(Laplacian {
        degrees: active.iter().map(|&i| sparse.degree(i)).collect(),
        matrix: SymmetricCsr::from_rows(rows),
        kind: LaplacianKind::Irm,
        active,
        isolated,
    })
}

/// Leading eigenpairs of a Laplacian. `eigenvectors[i]` has one entry per
/// active document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenBasis {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    pub residual_tol: f64,
    pub kind: LaplacianKind,
    /// Corpus positions of the rows, as in [`Laplacian::active`].
    pub active: Vec<usize>,
    pub isolated: Vec<usize>,
}

/// Every returned eigenpair satisfies `‖L e − λ e‖ ≤ RESIDUAL_TOL`.
pub const RESIDUAL_TOL: f64 = 1e-8;

impl EigenBasis {
    pub fn m(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn n_active(&self) -> usize {
        self.active.len()
    }

    pub fn n_total(&self) -> usize {
        self.active.len() + self.isolated.len()
    }

    /// The `index`-th eigenvector, 1-based as in `e_1 … e_m`.
    pub fn vector(&self, index: usize) -> Result<&[f64]> {
        if index == 0 || index > self.m() {
            return Err(Error::IndexOutOfRange {
                index,
                m: self.m(),
            });
        }
        Ok(&self.eigenvectors[index - 1])
    }
}

/// The `m` largest eigenpairs, eigenvalues descending. Each vector's
/// largest-magnitude entry is positive. Output is a pure function of
/// `(l, m)`.
pub fn top_eigenpairs(l: &Laplacian, m: usize) -> Result<EigenBasis> {
    let n = l.matrix.order();
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!(
            "m must lie in 1..={n}, got {m}"
        )));
    }
    let pairs = linalg::top_eigenpairs(&l.matrix, m)?;
    let worst = pairs
        .values
        .iter()
        .zip(&pairs.vectors)
        .map(|(&v, e)| linalg::residual(&l.matrix, v, e))
        .fold(0.0, f64::max);
    if !(worst <= RESIDUAL_TOL) {
        return Err(Error::NoConvergence {
            worst_residual: worst,
        });
    }
    Ok(EigenBasis {
        eigenvalues: pairs.values,
        eigenvectors: pairs.vectors,
        residual_tol: RESIDUAL_TOL,
        kind: l.kind,
        active: l.active.clone(),
        isolated: l.isolated.clone(),
    })
}
