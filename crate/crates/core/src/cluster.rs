//! Two-way clustering in eigenvector subspaces, and cut / normalized-cut
//! evaluation of partitions.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{EigenBasis, SimilarityGraph};

pub const DEFAULT_RUNS: usize = 10;
pub const MAX_LLOYD_ITERATIONS: usize = 300;

/// Documents embedded in the span of selected eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// Row-major, `active.len() × q`.
    points: Vec<f64>,
    q: usize,
    source_eig_indices: Vec<usize>,
    row_normalized: bool,
    active: Vec<usize>,
    n_total: usize,
}

impl Embedding {
    /// Builds an embedding directly from points (one row per active
    /// document). No normalization is applied.
    pub fn from_points(points: Vec<Vec<f64>>, active: Vec<usize>, n_total: usize) -> Result<Self> {
        let q = points.first().map_or(0, Vec::len);
        if points.len() != active.len() || q == 0 || points.iter().any(|p| p.len() != q) {
            return Err(Error::InvalidArgument("ragged or empty embedding".to_string()));
        }
        if active.iter().any(|&i| i >= n_total) {
            return Err(Error::InvalidArgument("active position out of range".to_string()));
        }
        Ok(Embedding {
            points: points.concat(),
            q,
            source_eig_indices: Vec::new(),
            row_normalized: false,
            active,
            n_total,
        })
    }

    pub fn n_points(&self) -> usize {
        self.active.len()
    }

    pub fn dim(&self) -> usize {
        self.q
    }

    pub fn point(&self, r: usize) -> &[f64] {
        &self.points[r * self.q..(r + 1) * self.q]
    }

    pub fn source_eig_indices(&self) -> &[usize] {
        &self.source_eig_indices
    }

    pub fn row_normalized(&self) -> bool {
        self.row_normalized
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    /// Scales every coordinate by `c`.
    pub fn scaled(&self, c: f64) -> Embedding {
        let mut out = self.clone();
        out.points.iter_mut().for_each(|x| *x *= c);
        out
    }
}

/// Embeds the active documents using eigenvectors `indices` (1-based).
/// Rows are scaled to unit length when two or more eigenvectors are used;
/// a single eigenvector is used as is.
pub fn embed(basis: &EigenBasis, indices: &[usize]) -> Result<Embedding> {
    if indices.is_empty() {
        return Err(Error::InvalidArgument("no eigenvector selected".to_string()));
    }
    let columns = indices
        .iter()
        .map(|&i| basis.vector(i))
        .collect::<Result<Vec<_>>>()?;
    let n = basis.n_active();
    let q = indices.len();
    let mut points = Vec::with_capacity(n * q);
    for r in 0..n {
        points.extend(columns.iter().map(|c| c[r]));
    }
    let row_normalized = q >= 2;
    if row_normalized {
        for row in points.chunks_mut(q) {
            let len = libm::sqrt(row.iter().map(|x| x * x).sum());
            if len > 0.0 {
                row.iter_mut().for_each(|x| *x /= len);
            }
        }
    }
    Ok(Embedding {
        points,
        q,
        source_eig_indices: indices.to_vec(),
        row_normalized,
        active: basis.active.clone(),
        n_total: basis.n_total(),
    })
}

/// A two-way assignment of every corpus document.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    pub assign: Vec<u8>,
    pub provenance: String,
}

impl Partition {
    pub fn new(assign: Vec<u8>, provenance: impl Into<String>) -> Self {
        Partition {
            assign,
            provenance: provenance.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.assign.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assign.is_empty()
    }

    pub fn sizes(&self) -> [usize; 2] {
        let ones = self.assign.iter().filter(|&&a| a == 1).count();
        [self.assign.len() - ones, ones]
    }

    /// The same partition with cluster ids 0 and 1 exchanged.
    pub fn swapped(&self) -> Partition {
        Partition {
            assign: self.assign.iter().map(|&a| 1 - a).collect(),
            provenance: self.provenance.clone(),
        }
    }
}

/// Result of repeated 2-means runs. The canonical partition is the run
/// with the lowest within-cluster sum of squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRun {
    pub canonical: Partition,
    pub canonical_run: usize,
    pub per_run_partitions: Vec<Partition>,
    pub per_run_sse: Vec<f64>,
    pub runs: usize,
    pub base_seed: u64,
}

/// Outcome of a single Lloyd run over the active points.
#[derive(Debug, Clone, PartialEq)]
pub struct LloydTrace {
    pub labels: Vec<u8>,
    pub sse_history: Vec<f64>,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn uniform_below(rng: &mut ChaCha8Rng, n: usize) -> usize {
    let n = n as u64;
    let zone = u64::MAX - u64::MAX % n;
    loop {
        let x = rng.next_u64();
        if x < zone {
            return (x % n) as usize;
        }
    }
}

fn run_rng(base_seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(run as u64);
    rng
}

/// Two distinct data points drawn uniformly.
fn forgy_seeds(emb: &Embedding, rng: &mut ChaCha8Rng) -> (usize, usize) {
    let n = emb.n_points();
    let a = uniform_below(rng, n);
    for _ in 0..64 {
        let mut b = uniform_below(rng, n - 1);
        if b >= a {
            b += 1;
        }
        if emb.point(a) != emb.point(b) {
            return (a, b);
        }
    }
    // heavily duplicated data: first point that differs
    let b = (0..n)
        .map(|k| (a + k) % n)
        .find(|&b| emb.point(a) != emb.point(b))
        .expect("caller checked that points are not all identical");
    (a, b)
}

fn assign_points(emb: &Embedding, centroids: &[Vec<f64>; 2], labels: &mut [u8]) -> f64 {
    let mut sse = 0.0;
    for (r, label) in labels.iter_mut().enumerate() {
        let p = emb.point(r);
        let d0 = sq_dist(p, &centroids[0]);
        let d1 = sq_dist(p, &centroids[1]);
        if d1 < d0 {
            *label = 1;
            sse += d1;
        } else {
            *label = 0;
            sse += d0;
        }
    }
    sse
}

fn centroids_of(emb: &Embedding, labels: &[u8]) -> ([Vec<f64>; 2], [usize; 2]) {
    let q = emb.dim();
    let mut sums = [vec![0.0; q], vec![0.0; q]];
    let mut counts = [0usize; 2];
    for (r, &l) in labels.iter().enumerate() {
        let l = l as usize;
        counts[l] += 1;
        sums[l].iter_mut().zip(emb.point(r)).for_each(|(s, x)| *s += x);
    }
    for c in 0..2 {
        if counts[c] > 0 {
            let k = counts[c] as f64;
            sums[c].iter_mut().for_each(|s| *s /= k);
        }
    }
    (sums, counts)
}

fn sse_of(emb: &Embedding, labels: &[u8], centroids: &[Vec<f64>; 2]) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(r, &l)| sq_dist(emb.point(r), &centroids[l as usize]))
        .sum()
}

/// Moves the point farthest from its own centroid into an empty cluster.
fn repair_empty(emb: &Embedding, labels: &mut [u8], centroids: &mut [Vec<f64>; 2]) {
    let (c, counts) = centroids_of(emb, labels);
    *centroids = c;
    let Some(empty) = (0..2).find(|&k| counts[k] == 0) else {
        return;
    };
    let far = (0..labels.len())
        .max_by(|&a, &b| {
            let da = sq_dist(emb.point(a), &centroids[labels[a] as usize]);
            let db = sq_dist(emb.point(b), &centroids[labels[b] as usize]);
            da.total_cmp(&db).then(b.cmp(&a))
        })
        .expect("nonempty");
    labels[far] = empty as u8;
    *centroids = centroids_of(emb, labels).0;
}

/// One Lloyd run from the seeds drawn for `(base_seed, run)`.
pub fn lloyd(emb: &Embedding, base_seed: u64, run: usize) -> Result<LloydTrace> {
    check_clusterable(emb)?;
    let mut rng = run_rng(base_seed, run);
    let (a, b) = forgy_seeds(emb, &mut rng);
    let mut centroids = [emb.point(a).to_vec(), emb.point(b).to_vec()];
    let mut labels = vec![0u8; emb.n_points()];
    let mut sse_history = vec![assign_points(emb, &centroids, &mut labels)];
    let mut iterations = 0;
    while iterations < MAX_LLOYD_ITERATIONS {
        iterations += 1;
        repair_empty(emb, &mut labels, &mut centroids);
        let mut next = labels.clone();
        let sse = assign_points(emb, &centroids, &mut next);
        sse_history.push(sse);
        if next == labels {
            break;
        }
        labels = next;
    }
    if centroids_of(emb, &labels).1.contains(&0) {
        // only reachable when the iteration cap is hit
        repair_empty(emb, &mut labels, &mut centroids);
        sse_history.push(sse_of(emb, &labels, &centroids));
    }
    Ok(LloydTrace {
        labels,
        sse_history,
        iterations,
    })
}

fn check_clusterable(emb: &Embedding) -> Result<()> {
    if emb.n_points() < 2 {
        return Err(Error::DegenerateClustering(format!(
            "need at least 2 points, got {}",
            emb.n_points()
        )));
    }
    let first = emb.point(0);
    if (1..emb.n_points()).all(|r| emb.point(r) == first) {
        return Err(Error::DegenerateClustering("all points are identical".to_string()));
    }
    Ok(())
}

/// Expands labels over the active points to a partition of all documents;
/// isolated documents join the larger cluster (cluster 0 on ties).
pub fn reattach(emb: &Embedding, labels: &[u8], provenance: impl Into<String>) -> Partition {
    let ones = labels.iter().filter(|&&l| l == 1).count();
    let larger = if ones > labels.len() - ones { 1 } else { 0 };
    let mut assign = vec![larger; emb.n_total()];
    for (r, &pos) in emb.active().iter().enumerate() {
        assign[pos] = labels[r];
    }
    let isolated = emb.n_total() - emb.n_points();
    if isolated > 0 {
        log::warn!("{isolated} isolated document(s) assigned to cluster {larger}");
    }
    Partition::new(assign, provenance)
}

/// `runs` independent 2-means runs; run `r` seeds from stream `r` of
/// `base_seed`.
pub fn two_means(emb: &Embedding, runs: usize, base_seed: u64) -> Result<ClusterRun> {
    if runs == 0 {
        return Err(Error::InvalidArgument("runs must be at least 1".to_string()));
    }
    check_clusterable(emb)?;
    let provenance = if emb.source_eig_indices.is_empty() {
        "2-means".to_string()
    } else {
        let idx: Vec<String> = emb
            .source_eig_indices
            .iter()
            .map(|i| format!("e{i}"))
            .collect();
        format!("2-means on {}", idx.join(","))
    };
    let mut per_run_partitions = Vec::with_capacity(runs);
    let mut per_run_sse = Vec::with_capacity(runs);
    for run in 0..runs {
        let trace = lloyd(emb, base_seed, run)?;
        per_run_sse.push(*trace.sse_history.last().expect("nonempty"));
        per_run_partitions.push(reattach(emb, &trace.labels, provenance.clone()));
    }
    let canonical_run = (0..runs)
        .min_by(|&a, &b| per_run_sse[a].total_cmp(&per_run_sse[b]).then(a.cmp(&b)))
        .expect("runs >= 1");
    Ok(ClusterRun {
        canonical: per_run_partitions[canonical_run].clone(),
        canonical_run,
        per_run_partitions,
        per_run_sse,
        runs,
        base_seed,
    })
}

fn check_len(p: &Partition, g: &SimilarityGraph) -> Result<()> {
    if p.len() != g.len() {
        return Err(Error::MismatchedPartitions(p.len(), g.len()));
    }
    Ok(())
}

/// Total similarity between the two clusters.
pub fn cut_value(p: &Partition, g: &SimilarityGraph) -> Result<f64> {
    check_len(p, g)?;
    let mut cut = 0.0;
    for i in 0..g.len() {
        if p.assign[i] == 0 {
            cut += g
                .neighbors(i)
                .filter(|&(j, _)| p.assign[j] == 1)
                .map(|(_, s)| s)
                .sum::<f64>();
        }
    }
    Ok(cut)
}

/// `Cut/assoc(C0, V) + Cut/assoc(C1, V)`.
pub fn ncut_value(p: &Partition, g: &SimilarityGraph) -> Result<f64> {
    let cut = cut_value(p, g)?;
    let mut assoc = [0.0; 2];
    for i in 0..g.len() {
        assoc[p.assign[i] as usize] += g.degree(i);
    }
    if assoc[0] <= 0.0 || assoc[1] <= 0.0 {
        return Err(Error::UndefinedNcut);
    }
    Ok(cut / assoc[0] + cut / assoc[1])
}

/// Sweeps thresholds along `values` (one per document) and returns the
/// split with the smallest normalized cut.
pub fn sweep_split(values: &[f64], g: &SimilarityGraph) -> Result<Partition> {
    if values.len() != g.len() || values.len() < 2 {
        return Err(Error::InvalidArgument(
            "sweep needs one value per document and at least 2 documents".to_string(),
        ));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut best: Option<(f64, Partition)> = None;
    let mut assign = vec![1u8; values.len()];
    for &i in &order[..order.len() - 1] {
        assign[i] = 0;
        let p = Partition::new(assign.clone(), "sweep");
        if let Ok(nc) = ncut_value(&p, g) {
            if best.as_ref().map_or(true, |(b, _)| nc < *b) {
                best = Some((nc, p));
            }
        }
    }
    best.map(|(_, p)| p).ok_or(Error::UndefinedNcut)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(values: &[f64]) -> Embedding {
        Embedding::from_points(
            values.iter().map(|&v| vec![v]).collect(),
            (0..values.len()).collect(),
            values.len(),
        )
        .unwrap()
    }

    #[test]
    fn separated_groups() {
        let emb = line(&[-1.0, -1.0, 1.0, 1.0]);
        for seed in 0..20 {
            let run = two_means(&emb, 3, seed).unwrap();
            let a = &run.canonical.assign;
            assert_eq!(a[0], a[1]);
            assert_eq!(a[2], a[3]);
            assert_ne!(a[0], a[2]);
        }
    }

    #[test]
    fn records_every_run() {
        let emb = line(&[0.0, 0.1, 0.2, 5.0, 5.1]);
        let run = two_means(&emb, 10, 7).unwrap();
        assert_eq!(run.per_run_partitions.len(), 10);
        assert_eq!(run.per_run_sse.len(), 10);
        for &s in &run.per_run_sse {
            assert!(run.per_run_sse[run.canonical_run] <= s);
        }
    }

    #[test]
    fn identical_points_are_degenerate() {
        let emb = line(&[2.0, 2.0, 2.0]);
        assert!(matches!(
            two_means(&emb, 1, 0),
            Err(Error::DegenerateClustering(_))
        ));
        assert!(two_means(&line(&[1.0]), 1, 0).is_err());
    }

    #[test]
    fn isolated_docs_join_larger_cluster() {
        let emb = Embedding::from_points(
            vec![vec![0.0], vec![0.1], vec![0.2], vec![9.0]],
            vec![0, 2, 3, 4],
            6,
        )
        .unwrap();
        let run = two_means(&emb, 2, 0).unwrap();
        let a = &run.canonical.assign;
        assert_eq!(a.len(), 6);
        assert_eq!(a[1], a[0]);
        assert_eq!(a[5], a[0]);
        assert_ne!(a[4], a[0]);
    }

    #[test]
    fn cut_and_ncut_small_cases() {
        let g = SimilarityGraph::from_dense(2, &[0.0, 2.0, 2.0, 0.0]).unwrap();
        let p = Partition::new(vec![0, 1], "t");
        assert_eq!(cut_value(&p, &g).unwrap(), 2.0);
        // both clusters are singletons with every edge cut
        assert_eq!(ncut_value(&p, &g).unwrap(), 2.0);

        // two disconnected edges split along components
        let mut s = [0.0; 16];
        s[1] = 1.0;
        s[4] = 1.0;
        s[2 * 4 + 3] = 1.0;
        s[3 * 4 + 2] = 1.0;
        let g = SimilarityGraph::from_dense(4, &s).unwrap();
        let p = Partition::new(vec![0, 0, 1, 1], "t");
        assert_eq!(cut_value(&p, &g).unwrap(), 0.0);
        assert_eq!(ncut_value(&p, &g).unwrap(), 0.0);
        let bad = Partition::new(vec![0, 0, 0, 0], "t");
        assert_eq!(ncut_value(&bad, &g), Err(Error::UndefinedNcut));
    }

    #[test]
    fn singleton_cluster_first_term_is_one() {
        let s = [0.0, 1.0, 2.0, 1.0, 0.0, 3.0, 2.0, 3.0, 0.0];
        let g = SimilarityGraph::from_dense(3, &s).unwrap();
        let p = Partition::new(vec![0, 1, 1], "t");
        let cut = cut_value(&p, &g).unwrap();
        assert_eq!(cut, 3.0);
        assert_eq!(cut / g.degree(0), 1.0);
        let nc = ncut_value(&p, &g).unwrap();
        assert!((nc - (1.0 + 3.0 / 9.0)).abs() < 1e-15);
    }

    #[test]
    fn embed_normalization_rule() {
        let basis = EigenBasis {
            eigenvalues: vec![1.0, 0.5, 0.2],
            eigenvectors: vec![
                vec![0.6, 0.8, 0.0],
                vec![0.8, -0.6, 0.0],
                vec![0.0, 0.0, 1.0],
            ],
            residual_tol: 1e-8,
            kind: crate::spectral::LaplacianKind::Normalized,
            active: vec![0, 1, 2],
            isolated: vec![],
        };
        let e = embed(&basis, &[2]).unwrap();
        assert_eq!(e.dim(), 1);
        assert!(!e.row_normalized());
        assert_eq!(e.point(1), &[-0.6]);
        let e = embed(&basis, &[1, 2, 3]).unwrap();
        assert!(e.row_normalized());
        for r in 0..3 {
            let len: f64 = e.point(r).iter().map(|x| x * x).sum();
            assert!((len - 1.0).abs() < 1e-12);
        }
        assert!(matches!(
            embed(&basis, &[4]),
            Err(Error::IndexOutOfRange { index: 4, m: 3 })
        ));
        assert!(embed(&basis, &[]).is_err());
    }
}
