//! The batch pipeline: ingest, decompose, profile, and the baseline
//! clusterings.

use std::time::Instant;

use dimminer_core::cluster::{embed, two_means};
use dimminer_core::corpus::{build_corpus, RawDocument, SubjectivityLexicon};
use dimminer_core::dimension::{build_profiles, DimensionProfile};
use dimminer_core::eval::{evaluate, evaluate_runs, MetricReport};
use dimminer_core::spectral::{
    irm_laplacian, normalized_laplacian, similarity_matrix, top_eigenpairs, EigenBasis, Laplacian, LaplacianKind,
};
use dimminer_core::corpus::Corpus;
use dimminer_core::Error;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{AppError, AppResult};
use crate::store::{basis_key, Store, StoredCorpus};

/// Neighbour count for the IRM baseline when none is configured.
pub const DEFAULT_IRM_K: usize = 10;

pub fn ingest(
    docs: &[RawDocument],
    lexicon: Option<&SubjectivityLexicon>,
    config: &PipelineConfig,
) -> AppResult<StoredCorpus> {
    let corpus = build_corpus(docs, config.mode, lexicon, config.df_prune_fraction)?;
    log::info!(
        "{} documents, {} terms ({} pruned)",
        corpus.len(),
        corpus.vocabulary().len(),
        corpus.pruned_terms().len()
    );
    let texts = docs.iter().map(|d| d.text.clone()).collect();
    StoredCorpus::new(corpus, texts, config.clone())
}

pub fn laplacian(corpus: &Corpus, kind: LaplacianKind, irm_k: Option<usize>) -> AppResult<Laplacian> {
    let g = similarity_matrix(corpus);
    let l = match kind {
        LaplacianKind::Normalized => normalized_laplacian(&g)?,
        LaplacianKind::Irm => {
            let k = irm_k.ok_or_else(|| AppError::Invalid("the irm Laplacian needs irm_k".to_string()))?;
            irm_laplacian(&g, k)?
        }
    };
    if !l.isolated().is_empty() {
        log::warn!(
            "{} documents share no term with any other and are left out of the decomposition",
            l.isolated().len()
        );
    }
    Ok(l)
}

pub fn decompose(corpus: &Corpus, config: &PipelineConfig) -> AppResult<EigenBasis> {
    let start = Instant::now();
    let l = laplacian(corpus, config.laplacian_kind, config.irm_k)?;
    let basis = top_eigenpairs(&l, config.m)?;
    log::info!(
        "top {} eigenpairs of a {}-node Laplacian in {:.2?}",
        config.m,
        basis.n_active(),
        start.elapsed()
    );
    Ok(basis)
}

/// Loads the eigenbasis from the cache, computing and storing it on a miss.
/// Returns whether the cache was hit.
pub fn cached_decompose(store: &Store, stored: &StoredCorpus, config: &PipelineConfig) -> AppResult<(EigenBasis, bool)> {
    let key = basis_key(&stored.corpus_ref, config.laplacian_kind, config.m, config.irm_k);
    if let Some(basis) = store.load_basis(&key)? {
        return Ok((basis, true));
    }
    let basis = decompose(&stored.corpus, config)?;
    let path = store.save_basis(&key, &basis)?;
    log::info!("cached eigenbasis at {}", path.display());
    Ok((basis, false))
}

pub fn profiles(corpus: &Corpus, basis: &EigenBasis, config: &PipelineConfig) -> AppResult<Vec<DimensionProfile>> {
    let profiles = build_profiles(corpus, basis, &config.profile_params())?;
    for p in &profiles {
        for w in &p.warnings {
            log::warn!("e{}: {w}", p.eig_index);
        }
    }
    Ok(profiles)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    /// 2-means on the second eigenvector.
    SecondEig,
    /// 2-means on the row-normalized top-m eigenvectors, e1 included.
    TopM,
    /// 2-means on the second eigenvector of the IRM Laplacian.
    Irm,
}

impl Baseline {
    pub const ALL: [Baseline; 3] = [Baseline::SecondEig, Baseline::TopM, Baseline::Irm];

    pub fn name(self) -> &'static str {
        match self {
            Baseline::SecondEig => "second-eig",
            Baseline::TopM => "top-m",
            Baseline::Irm => "irm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub baseline: Baseline,
    pub eig_indices: Vec<usize>,
    /// Neighbour count, for the IRM baseline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub irm_k: Option<usize>,
    pub sizes: [usize; 2],
    /// Metrics of the minimum-SSE run.
    pub canonical: MetricReport,
    /// Mean over all runs.
    pub mean: MetricReport,
}

/// Runs one baseline clustering. `basis` is the normalized-Laplacian
/// basis; the IRM baseline decomposes its own Laplacian.
pub fn baseline(
    which: Baseline,
    corpus: &Corpus,
    basis: &EigenBasis,
    config: &PipelineConfig,
) -> AppResult<BaselineResult> {
    let gold: Vec<Option<i64>> = corpus.documents().iter().map(|d| d.gold_label).collect();
    if gold.iter().any(Option::is_none) {
        return Err(Error::MissingLabels("baselines are scored against gold labels".to_string()).into());
    }
    let irm_basis;
    let mut irm_k = None;
    let (basis, indices): (&EigenBasis, Vec<usize>) = match which {
        Baseline::SecondEig => (basis, vec![2]),
        Baseline::TopM => (basis, (1..=basis.m()).collect()),
        Baseline::Irm => {
            let k = config.irm_k.unwrap_or(DEFAULT_IRM_K);
            irm_k = Some(k);
            irm_basis = top_eigenpairs(&laplacian(corpus, LaplacianKind::Irm, Some(k))?, 2)?;
            (&irm_basis, vec![2])
        }
    };
    let run = two_means(&embed(basis, &indices)?, config.kmeans_runs, config.base_seed)?;
    Ok(BaselineResult {
        baseline: which,
        eig_indices: indices,
        irm_k,
        sizes: run.canonical.sizes(),
        canonical: evaluate(&run.canonical, &gold, None)?,
        mean: evaluate_runs(&run, &gold, None)?,
    })
}

/// The IRM baseline once per neighbour count; no single `k` is canonical.
pub fn irm_sweep(
    corpus: &Corpus,
    basis: &EigenBasis,
    ks: &[usize],
    config: &PipelineConfig,
) -> AppResult<Vec<BaselineResult>> {
    ks.iter()
        .map(|&k| {
            let config = PipelineConfig {
                irm_k: Some(k),
                ..config.clone()
            };
            baseline(Baseline::Irm, corpus, basis, &config)
        })
        .collect()
}
