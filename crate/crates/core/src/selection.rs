//! Choosing a dimension: overlap scores against a source profile or a
//! lexicon, and the final clustering along the chosen eigenvector(s).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cluster::{embed, two_means, ClusterRun, Partition};
use crate::corpus::{Corpus, Polarity, SubjectivityLexicon};
use crate::dimension::DimensionProfile;
use crate::error::{Error, Result};
use crate::eval::{evaluate, evaluate_runs, MetricReport};
use crate::spectral::EigenBasis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SelectionSource {
    Human,
    Lexicon,
    Adapted,
}

/// How the two lists of one side were matched to the other's.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pairing {
    /// c1↔c1, c2↔c2.
    Straight,
    /// c1↔c2, c2↔c1.
    Crossed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionScore {
    pub eig_index: usize,
    pub score: usize,
    pub second_best_score: usize,
    pub gap: usize,
    pub pairing: Pairing,
}

/// Polarity assigned to each list of the first selected profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolarityMap {
    pub list_c1: Polarity,
    pub list_c2: Polarity,
}

impl PolarityMap {
    pub fn c1_positive() -> Self {
        PolarityMap {
            list_c1: Polarity::Positive,
            list_c2: Polarity::Negative,
        }
    }

    pub fn c2_positive() -> Self {
        PolarityMap {
            list_c1: Polarity::Negative,
            list_c2: Polarity::Positive,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.list_c1 != self.list_c2
    }
}

fn overlap(a: &BTreeSet<&str>, b: &BTreeSet<&str>) -> usize {
    a.intersection(b).count()
}

/// Term sets of one dimension; weights play no part in matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ListPair<'a> {
    pub c1: BTreeSet<&'a str>,
    pub c2: BTreeSet<&'a str>,
}

impl<'a> ListPair<'a> {
    pub fn new(c1: impl IntoIterator<Item = &'a str>, c2: impl IntoIterator<Item = &'a str>) -> Self {
        ListPair {
            c1: c1.into_iter().collect(),
            c2: c2.into_iter().collect(),
        }
    }

    pub fn of_profile(p: &'a DimensionProfile) -> Self {
        ListPair::new(p.list_c1.terms(), p.list_c2.terms())
    }

    pub fn of_lexicon(lex: &'a SubjectivityLexicon) -> Self {
        ListPair::new(
            lex.positive.iter().map(String::as_str),
            lex.negative.iter().map(String::as_str),
        )
    }
}

/// `max(|A1∩B1| + |A2∩B2|, |A1∩B2| + |A2∩B1|)` with the winning pairing
/// (straight on ties).
pub fn eig_similarity_pairing(a: &ListPair<'_>, b: &ListPair<'_>) -> (usize, Pairing) {
    let straight = overlap(&a.c1, &b.c1) + overlap(&a.c2, &b.c2);
    let crossed = overlap(&a.c1, &b.c2) + overlap(&a.c2, &b.c1);
    if crossed > straight {
        (crossed, Pairing::Crossed)
    } else {
        (straight, Pairing::Straight)
    }
}

pub fn eig_similarity(a: &ListPair<'_>, b: &ListPair<'_>) -> usize {
    eig_similarity_pairing(a, b).0
}

/// Scores every target against `source` and returns the best one (smallest
/// eigenvector index on ties), the runner-up score and the gap.
pub fn best_match(source: &ListPair<'_>, targets: &[DimensionProfile]) -> Result<SelectionScore> {
    if targets.is_empty() {
        return Err(Error::InvalidArgument("no target profiles".to_string()));
    }
    let mut scored: Vec<(usize, usize, Pairing)> = targets
        .iter()
        .map(|t| {
            let (s, p) = eig_similarity_pairing(source, &ListPair::of_profile(t));
            (t.eig_index, s, p)
        })
        .collect();
    scored.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let (eig_index, score, pairing) = scored[0];
    let second_best_score = scored.get(1).map_or(0, |s| s.1);
    Ok(SelectionScore {
        eig_index,
        score,
        second_best_score,
        gap: score - second_best_score,
        pairing,
    })
}

/// Picks the target dimension whose lists overlap most with a dimension
/// already chosen in another collection.
pub fn adapt_select(source: &DimensionProfile, targets: &[DimensionProfile]) -> Result<SelectionScore> {
    best_match(&ListPair::of_profile(source), targets)
}

/// Outcome of [`lexicon_select`]; the polarity map follows from whichever
/// list matched the lexicon's positive words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconSelection {
    pub score: SelectionScore,
    pub polarity_map: PolarityMap,
}

/// Picks the dimension whose lists overlap most with the lexicon, treating
/// its positive and negative words as the two source lists.
pub fn lexicon_select(profiles: &[DimensionProfile], lexicon: &SubjectivityLexicon) -> Result<LexiconSelection> {
    if lexicon.is_empty() {
        return Err(Error::InvalidArgument("lexicon is empty".to_string()));
    }
    let score = best_match(&ListPair::of_lexicon(lexicon), profiles)?;
    if score.score == 0 {
        log::warn!(
            "no profile shares a term with the lexicon; defaulting to e{}",
            score.eig_index
        );
    }
    let polarity_map = match score.pairing {
        Pairing::Straight => PolarityMap::c1_positive(),
        Pairing::Crossed => PolarityMap::c2_positive(),
    };
    Ok(LexiconSelection {
        score,
        polarity_map,
    })
}

/// Polarity of the source's own lists carried over to the matched target.
pub fn adapted_polarity(source: &PolarityMap, pairing: Pairing) -> PolarityMap {
    match pairing {
        Pairing::Straight => *source,
        Pairing::Crossed => PolarityMap {
            list_c1: source.list_c2,
            list_c2: source.list_c1,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub eig_indices: Vec<usize>,
    pub partition: Partition,
    /// Polarity of cluster 0 and cluster 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_polarity: Option<[Polarity; 2]>,
    pub sizes: [usize; 2],
    /// Metrics of the canonical partition, when gold labels exist.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricReport>,
    /// Metrics averaged over all 2-means runs, when gold labels exist.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_metrics: Option<MetricReport>,
    pub canonical_run: usize,
    pub runs: usize,
    pub base_seed: u64,
}

/// Clusters every document along the selected eigenvectors and, given a
/// polarity map, labels the clusters: the cluster holding most of the
/// first profile's top documents takes the polarity of its `list_c1`.
pub fn cluster_selection(
    corpus: &Corpus,
    basis: &EigenBasis,
    profiles: &[DimensionProfile],
    eig_indices: &[usize],
    polarity_map: Option<PolarityMap>,
    runs: usize,
    base_seed: u64,
) -> Result<SelectionResult> {
    validate_indices(eig_indices, basis.m())?;
    let emb = embed(basis, eig_indices)?;
    let run = two_means(&emb, runs, base_seed)?;
    finish_selection(corpus, profiles, eig_indices, polarity_map, run)
}

/// Selected indices must be distinct members of `2..=m`.
pub fn validate_indices(eig_indices: &[usize], m: usize) -> Result<()> {
    if eig_indices.is_empty() {
        return Err(Error::InvalidArgument("no eigenvector selected".to_string()));
    }
    let mut seen = BTreeSet::new();
    for &i in eig_indices {
        if i < 2 || i > m {
            return Err(Error::IndexOutOfRange { index: i, m });
        }
        if !seen.insert(i) {
            return Err(Error::InvalidArgument(format!("e{i} selected twice")));
        }
    }
    Ok(())
}

fn finish_selection(
    corpus: &Corpus,
    profiles: &[DimensionProfile],
    eig_indices: &[usize],
    polarity_map: Option<PolarityMap>,
    run: ClusterRun,
) -> Result<SelectionResult> {
    let partition = run.canonical.clone();
    let cluster_polarity = match polarity_map {
        None => None,
        Some(map) => {
            if !map.is_valid() {
                return Err(Error::InvalidArgument(
                    "the two lists need distinct polarities".to_string(),
                ));
            }
            let first = eig_indices[0];
            let profile = profiles
                .iter()
                .find(|p| p.eig_index == first)
                .ok_or_else(|| Error::InvalidArgument(format!("no profile for e{first}")))?;
            let positions: BTreeMap<&str, usize> = corpus
                .documents()
                .iter()
                .enumerate()
                .map(|(i, d)| (d.id.as_str(), i))
                .collect();
            let mut votes = [0usize; 2];
            for id in &profile.top_ids {
                let &pos = positions
                    .get(id.as_str())
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown document `{id}`")))?;
                votes[partition.assign[pos] as usize] += 1;
            }
            let top_cluster = if votes[1] > votes[0] { 1 } else { 0 };
            let mut labels = [map.list_c2; 2];
            labels[top_cluster] = map.list_c1;
            Some(labels)
        }
    };
    let gold: Vec<Option<i64>> = corpus.documents().iter().map(|d| d.gold_label).collect();
    let (metrics, run_metrics) = if gold.iter().all(Option::is_some) {
        (
            Some(evaluate(&partition, &gold, None)?),
            Some(evaluate_runs(&run, &gold, None)?),
        )
    } else {
        (None, None)
    };
    Ok(SelectionResult {
        eig_indices: eig_indices.to_vec(),
        sizes: partition.sizes(),
        partition,
        cluster_polarity,
        metrics,
        run_metrics,
        canonical_run: run.canonical_run,
        runs: run.runs,
        base_seed: run.base_seed,
    })
}
