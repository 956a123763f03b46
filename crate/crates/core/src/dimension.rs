//! Candidate clustering dimensions: one profile per eigenvector, built from
//! its least ambiguous documents and summarized as two ranked feature lists
//! (maximum margin feature ranking).

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{BinaryVector, Corpus, Polarity, Vocabulary};
use crate::error::{Error, Result};
use crate::margin::{train_margin_classifier, MarginModel, DEFAULT_C};
use crate::spectral::EigenBasis;

pub const DEFAULT_F: usize = 100;
pub const DEFAULT_UNAMBIGUOUS_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileParams {
    pub f_count: usize,
    pub c_param: f64,
    /// Share of documents kept, split evenly between both ends of the
    /// eigenvector.
    pub unambiguous_fraction: f64,
}

impl Default for ProfileParams {
    fn default() -> Self {
        ProfileParams {
            f_count: DEFAULT_F,
            c_param: DEFAULT_C,
            unambiguous_fraction: DEFAULT_UNAMBIGUOUS_FRACTION,
        }
    }
}

/// Ranked `(term, weight)` pairs characterizing one side of a dimension.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureList {
    pub entries: Vec<(String, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarity_label: Option<Polarity>,
}

impl FeatureList {
    pub fn terms(&self) -> impl Iterator<Item = &str> + '_ {
        self.entries.iter().map(|(t, _)| t.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The first `k` entries.
    pub fn head(&self, k: usize) -> FeatureList {
        FeatureList {
            entries: self.entries.iter().take(k).cloned().collect(),
            polarity_label: self.polarity_label,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionProfile {
    pub eig_index: usize,
    /// Ids of the documents with the largest eigenvector entries.
    pub top_ids: Vec<String>,
    /// Ids of the documents with the smallest eigenvector entries.
    pub bottom_ids: Vec<String>,
    /// Terms with the largest positive weights (the `top_ids` side).
    pub list_c1: FeatureList,
    /// Terms with the most negative weights (the `bottom_ids` side).
    pub list_c2: FeatureList,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub model: Option<MarginModel>,
}

impl DimensionProfile {
    /// The profile of the negated eigenvector: both document sets and both
    /// lists exchanged.
    pub fn mirrored(&self) -> DimensionProfile {
        DimensionProfile {
            eig_index: self.eig_index,
            top_ids: self.bottom_ids.clone(),
            bottom_ids: self.top_ids.clone(),
            list_c1: self.list_c2.clone(),
            list_c2: self.list_c1.clone(),
            warnings: self.warnings.clone(),
            model: self.model.clone(),
        }
    }
}

/// Ranks rows of `values` by value descending (position ascending on ties)
/// and returns the first and last `floor(n · fraction / 2)` rows.
pub fn select_unambiguous_fraction(values: &[f64], fraction: f64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "unambiguous fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let n = values.len();
    let per_side = libm::floor(n as f64 * fraction / 2.0) as usize;
    if per_side < 2 {
        let needed = libm::ceil(4.0 / fraction) as usize;
        return Err(Error::TooSmall { needed, got: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let top = order[..per_side].to_vec();
    let bottom = order[n - per_side..].to_vec();
    Ok((top, bottom))
}

/// The top and bottom eighth of the documents along an eigenvector.
pub fn select_unambiguous(values: &[f64]) -> Result<(Vec<usize>, Vec<usize>)> {
    select_unambiguous_fraction(values, DEFAULT_UNAMBIGUOUS_FRACTION)
}

/// Maximum margin feature ranking: the `f_count` most positive weights
/// (descending) and the `f_count` most negative (most negative first).
/// Ties go to the lexicographically smaller term; zero weights are never
/// listed. Returns warnings for lists shorter than `f_count`.
pub fn mmfr(
    vocabulary: &Vocabulary,
    model: &MarginModel,
    f_count: usize,
) -> (FeatureList, FeatureList, Vec<String>) {
    let mut positive: Vec<(usize, f64)> = Vec::new();
    let mut negative: Vec<(usize, f64)> = Vec::new();
    for (j, &w) in model.weights.iter().enumerate() {
        if w > 0.0 {
            positive.push((j, w));
        } else if w < 0.0 {
            negative.push((j, w));
        }
    }
    positive.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| vocabulary.term(a.0).cmp(vocabulary.term(b.0)))
    });
    negative.sort_by(|a, b| {
        a.1.total_cmp(&b.1)
            .then_with(|| vocabulary.term(a.0).cmp(vocabulary.term(b.0)))
    });
    let mut warnings = Vec::new();
    let mut to_list = |ranked: Vec<(usize, f64)>, side: &str| {
        if ranked.len() < f_count {
            let msg = format!(
                "{side} list has {} of {f_count} requested features",
                ranked.len()
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
        FeatureList {
            entries: ranked
                .into_iter()
                .take(f_count)
                .map(|(j, w)| (vocabulary.term(j).to_string(), w))
                .collect(),
            polarity_label: None,
        }
    };
    let c1 = to_list(positive, "c1");
    let c2 = to_list(negative, "c2");
    (c1, c2, warnings)
}

/// Builds the profile of eigenvector `eig_index` (1-based).
pub fn build_profile(
    corpus: &Corpus,
    basis: &EigenBasis,
    eig_index: usize,
    params: &ProfileParams,
) -> Result<DimensionProfile> {
    let values = basis.vector(eig_index)?;
    let (top, bottom) = select_unambiguous_fraction(values, params.unambiguous_fraction)?;
    let docs = corpus.documents();
    let rows: Vec<usize> = top.iter().chain(&bottom).copied().collect();
    let vectors: Vec<&BinaryVector> = rows.iter().map(|&r| &docs[basis.active[r]].vector).collect();
    let labels: Vec<i8> = top
        .iter()
        .map(|_| 1)
        .chain(bottom.iter().map(|_| -1))
        .collect();
    let model = train_margin_classifier(&vectors, &labels, corpus.vocabulary().len(), params.c_param)?;
    let (list_c1, list_c2, warnings) = mmfr(corpus.vocabulary(), &model, params.f_count);
    let ids = |rows: &[usize]| -> Vec<String> {
        rows.iter()
            .map(|&r| docs[basis.active[r]].id.clone())
            .collect()
    };
    Ok(DimensionProfile {
        eig_index,
        top_ids: ids(&top),
        bottom_ids: ids(&bottom),
        list_c1,
        list_c2,
        warnings,
        model: Some(model),
    })
}

/// One profile per eigenvector `e_2 … e_m`. The first eigenvector is
/// skipped: it puts every document on the same side.
pub fn build_profiles(
    corpus: &Corpus,
    basis: &EigenBasis,
    params: &ProfileParams,
) -> Result<Vec<DimensionProfile>> {
    if basis.m() < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 eigenvectors to build profiles".to_string(),
        ));
    }
    if basis.n_total() != corpus.len() {
        return Err(Error::InvalidArgument(format!(
            "basis covers {} documents but the corpus has {}",
            basis.n_total(),
            corpus.len()
        )));
    }
    (2..=basis.m())
        .map(|i| build_profile(corpus, basis, i, params))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn unambiguous_sixteen() {
        let values: Vec<f64> = (1..=16).rev().map(|v| v as f64).collect();
        let (top, bottom) = select_unambiguous(&values).unwrap();
        assert_eq!(top, vec![0, 1]);
        assert_eq!(bottom, vec![14, 15]);
    }

    #[test]
    fn unambiguous_quarter_of_2000() {
        let values: Vec<f64> = (0..2000).map(|v| ((v * 7919) % 2000) as f64).collect();
        let (top, bottom) = select_unambiguous(&values).unwrap();
        assert_eq!(top.len() + bottom.len(), 500);
    }

    #[test]
    fn unambiguous_too_small() {
        let values = [0.0; 15];
        assert_eq!(
            select_unambiguous(&values),
            Err(Error::TooSmall { needed: 16, got: 15 })
        );
    }

    #[test]
    fn unambiguous_ties_by_position() {
        // rows 1 and 2 tie at the top boundary, rows 13 and 14 at the bottom
        let mut values = vec![0.0; 16];
        values[0] = 9.0;
        values[1] = 5.0;
        values[2] = 5.0;
        values[13] = -5.0;
        values[14] = -5.0;
        values[15] = -9.0;
        let (top, bottom) = select_unambiguous(&values).unwrap();
        assert_eq!(top, vec![0, 1]);
        assert_eq!(bottom, vec![14, 15]);
    }

    #[test]
    fn mmfr_ordering_and_zero_weights() {
        let docs = [
            crate::corpus::RawDocument::new("a", "aa bb cc dd ee"),
            crate::corpus::RawDocument::new("b", "aa bb cc dd ee"),
        ];
        let c = crate::corpus::build_corpus(&docs, crate::corpus::Representation::Boaw, None, 0.0)
            .unwrap();
        let model = MarginModel {
            weights: vec![0.5, 0.0, 0.5, -1.0, 0.7],
            bias: 0.0,
            c_param: 1.0,
            training_accuracy: 1.0,
            iterations: 0,
        };
        let (c1, c2, warnings) = mmfr(c.vocabulary(), &model, 3);
        assert_eq!(c1.terms().collect::<Vec<_>>(), vec!["ee", "aa", "cc"]);
        assert_eq!(c2.terms().collect::<Vec<_>>(), vec!["dd"]);
        assert_eq!(warnings.len(), 1);
        let (c1, _, _) = mmfr(c.vocabulary(), &model, 1);
        assert_eq!(c1.entries, vec![("ee".to_string(), 0.7)]);
    }
}
