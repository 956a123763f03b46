//! Document ingestion: tokenization, vocabulary pruning and binary
//! bag-of-words vectors under the three supported representations.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of the surviving vocabulary removed by the high document
/// frequency cut in [`Representation::Bow`].
pub const DEFAULT_DF_PRUNE_FRACTION: f64 = 0.015;

/// A document as read from disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
    #[serde(default, rename = "label", skip_serializing_if = "Option::is_none")]
    pub gold_label: Option<i64>,
    #[serde(default, rename = "domain", skip_serializing_if = "Option::is_none")]
    pub domain_tag: Option<String>,
}

impl RawDocument {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        RawDocument {
            id: id.into(),
            text: text.into(),
            gold_label: None,
            domain_tag: None,
        }
    }

    pub fn with_label(mut self, label: i64) -> Self {
        self.gold_label = Some(label);
        self
    }

    pub fn with_domain(mut self, domain: impl Into<String>) -> Self {
        self.domain_tag = Some(domain.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    /// Unigrams with singletons and the most frequent terms removed.
    Bow,
    /// All unigrams; no document-frequency cut.
    Boaw,
    /// Only unigrams carrying a lexicon polarity.
    Bosw,
}

impl core::str::FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bow" => Ok(Representation::Bow),
            "boaw" => Ok(Representation::Boaw),
            "bosw" => Ok(Representation::Bosw),
            other => Err(Error::Config(format!("unknown representation `{other}`"))),
        }
    }
}

/// Splits text into lowercased maximal runs of alphabetic characters and
/// apostrophes. Digits and all other characters act as separators.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphabetic() || ch == '\'' {
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(core::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// True if a token may enter a vocabulary: at least two characters and at
/// least one alphabetic character.
fn is_eligible_term(term: &str) -> bool {
    term.chars().nth(1).is_some() && term.chars().any(char::is_alphabetic)
}

/// Sparse binary vector: sorted, deduplicated column indices of the ones.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BinaryVector(Vec<u32>);

impl BinaryVector {
    pub fn from_indices(mut indices: Vec<u32>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        BinaryVector(indices)
    }

    pub fn indices(&self) -> &[u32] {
        &self.0
    }

    pub fn nnz(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, column: u32) -> bool {
        self.0.binary_search(&column).is_ok()
    }

    /// Number of shared ones.
    pub fn dot(&self, other: &BinaryVector) -> usize {
        let (mut a, mut b) = (self.0.iter().peekable(), other.0.iter().peekable());
        let mut count = 0;
        while let (Some(&&x), Some(&&y)) = (a.peek(), b.peek()) {
            match x.cmp(&y) {
                core::cmp::Ordering::Less => {
                    a.next();
                }
                core::cmp::Ordering::Greater => {
                    b.next();
                }
                core::cmp::Ordering::Equal => {
                    count += 1;
                    a.next();
                    b.next();
                }
            }
        }
        count
    }

    /// Dot product against a dense weight vector.
    pub fn dot_dense(&self, weights: &[f64]) -> f64 {
        self.0.iter().map(|&j| weights[j as usize]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<u32>,
    #[serde(skip)]
    index: BTreeMap<String, u32>,
}

impl Vocabulary {
    fn from_terms(entries: Vec<(String, u32)>) -> Self {
        let mut terms = Vec::with_capacity(entries.len());
        let mut doc_freq = Vec::with_capacity(entries.len());
        for (term, df) in entries {
            terms.push(term);
            doc_freq.push(df);
        }
        let mut vocab = Vocabulary {
            terms,
            doc_freq,
            index: BTreeMap::new(),
        };
        vocab.rebuild_index();
        vocab
    }

    /// Restores the term lookup after deserialization.
    pub fn rebuild_index(&mut self) {
        self.index = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, column: usize) -> &str {
        &self.terms[column]
    }

    pub fn doc_freq(&self, column: usize) -> u32 {
        self.doc_freq[column]
    }

    pub fn column(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub vector: BinaryVector,
    pub gold_label: Option<i64>,
    pub domain_tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    documents: Vec<Document>,
    vocabulary: Vocabulary,
    mode: Representation,
    /// Terms removed by the high document-frequency cut, most frequent first.
    pruned_terms: Vec<String>,
}

impl Corpus {
    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn mode(&self) -> Representation {
        self.mode
    }

    pub fn pruned_terms(&self) -> &[String] {
        &self.pruned_terms
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn vectors(&self) -> impl ExactSizeIterator<Item = &BinaryVector> + '_ {
        self.documents.iter().map(|d| &d.vector)
    }

    /// Gold labels for every document, or `None` if any is missing.
    pub fn gold_labels(&self) -> Option<Vec<i64>> {
        self.documents.iter().map(|d| d.gold_label).collect()
    }

    /// Position of a document id in corpus order.
    pub fn position(&self, id: &str) -> Option<usize> {
        self.documents.iter().position(|d| d.id == id)
    }

    /// Vectorizes arbitrary text against this corpus' vocabulary.
    pub fn vectorize(&self, text: &str) -> BinaryVector {
        let columns = tokenize(text)
            .iter()
            .filter_map(|t| self.vocabulary.column(t))
            .collect();
        BinaryVector::from_indices(columns)
    }

    /// Must be called after deserializing a corpus.
    pub fn rebuild_index(&mut self) {
        self.vocabulary.rebuild_index();
    }
}

/// Builds the pruned vocabulary and the binary document vectors.
///
/// Singletons, one-character tokens and tokens without letters are removed
/// first. `Bow` then drops the `ceil(df_prune_fraction * V)` terms with the
/// highest document frequency, ordered by (frequency desc, term asc).
/// `Bosw` keeps only lexicon terms.
pub fn build_corpus(
    docs: &[RawDocument],
    mode: Representation,
    lexicon: Option<&SubjectivityLexicon>,
    df_prune_fraction: f64,
) -> Result<Corpus> {
    if !(0.0..1.0).contains(&df_prune_fraction) {
        return Err(Error::Config(format!(
            "df_prune_fraction must lie in [0, 1), got {df_prune_fraction}"
        )));
    }
    let lexicon = match (mode, lexicon) {
        (Representation::Bosw, None) => {
            return Err(Error::Config("BOSW representation requires a lexicon".to_string()))
        }
        (_, lex) => lex,
    };
    let mut seen_ids = BTreeSet::new();
    for doc in docs {
        if doc.id.is_empty() {
            return Err(Error::InvalidArgument("document id must be nonempty".to_string()));
        }
        if !seen_ids.insert(doc.id.as_str()) {
            return Err(Error::InvalidArgument(format!("duplicate document id `{}`", doc.id)));
        }
    }

    let tokenized: Vec<BTreeSet<String>> = docs
        .iter()
        .map(|d| tokenize(&d.text).into_iter().collect())
        .collect();
    let mut df: BTreeMap<&str, u32> = BTreeMap::new();
    for terms in &tokenized {
        for t in terms {
            *df.entry(t.as_str()).or_insert(0) += 1;
        }
    }

    let mut survivors: Vec<(&str, u32)> = df
        .into_iter()
        .filter(|&(t, n)| n >= 2 && is_eligible_term(t))
        .collect();

    let mut pruned_terms = Vec::new();
    match mode {
        Representation::Bow => {
            let remove = libm::ceil(df_prune_fraction * survivors.len() as f64) as usize;
            survivors.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
            pruned_terms = survivors
                .drain(..remove.min(survivors.len()))
                .map(|(t, _)| t.to_string())
                .collect();
            survivors.sort_by(|a, b| a.0.cmp(b.0));
        }
        Representation::Boaw => {}
        Representation::Bosw => {
            let lexicon = lexicon.expect("checked above");
            survivors.retain(|(t, _)| lexicon.polarity(t).is_some());
        }
    }
    if survivors.is_empty() {
        return Err(Error::DegenerateCorpus("no vocabulary term survived pruning".to_string()));
    }

    let vocabulary = Vocabulary::from_terms(
        survivors
            .into_iter()
            .map(|(t, n)| (t.to_string(), n))
            .collect(),
    );
    let documents = docs
        .iter()
        .zip(&tokenized)
        .map(|(raw, terms)| Document {
            id: raw.id.clone(),
            vector: BinaryVector::from_indices(
                terms.iter().filter_map(|t| vocabulary.column(t)).collect(),
            ),
            gold_label: raw.gold_label,
            domain_tag: raw.domain_tag.clone(),
        })
        .collect();

    Ok(Corpus {
        documents,
        vocabulary,
        mode,
        pruned_terms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn opposite(self) -> Polarity {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

/// Words with a positive or negative prior polarity. Neutral entries are
/// dropped at load time.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectivityLexicon {
    pub positive: BTreeSet<String>,
    pub negative: BTreeSet<String>,
}

impl SubjectivityLexicon {
    pub fn new(
        positive: impl IntoIterator<Item = impl Into<String>>,
        negative: impl IntoIterator<Item = impl Into<String>>,
    ) -> Result<Self> {
        let mut lex = SubjectivityLexicon::default();
        for t in positive {
            lex.insert(t.into(), Polarity::Positive)?;
        }
        for t in negative {
            lex.insert(t.into(), Polarity::Negative)?;
        }
        Ok(lex)
    }

    fn insert(&mut self, term: String, polarity: Polarity) -> Result<()> {
        let term = term.to_lowercase();
        let (own, other) = match polarity {
            Polarity::Positive => (&mut self.positive, &self.negative),
            Polarity::Negative => (&mut self.negative, &self.positive),
        };
        if other.contains(&term) {
            return Err(Error::LexiconConflict(term));
        }
        own.insert(term);
        Ok(())
    }

    pub fn polarity(&self, term: &str) -> Option<Polarity> {
        if self.positive.contains(term) {
            Some(Polarity::Positive)
        } else if self.negative.contains(term) {
            Some(Polarity::Negative)
        } else {
            None
        }
    }

    pub fn len(&self) -> usize {
        self.positive.len() + self.negative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positive.is_empty() && self.negative.is_empty()
    }
}

/// Parses `term<TAB>polarity` lines. Polarity is one of `positive`,
/// `negative` or `neutral`, case-insensitive. Blank lines are skipped.
pub fn load_lexicon(source: &str) -> Result<SubjectivityLexicon> {
    let mut lex = SubjectivityLexicon::default();
    for (lineno, line) in source.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (term, polarity) = match (fields.next(), fields.next(), fields.next()) {
            (Some(t), Some(p), None) if !t.trim().is_empty() => (t.trim(), p.trim()),
            _ => {
                return Err(Error::LexiconParse {
                    line: lineno + 1,
                    message: "expected `term<TAB>polarity`".to_string(),
                })
            }
        };
        match polarity.to_ascii_lowercase().as_str() {
            "positive" => lex.insert(term.to_string(), Polarity::Positive)?,
            "negative" => lex.insert(term.to_string(), Polarity::Negative)?,
            "neutral" => {}
            other => {
                return Err(Error::LexiconParse {
                    line: lineno + 1,
                    message: format!("unknown polarity `{other}`"),
                })
            }
        }
    }
    Ok(lex)
}

/// Parses the `key=value` clue format of the MPQA subjectivity lexicon
/// (`word1=` and `priorpolarity=` fields). Entries other than positive or
/// negative are dropped, as are words whose entries disagree.
pub fn load_mpqa_lexicon(source: &str) -> Result<SubjectivityLexicon> {
    let mut seen: BTreeMap<String, Option<Polarity>> = BTreeMap::new();
    for (lineno, line) in source.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut word = None;
        let mut prior = None;
        for field in line.split_whitespace() {
            if let Some(w) = field.strip_prefix("word1=") {
                word = Some(w);
            } else if let Some(p) = field.strip_prefix("priorpolarity=") {
                prior = Some(p);
            }
        }
        let (Some(word), Some(prior)) = (word, prior) else {
            return Err(Error::LexiconParse {
                line: lineno + 1,
                message: "missing word1= or priorpolarity= field".to_string(),
            });
        };
        let polarity = match prior.to_ascii_lowercase().as_str() {
            "positive" => Polarity::Positive,
            "negative" => Polarity::Negative,
            _ => continue,
        };
        seen.entry(word.to_lowercase())
            .and_modify(|p| {
                if *p != Some(polarity) {
                    *p = None;
                }
            })
            .or_insert(Some(polarity));
    }
    let mut lex = SubjectivityLexicon::default();
    for (word, polarity) in seen {
        if let Some(p) = polarity {
            lex.insert(word, p)?;
        }
    }
    Ok(lex)
}
