//! Synthetic corpora with two independent planted factors, a topic and a
//! sentiment, each tied to its own word lists.

use dimminer_core::corpus::{RawDocument, SubjectivityLexicon};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSpec {
    pub n_docs: usize,
    pub topic_vocab: usize,
    pub topic_draws: usize,
    pub sentiment_vocab: usize,
    pub sentiment_draws: usize,
    pub noise_vocab: usize,
    pub noise_draws: usize,
    /// Prefix for topic and noise words, so corpora built with different
    /// prefixes share only their sentiment words.
    pub prefix: String,
    pub seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            n_docs: 400,
            topic_vocab: 40,
            topic_draws: 8,
            sentiment_vocab: 20,
            sentiment_draws: 3,
            noise_vocab: 200,
            noise_draws: 10,
            prefix: "x".to_string(),
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    /// Gold label is the sentiment (1 positive, 0 negative); the domain tag
    /// names the topic.
    pub docs: Vec<RawDocument>,
    pub topic: Vec<u8>,
    pub sentiment: Vec<u8>,
    pub topic_words: [Vec<String>; 2],
    pub positive_words: Vec<String>,
    pub negative_words: Vec<String>,
}

impl PlantedCorpus {
    pub fn lexicon(&self) -> SubjectivityLexicon {
        SubjectivityLexicon::new(self.positive_words.clone(), self.negative_words.clone())
            .expect("planted word lists are disjoint")
    }

    pub fn topic_gold(&self) -> Vec<Option<i64>> {
        self.topic.iter().map(|&t| Some(t as i64)).collect()
    }

    pub fn sentiment_gold(&self) -> Vec<Option<i64>> {
        self.sentiment.iter().map(|&s| Some(s as i64)).collect()
    }
}

/// Letters-only word: the tokenizer splits on digits.
fn word(stem: &str, mut k: usize) -> String {
    let mut s = stem.to_string();
    for _ in 0..3 {
        s.push((b'a' + (k % 26) as u8) as char);
        k /= 26;
    }
    s
}

/// Documents alternate topics and, independently, sentiments, so both
/// factors are balanced. Each document draws its words without
/// replacement from its topic list, its sentiment list and the noise list.
pub fn generate(spec: &PlantedSpec) -> PlantedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let p = &spec.prefix;
    let topic_words = [
        (0..spec.topic_vocab).map(|k| word(&format!("{p}topa"), k)).collect::<Vec<_>>(),
        (0..spec.topic_vocab).map(|k| word(&format!("{p}topb"), k)).collect::<Vec<_>>(),
    ];
    let positive_words: Vec<String> = (0..spec.sentiment_vocab).map(|k| word("pos", k)).collect();
    let negative_words: Vec<String> = (0..spec.sentiment_vocab).map(|k| word("neg", k)).collect();
    let noise: Vec<String> = (0..spec.noise_vocab).map(|k| word(&format!("{p}noise"), k)).collect();

    let mut docs = Vec::with_capacity(spec.n_docs);
    let mut topic = Vec::with_capacity(spec.n_docs);
    let mut sentiment = Vec::with_capacity(spec.n_docs);
    for i in 0..spec.n_docs {
        let t = (i % 2) as u8;
        let s = ((i / 2) % 2) as u8;
        let sentiment_list = if s == 1 { &positive_words } else { &negative_words };
        let mut words: Vec<&String> = Vec::new();
        words.extend(topic_words[t as usize].choose_multiple(&mut rng, spec.topic_draws));
        words.extend(sentiment_list.choose_multiple(&mut rng, spec.sentiment_draws));
        words.extend(noise.choose_multiple(&mut rng, spec.noise_draws));
        words.shuffle(&mut rng);
        let text = words.iter().map(|w| w.as_str()).collect::<Vec<_>>().join(" ");
        docs.push(
            RawDocument::new(format!("{p}doc{i:04}"), text)
                .with_label(s as i64)
                .with_domain(if t == 0 { "topic-a" } else { "topic-b" }),
        );
        topic.push(t);
        sentiment.push(s);
    }
    PlantedCorpus {
        docs,
        topic,
        sentiment,
        topic_words,
        positive_words,
        negative_words,
    }
}
