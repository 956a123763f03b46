#![allow(dead_code)]

use dimminer::config::PipelineConfig;
use dimminer::pipeline;
use dimminer::planted::{generate, PlantedCorpus, PlantedSpec};
use dimminer::session::Workspace;

pub fn planted(prefix: &str, seed: u64) -> PlantedCorpus {
    generate(&PlantedSpec {
        prefix: prefix.to_string(),
        seed,
        ..Default::default()
    })
}

/// Ingests, decomposes and profiles a planted corpus with the default
/// configuration.
pub fn workspace(planted: &PlantedCorpus) -> Workspace {
    let config = PipelineConfig::default();
    let stored = pipeline::ingest(&planted.docs, None, &config).unwrap();
    let basis = pipeline::decompose(&stored.corpus, &config).unwrap();
    Workspace::build(stored, basis, config).unwrap()
}
