//! Clustering metrics: label-aligned accuracy, the adjusted Rand index, and
//! a supervised cross-validation reference point.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::cluster::{ClusterRun, Partition};
use crate::corpus::{BinaryVector, Corpus};
use crate::error::{Error, Result};
use crate::margin::train_margin_classifier;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy_percent: f64,
    pub ari: f64,
    /// Corpus positions the metrics were restricted to, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<Vec<usize>>,
    pub runs_aggregated: usize,
    /// `(accuracy_percent, ari)` per run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_run_values: Option<Vec<(f64, f64)>>,
}

/// Maps gold class ids onto `{0, 1}` in ascending order of class id.
pub fn binary_gold(gold: &[i64]) -> Result<Vec<u8>> {
    let mut classes: Vec<i64> = gold.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() > 2 {
        return Err(Error::NotBinary(classes.len()));
    }
    Ok(gold
        .iter()
        .map(|g| if *g == classes[0] { 0 } else { 1 })
        .collect())
}

/// Percentage of documents whose cluster matches the gold class, under the
/// better of the two cluster↔class bijections. With `subset`, only those
/// corpus positions are scored.
pub fn accuracy(p: &Partition, gold: &[Option<i64>], subset: Option<&[usize]>) -> Result<f64> {
    if gold.len() != p.len() {
        return Err(Error::MismatchedPartitions(p.len(), gold.len()));
    }
    let scope: Vec<usize> = match subset {
        Some(s) => s.to_vec(),
        None => (0..p.len()).collect(),
    };
    if scope.is_empty() {
        return Err(Error::InvalidArgument("empty scoring subset".to_string()));
    }
    let mut labels = Vec::with_capacity(scope.len());
    for &i in &scope {
        match gold.get(i) {
            Some(Some(g)) => labels.push(*g),
            Some(None) => {
                return Err(Error::MissingLabels(format!("document at position {i}")))
            }
            None => return Err(Error::InvalidArgument(format!("position {i} out of range"))),
        }
    }
    let classes = binary_gold(&labels)?;
    let agree = scope
        .iter()
        .zip(&classes)
        .filter(|(&i, &c)| p.assign[i] == c)
        .count();
    let best = agree.max(scope.len() - agree);
    Ok(100.0 * best as f64 / scope.len() as f64)
}

fn choose2(x: u64) -> f64 {
    (x * x.saturating_sub(1) / 2) as f64
}

/// Adjusted Rand index between two labelings of the same items.
pub fn ari_labels<A: Ord + Copy, B: Ord + Copy>(u: &[A], v: &[B]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::MismatchedPartitions(u.len(), v.len()));
    }
    let n = u.len() as u64;
    let mut contingency: BTreeMap<(A, B), u64> = BTreeMap::new();
    let mut rows: BTreeMap<A, u64> = BTreeMap::new();
    let mut cols: BTreeMap<B, u64> = BTreeMap::new();
    for (&a, &b) in u.iter().zip(v) {
        *contingency.entry((a, b)).or_insert(0) += 1;
        *rows.entry(a).or_insert(0) += 1;
        *cols.entry(b).or_insert(0) += 1;
    }
    let index: f64 = contingency.values().map(|&c| choose2(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| choose2(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| choose2(c)).sum();
    let total = choose2(n);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_a * sum_b / total;
    let max_index = (sum_a + sum_b) / 2.0;
    if max_index == expected {
        // both labelings trivial (one cluster or all singletons)
        return Ok(if index == expected { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max_index - expected))
}

pub fn ari(u: &Partition, v: &Partition) -> Result<f64> {
    ari_labels(&u.assign, &v.assign)
}

/// ARI of a partition against the gold classes.
pub fn ari_gold(p: &Partition, gold: &[Option<i64>]) -> Result<f64> {
    let gold: Vec<i64> = gold
        .iter()
        .enumerate()
        .map(|(i, g)| g.ok_or_else(|| Error::MissingLabels(format!("document at position {i}"))))
        .collect::<Result<_>>()?;
    ari_labels(&p.assign, &gold)
}

/// Metrics of a single partition.
pub fn evaluate(p: &Partition, gold: &[Option<i64>], subset: Option<&[usize]>) -> Result<MetricReport> {
    let ari = match subset {
        None => ari_gold(p, gold)?,
        Some(s) => {
            let sub = Partition::new(s.iter().map(|&i| p.assign[i]).collect(), "");
            let g: Vec<Option<i64>> = s.iter().map(|&i| gold[i]).collect();
            ari_gold(&sub, &g)?
        }
    };
    Ok(MetricReport {
        accuracy_percent: accuracy(p, gold, subset)?,
        ari,
        subset: subset.map(<[usize]>::to_vec),
        runs_aggregated: 1,
        per_run_values: None,
    })
}

/// Mean metrics over every run of a [`ClusterRun`], keeping the per-run
/// values.
pub fn evaluate_runs(run: &ClusterRun, gold: &[Option<i64>], subset: Option<&[usize]>) -> Result<MetricReport> {
    let per_run = run
        .per_run_partitions
        .iter()
        .map(|p| evaluate(p, gold, subset).map(|r| (r.accuracy_percent, r.ari)))
        .collect::<Result<Vec<_>>>()?;
    let k = per_run.len() as f64;
    Ok(MetricReport {
        accuracy_percent: per_run.iter().map(|r| r.0).sum::<f64>() / k,
        ari: per_run.iter().map(|r| r.1).sum::<f64>() / k,
        subset: subset.map(<[usize]>::to_vec),
        runs_aggregated: per_run.len(),
        per_run_values: Some(per_run),
    })
}

/// Stratified `folds`-fold cross-validation of the margin classifier on the
/// gold labels. Returns the mean held-out accuracy in percent.
pub fn supervised_cv(corpus: &Corpus, folds: usize, c_param: f64, seed: u64) -> Result<f64> {
    if folds < 2 {
        return Err(Error::InvalidArgument("need at least 2 folds".to_string()));
    }
    let gold = corpus
        .gold_labels()
        .ok_or_else(|| Error::MissingLabels("cross-validation needs gold labels".to_string()))?;
    let classes = binary_gold(&gold)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; gold.len()];
    for class in 0..2u8 {
        let mut members: Vec<usize> = (0..gold.len()).filter(|&i| classes[i] == class).collect();
        // Fisher-Yates
        for i in (1..members.len()).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            members.swap(i, j);
        }
        for (k, &i) in members.iter().enumerate() {
            fold_of[i] = k % folds;
        }
    }
    let docs = corpus.documents();
    let mut total = 0.0;
    for fold in 0..folds {
        let (test, train): (Vec<usize>, Vec<usize>) = (0..docs.len()).partition(|&i| fold_of[i] == fold);
        if test.is_empty() {
            return Err(Error::InvalidArgument(format!("fold {fold} is empty")));
        }
        let x: Vec<&BinaryVector> = train.iter().map(|&i| &docs[i].vector).collect();
        let y: Vec<i8> = train.iter().map(|&i| if classes[i] == 0 { 1 } else { -1 }).collect();
        if !y.contains(&1) || !y.contains(&-1) {
            return Err(Error::DegenerateTraining(format!(
                "a class is absent from the training part of fold {fold}"
            )));
        }
        let model = train_margin_classifier(&x, &y, corpus.vocabulary().len(), c_param)?;
        let correct = test
            .iter()
            .filter(|&&i| {
                let want = if classes[i] == 0 { 1 } else { -1 };
                model.predict(&docs[i].vector) == want
            })
            .count();
        total += 100.0 * correct as f64 / test.len() as f64;
    }
    Ok(total / folds as f64)
}
