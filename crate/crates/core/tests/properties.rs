use std::collections::BTreeSet;

use dimminer_core::cluster::{lloyd, two_means, Embedding, Partition};
use dimminer_core::corpus::{build_corpus, RawDocument, Representation};
use dimminer_core::dimension::{DimensionProfile, FeatureList};
use dimminer_core::eval::{accuracy, ari};
use dimminer_core::selection::{adapt_select, eig_similarity, ListPair};
use proptest::prelude::*;

fn words() -> impl Strategy<Value = BTreeSet<String>> {
    prop::collection::btree_set("[a-h]{2}", 0..12)
}

fn points() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, 4..40)
}

fn line(values: &[f64]) -> Embedding {
    Embedding::from_points(
        values.iter().map(|&v| vec![v, v * v * 0.1]).collect(),
        (0..values.len()).collect(),
        values.len(),
    )
    .unwrap()
}

fn list(terms: &BTreeSet<String>) -> FeatureList {
    FeatureList {
        entries: terms.iter().map(|t| (t.clone(), 1.0)).collect(),
        polarity_label: None,
    }
}

fn profile(eig_index: usize, c1: &BTreeSet<String>, c2: &BTreeSet<String>) -> DimensionProfile {
    DimensionProfile {
        eig_index,
        top_ids: vec![],
        bottom_ids: vec![],
        list_c1: list(c1),
        list_c2: list(c2),
        warnings: vec![],
        model: None,
    }
}

fn text_docs() -> impl Strategy<Value = Vec<RawDocument>> {
    prop::collection::vec(prop::collection::vec("[a-f]{1,3}", 0..12), 3..25).prop_map(|docs| {
        docs.into_iter()
            .enumerate()
            .map(|(i, w)| RawDocument::new(format!("d{i}"), w.join(" ")))
            .collect()
    })
}

proptest! {
    #[test]
    fn similarity_is_symmetric(a1 in words(), a2 in words(), b1 in words(), b2 in words()) {
        let a = ListPair::new(a1.iter().map(String::as_str), a2.iter().map(String::as_str));
        let b = ListPair::new(b1.iter().map(String::as_str), b2.iter().map(String::as_str));
        prop_assert_eq!(eig_similarity(&a, &b), eig_similarity(&b, &a));
    }

    #[test]
    fn swapping_lists_keeps_the_winner(
        source in (words(), words()),
        targets in prop::collection::vec((words(), words(), any::<bool>()), 1..6),
    ) {
        let src = profile(2, &source.0, &source.1);
        let plain: Vec<_> = targets.iter().enumerate().map(|(k, t)| profile(k + 2, &t.0, &t.1)).collect();
        let swapped: Vec<_> = targets
            .iter()
            .enumerate()
            .map(|(k, t)| if t.2 { profile(k + 2, &t.1, &t.0) } else { profile(k + 2, &t.0, &t.1) })
            .collect();
        let a = adapt_select(&src, &plain).unwrap();
        let b = adapt_select(&src, &swapped).unwrap();
        let c = adapt_select(&src.mirrored(), &plain).unwrap();
        for other in [b, c] {
            prop_assert_eq!(a.eig_index, other.eig_index);
            prop_assert_eq!(a.score, other.score);
            prop_assert_eq!(a.gap, other.gap);
        }
        prop_assert_eq!(a.gap, a.score - a.second_best_score);
    }

    #[test]
    fn accuracy_ignores_label_names(
        assign in prop::collection::vec(0u8..2, 2..60),
        gold_bits in prop::collection::vec(any::<bool>(), 60),
        a in -5i64..5, b in 6i64..20,
    ) {
        let n = assign.len();
        let gold: Vec<Option<i64>> = gold_bits[..n].iter().map(|&g| Some(if g { a } else { b })).collect();
        let renamed: Vec<Option<i64>> = gold_bits[..n].iter().map(|&g| Some(if g { b } else { a })).collect();
        let p = Partition::new(assign, "p");
        let base = accuracy(&p, &gold, None).unwrap();
        prop_assert_eq!(base, accuracy(&p.swapped(), &gold, None).unwrap());
        prop_assert_eq!(base, accuracy(&p, &renamed, None).unwrap());
        prop_assert!(base >= 50.0);
    }

    #[test]
    fn ari_symmetric_and_permutation_invariant(
        u in prop::collection::vec(0u8..2, 2..50),
        v_bits in prop::collection::vec(0u8..2, 50),
    ) {
        let pu = Partition::new(u.clone(), "u");
        let pv = Partition::new(v_bits[..u.len()].to_vec(), "v");
        let x = ari(&pu, &pv).unwrap();
        prop_assert_eq!(x, ari(&pv, &pu).unwrap());
        prop_assert_eq!(x, ari(&pu.swapped(), &pv).unwrap());
        prop_assert_eq!(ari(&pu, &pu).unwrap(), 1.0);
    }

    #[test]
    fn lloyd_never_increases_sse(values in points(), seed in 0u64..1000, run in 0usize..10) {
        let trace = lloyd(&line(&values), seed, run).unwrap();
        for w in trace.sse_history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "{:?}", trace.sse_history);
        }
    }

    #[test]
    fn partition_is_scale_invariant(values in points(), seed in 0u64..1000, c in 0.5f64..8.0) {
        // powers of two scale exactly, so the runs are bit-for-bit identical
        let c = c.log2().round().exp2();
        let emb = line(&values);
        let a = two_means(&emb, 3, seed).unwrap();
        let b = two_means(&emb.scaled(c), 3, seed).unwrap();
        prop_assert_eq!(a.canonical.assign, b.canonical.assign);
    }

    #[test]
    fn relabeling_the_input_order_keeps_sizes(values in points(), seed in 0u64..100) {
        // the partition sizes are a property of the point set only when the
        // clusters are well separated; shift one half far away
        let shifted: Vec<f64> = values.iter().enumerate().map(|(i, v)| if i % 2 == 0 { v + 1000.0 } else { *v }).collect();
        let mut reversed = shifted.clone();
        reversed.reverse();
        let a = two_means(&line(&shifted), 5, seed).unwrap();
        let b = two_means(&line(&reversed), 5, seed).unwrap();
        let mut sa = a.canonical.sizes();
        let mut sb = b.canonical.sizes();
        sa.sort();
        sb.sort();
        prop_assert_eq!(sa, sb);
    }

    #[test]
    fn bow_terms_are_a_subset_of_boaw(docs in text_docs(), frac in 0.0f64..0.5) {
        let boaw = build_corpus(&docs, Representation::Boaw, None, 0.0);
        let bow = build_corpus(&docs, Representation::Bow, None, frac);
        if let (Ok(boaw), Ok(bow)) = (&boaw, &bow) {
            let all: BTreeSet<_> = boaw.vocabulary().terms().iter().collect();
            for t in bow.vocabulary().terms() {
                prop_assert!(all.contains(t));
                prop_assert!(bow.vocabulary().doc_freq(bow.vocabulary().column(t).unwrap() as usize) >= 2);
            }
        }
        if boaw.is_err() {
            prop_assert!(bow.is_err());
        }
    }

    #[test]
    fn stronger_df_cut_shrinks_vocabulary(docs in text_docs(), f1 in 0.0f64..0.4, f2 in 0.0f64..0.4) {
        let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
        let small = build_corpus(&docs, Representation::Bow, None, hi);
        let large = build_corpus(&docs, Representation::Bow, None, lo);
        if let Ok(small) = small {
            let large = large.unwrap();
            let big: BTreeSet<_> = large.vocabulary().terms().iter().collect();
            for t in small.vocabulary().terms() {
                prop_assert!(big.contains(t));
            }
        }
    }

    #[test]
    fn vectors_are_binary_and_sorted(docs in text_docs()) {
        if let Ok(c) = build_corpus(&docs, Representation::Boaw, None, 0.0) {
            for d in c.documents() {
                let idx = d.vector.indices();
                prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(idx.iter().all(|&j| (j as usize) < c.vocabulary().len()));
            }
        }
    }
}
