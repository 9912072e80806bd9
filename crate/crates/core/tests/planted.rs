use std::time::Instant;

use xref_core::anchors::gram_schmidt_anchors;
use xref_core::cooccurrence::build_cooccurrence;
use xref_core::inference::{infer_all, InferenceConfig};
use xref_core::synthetic::{optimal_matching, planted_corpus, PlantedConfig};
use xref_core::topics::{recover_topics, SolverConfig};
use xref_core::{Cooccurrence, Matrix};

#[test]
fn recovers_planted_anchors_and_topics() {
    let start = Instant::now();
    let cfg = PlantedConfig::default();
    let planted = planted_corpus(&cfg).unwrap();
    let counts = planted.counts();
    let cooc: Cooccurrence = build_cooccurrence(&counts).unwrap();
    let anchors = gram_schmidt_anchors(&cooc, cfg.topics, 10, &counts.column_doc_freq()).unwrap();
    let found = anchors.anchor_words().unwrap();
    let hits = planted.anchors.iter().filter(|a| found.contains(a)).count();
    assert!(hits >= 9, "recovered {hits}/10 anchors: {found:?} vs {:?}", planted.anchors);

    let model = recover_topics(&cooc, &anchors, &SolverConfig::default()).unwrap();
    let k = cfg.topics;
    let mut cost = Matrix::zeros(k, k);
    for t in 0..k {
        for r in 0..k {
            cost[(t, r)] = (0..cfg.vocab).map(|w| (planted.topic_word[(w, t)] - model.topic_word()[(w, r)]).abs()).sum();
        }
    }
    let m = optimal_matching(&cost).unwrap();
    let errs: Vec<f64> = (0..k).map(|t| cost[(t, m[t])]).collect();
    println!("L1 errors {errs:?}");
    assert!(errs.iter().all(|&e| e <= 0.1), "{errs:?}");

    // A document of only topic t's anchor word lands on the matching topic.
    let docs = infer_all(&counts, &model, &InferenceConfig::default()).unwrap();
    assert_eq!(docs.len(), cfg.docs);
    for (t, &anchor) in planted.anchors.iter().enumerate() {
        let d = xref_core::inference::infer_doc_topics(0, &[(anchor as u32, 3)], &model, &InferenceConfig::default()).unwrap();
        assert!(d.theta[m[t]] > 0.9, "{:?}", d.theta);
    }
    println!("elapsed {:?}", start.elapsed());
}
