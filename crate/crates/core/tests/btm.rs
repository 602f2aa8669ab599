use std::collections::{BTreeSet, HashMap};

use pharmwatch::btm::*;
use pharmwatch::synth::planted_topics;
use statrs::function::gamma::ln_gamma;

/// Unnormalized log posterior of a full assignment, from the Dirichlet
/// multinomial marginals of θ and φ.
fn log_joint(biterms: &[Biterm], z: &[usize], k: usize, w: usize, alpha: f64, beta: f64) -> f64 {
    let mut n_z = vec![0.0; k];
    let mut n_wz = vec![vec![0.0; k]; w];
    for (b, &t) in biterms.iter().zip(z) {
        n_z[t] += 1.0;
        n_wz[b.w1][t] += 1.0;
        n_wz[b.w2][t] += 1.0;
    }
    let mut lp = 0.0;
    for t in 0..k {
        lp += ln_gamma(n_z[t] + alpha);
        lp += ln_gamma(w as f64 * beta) - ln_gamma(2.0 * n_z[t] + w as f64 * beta);
        for row in &n_wz {
            lp += ln_gamma(row[t] + beta) - ln_gamma(beta);
        }
    }
    lp
}

fn exact_posterior(biterms: &[Biterm], w: usize, alpha: f64, beta: f64) -> Vec<f64> {
    let n = biterms.len();
    let logs: Vec<f64> = (0..1usize << n)
        .map(|s| {
            let z: Vec<usize> = (0..n).map(|i| (s >> i) & 1).collect();
            log_joint(biterms, &z, 2, w, alpha, beta)
        })
        .collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let un: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = un.iter().sum();
    un.into_iter().map(|u| u / total).collect()
}

#[test]
fn chains_match_enumerated_posterior() {
    let biterms = vec![
        Biterm::new(0, 1),
        Biterm::new(0, 1),
        Biterm::new(2, 3),
        Biterm::new(2, 2),
    ];
    let (alpha, beta) = (0.5, 0.1);
    let exact = exact_posterior(&biterms, 4, alpha, beta);
    let chains = 1000;
    let mut counts = vec![0usize; exact.len()];
    for seed in 0..chains {
        let cfg = BtmConfig {
            alpha: Some(alpha),
            beta,
            seed,
            ..BtmConfig::new(2)
        };
        let mut s = GibbsSampler::new(&biterms, 4, &cfg).unwrap();
        s.run(100);
        let state = s.assignments().iter().enumerate().map(|(i, &z)| z << i).sum::<usize>();
        counts[state] += 1;
    }
    let tv: f64 = exact
        .iter()
        .zip(&counts)
        .map(|(p, &c)| (p - c as f64 / chains as f64).abs())
        .sum::<f64>()
        / 2.0;
    assert!(tv < 0.07, "total variation {tv}");
}

#[test]
fn counts_stay_conserved_every_sweep() {
    let p = planted_topics(3, 6, 200, 11);
    let bs = extract_biterms(&p.stats.docs, Window::Unbounded);
    let mut s = GibbsSampler::new(
        &bs.all,
        p.stats.vocab_size(),
        &BtmConfig {
            seed: 3,
            ..BtmConfig::new(3)
        },
    )
    .unwrap();
    for _ in 0..25 {
        s.sweep();
        assert!(s.counts_conserved());
        assert_eq!(s.topic_counts().iter().sum::<u64>() as usize, bs.all.len());
        for z in 0..3 {
            let words: u64 = (0..s.vocab_size()).map(|w| s.word_topic_count(w, z)).sum();
            assert_eq!(words, 2 * s.topic_counts()[z]);
        }
    }
}

#[test]
fn two_planted_communities_are_separated() {
    let p = planted_topics(2, 6, 200, 4);
    let k = choose_k(&p.stats, None);
    assert_eq!(k, 2);
    let bs = extract_biterms(&p.stats.docs, Window::Unbounded);
    let model = fit(
        &bs.all,
        &p.stats.vocabulary,
        &BtmConfig {
            seed: 4,
            ..BtmConfig::new(k)
        },
    )
    .unwrap();
    let index = p.stats.vocabulary_index();
    let mut matched = BTreeSet::new();
    for z in 0..k {
        let top: BTreeSet<usize> = model
            .top_words(z, 5)
            .iter()
            .map(|(w, _)| index.get(w).unwrap())
            .collect();
        let community = p
            .communities
            .iter()
            .position(|c| top.iter().all(|w| c.contains(w)))
            .expect("top words from one community");
        matched.insert(community);
    }
    assert_eq!(matched.len(), 2);

    let dists = infer_corpus(&model, &p.stats.docs, Window::Unbounded);
    let mut map = HashMap::new();
    for (d, &c) in dists.iter().zip(&p.doc_community) {
        map.entry(c).or_insert(d.dominant_topic);
        assert_eq!(map[&c], d.dominant_topic);
    }
}

#[test]
fn saved_model_reproduces_inference() {
    let p = planted_topics(2, 6, 60, 8);
    let bs = extract_biterms(&p.stats.docs, Window::Unbounded);
    let model = fit(
        &bs.all,
        &p.stats.vocabulary,
        &BtmConfig {
            iterations: 50,
            ..BtmConfig::new(2)
        },
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.btm");
    save_model(&path, &model).unwrap();
    let back = load_model(&path).unwrap();
    let a = infer_corpus(&model, &p.stats.docs, Window::Unbounded);
    let b = infer_corpus(&back, &p.stats.docs, Window::Unbounded);
    assert_eq!(a, b);
}
