use std::collections::HashMap;

use farm_core::corpus::{read_corpus_str, Synth};
use farm_core::fg::detect;
use farm_core::fragment::fragment;
use farm_core::mol::{parse_smiles, write_smiles};
use farm_core::par::Execution;
use farm_core::tokenize::{strip, tokenize, TokenCounts, Vocab};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CORPUS: &str = include_str!("../data/corpus_10k.smi");
const HELDOUT: &str = include_str!("../data/heldout_1k.smi");

#[test]
fn bundled_corpora_parse_completely() {
    for (text, n) in [(CORPUS, 10_000), (HELDOUT, 1000)] {
        let recs = read_corpus_str(text);
        assert_eq!(recs.len(), n);
        for r in &recs {
            parse_smiles(&r.smiles).unwrap_or_else(|e| panic!("line {}: {e}", r.line));
        }
    }
}

#[test]
fn stripping_tokens_gives_back_canonical_smiles() {
    for r in read_corpus_str(CORPUS) {
        let g = parse_smiles(&r.smiles).unwrap();
        let ts = tokenize(&g, &detect(&g));
        assert_eq!(strip(&ts).unwrap(), write_smiles(&g), "line {}", r.line);
        assert_eq!(ts.source_canonical_smiles, write_smiles(&g));
    }
}

#[test]
fn every_atom_in_exactly_one_instance() {
    let mut violations = Vec::new();
    for r in read_corpus_str(CORPUS).into_iter().chain(read_corpus_str(HELDOUT)) {
        let g = parse_smiles(&r.smiles).unwrap();
        if !detect(&g).is_partition(g.num_atoms()) {
            violations.push(r.smiles);
        }
    }
    assert!(violations.is_empty(), "{violations:?}");
}

#[test]
fn vocabulary_counts_match_a_brute_force_count() {
    let lines: Vec<String> = read_corpus_str(CORPUS)
        .iter()
        .take(3000)
        .map(|r| {
            let g = parse_smiles(&r.smiles).unwrap();
            tokenize(&g, &detect(&g)).to_line()
        })
        .collect();
    let mut brute: HashMap<String, u64> = HashMap::new();
    for l in &lines {
        for t in l.split(' ') {
            *brute.entry(t.to_string()).or_default() += 1;
        }
    }
    for exec in [Execution::Sequential, Execution::Parallel] {
        let counts = TokenCounts::from_lines(&lines, exec);
        assert_eq!(counts.counts, brute);
        let v1 = Vocab::from_counts(&counts, 1);
        let v5 = Vocab::from_counts(&counts, 5);
        assert_eq!(v1.size(), brute.len());
        assert_eq!(v5.size(), brute.values().filter(|&&c| c >= 5).count());
        assert!(v5.size() <= v1.size());
    }
}

fn random_perm(n: usize, seed: u64) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn fg_outputs_do_not_depend_on_atom_order(mol_seed in 0u64..10_000, perm_seed in any::<u64>()) {
        let g = parse_smiles(&Synth::new(mol_seed).molecule()).unwrap();
        let perm = random_perm(g.num_atoms(), perm_seed);
        let p = g.permuted(&perm);
        let (a, b) = (detect(&g), detect(&p));
        prop_assert_eq!(a.labels(), b.labels());
        // new atom k is old atom perm[k]: same label and same instance contents
        for (k, &old) in perm.iter().enumerate() {
            prop_assert_eq!(a.label_of(old), b.label_of(k));
            let ia = &a.instances[a.atom_to_instance[old]];
            let ib = &b.instances[b.atom_to_instance[k]];
            prop_assert_eq!(&ia.core_smiles, &ib.core_smiles);
            prop_assert_eq!(ia.atoms.len(), ib.atoms.len());
        }
        prop_assert_eq!(tokenize(&g, &a), tokenize(&p, &b));
        prop_assert_eq!(fragment(&g, &a), fragment(&p, &b));
    }
}
