use farm_core::fg::{detect, InstanceKind, RuleSet};
use farm_core::mol::parse_smiles;

const ORACLE: &str = include_str!("fixtures/fg_oracle.tsv");

fn oracle_rows() -> Vec<(&'static str, &'static str, Vec<&'static str>)> {
    ORACLE
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let c: Vec<&str> = l.split('\t').collect();
            (c[0], c[1], c[2].split(' ').collect())
        })
        .collect()
}

#[test]
fn curated_label_sets_match() {
    let rows = oracle_rows();
    assert!(rows.len() >= 50);
    let mut bad = Vec::new();
    for (name, smi, want) in &rows {
        let g = parse_smiles(smi).unwrap();
        let got = detect(&g);
        assert!(got.is_partition(g.num_atoms()), "{name}");
        if got.labels() != *want {
            bad.push(format!("{name} {smi}: want {want:?} got {:?}", got.labels()));
        }
    }
    assert!(bad.is_empty(), "{} mismatches:\n{}", bad.len(), bad.join("\n"));
}

#[test]
fn oracle_exercises_every_named_rule() {
    let rows = oracle_rows();
    let seen: std::collections::HashSet<&str> =
        rows.iter().flat_map(|r| r.2.iter().copied()).collect();
    let missing: Vec<&str> = RuleSet::builtin()
        .rules()
        .iter()
        .map(|r| r.label.as_str())
        .filter(|l| !seen.contains(l) && !l.ends_with("methyl"))
        .collect();
    assert!(missing.is_empty(), "rules without an oracle molecule: {missing:?}");
}

#[test]
fn subset_precedence() {
    // larger groups win over the groups they contain
    let cases = [
        ("CC(=O)O", "carboxyl", &["ketone", "hydroxyl"][..]),
        ("CC(=O)OC", "ester", &["ketone", "ether"][..]),
        ("CC(=O)N", "amide", &["ketone", "primary_amine"][..]),
        ("CC(=O)OC(C)=O", "carboxylic_anhydride", &["ester"][..]),
        ("CS(=O)(=O)O", "sulfonic_acid", &["sulfonyl", "hydroxyl"][..]),
    ];
    for (smi, big, small) in cases {
        let g = parse_smiles(smi).unwrap();
        let a = detect(&g);
        let labels = a.labels();
        assert!(labels.contains(&big), "{smi}: {labels:?}");
        for s in small {
            assert!(!labels.contains(s), "{smi}: {labels:?}");
        }
    }
}

#[test]
fn ring_atoms_always_in_ring_systems() {
    for (_, smi, _) in oracle_rows() {
        let g = parse_smiles(smi).unwrap();
        let a = detect(&g);
        for i in 0..g.num_atoms() {
            if g.is_ring_atom(i) {
                assert_eq!(a.instances[a.atom_to_instance[i]].kind, InstanceKind::RingSystem, "{smi}");
            }
        }
    }
}
