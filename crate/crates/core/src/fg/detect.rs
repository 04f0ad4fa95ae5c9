use serde::Serialize;

use crate::element;
use crate::fg::rules::{FgRule, RuleSet};
use crate::mol::{canonical_ranks, write_smiles, BondOrder, MolGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceKind {
    RingSystem,
    Rule,
    Default,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FgInstance {
    pub label: String,
    /// Sorted atom indices.
    pub atoms: Vec<usize>,
    pub core_smiles: String,
    #[serde(skip)]
    pub kind: InstanceKind,
}

/// A partition of a molecule's atoms into labelled instances. Instances are
/// ordered by the smallest canonical rank among their atoms, so the order
/// does not depend on input atom numbering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FgAssignment {
    pub instances: Vec<FgInstance>,
    pub atom_to_instance: Vec<usize>,
}

impl FgAssignment {
    pub fn label_of(&self, atom: usize) -> &str {
        &self.instances[self.atom_to_instance[atom]].label
    }

    /// Instance labels, sorted.
    pub fn labels(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.instances.iter().map(|i| i.label.as_str()).collect();
        v.sort_unstable();
        v
    }

    /// Every atom in exactly one instance, and the lookup table agrees.
    pub fn is_partition(&self, num_atoms: usize) -> bool {
        if self.atom_to_instance.len() != num_atoms {
            return false;
        }
        let mut seen = vec![false; num_atoms];
        for (k, inst) in self.instances.iter().enumerate() {
            if inst.atoms.is_empty() {
                return false;
            }
            for &a in &inst.atoms {
                if a >= num_atoms || seen[a] || self.atom_to_instance[a] != k {
                    return false;
                }
                seen[a] = true;
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Bonds of `g` with exactly one end inside instance `k`.
    pub fn attachment_count(&self, g: &MolGraph, k: usize) -> usize {
        g.bonds()
            .iter()
            .filter(|b| (self.atom_to_instance[b.a] == k) != (self.atom_to_instance[b.b] == k))
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectOptions {
    /// Claim fused ring systems before applying rules.
    pub ring_systems: bool,
}

impl Default for DetectOptions {
    fn default() -> Self {
        DetectOptions { ring_systems: true }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Detector<'a> {
    rules: &'a RuleSet,
    opts: DetectOptions,
}

impl Default for Detector<'static> {
    fn default() -> Self {
        Detector { rules: RuleSet::builtin(), opts: DetectOptions::default() }
    }
}

/// Detects functional groups with the bundled rules.
pub fn detect(g: &MolGraph) -> FgAssignment {
    Detector::default().detect(g)
}

/// Name of a fused ring system given as ring indices into `g.rings()`.
///
/// Rings are identified by their smallest canonical atom index and sorted by
/// it, then the sizes are combined in ascending order: "ring_5_6".
pub fn name_ring_system(g: &MolGraph, system: &[usize]) -> String {
    let ranks = canonical_ranks(g);
    ring_name_ranked(g, system, &ranks)
}

fn ring_name_ranked(g: &MolGraph, system: &[usize], ranks: &[usize]) -> String {
    let rings = &g.rings().rings;
    let mut keyed: Vec<(usize, usize)> = system
        .iter()
        .map(|&r| (rings[r].iter().map(|&a| ranks[a]).min().unwrap(), rings[r].len()))
        .collect();
    keyed.sort_unstable();
    let mut sizes: Vec<usize> = keyed.into_iter().map(|(_, n)| n).collect();
    sizes.sort_unstable();
    let mut name = String::from("ring");
    for s in sizes {
        name.push('_');
        name.push_str(&s.to_string());
    }
    name
}

/// Canonical SMILES of the instance's induced subgraph, removed neighbours
/// replaced by hydrogen.
pub fn core_structure(g: &MolGraph, atoms: &[usize]) -> String {
    write_smiles(&g.subgraph(atoms, true))
}

/// Default label for an atom no rule claimed.
pub fn element_label(g: &MolGraph, atom: usize) -> String {
    format!("elem_{}", element::symbol(g.atom(atom).element).to_lowercase())
}

struct Draft {
    label: String,
    kind: InstanceKind,
    atoms: Vec<usize>,
}

impl<'a> Detector<'a> {
    pub fn new(rules: &'a RuleSet, opts: DetectOptions) -> Self {
        Detector { rules, opts }
    }

    pub fn detect(&self, g: &MolGraph) -> FgAssignment {
        let n = g.num_atoms();
        let ranks = canonical_ranks(g);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&a| ranks[a]);

        let mut owner: Vec<Option<usize>> = vec![None; n];
        let mut drafts: Vec<Draft> = Vec::new();
        let claim = |drafts: &mut Vec<Draft>, owner: &mut Vec<Option<usize>>, d: Draft| {
            for &a in &d.atoms {
                owner[a] = Some(drafts.len());
            }
            drafts.push(d);
        };

        if self.opts.ring_systems {
            let info = g.rings();
            for (s, system) in info.fused_systems.iter().enumerate() {
                let mut atoms = info.system_atoms(s);
                let ring_atoms = atoms.clone();
                for &a in &ring_atoms {
                    for e in g.neighbors(a) {
                        if g.bond(e.bond).order == BondOrder::Double
                            && !g.is_ring_atom(e.atom)
                            && g.degree(e.atom) == 1
                        {
                            atoms.push(e.atom);
                        }
                    }
                }
                atoms.sort_unstable();
                atoms.dedup();
                let label = ring_name_ranked(g, system, &ranks);
                claim(&mut drafts, &mut owner, Draft { label, kind: InstanceKind::RingSystem, atoms });
            }
        }

        let (defaults, named): (Vec<&FgRule>, Vec<&FgRule>) =
            self.rules.rules().iter().partition(|r| r.is_default());
        for rule in named {
            for pat in &rule.patterns {
                for &root in &order {
                    if owner[root].is_some() {
                        continue;
                    }
                    let hit = {
                        let owner = &owner;
                        pat.match_at(g, root, Some(&ranks), &|k, a| {
                            pat.map_class(k) == 0 || owner[a].is_none()
                        })
                    };
                    if let Some(map) = hit {
                        let mut atoms: Vec<usize> = (0..pat.len())
                            .filter(|&k| pat.map_class(k) > 0)
                            .map(|k| map[k])
                            .collect();
                        atoms.sort_unstable();
                        claim(
                            &mut drafts,
                            &mut owner,
                            Draft { label: rule.label.clone(), kind: InstanceKind::Rule, atoms },
                        );
                    }
                }
            }
        }

        // Leftovers: one label per atom, then merge same-label neighbours.
        let mut leftover_label: Vec<Option<String>> = vec![None; n];
        for &a in &order {
            if owner[a].is_none() {
                let label = defaults
                    .iter()
                    .find(|r| r.patterns.iter().any(|p| p.matches_at(g, a)))
                    .map(|r| r.label.clone())
                    .unwrap_or_else(|| element_label(g, a));
                leftover_label[a] = Some(label);
            }
        }
        for &start in &order {
            if owner[start].is_some() {
                continue;
            }
            let label = leftover_label[start].clone().unwrap();
            let mut atoms = vec![start];
            let mut stack = vec![start];
            owner[start] = Some(usize::MAX);
            while let Some(a) = stack.pop() {
                for e in g.neighbors(a) {
                    let b = e.atom;
                    if owner[b].is_none() && leftover_label[b].as_deref() == Some(label.as_str()) {
                        owner[b] = Some(usize::MAX);
                        atoms.push(b);
                        stack.push(b);
                    }
                }
            }
            atoms.sort_unstable();
            claim(&mut drafts, &mut owner, Draft { label, kind: InstanceKind::Default, atoms });
        }

        drafts.sort_by_key(|d| d.atoms.iter().map(|&a| ranks[a]).min().unwrap());
        let mut atom_to_instance = vec![usize::MAX; n];
        let instances = drafts
            .into_iter()
            .enumerate()
            .map(|(k, d)| {
                for &a in &d.atoms {
                    atom_to_instance[a] = k;
                }
                FgInstance {
                    core_smiles: core_structure(g, &d.atoms),
                    label: d.label,
                    atoms: d.atoms,
                    kind: d.kind,
                }
            })
            .collect();
        FgAssignment { instances, atom_to_instance }
    }
}

/// Debug dump record: `{smiles, instances:[{label, atoms, core_smiles}]}`.
pub fn assignment_json(g: &MolGraph, a: &FgAssignment) -> serde_json::Value {
    serde_json::json!({
        "smiles": write_smiles(g),
        "instances": a.instances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mol::parse_smiles;

    fn labels(smi: &str) -> Vec<String> {
        let g = parse_smiles(smi).unwrap();
        let a = detect(&g);
        assert!(a.is_partition(g.num_atoms()), "{smi}");
        a.labels().into_iter().map(String::from).collect()
    }

    #[test]
    fn acetone_ketone_with_two_alkyls() {
        let g = parse_smiles("CC(=O)C").unwrap();
        let a = detect(&g);
        assert_eq!(a.label_of(1), "ketone");
        assert_eq!(a.label_of(2), "ketone");
        assert_eq!(a.label_of(0), "alkyl");
        assert_eq!(a.label_of(3), "alkyl");
        assert_eq!(a.instances.len(), 3);
        let ketone = &a.instances[a.atom_to_instance[1]];
        assert_eq!(ketone.core_smiles, "C=O");
    }

    #[test]
    fn acid_is_not_split() {
        assert_eq!(labels("CC(=O)O"), ["alkyl", "carboxyl"]);
        assert_eq!(labels("CCO"), ["alkyl", "hydroxyl"]);
    }

    #[test]
    fn rings_and_names() {
        assert_eq!(labels("c1ccc2[nH]ccc2c1"), ["ring_5_6"]);
        assert_eq!(labels("c1ccc(-c2ccccc2)cc1"), ["ring_6", "ring_6"]);
        assert_eq!(labels("O=C1C=CC(=O)C=C1"), ["ring_6"]);
        let g = parse_smiles("Cc1ccccc1").unwrap();
        let a = detect(&g);
        let ring = a.instances.iter().find(|i| i.kind == InstanceKind::RingSystem).unwrap();
        assert_eq!(ring.core_smiles, "c1ccccc1");
        assert_eq!(a.attachment_count(&g, a.atom_to_instance[1]), 1);
    }

    #[test]
    fn aspirin_and_salicylic_acid() {
        assert_eq!(labels("CC(=O)Oc1ccccc1C(=O)O"), ["alkyl", "carboxyl", "ester", "ring_6"]);
        assert_eq!(labels("Oc1ccccc1C(=O)O"), ["carboxyl", "hydroxyl", "ring_6"]);
    }

    #[test]
    fn defaults_merge() {
        assert_eq!(labels("CCCC"), ["alkyl"]);
        assert_eq!(labels("C=CC"), ["alkene", "alkyl"]);
        assert_eq!(labels("C"), ["alkyl"]);
        assert_eq!(labels("[Na+].[Cl-]"), ["chloro", "elem_na"]);
    }

    #[test]
    fn json_dump_shape() {
        let g = parse_smiles("CCO").unwrap();
        let v = assignment_json(&g, &detect(&g));
        assert_eq!(v["smiles"], "CCO");
        assert_eq!(v["instances"].as_array().unwrap().len(), 2);
        assert!(v["instances"][0]["core_smiles"].is_string());
    }
}
