//! FG knowledge-graph construction: one entity per distinct (label, core).

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::fg::{detect, normalize_label, DetectOptions, Detector, FgAssignment, InstanceKind, RuleSet};
use crate::fragment::entity_id;
use crate::kg::descriptors::{descriptors, SolubilityModel};
use crate::mol::{parse_smiles, MolGraph};
use crate::par::Execution;

pub const CONTAIN_ATOM: &str = "contain_atom";
pub const CONTAIN_BOND: &str = "contain_bond";
pub const FUNCTIONAL_GROUP: &str = "functional_group";
pub const NUM_SUBSTITUTES: &str = "num_substitutes";
pub const IS_DONOR: &str = "is_hydrogen_bond_donor";
pub const IS_ACCEPTOR: &str = "is_hydrogen_bond_acceptor";
pub const LOGP: &str = "logp";
pub const WATER_SOLUBILITY: &str = "water_solubility";
pub const CORE_SMILES: &str = "core_smiles";

const FIXED_RELATIONS: [&str; 9] = [
    CONTAIN_ATOM,
    CONTAIN_BOND,
    FUNCTIONAL_GROUP,
    NUM_SUBSTITUTES,
    IS_DONOR,
    IS_ACCEPTOR,
    LOGP,
    WATER_SOLUBILITY,
    CORE_SMILES,
];

/// Groups that donate a hydrogen bond.
pub const DONORS: [&str; 17] = [
    "Hydroxyl",
    "Hydroperoxy",
    "Primary amine",
    "Secondary amine",
    "Hydrazone",
    "Primary ketimine",
    "Secondary ketimine",
    "Primary aldimine",
    "Amide",
    "Sulfhydryl",
    "Sulfonic acid",
    "Thiolester",
    "Hemiacetal",
    "Hemiketal",
    "Carboxyl",
    "Aldoxime",
    "Ketoxim",
];

/// Groups that accept a hydrogen bond.
pub const ACCEPTORS: [&str; 25] = [
    "Ether",
    "Peroxy",
    "Haloformyl",
    "Ketone",
    "Aldehyde",
    "Carboxylate",
    "Carboxyl",
    "Ester",
    "Ketal",
    "Carbonate ester",
    "Carboxylic anhydride",
    "Primary amine",
    "Secondary amine",
    "Tertiary amine",
    "4-Ammonium ion",
    "Hydrazone",
    "Primary ketimine",
    "Secondary ketimine",
    "Primary aldimine",
    "Amide",
    "Sulfhydryl",
    "Sulfonic acid",
    "Thiolester",
    "Aldoxime",
    "Ketoxi",
];

/// Normalized label for a list entry; truncated spellings map to the rule name.
pub fn list_label(name: &str) -> String {
    match name {
        "Ketoxim" | "Ketoxi" => "ketoxime".to_string(),
        "Iod" => "iodo".to_string(),
        _ => normalize_label(name),
    }
}

pub fn is_donor_label(label: &str) -> bool {
    DONORS.iter().any(|d| list_label(d) == label)
}

pub fn is_acceptor_label(label: &str) -> bool {
    ACCEPTORS.iter().any(|d| list_label(d) == label)
}

pub fn is_ring_label(label: &str) -> bool {
    label.starts_with("ring_")
}

/// True for every name the graph may use as a relation.
pub fn is_valid_relation(r: &str) -> bool {
    if FIXED_RELATIONS.contains(&r) {
        return true;
    }
    let size = r
        .strip_prefix("contain_aromatic_ring_")
        .or_else(|| r.strip_prefix("contain_ring_"));
    size.is_some_and(|s| !s.is_empty() && !s.starts_with('0') && s.bytes().all(|b| b.is_ascii_digit()))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub head: String,
    pub relation: String,
    pub tail: String,
}

impl Triple {
    pub fn new(head: impl Into<String>, relation: impl Into<String>, tail: impl Into<String>) -> Self {
        Triple { head: head.into(), relation: relation.into(), tail: tail.into() }
    }
}

/// One distinct FG type seen in a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FgPrototype {
    pub label: String,
    pub core_smiles: String,
    /// Distinct attachment counts observed.
    pub attachments: BTreeSet<usize>,
    pub occurrences: u64,
}

impl FgPrototype {
    pub fn entity_id(&self) -> String {
        entity_id(&self.label, &self.core_smiles)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PrototypeSet {
    pub prototypes: BTreeMap<String, FgPrototype>,
    pub rejected: u64,
}

impl PrototypeSet {
    pub fn add(&mut self, g: &MolGraph, a: &FgAssignment) {
        for (k, inst) in a.instances.iter().enumerate() {
            let id = entity_id(&inst.label, &inst.core_smiles);
            let p = self.prototypes.entry(id).or_insert_with(|| FgPrototype {
                label: inst.label.clone(),
                core_smiles: inst.core_smiles.clone(),
                attachments: BTreeSet::new(),
                occurrences: 0,
            });
            p.attachments.insert(a.attachment_count(g, k));
            p.occurrences += 1;
        }
    }

    pub fn merge(mut self, other: PrototypeSet) -> PrototypeSet {
        self.rejected += other.rejected;
        for (id, p) in other.prototypes {
            match self.prototypes.get_mut(&id) {
                Some(q) => {
                    q.attachments.extend(p.attachments);
                    q.occurrences += p.occurrences;
                }
                None => {
                    self.prototypes.insert(id, p);
                }
            }
        }
        self
    }

    /// Detects groups over SMILES strings; unparseable ones are counted and skipped.
    pub fn from_smiles<S: AsRef<str> + Sync>(smiles: &[S], exec: Execution) -> PrototypeSet {
        const SHARD: usize = 256;
        let shards: Vec<&[S]> = smiles.chunks(SHARD).collect();
        exec.map(&shards, |shard| {
            let mut set = PrototypeSet::default();
            for s in shard.iter() {
                match parse_smiles(s.as_ref()) {
                    Ok(g) => set.add(&g, &detect(&g)),
                    Err(e) => {
                        log::warn!("skipping {:?}: {e}", s.as_ref());
                        set.rejected += 1;
                    }
                }
            }
            set
        })
        .into_iter()
        .fold(PrototypeSet::default(), PrototypeSet::merge)
    }

    pub fn len(&self) -> usize {
        self.prototypes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prototypes.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KgOptions {
    pub solubility: SolubilityModel,
}

/// Named groups found inside a ring core when rings are not claimed first.
pub fn ring_sub_groups(core: &MolGraph) -> BTreeSet<String> {
    let det = Detector::new(RuleSet::builtin(), DetectOptions { ring_systems: false });
    det.detect(core)
        .instances
        .into_iter()
        .filter(|i| i.kind == InstanceKind::Rule)
        .map(|i| i.label)
        .collect()
}

/// Triples for a single prototype.
pub fn prototype_triples(p: &FgPrototype, opts: &KgOptions) -> Vec<Triple> {
    let head = p.entity_id();
    let mut out = Vec::new();
    let mut push = |r: &str, t: String| out.push(Triple::new(head.clone(), r, t));
    let core = match parse_smiles(&p.core_smiles) {
        Ok(g) => g,
        Err(e) => {
            log::warn!("core of {head} does not parse: {e}");
            push(CORE_SMILES, p.core_smiles.clone());
            return out;
        }
    };

    let mut elements: BTreeSet<&str> = core.atoms().iter().map(|a| a.symbol()).collect();
    if core.total_h() > 0 {
        elements.insert("H");
    }
    for e in elements {
        push(CONTAIN_ATOM, e.to_string());
    }
    let bonds: BTreeSet<&str> = core.bonds().iter().map(|b| b.order.name()).collect();
    for b in bonds {
        push(CONTAIN_BOND, b.to_string());
    }
    let mut rings = BTreeSet::new();
    for ring in &core.rings().rings {
        let aromatic = ring.iter().all(|&a| core.atom(a).is_aromatic);
        rings.insert((ring.len(), aromatic));
    }
    for (n, aromatic) in rings {
        let r = if aromatic {
            format!("contain_aromatic_ring_{n}")
        } else {
            format!("contain_ring_{n}")
        };
        push(&r, "true".to_string());
    }
    for n in &p.attachments {
        push(NUM_SUBSTITUTES, n.to_string());
    }

    let groups: BTreeSet<String> = if is_ring_label(&p.label) {
        ring_sub_groups(&core)
    } else {
        BTreeSet::from([p.label.clone()])
    };
    let donor = groups.iter().any(|g| is_donor_label(g));
    let acceptor = groups.iter().any(|g| is_acceptor_label(g));
    push(IS_DONOR, donor.to_string());
    push(IS_ACCEPTOR, acceptor.to_string());

    let d = descriptors(&core, &opts.solubility);
    push(LOGP, discretize(d.logp).to_string());
    push(WATER_SOLUBILITY, discretize(d.solubility).to_string());
    for g in groups {
        push(FUNCTIONAL_GROUP, g);
    }
    push(CORE_SMILES, p.core_smiles.clone());
    out
}

/// Nearest integer, ties away from zero.
pub fn discretize(x: f64) -> i64 {
    x.round() as i64
}

/// All triples, grouped by entity in id order.
pub fn build_kg(protos: &PrototypeSet, opts: &KgOptions, exec: Execution) -> Vec<Triple> {
    let list: Vec<&FgPrototype> = protos.prototypes.values().collect();
    exec.map(&list, |p| prototype_triples(p, opts)).into_iter().flatten().collect()
}

pub fn write_triples<W: Write>(mut w: W, triples: &[Triple]) -> io::Result<()> {
    for t in triples {
        writeln!(w, "{}\t{}\t{}", t.head, t.relation, t.tail)?;
    }
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum TripleError {
    #[error("line {line}: expected head<TAB>relation<TAB>tail")]
    Shape { line: usize },
    #[error("line {line}: unknown relation {relation:?}")]
    Relation { line: usize, relation: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn read_triples<R: BufRead>(r: R) -> Result<Vec<Triple>, TripleError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let c: Vec<&str> = line.split('\t').collect();
        if c.len() != 3 || c.iter().any(|s| s.is_empty()) {
            return Err(TripleError::Shape { line: i + 1 });
        }
        if !is_valid_relation(c[1]) {
            return Err(TripleError::Relation { line: i + 1, relation: c[1].to_string() });
        }
        out.push(Triple::new(c[0], c[1], c[2]));
    }
    Ok(out)
}
