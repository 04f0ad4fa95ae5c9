//! Corpus files: one record per line, `SMILES[\tID]`, '#' lines are comments.
//! Also a deterministic generator of drug-like SMILES used for the bundled
//! corpora and benchmarks.

use std::collections::HashSet;
use std::io::{self, BufRead};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    /// 1-based line number in the source.
    pub line: usize,
    pub smiles: String,
    pub id: Option<String>,
}

/// Fifty common small molecules, `SMILES\tname`.
pub const TOY_CORPUS: &str = include_str!("../data/toy_50.smi");

pub fn toy_corpus() -> Vec<Record> {
    read_corpus_str(TOY_CORPUS)
}

pub fn parse_line(line_no: usize, line: &str) -> Option<Record> {
    let t = line.trim_end_matches(['\r', '\n']);
    if t.trim().is_empty() || t.trim_start().starts_with('#') {
        return None;
    }
    let mut cols = t.splitn(2, '\t');
    let smiles = cols.next().unwrap().trim().to_string();
    let id = cols.next().map(|s| s.trim().to_string()).filter(|s| !s.is_empty());
    Some(Record { line: line_no, smiles, id })
}

pub fn read_corpus<R: BufRead>(r: R) -> io::Result<Vec<Record>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        if let Some(rec) = parse_line(i + 1, &line?) {
            out.push(rec);
        }
    }
    Ok(out)
}

pub fn read_corpus_str(text: &str) -> Vec<Record> {
    text.lines().enumerate().filter_map(|(i, l)| parse_line(i + 1, l)).collect()
}

/// Ring scaffolds; `(*)` marks an optional substitution site, ring-closure
/// digits are 1 and 2 and get shifted when nested.
const SCAFFOLDS: &[&str] = &[
    "c1cc(*)ccc1(*)",
    "c1ccc(*)cc1",
    "c1cc(*)cc(*)c1",
    "c1ccc2cc(*)ccc2c1",
    "c1ccc2[nH]cc(*)c2c1",
    "c1cc(*)ncc1",
    "c1cnc(*)nc1",
    "c1cc(*)oc1",
    "c1cc(*)sc1",
    "c1nc(*)cs1",
    "c1cn(*)cn1",
    "C1CCN(*)CC1",
    "C1CCC(*)CC1",
    "C1CC(*)CN1",
    "C1COCCN1(*)",
    "C1CC1(*)",
    "O=C1CCC(*)CC1",
    "c1ccc2c(c1)oc(*)n2",
    "c1ccc2c(c1)C(=O)N(*)C2=O",
    "C1CC2CCC1(*)C2",
];

/// Acyclic backbones with substitution sites.
const CHAINS: &[&str] = &[
    "CC(*)C(*)",
    "CCC(*)",
    "C(*)C(=O)N(*)",
    "CC(C)(*)",
    "C=CC(*)",
    "OCC(*)",
    "C(*)CC(*)",
];

/// Terminal substituents.
const SUBSTITUENTS: &[&str] = &[
    "C", "CC", "CCC", "C(C)C", "C(C)(C)C", "O", "OC", "OCC", "N", "NC", "N(C)C", "F", "Cl", "Br",
    "I", "C(F)(F)F", "C(F)F", "C(Cl)(Cl)Cl", "C#N", "[N+](=O)[O-]", "C(=O)O", "C(=O)OC",
    "C(=O)OCC", "C(=O)N", "C(=O)NC", "NC(C)=O", "NC(=O)OC", "OC(C)=O", "C(C)=O", "C=O", "CO",
    "CCO", "CCN", "CC(=O)O", "S(=O)(=O)N", "S(=O)(=O)C", "S(C)=O", "SC", "S", "SSC", "C=C",
    "C#C", "CC=C", "C(=O)Cl", "OC(=O)OC", "C(=N)N", "N=[N+]=[N-]", "N=NC", "N=O", "ON=O",
    "C=NO", "C(C)=NO", "C=NN", "C=N", "N=C=O", "N=C=S", "SC#N", "OC#N", "[N+]#[C-]", "C(C)=S",
    "C(=O)S", "C(=S)O", "SC(C)=O", "OC(C)=S", "C(=S)S", "C(=S)SC", "OO", "OOC", "C(O)OC",
    "C(OC)OC", "C(C)(O)OC", "C(C)(OC)OC", "C(OC)(OC)OC", "C(=O)[O-]", "[NH3+]", "[N+](C)(C)C",
    "P(=O)(O)O", "OP(=O)(O)O", "OP(=O)(O)OC", "P(C)C", "P(C)(C)=O", "B(O)O", "B(OC)OC", "[Si](C)(C)C",
    "O[Si](C)(C)C", "[Si](C)(Cl)Cl", "OS(=O)(=O)O", "S(=O)(=O)O", "S(=O)(=O)OC", "S(=O)O",
    "C(=O)OC(C)=O", "C(=O)NC(C)=O", "C(Cl)Cl", "C(Br)(Br)Br", "C(F)(F)Cl", "CC(C)C",
];

/// Linkers that carry a nested scaffold: the scaffold follows directly.
const LINKERS: &[&str] = &["", "C", "CC", "O", "N", "C(=O)N", "NC(=O)", "S(=O)(=O)", "C(=O)", "OC"];

/// Deterministic generator of plausible SMILES.
pub struct Synth {
    rng: ChaCha8Rng,
}

impl Synth {
    pub fn new(seed: u64) -> Self {
        Synth { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn molecule(&mut self) -> String {
        let core = if self.rng.gen_bool(0.8) {
            *SCAFFOLDS.choose(&mut self.rng).unwrap()
        } else {
            *CHAINS.choose(&mut self.rng).unwrap()
        };
        self.fill(core, 0)
    }

    fn fill(&mut self, template: &str, depth: u32) -> String {
        let shifted = shift_ring_digits(template, 2 * depth);
        let mut out = String::with_capacity(shifted.len() + 16);
        let mut rest = shifted.as_str();
        while let Some(pos) = rest.find("(*)") {
            out.push_str(&rest[..pos]);
            rest = &rest[pos + 3..];
            let r: f64 = self.rng.gen();
            if r < 0.35 {
                continue;
            }
            let sub = if r < 0.5 && depth < 2 {
                let linker = *LINKERS.choose(&mut self.rng).unwrap();
                let inner = *SCAFFOLDS.choose(&mut self.rng).unwrap();
                format!("{linker}{}", self.fill(inner, depth + 1))
            } else {
                SUBSTITUENTS.choose(&mut self.rng).unwrap().to_string()
            };
            // a trailing site with nothing after it can drop its parentheses
            if rest.is_empty() {
                out.push_str(&sub);
            } else {
                out.push('(');
                out.push_str(&sub);
                out.push(')');
            }
        }
        out.push_str(rest);
        out
    }
}

/// `count` distinct molecules in generation order, none in `exclude`. Stops
/// early (with a warning) if the generator runs dry.
pub fn generate_unique(count: usize, seed: u64, exclude: &HashSet<String>) -> Vec<String> {
    let mut s = Synth::new(seed);
    let mut seen = exclude.clone();
    let mut out = Vec::with_capacity(count);
    let mut misses = 0usize;
    while out.len() < count && misses < 100 * count.max(1) {
        let m = s.molecule();
        if seen.insert(m.clone()) {
            out.push(m);
        } else {
            misses += 1;
        }
    }
    if out.len() < count {
        log::warn!("generator produced only {} distinct molecules", out.len());
    }
    out
}

fn shift_ring_digits(s: &str, by: u32) -> String {
    if by == 0 {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut in_bracket = false;
    for c in s.chars() {
        match c {
            '[' => in_bracket = true,
            ']' => in_bracket = false,
            _ => {}
        }
        match c.to_digit(10) {
            Some(d) if !in_bracket => out.push(char::from_digit(d + by, 10).expect("digit below 10")),
            _ => out.push(c),
        }
    }
    out
}
