//! FG-enhanced SMILES tokens, lossless stripping, vocabularies and lexicon
//! statistics.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{self, BufRead, Write};

use serde::Serialize;

use crate::fg::FgAssignment;
use crate::mol::{write_tokens, MolGraph, TokenKind};
use crate::par::Execution;

pub const PAD: &str = "<pad>";
pub const MASK: &str = "<mask>";
pub const UNK: &str = "<unk>";
pub const BOS: &str = "<bos>";
pub const EOS: &str = "<eos>";
pub const RESERVED: [&str; 5] = [PAD, MASK, UNK, BOS, EOS];
/// Ids below this are reserved tokens.
pub const NUM_RESERVED: usize = RESERVED.len();
/// Count stored for reserved tokens.
pub const RESERVED_COUNT: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
}

impl Token {
    /// Kind of a token read back from text. Anything that is not structural
    /// punctuation or a ring-closure label is an atom token.
    pub fn classify(text: &str) -> TokenKind {
        match text {
            "(" => TokenKind::BranchOpen,
            ")" => TokenKind::BranchClose,
            "." => TokenKind::Dot,
            "-" | "=" | "#" | "$" | ":" | "/" | "\\" => TokenKind::Bond,
            t if t.bytes().all(|b| b.is_ascii_digit()) => TokenKind::RingClosure,
            t if t.starts_with('%') && t.len() > 1 && t[1..].bytes().all(|b| b.is_ascii_digit()) => {
                TokenKind::RingClosure
            }
            _ => TokenKind::Atom,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSeq {
    pub tokens: Vec<Token>,
    pub source_canonical_smiles: String,
}

impl TokenSeq {
    /// Space-separated token line.
    pub fn to_line(&self) -> String {
        self.tokens.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ")
    }

    /// Reads a token line back; the source SMILES is recovered by stripping.
    pub fn from_line(line: &str) -> Result<TokenSeq, TokenError> {
        let tokens: Vec<Token> = line
            .split_whitespace()
            .map(|t| Token { kind: Token::classify(t), text: t.to_string() })
            .collect();
        let source = strip_tokens(&tokens)?;
        Ok(TokenSeq { tokens, source_canonical_smiles: source })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TokenError {
    #[error("atom token {text:?} at position {pos} has no FG suffix")]
    MissingSuffix { text: String, pos: usize },
}

/// FG-enhanced tokens: each atom token is `<atom as written>_<fg label>`,
/// structural tokens are left alone.
pub fn tokenize(g: &MolGraph, a: &FgAssignment) -> TokenSeq {
    let written = write_tokens(g);
    let source: String = written.iter().map(|t| t.text.as_str()).collect();
    let tokens = written
        .into_iter()
        .map(|t| match t.atom {
            Some(i) if t.kind == TokenKind::Atom => Token {
                text: format!("{}_{}", t.text, a.label_of(i)),
                kind: TokenKind::Atom,
            },
            _ => Token { text: t.text, kind: t.kind },
        })
        .collect();
    TokenSeq { tokens, source_canonical_smiles: source }
}

/// Removes FG suffixes and concatenates.
pub fn strip(ts: &TokenSeq) -> Result<String, TokenError> {
    strip_tokens(&ts.tokens)
}

fn strip_tokens(tokens: &[Token]) -> Result<String, TokenError> {
    let mut out = String::new();
    for (pos, t) in tokens.iter().enumerate() {
        if t.kind == TokenKind::Atom {
            let cut = t
                .text
                .find('_')
                .filter(|&i| i > 0 && i + 1 < t.text.len())
                .ok_or_else(|| TokenError::MissingSuffix { text: t.text.clone(), pos })?;
            out.push_str(&t.text[..cut]);
        } else {
            out.push_str(&t.text);
        }
    }
    Ok(out)
}

/// Token occurrence counts; merging is associative and commutative.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenCounts {
    pub counts: HashMap<String, u64>,
}

impl TokenCounts {
    pub fn add_line(&mut self, line: &str) {
        for t in line.split_whitespace() {
            *self.counts.entry(t.to_string()).or_insert(0) += 1;
        }
    }

    pub fn merge(mut self, other: TokenCounts) -> TokenCounts {
        for (k, v) in other.counts {
            *self.counts.entry(k).or_insert(0) += v;
        }
        self
    }

    pub fn from_lines<S: AsRef<str> + Sync>(lines: &[S], exec: Execution) -> TokenCounts {
        const SHARD: usize = 512;
        let shards: Vec<&[S]> = lines.chunks(SHARD).collect();
        exec.map(&shards, |shard| {
            let mut c = TokenCounts::default();
            for l in shard.iter() {
                c.add_line(l.as_ref());
            }
            c
        })
        .into_iter()
        .fold(TokenCounts::default(), TokenCounts::merge)
    }

    pub fn from_reader<R: BufRead>(r: R) -> io::Result<TokenCounts> {
        let mut c = TokenCounts::default();
        for line in r.lines() {
            c.add_line(&line?);
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    pub entries: BTreeMap<String, u64>,
    pub min_frequency: u64,
}

impl Vocab {
    pub fn from_counts(counts: &TokenCounts, min_frequency: u64) -> Vocab {
        assert!(min_frequency >= 1, "min_frequency must be at least 1");
        let mut entries: BTreeMap<String, u64> = counts
            .counts
            .iter()
            .filter(|(_, &c)| c >= min_frequency)
            .map(|(k, &c)| (k.clone(), c))
            .collect();
        for r in RESERVED {
            entries.insert(r.to_string(), RESERVED_COUNT);
        }
        Vocab { entries, min_frequency }
    }

    pub fn is_reserved(token: &str) -> bool {
        RESERVED.contains(&token)
    }

    /// Number of corpus tokens, reserved entries excluded.
    pub fn size(&self) -> usize {
        self.entries.keys().filter(|k| !Self::is_reserved(k)).count()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains_key(token)
    }

    /// Entries sorted by count descending, then token ascending.
    pub fn sorted(&self) -> Vec<(&str, u64)> {
        let mut v: Vec<(&str, u64)> = self.entries.iter().map(|(k, &c)| (k.as_str(), c)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        v
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (t, c) in self.sorted() {
            writeln!(w, "{t}\t{c}")?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(r: R) -> io::Result<Vocab> {
        let mut entries = BTreeMap::new();
        let mut min = u64::MAX;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (t, c) = line
                .split_once('\t')
                .and_then(|(t, c)| c.trim().parse::<u64>().ok().map(|c| (t, c)))
                .ok_or_else(|| {
                    io::Error::new(io::ErrorKind::InvalidData, format!("vocab line {}: {line:?}", i + 1))
                })?;
            if !Self::is_reserved(t) {
                min = min.min(c);
            }
            entries.insert(t.to_string(), c);
        }
        for r in RESERVED {
            entries.entry(r.to_string()).or_insert(RESERVED_COUNT);
        }
        Ok(Vocab { entries, min_frequency: if min == u64::MAX { 1 } else { min } })
    }

    /// Dense ids: reserved tokens first (in `RESERVED` order), then the rest
    /// sorted by count descending, token ascending.
    pub fn index(&self) -> TokenIndex {
        let mut names: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        names.extend(self.sorted().into_iter().filter(|(t, _)| !Self::is_reserved(t)).map(|(t, _)| t.to_string()));
        let ids = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        TokenIndex { names, ids }
    }
}

#[derive(Debug, Clone)]
pub struct TokenIndex {
    pub names: Vec<String>,
    ids: HashMap<String, usize>,
}

impl TokenIndex {
    /// Index over names given in id order.
    pub fn from_names(names: Vec<String>) -> TokenIndex {
        let ids = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        TokenIndex { names, ids }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id(&self, token: &str) -> usize {
        self.ids.get(token).copied().unwrap_or(2)
    }

    pub fn unk(&self) -> usize {
        2
    }

    pub fn mask(&self) -> usize {
        1
    }
}

/// The lexicon table row for a tokenized corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiversityStats {
    #[serde(rename = "#molecules")]
    pub num_molecules: usize,
    #[serde(rename = "#atom types")]
    pub num_atom_types: usize,
    #[serde(rename = "Length")]
    pub length_range: [usize; 2],
    #[serde(rename = "Min frequency = 1")]
    pub vocab_size_min1: usize,
    #[serde(rename = "Min frequency = 5")]
    pub vocab_size_min5: usize,
    #[serde(rename = "coverage", skip_serializing_if = "Option::is_none")]
    pub coverage: Option<f64>,
}

/// Element symbol of an atom token: the stripped text without brackets,
/// isotope, hydrogens or charge, first letter upper-cased.
pub fn token_element(token: &str) -> Option<String> {
    let atom = token.split('_').next()?;
    let core = atom.trim_start_matches('[').trim_start_matches(|c: char| c.is_ascii_digit());
    let mut chars = core.chars();
    let first = chars.next()?;
    if first == '*' {
        return Some("*".to_string());
    }
    if !first.is_ascii_alphabetic() {
        return None;
    }
    let mut sym = first.to_ascii_uppercase().to_string();
    if let Some(c) = chars.next() {
        let two = format!("{sym}{c}");
        if c.is_ascii_lowercase() && crate::element::by_symbol(&two).is_some() && atom.starts_with('[') {
            sym = two;
        } else if c.is_ascii_lowercase() && (two == "Cl" || two == "Br") {
            sym = two;
        }
    }
    Some(sym)
}

/// Fraction of token occurrences in `lines` whose token is in `vocab`.
pub fn coverage<S: AsRef<str>>(vocab: &Vocab, lines: &[S]) -> f64 {
    let (mut hit, mut total) = (0u64, 0u64);
    for l in lines {
        for t in l.as_ref().split_whitespace() {
            total += 1;
            if vocab.contains(t) && !Vocab::is_reserved(t) {
                hit += 1;
            }
        }
    }
    if total == 0 {
        1.0
    } else {
        hit as f64 / total as f64
    }
}

/// Table row for `lines` (token lines); coverage is of `vocab(lines, min_freq)`
/// over `other` when given.
pub fn lexicon_report<S: AsRef<str> + Sync>(
    lines: &[S],
    other: Option<&[S]>,
    min_freq: u64,
    exec: Execution,
) -> DiversityStats {
    let counts = TokenCounts::from_lines(lines, exec);
    let mut elements = BTreeSet::new();
    for t in counts.counts.keys() {
        if Token::classify(t) == TokenKind::Atom {
            if let Some(e) = token_element(t) {
                elements.insert(e);
            }
        }
    }
    let lengths: Vec<usize> = lines.iter().map(|l| l.as_ref().split_whitespace().count()).collect();
    let length_range = [
        lengths.iter().copied().min().unwrap_or(0),
        lengths.iter().copied().max().unwrap_or(0),
    ];
    DiversityStats {
        num_molecules: lines.len(),
        num_atom_types: elements.len(),
        length_range,
        vocab_size_min1: Vocab::from_counts(&counts, 1).size(),
        vocab_size_min5: Vocab::from_counts(&counts, 5).size(),
        coverage: other.map(|o| coverage(&Vocab::from_counts(&counts, min_freq), o)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fg::detect;
    use crate::mol::{parse_smiles, write_smiles};

    fn tok(smi: &str) -> TokenSeq {
        let g = parse_smiles(smi).unwrap();
        tokenize(&g, &detect(&g))
    }

    #[test]
    fn ketone_tokens() {
        let ts = tok("CC(=O)C");
        let texts: Vec<&str> = ts.tokens.iter().map(|t| t.text.as_str()).collect();
        let k = texts.iter().position(|t| *t == "C_ketone").unwrap();
        assert_eq!(&texts[k + 1..k + 5], ["(", "=", "O_ketone", ")"]);
        assert_eq!(strip(&ts).unwrap(), ts.source_canonical_smiles);
        assert_eq!(ts.source_canonical_smiles, write_smiles(&parse_smiles("CC(=O)C").unwrap()));
    }

    #[test]
    fn benzene_and_methane() {
        let ts = tok("c1ccccc1");
        assert_eq!(ts.tokens.iter().filter(|t| t.text == "c_ring_6").count(), 6);
        assert_eq!(ts.tokens.iter().filter(|t| t.kind == TokenKind::RingClosure).count(), 2);
        assert_eq!(tok("C").to_line(), "C_alkyl");
    }

    #[test]
    fn bracket_atoms_stay_whole() {
        let ts = tok("C[N+](C)(C)C");
        assert!(ts.tokens.iter().any(|t| t.text == "[N+]_4-ammonium_ion"));
        assert_eq!(strip(&ts).unwrap(), write_smiles(&parse_smiles("C[N+](C)(C)C").unwrap()));
    }

    #[test]
    fn strip_errors_and_empty() {
        let empty = TokenSeq { tokens: vec![], source_canonical_smiles: String::new() };
        assert_eq!(strip(&empty).unwrap(), "");
        assert!(matches!(TokenSeq::from_line("C_alkyl O"), Err(TokenError::MissingSuffix { pos: 1, .. })));
        let ts = TokenSeq::from_line("C_alkyl C_alkyl ( = O_ketone ) C_alkyl").unwrap();
        assert_eq!(ts.source_canonical_smiles, "CC(=O)C");
    }

    #[test]
    fn classify_tokens() {
        assert_eq!(Token::classify("%12"), TokenKind::RingClosure);
        assert_eq!(Token::classify("3"), TokenKind::RingClosure);
        assert_eq!(Token::classify("="), TokenKind::Bond);
        assert_eq!(Token::classify("Cl_chloro"), TokenKind::Atom);
    }

    #[test]
    fn vocab_thresholds() {
        let lines = ["C_Alkyl", "C_Alkyl"];
        let c = TokenCounts::from_lines(&lines, Execution::Sequential);
        let v1 = Vocab::from_counts(&c, 1);
        assert_eq!(v1.entries["C_Alkyl"], 2);
        assert_eq!(v1.size(), 1);
        assert_eq!(v1.entries.len(), 6);
        let v3 = Vocab::from_counts(&c, 3);
        assert_eq!(v3.size(), 0);
        assert_eq!(v3.entries.len(), 5);
    }

    #[test]
    fn vocab_tsv_order_and_round_trip() {
        let c = TokenCounts::from_lines(&["b a a", "c b a"], Execution::Sequential);
        let v = Vocab::from_counts(&c, 1);
        let mut buf = Vec::new();
        v.write_tsv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let body: Vec<&str> = text.lines().skip(5).collect();
        assert_eq!(body, ["a\t3", "b\t2", "c\t1"]);
        assert!(text.lines().take(5).all(|l| l.ends_with(&RESERVED_COUNT.to_string())));
        assert_eq!(Vocab::read_tsv(text.as_bytes()).unwrap(), v);
        let idx = v.index();
        assert_eq!(idx.names[..5], RESERVED.map(String::from));
        assert_eq!(idx.id("a"), 5);
        assert_eq!(idx.id("zzz"), idx.unk());
    }

    #[test]
    fn report_and_coverage() {
        let a = ["C_alkyl O_hydroxyl", "C_alkyl"];
        let b = ["N_primary_amine"];
        let r = lexicon_report(&a, Some(&a), 1, Execution::Sequential);
        assert_eq!(r.coverage, Some(1.0));
        assert_eq!(r.num_molecules, 2);
        assert_eq!(r.num_atom_types, 2);
        assert_eq!(r.length_range, [1, 2]);
        let r = lexicon_report(&a, Some(&b), 1, Execution::Sequential);
        assert_eq!(r.coverage, Some(0.0));
        let json = serde_json::to_value(&r).unwrap();
        for key in ["#molecules", "#atom types", "Length", "Min frequency = 1", "Min frequency = 5"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn element_of_token() {
        assert_eq!(token_element("Cl_chloro").as_deref(), Some("Cl"));
        assert_eq!(token_element("c_ring_6").as_deref(), Some("C"));
        assert_eq!(token_element("[nH]_ring_5").as_deref(), Some("N"));
        assert_eq!(token_element("[13CH3]_alkyl").as_deref(), Some("C"));
        assert_eq!(token_element("[Na+]_elem_na").as_deref(), Some("Na"));
        assert_eq!(token_element("[se]_ring_5").as_deref(), Some("Se"));
        assert_eq!(token_element("Cc_x"), Some("C".into()));
    }
}
