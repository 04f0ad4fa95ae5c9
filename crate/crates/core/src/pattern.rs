//! A small SMARTS dialect used by the functional-group rule table and the
//! descriptor parameter tables.
//!
//! Supported: bracket atoms with `#n`, element symbols (upper case =
//! aliphatic, lower case = aromatic), `*`, `A`, `a`, `H<n>`, `D<n>`, `X<n>`,
//! `R`/`R<n>`, charges, `$(...)` recursion, `!`, `&`, `,`, `;` and `:<map>`;
//! bonds `-`, `=`, `#`, `:`, `~`; branches. Ring closures are not supported.
//! The first atom is the match root.

use std::fmt;

use crate::element;
use crate::mol::{BondOrder, MolGraph};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("pattern {pattern:?}: {msg} at position {pos}")]
pub struct PatternError {
    pub pattern: String,
    pub msg: &'static str,
    pub pos: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Prim {
    Element { number: u8, aromatic: Option<bool> },
    Any,
    Aliphatic,
    Aromatic,
    TotalH(u8),
    Degree(u8),
    Connectivity(u8),
    Charge(i8),
    /// `R` alone: any ring membership; `R<n>`: member of exactly n SSSR rings.
    Ring(Option<u8>),
    Recursive(Box<Pattern>),
}

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Prim(Prim),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BondExpr {
    Default,
    Single,
    Double,
    Triple,
    Aromatic,
    Any,
}

#[derive(Debug, Clone, PartialEq)]
struct PatAtom {
    expr: Expr,
    map: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    source: String,
    atoms: Vec<PatAtom>,
    /// For atom k > 0: (parent atom, bond expression). Patterns are trees.
    parents: Vec<Option<(usize, BondExpr)>>,
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl std::str::FromStr for Pattern {
    type Err = PatternError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Pattern::parse(s)
    }
}

impl Pattern {
    pub fn parse(s: &str) -> Result<Pattern, PatternError> {
        let mut p = PatParser { src: s.as_bytes(), pos: 0, text: s };
        let pat = p.pattern()?;
        if p.pos != s.len() {
            return Err(p.err("trailing input"));
        }
        Ok(pat)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Atom-map class of pattern atom `k` (0 when unmapped).
    pub fn map_class(&self, k: usize) -> u32 {
        self.atoms[k].map
    }

    /// Whether the pattern matches with its root on `atom`.
    pub fn matches_at(&self, g: &MolGraph, atom: usize) -> bool {
        self.match_at(g, atom, None, &|_, _| true).is_some()
    }

    /// First embedding with the root on `atom`. Candidate atoms are tried in
    /// ascending `order` (atom index when None); `allow(k, atom)` can veto
    /// placing pattern atom k on a molecule atom. Returns the molecule atom
    /// for each pattern atom.
    pub fn match_at(
        &self,
        g: &MolGraph,
        atom: usize,
        order: Option<&[usize]>,
        allow: &dyn Fn(usize, usize) -> bool,
    ) -> Option<Vec<usize>> {
        if self.atoms.is_empty() || !allow(0, atom) || !atom_matches(&self.atoms[0].expr, g, atom) {
            return None;
        }
        let mut map = vec![usize::MAX; self.atoms.len()];
        map[0] = atom;
        if self.extend(g, 1, &mut map, order, allow) {
            Some(map)
        } else {
            None
        }
    }

    fn extend(
        &self,
        g: &MolGraph,
        k: usize,
        map: &mut [usize],
        order: Option<&[usize]>,
        allow: &dyn Fn(usize, usize) -> bool,
    ) -> bool {
        if k == self.atoms.len() {
            return true;
        }
        let (parent, bexpr) = self.parents[k].expect("non-root atoms have parents");
        let host = map[parent];
        let mut cands: Vec<(usize, BondOrder)> = g
            .neighbors(host)
            .iter()
            .map(|e| (e.atom, g.bond(e.bond).order))
            .collect();
        match order {
            Some(o) => cands.sort_by_key(|&(a, _)| o[a]),
            None => cands.sort_by_key(|&(a, _)| a),
        }
        for (cand, bo) in cands {
            if map[..k].contains(&cand)
                || !bond_matches(bexpr, bo)
                || !allow(k, cand)
                || !atom_matches(&self.atoms[k].expr, g, cand)
            {
                continue;
            }
            map[k] = cand;
            if self.extend(g, k + 1, map, order, allow) {
                return true;
            }
            map[k] = usize::MAX;
        }
        false
    }
}

fn bond_matches(e: BondExpr, o: BondOrder) -> bool {
    match e {
        BondExpr::Any => true,
        BondExpr::Default => matches!(o, BondOrder::Single | BondOrder::Aromatic),
        BondExpr::Single => o == BondOrder::Single,
        BondExpr::Double => o == BondOrder::Double,
        BondExpr::Triple => o == BondOrder::Triple,
        BondExpr::Aromatic => o == BondOrder::Aromatic,
    }
}

fn atom_matches(e: &Expr, g: &MolGraph, i: usize) -> bool {
    match e {
        Expr::Prim(p) => prim_matches(p, g, i),
        Expr::Not(x) => !atom_matches(x, g, i),
        Expr::And(xs) => xs.iter().all(|x| atom_matches(x, g, i)),
        Expr::Or(xs) => xs.iter().any(|x| atom_matches(x, g, i)),
    }
}

fn prim_matches(p: &Prim, g: &MolGraph, i: usize) -> bool {
    let a = g.atom(i);
    match p {
        Prim::Element { number, aromatic } => {
            a.element == *number && aromatic.is_none_or(|ar| ar == a.is_aromatic)
        }
        Prim::Any => true,
        Prim::Aliphatic => !a.is_aromatic,
        Prim::Aromatic => a.is_aromatic,
        Prim::TotalH(n) => a.total_h() == *n,
        Prim::Degree(n) => g.degree(i) == *n as usize,
        Prim::Connectivity(n) => g.degree(i) + a.total_h() as usize == *n as usize,
        Prim::Charge(c) => a.formal_charge == *c,
        Prim::Ring(None) => g.is_ring_atom(i),
        Prim::Ring(Some(n)) => g.rings().rings_of(i).len() == *n as usize,
        Prim::Recursive(pat) => pat.matches_at(g, i),
    }
}

struct PatParser<'a> {
    src: &'a [u8],
    pos: usize,
    text: &'a str,
}

impl PatParser<'_> {
    fn err(&self, msg: &'static str) -> PatternError {
        PatternError { pattern: self.text.to_string(), msg, pos: self.pos }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn number(&mut self) -> Option<u32> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        (self.pos > start).then(|| self.text[start..self.pos].parse().unwrap())
    }

    /// Parses a tree-shaped pattern up to end of input or an unmatched ')'.
    fn pattern(&mut self) -> Result<Pattern, PatternError> {
        let start = self.pos;
        let mut atoms: Vec<PatAtom> = Vec::new();
        let mut parents: Vec<Option<(usize, BondExpr)>> = Vec::new();
        let mut prev: Option<usize> = None;
        let mut stack: Vec<Option<usize>> = Vec::new();
        let mut pending: Option<BondExpr> = None;
        while let Some(c) = self.peek() {
            match c {
                b'(' => {
                    if prev.is_none() {
                        return Err(self.err("branch without atom"));
                    }
                    stack.push(prev);
                    self.pos += 1;
                }
                b')' => {
                    if stack.is_empty() {
                        break; // end of a recursive sub-pattern
                    }
                    prev = stack.pop().unwrap();
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'~' => {
                    pending = Some(match c {
                        b'-' => BondExpr::Single,
                        b'=' => BondExpr::Double,
                        b'#' => BondExpr::Triple,
                        b':' => BondExpr::Aromatic,
                        _ => BondExpr::Any,
                    });
                    self.pos += 1;
                }
                _ => {
                    let atom = self.atom()?;
                    let idx = atoms.len();
                    atoms.push(atom);
                    parents.push(prev.map(|p| (p, pending.take().unwrap_or(BondExpr::Default))));
                    if prev.is_none() && idx > 0 {
                        return Err(self.err("disconnected pattern"));
                    }
                    prev = Some(idx);
                }
            }
        }
        if pending.is_some() || !stack.is_empty() || atoms.is_empty() {
            return Err(self.err("incomplete pattern"));
        }
        Ok(Pattern {
            source: self.text[start..self.pos].to_string(),
            atoms,
            parents,
        })
    }

    fn atom(&mut self) -> Result<PatAtom, PatternError> {
        let c = self.peek().unwrap();
        if c == b'[' {
            self.pos += 1;
            let expr = self.low_and()?;
            let mut map = 0;
            if self.peek() == Some(b':') {
                self.pos += 1;
                map = self.number().ok_or_else(|| self.err("expected map number"))?;
            }
            if self.peek() != Some(b']') {
                return Err(self.err("expected ']'"));
            }
            self.pos += 1;
            return Ok(PatAtom { expr, map });
        }
        let prim = match c {
            b'*' => {
                self.pos += 1;
                Prim::Any
            }
            b'A' => {
                self.pos += 1;
                Prim::Aliphatic
            }
            b'a' => {
                self.pos += 1;
                Prim::Aromatic
            }
            _ => self.element()?,
        };
        Ok(PatAtom { expr: Expr::Prim(prim), map: 0 })
    }

    fn element(&mut self) -> Result<Prim, PatternError> {
        let c = self.peek().ok_or_else(|| self.err("expected atom"))?;
        if c.is_ascii_lowercase() {
            for two in ["se", "as", "te"] {
                if self.src[self.pos..].starts_with(two.as_bytes()) {
                    self.pos += 2;
                    let mut up = two.to_string();
                    up[..1].make_ascii_uppercase();
                    let number = element::by_symbol(&up).unwrap().number;
                    return Ok(Prim::Element { number, aromatic: Some(true) });
                }
            }
            if matches!(c, b'b' | b'c' | b'n' | b'o' | b'p' | b's') {
                self.pos += 1;
                let up = (c as char).to_ascii_uppercase().to_string();
                let number = element::by_symbol(&up).unwrap().number;
                return Ok(Prim::Element { number, aromatic: Some(true) });
            }
            return Err(self.err("unknown aromatic symbol"));
        }
        if c.is_ascii_uppercase() {
            if let Some(&n) = self.src.get(self.pos + 1) {
                if n.is_ascii_lowercase() {
                    let two = format!("{}{}", c as char, n as char);
                    if let Some(e) = element::by_symbol(&two) {
                        self.pos += 2;
                        return Ok(Prim::Element { number: e.number, aromatic: Some(false) });
                    }
                }
            }
            if let Some(e) = element::by_symbol(&(c as char).to_string()) {
                self.pos += 1;
                return Ok(Prim::Element { number: e.number, aromatic: Some(false) });
            }
        }
        Err(self.err("unknown element"))
    }

    fn low_and(&mut self) -> Result<Expr, PatternError> {
        let mut parts = vec![self.or()?];
        while self.peek() == Some(b';') {
            self.pos += 1;
            parts.push(self.or()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Expr::And(parts) })
    }

    fn or(&mut self) -> Result<Expr, PatternError> {
        let mut parts = vec![self.and()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            parts.push(self.and()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Expr::Or(parts) })
    }

    fn and(&mut self) -> Result<Expr, PatternError> {
        let mut parts = Vec::new();
        loop {
            match self.peek() {
                Some(b'&') => self.pos += 1,
                Some(b']' | b';' | b',' | b':') | None => break,
                _ => parts.push(self.unary()?),
            }
        }
        match parts.len() {
            0 => Err(self.err("empty atom expression")),
            1 => Ok(parts.pop().unwrap()),
            _ => Ok(Expr::And(parts)),
        }
    }

    fn unary(&mut self) -> Result<Expr, PatternError> {
        if self.peek() == Some(b'!') {
            self.pos += 1;
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        Ok(Expr::Prim(self.prim()?))
    }

    fn prim(&mut self) -> Result<Prim, PatternError> {
        let c = self.peek().ok_or_else(|| self.err("unexpected end"))?;
        let counted = |p: &mut Self, default: u32| p.number().unwrap_or(default) as u8;
        Ok(match c {
            b'#' => {
                self.pos += 1;
                let n = self.number().ok_or_else(|| self.err("expected atomic number"))?;
                Prim::Element { number: n as u8, aromatic: None }
            }
            b'*' => {
                self.pos += 1;
                Prim::Any
            }
            b'A' => {
                self.pos += 1;
                Prim::Aliphatic
            }
            b'a' => {
                self.pos += 1;
                Prim::Aromatic
            }
            b'H' => {
                self.pos += 1;
                Prim::TotalH(counted(self, 1))
            }
            b'D' => {
                self.pos += 1;
                Prim::Degree(counted(self, 1))
            }
            b'X' => {
                self.pos += 1;
                Prim::Connectivity(counted(self, 1))
            }
            b'R' => {
                self.pos += 1;
                Prim::Ring(self.number().map(|n| n as u8))
            }
            b'+' | b'-' => {
                let unit: i8 = if c == b'+' { 1 } else { -1 };
                self.pos += 1;
                match self.number() {
                    Some(n) => Prim::Charge(unit * n as i8),
                    None => {
                        let mut q = unit;
                        while self.peek() == Some(c) {
                            self.pos += 1;
                            q += unit;
                        }
                        Prim::Charge(q)
                    }
                }
            }
            b'$' => {
                self.pos += 1;
                if self.peek() != Some(b'(') {
                    return Err(self.err("expected '(' after '$'"));
                }
                self.pos += 1;
                let sub = self.pattern()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("unterminated recursive pattern"));
                }
                self.pos += 1;
                Prim::Recursive(Box::new(sub))
            }
            _ => self.element()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mol::parse_smiles;

    fn hits(pat: &str, smi: &str) -> Vec<usize> {
        let p = Pattern::parse(pat).unwrap();
        let g = parse_smiles(smi).unwrap();
        (0..g.num_atoms()).filter(|&i| p.matches_at(&g, i)).collect()
    }

    #[test]
    fn element_and_aromaticity() {
        assert_eq!(hits("C", "Cc1ccccc1"), vec![0]);
        assert_eq!(hits("c", "Cc1ccccc1"), vec![1, 2, 3, 4, 5, 6]);
        assert_eq!(hits("[#6]", "CO"), vec![0]);
        assert_eq!(hits("[Cl]", "CCl"), vec![1]);
    }

    #[test]
    fn counts_and_charges() {
        assert_eq!(hits("[OX2H1]", "CC(=O)O"), vec![3]);
        assert_eq!(hits("[CX3](=O)[OX2H1]", "CC(=O)O"), vec![1]);
        assert_eq!(hits("[N+](=O)[O-]", "c1ccccc1[N+](=O)[O-]"), vec![6]);
        assert_eq!(hits("[CH3]", "CC(C)O"), vec![0, 2]);
        assert_eq!(hits("[D3]", "CC(C)O"), vec![1]);
        assert_eq!(hits("[!#6]", "CC(C)O"), vec![3]);
        assert_eq!(hits("[C,O;H1]", "CC(C)O"), vec![1, 3]);
    }

    #[test]
    fn ring_primitives_and_recursion() {
        assert_eq!(hits("[R]", "CC1CC1"), vec![1, 2, 3]);
        assert_eq!(hits("[!R]", "CC1CC1"), vec![0]);
        assert_eq!(hits("[R2]", "c1ccc2ccccc2c1"), vec![3, 8]);
        assert_eq!(hits("[C;$(C=O)]", "CC(=O)C"), vec![1]);
        assert_eq!(hits("[O;!$(O[#6]=O)]", "CC(=O)OC"), vec![2]);
    }

    #[test]
    fn map_classes_and_mapping() {
        let p = Pattern::parse("[CX3:1](=[OX1:2])[#6]").unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!((p.map_class(0), p.map_class(1), p.map_class(2)), (1, 2, 0));
        let g = parse_smiles("CC(=O)C").unwrap();
        let m = p.match_at(&g, 1, None, &|_, _| true).unwrap();
        assert_eq!(m, vec![1, 2, 0]);
        // forbid atom 0: the other methyl is used instead
        let m = p.match_at(&g, 1, None, &|_, a| a != 0).unwrap();
        assert_eq!(m, vec![1, 2, 3]);
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["", "[C", "C(", "C=", "[Q]", "[C:]", "C.C"] {
            assert!(Pattern::parse(bad).is_err(), "{bad}");
        }
    }
}
