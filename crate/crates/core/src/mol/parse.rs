//! SMILES reader.

use std::collections::BTreeMap;

use crate::element;
use crate::mol::graph::{Atom, Bond, BondOrder, MolGraph};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SmilesError {
    #[error("empty SMILES string")]
    Empty,
    #[error("unexpected character {ch:?} at position {pos}")]
    UnexpectedChar { ch: char, pos: usize },
    #[error("unknown element {symbol:?} at position {pos}")]
    UnknownElement { symbol: String, pos: usize },
    #[error("unterminated bracket atom starting at position {pos}")]
    UnclosedBracket { pos: usize },
    #[error("ring-closure {label} opened at position {pos} is never closed")]
    UnmatchedRingClosure { label: u32, pos: usize },
    #[error("unbalanced parenthesis at position {pos}")]
    UnbalancedParen { pos: usize },
    #[error("bond symbol at position {pos} is not followed by an atom")]
    DanglingBond { pos: usize },
    #[error("conflicting bond symbols on ring-closure {label} at position {pos}")]
    RingBondMismatch { label: u32, pos: usize },
    #[error("ring-closure {label} at position {pos} bonds an atom to itself or duplicates a bond")]
    InvalidRingBond { label: u32, pos: usize },
    #[error("valence violation on atom {atom} ({symbol})")]
    Valence { atom: usize, symbol: String },
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Reject atoms whose bonds exceed every allowed valence.
    pub strict: bool,
}

/// Parses a SMILES string into one graph. Disconnected components ('.')
/// stay in the same graph; use [`parse_components`] to split them.
pub fn parse_smiles(s: &str) -> Result<MolGraph, SmilesError> {
    parse_smiles_with(s, ParseOptions::default())
}

pub fn parse_components(s: &str) -> Result<Vec<MolGraph>, SmilesError> {
    Ok(parse_smiles(s)?.components())
}

pub fn parse_smiles_with(s: &str, opts: ParseOptions) -> Result<MolGraph, SmilesError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(SmilesError::Empty);
    }
    let mut p = Parser {
        src: s.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
    };
    p.run()?;
    let Parser { atoms, bonds, .. } = p;
    let mut g = MolGraph::new(atoms, bonds).map_err(|_| SmilesError::InvalidRingBond {
        label: 0,
        pos: s.len(),
    })?;
    g.fill_implicit_h();
    if opts.strict {
        if let Some(&atom) = g.valence_violations().first() {
            return Err(SmilesError::Valence {
                atom,
                symbol: g.atom(atom).symbol().to_string(),
            });
        }
    }
    Ok(g)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
}

struct OpenRing {
    atom: usize,
    order: Option<BondOrder>,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn run(&mut self) -> Result<(), SmilesError> {
        let mut prev: Option<usize> = None;
        let mut branch_stack: Vec<Option<usize>> = Vec::new();
        let mut pending: Option<(Option<BondOrder>, usize)> = None;
        let mut rings: BTreeMap<u32, OpenRing> = BTreeMap::new();

        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                b'(' => {
                    if prev.is_none() || pending.is_some() {
                        return Err(SmilesError::UnbalancedParen { pos: start });
                    }
                    branch_stack.push(prev);
                    self.pos += 1;
                }
                b')' => {
                    if pending.is_some() {
                        return Err(SmilesError::DanglingBond { pos: start });
                    }
                    prev = branch_stack
                        .pop()
                        .ok_or(SmilesError::UnbalancedParen { pos: start })?;
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b'$' | b':' | b'/' | b'\\' => {
                    if pending.is_some() || prev.is_none() {
                        return Err(SmilesError::UnexpectedChar { ch: c as char, pos: start });
                    }
                    let order = match c {
                        b'-' => Some(BondOrder::Single),
                        b'=' => Some(BondOrder::Double),
                        b'#' => Some(BondOrder::Triple),
                        b'$' => Some(BondOrder::Quadruple),
                        b':' => Some(BondOrder::Aromatic),
                        // Directional bonds only carry stereo, which is dropped.
                        _ => None,
                    };
                    pending = Some((order, start));
                    self.pos += 1;
                }
                b'.' => {
                    if pending.is_some() {
                        return Err(SmilesError::DanglingBond { pos: start });
                    }
                    if prev.is_none() {
                        return Err(SmilesError::UnexpectedChar { ch: '.', pos: start });
                    }
                    prev = None;
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => {
                    let Some(cur) = prev else {
                        return Err(SmilesError::UnexpectedChar { ch: c as char, pos: start });
                    };
                    let label = self.ring_label()?;
                    let order = pending.take().and_then(|(o, _)| o);
                    match rings.remove(&label) {
                        Some(open) => {
                            let order = match (open.order, order) {
                                (Some(a), Some(b)) if a != b => {
                                    return Err(SmilesError::RingBondMismatch { label, pos: start })
                                }
                                (Some(a), _) | (None, Some(a)) => a,
                                (None, None) => self.default_order(open.atom, cur),
                            };
                            if open.atom == cur || self.bonded(open.atom, cur) {
                                return Err(SmilesError::InvalidRingBond { label, pos: start });
                            }
                            self.bonds.push(Bond { a: open.atom, b: cur, order });
                        }
                        None => {
                            rings.insert(label, OpenRing { atom: cur, order, pos: start });
                        }
                    }
                }
                _ => {
                    let atom = self.atom()?;
                    let idx = self.atoms.len();
                    self.atoms.push(atom);
                    if let Some(p) = prev {
                        let order = pending
                            .take()
                            .and_then(|(o, _)| o)
                            .unwrap_or_else(|| self.default_order(p, idx));
                        self.bonds.push(Bond { a: p, b: idx, order });
                    } else if let Some((_, pos)) = pending {
                        return Err(SmilesError::DanglingBond { pos });
                    }
                    pending = None;
                    prev = Some(idx);
                }
            }
        }
        if let Some((_, pos)) = pending {
            return Err(SmilesError::DanglingBond { pos });
        }
        if !branch_stack.is_empty() {
            return Err(SmilesError::UnbalancedParen { pos: self.src.len() });
        }
        if let Some((&label, open)) = rings.iter().next() {
            return Err(SmilesError::UnmatchedRingClosure { label, pos: open.pos });
        }
        if self.atoms.is_empty() {
            return Err(SmilesError::Empty);
        }
        Ok(())
    }

    fn bonded(&self, a: usize, b: usize) -> bool {
        self.bonds
            .iter()
            .any(|x| (x.a == a && x.b == b) || (x.a == b && x.b == a))
    }

    fn default_order(&self, a: usize, b: usize) -> BondOrder {
        if self.atoms[a].is_aromatic && self.atoms[b].is_aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        }
    }

    fn ring_label(&mut self) -> Result<u32, SmilesError> {
        let start = self.pos;
        if self.peek() == Some(b'%') {
            self.pos += 1;
            let digits = self.src.get(self.pos..self.pos + 2);
            match digits {
                Some(d) if d.iter().all(u8::is_ascii_digit) => {
                    self.pos += 2;
                    Ok(((d[0] - b'0') * 10 + (d[1] - b'0')) as u32)
                }
                _ => Err(SmilesError::UnexpectedChar { ch: '%', pos: start }),
            }
        } else {
            let d = self.src[self.pos] - b'0';
            self.pos += 1;
            Ok(d as u32)
        }
    }

    fn atom(&mut self) -> Result<Atom, SmilesError> {
        let start = self.pos;
        let c = self.src[self.pos];
        match c {
            b'[' => self.bracket_atom(),
            b'*' => {
                self.pos += 1;
                Ok(Atom::new(0))
            }
            b'B' | b'C' => {
                let two = self.src.get(self.pos + 1).copied();
                let n = match (c, two) {
                    (b'B', Some(b'r')) => {
                        self.pos += 2;
                        35
                    }
                    (b'C', Some(b'l')) => {
                        self.pos += 2;
                        17
                    }
                    (b'B', _) => {
                        self.pos += 1;
                        5
                    }
                    _ => {
                        self.pos += 1;
                        6
                    }
                };
                Ok(Atom::new(n))
            }
            b'N' | b'O' | b'P' | b'S' | b'F' | b'I' => {
                self.pos += 1;
                Ok(Atom::new(element::by_symbol(&(c as char).to_string()).unwrap().number))
            }
            b'b' | b'c' | b'n' | b'o' | b'p' | b's' => {
                self.pos += 1;
                let upper = (c as char).to_ascii_uppercase().to_string();
                let mut a = Atom::new(element::by_symbol(&upper).unwrap().number);
                a.is_aromatic = true;
                Ok(a)
            }
            _ => Err(SmilesError::UnexpectedChar { ch: c as char, pos: start }),
        }
    }

    fn number(&mut self) -> Option<u32> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            None
        } else {
            std::str::from_utf8(&self.src[start..self.pos]).ok()?.parse().ok()
        }
    }

    fn bracket_atom(&mut self) -> Result<Atom, SmilesError> {
        let open = self.pos;
        self.pos += 1;
        let unclosed = SmilesError::UnclosedBracket { pos: open };
        let isotope = self.number().map(|n| n as u16);

        let sym_start = self.pos;
        let c = self.peek().ok_or(unclosed.clone())?;
        let (number, aromatic) = if c == b'*' {
            self.pos += 1;
            (0, false)
        } else if c.is_ascii_lowercase() {
            let two = self.src.get(self.pos..self.pos + 2);
            if matches!(two, Some(b"se") | Some(b"as") | Some(b"te")) {
                self.pos += 2;
                let s = std::str::from_utf8(two.unwrap()).unwrap();
                let mut up = s.to_string();
                up[..1].make_ascii_uppercase();
                (element::by_symbol(&up).unwrap().number, true)
            } else if matches!(c, b'b' | b'c' | b'n' | b'o' | b'p' | b's') {
                self.pos += 1;
                let up = (c as char).to_ascii_uppercase().to_string();
                (element::by_symbol(&up).unwrap().number, true)
            } else {
                return Err(SmilesError::UnknownElement {
                    symbol: (c as char).to_string(),
                    pos: sym_start,
                });
            }
        } else if c.is_ascii_uppercase() {
            let one = (c as char).to_string();
            let two = self
                .src
                .get(self.pos + 1)
                .filter(|n| n.is_ascii_lowercase())
                .map(|&n| format!("{}{}", c as char, n as char));
            match two.as_deref().and_then(element::by_symbol) {
                Some(e) => {
                    self.pos += 2;
                    (e.number, false)
                }
                None => match element::by_symbol(&one) {
                    Some(e) => {
                        self.pos += 1;
                        (e.number, false)
                    }
                    None => {
                        return Err(SmilesError::UnknownElement { symbol: one, pos: sym_start })
                    }
                },
            }
        } else {
            return Err(SmilesError::UnexpectedChar { ch: c as char, pos: sym_start });
        };

        // Chirality: '@', '@@', or '@TH1'-style classes. Parsed and dropped.
        if self.peek() == Some(b'@') {
            self.pos += 1;
            if self.peek() == Some(b'@') {
                self.pos += 1;
            } else if self.peek().is_some_and(|c| c.is_ascii_uppercase()) {
                self.pos += 2.min(self.src.len() - self.pos);
                self.number();
            }
        }

        let mut hcount = 0u8;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            hcount = self.number().map(|n| n as u8).unwrap_or(1);
        }

        let mut charge: i8 = 0;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let unit: i8 = if sign == b'+' { 1 } else { -1 };
            self.pos += 1;
            if let Some(n) = self.number() {
                charge = unit * n as i8;
            } else {
                charge = unit;
                while self.peek() == Some(sign) {
                    self.pos += 1;
                    charge += unit;
                }
            }
        }

        if self.peek() == Some(b':') {
            self.pos += 1;
            self.number();
        }
        match self.peek() {
            Some(b']') => self.pos += 1,
            Some(ch) => {
                return Err(SmilesError::UnexpectedChar { ch: ch as char, pos: self.pos })
            }
            None => return Err(unclosed),
        }

        Ok(Atom {
            element: number,
            formal_charge: charge,
            is_aromatic: aromatic,
            explicit_h: hcount,
            implicit_h: 0,
            bracket: true,
            isotope,
        })
    }
}
