//! Canonical SMILES writer. The writer emits a token stream so that the
//! FG-enhanced tokenizer can decorate atoms without re-deriving the layout.

use crate::element;
use crate::mol::canon::canonical_ranks;
use crate::mol::graph::{implicit_h_for, Atom, BondOrder, MolGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenKind {
    Atom,
    Bond,
    BranchOpen,
    BranchClose,
    RingClosure,
    Dot,
}

/// One lexical unit of written SMILES, with its source atom for atom tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WrittenToken {
    pub kind: TokenKind,
    pub text: String,
    pub atom: Option<usize>,
}

impl WrittenToken {
    fn new(kind: TokenKind, text: impl Into<String>) -> Self {
        WrittenToken { kind, text: text.into(), atom: None }
    }
}

/// Canonical SMILES for `g`. Components are written separately and joined by
/// '.' in lexicographic order.
pub fn write_smiles(g: &MolGraph) -> String {
    write_tokens(g).into_iter().map(|t| t.text).collect()
}

/// Canonical SMILES token stream for `g`.
pub fn write_tokens(g: &MolGraph) -> Vec<WrittenToken> {
    let ranks = canonical_ranks(g);
    write_tokens_ranked(g, &ranks)
}

pub fn write_tokens_ranked(g: &MolGraph, ranks: &[usize]) -> Vec<WrittenToken> {
    let (comp, count) = g.component_ids();
    let mut pieces: Vec<(String, Vec<WrittenToken>)> = (0..count)
        .map(|c| {
            let root = (0..g.num_atoms())
                .filter(|&i| comp[i] == c)
                .min_by_key(|&i| ranks[i])
                .expect("component is non-empty");
            let toks = Writer::new(g, ranks).component(root);
            let text: String = toks.iter().map(|t| t.text.as_str()).collect();
            (text, toks)
        })
        .collect();
    pieces.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out = Vec::new();
    for (i, (_, toks)) in pieces.into_iter().enumerate() {
        if i > 0 {
            out.push(WrittenToken::new(TokenKind::Dot, "."));
        }
        out.extend(toks);
    }
    out
}

/// Text of a single atom as it would appear in SMILES.
pub fn atom_text(g: &MolGraph, i: usize) -> String {
    let a = g.atom(i);
    if can_write_bare(a, g.bond_order_sum(i)) {
        let s = element::symbol(a.element);
        return if a.is_aromatic { s.to_ascii_lowercase() } else { s.to_string() };
    }
    let mut s = String::from("[");
    if let Some(iso) = a.isotope {
        s.push_str(&iso.to_string());
    }
    let sym = element::symbol(a.element);
    if a.is_aromatic {
        s.push_str(&sym.to_ascii_lowercase());
    } else {
        s.push_str(sym);
    }
    match a.total_h() {
        0 => {}
        1 => s.push('H'),
        h => {
            s.push('H');
            s.push_str(&h.to_string());
        }
    }
    match a.formal_charge {
        0 => {}
        1 => s.push('+'),
        -1 => s.push('-'),
        c if c > 0 => s.push_str(&format!("+{c}")),
        c => s.push_str(&format!("-{}", -c)),
    }
    s.push(']');
    s
}

fn can_write_bare(a: &Atom, bond_sum: u8) -> bool {
    if a.formal_charge != 0 || a.isotope.is_some() {
        return false;
    }
    if a.element == 0 {
        return a.total_h() == 0;
    }
    if !element::is_organic_subset(a.element) {
        return false;
    }
    if a.is_aromatic && !matches!(a.element, 5 | 6 | 7 | 8 | 15 | 16) {
        return false;
    }
    if element::default_valences(a.element).is_empty() {
        return false;
    }
    a.total_h() == implicit_h_for(a, bond_sum)
}

fn bond_text(g: &MolGraph, a: usize, b: usize, order: BondOrder) -> &'static str {
    let both_aromatic = g.atom(a).is_aromatic && g.atom(b).is_aromatic;
    match order {
        BondOrder::Single if both_aromatic => "-",
        BondOrder::Single => "",
        BondOrder::Aromatic if both_aromatic => "",
        BondOrder::Aromatic => ":",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Quadruple => "$",
    }
}

struct Writer<'a> {
    g: &'a MolGraph,
    ranks: &'a [usize],
    visited: Vec<bool>,
    children: Vec<Vec<usize>>,
    /// Ring closures per atom: (partner, bond index), opening side first.
    closures: Vec<Vec<(usize, usize)>>,
    order: Vec<usize>,
}

impl<'a> Writer<'a> {
    fn new(g: &'a MolGraph, ranks: &'a [usize]) -> Self {
        let n = g.num_atoms();
        Writer {
            g,
            ranks,
            visited: vec![false; n],
            children: vec![Vec::new(); n],
            closures: vec![Vec::new(); n],
            order: vec![usize::MAX; n],
        }
    }

    fn sorted_neighbors(&self, v: usize) -> Vec<(usize, usize)> {
        let mut nb: Vec<(usize, usize)> = self
            .g
            .neighbors(v)
            .iter()
            .map(|e| (e.atom, e.bond))
            .collect();
        nb.sort_by_key(|&(a, _)| self.ranks[a]);
        nb
    }

    fn component(mut self, root: usize) -> Vec<WrittenToken> {
        // Pass 1: depth-first spanning tree; every non-tree bond becomes a
        // ring closure between an atom and one of its ancestors.
        let mut used_bond = vec![false; self.g.num_bonds()];
        let mut counter = 0;
        let mut stack = vec![(root, usize::MAX, usize::MAX)];
        while let Some((v, parent, via)) = stack.pop() {
            if self.visited[v] {
                continue;
            }
            self.visited[v] = true;
            self.order[v] = counter;
            counter += 1;
            if via != usize::MAX {
                used_bond[via] = true;
                self.children[parent].push(v);
            }
            let nb = self.sorted_neighbors(v);
            for &(w, b) in &nb {
                if self.visited[w] && !used_bond[b] {
                    used_bond[b] = true;
                    self.closures[w].push((v, b));
                    self.closures[v].push((w, b));
                }
            }
            for &(w, b) in nb.iter().rev() {
                if !self.visited[w] {
                    stack.push((w, v, b));
                }
            }
        }
        for v in 0..self.g.num_atoms() {
            let order = &self.order;
            self.closures[v].sort_by_key(|&(w, _)| order[w]);
        }

        // Children ordered by (subtree size, single bond, rank); the last one
        // continues the chain, so small and multiply-bonded ones branch off.
        let mut size = vec![1usize; self.g.num_atoms()];
        let mut by_order: Vec<usize> = (0..self.g.num_atoms()).filter(|&v| self.visited[v]).collect();
        by_order.sort_by_key(|&v| std::cmp::Reverse(self.order[v]));
        for &v in &by_order {
            let s: usize = self.children[v].iter().map(|&w| size[w]).sum();
            size[v] += s;
        }
        for v in by_order {
            let g = self.g;
            let ranks = self.ranks;
            self.children[v].sort_by_key(|&w| {
                let single = matches!(
                    g.bond_between(v, w).unwrap().order,
                    BondOrder::Single | BondOrder::Aromatic
                );
                (size[w], single, ranks[w])
            });
        }

        // Pass 2: emit.
        let mut out = Vec::new();
        self.emit(root, &mut out);
        out
    }

    fn emit(&self, root: usize, out: &mut Vec<WrittenToken>) {
        enum Step {
            Atom(usize),
            Bond(&'static str),
            Open,
            Close,
        }
        // digits[d] is Some(bond) while ring-closure digit d is open.
        let mut digits: Vec<Option<usize>> = vec![None];
        let mut bond_digit = vec![usize::MAX; self.g.num_bonds()];
        let mut stack = vec![Step::Atom(root)];
        while let Some(step) = stack.pop() {
            let v = match step {
                Step::Open => {
                    out.push(WrittenToken::new(TokenKind::BranchOpen, "("));
                    continue;
                }
                Step::Close => {
                    out.push(WrittenToken::new(TokenKind::BranchClose, ")"));
                    continue;
                }
                Step::Bond(text) => {
                    out.push(WrittenToken::new(TokenKind::Bond, text));
                    continue;
                }
                Step::Atom(v) => v,
            };
            let mut t = WrittenToken::new(TokenKind::Atom, atom_text(self.g, v));
            t.atom = Some(v);
            out.push(t);

            // Closing digits first (partner written earlier), then openings.
            for &(w, b) in &self.closures[v] {
                if self.order[w] < self.order[v] {
                    let d = bond_digit[b];
                    digits[d] = None;
                    out.push(WrittenToken::new(TokenKind::RingClosure, digit_text(d)));
                }
            }
            for &(w, b) in &self.closures[v] {
                if self.order[w] > self.order[v] {
                    let d = match digits.iter().skip(1).position(Option::is_none) {
                        Some(p) => p + 1,
                        None => {
                            digits.push(None);
                            digits.len() - 1
                        }
                    };
                    digits[d] = Some(b);
                    bond_digit[b] = d;
                    let bt = bond_text(self.g, v, w, self.g.bond(b).order);
                    if !bt.is_empty() {
                        out.push(WrittenToken::new(TokenKind::Bond, bt));
                    }
                    out.push(WrittenToken::new(TokenKind::RingClosure, digit_text(d)));
                }
            }

            // All but the last child become branches. The stack is LIFO, so
            // push in reverse.
            let kids = &self.children[v];
            for (k, &w) in kids.iter().enumerate().rev() {
                let branch = k + 1 < kids.len();
                if branch {
                    stack.push(Step::Close);
                }
                stack.push(Step::Atom(w));
                let bt = bond_text(self.g, v, w, self.g.bond_between(v, w).unwrap().order);
                if !bt.is_empty() {
                    stack.push(Step::Bond(bt));
                }
                if branch {
                    stack.push(Step::Open);
                }
            }
        }
    }
}

fn digit_text(d: usize) -> String {
    if d < 10 {
        d.to_string()
    } else {
        format!("%{d:02}")
    }
}
