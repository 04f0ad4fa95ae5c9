use std::fmt;
use std::sync::OnceLock;

use crate::element;
use crate::mol::rings::{perceive_rings, RingInfo};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Quadruple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to the valence sum. Aromatic bonds count as one; the
    /// extra pi electron is accounted for separately on aromatic atoms.
    pub fn valence(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Quadruple => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BondOrder::Single => "single",
            BondOrder::Double => "double",
            BondOrder::Triple => "triple",
            BondOrder::Quadruple => "quadruple",
            BondOrder::Aromatic => "aromatic",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Quadruple => 4,
            BondOrder::Aromatic => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    /// Atomic number; 0 is the wildcard `*`.
    pub element: u8,
    pub formal_charge: i8,
    pub is_aromatic: bool,
    /// Hydrogens written inside a bracket atom.
    pub explicit_h: u8,
    /// Hydrogens implied by the valence model (organic-subset atoms only).
    pub implicit_h: u8,
    /// Written as a bracket atom in the source, so no implicit hydrogens.
    pub bracket: bool,
    pub isotope: Option<u16>,
}

impl Atom {
    pub fn new(element: u8) -> Self {
        Atom {
            element,
            formal_charge: 0,
            is_aromatic: false,
            explicit_h: 0,
            implicit_h: 0,
            bracket: false,
            isotope: None,
        }
    }

    pub fn symbol(&self) -> &'static str {
        element::symbol(self.element)
    }

    pub fn total_h(&self) -> u8 {
        self.explicit_h + self.implicit_h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

/// Neighbour entry in the adjacency list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub atom: usize,
    pub bond: usize,
}

/// A molecule (possibly several disconnected components) as an atom/bond graph.
#[derive(Debug, Clone)]
pub struct MolGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    adjacency: Vec<Vec<Edge>>,
    rings: OnceLock<RingInfo>,
}

impl PartialEq for MolGraph {
    fn eq(&self, other: &Self) -> bool {
        self.atoms == other.atoms && self.bonds == other.bonds
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("bond {0} references atom {1} which does not exist")]
    DanglingBond(usize, usize),
    #[error("bond {0} is a self-loop on atom {1}")]
    SelfLoop(usize, usize),
    #[error("atoms {0} and {1} are bonded more than once")]
    DuplicateBond(usize, usize),
}

impl MolGraph {
    /// Builds a graph, checking bond endpoints. Hydrogen counts are taken as given.
    pub fn new(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self, GraphError> {
        let mut adjacency = vec![Vec::new(); atoms.len()];
        for (i, b) in bonds.iter().enumerate() {
            if b.a >= atoms.len() {
                return Err(GraphError::DanglingBond(i, b.a));
            }
            if b.b >= atoms.len() {
                return Err(GraphError::DanglingBond(i, b.b));
            }
            if b.a == b.b {
                return Err(GraphError::SelfLoop(i, b.a));
            }
            if adjacency[b.a].iter().any(|e: &Edge| e.atom == b.b) {
                return Err(GraphError::DuplicateBond(b.a, b.b));
            }
            adjacency[b.a].push(Edge { atom: b.b, bond: i });
            adjacency[b.b].push(Edge { atom: b.a, bond: i });
        }
        Ok(MolGraph {
            atoms,
            bonds,
            adjacency,
            rings: OnceLock::new(),
        })
    }

    pub fn empty() -> Self {
        MolGraph::new(Vec::new(), Vec::new()).expect("empty graph is valid")
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn bond(&self, i: usize) -> &Bond {
        &self.bonds[i]
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn num_bonds(&self) -> usize {
        self.bonds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[Edge] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        self.adjacency[a]
            .iter()
            .find(|e| e.atom == b)
            .map(|e| &self.bonds[e.bond])
    }

    /// Sum of bond valence contributions at atom `i`.
    pub fn bond_order_sum(&self, i: usize) -> u8 {
        self.adjacency[i]
            .iter()
            .map(|e| self.bonds[e.bond].order.valence())
            .sum()
    }

    pub fn total_h(&self) -> usize {
        self.atoms.iter().map(|a| a.total_h() as usize).sum()
    }

    /// Ring perception, computed on first use.
    pub fn rings(&self) -> &RingInfo {
        self.rings.get_or_init(|| perceive_rings(self))
    }

    pub fn is_ring_atom(&self, i: usize) -> bool {
        self.rings().atom_in_ring(i)
    }

    /// Connected-component id per atom, numbered in order of first atom.
    pub fn component_ids(&self) -> (Vec<usize>, usize) {
        let n = self.atoms.len();
        let mut comp = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = count;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for e in &self.adjacency[v] {
                    if comp[e.atom] == usize::MAX {
                        comp[e.atom] = count;
                        stack.push(e.atom);
                    }
                }
            }
            count += 1;
        }
        (comp, count)
    }

    pub fn num_components(&self) -> usize {
        self.component_ids().1
    }

    /// Splits into connected components, preserving relative atom order.
    pub fn components(&self) -> Vec<MolGraph> {
        let (comp, count) = self.component_ids();
        (0..count)
            .map(|c| {
                let keep: Vec<usize> = (0..self.num_atoms()).filter(|&i| comp[i] == c).collect();
                self.subgraph(&keep, false)
            })
            .collect()
    }

    /// Induced subgraph over `keep` (in the given order). When `recompute_h`
    /// is set, unbracketed atoms get their implicit hydrogens refilled from the
    /// bonds that remain, i.e. removed neighbours are replaced by hydrogen.
    pub fn subgraph(&self, keep: &[usize], recompute_h: bool) -> MolGraph {
        let mut map = vec![usize::MAX; self.num_atoms()];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let atoms: Vec<Atom> = keep.iter().map(|&i| self.atoms[i].clone()).collect();
        let bonds: Vec<Bond> = self
            .bonds
            .iter()
            .filter(|b| map[b.a] != usize::MAX && map[b.b] != usize::MAX)
            .map(|b| Bond {
                a: map[b.a],
                b: map[b.b],
                order: b.order,
            })
            .collect();
        let mut g = MolGraph::new(atoms, bonds).expect("induced subgraph is valid");
        if recompute_h {
            g.fill_implicit_h();
        }
        g
    }

    /// Relabels atoms so that new atom `k` is old atom `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> MolGraph {
        assert_eq!(perm.len(), self.num_atoms());
        let mut inv = vec![0; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let atoms = perm.iter().map(|&i| self.atoms[i].clone()).collect();
        let mut bonds: Vec<Bond> = self
            .bonds
            .iter()
            .map(|b| Bond {
                a: inv[b.a],
                b: inv[b.b],
                order: b.order,
            })
            .collect();
        bonds.sort_by_key(|b| (b.a.min(b.b), b.a.max(b.b)));
        MolGraph::new(atoms, bonds).expect("permutation preserves validity")
    }

    /// Recomputes implicit hydrogens on every unbracketed atom.
    pub fn fill_implicit_h(&mut self) {
        for i in 0..self.atoms.len() {
            if !self.atoms[i].bracket {
                let sum = self.bond_order_sum(i);
                self.atoms[i].implicit_h = implicit_h_for(&self.atoms[i], sum);
            }
        }
    }

    /// Atoms whose bond-order sum plus hydrogens exceeds every allowed valence.
    pub fn valence_violations(&self) -> Vec<usize> {
        (0..self.num_atoms())
            .filter(|&i| {
                let a = &self.atoms[i];
                let allowed = element::charged_valences(a.element, a.formal_charge);
                if allowed.is_empty() {
                    return false;
                }
                let used = self.bond_order_sum(i) as u16 + a.total_h() as u16;
                let max = *allowed.iter().max().unwrap() as u16;
                used > max
            })
            .collect()
    }
}

/// Implicit hydrogen count for an unbracketed atom with the given bond-order sum.
pub fn implicit_h_for(atom: &Atom, bond_sum: u8) -> u8 {
    let valences = element::default_valences(atom.element);
    if valences.is_empty() {
        return 0;
    }
    if atom.is_aromatic {
        let lowest = valences[0];
        return lowest.saturating_sub(bond_sum + 1);
    }
    valences
        .iter()
        .find(|&&v| v >= bond_sum)
        .map(|&v| v - bond_sum)
        .unwrap_or(0)
}

impl fmt::Display for MolGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::mol::write_smiles(self))
    }
}
