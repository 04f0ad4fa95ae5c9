//! Atomic-contribution descriptors: Crippen-style logP, Ertl-style TPSA,
//! molecular weight and a linear solubility estimate.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::element;
use crate::mol::{BondOrder, MolGraph};
use crate::pattern::Pattern;

const CRIPPEN: &str = include_str!("../../data/crippen.tsv");
const TPSA: &str = include_str!("../../data/tpsa.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptorSet {
    pub logp: f64,
    pub mw: f64,
    pub tpsa: f64,
    pub solubility: f64,
}

/// logS = c0 + c1*logP + c2*MW + c3*TPSA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolubilityModel {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Default for SolubilityModel {
    fn default() -> Self {
        SolubilityModel { c0: 0.26, c1: -0.74, c2: -0.0066, c3: 0.003 }
    }
}

impl SolubilityModel {
    pub fn estimate(&self, logp: f64, mw: f64, tpsa: f64) -> f64 {
        self.c0 + self.c1 * logp + self.c2 * mw + self.c3 * tpsa
    }
}

#[derive(Debug, Clone)]
struct CrippenRow {
    name: String,
    hydrogen: bool,
    pattern: Pattern,
    logp: f64,
}

#[derive(Debug, Clone)]
pub struct CrippenTable {
    rows: Vec<CrippenRow>,
}

impl CrippenTable {
    pub fn parse(text: &str) -> Result<CrippenTable, String> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let c: Vec<&str> = line.split('\t').collect();
            let bad = |m: &str| format!("crippen line {}: {m}", i + 1);
            if c.len() != 4 {
                return Err(bad("expected 4 columns"));
            }
            let hydrogen = match c[1] {
                "heavy" => false,
                "hydrogen" => true,
                _ => return Err(bad("target must be heavy or hydrogen")),
            };
            let pattern = Pattern::parse(c[2]).map_err(|e| bad(&e.to_string()))?;
            let logp = c[3].trim().parse().map_err(|_| bad("bad logp"))?;
            rows.push(CrippenRow { name: c[0].to_string(), hydrogen, pattern, logp });
        }
        Ok(CrippenTable { rows })
    }

    pub fn builtin() -> &'static CrippenTable {
        static T: OnceLock<CrippenTable> = OnceLock::new();
        T.get_or_init(|| CrippenTable::parse(CRIPPEN).expect("bundled crippen table is valid"))
    }

    fn first_match(&self, g: &MolGraph, atom: usize, hydrogen: bool) -> Option<&CrippenRow> {
        self.rows
            .iter()
            .filter(|r| r.hydrogen == hydrogen)
            .find(|r| r.pattern.matches_at(g, atom))
    }

    /// Type name of a heavy atom, if parameterized.
    pub fn atom_type(&self, g: &MolGraph, atom: usize) -> Option<&str> {
        self.first_match(g, atom, false).map(|r| r.name.as_str())
    }

    /// Per-atom contributions including the atom's hydrogens.
    pub fn contributions(&self, g: &MolGraph) -> Vec<f64> {
        (0..g.num_atoms())
            .map(|i| {
                let a = g.atom(i);
                let own = if a.element == 1 {
                    // explicit hydrogen atoms are typed by their neighbour
                    match g.neighbors(i).first() {
                        Some(e) => self.first_match(g, e.atom, true).map_or(0.0, |r| r.logp),
                        None => self.first_match(g, i, true).map_or(0.0, |r| r.logp),
                    }
                } else {
                    match self.first_match(g, i, false) {
                        Some(r) => r.logp,
                        None => {
                            log::warn!("no logP type for atom {i} ({}); using 0", a.symbol());
                            0.0
                        }
                    }
                };
                let h = a.total_h() as f64;
                let hyd = if h > 0.0 {
                    self.first_match(g, i, true).map_or(0.0, |r| r.logp) * h
                } else {
                    0.0
                };
                own + hyd
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct TpsaRow {
    element: u8,
    aromatic: bool,
    h: u8,
    charge: i8,
    single: u8,
    double: u8,
    triple: u8,
    arom: u8,
    ring3: bool,
    value: f64,
}

#[derive(Debug, Clone)]
pub struct TpsaTable {
    rows: Vec<TpsaRow>,
}

impl TpsaTable {
    pub fn parse(text: &str) -> Result<TpsaTable, String> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let c: Vec<&str> = line.split('\t').collect();
            let bad = || format!("tpsa line {}: {line:?}", i + 1);
            if c.len() != 9 {
                return Err(bad());
            }
            let aromatic = c[0].chars().next().is_some_and(|ch| ch.is_ascii_lowercase());
            let mut sym = c[0].to_string();
            sym[..1].make_ascii_uppercase();
            let element = element::by_symbol(&sym).ok_or_else(bad)?.number;
            let n = |k: usize| c[k].trim().parse::<u8>().map_err(|_| bad());
            rows.push(TpsaRow {
                element,
                aromatic,
                h: n(1)?,
                charge: c[2].trim().parse().map_err(|_| bad())?,
                single: n(3)?,
                double: n(4)?,
                triple: n(5)?,
                arom: n(6)?,
                ring3: n(7)? == 1,
                value: c[8].trim().parse().map_err(|_| bad())?,
            });
        }
        Ok(TpsaTable { rows })
    }

    pub fn builtin() -> &'static TpsaTable {
        static T: OnceLock<TpsaTable> = OnceLock::new();
        T.get_or_init(|| TpsaTable::parse(TPSA).expect("bundled tpsa table is valid"))
    }

    pub fn contribution(&self, g: &MolGraph, i: usize) -> f64 {
        let a = g.atom(i);
        if a.element != 7 && a.element != 8 {
            return 0.0;
        }
        let (mut single, mut double, mut triple, mut arom) = (0u8, 0u8, 0u8, 0u8);
        let mut heavy = 0u8;
        for e in g.neighbors(i) {
            if g.atom(e.atom).element == 1 {
                continue;
            }
            heavy += 1;
            match g.bond(e.bond).order {
                BondOrder::Single => single += 1,
                BondOrder::Double => double += 1,
                BondOrder::Triple | BondOrder::Quadruple => triple += 1,
                BondOrder::Aromatic => arom += 1,
            }
        }
        let h = a.total_h() + g.neighbors(i).iter().filter(|e| g.atom(e.atom).element == 1).count() as u8;
        let ring3 = g.rings().rings_of(i).iter().any(|&r| g.rings().rings[r].len() == 3);
        let hit = self.rows.iter().find(|r| {
            r.element == a.element
                && r.aromatic == a.is_aromatic
                && r.h == h
                && r.charge == a.formal_charge
                && r.single == single
                && r.double == double
                && r.triple == triple
                && r.arom == arom
                && r.ring3 == ring3
        });
        match hit {
            Some(r) => r.value,
            None if a.element == 7 => 30.5 - 8.2 * heavy as f64 + 1.5 * h as f64,
            None => 28.5 - 8.6 * heavy as f64 + 1.5 * h as f64,
        }
    }
}

pub fn compute_logp(g: &MolGraph) -> f64 {
    CrippenTable::builtin().contributions(g).iter().sum()
}

pub fn compute_tpsa(g: &MolGraph) -> f64 {
    let t = TpsaTable::builtin();
    (0..g.num_atoms()).map(|i| t.contribution(g, i)).sum()
}

/// Standard atomic weights, implicit hydrogens included.
pub fn compute_mw(g: &MolGraph) -> f64 {
    g.atoms()
        .iter()
        .map(|a| {
            let w = element::by_number(a.element).map_or(0.0, |e| e.weight);
            w + a.total_h() as f64 * element::HYDROGEN_WEIGHT
        })
        .sum()
}

pub fn estimate_solubility(d: &DescriptorSet, model: &SolubilityModel) -> f64 {
    model.estimate(d.logp, d.mw, d.tpsa)
}

pub fn descriptors(g: &MolGraph, model: &SolubilityModel) -> DescriptorSet {
    let (logp, mw, tpsa) = (compute_logp(g), compute_mw(g), compute_tpsa(g));
    DescriptorSet { logp, mw, tpsa, solubility: model.estimate(logp, mw, tpsa) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mol::parse_smiles;

    fn m(s: &str) -> MolGraph {
        parse_smiles(s).unwrap()
    }

    #[test]
    fn empty_and_benzene() {
        assert_eq!(compute_logp(&MolGraph::empty()), 0.0);
        let b = m("c1ccccc1");
        assert!(b.atoms().len() == 6);
        assert_eq!(CrippenTable::builtin().atom_type(&b, 0), Some("C18"));
        // six aromatic CH carbons: C18 plus one H1 hydrogen each
        let oracle = 6.0 * (0.1581 + 0.1230);
        assert!((compute_logp(&b) - oracle).abs() < 1e-12);
        assert!((compute_logp(&b) - 1.69).abs() < 0.3);
        assert_eq!(compute_tpsa(&b), 0.0);
    }

    #[test]
    fn weights() {
        assert!((compute_mw(&m("C")) - 16.043).abs() < 0.01);
        assert!((compute_mw(&m("CCO")) - 46.07).abs() < 0.01);
    }

    #[test]
    fn tpsa_values() {
        assert!((compute_tpsa(&m("CCO")) - 20.23).abs() < 1e-9);
        assert!((compute_tpsa(&m("c1ccccc1[N+](=O)[O-]")) - 43.14).abs() < 1e-9);
        assert!((compute_tpsa(&m("CC(=O)O")) - 37.30).abs() < 1e-9);
        assert!((compute_tpsa(&m("c1cc[nH]c1")) - 15.79).abs() < 1e-9);
        // unlisted environments fall back to the linear estimate
        assert!((compute_tpsa(&m("O")) - 31.5).abs() < 1e-9);
        assert!((compute_tpsa(&m("N")) - 35.0).abs() < 1e-9);
    }

    #[test]
    fn every_corpus_atom_type_is_known() {
        let t = CrippenTable::builtin();
        for s in ["CCO", "CC(=O)O", "c1ccncc1", "C[N+](C)(C)C", "CS(=O)(=O)N", "FC(F)(F)Cl", "OB(O)c1ccccc1", "C[Si](C)(C)C"] {
            let g = m(s);
            for i in 0..g.num_atoms() {
                assert!(t.atom_type(&g, i).is_some(), "{s} atom {i}");
            }
        }
    }

    #[test]
    fn solubility_is_the_linear_formula() {
        let model = SolubilityModel::default();
        assert_eq!(model.estimate(0.0, 0.0, 0.0), 0.26);
        let d = descriptors(&m("CCO"), &model);
        let oracle = 0.26 - 0.74 * d.logp - 0.0066 * d.mw + 0.003 * d.tpsa;
        assert_eq!(estimate_solubility(&d, &model), oracle);
        assert_eq!(d.solubility, oracle);
    }
}
