//! Canonical atom ranking by iterative neighbourhood refinement.

use crate::mol::graph::MolGraph;

/// Assigns every atom a distinct rank in `0..n` that depends only on the
/// graph, not on the input atom order (up to symmetry-equivalent atoms).
pub fn canonical_ranks(g: &MolGraph) -> Vec<usize> {
    let n = g.num_atoms();
    if n == 0 {
        return Vec::new();
    }
    let invariants: Vec<_> = (0..n)
        .map(|i| {
            let a = g.atom(i);
            let mut orders: Vec<u8> = g
                .neighbors(i)
                .iter()
                .map(|e| g.bond(e.bond).order.code())
                .collect();
            orders.sort_unstable();
            (
                a.element,
                a.isotope.unwrap_or(0),
                a.formal_charge,
                a.is_aromatic,
                g.degree(i),
                a.total_h(),
                g.is_ring_atom(i),
                orders,
            )
        })
        .collect();
    let mut ranks = dense_ranks(&invariants);
    loop {
        ranks = refine(g, ranks);
        let classes = ranks.iter().max().map_or(0, |m| m + 1);
        if classes == n {
            return ranks;
        }
        ranks = break_tie(&ranks);
    }
}

fn dense_ranks<K: Ord>(keys: &[K]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut ranks = vec![0; keys.len()];
    let mut r = 0;
    for w in 0..idx.len() {
        if w > 0 && keys[idx[w]] != keys[idx[w - 1]] {
            r += 1;
        }
        ranks[idx[w]] = r;
    }
    ranks
}

fn refine(g: &MolGraph, mut ranks: Vec<usize>) -> Vec<usize> {
    let mut classes = ranks.iter().max().map_or(0, |m| m + 1);
    loop {
        let keys: Vec<(usize, Vec<(usize, u8)>)> = (0..g.num_atoms())
            .map(|i| {
                let mut nb: Vec<(usize, u8)> = g
                    .neighbors(i)
                    .iter()
                    .map(|e| (ranks[e.atom], g.bond(e.bond).order.code()))
                    .collect();
                nb.sort_unstable();
                (ranks[i], nb)
            })
            .collect();
        let next = dense_ranks(&keys);
        let next_classes = next.iter().max().map_or(0, |m| m + 1);
        if next_classes == classes {
            return next;
        }
        classes = next_classes;
        ranks = next;
    }
}

fn break_tie(ranks: &[usize]) -> Vec<usize> {
    let classes = ranks.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; classes];
    for &r in ranks {
        counts[r] += 1;
    }
    let tied = (0..classes).find(|&c| counts[c] > 1).expect("called with a tie");
    let chosen = ranks.iter().position(|&r| r == tied).unwrap();
    let keys: Vec<usize> = ranks
        .iter()
        .enumerate()
        .map(|(i, &r)| if r == tied && i != chosen { 2 * r + 1 } else { 2 * r })
        .collect();
    dense_ranks(&keys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mol::parse_smiles;

    #[test]
    fn ranks_are_a_permutation() {
        for s in ["CCO", "c1ccccc1", "CC(C)(C)C", "OC(=O)c1ccccc1O"] {
            let g = parse_smiles(s).unwrap();
            let mut r = canonical_ranks(&g);
            r.sort_unstable();
            assert_eq!(r, (0..g.num_atoms()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn ranks_follow_atoms_under_permutation() {
        let g = parse_smiles("OCC(=O)N").unwrap();
        let perm = [4, 2, 0, 3, 1];
        let p = g.permuted(&perm);
        let r = canonical_ranks(&g);
        let rp = canonical_ranks(&p);
        for (new, &old) in perm.iter().enumerate() {
            assert_eq!(rp[new], r[old]);
        }
    }
}
