//! Backtracking graph-isomorphism check, independent of canonical ranking.

use crate::mol::graph::MolGraph;

/// True when `a` and `b` are isomorphic as labelled graphs (element, charge,
/// aromaticity, hydrogen count, isotope and bond orders must all agree).
pub fn is_isomorphic(a: &MolGraph, b: &MolGraph) -> bool {
    if a.num_atoms() != b.num_atoms() || a.num_bonds() != b.num_bonds() {
        return false;
    }
    let label = |g: &MolGraph, i: usize| {
        let x = g.atom(i);
        let mut orders: Vec<_> = g.neighbors(i).iter().map(|e| g.bond(e.bond).order).collect();
        orders.sort();
        (x.element, x.formal_charge, x.is_aromatic, x.total_h(), x.isotope, orders)
    };
    let la: Vec<_> = (0..a.num_atoms()).map(|i| label(a, i)).collect();
    let lb: Vec<_> = (0..b.num_atoms()).map(|i| label(b, i)).collect();
    let mut sa = la.clone();
    let mut sb = lb.clone();
    sa.sort();
    sb.sort();
    if sa != sb {
        return false;
    }
    // Match atoms of `a` in BFS order so each new atom has a mapped neighbour.
    let order = bfs_order(a);
    let mut map = vec![usize::MAX; a.num_atoms()];
    let mut used = vec![false; b.num_atoms()];
    extend(a, b, &la, &lb, &order, 0, &mut map, &mut used)
}

fn bfs_order(g: &MolGraph) -> Vec<usize> {
    let mut seen = vec![false; g.num_atoms()];
    let mut out = Vec::with_capacity(g.num_atoms());
    for s in 0..g.num_atoms() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut q = std::collections::VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            out.push(v);
            for e in g.neighbors(v) {
                if !seen[e.atom] {
                    seen[e.atom] = true;
                    q.push_back(e.atom);
                }
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn extend<L: PartialEq>(
    a: &MolGraph,
    b: &MolGraph,
    la: &[L],
    lb: &[L],
    order: &[usize],
    depth: usize,
    map: &mut [usize],
    used: &mut [bool],
) -> bool {
    if depth == order.len() {
        return true;
    }
    let v = order[depth];
    for w in 0..b.num_atoms() {
        if used[w] || la[v] != lb[w] {
            continue;
        }
        let consistent = a.neighbors(v).iter().all(|e| {
            let m = map[e.atom];
            m == usize::MAX
                || b.bond_between(w, m).map(|bb| bb.order) == Some(a.bond(e.bond).order)
        });
        if !consistent {
            continue;
        }
        map[v] = w;
        used[w] = true;
        if extend(a, b, la, lb, order, depth + 1, map, used) {
            return true;
        }
        map[v] = usize::MAX;
        used[w] = false;
    }
    false
}
