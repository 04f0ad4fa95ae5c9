//! Ring perception: smallest set of smallest rings and fused-system grouping.

use std::collections::{HashSet, VecDeque};

use crate::mol::graph::MolGraph;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RingInfo {
    /// Each ring as atom indices in cyclic order, starting at its lowest index.
    pub rings: Vec<Vec<usize>>,
    /// Groups of ring indices that transitively share at least one atom.
    pub fused_systems: Vec<Vec<usize>>,
    atom_rings: Vec<Vec<usize>>,
}

impl RingInfo {
    pub fn atom_in_ring(&self, atom: usize) -> bool {
        self.atom_rings.get(atom).is_some_and(|r| !r.is_empty())
    }

    /// Indices of rings containing `atom`.
    pub fn rings_of(&self, atom: usize) -> &[usize] {
        self.atom_rings.get(atom).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_empty(&self) -> bool {
        self.rings.is_empty()
    }

    /// Sorted, deduplicated atoms of one fused system.
    pub fn system_atoms(&self, system: usize) -> Vec<usize> {
        let mut atoms: Vec<usize> = self.fused_systems[system]
            .iter()
            .flat_map(|&r| self.rings[r].iter().copied())
            .collect();
        atoms.sort_unstable();
        atoms.dedup();
        atoms
    }
}

struct BitVec(Vec<u64>);

impl BitVec {
    fn zeros(bits: usize) -> Self {
        BitVec(vec![0; bits.div_ceil(64)])
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
    fn xor(&mut self, other: &BitVec) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a ^= b;
        }
    }
    fn first_set(&self) -> Option<usize> {
        self.0
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }
}

/// Smallest set of smallest rings via Horton candidate cycles and a greedy
/// GF(2) independence test. Ties between equal-length cycles go to the cycle
/// whose sorted atom list is lexicographically smallest.
pub fn perceive_rings(g: &MolGraph) -> RingInfo {
    let n = g.num_atoms();
    let m = g.num_bonds();
    let cyclomatic = m + g.num_components() - n;
    let mut info = RingInfo {
        atom_rings: vec![Vec::new(); n],
        ..Default::default()
    };
    if cyclomatic == 0 {
        return info;
    }

    // Strip tree-like appendages: repeatedly drop atoms of degree <= 1.
    let mut alive = vec![true; n];
    let mut deg: Vec<usize> = (0..n).map(|i| g.degree(i)).collect();
    let mut queue: Vec<usize> = (0..n).filter(|&i| deg[i] <= 1).collect();
    while let Some(v) = queue.pop() {
        if !alive[v] {
            continue;
        }
        alive[v] = false;
        for e in g.neighbors(v) {
            if alive[e.atom] {
                deg[e.atom] -= 1;
                if deg[e.atom] == 1 {
                    queue.push(e.atom);
                }
            }
        }
    }

    let mut sorted_nbrs: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut v: Vec<usize> = g
                .neighbors(i)
                .iter()
                .map(|e| e.atom)
                .filter(|&j| alive[j])
                .collect();
            v.sort_unstable();
            v
        })
        .collect();
    for (i, v) in sorted_nbrs.iter_mut().enumerate() {
        if !alive[i] {
            v.clear();
        }
    }

    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut candidates: Vec<Vec<usize>> = Vec::new();
    let mut push = |cycle: Vec<usize>, seen: &mut HashSet<Vec<usize>>| {
        let mut key = cycle_edges(g, &cycle);
        key.sort_unstable();
        if seen.insert(key) {
            candidates.push(cycle);
        }
    };

    let mut dist = vec![usize::MAX; n];
    let mut parent = vec![usize::MAX; n];
    for root in (0..n).filter(|&i| alive[i]) {
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        parent.iter_mut().for_each(|p| *p = usize::MAX);
        dist[root] = 0;
        let mut q = VecDeque::from([root]);
        let mut order = Vec::new();
        while let Some(v) = q.pop_front() {
            order.push(v);
            for &w in &sorted_nbrs[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    parent[w] = v;
                    q.push_back(w);
                }
            }
        }
        let path = |mut x: usize| {
            let mut p = vec![x];
            while x != root {
                x = parent[x];
                p.push(x);
            }
            p
        };
        for &x in &order {
            for &y in &sorted_nbrs[x] {
                if dist[y] == usize::MAX || y <= x && dist[y] == dist[x] {
                    continue;
                }
                // Odd cycles close across an edge between equal depths; even
                // cycles meet at a vertex with two parents one level up.
                if dist[y] == dist[x] {
                    if parent[x] == y || parent[y] == x {
                        continue;
                    }
                    let px = path(x);
                    let py = path(y);
                    if let Some(c) = join_paths(&px, &py, None) {
                        push(c, &mut seen);
                    }
                } else if dist[y] == dist[x] + 1 && parent[y] != x {
                    let px = path(x);
                    let py = path(parent[y]);
                    if let Some(c) = join_paths(&px, &py, Some(y)) {
                        push(c, &mut seen);
                    }
                }
            }
        }
    }

    candidates.sort_by(|a, b| {
        a.len().cmp(&b.len()).then_with(|| {
            let mut sa = a.clone();
            let mut sb = b.clone();
            sa.sort_unstable();
            sb.sort_unstable();
            sa.cmp(&sb)
        })
    });

    let mut basis: Vec<(usize, BitVec)> = Vec::new();
    for cycle in candidates {
        let mut v = BitVec::zeros(m);
        for b in cycle_edges(g, &cycle) {
            v.set(b);
        }
        for (pivot, row) in &basis {
            if v.get(*pivot) {
                v.xor(row);
            }
        }
        if let Some(pivot) = v.first_set() {
            // Keep rows reduced so later tests only need a single pass.
            for (_, row) in basis.iter_mut() {
                if row.get(pivot) {
                    row.xor(&v);
                }
            }
            basis.push((pivot, v));
            info.rings.push(normalize_cycle(cycle));
            if info.rings.len() == cyclomatic {
                break;
            }
        }
    }

    for (r, ring) in info.rings.iter().enumerate() {
        for &a in ring {
            info.atom_rings[a].push(r);
        }
    }
    info.fused_systems = group_fused(&info.rings, &info.atom_rings);
    info
}

/// Joins two root paths (each ending at the shared root) into a cycle, with
/// an optional apex vertex between their far ends. Returns None when the
/// paths share anything other than the root.
fn join_paths(px: &[usize], py: &[usize], apex: Option<usize>) -> Option<Vec<usize>> {
    let root = *px.last()?;
    let set: HashSet<usize> = px[..px.len() - 1].iter().copied().collect();
    if py[..py.len() - 1].iter().any(|v| set.contains(v)) {
        return None;
    }
    if let Some(a) = apex {
        if set.contains(&a) || py.contains(&a) || a == root {
            return None;
        }
    }
    let mut cycle: Vec<usize> = px.to_vec();
    cycle.pop();
    cycle.reverse();
    cycle.insert(0, root);
    // cycle: root .. x ; then apex ; then y .. (excluding root)
    let mut out = cycle;
    if let Some(a) = apex {
        out.push(a);
    }
    out.extend(py[..py.len() - 1].iter().copied());
    Some(out)
}

fn cycle_edges(g: &MolGraph, cycle: &[usize]) -> Vec<usize> {
    (0..cycle.len())
        .map(|i| {
            let a = cycle[i];
            let b = cycle[(i + 1) % cycle.len()];
            g.neighbors(a)
                .iter()
                .find(|e| e.atom == b)
                .map(|e| e.bond)
                .expect("cycle follows bonds")
        })
        .collect()
}

fn normalize_cycle(cycle: Vec<usize>) -> Vec<usize> {
    let n = cycle.len();
    let start = (0..n).min_by_key(|&i| cycle[i]).unwrap();
    let next = cycle[(start + 1) % n];
    let prev = cycle[(start + n - 1) % n];
    if next <= prev {
        (0..n).map(|k| cycle[(start + k) % n]).collect()
    } else {
        (0..n).map(|k| cycle[(start + n - k) % n]).collect()
    }
}

fn group_fused(rings: &[Vec<usize>], atom_rings: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..rings.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut c = x;
        while p[c] != r {
            let next = p[c];
            p[c] = r;
            c = next;
        }
        r
    }
    for rs in atom_rings {
        for w in rs.windows(2) {
            let a = find(&mut parent, w[0]);
            let b = find(&mut parent, w[1]);
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; rings.len()];
    for r in 0..rings.len() {
        let root = find(&mut parent, r);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(r);
    }
    groups
}

#[cfg(test)]
mod tests {
    use crate::mol::parse_smiles;

    fn sizes(s: &str) -> (Vec<usize>, usize) {
        let g = parse_smiles(s).unwrap();
        let info = g.rings();
        let mut sz: Vec<usize> = info.rings.iter().map(Vec::len).collect();
        sz.sort_unstable();
        (sz, info.fused_systems.len())
    }

    #[test]
    fn simple_rings() {
        assert_eq!(sizes("c1ccccc1"), (vec![6], 1));
        assert_eq!(sizes("CCO"), (vec![], 0));
        assert_eq!(sizes("C1CC1"), (vec![3], 1));
    }

    #[test]
    fn fused_and_linked() {
        assert_eq!(sizes("c1ccc2ccccc2c1"), (vec![6, 6], 1));
        assert_eq!(sizes("c1ccc(-c2ccccc2)cc1"), (vec![6, 6], 2));
        assert_eq!(sizes("c1ccc2[nH]ccc2c1"), (vec![5, 6], 1));
        // spiro rings share one atom and count as fused
        assert_eq!(sizes("C1CCC2(CC1)CCC2"), (vec![4, 6], 1));
    }

    #[test]
    fn cage_like_systems() {
        // adamantane: cyclomatic number 3, all rings of size 6
        assert_eq!(sizes("C1C2CC3CC1CC(C2)C3"), (vec![6, 6, 6], 1));
        // cubane: 5 independent 4-rings
        assert_eq!(sizes("C12C3C4C1C5C2C3C45"), (vec![4, 4, 4, 4, 4], 1));
        // norbornane
        assert_eq!(sizes("C1CC2CCC1C2"), (vec![5, 5], 1));
    }

    #[test]
    fn naphthalene_shares_two_atoms() {
        let g = parse_smiles("c1ccc2ccccc2c1").unwrap();
        let r = &g.rings().rings;
        let shared = r[0].iter().filter(|a| r[1].contains(a)).count();
        assert_eq!(shared, 2);
    }
}
