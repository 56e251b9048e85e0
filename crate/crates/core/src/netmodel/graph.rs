use std::collections::BTreeSet;

use super::{BusId, LineId, Network};
use crate::error::{Error, Result};

/// Disjoint-set forest over bus ids `1..=n` (index 0 unused).
pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..=n).collect(),
            rank: vec![0; n + 1],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Connected components of the network once faulted lines are removed and
/// every remaining line, ties included, is treated as closable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IslandPartition {
    /// Sorted bus ids per component; components ordered by their smallest bus.
    pub components: Vec<Vec<BusId>>,
    pub main_component: usize,
    component_of: Vec<usize>,
}

impl IslandPartition {
    pub fn component_of(&self, bus: BusId) -> usize {
        self.component_of[bus]
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Buses with no path to the substation.
    pub fn stranded_buses(&self) -> impl Iterator<Item = BusId> + '_ {
        self.components
            .iter()
            .enumerate()
            .filter(move |(c, _)| *c != self.main_component)
            .flat_map(|(_, buses)| buses.iter().copied())
    }

    pub fn is_stranded(&self, bus: BusId) -> bool {
        self.component_of[bus] != self.main_component
    }
}

pub fn structural_islands(net: &Network, faults: &BTreeSet<LineId>) -> Result<IslandPartition> {
    for &id in faults {
        let line = net.line(id)?;
        if line.is_tie() {
            return Err(Error::InvalidArgument(format!(
                "line {id} is a tie line and cannot be faulted"
            )));
        }
    }
    let n = net.n_buses();
    let mut uf = UnionFind::new(n);
    for line in net.lines() {
        if !faults.contains(&line.id) {
            uf.union(line.from_bus, line.to_bus);
        }
    }
    // Buses are visited in increasing id, so components come out ordered by
    // their minimum bus id.
    let mut root_to_comp = vec![usize::MAX; n + 1];
    let mut components: Vec<Vec<BusId>> = Vec::new();
    let mut component_of = vec![usize::MAX; n + 1];
    for b in 1..=n {
        let r = uf.find(b);
        if root_to_comp[r] == usize::MAX {
            root_to_comp[r] = components.len();
            components.push(Vec::new());
        }
        components[root_to_comp[r]].push(b);
        component_of[b] = root_to_comp[r];
    }
    Ok(IslandPartition {
        main_component: component_of[1],
        components,
        component_of,
    })
}

/// Outcome of a radiality check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RadialCheck {
    pub radial: bool,
    /// Components of the graph induced by the closed lines (isolated buses count).
    pub components: usize,
    /// Closed lines that close a loop.
    pub loop_lines: Vec<LineId>,
    pub diagnostic: String,
}

/// True iff every component induced by `closed` is a tree.
pub fn check_radial(net: &Network, closed: &BTreeSet<LineId>) -> RadialCheck {
    let n = net.n_buses();
    let mut uf = UnionFind::new(n);
    let mut loop_lines = Vec::new();
    let mut unknown = Vec::new();
    let mut merged = 0;
    for &id in closed {
        match net.line(id) {
            Ok(line) => {
                if uf.union(line.from_bus, line.to_bus) {
                    merged += 1;
                } else {
                    loop_lines.push(id);
                }
            }
            Err(_) => unknown.push(id),
        }
    }
    let components = n - merged;
    let radial = loop_lines.is_empty() && unknown.is_empty();
    let diagnostic = if !unknown.is_empty() {
        format!("unknown line ids {unknown:?}")
    } else if radial {
        format!("radial: {} closed lines, {components} trees", closed.len())
    } else {
        format!("{} loop(s) closed by lines {loop_lines:?}", loop_lines.len())
    };
    RadialCheck {
        radial,
        components,
        loop_lines,
        diagnostic,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::tests::{bus, line};
    use crate::netmodel::{LineKind, SystemParams};

    /// 1-2-3-4 chain with a tie 1-4 and a pendant bus 5 on 3.
    fn ring() -> Network {
        let buses = (1..=5).map(|i| bus(i, 0.1)).collect();
        let lines = vec![
            line(1, 1, 2, LineKind::Sectionalizing),
            line(2, 2, 3, LineKind::Sectionalizing),
            line(3, 3, 4, LineKind::Sectionalizing),
            line(4, 3, 5, LineKind::Sectionalizing),
            line(5, 1, 4, LineKind::Tie),
        ];
        Network::new(buses, lines, SystemParams::default()).unwrap()
    }

    #[test]
    fn tie_restores_downstream_buses() {
        let net = ring();
        let parts = structural_islands(&net, &BTreeSet::from([2])).unwrap();
        assert_eq!(parts.len(), 1);
    }

    #[test]
    fn pendant_bus_is_stranded() {
        let net = ring();
        let parts = structural_islands(&net, &BTreeSet::from([4])).unwrap();
        assert_eq!(parts.components, vec![vec![1, 2, 3, 4], vec![5]]);
        assert_eq!(parts.main_component, 0);
        assert_eq!(parts.stranded_buses().collect::<Vec<_>>(), vec![5]);
    }

    #[test]
    fn rejects_unknown_and_tie_faults() {
        let net = ring();
        assert!(matches!(
            structural_islands(&net, &BTreeSet::from([9])),
            Err(Error::UnknownLine(9))
        ));
        assert!(structural_islands(&net, &BTreeSet::from([5])).is_err());
    }

    #[test]
    fn radial_checks() {
        let net = ring();
        assert!(check_radial(&net, &BTreeSet::from([1, 2, 3, 4])).radial);
        let all = check_radial(&net, &BTreeSet::from([1, 2, 3, 4, 5]));
        assert!(!all.radial);
        assert_eq!(all.loop_lines.len(), 1);
        let empty = check_radial(&net, &BTreeSet::new());
        assert!(empty.radial);
        assert_eq!(empty.components, 5);
    }
}
