//! Ground-truth ring configurations and the structural queries the protocol
//! rules are phrased in: holes, segments, node blocks, d.blocks,
//! inter-distance and the periodic / symmetric / rigid classification.
//!
//! Nodes are numbered `0..n` clockwise. The orientation is a simulator
//! convention only; every protocol-facing query is reflection-consistent.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::RingError;

/// Index of a ring node, always reduced modulo `n`.
pub type NodeIndex = usize;

/// Robot count per node, plus the cached robot total.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Configuration {
    occupancy: Vec<u32>,
    robots: u32,
}

/// A maximal run of consecutive empty nodes.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct Hole {
    pub start: NodeIndex,
    pub size: usize,
}

/// Two occupied nodes with only empty nodes between them, clockwise.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Segment {
    pub from: NodeIndex,
    pub to: NodeIndex,
    pub distance: usize,
}

/// A maximal run of consecutive occupied nodes. A lone occupied node is a
/// block of size 1.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct NodeBlock {
    pub start: NodeIndex,
    pub size: usize,
}

/// A maximal run of occupied nodes spaced exactly `d` edges apart.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct DBlock {
    pub d: usize,
    /// Members in clockwise order, border to border.
    pub members: Vec<NodeIndex>,
}

/// Output of [`d_blocks`].
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DBlockLayout {
    pub d: usize,
    pub blocks: Vec<DBlock>,
    pub isolated: Vec<NodeIndex>,
}

/// Symmetry class of the occupied/empty pattern.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum SymmetryClass {
    Periodic,
    /// Invariant under the reflection `i ↦ (t − i) mod n`, with `t < n`.
    Symmetric { reflection: usize },
    Rigid,
}

impl NodeBlock {
    /// Last node of the block, clockwise.
    pub fn end(&self, n: usize) -> NodeIndex {
        (self.start + self.size - 1) % n
    }

    /// The `i`-th node of the block counted clockwise from `start` (0-based).
    pub fn node(&self, i: usize, n: usize) -> NodeIndex {
        debug_assert!(i < self.size);
        (self.start + i) % n
    }

    pub fn contains(&self, node: NodeIndex, n: usize) -> bool {
        (node + n - self.start) % n < self.size
    }
}

impl DBlock {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, node: NodeIndex) -> bool {
        self.members.contains(&node)
    }
}

impl Configuration {
    /// Builds a configuration from per-node robot counts.
    pub fn new(occupancy: Vec<u32>) -> Result<Self, RingError> {
        if occupancy.len() < 3 {
            return Err(RingError::InvalidConfiguration(format!(
                "ring needs at least 3 nodes, got {}",
                occupancy.len()
            )));
        }
        let robots = occupancy.iter().sum();
        Ok(Self { occupancy, robots })
    }

    /// One robot on each listed node.
    pub fn from_occupied(n: usize, nodes: &[NodeIndex]) -> Result<Self, RingError> {
        let mut occupancy = vec![0; n];
        for &node in nodes {
            if node >= n {
                return Err(RingError::NodeOutOfRange { node, n });
            }
            occupancy[node] += 1;
        }
        Self::new(occupancy)
    }

    /// Parses the human-writable placement list used on the command line:
    /// comma-separated nodes, each optionally suffixed `*count`.
    ///
    /// `"0*3,1,4"` puts three robots on node 0 and one each on 1 and 4.
    pub fn from_placement(n: usize, placement: &str) -> Result<Self, RingError> {
        let mut occupancy = vec![0u32; n];
        for item in placement.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (node, count) = match item.split_once('*') {
                Some((node, count)) => (node.trim(), count.trim()),
                None => (item, "1"),
            };
            let node: usize = node
                .parse()
                .map_err(|_| RingError::Parse(format!("bad node {node:?}")))?;
            let count: u32 = count
                .parse()
                .map_err(|_| RingError::Parse(format!("bad count {count:?}")))?;
            if node >= n {
                return Err(RingError::NodeOutOfRange { node, n });
            }
            occupancy[node] += count;
        }
        Self::new(occupancy)
    }

    pub fn n(&self) -> usize {
        self.occupancy.len()
    }

    /// Total robot count.
    pub fn k(&self) -> u32 {
        self.robots
    }

    pub fn occupancy(&self) -> &[u32] {
        &self.occupancy
    }

    pub fn count(&self, node: NodeIndex) -> u32 {
        self.occupancy[node]
    }

    pub fn is_occupied(&self, node: NodeIndex) -> bool {
        self.occupancy[node] > 0
    }

    pub fn is_tower(&self, node: NodeIndex) -> bool {
        self.occupancy[node] >= 2
    }

    pub fn has_tower(&self) -> bool {
        self.occupancy.iter().any(|&c| c >= 2)
    }

    pub fn towers(&self) -> Vec<NodeIndex> {
        (0..self.n()).filter(|&i| self.is_tower(i)).collect()
    }

    /// Occupied nodes in increasing index order.
    pub fn occupied_nodes(&self) -> Vec<NodeIndex> {
        (0..self.n()).filter(|&i| self.is_occupied(i)).collect()
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&c| c > 0).count()
    }

    /// The occupied/empty pattern as a tower-free configuration. This is
    /// everything a robot can see of a remote node.
    pub fn pattern(&self) -> Configuration {
        let occupancy: Vec<u32> = self.occupancy.iter().map(|&c| u32::from(c > 0)).collect();
        let robots = occupancy.iter().sum();
        Configuration { occupancy, robots }
    }

    /// Pattern as a bitmask, node `i` at bit `i`. Requires `n ≤ 64`.
    pub fn pattern_bits(&self) -> u64 {
        debug_assert!(self.n() <= 64);
        self.occupancy
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .fold(0u64, |acc, (i, _)| acc | (1 << i))
    }

    pub fn cw(&self, node: NodeIndex) -> NodeIndex {
        (node + 1) % self.n()
    }

    pub fn ccw(&self, node: NodeIndex) -> NodeIndex {
        (node + self.n() - 1) % self.n()
    }

    /// Edge count walking clockwise from `from` to `to`.
    pub fn cw_distance(&self, from: NodeIndex, to: NodeIndex) -> usize {
        (to + self.n() - from) % self.n()
    }

    /// Shortest edge count between two nodes.
    pub fn ring_distance(&self, a: NodeIndex, b: NodeIndex) -> usize {
        let cw = self.cw_distance(a, b);
        cw.min(self.n() - cw)
    }

    pub fn are_adjacent(&self, a: NodeIndex, b: NodeIndex) -> bool {
        self.ring_distance(a, b) == 1
    }

    /// Next occupied node strictly clockwise of `node` (may be `node` itself
    /// when it is the only occupied node).
    pub fn next_occupied_cw(&self, node: NodeIndex) -> Option<NodeIndex> {
        let n = self.n();
        (1..=n).map(|s| (node + s) % n).find(|&i| self.is_occupied(i))
    }

    pub fn next_occupied_ccw(&self, node: NodeIndex) -> Option<NodeIndex> {
        let n = self.n();
        (1..=n).map(|s| (node + n - s) % n).find(|&i| self.is_occupied(i))
    }

    /// Image under the rotation `i ↦ i + r`.
    pub fn rotate(&self, r: usize) -> Configuration {
        let n = self.n();
        let mut occupancy = vec![0; n];
        for (i, &c) in self.occupancy.iter().enumerate() {
            occupancy[(i + r) % n] = c;
        }
        Configuration { occupancy, robots: self.robots }
    }

    /// Image under the reflection `i ↦ (t − i) mod n`.
    pub fn reflect(&self, t: usize) -> Configuration {
        let n = self.n();
        let mut occupancy = vec![0; n];
        for (i, &c) in self.occupancy.iter().enumerate() {
            occupancy[reflect_node(t, i, n)] = c;
        }
        Configuration { occupancy, robots: self.robots }
    }

    /// Moves one robot from `from` to `to`.
    pub fn with_move(&self, from: NodeIndex, to: NodeIndex) -> Configuration {
        assert!(self.occupancy[from] > 0, "no robot on node {from}");
        let mut next = self.clone();
        next.occupancy[from] -= 1;
        next.occupancy[to] += 1;
        next
    }
}

/// `i ↦ (t − i) mod n`.
pub fn reflect_node(t: usize, i: NodeIndex, n: usize) -> NodeIndex {
    (t % n + n - i % n) % n
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={};occ=", self.n())?;
        for (i, c) in self.occupancy.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for Configuration {
    type Err = RingError;

    /// Parses the canonical text form `n=<int>;occ=<c0>,...,<c(n-1)>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |why: &str| RingError::Parse(format!("{why} in {s:?}"));
        let (n_part, occ_part) = s.split_once(';').ok_or_else(|| bad("missing ';'"))?;
        let n: usize = n_part
            .strip_prefix("n=")
            .ok_or_else(|| bad("missing 'n='"))?
            .parse()
            .map_err(|_| bad("bad ring size"))?;
        let occ = occ_part.strip_prefix("occ=").ok_or_else(|| bad("missing 'occ='"))?;
        let occupancy = occ
            .split(',')
            .map(|c| c.parse::<u32>().map_err(|_| bad("bad count")))
            .collect::<Result<Vec<_>, _>>()?;
        if occupancy.len() != n {
            return Err(bad("count list length differs from n"));
        }
        Configuration::new(occupancy)
    }
}

fn require_occupied(config: &Configuration) -> Result<Vec<NodeIndex>, RingError> {
    let occupied = config.occupied_nodes();
    if occupied.is_empty() {
        return Err(RingError::EmptyConfiguration);
    }
    Ok(occupied)
}

/// Clockwise gap after each occupied node: `gaps[i]` is the distance from
/// `occupied[i]` to the next occupied node.
fn gaps(config: &Configuration, occupied: &[NodeIndex]) -> Vec<usize> {
    let w = occupied.len();
    (0..w)
        .map(|i| {
            let d = config.cw_distance(occupied[i], occupied[(i + 1) % w]);
            if d == 0 {
                config.n()
            } else {
                d
            }
        })
        .collect()
}

/// Holes ordered by their first node.
pub fn holes(config: &Configuration) -> Result<Vec<Hole>, RingError> {
    let occupied = require_occupied(config)?;
    let mut out: Vec<Hole> = gaps(config, &occupied)
        .into_iter()
        .zip(&occupied)
        .filter(|(g, _)| *g > 1)
        .map(|(g, &from)| Hole { start: config.cw(from), size: g - 1 })
        .collect();
    out.sort_by_key(|h| h.start);
    Ok(out)
}

/// Every segment between consecutive occupied nodes, clockwise from the
/// lowest occupied index.
pub fn segments(config: &Configuration) -> Result<Vec<Segment>, RingError> {
    let occupied = require_occupied(config)?;
    let w = occupied.len();
    Ok(gaps(config, &occupied)
        .into_iter()
        .enumerate()
        .map(|(i, distance)| Segment { from: occupied[i], to: occupied[(i + 1) % w], distance })
        .collect())
}

/// Minimum distance between two distinct occupied nodes. Towers count once.
pub fn inter_distance(config: &Configuration) -> Result<usize, RingError> {
    let occupied = config.occupied_nodes();
    if occupied.len() < 2 {
        return Err(RingError::Undefined);
    }
    Ok(gaps(config, &occupied).into_iter().min().expect("non-empty"))
}

/// Maximal arithmetic runs of occupied nodes at spacing `d` (the
/// inter-distance), plus the isolated occupied nodes that belong to none.
pub fn d_blocks(config: &Configuration) -> Result<DBlockLayout, RingError> {
    let occupied = config.occupied_nodes();
    if occupied.len() < 2 {
        return Err(RingError::Undefined);
    }
    let w = occupied.len();
    let gaps = gaps(config, &occupied);
    let d = *gaps.iter().min().expect("non-empty");

    // Every gap is d: the whole ring is a single cyclic run.
    let Some(anchor) = gaps.iter().position(|&g| g != d) else {
        return Ok(DBlockLayout {
            d,
            blocks: vec![DBlock { d, members: occupied }],
            isolated: Vec::new(),
        });
    };

    let mut blocks = Vec::new();
    let mut isolated = Vec::new();
    // Start right after a non-d gap so no run wraps past the scan origin.
    let mut run: Vec<NodeIndex> = Vec::new();
    for step in 1..=w {
        let i = (anchor + step) % w;
        run.push(occupied[i]);
        if gaps[i] != d {
            if run.len() >= 2 {
                blocks.push(DBlock { d, members: std::mem::take(&mut run) });
            } else {
                isolated.append(&mut run);
            }
        }
    }
    debug_assert!(run.is_empty());
    blocks.sort_by_key(|b| b.members[0]);
    isolated.sort_unstable();
    Ok(DBlockLayout { d, blocks, isolated })
}

/// Maximal runs of consecutive occupied nodes, ordered by first node.
pub fn node_blocks(config: &Configuration) -> Result<Vec<NodeBlock>, RingError> {
    let occupied = require_occupied(config)?;
    let n = config.n();
    if occupied.len() == n {
        return Ok(vec![NodeBlock { start: 0, size: n }]);
    }
    let mut out = Vec::new();
    for &node in &occupied {
        if config.is_occupied(config.ccw(node)) {
            continue;
        }
        let mut size = 1;
        while config.is_occupied((node + size) % n) {
            size += 1;
        }
        out.push(NodeBlock { start: node, size });
    }
    out.sort_by_key(|b| b.start);
    Ok(out)
}

/// Classifies the occupied/empty pattern; multiplicities are ignored.
pub fn classify_symmetry(config: &Configuration) -> SymmetryClass {
    let n = config.n();
    let occ = |i: usize| config.is_occupied(i % n);
    let periodic = (1..n)
        .filter(|r| n % r == 0)
        .any(|r| (0..n).all(|i| occ(i) == occ(i + r)));
    if periodic {
        return SymmetryClass::Periodic;
    }
    match (0..n).find(|&t| (0..n).all(|i| occ(i) == config.is_occupied(reflect_node(t, i, n)))) {
        Some(t) => SymmetryClass::Symmetric { reflection: t },
        None => SymmetryClass::Rigid,
    }
}

pub fn is_periodic(config: &Configuration) -> bool {
    classify_symmetry(config) == SymmetryClass::Periodic
}

/// Every robot on a single node.
pub fn is_gathered(config: &Configuration) -> bool {
    config.k() > 0 && config.occupied_count() == 1
}

/// The ring holds exactly one node block (a single 1.block, or one node).
pub fn is_single_node_block(config: &Configuration) -> bool {
    matches!(node_blocks(config), Ok(b) if b.len() == 1)
}

/// Checks the `(n, k)` constraints of the protocol: `k` odd, `2 < k < n − 3`.
pub fn check_instance_size(n: usize, k: usize) -> Result<(), RingError> {
    if k % 2 == 0 {
        return Err(RingError::InvalidConfiguration(format!("k = {k} must be odd")));
    }
    if !(k > 2 && k + 3 < n) {
        return Err(RingError::InvalidConfiguration(format!(
            "need 2 < k < n - 3, got n = {n}, k = {k}"
        )));
    }
    Ok(())
}

/// A legal starting point for the protocol: size constraints hold, no
/// tower, and the pattern is not periodic.
pub fn check_initial(config: &Configuration) -> Result<(), RingError> {
    check_instance_size(config.n(), config.k() as usize)?;
    if config.has_tower() {
        return Err(RingError::InvalidConfiguration("initial configuration has a tower".into()));
    }
    if is_periodic(config) {
        return Err(RingError::InvalidConfiguration("initial configuration is periodic".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, nodes: &[usize]) -> Configuration {
        Configuration::from_occupied(n, nodes).unwrap()
    }

    #[test]
    fn holes_examples() {
        let h = holes(&cfg(10, &[0, 1, 2, 5, 7])).unwrap();
        assert_eq!(
            h,
            vec![Hole { start: 3, size: 2 }, Hole { start: 6, size: 1 }, Hole { start: 8, size: 2 }]
        );
        assert!(holes(&cfg(5, &[0, 1, 2, 3, 4])).unwrap().is_empty());
        assert_eq!(holes(&cfg(10, &[0])).unwrap(), vec![Hole { start: 1, size: 9 }]);
        assert_eq!(holes(&cfg(10, &[])), Err(RingError::EmptyConfiguration));
    }

    #[test]
    fn inter_distance_examples() {
        assert_eq!(inter_distance(&cfg(10, &[0, 1, 2, 5, 7])), Ok(1));
        assert_eq!(inter_distance(&cfg(11, &[0, 2, 4, 6, 8])), Ok(2));
        assert_eq!(inter_distance(&cfg(6, &[0, 3])), Ok(3));
        assert_eq!(inter_distance(&cfg(6, &[2])), Err(RingError::Undefined));
        let tower = Configuration::from_placement(6, "2*3").unwrap();
        assert_eq!(inter_distance(&tower), Err(RingError::Undefined));
    }

    #[test]
    fn d_blocks_examples() {
        let l = d_blocks(&cfg(10, &[0, 1, 2, 5, 7])).unwrap();
        assert_eq!(l.d, 1);
        assert_eq!(l.blocks, vec![DBlock { d: 1, members: vec![0, 1, 2] }]);
        assert_eq!(l.isolated, vec![5, 7]);

        let l = d_blocks(&cfg(11, &[0, 2, 4, 6, 8])).unwrap();
        assert_eq!(l.d, 2);
        assert_eq!(l.blocks, vec![DBlock { d: 2, members: vec![0, 2, 4, 6, 8] }]);
        assert!(l.isolated.is_empty());

        let l = d_blocks(&cfg(16, &[0, 1, 2, 5, 6, 7, 10, 11, 12])).unwrap();
        let members: Vec<_> = l.blocks.iter().map(|b| b.members.clone()).collect();
        assert_eq!(members, vec![vec![0, 1, 2], vec![5, 6, 7], vec![10, 11, 12]]);
    }

    #[test]
    fn d_block_wrapping_origin_keeps_clockwise_order() {
        let l = d_blocks(&cfg(12, &[10, 11, 0, 5])).unwrap();
        assert_eq!(l.blocks, vec![DBlock { d: 1, members: vec![10, 11, 0] }]);
        assert_eq!(l.isolated, vec![5]);
    }

    #[test]
    fn node_blocks_examples() {
        let sizes = |n, nodes: &[usize]| -> Vec<usize> {
            node_blocks(&cfg(n, nodes)).unwrap().iter().map(|b| b.size).collect()
        };
        assert_eq!(sizes(10, &[0, 2, 4]), vec![1, 1, 1]);
        assert_eq!(sizes(10, &[0, 1, 2, 3, 4]), vec![5]);
        assert_eq!(
            node_blocks(&cfg(12, &[0, 2, 3, 4, 5, 7, 8])).unwrap(),
            vec![
                NodeBlock { start: 0, size: 1 },
                NodeBlock { start: 2, size: 4 },
                NodeBlock { start: 7, size: 2 }
            ]
        );
        assert_eq!(node_blocks(&cfg(8, &[7, 0, 1])).unwrap(), vec![NodeBlock { start: 7, size: 3 }]);
    }

    #[test]
    fn symmetry_examples() {
        assert_eq!(classify_symmetry(&cfg(10, &[0, 2, 4, 6, 8])), SymmetryClass::Periodic);
        assert_eq!(
            classify_symmetry(&cfg(10, &[0, 1, 2, 5, 7])),
            SymmetryClass::Symmetric { reflection: 2 }
        );
        assert_eq!(classify_symmetry(&cfg(8, &[0, 1, 3])), SymmetryClass::Rigid);
    }

    #[test]
    fn gathered_examples() {
        assert!(is_gathered(&Configuration::from_placement(10, "4*5").unwrap()));
        assert!(!is_gathered(&Configuration::from_placement(10, "0*4,1").unwrap()));
        assert!(!is_gathered(&cfg(10, &[0, 1, 2, 5, 7])));
    }

    #[test]
    fn text_form_round_trips() {
        let c = Configuration::from_placement(6, "0*2,3").unwrap();
        let text = c.to_string();
        assert_eq!(text, "n=6;occ=2,0,0,1,0,0");
        assert_eq!(text.parse::<Configuration>().unwrap(), c);
        assert!("n=3;occ=1,0".parse::<Configuration>().is_err());
        assert!("occ=1,0,0".parse::<Configuration>().is_err());
    }

    #[test]
    fn instance_constraints() {
        assert!(check_instance_size(8, 3).is_ok());
        assert!(check_instance_size(7, 3).is_ok());
        assert!(check_instance_size(6, 3).is_err());
        assert!(check_instance_size(12, 4).is_err());
        assert!(check_initial(&cfg(10, &[0, 2, 4, 6, 8])).is_err());
        assert!(check_initial(&Configuration::from_placement(10, "0*2,1,5").unwrap()).is_err());
    }
}
