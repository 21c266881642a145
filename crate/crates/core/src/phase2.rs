//! Second phase: recognize the special configuration set from the
//! occupied/empty pattern and collapse it onto the tower-construction node.
//!
//! Five classes make up the set: single block (`SB`), block leader (`BL`),
//! semi-single block (`SSB`), semi-twin (`ST`) and semi-block leader
//! (`SBL`). Each designates at most one node, `v_t`, that may host a tower.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::RingError;
use crate::phase1::{MoveIntent, Target};
use crate::ring::{holes, node_blocks, Configuration, Hole, NodeBlock, NodeIndex};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum CspVariant {
    SingleBlock { b: usize },
    BlockLeader { b0: usize, b1: usize },
    SemiSingleBlock { b: usize },
    SemiTwin { b: usize },
    SemiBlockLeader { b0: usize, b1: usize },
}

/// Blocks playing the roles `B0`, `B1`, `B2` of the recognized class.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default, Serialize, Deserialize)]
pub struct Roles {
    pub b0: Option<NodeBlock>,
    pub b1: Option<NodeBlock>,
    pub b2: Option<NodeBlock>,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct CspClass {
    pub variant: CspVariant,
    pub roles: Roles,
    /// Tower-construction node. Undefined only for a single block of size 2,
    /// where robots find the tower through local multiplicity instead.
    pub tower_node: Option<NodeIndex>,
}

impl fmt::Display for CspVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            CspVariant::SingleBlock { b } => write!(f, "SB({b})"),
            CspVariant::BlockLeader { b0, b1 } => write!(f, "BL({b0},{b1})"),
            CspVariant::SemiSingleBlock { b } => write!(f, "SSB({b})"),
            CspVariant::SemiTwin { b } => write!(f, "ST({b})"),
            CspVariant::SemiBlockLeader { b0, b1 } => write!(f, "SBL({b0},{b1})"),
        }
    }
}

impl fmt::Display for CspClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.variant.fmt(f)
    }
}

/// The hole directly clockwise of `block`.
fn hole_after(holes: &[Hole], block: &NodeBlock, n: usize) -> Hole {
    let start = (block.end(n) + 1) % n;
    *holes.iter().find(|h| h.start == start).expect("every block is followed by a hole")
}

/// The hole directly counter-clockwise of `block`.
fn hole_before(holes: &[Hole], block: &NodeBlock, n: usize) -> Hole {
    *holes
        .iter()
        .find(|h| (h.start + h.size) % n == block.start)
        .expect("every block is preceded by a hole")
}

/// Recognizes the special phase-2 class from the occupied/empty pattern.
/// Tower positions are not consulted.
pub fn classify_csp(config: &Configuration) -> Option<CspClass> {
    let n = config.n();
    let blocks = node_blocks(config).ok()?;
    let holes = holes(config).ok()?;
    if holes.is_empty() {
        return None;
    }
    let mut found: Vec<CspClass> = Vec::new();
    match blocks.as_slice() {
        [b0] => {
            if b0.size % 2 == 1 || b0.size == 2 {
                let tower_node = (b0.size % 2 == 1).then(|| b0.node(b0.size / 2, n));
                found.push(CspClass {
                    variant: CspVariant::SingleBlock { b: b0.size },
                    roles: Roles { b0: Some(*b0), ..Roles::default() },
                    tower_node,
                });
            }
        }
        [x, y] => {
            for (b1, b2) in [(x, y), (y, x)] {
                // The shared size-1 hole, on either side of B1.
                for b2_is_cw_of_b1 in [true, false] {
                    let shared = if b2_is_cw_of_b1 {
                        hole_after(&holes, b1, n)
                    } else {
                        hole_before(&holes, b1, n)
                    };
                    if shared.size != 1 {
                        continue;
                    }
                    let roles = Roles { b0: None, b1: Some(*b1), b2: Some(*b2) };
                    // B1 node at 1-based position `i` counted from the shared hole.
                    let b1_from_hole = |i: usize| {
                        if b2_is_cw_of_b1 {
                            b1.node(b1.size - i, n)
                        } else {
                            b1.node(i - 1, n)
                        }
                    };
                    if b2.size == 1 && b1.size % 2 == 0 {
                        found.push(CspClass {
                            variant: CspVariant::SemiSingleBlock { b: b1.size },
                            roles,
                            tower_node: Some(b1_from_hole(b1.size / 2)),
                        });
                    }
                    if b2.size == b1.size + 2 {
                        let border = if b2_is_cw_of_b1 { b2.start } else { b2.end(n) };
                        found.push(CspClass {
                            variant: CspVariant::SemiTwin { b: b1.size },
                            roles,
                            tower_node: Some(border),
                        });
                    }
                }
            }
        }
        [_, _, _] => {
            for i in 0..3 {
                let b0 = &blocks[i];
                if hole_after(&holes, b0, n).size != 1 || hole_before(&holes, b0, n).size != 1 {
                    continue;
                }
                let cw_nb = &blocks[(i + 1) % 3];
                let ccw_nb = &blocks[(i + 2) % 3];
                for (b1, b2, b2_is_cw) in [(ccw_nb, cw_nb, true), (cw_nb, ccw_nb, false)] {
                    let roles = Roles { b0: Some(*b0), b1: Some(*b1), b2: Some(*b2) };
                    if b0.size % 2 == 1 && b1.size == b2.size {
                        found.push(CspClass {
                            variant: CspVariant::BlockLeader { b0: b0.size, b1: b1.size },
                            roles,
                            tower_node: Some(b0.node(b0.size / 2, n)),
                        });
                    }
                    if b0.size % 2 == 0 && b2.size == b1.size + 1 {
                        let half = b0.size / 2;
                        let v_t = if b2_is_cw { b0.node(b0.size - half, n) } else { b0.node(half - 1, n) };
                        found.push(CspClass {
                            variant: CspVariant::SemiBlockLeader { b0: b0.size, b1: b1.size },
                            roles,
                            tower_node: Some(v_t),
                        });
                    }
                }
            }
        }
        _ => {}
    }
    let first = *found.first()?;
    // Alternative role assignments must agree on the class and on v_t.
    found
        .iter()
        .all(|c| c.variant == first.variant && c.tower_node == first.tower_node)
        .then_some(first)
}

/// Unit step from `from` into its neighbor `toward`-side node.
fn step_toward(config: &Configuration, from: NodeIndex, cw: bool) -> MoveIntent {
    let to = if cw { config.cw(from) } else { config.ccw(from) };
    MoveIntent { robot: from, target: Target::Node(to) }
}

/// The border of `mover` facing `anchor` across the size-1 hole between them,
/// stepping into that hole.
fn join_across_hole(config: &Configuration, mover: &NodeBlock, anchor: &NodeBlock) -> MoveIntent {
    let n = config.n();
    if (mover.end(n) + 2) % n == anchor.start {
        step_toward(config, mover.end(n), true)
    } else {
        debug_assert_eq!((anchor.end(n) + 2) % n, mover.start);
        step_toward(config, mover.start, false)
    }
}

/// The second-phase moves for a configuration of class `cls`, ordered by
/// robot node. The ground-truth counts supply the local multiplicity bit
/// used by the size-2 single block.
pub fn phase2_moves(config: &Configuration, cls: &CspClass) -> Result<Vec<MoveIntent>, RingError> {
    if classify_csp(config).as_ref() != Some(cls) {
        return Err(RingError::StaleClassification(format!("{cls} does not describe {config}")));
    }
    let n = config.n();
    let mut moves = match cls.variant {
        CspVariant::SingleBlock { b: 1 } => Vec::new(),
        CspVariant::SingleBlock { b: 2 } => {
            let block = cls.roles.b0.expect("single block has B0");
            let (a, b) = (block.start, block.end(n));
            [(a, b), (b, a)]
                .into_iter()
                .filter(|&(from, _)| !config.is_tower(from))
                .map(|(from, to)| MoveIntent { robot: from, target: Target::Node(to) })
                .collect()
        }
        CspVariant::SingleBlock { .. } => {
            let v_t = cls.tower_node.expect("odd single block has a center");
            vec![step_toward(config, config.ccw(v_t), true), step_toward(config, config.cw(v_t), false)]
        }
        CspVariant::BlockLeader { .. } => {
            let b0 = cls.roles.b0.expect("B0");
            vec![
                join_across_hole(config, &cls.roles.b1.expect("B1"), &b0),
                join_across_hole(config, &cls.roles.b2.expect("B2"), &b0),
            ]
        }
        CspVariant::SemiSingleBlock { .. } => {
            vec![join_across_hole(config, &cls.roles.b2.expect("B2"), &cls.roles.b1.expect("B1"))]
        }
        CspVariant::SemiTwin { .. } => {
            let v_t = cls.tower_node.expect("semi-twin has v_t");
            let b2 = cls.roles.b2.expect("B2");
            // v_t is a border of B2; its inner neighbor steps onto it.
            if b2.start == v_t {
                vec![step_toward(config, config.cw(v_t), false)]
            } else {
                vec![step_toward(config, config.ccw(v_t), true)]
            }
        }
        CspVariant::SemiBlockLeader { .. } => {
            vec![join_across_hole(config, &cls.roles.b2.expect("B2"), &cls.roles.b0.expect("B0"))]
        }
    };
    moves.sort_by_key(|m| m.robot);
    Ok(moves)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, nodes: &[usize]) -> Configuration {
        Configuration::from_occupied(n, nodes).unwrap()
    }

    fn mv(robot: usize, to: usize) -> MoveIntent {
        MoveIntent { robot, target: Target::Node(to) }
    }

    fn apply_all(config: &Configuration, moves: &[MoveIntent]) -> Configuration {
        moves.iter().fold(config.clone(), |acc, m| match m.target {
            Target::Node(t) => acc.with_move(m.robot, t),
            Target::SchedulerChoice(..) => unreachable!(),
        })
    }

    #[test]
    fn classify_examples() {
        let sb = classify_csp(&cfg(10, &[0, 1, 2, 3, 4])).unwrap();
        assert_eq!(sb.variant, CspVariant::SingleBlock { b: 5 });
        assert_eq!(sb.tower_node, Some(2));

        let st = classify_csp(&cfg(10, &[0, 2, 3, 4])).unwrap();
        assert_eq!(st.variant, CspVariant::SemiTwin { b: 1 });
        assert_eq!(st.roles.b1, Some(NodeBlock { start: 0, size: 1 }));
        assert_eq!(st.roles.b2, Some(NodeBlock { start: 2, size: 3 }));
        assert_eq!(st.tower_node, Some(2));

        let sbl = classify_csp(&cfg(12, &[0, 2, 3, 4, 5, 7, 8])).unwrap();
        assert_eq!(sbl.variant, CspVariant::SemiBlockLeader { b0: 4, b1: 1 });
        assert_eq!(sbl.roles.b0, Some(NodeBlock { start: 2, size: 4 }));
        assert_eq!(sbl.roles.b1, Some(NodeBlock { start: 0, size: 1 }));
        assert_eq!(sbl.roles.b2, Some(NodeBlock { start: 7, size: 2 }));
        assert_eq!(sbl.tower_node, Some(4));

        assert_eq!(classify_csp(&cfg(10, &[0, 1, 2, 5, 7])), None);
    }

    #[test]
    fn classify_ignores_towers() {
        let c = Configuration::from_placement(10, "0,2*3,3,4").unwrap();
        assert_eq!(classify_csp(&c), classify_csp(&c.pattern()));
    }

    #[test]
    fn semi_single_block_tower_node() {
        // B1 = {0,1,2,3}, B2 = {5}: second node of B1 counted from the hole is 2.
        let ssb = classify_csp(&cfg(11, &[0, 1, 2, 3, 5])).unwrap();
        assert_eq!(ssb.variant, CspVariant::SemiSingleBlock { b: 4 });
        assert_eq!(ssb.tower_node, Some(2));
        let next = apply_all(&cfg(11, &[0, 1, 2, 3, 5]), &phase2_moves(&cfg(11, &[0, 1, 2, 3, 5]), &ssb).unwrap());
        let sb = classify_csp(&next).unwrap();
        assert_eq!(sb.variant, CspVariant::SingleBlock { b: 5 });
        assert_eq!(sb.tower_node, Some(2));
    }

    #[test]
    fn block_leader_and_even_single_block() {
        let bl = classify_csp(&cfg(10, &[0, 2, 4])).unwrap();
        assert_eq!(bl.variant, CspVariant::BlockLeader { b0: 1, b1: 1 });
        assert_eq!(bl.tower_node, Some(2));
        assert_eq!(classify_csp(&cfg(10, &[0, 1, 2, 3])), None);
        let two = classify_csp(&cfg(10, &[0, 1])).unwrap();
        assert_eq!(two.variant, CspVariant::SingleBlock { b: 2 });
        assert_eq!(two.tower_node, None);
    }

    #[test]
    fn moves_examples() {
        let c = cfg(10, &[0, 1, 2, 3, 4]);
        let cls = classify_csp(&c).unwrap();
        assert_eq!(phase2_moves(&c, &cls).unwrap(), vec![mv(1, 2), mv(3, 2)]);

        let c = Configuration::from_placement(10, "0,2*2,3,4").unwrap();
        let cls = classify_csp(&c).unwrap();
        let moves = phase2_moves(&c, &cls).unwrap();
        assert_eq!(moves, vec![mv(3, 2)]);
        let next = classify_csp(&apply_all(&c, &moves)).unwrap();
        assert_eq!(next.variant, CspVariant::BlockLeader { b0: 1, b1: 1 });

        let c = Configuration::from_placement(10, "0,2*3,4").unwrap();
        let cls = classify_csp(&c).unwrap();
        let moves = phase2_moves(&c, &cls).unwrap();
        assert_eq!(moves, vec![mv(0, 1), mv(4, 3)]);
        let next = classify_csp(&apply_all(&c, &moves)).unwrap();
        assert_eq!(next.variant, CspVariant::SingleBlock { b: 3 });

        let c = Configuration::from_placement(10, "0*2,1").unwrap();
        let cls = classify_csp(&c).unwrap();
        assert_eq!(phase2_moves(&c, &cls).unwrap(), vec![mv(1, 0)]);

        let c = Configuration::from_placement(10, "4*5").unwrap();
        let cls = classify_csp(&c).unwrap();
        assert_eq!(cls.variant, CspVariant::SingleBlock { b: 1 });
        assert!(phase2_moves(&c, &cls).unwrap().is_empty());
    }

    #[test]
    fn semi_block_leader_joins_b0() {
        let c = cfg(12, &[0, 2, 3, 4, 5, 7, 8]);
        let cls = classify_csp(&c).unwrap();
        let moves = phase2_moves(&c, &cls).unwrap();
        assert_eq!(moves, vec![mv(7, 6)]);
        let next = classify_csp(&apply_all(&c, &moves)).unwrap();
        assert_eq!(next.variant, CspVariant::BlockLeader { b0: 5, b1: 1 });
        assert_eq!(next.tower_node, Some(4));
    }

    #[test]
    fn stale_classification_is_rejected() {
        let c = cfg(10, &[0, 1, 2, 3, 4]);
        let cls = classify_csp(&cfg(10, &[0, 2, 4])).unwrap();
        assert!(matches!(phase2_moves(&c, &cls), Err(RingError::StaleClassification(_))));
    }
}
