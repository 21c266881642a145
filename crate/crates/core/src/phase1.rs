//! First phase: from any tower-free, non-periodic configuration, build a
//! single 1.block without ever creating a tower.
//!
//! Robots join the biggest d.block until one d.block holds everyone; the two
//! robots closest to the axis robot then step toward it, which lowers the
//! inter-distance by one, and the process repeats until `d = 1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::RingError;
use crate::observation::{direction_sequences, view_at};
use crate::ring::{d_blocks, Configuration, DBlockLayout, NodeIndex};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Phase1Class {
    /// One d.block with `d > 1` holds every robot.
    Type1,
    /// No isolated robot and every d.block has the same size.
    Type2,
    /// Some isolated robot is adjacent to a biggest d.block.
    Type3a,
    /// Every other case.
    Type3b,
}

impl fmt::Display for Phase1Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase1Class::Type1 => "Type1",
            Phase1Class::Type2 => "Type2",
            Phase1Class::Type3a => "Type3a",
            Phase1Class::Type3b => "Type3b",
        })
    }
}

/// Where a robot decided to go. Both variants name nodes adjacent to the
/// robot.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Target {
    Node(NodeIndex),
    /// The robot's view is symmetric, so it cannot tell its two sides apart;
    /// the scheduler picks one of the two neighbors (stored in increasing
    /// order).
    SchedulerChoice(NodeIndex, NodeIndex),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct MoveIntent {
    pub robot: NodeIndex,
    pub target: Target,
}

impl Target {
    pub fn choice(a: NodeIndex, b: NodeIndex) -> Target {
        Target::SchedulerChoice(a.min(b), a.max(b))
    }

    /// Applies a node map (rotation or reflection) to the target.
    pub fn map(self, f: impl Fn(NodeIndex) -> NodeIndex) -> Target {
        match self {
            Target::Node(v) => Target::Node(f(v)),
            Target::SchedulerChoice(a, b) => Target::choice(f(a), f(b)),
        }
    }

    pub fn admits(&self, node: NodeIndex) -> bool {
        match *self {
            Target::Node(v) => v == node,
            Target::SchedulerChoice(a, b) => a == node || b == node,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Dir {
    Cw,
    Ccw,
}

impl Dir {
    fn step(self, config: &Configuration, node: NodeIndex) -> NodeIndex {
        match self {
            Dir::Cw => config.cw(node),
            Dir::Ccw => config.ccw(node),
        }
    }
}

/// The occupied neighbor of `node` in direction `dir` and the gap to it.
fn neighbor(config: &Configuration, node: NodeIndex, dir: Dir) -> (NodeIndex, usize) {
    let next = match dir {
        Dir::Cw => config.next_occupied_cw(node),
        Dir::Ccw => config.next_occupied_ccw(node),
    }
    .expect("node is occupied");
    let gap = match dir {
        Dir::Cw => config.cw_distance(node, next),
        Dir::Ccw => config.cw_distance(next, node),
    };
    (next, if gap == 0 { config.n() } else { gap })
}

struct Analysis<'a> {
    config: &'a Configuration,
    layout: DBlockLayout,
    block_of: Vec<Option<usize>>,
    biggest: usize,
}

impl<'a> Analysis<'a> {
    fn new(config: &'a Configuration) -> Result<Self, RingError> {
        if config.has_tower() {
            return Err(RingError::Phase1Precondition(format!("tower present in {config}")));
        }
        if config.occupied_count() < 3 {
            return Err(RingError::Phase1Precondition(format!(
                "fewer than three robots in {config}"
            )));
        }
        let layout = d_blocks(config)?;
        let mut block_of = vec![None; config.n()];
        for (b, block) in layout.blocks.iter().enumerate() {
            for &m in &block.members {
                block_of[m] = Some(b);
            }
        }
        let biggest = layout.blocks.iter().map(|b| b.size()).max().unwrap_or(0);
        Ok(Self { config, layout, block_of, biggest })
    }

    fn in_biggest(&self, node: NodeIndex) -> bool {
        self.block_of[node].is_some_and(|b| self.layout.blocks[b].size() == self.biggest)
    }

    fn is_isolated(&self, node: NodeIndex) -> bool {
        self.block_of[node].is_none()
    }

    /// Sides of `node` whose occupied neighbor (across one hole) lies in a
    /// biggest d.block, with the gap to that neighbor.
    fn biggest_sides(&self, node: NodeIndex) -> Vec<(Dir, usize)> {
        [Dir::Cw, Dir::Ccw]
            .into_iter()
            .filter_map(|dir| {
                let (nb, gap) = neighbor(self.config, node, dir);
                (gap > self.layout.d && self.in_biggest(nb)).then_some((dir, gap))
            })
            .collect()
    }

    fn classify(&self) -> Phase1Class {
        let blocks = &self.layout.blocks;
        let isolated = &self.layout.isolated;
        if self.layout.d > 1 && blocks.len() == 1 && isolated.is_empty() {
            return Phase1Class::Type1;
        }
        if isolated.is_empty() && blocks.iter().all(|b| b.size() == self.biggest) {
            return Phase1Class::Type2;
        }
        if isolated.iter().any(|&r| !self.biggest_sides(r).is_empty()) {
            Phase1Class::Type3a
        } else {
            Phase1Class::Type3b
        }
    }

    fn type1_moves(&self) -> Result<Vec<MoveIntent>, RingError> {
        let members = &self.layout.blocks[0].members;
        if members.len() % 2 == 0 || members.len() < 3 {
            return Err(RingError::ProtocolStuck(format!(
                "single d.block of even size has no axis robot in {}",
                self.config
            )));
        }
        let c = members.len() / 2;
        // Members run clockwise, so the left mate steps clockwise toward the
        // axis robot and the right mate counter-clockwise.
        Ok(vec![
            MoveIntent { robot: members[c - 1], target: Target::Node(self.config.cw(members[c - 1])) },
            MoveIntent {
                robot: members[c + 1],
                target: Target::Node(self.config.ccw(members[c + 1])),
            },
        ])
    }

    fn type2_moves(&self) -> Result<Vec<MoveIntent>, RingError> {
        let d = self.layout.d;
        // Border robots and the direction of their separating hole.
        let mut candidates: Vec<(NodeIndex, Dir, Vec<usize>)> = Vec::new();
        for block in &self.layout.blocks {
            for &m in &block.members {
                for dir in [Dir::Cw, Dir::Ccw] {
                    if neighbor(self.config, m, dir).1 > d {
                        candidates.push((m, dir, view_at(self.config, m)?.sequence));
                    }
                }
            }
        }
        candidates.sort_by(|a, b| b.2.cmp(&a.2));
        let mut rank_start = 0;
        while rank_start < candidates.len() {
            let view = &candidates[rank_start].2;
            let rank_end = candidates[rank_start..]
                .iter()
                .position(|c| &c.2 != view)
                .map_or(candidates.len(), |p| rank_start + p);
            let rank = &candidates[rank_start..rank_end];
            if !self.face_to_face(rank) {
                let mut moves: Vec<MoveIntent> = rank
                    .iter()
                    .map(|&(r, dir, _)| MoveIntent {
                        robot: r,
                        target: Target::Node(dir.step(self.config, r)),
                    })
                    .collect();
                moves.sort_by_key(|m| m.robot);
                return Ok(moves);
            }
            rank_start = rank_end;
        }
        Err(RingError::ProtocolStuck(format!(
            "every type-2 view rank withdraws face-to-face in {}",
            self.config
        )))
    }

    /// Two candidates of the rank would step toward each other into the
    /// same hole.
    fn face_to_face(&self, rank: &[(NodeIndex, Dir, Vec<usize>)]) -> bool {
        rank.iter().any(|&(a, dir_a, _)| {
            dir_a == Dir::Cw
                && rank.iter().any(|&(b, dir_b, _)| {
                    dir_b == Dir::Ccw && b != a && neighbor(self.config, a, Dir::Cw).0 == b
                })
        })
    }

    fn type3a_moves(&self) -> Result<Vec<MoveIntent>, RingError> {
        let eligible: Vec<(NodeIndex, Vec<(Dir, usize)>)> = self
            .layout
            .isolated
            .iter()
            .map(|&r| (r, self.biggest_sides(r)))
            .filter(|(_, sides)| !sides.is_empty())
            .collect();
        let nearest = |sides: &[(Dir, usize)]| sides.iter().map(|s| s.1).min().expect("non-empty");
        let closest = eligible.iter().map(|(_, s)| nearest(s)).min().expect("type 3a");
        let eligible: Vec<_> = eligible.into_iter().filter(|(_, s)| nearest(s) == closest).collect();
        self.max_view_movers(&eligible)
    }

    fn type3b_moves(&self) -> Result<Vec<MoveIntent>, RingError> {
        let eligible: Vec<(NodeIndex, Vec<(Dir, usize)>)> = self
            .config
            .occupied_nodes()
            .into_iter()
            .filter(|&r| !self.in_biggest(r) && !self.is_isolated(r))
            .map(|r| (r, self.biggest_sides(r)))
            .filter(|(_, sides)| !sides.is_empty())
            .collect();
        if eligible.is_empty() {
            return Err(RingError::ProtocolStuck(format!(
                "no robot borders a biggest d.block in {}",
                self.config
            )));
        }
        self.max_view_movers(&eligible)
    }

    /// Keeps the eligible robots with the maximum view and points each one
    /// at its nearest neighboring biggest d.block.
    fn max_view_movers(
        &self,
        eligible: &[(NodeIndex, Vec<(Dir, usize)>)],
    ) -> Result<Vec<MoveIntent>, RingError> {
        let views = eligible
            .iter()
            .map(|(r, _)| view_at(self.config, *r))
            .collect::<Result<Vec<_>, _>>()?;
        let best = views.iter().map(|v| &v.sequence).max().expect("non-empty");
        let mut moves = Vec::new();
        for ((r, sides), view) in eligible.iter().zip(&views) {
            if &view.sequence != best {
                continue;
            }
            moves.push(MoveIntent { robot: *r, target: self.toward_nearest(*r, sides, view.symmetric)? });
        }
        moves.sort_by_key(|m| m.robot);
        Ok(moves)
    }

    fn toward_nearest(
        &self,
        robot: NodeIndex,
        sides: &[(Dir, usize)],
        symmetric_view: bool,
    ) -> Result<Target, RingError> {
        let nearest = sides.iter().map(|s| s.1).min().expect("non-empty");
        let dirs: Vec<Dir> = sides.iter().filter(|s| s.1 == nearest).map(|s| s.0).collect();
        let dir = match dirs.as_slice() {
            [only] => *only,
            _ if symmetric_view => {
                return Ok(Target::choice(self.config.cw(robot), self.config.ccw(robot)));
            }
            _ => {
                let (cw, ccw) = direction_sequences(self.config, robot)?;
                if cw > ccw {
                    Dir::Cw
                } else {
                    Dir::Ccw
                }
            }
        };
        Ok(Target::Node(dir.step(self.config, robot)))
    }
}

/// Classifies a tower-free configuration outside the special phase-2 set.
pub fn classify_phase1(config: &Configuration) -> Result<Phase1Class, RingError> {
    Ok(Analysis::new(config)?.classify())
}

/// The permitted first-phase moves, ordered by robot node. The set is never
/// empty; an empty result is reported as [`RingError::ProtocolStuck`].
pub fn phase1_moves(config: &Configuration) -> Result<Vec<MoveIntent>, RingError> {
    let analysis = Analysis::new(config)?;
    let moves = match analysis.classify() {
        Phase1Class::Type1 => analysis.type1_moves()?,
        Phase1Class::Type2 => analysis.type2_moves()?,
        Phase1Class::Type3a => analysis.type3a_moves()?,
        Phase1Class::Type3b => analysis.type3b_moves()?,
    };
    if moves.is_empty() {
        return Err(RingError::ProtocolStuck(format!("no first-phase mover in {config}")));
    }
    Ok(moves)
}
