//! What a single robot perceives: the direction-maximal sequence of segment
//! distances around the ring, plus whether its own node hosts a tower.

use std::cmp::Ordering;

use crate::error::RingError;
use crate::ring::{Configuration, NodeIndex};

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct View {
    /// Segment distances starting at the robot, read in whichever direction
    /// gives the lexicographically larger sequence.
    pub sequence: Vec<usize>,
    /// Local weak multiplicity: the robot's own node hosts at least two robots.
    pub multiplicity: bool,
    /// Both reading directions give the same sequence.
    pub symmetric: bool,
}

/// Segment distances read clockwise and counter-clockwise from `node`.
pub fn direction_sequences(
    config: &Configuration,
    node: NodeIndex,
) -> Result<(Vec<usize>, Vec<usize>), RingError> {
    if node >= config.n() {
        return Err(RingError::NodeOutOfRange { node, n: config.n() });
    }
    if !config.is_occupied(node) {
        return Err(RingError::NoRobot(node));
    }
    let mut cw = Vec::new();
    let mut at = node;
    loop {
        let next = config.next_occupied_cw(at).expect("node itself is occupied");
        let d = config.cw_distance(at, next);
        cw.push(if d == 0 { config.n() } else { d });
        at = next;
        if at == node {
            break;
        }
    }
    let ccw = cw.iter().rev().copied().collect();
    Ok((cw, ccw))
}

pub fn view_at(config: &Configuration, node: NodeIndex) -> Result<View, RingError> {
    let (cw, ccw) = direction_sequences(config, node)?;
    let symmetric = cw == ccw;
    let sequence = if cw >= ccw { cw } else { ccw };
    Ok(View { sequence, multiplicity: config.is_tower(node), symmetric })
}

/// Lexicographic order on the stored sequences. The multiplicity bit is
/// not consulted.
pub fn compare_views(a: &View, b: &View) -> Result<Ordering, RingError> {
    if a.sequence.len() != b.sequence.len() {
        return Err(RingError::Incomparable(a.sequence.len(), b.sequence.len()));
    }
    Ok(a.sequence.cmp(&b.sequence))
}

/// The candidates holding the maximal view, in increasing node order.
pub fn max_view_nodes(
    config: &Configuration,
    candidates: &[NodeIndex],
) -> Result<Vec<NodeIndex>, RingError> {
    if candidates.is_empty() {
        return Err(RingError::EmptyCandidates);
    }
    let views = candidates
        .iter()
        .map(|&c| view_at(config, c).map(|v| (c, v)))
        .collect::<Result<Vec<_>, _>>()?;
    let best = views.iter().map(|(_, v)| &v.sequence).max().expect("non-empty").clone();
    let mut out: Vec<NodeIndex> =
        views.into_iter().filter(|(_, v)| v.sequence == best).map(|(c, _)| c).collect();
    out.sort_unstable();
    out.dedup();
    Ok(out)
}
