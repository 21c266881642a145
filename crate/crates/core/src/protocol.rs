//! The combined protocol a robot runs on every snapshot: second-phase rules
//! inside the special set, first-phase rules everywhere else.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::RingError;
use crate::phase1::{classify_phase1, phase1_moves, MoveIntent, Phase1Class, Target};
use crate::phase2::{classify_csp, phase2_moves, CspClass, CspVariant};
use crate::ring::{Configuration, NodeIndex};

/// A robot's compute-phase output.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Decision {
    Stay,
    Move(Target),
}

/// Which rule set governs a pattern.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum PhaseLabel {
    One(Phase1Class),
    Two(CspClass),
    /// First-phase rules apply but cannot produce a decision (the pattern
    /// breaks one of their preconditions).
    Stuck,
}

impl PhaseLabel {
    pub fn phase(&self) -> u8 {
        match self {
            PhaseLabel::Two(_) => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseLabel::One(c) => c.fmt(f),
            PhaseLabel::Two(c) => c.fmt(f),
            PhaseLabel::Stuck => f.write_str("stuck"),
        }
    }
}

/// Everything robots conclude from one occupied/empty pattern. A plan is a
/// pure function of the pattern, so it can be shared by every robot that
/// snapshots the same pattern.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Plan {
    pub label: PhaseLabel,
    /// Movers for robots that are alone on their node.
    pub moves: Vec<MoveIntent>,
    pub error: Option<RingError>,
}

/// Raised when a robot finds itself in a situation the protocol never
/// allows: a tower under its feet outside the special set, or first-phase
/// rules that cannot be evaluated.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ProtocolViolation {
    pub node: NodeIndex,
    pub reason: String,
}

impl Plan {
    /// Builds the plan for the occupied/empty pattern of `config`.
    pub fn for_pattern(config: &Configuration) -> Plan {
        let pattern = config.pattern();
        if let Some(cls) = classify_csp(&pattern) {
            let moves = match cls.variant {
                // Both nodes are candidates; the local bit filters at decision time.
                CspVariant::SingleBlock { b: 2 } => {
                    let block = cls.roles.b0.expect("single block has B0");
                    let (a, b) = (block.start, block.end(pattern.n()));
                    vec![
                        MoveIntent { robot: a, target: Target::Node(b) },
                        MoveIntent { robot: b, target: Target::Node(a) },
                    ]
                }
                _ => phase2_moves(&pattern, &cls).expect("fresh classification"),
            };
            return Plan { label: PhaseLabel::Two(cls), moves, error: None };
        }
        match classify_phase1(&pattern).and_then(|c| phase1_moves(&pattern).map(|m| (c, m))) {
            Ok((class, moves)) => Plan { label: PhaseLabel::One(class), moves, error: None },
            Err(e) => Plan { label: PhaseLabel::Stuck, moves: Vec::new(), error: Some(e) },
        }
    }

    /// Decision of a robot on `node` given its local multiplicity bit.
    pub fn decision_for(&self, node: NodeIndex, local_multiplicity: bool) -> Result<Decision, ProtocolViolation> {
        match &self.label {
            PhaseLabel::Two(cls) => {
                if local_multiplicity && matches!(cls.variant, CspVariant::SingleBlock { b: 2 }) {
                    return Ok(Decision::Stay);
                }
            }
            PhaseLabel::One(_) if local_multiplicity => {
                return Err(ProtocolViolation {
                    node,
                    reason: "tower outside the special configuration set".into(),
                });
            }
            PhaseLabel::One(_) => {}
            PhaseLabel::Stuck => {
                return Err(ProtocolViolation {
                    node,
                    reason: self.error.as_ref().map_or_else(|| "stuck".into(), ToString::to_string),
                });
            }
        }
        Ok(self
            .moves
            .iter()
            .find(|m| m.robot == node)
            .map_or(Decision::Stay, |m| Decision::Move(m.target)))
    }
}

/// Compute phase of one robot: only the occupied/empty pattern of `config`
/// and the robot's own multiplicity bit are consulted.
pub fn decide(
    config: &Configuration,
    robot_node: NodeIndex,
    local_multiplicity: bool,
) -> Result<Decision, ProtocolViolation> {
    if robot_node >= config.n() || !config.is_occupied(robot_node) {
        return Err(ProtocolViolation { node: robot_node, reason: RingError::NoRobot(robot_node).to_string() });
    }
    Plan::for_pattern(config).decision_for(robot_node, local_multiplicity)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, nodes: &[usize]) -> Configuration {
        Configuration::from_occupied(n, nodes).unwrap()
    }

    #[test]
    fn decide_examples() {
        assert_eq!(decide(&cfg(10, &[0, 1, 2, 3, 4]), 1, false), Ok(Decision::Move(Target::Node(2))));
        assert_eq!(decide(&cfg(10, &[0, 1, 2, 5, 7]), 0, false), Ok(Decision::Stay));
        let gathered = Configuration::from_placement(10, "6*5").unwrap();
        assert_eq!(decide(&gathered, 6, true), Ok(Decision::Stay));
    }

    #[test]
    fn size_two_block_uses_local_multiplicity() {
        let c = Configuration::from_placement(10, "3*2,4").unwrap();
        assert_eq!(decide(&c, 3, true), Ok(Decision::Stay));
        assert_eq!(decide(&c, 4, false), Ok(Decision::Move(Target::Node(3))));
    }

    #[test]
    fn tower_outside_special_set_is_flagged() {
        let c = Configuration::from_placement(10, "0*2,1,2,5,7").unwrap();
        assert!(decide(&c, 0, true).is_err());
        // A robot alone elsewhere cannot see the tower and decides normally.
        assert_eq!(decide(&c, 5, false), Ok(Decision::Move(Target::Node(4))));
    }

    #[test]
    fn labels() {
        assert_eq!(Plan::for_pattern(&cfg(10, &[0, 1, 2, 5, 7])).label.to_string(), "Type3a");
        assert_eq!(Plan::for_pattern(&cfg(10, &[0, 2, 4])).label.to_string(), "BL(1,1)");
        assert_eq!(Plan::for_pattern(&cfg(10, &[0, 2, 4])).label.phase(), 2);
    }
}
