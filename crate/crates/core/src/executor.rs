//! CORDA execution engine with instantaneous moves.
//!
//! Each robot alternates a fused look-compute action, which stores an intent
//! computed against the current configuration, and a move action that
//! executes the stored intent unconditionally, however stale it has become.
//! The scheduler picks one action per step; a strict total order of actions
//! is the semantics.

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::RingError;
use crate::phase1::Target;
use crate::phase2::CspVariant;
use crate::protocol::{Decision, PhaseLabel, Plan};
use crate::ring::{self, Configuration, NodeIndex};
use crate::scheduler::Scheduler;
use crate::trace::{EventKind, TraceEvent};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExecError {
    #[error("invalid action for robot {robot}: {reason}")]
    InvalidAction { robot: usize, reason: String },

    #[error("scheduler contract broken: robot {robot} completed no cycle within {fairness} steps (step {step})")]
    Starvation { robot: usize, step: u64, fairness: u64 },

    #[error("invalid initial configuration: {0}")]
    InvalidInitial(#[from] RingError),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum CycleState {
    Ready,
    Pending {
        decision: Decision,
        snapshot_step: u64,
        /// Phase of the configuration the snapshot was taken in.
        snapshot_phase: u8,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct RobotState {
    pub position: NodeIndex,
    pub cycle: CycleState,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum ActionKind {
    LookCompute,
    ExecuteMove,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct SchedulerAction {
    pub robot: usize,
    pub kind: ActionKind,
    /// Node picked by the scheduler when the pending intent leaves the
    /// direction open.
    pub choice_resolution: Option<NodeIndex>,
}

impl SchedulerAction {
    pub fn look(robot: usize) -> Self {
        Self { robot, kind: ActionKind::LookCompute, choice_resolution: None }
    }

    pub fn execute(robot: usize) -> Self {
        Self { robot, kind: ActionKind::ExecuteMove, choice_resolution: None }
    }

    pub fn execute_choosing(robot: usize, node: NodeIndex) -> Self {
        Self { robot, kind: ActionKind::ExecuteMove, choice_resolution: Some(node) }
    }
}

/// Safety properties monitored on every step.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Property {
    /// No tower before the first configuration with a single 1.block.
    TowerBeforeSingleBlock,
    /// The occupied pattern never becomes periodic.
    Periodic,
    /// A robot's compute phase flagged an impossible situation.
    ProtocolViolation,
    /// Inside the special set, only the tower-construction node hosts a tower.
    TowerOffConstructionNode,
    /// Some fair execution does not gather within the round limit.
    Liveness,
}

impl Property {
    pub fn id(&self) -> &'static str {
        match self {
            Property::TowerBeforeSingleBlock => "P1",
            Property::Periodic => "P2",
            Property::Liveness => "P3",
            Property::TowerOffConstructionNode => "P4",
            Property::ProtocolViolation => "P5",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self {
            Property::TowerBeforeSingleBlock => "tower before single 1.block",
            Property::Periodic => "periodic configuration",
            Property::ProtocolViolation => "protocol violation",
            Property::TowerOffConstructionNode => "tower off the tower-construction node",
            Property::Liveness => "no gathering within round limit",
        };
        write!(f, "{} ({what})", self.id())
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Violation {
    pub property: Property,
    pub step: u64,
    pub detail: String,
}

/// Facts derived from an occupied pattern, cached per pattern.
#[derive(Debug)]
pub struct PatternFacts {
    pub plan: Plan,
    pub periodic: bool,
    pub single_block: bool,
}

impl PatternFacts {
    pub fn of(pattern: &Configuration) -> Self {
        Self {
            plan: Plan::for_pattern(pattern),
            periodic: ring::is_periodic(pattern),
            single_block: ring::is_single_node_block(pattern),
        }
    }
}

/// Memo of [`PatternFacts`] keyed by pattern.
#[derive(Default)]
pub struct FactCache {
    map: HashMap<Configuration, Rc<PatternFacts>>,
}

impl FactCache {
    pub fn get(&mut self, config: &Configuration) -> Rc<PatternFacts> {
        let pattern = config.pattern();
        self.map.entry(pattern).or_insert_with_key(|p| Rc::new(PatternFacts::of(p))).clone()
    }
}

/// Ground-truth checks on a configuration that do not depend on history,
/// other than the single-block flag.
pub fn check_configuration(
    config: &Configuration,
    facts: &PatternFacts,
    single_block_seen_before: bool,
) -> Option<(Property, String)> {
    if facts.periodic {
        return Some((Property::Periodic, format!("{config} is periodic")));
    }
    let towers = config.towers();
    if towers.is_empty() {
        return None;
    }
    if !single_block_seen_before {
        return Some((
            Property::TowerBeforeSingleBlock,
            format!("tower at {towers:?} in {config} before any single 1.block"),
        ));
    }
    if let PhaseLabel::Two(cls) = &facts.plan.label {
        let allowed = match (cls.variant, cls.tower_node) {
            (CspVariant::SingleBlock { b: 2 }, _) => towers.len() == 1,
            (_, Some(v_t)) => towers == [v_t],
            (_, None) => false,
        };
        if !allowed {
            return Some((
                Property::TowerOffConstructionNode,
                format!("towers at {towers:?} in {config} classified {cls}"),
            ));
        }
    }
    None
}

/// Whether a run from `config` starts with the single-1.block milestone
/// already passed: the pattern is a single block, or the configuration is a
/// towered member of the special set (a second-phase starting point).
pub fn starts_past_single_block(config: &Configuration) -> bool {
    ring::is_single_node_block(config)
        || (config.has_tower() && crate::phase2::classify_csp(&config.pattern()).is_some())
}

#[derive(Clone, Debug)]
pub struct ExecutionState {
    pub config: Configuration,
    pub robots: Vec<RobotState>,
    pub step: u64,
    pub rounds: u64,
    pub first_single_1block_seen: bool,
    /// Robots that completed a move phase in the current round.
    round_done: Vec<bool>,
    /// Steps since each robot last completed a cycle.
    since_cycle: Vec<u64>,
}

/// What one applied action did.
#[derive(Clone, Debug)]
pub struct StepReport {
    pub event: TraceEvent,
    pub violation: Option<Violation>,
    pub completed_round: bool,
    /// A move executed inside the special set from a first-phase snapshot.
    pub outdated_phase1_move: bool,
}

impl ExecutionState {
    /// Robots are numbered in increasing node order.
    pub fn new(config: Configuration) -> Self {
        let positions: Vec<NodeIndex> = (0..config.n())
            .flat_map(|i| std::iter::repeat_n(i, config.count(i) as usize))
            .collect();
        Self::with_positions(config.n(), &positions)
    }

    /// Robot `i` starts on `positions[i]`.
    pub fn with_positions(n: usize, positions: &[NodeIndex]) -> Self {
        let config = Configuration::from_occupied(n, positions).expect("valid positions");
        let robots: Vec<RobotState> =
            positions.iter().map(|&position| RobotState { position, cycle: CycleState::Ready }).collect();
        let k = robots.len();
        let first_single_1block_seen = starts_past_single_block(&config);
        Self {
            config,
            robots,
            step: 0,
            rounds: 0,
            first_single_1block_seen,
            round_done: vec![false; k],
            since_cycle: vec![0; k],
        }
    }

    pub fn k(&self) -> usize {
        self.robots.len()
    }

    /// Steps since robot `i` last completed a cycle.
    pub fn since_cycle(&self, robot: usize) -> u64 {
        self.since_cycle[robot]
    }

    /// Whether robot `i` completed a move phase in the current round.
    pub fn round_done(&self, robot: usize) -> bool {
        self.round_done[robot]
    }

    /// No robot holds a pending move.
    pub fn quiescent(&self) -> bool {
        self.robots
            .iter()
            .all(|r| !matches!(r.cycle, CycleState::Pending { decision: Decision::Move(_), .. }))
    }

    pub fn is_done(&self) -> bool {
        ring::is_gathered(&self.config) && self.quiescent()
    }

    /// Applies one scheduler action in place.
    pub fn apply_in_place(
        &mut self,
        action: SchedulerAction,
        cache: &mut FactCache,
    ) -> Result<StepReport, ExecError> {
        let robot = action.robot;
        let invalid = |reason: &str| ExecError::InvalidAction { robot, reason: reason.into() };
        let state = *self.robots.get(robot).ok_or_else(|| invalid("no such robot"))?;
        let before = self.config.clone();
        let facts = cache.get(&before);
        let label = facts.plan.label;
        let mut violation = None;
        let mut completed_cycle = false;
        let mut outdated_phase1_move = false;
        let mut target_node = None;

        let kind = match (action.kind, state.cycle) {
            (ActionKind::LookCompute, CycleState::Ready) => {
                let local = before.is_tower(state.position);
                let decision = match facts.plan.decision_for(state.position, local) {
                    Ok(d) => d,
                    Err(v) => {
                        violation = Some(Violation {
                            property: Property::ProtocolViolation,
                            step: self.step,
                            detail: format!("robot {robot} on node {}: {} in {before}", v.node, v.reason),
                        });
                        Decision::Stay
                    }
                };
                self.robots[robot].cycle = CycleState::Pending {
                    decision,
                    snapshot_step: self.step,
                    snapshot_phase: label.phase(),
                };
                EventKind::Look
            }
            (ActionKind::ExecuteMove, CycleState::Pending { decision, snapshot_phase, .. }) => {
                completed_cycle = true;
                self.robots[robot].cycle = CycleState::Ready;
                match decision {
                    Decision::Stay => EventKind::Stay,
                    Decision::Move(target) => {
                        let to = match (target, action.choice_resolution) {
                            (Target::Node(v), _) => v,
                            (Target::SchedulerChoice(..), Some(v)) if target.admits(v) => v,
                            (Target::SchedulerChoice(..), _) => {
                                self.robots[robot].cycle = state.cycle;
                                return Err(invalid("pending intent needs a valid choice resolution"));
                            }
                        };
                        outdated_phase1_move = snapshot_phase == 1 && label.phase() == 2;
                        self.config = self.config.with_move(state.position, to);
                        self.robots[robot].position = to;
                        target_node = Some(to);
                        EventKind::Move
                    }
                }
            }
            (ActionKind::LookCompute, _) => return Err(invalid("look-compute while pending")),
            (ActionKind::ExecuteMove, _) => return Err(invalid("move without a pending intent")),
        };

        let event = TraceEvent {
            step: self.step,
            robot,
            kind,
            phase: label.phase(),
            class: label.to_string(),
            before: before.to_string(),
            after: self.config.to_string(),
            target: target_node,
        };

        if violation.is_none() && kind == EventKind::Move {
            let after_facts = cache.get(&self.config);
            if let Some((property, detail)) =
                check_configuration(&self.config, &after_facts, self.first_single_1block_seen)
            {
                violation = Some(Violation { property, step: self.step, detail });
            }
            self.first_single_1block_seen |= after_facts.single_block;
        }

        for (i, since) in self.since_cycle.iter_mut().enumerate() {
            *since = if completed_cycle && i == robot { 0 } else { *since + 1 };
        }
        let mut completed_round = false;
        if completed_cycle {
            self.round_done[robot] = true;
            if self.round_done.iter().all(|&d| d) {
                self.rounds += 1;
                self.round_done.iter_mut().for_each(|d| *d = false);
                completed_round = true;
            }
        }
        self.step += 1;
        Ok(StepReport { event, violation, completed_round, outdated_phase1_move })
    }
}

/// Pure form of [`ExecutionState::apply_in_place`].
pub fn apply(state: &ExecutionState, action: SchedulerAction) -> Result<ExecutionState, ExecError> {
    let mut next = state.clone();
    next.apply_in_place(action, &mut FactCache::default())?;
    Ok(next)
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Outcome {
    Gathered,
    RoundLimit,
    Violation(Violation),
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub max_rounds: u64,
    /// Every robot must complete a cycle within every window of this many steps.
    pub fairness: u64,
    pub record_trace: bool,
}

impl RunOptions {
    /// Round limit `10·n²`, fairness bound `3k`, trace recorded.
    pub fn for_instance(n: usize, k: usize) -> Self {
        Self { max_rounds: 10 * (n * n) as u64, fairness: 3 * k as u64, record_trace: true }
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub outcome: Outcome,
    pub trace: Vec<TraceEvent>,
    pub transcript: Vec<SchedulerAction>,
    pub rounds: u64,
    pub steps: u64,
    /// Moves executed inside the special set on a first-phase snapshot.
    pub outdated_phase1_moves: u64,
}

/// Drives `initial` under `scheduler` until gathering, a violation, or the
/// round limit.
pub fn run(
    initial: &Configuration,
    scheduler: &mut dyn Scheduler,
    options: RunOptions,
) -> Result<RunResult, ExecError> {
    let mut state = ExecutionState::new(initial.clone());
    let mut cache = FactCache::default();
    let mut result = RunResult {
        outcome: Outcome::RoundLimit,
        trace: Vec::new(),
        transcript: Vec::new(),
        rounds: 0,
        steps: 0,
        outdated_phase1_moves: 0,
    };

    let facts = cache.get(initial);
    if let Some((property, detail)) =
        check_configuration(initial, &facts, state.first_single_1block_seen)
    {
        result.outcome = Outcome::Violation(Violation { property, step: 0, detail });
        return Ok(result);
    }

    loop {
        if state.is_done() {
            result.outcome = Outcome::Gathered;
            break;
        }
        if state.rounds >= options.max_rounds {
            result.outcome = Outcome::RoundLimit;
            break;
        }
        let action = scheduler.next_action(&state, &mut cache);
        let report = state.apply_in_place(action, &mut cache)?;
        result.transcript.push(action);
        result.outdated_phase1_moves += u64::from(report.outdated_phase1_move);
        if options.record_trace {
            result.trace.push(report.event);
        }
        if let Some(v) = report.violation {
            result.outcome = Outcome::Violation(v);
            break;
        }
        if let Some(robot) = (0..state.k()).find(|&i| state.since_cycle(i) >= options.fairness) {
            return Err(ExecError::Starvation { robot, step: state.step, fairness: options.fairness });
        }
    }
    result.rounds = state.rounds;
    result.steps = state.step;
    Ok(result)
}

/// Replays a recorded transcript from `positions` (robot `i` on
/// `positions[i]`) and returns the trace.
pub fn replay(
    n: usize,
    positions: &[NodeIndex],
    transcript: &[SchedulerAction],
) -> Result<Vec<TraceEvent>, ExecError> {
    let mut state = ExecutionState::with_positions(n, positions);
    let mut cache = FactCache::default();
    transcript.iter().map(|&a| state.apply_in_place(a, &mut cache).map(|r| r.event)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheduler::{RoundRobin, Synchronous};

    fn cfg(n: usize, nodes: &[usize]) -> Configuration {
        Configuration::from_occupied(n, nodes).unwrap()
    }

    #[test]
    fn look_compute_stores_current_intent() {
        let s = ExecutionState::new(cfg(10, &[0, 1, 2, 3, 4]));
        let s = apply(&s, SchedulerAction::look(1)).unwrap();
        assert!(matches!(
            s.robots[1].cycle,
            CycleState::Pending { decision: Decision::Move(Target::Node(2)), .. }
        ));
        let s = apply(&s, SchedulerAction::execute(1)).unwrap();
        assert_eq!(s.config.count(1), 0);
        assert_eq!(s.config.count(2), 2);
        assert_eq!(s.robots[1].cycle, CycleState::Ready);
    }

    #[test]
    fn stay_completes_cycle_without_change() {
        let s = ExecutionState::new(cfg(10, &[0, 1, 2, 3, 4]));
        let s = apply(&s, SchedulerAction::look(0)).unwrap();
        let t = apply(&s, SchedulerAction::execute(0)).unwrap();
        assert_eq!(t.config, s.config);
        assert_eq!(t.robots[0].cycle, CycleState::Ready);
        assert_eq!(t.since_cycle(0), 0);
    }

    #[test]
    fn invalid_pairings_are_rejected() {
        let s = ExecutionState::new(cfg(10, &[0, 1, 2, 3, 4]));
        assert!(apply(&s, SchedulerAction::execute(0)).is_err());
        let s = apply(&s, SchedulerAction::look(0)).unwrap();
        assert!(apply(&s, SchedulerAction::look(0)).is_err());
        assert!(apply(&s, SchedulerAction::look(9)).is_err());
    }

    #[test]
    fn choice_must_be_resolved_to_an_admitted_neighbor() {
        let s = ExecutionState::new(cfg(15, &[0, 1, 4, 7, 8]));
        let s = apply(&s, SchedulerAction::look(2)).unwrap();
        assert!(apply(&s, SchedulerAction::execute(2)).is_err());
        assert!(apply(&s, SchedulerAction::execute_choosing(2, 6)).is_err());
        let t = apply(&s, SchedulerAction::execute_choosing(2, 5)).unwrap();
        assert_eq!(t.robots[2].position, 5);
    }

    #[test]
    fn stale_moves_land_on_occupied_nodes() {
        // Both neighbors of the center snapshot SB(3), then move one at a time.
        let mut s = ExecutionState::new(cfg(8, &[0, 1, 2]));
        for a in [
            SchedulerAction::look(0),
            SchedulerAction::look(2),
            SchedulerAction::execute(0),
            SchedulerAction::execute(2),
        ] {
            s = apply(&s, a).unwrap();
        }
        assert!(ring::is_gathered(&s.config));
    }

    #[test]
    fn towered_semi_twin_gathers() {
        let initial = Configuration::from_placement(10, "0,2*3,3,4").unwrap();
        let r = run(&initial, &mut RoundRobin::new(), RunOptions::for_instance(10, 7)).unwrap();
        assert_eq!(r.outcome, Outcome::Gathered);
    }

    #[test]
    fn example_instance_gathers_synchronously() {
        let r = run(&cfg(10, &[0, 1, 2, 5, 7]), &mut Synchronous::new(), RunOptions::for_instance(10, 5))
            .unwrap();
        assert_eq!(r.outcome, Outcome::Gathered);
        assert!(r.rounds <= 100, "{} rounds", r.rounds);
    }

    #[test]
    fn already_gathered_runs_zero_steps() {
        let initial = Configuration::from_placement(10, "3*5").unwrap();
        let r = run(&initial, &mut RoundRobin::new(), RunOptions::for_instance(10, 5)).unwrap();
        assert_eq!(r.outcome, Outcome::Gathered);
        assert_eq!(r.rounds, 0);
        assert_eq!(r.steps, 0);
    }

    #[test]
    fn illegal_initial_tower_is_reported() {
        let initial = Configuration::from_placement(10, "0*2,1,2,5").unwrap();
        let r = run(&initial, &mut RoundRobin::new(), RunOptions::for_instance(10, 5)).unwrap();
        assert!(matches!(
            r.outcome,
            Outcome::Violation(Violation { property: Property::TowerBeforeSingleBlock, .. })
        ));
    }

    #[test]
    fn robot_count_is_conserved() {
        let r = run(&cfg(11, &[0, 1, 3, 6, 7]), &mut RoundRobin::new(), RunOptions::for_instance(11, 5))
            .unwrap();
        for e in &r.trace {
            let c: Configuration = e.after.parse().unwrap();
            assert_eq!(c.k(), 5);
        }
    }
}
