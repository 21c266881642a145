//! Built-in scheduler policies.
//!
//! All randomness comes from a `ChaCha8Rng` seeded explicitly, so a policy,
//! a seed and a fairness bound determine the execution byte for byte.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::executor::{ActionKind, CycleState, ExecutionState, FactCache, SchedulerAction};
use crate::phase1::Target;
use crate::protocol::Decision;

/// Picks the next action. The state is the ground truth; policies may
/// inspect anything, including what a robot would decide right now.
pub trait Scheduler {
    fn next_action(&mut self, state: &ExecutionState, cache: &mut FactCache) -> SchedulerAction;
}

/// The single valid action of `robot` in `state`, with a choice resolution
/// drawn from `pick` when the pending intent needs one.
pub fn action_for(
    state: &ExecutionState,
    robot: usize,
    pick: impl FnOnce(usize, usize) -> usize,
) -> SchedulerAction {
    match state.robots[robot].cycle {
        CycleState::Ready => SchedulerAction::look(robot),
        CycleState::Pending { decision: Decision::Move(Target::SchedulerChoice(a, b)), .. } => {
            SchedulerAction::execute_choosing(robot, pick(a, b))
        }
        CycleState::Pending { .. } => SchedulerAction::execute(robot),
    }
}

/// Steps robot `i` still needs to complete its cycle.
fn need(state: &ExecutionState, robot: usize) -> u64 {
    match state.robots[robot].cycle {
        CycleState::Ready => 2,
        CycleState::Pending { .. } => 1,
    }
}

/// Earliest-deadline-first check against the fairness bound: the robot that
/// must act now for every deadline to stay reachable, if any.
pub fn urgent_robot(state: &ExecutionState, fairness: u64) -> Option<usize> {
    let mut order: Vec<(u64, usize)> = (0..state.k())
        .map(|i| (fairness.saturating_sub(state.since_cycle(i)), i))
        .collect();
    order.sort_unstable();
    let mut cumulative = 0;
    for &(available, i) in &order {
        cumulative += need(state, i);
        if cumulative >= available {
            return Some(order[0].1);
        }
    }
    None
}

/// Fixed order, one full cycle per robot: look 0, move 0, look 1, move 1, …
#[derive(Default)]
pub struct RoundRobin {
    cursor: usize,
}

impl RoundRobin {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Scheduler for RoundRobin {
    fn next_action(&mut self, state: &ExecutionState, _: &mut FactCache) -> SchedulerAction {
        let robot = self.cursor % state.k();
        let action = action_for(state, robot, |a, _| a);
        if action.kind == ActionKind::ExecuteMove {
            self.cursor += 1;
        }
        action
    }
}

/// Fully synchronous rounds: every robot looks, then every robot moves.
#[derive(Default)]
pub struct Synchronous {
    cursor: usize,
}

impl Synchronous {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Scheduler for Synchronous {
    fn next_action(&mut self, state: &ExecutionState, _: &mut FactCache) -> SchedulerAction {
        let robot = self.cursor % state.k();
        self.cursor += 1;
        action_for(state, robot, |a, _| a)
    }
}

/// Uniformly random valid actions under F-bounded fairness.
pub struct RandomFair {
    rng: ChaCha8Rng,
    fairness: u64,
}

impl RandomFair {
    pub fn new(seed: u64, fairness: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), fairness }
    }
}

impl Scheduler for RandomFair {
    fn next_action(&mut self, state: &ExecutionState, _: &mut FactCache) -> SchedulerAction {
        let robot = urgent_robot(state, self.fairness).unwrap_or_else(|| self.rng.gen_range(0..state.k()));
        let coin: bool = self.rng.gen();
        action_for(state, robot, |a, b| if coin { a } else { b })
    }
}

/// Stress policy: whenever two or more robots would move, snapshot one of
/// them and hold back its move for as long as the fairness bound allows,
/// while everyone else keeps cycling. Several robots can be held at once,
/// one per mover group seen.
pub struct AdversarialSplit {
    rng: ChaCha8Rng,
    fairness: u64,
    held: Vec<usize>,
    cursor: usize,
}

impl AdversarialSplit {
    pub fn new(seed: u64, fairness: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), fairness, held: Vec::new(), cursor: 0 }
    }

    fn release(&mut self, action: SchedulerAction) -> SchedulerAction {
        if action.kind == ActionKind::ExecuteMove {
            self.held.retain(|&r| r != action.robot);
        }
        action
    }
}

impl Scheduler for AdversarialSplit {
    fn next_action(&mut self, state: &ExecutionState, cache: &mut FactCache) -> SchedulerAction {
        let coin: bool = self.rng.gen();
        let pick = |a, b| if coin { a } else { b };
        if let Some(robot) = urgent_robot(state, self.fairness) {
            return self.release(action_for(state, robot, pick));
        }
        let facts = cache.get(&state.config);
        let mut movers: Vec<usize> = (0..state.k())
            .filter(|&i| {
                let r = state.robots[i];
                r.cycle == CycleState::Ready
                    && !self.held.contains(&i)
                    && matches!(
                        facts.plan.decision_for(r.position, state.config.is_tower(r.position)),
                        Ok(Decision::Move(_))
                    )
            })
            .collect();
        if movers.len() >= 2 && self.held.len() + 1 < state.k() {
            movers.shuffle(&mut self.rng);
            self.held.push(movers[0]);
            return SchedulerAction::look(movers[0]);
        }
        let k = state.k();
        for offset in 0..k {
            let robot = (self.cursor + offset) % k;
            if self.held.contains(&robot) {
                continue;
            }
            let action = action_for(state, robot, pick);
            if action.kind == ActionKind::ExecuteMove {
                self.cursor = robot + 1;
            }
            return action;
        }
        let robot = self.held[0];
        self.release(action_for(state, robot, pick))
    }
}

/// Fault-injection stub that never schedules robot 0. Breaks fairness.
#[derive(Default)]
pub struct Starve {
    inner: RoundRobin,
}

impl Scheduler for Starve {
    fn next_action(&mut self, state: &ExecutionState, cache: &mut FactCache) -> SchedulerAction {
        loop {
            let action = self.inner.next_action(state, cache);
            if action.robot != 0 || state.k() == 1 {
                return action;
            }
            self.inner.cursor += 1;
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum SchedulerPolicy {
    RoundRobin,
    Synchronous,
    RandomFair,
    AdversarialSplit,
    Starve,
}

impl SchedulerPolicy {
    pub const ALL_FAIR: [SchedulerPolicy; 4] = [
        SchedulerPolicy::RoundRobin,
        SchedulerPolicy::Synchronous,
        SchedulerPolicy::RandomFair,
        SchedulerPolicy::AdversarialSplit,
    ];

    pub fn build(self, seed: u64, fairness: u64) -> Box<dyn Scheduler> {
        match self {
            SchedulerPolicy::RoundRobin => Box::new(RoundRobin::new()),
            SchedulerPolicy::Synchronous => Box::new(Synchronous::new()),
            SchedulerPolicy::RandomFair => Box::new(RandomFair::new(seed, fairness)),
            SchedulerPolicy::AdversarialSplit => Box::new(AdversarialSplit::new(seed, fairness)),
            SchedulerPolicy::Starve => Box::<Starve>::default(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SchedulerPolicy::RoundRobin => "round_robin",
            SchedulerPolicy::Synchronous => "synchronous",
            SchedulerPolicy::RandomFair => "random_fair",
            SchedulerPolicy::AdversarialSplit => "adversarial_split",
            SchedulerPolicy::Starve => "starve",
        }
    }
}

impl fmt::Display for SchedulerPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchedulerPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            SchedulerPolicy::RoundRobin,
            SchedulerPolicy::Synchronous,
            SchedulerPolicy::RandomFair,
            SchedulerPolicy::AdversarialSplit,
            SchedulerPolicy::Starve,
        ]
        .into_iter()
        .find(|p| p.name() == s)
        .ok_or_else(|| format!("unknown scheduler {s:?}"))
    }
}
