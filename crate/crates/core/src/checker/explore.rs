//! Exhaustive exploration of every scheduler interleaving from one initial
//! configuration.
//!
//! A state is the multiset of per-robot tuples (position, pending intent,
//! done-this-round) plus the single-1.block flag, packed into a `u128` one
//! byte per robot. Intents are stored as resolved directions, so a pending
//! move survives rotation and reflection of the whole state.

use std::collections::VecDeque;
use std::rc::Rc;

use rustc_hash::FxHashMap;

use super::graph::{self, Graph, INDEX, PLATEAU, ROUND};
use super::{Counterexample, InstanceReport, Status};
use crate::error::RingError;
use crate::executor::{
    check_configuration, CycleState, ExecutionState, FactCache,
    PatternFacts, Property, SchedulerAction,
};
use crate::phase1::Target;
use crate::protocol::{Decision, PhaseLabel};
use crate::ring::{self, Configuration};

const READY: u8 = 0;
const STAY: u8 = 1;
const CW: u8 = 2;
const CCW: u8 = 3;
const CHOICE: u8 = 4;
const FLAG: u128 = 1 << 127;

/// Largest ring and team the byte packing supports.
pub const MAX_N: usize = 16;
pub const MAX_K: usize = 15;

/// State identification used by the explorer.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Reduction {
    /// Robots are interchangeable and states equal up to rotation and reflection.
    Dihedral,
    /// Robots are interchangeable; ring positions are absolute.
    Sorted,
    /// Robots keep their indices; ring positions are absolute.
    Off,
}

#[derive(Clone, Copy, Debug)]
pub struct ExploreOptions {
    pub round_limit: u64,
    pub max_states: usize,
    pub reduction: Reduction,
}

impl ExploreOptions {
    /// Round limit `10·n²` and a 40M state budget.
    pub fn for_instance(n: usize) -> Self {
        Self { round_limit: 10 * (n * n) as u64, max_states: 40_000_000, reduction: Reduction::Dihedral }
    }
}

fn byte(pos: usize, code: u8, done: bool) -> u8 {
    ((pos as u8) << 4) | (code << 1) | u8::from(done)
}

fn pos_of(b: u8) -> usize {
    usize::from(b >> 4)
}

fn code_of(b: u8) -> u8 {
    (b >> 1) & 7
}

fn done_of(b: u8) -> bool {
    b & 1 != 0
}

fn with_code(b: u8, code: u8) -> u8 {
    (b & !0b1110) | (code << 1)
}

fn intent_code(decision: Decision, pos: usize, n: usize) -> u8 {
    match decision {
        Decision::Stay => STAY,
        Decision::Move(Target::Node(v)) if v == (pos + 1) % n => CW,
        Decision::Move(Target::Node(_)) => CCW,
        Decision::Move(Target::SchedulerChoice(..)) => CHOICE,
    }
}

/// Pattern facts plus the first-phase progress measure
/// (inter-distance, size of the biggest d.block).
pub(crate) struct Facts {
    pub base: PatternFacts,
    potential: (usize, usize),
}

impl Facts {
    fn of(pattern: &Configuration) -> Self {
        let potential = ring::d_blocks(pattern)
            .map(|l| (l.d, l.blocks.iter().map(|b| b.size()).max().unwrap_or(1)))
            .unwrap_or((0, 0));
        Self { base: PatternFacts::of(pattern), potential }
    }

    fn phase(&self) -> u8 {
        self.base.plan.label.phase()
    }
}

struct Succ {
    key: u128,
    round: bool,
    plateau: bool,
    violation: Option<(Property, String)>,
}

pub(crate) struct Space {
    n: usize,
    k: usize,
    reduction: Reduction,
    maps: Vec<[u8; 256]>,
    facts: FxHashMap<u64, Rc<Facts>>,
}

impl Space {
    pub fn new(n: usize, k: usize, reduction: Reduction) -> Self {
        let mut maps = Vec::new();
        let transforms: Vec<(bool, usize)> = match reduction {
            Reduction::Dihedral => [false, true].iter().flat_map(|&f| (0..n).map(move |r| (f, r))).collect(),
            _ => vec![(false, 0)],
        };
        for (flip, r) in transforms {
            let mut map = [0u8; 256];
            for (b, slot) in map.iter_mut().enumerate() {
                let b = b as u8;
                let (mut pos, mut code) = (pos_of(b), code_of(b));
                if pos >= n || code > CHOICE {
                    continue;
                }
                if flip {
                    pos = (n - pos) % n;
                    code = match code {
                        CW => CCW,
                        CCW => CW,
                        c => c,
                    };
                }
                *slot = byte((pos + r) % n, code, done_of(b));
            }
            maps.push(map);
        }
        Self { n, k, reduction, maps, facts: FxHashMap::default() }
    }

    pub fn key(&self, bytes: &[u8], flag: bool) -> u128 {
        let pack = |bs: &[u8]| bs.iter().fold(0u128, |acc, &b| (acc << 8) | u128::from(b));
        let body = match self.reduction {
            Reduction::Off => pack(bytes),
            _ => {
                let mut best = u128::MAX;
                let mut buf = [0u8; MAX_K];
                let buf = &mut buf[..self.k];
                for map in &self.maps {
                    for (slot, &b) in buf.iter_mut().zip(bytes) {
                        *slot = map[usize::from(b)];
                    }
                    buf.sort_unstable();
                    best = best.min(pack(buf));
                }
                best
            }
        };
        body | if flag { FLAG } else { 0 }
    }

    pub fn decode(&self, key: u128) -> (Vec<u8>, bool) {
        let bytes = (0..self.k).map(|i| (key >> (8 * (self.k - 1 - i))) as u8).collect();
        (bytes, key & FLAG != 0)
    }

    pub fn config(&self, bytes: &[u8]) -> Configuration {
        let mut occupancy = vec![0u32; self.n];
        for &b in bytes {
            occupancy[pos_of(b)] += 1;
        }
        Configuration::new(occupancy).expect("n ≥ 3")
    }

    pub fn facts(&mut self, config: &Configuration) -> Rc<Facts> {
        self.facts
            .entry(config.pattern_bits())
            .or_insert_with(|| Rc::new(Facts::of(&config.pattern())))
            .clone()
    }

    /// Key of a concrete execution state.
    pub fn key_of(&self, state: &ExecutionState) -> u128 {
        let bytes: Vec<u8> = state
            .robots
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let code = match r.cycle {
                    CycleState::Ready => READY,
                    CycleState::Pending { decision, .. } => intent_code(decision, r.position, self.n),
                };
                byte(r.position, code, state.round_done(i))
            })
            .collect();
        self.key(&bytes, state.first_single_1block_seen)
    }

    fn finish_cycle(bytes: &mut [u8], robot: usize) -> bool {
        bytes[robot] = with_code(bytes[robot], READY) | 1;
        if bytes.iter().all(|&b| done_of(b)) {
            bytes.iter_mut().for_each(|b| *b &= !1);
            true
        } else {
            false
        }
    }

    fn successors(
        &mut self,
        bytes: &[u8],
        flag: bool,
        config: &Configuration,
        facts: &Facts,
        segment: &dyn Fn(&Facts, &Facts) -> bool,
        out: &mut Vec<Succ>,
    ) {
        let n = self.n;
        for i in 0..self.k {
            if self.reduction != Reduction::Off && i > 0 && bytes[i] == bytes[i - 1] {
                continue;
            }
            let b = bytes[i];
            let pos = pos_of(b);
            let mut next = bytes.to_vec();
            match code_of(b) {
                READY => match facts.base.plan.decision_for(pos, config.is_tower(pos)) {
                    Ok(d) => {
                        next[i] = with_code(b, intent_code(d, pos, n));
                        out.push(Succ {
                            key: self.key(&next, flag),
                            round: false,
                            plateau: segment(facts, facts),
                            violation: None,
                        });
                    }
                    Err(v) => out.push(Succ {
                        key: 0,
                        round: false,
                        plateau: false,
                        violation: Some((
                            Property::ProtocolViolation,
                            format!("robot on node {}: {} in {config}", v.node, v.reason),
                        )),
                    }),
                },
                STAY => {
                    let round = Self::finish_cycle(&mut next, i);
                    out.push(Succ { key: self.key(&next, flag), round, plateau: segment(facts, facts), violation: None });
                }
                code => {
                    let targets: &[usize] = match code {
                        CW => &[(pos + 1) % n],
                        CCW => &[(pos + n - 1) % n],
                        _ => &[(pos + n - 1) % n, (pos + 1) % n],
                    };
                    for &to in targets {
                        let mut next = next.clone();
                        let after = config.with_move(pos, to);
                        let after_facts = self.facts(&after);
                        let violation = check_configuration(&after, &after_facts.base, flag);
                        let flag = flag || after_facts.base.single_block;
                        next[i] = byte(to, READY, done_of(b));
                        let round = Self::finish_cycle(&mut next, i);
                        out.push(Succ {
                            key: self.key(&next, flag),
                            round,
                            plateau: segment(facts, &after_facts),
                            violation,
                        });
                    }
                }
            }
        }
    }
}

/// Observer hooks for [`explore_with`].
pub(crate) struct Hooks<'a> {
    /// States satisfying this are targets in addition to the gathered ones
    /// and are not expanded.
    pub stop: &'a dyn Fn(&Configuration, &PatternFacts) -> bool,
    /// Called once per reachable state.
    pub visit: &'a mut dyn FnMut(&Configuration, &PatternFacts),
    /// Edges (before, after) that stay inside one measured stretch. The
    /// longest such stretch, in rounds, is reported as the milestone gap.
    /// Defaults to first-phase steps that neither shrink the inter-distance
    /// nor grow the biggest block.
    pub segment: Option<&'a dyn Fn(&PatternFacts, &PatternFacts) -> bool>,
}

/// Explores every interleaving from `initial`. Target states (gathered with
/// no pending move) are absorbing and not expanded.
pub fn explore(initial: &Configuration, options: &ExploreOptions) -> Result<InstanceReport, RingError> {
    explore_with(initial, options, Hooks { stop: &|_, _| false, visit: &mut |_, _| {}, segment: None })
}

pub(crate) fn explore_with(
    initial: &Configuration,
    options: &ExploreOptions,
    hooks: Hooks<'_>,
) -> Result<InstanceReport, RingError> {
    let (n, k) = (initial.n(), initial.k() as usize);
    if n > MAX_N || k == 0 || k > MAX_K {
        return Err(RingError::InvalidConfiguration(format!(
            "explorer supports n ≤ {MAX_N} and 1 ≤ k ≤ {MAX_K}, got n={n} k={k}"
        )));
    }
    let mut space = Space::new(n, k, options.reduction);
    let mut report = InstanceReport::new(initial);

    let start = ExecutionState::new(initial.clone());
    let init_facts = space.facts(initial);
    if let Some((property, detail)) = check_configuration(initial, &init_facts.base, start.first_single_1block_seen) {
        report.states = 1;
        report.record(Counterexample::new(property, initial, detail, Vec::new()));
        return Ok(report);
    }

    let mut states: Vec<u128> = vec![space.key_of(&start)];
    let mut parent: Vec<u32> = vec![0];
    let mut index: FxHashMap<u128, u32> = FxHashMap::default();
    index.insert(states[0], 0);
    let mut graph = Graph::new();
    let mut target = Vec::new();
    // First violating edge per property: (source state, property, detail).
    let mut first_violation: Vec<(usize, Property, String)> = Vec::new();
    let mut succ = Vec::new();
    let mut out: Vec<u32> = Vec::new();
    let custom = hooks.segment;
    let segment = |a: &Facts, b: &Facts| match custom {
        Some(f) => f(&a.base, &b.base),
        None => {
            let ((d0, s0), (d1, s1)) = (a.potential, b.potential);
            a.phase() == 1 && b.phase() == 1 && !(d1 < d0 || (d1 == d0 && s1 > s0))
        }
    };

    let mut u = 0;
    while u < states.len() {
        let (bytes, flag) = space.decode(states[u]);
        let config = space.config(&bytes);
        let facts = space.facts(&config);
        (hooks.visit)(&config, &facts.base);
        let pending_move = bytes.iter().any(|&b| code_of(b) >= CW);
        let is_target = (ring::is_gathered(&config) && !pending_move) || (hooks.stop)(&config, &facts.base);
        target.push(is_target);
        if is_target {
            graph.seal();
            u += 1;
            continue;
        }
        if let PhaseLabel::Two(_) = facts.base.plan.label {
            let stale = bytes
                .iter()
                .filter(|&&b| {
                    let pos = pos_of(b);
                    code_of(b) >= CW
                        && facts
                            .base
                            .plan
                            .decision_for(pos, config.is_tower(pos))
                            .map_or(true, |d| intent_code(d, pos, n) != code_of(b))
                })
                .count();
            report.max_stale_moves_in_csp = report.max_stale_moves_in_csp.max(stale);
            report.stale_csp_states += usize::from(stale > 0);
        }

        succ.clear();
        space.successors(&bytes, flag, &config, &facts, &segment, &mut succ);
        out.clear();
        for s in succ.drain(..) {
            if let Some((property, detail)) = s.violation {
                report.violation_count += 1;
                if !first_violation.iter().any(|(_, p, _)| *p == property) {
                    first_violation.push((u, property, detail));
                }
                continue;
            }
            let v = *index.entry(s.key).or_insert_with(|| {
                states.push(s.key);
                parent.push(u as u32);
                (states.len() - 1) as u32
            });
            let mut e = v;
            if s.round {
                e |= ROUND;
            }
            if s.plateau {
                e |= PLATEAU;
            }
            out.push(e);
        }
        out.sort_unstable();
        out.dedup();
        graph.edges.extend_from_slice(&out);
        graph.seal();
        u += 1;
        if states.len() > options.max_states || states.len() > INDEX as usize {
            report.status = Status::Inconclusive;
            break;
        }
    }
    report.states = states.len();
    report.edges = graph.edges.len();
    drop(index);

    let path_to = |mut v: usize| {
        let mut path = vec![v];
        while v != 0 {
            v = parent[v] as usize;
            path.push(v);
        }
        path.reverse();
        path
    };

    for (u, property, detail) in first_violation {
        let keys: Vec<u128> = path_to(u).into_iter().map(|i| states[i]).collect();
        let transcript = concretize(&space, initial, &keys, Some(property));
        report.record(Counterexample::new(property, initial, detail, transcript));
    }

    if report.status == Status::Inconclusive {
        return Ok(report);
    }

    let comps = graph::components(&graph, states.len(), |_| true);
    if let Some((a, b)) = graph::round_cycle(&graph, &comps, |_| true) {
        // Lasso: reach `a`, take the round edge to `b`, return to `a`.
        let mut keys: Vec<u128> = path_to(a).into_iter().map(|i| states[i]).collect();
        let back = bfs_within(&graph, &comps.comp, b, |x| x == a);
        keys.extend(back.into_iter().map(|i| states[i]));
        let transcript = concretize(&space, initial, &keys, None);
        report.violation_count += 1;
        report.record(Counterexample::new(
            Property::Liveness,
            initial,
            "a fair execution cycles forever without gathering".into(),
            transcript,
        ));
        return Ok(report);
    }

    let longest = graph::longest_rounds(&graph, &comps, |_| true);
    report.max_rounds = Some(longest[0]);
    if longest[0] > options.round_limit {
        let mut keys = vec![states[0]];
        let mut x = 0;
        while !target[x] {
            // Walk inside the component to a state whose exit edge realizes
            // the longest value, then take it.
            let want = longest[x];
            let exit = |y: usize| {
                graph.out(y).iter().find(|&&e| {
                    let z = (e & INDEX) as usize;
                    comps.comp[z] != comps.comp[y] && longest[z] + u64::from(e & ROUND != 0) == want
                })
            };
            let hop = bfs_within(&graph, &comps.comp, x, |y| exit(y).is_some());
            keys.extend(hop.iter().skip(1).map(|&i| states[i]));
            let y = *hop.last().expect("non-empty");
            let z = (exit(y).expect("exit edge") & INDEX) as usize;
            keys.push(states[z]);
            x = z;
        }
        let transcript = concretize(&space, initial, &keys, None);
        report.violation_count += 1;
        report.record(Counterexample::new(
            Property::Liveness,
            initial,
            format!("an execution needs {} rounds, above the limit {}", longest[0], options.round_limit),
            transcript,
        ));
    }

    let plateau = |e: u32| e & PLATEAU != 0;
    let pcomps = graph::components(&graph, states.len(), plateau);
    report.milestone_gap_rounds = graph::longest_rounds(&graph, &pcomps, plateau).into_iter().max();
    Ok(report)
}

/// Shortest path from `from` to a state satisfying `goal`, staying inside
/// the component of `from`. Includes both ends.
fn bfs_within(graph: &Graph, comp: &[u32], from: usize, goal: impl Fn(usize) -> bool) -> Vec<usize> {
    let mut prev: FxHashMap<usize, usize> = FxHashMap::default();
    let mut queue = VecDeque::from([from]);
    prev.insert(from, from);
    while let Some(x) = queue.pop_front() {
        if goal(x) {
            let mut path = vec![x];
            let mut y = x;
            while y != from {
                y = prev[&y];
                path.push(y);
            }
            path.reverse();
            return path;
        }
        for &e in graph.out(x) {
            let y = (e & INDEX) as usize;
            if comp[y] == comp[from] && !prev.contains_key(&y) {
                prev.insert(y, x);
                queue.push_back(y);
            }
        }
    }
    unreachable!("goal unreachable inside component")
}

/// Every valid action of the concrete `state`.
pub(crate) fn actions(state: &ExecutionState) -> Vec<SchedulerAction> {
    let n = state.config.n();
    (0..state.k())
        .flat_map(|i| match state.robots[i].cycle {
            CycleState::Ready => vec![SchedulerAction::look(i)],
            CycleState::Pending { decision: Decision::Move(Target::SchedulerChoice(..)), .. } => {
                let p = state.robots[i].position;
                vec![
                    SchedulerAction::execute_choosing(i, (p + n - 1) % n),
                    SchedulerAction::execute_choosing(i, (p + 1) % n),
                ]
            }
            CycleState::Pending { .. } => vec![SchedulerAction::execute(i)],
        })
        .collect()
}

/// Turns a path of abstract states into a concrete transcript from
/// `initial`, optionally followed by one action raising `violation`.
fn concretize(space: &Space, initial: &Configuration, keys: &[u128], violation: Option<Property>) -> Vec<SchedulerAction> {
    let mut cache = FactCache::default();
    let mut state = ExecutionState::new(initial.clone());
    let mut transcript = Vec::new();
    for &want in &keys[1..] {
        let (action, next) = actions(&state)
            .into_iter()
            .find_map(|a| {
                let mut next = state.clone();
                let report = next.apply_in_place(a, &mut cache).ok()?;
                (report.violation.is_none() && space.key_of(&next) == want).then_some((a, next))
            })
            .expect("abstract edge has a concrete witness");
        transcript.push(action);
        state = next;
    }
    if let Some(property) = violation {
        let action = actions(&state)
            .into_iter()
            .find(|&a| {
                let mut next = state.clone();
                matches!(next.apply_in_place(a, &mut cache), Ok(r) if r.violation.as_ref().is_some_and(|v| v.property == property))
            })
            .expect("violating edge has a concrete witness");
        transcript.push(action);
    }
    transcript
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transforms_preserve_bytes() {
        let s = Space::new(8, 3, Reduction::Dihedral);
        assert_eq!(s.maps.len(), 16);
        let b = byte(1, CW, true);
        // Reflection then rotation by 0: node 1 maps to 7 and cw becomes ccw.
        assert_eq!(s.maps[8][usize::from(b)], byte(7, CCW, true));
        assert_eq!(s.maps[3][usize::from(b)], byte(4, CW, true));
    }

    #[test]
    fn keys_are_invariant_under_the_group() {
        let s = Space::new(8, 3, Reduction::Dihedral);
        let bytes = [byte(0, READY, false), byte(1, CW, true), byte(4, STAY, false)];
        let key = s.key(&bytes, false);
        for map in &s.maps {
            let moved: Vec<u8> = bytes.iter().map(|&b| map[usize::from(b)]).collect();
            assert_eq!(s.key(&moved, false), key);
        }
        assert_ne!(s.key(&bytes, true), key);
    }

    #[test]
    fn decode_round_trips_sorted_keys() {
        let s = Space::new(8, 3, Reduction::Sorted);
        let bytes = [byte(0, READY, false), byte(1, CW, true), byte(4, STAY, false)];
        let key = s.key(&bytes, true);
        assert_eq!(s.decode(key), (bytes.to_vec(), true));
    }

    #[test]
    fn gathered_initial_is_a_single_state() {
        let c = Configuration::from_placement(8, "3*3").unwrap();
        let r = explore(&c, &ExploreOptions::for_instance(8)).unwrap();
        assert_eq!(r.states, 1);
        assert_eq!(r.max_rounds, Some(0));
        assert!(r.violations.is_empty());
    }

    #[test]
    fn single_block_of_three_gathers_in_a_few_rounds() {
        let c = Configuration::from_occupied(8, &[0, 1, 2]).unwrap();
        let r = explore(&c, &ExploreOptions::for_instance(8)).unwrap();
        assert!(r.violations.is_empty(), "{:?}", r.violations);
        assert_eq!(r.status, Status::Complete);
        assert!(r.max_rounds.unwrap() <= 3);
    }

    #[test]
    fn illegal_tower_is_reported() {
        let c = Configuration::from_placement(10, "0*2,1,2,5,7").unwrap();
        let r = explore(&c, &ExploreOptions::for_instance(10)).unwrap();
        assert_eq!(r.violations[0].property, Property::TowerBeforeSingleBlock);
    }

    #[test]
    fn budget_overflow_is_inconclusive() {
        let c = Configuration::from_occupied(10, &[0, 1, 2, 5, 7]).unwrap();
        let options = ExploreOptions { max_states: 50, ..ExploreOptions::for_instance(10) };
        let r = explore(&c, &options).unwrap();
        assert_eq!(r.status, Status::Inconclusive);
        assert_eq!(r.max_rounds, None);
    }
}
