//! Second-phase transition suite: every special-set class instance small
//! enough is built, explored exhaustively, and held to its successor class,
//! its intermediate classes, and its round budget.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::explore::{explore_with, ExploreOptions, Hooks, Reduction};
use super::Status;
use crate::executor::PatternFacts;
use crate::phase2::{classify_csp, CspVariant};
use crate::protocol::PhaseLabel;
use crate::ring::{Configuration, NodeIndex};

/// Most rounds one class transition may take.
pub const TRANSITION_ROUNDS: u64 = 3;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LemmaRow {
    pub start: String,
    pub initial: String,
    pub n: usize,
    pub k: usize,
    pub towered: bool,
    pub expected_next: String,
    pub classes_seen: Vec<String>,
    /// Most rounds spent inside one transition, over the first transition
    /// from an idle start and every transition of the full run.
    pub transition_rounds: Option<u64>,
    /// Class transitions from `start` to gathering.
    pub transitions: usize,
    pub total_rounds: Option<u64>,
    pub states: usize,
    pub problems: Vec<String>,
}

impl LemmaRow {
    pub fn ok(&self) -> bool {
        self.problems.is_empty()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LemmaReport {
    pub k_max: usize,
    pub rows: Vec<LemmaRow>,
    pub skipped: Vec<String>,
    pub max_transition_rounds: u64,
    /// Largest observed `total_rounds / k²`.
    pub gathering_constant: f64,
}

impl LemmaReport {
    pub fn ok(&self) -> bool {
        self.rows.iter().all(LemmaRow::ok)
    }
}

fn sb(b: usize) -> CspVariant {
    CspVariant::SingleBlock { b }
}

fn bl(b0: usize, b1: usize) -> CspVariant {
    CspVariant::BlockLeader { b0, b1 }
}

/// Next class on the chain from `v` together with the classes a one-mover
/// interleaving may pass through on the way.
fn successor(v: CspVariant) -> (CspVariant, Vec<CspVariant>) {
    match v {
        CspVariant::SingleBlock { b: 1 | 2 } => (sb(1), vec![]),
        CspVariant::SingleBlock { b: 3 } => (sb(1), vec![sb(2)]),
        CspVariant::SingleBlock { b } => (bl(1, (b - 3) / 2), vec![CspVariant::SemiTwin { b: (b - 3) / 2 }]),
        CspVariant::BlockLeader { b0, b1: 1 } => (sb(b0 + 2), vec![CspVariant::SemiSingleBlock { b: b0 + 1 }]),
        CspVariant::BlockLeader { b0, b1 } => {
            (bl(b0 + 2, b1 - 1), vec![CspVariant::SemiBlockLeader { b0: b0 + 1, b1: b1 - 1 }])
        }
        CspVariant::SemiSingleBlock { b } => (sb(b + 1), vec![]),
        CspVariant::SemiTwin { b } => (bl(1, b), vec![]),
        CspVariant::SemiBlockLeader { b0, b1 } => (bl(b0 + 1, b1), vec![]),
    }
}

/// Whether a step between these classes stays within one transition.
fn same_transition(a: CspVariant, b: CspVariant) -> bool {
    a == b || successor(a).1.contains(&b) || successor(b).1.contains(&a)
}

fn chain_length(mut v: CspVariant) -> usize {
    let mut steps = 0;
    while v != sb(1) {
        v = successor(v).0;
        steps += 1;
    }
    steps
}

/// Occupied nodes and tower-construction node of a class instance laid out
/// clockwise from node 0.
fn layout(v: CspVariant) -> (Vec<NodeIndex>, NodeIndex) {
    let run = |from: usize, len: usize| (from..from + len).collect::<Vec<_>>();
    match v {
        CspVariant::SingleBlock { b } => (run(0, b), (b - 1) / 2),
        CspVariant::BlockLeader { b0, b1 } => {
            let mut nodes = run(0, b1);
            nodes.extend(run(b1 + 1, b0));
            nodes.extend(run(b1 + b0 + 2, b1));
            (nodes, b1 + 1 + (b0 - 1) / 2)
        }
        CspVariant::SemiSingleBlock { b } => {
            let mut nodes = run(0, b);
            nodes.push(b + 1);
            (nodes, b / 2)
        }
        CspVariant::SemiTwin { b } => {
            let mut nodes = run(0, b);
            nodes.extend(run(b + 1, b + 2));
            (nodes, b + 1)
        }
        CspVariant::SemiBlockLeader { b0, b1 } => {
            let mut nodes = run(0, b1);
            nodes.extend(run(b1 + 1, b0));
            nodes.extend(run(b1 + b0 + 2, b1 + 1));
            (nodes, b1 + b0 / 2 + 1)
        }
    }
}

/// Every class parameterization with at most `k_max` occupied nodes.
fn classes(k_max: usize) -> Vec<CspVariant> {
    let mut out = vec![sb(2)];
    out.extend((3..=k_max).step_by(2).map(sb));
    for b1 in 1..=k_max {
        for b0 in (1..=k_max).step_by(2).filter(|b0| b0 + 2 * b1 <= k_max) {
            out.push(bl(b0, b1));
        }
        for b0 in (2..=k_max).step_by(2).filter(|b0| b0 + 2 * b1 < k_max) {
            out.push(CspVariant::SemiBlockLeader { b0, b1 });
        }
        if 2 * b1 + 2 < k_max {
            out.push(CspVariant::SemiTwin { b: b1 });
        }
    }
    out.extend((2..k_max).step_by(2).map(|b| CspVariant::SemiSingleBlock { b }));
    out
}

/// Constructs each class tower-free (when its node count is an odd k) and
/// with a tower at v_t for every larger odd k up to `k_max`, on `n = k + 5`
/// nodes, and checks its transition and its full run to gathering over all
/// interleavings.
pub fn lemma_suite(k_max: usize) -> LemmaReport {
    let mut jobs = Vec::new();
    let mut skipped = Vec::new();
    for v in classes(k_max) {
        let (nodes, v_t) = layout(v);
        let m = nodes.len();
        for k in (3..=k_max).step_by(2).filter(|&k| k >= m) {
            let n = k + 5;
            let mut occupancy = vec![0u32; n];
            for &x in &nodes {
                occupancy[x] = 1;
            }
            // A size-2 block has no v_t; its tower sits on either node.
            let tower_at = if v == sb(2) { 0 } else { v_t };
            occupancy[tower_at] += (k - m) as u32;
            let config = Configuration::new(occupancy).expect("n ≥ 3");
            match classify_csp(&config.pattern()) {
                Some(c) if c.variant == v && (v == sb(2) || c.tower_node == Some(v_t)) => {
                    jobs.push((v, config, k > m))
                }
                other => skipped.push(format!(
                    "{v} with k={k}: constructed {config} classifies as {}",
                    other.map_or("nothing".to_string(), |c| c.to_string())
                )),
            }
        }
    }

    let rows: Vec<LemmaRow> = jobs.into_par_iter().map(|(v, config, towered)| check_class(v, &config, towered)).collect();
    let max_transition_rounds = rows.iter().filter_map(|r| r.transition_rounds).max().unwrap_or(0);
    let gathering_constant = rows
        .iter()
        .filter_map(|r| r.total_rounds.map(|t| t as f64 / (r.k * r.k) as f64))
        .fold(0.0, f64::max);
    LemmaReport { k_max, rows, skipped, max_transition_rounds, gathering_constant }
}

fn check_class(v: CspVariant, config: &Configuration, towered: bool) -> LemmaRow {
    let (n, k) = (config.n(), config.k() as usize);
    let v_t = classify_csp(&config.pattern()).and_then(|c| c.tower_node);
    let (next, via) = successor(v);
    let options = ExploreOptions { reduction: Reduction::Sorted, ..ExploreOptions::for_instance(n) };
    let mut row = LemmaRow {
        start: v.to_string(),
        initial: config.to_string(),
        n,
        k,
        towered,
        expected_next: if next == sb(1) { "gathered".into() } else { next.to_string() },
        classes_seen: Vec::new(),
        transition_rounds: None,
        transitions: chain_length(v),
        total_rounds: None,
        states: 0,
        problems: Vec::new(),
    };

    // Same class and same v_t (a size-2 block has none to compare).
    let is = |facts: &PatternFacts, want: CspVariant| match facts.plan.label {
        PhaseLabel::Two(c) => c.variant == want && (c.tower_node.is_none() || v_t.is_none() || c.tower_node == v_t),
        _ => false,
    };

    // One transition: stop on reaching the expected successor.
    let mut seen = BTreeSet::new();
    let result = explore_with(
        config,
        &options,
        Hooks {
            stop: &|_, f| is(f, next),
            segment: None,
            visit: &mut |c: &Configuration, f: &PatternFacts| {
                seen.insert(f.plan.label.to_string());
                if !(is(f, v) || is(f, next) || via.iter().any(|&w| is(f, w))) {
                    row.problems.push(format!("unexpected {} at {c}", f.plan.label));
                }
            },
        },
    );
    row.classes_seen = seen.into_iter().collect();
    match result {
        Ok(r) => {
            row.states = r.states;
            row.transition_rounds = r.max_rounds;
            report_problems(&mut row, &r);
        }
        Err(e) => row.problems.push(e.to_string()),
    }

    // The whole way to gathering: never leave the special set, never move v_t.
    let mut strays = Vec::new();
    let result = explore_with(
        config,
        &options,
        Hooks {
            stop: &|_, _| false,
            segment: Some(&|a, b| match (a.plan.label, b.plan.label) {
                (PhaseLabel::Two(x), PhaseLabel::Two(y)) => same_transition(x.variant, y.variant),
                _ => false,
            }),
            visit: &mut |c: &Configuration, f: &PatternFacts| match f.plan.label {
                PhaseLabel::Two(cls) => {
                    if let (Some(a), Some(b)) = (cls.tower_node, v_t) {
                        if a != b {
                            strays.push(format!("v_t moved to {a} at {c}"));
                        }
                    }
                }
                _ => strays.push(format!("left the special set at {c}")),
            },
        },
    );
    strays.truncate(3);
    row.problems.extend(strays);
    match result {
        Ok(r) => {
            row.states += r.states;
            row.total_rounds = r.max_rounds;
            row.transition_rounds = row.transition_rounds.max(r.milestone_gap_rounds);
            report_problems(&mut row, &r);
            if let Some(t) = r.max_rounds.filter(|&t| t > TRANSITION_ROUNDS * row.transitions as u64) {
                row.problems.push(format!("{t} rounds for {} transitions", row.transitions));
            }
        }
        Err(e) => row.problems.push(e.to_string()),
    }
    if let Some(t) = row.transition_rounds.filter(|&t| t > TRANSITION_ROUNDS) {
        row.problems.push(format!("a transition takes {t} rounds"));
    }
    row.problems.dedup();
    row
}

fn report_problems(row: &mut LemmaRow, r: &super::InstanceReport) {
    if r.status == Status::Inconclusive {
        row.problems.push("state budget exceeded".into());
    }
    for c in &r.violations {
        row.problems.push(format!("{}: {}", c.property, c.detail));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layouts_classify_as_built() {
        for v in classes(9) {
            let (nodes, v_t) = layout(v);
            let c = Configuration::from_occupied(nodes.len() + 6, &nodes).unwrap();
            let cls = classify_csp(&c).unwrap_or_else(|| panic!("{v} unrecognized"));
            assert_eq!(cls.variant, v);
            if v != sb(2) {
                assert_eq!(cls.tower_node, Some(v_t), "{v}");
            }
        }
    }

    #[test]
    fn chain_lengths() {
        assert_eq!(chain_length(sb(3)), 1);
        // SB(5) → BL(1,1) → SB(3) → gathered.
        assert_eq!(chain_length(sb(5)), 3);
        assert_eq!(chain_length(CspVariant::SemiTwin { b: 1 }), 3);
    }

    #[test]
    fn small_suite_passes() {
        let report = lemma_suite(5);
        for row in &report.rows {
            assert!(row.ok(), "{row:?}");
        }
        assert!(report.rows.iter().any(|r| r.start == "SB(5)" && !r.towered));
        assert!(report.max_transition_rounds <= TRANSITION_ROUNDS);
    }
}
