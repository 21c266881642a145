//! Instance enumeration, exhaustive model checking and the second-phase
//! lemma suite.

mod enumerate;
mod explore;
mod graph;
mod lemmas;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use enumerate::{canonical_mask, enumerate_initials};
pub use explore::{explore, ExploreOptions, Reduction, MAX_K, MAX_N};
pub use lemmas::{lemma_suite, LemmaReport, LemmaRow};

use crate::error::RingError;
use crate::executor::{replay, Property, SchedulerAction};
use crate::ring::Configuration;
use crate::trace::TraceEvent;


#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Complete,
    /// The state budget ran out before the graph was closed.
    Inconclusive,
}

/// A concrete execution witnessing a property failure. Replaying
/// `transcript` from `initial`, robots numbered by node, reproduces it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Counterexample {
    pub property: Property,
    pub initial: String,
    pub detail: String,
    pub transcript: Vec<SchedulerAction>,
    #[serde(skip)]
    pub trace: Vec<TraceEvent>,
    /// Where the trace was written, when it was.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trace_file: Option<String>,
}

impl Counterexample {
    pub fn new(property: Property, initial: &Configuration, detail: String, transcript: Vec<SchedulerAction>) -> Self {
        let positions: Vec<usize> = (0..initial.n())
            .flat_map(|i| std::iter::repeat_n(i, initial.count(i) as usize))
            .collect();
        let trace = replay(initial.n(), &positions, &transcript).expect("counterexample replays");
        Self { property, initial: initial.to_string(), detail, transcript, trace, trace_file: None }
    }
}

/// Result of exploring one initial configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceReport {
    pub initial: String,
    pub status: Status,
    pub states: usize,
    pub edges: usize,
    /// Most rounds any fair execution takes to gather. Unknown when
    /// inconclusive or when some fair execution never gathers.
    pub max_rounds: Option<u64>,
    pub violations: Vec<Counterexample>,
    /// Violating edges found, counterexamples kept for the first per property.
    pub violation_count: usize,
    /// Most pending moves, in one special-set state, that disagree with
    /// what their robot would decide now.
    pub max_stale_moves_in_csp: usize,
    pub stale_csp_states: usize,
    /// Most rounds spent in the first phase without the inter-distance
    /// shrinking or the biggest block growing.
    pub milestone_gap_rounds: Option<u64>,
}

impl InstanceReport {
    fn new(initial: &Configuration) -> Self {
        Self {
            initial: initial.to_string(),
            status: Status::Complete,
            states: 0,
            edges: 0,
            max_rounds: None,
            violations: Vec::new(),
            violation_count: 0,
            max_stale_moves_in_csp: 0,
            stale_csp_states: 0,
            milestone_gap_rounds: None,
        }
    }

    fn record(&mut self, c: Counterexample) {
        self.violations.push(c);
    }

    pub fn is_clean(&self) -> bool {
        self.status == Status::Complete && self.violations.is_empty()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropertyStatus {
    Holds,
    Violated,
    Inconclusive,
}

/// Aggregate over a set of explored instances.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Verdict {
    pub n: usize,
    pub k: usize,
    pub round_limit: u64,
    pub instances_checked: usize,
    pub inconclusive: Vec<String>,
    pub states_explored: u64,
    pub max_rounds_observed: u64,
    pub properties: BTreeMap<String, PropertyStatus>,
    pub violations: Vec<Counterexample>,
    pub max_stale_moves_in_csp: usize,
    pub stale_csp_states: u64,
    pub milestone_gap_rounds: u64,
    pub instances: Vec<InstanceReport>,
}

impl Verdict {
    pub fn from_reports(n: usize, k: usize, round_limit: u64, reports: Vec<InstanceReport>) -> Self {
        let mut v = Verdict {
            n,
            k,
            round_limit,
            instances_checked: reports.len(),
            inconclusive: Vec::new(),
            states_explored: 0,
            max_rounds_observed: 0,
            properties: BTreeMap::new(),
            violations: Vec::new(),
            max_stale_moves_in_csp: 0,
            stale_csp_states: 0,
            milestone_gap_rounds: 0,
            instances: Vec::new(),
        };
        for r in &reports {
            v.states_explored += r.states as u64;
            v.max_rounds_observed = v.max_rounds_observed.max(r.max_rounds.unwrap_or(0));
            v.max_stale_moves_in_csp = v.max_stale_moves_in_csp.max(r.max_stale_moves_in_csp);
            v.stale_csp_states += r.stale_csp_states as u64;
            v.milestone_gap_rounds = v.milestone_gap_rounds.max(r.milestone_gap_rounds.unwrap_or(0));
            if r.status == Status::Inconclusive {
                v.inconclusive.push(r.initial.clone());
            }
            v.violations.extend(r.violations.iter().cloned());
        }
        let all = [
            Property::TowerBeforeSingleBlock,
            Property::Periodic,
            Property::Liveness,
            Property::TowerOffConstructionNode,
            Property::ProtocolViolation,
        ];
        for p in all {
            let status = if v.violations.iter().any(|c| c.property == p) {
                PropertyStatus::Violated
            } else if v.inconclusive.is_empty() {
                PropertyStatus::Holds
            } else {
                PropertyStatus::Inconclusive
            };
            v.properties.insert(p.id().to_string(), status);
        }
        v.instances = reports;
        v
    }

    /// Zero violations and nothing left inconclusive.
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty() && self.inconclusive.is_empty()
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        writeln!(s, "n={} k={} round_limit={}", self.n, self.k, self.round_limit)?;
        writeln!(
            s,
            "instances {}  inconclusive {}  states {}  max rounds {}",
            self.instances_checked,
            self.inconclusive.len(),
            self.states_explored,
            self.max_rounds_observed
        )?;
        for (id, status) in &self.properties {
            writeln!(s, "  {id}: {status:?}")?;
        }
        writeln!(
            s,
            "stale special-set states {}  (max {} stale moves at once)  milestone gap {} rounds",
            self.stale_csp_states, self.max_stale_moves_in_csp, self.milestone_gap_rounds
        )?;
        for c in &self.violations {
            writeln!(s, "  {} from {}: {}", c.property, c.initial, c.detail)?;
        }
        f.write_str(s.trim_end())
    }
}

/// Explores every canonical valid initial configuration of `(n, k)`.
/// Instances run in parallel; the verdict does not depend on their order.
pub fn check(n: usize, k: usize, options: &ExploreOptions) -> Result<Verdict, RingError> {
    let initials = enumerate_initials(n, k)?;
    let reports = initials
        .par_iter()
        .map(|c| explore(c, options))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Verdict::from_reports(n, k, options.round_limit, reports))
}

/// Dihedral canonical form of an occupancy vector, for comparing visited
/// configuration sets across explorations.
pub fn canonical_occupancy(config: &Configuration) -> Vec<u32> {
    let n = config.n();
    (0..n)
        .flat_map(|r| [config.rotate(r), config.reflect(0).rotate(r)])
        .map(|c| c.occupancy().to_vec())
        .min()
        .expect("n ≥ 3")
}

/// Explores `initial` and also returns the canonical occupancy of every
/// configuration reached.
pub fn explore_visited(
    initial: &Configuration,
    options: &ExploreOptions,
) -> Result<(InstanceReport, BTreeSet<Vec<u32>>), RingError> {
    let mut seen = BTreeSet::new();
    let report = explore::explore_with(
        initial,
        options,
        explore::Hooks {
            stop: &|_, _| false,
            visit: &mut |c, _| {
                seen.insert(canonical_occupancy(c));
            },
            segment: None,
        },
    )?;
    Ok((report, seen))
}
