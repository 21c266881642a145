//! Gathering of anonymous, oblivious robots on an anonymous ring with local
//! weak multiplicity detection, under an asynchronous (CORDA) scheduler.

pub mod batch;
pub mod checker;
pub mod error;
pub mod executor;
pub mod observation;
pub mod phase1;
pub mod phase2;
pub mod protocol;
pub mod ring;
pub mod scheduler;
pub mod trace;

pub use error::RingError;
pub use observation::{compare_views, max_view_nodes, view_at, View};
pub use phase1::{classify_phase1, phase1_moves, MoveIntent, Phase1Class, Target};
pub use phase2::{classify_csp, phase2_moves, CspClass, CspVariant, Roles};
pub use protocol::{decide, Decision, PhaseLabel, Plan, ProtocolViolation};
pub use ring::{
    classify_symmetry, d_blocks, holes, inter_distance, is_gathered, node_blocks, Configuration,
    DBlock, DBlockLayout, Hole, NodeBlock, NodeIndex, Segment, SymmetryClass,
};
pub use executor::{
    run, ExecError, ExecutionState, Outcome, Property, RunOptions, RunResult, SchedulerAction, Violation,
};
pub use scheduler::{Scheduler, SchedulerPolicy};
pub use trace::{EventKind, TraceEvent};
