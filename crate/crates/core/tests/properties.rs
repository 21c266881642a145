use proptest::prelude::*;

use ringgather_core::batch::random_initial;
use ringgather_core::executor::{apply, CycleState, ExecutionState};
use ringgather_core::observation::view_at;
use ringgather_core::phase1::{Phase1Class, Target};
use ringgather_core::protocol::{Decision, PhaseLabel, Plan};
use ringgather_core::ring::{self, reflect_node, Configuration};
use ringgather_core::SchedulerAction;

/// Any non-empty tower-free pattern on 3..=40 nodes.
fn pattern() -> impl Strategy<Value = Configuration> {
    (3usize..=40)
        .prop_flat_map(|n| (Just(n), proptest::collection::vec(any::<bool>(), n)))
        .prop_filter_map("empty", |(n, bits)| {
            let nodes: Vec<usize> = (0..n).filter(|&i| bits[i]).collect();
            (!nodes.is_empty()).then(|| Configuration::from_occupied(n, &nodes).unwrap())
        })
}

/// A valid starting configuration: odd k, 2 < k < n − 3, non-periodic.
fn instance() -> impl Strategy<Value = Configuration> {
    (8usize..=24)
        .prop_flat_map(|n| (Just(n), (1..=(n - 5) / 2).prop_map(|h| 2 * h + 1), any::<u64>()))
        .prop_map(|(n, k, seed)| random_initial(n, k, seed).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn views_survive_rotation_and_reflection(c in pattern(), r in 0usize..40, t in 0usize..40) {
        let n = c.n();
        let rotated = c.rotate(r);
        let reflected = c.reflect(t);
        for v in c.occupied_nodes() {
            let view = view_at(&c, v).unwrap();
            prop_assert_eq!(&view_at(&rotated, (v + r) % n).unwrap(), &view);
            prop_assert_eq!(&view_at(&reflected, reflect_node(t, v, n)).unwrap(), &view);
        }
    }

    #[test]
    fn block_and_hole_counts_add_up(c in pattern()) {
        let (n, w) = (c.n(), c.occupied_count());
        let holes = ring::holes(&c).unwrap();
        let blocks = ring::node_blocks(&c).unwrap();
        prop_assert_eq!(holes.iter().map(|h| h.size).sum::<usize>() + w, n);
        prop_assert_eq!(blocks.iter().map(|b| b.size).sum::<usize>(), w);
        if w < n {
            prop_assert_eq!(holes.len(), blocks.len());
        }
        let segments = ring::segments(&c).unwrap();
        prop_assert_eq!(segments.len(), w);
        prop_assert_eq!(segments.iter().map(|s| s.distance).sum::<usize>(), n);
        if w >= 2 {
            let layout = ring::d_blocks(&c).unwrap();
            let members: usize = layout.blocks.iter().map(|b| b.members.len()).sum();
            prop_assert_eq!(members + layout.isolated.len(), w);
        }
    }

    #[test]
    fn decisions_commute_with_reflection(c in instance(), t in 0usize..24) {
        let n = c.n();
        let plan = Plan::for_pattern(&c);
        let image = Plan::for_pattern(&c.reflect(t));
        for v in c.occupied_nodes() {
            let d = plan.decision_for(v, false).unwrap();
            let mapped = match d {
                Decision::Stay => Decision::Stay,
                Decision::Move(target) => Decision::Move(target.map(|x| reflect_node(t, x, n))),
            };
            prop_assert_eq!(image.decision_for(reflect_node(t, v, n), false).unwrap(), mapped);
        }
    }

    /// Applying every first-phase move of a step shrinks the inter-distance
    /// for Type1 and never shrinks the biggest d.block for Type3b.
    #[test]
    fn first_phase_steps_make_progress(c in instance(), pick in any::<bool>()) {
        let plan = Plan::for_pattern(&c);
        let PhaseLabel::One(class) = plan.label else { return Ok(()) };
        let mut next = c.clone();
        for m in &plan.moves {
            let to = match m.target {
                Target::Node(v) => v,
                Target::SchedulerChoice(a, b) => if pick { a } else { b },
            };
            next = next.with_move(m.robot, to);
        }
        let before = ring::d_blocks(&c).unwrap();
        let after = ring::d_blocks(&next.pattern()).unwrap();
        let biggest = |l: &ring::DBlockLayout| l.blocks.iter().map(|b| b.members.len()).max().unwrap_or(1);
        match class {
            Phase1Class::Type1 => prop_assert!(after.d < before.d, "{} -> {}", c, next),
            Phase1Class::Type3b if after.d == before.d => {
                prop_assert!(biggest(&after) >= biggest(&before), "{} -> {}", c, next)
            }
            _ => {}
        }
    }

    /// Random interleavings keep the robot count and move one robot one edge
    /// at a time.
    #[test]
    fn executor_conserves_robots(c in instance(), picks in proptest::collection::vec(any::<u16>(), 1..400)) {
        let k = c.k() as usize;
        let mut s = ExecutionState::new(c);
        for p in picks {
            if s.is_done() {
                break;
            }
            let robot = p as usize % k;
            let action = match s.robots[robot].cycle {
                CycleState::Ready => SchedulerAction::look(robot),
                CycleState::Pending { decision: Decision::Move(Target::SchedulerChoice(a, b)), .. } => {
                    SchedulerAction::execute_choosing(robot, if p & 0x8000 == 0 { a } else { b })
                }
                CycleState::Pending { .. } => SchedulerAction::execute(robot),
            };
            let next = apply(&s, action).unwrap();
            prop_assert_eq!(next.config.occupancy().iter().sum::<u32>() as usize, k);
            let mut counts = vec![0u32; next.config.n()];
            for r in &next.robots {
                counts[r.position] += 1;
            }
            prop_assert_eq!(counts.as_slice(), next.config.occupancy());
            let changed: Vec<usize> =
                (0..counts.len()).filter(|&i| s.config.count(i) != next.config.count(i)).collect();
            match changed.as_slice() {
                [] => {}
                &[a, b] => prop_assert_eq!(s.config.ring_distance(a, b), 1),
                other => prop_assert!(false, "step changed {:?}", other),
            }
            s = next;
        }
    }
}
