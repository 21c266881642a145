use std::path::PathBuf;

use ringgather_core::batch::{fit_exponent, random_initial, run_batch, to_csv, BatchRow};
use ringgather_core::checker::{self, enumerate_initials, lemma_suite, ExploreOptions, MAX_K, MAX_N};
use ringgather_core::executor::{run, ExecError, Outcome, RunOptions};
use ringgather_core::ring::{self, Configuration};
use serde::Serialize;

use crate::output::{numbered, write_atomic, write_events, write_json};
use crate::{CheckArgs, EnumerateArgs, Failure, LemmasArgs, SimulateArgs, StatsArgs};

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn default_round_limit(n: usize) -> u64 {
    10 * (n * n) as u64
}

fn initials(n: usize, k: usize, placement: &str) -> Result<Vec<Configuration>, Failure> {
    if placement == "enumerate" {
        return enumerate_initials(n, k).map_err(usage);
    }
    if let Some(seed) = placement.strip_prefix("random:") {
        let seed: u64 = seed.parse().map_err(|_| usage(format!("bad seed in {placement:?}")))?;
        return Ok(vec![random_initial(n, k, seed).map_err(usage)?]);
    }
    let c = Configuration::from_placement(n, placement).map_err(usage)?;
    if c.k() as usize != k {
        return Err(usage(format!("--initial places {} robots but --k is {k}", c.k())));
    }
    if ring::is_periodic(&c) {
        return Err(usage(format!("--initial {placement} is periodic; gathering from it is impossible")));
    }
    Ok(vec![c])
}

#[derive(Serialize)]
struct RunSummary {
    initial: String,
    n: usize,
    k: usize,
    scheduler: String,
    seed: u64,
    fairness: u64,
    round_limit: u64,
    outcome: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    property: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    detail: Option<String>,
    rounds: u64,
    steps: u64,
    outdated_phase1_moves: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace_file: Option<String>,
}

pub fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    ring::check_instance_size(a.n, a.k).map_err(usage)?;
    let fairness = a.fairness.unwrap_or(3 * a.k as u64);
    if fairness < 2 {
        return Err(usage("--fairness must be at least 2"));
    }
    let configs = initials(a.n, a.k, &a.initial)?;
    let options = RunOptions {
        max_rounds: a.round_limit.unwrap_or_else(|| default_round_limit(a.n)),
        fairness,
        record_trace: true,
    };

    let mut summaries = Vec::new();
    for (i, initial) in configs.iter().enumerate() {
        let mut scheduler = a.scheduler.build(a.seed, fairness);
        let mut s = RunSummary {
            initial: initial.to_string(),
            n: a.n,
            k: a.k,
            scheduler: a.scheduler.to_string(),
            seed: a.seed,
            fairness,
            round_limit: options.max_rounds,
            outcome: "gathered",
            property: None,
            detail: None,
            rounds: 0,
            steps: 0,
            outdated_phase1_moves: 0,
            trace_file: None,
        };
        let trace_path = |violated: bool| -> Option<PathBuf> {
            match &a.trace {
                Some(p) if configs.len() == 1 => Some(p.clone()),
                Some(p) => Some(numbered(p, i)),
                None if violated => Some(
                    std::env::temp_dir().join(format!("ringgather-n{}-k{}-seed{}-{i}.jsonl", a.n, a.k, a.seed)),
                ),
                None => None,
            }
        };
        match run(initial, scheduler.as_mut(), options) {
            Ok(r) => {
                s.rounds = r.rounds;
                s.steps = r.steps;
                s.outdated_phase1_moves = r.outdated_phase1_moves;
                let violated = match &r.outcome {
                    Outcome::Gathered => false,
                    Outcome::RoundLimit => {
                        s.outcome = "round_limit";
                        true
                    }
                    Outcome::Violation(v) => {
                        s.outcome = "violation";
                        s.property = Some(v.property.to_string());
                        s.detail = Some(v.detail.clone());
                        true
                    }
                };
                if let Some(path) = trace_path(violated) {
                    write_events(&path, &r.trace)?;
                    s.trace_file = Some(path.display().to_string());
                }
            }
            Err(ExecError::Starvation { robot, step, fairness }) => {
                s.outcome = "starvation";
                s.detail = Some(format!("robot {robot} completed no cycle within {fairness} steps (step {step})"));
                s.steps = step;
            }
            Err(e) => return Err(usage(e)),
        }
        let mut line = format!("{}: {} rounds={} steps={}", s.initial, s.outcome, s.rounds, s.steps);
        if let Some(p) = &s.property {
            line.push_str(&format!(" property={p}"));
        }
        if let Some(d) = &s.detail {
            line.push_str(&format!(" detail={d:?}"));
        }
        if let (true, Some(t)) = (s.outcome != "gathered", &s.trace_file) {
            line.push_str(&format!(" counterexample={t}"));
        }
        println!("{line}");
        summaries.push(s);
    }

    if let Some(path) = &a.report {
        match summaries.as_slice() {
            [one] => write_json(path, one)?,
            many => write_json(path, &many)?,
        }
    }
    let failed = summaries.iter().filter(|s| s.outcome != "gathered").count();
    if failed > 0 {
        return Err(Failure::Property(format!("{failed} of {} runs did not gather", summaries.len())));
    }
    Ok(())
}

pub fn check(a: CheckArgs) -> Result<(), Failure> {
    ring::check_instance_size(a.n, a.k).map_err(usage)?;
    if a.n > MAX_N || a.k > MAX_K {
        return Err(usage(format!("check supports n ≤ {MAX_N}")));
    }
    let options = ExploreOptions {
        round_limit: a.round_limit.unwrap_or_else(|| default_round_limit(a.n)),
        max_states: a.max_states,
        ..ExploreOptions::for_instance(a.n)
    };
    let mut verdict = checker::check(a.n, a.k, &options).map_err(usage)?;
    if let Some(f) = a.fairness {
        println!("note: exploration covers every weakly fair schedule, including every {f}-bounded one");
    }
    let base = a
        .trace
        .clone()
        .unwrap_or_else(|| std::env::temp_dir().join(format!("ringgather-check-n{}-k{}", a.n, a.k)));
    for (i, c) in verdict.violations.iter_mut().enumerate() {
        let path = numbered(&base, i);
        write_events(&path, &c.trace)?;
        c.trace_file = Some(path.display().to_string());
    }
    println!("{verdict}");
    for c in &verdict.violations {
        if let Some(t) = &c.trace_file {
            println!("  counterexample: {t}");
        }
    }
    if let Some(path) = &a.report {
        write_json(path, &verdict)?;
    }
    if !verdict.is_clean() {
        return Err(Failure::Property(format!(
            "{} violations, {} inconclusive instances",
            verdict.violations.len(),
            verdict.inconclusive.len()
        )));
    }
    Ok(())
}

pub fn lemmas(a: LemmasArgs) -> Result<(), Failure> {
    if a.k_max < 3 || a.k_max + 5 > MAX_N {
        return Err(usage(format!("--k-max must be between 3 and {}", MAX_N - 5)));
    }
    let report = lemma_suite(a.k_max);
    for notice in &report.skipped {
        println!("skipped: {notice}");
    }
    for r in &report.rows {
        println!(
            "{:<10} k={} n={} {:<9} -> {:<9} transition≤{} total={} ({} transitions) {}",
            r.start,
            r.k,
            r.n,
            if r.towered { "towered" } else { "tower-free" },
            r.expected_next,
            r.transition_rounds.map_or("?".into(), |t| t.to_string()),
            r.total_rounds.map_or("?".into(), |t| t.to_string()),
            r.transitions,
            if r.ok() { "ok".to_string() } else { r.problems.join("; ") }
        );
    }
    println!(
        "{} instances, max rounds per transition {}, gathering constant c = {:.3} (rounds / k²)",
        report.rows.len(),
        report.max_transition_rounds,
        report.gathering_constant
    );
    if let Some(path) = &a.report {
        write_json(path, &report)?;
    }
    if !report.ok() {
        let bad = report.rows.iter().filter(|r| !r.ok()).count();
        return Err(Failure::Property(format!("{bad} lemma instances failed")));
    }
    Ok(())
}

pub fn enumerate(a: EnumerateArgs) -> Result<(), Failure> {
    let configs = enumerate_initials(a.n, a.k).map_err(usage)?;
    for c in &configs {
        let nodes: Vec<String> = c.occupied_nodes().iter().map(ToString::to_string).collect();
        println!("{}", nodes.join(","));
    }
    println!("{} canonical configurations", configs.len());
    if let Some(path) = &a.report {
        let texts: Vec<String> = configs.iter().map(ToString::to_string).collect();
        write_json(path, &texts)?;
    }
    Ok(())
}

pub fn stats(a: StatsArgs) -> Result<(), Failure> {
    for &k in &a.k {
        for &n in &a.n {
            ring::check_instance_size(n, k).map_err(usage)?;
        }
    }
    let mut rows: Vec<BatchRow> = Vec::new();
    println!("{:>4} {:>3} {:>5} {:>8} {:>11} {:>10}", "n", "k", "runs", "gathered", "mean_rounds", "max_rounds");
    for &k in &a.k {
        let fairness = a.fairness.unwrap_or(3 * k as u64);
        for &n in &a.n {
            let row = run_batch(n, k, a.seeds, fairness).map_err(|e| Failure::Property(e.to_string()))?;
            println!(
                "{:>4} {:>3} {:>5} {:>8} {:>11.2} {:>10}",
                row.n, row.k, row.runs, row.gathered, row.mean_rounds, row.max_rounds
            );
            rows.push(row);
        }
    }
    for &k in &a.k {
        let points: Vec<(f64, f64)> =
            rows.iter().filter(|r| r.k == k).map(|r| (r.n as f64, r.mean_rounds)).collect();
        if let Some(e) = fit_exponent(&points) {
            println!("k={k}: fitted exponent of mean rounds vs n = {e:.3}");
        }
    }
    if let Some(path) = &a.report {
        write_atomic(path, to_csv(&rows).as_bytes())?;
    }
    let failures: Vec<String> = rows
        .iter()
        .flat_map(|r| r.failures.iter().map(move |(seed, o)| format!("n={} k={} seed={seed}: {o}", r.n, r.k)))
        .collect();
    if !failures.is_empty() {
        return Err(Failure::Property(format!("runs did not gather:\n{}", failures.join("\n"))));
    }
    Ok(())
}
