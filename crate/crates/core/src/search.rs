//! MAC backtracking search to the first solution (or proof of
//! unsatisfiability), with a static maximum-degree variable order and a
//! configurable value-ordering heuristic.
//!
//! Value orderings are computed once when a variable is first reached at a
//! tree node and reused while backtracking among its values; a fresh
//! ordering is considered only after the search retreats above the
//! variable. For the estimating heuristics the solution-count estimate of
//! the value being descended into becomes the parent estimate `N` one level
//! down, with the root `N` taken from the whole-instance estimate after the
//! initial propagation pass.

use crate::csp::{Assignment, Instance};
use crate::error::{Error, Result};
use crate::heuristics::{
    estimate_solution_count, estimate_total_solution_count, order_lexicographic,
    order_min_conflicts, ValueOrdering,
};
use crate::metareasoning::{
    exhaustive_sc_ordering, random_deployment_ordering, value_ordering_sc, SearchStats,
};
use crate::propagation::{ac3, mac_assign, undo_to_checkpoint, Consistency, DomainStore, PropStats, Trail};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::{Duration, Instant};

/// Value-ordering heuristic selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Heuristic {
    /// Ascending value index.
    Lex,
    /// Minimum conflicts with neighboring live values.
    MinConflicts,
    /// Solution-count estimation for every value (exhaustive deployment).
    Sc,
    /// Solution-count estimation deployed only while its net value is
    /// positive.
    Vsc,
    /// Solution-count estimation for a random subset of values.
    RandSc,
}

impl Heuristic {
    pub const ALL: &'static [Heuristic] = &[
        Heuristic::Lex,
        Heuristic::MinConflicts,
        Heuristic::Sc,
        Heuristic::Vsc,
        Heuristic::RandSc,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Heuristic::Lex => "lex",
            Heuristic::MinConflicts => "mc",
            Heuristic::Sc => "sc",
            Heuristic::Vsc => "vsc",
            Heuristic::RandSc => "rand-sc",
        }
    }

    fn estimates_counts(&self) -> bool {
        matches!(self, Heuristic::Sc | Heuristic::Vsc | Heuristic::RandSc)
    }
}

impl std::fmt::Display for Heuristic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Heuristic {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lex" => Ok(Heuristic::Lex),
            "mc" => Ok(Heuristic::MinConflicts),
            "sc" => Ok(Heuristic::Sc),
            "vsc" => Ok(Heuristic::Vsc),
            "rand-sc" => Ok(Heuristic::RandSc),
            other => Err(Error::Usage(format!(
                "unknown heuristic `{other}` (expected lex|mc|sc|vsc|rand-sc)"
            ))),
        }
    }
}

/// When the search stops.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopCondition {
    #[default]
    FirstSolution,
}

/// Configuration of one search run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub heuristic: Heuristic,
    /// Cost factor of one solution-count estimation (vsc only).
    pub gamma: f64,
    pub seed: u64,
    pub timeout: Option<Duration>,
    /// Repetitions when used in a benchmark.
    pub repeat: usize,
    pub stop: StopCondition,
    /// rand-sc: per-value probability that a count gets estimated.
    pub sc_deploy_prob: f64,
    /// rand-sc: hard cap on estimations over the whole run.
    pub sc_total_budget: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            heuristic: Heuristic::Vsc,
            gamma: 1e-3,
            seed: 0,
            timeout: None,
            repeat: 1,
            stop: StopCondition::FirstSolution,
            sc_deploy_prob: 0.5,
            sc_total_budget: None,
        }
    }
}

impl RunConfig {
    pub fn with_heuristic(heuristic: Heuristic) -> Self {
        RunConfig { heuristic, ..Default::default() }
    }

    /// Short label like `vsc(g=1e-3)` for grouping and reports.
    pub fn label(&self) -> String {
        match self.heuristic {
            Heuristic::Vsc => format!("vsc(g={:e})", self.gamma),
            Heuristic::RandSc => format!("rand-sc(p={})", self.sc_deploy_prob),
            h => h.name().to_string(),
        }
    }
}

/// Outcome of one search run.
#[derive(Clone, Debug)]
pub struct SearchResult {
    pub solution: Option<Assignment>,
    pub stats: SearchStats,
    pub timed_out: bool,
}

impl SearchResult {
    pub fn solved(&self) -> bool {
        self.solution.is_some()
    }

    /// True when the full tree was exhausted without a solution.
    pub fn proven_unsat(&self) -> bool {
        self.solution.is_none() && !self.timed_out
    }
}

/// One value-ordering decision, for deployment-pattern inspection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderingTrace {
    pub depth: usize,
    pub var: usize,
    pub live_count: usize,
    /// Solution counts estimated at this node.
    pub estimations: u64,
    pub values: Vec<usize>,
}

/// Per-run record emitted by the harness; the CSV column order is the field
/// order here. Times are seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsRecord {
    pub instance: String,
    pub heuristic: String,
    pub gamma: f64,
    pub seed: u64,
    pub search_time: f64,
    pub heuristic_time: f64,
    pub backtracks: u64,
    pub nodes: u64,
    pub constraint_checks: u64,
    pub sc_estimations: u64,
    pub solved: bool,
    pub timed_out: bool,
}

impl StatsRecord {
    pub fn from_run(instance: impl Into<String>, config: &RunConfig, result: &SearchResult) -> Self {
        StatsRecord {
            instance: instance.into(),
            heuristic: config.heuristic.name().to_string(),
            gamma: config.gamma,
            seed: config.seed,
            search_time: result.stats.search_time.as_secs_f64(),
            heuristic_time: result.stats.heuristic_time.as_secs_f64(),
            backtracks: result.stats.backtracks,
            nodes: result.stats.nodes,
            constraint_checks: result.stats.constraint_checks,
            sc_estimations: result.stats.sc_estimations,
            solved: result.solution.is_some(),
            timed_out: result.timed_out,
        }
    }
}

/// Variables by descending constraint-graph degree, ties by index;
/// computed once before search.
pub fn static_variable_order(instance: &Instance) -> Vec<usize> {
    let mut order: Vec<usize> = (0..instance.num_variables()).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(instance.degree(v)), v));
    order
}

enum Outcome {
    Solved,
    Exhausted,
    TimedOut,
}

struct Driver<'a> {
    instance: &'a Instance,
    config: &'a RunConfig,
    order: Vec<usize>,
    deadline: Option<Instant>,
    store: DomainStore,
    trail: Trail,
    prop: PropStats,
    rng: ChaCha8Rng,
    assignment: Vec<Option<usize>>,
    nodes: u64,
    backtracks: u64,
    sc_estimations: u64,
    sc_opportunities: u64,
    heuristic_time: Duration,
    trace: Option<&'a mut Vec<OrderingTrace>>,
}

impl<'a> Driver<'a> {
    fn past_deadline(&self) -> bool {
        match self.deadline {
            Some(d) => Instant::now() >= d,
            None => false,
        }
    }

    fn compute_ordering(&mut self, var: usize, parent_estimate: f64) -> ValueOrdering {
        let live_count = self.store.live_count(var);
        let before_estimations = self.sc_estimations;
        let started = Instant::now();
        let instance = self.instance;
        let store = &mut self.store;
        let trail = &mut self.trail;
        let prop = &mut self.prop;
        let estimations = &mut self.sc_estimations;
        let mut estimator = |s: &mut DomainStore, t: &mut Trail, i: &Instance, v: usize, val: usize| {
            *estimations += 1;
            estimate_solution_count(s, t, i, v, val, prop).estimate
        };
        let ordering = match self.config.heuristic {
            Heuristic::Lex => order_lexicographic(store, var),
            Heuristic::MinConflicts => order_min_conflicts(store, instance, var),
            Heuristic::Sc => {
                self.sc_opportunities += live_count as u64;
                exhaustive_sc_ordering(store, trail, instance, var, estimator)
                    .expect("node variables always have live values")
            }
            Heuristic::Vsc => {
                self.sc_opportunities += live_count as u64;
                value_ordering_sc(
                    store,
                    trail,
                    instance,
                    var,
                    parent_estimate,
                    self.config.gamma,
                    estimator,
                )
                .expect("node variables always have live values")
            }
            Heuristic::RandSc => {
                self.sc_opportunities += live_count as u64;
                let drawn = (0..live_count)
                    .filter(|_| crate::rng::unit_f64(&mut self.rng) < self.config.sc_deploy_prob)
                    .count();
                let remaining = self
                    .config
                    .sc_total_budget
                    .map(|b| b.saturating_sub(before_estimations) as usize)
                    .unwrap_or(usize::MAX);
                let budget = drawn.min(remaining);
                random_deployment_ordering(
                    store,
                    trail,
                    instance,
                    var,
                    parent_estimate,
                    budget,
                    &mut self.rng,
                    &mut estimator,
                )
                .expect("budget bounded by the live count")
            }
        };
        self.heuristic_time += started.elapsed();
        if let Some(trace) = self.trace.as_deref_mut() {
            trace.push(OrderingTrace {
                depth: self.assignment.iter().filter(|v| v.is_some()).count(),
                var,
                live_count,
                estimations: self.sc_estimations - before_estimations,
                values: ordering.values.clone(),
            });
        }
        ordering
    }

    fn recurse(&mut self, depth: usize, parent_estimate: f64) -> Outcome {
        if depth == self.instance.num_variables() {
            return Outcome::Solved;
        }
        let var = self.order[depth];
        let ordering = self.compute_ordering(var, parent_estimate);
        for (k, &value) in ordering.values.iter().enumerate() {
            if self.nodes & 0x3f == 0 && self.past_deadline() {
                return Outcome::TimedOut;
            }
            self.nodes += 1;
            let (mark, verdict) =
                mac_assign(&mut self.store, &mut self.trail, self.instance, var, value, &mut self.prop)
                    .expect("ordering values stay live between siblings");
            if verdict == Consistency::Consistent {
                self.assignment[var] = Some(value);
                let child_estimate = if self.config.heuristic.estimates_counts() {
                    ordering.annotations[k]
                } else {
                    0.0
                };
                match self.recurse(depth + 1, child_estimate) {
                    Outcome::Solved => return Outcome::Solved,
                    Outcome::TimedOut => return Outcome::TimedOut,
                    Outcome::Exhausted => {}
                }
                self.assignment[var] = None;
            }
            undo_to_checkpoint(&mut self.store, &mut self.trail, mark)
                .expect("marks are undone in LIFO order");
            self.backtracks += 1;
        }
        Outcome::Exhausted
    }
}

fn finish(
    solution: Option<Assignment>,
    timed_out: bool,
    started: Instant,
    driver: Option<&Driver>,
) -> SearchResult {
    let mut stats = SearchStats::default();
    if let Some(d) = driver {
        stats.nodes = d.nodes;
        stats.backtracks = d.backtracks;
        stats.constraint_checks = d.prop.support_checks;
        stats.sc_estimations = d.sc_estimations;
        stats.sc_opportunities = d.sc_opportunities;
        stats.heuristic_time = d.heuristic_time;
    }
    stats.search_time = started.elapsed();
    SearchResult { solution, stats, timed_out }
}

/// Searches `instance` to the first solution or a proof that none exists,
/// honoring `config.timeout`.
pub fn search(instance: &Instance, config: &RunConfig) -> SearchResult {
    search_inner(instance, config, None)
}

/// Like [`search`], also recording every value-ordering decision.
pub fn search_traced(instance: &Instance, config: &RunConfig) -> (SearchResult, Vec<OrderingTrace>) {
    let mut trace = Vec::new();
    let result = search_inner(instance, config, Some(&mut trace));
    (result, trace)
}

fn search_inner(
    instance: &Instance,
    config: &RunConfig,
    trace: Option<&mut Vec<OrderingTrace>>,
) -> SearchResult {
    assert!(config.gamma >= 0.0, "gamma must be nonnegative");
    let started = Instant::now();
    let deadline = config.timeout.map(|t| started + t);
    let n = instance.num_variables();
    if n == 0 {
        return finish(Some(Assignment::empty(0)), false, started, None);
    }

    let mut driver = Driver {
        instance,
        config,
        order: static_variable_order(instance),
        deadline,
        store: DomainStore::new(instance),
        trail: Trail::new(),
        prop: PropStats::default(),
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        assignment: vec![None; n],
        nodes: 0,
        backtracks: 0,
        sc_estimations: 0,
        sc_opportunities: 0,
        heuristic_time: Duration::ZERO,
        trace,
    };

    if ac3(&mut driver.store, &mut driver.trail, instance, &mut driver.prop) == Consistency::Wipeout {
        return finish(None, false, started, Some(&driver));
    }

    let root_estimate = if config.heuristic.estimates_counts() {
        let t0 = Instant::now();
        let estimate = estimate_total_solution_count(instance, &driver.store);
        driver.heuristic_time += t0.elapsed();
        estimate
    } else {
        0.0
    };

    if driver.past_deadline() {
        return finish(None, true, started, Some(&driver));
    }

    match driver.recurse(0, root_estimate) {
        Outcome::Solved => {
            let pairs: Vec<(usize, usize)> = driver
                .assignment
                .iter()
                .enumerate()
                .map(|(v, val)| (v, val.expect("complete at solution depth")))
                .collect();
            let solution = Assignment::from_pairs(n, &pairs);
            debug_assert!(crate::csp::is_consistent(instance, &solution).unwrap_or(false));
            finish(Some(solution), false, started, Some(&driver))
        }
        Outcome::Exhausted => finish(None, false, started, Some(&driver)),
        Outcome::TimedOut => finish(None, true, started, Some(&driver)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::{is_consistent, solve_exhaustive, BinaryConstraint};

    fn configs_under_test() -> Vec<RunConfig> {
        let mut configs = vec![
            RunConfig::with_heuristic(Heuristic::Lex),
            RunConfig::with_heuristic(Heuristic::MinConflicts),
            RunConfig::with_heuristic(Heuristic::Sc),
        ];
        for gamma in [0.0, 1e-3, 1e6] {
            configs.push(RunConfig {
                gamma,
                ..RunConfig::with_heuristic(Heuristic::Vsc)
            });
        }
        configs.push(RunConfig {
            seed: 17,
            ..RunConfig::with_heuristic(Heuristic::RandSc)
        });
        configs
    }

    #[test]
    fn unsat_tiny_instance() {
        let inst = Instance::new(
            vec![1, 1],
            vec![BinaryConstraint::from_fn(0, 1, 1, 1, |_, _| false)],
        )
        .unwrap();
        let result = search(&inst, &RunConfig::with_heuristic(Heuristic::Lex));
        assert!(!result.solved());
        assert!(result.proven_unsat());
        assert!(!result.timed_out);
    }

    #[test]
    fn satisfiable_tiny_instance() {
        let inst = Instance::new(
            vec![2, 2],
            vec![BinaryConstraint::from_fn(0, 1, 2, 2, |a, b| a != b)],
        )
        .unwrap();
        for config in configs_under_test() {
            let result = search(&inst, &config);
            let sol = result.solution.expect("satisfiable");
            assert!(is_consistent(&inst, &sol).unwrap(), "{}", config.label());
        }
    }

    #[test]
    fn verdict_matches_oracle_for_every_heuristic() {
        let configs = configs_under_test();
        for seed in 0..60 {
            let inst = crate::testutil::random_tiny(seed);
            let expected = solve_exhaustive(&inst).is_some();
            for config in &configs {
                let result = search(&inst, config);
                assert!(!result.timed_out);
                assert_eq!(result.solved(), expected, "seed {seed} {}", config.label());
                if let Some(sol) = result.solution {
                    assert!(is_consistent(&inst, &sol).unwrap());
                }
            }
        }
    }

    #[test]
    fn deterministic_counters_per_seed() {
        let inst = crate::generators::generate_model_rb(&crate::generators::RBParams {
            n_vars: 10,
            domain_size: 5,
            n_constraints: 18,
            n_nogoods: 12,
            seed: 5,
        })
        .unwrap();
        for config in configs_under_test() {
            let a = search(&inst, &config);
            let b = search(&inst, &config);
            assert_eq!(a.stats.nodes, b.stats.nodes, "{}", config.label());
            assert_eq!(a.stats.backtracks, b.stats.backtracks);
            assert_eq!(a.stats.constraint_checks, b.stats.constraint_checks);
            assert_eq!(a.stats.sc_estimations, b.stats.sc_estimations);
            assert_eq!(a.solution, b.solution);
        }
    }

    #[test]
    fn static_order_is_by_degree_then_index() {
        // star around variable 2 plus an edge 0-1
        let inst = Instance::new(
            vec![2; 5],
            vec![
                BinaryConstraint::from_fn(2, 0, 2, 2, |_, _| true),
                BinaryConstraint::from_fn(2, 1, 2, 2, |_, _| true),
                BinaryConstraint::from_fn(2, 3, 2, 2, |_, _| true),
                BinaryConstraint::from_fn(0, 1, 2, 2, |_, _| true),
            ],
        )
        .unwrap();
        assert_eq!(static_variable_order(&inst), vec![2, 0, 1, 3, 4]);
    }

    #[test]
    fn timeout_is_reported() {
        let inst = crate::generators::generate_model_rb(&crate::generators::RBParams {
            n_vars: 12,
            domain_size: 6,
            n_constraints: 30,
            n_nogoods: 20,
            seed: 1,
        })
        .unwrap();
        let config = RunConfig {
            timeout: Some(Duration::ZERO),
            ..RunConfig::with_heuristic(Heuristic::Lex)
        };
        let result = search(&inst, &config);
        assert!(result.timed_out);
        assert!(!result.solved());
        assert!(!result.proven_unsat());
    }

    #[test]
    fn heuristic_time_within_search_time() {
        let inst = crate::testutil::random_tiny(3);
        for config in configs_under_test() {
            let r = search(&inst, &config);
            assert!(r.stats.heuristic_time <= r.stats.search_time);
        }
    }

    #[test]
    fn ordering_computed_once_per_node() {
        let inst = crate::generators::generate_model_rb(&crate::generators::RBParams {
            n_vars: 8,
            domain_size: 4,
            n_constraints: 12,
            n_nogoods: 8,
            seed: 2,
        })
        .unwrap();
        let (result, trace) = search_traced(&inst, &RunConfig::with_heuristic(Heuristic::Sc));
        // one ordering per node entry; each lists the live values exactly once
        assert!(!trace.is_empty());
        for t in &trace {
            let mut vals = t.values.clone();
            vals.sort_unstable();
            vals.dedup();
            assert_eq!(vals.len(), t.values.len());
            assert_eq!(t.live_count, t.values.len());
            assert_eq!(t.estimations, t.live_count as u64);
        }
        assert_eq!(
            result.stats.sc_estimations,
            trace.iter().map(|t| t.estimations).sum::<u64>()
        );
        assert_eq!(
            result.stats.sc_opportunities,
            trace.iter().map(|t| t.live_count as u64).sum::<u64>()
        );
    }

    #[test]
    fn empty_instance_is_trivially_solved() {
        let inst = Instance::new(vec![], vec![]).unwrap();
        let result = search(&inst, &RunConfig::default());
        assert!(result.solved());
        assert!(result.solution.unwrap().is_complete());
    }

    #[test]
    fn stats_record_reflects_run() {
        let inst = crate::testutil::random_tiny(8);
        let config = RunConfig::with_heuristic(Heuristic::Vsc);
        let result = search(&inst, &config);
        let rec = StatsRecord::from_run("tiny-8", &config, &result);
        assert_eq!(rec.instance, "tiny-8");
        assert_eq!(rec.heuristic, "vsc");
        assert_eq!(rec.solved, result.solved());
        assert!(rec.heuristic_time <= rec.search_time);
        assert_eq!(rec.nodes, result.stats.nodes);
    }
}
