//! When is an expensive value-ordering heuristic worth running?
//!
//! Two layers live here. The first is a small analytic kernel for orderings
//! described by per-value parameters `(T, p)` — expected subtree search time
//! and backtracking probability. It provides the expected search time of an
//! ordering, the optimal sequencing rule (ascending `T / (1 - p)`), the
//! closed-form time of a default ordering, and the time gain of adopting a
//! freshly estimated value, together with its large-`p_def` linearization
//! and the Markov bound for deriving `p` from time estimates.
//!
//! The second layer prices one invocation of the solution-count estimator.
//! Solution counts per value are modeled as Poisson with mean `nu = N / |D|`
//! where `N` is the parent assignment's count estimate. Estimating one more
//! value pays off when the expected improvement over the current best count
//! `n_max` exceeds the (dimensionless) cost factor `gamma`:
//!
//! ```text
//! net = |D| * e^-nu * sum_{n >= n_max} (1/n_max - 1/n) nu^n / n!  -  gamma
//! ```
//!
//! [`value_ordering_sc`] runs that loop (estimate lowest-index value while
//! the net value is positive, tracking `n_max`), then orders values by
//! non-increasing count estimate. [`exhaustive_sc_ordering`] estimates
//! every value unconditionally, and [`random_deployment_ordering`] spends a
//! fixed budget of estimations on a uniformly random subset — the two
//! baselines the deployment policy is measured against.

use crate::csp::Instance;
use crate::error::{Error, Result};
use crate::heuristics::ValueOrdering;
use crate::propagation::{DomainStore, Trail};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;
use std::time::Duration;

/// Per-value search forecast: expected time to exhaust the subtree and the
/// probability that it contains no solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValueEstimate {
    pub time: f64,
    pub backtrack_prob: f64,
}

impl ValueEstimate {
    pub fn new(time: f64, backtrack_prob: f64) -> Self {
        debug_assert!(time >= 0.0);
        debug_assert!((0.0..=1.0).contains(&backtrack_prob));
        ValueEstimate { time, backtrack_prob }
    }
}

/// Estimates for each value of one variable, plus the default parameters
/// assumed for values that have not been estimated.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderingModel {
    pub estimates: Vec<ValueEstimate>,
    pub default_time: f64,
    pub default_backtrack_prob: f64,
}

/// Value of one deliberation action, split into its intrinsic part and the
/// deliberation cost. `net` is exactly `lambda - cost`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VoiResult {
    pub lambda: f64,
    pub cost: f64,
    pub net: f64,
}

impl VoiResult {
    pub fn new(lambda: f64, cost: f64) -> Self {
        VoiResult { lambda, cost, net: lambda - cost }
    }
}

/// Expected time to find the first solution (or exhaust the subtree) when
/// trying values in the given order: `T_{w(1)} + sum_i T_{w(i)} prod_{j<i}
/// p_{w(j)}`. `ordering` holds indices into `model.estimates`.
pub fn expected_search_time(ordering: &[usize], model: &OrderingModel) -> f64 {
    let mut total = 0.0;
    let mut reach_prob = 1.0;
    for &idx in ordering {
        let e = &model.estimates[idx];
        total += reach_prob * e.time;
        reach_prob *= e.backtrack_prob;
    }
    total
}

fn sequencing_ratio(e: &ValueEstimate) -> f64 {
    if e.backtrack_prob >= 1.0 {
        f64::INFINITY
    } else {
        e.time / (1.0 - e.backtrack_prob)
    }
}

/// The ordering minimizing [`expected_search_time`]: values sorted by
/// ascending `T / (1 - p)`, ties by index, `p = 1` values last.
pub fn optimal_ordering(model: &OrderingModel) -> Vec<usize> {
    let mut order: Vec<usize> = (0..model.estimates.len()).collect();
    order.sort_by(|&a, &b| {
        sequencing_ratio(&model.estimates[a])
            .total_cmp(&sequencing_ratio(&model.estimates[b]))
            .then(a.cmp(&b))
    });
    order
}

fn geometric_factor(p_def: f64, domain_size: usize) -> Result<f64> {
    if p_def >= 1.0 {
        return Err(Error::Domain(format!(
            "default backtracking probability {p_def} must be < 1"
        )));
    }
    Ok((1.0 - p_def.powi(domain_size as i32 - 1)) / (1.0 - p_def))
}

/// Expected search time of the prior-optimal ordering when only its first
/// value has estimated parameters and the remaining `domain_size - 1`
/// values carry the defaults:
/// `T_1 + p_1 * T_def * (1 - p_def^(m-1)) / (1 - p_def)`.
pub fn default_ordering_time(model: &OrderingModel, domain_size: usize) -> Result<f64> {
    if model.estimates.is_empty() || domain_size == 0 {
        return Err(Error::Usage(
            "default_ordering_time needs at least one estimated value".into(),
        ));
    }
    let first = &model.estimates[optimal_ordering(model)[0]];
    let geo = geometric_factor(model.default_backtrack_prob, domain_size)?;
    Ok(first.time + first.backtrack_prob * model.default_time * geo)
}

/// Search-time gain of trying a freshly estimated value ahead of the
/// current first one:
/// `T_1 - T_i + (p_1 - p_i) * T_def * (1 - p_def^(m-1)) / (1 - p_def)`.
pub fn gain(
    first: ValueEstimate,
    candidate: ValueEstimate,
    default_time: f64,
    default_backtrack_prob: f64,
    domain_size: usize,
) -> Result<f64> {
    let geo = geometric_factor(default_backtrack_prob, domain_size)?;
    Ok(first.time - candidate.time
        + (first.backtrack_prob - candidate.backtrack_prob) * default_time * geo)
}

/// The `p_def -> 1` linearization of [`gain`]: `(T_1 - T_i) * |D|`.
pub fn gain_approx(first_time: f64, candidate_time: f64, domain_size: usize) -> f64 {
    (first_time - candidate_time) * domain_size as f64
}

/// Markov bound on the backtracking probability given the expected time to
/// find one solution and to find all of them: `T_i / T_i_all`, clamped to
/// `[0, 1]`.
pub fn markov_backtrack_probability(time_single: f64, time_all: f64) -> Result<f64> {
    if time_all <= 0.0 {
        return Err(Error::Domain(format!(
            "time to find all solutions must be positive, got {time_all}"
        )));
    }
    Ok((time_single / time_all).clamp(0.0, 1.0))
}

/// `e^-nu * nu^n / n!`, evaluated in log space so large `n` stays stable.
pub fn poisson_pmf(n: u64, nu: f64) -> f64 {
    debug_assert!(nu >= 0.0);
    if nu == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (-nu + n as f64 * nu.ln() - ln_gamma(n as f64 + 1.0)).exp()
}

/// Smallest f64-representable exponent for `exp`; below this a term is a
/// hard zero in double precision.
const LN_TINY: f64 = -745.0;

/// Mean rate beyond which the series is replaced by its asymptotic form
/// (the summation window grows like `sqrt(nu)` and stops being worth
/// walking term by term).
const SERIES_NU_LIMIT: f64 = 1e9;

/// `e^-nu * sum_{n = ceil(n_max)}^inf (1/n_max - 1/n) * nu^n / n!`.
///
/// Terms are accumulated with log-space increments; summation stops once
/// the analytic tail bound (`(1/n_max) *` remaining Poisson mass, bounded
/// geometrically) drops below `1e-12` of the accumulated value, with a hard
/// cap of `n_max + ceil(20 nu) + 200` terms.
fn poisson_excess_sum(n_max: f64, nu: f64) -> f64 {
    if nu == 0.0 {
        return 0.0;
    }
    // The sum is strictly positive for nu > 0. Flooring at the smallest
    // positive value keeps that sign under f64 underflow, so the
    // exhaustive-deployment limit (gamma = 0) never stops early.
    let floor = f64::MIN_POSITIVE;
    let inv_nmax = 1.0 / n_max;
    let start = n_max.ceil();
    if nu > SERIES_NU_LIMIT || (nu > 1e4 && start < nu - 40.0 * nu.sqrt()) {
        // At these rates the mass is a narrow pulse at nu: the sum is
        // (1/n_max) * Q(start) - E[1/n] with Q ~ 1 below the pulse and ~ 0
        // above it, and E[1/n] = (1/nu)(1 + 1/nu + O(1/nu^2)).
        if start > nu + 40.0 * nu.sqrt() {
            return floor;
        }
        let mean_inverse = (1.0 + 1.0 / nu) / nu;
        return (inv_nmax - mean_inverse).max(floor);
    }
    let m = start as u64;
    let ln_nu = nu.ln();
    let hard_cap = (n_max + (20.0 * nu).ceil()) as u64 + 200;
    let mut acc = 0.0f64;
    let mut n = m;
    let mut ln_term = -nu + m as f64 * ln_nu - ln_gamma(m as f64 + 1.0);
    loop {
        if ln_term > LN_TINY {
            acc += (inv_nmax - 1.0 / n as f64) * ln_term.exp();
        }
        if n >= hard_cap {
            break;
        }
        let ln_next = ln_term + ln_nu - ((n + 1) as f64).ln();
        let next = (n + 1) as f64;
        if next > nu {
            // past the mode the pmf decays at least geometrically
            let ratio = nu / (next + 1.0);
            let tail_bound = inv_nmax * ln_next.exp() / (1.0 - ratio);
            if tail_bound <= 1e-12 * acc.abs() {
                break;
            }
        }
        n += 1;
        ln_term = ln_next;
    }
    acc.max(floor)
}

/// Net value of estimating one more solution count, split into intrinsic
/// value and cost. Requires `n_max >= 1` and `nu >= 0`.
pub fn voi_sc(n_max: f64, nu: f64, domain_size: usize, gamma: f64) -> Result<VoiResult> {
    if !(n_max >= 1.0) {
        return Err(Error::Domain(format!("n_max must be >= 1, got {n_max}")));
    }
    if !(nu >= 0.0) {
        return Err(Error::Domain(format!("nu must be nonnegative, got {nu}")));
    }
    let lambda = domain_size as f64 * poisson_excess_sum(n_max, nu);
    Ok(VoiResult::new(lambda, gamma))
}

/// `|D| * e^-nu * sum_{n >= n_max} (1/n_max - 1/n) nu^n / n! - gamma`.
pub fn net_voi_sc(n_max: f64, nu: f64, domain_size: usize, gamma: f64) -> Result<f64> {
    Ok(voi_sc(n_max, nu, domain_size, gamma)?.net)
}

/// Working state of the deployment loop for one variable.
#[derive(Clone, Debug)]
pub struct SCDeploymentState {
    /// Solution-count estimate `N` for the parent assignment.
    pub parent_estimate: f64,
    /// `N / |D|`: the Poisson rate, and the default per-value estimate.
    pub nu: f64,
    /// Current `n_i`, aligned with the live values in ascending order.
    pub estimates: Vec<f64>,
    pub estimated: Vec<bool>,
    /// Largest current estimate, floored at 1 so the series stays defined.
    pub n_max: f64,
    pub gamma: f64,
}

impl SCDeploymentState {
    pub fn new(parent_estimate: f64, live_count: usize, gamma: f64) -> Self {
        let nu = parent_estimate / live_count as f64;
        SCDeploymentState {
            parent_estimate,
            nu,
            estimates: vec![nu; live_count],
            estimated: vec![false; live_count],
            n_max: nu.max(1.0),
            gamma,
        }
    }

    /// Index of the lowest unestimated value, if any.
    pub fn next_unestimated(&self) -> Option<usize> {
        self.estimated.iter().position(|&done| !done)
    }

    pub fn record(&mut self, idx: usize, estimate: f64) {
        self.estimates[idx] = estimate;
        self.estimated[idx] = true;
        if estimate > self.n_max {
            self.n_max = estimate;
        }
    }

    pub fn net_voi(&self, domain_size: usize) -> f64 {
        net_voi_sc(self.n_max, self.nu, domain_size, self.gamma)
            .expect("deployment state keeps n_max >= 1 and nu >= 0")
    }
}

/// Positions sorted by non-increasing estimate, ties by ascending value.
fn ordering_by_estimates(live: &[usize], estimates: &[f64]) -> ValueOrdering {
    let mut pos: Vec<usize> = (0..live.len()).collect();
    pos.sort_by(|&x, &y| {
        estimates[y]
            .total_cmp(&estimates[x])
            .then(live[x].cmp(&live[y]))
    });
    ValueOrdering {
        values: pos.iter().map(|&p| live[p]).collect(),
        annotations: pos.iter().map(|&p| estimates[p]).collect(),
    }
}

fn collect_live(store: &DomainStore, var: usize) -> Result<Vec<usize>> {
    let live: Vec<usize> = store.live_values(var).collect();
    if live.is_empty() {
        return Err(Error::Usage(format!("variable {var} has no live values to order")));
    }
    Ok(live)
}

/// Orders the live values of `var` by solution-count estimates, estimating
/// only while the net value of one more estimation is positive.
///
/// `parent_estimate` is the count estimate `N` for the assignment above
/// `var`. Values that are never estimated keep the default `N / |D|`. The
/// returned annotations are the per-value estimates in try order; the first
/// annotation is the `N` to pass down when descending into the first value
/// (and likewise for later values after backtracking).
pub fn value_ordering_sc<F>(
    store: &mut DomainStore,
    trail: &mut Trail,
    instance: &Instance,
    var: usize,
    parent_estimate: f64,
    gamma: f64,
    mut estimate: F,
) -> Result<ValueOrdering>
where
    F: FnMut(&mut DomainStore, &mut Trail, &Instance, usize, usize) -> f64,
{
    if !(parent_estimate >= 0.0) {
        return Err(Error::Usage(format!(
            "parent solution-count estimate must be nonnegative, got {parent_estimate}"
        )));
    }
    if !(gamma >= 0.0) {
        return Err(Error::Usage(format!("gamma must be nonnegative, got {gamma}")));
    }
    let live = collect_live(store, var)?;
    let d = live.len();
    let mut state = SCDeploymentState::new(parent_estimate, d, gamma);
    while let Some(idx) = state.next_unestimated() {
        if state.net_voi(d) <= 0.0 {
            break;
        }
        let n = estimate(store, trail, instance, var, live[idx]);
        state.record(idx, n);
    }
    Ok(ordering_by_estimates(&live, &state.estimates))
}

/// Estimates every live value of `var` unconditionally and orders by
/// non-increasing estimate: the always-deploy baseline.
pub fn exhaustive_sc_ordering<F>(
    store: &mut DomainStore,
    trail: &mut Trail,
    instance: &Instance,
    var: usize,
    mut estimate: F,
) -> Result<ValueOrdering>
where
    F: FnMut(&mut DomainStore, &mut Trail, &Instance, usize, usize) -> f64,
{
    let live = collect_live(store, var)?;
    let estimates: Vec<f64> = live
        .iter()
        .map(|&v| estimate(store, trail, instance, var, v))
        .collect();
    Ok(ordering_by_estimates(&live, &estimates))
}

/// Estimates a uniformly random `budget`-sized subset of `var`'s live
/// values. Estimated values are ordered by non-increasing estimate;
/// unestimated ones keep the default `N / |D|` and are ordered randomly
/// among themselves.
pub fn random_deployment_ordering<F>(
    store: &mut DomainStore,
    trail: &mut Trail,
    instance: &Instance,
    var: usize,
    parent_estimate: f64,
    budget: usize,
    rng: &mut ChaCha8Rng,
    mut estimate: F,
) -> Result<ValueOrdering>
where
    F: FnMut(&mut DomainStore, &mut Trail, &Instance, usize, usize) -> f64,
{
    let live = collect_live(store, var)?;
    let d = live.len();
    if budget > d {
        return Err(Error::Usage(format!(
            "deployment budget {budget} exceeds {d} live values"
        )));
    }
    let nu = parent_estimate / d as f64;
    let mut estimates = vec![nu; d];
    let mut estimated = vec![false; d];
    for idx in crate::rng::sample_distinct(rng, d, budget) {
        estimates[idx] = estimate(store, trail, instance, var, live[idx]);
        estimated[idx] = true;
    }
    // tie rank: estimated values by index, unestimated values shuffled
    use rand_chacha::rand_core::RngCore;
    let rank: Vec<u64> = (0..d)
        .map(|i| if estimated[i] { live[i] as u64 } else { rng.next_u64() })
        .collect();
    let mut pos: Vec<usize> = (0..d).collect();
    pos.sort_by(|&x, &y| {
        estimates[y]
            .total_cmp(&estimates[x])
            .then(rank[x].cmp(&rank[y]))
            .then(live[x].cmp(&live[y]))
    });
    Ok(ValueOrdering {
        values: pos.iter().map(|&p| live[p]).collect(),
        annotations: pos.iter().map(|&p| estimates[p]).collect(),
    })
}

/// Counters for one search run. Heuristic time is measured around
/// value-ordering computation only, so the reported total decomposes into
/// heuristic time plus residual search time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Value assignments attempted.
    pub nodes: u64,
    /// Retractions of a value assignment after its subtree or propagation failed.
    pub backtracks: u64,
    /// Support tests performed during propagation (including propagation
    /// run inside count estimation).
    pub constraint_checks: u64,
    /// Calls to the per-value solution-count estimator.
    pub sc_estimations: u64,
    /// Live values seen at ordering calls of estimating heuristics: the
    /// number of estimations exhaustive deployment would have performed.
    pub sc_opportunities: u64,
    pub heuristic_time: Duration,
    pub search_time: Duration,
}
