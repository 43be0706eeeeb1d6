//! Value-ordering heuristics.
//!
//! Three families: plain lexicographic order, minimum conflicts, and a
//! solution-count estimate computed on the propagated subproblem. The
//! estimate for `var = value` is the constraint-tightness product taken
//! after assigning and re-establishing arc consistency:
//!
//! ```text
//! n = prod_v |live(v)| * prod_{(u,w)} supported_pairs(u,w) / (|live(u)| * |live(w)|)
//! ```
//!
//! Variables that propagation has reduced to singletons contribute factors
//! of one, so the product over all variables equals the product over the
//! open subproblem. On a constraint-free store the estimate is exact.

use crate::csp::Instance;
use crate::propagation::{
    mac_assign, undo_to_checkpoint, Consistency, DomainStore, PropStats, Trail,
};

/// A try-order over the live values of one variable, with one annotation
/// (score or count estimate) per position.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueOrdering {
    pub values: Vec<usize>,
    pub annotations: Vec<f64>,
}

impl ValueOrdering {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A solution-count estimate for one value assignment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolutionCountEstimate {
    pub value: usize,
    /// Nonnegative; zero exactly when propagation wiped out or some
    /// constraint had no surviving pair.
    pub estimate: f64,
}

/// Live values in ascending index order.
pub fn order_lexicographic(store: &DomainStore, var: usize) -> ValueOrdering {
    let values: Vec<usize> = store.live_values(var).collect();
    let annotations = vec![0.0; values.len()];
    ValueOrdering { values, annotations }
}

/// Live values sorted by how few conflicts they cause: for each live value
/// `a` of `var`, the score is the number of live neighbor values it rules
/// out, summed over incident constraints. Ascending score, ties by value.
pub fn order_min_conflicts(store: &DomainStore, instance: &Instance, var: usize) -> ValueOrdering {
    let mut scored: Vec<(u64, usize)> = store
        .live_values(var)
        .map(|a| {
            let mut conflicts = 0u64;
            for &ci in instance.incident(var) {
                let c = instance.constraint(ci);
                let other = c.other(var);
                let live_other = store.live_set(other);
                let supported = c.support_row(var, a).intersection_count(live_other);
                conflicts += (live_other.count() - supported) as u64;
            }
            (conflicts, a)
        })
        .collect();
    scored.sort_by_key(|&(score, a)| (score, a));
    ValueOrdering {
        values: scored.iter().map(|&(_, a)| a).collect(),
        annotations: scored.iter().map(|&(s, _)| s as f64).collect(),
    }
}

/// Tightness product over the current store. Zero exactly when some live
/// set is empty or some constraint has no surviving pair; a product that
/// merely underflows keeps the smallest positive value so zero stays
/// reserved for genuine dead ends.
fn product_estimate(store: &DomainStore, instance: &Instance) -> f64 {
    let mut product = 1.0f64;
    for v in 0..instance.num_variables() {
        let cnt = store.live_count(v);
        if cnt == 0 {
            return 0.0;
        }
        product *= cnt as f64;
    }
    for c in instance.constraints() {
        let (i, j) = c.scope();
        let pairs = c.supported_pair_count(store.live_set(i), store.live_set(j));
        if pairs == 0 {
            return 0.0;
        }
        product *= pairs as f64 / (store.live_count(i) as f64 * store.live_count(j) as f64);
    }
    product.max(f64::MIN_POSITIVE)
}

/// Estimated number of solutions extending the current state with
/// `var = value`: assign, propagate, take the tightness product, restore.
/// The store and trail are left exactly as found.
pub fn estimate_solution_count(
    store: &mut DomainStore,
    trail: &mut Trail,
    instance: &Instance,
    var: usize,
    value: usize,
    stats: &mut PropStats,
) -> SolutionCountEstimate {
    let (mark, verdict) = mac_assign(store, trail, instance, var, value, stats)
        .expect("estimate_solution_count requires a live value");
    let estimate = match verdict {
        Consistency::Wipeout => 0.0,
        Consistency::Consistent => product_estimate(store, instance),
    };
    undo_to_checkpoint(store, trail, mark).expect("fresh checkpoint cannot be stale");
    SolutionCountEstimate { value, estimate }
}

/// The tightness product over the whole store, unrestricted: the root
/// estimate of the instance's total solution count. Expects arc consistency
/// already established; a wiped-out store yields zero.
pub fn estimate_total_solution_count(instance: &Instance, store: &DomainStore) -> f64 {
    product_estimate(store, instance)
}
