//! AC-3 arc consistency and MAC-style propagation over trailed domains.
//!
//! All domain prunings go through a [`Trail`], so any checkpointed state can
//! be restored exactly on backtrack. The arc queue is FIFO with duplicate
//! suppression; a LIFO discipline is exposed as well so that fixpoint
//! uniqueness can be checked directly.

use crate::bitset::BitSet;
use crate::csp::{BinaryConstraint, Instance};
use crate::error::{Error, Result};
use std::collections::VecDeque;

/// Live domains of all variables: subsets of the original dense ranges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainStore {
    live: Vec<BitSet>,
    counts: Vec<u32>,
}

impl DomainStore {
    /// Full domains for every variable of `instance`.
    pub fn new(instance: &Instance) -> Self {
        let live: Vec<BitSet> = (0..instance.num_variables())
            .map(|v| BitSet::full(instance.domain_size(v)))
            .collect();
        let counts = live.iter().map(|s| s.count() as u32).collect();
        DomainStore { live, counts }
    }

    pub fn num_variables(&self) -> usize {
        self.live.len()
    }

    pub fn live_count(&self, var: usize) -> usize {
        self.counts[var] as usize
    }

    pub fn is_live(&self, var: usize, val: usize) -> bool {
        self.live[var].contains(val)
    }

    pub fn live_set(&self, var: usize) -> &BitSet {
        &self.live[var]
    }

    /// Live values of `var` in ascending order.
    pub fn live_values(&self, var: usize) -> impl Iterator<Item = usize> + '_ {
        self.live[var].iter()
    }

    pub fn first_live(&self, var: usize) -> Option<usize> {
        self.live[var].first()
    }

    /// Removes a live value, logging it so it can be restored.
    fn prune(&mut self, trail: &mut Trail, var: usize, val: usize) {
        let removed = self.live[var].remove(val);
        debug_assert!(removed, "pruning a value that is not live");
        self.counts[var] -= 1;
        trail.entries.push((var as u32, val as u32));
    }

    fn restore(&mut self, var: usize, val: usize) {
        let fresh = self.live[var].insert(val);
        debug_assert!(fresh, "restoring a value that is already live");
        self.counts[var] += 1;
    }
}

/// Chronological log of prunings. A [`Checkpoint`] marks a position to
/// restore back to.
#[derive(Clone, Debug, Default)]
pub struct Trail {
    entries: Vec<(u32, u32)>,
}

/// A position in a [`Trail`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Checkpoint(usize);

impl Trail {
    pub fn new() -> Self {
        Trail::default()
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint(self.entries.len())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Restores `store` to its exact state when `mark` was taken.
///
/// Fails if `mark` lies beyond the current trail (already undone past).
pub fn undo_to_checkpoint(store: &mut DomainStore, trail: &mut Trail, mark: Checkpoint) -> Result<()> {
    if mark.0 > trail.entries.len() {
        return Err(Error::Usage(format!(
            "stale checkpoint: mark {} beyond trail length {}",
            mark.0,
            trail.entries.len()
        )));
    }
    while trail.entries.len() > mark.0 {
        let (var, val) = trail.entries.pop().unwrap();
        store.restore(var as usize, val as usize);
    }
    Ok(())
}

/// Verdict of a propagation pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Consistency {
    Consistent,
    /// Some live set became empty.
    Wipeout,
}

/// Counters shared by all propagation entry points.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PropStats {
    /// One per (value, arc) support test performed by `revise`.
    pub support_checks: u64,
    pub revise_calls: u64,
}

/// Order in which queued arcs are processed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QueueDiscipline {
    Fifo,
    Lifo,
}

/// Removes every live value of `from` with no live support in `to` under
/// `constraint`. Returns true iff anything was removed.
pub fn revise(
    store: &mut DomainStore,
    trail: &mut Trail,
    constraint: &BinaryConstraint,
    from: usize,
    to: usize,
    stats: &mut PropStats,
) -> bool {
    debug_assert!(
        (constraint.scope() == (from, to)) || (constraint.scope() == (to, from)),
        "revise called with a constraint whose scope is not {{from, to}}"
    );
    stats.revise_calls += 1;
    let candidates: Vec<usize> = store.live_values(from).collect();
    let mut removed = false;
    for a in candidates {
        stats.support_checks += 1;
        if !constraint.support_row(from, a).intersects(store.live_set(to)) {
            store.prune(trail, from, a);
            removed = true;
        }
    }
    removed
}

/// Arc = (constraint index, side being revised). Side 0 revises `scope.0`
/// against `scope.1`.
fn arc_id(ci: usize, side: usize) -> usize {
    ci * 2 + side
}

fn run_queue(
    store: &mut DomainStore,
    trail: &mut Trail,
    instance: &Instance,
    mut queue: VecDeque<usize>,
    mut in_queue: Vec<bool>,
    discipline: QueueDiscipline,
    stats: &mut PropStats,
) -> Consistency {
    while let Some(arc) = match discipline {
        QueueDiscipline::Fifo => queue.pop_front(),
        QueueDiscipline::Lifo => queue.pop_back(),
    } {
        in_queue[arc] = false;
        let ci = arc / 2;
        let side = arc % 2;
        let c = instance.constraint(ci);
        let (s0, s1) = c.scope();
        let (from, to) = if side == 0 { (s0, s1) } else { (s1, s0) };
        if revise(store, trail, c, from, to, stats) {
            if store.live_count(from) == 0 {
                return Consistency::Wipeout;
            }
            for &ci2 in instance.incident(from) {
                let c2 = instance.constraint(ci2);
                let neighbor = c2.other(from);
                if neighbor == to {
                    continue;
                }
                // re-revise the neighbor against `from`
                let side2 = if c2.scope().0 == neighbor { 0 } else { 1 };
                let a2 = arc_id(ci2, side2);
                if !in_queue[a2] {
                    in_queue[a2] = true;
                    queue.push_back(a2);
                }
            }
        }
    }
    Consistency::Consistent
}

/// AC-3 to fixpoint over every arc of `instance`, FIFO queue.
pub fn ac3(
    store: &mut DomainStore,
    trail: &mut Trail,
    instance: &Instance,
    stats: &mut PropStats,
) -> Consistency {
    ac3_with_discipline(store, trail, instance, QueueDiscipline::Fifo, stats)
}

/// AC-3 with an explicit queue discipline. The fixpoint is the same for
/// either discipline; only the order of prunings differs.
pub fn ac3_with_discipline(
    store: &mut DomainStore,
    trail: &mut Trail,
    instance: &Instance,
    discipline: QueueDiscipline,
    stats: &mut PropStats,
) -> Consistency {
    for v in 0..store.num_variables() {
        if store.live_count(v) == 0 {
            return Consistency::Wipeout;
        }
    }
    let n_arcs = instance.constraints().len() * 2;
    let mut queue = VecDeque::with_capacity(n_arcs);
    let mut in_queue = vec![false; n_arcs];
    for arc in 0..n_arcs {
        queue.push_back(arc);
        in_queue[arc] = true;
    }
    run_queue(store, trail, instance, queue, in_queue, discipline, stats)
}

/// Assigns `var = value` by pruning the rest of its live set, then restores
/// arc consistency seeded from the constraints incident to `var`.
///
/// A checkpoint is taken before any mutation and returned so the caller can
/// undo the assignment and all of its consequences.
pub fn mac_assign(
    store: &mut DomainStore,
    trail: &mut Trail,
    instance: &Instance,
    var: usize,
    value: usize,
    stats: &mut PropStats,
) -> Result<(Checkpoint, Consistency)> {
    if !store.is_live(var, value) {
        return Err(Error::Usage(format!(
            "mac_assign: value {value} is not live for variable {var}"
        )));
    }
    let mark = trail.checkpoint();
    let others: Vec<usize> = store.live_values(var).filter(|&v| v != value).collect();
    for v in others {
        store.prune(trail, var, v);
    }
    let n_arcs = instance.constraints().len() * 2;
    let mut queue = VecDeque::new();
    let mut in_queue = vec![false; n_arcs];
    for &ci in instance.incident(var) {
        let c = instance.constraint(ci);
        let neighbor = c.other(var);
        let side = if c.scope().0 == neighbor { 0 } else { 1 };
        let arc = arc_id(ci, side);
        queue.push_back(arc);
        in_queue[arc] = true;
    }
    let verdict = run_queue(
        store,
        trail,
        instance,
        queue,
        in_queue,
        QueueDiscipline::Fifo,
        stats,
    );
    Ok((mark, verdict))
}
