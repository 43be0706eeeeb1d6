//! Problem representation and exhaustive oracles.
//!
//! Variables are `0..num_variables` and each domain is the dense index range
//! `0..domain_size(v)`; external value labels exist only in the file format.
//! Constraints are binary, stored once per unordered variable pair as an
//! allowed-pair matrix, and queried in either direction.
//!
//! [`solve_exhaustive`] and [`count_solutions_exact`] are deliberately plain
//! chronological backtracking without propagation: they are the ground truth
//! the rest of the crate is tested against.

use crate::bitset::BitSet;
use crate::error::{Error, Result};

/// A table constraint over an ordered pair of variables.
///
/// The allowed matrix is held once, with packed support rows for both query
/// directions derived from it at construction, so `allows(a, b)` and the
/// reversed lookup can never disagree.
#[derive(Clone, Debug)]
pub struct BinaryConstraint {
    scope: (usize, usize),
    dims: (usize, usize),
    /// Row per value of `scope.0`: the allowed values of `scope.1`.
    rows_fwd: Vec<BitSet>,
    /// Row per value of `scope.1`: the allowed values of `scope.0`.
    rows_rev: Vec<BitSet>,
}

impl PartialEq for BinaryConstraint {
    fn eq(&self, other: &Self) -> bool {
        self.scope == other.scope && self.dims == other.dims && self.rows_fwd == other.rows_fwd
    }
}

impl BinaryConstraint {
    /// Builds a constraint over `(i, j)` with the given domain sizes,
    /// allowing exactly the pairs for which `allowed(a, b)` is true.
    pub fn from_fn(
        i: usize,
        j: usize,
        di: usize,
        dj: usize,
        allowed: impl Fn(usize, usize) -> bool,
    ) -> Self {
        let mut rows_fwd = vec![BitSet::empty(dj); di];
        let mut rows_rev = vec![BitSet::empty(di); dj];
        for a in 0..di {
            for b in 0..dj {
                if allowed(a, b) {
                    rows_fwd[a].insert(b);
                    rows_rev[b].insert(a);
                }
            }
        }
        BinaryConstraint {
            scope: (i, j),
            dims: (di, dj),
            rows_fwd,
            rows_rev,
        }
    }

    /// All pairs allowed except the listed `(a, b)` nogoods.
    pub fn from_forbidden_pairs(
        i: usize,
        j: usize,
        di: usize,
        dj: usize,
        forbidden: &[(usize, usize)],
    ) -> Self {
        let mut c = Self::from_fn(i, j, di, dj, |_, _| true);
        for &(a, b) in forbidden {
            c.rows_fwd[a].remove(b);
            c.rows_rev[b].remove(a);
        }
        c
    }

    /// Only the listed `(a, b)` pairs allowed.
    pub fn from_allowed_pairs(
        i: usize,
        j: usize,
        di: usize,
        dj: usize,
        allowed: &[(usize, usize)],
    ) -> Self {
        let mut c = Self::from_fn(i, j, di, dj, |_, _| false);
        for &(a, b) in allowed {
            c.rows_fwd[a].insert(b);
            c.rows_rev[b].insert(a);
        }
        c
    }

    pub fn scope(&self) -> (usize, usize) {
        self.scope
    }

    /// Domain sizes of `(scope.0, scope.1)` as seen by this constraint.
    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    /// The variable on the other end of the scope.
    pub fn other(&self, var: usize) -> usize {
        if var == self.scope.0 {
            self.scope.1
        } else {
            debug_assert_eq!(var, self.scope.1);
            self.scope.0
        }
    }

    /// Is `(a, b)` permitted, with `a` a value of `scope.0` and `b` of `scope.1`?
    pub fn allows(&self, a: usize, b: usize) -> bool {
        self.rows_fwd[a].contains(b)
    }

    /// Direction-aware query: is `(value of var, value of other)` permitted?
    pub fn allows_for(&self, var: usize, value: usize, other_value: usize) -> bool {
        if var == self.scope.0 {
            self.allows(value, other_value)
        } else {
            self.allows(other_value, value)
        }
    }

    /// Supports of `value` of `var` among the other variable's values.
    pub fn support_row(&self, var: usize, value: usize) -> &BitSet {
        if var == self.scope.0 {
            &self.rows_fwd[value]
        } else {
            debug_assert_eq!(var, self.scope.1);
            &self.rows_rev[value]
        }
    }

    /// Number of allowed pairs with both endpoints in the given live sets.
    /// `live_i` is indexed by `scope.0`'s values, `live_j` by `scope.1`'s.
    pub fn supported_pair_count(&self, live_i: &BitSet, live_j: &BitSet) -> usize {
        live_i
            .iter()
            .map(|a| self.rows_fwd[a].intersection_count(live_j))
            .sum()
    }

    /// Total allowed pairs in the full matrix.
    pub fn allowed_pair_count(&self) -> usize {
        self.rows_fwd.iter().map(|r| r.count()).sum()
    }
}

/// An immutable binary CSP: domain sizes plus table constraints.
///
/// Shareable across concurrent solver runs; all mutable search state lives
/// in [`crate::propagation::DomainStore`].
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    domain_sizes: Vec<usize>,
    constraints: Vec<BinaryConstraint>,
    /// Per variable, indices of incident constraints.
    incident: Vec<Vec<usize>>,
}

impl Instance {
    pub fn new(domain_sizes: Vec<usize>, constraints: Vec<BinaryConstraint>) -> Result<Self> {
        let n = domain_sizes.len();
        for (v, &d) in domain_sizes.iter().enumerate() {
            if d == 0 {
                return Err(Error::InvalidInstance(format!("variable {v} has an empty domain")));
            }
        }
        let mut seen = std::collections::HashSet::new();
        let mut incident = vec![Vec::new(); n];
        for (idx, c) in constraints.iter().enumerate() {
            let (i, j) = c.scope;
            if i >= n || j >= n {
                return Err(Error::InvalidInstance(format!(
                    "constraint {idx} scope ({i}, {j}) out of range for {n} variables"
                )));
            }
            if i == j {
                return Err(Error::InvalidInstance(format!(
                    "constraint {idx} has identical scope indices ({i}, {j})"
                )));
            }
            if c.dims != (domain_sizes[i], domain_sizes[j]) {
                return Err(Error::InvalidInstance(format!(
                    "constraint {idx} matrix is {:?} but domains are ({}, {})",
                    c.dims, domain_sizes[i], domain_sizes[j]
                )));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidInstance(format!(
                    "duplicate constraint over pair ({}, {})",
                    i.min(j),
                    i.max(j)
                )));
            }
            incident[i].push(idx);
            incident[j].push(idx);
        }
        Ok(Instance {
            domain_sizes,
            constraints,
            incident,
        })
    }

    pub fn num_variables(&self) -> usize {
        self.domain_sizes.len()
    }

    pub fn domain_size(&self, var: usize) -> usize {
        self.domain_sizes[var]
    }

    pub fn domain_sizes(&self) -> &[usize] {
        &self.domain_sizes
    }

    pub fn constraints(&self) -> &[BinaryConstraint] {
        &self.constraints
    }

    pub fn constraint(&self, idx: usize) -> &BinaryConstraint {
        &self.constraints[idx]
    }

    /// Indices of constraints whose scope contains `var`.
    pub fn incident(&self, var: usize) -> &[usize] {
        &self.incident[var]
    }

    /// Constraint-graph degree of `var`.
    pub fn degree(&self, var: usize) -> usize {
        self.incident[var].len()
    }

    /// Product of domain sizes, as a float (for sizing decisions).
    pub fn total_assignments(&self) -> f64 {
        self.domain_sizes.iter().map(|&d| d as f64).product()
    }
}

/// A partial assignment of values to variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    values: Vec<Option<usize>>,
}

impl Assignment {
    pub fn empty(num_variables: usize) -> Self {
        Assignment {
            values: vec![None; num_variables],
        }
    }

    pub fn from_pairs(num_variables: usize, pairs: &[(usize, usize)]) -> Self {
        let mut a = Assignment::empty(num_variables);
        for &(var, val) in pairs {
            a.set(var, val);
        }
        a
    }

    pub fn num_variables(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, var: usize) -> Option<usize> {
        self.values[var]
    }

    pub fn set(&mut self, var: usize, val: usize) {
        self.values[var] = Some(val);
    }

    pub fn unset(&mut self, var: usize) {
        self.values[var] = None;
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(|v| v.is_some())
    }

    pub fn assigned_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    /// `(var, value)` pairs in ascending variable order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(v, val)| val.map(|x| (v, x)))
    }
}

/// True iff every constraint whose scope is fully assigned is satisfied.
///
/// Returns a structural error when the assignment mentions an out-of-range
/// variable or value.
pub fn is_consistent(instance: &Instance, assignment: &Assignment) -> Result<bool> {
    if assignment.num_variables() != instance.num_variables() {
        return Err(Error::InvalidInstance(format!(
            "assignment covers {} variables, instance has {}",
            assignment.num_variables(),
            instance.num_variables()
        )));
    }
    for (var, val) in assignment.iter() {
        if val >= instance.domain_size(var) {
            return Err(Error::InvalidInstance(format!(
                "value {val} out of range for variable {var} (domain size {})",
                instance.domain_size(var)
            )));
        }
    }
    for c in instance.constraints() {
        let (i, j) = c.scope();
        if let (Some(a), Some(b)) = (assignment.get(i), assignment.get(j)) {
            if !c.allows(a, b) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn extension_consistent(instance: &Instance, values: &[usize], var: usize, val: usize) -> bool {
    for &ci in instance.incident(var) {
        let c = instance.constraint(ci);
        let other = c.other(var);
        if other < values.len() && !c.allows_for(var, val, values[other]) {
            return false;
        }
    }
    true
}

/// Chronological backtracking in lexicographic variable and value order,
/// without propagation. Returns the first solution in that order.
pub fn solve_exhaustive(instance: &Instance) -> Option<Assignment> {
    let n = instance.num_variables();
    let mut values: Vec<usize> = Vec::with_capacity(n);
    fn go(instance: &Instance, values: &mut Vec<usize>) -> bool {
        let var = values.len();
        if var == instance.num_variables() {
            return true;
        }
        for val in 0..instance.domain_size(var) {
            if extension_consistent(instance, values, var, val) {
                values.push(val);
                if go(instance, values) {
                    return true;
                }
                values.pop();
            }
        }
        false
    }
    if go(instance, &mut values) {
        let pairs: Vec<(usize, usize)> = values.iter().copied().enumerate().collect();
        Some(Assignment::from_pairs(n, &pairs))
    } else {
        None
    }
}

/// Exact number of complete consistent assignments, by exhaustive
/// backtracking. Intended for instances with a small assignment space;
/// the caller is responsible for sizing.
pub fn count_solutions_exact(instance: &Instance) -> u64 {
    fn go(instance: &Instance, values: &mut Vec<usize>) -> u64 {
        let var = values.len();
        if var == instance.num_variables() {
            return 1;
        }
        let mut total = 0;
        for val in 0..instance.domain_size(var) {
            if extension_consistent(instance, values, var, val) {
                values.push(val);
                total += go(instance, values);
                values.pop();
            }
        }
        total
    }
    go(instance, &mut Vec::new())
}
