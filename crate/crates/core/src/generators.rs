//! Reproducible random instance generation.
//!
//! Both generators are pure functions of their parameters: the RNG is
//! ChaCha8 seeded from the 64-bit `seed` field and every draw goes through
//! the documented primitives in [`crate::rng`], so the same parameters
//! always produce the identical instance.

use crate::csp::{BinaryConstraint, Instance};
use crate::error::{Error, Result};

use crate::propagation::{
    ac3, mac_assign, undo_to_checkpoint, Consistency, DomainStore, PropStats, Trail,
};
use crate::rng::{sample_distinct, shuffle};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Parameters of a Model RB style random binary CSP: a fixed number of
/// distinct constrained variable pairs, each forbidding a fixed number of
/// distinct value pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RBParams {
    pub n_vars: usize,
    pub domain_size: usize,
    pub n_constraints: usize,
    /// Forbidden value pairs per constraint.
    pub n_nogoods: usize,
    pub seed: u64,
}

/// Parameters of a Generalized Sudoku instance with `tile_rows x tile_cols`
/// boxes (grid side = their product) and `holes` emptied cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SudokuParams {
    pub tile_rows: usize,
    pub tile_cols: usize,
    pub holes: usize,
    pub seed: u64,
}

/// Generates a Model RB instance: `n_constraints` distinct unordered
/// variable pairs drawn uniformly, each forbidding `n_nogoods` distinct
/// value pairs drawn uniformly; all other pairs allowed.
pub fn generate_model_rb(params: &RBParams) -> Result<Instance> {
    let RBParams {
        n_vars,
        domain_size,
        n_constraints,
        n_nogoods,
        seed,
    } = *params;
    if domain_size == 0 {
        return Err(Error::Usage("domain size must be positive".into()));
    }
    let max_pairs = n_vars.saturating_mul(n_vars.saturating_sub(1)) / 2;
    if n_constraints > max_pairs {
        return Err(Error::Usage(format!(
            "{n_constraints} constraints requested but only {max_pairs} variable pairs exist"
        )));
    }
    if n_nogoods > domain_size * domain_size {
        return Err(Error::Usage(format!(
            "{n_nogoods} nogoods requested but the matrix has {} cells",
            domain_size * domain_size
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(max_pairs);
    for i in 0..n_vars {
        for j in (i + 1)..n_vars {
            pairs.push((i, j));
        }
    }
    let chosen = sample_distinct(&mut rng, max_pairs, n_constraints);
    let mut constraints = Vec::with_capacity(n_constraints);
    for p in chosen {
        let (i, j) = pairs[p];
        let cells = sample_distinct(&mut rng, domain_size * domain_size, n_nogoods);
        let forbidden: Vec<(usize, usize)> = cells
            .into_iter()
            .map(|c| (c / domain_size, c % domain_size))
            .collect();
        constraints.push(BinaryConstraint::from_forbidden_pairs(
            i,
            j,
            domain_size,
            domain_size,
            &forbidden,
        ));
    }
    Instance::new(vec![domain_size; n_vars], constraints)
}

/// Cell pairs (ascending) that share a row, column, or box.
fn sudoku_unit_pairs(tile_rows: usize, tile_cols: usize) -> Vec<(usize, usize)> {
    let side = tile_rows * tile_cols;
    let cell = |r: usize, c: usize| r * side + c;
    let mut seen = std::collections::BTreeSet::new();
    for r in 0..side {
        for c1 in 0..side {
            for c2 in (c1 + 1)..side {
                seen.insert((cell(r, c1), cell(r, c2)));
            }
        }
    }
    for c in 0..side {
        for r1 in 0..side {
            for r2 in (r1 + 1)..side {
                seen.insert((cell(r1, c), cell(r2, c)));
            }
        }
    }
    for br in 0..tile_cols {
        for bc in 0..tile_rows {
            let mut members = Vec::new();
            for r in 0..tile_rows {
                for c in 0..tile_cols {
                    members.push(cell(br * tile_rows + r, bc * tile_cols + c));
                }
            }
            for x in 0..members.len() {
                for y in (x + 1)..members.len() {
                    let (a, b) = (members[x].min(members[y]), members[x].max(members[y]));
                    seen.insert((a, b));
                }
            }
        }
    }
    seen.into_iter().collect()
}

/// Backtracking completion of the all-open grid with MAC propagation,
/// minimum-remaining-values variable selection, and a seeded random value
/// order. Returns the digit per cell, or None if the node budget runs out.
fn complete_grid(base: &Instance, rng: &mut ChaCha8Rng, node_budget: u64) -> Option<Vec<usize>> {
    let n = base.num_variables();
    let mut store = DomainStore::new(base);
    let mut trail = Trail::new();
    let mut prop = PropStats::default();
    if ac3(&mut store, &mut trail, base, &mut prop) == Consistency::Wipeout {
        return None;
    }
    let mut assigned = vec![false; n];
    let mut budget = node_budget;

    fn dfs(
        base: &Instance,
        store: &mut DomainStore,
        trail: &mut Trail,
        prop: &mut PropStats,
        assigned: &mut Vec<bool>,
        rng: &mut ChaCha8Rng,
        budget: &mut u64,
    ) -> bool {
        let var = (0..base.num_variables())
            .filter(|&v| !assigned[v])
            .min_by_key(|&v| store.live_count(v));
        let var = match var {
            None => return true,
            Some(v) => v,
        };
        let mut values: Vec<usize> = store.live_values(var).collect();
        shuffle(rng, &mut values);
        for val in values {
            if *budget == 0 {
                return false;
            }
            *budget -= 1;
            let (mark, verdict) = mac_assign(store, trail, base, var, val, prop)
                .expect("value taken from the live set");
            if verdict == Consistency::Consistent {
                assigned[var] = true;
                if dfs(base, store, trail, prop, assigned, rng, budget) {
                    return true;
                }
                assigned[var] = false;
            }
            undo_to_checkpoint(store, trail, mark).expect("fresh checkpoint");
        }
        false
    }

    if dfs(base, &mut store, &mut trail, &mut prop, &mut assigned, rng, &mut budget) {
        Some((0..n).map(|v| store.first_live(v).expect("all assigned")).collect())
    } else {
        None
    }
}

/// Generates a Generalized Sudoku instance: completes a random valid grid
/// with this crate's own MAC search under a seeded random value order,
/// punches `holes` cells uniformly at random, and encodes the result as a
/// binary CSP with pairwise not-equal constraints. Punched cells get the
/// full domain `0..side`, filled cells a singleton domain.
pub fn generate_generalized_sudoku(params: &SudokuParams) -> Result<Instance> {
    let SudokuParams {
        tile_rows,
        tile_cols,
        holes,
        seed,
    } = *params;
    if tile_rows == 0 || tile_cols == 0 {
        return Err(Error::Usage("tile dimensions must be positive".into()));
    }
    let side = tile_rows * tile_cols;
    let cells = side * side;
    if holes > cells {
        return Err(Error::Usage(format!(
            "{holes} holes requested but the grid has {cells} cells"
        )));
    }
    let unit_pairs = sudoku_unit_pairs(tile_rows, tile_cols);
    let base_constraints: Vec<BinaryConstraint> = unit_pairs
        .iter()
        .map(|&(a, b)| BinaryConstraint::from_fn(a, b, side, side, |x, y| x != y))
        .collect();
    let base = Instance::new(vec![side; cells], base_constraints)?;

    // bounded retries with derived seeds in case a completion stalls
    let mut grid = None;
    for attempt in 0..16u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ attempt.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        if let Some(g) = complete_grid(&base, &mut rng, 500_000) {
            grid = Some((g, rng));
            break;
        }
    }
    let (grid, mut rng) = grid.ok_or_else(|| {
        Error::Internal(format!(
            "failed to complete a {side}x{side} grid within the retry budget"
        ))
    })?;

    let mut holed = vec![false; cells];
    for c in sample_distinct(&mut rng, cells, holes) {
        holed[c] = true;
    }
    // domain per cell: full range if holed, the grid digit otherwise
    let cell_values: Vec<Vec<usize>> = (0..cells)
        .map(|c| if holed[c] { (0..side).collect() } else { vec![grid[c]] })
        .collect();
    let domain_sizes: Vec<usize> = cell_values.iter().map(|v| v.len()).collect();
    let constraints: Vec<BinaryConstraint> = unit_pairs
        .iter()
        .map(|&(a, b)| {
            BinaryConstraint::from_fn(
                a,
                b,
                domain_sizes[a],
                domain_sizes[b],
                |x, y| cell_values[a][x] != cell_values[b][y],
            )
        })
        .collect();
    Instance::new(domain_sizes, constraints)
}
