//! Exact cone membership by phase-one simplex over rationals.
//!
//! Given generator columns `g_1..g_k` and a target `t` in `Q^m`, decides
//! whether `t = sum_j lambda_j g_j` for some `lambda >= 0`. When it is not,
//! returns `y` with `y . g_j >= 0` for all `j` and `y . t < 0` (Farkas).
//!
//! Pivoting follows Bland's rule, so the method terminates on degenerate
//! problems.

use num_traits::{One, Signed, Zero};

use crate::linform::Rat;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConeMembership {
    /// Nonnegative multipliers, one per generator.
    Member(Vec<Rat>),
    /// Separating vector in target coordinates.
    Separated(Vec<Rat>),
}

/// Decides `target in cone(generators)`. Every generator must have the same
/// length as `target`.
pub fn cone_membership(generators: &[Vec<Rat>], target: &[Rat]) -> ConeMembership {
    let m = target.len();
    let k = generators.len();
    assert!(
        generators.iter().all(|g| g.len() == m),
        "generator dimension mismatch"
    );

    // Rows are scaled by +-1 so the right-hand side is nonnegative; one
    // artificial column per row starts as the basis.
    let signs: Vec<bool> = target.iter().map(|t| t.is_negative()).collect();
    let width = k + m;
    let mut rows: Vec<Vec<Rat>> = Vec::with_capacity(m);
    let mut rhs: Vec<Rat> = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = vec![Rat::zero(); width];
        for (j, g) in generators.iter().enumerate() {
            row[j] = if signs[i] { -&g[i] } else { g[i].clone() };
        }
        row[k + i] = Rat::one();
        rows.push(row);
        rhs.push(target[i].abs());
    }
    let mut basis: Vec<usize> = (k..width).collect();

    // Reduced costs of the phase-one objective (sum of artificials).
    let mut cost = vec![Rat::zero(); width];
    for row in &rows {
        for j in 0..k {
            if !row[j].is_zero() {
                cost[j] -= &row[j];
            }
        }
    }

    loop {
        let Some(enter) = cost.iter().position(|c| c.is_negative()) else {
            break;
        };
        let mut leave: Option<(usize, Rat)> = None;
        for i in 0..m {
            if !rows[i][enter].is_positive() {
                continue;
            }
            let ratio = &rhs[i] / &rows[i][enter];
            let better = match &leave {
                None => true,
                Some((li, best)) => {
                    ratio < *best || (ratio == *best && basis[i] < basis[*li])
                }
            };
            if better {
                leave = Some((i, ratio));
            }
        }
        // The phase-one objective is bounded below by zero, so an improving
        // column always has a positive entry.
        let (pr, _) = leave.expect("phase-one objective is bounded");
        pivot(&mut rows, &mut rhs, &mut cost, pr, enter);
        basis[pr] = enter;
    }

    let infeasibility = basis
        .iter()
        .zip(&rhs)
        .filter(|(b, _)| **b >= k)
        .fold(Rat::zero(), |acc, (_, v)| acc + v);

    if infeasibility.is_zero() {
        let mut lambda = vec![Rat::zero(); k];
        for (i, &b) in basis.iter().enumerate() {
            if b < k {
                lambda[b] = rhs[i].clone();
            }
        }
        ConeMembership::Member(lambda)
    } else {
        // Duals of the scaled rows are 1 - (reduced cost of artificial i).
        let y = (0..m)
            .map(|i| {
                let pi = Rat::one() - &cost[k + i];
                if signs[i] {
                    pi
                } else {
                    -pi
                }
            })
            .collect();
        ConeMembership::Separated(y)
    }
}

fn pivot(rows: &mut [Vec<Rat>], rhs: &mut [Rat], cost: &mut [Rat], pr: usize, pc: usize) {
    let inv = Rat::one() / &rows[pr][pc];
    for v in rows[pr].iter_mut() {
        if !v.is_zero() {
            *v *= &inv;
        }
    }
    rhs[pr] *= &inv;

    let pivot_row = rows[pr].clone();
    let nonzero: Vec<usize> = pivot_row
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_zero())
        .map(|(j, _)| j)
        .collect();
    let pivot_rhs = rhs[pr].clone();

    for (i, row) in rows.iter_mut().enumerate() {
        if i == pr || row[pc].is_zero() {
            continue;
        }
        let factor = row[pc].clone();
        for &j in &nonzero {
            row[j] -= &factor * &pivot_row[j];
        }
        rhs[i] -= &factor * &pivot_rhs;
    }
    if !cost[pc].is_zero() {
        let factor = cost[pc].clone();
        for &j in &nonzero {
            cost[j] -= &factor * &pivot_row[j];
        }
    }
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter()
        .zip(b)
        .filter(|(x, y)| !x.is_zero() && !y.is_zero())
        .fold(Rat::zero(), |acc, (x, y)| acc + x * y)
}
