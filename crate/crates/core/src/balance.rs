//! Balance checks and the balancing transformation.
//!
//! A form is balanced for variable `i` when the coefficients of all sets
//! containing `i` sum to zero. Balancing subtracts
//! `r_i * H(X_i | X_rest)` for each variable, where `r_i` is that sum.

use std::sync::Arc;

use num_traits::{Signed, Zero};

use crate::linform::{LinForm, LinFormError, Rat, VarContext, VarSet};

pub fn is_balanced_for(f: &LinForm, var: usize) -> bool {
    f.coefficient_sum_over(var).is_zero()
}

pub fn is_balanced_for_name(f: &LinForm, name: &str) -> Result<bool, LinFormError> {
    Ok(is_balanced_for(f, f.ctx().require(name)?))
}

pub fn is_balanced(f: &LinForm) -> bool {
    residuals(f).iter().all(Zero::is_zero)
}

/// `r_i` for every variable, in context order. One pass over the support.
pub fn residuals(f: &LinForm) -> Vec<Rat> {
    residuals_counted(f, &mut 0)
}

fn residuals_counted(f: &LinForm, steps: &mut usize) -> Vec<Rat> {
    let mut r = vec![Rat::zero(); f.ctx().len()];
    for (set, c) in f.terms() {
        for i in set.iter() {
            r[i] += c;
            *steps += 1;
        }
    }
    r
}

/// Outcome of [`balance_with_report`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalanceReport {
    pub form: LinForm,
    /// `r_i` per variable, in context order.
    pub residuals: Vec<Rat>,
    /// Coefficient reads and writes performed.
    pub steps: usize,
}

impl BalanceReport {
    /// Variables with `r_i < 0`. Any such variable shows the input is not a
    /// valid inequality.
    pub fn negative_residuals(&self) -> Vec<(String, Rat)> {
        self.residuals
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_negative())
            .map(|(i, r)| (self.form.ctx().name(i).to_string(), r.clone()))
            .collect()
    }
}

pub fn balance_with_report(f: &LinForm) -> BalanceReport {
    let mut steps = 0;
    let residuals = residuals_counted(f, &mut steps);
    let ctx = f.ctx().clone();
    let full = ctx.full();
    let mut out = f.clone();
    for (i, r) in residuals.iter().enumerate() {
        if r.is_zero() {
            continue;
        }
        // - r * (H(N) - H(N - i))
        out.add_term(full, &-r);
        out.add_term(full.without(i), r);
        steps += 2;
    }
    BalanceReport {
        form: out,
        residuals,
        steps,
    }
}

/// The balanced counterpart of `f`; total on arbitrary forms.
pub fn balance(f: &LinForm) -> LinForm {
    balance_with_report(f).form
}

/// Number of coefficient reads and writes `balance` performs on `f`.
/// Bounded by `|support(f)| * n + 2n`.
pub fn balance_complexity_witness(f: &LinForm) -> usize {
    balance_with_report(f).steps
}

/// `H(X_i | X_{N - i})` as a form.
pub fn node_entropy(ctx: &Arc<VarContext>, i: usize) -> LinForm {
    let full = ctx.full();
    LinForm::cond_entropy(ctx.clone(), VarSet::singleton(i), full.without(i))
}
