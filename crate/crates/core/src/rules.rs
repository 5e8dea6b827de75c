//! The copy rule (ZY), the Ahlswede-Korner rule (MMRV), variable
//! substitution, and the premise transformations relating the two rules.
//!
//! Both rules read their premise as `f(X, Y) + g(Y, Z) [+ alpha I(Z; X | Y)]`
//! for an explicit [`Partition`] of the ground set into `{z}`, `X` and `Y`.

use std::sync::Arc;

use num_traits::Signed;
use thiserror::Error;

use crate::linform::{LinForm, LinFormError, Rat, VarContext, VarSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("term H({0}) mixes the rule variable with the X group")]
    MixedTerm(String),
    #[error("copy-rule coefficient alpha = {0} is negative")]
    NegativeAlpha(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("cannot substitute `{0}` for itself")]
    SelfSubstitution(String),
    #[error(transparent)]
    Context(#[from] LinFormError),
}

/// Split of the ground set into the rule variable `z`, the group `X` and
/// the group `Y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub z: usize,
    pub x: VarSet,
    pub y: VarSet,
}

impl Partition {
    /// Validates against `ctx`: `X` nonempty, the three parts disjoint and
    /// covering every variable.
    pub fn new(ctx: &VarContext, z: usize, x: VarSet, y: VarSet) -> Result<Self, RuleError> {
        let zs = VarSet::singleton(z);
        if z >= ctx.len() {
            return Err(RuleError::InvalidPartition(format!("no variable at position {z}")));
        }
        if x.is_empty() {
            return Err(RuleError::InvalidPartition("X group is empty".into()));
        }
        if x.intersects(y) || x.intersects(zs) || y.intersects(zs) {
            return Err(RuleError::InvalidPartition("groups overlap".into()));
        }
        let covered = x.union(y).union(zs);
        if covered != ctx.full() {
            let missing = ctx.format_set(ctx.full().difference(covered));
            return Err(RuleError::InvalidPartition(format!(
                "variables {{{missing}}} are in no group"
            )));
        }
        Ok(Self { z, x, y })
    }

    pub fn from_names<S: AsRef<str>>(
        ctx: &VarContext,
        z: &str,
        x: &[S],
        y: &[S],
    ) -> Result<Self, RuleError> {
        let zi = ctx.require(z)?;
        Self::new(ctx, zi, ctx.set_of(x)?, ctx.set_of(y)?)
    }

    /// `{z} u Y`
    pub fn zy(&self) -> VarSet {
        self.y.with(self.z)
    }

    pub fn describe(&self, ctx: &VarContext) -> String {
        format!(
            "z={} x={{{}}} y={{{}}}",
            ctx.name(self.z),
            ctx.format_set(self.x),
            ctx.format_set(self.y)
        )
    }
}

/// `f + g + alpha * I(z; X | Y)` with `f` free of `z` and `g` supported on
/// subsets of `Y u {z}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZyDecomposition {
    pub partition: Partition,
    pub f: LinForm,
    pub g: LinForm,
    pub alpha: Rat,
}

impl ZyDecomposition {
    /// `f + g + alpha * I(z; X | Y)`
    pub fn recompose(&self) -> LinForm {
        self.f
            .add(&self.g)
            .and_then(|fg| fg.add_scaled(&copy_term(self.f.ctx(), &self.partition), &self.alpha))
            .expect("same context")
    }
}

/// `I(z; X | Y)`
pub fn copy_term(ctx: &Arc<VarContext>, p: &Partition) -> LinForm {
    LinForm::mutual_info(ctx.clone(), VarSet::singleton(p.z), p.x, p.y)
}

/// `H(z | Y)`
pub fn residual_term(ctx: &Arc<VarContext>, p: &Partition) -> LinForm {
    LinForm::cond_entropy(ctx.clone(), VarSet::singleton(p.z), p.y)
}

fn check_partition(f: &LinForm, p: &Partition) -> Result<(), RuleError> {
    Partition::new(f.ctx(), p.z, p.x, p.y).map(|_| ())
}

/// Splits `f` into the copy-rule shape. `alpha` is minus the coefficient of
/// the full set, the only coordinate where `z` meets all of `X`.
pub fn decompose_zy(f: &LinForm, p: &Partition) -> Result<ZyDecomposition, RuleError> {
    check_partition(f, p)?;
    let ctx = f.ctx();
    let alpha = -f.coeff(p.x.union(p.zy()));
    if alpha.is_negative() {
        return Err(RuleError::NegativeAlpha(crate::expr::format_rat(&alpha)));
    }
    let residual = f.add_scaled(&copy_term(ctx, p), &-&alpha)?;
    let (fg, gg) = split_fg(&residual, p)?;
    Ok(ZyDecomposition {
        partition: p.clone(),
        f: fg,
        g: gg,
        alpha,
    })
}

fn split_fg(form: &LinForm, p: &Partition) -> Result<(LinForm, LinForm), RuleError> {
    let ctx = form.ctx();
    let mut f = LinForm::zero(ctx.clone());
    let mut g = LinForm::zero(ctx.clone());
    for (set, c) in form.terms() {
        if !set.contains(p.z) {
            f.add_term(set, c);
        } else if set.is_disjoint(p.x) {
            g.add_term(set, c);
        } else {
            return Err(RuleError::MixedTerm(ctx.format_set(set)));
        }
    }
    Ok((f, g))
}

/// Copy rule: drops the `alpha * I(z; X | Y)` term of the premise.
pub fn apply_zy(f: &LinForm, p: &Partition) -> Result<LinForm, RuleError> {
    let d = decompose_zy(f, p)?;
    Ok(d.f.add(&d.g)?)
}

/// `r_z`, the coefficient sum over sets containing `z`, after checking the
/// premise has no term mixing `z` with `X`.
pub fn mmrv_residual(f: &LinForm, p: &Partition) -> Result<Rat, RuleError> {
    check_partition(f, p)?;
    split_fg(f, p)?;
    Ok(f.coefficient_sum_over(p.z))
}

/// Ahlswede-Korner rule: `f + g - r_z * H(z | Y)`.
pub fn apply_mmrv(f: &LinForm, p: &Partition) -> Result<LinForm, RuleError> {
    let r = mmrv_residual(f, p)?;
    Ok(f.add_scaled(&residual_term(f.ctx(), p), &-r)?)
}

/// `f + g + alpha * H(z | Y)`: a weaker premise from which the
/// Ahlswede-Korner rule reaches the copy-rule conclusion when the original
/// premise is balanced for `z`.
pub fn zy_premise_to_mmrv_premise(d: &ZyDecomposition) -> LinForm {
    d.f.add(&d.g)
        .and_then(|fg| fg.add_scaled(&residual_term(d.f.ctx(), &d.partition), &d.alpha))
        .expect("same context")
}

/// `f - r_z H(z | Y) + r_z I(z; X | Y)`: a premise balanced for `z` from
/// which the copy rule reaches the Ahlswede-Korner conclusion.
pub fn mmrv_premise_to_zy_premise(f: &LinForm, p: &Partition) -> Result<LinForm, RuleError> {
    let r = mmrv_residual(f, p)?;
    let ctx = f.ctx();
    Ok(f
        .add_scaled(&residual_term(ctx, p), &-&r)?
        .add_scaled(&copy_term(ctx, p), &r)?)
}

/// Identifies `from` with `to`: every set `J` maps to
/// `(J - {from}) u {to}` and `from` leaves the context.
pub fn substitute(f: &LinForm, from: &str, to: &str) -> Result<LinForm, RuleError> {
    let ctx = f.ctx();
    let fi = ctx.require(from)?;
    let ti = ctx.require(to)?;
    if fi == ti {
        return Err(RuleError::SelfSubstitution(from.to_string()));
    }
    let names: Vec<&String> = ctx.names().iter().filter(|n| *n != from).collect();
    let target = Arc::new(VarContext::new(names.iter().map(|s| s.as_str()))?);
    let remap = |i: usize| target.index_of(ctx.name(i)).expect("kept");
    let terms: Vec<(VarSet, Rat)> = f
        .terms()
        .map(|(set, c)| {
            let moved = if set.contains(fi) { set.without(fi).with(ti) } else { set };
            let set = moved.iter().fold(VarSet::EMPTY, |acc, i| acc.with(remap(i)));
            (set, c.clone())
        })
        .collect();
    Ok(LinForm::from_terms(target, terms))
}

/// Renames `from` to a fresh name `to`. The result's context is sorted
/// lexicographically.
pub fn rename(f: &LinForm, from: &str, to: &str) -> Result<LinForm, RuleError> {
    let ctx = f.ctx();
    ctx.require(from)?;
    if ctx.index_of(to).is_some() {
        return Err(LinFormError::DuplicateVariable(to.to_string()).into());
    }
    let renamed = Arc::new(VarContext::new(
        ctx.names().iter().map(|n| if n == from { to } else { n.as_str() }),
    )?);
    let moved = LinForm::from_terms(renamed.clone(), f.terms().map(|(s, c)| (s, c.clone())));
    let sorted = Arc::new(VarContext::sorted(renamed.names().iter().cloned())?);
    Ok(moved.realign(sorted)?)
}

/// [`substitute`] when `to` is already a variable, otherwise [`rename`].
pub fn substitute_or_rename(f: &LinForm, from: &str, to: &str) -> Result<LinForm, RuleError> {
    if f.ctx().index_of(to).is_some() {
        substitute(f, from, to)
    } else {
        rename(f, from, to)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::balance::is_balanced_for;
    use crate::expr::parse_form;
    use crate::linform::rat;

    fn in_ctx(names: &[&str], text: &str) -> LinForm {
        let ctx = Arc::new(VarContext::new(names.iter().copied()).unwrap());
        parse_form(text, Some(&ctx)).unwrap()
    }

    const ABCDZ: [&str; 5] = ["A", "B", "C", "D", "Z"];
    const THM3_PREMISE: &str = "I(C;D) <= I(C;D|A)+I(C;D|B)+I(A;B)+I(C;D|Z)+I(Z;C|D)+I(Z;D|C)+3I(Z;AB|CD)";
    const THM5_PREMISE: &str = "H(Z) <= I(C;D|A)+I(C;D|B)+I(A;B)+2H(Z|C)+2H(Z|D)";

    fn zab_cd(f: &LinForm) -> Partition {
        Partition::from_names(f.ctx(), "Z", &["A", "B"], &["C", "D"]).unwrap()
    }

    #[test]
    fn partition_validation() {
        let ctx = VarContext::new(ABCDZ).unwrap();
        assert!(Partition::from_names(&ctx, "Z", &["A", "B"], &["C", "D"]).is_ok());
        assert!(Partition::from_names(&ctx, "Z", &["A"], &["C", "D"]).is_err());
        assert!(Partition::from_names(&ctx, "Z", &[] as &[&str], &["A", "B", "C", "D"]).is_err());
        assert!(Partition::from_names(&ctx, "Z", &["A", "B", "Z"], &["C", "D"]).is_err());
        assert!(Partition::from_names(&ctx, "Q", &["A", "B"], &["C", "D"]).is_err());
    }

    #[test]
    fn thm3_premise_decomposes() {
        let f = in_ctx(&ABCDZ, THM3_PREMISE);
        let p = zab_cd(&f);
        let d = decompose_zy(&f, &p).unwrap();
        assert_eq!(d.alpha, rat(3));
        let three = in_ctx(&ABCDZ, "I(C;D|Z)+I(Z;C|D)+I(Z;D|C) >= 0");
        let z_part = LinForm::from_terms(
            f.ctx().clone(),
            three
                .terms()
                .filter(|(s, _)| s.contains(p.z))
                .map(|(s, c)| (s, c.clone())),
        );
        assert_eq!(d.g, z_part);
        assert_eq!(d.recompose(), f);
        assert!(d.f.terms().all(|(s, _)| !s.contains(p.z)));
        assert!(d.g.terms().all(|(s, _)| s.is_subset_of(p.zy())));
    }

    #[test]
    fn thm3_derivation() {
        let f = in_ctx(&ABCDZ, THM3_PREMISE);
        let b = apply_zy(&f, &zab_cd(&f)).unwrap();
        let t4 = substitute(&b, "Z", "A").unwrap();
        let expected = parse_form(
            "I(C;D) <= I(C;D|A)+I(C;D|B)+I(A;B)+I(C;D|A)+I(A;C|D)+I(A;D|C)",
            None,
        )
        .unwrap();
        assert_eq!(t4, expected);
    }

    #[test]
    fn pure_copy_term() {
        let f = in_ctx(&["A", "B", "Z"], "I(Z;A|B) >= 0");
        let p = Partition::from_names(f.ctx(), "Z", &["A"], &["B"]).unwrap();
        let d = decompose_zy(&f, &p).unwrap();
        assert!(d.f.is_zero() && d.g.is_zero());
        assert_eq!(d.alpha, rat(1));
        assert!(apply_zy(&f, &p).unwrap().is_zero());
        assert_eq!(
            zy_premise_to_mmrv_premise(&d),
            in_ctx(&["A", "B", "Z"], "H(Z|B) >= 0")
        );
    }

    #[test]
    fn shape_errors() {
        let f = in_ctx(&["A", "B", "Z"], "I(Z;A) >= 0");
        let p = Partition::from_names(f.ctx(), "Z", &["A", "B"], &[] as &[&str]).unwrap();
        assert!(matches!(decompose_zy(&f, &p), Err(RuleError::MixedTerm(_))));
        assert!(matches!(apply_mmrv(&f, &p), Err(RuleError::MixedTerm(_))));

        let g = in_ctx(&["A", "B", "Z"], "-I(Z;A|B) >= 0");
        let p = Partition::from_names(g.ctx(), "Z", &["A"], &["B"]).unwrap();
        assert!(matches!(decompose_zy(&g, &p), Err(RuleError::NegativeAlpha(_))));
    }

    #[test]
    fn zero_alpha_is_unchanged() {
        let f = in_ctx(&["A", "B", "Z"], "I(A;B) + H(Z|B) >= 0");
        let p = Partition::from_names(f.ctx(), "Z", &["A"], &["B"]).unwrap();
        assert_eq!(apply_zy(&f, &p).unwrap(), f);
        let d = decompose_zy(&f, &p).unwrap();
        assert_eq!(zy_premise_to_mmrv_premise(&d), f);
    }

    #[test]
    fn thm5_derivation() {
        let f = in_ctx(&ABCDZ, THM5_PREMISE);
        let p = zab_cd(&f);
        assert_eq!(mmrv_residual(&f, &p).unwrap(), rat(3));
        let b = apply_mmrv(&f, &p).unwrap();
        let b = substitute_or_rename(&b, "Z", "E").unwrap();
        let expected = parse_form(
            "I(C;D) <= I(C;D|A)+I(C;D|B)+I(A;B)+I(C;D|E)+I(E;C|D)+I(E;D|C)",
            None,
        )
        .unwrap();
        assert_eq!(b, expected);
        assert!(is_balanced_for(&apply_mmrv(&f, &p).unwrap(), p.z));
    }

    #[test]
    fn mmrv_identity_cases() {
        let names = ["A", "B", "Z"];
        let balanced = in_ctx(&names, "I(A;B) + I(Z;B) >= 0");
        let p = Partition::from_names(balanced.ctx(), "Z", &["A"], &["B"]).unwrap();
        // I(Z;B) has r_z = 0
        assert_eq!(apply_mmrv(&balanced, &p).unwrap(), balanced);
        assert_eq!(mmrv_premise_to_zy_premise(&balanced, &p).unwrap(), balanced);

        let h = in_ctx(&names, "H(Z|B) >= 0");
        assert!(apply_mmrv(&h, &p).unwrap().is_zero());
        assert_eq!(
            mmrv_premise_to_zy_premise(&h, &p).unwrap(),
            in_ctx(&names, "I(Z;A|B) >= 0")
        );
    }

    #[test]
    fn theorem4_on_paper_instances() {
        let f3 = in_ctx(&ABCDZ, THM3_PREMISE);
        let p = zab_cd(&f3);
        assert!(is_balanced_for(&f3, p.z));
        let d = decompose_zy(&f3, &p).unwrap();
        let a2 = zy_premise_to_mmrv_premise(&d);
        assert_eq!(apply_mmrv(&a2, &p).unwrap(), apply_zy(&f3, &p).unwrap());

        let f5 = in_ctx(&ABCDZ, THM5_PREMISE);
        let a1 = mmrv_premise_to_zy_premise(&f5, &p).unwrap();
        assert!(is_balanced_for(&a1, p.z));
        assert_eq!(apply_zy(&a1, &p).unwrap(), apply_mmrv(&f5, &p).unwrap());
    }

    #[test]
    fn substitution() {
        let names = ["C", "D", "Z"];
        let f = in_ctx(&names, "I(Z;C|D) >= 0");
        let s = substitute(&f, "Z", "C").unwrap();
        assert_eq!(s, parse_form("H(C|D) >= 0", None).unwrap());

        let g = in_ctx(&names, "I(C;D) >= 0");
        let s = substitute(&g, "Z", "C").unwrap();
        assert_eq!(s.ctx().names(), ["C", "D"]);
        assert_eq!(s, parse_form("I(C;D) >= 0", None).unwrap());

        assert!(substitute(&g, "Z", "Z").is_err());
        assert!(substitute(&g, "Q", "C").is_err());
        assert!(rename(&g, "Z", "C").is_err());
    }

    #[test]
    fn rename_sorts_context() {
        let f = in_ctx(&["A", "Z"], "I(A;Z) >= 0");
        let r = rename(&f, "Z", "B").unwrap();
        assert_eq!(r.ctx().names(), ["A", "B"]);
        assert_eq!(r, parse_form("I(A;B) >= 0", None).unwrap());
    }
}
