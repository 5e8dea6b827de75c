//! Shannon-type membership with exact certificates.
//!
//! The Shannon cone is generated by the elemental inequalities
//! `H(X_i | X_rest) >= 0` and `I(X_i; X_j | X_K) >= 0` for
//! `K` a subset of the remaining variables. A form is Shannon-type iff it is
//! a nonnegative combination of them.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::expr::format_rat;
use crate::linform::{LinForm, Rat, VarContext, VarSet};
use crate::lp::{cone_membership, dot, ConeMembership};

/// Largest ground set the LP accepts.
pub const MAX_LP_VARS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShannonError {
    #[error("{n} variables is outside the supported range 1..={max}")]
    VariableCount { n: usize, max: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ElementalKind {
    /// `H(X_i | X_rest) >= 0`
    NodeEntropy(usize),
    /// `I(X_i; X_j | X_K) >= 0`, `i < j`, `K` disjoint from both.
    PairMutualInfo(usize, usize, VarSet),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Elemental {
    pub id: usize,
    pub kind: ElementalKind,
    pub form: LinForm,
}

impl Elemental {
    /// `H(A|B,C)` or `I(A;B|C)` style text.
    pub fn describe(&self) -> String {
        let ctx = self.form.ctx();
        match self.kind {
            ElementalKind::NodeEntropy(i) => {
                let rest = ctx.full().without(i);
                if rest.is_empty() {
                    format!("H({})", ctx.name(i))
                } else {
                    format!("H({}|{})", ctx.name(i), ctx.format_set(rest))
                }
            }
            ElementalKind::PairMutualInfo(i, j, k) => {
                if k.is_empty() {
                    format!("I({};{})", ctx.name(i), ctx.name(j))
                } else {
                    format!("I({};{}|{})", ctx.name(i), ctx.name(j), ctx.format_set(k))
                }
            }
        }
    }

    /// Balanced iff its arguments are disjoint, i.e. it is a pair term.
    pub fn has_disjoint_arguments(&self) -> bool {
        matches!(self.kind, ElementalKind::PairMutualInfo(..))
    }
}

pub fn elemental_count(n: usize) -> usize {
    if n < 2 {
        n
    } else {
        n + n * (n - 1) / 2 * (1 << (n - 2))
    }
}

fn check_n(n: usize, max: usize) -> Result<(), ShannonError> {
    if n == 0 || n > max.min(MAX_LP_VARS) {
        Err(ShannonError::VariableCount {
            n,
            max: max.min(MAX_LP_VARS),
        })
    } else {
        Ok(())
    }
}

/// All elemental inequalities over `ctx`: node entropies in variable order,
/// then pair terms ordered by `(i, j)` and conditioning mask.
pub fn elementals(ctx: &Arc<VarContext>) -> Result<Vec<Elemental>, ShannonError> {
    let n = ctx.len();
    check_n(n, MAX_LP_VARS)?;
    let full = ctx.full();
    let mut out = Vec::with_capacity(elemental_count(n));
    for i in 0..n {
        out.push(Elemental {
            id: out.len(),
            kind: ElementalKind::NodeEntropy(i),
            form: LinForm::cond_entropy(ctx.clone(), VarSet::singleton(i), full.without(i)),
        });
    }
    for i in 0..n {
        for j in i + 1..n {
            let rest = full.without(i).without(j);
            for k in rest.subsets() {
                out.push(Elemental {
                    id: out.len(),
                    kind: ElementalKind::PairMutualInfo(i, j, k),
                    form: LinForm::mutual_info(
                        ctx.clone(),
                        VarSet::singleton(i),
                        VarSet::singleton(j),
                        k,
                    ),
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    /// `(elemental id, multiplier)`, multipliers strictly positive.
    pub terms: Vec<(usize, Rat)>,
}

/// A point on which every elemental is nonnegative and the target negative.
/// Values are indexed by `mask - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub ctx: Arc<VarContext>,
    pub values: Vec<Rat>,
}

impl Witness {
    pub fn value(&self, set: VarSet) -> &Rat {
        &self.values[set.bits() as usize - 1]
    }

    pub fn evaluate(&self, f: &LinForm) -> Rat {
        f.terms()
            .fold(Rat::zero(), |acc, (s, c)| acc + c * self.value(s))
    }

    /// `(set, value)` pairs in display order.
    pub fn entries(&self) -> Vec<(VarSet, &Rat)> {
        let mut sets: Vec<VarSet> = (1..=self.values.len() as u32).map(VarSet::from_bits).collect();
        sets.sort_by(|a, b| a.display_cmp(*b));
        sets.into_iter().map(|s| (s, self.value(s))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ShannonVerdict {
    Certificate(Certificate),
    Witness(Witness),
}

impl ShannonVerdict {
    pub fn is_shannon(&self) -> bool {
        matches!(self, ShannonVerdict::Certificate(_))
    }
}

/// Decides whether `f` is Shannon-type over its own context.
pub fn check_shannon(f: &LinForm) -> Result<ShannonVerdict, ShannonError> {
    check_shannon_capped(f, MAX_LP_VARS)
}

/// As [`check_shannon`] with a lower variable cap.
pub fn check_shannon_capped(f: &LinForm, max_n: usize) -> Result<ShannonVerdict, ShannonError> {
    check_n(f.ctx().len(), max_n)?;
    let elems = elementals(f.ctx())?;
    let gens: Vec<Vec<Rat>> = elems.iter().map(|e| e.form.to_dense()).collect();
    Ok(match cone_membership(&gens, &f.to_dense()) {
        ConeMembership::Member(lambda) => ShannonVerdict::Certificate(Certificate {
            terms: lambda
                .into_iter()
                .enumerate()
                .filter(|(_, l)| !l.is_zero())
                .collect(),
        }),
        ConeMembership::Separated(y) => ShannonVerdict::Witness(Witness {
            ctx: f.ctx().clone(),
            values: normalize_integral(y),
        }),
    })
}

/// Scales a nonzero rational vector by a positive factor so its entries are
/// coprime integers.
pub(crate) fn normalize_integral(v: Vec<Rat>) -> Vec<Rat> {
    let lcm = v
        .iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * &lcm).to_integer()).collect();
    let gcd = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if gcd.is_zero() {
        return v;
    }
    ints.into_iter()
        .map(|x| Rat::from_integer(x / &gcd))
        .collect()
}

/// Exact check that the certificate sums to `target` with nonnegative
/// multipliers.
pub fn verify_certificate(target: &LinForm, cert: &Certificate) -> bool {
    let Ok(elems) = elementals(target.ctx()) else {
        return false;
    };
    let mut sum = LinForm::zero(target.ctx().clone());
    for (id, lambda) in &cert.terms {
        if lambda.is_negative() {
            return false;
        }
        let Some(e) = elems.get(*id) else {
            return false;
        };
        sum = sum.add_scaled(&e.form, lambda).expect("same context");
    }
    sum == *target
}

/// Exact check that `w` is nonnegative on every elemental and negative on
/// `target`.
pub fn verify_witness(target: &LinForm, w: &Witness) -> bool {
    if *w.ctx != **target.ctx() || w.values.len() + 1 != 1 << target.ctx().len() {
        return false;
    }
    let Ok(elems) = elementals(target.ctx()) else {
        return false;
    };
    elems.iter().all(|e| !w.evaluate(&e.form).is_negative()) && w.evaluate(target).is_negative()
}

/// Independent evaluation of a dense vector against a form; used by tests
/// and the engine.
pub fn evaluate_dense(f: &LinForm, values: &[Rat]) -> Rat {
    dot(&f.to_dense(), values)
}

/// Plain-text report: one `lambda  description` line per certificate term,
/// or one `h(set) = value` line per witness coordinate.
pub struct VerdictReport<'a> {
    pub verdict: &'a ShannonVerdict,
    pub elementals: &'a [Elemental],
}

impl fmt::Display for VerdictReport<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.verdict {
            ShannonVerdict::Certificate(c) => {
                writeln!(f, "shannon-type: certificate")?;
                for (id, lambda) in &c.terms {
                    writeln!(
                        f,
                        "  {} * {}",
                        format_rat(lambda),
                        self.elementals[*id].describe()
                    )?;
                }
            }
            ShannonVerdict::Witness(w) => {
                writeln!(f, "not shannon-type: witness")?;
                for (set, value) in w.entries() {
                    writeln!(f, "  h({}) = {}", w.ctx.format_set(set), format_rat(value))?;
                }
            }
        }
        Ok(())
    }
}

/// Machine-readable form of a verdict.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum VerdictDoc {
    ShannonType { certificate: Vec<CertificateTerm> },
    NotShannonType { witness: Vec<WitnessEntry> },
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateTerm {
    pub elemental: String,
    pub multiplier: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessEntry {
    pub subset: String,
    pub value: String,
}

impl VerdictDoc {
    pub fn new(verdict: &ShannonVerdict, elementals: &[Elemental]) -> Self {
        match verdict {
            ShannonVerdict::Certificate(c) => VerdictDoc::ShannonType {
                certificate: c
                    .terms
                    .iter()
                    .map(|(id, l)| CertificateTerm {
                        elemental: elementals[*id].describe(),
                        multiplier: format_rat(l),
                    })
                    .collect(),
            },
            ShannonVerdict::Witness(w) => VerdictDoc::NotShannonType {
                witness: w
                    .entries()
                    .into_iter()
                    .map(|(s, v)| WitnessEntry {
                        subset: w.ctx.format_set(s),
                        value: format_rat(v),
                    })
                    .collect(),
            },
        }
    }
}
