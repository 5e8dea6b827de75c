//! Proof systems: a pool of inequalities closed under nonnegative
//! combinations, extended one rule application at a time.

mod script;

pub use script::{run_script, ScriptError, Transcript, TranscriptEntry};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::balance::balance;
use crate::linform::{LinForm, LinFormError, Rat, VarContext};
use crate::lp::{cone_membership, ConeMembership};
use crate::rules::{self, Partition, RuleError};
use crate::shannon::{self, normalize_integral, ShannonError, Witness};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("unknown pool entry `{0}`")]
    UnknownName(String),
    #[error("negative multiplier {coeff} for `{name}`")]
    NegativeCoefficient { name: String, coeff: String },
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Shannon(#[from] ShannonError),
    #[error(transparent)]
    Context(#[from] LinFormError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Elemental,
    Given,
    Zy,
    Mmrv,
    Balance,
    Subst,
    Combination,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Elemental => "elemental",
            Provenance::Given => "given",
            Provenance::Zy => "zy",
            Provenance::Mmrv => "mmrv",
            Provenance::Balance => "balance",
            Provenance::Subst => "subst",
            Provenance::Combination => "combination",
        })
    }
}

/// Which rule a system uses and whether it balances after each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SystemKind {
    Zy,
    ZyB,
    R,
    RB,
}

impl SystemKind {
    pub const ALL: [SystemKind; 4] = [SystemKind::Zy, SystemKind::ZyB, SystemKind::R, SystemKind::RB];

    pub fn uses_copy_rule(self) -> bool {
        matches!(self, SystemKind::Zy | SystemKind::ZyB)
    }

    pub fn balances(self) -> bool {
        matches!(self, SystemKind::ZyB | SystemKind::RB)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SystemKind::Zy => "zy",
            SystemKind::ZyB => "zy+b",
            SystemKind::R => "r",
            SystemKind::RB => "r+b",
        }
    }

    /// Applies the system's rule to `premise` (and balances for `+b`).
    pub fn infer(self, premise: &LinForm, p: &Partition) -> Result<LinForm, RuleError> {
        let out = if self.uses_copy_rule() {
            rules::apply_zy(premise, p)?
        } else {
            rules::apply_mmrv(premise, p)?
        };
        Ok(if self.balances() { balance(&out) } else { out })
    }
}

impl FromStr for SystemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zy" => Ok(SystemKind::Zy),
            "zy+b" => Ok(SystemKind::ZyB),
            "r" => Ok(SystemKind::R),
            "r+b" => Ok(SystemKind::RB),
            other => Err(format!("unknown proof system `{other}` (zy, zy+b, r, r+b)")),
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolEntry {
    pub name: String,
    pub form: LinForm,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provability {
    /// Nonnegative multipliers of named pool entries.
    Provable(Vec<(String, Rat)>),
    /// A point nonnegative on every pool entry and negative on the target.
    NotProvable(Witness),
}

impl Provability {
    pub fn is_provable(&self) -> bool {
        matches!(self, Provability::Provable(_))
    }
}

/// Ordered, deduplicated set of inequalities over one context. Pools are
/// values: every extension returns a new pool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pool {
    ctx: Arc<VarContext>,
    entries: Vec<PoolEntry>,
}

impl Pool {
    /// A pool holding the elemental inequalities of `ctx`, named by their
    /// descriptions.
    pub fn init(ctx: Arc<VarContext>) -> Result<Pool, EngineError> {
        let entries = shannon::elementals(&ctx)?
            .into_iter()
            .map(|e| PoolEntry {
                name: e.describe(),
                form: e.form,
                provenance: Provenance::Elemental,
            })
            .collect();
        Ok(Pool { ctx, entries })
    }

    pub fn ctx(&self) -> &Arc<VarContext> {
        &self.ctx
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&PoolEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn contains_form(&self, form: &LinForm) -> bool {
        self.entries.iter().any(|e| e.form == *form)
    }

    /// Adds an entry unless an equal form is already present. A clashing
    /// name gets a numeric suffix.
    pub fn with_entry(&self, name: &str, form: LinForm, provenance: Provenance) -> Result<Pool, EngineError> {
        let form = if **form.ctx() == *self.ctx {
            form
        } else {
            form.realign(self.ctx.clone())?
        };
        let mut out = self.clone();
        if out.contains_form(&form) {
            return Ok(out);
        }
        let mut unique = name.to_string();
        let mut k = 1;
        while out.get(&unique).is_some() {
            k += 1;
            unique = format!("{name}#{k}");
        }
        out.entries.push(PoolEntry {
            name: unique,
            form,
            provenance,
        });
        Ok(out)
    }

    /// `sum lambda_i * entry_i` for nonnegative `lambda`.
    pub fn pick(&self, combo: &[(&str, Rat)]) -> Result<LinForm, EngineError> {
        let mut out = LinForm::zero(self.ctx.clone());
        for (name, lambda) in combo {
            if lambda.is_negative() {
                return Err(EngineError::NegativeCoefficient {
                    name: name.to_string(),
                    coeff: crate::expr::format_rat(lambda),
                });
            }
            let entry = self
                .get(name)
                .ok_or_else(|| EngineError::UnknownName(name.to_string()))?;
            out = out.add_scaled(&entry.form, lambda)?;
        }
        Ok(out)
    }

    /// One derivation step: pick a combination, apply the system's rule,
    /// add the conclusion. Returns the new pool and the conclusion.
    pub fn step(
        &self,
        kind: SystemKind,
        combo: &[(&str, Rat)],
        partition: &Partition,
    ) -> Result<(Pool, LinForm), EngineError> {
        let premise = self.pick(combo)?;
        let conclusion = kind.infer(&premise, partition)?;
        let provenance = if kind.uses_copy_rule() {
            Provenance::Zy
        } else {
            Provenance::Mmrv
        };
        let name = format!("{}-step{}", kind, self.derived_count() + 1);
        let pool = self.with_entry(&name, conclusion.clone(), provenance)?;
        Ok((pool, conclusion))
    }

    fn derived_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.provenance != Provenance::Elemental)
            .count()
    }

    /// Identifies `from` with `to` in every entry; the new pool lives on the
    /// smaller context and is reseeded with its elementals.
    pub fn substitute(&self, from: &str, to: &str) -> Result<Pool, EngineError> {
        let mut mapped = Vec::new();
        for e in &self.entries {
            if e.provenance == Provenance::Elemental {
                continue;
            }
            mapped.push((e.name.clone(), rules::substitute(&e.form, from, to)?));
        }
        let target = match mapped.first() {
            Some((_, f)) => f.ctx().clone(),
            None => rules::substitute(&LinForm::zero(self.ctx.clone()), from, to)?
                .ctx()
                .clone(),
        };
        let mut pool = Pool::init(target)?;
        for (name, form) in mapped {
            if !form.is_zero() {
                pool = pool.with_entry(&format!("{name}[{from}->{to}]"), form, Provenance::Subst)?;
            }
        }
        Ok(pool)
    }

    /// Exact membership of `target` in the conic hull of the pool.
    pub fn provable(&self, target: &LinForm) -> Result<Provability, EngineError> {
        let target = if **target.ctx() == *self.ctx {
            target.clone()
        } else {
            target.realign(self.ctx.clone())?
        };
        let gens: Vec<Vec<Rat>> = self.entries.iter().map(|e| e.form.to_dense()).collect();
        Ok(match cone_membership(&gens, &target.to_dense()) {
            ConeMembership::Member(lambda) => Provability::Provable(
                lambda
                    .into_iter()
                    .zip(&self.entries)
                    .filter(|(l, _)| !l.is_zero())
                    .map(|(l, e)| (e.name.clone(), l))
                    .collect(),
            ),
            ConeMembership::Separated(y) => Provability::NotProvable(Witness {
                ctx: self.ctx.clone(),
                values: normalize_integral(y),
            }),
        })
    }
}
