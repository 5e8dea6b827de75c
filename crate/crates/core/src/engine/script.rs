//! Line-oriented derivation scripts.
//!
//! ```text
//! # comment
//! let P  = I(C;D) <= I(C;D|A) + ...
//! let Q  = combo P:1 + R:1/2
//! let B  = zy P z=Z x={A,B} y={C,D}
//! let B2 = mmrv P z=Z x={A,B} y={C,D}
//! let Bb = balance B
//! let T  = subst B Z->A
//! assert shannon P
//! assert not-shannon T
//! assert equal T "I(C;D) <= ..."
//! assert balanced T [for A]
//! assert provable T in zy+b
//! assert not-provable T in r
//! ```
//!
//! A binding is *established* when it is Shannon-type or was derived from
//! established bindings. `assert provable T in S` builds the pool of system
//! `S` over `T`'s variables: the elementals plus every established binding
//! whose derivation only used `S`'s rule, balanced when `S` balances.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_traits::Signed;
use serde::Serialize;
use thiserror::Error;

use super::{Pool, Provability, Provenance, SystemKind};
use crate::balance::{balance_with_report, is_balanced, is_balanced_for};
use crate::expr::{format_rat, parse_form, render, split_identifier};
use crate::linform::{LinForm, Rat, VarContext};
use crate::rules::{self, Partition};
use crate::shannon::{check_shannon, ShannonVerdict};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScriptError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: {msg}")]
    Step {
        line: usize,
        msg: String,
        transcript: Box<Transcript>,
    },
    #[error("line {line}: assertion failed: {msg}")]
    Assertion {
        line: usize,
        msg: String,
        transcript: Box<Transcript>,
    },
}

impl ScriptError {
    /// The transcript up to the failing statement, if execution started.
    pub fn transcript(&self) -> Option<&Transcript> {
        match self {
            ScriptError::Parse { .. } => None,
            ScriptError::Step { transcript, .. } | ScriptError::Assertion { transcript, .. } => {
                Some(transcript)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TranscriptEntry {
    Derived {
        line: usize,
        name: String,
        provenance: Provenance,
        form: String,
        established: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        note: Option<String>,
    },
    Assertion {
        line: usize,
        statement: String,
        passed: bool,
        detail: String,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Rendered form of the last derivation named `name`.
    pub fn form_of(&self, name: &str) -> Option<&str> {
        self.entries.iter().rev().find_map(|e| match e {
            TranscriptEntry::Derived { name: n, form, .. } if n == name => Some(form.as_str()),
            _ => None,
        })
    }
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            match e {
                TranscriptEntry::Derived {
                    line,
                    name,
                    provenance,
                    form,
                    established,
                    note,
                } => {
                    let status = if *established { "established" } else { "unestablished" };
                    write!(f, "[{line}] {name} ({provenance}, {status})")?;
                    if let Some(note) = note {
                        write!(f, " {note}")?;
                    }
                    writeln!(f)?;
                    writeln!(f, "    {form}")?;
                }
                TranscriptEntry::Assertion {
                    line,
                    statement,
                    passed,
                    detail,
                } => {
                    let verdict = if *passed { "ok" } else { "FAILED" };
                    write!(f, "[{line}] assert {statement}: {verdict}")?;
                    if !detail.is_empty() {
                        write!(f, " ({detail})")?;
                    }
                    writeln!(f)?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Lineage {
    copy_rule: bool,
    ak_rule: bool,
}

impl Lineage {
    fn union(self, other: Lineage) -> Lineage {
        Lineage {
            copy_rule: self.copy_rule || other.copy_rule,
            ak_rule: self.ak_rule || other.ak_rule,
        }
    }

    fn allowed_in(self, kind: SystemKind) -> bool {
        if kind.uses_copy_rule() {
            !self.ak_rule
        } else {
            !self.copy_rule
        }
    }

    fn uses_rules(self) -> bool {
        self.copy_rule || self.ak_rule
    }
}

#[derive(Debug, Clone)]
struct Binding {
    form: LinForm,
    lineage: Lineage,
    established: bool,
}

enum Statement {
    Let { name: String, rhs: Rhs },
    Assert(Assertion),
}

enum Rhs {
    Inequality(String),
    Combo(Vec<(String, Rat)>),
    Rule {
        copy_rule: bool,
        src: String,
        z: String,
        x: Vec<String>,
        y: Vec<String>,
    },
    Balance(String),
    Subst { src: String, from: String, to: String },
}

enum Assertion {
    Shannon { name: String, expect: bool },
    Equal { name: String, other: String },
    Balanced { name: String, var: Option<String> },
    Provable { name: String, system: SystemKind, expect: bool },
}

/// Parses and executes `text`, returning the transcript. Execution stops at
/// the first failed assertion or rule error.
pub fn run_script(text: &str) -> Result<Transcript, ScriptError> {
    let statements = parse_script(text)?;
    let mut state = State::default();
    for (line, stmt) in statements {
        state.execute(line, stmt)?;
    }
    Ok(state.transcript)
}

fn parse_script(text: &str) -> Result<Vec<(usize, Statement)>, ScriptError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |msg: String| ScriptError::Parse { line, msg };
        let stmt = if let Some(rest) = content.strip_prefix("let ") {
            let (name, rhs) = rest
                .split_once('=')
                .ok_or_else(|| err("expected `let <name> = ...`".into()))?;
            let name = name.trim();
            check_name(name).map_err(err)?;
            Statement::Let {
                name: name.to_string(),
                rhs: parse_rhs(rhs.trim()).map_err(err)?,
            }
        } else if let Some(rest) = content.strip_prefix("assert ") {
            Statement::Assert(parse_assertion(rest.trim()).map_err(err)?)
        } else {
            return Err(err(format!("unknown statement `{content}`")));
        };
        out.push((line, stmt));
    }
    Ok(out)
}

fn check_name(name: &str) -> Result<(), String> {
    if crate::linform::is_identifier(name) {
        Ok(())
    } else {
        Err(format!("invalid name `{name}`"))
    }
}

fn word(s: &str) -> (&str, &str) {
    let s = s.trim_start();
    match s.find(char::is_whitespace) {
        Some(i) => (&s[..i], s[i..].trim_start()),
        None => (s, ""),
    }
}

/// Strips `"..."` or `canonical("...")` around an inequality.
fn unquote(s: &str) -> &str {
    let s = s.trim();
    let s = s
        .strip_prefix("canonical(")
        .and_then(|r| r.strip_suffix(')'))
        .map(str::trim)
        .unwrap_or(s);
    s.strip_prefix('"')
        .and_then(|r| r.strip_suffix('"'))
        .unwrap_or(s)
}

fn parse_rhs(rhs: &str) -> Result<Rhs, String> {
    let (head, rest) = word(rhs);
    match head {
        "combo" => {
            let mut items = Vec::new();
            for item in rest.split('+') {
                let (name, coeff) = item
                    .trim()
                    .split_once(':')
                    .ok_or_else(|| format!("expected <name>:<rational>, found `{}`", item.trim()))?;
                check_name(name.trim())?;
                items.push((name.trim().to_string(), parse_rat(coeff.trim())?));
            }
            Ok(Rhs::Combo(items))
        }
        "zy" | "mmrv" => {
            let (src, args) = word(rest);
            check_name(src)?;
            let mut z = None;
            let mut x = None;
            let mut y = None;
            for (key, value) in key_values(args)? {
                match key.as_str() {
                    "z" => z = Some(value),
                    "x" => x = Some(parse_varset(&value)?),
                    "y" => y = Some(parse_varset(&value)?),
                    other => return Err(format!("unknown rule argument `{other}`")),
                }
            }
            Ok(Rhs::Rule {
                copy_rule: head == "zy",
                src: src.to_string(),
                z: z.ok_or("missing z=<var>")?,
                x: x.ok_or("missing x={...}")?,
                y: y.unwrap_or_default(),
            })
        }
        "balance" => {
            check_name(rest)?;
            Ok(Rhs::Balance(rest.to_string()))
        }
        "subst" => {
            let (src, map) = word(rest);
            check_name(src)?;
            let (from, to) = map
                .split_once("->")
                .ok_or_else(|| format!("expected <var>-><var>, found `{map}`"))?;
            Ok(Rhs::Subst {
                src: src.to_string(),
                from: from.trim().to_string(),
                to: to.trim().to_string(),
            })
        }
        _ => Ok(Rhs::Inequality(unquote(rhs).to_string())),
    }
}

fn parse_rat(s: &str) -> Result<Rat, String> {
    let bad = || format!("bad rational `{s}`");
    let (n, d) = s.split_once('/').unwrap_or((s, "1"));
    let n: num_bigint::BigInt = n.trim().parse().map_err(|_| bad())?;
    let d: num_bigint::BigInt = d.trim().parse().map_err(|_| bad())?;
    if d.is_positive() {
        Ok(Rat::new(n, d))
    } else {
        Err(bad())
    }
}

/// `z=Z x={A,B} y={}` into key/value pairs; braces may contain spaces.
fn key_values(args: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    let mut rest = args.trim();
    while !rest.is_empty() {
        let (key, after) = rest
            .split_once('=')
            .ok_or_else(|| format!("expected key=value in `{rest}`"))?;
        let after = after.trim_start();
        let (value, tail) = if after.starts_with('{') {
            let close = after.find('}').ok_or("unclosed `{`")?;
            (&after[..=close], &after[close + 1..])
        } else {
            match after.find(char::is_whitespace) {
                Some(i) => (&after[..i], &after[i..]),
                None => (after, ""),
            }
        };
        out.push((key.trim().to_string(), value.trim().to_string()));
        rest = tail.trim_start();
    }
    Ok(out)
}

fn parse_varset(value: &str) -> Result<Vec<String>, String> {
    let inner = value
        .strip_prefix('{')
        .and_then(|v| v.strip_suffix('}'))
        .unwrap_or(value);
    let mut out = Vec::new();
    for item in inner.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        check_name(item)?;
        out.push(item.to_string());
    }
    Ok(out)
}

fn parse_assertion(text: &str) -> Result<Assertion, String> {
    let (head, rest) = word(text);
    match head {
        "shannon" | "not-shannon" => {
            check_name(rest)?;
            Ok(Assertion::Shannon {
                name: rest.to_string(),
                expect: head == "shannon",
            })
        }
        "equal" => {
            let (name, other) = word(rest);
            check_name(name)?;
            if other.is_empty() {
                return Err("expected `assert equal <name> <name-or-inequality>`".into());
            }
            Ok(Assertion::Equal {
                name: name.to_string(),
                other: other.to_string(),
            })
        }
        "balanced" => {
            let (name, tail) = word(rest);
            check_name(name)?;
            let var = match word(tail) {
                ("", _) => None,
                ("for", v) if !v.is_empty() => Some(v.to_string()),
                _ => return Err("expected `assert balanced <name> [for <var>]`".into()),
            };
            Ok(Assertion::Balanced {
                name: name.to_string(),
                var,
            })
        }
        "provable" | "not-provable" => {
            let (name, tail) = word(rest);
            check_name(name)?;
            let system = match word(tail) {
                ("in", sys) => sys.parse::<SystemKind>()?,
                _ => return Err(format!("expected `assert {head} <name> in <system>`")),
            };
            Ok(Assertion::Provable {
                name: name.to_string(),
                system,
                expect: head == "provable",
            })
        }
        other => Err(format!("unknown assertion `{other}`")),
    }
}

#[derive(Default)]
struct State {
    bindings: HashMap<String, Binding>,
    order: Vec<String>,
    transcript: Transcript,
}

impl State {
    fn step_err(&self, line: usize, msg: impl ToString) -> ScriptError {
        ScriptError::Step {
            line,
            msg: msg.to_string(),
            transcript: Box::new(self.transcript.clone()),
        }
    }

    fn get(&self, line: usize, name: &str) -> Result<&Binding, ScriptError> {
        self.bindings
            .get(name)
            .ok_or_else(|| self.step_err(line, format!("unknown name `{name}`")))
    }

    fn execute(&mut self, line: usize, stmt: Statement) -> Result<(), ScriptError> {
        match stmt {
            Statement::Let { name, rhs } => self.bind(line, name, rhs),
            Statement::Assert(a) => self.check(line, a),
        }
    }

    fn bind(&mut self, line: usize, name: String, rhs: Rhs) -> Result<(), ScriptError> {
        if self.bindings.contains_key(&name) {
            return Err(self.step_err(line, format!("`{name}` is already bound")));
        }
        let mut note = None;
        let (binding, provenance) = match rhs {
            Rhs::Inequality(text) => {
                let form = parse_form(&text, None).map_err(|e| self.step_err(line, e))?;
                let established = matches!(check_shannon(&form), Ok(v) if v.is_shannon());
                if established {
                    note = Some("shannon-type".to_string());
                }
                let b = Binding {
                    form,
                    lineage: Lineage::default(),
                    established,
                };
                (b, Provenance::Given)
            }
            Rhs::Combo(items) => {
                let mut acc: Option<Binding> = None;
                for (n, lambda) in &items {
                    if lambda.is_negative() {
                        return Err(self.step_err(line, format!("negative multiplier for `{n}`")));
                    }
                    let b = self.get(line, n)?.clone();
                    acc = Some(match acc {
                        None => Binding {
                            form: b.form.scale(lambda),
                            ..b
                        },
                        Some(a) => {
                            let aligned = align(&b.form, a.form.ctx()).map_err(|e| self.step_err(line, e))?;
                            Binding {
                                form: a.form.add_scaled(&aligned, lambda).expect("aligned"),
                                lineage: a.lineage.union(b.lineage),
                                established: a.established && b.established,
                            }
                        }
                    });
                }
                let b = acc.ok_or_else(|| self.step_err(line, "empty combination"))?;
                (b, Provenance::Combination)
            }
            Rhs::Rule {
                copy_rule,
                src,
                z,
                x,
                y,
            } => {
                let premise = self.get(line, &src)?.clone();
                let p = Partition::from_names(premise.form.ctx(), &z, &x, &y)
                    .map_err(|e| self.step_err(line, e))?;
                let form = if copy_rule {
                    let d = rules::decompose_zy(&premise.form, &p).map_err(|e| self.step_err(line, e))?;
                    note = Some(format!("alpha = {}", format_rat(&d.alpha)));
                    d.f.add(&d.g).expect("same context")
                } else {
                    let r = rules::mmrv_residual(&premise.form, &p).map_err(|e| self.step_err(line, e))?;
                    note = Some(format!("r_{} = {}", z, format_rat(&r)));
                    rules::apply_mmrv(&premise.form, &p).map_err(|e| self.step_err(line, e))?
                };
                let lineage = premise.lineage.union(Lineage {
                    copy_rule,
                    ak_rule: !copy_rule,
                });
                let b = Binding {
                    form,
                    lineage,
                    established: premise.established,
                };
                (b, if copy_rule { Provenance::Zy } else { Provenance::Mmrv })
            }
            Rhs::Balance(src) => {
                let b = self.get(line, &src)?.clone();
                let report = balance_with_report(&b.form);
                let negative = report.negative_residuals();
                if !negative.is_empty() {
                    let list: Vec<String> = negative
                        .iter()
                        .map(|(v, r)| format!("r_{v} = {}", format_rat(r)))
                        .collect();
                    note = Some(format!("negative residuals: {}", list.join(", ")));
                }
                (
                    Binding {
                        form: report.form,
                        ..b
                    },
                    Provenance::Balance,
                )
            }
            Rhs::Subst { src, from, to } => {
                let b = self.get(line, &src)?.clone();
                let form = rules::substitute_or_rename(&b.form, &from, &to)
                    .map_err(|e| self.step_err(line, e))?;
                (Binding { form, ..b }, Provenance::Subst)
            }
        };
        self.transcript.entries.push(TranscriptEntry::Derived {
            line,
            name: name.clone(),
            provenance,
            form: render(&binding.form),
            established: binding.established,
            note,
        });
        self.bindings.insert(name.clone(), binding);
        self.order.push(name);
        Ok(())
    }

    fn record(&mut self, line: usize, statement: String, passed: bool, detail: String) -> Result<(), ScriptError> {
        self.transcript.entries.push(TranscriptEntry::Assertion {
            line,
            statement: statement.clone(),
            passed,
            detail: detail.clone(),
        });
        if passed {
            Ok(())
        } else {
            let msg = if detail.is_empty() {
                statement
            } else {
                format!("{statement} ({detail})")
            };
            Err(ScriptError::Assertion {
                line,
                msg,
                transcript: Box::new(self.transcript.clone()),
            })
        }
    }

    fn check(&mut self, line: usize, a: Assertion) -> Result<(), ScriptError> {
        match a {
            Assertion::Shannon { name, expect } => {
                let form = self.get(line, &name)?.form.clone();
                let verdict = check_shannon(&form).map_err(|e| self.step_err(line, e))?;
                let detail = match &verdict {
                    ShannonVerdict::Certificate(c) => format!("certificate with {} terms", c.terms.len()),
                    ShannonVerdict::Witness(_) => "witness found".to_string(),
                };
                let stmt = format!("{} {name}", if expect { "shannon" } else { "not-shannon" });
                self.record(line, stmt, verdict.is_shannon() == expect, detail)
            }
            Assertion::Equal { name, other } => {
                let form = self.get(line, &name)?.form.clone();
                let rhs = match self.bindings.get(other.as_str()) {
                    Some(b) => b.form.clone(),
                    None => {
                        let text = unquote(&other);
                        parse_form(text, Some(form.ctx()))
                            .or_else(|_| parse_form(text, None))
                            .map_err(|e| self.step_err(line, e))?
                    }
                };
                let equal = form.same_inequality(&rhs);
                let detail = if equal {
                    String::new()
                } else {
                    format!("difference: {}", difference(&form, &rhs))
                };
                self.record(line, format!("equal {name} {other}"), equal, detail)
            }
            Assertion::Balanced { name, var } => {
                let form = self.get(line, &name)?.form.clone();
                let (ok, stmt) = match &var {
                    Some(v) => {
                        let i = form.ctx().require(v).map_err(|e| self.step_err(line, e))?;
                        (is_balanced_for(&form, i), format!("balanced {name} for {v}"))
                    }
                    None => (is_balanced(&form), format!("balanced {name}")),
                };
                self.record(line, stmt, ok, String::new())
            }
            Assertion::Provable { name, system, expect } => {
                let target = self.get(line, &name)?.form.clone();
                let pool = self.system_pool(&target, system).map_err(|e| self.step_err(line, e))?;
                let verdict = pool.provable(&target).map_err(|e| self.step_err(line, e))?;
                let detail = match &verdict {
                    Provability::Provable(combo) => {
                        let derived: Vec<&str> = combo
                            .iter()
                            .filter(|(n, _)| pool.get(n).is_some_and(|e| e.provenance != Provenance::Elemental))
                            .map(|(n, _)| n.as_str())
                            .collect();
                        if derived.is_empty() {
                            "from elementals".to_string()
                        } else {
                            format!("using {}", derived.join(", "))
                        }
                    }
                    Provability::NotProvable(_) => format!("separated from a pool of {}", pool.len()),
                };
                let stmt = format!(
                    "{} {name} in {system}",
                    if expect { "provable" } else { "not-provable" }
                );
                self.record(line, stmt, verdict.is_provable() == expect, detail)
            }
        }
    }

    fn system_pool(&self, target: &LinForm, system: SystemKind) -> Result<Pool, super::EngineError> {
        let mut pool = Pool::init(target.ctx().clone())?;
        for name in &self.order {
            let b = &self.bindings[name];
            if !b.established || !b.lineage.uses_rules() || !b.lineage.allowed_in(system) {
                continue;
            }
            let Ok(form) = align(&b.form, target.ctx()) else {
                continue;
            };
            let form = if system.balances() {
                crate::balance::balance(&form)
            } else {
                form
            };
            if !form.is_zero() {
                pool = pool.with_entry(name, form, Provenance::Given)?;
            }
        }
        Ok(pool)
    }
}

fn align(form: &LinForm, ctx: &Arc<VarContext>) -> Result<LinForm, crate::linform::LinFormError> {
    if **form.ctx() == **ctx {
        Ok(form.clone())
    } else {
        form.realign(ctx.clone())
    }
}

fn difference(a: &LinForm, b: &LinForm) -> String {
    let names = a
        .ctx()
        .names()
        .iter()
        .chain(b.ctx().names())
        .flat_map(|n| split_identifier(n).into_iter().chain(std::iter::once(n.clone())))
        .filter(|n| a.ctx().index_of(n).is_some() || b.ctx().index_of(n).is_some());
    match VarContext::sorted(names) {
        Ok(ctx) => {
            let ctx = Arc::new(ctx);
            match (a.realign(ctx.clone()), b.realign(ctx)) {
                (Ok(x), Ok(y)) => render(&x.sub(&y).expect("aligned")),
                _ => "variables differ".to_string(),
            }
        }
        Err(e) => e.to_string(),
    }
}
