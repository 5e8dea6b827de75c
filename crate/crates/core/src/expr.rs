//! Parsing and printing of entropy expressions.
//!
//! Grammar:
//!
//! ```text
//! ineq     := expr (">=" | "<=" | "=") expr
//! expr     := [sign] term { ("+" | "-") term }
//! term     := [rational ["*"]] atom
//! atom     := "H(" varlist ["|" varlist] ")"
//!           | "I(" varlist ";" varlist ["|" varlist] ")"
//! varlist  := ident { "," ident }
//! rational := integer ["/" positive-integer]
//! ```
//!
//! A bare `0` is accepted as an expression. Inside a varlist an identifier
//! that is not a known variable is split at uppercase letters, so `AB` reads
//! as `A,B` and `X1X2` as `X1,X2`.

use std::fmt::Write as _;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::linform::{LinForm, LinFormError, Rat, VarContext, VarSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at column {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown variable `{name}` at column {pos}")]
    UnknownVariable { pos: usize, name: String },
    #[error("empty argument in I-term at column {pos}")]
    EmptyArgument { pos: usize },
    #[error(transparent)]
    Context(#[from] LinFormError),
}

fn syntax(pos: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        pos,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Ge,
    Le,
    Eq,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Ge => ">=",
            Relation::Le => "<=",
            Relation::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TermKind {
    /// `H(J)`
    Joint(VarSet),
    /// `H(J | L)`
    Conditional(VarSet, VarSet),
    /// `I(J ; K | L)`; `J` and `K` may overlap.
    MutualInfo(VarSet, VarSet, VarSet),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntropyTerm {
    pub kind: TermKind,
    pub coefficient: Rat,
}

impl EntropyTerm {
    /// Expansion into joint-entropy coordinates.
    pub fn to_form(&self, ctx: &Arc<VarContext>) -> LinForm {
        let base = match self.kind {
            TermKind::Joint(j) => LinForm::entropy(ctx.clone(), j),
            TermKind::Conditional(j, l) => LinForm::cond_entropy(ctx.clone(), j, l),
            TermKind::MutualInfo(j, k, l) => LinForm::mutual_info(ctx.clone(), j, k, l),
        };
        base.scale(&self.coefficient)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inequality {
    pub ctx: Arc<VarContext>,
    pub lhs: Vec<EntropyTerm>,
    pub relation: Relation,
    pub rhs: Vec<EntropyTerm>,
}

impl Inequality {
    fn side(&self, terms: &[EntropyTerm]) -> LinForm {
        terms.iter().fold(LinForm::zero(self.ctx.clone()), |acc, t| {
            acc.add(&t.to_form(&self.ctx)).expect("same context")
        })
    }

    /// Normalizes to a single `form >= 0`. For `=`, this is the
    /// `lhs - rhs >= 0` direction; see [`Inequality::to_forms`].
    pub fn canonicalize(&self) -> LinForm {
        let lhs = self.side(&self.lhs);
        let rhs = self.side(&self.rhs);
        match self.relation {
            Relation::Ge | Relation::Eq => lhs.sub(&rhs),
            Relation::Le => rhs.sub(&lhs),
        }
        .expect("same context")
    }

    /// All `>= 0` forms the statement asserts: one, or two for `=`.
    pub fn to_forms(&self) -> Vec<LinForm> {
        let f = self.canonicalize();
        if self.relation == Relation::Eq {
            let g = f.neg();
            vec![f, g]
        } else {
            vec![f]
        }
    }
}

/// Parses `text`. With `ctx` given, every variable must belong to it;
/// otherwise the context is the lexicographically sorted set of variables
/// that occur.
pub fn parse(text: &str, ctx: Option<&Arc<VarContext>>) -> Result<Inequality, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        at: 0,
        end: text.chars().count(),
    };
    let lhs = p.expr()?;
    let relation = match p.next() {
        Some((_, Tok::Rel(r))) => r,
        Some((pos, t)) => return Err(syntax(pos, format!("expected relation, found {t:?}"))),
        None => return Err(syntax(p.end, "expected `>=`, `<=` or `=`")),
    };
    let rhs = p.expr()?;
    if let Some((pos, t)) = p.next() {
        return Err(syntax(pos, format!("unexpected trailing {t:?}")));
    }

    let ctx = match ctx {
        Some(c) => c.clone(),
        None => {
            let names = lhs
                .iter()
                .chain(rhs.iter())
                .flat_map(|t| t.groups.iter())
                .flat_map(|g| g.iter())
                .flat_map(|(_, name)| split_identifier(name));
            Arc::new(VarContext::sorted(names)?)
        }
    };
    let resolve = |terms: Vec<RawTerm>| -> Result<Vec<EntropyTerm>, ParseError> {
        terms.into_iter().map(|t| t.resolve(&ctx)).collect()
    };
    let lhs = resolve(lhs)?;
    let rhs = resolve(rhs)?;
    Ok(Inequality {
        ctx,
        lhs,
        relation,
        rhs,
    })
}

/// `parse` followed by `canonicalize`.
pub fn parse_form(text: &str, ctx: Option<&Arc<VarContext>>) -> Result<LinForm, ParseError> {
    Ok(parse(text, ctx)?.canonicalize())
}

/// Splits an identifier at uppercase letters: `AB` -> `[A, B]`,
/// `X1X2` -> `[X1, X2]`, `Foo` -> `[Foo]`.
pub fn split_identifier(ident: &str) -> Vec<String> {
    let mut parts: Vec<String> = Vec::new();
    for c in ident.chars() {
        match parts.last_mut() {
            Some(last) if !c.is_ascii_uppercase() => last.push(c),
            _ => parts.push(c.to_string()),
        }
    }
    parts
}

pub fn format_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Deterministic text for a form: terms sorted by subset size, then
/// lexicographically by variable position, e.g.
/// `1*H(C) + 1*H(A,C) + 1*H(B,C) - 1*H(A,B,C) >= 0`.
pub fn render(f: &LinForm) -> String {
    let mut out = render_lhs(f);
    out.push_str(" >= 0");
    out
}

impl std::fmt::Display for LinForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&render(self))
    }
}

/// The left-hand side of [`render`], `0` for the empty form.
pub fn render_lhs(f: &LinForm) -> String {
    let terms = f.ordered_terms();
    if terms.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (set, c)) in terms.into_iter().enumerate() {
        let sign = if c.is_negative() { "-" } else { "+" };
        if i == 0 {
            if c.is_negative() {
                out.push('-');
            }
        } else {
            let _ = write!(out, " {sign} ");
        }
        let _ = write!(out, "{}*H({})", format_rat(&c.abs()), f.ctx().format_set(set));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Slash,
    Star,
    Plus,
    Minus,
    LParen,
    RParen,
    Comma,
    Semi,
    Bar,
    Rel(Relation),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let tok = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            c if c.is_ascii_alphabetic() => {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(chars[start..i].iter().collect())));
                continue;
            }
            c if c.is_ascii_digit() => {
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().collect();
                out.push((start, Tok::Int(digits.parse().expect("digits"))));
                continue;
            }
            '/' => Tok::Slash,
            '*' => Tok::Star,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            '|' => Tok::Bar,
            '>' | '<' if chars.get(i + 1) == Some(&'=') => {
                i += 1;
                Tok::Rel(if c == '>' { Relation::Ge } else { Relation::Le })
            }
            '=' => Tok::Rel(Relation::Eq),
            other => return Err(syntax(start, format!("unexpected character `{other}`"))),
        };
        i += 1;
        out.push((start, tok));
    }
    Ok(out)
}

type Group = Vec<(usize, String)>;

#[derive(Debug)]
enum RawKind {
    Joint,
    Conditional,
    MutualInfo,
}

#[derive(Debug)]
struct RawTerm {
    coefficient: Rat,
    kind: RawKind,
    // Joint: [J]; Conditional: [J, L]; MutualInfo: [J, K, L] with L possibly empty.
    groups: Vec<Group>,
}

impl RawTerm {
    fn resolve(self, ctx: &VarContext) -> Result<EntropyTerm, ParseError> {
        let sets = self
            .groups
            .iter()
            .map(|g| resolve_group(g, ctx))
            .collect::<Result<Vec<_>, _>>()?;
        let kind = match self.kind {
            RawKind::Joint => TermKind::Joint(sets[0]),
            RawKind::Conditional => TermKind::Conditional(sets[0], sets[1]),
            RawKind::MutualInfo => TermKind::MutualInfo(sets[0], sets[1], sets[2]),
        };
        Ok(EntropyTerm {
            kind,
            coefficient: self.coefficient,
        })
    }
}

fn resolve_group(group: &Group, ctx: &VarContext) -> Result<VarSet, ParseError> {
    let mut set = VarSet::EMPTY;
    for (pos, name) in group {
        if let Some(i) = ctx.index_of(name) {
            set = set.with(i);
            continue;
        }
        for part in split_identifier(name) {
            let i = ctx
                .index_of(&part)
                .ok_or_else(|| ParseError::UnknownVariable {
                    pos: *pos,
                    name: if part == *name {
                        part.clone()
                    } else {
                        format!("{part}` (in `{name}`)")
                    },
                })?;
            set = set.with(i);
        }
    }
    Ok(set)
}

struct Parser {
    tokens: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.tokens.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn next(&mut self) -> Option<(usize, Tok)> {
        let t = self.tokens.get(self.at).cloned();
        if t.is_some() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        match self.next() {
            Some((_, t)) if t == want => Ok(()),
            Some((pos, t)) => Err(syntax(pos, format!("expected {what}, found {t:?}"))),
            None => Err(syntax(self.end, format!("expected {what}"))),
        }
    }

    fn expr(&mut self) -> Result<Vec<RawTerm>, ParseError> {
        let mut terms = Vec::new();
        let mut negate = match self.peek() {
            Some(Tok::Minus) => {
                self.at += 1;
                true
            }
            Some(Tok::Plus) => {
                self.at += 1;
                false
            }
            _ => false,
        };
        loop {
            if let Some(mut t) = self.term()? {
                if negate {
                    t.coefficient = -t.coefficient;
                }
                terms.push(t);
            }
            negate = match self.peek() {
                Some(Tok::Plus) => false,
                Some(Tok::Minus) => true,
                _ => break,
            };
            self.at += 1;
        }
        Ok(terms)
    }

    /// `None` for a bare zero constant.
    fn term(&mut self) -> Result<Option<RawTerm>, ParseError> {
        let start = self.pos();
        let coefficient = if let Some(Tok::Int(_)) = self.peek() {
            let c = self.rational()?;
            match self.peek() {
                Some(Tok::Star) => {
                    self.at += 1;
                }
                Some(Tok::Ident(_)) => {}
                _ => {
                    if c.is_zero() {
                        return Ok(None);
                    }
                    return Err(syntax(start, "nonzero constants are not allowed"));
                }
            }
            c
        } else {
            Rat::one()
        };
        let (pos, name) = match self.next() {
            Some((pos, Tok::Ident(name))) => (pos, name),
            Some((pos, t)) => return Err(syntax(pos, format!("expected H(...) or I(...), found {t:?}"))),
            None => return Err(syntax(self.end, "expected H(...) or I(...)")),
        };
        let kind = match name.as_str() {
            "H" => RawKind::Joint,
            "I" => RawKind::MutualInfo,
            _ => return Err(syntax(pos, format!("expected H or I, found `{name}`"))),
        };
        self.expect(Tok::LParen, "`(`")?;
        let mut groups = vec![self.varlist()?];
        let kind = match kind {
            RawKind::MutualInfo => {
                self.expect(Tok::Semi, "`;`")?;
                groups.push(self.varlist()?);
                if self.peek() == Some(&Tok::Bar) {
                    self.at += 1;
                    groups.push(self.varlist()?);
                } else {
                    groups.push(Vec::new());
                }
                RawKind::MutualInfo
            }
            _ => {
                if self.peek() == Some(&Tok::Bar) {
                    self.at += 1;
                    groups.push(self.varlist()?);
                    RawKind::Conditional
                } else {
                    RawKind::Joint
                }
            }
        };
        self.expect(Tok::RParen, "`)`")?;
        Ok(Some(RawTerm {
            coefficient,
            kind,
            groups,
        }))
    }

    fn rational(&mut self) -> Result<Rat, ParseError> {
        let num = match self.next() {
            Some((_, Tok::Int(n))) => n,
            _ => unreachable!("caller checked for an integer"),
        };
        if self.peek() != Some(&Tok::Slash) {
            return Ok(Rat::from_integer(num));
        }
        self.at += 1;
        match self.next() {
            Some((pos, Tok::Int(d))) => {
                if d.is_zero() {
                    Err(syntax(pos, "zero denominator"))
                } else {
                    Ok(Rat::new(num, d))
                }
            }
            Some((pos, _)) => Err(syntax(pos, "expected denominator")),
            None => Err(syntax(self.end, "expected denominator")),
        }
    }

    fn varlist(&mut self) -> Result<Group, ParseError> {
        let mut group = Vec::new();
        loop {
            match self.next() {
                Some((pos, Tok::Ident(name))) => group.push((pos, name)),
                Some((pos, Tok::Semi | Tok::Bar | Tok::RParen)) => {
                    return Err(ParseError::EmptyArgument { pos })
                }
                Some((pos, t)) => return Err(syntax(pos, format!("expected variable, found {t:?}"))),
                None => return Err(syntax(self.end, "expected variable")),
            }
            if self.peek() == Some(&Tok::Comma) {
                self.at += 1;
            } else {
                return Ok(group);
            }
        }
    }
}
