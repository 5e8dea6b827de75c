//! Exact linear forms over the lattice of nonempty variable subsets.
//!
//! A [`LinForm`] stores the coefficients `c_J` of `sum_J c_J * H(X_J) >= 0`
//! keyed by [`VarSet`] bitmasks relative to a [`VarContext`].

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

/// Exact rational coefficient. Always kept in lowest terms with a positive
/// denominator.
pub type Rat = BigRational;

/// Builds a rational from an integer.
pub fn rat(n: i64) -> Rat {
    Rat::from_integer(n.into())
}

/// Builds the rational `n / d`. Panics if `d == 0`.
pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(n.into(), d.into())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinFormError {
    #[error("variable contexts differ: [{left}] vs [{right}]")]
    ContextMismatch { left: String, right: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("invalid variable name `{0}`")]
    InvalidName(String),
    #[error("{0} variables requested, at most {max} are supported", max = VarContext::MAX_VARS)]
    TooManyVariables(usize),
}

/// Returns true if `s` matches `[A-Za-z][A-Za-z0-9_]*`.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Ordered ground set of variable names. Position `i` is bit `i` of every
/// [`VarSet`] built against this context.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VarContext {
    names: Vec<String>,
}

impl VarContext {
    pub const MAX_VARS: usize = 16;

    pub fn new<I, S>(names: I) -> Result<Self, LinFormError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() > Self::MAX_VARS {
            return Err(LinFormError::TooManyVariables(names.len()));
        }
        for (i, name) in names.iter().enumerate() {
            if !is_identifier(name) {
                return Err(LinFormError::InvalidName(name.clone()));
            }
            if names[..i].contains(name) {
                return Err(LinFormError::DuplicateVariable(name.clone()));
            }
        }
        Ok(Self { names })
    }

    /// Context whose names are sorted lexicographically.
    pub fn sorted<I, S>(names: I) -> Result<Self, LinFormError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut names: Vec<String> = names.into_iter().map(Into::into).collect();
        names.sort();
        names.dedup();
        Self::new(names)
    }

    /// `n` variables named `X1 .. Xn`.
    pub fn numbered(n: usize) -> Result<Self, LinFormError> {
        Self::new((1..=n).map(|i| format!("X{i}")))
    }

    /// `n` variables named `A, B, C, ...` (n <= 16).
    pub fn letters(n: usize) -> Result<Self, LinFormError> {
        if n > Self::MAX_VARS {
            return Err(LinFormError::TooManyVariables(n));
        }
        Self::new((0..n).map(|i| ((b'A' + i as u8) as char).to_string()))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn require(&self, name: &str) -> Result<usize, LinFormError> {
        self.index_of(name)
            .ok_or_else(|| LinFormError::UnknownVariable(name.to_string()))
    }

    /// The set of all variables.
    pub fn full(&self) -> VarSet {
        VarSet::full(self.len())
    }

    pub fn set_of<S: AsRef<str>>(&self, names: &[S]) -> Result<VarSet, LinFormError> {
        let mut set = VarSet::EMPTY;
        for name in names {
            set = set.with(self.require(name.as_ref())?);
        }
        Ok(set)
    }

    pub fn names_of(&self, set: VarSet) -> Vec<&str> {
        set.iter().map(|i| self.name(i)).collect()
    }

    /// Comma-separated names of `set`, e.g. `A,C`.
    pub fn format_set(&self, set: VarSet) -> String {
        self.names_of(set).join(",")
    }

    fn describe(&self) -> String {
        self.names.join(",")
    }
}

impl fmt::Display for VarContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.describe())
    }
}

/// Bitmask over the positions of a [`VarContext`]. May be empty; linear
/// forms only ever store nonempty sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct VarSet(u32);

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);

    pub fn from_bits(bits: u32) -> Self {
        VarSet(bits)
    }

    pub fn full(n: usize) -> Self {
        if n >= 32 {
            VarSet(u32::MAX)
        } else {
            VarSet((1u32 << n) - 1)
        }
    }

    pub fn singleton(i: usize) -> Self {
        VarSet(1 << i)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn with(self, i: usize) -> Self {
        VarSet(self.0 | 1 << i)
    }

    pub fn without(self, i: usize) -> Self {
        VarSet(self.0 & !(1 << i))
    }

    pub fn union(self, other: VarSet) -> Self {
        VarSet(self.0 | other.0)
    }

    pub fn intersection(self, other: VarSet) -> Self {
        VarSet(self.0 & other.0)
    }

    pub fn difference(self, other: VarSet) -> Self {
        VarSet(self.0 & !other.0)
    }

    pub fn is_disjoint(self, other: VarSet) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_subset_of(self, other: VarSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersects(self, other: VarSet) -> bool {
        !self.is_disjoint(other)
    }

    /// Positions of the set bits, ascending.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    /// All subsets of `self` (including the empty set and `self`) in
    /// increasing mask order.
    pub fn subsets(self) -> impl Iterator<Item = VarSet> {
        let mask = self.0;
        let mut next = Some(0u32);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == mask {
                None
            } else {
                Some((cur.wrapping_sub(mask)) & mask)
            };
            Some(VarSet(cur))
        })
    }

    /// Display order: smaller sets first, then lexicographic on the
    /// ascending index sequence.
    pub fn display_cmp(self, other: VarSet) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.iter().cmp(other.iter()))
    }
}

/// `sum_J c_J * H(X_J) >= 0` with exact rational coefficients.
///
/// Zero coefficients are never stored, so two forms over the same context are
/// equal exactly when they denote the same inequality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinForm {
    ctx: Arc<VarContext>,
    coeffs: BTreeMap<VarSet, Rat>,
}

impl LinForm {
    /// The empty form, `0 >= 0`.
    pub fn zero(ctx: Arc<VarContext>) -> Self {
        Self {
            ctx,
            coeffs: BTreeMap::new(),
        }
    }

    /// Sums the given terms. Terms on the empty set are dropped since
    /// `H(empty) = 0`.
    pub fn from_terms<I>(ctx: Arc<VarContext>, terms: I) -> Self
    where
        I: IntoIterator<Item = (VarSet, Rat)>,
    {
        let mut form = Self::zero(ctx);
        for (set, c) in terms {
            form.add_term(set, &c);
        }
        form
    }

    /// `H(X_set)`.
    pub fn entropy(ctx: Arc<VarContext>, set: VarSet) -> Self {
        Self::from_terms(ctx, [(set, Rat::one())])
    }

    /// `H(X_j | X_l) = H(X_{j u l}) - H(X_l)`.
    pub fn cond_entropy(ctx: Arc<VarContext>, j: VarSet, l: VarSet) -> Self {
        Self::from_terms(ctx, [(j.union(l), Rat::one()), (l, -Rat::one())])
    }

    /// `I(X_j ; X_k | X_l) = H(jl) + H(kl) - H(jkl) - H(l)`.
    pub fn mutual_info(ctx: Arc<VarContext>, j: VarSet, k: VarSet, l: VarSet) -> Self {
        Self::from_terms(
            ctx,
            [
                (j.union(l), Rat::one()),
                (k.union(l), Rat::one()),
                (j.union(k).union(l), -Rat::one()),
                (l, -Rat::one()),
            ],
        )
    }

    pub(crate) fn add_term(&mut self, set: VarSet, c: &Rat) {
        debug_assert!(set.is_subset_of(self.ctx.full()));
        if set.is_empty() || c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(set).or_insert_with(Rat::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&set);
        }
    }

    pub fn ctx(&self) -> &Arc<VarContext> {
        &self.ctx
    }

    pub fn coeff(&self, set: VarSet) -> Rat {
        self.coeffs.get(&set).cloned().unwrap_or_else(Rat::zero)
    }

    /// Nonzero terms in mask order.
    pub fn terms(&self) -> impl Iterator<Item = (VarSet, &Rat)> {
        self.coeffs.iter().map(|(s, c)| (*s, c))
    }

    /// Nonzero terms in display order (size, then lexicographic).
    pub fn ordered_terms(&self) -> Vec<(VarSet, &Rat)> {
        let mut terms: Vec<_> = self.terms().collect();
        terms.sort_by(|a, b| a.0.display_cmp(b.0));
        terms
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Union of all sets with a nonzero coefficient.
    pub fn used_vars(&self) -> VarSet {
        self.coeffs.keys().fold(VarSet::EMPTY, |acc, s| acc.union(*s))
    }

    fn check_ctx(&self, other: &LinForm) -> Result<(), LinFormError> {
        if Arc::ptr_eq(&self.ctx, &other.ctx) || self.ctx == other.ctx {
            Ok(())
        } else {
            Err(LinFormError::ContextMismatch {
                left: self.ctx.describe(),
                right: other.ctx.describe(),
            })
        }
    }

    pub fn add(&self, other: &LinForm) -> Result<LinForm, LinFormError> {
        self.check_ctx(other)?;
        let mut out = self.clone();
        for (set, c) in other.terms() {
            out.add_term(set, c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &LinForm) -> Result<LinForm, LinFormError> {
        self.check_ctx(other)?;
        let mut out = self.clone();
        for (set, c) in other.terms() {
            out.add_term(set, &-c);
        }
        Ok(out)
    }

    /// `self + k * other`.
    pub fn add_scaled(&self, other: &LinForm, k: &Rat) -> Result<LinForm, LinFormError> {
        self.check_ctx(other)?;
        let mut out = self.clone();
        if !k.is_zero() {
            for (set, c) in other.terms() {
                out.add_term(set, &(c * k));
            }
        }
        Ok(out)
    }

    pub fn scale(&self, k: &Rat) -> LinForm {
        if k.is_zero() {
            return LinForm::zero(self.ctx.clone());
        }
        LinForm {
            ctx: self.ctx.clone(),
            coeffs: self.coeffs.iter().map(|(s, c)| (*s, c * k)).collect(),
        }
    }

    pub fn neg(&self) -> LinForm {
        self.scale(&-Rat::one())
    }

    /// Sum of the coefficients of all sets containing variable `var`.
    pub fn coefficient_sum_over(&self, var: usize) -> Rat {
        self.coeffs
            .iter()
            .filter(|(s, _)| s.contains(var))
            .fold(Rat::zero(), |acc, (_, c)| acc + c)
    }

    pub fn coefficient_sum_over_name(&self, name: &str) -> Result<Rat, LinFormError> {
        Ok(self.coefficient_sum_over(self.ctx.require(name)?))
    }

    /// Dense coordinate vector indexed by `mask - 1`, length `2^n - 1`.
    pub fn to_dense(&self) -> Vec<Rat> {
        let dim = (1usize << self.ctx.len()) - 1;
        let mut v = vec![Rat::zero(); dim];
        for (s, c) in self.terms() {
            v[s.bits() as usize - 1] = c.clone();
        }
        v
    }

    /// Inverse of [`LinForm::to_dense`].
    pub fn from_dense(ctx: Arc<VarContext>, dense: &[Rat]) -> Self {
        Self::from_terms(
            ctx,
            dense
                .iter()
                .enumerate()
                .map(|(i, c)| (VarSet::from_bits(i as u32 + 1), c.clone())),
        )
    }

    /// Re-expresses the form over `target`, matching variables by name.
    /// Every variable that occurs in a nonzero term must exist in `target`.
    pub fn realign(&self, target: Arc<VarContext>) -> Result<LinForm, LinFormError> {
        let mut map = vec![None; self.ctx.len()];
        for i in self.used_vars().iter() {
            map[i] = Some(target.require(self.ctx.name(i))?);
        }
        let terms: Vec<_> = self
            .terms()
            .map(|(s, c)| {
                let moved = s
                    .iter()
                    .fold(VarSet::EMPTY, |acc, i| acc.with(map[i].expect("mapped")));
                (moved, c.clone())
            })
            .collect();
        Ok(LinForm::from_terms(target, terms))
    }

    /// True if both forms denote the same inequality once variables are
    /// matched by name. Variables without a nonzero term are irrelevant.
    pub fn same_inequality(&self, other: &LinForm) -> bool {
        let names = self
            .ctx
            .names_of(self.used_vars())
            .into_iter()
            .chain(other.ctx.names_of(other.used_vars()))
            .map(str::to_string);
        let Ok(common) = VarContext::sorted(names) else {
            return false;
        };
        let common = Arc::new(common);
        match (self.realign(common.clone()), other.realign(common)) {
            (Ok(a), Ok(b)) => a == b,
            _ => false,
        }
    }
}
