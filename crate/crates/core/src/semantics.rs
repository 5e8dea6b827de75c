//! Finite joint distributions as a numeric falsification oracle.
//!
//! Entropies are in bits with `0 log 0 = 0`. Everything here is `f64`; the
//! exact machinery lives in [`crate::shannon`].

use std::fmt::Write as _;
use std::sync::Arc;

use num_traits::ToPrimitive;
use rand::Rng;
use rand_distr::Exp1;
use thiserror::Error;

use crate::linform::{LinForm, LinFormError, VarContext, VarSet};

/// Tolerance for inequality checks on entropy vectors.
pub const INEQ_TOL: f64 = 1e-9;
/// Tolerance for identities between distributions.
pub const DIST_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PmfError {
    #[error("invalid distribution: {0}")]
    Invalid(String),
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("invalid copy partition: {0}")]
    Partition(String),
    #[error(transparent)]
    Context(#[from] LinFormError),
}

/// Joint probability table. Cells are stored row-major with the last
/// variable varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    ctx: Arc<VarContext>,
    sizes: Vec<usize>,
    probs: Vec<f64>,
}

impl JointPmf {
    pub fn new(ctx: Arc<VarContext>, sizes: Vec<usize>, probs: Vec<f64>) -> Result<Self, PmfError> {
        if sizes.len() != ctx.len() {
            return Err(PmfError::Invalid(format!(
                "{} alphabet sizes for {} variables",
                sizes.len(),
                ctx.len()
            )));
        }
        if sizes.iter().any(|&s| s == 0) {
            return Err(PmfError::Invalid("alphabet size 0".into()));
        }
        let cells: usize = sizes.iter().product();
        if probs.len() != cells {
            return Err(PmfError::Invalid(format!(
                "{} probabilities for {cells} cells",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(PmfError::Invalid(format!("probability {p} is negative or not finite")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > DIST_TOL {
            return Err(PmfError::Invalid(format!("probabilities sum to {total}")));
        }
        Ok(Self { ctx, sizes, probs })
    }

    /// Samples the table from a symmetric Dirichlet(1) distribution.
    pub fn random<R: Rng + ?Sized>(ctx: Arc<VarContext>, sizes: Vec<usize>, rng: &mut R) -> Self {
        let cells: usize = sizes.iter().product();
        let mut probs: Vec<f64> = (0..cells).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        Self::new(ctx, sizes, probs).expect("sampled distribution is valid")
    }

    pub fn ctx(&self) -> &Arc<VarContext> {
        &self.ctx
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.sizes.len()];
        for i in (0..self.sizes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.sizes[i + 1];
        }
        strides
    }

    /// Value tuple of cell `index`.
    pub fn values_of(&self, index: usize) -> Vec<usize> {
        let strides = self.strides();
        strides
            .iter()
            .zip(&self.sizes)
            .map(|(s, n)| index / s % n)
            .collect()
    }

    pub fn prob(&self, values: &[usize]) -> f64 {
        let idx: usize = self.strides().iter().zip(values).map(|(s, v)| s * v).sum();
        self.probs[idx]
    }

    /// Marginal on `set`, laid out like a table over the variables of `set`
    /// in context order.
    pub fn marginal(&self, set: VarSet) -> Vec<f64> {
        let vars: Vec<usize> = set.iter().collect();
        let mut mstrides = vec![1; vars.len()];
        for k in (0..vars.len().saturating_sub(1)).rev() {
            mstrides[k] = mstrides[k + 1] * self.sizes[vars[k + 1]];
        }
        let cells: usize = vars.iter().map(|&i| self.sizes[i]).product();
        let mut out = vec![0.0; cells];
        let strides = self.strides();
        for (idx, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let m: usize = vars
                .iter()
                .zip(&mstrides)
                .map(|(&i, ms)| idx / strides[i] % self.sizes[i] * ms)
                .sum();
            out[m] += p;
        }
        out
    }

    pub fn entropy(&self, set: VarSet) -> f64 {
        if set.is_empty() {
            return 0.0;
        }
        shannon_entropy(&self.marginal(set))
    }

    pub fn entropy_vector(&self) -> EntropyVector {
        let n = self.ctx.len();
        let values = (1..1u32 << n)
            .map(|m| self.entropy(VarSet::from_bits(m)))
            .collect();
        EntropyVector {
            ctx: self.ctx.clone(),
            values,
        }
    }
}

/// `-sum p log2 p`, skipping zero cells.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

/// `H(X_J)` for every nonempty `J`, indexed by `mask - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyVector {
    pub ctx: Arc<VarContext>,
    pub values: Vec<f64>,
}

impl EntropyVector {
    pub fn get(&self, set: VarSet) -> f64 {
        if set.is_empty() {
            0.0
        } else {
            self.values[set.bits() as usize - 1]
        }
    }
}

/// `sum_J c_J h(J)` with coefficients rounded to `f64`.
pub fn evaluate(f: &LinForm, h: &EntropyVector) -> Result<f64, PmfError> {
    if **f.ctx() != *h.ctx {
        return Err(LinFormError::ContextMismatch {
            left: f.ctx().names().join(","),
            right: h.ctx.names().join(","),
        }
        .into());
    }
    Ok(f.terms()
        .map(|(s, c)| c.to_f64().unwrap_or(f64::NAN) * h.get(s))
        .sum())
}

/// Builds `(A, B, C, A')` where `A'` is a `C`-copy of `A` over `B`:
/// mass `p(a, b, c) * p(a' | b)`. The copy is appended as the last variable,
/// named `<a>_copy`.
pub fn copy_distribution(
    p: &JointPmf,
    a: &str,
    b: &[&str],
    c: &[&str],
) -> Result<JointPmf, PmfError> {
    let ctx = p.ctx();
    let ai = ctx.require(a)?;
    let bset = ctx.set_of(b)?;
    let cset = ctx.set_of(c)?;
    let aset = VarSet::singleton(ai);
    if aset.intersects(bset) || aset.intersects(cset) || bset.intersects(cset) {
        return Err(PmfError::Partition("groups overlap".into()));
    }
    if aset.union(bset).union(cset) != ctx.full() || b.len() != bset.len() || c.len() != cset.len() {
        return Err(PmfError::Partition(
            "A, B and C must partition the variables".into(),
        ));
    }

    let mut copy_name = format!("{a}_copy");
    while ctx.index_of(&copy_name).is_some() {
        copy_name.push('_');
    }
    let out_ctx = Arc::new(VarContext::new(
        ctx.names().iter().cloned().chain(std::iter::once(copy_name)),
    )?);
    let asize = p.sizes[ai];
    let mut out_sizes = p.sizes.clone();
    out_sizes.push(asize);

    let p_ab = p.marginal(aset.union(bset));
    let p_b = p.marginal(bset);
    // index helpers into the (A,B) and B marginal tables
    let bvars: Vec<usize> = bset.iter().collect();
    let abvars: Vec<usize> = aset.union(bset).iter().collect();
    let index_in = |vars: &[usize], values: &[usize], override_a: Option<usize>| -> usize {
        vars.iter().fold(0, |acc, &i| {
            let v = if i == ai { override_a.unwrap_or(values[i]) } else { values[i] };
            acc * p.sizes[i] + v
        })
    };

    let mut probs = Vec::with_capacity(p.probs.len() * asize);
    for (idx, &mass) in p.probs.iter().enumerate() {
        let values = p.values_of(idx);
        let pb = p_b[index_in(&bvars, &values, None)];
        for a_copy in 0..asize {
            let cond = if pb > 0.0 {
                p_ab[index_in(&abvars, &values, Some(a_copy))] / pb
            } else {
                0.0
            };
            probs.push(mass * cond);
        }
    }
    // Rounding in the conditional can move the total by a few ulps.
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|q| *q /= total);
    JointPmf::new(out_ctx, out_sizes, probs)
}

/// Parses the text format:
///
/// ```text
/// # comment
/// A:2 B:2 C:3
/// 0 0 0 : 1/12
/// 0 1 2 : 0.25
/// ```
///
/// The header names each variable with its alphabet size; each further
/// line gives a value tuple and its probability (decimal or `p/q`). Cells
/// not listed have probability zero.
pub fn parse_pmf(text: &str) -> Result<JointPmf, PmfError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or(PmfError::Syntax {
        line: 1,
        msg: "missing header".into(),
    })?;
    let mut names = Vec::new();
    let mut sizes = Vec::new();
    for item in header.split_whitespace() {
        let (name, size) = item.split_once(':').ok_or_else(|| PmfError::Syntax {
            line: hline,
            msg: format!("expected NAME:SIZE, found `{item}`"),
        })?;
        names.push(name.to_string());
        sizes.push(size.parse::<usize>().map_err(|_| PmfError::Syntax {
            line: hline,
            msg: format!("bad alphabet size `{size}`"),
        })?);
    }
    let ctx = Arc::new(VarContext::new(names)?);
    let cells: usize = sizes.iter().product();
    let mut probs = vec![0.0; cells];
    let mut seen = vec![false; cells];
    for (line, l) in lines {
        let err = |msg: String| PmfError::Syntax { line, msg };
        let (vals, prob) = l
            .split_once(':')
            .ok_or_else(|| err("expected `values : probability`".into()))?;
        let vals: Vec<usize> = vals
            .split_whitespace()
            .map(|v| v.parse::<usize>().map_err(|_| err(format!("bad value `{v}`"))))
            .collect::<Result<_, _>>()?;
        if vals.len() != sizes.len() {
            return Err(err(format!("{} values for {} variables", vals.len(), sizes.len())));
        }
        let mut idx = 0;
        for (v, s) in vals.iter().zip(&sizes) {
            if v >= s {
                return Err(err(format!("value {v} outside alphabet of size {s}")));
            }
            idx = idx * s + v;
        }
        if seen[idx] {
            return Err(err("duplicate cell".into()));
        }
        seen[idx] = true;
        probs[idx] = parse_probability(prob.trim()).ok_or_else(|| err(format!("bad probability `{}`", prob.trim())))?;
    }
    JointPmf::new(ctx, sizes, probs)
}

fn parse_probability(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().ok()?;
            let d: f64 = d.trim().parse().ok()?;
            (d != 0.0).then(|| n / d)
        }
        None => s.parse().ok(),
    }
}

/// Inverse of [`parse_pmf`]; zero cells are omitted.
pub fn format_pmf(p: &JointPmf) -> String {
    let mut out = p
        .ctx
        .names()
        .iter()
        .zip(&p.sizes)
        .map(|(n, s)| format!("{n}:{s}"))
        .collect::<Vec<_>>()
        .join(" ");
    out.push('\n');
    for (idx, &prob) in p.probs.iter().enumerate() {
        if prob == 0.0 {
            continue;
        }
        let vals: Vec<String> = p.values_of(idx).iter().map(usize::to_string).collect();
        let _ = writeln!(out, "{} : {prob:e}", vals.join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_form;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn ctx(names: &[&str]) -> Arc<VarContext> {
        Arc::new(VarContext::new(names.iter().copied()).unwrap())
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn uniform_bit() {
        let p = JointPmf::new(ctx(&["A"]), vec![2], vec![0.5, 0.5]).unwrap();
        assert!(close(p.entropy_vector().get(VarSet::singleton(0)), 1.0));
    }

    #[test]
    fn independent_and_equal_bits() {
        let c = ctx(&["A", "B"]);
        let ind = JointPmf::new(c.clone(), vec![2, 2], vec![0.25; 4]).unwrap();
        let h = ind.entropy_vector();
        assert!(close(h.get(VarSet::singleton(0)), 1.0));
        assert!(close(h.get(VarSet::singleton(1)), 1.0));
        assert!(close(h.get(c.full()), 2.0));
        let mi = parse_form("I(A;B) >= 0", Some(&c)).unwrap();
        assert!(evaluate(&mi, &h).unwrap().abs() < 1e-12);

        let same = JointPmf::new(c.clone(), vec![2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let h = same.entropy_vector();
        for m in 1..4 {
            assert!(close(h.get(VarSet::from_bits(m)), 1.0));
        }
    }

    #[test]
    fn invalid_tables() {
        let c = ctx(&["A"]);
        assert!(JointPmf::new(c.clone(), vec![2], vec![0.7, 0.7]).is_err());
        assert!(JointPmf::new(c.clone(), vec![2], vec![1.5, -0.5]).is_err());
        assert!(JointPmf::new(c.clone(), vec![3], vec![0.5, 0.5]).is_err());
        assert!(JointPmf::new(c, vec![2, 2], vec![0.25; 4]).is_err());
    }

    #[test]
    fn evaluate_rejects_other_context() {
        let p = JointPmf::new(ctx(&["A"]), vec![2], vec![0.5, 0.5]).unwrap();
        let f = parse_form("H(B) >= 0", None).unwrap();
        assert!(evaluate(&f, &p.entropy_vector()).is_err());
    }

    #[test]
    fn copy_of_independent_variable() {
        let c = ctx(&["A", "B", "C"]);
        // A uniform and independent of (B, C)
        let p = JointPmf::new(c, vec![2, 2, 2], vec![0.125; 8]).unwrap();
        let q = copy_distribution(&p, "A", &["B"], &["C"]).unwrap();
        assert_eq!(q.ctx().names(), ["A", "B", "C", "A_copy"]);
        assert!(q.probs().iter().all(|&x| close(x, 1.0 / 16.0)));
    }

    #[test]
    fn copy_of_deterministic_variable() {
        let c = ctx(&["A", "B"]);
        let p = JointPmf::new(c, vec![2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let q = copy_distribution(&p, "A", &["B"], &[]).unwrap();
        for idx in 0..q.probs().len() {
            let v = q.values_of(idx);
            let expected = if v[0] == v[1] && v[1] == v[2] { 0.5 } else { 0.0 };
            assert!(close(q.probs()[idx], expected));
        }
    }

    #[test]
    fn copy_lemma_properties() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..20 {
            let p = JointPmf::random(ctx(&["A", "B", "C"]), vec![2, 2, 2], &mut rng);
            let q = copy_distribution(&p, "A", &["B"], &["C"]).unwrap();
            let qc = q.ctx().clone();
            // (A', B) ~ (A, B)
            let ab = q.marginal(qc.set_of(&["A", "B"]).unwrap());
            let cb = q.marginal(qc.set_of(&["B", "A_copy"]).unwrap());
            // marginal over {B, A_copy} is laid out B-major; (A,B) is A-major
            for a in 0..2 {
                for b in 0..2 {
                    assert!((ab[a * 2 + b] - cb[b * 2 + a]).abs() < DIST_TOL);
                }
            }
            let mi = parse_form("I(A_copy; A,C | B) >= 0", Some(&qc)).unwrap();
            assert!(evaluate(&mi, &q.entropy_vector()).unwrap().abs() < DIST_TOL);
            // restriction to (A, B, C) is the input
            let back = q.marginal(qc.set_of(&["A", "B", "C"]).unwrap());
            for (x, y) in back.iter().zip(p.probs()) {
                assert!((x - y).abs() < DIST_TOL);
            }
        }
    }

    #[test]
    fn copy_partition_errors() {
        let p = JointPmf::new(ctx(&["A", "B", "C"]), vec![2, 2, 2], vec![0.125; 8]).unwrap();
        assert!(copy_distribution(&p, "A", &["B"], &[]).is_err());
        assert!(copy_distribution(&p, "A", &["A", "B"], &["C"]).is_err());
        assert!(copy_distribution(&p, "Q", &["B"], &["C"]).is_err());
    }

    #[test]
    fn text_format() {
        let text = "# two bits\nA:2 B:2\n0 0 : 1/2\n1 1 : 0.5\n";
        let p = parse_pmf(text).unwrap();
        assert_eq!(p.probs(), &[0.5, 0.0, 0.0, 0.5]);
        let again = parse_pmf(&format_pmf(&p)).unwrap();
        assert_eq!(again, p);

        assert!(matches!(parse_pmf(""), Err(PmfError::Syntax { .. })));
        assert!(matches!(
            parse_pmf("A:2\n2 : 1"),
            Err(PmfError::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            parse_pmf("A:2\n0 : 1\n0 : 0"),
            Err(PmfError::Syntax { line: 3, .. })
        ));
        assert!(matches!(parse_pmf("A:2\n0 : 0.4"), Err(PmfError::Invalid(_))));
    }
}
