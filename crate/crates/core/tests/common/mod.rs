//! Generators and independent oracles shared by the integration tests.
//!
//! The oracles here rebuild entropy coordinates from bitmasks directly and
//! never call into the crate's elemental or LP code.

#![allow(dead_code)]

use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use entroprover::linform::{LinForm, Rat, VarContext, VarSet};
use entroprover::rules::Partition;

pub const ZY_PREMISE: &str =
    "I(C;D) <= I(C;D|A)+I(C;D|B)+I(A;B)+I(C;D|Z)+I(Z;C|D)+I(Z;D|C)+3I(Z;AB|CD)";
pub const ZY_STATEMENT: &str = "I(C;D) <= I(C;D|A)+I(C;D|B)+I(A;B)+I(C;D|A)+I(A;C|D)+I(A;D|C)";
pub const MMRV_PREMISE: &str = "H(Z) <= I(C;D|A)+I(C;D|B)+I(A;B)+2H(Z|C)+2H(Z|D)";
pub const MMRV_STATEMENT: &str = "I(C;D) <= I(C;D|A)+I(C;D|B)+I(A;B)+I(C;D|E)+I(E;C|D)+I(E;D|C)";

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn letters(n: usize) -> Arc<VarContext> {
    Arc::new(VarContext::letters(n).unwrap())
}

pub fn script_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scripts")
        .join(name)
}

/// Rational with numerator in `-6..=6` and denominator in `1..=4`.
pub fn small_rat(rng: &mut StdRng) -> Rat {
    Rat::new(rng.random_range(-6i64..=6).into(), rng.random_range(1i64..=4).into())
}

/// Strictly positive rational.
pub fn pos_rat(rng: &mut StdRng) -> Rat {
    Rat::new(rng.random_range(1i64..=6).into(), rng.random_range(1i64..=4).into())
}

/// Uniform nonempty subset of `within`.
pub fn random_subset(rng: &mut StdRng, within: VarSet) -> VarSet {
    let members: Vec<usize> = within.iter().collect();
    loop {
        let s = members
            .iter()
            .filter(|_| rng.random_bool(0.5))
            .fold(VarSet::EMPTY, |acc, &i| acc.with(i));
        if !s.is_empty() {
            return s;
        }
    }
}

/// Up to `terms` random coefficients on nonempty subsets of `within`.
pub fn random_form_within(rng: &mut StdRng, ctx: &Arc<VarContext>, within: VarSet, terms: usize) -> LinForm {
    if within.is_empty() {
        return LinForm::zero(ctx.clone());
    }
    let pairs: Vec<(VarSet, Rat)> = (0..terms)
        .map(|_| (random_subset(rng, within), small_rat(rng)))
        .collect();
    LinForm::from_terms(ctx.clone(), pairs)
}

pub fn random_form(rng: &mut StdRng, ctx: &Arc<VarContext>, terms: usize) -> LinForm {
    random_form_within(rng, ctx, ctx.full(), terms)
}

/// A premise in rule shape `f + g + alpha * I(z; X | Y)`, with its parts.
pub struct Shape {
    pub ctx: Arc<VarContext>,
    pub partition: Partition,
    pub f: LinForm,
    pub g: LinForm,
    pub alpha: Rat,
}

impl Shape {
    pub fn copy_term(&self) -> LinForm {
        let p = &self.partition;
        LinForm::mutual_info(self.ctx.clone(), VarSet::singleton(p.z), p.x, p.y)
    }

    pub fn premise(&self) -> LinForm {
        self.f
            .add(&self.g)
            .unwrap()
            .add_scaled(&self.copy_term(), &self.alpha)
            .unwrap()
    }

    /// Coefficient sum of `g` over sets containing `z`, computed from terms.
    pub fn g_residual(&self) -> Rat {
        coefficient_sum(&self.g, self.partition.z)
    }

    /// Shifts `g` by `c * H(z, Y)`, which moves its `z`-residual by `c`.
    pub fn shift_residual(&mut self, c: &Rat) {
        let zy = self.partition.y.with(self.partition.z);
        let shift = LinForm::from_terms(self.ctx.clone(), [(zy, c.clone())]);
        self.g = self.g.add(&shift).unwrap();
    }
}

/// Random shape on `n >= 2` variables: `f` on subsets of `X u Y`, `g` on
/// subsets of `Y u {z}` that contain `z`, `alpha >= 0`.
pub fn random_shape(rng: &mut StdRng, n: usize) -> Shape {
    let ctx = letters(n);
    let z = rng.random_range(0..n);
    let others = ctx.full().without(z);
    let x = random_subset(rng, others);
    let y = others.difference(x);
    let partition = Partition::new(&ctx, z, x, y).unwrap();
    let f_terms = rng.random_range(0..=6);
    let f = random_form_within(rng, &ctx, x.union(y), f_terms);
    let g_pairs: Vec<(VarSet, Rat)> = (0..rng.random_range(0..=4))
        .map(|_| {
            let extra = if y.is_empty() || rng.random_bool(0.3) {
                VarSet::EMPTY
            } else {
                random_subset(rng, y)
            };
            (extra.with(z), small_rat(rng))
        })
        .collect();
    let g = LinForm::from_terms(ctx.clone(), g_pairs);
    let alpha = if rng.random_bool(0.2) {
        Rat::zero()
    } else {
        pos_rat(rng)
    };
    Shape {
        ctx,
        partition,
        f,
        g,
        alpha,
    }
}

/// Coefficient sum over sets containing `v`, straight from the terms.
pub fn coefficient_sum(f: &LinForm, v: usize) -> Rat {
    f.terms()
        .filter(|(s, _)| s.contains(v))
        .fold(Rat::zero(), |acc, (_, c)| acc + c)
}

pub fn balanced_for(f: &LinForm, v: usize) -> bool {
    coefficient_sum(f, v).is_zero()
}

// ---- dense oracles over coordinates indexed by mask - 1 ----

pub fn dim(n: usize) -> usize {
    (1usize << n) - 1
}

/// `sum c * h(mask)` as a dense vector; mask 0 is dropped.
pub fn dense(n: usize, terms: &[(u32, i64)]) -> Vec<Rat> {
    let mut v = vec![Rat::zero(); dim(n)];
    for &(mask, c) in terms {
        if mask != 0 {
            v[mask as usize - 1] += Rat::from_integer(c.into());
        }
    }
    v
}

/// The elemental inequalities rebuilt from their entropy expansions:
/// `h(N) - h(N - i)` and `h(iK) + h(jK) - h(ijK) - h(K)`.
pub fn oracle_elementals(n: usize) -> Vec<Vec<Rat>> {
    let full: u32 = (1 << n) - 1;
    let mut out = Vec::new();
    for i in 0..n {
        out.push(dense(n, &[(full, 1), (full & !(1 << i), -1)]));
    }
    for i in 0..n {
        for j in i + 1..n {
            let rest = full & !(1 << i) & !(1 << j);
            for k in 0..=full {
                if k & !rest != 0 {
                    continue;
                }
                let (bi, bj) = (1u32 << i, 1u32 << j);
                out.push(dense(n, &[(bi | k, 1), (bj | k, 1), (bi | bj | k, -1), (k, -1)]));
            }
        }
    }
    out
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).fold(Rat::zero(), |acc, (x, y)| acc + x * y)
}

/// Nullspace of a `rows x cols` rational matrix by exact Gauss-Jordan
/// elimination; returns a basis.
pub fn nullspace(rows: &[Vec<Rat>], cols: usize) -> Vec<Vec<Rat>> {
    let mut m: Vec<Vec<Rat>> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = Rat::one() / &m[r][c];
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let factor = m[i][c].clone();
                for k in 0..cols {
                    let delta = &factor * &m[r][k];
                    m[i][k] -= delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == m.len() {
            break;
        }
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![Rat::zero(); cols];
            v[fc] = Rat::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[row][fc].clone();
            }
            v
        })
        .collect()
}

/// Extreme rays of the pointed cone `{h : e . h >= 0 for every e}`,
/// found by trying every `(d-1)`-subset of the constraints as the active
/// set. Rays are scaled so their first nonzero entry is `+-1`.
pub fn extreme_rays(constraints: &[Vec<Rat>], d: usize) -> Vec<Vec<Rat>> {
    let mut rays: Vec<Vec<Rat>> = Vec::new();
    let m = constraints.len();
    let mut chosen = Vec::new();
    subsets_of_size(m, d - 1, 0, &mut chosen, &mut |idx| {
        let rows: Vec<Vec<Rat>> = idx.iter().map(|&i| constraints[i].clone()).collect();
        let basis = nullspace(&rows, d);
        if basis.len() != 1 {
            return;
        }
        for sign in [Rat::one(), -Rat::one()] {
            let v: Vec<Rat> = basis[0].iter().map(|x| x * &sign).collect();
            if constraints.iter().all(|e| !dot(e, &v).is_negative()) {
                let lead = v.iter().find(|x| !x.is_zero()).unwrap().abs();
                let v: Vec<Rat> = v.iter().map(|x| x / &lead).collect();
                if !rays.contains(&v) {
                    rays.push(v);
                }
            }
        }
    });
    rays
}

fn subsets_of_size(m: usize, k: usize, start: usize, cur: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
    if cur.len() == k {
        visit(cur);
        return;
    }
    for i in start..m {
        if m - i < k - cur.len() {
            break;
        }
        cur.push(i);
        subsets_of_size(m, k, i + 1, cur, visit);
        cur.pop();
    }
}

/// `f >= 0` is Shannon-type iff it is nonnegative on every extreme ray of
/// the polymatroid cone.
pub fn oracle_is_shannon(f: &[Rat], rays: &[Vec<Rat>]) -> bool {
    rays.iter().all(|r| !dot(f, r).is_negative())
}
