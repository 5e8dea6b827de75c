//! Exact reasoning about linear information inequalities.
//!
//! Inequalities are linear forms over joint entropies with rational
//! coefficients. The crate decides Shannon-type membership with an exact
//! simplex, balances forms, and applies the copy-lemma style rules that turn
//! Shannon-type premises into non-Shannon inequalities.
//!
//! ```
//! use entroprover::{check_shannon, parse_form};
//!
//! let f = parse_form("I(A;B|C) >= 0", None).unwrap();
//! assert!(check_shannon(&f).unwrap().is_shannon());
//! ```

pub mod balance;
pub mod engine;
pub mod expr;
pub mod linform;
pub mod lp;
pub mod rules;
pub mod semantics;
pub mod shannon;

pub use balance::{balance, is_balanced, is_balanced_for};
pub use engine::{run_script, Pool, Provability, Provenance, SystemKind, Transcript};
pub use expr::{parse, parse_form, render, Inequality, ParseError, Relation};
pub use linform::{rat, ratio, LinForm, LinFormError, Rat, VarContext, VarSet};
pub use rules::{apply_mmrv, apply_zy, decompose_zy, substitute, Partition, RuleError};
pub use semantics::{copy_distribution, parse_pmf, JointPmf};
pub use shannon::{check_shannon, elementals, Certificate, ShannonVerdict, Witness};
