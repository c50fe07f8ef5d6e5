//! Syntax trees of noncommutative rational expressions, the star involution,
//! the τ complexity measure, sub-expression sets and matrix evaluation.
//!
//! Expressions are built exclusively through the normalizing constructors
//! [`constant`], [`var`], [`sum`], [`product`], [`inverse`] and [`star`].
//! Normalization performs constant folding (`0 + e → e`, `1 * e → e`,
//! arithmetic on constant pairs), moves scalar factors to the left of
//! products (scalars are central in the free algebra) and pushes the star
//! involution down to the leaves, where `xⱼ* = xⱼ` and `α* = ᾱ`. A
//! consequence is that no `Star` node survives normalization and structural
//! equality can be used for sub-expression deduplication. Unary minus is
//! sugar: `-e` is `(-1)·e`, and `a - b` is `a + (-1)·b`, which keeps the τ
//! rules exact.

mod eval;
mod parse;
mod sample;

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_complex::Complex64;

use crate::linalg::Field;
use crate::{Error, Result};

pub use eval::{
    eval_mp, eval_scalar, eval_strict, EvalOptions, MatrixPoint, Outcome, COND_THRESHOLD,
};
pub use parse::parse;
pub use sample::{
    find_scalar_center, random_expr, random_expr_seeded, random_point, random_regular_expr,
    random_selfadjoint_point, random_selfadjoint_point_seeded, CENTER_MARGIN,
};

/// Shared handle to an expression node.
pub type ExprRef = Arc<Expr>;

/// A node of a noncommutative rational expression.
///
/// `Var` indices are 1-based. There is no `Star` or `Negate` variant: both
/// normalize away (see module docs).
#[derive(Debug)]
pub enum Expr {
    Const(Complex64),
    Var(usize),
    Sum(ExprRef, ExprRef),
    Product(ExprRef, ExprRef),
    Inverse(ExprRef),
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Expr::Const(a), Expr::Const(b)) => {
                a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()
            }
            (Expr::Var(i), Expr::Var(j)) => i == j,
            (Expr::Sum(a1, b1), Expr::Sum(a2, b2))
            | (Expr::Product(a1, b1), Expr::Product(a2, b2)) => {
                (Arc::ptr_eq(a1, a2) || a1 == a2) && (Arc::ptr_eq(b1, b2) || b1 == b2)
            }
            (Expr::Inverse(a), Expr::Inverse(b)) => Arc::ptr_eq(a, b) || a == b,
            _ => false,
        }
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Expr::Const(z) => {
                0u8.hash(state);
                z.re.to_bits().hash(state);
                z.im.to_bits().hash(state);
            }
            Expr::Var(j) => {
                1u8.hash(state);
                j.hash(state);
            }
            Expr::Sum(a, b) => {
                2u8.hash(state);
                a.hash(state);
                b.hash(state);
            }
            Expr::Product(a, b) => {
                3u8.hash(state);
                a.hash(state);
                b.hash(state);
            }
            Expr::Inverse(a) => {
                4u8.hash(state);
                a.hash(state);
            }
        }
    }
}

fn canon(z: Complex64) -> Complex64 {
    // collapse -0.0 so bitwise structural equality behaves
    let re = if z.re == 0.0 { 0.0 } else { z.re };
    let im = if z.im == 0.0 { 0.0 } else { z.im };
    Complex64::new(re, im)
}

/// Constant node.
pub fn constant(z: Complex64) -> ExprRef {
    Arc::new(Expr::Const(canon(z)))
}

/// Real constant node.
pub fn constant_re(x: f64) -> ExprRef {
    constant(Complex64::new(x, 0.0))
}

/// Variable node, 1-based index.
pub fn var(j: usize) -> ExprRef {
    assert!(j >= 1, "variable indices are 1-based");
    Arc::new(Expr::Var(j))
}

fn as_const(e: &Expr) -> Option<Complex64> {
    match e {
        Expr::Const(z) => Some(*z),
        _ => None,
    }
}

/// Sum with constant folding: `Const ⊕ Const` folds, `0` is dropped.
pub fn sum(a: ExprRef, b: ExprRef) -> ExprRef {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => return constant(x + y),
        (Some(x), None) if x == Complex64::ZERO => return b,
        (None, Some(y)) if y == Complex64::ZERO => return a,
        _ => {}
    }
    Arc::new(Expr::Sum(a, b))
}

/// Product with constant folding; scalar factors move to the left since
/// scalars are central.
pub fn product(a: ExprRef, b: ExprRef) -> ExprRef {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => return constant(x * y),
        (Some(x), None) if x == Complex64::new(1.0, 0.0) => return b,
        (None, Some(y)) if y == Complex64::new(1.0, 0.0) => return a,
        (None, Some(y)) => return product(constant(y), a),
        (Some(x), None) => {
            // collapse nested scalar factors: α(βe) = (αβ)e
            if let Expr::Product(l, r) = &*b {
                if let Some(beta) = as_const(l) {
                    return product(constant(x * beta), r.clone());
                }
            }
            return Arc::new(Expr::Product(constant(x), b));
        }
        _ => {}
    }
    Arc::new(Expr::Product(a, b))
}

/// Inverse node. `inv(0)` stays structural (degenerate but representable).
pub fn inverse(e: ExprRef) -> ExprRef {
    Arc::new(Expr::Inverse(e))
}

/// `-e`, desugared to `(-1)·e`.
pub fn negate(e: ExprRef) -> ExprRef {
    product(constant_re(-1.0), e)
}

/// `a - b`, desugared to `a + (-1)·b`.
pub fn difference(a: ExprRef, b: ExprRef) -> ExprRef {
    sum(a, negate(b))
}

/// The star involution, pushed down to the leaves: `α* = ᾱ`, `xⱼ* = xⱼ`,
/// `(a+b)* = a* + b*`, `(ab)* = b*a*`, `(a⁻¹)* = (a*)⁻¹`.
pub fn star(e: &ExprRef) -> ExprRef {
    let mut memo: HashMap<*const Expr, ExprRef> = HashMap::new();
    star_memo(e, &mut memo)
}

fn star_memo(e: &ExprRef, memo: &mut HashMap<*const Expr, ExprRef>) -> ExprRef {
    let key = Arc::as_ptr(e);
    if let Some(hit) = memo.get(&key) {
        return hit.clone();
    }
    let out = match &**e {
        Expr::Const(z) => constant(z.conj()),
        Expr::Var(_) => e.clone(),
        Expr::Sum(a, b) => sum(star_memo(a, memo), star_memo(b, memo)),
        Expr::Product(a, b) => product(star_memo(b, memo), star_memo(a, memo)),
        Expr::Inverse(a) => inverse(star_memo(a, memo)),
    };
    memo.insert(key, out.clone());
    out
}

/// τ complexity: constants 0, variables 1, sums take the max, products add,
/// inverses double. Saturating on overflow.
pub fn tau(e: &ExprRef) -> u64 {
    let mut memo: HashMap<*const Expr, u64> = HashMap::new();
    tau_memo(e, &mut memo)
}

fn tau_memo(e: &ExprRef, memo: &mut HashMap<*const Expr, u64>) -> u64 {
    let key = Arc::as_ptr(e);
    if let Some(&hit) = memo.get(&key) {
        return hit;
    }
    let out = match &**e {
        Expr::Const(_) => 0,
        Expr::Var(_) => 1,
        Expr::Sum(a, b) => tau_memo(a, memo).max(tau_memo(b, memo)),
        Expr::Product(a, b) => tau_memo(a, memo).saturating_add(tau_memo(b, memo)),
        Expr::Inverse(a) => tau_memo(a, memo).saturating_mul(2),
    };
    memo.insert(key, out);
    out
}

/// Occurrence counts used by the equality-sampling bound: constant terms,
/// variable symbols and inverses, with multiplicity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OccurrenceCounts {
    pub constants: u64,
    pub symbols: u64,
    pub inverses: u64,
}

pub fn occurrence_counts(e: &ExprRef) -> OccurrenceCounts {
    let mut memo: HashMap<*const Expr, OccurrenceCounts> = HashMap::new();
    counts_memo(e, &mut memo)
}

fn counts_memo(e: &ExprRef, memo: &mut HashMap<*const Expr, OccurrenceCounts>) -> OccurrenceCounts {
    let key = Arc::as_ptr(e);
    if let Some(&hit) = memo.get(&key) {
        return hit;
    }
    let out = match &**e {
        Expr::Const(_) => OccurrenceCounts {
            constants: 1,
            symbols: 0,
            inverses: 0,
        },
        Expr::Var(_) => OccurrenceCounts {
            constants: 0,
            symbols: 1,
            inverses: 0,
        },
        Expr::Sum(a, b) | Expr::Product(a, b) => {
            let ca = counts_memo(a, memo);
            let cb = counts_memo(b, memo);
            OccurrenceCounts {
                constants: ca.constants + cb.constants,
                symbols: ca.symbols + cb.symbols,
                inverses: ca.inverses + cb.inverses,
            }
        }
        Expr::Inverse(a) => {
            let ca = counts_memo(a, memo);
            OccurrenceCounts {
                constants: ca.constants,
                symbols: ca.symbols,
                inverses: ca.inverses + 1,
            }
        }
    };
    memo.insert(key, out);
    out
}

/// Largest variable index appearing in the expression (0 for none).
pub fn max_var_index(e: &ExprRef) -> usize {
    fn walk(e: &Expr, seen: &mut HashSet<*const Expr>, max: &mut usize) {
        match e {
            Expr::Const(_) => {}
            Expr::Var(j) => *max = (*max).max(*j),
            Expr::Sum(a, b) | Expr::Product(a, b) => {
                if seen.insert(Arc::as_ptr(a)) {
                    walk(a, seen, max);
                }
                if seen.insert(Arc::as_ptr(b)) {
                    walk(b, seen, max);
                }
            }
            Expr::Inverse(a) => {
                if seen.insert(Arc::as_ptr(a)) {
                    walk(a, seen, max);
                }
            }
        }
    }
    let mut max = 0;
    let mut seen = HashSet::new();
    walk(e, &mut seen, &mut max);
    max
}

/// The set Q: all sub-expressions of `e` together with their stars, ordered
/// (children before parents, stars appended), deduplicated structurally.
#[derive(Debug, Clone)]
pub struct SubexpressionSet {
    elements: Vec<ExprRef>,
    /// how many of `elements` are plain sub-expressions, before star closure
    pub subexpression_count: usize,
}

impl SubexpressionSet {
    pub fn elements(&self) -> &[ExprRef] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, e: &ExprRef) -> bool {
        self.elements.iter().any(|q| q == e)
    }
}

/// Collect the sub-expression set of `e` and close it under the star map.
pub fn subexpressions(e: &ExprRef) -> SubexpressionSet {
    let mut seen: HashSet<ExprRef> = HashSet::new();
    let mut elements: Vec<ExprRef> = Vec::new();
    collect_post_order(e, &mut seen, &mut elements);
    let subexpression_count = elements.len();
    for i in 0..subexpression_count {
        let st = star(&elements[i]);
        if seen.insert(st.clone()) {
            elements.push(st);
        }
    }
    SubexpressionSet {
        elements,
        subexpression_count,
    }
}

fn collect_post_order(e: &ExprRef, seen: &mut HashSet<ExprRef>, out: &mut Vec<ExprRef>) {
    match &**e {
        Expr::Const(_) | Expr::Var(_) => {}
        Expr::Sum(a, b) | Expr::Product(a, b) => {
            collect_post_order(a, seen, out);
            collect_post_order(b, seen, out);
        }
        Expr::Inverse(a) => {
            collect_post_order(a, seen, out);
        }
    }
    if seen.insert(e.clone()) {
        out.push(e.clone());
    }
}

/// Substitute `xⱼ ← xⱼ + λⱼ`. Zero shifts fold away, so `shift(e, 0)`
/// is structurally `e`.
pub fn shift(e: &ExprRef, lambda: &[f64]) -> ExprRef {
    let mut memo: HashMap<*const Expr, ExprRef> = HashMap::new();
    shift_memo(e, lambda, &mut memo)
}

fn shift_memo(e: &ExprRef, lambda: &[f64], memo: &mut HashMap<*const Expr, ExprRef>) -> ExprRef {
    let key = Arc::as_ptr(e);
    if let Some(hit) = memo.get(&key) {
        return hit.clone();
    }
    let out = match &**e {
        Expr::Const(_) => e.clone(),
        Expr::Var(j) => {
            let off = lambda.get(*j - 1).copied().unwrap_or(0.0);
            sum(var(*j), constant_re(off))
        }
        Expr::Sum(a, b) => sum(shift_memo(a, lambda, memo), shift_memo(b, lambda, memo)),
        Expr::Product(a, b) => product(shift_memo(a, lambda, memo), shift_memo(b, lambda, memo)),
        Expr::Inverse(a) => inverse(shift_memo(a, lambda, memo)),
    };
    memo.insert(key, out.clone());
    out
}

fn fmt_const(z: Complex64, out: &mut String) {
    if z.im == 0.0 {
        let _ = write!(out, "{}", z.re);
    } else {
        let _ = write!(out, "({} ", z.re);
        if z.im < 0.0 {
            let _ = write!(out, "- {} * i)", -z.im);
        } else {
            let _ = write!(out, "+ {} * i)", z.im);
        }
    }
}

fn fmt_expr(e: &Expr, parent_prec: u8, out: &mut String) {
    let prec = match e {
        Expr::Sum(..) => 0,
        Expr::Product(..) => 1,
        _ => 2,
    };
    let parens = prec < parent_prec;
    if parens {
        out.push('(');
    }
    match e {
        Expr::Const(z) => fmt_const(*z, out),
        Expr::Var(j) => {
            let _ = write!(out, "x{j}");
        }
        Expr::Sum(a, b) => {
            fmt_expr(a, 0, out);
            // print `a + (-1)·c` as `a - c`
            if let Expr::Product(l, r) = &**b {
                if as_const(l) == Some(Complex64::new(-1.0, 0.0)) {
                    out.push_str(" - ");
                    fmt_expr(r, 2, out);
                    if parens {
                        out.push(')');
                    }
                    return;
                }
            }
            out.push_str(" + ");
            fmt_expr(b, 1, out);
        }
        Expr::Product(a, b) => {
            fmt_expr(a, 1, out);
            out.push_str(" * ");
            fmt_expr(b, 2, out);
        }
        Expr::Inverse(a) => {
            out.push_str("inv(");
            fmt_expr(a, 0, out);
            out.push(')');
        }
    }
    if parens {
        out.push(')');
    }
}

/// Render an expression in the grammar accepted by [`parse`]; parsing the
/// result yields a structurally identical tree.
pub fn format_expr(e: &ExprRef) -> String {
    let mut out = String::new();
    fmt_expr(e, 0, &mut out);
    out
}

/// A rational expression with its ambient context: the number of variables
/// and the scalar field.
#[derive(Debug, Clone)]
pub struct RationalExpr {
    pub root: ExprRef,
    pub nvars: usize,
    pub field: Field,
}

impl RationalExpr {
    pub fn new(root: ExprRef, nvars: usize, field: Field) -> Result<RationalExpr> {
        let max = max_var_index(&root);
        if max > nvars {
            return Err(Error::VarOutOfRange {
                index: max,
                nvars,
            });
        }
        if field == Field::Real && has_complex_const(&root) {
            return Err(Error::FieldMismatch("complex constant in real expression"));
        }
        Ok(RationalExpr { root, nvars, field })
    }

    pub fn tau(&self) -> u64 {
        tau(&self.root)
    }

    pub fn star(&self) -> RationalExpr {
        RationalExpr {
            root: star(&self.root),
            nvars: self.nvars,
            field: self.field,
        }
    }

    pub fn subexpressions(&self) -> SubexpressionSet {
        subexpressions(&self.root)
    }

    pub fn shift(&self, lambda: &[f64]) -> RationalExpr {
        RationalExpr {
            root: shift(&self.root, lambda),
            nvars: self.nvars,
            field: self.field,
        }
    }

    pub fn format(&self) -> String {
        format_expr(&self.root)
    }

    /// Replace the root, keeping the context.
    pub fn with_root(&self, root: ExprRef) -> RationalExpr {
        RationalExpr {
            root,
            nvars: self.nvars,
            field: self.field,
        }
    }
}

impl std::fmt::Display for RationalExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.format())
    }
}

fn has_complex_const(e: &ExprRef) -> bool {
    let mut seen = HashSet::new();
    fn walk(e: &Expr, seen: &mut HashSet<*const Expr>) -> bool {
        match e {
            Expr::Const(z) => z.im != 0.0,
            Expr::Var(_) => false,
            Expr::Sum(a, b) | Expr::Product(a, b) => {
                (seen.insert(Arc::as_ptr(a)) && walk(a, seen))
                    || (seen.insert(Arc::as_ptr(b)) && walk(b, seen))
            }
            Expr::Inverse(a) => seen.insert(Arc::as_ptr(a)) && walk(a, seen),
        }
    }
    walk(e, &mut seen)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> ExprRef {
        constant_re(x)
    }

    #[test]
    fn tau_rules() {
        // ((2+x1)^{-1} x2) x1^{-1}: max(0,1)=1, inverse → 2, product +1 → 3, +2 → 5
        let e = product(
            product(inverse(sum(c(2.0), var(1))), var(2)),
            inverse(var(1)),
        );
        assert_eq!(tau(&e), 5);
        assert_eq!(tau(&var(1)), 1);
        assert_eq!(tau(&c(7.0)), 0);
    }

    #[test]
    fn tau_star_invariant() {
        let e = product(
            product(inverse(sum(c(2.0), var(1))), var(2)),
            inverse(var(1)),
        );
        assert_eq!(tau(&e), tau(&star(&e)));
    }

    #[test]
    fn subexpressions_of_paper_example() {
        // sub-expressions of ((2+x1)^{-1} x2) x1^{-1} before star closure:
        // 2, x1, 2+x1, (2+x1)^{-1}, x2, (2+x1)^{-1} x2, x1^{-1}, the whole thing
        let e = product(
            product(inverse(sum(c(2.0), var(1))), var(2)),
            inverse(var(1)),
        );
        let q = subexpressions(&e);
        assert_eq!(q.subexpression_count, 8);
        assert!(q.contains(&e));
    }

    #[test]
    fn subexpressions_of_var_star_fixed() {
        let q = subexpressions(&var(1));
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn star_closure_contains_conjugated_scalar() {
        // (i·x1)* = -i·x1
        let i = constant(Complex64::new(0.0, 1.0));
        let e = product(i, var(1));
        let q = subexpressions(&e);
        let neg_i_x1 = product(constant(Complex64::new(0.0, -1.0)), var(1));
        assert!(q.contains(&neg_i_x1));
    }

    #[test]
    fn star_is_involution() {
        let e = product(
            sum(var(1), product(constant(Complex64::new(0.0, 2.0)), var(2))),
            inverse(sum(c(1.0), product(var(2), var(1)))),
        );
        assert_eq!(star(&star(&e)), e);
    }

    #[test]
    fn star_antihomomorphism_shape() {
        // (x1 x2)* = x2 x1
        let e = product(var(1), var(2));
        assert_eq!(star(&e), product(var(2), var(1)));
    }

    #[test]
    fn shift_folds_zero() {
        let e = product(inverse(var(1)), sum(var(2), c(3.0)));
        assert_eq!(shift(&e, &[0.0, 0.0]), e);
        assert_eq!(shift(&var(1), &[1.0]), sum(var(1), c(1.0)));
    }

    #[test]
    fn constant_folding() {
        assert_eq!(sum(c(2.0), c(3.0)), c(5.0));
        assert_eq!(product(c(2.0), c(3.0)), c(6.0));
        assert_eq!(sum(c(0.0), var(1)), var(1));
        assert_eq!(product(c(1.0), var(1)), var(1));
        // scalars move left
        assert_eq!(product(var(1), c(2.0)), product(c(2.0), var(1)));
        // nested scalar collapse
        assert_eq!(
            product(c(2.0), product(c(3.0), var(1))),
            product(c(6.0), var(1))
        );
    }

    #[test]
    fn format_round_trip_basics() {
        let e = product(
            product(inverse(sum(c(2.0), var(1))), var(2)),
            inverse(var(1)),
        );
        let text = format_expr(&e);
        let back = parse(&text, 2, Field::Real).unwrap();
        assert_eq!(back.root, e);
    }

    #[test]
    fn occurrence_counts_for_kappa() {
        // x1: one symbol
        let counts = occurrence_counts(&var(1));
        assert_eq!(counts.symbols, 1);
        assert_eq!(counts.constants, 0);
        assert_eq!(counts.inverses, 0);
        let e = product(inverse(sum(c(1.0), product(var(1), var(1)))), var(2));
        let counts = occurrence_counts(&e);
        assert_eq!(counts.constants, 1);
        assert_eq!(counts.symbols, 3);
        assert_eq!(counts.inverses, 1);
    }
}
