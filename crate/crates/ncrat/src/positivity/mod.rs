//! Global positivity of rational expressions: sum-of-hermitian-squares
//! certification, positively elliptic realizations, Moore-Penrose
//! counterexamples and the strict-positivity test.
//!
//! The search space for squares is `V_k`, the span of words of length ≤ k
//! over the sub-expression set Q̃ of the target expression. `V_k` is
//! enumerated as functions, not expressions: candidates are screened by
//! evaluation at random domain points, so that expressions which agree as
//! functions collapse to one basis element. Two desk-scale devices keep the
//! search tractable and are recorded in the certificate:
//!
//! * candidates are visited in order of increasing τ and kept only while a
//!   dimension budget lasts;
//! * a candidate w is pruned when `‖w(X)‖²` exceeds a generous multiple of
//!   `1 + ‖r(X)‖` on scaled sample points — in any decomposition
//!   `r = Σ sⱼ*sⱼ` each square satisfies `‖sⱼ(X)‖² ≤ ‖r(X)‖`, so wildly
//!   unbounded words can only participate through cancellations, which the
//!   generous threshold still allows at moderate scale.
//!
//! Certificates are validated after the fact by residual sampling, so
//! neither device can manufacture a false positive.

mod mp;
mod sohs;

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use nalgebra::DVector;

use crate::linalg::Field;
use crate::ncexpr::{
    constant_re, eval_strict, find_scalar_center, occurrence_counts, product,
    random_selfadjoint_point, tau, EvalOptions, ExprRef, MatrixPoint, Outcome, RationalExpr,
};
use crate::realization::minimal_realization;
use crate::{Error, Result};

pub use mp::mp_counterexample;

/// Test/debug helper: describe the Gram outcome at a basis.
pub fn debug_solve_gram(
    e: &RationalExpr,
    basis: &RationalBasis,
    opts: &SohsOptions,
) -> Result<String> {
    Ok(match sohs::solve_gram(e, basis, opts)? {
        sohs::GramOutcome::Feasible(g) => format!("feasible, gram dim {}", g.rows()),
        sohs::GramOutcome::Infeasible { certified, .. } => {
            format!("infeasible (certified: {certified})")
        }
        sohs::GramOutcome::NotRepresentable => "not representable".into(),
        sohs::GramOutcome::Undetermined(msg) => format!("undetermined: {msg}"),
    })
}
pub use sohs::{
    positively_elliptic_realization, sohs_decompose, ResidualStats, SohsCertificate, SohsOptions,
};

/// Options for the numerical basis enumeration of V_k.
#[derive(Debug, Clone)]
pub struct BasisOptions {
    /// Dimension budget for the basis.
    pub max_dim: usize,
    /// Cap on enumerated candidates.
    pub enum_cap: usize,
    /// Prune a word w when max ‖w(X)‖²/(1+‖r(X)‖) exceeds this.
    pub prune_ratio: f64,
    /// (matrix size, number of points) per size for the screening samples.
    pub sizes: Vec<(usize, usize)>,
    /// Scale ladder applied to the screening points.
    pub scales: Vec<f64>,
    pub seed: u64,
}

impl Default for BasisOptions {
    fn default() -> Self {
        BasisOptions {
            max_dim: 32,
            enum_cap: 3000,
            prune_ratio: 1e5,
            sizes: vec![(1, 6), (2, 5), (3, 4), (4, 3)],
            scales: vec![0.5, 1.0, 2.5, 6.0],
            seed: 0x5eed,
        }
    }
}

/// A numerically independent basis of (a budgeted part of) V_k.
#[derive(Debug, Clone)]
pub struct RationalBasis {
    pub elements: Vec<ExprRef>,
    /// Word length of each basis element.
    pub lengths: Vec<usize>,
    /// Word length bound the enumeration ran with.
    pub k: usize,
    /// Screening points backing the independence claim.
    pub gram_points: Vec<MatrixPoint>,
    /// Words enumerated before budget/exhaustion.
    pub enumerated: usize,
    /// Whether the dimension budget cut the enumeration short.
    pub truncated: bool,
}

impl RationalBasis {
    pub fn dim(&self) -> usize {
        self.elements.len()
    }
}

/// Sample self-adjoint points in the domain of `e` (all sub-expressions
/// defined), with the given sizes and scale ladder.
pub(crate) fn sample_domain_points(
    e: &RationalExpr,
    sizes: &[(usize, usize)],
    scales: &[f64],
    seed: u64,
) -> Result<Vec<MatrixPoint>> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let opts = EvalOptions::default();
    let g = e.nvars.max(1);
    let mut out = Vec::new();
    for &(n, count) in sizes {
        let mut found = 0usize;
        let mut tries = 0usize;
        while found < count && tries < count * 60 {
            tries += 1;
            let scale = scales[(tries + found) % scales.len().max(1)];
            let base = random_selfadjoint_point(g, n, e.field, &mut rng);
            let scaled = MatrixPoint::new(
                e.field,
                base.mats()
                    .iter()
                    .map(|m| m.scale(num_complex::Complex64::new(scale, 0.0)))
                    .collect(),
            )?;
            if let Ok(Outcome::Defined(_)) = eval_strict(e, &scaled, &opts) {
                out.push(scaled);
                found += 1;
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Degenerate(
            "no common domain point found for the sub-expression set".into(),
        ));
    }
    Ok(out)
}

/// Stack the evaluations of `w` at the points into one real vector.
fn stacked_evaluation(
    w: &ExprRef,
    ctx: &RationalExpr,
    points: &[MatrixPoint],
) -> Option<DVector<f64>> {
    let opts = EvalOptions::default();
    let expr = ctx.with_root(w.clone());
    let mut entries: Vec<f64> = Vec::new();
    for x in points {
        match eval_strict(&expr, x, &opts).ok()? {
            Outcome::Defined(m) => {
                for z in m.storage().iter() {
                    entries.push(z.re);
                    if ctx.field == Field::Complex {
                        entries.push(z.im);
                    }
                }
            }
            Outcome::Undefined(_) => return None,
        }
    }
    Some(DVector::from_vec(entries))
}

/// Largest value of ‖w(X)‖² / (1 + ‖r(X)‖) over the screening points.
fn boundedness_ratio(
    w: &ExprRef,
    ctx: &RationalExpr,
    points: &[MatrixPoint],
    r_norms: &[f64],
) -> Option<f64> {
    let opts = EvalOptions::default();
    let expr = ctx.with_root(w.clone());
    let mut worst = 0.0f64;
    for (x, rn) in points.iter().zip(r_norms) {
        match eval_strict(&expr, x, &opts).ok()? {
            Outcome::Defined(m) => {
                let v = m.op_norm();
                worst = worst.max(v * v / (1.0 + rn));
            }
            Outcome::Undefined(_) => return None,
        }
    }
    Some(worst)
}

#[derive(PartialEq, Eq)]
struct QueueKey(u64, usize, usize); // (τ, word length, tiebreak counter)

impl Ord for QueueKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.0, self.1, self.2).cmp(&(other.0, other.1, other.2))
    }
}

impl PartialOrd for QueueKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Enumerate a numerically independent basis of V_k = span{words over Q̃ of
/// length ≤ k}, visiting candidates in order of increasing τ.
pub fn basis_of_vk(e: &RationalExpr, k: usize, opts: &BasisOptions) -> Result<RationalBasis> {
    let points = sample_domain_points(e, &opts.sizes, &opts.scales, opts.seed)?;
    let eval_opts = EvalOptions::default();
    let r_norms: Vec<f64> = points
        .iter()
        .map(|x| match eval_strict(e, x, &eval_opts) {
            Ok(Outcome::Defined(m)) => m.op_norm(),
            _ => 0.0,
        })
        .collect();

    // factors: non-constant elements of Q̃
    let q = e.subexpressions();
    let factors: Vec<ExprRef> = q
        .elements()
        .iter()
        .filter(|el| !matches!(&***el, crate::ncexpr::Expr::Const(_)))
        .cloned()
        .collect();

    let mut heap: BinaryHeap<Reverse<(QueueKey, usize)>> = BinaryHeap::new();
    let mut pool: Vec<(ExprRef, usize)> = Vec::new(); // (word, length)
    let mut counter = 0usize;
    let push = |heap: &mut BinaryHeap<Reverse<(QueueKey, usize)>>,
                    pool: &mut Vec<(ExprRef, usize)>,
                    w: ExprRef,
                    len: usize,
                    counter: &mut usize| {
        let key = QueueKey(tau(&w), len, *counter);
        *counter += 1;
        pool.push((w, len));
        heap.push(Reverse((key, pool.len() - 1)));
    };
    push(&mut heap, &mut pool, constant_re(1.0), 0, &mut counter);
    for f in &factors {
        push(&mut heap, &mut pool, f.clone(), 1, &mut counter);
    }

    let mut accepted: Vec<ExprRef> = Vec::new();
    let mut accepted_lengths: Vec<usize> = Vec::new();
    let mut accepted_vecs: Vec<DVector<f64>> = Vec::new();
    let mut enumerated = 0usize;
    let mut truncated = false;

    while let Some(Reverse((_, idx))) = heap.pop() {
        if accepted.len() >= opts.max_dim {
            truncated = true;
            break;
        }
        if enumerated >= opts.enum_cap {
            truncated = true;
            break;
        }
        enumerated += 1;
        let (word, len) = pool[idx].clone();

        let ratio = match boundedness_ratio(&word, e, &points, &r_norms) {
            Some(rho) => rho,
            None => continue,
        };
        let pruned = ratio > opts.prune_ratio;
        let mut independent = false;
        if !pruned {
            if let Some(vec) = stacked_evaluation(&word, e, &points) {
                let norm = vec.norm();
                if norm > 1e-12 * (vec.len() as f64).sqrt() {
                    let mut u = vec / norm;
                    for _ in 0..2 {
                        for basis_vec in &accepted_vecs {
                            let coef = basis_vec.dot(&u);
                            u -= basis_vec * coef;
                        }
                    }
                    let res = u.norm();
                    if res > 1e-8 {
                        accepted.push(word.clone());
                        accepted_lengths.push(len);
                        accepted_vecs.push(u / res);
                        independent = true;
                    }
                }
            }
        }
        // children: prepend each factor. Dependent words span nothing new and
        // their extensions are reachable from the equivalent basis words, so
        // only independent or pruned words extend.
        if len < k && (independent || pruned) {
            for f in &factors {
                push(
                    &mut heap,
                    &mut pool,
                    product(f.clone(), word.clone()),
                    len + 1,
                    &mut counter,
                );
            }
        }
    }
    if !heap.is_empty() {
        truncated = true;
    }
    if accepted.is_empty() {
        return Err(Error::Degenerate("empty V_k basis".into()));
    }
    Ok(RationalBasis {
        elements: accepted,
        lengths: accepted_lengths,
        k,
        gram_points: points,
        enumerated,
        truncated,
    })
}

/// The sampled-equality plan: κ(r), the bound the full equality check would
/// need, and the sizes actually used.
#[derive(Debug, Clone)]
pub struct EquivalencePlan {
    pub kappa: u64,
    pub tau: u64,
    /// Degree parameter 2t+1 the plan refers to.
    pub degree: u64,
    /// Numerically determined (budgeted) dimension of V_degree.
    pub dim_v: usize,
    /// κ(r)·(1 + (2t+1)·(dim V)²), saturating.
    pub paper_bound: u64,
    pub actual_sizes: Vec<usize>,
    pub samples_per_size: usize,
}

pub fn equivalence_plan(e: &RationalExpr, opts: &BasisOptions) -> Result<EquivalencePlan> {
    let counts = occurrence_counts(&e.root);
    let kappa = counts.constants + 2 * counts.symbols + counts.inverses;
    let t = e.tau();
    let degree = t.saturating_mul(2).saturating_add(1);
    let basis = basis_of_vk(e, degree.min(64) as usize, opts)?;
    let dim = basis.dim() as u64;
    let paper_bound = kappa.saturating_mul(1u64.saturating_add(degree.saturating_mul(dim.saturating_mul(dim))));
    Ok(EquivalencePlan {
        kappa,
        tau: t,
        degree,
        dim_v: basis.dim(),
        paper_bound,
        actual_sizes: opts.sizes.iter().map(|&(n, _)| n).collect(),
        samples_per_size: opts.sizes.iter().map(|&(_, c)| c).max().unwrap_or(0),
    })
}

/// Verdict of the strict positivity test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrictVerdict {
    StrictlyPositive,
    NotStrictlyPositive(String),
    Inconclusive(String),
}

/// Decide whether a *regular* expression is strictly positive at every
/// self-adjoint tuple: `r(0) ≻ 0` and `r⁻¹` regular. Rejects expressions
/// that are not certified regular.
pub fn strictly_positive(e: &RationalExpr, opts: &crate::ellipticity::ClassifyOptions) -> Result<StrictVerdict> {
    use crate::ellipticity::{classify, Verdict};
    let center = find_scalar_center(e, 200, 11)?;
    let minimal = minimal_realization(e, &center)?;
    let cert = classify(minimal.pencil(), opts);
    match cert.verdict {
        Verdict::StablyElliptic | Verdict::Elliptic => {}
        Verdict::NotElliptic => {
            return Err(Error::Precondition(
                "expression is not regular; strict positivity is undefined".into(),
            ))
        }
        Verdict::Inconclusive => {
            return Ok(StrictVerdict::Inconclusive(
                "regularity check was inconclusive".into(),
            ))
        }
    }
    // value at the zero scalar tuple
    let zero: Vec<num_complex::Complex64> = vec![num_complex::Complex64::ZERO; e.nvars];
    let value = match crate::ncexpr::eval_scalar(&e.root, &zero) {
        Some((v, _)) => v,
        None => {
            return Ok(StrictVerdict::Inconclusive(
                "value at zero could not be evaluated".into(),
            ))
        }
    };
    if value.im.abs() > 1e-9 {
        return Ok(StrictVerdict::NotStrictlyPositive(format!(
            "r(0) = {value} is not real"
        )));
    }
    if value.re <= 1e-12 {
        return Ok(StrictVerdict::NotStrictlyPositive(format!(
            "r(0) = {} is not strictly positive",
            value.re
        )));
    }
    // r⁻¹ must be regular
    let inv = e.with_root(crate::ncexpr::inverse(e.root.clone()));
    let inv_center = find_scalar_center(&inv, 200, 13)?;
    let inv_minimal = minimal_realization(&inv, &inv_center)?;
    let inv_cert = classify(inv_minimal.pencil(), opts);
    Ok(match inv_cert.verdict {
        Verdict::StablyElliptic | Verdict::Elliptic => StrictVerdict::StrictlyPositive,
        Verdict::NotElliptic => StrictVerdict::NotStrictlyPositive(
            "the inverse has a self-adjoint singularity".into(),
        ),
        Verdict::Inconclusive => {
            StrictVerdict::Inconclusive("inverse regularity check was inconclusive".into())
        }
    })
}

pub(crate) fn check_symmetric_sampled(e: &RationalExpr, seed: u64) -> Result<bool> {
    let opts = EvalOptions::default();
    let points = sample_domain_points(e, &[(1, 3), (2, 3), (3, 2)], &[0.7, 1.3], seed)?;
    for x in &points {
        if let Outcome::Defined(v) = eval_strict(e, x, &opts)? {
            let dev = v.sub(&v.adjoint())?.frobenius_norm();
            if dev > 1e-8 * (1.0 + v.frobenius_norm()) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncexpr::parse;

    #[test]
    fn basis_of_v1_for_a_variable() {
        let e = parse("x1", 1, Field::Real).unwrap();
        let basis = basis_of_vk(&e, 1, &BasisOptions::default()).unwrap();
        assert_eq!(basis.dim(), 2, "expected {{1, x1}}");
    }

    #[test]
    fn dependent_words_collapse() {
        // words 1 and x1^{-1}x1 are equal as functions
        let e = parse("inv(x1)*x1 - 1", 1, Field::Real).unwrap();
        let basis = basis_of_vk(&e, 1, &BasisOptions::default()).unwrap();
        let q = e.subexpressions();
        let raw_words = 1 + q.len();
        assert!(basis.dim() < raw_words, "dim {} vs raw {}", basis.dim(), raw_words);
    }

    #[test]
    fn basis_dimension_is_monotone_in_k() {
        let e = parse("x1*x2 + x2*x1", 2, Field::Real).unwrap();
        let d1 = basis_of_vk(&e, 1, &BasisOptions::default()).unwrap().dim();
        let d2 = basis_of_vk(&e, 2, &BasisOptions::default()).unwrap().dim();
        let d3 = basis_of_vk(&e, 3, &BasisOptions::default()).unwrap().dim();
        assert!(d1 <= d2 && d2 <= d3, "{d1} {d2} {d3}");
    }

    #[test]
    fn plan_counts_kappa() {
        let e = parse("x1", 1, Field::Real).unwrap();
        let plan = equivalence_plan(&e, &BasisOptions::default()).unwrap();
        assert_eq!(plan.kappa, 2);
        assert_eq!(plan.tau, 1);
        assert!(plan.paper_bound >= plan.dim_v as u64);
        // bound grows with nesting
        let e2 = parse("inv(1 + x1*x1)", 1, Field::Real).unwrap();
        let plan2 = equivalence_plan(&e2, &BasisOptions::default()).unwrap();
        assert!(plan2.degree > plan.degree);
    }

    #[test]
    fn strict_positivity_cases() {
        let opts = crate::ellipticity::ClassifyOptions::default();
        let pos = parse("0.5 + x1*x1", 1, Field::Real).unwrap();
        assert_eq!(
            strictly_positive(&pos, &opts).unwrap(),
            StrictVerdict::StrictlyPositive
        );
        let deg = parse("x1*x1", 1, Field::Real).unwrap();
        assert!(matches!(
            strictly_positive(&deg, &opts).unwrap(),
            StrictVerdict::NotStrictlyPositive(_)
        ));
    }

    #[test]
    fn strict_positivity_of_inverted_polynomial() {
        // (1/2 + x1² + x2² + x1²x2²)⁻¹ is strictly positive
        let e = parse(
            "inv(0.5 + x1*x1 + x2*x2 + x1*x1*x2*x2)",
            2,
            Field::Real,
        )
        .unwrap();
        let opts = crate::ellipticity::ClassifyOptions::default();
        assert_eq!(
            strictly_positive(&e, &opts).unwrap(),
            StrictVerdict::StrictlyPositive
        );
    }

    #[test]
    fn strict_positivity_rejects_non_regular() {
        let e = parse("inv(x1)", 1, Field::Real).unwrap();
        let opts = crate::ellipticity::ClassifyOptions::default();
        assert!(strictly_positive(&e, &opts).is_err());
    }
}
