//! Synthesis of regular expressions: rational expressions whose strict
//! evaluation is defined at every self-adjoint tuple.
//!
//! The entries of the inverse of an everywhere-invertible matrix of regular
//! expressions are computed by the `M⁻¹ = (M*M)⁻¹M*` recursion: the (1,1)
//! entry of M*M is a sum of hermitian squares of full-rank columns, hence
//! everywhere invertible; its Schur complement in M*M is again everywhere
//! invertible of smaller size. Every inverse node introduced along the way
//! is validated by sampling before it is accepted.

use num_complex::Complex64;

use crate::linalg::{self, Field};
use crate::ncexpr::{
    constant, eval_strict, inverse, product, star, sum, EvalOptions, ExprRef, Outcome,
    RationalExpr,
};
use crate::realization::Realization;
use crate::{Error, Result};

/// Sampling policy for the nonsingularity checks.
#[derive(Debug, Clone)]
pub struct RegularOptions {
    pub sizes: Vec<usize>,
    pub samples_per_size: usize,
    pub seed: u64,
    /// Relative σ_min threshold under which a sampled value counts singular.
    pub rtol: f64,
}

impl Default for RegularOptions {
    fn default() -> Self {
        RegularOptions {
            sizes: vec![1, 2, 3, 4],
            samples_per_size: 6,
            seed: 0x7e6,
            rtol: 1e-8,
        }
    }
}

fn check_nonsingular_everywhere(
    e: &ExprRef,
    g: usize,
    field: Field,
    opts: &RegularOptions,
) -> Result<()> {
    let ctx = RationalExpr::new(e.clone(), g, field)?;
    let eval_opts = EvalOptions::default();
    let mut points = Vec::new();
    for &n in &opts.sizes {
        // the zero tuple and shrunk points catch singularities on thin sets
        // that generic sampling misses
        points.push(crate::ncexpr::MatrixPoint::zero(field, g.max(1), n));
        for trial in 0..opts.samples_per_size {
            let x = crate::ncexpr::random_selfadjoint_point_seeded(
                g.max(1),
                n,
                field,
                opts.seed ^ (n as u64) << 8 ^ trial as u64,
            );
            let scale = [1.0, 0.3, 0.03][trial % 3];
            let scaled = crate::ncexpr::MatrixPoint::new(
                field,
                x.mats()
                    .iter()
                    .map(|m| m.scale(Complex64::new(scale, 0.0)))
                    .collect(),
            )?;
            points.push(scaled);
        }
    }
    {
        for x in &points {
            let x = x.clone();
            match eval_strict(&ctx, &x, &eval_opts)? {
                Outcome::Defined(v) => {
                    let smin = linalg::min_singular_value(&v);
                    if smin < opts.rtol * (1.0 + v.op_norm()) {
                        return Err(Error::Precondition(format!(
                            "sampling found a self-adjoint point where `{}` is singular",
                            crate::ncexpr::format_expr(e)
                        )));
                    }
                }
                Outcome::Undefined(at) => {
                    return Err(Error::Precondition(format!(
                        "sampling left the domain at `{}`",
                        crate::ncexpr::format_expr(&at)
                    )));
                }
            }
        }
    }
    Ok(())
}

fn guarded_inverse(
    e: &ExprRef,
    g: usize,
    field: Field,
    opts: &RegularOptions,
) -> Result<ExprRef> {
    check_nonsingular_everywhere(e, g, field, opts)?;
    Ok(inverse(e.clone()))
}

type ExprMatrix = Vec<Vec<ExprRef>>;

fn mat_mul_star_left(m: &ExprMatrix) -> ExprMatrix {
    // N = M*M: N[i][j] = Σ_k M[k][i]* M[k][j]
    let d = m.len();
    let mut out = vec![vec![constant(Complex64::ZERO); d]; d];
    for i in 0..d {
        for j in 0..d {
            let mut acc: Option<ExprRef> = None;
            for row in m.iter() {
                let term = product(star(&row[i]), row[j].clone());
                acc = Some(match acc {
                    Some(a) => sum(a, term),
                    None => term,
                });
            }
            out[i][j] = acc.expect("nonempty matrix");
        }
    }
    out
}

fn inverse_recursion(
    n: &ExprMatrix,
    g: usize,
    field: Field,
    opts: &RegularOptions,
) -> Result<ExprMatrix> {
    // inverse of the positive definite matrix N = M*M
    let d = n.len();
    let h_inv = guarded_inverse(&n[0][0], g, field, opts)?;
    if d == 1 {
        return Ok(vec![vec![h_inv]]);
    }
    // Schur complement S = N_rr − N_c1 h⁻¹ N_1r
    let mut schur = vec![vec![constant(Complex64::ZERO); d - 1]; d - 1];
    for i in 1..d {
        for j in 1..d {
            let corr = product(n[i][0].clone(), product(h_inv.clone(), n[0][j].clone()));
            schur[i - 1][j - 1] = sum(n[i][j].clone(), product(constant_neg_one(), corr));
        }
    }
    let s_inv = inverse_recursion(&schur, g, field, opts)?;
    // block inverse of [[h, B], [C, S_block]]
    let mut out = vec![vec![constant(Complex64::ZERO); d]; d];
    // top-left: h⁻¹ + h⁻¹ B S⁻¹ C h⁻¹
    let mut tl = h_inv.clone();
    for p in 0..d - 1 {
        for q in 0..d - 1 {
            let term = product(
                h_inv.clone(),
                product(
                    n[0][p + 1].clone(),
                    product(
                        s_inv[p][q].clone(),
                        product(n[q + 1][0].clone(), h_inv.clone()),
                    ),
                ),
            );
            tl = sum(tl, term);
        }
    }
    out[0][0] = tl;
    for q in 0..d - 1 {
        // top row: −h⁻¹ B S⁻¹
        let mut acc: Option<ExprRef> = None;
        for p in 0..d - 1 {
            let term = product(
                h_inv.clone(),
                product(n[0][p + 1].clone(), s_inv[p][q].clone()),
            );
            acc = Some(match acc {
                Some(a) => sum(a, term),
                None => term,
            });
        }
        out[0][q + 1] = product(constant_neg_one(), acc.expect("row"));
    }
    for p in 0..d - 1 {
        // left column: −S⁻¹ C h⁻¹
        let mut acc: Option<ExprRef> = None;
        for q in 0..d - 1 {
            let term = product(
                s_inv[p][q].clone(),
                product(n[q + 1][0].clone(), h_inv.clone()),
            );
            acc = Some(match acc {
                Some(a) => sum(a, term),
                None => term,
            });
        }
        out[p + 1][0] = product(constant_neg_one(), acc.expect("column"));
    }
    for p in 0..d - 1 {
        for q in 0..d - 1 {
            out[p + 1][q + 1] = s_inv[p][q].clone();
        }
    }
    Ok(out)
}

fn constant_neg_one() -> ExprRef {
    constant(Complex64::new(-1.0, 0.0))
}

/// Entries of M⁻¹ as expressions, for a square matrix M of regular
/// expressions that is invertible at every self-adjoint tuple (the caller's
/// claim, re-checked by sampling at every inverse node).
pub fn regular_inverse_expression(
    m: &ExprMatrix,
    g: usize,
    field: Field,
    opts: &RegularOptions,
) -> Result<ExprMatrix> {
    let d = m.len();
    if d == 0 || m.iter().any(|row| row.len() != d) {
        return Err(Error::DimensionMismatch("expression matrix must be square".into()));
    }
    if d == 1 {
        return Ok(vec![vec![guarded_inverse(&m[0][0], g, field, opts)?]]);
    }
    let n = mat_mul_star_left(m);
    let n_inv = inverse_recursion(&n, g, field, opts)?;
    // M⁻¹ = (M*M)⁻¹ M*
    let mut out = vec![vec![constant(Complex64::ZERO); d]; d];
    for i in 0..d {
        for j in 0..d {
            let mut acc: Option<ExprRef> = None;
            for k in 0..d {
                let term = product(n_inv[i][k].clone(), star(&m[j][k]));
                acc = Some(match acc {
                    Some(a) => sum(a, term),
                    None => term,
                });
            }
            out[i][j] = acc.expect("entry");
        }
    }
    Ok(out)
}

/// Pencil entries as expressions in the shifted variables `xⱼ − λⱼ`.
pub fn pencil_entry_expressions(r: &Realization) -> ExprMatrix {
    let p = r.pencil();
    let d = p.d();
    let lambda = r.center();
    let mut out = vec![vec![constant(Complex64::ZERO); d]; d];
    for i in 0..d {
        for j in 0..d {
            let mut entry = constant(p.coeff(0).get(i, j));
            for v in 1..=p.g() {
                let coeff = p.coeff(v).get(i, j);
                if coeff != Complex64::ZERO {
                    let shifted = sum(
                        crate::ncexpr::var(v),
                        constant(Complex64::new(-lambda.get(v - 1).copied().unwrap_or(0.0), 0.0)),
                    );
                    entry = sum(entry, product(constant(coeff), shifted));
                }
            }
            out[i][j] = entry;
        }
    }
    out
}

/// A representative of the same function whose strict evaluation is defined
/// at every self-adjoint tuple, built as `c* L(x−λ)⁻¹ b` from a minimal
/// realization with an elliptic pencil. The output is validated by sampled
/// agreement with the input before being returned.
pub fn regular_expression_of(
    e: &RationalExpr,
    minimal: &Realization,
    opts: &RegularOptions,
) -> Result<RationalExpr> {
    let entries = pencil_entry_expressions(minimal);
    let inv = regular_inverse_expression(&entries, e.nvars, e.field, opts)?;
    let mut acc: Option<ExprRef> = None;
    for i in 0..minimal.size() {
        let ci = minimal.c().get(i, 0);
        if ci.norm() < 1e-14 {
            continue;
        }
        for j in 0..minimal.size() {
            let bj = minimal.b().get(j, 0);
            if bj.norm() < 1e-14 {
                continue;
            }
            let coeff = ci.conj() * bj;
            let term = product(constant(coeff), inv[i][j].clone());
            acc = Some(match acc {
                Some(a) => sum(a, term),
                None => term,
            });
        }
    }
    let root = acc.unwrap_or_else(|| constant(Complex64::ZERO));
    let candidate = e.with_root(root);

    // validate agreement on sampled points across sizes
    let eval_opts = EvalOptions::default();
    let mut checked = 0usize;
    for n in 1..=6usize {
        for trial in 0..5u64 {
            let x = crate::ncexpr::random_selfadjoint_point_seeded(
                e.nvars.max(1),
                n,
                e.field,
                opts.seed ^ 0xabc ^ (n as u64) << 16 ^ trial,
            );
            let reference = match eval_strict(e, &x, &eval_opts)? {
                Outcome::Defined(v) => v,
                Outcome::Undefined(_) => continue,
            };
            let value = match eval_strict(&candidate, &x, &eval_opts)? {
                Outcome::Defined(v) => v,
                Outcome::Undefined(at) => {
                    return Err(Error::NumericalFailure(format!(
                        "synthesized expression left its domain at `{}`",
                        crate::ncexpr::format_expr(&at)
                    )))
                }
            };
            let err = value.sub(&reference)?.frobenius_norm();
            if err > 1e-7 * (1.0 + reference.frobenius_norm()) {
                return Err(Error::NumericalFailure(format!(
                    "synthesized expression deviates by {err:.3e}"
                )));
            }
            checked += 1;
        }
    }
    if checked < 10 {
        return Err(Error::NumericalFailure(
            "too few domain points to validate the synthesized expression".into(),
        ));
    }
    Ok(candidate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::ncexpr::{parse, random_selfadjoint_point_seeded, var};
    use crate::realization::minimal_realization;

    fn eval_entry(
        e: &ExprRef,
        g: usize,
        x: &crate::ncexpr::MatrixPoint,
    ) -> Matrix {
        let ctx = RationalExpr::new(e.clone(), g, Field::Real).unwrap();
        eval_strict(&ctx, x, &EvalOptions::default())
            .unwrap()
            .defined()
            .expect("defined")
    }

    #[test]
    fn scalar_base_case() {
        let m = vec![vec![parse("1 + x1*x1", 1, Field::Real).unwrap().root]];
        let inv = regular_inverse_expression(&m, 1, Field::Real, &RegularOptions::default()).unwrap();
        let x = random_selfadjoint_point_seeded(1, 3, Field::Real, 4);
        let v = eval_entry(&inv[0][0], 1, &x);
        let direct = eval_entry(&parse("inv(1 + x1*x1)", 1, Field::Real).unwrap().root, 1, &x);
        assert!(v.sub(&direct).unwrap().frobenius_norm() < 1e-9);
    }

    #[test]
    fn rejects_singular_entries() {
        let m = vec![vec![var(1)]]; // x1 is singular at 0
        assert!(regular_inverse_expression(&m, 1, Field::Real, &RegularOptions::default()).is_err());
    }

    #[test]
    fn unitriangular_two_by_two() {
        let one = parse("1", 1, Field::Real).unwrap().root;
        let zero = parse("0", 1, Field::Real).unwrap().root;
        let m = vec![vec![one.clone(), var(1)], vec![zero, one.clone()]];
        let inv = regular_inverse_expression(&m, 1, Field::Real, &RegularOptions::default()).unwrap();
        // check M·M⁻¹ = I at random points
        for seed in 0..5 {
            let x = random_selfadjoint_point_seeded(1, 3, Field::Real, 20 + seed);
            let n = x.size();
            let entries: Vec<Vec<Matrix>> = (0..2)
                .map(|i| (0..2).map(|j| eval_entry(&inv[i][j], 1, &x)).collect())
                .collect();
            let m_vals: Vec<Vec<Matrix>> = (0..2)
                .map(|i| (0..2).map(|j| eval_entry(&m[i][j], 1, &x)).collect())
                .collect();
            for i in 0..2 {
                for j in 0..2 {
                    let mut acc = Matrix::zeros(Field::Real, n, n);
                    for k in 0..2 {
                        acc = acc.add(&m_vals[i][k].mul(&entries[k][j]).unwrap()).unwrap();
                    }
                    let expect = if i == j {
                        Matrix::identity(Field::Real, n)
                    } else {
                        Matrix::zeros(Field::Real, n, n)
                    };
                    assert!(
                        acc.sub(&expect).unwrap().frobenius_norm() < 1e-8,
                        "M·M⁻¹ deviates at block ({i},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn stably_bounded_pencil_inverts() {
        // the 3×3 pencil [[1, -x2, 0], [x2, 1, -x1-x2+1], [0, x1+x2-1, 1]]
        let p = |t: &str| parse(t, 2, Field::Real).unwrap().root;
        let m = vec![
            vec![p("1"), p("0 - x2"), p("0")],
            vec![p("x2"), p("1"), p("1 - x1 - x2")],
            vec![p("0"), p("x1 + x2 - 1"), p("1")],
        ];
        let inv = regular_inverse_expression(&m, 2, Field::Real, &RegularOptions::default()).unwrap();
        assert_eq!(inv.len(), 3);
        for seed in 0..10u64 {
            let x = random_selfadjoint_point_seeded(2, 2, Field::Real, 100 + seed);
            let n = x.size();
            let mut prod_err = 0.0f64;
            for i in 0..3 {
                for j in 0..3 {
                    let mut acc = Matrix::zeros(Field::Real, n, n);
                    for k in 0..3 {
                        let mv = eval_entry(&m[i][k], 2, &x);
                        let iv = eval_entry(&inv[k][j], 2, &x);
                        acc = acc.add(&mv.mul(&iv).unwrap()).unwrap();
                    }
                    let expect = if i == j {
                        Matrix::identity(Field::Real, n)
                    } else {
                        Matrix::zeros(Field::Real, n, n)
                    };
                    prod_err = prod_err.max(acc.sub(&expect).unwrap().frobenius_norm());
                }
            }
            assert!(prod_err < 1e-8, "M·M⁻¹ error {prod_err:.3e}");
        }
    }

    #[test]
    fn regular_representative_of_inverse_quadratic() {
        let e = parse("inv(1 + x1*x1)", 1, Field::Real).unwrap();
        let minimal = minimal_realization(&e, &[0.0]).unwrap();
        let regular = regular_expression_of(&e, &minimal, &RegularOptions::default()).unwrap();
        // defined at every sampled symmetric point
        for seed in 0..10 {
            let x = random_selfadjoint_point_seeded(1, 4, Field::Real, 300 + seed);
            let out = eval_strict(&regular, &x, &EvalOptions::default()).unwrap();
            assert!(out.is_defined());
        }
    }
}
