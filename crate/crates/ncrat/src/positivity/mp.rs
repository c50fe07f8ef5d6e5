//! Moore-Penrose counterexample extraction: when the Gram SDP is
//! infeasible, its dual is a functional that is nonnegative on squares and
//! negative on the target; regularizing it with an averaging functional and
//! compressing the variable multiplication operators in the induced scalar
//! product yields a self-adjoint tuple at which the Moore-Penrose
//! evaluation of the target fails to be positive semidefinite.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::sohs::{solve_gram, GramOutcome, GramSystem, SohsOptions};
use super::{basis_of_vk, sample_domain_points, RationalBasis};
use crate::linalg::{self, Field, Matrix};
use crate::ncexpr::{eval_mp, eval_strict, EvalOptions, MatrixPoint, Outcome, RationalExpr};
use crate::Result;

/// Relative weight of the averaging regularizer.
const REGULARIZER_WEIGHT: f64 = 1e-4;

/// Evaluate every basis element at a point; `None` if any is undefined.
fn basis_values(
    e: &RationalExpr,
    basis: &RationalBasis,
    x: &MatrixPoint,
) -> Result<Option<Vec<Matrix>>> {
    let opts = EvalOptions::default();
    let mut vals = Vec::with_capacity(basis.dim());
    for w in &basis.elements {
        match eval_strict(&e.with_root(w.clone()), x, &opts)? {
            Outcome::Defined(v) => vals.push(v),
            Outcome::Undefined(_) => return Ok(None),
        }
    }
    Ok(Some(vals))
}

/// Moment pairings of the dual functional λ(q) = Σ_rows ν·[q(X)]_{sym p,q}:
/// the Gram block `λ(bᵢ* bⱼ)` and the multiplication blocks `λ(bᵢ* xⱼ bⱼ)`.
fn dual_moment_blocks(
    e: &RationalExpr,
    basis: &RationalBasis,
    system: &GramSystem,
    nu: &DVector<f64>,
) -> Result<Option<(DMatrix<f64>, Vec<DMatrix<f64>>)>> {
    let m = basis.dim();
    let g = e.nvars;
    let mut gram = DMatrix::<f64>::zeros(m, m);
    let mut mults = vec![DMatrix::<f64>::zeros(m, m); g];

    // group row indices by point
    let mut by_point: Vec<Vec<usize>> = vec![Vec::new(); system.points.len()];
    for (row_idx, &(pt, _, _, _)) in system.row_meta.iter().enumerate() {
        by_point[pt].push(row_idx);
    }

    for (pt_idx, x) in system.points.iter().enumerate() {
        if by_point[pt_idx].is_empty() {
            continue;
        }
        let vals = match basis_values(e, basis, x)? {
            Some(v) => v,
            None => return Ok(None),
        };
        for i in 0..m {
            let vi_adj = vals[i].adjoint();
            for j in 0..m {
                let prod = vi_adj.mul(&vals[j])?;
                let mut acc = 0.0;
                for &row_idx in &by_point[pt_idx] {
                    let (_, p, q, imag) = system.row_meta[row_idx];
                    debug_assert!(!imag);
                    let entry = 0.5 * (prod.get(p, q).re + prod.get(q, p).re);
                    acc += nu[row_idx] * entry;
                }
                gram[(i, j)] += acc;
                for var in 0..g {
                    let xprod = vi_adj.mul(x.mat(var))?.mul(&vals[j])?;
                    let mut acc_v = 0.0;
                    for &row_idx in &by_point[pt_idx] {
                        let (_, p, q, _) = system.row_meta[row_idx];
                        let entry = 0.5 * (xprod.get(p, q).re + xprod.get(q, p).re);
                        acc_v += nu[row_idx] * entry;
                    }
                    mults[var][(i, j)] += acc_v;
                }
            }
        }
    }
    Ok(Some((gram, mults)))
}

/// Averaging moment blocks λ₀(q) = mean of tr q(X)/n over fresh domain
/// points; strictly positive on nonzero squares by genericity.
fn averaging_moment_blocks(
    e: &RationalExpr,
    basis: &RationalBasis,
    seed: u64,
) -> Result<Option<(DMatrix<f64>, Vec<DMatrix<f64>>)>> {
    let m = basis.dim();
    let g = e.nvars;
    let points = sample_domain_points(e, &[(2, 4), (3, 4)], &[0.7, 1.2], seed)?;
    let mut gram = DMatrix::<f64>::zeros(m, m);
    let mut mults = vec![DMatrix::<f64>::zeros(m, m); g];
    let mut used = 0usize;
    for x in &points {
        let vals = match basis_values(e, basis, x)? {
            Some(v) => v,
            None => continue,
        };
        used += 1;
        let n = x.size() as f64;
        for i in 0..m {
            let vi_adj = vals[i].adjoint();
            for j in 0..m {
                gram[(i, j)] += vi_adj.mul(&vals[j])?.trace().re / n;
                for var in 0..g {
                    mults[var][(i, j)] +=
                        vi_adj.mul(x.mat(var))?.mul(&vals[j])?.trace().re / n;
                }
            }
        }
    }
    if used == 0 {
        return Ok(None);
    }
    let scale = 1.0 / used as f64;
    gram *= scale;
    for mv in &mut mults {
        *mv *= scale;
    }
    Ok(Some((gram, mults)))
}

/// Extract a self-adjoint tuple at which the Moore-Penrose evaluation of `e`
/// has an eigenvalue ≤ −√tol, or `None` when extraction fails (which proves
/// nothing). Real field only; the Gram dual over ℂ is not plumbed through.
pub fn mp_counterexample(
    e: &RationalExpr,
    degree: usize,
    tol: f64,
    opts: &SohsOptions,
) -> Result<Option<MatrixPoint>> {
    if e.field != Field::Real {
        return Ok(None);
    }
    let basis = basis_of_vk(e, degree.clamp(1, 4), &opts.basis)?;
    let m = basis.dim();
    let (dual, system) = match solve_gram(e, &basis, opts)? {
        GramOutcome::Infeasible { dual, system, .. } => (dual, system),
        GramOutcome::Feasible(_)
        | GramOutcome::NotRepresentable
        | GramOutcome::Undetermined(_) => return Ok(None),
    };

    // ν with Aᵀν ≈ zvec, where zvec is the dual in duplication coordinates
    let nvars = system.nvars;
    let nrows = system.rows.len();
    let mut a_t = DMatrix::<f64>::zeros(nvars, nrows);
    for (ridx, row) in system.rows.iter().enumerate() {
        a_t.column_mut(ridx).copy_from(row);
    }
    let mut zvec = DVector::<f64>::zeros(nvars);
    for i in 0..m {
        for j in i..m {
            let idx = i * m - i * (i + 1) / 2 + j;
            zvec[idx] = if i == j {
                dual[(i, j)]
            } else {
                2.0 * dual[(i, j)]
            };
        }
    }
    let at_m = Matrix::from_real(a_t);
    let nu_mat = linalg::pinv(&at_m, 1e-10).mul(&Matrix::from_real(
        DMatrix::from_fn(nvars, 1, |r, _| zvec[r]),
    ))?;
    let nu = DVector::<f64>::from_fn(nrows, |r, _| nu_mat.get(r, 0).re);

    let (lam_gram, lam_mults) = match dual_moment_blocks(e, &basis, &system, &nu)? {
        Some(b) => b,
        None => return Ok(None),
    };
    let (avg_gram, avg_mults) =
        match averaging_moment_blocks(e, &basis, opts.seed ^ 0xfeed_f00d)? {
            Some(b) => b,
            None => return Ok(None),
        };
    let lam_scale = lam_gram.norm().max(1e-12);
    let avg_scale = avg_gram.norm().max(1e-12);
    let weight = REGULARIZER_WEIGHT * lam_scale / avg_scale;
    let gram = &lam_gram + &avg_gram * weight;
    let mults: Vec<DMatrix<f64>> = lam_mults
        .iter()
        .zip(&avg_mults)
        .map(|(a, b)| a + b * weight)
        .collect();

    // symmetrize, floor-clip the Gram block, and compress multiplications
    let gram_m = Matrix::from_real((&gram + gram.transpose()) * 0.5);
    let eig = linalg::hermitian_eig(&gram_m)?;
    let lam_max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    if lam_max <= 0.0 {
        return Ok(None);
    }
    let floor = 1e-10 * lam_max.max(1.0);
    let mut inv_sqrt = Matrix::zeros(Field::Real, m, m);
    for i in 0..m {
        let lam = eig.eigenvalues[i].max(floor);
        inv_sqrt.set(i, i, Complex64::new(1.0 / lam.sqrt(), 0.0));
    }
    let q = &eig.eigenvectors;
    let g_inv_sqrt = q.mul(&inv_sqrt)?.mul(&q.adjoint())?;
    let mut mats = Vec::with_capacity(e.nvars);
    for mult in &mults {
        let c = Matrix::from_real(mult.clone());
        let compressed = g_inv_sqrt.mul(&c)?.mul(&g_inv_sqrt)?.hermitian_part();
        mats.push(compressed);
    }
    let x = MatrixPoint::new(Field::Real, mats)?;

    // the output only counts if it verifiably witnesses non-positivity
    let value = eval_mp(e, &x, &EvalOptions::default())?;
    let herm = value.hermitian_part();
    let min_eig = linalg::hermitian_eig(&herm)?
        .eigenvalues
        .first()
        .copied()
        .unwrap_or(0.0);
    if min_eig <= -tol.sqrt() {
        Ok(Some(x))
    } else {
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncexpr::parse;

    #[test]
    fn negative_constant_yields_counterexample() {
        let e = parse("0 - 1", 1, Field::Real).unwrap();
        let x = mp_counterexample(&e, 2, 1e-7, &SohsOptions::default())
            .unwrap()
            .expect("-1 is nowhere positive");
        let v = eval_mp(&e, &x, &EvalOptions::default()).unwrap();
        let eye = Matrix::identity(Field::Real, x.size());
        assert!(v.add(&eye).unwrap().frobenius_norm() < 1e-9, "value is -I");
    }

    #[test]
    fn plain_variable_yields_counterexample() {
        let e = parse("x1", 1, Field::Real).unwrap();
        let x = mp_counterexample(&e, 3, 1e-7, &SohsOptions::default())
            .unwrap()
            .expect("x1 takes negative values");
        let v = eval_mp(&e, &x, &EvalOptions::default()).unwrap();
        let eig = linalg::hermitian_eig(&v.hermitian_part()).unwrap();
        assert!(eig.eigenvalues[0] <= -(1e-7f64).sqrt());
    }

    #[test]
    fn mp_pathology_on_zero_function_is_documented_behavior() {
        // x1^{-1}x1 − 1 is the zero function (a sum of no squares), yet its
        // Moore-Penrose evaluation at 0 is −1; a returned point must still
        // verify against eval_mp, which is all the contract promises.
        let e = parse("inv(x1)*x1 - 1", 1, Field::Real).unwrap();
        if let Some(x) = mp_counterexample(&e, 3, 1e-7, &SohsOptions::default()).unwrap() {
            let v = eval_mp(&e, &x, &EvalOptions::default()).unwrap();
            let eig = linalg::hermitian_eig(&v.hermitian_part()).unwrap();
            assert!(eig.eigenvalues[0] <= -(1e-7f64).sqrt());
        }
    }
}
