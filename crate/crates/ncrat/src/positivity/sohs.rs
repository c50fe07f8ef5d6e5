//! The Gram-matrix route to sums of hermitian squares: `r = W*GW` with
//! `G ⪰ 0`, equality enforced at sampled self-adjoint tuples, squares
//! extracted by an eigenvalue square root, and the bordered-pencil
//! construction of positively elliptic realizations.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{
    basis_of_vk, check_symmetric_sampled, sample_domain_points, BasisOptions, EquivalencePlan,
    RationalBasis,
};
use crate::linalg::{self, Field, Matrix};
use crate::ncexpr::{
    constant, eval_strict, occurrence_counts, product, sum, EvalOptions, ExprRef, MatrixPoint,
    Outcome, RationalExpr,
};
use crate::pencil::LinearPencil;
use crate::realization::{build, minimize, Realization};
use crate::sdp::{
    eliminate_equalities, lmi_from_parametrization, max_rank_feasible_from, min_eigenvalue,
    solve_max_min_eig, EqualitySystem, LmiStatus,
};
use crate::{Error, Result};

/// Options for [`sohs_decompose`].
#[derive(Debug, Clone)]
pub struct SohsOptions {
    pub basis: BasisOptions,
    pub lmi: crate::sdp::LmiOptions,
    /// Sizes cycled while collecting equality rows.
    pub eq_sizes: Vec<usize>,
    /// Residual validation: sizes and samples per size.
    pub residual_sizes: Vec<usize>,
    pub residual_per_size: usize,
    /// Residual acceptance threshold, relative.
    pub residual_tol: f64,
    pub seed: u64,
}

impl Default for SohsOptions {
    fn default() -> Self {
        SohsOptions {
            basis: BasisOptions::default(),
            lmi: crate::sdp::LmiOptions::default(),
            eq_sizes: vec![1, 2, 3, 4],
            residual_sizes: vec![1, 2, 3, 4, 5, 6],
            residual_per_size: 40,
            residual_tol: 1e-6,
            seed: 0xace,
        }
    }
}

/// Sampled residual data for `‖r − Σ sⱼ*sⱼ‖ / (1 + ‖r‖)`.
#[derive(Debug, Clone)]
pub struct ResidualStats {
    pub max_relative: f64,
    pub mean_relative: f64,
    pub sizes: Vec<usize>,
    pub samples_per_size: usize,
}

/// A sum-of-hermitian-squares certificate: `r = W*GW = Σ sⱼ*sⱼ`.
#[derive(Debug, Clone)]
pub struct SohsCertificate {
    pub basis: RationalBasis,
    pub gram: Matrix,
    pub squares: Vec<ExprRef>,
    pub residual: ResidualStats,
    pub plan: EquivalencePlan,
    /// Word-length bound at which the certificate was found (≤ the requested
    /// degree; a certificate in a smaller V_k is also one in V_k).
    pub achieved_k: usize,
}

/// The sampled equality system plus metadata, kept so an infeasibility dual
/// can be read back as a separating functional on V-products.
pub(crate) struct GramSystem {
    pub rows: Vec<DVector<f64>>,
    pub rhs: Vec<f64>,
    /// per row: (point index, entry p, entry q, imaginary part?)
    pub row_meta: Vec<(usize, usize, usize, bool)>,
    pub points: Vec<MatrixPoint>,
    pub nvars: usize,
}

pub(crate) enum GramOutcome {
    Feasible(Matrix),
    Infeasible {
        dual: DMatrix<f64>,
        certified: bool,
        system: GramSystem,
    },
    /// The sampled linear system has no symmetric solution at all.
    NotRepresentable,
    Undetermined(String),
}

fn gram_var_count(m: usize, field: Field) -> usize {
    match field {
        Field::Real => m * (m + 1) / 2,
        Field::Complex => m * m,
    }
}

fn sym_index(m: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j);
    i * m - i * (i + 1) / 2 + j
}

fn skew_index(m: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    let base = m * (m + 1) / 2;
    let mut idx = 0;
    for a in 0..i {
        idx += m - 1 - a;
    }
    base + idx + (j - i - 1)
}

/// Rebuild the (hermitian) Gram matrix from the variable vector.
fn gram_matrix(m: usize, field: Field, v: &DVector<f64>) -> Matrix {
    let mut data = DMatrix::<Complex64>::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let a = v[sym_index(m, i, j)];
            let b = if field == Field::Complex && i < j {
                v[skew_index(m, i, j)]
            } else {
                0.0
            };
            data[(i, j)] = Complex64::new(a, b);
            data[(j, i)] = Complex64::new(a, -b);
        }
    }
    Matrix::from_storage(field, data)
}

/// What the real LMI solver sees: G over ℝ, its real embedding over ℂ.
fn lmi_matrix(m: usize, field: Field, v: &DVector<f64>) -> DMatrix<f64> {
    let g = gram_matrix(m, field, v);
    match field {
        Field::Real => g.as_real(),
        Field::Complex => g.real_embedding().as_real(),
    }
}

pub(crate) fn collect_gram_system(
    e: &RationalExpr,
    basis: &RationalBasis,
    opts: &SohsOptions,
) -> Result<GramSystem> {
    let m = basis.dim();
    let nvars = gram_var_count(m, e.field);
    let target_rows = 2 * nvars + 80;
    let eval_opts = EvalOptions::default();
    let complex = e.field == Field::Complex;

    let mut rows: Vec<DVector<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut row_meta = Vec::new();
    let mut points: Vec<MatrixPoint> = Vec::new();

    let mut batch_seed = opts.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    let mut size_idx = 0usize;
    let mut stall = 0usize;
    while rows.len() < target_rows && stall < 200 {
        let n = opts.eq_sizes[size_idx % opts.eq_sizes.len()];
        size_idx += 1;
        batch_seed = batch_seed.wrapping_add(1);
        let mut sampled = match sample_domain_points(e, &[(n, 1)], &[0.6, 1.0, 1.8], batch_seed) {
            Ok(p) => p,
            Err(_) => {
                stall += 1;
                continue;
            }
        };
        let x = sampled.remove(0);
        let r_val = match eval_strict(e, &x, &eval_opts)? {
            Outcome::Defined(v) => v,
            Outcome::Undefined(_) => {
                stall += 1;
                continue;
            }
        };
        let mut w_vals = Vec::with_capacity(m);
        let mut all_defined = true;
        for w in &basis.elements {
            match eval_strict(&e.with_root(w.clone()), &x, &eval_opts)? {
                Outcome::Defined(v) => w_vals.push(v),
                Outcome::Undefined(_) => {
                    all_defined = false;
                    break;
                }
            }
        }
        if !all_defined {
            stall += 1;
            continue;
        }
        let point_idx = points.len();
        points.push(x);
        // products wᵢ* wⱼ
        let mut prods: Vec<Vec<Matrix>> = Vec::with_capacity(m);
        for i in 0..m {
            let mut row_p = Vec::with_capacity(m);
            for j in 0..m {
                row_p.push(w_vals[i].adjoint().mul(&w_vals[j])?);
            }
            prods.push(row_p);
        }
        for p in 0..n {
            for q in p..n {
                let mut coeff_re = DVector::<f64>::zeros(nvars);
                let mut coeff_im = DVector::<f64>::zeros(nvars);
                for i in 0..m {
                    for j in i..m {
                        // A_ij coefficient: (P_ij + P_ji) for i<j, P_ii on diagonal
                        let val = if i == j {
                            prods[i][i].get(p, q)
                        } else {
                            prods[i][j].get(p, q) + prods[j][i].get(p, q)
                        };
                        let val = if complex {
                            val
                        } else {
                            // symmetrize the real row
                            let tr = if i == j {
                                prods[i][i].get(q, p)
                            } else {
                                prods[i][j].get(q, p) + prods[j][i].get(q, p)
                            };
                            (val + tr) * 0.5
                        };
                        coeff_re[sym_index(m, i, j)] = val.re;
                        coeff_im[sym_index(m, i, j)] = val.im;
                        if complex && i < j {
                            // B_ij coefficient: i(P_ij − P_ji)
                            let vb = (prods[i][j].get(p, q) - prods[j][i].get(p, q))
                                * Complex64::new(0.0, 1.0);
                            coeff_re[skew_index(m, i, j)] = vb.re;
                            coeff_im[skew_index(m, i, j)] = vb.im;
                        }
                    }
                }
                let target = if complex {
                    r_val.get(p, q)
                } else {
                    (r_val.get(p, q) + r_val.get(q, p)) * 0.5
                };
                rows.push(coeff_re);
                rhs.push(target.re);
                row_meta.push((point_idx, p, q, false));
                if complex && p < q {
                    rows.push(coeff_im);
                    rhs.push(target.im);
                    row_meta.push((point_idx, p, q, true));
                }
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Degenerate("no usable equality samples".into()));
    }
    Ok(GramSystem {
        rows,
        rhs,
        row_meta,
        points,
        nvars,
    })
}

pub(crate) fn solve_gram(
    e: &RationalExpr,
    basis: &RationalBasis,
    opts: &SohsOptions,
) -> Result<GramOutcome> {
    let m = basis.dim();
    let system = collect_gram_system(e, basis, opts)?;
    let mut eqsys = EqualitySystem::new(system.nvars);
    for (row, &target) in system.rows.iter().zip(&system.rhs) {
        eqsys.push(row.clone(), target);
    }
    let param = match eliminate_equalities(&eqsys, 1e-10) {
        Ok(p) => p,
        Err(Error::Infeasible) => return Ok(GramOutcome::NotRepresentable),
        Err(err) => return Ok(GramOutcome::Undetermined(err.to_string())),
    };
    let field = e.field;
    let problem = lmi_from_parametrization(
        &param,
        |v| lmi_matrix(m, field, v),
        &format!("gram({})", m),
    );
    let sol = solve_max_min_eig(&problem, &opts.lmi);
    let attained = min_eigenvalue(&sol.primal_matrix);
    if !attained.is_finite() {
        return Ok(GramOutcome::Undetermined("gram solve diverged".into()));
    }
    if attained > opts.lmi.tol {
        let g = gram_matrix(m, field, &param.point(&sol.y));
        return Ok(GramOutcome::Feasible(g));
    }
    if attained >= -opts.lmi.tol {
        let face = max_rank_feasible_from(&problem, sol.clone(), &opts.lmi);
        return Ok(match face.status {
            LmiStatus::Infeasible => GramOutcome::Infeasible {
                dual: sol.dual_matrix,
                certified: false,
                system,
            },
            LmiStatus::NumericalFailure => {
                GramOutcome::Undetermined("facial reduction failed".into())
            }
            _ => {
                let g = gram_matrix(m, field, &param.point(&face.y));
                GramOutcome::Feasible(g)
            }
        });
    }
    Ok(GramOutcome::Infeasible {
        certified: sol.status == LmiStatus::OptimalInterior,
        dual: sol.dual_matrix,
        system,
    })
}

/// Extract squares from a PSD Gram matrix: `G = H*H` by the eigenvalue
/// square root (negative eigenvalues above −tol clip to 0), then
/// `sⱼ = (HW)ⱼ` as expressions.
fn extract_squares(
    g: &Matrix,
    basis: &RationalBasis,
    clip_tol: f64,
) -> Result<(Matrix, Vec<ExprRef>)> {
    let eig = linalg::hermitian_eig(g)?;
    let m = g.rows();
    let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let mut cleaned = Matrix::zeros(g.field(), m, m);
    let mut squares = Vec::new();
    for (idx, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam < -clip_tol * (1.0 + lambda_max) {
            return Err(Error::NumericalFailure(format!(
                "gram matrix has eigenvalue {lam:.3e}"
            )));
        }
        if lam <= clip_tol * (1.0 + lambda_max) {
            continue;
        }
        let root = lam.sqrt();
        let q = eig.eigenvectors.column(idx);
        // cleaned G += λ q q*
        let contrib = q.mul(&q.adjoint())?.scale(Complex64::new(lam, 0.0));
        cleaned = cleaned.add(&contrib)?;
        // square s = √λ Σ_k conj(q_k) w_k
        let mut expr: Option<ExprRef> = None;
        for k in 0..m {
            let coef = q.get(k, 0).conj() * root;
            if coef.norm() <= 1e-12 * (1.0 + root) {
                continue;
            }
            let term = product(constant(coef), basis.elements[k].clone());
            expr = Some(match expr {
                Some(acc) => sum(acc, term),
                None => term,
            });
        }
        if let Some(sq) = expr {
            squares.push(sq);
        }
    }
    Ok((cleaned, squares))
}

fn residual_stats(
    e: &RationalExpr,
    squares: &[ExprRef],
    opts: &SohsOptions,
    seed: u64,
) -> Result<ResidualStats> {
    let eval_opts = EvalOptions::default();
    let sizes: Vec<(usize, usize)> = opts
        .residual_sizes
        .iter()
        .map(|&n| (n, opts.residual_per_size))
        .collect();
    let points = sample_domain_points(e, &sizes, &[0.5, 1.0, 1.7], seed)?;
    let mut max_rel = 0.0f64;
    let mut sum_rel = 0.0f64;
    let mut count = 0usize;
    for x in &points {
        let r_val = match eval_strict(e, x, &eval_opts)? {
            Outcome::Defined(v) => v,
            Outcome::Undefined(_) => continue,
        };
        let mut acc = Matrix::zeros(e.field, x.size(), x.size());
        let mut ok = true;
        for s in squares {
            match eval_strict(&e.with_root(s.clone()), x, &eval_opts)? {
                Outcome::Defined(v) => {
                    acc = acc.add(&v.adjoint().mul(&v)?)?;
                }
                Outcome::Undefined(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        let rel = r_val.sub(&acc)?.op_norm() / (1.0 + r_val.op_norm());
        max_rel = max_rel.max(rel);
        sum_rel += rel;
        count += 1;
    }
    if count == 0 {
        return Err(Error::Degenerate("no residual sample points".into()));
    }
    Ok(ResidualStats {
        max_relative: max_rel,
        mean_relative: sum_rel / count as f64,
        sizes: opts.residual_sizes.clone(),
        samples_per_size: opts.residual_per_size,
    })
}

fn make_plan(e: &RationalExpr, basis: &RationalBasis, opts: &SohsOptions) -> EquivalencePlan {
    let counts = occurrence_counts(&e.root);
    let kappa = counts.constants + 2 * counts.symbols + counts.inverses;
    let t = e.tau();
    let degree = t.saturating_mul(2).saturating_add(1);
    let dim = basis.dim() as u64;
    EquivalencePlan {
        kappa,
        tau: t,
        degree,
        dim_v: basis.dim(),
        paper_bound: kappa
            .saturating_mul(1u64.saturating_add(degree.saturating_mul(dim.saturating_mul(dim)))),
        actual_sizes: opts.eq_sizes.clone(),
        samples_per_size: opts.residual_per_size,
    }
}

/// Word-length ladder tried up to the requested degree.
fn k_ladder(degree: usize) -> Vec<usize> {
    let mut ks: Vec<usize> = vec![1, 2, 3, 4, 5]
        .into_iter()
        .filter(|&k| k <= degree)
        .collect();
    if degree > 5 {
        ks.push(degree);
    }
    if ks.is_empty() {
        ks.push(1);
    }
    ks
}

/// Search for a sum-of-hermitian-squares certificate of `e` with squares in
/// V_k for k up to `degree` (the usual default is 2τ(e)+1). Returns `None`
/// when no certified decomposition was found — either the Gram SDP was
/// infeasible at every tried k or the numerics did not validate.
pub fn sohs_decompose(
    e: &RationalExpr,
    degree: usize,
    opts: &SohsOptions,
) -> Result<Option<SohsCertificate>> {
    if !check_symmetric_sampled(e, opts.seed ^ 0x77)? {
        return Ok(None);
    }
    let mut prev_dim = 0usize;
    let mut plateau = 0usize;
    for k_eff in k_ladder(degree) {
        let basis = basis_of_vk(e, k_eff, &opts.basis)?;
        if basis.dim() == prev_dim {
            plateau += 1;
            if plateau >= 2 {
                break;
            }
        } else {
            plateau = 0;
        }
        prev_dim = basis.dim();
        match solve_gram(e, &basis, opts)? {
            GramOutcome::Feasible(g) => {
                let (cleaned, squares) = extract_squares(&g, &basis, 10.0 * opts.lmi.tol)?;
                let residual = residual_stats(e, &squares, opts, opts.seed ^ 0xbeef)?;
                if residual.max_relative <= opts.residual_tol {
                    let plan = make_plan(e, &basis, opts);
                    return Ok(Some(SohsCertificate {
                        basis,
                        gram: cleaned,
                        squares,
                        residual,
                        plan,
                        achieved_k: k_eff,
                    }));
                }
            }
            GramOutcome::Infeasible { .. }
            | GramOutcome::NotRepresentable
            | GramOutcome::Undetermined(_) => {}
        }
    }
    Ok(None)
}

/// Bordered-pencil realization of `r = Σ sⱼ*sⱼ`: each square contributes
/// `[[cⱼcⱼ*, Lⱼ*], [−Lⱼ, 0]]` with vector `(0; bⱼ)`, and the direct sum is a
/// positively elliptic realization (`Re A₀ ⪰ 0`, `Re Aⱼ = 0` exactly, by
/// construction).
pub fn positively_elliptic_realization(
    cert: &SohsCertificate,
    ctx: &RationalExpr,
    center: &[f64],
) -> Result<Realization> {
    let field = ctx.field;
    let g = ctx.nvars;
    if cert.squares.is_empty() {
        // the zero function
        let mut coeffs = vec![Matrix::identity(field, 1)];
        coeffs.extend((0..g).map(|_| Matrix::zeros(field, 1, 1)));
        let zero_vec = Matrix::zeros(field, 1, 1);
        return Realization::new(
            zero_vec.clone(),
            zero_vec,
            LinearPencil::new(coeffs)?,
            center.to_vec(),
        );
    }
    let mut total_coeffs: Option<Vec<Matrix>> = None;
    let mut total_b: Option<Matrix> = None;
    for square in &cert.squares {
        let expr = RationalExpr::new(square.clone(), g, field)?;
        let real = minimize(&build(&expr, center)?)?;
        let d = real.size();
        let a = real.pencil();
        let cc = real.c().mul(&real.c().adjoint())?;
        let mut coeffs = Vec::with_capacity(g + 1);
        for k in 0..=g {
            let mut m = Matrix::zeros(field, 2 * d, 2 * d);
            let ak = a.coeff(k);
            for i in 0..d {
                for j in 0..d {
                    m.set(i, d + j, ak.get(j, i).conj());
                    m.set(d + i, j, -ak.get(i, j));
                    if k == 0 {
                        m.set(i, j, cc.get(i, j));
                    }
                }
            }
            coeffs.push(m);
        }
        let b_new = Matrix::zeros(field, d, 1).vstack(real.b())?;
        total_coeffs = Some(match total_coeffs {
            None => coeffs,
            Some(acc) => acc
                .iter()
                .zip(&coeffs)
                .map(|(x, y)| x.direct_sum(y))
                .collect::<Result<Vec<_>>>()?,
        });
        total_b = Some(match total_b {
            None => b_new,
            Some(acc) => acc.vstack(&b_new)?,
        });
    }
    let coeffs = total_coeffs.expect("at least one square");
    let b = total_b.expect("at least one square");
    Realization::new(b.clone(), b.clone(), LinearPencil::new(coeffs)?, center.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncexpr::{find_scalar_center, parse, random_selfadjoint_point_seeded};
    use crate::realization::eval_realization;

    fn opts() -> SohsOptions {
        SohsOptions::default()
    }

    #[test]
    fn square_of_a_variable() {
        let e = parse("x1*x1", 1, Field::Real).unwrap();
        let cert = sohs_decompose(&e, 3, &opts()).unwrap().expect("x1^2 is a square");
        assert_eq!(cert.squares.len(), 1, "single square expected");
        assert!(cert.residual.max_relative < 1e-8);
        // the square is x1 up to sign
        let sq = &cert.squares[0];
        let x = random_selfadjoint_point_seeded(1, 3, Field::Real, 5);
        let v = eval_strict(&e.with_root(sq.clone()), &x, &EvalOptions::default())
            .unwrap()
            .defined()
            .unwrap();
        let diff_plus = v.sub(x.mat(0)).unwrap().frobenius_norm();
        let diff_minus = v.add(x.mat(0)).unwrap().frobenius_norm();
        assert!(diff_plus.min(diff_minus) < 1e-7);
    }

    #[test]
    fn negative_constant_has_no_certificate() {
        let e = parse("0 - 1", 1, Field::Real).unwrap();
        assert!(sohs_decompose(&e, 4, &opts()).unwrap().is_none());
    }

    #[test]
    fn zero_function_gets_empty_certificate() {
        // x1^{-1} x1 − 1 is the zero function: SOHS with no squares
        let e = parse("inv(x1)*x1 - 1", 1, Field::Real).unwrap();
        let cert = sohs_decompose(&e, 3, &opts()).unwrap().expect("zero is a sum of no squares");
        assert!(cert.squares.is_empty());
        assert!(cert.residual.max_relative < 1e-9);
    }

    #[test]
    fn schur_complement_fixture_certifies() {
        // x2² − x2 x1 (1+x1²)⁻¹ x1 x2 = t*t + (x1 t)*(x1 t), t = (1+x1²)⁻¹x2
        let e = parse("x2*x2 - x2*x1*inv(1 + x1*x1)*x1*x2", 2, Field::Real).unwrap();
        let degree = (2 * e.tau() + 1) as usize;
        let cert = sohs_decompose(&e, degree, &opts())
            .unwrap()
            .expect("fixture is a sum of squares");
        assert!(
            cert.residual.max_relative <= 1e-6,
            "residual {:.3e}",
            cert.residual.max_relative
        );
        assert!(cert.achieved_k <= degree);
    }

    #[test]
    fn positively_elliptic_realization_of_squared_variable() {
        let e = parse("x1*x1", 1, Field::Real).unwrap();
        let center = find_scalar_center(&e, 50, 3).unwrap();
        let cert = sohs_decompose(&e, 3, &opts()).unwrap().unwrap();
        let real = positively_elliptic_realization(&cert, &e, &center).unwrap();
        assert_eq!(real.size(), 4, "square of the size-2 realization, bordered");
        // Re-part conditions hold exactly
        let a0 = real.pencil().coeff(0).hermitian_part();
        let eig = linalg::hermitian_eig(&a0).unwrap();
        assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-12));
        for j in 1..=real.g() {
            assert_eq!(real.pencil().coeff(j).hermitian_part().frobenius_norm(), 0.0);
        }
        // evaluates to x1²
        for seed in 0..5 {
            let x = random_selfadjoint_point_seeded(1, 3, Field::Real, 40 + seed);
            let v = eval_realization(&real, &x).unwrap();
            let expected = x.mat(0).mul(x.mat(0)).unwrap();
            assert!(v.sub(&expected).unwrap().frobenius_norm() < 1e-8);
        }
        // and classifies as (stably) elliptic
        let cert2 = crate::ellipticity::classify(
            real.pencil(),
            &crate::ellipticity::ClassifyOptions::default(),
        );
        assert!(matches!(
            cert2.verdict,
            crate::ellipticity::Verdict::Elliptic | crate::ellipticity::Verdict::StablyElliptic
        ));
    }

    #[test]
    fn unit_certificate_realization() {
        let e = parse("1", 1, Field::Real).unwrap();
        let cert = sohs_decompose(&e, 1, &opts()).unwrap().unwrap();
        assert_eq!(cert.squares.len(), 1);
        let real = positively_elliptic_realization(&cert, &e, &[0.0]).unwrap();
        assert_eq!(real.size(), 2);
        let x = random_selfadjoint_point_seeded(1, 2, Field::Real, 3);
        let v = eval_realization(&real, &x).unwrap();
        let eye = Matrix::identity(Field::Real, 2);
        assert!(v.sub(&eye).unwrap().frobenius_norm() < 1e-9);
    }
}
