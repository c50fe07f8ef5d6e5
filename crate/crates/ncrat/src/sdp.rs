//! In-house dense solver for max-min-eigenvalue semidefinite programs with
//! affine equality structure.
//!
//! The single entry point pattern used by the rest of the crate is:
//! eliminate affine equality constraints on a vectorized variable
//! ([`eliminate_equalities`]), map the resulting affine family into a
//! symmetric-matrix pencil ([`lmi_from_parametrization`]), then maximize the
//! minimum eigenvalue over the family ([`solve_max_min_eig`]). All problems
//! reach this module in real symmetric form; complex data is embedded
//! beforehand.
//!
//! The solver is a primal log-det barrier path-following scheme: for a
//! decreasing barrier weight μ it Newton-centers
//! `f(y,t) = t + μ·log det(F₀ + Σ yᵢFᵢ − tI)` and stops when the duality gap
//! `μ·m` falls below tolerance. The dual certificate `Z = μ·(S − tI)⁻¹` of
//! the final center satisfies `tr Z = 1`, `tr(Z Fᵢ) ≈ 0` and
//! `tr(Z F₀) ≈ t*` by the centering conditions.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

/// Default duality-gap tolerance.
pub const DEFAULT_SDP_TOL: f64 = 1e-8;
/// Default cap on total Newton steps per solve.
pub const DEFAULT_NEWTON_CAP: usize = 200;

/// A dense system of affine equalities `C v = rhs` on a vectorized variable.
#[derive(Debug, Clone)]
pub struct EqualitySystem {
    nvars: usize,
    rows: Vec<DVector<f64>>,
    rhs: Vec<f64>,
}

impl EqualitySystem {
    pub fn new(nvars: usize) -> EqualitySystem {
        EqualitySystem {
            nvars,
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn push(&mut self, coeffs: DVector<f64>, rhs: f64) {
        assert_eq!(coeffs.len(), self.nvars);
        self.rows.push(coeffs);
        self.rhs.push(rhs);
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Orthonormal parametrization `{ v₀ + N z }` of the solution set of an
/// equality system.
#[derive(Debug, Clone)]
pub struct AffineParametrization {
    pub origin: DVector<f64>,
    /// n_vars × k matrix with orthonormal columns spanning the nullspace.
    pub basis: DMatrix<f64>,
}

impl AffineParametrization {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn point(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.origin + &self.basis * z
    }
}

/// Solve the affine equality system by SVD: minimum-norm particular solution
/// plus an orthonormal nullspace basis. Returns `Err(Infeasible)` when the
/// system is inconsistent.
pub fn eliminate_equalities(sys: &EqualitySystem, rtol: f64) -> Result<AffineParametrization> {
    eliminate_equalities_tol(sys, rtol, 1e-8, 0.0)
}

/// [`eliminate_equalities`] with an explicit consistency tolerance for the
/// least-squares residual and an absolute singular value floor below which
/// directions count as rank-deficient (floors out noise-level singular
/// values that would otherwise inject huge junk into the minimum-norm
/// solution).
pub fn eliminate_equalities_tol(
    sys: &EqualitySystem,
    rtol: f64,
    residual_tol: f64,
    sigma_floor: f64,
) -> Result<AffineParametrization> {
    let n = sys.nvars;
    if sys.rows.is_empty() {
        return Ok(AffineParametrization {
            origin: DVector::zeros(n),
            basis: DMatrix::identity(n, n),
        });
    }
    if n == 0 {
        // no variables: consistent exactly when every right-hand side vanishes
        if sys.rhs.iter().all(|r| r.abs() <= 1e-10) {
            return Ok(AffineParametrization {
                origin: DVector::zeros(0),
                basis: DMatrix::zeros(0, 0),
            });
        }
        return Err(Error::Infeasible);
    }
    let m = sys.rows.len();
    let mut c = DMatrix::<f64>::zeros(m, n);
    for (i, row) in sys.rows.iter().enumerate() {
        c.row_mut(i).copy_from(&row.transpose());
    }
    let rhs = DVector::from_column_slice(&sys.rhs);
    let (sigmas, u_side, v_side) = gram_svd(&c);
    let smax = sigmas.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = if smax > 0.0 {
        (rtol * smax).max(sigma_floor)
    } else {
        sigma_floor
    };

    // minimum-norm solution
    let mut origin = DVector::<f64>::zeros(n);
    for (i, &s) in sigmas.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            let coef = u_side.column(i).dot(&rhs) / s;
            origin += v_side.column(i) * coef;
        }
    }
    let residual = (&c * &origin - &rhs).norm();
    if residual > residual_tol * (1.0 + rhs.norm()) {
        return Err(Error::Infeasible);
    }

    // nullspace = complement of the row space; the projector I − Q₁Q₁ᵀ is
    // symmetric with spectrum {0, 1}, so its top eigenvectors are an exact
    // basis.
    let kept: Vec<usize> = (0..sigmas.len()).filter(|&i| sigmas[i] > cutoff).collect();
    let rank = kept.len();
    let mut proj = DMatrix::<f64>::identity(n, n);
    for &i in &kept {
        let q = v_side.column(i);
        proj -= q * q.transpose();
    }
    let peig = SymmetricEigen::new(symmetrize(&proj));
    let cols: Vec<usize> = (0..n).filter(|&i| peig.eigenvalues[i] > 0.5).collect();
    debug_assert_eq!(cols.len(), n - rank);
    let mut basis = DMatrix::<f64>::zeros(n, cols.len());
    for (out, &idx) in cols.iter().enumerate() {
        basis.column_mut(out).copy_from(&peig.eigenvectors.column(idx));
    }
    Ok(AffineParametrization { origin, basis })
}

/// Rank-revealing factorization `C ≈ U diag(σ) Vᵀ` through the symmetric
/// eigendecomposition of the smaller Gram matrix. nalgebra's bidiagonal SVD
/// mis-factors some exactly rank-deficient matrices, while its symmetric
/// eigensolver is dependable; all rank decisions on structured data go
/// through here.
fn gram_svd(c: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    let (m, n) = (c.nrows(), c.ncols());
    if m == 0 || n == 0 {
        return (Vec::new(), DMatrix::zeros(m, 0), DMatrix::zeros(n, 0));
    }
    let small_left = m <= n;
    let gram = if small_left {
        c * c.transpose()
    } else {
        c.transpose() * c
    };
    let eig = SymmetricEigen::new(symmetrize(&gram));
    let k = gram.nrows();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let mut sigmas = Vec::with_capacity(k);
    let mut small_vecs = DMatrix::<f64>::zeros(k, k);
    for (out, &idx) in order.iter().enumerate() {
        sigmas.push(eig.eigenvalues[idx].max(0.0).sqrt());
        small_vecs.column_mut(out).copy_from(&eig.eigenvectors.column(idx));
    }
    // complete the other side: w_i = C(ᵀ)·q_i / σ_i, renormalized
    let mut other = DMatrix::<f64>::zeros(if small_left { n } else { m }, k);
    for i in 0..k {
        if sigmas[i] > 0.0 {
            let q = small_vecs.column(i);
            let w = if small_left {
                c.transpose() * q
            } else {
                c * q
            };
            let norm = w.norm();
            if norm > 0.0 {
                other.column_mut(i).copy_from(&(w / norm));
                sigmas[i] = norm; // consistent scale: ‖Cᵀq‖ = σ exactly
                continue;
            }
        }
        sigmas[i] = 0.0;
    }
    if small_left {
        (sigmas, small_vecs, other)
    } else {
        (sigmas, other, small_vecs)
    }
}

/// Linear matrix inequality data: maximize `λ_min(F₀ + Σ yᵢFᵢ)`.
#[derive(Debug, Clone)]
pub struct LmiProblem {
    pub base: DMatrix<f64>,
    pub directions: Vec<DMatrix<f64>>,
    pub description: String,
}

impl LmiProblem {
    pub fn new(base: DMatrix<f64>, directions: Vec<DMatrix<f64>>, description: &str) -> LmiProblem {
        LmiProblem {
            base: symmetrize(&base),
            directions: directions.iter().map(symmetrize).collect(),
            description: description.to_string(),
        }
    }

    pub fn size(&self) -> usize {
        self.base.nrows()
    }

    pub fn matrix_at(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let mut s = self.base.clone();
        for (i, f) in self.directions.iter().enumerate() {
            s += f * y[i];
        }
        s
    }
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Build an [`LmiProblem`] from an affine parametrization and an affine map
/// from the variable vector to a symmetric matrix.
pub fn lmi_from_parametrization<F>(
    param: &AffineParametrization,
    map: F,
    description: &str,
) -> LmiProblem
where
    F: Fn(&DVector<f64>) -> DMatrix<f64>,
{
    let base = map(&param.origin);
    let mut directions = Vec::with_capacity(param.dim());
    for i in 0..param.dim() {
        let shifted = &param.origin + param.basis.column(i).into_owned();
        directions.push(map(&shifted) - &base);
    }
    // Directions that are pure floating-point residue must be exactly zero:
    // a tiny nonzero direction has a near-singular Hessian block and lets the
    // barrier drift unboundedly along it.
    let scale = 1.0 + base.norm() + directions.iter().map(|f| f.norm()).fold(0.0, f64::max);
    for f in &mut directions {
        if f.norm() <= 1e-12 * scale {
            f.fill(0.0);
        }
    }
    LmiProblem::new(base, directions, description)
}

/// Solution status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmiStatus {
    OptimalInterior,
    OptimalBoundary,
    Infeasible,
    NumericalFailure,
}

/// Solver output. When `status` is not `NumericalFailure`:
/// `S(y) − t_star·I ⪰ −tol`, `Z ⪰ 0`, `tr Z = 1`, `|tr(Z Fᵢ)| ≤ tol` and
/// `|tr(Z F₀) − t_star| ≤ tol·m`.
#[derive(Debug, Clone)]
pub struct LmiSolution {
    pub t_star: f64,
    pub y: DVector<f64>,
    pub primal_matrix: DMatrix<f64>,
    pub dual_matrix: DMatrix<f64>,
    pub status: LmiStatus,
    pub newton_steps: usize,
    /// Whether the returned point is reliably in the relative interior of
    /// the feasible face (strictly feasible, or produced by a certified
    /// facial-reduction round). Only such points justify kernel
    /// restrictions downstream.
    pub facial_certified: bool,
}

/// Solver options.
#[derive(Debug, Clone)]
pub struct LmiOptions {
    pub tol: f64,
    pub newton_cap: usize,
    pub mu_factor: f64,
    /// Stop early once t exceeds this value (feasibility mode).
    pub t_cap: Option<f64>,
}

impl Default for LmiOptions {
    fn default() -> Self {
        LmiOptions {
            tol: DEFAULT_SDP_TOL,
            newton_cap: DEFAULT_NEWTON_CAP,
            mu_factor: 0.2,
            t_cap: None,
        }
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    min_eig(m)
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(symmetrize(m)).eigenvalues.min()
}

/// Maximize `t` subject to `F₀ + Σ yᵢFᵢ ⪰ tI` by log-barrier Newton
/// path-following. Always feasible; `t_star` is the attained
/// `λ_min(S(y*))`, accurate to the duality gap tolerance. Retries once with
/// a gentler barrier schedule when the first pass fails to certify.
pub fn solve_max_min_eig(p: &LmiProblem, opts: &LmiOptions) -> LmiSolution {
    // normalize direction scales (pure reparametrization of y)
    let mut scales = Vec::with_capacity(p.directions.len());
    let normalized = LmiProblem {
        base: p.base.clone(),
        directions: p
            .directions
            .iter()
            .map(|f| {
                let n = f.norm();
                if n > 0.0 {
                    scales.push(n);
                    f / n
                } else {
                    scales.push(1.0);
                    f.clone()
                }
            })
            .collect(),
        description: p.description.clone(),
    };
    let mut sol = {
        let first = solve_max_min_eig_once(&normalized, opts);
        if first.status != LmiStatus::NumericalFailure {
            first
        } else {
            let gentler = LmiOptions {
                mu_factor: opts.mu_factor.sqrt().min(0.6),
                newton_cap: opts.newton_cap * 3,
                ..opts.clone()
            };
            let second = solve_max_min_eig_once(&normalized, &gentler);
            if second.status != LmiStatus::NumericalFailure || second.t_star >= first.t_star {
                second
            } else {
                first
            }
        }
    };
    for (i, s) in scales.iter().enumerate() {
        sol.y[i] /= s;
    }
    sol
}

fn solve_max_min_eig_once(p: &LmiProblem, opts: &LmiOptions) -> LmiSolution {
    let m = p.size();
    let k = p.directions.len();
    let scale = 1.0 + p.base.norm() + p.directions.iter().map(|f| f.norm()).fold(0.0, f64::max);

    // zero directions (dropped equality-nullspace coordinates with no matrix
    // effect) stay fixed at 0 and never enter the Newton system
    let active: Vec<usize> = (0..k).filter(|&i| p.directions[i].norm() > 0.0).collect();
    let ka = active.len();

    let mut y = DVector::<f64>::zeros(k);
    let mut t = min_eig(&p.base) - 1.0;
    let mut mu = scale.max(1.0);
    let mut steps_used = 0usize;

    let fail = |steps: usize, y: &DVector<f64>, t: f64, p: &LmiProblem, why: &str| {
        if std::env::var_os("NCRAT_SDP_DEBUG").is_some() {
            eprintln!("[sdp] {}: FAIL ({why}) steps={steps} t={t:.6e}", p.description);
        }
        LmiSolution {
            t_star: t,
            y: y.clone(),
            primal_matrix: p.matrix_at(y),
            dual_matrix: DMatrix::zeros(m, m),
            status: LmiStatus::NumericalFailure,
            newton_steps: steps,
            facial_certified: false,
        }
    };

    // directions for the combined (y, t) variable; t enters as −I
    let mut neg_eye = DMatrix::<f64>::identity(m, m);
    neg_eye *= -1.0;

    let mut final_dual: Option<DMatrix<f64>> = None;
    let mut capped = false;
    'path: loop {
        // Newton-center f = t + mu log det(S(y) - tI); the center can sit at
        // infinity along a ray, so the per-stage budget is small and the path
        // moves on.
        for _ in 0..15 {
            if steps_used >= opts.newton_cap {
                capped = true;
                break;
            }
            let s = p.matrix_at(&y);
            let slack = &s - DMatrix::<f64>::identity(m, m) * t;
            let chol = match Cholesky::new(slack.clone()) {
                Some(c) => c,
                None => {
                    // fell out of the cone by rounding; retreat in t
                    t -= mu.max(1e-12 * scale);
                    continue;
                }
            };
            let l = chol.l();

            // congruences S̃ᵢ = L⁻¹ Fᵢ L⁻ᵀ for Fᵢ, and for −I as the t-direction
            let mut w = DMatrix::<f64>::zeros(m * m, ka + 1);
            let mut grad = DVector::<f64>::zeros(ka + 1);
            for col in 0..=ka {
                let f = if col < ka {
                    &p.directions[active[col]]
                } else {
                    &neg_eye
                };
                let x = l.solve_lower_triangular(f).expect("triangular solve");
                let s_tilde = l
                    .solve_lower_triangular(&x.transpose())
                    .expect("triangular solve")
                    .transpose();
                grad[col] = mu * s_tilde.trace();
                for (idx, val) in s_tilde.iter().enumerate() {
                    w[(idx, col)] = *val;
                }
            }
            grad[ka] += 1.0; // objective term ∂t

            // Hessian = −μ WᵀW; solve (μ WᵀW) Δ = grad through a spectral
            // decomposition with an eigenvalue floor, which keeps the
            // direction sane when directions are nearly dependent
            let h0 = {
                let mut h = w.transpose() * &w;
                h *= mu;
                h
            };
            let heig = SymmetricEigen::new(h0);
            let hmax = heig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
            if !(hmax > 0.0) {
                return fail(steps_used, &y, t, p, "degenerate hessian");
            }
            let floor = 1e-12 * hmax;
            let mut delta = DVector::<f64>::zeros(ka + 1);
            for idx2 in 0..=ka {
                let lam = heig.eigenvalues[idx2];
                if lam > floor {
                    let coef = heig.eigenvectors.column(idx2).dot(&grad) / lam;
                    delta += heig.eigenvectors.column(idx2) * coef;
                }
            }
            let decrement = grad.dot(&delta);
            steps_used += 1;

            if !decrement.is_finite() {
                return fail(steps_used, &y, t, p, "non-finite decrement");
            }
            if decrement <= 1e-11 * (1.0 + t.abs()) {
                break;
            }

            // backtracking line search keeping S − tI positive definite
            let mut dy = DVector::<f64>::zeros(k);
            for col in 0..ka {
                dy[active[col]] = delta[col];
            }
            let dt = delta[ka];
            let f_cur =
                t + mu * chol.l_dirty().diagonal().iter().map(|d| 2.0 * d.ln()).sum::<f64>();
            let mut alpha = 1.0f64;
            let mut accepted = false;
            for _ in 0..60 {
                let y_new = &y + &dy * alpha;
                let t_new = t + dt * alpha;
                let slack_new = p.matrix_at(&y_new) - DMatrix::<f64>::identity(m, m) * t_new;
                if let Some(c) = Cholesky::new(slack_new) {
                    let f_new = t_new
                        + mu * c.l_dirty().diagonal().iter().map(|d| 2.0 * d.ln()).sum::<f64>();
                    if f_new >= f_cur + 0.05 * alpha * decrement {
                        y = y_new;
                        t = t_new;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
                if alpha < 1e-12 {
                    break;
                }
            }
            if !accepted {
                break; // stalled at this μ, tighten the barrier
            }
            if t > 1e9 * scale {
                return fail(steps_used, &y, t, p, "unbounded objective");
            }
            if let Some(cap) = opts.t_cap {
                if t >= cap {
                    break 'path;
                }
            }
        }

        // dual certificate at the stage center
        let slack = p.matrix_at(&y) - DMatrix::<f64>::identity(m, m) * t;
        if let Some(chol) = Cholesky::new(slack) {
            final_dual = Some(chol.inverse() * mu);
        }
        let gap_done = mu * (m as f64) <= 0.5 * opts.tol * (1.0 + t.abs());
        if gap_done || capped || mu < 1e-15 {
            break;
        }
        mu *= opts.mu_factor;
    }

    let primal = p.matrix_at(&y);
    let t_star = min_eig(&primal);
    let dual = match final_dual {
        Some(z) => {
            let tr = z.trace();
            if tr > 0.0 {
                z / tr
            } else {
                z
            }
        }
        None => return fail(steps_used, &y, t, p, "no dual factorization"),
    };
    // certify: duality gap and dual equality residuals must be small
    let gap = (dual.component_mul(&p.base)).sum() - t_star;
    let residual = p
        .directions
        .iter()
        .map(|f| (dual.component_mul(f)).sum().abs())
        .fold(0.0, f64::max);
    let certified = gap <= 10.0 * opts.tol * (1.0 + t_star.abs())
        && residual <= 10.0 * opts.tol * scale;
    if std::env::var_os("NCRAT_SDP_DEBUG").is_some() {
        eprintln!(
            "[sdp] {}: m={} k={} t*={:.9e} gap={:.3e} residual={:.3e} steps={} mu={:.3e} capped={}",
            p.description, m, k, t_star, gap, residual, steps_used, mu, capped
        );
    }
    let status = if certified {
        LmiStatus::OptimalInterior
    } else {
        LmiStatus::NumericalFailure
    };
    LmiSolution {
        facial_certified: t_star > opts.tol && status == LmiStatus::OptimalInterior,
        t_star,
        y,
        primal_matrix: primal,
        dual_matrix: dual,
        status,
        newton_steps: steps_used,
    }
}

/// A feasible point of `{S(y) ⪰ 0}` of maximal rank, found by barrier
/// centering followed by facial reduction: the kernel of the centered
/// optimum is forced to zero by linear constraints, the problem is
/// compressed to the orthogonal complement and re-centered, iterating while
/// the compressed optimum stays on the boundary.
///
/// Precondition: `solve_max_min_eig` returned `t_star ≈ 0` (the caller has
/// already ruled out strictly feasible and strictly infeasible cases).
pub fn max_rank_feasible(p: &LmiProblem, opts: &LmiOptions) -> LmiSolution {
    let first = solve_max_min_eig(p, opts);
    max_rank_feasible_from(p, first, opts)
}

/// [`max_rank_feasible`] continuing from an already-computed boundary solve.
///
/// Facial reduction loop. Directions that every PSD member of the affine
/// family must annihilate are accumulated and forced to zero:
///
/// 1. coordinates whose diagonal entry vanishes identically on the image
///    space span — a PSD matrix with a zero diagonal entry kills that
///    coordinate, and these directions are exact linear algebra;
/// 2. failing that, the range of the transversality probe's maximizer
///    (a PSD matrix orthogonal to the image space).
///
/// The compressed slice is re-solved after each forcing round. A strictly
/// feasible compressed optimum delivers a genuine PSD point whose kernel is
/// exactly the forced space — which is what downstream kernel restrictions
/// need — regardless of how the forcing directions were found. `Infeasible`
/// is returned when the probe certifies that no nonzero PSD point exists or
/// when forcing exact-quality directions yields an inconsistent system;
/// both conclusions are suppressed once an approximate direction entered
/// the forcing history.
pub fn max_rank_feasible_from(
    p: &LmiProblem,
    first: LmiSolution,
    opts: &LmiOptions,
) -> LmiSolution {
    if first.t_star > opts.tol || !first.t_star.is_finite() {
        return first;
    }
    let m = p.size();
    let k = p.directions.len();
    let mut forced = DMatrix::<f64>::zeros(m, 0);
    let mut exact_only = true;
    let mut total_steps = first.newton_steps;
    let mut best = first.clone();

    for round in 0..=m {
        // slice over the forced subspace
        let (param, complement) = if forced.ncols() == 0 {
            (
                AffineParametrization {
                    origin: DVector::zeros(k),
                    basis: DMatrix::identity(k, k),
                },
                DMatrix::<f64>::identity(m, m),
            )
        } else {
            let scale = 1.0
                + p.base.norm()
                + p.directions.iter().map(|f| f.norm()).fold(0.0, f64::max);
            let mut sys = EqualitySystem::new(k);
            for c in 0..forced.ncols() {
                let v = forced.column(c).into_owned();
                for row in 0..m {
                    let mut coeffs = DVector::<f64>::zeros(k);
                    for (i, f) in p.directions.iter().enumerate() {
                        coeffs[i] = f.row(row).transpose().dot(&v);
                    }
                    let rhs = -p.base.row(row).transpose().dot(&v);
                    // rows that are floating-point residue of the exactly-zero
                    // equation must not fake rank
                    if coeffs.norm() + rhs.abs() <= 1e-12 * scale {
                        continue;
                    }
                    sys.push(coeffs, rhs);
                }
            }
            if sys.is_empty() {
                (
                    AffineParametrization {
                        origin: DVector::zeros(k),
                        basis: DMatrix::identity(k, k),
                    },
                    orthogonal_complement(&forced),
                )
            } else {
            match eliminate_equalities_tol(&sys, 1e-10, 3e-6, 1e-7 * scale) {
                Ok(pr) => (pr, orthogonal_complement(&forced)),
                Err(Error::Infeasible) if exact_only => {
                    let mut sol = best.clone();
                    sol.status = LmiStatus::Infeasible;
                    sol.facial_certified = false;
                    return sol;
                }
                Err(_) => return boundary(best, p, opts),
            }
            }
        };
        if complement.ncols() == 0 {
            // everything is forced to vanish and the system was consistent:
            // the zero matrix is the unique feasible point
            let y_full = param.origin.clone();
            let primal = full_matrix(p, &y_full);
            return LmiSolution {
                t_star: 0.0,
                y: y_full,
                primal_matrix: primal,
                dual_matrix: best.dual_matrix.clone(),
                status: LmiStatus::OptimalBoundary,
                newton_steps: total_steps,
                facial_certified: exact_only,
            };
        }
        let compressed = lmi_from_parametrization(
            &param,
            |v| {
                let s = full_matrix(p, v);
                complement.transpose() * s * &complement
            },
            &format!("{} / face {}", p.description, round),
        );
        let sol = if round == 0 {
            first.clone()
        } else {
            let s = solve_max_min_eig(&compressed, opts);
            total_steps += s.newton_steps;
            s
        };
        if !sol.t_star.is_finite() {
            return boundary(best, p, opts);
        }
        let y_full = param.point(&sol.y);
        let primal = full_matrix(p, &y_full);
        if sol.t_star > opts.tol {
            // genuine PSD point with kernel exactly the forced space; the
            // verification below guards against loose forcing systems
            if min_eig(&primal) >= -10.0 * opts.tol {
                return LmiSolution {
                    t_star: 0.0,
                    y: y_full,
                    primal_matrix: primal,
                    dual_matrix: sol.dual_matrix.clone(),
                    status: LmiStatus::OptimalBoundary,
                    newton_steps: total_steps,
                    facial_certified: true,
                };
            }
            return boundary(best, p, opts);
        }
        if sol.t_star >= -10.0 * opts.tol {
            best = LmiSolution {
                t_star: 0.0,
                y: y_full.clone(),
                primal_matrix: primal.clone(),
                dual_matrix: sol.dual_matrix.clone(),
                status: LmiStatus::OptimalBoundary,
                newton_steps: total_steps,
                facial_certified: false,
            };
        } else if round > 0 && sol.status == LmiStatus::OptimalInterior {
            // every PSD family member must kill the forced directions, yet
            // the slice restricted to them is certifiably negative
            if exact_only {
                let mut out = best.clone();
                out.status = LmiStatus::Infeasible;
                out.facial_certified = false;
                return out;
            }
            return boundary(best, p, opts);
        }

        // terminal small spans: decide the dichotomy directly on the circle
        let mhat = complement.ncols();
        let span = image_span(&compressed);
        if span.ncols() <= 2 {
            if let Some((sup, maximizer)) = small_span_sweep(&span_matrices(&span, mhat)) {
                if sup < -1e-9 {
                    // no PSD matrix anywhere in the span
                    if exact_only {
                        let mut out = best.clone();
                        out.status = LmiStatus::Infeasible;
                        out.facial_certified = false;
                        return out;
                    }
                    return boundary(best, p, opts);
                }
                // recover the family member proportional to the maximizer:
                // α·S* = F̂₀ + Σ ŷᵢ F̂ᵢ, solved jointly in (α, ŷ)
                let khat = compressed.directions.len();
                let nvars_ls = 1 + khat;
                let mut sysls = EqualitySystem::new(nvars_ls);
                for i in 0..mhat {
                    for j in i..mhat {
                        let mut coeffs = DVector::<f64>::zeros(nvars_ls);
                        coeffs[0] = maximizer[(i, j)];
                        for (q, f) in compressed.directions.iter().enumerate() {
                            coeffs[1 + q] = -f[(i, j)];
                        }
                        sysls.push(coeffs, compressed.base[(i, j)]);
                    }
                }
                if let Ok(pls) = eliminate_equalities_tol(&sysls, 1e-10, 1e-8, 0.0) {
                    let alpha = pls.origin[0];
                    if alpha.abs() > 1e-9 {
                        let yhat = DVector::<f64>::from_fn(khat, |i, _| pls.origin[1 + i] / 1.0);
                        let y_full = param.point(&yhat);
                        let primal = full_matrix(p, &y_full);
                        if min_eig(&primal) >= -10.0 * opts.tol {
                            return LmiSolution {
                                t_star: 0.0,
                                y: y_full,
                                primal_matrix: primal,
                                dual_matrix: best.dual_matrix.clone(),
                                status: LmiStatus::OptimalBoundary,
                                newton_steps: total_steps,
                                facial_certified: true,
                            };
                        }
                    }
                }
                return boundary(best, p, opts);
            }
        }
        let mut zero_positions = Vec::new();
        for pos in 0..mhat {
            let worst = (0..span.ncols())
                .map(|c| span[(pos * mhat + pos, c)].abs())
                .fold(0.0f64, f64::max);
            if worst <= 1e-12 {
                zero_positions.push(pos);
            }
        }
        let new_dirs: DMatrix<f64> = if !zero_positions.is_empty() {
            let mut d = DMatrix::<f64>::zeros(m, zero_positions.len());
            for (j, &pos) in zero_positions.iter().enumerate() {
                d.column_mut(j).copy_from(&complement.column(pos));
            }
            d
        } else {
            let report = transversality_probe(&compressed, opts);
            if report.certifies_trivial_intersection() {
                // no nonzero PSD point; the zero matrix itself may still be
                // the (legitimate) unique feasible point
                let scale = 1.0
                    + p.directions.iter().map(|f| f.norm()).fold(0.0, f64::max);
                if p.base.norm() <= 1e-10 * scale {
                    let y_zero = DVector::<f64>::zeros(k);
                    return LmiSolution {
                        t_star: 0.0,
                        y: y_zero.clone(),
                        primal_matrix: full_matrix(p, &y_zero),
                        dual_matrix: best.dual_matrix.clone(),
                        status: LmiStatus::OptimalBoundary,
                        newton_steps: total_steps,
                        facial_certified: exact_only,
                    };
                }
                if exact_only {
                    let mut out = best.clone();
                    out.status = LmiStatus::Infeasible;
                    out.facial_certified = false;
                    return out;
                }
                return boundary(best, p, opts);
            }
            if report.lambda_min < -10.0 * opts.tol {
                return boundary(best, p, opts);
            }
            // the probe's Z tells how many directions the common kernel has;
            // the compressed primal optimum's bottom eigenvectors carry them
            // at machine accuracy
            let count = significant_range(&report.z, 0.3).ncols().max(1);
            let bottom = bottom_eigenvectors(&sol.primal_matrix, count);
            if bottom.ncols() == 0 {
                return boundary(best, p, opts);
            }
            exact_only = false;
            &complement * bottom
        };
        let mut stacked = DMatrix::<f64>::zeros(m, forced.ncols() + new_dirs.ncols());
        stacked.columns_mut(0, forced.ncols()).copy_from(&forced);
        stacked
            .columns_mut(forced.ncols(), new_dirs.ncols())
            .copy_from(&new_dirs);
        let grown = orthonormal_cols(&stacked);
        if grown.ncols() == forced.ncols() {
            return boundary(best, p, opts);
        }
        forced = grown;
    }
    boundary(best, p, opts)
}

/// Direct decision for spans of dimension ≤ 2: maximize λmin over the unit
/// circle of the span. λmin is Lipschitz on the compact circle, so the sign
/// of the supremum is resolved to ~1e-12 — far beyond SDP gap accuracy.
/// Returns the supremum and its maximizer (a unit-norm symmetric matrix).
fn small_span_sweep(span: &[DMatrix<f64>]) -> Option<(f64, DMatrix<f64>)> {
    match span.len() {
        1 => {
            let a = min_eig(&span[0]);
            let b = min_eig(&(-&span[0]));
            if a >= b {
                Some((a, span[0].clone()))
            } else {
                Some((b, -&span[0]))
            }
        }
        2 => {
            let eigs = |theta: f64| {
                let s = &span[0] * theta.cos() + &span[1] * theta.sin();
                let mut e = SymmetricEigen::new(symmetrize(&s)).eigenvalues.as_slice().to_vec();
                e.sort_by(|a, b| a.partial_cmp(b).unwrap());
                e
            };
            let value = |theta: f64| eigs(theta)[0];
            let coarse = 1024usize;
            let mut best_theta = 0.0f64;
            let mut best = f64::NEG_INFINITY;
            for i in 0..coarse {
                let theta = i as f64 / coarse as f64 * std::f64::consts::TAU;
                let v = value(theta);
                if v > best {
                    best = v;
                    best_theta = theta;
                }
            }
            // golden-section polish around the best grid point
            let (mut lo, mut hi) = (
                best_theta - std::f64::consts::TAU / coarse as f64,
                best_theta + std::f64::consts::TAU / coarse as f64,
            );
            let phi = 0.618_033_988_749_894_9;
            for _ in 0..80 {
                let m1 = hi - phi * (hi - lo);
                let m2 = lo + phi * (hi - lo);
                if value(m1) >= value(m2) {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            let mut theta = 0.5 * (lo + hi);
            let sup = value(theta);
            // the optimum can sit on a flat arc; prefer the arc point with
            // the largest second eigenvalue (maximal rank)
            let mut best_second = f64::NEG_INFINITY;
            for i in 0..coarse {
                let cand = i as f64 / coarse as f64 * std::f64::consts::TAU;
                let e = eigs(cand);
                if e[0] >= sup - 1e-9 {
                    let second = e.get(1).copied().unwrap_or(e[0]);
                    if second > best_second {
                        best_second = second;
                        theta = cand;
                    }
                }
            }
            let maximizer = &span[0] * theta.cos() + &span[1] * theta.sin();
            Some((value(theta), maximizer))
        }
        _ => None,
    }
}

/// Rebuild the symmetric span matrices from stacked orthonormal columns.
fn span_matrices(span_cols: &DMatrix<f64>, m: usize) -> Vec<DMatrix<f64>> {
    (0..span_cols.ncols())
        .map(|c| {
            let mut w = DMatrix::<f64>::zeros(m, m);
            for i in 0..m {
                for j in 0..m {
                    w[(i, j)] = span_cols[(j * m + i, c)];
                }
            }
            symmetrize(&w)
        })
        .collect()
}

/// Final fallback: the point is usable whenever its primal matrix is
/// (near-)feasible, independently of how the dual side fared.
fn boundary(mut sol: LmiSolution, p: &LmiProblem, opts: &LmiOptions) -> LmiSolution {
    let attained = min_eig(&p.matrix_at(&sol.y));
    if attained >= -10.0 * opts.tol {
        if sol.status != LmiStatus::Infeasible {
            sol.status = LmiStatus::OptimalBoundary;
        }
    } else {
        sol.status = LmiStatus::NumericalFailure;
    }
    sol.facial_certified = false;
    sol
}

/// Outcome of [`transversality_probe`]: `lambda_min` of the found Z and its
/// worst orthogonality defect against an orthonormal basis of the image
/// space. `Z ≻ 0` with `λmin ≫ defect` certifies `W ∩ PSD = {0}` directly:
/// a nonzero PSD `S ∈ W` with `tr S = 1` would give `⟨Z,S⟩ ≥ λmin` yet
/// `|⟨Z,S⟩| ≤ defect·‖S‖`.
#[derive(Debug, Clone)]
pub struct TransversalityReport {
    pub lambda_min: f64,
    pub orthogonality_defect: f64,
    /// The matrix achieving `lambda_min`, orthogonal to the image space.
    pub z: DMatrix<f64>,
}

impl TransversalityReport {
    pub fn certifies_trivial_intersection(&self) -> bool {
        self.lambda_min > (1e3 * self.orthogonality_defect).max(1e-9)
    }
}

/// Look for Z ≻ 0 orthogonal to the image space W = span{F₀, F₁, …} by
/// maximizing λmin(Z) over {Z ∈ W^⊥, tr Z = 1}. Such a Z exists exactly
/// when W ∩ PSD = {0} (separate the compact trace-one PSD base from the
/// subspace); the report is self-certifying from the primal side.
pub fn transversality_probe(p: &LmiProblem, opts: &LmiOptions) -> TransversalityReport {
    let m = p.size();
    let nvars = m * (m + 1) / 2;
    let idx = |i: usize, j: usize| i * m - i * (i + 1) / 2 + j;
    let span_basis = image_span(p);
    let mut sys = EqualitySystem::new(nvars);
    for c in 0..span_basis.ncols() {
        let mut row = DVector::<f64>::zeros(nvars);
        for i in 0..m {
            for j in i..m {
                let w_ij = span_basis[(i * m + j, c)];
                row[idx(i, j)] = if i == j { w_ij } else { 2.0 * w_ij };
            }
        }
        sys.push(row, 0.0);
    }
    let mut trace_row = DVector::<f64>::zeros(nvars);
    for i in 0..m {
        trace_row[idx(i, i)] = 1.0;
    }
    sys.push(trace_row, 1.0);
    let bad = TransversalityReport {
        lambda_min: f64::NEG_INFINITY,
        orthogonality_defect: f64::INFINITY,
        z: DMatrix::zeros(m, m),
    };
    let param = match eliminate_equalities(&sys, 1e-10) {
        Ok(pr) => pr,
        Err(_) => return bad,
    };
    let unvec = |v: &DVector<f64>| {
        let mut z = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                z[(i, j)] = v[idx(i, j)];
                z[(j, i)] = v[idx(i, j)];
            }
        }
        z
    };
    let probe = lmi_from_parametrization(
        &param,
        &unvec,
        &format!("{} / transversality probe", p.description),
    );
    let sol = solve_max_min_eig(&probe, opts);
    if !sol.t_star.is_finite() {
        return bad;
    }
    let z = unvec(&param.point(&sol.y));
    let mut defect = 0.0f64;
    for c in 0..span_basis.ncols() {
        let mut inner = 0.0;
        for (pos, val) in z.iter().enumerate() {
            inner += val * span_basis[(pos, c)];
        }
        defect = defect.max(inner.abs());
    }
    TransversalityReport {
        lambda_min: min_eig(&z),
        orthogonality_defect: defect,
        z,
    }
}

/// Orthonormal basis (as stacked m²-vectors) of the image space
/// span{F₀, F₁, …} of an LMI problem, with each element normalized first so
/// badly scaled particular solutions cannot wreck the conditioning.
pub(crate) fn image_span(p: &LmiProblem) -> DMatrix<f64> {
    let m = p.size();
    let mut stacked = DMatrix::<f64>::zeros(m * m, p.directions.len() + 1);
    for (col, w) in std::iter::once(&p.base)
        .chain(p.directions.iter())
        .enumerate()
    {
        let norm = w.norm();
        if norm > 0.0 {
            for (pos, val) in w.iter().enumerate() {
                stacked[(pos, col)] = val / norm;
            }
        }
    }
    orthonormal_cols(&stacked)
}

/// The `count` eigenvectors of a symmetric matrix with smallest eigenvalues.
fn bottom_eigenvectors(s: &DMatrix<f64>, count: usize) -> DMatrix<f64> {
    let n = s.nrows();
    let count = count.min(n);
    if count == 0 || n == 0 {
        return DMatrix::zeros(n, 0);
    }
    let eig = SymmetricEigen::new(symmetrize(s));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let mut out = DMatrix::<f64>::zeros(n, count);
    for (j, &i) in order.iter().take(count).enumerate() {
        out.column_mut(j).copy_from(&eig.eigenvectors.column(i));
    }
    out
}

/// Eigenvectors of a PSD matrix with eigenvalue above `cut·λmax`.
fn significant_range(z: &DMatrix<f64>, cut: f64) -> DMatrix<f64> {
    if z.nrows() == 0 || z.norm() == 0.0 {
        return DMatrix::zeros(z.nrows(), 0);
    }
    let eig = SymmetricEigen::new(symmetrize(z));
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    if lmax <= 0.0 {
        return DMatrix::zeros(z.nrows(), 0);
    }
    let keep: Vec<usize> = (0..z.nrows())
        .filter(|&i| eig.eigenvalues[i] > cut * lmax)
        .collect();
    let mut out = DMatrix::<f64>::zeros(z.nrows(), keep.len());
    for (j, &i) in keep.iter().enumerate() {
        out.column_mut(j).copy_from(&eig.eigenvectors.column(i));
    }
    out
}

fn full_matrix(p: &LmiProblem, y: &DVector<f64>) -> DMatrix<f64> {
    p.matrix_at(y)
}

fn orthogonal_complement(v: &DMatrix<f64>) -> DMatrix<f64> {
    let n = v.nrows();
    let mut proj = DMatrix::<f64>::identity(n, n);
    proj -= v * v.transpose();
    let eig = SymmetricEigen::new(symmetrize(&proj));
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    let mut out = DMatrix::<f64>::zeros(n, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        out.column_mut(j).copy_from(&eig.eigenvectors.column(i));
    }
    out
}

fn orthonormal_cols(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.ncols() == 0 {
        return m.clone();
    }
    let (sigmas, left, _) = gram_svd(m);
    let smax = sigmas.iter().cloned().fold(0.0f64, f64::max);
    let keep: Vec<usize> = (0..sigmas.len())
        .filter(|&i| sigmas[i] > 1e-10 * smax.max(1.0))
        .collect();
    let mut out = DMatrix::<f64>::zeros(m.nrows(), keep.len());
    for (j, &i) in keep.iter().enumerate() {
        out.column_mut(j).copy_from(&left.column(i));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn opts() -> LmiOptions {
        LmiOptions::default()
    }

    fn diag(vals: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(vals))
    }

    fn check_dual(p: &LmiProblem, sol: &LmiSolution, tol: f64) {
        let z = &sol.dual_matrix;
        assert!(min_eig(z) >= -tol, "dual not PSD");
        assert!((z.trace() - 1.0).abs() <= tol, "dual trace != 1");
        for f in &p.directions {
            assert!((z.component_mul(f)).sum().abs() <= 1e-5, "dual not orthogonal to direction");
        }
        // weak duality
        let upper = z.component_mul(&p.base).sum();
        assert!(upper >= sol.t_star - 1e-6, "weak duality violated: {} < {}", upper, sol.t_star);
    }

    #[test]
    fn identity_no_directions() {
        let p = LmiProblem::new(DMatrix::identity(3, 3), vec![], "I");
        let sol = solve_max_min_eig(&p, &opts());
        assert_eq!(sol.status, LmiStatus::OptimalInterior);
        assert!((sol.t_star - 1.0).abs() < 1e-7);
        check_dual(&p, &sol, 1e-6);
    }

    #[test]
    fn fixed_spectrum_dual_concentrates() {
        let p = LmiProblem::new(diag(&[1.0, -1.0]), vec![], "diag");
        let sol = solve_max_min_eig(&p, &opts());
        assert!((sol.t_star + 1.0).abs() < 1e-7);
        // Z → diag(0, 1)
        assert!(sol.dual_matrix[(1, 1)] > 0.999);
        assert!(sol.dual_matrix[(0, 0)].abs() < 1e-3);
        check_dual(&p, &sol, 1e-6);
    }

    #[test]
    fn closed_form_min_of_two_lines() {
        // S(y) = diag(1, -1 + y): max over y of min(1, y-1) = 1, attained y ≥ 2
        let p = LmiProblem::new(diag(&[1.0, -1.0]), vec![diag(&[0.0, 1.0])], "two lines");
        let sol = solve_max_min_eig(&p, &opts());
        assert!((sol.t_star - 1.0).abs() < 1e-6, "t* = {}", sol.t_star);
        assert!(sol.y[0] >= 2.0 - 1e-5);
        check_dual(&p, &sol, 1e-6);
    }

    #[test]
    fn monotone_under_added_directions() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..5 {
            let m = 4;
            let base = random_sym(&mut rng, m);
            let f1 = random_sym(&mut rng, m);
            let f2 = random_sym(&mut rng, m);
            let p1 = LmiProblem::new(base.clone(), vec![f1.clone()], "one");
            let p2 = LmiProblem::new(base.clone(), vec![f1, f2], "two");
            let s1 = solve_max_min_eig(&p1, &opts());
            let s2 = solve_max_min_eig(&p2, &opts());
            assert!(
                s2.t_star >= s1.t_star - 1e-6,
                "feasible set grew but t* fell: {} vs {}",
                s1.t_star,
                s2.t_star
            );
        }
    }

    fn random_sym(rng: &mut StdRng, n: usize) -> DMatrix<f64> {
        let a = DMatrix::<f64>::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        (&a + a.transpose()) * 0.5
    }

    #[test]
    fn recovers_constructed_optimum() {
        // S = Q diag(positive) Qᵀ − y₁F₁ − y₂F₂ at y = y*, with traceless Fᵢ
        // so the optimum is finite; the dual certificate pins optimality.
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..5 {
            let n = 5;
            let q = {
                let a = DMatrix::<f64>::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
                a.qr().q()
            };
            let lam = DVector::<f64>::from_fn(n, |_, _| 0.5 + rng.random::<f64>());
            let spd = &q * DMatrix::from_diagonal(&lam) * q.transpose();
            let mut f1 = random_sym(&mut rng, n);
            let mut f2 = random_sym(&mut rng, n);
            let eye = DMatrix::<f64>::identity(n, n);
            f1 -= &eye * (f1.trace() / n as f64);
            f2 -= &eye * (f2.trace() / n as f64);
            let ystar = DVector::from_column_slice(&[0.3, -0.7]);
            let base = &spd - &f1 * ystar[0] - &f2 * ystar[1];
            let p = LmiProblem::new(base, vec![f1, f2], "constructed");
            let sol = solve_max_min_eig(&p, &opts());
            let known = lam.min();
            assert_eq!(sol.status, LmiStatus::OptimalInterior);
            assert!(
                sol.t_star >= known - 1e-6,
                "solver found {} but {} is attainable",
                sol.t_star,
                known
            );
            check_dual(&p, &sol, 1e-6);
        }
    }

    #[test]
    fn eliminate_no_equalities_with_normalization() {
        // single variable, normalization v = 1 on a 1×1 system
        let mut sys = EqualitySystem::new(1);
        sys.push(DVector::from_column_slice(&[1.0]), 1.0);
        let param = eliminate_equalities(&sys, 1e-10).unwrap();
        assert_eq!(param.dim(), 0);
        assert!((param.origin[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eliminate_detects_inconsistency() {
        let mut sys = EqualitySystem::new(2);
        sys.push(DVector::from_column_slice(&[1.0, 1.0]), 1.0);
        sys.push(DVector::from_column_slice(&[2.0, 2.0]), 0.0);
        assert!(matches!(
            eliminate_equalities(&sys, 1e-10),
            Err(Error::Infeasible)
        ));
    }

    #[test]
    fn eliminate_nullspace_dimension() {
        // x + y + z = 1 in R^3: nullspace dim 2, origin orthogonal to it
        let mut sys = EqualitySystem::new(3);
        sys.push(DVector::from_column_slice(&[1.0, 1.0, 1.0]), 1.0);
        let param = eliminate_equalities(&sys, 1e-10).unwrap();
        assert_eq!(param.dim(), 2);
        let check = param.point(&DVector::from_column_slice(&[0.4, -0.3]));
        assert!((check.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn max_rank_on_segment_with_forced_kernel() {
        // S(y) = diag(y, 1−y, 0): feasible y ∈ [0,1], best rank 2, e₃ kernel
        let base = diag(&[0.0, 1.0, 0.0]);
        let dir = diag(&[1.0, -1.0, 0.0]);
        let p = LmiProblem::new(base, vec![dir], "segment");
        let sol = max_rank_feasible(&p, &opts());
        assert_ne!(sol.status, LmiStatus::NumericalFailure);
        let s = &sol.primal_matrix;
        assert!(min_eig(s) >= -1e-7);
        assert!(s[(0, 0)] > 0.05 && s[(0, 0)] < 0.95, "expected interior point, got {}", s[(0, 0)]);
        assert!(s[(1, 1)] > 0.05);
        assert!(s[(2, 2)].abs() < 1e-7);
    }

    #[test]
    fn max_rank_agrees_on_strictly_feasible() {
        let p = LmiProblem::new(diag(&[2.0, 3.0]), vec![diag(&[1.0, 0.0])], "strict");
        let sol = max_rank_feasible(&p, &opts());
        assert!(sol.t_star > 1e-3);
        let eig = SymmetricEigen::new(sol.primal_matrix.clone());
        assert!(eig.eigenvalues.min() > 1e-3, "full rank expected");
    }
}
