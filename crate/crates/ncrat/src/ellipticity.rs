//! Classification of linear pencils as stably elliptic / elliptic / not
//! elliptic, with machine-checkable certificates and singular-point
//! witnesses.
//!
//! A pencil is *stably elliptic* when some D makes `Re(DA₀) ≻ 0` with
//! `Re(DAⱼ) = 0` for j ≥ 1; *elliptic* when a finite chain of such
//! compressions and kernel restrictions ends in a stably elliptic pencil.
//! Ellipticity is equivalent to `L(X)` having full rank at every
//! self-adjoint tuple, which is what makes these certificates decide
//! regularity questions downstream.
//!
//! The classifier works over ℝ: complex pencils are embedded via
//! `[[Re, −Im], [Im, Re]]` first (hermitian points correspond to symmetric
//! ones, and singular values match), and wide pencils are transposed. Both
//! preprocessing steps are deterministic, so verification can replay them.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::jsonio;
use crate::linalg::{self, kernel_basis, min_singular_value, Field, Matrix};
use crate::ncexpr::MatrixPoint;
use crate::pencil::{point_from_json, point_to_json, LinearPencil};
use crate::sdp::{
    eliminate_equalities, lmi_from_parametrization, max_rank_feasible_from, solve_max_min_eig,
    EqualitySystem, LmiOptions, LmiStatus,
};
use crate::{Error, Result};

/// Default tolerance band for the classification SDP.
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-7;
/// Default strictness required of the witness moment matrix.
pub const DEFAULT_WITNESS_DELTA: f64 = 1e-6;

/// Classification verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    StablyElliptic,
    Elliptic,
    NotElliptic,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::StablyElliptic => "StablyElliptic",
            Verdict::Elliptic => "Elliptic",
            Verdict::NotElliptic => "NotElliptic",
            Verdict::Inconclusive => "Inconclusive",
        }
    }
}

/// One step of the recursion: the compression matrix D, the spectrum of
/// `Re(DA₀)` and the kernel basis V used for the restriction (empty in the
/// final, stably elliptic step).
#[derive(Debug, Clone)]
pub struct ChainStep {
    pub d_matrix: Matrix,
    pub realpart_eigenvalues: Vec<f64>,
    pub kernel: Matrix,
}

/// Certificate returned by [`classify`].
#[derive(Debug, Clone)]
pub struct EllipticityCertificate {
    pub verdict: Verdict,
    pub transposed: bool,
    pub chain: Vec<ChainStep>,
    /// Lower bound ε with L(X)*L(X) ⪰ εI at every self-adjoint tuple, when
    /// stably elliptic.
    pub epsilon: Option<f64>,
    pub witness: Option<MatrixPoint>,
    /// Description of the failing sub-solve when inconclusive.
    pub failure: Option<String>,
}

impl EllipticityCertificate {
    pub fn to_json(&self) -> Value {
        json!({
            "verdict": self.verdict.as_str(),
            "transposed": self.transposed,
            "chain": self.chain.iter().map(|s| json!({
                "D": matrix_obj(&s.d_matrix),
                "eigs": s.realpart_eigenvalues,
                "V": matrix_obj(&s.kernel),
            })).collect::<Vec<_>>(),
            "epsilon": self.epsilon,
            "witness": self.witness.as_ref().map(point_to_json),
        })
    }

    pub fn from_json(v: &Value) -> Result<EllipticityCertificate> {
        let verdict = match v.get("verdict").and_then(Value::as_str) {
            Some("StablyElliptic") => Verdict::StablyElliptic,
            Some("Elliptic") => Verdict::Elliptic,
            Some("NotElliptic") => Verdict::NotElliptic,
            Some("Inconclusive") => Verdict::Inconclusive,
            other => return Err(Error::Json(format!("bad verdict {other:?}"))),
        };
        let transposed = v
            .get("transposed")
            .and_then(Value::as_bool)
            .unwrap_or(false);
        let chain = v
            .get("chain")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Json("missing `chain`".into()))?
            .iter()
            .map(|s| {
                Ok(ChainStep {
                    d_matrix: matrix_from_obj(s.get("D").ok_or_else(|| Error::Json("missing D".into()))?)?,
                    realpart_eigenvalues: s
                        .get("eigs")
                        .and_then(Value::as_array)
                        .map(|a| a.iter().filter_map(Value::as_f64).collect())
                        .unwrap_or_default(),
                    kernel: matrix_from_obj(s.get("V").ok_or_else(|| Error::Json("missing V".into()))?)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let epsilon = v.get("epsilon").and_then(Value::as_f64);
        let witness = match v.get("witness") {
            Some(Value::Null) | None => None,
            Some(w) => Some(point_from_json(w)?),
        };
        Ok(EllipticityCertificate {
            verdict,
            transposed,
            chain,
            epsilon,
            witness,
            failure: None,
        })
    }
}

fn matrix_obj(m: &Matrix) -> Value {
    json!({
        "rows": m.rows(),
        "cols": m.cols(),
        "entries": jsonio::matrix_to_value(m),
    })
}

fn matrix_from_obj(v: &Value) -> Result<Matrix> {
    let rows = jsonio::get_usize(v, "rows")?;
    let cols = jsonio::get_usize(v, "cols")?;
    jsonio::matrix_from_value(
        Field::Real,
        rows,
        cols,
        v.get("entries").ok_or_else(|| Error::Json("missing entries".into()))?,
    )
}

/// Options for [`classify`] and [`singular_witness`].
#[derive(Debug, Clone)]
pub struct ClassifyOptions {
    pub tol: f64,
    pub lmi: LmiOptions,
    /// Attempt witness extraction on a NotElliptic verdict.
    pub extract_witness: bool,
    /// Skip extraction when the witness moment matrix would exceed this size.
    pub witness_max_lmi: usize,
    pub witness_delta: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            tol: DEFAULT_CLASSIFY_TOL,
            lmi: LmiOptions::default(),
            extract_witness: true,
            witness_max_lmi: 40,
            witness_delta: DEFAULT_WITNESS_DELTA,
        }
    }
}

/// Deterministic preprocessing: embed complex pencils into real symmetric
/// form, transpose wide pencils. Returns the working pencil and whether it
/// was transposed.
pub fn working_pencil(l: &LinearPencil) -> (LinearPencil, bool) {
    let real = if l.field() == Field::Complex {
        l.real_embedding()
    } else {
        l.clone()
    };
    if real.d() < real.e() {
        (real.adjoint(), true)
    } else {
        (real, false)
    }
}

/// Equality system `Re(DAⱼ) = 0 (j ≥ 1)`, `tr Re(DA₀) = 1` over vec(D).
fn compression_equalities(p: &LinearPencil) -> EqualitySystem {
    let (d, e, g) = (p.d(), p.e(), p.g());
    let nvars = e * d;
    let idx = |u: usize, v: usize| u * d + v;
    let mut sys = EqualitySystem::new(nvars);
    for j in 1..=g {
        let a = p.coeff(j);
        for prow in 0..e {
            for qcol in prow..e {
                let mut coeffs = DVector::<f64>::zeros(nvars);
                for s in 0..d {
                    coeffs[idx(prow, s)] += 0.5 * a.get(s, qcol).re;
                    coeffs[idx(qcol, s)] += 0.5 * a.get(s, prow).re;
                }
                sys.push(coeffs, 0.0);
            }
        }
    }
    let a0 = p.coeff(0);
    let mut norm_row = DVector::<f64>::zeros(nvars);
    for prow in 0..e {
        for s in 0..d {
            norm_row[idx(prow, s)] += a0.get(s, prow).re;
        }
    }
    sys.push(norm_row, 1.0);
    sys
}

fn unvec_d(p: &LinearPencil, v: &DVector<f64>) -> Matrix {
    let (d, e) = (p.d(), p.e());
    let mut out = DMatrix::<Complex64>::zeros(e, d);
    for u in 0..e {
        for s in 0..d {
            out[(u, s)] = Complex64::new(v[u * d + s], 0.0);
        }
    }
    Matrix::from_storage(Field::Real, out)
}

fn re_da0(p: &LinearPencil, v: &DVector<f64>) -> DMatrix<f64> {
    let dmat = unvec_d(p, v);
    let prod = dmat.mul(p.coeff(0)).expect("DA0").hermitian_part();
    prod.as_real()
}

/// Restrict to V and zero out entries that are floating-point residue
/// relative to the parent pencil scale. `None` means the restriction
/// vanished entirely: the pencil annihilates the subspace and can never
/// reach full column rank, so the classification is NotElliptic.
fn cleaned_restrict(p: &LinearPencil, v: &Matrix) -> Result<Option<LinearPencil>> {
    let restricted = p.restrict(v)?;
    let thresh = 1e-11 * (1.0 + p.max_coeff_norm());
    let mut any = false;
    let mut coeffs = Vec::with_capacity(restricted.g() + 1);
    for a in restricted.coeffs() {
        let mut data = a.storage().clone();
        for z in data.iter_mut() {
            if z.norm() <= thresh {
                *z = Complex64::ZERO;
            }
        }
        let m = Matrix::from_storage(a.field(), data);
        if m.frobenius_norm() > 0.0 {
            any = true;
        }
        coeffs.push(m);
    }
    if !any {
        return Ok(None);
    }
    Ok(Some(LinearPencil::new(coeffs)?))
}

/// Lower bound `ε = ‖R⁻¹‖⁻⁴‖D‖⁻²` from the Cholesky factor `R*R = Re(DA₀)`,
/// valid as `L(X)*L(X) ⪰ εI` on every self-adjoint tuple.
pub fn epsilon_bound(d_matrix: &Matrix, l: &LinearPencil) -> Result<f64> {
    let parts = l.real_compress(d_matrix)?;
    let scale = 1.0 + l.max_coeff_norm();
    for part in parts.iter().skip(1) {
        if part.op_norm() > 1e-8 * scale {
            return Err(Error::Precondition(
                "Re(DAj) does not vanish for j >= 1".into(),
            ));
        }
    }
    let r = parts[0]
        .cholesky_upper()
        .map_err(|_| Error::Precondition("Re(DA0) is not positive definite".into()))?;
    let rinv = r.try_inverse()?;
    let eps = rinv.op_norm().powi(-4) * d_matrix.op_norm().powi(-2);
    Ok(eps)
}

/// Classify a pencil by the SDP recursion. Never errors on valid pencils;
/// solver breakdowns surface as `Inconclusive`.
pub fn classify(l: &LinearPencil, opts: &ClassifyOptions) -> EllipticityCertificate {
    let (work, transposed) = working_pencil(l);
    let mut chain: Vec<ChainStep> = Vec::new();
    let mut current = work.clone();
    let kernel_rtol = (opts.tol * 100.0).max(1e-6);

    loop {
        let sys = compression_equalities(&current);
        let param = match eliminate_equalities(&sys, 1e-10) {
            Ok(p) => p,
            Err(Error::Infeasible) => {
                return finish_not_elliptic(l, &current, transposed, chain, opts);
            }
            Err(err) => {
                return inconclusive(transposed, chain, format!("equality elimination: {err}"));
            }
        };
        let problem = lmi_from_parametrization(
            &param,
            |v| re_da0(&current, v),
            &format!("ellipticity level {} ({}x{})", chain.len(), current.d(), current.e()),
        );
        let sol = solve_max_min_eig(&problem, &opts.lmi);
        // the attained minimum eigenvalue is primal information and stays
        // usable even when the dual certification failed (weakly infeasible
        // geometries never center)
        let attained = crate::sdp::min_eigenvalue(&sol.primal_matrix);
        if !attained.is_finite() {
            let msg = format!("SDP failed at level {}: {}", chain.len(), problem.description);
            return inconclusive(transposed, chain, msg);
        }
        if attained > opts.tol {
            // stably elliptic at this level
            let v_full = param.point(&sol.y);
            let d_matrix = unvec_d(&current, &v_full);
            let eigs = linalg::hermitian_eig(&Matrix::from_real(re_da0(&current, &v_full)))
                .map(|e| e.eigenvalues)
                .unwrap_or_default();
            chain.push(ChainStep {
                d_matrix: d_matrix.clone(),
                realpart_eigenvalues: eigs,
                kernel: Matrix::zeros(Field::Real, current.e(), 0),
            });
            let (verdict, epsilon) = if chain.len() == 1 {
                let eps = epsilon_bound(&d_matrix, &work).ok();
                (Verdict::StablyElliptic, eps)
            } else {
                (Verdict::Elliptic, None)
            };
            return EllipticityCertificate {
                verdict,
                transposed,
                chain,
                epsilon,
                witness: None,
                failure: None,
            };
        }
        if attained < -opts.tol {
            if sol.status == LmiStatus::OptimalInterior {
                // dual-certified: the maximum over all compressions is negative
                return finish_not_elliptic(l, &current, transposed, chain, opts);
            }
            let msg = format!(
                "level {}: negative value {attained:.3e} without a dual certificate",
                chain.len()
            );
            return inconclusive(transposed, chain, msg);
        }

        // boundary: pick a maximal-rank feasible compression and restrict to
        // the kernel of its real part
        let face = max_rank_feasible_from(&problem, sol, &opts.lmi);
        if face.status == LmiStatus::Infeasible {
            // facial reduction proved the feasible face empty: no nontrivial
            // PSD compression exists at this level
            return finish_not_elliptic(l, &current, transposed, chain, opts);
        }
        if face.status == LmiStatus::NumericalFailure {
            let msg = format!("facial reduction failed at level {}", chain.len());
            return inconclusive(transposed, chain, msg);
        }
        if !face.facial_certified {
            // No reliably feasible nontrivial compression was found, so a
            // kernel restriction is not justified. Weakly infeasible
            // geometries land here: look for a strict transversality
            // certificate Z ≻ 0 orthogonal to the whole compression image,
            // which proves that no nonzero PSD compression exists.
            let report = crate::sdp::transversality_probe(&problem, &opts.lmi);
            if report.certifies_trivial_intersection() {
                return finish_not_elliptic(l, &current, transposed, chain, opts);
            }
            let msg = format!(
                "level {}: boundary compression could not be certified (transversality probe λmin {:.3e}, defect {:.3e})",
                chain.len(),
                report.lambda_min,
                report.orthogonality_defect
            );
            return inconclusive(transposed, chain, msg);
        }
        let v_full = param.point(&face.y);
        let d_matrix = unvec_d(&current, &v_full);
        let re0 = Matrix::from_real(re_da0(&current, &v_full));
        let eigs = match linalg::hermitian_eig(&re0) {
            Ok(e) => e.eigenvalues,
            Err(err) => {
                return inconclusive(transposed, chain, format!("spectral factorization: {err}"));
            }
        };
        let kernel = match kernel_basis(&re0, kernel_rtol) {
            Ok(k) => k,
            Err(err) => {
                return inconclusive(transposed, chain, format!("kernel basis: {err}"));
            }
        };
        if kernel.cols() == 0 || kernel.cols() >= current.e() {
            return inconclusive(
                transposed,
                chain,
                format!(
                    "boundary solve produced a degenerate kernel ({} of {})",
                    kernel.cols(),
                    current.e()
                ),
            );
        }
        let restricted = match cleaned_restrict(&current, &kernel) {
            Ok(Some(r)) => r,
            Ok(None) => {
                let terminal = zero_pencil_like(&current, kernel.cols());
                chain.push(ChainStep {
                    d_matrix,
                    realpart_eigenvalues: eigs,
                    kernel,
                });
                return finish_not_elliptic(l, &terminal, transposed, chain, opts);
            }
            Err(err) => {
                return inconclusive(transposed, chain, format!("restriction: {err}"));
            }
        };
        chain.push(ChainStep {
            d_matrix,
            realpart_eigenvalues: eigs,
            kernel,
        });
        current = restricted;
    }
}

fn inconclusive(transposed: bool, chain: Vec<ChainStep>, message: String) -> EllipticityCertificate {
    EllipticityCertificate {
        verdict: Verdict::Inconclusive,
        transposed,
        chain,
        epsilon: None,
        witness: None,
        failure: Some(message),
    }
}

/// The all-zero pencil pencil of the same arity, d rows and e' columns.
fn zero_pencil_like(p: &LinearPencil, cols: usize) -> LinearPencil {
    let coeffs = (0..=p.g())
        .map(|_| Matrix::zeros(Field::Real, p.d(), cols.max(1)))
        .collect();
    LinearPencil::new(coeffs).expect("zero pencil")
}

/// Close a NotElliptic verdict, extracting the witness at the pencil where
/// the recursion actually failed: a singular point of the restricted pencil
/// LV₁⋯V_k is a singular point of L because L(X)(V⊗I) = (LV)(X).
fn finish_not_elliptic(
    original: &LinearPencil,
    terminal: &LinearPencil,
    transposed: bool,
    chain: Vec<ChainStep>,
    opts: &ClassifyOptions,
) -> EllipticityCertificate {
    let witness = if opts.extract_witness {
        singular_witness(terminal, opts).ok().flatten().and_then(|x| {
            let mapped = if original.field() == Field::Complex {
                x.complexify()
            } else {
                x
            };
            match original.eval(&mapped) {
                Ok(value) if min_singular_value(&value) <= opts.tol.sqrt() => Some(mapped),
                _ => None,
            }
        })
    } else {
        None
    };
    EllipticityCertificate {
        verdict: Verdict::NotElliptic,
        transposed,
        chain,
        epsilon: None,
        witness,
        failure: None,
    }
}

/// Outcome of certificate verification.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub ok: bool,
    pub reason: Option<String>,
}

fn reject(reason: String) -> VerifyReport {
    VerifyReport {
        ok: false,
        reason: Some(reason),
    }
}

/// Solver-independent re-check of a certificate against a pencil: the
/// compression conditions, kernel claims, final positive definiteness and
/// (for NotElliptic) the witness all get re-verified numerically.
pub fn verify_certificate(
    l: &LinearPencil,
    cert: &EllipticityCertificate,
    tol: f64,
) -> VerifyReport {
    if cert.verdict == Verdict::Inconclusive {
        return reject("inconclusive certificates are not verifiable".into());
    }
    let (work, transposed) = working_pencil(l);
    if transposed != cert.transposed {
        return reject("transposition flag does not match the pencil shape".into());
    }
    if cert.verdict == Verdict::NotElliptic {
        if let Some(witness) = &cert.witness {
            let value = match l.eval(witness) {
                Ok(v) => v,
                Err(err) => return reject(format!("witness evaluation failed: {err}")),
            };
            let sigma = min_singular_value(&value);
            if sigma > tol.sqrt() {
                return reject(format!("witness is not singular: sigma = {sigma:.3e}"));
            }
        }
        return VerifyReport { ok: true, reason: None };
    }

    if cert.chain.is_empty() {
        return reject("empty certificate chain".into());
    }
    match cert.verdict {
        Verdict::StablyElliptic if cert.chain.len() != 1 => {
            return reject("stably elliptic certificates have a single step".into());
        }
        Verdict::Elliptic if cert.chain.len() < 2 => {
            return reject("elliptic certificates need at least two steps".into());
        }
        _ => {}
    }

    let mut current = work.clone();
    let scale = 1.0 + current.max_coeff_norm();
    for (k, step) in cert.chain.iter().enumerate() {
        let last = k + 1 == cert.chain.len();
        if step.d_matrix.rows() != current.e() || step.d_matrix.cols() != current.d() {
            return reject(format!("step {k}: D has wrong shape"));
        }
        if step.d_matrix.op_norm() > 1e8 * scale {
            return reject(format!("step {k}: compression matrix is absurdly scaled"));
        }
        let parts = match current.real_compress(&step.d_matrix) {
            Ok(p) => p,
            Err(err) => return reject(format!("step {k}: {err}")),
        };
        for (j, part) in parts.iter().enumerate().skip(1) {
            if part.op_norm() > tol * scale * (1.0 + step.d_matrix.op_norm()) {
                return reject(format!(
                    "step {k}: Re(DA{j}) has norm {:.3e}",
                    part.op_norm()
                ));
            }
        }
        let eig = match linalg::hermitian_eig(&parts[0]) {
            Ok(e) => e,
            Err(err) => return reject(format!("step {k}: {err}")),
        };
        let lambda_min = eig.eigenvalues.first().copied().unwrap_or(0.0);
        let lambda_max = eig.eigenvalues.last().copied().unwrap_or(0.0);
        if last {
            if lambda_min <= tol * 0.5 {
                return reject(format!(
                    "final step is not strictly positive definite (λmin = {lambda_min:.3e})"
                ));
            }
            if step.kernel.cols() != 0 {
                return reject("final step must not restrict further".into());
            }
        } else {
            if lambda_min < -tol * scale {
                return reject(format!("step {k}: Re(DA0) has λmin = {lambda_min:.3e}"));
            }
            if lambda_max <= tol {
                return reject(format!("step {k}: Re(DA0) vanishes"));
            }
            let v = &step.kernel;
            if v.cols() == 0 || v.cols() >= current.e() {
                return reject(format!("step {k}: kernel basis with {} columns", v.cols()));
            }
            let gram = v.adjoint().mul(v).expect("gram");
            let eye = Matrix::identity(gram.field(), gram.rows());
            if gram.sub(&eye).unwrap().frobenius_norm() > 1e-7 {
                return reject(format!("step {k}: kernel basis is not orthonormal"));
            }
            let image = parts[0].mul(v).expect("EV");
            if image.op_norm() > (tol * 100.0).max(1e-6) * lambda_max.max(1.0) {
                return reject(format!(
                    "step {k}: kernel claim fails, ‖Re(DA0)V‖ = {:.3e}",
                    image.op_norm()
                ));
            }
            // the kernel must be the whole numerical kernel
            let cutoff = (tol * 100.0).max(1e-6) * lambda_max.max(1.0);
            let null_count = eig.eigenvalues.iter().filter(|&&x| x <= cutoff).count();
            if null_count != v.cols() {
                return reject(format!(
                    "step {k}: kernel has dimension {null_count}, basis has {} columns",
                    v.cols()
                ));
            }
            current = match cleaned_restrict(&current, v) {
                Ok(Some(r)) => r,
                Ok(None) => {
                    return reject(format!(
                        "step {k}: the restriction vanishes, yet the chain continues"
                    ))
                }
                Err(err) => return reject(format!("step {k}: {err}")),
            };
        }
    }
    if let Some(eps) = cert.epsilon {
        if cert.verdict != Verdict::StablyElliptic {
            return reject("epsilon is only meaningful for stably elliptic pencils".into());
        }
        match epsilon_bound(&cert.chain[0].d_matrix, &work) {
            Ok(recomputed) => {
                if eps > recomputed * (1.0 + 1e-6) + 1e-12 {
                    return reject(format!(
                        "claimed epsilon {eps:.3e} exceeds recomputed {recomputed:.3e}"
                    ));
                }
            }
            Err(err) => return reject(format!("epsilon recomputation: {err}")),
        }
    }
    VerifyReport { ok: true, reason: None }
}

/// Extract a self-adjoint tuple at which the pencil loses rank, by solving a
/// strictly positive moment feasibility problem and compressing the
/// variable multiplication operators in its scalar product.
///
/// The moment matrix over the degree-≤1 matrix polynomials `E_ab·w`
/// factorizes as `I_e ⊗ N` with N of size `e(g+1)`; the SDP therefore runs
/// on N directly, with the annihilation rows `Λ(E_uv·L) = 0` and a trace
/// normalization. The returned point has size e² (an e-fold direct sum of
/// the compressed e×e tuple), matching the dimension of the underlying
/// module; `None` means extraction failed, not that the pencil is elliptic.
pub fn singular_witness(l: &LinearPencil, opts: &ClassifyOptions) -> Result<Option<MatrixPoint>> {
    let (work, _) = working_pencil(l);
    let (d, e, g) = (work.d(), work.e(), work.g());
    let lmi_size = e * (g + 1);
    if lmi_size > opts.witness_max_lmi {
        return Ok(None);
    }

    // T-coordinate layout: T_1, T_{x_j} and T_{x_j x_j} are symmetric e×e,
    // one full e×e block per unordered pair (j<k) with T_{x_k x_j} = T_{x_j x_k}ᵀ.
    let sym_dim = e * (e + 1) / 2;
    let n_sym_blocks = 1 + 2 * g;
    let n_pairs = g * (g - 1) / 2;
    let nvars = n_sym_blocks * sym_dim + n_pairs * e * e;

    let sym_index = |block: usize, i: usize, j: usize| -> usize {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        block * sym_dim + a * e - a * (a + 1) / 2 + b
    };
    // blocks: 0 = T_1, 1..=g = T_{x_j}, g+1..=2g = T_{x_j x_j}
    let pair_base = n_sym_blocks * sym_dim;
    let pair_offset = |j: usize, k: usize| -> usize {
        // j < k, both 1-based
        let mut idx = 0;
        for jj in 1..=g {
            for kk in (jj + 1)..=g {
                if jj == j && kk == k {
                    return pair_base + idx * e * e;
                }
                idx += 1;
            }
        }
        unreachable!("pair index");
    };
    // coordinate of T_{x_j x_k}[row, col] for any j != k
    let pair_coord = |j: usize, k: usize, row: usize, col: usize| -> usize {
        if j < k {
            pair_offset(j, k) + row * e + col
        } else {
            // T_{x_k x_j} = T_{x_j x_k}ᵀ
            pair_offset(k, j) + col * e + row
        }
    };
    // word of N entry: (w, w') with w, w' in {0 (= 1), 1..g (= x_j)}
    // N[(b,w),(d,w')] = T_{w'·w}[d,b]
    let t_coord = |w: usize, wp: usize, drow: usize, bcol: usize| -> usize {
        match (wp, w) {
            (0, 0) => sym_index(0, drow, bcol),
            (0, j) => sym_index(j, drow, bcol),
            (j, 0) => {
                // word 1·x_j read as x_j
                sym_index(j, drow, bcol)
            }
            (k, j) if k == j => sym_index(g + j, drow, bcol),
            (k, j) => pair_coord(k, j, drow, bcol),
        }
    };

    // equalities Λ(E_uv·L) = 0: Σ_word ⟨T_word, E_uv A_word⟩ = 0
    let mut sys = EqualitySystem::new(nvars);
    for u in 0..e {
        for v in 0..d {
            let mut coeffs = DVector::<f64>::zeros(nvars);
            for (widx, coeff) in work.coeffs().iter().enumerate() {
                for q in 0..e {
                    let a_vq = coeff.get(v, q).re;
                    if a_vq == 0.0 {
                        continue;
                    }
                    let c = if widx == 0 {
                        sym_index(0, u, q)
                    } else {
                        sym_index(widx, u, q)
                    };
                    // symmetric blocks store only the upper triangle; off-diagonal
                    // coordinates represent both (i,j) and (j,i)
                    coeffs[c] += a_vq;
                }
            }
            sys.push(coeffs, 0.0);
        }
    }
    // normalization tr N = 1: Σ_b T_1[b,b] + Σ_j T_{x_j x_j}[b,b] = 1
    let mut norm_row = DVector::<f64>::zeros(nvars);
    for b in 0..e {
        norm_row[sym_index(0, b, b)] += 1.0;
        for j in 1..=g {
            norm_row[sym_index(g + j, b, b)] += 1.0;
        }
    }
    sys.push(norm_row, 1.0);

    let param = match eliminate_equalities(&sys, 1e-10) {
        Ok(p) => p,
        Err(Error::Infeasible) => return Ok(None),
        Err(err) => return Err(err),
    };

    let build_n = |vars: &DVector<f64>| -> DMatrix<f64> {
        let mut n = DMatrix::<f64>::zeros(lmi_size, lmi_size);
        for w in 0..=g {
            for b in 0..e {
                for wp in 0..=g {
                    for dr in 0..e {
                        let row = w * e + b;
                        let col = wp * e + dr;
                        n[(row, col)] = vars[t_coord(w, wp, dr, b)];
                    }
                }
            }
        }
        n
    };
    let problem = lmi_from_parametrization(&param, build_n, "witness moment matrix");
    let sol = solve_max_min_eig(&problem, &opts.lmi);
    if sol.status == LmiStatus::NumericalFailure || sol.t_star < opts.witness_delta {
        return Ok(None);
    }
    let vars = param.point(&sol.y);
    let n_mat = build_n(&vars);

    // X_j = T_1^{-1/2} T_{x_j} T_1^{-1/2}, blown up to size e² as I ⊗ X_j
    let t1 = n_mat.view((0, 0), (e, e)).into_owned();
    let t1_m = Matrix::from_real(t1);
    let eig = linalg::hermitian_eig(&t1_m)?;
    let mut inv_sqrt = Matrix::zeros(Field::Real, e, e);
    for i in 0..e {
        let lam = eig.eigenvalues[i];
        if lam <= 0.0 {
            return Ok(None);
        }
        inv_sqrt.set(i, i, Complex64::new(1.0 / lam.sqrt(), 0.0));
    }
    let q = &eig.eigenvectors;
    let t1_inv_sqrt = q.mul(&inv_sqrt)?.mul(&q.adjoint())?;
    let eye = Matrix::identity(Field::Real, e);
    let mut mats = Vec::with_capacity(g);
    for j in 1..=g {
        let txj = Matrix::from_real(n_mat.view((j * e, 0), (e, e)).into_owned()).transpose();
        let compressed = t1_inv_sqrt.mul(&txj)?.mul(&t1_inv_sqrt)?.hermitian_part();
        mats.push(linalg::kron(&eye, &compressed)?);
    }
    let x = MatrixPoint::new(Field::Real, mats)?;
    let sigma = min_singular_value(&work.eval(&x)?);
    if sigma <= opts.tol.sqrt() {
        Ok(Some(x))
    } else {
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pencil::{full_rank_sample, FullRankOptions};

    fn example_22_pencil() -> LinearPencil {
        let a0 = Matrix::from_real_rows(&[&[1., 0., -1.], &[0., 1., 1.], &[1., -1., 0.]]);
        let a1 = Matrix::from_real_rows(&[&[0., 1., 1.], &[-1., 0., 0.], &[-1., 0., 0.]]);
        let a2 = Matrix::from_real_rows(&[&[0., -1., 0.], &[1., 0., 0.], &[0., 0., 0.]]);
        LinearPencil::new(vec![a0, a1, a2]).unwrap()
    }

    #[test]
    fn identity_pencil_is_stably_elliptic() {
        let l = LinearPencil::new(vec![Matrix::identity(Field::Real, 1)]).unwrap();
        let cert = classify(&l, &ClassifyOptions::default());
        assert_eq!(cert.verdict, Verdict::StablyElliptic);
        let eps = cert.epsilon.unwrap();
        assert!((eps - 1.0).abs() < 1e-6, "eps = {eps}");
        assert!(verify_certificate(&l, &cert, 1e-7).ok);
    }

    #[test]
    fn zero_pencil_is_not_elliptic() {
        let l = LinearPencil::new(vec![
            Matrix::zeros(Field::Real, 2, 2),
            Matrix::zeros(Field::Real, 2, 2),
        ])
        .unwrap();
        let cert = classify(&l, &ClassifyOptions::default());
        assert_eq!(cert.verdict, Verdict::NotElliptic);
        assert!(verify_certificate(&l, &cert, 1e-7).ok);
        let w = cert.witness.expect("zero pencil witness");
        assert!(min_singular_value(&l.eval(&w).unwrap()) <= 1e-7);
    }

    #[test]
    fn example_22_is_elliptic_with_two_steps() {
        let l = example_22_pencil();
        let cert = classify(&l, &ClassifyOptions::default());
        assert_eq!(cert.verdict, Verdict::Elliptic);
        assert_eq!(cert.chain.len(), 2);
        // first-step kernel is span(e3)
        let v = &cert.chain[0].kernel;
        assert_eq!(v.cols(), 1);
        assert!(v.get(0, 0).norm() < 1e-6);
        assert!(v.get(1, 0).norm() < 1e-6);
        assert!((v.get(2, 0).norm() - 1.0).abs() < 1e-6);
        assert!(verify_certificate(&l, &cert, 1e-7).ok);
    }

    #[test]
    fn coordinate_pencil_witness_is_zero() {
        // L = x1 (A0 = 0): kernel point X = 0
        let l = LinearPencil::new(vec![
            Matrix::zeros(Field::Real, 1, 1),
            Matrix::identity(Field::Real, 1),
        ])
        .unwrap();
        let cert = classify(&l, &ClassifyOptions::default());
        assert_eq!(cert.verdict, Verdict::NotElliptic);
        let w = cert.witness.as_ref().expect("witness for L = x1");
        assert!(w.mat(0).frobenius_norm() < 1e-6);
        assert!(verify_certificate(&l, &cert, 1e-7).ok);
    }

    #[test]
    fn tampered_certificates_fail_verification() {
        let l = example_22_pencil();
        let mut cert = classify(&l, &ClassifyOptions::default());
        assert!(verify_certificate(&l, &cert, 1e-7).ok);
        cert.chain[0].d_matrix = Matrix::zeros(Field::Real, 3, 3);
        let report = verify_certificate(&l, &cert, 1e-7);
        assert!(!report.ok);
        assert!(report.reason.is_some());
    }

    #[test]
    fn appended_zero_column_gives_witness() {
        // random stably elliptic core with an appended zero column: never full
        // column rank, so NotElliptic with an extractable witness
        let a0 = Matrix::from_real_rows(&[&[1., 0., 0.], &[0., 1., 0.]]).transpose();
        let a1 = Matrix::from_real_rows(&[&[0., 1., 0.], &[-1., 0., 0.]]).transpose();
        let l = LinearPencil::new(vec![a0, a1]).unwrap();
        // 3x2? build as 3 rows, 2 cols plus a zero third column → use 3x3
        let a0 = Matrix::from_real_rows(&[&[1., 0., 0.], &[0., 1., 0.], &[0., 0., 0.]]);
        let a1 = Matrix::from_real_rows(&[&[0., 1., 0.], &[-1., 0., 0.], &[0., 0., 0.]]);
        let l3 = LinearPencil::new(vec![a0, a1]).unwrap();
        drop(l);
        let cert = classify(&l3, &ClassifyOptions::default());
        assert_eq!(cert.verdict, Verdict::NotElliptic);
        let w = cert.witness.expect("witness");
        let sigma = min_singular_value(&l3.eval(&w).unwrap());
        assert!(sigma <= 1e-3, "sigma = {sigma}");
    }

    #[test]
    fn stably_elliptic_epsilon_respects_sampling() {
        // 2I + skew + skew x1 is stably elliptic with D = I
        let a0 = Matrix::from_real_rows(&[&[2., 1.], &[-1., 2.]]);
        let a1 = Matrix::from_real_rows(&[&[0., 1.], &[-1., 0.]]);
        let l = LinearPencil::new(vec![a0, a1]).unwrap();
        let cert = classify(&l, &ClassifyOptions::default());
        assert_eq!(cert.verdict, Verdict::StablyElliptic);
        let eps = cert.epsilon.unwrap();
        assert!(eps > 0.0);
        let report = full_rank_sample(&l, &FullRankOptions::default_for(&l, 3));
        assert!(
            report.min_sigma * report.min_sigma >= eps - 1e-7,
            "sampled σ² = {:.3e} below ε = {:.3e}",
            report.min_sigma * report.min_sigma,
            eps
        );
        assert!(verify_certificate(&l, &cert, 1e-7).ok);
    }

    #[test]
    fn verdict_invariant_under_adjoint_and_left_multiplication() {
        let l = example_22_pencil();
        let base = classify(&l, &ClassifyOptions::default()).verdict;
        let adj = classify(&l.adjoint(), &ClassifyOptions::default()).verdict;
        assert_eq!(base, adj);
        let u = Matrix::from_real_rows(&[&[2., 1., 0.], &[0., 1., 0.], &[1., 0., 1.]]);
        let lu = l.left_mul(&u).unwrap();
        let verdict_u = classify(&lu, &ClassifyOptions::default()).verdict;
        assert_eq!(base, verdict_u);
    }

    #[test]
    fn certificate_json_round_trip() {
        let l = example_22_pencil();
        let cert = classify(&l, &ClassifyOptions::default());
        let v = cert.to_json();
        let back = EllipticityCertificate::from_json(&v).unwrap();
        assert_eq!(back.verdict, cert.verdict);
        assert_eq!(back.chain.len(), cert.chain.len());
        assert!(verify_certificate(&l, &back, 1e-7).ok);
    }
}
