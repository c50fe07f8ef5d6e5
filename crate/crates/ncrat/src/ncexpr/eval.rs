//! Strict and Moore-Penrose evaluation of rational expressions on matrix
//! tuples.
//!
//! Strict evaluation follows the written expression and reports the first
//! sub-expression whose value is numerically singular (condition number above
//! [`COND_THRESHOLD`]). Moore-Penrose evaluation is total: every inverse is
//! replaced by the pseudoinverse.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;

use super::{Expr, ExprRef, RationalExpr};
use crate::linalg::{self, Field, Matrix, PINV_RTOL};
use crate::{Error, Result};

/// Condition-number threshold above which a matrix counts as singular for
/// strict evaluation.
pub const COND_THRESHOLD: f64 = 1e12;

/// A tuple of g square matrices of a common size.
#[derive(Debug, Clone)]
pub struct MatrixPoint {
    field: Field,
    size: usize,
    mats: Vec<Matrix>,
    selfadjoint: bool,
}

impl MatrixPoint {
    pub fn new(field: Field, mats: Vec<Matrix>) -> Result<MatrixPoint> {
        let size = mats.first().map(|m| m.rows()).unwrap_or(1);
        for m in &mats {
            if !m.is_square() || m.rows() != size {
                return Err(Error::DimensionMismatch(
                    "matrix point components must be square and equal-sized".into(),
                ));
            }
            if m.field() != field {
                return Err(Error::FieldMismatch("matrix point"));
            }
        }
        let selfadjoint = mats
            .iter()
            .all(|m| m.deviation_from_selfadjoint() <= 1e-12 * (1.0 + m.frobenius_norm()));
        Ok(MatrixPoint {
            field,
            size,
            mats,
            selfadjoint,
        })
    }

    /// Point of 1×1 matrices from scalars.
    pub fn from_scalars(field: Field, values: &[Complex64]) -> MatrixPoint {
        let mats = values
            .iter()
            .map(|&v| Matrix::scalar(field, v))
            .collect::<Vec<_>>();
        MatrixPoint::new(field, mats).expect("scalar point")
    }

    pub fn zero(field: Field, g: usize, n: usize) -> MatrixPoint {
        MatrixPoint::new(field, (0..g).map(|_| Matrix::zeros(field, n, n)).collect())
            .expect("zero point")
    }

    pub fn g(&self) -> usize {
        self.mats.len()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn mat(&self, j: usize) -> &Matrix {
        &self.mats[j]
    }

    pub fn mats(&self) -> &[Matrix] {
        &self.mats
    }

    pub fn is_selfadjoint(&self) -> bool {
        self.selfadjoint
    }

    /// Componentwise `Xⱼ + sign·λⱼ·I`.
    pub fn offset(&self, lambda: &[f64], sign: f64) -> MatrixPoint {
        let mats = self
            .mats
            .iter()
            .enumerate()
            .map(|(j, m)| {
                let off = lambda.get(j).copied().unwrap_or(0.0) * sign;
                let shift = Matrix::identity(self.field, self.size)
                    .scale(Complex64::new(off, 0.0));
                m.add(&shift).expect("offset")
            })
            .collect();
        MatrixPoint::new(self.field, mats).expect("offset point")
    }

    /// Componentwise direct sum.
    pub fn direct_sum(&self, other: &MatrixPoint) -> Result<MatrixPoint> {
        if self.g() != other.g() {
            return Err(Error::DimensionMismatch("direct sum arity".into()));
        }
        let mats = self
            .mats
            .iter()
            .zip(&other.mats)
            .map(|(a, b)| a.direct_sum(b))
            .collect::<Result<Vec<_>>>()?;
        MatrixPoint::new(self.field, mats)
    }

    /// Real 2n×2n embedding of each component; hermitian tuples map to
    /// symmetric ones.
    pub fn real_embedding(&self) -> MatrixPoint {
        let mats = self.mats.iter().map(|m| m.real_embedding()).collect();
        MatrixPoint::new(Field::Real, mats).expect("embedded point")
    }

    /// Reinterpret a real symmetric point as a hermitian point over ℂ.
    pub fn complexify(&self) -> MatrixPoint {
        let mats = self
            .mats
            .iter()
            .map(|m| Matrix::from_storage(Field::Complex, m.storage().clone()))
            .collect();
        MatrixPoint::new(Field::Complex, mats).expect("complexified point")
    }
}

/// Evaluation options.
#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub cond_threshold: f64,
    pub pinv_rtol: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            cond_threshold: COND_THRESHOLD,
            pinv_rtol: PINV_RTOL,
        }
    }
}

/// Result of strict evaluation.
#[derive(Debug, Clone)]
pub enum Outcome {
    Defined(Matrix),
    /// The first sub-expression whose value was singular.
    Undefined(ExprRef),
}

impl Outcome {
    pub fn defined(self) -> Option<Matrix> {
        match self {
            Outcome::Defined(m) => Some(m),
            Outcome::Undefined(_) => None,
        }
    }

    pub fn is_defined(&self) -> bool {
        matches!(self, Outcome::Defined(_))
    }
}

fn is_singular(m: &Matrix, cond_threshold: f64) -> bool {
    if m.storage().iter().any(|z| !z.is_finite()) {
        return true;
    }
    let sv = m.storage().clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    min <= 0.0 || max / min > cond_threshold
}

enum Stop {
    Undefined(ExprRef),
    Failed(Error),
}

fn check_context(e: &RationalExpr, point: &MatrixPoint) -> Result<()> {
    if point.g() < e.nvars {
        return Err(Error::DimensionMismatch(format!(
            "expression in {} variables evaluated at a {}-tuple",
            e.nvars,
            point.g()
        )));
    }
    if point.field() != e.field {
        return Err(Error::FieldMismatch("expression/point"));
    }
    Ok(())
}

/// Strict evaluation: `r(X)`, or the first singular sub-expression.
pub fn eval_strict(e: &RationalExpr, point: &MatrixPoint, opts: &EvalOptions) -> Result<Outcome> {
    check_context(e, point)?;
    let mut memo: HashMap<*const Expr, Matrix> = HashMap::new();
    match eval_strict_inner(&e.root, point, opts, &mut memo) {
        Ok(m) => Ok(Outcome::Defined(m)),
        Err(Stop::Undefined(at)) => Ok(Outcome::Undefined(at)),
        Err(Stop::Failed(err)) => Err(err),
    }
}

fn eval_strict_inner(
    e: &ExprRef,
    point: &MatrixPoint,
    opts: &EvalOptions,
    memo: &mut HashMap<*const Expr, Matrix>,
) -> std::result::Result<Matrix, Stop> {
    let key = Arc::as_ptr(e);
    if let Some(hit) = memo.get(&key) {
        return Ok(hit.clone());
    }
    let value = match &**e {
        Expr::Const(z) => Matrix::identity(point.field(), point.size()).scale(*z),
        Expr::Var(j) => point.mat(*j - 1).clone(),
        Expr::Sum(a, b) => {
            let va = eval_strict_inner(a, point, opts, memo)?;
            let vb = eval_strict_inner(b, point, opts, memo)?;
            va.add(&vb).map_err(Stop::Failed)?
        }
        Expr::Product(a, b) => {
            let va = eval_strict_inner(a, point, opts, memo)?;
            let vb = eval_strict_inner(b, point, opts, memo)?;
            va.mul(&vb).map_err(Stop::Failed)?
        }
        Expr::Inverse(a) => {
            let va = eval_strict_inner(a, point, opts, memo)?;
            if is_singular(&va, opts.cond_threshold) {
                return Err(Stop::Undefined(a.clone()));
            }
            va.try_inverse().map_err(|_| Stop::Undefined(a.clone()))?
        }
    };
    if value.storage().iter().any(|z| !z.is_finite()) {
        return Err(Stop::Undefined(e.clone()));
    }
    memo.insert(key, value.clone());
    Ok(value)
}

/// Moore-Penrose evaluation: total, every inverse replaced by the
/// pseudoinverse.
pub fn eval_mp(e: &RationalExpr, point: &MatrixPoint, opts: &EvalOptions) -> Result<Matrix> {
    check_context(e, point)?;
    let mut memo: HashMap<*const Expr, Matrix> = HashMap::new();
    eval_mp_inner(&e.root, point, opts, &mut memo)
}

fn eval_mp_inner(
    e: &ExprRef,
    point: &MatrixPoint,
    opts: &EvalOptions,
    memo: &mut HashMap<*const Expr, Matrix>,
) -> Result<Matrix> {
    let key = Arc::as_ptr(e);
    if let Some(hit) = memo.get(&key) {
        return Ok(hit.clone());
    }
    let value = match &**e {
        Expr::Const(z) => Matrix::identity(point.field(), point.size()).scale(*z),
        Expr::Var(j) => point.mat(*j - 1).clone(),
        Expr::Sum(a, b) => {
            let va = eval_mp_inner(a, point, opts, memo)?;
            let vb = eval_mp_inner(b, point, opts, memo)?;
            va.add(&vb)?
        }
        Expr::Product(a, b) => {
            let va = eval_mp_inner(a, point, opts, memo)?;
            let vb = eval_mp_inner(b, point, opts, memo)?;
            va.mul(&vb)?
        }
        Expr::Inverse(a) => {
            let va = eval_mp_inner(a, point, opts, memo)?;
            linalg::pinv(&va, opts.pinv_rtol)
        }
    };
    memo.insert(key, value.clone());
    Ok(value)
}

/// Evaluate at a scalar tuple, tracking the smallest magnitude fed to an
/// inverse. Returns `None` when some inverse input is exactly zero.
pub fn eval_scalar(e: &ExprRef, values: &[Complex64]) -> Option<(Complex64, f64)> {
    let mut memo: HashMap<*const Expr, (Complex64, f64)> = HashMap::new();
    eval_scalar_inner(e, values, &mut memo)
}

fn eval_scalar_inner(
    e: &ExprRef,
    values: &[Complex64],
    memo: &mut HashMap<*const Expr, (Complex64, f64)>,
) -> Option<(Complex64, f64)> {
    let key = Arc::as_ptr(e);
    if let Some(hit) = memo.get(&key) {
        return Some(*hit);
    }
    let out = match &**e {
        Expr::Const(z) => (*z, f64::INFINITY),
        Expr::Var(j) => (*values.get(*j - 1)?, f64::INFINITY),
        Expr::Sum(a, b) => {
            let (va, ma) = eval_scalar_inner(a, values, memo)?;
            let (vb, mb) = eval_scalar_inner(b, values, memo)?;
            (va + vb, ma.min(mb))
        }
        Expr::Product(a, b) => {
            let (va, ma) = eval_scalar_inner(a, values, memo)?;
            let (vb, mb) = eval_scalar_inner(b, values, memo)?;
            (va * vb, ma.min(mb))
        }
        Expr::Inverse(a) => {
            let (va, ma) = eval_scalar_inner(a, values, memo)?;
            let mag = va.norm();
            if mag == 0.0 || !mag.is_finite() {
                return None;
            }
            (va.inv(), ma.min(mag))
        }
    };
    if !out.0.is_finite() {
        return None;
    }
    memo.insert(key, out);
    Some(out)
}
