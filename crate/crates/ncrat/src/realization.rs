//! Linear systems realizations `r(X) = c* L(X−λ)⁻¹ b` of rational
//! expressions: compositional construction, Krylov-based reduction to
//! minimal size, and evaluation.
//!
//! Realizations are centered: the expression is shifted by a scalar tuple λ
//! so that every sub-expression is defined at 0, which makes `L(0)`
//! invertible at each step of the block construction.

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::jsonio;
use crate::linalg::{Field, Matrix};
use crate::ncexpr::{
    eval_scalar, eval_strict, format_expr, EvalOptions, Expr, ExprRef, MatrixPoint, Outcome,
    RationalExpr, CENTER_MARGIN,
};
use crate::pencil::LinearPencil;
use crate::{Error, Result};

/// Condition-number bound required of L(0).
pub const CENTER_COND_LIMIT: f64 = 1e10;
/// Relative rank cutoff for Krylov span growth.
pub const KRYLOV_RTOL: f64 = 1e-9;

/// A realization `r(X) = c* L(X−λ)⁻¹ b` with a square pencil L of size d.
#[derive(Debug, Clone)]
pub struct Realization {
    c: Matrix,
    b: Matrix,
    pencil: LinearPencil,
    center: Vec<f64>,
}

impl Realization {
    pub fn new(c: Matrix, b: Matrix, pencil: LinearPencil, center: Vec<f64>) -> Result<Realization> {
        if pencil.d() != pencil.e() {
            return Err(Error::DimensionMismatch("realization pencil must be square".into()));
        }
        if c.rows() != pencil.d() || b.rows() != pencil.d() || c.cols() != 1 || b.cols() != 1 {
            return Err(Error::DimensionMismatch("realization vectors".into()));
        }
        let cond = pencil.coeff(0).cond();
        if cond > CENTER_COND_LIMIT {
            return Err(Error::IllConditioned { cond });
        }
        Ok(Realization { c, b, pencil, center })
    }

    pub fn size(&self) -> usize {
        self.pencil.d()
    }

    pub fn field(&self) -> Field {
        self.pencil.field()
    }

    pub fn g(&self) -> usize {
        self.pencil.g()
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn pencil(&self) -> &LinearPencil {
        &self.pencil
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn to_json(&self) -> Value {
        json!({
            "c": jsonio::vector_to_value(&self.c),
            "b": jsonio::vector_to_value(&self.b),
            "pencil": self.pencil.to_json(),
            "center": self.center,
        })
    }

    pub fn from_json(v: &Value) -> Result<Realization> {
        let pencil = LinearPencil::from_json(
            v.get("pencil").ok_or_else(|| Error::Json("missing `pencil`".into()))?,
        )?;
        let c = jsonio::vector_from_value(
            pencil.field(),
            pencil.d(),
            v.get("c").ok_or_else(|| Error::Json("missing `c`".into()))?,
        )?;
        let b = jsonio::vector_from_value(
            pencil.field(),
            pencil.d(),
            v.get("b").ok_or_else(|| Error::Json("missing `b`".into()))?,
        )?;
        let center = v
            .get("center")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Json("missing `center`".into()))?
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| Error::Json("bad center entry".into())))
            .collect::<Result<Vec<f64>>>()?;
        Realization::new(c, b, pencil, center)
    }
}

struct Blocks {
    c: Matrix,
    b: Matrix,
    coeffs: Vec<Matrix>, // g+1 square matrices
}

struct Builder {
    g: usize,
    field: Field,
}

impl Builder {
    fn constant(&self, alpha: Complex64) -> Blocks {
        let one = Matrix::identity(self.field, 1);
        let mut coeffs = vec![one.clone()];
        coeffs.extend((0..self.g).map(|_| Matrix::zeros(self.field, 1, 1)));
        Blocks {
            c: one,
            b: Matrix::scalar(self.field, alpha),
            coeffs,
        }
    }

    fn variable(&self, j: usize) -> Blocks {
        // L = [[1, -x_j], [0, 1]], c = e1, b = e2
        let mut coeffs = vec![Matrix::identity(self.field, 2)];
        for v in 1..=self.g {
            let mut a = Matrix::zeros(self.field, 2, 2);
            if v == j {
                a.set(0, 1, Complex64::new(-1.0, 0.0));
            }
            coeffs.push(a);
        }
        let mut c = Matrix::zeros(self.field, 2, 1);
        c.set(0, 0, Complex64::new(1.0, 0.0));
        let mut b = Matrix::zeros(self.field, 2, 1);
        b.set(1, 0, Complex64::new(1.0, 0.0));
        Blocks { c, b, coeffs }
    }

    fn sum(&self, r1: Blocks, r2: Blocks) -> Result<Blocks> {
        let coeffs = r1
            .coeffs
            .iter()
            .zip(&r2.coeffs)
            .map(|(a, b)| a.direct_sum(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Blocks {
            c: r1.c.vstack(&r2.c)?,
            b: r1.b.vstack(&r2.b)?,
            coeffs,
        })
    }

    fn product(&self, r1: Blocks, r2: Blocks) -> Result<Blocks> {
        // L = [[L1, -b1 c2*], [0, L2]], c = (c1; 0), b = (0; b2)
        let d1 = r1.c.rows();
        let d2 = r2.c.rows();
        let cross = r1.b.mul(&r2.c.adjoint())?.neg();
        let mut coeffs = Vec::with_capacity(self.g + 1);
        for k in 0..=self.g {
            let mut a = r1.coeffs[k].direct_sum(&r2.coeffs[k])?;
            if k == 0 {
                for i in 0..d1 {
                    for j in 0..d2 {
                        a.set(i, d1 + j, cross.get(i, j));
                    }
                }
            }
            coeffs.push(a);
        }
        let c = r1.c.vstack(&Matrix::zeros(self.field, d2, 1))?;
        let b = Matrix::zeros(self.field, d1, 1).vstack(&r2.b)?;
        Ok(Blocks { c, b, coeffs })
    }

    fn inverse(&self, r: Blocks) -> Result<Blocks> {
        // bordered pencil M = [[L, b], [c*, 0]], c_new = -e_{d+1}, b_new = e_{d+1}
        let d = r.c.rows();
        let mut coeffs = Vec::with_capacity(self.g + 1);
        for k in 0..=self.g {
            let mut a = Matrix::zeros(self.field, d + 1, d + 1);
            for i in 0..d {
                for j in 0..d {
                    a.set(i, j, r.coeffs[k].get(i, j));
                }
            }
            if k == 0 {
                for i in 0..d {
                    a.set(i, d, r.b.get(i, 0));
                    a.set(d, i, r.c.get(i, 0).conj());
                }
            }
            coeffs.push(a);
        }
        let mut c = Matrix::zeros(self.field, d + 1, 1);
        c.set(d, 0, Complex64::new(-1.0, 0.0));
        let mut b = Matrix::zeros(self.field, d + 1, 1);
        b.set(d, 0, Complex64::new(1.0, 0.0));
        Ok(Blocks { c, b, coeffs })
    }

    fn build(&self, e: &ExprRef) -> Result<Blocks> {
        match &**e {
            Expr::Const(z) => Ok(self.constant(*z)),
            Expr::Var(j) => Ok(self.variable(*j)),
            Expr::Sum(a, b) => {
                let ra = self.build(a)?;
                let rb = self.build(b)?;
                self.sum(ra, rb)
            }
            Expr::Product(a, b) => {
                let ra = self.build(a)?;
                let rb = self.build(b)?;
                self.product(ra, rb)
            }
            Expr::Inverse(a) => {
                let ra = self.build(a)?;
                self.inverse(ra)
            }
        }
    }
}

/// Find the sub-expression (if any) whose inverse input at the scalar point
/// is smaller than the center margin.
fn singular_subexpr_at(e: &ExprRef, values: &[Complex64]) -> Option<ExprRef> {
    fn walk(e: &ExprRef, values: &[Complex64]) -> std::result::Result<Complex64, ExprRef> {
        match &**e {
            Expr::Const(z) => Ok(*z),
            Expr::Var(j) => Ok(values[*j - 1]),
            Expr::Sum(a, b) => Ok(walk(a, values)? + walk(b, values)?),
            Expr::Product(a, b) => Ok(walk(a, values)? * walk(b, values)?),
            Expr::Inverse(a) => {
                let v = walk(a, values)?;
                if v.norm() < CENTER_MARGIN {
                    Err(a.clone())
                } else {
                    Ok(v.inv())
                }
            }
        }
    }
    walk(e, values).err()
}

/// Construct a realization of `e` centered at the scalar tuple λ. Every
/// sub-expression must be defined at λ (use
/// [`crate::ncexpr::find_scalar_center`] to obtain one); the offending
/// sub-expression is reported otherwise.
pub fn build(e: &RationalExpr, center: &[f64]) -> Result<Realization> {
    if center.len() != e.nvars {
        return Err(Error::DimensionMismatch("center length".into()));
    }
    let shifted = e.shift(center);
    let zeros: Vec<Complex64> = vec![Complex64::ZERO; e.nvars];
    if let Some(bad) = singular_subexpr_at(&shifted.root, &zeros) {
        return Err(Error::UndefinedAtCenter(format_expr(&bad)));
    }
    if eval_scalar(&shifted.root, &zeros).is_none() {
        return Err(Error::Degenerate(
            "expression undefined at its own center".into(),
        ));
    }
    let builder = Builder {
        g: e.nvars,
        field: e.field,
    };
    let blocks = builder.build(&shifted.root)?;
    let pencil = LinearPencil::new(blocks.coeffs)?;
    Realization::new(blocks.c, blocks.b, pencil, center.to_vec())
}

/// Evaluate `r(X) = (c*⊗I) L(X−λ)⁻¹ (b⊗I)`. A singular pencil evaluation is
/// an error; for minimal realizations it signals `X ∉ dom r`.
pub fn eval_realization(r: &Realization, x: &MatrixPoint) -> Result<Matrix> {
    let shifted = x.offset(&r.center, -1.0);
    let m = r.pencil.eval(&shifted)?;
    if m.cond() > crate::ncexpr::COND_THRESHOLD {
        return Err(Error::Singular(
            "pencil is singular at the point (outside the domain for minimal realizations)".into(),
        ));
    }
    let eye = Matrix::identity(r.field(), x.size());
    let b_block = crate::linalg::kron(&r.b, &eye)?;
    let c_block = crate::linalg::kron(&r.c, &eye)?;
    let solved = m.solve(&b_block)?;
    c_block.adjoint().mul(&solved)
}

/// Orthonormal basis of the smallest subspace containing the seed columns
/// and invariant under all generators, grown Krylov-style with repeated
/// re-orthonormalization.
fn krylov_span(generators: &[Matrix], seed: &Matrix, field: Field) -> Result<Matrix> {
    let d = seed.rows();
    let mut basis: Vec<Matrix> = Vec::new();
    let mut frontier: Vec<Matrix> = Vec::new();
    let push = |v: &Matrix, basis: &mut Vec<Matrix>, frontier: &mut Vec<Matrix>| -> Result<()> {
        let norm = v.frobenius_norm();
        if norm <= KRYLOV_RTOL {
            return Ok(());
        }
        let mut w = v.scale(Complex64::new(1.0 / norm, 0.0));
        for _ in 0..2 {
            for u in basis.iter() {
                let coef = u.adjoint().mul(&w)?.get(0, 0);
                w = w.sub(&u.scale(coef))?;
            }
        }
        let res = w.frobenius_norm();
        if res > KRYLOV_RTOL {
            let unit = w.scale(Complex64::new(1.0 / res, 0.0));
            basis.push(unit.clone());
            frontier.push(unit);
        }
        Ok(())
    };
    for j in 0..seed.cols() {
        let col = seed.column(j);
        push(&col, &mut basis, &mut frontier)?;
    }
    while !frontier.is_empty() && basis.len() < d {
        let mut next = Vec::new();
        for v in frontier.drain(..) {
            for gmat in generators {
                let image = gmat.mul(&v)?;
                push(&image, &mut basis, &mut next)?;
            }
        }
        frontier = next;
    }
    if basis.is_empty() {
        return Ok(Matrix::zeros(field, d, 0));
    }
    let mut out = Matrix::zeros(field, d, basis.len());
    for (j, u) in basis.iter().enumerate() {
        for i in 0..d {
            out.set(i, j, u.get(i, 0));
        }
    }
    Ok(out)
}

fn trivial_zero(r: &Realization) -> Result<Realization> {
    let field = r.field();
    let mut coeffs = vec![Matrix::identity(field, 1)];
    coeffs.extend((0..r.g()).map(|_| Matrix::zeros(field, 1, 1)));
    Realization::new(
        Matrix::zeros(field, 1, 1),
        Matrix::zeros(field, 1, 1),
        LinearPencil::new(coeffs)?,
        r.center().to_vec(),
    )
}

/// Reduce a realization to minimal size: normalize `L(0) = I`, restrict to
/// the reachable subspace `span{A^w b}`, then project onto the observable
/// subspace `span{(A*)^w c}`. The result is validated against the input on
/// random points before being returned.
pub fn minimize(r: &Realization) -> Result<Realization> {
    let field = r.field();
    let a0 = r.pencil().coeff(0);
    let cond = a0.cond();
    if cond > CENTER_COND_LIMIT {
        return Err(Error::IllConditioned { cond });
    }
    // L(0) = I normalization: L ← A0⁻¹L, b ← A0⁻¹b
    let b_tilde = a0.solve(r.b())?;
    let gens: Vec<Matrix> = (1..=r.g())
        .map(|j| Ok(a0.solve(r.pencil().coeff(j))?.neg()))
        .collect::<Result<Vec<_>>>()?;

    let reach = krylov_span(&gens, &b_tilde, field)?;
    if reach.cols() == 0 {
        return trivial_zero(r);
    }
    let gens_r: Vec<Matrix> = gens
        .iter()
        .map(|a| reach.adjoint().mul(&a.mul(&reach)?))
        .collect::<Result<Vec<_>>>()?;
    let b_r = reach.adjoint().mul(&b_tilde)?;
    let c_r = reach.adjoint().mul(r.c())?;

    let gens_r_adj: Vec<Matrix> = gens_r.iter().map(|a| a.adjoint()).collect();
    let obs = krylov_span(&gens_r_adj, &c_r, field)?;
    if obs.cols() == 0 {
        return trivial_zero(r);
    }
    let gens_o: Vec<Matrix> = gens_r
        .iter()
        .map(|a| obs.adjoint().mul(&a.mul(&obs)?))
        .collect::<Result<Vec<_>>>()?;
    let b_o = obs.adjoint().mul(&b_r)?;
    let c_o = obs.adjoint().mul(&c_r)?;

    let dmin = b_o.rows();
    let mut coeffs = vec![Matrix::identity(field, dmin)];
    coeffs.extend(gens_o.iter().map(|a| a.neg()));
    let reduced = Realization::new(c_o, b_o, LinearPencil::new(coeffs)?, r.center().to_vec())?;

    validate_agreement(r, &reduced)?;
    Ok(reduced)
}

/// Check that two realizations of the same function agree on random
/// self-adjoint points of sizes 1..5.
fn validate_agreement(a: &Realization, b: &Realization) -> Result<()> {
    let mut checked = 0usize;
    for trial in 0..30u64 {
        let n = (trial as usize % 5) + 1;
        let x = crate::ncexpr::random_selfadjoint_point_seeded(
            a.g().max(1),
            n,
            a.field(),
            0x9e37_79b9 ^ trial,
        );
        let va = match eval_realization(a, &x) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let vb = match eval_realization(b, &x) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let err = va.sub(&vb)?.frobenius_norm();
        if err > 1e-8 * (1.0 + va.frobenius_norm()) {
            return Err(Error::NumericalFailure(format!(
                "reduced realization deviates by {err:.3e}"
            )));
        }
        checked += 1;
    }
    if checked < 10 {
        return Err(Error::NumericalFailure(
            "too few valid sample points for reduction validation".into(),
        ));
    }
    Ok(())
}

/// Build at the given center and minimize.
pub fn minimal_realization(e: &RationalExpr, center: &[f64]) -> Result<Realization> {
    minimize(&build(e, center)?)
}

/// Compare realization evaluation with strict expression evaluation at a
/// point (used by tests and the acceptance suite).
pub fn agreement_error(r: &Realization, e: &RationalExpr, x: &MatrixPoint) -> Result<Option<f64>> {
    let strict = eval_strict(e, x, &EvalOptions::default())?;
    let value = match strict {
        Outcome::Defined(v) => v,
        Outcome::Undefined(_) => return Ok(None),
    };
    let realized = match eval_realization(r, x) {
        Ok(v) => v,
        Err(_) => return Ok(None),
    };
    let err = realized.sub(&value)?.frobenius_norm() / (1.0 + value.frobenius_norm());
    Ok(Some(err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncexpr::{find_scalar_center, parse, random_selfadjoint_point_seeded};

    fn build_str(text: &str, g: usize) -> Realization {
        let e = parse(text, g, Field::Real).unwrap();
        let center = find_scalar_center(&e, 100, 7).unwrap();
        build(&e, &center).unwrap()
    }

    #[test]
    fn variable_has_size_two() {
        let r = build_str("x1", 1);
        assert_eq!(r.size(), 2);
        let x = random_selfadjoint_point_seeded(1, 3, Field::Real, 2);
        let v = eval_realization(&r, &x).unwrap();
        assert!(v.sub(x.mat(0)).unwrap().frobenius_norm() < 1e-10);
    }

    #[test]
    fn constant_has_size_one() {
        let r = build_str("5", 1);
        assert_eq!(r.size(), 1);
        let x = random_selfadjoint_point_seeded(1, 4, Field::Real, 3);
        let v = eval_realization(&r, &x).unwrap();
        let expected = Matrix::identity(Field::Real, 4).scale(Complex64::new(5.0, 0.0));
        assert!(v.sub(&expected).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn square_minimizes_to_three() {
        let e = parse("x1*x1", 1, Field::Real).unwrap();
        let r = build(&e, &[0.0]).unwrap();
        assert_eq!(r.size(), 4);
        let m = minimize(&r).unwrap();
        assert_eq!(m.size(), 3);
        let x = random_selfadjoint_point_seeded(1, 3, Field::Real, 5);
        let v = eval_realization(&m, &x).unwrap();
        let expected = x.mat(0).mul(x.mat(0)).unwrap();
        assert!(v.sub(&expected).unwrap().frobenius_norm() < 1e-9);
    }

    #[test]
    fn zero_expression_minimizes_to_trivial() {
        let e = parse("x1 - x1", 1, Field::Real).unwrap();
        let r = build(&e, &[0.0]).unwrap();
        let m = minimize(&r).unwrap();
        assert_eq!(m.size(), 1);
        assert!(m.c().frobenius_norm() == 0.0 || m.b().frobenius_norm() == 0.0);
    }

    #[test]
    fn inverse_evaluates_correctly() {
        let r = build_str("inv(1 + x1*x1)", 1);
        let zero = MatrixPoint::zero(Field::Real, 1, 1);
        let v = eval_realization(&r, &zero).unwrap();
        assert!((v.get(0, 0).re - 1.0).abs() < 1e-12);
        for seed in 0..10 {
            let x = random_selfadjoint_point_seeded(1, 4, Field::Real, seed);
            let v = eval_realization(&r, &x).unwrap();
            let e = parse("inv(1 + x1*x1)", 1, Field::Real).unwrap();
            let strict = eval_strict(&e, &x, &EvalOptions::default())
                .unwrap()
                .defined()
                .unwrap();
            assert!(v.sub(&strict).unwrap().frobenius_norm() < 1e-9);
        }
    }

    #[test]
    fn reports_offending_subexpression() {
        let e = parse("inv(x1)", 1, Field::Real).unwrap();
        match build(&e, &[0.0]) {
            Err(Error::UndefinedAtCenter(s)) => assert_eq!(s, "x1"),
            other => panic!("expected center error, got {other:?}"),
        }
    }

    #[test]
    fn build_agrees_with_strict_evaluation_randomly() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(12);
        use rand::{Rng, SeedableRng};
        let _ = rand::rngs::StdRng::seed_from_u64(0);
        let mut tested = 0;
        for trial in 0..80 {
            let root = crate::ncexpr::random_expr(&mut rng, 2, Field::Real, 4, true);
            let e = RationalExpr::new(root, 2, Field::Real).unwrap();
            let center = match find_scalar_center(&e, 40, trial) {
                Ok(c) => c,
                Err(_) => continue,
            };
            let r = match build(&e, &center) {
                Ok(r) => r,
                Err(_) => continue,
            };
            for pt in 0..5u64 {
                let n = (pt as usize % 3) + 1;
                let x = random_selfadjoint_point_seeded(2, n, Field::Real, rng.random());
                if let Some(err) = agreement_error(&r, &e, &x).unwrap() {
                    assert!(
                        err < 1e-7,
                        "realization/expression mismatch {err:.3e} for {}",
                        e.format()
                    );
                    tested += 1;
                }
            }
        }
        assert!(tested > 50, "only {tested} comparisons ran");
    }

    #[test]
    fn minimize_is_idempotent_in_size() {
        let e = parse("inv(2 + x1*x2 + x2*x1) + x1*x1", 2, Field::Real).unwrap();
        let r = build(&e, &[0.0, 0.0]).unwrap();
        let m1 = minimize(&r).unwrap();
        let m2 = minimize(&m1).unwrap();
        assert!(m1.size() <= r.size());
        assert_eq!(m1.size(), m2.size());
    }

    #[test]
    fn shift_consistency() {
        let e = parse("inv(x1 - 2)", 1, Field::Real).unwrap();
        let lambda = [1.0];
        let r_center = build(&e, &lambda).unwrap();
        let r_shifted = build(&e.shift(&lambda), &[0.0]).unwrap();
        for seed in 0..10 {
            let x = random_selfadjoint_point_seeded(1, 3, Field::Real, 100 + seed);
            let v1 = match eval_realization(&r_center, &x) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let v2 = eval_realization(&r_shifted, &x.offset(&lambda, -1.0)).unwrap();
            assert!(v1.sub(&v2).unwrap().frobenius_norm() < 1e-9 * (1.0 + v1.frobenius_norm()));
        }
    }

    #[test]
    fn minimal_domain_principle() {
        // after minimization, strictly-defined points never hit a singular pencil
        let e = parse("inv(1 + x1*x1)", 1, Field::Real).unwrap();
        let m = minimal_realization(&e, &[0.0]).unwrap();
        for seed in 0..30 {
            let n = (seed as usize % 4) + 1;
            let x = random_selfadjoint_point_seeded(1, n, Field::Real, 500 + seed);
            let strict = eval_strict(&e, &x, &EvalOptions::default()).unwrap();
            if strict.is_defined() {
                assert!(eval_realization(&m, &x).is_ok());
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let r = build_str("inv(2 + x1)", 1);
        let v = r.to_json();
        let back = Realization::from_json(&v).unwrap();
        assert_eq!(back.size(), r.size());
        let x = random_selfadjoint_point_seeded(1, 2, Field::Real, 9);
        let va = eval_realization(&r, &x).unwrap();
        let vb = eval_realization(&back, &x).unwrap();
        assert!(va.sub(&vb).unwrap().frobenius_norm() < 1e-12);
    }
}
