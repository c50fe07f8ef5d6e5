//! Random matrix points, random expressions and the scalar-center search.
//!
//! Everything here takes explicit seeds or generators; there is no hidden
//! global state.

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{
    constant, constant_re, eval_scalar, inverse, product, star, sum, var, ExprRef, MatrixPoint,
    RationalExpr,
};
use crate::linalg::{Field, Matrix};
use crate::{Error, Result};

/// Minimal magnitude every inverse input must have at an accepted scalar
/// center.
pub const CENTER_MARGIN: f64 = 1e-6;

fn gaussian(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn random_square(rng: &mut impl Rng, field: Field, n: usize) -> Matrix {
    let scale = 1.0 / (n as f64).sqrt();
    let data = nalgebra::DMatrix::from_fn(n, n, |_, _| match field {
        Field::Real => Complex64::new(gaussian(rng) * scale, 0.0),
        Field::Complex => Complex64::new(
            gaussian(rng) * scale / 2f64.sqrt(),
            gaussian(rng) * scale / 2f64.sqrt(),
        ),
    });
    Matrix::from_storage(field, data)
}

/// Tuple of g independent self-adjoint matrices with gaussian entries,
/// normalized so ‖Xⱼ‖ is O(1).
pub fn random_selfadjoint_point(g: usize, n: usize, field: Field, rng: &mut impl Rng) -> MatrixPoint {
    assert!(n >= 1);
    let mats = (0..g)
        .map(|_| {
            let a = random_square(rng, field, n);
            a.hermitian_part()
        })
        .collect();
    MatrixPoint::new(field, mats).expect("random self-adjoint point")
}

/// Deterministic seeded variant; identical seeds give bit-identical points.
pub fn random_selfadjoint_point_seeded(g: usize, n: usize, field: Field, seed: u64) -> MatrixPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_selfadjoint_point(g, n, field, &mut rng)
}

/// General (not necessarily self-adjoint) random tuple.
pub fn random_point(g: usize, n: usize, field: Field, rng: &mut impl Rng) -> MatrixPoint {
    assert!(n >= 1);
    let mats = (0..g).map(|_| random_square(rng, field, n)).collect();
    MatrixPoint::new(field, mats).expect("random point")
}

/// Random normalized expression tree of bounded depth, for property tests.
pub fn random_expr(rng: &mut impl Rng, g: usize, field: Field, depth: usize, allow_inverse: bool) -> ExprRef {
    if depth == 0 || rng.random::<f64>() < 0.2 {
        return random_leaf(rng, g, field);
    }
    let choice = rng.random_range(0..if allow_inverse { 4 } else { 3 });
    match choice {
        0 => sum(
            random_expr(rng, g, field, depth - 1, allow_inverse),
            random_expr(rng, g, field, depth - 1, allow_inverse),
        ),
        1 => product(
            random_expr(rng, g, field, depth - 1, allow_inverse),
            random_expr(rng, g, field, depth - 1, allow_inverse),
        ),
        2 => {
            let inner = random_expr(rng, g, field, depth - 1, allow_inverse);
            star(&inner)
        }
        _ => inverse(random_expr(rng, g, field, depth - 1, allow_inverse)),
    }
}

fn random_leaf(rng: &mut impl Rng, g: usize, field: Field) -> ExprRef {
    if rng.random::<f64>() < 0.35 {
        let re = (rng.random_range(-40i32..=40) as f64) / 8.0;
        match field {
            Field::Real => constant_re(re),
            Field::Complex => {
                let im = if rng.random::<f64>() < 0.5 {
                    (rng.random_range(-40i32..=40) as f64) / 8.0
                } else {
                    0.0
                };
                constant(Complex64::new(re, im))
            }
        }
    } else {
        var(rng.random_range(1..=g))
    }
}

/// Random expression that is regular by construction: inverses only wrap
/// `c + Σ pᵢ* pᵢ` with c ≥ ½, which is positive definite at every
/// self-adjoint tuple.
pub fn random_regular_expr(rng: &mut impl Rng, g: usize, field: Field, depth: usize) -> ExprRef {
    if depth == 0 || rng.random::<f64>() < 0.25 {
        return random_leaf(rng, g, field);
    }
    match rng.random_range(0..4) {
        0 => sum(
            random_regular_expr(rng, g, field, depth - 1),
            random_regular_expr(rng, g, field, depth - 1),
        ),
        1 => product(
            random_regular_expr(rng, g, field, depth - 1),
            random_regular_expr(rng, g, field, depth - 1),
        ),
        2 => {
            let inner = random_regular_expr(rng, g, field, depth - 1);
            star(&inner)
        }
        _ => {
            let c = 0.5 + rng.random::<f64>() * 2.0;
            let mut body = constant_re(c);
            let terms = rng.random_range(1..=2);
            for _ in 0..terms {
                let p = random_polynomial(rng, g, field, depth.saturating_sub(2));
                body = sum(body, product(star(&p), p));
            }
            inverse(body)
        }
    }
}

fn random_polynomial(rng: &mut impl Rng, g: usize, field: Field, depth: usize) -> ExprRef {
    if depth == 0 || rng.random::<f64>() < 0.4 {
        return random_leaf(rng, g, field);
    }
    if rng.random::<f64>() < 0.5 {
        sum(
            random_polynomial(rng, g, field, depth - 1),
            random_polynomial(rng, g, field, depth - 1),
        )
    } else {
        product(
            random_polynomial(rng, g, field, depth - 1),
            random_polynomial(rng, g, field, depth - 1),
        )
    }
}

/// Search for a real scalar tuple λ at which the whole expression (hence
/// every sub-expression) evaluates with all inverse inputs bounded away from
/// zero. Tries λ = 0 first, then random draws of increasing magnitude.
pub fn find_scalar_center(e: &RationalExpr, attempts: usize, seed: u64) -> Result<Vec<f64>> {
    let g = e.nvars;
    let zero = vec![0.0; g];
    if center_ok(&e.root, &zero) {
        return Ok(zero);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scale = 0.5f64;
    for _ in 0..attempts {
        let lambda: Vec<f64> = (0..g).map(|_| gaussian(&mut rng) * scale).collect();
        if center_ok(&e.root, &lambda) {
            return Ok(lambda);
        }
        scale *= 1.15;
    }
    Err(Error::NoCenter { attempts })
}

fn center_ok(e: &ExprRef, lambda: &[f64]) -> bool {
    let values: Vec<Complex64> = lambda.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    match eval_scalar(e, &values) {
        Some((_, margin)) => margin >= CENTER_MARGIN,
        None => false,
    }
}

/// Uniformly random expression tree for parser round-trip tests (wraps
/// [`random_expr`] with a plain `StdRng`).
pub fn random_expr_seeded(g: usize, field: Field, depth: usize, seed: u64) -> ExprRef {
    let mut rng = StdRng::seed_from_u64(seed);
    random_expr(&mut rng, g, field, depth, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncexpr::parse;

    #[test]
    fn random_point_is_selfadjoint_and_deterministic() {
        let x = random_selfadjoint_point_seeded(3, 4, Field::Complex, 99);
        assert!(x.is_selfadjoint());
        let y = random_selfadjoint_point_seeded(3, 4, Field::Complex, 99);
        for j in 0..3 {
            assert_eq!(x.mat(j).storage(), y.mat(j).storage(), "seeded repeat differs");
        }
        let z = random_selfadjoint_point_seeded(3, 4, Field::Complex, 100);
        assert!(x.mat(0).sub(z.mat(0)).unwrap().frobenius_norm() > 1e-9);
    }

    #[test]
    fn center_for_polynomial_is_zero() {
        let e = parse("x1*x2 + 3*x1 - 1", 2, Field::Real).unwrap();
        assert_eq!(find_scalar_center(&e, 50, 1).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn center_for_inverse_avoids_zero() {
        let e = parse("inv(x1)", 1, Field::Real).unwrap();
        let lambda = find_scalar_center(&e, 50, 1).unwrap();
        assert!(lambda[0].abs() >= CENTER_MARGIN);
    }

    #[test]
    fn center_for_nested_needs_second_variable() {
        let e = parse("inv(1 + x1*inv(x2)*inv(x2)*x1)", 2, Field::Real).unwrap();
        let lambda = find_scalar_center(&e, 200, 7).unwrap();
        assert!(lambda[1].abs() >= CENTER_MARGIN);
    }

    #[test]
    fn regular_expressions_evaluate_everywhere() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..40 {
            let root = random_regular_expr(&mut rng, 2, Field::Real, 4);
            let e = RationalExpr::new(root, 2, Field::Real).unwrap();
            for seed in 0..5u64 {
                let x = random_selfadjoint_point_seeded(2, 3, Field::Real, seed * 31 + 7);
                let out = super::super::eval_strict(&e, &x, &Default::default()).unwrap();
                assert!(out.is_defined(), "regular-by-construction expression undefined at a point: {}", e.format());
            }
        }
    }
}
