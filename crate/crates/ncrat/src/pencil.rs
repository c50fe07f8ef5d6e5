//! Linear matrix pencils `L = A₀ + Σ Aⱼxⱼ`: evaluation through Kronecker
//! products, real-part compression, kernel restriction, adjoints, a
//! probabilistic full-rank oracle and joint-nilpotency detection.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::jsonio;
use crate::linalg::{self, kron, Field, Matrix, RANK_RTOL};
use crate::ncexpr::{random_point, random_selfadjoint_point, MatrixPoint};
use crate::{Error, Result};

/// Rectangular pencil of size d×e in g variables: coefficients A₀,…,A_g.
#[derive(Debug, Clone)]
pub struct LinearPencil {
    g: usize,
    d: usize,
    e: usize,
    field: Field,
    coeffs: Vec<Matrix>,
}

impl LinearPencil {
    pub fn new(coeffs: Vec<Matrix>) -> Result<LinearPencil> {
        if coeffs.is_empty() {
            return Err(Error::DimensionMismatch("pencil needs at least A0".into()));
        }
        let d = coeffs[0].rows();
        let e = coeffs[0].cols();
        let field = coeffs[0].field();
        for a in &coeffs {
            if a.rows() != d || a.cols() != e {
                return Err(Error::DimensionMismatch(
                    "pencil coefficients must share one size".into(),
                ));
            }
            if a.field() != field {
                return Err(Error::FieldMismatch("pencil coefficients"));
            }
        }
        Ok(LinearPencil {
            g: coeffs.len() - 1,
            d,
            e,
            field,
            coeffs,
        })
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn e(&self) -> usize {
        self.e
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn coeff(&self, j: usize) -> &Matrix {
        &self.coeffs[j]
    }

    pub fn coeffs(&self) -> &[Matrix] {
        &self.coeffs
    }

    /// `L(X) = A₀⊗I + Σ Aⱼ⊗Xⱼ`, a dn×en matrix.
    pub fn eval(&self, x: &MatrixPoint) -> Result<Matrix> {
        if x.g() < self.g {
            return Err(Error::DimensionMismatch(format!(
                "pencil in {} variables evaluated at a {}-tuple",
                self.g,
                x.g()
            )));
        }
        if x.field() != self.field {
            return Err(Error::FieldMismatch("pencil evaluation"));
        }
        let eye = Matrix::identity(self.field, x.size());
        let mut acc = kron(&self.coeffs[0], &eye)?;
        for j in 1..=self.g {
            acc = acc.add(&kron(&self.coeffs[j], x.mat(j - 1))?)?;
        }
        Ok(acc)
    }

    /// Evaluate at a real scalar tuple (1×1 point).
    pub fn eval_scalars(&self, values: &[f64]) -> Result<Matrix> {
        let scalars: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.eval(&MatrixPoint::from_scalars(self.field, &scalars))
    }

    /// The list Re(DA₀),…,Re(DA_g) for D of size e×d.
    pub fn real_compress(&self, d_mat: &Matrix) -> Result<Vec<Matrix>> {
        if d_mat.rows() != self.e || d_mat.cols() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "compression matrix must be {}x{}, got {}x{}",
                self.e,
                self.d,
                d_mat.rows(),
                d_mat.cols()
            )));
        }
        if d_mat.field() != self.field {
            return Err(Error::FieldMismatch("real compression"));
        }
        self.coeffs
            .iter()
            .map(|a| Ok(d_mat.mul(a)?.hermitian_part()))
            .collect()
    }

    /// Restriction LV for V of size e×e' with full column rank.
    pub fn restrict(&self, v: &Matrix) -> Result<LinearPencil> {
        if v.rows() != self.e {
            return Err(Error::DimensionMismatch("restriction basis rows".into()));
        }
        if v.cols() > 0 && linalg::rank(v, RANK_RTOL) < v.cols() {
            return Err(Error::RankDeficient);
        }
        let coeffs = self
            .coeffs
            .iter()
            .map(|a| a.mul(v))
            .collect::<Result<Vec<_>>>()?;
        LinearPencil::new(coeffs)
    }

    /// Coefficientwise adjoint, an e×d pencil.
    pub fn adjoint(&self) -> LinearPencil {
        LinearPencil {
            g: self.g,
            d: self.e,
            e: self.d,
            field: self.field,
            coeffs: self.coeffs.iter().map(|a| a.adjoint()).collect(),
        }
    }

    /// Left multiplication U·L by a fixed matrix.
    pub fn left_mul(&self, u: &Matrix) -> Result<LinearPencil> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|a| u.mul(a))
            .collect::<Result<Vec<_>>>()?;
        LinearPencil::new(coeffs)
    }

    /// Real 2d×2e embedding of each coefficient.
    pub fn real_embedding(&self) -> LinearPencil {
        LinearPencil::new(self.coeffs.iter().map(|a| a.real_embedding()).collect())
            .expect("embedded pencil")
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|a| a.op_norm()).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "field": self.field.as_str(),
            "g": self.g,
            "d": self.d,
            "e": self.e,
            "coeffs": self.coeffs.iter().map(jsonio::matrix_to_value).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<LinearPencil> {
        let field = jsonio::get_field(v, "field")?;
        let g = jsonio::get_usize(v, "g")?;
        let d = jsonio::get_usize(v, "d")?;
        let e = jsonio::get_usize(v, "e")?;
        let coeffs_json = v
            .get("coeffs")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Json("missing `coeffs`".into()))?;
        if coeffs_json.len() != g + 1 {
            return Err(Error::Json(format!(
                "expected {} coefficient matrices, got {}",
                g + 1,
                coeffs_json.len()
            )));
        }
        let coeffs = coeffs_json
            .iter()
            .map(|m| jsonio::matrix_from_value(field, d, e, m))
            .collect::<Result<Vec<_>>>()?;
        LinearPencil::new(coeffs)
    }
}

/// Point JSON: `{ "field", "g", "n", "mats": [...] }` with the matrix
/// encoding of the pencil format.
pub fn point_to_json(x: &MatrixPoint) -> Value {
    json!({
        "field": x.field().as_str(),
        "g": x.g(),
        "n": x.size(),
        "mats": x.mats().iter().map(jsonio::matrix_to_value).collect::<Vec<_>>(),
    })
}

pub fn point_from_json(v: &Value) -> Result<MatrixPoint> {
    let field = jsonio::get_field(v, "field")?;
    let g = jsonio::get_usize(v, "g")?;
    let n = jsonio::get_usize(v, "n")?;
    let mats_json = v
        .get("mats")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Json("missing `mats`".into()))?;
    if mats_json.len() != g {
        return Err(Error::Json(format!(
            "expected {g} matrices, got {}",
            mats_json.len()
        )));
    }
    let mats = mats_json
        .iter()
        .map(|m| jsonio::matrix_from_value(field, n, n, m))
        .collect::<Result<Vec<_>>>()?;
    MatrixPoint::new(field, mats)
}

/// Options for the sampling full-rank oracle.
#[derive(Debug, Clone)]
pub struct FullRankOptions {
    pub sizes: Vec<usize>,
    pub trials_per_size: usize,
    pub selfadjoint: bool,
    pub seed: u64,
}

impl FullRankOptions {
    /// Default sizes 1..min((g+1)e², 12) with 50 trials per size.
    pub fn default_for(pencil: &LinearPencil, seed: u64) -> FullRankOptions {
        let bound = (pencil.g() + 1) * pencil.e() * pencil.e();
        let max_size = bound.clamp(1, 12);
        FullRankOptions {
            sizes: (1..=max_size).collect(),
            trials_per_size: 50,
            selfadjoint: true,
            seed,
        }
    }
}

/// Result of [`full_rank_sample`]: a probabilistic one-sided rank oracle.
#[derive(Debug, Clone)]
pub struct FullRankReport {
    /// Smallest observed σ_min of L(X).
    pub min_sigma: f64,
    /// Smallest observed σ_min normalized by ‖L(X)‖.
    pub min_sigma_normalized: f64,
    pub worst_point: Option<MatrixPoint>,
    pub samples: usize,
}

/// Sample random tuples at the given sizes and report the worst observed
/// smallest singular value of L(X). Only ever a cross-check: small values
/// suggest a rank drop, large values prove nothing.
pub fn full_rank_sample(pencil: &LinearPencil, opts: &FullRankOptions) -> FullRankReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = FullRankReport {
        min_sigma: f64::INFINITY,
        min_sigma_normalized: f64::INFINITY,
        worst_point: None,
        samples: 0,
    };
    for &n in &opts.sizes {
        for _ in 0..opts.trials_per_size {
            let x = if opts.selfadjoint {
                random_selfadjoint_point(pencil.g(), n, pencil.field(), &mut rng)
            } else {
                random_point(pencil.g(), n, pencil.field(), &mut rng)
            };
            let value = match pencil.eval(&x) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let sigma = linalg::min_singular_value(&value);
            let scale = value.op_norm().max(1e-300);
            report.samples += 1;
            if sigma < report.min_sigma {
                report.min_sigma = sigma;
                report.worst_point = Some(x);
            }
            report.min_sigma_normalized = report.min_sigma_normalized.min(sigma / scale);
        }
    }
    report
}

/// Joint nilpotency of A₀⁻¹A₁,…,A₀⁻¹A_g for a square pencil with invertible
/// A₀, decided by iterated span multiplication: the span of all words of
/// length k applied to the full space must vanish by k = d. Equivalent to
/// `det L(X) ≠ 0` for every (not necessarily self-adjoint) matrix tuple X.
pub fn jointly_nilpotent(pencil: &LinearPencil) -> Result<bool> {
    if pencil.d() != pencil.e() {
        return Err(Error::DimensionMismatch(
            "joint nilpotency needs a square pencil".into(),
        ));
    }
    let a0 = pencil.coeff(0);
    if a0.cond() > 1e12 {
        return Err(Error::Singular("A0 is singular".into()));
    }
    let generators: Vec<Matrix> = (1..=pencil.g())
        .map(|j| a0.solve(pencil.coeff(j)))
        .collect::<Result<Vec<_>>>()?;
    let d = pencil.d();
    // scale against which an image direction counts as genuinely nonzero
    let scale = generators
        .iter()
        .map(|b| b.op_norm())
        .fold(1.0f64, f64::max);
    // T_0 = K^d, T_{k+1} = Σ_j B_j T_k; nilpotent iff T_d = 0.
    let mut span = Matrix::identity(pencil.field(), d);
    for _ in 0..d {
        if span.cols() == 0 {
            return Ok(true);
        }
        let mut stacked: Option<Matrix> = None;
        for b in &generators {
            let image = b.mul(&span)?;
            stacked = Some(match stacked {
                Some(acc) => acc.hstack(&image)?,
                None => image,
            });
        }
        span = match stacked {
            Some(s) => orthonormal_column_span_floored(&s, 1e-10, scale),
            None => Matrix::zeros(pencil.field(), d, 0),
        };
    }
    Ok(span.cols() == 0)
}

/// Orthonormal basis of the column span at a relative singular value cutoff.
pub fn orthonormal_column_span(m: &Matrix, rtol: f64) -> Matrix {
    orthonormal_column_span_floored(m, rtol, 0.0)
}

/// Column span with the cutoff floored at `rtol·floor`, so that matrices that
/// are pure numerical noise below the floor scale collapse to rank 0.
pub fn orthonormal_column_span_floored(m: &Matrix, rtol: f64, floor: f64) -> Matrix {
    if m.cols() == 0 {
        return Matrix::zeros(m.field(), m.rows(), 0);
    }
    let svd = nalgebra::SVD::new(m.storage().clone(), true, false);
    let u = svd.u.expect("svd u");
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return Matrix::zeros(m.field(), m.rows(), 0);
    }
    let cutoff = rtol * smax.max(floor);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > cutoff)
        .collect();
    let mut data = nalgebra::DMatrix::<Complex64>::zeros(m.rows(), keep.len());
    for (out, &idx) in keep.iter().enumerate() {
        data.column_mut(out).copy_from(&u.column(idx));
    }
    Matrix::from_storage(m.field(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncexpr::random_selfadjoint_point_seeded;

    /// The 3×3 pencil [[1, x1-x2, x1-1], [x2-x1, 1, 1], [1-x1, -1, 0]].
    pub(crate) fn example_22_pencil() -> LinearPencil {
        let a0 = Matrix::from_real_rows(&[&[1., 0., -1.], &[0., 1., 1.], &[1., -1., 0.]]);
        let a1 = Matrix::from_real_rows(&[&[0., 1., 1.], &[-1., 0., 0.], &[-1., 0., 0.]]);
        let a2 = Matrix::from_real_rows(&[&[0., -1., 0.], &[1., 0., 0.], &[0., 0., 0.]]);
        LinearPencil::new(vec![a0, a1, a2]).unwrap()
    }

    #[test]
    fn eval_at_zero_is_a0_kron_identity() {
        let l = example_22_pencil();
        let x = crate::ncexpr::MatrixPoint::zero(Field::Real, 2, 3);
        let v = l.eval(&x).unwrap();
        let expected = kron(l.coeff(0), &Matrix::identity(Field::Real, 3)).unwrap();
        assert!(v.sub(&expected).unwrap().frobenius_norm() < 1e-15);
    }

    #[test]
    fn eval_at_scalars_matches_substitution() {
        let l = example_22_pencil();
        let v = l.eval_scalars(&[1.0, 0.0]).unwrap();
        let expected = Matrix::from_real_rows(&[&[1., 1., 0.], &[-1., 1., 1.], &[0., -1., 0.]]);
        assert!(v.sub(&expected).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn eval_respects_direct_sums_up_to_shuffle() {
        let l = example_22_pencil();
        let x = random_selfadjoint_point_seeded(2, 2, Field::Real, 3);
        let y = random_selfadjoint_point_seeded(2, 3, Field::Real, 4);
        let xy = x.direct_sum(&y).unwrap();
        let exy = l.eval(&xy).unwrap();
        let ex = l.eval(&x).unwrap();
        let ey = l.eval(&y).unwrap();
        let (d, e) = (l.d(), l.e());
        let (n, m) = (2usize, 3usize);
        for i in 0..d {
            for k in 0..(n + m) {
                for j in 0..e {
                    for q in 0..(n + m) {
                        let lhs = exy.get(i * (n + m) + k, j * (n + m) + q);
                        let rhs = if k < n && q < n {
                            ex.get(i * n + k, j * n + q)
                        } else if k >= n && q >= n {
                            ey.get(i * m + (k - n), j * m + (q - n))
                        } else {
                            Complex64::ZERO
                        };
                        assert!((lhs - rhs).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn real_compress_identity_on_example() {
        let l = example_22_pencil();
        let d = Matrix::identity(Field::Real, 3);
        let parts = l.real_compress(&d).unwrap();
        let re_a0 = Matrix::from_real_rows(&[&[1., 0., 0.], &[0., 1., 0.], &[0., 0., 0.]]);
        assert!(parts[0].sub(&re_a0).unwrap().frobenius_norm() < 1e-14);
        assert!(parts[1].frobenius_norm() < 1e-14);
        assert!(parts[2].frobenius_norm() < 1e-14);
    }

    #[test]
    fn real_compress_zero() {
        let l = example_22_pencil();
        let parts = l.real_compress(&Matrix::zeros(Field::Real, 3, 3)).unwrap();
        for p in parts {
            assert_eq!(p.frobenius_norm(), 0.0);
        }
    }

    #[test]
    fn restrict_to_kernel_column() {
        let l = example_22_pencil();
        let v = Matrix::from_real_rows(&[&[0.], &[0.], &[1.]]);
        let l2 = l.restrict(&v).unwrap();
        // column pencil (x1-1, 1, 0)^T
        assert_eq!(l2.d(), 3);
        assert_eq!(l2.e(), 1);
        assert!((l2.coeff(0).get(0, 0).re + 1.0).abs() < 1e-14);
        assert!((l2.coeff(1).get(0, 0).re - 1.0).abs() < 1e-14);
        assert!((l2.coeff(0).get(1, 0).re - 1.0).abs() < 1e-14);
        assert!(l2.coeff(2).frobenius_norm() < 1e-14);
    }

    #[test]
    fn restrict_identity_and_rank_check() {
        let l = example_22_pencil();
        let id = Matrix::identity(Field::Real, 3);
        let same = l.restrict(&id).unwrap();
        for j in 0..=2 {
            assert!(same.coeff(j).sub(l.coeff(j)).unwrap().frobenius_norm() < 1e-15);
        }
        let bad = Matrix::from_real_rows(&[&[1., 1.], &[1., 1.], &[0., 0.]]);
        assert!(matches!(l.restrict(&bad), Err(Error::RankDeficient)));
    }

    #[test]
    fn adjoint_involution_and_evaluation() {
        let l = example_22_pencil();
        let back = l.adjoint().adjoint();
        for j in 0..=2 {
            assert!(back.coeff(j).sub(l.coeff(j)).unwrap().frobenius_norm() < 1e-15);
        }
        let x = random_selfadjoint_point_seeded(2, 3, Field::Real, 8);
        let lhs = l.adjoint().eval(&x).unwrap();
        let rhs = l.eval(&x).unwrap().adjoint();
        assert!(lhs.sub(&rhs).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn full_rank_sample_on_identity_and_coordinate() {
        let id = LinearPencil::new(vec![Matrix::identity(Field::Real, 1)]).unwrap();
        let report = full_rank_sample(&id, &FullRankOptions::default_for(&id, 1));
        assert!((report.min_sigma - 1.0).abs() < 1e-12);

        // L = x1: σ = 0 exactly at X1 = 0
        let lx = LinearPencil::new(vec![
            Matrix::zeros(Field::Real, 1, 1),
            Matrix::identity(Field::Real, 1),
        ])
        .unwrap();
        let zero = crate::ncexpr::MatrixPoint::zero(Field::Real, 1, 1);
        assert_eq!(linalg::min_singular_value(&lx.eval(&zero).unwrap()), 0.0);
    }

    #[test]
    fn jointly_nilpotent_examples() {
        // L = [[1, x1], [0, 1]]: A0^{-1}A1 strictly upper triangular
        let a0 = Matrix::identity(Field::Real, 2);
        let a1 = Matrix::from_real_rows(&[&[0., 1.], &[0., 0.]]);
        let l = LinearPencil::new(vec![a0, a1]).unwrap();
        assert!(jointly_nilpotent(&l).unwrap());

        // L = 1 - x1 is singular at X1 = 1
        let l2 = LinearPencil::new(vec![
            Matrix::identity(Field::Real, 1),
            Matrix::identity(Field::Real, 1).neg(),
        ])
        .unwrap();
        assert!(!jointly_nilpotent(&l2).unwrap());
    }

    #[test]
    fn jointly_nilpotent_conjugated_family() {
        // conjugate strictly upper triangular generators by a fixed basis change
        let mut rng = rand::rngs::StdRng::seed_from_u64(17);
        let n = 4;
        let t = {
            let m = nalgebra::DMatrix::<f64>::from_fn(n, n, |_, _| {
                rand::Rng::random::<f64>(&mut rng) - 0.5
            });
            Matrix::from_real(m + nalgebra::DMatrix::identity(n, n) * 2.0)
        };
        let tinv = t.try_inverse().unwrap();
        let mut coeffs = vec![Matrix::identity(Field::Real, n)];
        for s in 0..2usize {
            let mut nil = Matrix::zeros(Field::Real, n, n);
            for i in 0..n - 1 - s {
                nil.set(i, i + 1 + s, Complex64::new(1.0, 0.0));
            }
            coeffs.push(t.mul(&nil).unwrap().mul(&tinv).unwrap());
        }
        let l = LinearPencil::new(coeffs).unwrap();
        assert!(jointly_nilpotent(&l).unwrap());
        // cross-check: no singular value collapse at general points
        let opts = FullRankOptions {
            sizes: vec![1, 2, 3],
            trials_per_size: 30,
            selfadjoint: false,
            seed: 5,
        };
        let report = full_rank_sample(&l, &opts);
        assert!(
            report.min_sigma > 1e-6,
            "nilpotent pencil saw σ = {}",
            report.min_sigma
        );
    }

    #[test]
    fn json_round_trip() {
        let l = example_22_pencil();
        let v = l.to_json();
        let back = LinearPencil::from_json(&v).unwrap();
        for j in 0..=2 {
            assert!(back.coeff(j).sub(l.coeff(j)).unwrap().frobenius_norm() < 1e-15);
        }
        // complex pencil
        let a0 = Matrix::identity(Field::Complex, 2);
        let mut a1 = Matrix::zeros(Field::Complex, 2, 2);
        a1.set(0, 1, Complex64::new(1.0, -1.0));
        let lc = LinearPencil::new(vec![a0, a1]).unwrap();
        let back = LinearPencil::from_json(&lc.to_json()).unwrap();
        assert!(back.coeff(1).sub(lc.coeff(1)).unwrap().frobenius_norm() < 1e-15);
    }

    #[test]
    fn compress_identity_behind_definition() {
        // Re((DL)(X)) = Re(DA0)⊗I + Σ Re(DAj)⊗Xj at self-adjoint X
        let l = example_22_pencil();
        let mut rng = rand::rngs::StdRng::seed_from_u64(27);
        let dmat = Matrix::from_real(nalgebra::DMatrix::from_fn(3, 3, |_, _| {
            rand::Rng::random::<f64>(&mut rng) - 0.5
        }));
        let x = random_selfadjoint_point_seeded(2, 3, Field::Real, 11);
        let dl = l.left_mul(&dmat).unwrap();
        let lhs = dl.eval(&x).unwrap().hermitian_part();
        let parts = l.real_compress(&dmat).unwrap();
        let eye = Matrix::identity(Field::Real, 3);
        let mut rhs = kron(&parts[0], &eye).unwrap();
        for j in 1..=2 {
            rhs = rhs.add(&kron(&parts[j], x.mat(j - 1)).unwrap()).unwrap();
        }
        assert!(lhs.sub(&rhs).unwrap().frobenius_norm() < 1e-10);
    }
}
