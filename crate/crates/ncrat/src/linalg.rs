//! Dense numerical linear algebra over ℝ and ℂ.
//!
//! Everything downstream (pencil evaluation, realizations, the SDP engine)
//! works with the [`Matrix`] type defined here: a dense matrix with complex
//! storage and an explicit field tag. Real matrices carry exact zero
//! imaginary parts, so mixed real arithmetic stays exact. All positive
//! semidefinite reasoning elsewhere in the crate happens over ℝ via
//! [`Matrix::real_embedding`].

use nalgebra::{Cholesky, DMatrix, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::{Error, Result};

/// Default relative singular value cutoff for the pseudoinverse.
pub const PINV_RTOL: f64 = 1e-10;
/// Default relative cutoff for rank / kernel decisions.
pub const RANK_RTOL: f64 = 1e-8;

/// Scalar field tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    pub fn as_str(self) -> &'static str {
        match self {
            Field::Real => "R",
            Field::Complex => "C",
        }
    }

    pub fn from_str_tag(s: &str) -> Result<Field> {
        match s {
            "R" | "r" => Ok(Field::Real),
            "C" | "c" => Ok(Field::Complex),
            other => Err(Error::Json(format!("unknown field tag `{other}`"))),
        }
    }
}

/// Dense matrix over ℝ or ℂ with complex storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    field: Field,
    data: DMatrix<Complex64>,
}

impl Matrix {
    pub fn from_complex(data: DMatrix<Complex64>) -> Matrix {
        Matrix {
            field: Field::Complex,
            data,
        }
    }

    pub fn from_real(data: DMatrix<f64>) -> Matrix {
        Matrix {
            field: Field::Real,
            data: data.map(|x| Complex64::new(x, 0.0)),
        }
    }

    /// Wrap complex storage under an explicit field tag. For `Field::Real`
    /// the imaginary parts must already be exactly zero.
    pub fn from_storage(field: Field, data: DMatrix<Complex64>) -> Matrix {
        if field == Field::Real {
            debug_assert!(data.iter().all(|z| z.im == 0.0));
        }
        Matrix { field, data }
    }

    pub fn zeros(field: Field, rows: usize, cols: usize) -> Matrix {
        Matrix {
            field,
            data: DMatrix::zeros(rows, cols),
        }
    }

    pub fn identity(field: Field, n: usize) -> Matrix {
        Matrix {
            field,
            data: DMatrix::identity(n, n),
        }
    }

    pub fn scalar(field: Field, value: Complex64) -> Matrix {
        Matrix {
            field,
            data: DMatrix::from_element(1, 1, value),
        }
    }

    /// Build from a row-major list of complex entries.
    pub fn from_rows_vec(field: Field, rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Matrix> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Matrix {
            field,
            data: DMatrix::from_row_iterator(rows, cols, entries),
        })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Matrix {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = DMatrix::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                data[(i, j)] = Complex64::new(x, 0.0);
            }
        }
        Matrix {
            field: Field::Real,
            data,
        }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        if self.field == Field::Real {
            debug_assert!(v.im == 0.0);
        }
        self.data[(i, j)] = v;
    }

    pub fn storage(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    /// View as a real matrix. Panics if the field tag is complex.
    pub fn as_real(&self) -> DMatrix<f64> {
        assert_eq!(self.field, Field::Real, "as_real on a complex matrix");
        self.data.map(|z| z.re)
    }

    fn check_field(&self, other: &Matrix, op: &'static str) -> Result<()> {
        if self.field != other.field {
            return Err(Error::FieldMismatch(op));
        }
        Ok(())
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.check_field(other, "add")?;
        if self.rows() != other.rows() || self.cols() != other.cols() {
            return Err(Error::DimensionMismatch(format!(
                "add {}x{} + {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )));
        }
        Ok(Matrix {
            field: self.field,
            data: &self.data + &other.data,
        })
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.check_field(other, "sub")?;
        if self.rows() != other.rows() || self.cols() != other.cols() {
            return Err(Error::DimensionMismatch(format!(
                "sub {}x{} - {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )));
        }
        Ok(Matrix {
            field: self.field,
            data: &self.data - &other.data,
        })
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        self.check_field(other, "mul")?;
        if self.cols() != other.rows() {
            return Err(Error::DimensionMismatch(format!(
                "mul {}x{} * {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )));
        }
        Ok(Matrix {
            field: self.field,
            data: &self.data * &other.data,
        })
    }

    pub fn scale(&self, s: Complex64) -> Matrix {
        let field = if self.field == Field::Real && s.im != 0.0 {
            Field::Complex
        } else {
            self.field
        };
        Matrix {
            field,
            data: self.data.map(|z| z * s),
        }
    }

    pub fn neg(&self) -> Matrix {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    /// Conjugate transpose (plain transpose over ℝ).
    pub fn adjoint(&self) -> Matrix {
        Matrix {
            field: self.field,
            data: self.data.adjoint(),
        }
    }

    pub fn transpose(&self) -> Matrix {
        Matrix {
            field: self.field,
            data: self.data.transpose(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    /// Self-adjoint part ½(A + A*).
    pub fn hermitian_part(&self) -> Matrix {
        let h = (&self.data + self.data.adjoint()).map(|z| z * 0.5);
        Matrix {
            field: self.field,
            data: h,
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.norm()
    }

    /// Operator norm (largest singular value).
    pub fn op_norm(&self) -> f64 {
        if self.rows() == 0 || self.cols() == 0 {
            return 0.0;
        }
        self.data.clone().singular_values().max()
    }

    pub fn deviation_from_selfadjoint(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.data - self.data.adjoint()).norm()
    }

    pub fn is_selfadjoint(&self, tol: f64) -> bool {
        self.deviation_from_selfadjoint() <= tol * (1.0 + self.frobenius_norm())
    }

    /// Condition number σ_max/σ_min (∞ for singular or rectangular-deficient).
    pub fn cond(&self) -> f64 {
        let sv = self.data.clone().singular_values();
        let max = sv.max();
        let min = sv.min();
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// Solve A X = B by LU. Errors if A is singular to working precision.
    pub fn solve(&self, rhs: &Matrix) -> Result<Matrix> {
        self.check_field(rhs, "solve")?;
        if !self.is_square() || self.rows() != rhs.rows() {
            return Err(Error::DimensionMismatch("solve".into()));
        }
        let lu = self.data.clone().lu();
        match lu.solve(&rhs.data) {
            Some(x) if x.iter().all(|z| z.is_finite()) => Ok(Matrix {
                field: self.field,
                data: x,
            }),
            _ => Err(Error::Singular("LU solve failed".into())),
        }
    }

    pub fn try_inverse(&self) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("inverse of rectangular matrix".into()));
        }
        match self.data.clone().try_inverse() {
            Some(inv) if inv.iter().all(|z| z.is_finite()) => Ok(Matrix {
                field: self.field,
                data: inv,
            }),
            _ => Err(Error::Singular("matrix inverse failed".into())),
        }
    }

    /// Upper-triangular Cholesky factor R with R* R = A for self-adjoint
    /// positive definite A.
    pub fn cholesky_upper(&self) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("cholesky".into()));
        }
        let chol = Cholesky::new(self.data.clone())
            .ok_or_else(|| Error::Singular("matrix is not positive definite".into()))?;
        Ok(Matrix {
            field: self.field,
            data: chol.l().adjoint(),
        })
    }

    pub fn hstack(&self, other: &Matrix) -> Result<Matrix> {
        self.check_field(other, "hstack")?;
        if self.rows() != other.rows() {
            return Err(Error::DimensionMismatch("hstack".into()));
        }
        let mut data = DMatrix::zeros(self.rows(), self.cols() + other.cols());
        data.view_mut((0, 0), (self.rows(), self.cols())).copy_from(&self.data);
        data.view_mut((0, self.cols()), (other.rows(), other.cols()))
            .copy_from(&other.data);
        Ok(Matrix {
            field: self.field,
            data,
        })
    }

    pub fn vstack(&self, other: &Matrix) -> Result<Matrix> {
        self.check_field(other, "vstack")?;
        if self.cols() != other.cols() {
            return Err(Error::DimensionMismatch("vstack".into()));
        }
        let mut data = DMatrix::zeros(self.rows() + other.rows(), self.cols());
        data.view_mut((0, 0), (self.rows(), self.cols())).copy_from(&self.data);
        data.view_mut((self.rows(), 0), (other.rows(), other.cols()))
            .copy_from(&other.data);
        Ok(Matrix {
            field: self.field,
            data,
        })
    }

    pub fn block(&self, row: usize, col: usize, rows: usize, cols: usize) -> Matrix {
        Matrix {
            field: self.field,
            data: self.data.view((row, col), (rows, cols)).into_owned(),
        }
    }

    pub fn column(&self, j: usize) -> Matrix {
        self.block(0, j, self.rows(), 1)
    }

    /// Direct sum diag(A, B).
    pub fn direct_sum(&self, other: &Matrix) -> Result<Matrix> {
        self.check_field(other, "direct_sum")?;
        let mut data = DMatrix::zeros(self.rows() + other.rows(), self.cols() + other.cols());
        data.view_mut((0, 0), (self.rows(), self.cols())).copy_from(&self.data);
        data.view_mut((self.rows(), self.cols()), (other.rows(), other.cols()))
            .copy_from(&other.data);
        Ok(Matrix {
            field: self.field,
            data,
        })
    }

    /// Real 2m×2n embedding [[Re, −Im], [Im, Re]]. Maps hermitian matrices to
    /// symmetric ones and intertwines products and adjoints.
    pub fn real_embedding(&self) -> Matrix {
        let (r, c) = (self.rows(), self.cols());
        let mut data = DMatrix::<Complex64>::zeros(2 * r, 2 * c);
        for i in 0..r {
            for j in 0..c {
                let z = self.data[(i, j)];
                data[(i, j)] = Complex64::new(z.re, 0.0);
                data[(i, j + c)] = Complex64::new(-z.im, 0.0);
                data[(i + r, j)] = Complex64::new(z.im, 0.0);
                data[(i + r, j + c)] = Complex64::new(z.re, 0.0);
            }
        }
        Matrix {
            field: Field::Real,
            data,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Spectral decomposition of a self-adjoint matrix: ascending eigenvalues and
/// a unitary matrix of eigenvectors.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

/// Kronecker product. Errors on mismatched field tags.
pub fn kron(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.field() != b.field() {
        return Err(Error::FieldMismatch("kron"));
    }
    Ok(Matrix {
        field: a.field(),
        data: a.data.kronecker(&b.data),
    })
}

/// Moore-Penrose pseudoinverse via SVD with relative rank cutoff
/// `σ ≤ rtol·σ_max`.
pub fn pinv(a: &Matrix, rtol: f64) -> Matrix {
    let (r, c) = (a.rows(), a.cols());
    if r == 0 || c == 0 {
        return Matrix::zeros(a.field(), c, r);
    }
    let svd = SVD::new(a.data.clone(), true, true);
    let smax = svd.singular_values.max();
    let cutoff = rtol * smax;
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    let k = svd.singular_values.len();
    let mut sigma_plus = DMatrix::<Complex64>::zeros(k, k);
    for i in 0..k {
        let s = svd.singular_values[i];
        if s > cutoff && s > 0.0 {
            sigma_plus[(i, i)] = Complex64::new(1.0 / s, 0.0);
        }
    }
    let result = v_t.adjoint() * sigma_plus * u.adjoint();
    Matrix {
        field: a.field(),
        data: result,
    }
}

/// Full spectral decomposition of a self-adjoint matrix, eigenvalues sorted
/// ascending. Errors if the input deviates from self-adjointness by more than
/// `1e-10·(1 + ‖A‖)`.
pub fn hermitian_eig(a: &Matrix) -> Result<HermitianEig> {
    let dev = a.deviation_from_selfadjoint();
    if dev > 1e-10 * (1.0 + a.frobenius_norm()) {
        return Err(Error::NotSelfAdjoint { deviation: dev });
    }
    // Symmetrize exactly so the decomposition is clean.
    let h = a.hermitian_part();
    let eig = SymmetricEigen::new(h.data.clone());
    let n = a.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<Complex64>::zeros(n, n);
    for (out_col, &in_col) in order.iter().enumerate() {
        vectors.column_mut(out_col).copy_from(&eig.eigenvectors.column(in_col));
    }
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors: Matrix {
            field: a.field(),
            data: vectors,
        },
    })
}

/// Orthonormal basis of the span of eigenvectors with eigenvalue at most
/// `rtol·max(1, λ_max)` of a self-adjoint positive semidefinite matrix.
/// Returns a matrix with zero columns when the kernel is trivial.
pub fn kernel_basis(a: &Matrix, rtol: f64) -> Result<Matrix> {
    let eig = hermitian_eig(a)?;
    let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let cutoff = rtol * lambda_max.max(1.0);
    let cols: Vec<usize> = (0..a.rows())
        .filter(|&i| eig.eigenvalues[i] <= cutoff)
        .collect();
    let mut data = DMatrix::<Complex64>::zeros(a.rows(), cols.len());
    for (out_col, &in_col) in cols.iter().enumerate() {
        data.column_mut(out_col)
            .copy_from(&eig.eigenvectors.data.column(in_col));
    }
    Ok(Matrix {
        field: a.field(),
        data,
    })
}

/// Smallest singular value (0 for an empty matrix).
pub fn min_singular_value(a: &Matrix) -> f64 {
    if a.rows() == 0 || a.cols() == 0 {
        return 0.0;
    }
    a.data.clone().singular_values().min()
}

/// Numerical rank at relative tolerance `rtol`.
pub fn rank(a: &Matrix, rtol: f64) -> usize {
    if a.rows() == 0 || a.cols() == 0 {
        return 0;
    }
    let sv = a.data.clone().singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rtol * smax).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_matrix(rng: &mut StdRng, field: Field, r: usize, c: usize) -> Matrix {
        let data = DMatrix::from_fn(r, c, |_, _| match field {
            Field::Real => Complex64::new(rng.random::<f64>() - 0.5, 0.0),
            Field::Complex => Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
        });
        Matrix::from_storage(field, data)
    }

    #[test]
    fn kron_identity_blocks() {
        let i2 = Matrix::identity(Field::Real, 2);
        let i3 = Matrix::identity(Field::Real, 3);
        let k = kron(&i2, &i3).unwrap();
        let i6 = Matrix::identity(Field::Real, 6);
        assert!((k.sub(&i6).unwrap()).frobenius_norm() < 1e-15);
    }

    #[test]
    fn kron_scalar_factor() {
        let a = Matrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let b = Matrix::from_real_rows(&[&[2.0]]);
        let k = kron(&a, &b).unwrap();
        let expected = Matrix::from_real_rows(&[&[0.0, 2.0], &[0.0, 0.0]]);
        assert!((k.sub(&expected).unwrap()).frobenius_norm() < 1e-15);
    }

    #[test]
    fn kron_mixed_product_identity() {
        let mut rng = StdRng::seed_from_u64(7);
        for field in [Field::Real, Field::Complex] {
            let a = random_matrix(&mut rng, field, 2, 2);
            let b = random_matrix(&mut rng, field, 2, 2);
            let c = random_matrix(&mut rng, field, 2, 2);
            let d = random_matrix(&mut rng, field, 2, 2);
            let lhs = kron(&a, &b).unwrap().mul(&kron(&c, &d).unwrap()).unwrap();
            let rhs = kron(&a.mul(&c).unwrap(), &b.mul(&d).unwrap()).unwrap();
            assert!(lhs.sub(&rhs).unwrap().frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn kron_field_mismatch_errors() {
        let a = Matrix::identity(Field::Real, 2);
        let b = Matrix::identity(Field::Complex, 2);
        assert!(kron(&a, &b).is_err());
    }

    #[test]
    fn pinv_zero_matrix() {
        let z = Matrix::zeros(Field::Real, 3, 3);
        let p = pinv(&z, PINV_RTOL);
        assert_eq!(p.rows(), 3);
        assert!(p.frobenius_norm() == 0.0);
    }

    #[test]
    fn pinv_diagonal() {
        let d = Matrix::from_real_rows(&[&[2.0, 0.0], &[0.0, 0.0]]);
        let p = pinv(&d, PINV_RTOL);
        let expected = Matrix::from_real_rows(&[&[0.5, 0.0], &[0.0, 0.0]]);
        assert!(p.sub(&expected).unwrap().frobenius_norm() < 1e-14);
    }

    fn check_penrose(a: &Matrix, tol: f64) {
        let p = pinv(a, PINV_RTOL);
        let apa = a.mul(&p).unwrap().mul(a).unwrap();
        let pap = p.mul(a).unwrap().mul(&p).unwrap();
        let ap = a.mul(&p).unwrap();
        let pa = p.mul(a).unwrap();
        assert!(apa.sub(a).unwrap().frobenius_norm() < tol * (1.0 + a.frobenius_norm()));
        assert!(pap.sub(&p).unwrap().frobenius_norm() < tol * (1.0 + p.frobenius_norm()));
        assert!(ap.sub(&ap.adjoint()).unwrap().frobenius_norm() < tol);
        assert!(pa.sub(&pa.adjoint()).unwrap().frobenius_norm() < tol);
    }

    #[test]
    fn penrose_identities_random() {
        let mut rng = StdRng::seed_from_u64(11);
        for field in [Field::Real, Field::Complex] {
            for _ in 0..5 {
                let a = random_matrix(&mut rng, field, 5, 3);
                check_penrose(&a, 1e-8);
            }
        }
        // larger sizes, as stated in the module invariants
        let a = random_matrix(&mut rng, Field::Real, 50, 40);
        check_penrose(&a, 1e-8);
    }

    #[test]
    fn hermitian_eig_diagonal_sorted() {
        let d = Matrix::from_real_rows(&[&[3.0, 0.0], &[0.0, 1.0]]);
        let eig = hermitian_eig(&d).unwrap();
        assert!((eig.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert!((eig.eigenvalues[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn hermitian_eig_offdiagonal() {
        let a = Matrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let eig = hermitian_eig(&a).unwrap();
        assert!((eig.eigenvalues[0] + 1.0).abs() < 1e-12);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hermitian_eig_rejects_nonsymmetric() {
        let a = Matrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(hermitian_eig(&a).is_err());
    }

    #[test]
    fn hermitian_eig_reconstruction() {
        let mut rng = StdRng::seed_from_u64(23);
        for field in [Field::Real, Field::Complex] {
            let a0 = random_matrix(&mut rng, field, 6, 6);
            let a = a0.add(&a0.adjoint()).unwrap();
            let eig = hermitian_eig(&a).unwrap();
            let q = &eig.eigenvectors;
            // unitarity
            let qq = q.adjoint().mul(q).unwrap();
            assert!(
                qq.sub(&Matrix::identity(field, 6)).unwrap().frobenius_norm() < 1e-10,
                "eigenvectors not unitary"
            );
            // reconstruction
            let mut lam = Matrix::zeros(field, 6, 6);
            for i in 0..6 {
                lam.set(i, i, Complex64::new(eig.eigenvalues[i], 0.0));
            }
            let rec = q.mul(&lam).unwrap().mul(&q.adjoint()).unwrap();
            assert!(rec.sub(&a).unwrap().frobenius_norm() < 1e-10 * (1.0 + a.frobenius_norm()));
        }
    }

    /// Independent oracle: characteristic polynomial coefficients by
    /// Faddeev-LeVerrier, then eigenvalues as roots via the companion matrix
    /// and nalgebra's general (Schur-based) eigenvalue path.
    #[test]
    fn hermitian_eig_matches_companion_roots() {
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..10 {
            let a0 = random_matrix(&mut rng, Field::Real, 4, 4);
            let a = a0.add(&a0.adjoint()).unwrap();
            let m = a.as_real();
            // Faddeev-LeVerrier: c_k coefficients of λ^n - c1 λ^{n-1} - ...
            let n = 4usize;
            let mut coeffs = vec![1.0f64]; // monic
            let mut mk = DMatrix::<f64>::zeros(n, n);
            let ident = DMatrix::<f64>::identity(n, n);
            for k in 1..=n {
                mk = &m * &mk + &ident * coeffs[k - 1];
                let ck = -(&m * &mk).trace() / k as f64;
                coeffs.push(ck);
            }
            // companion matrix of λ^4 + coeffs[1] λ^3 + ... + coeffs[4]
            let mut comp = DMatrix::<f64>::zeros(n, n);
            for i in 1..n {
                comp[(i, i - 1)] = 1.0;
            }
            for i in 0..n {
                comp[(i, n - 1)] = -coeffs[n - i];
            }
            let mut roots: Vec<f64> = comp.complex_eigenvalues().iter().map(|z| z.re).collect();
            roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let eig = hermitian_eig(&a).unwrap();
            for i in 0..n {
                assert!(
                    (roots[i] - eig.eigenvalues[i]).abs() < 1e-8 * (1.0 + roots[i].abs()),
                    "eigenvalue {i}: companion {} vs symmetric {}",
                    roots[i],
                    eig.eigenvalues[i]
                );
            }
        }
    }

    #[test]
    fn kernel_basis_examples() {
        let a = Matrix::from_real_rows(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 0.0]]);
        let v = kernel_basis(&a, RANK_RTOL).unwrap();
        assert_eq!(v.cols(), 1);
        assert!((v.get(2, 0).norm() - 1.0).abs() < 1e-12);

        let id = Matrix::identity(Field::Real, 4);
        assert_eq!(kernel_basis(&id, RANK_RTOL).unwrap().cols(), 0);

        let d = Matrix::from_real_rows(&[
            &[0.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
        ]);
        let v = kernel_basis(&d, RANK_RTOL).unwrap();
        assert_eq!(v.cols(), 2);
        // spans e1, e2
        for col in 0..2 {
            assert!(v.get(2, col).norm() < 1e-12);
            assert!(v.get(3, col).norm() < 1e-12);
        }
    }

    #[test]
    fn min_singular_value_examples() {
        assert!((min_singular_value(&Matrix::identity(Field::Real, 3)) - 1.0).abs() < 1e-12);
        let a = Matrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
        assert!(min_singular_value(&a) < 1e-14);
        // random orthogonal: QR of a random matrix
        let mut rng = StdRng::seed_from_u64(5);
        let m = random_matrix(&mut rng, Field::Real, 5, 5).as_real();
        let qr = m.qr();
        let q = Matrix::from_real(qr.q());
        assert!((min_singular_value(&q) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn real_embedding_doubles_spectrum() {
        let mut rng = StdRng::seed_from_u64(41);
        let a0 = random_matrix(&mut rng, Field::Complex, 4, 4);
        let a = a0.add(&a0.adjoint()).unwrap();
        let emb = a.real_embedding();
        let mut ev_emb = hermitian_eig(&emb).unwrap().eigenvalues;
        let ev = hermitian_eig(&a).unwrap().eigenvalues;
        let mut doubled: Vec<f64> = ev.iter().flat_map(|&x| [x, x]).collect();
        doubled.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev_emb.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (x, y) in doubled.iter().zip(ev_emb.iter()) {
            assert!((x - y).abs() < 1e-9, "embedding eigenvalue mismatch {x} vs {y}");
        }
    }

    #[test]
    fn cholesky_upper_factor() {
        let a = Matrix::from_real_rows(&[&[4.0, 2.0], &[2.0, 3.0]]);
        let r = a.cholesky_upper().unwrap();
        let back = r.adjoint().mul(&r).unwrap();
        assert!(back.sub(&a).unwrap().frobenius_norm() < 1e-12);
    }
}
