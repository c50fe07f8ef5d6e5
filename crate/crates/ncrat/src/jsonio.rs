//! Shared JSON encoding for matrices, vectors and points.
//!
//! Scalars over ℝ are plain numbers; over ℂ they are `[re, im]` pairs.
//! Matrices are flat row-major arrays of scalars.

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::linalg::{Field, Matrix};
use crate::{Error, Result};

pub fn scalar_to_value(field: Field, z: Complex64) -> Value {
    match field {
        Field::Real => json!(z.re),
        Field::Complex => json!([z.re, z.im]),
    }
}

pub fn scalar_from_value(field: Field, v: &Value) -> Result<Complex64> {
    match field {
        Field::Real => v
            .as_f64()
            .map(|x| Complex64::new(x, 0.0))
            .ok_or_else(|| Error::Json(format!("expected a real number, got {v}"))),
        Field::Complex => {
            let arr = v
                .as_array()
                .ok_or_else(|| Error::Json(format!("expected [re, im], got {v}")))?;
            if arr.len() != 2 {
                return Err(Error::Json(format!("expected [re, im], got {v}")));
            }
            let re = arr[0]
                .as_f64()
                .ok_or_else(|| Error::Json("non-numeric real part".into()))?;
            let im = arr[1]
                .as_f64()
                .ok_or_else(|| Error::Json("non-numeric imaginary part".into()))?;
            Ok(Complex64::new(re, im))
        }
    }
}

pub fn matrix_to_value(m: &Matrix) -> Value {
    let mut entries = Vec::with_capacity(m.rows() * m.cols());
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            entries.push(scalar_to_value(m.field(), m.get(i, j)));
        }
    }
    Value::Array(entries)
}

pub fn matrix_from_value(field: Field, rows: usize, cols: usize, v: &Value) -> Result<Matrix> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::Json("expected a flat matrix array".into()))?;
    if arr.len() != rows * cols {
        return Err(Error::Json(format!(
            "matrix array has {} entries, expected {}",
            arr.len(),
            rows * cols
        )));
    }
    let entries = arr
        .iter()
        .map(|e| scalar_from_value(field, e))
        .collect::<Result<Vec<_>>>()?;
    Matrix::from_rows_vec(field, rows, cols, entries)
}

pub fn vector_to_value(m: &Matrix) -> Value {
    matrix_to_value(m)
}

pub fn vector_from_value(field: Field, len: usize, v: &Value) -> Result<Matrix> {
    matrix_from_value(field, len, 1, v)
}

pub fn get_usize(v: &Value, key: &str) -> Result<usize> {
    v.get(key)
        .and_then(Value::as_u64)
        .map(|x| x as usize)
        .ok_or_else(|| Error::Json(format!("missing or invalid `{key}`")))
}

pub fn get_field(v: &Value, key: &str) -> Result<Field> {
    let tag = v
        .get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Json(format!("missing or invalid `{key}`")))?;
    Field::from_str_tag(tag)
}
