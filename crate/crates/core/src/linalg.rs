//! Small dense helpers shared by the structured-matrix and analysis code.
//!
//! Vectorization is columnwise everywhere: entry `(i, j)` of an `r x c`
//! matrix lands at position `i + r * j`.

use ndarray::{Array1, Array2, ArrayView2};
use num_complex::Complex64;

pub fn vec_columnwise<T: Clone>(a: ArrayView2<'_, T>) -> Array1<T> {
    a.t().iter().cloned().collect()
}

pub fn mat_columnwise<T: Clone>(v: &[T], rows: usize, cols: usize) -> Array2<T> {
    assert_eq!(v.len(), rows * cols, "vector length does not match shape");
    Array2::from_shape_fn((rows, cols), |(i, j)| v[i + rows * j].clone())
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: ArrayView2<'_, Complex64>, b: ArrayView2<'_, Complex64>) -> Array2<Complex64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    Array2::from_shape_fn((ar * br, ac * bc), |(i, j)| {
        a[[i / br, j / bc]] * b[[i % br, j % bc]]
    })
}

pub fn frobenius_sq(a: ArrayView2<'_, Complex64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn distance_sq(a: ArrayView2<'_, Complex64>, b: ArrayView2<'_, Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm_sqr()).sum()
}

pub fn to_complex(a: ArrayView2<'_, f64>) -> Array2<Complex64> {
    a.mapv(|v| Complex64::new(v, 0.0))
}
