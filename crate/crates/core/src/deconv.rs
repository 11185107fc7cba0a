//! Referenced deconvolution: magnitudes → autocorrelation → quadrant → `M_R⁻¹`.

use std::time::{Duration, Instant};

use ndarray::{s, Array2, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{distance_sq, frobenius_sq};
use crate::references::{apply_mr, apply_mr_inverse, Reference};
use crate::transforms::{autocorrelation_from_magnitudes, Correlation, MagnitudeData};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    /// `‖M_R vec(X̃) - vec(C̃)‖ / ‖C̃‖`; zero up to rounding for a correct solve.
    pub solve_residual: f64,
    /// Largest imaginary part of the recovered autocorrelation relative to its
    /// largest magnitude, a hint of how far the data is from a true `|FT|²`.
    pub autocorrelation_asymmetry: f64,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    /// `X̃`, `n x n`.
    pub estimate: Array2<Complex64>,
    /// `C̃◇`, the cross-correlation quadrant the estimate was solved from.
    pub quadrant: Array2<Complex64>,
    pub diagnostics: Diagnostics,
}

impl RecoveryResult {
    /// Real, nonnegative view of the estimate for display.
    pub fn projected(&self) -> Array2<f64> {
        project_real_nonnegative(self.estimate.view())
    }
}

/// Take the real part and clamp at zero.
pub fn project_real_nonnegative(x: ArrayView2<'_, Complex64>) -> Array2<f64> {
    x.mapv(|z| z.re.max(0.0))
}

/// The `n x n` block of `A_[X,R]` at lags `s1 ∈ [-(n-1), 0]`,
/// `s2 ∈ [-(2n-1), -n]`: the first `n` rows and columns of the array.
/// These samples equal the cross-correlation of `X` with `R` at lags
/// `(s1, s2 + n)`.
pub fn extract_quadrant(a: &Correlation, n: usize) -> Result<Array2<Complex64>> {
    let (r, c) = a.data().dim();
    if n == 0 || (r, c) != (2 * n - 1, 4 * n - 1) {
        return Err(Error::dims(
            format!("{}x{}", 2 * n.max(1) - 1, 4 * n.max(1) - 1),
            format!("{r}x{c}"),
        ));
    }
    Ok(a.data().slice(s![..n, ..n]).to_owned())
}

/// Recover `X` from (possibly noisy) magnitudes of `[X, R]`.
pub fn referenced_deconvolution(y: &MagnitudeData, reference: &Reference) -> Result<RecoveryResult> {
    let start = Instant::now();
    let n = reference.n();
    if y.n() != n {
        return Err(Error::dims(
            format!("magnitude data for n = {n}"),
            format!("n = {}", y.n()),
        ));
    }
    let autocorrelation = autocorrelation_from_magnitudes(y)?;
    let quadrant = extract_quadrant(&autocorrelation, n)?;
    let estimate = apply_mr_inverse(reference, quadrant.view())?;
    let elapsed = start.elapsed();

    let reapplied = apply_mr(reference, estimate.view())?;
    let quadrant_norm = frobenius_sq(quadrant.view()).sqrt();
    let solve_residual = if quadrant_norm > 0.0 {
        distance_sq(reapplied.view(), quadrant.view()).sqrt() / quadrant_norm
    } else {
        0.0
    };
    let peak = autocorrelation.data().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let max_imag_asym = asymmetry(&autocorrelation);
    let autocorrelation_asymmetry = if peak > 0.0 { max_imag_asym / peak } else { 0.0 };

    Ok(RecoveryResult {
        estimate,
        quadrant,
        diagnostics: Diagnostics {
            solve_residual,
            autocorrelation_asymmetry,
            elapsed,
        },
    })
}

// max |A(s) - conj(A(-s))|
fn asymmetry(a: &Correlation) -> f64 {
    let data = a.data();
    let (r, c) = data.dim();
    let mut worst: f64 = 0.0;
    for ((i, j), z) in data.indexed_iter() {
        let mirror = data[[r - 1 - i, c - 1 - j]].conj();
        worst = worst.max((z - mirror).norm());
    }
    worst
}
