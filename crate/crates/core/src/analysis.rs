//! Reference scaling factors and expected recovery error under shot noise.
//!
//! Deconvolution is the linear map `vec(X̃) = T_R vec(Ỹ)` with
//!
//! ```text
//! T_R = (1/m²) M_R⁻¹ [(P2 F*_RA) ⊗ (P1 F*_LA)]
//! ```
//!
//! and for independent Poisson pixels the expected squared error is
//! `(‖Y‖₁ / N_p) ⟨S_R, Y⟩` where `S_R(k1, k2)` is the squared norm of the
//! column of `T_R` that multiplies `Y(k1, k2)`. With columnwise `vec` that
//! is column `k1 + m·k2`; `k1` is the row frequency, conjugate to `t1`.

use std::f64::consts::TAU;

use ndarray::{s, Array2, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{distance_sq, frobenius_sq, mat_columnwise};
use crate::noise::PhotonBudget;
use crate::references::{apply_mr_inverse, Reference, ReferenceKind};
use crate::transforms::{check_oversampling, Fft2, MagnitudeData};

/// Largest `n` accepted by [`scaling_factor_general`].
pub const GENERAL_LIMIT: usize = 64;

/// Largest number of entries materialized by [`transfer_matrix`] and
/// [`poisson_covariance`].
pub const DENSE_ENTRY_LIMIT: usize = 1 << 22;

/// Per-frequency error weights `S_R` on the `m x m` detector grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFactor {
    data: Array2<f64>,
    kind: ReferenceKind,
    n: usize,
}

impl ScalingFactor {
    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn kind(&self) -> ReferenceKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.data.nrows()
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `1/m⁴`, the floor no reference with unit-bounded entries can beat.
    pub fn lower_bound(&self) -> f64 {
        (self.m() as f64).powi(-4)
    }

    /// Cross-sections through the origin: `(S(k, 0), S(0, k))` for `k` in `0..m`.
    pub fn cross_sections(&self) -> (Vec<f64>, Vec<f64>) {
        (self.data.column(0).to_vec(), self.data.row(0).to_vec())
    }
}

/// `1 + 2(n-1)(1 - cos(2πk/m))`, the squared norm of a differenced unit phasor column.
pub fn frequency_bracket(n: usize, m: usize, k: usize) -> f64 {
    1.0 + 2.0 * (n as f64 - 1.0) * (1.0 - (TAU * k as f64 / m as f64).cos())
}

/// Closed forms for the special references:
///
/// * pinhole: `n² / m⁴`
/// * slit: `n · b(k1) / m⁴`
/// * block: `b(k1) · b(k2) / m⁴`
///
/// with `b` the [`frequency_bracket`]. The slit varies along `k1` because
/// its difference operator acts down the columns (along `t1`).
pub fn scaling_factor_closed_form(kind: ReferenceKind, n: usize, m: usize) -> Result<ScalingFactor> {
    if n == 0 {
        return Err(Error::dims("n >= 1", "n = 0"));
    }
    check_oversampling(n, m)?;
    let scale = (m as f64).powi(-4);
    let nf = n as f64;
    let data = match kind {
        ReferenceKind::Pinhole => Array2::from_elem((m, m), nf * nf * scale),
        ReferenceKind::Slit => {
            Array2::from_shape_fn((m, m), |(k1, _)| nf * frequency_bracket(n, m, k1) * scale)
        }
        ReferenceKind::Block => Array2::from_shape_fn((m, m), |(k1, k2)| {
            frequency_bracket(n, m, k1) * frequency_bracket(n, m, k2) * scale
        }),
        ReferenceKind::Custom => {
            return Err(Error::Unsupported(
                "no closed form for custom references; use the general scaling factor".into(),
            ))
        }
    };
    Ok(ScalingFactor { data, kind, n })
}

/// `S_R` for any reference.
///
/// `M_R⁻¹` is itself a causal 2-D convolution with kernel `K = M_R⁻¹ e₀`, so
/// row `(i, j)` of `M_R⁻¹` is `K` truncated to `[0, i] x [0, j]` and reversed.
/// Summing the autocorrelations of those rows gives the index-difference
/// collapse `h(d) = Σ_{q-p=d} (M_R⁻* M_R⁻¹)[p, q]` on the `(2n-1)²` lag grid,
/// and one `m x m` transform of `h` yields every `S_R(k1, k2)`.
pub fn scaling_factor_general(reference: &Reference, m: usize) -> Result<ScalingFactor> {
    let n = reference.n();
    if n > GENERAL_LIMIT {
        return Err(Error::TooLarge {
            what: "general scaling factor (use the closed forms or a smaller n)",
            n,
            limit: GENERAL_LIMIT,
        });
    }
    check_oversampling(n, m)?;

    let mut impulse = Array2::zeros((n, n));
    impulse[[0, 0]] = Complex64::new(1.0, 0.0);
    let kernel = apply_mr_inverse(reference, impulse.view())?;

    // Accumulate Σ_rows |FFT(row)|² on a grid wide enough for lags up to ±(n-1).
    let side = 2 * n;
    let mut plan = Fft2::new(side, side);
    let mut power = Array2::<f64>::zeros((side, side));
    let mut grid = Array2::<Complex64>::zeros((side, side));
    for i in 0..n {
        for j in 0..n {
            grid.fill(Complex64::new(0.0, 0.0));
            grid.slice_mut(s![..=i, ..=j]).assign(&kernel.slice(s![..=i, ..=j]));
            plan.forward(&mut grid);
            power.zip_mut_with(&grid, |p, z| *p += z.norm_sqr());
        }
    }
    let mut lags = power.mapv(|p| Complex64::new(p, 0.0));
    plan.inverse(&mut lags);
    let norm = 1.0 / (side * side) as f64;

    // h(d) for |d| < n, moved onto the m x m grid at d mod m.
    let mut collapsed = Array2::<Complex64>::zeros((m, m));
    let reach = n as isize - 1;
    for d1 in -reach..=reach {
        for d2 in -reach..=reach {
            let src = [d1.rem_euclid(side as isize) as usize, d2.rem_euclid(side as isize) as usize];
            let dst = [d1.rem_euclid(m as isize) as usize, d2.rem_euclid(m as isize) as usize];
            collapsed[dst] = lags[src] * norm;
        }
    }
    Fft2::new(m, m).forward(&mut collapsed);

    let scale = (m as f64).powi(-4);
    let peak = collapsed.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    let worst_imag = collapsed.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    assert!(
        worst_imag <= 1e-8 * peak.max(f64::MIN_POSITIVE),
        "scaling factor has imaginary residue {worst_imag:e} against peak {peak:e}"
    );
    Ok(ScalingFactor {
        data: collapsed.mapv(|z| z.re * scale),
        kind: reference.kind(),
        n,
    })
}

/// Dense `T_R` (`n² x m²`), columns ordered `k1 + m·k2`. Small instances only.
pub fn transfer_matrix(reference: &Reference, m: usize) -> Result<Array2<Complex64>> {
    let n = reference.n();
    check_oversampling(n, m)?;
    let entries = n * n * m * m;
    if entries > DENSE_ENTRY_LIMIT {
        return Err(Error::TooLarge {
            what: "dense transfer matrix",
            n,
            limit: n,
        });
    }
    let inv_m2 = 1.0 / (m * m) as f64;
    let mut t = Array2::zeros((n * n, m * m));
    let mut column = Array2::<Complex64>::zeros((n, n));
    for k2 in 0..m {
        for k1 in 0..m {
            for ((i, j), v) in column.indexed_iter_mut() {
                let s1 = i as f64 - (n as f64 - 1.0);
                let s2 = j as f64 - (2.0 * n as f64 - 1.0);
                let phase = TAU * (k1 as f64 * s1 + k2 as f64 * s2) / m as f64;
                *v = Complex64::from_polar(inv_m2, phase);
            }
            let solved = apply_mr_inverse(reference, column.view())?;
            let k = k1 + m * k2;
            for (p, v) in solved.t().iter().enumerate() {
                t[[p, k]] = *v;
            }
        }
    }
    Ok(t)
}

/// `(‖Y‖₁ / N_p) ⟨S_R, Y⟩`.
pub fn expected_squared_error(
    scaling: &ScalingFactor,
    y: &MagnitudeData,
    budget: &PhotonBudget,
) -> Result<f64> {
    if scaling.m() != y.m() || budget.detector_side() != y.m() {
        return Err(Error::dims(
            format!("m = {}", y.m()),
            format!("S_R m = {}, budget m = {}", scaling.m(), budget.detector_side()),
        ));
    }
    let weighted: f64 = scaling.data().iter().zip(y.data().iter()).map(|(s, v)| s * v).sum();
    Ok(y.l1_norm() / budget.total_photons() * weighted)
}

/// `‖estimate - truth‖²_F / ‖truth‖²_F`.
pub fn relative_error(
    estimate: ArrayView2<'_, Complex64>,
    truth: ArrayView2<'_, Complex64>,
) -> Result<f64> {
    if estimate.dim() != truth.dim() {
        return Err(Error::dims(format!("{:?}", truth.dim()), format!("{:?}", estimate.dim())));
    }
    let denom = frobenius_sq(truth);
    if denom == 0.0 {
        return Err(Error::ZeroTruth);
    }
    Ok(distance_sq(estimate, truth) / denom)
}

/// `(‖Y‖₁ / N_p) diag(vec(Y))`, the covariance of `vec(Ỹ)` under shot noise.
pub fn poisson_covariance(y: &MagnitudeData, budget: &PhotonBudget) -> Result<Array2<Complex64>> {
    let size = y.m() * y.m();
    if size * size > DENSE_ENTRY_LIMIT {
        return Err(Error::TooLarge {
            what: "dense covariance",
            n: y.n(),
            limit: y.n(),
        });
    }
    let scale = y.l1_norm() / budget.total_photons();
    let mut cov = Array2::zeros((size, size));
    for (idx, v) in y.data().t().iter().enumerate() {
        cov[[idx, idx]] = Complex64::new(scale * v, 0.0);
    }
    Ok(cov)
}

/// `⟨T*T, Σ⟩ = tr(T*T Σ*)` for a noise covariance `Σ` of `vec(Ỹ)`.
pub fn expected_error_from_covariance(
    transfer: ArrayView2<'_, Complex64>,
    covariance: ArrayView2<'_, Complex64>,
) -> Result<f64> {
    let cols = transfer.ncols();
    if covariance.dim() != (cols, cols) {
        return Err(Error::dims(format!("{cols}x{cols} covariance"), format!("{:?}", covariance.dim())));
    }
    let gram = transfer.t().mapv(|z| z.conj()).dot(&transfer);
    let inner: Complex64 = gram.iter().zip(covariance.iter()).map(|(g, c)| g * c.conj()).sum();
    Ok(inner.re)
}

/// Squared recovery errors from repeated noisy trials next to the prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub kind: ReferenceKind,
    pub budget: PhotonBudget,
    pub expected_sq_error: f64,
    pub empirical_sq_errors: Vec<f64>,
    /// `‖X‖²_F`, the normalizer for the relative versions.
    pub truth_norm_sq: f64,
}

impl ErrorReport {
    pub fn expected_relative(&self) -> f64 {
        self.expected_sq_error / self.truth_norm_sq
    }

    pub fn empirical_relative(&self) -> Vec<f64> {
        self.empirical_sq_errors.iter().map(|e| e / self.truth_norm_sq).collect()
    }

    pub fn mean(&self) -> f64 {
        mean(&self.empirical_sq_errors)
    }

    pub fn std(&self) -> f64 {
        sample_std(&self.empirical_sq_errors)
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (`n - 1` denominator); zero for fewer than two values.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mu = mean(values);
    let ss: f64 = values.iter().map(|v| (v - mu).powi(2)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Reshape a columnwise-ordered `m²` vector of weights to `m x m`.
pub(crate) fn reshape_weights(v: &[f64], m: usize) -> Array2<f64> {
    mat_columnwise(v, m, m)
}

/// Column norms of a dense transfer matrix reshaped onto the detector grid.
pub fn column_norms(transfer: ArrayView2<'_, Complex64>, m: usize) -> Array2<f64> {
    let norms: Vec<f64> = transfer
        .columns()
        .into_iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum())
        .collect();
    reshape_weights(&norms, m)
}
