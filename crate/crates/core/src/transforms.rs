//! Oversampled 2-D Fourier transforms, magnitude data, and correlations.
//!
//! Arrays are indexed `(t1, t2)` = (row, column). The size `m x m` transform
//! of an `n1 x n2` signal is
//!
//! ```text
//! Z^(k1, k2) = sum_{t1, t2} Z(t1, t2) exp(-2πi (t1 k1 + t2 k2) / m)
//! ```
//!
//! computed by zero-padding to `m x m` and running a fast transform.
//! Correlations are stored with the most negative lag first, so lag `(s1, s2)`
//! lives at array index `(s1 + n1 - 1, s2 + n2 - 1)`.

use std::sync::Arc;

use ndarray::{s, Array2, ArrayView2};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Slack allowed above unit magnitude when validating images.
pub const MAGNITUDE_TOLERANCE: f64 = 1e-12;

/// Smallest admissible detector side for an `n x 2n` composite.
pub fn min_detector_side(n: usize) -> usize {
    4 * n - 1
}

pub(crate) fn check_oversampling(n: usize, m: usize) -> Result<()> {
    let required = min_detector_side(n);
    if m < required {
        return Err(Error::Undersampled { n, m, required });
    }
    Ok(())
}

fn check_finite(data: ArrayView2<'_, Complex64>) -> Result<()> {
    for ((row, col), z) in data.indexed_iter() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::NonFinite { row, col });
        }
    }
    Ok(())
}

/// A complex image whose entries have magnitude at most one.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    data: Array2<Complex64>,
}

impl Image {
    /// Validates that every entry is finite with magnitude `<= 1`.
    pub fn new(data: Array2<Complex64>) -> Result<Self> {
        check_finite(data.view())?;
        for ((row, col), z) in data.indexed_iter() {
            let magnitude = z.norm();
            if magnitude > 1.0 + MAGNITUDE_TOLERANCE {
                return Err(Error::MagnitudeOutOfRange {
                    row,
                    col,
                    magnitude,
                });
            }
        }
        Ok(Image { data })
    }

    /// Skips validation entirely. Meant for synthetic inputs such as
    /// linearity probes that deliberately leave the unit disk.
    pub fn new_unchecked(data: Array2<Complex64>) -> Self {
        Image { data }
    }

    pub fn from_real(data: Array2<f64>) -> Result<Self> {
        Image::new(data.mapv(|v| Complex64::new(v, 0.0)))
    }

    pub fn zeros(n: usize) -> Self {
        Image {
            data: Array2::zeros((n, n)),
        }
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn view(&self) -> ArrayView2<'_, Complex64> {
        self.data.view()
    }

    pub fn into_data(self) -> Array2<Complex64> {
        self.data
    }

    pub fn dim(&self) -> (usize, usize) {
        self.data.dim()
    }

    /// Side length of a square image.
    pub fn side(&self) -> Result<usize> {
        let (r, c) = self.data.dim();
        if r != c {
            return Err(Error::dims("square image", format!("{r}x{c}")));
        }
        Ok(r)
    }
}

/// The `n x 2n` arrangement `[X, R]`: specimen on the left, reference on the right.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeSpecimen {
    data: Array2<Complex64>,
    n: usize,
}

impl CompositeSpecimen {
    pub fn new(specimen: &Image, reference: &Image) -> Result<Self> {
        Self::from_parts(specimen.view(), reference.view())
    }

    pub(crate) fn from_parts(
        specimen: ArrayView2<'_, Complex64>,
        reference: ArrayView2<'_, Complex64>,
    ) -> Result<Self> {
        let (n, c) = specimen.dim();
        if n != c || n == 0 {
            return Err(Error::dims("non-empty square specimen", format!("{n}x{c}")));
        }
        if reference.dim() != (n, n) {
            let (rr, rc) = reference.dim();
            return Err(Error::dims(format!("{n}x{n} reference"), format!("{rr}x{rc}")));
        }
        let mut data = Array2::zeros((n, 2 * n));
        data.slice_mut(s![.., ..n]).assign(&specimen);
        data.slice_mut(s![.., n..]).assign(&reference);
        Ok(CompositeSpecimen { data, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn specimen(&self) -> ArrayView2<'_, Complex64> {
        self.data.slice(s![.., ..self.n])
    }

    pub fn reference(&self) -> ArrayView2<'_, Complex64> {
        self.data.slice(s![.., self.n..])
    }
}

/// Planned forward/inverse transforms for an `rows x cols` grid.
///
/// Both directions are unnormalized; the inverse uses the `+` sign.
pub struct Fft2 {
    rows: usize,
    cols: usize,
    fwd_rows: Arc<dyn Fft<f64>>,
    fwd_cols: Arc<dyn Fft<f64>>,
    inv_rows: Arc<dyn Fft<f64>>,
    inv_cols: Arc<dyn Fft<f64>>,
    transposed: Vec<Complex64>,
}

impl Fft2 {
    pub fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            rows,
            cols,
            fwd_rows: planner.plan_fft_forward(cols),
            fwd_cols: planner.plan_fft_forward(rows),
            inv_rows: planner.plan_fft_inverse(cols),
            inv_cols: planner.plan_fft_inverse(rows),
            transposed: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn forward(&mut self, data: &mut Array2<Complex64>) {
        let (rows, cols) = (self.fwd_rows.clone(), self.fwd_cols.clone());
        self.run(data, rows.as_ref(), cols.as_ref());
    }

    pub fn inverse(&mut self, data: &mut Array2<Complex64>) {
        let (rows, cols) = (self.inv_rows.clone(), self.inv_cols.clone());
        self.run(data, rows.as_ref(), cols.as_ref());
    }

    fn run(&mut self, data: &mut Array2<Complex64>, along_rows: &dyn Fft<f64>, along_cols: &dyn Fft<f64>) {
        assert_eq!(data.dim(), (self.rows, self.cols), "grid shape does not match plan");
        if !data.is_standard_layout() {
            *data = data.as_standard_layout().into_owned();
        }
        let buf = data.as_slice_mut().expect("standard layout");
        along_rows.process(buf);
        for i in 0..self.rows {
            for j in 0..self.cols {
                self.transposed[j * self.rows + i] = buf[i * self.cols + j];
            }
        }
        along_cols.process(&mut self.transposed);
        for i in 0..self.rows {
            for j in 0..self.cols {
                buf[i * self.cols + j] = self.transposed[j * self.rows + i];
            }
        }
    }
}

/// Zero-pad `signal` into the top-left corner of an `m x m` grid.
pub(crate) fn zero_pad(signal: ArrayView2<'_, Complex64>, m: usize) -> Array2<Complex64> {
    let (r, c) = signal.dim();
    let mut grid = Array2::zeros((m, m));
    grid.slice_mut(s![..r, ..c]).assign(&signal);
    grid
}

/// An oversampled transform together with the size of the signal it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    data: Array2<Complex64>,
    source_dims: (usize, usize),
}

impl Spectrum {
    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn source_dims(&self) -> (usize, usize) {
        self.source_dims
    }

    pub fn squared_magnitudes(&self) -> Array2<f64> {
        self.data.mapv(|z| z.norm_sqr())
    }
}

/// Size `m x m` transform of an arbitrary signal with at most `m` rows and columns.
pub fn fourier_transform(signal: ArrayView2<'_, Complex64>, m: usize) -> Result<Spectrum> {
    let (r, c) = signal.dim();
    if r > m || c > m {
        return Err(Error::dims(format!("signal no larger than {m}x{m}"), format!("{r}x{c}")));
    }
    check_finite(signal)?;
    let mut grid = zero_pad(signal, m);
    Fft2::new(m, m).forward(&mut grid);
    Ok(Spectrum {
        data: grid,
        source_dims: (r, c),
    })
}

/// Squared Fourier magnitudes `Y` of an `n x 2n` composite on an `m x m` detector.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeData {
    data: Array2<f64>,
    n: usize,
    nominal: bool,
}

impl MagnitudeData {
    /// Wraps measured or synthetic data. `nominal` marks noiseless `Y`
    /// as opposed to a corrupted `Ỹ`.
    pub fn new(data: Array2<f64>, n: usize, nominal: bool) -> Result<Self> {
        let (r, c) = data.dim();
        if r != c {
            return Err(Error::dims("square magnitude array", format!("{r}x{c}")));
        }
        if n == 0 {
            return Err(Error::dims("specimen side n >= 1", "n = 0"));
        }
        check_oversampling(n, r)?;
        for ((row, col), &value) in data.indexed_iter() {
            if !value.is_finite() {
                return Err(Error::NonFinite { row, col });
            }
            if value < 0.0 {
                return Err(Error::NegativeData { row, col, value });
            }
        }
        Ok(MagnitudeData { data, n, nominal })
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_data(self) -> Array2<f64> {
        self.data
    }

    /// Specimen side; the source composite is `n x 2n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Detector side.
    pub fn m(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_nominal(&self) -> bool {
        self.nominal
    }

    /// `‖Y‖₁`, the total detected energy.
    pub fn l1_norm(&self) -> f64 {
        self.data.sum()
    }
}

/// `Y = |FT([X, R])|²` on an `m x m` grid.
pub fn forward_magnitudes(composite: &CompositeSpecimen, m: usize) -> Result<MagnitudeData> {
    let n = composite.n();
    check_oversampling(n, m)?;
    let spectrum = fourier_transform(composite.data().view(), m)?;
    // |z|² of a finite transform is never negative, so skip re-validation.
    Ok(MagnitudeData {
        data: spectrum.squared_magnitudes(),
        n,
        nominal: true,
    })
}

/// A cross- or auto-correlation over lags `|s1| < n1`, `|s2| < n2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    data: Array2<Complex64>,
}

impl Correlation {
    pub(crate) fn from_array(data: Array2<Complex64>) -> Self {
        debug_assert!(data.nrows() % 2 == 1 && data.ncols() % 2 == 1);
        Correlation { data }
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    /// Largest absolute lag along each axis, `(n1 - 1, n2 - 1)`.
    pub fn max_lag(&self) -> (usize, usize) {
        ((self.data.nrows() - 1) / 2, (self.data.ncols() - 1) / 2)
    }

    pub fn lag(&self, s1: isize, s2: isize) -> Complex64 {
        let (h1, h2) = self.max_lag();
        self.data[[(s1 + h1 as isize) as usize, (s2 + h2 as isize) as usize]]
    }
}

/// Recover the autocorrelation `A_[X,R]` from magnitude data by an inverse
/// transform, unwrapping negative lags `s` from index `m + s`.
pub fn autocorrelation_from_magnitudes(y: &MagnitudeData) -> Result<Correlation> {
    let (n, m) = (y.n(), y.m());
    check_oversampling(n, m)?;
    let mut grid = y.data().mapv(|v| Complex64::new(v, 0.0));
    Fft2::new(m, m).inverse(&mut grid);
    let scale = 1.0 / (m * m) as f64;
    let (h1, h2) = (n as isize - 1, 2 * n as isize - 1);
    let wrap = |s: isize| s.rem_euclid(m as isize) as usize;
    let data = Array2::from_shape_fn((2 * n - 1, 4 * n - 1), |(i, j)| {
        grid[[wrap(i as isize - h1), wrap(j as isize - h2)]] * scale
    });
    Ok(Correlation::from_array(data))
}

/// Direct evaluation of
/// `C(s1, s2) = sum_t X1(t1, t2) conj(X2(t1 - s1, t2 - s2))`
/// with out-of-range samples taken as zero.
pub fn cross_correlate(
    x1: ArrayView2<'_, Complex64>,
    x2: ArrayView2<'_, Complex64>,
) -> Result<Correlation> {
    if x1.dim() != x2.dim() {
        return Err(Error::dims(
            format!("{:?}", x1.dim()),
            format!("{:?}", x2.dim()),
        ));
    }
    let (n1, n2) = x1.dim();
    if n1 == 0 || n2 == 0 {
        return Err(Error::dims("non-empty signals", "empty"));
    }
    let (h1, h2) = (n1 as isize - 1, n2 as isize - 1);
    let mut out = Array2::zeros((2 * n1 - 1, 2 * n2 - 1));
    for ((i, j), c) in out.indexed_iter_mut() {
        let (s1, s2) = (i as isize - h1, j as isize - h2);
        let mut acc = Complex64::new(0.0, 0.0);
        // t - s must stay in range, so t1 ∈ [max(0, s1), min(n1, n1 + s1)).
        for t1 in s1.max(0)..(n1 as isize).min(n1 as isize + s1) {
            for t2 in s2.max(0)..(n2 as isize).min(n2 as isize + s2) {
                acc += x1[[t1 as usize, t2 as usize]]
                    * x2[[(t1 - s1) as usize, (t2 - s2) as usize]].conj();
            }
        }
        *c = acc;
    }
    Ok(Correlation::from_array(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn image_rejects_large_magnitudes() {
        let err = Image::new(array![[c(0.5), c(1.5)]]).unwrap_err();
        assert!(matches!(err, Error::MagnitudeOutOfRange { row: 0, col: 1, .. }));
        assert!(Image::new(array![[c(1.0 + 1e-13)]]).is_ok());
        assert!(Image::new(array![[Complex64::new(f64::NAN, 0.0)]]).is_err());
        // unchecked bypass
        assert_eq!(Image::new_unchecked(array![[c(3.0)]]).dim(), (1, 1));
    }

    #[test]
    fn zero_composite_has_zero_magnitudes() {
        let z = CompositeSpecimen::new(&Image::zeros(3), &Image::zeros(3)).unwrap();
        let y = forward_magnitudes(&z, 13).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));
        let a = autocorrelation_from_magnitudes(&y).unwrap();
        assert!(a.data().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn impulse_has_flat_spectrum_and_impulse_autocorrelation() {
        let mut r = Array2::zeros((2, 2));
        r[[1, 1]] = c(1.0);
        let z = CompositeSpecimen::new(&Image::zeros(2), &Image::new(r).unwrap()).unwrap();
        let y = forward_magnitudes(&z, 8).unwrap();
        for v in y.data() {
            assert!((v - 1.0).abs() < 1e-14);
        }
        let a = autocorrelation_from_magnitudes(&y).unwrap();
        assert_eq!(a.data().dim(), (3, 7));
        for s1 in -1..=1 {
            for s2 in -3..=3 {
                let expected = if (s1, s2) == (0, 0) { 1.0 } else { 0.0 };
                assert!((a.lag(s1, s2) - c(expected)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn undersampled_is_rejected() {
        let z = CompositeSpecimen::new(&Image::zeros(3), &Image::zeros(3)).unwrap();
        assert!(matches!(
            forward_magnitudes(&z, 10),
            Err(Error::Undersampled { n: 3, m: 10, required: 11 })
        ));
        assert!(MagnitudeData::new(Array2::zeros((10, 10)), 3, true).is_err());
    }

    #[test]
    fn magnitude_data_rejects_negative_entries() {
        let mut y = Array2::zeros((7, 7));
        y[[2, 3]] = -1e-3;
        assert!(matches!(
            MagnitudeData::new(y, 2, false),
            Err(Error::NegativeData { row: 2, col: 3, .. })
        ));
    }

    #[test]
    fn cross_correlation_of_ones() {
        let ones = Array2::from_elem((2, 2), c(1.0));
        let cc = cross_correlate(ones.view(), ones.view()).unwrap();
        let expected = array![[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]];
        for (got, want) in cc.data().iter().zip(expected.iter()) {
            assert_eq!(*got, c(*want));
        }
    }

    #[test]
    fn cross_correlation_of_impulses() {
        let mut e = Array2::zeros((3, 3));
        e[[0, 0]] = c(1.0);
        let cc = cross_correlate(e.view(), e.view()).unwrap();
        assert_eq!(cc.lag(0, 0), c(1.0));
        assert_eq!(cc.data().iter().filter(|z| z.norm() > 0.0).count(), 1);
    }

    #[test]
    fn cross_correlation_dimension_mismatch() {
        let a = Array2::<Complex64>::zeros((2, 2));
        let b = Array2::<Complex64>::zeros((2, 3));
        assert!(matches!(
            cross_correlate(a.view(), b.view()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn composite_layout() {
        let x = Image::new(array![[c(0.1), c(0.2)], [c(0.3), c(0.4)]]).unwrap();
        let r = Image::new(array![[c(0.5), c(0.6)], [c(0.7), c(0.8)]]).unwrap();
        let z = CompositeSpecimen::new(&x, &r).unwrap();
        assert_eq!(z.data().row(1).to_vec(), vec![c(0.3), c(0.4), c(0.7), c(0.8)]);
        assert_eq!(z.specimen(), x.view());
        assert_eq!(z.reference(), r.view());
    }
}
