//! Brute-force oracles. Nothing here calls the fast paths under test.
#![allow(dead_code)]

use std::f64::consts::TAU;

use holoref::{Image, Reference};
use ndarray::{s, Array2, ArrayView2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type C = Complex64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_disk(rng: &mut ChaCha8Rng) -> C {
    C::from_polar(rng.random::<f64>().sqrt(), rng.random::<f64>() * TAU)
}

pub fn random_image(n: usize, rng: &mut ChaCha8Rng) -> Image {
    Image::new(Array2::from_shape_fn((n, n), |_| unit_disk(rng))).unwrap()
}

/// Custom reference with a corner of magnitude at least 0.1.
pub fn random_reference(n: usize, rng: &mut ChaCha8Rng) -> Reference {
    let mut v = Array2::from_shape_fn((n, n), |_| unit_disk(rng));
    let c = v[[n - 1, n - 1]];
    if c.norm() < 0.1 {
        v[[n - 1, n - 1]] = C::from_polar(0.1 + 0.9 * rng.random::<f64>(), c.arg());
    }
    Reference::custom(v).unwrap()
}

/// `Ẑ(k1, k2) = Σ Z(t1, t2) e^{-2πi (t1 k1 + t2 k2)/m}` by direct summation.
pub fn dft_direct(z: ArrayView2<'_, C>, m: usize) -> Array2<C> {
    let mut out = Array2::zeros((m, m));
    for k1 in 0..m {
        for k2 in 0..m {
            let mut acc = C::new(0.0, 0.0);
            for ((t1, t2), v) in z.indexed_iter() {
                let phase = -TAU * (((t1 * k1) % m) as f64 + ((t2 * k2) % m) as f64) / m as f64;
                acc += v * C::from_polar(1.0, phase);
            }
            out[[k1, k2]] = acc;
        }
    }
    out
}

/// `[X, R]` side by side.
pub fn composite(x: ArrayView2<'_, C>, r: ArrayView2<'_, C>) -> Array2<C> {
    let n = x.nrows();
    let mut z = Array2::zeros((n, 2 * n));
    z.slice_mut(s![.., ..n]).assign(&x);
    z.slice_mut(s![.., n..]).assign(&r);
    z
}

/// `A(s) = Σ_t Z(t) conj(Z(t - s))`, lag `s` stored at `s + (dims - 1)`.
pub fn autocorr_direct(z: ArrayView2<'_, C>) -> Array2<C> {
    let (a, b) = z.dim();
    let mut out = Array2::zeros((2 * a - 1, 2 * b - 1));
    for s1 in -(a as isize - 1)..a as isize {
        for s2 in -(b as isize - 1)..b as isize {
            let mut acc = C::new(0.0, 0.0);
            for t1 in 0..a as isize {
                for t2 in 0..b as isize {
                    let (u1, u2) = (t1 - s1, t2 - s2);
                    if u1 >= 0 && u1 < a as isize && u2 >= 0 && u2 < b as isize {
                        acc += z[[t1 as usize, t2 as usize]] * z[[u1 as usize, u2 as usize]].conj();
                    }
                }
            }
            out[[(s1 + a as isize - 1) as usize, (s2 + b as isize - 1) as usize]] = acc;
        }
    }
    out
}

/// Top-left `n x n` block of the direct autocorrelation of `[X, R]`.
pub fn quadrant_direct(x: ArrayView2<'_, C>, r: ArrayView2<'_, C>) -> Array2<C> {
    let n = x.nrows();
    autocorr_direct(composite(x, r).view()).slice(s![..n, ..n]).to_owned()
}

pub fn vec_col(a: ArrayView2<'_, C>) -> Vec<C> {
    a.t().iter().copied().collect()
}

pub fn unvec_col(v: &[C], rows: usize, cols: usize) -> Array2<C> {
    Array2::from_shape_fn((rows, cols), |(i, j)| v[i + rows * j])
}

/// `M_R` by probing the direct autocorrelation with unit specimens.
pub fn mr_by_probing(r: ArrayView2<'_, C>) -> Array2<C> {
    let n = r.nrows();
    let mut m = Array2::zeros((n * n, n * n));
    for t2 in 0..n {
        for t1 in 0..n {
            let mut e = Array2::zeros((n, n));
            e[[t1, t2]] = C::new(1.0, 0.0);
            let col = vec_col(quadrant_direct(e.view(), r).view());
            for (row, v) in col.into_iter().enumerate() {
                m[[row, t1 + n * t2]] = v;
            }
        }
    }
    m
}

/// Solve `L x = b` for lower-triangular `L` by textbook forward substitution.
pub fn forward_substitute(l: ArrayView2<'_, C>, b: &[C]) -> Vec<C> {
    let mut x = vec![C::new(0.0, 0.0); b.len()];
    for i in 0..b.len() {
        let mut acc = b[i];
        for k in 0..i {
            acc -= l[[i, k]] * x[k];
        }
        x[i] = acc / l[[i, i]];
    }
    x
}

pub fn invert_lower(l: ArrayView2<'_, C>) -> Array2<C> {
    let d = l.nrows();
    let mut inv = Array2::zeros((d, d));
    for j in 0..d {
        let mut e = vec![C::new(0.0, 0.0); d];
        e[j] = C::new(1.0, 0.0);
        for (i, v) in forward_substitute(l, &e).into_iter().enumerate() {
            inv[[i, j]] = v;
        }
    }
    inv
}

/// `(1/m²) M_R⁻¹ (B ⊗ A)` with `A(i, k) = e^{2πi k (i-(n-1))/m}` and
/// `B(j, k) = e^{2πi k (j-(2n-1))/m}`, assembled from explicit matrices.
pub fn transfer_oracle(r: ArrayView2<'_, C>, m: usize) -> Array2<C> {
    let n = r.nrows();
    let lag_row = |i: usize, offset: isize, k: usize| {
        let s = i as isize - offset;
        C::from_polar(1.0, TAU * (s * k as isize).rem_euclid(m as isize) as f64 / m as f64)
    };
    let a = Array2::from_shape_fn((n, m), |(i, k)| lag_row(i, n as isize - 1, k));
    let b = Array2::from_shape_fn((n, m), |(j, k)| lag_row(j, 2 * n as isize - 1, k));
    let mut kron = Array2::zeros((n * n, m * m));
    for j in 0..n {
        for k2 in 0..m {
            for i in 0..n {
                for k1 in 0..m {
                    kron[[i + n * j, k1 + m * k2]] = b[[j, k2]] * a[[i, k1]];
                }
            }
        }
    }
    let minv = invert_lower(mr_by_probing(r).view());
    minv.dot(&kron) / C::new((m * m) as f64, 0.0)
}

/// `S(k1, k2) = ‖T(:, k1 + m k2)‖²`.
pub fn column_norms_oracle(t: ArrayView2<'_, C>, m: usize) -> Array2<f64> {
    Array2::from_shape_fn((m, m), |(k1, k2)| {
        t.column(k1 + m * k2).iter().map(|z| z.norm_sqr()).sum()
    })
}

pub fn max_abs_diff(a: ArrayView2<'_, C>, b: ArrayView2<'_, C>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn max_rel_diff(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs() / y.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

pub fn rel_err(est: ArrayView2<'_, C>, truth: ArrayView2<'_, C>) -> f64 {
    let num: f64 = est.iter().zip(truth.iter()).map(|(a, b)| (a - b).norm_sqr()).sum();
    let den: f64 = truth.iter().map(|z| z.norm_sqr()).sum();
    num / den
}

/// Random real transmission mask with the corner pixel fully open: binary
/// when `binary`, otherwise graded uniform in `[0, 1]`.
pub fn random_mask(n: usize, binary: bool, rng: &mut ChaCha8Rng) -> Reference {
    let mut v = Array2::from_shape_fn((n, n), |_| {
        let u = rng.random::<f64>();
        C::new(if binary { (u < 0.5) as u8 as f64 } else { u }, 0.0)
    });
    v[[n - 1, n - 1]] = C::new(1.0, 0.0);
    Reference::custom(v).unwrap()
}
