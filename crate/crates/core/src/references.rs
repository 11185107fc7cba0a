//! Reference shapes and the lower-triangular system they induce.
//!
//! For a reference `R` the top-left `n x n` quadrant of the cross-correlation
//! of `[X, R]` is linear in `X`:
//!
//! ```text
//! C(i, j) = sum_{t1 <= i, t2 <= j} X(t1, t2) · conj(R(n-1-(i-t1), n-1-(j-t2)))
//! ```
//!
//! i.e. `vec(C) = M_R vec(X)` with `M_R` lower triangular and block Toeplitz in
//! the columnwise ordering. Its diagonal is `conj(R(n-1, n-1))`, so it is
//! invertible exactly when that corner is nonzero.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transforms::Image;

/// Dense `n² x n²` materialization is refused above this side length.
pub const DENSE_LIMIT: usize = 128;

/// Corner magnitude below which a custom reference is flagged as ill-conditioned.
pub const CONDITIONING_WARN: f64 = 1e-8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceKind {
    Pinhole,
    Slit,
    Block,
    Custom,
}

impl ReferenceKind {
    pub const SPECIAL: [ReferenceKind; 3] =
        [ReferenceKind::Pinhole, ReferenceKind::Slit, ReferenceKind::Block];

    pub fn name(self) -> &'static str {
        match self {
            ReferenceKind::Pinhole => "pinhole",
            ReferenceKind::Slit => "slit",
            ReferenceKind::Block => "block",
            ReferenceKind::Custom => "custom",
        }
    }
}

impl std::fmt::Display for ReferenceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ReferenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pinhole" => Ok(ReferenceKind::Pinhole),
            "slit" => Ok(ReferenceKind::Slit),
            "block" => Ok(ReferenceKind::Block),
            "custom" => Ok(ReferenceKind::Custom),
            other => Err(Error::Config(format!("unknown reference kind `{other}`"))),
        }
    }
}

/// A materialized `n x n` reference satisfying the separation condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    kind: ReferenceKind,
    values: Array2<Complex64>,
}

impl Reference {
    /// Single unit pixel at `(n-1, n-1)`.
    pub fn pinhole(n: usize) -> Result<Self> {
        check_side(n)?;
        let mut values = Array2::zeros((n, n));
        values[[n - 1, n - 1]] = ONE;
        Ok(Reference {
            kind: ReferenceKind::Pinhole,
            values,
        })
    }

    /// Last column all ones.
    pub fn slit(n: usize) -> Result<Self> {
        check_side(n)?;
        let mut values = Array2::zeros((n, n));
        values.column_mut(n - 1).fill(ONE);
        Ok(Reference {
            kind: ReferenceKind::Slit,
            values,
        })
    }

    /// All ones.
    pub fn block(n: usize) -> Result<Self> {
        check_side(n)?;
        Ok(Reference {
            kind: ReferenceKind::Block,
            values: Array2::from_elem((n, n), ONE),
        })
    }

    pub fn custom(values: Array2<Complex64>) -> Result<Self> {
        let image = Image::new(values)?;
        let n = image.side()?;
        check_side(n)?;
        let corner = image.data()[[n - 1, n - 1]];
        if corner == ZERO {
            return Err(Error::SeparationViolated);
        }
        if corner.norm() < CONDITIONING_WARN {
            log::warn!(
                "reference corner |R(n-1, n-1)| = {:e} is tiny; deconvolution will be ill-conditioned",
                corner.norm()
            );
        }
        Ok(Reference {
            kind: ReferenceKind::Custom,
            values: image.into_data(),
        })
    }

    pub fn kind(&self) -> ReferenceKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    pub fn to_image(&self) -> Image {
        Image::new_unchecked(self.values.clone())
    }

    /// `conj(R(n-1, n-1))`, the diagonal of `M_R`.
    pub fn diagonal(&self) -> Complex64 {
        let n = self.n();
        self.values[[n - 1, n - 1]].conj()
    }

    /// Entry of `M_R` coupling quadrant pixel `(i, j)` to specimen pixel
    /// `(t1, t2)`; zero unless `t1 <= i` and `t2 <= j`.
    fn weight(&self, di: usize, dj: usize) -> Complex64 {
        let n = self.n();
        self.values[[n - 1 - di, n - 1 - dj]].conj()
    }
}

fn check_side(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::dims("reference side n >= 1", "n = 0"));
    }
    Ok(())
}

/// Build a reference of the given kind. `custom` is required for, and only
/// read by, [`ReferenceKind::Custom`].
pub fn make_reference(
    kind: ReferenceKind,
    n: usize,
    custom: Option<Array2<Complex64>>,
) -> Result<Reference> {
    match kind {
        ReferenceKind::Pinhole => Reference::pinhole(n),
        ReferenceKind::Slit => Reference::slit(n),
        ReferenceKind::Block => Reference::block(n),
        ReferenceKind::Custom => {
            let values = custom
                .ok_or_else(|| Error::Config("custom reference requires values".into()))?;
            if values.dim() != (n, n) {
                let (r, c) = values.dim();
                return Err(Error::dims(format!("{n}x{n}"), format!("{r}x{c}")));
            }
            Reference::custom(values)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    /// `I_{n²}` (pinhole).
    Identity,
    /// `I_n ⊗ 1_L` (slit).
    KroneckerLowerOnes,
    /// `1_L ⊗ 1_L` (block).
    KroneckerLowerOnesBoth,
    GeneralLowerTriangular,
}

/// Dense `M_R` with a tag recording which closed form it has.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredMatrix {
    data: Array2<Complex64>,
    structure: Structure,
}

impl StructuredMatrix {
    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    /// Forward substitution on the dense matrix.
    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let size = self.dim();
        if rhs.len() != size {
            return Err(Error::dims(format!("length {size}"), format!("length {}", rhs.len())));
        }
        let mut x = rhs.to_vec();
        for i in 0..size {
            let diag = self.data[[i, i]];
            if diag == ZERO {
                return Err(Error::SeparationViolated);
            }
            let row = self.data.row(i);
            let mut acc = x[i];
            for (k, xk) in x.iter().enumerate().take(i) {
                acc -= row[k] * xk;
            }
            x[i] = acc / diag;
        }
        Ok(x)
    }
}

/// Materialize `M_R` so that `vec(C) = M_R vec(X)` with columnwise `vec`.
pub fn build_mr(reference: &Reference) -> Result<StructuredMatrix> {
    let n = reference.n();
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge {
            what: "dense M_R",
            n,
            limit: DENSE_LIMIT,
        });
    }
    let mut data = Array2::zeros((n * n, n * n));
    for j in 0..n {
        for i in 0..n {
            let row = i + n * j;
            for t2 in 0..=j {
                for t1 in 0..=i {
                    data[[row, t1 + n * t2]] = reference.weight(i - t1, j - t2);
                }
            }
        }
    }
    let structure = match reference.kind() {
        ReferenceKind::Pinhole => Structure::Identity,
        ReferenceKind::Slit => Structure::KroneckerLowerOnes,
        ReferenceKind::Block => Structure::KroneckerLowerOnesBoth,
        ReferenceKind::Custom => Structure::GeneralLowerTriangular,
    };
    Ok(StructuredMatrix { data, structure })
}

/// `1_L`: ones on and below the diagonal.
pub fn lower_ones(n: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, n), |(i, j)| if j <= i { 1.0 } else { 0.0 })
}

/// First-order difference matrix `D_n`, the exact inverse of `1_L`:
/// unit diagonal and `-1` on the first subdiagonal.
pub fn difference_matrix(n: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            1.0
        } else if i == j + 1 {
            -1.0
        } else {
            0.0
        }
    })
}

fn check_square(c: ArrayView2<'_, Complex64>, n: usize) -> Result<()> {
    if c.dim() != (n, n) {
        let (r, k) = c.dim();
        return Err(Error::dims(format!("{n}x{n}"), format!("{r}x{k}")));
    }
    Ok(())
}

/// `mat(M_R vec(X))` without forming `M_R`.
pub fn apply_mr(reference: &Reference, x: ArrayView2<'_, Complex64>) -> Result<Array2<Complex64>> {
    let n = reference.n();
    check_square(x, n)?;
    let mut out = x.to_owned();
    match reference.kind() {
        ReferenceKind::Pinhole => {}
        ReferenceKind::Slit => cumulative_rows(&mut out),
        ReferenceKind::Block => {
            cumulative_rows(&mut out);
            cumulative_cols(&mut out);
        }
        ReferenceKind::Custom => {
            for ((i, j), c) in out.indexed_iter_mut() {
                let mut acc = ZERO;
                for t2 in 0..=j {
                    for t1 in 0..=i {
                        acc += x[[t1, t2]] * reference.weight(i - t1, j - t2);
                    }
                }
                *c = acc;
            }
        }
    }
    Ok(out)
}

// 1_L · A
fn cumulative_rows(a: &mut Array2<Complex64>) {
    for i in 1..a.nrows() {
        for j in 0..a.ncols() {
            let above = a[[i - 1, j]];
            a[[i, j]] += above;
        }
    }
}

// A · 1_Lᵀ
fn cumulative_cols(a: &mut Array2<Complex64>) {
    for j in 1..a.ncols() {
        for i in 0..a.nrows() {
            let left = a[[i, j - 1]];
            a[[i, j]] += left;
        }
    }
}

// D_n · A, in place from the bottom up.
fn difference_rows(a: &mut Array2<Complex64>) {
    for i in (1..a.nrows()).rev() {
        for j in 0..a.ncols() {
            let above = a[[i - 1, j]];
            a[[i, j]] -= above;
        }
    }
}

// A · D_nᵀ
fn difference_cols(a: &mut Array2<Complex64>) {
    for j in (1..a.ncols()).rev() {
        for i in 0..a.nrows() {
            let left = a[[i, j - 1]];
            a[[i, j]] -= left;
        }
    }
}

/// Solve `M_R vec(X) = vec(C)` for `X`.
///
/// Pinhole is a copy, slit is `D_n C`, block is `D_n C D_nᵀ`; anything else
/// runs forward substitution over the quadrant in columnwise order, which
/// touches only the `(i+1)(j+1)` nonzeros of each row.
pub fn apply_mr_inverse(
    reference: &Reference,
    c: ArrayView2<'_, Complex64>,
) -> Result<Array2<Complex64>> {
    let n = reference.n();
    check_square(c, n)?;
    let mut x = c.to_owned();
    match reference.kind() {
        ReferenceKind::Pinhole => {}
        ReferenceKind::Slit => difference_rows(&mut x),
        ReferenceKind::Block => {
            difference_rows(&mut x);
            difference_cols(&mut x);
        }
        ReferenceKind::Custom => {
            let diag = reference.diagonal();
            if diag == ZERO {
                return Err(Error::SeparationViolated);
            }
            for j in 0..n {
                for i in 0..n {
                    let mut acc = c[[i, j]];
                    for t2 in 0..=j {
                        let rows = if t2 == j { i } else { i + 1 };
                        for t1 in 0..rows {
                            acc -= x[[t1, t2]] * reference.weight(i - t1, j - t2);
                        }
                    }
                    x[[i, j]] = acc / diag;
                }
            }
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, mat_columnwise, vec_columnwise};
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_complex(n: usize, rng: &mut ChaCha8Rng) -> Array2<Complex64> {
        Array2::from_shape_fn((n, n), |_| {
            Complex64::from_polar(rng.random::<f64>(), rng.random::<f64>() * std::f64::consts::TAU)
        })
    }

    #[test]
    fn special_reference_shapes() {
        let p = Reference::pinhole(3).unwrap();
        let nonzero: Vec<_> = p.values().indexed_iter().filter(|(_, v)| v.norm() > 0.0).collect();
        assert_eq!(nonzero, vec![((2, 2), &ONE)]);

        let b = Reference::block(2).unwrap();
        assert_eq!(b.values(), &Array2::from_elem((2, 2), ONE));

        let s = Reference::slit(3).unwrap();
        assert_eq!(s.values().column(2).to_vec(), vec![ONE; 3]);
        assert_eq!(s.values().column(0).to_vec(), vec![ZERO; 3]);
    }

    #[test]
    fn custom_requires_nonzero_corner() {
        let err = make_reference(ReferenceKind::Custom, 2, Some(Array2::zeros((2, 2)))).unwrap_err();
        assert!(matches!(err, Error::SeparationViolated));
        assert!(make_reference(ReferenceKind::Custom, 2, None).is_err());
        assert!(Reference::pinhole(0).is_err());
    }

    #[test]
    fn difference_matrix_inverts_lower_ones() {
        assert_eq!(difference_matrix(1), array![[1.0]]);
        assert_eq!(
            difference_matrix(3),
            array![[1.0, 0.0, 0.0], [-1.0, 1.0, 0.0], [0.0, -1.0, 1.0]]
        );
        let eye = Array2::<f64>::eye(5);
        assert_eq!(difference_matrix(5).dot(&lower_ones(5)), eye);
        assert_eq!(lower_ones(5).dot(&difference_matrix(5)), eye);
    }

    #[test]
    fn pinhole_mr_is_identity() {
        let m = build_mr(&Reference::pinhole(4).unwrap()).unwrap();
        assert_eq!(m.structure(), Structure::Identity);
        assert_eq!(m.data(), &Array2::<Complex64>::eye(16));
    }

    #[test]
    fn kronecker_identities_hold_exactly() {
        let n = 4;
        let ones = lower_ones(n).mapv(|v| Complex64::new(v, 0.0));
        let eye = Array2::<Complex64>::eye(n);
        let slit = build_mr(&Reference::slit(n).unwrap()).unwrap();
        assert_eq!(slit.data(), &kron(eye.view(), ones.view()));
        let block = build_mr(&Reference::block(n).unwrap()).unwrap();
        assert_eq!(block.data(), &kron(ones.view(), ones.view()));
    }

    #[test]
    fn difference_operators_map_references_to_impulse() {
        let n = 5;
        let d = difference_matrix(n).mapv(|v| Complex64::new(v, 0.0));
        let eye = Array2::<Complex64>::eye(n);
        let mut e1 = vec![ZERO; n * n];
        e1[0] = ONE;
        // The difference operators act on the flipped (conjugated) reference.
        for (reference, inverse) in [
            (Reference::slit(n).unwrap(), kron(eye.view(), d.view())),
            (Reference::block(n).unwrap(), kron(d.view(), d.view())),
        ] {
            let flipped = Array2::from_shape_fn((n, n), |(i, j)| {
                reference.values()[[n - 1 - i, n - 1 - j]].conj()
            });
            let got = inverse.dot(&vec_columnwise(flipped.view()));
            assert_eq!(got.to_vec(), e1);
        }
    }

    #[test]
    fn mr_is_lower_triangular_with_conjugate_corner_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut values = random_complex(4, &mut rng);
        values[[3, 3]] = Complex64::new(0.3, 0.4);
        let r = Reference::custom(values).unwrap();
        let m = build_mr(&r).unwrap();
        for ((i, j), v) in m.data().indexed_iter() {
            if j > i {
                assert_eq!(*v, ZERO);
            }
            if i == j {
                assert_eq!(*v, Complex64::new(0.3, -0.4));
            }
        }
    }

    #[test]
    fn forward_application_matches_dense_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for r in [
            Reference::pinhole(4).unwrap(),
            Reference::slit(4).unwrap(),
            Reference::block(4).unwrap(),
            Reference::custom(random_complex(4, &mut rng)).unwrap(),
        ] {
            let x = random_complex(4, &mut rng);
            let dense = build_mr(&r).unwrap().data().dot(&vec_columnwise(x.view()));
            let fast = apply_mr(&r, x.view()).unwrap();
            let dense = mat_columnwise(dense.as_slice().unwrap(), 4, 4);
            for (a, b) in dense.iter().zip(fast.iter()) {
                assert!((a - b).norm() < 1e-12, "{:?}", r.kind());
            }
        }
    }

    #[test]
    fn inverse_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_complex(3, &mut rng);
        let r = Reference::custom(random_complex(3, &mut rng)).unwrap();
        let c = apply_mr(&r, x.view()).unwrap();
        let back = apply_mr_inverse(&r, c.view()).unwrap();
        for (a, b) in back.iter().zip(x.iter()) {
            assert!((a - b).norm() < 1e-10);
        }

        let block = Reference::block(4).unwrap();
        let x = random_complex(4, &mut rng);
        let ones = lower_ones(4).mapv(|v| Complex64::new(v, 0.0));
        let c = ones.dot(&x).dot(&ones.t());
        let back = apply_mr_inverse(&block, c.view()).unwrap();
        for (a, b) in back.iter().zip(x.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn pinhole_inverse_is_copy() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let c = random_complex(6, &mut rng);
        let x = apply_mr_inverse(&Reference::pinhole(6).unwrap(), c.view()).unwrap();
        assert_eq!(x, c);
    }

    #[test]
    fn dense_solve_rejects_zero_diagonal() {
        let m = StructuredMatrix {
            data: Array2::zeros((2, 2)),
            structure: Structure::GeneralLowerTriangular,
        };
        assert!(matches!(m.solve(&[ONE, ONE]), Err(Error::SeparationViolated)));
    }

    #[test]
    fn dense_limit_enforced() {
        let err = build_mr(&Reference::pinhole(DENSE_LIMIT + 1).unwrap()).unwrap_err();
        assert!(matches!(err, Error::TooLarge { .. }));
    }
}
