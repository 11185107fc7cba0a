//! Built-in specimens.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::stream_rng;
use crate::transforms::Image;

/// A generator for an `n x n` test specimen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Builtin {
    /// Square of constant `intensity`, centered. `side` defaults to `ceil(n/8)`.
    CenteredSquare {
        #[serde(default)]
        side: Option<usize>,
        #[serde(default = "one")]
        intensity: f64,
    },
    /// Gaussian bump with standard deviation `radius` pixels (default `3n/4`,
    /// broad enough to fill the frame), peak 1 at the center.
    SmoothBlob {
        #[serde(default)]
        radius: Option<f64>,
    },
    /// Independent entries, uniform magnitude in `[0, 1]` and uniform phase.
    Random {
        #[serde(default)]
        seed: u64,
    },
}

fn one() -> f64 {
    1.0
}

impl Builtin {
    pub fn generate(&self, n: usize) -> Result<Image> {
        if n == 0 {
            return Err(Error::dims("n >= 1", "n = 0"));
        }
        match *self {
            Builtin::CenteredSquare { side, intensity } => centered_square(n, side, intensity),
            Builtin::SmoothBlob { radius } => smooth_blob(n, radius),
            Builtin::Random { seed } => Ok(random_specimen(n, seed)),
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Builtin::CenteredSquare { .. } => f.write_str("centered-square"),
            Builtin::SmoothBlob { .. } => f.write_str("smooth-blob"),
            Builtin::Random { .. } => f.write_str("random"),
        }
    }
}

impl FromStr for Builtin {
    type Err = Error;

    /// Parses the bare generator names with default parameters.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centered-square" => Ok(Builtin::CenteredSquare { side: None, intensity: 1.0 }),
            "smooth-blob" => Ok(Builtin::SmoothBlob { radius: None }),
            "random" => Ok(Builtin::Random { seed: 0 }),
            other => Err(Error::Config(format!(
                "unknown builtin specimen `{other}` (expected centered-square, smooth-blob or random)"
            ))),
        }
    }
}

pub fn centered_square(n: usize, side: Option<usize>, intensity: f64) -> Result<Image> {
    let side = side.unwrap_or(n.div_ceil(8));
    if side == 0 || side > n {
        return Err(Error::Config(format!("square side {side} must lie in 1..={n}")));
    }
    let start = (n - side) / 2;
    let mut x = Array2::zeros((n, n));
    x.slice_mut(ndarray::s![start..start + side, start..start + side])
        .fill(Complex64::new(intensity, 0.0));
    Image::new(x)
}

pub fn smooth_blob(n: usize, radius: Option<f64>) -> Result<Image> {
    let sigma = radius.unwrap_or(0.75 * n as f64);
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Config(format!("blob radius must be positive, got {sigma}")));
    }
    let c = (n as f64 - 1.0) / 2.0;
    let x = Array2::from_shape_fn((n, n), |(i, j)| {
        let d2 = (i as f64 - c).powi(2) + (j as f64 - c).powi(2);
        Complex64::new((-d2 / (2.0 * sigma * sigma)).exp(), 0.0)
    });
    Image::new(x)
}

pub fn random_specimen(n: usize, seed: u64) -> Image {
    let mut rng = stream_rng(seed, 2);
    Image::new_unchecked(Array2::from_shape_fn((n, n), |_| {
        Complex64::from_polar(rng.random::<f64>(), rng.random::<f64>() * std::f64::consts::TAU)
    }))
}
