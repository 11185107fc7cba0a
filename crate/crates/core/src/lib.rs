//! Holographic phase retrieval by referenced deconvolution.
//!
//! A specimen `X` is placed next to a known reference `R` and only the
//! squared magnitudes `Y = |FT([X, R])|²` are measured on an oversampled
//! `m x m` grid. Because part of the autocorrelation of `[X, R]` is a linear,
//! triangular function of `X`, the specimen is recovered by one inverse FFT
//! and one structured triangular solve.
//!
//! ```
//! use holoref::{forward_magnitudes, referenced_deconvolution, CompositeSpecimen, Reference};
//! use holoref::specimen::smooth_blob;
//!
//! let n = 8;
//! let x = smooth_blob(n, None).unwrap();
//! let r = Reference::block(n).unwrap();
//! let y = forward_magnitudes(&CompositeSpecimen::new(&x, &r.to_image()).unwrap(), 4 * n).unwrap();
//! let out = referenced_deconvolution(&y, &r).unwrap();
//! assert!(holoref::relative_error(out.estimate.view(), x.view()).unwrap() < 1e-20);
//! ```

pub mod analysis;
pub mod deconv;
pub mod error;
pub mod experiment;
pub mod hio;
pub mod io;
pub mod linalg;
pub mod noise;
pub mod references;
pub mod specimen;
pub mod transforms;

pub use analysis::{
    expected_squared_error, relative_error, scaling_factor_closed_form, scaling_factor_general,
    transfer_matrix, ScalingFactor,
};
pub use deconv::{referenced_deconvolution, RecoveryResult};
pub use error::{Error, ErrorCategory, Result};
pub use experiment::{run_sweep, Algorithm, ExperimentConfig, ExperimentReport, ReferenceSpec};
pub use hio::{hio_recover, HioConfig, HioResult, Selection};
pub use noise::{poisson_corrupt, PhotonBudget};
pub use references::{apply_mr, apply_mr_inverse, build_mr, Reference, ReferenceKind};
pub use transforms::{
    autocorrelation_from_magnitudes, forward_magnitudes, CompositeSpecimen, Image, MagnitudeData,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/transforms.md")]
    mod transforms {}
    #[doc = include_str!("../../../book/src/references.md")]
    mod references {}
    #[doc = include_str!("../../../book/src/deconvolution.md")]
    mod deconvolution {}
    #[doc = include_str!("../../../book/src/noise.md")]
    mod noise {}
    #[doc = include_str!("../../../book/src/scaling.md")]
    mod scaling {}
    #[doc = include_str!("../../../book/src/hio.md")]
    mod hio {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
