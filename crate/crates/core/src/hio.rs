//! Fienup's Hybrid Input-Output as an iterative baseline.
//!
//! The object lives on the full `m x m` grid with the `n x 2n` composite
//! region as support. Each iteration replaces Fourier magnitudes with
//! `√Ỹ`, transforms back, keeps the result inside the support and applies
//! the `g - β g'` feedback outside it. With reference enforcement the
//! reference half of the support is reset to `R` after every update.

use std::time::{Duration, Instant};

use ndarray::{s, Array2, ArrayView2};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::relative_error;
use crate::error::{Error, Result};
use crate::noise::stream_rng;
use crate::references::Reference;
use crate::transforms::{Fft2, MagnitudeData};

/// How the returned iterate is chosen among all iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    /// Smallest Fourier-magnitude misfit; needs no ground truth.
    Residual,
    /// Smallest relative error against a supplied truth.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HioConfig {
    pub beta: f64,
    pub iterations: usize,
    pub enforce_reference: bool,
    pub selection: Selection,
    /// Treat pixels with negative real part as constraint violations and
    /// keep only real parts inside the support.
    pub real_nonnegative: bool,
    /// Multiplier on the random initial magnitudes.
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for HioConfig {
    fn default() -> Self {
        HioConfig {
            beta: 0.9,
            iterations: 1000,
            enforce_reference: false,
            selection: Selection::Oracle,
            real_nonnegative: false,
            init_scale: 1.0,
            seed: 0,
        }
    }
}

impl HioConfig {
    fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::Config(format!("beta must lie in (0, 1], got {}", self.beta)));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be positive".into()));
        }
        if !(self.init_scale.is_finite() && self.init_scale > 0.0) {
            return Err(Error::Config("init_scale must be positive".into()));
        }
        Ok(())
    }
}

/// One scored iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    /// Zero-based iteration that produced it.
    pub iteration: usize,
    /// `‖ |FT(x)| - √Ỹ ‖² / ‖√Ỹ‖²` for the support-restricted iterate.
    pub residual: f64,
    pub oracle_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HioResult {
    pub estimate: Array2<Complex64>,
    /// The iterate picked by the configured rule.
    pub selected: Candidate,
    pub best_by_residual: Candidate,
    pub best_by_oracle: Option<Candidate>,
    /// Composite region (`n x 2n`) of the final iterate.
    pub last_composite: Array2<Complex64>,
    pub elapsed: Duration,
}

/// Replace Fourier magnitudes of `grid` (already transformed) by `amplitude`,
/// keeping phases; zero-magnitude bins take phase 1.
pub(crate) fn replace_magnitudes(grid: &mut Array2<Complex64>, amplitude: &Array2<f64>) {
    grid.zip_mut_with(amplitude, |z, &a| {
        let r = z.norm();
        *z = if r > 0.0 { *z * (a / r) } else { Complex64::new(a, 0.0) };
    });
}

pub fn hio_recover(
    y: &MagnitudeData,
    reference: Option<&Reference>,
    config: &HioConfig,
    truth: Option<ArrayView2<'_, Complex64>>,
) -> Result<HioResult> {
    let start = Instant::now();
    config.validate()?;
    let (n, m) = (y.n(), y.m());
    if config.selection == Selection::Oracle && truth.is_none() {
        return Err(Error::Config(
            "oracle selection needs the ground truth (pass --truth or use residual selection)".into(),
        ));
    }
    if let Some(t) = truth {
        if t.dim() != (n, n) {
            return Err(Error::dims(format!("{n}x{n} truth"), format!("{:?}", t.dim())));
        }
    }
    if let Some(r) = reference {
        if r.n() != n {
            return Err(Error::dims(format!("reference n = {n}"), format!("n = {}", r.n())));
        }
    }
    let enforced = match (config.enforce_reference, reference) {
        (true, Some(r)) => Some(r.values()),
        (true, None) => {
            return Err(Error::Config("reference enforcement requires a reference".into()))
        }
        (false, _) => None,
    };

    let amplitude = y.data().mapv(|v| v.max(0.0).sqrt());
    let amplitude_sq: f64 = y.data().iter().map(|v| v.max(0.0)).sum();
    let inv_m2 = 1.0 / (m * m) as f64;
    let mut plan = Fft2::new(m, m);

    let mut rng = stream_rng(config.seed, 1);
    let mut g = Array2::<Complex64>::zeros((m, m));
    for v in g.slice_mut(s![..n, ..2 * n]).iter_mut() {
        *v = Complex64::new(config.init_scale * rng.random::<f64>(), 0.0);
    }
    if let Some(r) = enforced {
        g.slice_mut(s![..n, n..2 * n]).assign(r);
    }

    let mut projected = Array2::<Complex64>::zeros((m, m));
    let mut probe = Array2::<Complex64>::zeros((m, m));
    let mut best_residual: Option<(Candidate, Array2<Complex64>)> = None;
    let mut best_oracle: Option<(Candidate, Array2<Complex64>)> = None;

    for iteration in 0..config.iterations {
        projected.assign(&g);
        plan.forward(&mut projected);
        replace_magnitudes(&mut projected, &amplitude);
        plan.inverse(&mut projected);
        projected.mapv_inplace(|z| z * inv_m2);

        for ((i, j), current) in g.indexed_iter_mut() {
            let candidate = projected[[i, j]];
            let in_support = i < n && j < 2 * n;
            let admissible = in_support && (!config.real_nonnegative || candidate.re >= 0.0);
            *current = if admissible {
                if config.real_nonnegative {
                    Complex64::new(candidate.re, 0.0)
                } else {
                    candidate
                }
            } else {
                *current - candidate * config.beta
            };
        }
        if let Some(r) = enforced {
            g.slice_mut(s![..n, n..2 * n]).assign(r);
        }

        // Score the support-restricted iterate.
        probe.fill(Complex64::new(0.0, 0.0));
        probe.slice_mut(s![..n, ..2 * n]).assign(&g.slice(s![..n, ..2 * n]));
        plan.forward(&mut probe);
        let misfit: f64 = probe
            .iter()
            .zip(amplitude.iter())
            .map(|(z, a)| (z.norm() - a).powi(2))
            .sum();
        let residual = if amplitude_sq > 0.0 { misfit / amplitude_sq } else { misfit };
        let estimate = g.slice(s![..n, ..n]);
        let oracle_error = match truth {
            Some(t) => Some(relative_error(estimate, t)?),
            None => None,
        };
        let candidate = Candidate {
            iteration,
            residual,
            oracle_error,
        };
        if best_residual.as_ref().is_none_or(|(c, _)| residual < c.residual) {
            best_residual = Some((candidate, estimate.to_owned()));
        }
        if let Some(err) = oracle_error {
            let better = best_oracle
                .as_ref()
                .is_none_or(|(c, _)| err < c.oracle_error.unwrap_or(f64::INFINITY));
            if better {
                best_oracle = Some((candidate, estimate.to_owned()));
            }
        }
    }

    let (best_by_residual, residual_estimate) = best_residual.expect("at least one iteration");
    let best_by_oracle_pair = best_oracle;
    let best_by_oracle = best_by_oracle_pair.as_ref().map(|(c, _)| *c);
    let (selected, estimate) = match config.selection {
        Selection::Residual => (best_by_residual, residual_estimate),
        Selection::Oracle => best_by_oracle_pair.expect("truth was checked above"),
    };
    Ok(HioResult {
        estimate,
        selected,
        best_by_residual,
        best_by_oracle,
        last_composite: g.slice(s![..n, ..2 * n]).to_owned(),
        elapsed: start.elapsed(),
    })
}
