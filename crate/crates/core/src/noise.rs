//! Poisson shot noise on magnitude data.
//!
//! Each detector pixel is drawn independently as
//! `Ỹ(k) = (‖Y‖₁ / N_p) · Pois(N_p · Y(k) / ‖Y‖₁)`, so `E[Ỹ] = Y` and
//! `Var[Ỹ(k)] = (‖Y‖₁ / N_p) · Y(k)`. Rates are used as real numbers.
//!
//! Randomness comes from ChaCha8, a counter-based generator: a 64-bit seed
//! picks the key and a stream index picks an independent sequence, so
//! parallel trials are reproducible regardless of scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transforms::MagnitudeData;

/// Rates below this use sequential-search inversion; above it, PTRS.
pub const INVERSION_CUTOFF: f64 = 30.0;

/// Generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mix a master seed with cell and trial indices into a per-trial seed.
pub fn derive_seed(master: u64, cell: u64, trial: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    splitmix(splitmix(splitmix(master) ^ cell) ^ trial)
}

/// Nominal photons per pixel on an `m x m` detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonBudget {
    photons_per_pixel: f64,
    detector_side: usize,
}

impl PhotonBudget {
    pub fn new(photons_per_pixel: f64, detector_side: usize) -> Result<Self> {
        if !(photons_per_pixel.is_finite() && photons_per_pixel > 0.0) {
            return Err(Error::InvalidBudget(format!(
                "photons per pixel must be positive, got {photons_per_pixel}"
            )));
        }
        if detector_side == 0 {
            return Err(Error::InvalidBudget("detector side must be positive".into()));
        }
        Ok(PhotonBudget {
            photons_per_pixel,
            detector_side,
        })
    }

    pub fn photons_per_pixel(&self) -> f64 {
        self.photons_per_pixel
    }

    pub fn detector_side(&self) -> usize {
        self.detector_side
    }

    /// `N_p = N_pp · m²`.
    pub fn total_photons(&self) -> f64 {
        self.photons_per_pixel * (self.detector_side * self.detector_side) as f64
    }
}

/// Draw one Poisson variate with mean `rate`.
pub fn sample_poisson<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> u64 {
    if rate <= 0.0 {
        return 0;
    }
    if rate < INVERSION_CUTOFF {
        sample_inversion(rate, rng)
    } else {
        sample_ptrs(rate, rng)
    }
}

fn sample_inversion<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    let mut k = 0u64;
    let mut p = (-rate).exp();
    let mut cdf = p;
    while u > cdf {
        k += 1;
        p *= rate / k as f64;
        cdf += p;
        // Guard against the tail underflowing before `cdf` reaches `u`.
        if p < f64::MIN_POSITIVE && k as f64 > rate {
            break;
        }
    }
    k
}

// Hörmann's transformed rejection with squeeze (PTRS), valid for rate >= 10.
fn sample_ptrs<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> u64 {
    let slam = rate.sqrt();
    let loglam = rate.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + rate + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -rate + k * loglam - libm::lgamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// Corrupt `y` with shot noise at the given budget, drawing from `rng`.
pub fn poisson_corrupt_with<R: Rng + ?Sized>(
    y: &MagnitudeData,
    budget: &PhotonBudget,
    rng: &mut R,
) -> Result<MagnitudeData> {
    if budget.detector_side() != y.m() {
        return Err(Error::dims(
            format!("budget for m = {}", y.m()),
            format!("m = {}", budget.detector_side()),
        ));
    }
    let total = y.l1_norm();
    if total <= 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let photons = budget.total_photons();
    let quantum = total / photons;
    let noisy = y
        .data()
        .mapv(|v| quantum * sample_poisson(v / quantum, rng) as f64);
    MagnitudeData::new(noisy, y.n(), false)
}

/// Corrupt `y` using stream 0 of `seed`.
pub fn poisson_corrupt(y: &MagnitudeData, budget: &PhotonBudget, seed: u64) -> Result<MagnitudeData> {
    poisson_corrupt_with(y, budget, &mut stream_rng(seed, 0))
}
