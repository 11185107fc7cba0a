//! Monte Carlo sweeps over photon budgets, references and algorithms.
//!
//! Every trial draws its randomness from `derive_seed(seed, cell, trial)`,
//! where `cell` indexes the `(reference, npp)` pair. Noise uses stream 0 of
//! that seed and HIO initialization stream 1, so all algorithms in a cell see
//! the same noisy data and the worker count never changes the numbers.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    expected_squared_error, mean, relative_error, sample_std, scaling_factor_closed_form,
    scaling_factor_general, ScalingFactor,
};
use crate::deconv::referenced_deconvolution;
use crate::error::{Error, Result};
use crate::hio::{hio_recover, HioConfig, Selection};
use crate::io::read_square_image;
use crate::linalg::frobenius_sq;
use crate::noise::{derive_seed, poisson_corrupt, PhotonBudget};
use crate::references::{make_reference, Reference, ReferenceKind};
use crate::specimen::Builtin;
use crate::transforms::{
    check_oversampling, forward_magnitudes, CompositeSpecimen, Image, MagnitudeData,
};

/// Where the specimen comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpecimenSource {
    File { path: PathBuf },
    Builtin(Builtin),
}

impl SpecimenSource {
    pub fn load(&self, n: usize) -> Result<Image> {
        match self {
            SpecimenSource::File { path } => {
                let data = read_square_image(path)?;
                if data.nrows() != n {
                    return Err(Error::dims(
                        format!("{n}x{n} specimen"),
                        format!("{0}x{0} in {1}", data.nrows(), path.display()),
                    ));
                }
                Image::new(data)
            }
            SpecimenSource::Builtin(b) => b.generate(n),
        }
    }
}

impl FromStr for SpecimenSource {
    type Err = Error;

    /// `builtin:NAME` or a file path.
    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix("builtin:") {
            Some(name) => Ok(SpecimenSource::Builtin(name.parse()?)),
            None => Ok(SpecimenSource::File { path: s.into() }),
        }
    }
}

/// A reference kind, or a custom reference read from a file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ReferenceSpec {
    Special(ReferenceKind),
    Custom(PathBuf),
}

impl ReferenceSpec {
    pub fn build(&self, n: usize) -> Result<Reference> {
        match self {
            ReferenceSpec::Special(kind) => make_reference(*kind, n, None),
            ReferenceSpec::Custom(path) => {
                make_reference(ReferenceKind::Custom, n, Some(read_square_image(path)?))
            }
        }
    }
}

impl FromStr for ReferenceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(path) = s.strip_prefix("custom:") {
            if path.is_empty() {
                return Err(Error::Config("custom reference needs a path: custom:PATH".into()));
            }
            return Ok(ReferenceSpec::Custom(path.into()));
        }
        match s.parse()? {
            ReferenceKind::Custom => {
                Err(Error::Config("custom reference needs a path: custom:PATH".into()))
            }
            kind => Ok(ReferenceSpec::Special(kind)),
        }
    }
}

impl fmt::Display for ReferenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReferenceSpec::Special(kind) => write!(f, "{kind}"),
            ReferenceSpec::Custom(path) => write!(f, "custom:{}", path.display()),
        }
    }
}

impl TryFrom<String> for ReferenceSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ReferenceSpec> for String {
    fn from(r: ReferenceSpec) -> String {
        r.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Deconv,
    /// HIO without knowledge of the reference.
    Hio,
    /// HIO with the reference region held fixed.
    HioRef,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Deconv => "deconv",
            Algorithm::Hio => "hio",
            Algorithm::HioRef => "hio-ref",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deconv" => Ok(Algorithm::Deconv),
            "hio" => Ok(Algorithm::Hio),
            "hio-ref" => Ok(Algorithm::HioRef),
            other => Err(Error::Config(format!(
                "unknown algorithm `{other}` (expected deconv, hio or hio-ref)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub specimen: SpecimenSource,
    pub references: Vec<ReferenceSpec>,
    pub n: usize,
    pub m: usize,
    pub npp: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub hio: HioConfig,
    /// Worker threads; all available cores when absent.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Desk-scale defaults: smooth blob, the three special references,
    /// `n = 16`, `m = 64`, deconvolution only.
    pub fn desk_scale() -> Self {
        ExperimentConfig {
            specimen: SpecimenSource::Builtin(Builtin::SmoothBlob { radius: None }),
            references: ReferenceKind::SPECIAL.iter().map(|&k| ReferenceSpec::Special(k)).collect(),
            n: 16,
            m: 64,
            npp: vec![100.0, 1000.0, 5000.0],
            trials: 100,
            seed: 0,
            algorithms: vec![Algorithm::Deconv],
            hio: HioConfig::default(),
            workers: None,
            output_dir: None,
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be positive".into()));
        }
        check_oversampling(self.n, self.m)?;
        if self.npp.is_empty() || self.references.is_empty() || self.algorithms.is_empty() {
            return Err(Error::Config(
                "npp, references and algorithms must each list at least one entry".into(),
            ));
        }
        for &npp in &self.npp {
            PhotonBudget::new(npp, self.m)?;
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    /// `‖X̃ - X‖²_F / ‖X‖²_F` of the selected estimate.
    pub rel_err: f64,
    pub runtime_ms: f64,
    /// HIO only: error of the iterate with the smallest Fourier residual.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_selected_rel_err: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub reference: String,
    pub npp: f64,
    pub algorithm: Algorithm,
    /// Only defined for deconvolution.
    pub expected_rel_err: Option<f64>,
    pub trials: Vec<TrialRecord>,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CellReport {
    pub fn rel_errors(&self) -> Vec<f64> {
        self.trials.iter().map(|t| t.rel_err).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub cells: Vec<CellReport>,
}

impl ExperimentReport {
    pub fn cell(&self, reference: &str, npp: f64, algorithm: Algorithm) -> Option<&CellReport> {
        self.cells
            .iter()
            .find(|c| c.reference == reference && c.npp == npp && c.algorithm == algorithm)
    }

    /// `report.json` and `curves.csv` in `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json = dir.join("report.json");
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&json, text).map_err(|e| Error::io(&json, e))?;

        let csv_path = dir.join("curves.csv");
        let mut w = csv::Writer::from_path(&csv_path).map_err(|e| Error::format(&csv_path, e.to_string()))?;
        let opt = |v: Option<f64>| v.map(|v| format!("{v:.16e}")).unwrap_or_default();
        w.write_record(["algorithm", "reference", "npp", "mean_rel_err", "std_rel_err", "expected_rel_err"])
            .map_err(|e| Error::format(&csv_path, e.to_string()))?;
        for c in &self.cells {
            w.write_record([
                c.algorithm.name().to_string(),
                c.reference.clone(),
                c.npp.to_string(),
                opt(c.mean),
                opt(c.std),
                opt(c.expected_rel_err),
            ])
            .map_err(|e| Error::format(&csv_path, e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(&csv_path, e))
    }
}

/// Noiseless data and analysis for one reference.
struct Prepared {
    reference: Reference,
    y: MagnitudeData,
    scaling: Option<ScalingFactor>,
}

fn prepare(spec: &ReferenceSpec, truth: &Image, m: usize, need_scaling: bool) -> Result<Prepared> {
    let n = truth.dim().0;
    let reference = spec.build(n)?;
    let composite = CompositeSpecimen::new(truth, &reference.to_image())?;
    let y = forward_magnitudes(&composite, m)?;
    let scaling = if need_scaling {
        Some(match reference.kind() {
            ReferenceKind::Custom => scaling_factor_general(&reference, m)?,
            kind => scaling_factor_closed_form(kind, n, m)?,
        })
    } else {
        None
    };
    Ok(Prepared { reference, y, scaling })
}

fn run_trial(
    prepared: &Prepared,
    budget: &PhotonBudget,
    algorithm: Algorithm,
    hio: &HioConfig,
    truth: &Array2<Complex64>,
    seed: u64,
) -> Result<TrialRecord> {
    let noisy = poisson_corrupt(&prepared.y, budget, seed)?;
    let start = Instant::now();
    let (estimate, residual_selected_rel_err) = match algorithm {
        Algorithm::Deconv => (referenced_deconvolution(&noisy, &prepared.reference)?.estimate, None),
        Algorithm::Hio | Algorithm::HioRef => {
            let config = HioConfig {
                seed,
                enforce_reference: algorithm == Algorithm::HioRef,
                ..hio.clone()
            };
            let oracle = config.selection == Selection::Oracle;
            let out = hio_recover(
                &noisy,
                Some(&prepared.reference),
                &config,
                oracle.then(|| truth.view()),
            )?;
            let by_residual = out.best_by_residual.oracle_error;
            (out.estimate, by_residual)
        }
    };
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(TrialRecord {
        seed,
        rel_err: relative_error(estimate.view(), truth.view())?,
        runtime_ms,
        residual_selected_rel_err,
    })
}

/// Run every `(reference, npp, algorithm)` cell of `config`.
///
/// Fails only on invalid configuration or an unreadable specimen; errors in a
/// single cell are recorded in that cell.
pub fn run_sweep(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let truth = config.specimen.load(config.n)?;
    if frobenius_sq(truth.view()) == 0.0 {
        return Err(Error::ZeroTruth);
    }
    let truth_norm_sq = frobenius_sq(truth.view());
    let need_scaling = config.algorithms.contains(&Algorithm::Deconv);

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = config.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;

    pool.install(|| {
        let prepared: Vec<Result<Prepared>> = config
            .references
            .par_iter()
            .map(|spec| prepare(spec, &truth, config.m, need_scaling))
            .collect();

        let mut jobs = Vec::new();
        for (ri, p) in prepared.iter().enumerate() {
            if p.is_err() {
                continue;
            }
            for (pi, _) in config.npp.iter().enumerate() {
                let cell = (ri * config.npp.len() + pi) as u64;
                for (ai, _) in config.algorithms.iter().enumerate() {
                    for trial in 0..config.trials {
                        jobs.push((ri, pi, ai, derive_seed(config.seed, cell, trial as u64)));
                    }
                }
            }
        }
        let results: Vec<Result<TrialRecord>> = jobs
            .par_iter()
            .map(|&(ri, pi, ai, seed)| {
                let p = prepared[ri].as_ref().expect("filtered above");
                let budget = PhotonBudget::new(config.npp[pi], config.m)?;
                run_trial(p, &budget, config.algorithms[ai], &config.hio, truth.data(), seed)
            })
            .collect();

        let mut results = results.into_iter();
        let mut cells = Vec::new();
        for (ri, p) in prepared.iter().enumerate() {
            for &npp in &config.npp {
                for &algorithm in &config.algorithms {
                    let mut cell = CellReport {
                        reference: config.references[ri].to_string(),
                        npp,
                        algorithm,
                        expected_rel_err: None,
                        trials: Vec::new(),
                        mean: None,
                        std: None,
                        error: None,
                    };
                    let p = match p {
                        Ok(p) => p,
                        Err(e) => {
                            cell.error = Some(e.to_string());
                            cells.push(cell);
                            continue;
                        }
                    };
                    let trials: Result<Vec<TrialRecord>> =
                        results.by_ref().take(config.trials).collect();
                    let expected = match (algorithm, &p.scaling) {
                        (Algorithm::Deconv, Some(s)) => PhotonBudget::new(npp, config.m)
                            .and_then(|b| expected_squared_error(s, &p.y, &b))
                            .map(|e| Some(e / truth_norm_sq)),
                        _ => Ok(None),
                    };
                    match (trials, expected) {
                        (Ok(trials), Ok(expected)) => {
                            let errs: Vec<f64> = trials.iter().map(|t| t.rel_err).collect();
                            cell.mean = Some(mean(&errs));
                            cell.std = Some(sample_std(&errs));
                            cell.expected_rel_err = expected;
                            cell.trials = trials;
                        }
                        (Err(e), _) | (_, Err(e)) => cell.error = Some(e.to_string()),
                    }
                    cells.push(cell);
                }
            }
        }
        Ok(ExperimentReport {
            config: config.clone(),
            cells,
        })
    })
}
