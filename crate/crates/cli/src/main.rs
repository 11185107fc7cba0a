use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use holoref::experiment::SpecimenSource;
use holoref::io::{read_real_csv, write_complex_csv, write_raw_f64, write_real_csv};
use holoref::{
    forward_magnitudes, hio_recover, poisson_corrupt, referenced_deconvolution, relative_error,
    run_sweep, scaling_factor_closed_form, scaling_factor_general, Algorithm, CompositeSpecimen, Error,
    ExperimentConfig, HioConfig, MagnitudeData, PhotonBudget, ReferenceKind, ReferenceSpec, Result,
    Selection,
};
use serde_json::json;

#[derive(Parser)]
#[command(name = "holoref", version, about = "Holographic phase retrieval by referenced deconvolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate squared Fourier magnitudes of [X, R].
    Forward(ForwardArgs),
    /// Recover X from a magnitude file.
    Recover(RecoverArgs),
    /// Monte Carlo sweep over photon budgets, references and algorithms.
    Sweep(SweepArgs),
    /// Tabulate the per-frequency error weights S_R.
    Scaling(ScalingArgs),
}

#[derive(Args)]
struct ForwardArgs {
    /// Specimen: an image file (.pgm, .csv) or builtin:NAME.
    #[arg(long, default_value = "builtin:centered-square")]
    image: SpecimenSource,
    /// pinhole, slit, block or custom:PATH.
    #[arg(long, default_value = "block")]
    reference: ReferenceSpec,
    #[arg(long, default_value_t = 16)]
    n: usize,
    #[arg(long, default_value_t = 64)]
    m: usize,
    /// Corrupt with shot noise at this many photons per pixel.
    #[arg(long)]
    npp: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write magnitudes.raw (row-major little-endian f64).
    #[arg(long)]
    raw: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct RecoverArgs {
    /// Magnitude CSV written by `forward`.
    magnitudes: PathBuf,
    #[arg(long, default_value = "block")]
    reference: ReferenceSpec,
    #[arg(long, default_value = "deconv")]
    algorithm: Algorithm,
    #[arg(long, default_value_t = 16)]
    n: usize,
    /// Expected detector side; checked against the file when given.
    #[arg(long)]
    m: Option<usize>,
    /// Ground truth for error reporting and oracle selection.
    #[arg(long)]
    truth: Option<SpecimenSource>,
    /// HIO iterate selection: oracle or residual.
    #[arg(long, default_value = "oracle", value_parser = parse_selection)]
    selection: Selection,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    #[arg(long, default_value_t = 0.9)]
    beta: f64,
    /// HIO initialization seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON experiment config; the flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    image: Option<SpecimenSource>,
    #[arg(long, value_delimiter = ',')]
    reference: Vec<ReferenceSpec>,
    #[arg(long, value_delimiter = ',')]
    algorithm: Vec<Algorithm>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    npp: Vec<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_selection)]
    selection: Option<Selection>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScalingArgs {
    #[arg(long, default_value = "block")]
    reference: ReferenceSpec,
    #[arg(long, default_value_t = 16)]
    n: usize,
    #[arg(long, default_value_t = 64)]
    m: usize,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn parse_selection(s: &str) -> std::result::Result<Selection, String> {
    match s {
        "oracle" => Ok(Selection::Oracle),
        "residual" => Ok(Selection::Residual),
        other => Err(format!("unknown selection `{other}` (expected oracle or residual)")),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.into(), source })
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text).map_err(|source| Error::Io { path: path.into(), source })
}

fn forward(args: ForwardArgs) -> Result<()> {
    let x = args.image.load(args.n)?;
    let r = args.reference.build(args.n)?;
    let mut y = forward_magnitudes(&CompositeSpecimen::new(&x, &r.to_image())?, args.m)?;
    if let Some(npp) = args.npp {
        y = poisson_corrupt(&y, &PhotonBudget::new(npp, args.m)?, args.seed)?;
    }
    ensure_dir(&args.out)?;
    let path = args.out.join("magnitudes.csv");
    write_real_csv(&path, y.data())?;
    if args.raw {
        write_raw_f64(args.out.join("magnitudes.raw"), y.data())?;
    }
    log::info!("wrote {} ({2}x{2}, |Y|_1 = {1:.6e})", path.display(), y.l1_norm(), y.m());
    Ok(())
}

fn recover(args: RecoverArgs) -> Result<()> {
    let data = read_real_csv(&args.magnitudes)?;
    if let Some(m) = args.m {
        if data.nrows() != m {
            return Err(Error::DimensionMismatch {
                expected: format!("{m}x{m} magnitudes"),
                actual: format!("{0}x{1} in {2}", data.nrows(), data.ncols(), args.magnitudes.display()),
            });
        }
    }
    let y = MagnitudeData::new(data, args.n, false)?;
    let r = args.reference.build(args.n)?;
    let truth = args.truth.as_ref().map(|t| t.load(args.n)).transpose()?;

    let start = Instant::now();
    let mut diagnostics = json!({
        "algorithm": args.algorithm.name(),
        "reference": args.reference.to_string(),
        "n": args.n,
        "m": y.m(),
    });
    let estimate = match args.algorithm {
        Algorithm::Deconv => {
            let out = referenced_deconvolution(&y, &r)?;
            diagnostics["solve_residual"] = json!(out.diagnostics.solve_residual);
            diagnostics["autocorrelation_asymmetry"] = json!(out.diagnostics.autocorrelation_asymmetry);
            out.estimate
        }
        Algorithm::Hio | Algorithm::HioRef => {
            let config = HioConfig {
                beta: args.beta,
                iterations: args.iterations,
                enforce_reference: args.algorithm == Algorithm::HioRef,
                selection: args.selection,
                seed: args.seed,
                ..HioConfig::default()
            };
            let out = hio_recover(&y, Some(&r), &config, truth.as_ref().map(|t| t.view()))?;
            diagnostics["selection"] = json!(format!("{:?}", args.selection).to_lowercase());
            diagnostics["selected_iteration"] = json!(out.selected.iteration);
            diagnostics["selected_residual"] = json!(out.selected.residual);
            diagnostics["best_residual"] = json!(out.best_by_residual.residual);
            out.estimate
        }
    };
    diagnostics["runtime_ms"] = json!(start.elapsed().as_secs_f64() * 1e3);
    if let Some(t) = &truth {
        let eps = relative_error(estimate.view(), t.view())?;
        diagnostics["rel_err"] = json!(eps);
        println!("relative error {:.4} x 1e-4", eps * 1e4);
    }

    ensure_dir(&args.out)?;
    write_complex_csv(args.out.join("estimate.csv"), &estimate)?;
    write_json(&args.out.join("diagnostics.json"), &diagnostics)
}

fn sweep(args: SweepArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::from_json_file(path)?,
        None => ExperimentConfig::desk_scale(),
    };
    if let Some(image) = args.image {
        config.specimen = image;
    }
    if !args.reference.is_empty() {
        config.references = args.reference;
    }
    if !args.algorithm.is_empty() {
        config.algorithms = args.algorithm;
    }
    if !args.npp.is_empty() {
        config.npp = args.npp;
    }
    config.n = args.n.unwrap_or(config.n);
    config.m = args.m.unwrap_or(config.m);
    config.trials = args.trials.unwrap_or(config.trials);
    config.seed = args.seed.unwrap_or(config.seed);
    config.hio.selection = args.selection.unwrap_or(config.hio.selection);
    config.hio.iterations = args.iterations.unwrap_or(config.hio.iterations);
    config.hio.beta = args.beta.unwrap_or(config.hio.beta);
    config.workers = args.workers.or(config.workers);
    let out = args.out.or(config.output_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    config.output_dir = Some(out.clone());
    config.validate()?;

    let report = run_sweep(&config)?;
    report.write(&out)?;

    let fmt = |v: Option<f64>| v.map_or("NA".to_string(), |v| format!("{:.4}", v * 1e4));
    println!("{:<8} {:<12} {:>8} {:>12} {:>12} {:>12}", "alg", "reference", "npp", "mean", "std", "expected");
    for c in &report.cells {
        match &c.error {
            Some(e) => println!("{:<8} {:<12} {:>8} failed: {e}", c.algorithm.name(), c.reference, c.npp),
            None => println!(
                "{:<8} {:<12} {:>8} {:>12} {:>12} {:>12}",
                c.algorithm.name(),
                c.reference,
                c.npp,
                fmt(c.mean),
                fmt(c.std),
                fmt(c.expected_rel_err)
            ),
        }
    }
    println!("relative errors x 1e-4; report in {}", out.display());
    Ok(())
}

fn scaling(args: ScalingArgs) -> Result<()> {
    let s = match &args.reference {
        ReferenceSpec::Special(kind) if *kind != ReferenceKind::Custom => {
            scaling_factor_closed_form(*kind, args.n, args.m)?
        }
        spec => scaling_factor_general(&spec.build(args.n)?, args.m)?,
    };
    ensure_dir(&args.out)?;
    write_real_csv(args.out.join("scaling.csv"), s.data())?;

    let (along_rows, along_cols) = s.cross_sections();
    let mut text = String::from("k,s_k_0,s_0_k\n");
    for (k, (a, b)) in along_rows.iter().zip(&along_cols).enumerate() {
        text.push_str(&format!("{k},{a:.16e},{b:.16e}\n"));
    }
    let path = args.out.join("cross_sections.csv");
    fs::write(&path, text).map_err(|source| Error::Io { path, source })?;
    println!(
        "S_R for {} at n = {}, m = {}: min {:.6e}, max {:.6e}, floor 1/m^4 = {:.6e}",
        args.reference,
        args.n,
        args.m,
        s.min(),
        s.max(),
        s.lower_bound()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Forward(a) => forward(a),
        Command::Recover(a) => recover(a),
        Command::Sweep(a) => sweep(a),
        Command::Scaling(a) => scaling(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category().as_str());
            ExitCode::from(match e.category() {
                holoref::ErrorCategory::Validation => 2,
                holoref::ErrorCategory::Config => 3,
                holoref::ErrorCategory::Unsupported => 4,
                holoref::ErrorCategory::Format => 5,
                holoref::ErrorCategory::Io => 6,
            })
        }
    }
}
