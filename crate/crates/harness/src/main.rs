use std::error::Error as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use credal_core::estimation::Regime;
use credal_harness::config::CertificateParams;
use credal_harness::{compute_certificate, run, ExperimentConfig, ExperimentKind, HarnessError, Preset, Result};

/// Structured credal set experiments.
///
/// Runs one experiment and writes `rows.csv` and `summary.json` into the
/// output directory. `credal certificate --annotations FILE --delta D`
/// prints a diameter certificate for an annotation file as JSON.
#[derive(Parser, Debug)]
#[command(name = "credal", version)]
struct Cli {
    /// gating_curve, bounds_sweep, diameter_ablation, noise_ablation,
    /// sample_complexity, mechanism_complexity, minimax_demo, dro_train or certificate.
    #[arg(value_parser = parse_kind)]
    experiment: ExperimentKind,

    /// TOML experiment config; optional when --preset is given.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory; required except for certificate.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long)]
    seed: Option<u64>,

    #[arg(long, value_enum)]
    preset: Option<Preset>,

    /// Failure probability for Hoeffding radii.
    #[arg(long)]
    delta: Option<f64>,

    /// Worker threads; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,

    /// Annotation file (certificate only).
    #[arg(long)]
    annotations: Option<PathBuf>,

    /// Certificate regime (certificate only).
    #[arg(long, value_parser = parse_regime)]
    regime: Option<Regime>,

    /// Statistical term added to the certified penalty (certificate only).
    #[arg(long)]
    eps_star: Option<f64>,
}

fn parse_kind(s: &str) -> std::result::Result<ExperimentKind, String> {
    s.replace('-', "_").parse().map_err(|e: HarnessError| e.to_string())
}

fn parse_regime(s: &str) -> std::result::Result<Regime, String> {
    s.replace('-', "_").parse().map_err(|e: credal_core::CredalError| e.to_string())
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None if cli.preset.is_some() || cli.experiment == ExperimentKind::Certificate => {
            ExperimentConfig::empty(cli.experiment)
        }
        None => {
            return Err(HarnessError::Config(
                "give --config <file> or --preset paper|desk".into(),
            ))
        }
    };
    if cfg.experiment != cli.experiment {
        return Err(HarnessError::Config(format!(
            "config describes {} but {} was requested",
            cfg.experiment, cli.experiment
        )));
    }
    if let Some(p) = cli.preset {
        cfg.preset = Some(p);
    }
    if cli.experiment == ExperimentKind::Certificate {
        let mut params = cfg.certificate.take();
        if let Some(path) = &cli.annotations {
            params = Some(CertificateParams {
                annotations: path.clone(),
                regime: params.as_ref().and_then(|p| p.regime),
                eps_star: params.as_ref().and_then(|p| p.eps_star),
            });
        }
        let mut params =
            params.ok_or_else(|| HarnessError::Config("certificate needs --annotations <file>".into()))?;
        if cli.regime.is_some() {
            params.regime = cli.regime;
        }
        if cli.eps_star.is_some() {
            params.eps_star = cli.eps_star;
        }
        cfg.certificate = Some(params);
    } else if cli.annotations.is_some() || cli.regime.is_some() || cli.eps_star.is_some() {
        return Err(HarnessError::Config(
            "--annotations, --regime and --eps-star apply to certificate only".into(),
        ));
    }
    cfg.fill_from_preset()?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(delta) = cli.delta {
        cfg.delta = delta;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main_inner(cli: &Cli) -> Result<()> {
    let cfg = build_config(cli)?;
    if cli.experiment == ExperimentKind::Certificate {
        let (cert, _) = compute_certificate(&cfg)?;
        println!("{}", serde_json::to_string_pretty(&cert)?);
        if let Some(out) = &cli.out {
            run(&cfg, out)?;
        }
        return Ok(());
    }
    let out = cli
        .out
        .as_ref()
        .ok_or_else(|| HarnessError::Config("--out <dir> is required".into()))?;
    let (report, written) = run(&cfg, out)?;
    println!(
        "{}: {} rows, config {}\n  {}\n  {}",
        cfg.experiment,
        report.rows.len(),
        report.config_hash,
        written.rows.display(),
        written.summary.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            eprintln!("error: cannot start {jobs} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    match main_inner(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = e.source();
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(if matches!(e, HarnessError::Config(_)) { 2 } else { 1 })
        }
    }
}
