//! `ntc` — train compression models, compress/decompress images, and
//! measure quality.
//!
//! Exit codes: 0 success, 2 usage/config error, 3 corrupt input,
//! 4 numeric failure. Progress and diagnostics go to standard error as
//! JSON lines; command results go to standard output or files.

use clap::{Args, Parser, Subcommand, ValueEnum};
use ntc_core::codec::{ModelContainer, ModelRegistry, TrainedModel};
use ntc_core::error::{NtcError, Result};
use ntc_core::imageio::{load_image, save_image};
use ntc_core::metrics::{ms_ssim_with_scales, psnr, PsnrPlane};
use ntc_core::trainer::{preprocess_dataset, train, PreprocessConfig, TrainConfig};
use ntc_core::transforms::{ArchitectureSpec, ColorMode};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ntc",
    version,
    about = "Nonlinear transform coding: learned image compression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Desk-scale grayscale network (configurable channels).
    DeskGray,
    /// Desk-scale RGB network (configurable channels).
    DeskRgb,
    /// Full-size grayscale reference network (128 channels).
    ReferenceGray,
    /// Full-size RGB reference network (192 channels).
    ReferenceRgb,
}

#[derive(Args)]
struct TrainArgs {
    /// Rate-distortion trade-off weight.
    #[arg(long)]
    lambda: f64,
    /// Index under which this model is stored and referenced by files.
    #[arg(long, default_value_t = 0)]
    lambda_index: u16,
    /// Directory of training images (PNG/PGM/PPM).
    #[arg(long)]
    data: PathBuf,
    /// Output model container.
    #[arg(long)]
    out: PathBuf,
    /// Append to an existing container instead of overwriting.
    #[arg(long)]
    append: bool,
    #[arg(long, value_enum, default_value_t = Preset::DeskGray)]
    preset: Preset,
    /// Channel count for the desk presets.
    #[arg(long, default_value_t = 8)]
    channels: usize,
    /// Training patch size (multiple of 16).
    #[arg(long, default_value_t = 64)]
    patch: usize,
    #[arg(long, default_value_t = 2000)]
    steps: usize,
    #[arg(long, default_value_t = 8)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Initial Adam step size.
    #[arg(long, default_value_t = 1e-4)]
    step_size: f64,
    /// SGD step for the density models.
    #[arg(long, default_value_t = 0.05)]
    density_step: f64,
    /// Density range adaptation cadence in steps.
    #[arg(long, default_value_t = 200)]
    adapt_every: usize,
    /// Density fitting objective. The default follows the training recipe
    /// literally (expected likelihood); log-likelihood is the documented
    /// alternative.
    #[arg(long, value_enum, default_value_t = DensityObjective::Likelihood)]
    density_objective: DensityObjective,
    /// Write the full training log (JSON lines) here.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DensityObjective {
    Likelihood,
    LogLikelihood,
}

#[derive(Args)]
struct CompressArgs {
    /// Model container(s).
    #[arg(short = 'm', long = "model", required = true)]
    models: Vec<PathBuf>,
    /// Lambda index selecting the operating point.
    #[arg(short = 'l', long, default_value_t = 0)]
    lambda_index: u16,
    input: PathBuf,
    output: PathBuf,
}

#[derive(Args)]
struct DecompressArgs {
    #[arg(short = 'm', long = "model", required = true)]
    models: Vec<PathBuf>,
    input: PathBuf,
    output: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Reference image.
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Image under test.
    #[arg(long = "test")]
    test: PathBuf,
    /// MS-SSIM scale count (5 needs dims >= 176).
    #[arg(long, default_value_t = 5)]
    scales: usize,
}

#[derive(Args)]
struct RdCurveArgs {
    #[arg(short = 'm', long = "model", required = true)]
    models: Vec<PathBuf>,
    /// Directory of evaluation images.
    #[arg(long)]
    images: PathBuf,
    /// Comma-separated lambda indices (defaults to every loaded model).
    #[arg(long, value_delimiter = ',')]
    lambdas: Vec<u16>,
    /// Report output path (JSON).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 5)]
    scales: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model at one rate-distortion trade-off.
    Train(TrainArgs),
    /// Compress an image to an NTCB file.
    Compress(CompressArgs),
    /// Decompress an NTCB file to an image.
    Decompress(DecompressArgs),
    /// Compare two images (PSNR and MS-SSIM).
    Eval(EvalArgs),
    /// Compress an image set at several operating points and report
    /// rate/PSNR/MS-SSIM averages.
    Rdcurve(RdCurveArgs),
}

fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()),
                Some(ref e) if ["png", "pgm", "ppm", "pnm"].contains(&e.as_str())
            )
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(NtcError::Usage(format!(
            "no PNG/PGM/PPM images found in {}",
            dir.display()
        )));
    }
    Ok(paths)
}

fn run_train(args: TrainArgs) -> Result<()> {
    let spec = match args.preset {
        Preset::DeskGray => ArchitectureSpec::with_channels(args.channels, ColorMode::Grayscale),
        Preset::DeskRgb => ArchitectureSpec::with_channels(args.channels, ColorMode::Rgb),
        Preset::ReferenceGray => ArchitectureSpec::reference_grayscale(),
        Preset::ReferenceRgb => ArchitectureSpec::reference_rgb(),
    };
    let images: Vec<_> = list_images(&args.data)?
        .iter()
        .map(|p| load_image(p))
        .collect::<Result<_>>()?;
    let pre = PreprocessConfig {
        patch_size: args.patch,
        ..PreprocessConfig::default()
    };
    let patches = preprocess_dataset(&images, &pre, args.seed)?;
    for skipped in &patches.skipped {
        eprintln!(
            "{}",
            serde_json::json!({"event": "skipped_image", "index": skipped.index, "reason": skipped.reason})
        );
    }
    if patches.patches.is_empty() {
        return Err(NtcError::Usage(
            "no usable training patches after preprocessing".into(),
        ));
    }
    eprintln!(
        "{}",
        serde_json::json!({"event": "dataset", "patches": patches.patches.len(), "patch_size": args.patch})
    );

    let mut config = TrainConfig::new(args.lambda);
    config.max_steps = args.steps;
    config.batch_size = args.batch;
    config.seed = args.seed;
    config.initial_step = args.step_size;
    config.density_fit_step = args.density_step;
    config.range_adapt_every = args.adapt_every;
    config.fit_objective = match args.density_objective {
        DensityObjective::Likelihood => ntc_core::density::FitObjective::Likelihood,
        DensityObjective::LogLikelihood => ntc_core::density::FitObjective::LogLikelihood,
    };

    let outcome = train(&config, &patches.patches, &spec)?;
    for record in outcome.log.iter().step_by(100) {
        eprintln!("{}", serde_json::to_string(record).unwrap());
    }
    if let Some(last) = outcome.log.last() {
        eprintln!("{}", serde_json::to_string(last).unwrap());
    }
    if outcome.diverged {
        return Err(NtcError::Numeric(
            "training diverged; last stable snapshot not saved".into(),
        ));
    }
    if let Some(log_path) = &args.log {
        let mut f = std::fs::File::create(log_path)?;
        for record in &outcome.log {
            writeln!(f, "{}", serde_json::to_string(record).unwrap())?;
        }
    }

    let model = TrainedModel::from_parts(
        args.lambda_index,
        args.lambda,
        outcome.analysis,
        outcome.synthesis,
        outcome.densities,
    )?;
    let mut container = if args.append && args.out.exists() {
        let existing = ModelContainer::load(&args.out)?;
        if existing.spec != spec {
            return Err(NtcError::Config(
                "existing container was built for a different architecture".into(),
            ));
        }
        existing
    } else {
        ModelContainer::new(spec)
    };
    container.push_model(model)?;
    container.save(&args.out)?;
    eprintln!(
        "{}",
        serde_json::json!({"event": "saved", "path": args.out.display().to_string(), "models": container.models.len()})
    );
    Ok(())
}

fn run_compress(args: CompressArgs) -> Result<()> {
    let registry = ModelRegistry::load_all(&args.models)?;
    let image = load_image(&args.input)?;
    let bytes = ntc_core::codec::compress(&image, args.lambda_index, &registry)?;
    std::fs::write(&args.output, &bytes)?;
    let pixels = (image.width * image.height) as f64;
    eprintln!(
        "{}",
        serde_json::json!({
            "event": "compressed",
            "bytes": bytes.len(),
            "bpp": 8.0 * bytes.len() as f64 / pixels,
        })
    );
    Ok(())
}

fn run_decompress(args: DecompressArgs) -> Result<()> {
    let registry = ModelRegistry::load_all(&args.models)?;
    let bytes = std::fs::read(&args.input)?;
    let image = ntc_core::codec::decompress(&bytes, &registry)?;
    save_image(&args.output, &image)?;
    eprintln!(
        "{}",
        serde_json::json!({"event": "decompressed", "width": image.width, "height": image.height})
    );
    Ok(())
}

fn json_f64(v: f64) -> serde_json::Value {
    if v.is_finite() {
        serde_json::json!(v)
    } else {
        serde_json::Value::Null
    }
}

fn run_eval(args: EvalArgs) -> Result<()> {
    let reference = load_image(&args.reference)?;
    let test = load_image(&args.test)?;
    let mut report = serde_json::Map::new();
    if reference.channels == 1 {
        report.insert(
            "psnr_db".into(),
            json_f64(psnr(&reference, &test, PsnrPlane::Gray)?),
        );
    } else {
        report.insert(
            "psnr_luma_db".into(),
            json_f64(psnr(&reference, &test, PsnrPlane::Luma)?),
        );
        report.insert(
            "psnr_chroma_db".into(),
            json_f64(psnr(&reference, &test, PsnrPlane::Chroma)?),
        );
    }
    report.insert(
        "ms_ssim".into(),
        json_f64(ms_ssim_with_scales(&reference, &test, args.scales)?),
    );
    println!("{}", serde_json::Value::Object(report));
    Ok(())
}

fn run_rdcurve(args: RdCurveArgs) -> Result<()> {
    let registry = ModelRegistry::load_all(&args.models)?;
    let images: Vec<_> = list_images(&args.images)?
        .iter()
        .map(|p| load_image(p))
        .collect::<Result<_>>()?;
    let lambdas = if args.lambdas.is_empty() {
        registry.lambda_indices()
    } else {
        args.lambdas.clone()
    };
    let points = ntc_core::codec::rd_curve(&images, &registry, &lambdas, args.scales)?;
    let json = serde_json::to_string_pretty(&points).unwrap();
    std::fs::write(&args.out, &json)?;
    println!("{json}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => run_train(args),
        Command::Compress(args) => run_compress(args),
        Command::Decompress(args) => run_decompress(args),
        Command::Eval(args) => run_eval(args),
        Command::Rdcurve(args) => run_rdcurve(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", serde_json::json!({"event": "error", "message": e.to_string()}));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
