use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mmcal::calibration::{calibrate_mspace, calibrate_ndim_grouped, embed_images_in_space};
use mmcal::experiment::{run_experiment, ExperimentConfig, ExperimentName, PmKind};
use mmcal::image::Image;
use mmcal::io::{self, AnyMatrix};
use mmcal::matched::{algorithm1, algorithm2, MatchConfig};
use mmcal::measurement::{
    measure, residual_error, NoiseModel, NoiseSource, SimulatedImage, SimulatedMatrix,
};
use mmcal::recovery::{fista_l1, RecoveryConfig};
use mmcal::rng::{derive_seed, NormalStream};
use mmcal::{synth, DenseMatrix, Error, Precision, Result, Scalar};

#[derive(Parser)]
#[command(
    name = "mmcal",
    version,
    about = "Matched and calibrated measurement matrices for mismatched compressed sensing"
)]
struct Cli {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Arithmetic precision.
    #[arg(long, global = true, value_parser = ["32", "64"])]
    precision: Option<String>,
    /// Output directory for experiments.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// TOML experiment config; its fields take precedence over flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic matrix or image.
    Generate {
        #[command(subcommand)]
        what: Generate,
    },
    /// Measure an image with a matrix: y = A x + noise.
    Measure {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        image: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Build a matched A_recv for one image against a simulated unknown system.
    Match(MatchArgs),
    /// Calibrate a simulated unknown matrix.
    Calibrate(CalibrateArgs),
    /// l1 recovery of an image from a measurement.
    Recover(RecoverArgs),
    /// Run one of the experiments.
    Exp(ExpArgs),
    /// Run the precision study.
    Precision(ExpOverrides),
    /// Convert between matrix formats (.mmcal, .csv) and PGM images.
    Convert { input: PathBuf, output: PathBuf },
}

#[derive(Subcommand)]
enum Generate {
    /// Gaussian matrix, optionally correlated with an existing one.
    Matrix {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        /// Correlate with this matrix using --rho.
        #[arg(long)]
        like: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        rho: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Synthetic phantom image.
    Image {
        #[arg(long, value_enum)]
        kind: Phantom,
        #[arg(long, default_value_t = 16)]
        height: usize,
        #[arg(long, default_value_t = 16)]
        width: usize,
        /// Level for `constant`, nonzero count for `sparse`.
        #[arg(long)]
        param: Option<f64>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Phantom {
    Constant,
    Disk,
    Checker,
    Gradient,
    Stripes,
    Blobs,
    Speckle,
    Sparse,
}

#[derive(Clone, Copy, ValueEnum)]
enum MatchAlg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long, value_enum, default_value = "1")]
    alg: MatchAlg,
    /// Known matrix A.
    #[arg(long)]
    known: PathBuf,
    /// Unknown matrix A_u of the simulated system.
    #[arg(long)]
    unknown: PathBuf,
    /// Unknown image x' of the simulated system.
    #[arg(long)]
    image: PathBuf,
    /// Pre-measure image; defaults to constant gray 0.5.
    #[arg(long)]
    pm: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Output A_recv.
    #[arg(short, long)]
    output: PathBuf,
    /// Optional `epoch,error` curve.
    #[arg(long)]
    curve: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CalibrationScheme {
    Mspace,
    Grouped,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(value_enum)]
    scheme: CalibrationScheme,
    #[arg(long)]
    known: PathBuf,
    #[arg(long)]
    unknown: PathBuf,
    /// Images to place in the calibrated subspace (mspace only).
    #[arg(long)]
    embed: Vec<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct RecoverArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    measurement: PathBuf,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = 2000)]
    max_iters: usize,
    /// Image height for PGM output; width follows from the matrix.
    #[arg(long)]
    height: Option<usize>,
    /// `.pgm` writes an image, anything else a matrix file.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ExpArgs {
    /// exp0, exp1, exp2, exp3 or precision.
    name: String,
    #[command(flatten)]
    overrides: ExpOverrides,
}

#[derive(Args)]
struct ExpOverrides {
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    pm_level: Option<f64>,
    #[arg(long)]
    pm_file: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e.kind();
            eprintln!(
                "error kind={kind} code={} type={} message={:?}",
                kind.exit_code(),
                e.name(),
                e.to_string()
            );
            ExitCode::from(kind.exit_code() as u8)
        }
    }
}

fn base_config(cli: &Cli, overrides: Option<&ExpOverrides>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(p) = &cli.precision {
        cfg.precision = p.parse().map_err(Error::Config)?;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    if let Some(o) = overrides {
        if let Some(s) = o.sigma {
            cfg.sigma_noise = s;
        }
        if let Some(e) = o.epochs {
            cfg.epochs = e;
        }
        if let Some(r) = o.rho {
            cfg.rho = r;
        }
        if let Some(l) = o.pm_level {
            cfg.pm_kind = PmKind::ConstantGray { level: l };
        }
        if let Some(p) = &o.pm_file {
            cfg.pm_kind = PmKind::FromFile { path: p.clone() };
        }
    }
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        cfg = cfg.overlay_toml(&text)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Exp(args) => {
            let name: ExperimentName = args.name.parse()?;
            exp(name, &base_config(&cli, Some(&args.overrides))?)
        }
        Command::Precision(o) => exp(ExperimentName::Precision, &base_config(&cli, Some(o))?),
        cmd => {
            let cfg = base_config(&cli, None)?;
            match cfg.precision {
                Precision::Bits32 => command::<f32>(cmd, &cfg),
                Precision::Bits64 => command::<f64>(cmd, &cfg),
            }
        }
    }
}

fn exp(name: ExperimentName, cfg: &ExperimentConfig) -> Result<()> {
    println!("seed={}", cfg.seed);
    let out = run_experiment(name, cfg)?;
    println!(
        "experiment={} dir={} artifacts={}",
        out.name,
        out.dir.display(),
        out.artifacts.len()
    );
    Ok(())
}

fn command<T: Scalar>(cmd: &Command, cfg: &ExperimentConfig) -> Result<()> {
    match cmd {
        Command::Generate { what } => generate(what, cfg),
        Command::Measure {
            matrix,
            image,
            sigma,
            output,
        } => {
            let a = io::load_matrix(matrix)?.to::<T>();
            let x = load_image_vector::<T>(image)?;
            let noise = NoiseModel {
                sigma: *sigma,
                seed: derive_seed(cfg.seed, "cli/measure"),
                stream: 0,
            };
            NoiseSource::new(*sigma, 0)?;
            let y = measure(&a, &x, &noise)?;
            io::save_matrix(output, &DenseMatrix::column_vector(&y))?;
            println!("seed={}", cfg.seed);
            Ok(())
        }
        Command::Match(args) => cmd_match::<T>(args, cfg),
        Command::Calibrate(args) => cmd_calibrate::<T>(args, cfg),
        Command::Recover(args) => cmd_recover::<T>(args),
        Command::Convert { input, output } => convert(input, output),
        Command::Exp(_) | Command::Precision(_) => unreachable!("dispatched in run"),
    }
}

fn generate(what: &Generate, cfg: &ExperimentConfig) -> Result<()> {
    println!("seed={}", cfg.seed);
    match what {
        Generate::Matrix {
            rows,
            cols,
            like,
            rho,
            output,
        } => {
            let mut rng = NormalStream::new(derive_seed(cfg.seed, "cli/generate/matrix"), 0);
            let m = match like {
                Some(p) => {
                    synth::correlated_matrix(&mut rng, &io::load_matrix(p)?.to::<f64>(), *rho)
                }
                None => synth::gaussian_matrix::<f64>(&mut rng, *rows, *cols),
            };
            match cfg.precision {
                Precision::Bits32 => io::save_matrix(output, &m.cast::<f32>()),
                Precision::Bits64 => io::save_matrix(output, &m),
            }
        }
        Generate::Image {
            kind,
            height,
            width,
            param,
            output,
        } => {
            let (h, w) = (*height, *width);
            let mut rng = NormalStream::new(derive_seed(cfg.seed, "cli/generate/image"), 0);
            let img = match kind {
                Phantom::Constant => synth::constant(h, w, param.unwrap_or(0.5)),
                Phantom::Disk => synth::disk(h, w, h.min(w) as f64 / 3.0, 0.9, 0.3),
                Phantom::Checker => synth::checker(h, w, (w / 4).max(1), 0.25, 0.75),
                Phantom::Gradient => synth::gradient(h, w, 0.1, 0.9),
                Phantom::Stripes => synth::stripes(h, w, param.unwrap_or(2.0), 0.0),
                Phantom::Blobs => synth::blobs(h, w, &mut rng),
                Phantom::Speckle => synth::speckle(h, w, 0.0, 1.0, &mut rng),
                Phantom::Sparse => synth::sparse(h, w, param.unwrap_or(5.0) as usize, &mut rng),
            };
            save_image(output, &img)
        }
    }
}

/// PGM, or a matrix file holding the image as its entries in row-major order.
fn load_image_vector<T: Scalar>(path: &Path) -> Result<Vec<T>> {
    if is_pgm(path) {
        Ok(io::load_pgm(path)?.to_vector())
    } else {
        Ok(io::load_matrix(path)?.to::<T>().into_vec())
    }
}

fn save_image(path: &Path, img: &Image) -> Result<()> {
    if is_pgm(path) {
        io::save_pgm(path, img)
    } else {
        io::save_matrix(
            path,
            &DenseMatrix::new(img.height(), img.width(), img.pixels().to_vec())?,
        )
    }
}

fn is_pgm(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
}

fn cmd_match<T: Scalar>(args: &MatchArgs, cfg: &ExperimentConfig) -> Result<()> {
    let a = io::load_matrix(&args.known)?.to::<T>();
    let a_u = io::load_matrix(&args.unknown)?.to::<T>();
    let x = load_image_vector::<T>(&args.image)?;
    let pm = match &args.pm {
        Some(p) => load_image_vector::<T>(p)?,
        None => vec![T::from_f64(0.5); a.cols()],
    };
    let y_noise = NoiseModel {
        sigma: args.sigma,
        seed: derive_seed(cfg.seed, "cli/match/y_prime"),
        stream: 0,
    };
    let y_prime = measure(&a_u, &x, &y_noise)?;
    let mut oracle = SimulatedImage::new(
        x.clone(),
        NoiseSource::new(args.sigma, derive_seed(cfg.seed, "cli/match/oracle"))?,
    );
    let mc = MatchConfig {
        epochs: args.epochs,
        ..MatchConfig::default()
    };
    let res = match args.alg {
        MatchAlg::One => algorithm1(&y_prime, &mut oracle, &a, &pm, &mc)?,
        MatchAlg::Two => algorithm2(&y_prime, &mut oracle, &a, &pm, &mc)?,
    };
    io::save_matrix(&args.output, &res.a_recv)?;
    if let Some(c) = &args.curve {
        let mut text = String::from("epoch,error\n");
        for (i, e) in res.trace.errors.iter().enumerate() {
            text.push_str(&format!("{},{}\n", i + 1, io::fmt_num(*e)));
        }
        io::atomic_write(c, text.as_bytes())?;
    }
    println!("seed={}", cfg.seed);
    println!(
        "epochs={} k_eps_estimate={} final_error={} match_error={} non_convergence={} unknown_measurements={}",
        res.epochs_run,
        res.k_eps_estimate,
        res.trace.last().unwrap_or(f64::NAN),
        residual_error(&y_prime, &res.a_recv.matvec(&x)?)?,
        res.non_convergence,
        oracle.calls()
    );
    Ok(())
}

fn cmd_calibrate<T: Scalar>(args: &CalibrateArgs, cfg: &ExperimentConfig) -> Result<()> {
    let a = io::load_matrix(&args.known)?.to::<T>();
    let a_u = io::load_matrix(&args.unknown)?.to::<T>();
    let mut oracle = SimulatedMatrix::new(
        a_u,
        NoiseSource::new(args.sigma, derive_seed(cfg.seed, "cli/calibrate"))?,
    );
    let cal = match args.scheme {
        CalibrationScheme::Mspace => {
            let images = args
                .embed
                .iter()
                .map(|p| load_image_vector::<T>(p))
                .collect::<Result<Vec<_>>>()?;
            calibrate_mspace(&embed_images_in_space(&a, &images)?, &mut oracle)?
        }
        CalibrationScheme::Grouped => {
            if !args.embed.is_empty() {
                return Err(Error::Config(
                    "--embed only applies to mspace calibration".into(),
                ));
            }
            calibrate_ndim_grouped(&a, &mut oracle)?
        }
    };
    io::save_matrix(&args.output, &cal.a_recv)?;
    println!("seed={}", cfg.seed);
    println!("unknown_measurements={}", cal.unknown_measure_count);
    Ok(())
}

fn cmd_recover<T: Scalar>(args: &RecoverArgs) -> Result<()> {
    let a = io::load_matrix(&args.matrix)?.to::<T>();
    let y = io::load_matrix(&args.measurement)?.to::<T>().into_vec();
    let rc = RecoveryConfig {
        tau: args.tau,
        max_iters: args.max_iters,
        ..RecoveryConfig::default()
    };
    let rec = fista_l1(&y, &a, &rc)?;
    let n = rec.x.len();
    let h = args
        .height
        .unwrap_or_else(|| (n as f64).sqrt().round() as usize)
        .max(1);
    if n % h != 0 {
        return Err(Error::Config(format!(
            "height {h} does not divide {n} pixels"
        )));
    }
    let img = Image::from_vector(h, n / h, &rec.x)?;
    if is_pgm(&args.output) {
        io::save_pgm(&args.output, &img.clamped())?;
    } else {
        io::save_matrix(&args.output, &DenseMatrix::column_vector(&rec.x))?;
    }
    println!(
        "iterations={} converged={} objective={} tau={}",
        rec.iterations, rec.converged, rec.objective, rec.tau
    );
    Ok(())
}

/// Matrix formats convert at their stored precision; PGM maps to an h x w matrix.
fn convert(input: &Path, output: &Path) -> Result<()> {
    match (is_pgm(input), is_pgm(output)) {
        (true, true) => io::save_pgm(output, &io::load_pgm(input)?),
        (true, false) => save_image(output, &io::load_pgm(input)?),
        (false, true) => {
            let m = io::load_matrix(input)?.to::<f64>();
            io::save_pgm(output, &Image::try_new(m.rows(), m.cols(), m.into_vec())?)
        }
        (false, false) => match io::load_matrix(input)? {
            AnyMatrix::F32(m) => io::save_matrix(output, &m),
            AnyMatrix::F64(m) => io::save_matrix(output, &m),
        },
    }
}
