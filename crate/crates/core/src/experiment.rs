//! Desk-scale experiment harness: configuration, scenes and the Exp0–Exp3 and
//! precision runs. Every run writes CSV/PGM/MMCAL1 artifacts under
//! `output_dir/<experiment>/` and removes them again if it fails part way.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::calibration::{calibrate_mspace, coordinates, embed_images_in_space, CalibrationLayout};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::io::{self, fmt_num};
use crate::matched::{algorithm1, algorithm2, MatchConfig, MatchedSolutionResult};
use crate::measurement::{
    measure, psnr, residual_error, NoiseModel, NoiseSource, Psnr, SimulatedImage, SimulatedMatrix,
};
use crate::mismatch::{k_epsilon, sigma_special};
use crate::numeric::{cast_vec, DenseMatrix, Precision, Scalar};
use crate::precision_lab::{
    rank_one_lambda_stats, run_precision_study, Algorithm, PrecisionReport, StudyInput,
};
use crate::recovery::{fista_l1, RecoveryConfig};
use crate::rng::{derive_seed, NormalStream};
use crate::synth;

/// Noise levels of the noise sweep.
pub const NOISE_SWEEP: [f64; 6] = [0.0, 0.5, 1.0, 1.5, 2.0, 5.0];
/// Noise levels of the calibration table.
pub const CALIBRATION_SWEEP: [f64; 5] = [0.0, 0.5, 1.0, 1.5, 2.0];
/// Number of bundled images embedded in the calibrated subspace.
pub const IN_SPAN_COUNT: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PmKind {
    ConstantGray { level: f64 },
    FromFile { path: PathBuf },
}

impl PmKind {
    fn label(&self) -> &'static str {
        match self {
            PmKind::ConstantGray { .. } => "gray",
            PmKind::FromFile { .. } => "file",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub m: usize,
    pub n: usize,
    pub h: usize,
    pub w: usize,
    pub sigma_noise: f64,
    #[serde(with = "seed_repr")]
    pub seed: u64,
    pub epochs: usize,
    pub precision: Precision,
    pub output_dir: PathBuf,
    /// Correlation between the unknown and the known matrix.
    pub rho: f64,
    pub pm_kind: PmKind,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            m: 120,
            n: 256,
            h: 16,
            w: 16,
            sigma_noise: 0.0,
            seed: 0,
            epochs: 100,
            precision: Precision::Bits64,
            output_dir: PathBuf::from("mmcal-out"),
            rho: 0.0,
            pm_kind: PmKind::ConstantGray { level: 0.5 },
        }
    }
}

/// TOML integers are signed, so seeds above `i64::MAX` are written as strings.
mod seed_repr {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*v) {
            Ok(i) => s.serialize_i64(i),
            Err(_) => s.serialize_str(&v.to_string()),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Int(u64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Int(v) => Ok(v),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        for (name, v) in [
            ("m", self.m),
            ("n", self.n),
            ("h", self.h),
            ("w", self.w),
            ("epochs", self.epochs),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.h.checked_mul(self.w) != Some(self.n) {
            return bad(format!(
                "h*w = {}*{} must equal n = {}",
                self.h, self.w, self.n
            ));
        }
        if self.m >= self.n {
            return bad(format!(
                "m = {} must be smaller than n = {}",
                self.m, self.n
            ));
        }
        if !(self.sigma_noise >= 0.0 && self.sigma_noise.is_finite()) {
            return bad(format!(
                "sigma_noise must be finite and >= 0, got {}",
                self.sigma_noise
            ));
        }
        if self.rho.is_nan() || self.rho.abs() > 1.0 {
            return bad(format!("rho must lie in [-1, 1], got {}", self.rho));
        }
        if let PmKind::ConstantGray { level } = self.pm_kind {
            if !level.is_finite() {
                return bad(format!("pm level must be finite, got {level}"));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Replaces the fields present in `text` and keeps the rest.
    pub fn overlay_toml(&self, text: &str) -> Result<Self> {
        let overlay: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut base = toml::Table::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        base.extend(overlay);
        let cfg: Self = base
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentName {
    Exp0,
    Exp1,
    Exp2,
    Exp3,
    Precision,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 5] = [
        ExperimentName::Exp0,
        ExperimentName::Exp1,
        ExperimentName::Exp2,
        ExperimentName::Exp3,
        ExperimentName::Precision,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ExperimentName::Exp0 => "exp0",
            ExperimentName::Exp1 => "exp1",
            ExperimentName::Exp2 => "exp2",
            ExperimentName::Exp3 => "exp3",
            ExperimentName::Precision => "precision",
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ExperimentName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown experiment '{s}' (expected exp0..exp3 or precision)"
                ))
            })
    }
}

/// Known matrix, unknown matrix, bundled images and pre-measure image of a configuration.
#[derive(Debug, Clone)]
pub struct Scene<T> {
    pub a: DenseMatrix<T>,
    pub a_u: DenseMatrix<T>,
    pub images: Vec<(String, Vec<T>)>,
    pub pm: Vec<T>,
}

impl Scene<f64> {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = NormalStream::new(derive_seed(cfg.seed, "scene/known"), 0);
        let a = synth::gaussian_matrix(&mut rng, cfg.m, cfg.n);
        let mut rng = NormalStream::new(derive_seed(cfg.seed, "scene/unknown"), 0);
        let a_u = synth::correlated_matrix(&mut rng, &a, cfg.rho);
        let images = synth::image_set(cfg.h, cfg.w, derive_seed(cfg.seed, "scene/images"))
            .into_iter()
            .map(|(name, img)| (name, img.to_vector()))
            .collect();
        let pm = match &cfg.pm_kind {
            PmKind::ConstantGray { level } => vec![*level; cfg.n],
            PmKind::FromFile { path } => {
                let img = io::load_pgm(path)?;
                if (img.height(), img.width()) != (cfg.h, cfg.w) {
                    return Err(Error::Config(format!(
                        "pm image {} is {}x{}, expected {}x{}",
                        path.display(),
                        img.height(),
                        img.width(),
                        cfg.h,
                        cfg.w
                    )));
                }
                img.to_vector()
            }
        };
        Ok(Self { a, a_u, images, pm })
    }

    pub fn cast<T: Scalar>(&self) -> Scene<T> {
        Scene {
            a: self.a.cast(),
            a_u: self.a_u.cast(),
            images: self
                .images
                .iter()
                .map(|(n, v)| (n.clone(), cast_vec(v)))
                .collect(),
            pm: cast_vec(&self.pm),
        }
    }
}

impl<T: Scalar> Scene<T> {
    pub fn image(&self, name: &str) -> Result<&[T]> {
        self.images
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::Config(format!("no bundled image named {name}")))
    }
}

/// One matched-solution run against a simulated unknown image.
#[derive(Debug, Clone)]
pub struct MatchRun<T> {
    pub y_prime: Vec<T>,
    pub result: MatchedSolutionResult<T>,
    /// `residual_error(y', A_recv x')`.
    pub match_error: f64,
    /// `k_eps` from the exact formula.
    pub k_eps: f64,
}

/// `y' = A_u x + eps` with the noise stream of a cell.
pub fn unknown_measurement<T: Scalar>(
    a_u: &DenseMatrix<T>,
    x: &[T],
    sigma: f64,
    cell_seed: u64,
) -> Result<Vec<T>> {
    let noise = NoiseModel {
        sigma,
        seed: derive_seed(cell_seed, "y_prime"),
        stream: 0,
    };
    measure(a_u, x, &noise)
}

/// Runs algorithm 1 or 2 for image `x` with pre-measure image `pm`.
pub fn match_image<T: Scalar>(
    scene: &Scene<T>,
    x: &[T],
    pm: &[T],
    alg: Algorithm,
    sigma: f64,
    epochs: usize,
    cell_seed: u64,
) -> Result<MatchRun<T>> {
    let y_prime = unknown_measurement(&scene.a_u, x, sigma, cell_seed)?;
    let mut oracle = SimulatedImage::new(
        x.to_vec(),
        NoiseSource::new(sigma, derive_seed(cell_seed, "oracle"))?,
    );
    let cfg = MatchConfig {
        epochs,
        ..MatchConfig::default()
    };
    let result = match alg {
        Algorithm::Alg1 => algorithm1(&y_prime, &mut oracle, &scene.a, pm, &cfg)?,
        Algorithm::Alg2 => algorithm2(&y_prime, &mut oracle, &scene.a, pm, &cfg)?,
        Algorithm::Alg3 => {
            return Err(Error::Precondition {
                op: "match_image",
                detail: "algorithm 3 is a calibration, not a per-image match".into(),
            })
        }
    };
    let match_error = residual_error(&y_prime, &result.a_recv.matvec(x)?)?.as_f64();
    let y0 = scene.a.matvec(pm)?;
    let k_eps = k_epsilon(&y0, &sigma_special(&scene.a)?, &scene.a, pm, x)?
        .value()
        .as_f64();
    Ok(MatchRun {
        y_prime,
        result,
        match_error,
        k_eps,
    })
}

/// Stationary mean absolute error `sigma sqrt(2/pi) sqrt((1-k)/(1+k))`; NaN when `|k| >= 1`.
pub fn predicted_noise_floor(sigma: f64, k_eps: f64) -> f64 {
    if k_eps.abs() >= 1.0 {
        return f64::NAN;
    }
    sigma * (2.0 / std::f64::consts::PI).sqrt() * ((1.0 - k_eps) / (1.0 + k_eps)).sqrt()
}

/// ℓ1 recovery with default settings, as an image plus its PSNR against `truth`.
pub fn recover_image<T: Scalar>(
    y: &[T],
    a: &DenseMatrix<T>,
    truth: &[T],
    h: usize,
    w: usize,
) -> Result<(Image, Psnr)> {
    let rec = fista_l1(y, a, &RecoveryConfig::default())?;
    let q = psnr(truth, &rec.x)?;
    Ok((Image::from_vector(h, w, &rec.x)?.clamped(), q))
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Files written by one run, removed again on failure.
struct Artifacts {
    root: PathBuf,
    files: Vec<PathBuf>,
    dirs: Vec<PathBuf>,
}

impl Artifacts {
    fn new(root: PathBuf) -> Result<Self> {
        let mut a = Self {
            root: root.clone(),
            files: Vec::new(),
            dirs: Vec::new(),
        };
        a.ensure_dir(&root)?;
        Ok(a)
    }

    fn ensure_dir(&mut self, dir: &Path) -> Result<()> {
        let mut missing = Vec::new();
        let mut cur = Some(dir);
        while let Some(d) = cur {
            if d.as_os_str().is_empty() || d.exists() {
                break;
            }
            missing.push(d.to_path_buf());
            cur = d.parent();
        }
        for d in missing.into_iter().rev() {
            fs::create_dir(&d).map_err(|e| Error::io(&d, e))?;
            self.dirs.push(d);
        }
        Ok(())
    }

    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            self.ensure_dir(parent)?;
        }
        io::atomic_write(&path, bytes)?;
        self.files.push(path);
        Ok(())
    }

    fn csv(&mut self, rel: &str, header: &str, rows: &[String]) -> Result<()> {
        let mut text = String::with_capacity(header.len() + rows.len() * 32);
        text.push_str(header);
        text.push('\n');
        for r in rows {
            text.push_str(r);
            text.push('\n');
        }
        self.write(rel, text.as_bytes())
    }

    fn curve(&mut self, rel: &str, errors: &[f64]) -> Result<()> {
        let rows: Vec<String> = errors
            .iter()
            .enumerate()
            .map(|(i, &e)| format!("{},{}", i + 1, fmt_num(e)))
            .collect();
        self.csv(rel, "epoch,error", &rows)
    }

    fn matrix<T: Scalar>(&mut self, rel: &str, m: &DenseMatrix<T>) -> Result<()> {
        self.write(rel, &io::encode_matrix(m)?)
    }

    fn vector<T: Scalar>(&mut self, rel: &str, v: &[T]) -> Result<()> {
        self.matrix(rel, &DenseMatrix::column_vector(v))
    }

    fn pgm(&mut self, rel: &str, image: &Image) -> Result<()> {
        self.write(rel, &io::encode_pgm(image))
    }

    fn discard(self) {
        for f in self.files.iter().rev() {
            let _ = fs::remove_file(f);
        }
        for d in self.dirs.iter().rev() {
            let _ = fs::remove_dir(d);
        }
    }

    fn relative_files(&self, base: &Path) -> Vec<PathBuf> {
        self.files
            .iter()
            .map(|f| f.strip_prefix(base).unwrap_or(f).to_path_buf())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub name: ExperimentName,
    pub seed: u64,
    /// Directory holding this run's artifacts.
    pub dir: PathBuf,
    /// Artifact paths relative to `dir`.
    pub artifacts: Vec<PathBuf>,
}

/// Runs one experiment at `cfg.precision` (the precision study always runs both).
pub fn run_experiment(name: ExperimentName, cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let scene = Scene::build(cfg)?;
    let dir = cfg.output_dir.join(name.label());
    let mut art = Artifacts::new(dir.clone())?;
    let res = match (name, cfg.precision) {
        (ExperimentName::Precision, _) => exp_precision(cfg, &scene, &mut art),
        (_, Precision::Bits32) => run_at::<f32>(name, cfg, &scene.cast(), &mut art),
        (_, Precision::Bits64) => run_at::<f64>(name, cfg, &scene, &mut art),
    };
    match res {
        Ok(()) => Ok(ExperimentOutcome {
            name,
            seed: cfg.seed,
            artifacts: art.relative_files(&dir),
            dir,
        }),
        Err(e) => {
            art.discard();
            Err(e)
        }
    }
}

fn run_at<T: Scalar>(
    name: ExperimentName,
    cfg: &ExperimentConfig,
    scene: &Scene<T>,
    art: &mut Artifacts,
) -> Result<()> {
    art.matrix("known.mmcal", &scene.a)?;
    art.matrix("unknown.mmcal", &scene.a_u)?;
    match name {
        ExperimentName::Exp0 => exp0(cfg, scene, art),
        ExperimentName::Exp1 => exp1(cfg, scene, art),
        ExperimentName::Exp2 => exp2(cfg, scene, art),
        ExperimentName::Exp3 => exp3(cfg, scene, art),
        ExperimentName::Precision => unreachable!("handled by run_experiment"),
    }
}

const MATCHED: [Algorithm; 2] = [Algorithm::Alg1, Algorithm::Alg2];

/// Error curves of algorithms 1 and 2 for three pre-measure images.
fn exp0<T: Scalar>(cfg: &ExperimentConfig, scene: &Scene<T>, art: &mut Artifacts) -> Result<()> {
    let x = scene.image("blobs-a")?;
    let mut rng = NormalStream::new(derive_seed(cfg.seed, "exp0/speckle"), 0);
    let pms: Vec<(&str, Vec<T>)> = vec![
        (cfg.pm_kind.label(), scene.pm.clone()),
        (
            "stripes",
            synth::stripes(cfg.h, cfg.w, 3.0, 0.0).to_vector(),
        ),
        (
            "speckle",
            synth::speckle(cfg.h, cfg.w, 0.3, 0.7, &mut rng).to_vector(),
        ),
    ];
    let mut rows = Vec::new();
    for (pm_name, pm) in &pms {
        for alg in MATCHED {
            let cell = derive_seed(cfg.seed, &format!("exp0/{pm_name}/{alg}"));
            let run = match_image(scene, x, pm, alg, cfg.sigma_noise, cfg.epochs, cell)?;
            art.curve(
                &format!("curve_{alg}_{pm_name}.csv"),
                &run.result.trace.errors,
            )?;
            rows.push(format!(
                "{pm_name},{alg},{},{},{},{},{},{}",
                fmt_num(run.k_eps),
                fmt_num(run.result.k_eps_estimate),
                fmt_num(run.result.trace.last().unwrap_or(f64::NAN)),
                fmt_num(run.match_error),
                run.result.epochs_run,
                run.result.non_convergence
            ));
        }
    }
    art.csv(
        "summary.csv",
        "pm,algorithm,k_eps,k_eps_estimate,final_trace_error,match_error,epochs_run,non_convergence",
        &rows,
    )
}

/// Matched solutions and restorations for every bundled image.
fn exp1<T: Scalar>(cfg: &ExperimentConfig, scene: &Scene<T>, art: &mut Artifacts) -> Result<()> {
    let mut rows = Vec::new();
    for (name, x) in &scene.images {
        art.pgm(
            &format!("truth_{name}.pgm"),
            &Image::from_vector(cfg.h, cfg.w, x)?.clamped(),
        )?;
        let mut mismatched_psnr = None;
        for alg in MATCHED {
            let cell = derive_seed(cfg.seed, &format!("exp1/{name}/{alg}"));
            let run = match_image(scene, x, &scene.pm, alg, cfg.sigma_noise, cfg.epochs, cell)?;
            let (img, q) = recover_image(&run.y_prime, &run.result.a_recv, x, cfg.h, cfg.w)?;
            art.pgm(&format!("restored_{alg}_{name}.pgm"), &img)?;
            if mismatched_psnr.is_none() {
                let (img, q) = recover_image(&run.y_prime, &scene.a, x, cfg.h, cfg.w)?;
                art.pgm(&format!("mismatched_{name}.pgm"), &img)?;
                mismatched_psnr = Some(q);
            }
            let run_dir = format!("runs/{alg}_{name}");
            art.matrix(&format!("{run_dir}/a_recv.mmcal"), &run.result.a_recv)?;
            art.vector(&format!("{run_dir}/y_prime.mmcal"), &run.y_prime)?;
            art.vector(&format!("{run_dir}/x_true.mmcal"), x)?;
            art.curve(&format!("{run_dir}/curve.csv"), &run.result.trace.errors)?;
            rows.push(format!(
                "{name},{alg},{},{},{q},{}",
                fmt_num(run.k_eps),
                fmt_num(run.match_error),
                mismatched_psnr.unwrap()
            ));
        }
    }
    art.csv(
        "errors.csv",
        "image,algorithm,k_eps,match_error,psnr_matched,psnr_mismatched",
        &rows,
    )
}

/// Noise sweep over every bundled image.
fn exp2<T: Scalar>(cfg: &ExperimentConfig, scene: &Scene<T>, art: &mut Artifacts) -> Result<()> {
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for sigma in NOISE_SWEEP {
        for alg in MATCHED {
            let mut errors = Vec::new();
            for (name, x) in &scene.images {
                let cell = derive_seed(cfg.seed, &format!("exp2/sigma={sigma}/{name}/{alg}"));
                let run = match_image(scene, x, &scene.pm, alg, sigma, cfg.epochs, cell)?;
                let (img, q) = recover_image(&run.y_prime, &run.result.a_recv, x, cfg.h, cfg.w)?;
                art.pgm(&format!("restored_{alg}_{name}_sigma{sigma}.pgm"), &img)?;
                let run_dir = format!("runs/sigma{sigma}_{alg}_{name}");
                art.matrix(&format!("{run_dir}/a_recv.mmcal"), &run.result.a_recv)?;
                art.vector(&format!("{run_dir}/y_prime.mmcal"), &run.y_prime)?;
                art.vector(&format!("{run_dir}/x_true.mmcal"), x)?;
                rows.push(format!(
                    "{sigma},{name},{alg},{},{},{},{q}",
                    fmt_num(run.k_eps),
                    fmt_num(run.match_error),
                    fmt_num(predicted_noise_floor(sigma, run.k_eps))
                ));
                errors.push(run.match_error);
            }
            summary.push(format!("{sigma},{alg},{}", fmt_num(median(&mut errors))));
        }
    }
    art.csv(
        "errors.csv",
        "sigma,image,algorithm,k_eps,match_error,predicted_floor,psnr",
        &rows,
    )?;
    art.csv(
        "summary.csv",
        "sigma,algorithm,median_match_error",
        &summary,
    )
}

/// Subspace calibration with embedded images; in-span versus out-of-span errors.
fn exp3<T: Scalar>(cfg: &ExperimentConfig, scene: &Scene<T>, art: &mut Artifacts) -> Result<()> {
    let embedded: Vec<Vec<T>> = scene.images[..IN_SPAN_COUNT.min(scene.images.len())]
        .iter()
        .map(|(_, x)| x.clone())
        .collect();
    let known = embed_images_in_space(&scene.a, &embedded)?;
    art.matrix("known_embedded.mmcal", &known)?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for sigma in CALIBRATION_SWEEP {
        let cal_seed = derive_seed(cfg.seed, &format!("exp3/sigma={sigma}/calibration"));
        let mut oracle =
            SimulatedMatrix::new(scene.a_u.clone(), NoiseSource::new(sigma, cal_seed)?);
        let cal = calibrate_mspace(&known, &mut oracle)?;
        let CalibrationLayout::Subspace(basis) = &cal.layout else {
            unreachable!("subspace calibration")
        };
        art.matrix(&format!("a_recv_sigma{sigma}.mmcal"), &cal.a_recv)?;
        let (mut max_in, mut min_out) = (0.0f64, f64::INFINITY);
        for (name, x) in &scene.images {
            let cell = derive_seed(cfg.seed, &format!("exp3/sigma={sigma}/{name}"));
            let y_prime = unknown_measurement(&scene.a_u, x, sigma, cell)?;
            let error = residual_error(&y_prime, &cal.a_recv.matvec(x)?)?.as_f64();
            let c = coordinates(basis, x)?;
            let projection = basis.q.matvec(&c.b)?;
            let projection_error =
                residual_error(&scene.a_u.matvec(x)?, &scene.a_u.matvec(&projection)?)?.as_f64();
            let (img, q) = recover_image(&y_prime, &cal.a_recv, x, cfg.h, cfg.w)?;
            art.pgm(&format!("restored_{name}_sigma{sigma}.pgm"), &img)?;
            art.vector(&format!("runs/sigma{sigma}_{name}/y_prime.mmcal"), &y_prime)?;
            if c.in_span {
                max_in = max_in.max(error);
            } else {
                min_out = min_out.min(error);
            }
            rows.push(format!(
                "{sigma},{name},{},{},{},{},{q}",
                c.in_span,
                fmt_num(c.relative_residual),
                fmt_num(error),
                fmt_num(projection_error)
            ));
        }
        summary.push(format!(
            "{sigma},{},{},{}",
            fmt_num(max_in),
            fmt_num(min_out),
            cal.unknown_measure_count
        ));
    }
    for (name, x) in &scene.images {
        art.vector(&format!("images/{name}.mmcal"), x)?;
    }
    art.csv(
        "table.csv",
        "sigma,image,in_span,coordinate_residual,error,projection_error,psnr",
        &rows,
    )?;
    art.csv(
        "summary.csv",
        "sigma,max_in_span_error,min_out_of_span_error,unknown_measurements",
        &summary,
    )
}

/// The study input used by the precision experiment.
pub fn study_input(cfg: &ExperimentConfig, scene: &Scene<f64>) -> Result<StudyInput> {
    Ok(StudyInput {
        a: scene.a.clone(),
        a_u: scene.a_u.clone(),
        x_prime: scene.image("blobs-a")?.to_vec(),
        x_other: scene.image("blobs-b")?.to_vec(),
        pm: scene.pm.clone(),
        sigma_noise: cfg.sigma_noise,
        seed: derive_seed(cfg.seed, "precision"),
        epochs: cfg.epochs,
        recovery: RecoveryConfig::default(),
    })
}

fn exp_precision(cfg: &ExperimentConfig, scene: &Scene<f64>, art: &mut Artifacts) -> Result<()> {
    let input = study_input(cfg, scene)?;
    let reports = run_precision_study(&input, &[Precision::Bits32, Precision::Bits64])?;
    let rows: Vec<String> = reports.iter().map(PrecisionReport::csv_row).collect();
    art.csv("report.csv", PrecisionReport::CSV_HEADER, &rows)?;
    let mut rank_one = Vec::new();
    for p in [Precision::Bits32, Precision::Bits64] {
        let s = match p {
            Precision::Bits32 => rank_one_lambda_stats::<f32>(&input)?,
            Precision::Bits64 => rank_one_lambda_stats::<f64>(&input)?,
        };
        rank_one.push(format!(
            "{p},{},{},{},{}",
            fmt_num(s.mean),
            fmt_num(s.range),
            fmt_num(s.std),
            s.excluded
        ));
    }
    art.csv(
        "rank_one.csv",
        "precision,lambda_mean,lambda_range,lambda_std,lambda_excluded",
        &rank_one,
    )
}
