//! Runs the three constructions under 32- and 64-bit arithmetic and compares
//! the λ vectors they produce.
//!
//! All inputs are held in 64-bit and cast once per cell. Noise seeds depend on
//! the algorithm but not the precision, so the two precisions see paired runs.

use std::fmt;

use crate::calibration::{calibrate_mspace, embed_images_in_space};
use crate::error::{Error, Result};
use crate::io::fmt_num;
use crate::matched::{algorithm1, algorithm2, MatchConfig};
use crate::measurement::{
    measure, residual_error, NoiseModel, NoiseSource, SimulatedImage, SimulatedMatrix,
};
use crate::mismatch::{lambda_stats_lenient, mismatch_solution, sigma_special, LambdaStats};
use crate::numeric::{cast_vec, DenseMatrix, Precision, Scalar};
use crate::recovery::{fista_l1, relative_error, RecoveryConfig};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Alg1,
    Alg2,
    Alg3,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Alg1, Algorithm::Alg2, Algorithm::Alg3];

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Alg1 => "alg1",
            Algorithm::Alg2 => "alg2",
            Algorithm::Alg3 => "alg3",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Everything a study needs, in 64-bit.
#[derive(Debug, Clone)]
pub struct StudyInput {
    pub a: DenseMatrix<f64>,
    pub a_u: DenseMatrix<f64>,
    pub x_prime: Vec<f64>,
    pub x_other: Vec<f64>,
    /// Pre-measure image for algorithms 1 and 2.
    pub pm: Vec<f64>,
    pub sigma_noise: f64,
    pub seed: u64,
    pub epochs: usize,
    pub recovery: RecoveryConfig,
}

#[derive(Debug, Clone)]
pub struct PrecisionReport {
    pub algorithm: Algorithm,
    pub precision: Precision,
    pub lambda_stats: LambdaStats,
    /// `residual_error(y', A_recv x')`.
    pub match_residual: f64,
    /// Level the match residual must stay under for the λ statistics to be meaningful.
    pub match_floor: f64,
    /// Relative ℓ2 error of the ℓ1 recovery from `(y', A_recv)`.
    pub recovery_quality: f64,
    /// Set when the cell could not be built; the numeric fields are then NaN.
    pub failure: Option<String>,
}

impl PrecisionReport {
    pub fn match_holds(&self) -> bool {
        self.failure.is_none() && self.match_residual <= self.match_floor
    }

    pub const CSV_HEADER: &'static str = "algorithm,precision,lambda_mean,lambda_range,lambda_std,lambda_count,lambda_excluded,match_residual,match_floor,match_holds,recovery_rel_error,status";

    pub fn csv_row(&self) -> String {
        let status = match &self.failure {
            None => "ok".to_string(),
            Some(msg) => msg.replace([',', '\n'], ";"),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.algorithm,
            self.precision,
            fmt_num(self.lambda_stats.mean),
            fmt_num(self.lambda_stats.range),
            fmt_num(self.lambda_stats.std),
            self.lambda_stats.count,
            self.lambda_stats.excluded,
            fmt_num(self.match_residual),
            fmt_num(self.match_floor),
            self.match_holds(),
            fmt_num(self.recovery_quality),
            status
        )
    }
}

/// Residual bound for the match check: the noise level plus a roundoff allowance.
pub fn match_floor<T: Scalar>(sigma_noise: f64, y_prime: &[T]) -> f64 {
    let scale = y_prime.iter().map(|v| v.as_f64().abs()).sum::<f64>() / y_prime.len().max(1) as f64;
    sigma_noise + 1e3 * T::PRECISION.epsilon() * scale.max(1.0)
}

fn validate(input: &StudyInput) -> Result<()> {
    if input.a.shape() != input.a_u.shape() {
        return Err(Error::dim("run_precision_study", "a and a_u shapes differ"));
    }
    let n = input.a.cols();
    if [&input.x_prime, &input.x_other, &input.pm]
        .iter()
        .any(|v| v.len() != n)
    {
        return Err(Error::dim(
            "run_precision_study",
            "image length differs from a.cols()",
        ));
    }
    if input.x_prime == input.x_other {
        return Err(Error::Precondition {
            op: "run_precision_study",
            detail: "x_other must differ from x_prime".into(),
        });
    }
    NoiseSource::new(input.sigma_noise, 0)?;
    Ok(())
}

/// One report per (algorithm, precision). A failing cell is reported, not propagated.
pub fn run_precision_study(
    input: &StudyInput,
    precisions: &[Precision],
) -> Result<Vec<PrecisionReport>> {
    validate(input)?;
    let mut out = Vec::with_capacity(precisions.len() * 3);
    for &alg in &Algorithm::ALL {
        for &p in precisions {
            out.push(match p {
                Precision::Bits32 => run_cell::<f32>(input, alg),
                Precision::Bits64 => run_cell::<f64>(input, alg),
            });
        }
    }
    Ok(out)
}

pub fn run_cell<T: Scalar>(input: &StudyInput, alg: Algorithm) -> PrecisionReport {
    match try_cell::<T>(input, alg) {
        Ok(r) => r,
        Err(e) => PrecisionReport {
            algorithm: alg,
            precision: T::PRECISION,
            lambda_stats: LambdaStats {
                mean: f64::NAN,
                range: f64::NAN,
                std: f64::NAN,
                count: 0,
                excluded: 0,
            },
            match_residual: f64::NAN,
            match_floor: f64::NAN,
            recovery_quality: f64::NAN,
            failure: Some(format!("{}: {e}", e.name())),
        },
    }
}

fn noise_for(input: &StudyInput, label: &str) -> Result<NoiseSource> {
    NoiseSource::new(input.sigma_noise, derive_seed(input.seed, label))
}

/// The unknown image's measurement under the unknown matrix.
pub fn y_prime_for<T: Scalar>(input: &StudyInput) -> Result<Vec<T>> {
    let noise = NoiseModel {
        sigma: input.sigma_noise,
        seed: derive_seed(input.seed, "precision/y_prime"),
        stream: 0,
    };
    measure(
        &input.a_u.cast::<T>(),
        &cast_vec::<f64, T>(&input.x_prime),
        &noise,
    )
}

/// Builds the replacement matrix for one algorithm at precision `T`.
pub fn build_a_recv<T: Scalar>(
    input: &StudyInput,
    alg: Algorithm,
    y_prime: &[T],
) -> Result<DenseMatrix<T>> {
    let a = input.a.cast::<T>();
    let x_prime: Vec<T> = cast_vec(&input.x_prime);
    let pm: Vec<T> = cast_vec(&input.pm);
    let cfg = MatchConfig {
        epochs: input.epochs,
        ..MatchConfig::default()
    };
    Ok(match alg {
        Algorithm::Alg1 => {
            let mut oracle = SimulatedImage::new(x_prime, noise_for(input, "precision/alg1")?);
            algorithm1(y_prime, &mut oracle, &a, &pm, &cfg)?.a_recv
        }
        Algorithm::Alg2 => {
            let mut oracle = SimulatedImage::new(x_prime, noise_for(input, "precision/alg2")?);
            algorithm2(y_prime, &mut oracle, &a, &pm, &cfg)?.a_recv
        }
        Algorithm::Alg3 => {
            // x' has to lie in the calibrated subspace
            let known = embed_images_in_space(&a, &[x_prime])?;
            let mut oracle =
                SimulatedMatrix::new(input.a_u.cast::<T>(), noise_for(input, "precision/alg3")?);
            calibrate_mspace(&known, &mut oracle)?.a_recv
        }
    })
}

fn try_cell<T: Scalar>(input: &StudyInput, alg: Algorithm) -> Result<PrecisionReport> {
    let y_prime = y_prime_for::<T>(input)?;
    let a_recv = build_a_recv(input, alg, &y_prime)?;
    let x_prime: Vec<T> = cast_vec(&input.x_prime);
    let x_other: Vec<T> = cast_vec(&input.x_other);
    let match_residual = residual_error(&y_prime, &a_recv.matvec(&x_prime)?)?.as_f64();
    let lambda_stats = lambda_stats_lenient(&a_recv, &x_prime, &x_other)?;
    let rec = fista_l1(&y_prime, &a_recv, &input.recovery)?;
    Ok(PrecisionReport {
        algorithm: alg,
        precision: T::PRECISION,
        lambda_stats,
        match_residual,
        match_floor: match_floor(input.sigma_noise, &y_prime),
        recovery_quality: relative_error(&x_prime, &rec.x),
        failure: None,
    })
}

/// λ statistics of a single mismatch solution `y' w^T` built from `y0 = A pm`.
///
/// Every λ component equals `w.x_other / w.x'`, so the spread is pure roundoff.
pub fn rank_one_lambda_stats<T: Scalar>(input: &StudyInput) -> Result<LambdaStats> {
    let a = input.a.cast::<T>();
    let y_prime = y_prime_for::<T>(input)?;
    let y0 = a.matvec(&cast_vec(&input.pm))?;
    let sol = mismatch_solution(&y0, &y_prime, &sigma_special(&a)?, &a)?;
    lambda_stats_lenient(
        &sol.a_recv,
        &cast_vec(&input.x_prime),
        &cast_vec(&input.x_other),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::NormalStream;
    use crate::synth::{blobs, constant, gaussian_matrix};

    fn small_input(seed: u64) -> StudyInput {
        let mut rng = NormalStream::new(seed, 0);
        let a = gaussian_matrix(&mut rng, 24, 64);
        let a_u = gaussian_matrix(&mut rng, 24, 64);
        StudyInput {
            a,
            a_u,
            x_prime: blobs(8, 8, &mut rng).to_vector(),
            x_other: blobs(8, 8, &mut rng).to_vector(),
            pm: constant(8, 8, 0.5).to_vector(),
            sigma_noise: 0.0,
            seed,
            epochs: 100,
            recovery: RecoveryConfig {
                max_iters: 200,
                ..Default::default()
            },
        }
    }

    #[test]
    fn every_cell_matches() {
        let input = small_input(1);
        let reports = run_precision_study(&input, &[Precision::Bits32, Precision::Bits64]).unwrap();
        assert_eq!(reports.len(), 6);
        for r in &reports {
            assert!(r.match_holds(), "{}", r.csv_row());
        }
    }

    #[test]
    fn alg3_spread_dwarfs_alg1() {
        let input = small_input(2);
        let reports = run_precision_study(&input, &[Precision::Bits64]).unwrap();
        let std_of = |alg| {
            reports
                .iter()
                .find(|r| r.algorithm == alg)
                .unwrap()
                .lambda_stats
                .std
        };
        assert!(std_of(Algorithm::Alg3) >= 10.0 * std_of(Algorithm::Alg1));
    }

    #[test]
    fn rank_one_lambda_is_constant() {
        let input = small_input(3);
        let s64 = rank_one_lambda_stats::<f64>(&input).unwrap();
        let s32 = rank_one_lambda_stats::<f32>(&input).unwrap();
        assert!(
            s64.range <= 100.0 * f64::EPSILON * s64.mean.abs().max(1.0),
            "{s64:?}"
        );
        assert!(
            s32.range <= 100.0 * f32::EPSILON as f64 * s32.mean.abs().max(1.0),
            "{s32:?}"
        );
    }

    #[test]
    fn failed_cell_is_reported() {
        let mut input = small_input(4);
        // x' equal to a row already in a makes the embedded basis rank deficient
        input.x_prime = input.a.row(0).to_vec();
        input.a = {
            let mut a = input.a.clone();
            let last = a.rows() - 1;
            let r0 = a.row(0).to_vec();
            a.row_mut(last - 1).copy_from_slice(&r0);
            a
        };
        let r = run_cell::<f64>(&input, Algorithm::Alg3);
        assert!(r
            .failure
            .as_deref()
            .unwrap()
            .starts_with("RankDeficientError"));
        assert!(r.match_residual.is_nan());
        assert!(run_precision_study(&input, &[Precision::Bits64]).is_ok());
    }

    #[test]
    fn rejects_identical_images() {
        let mut input = small_input(5);
        input.x_other = input.x_prime.clone();
        assert!(run_precision_study(&input, &[Precision::Bits64]).is_err());
    }
}
