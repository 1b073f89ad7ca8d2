//! Seeded, trial-parallel Monte Carlo runs of the zero counter.
//!
//! Determinism contract: trial i always uses `trial_seed(master_seed, i)` and
//! aggregation folds in trial-index order, so the report is bit-identical for
//! any worker count. Workers never share RNG state.

use std::sync::{Arc, OnceLock};
use std::thread;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use torus_waves_core::geometry::{Curve, CurveError, CurveSampler, CurveSpec};
use torus_waves_core::kacrice::KacRicePrediction;
use torus_waves_core::lattice::{Dim, LatticeError, LatticeSet};
use torus_waves_core::wave::{sample_coefficients, trial_seed, CoefficientModel, PhaseTable};
use torus_waves_core::zeros::{count_zeros, ZeroError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("lattice error: {0}")]
    Lattice(LatticeError),
    #[error("curve error: {0}")]
    Curve(CurveError),
    #[error("zero counting failed on trial {trial}: {source}")]
    Zeros { trial: u64, source: ZeroError },
    #[error("reports were produced under different configurations: {0}")]
    ConfigMismatch(String),
}

impl From<LatticeError> for HarnessError {
    fn from(e: LatticeError) -> Self {
        HarnessError::Lattice(e)
    }
}

impl From<CurveError> for HarnessError {
    fn from(e: CurveError) -> Self {
        HarnessError::Curve(e)
    }
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub d: Dim,
    pub m: u64,
    pub curve: CurveSpec,
    pub model: CoefficientModel,
    pub trials: u64,
    pub master_seed: u64,
    /// sampler cells per unit lambda (>= 32 for certified counting)
    pub grid_factor: f64,
    /// highest moment order aggregated (<= 4)
    pub k_max: u8,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.trials < 1 {
            return Err(HarnessError::InvalidConfig("trials must be >= 1".into()));
        }
        if !(1..=4).contains(&self.k_max) {
            return Err(HarnessError::InvalidConfig("k_max must be in 1..=4".into()));
        }
        if self.grid_factor < 32.0 {
            return Err(HarnessError::InvalidConfig(
                "grid_factor below 32 cannot certify counts".into(),
            ));
        }
        Ok(())
    }

    /// Fields that must agree for two runs to be comparable.
    fn comparable_key(&self) -> (Dim, u64, &CurveSpec, u64) {
        (self.d, self.m, &self.curve, self.grid_factor.to_bits())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: u64,
    pub count: u64,
    pub certified: bool,
}

/// Aggregated trial statistics. `wall_time_secs` is runtime metadata: it is
/// not serialized and does not participate in equality, so that persisted
/// reports are byte-identical across re-runs and worker counts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MCReport {
    pub trials: Vec<TrialRow>,
    pub mean: f64,
    /// unbiased sample variance (0 for a single trial)
    pub variance: f64,
    /// standard error of the mean: sqrt(variance / trials)
    pub se: f64,
    /// central moments of order 2..=k_max (population normalization)
    pub central_moments: Vec<f64>,
    /// raw moment means E Z^k for k = 1..=k_max
    pub moment_means: Vec<f64>,
    /// standard errors of the raw moment means
    pub moment_ses: Vec<f64>,
    pub uncertified: u64,
    #[serde(skip)]
    pub wall_time_secs: Option<f64>,
}

impl PartialEq for MCReport {
    fn eq(&self, other: &Self) -> bool {
        self.trials == other.trials
            && self.mean == other.mean
            && self.variance == other.variance
            && self.se == other.se
            && self.central_moments == other.central_moments
            && self.moment_means == other.moment_means
            && self.moment_ses == other.moment_ses
            && self.uncertified == other.uncertified
    }
}

impl MCReport {
    /// Recomputes the aggregate fields from the raw rows (consistency check
    /// and the aggregation path itself).
    pub fn from_rows(rows: Vec<TrialRow>, k_max: u8) -> MCReport {
        let n = rows.len() as f64;
        let counts: Vec<f64> = rows.iter().map(|r| r.count as f64).collect();
        let mean = counts.iter().sum::<f64>() / n;
        let variance = if rows.len() > 1 {
            counts.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let se = (variance / n).sqrt();
        let central_moments = (2..=k_max as u32)
            .map(|k| {
                counts
                    .iter()
                    .map(|c| (c - mean).powi(k as i32))
                    .sum::<f64>()
                    / n
            })
            .collect();
        let mut moment_means = Vec::with_capacity(k_max as usize);
        let mut moment_ses = Vec::with_capacity(k_max as usize);
        for k in 1..=k_max as i32 {
            let powers: Vec<f64> = counts.iter().map(|c| c.powi(k)).collect();
            let pm = powers.iter().sum::<f64>() / n;
            let pv = if rows.len() > 1 {
                powers.iter().map(|p| (p - pm) * (p - pm)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            moment_means.push(pm);
            moment_ses.push((pv / n).sqrt());
        }
        let uncertified = rows.iter().filter(|r| !r.certified).count() as u64;
        MCReport {
            trials: rows,
            mean,
            variance,
            se,
            central_moments,
            moment_means,
            moment_ses,
            uncertified,
            wall_time_secs: None,
        }
    }
}

/// Default experiment levels: small-N variety on the plane, the admissible
/// low levels in space.
pub const DEFAULT_LEVELS_D2: [u64; 5] = [2, 5, 25, 65, 325];
pub const DEFAULT_LEVELS_D3: [u64; 4] = [1, 2, 3, 5];

/// Compiled immutable run context shared by the workers.
pub struct RunContext {
    pub lattice: Arc<LatticeSet>,
    pub sampler: Arc<CurveSampler>,
    pub table: Arc<PhaseTable>,
}

pub fn compile(cfg: &RunConfig) -> Result<RunContext, HarnessError> {
    cfg.validate()?;
    let lattice = Arc::new(LatticeSet::enumerate(cfg.d, cfg.m)?);
    if lattice.len() < 2 {
        return Err(HarnessError::InvalidConfig(format!(
            "no lattice points for d={} m={}",
            cfg.d, cfg.m
        )));
    }
    if cfg.curve.family.dim() != cfg.d {
        return Err(HarnessError::InvalidConfig(format!(
            "curve lives in d={} but the run asks for d={}",
            cfg.curve.family.dim(),
            cfg.d
        )));
    }
    let curve = Arc::new(Curve::compile(&cfg.curve));
    let cells = (cfg.grid_factor * lattice.lambda()).ceil() as usize;
    let sampler = Arc::new(CurveSampler::from_curve(curve, cells.max(64)));
    let table = Arc::new(PhaseTable::new(&lattice, &sampler));
    Ok(RunContext {
        lattice,
        sampler,
        table,
    })
}

/// Runs the trials on up to `workers` threads. Uncertified trials are re-run
/// once at double resolution, then kept and flagged (discarding them would
/// bias the moments).
pub fn run_trials(cfg: &RunConfig, workers: usize) -> Result<MCReport, HarnessError> {
    let started = Instant::now();
    let ctx = compile(cfg)?;
    let fine_table: OnceLock<Arc<PhaseTable>> = OnceLock::new();
    let workers = workers.max(1).min(cfg.trials as usize);
    let model = cfg.model;
    let master = cfg.master_seed;
    let trials = cfg.trials;

    let one_trial = |trial: u64| -> Result<TrialRow, HarnessError> {
        let sample = sample_coefficients(&model, &ctx.lattice, trial_seed(master, trial));
        let mut zc = count_zeros(&sample, &ctx.table, (0.0, 1.0))
            .map_err(|source| HarnessError::Zeros { trial, source })?;
        if !zc.certified {
            let fine = fine_table.get_or_init(|| {
                let cells = 2 * ctx.sampler.cells();
                let sampler = Arc::new(CurveSampler::from_curve(
                    Arc::clone(ctx.sampler.curve()),
                    cells,
                ));
                Arc::new(PhaseTable::new(&ctx.lattice, &sampler))
            });
            zc = count_zeros(&sample, fine, (0.0, 1.0))
                .map_err(|source| HarnessError::Zeros { trial, source })?;
        }
        Ok(TrialRow {
            trial,
            count: zc.count as u64,
            certified: zc.certified,
        })
    };

    let mut results: Vec<Result<TrialRow, HarnessError>> = if workers == 1 {
        (0..trials).map(one_trial).collect()
    } else {
        let mut buckets: Vec<Vec<Result<TrialRow, HarnessError>>> = thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let one_trial = &one_trial;
                    scope.spawn(move || {
                        (w as u64..trials)
                            .step_by(workers)
                            .map(one_trial)
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .collect()
        });
        // interleave back into trial order
        let mut merged: Vec<Option<Result<TrialRow, HarnessError>>> =
            (0..trials).map(|_| None).collect();
        for (w, bucket) in buckets.drain(..).enumerate() {
            for (k, row) in bucket.into_iter().enumerate() {
                merged[w + k * workers] = Some(row);
            }
        }
        merged
            .into_iter()
            .map(|r| r.expect("all trials ran"))
            .collect()
    };

    let mut rows = Vec::with_capacity(results.len());
    for r in results.drain(..) {
        rows.push(r?);
    }
    let mut report = MCReport::from_rows(rows, cfg.k_max);
    report.wall_time_secs = Some(started.elapsed().as_secs_f64());
    Ok(report)
}

/// A persisted (config, report) pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub config: RunConfig,
    pub report: MCReport,
}

/// |E_a Z^k - E_b Z^k| and the combined standard error, for two runs over the
/// same (d, m, curve) with possibly different coefficient models.
pub fn universality_gap(
    a: &RunArtifact,
    b: &RunArtifact,
    k: u8,
) -> Result<(f64, f64), HarnessError> {
    if a.config.comparable_key() != b.config.comparable_key() {
        return Err(HarnessError::ConfigMismatch(format!(
            "(d, m, curve, grid) differ: d={} m={} vs d={} m={}",
            a.config.d, a.config.m, b.config.d, b.config.m
        )));
    }
    let idx = k as usize;
    if k < 1 || idx > a.report.moment_means.len() || idx > b.report.moment_means.len() {
        return Err(HarnessError::InvalidConfig(format!(
            "moment order {k} not aggregated in both reports"
        )));
    }
    let gap = (a.report.moment_means[idx - 1] - b.report.moment_means[idx - 1]).abs();
    let combined =
        (a.report.moment_ses[idx - 1].powi(2) + b.report.moment_ses[idx - 1].powi(2)).sqrt();
    Ok((gap, combined))
}

/// Side-by-side record of the sample variance against the m/N envelope and
/// the literal variance integral. Only the envelope is asserted (with the
/// configurable constant); the integral is reported as-is.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceComparison {
    pub sample_variance: f64,
    pub m_over_n: f64,
    pub bound_constant: f64,
    pub bound_ok: bool,
    pub ratio: f64,
    pub variance_integral: Option<f64>,
}

pub fn variance_vs_prediction(
    report: &MCReport,
    lattice: &LatticeSet,
    pred: &KacRicePrediction,
    bound_constant: f64,
) -> VarianceComparison {
    let m_over_n = lattice.level() as f64 / lattice.len() as f64;
    VarianceComparison {
        sample_variance: report.variance,
        m_over_n,
        bound_constant,
        bound_ok: report.variance <= bound_constant * m_over_n,
        ratio: report.variance / m_over_n,
        variance_integral: pred.variance_leading,
    }
}

/// Moment probe of the field itself at a fixed parameter: mean of F(t0)^2
/// and the variance of F'(t0) across fresh samples (the E F^2 = 1 and
/// Var F' = 4 pi^2 m / d conservation checks).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldMoments {
    pub t0: f64,
    pub samples: u64,
    pub mean_f: f64,
    pub mean_f2: f64,
    /// standard error of mean_f2
    pub se_f2: f64,
    pub var_fprime: f64,
    /// predicted Var F' = 4 pi^2 m / d
    pub alpha: f64,
}

pub fn field_moments(
    lattice: &Arc<LatticeSet>,
    curve: &Curve,
    model: &CoefficientModel,
    t0: f64,
    samples: u64,
    master_seed: u64,
) -> FieldMoments {
    let mut sum_f = 0.0;
    let mut sum_f2 = 0.0;
    let mut sum_f4 = 0.0;
    let mut sum_dp2 = 0.0;
    let mut sum_dp = 0.0;
    for trial in 0..samples {
        let s = sample_coefficients(model, lattice, trial_seed(master_seed, trial));
        let f = s.eval(curve, t0);
        let fp = s.eval_prime(curve, t0);
        sum_f += f;
        sum_f2 += f * f;
        sum_f4 += f * f * f * f;
        sum_dp += fp;
        sum_dp2 += fp * fp;
    }
    let n = samples as f64;
    let mean_f2 = sum_f2 / n;
    let var_f2 = (sum_f4 / n - mean_f2 * mean_f2).max(0.0);
    let mean_dp = sum_dp / n;
    let d = lattice.dim().as_usize() as f64;
    FieldMoments {
        t0,
        samples,
        mean_f: sum_f / n,
        mean_f2,
        se_f2: (var_f2 / n).sqrt(),
        var_fprime: sum_dp2 / n - mean_dp * mean_dp,
        alpha: 4.0 * std::f64::consts::PI.powi(2) * lattice.level() as f64 / d,
    }
}
