use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use rotavg::averaging::{AveragingConfig, Method};
use rotavg::so3::geodesic_distance;
use rotavg::synthetic::{make_instance, OutlierModel, ProblemInstance, TrialSpec};

use crate::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectionMode {
    On,
    Off,
    Both,
}

impl RejectionMode {
    fn flags(self) -> &'static [bool] {
        match self {
            RejectionMode::On => &[true],
            RejectionMode::Off => &[false],
            RejectionMode::Both => &[false, true],
        }
    }
}

impl FromStr for RejectionMode {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "on" => Ok(RejectionMode::On),
            "off" => Ok(RejectionMode::Off),
            "both" => Ok(RejectionMode::Both),
            _ => Err(BenchError::Config(format!(
                "rejection must be on, off or both, got `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub methods: Vec<Method>,
    pub rejection: RejectionMode,
    pub sigmas_deg: Vec<f64>,
    pub outlier_ratios: Vec<f64>,
    pub n_rotations: usize,
    pub trials: usize,
    pub base_seed: u64,
    pub outlier_model: OutlierModel,
    /// Worker threads; `None` uses the rayon default.
    pub threads: Option<usize>,
    /// Write every generated instance as a text file into this directory.
    pub dump_instances: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            rejection: RejectionMode::Both,
            sigmas_deg: vec![5.0, 15.0],
            outlier_ratios: vec![0.0, 0.25, 0.5, 0.75, 0.95],
            n_rotations: 100,
            trials: 1000,
            base_seed: 0,
            outlier_model: OutlierModel::default(),
            threads: None,
            dump_instances: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(BenchError::Config(m.into()));
        if self.methods.is_empty() {
            return fail("no methods selected");
        }
        if self.sigmas_deg.is_empty() || self.outlier_ratios.is_empty() {
            return fail("sigma and outlier-ratio lists must be nonempty");
        }
        if self.trials < 1 {
            return fail("trials must be at least 1");
        }
        if self.threads == Some(0) {
            return fail("threads must be at least 1");
        }
        for &sigma in &self.sigmas_deg {
            for &ratio in &self.outlier_ratios {
                TrialSpec::new(self.n_rotations, sigma, ratio, 0).validate()?;
            }
        }
        Ok(())
    }

    /// Estimator variants in sweep order. Closed-form methods have no
    /// rejection switch and appear once.
    pub fn variants(&self) -> Vec<Variant> {
        let mut out = Vec::new();
        for &method in &self.methods {
            if method.is_iterative() {
                out.extend(
                    self.rejection
                        .flags()
                        .iter()
                        .map(|&r| Variant::new(method, Some(r))),
                );
            } else {
                out.push(Variant::new(method, None));
            }
        }
        out.dedup();
        out
    }
}

/// One estimator column of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Variant {
    pub method: Method,
    /// `None` for methods without outlier rejection.
    pub rejection: Option<bool>,
}

impl Variant {
    pub fn new(method: Method, rejection: Option<bool>) -> Self {
        Self { method, rejection }
    }

    pub fn rejection_label(&self) -> &'static str {
        match self.rejection {
            Some(true) => "on",
            Some(false) => "off",
            None => "none",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rejection {
            Some(r) => write!(f, "{} (rej {})", self.method, if r { "on" } else { "off" }),
            None => write!(f, "{}", self.method),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub method: Method,
    pub rejection: Option<bool>,
    pub sigma_deg: f64,
    pub outlier_ratio: f64,
    pub trial: usize,
    /// Geodesic distance between estimate and ground truth, degrees.
    /// NaN marks a failed estimator call.
    pub error_deg: f64,
    /// Wall time of the estimator call divided by N, microseconds.
    pub time_us_per_rotation: f64,
    pub iterations: usize,
}

impl TrialRecord {
    pub fn variant(&self) -> Variant {
        Variant::new(self.method, self.rejection)
    }

    pub fn failed(&self) -> bool {
        self.error_deg.is_nan()
    }
}

/// SplitMix64 finalizer.
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the instance at grid position `(sigma_index, ratio_index)` and
/// trial `trial`: SplitMix64 chained over the base seed and the three indices.
pub fn sub_seed(base_seed: u64, sigma_index: usize, ratio_index: usize, trial: usize) -> u64 {
    [sigma_index, ratio_index, trial]
        .into_iter()
        .fold(splitmix64(base_seed), |h, x| splitmix64(h ^ x as u64))
}

/// The instance every variant sees at this grid position.
pub fn trial_instance(
    config: &SweepConfig,
    sigma_index: usize,
    ratio_index: usize,
    trial: usize,
) -> Result<ProblemInstance> {
    let spec = TrialSpec::new(
        config.n_rotations,
        config.sigmas_deg[sigma_index],
        config.outlier_ratios[ratio_index],
        sub_seed(config.base_seed, sigma_index, ratio_index, trial),
    )
    .with_outlier_model(config.outlier_model);
    Ok(make_instance(&spec)?)
}

fn run_variant(variant: Variant, instance: &ProblemInstance, trial: usize) -> TrialRecord {
    let cfg = AveragingConfig::default()
        .with_rejection(variant.rejection.unwrap_or(false))
        .with_seed(instance.spec.seed);
    let start = Instant::now();
    let outcome = variant.method.run(&instance.rotations, &cfg);
    let elapsed_ns = start.elapsed().as_nanos().max(1) as f64;

    let (error_deg, iterations) = match outcome {
        Ok(res) => (
            geodesic_distance(&res.estimate, &instance.ground_truth).to_degrees(),
            res.iterations_used,
        ),
        Err(_) => (f64::NAN, 0),
    };
    TrialRecord {
        method: variant.method,
        rejection: variant.rejection,
        sigma_deg: instance.spec.inlier_sigma_deg,
        outlier_ratio: instance.spec.outlier_ratio,
        trial,
        error_deg,
        time_us_per_rotation: elapsed_ns * 1e-3 / instance.rotations.len() as f64,
        iterations,
    }
}

/// Per-(variant, σ, ratio) statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct CellAggregate {
    pub variant: Variant,
    pub sigma_deg: f64,
    pub outlier_ratio: f64,
    /// Successful trials.
    pub trials: usize,
    pub failures: usize,
    pub mean_error_deg: f64,
    pub median_error_deg: f64,
    pub median_time_us: f64,
    pub mean_iterations: f64,
}

#[derive(Debug, Clone)]
pub struct Sweep {
    /// In sweep order: variant, σ, ratio, trial.
    pub records: Vec<TrialRecord>,
    pub cells: Vec<CellAggregate>,
}

impl Sweep {
    pub fn cell(
        &self,
        variant: Variant,
        sigma_deg: f64,
        outlier_ratio: f64,
    ) -> Option<&CellAggregate> {
        self.cells.iter().find(|c| {
            c.variant == variant && c.sigma_deg == sigma_deg && c.outlier_ratio == outlier_ratio
        })
    }
}

pub fn run_sweep(config: &SweepConfig) -> Result<Sweep> {
    config.validate()?;
    if let Some(dir) = &config.dump_instances {
        fs::create_dir_all(dir)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads.unwrap_or(0))
        .build()
        .map_err(|e| BenchError::Config(e.to_string()))?;
    let variants = config.variants();

    // by_variant[v] collects records in (σ, ratio, trial) order.
    let mut by_variant: Vec<Vec<TrialRecord>> = vec![Vec::new(); variants.len()];
    for si in 0..config.sigmas_deg.len() {
        for ri in 0..config.outlier_ratios.len() {
            let warmup = trial_instance(config, si, ri, 0)?;
            for &v in &variants {
                run_variant(v, &warmup, 0);
            }

            let per_trial: Vec<Vec<TrialRecord>> = pool.install(|| {
                (0..config.trials)
                    .into_par_iter()
                    .map(|t| {
                        let instance = trial_instance(config, si, ri, t)?;
                        if let Some(dir) = &config.dump_instances {
                            let path = dir.join(format!("instance_s{si}_r{ri}_t{t}.txt"));
                            fs::write(path, instance.to_text())?;
                        }
                        Ok(variants
                            .iter()
                            .map(|&v| run_variant(v, &instance, t))
                            .collect())
                    })
                    .collect::<Result<_>>()
            })?;

            for trial_records in per_trial {
                for (slot, record) in by_variant.iter_mut().zip(trial_records) {
                    slot.push(record);
                }
            }
        }
    }

    let records: Vec<TrialRecord> = by_variant.into_iter().flatten().collect();
    let cells = aggregate(&records);
    Ok(Sweep { records, cells })
}

/// Groups records by (variant, σ, ratio) in order of first appearance.
pub fn aggregate(records: &[TrialRecord]) -> Vec<CellAggregate> {
    let mut groups: Vec<(Variant, f64, f64, Vec<&TrialRecord>)> = Vec::new();
    for r in records {
        let key = (r.variant(), r.sigma_deg, r.outlier_ratio);
        match groups.iter_mut().find(|g| (g.0, g.1, g.2) == key) {
            Some(g) => g.3.push(r),
            None => groups.push((key.0, key.1, key.2, vec![r])),
        }
    }

    groups
        .into_iter()
        .map(|(variant, sigma_deg, outlier_ratio, rs)| {
            let ok: Vec<&TrialRecord> = rs.iter().copied().filter(|r| !r.failed()).collect();
            let errors: Vec<f64> = ok.iter().map(|r| r.error_deg).collect();
            let times: Vec<f64> = ok.iter().map(|r| r.time_us_per_rotation).collect();
            let n = ok.len();
            CellAggregate {
                variant,
                sigma_deg,
                outlier_ratio,
                trials: n,
                failures: rs.len() - n,
                mean_error_deg: mean(&errors),
                median_error_deg: median(errors),
                median_time_us: median(times),
                mean_iterations: ok.iter().map(|r| r.iterations as f64).sum::<f64>() / n as f64,
            }
        })
        .collect()
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// NaN for an empty input.
pub fn median(mut values: Vec<f64>) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
