//! Seeded synthetic averaging problems.
//!
//! An instance holds `N` rotations around a Haar-random ground truth:
//! `N − round(ratio·N)` inliers `Exp(θ·â)·R_gt` with `â` uniform on the unit
//! sphere and `θ = |z|`, `z ~ Normal(0, σ)`, plus `round(ratio·N)` outliers
//! built from `Exp(θ·â)` with `θ ~ Uniform[0, π]`. By default the outlier
//! rotation is applied to the ground truth ([`OutlierModel::AroundTruth`]);
//! [`OutlierModel::Absolute`] uses `Exp(θ·â)` itself.
//!
//! All randomness comes from one ChaCha8 stream seeded with the instance seed.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::so3::{exp_map, Matrix3, RotationMatrix, RotationVector, Vector3};

/// Uniform direction on the unit sphere (normalized Gaussian triple).
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Vector3 {
    loop {
        let v = Vector3::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Haar-uniform rotation, from a uniformly distributed unit quaternion.
pub fn random_rotation_uniform<R: Rng + ?Sized>(rng: &mut R) -> RotationMatrix {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        if q.iter().map(|c| c * c).sum::<f64>() > 1e-12 {
            return RotationMatrix::from_quaternion(q[0], q[1], q[2], q[3]);
        }
    }
}

/// `Exp(|z|·â)·ground_truth` with `z ~ Normal(0, sigma_deg)` (converted to
/// radians), so the angular error is half-normal with scale `sigma_deg`.
pub fn gen_inlier<R: Rng + ?Sized>(
    ground_truth: &RotationMatrix,
    sigma_deg: f64,
    rng: &mut R,
) -> RotationMatrix {
    debug_assert!(sigma_deg >= 0.0);
    let axis = random_unit_vector(rng);
    let z: f64 = rng.sample(StandardNormal);
    let angle = (z * sigma_deg.to_radians()).abs();
    exp_map(&RotationVector::from_axis_angle(&axis, angle).expect("finite")) * *ground_truth
}

/// `Exp(θ·â)` with `θ ~ Uniform[0, π]`. Not Haar-uniform.
pub fn gen_outlier<R: Rng + ?Sized>(rng: &mut R) -> RotationMatrix {
    let axis = random_unit_vector(rng);
    let angle = rng.random_range(0.0..=PI);
    exp_map(&RotationVector::from_axis_angle(&axis, angle).expect("finite"))
}

/// How outliers relate to the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutlierModel {
    /// `Exp(θ·â)·R_gt`: the angle to the ground truth is uniform on `[0, π]`.
    #[default]
    AroundTruth,
    /// `Exp(θ·â)`, independent of the ground truth.
    Absolute,
}

impl OutlierModel {
    pub fn name(&self) -> &'static str {
        match self {
            OutlierModel::AroundTruth => "around-truth",
            OutlierModel::Absolute => "absolute",
        }
    }
}

impl std::str::FromStr for OutlierModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "around-truth" => Ok(OutlierModel::AroundTruth),
            "absolute" => Ok(OutlierModel::Absolute),
            _ => Err(Error::InvalidConfig(format!("unknown outlier model `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSpec {
    pub n_rotations: usize,
    pub inlier_sigma_deg: f64,
    /// Fraction of outliers in `[0, 1]`.
    pub outlier_ratio: f64,
    pub seed: u64,
    pub outlier_model: OutlierModel,
}

impl TrialSpec {
    pub fn new(n_rotations: usize, inlier_sigma_deg: f64, outlier_ratio: f64, seed: u64) -> Self {
        Self {
            n_rotations,
            inlier_sigma_deg,
            outlier_ratio,
            seed,
            outlier_model: OutlierModel::default(),
        }
    }

    pub fn with_outlier_model(mut self, outlier_model: OutlierModel) -> Self {
        self.outlier_model = outlier_model;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rotations < 1 {
            return Err(Error::InvalidConfig(
                "n_rotations must be at least 1".into(),
            ));
        }
        if !(self.inlier_sigma_deg >= 0.0 && self.inlier_sigma_deg.is_finite()) {
            return Err(Error::InvalidConfig(
                "inlier sigma must be finite and nonnegative".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.outlier_ratio) {
            return Err(Error::InvalidConfig(
                "outlier ratio must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// `round(ratio·N)`, halves rounded away from zero.
    pub fn outlier_count(&self) -> usize {
        (self.outlier_ratio * self.n_rotations as f64).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub spec: TrialSpec,
    pub ground_truth: RotationMatrix,
    pub rotations: Vec<RotationMatrix>,
    /// Evaluation only; estimators never see it.
    pub inlier_mask: Vec<bool>,
}

pub fn make_instance(spec: &TrialSpec) -> Result<ProblemInstance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let ground_truth = random_rotation_uniform(&mut rng);
    let n_out = spec.outlier_count();
    let n_in = spec.n_rotations - n_out;

    let mut labelled: Vec<(RotationMatrix, bool)> = Vec::with_capacity(spec.n_rotations);
    labelled.extend((0..n_in).map(|_| {
        (
            gen_inlier(&ground_truth, spec.inlier_sigma_deg, &mut rng),
            true,
        )
    }));
    labelled.extend((0..n_out).map(|_| {
        let outlier = gen_outlier(&mut rng);
        let outlier = match spec.outlier_model {
            OutlierModel::AroundTruth => outlier * ground_truth,
            OutlierModel::Absolute => outlier,
        };
        (outlier, false)
    }));
    labelled.shuffle(&mut rng);

    let (rotations, inlier_mask) = labelled.into_iter().unzip();
    Ok(ProblemInstance {
        spec: *spec,
        ground_truth,
        rotations,
        inlier_mask,
    })
}

const TEXT_MAGIC: &str = "# rotavg-instance";

impl ProblemInstance {
    pub fn inlier_count(&self) -> usize {
        self.inlier_mask.iter().filter(|&&m| m).count()
    }

    /// Plain-text dump:
    ///
    /// ```text
    /// # rotavg-instance n_rotations=3 inlier_sigma_deg=5 outlier_ratio=0.25 seed=42 outlier_model=around-truth
    /// # ground_truth r00 r01 r02 r10 r11 r12 r20 r21 r22
    /// # inlier_mask 101
    /// r00 r01 r02 r10 r11 r12 r20 r21 r22
    /// ...
    /// ```
    ///
    /// Matrices are written row-major with shortest round-trip decimals, so
    /// [`ProblemInstance::from_text`] reproduces the instance exactly. A
    /// missing `outlier_model` header field reads as `around-truth`.
    pub fn to_text(&self) -> String {
        let s = &self.spec;
        let mut out = format!(
            "{TEXT_MAGIC} n_rotations={} inlier_sigma_deg={} outlier_ratio={} seed={} outlier_model={}\n",
            s.n_rotations,
            s.inlier_sigma_deg,
            s.outlier_ratio,
            s.seed,
            s.outlier_model.name()
        );
        out.push_str("# ground_truth ");
        push_row_major(&mut out, self.ground_truth.matrix());
        out.push_str("# inlier_mask ");
        out.extend(self.inlier_mask.iter().map(|&m| if m { '1' } else { '0' }));
        out.push('\n');
        for r in &self.rotations {
            push_row_major(&mut out, r.matrix());
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .and_then(|l| l.strip_prefix(TEXT_MAGIC))
            .ok_or_else(|| Error::Parse("missing instance header".into()))?;

        let (mut n, mut sigma, mut ratio, mut seed) = (None, None, None, None);
        let mut model = OutlierModel::default();
        for field in header.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad header field `{field}`")))?;
            match key {
                "n_rotations" => n = Some(parse_num::<usize>(value)?),
                "inlier_sigma_deg" => sigma = Some(parse_num::<f64>(value)?),
                "outlier_ratio" => ratio = Some(parse_num::<f64>(value)?),
                "seed" => seed = Some(parse_num::<u64>(value)?),
                "outlier_model" => {
                    model = value
                        .parse()
                        .map_err(|_| Error::Parse(format!("unknown outlier model `{value}`")))?
                }
                _ => return Err(Error::Parse(format!("unknown header field `{key}`"))),
            }
        }
        let missing = |name: &str| Error::Parse(format!("header lacks `{name}`"));
        let spec = TrialSpec::new(
            n.ok_or_else(|| missing("n_rotations"))?,
            sigma.ok_or_else(|| missing("inlier_sigma_deg"))?,
            ratio.ok_or_else(|| missing("outlier_ratio"))?,
            seed.ok_or_else(|| missing("seed"))?,
        )
        .with_outlier_model(model);

        let mut ground_truth = None;
        let mut inlier_mask = None;
        let mut rotations = Vec::with_capacity(spec.n_rotations);
        for line in lines {
            if let Some(rest) = line.strip_prefix("# ground_truth") {
                ground_truth = Some(parse_rotation(rest)?);
            } else if let Some(rest) = line.strip_prefix("# inlier_mask") {
                let mask = rest
                    .trim()
                    .chars()
                    .map(|c| match c {
                        '1' => Ok(true),
                        '0' => Ok(false),
                        _ => Err(Error::Parse(format!("bad mask character `{c}`"))),
                    })
                    .collect::<Result<Vec<bool>>>()?;
                inlier_mask = Some(mask);
            } else if line.starts_with('#') || line.trim().is_empty() {
                continue;
            } else {
                rotations.push(parse_rotation(line)?);
            }
        }

        let ground_truth = ground_truth.ok_or_else(|| missing("ground_truth"))?;
        let inlier_mask = inlier_mask.ok_or_else(|| missing("inlier_mask"))?;
        if rotations.len() != spec.n_rotations || inlier_mask.len() != spec.n_rotations {
            return Err(Error::Parse(format!(
                "expected {} rotations and mask entries, found {} and {}",
                spec.n_rotations,
                rotations.len(),
                inlier_mask.len()
            )));
        }
        Ok(Self {
            spec,
            ground_truth,
            rotations,
            inlier_mask,
        })
    }
}

fn push_row_major(out: &mut String, m: &Matrix3) {
    for j in 0..3 {
        for k in 0..3 {
            if j + k > 0 {
                out.push(' ');
            }
            write!(out, "{}", m[(j, k)]).expect("writing to a String");
        }
    }
    out.push('\n');
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse(format!("invalid number `{s}`")))
}

fn parse_rotation(line: &str) -> Result<RotationMatrix> {
    let values = line
        .split_whitespace()
        .map(parse_num::<f64>)
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != 9 {
        return Err(Error::Parse(format!(
            "expected 9 values, found {}",
            values.len()
        )));
    }
    RotationMatrix::new(Matrix3::from_row_slice(&values))
}
