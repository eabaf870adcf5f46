//! Single rotation averaging estimators.
//!
//! The two iterative estimators share the same skeleton: start from the
//! elementwise median, then run a Weiszfeld iteration in which every input
//! gets weight `1/dᵢ`, optionally zeroed when `dᵢ` exceeds
//! `max(Q1(d), d_max)`. [`geodesic_l1_mean`] runs it on SO(3) through the
//! Exp/Log maps; [`chordal_l1_mean_approx`] runs it on the column-stacked
//! matrices in R⁹ and projects the result back onto SO(3) once at the end.
//!
//! Perturbations that move the estimate off a data point are drawn from a
//! ChaCha8 generator seeded with [`AveragingConfig::seed`], so results are
//! reproducible bit for bit.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::so3::{
    self, geodesic_distance, geodesic_to_chordal, log_raw, project_to_so3_with_diagnostics,
    rodrigues, Matrix3, Projection, RotationMatrix, Vector3, Vector9,
};
use crate::synthetic::random_unit_vector;

/// Distance below which the estimate is treated as sitting on an input.
pub const COINCIDENCE_TOL: f64 = 1e-9;

/// Distance used by a Weiszfeld iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    /// Rotation angle between two rotations, radians.
    Geodesic,
    /// Frobenius norm of the difference, `2√2·sin(angle/2)`.
    Chordal,
}

/// The fixed lower bound `d_max` of the rejection threshold.
///
/// Stored as geodesic angles; the chordal value is obtained with
/// `2√2·sin(d/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdRule {
    /// Inputs with at most this many rotations use `small_n_angle`.
    pub small_n_limit: usize,
    pub small_n_angle: f64,
    pub large_n_angle: f64,
}

impl Default for ThresholdRule {
    fn default() -> Self {
        Self {
            small_n_limit: 50,
            small_n_angle: 1.0,
            large_n_angle: 0.5,
        }
    }
}

impl ThresholdRule {
    pub fn d_max(&self, n: usize, metric: Metric) -> f64 {
        let angle = if n <= self.small_n_limit {
            self.small_n_angle
        } else {
            self.large_n_angle
        };
        match metric {
            Metric::Geodesic => angle,
            Metric::Chordal => geodesic_to_chordal(angle),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragingConfig {
    pub max_iterations: usize,
    /// The iteration stops once the update step is shorter than this.
    pub convergence_tol: f64,
    /// Zero the weight of residuals above `max(Q1, d_max)`.
    pub rejection: bool,
    pub threshold: ThresholdRule,
    /// Angle of the random rotation applied on the geodesic path, or the
    /// upper bound of the per-component uniform offset in R⁹, when the
    /// estimate coincides with an input.
    pub perturbation: f64,
    pub seed: u64,
}

impl Default for AveragingConfig {
    fn default() -> Self {
        Self {
            max_iterations: 10,
            convergence_tol: 1e-3,
            rejection: true,
            threshold: ThresholdRule::default(),
            perturbation: 1e-3,
            seed: 0,
        }
    }
}

impl AveragingConfig {
    pub fn with_rejection(mut self, rejection: bool) -> Self {
        self.rejection = rejection;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        if !(self.convergence_tol > 0.0 && self.convergence_tol.is_finite()) {
            return Err(Error::InvalidConfig(
                "convergence_tol must be positive".into(),
            ));
        }
        if !(self.perturbation > 0.0 && self.perturbation.is_finite()) {
            return Err(Error::InvalidConfig("perturbation must be positive".into()));
        }
        let t = &self.threshold;
        if !(t.small_n_angle >= 0.0 && t.large_n_angle >= 0.0) {
            return Err(Error::InvalidConfig(
                "d_max angles must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Output of an averaging estimator together with its final-iteration
/// diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragingResult {
    pub estimate: RotationMatrix,
    pub iterations_used: usize,
    /// Distance of every input to the estimate at the start of the last
    /// iteration: radians for the geodesic method, R⁹ norms for the chordal
    /// one. Closed-form methods report geodesic distances to the estimate.
    pub residuals: Vec<f64>,
    /// Inlier weights (0 or 1) used in the last iteration.
    pub weights: Vec<f64>,
    pub converged: bool,
    /// Unweighted L1 cost `Σ dᵢ` at the start of every iteration.
    pub cost_trace: Vec<f64>,
    /// An SO(3) projection along the way had no unique minimizer.
    pub degenerate: bool,
    /// Chordal method only: the R⁹ geometric median before projection.
    pub unprojected: Option<Matrix3>,
}

impl AveragingResult {
    pub fn inlier_count(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }
}

/// `proj_SO(3)(Σ Rᵢ)`.
pub fn chordal_l2_mean(rotations: &[RotationMatrix]) -> Result<RotationMatrix> {
    chordal_l2_mean_with_diagnostics(rotations).map(|p| p.rotation)
}

pub fn chordal_l2_mean_with_diagnostics(rotations: &[RotationMatrix]) -> Result<Projection> {
    if rotations.is_empty() {
        return Err(Error::Empty);
    }
    let sum = rotations
        .iter()
        .fold(Matrix3::zeros(), |acc, r| acc + r.matrix());
    project_to_so3_with_diagnostics(&sum)
}

/// Entry-wise scalar median of the input matrices. For an even count the two
/// middle order statistics are averaged.
pub fn elementwise_median_matrix(rotations: &[RotationMatrix]) -> Result<Matrix3> {
    if rotations.is_empty() {
        return Err(Error::Empty);
    }
    let mut scratch = vec![0.0; rotations.len()];
    let mut out = Matrix3::zeros();
    for idx in 0..9 {
        for (slot, r) in scratch.iter_mut().zip(rotations) {
            *slot = r.matrix()[idx];
        }
        out[idx] = median_in_place(&mut scratch);
    }
    Ok(out)
}

/// Median of a nonempty slice; reorders the slice.
fn median_in_place(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (lower, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// `proj_SO(3)` of the elementwise median.
pub fn initialize_elementwise_median(rotations: &[RotationMatrix]) -> Result<RotationMatrix> {
    project_to_so3_with_diagnostics(&elementwise_median_matrix(rotations)?).map(|p| p.rotation)
}

/// Nearest-rank lower quartile: the value at sorted 1-indexed rank `⌈N/4⌉`.
pub fn quartile_q1(values: &[f64]) -> Result<f64> {
    let mut scratch = values.to_vec();
    q1_in_place(&mut scratch)
}

fn q1_in_place(values: &mut [f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    let rank = values.len().div_ceil(4);
    let (_, q1, _) = values.select_nth_unstable_by(rank - 1, f64::total_cmp);
    Ok(*q1)
}

/// `max(Q1(residuals), d_max(N, metric))`.
pub fn rejection_threshold(
    residuals: &[f64],
    n: usize,
    metric: Metric,
    rule: &ThresholdRule,
) -> Result<f64> {
    Ok(quartile_q1(residuals)?.max(rule.d_max(n, metric)))
}

/// Fills `weights` with 0/1 inlier flags and returns the sums
/// `(Σ wᵢ/dᵢ)` needed by the Weiszfeld step.
fn inlier_weights(residuals: &[f64], threshold: Option<f64>, weights: &mut [f64]) -> f64 {
    let mut norm = 0.0;
    for (w, &d) in weights.iter_mut().zip(residuals) {
        *w = match threshold {
            Some(t) if d > t => 0.0,
            _ => 1.0,
        };
        debug_assert!(d > 0.0);
        norm += *w / d;
    }
    assert!(norm > 0.0, "every input was rejected");
    norm
}

/// Geodesic L1-mean on SO(3) by a Weiszfeld iteration started at the
/// projected elementwise median, with optional outlier rejection.
pub fn geodesic_l1_mean(
    rotations: &[RotationMatrix],
    config: &AveragingConfig,
) -> Result<AveragingResult> {
    config.validate()?;
    if rotations.is_empty() {
        return Err(Error::Empty);
    }
    let n = rotations.len();
    let init = project_to_so3_with_diagnostics(&elementwise_median_matrix(rotations)?)?;
    let d_max = config.threshold.d_max(n, Metric::Geodesic);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut estimate = init.rotation.into_inner();
    let mut tangents = vec![Vector3::zeros(); n];
    let mut residuals = vec![0.0; n];
    let mut weights = vec![1.0; n];
    let mut scratch = vec![0.0; n];
    let mut cost_trace = Vec::with_capacity(config.max_iterations);
    let mut converged = false;
    let mut iterations_used = 0;

    for _ in 0..config.max_iterations {
        iterations_used += 1;
        loop {
            let estimate_t = estimate.transpose();
            let mut coincident = false;
            for ((v, d), r) in tangents.iter_mut().zip(&mut residuals).zip(rotations) {
                *v = log_raw(&(r.matrix() * estimate_t));
                *d = v.norm();
                coincident |= *d < COINCIDENCE_TOL;
            }
            if !coincident {
                break;
            }
            let kick = random_unit_vector(&mut rng) * config.perturbation;
            estimate = rodrigues(&kick) * estimate;
        }
        debug_assert!(residuals.iter().all(|&d| d >= COINCIDENCE_TOL));
        cost_trace.push(residuals.iter().sum());

        let threshold = if config.rejection {
            scratch.copy_from_slice(&residuals);
            Some(q1_in_place(&mut scratch)?.max(d_max))
        } else {
            None
        };
        let norm = inlier_weights(&residuals, threshold, &mut weights);
        let step = tangents
            .iter()
            .zip(&residuals)
            .zip(&weights)
            .fold(Vector3::zeros(), |acc, ((v, d), w)| acc + v * (w / d))
            / norm;

        estimate = rodrigues(&step) * estimate;
        if step.norm() < config.convergence_tol {
            converged = true;
            break;
        }
    }

    Ok(AveragingResult {
        estimate: RotationMatrix::from_matrix_unchecked(estimate),
        iterations_used,
        residuals,
        weights,
        converged,
        cost_trace,
        degenerate: init.degenerate,
        unprojected: None,
    })
}

/// Approximate chordal L1-mean: the Euclidean geometric median of the
/// column-stacked rotations in R⁹, projected onto SO(3).
///
/// The iteration starts at the unprojected elementwise median.
pub fn chordal_l1_mean_approx(
    rotations: &[RotationMatrix],
    config: &AveragingConfig,
) -> Result<AveragingResult> {
    config.validate()?;
    if rotations.is_empty() {
        return Err(Error::Empty);
    }
    let n = rotations.len();
    let points: Vec<Vector9> = rotations.iter().map(|r| so3::vec(r.matrix())).collect();
    let mut s = so3::vec(&elementwise_median_matrix(rotations)?);
    let d_max = config.threshold.d_max(n, Metric::Chordal);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut diffs = vec![Vector9::zeros(); n];
    let mut residuals = vec![0.0; n];
    let mut weights = vec![1.0; n];
    let mut scratch = vec![0.0; n];
    let mut cost_trace = Vec::with_capacity(config.max_iterations);
    let mut converged = false;
    let mut iterations_used = 0;

    for _ in 0..config.max_iterations {
        iterations_used += 1;
        loop {
            let mut coincident = false;
            for ((v, d), p) in diffs.iter_mut().zip(&mut residuals).zip(&points) {
                *v = p - s;
                *d = v.norm();
                coincident |= *d < COINCIDENCE_TOL;
            }
            if !coincident {
                break;
            }
            for c in s.iter_mut() {
                *c += rng.random_range(0.0..config.perturbation);
            }
        }
        debug_assert!(residuals.iter().all(|&d| d >= COINCIDENCE_TOL));
        cost_trace.push(residuals.iter().sum());

        let threshold = if config.rejection {
            scratch.copy_from_slice(&residuals);
            Some(q1_in_place(&mut scratch)?.max(d_max))
        } else {
            None
        };
        let norm = inlier_weights(&residuals, threshold, &mut weights);
        let step = diffs
            .iter()
            .zip(&residuals)
            .zip(&weights)
            .fold(Vector9::zeros(), |acc, ((v, d), w)| acc + v * (w / d))
            / norm;

        s += step;
        if step.norm() < config.convergence_tol {
            converged = true;
            break;
        }
    }

    let unprojected = so3::vec_inv(&s);
    let projection = project_to_so3_with_diagnostics(&unprojected)?;
    Ok(AveragingResult {
        estimate: projection.rotation,
        iterations_used,
        residuals,
        weights,
        converged,
        cost_trace,
        degenerate: projection.degenerate,
        unprojected: Some(unprojected),
    })
}

/// The four estimators behind one interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    ChordalL2,
    InitMedian,
    GeodesicL1,
    ChordalL1,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::ChordalL2,
        Method::InitMedian,
        Method::GeodesicL1,
        Method::ChordalL1,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::ChordalL2 => "chordal-l2",
            Method::InitMedian => "init-median",
            Method::GeodesicL1 => "geodesic-l1",
            Method::ChordalL1 => "chordal-l1",
        }
    }

    /// Whether the estimator has an outlier-rejection switch.
    pub fn is_iterative(&self) -> bool {
        matches!(self, Method::GeodesicL1 | Method::ChordalL1)
    }

    /// Runs the estimator. Closed-form methods ignore `config` and report
    /// zero iterations with geodesic residuals to the estimate.
    pub fn run(
        &self,
        rotations: &[RotationMatrix],
        config: &AveragingConfig,
    ) -> Result<AveragingResult> {
        let projection = match self {
            Method::GeodesicL1 => return geodesic_l1_mean(rotations, config),
            Method::ChordalL1 => return chordal_l1_mean_approx(rotations, config),
            Method::ChordalL2 => chordal_l2_mean_with_diagnostics(rotations)?,
            Method::InitMedian => {
                project_to_so3_with_diagnostics(&elementwise_median_matrix(rotations)?)?
            }
        };
        let estimate = projection.rotation;
        let residuals: Vec<f64> = rotations
            .iter()
            .map(|r| geodesic_distance(r, &estimate))
            .collect();
        Ok(AveragingResult {
            estimate,
            iterations_used: 0,
            weights: vec![1.0; rotations.len()],
            cost_trace: vec![residuals.iter().sum()],
            residuals,
            converged: true,
            degenerate: projection.degenerate,
            unprojected: None,
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::{exp_map, RotationVector};
    use crate::synthetic::random_rotation_uniform;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn rot(x: f64, y: f64, z: f64) -> RotationMatrix {
        exp_map(&RotationVector::new(Vector3::new(x, y, z)).unwrap())
    }

    fn about_z_with_cos(c: f64) -> RotationMatrix {
        rot(0.0, 0.0, c.acos())
    }

    /// Uniform rotation farther than `min_angle` from `center`.
    fn far_outlier(
        rng: &mut ChaCha8Rng,
        center: &RotationMatrix,
        min_angle: f64,
    ) -> RotationMatrix {
        loop {
            let r = random_rotation_uniform(rng);
            if geodesic_distance(&r, center) > min_angle {
                return r;
            }
        }
    }

    #[test]
    fn l2_mean_of_copies() {
        let r = rot(0.3, -1.2, 0.5);
        assert_relative_eq!(
            *chordal_l2_mean(&[r]).unwrap().matrix(),
            *r.matrix(),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            *chordal_l2_mean(&[r, r, r]).unwrap().matrix(),
            *r.matrix(),
            epsilon = 1e-12
        );
        assert_eq!(chordal_l2_mean(&[]), Err(Error::Empty));
    }

    #[test]
    fn l2_mean_flags_cancelling_inputs() {
        // Two opposite half turns about z sum to diag(0, 0, 2): rank one.
        let a = rot(0.0, 0.0, 0.0);
        let b = rot(0.0, 0.0, std::f64::consts::PI);
        let p = chordal_l2_mean_with_diagnostics(&[a, b]).unwrap();
        assert!(p.degenerate);
        assert!(RotationMatrix::new(p.rotation.into_inner()).is_ok());
    }

    #[test]
    fn median_matrix_entries() {
        let r = rot(0.1, 0.2, 0.3);
        assert_eq!(elementwise_median_matrix(&[r]).unwrap(), *r.matrix());

        let three = [0.9, 0.2, 0.5].map(about_z_with_cos);
        assert_relative_eq!(
            elementwise_median_matrix(&three).unwrap()[(0, 0)],
            0.5,
            epsilon = 1e-15
        );

        let four = [0.9, 0.1, 0.5, 0.2].map(about_z_with_cos);
        assert_relative_eq!(
            elementwise_median_matrix(&four).unwrap()[(0, 0)],
            0.35,
            epsilon = 1e-15
        );

        assert_eq!(elementwise_median_matrix(&[]), Err(Error::Empty));
    }

    #[test]
    fn median_matrix_majority_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n_out in [0, 1, 10, 49] {
            let truth = random_rotation_uniform(&mut rng);
            let mut rs = vec![truth; 51];
            rs.extend((0..n_out).map(|_| random_rotation_uniform(&mut rng)));
            assert_eq!(elementwise_median_matrix(&rs).unwrap(), *truth.matrix());
        }
    }

    #[test]
    fn median_init_recovers_majority() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let truth = random_rotation_uniform(&mut rng);
        let mut rs = vec![truth; 70];
        rs.extend((0..30).map(|_| random_rotation_uniform(&mut rng)));
        let r0 = initialize_elementwise_median(&rs).unwrap();
        assert!(geodesic_distance(&r0, &truth) <= 1e-9);
        assert!((r0.matrix() - truth.matrix()).norm() <= 1e-9);
    }

    #[test]
    fn q1_nearest_rank() {
        assert_eq!(quartile_q1(&[5.0]).unwrap(), 5.0);
        assert_eq!(quartile_q1(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 1.0);
        assert_eq!(
            quartile_q1(&[3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0]).unwrap(),
            1.0
        );
        assert_eq!(quartile_q1(&[5.0, 4.0, 3.0, 2.0, 1.0]).unwrap(), 2.0);
        assert_eq!(quartile_q1(&[]), Err(Error::Empty));
    }

    #[test]
    fn threshold_examples() {
        let rule = ThresholdRule::default();
        let small: Vec<f64> = (0..10).map(|i| 0.05 * i as f64).collect();
        assert_eq!(
            rejection_threshold(&small, 10, Metric::Geodesic, &rule).unwrap(),
            1.0
        );

        let mut big = vec![0.9; 100];
        big[99] = 2.0;
        assert_eq!(
            rejection_threshold(&big, 100, Metric::Chordal, &rule).unwrap(),
            0.9
        );
        assert_relative_eq!(rule.d_max(100, Metric::Chordal), 0.700, epsilon = 1e-3);
        assert_relative_eq!(rule.d_max(50, Metric::Chordal), 1.356, epsilon = 1e-3);

        let low = vec![0.1; 100];
        assert_eq!(
            rejection_threshold(&low, 100, Metric::Geodesic, &rule).unwrap(),
            0.5
        );
    }

    #[test]
    fn config_validation() {
        let base = AveragingConfig::default();
        assert!(base.validate().is_ok());
        assert!(base.with_max_iterations(0).validate().is_err());
        let bad_tol = AveragingConfig {
            convergence_tol: 0.0,
            ..base
        };
        assert!(bad_tol.validate().is_err());
        let bad_perturb = AveragingConfig {
            perturbation: -1.0,
            ..base
        };
        assert!(geodesic_l1_mean(&[RotationMatrix::identity()], &bad_perturb).is_err());
        assert!(chordal_l1_mean_approx(&[RotationMatrix::identity()], &bad_perturb).is_err());
    }

    #[test]
    fn empty_input_rejected() {
        let cfg = AveragingConfig::default();
        assert_eq!(geodesic_l1_mean(&[], &cfg), Err(Error::Empty));
        assert_eq!(chordal_l1_mean_approx(&[], &cfg), Err(Error::Empty));
    }

    #[test]
    fn single_input_is_its_own_median() {
        let r = rot(-0.7, 0.4, 1.9);
        let cfg = AveragingConfig::default();
        for result in [
            geodesic_l1_mean(&[r], &cfg).unwrap(),
            chordal_l1_mean_approx(&[r], &cfg).unwrap(),
        ] {
            assert!(geodesic_distance(&result.estimate, &r) < cfg.convergence_tol);
            assert_eq!(result.weights, vec![1.0]);
        }
    }

    #[test]
    fn identical_inputs_are_a_fixed_point() {
        let r = rot(1.0, 2.0, -0.5);
        let rs = vec![r; 12];
        for rejection in [false, true] {
            let cfg = AveragingConfig::default()
                .with_rejection(rejection)
                .with_seed(9);
            let g = geodesic_l1_mean(&rs, &cfg).unwrap();
            let c = chordal_l1_mean_approx(&rs, &cfg).unwrap();
            assert!(geodesic_distance(&g.estimate, &r) < cfg.convergence_tol);
            assert!(geodesic_distance(&c.estimate, &r) < cfg.convergence_tol);
        }
    }

    #[test]
    fn majority_with_gross_outliers_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let cfg = AveragingConfig::default();
        for _ in 0..20 {
            let truth = random_rotation_uniform(&mut rng);
            let mut rs = vec![truth; 7];
            rs.extend((0..3).map(|_| far_outlier(&mut rng, &truth, 1.0)));
            let g = geodesic_l1_mean(&rs, &cfg).unwrap();
            let c = chordal_l1_mean_approx(&rs, &cfg).unwrap();
            assert!(geodesic_distance(&g.estimate, &truth) <= 1e-6);
            assert!(geodesic_distance(&c.estimate, &truth) <= 1e-6);
            assert_eq!(&g.weights[..7], &[1.0; 7]);
            assert_eq!(&g.weights[7..], &[0.0; 3]);
        }
    }

    #[test]
    fn rejection_off_keeps_every_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rs: Vec<_> = (0..40).map(|_| random_rotation_uniform(&mut rng)).collect();
        let cfg = AveragingConfig::default().with_rejection(false);
        for m in [Method::GeodesicL1, Method::ChordalL1] {
            let res = m.run(&rs, &cfg).unwrap();
            assert!(res.weights.iter().all(|&w| w == 1.0));
            assert_eq!(res.residuals.len(), 40);
            assert!(res.iterations_used <= cfg.max_iterations);
            assert_eq!(res.cost_trace.len(), res.iterations_used);
        }
    }

    #[test]
    fn geodesic_iterates_stay_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let rs: Vec<_> = (0..30).map(|_| random_rotation_uniform(&mut rng)).collect();
        for k in 1..=10 {
            let cfg = AveragingConfig::default()
                .with_max_iterations(k)
                .with_rejection(k % 2 == 0);
            let res = geodesic_l1_mean(&rs, &cfg).unwrap();
            assert!(RotationMatrix::new(res.estimate.into_inner()).is_ok());
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let truth = random_rotation_uniform(&mut rng);
        // Coincident inputs make the perturbation RNG matter.
        let mut rs = vec![truth; 30];
        rs.extend((0..20).map(|_| random_rotation_uniform(&mut rng)));
        let cfg = AveragingConfig::default().with_seed(99);
        for m in Method::ALL {
            assert_eq!(m.run(&rs, &cfg).unwrap(), m.run(&rs, &cfg).unwrap());
        }
    }

    #[test]
    fn method_names_roundtrip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("median".parse::<Method>().is_err());
    }

    fn ball_instance(seed: u64, n: usize, radius: f64) -> Vec<RotationMatrix> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let center = random_rotation_uniform(&mut rng);
        (0..n)
            .map(|_| {
                let axis = random_unit_vector(&mut rng);
                let angle = rng.random_range(0.0..radius);
                exp_map(&RotationVector::new(axis * angle).unwrap()) * center
            })
            .collect()
    }

    #[test]
    fn l1_cost_never_increases_in_small_ball() {
        let cfg = AveragingConfig::default().with_rejection(false);
        for seed in 0..1000u64 {
            let n = 3 + (seed as usize % 40);
            let rs = ball_instance(seed, n, 1.5);

            let r0 = initialize_elementwise_median(&rs).unwrap();
            let g = geodesic_l1_mean(&rs, &cfg).unwrap();
            let cost = |e: &RotationMatrix| rs.iter().map(|r| geodesic_distance(r, e)).sum::<f64>();
            assert!(cost(&g.estimate) <= cost(&r0) + 1e-12, "seed {seed}");

            let s0 = elementwise_median_matrix(&rs).unwrap();
            let c = chordal_l1_mean_approx(&rs, &cfg).unwrap();
            let s = c.unprojected.unwrap();
            let cost9 = |e: &Matrix3| rs.iter().map(|r| (r.matrix() - e).norm()).sum::<f64>();
            assert!(cost9(&s) <= cost9(&s0) + 1e-12, "seed {seed}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn surviving_weights_at_least_a_quarter(seed in any::<u64>(), n in 1usize..120, outlier_pct in 0usize..100) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let truth = random_rotation_uniform(&mut rng);
            let n_out = n * outlier_pct / 100;
            let mut rs = ball_instance(seed, n - n_out, 0.2);
            rs.iter_mut().for_each(|r| *r = *r * truth);
            rs.extend((0..n_out).map(|_| random_rotation_uniform(&mut rng)));
            let cfg = AveragingConfig::default().with_seed(seed);
            for m in [Method::GeodesicL1, Method::ChordalL1] {
                let res = m.run(&rs, &cfg).unwrap();
                prop_assert_eq!(res.residuals.len(), n);
                prop_assert_eq!(res.weights.len(), n);
                prop_assert!(res.weights.iter().all(|&w| w == 0.0 || w == 1.0));
                prop_assert!(res.inlier_count() >= n.div_ceil(4));
                prop_assert!(res.iterations_used >= 1 && res.iterations_used <= cfg.max_iterations);
            }
        }
    }
}
