//! Robust single rotation averaging.
//!
//! Given `N` noisy, possibly outlier-contaminated measurements of one rotation,
//! estimate the rotation. Four estimators are provided in [`averaging`]:
//!
//! * the chordal L2-mean (closed form, not robust),
//! * the projected elementwise median (closed form, robust initializer),
//! * the geodesic L1-mean, computed with a Weiszfeld iteration on SO(3),
//! * an approximate chordal L1-mean, computed with a Euclidean Weiszfeld
//!   iteration on the 9-dimensional embedding followed by projection.
//!
//! Both iterative estimators start from the elementwise median and can
//! discard, at every iteration, residuals larger than
//! `max(first quartile, d_max)`.
//!
//! ```
//! use rotavg::averaging::{geodesic_l1_mean, AveragingConfig};
//! use rotavg::synthetic::{make_instance, TrialSpec};
//! use rotavg::so3::geodesic_distance;
//!
//! let problem = make_instance(&TrialSpec::new(100, 5.0, 0.5, 7)).unwrap();
//! let result = geodesic_l1_mean(&problem.rotations, &AveragingConfig::default()).unwrap();
//! assert!(geodesic_distance(&result.estimate, &problem.ground_truth) < 0.05);
//! ```

pub mod averaging;
pub mod error;
pub mod so3;
pub mod synthetic;

pub use averaging::{AveragingConfig, AveragingResult, Method, Metric, ThresholdRule};
pub use error::{Error, Result};
pub use so3::{Matrix3, RotationMatrix, RotationVector, Vector3, Vector9};
