//! Rotation group SO(3): exponential and logarithm maps, geodesic and chordal
//! distances, projection of arbitrary 3x3 matrices onto SO(3), and the
//! `vec`/`hat` helpers used by the averaging estimators.
//!
//! Rotations are stored as plain rotation matrices. The tangent space is
//! represented by rotation vectors `v = θ·v̂` (radians).

use std::f64::consts::PI;
use std::ops::Mul;

use nalgebra::SVector;

use crate::error::{Error, Result};

pub type Matrix3 = nalgebra::Matrix3<f64>;
pub type Vector3 = nalgebra::Vector3<f64>;
/// Column-stacked vectorization of a [`Matrix3`].
pub type Vector9 = SVector<f64, 9>;

/// Maximum `‖MᵀM − I‖_F` and `|det M − 1|` accepted for a rotation matrix.
pub const ORTHONORMALITY_TOL: f64 = 1e-9;

/// Below this angle the Exp/Log coefficients switch to their Taylor series.
pub const SMALL_ANGLE: f64 = 1e-4;

/// When `π − θ` falls below this, Log recovers the axis from the symmetric part.
pub const NEAR_PI: f64 = 1e-6;

/// Components with magnitude at or below this count as zero in the θ = π
/// sign tie-break.
const AXIS_ZERO: f64 = 1e-12;

/// A 3x3 orthonormal matrix with determinant +1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3);

impl RotationMatrix {
    /// Validates `m` against [`ORTHONORMALITY_TOL`].
    pub fn new(m: Matrix3) -> Result<Self> {
        if !m.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let orthonormality = orthonormality_error(&m);
        let det = m.determinant();
        if orthonormality > ORTHONORMALITY_TOL || (det - 1.0).abs() > ORTHONORMALITY_TOL {
            return Err(Error::NotRotation {
                orthonormality,
                det,
            });
        }
        Ok(Self(m))
    }

    /// Wraps `m` without validation. The caller guarantees `m ∈ SO(3)`.
    pub fn from_matrix_unchecked(m: Matrix3) -> Self {
        Self(m)
    }

    /// Builds a rotation matrix from a unit quaternion `(w, x, y, z)`.
    /// The quaternion is normalized first.
    pub fn from_quaternion(w: f64, x: f64, y: f64, z: f64) -> Self {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        let (w, x, y, z) = (w / n, x / n, y / n, z / n);
        Self(Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ))
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3 {
        &self.0
    }

    pub fn into_inner(self) -> Matrix3 {
        self.0
    }

    /// The inverse rotation.
    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        let (cos, sin) = cos_sin(&self.0);
        sin.atan2(cos)
    }

    pub fn log(&self) -> RotationVector {
        log_map(self)
    }

    /// `‖MᵀM − I‖_F`
    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.0)
    }
}

impl Default for RotationMatrix {
    fn default() -> Self {
        Self::identity()
    }
}

impl Mul for RotationMatrix {
    type Output = RotationMatrix;

    fn mul(self, rhs: RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * rhs.0)
    }
}

impl Mul<&RotationMatrix> for &RotationMatrix {
    type Output = RotationMatrix;

    fn mul(self, rhs: &RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * rhs.0)
    }
}

impl Mul<Vector3> for &RotationMatrix {
    type Output = Vector3;

    fn mul(self, rhs: Vector3) -> Vector3 {
        self.0 * rhs
    }
}

/// Axis-angle vector `θ·v̂` in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationVector(Vector3);

impl RotationVector {
    pub fn new(v: Vector3) -> Result<Self> {
        if v.iter().all(|x| x.is_finite()) {
            Ok(Self(v))
        } else {
            Err(Error::NonFinite)
        }
    }

    /// `axis` need not be normalized; a zero axis yields the zero vector.
    pub fn from_axis_angle(axis: &Vector3, angle: f64) -> Result<Self> {
        let n = axis.norm();
        if n == 0.0 {
            return Self::new(Vector3::zeros());
        }
        Self::new(axis * (angle / n))
    }

    pub fn zero() -> Self {
        Self(Vector3::zeros())
    }

    pub fn vector(&self) -> &Vector3 {
        &self.0
    }

    pub fn angle(&self) -> f64 {
        self.0.norm()
    }

    /// Unit axis, or `None` for the zero rotation.
    pub fn axis(&self) -> Option<Vector3> {
        let n = self.0.norm();
        (n > 0.0).then(|| self.0 / n)
    }

    pub fn exp(&self) -> RotationMatrix {
        exp_map(self)
    }
}

/// Rodrigues formula `Exp(v) = I + sinθ/θ·v^ + (1 − cosθ)/θ²·(v^)²`.
pub fn exp_map(v: &RotationVector) -> RotationMatrix {
    RotationMatrix(rodrigues(&v.0))
}

pub(crate) fn rodrigues(v: &Vector3) -> Matrix3 {
    let theta2 = v.norm_squared();
    let theta = theta2.sqrt();
    let (a, b) = if theta < SMALL_ANGLE {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        let half_sin = (0.5 * theta).sin();
        (theta.sin() / theta, 2.0 * half_sin * half_sin / theta2)
    };
    let k = hat(v);
    Matrix3::identity() + k * a + k * k * b
}

/// Canonical rotation vector of `r`, with `‖v‖ ∈ [0, π]`.
///
/// At exactly θ = π the sign of the axis is ambiguous; the representative
/// whose first nonzero component is positive is returned.
pub fn log_map(r: &RotationMatrix) -> RotationVector {
    RotationVector(log_raw(&r.0))
}

/// cos θ (clamped to [-1, 1]) and sin θ = ‖(R − Rᵀ)^∨‖/2.
#[inline]
fn cos_sin(m: &Matrix3) -> (f64, f64) {
    let cos = ((m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let sin = 0.5 * axial(m).norm();
    (cos, sin)
}

/// `(R − Rᵀ)^∨`, which equals `2 sinθ · v̂`.
#[inline]
fn axial(m: &Matrix3) -> Vector3 {
    Vector3::new(
        m[(2, 1)] - m[(1, 2)],
        m[(0, 2)] - m[(2, 0)],
        m[(1, 0)] - m[(0, 1)],
    )
}

pub(crate) fn log_raw(m: &Matrix3) -> Vector3 {
    let a = axial(m);
    let cos = ((m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let sin = 0.5 * a.norm();
    let theta = sin.atan2(cos);

    if theta < SMALL_ANGLE {
        // θ/(2 sinθ) = 1/2 + θ²/12 + O(θ⁴)
        a * (0.5 + theta * theta / 12.0)
    } else if PI - theta < NEAR_PI {
        log_near_pi(m, &a, theta, cos)
    } else {
        a * (theta / (2.0 * sin))
    }
}

/// The antisymmetric part vanishes as θ → π. Use `(R + Rᵀ)/2 = cosθ·I + (1 − cosθ)·v̂v̂ᵀ`
/// for the axis and the antisymmetric part only for its sign.
fn log_near_pi(m: &Matrix3, a: &Vector3, theta: f64, cos: f64) -> Vector3 {
    let sym = (m + m.transpose()) * 0.5;
    let outer = (sym - Matrix3::identity() * cos) / (1.0 - cos);
    let (i, _) = outer.diagonal().argmax();
    let mut axis: Vector3 = outer.column(i).into_owned();
    axis /= axis.norm();

    let d = axis.dot(a);
    if d.abs() > AXIS_ZERO {
        if d < 0.0 {
            axis = -axis;
        }
    } else if let Some(first) = axis.iter().find(|c| c.abs() > AXIS_ZERO) {
        if *first < 0.0 {
            axis = -axis;
        }
    }
    axis * theta
}

/// Angle of `r1·r2ᵀ`, in `[0, π]`.
pub fn geodesic_distance(r1: &RotationMatrix, r2: &RotationMatrix) -> f64 {
    RotationMatrix(r1.0 * r2.0.transpose()).angle()
}

/// `‖r1 − r2‖_F`, equal to `2√2·sin(d_geodesic/2)`.
pub fn chordal_distance(r1: &RotationMatrix, r2: &RotationMatrix) -> f64 {
    (r1.0 - r2.0).norm()
}

/// Converts a geodesic distance (radians) to the matching chordal distance.
pub fn geodesic_to_chordal(angle: f64) -> f64 {
    2.0 * std::f64::consts::SQRT_2 * (0.5 * angle).sin()
}

/// Inverse of [`geodesic_to_chordal`] on `[0, 2√2]`.
pub fn chordal_to_geodesic(chord: f64) -> f64 {
    2.0 * (chord / (2.0 * std::f64::consts::SQRT_2))
        .clamp(-1.0, 1.0)
        .asin()
}

/// Result of [`project_to_so3_with_diagnostics`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub rotation: RotationMatrix,
    /// The nearest rotation is not unique; `rotation` is one of the minimizers.
    pub degenerate: bool,
}

/// Closest rotation to `m` in the Frobenius norm: `U·W·Vᵀ` with
/// `W = diag(1, 1, −1)` when `det(UVᵀ) < 0`.
pub fn project_to_so3(m: &Matrix3) -> Result<RotationMatrix> {
    project_to_so3_with_diagnostics(m).map(|p| p.rotation)
}

pub fn project_to_so3_with_diagnostics(m: &Matrix3) -> Result<Projection> {
    if !m.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let svd = m
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or(Error::NonFinite)?;
    let mut u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let s = svd.singular_values;

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    let (s_max, s_mid, s_min) = (s[order[0]], s[order[1]], s[order[2]]);

    let reflect = (u * v_t).determinant() < 0.0;
    if reflect {
        u.column_mut(order[2]).neg_mut();
    }
    // The minimizer is unique iff s_mid + sign(det)·s_min > 0.
    let margin = if reflect {
        s_mid - s_min
    } else {
        s_mid + s_min
    };
    let degenerate = margin <= 1e-12 * s_max.max(f64::MIN_POSITIVE);

    let rotation = RotationMatrix(u * v_t);
    debug_assert!(rotation.orthonormality_error() <= ORTHONORMALITY_TOL);
    Ok(Projection {
        rotation,
        degenerate,
    })
}

/// Column-major vectorization: `s[3k + j] = M[(j, k)]`.
pub fn vec(m: &Matrix3) -> Vector9 {
    Vector9::from_column_slice(m.as_slice())
}

pub fn vec_inv(s: &Vector9) -> Matrix3 {
    Matrix3::from_column_slice(s.as_slice())
}

/// Skew-symmetric matrix with `hat(v)·w = v × w`.
pub fn hat(v: &Vector3) -> Matrix3 {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`hat`]. Fails if `m` is not skew-symmetric within 1e-9.
pub fn vee(m: &Matrix3) -> Result<Vector3> {
    let asym = (m + m.transpose()).amax();
    if !asym.is_finite() {
        return Err(Error::NonFinite);
    }
    if asym > 1e-9 {
        return Err(Error::NotSkewSymmetric(asym));
    }
    Ok(Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)]))
}

fn orthonormality_error(m: &Matrix3) -> f64 {
    (m.transpose() * m - Matrix3::identity()).norm()
}
