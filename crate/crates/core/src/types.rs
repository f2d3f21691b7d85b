//! Geometric primitives shared by the controller, the allocator and the simulator.
//!
//! Conventions: SI units throughout (m, s, rad). The inertial frame has its
//! z-axis along gravity, so hovering altitudes are negative.

use nalgebra::{Matrix3, Rotation3, SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};
use std::ops::Mul;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Vec6 = SVector<f64, 6>;
pub type Mat6 = SMatrix<f64, 6, 6>;
/// End-effector Jacobian with respect to `[p_B; p_E^D]`.
pub type Jacobian = SMatrix<f64, 3, 6>;

const ORTHO_TOL: f64 = 1e-9;

/// Cross-product matrix: `skew(v) * w == v.cross(&w)`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

pub fn all_finite(v: &Vec3) -> bool {
    v.iter().all(|c| c.is_finite())
}

/// A proper rotation matrix (orthonormal, det = +1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 3]; 3]", into = "[[f64; 3]; 3]")]
pub struct Rot3(Mat3);

impl Rot3 {
    pub fn identity() -> Self {
        Rot3(Mat3::identity())
    }

    /// Checks the rotation invariants to 1e-9.
    pub fn from_matrix(m: Mat3) -> Result<Self> {
        if !m.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("rotation matrix has non-finite entries"));
        }
        let ortho = (m.transpose() * m - Mat3::identity()).abs().max();
        if ortho > ORTHO_TOL {
            return Err(Error::invalid(format!(
                "rotation matrix is not orthonormal (max |R^T R - I| = {ortho:e})"
            )));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > ORTHO_TOL {
            return Err(Error::invalid(format!("rotation determinant is {det}, expected +1")));
        }
        Ok(Rot3(m))
    }

    /// Projects an approximately orthonormal matrix back onto SO(3).
    pub fn renormalized(m: Mat3) -> Self {
        Rot3(Rotation3::from_matrix_eps(&m, 1e-15, 64, Rotation3::identity()).into_inner())
    }

    /// Rotation about the z-axis by `psi` radians.
    pub fn yaw(psi: f64) -> Self {
        let (s, c) = psi.sin_cos();
        Rot3(Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
    }

    /// Rotation by the axis-angle vector `v` (angle = |v|).
    pub fn from_scaled_axis(v: Vec3) -> Self {
        Rot3(Rotation3::from_scaled_axis(v).into_inner())
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Rot3(self.0.transpose())
    }

    /// Heading angle of the body x-axis projected on the horizontal plane.
    pub fn yaw_angle(&self) -> f64 {
        self.0[(1, 0)].atan2(self.0[(0, 0)])
    }
}

impl Default for Rot3 {
    fn default() -> Self {
        Rot3::identity()
    }
}

impl Mul<Vec3> for Rot3 {
    type Output = Vec3;
    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

impl Mul<&Vec3> for &Rot3 {
    type Output = Vec3;
    fn mul(self, rhs: &Vec3) -> Vec3 {
        self.0 * rhs
    }
}

impl Mul for Rot3 {
    type Output = Rot3;
    fn mul(self, rhs: Rot3) -> Rot3 {
        Rot3::renormalized(self.0 * rhs.0)
    }
}

impl TryFrom<[[f64; 3]; 3]> for Rot3 {
    type Error = Error;
    fn try_from(rows: [[f64; 3]; 3]) -> Result<Self> {
        Rot3::from_matrix(Mat3::from_fn(|i, j| rows[i][j]))
    }
}

impl From<Rot3> for [[f64; 3]; 3] {
    fn from(r: Rot3) -> Self {
        let m = r.0;
        [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ]
    }
}

pub fn yaw_rotation(psi: f64) -> Rot3 {
    Rot3::yaw(psi)
}

/// Positive diagonal gain matrix stored by its diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct DiagGain([f64; 3]);

impl DiagGain {
    pub fn new(diag: [f64; 3]) -> Result<Self> {
        if diag.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::invalid(format!(
                "diagonal gain entries must be finite and positive, got {diag:?}"
            )));
        }
        Ok(DiagGain(diag))
    }

    pub fn isotropic(k: f64) -> Result<Self> {
        DiagGain::new([k; 3])
    }

    pub fn diag(&self) -> [f64; 3] {
        self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        Vec3::new(self.0[0] * v.x, self.0[1] * v.y, self.0[2] * v.z)
    }

    pub fn matrix(&self) -> Mat3 {
        Mat3::from_diagonal(&Vec3::from(self.0))
    }
}

impl TryFrom<[f64; 3]> for DiagGain {
    type Error = Error;
    fn try_from(d: [f64; 3]) -> Result<Self> {
        DiagGain::new(d)
    }
}

impl From<DiagGain> for [f64; 3] {
    fn from(g: DiagGain) -> Self {
        g.0
    }
}
