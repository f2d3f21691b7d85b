//! Delta-arm kinematics and the quadcopter + arm kinematic chain.
//!
//! The delta arm frame Σ_D sits at the centre of the arm's base plate with its
//! z-axis pointing away from the plate toward the workspace. Actuated joint
//! `i` sits at azimuth `φ_i = i·120°`, `base_radius` from the centre; the
//! upper arm swings in the vertical plane through that azimuth and `q_i` is
//! measured from the base plane, positive toward the workspace.
//!
//! The end-effector position in the inertial frame is
//! `p_E = p_B + R_B·(R_D^B·p_E^D + p_C^B)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::types::{all_finite, skew, Jacobian, Rot3, Vec3, Vec6};

/// Squared-length threshold below which a sphere/circle intersection is
/// treated as singular.
const SINGULAR_DISCRIMINANT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeltaGeometry {
    pub base_radius: f64,
    pub platform_radius: f64,
    pub upper_arm: f64,
    pub forearm: f64,
    pub q_min: Vec3,
    pub q_max: Vec3,
}

impl Default for DeltaGeometry {
    fn default() -> Self {
        DeltaGeometry {
            base_radius: 0.10,
            platform_radius: 0.035,
            upper_arm: 0.14,
            forearm: 0.28,
            q_min: Vec3::repeat(-0.6),
            q_max: Vec3::repeat(1.3),
        }
    }
}

fn azimuth(i: usize) -> (f64, f64) {
    (2.0 * PI * i as f64 / 3.0).sin_cos()
}

impl DeltaGeometry {
    pub fn validate(&self) -> Result<()> {
        let lengths = [self.base_radius, self.platform_radius, self.upper_arm, self.forearm];
        if lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::invalid(format!("delta lengths must be positive, got {lengths:?}")));
        }
        for i in 0..3 {
            if !(self.q_min[i] < self.q_max[i]) {
                return Err(Error::invalid(format!(
                    "joint {i} limits [{}, {}] are empty",
                    self.q_min[i], self.q_max[i]
                )));
            }
        }
        self.fk(&self.joint_midpoint())
            .map(|_| ())
            .map_err(|e| Error::invalid(format!("workspace is empty at the joint midpoint: {e}")))
    }

    pub fn joint_midpoint(&self) -> Vec3 {
        (self.q_min + self.q_max) * 0.5
    }

    pub fn check_limits(&self, q: &Vec3) -> Result<()> {
        for i in 0..3 {
            if !(q[i] >= self.q_min[i] && q[i] <= self.q_max[i]) {
                return Err(Error::JointLimit {
                    joint: i,
                    value: q[i],
                    min: self.q_min[i],
                    max: self.q_max[i],
                });
            }
        }
        Ok(())
    }

    /// Centre of the sphere swept by forearm `i`, shifted inward by the
    /// platform radius so that all three spheres meet at the platform centre.
    fn sphere_centre(&self, i: usize, qi: f64) -> Vec3 {
        let (s, c) = azimuth(i);
        let r = self.base_radius - self.platform_radius + self.upper_arm * qi.cos();
        Vec3::new(r * c, r * s, self.upper_arm * qi.sin())
    }

    /// Forward kinematics: platform centre in Σ_D from the joint angles.
    pub fn fk(&self, q: &Vec3) -> Result<Vec3> {
        if !all_finite(q) {
            return Err(Error::NonFinite("joint angles"));
        }
        self.check_limits(q)?;
        let c1 = self.sphere_centre(0, q[0]);
        let c2 = self.sphere_centre(1, q[1]);
        let c3 = self.sphere_centre(2, q[2]);

        // Trilateration with equal radii in the frame spanned by the centres.
        let d12 = c2 - c1;
        let d = d12.norm();
        if d < 1e-12 {
            return Err(Error::Unreachable("degenerate sphere centres".into()));
        }
        let ex = d12 / d;
        let d13 = c3 - c1;
        let i = ex.dot(&d13);
        let ey_raw = d13 - ex * i;
        let j = ey_raw.norm();
        if j < 1e-12 {
            return Err(Error::Unreachable("collinear sphere centres".into()));
        }
        let ey = ey_raw / j;
        let ez = ex.cross(&ey);
        let x = d / 2.0;
        let y = (i * i + j * j) / (2.0 * j) - i * x / j;
        let h2 = self.forearm * self.forearm - x * x - y * y;
        if h2 < SINGULAR_DISCRIMINANT {
            return Err(Error::Unreachable(format!(
                "forearm spheres do not intersect at q = {:?}",
                q.as_slice()
            )));
        }
        let h = h2.sqrt();
        let base = c1 + ex * x + ey * y;
        let a = base + ez * h;
        let b = base - ez * h;
        Ok(if a.z >= b.z { a } else { b })
    }

    /// Inverse kinematics, elbow-out branch, solved independently per arm.
    pub fn ik(&self, p: &Vec3) -> Result<Vec3> {
        if !all_finite(p) {
            return Err(Error::NonFinite("end-effector position"));
        }
        let mut q = Vec3::zeros();
        for arm in 0..3 {
            let (s, c) = azimuth(arm);
            // Into the arm's vertical plane (x' radial, y' tangential).
            let xr = c * p.x + s * p.y;
            let yt = -s * p.x + c * p.y;
            let a = xr + self.platform_radius - self.base_radius;
            let lf2 = self.forearm * self.forearm - yt * yt;
            if lf2 < SINGULAR_DISCRIMINANT {
                return Err(Error::Unreachable(format!(
                    "point {:?} is out of reach of arm {arm}",
                    p.as_slice()
                )));
            }
            // a·cos q + z·sin q = k
            let k = (a * a + p.z * p.z + self.upper_arm * self.upper_arm - lf2) / (2.0 * self.upper_arm);
            let rho2 = a * a + p.z * p.z;
            let disc = rho2 - k * k;
            if disc < SINGULAR_DISCRIMINANT {
                return Err(Error::Unreachable(format!(
                    "point {:?} is out of reach of arm {arm}",
                    p.as_slice()
                )));
            }
            let theta = p.z.atan2(a);
            let beta = disc.sqrt().atan2(k);
            let mut qi = theta - beta;
            if qi <= -PI {
                qi += 2.0 * PI;
            } else if qi > PI {
                qi -= 2.0 * PI;
            }
            q[arm] = qi;
        }
        self.check_limits(&q)?;
        Ok(q)
    }
}

pub fn delta_fk(g: &DeltaGeometry, q: &Vec3) -> Result<Vec3> {
    g.fk(q)
}

pub fn delta_ik(g: &DeltaGeometry, p: &Vec3) -> Result<Vec3> {
    g.ik(p)
}

/// Pose of the arm base relative to the quadcopter body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MountingConfig {
    pub r_d_b: Rot3,
    pub p_c_b: Vec3,
}

impl Default for MountingConfig {
    fn default() -> Self {
        MountingConfig {
            r_d_b: Rot3::identity(),
            p_c_b: Vec3::new(0.0, 0.0, 0.12),
        }
    }
}

/// Kinematic state of the rig.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigState {
    pub p_b: Vec3,
    pub r_b: Rot3,
    /// Base angular velocity in the inertial frame (rad/s).
    pub omega: Vec3,
    pub p_e_d: Vec3,
    pub q: Vec3,
}

impl RigState {
    /// `[p_B; p_E^D]`
    pub fn allocation_state(&self) -> Vec6 {
        let mut s = Vec6::zeros();
        s.fixed_rows_mut::<3>(0).copy_from(&self.p_b);
        s.fixed_rows_mut::<3>(3).copy_from(&self.p_e_d);
        s
    }
}

/// End-effector position in the body frame.
pub fn end_effector_in_body(st: &RigState, m: &MountingConfig) -> Vec3 {
    &m.r_d_b * &st.p_e_d + m.p_c_b
}

pub fn composite_fk(st: &RigState, m: &MountingConfig) -> Vec3 {
    st.p_b + &st.r_b * &end_effector_in_body(st, m)
}

/// `J = [I₃ | R_B·R_D^B]` and the rotational drift `−[R_B p_E^B]× ω`, so that
/// `ṗ_E = J·[ṗ_B; ṗ_E^D] + drift`.
pub fn jacobian(st: &RigState, m: &MountingConfig) -> (Jacobian, Vec3) {
    let mut j = Jacobian::zeros();
    j.fixed_view_mut::<3, 3>(0, 0).fill_with_identity();
    j.fixed_view_mut::<3, 3>(0, 3)
        .copy_from(&(st.r_b.matrix() * m.r_d_b.matrix()));
    let lever = &st.r_b * &end_effector_in_body(st, m);
    let drift = -(skew(&lever) * st.omega);
    (j, drift)
}
