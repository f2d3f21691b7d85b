//! Reference allocation between the quadcopter base and the delta arm.
//!
//! The allocation variable is `ẋ = [ṗ_B; ṗ_E^D]`. With the end-effector
//! Jacobian `J` and drift `d` (`ṗ_E = J·ẋ + d`), the problem is
//!
//! ```text
//! minimize   ‖J·ẋ + d − ṗ_E,d‖² + ẋᵀ·W·ẋ
//! subject to lower ≤ ẋ ≤ upper
//! ```
//!
//! where the box intersects a velocity limit, a position barrier and a
//! one-step acceleration limit. Dropping the constant term leaves
//! `ẋᵀQẋ + qᵀẋ` with `Q = JᵀJ + W` and `q = −2·Jᵀ(ṗ_E,d − d)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::DeltaGeometry;
use crate::types::{Jacobian, Mat6, Vec3, Vec6};

/// Box limits on the allocation state, its rate and its acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsModel {
    pub s_min: Vec6,
    pub s_max: Vec6,
    pub v_min: Vec6,
    pub v_max: Vec6,
    pub a_min: Vec6,
    pub a_max: Vec6,
    /// Gain of the position barrier (1/s).
    pub k_p: f64,
}

impl Default for BoundsModel {
    fn default() -> Self {
        let six = |b: [f64; 3], a: [f64; 3]| Vec6::from_row_slice(&[b[0], b[1], b[2], a[0], a[1], a[2]]);
        BoundsModel {
            s_min: six([-20.0, -20.0, -20.0], [-0.06, -0.06, 0.20]),
            s_max: six([20.0, 20.0, -0.3], [0.06, 0.06, 0.32]),
            v_min: six([-3.0; 3], [-0.6; 3]),
            v_max: six([3.0; 3], [0.6; 3]),
            a_min: six([-8.0; 3], [-20.0; 3]),
            a_max: six([8.0; 3], [20.0; 3]),
            k_p: 5.0,
        }
    }
}

impl BoundsModel {
    pub fn validate(&self) -> Result<()> {
        let pairs = [
            ("position", &self.s_min, &self.s_max),
            ("velocity", &self.v_min, &self.v_max),
            ("acceleration", &self.a_min, &self.a_max),
        ];
        for (name, lo, hi) in pairs {
            for i in 0..6 {
                if !(lo[i].is_finite() && hi[i].is_finite() && lo[i] < hi[i]) {
                    return Err(Error::invalid(format!(
                        "{name} box component {i} is invalid: [{}, {}]",
                        lo[i], hi[i]
                    )));
                }
            }
        }
        if !(self.k_p.is_finite() && self.k_p > 0.0) {
            return Err(Error::invalid(format!("k_p must be positive, got {}", self.k_p)));
        }
        Ok(())
    }
}

/// Strictly convex box QP `min ẋᵀQẋ + qᵀẋ` over `lower ≤ ẋ ≤ upper`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocationProblem {
    pub q: Mat6,
    pub q_lin: Vec6,
    pub lower: Vec6,
    pub upper: Vec6,
}

impl AllocationProblem {
    pub fn objective(&self, x: &Vec6) -> f64 {
        x.dot(&(self.q * x)) + self.q_lin.dot(x)
    }

    pub fn gradient(&self, x: &Vec6) -> Vec6 {
        self.q * x * 2.0 + self.q_lin
    }

    pub fn project(&self, x: &Vec6) -> Vec6 {
        x.zip_zip_map(&self.lower, &self.upper, |v, l, u| v.max(l).min(u))
    }

    /// Largest violation of the box-QP optimality conditions at `x`.
    pub fn kkt_residual(&self, x: &Vec6) -> f64 {
        let g = self.gradient(x);
        let mut r: f64 = 0.0;
        for i in 0..6 {
            let (l, u) = (self.lower[i], self.upper[i]);
            let v = x[i];
            let ri = if v < l || v > u {
                f64::INFINITY
            } else if l == u {
                0.0
            } else if v == l {
                (-g[i]).max(0.0)
            } else if v == u {
                g[i].max(0.0)
            } else {
                g[i].abs()
            };
            r = r.max(ri);
        }
        r
    }
}

/// Builds the allocation QP for one control tick.
///
/// `s_now` is the current allocation state (used by the position barrier)
/// and `v_prev` the previous allocation rate (used by the acceleration box).
#[allow(clippy::too_many_arguments)]
pub fn assemble(
    j: &Jacobian,
    drift: &Vec3,
    p_ed_dot: &Vec3,
    weights: &Vec6,
    bounds: &BoundsModel,
    s_now: &Vec6,
    v_prev: &Vec6,
    dt: f64,
) -> Result<AllocationProblem> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid(format!("allocation period must be positive, got {dt}")));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::invalid(format!(
            "allocation weights must be positive, got {:?}",
            weights.as_slice()
        )));
    }
    bounds.validate()?;
    let target = p_ed_dot - drift;
    let q = j.transpose() * j + Mat6::from_diagonal(weights);
    let q_lin = -(j.transpose() * target) * 2.0;

    let mut lower = Vec6::zeros();
    let mut upper = Vec6::zeros();
    for i in 0..6 {
        let lo = bounds.v_min[i].max(bounds.k_p * (bounds.s_min[i] - s_now[i]));
        let hi = bounds.v_max[i].min(bounds.k_p * (bounds.s_max[i] - s_now[i]));
        if !(lo <= hi) {
            return Err(Error::EmptyBox {
                component: i,
                lower: lo,
                upper: hi,
            });
        }
        // The acceleration box is the softest limit: widen it until it meets
        // the hard velocity/position interval.
        let mid = v_prev[i] + 0.5 * (bounds.a_min[i] + bounds.a_max[i]) * dt;
        let mut half = 0.5 * (bounds.a_max[i] - bounds.a_min[i]) * dt;
        let mut doublings = 0;
        while mid + half < lo || mid - half > hi {
            half *= 2.0;
            doublings += 1;
            if doublings > 200 {
                return Err(Error::EmptyBox {
                    component: i,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        lower[i] = lo.max(mid - half);
        upper[i] = hi.min(mid + half);
    }
    Ok(AllocationProblem {
        q,
        q_lin,
        lower,
        upper,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub max_iterations: usize,
    /// Target KKT residual.
    pub tolerance: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            max_iterations: 200,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpSolution {
    pub x: Vec6,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, PartialEq)]
enum Bound {
    Free,
    Lower,
    Upper,
}

/// Minimizer of the objective over the face defined by `active`, with the
/// fixed coordinates taken from `x`.
fn face_minimizer(p: &AllocationProblem, x: &Vec6, active: &[Bound; 6]) -> Option<Vec6> {
    let free: Vec<usize> = (0..6).filter(|&i| active[i] == Bound::Free).collect();
    let mut y = *x;
    for i in 0..6 {
        match active[i] {
            Bound::Lower => y[i] = p.lower[i],
            Bound::Upper => y[i] = p.upper[i],
            Bound::Free => {}
        }
    }
    if free.is_empty() {
        return Some(y);
    }
    let n = free.len();
    let qff = DMatrix::from_fn(n, n, |a, b| p.q[(free[a], free[b])]);
    let rhs = DVector::from_fn(n, |a, _| {
        let i = free[a];
        let coupling: f64 = (0..6)
            .filter(|&k| active[k] != Bound::Free)
            .map(|k| p.q[(i, k)] * y[k])
            .sum();
        -(0.5 * p.q_lin[i] + coupling)
    });
    let sol = qff.cholesky()?.solve(&rhs);
    for (a, &i) in free.iter().enumerate() {
        y[i] = sol[a];
    }
    Some(y)
}

fn classify(p: &AllocationProblem, x: &Vec6) -> [Bound; 6] {
    let g = p.gradient(x);
    let mut out = [Bound::Free; 6];
    for i in 0..6 {
        if p.lower[i] == p.upper[i] || (x[i] <= p.lower[i] && g[i] >= 0.0) {
            out[i] = Bound::Lower;
        } else if x[i] >= p.upper[i] && g[i] <= 0.0 {
            out[i] = Bound::Upper;
        }
    }
    out
}

fn is_feasible(p: &AllocationProblem, y: &Vec6) -> bool {
    (0..6).all(|i| {
        let slack = 1e-12 * (1.0 + p.lower[i].abs().max(p.upper[i].abs()));
        y[i] >= p.lower[i] - slack && y[i] <= p.upper[i] + slack
    })
}

/// Solves the box QP by alternating a reduced Newton step on the current
/// active face with a projected-gradient step under exact line search.
///
/// On the iteration limit the best iterate is returned with
/// `converged == false`.
pub fn solve_box_qp(p: &AllocationProblem, warm: Option<&Vec6>, settings: &SolverSettings) -> QpSolution {
    let mut x = p.project(&warm.copied().unwrap_or_else(Vec6::zeros));
    // Gershgorin bound on the largest eigenvalue of 2Q.
    let lipschitz = (0..6)
        .map(|i| (0..6).map(|k| p.q[(i, k)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
        * 2.0;

    for it in 1..=settings.max_iterations {
        let active = classify(p, &x);
        if let Some(y) = face_minimizer(p, &x, &active) {
            if is_feasible(p, &y) {
                x = p.project(&y);
                if p.kkt_residual(&x) <= settings.tolerance {
                    return QpSolution {
                        x,
                        objective: p.objective(&x),
                        iterations: it,
                        converged: true,
                    };
                }
            } else {
                // Walk toward the face minimizer until the first bound is hit.
                let d = y - x;
                let mut step: f64 = 1.0;
                for i in 0..6 {
                    if d[i] > 0.0 {
                        step = step.min((p.upper[i] - x[i]) / d[i]);
                    } else if d[i] < 0.0 {
                        step = step.min((p.lower[i] - x[i]) / d[i]);
                    }
                }
                x = p.project(&(x + d * step.max(0.0)));
            }
        }

        let g = p.gradient(&x);
        let d = p.project(&(x - g / lipschitz)) - x;
        let curvature = d.dot(&(p.q * d));
        if curvature > 0.0 {
            let t = (-g.dot(&d) / (2.0 * curvature)).clamp(0.0, 1.0);
            x = p.project(&(x + d * t));
        }
        if p.kkt_residual(&x) <= settings.tolerance {
            return QpSolution {
                x,
                objective: p.objective(&x),
                iterations: it,
                converged: true,
            };
        }
    }
    QpSolution {
        x,
        objective: p.objective(&x),
        iterations: settings.max_iterations,
        converged: false,
    }
}

/// Box-QP solver that warm-starts each solve from the previous solution.
#[derive(Debug, Clone, Default)]
pub struct BoxQpSolver {
    pub settings: SolverSettings,
    warm: Option<Vec6>,
    warm_start: bool,
}

impl BoxQpSolver {
    pub fn new(settings: SolverSettings) -> Self {
        BoxQpSolver {
            settings,
            warm: None,
            warm_start: true,
        }
    }

    pub fn cold(settings: SolverSettings) -> Self {
        BoxQpSolver {
            warm_start: false,
            ..BoxQpSolver::new(settings)
        }
    }

    pub fn solve(&mut self, p: &AllocationProblem) -> QpSolution {
        let warm = if self.warm_start { self.warm.as_ref() } else { None };
        let sol = solve_box_qp(p, warm, &self.settings);
        self.warm = Some(sol.x);
        sol
    }

    pub fn reset(&mut self) {
        self.warm = None;
    }
}

/// Desired references produced by integrating the optimal allocation rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct References {
    pub s_d: Vec6,
    pub p_b_d: Vec3,
    pub p_e_d_d: Vec3,
    pub q_d: Vec3,
}

pub fn integrate_references(
    x_star: &Vec6,
    s_d_prev: &Vec6,
    dt: f64,
    g: &DeltaGeometry,
) -> Result<References> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid(format!("integration period must be positive, got {dt}")));
    }
    let s_d = s_d_prev + x_star * dt;
    let p_b_d: Vec3 = s_d.fixed_rows::<3>(0).into();
    let p_e_d_d: Vec3 = s_d.fixed_rows::<3>(3).into();
    let q_d = g.ik(&p_e_d_d)?;
    Ok(References {
        s_d,
        p_b_d,
        p_e_d_d,
        q_d,
    })
}
