//! Constant-curvature geometry of the wrist arc.
//!
//! The backbone of length `l` bends into a circular arc with bending angle
//! `alpha` inside a plane oriented by `gamma`. Positions are expressed in the
//! base frame with Z along the undeformed backbone. Three tendons run at
//! radius `r` from the backbone, spaced by `theta` around it; their length
//! changes relative to the straight configuration drive the wrist.

use nalgebra::{Matrix3, Matrix4, Vector3};
use thiserror::Error;

/// Bending angle below which the removable 1/alpha singularities in the
/// position and velocity formulas are evaluated by Taylor series instead.
const ALPHA_SERIES_LIMIT: f64 = 1e-4;

/// Configuration (and rates) of the wrist arc: the generalized coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureState {
    /// Bending angle, radians. Kinematics accept `[0, pi)`; controller-driven
    /// trajectories stay within the position constraint `[0, pi/4]`.
    pub alpha: f64,
    /// Bending-plane angle, radians, normalized to `[0, 2*pi)`.
    pub gamma: f64,
    /// Bending rate, rad/s.
    pub alpha_dot: f64,
    /// Plane rotation rate, rad/s.
    pub gamma_dot: f64,
}

impl CurvatureState {
    pub fn new(alpha: f64, gamma: f64, alpha_dot: f64, gamma_dot: f64) -> Self {
        Self { alpha, gamma, alpha_dot, gamma_dot }
    }

    /// State in the bending plane `gamma = 0` (the planar model).
    pub fn planar(alpha: f64, alpha_dot: f64) -> Self {
        Self { alpha, gamma: 0.0, alpha_dot, gamma_dot: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.alpha.is_finite()
            && self.gamma.is_finite()
            && self.alpha_dot.is_finite()
            && self.gamma_dot.is_finite()
    }
}

/// Fixed geometry of the wrist: backbone length, tendon layout, disc stack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WristGeometry {
    /// Backbone length, meters.
    pub l: f64,
    /// Distance from the primary backbone to each tendon, meters.
    pub r: f64,
    /// Angular spacing between neighboring tendons, radians.
    pub theta: f64,
    /// Number of spacer discs along the backbone.
    pub n_discs: u32,
    /// Spacing between consecutive discs, meters.
    pub h: f64,
}

impl Default for WristGeometry {
    fn default() -> Self {
        Self { l: 0.075, r: 0.010, theta: 2.0 * std::f64::consts::PI / 3.0, n_discs: 5, h: 0.015 }
    }
}

impl WristGeometry {
    /// Checks the structural invariants of the geometry.
    pub fn validate(&self) -> Result<(), KinematicsError> {
        let ok = self.l > 0.0
            && self.r > 0.0
            && self.theta > 0.0
            && self.theta < std::f64::consts::PI
            && self.n_discs >= 2
            && self.h > 0.0;
        if ok {
            Ok(())
        } else {
            Err(KinematicsError::InvalidGeometry)
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum KinematicsError {
    #[error("arc position s={s} outside backbone range [0, {l}]")]
    ArcPositionOutOfRange { s: f64, l: f64 },
    #[error("geometry violates structural invariants")]
    InvalidGeometry,
}

/// Rotation of the arc tip frame: Rot(Z, gamma) * Rot(Y, alpha) * Rot(Z, -gamma),
/// written out entrywise. Orthonormal with determinant +1.
pub fn rotation_matrix(state: &CurvatureState) -> Matrix3<f64> {
    let (sa, ca) = state.alpha.sin_cos();
    let (sg, cg) = state.gamma.sin_cos();
    Matrix3::new(
        ca * cg * cg + sg * sg,
        cg * sg * (ca - 1.0),
        cg * sa,
        cg * sg * (ca - 1.0),
        ca * sg * sg + cg * cg,
        sg * sa,
        -sa * cg,
        -sa * sg,
        ca,
    )
}

/// Position of the backbone point at arc length `s` from the base.
///
/// The arc has curvature alpha/l, so the point at `s` has turned through
/// beta = s*alpha/l and sits at radius l/alpha from the bending axis:
/// x = (l/alpha)(1 - cos beta) cos gamma, y likewise with sin gamma,
/// z = (l/alpha) sin beta. The alpha -> 0 limit is evaluated by series.
pub fn backbone_point(
    state: &CurvatureState,
    s: f64,
    geom: &WristGeometry,
) -> Result<Vector3<f64>, KinematicsError> {
    if !(0.0..=geom.l).contains(&s) {
        return Err(KinematicsError::ArcPositionOutOfRange { s, l: geom.l });
    }
    let (sg, cg) = state.gamma.sin_cos();
    let alpha = state.alpha;
    let (radial, z) = if alpha.abs() < ALPHA_SERIES_LIMIT {
        let u = s / geom.l;
        // (l/a)(1 - cos(ua)) = s^2 a / (2 l) * (1 - (ua)^2 / 12) + O(a^5)
        let radial = s * s * alpha / (2.0 * geom.l) * (1.0 - (u * alpha).powi(2) / 12.0);
        let z = s * (1.0 - (u * alpha).powi(2) / 6.0);
        (radial, z)
    } else {
        let beta = s * alpha / geom.l;
        let a = geom.l / alpha;
        (a * (1.0 - beta.cos()), a * beta.sin())
    };
    Ok(Vector3::new(radial * cg, radial * sg, z))
}

/// Homogeneous transform of the arc tip: rotation block from
/// [`rotation_matrix`], translation from [`backbone_point`] at `s = l`.
pub fn end_transform(state: &CurvatureState, geom: &WristGeometry) -> Matrix4<f64> {
    let r = rotation_matrix(state);
    let p = backbone_point(state, geom.l, geom).expect("s = l is always inside the backbone range");
    let mut t = Matrix4::identity();
    t.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
    t.fixed_view_mut::<3, 1>(0, 3).copy_from(&p);
    t
}

/// Velocity of the backbone point at arc length `s`, from the chain rule
/// over (alpha, gamma) with the alpha -> 0 limit evaluated by series.
pub fn backbone_velocity(
    state: &CurvatureState,
    s: f64,
    geom: &WristGeometry,
) -> Result<Vector3<f64>, KinematicsError> {
    if !(0.0..=geom.l).contains(&s) {
        return Err(KinematicsError::ArcPositionOutOfRange { s, l: geom.l });
    }
    let (sg, cg) = state.gamma.sin_cos();
    let alpha = state.alpha;
    let l = geom.l;
    // Radial coordinate rho = (l/a)(1 - cos(s a / l)) and its alpha derivative;
    // d z / d alpha completes the position Jacobian.
    let (rho, drho_da, dz_da) = if alpha.abs() < ALPHA_SERIES_LIMIT {
        let beta = s * alpha / l;
        (
            s * s * alpha / (2.0 * l) * (1.0 - beta * beta / 12.0),
            s * s / (2.0 * l) * (1.0 - beta * beta / 4.0),
            -s * s * s * alpha / (3.0 * l * l) * (1.0 - beta * beta / 10.0),
        )
    } else {
        let beta = s * alpha / l;
        let (sb, cb) = beta.sin_cos();
        let la2 = l / (alpha * alpha);
        ((l / alpha) * (1.0 - cb), la2 * (beta * sb - (1.0 - cb)), la2 * (beta * cb - sb))
    };
    let ad = state.alpha_dot;
    let gd = state.gamma_dot;
    Ok(Vector3::new(
        drho_da * cg * ad - rho * sg * gd,
        drho_da * sg * ad + rho * cg * gd,
        dz_da * ad,
    ))
}

/// Tendon length changes relative to the straight configuration:
/// q1 = r*alpha*cos(gamma), q2 = r*alpha*cos(theta - gamma),
/// q3 = r*alpha*cos(theta + gamma). For theta = 2*pi/3 the three sum to zero.
pub fn tendon_lengths(state: &CurvatureState, geom: &WristGeometry) -> [f64; 3] {
    let ra = geom.r * state.alpha;
    [
        ra * state.gamma.cos(),
        ra * (geom.theta - state.gamma).cos(),
        ra * (geom.theta + state.gamma).cos(),
    ]
}

/// Time derivatives of [`tendon_lengths`].
pub fn tendon_velocities(state: &CurvatureState, geom: &WristGeometry) -> [f64; 3] {
    let r = geom.r;
    let a = state.alpha;
    let ad = state.alpha_dot;
    let gd = state.gamma_dot;
    let g = state.gamma;
    let th = geom.theta;
    [
        r * (ad * g.cos() - a * gd * g.sin()),
        r * (ad * (th - g).cos() + a * gd * (th - g).sin()),
        r * (ad * (th + g).cos() - a * gd * (th + g).sin()),
    ]
}
