//! Lagrangian dynamics of the wrist in its bending plane.
//!
//! Within a fixed bending plane the wrist reduces to one generalized
//! coordinate and obeys
//!
//! ```text
//! M(alpha) * alpha'' + C(alpha) * alpha'^2 + K * alpha = D * F + tau_ext
//! ```
//!
//! where `M` collects the backbone, driven-disc, and platform inertias
//! through polynomial fits of the energy factors, `C = M'/2` accounts for
//! the configuration-dependent inertia, `K = 4 EI / l` is the elastic
//! stiffness of the backbone, and `D = r` maps the net antagonistic tendon
//! force `F` to a bending moment. `tau_ext` carries external disturbance
//! torques.

use crate::kinematics::{CurvatureState, WristGeometry};
use thiserror::Error;

/// Upper end of the bending range the energy-factor fits were calibrated on.
pub const FIT_VALID_MAX: f64 = std::f64::consts::FRAC_PI_2;

/// Below this bending angle the closed form of [`k1_exact`] loses digits to
/// cancellation and a Taylor series is used instead.
const K1_SERIES_LIMIT: f64 = 1e-2;

/// Backbone bending-rate energy factor,
/// `(alpha^3 + 6 alpha - 12 sin(alpha) + 6 alpha cos(alpha)) / alpha^5`,
/// evaluated by series for small angles. Tends to 3/20 as alpha -> 0.
pub fn k1_exact(alpha: f64) -> f64 {
    if alpha.abs() < K1_SERIES_LIMIT {
        let a2 = alpha * alpha;
        0.15 - a2 / 168.0 + a2 * a2 / 8640.0
    } else {
        (alpha.powi(3) + 6.0 * alpha - 12.0 * alpha.sin() + 6.0 * alpha * alpha.cos())
            / alpha.powi(5)
    }
}

/// Quadratic fit of [`k1_exact`] over `[0, pi/2]`.
pub fn k1_fit(alpha: f64) -> f64 {
    (-0.00426 * alpha - 0.00277) * alpha + 0.15085
}

fn k1_fit_slope(alpha: f64) -> f64 {
    -2.0 * 0.00426 * alpha - 0.00277
}

/// Cubic fit of the backbone plane-rotation energy factor over `[0, pi/2]`.
pub fn k2_fit(alpha: f64) -> f64 {
    ((-0.05567 * alpha + 0.2328) * alpha + 0.006216) * alpha - 0.00406
}

/// Quadratic fit of the platform bending-rate energy factor over `[0, pi/2]`.
pub fn k6_fit(alpha: f64) -> f64 {
    ((-0.00043 * alpha - 0.00031) * alpha + 0.01435) / 2.0
}

fn k6_fit_slope(alpha: f64) -> f64 {
    (-2.0 * 0.00043 * alpha - 0.00031) / 2.0
}

/// Cubic fit of the platform plane-rotation energy factor over `[0, pi/2]`.
pub fn k7_fit(alpha: f64) -> f64 {
    (((-0.00394 * alpha + 0.01575) * alpha + 0.00131) * alpha - 0.00047) / 2.0
}

/// Tendon bending-rate coupling factor,
/// `r^2 (cos^2(gamma) + cos^2(theta - gamma) + cos^2(theta + gamma))`.
/// Constant 3 r^2 / 2 for the symmetric spacing theta = 2 pi / 3.
pub fn k3(geom: &WristGeometry, gamma: f64) -> f64 {
    let th = geom.theta;
    geom.r
        * geom.r
        * (gamma.cos().powi(2) + (th - gamma).cos().powi(2) + (th + gamma).cos().powi(2))
}

/// Tendon cross-rate coupling factor,
/// `r^2 alpha (-sin(2 gamma) + sin(2 (theta - gamma)) - sin(2 (theta + gamma)))`.
pub fn k4(geom: &WristGeometry, alpha: f64, gamma: f64) -> f64 {
    let th = geom.theta;
    geom.r
        * geom.r
        * alpha
        * (-(2.0 * gamma).sin() + (2.0 * (th - gamma)).sin() - (2.0 * (th + gamma)).sin())
}

/// Tendon plane-rotation coupling factor,
/// `r^2 alpha^2 (sin^2(gamma) + sin^2(theta - gamma) + sin^2(theta + gamma))`.
pub fn k5(geom: &WristGeometry, alpha: f64, gamma: f64) -> f64 {
    let th = geom.theta;
    geom.r
        * geom.r
        * alpha
        * alpha
        * (gamma.sin().powi(2) + (th - gamma).sin().powi(2) + (th + gamma).sin().powi(2))
}

/// Inertial and elastic parameters of the wrist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WristParams {
    pub geom: WristGeometry,
    /// Mass of the proximal backbone half, kg.
    pub m1: f64,
    /// Mass of the driven backbone half and disc stack, kg.
    pub m2: f64,
    /// Mass of the end platform, kg.
    pub m3: f64,
    /// Bending stiffness of the backbone, N m^2.
    pub ei: f64,
}

impl Default for WristParams {
    fn default() -> Self {
        Self { geom: WristGeometry::default(), m1: 0.005, m2: 0.005, m3: 0.010, ei: 1.0e-3 }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DynamicsError {
    #[error("wrist parameters violate structural invariants: {0}")]
    InvalidParams(String),
}

/// Coefficients of the planar equation of motion at a given bending angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarCoefficients {
    /// Generalized inertia M(alpha).
    pub m: f64,
    /// Quadratic-rate coefficient C(alpha) = M'(alpha) / 2.
    pub c: f64,
    /// Elastic stiffness K = 4 EI / l.
    pub k: f64,
    /// Input gain D = r.
    pub d: f64,
}

impl WristParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        self.geom.validate().map_err(|e| DynamicsError::InvalidParams(e.to_string()))?;
        if self.m1 <= 0.0 || self.m2 <= 0.0 || self.m3 <= 0.0 {
            return Err(DynamicsError::InvalidParams("masses must be positive".into()));
        }
        if self.ei <= 0.0 {
            return Err(DynamicsError::InvalidParams("bending stiffness must be positive".into()));
        }
        Ok(())
    }

    /// Elastic stiffness K = 4 EI / l.
    pub fn stiffness(&self) -> f64 {
        4.0 * self.ei / self.geom.l
    }

    /// Input gain D = r from net tendon force to bending moment.
    pub fn input_gain(&self) -> f64 {
        self.geom.r
    }

    /// Generalized inertia
    /// `M(alpha) = (4 m2 l^2 K1 + 3 m2 K3 + 3 m3 K6) / 3`.
    pub fn mass(&self, alpha: f64) -> f64 {
        let l2 = self.geom.l * self.geom.l;
        (4.0 * self.m2 * l2 * k1_fit(alpha)
            + 3.0 * self.m2 * k3(&self.geom, 0.0)
            + 3.0 * self.m3 * k6_fit(alpha))
            / 3.0
    }

    /// Quadratic-rate coefficient
    /// `C(alpha) = (4 m2 l^2 K1' + 3 m3 K6') / 6`, equal to M'(alpha)/2.
    /// Negative over the working range because the inertia shrinks as the
    /// wrist bends.
    pub fn coriolis(&self, alpha: f64) -> f64 {
        let l2 = self.geom.l * self.geom.l;
        (4.0 * self.m2 * l2 * k1_fit_slope(alpha) + 3.0 * self.m3 * k6_fit_slope(alpha)) / 6.0
    }

    pub fn coefficients(&self, alpha: f64) -> PlanarCoefficients {
        PlanarCoefficients {
            m: self.mass(alpha),
            c: self.coriolis(alpha),
            k: self.stiffness(),
            d: self.input_gain(),
        }
    }

    /// Bending acceleration under net tendon force `force` and external
    /// torque `tau_ext`.
    pub fn acceleration(&self, alpha: f64, alpha_dot: f64, force: f64, tau_ext: f64) -> f64 {
        let c = self.coefficients(alpha);
        (c.d * force + tau_ext - c.c * alpha_dot * alpha_dot - c.k * alpha) / c.m
    }

    /// Net tendon force that produces the bending acceleration `accel`
    /// at the given state; the inverse of [`Self::acceleration`] with
    /// `tau_ext = 0`.
    pub fn required_force(&self, alpha: f64, alpha_dot: f64, accel: f64) -> f64 {
        let c = self.coefficients(alpha);
        (c.m * accel + c.c * alpha_dot * alpha_dot + c.k * alpha) / c.d
    }

    /// Elastic energy `2 EI alpha^2 / l` stored in the bent backbone.
    pub fn potential_energy(&self, alpha: f64) -> f64 {
        2.0 * self.ei * alpha * alpha / self.geom.l
    }

    /// Total planar energy `M(alpha) alpha'^2 / 2 + 2 EI alpha^2 / l`.
    /// Conserved by the unforced equation of motion.
    pub fn planar_energy(&self, alpha: f64, alpha_dot: f64) -> f64 {
        0.5 * self.mass(alpha) * alpha_dot * alpha_dot + self.potential_energy(alpha)
    }

    /// Kinetic energy of the full spatial model: backbone halves, driven
    /// disc stack, and end platform, using the fitted energy factors.
    pub fn kinetic_energy(&self, state: &CurvatureState) -> f64 {
        let a = state.alpha;
        let ad = state.alpha_dot;
        let gd = state.gamma_dot;
        let l2 = self.geom.l * self.geom.l;
        let backbone =
            (self.m1 + self.m2) * l2 * (ad * ad * k1_fit(a) / 6.0 + gd * gd * k2_fit(a) / 8.0);
        let driven = 0.5
            * self.m2
            * (ad * ad * k3(&self.geom, state.gamma)
                + ad * gd * k4(&self.geom, a, state.gamma)
                + gd * gd * k5(&self.geom, a, state.gamma));
        let platform = 0.5 * self.m3 * (ad * ad * k6_fit(a) + gd * gd * k7_fit(a));
        backbone + driven + platform
    }
}

/// One classical Runge-Kutta step of the planar equation of motion with the
/// inputs held constant over the step. Returns `(alpha, alpha_dot)` at
/// `t + dt`.
pub fn rk4_step(
    params: &WristParams,
    alpha: f64,
    alpha_dot: f64,
    force: f64,
    tau_ext: f64,
    dt: f64,
) -> (f64, f64) {
    let f = |a: f64, ad: f64| (ad, params.acceleration(a, ad, force, tau_ext));
    let (k1a, k1d) = f(alpha, alpha_dot);
    let (k2a, k2d) = f(alpha + 0.5 * dt * k1a, alpha_dot + 0.5 * dt * k1d);
    let (k3a, k3d) = f(alpha + 0.5 * dt * k2a, alpha_dot + 0.5 * dt * k2d);
    let (k4a, k4d) = f(alpha + dt * k3a, alpha_dot + dt * k3d);
    (
        alpha + dt / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a),
        alpha_dot + dt / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d),
    )
}
