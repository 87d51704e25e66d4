//! Receding-horizon control of the feedback-linearized wrist.
//!
//! The inverse-dynamics law [`feedback_linearize`] turns the planar wrist
//! into a double integrator driven by a commanded bending acceleration `y`.
//! Each control interval the controller builds a small QP over the next
//! `nu` acceleration increments plus one slack variable, solves it warm
//! started from the previous active set, and applies the first move:
//! `y = prev_u + du_0`.
//!
//! The prediction state is `x = (alpha_dot, alpha)`. The QP is built from
//! the one-step-ahead prediction of the state rather than the raw
//! measurement; the measurement corrects the prediction at the end of every
//! interval via a model rollout with the applied input.

use crate::dynamics::WristParams;
use crate::qp::{QpError, QpProblem, QpStatus};
use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use thiserror::Error;

/// Horizons, weights, scales, and bounds of the controller.
///
/// The cost is
///
/// ```text
/// J = sum_i (w_alpha/s_alpha)^2 (ref_a - a_i)^2
///   + sum_i (w_alpha_dot/s_alpha_dot)^2 (ref_ad - ad_i)^2
///   + sum_j (w_du/s_u)^2 du_j^2
///   + rho_eps * eps^2
/// ```
///
/// subject to the soft position band `|alpha_i| <= alpha_max + eps`,
/// `eps >= 0`, and the hard rate bound `|du_j| <= du_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpcConfig {
    /// Prediction horizon, intervals.
    pub p: usize,
    /// Control horizon, intervals; moves beyond it are held constant.
    pub nu: usize,
    /// Control sample time, seconds.
    pub ts: f64,
    /// Tracking weight on the bending angle.
    pub w_alpha: f64,
    /// Tracking weight on the bending rate.
    pub w_alpha_dot: f64,
    /// Weight on acceleration increments.
    pub w_du: f64,
    /// Scale factor for the bending angle output.
    pub s_alpha: f64,
    /// Scale factor for the bending rate output.
    pub s_alpha_dot: f64,
    /// Scale factor for the manipulated variable.
    pub s_u: f64,
    /// Penalty on the position-band slack.
    pub rho_eps: f64,
    /// Position band half-width, radians.
    pub alpha_max: f64,
    /// Rate bound on acceleration increments per interval, rad/s^2.
    pub du_max: f64,
}

impl Default for MpcConfig {
    fn default() -> Self {
        Self {
            p: 10,
            nu: 5,
            ts: 0.01,
            w_alpha: 1.0,
            w_alpha_dot: 0.1,
            w_du: 0.008,
            s_alpha: 1.0,
            s_alpha_dot: 1.0,
            s_u: 1.0,
            rho_eps: 1e5,
            alpha_max: std::f64::consts::FRAC_PI_4,
            du_max: 10000.0,
        }
    }
}

impl MpcConfig {
    // Negated comparisons so NaN fails validation.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), MpcError> {
        let bad = |msg: &str| Err(MpcError::InvalidConfig(msg.into()));
        if self.nu < 1 || self.p < self.nu {
            return bad("horizons must satisfy p >= nu >= 1");
        }
        if !(self.ts > 0.0) {
            return bad("sample time must be positive");
        }
        if self.w_alpha < 0.0 || self.w_alpha_dot < 0.0 || self.w_du < 0.0 {
            return bad("weights must be nonnegative");
        }
        if !(self.s_alpha > 0.0 && self.s_alpha_dot > 0.0 && self.s_u > 0.0) {
            return bad("scale factors must be positive");
        }
        if !(self.rho_eps > 0.0) {
            return bad("slack penalty must be positive");
        }
        if !(self.alpha_max > 0.0) {
            return bad("position bound must be positive");
        }
        if !(self.du_max > 0.0) {
            return bad("rate bound must be positive");
        }
        Ok(())
    }
}

/// Mutable between-interval memory of the controller.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    /// Last applied commanded acceleration.
    pub prev_u: f64,
    /// One-step-ahead state prediction `(alpha_dot, alpha)`. Nominal values;
    /// the simulation guard, not the controller, polices divergence.
    pub predicted_state: Vector2<f64>,
    /// Active set of the last solved QP, used to warm start the next one.
    pub warm_start: Vec<usize>,
}

impl ControllerState {
    /// Controller at rest, predicting the given initial state.
    pub fn new(alpha: f64, alpha_dot: f64) -> Self {
        Self {
            prev_u: 0.0,
            predicted_state: state_vector(alpha, alpha_dot),
            warm_start: Vec::new(),
        }
    }
}

/// Per-interval outcome of [`mpc_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    /// Commanded bending acceleration to apply over the next interval.
    pub y: f64,
    /// Bending angle estimate the command was computed from.
    pub alpha_hat: f64,
    /// Bending rate estimate the command was computed from.
    pub alpha_dot_hat: f64,
    /// First acceleration increment.
    pub du0: f64,
    /// Position-band slack at the optimum.
    pub eps: f64,
    /// Active-set changes spent by the QP solve.
    pub qp_iterations: usize,
    /// Binding constraints at the optimum.
    pub active_set_size: usize,
    /// True when the solver failed and the previous command was held.
    pub fallback: bool,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MpcError {
    #[error("controller configuration invalid: {0}")]
    InvalidConfig(String),
    #[error("reference trajectory length {got} does not match horizon {want}")]
    ReferenceLength { want: usize, got: usize },
    #[error(transparent)]
    Qp(#[from] QpError),
}

/// Packs a planar measurement into the prediction state order
/// `(alpha_dot, alpha)`. All controller code goes through this one spot.
pub fn state_vector(alpha: f64, alpha_dot: f64) -> Vector2<f64> {
    Vector2::new(alpha_dot, alpha)
}

/// Exact zero-order-hold discretization of the double integrator
/// `d/dt (alpha_dot, alpha) = (y, alpha_dot)` at sample time `ts`:
/// `A_d = [[1, 0], [ts, 1]]`, `B_d = (ts, ts^2/2)`, `C_d = I`.
pub fn discretize_model(ts: f64) -> (Matrix2<f64>, Vector2<f64>, Matrix2<f64>) {
    (Matrix2::new(1.0, 0.0, ts, 1.0), Vector2::new(ts, 0.5 * ts * ts), Matrix2::identity())
}

/// Assembles the interval QP.
///
/// Decision vector `z = (du_0 .. du_{nu-1}, eps)`. Predictions are affine in
/// the moves: the base trajectory rolls `x_now` forward at held `prev_u`,
/// and the sensitivity of the state at step `i` to `du_j` follows the
/// recursion `acc <- A_d acc + B_d [i >= j]`. Constraint rows are, in order:
/// the upper and lower soft position band per prediction step, `eps >= 0`,
/// then the rate bounds per move.
pub fn build_qp(
    config: &MpcConfig,
    x_now: Vector2<f64>,
    ref_alpha: &[f64],
    ref_alpha_dot: &[f64],
    prev_u: f64,
) -> Result<QpProblem, MpcError> {
    config.validate()?;
    let p = config.p;
    let nu = config.nu;
    for refs in [ref_alpha, ref_alpha_dot] {
        if refs.len() != p {
            return Err(MpcError::ReferenceLength { want: p, got: refs.len() });
        }
    }

    let (ad, bd, _) = discretize_model(config.ts);
    let mut base = Vec::with_capacity(p);
    let mut xk = x_now;
    for _ in 0..p {
        xk = ad * xk + bd * prev_u;
        base.push(xk);
    }
    let mut sens = vec![vec![Vector2::zeros(); nu]; p];
    for j in 0..nu {
        let mut acc = Vector2::zeros();
        for (i, row) in sens.iter_mut().enumerate() {
            acc = ad * acc;
            if i >= j {
                acc += bd;
            }
            row[j] = acc;
        }
    }

    let nz = nu + 1;
    let wa = config.w_alpha / config.s_alpha;
    let wad = config.w_alpha_dot / config.s_alpha_dot;
    let wdu = config.w_du / config.s_u;
    let mut h = DMatrix::zeros(nz, nz);
    let mut f = DVector::zeros(nz);
    for i in 0..p {
        for (idx, w, rf) in [(1usize, wa, ref_alpha[i]), (0usize, wad, ref_alpha_dot[i])] {
            let d = rf - base[i][idx];
            for j1 in 0..nu {
                let g1 = sens[i][j1][idx];
                f[j1] -= 2.0 * w * w * d * g1;
                for j2 in 0..nu {
                    h[(j1, j2)] += 2.0 * w * w * g1 * sens[i][j2][idx];
                }
            }
        }
    }
    for j in 0..nu {
        h[(j, j)] += 2.0 * wdu * wdu;
    }
    h[(nu, nu)] = 2.0 * config.rho_eps;

    let m = 2 * p + 1 + 2 * nu;
    let mut a = DMatrix::zeros(m, nz);
    let mut b = DVector::zeros(m);
    let mut row = 0;
    for i in 0..p {
        for j in 0..nu {
            a[(row, j)] = sens[i][j][1];
            a[(row + 1, j)] = -sens[i][j][1];
        }
        a[(row, nu)] = -1.0;
        a[(row + 1, nu)] = -1.0;
        b[row] = config.alpha_max - base[i][1];
        b[row + 1] = config.alpha_max + base[i][1];
        row += 2;
    }
    a[(row, nu)] = -1.0;
    b[row] = 0.0;
    row += 1;
    for j in 0..nu {
        a[(row, j)] = 1.0;
        b[row] = config.du_max;
        a[(row + 1, j)] = -1.0;
        b[row + 1] = config.du_max;
        row += 2;
    }

    QpProblem::new(h, f, a, b).map_err(MpcError::from)
}

/// Runs one control interval.
///
/// Builds the QP from the stored one-step-ahead prediction, solves it warm
/// started, applies the first move `y = prev_u + du_0`, then rolls the
/// measurement forward with the applied input to form the next prediction.
/// On any solver failure the previous command is held and the step is
/// flagged; the prediction update still runs so the controller recovers on
/// later intervals.
pub fn mpc_step(
    config: &MpcConfig,
    state: &mut ControllerState,
    x_measured: Vector2<f64>,
    ref_alpha: &[f64],
    ref_alpha_dot: &[f64],
) -> Result<StepInfo, MpcError> {
    let x_hat = state.predicted_state;
    let problem = build_qp(config, x_hat, ref_alpha, ref_alpha_dot, state.prev_u)?;

    let mut info = StepInfo {
        y: state.prev_u,
        alpha_hat: x_hat[1],
        alpha_dot_hat: x_hat[0],
        du0: 0.0,
        eps: 0.0,
        qp_iterations: 0,
        active_set_size: 0,
        fallback: true,
    };
    if let Ok(sol) = problem.solve(Some(&state.warm_start)) {
        info.qp_iterations = sol.iterations;
        let y = state.prev_u + sol.z[0];
        if sol.status == QpStatus::Solved && y.is_finite() && sol.z[config.nu].is_finite() {
            info.y = y;
            info.du0 = sol.z[0];
            info.eps = sol.z[config.nu];
            info.active_set_size = sol.active_set.len();
            info.fallback = false;
            state.warm_start = sol.active_set;
        }
    }

    let (ad, bd, _) = discretize_model(config.ts);
    state.predicted_state = ad * x_measured + bd * info.y;
    state.prev_u = info.y;
    Ok(info)
}

/// Inverse-dynamics output law: the tendon force that realizes the
/// commanded bending acceleration `y` at the estimated state,
/// `F = (M(alpha) y + C(alpha) alpha_dot^2 + K alpha) / D`.
pub fn feedback_linearize(params: &WristParams, y: f64, alpha_hat: f64, alpha_dot_hat: f64) -> f64 {
    params.required_force(alpha_hat, alpha_dot_hat, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_4;

    const STEP_35_DEG: f64 = 0.6108652381980153;

    #[test]
    fn discretize_reference_values() {
        let (ad, bd, cd) = discretize_model(0.02);
        assert_eq!(ad, Matrix2::new(1.0, 0.0, 0.02, 1.0));
        assert_relative_eq!(bd, Vector2::new(0.02, 0.0002), epsilon = 1e-18);
        assert_eq!(cd, Matrix2::identity());
    }

    #[test]
    fn discretize_small_sample_limit() {
        let (ad, bd, _) = discretize_model(1e-12);
        assert_relative_eq!(ad, Matrix2::identity(), epsilon = 1e-11);
        assert!(bd.norm() <= 2e-12);
    }

    #[test]
    fn discretize_matches_matrix_exponential() {
        let ts = 0.02;
        // exp of the augmented [[A, B], [0, 0]] * ts by plain series.
        let m = nalgebra::Matrix3::new(0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0) * ts;
        let mut expm = nalgebra::Matrix3::identity();
        let mut term = nalgebra::Matrix3::identity();
        for k in 1..20 {
            term = term * m / k as f64;
            expm += term;
        }
        let (ad, bd, _) = discretize_model(ts);
        assert_relative_eq!(expm.fixed_view::<2, 2>(0, 0).into_owned(), ad, epsilon = 1e-12);
        assert_relative_eq!(expm.fixed_view::<2, 1>(0, 2).into_owned(), bd, epsilon = 1e-12);
    }

    #[test]
    fn qp_layout_dimensions() {
        let config = MpcConfig::default();
        let refs = vec![0.0; config.p];
        let qp = build_qp(&config, Vector2::zeros(), &refs, &refs, 0.0).unwrap();
        assert_eq!(qp.num_variables(), config.nu + 1);
        assert_eq!(qp.num_constraints(), 2 * config.p + 1 + 2 * config.nu);

        let short = vec![0.0; config.p - 1];
        let err = build_qp(&config, Vector2::zeros(), &short, &refs, 0.0).unwrap_err();
        assert_eq!(err, MpcError::ReferenceLength { want: config.p, got: config.p - 1 });
    }

    #[test]
    fn zero_reference_at_rest_yields_zero_moves() {
        let config = MpcConfig::default();
        let refs = vec![0.0; config.p];
        let qp = build_qp(&config, Vector2::zeros(), &refs, &refs, 0.0).unwrap();
        let sol = qp.solve(None).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        assert!(sol.z.amax() <= 1e-12);
    }

    #[test]
    fn unconstrained_horizon_matches_normal_equations() {
        let config = MpcConfig { p: 6, nu: 6, w_du: 0.0, du_max: 1e9, ..MpcConfig::default() };
        let ref_a: Vec<f64> = (0..6).map(|i| 0.01 + 0.002 * i as f64).collect();
        let ref_ad = vec![0.0; 6];
        let x0 = state_vector(0.004, 0.03);
        let prev_u = 0.2;

        let qp = build_qp(&config, x0, &ref_a, &ref_ad, prev_u).unwrap();
        let sol = qp.solve(None).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        assert!(sol.active_set.is_empty(), "constraints unexpectedly active");

        // Stacked weighted least squares over both outputs.
        let (ad, bd, _) = discretize_model(config.ts);
        let p = config.p;
        let nu = config.nu;
        let mut base = Vec::new();
        let mut xk = x0;
        for _ in 0..p {
            xk = ad * xk + bd * prev_u;
            base.push(xk);
        }
        let mut sens = vec![vec![Vector2::zeros(); nu]; p];
        for j in 0..nu {
            let mut acc = Vector2::zeros();
            for (i, row) in sens.iter_mut().enumerate() {
                acc = ad * acc;
                if i >= j {
                    acc += bd;
                }
                row[j] = acc;
            }
        }
        let mut g = DMatrix::zeros(2 * p, nu);
        let mut d = DVector::zeros(2 * p);
        for i in 0..p {
            for j in 0..nu {
                g[(2 * i, j)] = config.w_alpha * sens[i][j][1];
                g[(2 * i + 1, j)] = config.w_alpha_dot * sens[i][j][0];
            }
            d[2 * i] = config.w_alpha * (ref_a[i] - base[i][1]);
            d[2 * i + 1] = config.w_alpha_dot * (ref_ad[i] - base[i][0]);
        }
        let normal = g.transpose() * &g;
        let rhs = g.transpose() * d;
        let expected = normal.lu().solve(&rhs).unwrap();
        for j in 0..nu {
            assert!(
                (sol.z[j] - expected[j]).abs() <= 1e-7 * (1.0 + expected[j].abs()),
                "move {j}: {} vs {}",
                sol.z[j],
                expected[j]
            );
        }
        assert!(sol.z[nu].abs() <= 1e-12);
    }

    #[test]
    fn solution_cost_not_worse_than_zero_move_candidate() {
        let config = MpcConfig::default();
        let ref_a = vec![STEP_35_DEG; config.p];
        let ref_ad = vec![0.0; config.p];
        let qp = build_qp(&config, state_vector(0.1, 0.5), &ref_a, &ref_ad, 2.0).unwrap();
        let sol = qp.solve(None).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);

        // Zero moves with just enough slack to stay feasible.
        let nu = config.nu;
        let mut needed = 0.0f64;
        for row in 0..2 * config.p {
            // a_row * z0 = -eps; feasibility needs eps >= -b_row.
            needed = needed.max(-qp.b_in[row]);
        }
        let mut z0 = DVector::zeros(nu + 1);
        z0[nu] = needed.max(0.0);
        assert!(qp.objective(&sol.z) <= qp.objective(&z0) + 1e-9);
    }

    #[test]
    fn rollout_stays_inside_soft_band() {
        let config = MpcConfig::default();
        let ref_a = vec![STEP_35_DEG; config.p];
        let ref_ad = vec![0.0; config.p];
        let x0 = state_vector(0.0, 0.0);
        let prev_u = 0.0;
        let qp = build_qp(&config, x0, &ref_a, &ref_ad, prev_u).unwrap();
        let sol = qp.solve(None).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);

        let (ad, bd, _) = discretize_model(config.ts);
        let eps = sol.z[config.nu];
        let mut x = x0;
        let mut u = prev_u;
        for i in 0..config.p {
            if i < config.nu {
                u += sol.z[i];
            }
            x = ad * x + bd * u;
            assert!(x[1] <= config.alpha_max + eps + 1e-9);
            assert!(x[1] >= -(config.alpha_max + eps) - 1e-9);
        }
    }

    #[test]
    fn uniform_weight_scaling_leaves_minimizer_unchanged() {
        let base = MpcConfig::default();
        let scaled = MpcConfig {
            w_alpha: base.w_alpha * 7.3,
            w_alpha_dot: base.w_alpha_dot * 7.3,
            w_du: base.w_du * 7.3,
            rho_eps: base.rho_eps * 7.3 * 7.3,
            ..base
        };
        let ref_a = vec![STEP_35_DEG; base.p];
        let ref_ad = vec![0.0; base.p];
        let x0 = state_vector(0.2, 0.3);
        let a = build_qp(&base, x0, &ref_a, &ref_ad, 1.0).unwrap().solve(None).unwrap();
        let b = build_qp(&scaled, x0, &ref_a, &ref_ad, 1.0).unwrap().solve(None).unwrap();
        assert_eq!(a.status, QpStatus::Solved);
        assert_eq!(b.status, QpStatus::Solved);
        assert!((&a.z - &b.z).amax() <= 1e-9, "minimizers differ: {:?} vs {:?}", a.z, b.z);
    }

    #[test]
    fn step_holds_at_steady_tracking() {
        let config = MpcConfig::default();
        let target = 0.3;
        let mut state = ControllerState::new(target, 0.0);
        let ref_a = vec![target; config.p];
        let ref_ad = vec![0.0; config.p];
        let info =
            mpc_step(&config, &mut state, state_vector(target, 0.0), &ref_a, &ref_ad).unwrap();
        assert!(!info.fallback);
        assert!(info.y.abs() <= 1e-9, "y = {}", info.y);
    }

    #[test]
    fn step_saturates_rate_bound_on_large_reference_step() {
        let config = MpcConfig { du_max: 5.0, ..MpcConfig::default() };
        let mut state = ControllerState::new(0.0, 0.0);
        let ref_a = vec![STEP_35_DEG; config.p];
        let ref_ad = vec![0.0; config.p];
        let info = mpc_step(&config, &mut state, state_vector(0.0, 0.0), &ref_a, &ref_ad).unwrap();
        assert!(!info.fallback);
        assert_relative_eq!(info.du0, config.du_max, epsilon = 1e-9);
        assert_relative_eq!(info.y, config.du_max, epsilon = 1e-9);
    }

    #[test]
    fn step_updates_prediction_with_measurement_and_applied_input() {
        let config = MpcConfig::default();
        let mut state = ControllerState::new(0.05, 0.0);
        let ref_a = vec![0.2; config.p];
        let ref_ad = vec![0.0; config.p];
        let x_meas = state_vector(0.07, 0.4);
        let info = mpc_step(&config, &mut state, x_meas, &ref_a, &ref_ad).unwrap();
        assert!(!info.fallback);
        assert_eq!(info.alpha_hat, 0.05);
        assert_eq!(info.alpha_dot_hat, 0.0);

        let (ad, bd, _) = discretize_model(config.ts);
        assert_eq!(state.predicted_state, ad * x_meas + bd * info.y);
        assert_eq!(state.prev_u, info.y);
    }

    #[test]
    fn step_is_deterministic() {
        let config = MpcConfig::default();
        let ref_a = vec![0.4; config.p];
        let ref_ad = vec![0.0; config.p];
        let run = || {
            let mut state = ControllerState::new(0.0, 0.0);
            let mut ys = Vec::new();
            for _ in 0..20 {
                let x = state.predicted_state;
                let info = mpc_step(&config, &mut state, x, &ref_a, &ref_ad).unwrap();
                ys.push(info.y.to_bits());
            }
            ys
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn step_falls_back_to_hold_on_unusable_prediction() {
        let config = MpcConfig::default();
        let mut state = ControllerState::new(0.0, 0.0);
        state.prev_u = 1.25;
        state.predicted_state = state_vector(f64::NAN, 0.0);
        let ref_a = vec![0.0; config.p];
        let ref_ad = vec![0.0; config.p];
        let info = mpc_step(&config, &mut state, state_vector(0.0, 0.0), &ref_a, &ref_ad).unwrap();
        assert!(info.fallback);
        assert_eq!(info.y, 1.25);
    }

    #[test]
    fn config_validation_rejects_bad_settings() {
        let ok = MpcConfig::default();
        assert!(ok.validate().is_ok());
        for cfg in [
            MpcConfig { nu: 11, ..ok },
            MpcConfig { nu: 0, ..ok },
            MpcConfig { ts: 0.0, ..ok },
            MpcConfig { w_du: -1.0, ..ok },
            MpcConfig { s_u: 0.0, ..ok },
            MpcConfig { rho_eps: 0.0, ..ok },
            MpcConfig { alpha_max: -0.1, ..ok },
            MpcConfig { du_max: 0.0, ..ok },
        ] {
            assert!(cfg.validate().is_err(), "{cfg:?} should be rejected");
        }
    }

    #[test]
    fn linearization_static_hold_force() {
        let params = WristParams::default();
        let f = feedback_linearize(&params, 0.0, 0.25, 0.0);
        assert_relative_eq!(f, params.stiffness() * 0.25 / params.input_gain(), epsilon = 1e-12);
    }

    #[test]
    fn linearization_pure_inertial_command() {
        let params = WristParams::default();
        let f = feedback_linearize(&params, 1.0, 0.0, 0.0);
        assert_relative_eq!(f, params.mass(0.0) / params.input_gain(), epsilon = 1e-15);
    }

    #[test]
    fn linearization_inverts_forward_dynamics() {
        let params = WristParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..1000 {
            let alpha = rng.gen_range(0.0..FRAC_PI_4);
            let alpha_dot = rng.gen_range(-4.0..4.0);
            let y = rng.gen_range(-100.0..100.0);
            let force = feedback_linearize(&params, y, alpha, alpha_dot);
            let accel = params.acceleration(alpha, alpha_dot, force, 0.0);
            assert!((accel - y).abs() <= 1e-10 * (1.0 + y.abs()), "{accel} vs {y}");
        }
    }
}
