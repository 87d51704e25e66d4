//! Closed-loop simulation of the controlled wrist.
//!
//! The plant is integrated at `dt_sim` while the controller runs every `Ts`
//! with zero-order hold on the tendon force between updates. Scenarios are
//! step references in one of the four anatomical directions, optionally with
//! a torque disturbance pulse. Metrics summarize tracking quality per run.

use crate::dynamics::{rk4_step, DynamicsError, WristParams};
use crate::mpc::{
    feedback_linearize, mpc_step, state_vector, ControllerState, MpcConfig, MpcError,
};
use rayon::prelude::*;
use thiserror::Error;

/// Divergence guard: the run aborts when the bending angle leaves
/// `[ALPHA_GUARD_MIN, ALPHA_GUARD_MAX]` or stops being finite.
pub const ALPHA_GUARD_MIN: f64 = -0.1;
pub const ALPHA_GUARD_MAX: f64 = std::f64::consts::FRAC_PI_2;

/// Settling/recovery band as a fraction of the step amplitude.
pub const DEFAULT_BAND_FRACTION: f64 = 0.02;

/// Anatomical bending direction of a scenario. The planar model is
/// direction-symmetric, so this is a label for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Flexion,
    Extension,
    Radial,
    Ulnar,
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::Flexion => "flexion",
            Direction::Extension => "extension",
            Direction::Radial => "radial",
            Direction::Ulnar => "ulnar",
        })
    }
}

/// External force pulse applied as a bending torque
/// `tau_ext = force * moment_arm` during its window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disturbance {
    /// Pulse magnitude, newtons.
    pub force: f64,
    /// Pulse onset, seconds.
    pub start_time: f64,
    /// Pulse length, seconds.
    pub duration: f64,
    /// Lever arm from force to bending torque, meters.
    pub moment_arm: f64,
}

/// One closed-loop experiment: a step reference plus optional disturbance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub direction: Direction,
    /// Step reference level, radians.
    pub step_target: f64,
    /// Time the reference steps from zero to the target, seconds.
    pub step_time: f64,
    /// Total simulated time, seconds.
    pub duration: f64,
    /// Plant integration step, seconds.
    pub dt_sim: f64,
    pub disturbance: Option<Disturbance>,
}

impl Scenario {
    /// 35 degree step in the given direction.
    pub fn step(direction: Direction) -> Self {
        Self {
            direction,
            step_target: 0.610865,
            step_time: 0.0,
            duration: 5.0,
            dt_sim: 1e-3,
            disturbance: None,
        }
    }

    /// Flexion step followed by a 2 N, 50 ms pulse at t = 2 s acting at the
    /// backbone length.
    pub fn disturbance_rejection() -> Self {
        Self {
            duration: 8.0,
            disturbance: Some(Disturbance {
                force: 2.0,
                start_time: 2.0,
                duration: 0.05,
                moment_arm: 0.075,
            }),
            ..Self::step(Direction::Flexion)
        }
    }

    /// The four step presets, one per direction.
    pub fn step_presets() -> Vec<Self> {
        [Direction::Flexion, Direction::Extension, Direction::Radial, Direction::Ulnar]
            .into_iter()
            .map(Self::step)
            .collect()
    }

    /// Looks up a named preset: `<direction>-step` or `flexion-disturbance`.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "flexion-step" => Some(Self::step(Direction::Flexion)),
            "extension-step" => Some(Self::step(Direction::Extension)),
            "radial-step" => Some(Self::step(Direction::Radial)),
            "ulnar-step" => Some(Self::step(Direction::Ulnar)),
            "flexion-disturbance" => Some(Self::disturbance_rejection()),
            _ => None,
        }
    }

    pub fn name(&self) -> String {
        let kind = if self.disturbance.is_some() { "disturbance" } else { "step" };
        format!("{}-{}", self.direction, kind)
    }

    /// Checks scenario invariants against the controller sample time.
    // Negated comparisons so NaN fails validation.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self, ts: f64) -> Result<(), SimError> {
        let bad = |msg: &str| Err(SimError::InvalidScenario(msg.into()));
        if !(self.dt_sim > 0.0) {
            return bad("dt_sim must be positive");
        }
        if self.dt_sim > ts / 2.0 {
            return bad("dt_sim must be at most half the controller sample time");
        }
        let ratio = ts / self.dt_sim;
        if (ratio - ratio.round()).abs() > 1e-6 * ratio {
            return bad("controller sample time must be a multiple of dt_sim");
        }
        if !(self.step_time >= 0.0 && self.duration > self.step_time) {
            return bad("duration must exceed the step time");
        }
        if !(0.0..=std::f64::consts::FRAC_PI_4).contains(&self.step_target) {
            return bad("step target must lie in [0, pi/4]");
        }
        if let Some(d) = &self.disturbance {
            if !(d.duration > 0.0 && d.start_time >= 0.0 && d.moment_arm >= 0.0) {
                return bad("disturbance window must be positive and arm nonnegative");
            }
        }
        Ok(())
    }
}

/// One record of the closed-loop time series, taken every `dt_sim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub alpha_ref: f64,
    pub alpha: f64,
    pub alpha_dot_ref: f64,
    pub alpha_dot: f64,
    /// Commanded bending acceleration held since the last controller update.
    pub y: f64,
    /// Net tendon force held since the last controller update, newtons.
    pub force: f64,
    /// Position-band slack of the last QP solve.
    pub eps: f64,
    /// Active-set changes of the last QP solve.
    pub qp_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub dt: f64,
    pub step_target: f64,
    pub step_time: f64,
    /// End of the disturbance window, when the scenario has one.
    pub disturbance_end: Option<f64>,
    /// Controller intervals that fell back to holding the previous command.
    pub fallback_steps: usize,
}

/// Tracking-quality summary of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// Root mean square tracking error over the full run, radians.
    pub rmse: f64,
    /// Last time the error leaves the settling band; `None` when the run
    /// never settles.
    pub settling_time: Option<f64>,
    /// Mean absolute error over the final 10 % of the run, radians.
    pub steady_state_error: f64,
    /// Largest absolute error after the band is first reached, radians.
    pub peak_error: f64,
    /// First time after the disturbance window that the error re-enters the
    /// band for good; `None` without a disturbance or when it never does.
    pub recovery_time: Option<f64>,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SimError {
    #[error("scenario invalid: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Controller(#[from] MpcError),
    #[error("plant diverged at t={t:.3} s: alpha={alpha}")]
    Diverged { t: f64, alpha: f64 },
}

/// Runs one scenario to completion.
///
/// Per integration step: the controller updates first (every `Ts`), the
/// state and held inputs are recorded, then the plant advances by `dt_sim`
/// under the held force and any active disturbance torque. The run aborts
/// with [`SimError::Diverged`] if the state leaves the guard range. The
/// returned trajectory has one record per step plus the final state, which
/// reuses the last held inputs.
pub fn run_closed_loop(
    scenario: &Scenario,
    params: &WristParams,
    config: &MpcConfig,
) -> Result<Trajectory, SimError> {
    params.validate()?;
    config.validate()?;
    scenario.validate(config.ts)?;

    let dt = scenario.dt_sim;
    let ratio = (config.ts / dt).round() as usize;
    let n = (scenario.duration / dt).round() as usize;
    let ref_at = |t: f64| if t >= scenario.step_time { scenario.step_target } else { 0.0 };

    let mut alpha = 0.0f64;
    let mut alpha_dot = 0.0f64;
    let mut ctrl = ControllerState::new(alpha, alpha_dot);
    let mut y = 0.0;
    let mut force = 0.0;
    let mut eps = 0.0;
    let mut iters = 0usize;
    let mut fallback_steps = 0usize;
    let mut ref_alpha = vec![0.0; config.p];
    let ref_alpha_dot = vec![0.0; config.p];
    let mut samples = Vec::with_capacity(n + 1);

    for i in 0..=n {
        let t = i as f64 * dt;
        if i < n && i % ratio == 0 {
            ref_alpha.fill(ref_at(t));
            let info = mpc_step(
                config,
                &mut ctrl,
                state_vector(alpha, alpha_dot),
                &ref_alpha,
                &ref_alpha_dot,
            )?;
            if info.fallback {
                fallback_steps += 1;
            }
            y = info.y;
            force = feedback_linearize(params, info.y, info.alpha_hat, info.alpha_dot_hat);
            eps = info.eps;
            iters = info.qp_iterations;
        }
        samples.push(Sample {
            t,
            alpha_ref: ref_at(t),
            alpha,
            alpha_dot_ref: 0.0,
            alpha_dot,
            y,
            force,
            eps,
            qp_iterations: iters,
        });
        if i == n {
            break;
        }
        let tau = scenario.disturbance.as_ref().map_or(0.0, |d| {
            if t >= d.start_time && t < d.start_time + d.duration {
                d.force * d.moment_arm
            } else {
                0.0
            }
        });
        let (a_next, ad_next) = rk4_step(params, alpha, alpha_dot, force, tau, dt);
        if !a_next.is_finite()
            || !ad_next.is_finite()
            || !(ALPHA_GUARD_MIN..=ALPHA_GUARD_MAX).contains(&a_next)
        {
            return Err(SimError::Diverged { t: t + dt, alpha: a_next });
        }
        alpha = a_next;
        alpha_dot = ad_next;
    }

    Ok(Trajectory {
        samples,
        dt,
        step_target: scenario.step_target,
        step_time: scenario.step_time,
        disturbance_end: scenario.disturbance.as_ref().map(|d| d.start_time + d.duration),
        fallback_steps,
    })
}

/// Summarizes a trajectory. The settling band is
/// `band_fraction * |step_target|` around the final reference.
pub fn compute_metrics(traj: &Trajectory, band_fraction: f64) -> Metrics {
    let s = &traj.samples;
    if s.is_empty() {
        return Metrics {
            rmse: 0.0,
            settling_time: None,
            steady_state_error: 0.0,
            peak_error: 0.0,
            recovery_time: None,
        };
    }
    let final_ref = s[s.len() - 1].alpha_ref;
    let band = band_fraction * traj.step_target.abs();
    let err = |x: &Sample| x.alpha - x.alpha_ref;
    let outside = |x: &Sample| (x.alpha - final_ref).abs() > band;

    let rmse = (s.iter().map(|x| err(x) * err(x)).sum::<f64>() / s.len() as f64).sqrt();

    let last_outside = s.iter().rposition(outside);
    let settling_time = match last_outside {
        None => Some(s[0].t),
        Some(i) if i + 1 < s.len() => Some(s[i + 1].t),
        Some(_) => None,
    };

    let tail = (s.len() / 10).max(1);
    let steady_state_error =
        s[s.len() - tail..].iter().map(|x| err(x).abs()).sum::<f64>() / tail as f64;

    let first_inside = s.iter().position(|x| !outside(x)).unwrap_or(0);
    let peak_error = s[first_inside..].iter().map(|x| err(x).abs()).fold(0.0f64, f64::max);

    let recovery_time = traj.disturbance_end.and_then(|end| {
        let end_idx = s.iter().position(|x| x.t >= end)?;
        let idx = match last_outside {
            None => end_idx,
            Some(i) if i + 1 < s.len() => (i + 1).max(end_idx),
            Some(_) => return None,
        };
        Some(s[idx].t)
    });

    Metrics { rmse, settling_time, steady_state_error, peak_error, recovery_time }
}

/// One row of a [`run_suite`] report.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRow {
    pub name: String,
    pub metrics: Result<Metrics, SimError>,
}

/// Runs scenarios independently (in parallel) and reports metrics per
/// scenario in input order. A failed scenario yields an error row and does
/// not affect the others.
pub fn run_suite(
    scenarios: &[Scenario],
    params: &WristParams,
    config: &MpcConfig,
    band_fraction: f64,
) -> Vec<SuiteRow> {
    scenarios
        .par_iter()
        .map(|sc| SuiteRow {
            name: sc.name(),
            metrics: run_closed_loop(sc, params, config)
                .map(|traj| compute_metrics(&traj, band_fraction)),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_4;

    fn short_step(duration: f64) -> Scenario {
        Scenario { duration, ..Scenario::step(Direction::Flexion) }
    }

    fn synthetic(
        alpha: impl Fn(f64) -> f64,
        alpha_ref: impl Fn(f64) -> f64,
        dt: f64,
        n: usize,
        step_target: f64,
        disturbance_end: Option<f64>,
    ) -> Trajectory {
        let samples = (0..=n)
            .map(|i| {
                let t = i as f64 * dt;
                Sample {
                    t,
                    alpha_ref: alpha_ref(t),
                    alpha: alpha(t),
                    alpha_dot_ref: 0.0,
                    alpha_dot: 0.0,
                    y: 0.0,
                    force: 0.0,
                    eps: 0.0,
                    qp_iterations: 0,
                }
            })
            .collect();
        Trajectory { samples, dt, step_target, step_time: 0.0, disturbance_end, fallback_steps: 0 }
    }

    #[test]
    fn zero_reference_stays_at_rest() {
        let scenario =
            Scenario { step_target: 0.0, duration: 1.0, ..Scenario::step(Direction::Flexion) };
        let traj =
            run_closed_loop(&scenario, &WristParams::default(), &MpcConfig::default()).unwrap();
        assert_eq!(traj.samples.len(), 1001);
        for s in &traj.samples {
            assert_eq!(s.alpha, 0.0);
            assert_eq!(s.force, 0.0);
        }
        assert_eq!(traj.fallback_steps, 0);
    }

    #[test]
    fn step_tracking_meets_release_bounds() {
        let scenario = short_step(2.0);
        let traj =
            run_closed_loop(&scenario, &WristParams::default(), &MpcConfig::default()).unwrap();
        let m = compute_metrics(&traj, DEFAULT_BAND_FRACTION);
        let settle = m.settling_time.expect("run settles");
        assert!(settle <= 1.5, "settling time {settle}");
        assert!(m.steady_state_error <= 1e-4, "sse {}", m.steady_state_error);
        let max_alpha = traj.samples.iter().map(|s| s.alpha).fold(0.0f64, f64::max);
        assert!(max_alpha <= FRAC_PI_4 + 1e-3, "max alpha {max_alpha}");
        assert_eq!(traj.fallback_steps, 0);
        assert!(traj.samples.iter().all(|s| s.alpha.is_finite() && s.force.is_finite()));
    }

    #[test]
    fn force_changes_only_on_controller_intervals() {
        let scenario =
            Scenario { step_target: 0.3, duration: 0.5, ..Scenario::step(Direction::Radial) };
        let config = MpcConfig::default();
        let traj = run_closed_loop(&scenario, &WristParams::default(), &config).unwrap();
        let ratio = (config.ts / scenario.dt_sim).round() as usize;
        for i in 1..traj.samples.len() {
            if traj.samples[i].force != traj.samples[i - 1].force {
                assert_eq!(i % ratio, 0, "force changed off-interval at sample {i}");
            }
        }
    }

    #[test]
    fn sample_spacing_is_uniform() {
        let traj =
            run_closed_loop(&short_step(0.2), &WristParams::default(), &MpcConfig::default())
                .unwrap();
        for (i, s) in traj.samples.iter().enumerate() {
            assert_relative_eq!(s.t, i as f64 * traj.dt, epsilon = 1e-12);
        }
    }

    #[test]
    fn guard_aborts_divergent_run() {
        let scenario = Scenario {
            duration: 1.0,
            disturbance: Some(Disturbance {
                force: 1e4,
                start_time: 0.1,
                duration: 0.5,
                moment_arm: 0.075,
            }),
            ..Scenario::step(Direction::Flexion)
        };
        let err =
            run_closed_loop(&scenario, &WristParams::default(), &MpcConfig::default()).unwrap_err();
        assert!(matches!(err, SimError::Diverged { .. }), "{err:?}");
    }

    #[test]
    fn scenario_validation_rejects_bad_settings() {
        let ts = MpcConfig::default().ts;
        let ok = Scenario::step(Direction::Ulnar);
        assert!(ok.validate(ts).is_ok());
        for sc in [
            Scenario { dt_sim: ts, ..ok },
            Scenario { dt_sim: 0.0, ..ok },
            Scenario { dt_sim: 0.0033, ..ok },
            Scenario { duration: 0.0, ..ok },
            Scenario { step_target: 1.0, ..ok },
            Scenario { step_target: -0.1, ..ok },
        ] {
            assert!(sc.validate(ts).is_err(), "{sc:?} should be rejected");
        }
    }

    #[test]
    fn presets_resolve_by_name() {
        for name in
            ["flexion-step", "extension-step", "radial-step", "ulnar-step", "flexion-disturbance"]
        {
            let sc = Scenario::preset(name).expect(name);
            assert_eq!(sc.name(), name);
            assert!(sc.validate(MpcConfig::default().ts).is_ok());
        }
        assert!(Scenario::preset("sideways-step").is_none());
    }

    #[test]
    fn metrics_on_perfect_tracking() {
        let traj = synthetic(|_| 0.6, |_| 0.6, 1e-3, 1000, 0.6, None);
        let m = compute_metrics(&traj, DEFAULT_BAND_FRACTION);
        assert_eq!(m.rmse, 0.0);
        assert_eq!(m.steady_state_error, 0.0);
        assert_eq!(m.peak_error, 0.0);
        assert_eq!(m.settling_time, Some(0.0));
        assert_eq!(m.recovery_time, None);
    }

    #[test]
    fn metrics_on_constant_offset() {
        let e = 0.005;
        let traj = synthetic(move |_| 0.6 + e, |_| 0.6, 1e-3, 1000, 0.6, None);
        let m = compute_metrics(&traj, DEFAULT_BAND_FRACTION);
        assert_relative_eq!(m.rmse, e, max_relative = 1e-12);
        assert_relative_eq!(m.steady_state_error, e, max_relative = 1e-12);
    }

    #[test]
    fn exponential_rise_settles_at_the_closed_form_time() {
        let tau = 0.25;
        let target = 0.610865;
        let traj = synthetic(
            move |t| target * (1.0 - (-t / tau).exp()),
            move |_| target,
            1e-3,
            3000,
            target,
            None,
        );
        let m = compute_metrics(&traj, 0.02);
        let settle = m.settling_time.unwrap();
        let expected = tau * 50.0f64.ln();
        assert!((settle - expected).abs() <= 2e-3, "{settle} vs {expected}");
    }

    #[test]
    fn tighter_bands_never_settle_earlier() {
        let tau = 0.25;
        let target = 0.610865;
        let traj = synthetic(
            move |t| target * (1.0 - (-t / tau).exp()),
            move |_| target,
            1e-3,
            3000,
            target,
            None,
        );
        let mut prev = 0.0;
        for band in [0.05, 0.02, 0.01, 0.005] {
            let settle = compute_metrics(&traj, band).settling_time.unwrap();
            assert!(settle >= prev, "band {band}: {settle} < {prev}");
            prev = settle;
        }
    }

    #[test]
    fn recovery_runs_from_disturbance_end_to_band_reentry() {
        let target = 0.6;
        let traj = synthetic(
            move |t| if (2.0..2.5).contains(&t) { 0.5 } else { target },
            move |_| target,
            1e-3,
            4000,
            target,
            Some(2.05),
        );
        let m = compute_metrics(&traj, DEFAULT_BAND_FRACTION);
        assert_relative_eq!(m.recovery_time.unwrap(), 2.5, epsilon = 1e-9);

        // Error already back in band at the window end: recovery = window end.
        let calm = synthetic(move |_| target, move |_| target, 1e-3, 4000, target, Some(2.05));
        let m = compute_metrics(&calm, DEFAULT_BAND_FRACTION);
        assert_relative_eq!(m.recovery_time.unwrap(), 2.05, epsilon = 1e-9);
    }

    #[test]
    fn suite_isolates_failures_and_is_deterministic() {
        let divergent = Scenario {
            duration: 1.5,
            disturbance: Some(Disturbance {
                force: 1e4,
                start_time: 0.1,
                duration: 0.5,
                moment_arm: 0.075,
            }),
            ..Scenario::step(Direction::Extension)
        };
        let scenarios = vec![short_step(1.5), divergent, short_step(1.5)];
        let params = WristParams::default();
        let config = MpcConfig::default();
        let rows = run_suite(&scenarios, &params, &config, DEFAULT_BAND_FRACTION);
        assert_eq!(rows.len(), 3);
        assert!(rows[0].metrics.is_ok());
        assert!(matches!(rows[1].metrics, Err(SimError::Diverged { .. })));
        assert!(rows[2].metrics.is_ok());
        assert_eq!(rows[0].name, "flexion-step");
        assert_eq!(rows[1].name, "extension-disturbance");

        let again = run_suite(&scenarios, &params, &config, DEFAULT_BAND_FRACTION);
        assert_eq!(rows, again);
    }
}
