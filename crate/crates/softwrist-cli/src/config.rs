//! Configuration file schema.
//!
//! One TOML document with optional tables `[wrist]`, `[controller]`,
//! `[scenario]`, and `[output]`, plus a top-level `seed`. Every key has a
//! default, so an empty file (or no file) is a valid configuration; unknown
//! keys are rejected at load.

use serde::{Deserialize, Serialize};
use softwrist::kinematics::WristGeometry;
use softwrist::sim::{Disturbance, Scenario};
use softwrist::{MpcConfig, WristParams};
use std::fs;
use std::path::Path;

pub const KNOWN_SCENARIOS: [&str; 5] =
    ["flexion-step", "extension-step", "radial-step", "ulnar-step", "flexion-disturbance"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub wrist: WristSection,
    pub controller: ControllerSection,
    pub scenario: ScenarioSection,
    pub output: OutputSection,
    /// Seed for QP self-test problem generation.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            wrist: WristSection::default(),
            controller: ControllerSection::default(),
            scenario: ScenarioSection::default(),
            output: OutputSection::default(),
            seed: 42,
        }
    }
}

/// Physical parameters: geometry, masses, stiffness. SI units throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WristSection {
    pub l: f64,
    pub r: f64,
    pub theta: f64,
    pub n_discs: u32,
    pub h: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub ei: f64,
}

impl Default for WristSection {
    fn default() -> Self {
        let p = WristParams::default();
        Self {
            l: p.geom.l,
            r: p.geom.r,
            theta: p.geom.theta,
            n_discs: p.geom.n_discs,
            h: p.geom.h,
            m1: p.m1,
            m2: p.m2,
            m3: p.m3,
            ei: p.ei,
        }
    }
}

impl WristSection {
    pub fn to_params(&self) -> WristParams {
        WristParams {
            geom: WristGeometry {
                l: self.l,
                r: self.r,
                theta: self.theta,
                n_discs: self.n_discs,
                h: self.h,
            },
            m1: self.m1,
            m2: self.m2,
            m3: self.m3,
            ei: self.ei,
        }
    }
}

/// Controller horizons, weights, scales, and bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerSection {
    pub p: usize,
    pub nu: usize,
    pub ts: f64,
    pub w_alpha: f64,
    pub w_alpha_dot: f64,
    pub w_du: f64,
    pub s_alpha: f64,
    pub s_alpha_dot: f64,
    pub s_u: f64,
    pub rho_eps: f64,
    pub alpha_max: f64,
    pub du_max: f64,
}

impl Default for ControllerSection {
    fn default() -> Self {
        let c = MpcConfig::default();
        Self {
            p: c.p,
            nu: c.nu,
            ts: c.ts,
            w_alpha: c.w_alpha,
            w_alpha_dot: c.w_alpha_dot,
            w_du: c.w_du,
            s_alpha: c.s_alpha,
            s_alpha_dot: c.s_alpha_dot,
            s_u: c.s_u,
            rho_eps: c.rho_eps,
            alpha_max: c.alpha_max,
            du_max: c.du_max,
        }
    }
}

impl ControllerSection {
    pub fn to_config(&self) -> MpcConfig {
        MpcConfig {
            p: self.p,
            nu: self.nu,
            ts: self.ts,
            w_alpha: self.w_alpha,
            w_alpha_dot: self.w_alpha_dot,
            w_du: self.w_du,
            s_alpha: self.s_alpha,
            s_alpha_dot: self.s_alpha_dot,
            s_u: self.s_u,
            rho_eps: self.rho_eps,
            alpha_max: self.alpha_max,
            du_max: self.du_max,
        }
    }
}

/// Scenario selection plus overrides applied on top of the chosen preset.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    /// Preset name; the `--scenario` flag takes precedence.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_sim: Option<f64>,
    /// When present, replaces the preset's disturbance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disturbance: Option<DisturbanceSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisturbanceSection {
    pub force: f64,
    pub start_time: f64,
    pub duration: f64,
    pub moment_arm: f64,
}

impl Default for DisturbanceSection {
    fn default() -> Self {
        Self { force: 2.0, start_time: 2.0, duration: 0.05, moment_arm: 0.075 }
    }
}

impl ScenarioSection {
    /// Chooses the preset (flag wins over config, `flexion-step` as the
    /// fallback) and applies the overrides.
    pub fn resolve(&self, flag: Option<&str>) -> Result<Scenario, String> {
        let name = flag.or(self.preset.as_deref()).unwrap_or("flexion-step");
        let mut sc = Scenario::preset(name).ok_or_else(|| {
            format!("unknown scenario '{name}' (known: {})", KNOWN_SCENARIOS.join(", "))
        })?;
        if let Some(v) = self.step_target {
            sc.step_target = v;
        }
        if let Some(v) = self.step_time {
            sc.step_time = v;
        }
        if let Some(v) = self.duration {
            sc.duration = v;
        }
        if let Some(v) = self.dt_sim {
            sc.dt_sim = v;
        }
        if let Some(d) = &self.disturbance {
            sc.disturbance = Some(Disturbance {
                force: d.force,
                start_time: d.start_time,
                duration: d.duration,
                moment_arm: d.moment_arm,
            });
        }
        Ok(sc)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Default output directory; overridden by `--out`, falls back to the
    /// `SOFTWRIST_OUT_DIR` environment variable, then the working directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

impl RunConfig {
    /// Loads a config file, or the defaults when no path is given.
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))
    }

    /// Effective configuration as TOML.
    pub fn dump(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes")
    }
}
