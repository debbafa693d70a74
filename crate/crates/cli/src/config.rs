//! Run configuration: one JSON document with `model`, `task`, `numerics`
//! and `output` sections. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use memswitch_core::numerics::{QuadConfig, RootConfig, StepControl};
use memswitch_core::prelude::*;
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub task: TaskConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Vteam {
        k_off: f64,
        k_on: f64,
        alpha_off: f64,
        alpha_on: f64,
        v_off: f64,
        v_on: f64,
        w_on: f64,
        w_off: f64,
        g_min: f64,
        g_max: f64,
    },
    Balance {
        tau0_set: f64,
        tau0_reset: f64,
        eta_set: f64,
        eta_reset: f64,
        g_min: f64,
        g_max: f64,
        /// Rate used by `simulate` and `compare`; synthesis always uses the
        /// one-sided form.
        #[serde(default)]
        rate_mode: RateMode,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub direction: Direction,
    pub x_i: f64,
    pub x_f: f64,
    pub programming_time_s: f64,
    pub v1_mag: f64,
    pub v2_mag: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    pub grid_points: usize,
    pub segments: usize,
    pub root_rel_tol: f64,
    pub quad_rel_tol: f64,
    pub solver_steps: usize,
    pub adaptive: bool,
    pub adaptive_rel_tol: f64,
    pub adaptive_abs_tol: f64,
    pub trace_samples: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            grid_points: 1001,
            segments: 1000,
            root_rel_tol: 1e-10,
            quad_rel_tol: 1e-10,
            solver_steps: 1000,
            adaptive: false,
            adaptive_rel_tol: 1e-9,
            adaptive_abs_tol: 1e-12,
            trace_samples: 50,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory, relative to the working directory.
    pub dir: PathBuf,
    /// File name prefix for every artifact.
    pub prefix: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("."),
            prefix: "memswitch".into(),
        }
    }
}

/// Validated, ready-to-use form of a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Run {
    /// Device as configured (the rate used for simulation).
    pub model: Model,
    pub spec: TransitionSpec,
    pub bounds: VoltageBounds,
    pub programming_time: f64,
    pub synthesis: SynthesisConfig,
    pub solver: SolverConfig,
    pub segments: usize,
    pub output: OutputConfig,
}

impl Run {
    /// Device under the approximation used for synthesis.
    pub fn synthesis_model(&self) -> Model {
        self.model.for_synthesis()
    }

    pub fn output_path(&self, dir: Option<&Path>, stem: &str, ext: &str) -> PathBuf {
        let dir = dir.unwrap_or(&self.output.dir);
        dir.join(format!("{}_{stem}.{ext}", self.output.prefix))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Run> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("invalid config {}", path.display()))?;
        cfg.into_run()
            .with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn into_run(self) -> Result<Run> {
        let model = match self.model {
            ModelConfig::Vteam {
                k_off,
                k_on,
                alpha_off,
                alpha_on,
                v_off,
                v_on,
                w_on,
                w_off,
                g_min,
                g_max,
            } => Model::Vteam(
                VteamParams::builder()
                    .k_off(k_off)
                    .k_on(k_on)
                    .alpha_off(alpha_off)
                    .alpha_on(alpha_on)
                    .v_off(v_off)
                    .v_on(v_on)
                    .w_on(w_on)
                    .w_off(w_off)
                    .g_min(g_min)
                    .g_max(g_max)
                    .build()?,
            ),
            ModelConfig::Balance {
                tau0_set,
                tau0_reset,
                eta_set,
                eta_reset,
                g_min,
                g_max,
                rate_mode,
            } => Model::Balance {
                params: BalanceParams::new(tau0_set, tau0_reset, eta_set, eta_reset, g_min, g_max)?,
                mode: rate_mode,
            },
        };
        let t = self.task;
        let spec = TransitionSpec::new(t.direction, t.x_i, t.x_f)?;
        spec.validate_for(&model)?;
        let bounds = VoltageBounds::new(t.v1_mag, t.v2_mag)?;
        if !(t.programming_time_s.is_finite() && t.programming_time_s > 0.0) {
            anyhow::bail!("task.programming_time_s must be positive and finite");
        }
        let n = self.numerics;
        if n.segments == 0 || n.solver_steps == 0 || n.trace_samples < 2 {
            anyhow::bail!(
                "numerics: segments and solver_steps must be positive, trace_samples at least 2"
            );
        }
        let synthesis = SynthesisConfig {
            grid_points: n.grid_points,
            root: RootConfig {
                rel_tol: n.root_rel_tol,
                ..Default::default()
            },
            quad: QuadConfig {
                rel_tol: n.quad_rel_tol,
                ..Default::default()
            },
            ..Default::default()
        };
        let control = if n.adaptive {
            StepControl::Adaptive {
                rel_tol: n.adaptive_rel_tol,
                abs_tol: n.adaptive_abs_tol,
            }
        } else {
            StepControl::Fixed {
                steps: n.solver_steps,
            }
        };
        Ok(Run {
            model,
            spec,
            bounds,
            programming_time: t.programming_time_s,
            synthesis,
            solver: SolverConfig {
                control,
                samples_per_segment: n.trace_samples,
            },
            segments: n.segments,
            output: self.output,
        })
    }
}
