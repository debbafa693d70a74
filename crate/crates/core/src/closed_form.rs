//! Closed-form switching time and energy for square voltage pulses, and the
//! unconstrained energy optimum.
//!
//! Both models are handled in a direction-agnostic way: a [`VteamBranch`] or
//! [`BalanceFrame`] captures the active half of the state equation as
//! `|dx/dt| = rate_scale(|V|) * |x_sat - x|` and everything else follows from
//! that form. Voltages keep their physical sign at the public surface.

use serde::{Deserialize, Serialize};

use crate::device::{BalanceParams, Model, VteamParams};
use crate::error::{Error, Result};

/// Transition direction. VTEAM RESET raises `w` under positive voltage;
/// dynamic-balance SET raises `x` under positive voltage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Reset,
    Set,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Reset => "reset",
            Direction::Set => "set",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionSpec {
    pub direction: Direction,
    pub x_i: f64,
    pub x_f: f64,
}

impl TransitionSpec {
    pub fn new(direction: Direction, x_i: f64, x_f: f64) -> Result<Self> {
        if !(x_i.is_finite() && x_f.is_finite()) {
            return Err(Error::invalid("x", "states must be finite"));
        }
        if x_i == x_f {
            return Err(Error::invalid("x_f", "must differ from x_i"));
        }
        Ok(TransitionSpec {
            direction,
            x_i,
            x_f,
        })
    }

    pub fn span(&self) -> f64 {
        (self.x_f - self.x_i).abs()
    }

    /// Sign of the voltages that drive this transition. Both models move
    /// the state up under positive bias.
    pub fn voltage_sign(&self, model: &Model) -> f64 {
        if increases_state(model, self.direction) {
            1.0
        } else {
            -1.0
        }
    }

    /// Checks ordering and range against the model. A final state on the
    /// bound the window saturates at is rejected.
    pub fn validate_for(&self, model: &Model) -> Result<()> {
        let (lo, hi) = model.state_range();
        let increasing = increases_state(model, self.direction);
        if increasing != (self.x_f > self.x_i) {
            return Err(Error::invalid(
                "x_f",
                format!(
                    "{} {} must {} the state",
                    model.name(),
                    self.direction.as_str(),
                    if increasing { "increase" } else { "decrease" }
                ),
            ));
        }
        for (what, v) in [("x_i", self.x_i), ("x_f", self.x_f)] {
            if !(v >= lo && v <= hi) {
                return Err(Error::Domain {
                    what,
                    value: v,
                    lo,
                    hi,
                });
            }
        }
        let saturating = if increasing { hi } else { lo };
        if self.x_f == saturating {
            return Err(Error::SaturatingEndpoint { value: self.x_f });
        }
        Ok(())
    }
}

pub(crate) fn increases_state(model: &Model, direction: Direction) -> bool {
    match (model, direction) {
        (Model::Vteam(_), Direction::Reset) | (Model::Balance { .. }, Direction::Set) => true,
        (Model::Vteam(_), Direction::Set) | (Model::Balance { .. }, Direction::Reset) => false,
    }
}

/// Square-pulse outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PulseResult {
    pub energy: f64,
    pub duration: f64,
    pub amplitude: f64,
}

/// Distance-to-saturation integrals shared by both models. With
/// `u = |x_sat - x|` and `G = g_sat + slope * u`, a transition from `u_i` to
/// `u_f` under `|dx/dt| ∝ u` needs `∫ du/u = ln(u_i/u_f)` time units and
/// `∫ G du/u = g_sat ln(u_i/u_f) + slope (u_i - u_f)` energy units.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SaturatingPath {
    pub saturating: f64,
    pub g_sat: f64,
    pub slope: f64,
}

impl SaturatingPath {
    pub fn distance(&self, x: f64) -> f64 {
        (self.saturating - x).abs()
    }

    pub fn conductance(&self, x: f64) -> f64 {
        self.g_sat + self.slope * self.distance(x)
    }

    pub fn log_ratio(&self, spec: &TransitionSpec) -> f64 {
        (self.distance(spec.x_i) / self.distance(spec.x_f)).ln()
    }

    pub fn weighted_log(&self, spec: &TransitionSpec) -> f64 {
        self.g_sat * self.log_ratio(spec)
            + self.slope * (self.distance(spec.x_i) - self.distance(spec.x_f))
    }
}

/// Active half of the VTEAM state equation for one direction, in magnitudes:
/// `|dw/dt| = |k| (|V|/|v_th| - 1)^α |w_sat - w| / span`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct VteamBranch {
    pub sign: f64,
    pub k: f64,
    pub alpha: f64,
    pub threshold: f64,
    pub span: f64,
    pub path: SaturatingPath,
}

impl VteamBranch {
    pub fn new(p: &VteamParams, direction: Direction) -> Self {
        let dg = p.g_max() - p.g_min();
        match direction {
            Direction::Reset => VteamBranch {
                sign: 1.0,
                k: p.k_off(),
                alpha: p.alpha_off(),
                threshold: p.v_off(),
                span: p.span(),
                path: SaturatingPath {
                    saturating: p.w_off(),
                    g_sat: p.g_min(),
                    slope: dg / p.span(),
                },
            },
            Direction::Set => VteamBranch {
                sign: -1.0,
                k: -p.k_on(),
                alpha: p.alpha_on(),
                threshold: -p.v_on(),
                span: p.span(),
                path: SaturatingPath {
                    saturating: p.w_on(),
                    g_sat: p.g_max(),
                    slope: -dg / p.span(),
                },
            },
        }
    }

    /// `(|V|/|v_th| - 1)^α` for a voltage magnitude beyond threshold.
    pub fn drive(&self, mag: f64) -> f64 {
        let base = mag / self.threshold - 1.0;
        debug_assert!(base >= 0.0);
        base.max(0.0).powf(self.alpha)
    }

    pub fn check_amplitude(&self, v: f64) -> Result<f64> {
        let mag = v * self.sign;
        if v.is_finite() && mag > self.threshold {
            Ok(mag)
        } else {
            Err(Error::InfeasibleAmplitude { voltage: v })
        }
    }

    /// `T(V) = time_scale / drive(|V|)`.
    pub fn time_scale(&self, spec: &TransitionSpec) -> f64 {
        self.span / self.k * self.path.log_ratio(spec)
    }

    /// `Q(V) = V^2 energy_scale / drive(|V|)`.
    pub fn energy_scale(&self, spec: &TransitionSpec) -> f64 {
        self.span / self.k * self.path.weighted_log(spec)
    }

    /// `2 |v_th| / (2 - α)` for `α < 2`.
    pub fn optimum_magnitude(&self) -> Option<f64> {
        (self.alpha < 2.0).then(|| 2.0 * self.threshold / (2.0 - self.alpha))
    }
}

/// Active half of the dynamic-balance state equation in magnitudes:
/// `|dx/dt| = |x_sat - x| / τ(|V|)` with `τ(m) = τ0 exp(-|η| m)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BalanceFrame {
    pub sign: f64,
    pub tau0: f64,
    pub eta: f64,
    pub path: SaturatingPath,
}

impl BalanceFrame {
    pub fn new(p: &BalanceParams, direction: Direction) -> Self {
        let dg = p.g_max() - p.g_min();
        match direction {
            Direction::Set => BalanceFrame {
                sign: 1.0,
                tau0: p.tau0_set(),
                eta: p.eta_set(),
                path: SaturatingPath {
                    saturating: 1.0,
                    g_sat: p.g_max(),
                    slope: -dg,
                },
            },
            Direction::Reset => BalanceFrame {
                sign: -1.0,
                tau0: p.tau0_reset(),
                eta: -p.eta_reset(),
                path: SaturatingPath {
                    saturating: 0.0,
                    g_sat: p.g_min(),
                    slope: dg,
                },
            },
        }
    }

    pub fn tau(&self, mag: f64) -> f64 {
        self.tau0 * (-self.eta * mag).exp()
    }

    pub fn check_amplitude(&self, v: f64) -> Result<f64> {
        let mag = v * self.sign;
        if v.is_finite() && mag > 0.0 {
            Ok(mag)
        } else {
            Err(Error::InfeasibleAmplitude { voltage: v })
        }
    }

    /// Switching time at voltage magnitude `mag`.
    pub fn duration(&self, spec: &TransitionSpec, mag: f64) -> f64 {
        self.tau(mag) * self.path.log_ratio(spec)
    }

    pub fn energy(&self, spec: &TransitionSpec, mag: f64) -> f64 {
        self.tau(mag) * mag * mag * self.path.weighted_log(spec)
    }
}

fn vteam_model(p: &VteamParams, spec: &TransitionSpec) -> Result<VteamBranch> {
    spec.validate_for(&Model::Vteam(*p))?;
    Ok(VteamBranch::new(p, spec.direction))
}

fn balance_model(p: &BalanceParams, spec: &TransitionSpec) -> Result<BalanceFrame> {
    spec.validate_for(&Model::Balance {
        params: *p,
        mode: Default::default(),
    })?;
    Ok(BalanceFrame::new(p, spec.direction))
}

/// Energy and width of the square VTEAM pulse of height `v0` that completes
/// the transition. RESET needs `v0 > v_off`, SET needs `v0 < v_on`.
pub fn vteam_pulse(p: &VteamParams, spec: &TransitionSpec, v0: f64) -> Result<PulseResult> {
    let b = vteam_model(p, spec)?;
    let mag = b.check_amplitude(v0)?;
    let drive = b.drive(mag);
    Ok(PulseResult {
        energy: v0 * v0 * b.energy_scale(spec) / drive,
        duration: b.time_scale(spec) / drive,
        amplitude: v0,
    })
}

/// Energy-minimizing square pulse `V* = 2 v_th / (2 - α)` with its `Q*` and
/// `T*`. `None` for `α >= 2`, where the energy decreases monotonically in
/// `|V|` and the largest admissible amplitude should be used instead.
pub fn vteam_unconstrained_optimum(
    p: &VteamParams,
    spec: &TransitionSpec,
) -> Result<Option<PulseResult>> {
    let b = vteam_model(p, spec)?;
    let Some(mag) = b.optimum_magnitude() else {
        return Ok(None);
    };
    let a = b.alpha;
    let th = b.threshold;
    let energy = 4.0 * th * th / (b.k * a.powf(a) * (2.0 - a).powf(2.0 - a))
        * b.path.weighted_log(spec)
        * b.span;
    let duration = b.span / b.k * ((2.0 - a) / a).powf(a) * b.path.log_ratio(spec);
    Ok(Some(PulseResult {
        energy,
        duration,
        amplitude: b.sign * mag,
    }))
}

/// Shortest switching time: the pulse width at the largest admissible
/// amplitude `v2` (signed).
pub fn vteam_shortest_time(p: &VteamParams, spec: &TransitionSpec, v2: f64) -> Result<f64> {
    vteam_pulse(p, spec, v2).map(|r| r.duration)
}

/// Square-pulse height whose width equals `t`; inverse of
/// [`vteam_pulse`]'s duration. Tends to the threshold as `t -> ∞`.
pub fn vteam_voltage_for_time(p: &VteamParams, spec: &TransitionSpec, t: f64) -> Result<f64> {
    let b = vteam_model(p, spec)?;
    if !(t > 0.0) {
        return Err(Error::invalid("T", "programming time must be positive"));
    }
    let mag = b.threshold * (1.0 + (b.time_scale(spec) / t).powf(1.0 / b.alpha));
    Ok(b.sign * mag)
}

/// One-sided dynamic-balance square pulse. SET needs `v0 > 0`, RESET `v0 < 0`.
pub fn balance_pulse(p: &BalanceParams, spec: &TransitionSpec, v0: f64) -> Result<PulseResult> {
    let f = balance_model(p, spec)?;
    let mag = f.check_amplitude(v0)?;
    Ok(PulseResult {
        energy: f.energy(spec, mag),
        duration: f.duration(spec, mag),
        amplitude: v0,
    })
}

/// State `t` seconds into a one-sided square pulse of height `v0`:
/// `1 + (x_i - 1) exp(-t/τ_S)` for SET, `x_i exp(-t/τ_R)` for RESET.
pub fn balance_trajectory(
    p: &BalanceParams,
    spec: &TransitionSpec,
    v0: f64,
    t: f64,
) -> Result<f64> {
    let f = balance_model(p, spec)?;
    let mag = f.check_amplitude(v0)?;
    if !(t >= 0.0) {
        return Err(Error::invalid("t", "must be non-negative"));
    }
    let sat = f.path.saturating;
    Ok(sat + (spec.x_i - sat) * (-t / f.tau(mag)).exp())
}

/// Square-pulse height whose one-sided switching time equals `t`.
pub fn balance_voltage_for_time(p: &BalanceParams, spec: &TransitionSpec, t: f64) -> Result<f64> {
    let f = balance_model(p, spec)?;
    if !(t > 0.0) {
        return Err(Error::invalid("T", "programming time must be positive"));
    }
    let mag = (f.tau0 * f.path.log_ratio(spec) / t).ln() / f.eta;
    if !(mag > 0.0) {
        // Even an infinitesimal amplitude finishes within `t`.
        return Err(Error::invalid(
            "T",
            format!(
                "exceeds the zero-amplitude switching time {} s",
                f.tau0 * f.path.log_ratio(spec)
            ),
        ));
    }
    Ok(f.sign * mag)
}

/// Square-pulse result for either model.
pub fn constant_pulse(model: &Model, spec: &TransitionSpec, v0: f64) -> Result<PulseResult> {
    match model {
        Model::Vteam(p) => vteam_pulse(p, spec, v0),
        Model::Balance { params, .. } => balance_pulse(params, spec, v0),
    }
}

/// Square-pulse height finishing exactly in `t`, for either model.
pub fn constant_voltage_for_time(model: &Model, spec: &TransitionSpec, t: f64) -> Result<f64> {
    match model {
        Model::Vteam(p) => vteam_voltage_for_time(p, spec, t),
        Model::Balance { params, .. } => balance_voltage_for_time(params, spec, t),
    }
}
