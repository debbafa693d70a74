//! Constrained energy-optimal protocol synthesis.
//!
//! For a transition `x_i -> x_f` that must complete within `T` using
//! voltages of magnitude in `[V1, V2]`, the optimal control minimizes, state
//! by state, the Lagrangian density `(λ0 G V^2 + λ1) / |f(x, V)|`. The
//! multiplier `λ1` is then tuned so that the switching time
//! `T_c = ∫ dx / |f(x, V̂(x))|` meets the budget whenever the time
//! constraint is active. `λ0` is normalized to one whenever it is positive.
//!
//! [`vteam`] and [`balance`] hold the model-specific regime maps and voltage
//! laws. The result is a [`StateProfile`] (voltage as a function of state)
//! plus a [`SynthesisReport`].

pub mod balance;
pub mod vteam;

use serde::Serialize;

use crate::closed_form::{Direction, TransitionSpec};
use crate::device::Model;
use crate::error::{Error, Result};
use crate::numerics::{integrate_1d, QuadConfig, RootConfig};
use crate::waveform::SegmentSource;

/// Admissible voltage magnitudes `[V1, V2]`; the sign follows the direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoltageBounds {
    v1_mag: f64,
    v2_mag: f64,
}

impl VoltageBounds {
    /// `0 < v1_mag <= v2_mag`. Equal bounds leave a single admissible level.
    pub fn new(v1_mag: f64, v2_mag: f64) -> Result<Self> {
        if !(v1_mag.is_finite() && v2_mag.is_finite()) {
            return Err(Error::invalid("bounds", "must be finite"));
        }
        if !(v1_mag > 0.0) {
            return Err(Error::invalid("v1_mag", "must be positive"));
        }
        if !(v2_mag >= v1_mag) {
            return Err(Error::invalid("v2_mag", "must not be below v1_mag"));
        }
        Ok(VoltageBounds { v1_mag, v2_mag })
    }

    pub fn v1_mag(&self) -> f64 {
        self.v1_mag
    }

    pub fn v2_mag(&self) -> f64 {
        self.v2_mag
    }
}

/// Which optimality branch the protocol descends from.
///
/// `Case1` is the `T = T_min` boundary (`λ0 = 0`): the largest admissible
/// pulse for the whole budget. `Case2*` have `λ1 = 0`: a constant pulse for
/// `T_c < T`, then rest. `HighAlpha` uses the largest admissible amplitude,
/// `LowAlpha` the interior energy optimum (or the lower bound, if the
/// optimum falls below it). `Case3LowAlpha` has both multipliers positive
/// and a state-dependent voltage spanning the whole budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegimeCase {
    Case1,
    Case2HighAlpha,
    Case2LowAlpha,
    Case3LowAlpha,
}

impl RegimeCase {
    pub fn label(&self) -> &'static str {
        match self {
            RegimeCase::Case1 => "Case1",
            RegimeCase::Case2HighAlpha => "Case2_HighAlpha",
            RegimeCase::Case2LowAlpha => "Case2_LowAlpha",
            RegimeCase::Case3LowAlpha => "Case3_LowAlpha",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        [
            RegimeCase::Case1,
            RegimeCase::Case2HighAlpha,
            RegimeCase::Case2LowAlpha,
            RegimeCase::Case3LowAlpha,
        ]
        .into_iter()
        .find(|c| c.label() == s)
    }

    /// Whether the time constraint is active (`T_c = T`).
    pub fn uses_full_budget(&self) -> bool {
        matches!(self, RegimeCase::Case1 | RegimeCase::Case3LowAlpha)
    }
}

impl std::fmt::Display for RegimeCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for RegimeCase {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisConfig {
    /// Number of uniformly spaced states in the exported profile samples;
    /// also the scan grid for level switches in the dynamic-balance model.
    pub grid_points: usize,
    pub root: RootConfig,
    pub quad: QuadConfig,
    /// Relative tolerance for treating `T` as equal to a regime edge.
    pub edge_tol: f64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            grid_points: 1001,
            root: RootConfig::default(),
            quad: QuadConfig::default(),
            edge_tol: 1e-9,
        }
    }
}

impl SynthesisConfig {
    fn validate(&self) -> Result<()> {
        if self.grid_points < 2 {
            return Err(Error::invalid("grid_points", "need at least two samples"));
        }
        if !(self.edge_tol >= 0.0) {
            return Err(Error::invalid("edge_tol", "must be non-negative"));
        }
        Ok(())
    }
}

/// Voltage law on one stretch of the state path. Voltages are signed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Level {
    Fixed(f64),
    /// VTEAM interior optimum `Ṽ(w)` for the given multiplier.
    Tilde {
        lambda1: f64,
    },
    /// Dynamic-balance local minimum `V_-(x)` of `g(x, ·)`.
    LocalMinimum {
        lambda1: f64,
    },
}

/// A contiguous stretch `[from, to]` of the state path (in path order) over
/// which `V̂` follows a single law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePiece {
    pub from: f64,
    pub to: f64,
    pub source: SegmentSource,
    pub level: Level,
}

impl ProfilePiece {
    pub fn contains(&self, x: f64) -> bool {
        let (lo, hi) = if self.from <= self.to {
            (self.from, self.to)
        } else {
            (self.to, self.from)
        };
        x >= lo && x <= hi
    }
}

/// Level change along the optimal trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelSwitch {
    pub state: f64,
    pub time: f64,
    pub from: SegmentSource,
    pub to: SegmentSource,
}

/// Optimal voltage as a function of state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateProfile {
    /// Device under the approximation the profile was synthesized for.
    pub model: Model,
    pub direction: Direction,
    pub x_i: f64,
    pub x_f: f64,
    pub pieces: Vec<ProfilePiece>,
    /// `(x, V̂(x))` on a uniform grid from `x_i` to `x_f`.
    pub samples: Vec<(f64, f64)>,
    pub case: RegimeCase,
    /// Time-constraint multiplier in S·V² (`λ0 = 1`); zero when inactive.
    pub lambda1: f64,
    /// Switching time `T_c`.
    pub tc: f64,
    /// Programming budget `T >= T_c`.
    pub programming_time: f64,
    pub switches: Vec<LevelSwitch>,
}

impl StateProfile {
    pub fn spec(&self) -> TransitionSpec {
        TransitionSpec {
            direction: self.direction,
            x_i: self.x_i,
            x_f: self.x_f,
        }
    }

    fn piece_at(&self, x: f64) -> Option<&ProfilePiece> {
        self.pieces.iter().find(|p| p.contains(x))
    }

    /// `V̂(x)`; `None` outside the transition path.
    pub fn voltage_at(&self, x: f64) -> Option<f64> {
        self.piece_at(x)
            .map(|p| level_voltage(&self.model, self.direction, p.level, x))
    }

    /// Time-budget functional `β[V̂] = T_c - T`; non-positive when the
    /// constraint holds.
    pub fn beta(&self) -> f64 {
        self.tc - self.programming_time
    }

    pub fn rest_duration(&self) -> f64 {
        (self.programming_time - self.tc).max(0.0)
    }
}

/// Everything reported about one synthesis run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthesisReport {
    pub case: RegimeCase,
    /// S·V²
    pub lambda1: f64,
    pub tc: f64,
    pub programming_time: f64,
    /// Predicted Joule losses, by quadrature along `V̂`.
    pub energy: f64,
    pub feasible: bool,
    /// Shortest achievable switching time at `V2`.
    pub min_duration: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub profile: StateProfile,
    pub report: SynthesisReport,
}

pub(crate) fn level_voltage(model: &Model, direction: Direction, level: Level, x: f64) -> f64 {
    match (level, model) {
        (Level::Fixed(v), _) => v,
        (Level::Tilde { lambda1 }, Model::Vteam(p)) => vteam::vtilde(p, direction, lambda1, x),
        (Level::LocalMinimum { lambda1 }, Model::Balance { params, .. }) => {
            let frame = crate::closed_form::BalanceFrame::new(params, direction);
            let pair = balance::frame_stationary(&frame, lambda1, x);
            frame.sign * pair.map_or(f64::NAN, |p| p.v_minus)
        }
        _ => f64::NAN,
    }
}

/// Splits `[x_i, x_f]` at the given interior breakpoints and labels each
/// stretch by its midpoint, merging neighbours with the same label.
pub(crate) fn build_pieces<F>(
    spec: &TransitionSpec,
    mut breakpoints: Vec<f64>,
    mut label: F,
) -> Vec<ProfilePiece>
where
    F: FnMut(f64) -> (SegmentSource, Level),
{
    let (a, b) = (spec.x_i, spec.x_f);
    let dir = (b - a).signum();
    breakpoints.retain(|&x| (x - a) * dir > 0.0 && (b - x) * dir > 0.0);
    breakpoints.sort_by(|p, q| ((p - q) * dir).total_cmp(&0.0));
    breakpoints.dedup();
    let mut edges = Vec::with_capacity(breakpoints.len() + 2);
    edges.push(a);
    edges.extend(breakpoints);
    edges.push(b);

    let mut pieces: Vec<ProfilePiece> = Vec::new();
    for w in edges.windows(2) {
        let (source, level) = label(0.5 * (w[0] + w[1]));
        match pieces.last_mut() {
            Some(last) if last.source == source && last.level == level => last.to = w[1],
            _ => pieces.push(ProfilePiece {
                from: w[0],
                to: w[1],
                source,
                level,
            }),
        }
    }
    pieces
}

/// `(T_c, Q)` accumulated piece by piece: `∫ dx/|f|` and `∫ G V^2/|f| dx`
/// along the profile.
pub(crate) fn integrate_pieces(
    model: &Model,
    direction: Direction,
    pieces: &[ProfilePiece],
    quad: &QuadConfig,
) -> Result<(f64, f64, Vec<f64>)> {
    let mut tc = 0.0;
    let mut energy = 0.0;
    let mut starts = Vec::with_capacity(pieces.len());
    for piece in pieces {
        starts.push(tc);
        let level = piece.level;
        let time = integrate_1d(
            |x| {
                let v = level_voltage(model, direction, level, x);
                1.0 / model.rate(x, v).abs()
            },
            piece.from,
            piece.to,
            quad,
        )?
        .abs();
        let heat = integrate_1d(
            |x| {
                let v = level_voltage(model, direction, level, x);
                model.conductance(x) * v * v / model.rate(x, v).abs()
            },
            piece.from,
            piece.to,
            quad,
        )?
        .abs();
        if !(time.is_finite() && heat.is_finite()) {
            return Err(Error::Singular { x: piece.from });
        }
        tc += time;
        energy += heat;
    }
    Ok((tc, energy, starts))
}

pub(crate) fn switches_of(pieces: &[ProfilePiece], starts: &[f64]) -> Vec<LevelSwitch> {
    pieces
        .windows(2)
        .zip(&starts[1..])
        .map(|(w, &time)| LevelSwitch {
            state: w[1].from,
            time,
            from: w[0].source,
            to: w[1].source,
        })
        .collect()
}

pub(crate) fn sample_grid(spec: &TransitionSpec, n: usize) -> Vec<f64> {
    let (a, b) = (spec.x_i, spec.x_f);
    (0..n)
        .map(|i| {
            if i + 1 == n {
                b
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn assemble(
    model: Model,
    spec: &TransitionSpec,
    pieces: Vec<ProfilePiece>,
    case: RegimeCase,
    lambda1: f64,
    programming_time: Option<f64>,
    min_duration: f64,
    cfg: &SynthesisConfig,
) -> Result<Synthesis> {
    let (tc, energy, starts) = integrate_pieces(&model, spec.direction, &pieces, &cfg.quad)?;
    let switches = switches_of(&pieces, &starts);
    let mut profile = StateProfile {
        model,
        direction: spec.direction,
        x_i: spec.x_i,
        x_f: spec.x_f,
        pieces,
        samples: Vec::new(),
        case,
        lambda1,
        tc,
        programming_time: programming_time.unwrap_or(tc).max(tc),
        switches,
    };
    profile.samples = sample_grid(spec, cfg.grid_points)
        .into_iter()
        .map(|x| (x, profile.voltage_at(x).unwrap_or(f64::NAN)))
        .collect();
    let report = SynthesisReport {
        case,
        lambda1,
        tc,
        programming_time: profile.programming_time,
        energy,
        feasible: true,
        min_duration,
        warnings: Vec::new(),
    };
    Ok(Synthesis { profile, report })
}

/// Regime edge test shared by both models.
pub(crate) fn near(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs()
}

/// Infeasibility check; returns the `Case1` marker when `t` sits on `t_min`.
pub(crate) fn check_budget(t: f64, t_min: f64, tol: f64) -> Result<Option<RegimeCase>> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::invalid(
            "T",
            "programming time must be positive and finite",
        ));
    }
    if near(t, t_min, tol) {
        Ok(Some(RegimeCase::Case1))
    } else if t < t_min {
        Err(Error::Infeasible {
            requested: t,
            min_duration: t_min,
        })
    } else {
        Ok(None)
    }
}

/// Synthesizes the optimal protocol for either model.
pub fn synthesize(
    model: &Model,
    spec: &TransitionSpec,
    bounds: &VoltageBounds,
    t: f64,
    cfg: &SynthesisConfig,
) -> Result<Synthesis> {
    match model {
        Model::Vteam(p) => vteam::synthesize(p, spec, bounds, t, cfg),
        Model::Balance { params, .. } => balance::synthesize(params, spec, bounds, t, cfg),
    }
}

/// Shortest feasible programming time for either model.
pub fn min_duration(model: &Model, spec: &TransitionSpec, bounds: &VoltageBounds) -> Result<f64> {
    match model {
        Model::Vteam(p) => {
            let b = vteam::branch(p, spec, bounds)?;
            Ok(b.time_scale(spec) / b.drive(bounds.v2_mag))
        }
        Model::Balance { params, .. } => {
            let f = balance::frame(params, spec)?;
            Ok(f.duration(spec, bounds.v2_mag))
        }
    }
}
