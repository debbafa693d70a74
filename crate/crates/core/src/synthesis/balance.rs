//! Optimal programming of the dynamic-balance model.
//!
//! Under the one-sided approximation the rate toward saturation is
//! `|x_sat - x| / τ(V)` with `τ(V) = τ0 exp(-η V)`, so the pointwise cost is
//! `g(x, V) = τ(V) (G V^2 + λ1) / |x_sat - x|`. For fixed `x`, `g` has a
//! local minimum at `V_-` and a local maximum at `V_+`,
//! `V_± = 1/η ± sqrt(1/η^2 - λ1/G)`, and decays to zero beyond `V_+`. The
//! constrained optimum therefore picks between `V1`, `V_-` and `V2`.
//!
//! Public helpers are phrased for SET (positive voltages, `x -> 1`); RESET
//! is handled internally by mirroring.

use crate::closed_form::{BalanceFrame, Direction, TransitionSpec};
use crate::device::{BalanceParams, Model, RateMode};
use crate::error::{Error, Result};
use crate::numerics::{expand_bracket, find_root};
use crate::waveform::SegmentSource;

use super::{
    assemble, build_pieces, check_budget, integrate_pieces, near, sample_grid, Level, ProfilePiece,
    RegimeCase, Synthesis, SynthesisConfig, VoltageBounds,
};

/// Fraction of the smaller retention constant beyond which the one-sided
/// approximation is flagged.
const VALIDITY_FRACTION: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GEvaluation {
    pub x: f64,
    pub v: f64,
    pub lambda1: f64,
    pub g: f64,
}

/// Stationary points of `g(x, ·)`: local minimum `v_minus`, local maximum
/// `v_plus`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryPair {
    pub v_minus: f64,
    pub v_plus: f64,
}

fn synthesis_model(p: &BalanceParams) -> Model {
    Model::Balance {
        params: *p,
        mode: RateMode::OneSided,
    }
}

pub(crate) fn frame(p: &BalanceParams, spec: &TransitionSpec) -> Result<BalanceFrame> {
    spec.validate_for(&synthesis_model(p))?;
    Ok(BalanceFrame::new(p, spec.direction))
}

fn frame_g(f: &BalanceFrame, lambda1: f64, x: f64, m: f64) -> f64 {
    let g = f.path.conductance(x);
    f.tau(m) * (g * m * m + lambda1) / f.path.distance(x)
}

pub(crate) fn frame_stationary(f: &BalanceFrame, lambda1: f64, x: f64) -> Option<StationaryPair> {
    let inv = 1.0 / f.eta;
    let disc = inv * inv - lambda1 / f.path.conductance(x);
    (disc >= 0.0).then(|| {
        let r = disc.sqrt();
        StationaryPair {
            v_minus: inv - r,
            v_plus: inv + r,
        }
    })
}

fn frame_crossover(f: &BalanceFrame, lambda1: f64, x: f64, cfg: &SynthesisConfig) -> Result<f64> {
    let pair = frame_stationary(f, lambda1, x)
        .ok_or_else(|| Error::invalid("lambda1", "g has no stationary voltages at this state"))?;
    if pair.v_plus == pair.v_minus {
        return Ok(pair.v_plus);
    }
    let target = frame_g(f, lambda1, x, pair.v_minus);
    if target <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let h = |m: f64| frame_g(f, lambda1, x, m) / target - 1.0;
    let bracket = expand_bracket(h, pair.v_plus, 2.0 * pair.v_plus, &cfg.root)?;
    find_root(h, bracket, &cfg.root)
}

/// Optimal magnitude and its provenance at state `x`.
fn frame_select(
    f: &BalanceFrame,
    bounds: &VoltageBounds,
    lambda1: f64,
    x: f64,
) -> (SegmentSource, Level) {
    let (v1, v2) = (bounds.v1_mag(), bounds.v2_mag());
    let upper = (SegmentSource::UpperBound, Level::Fixed(f.sign * v2));
    let Some(pair) = frame_stationary(f, lambda1, x) else {
        return upper;
    };
    if v1 < pair.v_minus {
        if v2 < pair.v_minus {
            return upper;
        }
        // Past the crossover, g(V2) drops below the local minimum.
        if frame_g(f, lambda1, x, pair.v_minus) <= frame_g(f, lambda1, x, v2) {
            (
                SegmentSource::StateDependent,
                Level::LocalMinimum { lambda1 },
            )
        } else {
            upper
        }
    } else if frame_g(f, lambda1, x, v1) < frame_g(f, lambda1, x, v2) {
        (SegmentSource::LowerBound, Level::Fixed(f.sign * v1))
    } else {
        upper
    }
}

fn set_frame(p: &BalanceParams, x: f64) -> Result<BalanceFrame> {
    Model::Balance {
        params: *p,
        mode: RateMode::OneSided,
    }
    .check_state(x)?;
    Ok(BalanceFrame::new(p, Direction::Set))
}

/// Pointwise SET cost `g(x, V)`.
pub fn g_eval(p: &BalanceParams, lambda1: f64, x: f64, v: f64) -> Result<GEvaluation> {
    let f = set_frame(p, x)?;
    if x == 1.0 {
        return Err(Error::Singular { x });
    }
    f.check_amplitude(v)?;
    Ok(GEvaluation {
        x,
        v,
        lambda1,
        g: frame_g(&f, lambda1, x, v),
    })
}

/// `V_±` for SET at state `x`; `None` when `λ1 > G(x)/η^2`.
pub fn stationary_voltages(
    p: &BalanceParams,
    lambda1: f64,
    x: f64,
) -> Result<Option<StationaryPair>> {
    let f = set_frame(p, x)?;
    Ok(frame_stationary(&f, lambda1, x))
}

/// Voltage `V* > V_+` with `g(x, V*) = g(x, V_-)`; infinite for `λ1 = 0`.
pub fn crossover_voltage(p: &BalanceParams, lambda1: f64, x: f64) -> Result<f64> {
    let f = set_frame(p, x)?;
    frame_crossover(&f, lambda1, x, &SynthesisConfig::default())
}

/// SET optimum `V̂(x)` within `[V1, V2]` for the given multiplier.
pub fn optimal_voltage_at_state(
    p: &BalanceParams,
    bounds: &VoltageBounds,
    lambda1: f64,
    x: f64,
) -> Result<f64> {
    let f = set_frame(p, x)?;
    if x == 1.0 {
        return Err(Error::Singular { x });
    }
    let (_, level) = frame_select(&f, bounds, lambda1, x);
    Ok(match level {
        Level::Fixed(v) => v,
        _ => frame_stationary(&f, lambda1, x).map_or(f64::NAN, |s| s.v_minus),
    })
}

fn sign_test(f: &BalanceFrame, bounds: &VoltageBounds) -> f64 {
    let q = |m: f64| m * m * (-f.eta * m).exp();
    q(bounds.v1_mag()) - q(bounds.v2_mag())
}

/// Regime of the optimal protocol for budget `t`.
pub fn classify_regime(
    p: &BalanceParams,
    spec: &TransitionSpec,
    bounds: &VoltageBounds,
    t: f64,
) -> Result<RegimeCase> {
    classify_with(p, spec, bounds, t, SynthesisConfig::default().edge_tol)
}

fn classify_with(
    p: &BalanceParams,
    spec: &TransitionSpec,
    bounds: &VoltageBounds,
    t: f64,
    tol: f64,
) -> Result<RegimeCase> {
    let f = frame(p, spec)?;
    let t_min = f.duration(spec, bounds.v2_mag());
    if let Some(case) = check_budget(t, t_min, tol)? {
        return Ok(case);
    }
    if sign_test(&f, bounds) >= 0.0 {
        return Ok(RegimeCase::Case2HighAlpha);
    }
    let t_lower = f.duration(spec, bounds.v1_mag());
    if t < t_lower && !near(t, t_lower, tol) {
        Ok(RegimeCase::Case3LowAlpha)
    } else {
        Ok(RegimeCase::Case2LowAlpha)
    }
}

/// Splits the path where the optimal level changes. Label changes are
/// located on the sample grid and refined by bisection, so stretches
/// narrower than one grid cell can be missed.
fn level_pieces(
    f: &BalanceFrame,
    spec: &TransitionSpec,
    bounds: &VoltageBounds,
    lambda1: f64,
    cfg: &SynthesisConfig,
) -> Vec<ProfilePiece> {
    let label = |x: f64| frame_select(f, bounds, lambda1, x);
    let grid = sample_grid(spec, cfg.grid_points);
    let labels: Vec<_> = grid.iter().map(|&x| label(x).0).collect();
    let mut breaks = Vec::new();
    for i in 1..grid.len() {
        if labels[i] == labels[i - 1] {
            continue;
        }
        let (mut a, mut b) = (grid[i - 1], grid[i]);
        let la = labels[i - 1];
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m == a || m == b {
                break;
            }
            if label(m).0 == la {
                a = m;
            } else {
                b = m;
            }
        }
        breaks.push(0.5 * (a + b));
    }
    build_pieces(spec, breaks, label)
}

/// Switching time `T_c(λ1)` of `V̂`; non-increasing in `λ1`.
pub fn tc_of_lambda(
    p: &BalanceParams,
    spec: &TransitionSpec,
    bounds: &VoltageBounds,
    lambda1: f64,
    cfg: &SynthesisConfig,
) -> Result<f64> {
    cfg.validate()?;
    let f = frame(p, spec)?;
    let pieces = level_pieces(&f, spec, bounds, lambda1, cfg);
    Ok(integrate_pieces(&synthesis_model(p), spec.direction, &pieces, &cfg.quad)?.0)
}

fn all_upper(
    f: &BalanceFrame,
    spec: &TransitionSpec,
    bounds: &VoltageBounds,
    lambda1: f64,
    cfg: &SynthesisConfig,
) -> bool {
    sample_grid(spec, cfg.grid_points)
        .into_iter()
        .all(|x| frame_select(f, bounds, lambda1, x).0 == SegmentSource::UpperBound)
}

/// Smallest `λ1` (to grid resolution) at which `V̂ = V2` along the whole
/// path.
pub fn saturation_lambda(
    p: &BalanceParams,
    spec: &TransitionSpec,
    bounds: &VoltageBounds,
    cfg: &SynthesisConfig,
) -> Result<f64> {
    let f = frame(p, spec)?;
    if all_upper(&f, spec, bounds, 0.0, cfg) {
        return Ok(0.0);
    }
    // Beyond G/η^2 there is no interior minimum anywhere on the path.
    let g_hi = f
        .path
        .conductance(spec.x_i)
        .max(f.path.conductance(spec.x_f));
    let (mut lo, mut hi) = (0.0, g_hi / (f.eta * f.eta));
    while hi - lo > cfg.root.rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if all_upper(&f, spec, bounds, mid, cfg) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Multiplier meeting `T_c(λ1) = t` inside the `Case3_LowAlpha` window.
pub fn solve_lambda1(
    p: &BalanceParams,
    spec: &TransitionSpec,
    bounds: &VoltageBounds,
    t: f64,
    cfg: &SynthesisConfig,
) -> Result<f64> {
    cfg.validate()?;
    let f = frame(p, spec)?;
    let t_min = f.duration(spec, bounds.v2_mag());
    let t_lower = f.duration(spec, bounds.v1_mag());
    if !(t > t_min && t < t_lower && sign_test(&f, bounds) < 0.0) {
        return Err(Error::Regime {
            requested: t,
            lo: t_min,
            hi: t_lower,
        });
    }
    let mut failure = None;
    let mut residual = |l: f64| match tc_of_lambda(p, spec, bounds, l, cfg) {
        Ok(tc) => tc - t,
        Err(e) => {
            failure.get_or_insert(e);
            f64::NAN
        }
    };
    let g_lo = f
        .path
        .conductance(spec.x_i)
        .min(f.path.conductance(spec.x_f));
    let start = 1e-3 * g_lo / (f.eta * f.eta);
    let result = expand_bracket(&mut residual, 0.0, start, &cfg.root)
        .and_then(|bracket| find_root(&mut residual, bracket, &cfg.root));
    match (result, failure) {
        (_, Some(e)) => Err(e),
        (r, None) => r,
    }
}

/// Optimal dynamic-balance protocol for the budget `t`, synthesized under
/// the one-sided approximation.
pub fn synthesize(
    p: &BalanceParams,
    spec: &TransitionSpec,
    bounds: &VoltageBounds,
    t: f64,
    cfg: &SynthesisConfig,
) -> Result<Synthesis> {
    cfg.validate()?;
    let f = frame(p, spec)?;
    let case = classify_with(p, spec, bounds, t, cfg.edge_tol)?;
    let model = synthesis_model(p);
    let t_min = f.duration(spec, bounds.v2_mag());
    let constant =
        |m: f64, source| build_pieces(spec, Vec::new(), |_| (source, Level::Fixed(f.sign * m)));
    let (pieces, lambda1) = match case {
        RegimeCase::Case1 => (
            constant(bounds.v2_mag(), SegmentSource::UpperBound),
            saturation_lambda(p, spec, bounds, cfg)?,
        ),
        RegimeCase::Case2HighAlpha => (constant(bounds.v2_mag(), SegmentSource::UpperBound), 0.0),
        RegimeCase::Case2LowAlpha => (constant(bounds.v1_mag(), SegmentSource::LowerBound), 0.0),
        RegimeCase::Case3LowAlpha => {
            let lambda1 = solve_lambda1(p, spec, bounds, t, cfg)?;
            (level_pieces(&f, spec, bounds, lambda1, cfg), lambda1)
        }
    };
    let mut s = assemble(model, spec, pieces, case, lambda1, Some(t), t_min, cfg)?;
    let tau_floor = p.tau0_set().min(p.tau0_reset());
    if t > VALIDITY_FRACTION * tau_floor {
        s.report.warnings.push(format!(
            "programming time {t:e} s exceeds {VALIDITY_FRACTION} of the shorter retention constant \
             ({tau_floor:e} s); the one-sided rate approximation may be inaccurate"
        ));
    }
    Ok(s)
}
