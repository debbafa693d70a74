//! Optimal programming of the VTEAM model.
//!
//! With `λ0 = 1` the pointwise minimizer of `(G V^2 + λ1) / |f(w, V)|` over
//! `|V| > |v_th|` is
//! `|Ṽ(w)| = (|v_th| + sqrt(v_th^2 + λ1 α (2 - α) / G(w))) / (2 - α)` for
//! `α < 2`, and the constrained optimum is `V̂ = clamp(Ṽ, V1, V2)`. Because
//! `Ṽ` is monotone in `G`, the clamps engage on at most one stretch each and
//! the switch states have closed forms.

use crate::closed_form::{TransitionSpec, VteamBranch};
use crate::device::{Model, VteamParams};
use crate::error::{Error, Result};
use crate::numerics::find_root;
use crate::waveform::SegmentSource;

use super::{
    assemble, build_pieces, check_budget, integrate_pieces, near, Level, ProfilePiece, RegimeCase,
    StateProfile, Synthesis, SynthesisConfig, VoltageBounds,
};

pub(crate) fn branch(
    p: &VteamParams,
    spec: &TransitionSpec,
    bounds: &VoltageBounds,
) -> Result<VteamBranch> {
    spec.validate_for(&Model::Vteam(*p))?;
    let b = VteamBranch::new(p, spec.direction);
    if !(bounds.v1_mag() >= b.threshold) {
        return Err(Error::InfeasibleAmplitude {
            voltage: b.sign * bounds.v1_mag(),
        });
    }
    Ok(b)
}

fn tilde_magnitude(b: &VteamBranch, lambda1: f64, g: f64) -> f64 {
    let two_minus = 2.0 - b.alpha;
    let th = b.threshold;
    (th + (th * th + lambda1 * b.alpha * two_minus / g).sqrt()) / two_minus
}

/// Signed interior optimum `Ṽ(w)`. Only meaningful for `α < 2`; `NaN`
/// otherwise.
pub fn vtilde(
    p: &VteamParams,
    direction: crate::closed_form::Direction,
    lambda1: f64,
    w: f64,
) -> f64 {
    let b = VteamBranch::new(p, direction);
    if b.alpha >= 2.0 {
        return f64::NAN;
    }
    b.sign * tilde_magnitude(&b, lambda1, b.path.conductance(w))
}

/// Amplitude magnitude of the best constant pulse when time is not binding.
fn optimum_magnitude(b: &VteamBranch, bounds: &VoltageBounds) -> f64 {
    match b.optimum_magnitude() {
        Some(v) => v.clamp(bounds.v1_mag(), bounds.v2_mag()),
        None => bounds.v2_mag(),
    }
}

fn pulse_time(b: &VteamBranch, spec: &TransitionSpec, mag: f64) -> f64 {
    b.time_scale(spec) / b.drive(mag)
}

/// Regime of the optimal protocol for budget `t`.
pub fn classify_regime(
    p: &VteamParams,
    spec: &TransitionSpec,
    bounds: &VoltageBounds,
    t: f64,
) -> Result<RegimeCase> {
    classify_with(p, spec, bounds, t, SynthesisConfig::default().edge_tol)
}

fn classify_with(
    p: &VteamParams,
    spec: &TransitionSpec,
    bounds: &VoltageBounds,
    t: f64,
    tol: f64,
) -> Result<RegimeCase> {
    let b = branch(p, spec, bounds)?;
    let t_min = pulse_time(&b, spec, bounds.v2_mag());
    if let Some(case) = check_budget(t, t_min, tol)? {
        return Ok(case);
    }
    let v_opt = optimum_magnitude(&b, bounds);
    if v_opt == bounds.v2_mag() {
        return Ok(RegimeCase::Case2HighAlpha);
    }
    let t_opt = pulse_time(&b, spec, v_opt);
    if t < t_opt && !near(t, t_opt, tol) {
        Ok(RegimeCase::Case3LowAlpha)
    } else {
        Ok(RegimeCase::Case2LowAlpha)
    }
}

/// State where `Ṽ` crosses magnitude `m`, if the crossing lies on the
/// conductance range at all. `Ṽ >= m` exactly where `G <= G_cross(m)`.
fn crossing_conductance(b: &VteamBranch, lambda1: f64, m: f64) -> Option<f64> {
    let lever = (2.0 - b.alpha) * m - b.threshold;
    let denom = lever * lever - b.threshold * b.threshold;
    (lever > b.threshold && denom > 0.0).then(|| lambda1 * b.alpha * (2.0 - b.alpha) / denom)
}

fn state_of_conductance(b: &VteamBranch, g: f64) -> f64 {
    let u = (g - b.path.g_sat) / b.path.slope;
    b.path.saturating - b.sign * u
}

fn clamped_pieces(
    b: &VteamBranch,
    spec: &TransitionSpec,
    bounds: &VoltageBounds,
    lambda1: f64,
) -> Vec<ProfilePiece> {
    let (v1, v2) = (bounds.v1_mag(), bounds.v2_mag());
    let sign = b.sign;
    let breaks = [v1, v2]
        .iter()
        .filter_map(|&m| crossing_conductance(b, lambda1, m))
        .map(|g| state_of_conductance(b, g))
        .filter(|x| x.is_finite())
        .collect();
    build_pieces(spec, breaks, |x| {
        let m = tilde_magnitude(b, lambda1, b.path.conductance(x));
        if m >= v2 {
            (SegmentSource::UpperBound, Level::Fixed(sign * v2))
        } else if m <= v1 {
            (SegmentSource::LowerBound, Level::Fixed(sign * v1))
        } else {
            (SegmentSource::StateDependent, Level::Tilde { lambda1 })
        }
    })
}

fn constant_pieces(spec: &TransitionSpec, v: f64, source: SegmentSource) -> Vec<ProfilePiece> {
    build_pieces(spec, Vec::new(), |_| (source, Level::Fixed(v)))
}

fn require_low_alpha(b: &VteamBranch) -> Result<()> {
    if b.alpha >= 2.0 {
        return Err(Error::invalid(
            "alpha",
            "state-dependent optimum exists only for alpha < 2",
        ));
    }
    Ok(())
}

/// `V̂(w)` for a given multiplier, with its switching time and energy.
/// The returned profile is labelled `Case3_LowAlpha` and spends no rest.
pub fn vhat_profile(
    p: &VteamParams,
    spec: &TransitionSpec,
    bounds: &VoltageBounds,
    lambda1: f64,
    cfg: &SynthesisConfig,
) -> Result<StateProfile> {
    cfg.validate()?;
    let b = branch(p, spec, bounds)?;
    require_low_alpha(&b)?;
    if !(lambda1 >= 0.0 && lambda1.is_finite()) {
        return Err(Error::invalid("lambda1", "must be non-negative and finite"));
    }
    let t_min = pulse_time(&b, spec, bounds.v2_mag());
    let pieces = clamped_pieces(&b, spec, bounds, lambda1);
    let s = assemble(
        Model::Vteam(*p),
        spec,
        pieces,
        RegimeCase::Case3LowAlpha,
        lambda1,
        None,
        t_min,
        cfg,
    )?;
    Ok(s.profile)
}

/// Switching time `T_c(λ1)` of `V̂`; non-increasing in `λ1`.
pub fn tc_of_lambda(
    p: &VteamParams,
    spec: &TransitionSpec,
    bounds: &VoltageBounds,
    lambda1: f64,
    cfg: &SynthesisConfig,
) -> Result<f64> {
    let b = branch(p, spec, bounds)?;
    require_low_alpha(&b)?;
    let pieces = clamped_pieces(&b, spec, bounds, lambda1);
    Ok(integrate_pieces(&Model::Vteam(*p), spec.direction, &pieces, &cfg.quad)?.0)
}

/// Smallest `λ1` at which `V̂` sits on `V2` along the whole path, i.e. where
/// the `λ1` family reaches the `T_min` edge. `None` for `α >= 2` or when the
/// unconstrained optimum already exceeds `V2`.
pub fn saturation_lambda(
    p: &VteamParams,
    spec: &TransitionSpec,
    bounds: &VoltageBounds,
) -> Result<Option<f64>> {
    let b = branch(p, spec, bounds)?;
    if b.alpha >= 2.0 {
        return Ok(None);
    }
    let lever = (2.0 - b.alpha) * bounds.v2_mag() - b.threshold;
    let denom = lever * lever - b.threshold * b.threshold;
    if !(lever > b.threshold && denom > 0.0) {
        return Ok(None);
    }
    let g_hi = b
        .path
        .conductance(spec.x_i)
        .max(b.path.conductance(spec.x_f));
    Ok(Some(g_hi * denom / (b.alpha * (2.0 - b.alpha))))
}

/// Multiplier meeting `T_c(λ1) = t` inside the `Case3_LowAlpha` window.
pub fn solve_lambda1(
    p: &VteamParams,
    spec: &TransitionSpec,
    bounds: &VoltageBounds,
    t: f64,
    cfg: &SynthesisConfig,
) -> Result<f64> {
    cfg.validate()?;
    let b = branch(p, spec, bounds)?;
    require_low_alpha(&b)?;
    let t_min = pulse_time(&b, spec, bounds.v2_mag());
    let t_opt = pulse_time(&b, spec, optimum_magnitude(&b, bounds));
    if !(t > t_min && t < t_opt) {
        return Err(Error::Regime {
            requested: t,
            lo: t_min,
            hi: t_opt,
        });
    }
    let hi = saturation_lambda(p, spec, bounds)?.ok_or(Error::Regime {
        requested: t,
        lo: t_min,
        hi: t_opt,
    })?;
    let mut failure = None;
    let lambda = find_root(
        |l| match tc_of_lambda(p, spec, bounds, l, cfg) {
            Ok(tc) => tc - t,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        (0.0, hi),
        &cfg.root,
    );
    match (lambda, failure) {
        (_, Some(e)) => Err(e),
        (r, None) => r,
    }
}

/// Optimal VTEAM protocol for the budget `t`.
pub fn synthesize(
    p: &VteamParams,
    spec: &TransitionSpec,
    bounds: &VoltageBounds,
    t: f64,
    cfg: &SynthesisConfig,
) -> Result<Synthesis> {
    cfg.validate()?;
    let b = branch(p, spec, bounds)?;
    let case = classify_with(p, spec, bounds, t, cfg.edge_tol)?;
    let model = Model::Vteam(*p);
    let (v1, v2) = (bounds.v1_mag(), bounds.v2_mag());
    let t_min = pulse_time(&b, spec, v2);
    match case {
        RegimeCase::Case1 => {
            let lambda1 = saturation_lambda(p, spec, bounds)?.unwrap_or(0.0);
            let pieces = constant_pieces(spec, b.sign * v2, SegmentSource::UpperBound);
            assemble(model, spec, pieces, case, lambda1, Some(t), t_min, cfg)
        }
        RegimeCase::Case2HighAlpha => {
            let pieces = constant_pieces(spec, b.sign * v2, SegmentSource::UpperBound);
            assemble(model, spec, pieces, case, 0.0, Some(t), t_min, cfg)
        }
        RegimeCase::Case2LowAlpha => {
            let m = optimum_magnitude(&b, bounds);
            let source = if m == v1 {
                SegmentSource::LowerBound
            } else {
                SegmentSource::EnergyOptimum
            };
            let pieces = constant_pieces(spec, b.sign * m, source);
            assemble(model, spec, pieces, case, 0.0, Some(t), t_min, cfg)
        }
        RegimeCase::Case3LowAlpha => {
            let lambda1 = solve_lambda1(p, spec, bounds, t, cfg)?;
            let pieces = clamped_pieces(&b, spec, bounds, lambda1);
            assemble(model, spec, pieces, case, lambda1, Some(t), t_min, cfg)
        }
    }
}
