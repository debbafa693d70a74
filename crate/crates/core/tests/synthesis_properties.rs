use memswitch_core::closed_form::{
    balance_pulse, vteam_pulse, vteam_shortest_time, vteam_unconstrained_optimum,
};
use memswitch_core::prelude::*;

fn vteam_device(alpha: f64) -> VteamParams {
    VteamParams::builder().alpha_off(alpha).build().unwrap()
}

fn reset() -> TransitionSpec {
    TransitionSpec::new(Direction::Reset, 0.1, 0.9).unwrap()
}

fn bounds() -> VoltageBounds {
    VoltageBounds::new(1.0, 5.0).unwrap()
}

fn max_deviation(profile: &StateProfile, v: f64) -> f64 {
    profile
        .samples
        .iter()
        .map(|&(_, u)| (u - v).abs())
        .fold(0.0, f64::max)
}

#[test]
fn vtilde_hand_value() {
    let v = vteam::vtilde(&vteam_device(1.0), Direction::Reset, 5.652e-3, 0.1);
    let expect = 1.0 + (1.0 + 5.652e-3 / 9.01e-4f64).sqrt();
    assert!((v - expect).abs() < 1e-12);
    assert!((v - 3.697).abs() < 1e-3);
    assert_eq!(
        vteam::vtilde(&vteam_device(1.0), Direction::Reset, 0.0, 0.4),
        2.0
    );
}

/// The profile approaches the constant edge profiles as `T` approaches
/// either regime edge: like `sqrt(ε)` at `T_min (1 + ε)`, where the clamp
/// releases over a shrinking stretch, and like `ε` at `T* (1 - ε)`.
#[test]
fn profile_is_continuous_at_regime_edges() {
    let cfg = SynthesisConfig::default();
    for alpha in [0.5, 1.0, 1.5] {
        let p = vteam_device(alpha);
        let t_min = vteam_shortest_time(&p, &reset(), 5.0).unwrap();
        let opt = vteam_unconstrained_optimum(&p, &reset()).unwrap().unwrap();
        let at_min = |eps: f64| {
            let s = vteam::synthesize(&p, &reset(), &bounds(), t_min * (1.0 + eps), &cfg).unwrap();
            assert_eq!(s.report.case, RegimeCase::Case3LowAlpha);
            max_deviation(&s.profile, 5.0)
        };
        let at_opt = |eps: f64| {
            let s = vteam::synthesize(&p, &reset(), &bounds(), opt.duration * (1.0 - eps), &cfg)
                .unwrap();
            assert_eq!(s.report.case, RegimeCase::Case3LowAlpha);
            max_deviation(&s.profile, opt.amplitude)
        };
        let (a, b) = (at_min(1e-3), at_min(1e-7));
        assert!(b <= 1.1e-2 * a && b <= 3e-3, "alpha {alpha}: {a} -> {b}");
        let (a, b) = (at_opt(1e-3), at_opt(1e-7));
        assert!(b <= 1.1e-4 * a && a <= 5e-3, "alpha {alpha}: {a} -> {b}");
    }
}

#[test]
fn optimal_energy_is_nonincreasing_in_budget() {
    let cfg = SynthesisConfig::default();
    let p = vteam_device(1.0);
    let t_min = vteam_shortest_time(&p, &reset(), 5.0).unwrap();
    let opt = vteam_unconstrained_optimum(&p, &reset()).unwrap().unwrap();
    let energies: Vec<f64> = (0..40)
        .map(|k| t_min * 10f64.powf(k as f64 / 39.0))
        .map(|t| {
            vteam::synthesize(&p, &reset(), &bounds(), t, &cfg)
                .unwrap()
                .report
                .energy
        })
        .collect();
    for w in energies.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-9));
    }
    let tail = vteam::synthesize(&p, &reset(), &bounds(), 3.0 * opt.duration, &cfg).unwrap();
    assert!((tail.report.energy - opt.energy).abs() < 1e-9 * opt.energy);
}

#[test]
fn long_budget_uses_energy_optimum_then_rests() {
    let p = vteam_device(1.0);
    let s = vteam::synthesize(&p, &reset(), &bounds(), 50e-6, &SynthesisConfig::default()).unwrap();
    assert_eq!(s.report.case, RegimeCase::Case2LowAlpha);
    let proto = profile_to_protocol(&s.profile, 1000).unwrap();
    assert_eq!(proto.segments.len(), 2);
    assert_eq!(proto.segments[0].voltage, 2.0);
    assert!((proto.segments[0].duration - 21.972e-6).abs() < 1e-3 * 21.972e-6);
    assert!((proto.segments[1].duration - 28.028e-6).abs() < 1e-3 * 28.028e-6);
    assert!((s.report.energy - 3.25589e-8).abs() < 1e-5 * 3.25589e-8);
}

#[test]
fn high_alpha_uses_upper_bound_then_rests() {
    let p = vteam_device(2.0);
    let s = vteam::synthesize(&p, &reset(), &bounds(), 10e-6, &SynthesisConfig::default()).unwrap();
    assert_eq!(s.report.case, RegimeCase::Case2HighAlpha);
    let proto = profile_to_protocol(&s.profile, 10).unwrap();
    let t_min = vteam_pulse(&p, &reset(), 5.0).unwrap().duration;
    assert_eq!(proto.segments[0].voltage, 5.0);
    assert!((proto.segments[0].duration - t_min).abs() < 1e-9 * t_min);
    assert_eq!(proto.segments[1].voltage, 0.0);
    assert!((proto.total_duration() - 10e-6).abs() < 1e-18);
}

#[test]
fn budget_at_shortest_time_is_one_full_pulse() {
    let p = vteam_device(1.0);
    let t_min = vteam_shortest_time(&p, &reset(), 5.0).unwrap();
    let s = vteam::synthesize(&p, &reset(), &bounds(), t_min, &SynthesisConfig::default()).unwrap();
    let proto = profile_to_protocol(&s.profile, 100).unwrap();
    assert_eq!(proto.segments.len(), 1);
    assert_eq!(proto.segments[0].voltage, 5.0);
    match vteam::synthesize(&p, &reset(), &bounds(), 1e-6, &SynthesisConfig::default()) {
        Err(Error::Infeasible { min_duration, .. }) => {
            assert!((min_duration - 5.493e-6).abs() < 1e-3 * 5.493e-6)
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn balance_budget_at_shortest_time() {
    let p = BalanceParams::new(148.0, 148.0, 5.0, -5.0, 1e-6, 1e-3).unwrap();
    let spec = TransitionSpec::new(Direction::Set, 0.1, 0.9).unwrap();
    let b = VoltageBounds::new(0.3, 0.5).unwrap();
    let t_min = balance_pulse(&p, &spec, 0.5).unwrap().duration;
    let s = balance::synthesize(&p, &spec, &b, t_min, &SynthesisConfig::default()).unwrap();
    assert_eq!(s.report.case, RegimeCase::Case1);
    assert!(s.report.lambda1 > 0.0);
    let proto = profile_to_protocol(&s.profile, 100).unwrap();
    assert_eq!(proto.segments.len(), 1);
    assert_eq!(proto.segments[0].voltage, 0.5);
}

#[test]
fn generic_dispatch_matches_model_specific_entry_points() {
    let cfg = SynthesisConfig::default();
    let p = vteam_device(1.0);
    let a =
        memswitch_core::synthesis::synthesize(&Model::Vteam(p), &reset(), &bounds(), 8e-6, &cfg)
            .unwrap();
    let b = vteam::synthesize(&p, &reset(), &bounds(), 8e-6, &cfg).unwrap();
    assert_eq!(a, b);
}
