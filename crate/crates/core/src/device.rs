//! Device descriptions: memductance and state-evolution functions.
//!
//! Both models are first order: a scalar internal state `x` drives a linear
//! memductance `G_M(x)` and evolves as `dx/dt = f(x, V)`. For either model
//! and any fixed voltage, `f` is affine in `x`, which [`Relaxation`] exposes
//! so that piecewise-constant drives can be solved exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_in(what: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value,
            lo,
            hi,
        })
    }
}

fn require(name: &'static str, ok: bool, reason: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(name, reason))
    }
}

/// VTEAM parameter record with linear window functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VteamParams {
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
}

/// Builder for [`VteamParams`]. Unset fields take the values
/// `k_off = 1e5`, `k_on = -1e5`, `alpha = 1`, `v_off = 1`, `v_on = -1`,
/// `w ∈ [0, 1]`, `G ∈ [1e-5, 1e-3]`.
#[derive(Debug, Clone, Copy)]
pub struct VteamBuilder {
    p: VteamParams,
}

impl Default for VteamBuilder {
    fn default() -> Self {
        VteamBuilder {
            p: VteamParams {
                k_off: 1e5,
                k_on: -1e5,
                alpha_off: 1.0,
                alpha_on: 1.0,
                v_off: 1.0,
                v_on: -1.0,
                w_on: 0.0,
                w_off: 1.0,
                g_min: 1e-5,
                g_max: 1e-3,
            },
        }
    }
}

macro_rules! setter {
    ($($name:ident),*) => {
        $(
            pub fn $name(mut self, value: f64) -> Self {
                self.p.$name = value;
                self
            }
        )*
    };
}

impl VteamBuilder {
    setter!(k_off, k_on, alpha_off, alpha_on, v_off, v_on, w_on, w_off, g_min, g_max);

    pub fn build(self) -> Result<VteamParams> {
        self.p.validate()?;
        Ok(self.p)
    }
}

impl VteamParams {
    pub fn builder() -> VteamBuilder {
        VteamBuilder::default()
    }

    fn validate(&self) -> Result<()> {
        let all = [
            self.k_off,
            self.k_on,
            self.alpha_off,
            self.alpha_on,
            self.v_off,
            self.v_on,
            self.w_on,
            self.w_off,
            self.g_min,
            self.g_max,
        ];
        require(
            "vteam",
            all.iter().all(|v| v.is_finite()),
            "all parameters must be finite",
        )?;
        require("k_off", self.k_off > 0.0, "must be positive")?;
        require("k_on", self.k_on < 0.0, "must be negative")?;
        require("alpha_off", self.alpha_off > 0.0, "must be positive")?;
        require("alpha_on", self.alpha_on > 0.0, "must be positive")?;
        require("v_off", self.v_off > 0.0, "must be positive")?;
        require("v_on", self.v_on < 0.0, "must be negative")?;
        require("w_off", self.w_on < self.w_off, "must exceed w_on")?;
        require("g_min", self.g_min > 0.0, "must be positive")?;
        require("g_max", self.g_min < self.g_max, "must exceed g_min")
    }

    pub fn k_off(&self) -> f64 {
        self.k_off
    }
    pub fn k_on(&self) -> f64 {
        self.k_on
    }
    pub fn alpha_off(&self) -> f64 {
        self.alpha_off
    }
    pub fn alpha_on(&self) -> f64 {
        self.alpha_on
    }
    pub fn v_off(&self) -> f64 {
        self.v_off
    }
    pub fn v_on(&self) -> f64 {
        self.v_on
    }
    pub fn w_on(&self) -> f64 {
        self.w_on
    }
    pub fn w_off(&self) -> f64 {
        self.w_off
    }
    pub fn g_min(&self) -> f64 {
        self.g_min
    }
    pub fn g_max(&self) -> f64 {
        self.g_max
    }

    pub fn span(&self) -> f64 {
        self.w_off - self.w_on
    }

    pub fn window_off(&self, w: f64) -> f64 {
        (self.w_off - w) / self.span()
    }

    pub fn window_on(&self, w: f64) -> f64 {
        (w - self.w_on) / self.span()
    }

    pub(crate) fn g(&self, w: f64) -> f64 {
        let s = (w - self.w_on) / self.span();
        self.g_max * (1.0 - s) + self.g_min * s
    }

    /// `G_M(w) = G_max + (G_min - G_max)(w - w_on)/(w_off - w_on)`.
    pub fn memductance(&self, w: f64) -> Result<f64> {
        check_in("w", w, self.w_on, self.w_off)?;
        Ok(self.g(w))
    }

    pub(crate) fn rate(&self, w: f64, v: f64) -> f64 {
        if v > self.v_off {
            let base = v / self.v_off - 1.0;
            debug_assert!(base > 0.0);
            self.k_off * base.powf(self.alpha_off) * self.window_off(w)
        } else if v < self.v_on {
            let base = v / self.v_on - 1.0;
            debug_assert!(base > 0.0);
            self.k_on * base.powf(self.alpha_on) * self.window_on(w)
        } else {
            0.0
        }
    }

    /// Threshold state equation `dw/dt`: positive above `v_off`, zero in the
    /// dead zone `[v_on, v_off]`, negative below `v_on`.
    pub fn state_rate(&self, w: f64, v: f64) -> Result<f64> {
        check_in("w", w, self.w_on, self.w_off)?;
        if !v.is_finite() {
            return Err(Error::invalid("V", "voltage must be finite"));
        }
        Ok(self.rate(w, v))
    }

    fn relaxation(&self, v: f64) -> Relaxation {
        // f = c (w_off - w)/span  or  f = c (w - w_on)/span with c < 0.
        if v > self.v_off {
            let c = self.k_off * (v / self.v_off - 1.0).powf(self.alpha_off) / self.span();
            Relaxation {
                drive: c * self.w_off,
                decay: c,
            }
        } else if v < self.v_on {
            let c = self.k_on * (v / self.v_on - 1.0).powf(self.alpha_on) / self.span();
            Relaxation {
                drive: -c * self.w_on,
                decay: -c,
            }
        } else {
            Relaxation::FROZEN
        }
    }
}

/// Dynamic-balance parameter record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceParams {
    tau0_set: f64,
    tau0_reset: f64,
    eta_set: f64,
    eta_reset: f64,
    g_min: f64,
    g_max: f64,
}

impl BalanceParams {
    pub fn new(
        tau0_set: f64,
        tau0_reset: f64,
        eta_set: f64,
        eta_reset: f64,
        g_min: f64,
        g_max: f64,
    ) -> Result<Self> {
        let p = BalanceParams {
            tau0_set,
            tau0_reset,
            eta_set,
            eta_reset,
            g_min,
            g_max,
        };
        let all = [tau0_set, tau0_reset, eta_set, eta_reset, g_min, g_max];
        require(
            "balance",
            all.iter().all(|v| v.is_finite()),
            "all parameters must be finite",
        )?;
        require("tau0_set", tau0_set > 0.0, "must be positive")?;
        require("tau0_reset", tau0_reset > 0.0, "must be positive")?;
        require("eta_set", eta_set > 0.0, "must be positive")?;
        require("eta_reset", eta_reset < 0.0, "must be negative")?;
        require("g_min", g_min > 0.0, "must be positive")?;
        require("g_max", g_min < g_max, "must exceed g_min")?;
        Ok(p)
    }

    pub fn tau0_set(&self) -> f64 {
        self.tau0_set
    }
    pub fn tau0_reset(&self) -> f64 {
        self.tau0_reset
    }
    pub fn eta_set(&self) -> f64 {
        self.eta_set
    }
    pub fn eta_reset(&self) -> f64 {
        self.eta_reset
    }
    pub fn g_min(&self) -> f64 {
        self.g_min
    }
    pub fn g_max(&self) -> f64 {
        self.g_max
    }

    /// SET time constant `τ_S(V) = τ0_S exp(-η_S V)`.
    pub fn tau_set(&self, v: f64) -> f64 {
        self.tau0_set * (-self.eta_set * v).exp()
    }

    /// RESET time constant `τ_R(V) = τ0_R exp(-η_R V)`.
    pub fn tau_reset(&self, v: f64) -> f64 {
        self.tau0_reset * (-self.eta_reset * v).exp()
    }

    pub(crate) fn g(&self, x: f64) -> f64 {
        (1.0 - x) * self.g_min + x * self.g_max
    }

    /// `G_M(x) = (1 - x) G_min + x G_max`.
    pub fn memductance(&self, x: f64) -> Result<f64> {
        check_in("x", x, 0.0, 1.0)?;
        Ok(self.g(x))
    }

    pub(crate) fn rate(&self, x: f64, v: f64, mode: RateMode) -> f64 {
        let set = |x: f64| (1.0 - x) / self.tau_set(v);
        let reset = |x: f64| -(x / self.tau_reset(v));
        match mode {
            RateMode::Full => set(x) + reset(x),
            RateMode::SetOnly => set(x),
            RateMode::ResetOnly => reset(x),
            RateMode::OneSided if v > 0.0 => set(x),
            RateMode::OneSided if v < 0.0 => reset(x),
            RateMode::OneSided => 0.0,
        }
    }

    /// `dx/dt` under the requested approximation.
    pub fn state_rate(&self, x: f64, v: f64, mode: RateMode) -> Result<f64> {
        check_in("x", x, 0.0, 1.0)?;
        if !v.is_finite() {
            return Err(Error::invalid("V", "voltage must be finite"));
        }
        Ok(self.rate(x, v, mode))
    }

    fn relaxation(&self, v: f64, mode: RateMode) -> Relaxation {
        let set = 1.0 / self.tau_set(v);
        let reset = 1.0 / self.tau_reset(v);
        let (drive, decay) = match mode {
            RateMode::Full => (set, set + reset),
            RateMode::SetOnly => (set, set),
            RateMode::ResetOnly => (0.0, reset),
            RateMode::OneSided if v > 0.0 => (set, set),
            RateMode::OneSided if v < 0.0 => (0.0, reset),
            RateMode::OneSided => (0.0, 0.0),
        };
        Relaxation { drive, decay }
    }
}

/// Which terms of the dynamic-balance state equation are retained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RateMode {
    /// `(1-x)/τ_S - x/τ_R`.
    #[default]
    Full,
    /// `(1-x)/τ_S` only.
    SetOnly,
    /// `-x/τ_R` only.
    ResetOnly,
    /// SET term for `V > 0`, RESET term for `V < 0`, and a hold at `V = 0`:
    /// the approximation the synthesis works under.
    OneSided,
}

/// Affine form of the state equation at a fixed voltage:
/// `dx/dt = drive - decay * x`, with `decay >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Relaxation {
    pub drive: f64,
    pub decay: f64,
}

impl Relaxation {
    pub const FROZEN: Relaxation = Relaxation {
        drive: 0.0,
        decay: 0.0,
    };

    /// State after holding the voltage for `t` seconds.
    pub fn state_after(&self, x0: f64, t: f64) -> f64 {
        if self.decay == 0.0 {
            x0 + self.drive * t
        } else {
            let eq = self.drive / self.decay;
            eq + (x0 - eq) * (-self.decay * t).exp()
        }
    }

    /// `∫_0^t x(s) ds` along the same trajectory.
    pub fn state_integral(&self, x0: f64, t: f64) -> f64 {
        if self.decay == 0.0 {
            x0 * t + 0.5 * self.drive * t * t
        } else {
            let eq = self.drive / self.decay;
            eq * t - (x0 - eq) * (-self.decay * t).exp_m1() / self.decay
        }
    }
}

/// A device model ready for evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    Vteam(VteamParams),
    Balance {
        params: BalanceParams,
        mode: RateMode,
    },
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Vteam(_) => "vteam",
            Model::Balance { .. } => "balance",
        }
    }

    /// Closed admissible state interval.
    pub fn state_range(&self) -> (f64, f64) {
        match self {
            Model::Vteam(p) => (p.w_on, p.w_off),
            Model::Balance { .. } => (0.0, 1.0),
        }
    }

    pub fn check_state(&self, x: f64) -> Result<()> {
        let (lo, hi) = self.state_range();
        check_in("x", x, lo, hi)
    }

    pub fn memductance(&self, x: f64) -> Result<f64> {
        self.check_state(x)?;
        Ok(self.conductance(x))
    }

    pub fn state_rate(&self, x: f64, v: f64) -> Result<f64> {
        match self {
            Model::Vteam(p) => p.state_rate(x, v),
            Model::Balance { params, mode } => params.state_rate(x, v, *mode),
        }
    }

    pub(crate) fn conductance(&self, x: f64) -> f64 {
        match self {
            Model::Vteam(p) => p.g(x),
            Model::Balance { params, .. } => params.g(x),
        }
    }

    pub(crate) fn rate(&self, x: f64, v: f64) -> f64 {
        match self {
            Model::Vteam(p) => p.rate(x, v),
            Model::Balance { params, mode } => params.rate(x, v, *mode),
        }
    }

    /// `G_M(x) = offset + slope * x`.
    pub(crate) fn conductance_line(&self) -> (f64, f64) {
        let g0 = self.conductance(0.0);
        let g1 = self.conductance(1.0);
        (g0, g1 - g0)
    }

    pub fn relaxation(&self, v: f64) -> Relaxation {
        match self {
            Model::Vteam(p) => p.relaxation(v),
            Model::Balance { params, mode } => params.relaxation(v, *mode),
        }
    }

    /// Same device under the approximation used for protocol synthesis.
    /// VTEAM is returned unchanged.
    pub fn for_synthesis(&self) -> Model {
        match *self {
            Model::Balance { params, .. } => Model::Balance {
                params,
                mode: RateMode::OneSided,
            },
            m => m,
        }
    }

    pub fn with_mode(&self, mode: RateMode) -> Model {
        match *self {
            Model::Balance { params, .. } => Model::Balance { params, mode },
            m => m,
        }
    }
}

impl From<VteamParams> for Model {
    fn from(p: VteamParams) -> Self {
        Model::Vteam(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vteam_device() -> VteamParams {
        VteamParams::builder().build().unwrap()
    }

    fn balance_device() -> BalanceParams {
        BalanceParams::new(148.0, 148.0, 5.0, -5.0, 1e-6, 1e-3).unwrap()
    }

    #[test]
    fn vteam_memductance_endpoints_and_interior() {
        let p = vteam_device();
        assert_eq!(p.memductance(0.0).unwrap(), 1e-3);
        assert_eq!(p.memductance(1.0).unwrap(), 1e-5);
        assert!((p.memductance(0.1).unwrap() - 9.01e-4).abs() < 1e-15);
        assert!(matches!(p.memductance(1.2), Err(Error::Domain { .. })));
        assert!(p.memductance(f64::NAN).is_err());
    }

    #[test]
    fn vteam_rate_regions() {
        let p = vteam_device();
        assert_eq!(p.state_rate(0.3, 0.5).unwrap(), 0.0);
        assert!((p.state_rate(0.0, 2.0).unwrap() - 1e5).abs() < 1e-9);
        assert_eq!(p.state_rate(1.0, 3.0).unwrap(), 0.0);
        assert_eq!(p.state_rate(0.0, -3.0).unwrap(), 0.0);
        assert!(p.state_rate(0.5, -3.0).unwrap() < 0.0);
        assert!(p.state_rate(-0.1, 2.0).is_err());
    }

    #[test]
    fn vteam_rejects_bad_signs() {
        assert!(VteamParams::builder().k_on(1.0).build().is_err());
        assert!(VteamParams::builder().v_off(-1.0).build().is_err());
        assert!(VteamParams::builder().w_on(1.0).build().is_err());
        assert!(VteamParams::builder().g_min(2e-3).build().is_err());
        assert!(VteamParams::builder().alpha_on(0.0).build().is_err());
    }

    #[test]
    fn balance_memductance_and_rates() {
        let p = balance_device();
        assert_eq!(p.memductance(0.0).unwrap(), 1e-6);
        assert_eq!(p.memductance(1.0).unwrap(), 1e-3);
        assert!((p.memductance(0.1).unwrap() - 1.009e-4).abs() < 1e-18);
        let r = p.state_rate(0.1, 0.5, RateMode::SetOnly).unwrap();
        assert!((r - 0.9 / (148.0 * (-2.5f64).exp())).abs() < 1e-15);
        assert!((r - 0.07408).abs() < 1e-5);
        assert_eq!(p.state_rate(1.0, 0.5, RateMode::SetOnly).unwrap(), 0.0);
        // balance point: (1-x) τ_R = x τ_S
        let v = 0.2;
        let x = p.tau_reset(v) / (p.tau_reset(v) + p.tau_set(v));
        assert!(p.state_rate(x, v, RateMode::Full).unwrap().abs() < 1e-15);
        assert_eq!(p.state_rate(0.4, 0.0, RateMode::OneSided).unwrap(), 0.0);
    }

    #[test]
    fn balance_rejects_bad_signs() {
        assert!(BalanceParams::new(148.0, 148.0, -5.0, -5.0, 1e-6, 1e-3).is_err());
        assert!(BalanceParams::new(148.0, 148.0, 5.0, 5.0, 1e-6, 1e-3).is_err());
        assert!(BalanceParams::new(0.0, 148.0, 5.0, -5.0, 1e-6, 1e-3).is_err());
    }

    #[test]
    fn relaxation_matches_rate() {
        let models = [
            Model::Vteam(vteam_device()),
            Model::Balance {
                params: balance_device(),
                mode: RateMode::Full,
            },
            Model::Balance {
                params: balance_device(),
                mode: RateMode::OneSided,
            },
        ];
        for m in models {
            for v in [-3.0, -0.4, 0.0, 0.3, 0.5, 2.5] {
                let r = m.relaxation(v);
                for x in [0.05, 0.4, 0.95] {
                    let direct = m.rate(x, v);
                    assert!((r.drive - r.decay * x - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
                }
            }
        }
    }

    #[test]
    fn relaxation_integral_is_consistent() {
        let r = Relaxation {
            drive: 3.0,
            decay: 2.0,
        };
        let t = 0.7;
        let n = 20_000;
        let h = t / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let s = (i as f64 + 0.5) * h;
            acc += r.state_after(0.1, s) * h;
        }
        assert!((acc - r.state_integral(0.1, t)).abs() < 1e-8);
    }

    proptest! {
        #[test]
        fn vteam_rate_sign_follows_voltage_region(w in 0.0f64..1.0, v in -6.0f64..6.0) {
            let p = vteam_device();
            let r = p.state_rate(w, v).unwrap();
            if v > 1.0 { prop_assert!(r >= 0.0) }
            else if v < -1.0 { prop_assert!(r <= 0.0) }
            else { prop_assert_eq!(r, 0.0) }
        }

        #[test]
        fn full_rate_is_sum_of_one_sided_terms(x in 0.0f64..=1.0, v in -2.0f64..2.0) {
            let p = balance_device();
            let full = p.state_rate(x, v, RateMode::Full).unwrap();
            let set = p.state_rate(x, v, RateMode::SetOnly).unwrap();
            let reset = p.state_rate(x, v, RateMode::ResetOnly).unwrap();
            prop_assert_eq!(full, set + reset);
        }

        #[test]
        fn memductance_is_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(vteam_device().memductance(lo).unwrap() >= vteam_device().memductance(hi).unwrap());
            prop_assert!(balance_device().memductance(lo).unwrap() <= balance_device().memductance(hi).unwrap());
        }
    }
}
