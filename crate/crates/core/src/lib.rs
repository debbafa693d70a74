//! Energy-optimal programming protocols for first-order memristive devices.
//!
//! Two device descriptions are supported: the VTEAM threshold model and the
//! dynamic-balance model. For a requested resistance transition
//! `x_i -> x_f` within a programming time `T` and a voltage window
//! `[V1, V2]`, the crate
//!
//! - evaluates closed-form switching energy and time for square pulses
//!   ([`closed_form`]),
//! - solves the constrained Lagrange-multiplier problem for the optimal
//!   state-dependent voltage `V̂(x)` ([`synthesis`]),
//! - converts the state-domain profile into a time-domain pulse train and
//!   accounts its Joule losses ([`waveform`]),
//! - validates any pulse train against the full device ODE ([`simulate`]).
//!
//! All quantities are SI: seconds, volts, siemens, joules.
//!
//! ```
//! use memswitch_core::prelude::*;
//!
//! let device = VteamParams::builder().alpha_off(1.0).build().unwrap();
//! let task = TransitionSpec::new(Direction::Reset, 0.1, 0.9).unwrap();
//! let bounds = VoltageBounds::new(1.0, 5.0).unwrap();
//! let plan = vteam::synthesize(&device, &task, &bounds, 8e-6, &SynthesisConfig::default()).unwrap();
//! assert_eq!(plan.report.case, RegimeCase::Case3LowAlpha);
//! assert!((plan.report.lambda1 - 2.168e-3).abs() < 0.01 * 2.168e-3);
//! ```

// Negated comparisons double as NaN guards.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closed_form;
pub mod device;
pub mod error;
pub mod numerics;
pub mod simulate;
pub mod synthesis;
pub mod waveform;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::closed_form::{Direction, PulseResult, TransitionSpec};
    pub use crate::device::{BalanceParams, Model, RateMode, VteamParams};
    pub use crate::error::{Error, Result};
    pub use crate::simulate::{compare, simulate, SimulationTrace, SolverConfig};
    pub use crate::synthesis::{
        balance, vteam, RegimeCase, StateProfile, Synthesis, SynthesisConfig, SynthesisReport,
        VoltageBounds,
    };
    pub use crate::waveform::{
        merge_segments, profile_to_protocol, protocol_energy, EnergyBreakdown, Protocol, Segment,
        SegmentSource,
    };
}
