//! Time-domain pulse trains and their Joule losses.
//!
//! A [`StateProfile`] gives the voltage as a function of state. Along the
//! trajectory `dt = dx / f(x, V̂(x))`, so slicing the state range and
//! integrating `1/f` over each slice yields a staircase of square pulses.

use serde::{Deserialize, Serialize};

use crate::closed_form::{constant_pulse, TransitionSpec};
use crate::device::Model;
use crate::error::{Error, Result};
use crate::numerics::{integrate_1d, QuadConfig};
use crate::synthesis::{level_voltage, RegimeCase, StateProfile};

/// Where a segment's voltage comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentSource {
    /// Largest admissible magnitude `V2`.
    UpperBound,
    /// Smallest admissible magnitude `V1`.
    LowerBound,
    /// State-dependent interior optimum.
    StateDependent,
    /// Unconstrained energy optimum of a square pulse.
    EnergyOptimum,
    /// Fixed amplitude chosen by the caller.
    Constant,
    /// Zero volts.
    Rest,
}

impl SegmentSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            SegmentSource::UpperBound => "upper_bound",
            SegmentSource::LowerBound => "lower_bound",
            SegmentSource::StateDependent => "state_dependent",
            SegmentSource::EnergyOptimum => "energy_optimum",
            SegmentSource::Constant => "constant",
            SegmentSource::Rest => "rest",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub duration: f64,
    pub voltage: f64,
    pub source: SegmentSource,
}

/// Piecewise-constant voltage starting at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Protocol {
    pub segments: Vec<Segment>,
    /// Regime of the synthesis that produced it, if any.
    pub case: Option<RegimeCase>,
}

impl Protocol {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        for s in &segments {
            if !(s.duration.is_finite() && s.duration > 0.0) {
                return Err(Error::invalid(
                    "duration",
                    "segment durations must be positive and finite",
                ));
            }
            if !s.voltage.is_finite() {
                return Err(Error::invalid("voltage", "segment voltages must be finite"));
            }
        }
        Ok(Protocol {
            segments,
            case: None,
        })
    }

    pub fn with_case(mut self, case: RegimeCase) -> Self {
        self.case = Some(case);
        self
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Time spent at a nonzero voltage.
    pub fn active_duration(&self) -> f64 {
        self.segments
            .iter()
            .filter(|s| s.voltage != 0.0)
            .map(|s| s.duration)
            .sum()
    }

    /// Start time of every segment.
    pub fn start_times(&self) -> Vec<f64> {
        let mut t = 0.0;
        self.segments
            .iter()
            .map(|s| {
                let start = t;
                t += s.duration;
                start
            })
            .collect()
    }

    /// Voltage at time `t` (right-continuous); zero outside the protocol.
    pub fn voltage_at(&self, t: f64) -> f64 {
        let mut start = 0.0;
        for s in &self.segments {
            if t >= start && t < start + s.duration {
                return s.voltage;
            }
            start += s.duration;
        }
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub total: f64,
    pub per_segment: Vec<f64>,
    pub final_state: f64,
}

/// Staircase approximation of `profile` with `segments` equal-width state
/// slices. Slices are additionally split where the profile changes law, so
/// level switches land on segment boundaries. Adjacent equal voltages are
/// merged and a rest segment fills the remaining budget.
pub fn profile_to_protocol(profile: &StateProfile, segments: usize) -> Result<Protocol> {
    profile_to_protocol_with(profile, segments, &QuadConfig::default())
}

pub fn profile_to_protocol_with(
    profile: &StateProfile,
    segments: usize,
    quad: &QuadConfig,
) -> Result<Protocol> {
    if segments == 0 {
        return Err(Error::invalid("segments", "need at least one slice"));
    }
    let model = &profile.model;
    let (a, b) = (profile.x_i, profile.x_f);
    let mut out = Vec::new();
    for piece in &profile.pieces {
        let (lo, hi) = (piece.from, piece.to);
        let first = ((lo - a) / (b - a) * segments as f64).floor() as usize;
        let mut edges = vec![lo];
        for k in first + 1..segments {
            let x = a + (b - a) * k as f64 / segments as f64;
            if (x - lo) * (hi - lo) <= 0.0 {
                continue;
            }
            if (hi - x) * (hi - lo) <= 0.0 {
                break;
            }
            edges.push(x);
        }
        edges.push(hi);
        for w in edges.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let voltage = level_voltage(model, profile.direction, piece.level, mid);
            let duration = integrate_1d(
                |x| {
                    1.0 / model
                        .rate(x, level_voltage(model, profile.direction, piece.level, x))
                        .abs()
                },
                w[0],
                w[1],
                quad,
            )?
            .abs();
            if !duration.is_finite() {
                return Err(Error::Singular { x: mid });
            }
            if duration > 0.0 {
                out.push(Segment {
                    duration,
                    voltage,
                    source: piece.source,
                });
            }
        }
    }
    let active: f64 = out.iter().map(|s| s.duration).sum();
    let rest = profile.programming_time - active;
    if rest > 1e-12 * profile.programming_time {
        out.push(Segment {
            duration: rest,
            voltage: 0.0,
            source: SegmentSource::Rest,
        });
    }
    Ok(merge_segments(
        &Protocol::new(out)?.with_case(profile.case),
        0.0,
    ))
}

/// Merges runs of adjacent segments whose voltages stay within `tol_volts`
/// of the run's first segment. The run keeps that first voltage and source.
pub fn merge_segments(protocol: &Protocol, tol_volts: f64) -> Protocol {
    let mut out: Vec<Segment> = Vec::with_capacity(protocol.segments.len());
    for s in &protocol.segments {
        match out.last_mut() {
            Some(last) if (last.voltage - s.voltage).abs() <= tol_volts => {
                last.duration += s.duration
            }
            _ => out.push(*s),
        }
    }
    Protocol {
        segments: out,
        case: protocol.case,
    }
}

/// Square pulse of height `v0` that completes `spec`, followed by rest up
/// to `total` seconds (no rest if the pulse alone is longer).
pub fn constant_protocol(
    model: &Model,
    spec: &TransitionSpec,
    v0: f64,
    total: f64,
) -> Result<Protocol> {
    let pulse = constant_pulse(model, spec, v0)?;
    let mut segments = vec![Segment {
        duration: pulse.duration,
        voltage: v0,
        source: SegmentSource::Constant,
    }];
    let rest = total - pulse.duration;
    if rest > 1e-12 * total {
        segments.push(Segment {
            duration: rest,
            voltage: 0.0,
            source: SegmentSource::Rest,
        });
    }
    Protocol::new(segments)
}

/// Joule losses `∫ G(x) V^2 dt` of `protocol` starting from `x0`, using the
/// exact exponential state solution within each segment.
pub fn protocol_energy(model: &Model, protocol: &Protocol, x0: f64) -> Result<EnergyBreakdown> {
    model.check_state(x0)?;
    let (g0, g1) = model.conductance_line();
    let mut x = x0;
    let mut per_segment = Vec::with_capacity(protocol.segments.len());
    for s in &protocol.segments {
        let relax = model.relaxation(s.voltage);
        let e =
            s.voltage * s.voltage * (g0 * s.duration + g1 * relax.state_integral(x, s.duration));
        per_segment.push(e.max(0.0));
        x = relax.state_after(x, s.duration);
    }
    Ok(EnergyBreakdown {
        total: per_segment.iter().sum(),
        per_segment,
        final_state: x,
    })
}
