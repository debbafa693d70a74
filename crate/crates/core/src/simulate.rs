//! Direct integration of the device ODE under a pulse train.
//!
//! Independent of the synthesis math: the state is advanced with the full
//! rate of the given [`Model`], segment by segment, and Joule losses are
//! accumulated with the trapezoid rule.

use serde::Serialize;

use crate::closed_form::TransitionSpec;
use crate::device::Model;
use crate::error::{Error, Result};
use crate::numerics::{integrate_ode, OdeConfig, StepControl};
use crate::waveform::{Protocol, SegmentSource};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub control: StepControl,
    /// Upper bound on trace samples kept per segment (endpoints included).
    pub samples_per_segment: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            control: StepControl::Fixed { steps: 10_000 },
            samples_per_segment: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceSample {
    pub t: f64,
    pub v: f64,
    pub x: f64,
    pub i: f64,
    pub p: f64,
    pub q: f64,
}

/// State and time at the start of a segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentMark {
    pub t: f64,
    pub x: f64,
    pub voltage: f64,
    pub source: SegmentSource,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationTrace {
    pub samples: Vec<TraceSample>,
    pub marks: Vec<SegmentMark>,
    pub final_state: f64,
    pub final_energy: f64,
}

impl SimulationTrace {
    /// First segment start where the voltage source changes from `from` to
    /// `to`.
    pub fn level_switch(&self, from: SegmentSource, to: SegmentSource) -> Option<SegmentMark> {
        self.marks
            .windows(2)
            .find(|w| w[0].source == from && w[1].source == to)
            .map(|w| w[1])
    }
}

fn keep_every(points: usize, budget: usize) -> usize {
    if budget < 2 {
        points.max(1)
    } else {
        points.div_ceil(budget - 1).max(1)
    }
}

pub fn simulate(
    model: &Model,
    protocol: &Protocol,
    x0: f64,
    cfg: &SolverConfig,
) -> Result<SimulationTrace> {
    model.check_state(x0)?;
    if cfg.samples_per_segment < 2 {
        return Err(Error::invalid(
            "samples_per_segment",
            "need at least two samples",
        ));
    }
    let ode = OdeConfig {
        control: cfg.control,
        clamp: model.state_range(),
    };
    let power = |x: f64, v: f64| model.conductance(x) * v * v;

    let mut samples = Vec::new();
    let mut marks = Vec::with_capacity(protocol.segments.len());
    let (mut t, mut x, mut q) = (0.0, x0, 0.0);
    let n = protocol.segments.len();
    for (k, seg) in protocol.segments.iter().enumerate() {
        let v = seg.voltage;
        marks.push(SegmentMark {
            t,
            x,
            voltage: v,
            source: seg.source,
        });
        let traj = integrate_ode(|_, x| model.rate(x, v), x, (t, t + seg.duration), &ode)?;
        let stride = keep_every(traj.t.len() - 1, cfg.samples_per_segment);
        let last = traj.t.len() - 1;
        let mut q_seg = q;
        for j in 0..=last {
            if j > 0 {
                let dt = traj.t[j] - traj.t[j - 1];
                q_seg += 0.5 * dt * (power(traj.x[j - 1], v) + power(traj.x[j], v));
            }
            // The closing sample belongs to the next segment unless this is
            // the last one.
            let closing = j == last && k + 1 < n;
            if !closing && (j % stride == 0 || j == last) {
                let g = model.conductance(traj.x[j]);
                samples.push(TraceSample {
                    t: traj.t[j],
                    v,
                    x: traj.x[j],
                    i: g * v,
                    p: g * v * v,
                    q: q_seg,
                });
            }
        }
        let (t_end, x_end) = traj.last().unwrap_or((t + seg.duration, x));
        t = t_end;
        x = x_end;
        q = q_seg;
    }
    if samples.is_empty() {
        let g = model.conductance(x0);
        samples.push(TraceSample {
            t: 0.0,
            v: 0.0,
            x: x0,
            i: 0.0 * g,
            p: 0.0,
            q: 0.0,
        });
    }
    Ok(SimulationTrace {
        samples,
        marks,
        final_state: x,
        final_energy: q,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonEntry {
    pub energy: f64,
    pub final_state: f64,
    pub final_state_error: f64,
    /// Energy relative to the first protocol.
    pub ratio: f64,
}

/// Simulates each protocol from `spec.x_i` and reports energies relative to
/// the first one.
pub fn compare(
    model: &Model,
    spec: &TransitionSpec,
    protocols: &[Protocol],
    cfg: &SolverConfig,
) -> Result<Vec<ComparisonEntry>> {
    let mut out = Vec::with_capacity(protocols.len());
    for p in protocols {
        let trace = simulate(model, p, spec.x_i, cfg)?;
        out.push((trace.final_energy, trace.final_state));
    }
    let base = out.first().map_or(0.0, |e| e.0);
    Ok(out
        .into_iter()
        .map(|(energy, final_state)| ComparisonEntry {
            energy,
            final_state,
            final_state_error: (final_state - spec.x_f).abs(),
            ratio: energy / base,
        })
        .collect())
}
