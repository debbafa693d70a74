//! Artifact formats. Floats are written with 17 significant digits so
//! outputs are byte-identical across runs and round-trip exactly.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use memswitch_core::prelude::*;
use memswitch_core::simulate::SimulationTrace;
use serde::Serialize;
use serde_json::value::RawValue;

pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON number with the fixed float format; `null` when not finite.
pub fn num(x: f64) -> Box<RawValue> {
    let text = if x.is_finite() { fmt(x) } else { "null".into() };
    RawValue::from_string(text).expect("formatted float is valid JSON")
}

pub fn opt_num(x: Option<f64>) -> Box<RawValue> {
    x.map_or_else(
        || RawValue::from_string("null".into()).expect("valid JSON"),
        num,
    )
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// CSV text with `#`-prefixed metadata lines before the header.
pub fn csv_text(meta: &[(&str, String)], header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for (k, v) in meta {
        out.extend_from_slice(format!("# {k}: {v}\n").as_bytes());
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(w.into_inner()?)
}

#[derive(Serialize)]
pub struct Report {
    pub case: String,
    #[serde(rename = "lambda1_SV2")]
    pub lambda1: Box<RawValue>,
    pub tc_s: Box<RawValue>,
    #[serde(rename = "energy_J")]
    pub energy: Box<RawValue>,
    pub feasible: bool,
    #[serde(rename = "min_T_s")]
    pub min_duration: Box<RawValue>,
}

impl Report {
    pub fn from_synthesis(r: &SynthesisReport) -> Self {
        Report {
            case: r.case.label().into(),
            lambda1: num(r.lambda1),
            tc_s: num(r.tc),
            energy: num(r.energy),
            feasible: r.feasible,
            min_duration: num(r.min_duration),
        }
    }

    pub fn infeasible(min_duration: f64) -> Self {
        Report {
            case: "Infeasible".into(),
            lambda1: opt_num(None),
            tc_s: opt_num(None),
            energy: opt_num(None),
            feasible: false,
            min_duration: num(min_duration),
        }
    }
}

pub fn protocol_csv(protocol: &Protocol, meta: &[(&str, String)]) -> Result<Vec<u8>> {
    let rows: Vec<Vec<String>> = protocol
        .segments
        .iter()
        .map(|s| vec![fmt(s.duration), fmt(s.voltage)])
        .collect();
    csv_text(meta, &["duration_s", "voltage_V"], &rows)
}

/// Reads a protocol CSV. Segment provenance is not stored in the file, so
/// it is inferred from the voltage bounds: zero is rest, `±V2` and `±V1`
/// are the bounds, anything else is a state-dependent level.
pub fn read_protocol(path: &Path, bounds: &VoltageBounds) -> Result<Protocol> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["duration_s", "voltage_V"] {
        bail!(
            "{}: expected header `duration_s,voltage_V`, found `{}`",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        );
    }
    let mut segments = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: row {}", path.display(), i + 1))?;
        let parse = |j: usize| -> Result<f64> {
            rec[j].parse::<f64>().with_context(|| {
                format!(
                    "{}: row {}: bad number `{}`",
                    path.display(),
                    i + 1,
                    &rec[j]
                )
            })
        };
        let (duration, voltage) = (parse(0)?, parse(1)?);
        let source = if voltage == 0.0 {
            SegmentSource::Rest
        } else if voltage.abs() == bounds.v2_mag() {
            SegmentSource::UpperBound
        } else if voltage.abs() == bounds.v1_mag() {
            SegmentSource::LowerBound
        } else {
            SegmentSource::StateDependent
        };
        segments.push(Segment {
            duration,
            voltage,
            source,
        });
    }
    if segments.is_empty() {
        bail!("{}: protocol has no segments", path.display());
    }
    Ok(Protocol::new(segments)?)
}

pub fn profile_csv(profile: &StateProfile, meta: &[(&str, String)]) -> Result<Vec<u8>> {
    let rows: Vec<Vec<String>> = profile
        .samples
        .iter()
        .map(|&(x, v)| vec![fmt(x), fmt(v)])
        .collect();
    csv_text(meta, &["x", "v_V"], &rows)
}

pub fn trace_csv(trace: &SimulationTrace, meta: &[(&str, String)]) -> Result<Vec<u8>> {
    let rows: Vec<Vec<String>> = trace
        .samples
        .iter()
        .map(|s| vec![fmt(s.t), fmt(s.v), fmt(s.x), fmt(s.i), fmt(s.p), fmt(s.q)])
        .collect();
    csv_text(meta, &["t_s", "v_V", "x", "i_A", "p_W", "q_J"], &rows)
}
