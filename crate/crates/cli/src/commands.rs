use std::path::Path;

use anyhow::{Context, Result};
use memswitch_core::closed_form::{constant_pulse, constant_voltage_for_time};
use memswitch_core::prelude::*;
use memswitch_core::simulate::SegmentMark;
use memswitch_core::synthesis::{min_duration, synthesize};
use memswitch_core::waveform::{constant_protocol, profile_to_protocol_with};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::value::RawValue;

use crate::config::Run;
use crate::io::{self, fmt, num, Report};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INFEASIBLE: u8 = 2;

fn task_meta(run: &Run) -> Vec<(&'static str, String)> {
    vec![
        ("model", run.model.name().into()),
        ("direction", run.spec.direction.as_str().into()),
        ("x_i", fmt(run.spec.x_i)),
        ("x_f", fmt(run.spec.x_f)),
        ("programming_time_s", fmt(run.programming_time)),
        ("v1_mag", fmt(run.bounds.v1_mag())),
        ("v2_mag", fmt(run.bounds.v2_mag())),
    ]
}

fn report_infeasible(requested: f64, min: f64) {
    eprintln!(
        "infeasible: programming time {} s is below the shortest switching time {} s",
        fmt(requested),
        fmt(min)
    );
}

pub fn synthesize_cmd(run: &Run, out_dir: Option<&Path>) -> Result<u8> {
    let report_path = run.output_path(out_dir, "report", "json");
    let s = match synthesize(
        &run.synthesis_model(),
        &run.spec,
        &run.bounds,
        run.programming_time,
        &run.synthesis,
    ) {
        Ok(s) => s,
        Err(Error::Infeasible {
            requested,
            min_duration,
        }) => {
            io::write_json(&report_path, &Report::infeasible(min_duration))?;
            report_infeasible(requested, min_duration);
            println!("report: {}", report_path.display());
            return Ok(EXIT_INFEASIBLE);
        }
        Err(e) => return Err(e).context("synthesis failed"),
    };
    for w in &s.report.warnings {
        eprintln!("warning: {w}");
    }
    let protocol = profile_to_protocol_with(&s.profile, run.segments, &run.synthesis.quad)?;
    let mut meta = task_meta(run);
    meta.push(("case", s.report.case.label().into()));
    meta.push(("lambda1_SV2", fmt(s.report.lambda1)));

    let protocol_path = run.output_path(out_dir, "protocol", "csv");
    let profile_path = run.output_path(out_dir, "profile", "csv");
    io::write_file(&protocol_path, &io::protocol_csv(&protocol, &meta)?)?;
    io::write_file(&profile_path, &io::profile_csv(&s.profile, &meta)?)?;
    io::write_json(&report_path, &Report::from_synthesis(&s.report))?;

    println!(
        "case {} | lambda1 {} SV^2 | T_c {} s | energy {} J | {} segment(s)",
        s.report.case,
        fmt(s.report.lambda1),
        fmt(s.report.tc),
        fmt(s.report.energy),
        protocol.segments.len()
    );
    for p in [&protocol_path, &profile_path, &report_path] {
        println!("wrote {}", p.display());
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SwitchRecord {
    t_s: Box<RawValue>,
    x: Box<RawValue>,
    from: SegmentSource,
    to: SegmentSource,
}

#[derive(Serialize)]
struct SimulationSummary {
    final_x: Box<RawValue>,
    target_x: Box<RawValue>,
    final_x_error: Box<RawValue>,
    #[serde(rename = "energy_J")]
    energy: Box<RawValue>,
    duration_s: Box<RawValue>,
    level_switches: Vec<SwitchRecord>,
}

fn switches(marks: &[SegmentMark]) -> Vec<SwitchRecord> {
    marks
        .windows(2)
        .filter(|w| w[0].source != w[1].source)
        .map(|w| SwitchRecord {
            t_s: num(w[1].t),
            x: num(w[1].x),
            from: w[0].source,
            to: w[1].source,
        })
        .collect()
}

pub fn simulate_cmd(
    run: &Run,
    protocol_path: &Path,
    mode: Option<RateMode>,
    out_dir: Option<&Path>,
) -> Result<u8> {
    let model = match (mode, run.model) {
        (Some(m), Model::Balance { .. }) => run.model.with_mode(m),
        (Some(_), Model::Vteam(_)) => {
            eprintln!("warning: --rate-mode has no effect on the VTEAM model");
            run.model
        }
        (None, m) => m,
    };
    let protocol = io::read_protocol(protocol_path, &run.bounds)?;
    let trace =
        simulate(&model, &protocol, run.spec.x_i, &run.solver).context("simulation failed")?;

    let summary = SimulationSummary {
        final_x: num(trace.final_state),
        target_x: num(run.spec.x_f),
        final_x_error: num((trace.final_state - run.spec.x_f).abs()),
        energy: num(trace.final_energy),
        duration_s: num(protocol.total_duration()),
        level_switches: switches(&trace.marks),
    };
    let trace_path = run.output_path(out_dir, "trace", "csv");
    let summary_path = run.output_path(out_dir, "summary", "json");
    let mut meta = task_meta(run);
    meta.push(("protocol", protocol_path.display().to_string()));
    io::write_file(&trace_path, &io::trace_csv(&trace, &meta)?)?;
    io::write_json(&summary_path, &summary)?;

    println!(
        "final x {} (target {}) | energy {} J",
        fmt(trace.final_state),
        fmt(run.spec.x_f),
        fmt(trace.final_energy)
    );
    for s in &summary.level_switches {
        println!(
            "level switch {} -> {} at t = {} s, x = {}",
            s.from.as_str(),
            s.to.as_str(),
            s.t_s,
            s.x
        );
    }
    for p in [&trace_path, &summary_path] {
        println!("wrote {}", p.display());
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Axis {
    #[value(name = "T")]
    T,
    #[value(name = "V0")]
    V0,
}

pub fn sweep_values(from: f64, to: f64, points: usize, log: bool) -> Result<Vec<f64>> {
    anyhow::ensure!(points >= 1, "--points must be at least 1");
    anyhow::ensure!(
        from.is_finite() && to.is_finite(),
        "sweep bounds must be finite"
    );
    if log {
        anyhow::ensure!(from > 0.0 && to > 0.0, "--log needs positive bounds");
    }
    if points == 1 {
        return Ok(vec![from]);
    }
    Ok((0..points)
        .map(|i| {
            let f = i as f64 / (points - 1) as f64;
            if i == 0 {
                from
            } else if i + 1 == points {
                to
            } else if log {
                (from.ln() + f * (to.ln() - from.ln())).exp()
            } else {
                from + f * (to - from)
            }
        })
        .collect())
}

fn status_of(e: &Error) -> &'static str {
    match e {
        Error::Infeasible { .. } => "infeasible",
        Error::InfeasibleAmplitude { .. } => "amplitude_out_of_range",
        _ => "error",
    }
}

/// Optimal columns: case, λ1, T_c, initial voltage, energy.
fn optimal_cells(run: &Run, t: f64) -> std::result::Result<(Synthesis, Vec<String>), Error> {
    let s = synthesize(
        &run.synthesis_model(),
        &run.spec,
        &run.bounds,
        t,
        &run.synthesis,
    )?;
    let v_start = s.profile.voltage_at(run.spec.x_i).unwrap_or(f64::NAN);
    let cells = vec![
        s.report.case.label().to_string(),
        fmt(s.report.lambda1),
        fmt(s.report.tc),
        fmt(v_start),
        fmt(s.report.energy),
    ];
    Ok((s, cells))
}

fn sweep_row_t(run: &Run, t: f64) -> Vec<String> {
    let model = run.synthesis_model();
    let mut row = vec![fmt(t)];
    let constant = constant_voltage_for_time(&model, &run.spec, t)
        .and_then(|v| constant_pulse(&model, &run.spec, v).map(|q| (v, q.energy)));
    match &constant {
        Ok((v, q)) => row.extend([fmt(*v), fmt(*q)]),
        Err(_) => row.extend([String::new(), String::new()]),
    }
    let optimal = optimal_cells(run, t);
    let status = match (&constant, &optimal) {
        (_, Err(e)) => status_of(e),
        (Err(e), _) => status_of(e),
        _ => "ok",
    };
    match &optimal {
        Ok((s, cells)) => {
            row.extend(cells.iter().cloned());
            let ratio = constant
                .as_ref()
                .map_or(f64::NAN, |(_, q)| q / s.report.energy);
            row.push(fmt(ratio));
        }
        Err(_) => row.extend(std::iter::repeat_n(String::new(), 6)),
    }
    row.push(status.into());
    row
}

fn sweep_row_v0(run: &Run, v0_mag: f64) -> Vec<String> {
    let model = run.synthesis_model();
    let v0 = run.spec.voltage_sign(&model) * v0_mag;
    let mut row = vec![fmt(v0)];
    let pulse = match constant_pulse(&model, &run.spec, v0) {
        Ok(p) => p,
        Err(e) => {
            row.extend(std::iter::repeat_n(String::new(), 8));
            row.push(status_of(&e).into());
            return row;
        }
    };
    row.extend([fmt(pulse.duration), fmt(pulse.energy)]);
    match optimal_cells(run, pulse.duration) {
        Ok((s, cells)) => {
            row.extend(cells);
            row.push(fmt(pulse.energy / s.report.energy));
            row.push("ok".into());
        }
        Err(e) => {
            row.extend(std::iter::repeat_n(String::new(), 6));
            row.push(status_of(&e).into());
        }
    }
    row
}

pub fn sweep_cmd(run: &Run, axis: Axis, values: &[f64], out_dir: Option<&Path>) -> Result<u8> {
    let rows: Vec<Vec<String>> = match axis {
        Axis::T => values.par_iter().map(|&t| sweep_row_t(run, t)).collect(),
        Axis::V0 => values.par_iter().map(|&v| sweep_row_v0(run, v)).collect(),
    };
    let optimal_cols = [
        "opt_case",
        "opt_lambda1_SV2",
        "opt_tc_s",
        "opt_v_start_V",
        "opt_energy_J",
        "energy_ratio",
    ];
    let mut header: Vec<&str> = match axis {
        Axis::T => vec!["T_s", "const_v_V", "const_energy_J"],
        Axis::V0 => vec!["const_v_V", "T_s", "const_energy_J"],
    };
    header.extend(optimal_cols);
    header.push("status");
    let mut meta = task_meta(run);
    meta.push((
        "min_T_s",
        min_duration(&run.synthesis_model(), &run.spec, &run.bounds)
            .map_or_else(|e| e.to_string(), fmt),
    ));
    let path = run.output_path(out_dir, "sweep", "csv");
    io::write_file(&path, &io::csv_text(&meta, &header, &rows)?)?;
    let ok = rows
        .iter()
        .filter(|r| r.last().is_some_and(|s| s == "ok"))
        .count();
    println!("{ok} of {} point(s) feasible", rows.len());
    println!("wrote {}", path.display());
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct CompareEntry {
    label: &'static str,
    /// First segment voltage.
    #[serde(rename = "voltage_V")]
    voltage: Box<RawValue>,
    #[serde(rename = "energy_J")]
    energy: Box<RawValue>,
    #[serde(rename = "predicted_energy_J")]
    predicted: Box<RawValue>,
    final_x: Box<RawValue>,
    final_x_error: Box<RawValue>,
    ratio: Box<RawValue>,
}

#[derive(Serialize)]
struct CompareReport {
    case: String,
    programming_time_s: Box<RawValue>,
    protocols: Vec<CompareEntry>,
    constant_over_optimal: Box<RawValue>,
    constant_over_optimal_predicted: Box<RawValue>,
}

pub fn compare_cmd(run: &Run, out_dir: Option<&Path>) -> Result<u8> {
    let syn_model = run.synthesis_model();
    let t = run.programming_time;
    let s = match synthesize(&syn_model, &run.spec, &run.bounds, t, &run.synthesis) {
        Ok(s) => s,
        Err(Error::Infeasible {
            requested,
            min_duration,
        }) => {
            report_infeasible(requested, min_duration);
            return Ok(EXIT_INFEASIBLE);
        }
        Err(e) => return Err(e).context("synthesis failed"),
    };
    let optimal = profile_to_protocol_with(&s.profile, run.segments, &run.synthesis.quad)?;
    let v0 = constant_voltage_for_time(&syn_model, &run.spec, t)?;
    let constant = constant_protocol(&syn_model, &run.spec, v0, t)?;
    let protocols = [optimal, constant];
    let simulated = compare(&run.model, &run.spec, &protocols, &run.solver)?;
    let predicted: Vec<f64> = protocols
        .iter()
        .map(|p| protocol_energy(&syn_model, p, run.spec.x_i).map(|e| e.total))
        .collect::<memswitch_core::Result<_>>()?;
    let entries = ["optimal", "constant"]
        .iter()
        .zip(&protocols)
        .zip(simulated.iter().zip(&predicted))
        .map(|((&label, p), (sim, &pred))| CompareEntry {
            label,
            voltage: num(p.segments[0].voltage),
            energy: num(sim.energy),
            predicted: num(pred),
            final_x: num(sim.final_state),
            final_x_error: num(sim.final_state_error),
            ratio: num(sim.ratio),
        })
        .collect();
    let report = CompareReport {
        case: s.report.case.label().into(),
        programming_time_s: num(t),
        protocols: entries,
        constant_over_optimal: num(simulated[1].ratio),
        constant_over_optimal_predicted: num(predicted[1] / predicted[0]),
    };
    let path = run.output_path(out_dir, "compare", "json");
    io::write_json(&path, &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    eprintln!("wrote {}", path.display());
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_grids() {
        assert_eq!(sweep_values(1.0, 2.0, 1, false).unwrap(), [1.0]);
        assert_eq!(sweep_values(1.0, 3.0, 3, false).unwrap(), [1.0, 2.0, 3.0]);
        let g = sweep_values(1.0, 100.0, 3, true).unwrap();
        assert!((g[1] - 10.0).abs() < 1e-12);
        assert_eq!(g[2], 100.0);
        assert!(sweep_values(-1.0, 1.0, 3, true).is_err());
        assert!(sweep_values(1.0, 2.0, 0, false).is_err());
    }
}
