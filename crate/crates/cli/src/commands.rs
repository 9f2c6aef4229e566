use std::path::{Path, PathBuf};

use adiabatic_search::bounds::{check_regime, default_width_threshold, envelope, GapEnvelope};
use adiabatic_search::evolution::evolve;
use adiabatic_search::evolution::fidelity;
use adiabatic_search::hamiltonian::dhds_spectral_norm;
use adiabatic_search::instance::ProblemInstance;
use adiabatic_search::schedule::{
    global_schedule_with_norm, local_schedule_with_norm, Schedule, ScheduleKind, DEFAULT_NODES,
};
use adiabatic_search::spectrum::{
    lowest_eigenvalues, min_gap, probe_candidate, GapFunction, MinGap, SolverConfig,
};
use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::ExperimentConfig;
use crate::output::{eps_tag, line_chart, write_csv, write_json, write_svg, Series};

/// A run finished and wrote its outputs but a checked property failed.
#[derive(Debug, Error)]
#[error("{message}")]
pub struct InvariantViolation {
    pub message: String,
    pub details: Vec<String>,
}

fn prepare(cfg: &ExperimentConfig) -> Result<ProblemInstance> {
    std::fs::create_dir_all(&cfg.out)
        .with_context(|| format!("creating output directory {}", cfg.out.display()))?;
    Ok(cfg.instance.build()?)
}

fn measured_gap(inst: &ProblemInstance, cfg: &ExperimentConfig) -> Result<MinGap> {
    Ok(min_gap(
        inst,
        cfg.mingap.grid_points,
        cfg.mingap.refine_tol,
    )?)
}

pub fn cmd_spectrum(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let inst = prepare(cfg)?;
    let k = cfg.spectrum.k.min(inst.dim());
    let grid = cfg.s_grid();
    let solver = SolverConfig::default();
    let rows: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&s| {
            let sample = lowest_eigenvalues(&inst, s, k.max(2), &solver)?;
            let mut row = vec![s];
            row.extend_from_slice(&sample.eigenvalues[..k]);
            row.push(sample.gap());
            Ok(row)
        })
        .collect::<Result<_>>()?;

    let mut header = vec!["s".to_string()];
    header.extend((0..k).map(|i| format!("lambda_{i}")));
    header.push("gap".into());
    let csv_path = cfg.out.join("spectrum.csv");
    write_csv(&csv_path, None, &header, &rows)?;

    let columns: Vec<Vec<f64>> = (0..k)
        .map(|i| rows.iter().map(|r| r[i + 1]).collect())
        .collect();
    let series: Vec<Series<'_>> = columns
        .iter()
        .enumerate()
        .map(|(i, c)| Series {
            label: format!("lambda_{i}"),
            x: &grid,
            y: c,
        })
        .collect();
    let svg_path = cfg.out.join("spectrum.svg");
    write_svg(
        &svg_path,
        &line_chart("Lowest eigenvalues of H(s)", "s", "eigenvalue", &series),
    )?;
    Ok(vec![csv_path, svg_path])
}

#[derive(Debug, Serialize)]
struct EnvelopeSummary {
    m: f64,
    g_min: f64,
    a: f64,
    b: f64,
    #[serde(rename = "T_closed_form")]
    t_closed_form: f64,
    #[serde(rename = "T_integral")]
    t_integral: f64,
}

#[derive(Debug, Serialize)]
struct SoundnessFinding {
    s: f64,
    envelope: f64,
    exact_gap: f64,
}

fn regime_envelope(
    inst: &ProblemInstance,
    cfg: &ExperimentConfig,
    g_min: f64,
) -> Result<GapEnvelope> {
    let threshold = cfg
        .envelope
        .width_threshold
        .unwrap_or_else(|| default_width_threshold(inst));
    check_regime(inst, threshold)?;
    Ok(envelope(inst, g_min)?)
}

pub fn cmd_envelope(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let inst = prepare(cfg)?;
    let g_min = match cfg.envelope.g_min {
        Some(g) => g,
        None => measured_gap(&inst, cfg)?.g_min,
    };
    let env = regime_envelope(&inst, cfg, g_min)?;
    let runtime = env.runtime(dhds_spectral_norm(&inst).value)?;

    let last = (cfg.envelope.grid_points - 1) as f64;
    let mut grid: Vec<f64> = (0..cfg.envelope.grid_points)
        .map(|j| j as f64 / last)
        .collect();
    grid.extend([env.a, env.b]);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let gap = GapFunction::new(&inst);
    let rows: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&s| Ok(vec![s, env.eval(s), gap.eval(s)?]))
        .collect::<Result<_>>()?;

    let csv_path = cfg.out.join("envelope.csv");
    let header = ["s", "envelope", "exact_gap"].map(String::from);
    write_csv(&csv_path, None, &header, &rows)?;
    let json_path = cfg.out.join("envelope.json");
    write_json(
        &json_path,
        &EnvelopeSummary {
            m: env.m,
            g_min: env.g_min,
            a: env.a,
            b: env.b,
            t_closed_form: runtime.closed_form,
            t_integral: runtime.integral,
        },
    )?;
    let env_col: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let gap_col: Vec<f64> = rows.iter().map(|r| r[2]).collect();
    let svg_path = cfg.out.join("envelope.svg");
    write_svg(
        &svg_path,
        &line_chart(
            "Spectral gap and straight-line envelope",
            "s",
            "gap",
            &[
                Series {
                    label: "exact gap".into(),
                    x: &grid,
                    y: &gap_col,
                },
                Series {
                    label: "envelope".into(),
                    x: &grid,
                    y: &env_col,
                },
            ],
        ),
    )?;

    let findings: Vec<SoundnessFinding> = rows
        .iter()
        .filter(|r| r[2] < r[1] - 1e-9)
        .map(|r| SoundnessFinding {
            s: r[0],
            envelope: r[1],
            exact_gap: r[2],
        })
        .collect();
    let findings_path = cfg.out.join("envelope_findings.json");
    write_json(&findings_path, &findings)?;
    let written = vec![csv_path, json_path, svg_path, findings_path];
    if !findings.is_empty() {
        return Err(InvariantViolation {
            message: format!(
                "envelope exceeds the exact gap at {} of {} sampled points",
                findings.len(),
                rows.len()
            ),
            details: findings
                .iter()
                .map(|f| {
                    format!(
                        "s={} envelope={} exact_gap={}",
                        f.s, f.envelope, f.exact_gap
                    )
                })
                .collect(),
        }
        .into());
    }
    Ok(written)
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRow {
    pub kind: ScheduleKind,
    pub epsilon: f64,
    #[serde(rename = "T")]
    pub total_time: f64,
    pub fidelity: f64,
}

fn build_schedule(
    kind: ScheduleKind,
    eps: f64,
    d_norm: f64,
    g_min: f64,
    gap: &GapFunction<'_>,
    env: Option<&GapEnvelope>,
    nodes: usize,
) -> Result<Schedule> {
    Ok(match kind {
        ScheduleKind::Global => global_schedule_with_norm(d_norm, eps, g_min, DEFAULT_NODES)?,
        ScheduleKind::LocalExact => local_schedule_with_norm(gap, d_norm, eps, nodes)?,
        ScheduleKind::LocalEnvelope => local_schedule_with_norm(
            env.expect("envelope built for local-envelope runs"),
            d_norm,
            eps,
            nodes,
        )?,
    })
}

fn run_cell(
    out: &Path,
    inst: &ProblemInstance,
    schedule: &Schedule,
    steps: usize,
) -> Result<(RunRow, Vec<PathBuf>)> {
    let kind = schedule.kind();
    let eps = schedule.epsilon();
    let stem = format!("{kind}_{}", eps_tag(eps));

    let (t, s, g) = schedule.table();
    let rows: Vec<Vec<f64>> = (0..t.len()).map(|j| vec![t[j], s[j], g[j]]).collect();
    let sched_path = out.join(format!("schedule_{stem}.csv"));
    let preamble = format!(
        "kind={kind},epsilon={eps},T={},D={}",
        schedule.total_time(),
        schedule.d_norm()
    );
    write_csv(
        &sched_path,
        Some(&preamble),
        &["t", "s", "g_model"].map(String::from),
        &rows,
    )?;

    let (psi, trace) = evolve(inst, schedule, steps)
        .with_context(|| format!("evolving under the {kind} schedule at epsilon {eps}"))?;
    let rows: Vec<Vec<f64>> = (0..trace.t.len())
        .map(|j| {
            vec![
                trace.t[j],
                trace.s[j],
                trace.ground_overlap[j],
                trace.norm_drift[j],
            ]
        })
        .collect();
    let trace_path = out.join(format!("trace_{stem}.csv"));
    write_csv(
        &trace_path,
        None,
        &["t", "s", "ground_overlap", "norm_drift"].map(String::from),
        &rows,
    )?;
    Ok((
        RunRow {
            kind,
            epsilon: eps,
            total_time: schedule.total_time(),
            fidelity: fidelity(&psi, inst),
        },
        vec![sched_path, trace_path],
    ))
}

pub fn cmd_run(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let inst = prepare(cfg)?;
    let d_norm = dhds_spectral_norm(&inst).value;
    let g_min = match cfg.envelope.g_min {
        Some(g) => g,
        None => measured_gap(&inst, cfg)?.g_min,
    };
    let env = if cfg.run.schedules.contains(&ScheduleKind::LocalEnvelope) {
        Some(regime_envelope(&inst, cfg, g_min)?)
    } else {
        None
    };
    let gap = GapFunction::new(&inst);
    let cells: Vec<(ScheduleKind, f64)> = cfg
        .run
        .schedules
        .iter()
        .flat_map(|&k| cfg.run.epsilons.iter().map(move |&e| (k, e)))
        .collect();
    let results: Vec<(RunRow, Vec<PathBuf>)> = cells
        .par_iter()
        .map(|&(kind, eps)| {
            let sched =
                build_schedule(kind, eps, d_norm, g_min, &gap, env.as_ref(), cfg.run.nodes)?;
            run_cell(&cfg.out, &inst, &sched, cfg.run.steps)
        })
        .collect::<Result<_>>()?;

    let rows: Vec<RunRow> = results.iter().map(|r| r.0.clone()).collect();
    let mut written: Vec<PathBuf> = results.into_iter().flat_map(|r| r.1).collect();
    let json_path = cfg.out.join("results.json");
    write_json(&json_path, &rows)?;
    written.push(json_path);

    let mut details = Vec::new();
    for eps in &cfg.run.epsilons {
        let time_of = |kind| {
            rows.iter()
                .find(|r| r.kind == kind && r.epsilon == *eps)
                .map(|r| r.total_time)
        };
        if let (Some(local), Some(global)) = (
            time_of(ScheduleKind::LocalExact),
            time_of(ScheduleKind::Global),
        ) {
            if local > global * (1.0 + 1e-9) {
                details.push(format!(
                    "epsilon {eps}: T_local-exact {local} > T_global {global}"
                ));
            }
        }
    }
    if !details.is_empty() {
        return Err(InvariantViolation {
            message: "local schedule slower than the global schedule".into(),
            details,
        }
        .into());
    }
    Ok(written)
}

pub fn cmd_mingap(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let inst = prepare(cfg)?;
    let mg = measured_gap(&inst, cfg)?;
    let path = cfg.out.join("mingap.json");
    write_json(&path, &mg)?;
    let mut written = vec![path];
    if let Some(p) = cfg.mingap.probe_p {
        let probe = probe_candidate(&inst, p)?;
        let probe_path = cfg.out.join("mingap_probe.json");
        write_json(&probe_path, &probe)?;
        written.push(probe_path);
    }
    Ok(written)
}
