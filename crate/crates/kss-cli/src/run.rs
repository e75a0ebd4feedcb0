//! The simulation driver: step loop, diagnostics sampling, CSV / snapshot
//! emission and the run summary.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use kss_core::diagnostics::{self, sliding_i, DiagnosticsRecord, Verdict};
use kss_core::model::build_initial_state;
use kss_core::transport::advance;
use kss_core::{Error as CoreError, PoissonSolveParams, SimState};

use crate::config::RunConfig;
use crate::snapshot;

/// Exit codes shared by the binary and the tests.
pub const EXIT_COMPLETED: i32 = 0;
pub const EXIT_GROWTH: i32 = 2;
pub const EXIT_DT_COLLAPSED: i32 = 3;
pub const EXIT_SOLVER_FAILURE: i32 = 4;
pub const EXIT_CONFIG: i32 = 64;

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub verdict: String,
    pub t_final: f64,
    pub steps: u64,
    pub wall_time_s: f64,
    pub peak_linf_n: f64,
    pub peak_linf_u: f64,
    pub mass_n_initial: f64,
    pub mass_n_final: f64,
    pub mass_c_bound: f64,
    pub clipped_cells: u64,
    pub clip_fraction: f64,
    pub min_n: f64,
    pub min_c: f64,
    pub tau: f64,
    /// Observed `I(T)` per tracked p, aligned with `p_list`; null when the
    /// sampled horizon cannot cover a full window.
    pub p_list: Vec<f64>,
    pub i_observed: Vec<Option<f64>>,
    pub trigger_time: Option<f64>,
    pub abort_reason: Option<String>,
}

pub struct RunOutcome {
    pub summary: RunSummary,
    pub exit_code: i32,
    pub records: Vec<DiagnosticsRecord>,
}

fn csv_header(p_list: &[f64]) -> String {
    let mut cols = vec!["t".to_string(), "mass_n".into(), "mass_c".into(), "linf_n".into()];
    for &p in p_list {
        cols.push(format!("lp_n_{}", fmt_p(p)));
    }
    for &p in p_list {
        cols.push(format!("grad_np2_sq_{}", fmt_p(p)));
    }
    for &p in p_list {
        cols.push(format!("lp_grad_c_{}", fmt_p(p)));
    }
    cols.extend([
        "linf_u".to_string(),
        "l2_u".into(),
        "div_u_max".into(),
        "dt_used".into(),
        "identity_residual".into(),
    ]);
    cols.join(",")
}

pub fn fmt_p(p: f64) -> String {
    if p.fract() == 0.0 {
        format!("{}", p as i64)
    } else {
        format!("{p}")
    }
}

fn csv_row(r: &DiagnosticsRecord) -> String {
    let mut cols = vec![
        format!("{}", r.t),
        format!("{}", r.mass_n),
        format!("{}", r.mass_c),
        format!("{}", r.linf_n),
    ];
    for v in &r.lp_n {
        cols.push(format!("{v}"));
    }
    for v in &r.grad_np2_sq {
        cols.push(format!("{v}"));
    }
    for v in &r.lp_grad_c {
        cols.push(format!("{v}"));
    }
    cols.push(format!("{}", r.linf_u));
    cols.push(format!("{}", r.l2_u));
    cols.push(format!("{}", r.div_u_max));
    cols.push(format!("{}", r.dt_used));
    cols.push(match r.identity_residual {
        Some(v) => format!("{v}"),
        None => String::new(),
    });
    cols.join(",")
}

fn classify_abort(err: &CoreError) -> (i32, Verdict) {
    match err {
        CoreError::DtCollapsed { .. } => (EXIT_DT_COLLAPSED, Verdict::DtCollapsed),
        _ => (EXIT_SOLVER_FAILURE, Verdict::BoundedOnHorizon),
    }
}

/// Run one simulation to its horizon (or abort), writing `diagnostics.csv`,
/// any requested snapshots and `summary.json` into the output directory.
pub fn run_simulation(cfg: &RunConfig, quiet: bool) -> Result<RunOutcome, String> {
    let started = Instant::now();
    fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| format!("cannot create output dir {:?}: {e}", cfg.output_dir))?;

    let psolve = PoissonSolveParams::default();
    let mut state = build_initial_state(&cfg.init, &cfg.model, cfg.grid, &psolve)
        .map_err(|e| format!("initial data: {e}"))?;

    let csv_path = cfg.output_dir.join("diagnostics.csv");
    let mut csv = BufWriter::new(
        File::create(&csv_path).map_err(|e| format!("cannot create {csv_path:?}: {e}"))?,
    );
    writeln!(csv, "{}", csv_header(&cfg.diag.p_list)).map_err(|e| e.to_string())?;

    let mut records: Vec<DiagnosticsRecord> = Vec::new();
    let emit = |rec: &DiagnosticsRecord, csv: &mut BufWriter<File>| -> Result<(), String> {
        writeln!(csv, "{}", csv_row(rec)).map_err(|e| e.to_string())?;
        // crash safety: every sample reaches disk before the next step
        csv.flush().map_err(|e| e.to_string())?;
        Ok(())
    };

    let first = diagnostics::collect(&state, &cfg.diag, 0.0, None)
        .map_err(|e| format!("diagnostics: {e}"))?;
    let linf0 = first.linf_n;
    let mass0 = first.mass_n;
    let mass_c_bound = first.mass_n.max(first.mass_c);
    emit(&first, &mut csv)?;
    records.push(first);

    let mut snapshots: Vec<f64> = cfg.snapshot_times.clone();
    snapshots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut next_snapshot = 0usize;
    let take_snapshots =
        |state: &SimState, next: &mut usize, dir: &Path| -> Result<(), String> {
            while *next < snapshots.len() && state.t >= snapshots[*next] - 1e-12 {
                snapshot::write_state(dir, state, snapshots[*next]).map_err(|e| e.to_string())?;
                *next += 1;
            }
            Ok(())
        };
    take_snapshots(&state, &mut next_snapshot, &cfg.output_dir)?;

    let mut steps: u64 = 0;
    let mut clipped: u64 = 0;
    let mut peak_linf_n = linf0;
    let mut peak_linf_u = records[0].linf_u;
    let mut min_n = state.n.min_value();
    let mut min_c = state.c.min_value();
    let mut verdict = Verdict::BoundedOnHorizon;
    let mut trigger_time: Option<f64> = None;
    let mut abort_reason: Option<String> = None;
    let mut exit_code = EXIT_COMPLETED;

    while state.t < cfg.t_end - 1e-12 {
        let sample_due = (steps + 1) % cfg.diag.sample_every as u64 == 0;
        let before = if sample_due { Some(state.clone()) } else { None };
        match advance(&state, &cfg.model, &cfg.step, &psolve) {
            Ok((next, report)) => {
                state = next;
                steps += 1;
                clipped += (report.clipped_n + report.clipped_c) as u64;
                min_n = min_n.min(state.n.min_value());
                min_c = min_c.min(state.c.min_value());
                let linf = state.n.max_abs();
                peak_linf_n = peak_linf_n.max(linf);
                let last_step = state.t >= cfg.t_end - 1e-12;
                let growth = linf0 > 0.0 && linf > cfg.diag.blowup_growth_factor * linf0;
                if sample_due || last_step || growth {
                    let residual = before
                        .as_ref()
                        .map(|b| {
                            diagnostics::testing_identity_residual(
                                b, &state, &cfg.model, 2.0, report.dt,
                            )
                        })
                        .transpose()
                        .map_err(|e| format!("diagnostics: {e}"))?;
                    let rec = diagnostics::collect(&state, &cfg.diag, report.dt, residual)
                        .map_err(|e| format!("diagnostics: {e}"))?;
                    peak_linf_u = peak_linf_u.max(rec.linf_u);
                    emit(&rec, &mut csv)?;
                    records.push(rec);
                }
                take_snapshots(&state, &mut next_snapshot, &cfg.output_dir)?;
                if growth {
                    verdict = Verdict::GrowthTriggered;
                    trigger_time = Some(state.t);
                    exit_code = EXIT_GROWTH;
                    break;
                }
            }
            Err(err) => {
                let (code, v) = classify_abort(&err);
                exit_code = code;
                verdict = v;
                trigger_time = Some(state.t);
                abort_reason = Some(format!("{err}"));
                if !quiet {
                    eprintln!("abort at t = {}: {err}", state.t);
                }
                break;
            }
        }
    }
    csv.flush().map_err(|e| e.to_string())?;

    let cell_steps = (steps as u128) * (cfg.grid.cell_count() as u128) * 2;
    let clip_fraction = if cell_steps > 0 {
        clipped as f64 / cell_steps as f64
    } else {
        0.0
    };

    let tau = cfg.diag.tau;
    let mut i_observed = Vec::with_capacity(cfg.diag.p_list.len());
    for (k, _) in cfg.diag.p_list.iter().enumerate() {
        let series: Vec<(f64, f64)> = records
            .iter()
            .map(|r| (r.t, r.grad_np2_sq[k]))
            .collect();
        i_observed.push(sliding_i(&series, tau, state.t).ok());
    }

    let verdict = if exit_code == EXIT_SOLVER_FAILURE {
        "solver_failure".to_string()
    } else {
        verdict.as_str().to_string()
    };

    let summary = RunSummary {
        verdict,
        t_final: state.t,
        steps,
        wall_time_s: started.elapsed().as_secs_f64(),
        peak_linf_n,
        peak_linf_u,
        mass_n_initial: mass0,
        mass_n_final: records.last().map(|r| r.mass_n).unwrap_or(mass0),
        mass_c_bound,
        clipped_cells: clipped,
        clip_fraction,
        min_n,
        min_c,
        tau,
        p_list: cfg.diag.p_list.clone(),
        i_observed,
        trigger_time,
        abort_reason,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| e.to_string())?;
    fs::write(cfg.output_dir.join("summary.json"), json.as_bytes())
        .map_err(|e| e.to_string())?;
    if !quiet {
        eprintln!(
            "{}: t = {}, {} steps, peak |n|_inf = {}",
            summary.verdict, summary.t_final, summary.steps, summary.peak_linf_n
        );
    }
    Ok(RunOutcome {
        summary,
        exit_code,
        records,
    })
}

/// Post-hoc `I(T)` from a diagnostics CSV: reads the `grad_np2_sq_<p>`
/// column and scans every sampled window.
pub fn diag_from_csv(path: &Path, tau_arg: &str, p: f64) -> Result<(f64, f64), String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {path:?}: {e}"))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty CSV")?;
    let want = format!("grad_np2_sq_{}", fmt_p(p));
    let cols: Vec<&str> = header.split(',').collect();
    let t_idx = cols
        .iter()
        .position(|&c| c == "t")
        .ok_or("CSV has no t column")?;
    let v_idx = cols
        .iter()
        .position(|&c| c == want)
        .ok_or_else(|| format!("CSV has no {want} column"))?;
    let mut series = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        let t: f64 = parts
            .get(t_idx)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("row {}: bad t", k + 2))?;
        let v: f64 = parts
            .get(v_idx)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("row {}: bad {want}", k + 2))?;
        series.push((t, v));
    }
    let t_end = series.last().map(|&(t, _)| t).ok_or("CSV has no data rows")?;
    let tau = match tau_arg {
        "auto" => diagnostics::compute_tau(t_end),
        s => s
            .parse::<f64>()
            .map_err(|_| format!("bad --tau value {s:?}"))?,
    };
    let i = sliding_i(&series, tau, t_end).map_err(|e| format!("{e}"))?;
    Ok((tau, i))
}
