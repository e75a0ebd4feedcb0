//! The randomized ODE-bound verification campaign with a JSONL report:
//! one line per case (parameters, slack, verdict).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use kss_core::odelemma::{random_case, verify_lemma1};
use kss_core::Error as CoreError;

#[derive(Clone, Debug, Serialize)]
pub struct CaseLine {
    pub case: usize,
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    pub tau: f64,
    pub t_star: f64,
    pub t_end: f64,
    pub y_start: f64,
    pub verdict: &'static str,
    pub y_bound: Option<f64>,
    pub g_window_bound: Option<f64>,
    pub max_y: Option<f64>,
    pub min_slack: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CampaignSummary {
    pub verified: usize,
    pub rejected: usize,
    pub violations: usize,
}

/// Run `n_cases` randomized cases, writing one JSONL line each; returns the
/// verdict counters. Rejections (inadmissible forcing) are recorded, never
/// counted as violations.
pub fn run_campaign(
    n_cases: usize,
    seed: u64,
    n_steps: usize,
    report_path: Option<&Path>,
) -> Result<CampaignSummary, String> {
    let mut writer: Option<BufWriter<File>> = match report_path {
        Some(p) => Some(BufWriter::new(
            File::create(p).map_err(|e| format!("cannot create {p:?}: {e}"))?,
        )),
        None => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut summary = CampaignSummary {
        verified: 0,
        rejected: 0,
        violations: 0,
    };
    for k in 0..n_cases {
        let case = random_case(&mut rng);
        let mut line = CaseLine {
            case: k,
            a: case.prob.a,
            b: case.prob.b,
            gamma: case.prob.gamma,
            tau: case.prob.tau,
            t_star: case.prob.t_star,
            t_end: case.prob.t_end,
            y_start: case.prob.y_start,
            verdict: "verified",
            y_bound: None,
            g_window_bound: None,
            max_y: None,
            min_slack: None,
        };
        match verify_lemma1(&case.prob, &case.h, &case.g, n_steps) {
            Ok(report) => {
                summary.verified += 1;
                line.y_bound = Some(report.y_bound);
                line.g_window_bound = Some(report.g_window_bound);
                line.max_y = Some(report.max_y);
                line.min_slack = Some(report.min_slack);
            }
            Err(CoreError::LemmaPrecondition { .. }) => {
                summary.rejected += 1;
                line.verdict = "rejected";
            }
            Err(CoreError::LemmaViolation { excess }) => {
                summary.violations += 1;
                line.verdict = "violated";
                line.min_slack = Some(-excess);
            }
            Err(e) => return Err(format!("case {k}: {e}")),
        }
        if let Some(w) = writer.as_mut() {
            let json = serde_json::to_string(&line).map_err(|e| e.to_string())?;
            writeln!(w, "{json}").map_err(|e| e.to_string())?;
        }
    }
    if let Some(w) = writer.as_mut() {
        w.flush().map_err(|e| e.to_string())?;
    }
    Ok(summary)
}
