//! Monitored functionals: masses, `L^p` / sup norms, the dissipation
//! integral `integral |grad n^(p/2)|^2`, the sliding-window functional
//! `I(T)`, a `W^{1,p}` proxy for the signal, the `L^p` testing-identity
//! residual and the blow-up proxy verdict.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fields::{self, gradient, integrate, lp_norm, BcTag, ScalarField};
use crate::math;
use crate::model::{self, ModelParams};
use crate::transport::SimState;

/// Diagnostic sampling configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsConfig {
    /// Exponents tracked for `L^p`, dissipation and signal-gradient norms.
    pub p_list: Vec<f64>,
    /// Sliding-window length.
    pub tau: f64,
    /// Steps between samples.
    pub sample_every: usize,
    /// `L^inf` growth factor that triggers the blow-up proxy.
    pub blowup_growth_factor: f64,
    /// dt below which an abort counts as CFL collapse.
    pub blowup_dt_floor: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            p_list: alloc::vec![2.0, 4.0, 6.0],
            tau: 1.0,
            sample_every: 100,
            blowup_growth_factor: 100.0,
            blowup_dt_floor: 1e-8,
        }
    }
}

impl DiagnosticsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::InvalidParameter("tau must be > 0"));
        }
        if self.p_list.iter().any(|&p| !(p > 1.0)) {
            return Err(Error::InvalidParameter("every tracked p must be > 1"));
        }
        if !(self.blowup_growth_factor > 1.0) {
            return Err(Error::InvalidParameter("blowup_growth_factor must be > 1"));
        }
        Ok(())
    }
}

/// One time-sample of every monitored functional. The per-`p` vectors are
/// aligned with `DiagnosticsConfig::p_list`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass_n: f64,
    pub mass_c: f64,
    pub linf_n: f64,
    pub lp_n: Vec<f64>,
    pub grad_np2_sq: Vec<f64>,
    pub lp_grad_c: Vec<f64>,
    pub linf_u: f64,
    pub l2_u: f64,
    pub div_u_max: f64,
    pub dt_used: f64,
    pub identity_residual: Option<f64>,
}

/// Outcome of the blow-up proxy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    BoundedOnHorizon,
    GrowthTriggered,
    DtCollapsed,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::BoundedOnHorizon => "bounded_on_horizon",
            Verdict::GrowthTriggered => "growth_triggered",
            Verdict::DtCollapsed => "dt_collapsed",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlowupVerdict {
    pub verdict: Verdict,
    pub trigger_time: Option<f64>,
    pub peak_linf_n: f64,
}

/// The spatial dissipation integral `integral |grad(n^(p/2))|^2`, summed
/// over faces times cell volume; `0^(p/2) = 0`.
pub fn grad_np2_sq(n: &ScalarField, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter("grad_np2_sq requires p > 1"));
    }
    let half_p = 0.5 * p;
    let m = if p == 2.0 {
        n.clone()
    } else {
        n.map(|v| math::pow(math::max(v, 0.0), half_p))
    };
    let g = gradient(&m);
    Ok(fields::vector_inner(&g, &g))
}

/// Window length `tau := min{1, horizon / 4}`; the run horizon stands in
/// for the maximal existence time, which is not computable.
pub fn compute_tau(t_horizon: f64) -> f64 {
    math::min(1.0, 0.25 * t_horizon)
}

/// Trapezoidal integral of a sampled series over `[a, b]`, linearly
/// interpolating at the window ends. `None` when the samples do not cover
/// the window.
fn window_integral(series: &[(f64, f64)], a: f64, b: f64) -> Option<f64> {
    if series.is_empty() || a < series[0].0 - 1e-12 || b > series[series.len() - 1].0 + 1e-12 {
        return None;
    }
    let value_at = |t: f64| -> f64 {
        // series is time-sorted; find the bracketing segment
        let k = series.partition_point(|&(ts, _)| ts < t);
        if k == 0 {
            return series[0].1;
        }
        if k == series.len() {
            return series[series.len() - 1].1;
        }
        let (t0, v0) = series[k - 1];
        let (t1, v1) = series[k];
        if t1 == t0 {
            return v1;
        }
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    };
    let mut acc = 0.0;
    let mut prev_t = a;
    let mut prev_v = value_at(a);
    for &(ts, vs) in series {
        if ts <= a {
            continue;
        }
        if ts >= b {
            break;
        }
        acc += 0.5 * (prev_v + vs) * (ts - prev_t);
        prev_t = ts;
        prev_v = vs;
    }
    acc += 0.5 * (prev_v + value_at(b)) * (b - prev_t);
    Some(acc)
}

/// `I(T) = sup over window starts t in [tau, T - tau] of
/// integral_t^{t+tau}` of the series, the sup taken over the sample grid.
pub fn sliding_i(series: &[(f64, f64)], tau: f64, t_end: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter("tau must be > 0"));
    }
    let mut best: Option<f64> = None;
    for &(ts, _) in series {
        if ts < tau - 1e-12 || ts > t_end - tau + 1e-12 {
            continue;
        }
        if let Some(v) = window_integral(series, ts, ts + tau) {
            best = Some(match best {
                Some(b) => math::max(b, v),
                None => v,
            });
        }
    }
    best.ok_or(Error::InsufficientData)
}

/// `W^{1,p}` proxy for the signal: `||c||_p + || |grad c| ||_p` with the
/// gradient magnitude averaged back to cell centers.
pub fn w1p_proxy_c(c: &ScalarField, p: f64) -> Result<f64> {
    if !(p >= 1.0) && !p.is_infinite() {
        return Err(Error::InvalidParameter("w1p_proxy_c requires p >= 1"));
    }
    let mag = gradient_magnitude(c);
    Ok(lp_norm(c, p)? + lp_norm(&mag, p)?)
}

/// Cell-centered magnitude of the discrete gradient (face components
/// averaged to centers).
pub fn gradient_magnitude(s: &ScalarField) -> ScalarField {
    let grid = s.grid();
    let g = gradient(s);
    let mut out = ScalarField::zeros(grid, BcTag::NeumannZero);
    let nc = grid.counts();
    for i0 in 0..nc[0] {
        for i1 in 0..nc[1] {
            for i2 in 0..nc[2] {
                let i = [i0, i1, i2];
                let mut sq = 0.0;
                for d in 0..grid.dim() {
                    let shape = grid.face_shape(d);
                    let mut hi = i;
                    hi[d] += 1;
                    let avg = 0.5
                        * (g.comp(d)[fields::flat(shape, i)] + g.comp(d)[fields::flat(shape, hi)]);
                    sq += avg * avg;
                }
                let k = grid.cell_idx(i);
                out.values_mut()[k] = math::sqrt(sq);
            }
        }
    }
    out
}

/// The three terms of the discrete `L^p` testing identity, evaluated for a
/// step from `before` to `after`:
/// rate `(int n_after^p - int n_before^p) / dt`,
/// dissipation `p(p-1) int n^{p-2} |grad n|^2`, and
/// cross `p(p-1) int n^{p-1} S(n) grad n . grad c`, the spatial terms at the
/// midpoint state with `n^{p-2}` floored at `n >= 1e-12`.
pub fn testing_identity_parts(
    before: &SimState,
    after: &SimState,
    params: &ModelParams,
    p: f64,
    dt: f64,
) -> Result<(f64, f64, f64)> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter("testing identity requires p > 1"));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter("testing identity requires dt > 0"));
    }
    let np_int = |s: &ScalarField| -> f64 {
        integrate(&s.map(|v| math::pow(math::max(v, 0.0), p)))
    };
    let rate = (np_int(&after.n) - np_int(&before.n)) / dt;

    let grid = before.n.grid();
    let mut n_mid = before.n.clone();
    for (v, &a) in n_mid.values_mut().iter_mut().zip(after.n.values()) {
        *v = math::max(0.5 * (*v + a), 0.0);
    }
    let mut c_mid = before.c.clone();
    for (v, &a) in c_mid.values_mut().iter_mut().zip(after.c.values()) {
        *v = 0.5 * (*v + a);
    }
    let gn = gradient(&n_mid);
    let gc = gradient(&c_mid);
    // cell-centered weights, averaged to faces
    let w_diss = n_mid.map(|v| math::pow(math::max(v, 1e-12), p - 2.0));
    let w_cross = n_mid.map(|v| {
        math::pow(math::max(v, 0.0), p - 1.0) * model::sensitivity_raw(math::max(v, 0.0), params)
    });
    let vol = grid.cell_volume();
    let mut diss = 0.0;
    let mut cross = 0.0;
    for d in 0..grid.dim() {
        let shape = grid.face_shape(d);
        let n_cells = grid.cells(d);
        for i0 in 0..shape[0] {
            for i1 in 0..shape[1] {
                for i2 in 0..shape[2] {
                    let i = [i0, i1, i2];
                    if i[d] == 0 || i[d] == n_cells {
                        continue;
                    }
                    let k = fields::flat(shape, i);
                    let mut lo = i;
                    lo[d] -= 1;
                    let wd = 0.5 * (w_diss.at(lo) + w_diss.at(i));
                    let wc = 0.5 * (w_cross.at(lo) + w_cross.at(i));
                    let gnk = gn.comp(d)[k];
                    diss += wd * gnk * gnk * vol;
                    cross += wc * gnk * gc.comp(d)[k] * vol;
                }
            }
        }
    }
    let pp = p * (p - 1.0);
    Ok((rate, pp * diss, pp * cross))
}

/// Normalized residual `|LHS - RHS| / (|LHS| + |RHS| + eps)` of the testing
/// identity, with `LHS = rate + dissipation` and `RHS` the cross term.
pub fn testing_identity_residual(
    before: &SimState,
    after: &SimState,
    params: &ModelParams,
    p: f64,
    dt: f64,
) -> Result<f64> {
    let (rate, diss, cross) = testing_identity_parts(before, after, params, p, dt)?;
    let lhs = rate + diss;
    let rhs = cross;
    Ok(math::abs(lhs - rhs) / (math::abs(lhs) + math::abs(rhs) + 1e-30))
}

/// Classify a finished or aborted run from its diagnostics trail.
pub fn blowup_verdict(
    records: &[DiagnosticsRecord],
    cfg: &DiagnosticsConfig,
    horizon: f64,
) -> BlowupVerdict {
    let peak = records.iter().fold(0.0f64, |a, r| math::max(a, r.linf_n));
    if records.is_empty() {
        return BlowupVerdict {
            verdict: Verdict::BoundedOnHorizon,
            trigger_time: None,
            peak_linf_n: peak,
        };
    }
    let linf0 = records[0].linf_n;
    for r in records {
        if linf0 > 0.0 && r.linf_n > cfg.blowup_growth_factor * linf0 {
            return BlowupVerdict {
                verdict: Verdict::GrowthTriggered,
                trigger_time: Some(r.t),
                peak_linf_n: peak,
            };
        }
        if r.dt_used > 0.0 && r.dt_used < cfg.blowup_dt_floor {
            return BlowupVerdict {
                verdict: Verdict::DtCollapsed,
                trigger_time: Some(r.t),
                peak_linf_n: peak,
            };
        }
    }
    // horizon reached (or the run ended for an out-of-band reason the
    // orchestrator reports separately)
    let _ = horizon;
    BlowupVerdict {
        verdict: Verdict::BoundedOnHorizon,
        trigger_time: None,
        peak_linf_n: peak,
    }
}

/// Evaluate every monitored functional on one state snapshot.
pub fn collect(
    state: &SimState,
    cfg: &DiagnosticsConfig,
    dt_used: f64,
    identity_residual: Option<f64>,
) -> Result<DiagnosticsRecord> {
    cfg.validate()?;
    let mut lp_n = Vec::with_capacity(cfg.p_list.len());
    let mut diss = Vec::with_capacity(cfg.p_list.len());
    let mut lp_gc = Vec::with_capacity(cfg.p_list.len());
    let gmag = gradient_magnitude(&state.c);
    for &p in &cfg.p_list {
        lp_n.push(lp_norm(&state.n, p)?);
        diss.push(grad_np2_sq(&state.n, p)?);
        lp_gc.push(lp_norm(&gmag, p)?);
    }
    Ok(DiagnosticsRecord {
        t: state.t,
        mass_n: integrate(&state.n),
        mass_c: integrate(&state.c),
        linf_n: state.n.max_abs(),
        lp_n,
        grad_np2_sq: diss,
        lp_grad_c: lp_gc,
        linf_u: state.u.max_abs(),
        l2_u: math::sqrt(fields::vector_inner(&state.u, &state.u)),
        div_u_max: fields::divergence(&state.u).max_abs(),
        dt_used,
        identity_residual,
    })
}
