//! Conservative, positivity-preserving explicit steppers for the cell
//! density `n` and the signal `c`, plus the operator-split full step.
//!
//! The `n` update is in finite-volume form with first-order upwinding of the
//! transported quantity and exactly zero normal flux through walls, so the
//! discrete mass `integral(n)` telescopes to its initial value every step.
//! The `c` update keeps transport in conservative form (valid because
//! `div u = 0`), which makes the discrete mass recursion
//! `integral(c_new) = (1 - dt) integral(c) + dt integral(n)` exact up to
//! rounding; together with the `dt <= 1` cap this yields the discrete signal
//! mass bound by induction.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fields::{
    cell_stride, divergence, flat, gradient, laplacian, BcTag, ScalarField, VecBc, VectorField,
};
use crate::math;
use crate::model::{self, ModelParams};
use crate::stokes::{self, PoissonSolveParams, StokesStepReport};

/// Values in `[-NEGATIVE_TOLERANCE, 0)` are treated as rounding noise and
/// clipped to zero (counted); anything below aborts the step.
pub const NEGATIVE_TOLERANCE: f64 = 1e-13;

/// The unknowns at one time level plus the simulation clock.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub t: f64,
    /// Cell density, >= 0, homogeneous Neumann.
    pub n: ScalarField,
    /// Signal concentration, >= 0, homogeneous Neumann.
    pub c: ScalarField,
    /// Velocity, no-slip, divergence-free to projection tolerance.
    pub u: VectorField,
    /// Pressure, mean-zero.
    pub p: ScalarField,
}

impl SimState {
    pub fn zeros(grid: crate::fields::Grid) -> SimState {
        SimState {
            t: 0.0,
            n: ScalarField::zeros(grid, BcTag::NeumannZero),
            c: ScalarField::zeros(grid, BcTag::NeumannZero),
            u: VectorField::zeros(grid, VecBc::DirichletZero),
            p: ScalarField::zeros(grid, BcTag::NeumannZero),
        }
    }
}

/// Time-step controller settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    /// Safety factor in (0, 1].
    pub dt_safety: f64,
    /// Hard cap on dt.
    pub dt_max: f64,
    /// Floor below which the run aborts (blow-up / instability proxy).
    pub dt_min: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            dt_safety: 0.4,
            dt_max: 0.1,
            dt_min: 1e-9,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return Err(Error::InvalidParameter("dt_safety must be in (0, 1]"));
        }
        if !(self.dt_max > 0.0) || !(self.dt_min >= 0.0) {
            return Err(Error::InvalidParameter("dt_max must be > 0, dt_min >= 0"));
        }
        Ok(())
    }
}

/// Per-step report of the split full step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    /// Cells clipped from rounding-level negatives in the n / c updates.
    pub clipped_n: usize,
    pub clipped_c: usize,
    pub stokes: Option<StokesStepReport>,
}

/// Per-cell sensitivity values, evaluated once and averaged to faces by the
/// callers (one power evaluation per cell, not per face).
fn cell_sensitivity(n: &ScalarField, params: &ModelParams) -> Vec<f64> {
    n.values()
        .iter()
        .map(|&v| model::sensitivity_raw(math::max(v, 0.0), params))
        .collect()
}

/// Largest face speed `|S_face grad c + u|` over all interior faces.
fn max_face_speed(state: &SimState, params: &ModelParams) -> f64 {
    let gc = gradient(&state.c);
    let s_cell = cell_sensitivity(&state.n, params);
    max_face_speed_with(state, &gc, &s_cell)
}

fn max_face_speed_with(state: &SimState, gc: &VectorField, s_cell: &[f64]) -> f64 {
    let grid = state.n.grid();
    let c = grid.counts();
    let mut speed = 0.0f64;
    for d in 0..grid.dim() {
        let shape = grid.face_shape(d);
        let stride = cell_stride(c, d);
        let gcd = gc.comp(d);
        let ud = state.u.comp(d);
        let mut start = [0usize; 3];
        start[d] = 1;
        for i0 in start[0]..c[0] {
            for i1 in start[1]..c[1] {
                let frow = (i0 * shape[1] + i1) * shape[2];
                let crow = (i0 * c[1] + i1) * c[2];
                for i2 in start[2]..c[2] {
                    let k = frow + i2;
                    let r = crow + i2;
                    let s_face = 0.5 * (s_cell[r - stride] + s_cell[r]);
                    let w = s_face * gcd[k] + ud[k];
                    speed = math::max(speed, math::abs(w));
                }
            }
        }
    }
    speed
}

/// CFL-limited time step:
/// `dt_safety * min(h^2 / (2 dim), h / (speed + eps), dt_max, 1)`.
///
/// The unit cap also underwrites the discrete signal-mass comparison in
/// [`step_c`]. A result below `dt_min` aborts the run.
pub fn cfl_dt(state: &SimState, params: &ModelParams, ctl: &StepControl) -> Result<f64> {
    let speed = max_face_speed(state, params);
    cfl_from_speed(state.n.grid(), speed, ctl)
}

fn cfl_from_speed(grid: crate::fields::Grid, speed: f64, ctl: &StepControl) -> Result<f64> {
    ctl.validate()?;
    let h = grid.min_spacing();
    let diff_limit = h * h / (2.0 * grid.dim() as f64);
    let adv_limit = h / (speed + 1e-30);
    let dt = ctl.dt_safety * math::min(math::min(diff_limit, adv_limit), math::min(ctl.dt_max, 1.0));
    if dt < ctl.dt_min {
        return Err(Error::DtCollapsed {
            dt,
            floor: ctl.dt_min,
        });
    }
    Ok(dt)
}

/// Clip rounding-level negatives to zero; abort on anything larger.
fn enforce_positivity(field: &mut ScalarField, name: &'static str) -> Result<usize> {
    let mut clipped = 0usize;
    let mut worst = 0.0f64;
    for v in field.values_mut() {
        if *v < 0.0 {
            if *v < -NEGATIVE_TOLERANCE {
                worst = math::min(worst, *v);
            } else {
                *v = 0.0;
                clipped += 1;
            }
        }
    }
    if worst < 0.0 {
        return Err(Error::PositivityLoss {
            field: name,
            min_value: worst,
        });
    }
    Ok(clipped)
}

/// Finite-volume update of the density equation
/// `n_t + u . grad n = lap n - div(n S(n) grad c)` with zero total normal
/// flux through walls.
///
/// Face flux: `-grad n + n_upwind * (S_face grad c + u)`, the sensitivity
/// evaluated per cell and arithmetically averaged to the face, the
/// transported value upwinded with respect to the total face velocity.
pub fn step_n(state: &SimState, params: &ModelParams, dt: f64) -> Result<(ScalarField, usize)> {
    let gc = gradient(&state.c);
    let s_cell = cell_sensitivity(&state.n, params);
    step_n_with(state, dt, &gc, &s_cell)
}

fn step_n_with(
    state: &SimState,
    dt: f64,
    gc: &VectorField,
    s_cell: &[f64],
) -> Result<(ScalarField, usize)> {
    let grid = state.n.grid();
    let c = grid.counts();
    let nv = state.n.values();
    let mut flux = VectorField::zeros(grid, VecBc::FluxZero);
    // interior faces only: walls keep the exact zero total flux
    for d in 0..grid.dim() {
        let shape = grid.face_shape(d);
        let h = grid.spacing(d);
        let stride = cell_stride(c, d);
        let gcd = gc.comp(d);
        let ud = state.u.comp(d);
        let fd = flux.comp_mut(d);
        let mut start = [0usize; 3];
        start[d] = 1;
        for i0 in start[0]..c[0] {
            for i1 in start[1]..c[1] {
                let frow = (i0 * shape[1] + i1) * shape[2];
                let crow = (i0 * c[1] + i1) * c[2];
                for i2 in start[2]..c[2] {
                    let k = frow + i2;
                    let r = crow + i2;
                    let n_l = nv[r - stride];
                    let n_r = nv[r];
                    let s_face = 0.5 * (s_cell[r - stride] + s_cell[r]);
                    let w = s_face * gcd[k] + ud[k];
                    let n_up = if w >= 0.0 { n_l } else { n_r };
                    fd[k] = -(n_r - n_l) / h + n_up * w;
                }
            }
        }
    }
    let div_f = divergence(&flux);
    let mut out = state.n.clone();
    for (v, &df) in out.values_mut().iter_mut().zip(div_f.values()) {
        *v -= dt * df;
    }
    let clipped = enforce_positivity(&mut out, "n")?;
    Ok((out, clipped))
}

/// Explicit update of the signal equation
/// `c_t + u . grad c = lap c - c + n` with Neumann walls; transport in
/// conservative upwind form.
pub fn step_c(state: &SimState, params: &ModelParams, dt: f64) -> Result<(ScalarField, usize)> {
    let _ = params;
    if dt > 1.0 {
        return Err(Error::InvalidParameter("step_c requires dt <= 1"));
    }
    let grid = state.c.grid();
    let lap_c = laplacian(&state.c);
    // fluid off (or at rest): no advective flux to assemble
    if state.u.max_abs() == 0.0 {
        let mut out = state.c.clone();
        let vals = out.values_mut();
        for (k, v) in vals.iter_mut().enumerate() {
            *v += dt * (lap_c.values()[k] - *v + state.n.values()[k]);
        }
        let clipped = enforce_positivity(&mut out, "c")?;
        return Ok((out, clipped));
    }
    let mut flux = VectorField::zeros(grid, VecBc::FluxZero);
    for d in 0..grid.dim() {
        let shape = grid.face_shape(d);
        let n_cells = grid.cells(d);
        for i0 in 0..shape[0] {
            for i1 in 0..shape[1] {
                for i2 in 0..shape[2] {
                    let i = [i0, i1, i2];
                    if i[d] == 0 || i[d] == n_cells {
                        continue; // u = 0 at walls
                    }
                    let k = flat(shape, i);
                    let w = state.u.comp(d)[k];
                    if w == 0.0 {
                        continue;
                    }
                    let mut lo = i;
                    lo[d] -= 1;
                    let c_up = if w >= 0.0 { state.c.at(lo) } else { state.c.at(i) };
                    flux.comp_mut(d)[k] = c_up * w;
                }
            }
        }
    }
    let div_f = divergence(&flux);
    let mut out = state.c.clone();
    {
        let vals = out.values_mut();
        for (k, v) in vals.iter_mut().enumerate() {
            *v += dt
                * (lap_c.values()[k] - *v + state.n.values()[k] - div_f.values()[k]);
        }
    }
    let clipped = enforce_positivity(&mut out, "c")?;
    Ok((out, clipped))
}

/// One operator-split full step: `dt = cfl_dt`, then `n`, then `c` (seeing
/// the new `n`), then the Stokes step (buoyancy from the new `n`) when the
/// fluid is enabled; the clock advances by `dt`. With the fluid disabled the
/// velocity field is never written, so it stays bit-for-bit zero.
pub fn advance(
    state: &SimState,
    params: &ModelParams,
    ctl: &StepControl,
    psolve: &PoissonSolveParams,
) -> Result<(SimState, StepReport)> {
    let gc = gradient(&state.c);
    let s_cell = cell_sensitivity(&state.n, params);
    let speed = max_face_speed_with(state, &gc, &s_cell);
    let dt = cfl_from_speed(state.n.grid(), speed, ctl)?;
    advance_fused(state, params, dt, psolve, &gc, &s_cell)
}

/// Split step at a caller-chosen `dt` (used by `advance` and by refinement
/// studies that need matched step sizes).
pub fn advance_with_dt(
    state: &SimState,
    params: &ModelParams,
    dt: f64,
    psolve: &PoissonSolveParams,
) -> Result<(SimState, StepReport)> {
    let gc = gradient(&state.c);
    let s_cell = cell_sensitivity(&state.n, params);
    advance_fused(state, params, dt, psolve, &gc, &s_cell)
}

fn advance_fused(
    state: &SimState,
    params: &ModelParams,
    dt: f64,
    psolve: &PoissonSolveParams,
    gc: &VectorField,
    s_cell: &[f64],
) -> Result<(SimState, StepReport)> {
    let (n_new, clipped_n) = step_n_with(state, dt, gc, s_cell)?;
    let mut mid = state.clone();
    mid.n = n_new;
    let (c_new, clipped_c) = step_c(&mid, params, dt)?;
    mid.c = c_new;
    let stokes_report = if params.fluid_enabled {
        let (next, report) = stokes::stokes_step(&mid, params, dt, psolve)?;
        mid = next;
        Some(report)
    } else {
        None
    };
    mid.t = state.t + dt;
    Ok((
        mid,
        StepReport {
            dt,
            clipped_n,
            clipped_c,
            stokes: stokes_report,
        },
    ))
}
