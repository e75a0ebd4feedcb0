//! Pressure-projection time integrator for the Stokes subsystem
//! `u_t + grad P = lap u + n grad phi + f`, `div u = 0`, no-slip walls,
//! together with the matrix-free conjugate-gradient Neumann Poisson solver
//! that realizes the discrete Helmholtz projection.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fields::{
    self, divergence, flat, gradient, interpolate_to_faces, laplacian, BcTag, Grid, ScalarField,
    VecBc, VectorField,
};
use crate::math;
use crate::model::{self, ModelParams};
use crate::transport::SimState;

/// Parameters of the Neumann Poisson solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoissonSolveParams {
    /// Relative residual bound.
    pub tolerance: f64,
    /// Iteration cap; `None` selects `10 * max_cells_per_axis^2`.
    pub max_iterations: Option<usize>,
}

impl Default for PoissonSolveParams {
    fn default() -> Self {
        PoissonSolveParams {
            tolerance: 1e-10,
            max_iterations: None,
        }
    }
}

impl PoissonSolveParams {
    fn iteration_cap(&self, grid: Grid) -> usize {
        self.max_iterations.unwrap_or_else(|| {
            let m = (0..grid.dim()).map(|d| grid.cells(d)).max().unwrap_or(4);
            10 * m * m
        })
    }
}

/// Per-step report of the Stokes integrator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StokesStepReport {
    pub div_max_after: f64,
    pub poisson_iterations: usize,
    pub dt_used: f64,
}

/// Solve `lap(phi) = rhs - mean(rhs)` with homogeneous Neumann conditions.
///
/// The mean of the right-hand side is removed for compatibility and the
/// returned potential is mean-zero. Unpreconditioned conjugate gradient on
/// the (positive semi-definite) negated Laplacian, with the constant null
/// space pinned by mean removal each iteration.
pub fn solve_poisson_neumann(
    rhs: &ScalarField,
    params: &PoissonSolveParams,
) -> Result<ScalarField> {
    let (phi, _) = solve_poisson_neumann_with_iters(rhs, params)?;
    Ok(phi)
}

pub(crate) fn solve_poisson_neumann_with_iters(
    rhs: &ScalarField,
    params: &PoissonSolveParams,
) -> Result<(ScalarField, usize)> {
    if !(params.tolerance > 0.0) {
        return Err(Error::InvalidParameter("poisson tolerance must be > 0"));
    }
    let grid = rhs.grid();
    let mut b = rhs.clone();
    b.remove_mean();
    let b_norm = math::sqrt(dot(b.values(), b.values()));
    let mut phi = ScalarField::zeros(grid, BcTag::NeumannZero);
    if b_norm == 0.0 {
        return Ok((phi, 0));
    }
    // CG on A = -laplacian: A phi = -b.
    let mut r: Vec<f64> = b.values().iter().map(|&v| -v).collect();
    let mut p = ScalarField::zeros(grid, BcTag::NeumannZero);
    p.values_mut().copy_from_slice(&r);
    let mut rr = dot(&r, &r);
    let cap = params.iteration_cap(grid);
    let tol2 = (params.tolerance * b_norm) * (params.tolerance * b_norm);
    let mut iters = 0;
    while rr > tol2 {
        if iters >= cap {
            return Err(Error::SolverFailure {
                residual: math::sqrt(rr) / b_norm,
                iterations: iters,
            });
        }
        let mut ap = laplacian(&p);
        for v in ap.values_mut() {
            *v = -*v;
        }
        let pap = dot(p.values(), ap.values());
        if pap <= 0.0 {
            return Err(Error::SolverFailure {
                residual: math::sqrt(rr) / b_norm,
                iterations: iters,
            });
        }
        let alpha = rr / pap;
        for (x, &pv) in phi.values_mut().iter_mut().zip(p.values()) {
            *x += alpha * pv;
        }
        for (rv, &apv) in r.iter_mut().zip(ap.values()) {
            *rv -= alpha * apv;
        }
        // pin the constant null space
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        for rv in &mut r {
            *rv -= mean;
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for (pv, &rv) in p.values_mut().iter_mut().zip(&r) {
            *pv = rv + beta * *pv;
        }
        rr = rr_new;
        iters += 1;
    }
    phi.remove_mean();
    Ok((phi, iters))
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Helmholtz projection: returns `v - grad(phi_p)` with
/// `phi_p = solve_poisson_neumann(div v)`, plus the potential itself.
/// Boundary-normal faces are untouched (the Neumann potential has zero
/// boundary-face gradient).
pub fn project_divergence_free(
    v: &VectorField,
    params: &PoissonSolveParams,
) -> Result<(VectorField, ScalarField)> {
    let (out, phi, _) = project_with_iters(v, params)?;
    Ok((out, phi))
}

pub(crate) fn project_with_iters(
    v: &VectorField,
    params: &PoissonSolveParams,
) -> Result<(VectorField, ScalarField, usize)> {
    let div = divergence(v);
    let (phi, iters) = solve_poisson_neumann_with_iters(&div, params)?;
    let gphi = gradient(&phi);
    let mut out = v.clone();
    for d in 0..v.grid().dim() {
        for (o, &g) in out.comp_mut(d).iter_mut().zip(gphi.comp(d)) {
            *o -= g;
        }
    }
    Ok((out, phi, iters))
}

/// Discrete Laplacian of one velocity component on its face grid.
///
/// Along the component's own axis the boundary nodes are pinned to zero
/// (no-slip normal); transverse walls pass half a cell away, so tangential
/// ghosts negate.
fn face_component_laplacian(grid: Grid, axis: usize, comp: &[f64]) -> Vec<f64> {
    let shape = grid.face_shape(axis);
    let mut out = alloc::vec![0.0; comp.len()];
    for i0 in 0..shape[0] {
        for i1 in 0..shape[1] {
            for i2 in 0..shape[2] {
                let i = [i0, i1, i2];
                if i[axis] == 0 || i[axis] == grid.cells(axis) {
                    continue; // pinned boundary node
                }
                let center = comp[flat(shape, i)];
                let mut acc = 0.0;
                for a in 0..grid.dim() {
                    let h2 = grid.spacing(a) * grid.spacing(a);
                    let (lo, hi);
                    if a == axis {
                        let mut j = i;
                        j[a] -= 1;
                        lo = comp[flat(shape, j)];
                        j[a] += 2;
                        hi = comp[flat(shape, j)];
                    } else {
                        lo = if i[a] == 0 {
                            -center
                        } else {
                            let mut j = i;
                            j[a] -= 1;
                            comp[flat(shape, j)]
                        };
                        hi = if i[a] == shape[a] - 1 {
                            -center
                        } else {
                            let mut j = i;
                            j[a] += 1;
                            comp[flat(shape, j)]
                        };
                    }
                    acc += (lo - 2.0 * center + hi) / h2;
                }
                out[flat(shape, i)] = acc;
            }
        }
    }
    out
}

/// One forward-Euler viscous step plus incremental-pressure projection.
///
/// `u* = u + dt (lap u + n_faces grad phi + f(t))`, then `(u, P_inc)` from
/// the Helmholtz projection of `u*` and `P = P_inc / dt`.
pub fn stokes_step(
    state: &SimState,
    params: &ModelParams,
    dt: f64,
    psolve: &PoissonSolveParams,
) -> Result<(SimState, StokesStepReport)> {
    let grid = state.u.grid();
    let h = grid.min_spacing();
    let limit = h * h / (2.0 * grid.dim() as f64);
    if dt > limit {
        return Err(Error::StabilityBound { dt, limit });
    }
    let n_faces = interpolate_to_faces(&state.n, VecBc::FluxZero);
    let gphi = model::eval_phi_gradient(params, grid);
    let force = model::eval_forcing(params, grid, state.t);
    let mut u_star = state.u.clone();
    for d in 0..grid.dim() {
        let lap = face_component_laplacian(grid, d, state.u.comp(d));
        let shape = grid.face_shape(d);
        let us = u_star.comp_mut(d);
        for i0 in 0..shape[0] {
            for i1 in 0..shape[1] {
                for i2 in 0..shape[2] {
                    let i = [i0, i1, i2];
                    if i[d] == 0 || i[d] == grid.cells(d) {
                        continue; // no-slip faces stay zero
                    }
                    let k = flat(shape, i);
                    us[k] += dt
                        * (lap[k] + n_faces.comp(d)[k] * gphi.comp(d)[k] + force.comp(d)[k]);
                }
            }
        }
    }
    let (u_new, phi_p, iters) = project_with_iters(&u_star, psolve)?;
    let p_new = phi_p.map(|v| v / dt);
    let div_max = divergence(&u_new).max_abs();
    let report = StokesStepReport {
        div_max_after: div_max,
        poisson_iterations: iters,
        dt_used: dt,
    };
    let mut next = state.clone();
    next.u = u_new;
    next.p = p_new;
    Ok((next, report))
}

/// Kinetic energy `0.5 * integral |u|^2` over all faces.
pub fn kinetic_energy(u: &VectorField) -> f64 {
    0.5 * fields::vector_inner(u, u)
}
