//! Uniform Cartesian MAC-grid containers and the discrete differential
//! operators.
//!
//! Scalars (`n`, `c`, `P`) are cell-centered, vectors (`u`, fluxes) are
//! face-centered with one extra entry along their own axis. Boundary
//! conditions are realized through ghost values: mirror for homogeneous
//! Neumann, negation for homogeneous Dirichlet. On this layout the discrete
//! gradient and divergence are exact adjoints up to sign, and
//! `laplacian = divergence . gradient` holds as a stencil identity for
//! Neumann fields.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Boundary-condition tag for cell-centered scalar fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcTag {
    /// Homogeneous Neumann: ghost mirrors the adjacent cell.
    NeumannZero,
    /// Homogeneous Dirichlet: ghost negates the adjacent cell.
    DirichletZero,
}

/// Boundary-condition tag for face-centered vector fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VecBc {
    /// No-slip: all boundary-face normal components are exactly zero.
    DirichletZero,
    /// Zero normal flux through boundary faces.
    FluxZero,
}

/// Uniform Cartesian box discretization, 2D or 3D.
///
/// Unused axes carry a single cell so that all loops can run over three
/// nominal axes; operators only touch axes `< dim`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    cells: [usize; 3],
    lengths: [f64; 3],
}

impl Grid {
    pub fn new(dim: usize, cells: &[usize], lengths: &[f64]) -> Result<Grid> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidParameter("grid dim must be 2 or 3"));
        }
        if cells.len() != dim || lengths.len() != dim {
            return Err(Error::InvalidParameter(
                "grid cells/lengths must have one entry per axis",
            ));
        }
        let mut c = [1usize; 3];
        let mut l = [1.0f64; 3];
        for d in 0..dim {
            if cells[d] < 4 {
                return Err(Error::InvalidParameter("cells_per_axis must be >= 4"));
            }
            if !(lengths[d] > 0.0) || !lengths[d].is_finite() {
                return Err(Error::InvalidParameter("box length must be positive"));
            }
            c[d] = cells[d];
            l[d] = lengths[d];
        }
        Ok(Grid {
            dim,
            cells: c,
            lengths: l,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cell counts per nominal axis (unused axes report 1).
    #[inline]
    pub fn counts(&self) -> [usize; 3] {
        self.cells
    }

    #[inline]
    pub fn cells(&self, axis: usize) -> usize {
        self.cells[axis]
    }

    #[inline]
    pub fn length(&self, axis: usize) -> f64 {
        self.lengths[axis]
    }

    #[inline]
    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.cells[axis] as f64
    }

    pub fn min_spacing(&self) -> f64 {
        let mut h = f64::INFINITY;
        for d in 0..self.dim {
            h = math::min(h, self.spacing(d));
        }
        h
    }

    #[inline]
    pub fn cell_count(&self) -> usize {
        self.cells[0] * self.cells[1] * self.cells[2]
    }

    #[inline]
    pub fn cell_volume(&self) -> f64 {
        let mut v = 1.0;
        for d in 0..self.dim {
            v *= self.spacing(d);
        }
        v
    }

    pub fn volume(&self) -> f64 {
        let mut v = 1.0;
        for d in 0..self.dim {
            v *= self.lengths[d];
        }
        v
    }

    /// Flat index of a cell, row-major with the last axis fastest.
    #[inline]
    pub fn cell_idx(&self, i: [usize; 3]) -> usize {
        (i[0] * self.cells[1] + i[1]) * self.cells[2] + i[2]
    }

    /// Shape of the face array for component `axis` (one extra entry there).
    #[inline]
    pub fn face_shape(&self, axis: usize) -> [usize; 3] {
        let mut s = self.cells;
        s[axis] += 1;
        s
    }

    #[inline]
    pub fn face_count(&self, axis: usize) -> usize {
        let s = self.face_shape(axis);
        s[0] * s[1] * s[2]
    }

    /// Physical coordinates of a cell center.
    #[inline]
    pub fn cell_center(&self, i: [usize; 3]) -> [f64; 3] {
        let mut x = [0.0; 3];
        for d in 0..self.dim {
            x[d] = (i[d] as f64 + 0.5) * self.spacing(d);
        }
        x
    }

    /// Physical coordinates of a face center for component `axis`.
    #[inline]
    pub fn face_center(&self, axis: usize, i: [usize; 3]) -> [f64; 3] {
        let mut x = [0.0; 3];
        for d in 0..self.dim {
            x[d] = if d == axis {
                i[d] as f64 * self.spacing(d)
            } else {
                (i[d] as f64 + 0.5) * self.spacing(d)
            };
        }
        x
    }
}

/// Flat index into an array of the given shape, row-major, last axis fastest.
#[inline]
pub(crate) fn flat(shape: [usize; 3], i: [usize; 3]) -> usize {
    (i[0] * shape[1] + i[1]) * shape[2] + i[2]
}

/// Cell-centered scalar field with one real per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    bc: BcTag,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn constant(grid: Grid, bc: BcTag, value: f64) -> ScalarField {
        ScalarField {
            grid,
            bc,
            values: vec![value; grid.cell_count()],
        }
    }

    pub fn zeros(grid: Grid, bc: BcTag) -> ScalarField {
        Self::constant(grid, bc, 0.0)
    }

    /// Sample a function of the cell-center coordinates.
    pub fn from_fn(grid: Grid, bc: BcTag, mut f: impl FnMut([f64; 3]) -> f64) -> ScalarField {
        let mut s = ScalarField::zeros(grid, bc);
        let nc = grid.counts();
        for i0 in 0..nc[0] {
            for i1 in 0..nc[1] {
                for i2 in 0..nc[2] {
                    let i = [i0, i1, i2];
                    s.values[grid.cell_idx(i)] = f(grid.cell_center(i));
                }
            }
        }
        s
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn bc(&self) -> BcTag {
        self.bc
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, i: [usize; 3]) -> f64 {
        self.values[self.grid.cell_idx(i)]
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |a, &b| math::min(a, b))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, &b| math::max(a, math::abs(b)))
    }

    /// Pointwise map into a new field with the same grid and tag.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            bc: self.bc,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Subtract the mean value (in-place), returning the removed mean.
    pub fn remove_mean(&mut self) -> f64 {
        let mean = self.values.iter().sum::<f64>() / self.values.len() as f64;
        for v in &mut self.values {
            *v -= mean;
        }
        mean
    }
}

/// Face-centered (staggered/MAC) vector field; component `d` has one extra
/// entry along axis `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: Grid,
    bc: VecBc,
    comps: [Vec<f64>; 3],
}

impl VectorField {
    pub fn zeros(grid: Grid, bc: VecBc) -> VectorField {
        let mut comps = [Vec::new(), Vec::new(), Vec::new()];
        for (d, c) in comps.iter_mut().enumerate().take(grid.dim()) {
            *c = vec![0.0; grid.face_count(d)];
        }
        VectorField { grid, bc, comps }
    }

    /// Sample a per-component function of the face-center coordinates.
    /// Boundary-normal faces are zeroed afterwards when the tag requires it.
    pub fn from_fn(
        grid: Grid,
        bc: VecBc,
        mut f: impl FnMut(usize, [f64; 3]) -> f64,
    ) -> VectorField {
        let mut v = VectorField::zeros(grid, bc);
        for d in 0..grid.dim() {
            let shape = grid.face_shape(d);
            for i0 in 0..shape[0] {
                for i1 in 0..shape[1] {
                    for i2 in 0..shape[2] {
                        let i = [i0, i1, i2];
                        v.comps[d][flat(shape, i)] = f(d, grid.face_center(d, i));
                    }
                }
            }
        }
        if bc == VecBc::DirichletZero {
            v.zero_boundary_normal();
        }
        v
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn bc(&self) -> VecBc {
        self.bc
    }

    #[inline]
    pub fn comp(&self, axis: usize) -> &[f64] {
        &self.comps[axis]
    }

    #[inline]
    pub fn comp_mut(&mut self, axis: usize) -> &mut [f64] {
        &mut self.comps[axis]
    }

    /// Zero every boundary-normal face (the no-slip / no-flux contract).
    pub fn zero_boundary_normal(&mut self) {
        let g = self.grid;
        for d in 0..g.dim() {
            let shape = g.face_shape(d);
            for i0 in 0..shape[0] {
                for i1 in 0..shape[1] {
                    for i2 in 0..shape[2] {
                        let i = [i0, i1, i2];
                        if i[d] == 0 || i[d] == g.cells(d) {
                            self.comps[d][flat(shape, i)] = 0.0;
                        }
                    }
                }
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0;
        for d in 0..self.grid.dim() {
            for &v in &self.comps[d] {
                m = math::max(m, math::abs(v));
            }
        }
        m
    }
}

/// Discrete gradient: face-centered differences `(s[i] - s[i-1]) / h`.
///
/// Boundary faces follow the scalar's tag: Neumann ghosts mirror, so the
/// boundary-face gradient is zero; Dirichlet ghosts negate.
pub fn gradient(s: &ScalarField) -> VectorField {
    let g = s.grid();
    let out_bc = match s.bc() {
        BcTag::NeumannZero => VecBc::DirichletZero,
        BcTag::DirichletZero => VecBc::FluxZero,
    };
    let mut out = VectorField::zeros(g, out_bc);
    let c = g.counts();
    let sv = s.values();
    for d in 0..g.dim() {
        let h = g.spacing(d);
        let shape = g.face_shape(d);
        let stride = cell_stride(c, d);
        let comp = &mut out.comps[d];
        // interior faces, row-base indexing: right cell shares the face index
        // along axis d, left cell sits one cell stride below
        let mut start = [0usize; 3];
        start[d] = 1;
        for i0 in start[0]..c[0] {
            for i1 in start[1]..c[1] {
                let frow = (i0 * shape[1] + i1) * shape[2];
                let crow = (i0 * c[1] + i1) * c[2];
                for i2 in start[2]..c[2] {
                    let r = crow + i2;
                    comp[frow + i2] = (sv[r] - sv[r - stride]) / h;
                }
            }
        }
        // boundary faces: zero for Neumann (already), mirror-negated ghosts
        // for Dirichlet
        if s.bc() == BcTag::DirichletZero {
            let n = g.cells(d);
            for i0 in 0..shape[0] {
                for i1 in 0..shape[1] {
                    for i2 in 0..shape[2] {
                        let i = [i0, i1, i2];
                        if i[d] == 0 {
                            let mut cc = i;
                            cc[d] = 0;
                            comp[flat(shape, i)] = 2.0 * sv[g.cell_idx(cc)] / h;
                        } else if i[d] == n {
                            let mut cc = i;
                            cc[d] = n - 1;
                            comp[flat(shape, i)] = -2.0 * sv[g.cell_idx(cc)] / h;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Flat-index stride of one step along `axis` in a cell-centered array.
#[inline]
pub(crate) fn cell_stride(counts: [usize; 3], axis: usize) -> usize {
    match axis {
        0 => counts[1] * counts[2],
        1 => counts[2],
        _ => 1,
    }
}

/// Discrete divergence: cell-centered sum of per-axis face differences.
pub fn divergence(v: &VectorField) -> ScalarField {
    let g = v.grid();
    let mut out = ScalarField::zeros(g, BcTag::NeumannZero);
    let nc = g.counts();
    let [c0, c1, c2] = nc;
    let h0 = g.spacing(0);
    let h1 = g.spacing(1);
    let v0 = &v.comps[0];
    let v1 = &v.comps[1];
    let vals = out.values_mut();
    if g.dim() == 2 {
        for i0 in 0..c0 {
            for i1 in 0..c1 {
                for i2 in 0..c2 {
                    // axis-0 faces index like cells below the face
                    let k = (i0 * c1 + i1) * c2 + i2;
                    let f1 = (i0 * (c1 + 1) + i1) * c2 + i2;
                    let mut div = 0.0;
                    div += (v0[k + c1 * c2] - v0[k]) / h0;
                    div += (v1[f1 + c2] - v1[f1]) / h1;
                    vals[k] = div;
                }
            }
        }
    } else {
        let h2 = g.spacing(2);
        let v2 = &v.comps[2];
        for i0 in 0..c0 {
            for i1 in 0..c1 {
                for i2 in 0..c2 {
                    let k = (i0 * c1 + i1) * c2 + i2;
                    let f1 = (i0 * (c1 + 1) + i1) * c2 + i2;
                    let f2 = (i0 * c1 + i1) * (c2 + 1) + i2;
                    let mut div = 0.0;
                    div += (v0[k + c1 * c2] - v0[k]) / h0;
                    div += (v1[f1 + c2] - v1[f1]) / h1;
                    div += (v2[f2 + 1] - v2[f2]) / h2;
                    vals[k] = div;
                }
            }
        }
    }
    out
}

/// Discrete Laplacian with ghost values set by the field's tag.
pub fn laplacian(s: &ScalarField) -> ScalarField {
    // literal composition keeps the stencil identity exact to the bit
    let mut out = divergence(&gradient(s));
    out.bc = s.bc();
    out
}

/// Midpoint-rule integral: sum of cell values times cell volume.
pub fn integrate(s: &ScalarField) -> f64 {
    s.values().iter().sum::<f64>() * s.grid().cell_volume()
}

/// `L^p` norm, `p >= 1`; pass `f64::INFINITY` for the sup norm.
pub fn lp_norm(s: &ScalarField, p: f64) -> Result<f64> {
    if p.is_infinite() && p > 0.0 {
        return Ok(s.max_abs());
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter("lp_norm requires p >= 1 or infinity"));
    }
    let vol = s.grid().cell_volume();
    let sum: f64 = s
        .values()
        .iter()
        .map(|&v| math::pow(math::abs(v), p))
        .sum();
    Ok(math::pow(sum * vol, 1.0 / p))
}

/// Cell-volume-weighted inner product of two scalar fields.
pub fn scalar_inner(a: &ScalarField, b: &ScalarField) -> f64 {
    let vol = a.grid().cell_volume();
    a.values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| x * y)
        .sum::<f64>()
        * vol
}

/// Cell-volume-weighted inner product over all faces of two vector fields.
pub fn vector_inner(a: &VectorField, b: &VectorField) -> f64 {
    let vol = a.grid().cell_volume();
    let mut acc = 0.0;
    for d in 0..a.grid().dim() {
        acc += a
            .comp(d)
            .iter()
            .zip(b.comp(d))
            .map(|(&x, &y)| x * y)
            .sum::<f64>();
    }
    acc * vol
}

/// Arithmetic face average of a cell-centered field; boundary faces take the
/// adjacent cell value.
pub fn interpolate_to_faces(s: &ScalarField, bc: VecBc) -> VectorField {
    let g = s.grid();
    let mut out = VectorField::zeros(g, bc);
    for d in 0..g.dim() {
        let shape = g.face_shape(d);
        let n = g.cells(d);
        for i0 in 0..shape[0] {
            for i1 in 0..shape[1] {
                for i2 in 0..shape[2] {
                    let i = [i0, i1, i2];
                    let k = i[d];
                    let val = if k == 0 {
                        let mut c = i;
                        c[d] = 0;
                        s.at(c)
                    } else if k == n {
                        let mut c = i;
                        c[d] = n - 1;
                        s.at(c)
                    } else {
                        let mut r = i;
                        r[d] = k;
                        let mut l = i;
                        l[d] = k - 1;
                        0.5 * (s.at(l) + s.at(r))
                    };
                    out.comps[d][flat(shape, i)] = val;
                }
            }
        }
    }
    out
}
