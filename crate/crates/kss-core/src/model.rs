//! Model configuration: the saturated sensitivity law, gravitational
//! potential, external forcing, and initial-data generators.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fields::{BcTag, Grid, ScalarField, VecBc, VectorField};
use crate::math;
use crate::stokes::{self, PoissonSolveParams};
use crate::transport::SimState;

/// Gravitational potential descriptor; only the gradient enters the
/// momentum balance, so a linear potential is stored as its constant
/// gradient vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PhiSpec {
    Zero,
    /// phi = g . x with constant gravity vector g.
    Linear { gravity: [f64; 3] },
}

/// Bounded external fluid forcing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ForcingSpec {
    Zero,
    Constant { amplitude: [f64; 3] },
    /// a * sin(omega * t), componentwise constant in space.
    Periodic { amplitude: [f64; 3], omega: f64 },
}

impl ForcingSpec {
    /// Componentwise value at time `t`.
    pub fn value_at(&self, t: f64) -> [f64; 3] {
        match *self {
            ForcingSpec::Zero => [0.0; 3],
            ForcingSpec::Constant { amplitude } => amplitude,
            ForcingSpec::Periodic { amplitude, omega } => {
                let s = math::sin(omega * t);
                [amplitude[0] * s, amplitude[1] * s, amplitude[2] * s]
            }
        }
    }

    /// Declared sup-norm amplitude over all times.
    pub fn sup_amplitude(&self) -> f64 {
        match *self {
            ForcingSpec::Zero => 0.0,
            ForcingSpec::Constant { amplitude } | ForcingSpec::Periodic { amplitude, .. } => {
                amplitude.iter().fold(0.0, |a, &b| math::max(a, math::abs(b)))
            }
        }
    }
}

/// Physical model parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    /// Sensitivity decay exponent, >= 0.
    pub alpha: f64,
    /// Sensitivity amplitude, > 0.
    pub kappa_s: f64,
    pub phi: PhiSpec,
    pub forcing: ForcingSpec,
    pub fluid_enabled: bool,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidParameter("alpha must be >= 0 and finite"));
        }
        if !(self.kappa_s > 0.0) || !self.kappa_s.is_finite() {
            return Err(Error::InvalidParameter("kappa_s must be > 0 and finite"));
        }
        if !self.forcing.sup_amplitude().is_finite() {
            return Err(Error::InvalidParameter("forcing amplitude must be finite"));
        }
        Ok(())
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            alpha: 0.6,
            kappa_s: 1.0,
            phi: PhiSpec::Zero,
            forcing: ForcingSpec::Zero,
            fluid_enabled: false,
        }
    }
}

/// The prototype saturated sensitivity `kappa_s * (n + 1)^(-alpha)`.
///
/// Strictly positive and nonincreasing in `n`; a negative `n` is rejected
/// because it signals a positivity violation upstream.
pub fn sensitivity(n_value: f64, params: &ModelParams) -> Result<f64> {
    if n_value < 0.0 {
        return Err(Error::NegativeDensity(n_value));
    }
    Ok(sensitivity_raw(n_value, params))
}

/// Unchecked variant for hot loops where `n >= 0` holds by invariant.
#[inline]
pub(crate) fn sensitivity_raw(n_value: f64, params: &ModelParams) -> f64 {
    if params.alpha == 0.0 {
        return params.kappa_s;
    }
    params.kappa_s * math::pow(n_value + 1.0, -params.alpha)
}

/// Gradient of the gravitational potential as a face field (constant for a
/// linear potential, zero otherwise).
pub fn eval_phi_gradient(params: &ModelParams, grid: Grid) -> VectorField {
    match params.phi {
        PhiSpec::Zero => VectorField::zeros(grid, VecBc::FluxZero),
        PhiSpec::Linear { gravity } => {
            VectorField::from_fn(grid, VecBc::FluxZero, |d, _| gravity[d])
        }
    }
}

/// Forcing field at time `t`.
pub fn eval_forcing(params: &ModelParams, grid: Grid, t: f64) -> VectorField {
    let v = params.forcing.value_at(t);
    if v == [0.0; 3] {
        return VectorField::zeros(grid, VecBc::FluxZero);
    }
    VectorField::from_fn(grid, VecBc::FluxZero, |d, _| v[d])
}

/// One Gaussian bump of a scalar initial profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bump {
    pub center: [f64; 3],
    pub width: f64,
    pub amplitude: f64,
}

/// Nonnegative scalar initial-data descriptor.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarSpec {
    Constant(f64),
    /// Sum of Gaussian bumps on a constant floor.
    Bumps { bumps: Vec<Bump>, floor: f64 },
}

impl ScalarSpec {
    fn eval(&self, grid: Grid, x: [f64; 3]) -> f64 {
        match self {
            ScalarSpec::Constant(v) => *v,
            ScalarSpec::Bumps { bumps, floor } => {
                let mut v = *floor;
                for b in bumps {
                    let mut r2 = 0.0;
                    for d in 0..grid.dim() {
                        let dx = x[d] - b.center[d];
                        r2 += dx * dx;
                    }
                    v += b.amplitude * math::exp(-r2 / (2.0 * b.width * b.width));
                }
                v
            }
        }
    }
}

/// Divergence-free initial velocity descriptor.
#[derive(Clone, Debug, PartialEq)]
pub enum VectorSpec {
    Zero,
    /// Smooth random Fourier modes, projected divergence-free.
    ProjectedRandom {
        amplitude: f64,
        modes: usize,
        seed: u64,
    },
}

/// Initial-data descriptors for (n0, c0, u0).
#[derive(Clone, Debug, PartialEq)]
pub struct InitialData {
    pub n0: ScalarSpec,
    pub c0: ScalarSpec,
    pub u0: VectorSpec,
}

impl InitialData {
    pub fn zero() -> InitialData {
        InitialData {
            n0: ScalarSpec::Constant(0.0),
            c0: ScalarSpec::Constant(0.0),
            u0: VectorSpec::Zero,
        }
    }
}

/// Build the initial [`SimState`]: nonnegative `n0`, `c0`, a projected
/// divergence-free `u0`, zero pressure, clock at zero.
pub fn build_initial_state(
    init: &InitialData,
    params: &ModelParams,
    grid: Grid,
    psolve: &PoissonSolveParams,
) -> Result<SimState> {
    params.validate()?;
    let n = ScalarField::from_fn(grid, BcTag::NeumannZero, |x| init.n0.eval(grid, x));
    if n.min_value() < 0.0 {
        return Err(Error::InvalidInitialData("n0 descriptor produced a negative value"));
    }
    let c = ScalarField::from_fn(grid, BcTag::NeumannZero, |x| init.c0.eval(grid, x));
    if c.min_value() < 0.0 {
        return Err(Error::InvalidInitialData("c0 descriptor produced a negative value"));
    }
    let u = match &init.u0 {
        VectorSpec::Zero => VectorField::zeros(grid, VecBc::DirichletZero),
        VectorSpec::ProjectedRandom {
            amplitude,
            modes,
            seed,
        } => {
            let raw = random_smooth_field(grid, *amplitude, *modes, *seed);
            let (proj, _) = stokes::project_divergence_free(&raw, psolve)?;
            let div_max = crate::fields::divergence(&proj).max_abs();
            if div_max > 1e-8 {
                return Err(Error::SolverFailure {
                    residual: div_max,
                    iterations: 0,
                });
            }
            proj
        }
    };
    let p = ScalarField::zeros(grid, BcTag::NeumannZero);
    Ok(SimState { t: 0.0, n, c, u, p })
}

/// Superposition of a few low-wavenumber Fourier modes with seeded random
/// coefficients; boundary-normal faces are zeroed before projection.
fn random_smooth_field(grid: Grid, amplitude: f64, modes: usize, seed: u64) -> VectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = grid.dim();
    // (component, wavevector, phase per axis, coefficient)
    let mut coeffs: Vec<(usize, [f64; 3], [f64; 3], f64)> = Vec::new();
    for _ in 0..modes.max(1) {
        for d in 0..dim {
            let mut k = [0.0; 3];
            let mut ph = [0.0; 3];
            for a in 0..dim {
                k[a] = rng.gen_range(1..=3) as f64;
                ph[a] = rng.gen_range(0.0..core::f64::consts::TAU);
            }
            let c = rng.gen_range(-1.0..1.0) * amplitude / modes.max(1) as f64;
            coeffs.push((d, k, ph, c));
        }
    }
    let mut v = VectorField::from_fn(grid, VecBc::DirichletZero, |d, x| {
        let mut acc = 0.0;
        for (cd, k, ph, c) in &coeffs {
            if *cd != d {
                continue;
            }
            let mut val = *c;
            for a in 0..dim {
                val *= math::sin(core::f64::consts::PI * k[a] * x[a] / grid.length(a) + ph[a]);
            }
            acc += val;
        }
        acc
    });
    v.zero_boundary_normal();
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{divergence, integrate};
    use proptest::prelude::*;

    fn params(alpha: f64, kappa_s: f64) -> ModelParams {
        ModelParams {
            alpha,
            kappa_s,
            ..ModelParams::default()
        }
    }

    #[test]
    fn sensitivity_examples() {
        assert_eq!(sensitivity(0.0, &params(0.7, 1.0)).unwrap(), 1.0);
        assert!((sensitivity(3.0, &params(1.0, 1.0)).unwrap() - 0.25).abs() < 1e-15);
        assert!((sensitivity(7.0, &params(1.0 / 3.0, 2.0)).unwrap() - 1.0).abs() < 1e-14);
        assert!(matches!(
            sensitivity(-0.1, &params(0.5, 1.0)),
            Err(Error::NegativeDensity(_))
        ));
    }

    #[test]
    fn phi_gradient_examples() {
        let g = Grid::new(3, &[4, 4, 4], &[1.0, 1.0, 1.0]).unwrap();
        let mut p = ModelParams::default();
        assert_eq!(eval_phi_gradient(&p, g).max_abs(), 0.0);
        p.phi = PhiSpec::Linear {
            gravity: [0.0, 0.0, -1.0],
        };
        let v = eval_phi_gradient(&p, g);
        assert!(v.comp(2).iter().all(|&x| x == -1.0));
        assert!(v.comp(0).iter().all(|&x| x == 0.0));
        // independent of resolution
        let g2 = Grid::new(3, &[8, 8, 8], &[1.0, 1.0, 1.0]).unwrap();
        p.phi = PhiSpec::Linear {
            gravity: [1.0, 2.0, 0.0],
        };
        let v2 = eval_phi_gradient(&p, g2);
        assert!(v2.comp(0).iter().all(|&x| x == 1.0));
        assert!(v2.comp(1).iter().all(|&x| x == 2.0));
    }

    #[test]
    fn forcing_examples() {
        let g = Grid::new(2, &[4, 4], &[1.0, 1.0]).unwrap();
        let mut p = ModelParams::default();
        assert_eq!(eval_forcing(&p, g, 3.0).max_abs(), 0.0);
        p.forcing = ForcingSpec::Constant {
            amplitude: [1.0, 0.0, 0.0],
        };
        let v = eval_forcing(&p, g, 17.0);
        assert!(v.comp(0).iter().all(|&x| x == 1.0));
        p.forcing = ForcingSpec::Periodic {
            amplitude: [1.0, 0.0, 0.0],
            omega: core::f64::consts::TAU,
        };
        let v = eval_forcing(&p, g, 0.25);
        assert!(v.comp(0).iter().all(|&x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn forcing_sup_bounded_by_amplitude() {
        let f = ForcingSpec::Periodic {
            amplitude: [0.7, -0.2, 0.0],
            omega: 3.1,
        };
        let amp = f.sup_amplitude();
        for k in 0..1000 {
            let t = k as f64 * 0.037;
            let v = f.value_at(t);
            for c in v {
                assert!(c.abs() <= amp + 1e-15);
            }
        }
    }

    #[test]
    fn zero_initial_state() {
        let g = Grid::new(2, &[8, 8], &[1.0, 1.0]).unwrap();
        let s = build_initial_state(
            &InitialData::zero(),
            &ModelParams::default(),
            g,
            &PoissonSolveParams::default(),
        )
        .unwrap();
        assert_eq!(s.t, 0.0);
        assert_eq!(s.n.max_abs(), 0.0);
        assert_eq!(s.c.max_abs(), 0.0);
        assert_eq!(s.u.max_abs(), 0.0);
    }

    #[test]
    fn constant_n0_mass() {
        let g = Grid::new(2, &[16, 16], &[1.0, 1.0]).unwrap();
        let init = InitialData {
            n0: ScalarSpec::Constant(2.0),
            ..InitialData::zero()
        };
        let s =
            build_initial_state(&init, &ModelParams::default(), g, &PoissonSolveParams::default())
                .unwrap();
        assert!((integrate(&s.n) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn projected_random_u0_is_divergence_free() {
        let g = Grid::new(2, &[32, 32], &[1.0, 1.0]).unwrap();
        let init = InitialData {
            u0: VectorSpec::ProjectedRandom {
                amplitude: 1.0,
                modes: 3,
                seed: 42,
            },
            ..InitialData::zero()
        };
        let s =
            build_initial_state(&init, &ModelParams::default(), g, &PoissonSolveParams::default())
                .unwrap();
        assert!(s.u.max_abs() > 0.0, "field should be nontrivial");
        assert!(divergence(&s.u).max_abs() <= 1e-8);
    }

    #[test]
    fn negative_descriptor_rejected() {
        let g = Grid::new(2, &[8, 8], &[1.0, 1.0]).unwrap();
        let init = InitialData {
            n0: ScalarSpec::Constant(-1.0),
            ..InitialData::zero()
        };
        assert!(matches!(
            build_initial_state(&init, &ModelParams::default(), g, &PoissonSolveParams::default()),
            Err(Error::InvalidInitialData(_))
        ));
    }

    proptest! {
        #[test]
        fn sensitivity_nonincreasing(
            alpha in 0.0f64..3.0,
            kappa in 0.01f64..10.0,
            n1 in 0.0f64..1e6,
            dn in 0.0f64..1e6,
        ) {
            let p = params(alpha, kappa);
            let s1 = sensitivity(n1, &p).unwrap();
            let s2 = sensitivity(n1 + dn, &p).unwrap();
            prop_assert!(s1 > 0.0);
            prop_assert!(s2 <= s1 + 1e-15);
            // the prototype saturates the bound with equality
            let bound = kappa * crate::math::pow(n1 + 1.0, -alpha);
            prop_assert!((s1 - bound).abs() <= 1e-12 * bound);
        }
    }
}
