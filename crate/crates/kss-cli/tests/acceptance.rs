//! End-to-end acceptance suite. Each test checks one numbered criterion at
//! its stated tolerance and prints a `criterion NN ...: pass` line (visible
//! with `--nocapture`); a panic is the fail line.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kss_cli::config::{parse_run_config, parse_sweep_spec};
use kss_cli::run::{run_simulation, RunOutcome, EXIT_COMPLETED, EXIT_DT_COLLAPSED, EXIT_GROWTH};
use kss_core::diagnostics::{sliding_i, testing_identity_residual};
use kss_core::fields::{divergence, gradient, integrate, laplacian, BcTag, Grid, ScalarField, VecBc, VectorField};
use kss_core::model::{build_initial_state, Bump, ForcingSpec, InitialData, PhiSpec, ScalarSpec, VectorSpec};
use kss_core::odelemma::{lemma1_bound, run_campaign, OdeBoundProblem};
use kss_core::stokes::{project_divergence_free, solve_poisson_neumann};
use kss_core::transport::{advance, step_c, step_n, SimState, StepControl};
use kss_core::{ModelParams, PoissonSolveParams};

const PI: f64 = std::f64::consts::PI;

fn preset_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets").join(name)
}

fn load_preset(name: &str) -> kss_cli::config::RunConfig {
    let text = std::fs::read_to_string(preset_path(name)).unwrap();
    parse_run_config(&text).unwrap()
}

fn bump_state(grid: Grid) -> SimState {
    let init = InitialData {
        n0: ScalarSpec::Bumps {
            bumps: vec![Bump {
                center: [0.4, 0.6, 0.0],
                width: 0.12,
                amplitude: 5.0,
            }],
            floor: 0.5,
        },
        c0: ScalarSpec::Constant(1.0),
        u0: VectorSpec::Zero,
    };
    build_initial_state(&init, &ModelParams::default(), grid, &PoissonSolveParams::default())
        .unwrap()
}

/// The two full-length criticality runs, shared between criteria 4 and 9.
fn criticality_runs() -> &'static (RunOutcome, RunOutcome, tempfile::TempDir) {
    static RUNS: OnceLock<(RunOutcome, RunOutcome, tempfile::TempDir)> = OnceLock::new();
    RUNS.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let mut agg = load_preset("aggregation.cfg");
        agg.output_dir = dir.path().join("aggregation");
        let mut blow = load_preset("blowup.cfg");
        blow.output_dir = dir.path().join("blowup");
        let agg_out = run_simulation(&agg, true).unwrap();
        let blow_out = run_simulation(&blow, true).unwrap();
        (agg_out, blow_out, dir)
    })
}

#[test]
fn criterion_01_mass_conservation() {
    let grid = Grid::new(2, &[64, 64], &[1.0, 1.0]).unwrap();
    let mut state = bump_state(grid);
    let params = ModelParams::default();
    let ctl = StepControl::default();
    let psolve = PoissonSolveParams::default();
    let m0 = integrate(&state.n);
    assert!(m0 > 0.0);
    for step in 0..1000 {
        let (next, _) = advance(&state, &params, &ctl, &psolve).unwrap();
        state = next;
        let drift = (integrate(&state.n) - m0).abs() / m0;
        assert!(drift <= 1e-11, "step {step}: relative mass drift {drift:e}");
    }
    println!("criterion 01 mass conservation: pass");
}

#[test]
fn criterion_02_signal_mass_bound_and_recursion() {
    let grid = Grid::new(2, &[32, 32], &[1.0, 1.0]).unwrap();
    let init = InitialData {
        n0: ScalarSpec::Bumps {
            bumps: vec![Bump {
                center: [0.5, 0.4, 0.0],
                width: 0.12,
                amplitude: 8.0,
            }],
            floor: 0.2,
        },
        c0: ScalarSpec::Constant(2.0),
        u0: VectorSpec::ProjectedRandom {
            amplitude: 0.3,
            modes: 3,
            seed: 11,
        },
    };
    let params = ModelParams {
        fluid_enabled: true,
        phi: PhiSpec::Linear {
            gravity: [0.0, -0.5, 0.0],
        },
        ..ModelParams::default()
    };
    let psolve = PoissonSolveParams::default();
    let mut state = build_initial_state(&init, &params, grid, &psolve).unwrap();
    let ctl = StepControl::default();
    let mn0 = integrate(&state.n);
    let mc0 = integrate(&state.c);
    let bound = mn0.max(mc0) + 1e-10 * mn0.max(mc0).max(1.0);
    for step in 0..300 {
        let mc = integrate(&state.c);
        let (next, report) = advance(&state, &params, &ctl, &psolve).unwrap();
        let predicted = (1.0 - report.dt) * mc + report.dt * integrate(&next.n);
        let got = integrate(&next.c);
        let rel = (got - predicted).abs() / predicted.abs().max(1.0);
        assert!(rel <= 1e-12, "step {step}: recursion defect {rel:e}");
        assert!(got <= bound, "step {step}: signal mass {got} above {bound}");
        state = next;
    }
    println!("criterion 02 signal mass bound and recursion: pass");
}

#[test]
fn criterion_03_incompressibility_and_projection_idempotence() {
    // divergence stays at projection tolerance along a forced fluid run
    let grid = Grid::new(2, &[32, 32], &[1.0, 1.0]).unwrap();
    let init = InitialData {
        n0: ScalarSpec::Constant(1.0),
        c0: ScalarSpec::Constant(1.0),
        u0: VectorSpec::ProjectedRandom {
            amplitude: 0.5,
            modes: 3,
            seed: 5,
        },
    };
    let params = ModelParams {
        fluid_enabled: true,
        phi: PhiSpec::Linear {
            gravity: [0.0, -1.0, 0.0],
        },
        forcing: ForcingSpec::Periodic {
            amplitude: [0.2, 0.0, 0.0],
            omega: 5.0,
        },
        ..ModelParams::default()
    };
    let psolve = PoissonSolveParams::default();
    let mut state = build_initial_state(&init, &params, grid, &psolve).unwrap();
    let ctl = StepControl::default();
    for step in 0..300 {
        let (next, _) = advance(&state, &params, &ctl, &psolve).unwrap();
        state = next;
        let div = divergence(&state.u).max_abs();
        assert!(div <= 1e-6, "step {step}: max |div u| = {div:e}");
    }

    // projecting twice changes nothing beyond solver tolerance
    let mut rng = ChaCha8Rng::seed_from_u64(20260824);
    for case in 0..50 {
        let mut v = VectorField::zeros(grid, VecBc::DirichletZero);
        for d in 0..2 {
            for f in v.comp_mut(d) {
                *f = rng.gen_range(-1.0..1.0);
            }
        }
        v.zero_boundary_normal();
        let (p1, _) = project_divergence_free(&v, &psolve).unwrap();
        let (p2, _) = project_divergence_free(&p1, &psolve).unwrap();
        let mut dev = 0.0f64;
        for d in 0..2 {
            for (&a, &b) in p1.comp(d).iter().zip(p2.comp(d)) {
                dev = dev.max((a - b).abs());
            }
        }
        assert!(dev <= 1e-8, "case {case}: re-projection moved by {dev:e}");
    }
    println!("criterion 03 incompressibility and projection idempotence: pass");
}

#[test]
fn criterion_04_positivity_across_presets() {
    // every preset must parse; the sweep spec too
    for name in ["aggregation.cfg", "blowup.cfg", "fluid_off_baseline.cfg", "forced_fluid.cfg"] {
        load_preset(name);
    }
    let sweep_text = std::fs::read_to_string(preset_path("alpha_sweep.cfg")).unwrap();
    parse_sweep_spec(&sweep_text).unwrap();

    let mut summaries = Vec::new();
    let (agg, blow, _) = criticality_runs();
    summaries.push(("aggregation", agg.summary.clone()));
    summaries.push(("blowup", blow.summary.clone()));
    // fluid presets on a short smoke horizon: positivity is a per-step
    // property, not a horizon property
    let dir = tempfile::tempdir().unwrap();
    for name in ["fluid_off_baseline.cfg", "forced_fluid.cfg"] {
        let mut cfg = load_preset(name);
        cfg.t_end = 0.05;
        cfg.output_dir = dir.path().join(name);
        let out = run_simulation(&cfg, true).unwrap();
        assert_eq!(out.exit_code, EXIT_COMPLETED, "{name} did not complete");
        summaries.push((name, out.summary));
    }
    for (name, s) in &summaries {
        assert!(s.min_n >= 0.0, "{name}: min n = {}", s.min_n);
        assert!(s.min_c >= 0.0, "{name}: min c = {}", s.min_c);
        assert!(
            s.clip_fraction < 1e-3,
            "{name}: clip fraction {} over 0.1%",
            s.clip_fraction
        );
    }
    println!("criterion 04 positivity across presets: pass");
}

#[test]
fn criterion_05_ode_lemma_campaign_and_formula() {
    let (verified, rejected) = run_campaign(100, 20260824, 20_000).unwrap();
    assert_eq!(verified + rejected, 100);
    assert!(verified >= 90, "only {verified} of 100 cases verified");

    let base = OdeBoundProblem {
        a: 1.0,
        b: 1.0,
        gamma: 2.0,
        tau: 1.0,
        t_star: 0.0,
        t_end: 5.0,
        y_start: 0.0,
    };
    let r = lemma1_bound(&base).unwrap();
    assert_eq!((r.c_const, r.y_bound, r.g_window_bound), (1.0, 2.0, 3.0));
    let r = lemma1_bound(&OdeBoundProblem {
        y_start: 1e6,
        ..base
    })
    .unwrap();
    assert_eq!((r.c_const, r.y_bound), (1e6, 1e6 + 1.0));
    let r = lemma1_bound(&OdeBoundProblem {
        a: 4.0,
        gamma: 3.0,
        tau: 0.5,
        b: 2.0,
        ..base
    })
    .unwrap();
    assert_eq!((r.c_const, r.y_bound), (0.5, 2.5));
    println!("criterion 05 ode lemma campaign and formula: pass");
}

#[test]
fn criterion_06_operator_convergence_order() {
    let exact = |x: [f64; 3]| (PI * x[0]).cos() * (PI * x[1]).cos();

    let gradient_err = |n: usize| -> f64 {
        let g = Grid::new(2, &[n, n], &[1.0, 1.0]).unwrap();
        let s = ScalarField::from_fn(g, BcTag::NeumannZero, exact);
        let v = gradient(&s);
        let mut err = 0.0f64;
        for d in 0..2 {
            let shape = g.face_shape(d);
            for i0 in 0..shape[0] {
                for i1 in 0..shape[1] {
                    let i = [i0, i1, 0];
                    if i[d] == 0 || i[d] == n {
                        continue;
                    }
                    let x = g.face_center(d, i);
                    let truth = if d == 0 {
                        -PI * (PI * x[0]).sin() * (PI * x[1]).cos()
                    } else {
                        -PI * (PI * x[0]).cos() * (PI * x[1]).sin()
                    };
                    let k = (i[0] * shape[1] + i[1]) * shape[2];
                    err = err.max((v.comp(d)[k] - truth).abs());
                }
            }
        }
        err
    };

    let laplacian_err = |n: usize| -> f64 {
        let g = Grid::new(2, &[n, n], &[1.0, 1.0]).unwrap();
        let s = ScalarField::from_fn(g, BcTag::NeumannZero, exact);
        let lap = laplacian(&s);
        let mut err = 0.0f64;
        for (&got, &sv) in lap.values().iter().zip(s.values()) {
            let truth = -2.0 * PI * PI * sv;
            err = err.max((got - truth).abs());
        }
        err
    };

    let poisson_err = |n: usize| -> f64 {
        let g = Grid::new(2, &[n, n], &[1.0, 1.0]).unwrap();
        let rhs = ScalarField::from_fn(g, BcTag::NeumannZero, |x| -2.0 * PI * PI * exact(x));
        let tight = PoissonSolveParams {
            tolerance: 1e-12,
            max_iterations: None,
        };
        let phi = solve_poisson_neumann(&rhs, &tight).unwrap();
        let truth = ScalarField::from_fn(g, BcTag::NeumannZero, exact);
        phi.values()
            .iter()
            .zip(truth.values())
            .fold(0.0f64, |a, (&p, &t)| a.max((p - t).abs()))
    };

    for (name, f) in [
        ("gradient", &gradient_err as &dyn Fn(usize) -> f64),
        ("laplacian", &laplacian_err),
        ("poisson", &poisson_err),
    ] {
        let e16 = f(16);
        let e32 = f(32);
        let e64 = f(64);
        let o1 = (e16 / e32).log2();
        let o2 = (e32 / e64).log2();
        assert!(
            o1 >= 1.8 && o2 >= 1.8,
            "{name}: observed orders {o1:.2}, {o2:.2} (errors {e16:.3e} {e32:.3e} {e64:.3e})"
        );
    }
    println!("criterion 06 operator convergence order: pass");
}

#[test]
fn criterion_07_testing_identity_residual() {
    let one_step_residual = |cells: usize| -> f64 {
        let g = Grid::new(2, &[cells, cells], &[1.0, 1.0]).unwrap();
        let mut s = SimState::zeros(g);
        // co-centered bumps keep grad n . grad c single-signed so the cross
        // term carries weight
        s.n = ScalarField::from_fn(g, BcTag::NeumannZero, |x| {
            let dx = x[0] - 0.45;
            let dy = x[1] - 0.55;
            1.0 + 3.0 * (-(dx * dx + dy * dy) / 0.03).exp()
        });
        s.c = ScalarField::from_fn(g, BcTag::NeumannZero, |x| {
            let dx = x[0] - 0.45;
            let dy = x[1] - 0.55;
            1.0 + (-(dx * dx + dy * dy) / 0.1).exp()
        });
        let params = ModelParams::default();
        let h = g.min_spacing();
        let dt = 0.4 * h * h / 4.0;
        let (n_new, _) = step_n(&s, &params, dt).unwrap();
        let mut after = s.clone();
        after.n = n_new;
        let (c_new, _) = step_c(&after, &params, dt).unwrap();
        after.c = c_new;
        after.t = dt;
        testing_identity_residual(&s, &after, &params, 2.0, dt).unwrap()
    };
    let r32 = one_step_residual(32);
    let r64 = one_step_residual(64);
    let r128 = one_step_residual(128);
    assert!(
        r64 < r32 && r128 < r64,
        "residuals not monotone: {r32:.3e} -> {r64:.3e} -> {r128:.3e}"
    );
    assert!(r128 <= 0.1, "residual at h = 1/128: {r128:.3e}");
    println!("criterion 07 testing identity residual: pass");
}

#[test]
fn criterion_08_sliding_window_functional() {
    // oracle: explicit all-windows scan with trapezoid over the knot union
    fn brute_force_i(series: &[(f64, f64)], tau: f64, t_end: f64) -> Option<f64> {
        let lerp = |t: f64| -> f64 {
            let mut j = 0;
            while j + 1 < series.len() && series[j + 1].0 < t {
                j += 1;
            }
            if j + 1 >= series.len() {
                return series[series.len() - 1].1;
            }
            let (t0, v0) = series[j];
            let (t1, v1) = series[j + 1];
            if t <= t0 {
                v0
            } else {
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        };
        let mut best: Option<f64> = None;
        for &(start, _) in series {
            if start < tau - 1e-12 || start > t_end - tau + 1e-12 {
                continue;
            }
            if start + tau > series[series.len() - 1].0 + 1e-12 {
                continue;
            }
            let mut knots = vec![start];
            for &(ts, _) in series {
                if ts > start && ts < start + tau {
                    knots.push(ts);
                }
            }
            knots.push(start + tau);
            let mut acc = 0.0;
            for w in knots.windows(2) {
                acc += 0.5 * (lerp(w[0]) + lerp(w[1])) * (w[1] - w[0]);
            }
            best = Some(best.map_or(acc, |b: f64| b.max(acc)));
        }
        best
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut checked = 0;
    while checked < 50 {
        let n = rng.gen_range(20..80);
        let dt = rng.gen_range(0.02..0.2);
        let series: Vec<(f64, f64)> = (0..n)
            .map(|k| (k as f64 * dt, rng.gen_range(0.0..5.0)))
            .collect();
        let t_last = series[series.len() - 1].0;
        let tau = rng.gen_range(0.1..(t_last / 3.0));
        let Ok(full) = sliding_i(&series, tau, t_last) else {
            continue;
        };
        let oracle = brute_force_i(&series, tau, t_last).unwrap();
        assert!(
            (full - oracle).abs() <= 1e-12 * (1.0 + oracle.abs()),
            "series {checked}: {full} vs oracle {oracle}"
        );
        // monotone nondecreasing in the horizon T
        let mut prev: Option<f64> = None;
        for frac in [0.5, 0.7, 0.9, 1.0] {
            if let Ok(v) = sliding_i(&series, tau, t_last * frac) {
                if let Some(p) = prev {
                    assert!(v >= p - 1e-13, "series {checked}: I not monotone in T");
                }
                prev = Some(v);
            }
        }
        checked += 1;
    }
    println!("criterion 08 sliding window functional: pass");
}

#[test]
fn criterion_09_criticality_verdicts() {
    let (agg, blow, _) = criticality_runs();
    assert_eq!(agg.exit_code, EXIT_COMPLETED);
    assert_eq!(agg.summary.verdict, "bounded_on_horizon");
    assert!(
        blow.exit_code == EXIT_GROWTH || blow.exit_code == EXIT_DT_COLLAPSED,
        "blowup run exit code {}",
        blow.exit_code
    );
    assert!(
        blow.summary.verdict == "growth_triggered" || blow.summary.verdict == "dt_collapsed",
        "blowup verdict {}",
        blow.summary.verdict
    );
    let total = agg.summary.wall_time_s + blow.summary.wall_time_s;
    assert!(total <= 600.0, "criticality pair took {total:.0} s");

    // the sweep machinery emits the verdict table for the same scenario
    let dir = tempfile::tempdir().unwrap();
    let base = std::fs::read_to_string(preset_path("alpha_sweep.cfg")).unwrap();
    let short = base.replace("t_end = 10", "t_end = 0.02").replace(
        "sweep.alphas = 0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8",
        "sweep.alphas = 0.2,0.6",
    );
    let spec = parse_sweep_spec(&short).unwrap();
    let rows = kss_cli::sweep::run_sweep(&spec, dir.path(), true).unwrap();
    assert_eq!(rows.len(), 2);
    let table = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(table.starts_with("alpha,seed,verdict,"));
    println!("criterion 09 criticality verdicts: pass");
}

#[test]
fn criterion_10_fluid_decoupling() {
    let grid = Grid::new(2, &[32, 32], &[1.0, 1.0]).unwrap();
    let base = bump_state(grid);
    let off = ModelParams::default();
    let on = ModelParams {
        fluid_enabled: true,
        ..ModelParams::default()
    };
    assert_eq!(on.phi, PhiSpec::Zero);
    assert_eq!(on.forcing, ForcingSpec::Zero);
    let ctl = StepControl::default();
    let psolve = PoissonSolveParams::default();
    let mut a = base.clone();
    let mut b = base;
    for step in 0..500 {
        let (na, _) = advance(&a, &off, &ctl, &psolve).unwrap();
        let (nb, _) = advance(&b, &on, &ctl, &psolve).unwrap();
        a = na;
        b = nb;
        assert_eq!(a.n.values(), b.n.values(), "n diverged at step {step}");
        assert_eq!(a.c.values(), b.c.values(), "c diverged at step {step}");
        assert_eq!(b.u.max_abs(), 0.0, "fluid-on u left zero at step {step}");
    }
    println!("criterion 10 fluid decoupling: pass");
}
