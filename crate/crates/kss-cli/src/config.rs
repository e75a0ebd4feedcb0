//! Flat key-value run configuration.
//!
//! One `key = value` pair per line, `#` starts a comment. Every key must be
//! known; unknown keys are a hard error listing the offenders, so typos
//! never silently fall back to defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use kss_core::diagnostics::DiagnosticsConfig;
use kss_core::model::{Bump, ForcingSpec, PhiSpec, ScalarSpec, VectorSpec};
use kss_core::{Grid, InitialData, ModelParams, StepControl};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Everything a single simulation run needs.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub model: ModelParams,
    pub init: InitialData,
    pub grid: Grid,
    pub step: StepControl,
    pub diag: DiagnosticsConfig,
    pub t_end: f64,
    pub output_dir: PathBuf,
    pub snapshot_times: Vec<f64>,
    pub seed: u64,
}

/// A run configuration plus the sweep axes.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub alpha_values: Vec<f64>,
    pub replicate_seeds: Vec<u64>,
    pub base: RunConfig,
}

const KNOWN_KEYS: &[&str] = &[
    "alpha",
    "kappa_s",
    "gravity",
    "forcing.kind",
    "forcing.amplitude",
    "forcing.omega",
    "fluid_enabled",
    "grid.cells",
    "grid.lengths",
    "init.n0.kind",
    "init.n0.value",
    "init.n0.center",
    "init.n0.width",
    "init.n0.amplitude",
    "init.n0.floor",
    "init.c0.kind",
    "init.c0.value",
    "init.c0.center",
    "init.c0.width",
    "init.c0.amplitude",
    "init.c0.floor",
    "init.u0.kind",
    "init.u0.amplitude",
    "init.u0.modes",
    "dt_safety",
    "dt_max",
    "dt_min",
    "t_end",
    "seed",
    "output.dir",
    "output.sample_every",
    "output.snapshot_at",
    "diag.p_list",
    "diag.growth_factor",
];

const SWEEP_KEYS: &[&str] = &["sweep.alphas", "sweep.seeds"];

fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut pairs = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(k) => &raw[..k],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            ConfigError(format!("line {}: expected key = value, got {line:?}", lineno + 1))
        })?;
        let key = key.trim().to_string();
        if pairs.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(ConfigError(format!("duplicate key {key:?}")));
        }
    }
    Ok(pairs)
}

fn reject_unknown(pairs: &BTreeMap<String, String>, extra: &[&str]) -> Result<(), ConfigError> {
    let unknown: Vec<&str> = pairs
        .keys()
        .map(|k| k.as_str())
        .filter(|k| !KNOWN_KEYS.contains(k) && !extra.contains(k))
        .collect();
    if !unknown.is_empty() {
        return Err(ConfigError(format!("unknown keys: {}", unknown.join(", "))));
    }
    Ok(())
}

struct Reader<'a> {
    pairs: &'a BTreeMap<String, String>,
}

impl<'a> Reader<'a> {
    fn raw(&self, key: &str) -> Option<&'a str> {
        self.pairs.get(key).map(|s| s.as_str())
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s
                .parse::<f64>()
                .map_err(|_| ConfigError(format!("key {key:?}: not a number: {s:?}"))),
        }
    }

    fn u64(&self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s
                .parse::<u64>()
                .map_err(|_| ConfigError(format!("key {key:?}: not an integer: {s:?}"))),
        }
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s
                .parse::<usize>()
                .map_err(|_| ConfigError(format!("key {key:?}: not an integer: {s:?}"))),
        }
    }

    fn bool(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(s) => Err(ConfigError(format!("key {key:?}: expected true or false, got {s:?}"))),
        }
    }

    fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(s) => s
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<f64>()
                        .map_err(|_| ConfigError(format!("key {key:?}: not a number: {p:?}")))
                })
                .collect::<Result<Vec<f64>, _>>()
                .map(Some),
        }
    }

    fn vec3(&self, key: &str, default: [f64; 3]) -> Result<[f64; 3], ConfigError> {
        match self.f64_list(key)? {
            None => Ok(default),
            Some(v) if v.len() <= 3 => {
                let mut out = [0.0; 3];
                out[..v.len()].copy_from_slice(&v);
                Ok(out)
            }
            Some(v) => Err(ConfigError(format!(
                "key {key:?}: expected at most 3 components, got {}",
                v.len()
            ))),
        }
    }
}

fn parse_scalar_spec(r: &Reader, prefix: &str) -> Result<ScalarSpec, ConfigError> {
    let kind_key = format!("{prefix}.kind");
    match r.raw(&kind_key).unwrap_or("constant") {
        "constant" => Ok(ScalarSpec::Constant(r.f64(&format!("{prefix}.value"), 0.0)?)),
        "bump" => Ok(ScalarSpec::Bumps {
            bumps: vec![Bump {
                center: r.vec3(&format!("{prefix}.center"), [0.5, 0.5, 0.5])?,
                width: r.f64(&format!("{prefix}.width"), 0.1)?,
                amplitude: r.f64(&format!("{prefix}.amplitude"), 1.0)?,
            }],
            floor: r.f64(&format!("{prefix}.floor"), 0.0)?,
        }),
        other => Err(ConfigError(format!(
            "key {kind_key:?}: unknown kind {other:?} (expected constant or bump)"
        ))),
    }
}

fn build_run_config(pairs: &BTreeMap<String, String>) -> Result<RunConfig, ConfigError> {
    let r = Reader { pairs };

    let gravity = r.vec3("gravity", [0.0; 3])?;
    let phi = if gravity == [0.0; 3] {
        PhiSpec::Zero
    } else {
        PhiSpec::Linear { gravity }
    };
    let forcing = match r.raw("forcing.kind").unwrap_or("zero") {
        "zero" => ForcingSpec::Zero,
        "constant" => ForcingSpec::Constant {
            amplitude: r.vec3("forcing.amplitude", [0.0; 3])?,
        },
        "periodic" => ForcingSpec::Periodic {
            amplitude: r.vec3("forcing.amplitude", [0.0; 3])?,
            omega: r.f64("forcing.omega", 1.0)?,
        },
        other => Err(ConfigError(format!(
            "key \"forcing.kind\": unknown kind {other:?} (expected zero, constant or periodic)"
        )))?,
    };
    let model = ModelParams {
        alpha: r.f64("alpha", 0.6)?,
        kappa_s: r.f64("kappa_s", 1.0)?,
        phi,
        forcing,
        fluid_enabled: r.bool("fluid_enabled", false)?,
    };

    let seed = r.u64("seed", 0)?;
    let init = InitialData {
        n0: parse_scalar_spec(&r, "init.n0")?,
        c0: parse_scalar_spec(&r, "init.c0")?,
        u0: match r.raw("init.u0.kind").unwrap_or("zero") {
            "zero" => VectorSpec::Zero,
            "random" => VectorSpec::ProjectedRandom {
                amplitude: r.f64("init.u0.amplitude", 1.0)?,
                modes: r.usize("init.u0.modes", 3)?,
                seed,
            },
            other => Err(ConfigError(format!(
                "key \"init.u0.kind\": unknown kind {other:?} (expected zero or random)"
            )))?,
        },
    };

    let cells_f = r
        .f64_list("grid.cells")?
        .ok_or_else(|| ConfigError("missing required key \"grid.cells\"".into()))?;
    let cells: Vec<usize> = cells_f
        .iter()
        .map(|&v| {
            if v.fract() == 0.0 && v >= 1.0 {
                Ok(v as usize)
            } else {
                Err(ConfigError(format!("key \"grid.cells\": bad cell count {v}")))
            }
        })
        .collect::<Result<_, _>>()?;
    let lengths = r
        .f64_list("grid.lengths")?
        .unwrap_or_else(|| vec![1.0; cells.len()]);
    if lengths.len() != cells.len() {
        return Err(ConfigError(
            "\"grid.cells\" and \"grid.lengths\" must have the same dimension".into(),
        ));
    }
    let grid = Grid::new(cells.len(), &cells, &lengths)
        .map_err(|e| ConfigError(format!("grid: {e}")))?;

    let step = StepControl {
        dt_safety: r.f64("dt_safety", 0.4)?,
        dt_max: r.f64("dt_max", 0.1)?,
        dt_min: r.f64("dt_min", 1e-9)?,
    };
    step.validate()
        .map_err(|e| ConfigError(format!("step control: {e}")))?;

    let t_end = r.f64("t_end", 1.0)?;
    if !(t_end > 0.0) {
        return Err(ConfigError("key \"t_end\": must be > 0".into()));
    }

    let diag = DiagnosticsConfig {
        p_list: r
            .f64_list("diag.p_list")?
            .unwrap_or_else(|| vec![2.0, 4.0, 6.0]),
        tau: kss_core::diagnostics::compute_tau(t_end),
        sample_every: r.usize("output.sample_every", 100)?,
        blowup_growth_factor: r.f64("diag.growth_factor", 100.0)?,
        blowup_dt_floor: step.dt_min,
    };
    diag.validate()
        .map_err(|e| ConfigError(format!("diagnostics: {e}")))?;

    let snapshot_times = r.f64_list("output.snapshot_at")?.unwrap_or_default();
    if snapshot_times.iter().any(|&t| t < 0.0 || t > t_end) {
        return Err(ConfigError(
            "key \"output.snapshot_at\": times must lie in [0, t_end]".into(),
        ));
    }

    model
        .validate()
        .map_err(|e| ConfigError(format!("model: {e}")))?;

    Ok(RunConfig {
        model,
        init,
        grid,
        step,
        diag,
        t_end,
        output_dir: PathBuf::from(r.raw("output.dir").unwrap_or("out")),
        snapshot_times,
        seed,
    })
}

/// Parse a run configuration from config-file text.
pub fn parse_run_config(text: &str) -> Result<RunConfig, ConfigError> {
    let pairs = parse_pairs(text)?;
    reject_unknown(&pairs, &[])?;
    build_run_config(&pairs)
}

/// Parse a sweep spec: `sweep.alphas` / `sweep.seeds` plus a shared base
/// run configuration in the same file.
pub fn parse_sweep_spec(text: &str) -> Result<SweepSpec, ConfigError> {
    let pairs = parse_pairs(text)?;
    reject_unknown(&pairs, SWEEP_KEYS)?;
    let r = Reader { pairs: &pairs };
    let alpha_values = r
        .f64_list("sweep.alphas")?
        .ok_or_else(|| ConfigError("missing required key \"sweep.alphas\"".into()))?;
    if alpha_values.is_empty() || alpha_values.iter().any(|&a| a < 0.0) {
        return Err(ConfigError(
            "key \"sweep.alphas\": need a nonempty list of values >= 0".into(),
        ));
    }
    let replicate_seeds = match r.raw("sweep.seeds") {
        None => vec![0],
        Some(s) => s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<u64>()
                    .map_err(|_| ConfigError(format!("key \"sweep.seeds\": not an integer: {p:?}")))
            })
            .collect::<Result<_, _>>()?,
    };
    let mut base_pairs = pairs.clone();
    for k in SWEEP_KEYS {
        base_pairs.remove(*k);
    }
    let base = build_run_config(&base_pairs)?;
    Ok(SweepSpec {
        alpha_values,
        replicate_seeds,
        base,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "grid.cells = 16,16\nt_end = 0.5\n";

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = parse_run_config(MINIMAL).unwrap();
        assert_eq!(cfg.grid.dim(), 2);
        assert_eq!(cfg.model.alpha, 0.6);
        assert!(!cfg.model.fluid_enabled);
        assert_eq!(cfg.diag.tau, 0.125);
        assert_eq!(cfg.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn unknown_key_is_a_hard_error_naming_the_key() {
        let err = parse_run_config("grid.cells = 16,16\nt_end = 1\nalpha_typo = 0.5\n")
            .unwrap_err();
        assert!(err.0.contains("alpha_typo"), "{err}");
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let cfg = parse_run_config("# header\n\ngrid.cells = 16,16 # inline\nt_end = 1\n").unwrap();
        assert_eq!(cfg.grid.cells(0), 16);
    }

    #[test]
    fn duplicate_key_rejected() {
        let err = parse_run_config("grid.cells = 16,16\ngrid.cells = 8,8\nt_end = 1\n")
            .unwrap_err();
        assert!(err.0.contains("duplicate"), "{err}");
    }

    #[test]
    fn bump_init_round_trips() {
        let text = "grid.cells = 32,32\nt_end = 2\ninit.n0.kind = bump\n\
                    init.n0.center = 0.5,0.5\ninit.n0.width = 0.08\n\
                    init.n0.amplitude = 100\ninit.c0.kind = constant\ninit.c0.value = 1\n";
        let cfg = parse_run_config(text).unwrap();
        match &cfg.init.n0 {
            ScalarSpec::Bumps { bumps, floor } => {
                assert_eq!(bumps.len(), 1);
                assert_eq!(bumps[0].amplitude, 100.0);
                assert_eq!(*floor, 0.0);
            }
            other => panic!("expected bump spec, got {other:?}"),
        }
        assert_eq!(cfg.init.c0, ScalarSpec::Constant(1.0));
    }

    #[test]
    fn snapshot_times_outside_horizon_rejected() {
        let err =
            parse_run_config("grid.cells = 16,16\nt_end = 1\noutput.snapshot_at = 0.5,2.0\n")
                .unwrap_err();
        assert!(err.0.contains("snapshot_at"), "{err}");
    }

    #[test]
    fn sweep_spec_parses() {
        let text = "sweep.alphas = 0,0.3,0.6\nsweep.seeds = 1,2\ngrid.cells = 16,16\nt_end = 1\n";
        let spec = parse_sweep_spec(text).unwrap();
        assert_eq!(spec.alpha_values, vec![0.0, 0.3, 0.6]);
        assert_eq!(spec.replicate_seeds, vec![1, 2]);
    }

    #[test]
    fn gravity_selects_linear_potential() {
        let cfg = parse_run_config("grid.cells = 16,16\nt_end = 1\ngravity = 0,-1\n").unwrap();
        assert_eq!(
            cfg.model.phi,
            PhiSpec::Linear {
                gravity: [0.0, -1.0, 0.0]
            }
        );
    }
}
