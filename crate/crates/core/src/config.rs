//! Versioned TOML experiment configuration.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::breathers::{check_commensurate, BreatherSpec};
use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::grid::{Grid1D, PerturbationField};
use crate::solver::SolverConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[default]
    Simulate,
    GrowthScan,
    PeregrineInstability,
    KmInstability,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub length: f64,
    pub points: usize,
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid1D> {
        Grid1D::new(self.length, self.points).map_err(|e| Error::Config(e.to_string()))
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { length: 80.0, points: 2048 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeProfile {
    /// `amplitude * cos(kx)`.
    #[default]
    Cosine,
    /// `amplitude * cos(kx) (k + i sqrt(2 - k^2)) / sqrt2`, the growing
    /// eigenvector of the linear flow; needs `|k| < sqrt2`.
    Growing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
#[derive(Default)]
pub enum InitialCondition {
    #[default]
    Zero,
    /// Offset of a breather at the run's start time.
    Breather {
        spec: BreatherSpec,
    },
    SingleMode {
        k: f64,
        amplitude: f64,
        #[serde(default)]
        profile: ModeProfile,
    },
    /// Relative paths are resolved against the config file's directory.
    Checkpoint {
        path: PathBuf,
    },
    /// Seeded band-limited field scaled to `||w||_{H^s} = amplitude`.
    Random {
        amplitude: f64,
        #[serde(default = "default_max_freq")]
        max_freq: f64,
    },
    Superposition {
        components: Vec<InitialCondition>,
    },
}

fn default_max_freq() -> f64 {
    3.0
}


impl InitialCondition {
    fn validate(&self, grid: &Grid1D) -> Result<()> {
        match self {
            InitialCondition::Zero => Ok(()),
            InitialCondition::Breather { spec } => {
                spec.validate().map_err(|e| Error::Config(e.to_string()))?;
                check_commensurate(spec, grid.length()).map_err(|e| Error::Config(e.to_string()))
            }
            InitialCondition::SingleMode { k, amplitude, profile } => {
                grid.find_frequency(*k).map_err(|e| Error::Config(e.to_string()))?;
                if !amplitude.is_finite() {
                    return Err(Error::Config("mode amplitude must be finite".into()));
                }
                if *profile == ModeProfile::Growing && k.abs() >= std::f64::consts::SQRT_2 {
                    return Err(Error::Config(format!("growing profile needs |k| < sqrt2, got {k}")));
                }
                Ok(())
            }
            InitialCondition::Checkpoint { path } => {
                if !path.exists() {
                    return Err(Error::Config(format!("checkpoint `{}` does not exist", path.display())));
                }
                Ok(())
            }
            InitialCondition::Random { amplitude, max_freq } => {
                if !(amplitude.is_finite() && *max_freq > 0.0) {
                    return Err(Error::Config("random data needs finite amplitude and max_freq > 0".into()));
                }
                Ok(())
            }
            InitialCondition::Superposition { components } => components.iter().try_for_each(|c| c.validate(grid)),
        }
    }

    fn resolve_paths(&mut self, base: &Path) {
        match self {
            InitialCondition::Checkpoint { path } if path.is_relative() => *path = base.join(&*path),
            InitialCondition::Superposition { components } => components.iter_mut().for_each(|c| c.resolve_paths(base)),
            _ => {}
        }
    }

    /// Samples the condition on `grid` at time `t`. `s` normalizes random data.
    pub fn build(&self, grid: &Grid1D, t: f64, s: f64, seed: u64) -> Result<PerturbationField> {
        match self {
            InitialCondition::Zero => Ok(PerturbationField::zeros(grid)),
            InitialCondition::Breather { spec } => Ok(crate::breathers::offset(spec)?.sample(grid, t)),
            InitialCondition::SingleMode { k, amplitude, profile } => {
                let k = grid.xi(grid.find_frequency(*k)?);
                let dir = match profile {
                    ModeProfile::Cosine => num_complex::Complex64::new(1.0, 0.0),
                    ModeProfile::Growing => {
                        num_complex::Complex64::new(k.abs(), (2.0 - k * k).sqrt()) / std::f64::consts::SQRT_2
                    }
                };
                Ok(PerturbationField::from_fn(grid, |x| dir * (amplitude * (k * x).cos())))
            }
            InitialCondition::Checkpoint { path } => {
                let c = Checkpoint::load(path)?;
                if c.field.grid() != grid {
                    return Err(Error::Config(format!(
                        "checkpoint grid (L = {}, N = {}) differs from the configured grid",
                        c.field.grid().length(),
                        c.field.grid().points()
                    )));
                }
                Ok(c.field)
            }
            InitialCondition::Random { amplitude, max_freq } => {
                let mut rng = crate::random::rng(seed);
                Ok(crate::random::unit_field(grid, &mut rng, *max_freq, s).scaled(*amplitude))
            }
            InitialCondition::Superposition { components } => {
                let mut total = PerturbationField::zeros(grid);
                for (i, c) in components.iter().enumerate() {
                    let part = c.build(grid, t, s, seed.wrapping_add(i as u64))?;
                    for (a, b) in total.samples_mut().iter_mut().zip(part.samples()) {
                        *a += b;
                    }
                }
                Ok(total)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct DiagnosticsConfig {
    /// Exact offset to compare against (fills `err_vs_exact`).
    pub exact: Option<BreatherSpec>,
    /// Write every `field_stride`-th grid point of each snapshot to
    /// `field.csv`; 0 disables the field output.
    pub field_stride: usize,
    /// Write a checkpoint every this many snapshots; 0 writes only the final state.
    pub checkpoint_every: usize,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthScanConfig {
    pub ks: Vec<f64>,
    pub amplitude: f64,
    pub window: (f64, f64),
    /// Upper bound on the integration horizon of each run.
    pub max_time: f64,
}

impl Default for GrowthScanConfig {
    fn default() -> Self {
        Self { ks: vec![0.3, 0.5, 1.0, 1.2, 1.4, 2.0, 3.0], amplitude: 1e-8, window: (1e-7, 1e-4), max_time: 60.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeregrineConfig {
    pub horizons: Vec<f64>,
    /// Horizons up to this value are integrated over all of `[-T, 0]`; longer
    /// ones start from exact data at `-window`.
    pub full_integration_max: f64,
    pub window: f64,
}

impl Default for PeregrineConfig {
    fn default() -> Self {
        Self { horizons: vec![10.0, 50.0, 200.0], full_integration_max: 10.0, window: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KmConfig {
    pub a: f64,
    /// The added Peregrine offset is `Q(-peregrine_time, x - x0)`.
    pub peregrine_time: f64,
    /// Center of the added Peregrine offset; defaults to `L/4`.
    pub x0: Option<f64>,
    /// Scale of the added offset; 0 gives the unperturbed control.
    pub scale: f64,
    pub periods: f64,
}

impl Default for KmConfig {
    fn default() -> Self {
        Self { a: 1.0, peregrine_time: 20.0, x0: None, scale: 1.0, periods: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub t_start: f64,
    #[serde(default)]
    pub initial: InitialCondition,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub growth_scan: GrowthScanConfig,
    #[serde(default)]
    pub peregrine: PeregrineConfig,
    #[serde(default)]
    pub km: KmConfig,
}

impl ExperimentConfig {
    /// Defaults for an experiment kind, including a grid suited to it.
    pub fn default_for(kind: ExperimentKind) -> Self {
        let grid = match kind {
            ExperimentKind::Simulate | ExperimentKind::KmInstability => GridConfig::default(),
            ExperimentKind::GrowthScan => GridConfig { length: 20.0 * PI, points: 256 },
            ExperimentKind::PeregrineInstability => GridConfig { length: 640.0, points: 8192 },
        };
        // the scan is linear to leading order; long horizons need a coarser step
        let solver = match kind {
            ExperimentKind::GrowthScan => SolverConfig { dt: 1e-2, ..SolverConfig::default() },
            _ => SolverConfig::default(),
        };
        Self {
            schema_version: SCHEMA_VERSION,
            experiment: kind,
            grid,
            solver,
            t_start: 0.0,
            initial: InitialCondition::Zero,
            diagnostics: DiagnosticsConfig::default(),
            output_dir: None,
            seed: 0,
            growth_scan: GrowthScanConfig::default(),
            peregrine: PeregrineConfig::default(),
            km: KmConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        // check the version first so that old files get a schema error rather
        // than a confusing field error
        let raw: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        match raw.get("schema_version").and_then(|v| v.as_integer()) {
            Some(v) if v == SCHEMA_VERSION as i64 => {}
            Some(v) => {
                return Err(Error::Schema(format!("schema_version {v} is not supported (expected {SCHEMA_VERSION})")))
            }
            None => return Err(Error::Schema("missing integer schema_version".into())),
        }
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Reads, resolves relative paths against the file's directory and validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read `{}`: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.initial.resolve_paths(base);
        if let Some(out) = &cfg.output_dir {
            if out.is_relative() {
                cfg.output_dir = Some(base.join(out));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!("schema_version {} is not supported", self.schema_version)));
        }
        let grid = self.grid.build()?;
        self.solver.validate()?;
        if !self.t_start.is_finite() {
            return Err(Error::Config("t_start must be finite".into()));
        }
        self.initial.validate(&grid)?;
        if let Some(spec) = &self.diagnostics.exact {
            spec.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        let g = &self.growth_scan;
        if !(g.amplitude > 0.0 && g.window.0 > 0.0 && g.window.1 > g.window.0 && g.max_time > 0.0) {
            return Err(Error::Config("growth_scan needs amplitude > 0 and 0 < window.0 < window.1".into()));
        }
        let p = &self.peregrine;
        if p.horizons.iter().any(|&t| !(t > 0.0 && t.is_finite())) || !(p.window > 0.0) {
            return Err(Error::Config("peregrine horizons and window must be positive".into()));
        }
        if !(self.km.a > 0.5) {
            return Err(Error::Config(format!("km.a must exceed 1/2, got {}", self.km.a)));
        }
        if !(self.km.periods > 0.0) {
            return Err(Error::Config("km.periods must be positive".into()));
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Grid1D> {
        self.grid.build()
    }

    pub fn build_initial(&self, grid: &Grid1D) -> Result<PerturbationField> {
        self.initial.build(grid, self.t_start, self.solver.s, self.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::breathers::BreatherKind;

    const PEREGRINE: &str = r#"
schema_version = 1
experiment = "simulate"
t_start = -3.0

[grid]
length = 80.0
points = 2048

[solver]
dt = 1e-3
t_end = 3.0
scheme = "picard_duhamel"

[initial]
type = "breather"
spec = { kind = "peregrine" }

[diagnostics]
exact = { kind = "peregrine" }
"#;

    #[test]
    fn parses_peregrine_config() {
        let cfg = ExperimentConfig::from_toml(PEREGRINE).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.t_start, -3.0);
        assert_eq!(cfg.solver.t_end, 3.0);
        assert_eq!(cfg.solver.picard_tol, 1e-12);
        assert_eq!(cfg.initial, InitialCondition::Breather { spec: BreatherSpec::peregrine() });
        let g = cfg.build_grid().unwrap();
        let w = cfg.build_initial(&g).unwrap();
        assert_eq!(w.samples()[1024], crate::breathers::BreatherSpec::peregrine().offset_at(-3.0, 0.0));
    }

    #[test]
    fn schema_version_is_checked() {
        let text = PEREGRINE.replace("schema_version = 1", "schema_version = 7");
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(Error::Schema(_))));
        let text = PEREGRINE.replace("schema_version = 1", "");
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(Error::Schema(_))));
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = PEREGRINE.replace("dt = 1e-3", "dt = 1e-3\nbogus = 2");
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_values_rejected() {
        for (from, to) in [
            ("dt = 1e-3", "dt = -1.0"),
            ("points = 2048", "points = 2047"),
            ("spec = { kind = \"peregrine\" }", "spec = { kind = \"kuznetsov_ma\", a = 0.2 }"),
        ] {
            let cfg = ExperimentConfig::from_toml(&PEREGRINE.replace(from, to)).unwrap();
            assert!(cfg.validate().is_err(), "{to}");
        }
    }

    #[test]
    fn akhmediev_needs_commensurate_box() {
        let mut cfg = ExperimentConfig::default_for(ExperimentKind::Simulate);
        cfg.initial = InitialCondition::Breather { spec: BreatherSpec::akhmediev(0.25).unwrap() };
        assert!(cfg.validate().is_err());
        cfg.grid = GridConfig { length: 8.0 * PI, points: 256 };
        cfg.validate().unwrap();
    }

    #[test]
    fn single_mode_must_be_representable() {
        let mut cfg = ExperimentConfig::default_for(ExperimentKind::GrowthScan);
        cfg.initial = InitialCondition::SingleMode { k: 0.3, amplitude: 1e-8, profile: ModeProfile::Growing };
        cfg.validate().unwrap();
        cfg.initial = InitialCondition::SingleMode { k: 0.33, amplitude: 1e-8, profile: ModeProfile::Cosine };
        assert!(cfg.validate().is_err());
        cfg.initial = InitialCondition::SingleMode { k: 2.0, amplitude: 1e-8, profile: ModeProfile::Growing };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn growing_profile_has_requested_mode_amplitude() {
        let g = Grid1D::new(20.0 * PI, 256).unwrap();
        let ic = InitialCondition::SingleMode { k: 1.2, amplitude: 1e-8, profile: ModeProfile::Growing };
        let w = ic.build(&g, 0.0, 1.0, 0).unwrap();
        let hat = g.forward(w.samples());
        let k = g.find_frequency(1.2).unwrap();
        let amp = (hat[k].norm() + hat[g.mirror(k)].norm()) / g.length();
        assert!((amp - 1e-8).abs() < 1e-20);
    }

    #[test]
    fn superposition_and_round_trip() {
        let mut cfg = ExperimentConfig::default_for(ExperimentKind::KmInstability);
        cfg.initial = InitialCondition::Superposition {
            components: vec![
                InitialCondition::Breather { spec: BreatherSpec::kuznetsov_ma(1.0).unwrap() },
                InitialCondition::Breather { spec: BreatherSpec::peregrine().shifted(20.0, 20.0) },
                InitialCondition::Random { amplitude: 1e-3, max_freq: 2.0 },
            ],
        };
        let text = cfg.to_toml().unwrap();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(back, cfg);
        let g = back.build_grid().unwrap();
        let w = back.build_initial(&g).unwrap();
        let x = g.x(0);
        let exact = BreatherSpec::kuznetsov_ma(1.0).unwrap().offset_at(0.0, x)
            + BreatherSpec::peregrine().shifted(20.0, 20.0).offset_at(0.0, x);
        // the random component has unit-scale H^1 norm 1e-3
        assert!((w.samples()[0] - exact).norm() < 5e-3);
        assert!(matches!(
            back.initial,
            InitialCondition::Superposition { ref components } if matches!(
                components[0],
                InitialCondition::Breather { spec: BreatherSpec { kind: BreatherKind::KuznetsovMa { .. }, .. } }
            )
        ));
    }

    #[test]
    fn missing_checkpoint_is_invalid() {
        let mut cfg = ExperimentConfig::default_for(ExperimentKind::Simulate);
        cfg.initial = InitialCondition::Checkpoint { path: "/nonexistent/w.ckpt".into() };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn load_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid1D::new(80.0, 2048).unwrap();
        let ck = Checkpoint {
            t: 0.0,
            s: 1.0,
            scheme: crate::solver::Scheme::PicardDuhamel,
            field: PerturbationField::zeros(&g),
        };
        ck.save(&dir.path().join("w.ckpt")).unwrap();
        let text = "schema_version = 1\n[initial]\ntype = \"checkpoint\"\npath = \"w.ckpt\"\n";
        std::fs::write(dir.path().join("run.toml"), text).unwrap();
        let cfg = ExperimentConfig::load(&dir.path().join("run.toml")).unwrap();
        let w = cfg.build_initial(&cfg.build_grid().unwrap()).unwrap();
        assert_eq!(w, ck.field);
    }
}
