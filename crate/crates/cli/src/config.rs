//! Run configuration: schema, loading and dry-run validation.

use std::fmt;
use std::path::Path;

use bosepath::experiments::InequalityInstance;
use bosepath::montecarlo::{ChainOptions, ThermoOptions};
use bosepath::variational::{CanonicalOptions, GpOptions, HartreeOptions};
use bosepath::{Grid, PairPotential, TrapPotential};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    Gp,
    Hartree,
    Canonical,
    Scattering,
    McCanonical,
    McHartree,
    RwDirac,
    SweepLargeN,
    SweepBeta,
    SweepLambda,
    ReportInequalities,
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TrapSpec {
    Harmonic {
        #[serde(default)]
        offset: f64,
        cap: Option<f64>,
    },
    Power {
        p: f64,
        #[serde(default)]
        offset: f64,
        cap: Option<f64>,
    },
    HardBox {
        r_wall: f64,
    },
}

impl TrapSpec {
    pub fn build(&self) -> TrapPotential {
        match *self {
            TrapSpec::Harmonic { offset, cap } => {
                TrapPotential { cap, ..TrapPotential::harmonic().with_offset(offset) }
            }
            TrapSpec::Power { p, offset, cap } => TrapPotential { cap, ..TrapPotential::power(p).with_offset(offset) },
            TrapSpec::HardBox { r_wall } => TrapPotential::hard_box(r_wall),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PairSpec {
    Gaussian { c: f64, sigma: f64, cap: Option<f64> },
    SquareWell { c: f64, r0: f64 },
    InversePower { c: f64, gamma: f64, cap: Option<f64> },
    HardCore { a: f64 },
    Plateau { m: f64, a: f64 },
    Zero,
}

impl PairSpec {
    pub fn build(&self) -> PairPotential {
        match *self {
            PairSpec::Gaussian { c, sigma, cap } => PairPotential { cap, ..PairPotential::gaussian(c, sigma) },
            PairSpec::SquareWell { c, r0 } => PairPotential::square_well(c, r0),
            PairSpec::InversePower { c, gamma, cap } => PairPotential { cap, ..PairPotential::inverse_power(c, gamma) },
            PairSpec::HardCore { a } => PairPotential::hard_core(a),
            PairSpec::Plateau { m, a } => PairPotential::plateau(m, a),
            PairSpec::Zero => PairPotential::zero(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathSection {
    /// keep the `i = j` terms of the path-path repulsion
    pub self_interaction: bool,
    pub dt: f64,
    pub dt_max: f64,
    pub start_radius: f64,
    pub max_segment: Option<usize>,
    pub shift_width: Option<f64>,
    pub moves_per_step: usize,
}

impl Default for PathSection {
    fn default() -> Self {
        PathSection {
            self_interaction: false,
            dt: 0.05,
            dt_max: 0.1,
            start_radius: 1.0,
            max_segment: None,
            shift_width: None,
            moves_per_step: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkSection {
    pub max_fraction: f64,
    pub moves_per_step: usize,
}

impl Default for WalkSection {
    fn default() -> Self {
        WalkSection { max_fraction: 0.3, moves_per_step: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FkSection {
    pub enabled: bool,
    pub max_states: usize,
    pub tol: f64,
}

impl Default for FkSection {
    fn default() -> Self {
        FkSection { enabled: true, max_states: 1 << 20, tol: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LargeNSection {
    pub cells_per_range: f64,
    pub allow_d3: bool,
}

impl Default for LargeNSection {
    fn default() -> Self {
        LargeNSection { cells_per_range: 4.0, allow_d3: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepModel {
    Canonical,
    Hartree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InstanceSpec {
    ProductVsCanonical { trap: TrapSpec, pair: PairSpec, particles: usize, grid: Grid },
    ScatteringVsIntegral { pair: PairSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Option<Problem>,
    #[serde(default)]
    pub seed: u64,
    /// output directory, overridden by `--out`
    pub out: Option<std::path::PathBuf>,
    pub grid: Option<Grid>,
    pub trap: Option<TrapSpec>,
    pub pair: Option<PairSpec>,
    pub particles: Option<usize>,
    /// GP parameter
    pub alpha: Option<f64>,
    /// Dirac coupling
    pub lambda: Option<f64>,
    /// walk trap exponent
    pub exponent: Option<f64>,
    /// scattering dimension
    pub dimension: Option<usize>,
    pub r_max: Option<f64>,
    pub beta: Option<f64>,
    pub betas: Option<Vec<f64>>,
    pub ns: Option<Vec<usize>>,
    pub lambdas: Option<Vec<f64>>,
    pub model: Option<SweepModel>,
    #[serde(default)]
    pub gp: GpOptions,
    #[serde(default)]
    pub hartree: HartreeOptions,
    #[serde(default)]
    pub canonical: CanonicalOptions,
    #[serde(default)]
    pub chain: ChainOptions,
    pub thermo: Option<ThermoOptions>,
    #[serde(default)]
    pub paths: PathSection,
    #[serde(default)]
    pub walks: WalkSection,
    #[serde(default)]
    pub fk: FkSection,
    #[serde(default)]
    pub large_n: LargeNSection,
    #[serde(default)]
    pub instances: Vec<InstanceSpec>,
}

impl RunConfig {
    pub fn instances(&self) -> Vec<InequalityInstance> {
        self.instances
            .iter()
            .map(|i| match i {
                InstanceSpec::ProductVsCanonical { trap, pair, particles, grid } => {
                    InequalityInstance::ProductVsCanonical {
                        trap: trap.build(),
                        pair: pair.build(),
                        n: *particles,
                        grid: *grid,
                        hartree: self.hartree,
                        canonical: self.canonical,
                    }
                }
                InstanceSpec::ScatteringVsIntegral { pair } => {
                    InequalityInstance::ScatteringVsIntegral { pair: pair.build() }
                }
            })
            .collect()
    }

    /// Chain options with the run seed applied.
    pub fn chain(&self) -> ChainOptions {
        ChainOptions { seed: self.seed, ..self.chain }
    }

    pub fn thermo(&self) -> Option<ThermoOptions> {
        self.thermo.map(|t| ThermoOptions { chain: ChainOptions { seed: self.seed, ..t.chain }, ..t })
    }

    pub fn hartree(&self) -> HartreeOptions {
        HartreeOptions { seed: self.seed, ..self.hartree }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticKind {
    Schema,
    Precondition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            DiagnosticKind::Schema => "schema",
            DiagnosticKind::Precondition => "precondition",
        };
        write!(f, "{k}: {}", self.message)
    }
}

fn schema(message: impl Into<String>) -> Diagnostic {
    Diagnostic { kind: DiagnosticKind::Schema, message: message.into() }
}

fn pre(message: impl Into<String>) -> Diagnostic {
    Diagnostic { kind: DiagnosticKind::Precondition, message: message.into() }
}

/// Parses TOML, or JSON when the file ends in `.json`.
pub fn load(path: &Path) -> Result<(RunConfig, String), Diagnostic> {
    let text = std::fs::read_to_string(path).map_err(|e| schema(format!("cannot read {}: {e}", path.display())))?;
    let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let cfg = if json {
        serde_json::from_str(&text).map_err(|e| schema(e.to_string()))?
    } else {
        toml::from_str(&text).map_err(|e| schema(e.to_string().trim_end().to_string()))?
    };
    Ok((cfg, text))
}

fn strictly_increasing(xs: &[f64]) -> bool {
    !xs.is_empty() && xs.windows(2).all(|w| w[0] < w[1])
}

/// Schema and physical checks for `problem`; empty when the run can start.
pub fn validate(problem: Problem, cfg: &RunConfig) -> Vec<Diagnostic> {
    use Problem::*;
    let mut out = Vec::new();
    if let Some(p) = cfg.problem {
        if p != problem {
            out.push(schema(format!("config is for `{p}`, not `{problem}`")));
        }
    }
    let needs_grid = !matches!(problem, Scattering | ReportInequalities);
    let needs_trap = !matches!(problem, Scattering | ReportInequalities | RwDirac | SweepLambda);
    let needs_particles = !matches!(problem, Gp | Scattering | SweepLargeN | ReportInequalities);
    let needs_pair = matches!(problem, Scattering | SweepLargeN);
    if needs_grid && cfg.grid.is_none() {
        out.push(schema("missing [grid] block"));
    }
    if needs_trap && cfg.trap.is_none() {
        out.push(schema("missing [trap] block"));
    }
    if needs_pair && cfg.pair.is_none() {
        out.push(schema("missing [pair] block"));
    }
    if needs_particles && cfg.particles.is_none() {
        out.push(schema("missing `particles`"));
    }
    if let Some(g) = &cfg.grid {
        if let Err(e) = g.validate() {
            out.push(pre(e.to_string()));
        }
    }
    if let Some(t) = &cfg.trap {
        if let Err(e) = t.build().validate() {
            out.push(pre(e.to_string()));
        }
    }
    if let Some(v) = &cfg.pair {
        if let Err(e) = v.build().validate() {
            out.push(pre(e.to_string()));
        }
    }
    if cfg.particles == Some(0) {
        out.push(pre("`particles` must be positive"));
    }
    let d = cfg.grid.map(|g| g.d);
    match problem {
        Gp => match cfg.alpha {
            None => out.push(schema("missing `alpha`")),
            Some(a) if !(a >= 0.0 && a.is_finite()) => out.push(pre(format!("need alpha >= 0, got {a}"))),
            _ => {}
        },
        Hartree => match (cfg.pair.is_some(), cfg.lambda) {
            (true, Some(_)) => out.push(schema("give either [pair] or `lambda`, not both")),
            (false, None) => out.push(schema("missing [pair] block or `lambda`")),
            (_, Some(l)) if !(l >= 0.0 && l.is_finite()) => out.push(pre(format!("need lambda >= 0, got {l}"))),
            _ => {}
        },
        Scattering => match cfg.dimension {
            None => out.push(schema("missing `dimension`")),
            Some(k) if k != 2 && k != 3 => out.push(pre(format!("scattering needs dimension 2 or 3, got {k}"))),
            _ => {}
        },
        McCanonical | McHartree | RwDirac => match cfg.beta {
            None => out.push(schema("missing `beta`")),
            Some(b) if !(b > 0.0 && b.is_finite()) => out.push(pre(format!("need beta > 0, got {b}"))),
            _ => {}
        },
        SweepLargeN => {
            match &cfg.ns {
                None => out.push(schema("missing `ns`")),
                Some(ns) => {
                    if !strictly_increasing(&ns.iter().map(|n| *n as f64).collect::<Vec<_>>()) || ns.contains(&0) {
                        out.push(pre("`ns` must be positive and strictly increasing"));
                    }
                }
            }
            if let Some(v) = &cfg.pair {
                let v = v.build();
                if !(v.eval(0.0) > 0.0) || v.infimum() < 0.0 {
                    out.push(pre("large-N sweeps need v >= 0 with v(0) > 0"));
                }
            }
            if let Some(k) = d {
                if k != 2 && !(k == 3 && cfg.large_n.allow_d3) {
                    out.push(pre(format!("large-N sweeps run in d = 2 (d = 3 needs large_n.allow_d3), got d = {k}")));
                }
            }
        }
        SweepBeta => {
            if cfg.model.is_none() {
                out.push(schema("missing `model` (canonical or hartree)"));
            }
        }
        SweepLambda => match &cfg.lambdas {
            None => out.push(schema("missing `lambdas`")),
            Some(l) if !strictly_increasing(l) || l.iter().any(|x| !(*x >= 0.0)) => {
                out.push(pre("`lambdas` must be nonnegative and strictly increasing"))
            }
            _ => {}
        },
        ReportInequalities | Canonical => {}
    }
    if matches!(problem, SweepBeta | SweepLambda) {
        match &cfg.betas {
            None => out.push(schema("missing `betas`")),
            Some(b) if !strictly_increasing(b) || b.iter().any(|x| !(*x > 0.0)) => {
                out.push(pre("`betas` must be positive and strictly increasing"))
            }
            _ => {}
        }
    }
    if matches!(problem, RwDirac | SweepLambda) {
        match cfg.exponent {
            None => out.push(schema("missing `exponent`")),
            Some(p) => {
                if let Some(k) = d {
                    if !(p > k as f64 - 2.0 && p > 0.0) {
                        out.push(pre(format!(
                            "the walk model needs exponent p > d - 2 (and p > 0); got p = {p}, d = {k}"
                        )));
                    }
                }
            }
        }
        if problem == RwDirac {
            match cfg.lambda {
                None => out.push(schema("missing `lambda`")),
                Some(l) if !(l >= 0.0 && l.is_finite()) => out.push(pre(format!("need lambda >= 0, got {l}"))),
                _ => {}
            }
        }
    }
    if matches!(problem, McHartree) && cfg.paths.dt > cfg.paths.dt_max {
        out.push(pre(format!("paths.dt = {} exceeds paths.dt_max = {}", cfg.paths.dt, cfg.paths.dt_max)));
    }
    if problem == ReportInequalities {
        for (k, inst) in cfg.instances.iter().enumerate() {
            if let InstanceSpec::ProductVsCanonical { grid, particles, .. } = inst {
                if let Err(e) = grid.validate() {
                    out.push(pre(format!("instance {k}: {e}")));
                }
                if *particles == 0 {
                    out.push(pre(format!("instance {k}: `particles` must be positive")));
                }
            }
        }
    }
    out
}
