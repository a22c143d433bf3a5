//! Trap potentials `W`, radial pair potentials `v`, their cutoffs and rescalings.
//!
//! Infinite values (hard walls, hard cores) are `f64::INFINITY`; a caller that
//! needs a finite stand-in must go through [`cap`](PairPotential::capped).

use std::f64::consts::PI;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::quadrature::{integrate_from_origin, integrate_to_infinity, unit_sphere_area, RadialOutcome};

const RADIAL_TOL: f64 = 1e-9;

/// A strength that may be `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Level {
    Finite(f64),
    Infinite,
}

impl Level {
    pub fn value(self) -> f64 {
        match self {
            Level::Finite(v) => v,
            Level::Infinite => f64::INFINITY,
        }
    }
}

impl Serialize for Level {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Level::Finite(v) => s.serialize_f64(*v),
            Level::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Level {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) if v.is_infinite() && v > 0.0 => Ok(Level::Infinite),
            Repr::Num(v) => Ok(Level::Finite(v)),
            Repr::Str(s) if s == "inf" || s == "infinity" => Ok(Level::Infinite),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TrapKind {
    /// `|x|^p`
    Power { p: f64 },
    /// zero inside the cube `[-r_wall, r_wall]^d`, infinite outside
    HardBox { r_wall: f64 },
    /// nearest-node lookup of samples on a grid, infinite outside the grid box
    Tabulated { grid: Grid, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapPotential {
    pub kind: TrapKind,
    #[serde(default)]
    pub offset: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
}

impl TrapPotential {
    pub fn power(p: f64) -> Self {
        TrapPotential { kind: TrapKind::Power { p }, offset: 0.0, cap: None }
    }

    pub fn harmonic() -> Self {
        Self::power(2.0)
    }

    pub fn hard_box(r_wall: f64) -> Self {
        TrapPotential { kind: TrapKind::HardBox { r_wall }, offset: 0.0, cap: None }
    }

    pub fn tabulated(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "tabulated trap has {} samples for {} cells",
                values.len(),
                grid.len()
            )));
        }
        let t = TrapPotential { kind: TrapKind::Tabulated { grid, values }, offset: 0.0, cap: None };
        t.validate()?;
        Ok(t)
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.offset >= 0.0 && self.offset.is_finite()) {
            return Err(Error::InvalidParameter(format!("trap offset must be finite and >= 0, got {}", self.offset)));
        }
        match &self.kind {
            TrapKind::Power { p } => {
                if !(*p > 0.0 && p.is_finite()) {
                    return Err(Error::InvalidParameter(format!("power trap needs p > 0, got {p}")));
                }
            }
            TrapKind::HardBox { r_wall } => {
                if !(*r_wall > 0.0 && r_wall.is_finite()) {
                    return Err(Error::InvalidParameter(format!("hard box needs r_wall > 0, got {r_wall}")));
                }
            }
            TrapKind::Tabulated { grid, values } => {
                grid.validate()?;
                if values.len() != grid.len() {
                    return Err(Error::GridMismatch("tabulated trap sample count".into()));
                }
                if values.iter().any(|v| v.is_nan() || *v < 0.0) {
                    return Err(Error::InvalidParameter("tabulated trap must be nonnegative".into()));
                }
            }
        }
        if let Some(m) = self.cap {
            if !(m > 0.0) {
                return Err(Error::InvalidParameter(format!("trap cap must be positive, got {m}")));
            }
        }
        Ok(())
    }

    /// Whether the trap is infinite somewhere (so `{W < inf}` is bounded).
    pub fn has_wall(&self) -> bool {
        self.cap.is_none() && matches!(self.kind, TrapKind::HardBox { .. } | TrapKind::Tabulated { .. })
    }

    /// Smallest value of `W` over the sphere of radius `radius` in R^d,
    /// sampled along the coordinate axes and diagonals.
    pub fn shell_minimum(&self, radius: f64, d: usize) -> f64 {
        let mut best = f64::INFINITY;
        let mut x = vec![0.0; d];
        for a in 0..d {
            for s in [-1.0, 1.0] {
                x.iter_mut().for_each(|v| *v = 0.0);
                x[a] = s * radius;
                best = best.min(self.eval(&x));
            }
        }
        let diag = radius / (d as f64).sqrt();
        x.iter_mut().for_each(|v| *v = diag);
        best.min(self.eval(&x))
    }

    /// Checks that `inf_{|x|>R} W -> inf` on a ladder of radii.
    pub fn check_confining(&self, d: usize) -> Result<()> {
        if self.cap.is_some() || self.has_wall() {
            return Ok(());
        }
        let ladder = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
        let mins: Vec<f64> = ladder.iter().map(|r| self.shell_minimum(*r, d)).collect();
        let increasing = mins.windows(2).all(|w| w[1] > w[0]);
        if increasing && mins[mins.len() - 1] > 10.0 * mins[0].max(1.0) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("trap does not grow at infinity: {mins:?}")))
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let base = match &self.kind {
            TrapKind::Power { p } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                if *p == 2.0 {
                    r2
                } else {
                    r2.sqrt().powf(*p)
                }
            }
            TrapKind::HardBox { r_wall } => {
                if x.iter().all(|v| v.abs() < *r_wall) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            TrapKind::Tabulated { grid, values } => match grid.cell_of(x) {
                Some(i) => values[i],
                None => f64::INFINITY,
            },
        };
        let w = base + self.offset;
        match self.cap {
            Some(m) => w.min(m),
            None => w,
        }
    }

    pub fn capped(&self, spec: CutoffSpec) -> Self {
        let mut t = self.clone();
        t.cap = Some(self.cap.map_or(spec.level, |m| m.min(spec.level)));
        t
    }

    /// Samples `W` at the nodes of a grid.
    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        let mut x = vec![0.0; grid.d];
        (0..grid.len())
            .map(|i| {
                grid.position(i, &mut x);
                self.eval(&x)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PairKind {
    /// `c exp(-r^2 / (2 sigma^2))`
    Gaussian { c: f64, sigma: f64 },
    /// `c` on `[0, r0)`, zero beyond
    SquareWell { c: f64, r0: f64 },
    /// `c r^{-gamma}`
    InversePower { c: f64, gamma: f64 },
    /// `m` on `[0, a]`, zero beyond; `m = inf` is the pure hard core
    CappedHardCore { m: Level, a: f64 },
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairClass {
    SoftCore,
    HardCore,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairPotential {
    pub kind: PairKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
}

impl From<PairKind> for PairPotential {
    fn from(kind: PairKind) -> Self {
        PairPotential { kind, cap: None }
    }
}

/// Rescaling schemes for the pair potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum Rescale {
    /// `r -> xi^{-2} v(r / xi)`; scattering length scales by `xi`.
    Dilation { xi: f64 },
    /// `r -> N^{d-1} v(r N)`, the large-N product-state scaling.
    LargeN { n: usize },
}

impl PairPotential {
    pub fn gaussian(c: f64, sigma: f64) -> Self {
        PairKind::Gaussian { c, sigma }.into()
    }
    pub fn square_well(c: f64, r0: f64) -> Self {
        PairKind::SquareWell { c, r0 }.into()
    }
    pub fn inverse_power(c: f64, gamma: f64) -> Self {
        PairKind::InversePower { c, gamma }.into()
    }
    pub fn hard_core(a: f64) -> Self {
        PairKind::CappedHardCore { m: Level::Infinite, a }.into()
    }
    pub fn plateau(m: f64, a: f64) -> Self {
        PairKind::CappedHardCore { m: Level::Finite(m), a }.into()
    }
    pub fn zero() -> Self {
        PairKind::Zero.into()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match self.kind {
            PairKind::Gaussian { c, sigma } => {
                if !c.is_finite() || !(sigma > 0.0 && sigma.is_finite()) {
                    return bad(format!("gaussian needs finite c and sigma > 0, got c={c} sigma={sigma}"));
                }
            }
            PairKind::SquareWell { c, r0 } => {
                if !c.is_finite() || !(r0 > 0.0 && r0.is_finite()) {
                    return bad(format!("square well needs finite c and r0 > 0, got c={c} r0={r0}"));
                }
            }
            PairKind::InversePower { c, gamma } => {
                if !(c >= 0.0 && c.is_finite()) || !(gamma > 0.0 && gamma.is_finite()) {
                    return bad(format!("inverse power needs c >= 0 and gamma > 0, got c={c} gamma={gamma}"));
                }
            }
            PairKind::CappedHardCore { m, a } => {
                if !(a > 0.0 && a.is_finite()) {
                    return bad(format!("hard core radius must be positive, got {a}"));
                }
                if let Level::Finite(v) = m {
                    if !(v > 0.0 && v.is_finite()) {
                        return bad(format!("plateau height must be positive, got {v}"));
                    }
                }
            }
            PairKind::Zero => {}
        }
        if let Some(m) = self.cap {
            if !(m > 0.0 && m.is_finite()) || m <= -self.infimum() {
                return bad(format!("cap {m} must exceed max(0, -inf v)"));
            }
        }
        Ok(())
    }

    /// Extra checks for potentials handed to the variational solvers.
    pub fn validate_for_solver(&self) -> Result<()> {
        self.validate()?;
        if let PairKind::InversePower { gamma, .. } = self.kind {
            if gamma >= 2.0 && self.cap.is_none() {
                return Err(Error::Precondition(format!(
                    "inverse-power singularity r^-{gamma} is too strong for the solvers (need gamma < 2)"
                )));
            }
        }
        Ok(())
    }

    pub fn eval(&self, r: f64) -> f64 {
        let v = match self.kind {
            PairKind::Gaussian { c, sigma } => c * (-0.5 * r * r / (sigma * sigma)).exp(),
            PairKind::SquareWell { c, r0 } => {
                if r < r0 {
                    c
                } else {
                    0.0
                }
            }
            PairKind::InversePower { c, gamma } => {
                if c == 0.0 {
                    0.0
                } else if r == 0.0 {
                    f64::INFINITY
                } else {
                    c * r.powf(-gamma)
                }
            }
            PairKind::CappedHardCore { m, a } => {
                if r <= a {
                    m.value()
                } else {
                    0.0
                }
            }
            PairKind::Zero => 0.0,
        };
        match self.cap {
            Some(m) => v.min(m),
            None => v,
        }
    }

    /// `sup{r >= 0 : v(r) = inf}`, or zero.
    pub fn core_radius(&self) -> f64 {
        match (self.kind, self.cap) {
            (PairKind::CappedHardCore { m: Level::Infinite, a }, None) => a,
            _ => 0.0,
        }
    }

    pub fn infimum(&self) -> f64 {
        match self.kind {
            PairKind::Gaussian { c, .. } | PairKind::SquareWell { c, .. } => c.min(0.0),
            _ => 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self.kind {
            PairKind::Zero => true,
            PairKind::Gaussian { c, .. } | PairKind::SquareWell { c, .. } | PairKind::InversePower { c, .. } => c == 0.0,
            PairKind::CappedHardCore { .. } => false,
        }
    }

    /// Characteristic length of the potential, if it has one.
    pub fn range(&self) -> Option<f64> {
        match self.kind {
            PairKind::Gaussian { sigma, .. } => Some(sigma),
            PairKind::SquareWell { r0, .. } => Some(r0),
            PairKind::CappedHardCore { a, .. } => Some(a),
            PairKind::InversePower { .. } | PairKind::Zero => None,
        }
    }

    /// Radii where `v` is discontinuous.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = match self.kind {
            PairKind::SquareWell { r0, .. } => vec![r0],
            PairKind::CappedHardCore { a, .. } => vec![a],
            _ => vec![],
        };
        // where a cap cuts into a singular profile
        if let (Some(m), PairKind::InversePower { c, gamma }) = (self.cap, self.kind) {
            if c > 0.0 {
                b.push((c / m).powf(1.0 / gamma));
            }
        }
        if let (Some(m), PairKind::Gaussian { c, sigma }) = (self.cap, self.kind) {
            if c > m {
                b.push(sigma * (2.0 * (c / m).ln()).sqrt());
            }
        }
        b
    }

    /// Support bound: `v = 0` beyond this radius.
    pub fn support_radius(&self) -> Option<f64> {
        match self.kind {
            PairKind::SquareWell { r0, .. } => Some(r0),
            PairKind::CappedHardCore { a, .. } => Some(a),
            PairKind::Zero => Some(0.0),
            _ => None,
        }
    }

    /// Pointwise minimum with the cutoff level.
    pub fn capped(&self, spec: CutoffSpec) -> Self {
        PairPotential { kind: self.kind, cap: Some(self.cap.map_or(spec.level, |m| m.min(spec.level))) }
    }

    pub fn rescaled(&self, scheme: Rescale, d: usize) -> Result<Self> {
        let (amp, len) = match scheme {
            Rescale::Dilation { xi } => {
                if !(xi > 0.0 && xi.is_finite()) {
                    return Err(Error::InvalidParameter(format!("dilation needs xi > 0, got {xi}")));
                }
                (xi.powi(-2), xi)
            }
            Rescale::LargeN { n } => {
                if n == 0 {
                    return Err(Error::InvalidParameter("large-N rescaling needs N >= 1".into()));
                }
                let nf = n as f64;
                (nf.powi(d as i32 - 1), 1.0 / nf)
            }
        };
        // new(r) = amp * v(r / len)
        let kind = match self.kind {
            PairKind::Gaussian { c, sigma } => PairKind::Gaussian { c: amp * c, sigma: sigma * len },
            PairKind::SquareWell { c, r0 } => PairKind::SquareWell { c: amp * c, r0: r0 * len },
            PairKind::InversePower { c, gamma } => PairKind::InversePower { c: amp * c * len.powf(gamma), gamma },
            PairKind::CappedHardCore { m, a } => PairKind::CappedHardCore {
                m: match m {
                    Level::Finite(v) => Level::Finite(amp * v),
                    Level::Infinite => Level::Infinite,
                },
                a: a * len,
            },
            PairKind::Zero => PairKind::Zero,
        };
        Ok(PairPotential { kind, cap: self.cap.map(|m| amp * m) })
    }

    /// `omega_d int_0^upper v(r) r^{d-1} dr`, i.e. the integral over the ball.
    fn ball_integral(&self, d: usize, upper: f64) -> RadialOutcome {
        let g = |r: f64| self.eval(r) * r.powi(d as i32 - 1);
        match integrate_from_origin(&g, upper, &self.breakpoints(), RADIAL_TOL) {
            RadialOutcome::Converged(v) => RadialOutcome::Converged(unit_sphere_area(d) * v),
            other => other,
        }
    }

    fn exterior_integral(&self, d: usize, lower: f64) -> RadialOutcome {
        if let Some(s) = self.support_radius() {
            if s <= lower {
                return RadialOutcome::Converged(0.0);
            }
        }
        let g = |r: f64| self.eval(r) * r.powi(d as i32 - 1);
        match integrate_to_infinity(&g, lower, &self.breakpoints(), RADIAL_TOL) {
            RadialOutcome::Converged(v) => RadialOutcome::Converged(unit_sphere_area(d) * v),
            other => other,
        }
    }
}

/// Soft core iff the core radius vanishes and `v` is integrable on the unit ball.
pub fn classify_pair(v: &PairPotential, d: usize) -> Result<PairClass> {
    v.validate()?;
    if v.core_radius() > 0.0 {
        return Ok(PairClass::HardCore);
    }
    match v.ball_integral(d, 1.0) {
        RadialOutcome::Converged(_) => Ok(PairClass::SoftCore),
        RadialOutcome::Divergent => Ok(PairClass::HardCore),
        RadialOutcome::Indeterminate => Err(Error::ClassificationIndeterminate(format!(
            "radial quadrature of {v:?} on the unit ball did not settle"
        ))),
    }
}

/// `(8 pi)^{-1} int_{R^d} v(|y|) dy`.
pub fn alpha_tilde(v: &PairPotential, d: usize) -> Result<f64> {
    if classify_pair(v, d)? != PairClass::SoftCore {
        return Err(Error::Precondition(format!("alpha_tilde needs a soft-core potential, got {v:?}")));
    }
    let inner = v
        .ball_integral(d, 1.0)
        .value()
        .ok_or_else(|| Error::InfiniteAlpha("unit-ball integral".into()))?;
    let outer = match v.exterior_integral(d, 1.0) {
        RadialOutcome::Converged(x) => x,
        _ => return Err(Error::InfiniteAlpha(format!("tail integral of {v:?} diverges"))),
    };
    Ok((inner + outer) / (8.0 * PI))
}

/// Energy level `M` for the cutoffs `W ^ M`, `v ^ M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub level: f64,
}

impl CutoffSpec {
    pub fn new(level: f64, v: &PairPotential) -> Result<Self> {
        if !(level.is_finite() && level > 0.0_f64.max(-v.infimum())) {
            return Err(Error::InvalidParameter(format!("cutoff level {level} must exceed max(0, -inf v)")));
        }
        Ok(CutoffSpec { level })
    }

    /// Ladder used when hard cores enter a solver through caps.
    pub const LADDER: [f64; 3] = [1e2, 1e3, 1e4];
}

/// Polynomial extrapolation of `values(s)` to `s = 0` (Neville).
pub fn extrapolate_to_zero(s: &[f64], values: &[f64]) -> f64 {
    assert_eq!(s.len(), values.len());
    let mut p = values.to_vec();
    let n = s.len();
    for k in 1..n {
        for i in 0..n - k {
            p[i] = (s[i + k] * p[i] - s[i] * p[i + 1]) / (s[i + k] - s[i]);
        }
    }
    p[0]
}
