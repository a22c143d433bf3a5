//! Parameter sweeps over N, beta and lambda, and the inequality tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{tv_distance, DensityField};
use crate::grid::Grid;
use crate::montecarlo::stats::jackknife;
use crate::montecarlo::{
    fk_oracle, run_chains, thermo_log_z, ChainOptions, ChainRun, DiracSampler, LatticeModel, PathModel, PathSampler,
    StartBall, ThermoOptions,
};
use crate::potentials::{alpha_tilde, classify_pair, PairClass, PairPotential, Rescale, TrapPotential};
use crate::scattering::inequality_report;
use crate::variational::{
    canonical_ground, gp_minimize, hartree_minimize, CanonicalOptions, Coupling, GpOptions, HartreeOptions,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis: f64,
    pub values: BTreeMap<String, f64>,
    /// manifest of the run that produced the point
    pub manifest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub kind: String,
    pub axis_name: String,
    pub points: Vec<SweepPoint>,
    pub reference: Option<f64>,
    pub gaps: Vec<f64>,
    pub notes: Vec<String>,
}

impl SweepResult {
    fn new(kind: &str, axis_name: &str) -> Self {
        SweepResult {
            kind: kind.into(),
            axis_name: axis_name.into(),
            points: Vec::new(),
            reference: None,
            gaps: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn push(&mut self, axis: f64, values: BTreeMap<String, f64>) {
        let manifest = format!("{}#{}", self.kind, self.points.len());
        self.points.push(SweepPoint { axis, values, manifest });
    }

    /// Points the manifest references at a file.
    pub fn set_manifest(&mut self, path: &str) {
        for (k, p) in self.points.iter_mut().enumerate() {
            p.manifest = format!("{path}#{k}");
        }
    }

    pub fn column(&self, key: &str) -> Vec<f64> {
        self.points.iter().map(|p| p.values.get(key).copied().unwrap_or(f64::NAN)).collect()
    }

    pub fn axis_is_increasing(&self) -> bool {
        self.points.windows(2).all(|w| w[0].axis < w[1].axis)
    }

    pub fn to_csv(&self) -> String {
        let mut keys: Vec<&String> = Vec::new();
        for p in &self.points {
            for k in p.values.keys() {
                if !keys.contains(&k) {
                    keys.push(k);
                }
            }
        }
        keys.sort();
        let mut out = String::new();
        let _ = write!(out, "{}", self.axis_name);
        for k in &keys {
            let _ = write!(out, ",{k}");
        }
        out.push_str(",manifest\n");
        for p in &self.points {
            let _ = write!(out, "{:e}", p.axis);
            for k in &keys {
                match p.values.get(*k) {
                    Some(v) => {
                        let _ = write!(out, ",{v:e}");
                    }
                    None => out.push(','),
                }
            }
            let _ = writeln!(out, ",{}", p.manifest);
        }
        out
    }

    /// Whitespace-separated `axis value` lines for plotting.
    pub fn two_column(&self, key: &str) -> String {
        let mut out = String::new();
        for p in &self.points {
            if let Some(v) = p.values.get(key) {
                let _ = writeln!(out, "{:e} {:e}", p.axis, v);
            }
        }
        out
    }
}

fn check_axis(values: &[f64], name: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidParameter(format!("{name} list is empty")));
    }
    if values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter(format!("{name} list must be strictly increasing")));
    }
    Ok(())
}

fn row(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LargeNOptions {
    pub hartree: HartreeOptions,
    pub gp: GpOptions,
    /// required cells per range of the rescaled potential
    pub cells_per_range: f64,
    pub allow_d3: bool,
}

impl Default for LargeNOptions {
    fn default() -> Self {
        LargeNOptions {
            hartree: HartreeOptions { multistart: 1, ..Default::default() },
            gp: GpOptions::default(),
            cells_per_range: 4.0,
            allow_d3: false,
        }
    }
}

/// Product-state energies under `v_N = N^{d-1} v(N .)` against the GP
/// energy at `alpha_tilde(v)`.
pub fn large_n_sweep(
    v: &PairPotential,
    w: &TrapPotential,
    ns: &[usize],
    grid: &Grid,
    opts: &LargeNOptions,
) -> Result<SweepResult> {
    let d = grid.d;
    if d != 2 && !(d == 3 && opts.allow_d3) {
        return Err(Error::Precondition(format!("large-N sweeps run in d = 2 (d = 3 behind a flag), got d = {d}")));
    }
    v.validate()?;
    if !(v.eval(0.0) > 0.0) || v.infimum() < 0.0 {
        return Err(Error::Precondition("need v >= 0 with v(0) > 0".into()));
    }
    if classify_pair(v, d)? != PairClass::SoftCore {
        return Err(Error::Precondition("large-N sweeps need a soft-core potential".into()));
    }
    let axis: Vec<f64> = ns.iter().map(|n| *n as f64).collect();
    check_axis(&axis, "N")?;
    let h = grid.spacing();
    let range = v.range().ok_or_else(|| Error::Precondition("potential has no characteristic range".into()))?;
    for &n in ns {
        let r = range / n as f64;
        if r < opts.cells_per_range * h {
            return Err(Error::RefineGrid(format!(
                "range of v_N at N = {n} is {r:.3e}, below {} cells of {h:.3e}; largest resolvable N is {}",
                opts.cells_per_range,
                (range / (opts.cells_per_range * h)).floor()
            )));
        }
    }
    let at = alpha_tilde(v, d)?;
    let gp = gp_minimize(w, at, grid, &opts.gp)?;
    let gp_density = DensityField { grid: *grid, values: gp.phi.values.iter().map(|x| x * x).collect() };
    let runs: Vec<Result<(f64, f64, f64, usize)>> = ns
        .par_iter()
        .map(|&n| {
            let vn = v.rescaled(Rescale::LargeN { n }, d)?;
            let st = hartree_minimize(w, &Coupling::Pair(vn), n, grid, &opts.hartree, None)?;
            let rho = DensityField { grid: *grid, values: st.mean_density() };
            let tv = tv_distance(&rho, &gp_density, 0.0)?;
            let res = st.residuals.iter().cloned().fold(0.0, f64::max);
            Ok((st.chi_product, tv, res, st.sweeps))
        })
        .collect();
    let mut out = SweepResult::new("large-n", "n");
    out.reference = Some(gp.chi_gp);
    out.notes.push(format!(
        "reference is the GP energy at alpha_tilde(v) = (8 pi)^-1 int v = {at:.10e}, not at the scattering length \
         alpha(v); the scattering length instead governs the limit of the full N-body ground state"
    ));
    for (n, r) in ns.iter().zip(runs) {
        let (chi, tv, res, sweeps) = r?;
        let gap = (chi - gp.chi_gp).abs();
        out.gaps.push(gap);
        out.push(
            *n as f64,
            row(&[
                ("chi_product", chi),
                ("chi_gp", gp.chi_gp),
                ("gap", gap),
                ("relative_gap", gap / gp.chi_gp.abs()),
                ("tv", tv),
                ("max_residual", res),
                ("sweeps", sweeps as f64),
            ]),
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CanonicalSweepOptions {
    pub canonical: CanonicalOptions,
    pub fk_tol: f64,
    /// thermodynamic integration at every rung when present
    pub thermo: Option<ThermoOptions>,
    /// lattice-walk occupation histograms at every rung when present
    pub occupation: Option<ChainOptions>,
}

impl Default for CanonicalSweepOptions {
    fn default() -> Self {
        CanonicalSweepOptions { canonical: CanonicalOptions::default(), fk_tol: 1e-12, thermo: None, occupation: None }
    }
}

/// Averages batch histograms, returning the tv distance to `target` and its
/// jackknife error over batches.
pub fn tv_with_jackknife(run: &ChainRun, target: &DensityField) -> Result<(f64, f64, f64)> {
    let len = target.values.len();
    if run.batch_observations.iter().any(|o| o.len() != len + 1) {
        return Err(Error::GridMismatch("histogram length does not match the target".into()));
    }
    let tv_of = |group: &[&Vec<f64>]| {
        let k = group.len() as f64;
        let mut m = vec![0.0; len];
        let mut escaped = 0.0;
        for o in group {
            m.iter_mut().zip(o.iter()).for_each(|(a, b)| *a += b / k);
            escaped += o[len] / k;
        }
        tv_distance(&DensityField { grid: target.grid, values: m }, target, escaped).unwrap_or(f64::NAN)
    };
    let all: Vec<&Vec<f64>> = run.batch_observations.iter().collect();
    let tv = tv_of(&all);
    let (_, se) = jackknife(&run.batch_observations, |g| tv_of(g));
    let escaped = all.iter().map(|o| o[len]).sum::<f64>() / all.len() as f64;
    Ok((tv, se, escaped))
}

/// Feynman–Kac slopes, and optionally sampled free energies and occupations,
/// against the canonical ground state across beta.
pub fn beta_sweep_canonical(
    w: &TrapPotential,
    v: &PairPotential,
    n: usize,
    grid: &Grid,
    betas: &[f64],
    opts: &CanonicalSweepOptions,
) -> Result<SweepResult> {
    check_axis(betas, "beta")?;
    let gs = canonical_ground(w, v, n, grid, &opts.canonical, None)?;
    let marginal = DensityField { grid: *grid, values: gs.one_particle_density(grid) };
    let mut out = SweepResult::new("beta-canonical", "beta");
    out.reference = Some(gs.chi_n);
    for &beta in betas {
        let fk = fk_oracle(w, v, n, grid, beta, None, opts.canonical.max_states, opts.fk_tol)?;
        let rate = -fk.slope / n as f64;
        let gap = (rate - gs.chi_n).abs();
        out.gaps.push(gap);
        let mut r = row(&[
            ("log_e", fk.log_e),
            ("slope", fk.slope),
            ("rate", rate),
            ("chi_n", gs.chi_n),
            ("gap", gap),
        ]);
        if opts.thermo.is_some() || opts.occupation.is_some() {
            let model = LatticeModel::new(w, v, n, grid, beta, None)?;
            if let Some(t) = &opts.thermo {
                let th = thermo_log_z(&model, t)?;
                r.insert("thermo_log_z".into(), th.log_z);
                r.insert("thermo_stderr".into(), th.stderr);
            }
            if let Some(c) = &opts.occupation {
                let run = run_chains(&model, 1.0, c, 0, |st| {
                    let mut o = model.occupation(st).values;
                    o.push(0.0);
                    o
                })?;
                let (tv, se, _) = tv_with_jackknife(&run, &marginal)?;
                r.insert("tv".into(), tv);
                r.insert("tv_stderr".into(), se);
                r.insert("acceptance".into(), run.acceptance);
                r.insert("rhat".into(), run.rhat);
            }
        }
        out.push(beta, r);
    }
    let logs: Vec<(f64, f64)> =
        betas.iter().zip(&out.gaps).filter(|(_, g)| **g > 0.0).map(|(b, g)| (*b, g.ln())).collect();
    if logs.len() >= 3 {
        out.notes.push(format!("log-gap vs beta: R^2 = {:.6}", r_squared(&logs)));
    }
    Ok(out)
}

/// Coefficient of determination of the least-squares line through `pts`.
pub fn r_squared(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    sxy * sxy / (sxx * syy)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HartreeSweepOptions {
    pub hartree: HartreeOptions,
    pub chain: ChainOptions,
    pub dt: f64,
    pub dt_max: f64,
    pub start_radius: f64,
    pub self_interaction: bool,
    pub max_segment: Option<usize>,
    pub shift_width: Option<f64>,
    pub moves_per_step: usize,
}

impl Default for HartreeSweepOptions {
    fn default() -> Self {
        HartreeSweepOptions {
            hartree: HartreeOptions::default(),
            chain: ChainOptions::default(),
            dt: 0.05,
            dt_max: 0.1,
            start_radius: 1.0,
            self_interaction: false,
            max_segment: None,
            shift_width: None,
            moves_per_step: 1,
        }
    }
}

/// Brownian-path occupation histograms of the Hartree model against the
/// Hartree minimizer density across beta.
pub fn beta_sweep_hartree(
    w: &TrapPotential,
    v: &PairPotential,
    n: usize,
    bins: &Grid,
    betas: &[f64],
    opts: &HartreeSweepOptions,
) -> Result<SweepResult> {
    check_axis(betas, "beta")?;
    let st = hartree_minimize(w, &Coupling::Pair(*v), n, bins, &opts.hartree, None)?;
    let target = DensityField { grid: *bins, values: st.mean_density() };
    let mut out = SweepResult::new("beta-hartree", "beta");
    out.reference = Some(st.chi_product);
    let model = if opts.self_interaction { PathModel::HartreeSelf } else { PathModel::Hartree };
    for &beta in betas {
        let mut s = PathSampler::new(
            model,
            w.clone(),
            *v,
            n,
            beta,
            opts.dt,
            opts.dt_max,
            StartBall { centre: vec![0.0; bins.d], radius: opts.start_radius },
            *bins,
        )?;
        if let Some(m) = opts.max_segment {
            s.max_segment = m.max(2);
        }
        if let Some(wd) = opts.shift_width {
            s.shift_width = wd;
        }
        s.moves_per_step = opts.moves_per_step.max(1);
        let run = run_chains(&s, 1.0, &opts.chain, 0, |state| {
            let mut o = Vec::with_capacity(bins.len() + 1);
            let total: f64 = state.masses.iter().flatten().sum::<f64>() + state.escaped.iter().sum::<f64>();
            let dv = bins.cell_volume();
            for c in 0..bins.len() {
                o.push(state.masses.iter().map(|m| m[c]).sum::<f64>() / (total * dv));
            }
            o.push(state.escaped.iter().sum::<f64>() / total);
            o
        })?;
        let (tv, se, escaped) = tv_with_jackknife(&run, &target)?;
        out.gaps.push(tv);
        out.push(
            beta,
            row(&[
                ("tv", tv),
                ("tv_stderr", se),
                ("escaped", escaped),
                ("acceptance", run.acceptance),
                ("rhat", run.rhat),
                ("dt", opts.dt),
            ]),
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiracSweepOptions {
    pub hartree: HartreeOptions,
    pub chain: ChainOptions,
    /// thermodynamic integration at every rung when present
    pub thermo: Option<ThermoOptions>,
    pub moves_per_step: usize,
    pub max_fraction: f64,
}

impl Default for DiracSweepOptions {
    fn default() -> Self {
        DiracSweepOptions {
            hartree: HartreeOptions::default(),
            chain: ChainOptions::default(),
            thermo: None,
            moves_per_step: 1,
            max_fraction: 0.3,
        }
    }
}

/// Rescaled local-time histograms of the Dirac walk model against the Dirac
/// product minimizer, one sweep over beta per lambda.
pub fn lambda_sweep_dirac(
    p: f64,
    n: usize,
    lambdas: &[f64],
    betas: &[f64],
    grid: &Grid,
    opts: &DiracSweepOptions,
) -> Result<Vec<SweepResult>> {
    let d = grid.d;
    check_axis(lambdas, "lambda")?;
    check_axis(betas, "beta")?;
    let w = TrapPotential::power(p);
    let mut all = Vec::new();
    for &lambda in lambdas {
        DiracSampler::new(n, d, p, lambda, betas[0])?;
        let st = hartree_minimize(&w, &Coupling::Dirac { lambda }, n, grid, &opts.hartree, None)?;
        let target = DensityField { grid: *grid, values: st.mean_density() };
        let mut out = SweepResult::new("lambda-dirac", "beta");
        out.reference = Some(st.chi_product);
        out.notes.push(format!("lambda = {lambda:e}; rates normalized by beta^(p/(2+p))"));
        for &beta in betas {
            let mut s = DiracSampler::new(n, d, p, lambda, beta)?;
            s.moves_per_step = opts.moves_per_step.max(1);
            s.max_fraction = opts.max_fraction;
            let run = run_chains(&s, 1.0, &opts.chain, 0, |state| {
                let (rho, out) = s.occupation(state, grid).expect("grid dimension checked");
                let mut o = rho.values;
                o.push(out);
                o
            })?;
            let (tv, se, escaped) = tv_with_jackknife(&run, &target)?;
            out.gaps.push(tv);
            let mut r = row(&[
                ("lambda", lambda),
                ("tv", tv),
                ("tv_stderr", se),
                ("escaped", escaped),
                ("acceptance", run.acceptance),
                ("rhat", run.rhat),
                ("chi_dirac", st.chi_product),
            ]);
            if let Some(t) = &opts.thermo {
                let th = thermo_log_z(&s, t)?;
                let scale = beta.powf(p / (2.0 + p));
                r.insert("log_z".into(), th.log_z);
                r.insert("log_z_stderr".into(), th.stderr);
                r.insert("rate".into(), -th.log_z / (n as f64 * scale));
            }
            out.push(beta, r);
        }
        all.push(out);
    }
    Ok(all)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InequalityInstance {
    /// product-state energy against the N-body ground state on one grid
    ProductVsCanonical {
        trap: TrapPotential,
        pair: PairPotential,
        n: usize,
        grid: Grid,
        #[serde(default)]
        hartree: HartreeOptions,
        #[serde(default)]
        canonical: CanonicalOptions,
    },
    /// scattering length against its integral surrogate in d = 3
    ScatteringVsIntegral { pair: PairPotential },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityRow {
    pub kind: String,
    pub lhs_name: String,
    pub lhs: f64,
    pub rhs_name: String,
    pub rhs: f64,
    /// `lhs - rhs`, nonnegative when the inequality holds
    pub gap: f64,
    pub holds: bool,
}

pub fn inequality_report_run(instances: &[InequalityInstance]) -> Result<Vec<InequalityRow>> {
    instances
        .iter()
        .map(|inst| match inst {
            InequalityInstance::ProductVsCanonical { trap, pair, n, grid, hartree, canonical } => {
                let st = hartree_minimize(trap, &Coupling::Pair(*pair), *n, grid, hartree, None)?;
                let gs = canonical_ground(trap, pair, *n, grid, canonical, None)?;
                let gap = st.chi_product - gs.chi_n;
                Ok(InequalityRow {
                    kind: "product-vs-canonical".into(),
                    lhs_name: "chi_product".into(),
                    lhs: st.chi_product,
                    rhs_name: "chi_n".into(),
                    rhs: gs.chi_n,
                    gap,
                    holds: gap >= -1e-6,
                })
            }
            InequalityInstance::ScatteringVsIntegral { pair } => {
                let r = inequality_report(pair)?;
                Ok(InequalityRow {
                    kind: "scattering-vs-integral".into(),
                    lhs_name: "alpha_tilde".into(),
                    lhs: r.alpha_tilde,
                    rhs_name: "alpha".into(),
                    rhs: r.alpha,
                    gap: r.alpha_tilde - r.alpha,
                    holds: r.alpha_below_tilde,
                })
            }
        })
        .collect()
}

pub fn inequality_csv(rows: &[InequalityRow]) -> String {
    let mut out = String::from("kind,lhs_name,lhs,rhs_name,rhs,gap,holds\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{:e},{},{:e},{:e},{}", r.kind, r.lhs_name, r.lhs, r.rhs_name, r.rhs, r.gap, r.holds);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;

    #[test]
    fn empty_instance_list_gives_empty_table() {
        assert!(inequality_report_run(&[]).unwrap().is_empty());
        assert_eq!(inequality_csv(&[]).lines().count(), 1);
    }

    #[test]
    fn large_n_rejects_degenerate_potentials() {
        let g = Grid::new(2, 4.0, 16, Boundary::Dirichlet).unwrap();
        let w = TrapPotential::harmonic();
        let e = large_n_sweep(&PairPotential::zero(), &w, &[1, 2], &g, &LargeNOptions::default()).unwrap_err();
        assert!(matches!(e, Error::Precondition(_)));
        let e = large_n_sweep(&PairPotential::gaussian(1.0, 1.0), &w, &[1, 64], &g, &LargeNOptions::default());
        assert!(matches!(e, Err(Error::RefineGrid(_))));
    }

    #[test]
    fn single_particle_gap_is_the_interaction_shift() {
        let g = Grid::new(2, 4.0, 32, Boundary::Dirichlet).unwrap();
        let w = TrapPotential::harmonic();
        let v = PairPotential::gaussian(1.0, 2.0);
        let sweep = large_n_sweep(&v, &w, &[1], &g, &LargeNOptions::default()).unwrap();
        let chi1 = hartree_minimize(&w, &Coupling::Pair(v), 1, &g, &HartreeOptions::default(), None).unwrap().chi_product;
        let gp = gp_minimize(&w, alpha_tilde(&v, 2).unwrap(), &g, &GpOptions::default()).unwrap().chi_gp;
        assert!((sweep.gaps[0] - (chi1 - gp).abs()).abs() < 1e-8);
        assert!(sweep.to_csv().starts_with("n,chi_gp,chi_product,gap"));
    }

    #[test]
    fn canonical_sweep_gap_shrinks() {
        let g = Grid::new(1, 3.0, 16, Boundary::Dirichlet).unwrap();
        let s = beta_sweep_canonical(
            &TrapPotential::harmonic(),
            &PairPotential::gaussian(1.0, 0.7),
            2,
            &g,
            &[1.0, 2.0, 4.0],
            &CanonicalSweepOptions::default(),
        )
        .unwrap();
        assert!(s.axis_is_increasing());
        assert!(s.gaps.windows(2).all(|w| w[1] < w[0]), "{:?}", s.gaps);
        let single = beta_sweep_canonical(
            &TrapPotential::harmonic(),
            &PairPotential::gaussian(1.0, 0.7),
            2,
            &g,
            &[2.0],
            &CanonicalSweepOptions::default(),
        )
        .unwrap();
        assert_eq!(single.points[0].values, s.points[1].values);
    }

    #[test]
    fn unsorted_axes_are_rejected() {
        let g = Grid::new(1, 3.0, 8, Boundary::Dirichlet).unwrap();
        let r = beta_sweep_canonical(
            &TrapPotential::harmonic(),
            &PairPotential::zero(),
            1,
            &g,
            &[2.0, 1.0],
            &CanonicalSweepOptions::default(),
        );
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn r_squared_of_a_line_is_one() {
        let pts: Vec<(f64, f64)> = (0..5).map(|k| (k as f64, 2.0 - 0.5 * k as f64)).collect();
        assert!((r_squared(&pts) - 1.0).abs() < 1e-12);
    }
}
