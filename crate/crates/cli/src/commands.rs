//! Maps each subcommand onto the library and collects its result files in memory.

use std::collections::BTreeMap;

use bosepath::experiments::{
    beta_sweep_canonical, beta_sweep_hartree, inequality_csv, inequality_report_run, lambda_sweep_dirac, large_n_sweep,
    CanonicalSweepOptions, DiracSweepOptions, HartreeSweepOptions, LargeNOptions, SweepResult,
};
use bosepath::fields::{format_field, FieldKind};
use bosepath::montecarlo::fk_oracle;
use bosepath::scattering::{alpha_d2_general, alpha_d3, inequality_report};
use bosepath::variational::{canonical_ground, gp_minimize, hartree_minimize, Coupling};
use bosepath::{Error, Grid, PairPotential, Result, TrapPotential};
use serde_json::{json, Value};

use crate::config::{Problem, RunConfig, SweepModel};

/// Everything a run produces before any of it touches the disk.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<(String, Vec<u8>)>,
    pub headline: BTreeMap<String, f64>,
}

impl Outcome {
    fn json(&mut self, name: &str, value: &Value) {
        let mut s = serde_json::to_string_pretty(value).expect("json values serialize");
        s.push('\n');
        self.files.push((name.into(), s.into_bytes()));
    }

    fn text(&mut self, name: &str, body: String) {
        self.files.push((name.into(), body.into_bytes()));
    }

    fn field(&mut self, name: &str, grid: &Grid, values: &[f64], kind: FieldKind) {
        self.text(name, format_field(grid, values, kind));
    }

    fn head(&mut self, key: &str, v: f64) {
        self.headline.insert(key.into(), v);
    }

    fn sweep(&mut self, stem: &str, mut sw: SweepResult, columns: &[&str]) {
        sw.set_manifest("manifest.json");
        self.text(&format!("{stem}.csv"), sw.to_csv());
        for c in columns {
            self.text(&format!("{stem}_{c}.dat"), sw.two_column(c));
        }
        self.json(&format!("{stem}.json"), &serde_json::to_value(&sw).expect("sweep serializes"));
    }
}

fn need<T: Clone>(x: &Option<T>, what: &str) -> Result<T> {
    x.clone().ok_or_else(|| Error::InvalidParameter(format!("missing `{what}`")))
}

fn trap(cfg: &RunConfig) -> Result<TrapPotential> {
    Ok(need(&cfg.trap, "trap")?.build())
}

fn pair_or_zero(cfg: &RunConfig) -> PairPotential {
    cfg.pair.map(|p| p.build()).unwrap_or_else(PairPotential::zero)
}

pub fn run(problem: Problem, cfg: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    match problem {
        Problem::Gp => {
            let grid = need(&cfg.grid, "grid")?;
            let alpha = need(&cfg.alpha, "alpha")?;
            let r = gp_minimize(&trap(cfg)?, alpha, &grid, &cfg.gp)?;
            out.json(
                "result.json",
                &json!({
                    "problem": "gp",
                    "alpha": alpha,
                    "chi_gp": r.chi_gp,
                    "iterations": r.iterations,
                    "residual": r.residual,
                    "energy_trace_len": r.energy_trace.len(),
                }),
            );
            out.field("phi.field", &grid, &r.phi.values, FieldKind::Scalar);
            out.head("chi_gp", r.chi_gp);
        }
        Problem::Hartree => {
            let grid = need(&cfg.grid, "grid")?;
            let n = need(&cfg.particles, "particles")?;
            let coupling = match (cfg.pair, cfg.lambda) {
                (Some(p), None) => Coupling::Pair(p.build()),
                (None, Some(lambda)) => Coupling::Dirac { lambda },
                _ => return Err(Error::InvalidParameter("give either [pair] or `lambda`".into())),
            };
            let st = hartree_minimize(&trap(cfg)?, &coupling, n, &grid, &cfg.hartree(), None)?;
            out.json(
                "result.json",
                &json!({
                    "problem": "hartree",
                    "particles": n,
                    "chi_product": st.chi_product,
                    "lambda": st.lambda,
                    "residuals": st.residuals,
                    "sweeps": st.sweeps,
                    "seed_energies": st.seed_energies,
                }),
            );
            for (i, h) in st.h.iter().enumerate() {
                out.field(&format!("h_{i}.field"), &grid, &h.values, FieldKind::Scalar);
            }
            out.field("density.field", &grid, &st.mean_density(), FieldKind::Density);
            out.head("chi_product", st.chi_product);
        }
        Problem::Canonical => {
            let grid = need(&cfg.grid, "grid")?;
            let n = need(&cfg.particles, "particles")?;
            let gs = canonical_ground(&trap(cfg)?, &pair_or_zero(cfg), n, &grid, &cfg.canonical, None)?;
            let excluded = gs.excluded_mask.iter().filter(|b| **b).count();
            out.json(
                "result.json",
                &json!({
                    "problem": "canonical",
                    "particles": n,
                    "chi_n": gs.chi_n,
                    "eigenvalue": gs.eigenvalue,
                    "residual": gs.residual,
                    "matvecs": gs.matvecs,
                    "excluded_states": excluded,
                }),
            );
            out.field("density.field", &grid, &gs.one_particle_density(&grid), FieldKind::Density);
            out.head("chi_n", gs.chi_n);
        }
        Problem::Scattering => {
            let v = need(&cfg.pair, "pair")?.build();
            let d = need(&cfg.dimension, "dimension")?;
            let sol = match d {
                3 => alpha_d3(&v, cfg.r_max)?,
                2 => alpha_d2_general(&v)?,
                _ => return Err(Error::InvalidParameter(format!("scattering needs dimension 2 or 3, got {d}"))),
            };
            let mut res = json!({
                "problem": "scattering",
                "dimension": d,
                "alpha": sol.alpha,
                "r_max": sol.r_max,
                "residual": sol.residual,
            });
            if d == 3 && v.eval(0.0) > 0.0 && v.infimum() >= 0.0 {
                let rep = inequality_report(&v)?;
                res["inequalities"] = serde_json::to_value(&rep).expect("report serializes");
            }
            out.json("result.json", &res);
            let mut u = String::from("# r u(r)\n");
            for (r, x) in &sol.u_samples {
                u.push_str(&format!("{r:e} {x:e}\n"));
            }
            out.text("u.dat", u);
            out.head("alpha", sol.alpha);
        }
        Problem::McCanonical => canonical_beta(problem, cfg, &mut out)?,
        Problem::McHartree => hartree_beta(problem, cfg, &mut out)?,
        Problem::SweepBeta => match need(&cfg.model, "model")? {
            SweepModel::Canonical => canonical_beta(problem, cfg, &mut out)?,
            SweepModel::Hartree => hartree_beta(problem, cfg, &mut out)?,
        },
        Problem::RwDirac | Problem::SweepLambda => {
            let (lambdas, betas) = if problem == Problem::RwDirac {
                (vec![need(&cfg.lambda, "lambda")?], vec![need(&cfg.beta, "beta")?])
            } else {
                (need(&cfg.lambdas, "lambdas")?, need(&cfg.betas, "betas")?)
            };
            let grid = need(&cfg.grid, "grid")?;
            let n = need(&cfg.particles, "particles")?;
            let p = need(&cfg.exponent, "exponent")?;
            let opts = DiracSweepOptions {
                hartree: cfg.hartree(),
                chain: cfg.chain(),
                thermo: cfg.thermo(),
                moves_per_step: cfg.walks.moves_per_step,
                max_fraction: cfg.walks.max_fraction,
            };
            let sweeps = lambda_sweep_dirac(p, n, &lambdas, &betas, &grid, &opts)?;
            if problem == Problem::RwDirac {
                let sw = sweeps.into_iter().next().expect("one lambda");
                headline_last(&mut out, &sw, &["tv", "chi_dirac", "rate"]);
                out.sweep("result", sw, &["tv"]);
            } else {
                for (k, sw) in sweeps.into_iter().enumerate() {
                    if let Some(r) = sw.reference {
                        out.head(&format!("chi_dirac_{k}"), r);
                    }
                    out.sweep(&format!("sweep_lambda_{k}"), sw, &["tv"]);
                }
            }
        }
        Problem::SweepLargeN => {
            let grid = need(&cfg.grid, "grid")?;
            let ns = need(&cfg.ns, "ns")?;
            let opts = LargeNOptions {
                hartree: cfg.hartree(),
                gp: cfg.gp,
                cells_per_range: cfg.large_n.cells_per_range,
                allow_d3: cfg.large_n.allow_d3,
            };
            let sw = large_n_sweep(&need(&cfg.pair, "pair")?.build(), &trap(cfg)?, &ns, &grid, &opts)?;
            headline_last(&mut out, &sw, &["chi_product", "relative_gap", "tv"]);
            if let Some(r) = sw.reference {
                out.head("chi_gp", r);
            }
            out.sweep("sweep", sw, &["gap", "tv"]);
        }
        Problem::ReportInequalities => {
            let rows = inequality_report_run(&cfg.instances())?;
            out.head("violations", rows.iter().filter(|r| !r.holds).count() as f64);
            out.text("inequalities.csv", inequality_csv(&rows));
            out.json("inequalities.json", &serde_json::to_value(&rows).expect("rows serialize"));
        }
    }
    Ok(out)
}

fn headline_last(out: &mut Outcome, sw: &SweepResult, keys: &[&str]) {
    if let Some(p) = sw.points.last() {
        for k in keys {
            if let Some(v) = p.values.get(*k) {
                out.head(k, *v);
            }
        }
    }
}

fn canonical_beta(problem: Problem, cfg: &RunConfig, out: &mut Outcome) -> Result<()> {
    let betas =
        if problem == Problem::McCanonical { vec![need(&cfg.beta, "beta")?] } else { need(&cfg.betas, "betas")? };
    let opts = CanonicalSweepOptions {
        canonical: cfg.canonical,
        fk_tol: cfg.fk.tol,
        thermo: cfg.thermo(),
        occupation: Some(cfg.chain()),
    };
    let grid = need(&cfg.grid, "grid")?;
    let n = need(&cfg.particles, "particles")?;
    let w = trap(cfg)?;
    let v = pair_or_zero(cfg);
    let sw = beta_sweep_canonical(&w, &v, n, &grid, &betas, &opts)?;
    headline_last(out, &sw, &["tv", "rate", "chi_n", "thermo_log_z"]);
    if problem == Problem::McCanonical && cfg.fk.enabled {
        let fk = fk_oracle(&w, &v, n, &grid, betas[0], None, cfg.fk.max_states, cfg.fk.tol)?;
        out.json("fk.json", &serde_json::to_value(&fk).expect("fk serializes"));
    }
    out.sweep(if problem == Problem::McCanonical { "result" } else { "sweep" }, sw, &["tv", "gap"]);
    Ok(())
}

fn hartree_beta(problem: Problem, cfg: &RunConfig, out: &mut Outcome) -> Result<()> {
    let betas = if problem == Problem::McHartree { vec![need(&cfg.beta, "beta")?] } else { need(&cfg.betas, "betas")? };
    let grid = need(&cfg.grid, "grid")?;
    let n = need(&cfg.particles, "particles")?;
    let opts = HartreeSweepOptions {
        hartree: cfg.hartree(),
        chain: cfg.chain(),
        dt: cfg.paths.dt,
        dt_max: cfg.paths.dt_max,
        start_radius: cfg.paths.start_radius,
        self_interaction: cfg.paths.self_interaction,
        max_segment: cfg.paths.max_segment,
        shift_width: cfg.paths.shift_width,
        moves_per_step: cfg.paths.moves_per_step,
    };
    let sw = beta_sweep_hartree(&trap(cfg)?, &pair_or_zero(cfg), n, &grid, &betas, &opts)?;
    headline_last(out, &sw, &["tv", "acceptance"]);
    if let Some(r) = sw.reference {
        out.head("chi_product", r);
    }
    out.sweep(if problem == Problem::McHartree { "result" } else { "sweep" }, sw, &["tv"]);
    Ok(())
}
