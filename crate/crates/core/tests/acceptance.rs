//! End-to-end acceptance checks, one line per criterion.
//!
//! Run a subset with `cargo test --test acceptance -- 3 7`.

use std::time::Instant;

use bosepath::experiments::{
    beta_sweep_canonical, beta_sweep_hartree, lambda_sweep_dirac, large_n_sweep, CanonicalSweepOptions,
    DiracSweepOptions, HartreeSweepOptions, LargeNOptions, SweepResult,
};
use bosepath::montecarlo::{
    ctrw_simulate, fk_oracle, intersection_alpha, local_times, rescaled_l, stream, thermo_log_z, ChainOptions,
    LatticeModel, ThermoOptions, TinyPathChain,
};
use bosepath::potentials::{alpha_tilde, Rescale};
use bosepath::scattering::{alpha_d3, inequality_report};
use bosepath::variational::{
    canonical_ground, el_residual, gp_minimize, hartree_minimize, rate_canonical, rate_dirac, rate_hartree,
    recompute_lambda, tilt_derivative_check, CanonicalOptions, Coupling, GpOptions, HartreeOptions, Measure,
    ProductState,
};
use bosepath::{Boundary, DensityField, Grid, PairPotential, Result, ScalarField, TrapPotential};
use rand::Rng;

type Outcome = Result<(bool, String)>;

fn list(x: &[f64]) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn c1() -> Outcome {
    let sw = alpha_d3(&PairPotential::square_well(2.0, 1.0), None)?.alpha;
    let exact = 1.0 - 1f64.tanh();
    let hc = alpha_d3(&PairPotential::hard_core(0.5), None)?.alpha;
    let ok = (sw - exact).abs() < 1e-6 && (hc - 0.5).abs() < 1e-4;
    Ok((ok, format!("square well {sw:.10} vs {exact:.10}; hard core a=0.5 -> {hc:.8}")))
}

fn c2() -> Outcome {
    let pots = [
        PairPotential::gaussian(1.0, 1.0),
        PairPotential::square_well(2.0, 1.0),
        PairPotential::plateau(5.0, 0.7),
        PairPotential::gaussian(4.0, 0.5),
    ];
    let mut worst_scale = 0.0f64;
    let mut worst_identity = 0.0f64;
    let mut below = true;
    for v in &pots {
        let a = alpha_d3(v, None)?.alpha;
        for xi in [0.1, 0.5, 2.0] {
            let ax = alpha_d3(&v.rescaled(Rescale::Dilation { xi }, 3)?, None)?.alpha;
            worst_scale = worst_scale.max((ax - xi * a).abs() / (xi * a));
        }
        let r = inequality_report(v)?;
        worst_identity = worst_identity.max(r.identity_residual);
        below &= r.alpha < r.alpha_tilde;
    }
    let ok = worst_scale < 1e-6 && worst_identity < 1e-3 && below;
    Ok((ok, format!("scaling {worst_scale:.2e}, identity {worst_identity:.2e}, alpha < alpha_tilde: {below}")))
}

fn c3() -> Outcome {
    let harmonic = Grid::new(2, 8.0, 128, Boundary::Dirichlet)?;
    let chi = gp_minimize(&TrapPotential::harmonic(), 0.0, &harmonic, &GpOptions::default())?.chi_gp;
    let r = 1.0;
    let exact = 2.0 * (std::f64::consts::PI / (2.0 * r)).powi(2);
    let mut errs = Vec::new();
    for n in [15, 31, 63] {
        let g = Grid::new(2, r, n, Boundary::Dirichlet)?;
        let gs = canonical_ground(&TrapPotential::hard_box(2.0), &PairPotential::zero(), 1, &g, &CanonicalOptions::default(), None)?;
        errs.push((gs.chi_n - exact).abs());
    }
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let fine = errs[2] / exact;
    let ok = (chi - 2.0).abs() < 5e-3 && fine < 1e-3 && orders.iter().all(|o| *o >= 1.8);
    Ok((ok, format!("harmonic chi_1 = {chi:.6}; box relative error {fine:.2e}; orders {orders:.3?}")))
}

fn c4_state() -> Result<(ProductState, f64)> {
    let g = Grid::new(2, 4.5, 24, Boundary::Dirichlet)?;
    let w = TrapPotential::harmonic();
    let v = PairPotential::gaussian(2.0, 1.0);
    let st = hartree_minimize(&w, &Coupling::Pair(v), 2, &g, &HartreeOptions::default(), None)?;
    let gs = canonical_ground(&w, &v, 2, &g, &CanonicalOptions::default(), None)?;
    Ok((st, gs.chi_n))
}

fn c4() -> Outcome {
    let (st, chi_n) = c4_state()?;
    let gap = st.chi_product - chi_n;
    Ok((gap >= -1e-6, format!("chi_product {:.10} chi_N {chi_n:.10} gap {gap:.3e}", st.chi_product)))
}

fn c5() -> Outcome {
    let g = Grid::new(2, 4.0, 32, Boundary::Dirichlet)?;
    let w = TrapPotential::harmonic();
    let couplings = [
        (Coupling::Pair(PairPotential::gaussian(2.0, 1.0)), 2),
        (Coupling::Pair(PairPotential::gaussian(1.0, 0.5)), 3),
        (Coupling::Pair(PairPotential::square_well(1.0, 0.8)), 2),
        (Coupling::Dirac { lambda: 2.0 }, 2),
        (Coupling::Dirac { lambda: 5.0 }, 3),
    ];
    let mut worst_res = 0.0f64;
    let mut worst_lambda = 0.0f64;
    for (c, n) in &couplings {
        let st = hartree_minimize(&w, c, *n, &g, &HartreeOptions::default(), None)?;
        worst_res = el_residual(&st)?.into_iter().fold(worst_res, f64::max);
        for (a, b) in recompute_lambda(&st)?.iter().zip(&st.lambda) {
            worst_lambda = worst_lambda.max((a - b).abs() / b.abs());
        }
    }
    let ok = worst_res <= 1e-5 && worst_lambda <= 1e-6;
    Ok((ok, format!("{} states: max residual {worst_res:.2e}, max lambda mismatch {worst_lambda:.2e}", couplings.len())))
}

fn smooth_direction(g: Grid, rng: &mut impl Rng) -> ScalarField {
    let (a, b, c): (f64, f64, f64) =
        (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.2..1.0));
    ScalarField::from_fn(g, |x| (1.0 + (a * x[0] + b * x[1]).sin()) * (-c * (x[0] * x[0] + x[1] * x[1]) / 4.0).exp())
}

fn c6() -> Outcome {
    let g = Grid::new(2, 4.0, 24, Boundary::Dirichlet)?;
    let w = TrapPotential::harmonic();
    let c = Coupling::Pair(PairPotential::gaussian(2.0, 1.0));
    let opts = HartreeOptions { tol: 1e-14, el_tol: 1e-8, multistart: 1, ..Default::default() };
    let mut rng = stream(2024, 0);
    let mut gaps = Vec::new();
    for k in 0..5 {
        let n = 1 + k % 2;
        let dirs: Vec<ScalarField> = (0..n).map(|_| smooth_direction(g, &mut rng)).collect();
        gaps.push(tilt_derivative_check(&w, &c, n, &g, None, &dirs, &opts)?.gap);
    }
    let ok = gaps.iter().all(|x| *x < 1e-3);
    Ok((ok, format!("relative gaps {}", list(&gaps))))
}

fn c7() -> Outcome {
    let g = Grid::new(2, 2.0, 8, Boundary::Periodic)?;
    let w = TrapPotential::harmonic();
    let v = PairPotential::gaussian(1.0, 0.5);
    let gs = canonical_ground(&w, &v, 2, &g, &CanonicalOptions::default(), None)?;
    let big = fk_oracle(&w, &v, 2, &g, 20.0, None, 1 << 22, 1e-13)?;
    let slope_gap = (big.slope + gs.eigenvalue).abs();
    let mut ok = slope_gap < 1e-4;
    let mut detail = format!("slope {:.8} vs -{:.8} (gap {slope_gap:.1e});", big.slope, gs.eigenvalue);
    let topts = ThermoOptions {
        nodes: 6,
        chain: ChainOptions { chains: 4, steps: 8000, ..Default::default() },
        ..Default::default()
    };
    for (beta, n) in [(0.5, 2), (1.0, 2), (1.0, 1)] {
        let m = LatticeModel::new(&w, &v, n, &g, beta, None)?;
        let mc = thermo_log_z(&m, &topts)?;
        let exact = fk_oracle(&w, &v, n, &g, beta, None, 1 << 22, 1e-13)?.log_e;
        let z = (mc.log_z - exact).abs() / mc.stderr;
        ok &= z < 3.0;
        detail += &format!(" (beta {beta}, N {n}): {:.5}+-{:.5} vs {exact:.5};", mc.log_z, mc.stderr);
    }
    Ok((ok, detail))
}

fn c8() -> Outcome {
    let mut pairs = 0;
    let mut worst = 0.0f64;
    let mut exact_total = true;
    for (k, (beta, p)) in [(9.0, 2.0), (30.0, 1.5), (64.0, 3.0), (17.3, 2.5)].into_iter().enumerate() {
        let d = 2usize;
        let walks = ctrw_simulate(8, beta, d, 100 + k as u64)?;
        // the simulated horizon is beta rounded to the tick resolution
        let beta = walks[0].beta();
        for w in &walks {
            exact_total &= local_times(w).values().sum::<u64>() == w.horizon;
        }
        let ls: Vec<_> = walks.iter().map(|w| rescaled_l(w, p)).collect::<Result<_>>()?;
        for i in 0..walks.len() {
            for j in i + 1..walks.len() {
                if pairs == 100 {
                    break;
                }
                let lhs = beta.powf((d as f64 + p) / (2.0 + p)) * intersection_alpha(&walks[i], &walks[j]);
                let rhs = beta.powf(p / (2.0 + p)) * ls[i].inner(&ls[j]);
                // rounding of a sum of `terms` products plus a handful of powers
                let terms = ls[i].values.keys().filter(|z| ls[j].values.contains_key(*z)).count();
                let allowed = 4.0 * f64::EPSILON * (terms as f64 + 16.0);
                if lhs != 0.0 || rhs != 0.0 {
                    worst = worst.max((lhs - rhs).abs() / (lhs.abs().max(rhs.abs()) * allowed));
                }
                pairs += 1;
            }
        }
    }
    let ok = pairs == 100 && worst <= 1.0 && exact_total;
    Ok((ok, format!("{pairs} pairs, worst deviation {worst:.3} of the rounding allowance, total local time exact: {exact_total}")))
}

fn decreasing(s: &SweepResult) -> (bool, String) {
    let tv = s.column("tv");
    let se = s.column("tv_stderr");
    let ok = (0..tv.len() - 1).all(|k| tv[k] - tv[k + 1] > 2.0 * (se[k].powi(2) + se[k + 1].powi(2)).sqrt());
    let parts: Vec<String> = tv.iter().zip(&se).zip(&s.points).map(|((t, e), p)| format!("{}:{t:.4}+-{e:.4}", p.axis)).collect();
    (ok, parts.join(" "))
}

fn c9() -> Outcome {
    let w = TrapPotential::harmonic();
    let lattice = Grid::new(1, 3.0, 16, Boundary::Dirichlet)?;
    let canon = beta_sweep_canonical(
        &w,
        &PairPotential::gaussian(1.0, 0.7),
        2,
        &lattice,
        &[1.0, 2.0, 4.0],
        &CanonicalSweepOptions {
            occupation: Some(ChainOptions { chains: 4, steps: 20_000, batches: 20, seed: 9, ..Default::default() }),
            ..Default::default()
        },
    )?;
    let bins = Grid::new(1, 4.0, 32, Boundary::Dirichlet)?;
    let hartree = beta_sweep_hartree(
        &w,
        &PairPotential::gaussian(1.0, 0.7),
        2,
        &bins,
        &[0.5, 2.0, 8.0],
        &HartreeSweepOptions {
            chain: ChainOptions { chains: 4, steps: 40_000, batches: 20, seed: 9, thin: 4, ..Default::default() },
            start_radius: 0.5,
            ..Default::default()
        },
    )?;
    let dirac_grid = Grid::new(2, 95.0 / 24.0, 94, Boundary::Dirichlet)?;
    let dirac = lambda_sweep_dirac(
        2.0,
        2,
        &[1.0],
        &[16.0, 81.0, 256.0],
        &dirac_grid,
        &DiracSweepOptions {
            chain: ChainOptions { chains: 4, steps: 40_000, batches: 20, seed: 9, thin: 20, ..Default::default() },
            max_fraction: 0.05,
            ..Default::default()
        },
    )?;
    let (a, da) = decreasing(&canon);
    let (b, db) = decreasing(&hartree);
    let (c, dc) = decreasing(&dirac[0]);
    Ok((a && b && c, format!("canonical [{da}] hartree [{db}] dirac [{dc}]")))
}

fn c10() -> Outcome {
    let grid = Grid::new(2, 4.0, 255, Boundary::Dirichlet)?;
    let v = PairPotential::gaussian(0.5, 2.0);
    let s = large_n_sweep(&v, &TrapPotential::harmonic(), &[2, 4, 8, 16], &grid, &LargeNOptions::default())?;
    let gaps = s.column("gap");
    let rel = s.column("relative_gap");
    let tv = s.column("tv");
    let ok = gaps.windows(2).all(|w| w[1] < w[0]) && rel[3] < 0.05 && tv.windows(2).all(|w| w[1] < w[0]);
    Ok((ok, format!("alpha_tilde {:.4}; gaps {}; relative at N=16 {:.3e}; tv {}", alpha_tilde(&v, 2)?, list(&gaps), rel[3], list(&tv))))
}

fn c11() -> Outcome {
    let g = Grid::new(2, 4.0, 20, Boundary::Dirichlet)?;
    let w = TrapPotential::harmonic();
    let v = PairPotential::gaussian(2.0, 0.8);
    let mut notes = Vec::new();
    let st = hartree_minimize(&w, &Coupling::Pair(v), 3, &g, &HartreeOptions::default(), None)?;
    let monotone = st.energy_trace.windows(2).all(|x| x[1] <= x[0] + 1e-12 * x[0].abs().max(1.0));
    notes.push(format!("monotone sweeps {monotone}"));

    let mus: Vec<DensityField> = st.h.iter().map(|h| h.square_density()).collect();
    let r_h = rate_hartree(&mus, st.chi_product, &w, &v)?.value;
    let off: Vec<DensityField> = mus
        .iter()
        .map(|m| {
            let mut s = m.values.clone();
            s.rotate_right(3 * g.n);
            DensityField { grid: g, values: s }.normalized()
        })
        .collect::<Result<_>>()?;
    let uniform = vec![DensityField::uniform(g); 3];
    let r_off = rate_hartree(&uniform, st.chi_product, &w, &v)?.value.min(rate_hartree(&off, st.chi_product, &w, &v)?.value);
    let small = Grid::new(1, 3.0, 12, Boundary::Dirichlet)?;
    let gs = canonical_ground(&w, &v, 2, &small, &CanonicalOptions::default(), None)?;
    let joint = gs.h_star.square_density();
    let r_c = rate_canonical(&joint, gs.chi_n, &w, &v, 2, &small)?.value;
    let r_c_off = rate_canonical(&DensityField::uniform(joint.grid), gs.chi_n, &w, &v, 2, &small)?.value;
    let dst = hartree_minimize(&w, &Coupling::Dirac { lambda: 3.0 }, 2, &g, &HartreeOptions::default(), None)?;
    let dm: Vec<Measure> = dst.h.iter().map(|h| Measure::Density(h.square_density())).collect();
    let r_d = rate_dirac(&dm, 3.0, dst.chi_product, &w)?.value;
    let r_d_off = rate_dirac(&[Measure::Density(DensityField::uniform(g)), dm[1].clone()], 3.0, dst.chi_product, &w)?.value;
    let rates = r_h.abs() < 1e-4
        && r_c.abs() < 1e-4
        && r_d.abs() < 1e-4
        && r_off > 0.0
        && r_c_off > 0.0
        && r_d_off > 0.0;
    notes.push(format!("rates at minimizers {r_h:.1e} {r_c:.1e} {r_d:.1e}, elsewhere {r_off:.2e} {r_c_off:.2e} {r_d_off:.2e}"));

    let mut perm = st.h.clone();
    perm.rotate_left(1);
    let e0 = bosepath::variational::product_energy(&w, &Coupling::Pair(v), &st.h, None)?;
    let e1 = bosepath::variational::product_energy(&w, &Coupling::Pair(v), &perm, None)?;
    let symmetric = (e0 - e1).abs() <= 1e-12 * e0.abs();
    notes.push(format!("permutation {:.1e}", (e0 - e1).abs()));

    let chain = TinyPathChain { kernel: [[0.6, 0.2, 0.2], [0.2, 0.6, 0.2], [0.2, 0.2, 0.6]], trap: [0.0, 1.3, 2.9], dt: 1.0 };
    let mut counts = [[0u64; 9]; 9];
    let mut rng = stream(31, 0);
    let mut x = [0usize, 0];
    for _ in 0..1_000_000 {
        let y = chain.step(x, &mut rng);
        counts[3 * x[0] + x[1]][3 * y[0] + y[1]] += 1;
        x = y;
    }
    let mut worst = 0.0f64;
    for a in 0..9 {
        for b in a + 1..9 {
            let (p, q) = (counts[a][b] as f64, counts[b][a] as f64);
            worst = worst.max((p - q).abs() / (p + q).sqrt().max(1.0));
        }
    }
    let balanced = worst < 3.0;
    notes.push(format!("detailed balance worst {worst:.2} sigma"));

    let run = || {
        beta_sweep_canonical(&w, &v, 1, &small, &[1.0, 2.0], &CanonicalSweepOptions {
            occupation: Some(ChainOptions { chains: 2, steps: 500, seed: 4, ..Default::default() }),
            ..Default::default()
        })
        .map(|s| s.to_csv())
    };
    let identical = run()? == run()?;
    notes.push(format!("rerun identical {identical}"));
    Ok((monotone && rates && symmetric && balanced && identical, notes.join("; ")))
}

fn main() {
    let criteria: [(usize, &str, fn() -> Outcome); 11] = [
        (1, "scattering exactness", c1),
        (2, "scaling law and identity", c2),
        (3, "analytic eigenvalues", c3),
        (4, "product energy above ground energy", c4),
        (5, "Euler-Lagrange residuals", c5),
        (6, "tilt derivative", c6),
        (7, "Feynman-Kac oracle", c7),
        (8, "local-time identity", c8),
        (9, "occupation convergence", c9),
        (10, "large-N trend", c10),
        (11, "property suites", c11),
    ];
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (k, name, f) in criteria {
        if !wanted.is_empty() && !wanted.contains(&k) {
            continue;
        }
        let t = Instant::now();
        let (ok, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {k:>2} {} ({name}, {:.1} s): {detail}",
            if ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
