use super::*;
use crate::fields::InteractionKernel;
use crate::grid::{Boundary, Grid};
use crate::potentials::{PairPotential, TrapPotential};
use crate::fields::tv_distance;
use crate::variational::{canonical_ground, CanonicalOptions};

fn flat() -> TrapPotential {
    TrapPotential::hard_box(1e9)
}

fn ball(d: usize, radius: f64) -> StartBall {
    StartBall { centre: vec![0.0; d], radius }
}

#[test]
fn free_increments_have_variance_two_dt() {
    let dt = 0.01;
    let ens = PathEnsemble::free(10, 100.0, dt, &ball(2, 0.5), 3).unwrap();
    let mut inc = Vec::new();
    for i in 0..ens.n {
        for k in 1..=ens.slices {
            inc.push(ens.point(i, k)[0] - ens.point(i, k - 1)[0]);
        }
    }
    assert!(inc.len() >= 100_000);
    let n = inc.len() as f64;
    let var = inc.iter().map(|x| x * x).sum::<f64>() / n;
    let se = 2.0 * dt * (2.0 / n).sqrt();
    assert!((var - 2.0 * dt).abs() < 3.0 * se, "{var}");
}

#[test]
fn static_paths_give_constant_integrands() {
    let x = [0.3, -0.4];
    let ens = PathEnsemble::static_at(3, &x, 2.0, 0.125).unwrap();
    let h = hamiltonian_h(&ens, &TrapPotential::harmonic());
    assert!((h - 2.0 * 3.0 * 0.25).abs() < 1e-12);
    assert_eq!(hamiltonian_h(&ens, &flat()), 0.0);
    let g = Grid::new(2, 1.0, 10, Boundary::Dirichlet).unwrap();
    let occ = occupation(&ens, &g, None);
    let cell = g.cell_of(&x).unwrap();
    assert!((occ.density.values[cell] * g.cell_volume() - 1.0).abs() < 1e-12);
    assert_eq!(occ.escaped, 0.0);
    assert!(tv_distance(&occ.density, &occ.density, 0.0).unwrap() == 0.0);
    assert!(PathEnsemble::static_at(1, &x, 1.0, 0.3).is_err());
}

#[test]
fn binned_interaction_matches_direct_double_sum() {
    let ens = PathEnsemble::free(2, 1.6, 0.1, &ball(2, 0.6), 11).unwrap();
    assert_eq!(ens.slices, 16);
    let v = PairPotential::gaussian(1.0, 1.0);
    let mut direct = 0.0;
    for k in 0..=ens.slices {
        for l in 0..=ens.slices {
            let (a, b) = (ens.point(0, k), ens.point(1, l));
            let r = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            direct += ens.weight(k) * ens.weight(l) * v.eval(r);
        }
    }
    direct /= ens.beta;
    // v is Lipschitz with constant exp(-1/2); binning moves each point by at most h sqrt(d) / 2
    let lip = (-0.5f64).exp();
    for n in [79, 319] {
        let bins = Grid::new(2, 4.0, n, Boundary::Dirichlet).unwrap();
        let kernel = InteractionKernel::new(&v, bins).unwrap();
        let binned = hamiltonian_k(&ens, &kernel).unwrap();
        let bound = ens.beta * lip * bins.spacing() * 2f64.sqrt();
        assert!((binned - direct).abs() < bound, "{binned} vs {direct}");
        if n == 319 {
            assert!((binned - direct).abs() < 3e-3 * direct, "{binned} vs {direct}");
        }
    }
}

#[test]
fn zero_potentials_accept_every_move() {
    let bins = Grid::new(2, 3.0, 12, Boundary::Dirichlet).unwrap();
    for model in [PathModel::Canonical, PathModel::Hartree, PathModel::HartreeSelf] {
        let s = PathSampler::new(model, flat(), PairPotential::zero(), 3, 1.0, 0.05, 0.1, ball(2, 1e6), bins).unwrap();
        let mut rng = stream(1, 0);
        let mut st = s.init(&mut rng).unwrap();
        for k in 0..600 {
            let mv = [PathMove::BridgeSegment, PathMove::Endpoint, PathMove::WholePathShift][k % 3];
            assert!(s.mcmc_step(&mut st, mv, k % 3, 1.0, &mut rng));
        }
    }
}

#[test]
fn hard_walls_reject_escaping_proposals() {
    let bins = Grid::new(2, 1.0, 8, Boundary::Dirichlet).unwrap();
    let s = PathSampler::new(
        PathModel::Canonical,
        TrapPotential::hard_box(0.5),
        PairPotential::zero(),
        2,
        1.0,
        0.05,
        0.1,
        ball(2, 0.2),
        bins,
    )
    .unwrap();
    let mut rng = stream(2, 0);
    let mut st = s.state(PathEnsemble::static_at(2, &[0.0, 0.0], 1.0, 0.05).unwrap()).unwrap();
    let mut rejected = 0;
    for k in 0..3000 {
        let mv = [PathMove::BridgeSegment, PathMove::Endpoint, PathMove::WholePathShift][k % 3];
        if !s.mcmc_step(&mut st, mv, k % 2, 1.0, &mut rng) {
            rejected += 1;
        }
        assert!(st.trap_part.is_finite());
        assert!(st.ens.positions.iter().all(|x| x.abs() <= 0.5));
    }
    assert!(rejected > 0);
}

#[test]
fn cached_energies_track_recomputation() {
    let bins = Grid::new(2, 3.0, 16, Boundary::Dirichlet).unwrap();
    let v = PairPotential::gaussian(2.0, 0.7);
    for model in [PathModel::Canonical, PathModel::Hartree, PathModel::HartreeSelf] {
        let s = PathSampler::new(model, TrapPotential::harmonic(), v, 3, 1.0, 0.05, 0.1, ball(2, 1.0), bins).unwrap();
        let mut rng = stream(5, 0);
        let mut st = s.init(&mut rng).unwrap();
        for _ in 0..2000 {
            s.step(&mut st, 1.0, &mut rng);
        }
        let fresh = s.state(st.ens.clone()).unwrap();
        let direct = s.recompute(&st).unwrap();
        let cached = s.potential(&st);
        assert!((cached - direct).abs() < 1e-9 * (1.0 + direct.abs()), "{model:?}: {cached} vs {direct}");
        assert!((s.potential(&fresh) - direct).abs() < 1e-9 * (1.0 + direct.abs()));
        assert!(st.accepted > 100);
    }
}

#[test]
fn tiny_chain_satisfies_detailed_balance() {
    let p = 0.6;
    let q = 0.2;
    let chain =
        TinyPathChain { kernel: [[p, q, q], [q, p, q], [q, q, p]], trap: [0.0, 1.3, 2.9], dt: 1.0 };
    let pi = chain.target();
    let mut counts = [[0u64; 9]; 9];
    let mut rng = stream(9, 0);
    let mut x = [0usize, 0usize];
    for _ in 0..20_000 {
        x = chain.step(x, &mut rng);
    }
    let steps = 1_000_000;
    for _ in 0..steps {
        let y = chain.step(x, &mut rng);
        counts[3 * x[0] + x[1]][3 * y[0] + y[1]] += 1;
        x = y;
    }
    for a in 0..9 {
        let visits: u64 = counts[a].iter().sum();
        let f = visits as f64 / steps as f64;
        assert!((f - pi[a]).abs() < 4.0 * (pi[a] * (1.0 - pi[a]) / steps as f64).sqrt() * 10.0);
        for b in a + 1..9 {
            let (nab, nba) = (counts[a][b] as f64, counts[b][a] as f64);
            let sigma = (nab + nba).sqrt().max(1.0);
            assert!((nab - nba).abs() < 3.0 * sigma, "{a}->{b}: {nab} vs {nba}");
        }
    }
}

#[test]
fn thermo_at_zero_coupling_is_zero() {
    let g = Grid::new(1, 1.0, 6, Boundary::Periodic).unwrap();
    let m = LatticeModel::new(&TrapPotential::harmonic(), &PairPotential::zero(), 2, &g, 1.0, None).unwrap();
    let r = thermo_log_z(&m, &ThermoOptions { upper: 0.0, ..Default::default() }).unwrap();
    assert_eq!(r.log_z, 0.0);
}

#[test]
fn lattice_thermo_agrees_with_fk_oracle() {
    let g = Grid::new(1, 1.5, 6, Boundary::Periodic).unwrap();
    let w = TrapPotential::harmonic();
    let v = PairPotential::gaussian(1.0, 0.5);
    let beta = 1.0;
    let m = LatticeModel::new(&w, &v, 2, &g, beta, None).unwrap();
    let opts = ThermoOptions { nodes: 6, chain: ChainOptions { chains: 4, steps: 6000, ..Default::default() }, ..Default::default() };
    let mc = thermo_log_z(&m, &opts).unwrap();
    let exact = fk_oracle(&w, &v, 2, &g, beta, None, 1 << 20, 1e-12).unwrap();
    assert!((mc.log_z - exact.log_e).abs() < 3.0 * mc.stderr, "{} +- {} vs {}", mc.log_z, mc.stderr, exact.log_e);
    assert!(mc.stderr < 0.05);
}

#[test]
fn hartree_without_interaction_factorizes() {
    let bins = Grid::new(1, 3.0, 12, Boundary::Dirichlet).unwrap();
    let run = |n: usize| {
        let s = PathSampler::new(
            PathModel::Hartree,
            TrapPotential::harmonic(),
            PairPotential::zero(),
            n,
            0.5,
            0.05,
            0.1,
            ball(1, 0.5),
            bins,
        )
        .unwrap();
        let opts = ThermoOptions { nodes: 6, chain: ChainOptions { chains: 4, steps: 4000, ..Default::default() }, ..Default::default() };
        thermo_log_z(&s, &opts).unwrap()
    };
    let one = run(1);
    let two = run(2);
    let se = (two.stderr.powi(2) + 4.0 * one.stderr.powi(2)).sqrt();
    assert!((two.log_z - 2.0 * one.log_z).abs() < 3.0 * se, "{} vs 2 x {}", two.log_z, one.log_z);
}

#[test]
fn fk_trivial_cases() {
    let g = Grid::new(1, 1.0, 8, Boundary::Periodic).unwrap();
    let r0 = fk_oracle(&TrapPotential::harmonic(), &PairPotential::gaussian(1.0, 0.3), 2, &g, 0.0, None, 1 << 20, 1e-12)
        .unwrap();
    assert_eq!(r0.log_e, 0.0);
    for beta in [0.5, 3.0] {
        let r = fk_oracle(&flat(), &PairPotential::zero(), 2, &g, beta, None, 1 << 20, 1e-12).unwrap();
        assert!(r.log_e.abs() < 1e-10 && r.log_e_double.abs() < 1e-10);
    }
}

#[test]
fn fk_slope_approaches_ground_energy() {
    let g = Grid::new(1, 3.0, 16, Boundary::Dirichlet).unwrap();
    let w = TrapPotential::harmonic();
    let v = PairPotential::gaussian(1.0, 0.7);
    let r = fk_oracle(&w, &v, 2, &g, 20.0, None, 1 << 20, 1e-13).unwrap();
    let gs = canonical_ground(&w, &v, 2, &g, &CanonicalOptions::default(), None).unwrap();
    assert!((r.slope + gs.eigenvalue).abs() < 1e-4, "{} vs {}", r.slope, gs.eigenvalue);
}

#[test]
fn local_times_exhaust_the_horizon() {
    for t in ctrw_simulate(3, 7.5, 2, 4).unwrap() {
        let total: u64 = local_times(&t).values().sum();
        assert_eq!(total, t.horizon);
        let l = rescaled_l(&t, 2.0).unwrap();
        assert!((l.integral() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn disjoint_walks_do_not_intersect() {
    let a = WalkTrajectory::frozen(&[0, 0], 4.0);
    let b = WalkTrajectory::frozen(&[1, 0], 4.0);
    assert_eq!(intersection_alpha(&a, &b), 0.0);
    assert!((intersection_alpha(&a, &a) - 1.0).abs() < 1e-15);
}

#[test]
fn local_time_scaling_identity() {
    let (beta, p, d) = (9.0, 2.0, 2usize);
    let walks = ctrw_simulate(4, beta, d, 17).unwrap();
    let ls: Vec<_> = walks.iter().map(|w| rescaled_l(w, p).unwrap()).collect();
    for i in 0..walks.len() {
        for j in i + 1..walks.len() {
            let lhs = beta.powf((d as f64 + p) / (2.0 + p)) * intersection_alpha(&walks[i], &walks[j]);
            let rhs = beta.powf(p / (2.0 + p)) * ls[i].inner(&ls[j]);
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1e-300), "{lhs} vs {rhs}");
        }
    }
}

#[test]
fn frozen_walk_weight_is_the_trap_value() {
    let walks = vec![WalkTrajectory::frozen(&[1, 2], 5.0), WalkTrajectory::frozen(&[1, 2], 5.0)];
    let w = dirac_weight(&walks, 2.0, 0.0, 5.0).unwrap();
    assert!((w + 2.0 * 5.0).abs() < 1e-12);
    let origin = vec![WalkTrajectory::frozen(&[0, 0], 5.0)];
    assert_eq!(dirac_weight(&origin, 2.0, 0.0, 5.0).unwrap(), 0.0);
    assert!(dirac_weight(&walks, 0.0, 0.0, 5.0).is_err());
}

#[test]
fn dirac_sampler_caches_the_weight() {
    let s = DiracSampler::new(3, 2, 2.0, 0.7, 16.0).unwrap();
    let mut rng = stream(6, 0);
    let mut st = s.init(&mut rng).unwrap();
    for _ in 0..500 {
        s.step(&mut st, 1.0, &mut rng);
    }
    let w = dirac_weight(&st.trajs, 2.0, 0.7, 16.0).unwrap();
    assert!((s.potential(&st) + w).abs() < 1e-9 * (1.0 + w.abs()));
    assert!(st.accepted > 20);
    let g = Grid::new(2, 95.0 / 24.0, 94, Boundary::Dirichlet).unwrap();
    let (rho, out) = s.occupation(&st, &g).unwrap();
    assert!((rho.mass() + out - 1.0).abs() < 1e-9);
}


mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn local_times_and_intersections(seed in 0u64..10_000, beta in 0.5f64..20.0, d in 1usize..4) {
            let walks = ctrw_simulate(2, beta, d, seed).unwrap();
            for w in &walks {
                prop_assert_eq!(local_times(w).values().sum::<u64>(), w.horizon);
            }
            let ab = intersection_alpha(&walks[0], &walks[1]);
            let ba = intersection_alpha(&walks[1], &walks[0]);
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab));
            let aa = intersection_alpha(&walks[0], &walks[0]);
            let bb = intersection_alpha(&walks[1], &walks[1]);
            prop_assert!(ab * ab <= aa * bb * (1.0 + 1e-12));
        }
    }
}
