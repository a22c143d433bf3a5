//! Chain driver, thermodynamic integration of `log Z` and the shared
//! sampler interface.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{stream, Stream};
use super::stats::{batch_means, ess_fraction, mean_stderr, split_rhat};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// A Markov chain targeting `exp(-s U) dP` for a free reference measure `P`.
pub trait Sampler: Sync {
    type State: Clone + Send;
    fn init(&self, rng: &mut Stream) -> Result<Self::State>;
    fn step(&self, state: &mut Self::State, s: f64, rng: &mut Stream);
    /// Full potential `U` of the current state.
    fn potential(&self, state: &Self::State) -> f64;
    /// `(accepted, proposed)` so far.
    fn acceptance(&self, state: &Self::State) -> (u64, u64);
    fn particles(&self) -> usize;
    fn beta(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainOptions {
    pub chains: usize,
    /// sampler steps per chain, burn-in included
    pub steps: usize,
    /// fraction of steps discarded
    pub burn_in: f64,
    pub batches: usize,
    pub seed: u64,
    /// observe every `thin`-th recorded step
    pub thin: usize,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions { chains: 4, steps: 4000, burn_in: 0.2, batches: 10, seed: 0, thin: 1 }
    }
}

/// Output of independent chains at one coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainRun {
    /// potential after every recorded step, per chain
    pub potentials: Vec<Vec<f64>>,
    /// mean observation per batch, chain-major
    pub batch_observations: Vec<Vec<f64>>,
    pub acceptance: f64,
    pub rhat: f64,
}

/// Runs `opts.chains` chains keyed by `(seed, stream_base + chain)` and
/// averages `observe` over batches of recorded steps.
pub fn run_chains<S, F>(sampler: &S, s: f64, opts: &ChainOptions, stream_base: u64, observe: F) -> Result<ChainRun>
where
    S: Sampler,
    F: Fn(&S::State) -> Vec<f64> + Sync,
{
    if opts.chains == 0 || opts.steps == 0 {
        return Err(Error::InvalidParameter("chains and steps must be positive".into()));
    }
    let burn = (opts.burn_in * opts.steps as f64).round() as usize;
    let kept = opts.steps - burn;
    let batches = opts.batches.max(1).min(kept.max(1));
    let per_batch = (kept / batches).max(1);
    let runs: Vec<Result<(Vec<f64>, Vec<Vec<f64>>, (u64, u64))>> = (0..opts.chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(opts.seed, stream_base + c as u64);
            let mut st = sampler.init(&mut rng)?;
            for _ in 0..burn {
                sampler.step(&mut st, s, &mut rng);
            }
            let before = sampler.acceptance(&st);
            let mut pots = Vec::with_capacity(kept);
            let mut obs: Vec<Vec<f64>> = Vec::with_capacity(batches);
            let mut acc: Vec<f64> = Vec::new();
            let mut count = 0usize;
            let thin = opts.thin.max(1);
            for k in 0..kept {
                sampler.step(&mut st, s, &mut rng);
                pots.push(sampler.potential(&st));
                let batch = (k / per_batch).min(batches - 1);
                if k % thin == thin - 1 || k + 1 == kept {
                    let o = observe(&st);
                    if acc.is_empty() {
                        acc = vec![0.0; o.len()];
                    }
                    acc.iter_mut().zip(&o).for_each(|(a, x)| *a += x);
                    count += 1;
                }
                let closes = k + 1 == kept || (batch < batches - 1 && (k + 1) % per_batch == 0);
                if closes && count > 0 {
                    obs.push(acc.iter().map(|a| a / count as f64).collect());
                    acc.iter_mut().for_each(|a| *a = 0.0);
                    count = 0;
                }
            }
            let after = sampler.acceptance(&st);
            Ok((pots, obs, (after.0 - before.0, after.1 - before.1)))
        })
        .collect();
    let mut potentials = Vec::new();
    let mut batch_observations = Vec::new();
    let (mut acc, mut prop) = (0u64, 0u64);
    for r in runs {
        let (p, o, (a, n)) = r?;
        potentials.push(p);
        batch_observations.extend(o);
        acc += a;
        prop += n;
    }
    let rhat = split_rhat(&potentials);
    Ok(ChainRun {
        potentials,
        batch_observations,
        acceptance: if prop > 0 { acc as f64 / prop as f64 } else { 1.0 },
        rhat,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermoOptions {
    pub nodes: usize,
    /// coupling at the top of the ladder; 0 gives the free measure
    pub upper: f64,
    /// smallest effective sample fraction between ladder neighbours
    pub min_ess: f64,
    pub chain: ChainOptions,
}

impl Default for ThermoOptions {
    fn default() -> Self {
        ThermoOptions { nodes: 8, upper: 1.0, min_ess: 0.01, chain: ChainOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderNode {
    pub s: f64,
    pub weight: f64,
    pub mean_potential: f64,
    pub stderr: f64,
    pub rhat: f64,
    pub acceptance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermoResult {
    pub log_z: f64,
    pub stderr: f64,
    /// `-log Z / (N beta)`
    pub free_energy: f64,
    pub free_energy_stderr: f64,
    pub nodes: Vec<LadderNode>,
}

/// `log Z = -int_0^1 E_s[U] ds` by Gauss–Legendre over the coupling.
pub fn thermo_log_z<S: Sampler>(sampler: &S, opts: &ThermoOptions) -> Result<ThermoResult> {
    let scale = (sampler.particles() as f64 * sampler.beta()).max(f64::MIN_POSITIVE);
    if opts.upper == 0.0 {
        return Ok(ThermoResult { log_z: 0.0, stderr: 0.0, free_energy: 0.0, free_energy_stderr: 0.0, nodes: Vec::new() });
    }
    let (x, w) = gauss_legendre(opts.nodes.max(1));
    let mut nodes = Vec::with_capacity(x.len());
    let mut samples = Vec::with_capacity(x.len());
    for (k, (xk, wk)) in x.iter().zip(&w).enumerate() {
        let s = opts.upper * 0.5 * (xk + 1.0);
        let run = run_chains(sampler, s, &opts.chain, 1000 * k as u64, |_| Vec::new())?;
        let mut bm = Vec::new();
        for p in &run.potentials {
            bm.extend(batch_means(p, opts.chain.batches.max(2)));
        }
        let (m, se) = mean_stderr(&bm);
        if !m.is_finite() {
            return Err(Error::Domain(format!("potential has no finite mean at s = {s}")));
        }
        nodes.push(LadderNode { s, weight: 0.5 * opts.upper * wk, mean_potential: m, stderr: se, rhat: run.rhat, acceptance: run.acceptance });
        samples.push(run.potentials.concat());
    }
    for k in 0..nodes.len().saturating_sub(1) {
        let ds = nodes[k + 1].s - nodes[k].s;
        let up: Vec<f64> = samples[k].iter().map(|u| -ds * u).collect();
        let down: Vec<f64> = samples[k + 1].iter().map(|u| ds * u).collect();
        let ess = ess_fraction(&up).min(ess_fraction(&down));
        if ess < opts.min_ess {
            return Err(Error::LadderTooCoarse(format!(
                "between s = {} and s = {}: effective sample fraction {ess:.2e}",
                nodes[k].s,
                nodes[k + 1].s
            )));
        }
    }
    let log_z = -nodes.iter().map(|n| n.weight * n.mean_potential).sum::<f64>();
    let stderr = nodes.iter().map(|n| (n.weight * n.stderr).powi(2)).sum::<f64>().sqrt();
    Ok(ThermoResult { log_z, stderr, free_energy: -log_z / scale, free_energy_stderr: stderr / scale, nodes })
}
