//! Continuous-time nearest-neighbour walks on Z stored as event lists, with
//! exact free and bridge resampling.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

/// Ticks per unit time.
pub const TICKS: f64 = 4_294_967_296.0;

pub fn to_ticks(t: f64) -> u64 {
    (t * TICKS).round() as u64
}

pub fn to_time(ticks: u64) -> f64 {
    ticks as f64 / TICKS
}

/// One coordinate of a walk: unwrapped start and `(tick, +-1)` jumps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordWalk {
    pub start: i64,
    pub times: Vec<u64>,
    pub steps: Vec<i8>,
}

impl CoordWalk {
    pub fn constant(start: i64) -> Self {
        CoordWalk { start, times: Vec::new(), steps: Vec::new() }
    }

    /// Position just after tick `t` (jumps at `t` included).
    pub fn at(&self, t: u64) -> i64 {
        let k = self.times.partition_point(|&s| s <= t);
        self.start + self.steps[..k].iter().map(|s| *s as i64).sum::<i64>()
    }

    pub fn end(&self) -> i64 {
        self.start + self.steps.iter().map(|s| *s as i64).sum::<i64>()
    }

    /// Replaces all jumps in `(a, b]` by the given sorted jumps.
    pub fn splice(&mut self, a: u64, b: u64, times: Vec<u64>, steps: Vec<i8>) {
        let lo = self.times.partition_point(|&s| s <= a);
        let hi = self.times.partition_point(|&s| s <= b);
        self.times.splice(lo..hi, times);
        self.steps.splice(lo..hi, steps);
    }

    pub fn shift(&mut self, by: i64) {
        self.start += by;
    }
}

fn sorted_uniform<R: Rng>(rng: &mut R, n: usize, a: u64, b: u64) -> Vec<u64> {
    let mut t: Vec<u64> = (0..n).map(|_| rng.random_range(a + 1..b.max(a + 2))).collect();
    t.sort_unstable();
    t
}

/// Free jumps on `(a, b]` at rate `q` in each direction.
pub fn free_jumps<R: Rng>(rng: &mut R, q: f64, a: u64, b: u64) -> (Vec<u64>, Vec<i8>) {
    let mean = 2.0 * q * to_time(b - a);
    let n = if mean > 0.0 { Poisson::new(mean).expect("positive mean").sample(rng) as usize } else { 0 };
    let times = sorted_uniform(rng, n, a, b);
    let steps = (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    (times, steps)
}

/// Jump count of a bridge with net displacement `k` over time `dur`:
/// weights `(q dur)^n / n! * C(n, (n+k)/2)` on `n = |k|, |k|+2, ...`.
pub fn bridge_count<R: Rng>(rng: &mut R, q: f64, dur: f64, k: i64) -> usize {
    let k = k.unsigned_abs() as usize;
    let x = q * dur;
    let mut terms = vec![1.0f64];
    let (mut a, mut b) = (k as f64, 0.0);
    let mut sum = 1.0;
    loop {
        let r = x * x / ((a + 1.0) * (b + 1.0));
        let next = terms[terms.len() - 1] * r;
        terms.push(next);
        sum += next;
        a += 1.0;
        b += 1.0;
        if (r < 0.5 && next < 1e-17 * sum) || terms.len() > 100_000 {
            break;
        }
        if sum > 1e250 {
            terms.iter_mut().for_each(|t| *t *= 1e-250);
            sum *= 1e-250;
        }
    }
    let mut u = rng.random::<f64>() * sum;
    for (j, t) in terms.iter().enumerate() {
        u -= t;
        if u <= 0.0 {
            return k + 2 * j;
        }
    }
    k + 2 * (terms.len() - 1)
}

/// Bridge jumps on `(a, b]` with net displacement `k`.
pub fn bridge_jumps<R: Rng>(rng: &mut R, q: f64, a: u64, b: u64, k: i64) -> (Vec<u64>, Vec<i8>) {
    let n = bridge_count(rng, q, to_time(b - a), k);
    let up = (n as i64 + k) / 2;
    let mut steps: Vec<i8> = (0..n).map(|i| if (i as i64) < up { 1 } else { -1 }).collect();
    steps.shuffle(rng);
    (sorted_uniform(rng, n, a, b), steps)
}
