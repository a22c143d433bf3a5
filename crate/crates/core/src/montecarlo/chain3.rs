//! A two-slice path on a three-site ring, small enough to enumerate, run
//! through the same Metropolis moves as the path samplers.

use rand::Rng;

use super::rng::{metropolis, Stream};

/// Sites `{0, 1, 2}`, free kernel `p` (symmetric, circulant), uniform start.
#[derive(Debug, Clone)]
pub struct TinyPathChain {
    pub kernel: [[f64; 3]; 3],
    pub trap: [f64; 3],
    pub dt: f64,
}

impl TinyPathChain {
    /// Action of the path `(x0, x1)` with trapezoid weights.
    pub fn action(&self, x: [usize; 2]) -> f64 {
        0.5 * self.dt * (self.trap[x[0]] + self.trap[x[1]])
    }

    /// Exact stationary law `pi(x0, x1)`, row-major.
    pub fn target(&self) -> [f64; 9] {
        let mut pi = [0.0; 9];
        for a in 0..3 {
            for b in 0..3 {
                pi[3 * a + b] = self.kernel[a][b] * (-self.action([a, b])).exp() / 3.0;
            }
        }
        let z: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|p| *p /= z);
        pi
    }

    fn draw<R: Rng>(&self, from: usize, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let row = &self.kernel[from];
        if u < row[0] {
            0
        } else if u < row[0] + row[1] {
            1
        } else {
            2
        }
    }

    /// Endpoint (forward), head (backward) or whole-path shift, each
    /// proposed from the free measure and accepted on the action change.
    pub fn step(&self, x: [usize; 2], rng: &mut Stream) -> [usize; 2] {
        let y = match rng.random_range(0..3) {
            0 => [x[0], self.draw(x[0], rng)],
            1 => [self.draw(x[1], rng), x[1]],
            _ => {
                let k = rng.random_range(0..3);
                [(x[0] + k) % 3, (x[1] + k) % 3]
            }
        };
        if metropolis(self.action(y) - self.action(x), rng) {
            y
        } else {
            x
        }
    }
}
