//! Gauss–Legendre rules and graded radial integration.

use std::sync::OnceLock;

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn gl20() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(20))
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (x, w) = gl20();
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    x.iter()
        .zip(w)
        .map(|(xi, wi)| wi * f(c + h * xi))
        .sum::<f64>()
        * h
}

/// Adaptive Gauss–Legendre integration on a finite interval with a smooth integrand.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let left = panel(f, a, m);
        let right = panel(f, m, b);
        let split = left + right;
        if !split.is_finite() {
            return split;
        }
        if depth == 0 || (split - whole).abs() <= tol.max(1e-300) || (split - whole).abs() <= 1e-15 * split.abs() {
            return split;
        }
        rec(f, a, m, left, 0.5 * tol, depth - 1) + rec(f, m, b, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let whole = panel(f, a, b);
    if !whole.is_finite() {
        return whole;
    }
    let tol = rel_tol * whole.abs().max(1e-300);
    rec(f, a, b, whole, tol, 40)
}

/// Outcome of a graded radial quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialOutcome {
    Converged(f64),
    Divergent,
    Indeterminate,
}

impl RadialOutcome {
    pub fn value(self) -> Option<f64> {
        match self {
            RadialOutcome::Converged(v) => Some(v),
            _ => None,
        }
    }
}

/// Sum of dyadic panel contributions with a geometric-tail stopping rule.
///
/// `panels(k)` returns the contribution of the k-th dyadic panel; the panels
/// are ordered toward the singular end (origin or infinity).
fn dyadic_sum<P: FnMut(usize) -> f64>(mut panels: P, rel_tol: f64, max_levels: usize) -> RadialOutcome {
    let mut sum = 0.0;
    let mut history: Vec<f64> = Vec::new();
    let mut zero_run = 0;
    for k in 0..max_levels {
        let c = panels(k);
        if !c.is_finite() {
            return RadialOutcome::Divergent;
        }
        sum += c;
        history.push(c.abs());
        if c == 0.0 {
            zero_run += 1;
            if zero_run >= 6 && k >= 8 {
                return RadialOutcome::Converged(sum);
            }
            continue;
        }
        zero_run = 0;
        if history.len() >= 6 {
            let l = history.len();
            let ratios: Vec<f64> = (l - 4..l)
                .map(|i| if history[i - 1] > 0.0 { history[i] / history[i - 1] } else { 0.0 })
                .collect();
            let rho = ratios.iter().cloned().fold(0.0_f64, f64::max);
            if ratios.iter().all(|r| *r >= 0.999) {
                return RadialOutcome::Divergent;
            }
            if rho < 1.0 {
                let tail = c.abs() * rho / (1.0 - rho);
                if tail <= 1e-2 * rel_tol * sum.abs() || tail < 1e-300 {
                    return RadialOutcome::Converged(sum);
                }
            }
        }
    }
    RadialOutcome::Indeterminate
}

/// Integral of `g` over `[0, upper]` where `g` may carry an integrable
/// singularity at the origin. `breaks` are interior points where `g` is not smooth.
pub fn integrate_from_origin<F: Fn(f64) -> f64>(
    g: &F,
    upper: f64,
    breaks: &[f64],
    rel_tol: f64,
) -> RadialOutcome {
    let mut pts: Vec<f64> = breaks.iter().cloned().filter(|b| *b > 0.0 && *b < upper).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let first = pts.first().cloned().unwrap_or(upper);
    let mut regular = 0.0;
    let mut prev = first;
    for &p in pts.iter().skip(1).chain(std::iter::once(&upper)) {
        if p > prev {
            regular += integrate(g, prev, p, rel_tol * 1e-2);
        }
        prev = p;
    }
    let inner = dyadic_sum(
        |k| {
            let b = first * 0.5f64.powi(k as i32);
            integrate(g, 0.5 * b, b, rel_tol * 1e-2)
        },
        rel_tol,
        1000,
    );
    match inner {
        RadialOutcome::Converged(v) => RadialOutcome::Converged(v + regular),
        other => other,
    }
}

/// Integral of `g` over `[lower, inf)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    g: &F,
    lower: f64,
    breaks: &[f64],
    rel_tol: f64,
) -> RadialOutcome {
    assert!(lower > 0.0);
    let mut pts: Vec<f64> = breaks.iter().cloned().filter(|b| *b > lower).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let start = pts.last().cloned().unwrap_or(lower);
    let mut regular = 0.0;
    let mut prev = lower;
    for &p in &pts {
        regular += integrate(g, prev, p, rel_tol * 1e-2);
        prev = p;
    }
    let tail = dyadic_sum(
        |k| {
            let a = start * 2f64.powi(k as i32);
            integrate(g, a, 2.0 * a, rel_tol * 1e-2)
        },
        rel_tol,
        1000,
    );
    match tail {
        RadialOutcome::Converged(v) => RadialOutcome::Converged(v + regular),
        other => other,
    }
}

/// Area of the unit sphere in R^d.
pub fn unit_sphere_area(d: usize) -> f64 {
    use std::f64::consts::PI;
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => {
            // omega_d = 2 pi^{d/2} / Gamma(d/2), via the recursion omega_{d+2} = 2 pi omega_d / d.
            let mut w = if d.is_multiple_of(2) { 2.0 * PI } else { 4.0 * PI };
            let mut k = if d.is_multiple_of(2) { 2 } else { 3 };
            while k < d {
                w *= 2.0 * PI / k as f64;
                k += 2;
            }
            w
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(5);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn singular_origin_integral() {
        // int_0^1 r^{-1/2} dr = 2
        let out = integrate_from_origin(&|r: f64| r.powf(-0.5), 1.0, &[], 1e-10);
        let v = out.value().unwrap();
        assert!((v - 2.0).abs() < 1e-8, "{v}");
        // int_0^1 r^{-1} dr diverges
        let out = integrate_from_origin(&|r: f64| 1.0 / r, 1.0, &[], 1e-10);
        assert_eq!(out, RadialOutcome::Divergent);
    }

    #[test]
    fn tail_integrals() {
        let out = integrate_to_infinity(&|r: f64| (-r).exp(), 1.0, &[], 1e-12);
        assert!((out.value().unwrap() - (-1.0f64).exp()).abs() < 1e-12);
        let out = integrate_to_infinity(&|r: f64| 1.0 / r, 1.0, &[], 1e-10);
        assert_eq!(out, RadialOutcome::Divergent);
    }

    #[test]
    fn sphere_areas() {
        use std::f64::consts::PI;
        assert!((unit_sphere_area(4) - 2.0 * PI * PI).abs() < 1e-12);
        assert!((unit_sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
    }
}
