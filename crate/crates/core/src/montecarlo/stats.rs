//! Error bars and convergence diagnostics for chains.

/// Arithmetic mean; `NaN` for an empty slice.
pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Means of `batches` contiguous blocks (trailing remainder dropped).
pub fn batch_means(x: &[f64], batches: usize) -> Vec<f64> {
    let len = x.len() / batches.max(1);
    if len == 0 {
        return Vec::new();
    }
    x.chunks_exact(len).take(batches).map(mean).collect()
}

/// Delete-one jackknife of a statistic over groups: `(estimate, stderr)`.
pub fn jackknife<T, F: Fn(&[&T]) -> f64>(groups: &[T], stat: F) -> (f64, f64) {
    let all: Vec<&T> = groups.iter().collect();
    let full = stat(&all);
    let g = groups.len();
    if g < 2 {
        return (full, f64::NAN);
    }
    let leave: Vec<f64> = (0..g)
        .map(|k| {
            let sub: Vec<&T> = groups.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, x)| x).collect();
            stat(&sub)
        })
        .collect();
    let lm = mean(&leave);
    let var = (g as f64 - 1.0) / g as f64 * leave.iter().map(|v| (v - lm).powi(2)).sum::<f64>();
    (full, var.sqrt())
}

/// Jackknife standard error of the mean over batch means.
pub fn mean_stderr(batches: &[f64]) -> (f64, f64) {
    jackknife(batches, |g| g.iter().map(|x| **x).sum::<f64>() / g.len() as f64)
}

/// Split potential scale reduction over equally long chains.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let half = chains.iter().map(|c| c.len()).min().unwrap_or(0) / 2;
    if half < 2 {
        return f64::NAN;
    }
    let mut parts: Vec<&[f64]> = Vec::new();
    for c in chains {
        parts.push(&c[..half]);
        parts.push(&c[half..2 * half]);
    }
    let m = parts.len() as f64;
    let n = half as f64;
    let means: Vec<f64> = parts.iter().map(|p| mean(p)).collect();
    let grand = mean(&means);
    let b = n / (m - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let w = parts.iter().map(|p| variance(p)).sum::<f64>() / m;
    if w == 0.0 {
        return if b == 0.0 { 1.0 } else { f64::INFINITY };
    }
    (((n - 1.0) / n * w + b / n) / w).sqrt()
}

/// Effective sample fraction of importance weights `exp(log_w)`.
pub fn ess_fraction(log_w: &[f64]) -> f64 {
    let top = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return 0.0;
    }
    let w: Vec<f64> = log_w.iter().map(|l| (l - top).exp()).collect();
    let s: f64 = w.iter().sum();
    let s2: f64 = w.iter().map(|x| x * x).sum();
    s * s / s2 / log_w.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jackknife_of_mean_is_the_standard_error() {
        let x = [1.0, 2.0, 4.0, 7.0, 11.0];
        let (m, se) = mean_stderr(&x);
        assert!((m - 5.0).abs() < 1e-12);
        assert!((se - (variance(&x) / 5.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rhat_near_one_for_identical_chains() {
        let c: Vec<f64> = (0..200).map(|i| ((i * 37) % 11) as f64).collect();
        let r = split_rhat(&[c.clone(), c.clone(), c.clone(), c]);
        assert!(r < 1.05, "{r}");
        let shifted = vec![vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0], vec![10.0, 11.0, 10.0, 11.0, 10.0, 11.0]];
        assert!(split_rhat(&shifted) > 2.0);
    }

    #[test]
    fn ess_of_equal_weights_is_one() {
        assert!((ess_fraction(&[0.3; 10]) - 1.0).abs() < 1e-12);
        assert!(ess_fraction(&[0.0, -100.0, -100.0, -100.0]) < 0.26);
    }
}
