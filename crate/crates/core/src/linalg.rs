//! Symmetric operators, a thick-restart Lanczos (Krylov–Schur) eigensolver
//! for the lowest eigenpair, and the Krylov action of the matrix exponential.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// A real symmetric linear operator.
pub trait SymOp: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Dense symmetric matrix, mostly for tests.
pub struct DenseOp(pub DMatrix<f64>);

impl SymOp for DenseOp {
    fn dim(&self) -> usize {
        self.0.nrows()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = (0..x.len()).map(|j| self.0[(i, j)] * x[j]).sum();
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    /// Unit Euclidean norm.
    pub vector: Vec<f64>,
    /// `||A x - value x||`
    pub residual: f64,
    pub matvecs: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Residual norm target.
    pub tol: f64,
    pub max_matvecs: usize,
    pub basis: usize,
    pub keep: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { tol: 1e-10, max_matvecs: 200_000, basis: 40, keep: 10 }
    }
}

/// Orthogonalize `w` against the first `cols` basis vectors (two passes),
/// returning the accumulated coefficients.
fn orthogonalize(basis: &[Vec<f64>], cols: usize, w: &mut [f64]) -> Vec<f64> {
    let mut coef = vec![0.0; cols];
    for _ in 0..2 {
        for (c, v) in coef.iter_mut().zip(basis.iter().take(cols)) {
            let a = dot(v, w);
            *c += a;
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= a * vi;
            }
        }
    }
    coef
}

/// Any unit vector orthogonal to the first `cols` basis vectors.
fn fresh_direction(basis: &[Vec<f64>], cols: usize, dim: usize, salt: usize) -> Option<Vec<f64>> {
    for attempt in 0..8 {
        let mut w: Vec<f64> = (0..dim)
            .map(|i| {
                let t = (i as f64 + 1.0) * (0.618_033_988_749_894_9 + (salt + attempt) as f64 * 0.137);
                (t.fract() - 0.5) + 0.01 * ((i * 7 + attempt) % 13) as f64
            })
            .collect();
        orthogonalize(basis, cols, &mut w);
        let nw = norm(&w);
        if nw > 1e-8 {
            w.iter_mut().for_each(|x| *x /= nw);
            return Some(w);
        }
    }
    None
}

/// Smallest eigenpair of a symmetric operator by thick-restart Lanczos with
/// full reorthogonalization.
pub fn lowest_eigenpair(op: &dyn SymOp, start: Option<&[f64]>, opts: EigenOptions) -> Result<EigenPair> {
    let n = op.dim();
    if n == 0 {
        return Err(Error::InvalidParameter("empty operator".into()));
    }
    let m = opts.basis.min(n).max(2.min(n));
    let keep = opts.keep.min(m.saturating_sub(2)).max(1).min(m);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut v0: Vec<f64> = match start {
        Some(s) if s.len() == n && norm(s) > 0.0 => s.to_vec(),
        _ => fresh_direction(&[], 0, n, 0).unwrap(),
    };
    let nv = norm(&v0);
    v0.iter_mut().for_each(|x| *x /= nv);
    basis.push(v0);
    if n == 1 {
        let mut y = vec![0.0];
        op.apply(&basis[0], &mut y);
        return Ok(EigenPair { value: y[0], vector: basis.pop().unwrap(), residual: 0.0, matvecs: 1 });
    }
    let mut t = DMatrix::<f64>::zeros(m, m);
    let mut j = 0usize;
    let mut matvecs = 0usize;
    let mut w = vec![0.0; n];
    let mut salt = 1usize;
    loop {
        // extend the basis to m vectors
        let mut residual_vec: Option<Vec<f64>>;
        let mut beta_last;
        loop {
            op.apply(&basis[j], &mut w);
            matvecs += 1;
            let coef = orthogonalize(&basis, j + 1, &mut w);
            for (i, c) in coef.iter().enumerate() {
                t[(i, j)] = *c;
                t[(j, i)] = *c;
            }
            let beta = norm(&w);
            let scale = t[(j, j)].abs().max(1.0);
            let breakdown = beta <= 1e-13 * scale;
            beta_last = if breakdown { 0.0 } else { beta };
            residual_vec = if breakdown { None } else { Some(w.iter().map(|x| x / beta).collect()) };
            if j + 1 == m || (breakdown && j + 1 == n) {
                break;
            }
            let next = match residual_vec.take() {
                Some(v) => v,
                None => {
                    salt += 1;
                    match fresh_direction(&basis, j + 1, n, salt) {
                        Some(v) => v,
                        None => break,
                    }
                }
            };
            if j + 1 < m {
                if basis.len() > j + 1 {
                    basis[j + 1] = next;
                } else {
                    basis.push(next);
                }
                if breakdown {
                    for i in 0..=j {
                        t[(i, j + 1)] = 0.0;
                        t[(j + 1, i)] = 0.0;
                    }
                }
            }
            j += 1;
        }
        let size = j + 1;
        let tm = t.view((0, 0), (size, size)).into_owned();
        let eig = SymmetricEigen::new(tm);
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|a, b| eig.eigenvalues[*a].partial_cmp(&eig.eigenvalues[*b]).unwrap());
        let lo = order[0];
        let res = beta_last * eig.eigenvectors[(size - 1, lo)].abs();
        let ritz = |col: usize| -> Vec<f64> {
            let mut x = vec![0.0; n];
            for (row, b) in basis.iter().take(size).enumerate() {
                let s = eig.eigenvectors[(row, col)];
                for (xi, bi) in x.iter_mut().zip(b) {
                    *xi += s * bi;
                }
            }
            x
        };
        if res <= opts.tol || residual_vec.is_none() {
            let mut x = ritz(lo);
            let nx = norm(&x);
            x.iter_mut().for_each(|v| *v /= nx);
            // explicit residual
            op.apply(&x, &mut w);
            matvecs += 1;
            let value = dot(&x, &w);
            let r: f64 = w.iter().zip(&x).map(|(a, b)| (a - value * b).powi(2)).sum::<f64>().sqrt();
            if r <= opts.tol.max(1e-14 * value.abs()) * 10.0 || residual_vec.is_none() || size == n {
                return Ok(EigenPair { value, vector: x, residual: r, matvecs });
            }
        }
        if matvecs >= opts.max_matvecs {
            return Err(Error::NotConverged(format!(
                "eigensolver: residual {res:.3e} after {matvecs} matrix-vector products (target {:.1e})",
                opts.tol
            )));
        }
        // thick restart
        let k = keep.min(size - 1);
        let kept: Vec<Vec<f64>> = order.iter().take(k).map(|&c| ritz(c)).collect();
        let f = residual_vec.unwrap();
        basis.clear();
        basis.extend(kept);
        basis.push(f);
        t.fill(0.0);
        for (l, &c) in order.iter().take(k).enumerate() {
            t[(l, l)] = eig.eigenvalues[c];
        }
        j = k;
    }
}

/// `log sum_i w_i(t)` where `w' = A w`, `w(0) = w0 >= 0` and `A` symmetric,
/// together with log-norms at the requested times (ascending).
#[derive(Debug, Clone)]
pub struct ExpmTrace {
    pub times: Vec<f64>,
    pub log_sums: Vec<f64>,
    pub matvecs: usize,
}

/// Propagates `w' = A w` with Lanczos exponential steps, tracking the
/// logarithm of the scale separately so long horizons do not underflow.
pub fn expm_log_sums(op: &dyn SymOp, w0: &[f64], times: &[f64], tol: f64) -> Result<ExpmTrace> {
    let n = op.dim();
    if w0.len() != n {
        return Err(Error::GridMismatch("initial vector length".into()));
    }
    if times.windows(2).any(|p| p[1] < p[0]) || times.iter().any(|t| *t < 0.0) {
        return Err(Error::InvalidParameter("times must be ascending and nonnegative".into()));
    }
    let m = 30.min(n);
    let mut w = w0.to_vec();
    let nw = norm(&w);
    if nw == 0.0 {
        return Err(Error::Degenerate("zero initial vector".into()));
    }
    w.iter_mut().for_each(|x| *x /= nw);
    let mut log_scale = nw.ln();
    let mut now = 0.0;
    let mut tau: f64 = 1e-3;
    let mut matvecs = 0usize;
    let mut out = Vec::with_capacity(times.len());
    let mut y = vec![0.0; n];
    for &target in times {
        while now < target {
            // Lanczos basis from the current unit vector
            let mut basis: Vec<Vec<f64>> = vec![w.clone()];
            let mut alpha = Vec::with_capacity(m);
            let mut beta: Vec<f64> = Vec::with_capacity(m);
            let mut beta_end = 0.0;
            for j in 0..m {
                op.apply(&basis[j], &mut y);
                matvecs += 1;
                let coef = orthogonalize(&basis, j + 1, &mut y);
                alpha.push(coef[j]);
                let b = norm(&y);
                if b <= 1e-13 * coef[j].abs().max(1.0) {
                    beta_end = 0.0;
                    break;
                }
                if j + 1 == m {
                    beta_end = b;
                    break;
                }
                beta.push(b);
                basis.push(y.iter().map(|x| x / b).collect());
            }
            let k = alpha.len();
            let mut tm = DMatrix::<f64>::zeros(k, k);
            for i in 0..k {
                tm[(i, i)] = alpha[i];
                if i + 1 < k {
                    tm[(i, i + 1)] = beta[i];
                    tm[(i + 1, i)] = beta[i];
                }
            }
            let eig = SymmetricEigen::new(tm);
            let shift = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            // exp(s T) e1, scaled by exp(-s shift) to avoid overflow
            let expm_e1 = |s: f64| -> Vec<f64> {
                let mut v = vec![0.0; k];
                for c in 0..k {
                    let a = eig.eigenvectors[(0, c)] * (s * (eig.eigenvalues[c] - shift)).exp();
                    for (r, vr) in v.iter_mut().enumerate() {
                        *vr += a * eig.eigenvectors[(r, c)];
                    }
                }
                v
            };
            let remaining = target - now;
            let mut step = (2.0 * tau).min(remaining);
            let coeffs = loop {
                let c = expm_e1(step);
                let nc = norm(&c);
                let err = beta_end * c[k - 1].abs() * step / nc.max(1e-300);
                if err <= tol || beta_end == 0.0 || step < 1e-12 {
                    break c;
                }
                step *= 0.5;
            };
            let mut next = vec![0.0; n];
            for (c, b) in coeffs.iter().zip(&basis) {
                for (x, bi) in next.iter_mut().zip(b) {
                    *x += c * bi;
                }
            }
            let nn = norm(&next);
            if !(nn > 0.0 && nn.is_finite()) {
                return Err(Error::NotConverged("matrix exponential lost all mass".into()));
            }
            next.iter_mut().for_each(|x| *x /= nn);
            log_scale += nn.ln() + step * shift;
            w = next;
            now += step;
            if step < remaining {
                tau = step;
            } else {
                now = target;
            }
        }
        let s: f64 = w.iter().sum();
        if !(s > 0.0) {
            return Err(Error::NotConverged("propagated vector has no positive mass".into()));
        }
        out.push(log_scale + s.ln());
    }
    Ok(ExpmTrace { times: times.to_vec(), log_sums: out, matvecs })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// 1D Dirichlet Laplacian plus a diagonal, as a dense matrix.
    pub fn chain(n: usize, diag: impl Fn(usize) -> f64) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = 2.0 + diag(i);
            if i + 1 < n {
                a[(i, i + 1)] = -1.0;
                a[(i + 1, i)] = -1.0;
            }
        }
        a
    }

    #[test]
    fn lowest_eigenpair_matches_dense_solver() {
        for n in [3usize, 17, 120, 400] {
            let a = chain(n, |i| ((i * 37) % 11) as f64 * 0.1);
            let dense = SymmetricEigen::new(a.clone());
            let exact = dense.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            let ep = lowest_eigenpair(&DenseOp(a), None, EigenOptions { tol: 1e-11, ..Default::default() }).unwrap();
            assert!((ep.value - exact).abs() < 1e-10, "n={n}: {} vs {exact}", ep.value);
            assert!(ep.residual < 1e-9);
        }
    }

    #[test]
    fn expm_matches_dense_exponential() {
        let n = 60;
        let a = -chain(n, |i| (i as f64 / n as f64).powi(2));
        let dense = SymmetricEigen::new(a.clone());
        let w0 = vec![1.0 / n as f64; n];
        let times = [0.0, 0.5, 3.0, 40.0];
        let tr = expm_log_sums(&DenseOp(a), &w0, &times, 1e-12).unwrap();
        for (t, got) in times.iter().zip(&tr.log_sums) {
            let mut s = 0.0;
            for c in 0..n {
                let u = dense.eigenvectors.column(c);
                let proj: f64 = u.iter().zip(&w0).map(|(x, y)| x * y).sum();
                let tot: f64 = u.iter().sum();
                s += (t * dense.eigenvalues[c]).exp() * proj * tot;
            }
            assert!((got - s.ln()).abs() < 1e-9, "t={t}: {got} vs {}", s.ln());
        }
    }
}
