//! Scattering lengths from the zero-energy radial equation.
//!
//! In d = 3 the reduced profile `u(r) = r phi(r)` solves `u'' = v u / 2`,
//! `u(0) = 0`, and `alpha = lim r - u/u'`. In d = 2 the profile solves the
//! radial equation `u'' + u'/r = v u / 2`, regular at the origin, and equals
//! `log(r/alpha) / log(R/alpha)` outside the support of `v`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::potentials::{alpha_tilde, classify_pair, extrapolate_to_zero, CutoffSpec, Level, PairClass, PairKind, PairPotential};
use crate::quadrature::gauss_legendre;

const ODE_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Serialize)]
pub struct ScatteringSolution {
    pub alpha: f64,
    /// `(r, u(r))`, normalized so that `u'(r_max) = 1` (d = 3) or `u(R) = 1` (d = 2).
    pub u_samples: Vec<(f64, f64)>,
    pub r_max: f64,
    /// Spread of the estimates over the radius ladder (or the extrapolation ladder).
    pub residual: f64,
    /// `int_0^inf v(r) u(r) r dr` with the normalized `u` (d = 3 only).
    #[serde(skip)]
    pub moment: f64,
    #[serde(skip)]
    samples: Vec<Sample>,
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    r: f64,
    u: f64,
    du: f64,
}

impl ScatteringSolution {
    /// Normalized `u` at `r` by cubic Hermite interpolation of the stored steps.
    pub fn u_at(&self, r: f64) -> f64 {
        let s = &self.samples;
        if s.is_empty() {
            return r - self.alpha;
        }
        if r <= s[0].r {
            return s[0].u * if s[0].r > 0.0 { r / s[0].r } else { 0.0 };
        }
        let last = s[s.len() - 1];
        if r >= last.r {
            return last.u + last.du * (r - last.r);
        }
        let k = s.partition_point(|p| p.r <= r) - 1;
        hermite(s[k], s[k + 1], r)
    }
}

fn hermite(a: Sample, b: Sample, r: f64) -> f64 {
    let h = b.r - a.r;
    let t = (r - a.r) / h;
    let (t2, t3) = (t * t, t * t * t);
    (2.0 * t3 - 3.0 * t2 + 1.0) * a.u + (t3 - 2.0 * t2 + t) * h * a.du + (-2.0 * t3 + 3.0 * t2) * b.u + (t3 - t2) * h * b.du
}

type Rhs<'a> = dyn Fn(f64, [f64; 2]) -> [f64; 2] + 'a;

fn rk4(f: &Rhs, r: f64, y: [f64; 2], h: f64) -> [f64; 2] {
    let add = |y: [f64; 2], k: [f64; 2], s: f64| [y[0] + s * k[0], y[1] + s * k[1]];
    let k1 = f(r, y);
    let k2 = f(r + 0.5 * h, add(y, k1, 0.5 * h));
    let k3 = f(r + 0.5 * h, add(y, k2, 0.5 * h));
    let k4 = f(r + h, add(y, k3, h));
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Adaptive RK4 with step doubling on the smooth panel `[a, b]`.
fn integrate_panel(rhs: &Rhs, a: f64, b: f64, y0: [f64; 2], h0: f64, out: &mut Vec<Sample>) -> Result<([f64; 2], f64)> {
    // the potential may jump at either end; sample it strictly inside
    let eps = 1e-13 * b.abs().max(1e-300);
    let f = |r: f64, y: [f64; 2]| rhs(r.clamp(a + eps, b - eps), y);
    let f: &Rhs = &f;
    let mut r = a;
    let mut y = y0;
    let mut h = h0.min(b - a);
    let mut steps = 0usize;
    while r < b {
        let last = r + h >= b || (b - (r + h)) < 1e-12 * b;
        if last {
            h = b - r;
        }
        let full = rk4(f, r, y, h);
        let half = rk4(f, r, y, 0.5 * h);
        let two = rk4(f, r + 0.5 * h, half, 0.5 * h);
        let scale = y[0].abs().max(y[1].abs() * (r + h).max(1e-300)).max(two[0].abs()).max(1e-300);
        let err = ((two[0] - full[0]).abs().max((two[1] - full[1]).abs() * (r + h))) / scale;
        if err <= ODE_TOL || h < 1e-12 * b.max(1.0) {
            y = [two[0] + (two[0] - full[0]) / 15.0, two[1] + (two[1] - full[1]) / 15.0];
            r = if last { b } else { r + h };
            out.push(Sample { r, u: y[0], du: y[1] });
            let grow = if err > 0.0 { 0.9 * (ODE_TOL / err).powf(0.2) } else { 2.0 };
            h *= grow.clamp(0.2, 2.0);
        } else {
            h *= (0.9 * (ODE_TOL / err).powf(0.2)).clamp(0.1, 0.5);
        }
        steps += 1;
        if steps > 5_000_000 {
            return Err(Error::NotConverged("scattering ODE needs too many steps".into()));
        }
    }
    Ok((y, h))
}

/// Core radius to use as the inner boundary and whether `v` is singular at it.
fn inner_boundary(v: &PairPotential) -> (f64, bool) {
    let a = v.core_radius();
    (a, !v.eval(a).is_finite() && a == 0.0)
}

struct Profile {
    samples: Vec<Sample>,
}

impl Profile {
    fn last(&self) -> Sample {
        *self.samples.last().unwrap()
    }
}

/// Integrates the d = 3 reduced equation outward to `r_end`, starting at the
/// core edge or from a short series near a singular origin.
fn profile_d3(v: &PairPotential, breaks: &[f64], r_end: f64, resume: Option<Profile>) -> Result<Profile> {
    let f = |r: f64, y: [f64; 2]| [y[1], 0.5 * v.eval(r) * y[0]];
    let (a, singular) = inner_boundary(v);
    let mut prof = match resume {
        Some(p) => p,
        None => {
            let start = if singular {
                let (c, gamma) = match v.kind {
                    PairKind::InversePower { c, gamma } => (c, gamma),
                    _ => return Err(Error::Domain(format!("{v:?} is singular at the origin"))),
                };
                if gamma >= 2.0 {
                    return Err(Error::Precondition(format!("r^-{gamma} is too singular for the radial solver; cap it first")));
                }
                let r0 = 1e-9_f64;
                let du = 1.0 + 0.5 * c * r0.powf(2.0 - gamma) / (2.0 - gamma);
                let u = r0 + 0.5 * c * r0.powf(3.0 - gamma) / ((2.0 - gamma) * (3.0 - gamma));
                Sample { r: r0, u, du }
            } else {
                Sample { r: a, u: 0.0, du: 1.0 }
            };
            Profile { samples: vec![start] }
        }
    };
    let first = prof.last();
    let mut pts: Vec<f64> = breaks.iter().cloned().filter(|b| *b > first.r && *b < r_end).collect();
    pts.push(r_end);
    let mut y = [first.u, first.du];
    let mut r = first.r;
    let mut h = 1e-3 * (r_end - r).min(1.0);
    for p in pts {
        let (ny, nh) = integrate_panel(&f, r, p, y, h, &mut prof.samples)?;
        y = ny;
        h = nh;
        r = p;
    }
    Ok(prof)
}

fn alpha_at(s: Sample) -> f64 {
    s.r - s.u / s.du
}

fn hard_core_radius(v: &PairPotential) -> Option<f64> {
    match (v.kind, v.cap) {
        (PairKind::CappedHardCore { m: Level::Infinite, a }, None) => Some(a),
        _ => None,
    }
}

fn moment(v: &PairPotential, samples: &[Sample], breaks: &[f64]) -> f64 {
    let (x, w) = gauss_legendre(5);
    let mut acc = 0.0;
    for p in samples.windows(2) {
        let (a, b) = (p[0].r, p[1].r);
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        // steps never straddle a breakpoint, but guard the integrand side
        let _ = breaks;
        for (xi, wi) in x.iter().zip(&w) {
            let r = mid + half * xi;
            acc += wi * half * v.eval(r) * hermite(p[0], p[1], r) * r;
        }
    }
    acc
}

/// Scattering length in d = 3.
///
/// Hard cores (`m = inf`) are solved through the cap ladder
/// [`CutoffSpec::LADDER`] and extrapolated in `1/sqrt(M)`.
pub fn alpha_d3(v: &PairPotential, r_max: Option<f64>) -> Result<ScatteringSolution> {
    v.validate()?;
    if let Some(a) = hard_core_radius(v) {
        let mut s = Vec::new();
        let mut vals = Vec::new();
        let mut last = None;
        for m in CutoffSpec::LADDER {
            let capped = v.capped(CutoffSpec { level: m });
            let sol = alpha_d3(&capped, r_max)?;
            s.push(1.0 / m.sqrt());
            vals.push(sol.alpha);
            last = Some(sol);
        }
        let alpha = extrapolate_to_zero(&s, &vals);
        let lin = extrapolate_to_zero(&s[1..], &vals[1..]);
        let mut sol = last.unwrap();
        sol.residual = (alpha - lin).abs();
        sol.alpha = alpha;
        let _ = a;
        return Ok(sol);
    }
    if v.is_zero() {
        let r = r_max.unwrap_or(10.0);
        let samples = vec![Sample { r: 0.0, u: 0.0, du: 1.0 }, Sample { r, u: r, du: 1.0 }];
        return Ok(ScatteringSolution {
            alpha: 0.0,
            u_samples: samples.iter().map(|p| (p.r, p.u)).collect(),
            r_max: r,
            residual: 0.0,
            moment: 0.0,
            samples,
        });
    }
    let (a, _) = inner_boundary(v);
    if v.infimum() >= 0.0 {
        // finite alpha needs a convergent tail of v r^2
        if classify_pair(v, 3).ok() == Some(PairClass::SoftCore) && alpha_tilde(v, 3).is_err() {
            return Err(Error::InfiniteAlpha(format!("tail integral of {v:?} diverges")));
        }
    }
    let range = v.range().unwrap_or(1.0);
    let breaks = v.breakpoints();
    let fixed = r_max.is_some();
    let mut r_end = r_max.unwrap_or(10.0 * (a + range));
    let mut prof = profile_d3(v, &breaks, r_end, None)?;
    let mut prev = alpha_at(prof.last());
    let mut residual = f64::INFINITY;
    if fixed {
        let mid = prof.samples.partition_point(|p| p.r <= 0.5 * r_end).saturating_sub(1);
        residual = (alpha_at(prof.samples[mid]) - prev).abs();
    } else {
        for _ in 0..40 {
            r_end *= 2.0;
            prof = profile_d3(v, &breaks, r_end, Some(prof))?;
            let cur = alpha_at(prof.last());
            residual = (cur - prev).abs();
            prev = cur;
            if residual < 1e-10 * cur.abs().max(1e-3) {
                break;
            }
        }
        if !(residual < 1e-8) {
            return Err(Error::NotConverged(format!("scattering length still moving by {residual:.2e} at r = {r_end}")));
        }
    }
    let end = prof.last();
    let alpha = alpha_at(end);
    let norm = end.du;
    let samples: Vec<Sample> = prof.samples.iter().map(|p| Sample { r: p.r, u: p.u / norm, du: p.du / norm }).collect();
    let mut full = Vec::with_capacity(samples.len() + 1);
    if a > 0.0 || samples[0].r > 0.0 {
        full.push(Sample { r: 0.0, u: 0.0, du: 0.0 });
    }
    full.extend(samples);
    let mom = moment(v, &full, &breaks);
    Ok(ScatteringSolution {
        alpha,
        u_samples: full.iter().map(|p| (p.r, p.u)).collect(),
        r_max: r_end,
        residual,
        moment: mom,
        samples: full,
    })
}

/// Scattering length in d = 2 of `v` truncated to `[0, r_star]`, from the
/// profile on `[0, r]` with `u(r) = 1`.
pub fn alpha_d2(v: &PairPotential, r_star: f64, r: f64) -> Result<ScatteringSolution> {
    v.validate()?;
    if !(r_star > 0.0 && r > r_star) {
        return Err(Error::InvalidParameter(format!("need 0 < r_star < R, got {r_star}, {r}")));
    }
    if let Some(a) = hard_core_radius(v) {
        if a >= r_star {
            return Err(Error::InvalidParameter("hard core must lie inside the truncation radius".into()));
        }
        let mut s = Vec::new();
        let mut vals = Vec::new();
        let mut last = None;
        for m in CutoffSpec::LADDER {
            let sol = alpha_d2(&v.capped(CutoffSpec { level: m }), r_star, r)?;
            s.push(1.0 / m.sqrt());
            vals.push(sol.alpha.ln());
            last = Some(sol);
        }
        let la = extrapolate_to_zero(&s, &vals);
        let lin = extrapolate_to_zero(&s[1..], &vals[1..]);
        let mut sol = last.unwrap();
        sol.alpha = la.exp();
        sol.residual = (la.exp() - lin.exp()).abs();
        return Ok(sol);
    }
    if v.is_zero() {
        return Err(Error::Degenerate("the free radial equation has no logarithmic profile".into()));
    }
    let trunc = |x: f64| if x <= r_star { v.eval(x) } else { 0.0 };
    let f = |x: f64, y: [f64; 2]| [y[1], 0.5 * trunc(x) * y[0] - y[1] / x];
    // series start: u = 1 + v(0) x^2 / 8
    let v0 = v.eval(0.0);
    if !v0.is_finite() {
        return Err(Error::Domain("d = 2 scattering needs v bounded at the origin".into()));
    }
    let x0 = 1e-7 * r_star;
    let mut samples = vec![Sample { r: x0, u: 1.0 + v0 * x0 * x0 / 8.0, du: v0 * x0 / 4.0 }];
    let mut pts: Vec<f64> = v.breakpoints().into_iter().filter(|b| *b > x0 && *b < r_star).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.push(r_star);
    pts.push(r);
    let mut y = [samples[0].u, samples[0].du];
    let mut at = x0;
    let mut h = 1e-3 * r_star;
    for p in pts {
        let (ny, nh) = integrate_panel(&f, at, p, y, h, &mut samples)?;
        y = ny;
        h = nh;
        at = p;
    }
    let norm = y[0];
    if !(norm > 0.0) {
        return Err(Error::Domain("radial profile changed sign".into()));
    }
    let samples: Vec<Sample> = samples.iter().map(|p| Sample { r: p.r, u: p.u / norm, du: p.du / norm }).collect();
    // log alpha = (log x - u(x) log R) / (1 - u(x)) on (r_star, R)
    let mut est = Vec::new();
    for k in 1..8 {
        let x = r_star + (r - r_star) * k as f64 / 8.0;
        let i = samples.partition_point(|p| p.r <= x) - 1;
        let ux = hermite(samples[i], samples[(i + 1).min(samples.len() - 1)], x);
        if (1.0 - ux).abs() < 1e-12 {
            return Err(Error::Degenerate("profile is flat outside the support".into()));
        }
        est.push((x.ln() - ux * r.ln()) / (1.0 - ux));
    }
    let lo = est.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = est.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi - lo;
    if spread > 1e-7 * lo.abs().max(1.0) {
        return Err(Error::NotInLogRegime(format!("log alpha varies by {spread:.2e} over (R*, R)")));
    }
    let alpha = est[est.len() / 2].exp();
    let mut full = vec![Sample { r: 0.0, u: samples[0].u, du: 0.0 }];
    full.extend(samples);
    Ok(ScatteringSolution {
        alpha,
        u_samples: full.iter().map(|p| (p.r, p.u)).collect(),
        r_max: r,
        residual: spread * alpha,
        moment: f64::NAN,
        samples: full,
    })
}

/// d = 2 scattering length of a potential without compact support, from the
/// truncations at `{2, 4, 8}` times its range. Polynomial extrapolation in
/// `1/R*` is used when the truncation error decays algebraically; for
/// super-algebraic decay the finest rung is kept. The residual is the last
/// rung-to-rung change.
pub fn alpha_d2_general(v: &PairPotential) -> Result<ScatteringSolution> {
    if let Some(s) = v.support_radius() {
        let rs = s.max(1e-12) * 1.0;
        return alpha_d2(v, rs, 4.0 * rs);
    }
    let range = v.range().ok_or_else(|| Error::Precondition("d = 2 scattering needs a length scale".into()))?;
    let mut s = Vec::new();
    let mut vals = Vec::new();
    let mut last = None;
    for k in [2.0, 4.0, 8.0] {
        let rs = k * range;
        let sol = alpha_d2(v, rs, 2.0 * rs)?;
        s.push(1.0 / rs);
        vals.push(sol.alpha.ln());
        last = Some(sol);
    }
    let d1 = (vals[1] - vals[0]).abs();
    let d2 = (vals[2] - vals[1]).abs();
    // algebraic decay halves the change per rung by a bounded factor
    let algebraic = d2 > 0.05 * d1;
    let la = if algebraic { extrapolate_to_zero(&s, &vals) } else { vals[2] };
    let mut sol = last.unwrap();
    // geometric tail estimate of the remaining change
    sol.residual = if algebraic { (la - vals[2]).abs() } else { d2 * d2 / d1.max(1e-300) } * la.exp();
    sol.alpha = la.exp();
    Ok(sol)
}

#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub alpha: f64,
    pub alpha_tilde: f64,
    pub alpha_below_tilde: bool,
    /// `int v(|x|) u(|x|) / |x| dx`
    pub identity_lhs: f64,
    /// `8 pi alpha`
    pub identity_rhs: f64,
    pub identity_residual: f64,
    pub u_convex: bool,
    pub u_below_diagonal: bool,
}

/// Compares the scattering length with `alpha_tilde` and checks the moment
/// identity `int v u / |x| dx = 8 pi alpha` in d = 3.
pub fn inequality_report(v: &PairPotential) -> Result<InequalityReport> {
    v.validate()?;
    if v.is_zero() || !(v.eval(0.0) > 0.0) || v.infimum() < 0.0 {
        return Err(Error::Precondition("need v >= 0 with v(0) > 0".into()));
    }
    if classify_pair(v, 3)? != PairClass::SoftCore {
        return Err(Error::Precondition("need a soft-core potential".into()));
    }
    let sol = alpha_d3(v, None)?;
    let at = alpha_tilde(v, 3)?;
    let lhs = 4.0 * PI * sol.moment;
    let rhs = 8.0 * PI * sol.alpha;
    let residual = (lhs - rhs).abs() / rhs.abs();
    if !(residual < 1e-3) {
        return Err(Error::ScatteringInconsistency(format!("moment identity off by {residual:.2e}")));
    }
    let s = &sol.samples;
    let u_convex = s.windows(2).all(|p| p[1].du >= p[0].du - 1e-12);
    let u_below_diagonal = s.iter().filter(|p| p.r > 0.0).all(|p| p.u < p.r);
    Ok(InequalityReport {
        alpha: sol.alpha,
        alpha_tilde: at,
        alpha_below_tilde: sol.alpha < at,
        identity_lhs: lhs,
        identity_rhs: rhs,
        identity_residual: residual,
        u_convex,
        u_below_diagonal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::Rescale;

    fn well_alpha(c: f64, r0: f64) -> f64 {
        let k = (c / 2.0).sqrt();
        r0 - (k * r0).tanh() / k
    }

    #[test]
    fn square_well_matches_closed_form() {
        let sol = alpha_d3(&PairPotential::square_well(2.0, 1.0), None).unwrap();
        assert!((sol.alpha - (1.0 - 1f64.tanh())).abs() < 1e-9, "{}", sol.alpha);
        for c in [0.5, 7.0, 30.0] {
            let sol = alpha_d3(&PairPotential::square_well(c, 0.7), None).unwrap();
            assert!((sol.alpha - well_alpha(c, 0.7)).abs() < 1e-9);
        }
    }

    #[test]
    fn hard_core_ladder_recovers_the_radius() {
        let sol = alpha_d3(&PairPotential::hard_core(0.5), None).unwrap();
        assert!((sol.alpha - 0.5).abs() < 1e-4, "{}", sol.alpha);
    }

    #[test]
    fn free_equation_has_zero_length() {
        assert_eq!(alpha_d3(&PairPotential::zero(), None).unwrap().alpha, 0.0);
        assert!(matches!(alpha_d2(&PairPotential::zero(), 1.0, 2.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn dilation_scales_alpha() {
        for v in [PairPotential::gaussian(1.0, 1.0), PairPotential::square_well(2.0, 1.0)] {
            let base = alpha_d3(&v, None).unwrap().alpha;
            for xi in [0.1, 0.5, 2.0] {
                let w = v.rescaled(Rescale::Dilation { xi }, 3).unwrap();
                let a = alpha_d3(&w, None).unwrap().alpha;
                assert!((a - xi * base).abs() <= 1e-6 * xi * base, "xi={xi}: {a} vs {}", xi * base);
            }
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]

        #[test]
        fn dilation_covariance(c in 0.1f64..3.0, r0 in 0.3f64..2.0, xi in 0.2f64..3.0) {
            let v = PairPotential::square_well(c, r0);
            let base = alpha_d3(&v, None).unwrap().alpha;
            let w = v.rescaled(Rescale::Dilation { xi }, 3).unwrap();
            let a = alpha_d3(&w, None).unwrap().alpha;
            proptest::prop_assert!((a - xi * base).abs() <= 1e-6 * xi * base);
            proptest::prop_assert!((base - well_alpha(c, r0)).abs() <= 1e-6 * base.max(1e-3));
            proptest::prop_assert!(base > 0.0 && base < r0);
        }
    }

    #[test]
    fn monotone_in_strength() {
        let mut prev = 0.0;
        for c in [0.1, 0.5, 1.0, 2.0, 5.0, 20.0] {
            let a = alpha_d3(&PairPotential::square_well(c, 1.0), None).unwrap().alpha;
            assert!(a >= prev);
            prev = a;
        }
    }

    #[test]
    fn inequality_and_identity() {
        let r = inequality_report(&PairPotential::square_well(2.0, 1.0)).unwrap();
        assert!(r.alpha_below_tilde && r.identity_residual < 1e-6);
        assert!((r.alpha_tilde - 1.0 / 3.0).abs() < 1e-9);
        assert!(r.u_convex && r.u_below_diagonal);
        let g = inequality_report(&PairPotential::gaussian(1.0, 1.0)).unwrap();
        assert!(g.alpha_below_tilde && g.identity_residual < 1e-6);
        assert!(inequality_report(&PairPotential::zero()).is_err());
    }

    #[test]
    fn slowly_decaying_tail() {
        let v = PairPotential::inverse_power(1.0, 2.5);
        assert!(matches!(alpha_d3(&v, None), Err(Error::InfiniteAlpha(_))));
        let v = PairPotential::inverse_power(0.3, 1.5).capped(CutoffSpec { level: 50.0 });
        assert!(matches!(alpha_d3(&v, None), Err(Error::InfiniteAlpha(_))));
    }

    #[test]
    fn d2_is_independent_of_the_outer_radius() {
        let v = PairPotential::square_well(2.0, 1.0);
        let a = alpha_d2(&v, 1.0, 3.0).unwrap().alpha;
        let b = alpha_d2(&v, 1.0, 6.0).unwrap().alpha;
        assert!((a - b).abs() < 1e-6 * a, "{a} vs {b}");
        // closed form: inside u = I0(k r), outside log; matching u'/u at r0
        let k = 1.0f64;
        let (i0, i1) = bessel_i01(k);
        let log_ratio = i0 / (k * i1); // log(r0/alpha) = u/(r0 u')
        assert!((a - (-log_ratio).exp()).abs() < 1e-8, "{a} vs {}", (-log_ratio).exp());
    }

    fn bessel_i01(x: f64) -> (f64, f64) {
        let mut i0 = 0.0;
        let mut i1 = 0.0;
        let mut term = 1.0;
        for k in 0..40 {
            if k > 0 {
                term *= (x / 2.0).powi(2) / (k as f64 * k as f64);
            }
            i0 += term;
            i1 += term * (x / 2.0) / (k as f64 + 1.0);
        }
        (i0, i1)
    }

    #[test]
    fn d2_hard_core_ladder() {
        let sol = alpha_d2(&PairPotential::hard_core(0.5), 1.0, 4.0).unwrap();
        assert!((sol.alpha - 0.5).abs() < 1e-3, "{}", sol.alpha);
    }

    #[test]
    fn d2_gaussian_truncations_agree() {
        let sol = alpha_d2_general(&PairPotential::gaussian(1.0, 1.0)).unwrap();
        assert!(sol.alpha > 0.0 && sol.residual < 1e-5 * sol.alpha, "{} {}", sol.alpha, sol.residual);
    }
}
