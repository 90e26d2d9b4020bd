//! Zero-noise extrapolation: exact interpolation, polynomial least squares
//! and a rational (Padé-type) fit.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{EsdError, Result};
use crate::noise::{amplify, NoiseModel};

/// Largest accepted condition number of a least-squares design matrix.
pub const MAX_CONDITION: f64 = 1e12;
/// Iteration cap of the rational-fit refinement.
pub const PADE_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub eps: f64,
    pub value: f64,
    #[serde(default)]
    pub shots: Option<u64>,
}

/// Values E(ε) sampled at distinct noise levels, sorted by ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseScaleSeries {
    points: Vec<SeriesPoint>,
    /// Noisy gate count ν of the circuit, when known.
    pub nu: Option<usize>,
}

impl NoiseScaleSeries {
    pub fn new(points: Vec<SeriesPoint>, nu: Option<usize>) -> Result<Self> {
        let mut points = points;
        if points.is_empty() {
            return Err(EsdError::Fit("empty series".into()));
        }
        if points.iter().any(|p| !(p.eps >= 0.0) || !p.value.is_finite()) {
            return Err(EsdError::Fit("noise levels must be ≥ 0 and values finite".into()));
        }
        points.sort_by(|a, b| a.eps.total_cmp(&b.eps));
        if points.windows(2).any(|w| w[0].eps == w[1].eps) {
            return Err(EsdError::Fit("duplicate noise level".into()));
        }
        Ok(Self { points, nu })
    }

    pub fn from_pairs(pairs: &[(f64, f64)], nu: Option<usize>) -> Result<Self> {
        Self::new(pairs.iter().map(|&(eps, value)| SeriesPoint { eps, value, shots: None }).collect(), nu)
    }

    pub fn points(&self) -> &[SeriesPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn eps(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.eps).collect()
    }

    fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    Linear,
    Poly(usize),
    ExactInterp,
    Pade33,
}

impl FitKind {
    pub fn label(&self) -> String {
        match self {
            FitKind::Linear => "linear".into(),
            FitKind::Poly(d) => format!("poly{d}"),
            FitKind::ExactInterp => "exact".into(),
            FitKind::Pade33 => "pade33".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub kind: FitKind,
    pub zero_noise_value: f64,
    /// Polynomial: c₀, c₁, … in powers of ε. Exact interpolation: Newton
    /// divided differences. Rational: a₀ … a₅.
    pub coefficients: Vec<f64>,
    /// Root-mean-square residual over the fitted points.
    pub residual: f64,
    /// Condition number of the least-squares design, when one was solved.
    pub condition: Option<f64>,
    /// Nodes of the Newton form (exact interpolation only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nodes: Vec<f64>,
}

impl FitResult {
    pub fn evaluate(&self, eps: f64) -> f64 {
        match self.kind {
            FitKind::Linear | FitKind::Poly(_) => horner(&self.coefficients, eps),
            FitKind::ExactInterp => {
                let mut v = *self.coefficients.last().unwrap_or(&0.0);
                for k in (0..self.coefficients.len().saturating_sub(1)).rev() {
                    v = v * (eps - self.nodes[k]) + self.coefficients[k];
                }
                v
            }
            FitKind::Pade33 => rational(&self.coefficients, eps),
        }
    }

    /// Rows (ε, value, fitted, residual) for a series.
    pub fn table(&self, series: &NoiseScaleSeries) -> Vec<[f64; 4]> {
        series
            .points()
            .iter()
            .map(|p| {
                let f = self.evaluate(p.eps);
                [p.eps, p.value, f, p.value - f]
            })
            .collect()
    }
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
}

/// a₀ + (a₁x + a₂x² + a₃x³) / (1 + a₄x + a₅x²).
fn rational(a: &[f64], x: f64) -> f64 {
    a[0] + (a[1] * x + a[2] * x * x + a[3] * x * x * x) / (1.0 + a[4] * x + a[5] * x * x)
}

fn rms(residuals: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = residuals.fold((0.0, 0usize), |(s, n), r| (s + r * r, n + 1));
    if n == 0 {
        0.0
    } else {
        (s / n as f64).sqrt()
    }
}

/// Least squares via SVD; returns the solution and the condition number.
fn lstsq(a: DMatrix<f64>, b: DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond <= MAX_CONDITION) {
        return Err(EsdError::Fit(format!("ill-conditioned design matrix (condition {cond:.3e})")));
    }
    let x = svd.solve(&b, 0.0).map_err(|e| EsdError::Fit(e.to_string()))?;
    Ok((x, cond))
}

/// Least-squares polynomial of the given degree; the zero-noise value is the
/// constant term. ε is rescaled to [0, 1] internally for conditioning.
pub fn fit_polynomial(series: &NoiseScaleSeries, degree: usize) -> Result<FitResult> {
    if series.len() < degree + 1 {
        return Err(EsdError::Fit(format!("degree {degree} needs {} points, got {}", degree + 1, series.len())));
    }
    let eps = series.eps();
    let scale = eps.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let a = DMatrix::from_fn(eps.len(), degree + 1, |r, c| (eps[r] / scale).powi(c as i32));
    let b = DVector::from_vec(series.values());
    let (x, cond) = lstsq(a, b)?;
    let coefficients: Vec<f64> = x.iter().enumerate().map(|(k, v)| v / scale.powi(k as i32)).collect();
    let residual = rms(series.points().iter().map(|p| p.value - horner(&coefficients, p.eps)));
    Ok(FitResult {
        kind: if degree == 1 { FitKind::Linear } else { FitKind::Poly(degree) },
        zero_noise_value: coefficients[0],
        coefficients,
        residual,
        condition: Some(cond),
        nodes: Vec::new(),
    })
}

/// Newton-form interpolation through every point; exact for E(ε) of degree
/// ν when ν + 1 points are given.
pub fn fit_exact(series: &NoiseScaleSeries) -> Result<FitResult> {
    if let Some(nu) = series.nu {
        if series.len() != nu + 1 {
            return Err(EsdError::Fit(format!("exact interpolation of degree {nu} needs {} points", nu + 1)));
        }
    }
    let nodes = series.eps();
    let mut dd = series.values();
    let m = nodes.len();
    for level in 1..m {
        for i in (level..m).rev() {
            dd[i] = (dd[i] - dd[i - 1]) / (nodes[i] - nodes[i - level]);
        }
    }
    let mut fit = FitResult {
        kind: FitKind::ExactInterp,
        zero_noise_value: 0.0,
        coefficients: dd,
        residual: 0.0,
        condition: None,
        nodes,
    };
    fit.zero_noise_value = fit.evaluate(0.0);
    fit.residual = rms(series.points().iter().map(|p| p.value - fit.evaluate(p.eps)));
    Ok(fit)
}

/// Residuals and Jacobian of the rational model at scaled abscissae.
fn rational_jacobian(a: &[f64], x: &[f64], y: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let m = x.len();
    let mut r = DVector::zeros(m);
    let mut j = DMatrix::zeros(m, 6);
    for i in 0..m {
        let t = x[i];
        let num = a[1] * t + a[2] * t * t + a[3] * t * t * t;
        let den = 1.0 + a[4] * t + a[5] * t * t;
        r[i] = a[0] + num / den - y[i];
        j[(i, 0)] = 1.0;
        j[(i, 1)] = t / den;
        j[(i, 2)] = t * t / den;
        j[(i, 3)] = t * t * t / den;
        j[(i, 4)] = -num * t / (den * den);
        j[(i, 5)] = -num * t * t / (den * den);
    }
    (r, j)
}

fn denominator_root_in(a4: f64, a5: f64, lo: f64, hi: f64) -> bool {
    // 1 + a4 x + a5 x² on [lo, hi]: check the ends and the vertex
    let d = |x: f64| 1.0 + a4 * x + a5 * x * x;
    let mut xs = vec![lo, hi];
    if a5 != 0.0 {
        let v = -a4 / (2.0 * a5);
        if v > lo && v < hi {
            xs.push(v);
        }
    }
    let vals: Vec<f64> = xs.iter().map(|&x| d(x)).collect();
    vals.iter().any(|&v| v <= 0.0) || (a5 != 0.0 && {
        let disc = a4 * a4 - 4.0 * a5;
        disc >= 0.0 && {
            let s = disc.sqrt();
            let roots = [(-a4 - s) / (2.0 * a5), (-a4 + s) / (2.0 * a5)];
            roots.iter().any(|&x| x >= lo && x <= hi)
        }
    })
}

/// Fits E(ε) = a₀ + (a₁ε + a₂ε² + a₃ε³) / (1 + a₄ε + a₅ε²).
///
/// A linearised least-squares solve (multiply through by the denominator)
/// gives the start; Gauss–Newton steps refine it, halving the step whenever
/// the residual grows. Fits whose denominator vanishes on [0, ε_max] are
/// rejected.
pub fn fit_pade33(series: &NoiseScaleSeries) -> Result<FitResult> {
    if series.len() < 6 {
        return Err(EsdError::Fit(format!("rational fit needs 6 points, got {}", series.len())));
    }
    let eps = series.eps();
    let y = series.values();
    let scale = eps.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let x: Vec<f64> = eps.iter().map(|e| e / scale).collect();
    let m = x.len();

    // E = a0 + c1 x + c2 x² + a3 x³ − a4 x E − a5 x² E
    let a_lin = DMatrix::from_fn(m, 6, |i, c| {
        let t = x[i];
        match c {
            0 => 1.0,
            1 => t,
            2 => t * t,
            3 => t * t * t,
            4 => -t * y[i],
            _ => -t * t * y[i],
        }
    });
    let svd = a_lin.svd(true, true);
    let smax = svd.singular_values.max();
    let lin = svd
        .solve(&DVector::from_vec(y.clone()), smax * 1e-12)
        .map_err(|e| EsdError::Fit(e.to_string()))?;
    let mut a = vec![lin[0], lin[1] - lin[0] * lin[4], lin[2] - lin[0] * lin[5], lin[3], lin[4], lin[5]];

    let cost = |a: &[f64]| -> f64 { x.iter().zip(&y).map(|(&t, &v)| (rational(a, t) - v).powi(2)).sum() };
    let mut current = cost(&a);
    for _ in 0..PADE_MAX_ITER {
        let (r, j) = rational_jacobian(&a, &x, &y);
        let jt = j.transpose();
        let jtj = &jt * &j;
        let g = &jt * &r;
        let svd = jtj.svd(true, true);
        let smax = svd.singular_values.max();
        let Ok(step) = svd.solve(&g, smax * 1e-14) else { break };
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let trial: Vec<f64> = a.iter().zip(step.iter()).map(|(ai, si)| ai - t * si).collect();
            if !denominator_root_in(trial[4], trial[5], 0.0, 1.0) {
                let c = cost(&trial);
                if c < current {
                    let gain = current - c;
                    a = trial;
                    current = c;
                    improved = gain > 1e-30 + 1e-14 * current;
                    break;
                }
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }

    if denominator_root_in(a[4], a[5], 0.0, 1.0) {
        return Err(EsdError::Fit("rational fit has a pole inside the sampled noise range".into()));
    }
    let coefficients = vec![a[0], a[1] / scale, a[2] / scale.powi(2), a[3] / scale.powi(3), a[4] / scale, a[5] / scale.powi(2)];
    let residual = rms(series.points().iter().map(|p| p.value - rational(&coefficients, p.eps)));
    Ok(FitResult {
        kind: FitKind::Pade33,
        zero_noise_value: coefficients[0],
        coefficients,
        residual,
        condition: None,
        nodes: Vec::new(),
    })
}

/// [L/M] Padé approximant from Taylor coefficients c₀ … c_{L+M}: returns
/// numerator p₀..p_L and denominator 1, q₁..q_M.
pub fn pade_from_taylor(c: &[f64], l: usize, m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if c.len() < l + m + 1 {
        return Err(EsdError::Fit(format!("[{l}/{m}] approximant needs {} Taylor terms", l + m + 1)));
    }
    let coef = |k: isize| if k < 0 { 0.0 } else { c[k as usize] };
    // Σ_{j=1..M} q_j c_{k−j} = −c_k for k = L+1 … L+M
    let a = DMatrix::from_fn(m, m, |r, j| coef((l + 1 + r) as isize - (j + 1) as isize));
    let b = DVector::from_fn(m, |r, _| -c[l + 1 + r]);
    let q = a.lu().solve(&b).ok_or_else(|| EsdError::Fit("singular Padé system".into()))?;
    let mut den = vec![1.0];
    den.extend(q.iter());
    let num = (0..=l)
        .map(|k| (0..=k.min(m)).map(|j| den[j] * coef(k as isize - j as isize)).sum())
        .collect();
    Ok((num, den))
}

/// Fit of the given kind.
pub fn fit(series: &NoiseScaleSeries, kind: FitKind) -> Result<FitResult> {
    match kind {
        FitKind::Linear => fit_polynomial(series, 1),
        FitKind::Poly(d) => fit_polynomial(series, d),
        FitKind::ExactInterp => fit_exact(series),
        FitKind::Pade33 => fit_pade33(series),
    }
}

/// `points` evenly spaced noise levels on [base, 2·base].
pub fn default_grid(base: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![base],
        _ => (0..points).map(|k| base * (1.0 + k as f64 / (points - 1) as f64)).collect(),
    }
}

/// Evaluates at each grid point and fits. A single-point grid returns that
/// value unchanged.
pub fn zne_pipeline(
    evaluate: impl Fn(f64) -> Result<f64>,
    eps_grid: &[f64],
    kind: FitKind,
) -> Result<(FitResult, NoiseScaleSeries)> {
    let pairs = eps_grid.iter().map(|&e| Ok((e, evaluate(e)?))).collect::<Result<Vec<_>>>()?;
    let series = NoiseScaleSeries::from_pairs(&pairs, None)?;
    if series.len() == 1 {
        let v = series.points()[0].value;
        let fit = FitResult {
            kind,
            zero_noise_value: v,
            coefficients: vec![v],
            residual: 0.0,
            condition: None,
            nodes: Vec::new(),
        };
        return Ok((fit, series));
    }
    Ok((fit(&series, kind)?, series))
}

/// Noise model amplified to an absolute level: amplifiable components
/// scaled so that a base level `base_eps` becomes `eps`.
pub fn model_at(nm: &NoiseModel, base_eps: f64, eps: f64) -> Result<NoiseModel> {
    amplify(nm, eps / base_eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomial_recovers_exact_quadratic() {
        let f = |e: f64| 0.3 - 2.0 * e + 5.0 * e * e;
        let pairs: Vec<(f64, f64)> = (0..6).map(|k| (0.01 * (1.0 + k as f64), f(0.01 * (1.0 + k as f64)))).collect();
        let s = NoiseScaleSeries::from_pairs(&pairs, None).unwrap();
        let fit = fit_polynomial(&s, 2).unwrap();
        assert_abs_diff_eq!(fit.coefficients[0], 0.3, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.coefficients[1], -2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.coefficients[2], 5.0, epsilon = 1e-8);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn constant_series() {
        let s = NoiseScaleSeries::from_pairs(&[(0.1, 0.7), (0.2, 0.7), (0.3, 0.7), (0.4, 0.7), (0.5, 0.7), (0.6, 0.7)], None)
            .unwrap();
        assert_abs_diff_eq!(fit_polynomial(&s, 1).unwrap().zero_noise_value, 0.7, epsilon = 1e-14);
        let p = fit_pade33(&s).unwrap();
        assert_abs_diff_eq!(p.zero_noise_value, 0.7, epsilon = 1e-12);
        for e in [0.0, 0.25, 0.6] {
            assert_abs_diff_eq!(p.evaluate(e), 0.7, epsilon = 1e-12);
        }
    }

    #[test]
    fn exact_interpolation_is_order_independent() {
        let f = |e: f64| 1.0 - 3.0 * e + e.powi(3);
        let mut pairs: Vec<(f64, f64)> = [0.02, 0.05, 0.03, 0.08].iter().map(|&e| (e, f(e))).collect();
        let a = fit_exact(&NoiseScaleSeries::from_pairs(&pairs, Some(3)).unwrap()).unwrap();
        pairs.reverse();
        let b = fit_exact(&NoiseScaleSeries::from_pairs(&pairs, Some(3)).unwrap()).unwrap();
        assert_abs_diff_eq!(a.zero_noise_value, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.zero_noise_value, b.zero_noise_value, epsilon = 1e-12);
        let single = fit_exact(&NoiseScaleSeries::from_pairs(&[(0.1, 0.42)], Some(0)).unwrap()).unwrap();
        assert_eq!(single.zero_noise_value, 0.42);
        assert!(fit_exact(&NoiseScaleSeries::from_pairs(&pairs, Some(2)).unwrap()).is_err());
    }

    #[test]
    fn duplicate_levels_rejected() {
        assert!(NoiseScaleSeries::from_pairs(&[(0.1, 1.0), (0.1, 2.0)], None).is_err());
    }

    /// Taylor coefficients of ε(1−ε)^n / (1 − 2ε) by direct convolution.
    fn taylor(n: usize, terms: usize) -> Vec<f64> {
        let mut binom = vec![0.0; terms];
        let mut c = 1.0;
        for (k, b) in binom.iter_mut().enumerate().take(n.min(terms - 1) + 1) {
            *b = if k % 2 == 0 { c } else { -c };
            c = c * (n - k) as f64 / (k + 1) as f64;
        }
        let mut out = vec![0.0; terms];
        for (k, o) in out.iter_mut().enumerate().skip(1) {
            // ε · Σ_j binom_j ε^j · Σ_m 2^m ε^m
            *o = (0..k).map(|j| binom[j] * 2f64.powi((k - 1 - j) as i32)).sum();
        }
        out
    }

    #[test]
    fn pade_coefficient_closed_form() {
        // a(n) = 2(62 + 11n − 8n² + n³) / (5(26 − 9n + n²)) is minus the ε²
        // numerator coefficient of the [3/3] approximant.
        for n in [10usize, 50] {
            let nf = n as f64;
            let a_n = 2.0 * (62.0 + 11.0 * nf - 8.0 * nf * nf + nf.powi(3)) / (5.0 * (26.0 - 9.0 * nf + nf * nf));
            let (num, _den) = pade_from_taylor(&taylor(n, 7), 3, 3).unwrap();
            assert_abs_diff_eq!(num[0], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(num[1], 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(-num[2], a_n, epsilon = 1e-8 * a_n);
        }
    }

    #[test]
    fn pade_fit_recovers_zero_noise_value() {
        let (e0, eta, nu) = (0.37, 0.01, 50);
        let f = |e: f64| e0 - eta * e * (1.0 - e).powi(nu) / (2.0 * e - 1.0);
        let grid = default_grid(0.002, 8);
        let pairs: Vec<(f64, f64)> = grid.iter().map(|&e| (e, f(e))).collect();
        let fit = fit_pade33(&NoiseScaleSeries::from_pairs(&pairs, None).unwrap()).unwrap();
        assert_abs_diff_eq!(fit.zero_noise_value, e0, epsilon = 1e-6);
    }

    #[test]
    fn pipeline_passthrough_and_grid() {
        let (fit, _) = zne_pipeline(|_| Ok(0.9), &[0.01], FitKind::Linear).unwrap();
        assert_eq!(fit.zero_noise_value, 0.9);
        let grid = default_grid(0.01, 6);
        assert_eq!(grid.len(), 6);
        assert_abs_diff_eq!(grid[5], 0.02, epsilon = 1e-15);
        let (fit, series) = zne_pipeline(|e| Ok(1.0 - 2.0 * e + 3.0 * e * e - e.powi(3)), &grid, FitKind::Poly(3)).unwrap();
        assert_eq!(series.len(), 6);
        assert_abs_diff_eq!(fit.zero_noise_value, 1.0, epsilon = 1e-9);
    }
}
