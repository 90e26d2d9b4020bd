//! Estimators built on prob₀, their error bounds and resource planning.
//!
//! With ρ = λ|ψ><ψ| + (1−λ) Σ p_k |ψ_k><ψ_k| the suppression sequence is
//! Q_n = (λ⁻¹ − 1)ⁿ Σ p_kⁿ; Method B (divide by λⁿ) errs by at most Q_n and
//! Method A (divide by the σ = Id run) by at most 2Q_n / (1 + Q_n).

use rand::SeedableRng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{EsdError, Result};
use crate::linalg::Spectrum;
use crate::pauli::PauliString;
use crate::random::EsdRng;
use crate::state::pure_expectation;

/// Smallest λⁿ accepted before a division is reported as underflow.
pub const UNDERFLOW: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    A,
    B,
}

/// (2·prob₀ − 1) / (2·prob′₀ − 1).
pub fn method_a(prob0: f64, prob0_prime: f64) -> Result<f64> {
    let den = 2.0 * prob0_prime - 1.0;
    if !(den > 0.0) {
        return Err(EsdError::Undefined(format!("2·prob0' − 1 = {den:.3e} is not positive")));
    }
    Ok((2.0 * prob0 - 1.0) / den)
}

/// (2·prob₀ − 1) / λⁿ.
pub fn method_b(prob0: f64, lambda: f64, n: u32) -> Result<f64> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(EsdError::InvalidArgument(format!("dominant eigenvalue {lambda} outside (0, 1]")));
    }
    let ln = lambda.powi(n as i32);
    if ln < UNDERFLOW {
        return Err(EsdError::Undefined(format!("λ^n = {ln:.3e} underflows")));
    }
    Ok((2.0 * prob0 - 1.0) / ln)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QnBounds {
    pub q_n: f64,
    /// 2Q_n / (1 + Q_n).
    pub bound_a: f64,
    /// Q_n.
    pub bound_b: f64,
}

impl QnBounds {
    fn from_qn(q_n: f64) -> Self {
        Self { q_n, bound_a: 2.0 * q_n / (1.0 + q_n), bound_b: q_n }
    }

    pub fn for_method(&self, m: Method) -> f64 {
        match m {
            Method::A => self.bound_a,
            Method::B => self.bound_b,
        }
    }
}

/// Q_n = (λ⁻¹ − 1)ⁿ Σ p_kⁿ.
pub fn bound_qn(lambda: f64, p: &[f64], n: u32) -> QnBounds {
    let norm: f64 = p.iter().map(|x| x.powi(n as i32)).sum();
    QnBounds::from_qn((1.0 / lambda - 1.0).powi(n as i32) * norm)
}

/// Q_n in entropy form: (λ⁻¹ − 1)ⁿ exp[−(n−1) H_n].
pub fn bound_qn_entropy(lambda: f64, h_n: f64, n: u32) -> QnBounds {
    let q = (1.0 / lambda - 1.0).powi(n as i32) * (-(n as f64 - 1.0) * h_n).exp();
    QnBounds::from_qn(q)
}

/// Q = (λ⁻¹ − 1) p_max.
pub fn suppression_factor(lambda: f64, p_max: f64) -> f64 {
    (1.0 / lambda - 1.0) * p_max
}

/// (λ⁻¹ − 1)ⁿ p_maxⁿ⁻¹, an upper bound on Q_n for any error distribution.
pub fn bound_qn_general(lambda: f64, p_max: f64, n: u32) -> f64 {
    (1.0 / lambda - 1.0).powi(n as i32) * p_max.powi(n as i32 - 1)
}

/// Bound for copies that are not exactly identical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EffectiveBound {
    /// Copies share eigenvectors: (λ_min⁻¹ − 1)ⁿ Σ (p_k,max)ⁿ.
    Commuting(f64),
    /// Generic copies: only the scaling (λ_min⁻¹ − 1)ⁿ is known, up to an
    /// unspecified constant.
    OrderEstimate(f64),
    /// λ_min ≤ ½: no exponential guarantee.
    Void,
}

/// Effective Q_n for commuting copies with element-wise maximal error
/// probabilities `p_max_elementwise`.
pub fn bound_qn_effective(lambda_min: f64, p_max_elementwise: &[f64], n: u32) -> EffectiveBound {
    let norm: f64 = p_max_elementwise.iter().map(|x| x.powi(n as i32)).sum();
    EffectiveBound::Commuting((1.0 / lambda_min - 1.0).powi(n as i32) * norm)
}

pub fn bound_qn_effective_generic(lambda_min: f64, n: u32) -> EffectiveBound {
    if lambda_min <= 0.5 {
        EffectiveBound::Void
    } else {
        EffectiveBound::OrderEstimate((1.0 / lambda_min - 1.0).powi(n as i32))
    }
}

/// Copies needed to reach `precision`:
/// ⌈(ln 𝓔⁻¹ + ln(2/p_max)) / ln Q⁻¹⌉, at least 2.
pub fn copies_required(precision: f64, lambda: f64, p_max: f64) -> Result<u32> {
    if !(precision > 0.0) {
        return Err(EsdError::InvalidArgument(format!("precision {precision} must be positive")));
    }
    let q = suppression_factor(lambda, p_max);
    if !(q < 1.0) {
        return Err(EsdError::Undefined(format!("suppression factor Q = {q:.4} ≥ 1, no finite copy count")));
    }
    if q <= 0.0 {
        return Ok(2);
    }
    let n = ((1.0 / precision).ln() + (2.0 / p_max).ln()) / (1.0 / q).ln();
    Ok((n.ceil().max(2.0)) as u32)
}

/// f = ln(λ⁻¹) / ln(Q⁻¹); the sampling overhead grows as 𝓔^{−2f}.
pub fn overhead_exponent(lambda: f64, q: f64) -> Result<f64> {
    if !(q < 1.0) {
        return Err(EsdError::Undefined(format!("Q = {q} ≥ 1")));
    }
    if q <= 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 / lambda).ln() / (1.0 / q).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShotCount {
    A { prob0_shots: u64, prob0_prime_shots: u64, total: u64 },
    B { shots: u64 },
}

impl ShotCount {
    pub fn total(&self) -> u64 {
        match *self {
            ShotCount::A { total, .. } => total,
            ShotCount::B { shots } => shots,
        }
    }
}

fn ceil_count(x: f64) -> Result<u64> {
    if !x.is_finite() || x > u64::MAX as f64 {
        return Err(EsdError::Undefined(format!("shot count {x:e} is not representable")));
    }
    Ok((x.ceil() as u64).max(1))
}

/// Shots to push shot noise below `precision`. Method B:
/// 4p(1−p)/(𝓔²λ²ⁿ); Method A splits 𝓔² evenly between the two
/// probabilities: 8p(1−p)/(𝓔²λ²ⁿ) and 8p′(1−p′)(2p−1)²/(𝓔²λ⁴ⁿ).
pub fn shots_required(
    method: Method,
    precision: f64,
    lambda: f64,
    n: u32,
    prob0: f64,
    prob0_prime: f64,
) -> Result<ShotCount> {
    let l2n = lambda.powi(2 * n as i32);
    if l2n < UNDERFLOW {
        return Err(EsdError::Undefined(format!("λ^(2n) = {l2n:.3e} underflows")));
    }
    let e2 = precision * precision;
    match method {
        Method::B => Ok(ShotCount::B { shots: ceil_count(4.0 * prob0 * (1.0 - prob0) / (e2 * l2n))? }),
        Method::A => {
            let l4n = l2n * l2n;
            if l4n < UNDERFLOW {
                return Err(EsdError::Undefined(format!("λ^(4n) = {l4n:.3e} underflows")));
            }
            let n1 = ceil_count(8.0 * prob0 * (1.0 - prob0) / (e2 * l2n))?;
            let x = 2.0 * prob0 - 1.0;
            let n2 = ceil_count(8.0 * prob0_prime * (1.0 - prob0_prime) * x * x / (e2 * l4n))?;
            Ok(ShotCount::A { prob0_shots: n1, prob0_prime_shots: n2, total: n1 + n2 })
        }
    }
}

/// Empirical frequency of `n_shots` Bernoulli(true_prob) draws.
pub fn sample_prob(true_prob: f64, n_shots: u64, seed: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&true_prob) {
        return Err(EsdError::InvalidProbability { value: true_prob, context: "sample_prob".into() });
    }
    if n_shots == 0 {
        return Err(EsdError::InvalidArgument("need at least one shot".into()));
    }
    let mut rng = EsdRng::seed_from_u64(seed);
    let dist = Binomial::new(n_shots, true_prob).map_err(|e| EsdError::InvalidArgument(e.to_string()))?;
    Ok(dist.sample(&mut rng) as f64 / n_shots as f64)
}

/// Largest N(n−1) such that (1 − gate_error)^{N(n−1)} stays above
/// `threshold`; `None` when no limit applies.
pub fn attenuation_qubit_limit(gate_error: f64, threshold: f64) -> Option<u64> {
    if threshold >= 1.0 || threshold <= 0.0 || gate_error <= 0.0 || gate_error >= 1.0 {
        return None;
    }
    Some((threshold.ln() / (1.0 - gate_error).ln()).floor() as u64)
}

/// Resource estimate for one (precision, λ, p_max) point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourcePlan {
    pub epsilon: f64,
    pub lambda: f64,
    pub p_max: f64,
    pub n: u32,
    #[serde(rename = "Q")]
    pub q: f64,
    /// General bound (λ⁻¹ − 1)ⁿ p_maxⁿ⁻¹ at the planned n.
    #[serde(rename = "Q_n")]
    pub q_n: f64,
    pub f: f64,
    /// [prob₀ shots, prob′₀ shots].
    pub shots_a: [u64; 2],
    pub shots_b: u64,
}

/// Plans copies and shots. Probabilities default to the model values
/// prob₀ = prob′₀ = ½(1 + λⁿ) when not given.
pub fn plan_resources(
    precision: f64,
    lambda: f64,
    p_max: f64,
    prob0: Option<f64>,
    prob0_prime: Option<f64>,
) -> Result<ResourcePlan> {
    let n = copies_required(precision, lambda, p_max)?;
    let q = suppression_factor(lambda, p_max);
    let model = 0.5 * (1.0 + lambda.powi(n as i32));
    let p = prob0.unwrap_or(model);
    let pp = prob0_prime.unwrap_or(model);
    let a = shots_required(Method::A, precision, lambda, n, p, pp)?;
    let b = shots_required(Method::B, precision, lambda, n, p, pp)?;
    let shots_a = match a {
        ShotCount::A { prob0_shots, prob0_prime_shots, .. } => [prob0_shots, prob0_prime_shots],
        ShotCount::B { .. } => unreachable!("method A requested"),
    };
    Ok(ResourcePlan {
        epsilon: precision,
        lambda,
        p_max,
        n,
        q,
        q_n: bound_qn_general(lambda, p_max, n),
        f: overhead_exponent(lambda, q)?,
        shots_a,
        shots_b: b.total(),
    })
}

/// Exact Method A/B values from the spectrum of ρ, with no shot noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EsdEstimate {
    pub method: Method,
    pub n: u32,
    pub value: f64,
    pub prob0: f64,
    /// prob′₀ for Method A, λ for Method B.
    pub normaliser: f64,
    pub bound: f64,
}

/// Per-eigenvector expectations <v_i|σ|v_i>, for reuse across n.
pub fn eigen_expectations(spectrum: &Spectrum, sigma: &PauliString) -> Result<Vec<f64>> {
    (0..spectrum.dim()).map(|i| pure_expectation(&spectrum.vector(i), sigma)).collect()
}

/// tr[ρⁿσ] from eigenvalues and per-eigenvector expectations.
pub fn power_expectation(eigenvalues: &[f64], expectations: &[f64], n: u32) -> f64 {
    eigenvalues.iter().zip(expectations).map(|(&e, &s)| e.max(0.0).powi(n as i32) * s).sum()
}

/// Method A and B estimates of <ψ|σ|ψ> through the closed form
/// prob₀ = ½ + ½ tr[ρⁿσ], with Q_n bounds from `p`.
pub fn spectral_estimates(
    eigenvalues: &[f64],
    expectations: &[f64],
    p: &[f64],
    n: u32,
) -> Result<(EsdEstimate, EsdEstimate)> {
    let lambda = eigenvalues[0];
    let t_sigma = power_expectation(eigenvalues, expectations, n);
    let t_id: f64 = eigenvalues.iter().map(|e| e.max(0.0).powi(n as i32)).sum();
    let prob0 = 0.5 + 0.5 * t_sigma;
    let prob0_prime = 0.5 + 0.5 * t_id;
    let b = bound_qn(lambda, p, n);
    let est_a = EsdEstimate {
        method: Method::A,
        n,
        value: t_sigma / t_id,
        prob0,
        normaliser: prob0_prime,
        bound: b.bound_a,
    };
    let est_b = EsdEstimate {
        method: Method::B,
        n,
        value: {
            method_b(prob0, lambda, n)?;
            t_sigma / lambda.powi(n as i32)
        },
        prob0,
        normaliser: lambda,
        bound: b.bound_b,
    };
    Ok((est_a, est_b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn example_two_worst_case() {
        // λ = 0.8 with a single error vector; σ = +1 on ψ, −1 on the error.
        let (lambda, n) = (0.8f64, 3u32);
        let t_sigma = lambda.powi(3) - 0.2f64.powi(3);
        let t_id = lambda.powi(3) + 0.2f64.powi(3);
        assert_abs_diff_eq!(lambda.powi(3), 0.512, epsilon = 1e-15);
        assert_abs_diff_eq!(0.2f64.powi(3), 0.008, epsilon = 1e-15);
        let a = method_a(0.5 + 0.5 * t_sigma, 0.5 + 0.5 * t_id).unwrap();
        assert_abs_diff_eq!(a, 0.504 / 0.52, epsilon = 1e-12);
        let b = bound_qn(lambda, &[1.0], n);
        assert_abs_diff_eq!(b.q_n, 0.015625, epsilon = 1e-15);
        assert_abs_diff_eq!(1.0 - a, b.bound_a, epsilon = 1e-12);
    }

    #[test]
    fn example_one_method_b() {
        let lambda = 0.8f64;
        let t = 0.5120008;
        let est = method_b(0.5 + 0.5 * t, lambda, 3).unwrap();
        assert_abs_diff_eq!(est, 1.0000015625, epsilon = 1e-12);
        let b = bound_qn(lambda, &[0.01; 100], 3);
        assert_abs_diff_eq!(b.q_n, 1.5625e-6, epsilon = 1e-15);
        assert!(est - 1.0 <= b.bound_b + 1e-15);
    }

    #[test]
    fn method_edge_cases() {
        assert_eq!(method_a(1.0, 1.0).unwrap(), 1.0);
        assert!(method_a(0.7, 0.5).is_err());
        assert_abs_diff_eq!(method_b(0.9, 1.0, 4).unwrap(), 0.8, epsilon = 1e-15);
        assert!(method_b(0.9, 1e-200, 3).is_err());
        assert!(method_b(0.9, 0.0, 3).is_err());
    }

    #[test]
    fn general_and_unit_prefactor_bounds() {
        assert_abs_diff_eq!(bound_qn_general(0.5, 0.1, 2), 0.1, epsilon = 1e-15);
        let p = [0.5, 0.3, 0.2];
        assert_abs_diff_eq!(bound_qn(0.5, &p, 3).q_n, 0.125 + 0.027 + 0.008, epsilon = 1e-15);
        // (1/0.51 − 1) · 0.026
        assert_abs_diff_eq!(suppression_factor(0.51, 0.026), 0.02498, epsilon = 1e-5);
    }

    #[test]
    fn planning_formulas() {
        assert_eq!(copies_required(1e-6, 0.51, 0.026).unwrap(), 5);
        assert_eq!(copies_required(10.0, 0.9, 0.1).unwrap(), 2);
        assert!(copies_required(1e-3, 0.3, 0.9).is_err());
        assert_abs_diff_eq!(overhead_exponent(1e-6, 0.5).unwrap(), 19.93, epsilon = 0.01);
        assert_abs_diff_eq!(overhead_exponent(0.51, 0.026).unwrap(), 0.18, epsilon = 0.01);
        assert_eq!(overhead_exponent(1.0, 0.3).unwrap(), 0.0);
        assert_eq!(attenuation_qubit_limit(1e-3, 0.1), Some(2301));
        assert_eq!(attenuation_qubit_limit(1e-2, 0.1), Some(229));
        assert_eq!(attenuation_qubit_limit(1e-3, 1.0), None);
    }

    #[test]
    fn shot_formulas() {
        let b = shots_required(Method::B, 0.01, 0.8, 2, 0.75, 0.75).unwrap();
        assert_eq!(b.total(), 18311);
        let std = shots_required(Method::B, 0.01, 1.0, 2, 0.75, 0.75).unwrap();
        assert_eq!(std.total(), 7500);
        let a = shots_required(Method::A, 0.01, 0.8, 2, 0.75, 0.8).unwrap();
        match a {
            ShotCount::A { prob0_shots, prob0_prime_shots, total } => {
                assert_eq!(prob0_shots, 36622);
                assert_eq!(prob0_prime_shots, (8.0 * 0.8 * 0.2 * 0.25 / (1e-4 * 0.8f64.powi(8))).ceil() as u64);
                assert_eq!(total, prob0_shots + prob0_prime_shots);
            }
            _ => panic!("expected method A counts"),
        }
    }

    #[test]
    fn sampling_is_seeded() {
        let a = sample_prob(0.5, 4, 9).unwrap();
        assert_eq!(a, sample_prob(0.5, 4, 9).unwrap());
        assert!([0.0, 0.25, 0.5, 0.75, 1.0].contains(&a));
        assert_eq!(sample_prob(1.0, 100, 3).unwrap(), 1.0);
        let big = sample_prob(0.3, 10_000_000, 1).unwrap();
        assert!((big - 0.3).abs() < 3.0 * (0.3f64 * 0.7 / 1e7).sqrt());
    }

    #[test]
    fn effective_bound_flags() {
        assert_eq!(bound_qn_effective_generic(0.4, 3), EffectiveBound::Void);
        match bound_qn_effective(0.8, &[1.0], 3) {
            EffectiveBound::Commuting(q) => assert_abs_diff_eq!(q, bound_qn(0.8, &[1.0], 3).q_n, epsilon = 1e-15),
            other => panic!("{other:?}"),
        }
    }
}
