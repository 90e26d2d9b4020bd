//! Spin-ring Hamiltonian, the variational Hamiltonian ansatz, a
//! finite-difference optimizer and ESD-mitigated energy estimation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{run_circuit, run_pure, Circuit};
use crate::derangement::DerangementSpec;
use crate::error::{EsdError, Result};
use crate::esd::{prob0_batch, prob0_fast};
use crate::estimator::{method_a, method_b, Method};
use crate::gates::{Gate, GateKind};
use crate::linalg::{hermitian_eig, product_trace, vdot, ComplexMatrix};
use crate::C64;
use crate::noise::NoiseModel;
use crate::pauli::{ObservableSum, Pauli, PauliString};
use crate::random::rng_from_seed;
use crate::state::DensityMatrix;
use crate::zne::{zne_pipeline, FitKind};

/// On-site strengths of the reference six-site ring.
pub const SIX_SITE_OMEGA: [f64; 6] = [-0.70983, -0.0517, 0.9065, -0.9265, 0.0950, -0.49597];
pub const RING_COUPLING: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinRingSpec {
    pub n: usize,
    pub j: f64,
    pub omega: Vec<f64>,
}

impl SpinRingSpec {
    pub fn new(n: usize, j: f64, omega: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(EsdError::InvalidArgument(format!("spin ring needs N ≥ 2, got {n}")));
        }
        if omega.len() != n {
            return Err(EsdError::DimensionMismatch(format!("{} on-site strengths for N = {n}", omega.len())));
        }
        if !j.is_finite() || omega.iter().any(|w| !w.is_finite()) {
            return Err(EsdError::InvalidArgument("non-finite coupling or on-site strength".into()));
        }
        Ok(Self { n, j, omega })
    }

    /// ω drawn uniformly from [−1, 1].
    pub fn random(n: usize, j: f64, seed: u64) -> Result<Self> {
        let mut rng = rng_from_seed(seed);
        let omega = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        Self::new(n, j, omega)
    }

    pub fn six_site() -> Self {
        Self::new(6, RING_COUPLING, SIX_SITE_OMEGA.to_vec()).expect("valid constants")
    }

    /// Ring edges (k, k+1 mod N); a single edge for N = 2.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        if self.n == 2 {
            vec![(0, 1)]
        } else {
            (0..self.n).map(|k| (k, (k + 1) % self.n)).collect()
        }
    }

    /// Basis index of the ground state of Σ ω_k Z_k: qubit k is |1> iff
    /// ω_k > 0.
    pub fn initial_index(&self) -> usize {
        self.omega
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .fold(0, |acc, (k, _)| acc | 1 << (self.n - 1 - k))
    }
}

/// Σ ω_k Z_k + J Σ_edges (XX + YY + ZZ).
pub fn build_spin_ring(spec: &SpinRingSpec) -> ObservableSum {
    let mut terms = Vec::with_capacity(spec.n + 3 * spec.edges().len());
    for (k, &w) in spec.omega.iter().enumerate() {
        terms.push((w, PauliString::single(spec.n, k, Pauli::Z)));
    }
    for (a, b) in spec.edges() {
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            let mut letters = vec![Pauli::I; spec.n];
            letters[a] = p;
            letters[b] = p;
            terms.push((spec.j, PauliString::new(letters)));
        }
    }
    ObservableSum::new(spec.n, terms).expect("terms sized to the ring")
}

/// Lowest eigenvalue of the dense Hamiltonian and its eigenvector.
pub fn exact_ground_energy(h: &ObservableSum) -> Result<(f64, Vec<C64>)> {
    let spec = hermitian_eig(&h.matrix())?;
    let k = spec.dim() - 1;
    Ok((spec.eigenvalues[k], spec.vector(k)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VhaParams {
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl VhaParams {
    pub fn new(beta: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        if beta.len() != gamma.len() {
            return Err(EsdError::DimensionMismatch(format!("{} β vs {} γ", beta.len(), gamma.len())));
        }
        Ok(Self { beta, gamma })
    }

    pub fn zeros(layers: usize) -> Self {
        Self { beta: vec![0.0; layers], gamma: vec![0.0; layers] }
    }

    /// Trotterised adiabatic path of total time `time`: β_k = dt and
    /// γ_k = dt·(k + ½)/l.
    pub fn adiabatic(layers: usize, time: f64) -> Self {
        let dt = time / layers.max(1) as f64;
        Self {
            beta: vec![dt; layers],
            gamma: (0..layers).map(|k| dt * (k as f64 + 0.5) / layers as f64).collect(),
        }
    }

    pub fn layers(&self) -> usize {
        self.beta.len()
    }

    /// (γ₁, β₁, γ₂, β₂, …).
    pub fn to_vec(&self) -> Vec<f64> {
        self.gamma.iter().zip(&self.beta).flat_map(|(&g, &b)| [g, b]).collect()
    }

    pub fn from_vec(v: &[f64]) -> Result<Self> {
        if v.len() % 2 != 0 {
            return Err(EsdError::InvalidArgument("odd parameter vector".into()));
        }
        Ok(Self { gamma: v.iter().step_by(2).copied().collect(), beta: v.iter().skip(1).step_by(2).copied().collect() })
    }
}

/// exp(−iθ P⊗P) on (a, b) for P ∈ {X, Y, Z}, written with the native XX
/// gate and Ry/Rz basis changes.
fn native_pair(c: &mut Circuit, p: Pauli, a: usize, b: usize, theta: f64) -> Result<()> {
    use std::f64::consts::FRAC_PI_2;
    let (before, after): (fn(usize, f64) -> Gate, f64) = match p {
        Pauli::X => {
            return c.push(Gate::two_qubit(GateKind::XX, a, b, theta)?);
        }
        // Rz(π/2) X Rz(−π/2) = Y
        Pauli::Y => (Gate::rz, FRAC_PI_2),
        // Ry(−π/2) X Ry(π/2) = Z
        Pauli::Z => (Gate::ry, -FRAC_PI_2),
        Pauli::I => return Ok(()),
    };
    c.push(before(a, -after))?;
    c.push(before(b, -after))?;
    c.push(Gate::two_qubit(GateKind::XX, a, b, theta)?)?;
    c.push(before(a, after))?;
    c.push(before(b, after))
}

/// Layers B(β_k)A(γ_k) on top of the initial basis state (which the circuit
/// does not prepare; see [`SpinRingSpec::initial_index`]). A(γ) runs over
/// the edges in order with XX, YY, ZZ terms each as one native XX gate;
/// B(β) is Rz(2βω_k) on every qubit. 3·edges·l entangling gates.
pub fn build_vha(spec: &SpinRingSpec, params: &VhaParams) -> Result<Circuit> {
    let mut c = Circuit::new(spec.n);
    for (&beta, &gamma) in params.beta.iter().zip(&params.gamma) {
        for (a, b) in spec.edges() {
            for p in [Pauli::X, Pauli::Y, Pauli::Z] {
                native_pair(&mut c, p, a, b, gamma * spec.j)?;
            }
        }
        for (k, &w) in spec.omega.iter().enumerate() {
            c.push(Gate::rz(k, 2.0 * beta * w))?;
        }
    }
    Ok(c)
}

pub fn vha_initial_state(spec: &SpinRingSpec) -> DensityMatrix {
    DensityMatrix::basis(spec.n, spec.initial_index())
}

/// Noiseless VHA state vector.
pub fn vha_state_vector(spec: &SpinRingSpec, params: &VhaParams) -> Result<Vec<C64>> {
    let mut psi = vec![C64::new(0.0, 0.0); 1 << spec.n];
    psi[spec.initial_index()] = C64::new(1.0, 0.0);
    run_pure(&psi, &build_vha(spec, params)?)
}

/// Noisy VHA density matrix.
pub fn vha_state(spec: &SpinRingSpec, params: &VhaParams, nm: Option<&NoiseModel>, eps_scale: f64) -> Result<DensityMatrix> {
    run_circuit(&vha_initial_state(spec), &build_vha(spec, params)?, nm, eps_scale)
}

fn vector_energy(hm: &ComplexMatrix, psi: &[C64]) -> Result<f64> {
    Ok(vdot(psi, &hm.mul_vec(psi)?).re)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// First trial step of the line search.
    pub initial_step: f64,
    /// Central-difference half width.
    pub fd_step: f64,
    /// Stop when the gradient norm drops below this.
    pub grad_tol: f64,
    /// Total time of the adiabatic starting point.
    pub adiabatic_time: f64,
    /// Uniform jitter added to the starting angles.
    pub jitter: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { max_iters: 2000, initial_step: 0.1, fd_step: 1e-6, grad_tol: 1e-7, adiabatic_time: 10.0, jitter: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VhaOptimization {
    pub params: VhaParams,
    /// Energy after each accepted step, starting with the initial energy.
    pub trajectory: Vec<f64>,
    pub converged: bool,
}

/// Gradient descent with central finite-difference gradients and a
/// backtracking (Armijo) line search on the noiseless energy.
pub fn optimize_vha(spec: &SpinRingSpec, layers: usize, cfg: &OptimizerConfig, seed: u64) -> Result<VhaOptimization> {
    let hm = build_spin_ring(spec).matrix();
    let energy = |x: &[f64]| -> Result<f64> {
        vector_energy(&hm, &vha_state_vector(spec, &VhaParams::from_vec(x)?)?)
    };
    let mut rng = rng_from_seed(seed);
    let mut x = VhaParams::adiabatic(layers, cfg.adiabatic_time).to_vec();
    for v in x.iter_mut() {
        *v += cfg.jitter * rng.random_range(-1.0..=1.0);
    }
    let mut e = energy(&x)?;
    let mut trajectory = vec![e];
    let mut step = cfg.initial_step;
    let mut converged = false;
    for _ in 0..cfg.max_iters {
        let mut grad = vec![0.0; x.len()];
        for i in 0..x.len() {
            let saved = x[i];
            x[i] = saved + cfg.fd_step;
            let up = energy(&x)?;
            x[i] = saved - cfg.fd_step;
            let down = energy(&x)?;
            x[i] = saved;
            grad[i] = (up - down) / (2.0 * cfg.fd_step);
        }
        let g2: f64 = grad.iter().map(|g| g * g).sum();
        if g2.sqrt() < cfg.grad_tol {
            converged = true;
            break;
        }
        let mut accepted = false;
        for _ in 0..50 {
            let trial: Vec<f64> = x.iter().zip(&grad).map(|(v, g)| v - step * g).collect();
            let et = energy(&trial)?;
            if et <= e - 1e-4 * step * g2 {
                x = trial;
                e = et;
                trajectory.push(e);
                accepted = true;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            converged = true;
            break;
        }
    }
    Ok(VhaOptimization { params: VhaParams::from_vec(&x)?, trajectory, converged })
}

/// tr[𝓗ρⁿ] / tr[ρⁿ].
pub fn spectral_energy(rho: &DensityMatrix, h: &ObservableSum, n: u32) -> Result<f64> {
    let hm = h.matrix();
    let mut factors: Vec<&ComplexMatrix> = vec![&hm];
    factors.extend(std::iter::repeat_n(rho.matrix(), n as usize));
    Ok(product_trace(&factors)?.re / rho.power_trace(n))
}

/// <ψ₁|𝓗|ψ₁> for the dominant eigenvector ψ₁ of ρ.
pub fn dominant_energy(rho: &DensityMatrix, h: &ObservableSum) -> Result<f64> {
    let spec = hermitian_eig(rho.matrix())?;
    vector_energy(&h.matrix(), &spec.vector(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EsdBackend {
    /// Closed-form trace of the derangement measurement (noiseless).
    Trace,
    /// Full controlled-derangement circuit, optionally noisy.
    Circuit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerangementZne {
    /// Noise amplification factors applied to the derangement circuit.
    pub factors: Vec<f64>,
    pub kind: FitKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsdEnergyOptions {
    pub n: usize,
    pub method: Method,
    /// Dominant eigenvalue, needed for method B.
    pub lambda: Option<f64>,
    pub backend: EsdBackend,
    /// Noise on the derangement circuit (circuit backend only).
    pub derangement_noise: Option<NoiseModel>,
    pub zne: Option<DerangementZne>,
    /// Native circuit substituted for every CSWAP of the derangement.
    #[serde(skip)]
    pub cswap_lowering: Option<Circuit>,
}

impl EsdEnergyOptions {
    pub fn noiseless(n: usize, backend: EsdBackend) -> Self {
        Self { n, method: Method::A, lambda: None, backend, derangement_noise: None, zne: None, cswap_lowering: None }
    }
}

fn esd_energy_at(copies: &[DensityMatrix], h: &ObservableSum, opts: &EsdEnergyOptions, scale: f64) -> Result<f64> {
    let n = copies.len();
    let identity = PauliString::identity(h.qubit_count());
    let mut requests: Vec<(PauliString, bool)> =
        h.terms().iter().filter(|(_, s)| !s.is_identity()).map(|(_, s)| (s.clone(), true)).collect();
    if opts.method == Method::A {
        requests.push((identity, false));
    }
    let probs = match opts.backend {
        EsdBackend::Trace => requests.iter().map(|(s, inc)| prob0_fast(copies, s, *inc)).collect::<Result<Vec<_>>>()?,
        EsdBackend::Circuit => prob0_batch(
            copies,
            &DerangementSpec::cyclic(n, 0)?,
            &requests,
            None,
            opts.derangement_noise.as_ref(),
            scale,
            opts.cswap_lowering.as_ref(),
        )?,
    };
    let normaliser = if opts.method == Method::A { probs.last().copied() } else { None };
    let mut total = 0.0;
    let mut next = probs.iter();
    for (c, sigma) in h.terms() {
        if sigma.is_identity() {
            total += c;
            continue;
        }
        let p0 = *next.next().expect("one probability per term");
        let v = match (opts.method, normaliser) {
            (Method::A, Some(p)) => method_a(p0, p)?,
            _ => {
                let lambda = opts
                    .lambda
                    .ok_or_else(|| EsdError::InvalidArgument("method B needs the dominant eigenvalue".into()))?;
                method_b(p0, lambda, n as u32)?
            }
        };
        total += c * v;
    }
    Ok(total)
}

/// ESD estimate of ⟨𝓗⟩ from n copies, term by term. Identity terms add
/// their coefficient. With `zne` set, the derangement noise is amplified by
/// each factor and the energies are extrapolated to zero noise.
pub fn energy_with_esd(copies: &[DensityMatrix], h: &ObservableSum, opts: &EsdEnergyOptions) -> Result<f64> {
    if copies.len() != opts.n {
        return Err(EsdError::DimensionMismatch(format!("{} copies for n = {}", copies.len(), opts.n)));
    }
    if opts.n == 1 {
        return crate::state::expectation(&copies[0], h);
    }
    match &opts.zne {
        Some(z) if opts.backend == EsdBackend::Circuit && opts.derangement_noise.is_some() => {
            let (fit, _) = zne_pipeline(|f| esd_energy_at(copies, h, opts, f), &z.factors, z.kind)?;
            Ok(fit.zero_noise_value)
        }
        _ => esd_energy_at(copies, h, opts, 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn term_counts() {
        assert_eq!(build_spin_ring(&SpinRingSpec::six_site()).len(), 24);
        let two = SpinRingSpec::new(2, 0.3, vec![0.1, -0.2]).unwrap();
        assert_eq!(build_spin_ring(&two).len(), 5);
        assert!(SpinRingSpec::new(1, 0.1, vec![0.0]).is_err());
        assert!(SpinRingSpec::new(3, 0.1, vec![0.0]).is_err());
    }

    #[test]
    fn ground_energies() {
        let one_z = ObservableSum::new(1, vec![(-0.6, PauliString::single(1, 0, Pauli::Z))]).unwrap();
        assert_abs_diff_eq!(exact_ground_energy(&one_z).unwrap().0, -0.6, epsilon = 1e-14);
        // two-site Heisenberg without fields: singlet at −3J
        let j = 0.25;
        let h = build_spin_ring(&SpinRingSpec::new(2, j, vec![0.0, 0.0]).unwrap());
        assert_abs_diff_eq!(exact_ground_energy(&h).unwrap().0, -3.0 * j, epsilon = 1e-12);
    }

    #[test]
    fn ground_energy_matches_power_iteration() {
        let spec = SpinRingSpec::random(4, 0.1, 17).unwrap();
        let hm = build_spin_ring(&spec).matrix();
        let (e0, _) = exact_ground_energy(&build_spin_ring(&spec)).unwrap();
        // power iteration on (s·I − H) converges to the lowest eigenvector
        let s = 10.0;
        let shifted = ComplexMatrix::identity(16).scale_real(s).sub(&hm).unwrap();
        let mut v: Vec<C64> = (0..16).map(|k| C64::new(1.0 + k as f64 * 0.01, 0.0)).collect();
        for _ in 0..20000 {
            v = shifted.mul_vec(&v).unwrap();
            let norm = vdot(&v, &v).re.sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
        }
        assert_abs_diff_eq!(vector_energy(&hm, &v).unwrap(), e0, epsilon = 1e-8);
    }

    #[test]
    fn native_pairs_match_pauli_exponentials() {
        for (p, kind) in [(Pauli::Y, GateKind::YY), (Pauli::Z, GateKind::ZZ)] {
            let mut c = Circuit::new(2);
            native_pair(&mut c, p, 0, 1, 0.37).unwrap();
            let direct = Gate::two_qubit(kind, 0, 1, 0.37).unwrap().matrix();
            assert!(c.unitary().unwrap().max_abs_diff(&direct) < 1e-12);
        }
    }

    #[test]
    fn vha_counts_and_identity() {
        let spec = SpinRingSpec::six_site();
        assert_eq!(build_vha(&spec, &VhaParams::zeros(1)).unwrap().entangling_count(), 18);
        assert_eq!(build_vha(&spec, &VhaParams::zeros(20)).unwrap().entangling_count(), 360);
        let psi = vha_state_vector(&spec, &VhaParams::zeros(3)).unwrap();
        assert_abs_diff_eq!(psi[spec.initial_index()].norm(), 1.0, epsilon = 1e-12);
        // ω = (−, −, +, −, +, −): qubits 2 and 4 start in |1>
        assert_eq!(spec.initial_index(), 0b001010);
    }

    #[test]
    fn optimizer_contract() {
        let spec = SpinRingSpec::random(3, 0.1, 2).unwrap();
        let zero = OptimizerConfig { max_iters: 0, ..Default::default() };
        let r = optimize_vha(&spec, 2, &zero, 1).unwrap();
        assert_eq!(r.trajectory.len(), 1);
        let r = optimize_vha(&spec, 2, &OptimizerConfig { max_iters: 50, ..Default::default() }, 1).unwrap();
        assert!(r.trajectory.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn esd_energy_identities() {
        let spec = SpinRingSpec::random(3, 0.1, 5).unwrap();
        let h = build_spin_ring(&spec);
        let params = VhaParams::adiabatic(2, 4.0);
        let pure = vha_state(&spec, &params, None, 1.0).unwrap();
        let exact = crate::state::expectation(&pure, &h).unwrap();
        let opts = EsdEnergyOptions::noiseless(2, EsdBackend::Trace);
        assert_abs_diff_eq!(energy_with_esd(&[pure.clone(), pure], &h, &opts).unwrap(), exact, epsilon = 1e-10);

        let nm = NoiseModel::dephasing_damping(0.01, 0.1, 0.07, 5.0);
        let rho = vha_state(&spec, &params, Some(&nm), 1.0).unwrap();
        let raw = crate::state::expectation(&rho, &h).unwrap();
        let one = energy_with_esd(std::slice::from_ref(&rho), &h, &EsdEnergyOptions::noiseless(1, EsdBackend::Trace)).unwrap();
        assert_abs_diff_eq!(one, raw, epsilon = 1e-12);
        let copies = vec![rho.clone(), rho.clone()];
        let trace = energy_with_esd(&copies, &h, &opts).unwrap();
        let circuit = energy_with_esd(&copies, &h, &EsdEnergyOptions::noiseless(2, EsdBackend::Circuit)).unwrap();
        let spectral = spectral_energy(&rho, &h, 2).unwrap();
        assert_abs_diff_eq!(trace, spectral, epsilon = 1e-9);
        assert_abs_diff_eq!(circuit, spectral, epsilon = 1e-9);
    }
}
