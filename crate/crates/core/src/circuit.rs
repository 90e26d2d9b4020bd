//! Gate sequences, their text form and noisy density-matrix execution.

use std::f64::consts::TAU;

use rand::Rng;

use crate::channels::KrausChannel;
use crate::error::{EsdError, Result};
use crate::gates::{embed, Gate, GateKind};
use crate::kernel::{self, TargetLayout};
use crate::linalg::ComplexMatrix;
use crate::noise::NoiseModel;
use crate::random::rng_from_seed;
use crate::state::DensityMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(qubits: usize) -> Self {
        Self { qubits, gates: Vec::new() }
    }

    pub fn from_gates(qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Self::new(qubits);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        if let Some(&q) = gate.qubits.iter().find(|&&q| q >= self.qubits) {
            return Err(EsdError::QubitOutOfRange { index: q, qubits: self.qubits });
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, other: &Circuit) -> Result<()> {
        for g in &other.gates {
            self.push(g.clone())?;
        }
        Ok(())
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gates_mut(&mut self) -> &mut [Gate] {
        &mut self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Gates as executed: multi-target controlled Paulis split per target.
    pub fn lowered_gates(&self) -> Vec<Gate> {
        self.gates.iter().flat_map(Gate::lowered).collect()
    }

    pub fn count_kind(&self, pred: impl Fn(&GateKind) -> bool) -> usize {
        self.gates.iter().filter(|g| pred(&g.kind)).count()
    }

    pub fn entangling_count(&self) -> usize {
        self.count_kind(GateKind::is_entangling)
    }

    /// Number of noise-channel applications ν under `nm`.
    pub fn noisy_gate_count(&self, nm: &NoiseModel, eps_scale: f64) -> usize {
        self.lowered_gates().iter().map(|g| nm.event_probs(g, eps_scale).len()).sum()
    }

    /// Expected number of gate errors ξ: Σ over gates of the probability
    /// that at least one error event fires.
    pub fn expected_errors(&self, nm: &NoiseModel, eps_scale: f64) -> f64 {
        self.lowered_gates().iter().map(|g| nm.gate_error_probability(g, eps_scale)).sum()
    }

    /// Dense unitary of the noiseless circuit (small circuits only).
    pub fn unitary(&self) -> Result<ComplexMatrix> {
        let dim = 1usize << self.qubits;
        let mut u = ComplexMatrix::identity(dim);
        for g in &self.gates {
            u = g.full_matrix(self.qubits)?.matmul(&u)?;
        }
        Ok(u)
    }

    /// One gate per line, preceded by `QUBITS <n>`.
    pub fn to_text(&self) -> Result<String> {
        let mut s = format!("QUBITS {}\n", self.qubits);
        for g in &self.gates {
            s.push_str(&g.to_text()?);
            s.push('\n');
        }
        Ok(s)
    }

    /// Parses the text form. The `QUBITS` header is optional when
    /// `default_qubits` is given; blank lines and `#` comments are skipped.
    pub fn parse(text: &str, default_qubits: Option<usize>) -> Result<Self> {
        let mut qubits = default_qubits;
        let mut gates = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            if it.next().is_some_and(|t| t.eq_ignore_ascii_case("qubits")) {
                let n = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| EsdError::Parse(format!("line {}: bad QUBITS header", lineno + 1)))?;
                qubits = Some(n);
                continue;
            }
            gates.push(Gate::parse(line).map_err(|e| EsdError::Parse(format!("line {}: {e}", lineno + 1)))?);
        }
        let qubits = qubits.ok_or_else(|| EsdError::Parse("qubit count not given".into()))?;
        Self::from_gates(qubits, gates)
    }
}

/// A gate ready for execution: matrix, layout and trailing channels.
struct Step {
    matrix: ComplexMatrix,
    qubits: Vec<usize>,
    layout: TargetLayout,
    channels: Vec<(KrausChannel, Vec<usize>)>,
    /// Gate and noise as one superoperator on `qubits`. Set for noisy gates
    /// on at most two qubits whose channels stay on the gate's qubits, and
    /// for the runs of such gates merged into them.
    fused: Option<ComplexMatrix>,
    /// Index of the last circuit gate covered by this step.
    last: usize,
}

fn fuse(matrix: &ComplexMatrix, qubits: &[usize], channels: &[(KrausChannel, Vec<usize>)]) -> Option<ComplexMatrix> {
    if channels.is_empty() || qubits.len() > 2 {
        return None;
    }
    let mut s = kernel::superoperator(std::slice::from_ref(matrix));
    for (ch, targets) in channels {
        let local: Vec<usize> = targets.iter().map(|t| qubits.iter().position(|q| q == t)).collect::<Option<_>>()?;
        let ops: Vec<ComplexMatrix> = ch.operators().iter().map(|k| embed(k, &local, qubits.len())).collect();
        s = kernel::superoperator(&ops).matmul(&s).ok()?;
    }
    Some(s)
}

/// Superoperator `s` on `qubits`, extended by the identity to `union`.
fn lift(s: &ComplexMatrix, qubits: &[usize], union: &[usize]) -> Result<ComplexMatrix> {
    let local: Vec<usize> = qubits.iter().map(|q| union.iter().position(|u| u == q).expect("subset")).collect();
    let layout = TargetLayout::new(&local, union.len())?;
    let g = 1usize << union.len();
    let mut out = ComplexMatrix::zeros(g * g, g * g);
    for col in 0..g * g {
        let mut e = ComplexMatrix::zeros(g, g);
        e[(col / g, col % g)] = crate::linalg::ONE;
        kernel::apply_superoperator(&mut e, s, &layout);
        for (row, z) in e.data().iter().enumerate() {
            out[(row, col)] = *z;
        }
    }
    Ok(out)
}

fn compile(c: &Circuit, nm: Option<&NoiseModel>, eps_scale: f64) -> Result<Vec<Step>> {
    if let Some(nm) = nm {
        nm.validate(eps_scale)?;
    }
    let mut steps: Vec<Step> = Vec::new();
    for (i, g) in c.lowered_gates().into_iter().enumerate() {
        let channels = match nm {
            Some(nm) => nm.channels_for(&g, eps_scale)?,
            None => Vec::new(),
        };
        let matrix = g.matrix();
        let fused = fuse(&matrix, &g.qubits, &channels);
        // Merge into the previous superoperator step while the pair of
        // steps touches at most two qubits.
        if let Some(prev) = steps.last_mut().filter(|p| p.fused.is_some()) {
            let mut union = prev.qubits.clone();
            union.extend(g.qubits.iter().filter(|q| !prev.qubits.contains(q)));
            let mergeable = union.len() <= 2 && (fused.is_some() || channels.is_empty());
            if mergeable {
                let own = match &fused {
                    Some(f) => f.clone(),
                    None => kernel::superoperator(std::slice::from_ref(&matrix)),
                };
                let a = lift(prev.fused.as_ref().expect("checked"), &prev.qubits, &union)?;
                let b = lift(&own, &g.qubits, &union)?;
                prev.fused = Some(b.matmul(&a)?);
                prev.layout = TargetLayout::new(&union, c.qubits)?;
                prev.qubits = union;
                prev.last = i;
                continue;
            }
        }
        steps.push(Step { layout: TargetLayout::new(&g.qubits, c.qubits)?, qubits: g.qubits.clone(), matrix, channels, fused, last: i });
    }
    Ok(steps)
}

/// Runs `c` on a raw matrix, calling `observe(gate_index, &matrix)` after
/// each gate and its noise. Runs of noisy gates on the same one or two
/// qubits are applied as one superoperator and observed once, under the
/// index of their last gate.
pub fn run_matrix_with(
    m: &mut ComplexMatrix,
    c: &Circuit,
    nm: Option<&NoiseModel>,
    eps_scale: f64,
    mut observe: impl FnMut(usize, &ComplexMatrix),
) -> Result<()> {
    let dim = 1usize << c.qubits;
    if m.rows() != dim || !m.is_square() {
        return Err(EsdError::DimensionMismatch(format!(
            "circuit on {} qubits, state of dimension {}",
            c.qubits,
            m.rows()
        )));
    }
    for step in &compile(c, nm, eps_scale)? {
        match &step.fused {
            Some(s) => kernel::apply_superoperator(m, s, &step.layout),
            None => {
                kernel::conjugate(m, &step.matrix, &step.layout);
                for (ch, targets) in &step.channels {
                    ch.apply_in_place(m, targets, c.qubits)?;
                }
            }
        }
        observe(step.last, m);
    }
    Ok(())
}

/// Applies the gates of `c` in order, each followed by its noise channels
/// (amplifiable probabilities multiplied by `eps_scale`).
pub fn run_circuit(rho0: &DensityMatrix, c: &Circuit, nm: Option<&NoiseModel>, eps_scale: f64) -> Result<DensityMatrix> {
    run_circuit_with(rho0, c, nm, eps_scale, |_, _| {})
}

pub fn run_circuit_with(
    rho0: &DensityMatrix,
    c: &Circuit,
    nm: Option<&NoiseModel>,
    eps_scale: f64,
    observe: impl FnMut(usize, &ComplexMatrix),
) -> Result<DensityMatrix> {
    if rho0.qubit_count() != c.qubits {
        return Err(EsdError::DimensionMismatch(format!(
            "circuit on {} qubits, state on {}",
            c.qubits,
            rho0.qubit_count()
        )));
    }
    let mut m = rho0.matrix().clone();
    run_matrix_with(&mut m, c, nm, eps_scale, observe)?;
    Ok(DensityMatrix::from_evolved(c.qubits, m))
}

/// Noiseless pure-state evolution |ψ> → U|ψ>.
pub fn run_pure(psi: &[num_complex::Complex64], c: &Circuit) -> Result<Vec<num_complex::Complex64>> {
    let dim = 1usize << c.qubits;
    if psi.len() != dim {
        return Err(EsdError::DimensionMismatch(format!("vector of length {} for {} qubits", psi.len(), c.qubits)));
    }
    // A column vector is a dim x 1 matrix; only the left action is needed.
    let mut v = psi.to_vec();
    for g in c.lowered_gates() {
        let layout = TargetLayout::new(&g.qubits, c.qubits)?;
        let u = g.matrix();
        let offs = layout.offsets();
        let mut buf = vec![num_complex::Complex64::new(0.0, 0.0); offs.len()];
        for b in layout.bases().collect::<Vec<_>>() {
            for (j, x) in buf.iter_mut().enumerate() {
                *x = v[b + offs[j]];
            }
            for (i, &o) in offs.iter().enumerate() {
                v[b + o] = (0..offs.len()).map(|j| u[(i, j)] * buf[j]).sum();
            }
        }
    }
    Ok(v)
}

/// Number of angles of the alternating ansatz.
pub fn alternating_param_count(n: usize, blocks: usize) -> usize {
    n + 3 * n * blocks
}

/// Initial Ry layer, then per block an Ry layer, an Rz layer and a ring of
/// XX entanglers on edges (k, k+1 mod N). All gates carry an angle; the
/// gate count is N + 3N·blocks.
pub fn build_alternating_ansatz(n: usize, blocks: usize, params: &[f64]) -> Result<Circuit> {
    if n < 2 {
        return Err(EsdError::InvalidArgument("ansatz needs at least 2 qubits".into()));
    }
    let expected = alternating_param_count(n, blocks);
    if params.len() != expected {
        return Err(EsdError::ParameterCount { expected, got: params.len() });
    }
    let mut it = params.iter().copied();
    let mut next = || it.next().expect("length checked");
    let mut c = Circuit::new(n);
    for q in 0..n {
        c.push(Gate::ry(q, next()))?;
    }
    for _ in 0..blocks {
        for q in 0..n {
            c.push(Gate::ry(q, next()))?;
        }
        for q in 0..n {
            c.push(Gate::rz(q, next()))?;
        }
        for q in 0..n {
            c.push(Gate::two_qubit(GateKind::XX, q, (q + 1) % n, next())?)?;
        }
    }
    Ok(c)
}

/// Alternating ansatz with angles drawn uniformly from [0, 2π).
pub fn random_alternating_ansatz(n: usize, blocks: usize, seed: u64) -> Result<Circuit> {
    let mut rng = rng_from_seed(seed);
    let params: Vec<f64> = (0..alternating_param_count(n, blocks)).map(|_| rng.random::<f64>() * TAU).collect();
    build_alternating_ansatz(n, blocks, &params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{haar_state, random_density_matrix};

    #[test]
    fn fused_steps_match_gate_then_channels() {
        let mut rng = rng_from_seed(4);
        let nm = NoiseModel::dephasing_damping(2e-2, 0.1, 0.07, 5.0);
        // merges: (ry, rz on 2), (xx, rx on 1, ry on 3), then crx breaks the run
        let gates = [
            Gate::ry(2, 0.4),
            Gate::rz(2, -0.3),
            Gate::two_qubit(GateKind::XX, 3, 1, 0.9).unwrap(),
            Gate::rx(1, 0.5),
            Gate::ry(3, 1.7),
            Gate::new(GateKind::CRx, vec![2, 0], vec![1.3]).unwrap(),
            Gate::x(0),
            Gate::new(GateKind::CSwap, vec![0, 1, 3], vec![]).unwrap(),
        ];
        let rho = random_density_matrix(&mut rng, 4);
        let mut c = Circuit::new(4);
        for g in &gates {
            c.push(g.clone()).unwrap();
        }
        let fused = run_circuit(&rho, &c, Some(&nm), 1.0).unwrap();
        let mut m = rho.matrix().clone();
        for g in &gates {
            kernel::conjugate(&mut m, &g.matrix(), &TargetLayout::new(&g.qubits, 4).unwrap());
            for (ch, t) in nm.channels_for(g, 1.0).unwrap() {
                ch.apply_kraus_sum(&mut m, &t, 4).unwrap();
            }
        }
        assert!(fused.matrix().max_abs_diff(&m) < 1e-13);
    }

    #[test]
    fn x_flips_basis_state() {
        let mut c = Circuit::new(1);
        c.push(Gate::x(0)).unwrap();
        let out = run_circuit(&DensityMatrix::basis(1, 0), &c, None, 1.0).unwrap();
        assert!(out.matrix().max_abs_diff(DensityMatrix::basis(1, 1).matrix()) < 1e-15);
    }

    #[test]
    fn ansatz_gate_counts() {
        assert_eq!(random_alternating_ansatz(12, 10, 0).unwrap().len(), 372);
        assert_eq!(random_alternating_ansatz(8, 2, 0).unwrap().len(), 56);
        let c = random_alternating_ansatz(4, 0, 0).unwrap();
        assert_eq!(c.len(), 4);
        assert!(c.gates().iter().all(|g| g.kind == GateKind::Ry));
        assert!(build_alternating_ansatz(4, 1, &[0.0; 3]).is_err());
    }

    #[test]
    fn zero_scale_equals_noiseless() {
        let c = random_alternating_ansatz(3, 2, 4).unwrap();
        let rho = DensityMatrix::basis(3, 0);
        let nm = NoiseModel::depolarizing(0.01, 0.05);
        let a = run_circuit(&rho, &c, Some(&nm), 0.0).unwrap();
        let b = run_circuit(&rho, &c, None, 1.0).unwrap();
        assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-12);
    }

    #[test]
    fn matches_dense_unitary() {
        let c = random_alternating_ansatz(3, 2, 9).unwrap();
        let rho = random_density_matrix(&mut rng_from_seed(1), 3);
        let u = c.unitary().unwrap();
        let expected = u.matmul(rho.matrix()).unwrap().matmul(&u.adjoint()).unwrap();
        let out = run_circuit(&rho, &c, None, 1.0).unwrap();
        assert!(out.matrix().max_abs_diff(&expected) < 1e-12);

        let psi = haar_state(&mut rng_from_seed(2), 8);
        let v = run_pure(&psi, &c).unwrap();
        let w = u.mul_vec(&psi).unwrap();
        assert!(v.iter().zip(&w).all(|(a, b)| (a - b).norm() < 1e-12));
    }

    #[test]
    fn text_roundtrip() {
        let c = random_alternating_ansatz(3, 1, 5).unwrap();
        let text = c.to_text().unwrap();
        assert_eq!(Circuit::parse(&text, None).unwrap(), c);
        assert!(Circuit::parse("RX 0 0.1\n", None).is_err());
        assert!(Circuit::parse("RX 3 0.1\n", Some(2)).is_err());
    }

    #[test]
    fn noise_counts() {
        let c = random_alternating_ansatz(12, 10, 0).unwrap();
        let nm = NoiseModel::depolarizing(0.0005, 0.005);
        assert_eq!(c.noisy_gate_count(&nm, 1.0), 372);
        let xi = c.expected_errors(&nm, 1.0);
        assert!((xi - (132.0 * 0.0005 + 120.0 * 0.005 + 120.0 * 0.0005)).abs() < 1e-12);
    }
}
