//! Gate kinds, their unitary matrices and the one-line text form.
//!
//! Rotation conventions: `Rx/Ry/Rz(θ) = exp(−iθσ/2)`,
//! `XX/YY/ZZ(θ) = exp(−iθ P⊗P)`, `XXX(θ) = exp(−iθ/2 X⊗X⊗X)`,
//! `PSWAP(θ₁, θ₂) = exp(−iθ₁/2 (XX + YY) − iθ₂/2 ZZ)`.
//! Controlled gates list the control first.

use std::fmt;

use num_complex::Complex64 as C64;

use crate::error::{EsdError, Result};
use crate::linalg::{ComplexMatrix, ONE, ZERO};
use crate::pauli::{Pauli, PauliString};

#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    XX,
    YY,
    ZZ,
    PSwap,
    H,
    X,
    Y,
    Z,
    Swap,
    /// Control, then the two swapped qubits.
    CSwap,
    /// Control, then one target per letter of the string.
    CPauli(PauliString),
    /// Like `CPauli` but fires when the control is |0>.
    AntiCPauli(PauliString),
    CRx,
    CRz,
    /// diag(1, …, 1, −1) on three qubits.
    CCP,
    XXX,
    Custom(ComplexMatrix),
}

impl GateKind {
    /// Lowercase name used in the text format and in noise selectors.
    pub fn name(&self) -> &'static str {
        match self {
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::XX => "xx",
            GateKind::YY => "yy",
            GateKind::ZZ => "zz",
            GateKind::PSwap => "pswap",
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::Swap => "swap",
            GateKind::CSwap => "cswap",
            GateKind::CPauli(_) => "cpauli",
            GateKind::AntiCPauli(_) => "acpauli",
            GateKind::CRx => "crx",
            GateKind::CRz => "crz",
            GateKind::CCP => "ccp",
            GateKind::XXX => "xxx",
            GateKind::Custom(_) => "custom",
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            GateKind::Rx
            | GateKind::Ry
            | GateKind::Rz
            | GateKind::XX
            | GateKind::YY
            | GateKind::ZZ
            | GateKind::CRx
            | GateKind::CRz
            | GateKind::XXX => 1,
            GateKind::PSwap => 2,
            _ => 0,
        }
    }

    /// Number of qubits the gate acts on.
    pub fn arity(&self) -> usize {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::H | GateKind::X | GateKind::Y | GateKind::Z => 1,
            GateKind::XX
            | GateKind::YY
            | GateKind::ZZ
            | GateKind::PSwap
            | GateKind::Swap
            | GateKind::CRx
            | GateKind::CRz => 2,
            GateKind::CSwap | GateKind::CCP | GateKind::XXX => 3,
            GateKind::CPauli(p) | GateKind::AntiCPauli(p) => 1 + p.qubit_count(),
            GateKind::Custom(m) => m.rows().trailing_zeros() as usize,
        }
    }

    /// Whether the gate creates entanglement between its qubits.
    pub fn is_entangling(&self) -> bool {
        match self {
            GateKind::CPauli(p) | GateKind::AntiCPauli(p) => !p.is_identity(),
            _ => self.arity() >= 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub params: Vec<f64>,
}

fn rot(theta: f64, p: Pauli) -> ComplexMatrix {
    // exp(-iθ/2 σ) = cos(θ/2) I − i sin(θ/2) σ
    let (s, c) = (theta / 2.0).sin_cos();
    let mut m = p.matrix().scale(C64::new(0.0, -s));
    for k in 0..2 {
        m[(k, k)] += c;
    }
    m
}

/// exp(−iφ P) for an involutory P: cos φ I − i sin φ P.
fn pauli_exp(phi: f64, p: &PauliString) -> ComplexMatrix {
    let (s, c) = phi.sin_cos();
    let mut m = p.matrix().scale(C64::new(0.0, -s));
    for k in 0..m.rows() {
        m[(k, k)] += c;
    }
    m
}

fn controlled(block: &ComplexMatrix, on_one: bool) -> ComplexMatrix {
    let d = block.rows();
    let mut m = ComplexMatrix::identity(2 * d);
    let off = if on_one { d } else { 0 };
    for r in 0..d {
        for c in 0..d {
            m[(off + r, off + c)] = block[(r, c)];
        }
    }
    m
}

fn swap_matrix() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 0.0, 1.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
    ])
}

impl Gate {
    pub fn new(kind: GateKind, qubits: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        if params.len() != kind.param_count() {
            return Err(EsdError::ParameterCount { expected: kind.param_count(), got: params.len() });
        }
        if qubits.len() != kind.arity() {
            return Err(EsdError::InvalidArgument(format!(
                "{} acts on {} qubits, got {}",
                kind.name(),
                kind.arity(),
                qubits.len()
            )));
        }
        for (i, q) in qubits.iter().enumerate() {
            if qubits[..i].contains(q) {
                return Err(EsdError::DuplicateQubit(*q));
            }
        }
        if let GateKind::Custom(m) = &kind {
            if !m.is_square() || !m.rows().is_power_of_two() {
                return Err(EsdError::DimensionMismatch("custom gate must be 2^k x 2^k".into()));
            }
            let dev = m.unitary_deviation();
            if dev > 1e-10 {
                return Err(EsdError::NotUnitary { deviation: dev });
            }
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(EsdError::InvalidArgument("non-finite gate angle".into()));
        }
        Ok(Self { kind, qubits, params })
    }

    pub fn rx(q: usize, theta: f64) -> Self {
        Self { kind: GateKind::Rx, qubits: vec![q], params: vec![theta] }
    }
    pub fn ry(q: usize, theta: f64) -> Self {
        Self { kind: GateKind::Ry, qubits: vec![q], params: vec![theta] }
    }
    pub fn rz(q: usize, theta: f64) -> Self {
        Self { kind: GateKind::Rz, qubits: vec![q], params: vec![theta] }
    }
    pub fn h(q: usize) -> Self {
        Self { kind: GateKind::H, qubits: vec![q], params: vec![] }
    }
    pub fn x(q: usize) -> Self {
        Self { kind: GateKind::X, qubits: vec![q], params: vec![] }
    }
    pub fn cswap(control: usize, a: usize, b: usize) -> Self {
        Self { kind: GateKind::CSwap, qubits: vec![control, a, b], params: vec![] }
    }

    /// Single-qubit Pauli gate; `None` for the identity.
    pub fn pauli(q: usize, p: Pauli) -> Option<Self> {
        let kind = match p {
            Pauli::I => return None,
            Pauli::X => GateKind::X,
            Pauli::Y => GateKind::Y,
            Pauli::Z => GateKind::Z,
        };
        Some(Self { kind, qubits: vec![q], params: vec![] })
    }

    /// Two-qubit Pauli rotation `kind ∈ {XX, YY, ZZ}`.
    pub fn two_qubit(kind: GateKind, a: usize, b: usize, theta: f64) -> Result<Self> {
        Self::new(kind, vec![a, b], vec![theta])
    }

    pub fn controlled_pauli(control: usize, targets: &[usize], string: PauliString, anti: bool) -> Result<Self> {
        let mut qubits = vec![control];
        qubits.extend_from_slice(targets);
        let kind = if anti { GateKind::AntiCPauli(string) } else { GateKind::CPauli(string) };
        Self::new(kind, qubits, vec![])
    }

    pub fn custom(matrix: ComplexMatrix, qubits: Vec<usize>) -> Result<Self> {
        Self::new(GateKind::Custom(matrix), qubits, vec![])
    }

    pub fn arity(&self) -> usize {
        self.qubits.len()
    }

    /// Local unitary in the order of `self.qubits`.
    pub fn matrix(&self) -> ComplexMatrix {
        let t = |k: usize| self.params[k];
        let ps = |s: &str| s.parse::<PauliString>().expect("static string");
        match &self.kind {
            GateKind::Rx => rot(t(0), Pauli::X),
            GateKind::Ry => rot(t(0), Pauli::Y),
            GateKind::Rz => rot(t(0), Pauli::Z),
            GateKind::XX => pauli_exp(t(0), &ps("XX")),
            GateKind::YY => pauli_exp(t(0), &ps("YY")),
            GateKind::ZZ => pauli_exp(t(0), &ps("ZZ")),
            GateKind::XXX => pauli_exp(t(0) / 2.0, &ps("XXX")),
            GateKind::PSwap => {
                let (s1, c1) = t(0).sin_cos();
                let outer = C64::from_polar(1.0, -t(1) / 2.0);
                let inner = C64::from_polar(1.0, t(1) / 2.0);
                let mut m = ComplexMatrix::zeros(4, 4);
                m[(0, 0)] = outer;
                m[(3, 3)] = outer;
                m[(1, 1)] = inner * c1;
                m[(2, 2)] = inner * c1;
                m[(1, 2)] = inner * C64::new(0.0, -s1);
                m[(2, 1)] = inner * C64::new(0.0, -s1);
                m
            }
            GateKind::H => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                ComplexMatrix::from_real_rows(&[&[h, h], &[h, -h]])
            }
            GateKind::X => Pauli::X.matrix(),
            GateKind::Y => Pauli::Y.matrix(),
            GateKind::Z => Pauli::Z.matrix(),
            GateKind::Swap => swap_matrix(),
            GateKind::CSwap => controlled(&swap_matrix(), true),
            GateKind::CPauli(p) => controlled(&p.matrix(), true),
            GateKind::AntiCPauli(p) => controlled(&p.matrix(), false),
            GateKind::CRx => controlled(&rot(t(0), Pauli::X), true),
            GateKind::CRz => controlled(&rot(t(0), Pauli::Z), true),
            GateKind::CCP => {
                let mut d = vec![ONE; 8];
                d[7] = -ONE;
                ComplexMatrix::diag(&d)
            }
            GateKind::Custom(m) => m.clone(),
        }
    }

    /// The unitary embedded in `qubits` total qubits (dense; for tests and
    /// small recompilation targets).
    pub fn full_matrix(&self, qubits: usize) -> Result<ComplexMatrix> {
        for &q in &self.qubits {
            if q >= qubits {
                return Err(EsdError::QubitOutOfRange { index: q, qubits });
            }
        }
        Ok(embed(&self.matrix(), &self.qubits, qubits))
    }

    /// Rewrites multi-target controlled Paulis as one controlled Pauli per
    /// non-identity letter; other gates are returned unchanged.
    pub fn lowered(&self) -> Vec<Gate> {
        match &self.kind {
            GateKind::CPauli(p) | GateKind::AntiCPauli(p) if p.qubit_count() > 1 => {
                let anti = matches!(self.kind, GateKind::AntiCPauli(_));
                p.letters()
                    .iter()
                    .zip(&self.qubits[1..])
                    .filter(|(l, _)| **l != Pauli::I)
                    .map(|(&l, &q)| {
                        let kind = if anti {
                            GateKind::AntiCPauli(PauliString::new(vec![l]))
                        } else {
                            GateKind::CPauli(PauliString::new(vec![l]))
                        };
                        Gate { kind, qubits: vec![self.qubits[0], q], params: vec![] }
                    })
                    .collect()
            }
            _ => vec![self.clone()],
        }
    }

    /// `KIND q0[,q1[,q2]] [theta[,theta2]]`; controlled Paulis carry their
    /// letters as an extra token after the qubits (`CPAULI 0,1,2 XZ`).
    pub fn to_text(&self) -> Result<String> {
        if matches!(self.kind, GateKind::Custom(_)) {
            return Err(EsdError::InvalidArgument("custom gates have no text form".into()));
        }
        let qs: Vec<String> = self.qubits.iter().map(|q| q.to_string()).collect();
        let mut line = format!("{} {}", self.kind.name().to_uppercase(), qs.join(","));
        if let GateKind::CPauli(p) | GateKind::AntiCPauli(p) = &self.kind {
            line.push(' ');
            line.push_str(&p.to_string());
        }
        if !self.params.is_empty() {
            let ps: Vec<String> = self.params.iter().map(|p| format!("{p:?}")).collect();
            line.push(' ');
            line.push_str(&ps.join(","));
        }
        Ok(line)
    }

    pub fn parse(line: &str) -> Result<Self> {
        let mut tokens = line.split_whitespace();
        let name = tokens.next().ok_or_else(|| EsdError::Parse("empty gate line".into()))?;
        let qubit_tok = tokens.next().ok_or_else(|| EsdError::Parse(format!("{name}: missing qubits")))?;
        let qubits = qubit_tok
            .split(',')
            .map(|q| q.trim().parse::<usize>().map_err(|e| EsdError::Parse(format!("qubit {q:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let lower = name.to_ascii_lowercase();
        let kind = match lower.as_str() {
            "rx" => GateKind::Rx,
            "ry" => GateKind::Ry,
            "rz" => GateKind::Rz,
            "xx" => GateKind::XX,
            "yy" => GateKind::YY,
            "zz" => GateKind::ZZ,
            "pswap" => GateKind::PSwap,
            "h" => GateKind::H,
            "x" => GateKind::X,
            "y" => GateKind::Y,
            "z" => GateKind::Z,
            "swap" => GateKind::Swap,
            "cswap" => GateKind::CSwap,
            "crx" => GateKind::CRx,
            "crz" => GateKind::CRz,
            "ccp" => GateKind::CCP,
            "xxx" => GateKind::XXX,
            "cpauli" | "acpauli" => {
                let letters = tokens.next().ok_or_else(|| EsdError::Parse(format!("{name}: missing Pauli letters")))?;
                let p: PauliString = letters.parse()?;
                if lower == "cpauli" {
                    GateKind::CPauli(p)
                } else {
                    GateKind::AntiCPauli(p)
                }
            }
            other => return Err(EsdError::Parse(format!("unknown gate kind {other:?}"))),
        };
        let params = match tokens.next() {
            Some(t) => t
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| EsdError::Parse(format!("angle {v:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };
        if let Some(extra) = tokens.next() {
            return Err(EsdError::Parse(format!("unexpected token {extra:?}")));
        }
        Self::new(kind, qubits, params)
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_text() {
            Ok(s) => f.write_str(&s),
            Err(_) => write!(f, "CUSTOM {:?}", self.qubits),
        }
    }
}

/// Embeds a local operator on `targets` (first target = most significant
/// local bit) into the full register.
pub fn embed(local: &ComplexMatrix, targets: &[usize], qubits: usize) -> ComplexMatrix {
    let dim = 1usize << qubits;
    let k = targets.len();
    let local_index = |i: usize| -> usize {
        targets.iter().enumerate().fold(0, |acc, (t, &q)| acc | (((i >> (qubits - 1 - q)) & 1) << (k - 1 - t)))
    };
    let mask: usize = targets.iter().map(|&q| 1usize << (qubits - 1 - q)).sum();
    ComplexMatrix::from_fn(dim, dim, |r, c| {
        if (r & !mask) != (c & !mask) {
            ZERO
        } else {
            local[(local_index(r), local_index(c))]
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::kron;

    fn all_kinds() -> Vec<Gate> {
        vec![
            Gate::rx(0, 0.3),
            Gate::ry(0, -1.1),
            Gate::rz(0, 2.0),
            Gate::new(GateKind::XX, vec![0, 1], vec![0.4]).unwrap(),
            Gate::new(GateKind::YY, vec![0, 1], vec![0.4]).unwrap(),
            Gate::new(GateKind::ZZ, vec![0, 1], vec![0.4]).unwrap(),
            Gate::new(GateKind::PSwap, vec![0, 1], vec![0.7, -0.2]).unwrap(),
            Gate::h(0),
            Gate::x(0),
            Gate::new(GateKind::Swap, vec![0, 1], vec![]).unwrap(),
            Gate::cswap(0, 1, 2),
            Gate::controlled_pauli(0, &[1, 2], "XY".parse().unwrap(), false).unwrap(),
            Gate::controlled_pauli(0, &[1], "Z".parse().unwrap(), true).unwrap(),
            Gate::new(GateKind::CRx, vec![0, 1], vec![1.3]).unwrap(),
            Gate::new(GateKind::CRz, vec![0, 1], vec![1.3]).unwrap(),
            Gate::new(GateKind::CCP, vec![0, 1, 2], vec![]).unwrap(),
            Gate::new(GateKind::XXX, vec![0, 1, 2], vec![0.9]).unwrap(),
        ]
    }

    #[test]
    fn all_gates_unitary() {
        for g in all_kinds() {
            assert!(g.matrix().unitary_deviation() < 1e-12, "{}", g);
        }
    }

    #[test]
    fn pswap_matches_exponential_definition() {
        let (t1, t2) = (0.7, -0.2);
        let xx: PauliString = "XX".parse().unwrap();
        let yy: PauliString = "YY".parse().unwrap();
        let zz: PauliString = "ZZ".parse().unwrap();
        // XX+YY and ZZ commute, and XX, YY commute.
        let expected = pauli_exp(t1 / 2.0, &xx)
            .matmul(&pauli_exp(t1 / 2.0, &yy))
            .unwrap()
            .matmul(&pauli_exp(t2 / 2.0, &zz))
            .unwrap();
        let g = Gate::new(GateKind::PSwap, vec![0, 1], vec![t1, t2]).unwrap();
        assert!(g.matrix().max_abs_diff(&expected) < 1e-12);
        // θ₁ = π/2, θ₂ = π/2 gives SWAP up to phase.
        let s = Gate::new(GateKind::PSwap, vec![0, 1], vec![std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2])
            .unwrap()
            .matrix();
        let phase = s[(0, 0)];
        assert!(s.max_abs_diff(&swap_matrix().scale(phase)) < 1e-12);
    }

    #[test]
    fn text_roundtrip() {
        for g in all_kinds() {
            let line = g.to_text().unwrap();
            assert_eq!(Gate::parse(&line).unwrap(), g, "{line}");
        }
        assert!(Gate::parse("RX 0").is_err());
        assert!(Gate::parse("CSWAP 0,1,1").is_err());
        assert!(Gate::parse("FOO 0").is_err());
    }

    #[test]
    fn embedding_matches_kron() {
        let g = Gate::rx(1, 0.5);
        let full = g.full_matrix(3).unwrap();
        let expected = kron(&kron(&ComplexMatrix::identity(2), &g.matrix()), &ComplexMatrix::identity(2));
        assert!(full.max_abs_diff(&expected) < 1e-15);
        // reversed target order on a two-qubit gate
        let cx = Gate::controlled_pauli(1, &[0], "X".parse().unwrap(), false).unwrap();
        let m = cx.full_matrix(2).unwrap();
        // control on qubit 1 (least significant): |01> -> |11>
        assert_eq!(m[(3, 1)], ONE);
        assert_eq!(m[(1, 3)], ONE);
        assert_eq!(m[(0, 0)], ONE);
    }

    #[test]
    fn lowering_preserves_unitary() {
        let g = Gate::controlled_pauli(0, &[1, 2, 3], "XIY".parse().unwrap(), true).unwrap();
        let parts = g.lowered();
        assert_eq!(parts.len(), 2);
        let mut prod = ComplexMatrix::identity(16);
        for p in &parts {
            prod = p.full_matrix(4).unwrap().matmul(&prod).unwrap();
        }
        assert!(prod.max_abs_diff(&g.full_matrix(4).unwrap()) < 1e-15);
    }
}
