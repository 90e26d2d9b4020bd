//! Register derangements: n-cycles s with D|ψ₁…ψₙ> = |ψ_{s(1)}…ψ_{s(n)}>,
//! and their decomposition into n − 1 register swaps.
//!
//! Registers are 0-based here; `perm[k]` is the register whose content ends
//! up in register k.

use serde::{Deserialize, Serialize};

use crate::error::{EsdError, Result};

/// Largest register count whose variants are enumerated ((n−1)! must fit).
pub const MAX_REGISTERS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerangementSpec {
    n: usize,
    perm: Vec<usize>,
    transpositions: Vec<(usize, usize)>,
}

/// (n − 1)!, the number of n-cycles.
pub fn variant_count(n: usize) -> usize {
    (1..n).product::<usize>().max(1)
}

/// Register contents after applying `swaps` in order, starting from
/// content k in register k.
pub fn apply_transpositions(n: usize, swaps: &[(usize, usize)]) -> Vec<usize> {
    let mut content: Vec<usize> = (0..n).collect();
    for &(a, b) in swaps {
        content.swap(a, b);
    }
    content
}

fn is_single_cycle(perm: &[usize]) -> bool {
    let mut k = 0;
    for step in 1..=perm.len() {
        k = perm[k];
        if k == 0 {
            return step == perm.len();
        }
    }
    false
}

/// Swaps through register 0: repeatedly send the content held by register 0
/// to the register that must end up holding it. An n-cycle needs n − 1.
fn pivot_decomposition(perm: &[usize]) -> Vec<(usize, usize)> {
    let n = perm.len();
    let mut inverse = vec![0; n];
    for (k, &src) in perm.iter().enumerate() {
        inverse[src] = k;
    }
    let mut content: Vec<usize> = (0..n).collect();
    let mut swaps = Vec::with_capacity(n.saturating_sub(1));
    loop {
        let dest = inverse[content[0]];
        if dest == 0 {
            break;
        }
        content.swap(0, dest);
        swaps.push((0, dest));
    }
    swaps
}

impl DerangementSpec {
    /// Validates that `perm` is a derangement and an n-cycle.
    pub fn from_perm(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        if n < 2 {
            return Err(EsdError::InvalidDerangement(format!("need at least 2 registers, got {n}")));
        }
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || seen[p] {
                return Err(EsdError::InvalidDerangement(format!("{perm:?} is not a permutation")));
            }
            seen[p] = true;
        }
        if let Some(k) = (0..n).find(|&k| perm[k] == k) {
            return Err(EsdError::InvalidDerangement(format!("register {} is a fixed point", k + 1)));
        }
        if !is_single_cycle(&perm) {
            return Err(EsdError::InvalidDerangement(format!("{perm:?} is not a single n-cycle")));
        }
        let transpositions = pivot_decomposition(&perm);
        debug_assert_eq!(transpositions.len(), n - 1);
        Ok(Self { n, perm, transpositions })
    }

    /// Two-register swap.
    pub fn swap() -> Self {
        Self::cyclic(2, 0).expect("n = 2 has one variant")
    }

    /// The `variant`-th n-cycle. Cycles are written (0 c₁ … c_{n−1}) with
    /// (c₁, …) running over permutations of 1..n in lexicographic order, and
    /// s(cᵢ) = c_{i−1}. Variant 0 is the shift |ψ₁…ψₙ> → |ψₙ ψ₁ … ψ_{n−1}>.
    pub fn cyclic(n: usize, variant: usize) -> Result<Self> {
        if !(2..=MAX_REGISTERS).contains(&n) {
            return Err(EsdError::InvalidDerangement(format!("register count {n} outside 2..={MAX_REGISTERS}")));
        }
        let count = variant_count(n);
        if variant >= count {
            return Err(EsdError::VariantOutOfRange { index: variant, count, n });
        }
        // factorial-base digits pick the lexicographic permutation
        let mut pool: Vec<usize> = (1..n).collect();
        let mut order = vec![0usize];
        let mut rem = variant;
        for k in (0..n - 1).rev() {
            let f = variant_count(k + 1);
            let idx = rem / f;
            rem %= f;
            order.push(pool.remove(idx));
        }
        let mut perm = vec![0; n];
        for i in 0..n {
            perm[order[i]] = order[(i + n - 1) % n];
        }
        Self::from_perm(perm)
    }

    pub fn all(n: usize) -> Result<Vec<Self>> {
        (0..variant_count(n)).map(|v| Self::cyclic(n, v)).collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `perm()[k]` = s(k): the register whose content moves into k.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn s(&self, k: usize) -> usize {
        self.perm[k]
    }

    /// Register swaps in time order.
    pub fn transpositions(&self) -> &[(usize, usize)] {
        &self.transpositions
    }

    /// Register sequence 0, s(0), s(s(0)), …, ending before the return to 0.
    pub fn cycle_from_first(&self) -> Vec<usize> {
        let mut out = vec![0];
        let mut k = self.perm[0];
        while k != 0 {
            out.push(k);
            k = self.perm[k];
        }
        out
    }
}
