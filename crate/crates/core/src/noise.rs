//! Gate-attached noise models with an amplifiable / fixed split.
//!
//! Entries are looked up by gate kind name (`"cswap"`, `"xx"`, …) first and
//! by arity class (`"single"`, `"two"`, `"three"`) otherwise. Depolarizing
//! entries act jointly on all qubits of the gate; dephasing and damping act
//! on each gate qubit separately.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::channels::KrausChannel;
use crate::error::{EsdError, Result};
use crate::gates::Gate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelFamily {
    Depolarizing,
    Dephasing,
    Damping,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseEntry {
    pub family: ChannelFamily,
    pub prob: f64,
    /// Whether the experimentalist can scale this component.
    #[serde(default = "default_true")]
    pub amplifiable: bool,
}

impl NoiseEntry {
    pub fn new(family: ChannelFamily, prob: f64, amplifiable: bool) -> Self {
        Self { family, prob, amplifiable }
    }
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct NoiseModel {
    #[serde(default)]
    pub classes: BTreeMap<String, Vec<NoiseEntry>>,
    /// Multiplies every amplifiable probability.
    #[serde(default = "default_scale")]
    pub eps_scale: f64,
}

/// Arity class name used as the fallback selector.
pub fn arity_class(arity: usize) -> &'static str {
    match arity {
        0 | 1 => "single",
        2 => "two",
        _ => "three",
    }
}

impl NoiseModel {
    pub fn new() -> Self {
        Self { classes: BTreeMap::new(), eps_scale: 1.0 }
    }

    /// Adds (or replaces) the entries for a selector.
    pub fn with(mut self, selector: &str, entries: Vec<NoiseEntry>) -> Self {
        self.classes.insert(selector.to_ascii_lowercase(), entries);
        self
    }

    /// Single- and two-qubit depolarizing noise, both amplifiable.
    pub fn depolarizing(single: f64, two: f64) -> Self {
        Self::new()
            .with("single", vec![NoiseEntry::new(ChannelFamily::Depolarizing, single, true)])
            .with("two", vec![NoiseEntry::new(ChannelFamily::Depolarizing, two, true)])
    }

    /// Dephasing `eps` plus damping `damping_ratio·eps` (amplifiable) and
    /// depolarizing `fixed_ratio·eps` (fixed) on single-qubit gates; the
    /// two-qubit entries are the same multiplied by `two_qubit_factor`.
    pub fn dephasing_damping(eps: f64, damping_ratio: f64, fixed_ratio: f64, two_qubit_factor: f64) -> Self {
        let entries = |s: f64| {
            vec![
                NoiseEntry::new(ChannelFamily::Dephasing, s * eps, true),
                NoiseEntry::new(ChannelFamily::Damping, s * damping_ratio * eps, true),
                NoiseEntry::new(ChannelFamily::Depolarizing, s * fixed_ratio * eps, false),
            ]
        };
        Self::new().with("single", entries(1.0)).with("two", entries(two_qubit_factor))
    }

    pub fn is_empty(&self) -> bool {
        self.classes.values().all(|v| v.is_empty())
    }

    /// Entries that apply to a gate.
    pub fn entries_for(&self, gate: &Gate) -> &[NoiseEntry] {
        self.classes
            .get(gate.kind.name())
            .or_else(|| self.classes.get(arity_class(gate.arity())))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn effective_prob(&self, entry: &NoiseEntry, extra_scale: f64) -> f64 {
        if entry.amplifiable {
            entry.prob * self.eps_scale * extra_scale
        } else {
            entry.prob
        }
    }

    /// Checks every effective probability lies in [0, 1].
    pub fn validate(&self, extra_scale: f64) -> Result<()> {
        if !(self.eps_scale >= 0.0) || !(extra_scale >= 0.0) {
            return Err(EsdError::InvalidArgument("noise scale must be non-negative".into()));
        }
        for (sel, entries) in &self.classes {
            for e in entries {
                let p = self.effective_prob(e, extra_scale);
                if !(0.0..=1.0).contains(&p) {
                    return Err(EsdError::InvalidProbability { value: p, context: format!("noise class {sel:?}") });
                }
            }
        }
        Ok(())
    }

    /// The channels to apply after `gate`, with their target qubits.
    /// Zero-probability entries are skipped.
    pub fn channels_for(&self, gate: &Gate, extra_scale: f64) -> Result<Vec<(KrausChannel, Vec<usize>)>> {
        let mut out = Vec::new();
        for e in self.entries_for(gate) {
            let p = self.effective_prob(e, extra_scale);
            if p == 0.0 {
                continue;
            }
            match e.family {
                ChannelFamily::Depolarizing => {
                    out.push((KrausChannel::depolarizing(gate.arity(), p)?, gate.qubits.clone()));
                }
                ChannelFamily::Dephasing => {
                    let ch = KrausChannel::dephasing(p)?;
                    out.extend(gate.qubits.iter().map(|&q| (ch.clone(), vec![q])));
                }
                ChannelFamily::Damping => {
                    let ch = KrausChannel::damping(p)?;
                    out.extend(gate.qubits.iter().map(|&q| (ch.clone(), vec![q])));
                }
            }
        }
        Ok(out)
    }

    /// Probabilities of the individual channel applications after `gate`.
    pub fn event_probs(&self, gate: &Gate, extra_scale: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for e in self.entries_for(gate) {
            let p = self.effective_prob(e, extra_scale);
            if p == 0.0 {
                continue;
            }
            let reps = match e.family {
                ChannelFamily::Depolarizing => 1,
                _ => gate.arity(),
            };
            out.extend(std::iter::repeat_n(p, reps));
        }
        out
    }

    /// Probability that at least one error event fires after `gate`.
    pub fn gate_error_probability(&self, gate: &Gate, extra_scale: f64) -> f64 {
        1.0 - self.event_probs(gate, extra_scale).iter().map(|p| 1.0 - p).product::<f64>()
    }
}

/// Copy of `nm` with amplifiable components multiplied by `factor`.
pub fn amplify(nm: &NoiseModel, factor: f64) -> Result<NoiseModel> {
    let mut out = nm.clone();
    out.eps_scale *= factor;
    out.validate(1.0)?;
    Ok(out)
}
