//! TOML experiment configuration.
//!
//! A file names its experiment and fills in that experiment's section; every
//! field has a desk-scale default, so `experiment = "ground-state"` alone is a
//! valid config. Noise sections follow the core `NoiseModel` schema:
//!
//! ```toml
//! [suppression_sweep.noise]
//! classes.single = [{ family = "depolarizing", prob = 5e-4 }]
//! classes.two = [{ family = "depolarizing", prob = 5e-3, amplifiable = true }]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, ensure, Context, Result};
use esd_core::esd::DEFAULT_QUBIT_CAP;
use esd_core::noise::{ChannelFamily, NoiseEntry};
use esd_core::{FitKind, GateSetName, NoiseModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Density-matrix dimension limit for state-level experiments.
pub const STATE_QUBIT_CAP: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SuppressionSweep,
    DerangementZne,
    GroundState,
    CoherentMismatch,
    TwirlCompare,
    ResourcePlan,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::SuppressionSweep,
        ExperimentKind::DerangementZne,
        ExperimentKind::GroundState,
        ExperimentKind::CoherentMismatch,
        ExperimentKind::TwirlCompare,
        ExperimentKind::ResourcePlan,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            ExperimentKind::SuppressionSweep => "suppression-sweep",
            ExperimentKind::DerangementZne => "derangement-zne",
            ExperimentKind::GroundState => "ground-state",
            ExperimentKind::CoherentMismatch => "coherent-mismatch",
            ExperimentKind::TwirlCompare => "twirl-compare",
            ExperimentKind::ResourcePlan => "resource-plan",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ExperimentKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.label() == s)
            .with_context(|| format!("unknown experiment {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; the CLI `--out` flag takes precedence.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub suppression_sweep: SuppressionConfig,
    #[serde(default)]
    pub derangement_zne: DerangementZneConfig,
    #[serde(default)]
    pub ground_state: GroundStateConfig,
    #[serde(default)]
    pub coherent_mismatch: MismatchConfig,
    #[serde(default)]
    pub twirl_compare: TwirlConfig,
    #[serde(default)]
    pub resource_plan: ResourceConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CopyMode {
    /// n identical copies of the noisy state.
    Identical,
    /// Copies share eigenvectors; eigenvalues perturbed to a trace distance.
    Commuting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuppressionConfig {
    pub qubits: usize,
    pub blocks: usize,
    pub n_max: u32,
    pub observables: usize,
    pub include_identity: bool,
    pub mode: CopyMode,
    /// Trace distance between each copy and the base state (commuting mode).
    pub trace_distance: f64,
    /// Shots per probability; adds a shot-sampled error column.
    pub shots: Option<u64>,
    pub noise: NoiseModel,
}

impl Default for SuppressionConfig {
    fn default() -> Self {
        Self {
            qubits: 6,
            blocks: 5,
            n_max: 4,
            observables: 100,
            include_identity: false,
            mode: CopyMode::Identical,
            trace_distance: 1e-2,
            shots: None,
            noise: NoiseModel::depolarizing(5e-4, 5e-3),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DerangementZneConfig {
    pub qubits: usize,
    pub copies: usize,
    /// Blocks of the random ansatz preparing each state.
    pub blocks: usize,
    pub states: usize,
    pub base_eps: f64,
    pub max_eps: f64,
    /// Numbers of noise levels k, each spread evenly on [base_eps, max_eps].
    pub points: Vec<usize>,
    pub max_degree: usize,
    /// Noise on the state preparation (kept fixed while the derangement
    /// noise is amplified).
    pub state_noise: NoiseModel,
    /// Derangement noise at `base_eps`.
    pub derangement_noise: NoiseModel,
}

impl Default for DerangementZneConfig {
    fn default() -> Self {
        Self {
            qubits: 3,
            copies: 3,
            blocks: 3,
            states: 50,
            base_eps: 1e-3,
            max_eps: 1e-2,
            points: (2..=10).collect(),
            max_degree: 4,
            state_noise: NoiseModel::depolarizing(5e-4, 5e-3),
            derangement_noise: NoiseModel::new()
                .with("cswap", vec![NoiseEntry::new(ChannelFamily::Depolarizing, 1e-3, true)]),
        }
    }
}

/// On-site fields: an explicit list or `"seed:<int>"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OmegaSpec {
    Values(Vec<f64>),
    Seeded(String),
}

impl OmegaSpec {
    /// Seed of a `"seed:<int>"` spec.
    pub fn seed(&self) -> Result<Option<u64>> {
        match self {
            OmegaSpec::Values(_) => Ok(None),
            OmegaSpec::Seeded(s) => {
                let v = s.strip_prefix("seed:").with_context(|| format!("omega {s:?} is not \"seed:<int>\""))?;
                Ok(Some(v.trim().parse().with_context(|| format!("bad omega seed {v:?}"))?))
            }
        }
    }
}

/// How the derangement circuit is lowered before noise is attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NativeDerangement {
    /// Gate set whose type-A CSWAP recompilation replaces every CSWAP.
    pub gateset: GateSetName,
    pub restarts: usize,
}

impl Default for NativeDerangement {
    fn default() -> Self {
        Self { gateset: GateSetName::XxRyz, restarts: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundStateConfig {
    pub qubits: usize,
    pub coupling: f64,
    pub omega: OmegaSpec,
    pub layers: usize,
    pub adiabatic_time: f64,
    pub max_iters: usize,
    pub copies: usize,
    pub xi: Vec<f64>,
    /// Damping probability relative to dephasing.
    pub damping_ratio: f64,
    /// Non-amplifiable depolarizing probability relative to dephasing.
    pub fixed_ratio: f64,
    pub two_qubit_factor: f64,
    /// Noise levels ε..span·ε used by every extrapolation.
    pub zne_points: usize,
    pub zne_span: f64,
    pub zne_fit: FitKind,
    pub native: NativeDerangement,
}

impl Default for GroundStateConfig {
    fn default() -> Self {
        Self {
            qubits: 4,
            coupling: 0.1,
            omega: OmegaSpec::Seeded("seed:3".into()),
            layers: 4,
            adiabatic_time: 10.0,
            max_iters: 2000,
            copies: 2,
            xi: vec![0.0, 0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0],
            damping_ratio: 0.1,
            fixed_ratio: 0.07,
            two_qubit_factor: 5.0,
            zne_points: 6,
            zne_span: 2.0,
            zne_fit: FitKind::Poly(3),
            native: NativeDerangement::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MismatchConfig {
    pub qubits: usize,
    pub blocks: usize,
    /// Per-gate error levels ε (two-qubit depolarizing ε, single-qubit
    /// depolarizing single_ratio·ε).
    pub eps: Vec<f64>,
    pub single_ratio: f64,
    /// ε of the gate-count sweep.
    pub nu_eps: f64,
    /// Number of sampled circuit prefixes in the gate-count sweep.
    pub nu_points: usize,
    /// State-preparation extrapolation of the Method A estimate; off when
    /// `zne_points` is empty.
    pub zne_points: Vec<usize>,
    pub zne_base_eps: f64,
    pub zne_max_eps: f64,
    pub zne_copies: u32,
    pub zne_max_degree: usize,
    pub zne_observables: usize,
}

impl Default for MismatchConfig {
    fn default() -> Self {
        Self {
            qubits: 4,
            blocks: 8,
            eps: vec![0.0, 1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2],
            single_ratio: 0.1,
            nu_eps: 1e-3,
            nu_points: 8,
            zne_points: vec![2, 4, 6, 8, 10],
            zne_base_eps: 1e-3,
            zne_max_eps: 1e-2,
            zne_copies: 3,
            zne_max_degree: 4,
            zne_observables: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwirlConfig {
    pub qubits: usize,
    pub xi: Vec<f64>,
    /// Random input states, one observable each.
    pub observables: usize,
    pub twirl_samples: usize,
    pub damping_ratio: f64,
    pub fixed_ratio: f64,
    pub two_qubit_factor: f64,
    pub native: NativeDerangement,
}

impl Default for TwirlConfig {
    fn default() -> Self {
        Self {
            qubits: 3,
            xi: vec![0.0, 0.2, 0.5, 1.0, 2.0],
            observables: 50,
            twirl_samples: 50,
            damping_ratio: 0.1,
            fixed_ratio: 0.07,
            two_qubit_factor: 5.0,
            native: NativeDerangement::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourceConfig {
    pub precision: Vec<f64>,
    pub lambda: Vec<f64>,
    pub p_max: Vec<f64>,
    pub gate_error: f64,
    pub attenuation_threshold: f64,
}

impl Default for ResourceConfig {
    fn default() -> Self {
        Self {
            precision: vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            lambda: vec![0.51, 0.8, 0.95, 1.0],
            p_max: vec![0.026, 0.1],
            gate_error: 1e-3,
            attenuation_threshold: 0.1,
        }
    }
}

fn check_noise(nm: &NoiseModel, what: &str) -> Result<()> {
    nm.validate(1.0).with_context(|| format!("{what} noise"))?;
    Ok(())
}

fn check_positive(xs: &[f64], what: &str) -> Result<()> {
    ensure!(xs.iter().all(|x| x.is_finite() && *x >= 0.0), "{what} must be finite and non-negative");
    Ok(())
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            seed: 0,
            output: None,
            suppression_sweep: Default::default(),
            derangement_zne: Default::default(),
            ground_state: Default::default(),
            coherent_mismatch: Default::default(),
            twirl_compare: Default::default(),
            resource_plan: Default::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).context("parsing config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    /// SHA-256 of the canonical JSON form. The output path is excluded, so
    /// moving results does not change the hash.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Checks the section of the selected experiment.
    pub fn validate(&self) -> Result<()> {
        match self.experiment {
            ExperimentKind::SuppressionSweep => {
                let s = &self.suppression_sweep;
                ensure!((1..=STATE_QUBIT_CAP).contains(&s.qubits), "qubits must be in 1..={STATE_QUBIT_CAP}");
                ensure!(s.n_max >= 1, "n_max must be at least 1");
                ensure!(s.observables >= 1, "need at least one observable");
                ensure!(s.trace_distance >= 0.0 && s.trace_distance < 1.0, "trace_distance must be in [0, 1)");
                ensure!(s.shots != Some(0), "shots must be positive");
                check_noise(&s.noise, "state")?;
            }
            ExperimentKind::DerangementZne => {
                let d = &self.derangement_zne;
                ensure!(d.qubits >= 1 && d.copies >= 2, "need qubits ≥ 1 and copies ≥ 2");
                let total = 1 + d.qubits * d.copies;
                ensure!(total <= DEFAULT_QUBIT_CAP, "derangement circuit needs {total} qubits, cap is {DEFAULT_QUBIT_CAP}");
                ensure!(d.states >= 1, "need at least one state");
                ensure!(d.base_eps > 0.0 && d.max_eps > d.base_eps, "need 0 < base_eps < max_eps");
                ensure!(!d.points.is_empty() && d.points.iter().all(|&k| k >= 2), "point counts must be ≥ 2");
                check_noise(&d.state_noise, "state")?;
                check_noise(&d.derangement_noise, "derangement")?;
                d.derangement_noise
                    .validate(d.max_eps / d.base_eps)
                    .context("derangement noise amplified to max_eps")?;
            }
            ExperimentKind::GroundState => {
                let g = &self.ground_state;
                ensure!(g.qubits >= 2, "the ring needs at least 2 sites");
                ensure!(g.copies >= 1, "copies must be at least 1");
                let total = 1 + g.qubits * g.copies;
                ensure!(total <= DEFAULT_QUBIT_CAP, "derangement circuit needs {total} qubits, cap is {DEFAULT_QUBIT_CAP}");
                ensure!(g.layers >= 1, "need at least one layer");
                check_positive(&g.xi, "xi")?;
                ensure!(g.zne_points >= 1 && g.zne_span >= 1.0, "need zne_points ≥ 1 and zne_span ≥ 1");
                if let OmegaSpec::Values(v) = &g.omega {
                    ensure!(v.len() == g.qubits, "omega has {} entries for {} sites", v.len(), g.qubits);
                }
                g.omega.seed()?;
            }
            ExperimentKind::CoherentMismatch => {
                let m = &self.coherent_mismatch;
                ensure!((1..=STATE_QUBIT_CAP).contains(&m.qubits), "qubits must be in 1..={STATE_QUBIT_CAP}");
                check_positive(&m.eps, "eps")?;
                ensure!(m.eps.iter().all(|&e| e <= 0.2), "eps above 0.2 is outside the perturbative regime");
                ensure!(m.nu_eps > 0.0, "nu_eps must be positive");
                ensure!(m.nu_points >= 2, "nu_points must be at least 2");
                if !m.zne_points.is_empty() {
                    ensure!(m.zne_base_eps > 0.0 && m.zne_max_eps > m.zne_base_eps, "need 0 < zne_base_eps < zne_max_eps");
                    ensure!(m.zne_points.iter().all(|&k| k >= 2), "zne point counts must be ≥ 2");
                    ensure!(m.zne_copies >= 1, "zne_copies must be at least 1");
                }
            }
            ExperimentKind::TwirlCompare => {
                let t = &self.twirl_compare;
                ensure!(t.qubits >= 1 && 2 * t.qubits < DEFAULT_QUBIT_CAP, "qubits out of range");
                check_positive(&t.xi, "xi")?;
                ensure!(t.observables >= 1 && t.twirl_samples >= 1, "need observables and twirl samples");
            }
            ExperimentKind::ResourcePlan => {
                let r = &self.resource_plan;
                ensure!(!r.precision.is_empty() && !r.lambda.is_empty() && !r.p_max.is_empty(), "empty grid");
                ensure!(r.precision.iter().all(|&e| e > 0.0), "precision must be positive");
                ensure!(r.lambda.iter().all(|&l| l > 0.0 && l <= 1.0), "lambda must be in (0, 1]");
                ensure!(r.p_max.iter().all(|&p| p > 0.0 && p <= 1.0), "p_max must be in (0, 1]");
            }
        }
        Ok(())
    }

    /// Rejects a config whose `experiment` differs from the one requested.
    pub fn expect_kind(&self, kind: ExperimentKind) -> Result<()> {
        if self.experiment != kind {
            bail!("config is for {} but {} was requested", self.experiment, kind);
        }
        Ok(())
    }
}
