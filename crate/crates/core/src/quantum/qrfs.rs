//! Exact quantum recursion for RFS.
//!
//! Each level allocates a uniform `X` register and a `|->` ancilla, runs the
//! next level into the ancilla (phase kickback loads `(-1)^(s.x)` onto `X`),
//! Hadamards `X` to expose `|s>`, XORs `g(s)` into the caller's target, then
//! reverses the Hadamard and the recursive call so both ancillas return to
//! their initial states and can be discarded. Two recursive calls per level
//! give `2^(l-k)` oracle applications from level `k`.
//!
//! Path prefixes above the starting level are classical parameters; only the
//! levels actually being solved are simulated.

use serde::{Deserialize, Serialize};

use crate::bits::{BitString, GVariant};
use crate::error::{Result, RfsError};
use crate::instance::NodePath;
use crate::oracle::CountingOracle;
use crate::quantum::state::{InitKind, RegId, Statevector, MAX_QUBITS};

/// Amplitude-mass tolerance for reading a register that must be a basis state.
pub const MEASUREMENT_TOL: f64 = 1e-6;
/// Norm drift tolerated at level boundaries.
pub const NORM_TOL: f64 = 1e-9;

/// Points inside one level body at which an observer is called.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QrfsStep {
    /// First recursive call done: `X` carries `(-1)^(s.x)` phases.
    PhaseLoaded,
    /// Hadamard applied: `X` holds `|s>`.
    SecretExposed,
    /// `g(s)` XORed into the target.
    OutputWritten,
    /// Second Hadamard applied.
    Rehidden,
    /// Second recursive call done; `X` and the ancilla should be back in their initial states.
    Uncomputed,
}

#[derive(Clone, Copy, Debug)]
pub struct StepFrame {
    /// Tree level this body solves (`k`).
    pub level: usize,
    pub step: QrfsStep,
    /// Register `X_(k+1)`.
    pub x: RegId,
    /// The `|->` ancilla the recursion writes into.
    pub ancilla: RegId,
    /// The caller's output qubit, or `None` when extracting a secret.
    pub target: Option<RegId>,
}

pub trait QrfsObserver {
    fn observe(&mut self, frame: &StepFrame, state: &Statevector);
}

impl QrfsObserver for () {
    fn observe(&mut self, _: &StepFrame, _: &Statevector) {}
}

impl<F: FnMut(&StepFrame, &Statevector)> QrfsObserver for F {
    fn observe(&mut self, frame: &StepFrame, state: &Statevector) {
        self(frame, state)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QrfsOutcome {
    pub answer: bool,
    /// Probability mass on the measured value.
    pub determinism: f64,
    pub quantum_queries: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub secret: BitString,
    pub determinism: f64,
    pub quantum_queries: u64,
}

/// Qubits simulated by a full run starting at level `k`.
pub fn qrfs_qubits(n: usize, l: usize, k: usize) -> usize {
    (n + 1) * (l - k) + 1
}

/// Qubits simulated by a secret extraction at level `k`.
pub fn extraction_qubits(n: usize, l: usize, k: usize) -> usize {
    (n + 1) * (l - k)
}

struct Engine<'a, O> {
    oracle: &'a CountingOracle,
    variant: GVariant,
    l: usize,
    n: usize,
    prefix: &'a NodePath,
    observer: &'a mut O,
}

impl<O: QrfsObserver> Engine<'_, O> {
    fn check(
        oracle: &CountingOracle,
        variant: GVariant,
        l: usize,
        prefix: &NodePath,
    ) -> Result<()> {
        let inst = oracle.instance();
        if variant != inst.g_variant() || l != inst.l() {
            return Err(RfsError::contract(format!(
                "solver parameters (g = {variant}, l = {l}) disagree with the instance (g = {}, l = {})",
                inst.g_variant(),
                inst.l()
            )));
        }
        inst.validate_path(prefix)
    }

    /// Full level body: XOR `g(s_(prefix, active))` into `target`.
    fn solve(
        &mut self,
        state: &mut Statevector,
        active: &mut Vec<RegId>,
        target: RegId,
    ) -> Result<()> {
        let level = self.prefix.depth() + active.len();
        if level == self.l {
            return self
                .oracle
                .quantum_apply(state, self.prefix, active, target);
        }
        let (x, ancilla) = self.load_phases(state, active, Some(target))?;
        let frame = |step| StepFrame {
            level,
            step,
            x,
            ancilla,
            target: Some(target),
        };
        state.hadamard_all(x)?;
        self.observer
            .observe(&frame(QrfsStep::SecretExposed), state);
        state.g_gate(x, target, self.variant)?;
        self.observer
            .observe(&frame(QrfsStep::OutputWritten), state);
        state.hadamard_all(x)?;
        self.observer.observe(&frame(QrfsStep::Rehidden), state);
        active.push(x);
        self.solve(state, active, ancilla)?;
        active.pop();
        self.observer.observe(&frame(QrfsStep::Uncomputed), state);
        state.discard(&[x, ancilla])?;
        check_norm(state)
    }

    /// Allocate `X` and the ancilla and run the first recursive call.
    fn load_phases(
        &mut self,
        state: &mut Statevector,
        active: &mut Vec<RegId>,
        target: Option<RegId>,
    ) -> Result<(RegId, RegId)> {
        let level = self.prefix.depth() + active.len();
        let x = state.init_register(self.n, InitKind::UniformSuperposition)?;
        let ancilla = state.init_register(1, InitKind::Minus)?;
        active.push(x);
        self.solve(state, active, ancilla)?;
        active.pop();
        check_norm(state)?;
        let frame = StepFrame {
            level,
            step: QrfsStep::PhaseLoaded,
            x,
            ancilla,
            target,
        };
        self.observer.observe(&frame, state);
        Ok((x, ancilla))
    }
}

fn check_norm(state: &Statevector) -> Result<()> {
    let norm = state.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(RfsError::integrity(format!("state norm drifted to {norm}")));
    }
    Ok(())
}

/// Compute `g(s_prefix)` by simulating the quantum recursion from `prefix`.
pub fn qrfs_run(
    oracle: &CountingOracle,
    g_variant: GVariant,
    l: usize,
    fixed_prefix: &NodePath,
) -> Result<QrfsOutcome> {
    qrfs_run_observed(oracle, g_variant, l, fixed_prefix, &mut ())
}

pub fn qrfs_run_observed<O: QrfsObserver>(
    oracle: &CountingOracle,
    g_variant: GVariant,
    l: usize,
    fixed_prefix: &NodePath,
    observer: &mut O,
) -> Result<QrfsOutcome> {
    Engine::<O>::check(oracle, g_variant, l, fixed_prefix)?;
    let n = oracle.instance().n();
    let k = fixed_prefix.depth();
    let qubits = qrfs_qubits(n, l, k);
    if qubits > MAX_QUBITS {
        return Err(RfsError::contract(format!(
            "run from level {k} needs {qubits} qubits (budget {MAX_QUBITS})"
        )));
    }
    let before = oracle.counts().quantum_queries;
    let mut state = Statevector::new();
    let y = state.init_register(1, InitKind::Zeros)?;
    let mut engine = Engine {
        oracle,
        variant: g_variant,
        l,
        n,
        prefix: fixed_prefix,
        observer,
    };
    engine.solve(&mut state, &mut Vec::new(), y)?;
    let (value, determinism) = state.measure_deterministic(y, MEASUREMENT_TOL)?;
    Ok(QrfsOutcome {
        answer: value == 1,
        determinism,
        quantum_queries: oracle.counts().quantum_queries - before,
    })
}

/// Recover `s_path` itself by stopping the level body once `X` holds the secret.
/// Costs `2^(l-k-1)` oracle applications for a level-`k` path.
pub fn extract_subtree_secret(
    oracle: &CountingOracle,
    g_variant: GVariant,
    l: usize,
    path: &NodePath,
) -> Result<Extraction> {
    extract_subtree_secret_observed(oracle, g_variant, l, path, &mut ())
}

pub fn extract_subtree_secret_observed<O: QrfsObserver>(
    oracle: &CountingOracle,
    g_variant: GVariant,
    l: usize,
    path: &NodePath,
    observer: &mut O,
) -> Result<Extraction> {
    Engine::<O>::check(oracle, g_variant, l, path)?;
    let n = oracle.instance().n();
    let k = path.depth();
    if k >= l {
        return Err(RfsError::contract(format!(
            "secret extraction needs an internal node, got depth {k} with l = {l}"
        )));
    }
    let qubits = extraction_qubits(n, l, k);
    if qubits > MAX_QUBITS {
        return Err(RfsError::contract(format!(
            "extraction at level {k} needs {qubits} qubits (budget {MAX_QUBITS})"
        )));
    }
    let before = oracle.counts().quantum_queries;
    let mut state = Statevector::new();
    let mut engine = Engine {
        oracle,
        variant: g_variant,
        l,
        n,
        prefix: path,
        observer,
    };
    let (x, ancilla) = engine.load_phases(&mut state, &mut Vec::new(), None)?;
    state.hadamard_all(x)?;
    engine.observer.observe(
        &StepFrame {
            level: k,
            step: QrfsStep::SecretExposed,
            x,
            ancilla,
            target: None,
        },
        &state,
    );
    let (value, determinism) = state.measure_deterministic(x, MEASUREMENT_TOL)?;
    Ok(Extraction {
        secret: BitString::new(n, value)?,
        determinism,
        quantum_queries: oracle.counts().quantum_queries - before,
    })
}
