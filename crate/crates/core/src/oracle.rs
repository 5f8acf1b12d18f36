//! The leaf oracle `A(x_1, ..., x_l) = g(s_(x_1, ..., x_l))`, with query counters.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bits::{g_eval, BitString};
use crate::error::{Result, RfsError};
use crate::instance::{NodePath, RfsInstance};
use crate::quantum::{RegId, Statevector};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryCounts {
    pub classical_queries: u64,
    pub quantum_queries: u64,
}

#[derive(Debug)]
pub struct CountingOracle {
    instance: Arc<RfsInstance>,
    classical: AtomicU64,
    quantum: AtomicU64,
}

impl CountingOracle {
    pub fn new(instance: Arc<RfsInstance>) -> Self {
        CountingOracle {
            instance,
            classical: AtomicU64::new(0),
            quantum: AtomicU64::new(0),
        }
    }

    pub fn instance(&self) -> &Arc<RfsInstance> {
        &self.instance
    }

    pub fn counts(&self) -> QueryCounts {
        QueryCounts {
            classical_queries: self.classical.load(Ordering::Relaxed),
            quantum_queries: self.quantum.load(Ordering::Relaxed),
        }
    }

    pub fn classical_query(&self, path: &NodePath) -> Result<bool> {
        let l = self.instance.l();
        if path.depth() != l {
            return Err(RfsError::contract(format!(
                "oracle is defined on leaves only: path {path} has depth {} != l = {l}",
                path.depth()
            )));
        }
        let secret = self.instance.secret_at(path)?;
        self.classical.fetch_add(1, Ordering::Relaxed);
        Ok(g_eval(&secret, self.instance.g_variant()))
    }

    /// One application of `A|x_1..x_l>|y> = |x_1..x_l>|y xor A(x)>`.
    ///
    /// `fixed_prefix` supplies classical `x_1..x_k`; `active` names the
    /// registers holding `x_(k+1)..x_l`. Counts as exactly one quantum query.
    pub fn quantum_apply(
        &self,
        state: &mut Statevector,
        fixed_prefix: &NodePath,
        active: &[RegId],
        target: RegId,
    ) -> Result<()> {
        let n = self.instance.n();
        let l = self.instance.l();
        self.instance.validate_path(fixed_prefix)?;
        if fixed_prefix.depth() + active.len() != l {
            return Err(RfsError::contract(format!(
                "oracle layout mismatch: prefix depth {} + {} active registers != l = {l}",
                fixed_prefix.depth(),
                active.len()
            )));
        }
        for &reg in active {
            let q = state.layout().qubits(reg)?;
            if q != n {
                return Err(RfsError::contract(format!(
                    "active register {reg:?} has {q} qubits, expected n = {n}"
                )));
            }
        }
        if state.layout().qubits(target)? != 1 {
            return Err(RfsError::contract("oracle target must be one qubit"));
        }

        // Tabulate A over the active subcube once; superposition size does not matter.
        let variant = self.instance.g_variant();
        let count = 1usize << (n * active.len());
        let mut table = Vec::with_capacity(count);
        for code in 0..count {
            let mut path = fixed_prefix.clone();
            for i in 0..active.len() {
                let shift = n * (active.len() - 1 - i);
                path.push(BitString::new(
                    n,
                    ((code >> shift) & ((1 << n) - 1)) as u32,
                )?);
            }
            table.push(g_eval(&self.instance.secret_at(&path)?, variant));
        }
        state.xor_function(active, target, |values| {
            let code = values
                .iter()
                .fold(0usize, |acc, &v| (acc << n) | v as usize);
            table[code]
        })?;
        self.quantum.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }
}
