//! Classical recursive solver: recovers each secret bit-by-bit from the
//! `n` children at unit-vector coordinates, for `n^l` leaf queries in total.

use serde::{Deserialize, Serialize};

use crate::bits::{g_eval, unit_string, BitString, GVariant};
use crate::error::{Result, RfsError};
use crate::instance::NodePath;
use crate::oracle::CountingOracle;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveResult {
    pub answer: bool,
    pub oracle_queries: u64,
}

/// Returns `g(s_path)`.
pub fn solve_classical(
    oracle: &CountingOracle,
    g_variant: GVariant,
    l: usize,
    path: &NodePath,
) -> Result<bool> {
    let n = oracle.instance().n();
    if path.depth() > l {
        return Err(RfsError::contract(format!(
            "path depth {} exceeds l = {l}",
            path.depth()
        )));
    }
    if path.depth() == l {
        return oracle.classical_query(path);
    }
    let mut value = 0u32;
    let mut child = path.clone();
    for j in 1..=n {
        child.push(unit_string(j, n)?);
        if solve_classical(oracle, g_variant, l, &child)? {
            value |= 1 << (n - j);
        }
        child.pop();
    }
    Ok(g_eval(&BitString::new(n, value)?, g_variant))
}

/// Root-level solve, reporting the number of queries it consumed.
pub fn solve_classical_root(oracle: &CountingOracle) -> Result<SolveResult> {
    let inst = oracle.instance();
    let before = oracle.counts().classical_queries;
    let answer = solve_classical(oracle, inst.g_variant(), inst.l(), &NodePath::root())?;
    Ok(SolveResult {
        answer,
        oracle_queries: oracle.counts().classical_queries - before,
    })
}
