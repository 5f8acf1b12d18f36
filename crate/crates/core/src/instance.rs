//! Seed-addressed RFS secret trees.
//!
//! A tree has `2^n` children per internal node and depth `l`. Nothing is
//! materialized up front: the secret of a node is derived on demand from
//! its parent's secret and a hash of `(seed, path)`, then memoized. Every
//! non-root secret is drawn from the preimage class `g^{-1}(b)` where
//! `b = s_parent . x_k`, so the promise holds by construction.

use std::collections::HashMap;
use std::fmt;
use std::sync::RwLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{g_eval, inner_product, BitString, GVariant, MAX_WIDTH};
use crate::error::{Result, RfsError};

/// Identifier of the path-keyed generator used by [`RfsInstance`].
pub const PRG_ID: &str = "splitmix64-chain-v1";

/// Upper bound on `n * l` for exhaustive promise checks.
pub const EXHAUSTIVE_LOG2_LIMIT: usize = 20;

/// Address of a tree node: `(x_1, ..., x_k)`. Empty is the root.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodePath(Vec<BitString>);

impl NodePath {
    pub fn root() -> Self {
        NodePath(Vec::new())
    }

    pub fn from_parts(parts: Vec<BitString>) -> Self {
        NodePath(parts)
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn parts(&self) -> &[BitString] {
        &self.0
    }

    pub fn last(&self) -> Option<&BitString> {
        self.0.last()
    }

    pub fn child(&self, x: BitString) -> NodePath {
        let mut parts = Vec::with_capacity(self.0.len() + 1);
        parts.extend_from_slice(&self.0);
        parts.push(x);
        NodePath(parts)
    }

    pub fn parent(&self) -> Option<NodePath> {
        if self.0.is_empty() {
            None
        } else {
            Some(NodePath(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub(crate) fn push(&mut self, x: BitString) {
        self.0.push(x);
    }

    pub(crate) fn pop(&mut self) -> Option<BitString> {
        self.0.pop()
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NodePath{self}")
    }
}

/// The five values that fully determine an instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceDescriptor {
    pub n: usize,
    pub l: usize,
    pub g_variant: GVariant,
    pub seed: u64,
    pub prg_id: String,
}

pub struct RfsInstance {
    n: usize,
    l: usize,
    g_variant: GVariant,
    seed: u64,
    /// `classes[b]` holds every string `s` with `g(s) == b`, in increasing order.
    classes: [Vec<BitString>; 2],
    memo: RwLock<HashMap<NodePath, BitString>>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic 64-bit word for a node: one splitmix64 round per path element,
/// chained from the seed. Distinct depths give distinct chain lengths.
pub(crate) fn path_word(seed: u64, path: &NodePath) -> u64 {
    let mut h = splitmix64(seed ^ 0x5246_535F_5452_4545);
    for (depth, part) in path.parts().iter().enumerate() {
        let word = u64::from(part.value()) | ((depth as u64 + 1) << 32);
        h = splitmix64(h ^ word);
    }
    h
}

impl RfsInstance {
    pub fn new(n: usize, l: usize, g_variant: GVariant, seed: u64) -> Result<Self> {
        if n == 0 || n > MAX_WIDTH {
            return Err(RfsError::contract(format!(
                "n = {n} outside 1..={MAX_WIDTH}"
            )));
        }
        if l == 0 || l > MAX_WIDTH {
            return Err(RfsError::contract(format!(
                "l = {l} outside 1..={MAX_WIDTH}"
            )));
        }
        let mut classes: [Vec<BitString>; 2] = [Vec::new(), Vec::new()];
        for s in BitString::all(n)? {
            classes[g_eval(&s, g_variant) as usize].push(s);
        }
        if classes.iter().any(Vec::is_empty) {
            return Err(RfsError::contract(format!(
                "g variant {g_variant} has an empty preimage class at n = {n}"
            )));
        }
        Ok(RfsInstance {
            n,
            l,
            g_variant,
            seed,
            classes,
            memo: RwLock::new(HashMap::new()),
        })
    }

    pub fn from_descriptor(d: &InstanceDescriptor) -> Result<Self> {
        if d.prg_id != PRG_ID {
            return Err(RfsError::contract(format!(
                "unsupported prg `{}` (this build provides `{PRG_ID}`)",
                d.prg_id
            )));
        }
        Self::new(d.n, d.l, d.g_variant, d.seed)
    }

    pub fn descriptor(&self) -> InstanceDescriptor {
        InstanceDescriptor {
            n: self.n,
            l: self.l,
            g_variant: self.g_variant,
            seed: self.seed,
            prg_id: PRG_ID.to_string(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn g_variant(&self) -> GVariant {
        self.g_variant
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn preimage_class(&self, bit: bool) -> &[BitString] {
        &self.classes[bit as usize]
    }

    /// Number of materialized nodes.
    pub fn memo_len(&self) -> usize {
        self.memo.read().expect("memo lock poisoned").len()
    }

    pub fn validate_path(&self, path: &NodePath) -> Result<()> {
        if path.depth() > self.l {
            return Err(RfsError::contract(format!(
                "path {path} has depth {} > l = {}",
                path.depth(),
                self.l
            )));
        }
        if let Some(bad) = path.parts().iter().find(|p| p.width() != self.n) {
            return Err(RfsError::contract(format!(
                "path element {bad} has width {} != n = {}",
                bad.width(),
                self.n
            )));
        }
        Ok(())
    }

    pub fn secret_at(&self, path: &NodePath) -> Result<BitString> {
        self.validate_path(path)?;
        Ok(self.resolve(path))
    }

    fn resolve(&self, path: &NodePath) -> BitString {
        if let Some(s) = self.memo.read().expect("memo lock poisoned").get(path) {
            return *s;
        }
        let word = path_word(self.seed, path);
        let secret = match path.parent() {
            None => BitString::new(self.n, (word & ((1u64 << self.n) - 1)) as u32)
                .expect("masked to n bits"),
            Some(parent) => {
                let parent_secret = self.resolve(&parent);
                let x = path.last().expect("non-root path");
                let b = inner_product(&parent_secret, x).expect("widths validated");
                let class = &self.classes[b as usize];
                class[(word % class.len() as u64) as usize]
            }
        };
        // identical values may race in; either insert is fine
        self.memo
            .write()
            .expect("memo lock poisoned")
            .entry(path.clone())
            .or_insert(secret);
        secret
    }

    #[cfg(test)]
    pub(crate) fn corrupt_secret(&self, path: &NodePath, value: BitString) {
        self.memo
            .write()
            .expect("memo lock poisoned")
            .insert(path.clone(), value);
    }

    /// Verify `g(s_child) == s_parent . x_k` for one non-root node.
    fn promise_holds(&self, path: &NodePath) -> bool {
        let parent = path.parent().expect("non-root path");
        let child = self.resolve(path);
        let parent_secret = self.resolve(&parent);
        let x = path.last().expect("non-root path");
        g_eval(&child, self.g_variant) == inner_product(&parent_secret, x).expect("widths")
    }

    pub fn check_promise(&self, mode: CheckMode) -> Result<PromiseReport> {
        let mut report = PromiseReport::default();
        match mode {
            CheckMode::Exhaustive => {
                if self.n * self.l > EXHAUSTIVE_LOG2_LIMIT {
                    return Err(RfsError::contract(format!(
                        "exhaustive check needs (2^n)^l <= 2^{EXHAUSTIVE_LOG2_LIMIT}, got n*l = {}",
                        self.n * self.l
                    )));
                }
                let mut path = NodePath::root();
                self.check_subtree(&mut path, &mut report);
            }
            CheckMode::Sampled { count, rng_seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
                // weight level k by its node count 2^(n k), as log-weights to avoid overflow
                let weights: Vec<f64> = (1..=self.l)
                    .map(|k| ((self.n * k) as f64 - (self.n * self.l) as f64).exp2())
                    .collect();
                let dist = rand::distributions::WeightedIndex::new(&weights)
                    .map_err(|e| RfsError::contract(e.to_string()))?;
                for _ in 0..count {
                    let depth = rng.sample(&dist) + 1;
                    let parts = (0..depth)
                        .map(|_| {
                            BitString::new(self.n, rng.gen_range(0..(1u32 << self.n)))
                                .expect("in range")
                        })
                        .collect();
                    let path = NodePath(parts);
                    report.checked += 1;
                    if !self.promise_holds(&path) {
                        report.violations += 1;
                    }
                }
            }
        }
        Ok(report)
    }

    fn check_subtree(&self, path: &mut NodePath, report: &mut PromiseReport) {
        if path.depth() == self.l {
            return;
        }
        for x in BitString::all(self.n).expect("valid width") {
            path.push(x);
            report.checked += 1;
            if !self.promise_holds(path) {
                report.violations += 1;
            }
            self.check_subtree(path, report);
            path.pop();
        }
    }
}

impl fmt::Debug for RfsInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RfsInstance")
            .field("n", &self.n)
            .field("l", &self.l)
            .field("g_variant", &self.g_variant)
            .field("seed", &self.seed)
            .field("materialized", &self.memo_len())
            .finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckMode {
    Exhaustive,
    Sampled { count: u64, rng_seed: u64 },
}

impl std::str::FromStr for CheckMode {
    type Err = RfsError;

    /// `exhaustive`, or `sampled:COUNT` (sampling seed 0), or `sampled:COUNT:SEED`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "exhaustive" {
            return Ok(CheckMode::Exhaustive);
        }
        let bad = || RfsError::contract(format!("invalid check mode `{s}`"));
        let rest = s.strip_prefix("sampled:").ok_or_else(bad)?;
        let mut it = rest.split(':');
        let count = it.next().and_then(|c| c.parse().ok()).ok_or_else(bad)?;
        let rng_seed = match it.next() {
            Some(v) => v.parse().map_err(|_| bad())?,
            None => 0,
        };
        if it.next().is_some() {
            return Err(bad());
        }
        Ok(CheckMode::Sampled { count, rng_seed })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromiseReport {
    pub checked: u64,
    pub violations: u64,
}
