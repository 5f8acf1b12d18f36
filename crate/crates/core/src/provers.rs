//! Honest and adversarial provers.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bits::{g_eval, BitString, GVariant};
use crate::error::{Result, RfsError};
use crate::instance::{NodePath, RfsInstance};
use crate::oracle::CountingOracle;
use crate::protocol::ProverEndpoint;
use crate::quantum::extract_subtree_secret;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProverKind {
    HonestLookup,
    HonestQuantum,
    /// Lie at the root with a string whose `g` value is flipped.
    RootFlip,
    /// Lie the same way at every node of the given level.
    LevelFlip(usize),
    /// Replace each answer by a uniform random string with this probability.
    RandomLie(f64),
    /// Return a different string with the same `g` value, when one exists.
    GPreservingLie,
}

impl ProverKind {
    /// The adversarial kinds, for depth `l`.
    pub fn adversaries(l: usize) -> Vec<ProverKind> {
        let mut kinds = vec![ProverKind::RootFlip];
        kinds.extend((0..l).map(ProverKind::LevelFlip));
        kinds.extend([
            ProverKind::RandomLie(0.5),
            ProverKind::RandomLie(1.0),
            ProverKind::GPreservingLie,
        ]);
        kinds
    }

    pub fn is_honest(&self) -> bool {
        matches!(self, ProverKind::HonestLookup | ProverKind::HonestQuantum)
    }

    pub fn validate(&self, l: usize) -> Result<()> {
        match *self {
            ProverKind::LevelFlip(k) if k >= l => Err(RfsError::contract(format!(
                "level-flip level {k} must be below l = {l}"
            ))),
            ProverKind::RandomLie(p) if !(0.0..=1.0).contains(&p) => Err(RfsError::contract(
                format!("random-lie probability {p} outside [0, 1]"),
            )),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ProverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProverKind::HonestLookup => f.write_str("honest-lookup"),
            ProverKind::HonestQuantum => f.write_str("honest-quantum"),
            ProverKind::RootFlip => f.write_str("root-flip"),
            ProverKind::LevelFlip(k) => write!(f, "level-flip:{k}"),
            ProverKind::RandomLie(p) => write!(f, "random-lie:{p}"),
            ProverKind::GPreservingLie => f.write_str("g-preserving"),
        }
    }
}

impl FromStr for ProverKind {
    type Err = RfsError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || RfsError::contract(format!("unknown prover kind `{s}`"));
        Ok(match s {
            "honest-lookup" => ProverKind::HonestLookup,
            "honest-quantum" => ProverKind::HonestQuantum,
            "root-flip" => ProverKind::RootFlip,
            "g-preserving" => ProverKind::GPreservingLie,
            _ => {
                if let Some(k) = s.strip_prefix("level-flip:") {
                    ProverKind::LevelFlip(k.parse().map_err(|_| bad())?)
                } else if let Some(p) = s.strip_prefix("random-lie:") {
                    let p: f64 = p.parse().map_err(|_| bad())?;
                    if !(0.0..=1.0).contains(&p) {
                        return Err(bad());
                    }
                    ProverKind::RandomLie(p)
                } else {
                    return Err(bad());
                }
            }
        })
    }
}

impl Serialize for ProverKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ProverKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Knows the whole tree; answers with the true secret. Makes no oracle queries.
pub struct HonestLookup {
    instance: Arc<RfsInstance>,
}

pub fn honest_lookup(instance: Arc<RfsInstance>) -> HonestLookup {
    HonestLookup { instance }
}

impl ProverEndpoint for HonestLookup {
    fn respond(&mut self, path: &NodePath) -> Result<BitString> {
        self.instance.secret_at(path)
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

/// One answered request of the quantum prover.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionRecord {
    pub path: NodePath,
    pub quantum_queries: u64,
    pub cached: bool,
}

/// Recovers each requested secret by simulating the quantum recursion,
/// touching the tree only through the counted oracle.
pub struct HonestQuantum {
    oracle: Arc<CountingOracle>,
    g_variant: GVariant,
    l: usize,
    cache: Option<HashMap<NodePath, BitString>>,
    log: Vec<ExtractionRecord>,
}

pub fn honest_quantum(oracle: Arc<CountingOracle>, g_variant: GVariant, l: usize) -> HonestQuantum {
    HonestQuantum {
        oracle,
        g_variant,
        l,
        cache: None,
        log: Vec::new(),
    }
}

impl HonestQuantum {
    /// Reuse earlier answers for repeated paths.
    pub fn with_cache(mut self) -> Self {
        self.cache = Some(HashMap::new());
        self
    }

    pub fn log(&self) -> &[ExtractionRecord] {
        &self.log
    }

    pub fn total_queries(&self) -> u64 {
        self.log.iter().map(|r| r.quantum_queries).sum()
    }
}

impl ProverEndpoint for HonestQuantum {
    fn respond(&mut self, path: &NodePath) -> Result<BitString> {
        if let Some(s) = self.cache.as_ref().and_then(|c| c.get(path)) {
            self.log.push(ExtractionRecord {
                path: path.clone(),
                quantum_queries: 0,
                cached: true,
            });
            return Ok(*s);
        }
        let e = extract_subtree_secret(&self.oracle, self.g_variant, self.l, path)?;
        if let Some(cache) = self.cache.as_mut() {
            cache.insert(path.clone(), e.secret);
        }
        self.log.push(ExtractionRecord {
            path: path.clone(),
            quantum_queries: e.quantum_queries,
            cached: false,
        });
        Ok(e.secret)
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

/// Scripted dishonest prover.
pub struct Adversary {
    kind: ProverKind,
    instance: Arc<RfsInstance>,
    rng: ChaCha8Rng,
}

pub fn make_adversary(
    kind: ProverKind,
    instance: Arc<RfsInstance>,
    rng_seed: u64,
) -> Result<Adversary> {
    kind.validate(instance.l())?;
    if kind.is_honest() {
        return Err(RfsError::contract(format!("{kind} is not an adversary")));
    }
    Ok(Adversary {
        kind,
        instance,
        rng: ChaCha8Rng::seed_from_u64(rng_seed),
    })
}

impl Adversary {
    /// First string (in increasing order) whose `g` differs from `g(s)`.
    fn flipped(&self, s: &BitString) -> BitString {
        self.instance
            .preimage_class(!g_eval(s, self.instance.g_variant()))[0]
    }
}

impl ProverEndpoint for Adversary {
    fn respond(&mut self, path: &NodePath) -> Result<BitString> {
        let truth = self.instance.secret_at(path)?;
        let n = self.instance.n();
        Ok(match self.kind {
            ProverKind::RootFlip if path.is_root() => self.flipped(&truth),
            ProverKind::LevelFlip(k) if path.depth() == k => self.flipped(&truth),
            ProverKind::RandomLie(p) => {
                if self.rng.gen_bool(p) {
                    BitString::new(n, self.rng.gen_range(0..(1u32 << n)))?
                } else {
                    truth
                }
            }
            ProverKind::GPreservingLie => self
                .instance
                .preimage_class(g_eval(&truth, self.instance.g_variant()))
                .iter()
                .copied()
                .find(|s| *s != truth)
                .unwrap_or(truth),
            _ => truth,
        })
    }

    fn is_deterministic(&self) -> bool {
        match self.kind {
            ProverKind::RandomLie(p) => p == 0.0,
            _ => true,
        }
    }
}

/// Build any prover kind for one verifier run against `oracle`'s instance.
pub fn make_prover(
    kind: ProverKind,
    oracle: &Arc<CountingOracle>,
    rng_seed: u64,
) -> Result<Box<dyn ProverEndpoint + Send>> {
    let instance = oracle.instance().clone();
    kind.validate(instance.l())?;
    Ok(match kind {
        ProverKind::HonestLookup => Box::new(honest_lookup(instance)),
        ProverKind::HonestQuantum => {
            let (g, l) = (instance.g_variant(), instance.l());
            Box::new(honest_quantum(oracle.clone(), g, l))
        }
        _ => Box::new(make_adversary(kind, instance, rng_seed)?),
    })
}
