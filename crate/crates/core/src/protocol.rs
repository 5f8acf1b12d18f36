//! Classical verifier for the RFS interactive proof.
//!
//! At an internal node the verifier asks the prover for the node's secret
//! `s'`, then `c` times picks a uniformly random child coordinate `x`,
//! recursively verifies the child, and aborts unless the child's value equals
//! `s' . x`. If every check passes it returns `g(s')`. Leaves are answered by
//! the oracle. An honest prover is always accepted; any prover gets a wrong
//! answer accepted with probability at most 1/4 when `c = 3`.

use std::ops::ControlFlow;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{digit, g_eval, inner_product, BitString, GVariant};
use crate::error::{Result, RfsError};
use crate::instance::{NodePath, RfsInstance};
use crate::oracle::CountingOracle;

/// Cap on `n * c * l` for [`exact_outcome_analysis`].
pub const EXACT_LOG2_LIMIT: usize = 20;

/// The prover's side of the protocol: answer "what is `s_path`?".
pub trait ProverEndpoint {
    fn respond(&mut self, path: &NodePath) -> Result<BitString>;

    /// True when answers depend on the path alone (no randomness, no history).
    fn is_deterministic(&self) -> bool {
        false
    }
}

impl<P: ProverEndpoint + ?Sized> ProverEndpoint for Box<P> {
    fn respond(&mut self, path: &NodePath) -> Result<BitString> {
        (**self).respond(path)
    }

    fn is_deterministic(&self) -> bool {
        (**self).is_deterministic()
    }
}

/// Where the verifier's challenges come from.
pub trait ChallengeSource {
    /// A value in `0..2^n`.
    fn next_challenge(&mut self, n: usize) -> u32;
}

impl ChallengeSource for ChaCha8Rng {
    fn next_challenge(&mut self, n: usize) -> u32 {
        self.gen_range(0..(1u32 << n))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifierConfig {
    pub repetitions: usize,
    pub rng_seed: u64,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        VerifierConfig {
            repetitions: 3,
            rng_seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum Event {
    Descend {
        path: NodePath,
    },
    ProverQuery {
        path: NodePath,
        response: BitString,
    },
    OracleQuery {
        path: NodePath,
        #[serde(with = "digit")]
        bit: bool,
    },
    Check {
        path: NodePath,
        repetition: usize,
        x_next: BitString,
        #[serde(with = "digit")]
        a: bool,
        #[serde(with = "digit")]
        claimed_bit: bool,
        pass: bool,
    },
    Return {
        path: NodePath,
        #[serde(with = "digit")]
        bit: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AbortReason {
    CheckFailed,
    /// The prover answered with a string of the wrong width.
    MalformedResponse,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum Outcome {
    Accept {
        #[serde(with = "digit")]
        bit: bool,
    },
    Abort {
        path: NodePath,
        /// Failing repetition; absent for malformed responses.
        repetition: Option<usize>,
        reason: AbortReason,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub start: NodePath,
    pub l: usize,
    pub repetitions: usize,
    pub verifier_seed: u64,
    pub events: Vec<Event>,
    pub outcome: Outcome,
    /// Oracle queries made by the verifier during this run.
    pub oracle_queries: u64,
    pub prover_queries: u64,
}

impl Transcript {
    pub fn accepted(&self) -> Option<bool> {
        match self.outcome {
            Outcome::Accept { bit } => Some(bit),
            Outcome::Abort { .. } => None,
        }
    }

    pub fn is_abort(&self) -> bool {
        matches!(self.outcome, Outcome::Abort { .. })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

struct Run<'a, P: ?Sized, C: ?Sized> {
    oracle: &'a CountingOracle,
    prover: &'a mut P,
    challenges: &'a mut C,
    g_variant: GVariant,
    l: usize,
    n: usize,
    repetitions: usize,
    events: Vec<Event>,
    oracle_queries: u64,
    prover_queries: u64,
}

type Step = ControlFlow<Outcome, bool>;

impl<P: ProverEndpoint + ?Sized, C: ChallengeSource + ?Sized> Run<'_, P, C> {
    fn verify(&mut self, path: &mut NodePath) -> Result<Step> {
        if path.depth() == self.l {
            let bit = self.oracle.classical_query(path)?;
            self.oracle_queries += 1;
            self.events.push(Event::OracleQuery {
                path: path.clone(),
                bit,
            });
            return Ok(ControlFlow::Continue(bit));
        }
        self.events.push(Event::Descend { path: path.clone() });
        let claimed = self.prover.respond(path)?;
        self.prover_queries += 1;
        self.events.push(Event::ProverQuery {
            path: path.clone(),
            response: claimed,
        });
        if claimed.width() != self.n {
            return Ok(ControlFlow::Break(Outcome::Abort {
                path: path.clone(),
                repetition: None,
                reason: AbortReason::MalformedResponse,
            }));
        }
        for repetition in 0..self.repetitions {
            let x = BitString::new(self.n, self.challenges.next_challenge(self.n))?;
            path.push(x);
            let a = match self.verify(path)? {
                ControlFlow::Continue(a) => a,
                abort => return Ok(abort),
            };
            path.pop();
            let claimed_bit = inner_product(&claimed, &x)?;
            let pass = a == claimed_bit;
            self.events.push(Event::Check {
                path: path.clone(),
                repetition,
                x_next: x,
                a,
                claimed_bit,
                pass,
            });
            if !pass {
                return Ok(ControlFlow::Break(Outcome::Abort {
                    path: path.clone(),
                    repetition: Some(repetition),
                    reason: AbortReason::CheckFailed,
                }));
            }
        }
        let bit = g_eval(&claimed, self.g_variant);
        self.events.push(Event::Return {
            path: path.clone(),
            bit,
        });
        Ok(ControlFlow::Continue(bit))
    }
}

fn check_inputs(
    oracle: &CountingOracle,
    g_variant: GVariant,
    l: usize,
    repetitions: usize,
    path: &NodePath,
) -> Result<()> {
    let inst = oracle.instance();
    if g_variant != inst.g_variant() || l != inst.l() {
        return Err(RfsError::contract(format!(
            "verifier parameters (g = {g_variant}, l = {l}) disagree with the instance (g = {}, l = {})",
            inst.g_variant(),
            inst.l()
        )));
    }
    if repetitions == 0 {
        return Err(RfsError::contract("verifier needs at least one repetition"));
    }
    inst.validate_path(path)
}

/// Run the verifier from `path` with challenges drawn from `config.rng_seed`.
pub fn run_verifier<P: ProverEndpoint + ?Sized>(
    oracle: &CountingOracle,
    prover: &mut P,
    g_variant: GVariant,
    l: usize,
    config: &VerifierConfig,
    path: &NodePath,
) -> Result<Transcript> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut t = run_verifier_with(
        oracle,
        prover,
        &mut rng,
        g_variant,
        l,
        config.repetitions,
        path,
    )?;
    t.verifier_seed = config.rng_seed;
    Ok(t)
}

/// Run the verifier with an explicit challenge source.
pub fn run_verifier_with<P, C>(
    oracle: &CountingOracle,
    prover: &mut P,
    challenges: &mut C,
    g_variant: GVariant,
    l: usize,
    repetitions: usize,
    path: &NodePath,
) -> Result<Transcript>
where
    P: ProverEndpoint + ?Sized,
    C: ChallengeSource + ?Sized,
{
    check_inputs(oracle, g_variant, l, repetitions, path)?;
    let mut run = Run {
        oracle,
        prover,
        challenges,
        g_variant,
        l,
        n: oracle.instance().n(),
        repetitions,
        events: Vec::new(),
        oracle_queries: 0,
        prover_queries: 0,
    };
    let mut cursor = path.clone();
    let outcome = match run.verify(&mut cursor)? {
        ControlFlow::Continue(bit) => Outcome::Accept { bit },
        ControlFlow::Break(abort) => abort,
    };
    Ok(Transcript {
        start: path.clone(),
        l,
        repetitions,
        verifier_seed: 0,
        events: run.events,
        outcome,
        oracle_queries: run.oracle_queries,
        prover_queries: run.prover_queries,
    })
}

/// Exact outcome probabilities of one verifier run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutcomeProbabilities {
    pub p_accept_correct: BigRational,
    pub p_accept_wrong: BigRational,
    pub p_abort: BigRational,
}

impl OutcomeProbabilities {
    pub fn as_f64(&self) -> (f64, f64, f64) {
        let f = |r: &BigRational| r.to_f64().unwrap_or(f64::NAN);
        (
            f(&self.p_accept_correct),
            f(&self.p_accept_wrong),
            f(&self.p_abort),
        )
    }
}

impl Serialize for OutcomeProbabilities {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let (c, w, a) = self.as_f64();
        let mut st = s.serialize_struct("OutcomeProbabilities", 6)?;
        st.serialize_field("p_accept_correct", &self.p_accept_correct.to_string())?;
        st.serialize_field("p_accept_wrong", &self.p_accept_wrong.to_string())?;
        st.serialize_field("p_abort", &self.p_abort.to_string())?;
        st.serialize_field("p_accept_correct_f64", &c)?;
        st.serialize_field("p_accept_wrong_f64", &w)?;
        st.serialize_field("p_abort_f64", &a)?;
        st.end()
    }
}

/// Probabilities that a sub-run returns 0, returns 1, or aborts.
struct NodeDist {
    accept: [BigRational; 2],
}

/// Exact accept/abort probabilities over all verifier challenge sequences,
/// for a deterministic prover.
///
/// Every child coordinate at every level is enumerated with weight `2^-n`.
/// Repetitions at a node are independent and identically distributed, so a
/// node survives all `c` of them with probability `pass^c`.
pub fn exact_outcome_analysis<P: ProverEndpoint + ?Sized>(
    instance: &Arc<RfsInstance>,
    prover: &mut P,
    g_variant: GVariant,
    config: &VerifierConfig,
) -> Result<OutcomeProbabilities> {
    if !prover.is_deterministic() {
        return Err(RfsError::contract(
            "exact analysis needs a deterministic, stateless prover",
        ));
    }
    if g_variant != instance.g_variant() {
        return Err(RfsError::contract("g variant disagrees with the instance"));
    }
    if config.repetitions == 0 {
        return Err(RfsError::contract("verifier needs at least one repetition"));
    }
    let (n, l, c) = (instance.n(), instance.l(), config.repetitions);
    if n * c * l > EXACT_LOG2_LIMIT {
        return Err(RfsError::contract(format!(
            "exact analysis enumerates (2^n)^(c l) = 2^{} draws, limit 2^{EXACT_LOG2_LIMIT}",
            n * c * l
        )));
    }
    let mut path = NodePath::root();
    let dist = node_dist(instance, prover, g_variant, c, &mut path)?;
    let truth = g_eval(&instance.secret_at(&NodePath::root())?, g_variant);
    let [p0, p1] = dist.accept;
    let (correct, wrong) = if truth { (p1, p0) } else { (p0, p1) };
    let abort = BigRational::one() - &correct - &wrong;
    Ok(OutcomeProbabilities {
        p_accept_correct: correct,
        p_accept_wrong: wrong,
        p_abort: abort,
    })
}

fn node_dist<P: ProverEndpoint + ?Sized>(
    instance: &RfsInstance,
    prover: &mut P,
    g_variant: GVariant,
    repetitions: usize,
    path: &mut NodePath,
) -> Result<NodeDist> {
    let zero = BigRational::zero;
    let n = instance.n();
    if path.depth() == instance.l() {
        let bit = g_eval(&instance.secret_at(path)?, g_variant);
        let mut accept = [zero(), zero()];
        accept[bit as usize] = BigRational::one();
        return Ok(NodeDist { accept });
    }
    let claimed = prover.respond(path)?;
    if claimed.width() != n {
        return Ok(NodeDist {
            accept: [zero(), zero()],
        });
    }
    let mut pass = zero();
    for x in BitString::all(n)? {
        path.push(x);
        let child = node_dist(instance, prover, g_variant, repetitions, path)?;
        path.pop();
        pass += &child.accept[inner_product(&claimed, &x)? as usize];
    }
    pass /= BigRational::from_integer(BigInt::from(1u64 << n));
    let survive = num_traits::pow(pass, repetitions);
    let mut accept = [zero(), zero()];
    accept[g_eval(&claimed, g_variant) as usize] = survive;
    Ok(NodeDist { accept })
}

/// Upper bound on the accept-wrong probability one level up, given the
/// bound `p_next` one level down, for `c` repetitions: `((1 + p_next)/2)^c`.
pub fn soundness_recurrence(p_next: &BigRational, repetitions: usize) -> BigRational {
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    num_traits::pow((BigRational::one() + p_next) * half, repetitions)
}

/// Oracle queries of a full non-aborting run from level `k`: `c^(l-k)`.
pub fn expected_oracle_queries(l: usize, k: usize, repetitions: usize) -> u64 {
    (repetitions as u64).pow((l - k) as u32)
}

/// Prover queries of a full non-aborting run from level `k`:
/// `q_k = 1 + c q_(k+1)`, `q_l = 0`.
pub fn expected_prover_queries(l: usize, k: usize, repetitions: usize) -> u64 {
    (k..l).fold(0u64, |q, _| 1 + repetitions as u64 * q)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Lookup(Arc<RfsInstance>);

    impl ProverEndpoint for Lookup {
        fn respond(&mut self, path: &NodePath) -> Result<BitString> {
            self.0.secret_at(path)
        }
        fn is_deterministic(&self) -> bool {
            true
        }
    }

    struct WrongWidth;

    impl ProverEndpoint for WrongWidth {
        fn respond(&mut self, _: &NodePath) -> Result<BitString> {
            BitString::new(1, 0)
        }
    }

    fn setup(n: usize, l: usize, seed: u64) -> (Arc<RfsInstance>, CountingOracle) {
        let inst = Arc::new(RfsInstance::new(n, l, GVariant::HammingMod3, seed).unwrap());
        let oracle = CountingOracle::new(inst.clone());
        (inst, oracle)
    }

    #[test]
    fn honest_run_accepts_truth_with_exact_counts() {
        for seed in 0..20 {
            let (inst, oracle) = setup(3, 2, seed);
            let mut prover = Lookup(inst.clone());
            let cfg = VerifierConfig {
                repetitions: 3,
                rng_seed: seed * 7,
            };
            let t = run_verifier(
                &oracle,
                &mut prover,
                GVariant::HammingMod3,
                2,
                &cfg,
                &NodePath::root(),
            )
            .unwrap();
            let truth = g_eval(
                &inst.secret_at(&NodePath::root()).unwrap(),
                GVariant::HammingMod3,
            );
            assert_eq!(t.accepted(), Some(truth));
            assert_eq!(t.oracle_queries, 9);
            assert_eq!(t.prover_queries, 4);
            assert_eq!(oracle.counts().classical_queries, t.oracle_queries);
            let oracle_events = t
                .events
                .iter()
                .filter(|e| matches!(e, Event::OracleQuery { .. }))
                .count();
            assert_eq!(oracle_events as u64, t.oracle_queries);
            assert!(t
                .events
                .iter()
                .all(|e| !matches!(e, Event::Check { pass: false, .. })));
        }
    }

    #[test]
    fn leaf_start_is_single_oracle_query() {
        let (inst, oracle) = setup(2, 1, 3);
        let leaf = NodePath::root().child(BitString::new(2, 2).unwrap());
        let t = run_verifier(
            &oracle,
            &mut Lookup(inst),
            GVariant::HammingMod3,
            1,
            &VerifierConfig::default(),
            &leaf,
        )
        .unwrap();
        assert_eq!(t.accepted(), Some(oracle.classical_query(&leaf).unwrap()));
        assert_eq!(t.oracle_queries, 1);
        assert_eq!(t.prover_queries, 0);
    }

    #[test]
    fn malformed_response_aborts() {
        let (_, oracle) = setup(2, 2, 3);
        let t = run_verifier(
            &oracle,
            &mut WrongWidth,
            GVariant::HammingMod3,
            2,
            &VerifierConfig::default(),
            &NodePath::root(),
        )
        .unwrap();
        assert_eq!(
            t.outcome,
            Outcome::Abort {
                path: NodePath::root(),
                repetition: None,
                reason: AbortReason::MalformedResponse
            }
        );
    }

    #[test]
    fn zero_repetitions_rejected() {
        let (inst, oracle) = setup(2, 2, 3);
        let cfg = VerifierConfig {
            repetitions: 0,
            rng_seed: 0,
        };
        assert!(run_verifier(
            &oracle,
            &mut Lookup(inst),
            GVariant::HammingMod3,
            2,
            &cfg,
            &NodePath::root()
        )
        .is_err());
    }

    #[test]
    fn query_count_formulas() {
        assert_eq!(expected_oracle_queries(2, 0, 3), 9);
        assert_eq!(expected_prover_queries(2, 0, 3), 4);
        assert_eq!(expected_prover_queries(3, 0, 3), 13);
        assert_eq!(expected_prover_queries(4, 0, 3), (81 - 1) / 2);
        assert_eq!(expected_prover_queries(2, 2, 3), 0);
    }

    #[test]
    fn recurrence_constant() {
        let quarter = BigRational::new(BigInt::from(1), BigInt::from(4));
        let p = soundness_recurrence(&quarter, 3);
        assert_eq!(p, BigRational::new(BigInt::from(125), BigInt::from(512)));
        assert!(p <= quarter);
    }

    #[test]
    fn exact_analysis_honest() {
        let (inst, _) = setup(2, 2, 5);
        let p = exact_outcome_analysis(
            &inst,
            &mut Lookup(inst.clone()),
            GVariant::HammingMod3,
            &VerifierConfig::default(),
        )
        .unwrap();
        assert!(p.p_accept_correct.is_one());
        assert!(p.p_accept_wrong.is_zero());
        assert!(p.p_abort.is_zero());
    }

    #[test]
    fn exact_analysis_bounds() {
        let (inst, _) = setup(4, 2, 5);
        assert!(exact_outcome_analysis(
            &inst,
            &mut Lookup(inst.clone()),
            GVariant::HammingMod3,
            &VerifierConfig::default()
        )
        .is_err());
        let (inst, _) = setup(2, 2, 5);
        assert!(exact_outcome_analysis(
            &inst,
            &mut WrongWidth,
            GVariant::HammingMod3,
            &VerifierConfig::default()
        )
        .is_err());
    }

    #[test]
    fn transcript_json_shape() {
        let (inst, oracle) = setup(2, 1, 1);
        let t = run_verifier(
            &oracle,
            &mut Lookup(inst),
            GVariant::HammingMod3,
            1,
            &VerifierConfig::default(),
            &NodePath::root(),
        )
        .unwrap();
        let v: serde_json::Value = serde_json::from_str(&t.to_json().unwrap()).unwrap();
        assert_eq!(v["outcome"]["outcome"], "accept");
        assert_eq!(v["events"][0]["event"], "descend");
        assert_eq!(v["events"][1]["event"], "prover-query");
        assert_eq!(v["oracle_queries"], 3);
        let back: Transcript = serde_json::from_value(v).unwrap();
        assert_eq!(back, t);
    }
}
