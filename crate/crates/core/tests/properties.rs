use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;

use rfs_core::protocol::{
    exact_outcome_analysis, run_verifier, run_verifier_with, soundness_recurrence, ChallengeSource,
    VerifierConfig,
};
use rfs_core::provers::{make_prover, ProverKind};
use rfs_core::{g_eval, inner_product, BitString, CountingOracle, GVariant, NodePath, RfsInstance};

const G: GVariant = GVariant::HammingMod3;

fn bits(n: usize) -> impl Strategy<Value = BitString> {
    (0..1u32 << n).prop_map(move |v| BitString::new(n, v).unwrap())
}

proptest! {
    #[test]
    fn inner_product_bilinear(n in 1usize..=24, a in any::<u32>(), b in any::<u32>(), x in any::<u32>()) {
        let mask = (1u64 << n) as u32 - 1;
        let [a, b, x] = [a, b, x].map(|v| BitString::new(n, v & mask).unwrap());
        let lhs = inner_product(&a.xor(&b).unwrap(), &x).unwrap();
        prop_assert_eq!(lhs, inner_product(&a, &x).unwrap() ^ inner_product(&b, &x).unwrap());
        prop_assert_eq!(inner_product(&a, &x).unwrap(), inner_product(&x, &a).unwrap());
    }

    #[test]
    fn text_form_round_trips(s in (1usize..=24).prop_flat_map(bits)) {
        let text = s.to_string();
        prop_assert_eq!(text.len(), s.width());
        prop_assert_eq!(text.parse::<BitString>().unwrap(), s);
        let json = serde_json::to_string(&s).unwrap();
        prop_assert_eq!(serde_json::from_str::<BitString>(&json).unwrap(), s);
    }

    #[test]
    fn promise_holds_on_random_edges(
        seed in any::<u64>(),
        (n, l, parts) in (1usize..=10, 1usize..=6)
            .prop_flat_map(|(n, l)| (Just(n), Just(l), prop::collection::vec(0..1u32 << n, l)))
    ) {
        let inst = RfsInstance::new(n, l, G, seed).unwrap();
        let leaf: Vec<_> = parts.iter().map(|&v| BitString::new(n, v).unwrap()).collect();
        for d in 1..=l {
            let child = NodePath::from_parts(leaf[..d].to_vec());
            let parent = child.parent().unwrap();
            let s_parent = inst.secret_at(&parent).unwrap();
            let s_child = inst.secret_at(&child).unwrap();
            prop_assert_eq!(
                g_eval(&s_child, G),
                inner_product(&s_parent, child.last().unwrap()).unwrap()
            );
        }
    }

    #[test]
    fn honest_verifier_always_accepts(seed in any::<u64>(), vseed in any::<u64>(), n in 1usize..=6, l in 1usize..=3) {
        let o = Arc::new(CountingOracle::new(Arc::new(RfsInstance::new(n, l, G, seed).unwrap())));
        let mut p = make_prover(ProverKind::HonestLookup, &o, 0).unwrap();
        let cfg = VerifierConfig { repetitions: 3, rng_seed: vseed };
        let t = run_verifier(&o, &mut p, G, l, &cfg, &NodePath::root()).unwrap();
        let truth = g_eval(&o.instance().secret_at(&NodePath::root()).unwrap(), G);
        prop_assert_eq!(t.accepted(), Some(truth));
    }
}

/// Replays a fixed challenge sequence.
struct Scripted {
    seq: Vec<u32>,
    pos: usize,
}

impl ChallengeSource for Scripted {
    fn next_challenge(&mut self, _n: usize) -> u32 {
        let v = self.seq[self.pos];
        self.pos += 1;
        v
    }
}

/// Draws a full run may consume: `c` at the start node plus `c` times those of a child.
fn max_draws(l: usize, c: usize) -> usize {
    (0..l).fold(0, |acc, _| c + c * acc)
}

/// Accept-correct / accept-wrong / abort by running the verifier on every
/// challenge sequence of maximal length.
fn enumerate(o: &Arc<CountingOracle>, kind: ProverKind, c: usize) -> [BigRational; 3] {
    let inst = o.instance();
    let (n, l) = (inst.n(), inst.l());
    let truth = g_eval(&inst.secret_at(&NodePath::root()).unwrap(), G);
    let draws = max_draws(l, c);
    let total = 1u64 << (n * draws);
    let mut counts = [0u64; 3];
    for code in 0..total {
        let seq = (0..draws)
            .map(|i| ((code >> (n * i)) & ((1 << n) - 1)) as u32)
            .collect();
        let mut p = make_prover(kind, o, 0).unwrap();
        let t = run_verifier_with(
            o.as_ref(),
            &mut p,
            &mut Scripted { seq, pos: 0 },
            G,
            l,
            c,
            &NodePath::root(),
        )
        .unwrap();
        let slot = match t.accepted() {
            Some(b) if b == truth => 0,
            Some(_) => 1,
            None => 2,
        };
        counts[slot] += 1;
    }
    counts.map(|k| BigRational::new(BigInt::from(k), BigInt::from(total)))
}

#[test]
fn exact_analysis_matches_literal_enumeration() {
    // (n, l, c): 2^(n * draws) sequences each
    for (n, l, c) in [(2, 2, 2), (2, 1, 3), (3, 1, 3), (1, 3, 2)] {
        for seed in 0..3 {
            let inst = Arc::new(RfsInstance::new(n, l, G, 40 + seed).unwrap());
            let o = Arc::new(CountingOracle::new(inst.clone()));
            let mut kinds = vec![
                ProverKind::HonestLookup,
                ProverKind::RootFlip,
                ProverKind::GPreservingLie,
            ];
            kinds.extend((0..l).map(ProverKind::LevelFlip));
            for kind in kinds {
                let mut p = make_prover(kind, &o, 0).unwrap();
                let cfg = VerifierConfig {
                    repetitions: c,
                    rng_seed: 0,
                };
                let exact = exact_outcome_analysis(&inst, &mut p, G, &cfg).unwrap();
                let [correct, wrong, abort] = enumerate(&o, kind, c);
                assert_eq!(exact.p_accept_correct, correct, "{kind} n={n} l={l} c={c}");
                assert_eq!(exact.p_accept_wrong, wrong, "{kind} n={n} l={l} c={c}");
                assert_eq!(exact.p_abort, abort, "{kind} n={n} l={l} c={c}");
            }
        }
    }
}

#[test]
fn subtree_accept_wrong_follows_recurrence() {
    // bound at level k from level k+1, starting from 0 at the leaves
    let (n, l, c) = (3, 3, 3);
    let mut bounds = vec![BigRational::zero(); l + 1];
    for k in (0..l).rev() {
        bounds[k] = soundness_recurrence(&bounds[k + 1], c);
    }
    assert_eq!(
        bounds[l - 1],
        BigRational::new(BigInt::one(), BigInt::from(8))
    );

    let trials = 4000u64;
    for kind in ProverKind::adversaries(l) {
        for (k, bound) in bounds.iter().enumerate().take(l) {
            let bound = bound.to_f64().unwrap();
            let mut wrong = 0u64;
            for t in 0..trials {
                let inst = Arc::new(RfsInstance::new(n, l, G, 10_000 + t).unwrap());
                let o = Arc::new(CountingOracle::new(inst.clone()));
                let path = NodePath::from_parts(
                    (0..k)
                        .map(|i| BitString::new(n, ((t >> (3 * i)) & 7) as u32).unwrap())
                        .collect(),
                );
                let mut p = make_prover(kind, &o, t).unwrap();
                let cfg = VerifierConfig {
                    repetitions: c,
                    rng_seed: t ^ 0xABCD,
                };
                let tr = run_verifier(&o, &mut p, G, l, &cfg, &path).unwrap();
                let truth = g_eval(&inst.secret_at(&path).unwrap(), G);
                if tr.accepted() == Some(!truth) {
                    wrong += 1;
                }
            }
            let rate = wrong as f64 / trials as f64;
            let slack = 3.0 * (bound * (1.0 - bound) / trials as f64).sqrt();
            assert!(
                rate <= bound + slack,
                "{kind} from level {k}: {rate} > {bound}"
            );
        }
    }
}
