use beliefminer_core::collection::{
    generate_verification_code, NetworkAlteration, Protocol, Session, SessionError, Stage,
};
use beliefminer_core::formats::LinkRef;
use beliefminer_core::network::{AlterationAction, AlterationKind, Side};
use beliefminer_core::ProtocolProfile;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
enum Call {
    Test(bool),
    Demographics { answers: usize, sassy: Vec<u8> },
    Link { cause: usize, effect: usize, first: Option<Side> },
    Alteration(Vec<(usize, u8)>),
    Confidence(i64),
    Usability(Vec<i64>),
    Complete,
}

fn call() -> impl Strategy<Value = Call> {
    prop_oneof![
        any::<bool>().prop_map(Call::Test),
        (7usize..=9, prop::collection::vec(0u8..6, 3..=5))
            .prop_map(|(answers, sassy)| Call::Demographics { answers, sassy }),
        (0usize..32, 0usize..32, prop::option::of(prop_oneof![Just(Side::Cause), Just(Side::Effect)]))
            .prop_map(|(cause, effect, first)| Call::Link { cause, effect, first }),
        prop::collection::vec((0usize..7, 0u8..3), 0..3).prop_map(Call::Alteration),
        (-1i64..8).prop_map(Call::Confidence),
        prop::collection::vec(0i64..7, 6..=8).prop_map(Call::Usability),
        Just(Call::Complete),
    ]
}

fn apply(s: &mut Session, p: &Protocol, c: &Call, n: &mut u64) -> Result<(), SessionError> {
    let names: Vec<&str> = p.catalog.attributes().iter().map(|a| a.display()).collect();
    match c {
        Call::Test(pass) => {
            let answer = if *pass {
                p.gate.clone()
            } else {
                LinkRef { cause: p.gate.effect.clone(), effect: p.gate.cause.clone() }
            };
            s.submit_test(p, &answer).map(drop)
        }
        Call::Demographics { answers, sassy } => {
            s.submit_demographics(p, vec![None; *answers], sassy.clone()).map(drop)
        }
        Call::Link { cause, effect, first } => {
            let l = LinkRef { cause: names[*cause].into(), effect: names[*effect].into() };
            s.submit_link(p, &l, *first).map(drop)
        }
        Call::Alteration(actions) => {
            let actions: Vec<NetworkAlteration> = actions
                .iter()
                .map(|&(i, k)| NetworkAlteration {
                    network: 0,
                    action: AlterationAction::new(
                        i,
                        [AlterationKind::ChangeDirection, AlterationKind::Delete, AlterationKind::NoOp][k as usize],
                    ),
                })
                .collect();
            s.submit_alteration(p, &actions)
        }
        Call::Confidence(v) => s.submit_confidence(*v),
        Call::Usability(r) => s.submit_usability(p, r),
        Call::Complete => {
            *n += 1;
            let code = generate_verification_code(&mut ChaCha8Rng::seed_from_u64(*n));
            s.complete(p, code).map(drop)
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn random_call_sequences(calls in prop::collection::vec(call(), 1..60)) {
        let p = Protocol::bundled(ProtocolProfile::final_study());
        let mut s = Session::new("s", 1, &p, &mut ChaCha8Rng::seed_from_u64(0));
        let mut completions = 0;
        let mut n = 0;
        for c in &calls {
            let before = s.clone();
            match apply(&mut s, &p, c, &mut n) {
                Ok(()) => {
                    prop_assert!(s.stage >= before.stage);
                    let step = Stage::ALL.iter().position(|x| *x == s.stage).unwrap()
                        - Stage::ALL.iter().position(|x| *x == before.stage).unwrap();
                    // Instructions may jump straight to Demographics on a passed test
                    prop_assert!(step <= 1 || (before.stage == Stage::Instructions && s.stage == Stage::Demographics));
                    if s.stage == Stage::Complete && before.stage != Stage::Complete {
                        completions += 1;
                    }
                }
                Err(_) => prop_assert_eq!(&s, &before),
            }
            prop_assert!(s.networks.iter().all(|n| n.len() <= p.profile.links_per_network));
            prop_assert_eq!(s.verification_code.is_some(), s.stage == Stage::Complete);
            if s.stage == Stage::Complete {
                let nets = s.finalized_networks(&p).unwrap();
                prop_assert!(nets.iter().all(|n| n.is_tree()));
            }
        }
        prop_assert!(completions <= 1);
    }
}
