use captchapass_core::attack::{
    intersect, random_profile, replay_attack, AttackerModel, AttackerState, BlockHint,
    Observation,
};
use captchapass_core::rng::{derive_seed, rng_from_seed};
use captchapass_core::{expected_codes, generate_challenge, SchemeParams};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn session(
    profile: &captchapass_core::PasswordProfile,
    params: &SchemeParams,
    seed: u64,
) -> Observation {
    let ch = generate_challenge(profile, params, seed).unwrap();
    let codes = expected_codes(profile, &ch).unwrap();
    let mut order: Vec<usize> = (0..codes.len()).collect();
    order.shuffle(&mut rng_from_seed(seed ^ 1));
    let typed: String = order.iter().map(|&i| codes[i].as_str()).collect();
    Observation::from_challenge(&ch, typed).with_blocks(
        order
            .iter()
            .map(|&i| BlockHint { owner: i, len: codes[i].len() })
            .collect(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn candidates_shrink_and_truth_survives(
        lens in prop::collection::vec(1usize..=3, 3..=4),
        seed in any::<u64>(),
    ) {
        let params = SchemeParams::new(30, 8);
        let profile = random_profile(&params, &lens, seed).unwrap();
        let model = AttackerModel::oracle();
        let mut state = AttackerState::new();
        let mut prev: Option<AttackerState> = None;
        for s in 0..5u64 {
            state = intersect(state, &session(&profile, &params, derive_seed(seed, s)), &model).unwrap();
            for (i, pi) in profile.pass_images().iter().enumerate() {
                let seg = &state.segments[i];
                prop_assert!(seg.images.contains(&pi.image));
                prop_assert!(seg.pairs.iter().any(|c| c.image == pi.image && c.positions == pi.positions));
                if let Some(p) = &prev {
                    prop_assert!(seg.pairs.is_subset(&p.segments[i].pairs));
                    prop_assert!(seg.images.is_subset(&p.segments[i].images));
                }
            }
            prop_assert_eq!(state.captchas_solved, 30 * state.observations as u64);
            prev = Some(state.clone());
        }
    }
}

#[test]
fn replay_against_same_challenge_succeeds() {
    let params = SchemeParams::experimental();
    let profile = random_profile(&params, &[1, 1, 1], 5).unwrap();
    let obs = session(&profile, &params, 10);
    let same = generate_challenge(&profile, &params, 10).unwrap();
    assert!(replay_attack(&obs, &same, &profile));
    let fresh = generate_challenge(&profile, &params, 11).unwrap();
    // Fails with overwhelming probability (1 - 6/26^3).
    assert!(!replay_attack(&obs, &fresh, &profile));
}
