use rand::seq::{index, SliceRandom};
use serde::Serialize;

use super::{
    intersect, AttackError, AttackerModel, AttackerState, BlockHint, Candidate, Observation,
    PoolState, Solver,
};
use crate::challenge::generate_challenge;
use crate::error::SchemeError;
use crate::params::{ImageId, SchemeParams};
use crate::profile::{create_profile, PasswordProfile};
use crate::rng::{derive_seed, rng_from_seed};
use crate::verify::{expected_codes, verify};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimLimits {
    /// Observations after which the attacker gives up.
    pub max_sessions: usize,
    /// Keep observing at least this long even once the password is
    /// recovered, to extend the candidate trajectory.
    pub min_sessions: usize,
}

impl SimLimits {
    pub fn up_to(max_sessions: usize) -> Self {
        SimLimits {
            max_sessions,
            min_sessions: 0,
        }
    }
}

/// Candidate-set sizes after one observation, one entry per pass-image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SessionStats {
    pub session: usize,
    pub image_candidates: Vec<usize>,
    pub pair_candidates: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackReport {
    pub converged: bool,
    pub sessions_until_unique: Option<usize>,
    /// Observations the attacker consumed in total.
    pub observations: usize,
    /// CAPTCHAs read over all consumed observations.
    pub captchas_solved: u64,
    /// CAPTCHAs read up to the moment of recovery.
    pub captchas_to_unique: Option<u64>,
    pub trajectory: Vec<SessionStats>,
    pub recovered: Option<PasswordProfile>,
    pub recovered_verifies: Option<bool>,
    pub note: String,
}

/// A profile of `block_lens.len()` distinct pool images with uniformly
/// random position sets of the given sizes.
pub fn random_profile(
    params: &SchemeParams,
    block_lens: &[usize],
    seed: u64,
) -> Result<PasswordProfile, SchemeError> {
    let mut rng = rng_from_seed(seed);
    if block_lens.len() > params.image_pool.len() {
        return Err(SchemeError::PoolTooSmall {
            pool: params.image_pool.len(),
            needed: block_lens.len(),
        });
    }
    let images: Vec<ImageId> = index::sample(&mut rng, params.image_pool.len(), block_lens.len())
        .into_iter()
        .map(|i| params.image_pool[i].clone())
        .collect();
    if let Some(&n) = block_lens.iter().find(|&&n| n > params.string_len) {
        return Err(SchemeError::PositionOutOfRange {
            position: n,
            max: params.string_len,
        });
    }
    let positions: Vec<Vec<usize>> = block_lens
        .iter()
        .map(|&n| {
            index::sample(&mut rng, params.string_len, n)
                .into_iter()
                .map(|i| i + 1)
                .collect()
        })
        .collect();
    create_profile("victim", &images, &positions, params)
}

fn session_stats(session: usize, state: &AttackerState) -> SessionStats {
    SessionStats {
        session,
        image_candidates: state.segments.iter().map(|s| s.images.len()).collect(),
        pair_candidates: state.segments.iter().map(|s| s.pairs.len()).collect(),
    }
}

/// Runs the victim through successive logins while the attacker records
/// each one, until the attacker pins down the password or gives up.
///
/// The victim answers every challenge correctly and types its blocks in a
/// fresh uniformly random order each session. Session `i` uses challenge
/// seed `derive_seed(seed, i)`.
pub fn simulate_attack(
    profile: &PasswordProfile,
    params: &SchemeParams,
    attacker: &AttackerModel,
    limits: &SimLimits,
    seed: u64,
) -> Result<AttackReport, AttackError> {
    let mut victim_rng = rng_from_seed(derive_seed(seed, u64::MAX - 1));
    let grid = params.grid_size as u64;
    let mut report = AttackReport {
        converged: false,
        sessions_until_unique: None,
        observations: 0,
        captchas_solved: 0,
        captchas_to_unique: None,
        trajectory: Vec::new(),
        recovered: None,
        recovered_verifies: None,
        note: String::new(),
    };
    let mut state = AttackerState::new();
    let mut pool = PoolState::new();

    for session in 1..=limits.max_sessions {
        let challenge = generate_challenge(profile, params, derive_seed(seed, session as u64))?;
        let codes = expected_codes(profile, &challenge)?;
        let mut order: Vec<usize> = (0..codes.len()).collect();
        order.shuffle(&mut victim_rng);
        let typed: String = order.iter().map(|&i| codes[i].as_str()).collect();
        let blocks = order
            .iter()
            .map(|&i| BlockHint {
                owner: i,
                len: codes[i].chars().count(),
            })
            .collect();
        let mut obs = Observation::from_challenge(&challenge, typed);
        if attacker.knows_segmentation {
            obs = obs.with_blocks(blocks);
        }

        if attacker.solver == Solver::None {
            // Recording is free but nothing on screen can be read.
            continue;
        }
        if let Some(budget) = attacker.solver_budget {
            if report.captchas_solved + grid > budget {
                report.note = format!("solver budget of {budget} CAPTCHAs exhausted");
                break;
            }
        }

        let found = if attacker.knows_segmentation {
            state = intersect(state, &obs, attacker)?;
            report.trajectory.push(session_stats(session, &state));
            report.captchas_solved = state.captchas_solved;
            state.recovered()
        } else {
            pool.observe(&obs, attacker, params.min_pass_images)?;
            report.trajectory.push(SessionStats {
                session,
                image_candidates: vec![pool
                    .pairs
                    .iter()
                    .map(|c| &c.image)
                    .collect::<std::collections::BTreeSet<_>>()
                    .len()],
                pair_candidates: vec![pool.pairs.len()],
            });
            report.captchas_solved = pool.captchas_solved;
            pool.unique_profile(params.min_pass_images)
        };
        report.observations = session;

        if report.recovered.is_none() {
            if let Some(cands) = found {
                report.converged = true;
                report.sessions_until_unique = Some(session);
                report.captchas_to_unique = Some(report.captchas_solved);
                let recovered = profile_from(&cands, params)?;
                report.recovered_verifies = Some(login_with(&recovered, profile, params, seed)?);
                report.recovered = Some(recovered);
            }
        }
        if report.recovered.is_some() && session >= limits.min_sessions {
            break;
        }
    }

    if !report.converged && report.note.is_empty() {
        report.note = match attacker.solver {
            Solver::None => "CAPTCHAs unreadable: no candidate elimination possible".into(),
            Solver::Oracle => format!("not unique after {} sessions", report.observations),
        };
    }
    Ok(report)
}

fn profile_from(cands: &[Candidate], params: &SchemeParams) -> Result<PasswordProfile, SchemeError> {
    let images: Vec<ImageId> = cands.iter().map(|c| c.image.clone()).collect();
    let positions: Vec<Vec<usize>> = cands.iter().map(|c| c.positions.clone()).collect();
    let params = params.clone().with_min_pass_images(1);
    create_profile("recovered", &images, &positions, &params)
}

/// Attacker logs in as the victim on a fresh challenge using the recovered
/// profile.
fn login_with(
    recovered: &PasswordProfile,
    victim: &PasswordProfile,
    params: &SchemeParams,
    seed: u64,
) -> Result<bool, SchemeError> {
    let mut fresh = generate_challenge(victim, params, derive_seed(seed, u64::MAX))?;
    let typed: String = match expected_codes(recovered, &fresh) {
        Ok(codes) => codes.concat(),
        Err(_) => return Ok(false),
    };
    Ok(verify(victim, &mut fresh, &typed, 0)?.is_accept())
}

/// Aggregate over independent trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSummary {
    pub trials: usize,
    pub converged: usize,
    /// Mean coarse candidate count per segment after `s` observations,
    /// `s = 1..`, over trials that reached `s`.
    pub mean_image_candidates: Vec<f64>,
    pub mean_pair_candidates: Vec<f64>,
    pub sessions_median: Option<f64>,
    pub sessions_p10: Option<usize>,
    pub sessions_p90: Option<usize>,
    pub mean_captchas_to_unique: Option<f64>,
    pub all_recovered_verify: bool,
}

/// Runs `trials` simulations. Trial `i` draws a random profile with the
/// given block lengths and simulates with seed `derive_seed(seed, i)`.
pub fn run_trials(
    params: &SchemeParams,
    block_lens: &[usize],
    attacker: &AttackerModel,
    limits: &SimLimits,
    trials: usize,
    seed: u64,
) -> Result<(TrialSummary, Vec<AttackReport>), AttackError> {
    let mut reports = Vec::with_capacity(trials);
    for i in 0..trials {
        let trial_seed = derive_seed(seed, i as u64);
        let profile = random_profile(params, block_lens, derive_seed(trial_seed, 0xA11CE))?;
        reports.push(simulate_attack(&profile, params, attacker, limits, trial_seed)?);
    }
    Ok((summarize(&reports), reports))
}

pub fn summarize(reports: &[AttackReport]) -> TrialSummary {
    let horizon = reports.iter().map(|r| r.trajectory.len()).max().unwrap_or(0);
    let mean_at = |s: usize, pick: &dyn Fn(&SessionStats) -> &Vec<usize>| {
        let vals: Vec<usize> = reports
            .iter()
            .filter_map(|r| r.trajectory.get(s))
            .flat_map(|st| pick(st).iter().copied())
            .collect();
        vals.iter().sum::<usize>() as f64 / vals.len().max(1) as f64
    };
    let mean_image_candidates = (0..horizon).map(|s| mean_at(s, &|st| &st.image_candidates)).collect();
    let mean_pair_candidates = (0..horizon).map(|s| mean_at(s, &|st| &st.pair_candidates)).collect();

    let mut sessions: Vec<usize> = reports.iter().filter_map(|r| r.sessions_until_unique).collect();
    sessions.sort_unstable();
    let converged = sessions.len();
    // Trials that never converge count as +inf for the quantiles.
    let quantile = |q: f64| -> Option<usize> {
        if reports.is_empty() {
            return None;
        }
        let idx = ((reports.len() as f64 - 1.0) * q).round() as usize;
        sessions.get(idx).copied()
    };
    let sessions_median = if reports.is_empty() {
        None
    } else {
        let n = reports.len();
        let lo = sessions.get((n - 1) / 2).copied();
        let hi = sessions.get(n / 2).copied();
        match (lo, hi) {
            (Some(a), Some(b)) => Some((a + b) as f64 / 2.0),
            _ => None,
        }
    };
    let costs: Vec<u64> = reports.iter().filter_map(|r| r.captchas_to_unique).collect();
    TrialSummary {
        trials: reports.len(),
        converged,
        mean_image_candidates,
        mean_pair_candidates,
        sessions_median,
        sessions_p10: quantile(0.1),
        sessions_p90: quantile(0.9),
        mean_captchas_to_unique: (!costs.is_empty())
            .then(|| costs.iter().sum::<u64>() as f64 / costs.len() as f64),
        all_recovered_verify: reports
            .iter()
            .filter(|r| r.converged)
            .all(|r| r.recovered_verifies == Some(true)),
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_attacker_recovers_profile() {
        let params = SchemeParams::analytical();
        let profile = random_profile(&params, &[1, 1, 1], 9).unwrap();
        let r = simulate_attack(&profile, &params, &AttackerModel::oracle(), &SimLimits::up_to(20), 3)
            .unwrap();
        assert!(r.converged, "{}", r.note);
        let s = r.sessions_until_unique.unwrap();
        assert_eq!(r.captchas_to_unique, Some(100 * s as u64));
        assert_eq!(r.recovered_verifies, Some(true));
        let rec = r.recovered.unwrap();
        let mut got: Vec<_> = rec.pass_images().to_vec();
        let mut want: Vec<_> = profile.pass_images().to_vec();
        got.sort_by(|a, b| a.image.cmp(&b.image));
        want.sort_by(|a, b| a.image.cmp(&b.image));
        assert_eq!(got, want);
    }

    #[test]
    fn blind_attacker_never_converges() {
        let params = SchemeParams::analytical();
        let profile = random_profile(&params, &[1, 1, 1], 9).unwrap();
        let r = simulate_attack(&profile, &params, &AttackerModel::blind(), &SimLimits::up_to(10), 3)
            .unwrap();
        assert!(!r.converged);
        assert!(r.recovered.is_none());
        assert_eq!(r.captchas_solved, 0);
        assert!(r.note.contains("unreadable"));
    }

    #[test]
    fn budget_stops_the_attack() {
        let params = SchemeParams::analytical();
        let profile = random_profile(&params, &[1, 1, 1], 9).unwrap();
        let model = AttackerModel {
            solver_budget: Some(250),
            ..AttackerModel::oracle()
        };
        let r = simulate_attack(&profile, &params, &model, &SimLimits::up_to(10), 3).unwrap();
        assert!(r.captchas_solved <= 250);
        assert!(!r.converged);
        assert!(r.note.contains("budget"));
    }

    #[test]
    fn unsegmented_attacker_recovers_eventually() {
        let params = SchemeParams::new(30, 8);
        let profile = random_profile(&params, &[1, 2, 1], 4).unwrap();
        let r = simulate_attack(
            &profile,
            &params,
            &AttackerModel::unsegmented(),
            &SimLimits::up_to(30),
            11,
        )
        .unwrap();
        assert!(r.converged, "{}", r.note);
        assert_eq!(r.recovered_verifies, Some(true));
    }

    #[test]
    fn deterministic() {
        let params = SchemeParams::analytical();
        let a = run_trials(&params, &[1, 1, 1], &AttackerModel::oracle(), &SimLimits::up_to(10), 5, 77)
            .unwrap();
        let b = run_trials(&params, &[1, 1, 1], &AttackerModel::oracle(), &SimLimits::up_to(10), 5, 77)
            .unwrap();
        assert_eq!(a, b);
    }
}
