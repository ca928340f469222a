//! Monte Carlo checks of the session runner against closed-form values.

use std::collections::BTreeMap;

use otsim_core::protocol::{
    alice_infer_choice, bob_partition, epr_answer_test, epr_observe, epr_prepare, run_session,
    Mode, Preparation, ProtocolParams,
};
use otsim_core::qcore::{collapse, measure_subsystem, outcome_probabilities};
use otsim_core::states::{Beta, FamilyTag, StateFamily};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn within_sigmas(successes: u64, n: u64, p: f64, k: f64) -> bool {
    let freq = successes as f64 / n as f64;
    (freq - p).abs() <= k * (p * (1.0 - p) / n as f64).sqrt()
}

fn params(mode: Mode, beta: f64, test_fraction: f64, set_size: usize) -> ProtocolParams {
    ProtocolParams {
        beta: Beta::new(beta).unwrap(),
        n_states: 200,
        test_fraction,
        set_size,
        mode,
        seed: 0,
    }
}

#[test]
fn epr_attack_survives_ten_thousand_tests() {
    let p = params(Mode::EprAlice, 0.5, 0.5, 10);
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut run, mut passed) = (0, 0);
    while run < 10_000 {
        let t = run_session(&p, &mut rng).unwrap();
        assert!(!t.aborted);
        run += t.tests_run();
        passed += t.tests_passed();
    }
    assert_eq!(run, passed);
}

#[test]
fn revealed_bits_are_uniform() {
    let beta = Beta::new(0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let n = 20_000u64;
    let ones: u64 = (0..n)
        .map(|_| u64::from(epr_answer_test(&epr_prepare(beta), beta, &mut rng).unwrap().0))
        .sum();
    assert!(within_sigmas(ones, n, 0.5, 3.0), "{ones}");
}

#[test]
fn observed_family_marginal_and_conditional_e1() {
    let beta = Beta::new(0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let n = 40_000u64;
    let mut prime = 0u64;
    let mut e1 = BTreeMap::<FamilyTag, (u64, u64)>::new();
    for _ in 0..n {
        let joint = epr_prepare(beta);
        let family = epr_observe(&joint, &mut rng).unwrap();
        // Alice first; Bob's e follows on the collapsed state
        let level = otsim_core::states::attack_level(family).unwrap();
        let (post, _) = collapse(&joint, 0, level).unwrap();
        let e = measure_subsystem(&post, 1, &mut rng).unwrap().outcome as u64;
        prime += u64::from(family.tag() == FamilyTag::Prime);
        let slot = e1.entry(family.tag()).or_default();
        slot.0 += e;
        slot.1 += 1;
    }
    assert!(within_sigmas(prime, n, 0.5, 3.0));
    let (ones, total) = e1[&FamilyTag::Prime];
    assert!(within_sigmas(ones, total, 0.375, 3.0));
    let (ones, total) = e1[&FamilyTag::DoublePrime];
    assert!(within_sigmas(ones, total, 0.125, 3.0));
}

#[test]
fn measurement_order_does_not_change_joint_distribution() {
    for b in [0.2, 0.5, 1.0] {
        let joint = epr_prepare(Beta::new(b).unwrap());
        for level in 0..4 {
            for e in 0..2 {
                let alice_first = {
                    let (post, pa) = collapse(&joint, 0, level).unwrap();
                    pa * outcome_probabilities(&post, 1).unwrap()[e]
                };
                let bob_first = {
                    let (post, pb) = collapse(&joint, 1, e).unwrap();
                    pb * outcome_probabilities(&post, 0).unwrap()[level]
                };
                assert!((alice_first - bob_first).abs() < 1e-14);
            }
        }
    }
}

#[test]
fn naive_abort_rate_matches_overlap_oracle() {
    // P(no failure) = (1 - t + t·p)^n with p the squared overlap
    let overlap = ((0.75f64 * 0.625).sqrt() + (0.25f64 * 0.375).sqrt()).powi(2);
    let expected = 1.0 - (0.5 + 0.5 * overlap).powi(200);
    assert!((expected - 0.8399).abs() < 1e-4);

    let p = params(Mode::NaiveCheatAlice, 0.5, 0.5, 10);
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let sessions = 3000u64;
    let aborted = (0..sessions)
        .filter(|_| run_session(&p, &mut rng).unwrap().aborted)
        .count() as u64;
    assert!(within_sigmas(aborted, sessions, expected, 3.0), "{aborted}");
}

#[test]
fn partition_prime_fractions_follow_posteriors() {
    let p = params(Mode::EprAlice, 0.5, 0.25, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let (mut rc_prime, mut other_prime, mut count) = (0u64, 0u64, 0u64);
    while count < 20_000 {
        let t = run_session(&p, &mut rng).unwrap();
        let Some((rc, other)) = t.chosen_and_other() else { continue };
        if !t.completed() {
            continue;
        }
        let is_prime = |i: &usize| {
            u64::from(t.records[*i].alice_observation.unwrap().tag() == FamilyTag::Prime)
        };
        rc_prime += rc.iter().map(is_prime).sum::<u64>();
        other_prime += other.iter().map(is_prime).sum::<u64>();
        count += rc.len() as u64;
    }
    assert!(within_sigmas(rc_prime, count, 0.75, 3.0), "{rc_prime}/{count}");
    assert!(within_sigmas(other_prime, count, 5.0 / 12.0, 3.0), "{other_prime}/{count}");
}

#[test]
fn honest_partition_is_independent_of_choice() {
    // 2x2 contingency: (chosen set, other set) x (sign bit 0, 1)
    let p = params(Mode::HonestAlice, 0.5, 0.25, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut table = [[0f64; 2]; 2];
    for _ in 0..1000 {
        let t = run_session(&p, &mut rng).unwrap();
        let Some((rc, other)) = t.chosen_and_other() else { continue };
        if !t.completed() {
            continue;
        }
        for (row, set) in [rc, other].into_iter().enumerate() {
            for i in set {
                let Preparation::Family(f) = t.records[*i].prepared else { panic!() };
                table[row][f.sign_bit() as usize] += 1.0;
            }
        }
    }
    let total: f64 = table.iter().flatten().sum();
    let mut chi2 = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            let expected = (table[r][0] + table[r][1]) * (table[0][c] + table[1][c]) / total;
            chi2 += (table[r][c] - expected).powi(2) / expected;
        }
    }
    // 1 degree of freedom, p = 0.001
    assert!(chi2 < 10.83, "chi2 {chi2}");
}

#[test]
fn blind_guessing_has_no_advantage() {
    let p = params(Mode::HonestAlice, 0.5, 0.25, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let (mut correct, mut n) = (0u64, 0u64);
    for _ in 0..4000 {
        let t = run_session(&p, &mut rng).unwrap();
        if !t.completed() {
            continue;
        }
        // a probe with no observations ties on every set pair
        let all_tied: BTreeMap<usize, StateFamily> = t
            .r0
            .iter()
            .chain(&t.r1)
            .map(|&i| (i, StateFamily::new(FamilyTag::Honest, 0).unwrap()))
            .collect();
        let guess = alice_infer_choice(&all_tied, &t.r0, &t.r1, &mut rng).unwrap();
        correct += u64::from(Some(guess) == t.bob_choice);
        n += 1;
    }
    assert!(within_sigmas(correct, n, 0.5, 3.0), "{correct}/{n}");
}

#[test]
fn partition_draws_are_uniform_within_pool() {
    let e: BTreeMap<usize, u8> = (0..10).map(|i| (i, u8::from(i < 4))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let mut hits = [0u64; 4];
    let draws = 20_000u64;
    for _ in 0..draws {
        let (r0, _) = bob_partition(&e, 0, 1, &mut rng).unwrap();
        hits[r0[0]] += 1;
    }
    for h in hits {
        assert!(within_sigmas(h, draws, 0.25, 3.5), "{hits:?}");
    }
}
