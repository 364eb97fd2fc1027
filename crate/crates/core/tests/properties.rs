//! Property tests spanning the core modules.

use combat_core::adversary::{Adversary, AdversaryConfig, AdversaryKind, CdnAdversary};
use combat_core::hull::{decompose_hull_point, omd_step, HullPoint};
use combat_core::model::{
    batch_schedule_broad, batch_schedule_exp2, batch_schedule_experiment, switch_distance,
    CombinatorialArm, FeedbackMode, LossVector, ProblemSpec, RegretLedger,
};
use proptest::prelude::*;

fn arb_spec() -> impl Strategy<Value = ProblemSpec> {
    (1usize..=24, 1usize..=5000, 0.0f64..8.0).prop_flat_map(|(k, t, lambda)| {
        (1usize..=k).prop_map(move |i| ProblemSpec::new(k, i, t, lambda).unwrap())
    })
}

proptest! {
    #[test]
    fn schedules_sum_to_horizon(spec in arb_spec()) {
        for schedule in [
            batch_schedule_exp2(&spec),
            batch_schedule_broad(&spec),
            batch_schedule_experiment(&spec, FeedbackMode::Bandit),
            batch_schedule_experiment(&spec, FeedbackMode::SemiBandit),
        ] {
            prop_assert_eq!(schedule.total_rounds(), spec.horizon);
            prop_assert!(schedule.num_batches() >= 1);
            prop_assert!(schedule.lengths().iter().all(|&b| b >= 1));
            // All batches share the nominal length except possibly the last.
            let nominal = schedule.nominal_len();
            for &len in &schedule.lengths()[..schedule.num_batches() - 1] {
                prop_assert_eq!(len, nominal);
            }
        }
    }
}

fn arb_subset(k: usize, i: usize) -> impl Strategy<Value = CombinatorialArm> {
    Just(()).prop_perturb(move |_, mut rng| {
        let mut pool: Vec<usize> = (0..k).collect();
        for j in 0..i {
            let pick = j + (rng.next_u64() as usize) % (k - j);
            pool.swap(j, pick);
        }
        let mut idx = pool[..i].to_vec();
        idx.sort_unstable();
        CombinatorialArm::from_indices(k, &idx, i).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn switch_distance_sums_are_half_integers_with_floor(
        (_k, i, arms) in (2usize..=10).prop_flat_map(|k| {
            (Just(k), 1usize..=k).prop_flat_map(|(k, i)| {
                (Just(k), Just(i), prop::collection::vec(arb_subset(k, i), 1..12))
            })
        })
    ) {
        let mut prev: Option<CombinatorialArm> = None;
        let mut total = 0.0;
        for arm in arms {
            let d = switch_distance(&arm, prev.as_ref()).unwrap();
            prop_assert!(d >= 0.0 && d <= i as f64);
            // Every summand is a half-integer.
            prop_assert!((d * 2.0 - (d * 2.0).round()).abs() < 1e-12);
            total += d;
            prev = Some(arm);
        }
        prop_assert!(total >= i as f64);
    }

    #[test]
    fn hindsight_best_equals_brute_force(
        (k, i, losses) in (1usize..=12).prop_flat_map(|k| {
            (Just(k), 1usize..=k, prop::collection::vec(0.0f64..1.0, k))
        })
    ) {
        let mut ledger = RegretLedger::new(k);
        let play = CombinatorialArm::from_indices(k, &(0..i).collect::<Vec<_>>(), i).unwrap();
        ledger
            .record_round(&play, &LossVector::per_round(losses.clone()).unwrap(), 1.0)
            .unwrap();
        let (arm, value) = ledger.hindsight_best(i).unwrap();

        // Enumerate all subsets.
        let mut best = f64::INFINITY;
        let mut indices: Vec<usize> = (0..i).collect();
        loop {
            let total: f64 = indices.iter().map(|&j| losses[j]).sum();
            if total < best {
                best = total;
            }
            let mut pos = i;
            let advanced = loop {
                if pos == 0 {
                    break false;
                }
                pos -= 1;
                if indices[pos] < k - (i - pos) {
                    indices[pos] += 1;
                    for p in (pos + 1)..i {
                        indices[p] = indices[p - 1] + 1;
                    }
                    break true;
                }
            };
            if !advanced {
                break;
            }
        }
        prop_assert!((value - best).abs() < 1e-12);
        prop_assert_eq!(arm.combo_size(), i);
    }

    #[test]
    fn regret_is_permutation_invariant(
        (k, i, rounds, perm_seed) in (2usize..=8).prop_flat_map(|k| {
            (Just(k), 1usize..=k, 1usize..=6, any::<u64>())
        })
    ) {
        // Build a permutation from the seed.
        let mut perm: Vec<usize> = (0..k).collect();
        let mut state = perm_seed | 1;
        for j in (1..k).rev() {
            state = combat_core::rng::mix64(state);
            perm.swap(j, (state as usize) % (j + 1));
        }

        let mut direct = RegretLedger::new(k);
        let mut relabeled = RegretLedger::new(k);
        let mut state2 = perm_seed ^ 0xabcd;
        for r in 0..rounds {
            let mut idx: Vec<usize> = (0..k).collect();
            for j in (1..k).rev() {
                state2 = combat_core::rng::mix64(state2);
                idx.swap(j, (state2 as usize) % (j + 1));
            }
            let mut chosen = idx[..i].to_vec();
            chosen.sort_unstable();
            let arm = CombinatorialArm::from_indices(k, &chosen, i).unwrap();
            let losses: Vec<f64> = (0..k)
                .map(|c| {
                    combat_core::rng::uniform(perm_seed, 0x77, r as u64, c as u64)
                })
                .collect();

            let mapped_idx: Vec<usize> = {
                let mut m: Vec<usize> = chosen.iter().map(|&c| perm[c]).collect();
                m.sort_unstable();
                m
            };
            let mapped_arm = CombinatorialArm::from_indices(k, &mapped_idx, i).unwrap();
            let mut mapped_losses = vec![0.0; k];
            for c in 0..k {
                mapped_losses[perm[c]] = losses[c];
            }

            direct
                .record_round(&arm, &LossVector::per_round(losses).unwrap(), 0.7)
                .unwrap();
            relabeled
                .record_round(&mapped_arm, &LossVector::per_round(mapped_losses).unwrap(), 0.7)
                .unwrap();
        }
        let a = direct.switching_regret(i).unwrap();
        let b = relabeled.switching_regret(i).unwrap();
        prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
    }
}

fn arb_hull_point() -> impl Strategy<Value = (HullPoint, usize)> {
    (2usize..=24).prop_flat_map(|k| {
        (1usize..k, prop::collection::vec(1e-6f64..1.0, k))
            .prop_map(move |(i, raw)| (waterfill(raw, i), k))
    })
}

fn waterfill(mut v: Vec<f64>, combo: usize) -> HullPoint {
    let k = v.len();
    let mut free: Vec<usize> = (0..k).collect();
    let mut remaining = combo as f64;
    loop {
        let total: f64 = free.iter().map(|&i| v[i]).sum();
        let scale = remaining / total;
        let capped: Vec<usize> = free
            .iter()
            .copied()
            .filter(|&i| v[i] * scale >= 1.0)
            .collect();
        if capped.is_empty() {
            for &i in &free {
                v[i] = (v[i] * scale).max(1e-12);
            }
            break;
        }
        for &i in &capped {
            v[i] = 1.0;
            remaining -= 1.0;
        }
        free.retain(|i| !capped.contains(i));
        if free.is_empty() {
            break;
        }
    }
    HullPoint::new(v, combo).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn decomposition_reconstructs_hull_points((point, k) in arb_hull_point()) {
        let d = decompose_hull_point(&point).unwrap();
        prop_assert!(d.vertices().len() <= k);
        let sum: f64 = d.weights().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
        for &w in d.weights() {
            prop_assert!(w > 0.0 && w <= 1.0 + 1e-12);
        }
        let recon = d.reconstruct(k);
        for (r, a) in recon.iter().zip(point.coords()) {
            prop_assert!((r - a).abs() < 1e-9);
        }
    }

    #[test]
    fn omd_step_keeps_kkt_residuals_small(
        ((point, k), raw_est, eta) in (arb_hull_point(), prop::collection::vec(0.0f64..60.0, 24), 1e-4f64..1.0)
    ) {
        let estimate = &raw_est[..k];
        let out = omd_step(&point, estimate, eta).unwrap();
        let target = point.combo_size() as f64;
        let sum: f64 = out.coords().iter().sum();
        prop_assert!((sum - target).abs() < 1e-9 + 24.0 * 1e-12);

        if let Some(interior) = (0..k).find(|&i| out.coords()[i] < 1.0 - 1e-9 && out.coords()[i] > 1e-9) {
            let mu = (1.0 / out.coords()[interior] - 1.0 / point.coords()[interior]) / eta
                - estimate[interior];
            for ((&ai, &ei), &ri) in out
                .coords()
                .iter()
                .zip(estimate.iter())
                .zip(point.coords())
            {
                if ai < 1.0 - 1e-9 && ai > 1e-9 {
                    let residual = ei + (1.0 / ri - 1.0 / ai) / eta + mu;
                    prop_assert!(residual.abs() < 1e-7, "stationarity {}", residual);
                } else if ai >= 1.0 - 1e-9 {
                    let beta = (1.0 - 1.0 / ri) / eta - ei - mu;
                    prop_assert!(((ai - 1.0) * beta).abs() < 1e-8);
                    prop_assert!(beta >= -1e-7);
                }
            }
        }
    }
}

#[test]
fn cdn_marginal_variance_matches_walk_depth() {
    // Unclipped coordinate variance at round t is sigma^2 * |chain(t)|.
    // Use chi on coordinate 0 and inspect coordinate 1 at t = 7 (chain
    // {4, 6, 7}) with a small horizon so sigma is large enough to measure
    // but small enough that clipping is negligible.
    let spec = ProblemSpec::new(2, 1, 16, 1.0).unwrap();
    let seeds = 10_000u64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut sigma = 0.0;
    for seed in 0..seeds {
        let mut config = AdversaryConfig::new(AdversaryKind::Cdn, spec, seed);
        config.chi = Some(CombinatorialArm::from_indices(2, &[0], 1).unwrap());
        let adv = CdnAdversary::new(&config).unwrap();
        sigma = adv.sigma();
        let pre = adv.pre_clip_loss(7).unwrap();
        let centered = pre[1] - 0.5;
        sum += centered;
        sum_sq += centered * centered;
    }
    let n = seeds as f64;
    let mean = sum / n;
    let var = sum_sq / n - mean * mean;
    let expected = sigma * sigma * 3.0;
    assert!(
        (var - expected).abs() / expected < 0.05,
        "var {var} vs expected {expected}"
    );
}

#[test]
fn cin_identical_noise_across_chi_classes() {
    let spec = ProblemSpec::new(8, 3, 64, 0.5).unwrap();
    let mut config = AdversaryConfig::new(AdversaryKind::Cin, spec, 123);
    config.chi = Some(CombinatorialArm::from_indices(8, &[1, 4, 6], 3).unwrap());
    let adv = combat_core::adversary::CinAdversary::new(&config).unwrap();
    for t in 1..=64 {
        let loss = adv.round_loss(t).unwrap();
        let v = loss.values();
        // All best coordinates identical; all others identical.
        assert_eq!(v[1], v[4]);
        assert_eq!(v[4], v[6]);
        assert_eq!(v[0], v[2]);
        assert_eq!(v[2], v[3]);
        assert_eq!(v[3], v[5]);
        assert_eq!(v[5], v[7]);
    }
}

#[test]
fn walk_values_do_not_depend_on_query_order() {
    use combat_core::tree::Walk;
    let forward = Walk::shared(31, 0.9, 256);
    let shuffled = Walk::shared(31, 0.9, 256);
    // Query in a scrambled order and compare bit-exactly.
    let mut order: Vec<usize> = (0..=256).collect();
    let mut state = 5u64;
    for j in (1..order.len()).rev() {
        state = combat_core::rng::mix64(state);
        order.swap(j, (state as usize) % (j + 1));
    }
    for &t in &order {
        assert_eq!(shuffled.value(t).to_bits(), forward.value(t).to_bits());
    }
}
