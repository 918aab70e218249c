//! Randomized invariants over the election pipeline and the metric
//! definitions.

use std::collections::BTreeMap;

use dpos_gov::election::{
    elect, resolve_delegations, stake, tally_cumulative, unstake, DelegationProfile,
};
use dpos_gov::metrics::risk_index;
use dpos_gov::sim::{av_to_cv, withdraw_votes};
use dpos_gov::snapshot::PowerSnapshot;
use dpos_gov::{CandidateId, Power, Rational, SystemConfig, VoterId, VotingRule};
use proptest::prelude::*;

fn voter(i: usize) -> VoterId {
    format!("v{i:03}")
}

/// Forest encoding: voter i optionally delegates to a voter with a smaller
/// index, so cycles cannot occur.
fn forest(max: usize) -> impl Strategy<Value = (Vec<u32>, Vec<Option<usize>>)> {
    (1..max).prop_flat_map(|count| {
        (
            prop::collection::vec(0u32..10_000, count),
            (0..count)
                .map(|i| {
                    if i == 0 {
                        Just(None).boxed()
                    } else {
                        prop::option::of(0..i).boxed()
                    }
                })
                .collect::<Vec<_>>(),
        )
    })
}

proptest! {
    #[test]
    fn delegation_resolution_conserves_power((powers, targets) in forest(120)) {
        let own: BTreeMap<VoterId, Power> = powers
            .iter()
            .enumerate()
            .map(|(i, p)| (voter(i), Power(*p as u64)))
            .collect();
        let mut profile = DelegationProfile::new();
        for (i, target) in targets.iter().enumerate() {
            if let Some(t) = target {
                profile.delegate(voter(i), voter(*t));
            }
        }
        let pooled = resolve_delegations(&own, &profile).unwrap();

        let total_own: u64 = powers.iter().map(|p| *p as u64).sum();
        let total_pooled: u64 = pooled.values().map(|p| p.units()).sum();
        prop_assert_eq!(total_own, total_pooled);

        // every voter's power lands exactly at the end of her chain
        let mut expected: BTreeMap<VoterId, u64> = BTreeMap::new();
        for (i, p) in powers.iter().enumerate() {
            let mut at = i;
            while let Some(next) = targets[at] {
                at = next;
            }
            *expected.entry(voter(at)).or_insert(0) += *p as u64;
        }
        for (v, units) in expected {
            prop_assert_eq!(pooled.get(&v).map(|p| p.units()).unwrap_or(0), units);
        }
        // delegating voters never appear as gurus
        for (i, target) in targets.iter().enumerate() {
            if target.is_some() {
                prop_assert!(!pooled.contains_key(&voter(i)));
            }
        }
    }

    #[test]
    fn staking_floors_the_coin_product(numer in 0i128..1_000_000, denom in 1i128..1000, ln in 1i128..5000, ld in 1i128..50) {
        let coins = Rational::new(numer, denom).unwrap();
        let lambda = Rational::new(ln, ld).unwrap();
        let p = stake(&coins, &lambda).unwrap();
        // floor property: p <= coins * lambda < p + 1
        let product = coins.mul(&lambda);
        let lower = Rational::from_integer(p.units() as i128);
        let upper = Rational::from_integer(p.units() as i128 + 1);
        prop_assert!(lower <= product && product < upper);
        // unstaking the resulting power never asks for more coins than staked
        let back = unstake(p, &lambda).unwrap();
        prop_assert!(back <= coins);
    }

    #[test]
    fn even_ballot_split_conserves_power(len in 1usize..30, power in 0u64..1_000_000) {
        let vector: Vec<CandidateId> = (0..len).map(|i| format!("c{i:02}")).collect();
        let split = av_to_cv(&vector, Power(power)).unwrap();
        let total: u64 = split.iter().map(|(_, p)| p.units()).sum();
        prop_assert_eq!(total, power);
        let max = split.iter().map(|(_, p)| p.units()).max().unwrap();
        let min = split.iter().map(|(_, p)| p.units()).min().unwrap();
        prop_assert!(max - min <= 1);
        // remainder sits on the earliest candidates
        prop_assert!(split.windows(2).all(|w| w[0].1 >= w[1].1));
    }

    #[test]
    fn withdrawal_composes_to_the_minimum(len in 0usize..35, a in 1u32..40, b in 1u32..40) {
        let vector: Vec<CandidateId> = (0..len).map(|i| format!("c{i:02}")).collect();
        let two_step = withdraw_votes(&withdraw_votes(&vector, a), b);
        let direct = withdraw_votes(&vector, a.min(b));
        prop_assert_eq!(two_step, direct);
    }

    #[test]
    fn risk_index_is_monotone(powers in prop::collection::vec(0u64..1000, 1..40), r1 in 0u64..5000, r2 in 0u64..5000) {
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let mut snapshot = PowerSnapshot::new(chrono::NaiveDate::from_ymd_opt(2020, 1, 1).unwrap());
        for (i, p) in powers.iter().enumerate() {
            snapshot.powers.insert(voter(i), Power(*p));
        }
        let easy = risk_index(&snapshot, Power(lo));
        let hard = risk_index(&snapshot, Power(hi));
        prop_assert!(easy.voters <= hard.voters);

        // growing the largest voter never makes the index worse
        let mut boosted = snapshot.clone();
        if let Some((top, _)) = boosted
            .powers
            .iter()
            .max_by_key(|(_, p)| **p)
            .map(|(v, p)| (v.clone(), *p))
        {
            if let Some(p) = boosted.powers.get_mut(&top) {
                *p = p.saturating_add(Power(500));
            }
            let after = risk_index(&boosted, Power(hi));
            prop_assert!(after.voters <= hard.voters);
        }
    }

    #[test]
    fn elected_committee_maximizes_total_score(scores in prop::collection::btree_map("c[a-f]", 0u64..100, 1..10), seats in 1u32..5) {
        let scores: BTreeMap<CandidateId, Power> = scores
            .into_iter()
            .map(|(c, p)| (c, Power(p)))
            .collect();
        let config = SystemConfig::new(VotingRule::Approval, 30, seats, 1);
        let committee = elect(&scores, &config);
        let chosen = committee.total_score.units();

        let ids: Vec<&CandidateId> = scores.keys().collect();
        let take = (seats as usize).min(ids.len());
        prop_assert_eq!(committee.len(), take);
        let mut best = 0u64;
        subsets(&ids, take, 0, &mut Vec::new(), &mut |subset| {
            let sum: u64 = subset.iter().map(|c| scores[*c].units()).sum();
            best = best.max(sum);
        });
        prop_assert_eq!(chosen, best);
    }

    #[test]
    fn cumulative_tally_never_creates_power(budgets in prop::collection::vec(1u64..60, 1..8)) {
        let config = SystemConfig::new(VotingRule::Cumulative, 30, 5, 3);
        let mut gurus: BTreeMap<VoterId, Power> = BTreeMap::new();
        let mut profile = BTreeMap::new();
        for (i, b) in budgets.iter().enumerate() {
            let v = voter(i);
            gurus.insert(v.clone(), Power(*b));
            // spend part of the budget over a couple of candidates
            let spend = b / 2;
            profile.insert(
                v,
                vec![
                    ("c1".to_string(), Power(spend / 2)),
                    ("c2".to_string(), Power(spend - spend / 2)),
                ],
            );
        }
        let scores = tally_cumulative(&gurus, &profile, &config).unwrap();
        let spent: u64 = scores.values().map(|p| p.units()).sum();
        let held: u64 = gurus.values().map(|p| p.units()).sum();
        prop_assert!(spent <= held);
    }
}

fn subsets<'a>(
    ids: &'a [&'a CandidateId],
    take: usize,
    start: usize,
    acc: &mut Vec<&'a CandidateId>,
    f: &mut impl FnMut(&[&CandidateId]),
) {
    if acc.len() == take {
        f(acc);
        return;
    }
    for i in start..ids.len() {
        acc.push(ids[i]);
        subsets(ids, take, i + 1, acc, f);
        acc.pop();
    }
}
