//! Takeover-resistance measurements over live chain state: how much power an
//! attacker needs against passive voters, how few voters could fund that
//! power, and who actually resisted after a takeover event.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Duration, NaiveDate, Utc};
use serde::Serialize;

use crate::config::{SystemConfig, VotingRule};
use crate::election::{
    elect, ranked_candidates, resolve_delegations, tally_approval, tally_cumulative,
    ApprovalProfile, Committee, CumulativeProfile, DelegationProfile,
};
use crate::error::{Error, Result};
use crate::game::amplification;
use crate::power::{even_allocation, mul_div_ceil, power_from_u128, Power};
use crate::snapshot::PowerSnapshot;
use crate::store::{apply_unvote, apply_vote, EventKind, EventLog};
use crate::{CandidateId, VoterId};

/// Score of the lowest defended seat: the (n-t+1)-th largest candidate score,
/// zero when fewer candidates have any score.
pub fn threshold_power(scores: &BTreeMap<CandidateId, Power>, config: &SystemConfig) -> Power {
    let ranked = ranked_candidates(scores);
    ranked
        .get(config.contested_seats() as usize - 1)
        .map(|(_, p)| *p)
        .unwrap_or(Power::ZERO)
}

/// Passive resistance: the raw power an attacker must stake to carry t seats
/// when no sitting voter reacts, `ceil(t * p_low / zeta_a)` where `p_low` is
/// [`threshold_power`].
pub fn passive_resistance(
    scores: &BTreeMap<CandidateId, Power>,
    config: &SystemConfig,
) -> Result<Power> {
    mul_div_ceil(
        threshold_power(scores, config),
        config.min_approvals as u64,
        amplification(config).attacker,
    )
}

/// How many voters it takes to reach a power threshold.
///
/// `voters` is the smallest count of top voters whose combined power meets
/// the threshold (ties count for the challenger, so meeting it exactly is
/// enough). A zero threshold needs nobody. When the whole voter set falls
/// short, `voters` is the sentinel count+1 and `reachable` is false.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RiskIndex {
    pub voters: u64,
    pub reachable: bool,
}

pub fn risk_index(snapshot: &PowerSnapshot, threshold: Power) -> RiskIndex {
    if threshold.is_zero() {
        return RiskIndex {
            voters: 0,
            reachable: true,
        };
    }
    let mut powers: Vec<Power> = snapshot.powers.values().copied().collect();
    powers.sort_unstable_by(|a, b| b.cmp(a));
    let mut running = Power::ZERO;
    for (i, p) in powers.iter().enumerate() {
        running = running.saturating_add(*p);
        if running >= threshold {
            return RiskIndex {
                voters: i as u64 + 1,
                reachable: true,
            };
        }
    }
    RiskIndex {
        voters: powers.len() as u64 + 1,
        reachable: false,
    }
}

/// One day's full voting state: pooled-power inputs, delegation edges, and
/// priority-ordered candidate lists. Under the cumulative rule allocations
/// derive from even splits of the priority vector, the dominant on-chain
/// behaviour the ingestion format assumes.
#[derive(Clone, Debug, Default)]
pub struct VotingState {
    pub powers: BTreeMap<VoterId, Power>,
    pub delegations: DelegationProfile,
    pub profiles: BTreeMap<VoterId, Vec<CandidateId>>,
}

impl VotingState {
    pub fn from_snapshots(
        powers: &PowerSnapshot,
        votes: &crate::snapshot::VotingSnapshot,
    ) -> VotingState {
        VotingState {
            powers: powers.powers.clone(),
            delegations: DelegationProfile::new(),
            profiles: votes.profiles.clone(),
        }
    }
}

/// Candidate scores for a voting state under the configured rule.
pub fn tally_state(
    state: &VotingState,
    config: &SystemConfig,
) -> Result<BTreeMap<CandidateId, Power>> {
    let gurus = resolve_delegations(&state.powers, &state.delegations)?;
    match config.rule {
        VotingRule::Approval => {
            let profile: ApprovalProfile = state
                .profiles
                .iter()
                .filter(|(voter, list)| gurus.contains_key(*voter) && !list.is_empty())
                .map(|(voter, list)| (voter.clone(), list.clone()))
                .collect();
            tally_approval(&gurus, &profile, config)
        }
        VotingRule::Cumulative => {
            let mut profile = CumulativeProfile::new();
            for (voter, list) in &state.profiles {
                let Some(power) = gurus.get(voter) else {
                    continue;
                };
                if list.is_empty() {
                    continue;
                }
                let levels = even_allocation(power.units() as u128, list.len());
                let allocations = list
                    .iter()
                    .cloned()
                    .zip(levels)
                    .map(|(c, l)| Ok((c, power_from_u128(l)?)))
                    .collect::<Result<Vec<_>>>()?;
                profile.insert(voter.clone(), allocations);
            }
            tally_cumulative(&gurus, &profile, config)
        }
    }
}

/// Outcome of injecting an attacker into a live voting state.
#[derive(Clone, Debug, Serialize)]
pub struct TakeoverOutcome {
    pub committee_before: Committee,
    pub committee_after: Committee,
    /// New rank minus old rank for every candidate scored before the attack;
    /// positive means pushed down.
    pub rank_shifts: BTreeMap<CandidateId, i64>,
    pub attacker_seats: u32,
    pub success: bool,
}

/// Re-runs the election with an attacker voter added.
///
/// The attacker backs her candidates the way the rule allows: under approval
/// voting the full power lands on every backed candidate (up to v of them,
/// beyond that the amplified budget spreads evenly over the t cheapest
/// seats); under cumulative voting the power splits evenly over min(t, |A|)
/// candidates. Exact score ties go to the attacker. Attacker candidates must
/// not already hold seats.
pub fn simulate_takeover(
    state: &VotingState,
    attacker_power: Power,
    attacker_candidates: &BTreeSet<CandidateId>,
    config: &SystemConfig,
) -> Result<TakeoverOutcome> {
    config.validate()?;
    let scores = tally_state(state, config)?;
    let committee_before = elect(&scores, config);
    for candidate in attacker_candidates {
        if committee_before.contains(candidate) {
            return Err(Error::AttackerOverlap(candidate.clone()));
        }
    }

    let backed: Vec<&CandidateId> = attacker_candidates.iter().collect();
    let t = config.min_approvals as usize;
    let injected: Vec<(CandidateId, Power)> = match config.rule {
        VotingRule::Approval if backed.len() <= config.max_votes as usize => backed
            .iter()
            .map(|c| ((*c).clone(), attacker_power))
            .collect(),
        VotingRule::Approval => {
            let slots = t.min(backed.len());
            let budget =
                amplification(config).attacker as u128 * attacker_power.units() as u128;
            backed
                .iter()
                .take(slots)
                .zip(even_allocation(budget, slots))
                .map(|(c, l)| {
                    let l = l.min(attacker_power.units() as u128);
                    Ok(((*c).clone(), power_from_u128(l)?))
                })
                .collect::<Result<Vec<_>>>()?
        }
        VotingRule::Cumulative => {
            let slots = t.min(backed.len());
            backed
                .iter()
                .take(slots)
                .zip(even_allocation(attacker_power.units() as u128, slots))
                .map(|(c, l)| Ok(((*c).clone(), power_from_u128(l)?)))
                .collect::<Result<Vec<_>>>()?
        }
    };

    let mut merged = scores.clone();
    for (candidate, extra) in &injected {
        let entry = merged.entry(candidate.clone()).or_insert(Power::ZERO);
        *entry = entry.checked_add(*extra)?;
    }

    // score desc, attacker candidates win exact ties, then id
    let mut after: Vec<(CandidateId, Power)> =
        merged.iter().map(|(c, p)| (c.clone(), *p)).collect();
    after.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then_with(|| {
                attacker_candidates
                    .contains(&b.0)
                    .cmp(&attacker_candidates.contains(&a.0))
            })
            .then_with(|| a.0.cmp(&b.0))
    });

    let before_rank: BTreeMap<CandidateId, usize> = ranked_candidates(&scores)
        .into_iter()
        .enumerate()
        .map(|(i, (c, _))| (c, i + 1))
        .collect();
    let mut rank_shifts: BTreeMap<CandidateId, i64> = BTreeMap::new();
    for (i, (candidate, _)) in after.iter().enumerate() {
        if let Some(old) = before_rank.get(candidate) {
            rank_shifts.insert(candidate.clone(), (i + 1) as i64 - *old as i64);
        }
    }

    let members: Vec<(CandidateId, Power)> = after
        .into_iter()
        .take(config.committee_size as usize)
        .collect();
    let total_score = members.iter().map(|(_, p)| *p).sum();
    let committee_after = Committee {
        members,
        total_score,
    };
    let attacker_seats = committee_after
        .members
        .iter()
        .filter(|(c, _)| attacker_candidates.contains(c))
        .count() as u32;
    Ok(TakeoverOutcome {
        committee_before,
        committee_after,
        rank_shifts,
        attacker_seats,
        success: attacker_seats >= config.min_approvals,
    })
}

/// How a voter reacted to a takeover event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResisterCategory {
    /// Changed her candidate set and kept at least one leader candidate.
    Cooperative,
    /// Changed her candidate set away from all leader candidates.
    Independent,
    /// Did not change her candidate set within the window.
    NonResister,
}

impl std::fmt::Display for ResisterCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ResisterCategory::Cooperative => "co-resister",
            ResisterCategory::Independent => "ind-resister",
            ResisterCategory::NonResister => "non-resister",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ResisterClassification {
    /// The resistance leader's effective candidate set at the event.
    pub leader_set: BTreeSet<CandidateId>,
    pub categories: BTreeMap<VoterId, ResisterCategory>,
    #[serde(serialize_with = "serialize_window")]
    pub window: Duration,
}

fn serialize_window<S: serde::Serializer>(window: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_i64(window.num_seconds())
}

impl ResisterClassification {
    pub fn counts(&self) -> (u64, u64, u64) {
        let mut co = 0;
        let mut ind = 0;
        let mut non = 0;
        for category in self.categories.values() {
            match category {
                ResisterCategory::Cooperative => co += 1,
                ResisterCategory::Independent => ind += 1,
                ResisterCategory::NonResister => non += 1,
            }
        }
        (co, ind, non)
    }

    pub fn category(&self, voter: &str) -> ResisterCategory {
        self.categories
            .get(voter)
            .copied()
            .unwrap_or(ResisterCategory::NonResister)
    }
}

/// Vote-vector and delegation state only; staking events are irrelevant to
/// classification and skipped.
#[derive(Default)]
struct VoteTracker {
    vectors: BTreeMap<VoterId, Vec<CandidateId>>,
    delegations: BTreeMap<VoterId, VoterId>,
}

impl VoteTracker {
    fn apply(&mut self, voter: &VoterId, kind: &EventKind) {
        match kind {
            EventKind::Vote { candidates } => {
                apply_vote(self.vectors.entry(voter.clone()).or_default(), candidates);
            }
            EventKind::Unvote { candidates } => {
                if let Some(vector) = self.vectors.get_mut(voter) {
                    apply_unvote(vector, candidates);
                }
            }
            EventKind::Delegate { target } => {
                if target == voter {
                    self.delegations.remove(voter);
                } else {
                    self.delegations.insert(voter.clone(), target.clone());
                }
            }
            EventKind::Undelegate => {
                self.delegations.remove(voter);
            }
            EventKind::Stake { .. } | EventKind::Unstake { .. } => {}
        }
    }

    /// The candidate set that counts for this voter: her own votes, or her
    /// guru's if she delegates. Cycles cut off at the first repeat.
    fn effective_set(&self, voter: &VoterId) -> BTreeSet<CandidateId> {
        let mut seen: BTreeSet<&VoterId> = BTreeSet::new();
        let mut cur = voter;
        while let Some(next) = self.delegations.get(cur) {
            if !seen.insert(cur) {
                break;
            }
            cur = next;
        }
        self.vectors
            .get(cur)
            .map(|v| v.iter().cloned().collect())
            .unwrap_or_default()
    }
}

/// Splits the log's voters into co-, ind-, and non-resisters around a
/// takeover event.
///
/// A voter resists when she sends at least one vote or delegation
/// transaction inside `(event_time, event_time + window]` and her effective
/// candidate set afterwards differs from the pre-event one; she cooperates
/// when the new set keeps at least one of the leader's candidates. The
/// leader must appear somewhere in the log.
pub fn classify_resisters(
    log: &EventLog,
    event_time: DateTime<Utc>,
    window: Duration,
    leader: &VoterId,
) -> Result<ResisterClassification> {
    let mut universe: BTreeSet<VoterId> = BTreeSet::new();
    for record in &log.records {
        universe.insert(record.voter.clone());
    }
    if !universe.contains(leader) {
        return Err(Error::UnknownLeader(leader.clone()));
    }

    let deadline = event_time + window;
    let mut tracker = VoteTracker::default();
    let mut idx = 0;
    while idx < log.records.len() && log.records[idx].timestamp <= event_time {
        let record = &log.records[idx];
        tracker.apply(&record.voter, &record.kind);
        idx += 1;
    }
    let leader_set = tracker.effective_set(leader);
    let before: BTreeMap<VoterId, BTreeSet<CandidateId>> = universe
        .iter()
        .map(|v| (v.clone(), tracker.effective_set(v)))
        .collect();

    let mut touched: BTreeSet<VoterId> = BTreeSet::new();
    while idx < log.records.len() && log.records[idx].timestamp <= deadline {
        let record = &log.records[idx];
        match record.kind {
            EventKind::Vote { .. }
            | EventKind::Unvote { .. }
            | EventKind::Delegate { .. }
            | EventKind::Undelegate => {
                touched.insert(record.voter.clone());
            }
            EventKind::Stake { .. } | EventKind::Unstake { .. } => {}
        }
        tracker.apply(&record.voter, &record.kind);
        idx += 1;
    }

    let mut categories = BTreeMap::new();
    for voter in &universe {
        let category = if touched.contains(voter) {
            let after = tracker.effective_set(voter);
            if after == before[voter] {
                ResisterCategory::NonResister
            } else if after.intersection(&leader_set).next().is_some() {
                ResisterCategory::Cooperative
            } else {
                ResisterCategory::Independent
            }
        } else {
            ResisterCategory::NonResister
        };
        categories.insert(voter.clone(), category);
    }
    Ok(ResisterClassification {
        leader_set,
        categories,
        window,
    })
}

/// Voting and delegating transaction counts per UTC day.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ActivityCount {
    pub voting: u64,
    pub delegating: u64,
}

pub fn daily_activity(log: &EventLog) -> BTreeMap<NaiveDate, ActivityCount> {
    let mut days: BTreeMap<NaiveDate, ActivityCount> = BTreeMap::new();
    for record in &log.records {
        let day = days.entry(record.timestamp.date_naive()).or_default();
        match record.kind {
            EventKind::Vote { .. } | EventKind::Unvote { .. } => day.voting += 1,
            EventKind::Delegate { .. } | EventKind::Undelegate => day.delegating += 1,
            EventKind::Stake { .. } | EventKind::Unstake { .. } => {}
        }
    }
    days
}

/// Combined voting power per resister category on each snapshot day. Voters
/// missing from the classification count as non-resisters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CategoryPower {
    pub cooperative: Power,
    pub independent: Power,
    pub non_resister: Power,
}

pub fn category_power_series(
    snapshots: &[PowerSnapshot],
    classification: &ResisterClassification,
) -> BTreeMap<NaiveDate, CategoryPower> {
    let mut series = BTreeMap::new();
    for snapshot in snapshots {
        let mut day = CategoryPower::default();
        for (voter, power) in &snapshot.powers {
            match classification.category(voter) {
                ResisterCategory::Cooperative => {
                    day.cooperative = day.cooperative.saturating_add(*power)
                }
                ResisterCategory::Independent => {
                    day.independent = day.independent.saturating_add(*power)
                }
                ResisterCategory::NonResister => {
                    day.non_resister = day.non_resister.saturating_add(*power)
                }
            }
        }
        series.insert(snapshot.date, day);
    }
    series
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::EventRecord;
    use chrono::TimeZone;

    fn scores(entries: &[(&str, u64)]) -> BTreeMap<CandidateId, Power> {
        entries
            .iter()
            .map(|(c, p)| (c.to_string(), Power(*p)))
            .collect()
    }

    fn day(d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 3, d).unwrap()
    }

    fn ts(d: u32, h: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2020, 3, d, h, 0, 0).unwrap()
    }

    fn vote(d: u32, h: u32, voter: &str, candidates: &[&str]) -> EventRecord {
        EventRecord {
            timestamp: ts(d, h),
            voter: voter.to_string(),
            kind: EventKind::Vote {
                candidates: candidates.iter().map(|c| c.to_string()).collect(),
            },
        }
    }

    #[test]
    fn threshold_power_reads_the_lowest_defended_seat() {
        let cfg = SystemConfig::eosio(); // n-t+1 = 7
        let board = scores(&[
            ("c1", 100),
            ("c2", 90),
            ("c3", 80),
            ("c4", 70),
            ("c5", 60),
            ("c6", 50),
            ("c7", 42),
            ("c8", 30),
        ]);
        assert_eq!(threshold_power(&board, &cfg), Power(42));
        // fewer than n-t+1 candidates: nothing to defend with
        let thin = scores(&[("c1", 100), ("c2", 90)]);
        assert_eq!(threshold_power(&thin, &cfg), Power::ZERO);
    }

    #[test]
    fn passive_resistance_group_examples() {
        // wide ballot (v > t): the threshold power itself
        let cfg = SystemConfig::eosio();
        let board: BTreeMap<CandidateId, Power> =
            (1..=10).map(|i| (format!("c{i:02}"), Power(30))).collect();
        assert_eq!(passive_resistance(&board, &cfg).unwrap(), Power(30));

        // narrow ballot (v <= t): scaled by t/v
        let mut cfg = SystemConfig::eosio();
        cfg.max_votes = 3;
        assert_eq!(passive_resistance(&board, &cfg).unwrap(), Power(150));

        // cumulative: full t multiplier
        let cfg = SystemConfig::tron();
        let board: BTreeMap<CandidateId, Power> =
            (1..=12).map(|i| (format!("c{i:02}"), Power(10))).collect();
        assert_eq!(passive_resistance(&board, &cfg).unwrap(), Power(190));
    }

    #[test]
    fn passive_resistance_is_zero_on_an_empty_board() {
        let cfg = SystemConfig::eosio();
        assert_eq!(
            passive_resistance(&BTreeMap::new(), &cfg).unwrap(),
            Power::ZERO
        );
    }

    #[test]
    fn risk_index_counts_top_voters_until_the_threshold() {
        let mut snap = PowerSnapshot::new(day(1));
        for (v, p) in [("a", 10u64), ("b", 8), ("c", 5), ("d", 1)] {
            snap.powers.insert(v.to_string(), Power(p));
        }
        assert_eq!(
            risk_index(&snap, Power(18)),
            RiskIndex { voters: 2, reachable: true }
        );
        assert_eq!(
            risk_index(&snap, Power(19)),
            RiskIndex { voters: 3, reachable: true }
        );
        assert_eq!(
            risk_index(&snap, Power(0)),
            RiskIndex { voters: 0, reachable: true }
        );
        // exact total counts as reachable: ties favour the challenger
        assert_eq!(
            risk_index(&snap, Power(24)),
            RiskIndex { voters: 4, reachable: true }
        );
        assert_eq!(
            risk_index(&snap, Power(25)),
            RiskIndex { voters: 5, reachable: false }
        );
    }

    #[test]
    fn takeover_simulation_small_board() {
        let cfg = SystemConfig::new(VotingRule::Approval, 30, 3, 2);
        let mut state = VotingState::default();
        for (v, p) in [("u1", 50u64), ("u2", 40), ("u3", 30)] {
            state.powers.insert(v.to_string(), Power(p));
        }
        state.profiles.insert("u1".into(), vec!["c1".into()]);
        state.profiles.insert("u2".into(), vec!["c2".into()]);
        state.profiles.insert("u3".into(), vec!["c3".into()]);
        let attackers: BTreeSet<CandidateId> = ["x1", "x2"].iter().map(|s| s.to_string()).collect();

        // power 40 ties c2 and beats c3; ties go to the attacker
        let outcome = simulate_takeover(&state, Power(40), &attackers, &cfg).unwrap();
        assert!(outcome.success);
        assert_eq!(outcome.attacker_seats, 2);
        assert_eq!(outcome.rank_shifts.get("c1"), Some(&0));
        assert_eq!(outcome.rank_shifts.get("c2"), Some(&2));
        assert_eq!(outcome.rank_shifts.get("c3"), Some(&2));

        // one unit less fails
        let outcome = simulate_takeover(&state, Power(39), &attackers, &cfg).unwrap();
        assert!(!outcome.success);
        assert_eq!(outcome.attacker_seats, 1);
    }

    #[test]
    fn takeover_rejects_attacker_candidates_already_seated() {
        let cfg = SystemConfig::new(VotingRule::Approval, 30, 3, 2);
        let mut state = VotingState::default();
        state.powers.insert("u1".into(), Power(10));
        state.profiles.insert("u1".into(), vec!["c1".into()]);
        let attackers: BTreeSet<CandidateId> = ["c1"].iter().map(|s| s.to_string()).collect();
        assert!(matches!(
            simulate_takeover(&state, Power(5), &attackers, &cfg),
            Err(Error::AttackerOverlap(_))
        ));
    }

    #[test]
    fn cumulative_takeover_splits_over_t_candidates() {
        let cfg = SystemConfig::new(VotingRule::Cumulative, 30, 3, 2);
        let mut state = VotingState::default();
        for (v, p) in [("u1", 30u64), ("u2", 20), ("u3", 10)] {
            state.powers.insert(v.to_string(), Power(p));
        }
        state.profiles.insert("u1".into(), vec!["c1".into()]);
        state.profiles.insert("u2".into(), vec!["c2".into()]);
        state.profiles.insert("u3".into(), vec!["c3".into()]);
        // threshold seat is c2 at 20; t = 2 seats need 2 * 20 = 40 total
        let attackers: BTreeSet<CandidateId> =
            ["x1", "x2", "x3", "x4"].iter().map(|s| s.to_string()).collect();
        let outcome = simulate_takeover(&state, Power(40), &attackers, &cfg).unwrap();
        assert!(outcome.success, "{outcome:?}");
        let outcome = simulate_takeover(&state, Power(39), &attackers, &cfg).unwrap();
        assert!(!outcome.success);
    }

    #[test]
    fn classification_splits_co_ind_non() {
        let records = vec![
            vote(1, 1, "leader", &["w1", "w2"]),
            vote(1, 2, "co", &["other"]),
            vote(1, 3, "ind", &["other"]),
            vote(1, 4, "silent", &["other"]),
            // takeover at day 2 00:00; reactions inside one day
            vote(2, 5, "co", &["w1"]),
            vote(2, 6, "ind", &["fresh"]),
        ];
        let log = EventLog { records };
        let cls = classify_resisters(
            &log,
            ts(2, 0),
            Duration::days(1),
            &"leader".to_string(),
        )
        .unwrap();
        assert_eq!(cls.category("co"), ResisterCategory::Cooperative);
        assert_eq!(cls.category("ind"), ResisterCategory::Independent);
        assert_eq!(cls.category("silent"), ResisterCategory::NonResister);
        assert_eq!(cls.counts(), (1, 1, 2));
        assert_eq!(cls.leader_set.len(), 2);
    }

    #[test]
    fn classification_ignores_changes_outside_the_window() {
        let records = vec![
            vote(1, 1, "leader", &["w1"]),
            vote(1, 2, "late", &["other"]),
            vote(5, 0, "late", &["w1"]), // three days after the window closes
        ];
        let log = EventLog { records };
        let cls = classify_resisters(&log, ts(2, 0), Duration::days(1), &"leader".to_string())
            .unwrap();
        assert_eq!(cls.category("late"), ResisterCategory::NonResister);
    }

    #[test]
    fn zero_window_classifies_everyone_as_non_resister() {
        let records = vec![
            vote(1, 1, "leader", &["w1"]),
            vote(1, 2, "v", &["other"]),
            vote(2, 1, "v", &["w1"]),
        ];
        let log = EventLog { records };
        let cls = classify_resisters(&log, ts(2, 0), Duration::zero(), &"leader".to_string())
            .unwrap();
        assert!(cls
            .categories
            .values()
            .all(|c| *c == ResisterCategory::NonResister));
    }

    #[test]
    fn a_touch_without_set_change_is_not_resistance() {
        // re-voting the same set keeps the voter a non-resister
        let records = vec![
            vote(1, 1, "leader", &["w1"]),
            vote(1, 2, "v", &["other"]),
            vote(2, 1, "v", &["other"]),
        ];
        let log = EventLog { records };
        let cls = classify_resisters(&log, ts(2, 0), Duration::days(1), &"leader".to_string())
            .unwrap();
        assert_eq!(cls.category("v"), ResisterCategory::NonResister);
    }

    #[test]
    fn delegation_changes_count_through_the_guru_set() {
        let mut records = vec![
            vote(1, 1, "leader", &["w1"]),
            vote(1, 2, "guru", &["w1", "w2"]),
            vote(1, 3, "v", &["other"]),
        ];
        records.push(EventRecord {
            timestamp: ts(2, 5),
            voter: "v".to_string(),
            kind: EventKind::Delegate {
                target: "guru".to_string(),
            },
        });
        let log = EventLog { records };
        let cls = classify_resisters(&log, ts(2, 0), Duration::days(1), &"leader".to_string())
            .unwrap();
        // v's effective set becomes the guru's, which overlaps the leader's
        assert_eq!(cls.category("v"), ResisterCategory::Cooperative);
    }

    #[test]
    fn unknown_leader_is_rejected() {
        let log = EventLog {
            records: vec![vote(1, 1, "a", &["w1"])],
        };
        assert!(matches!(
            classify_resisters(&log, ts(2, 0), Duration::days(1), &"ghost".to_string()),
            Err(Error::UnknownLeader(_))
        ));
    }

    #[test]
    fn activity_counts_split_votes_from_delegations() {
        let mut records = vec![
            vote(1, 1, "a", &["w1"]),
            vote(1, 2, "b", &["w1"]),
            vote(1, 3, "c", &["w1"]),
        ];
        records.push(EventRecord {
            timestamp: ts(1, 4),
            voter: "d".to_string(),
            kind: EventKind::Delegate {
                target: "a".to_string(),
            },
        });
        records.push(EventRecord {
            timestamp: ts(2, 1),
            voter: "e".to_string(),
            kind: EventKind::Stake {
                coins: "5".parse().unwrap(),
            },
        });
        let log = EventLog { records };
        let activity = daily_activity(&log);
        assert_eq!(
            activity.get(&day(1)),
            Some(&ActivityCount { voting: 3, delegating: 1 })
        );
        // staking alone opens the day but counts for neither series
        assert_eq!(activity.get(&day(2)), Some(&ActivityCount::default()));
    }

    #[test]
    fn category_power_series_sums_by_class() {
        let records = vec![
            vote(1, 1, "leader", &["w1"]),
            vote(1, 2, "co", &["x"]),
            vote(2, 1, "co", &["w1"]),
        ];
        let log = EventLog { records };
        let cls = classify_resisters(&log, ts(2, 0), Duration::days(1), &"leader".to_string())
            .unwrap();
        let mut snap = PowerSnapshot::new(day(2));
        snap.powers.insert("leader".into(), Power(5));
        snap.powers.insert("co".into(), Power(7));
        snap.powers.insert("stranger".into(), Power(2));
        let series = category_power_series(&[snap], &cls);
        let day2 = series.get(&day(2)).unwrap();
        assert_eq!(day2.cooperative, Power(7));
        assert_eq!(day2.independent, Power::ZERO);
        // unclassified voters fall into the non-resister bucket
        assert_eq!(day2.non_resister, Power(7));
    }
}
