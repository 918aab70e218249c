//! The three-phase governance pipeline: stake coins into power, pool power
//! through delegation, tally ballots, elect the committee, and check
//! proposal approval.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::power::{Power, Rational};
use crate::{CandidateId, VoterId};

/// Phase 1: `floor(coins * lambda)` power units.
pub fn stake(coins: &Rational, lambda: &Rational) -> Result<Power> {
    if coins.is_negative() {
        return Err(Error::NegativeCoins(coins.to_string()));
    }
    if !lambda.is_positive() {
        return Err(Error::NonPositiveLambda(lambda.to_string()));
    }
    coins.mul(lambda).floor_power()
}

/// Inverse of [`stake`]: the exact coin value of `power` units.
pub fn unstake(power: Power, lambda: &Rational) -> Result<Rational> {
    if !lambda.is_positive() {
        return Err(Error::NonPositiveLambda(lambda.to_string()));
    }
    Rational::from_integer(power.units() as i128).div(lambda)
}

/// Who votes on whose behalf. Voters without an entry act for themselves.
///
/// The non-self edges must form an acyclic functional graph; that is checked
/// when the profile is resolved, not on insertion.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DelegationProfile(BTreeMap<VoterId, VoterId>);

impl DelegationProfile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn delegate(&mut self, voter: VoterId, target: VoterId) {
        if voter == target {
            self.0.remove(&voter);
        } else {
            self.0.insert(voter, target);
        }
    }

    pub fn undelegate(&mut self, voter: &str) {
        self.0.remove(voter);
    }

    /// The voter this voter hands her ballot to (herself by default).
    pub fn target<'a>(&'a self, voter: &'a VoterId) -> &'a VoterId {
        self.0.get(voter).unwrap_or(voter)
    }

    pub fn is_delegating(&self, voter: &str) -> bool {
        self.0.contains_key(voter)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VoterId, &VoterId)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<BTreeMap<VoterId, VoterId>> for DelegationProfile {
    fn from(map: BTreeMap<VoterId, VoterId>) -> Self {
        let mut p = DelegationProfile::new();
        for (voter, target) in map {
            p.delegate(voter, target);
        }
        p
    }
}

/// Ballot lists under approval voting, in priority order.
pub type ApprovalProfile = BTreeMap<VoterId, Vec<CandidateId>>;

/// Explicit power splits under cumulative voting.
pub type CumulativeProfile = BTreeMap<VoterId, Vec<(CandidateId, Power)>>;

/// Phase 2a: follow delegation chains to their roots and pool power there.
///
/// Output maps every chain root to its own power plus everything delegated
/// in, transitively. Voters who delegate away do not appear. Total power is
/// conserved.
pub fn resolve_delegations(
    powers: &BTreeMap<VoterId, Power>,
    delegations: &DelegationProfile,
) -> Result<BTreeMap<VoterId, Power>> {
    for (voter, target) in delegations.iter() {
        if voter != target && !powers.contains_key(target) {
            return Err(Error::DanglingDelegation {
                voter: voter.clone(),
                target: target.clone(),
            });
        }
    }
    check_acyclic(delegations)?;

    let mut root_cache: HashMap<&VoterId, &VoterId> = HashMap::new();
    let mut pooled: BTreeMap<VoterId, Power> = BTreeMap::new();
    for (voter, power) in powers {
        let root = match root_cache.get(voter) {
            Some(r) => *r,
            None => {
                let mut path = vec![voter];
                let mut cur = voter;
                loop {
                    let next = delegations.target(cur);
                    if next == cur {
                        break;
                    }
                    cur = next;
                    if let Some(r) = root_cache.get(cur) {
                        cur = *r;
                        break;
                    }
                    path.push(cur);
                }
                for seen in path {
                    root_cache.insert(seen, cur);
                }
                cur
            }
        };
        let entry = pooled.entry(root.clone()).or_insert(Power::ZERO);
        *entry = entry.checked_add(*power)?;
    }
    Ok(pooled)
}

/// Rejects delegation cycles, reporting the voters on the cycle in walk order.
fn check_acyclic(delegations: &DelegationProfile) -> Result<()> {
    // 0 = unvisited, 1 = on the current walk, 2 = known cycle-free
    let mut state: HashMap<&VoterId, u8> = HashMap::new();
    for (start, _) in delegations.iter() {
        if state.get(start).copied().unwrap_or(0) != 0 {
            continue;
        }
        let mut walk = vec![start];
        state.insert(start, 1);
        loop {
            let cur = *walk.last().unwrap();
            let next = delegations.target(cur);
            if next == cur || state.get(next).copied().unwrap_or(0) == 2 {
                break;
            }
            if state.get(next).copied().unwrap_or(0) == 1 {
                let from = walk.iter().position(|v| *v == next).unwrap();
                let members: Vec<String> = walk[from..].iter().map(|v| (*v).clone()).collect();
                return Err(Error::DelegationCycle { members });
            }
            state.insert(next, 1);
            walk.push(next);
        }
        for v in walk {
            state.insert(v, 2);
        }
    }
    Ok(())
}

fn check_ballot(voter: &VoterId, candidates: usize, config: &SystemConfig) -> Result<()> {
    if candidates > config.max_votes as usize {
        return Err(Error::TooManyVotes {
            voter: voter.clone(),
            cast: candidates,
            limit: config.max_votes,
        });
    }
    Ok(())
}

/// Phase 2b, approval rule: every listed candidate receives the voter's full
/// pooled power.
pub fn tally_approval(
    gurus: &BTreeMap<VoterId, Power>,
    profile: &ApprovalProfile,
    config: &SystemConfig,
) -> Result<BTreeMap<CandidateId, Power>> {
    let mut scores: BTreeMap<CandidateId, Power> = BTreeMap::new();
    for (voter, list) in profile {
        let power = *gurus
            .get(voter)
            .ok_or_else(|| Error::UnknownVoter(voter.clone()))?;
        check_ballot(voter, list.len(), config)?;
        let mut seen: BTreeSet<&CandidateId> = BTreeSet::new();
        for candidate in list {
            if !seen.insert(candidate) {
                return Err(Error::DuplicateCandidate {
                    voter: voter.clone(),
                    candidate: candidate.clone(),
                });
            }
            let entry = scores.entry(candidate.clone()).or_insert(Power::ZERO);
            *entry = entry.checked_add(power)?;
        }
    }
    Ok(scores)
}

/// Phase 2b, cumulative rule: listed allocations must not exceed the voter's
/// pooled power.
pub fn tally_cumulative(
    gurus: &BTreeMap<VoterId, Power>,
    profile: &CumulativeProfile,
    config: &SystemConfig,
) -> Result<BTreeMap<CandidateId, Power>> {
    let mut scores: BTreeMap<CandidateId, Power> = BTreeMap::new();
    for (voter, allocations) in profile {
        let power = *gurus
            .get(voter)
            .ok_or_else(|| Error::UnknownVoter(voter.clone()))?;
        check_ballot(voter, allocations.len(), config)?;
        let mut seen: BTreeSet<&CandidateId> = BTreeSet::new();
        let mut spent = Power::ZERO;
        for (candidate, allocation) in allocations {
            if !seen.insert(candidate) {
                return Err(Error::DuplicateCandidate {
                    voter: voter.clone(),
                    candidate: candidate.clone(),
                });
            }
            spent = spent.checked_add(*allocation)?;
        }
        if spent > power {
            return Err(Error::OverAllocation {
                voter: voter.clone(),
                allocated: spent,
                available: power,
                excess: spent.saturating_sub(power),
            });
        }
        for (candidate, allocation) in allocations {
            let entry = scores.entry(candidate.clone()).or_insert(Power::ZERO);
            *entry = entry.checked_add(*allocation)?;
        }
    }
    Ok(scores)
}

/// The elected seats, highest score first, plus the combined committee score.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Committee {
    pub members: Vec<(CandidateId, Power)>,
    pub total_score: Power,
}

impl Committee {
    pub fn contains(&self, candidate: &str) -> bool {
        self.members.iter().any(|(c, _)| c == candidate)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// All candidates ordered by score descending; exact ties break toward the
/// lexicographically smaller candidate id, so the order is total.
pub fn ranked_candidates(scores: &BTreeMap<CandidateId, Power>) -> Vec<(CandidateId, Power)> {
    let mut ranked: Vec<(CandidateId, Power)> =
        scores.iter().map(|(c, p)| (c.clone(), *p)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
}

/// Phase 2c: the top `committee_size` candidates by score. Fewer registered
/// candidates than seats means all of them are elected.
pub fn elect(scores: &BTreeMap<CandidateId, Power>, config: &SystemConfig) -> Committee {
    let mut members = ranked_candidates(scores);
    members.truncate(config.committee_size as usize);
    let total_score = members.iter().map(|(_, p)| *p).sum();
    Committee {
        members,
        total_score,
    }
}

/// Phase 3: a proposal passes with at least `min_approvals` distinct
/// committee-member approvals. Non-member approvals never count.
pub fn passes(
    approvals: &BTreeSet<CandidateId>,
    committee: &Committee,
    config: &SystemConfig,
) -> bool {
    let backing = committee
        .members
        .iter()
        .filter(|(c, _)| approvals.contains(c))
        .count();
    backing >= config.min_approvals as usize
}
