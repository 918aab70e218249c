//! The committee takeover game.
//!
//! A resister first spreads her power over candidates she backs; an attacker
//! then buys exactly enough power to put `min_approvals` fresh candidates
//! into the committee. The attacker wins exact score ties everywhere in this
//! module. Closed-form equilibrium strategies and resistance values are
//! cross-checked by [`brute_force_equilibrium`], which enumerates every
//! resister allocation and derives the attacker's cheapest reply from real
//! election runs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::{SystemConfig, VotingRule};
use crate::election::elect;
use crate::error::{Error, Result};
use crate::power::{even_allocation, mul_div_ceil, power_from_u128, Power, Rational};
use crate::CandidateId;

/// How many candidates one unit of power can back under the configured rule.
///
/// Approval voting amplifies: the attacker reuses each coin on up to
/// `min(v, t)` candidates and the resister on up to `min(v, n-t+1)`.
/// Cumulative voting never amplifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Amplification {
    pub attacker: u64,
    pub resister: u64,
}

pub fn amplification(config: &SystemConfig) -> Amplification {
    match config.rule {
        VotingRule::Approval => Amplification {
            attacker: config.max_votes.min(config.min_approvals) as u64,
            resister: config.max_votes.min(config.contested_seats()) as u64,
        },
        VotingRule::Cumulative => Amplification {
            attacker: 1,
            resister: 1,
        },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Attacker,
    Resister,
}

/// One side's pure strategy: per-candidate power allocations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strategy {
    pub side: Side,
    pub allocations: Vec<(CandidateId, Power)>,
}

impl Strategy {
    pub fn total(&self) -> Power {
        self.allocations.iter().map(|(_, p)| *p).sum()
    }

    /// The k-th largest allocation (1-based), zero when fewer than k exist.
    pub fn nth_largest(&self, k: usize) -> Power {
        if k == 0 {
            return Power::ZERO;
        }
        let mut levels: Vec<Power> = self.allocations.iter().map(|(_, p)| *p).collect();
        levels.sort_unstable_by(|a, b| b.cmp(a));
        levels.get(k - 1).copied().unwrap_or(Power::ZERO)
    }
}

fn side_ids(prefix: char, count: usize) -> Vec<CandidateId> {
    (1..=count).map(|i| format!("{prefix}{i:02}")).collect()
}

/// The resister's equilibrium defence: spread the amplified power budget
/// evenly over the n-t+1 seats the attacker must break, remainder one unit at
/// a time to the earlier candidates. No candidate can carry more than the
/// resister's raw power, since a single coin backs a candidate at most once.
pub fn resister_strategy(resister_power: Power, config: &SystemConfig) -> Result<Strategy> {
    config.validate()?;
    let seats = config.contested_seats() as usize;
    let budget = amplification(config).resister as u128 * resister_power.units() as u128;
    let allocations = side_ids('r', seats)
        .into_iter()
        .zip(even_allocation(budget, seats))
        .map(|(id, level)| {
            let level = level.min(resister_power.units() as u128);
            Ok((id, power_from_u128(level)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Strategy {
        side: Side::Resister,
        allocations,
    })
}

/// The attacker's cheapest winning reply to a resister allocation.
///
/// Each of t fresh candidates gets exactly the (n-t+1)-th largest resister
/// allocation, which (winning ties) displaces every defended seat but the
/// top n-t. Returns the strategy together with its raw power cost.
pub fn attacker_best_response(
    resister: &Strategy,
    config: &SystemConfig,
) -> Result<(Strategy, Power)> {
    let threshold = resister.nth_largest(config.contested_seats() as usize);
    let t = config.min_approvals as usize;
    let allocations = side_ids('a', t)
        .into_iter()
        .map(|id| (id, threshold))
        .collect();
    let cost = mul_div_ceil(
        threshold,
        config.min_approvals as u64,
        amplification(config).attacker,
    )?;
    Ok((
        Strategy {
            side: Side::Attacker,
            allocations,
        },
        cost,
    ))
}

/// Committee seats the attacker captures when both strategies stand.
///
/// Runs a full election over both candidate slates; exact ties go to the
/// attacker. Candidate ids on the two sides must be disjoint.
pub fn contest_seats(attacker: &Strategy, resister: &Strategy, config: &SystemConfig) -> u32 {
    let mut entries: Vec<(Power, bool, &CandidateId)> = Vec::new();
    for (id, p) in &attacker.allocations {
        entries.push((*p, true, id));
    }
    for (id, p) in &resister.allocations {
        entries.push((*p, false, id));
    }
    // score desc, attacker before resister on ties, then id
    entries.sort_by(|a, b| {
        b.0.cmp(&a.0)
            .then_with(|| b.1.cmp(&a.1))
            .then_with(|| a.2.cmp(b.2))
    });
    entries
        .iter()
        .take(config.committee_size as usize)
        .filter(|(_, is_attacker, _)| *is_attacker)
        .count() as u32
}

/// Active resistance: the attacker power needed against a resister playing
/// her equilibrium defence.
pub fn active_resistance(resister_power: Power, config: &SystemConfig) -> Result<Power> {
    Ok(equilibrium(resister_power, config)?.resistance)
}

/// Exact per-unit resistance of the equilibrium defence:
/// `zeta_r * t / (zeta_a * (n-t+1))`. The integer [`active_resistance`]
/// equals this factor times the resister power whenever the division is
/// clean; otherwise the indivisible remainder shifts it by the even-split
/// floor and the attacker's ceil.
pub fn resistance_factor(config: &SystemConfig) -> Result<Rational> {
    let amp = amplification(config);
    Rational::new(
        amp.resister as i128 * config.min_approvals as i128,
        amp.attacker as i128 * config.contested_seats() as i128,
    )
}

/// The best factor any ballot-size choice can reach, `t / (n-t+1)`, plus
/// whether the configured v attains it (v <= n-t+1) and whether the config
/// sits in the supermajority regime the bound is meaningful for.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResistanceBound {
    pub factor: Rational,
    pub achievable_with_v: bool,
    pub supermajority: bool,
}

pub fn upper_bound_factor(config: &SystemConfig) -> Result<ResistanceBound> {
    config.validate()?;
    Ok(ResistanceBound {
        factor: Rational::new(
            config.min_approvals as i128,
            config.contested_seats() as i128,
        )?,
        achievable_with_v: config.max_votes <= config.contested_seats(),
        supermajority: config.is_supermajority(),
    })
}

/// Resistance when whole candidate slates, not power, are the scarce
/// resource: each call to action fields up to v candidates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct C2cReport {
    pub resistance: Power,
    /// Calls the attacker needs to field t candidates: `ceil(t / v)`.
    pub attacker_calls: u64,
    /// Calls the resister needs to cover n-t+1 seats: `ceil((n-t+1) / v)`.
    pub resister_calls: u64,
    /// `ceil(t / (n-t+1))`, the best factor over all v.
    pub bound_factor: u64,
}

/// Community-to-community takeover resistance. Approval rule only: slate
/// sharing has no analogue under cumulative splits.
pub fn c2c_resistance(resister_power: Power, config: &SystemConfig) -> Result<C2cReport> {
    config.validate()?;
    if config.rule != VotingRule::Approval {
        return Err(Error::ApprovalOnly {
            op: "community takeover analysis",
        });
    }
    let v = config.max_votes as u64;
    let t = config.min_approvals as u64;
    let seats = config.contested_seats() as u64;
    let attacker_calls = t.div_ceil(v);
    let resister_calls = seats.div_ceil(v);
    let units =
        resister_power.units() as u128 * attacker_calls as u128 / resister_calls as u128;
    Ok(C2cReport {
        resistance: power_from_u128(units)?,
        attacker_calls,
        resister_calls,
        bound_factor: t.div_ceil(seats),
    })
}

/// Both equilibrium strategies with the resulting resistance and payoffs.
///
/// `resistance` is the attacker's raw power cost; payoffs are the signed
/// amplified cost (positive for the resister, negative for the attacker).
/// `upper_bound` is `ceil(t * p_r / (n-t+1))`, the cost ceiling the best
/// ballot-size choice forces; rounding is up because the attacker buys whole
/// units.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EquilibriumReport {
    pub attacker_strategy: Strategy,
    pub resister_strategy: Strategy,
    pub resistance: Power,
    pub upper_bound: Power,
    pub amplification: Amplification,
    pub resister_payoff: i128,
    pub attacker_payoff: i128,
    pub at_upper_bound: bool,
}

pub fn equilibrium(resister_power: Power, config: &SystemConfig) -> Result<EquilibriumReport> {
    let defence = resister_strategy(resister_power, config)?;
    let (attack, cost) = attacker_best_response(&defence, config)?;
    let amp = amplification(config);
    let upper_bound = mul_div_ceil(
        resister_power,
        config.min_approvals as u64,
        config.contested_seats() as u64,
    )?;
    let amplified_cost = amp.attacker as i128 * cost.units() as i128;
    Ok(EquilibriumReport {
        at_upper_bound: cost == upper_bound,
        attacker_strategy: attack,
        resister_strategy: defence,
        resistance: cost,
        upper_bound,
        amplification: amp,
        resister_payoff: amplified_cost,
        attacker_payoff: -amplified_cost,
    })
}

/// One takeover game instance sized for exhaustive search.
#[derive(Clone, Debug)]
pub struct GameInstance {
    pub config: SystemConfig,
    pub resister_power: Power,
    pub max_strategies: u128,
}

pub const DEFAULT_MAX_STRATEGIES: u128 = 2_000_000;

impl GameInstance {
    pub fn new(config: SystemConfig, resister_power: Power) -> Self {
        GameInstance {
            config,
            resister_power,
            max_strategies: DEFAULT_MAX_STRATEGIES,
        }
    }
}

/// Number of ways to spread the amplified defence budget over n candidate
/// slots (ignoring per-candidate caps, so an upper estimate). Saturates.
pub fn enumeration_size(instance: &GameInstance) -> u128 {
    let budget = amplification(&instance.config).resister as u128
        * instance.resister_power.units() as u128;
    let slots = instance.config.committee_size as u128;
    binomial_saturating(budget + slots - 1, slots - 1)
}

fn binomial_saturating(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 1..=k {
        match result.checked_mul(n - k + i) {
            Some(v) => result = v / i,
            None => return u128::MAX,
        }
    }
    result
}

/// Solves the takeover game by backward induction over every resister pure
/// strategy, with the attacker's cheapest reply found by running elections
/// rather than from the closed forms. Refuses instances whose strategy count
/// exceeds `max_strategies`.
pub fn brute_force_equilibrium(instance: &GameInstance) -> Result<EquilibriumReport> {
    let config = &instance.config;
    config.validate()?;
    let amp = amplification(config);
    let n = config.committee_size as usize;
    let t = config.min_approvals as u64;
    let budget = amp.resister as u128 * instance.resister_power.units() as u128;
    let cap = instance.resister_power.units() as u128;

    let strategies = enumeration_size(instance);
    if strategies > instance.max_strategies {
        return Err(Error::EnumerationBound {
            strategies,
            bound: instance.max_strategies,
        });
    }

    // best = (resister payoff, defence levels, attacker reply level);
    // lexicographically first composition wins payoff ties because the
    // replacement below is strict
    let mut best: Option<(u128, Vec<u128>, u64)> = None;
    let mut buf = vec![0u128; n];
    for_each_composition(budget, cap, &mut buf, 0, &mut |levels| {
        let reply_level = cheapest_winning_level(levels, config);
        let cost = (reply_level as u128 * t as u128).div_ceil(amp.attacker as u128);
        let payoff = cost * amp.attacker as u128;
        match &best {
            Some((current, _, _)) if *current >= payoff => {}
            _ => best = Some((payoff, levels.to_vec(), reply_level)),
        }
    });

    let (payoff, defence_levels, reply_level) =
        best.expect("at least the all-zero defence exists");
    let defence = Strategy {
        side: Side::Resister,
        allocations: side_ids('r', n)
            .into_iter()
            .zip(&defence_levels)
            .filter(|(_, level)| **level > 0)
            .map(|(id, level)| Ok((id, power_from_u128(*level)?)))
            .collect::<Result<Vec<_>>>()?,
    };
    let attack = Strategy {
        side: Side::Attacker,
        allocations: side_ids('a', t as usize)
            .into_iter()
            .map(|id| (id, Power(reply_level)))
            .collect(),
    };
    let cost = power_from_u128((reply_level as u128 * t as u128).div_ceil(amp.attacker as u128))?;
    let upper_bound = mul_div_ceil(
        instance.resister_power,
        config.min_approvals as u64,
        config.contested_seats() as u64,
    )?;
    let amplified_cost = payoff as i128;
    Ok(EquilibriumReport {
        at_upper_bound: cost == upper_bound,
        attacker_strategy: attack,
        resister_strategy: defence,
        resistance: cost,
        upper_bound,
        amplification: amp,
        resister_payoff: amplified_cost,
        attacker_payoff: -amplified_cost,
    })
}

/// Smallest even per-candidate level that takes t seats against the given
/// defence, found by binary search over election outcomes. Seats won are
/// monotone in the level, and the (n-t+1)-th largest defence level always
/// wins, so the search is bounded.
fn cheapest_winning_level(defence: &[u128], config: &SystemConfig) -> u64 {
    let seats = config.contested_seats() as usize;
    let mut sorted: Vec<u128> = defence.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let mut lo = 0u64;
    let mut hi = sorted.get(seats - 1).copied().unwrap_or(0) as u64;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if election_seats(defence, mid, config) >= config.min_approvals {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    debug_assert!(election_seats(defence, lo, config) >= config.min_approvals);
    lo
}

/// Seats the attacker wins with `level` on each of t candidates, decided by
/// the real election pipeline. Attacker ids sort before defence ids, which
/// under the lexicographic tie rule hands exact ties to the attacker.
fn election_seats(defence: &[u128], level: u64, config: &SystemConfig) -> u32 {
    let mut scores: BTreeMap<CandidateId, Power> = BTreeMap::new();
    for (i, d) in defence.iter().enumerate() {
        scores.insert(format!("r{:02}", i + 1), Power(*d as u64));
    }
    for id in side_ids('a', config.min_approvals as usize) {
        scores.insert(id, Power(level));
    }
    let committee = elect(&scores, config);
    committee
        .members
        .iter()
        .filter(|(id, _)| id.starts_with('a'))
        .count() as u32
}

fn for_each_composition(
    remaining: u128,
    cap: u128,
    buf: &mut Vec<u128>,
    idx: usize,
    f: &mut impl FnMut(&[u128]),
) {
    if idx == buf.len() - 1 {
        if remaining <= cap {
            buf[idx] = remaining;
            f(buf);
        }
        return;
    }
    let upper = cap.min(remaining);
    for value in 0..=upper {
        buf[idx] = value;
        for_each_composition(remaining - value, cap, buf, idx + 1, f);
    }
    buf[idx] = 0;
}
