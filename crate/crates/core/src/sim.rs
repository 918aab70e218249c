//! What-if analysis over recorded voting states: replays each day under an
//! alternative voting rule or ballot cap and measures how the defended
//! threshold, passive resistance, and risk index respond.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::config::{SystemConfig, VotingRule};
use crate::error::{Error, Result};
use crate::metrics::{
    passive_resistance, risk_index, tally_state, threshold_power, RiskIndex, VotingState,
};
use crate::power::{even_allocation, power_from_u128, Power, Rational};
use crate::snapshot::{PowerSnapshot, VotingSnapshot};
use crate::CandidateId;

/// Keeps the first `v_new` entries of a priority vector. Voters asked to
/// shorten their ballot drop the most recently added candidates first.
pub fn withdraw_votes(vector: &[CandidateId], v_new: u32) -> Vec<CandidateId> {
    vector.iter().take(v_new as usize).cloned().collect()
}

/// Splits `power` evenly over the vector, remainder to the earliest-priority
/// candidates. The allocations always sum to `power` exactly.
pub fn av_to_cv(vector: &[CandidateId], power: Power) -> Result<Vec<(CandidateId, Power)>> {
    if vector.is_empty() {
        return Err(Error::EmptyPriorityVector);
    }
    let levels = even_allocation(power.units() as u128, vector.len());
    vector
        .iter()
        .zip(levels)
        .map(|(c, l)| Ok((c.clone(), power_from_u128(l)?)))
        .collect()
}

/// Drops allocation weights, keeping the candidate list in priority order.
/// Unallocated residual power is ignored; every listed candidate counts at
/// full power once tallied under the approval rule.
pub fn cv_to_av(allocations: &[(CandidateId, Power)]) -> Vec<CandidateId> {
    allocations.iter().map(|(c, _)| c.clone()).collect()
}

/// A voting-rule variant to evaluate on a fixed (t, n): approval voting with
/// a ballot cap, or cumulative voting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(into = "String")]
pub enum DesignChoice {
    Approval { max_votes: u32 },
    Cumulative,
}

impl DesignChoice {
    /// The base preset with this choice's rule and ballot cap swapped in.
    pub fn config(&self, base: &SystemConfig) -> SystemConfig {
        let mut cfg = base.clone();
        match self {
            DesignChoice::Approval { max_votes } => {
                cfg.rule = VotingRule::Approval;
                cfg.max_votes = *max_votes;
            }
            DesignChoice::Cumulative => {
                cfg.rule = VotingRule::Cumulative;
            }
        }
        cfg
    }

    /// Comma-free form that round-trips through [`FromStr`]: `av:5`, `cv`.
    pub fn key(&self) -> String {
        match self {
            DesignChoice::Approval { max_votes } => format!("av:{max_votes}"),
            DesignChoice::Cumulative => "cv".to_string(),
        }
    }
}

impl fmt::Display for DesignChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DesignChoice::Approval { max_votes } => write!(f, "(AV,{max_votes})"),
            DesignChoice::Cumulative => write!(f, "CV"),
        }
    }
}

impl From<DesignChoice> for String {
    fn from(choice: DesignChoice) -> String {
        choice.to_string()
    }
}

impl FromStr for DesignChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<DesignChoice> {
        let trimmed = s.trim();
        let lower = trimmed.to_ascii_lowercase();
        if lower == "cv" {
            return Ok(DesignChoice::Cumulative);
        }
        let inner = lower
            .strip_prefix("(av,")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| lower.strip_prefix("av:"));
        if let Some(k) = inner {
            let max_votes: u32 = k
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad design choice {trimmed:?}")))?;
            if max_votes == 0 {
                return Err(Error::InvalidConfig("ballot cap must be at least 1".into()));
            }
            return Ok(DesignChoice::Approval { max_votes });
        }
        Err(Error::InvalidConfig(format!(
            "bad design choice {trimmed:?} (expected \"av:K\", \"(AV,K)\" or \"cv\")"
        )))
    }
}

/// One (choice, day) cell of the decay grid.
#[derive(Clone, Debug, Serialize)]
pub struct DecayPoint {
    pub choice: DesignChoice,
    pub date: chrono::NaiveDate,
    /// Score of the lowest defended seat under this choice.
    pub threshold: Power,
    /// Passive resistance under this choice.
    pub resistance: Power,
    pub risk: RiskIndex,
}

/// Grid rows ordered by choice, then date.
#[derive(Clone, Debug, Default, Serialize)]
pub struct DecayCurve {
    pub points: Vec<DecayPoint>,
}

impl DecayCurve {
    pub fn series(&self, choice: DesignChoice) -> impl Iterator<Item = &DecayPoint> {
        self.points.iter().filter(move |p| p.choice == choice)
    }
}

/// Replays every snapshot day under every design choice.
///
/// Each voter follows the same heuristic: under (AV,k) she keeps the first k
/// entries of her priority vector at full weight, under CV she splits her
/// power evenly over the whole vector. The snapshots must line up one
/// `VotingSnapshot` per `PowerSnapshot`, dates strictly increasing.
pub fn simulate_design_grid(
    days: &[(PowerSnapshot, VotingSnapshot)],
    base: &SystemConfig,
    choices: &[DesignChoice],
) -> Result<DecayCurve> {
    base.validate()?;
    for window in days.windows(2) {
        if window[0].0.date >= window[1].0.date {
            return Err(Error::MismatchedSnapshots(format!(
                "dates not strictly increasing at {}",
                window[1].0.date
            )));
        }
    }
    for (powers, votes) in days {
        if powers.date != votes.date {
            return Err(Error::MismatchedSnapshots(format!(
                "power snapshot {} paired with voting snapshot {}",
                powers.date, votes.date
            )));
        }
    }
    let mut ordered: Vec<DesignChoice> = choices.to_vec();
    ordered.sort_unstable();
    ordered.dedup();

    let mut curve = DecayCurve::default();
    for choice in ordered {
        let cfg = choice.config(base);
        cfg.validate()?;
        for (powers, votes) in days {
            let mut state = VotingState::from_snapshots(powers, votes);
            if let DesignChoice::Approval { max_votes } = choice {
                for vector in state.profiles.values_mut() {
                    *vector = withdraw_votes(vector, max_votes);
                }
            }
            let scores = tally_state(&state, &cfg)?;
            let threshold = threshold_power(&scores, &cfg);
            let resistance = passive_resistance(&scores, &cfg)?;
            curve.points.push(DecayPoint {
                choice,
                date: powers.date,
                threshold,
                resistance,
                risk: risk_index(powers, resistance),
            });
        }
    }
    Ok(curve)
}

/// Ordering relation between two adjacent ranked choices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    /// Relative gap within the tolerance.
    Approx,
    /// Relative gap within twice the tolerance.
    AtLeast,
    Greater,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Relation::Approx => "≈",
            Relation::AtLeast => "≥",
            Relation::Greater => ">",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RankedChoice {
    pub choice: DesignChoice,
    /// Mean daily passive resistance, exact.
    pub mean_resistance: Rational,
}

/// Design choices ordered by mean daily passive resistance, best first, with
/// an adjacency relation between each pair.
#[derive(Clone, Debug, Serialize)]
pub struct Ranking {
    pub entries: Vec<RankedChoice>,
    /// `relations[i]` sits between `entries[i]` and `entries[i+1]`.
    pub relations: Vec<Relation>,
}

impl fmt::Display for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, entry) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, " {} ", self.relations[i - 1])?;
            }
            write!(f, "{}", entry.choice)?;
        }
        Ok(())
    }
}

/// Ranks the grid's choices by mean daily passive resistance.
///
/// Adjacent means compare by relative gap against the smaller value: within
/// `tolerance` reads ≈, within twice reads ≥, beyond that >. All choices in
/// the curve cover the same days, so means compare exactly.
pub fn rank_choices(curve: &DecayCurve, tolerance: &Rational) -> Ranking {
    let mut sums: BTreeMap<DesignChoice, (u128, u64)> = BTreeMap::new();
    for point in &curve.points {
        let slot = sums.entry(point.choice).or_insert((0, 0));
        slot.0 += point.resistance.units() as u128;
        slot.1 += 1;
    }
    let mut entries: Vec<RankedChoice> = sums
        .into_iter()
        .map(|(choice, (sum, count))| RankedChoice {
            choice,
            mean_resistance: Rational::new(sum as i128, count.max(1) as i128)
                .expect("day count is positive"),
        })
        .collect();
    entries.sort_by(|a, b| {
        b.mean_resistance
            .cmp(&a.mean_resistance)
            .then_with(|| a.choice.cmp(&b.choice))
    });

    let mut relations = Vec::new();
    for pair in entries.windows(2) {
        let (hi, lo) = (&pair[0].mean_resistance, &pair[1].mean_resistance);
        let relation = if hi == lo {
            Relation::Approx
        } else if lo.is_positive() {
            let gap = hi.sub(lo).div(lo).expect("lo is positive");
            if gap <= *tolerance {
                Relation::Approx
            } else if gap <= tolerance.add(tolerance) {
                Relation::AtLeast
            } else {
                Relation::Greater
            }
        } else {
            Relation::Greater
        };
        relations.push(relation);
    }
    Ranking { entries, relations }
}

/// Power a candidate received from each ballot position.
#[derive(Clone, Debug, Serialize)]
pub struct CandidateBreakdown {
    pub candidate: CandidateId,
    pub total: Power,
    /// `segments[i]` is the power of voters ranking the candidate at
    /// priority i+1; segments sum to `total`.
    pub segments: Vec<Power>,
}

/// Splits each top candidate's approval score by the ballot position it came
/// from. Candidates rank by total received power, ties by id.
pub fn priority_breakdown(
    powers: &PowerSnapshot,
    votes: &VotingSnapshot,
    top_k: usize,
) -> Vec<CandidateBreakdown> {
    let mut segments: BTreeMap<&CandidateId, Vec<Power>> = BTreeMap::new();
    for (voter, vector) in &votes.profiles {
        let Some(power) = powers.powers.get(voter) else {
            continue;
        };
        for (i, candidate) in vector.iter().enumerate() {
            let slots = segments.entry(candidate).or_default();
            if slots.len() <= i {
                slots.resize(i + 1, Power::ZERO);
            }
            slots[i] = slots[i].saturating_add(*power);
        }
    }
    let mut breakdown: Vec<CandidateBreakdown> = segments
        .into_iter()
        .map(|(candidate, segments)| CandidateBreakdown {
            candidate: candidate.clone(),
            total: segments.iter().copied().sum(),
            segments,
        })
        .collect();
    breakdown.sort_by(|a, b| b.total.cmp(&a.total).then_with(|| a.candidate.cmp(&b.candidate)));
    breakdown.truncate(top_k);
    breakdown
}
