//! Daily materialized views of a chain's governance state.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::power::Power;
use crate::{CandidateId, VoterId};

/// Per-voter voting power on one day, delegation already resolved: each entry
/// holds the voter's own power plus everything delegated in. Voters who
/// delegate away are absent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerSnapshot {
    pub date: NaiveDate,
    pub powers: BTreeMap<VoterId, Power>,
}

impl PowerSnapshot {
    pub fn new(date: NaiveDate) -> Self {
        PowerSnapshot {
            date,
            powers: BTreeMap::new(),
        }
    }

    pub fn total_power(&self) -> Power {
        self.powers.values().copied().sum()
    }
}

/// Per-voter candidate lists on one day, in priority order: candidates are
/// sorted by how long they have stayed on the ballot, earliest vote first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VotingSnapshot {
    pub date: NaiveDate,
    pub profiles: BTreeMap<VoterId, Vec<CandidateId>>,
}

impl VotingSnapshot {
    pub fn new(date: NaiveDate) -> Self {
        VotingSnapshot {
            date,
            profiles: BTreeMap::new(),
        }
    }
}
