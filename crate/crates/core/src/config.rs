//! Governance system parameters: the voting rule plus (v, t, n, lambda, delta).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::power::Rational;

/// How one coin of voting power spreads over a ballot.
///
/// Under approval voting each listed candidate receives the voter's full
/// power; under cumulative voting the voter splits her power across the list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VotingRule {
    Approval,
    Cumulative,
}

impl VotingRule {
    /// Short display tag: `AV` / `CV`.
    pub fn tag(self) -> &'static str {
        match self {
            VotingRule::Approval => "AV",
            VotingRule::Cumulative => "CV",
        }
    }
}

impl fmt::Display for VotingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VotingRule::Approval => write!(f, "approval"),
            VotingRule::Cumulative => write!(f, "cumulative"),
        }
    }
}

impl FromStr for VotingRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "av" | "approval" => Ok(VotingRule::Approval),
            "cv" | "cumulative" => Ok(VotingRule::Cumulative),
            other => Err(Error::InvalidConfig(format!("unknown voting rule {other}"))),
        }
    }
}

/// Full parameter set of one governance deployment.
///
/// `max_votes` is the ballot size limit v, `committee_size` the number of
/// elected seats n, `min_approvals` the approval threshold t a proposal needs.
/// `lambda` converts staked coins into power units; `delta` is the size of the
/// smallest power unit (all powers are integer counts of it).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub rule: VotingRule,
    pub max_votes: u32,
    pub committee_size: u32,
    pub min_approvals: u32,
    pub lambda: Rational,
    pub delta: u64,
}

impl SystemConfig {
    pub fn new(rule: VotingRule, max_votes: u32, committee_size: u32, min_approvals: u32) -> Self {
        SystemConfig {
            rule,
            max_votes,
            committee_size,
            min_approvals,
            lambda: Rational::one(),
            delta: 1,
        }
    }

    pub fn with_lambda(mut self, lambda: Rational) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_delta(mut self, delta: u64) -> Self {
        self.delta = delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_votes < 1 {
            return Err(Error::InvalidConfig("max_votes must be at least 1".into()));
        }
        if self.committee_size < 1 {
            return Err(Error::InvalidConfig(
                "committee_size must be at least 1".into(),
            ));
        }
        if self.min_approvals < 1 {
            return Err(Error::InvalidConfig(
                "min_approvals must be at least 1".into(),
            ));
        }
        if self.min_approvals > self.committee_size {
            return Err(Error::InvalidConfig(format!(
                "min_approvals {} exceeds committee_size {}",
                self.min_approvals, self.committee_size
            )));
        }
        if !self.lambda.is_positive() {
            return Err(Error::NonPositiveLambda(self.lambda.to_string()));
        }
        if self.delta < 1 {
            return Err(Error::InvalidConfig("delta must be at least 1".into()));
        }
        Ok(())
    }

    /// Supermajority regime: 2n/3 < t < n, checked exactly.
    pub fn is_supermajority(&self) -> bool {
        let n = self.committee_size as u64;
        let t = self.min_approvals as u64;
        2 * n < 3 * t && t < n
    }

    /// n - t + 1: how many seats must stay out of attacker hands to block
    /// proposals, and equally the number of seats defenders spread over.
    pub fn contested_seats(&self) -> u32 {
        assert!(
            self.min_approvals >= 1 && self.min_approvals <= self.committee_size,
            "config must be validated first"
        );
        self.committee_size - self.min_approvals + 1
    }

    /// Named chain presets: `eosio`, `steem`, `tron`.
    pub fn preset(name: &str) -> Option<SystemConfig> {
        match name.to_ascii_lowercase().as_str() {
            "eosio" => Some(Self::eosio()),
            "steem" => Some(Self::steem()),
            "tron" => Some(Self::tron()),
            _ => None,
        }
    }

    pub fn eosio() -> SystemConfig {
        SystemConfig::new(VotingRule::Approval, 30, 21, 15)
    }

    /// The rotating extra seat is ignored: 20 ranked seats.
    pub fn steem() -> SystemConfig {
        SystemConfig::new(VotingRule::Approval, 30, 20, 17)
            .with_lambda(Rational::from_integer(2000))
    }

    pub fn tron() -> SystemConfig {
        SystemConfig::new(VotingRule::Cumulative, 30, 27, 19)
    }
}
