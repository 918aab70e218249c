//! Event-log ingestion, deterministic replay into daily snapshots, and
//! checksummed persistence of the materialized dataset.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Duration, NaiveDate, SubsecRound, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::SystemConfig;
use crate::election::{resolve_delegations, stake, DelegationProfile};
use crate::error::{Error, Result};
use crate::power::{Power, Rational};
use crate::snapshot::{PowerSnapshot, VotingSnapshot};
use crate::{CandidateId, VoterId};

/// One on-chain governance action.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventRecord {
    pub timestamp: DateTime<Utc>,
    pub voter: VoterId,
    pub kind: EventKind,
}

/// Vote/Unvote carry candidate deltas: voting appends new candidates to the
/// voter's priority vector, unvoting removes listed ones. Coin amounts are
/// exact decimals.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EventKind {
    Vote { candidates: Vec<CandidateId> },
    Unvote { candidates: Vec<CandidateId> },
    Delegate { target: VoterId },
    Undelegate,
    Stake { coins: Rational },
    Unstake { coins: Rational },
}

impl EventKind {
    pub fn tag(&self) -> &'static str {
        match self {
            EventKind::Vote { .. } => "vote",
            EventKind::Unvote { .. } => "unvote",
            EventKind::Delegate { .. } => "delegate",
            EventKind::Undelegate => "undelegate",
            EventKind::Stake { .. } => "stake",
            EventKind::Unstake { .. } => "unstake",
        }
    }
}

/// Appends candidates the vector does not already list; existing entries
/// keep their priority position.
pub(crate) fn apply_vote(vector: &mut Vec<CandidateId>, additions: &[CandidateId]) {
    for candidate in additions {
        if !vector.contains(candidate) {
            vector.push(candidate.clone());
        }
    }
}

pub(crate) fn apply_unvote(vector: &mut Vec<CandidateId>, removals: &[CandidateId]) {
    vector.retain(|c| !removals.iter().any(|r| r == c));
}

/// Wire format: one flat object per line, optional fields present only for
/// the kinds that use them.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    ts: String,
    voter: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    candidates: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coins: Option<String>,
}

impl RawRecord {
    fn from_event(record: &EventRecord) -> RawRecord {
        let mut raw = RawRecord {
            ts: record.timestamp.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
            voter: record.voter.clone(),
            kind: record.kind.tag().to_string(),
            candidates: None,
            target: None,
            coins: None,
        };
        match &record.kind {
            EventKind::Vote { candidates } | EventKind::Unvote { candidates } => {
                raw.candidates = Some(candidates.clone());
            }
            EventKind::Delegate { target } => raw.target = Some(target.clone()),
            EventKind::Undelegate => {}
            EventKind::Stake { coins } | EventKind::Unstake { coins } => {
                raw.coins = Some(coins.to_string());
            }
        }
        raw
    }

    fn into_event(self, line: usize) -> Result<EventRecord> {
        let malformed = |msg: String| Error::Malformed { line, msg };
        let timestamp = DateTime::parse_from_rfc3339(&self.ts)
            .map_err(|e| malformed(format!("bad timestamp {:?}: {e}", self.ts)))?
            .with_timezone(&Utc)
            .trunc_subsecs(0);
        if self.voter.is_empty() {
            return Err(malformed("empty voter id".into()));
        }

        let need_candidates = |c: Option<Vec<String>>| {
            c.filter(|list| !list.is_empty())
                .ok_or_else(|| malformed("kind needs a non-empty candidates list".into()))
        };
        let need_coins = |c: Option<String>| {
            let text = c.ok_or_else(|| malformed("kind needs a coins amount".into()))?;
            let coins = Rational::from_str(&text)
                .map_err(|e| malformed(format!("bad coins {text:?}: {e}")))?;
            if coins.is_negative() {
                return Err(malformed(format!("coins may not be negative: {text}")));
            }
            Ok(coins)
        };
        let forbid = |absent: &[(&str, bool)]| -> Result<()> {
            for (field, present) in absent {
                if *present {
                    return Err(malformed(format!(
                        "field {field} does not belong to kind {:?}",
                        self.kind
                    )));
                }
            }
            Ok(())
        };

        let has_candidates = self.candidates.is_some();
        let has_target = self.target.is_some();
        let has_coins = self.coins.is_some();
        let kind = match self.kind.as_str() {
            "vote" => {
                forbid(&[("target", has_target), ("coins", has_coins)])?;
                EventKind::Vote {
                    candidates: need_candidates(self.candidates)?,
                }
            }
            "unvote" => {
                forbid(&[("target", has_target), ("coins", has_coins)])?;
                EventKind::Unvote {
                    candidates: need_candidates(self.candidates)?,
                }
            }
            "delegate" => {
                forbid(&[("candidates", has_candidates), ("coins", has_coins)])?;
                EventKind::Delegate {
                    target: self
                        .target
                        .filter(|t| !t.is_empty())
                        .ok_or_else(|| malformed("delegate needs a target".into()))?,
                }
            }
            "undelegate" => {
                forbid(&[
                    ("candidates", has_candidates),
                    ("target", has_target),
                    ("coins", has_coins),
                ])?;
                EventKind::Undelegate
            }
            "stake" => {
                forbid(&[("candidates", has_candidates), ("target", has_target)])?;
                EventKind::Stake {
                    coins: need_coins(self.coins)?,
                }
            }
            "unstake" => {
                forbid(&[("candidates", has_candidates), ("target", has_target)])?;
                EventKind::Unstake {
                    coins: need_coins(self.coins)?,
                }
            }
            other => return Err(malformed(format!("unknown kind {other:?}"))),
        };
        Ok(EventRecord {
            timestamp,
            voter: self.voter,
            kind,
        })
    }
}

/// CSV rows use the same columns; the candidates cell joins ids with `;`,
/// blank cells stand for absent fields.
#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    ts: String,
    voter: String,
    kind: String,
    #[serde(default)]
    candidates: String,
    #[serde(default)]
    target: String,
    #[serde(default)]
    coins: String,
}

impl CsvRow {
    fn into_raw(self) -> RawRecord {
        RawRecord {
            ts: self.ts,
            voter: self.voter,
            kind: self.kind,
            candidates: if self.candidates.is_empty() {
                None
            } else {
                Some(self.candidates.split(';').map(str::to_string).collect())
            },
            target: if self.target.is_empty() {
                None
            } else {
                Some(self.target)
            },
            coins: if self.coins.is_empty() {
                None
            } else {
                Some(self.coins)
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogFormat {
    Jsonl,
    Csv,
}

impl FromStr for LogFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<LogFormat> {
        match s.trim().to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(LogFormat::Jsonl),
            "csv" => Ok(LogFormat::Csv),
            other => Err(Error::InvalidConfig(format!("unknown log format {other:?}"))),
        }
    }
}

impl fmt::Display for LogFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogFormat::Jsonl => write!(f, "jsonl"),
            LogFormat::Csv => write!(f, "csv"),
        }
    }
}

/// Timestamp-ordered event records.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EventLog {
    pub records: Vec<EventRecord>,
}

impl EventLog {
    pub fn kind_counts(&self) -> BTreeMap<&'static str, u64> {
        let mut counts = BTreeMap::new();
        for record in &self.records {
            *counts.entry(record.kind.tag()).or_insert(0) += 1;
        }
        counts
    }

    /// First and last record days, `None` for an empty log.
    pub fn coverage(&self) -> Option<(NaiveDate, NaiveDate)> {
        let first = self.records.first()?.timestamp.date_naive();
        let last = self.records.last()?.timestamp.date_naive();
        Some((first, last))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn from_raw(raws: Vec<(usize, RawRecord)>, sort: bool) -> Result<EventLog> {
        let mut records = Vec::with_capacity(raws.len());
        for (line, raw) in raws {
            records.push((line, raw.into_event(line)?));
        }
        if sort {
            records.sort_by_key(|(_, r)| r.timestamp);
        } else if let Some(bad) = records
            .windows(2)
            .find(|w| w[1].1.timestamp < w[0].1.timestamp)
        {
            return Err(Error::OutOfOrder { line: bad[1].0 });
        }
        Ok(EventLog {
            records: records.into_iter().map(|(_, r)| r).collect(),
        })
    }
}

/// Reads and validates an event log. `sort` re-orders records by timestamp
/// instead of rejecting out-of-order input; the sort is stable, so records
/// sharing a timestamp keep their file order.
pub fn ingest(path: &Path, format: LogFormat, sort: bool) -> Result<EventLog> {
    let file = fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut raws: Vec<(usize, RawRecord)> = Vec::new();
    match format {
        LogFormat::Jsonl => {
            for (i, line) in reader.lines().enumerate() {
                let line_no = i + 1;
                let text = line?;
                if text.trim().is_empty() {
                    continue;
                }
                let raw: RawRecord = serde_json::from_str(&text).map_err(|e| Error::Malformed {
                    line: line_no,
                    msg: e.to_string(),
                })?;
                raws.push((line_no, raw));
            }
        }
        LogFormat::Csv => {
            let mut csv_reader = csv::ReaderBuilder::new().from_reader(reader);
            for (i, row) in csv_reader.deserialize::<CsvRow>().enumerate() {
                let line_no = i + 2; // header occupies line 1
                let row = row.map_err(|e| Error::Malformed {
                    line: line_no,
                    msg: e.to_string(),
                })?;
                raws.push((line_no, row.into_raw()));
            }
        }
    }
    EventLog::from_raw(raws, sort)
}

/// Replay knobs that are not part of the voting rules.
#[derive(Clone, Debug)]
pub struct ReplayOptions {
    pub chain: String,
    /// When set, unstaking within this window of the voter's latest stake
    /// earns a warning. Historical fact is never rejected.
    pub lockup: Option<Duration>,
}

impl Default for ReplayOptions {
    fn default() -> Self {
        ReplayOptions {
            chain: "chain".to_string(),
            lockup: None,
        }
    }
}

#[derive(Default)]
struct ReplayState {
    /// Exact staked coin balances; power is re-derived per snapshot so no
    /// rounding accumulates.
    balances: BTreeMap<VoterId, Rational>,
    last_stake: BTreeMap<VoterId, DateTime<Utc>>,
    delegations: DelegationProfile,
    vectors: BTreeMap<VoterId, Vec<CandidateId>>,
    seen: BTreeSet<VoterId>,
}

impl ReplayState {
    fn apply(
        &mut self,
        record: &EventRecord,
        config: &SystemConfig,
        options: &ReplayOptions,
        warnings: &mut Vec<String>,
    ) -> Result<()> {
        self.seen.insert(record.voter.clone());
        match &record.kind {
            EventKind::Stake { coins } => {
                let balance = self
                    .balances
                    .entry(record.voter.clone())
                    .or_insert_with(Rational::zero);
                *balance = balance.add(coins);
                self.last_stake.insert(record.voter.clone(), record.timestamp);
            }
            EventKind::Unstake { coins } => {
                let balance = self
                    .balances
                    .entry(record.voter.clone())
                    .or_insert_with(Rational::zero);
                if *coins > *balance {
                    return Err(Error::UnstakeExceedsStake {
                        voter: record.voter.clone(),
                        requested: coins.to_string(),
                        staked: balance.to_string(),
                    });
                }
                if let (Some(lockup), Some(staked_at)) =
                    (options.lockup, self.last_stake.get(&record.voter))
                {
                    if record.timestamp - *staked_at < lockup {
                        warnings.push(format!(
                            "{}: {} unstakes {} within the {}-day lockup window",
                            record.timestamp.format("%Y-%m-%d"),
                            record.voter,
                            coins,
                            lockup.num_days(),
                        ));
                    }
                }
                *balance = balance.sub(coins);
            }
            EventKind::Vote { candidates } => {
                let vector = self.vectors.entry(record.voter.clone()).or_default();
                apply_vote(vector, candidates);
                if vector.len() > config.max_votes as usize {
                    return Err(Error::TooManyVotes {
                        voter: record.voter.clone(),
                        cast: vector.len(),
                        limit: config.max_votes,
                    });
                }
            }
            EventKind::Unvote { candidates } => {
                if let Some(vector) = self.vectors.get_mut(&record.voter) {
                    apply_unvote(vector, candidates);
                }
            }
            EventKind::Delegate { target } => {
                self.seen.insert(target.clone());
                self.delegations
                    .delegate(record.voter.clone(), target.clone());
            }
            EventKind::Undelegate => {
                self.delegations.undelegate(&record.voter);
            }
        }
        Ok(())
    }

    fn snapshot(&self, date: NaiveDate, config: &SystemConfig) -> Result<(PowerSnapshot, VotingSnapshot)> {
        let mut own_powers: BTreeMap<VoterId, Power> = self
            .seen
            .iter()
            .map(|v| (v.clone(), Power::ZERO))
            .collect();
        for (voter, balance) in &self.balances {
            own_powers.insert(voter.clone(), stake(balance, &config.lambda)?);
        }
        let pooled = resolve_delegations(&own_powers, &self.delegations)?;
        let mut powers = PowerSnapshot::new(date);
        for voter in &self.seen {
            let power = pooled.get(voter).copied().unwrap_or(Power::ZERO);
            powers.powers.insert(voter.clone(), power);
        }
        let mut votes = VotingSnapshot::new(date);
        for (voter, vector) in &self.vectors {
            if !vector.is_empty() {
                votes.profiles.insert(voter.clone(), vector.clone());
            }
        }
        Ok((powers, votes))
    }
}

/// A replayed chain: the source log plus one power and voting snapshot per
/// day of the range, end-of-day UTC state.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainDataset {
    pub chain: String,
    pub config: SystemConfig,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub log: EventLog,
    pub power_days: Vec<PowerSnapshot>,
    pub voting_days: Vec<VotingSnapshot>,
    pub warnings: Vec<String>,
}

/// Folds the log into daily snapshots over `range` (inclusive).
///
/// A day's snapshot reflects every record up to 23:59:59 UTC that day;
/// records before the range still apply, so the first snapshot carries the
/// full prefix state. The range must lie within the log's day coverage.
pub fn replay(
    log: &EventLog,
    config: &SystemConfig,
    range: (NaiveDate, NaiveDate),
    options: &ReplayOptions,
) -> Result<ChainDataset> {
    config.validate()?;
    let (start, end) = range;
    let Some((first, last)) = log.coverage() else {
        return Err(Error::RangeOutsideLog { start, end });
    };
    if start > end || start < first || end > last {
        return Err(Error::RangeOutsideLog { start, end });
    }
    if let Some(bad) = log
        .records
        .windows(2)
        .position(|w| w[1].timestamp < w[0].timestamp)
    {
        return Err(Error::OutOfOrder { line: bad + 2 });
    }

    let mut state = ReplayState::default();
    let mut warnings = Vec::new();
    let mut power_days = Vec::new();
    let mut voting_days = Vec::new();
    let mut idx = 0;
    let mut day = start;
    loop {
        while idx < log.records.len() && log.records[idx].timestamp.date_naive() <= day {
            state.apply(&log.records[idx], config, options, &mut warnings)?;
            idx += 1;
        }
        let (powers, votes) = state.snapshot(day, config)?;
        power_days.push(powers);
        voting_days.push(votes);
        if day == end {
            break;
        }
        day = day.succ_opt().expect("date range fits the calendar");
    }
    Ok(ChainDataset {
        chain: options.chain.clone(),
        config: config.clone(),
        start,
        end,
        log: log.clone(),
        power_days,
        voting_days,
        warnings,
    })
}

impl ChainDataset {
    pub fn query(&self, date: NaiveDate) -> Result<(&PowerSnapshot, &VotingSnapshot)> {
        if date < self.start || date > self.end {
            return Err(Error::DateOutOfRange(date));
        }
        let idx = (date - self.start).num_days() as usize;
        Ok((&self.power_days[idx], &self.voting_days[idx]))
    }

    /// Snapshot pairs in date order, cloned for grid-style consumers.
    pub fn pairs(&self) -> Vec<(PowerSnapshot, VotingSnapshot)> {
        self.power_days
            .iter()
            .cloned()
            .zip(self.voting_days.iter().cloned())
            .collect()
    }

    /// Writes `events.jsonl`, `powers.jsonl`, `votes.jsonl`, and a
    /// `manifest.json` carrying a SHA-256 checksum per file. Output is
    /// byte-deterministic for a given dataset.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut files = BTreeMap::new();
        for (name, bytes) in [
            ("events.jsonl", self.render_events()?),
            ("powers.jsonl", self.render_powers()?),
            ("votes.jsonl", self.render_votes()?),
        ] {
            files.insert(name.to_string(), sha256_hex(&bytes));
            let mut file = fs::File::create(dir.join(name))?;
            file.write_all(&bytes)?;
        }
        let manifest = Manifest {
            chain: self.chain.clone(),
            config: self.config.clone(),
            start: self.start,
            end: self.end,
            files,
            warnings: self.warnings.clone(),
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Json {
            context: "manifest.json".to_string(),
            source: e,
        })?;
        fs::write(dir.join("manifest.json"), text + "\n")?;
        Ok(())
    }

    /// Reads a saved dataset back, verifying every checksum.
    pub fn load(dir: &Path) -> Result<ChainDataset> {
        let manifest_path = dir.join("manifest.json");
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?)
            .map_err(|e| Error::Json {
                context: manifest_path.display().to_string(),
                source: e,
            })?;
        let mut contents: BTreeMap<&str, String> = BTreeMap::new();
        for (name, expected) in &manifest.files {
            let bytes = fs::read(dir.join(name))?;
            if sha256_hex(&bytes) != *expected {
                return Err(Error::HashMismatch { file: name.clone() });
            }
            let text = String::from_utf8(bytes).map_err(|e| Error::Malformed {
                line: 0,
                msg: format!("{name}: {e}"),
            })?;
            contents.insert(name.as_str(), text);
        }
        let missing = |name: &str| Error::Malformed {
            line: 0,
            msg: format!("manifest lists no {name}"),
        };

        let mut raws = Vec::new();
        for (i, line) in contents
            .get("events.jsonl")
            .ok_or_else(|| missing("events.jsonl"))?
            .lines()
            .enumerate()
        {
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawRecord = serde_json::from_str(line).map_err(|e| Error::Malformed {
                line: i + 1,
                msg: e.to_string(),
            })?;
            raws.push((i + 1, raw));
        }
        let log = EventLog::from_raw(raws, false)?;

        let days = (manifest.end - manifest.start).num_days();
        if days < 0 {
            return Err(Error::RangeOutsideLog {
                start: manifest.start,
                end: manifest.end,
            });
        }
        let mut power_days: Vec<PowerSnapshot> = (0..=days)
            .map(|i| PowerSnapshot::new(manifest.start + Duration::days(i)))
            .collect();
        let mut voting_days: Vec<VotingSnapshot> = (0..=days)
            .map(|i| VotingSnapshot::new(manifest.start + Duration::days(i)))
            .collect();
        let day_index = |date: NaiveDate, line: usize| -> Result<usize> {
            if date < manifest.start || date > manifest.end {
                return Err(Error::Malformed {
                    line,
                    msg: format!("snapshot date {date} outside the manifest range"),
                });
            }
            Ok((date - manifest.start).num_days() as usize)
        };
        for (i, line) in contents
            .get("powers.jsonl")
            .ok_or_else(|| missing("powers.jsonl"))?
            .lines()
            .enumerate()
        {
            let row: PowerRow = serde_json::from_str(line).map_err(|e| Error::Malformed {
                line: i + 1,
                msg: e.to_string(),
            })?;
            let idx = day_index(row.date, i + 1)?;
            power_days[idx].powers.insert(row.voter, Power(row.power));
        }
        for (i, line) in contents
            .get("votes.jsonl")
            .ok_or_else(|| missing("votes.jsonl"))?
            .lines()
            .enumerate()
        {
            let row: VoteRow = serde_json::from_str(line).map_err(|e| Error::Malformed {
                line: i + 1,
                msg: e.to_string(),
            })?;
            let idx = day_index(row.date, i + 1)?;
            voting_days[idx].profiles.insert(row.voter, row.candidates);
        }
        Ok(ChainDataset {
            chain: manifest.chain,
            config: manifest.config,
            start: manifest.start,
            end: manifest.end,
            log,
            power_days,
            voting_days,
            warnings: manifest.warnings,
        })
    }

    fn render_events(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for record in &self.log.records {
            let raw = RawRecord::from_event(record);
            let line = serde_json::to_string(&raw).map_err(|e| Error::Json {
                context: "events.jsonl".to_string(),
                source: e,
            })?;
            out.extend_from_slice(line.as_bytes());
            out.push(b'\n');
        }
        Ok(out)
    }

    fn render_powers(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for snapshot in &self.power_days {
            for (voter, power) in &snapshot.powers {
                let row = PowerRow {
                    date: snapshot.date,
                    voter: voter.clone(),
                    power: power.units(),
                };
                let line = serde_json::to_string(&row).map_err(|e| Error::Json {
                    context: "powers.jsonl".to_string(),
                    source: e,
                })?;
                out.extend_from_slice(line.as_bytes());
                out.push(b'\n');
            }
        }
        Ok(out)
    }

    fn render_votes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for snapshot in &self.voting_days {
            for (voter, candidates) in &snapshot.profiles {
                let row = VoteRow {
                    date: snapshot.date,
                    voter: voter.clone(),
                    candidates: candidates.clone(),
                };
                let line = serde_json::to_string(&row).map_err(|e| Error::Json {
                    context: "votes.jsonl".to_string(),
                    source: e,
                })?;
                out.extend_from_slice(line.as_bytes());
                out.push(b'\n');
            }
        }
        Ok(out)
    }
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    chain: String,
    config: SystemConfig,
    start: NaiveDate,
    end: NaiveDate,
    files: BTreeMap<String, String>,
    warnings: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct PowerRow {
    date: NaiveDate,
    voter: String,
    power: u64,
}

#[derive(Serialize, Deserialize)]
struct VoteRow {
    date: NaiveDate,
    voter: String,
    candidates: Vec<CandidateId>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}
