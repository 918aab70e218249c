//! Subcommand implementations. Every handler resolves its input to a
//! [`ChainDataset`] (or takes parameters directly), runs the library call,
//! and renders in the selected format. All iteration orders are over sorted
//! maps, so identical inputs give byte-identical output.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use chrono::{DateTime, Duration, NaiveDate, Utc};
use serde_json::json;

use dpos_gov::election::{elect, passes, Committee};
use dpos_gov::game::{
    brute_force_equilibrium, c2c_resistance, equilibrium, upper_bound_factor, GameInstance,
    Strategy,
};
use dpos_gov::metrics::{
    category_power_series, classify_resisters, daily_activity, passive_resistance, risk_index,
    simulate_takeover, tally_state, threshold_power, RiskIndex, VotingState,
};
use dpos_gov::sim::{rank_choices, simulate_design_grid, DesignChoice};
use dpos_gov::store::{ingest, replay, ChainDataset, LogFormat, ReplayOptions};
use dpos_gov::{CandidateId, Error, Power, Rational, SystemConfig};

use crate::output::{self, Format};

/// Resolved run context: final config, output format, optional output
/// directory, and the dataset when `--input` pointed at one.
pub struct Ctx {
    pub config: SystemConfig,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub preloaded: Option<ChainDataset>,
}

impl Ctx {
    /// The dataset behind `--input`: either the preloaded directory or a
    /// replay of the log file over its full coverage. `None` means the log
    /// holds no events.
    fn load_input(
        &mut self,
        path: &Path,
        input_format: Option<LogFormat>,
        sort: bool,
    ) -> anyhow::Result<Option<ChainDataset>> {
        if let Some(dataset) = self.preloaded.take() {
            return Ok(Some(dataset));
        }
        let log = ingest(path, detect_format(path, input_format), sort)?;
        let Some((first, last)) = log.coverage() else {
            return Ok(None);
        };
        let dataset = replay(&log, &self.config, (first, last), &ReplayOptions::default())?;
        Ok(Some(dataset))
    }

    fn write_artifact(&self, name: &str, contents: &str) -> anyhow::Result<()> {
        let dir = self.out.as_ref().expect("caller checked out is set");
        output::write_file(dir, name, contents).with_context(|| format!("writing {name}"))?;
        Ok(())
    }
}

fn detect_format(path: &Path, explicit: Option<LogFormat>) -> LogFormat {
    explicit.unwrap_or(match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => LogFormat::Csv,
        _ => LogFormat::Jsonl,
    })
}

fn parse_candidate_list(list: &str) -> Vec<CandidateId> {
    list.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn committee_rows(committee: &Committee) -> Vec<Vec<String>> {
    committee
        .members
        .iter()
        .enumerate()
        .map(|(i, (candidate, score))| {
            vec![(i + 1).to_string(), candidate.clone(), score.to_string()]
        })
        .collect()
}

fn risk_cell(risk: &RiskIndex) -> String {
    risk.voters.to_string()
}

pub fn cmd_elect(
    mut ctx: Ctx,
    input: &Path,
    date: Option<NaiveDate>,
    input_format: Option<LogFormat>,
    sort: bool,
) -> anyhow::Result<()> {
    let (day, committee) = match ctx.load_input(input, input_format, sort)? {
        Some(dataset) => {
            let day = date.unwrap_or(dataset.end);
            let (powers, votes) = dataset.query(day)?;
            let state = VotingState::from_snapshots(powers, votes);
            let scores = tally_state(&state, &ctx.config)?;
            (Some(day), elect(&scores, &ctx.config))
        }
        None => (
            None,
            Committee {
                members: Vec::new(),
                total_score: Power::ZERO,
            },
        ),
    };

    let rows = committee_rows(&committee);
    match ctx.format {
        Format::Table => {
            if let Some(day) = day {
                println!("# day {day}");
            }
            print!(
                "{}",
                output::render_table(&["seat", "candidate", "score"], &rows)
            );
            println!("total committee score: {}", committee.total_score);
        }
        Format::Csv => {
            print!("{}", output::render_csv("seat,candidate,score", &rows));
            println!("# total_score={}", committee.total_score);
        }
        Format::Json => {
            let doc = json!({
                "config": ctx.config,
                "date": day,
                "committee": committee,
            });
            print!("{}", output::json_string(&doc)?);
        }
    }
    if ctx.out.is_some() {
        ctx.write_artifact(
            "committee.csv",
            &output::render_csv("seat,candidate,score", &rows),
        )?;
        let doc = json!({ "config": ctx.config, "date": day, "committee": committee });
        ctx.write_artifact("committee.json", &output::json_string(&doc)?)?;
    }
    Ok(())
}

fn allocation_list(strategy: &Strategy) -> String {
    if strategy.allocations.is_empty() {
        return "-".to_string();
    }
    strategy
        .allocations
        .iter()
        .map(|(c, p)| format!("{c}={p}"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn cmd_game(
    ctx: Ctx,
    pr: u64,
    c2c: bool,
    oracle: bool,
    max_strategies: Option<u128>,
) -> anyhow::Result<()> {
    let p_r = Power(pr);

    if c2c {
        let report = c2c_resistance(p_r, &ctx.config)?;
        match ctx.format {
            Format::Table => {
                println!(
                    "calls to action: attacker {}, resister {}",
                    report.attacker_calls, report.resister_calls
                );
                println!("R_A = {}", report.resistance);
                println!(
                    "bound factor: {} (ceiling over every ballot size)",
                    report.bound_factor
                );
            }
            Format::Csv => {
                let rows = vec![
                    vec!["attacker_calls".into(), report.attacker_calls.to_string()],
                    vec!["resister_calls".into(), report.resister_calls.to_string()],
                    vec!["resistance".into(), report.resistance.to_string()],
                    vec!["bound_factor".into(), report.bound_factor.to_string()],
                ];
                print!("{}", output::render_csv("key,value", &rows));
            }
            Format::Json => {
                let doc = json!({ "config": ctx.config, "c2c": report });
                print!("{}", output::json_string(&doc)?);
            }
        }
        if ctx.out.is_some() {
            let doc = json!({ "config": ctx.config, "c2c": report });
            ctx.write_artifact("game.json", &output::json_string(&doc)?)?;
        }
        return Ok(());
    }

    let report = equilibrium(p_r, &ctx.config)?;
    let bound = upper_bound_factor(&ctx.config)?;
    let oracle_report = if oracle {
        let mut instance = GameInstance::new(ctx.config.clone(), p_r);
        if let Some(cap) = max_strategies {
            instance.max_strategies = cap;
        }
        Some(brute_force_equilibrium(&instance)?)
    } else {
        None
    };
    let oracle_match = oracle_report
        .as_ref()
        .map(|brute| brute.resistance == report.resistance);

    match ctx.format {
        Format::Table => {
            println!(
                "amplification: attacker {}, resister {}",
                report.amplification.attacker, report.amplification.resister
            );
            println!(
                "resister split: {} (total {})",
                allocation_list(&report.resister_strategy),
                report.resister_strategy.total()
            );
            println!(
                "attacker split: {} (total {})",
                allocation_list(&report.attacker_strategy),
                report.attacker_strategy.total()
            );
            println!("R_A = {}", report.resistance);
            println!(
                "upper bound: {} at factor {}",
                report.upper_bound,
                output::fraction(&bound.factor)
            );
            println!("at upper bound: {}", report.at_upper_bound);
            println!(
                "payoffs: resister {}, attacker {}",
                report.resister_payoff, report.attacker_payoff
            );
        }
        Format::Csv => {
            let rows = vec![
                vec![
                    "amplification_attacker".into(),
                    report.amplification.attacker.to_string(),
                ],
                vec![
                    "amplification_resister".into(),
                    report.amplification.resister.to_string(),
                ],
                vec!["resistance".into(), report.resistance.to_string()],
                vec!["upper_bound".into(), report.upper_bound.to_string()],
                vec!["bound_factor".into(), bound.factor.to_string()],
                vec!["at_upper_bound".into(), report.at_upper_bound.to_string()],
            ];
            print!("{}", output::render_csv("key,value", &rows));
        }
        Format::Json => {
            let doc = json!({
                "config": ctx.config,
                "equilibrium": report,
                "bound": bound,
                "oracle_match": oracle_match,
            });
            print!("{}", output::json_string(&doc)?);
        }
    }

    if let Some(brute) = &oracle_report {
        if ctx.format != Format::Json {
            if brute.resistance == report.resistance {
                println!("oracle: MATCH, R_A = {}", brute.resistance);
            } else {
                println!(
                    "oracle: MISMATCH, closed form {}, enumeration {}",
                    report.resistance, brute.resistance
                );
            }
        }
        if brute.resistance != report.resistance {
            anyhow::bail!("equilibrium oracle disagrees with the closed form");
        }
    }

    if ctx.out.is_some() {
        let doc = json!({
            "config": ctx.config,
            "equilibrium": report,
            "bound": bound,
            "oracle_match": oracle_match,
        });
        ctx.write_artifact("game.json", &output::json_string(&doc)?)?;
    }
    Ok(())
}

pub fn cmd_resist(
    mut ctx: Ctx,
    input: &Path,
    start: Option<NaiveDate>,
    end: Option<NaiveDate>,
    input_format: Option<LogFormat>,
    sort: bool,
) -> anyhow::Result<()> {
    let header = "date,threshold,resistance,risk,reachable";
    let dataset = match ctx.load_input(input, input_format, sort)? {
        Some(dataset) => dataset,
        None => {
            match ctx.format {
                Format::Table => print!(
                    "{}",
                    output::render_table(
                        &["date", "threshold", "resistance", "risk", "reachable"],
                        &[]
                    )
                ),
                Format::Csv => print!("{}", output::render_csv(header, &[])),
                Format::Json => {
                    let doc = json!({ "config": ctx.config, "days": [] });
                    print!("{}", output::json_string(&doc)?);
                }
            }
            return Ok(());
        }
    };

    let lo = start.unwrap_or(dataset.start);
    let hi = end.unwrap_or(dataset.end);
    for bound in [lo, hi] {
        if bound < dataset.start || bound > dataset.end {
            return Err(Error::DateOutOfRange(bound).into());
        }
    }

    let mut rows = Vec::new();
    let mut days = Vec::new();
    let mut alerts = Vec::new();
    let mut day = lo;
    while day <= hi {
        let (powers, votes) = dataset.query(day)?;
        let state = VotingState::from_snapshots(powers, votes);
        let scores = tally_state(&state, &ctx.config)?;
        let threshold = threshold_power(&scores, &ctx.config);
        let resistance = passive_resistance(&scores, &ctx.config)?;
        let risk = risk_index(powers, resistance);
        if risk.reachable && risk.voters == 1 {
            alerts.push(day);
        }
        rows.push(vec![
            day.to_string(),
            threshold.to_string(),
            resistance.to_string(),
            risk_cell(&risk),
            risk.reachable.to_string(),
        ]);
        days.push(json!({
            "date": day,
            "threshold": threshold,
            "resistance": resistance,
            "risk": risk,
        }));
        day = day.succ_opt().expect("calendar overflow");
    }

    match ctx.format {
        Format::Table => print!(
            "{}",
            output::render_table(
                &["date", "threshold", "resistance", "risk", "reachable"],
                &rows
            )
        ),
        Format::Csv => print!("{}", output::render_csv(header, &rows)),
        Format::Json => {
            let doc = json!({ "config": ctx.config, "days": days });
            print!("{}", output::json_string(&doc)?);
        }
    }
    for day in &alerts {
        eprintln!("takeover-risk alert: {day} I_t = 1");
    }
    if ctx.out.is_some() {
        ctx.write_artifact("resist.csv", &output::render_csv(header, &rows))?;
        let doc = json!({ "config": ctx.config, "days": days });
        ctx.write_artifact("resist.json", &output::json_string(&doc)?)?;
    }
    Ok(())
}

pub fn cmd_decay(
    mut ctx: Ctx,
    input: &Path,
    choices_arg: &str,
    tolerance_arg: &str,
    input_format: Option<LogFormat>,
    sort: bool,
) -> anyhow::Result<()> {
    let choices: Vec<DesignChoice> = choices_arg
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<dpos_gov::Result<_>>()?;
    let tolerance: Rational = tolerance_arg.parse::<Rational>()?;
    if tolerance.is_negative() {
        return Err(Error::InvalidConfig(format!(
            "tolerance must be non-negative, got {tolerance}"
        ))
        .into());
    }

    let header = "choice,date,metric,value";
    let Some(dataset) = ctx.load_input(input, input_format, sort)? else {
        match ctx.format {
            Format::Table => print!(
                "{}",
                output::render_table(&["choice", "date", "metric", "value"], &[])
            ),
            Format::Csv => print!("{}", output::render_csv(header, &[])),
            Format::Json => {
                let doc = json!({ "config": ctx.config, "curve": [], "ranking": null });
                print!("{}", output::json_string(&doc)?);
            }
        }
        return Ok(());
    };

    let days = dataset.pairs();
    let curve = simulate_design_grid(&days, &ctx.config, &choices)?;
    let ranking = rank_choices(&curve, &tolerance);

    let mut rows = Vec::new();
    for point in &curve.points {
        // key() instead of Display: the pretty form has a comma in it
        let cell = |metric: &str, value: String| {
            vec![
                point.choice.key(),
                point.date.to_string(),
                metric.to_string(),
                value,
            ]
        };
        rows.push(cell("threshold", point.threshold.to_string()));
        rows.push(cell("resistance", point.resistance.to_string()));
        rows.push(cell("risk", risk_cell(&point.risk)));
        rows.push(cell(
            "risk_reachable",
            (point.risk.reachable as u8).to_string(),
        ));
    }

    match ctx.format {
        Format::Table => {
            println!("ranking: {ranking}");
            print!(
                "{}",
                output::render_table(&["choice", "date", "metric", "value"], &rows)
            );
        }
        Format::Csv => {
            println!("# ranking: {ranking}");
            print!("{}", output::render_csv(header, &rows));
        }
        Format::Json => {
            let doc = json!({
                "config": ctx.config,
                "ranking": ranking,
                "ranking_text": ranking.to_string(),
                "curve": curve,
            });
            print!("{}", output::json_string(&doc)?);
        }
    }
    if ctx.out.is_some() {
        ctx.write_artifact("decay.csv", &output::render_csv(header, &rows))?;
        let doc = json!({
            "config": ctx.config,
            "ranking": ranking,
            "ranking_text": ranking.to_string(),
            "curve": curve,
        });
        ctx.write_artifact("decay.json", &output::json_string(&doc)?)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_replay_takeover(
    mut ctx: Ctx,
    input: &Path,
    date: Option<NaiveDate>,
    attacker_power: u64,
    candidates_arg: &str,
    input_format: Option<LogFormat>,
    sort: bool,
) -> anyhow::Result<()> {
    let attackers: BTreeSet<CandidateId> = parse_candidate_list(candidates_arg).into_iter().collect();
    if attackers.is_empty() {
        return Err(Error::InvalidConfig("no attacker candidates given".into()).into());
    }
    let dataset = ctx
        .load_input(input, input_format, sort)?
        .ok_or_else(|| Error::InvalidConfig("event log holds no events".into()))?;
    let day = date.unwrap_or(dataset.end);
    let (powers, votes) = dataset.query(day)?;
    let state = VotingState::from_snapshots(powers, votes);
    let outcome = simulate_takeover(&state, Power(attacker_power), &attackers, &ctx.config)?;
    let proposal_passes = passes(&attackers, &outcome.committee_after, &ctx.config);

    let shift_rows: Vec<Vec<String>> = outcome
        .rank_shifts
        .iter()
        .map(|(candidate, shift)| vec![candidate.clone(), format!("{shift:+}")])
        .collect();

    match ctx.format {
        Format::Table => {
            println!("# day {day}");
            println!("phase 1 - stake: attacker arrives with power {attacker_power}");
            println!(
                "phase 2 - vote: backs {} candidates: {}",
                attackers.len(),
                attackers.iter().cloned().collect::<Vec<_>>().join(" ")
            );
            println!("committee before:");
            print!(
                "{}",
                output::render_table(
                    &["seat", "candidate", "score"],
                    &committee_rows(&outcome.committee_before)
                )
            );
            println!("committee after:");
            print!(
                "{}",
                output::render_table(
                    &["seat", "candidate", "score"],
                    &committee_rows(&outcome.committee_after)
                )
            );
            println!("rank shifts:");
            print!(
                "{}",
                output::render_table(&["candidate", "shift"], &shift_rows)
            );
            println!(
                "phase 3 - govern: attacker holds {} of {} seats, needs {}: proposal {}",
                outcome.attacker_seats,
                ctx.config.committee_size,
                ctx.config.min_approvals,
                if proposal_passes { "passes" } else { "fails" }
            );
            println!("takeover success: {}", outcome.success);
        }
        Format::Csv => {
            print!("{}", output::render_csv("candidate,shift", &shift_rows));
            println!("# attacker_seats={}", outcome.attacker_seats);
            println!("# success={}", outcome.success);
        }
        Format::Json => {
            let doc = json!({
                "config": ctx.config,
                "date": day,
                "attacker_power": attacker_power,
                "attacker_candidates": attackers,
                "outcome": outcome,
                "proposal_passes": proposal_passes,
            });
            print!("{}", output::json_string(&doc)?);
        }
    }
    if ctx.out.is_some() {
        let doc = json!({
            "config": ctx.config,
            "date": day,
            "attacker_power": attacker_power,
            "attacker_candidates": attackers,
            "outcome": outcome,
            "proposal_passes": proposal_passes,
        });
        ctx.write_artifact("takeover.json", &output::json_string(&doc)?)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_classify(
    mut ctx: Ctx,
    input: &Path,
    event_time_arg: &str,
    window_days: i64,
    leader: &str,
    input_format: Option<LogFormat>,
    sort: bool,
) -> anyhow::Result<()> {
    let event_time: DateTime<Utc> = DateTime::parse_from_rfc3339(event_time_arg)
        .map_err(|e| Error::InvalidConfig(format!("bad event time {event_time_arg}: {e}")))?
        .with_timezone(&Utc);
    if window_days < 0 {
        return Err(Error::InvalidConfig("window must be non-negative".into()).into());
    }
    let dataset = ctx
        .load_input(input, input_format, sort)?
        .ok_or_else(|| Error::UnknownLeader(leader.to_string()))?;
    let leader_id = leader.to_string();
    let classification = classify_resisters(
        &dataset.log,
        event_time,
        Duration::days(window_days),
        &leader_id,
    )?;
    let (co, ind, non) = classification.counts();

    let category_rows: Vec<Vec<String>> = classification
        .categories
        .iter()
        .map(|(voter, category)| vec![voter.clone(), category.to_string()])
        .collect();
    let activity = daily_activity(&dataset.log);
    let activity_rows: Vec<Vec<String>> = activity
        .iter()
        .map(|(date, counts)| {
            vec![
                date.to_string(),
                counts.voting.to_string(),
                counts.delegating.to_string(),
            ]
        })
        .collect();
    let power_series = category_power_series(&dataset.power_days, &classification);
    let power_rows: Vec<Vec<String>> = power_series
        .iter()
        .map(|(date, day)| {
            vec![
                date.to_string(),
                day.cooperative.to_string(),
                day.independent.to_string(),
                day.non_resister.to_string(),
            ]
        })
        .collect();

    match ctx.format {
        Format::Table => {
            println!(
                "leader set: {}",
                classification
                    .leader_set
                    .iter()
                    .cloned()
                    .collect::<Vec<_>>()
                    .join(" ")
            );
            println!("co-resisters: {co}");
            println!("ind-resisters: {ind}");
            println!("non-resisters: {non}");
        }
        Format::Csv => {
            print!("{}", output::render_csv("voter,category", &category_rows));
        }
        Format::Json => {
            let doc = json!({
                "config": ctx.config,
                "event_time": event_time,
                "classification": classification,
                "counts": { "co": co, "ind": ind, "non": non },
            });
            print!("{}", output::json_string(&doc)?);
        }
    }
    if ctx.out.is_some() {
        ctx.write_artifact(
            "categories.csv",
            &output::render_csv("voter,category", &category_rows),
        )?;
        ctx.write_artifact(
            "activity.csv",
            &output::render_csv("date,voting_txs,delegating_txs", &activity_rows),
        )?;
        ctx.write_artifact(
            "category_power.csv",
            &output::render_csv(
                "date,cooperative,independent,non_resister",
                &power_rows,
            ),
        )?;
        let doc = json!({
            "config": ctx.config,
            "event_time": event_time,
            "classification": classification,
            "counts": { "co": co, "ind": ind, "non": non },
        });
        ctx.write_artifact("classification.json", &output::json_string(&doc)?)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_ingest(
    ctx: Ctx,
    input: &Path,
    input_format: Option<LogFormat>,
    sort: bool,
    chain: &str,
    start: Option<NaiveDate>,
    end: Option<NaiveDate>,
    lockup_days: Option<i64>,
) -> anyhow::Result<()> {
    let out = ctx
        .out
        .clone()
        .ok_or_else(|| Error::InvalidConfig("ingest needs --out DIR".into()))?;
    let log = ingest(input, detect_format(input, input_format), sort)?;
    let counts = log.kind_counts();
    let counts_text = counts
        .iter()
        .map(|(kind, count)| format!("{kind}={count}"))
        .collect::<Vec<_>>()
        .join(" ");
    println!("ingested {} records: {counts_text}", log.len());

    let Some((first, last)) = log.coverage() else {
        return Err(Error::InvalidConfig("event log holds no events".into()).into());
    };
    let options = ReplayOptions {
        chain: chain.to_string(),
        lockup: lockup_days.map(Duration::days),
    };
    let range = (start.unwrap_or(first), end.unwrap_or(last));
    let dataset = replay(&log, &ctx.config, range, &options)?;
    for warning in &dataset.warnings {
        eprintln!("warning: {warning}");
    }
    dataset.save(&out)?;
    println!(
        "replayed {}..{} into {} daily snapshots",
        dataset.start,
        dataset.end,
        dataset.power_days.len()
    );
    println!("wrote events.jsonl, powers.jsonl, votes.jsonl, manifest.json");
    Ok(())
}
