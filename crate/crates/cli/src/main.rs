//! `dpos-gov`: governance analytics for coin-voting DPoS chains.
//!
//! Exit codes: 0 success, 2 input or validation error, 3 enumeration budget
//! exceeded.

mod commands;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use commands::Ctx;
use dpos_gov::store::{ChainDataset, LogFormat};
use dpos_gov::{Error, SystemConfig};
use output::Format;

#[derive(Parser)]
#[command(
    name = "dpos-gov",
    version,
    about = "Election, takeover-resistance, and ballot-design analytics for DPoS governance"
)]
struct Cli {
    #[command(flatten)]
    system: SystemArgs,

    /// Output format
    #[arg(long, global = true, value_enum, default_value = "table")]
    format: Format,

    /// Directory for file outputs (stdout only when omitted)
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

/// Governance parameters. A preset gives the baseline; every explicit flag
/// overrides it. Dataset inputs fall back to their stored parameters.
#[derive(Args)]
struct SystemArgs {
    /// Chain preset: eosio, steem, or tron
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Voting rule: av (approval) or cv (cumulative)
    #[arg(long, global = true)]
    rule: Option<String>,

    /// Ballot size limit (max candidates per voter)
    #[arg(long = "v", global = true, value_name = "N")]
    max_votes: Option<u32>,

    /// Approvals a proposal needs from committee members
    #[arg(long = "t", global = true, value_name = "N")]
    min_approvals: Option<u32>,

    /// Committee seats
    #[arg(long = "n", global = true, value_name = "N")]
    committee_size: Option<u32>,

    /// Smallest voting-power unit
    #[arg(long, global = true, value_name = "UNITS")]
    delta: Option<u64>,

    /// Coins-to-power staking coefficient (rational, e.g. 2000 or 1/2)
    #[arg(long, global = true, value_name = "RATIO")]
    lambda: Option<String>,
}

impl SystemArgs {
    /// Preset (if given) beats the dataset's stored config beats the eosio
    /// default; individual flags beat all of them.
    fn resolve(&self, stored: Option<SystemConfig>) -> Result<SystemConfig, Error> {
        let mut config = match &self.preset {
            Some(name) => SystemConfig::preset(name)
                .ok_or_else(|| Error::InvalidConfig(format!("unknown preset {name:?}")))?,
            None => stored.unwrap_or_else(SystemConfig::eosio),
        };
        if let Some(rule) = &self.rule {
            config.rule = rule.parse()?;
        }
        if let Some(v) = self.max_votes {
            config.max_votes = v;
        }
        if let Some(t) = self.min_approvals {
            config.min_approvals = t;
        }
        if let Some(n) = self.committee_size {
            config.committee_size = n;
        }
        if let Some(delta) = self.delta {
            config.delta = delta;
        }
        if let Some(lambda) = &self.lambda {
            config.lambda = lambda.parse()?;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Tally one snapshot day and print the elected committee
    Elect(ElectArgs),
    /// Equilibrium takeover cost against a coordinated defence
    Game(GameArgs),
    /// Daily passive-resistance and risk-index series over a dataset
    Resist(ResistArgs),
    /// Voting-power decay curves across ballot-design choices
    Decay(DecayArgs),
    /// Inject an attacker into a snapshot day and re-run the election
    ReplayTakeover(ReplayTakeoverArgs),
    /// Classify voters by their reaction to a takeover event
    Classify(ClassifyArgs),
    /// Ingest an event log and persist its daily snapshots
    Ingest(IngestArgs),
}

impl Command {
    /// The `--input` path, when the subcommand reads one.
    fn input_path(&self) -> Option<&Path> {
        match self {
            Command::Elect(a) => Some(&a.io.input),
            Command::Game(_) => None,
            Command::Resist(a) => Some(&a.io.input),
            Command::Decay(a) => Some(&a.io.input),
            Command::ReplayTakeover(a) => Some(&a.io.input),
            Command::Classify(a) => Some(&a.io.input),
            Command::Ingest(a) => Some(&a.io.input),
        }
    }
}

#[derive(Args)]
struct InputArgs {
    /// Event log file (.jsonl/.csv) or a dataset directory from `ingest`
    #[arg(long)]
    input: PathBuf,

    /// Log format when --input is a file; inferred from the extension
    #[arg(long, value_name = "jsonl|csv")]
    input_format: Option<LogFormat>,

    /// Sort out-of-order event logs instead of rejecting them
    #[arg(long)]
    sort: bool,
}

#[derive(Args)]
struct ElectArgs {
    #[command(flatten)]
    io: InputArgs,

    /// Day to tally; newest snapshot when omitted
    #[arg(long)]
    date: Option<NaiveDate>,
}

#[derive(Args)]
struct GameArgs {
    /// Defender (resister) power in smallest units
    #[arg(long)]
    pr: u64,

    /// Whole-slate call-to-action analysis instead of power splits
    #[arg(long)]
    c2c: bool,

    /// Cross-check the closed form against exhaustive enumeration
    #[arg(long)]
    oracle: bool,

    /// Enumeration budget for --oracle
    #[arg(long, value_name = "N")]
    max_strategies: Option<u128>,
}

#[derive(Args)]
struct ResistArgs {
    #[command(flatten)]
    io: InputArgs,

    /// First day of the series; dataset start when omitted
    #[arg(long)]
    start: Option<NaiveDate>,

    /// Last day of the series; dataset end when omitted
    #[arg(long)]
    end: Option<NaiveDate>,
}

#[derive(Args)]
struct DecayArgs {
    #[command(flatten)]
    io: InputArgs,

    /// Comma-separated design choices, e.g. av:1,av:15,cv
    #[arg(long, default_value = "av:1,av:5,av:15,av:30,cv")]
    choices: String,

    /// Relative mean-resistance gap treated as a tie (rational)
    #[arg(long, default_value = "1/50")]
    tolerance: String,
}

#[derive(Args)]
struct ReplayTakeoverArgs {
    #[command(flatten)]
    io: InputArgs,

    /// Day to attack; newest snapshot when omitted
    #[arg(long)]
    date: Option<NaiveDate>,

    /// Attacker power in smallest units
    #[arg(long)]
    power: u64,

    /// Comma-separated fresh attacker candidate ids
    #[arg(long)]
    candidates: String,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    io: InputArgs,

    /// Takeover event time, e.g. 2022-03-02T00:00:00Z
    #[arg(long)]
    event_time: String,

    /// Reaction window after the event, in days
    #[arg(long, default_value_t = 1)]
    window_days: i64,

    /// Resistance leader's voter id
    #[arg(long)]
    leader: String,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    io: InputArgs,

    /// Chain name recorded in the dataset manifest
    #[arg(long, default_value = "chain")]
    chain: String,

    /// First snapshot day; log start when omitted
    #[arg(long)]
    start: Option<NaiveDate>,

    /// Last snapshot day; log end when omitted
    #[arg(long)]
    end: Option<NaiveDate>,

    /// Warn when an unstake lands within this many days of the last stake
    #[arg(long, value_name = "DAYS")]
    lockup_days: Option<i64>,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    // Dataset directories carry the config they were replayed under; load
    // first so explicit flags can override it.
    let preloaded = match cli.command.input_path() {
        Some(path) if path.is_dir() => Some(ChainDataset::load(path)?),
        _ => None,
    };
    let config = cli
        .system
        .resolve(preloaded.as_ref().map(|d| d.config.clone()))?;
    if cli.format != Format::Json {
        println!("{}", output::run_header(&config));
    }
    let ctx = Ctx {
        config,
        format: cli.format,
        out: cli.out,
        preloaded,
    };
    match cli.command {
        Command::Elect(a) => {
            commands::cmd_elect(ctx, &a.io.input, a.date, a.io.input_format, a.io.sort)
        }
        Command::Game(a) => commands::cmd_game(ctx, a.pr, a.c2c, a.oracle, a.max_strategies),
        Command::Resist(a) => commands::cmd_resist(
            ctx,
            &a.io.input,
            a.start,
            a.end,
            a.io.input_format,
            a.io.sort,
        ),
        Command::Decay(a) => commands::cmd_decay(
            ctx,
            &a.io.input,
            &a.choices,
            &a.tolerance,
            a.io.input_format,
            a.io.sort,
        ),
        Command::ReplayTakeover(a) => commands::cmd_replay_takeover(
            ctx,
            &a.io.input,
            a.date,
            a.power,
            &a.candidates,
            a.io.input_format,
            a.io.sort,
        ),
        Command::Classify(a) => commands::cmd_classify(
            ctx,
            &a.io.input,
            &a.event_time,
            a.window_days,
            &a.leader,
            a.io.input_format,
            a.io.sort,
        ),
        Command::Ingest(a) => commands::cmd_ingest(
            ctx,
            &a.io.input,
            a.io.input_format,
            a.io.sort,
            &a.chain,
            a.start,
            a.end,
            a.lockup_days,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = match err.downcast_ref::<Error>() {
                Some(e) if e.is_resource_bound() => 3,
                Some(_) => 2,
                None => 1,
            };
            ExitCode::from(code)
        }
    }
}
