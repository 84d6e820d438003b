//! `clustervote`: reproduce the risk tables, run Monte Carlo campaigns and
//! the concentration scenario, generate elections and audit their boards.
//!
//! Exit codes: 0 success, 1 audit findings, 2 usage or input error.

mod render;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use clustervote::adversary::{AdversaryMix, Attack};
use clustervote::analytics::{concentration_scenario, table2, table3, table4, table5};
use clustervote::bulletin::{audit_jsonl, run_full_election, BoardCensus, ElectionPlan};
use clustervote::crypto::KeyedHashScheme;
use clustervote::sim::{run_campaign, run_scenario, CampaignConfig, LatencyModel, ScenarioSim, VoteModel, VoterId};
use clustervote::ClusterConfig;

use render::Format;

/// Seed used when `--seed` is not given, so bare invocations reproduce.
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Parser)]
#[command(name = "clustervote", version, about = "Cluster-based MPC voting: analytics, simulation and audit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print one of the closed-form risk tables.
    Tables {
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=5))]
        which: u8,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run a Monte Carlo campaign of independent cluster elections.
    Simulate(SimulateArgs),
    /// Attacker-concentration arithmetic, optionally with a Monte Carlo estimate.
    Scenario(ScenarioArgs),
    /// Run a whole election and write its board and census.
    Election(ElectionArgs),
    /// Audit a board file; exits 1 if there are findings.
    Verify {
        board: PathBuf,
        /// Census JSON; without it the census is taken from the board's own
        /// signer lists, so missing clusters and foreign signers go unseen.
        #[arg(long)]
        census: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML campaign file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sc: Option<usize>,
    #[arg(long)]
    ao: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    fanout: Option<usize>,
    #[arg(long)]
    warn_threshold: Option<u32>,
    /// Number of dishonest nodes running the attack.
    #[arg(long)]
    dn: Option<usize>,
    #[arg(long, value_enum)]
    attack: Option<AttackArg>,
    #[arg(long)]
    coordinated: Option<bool>,
    #[arg(long)]
    single_active: Option<bool>,
    #[arg(long)]
    swaps: Option<usize>,
    #[arg(long)]
    target: Option<usize>,
    /// Colluding privacy attackers.
    #[arg(long)]
    nt: Option<usize>,
    #[arg(long)]
    stallers: Option<usize>,
    /// Voters clusters are drawn from; defaults to the cluster size.
    #[arg(long)]
    census: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AttackArg {
    Cheat1,
    Cheat2,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SimulateFile {
    trials: Option<usize>,
    seed: Option<u64>,
    cluster: Option<ClusterConfig>,
    mix: Option<AdversaryMix>,
    votes: Option<VoteModel>,
    latency: Option<LatencyModel>,
    census: Option<usize>,
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long, default_value_t = 22e6)]
    voters: f64,
    /// Voting window, minutes.
    #[arg(long, default_value_t = 720.0)]
    window: f64,
    #[arg(long, default_value_t = 4.0)]
    minutes_per_vote: f64,
    #[arg(long, default_value_t = 25)]
    cs: usize,
    #[arg(long, default_value_t = 20)]
    dn: usize,
    /// Append Monte Carlo estimates of altered votes and punished cheaters.
    #[arg(long)]
    simulate: bool,
    #[arg(long, default_value_t = 3)]
    ao: usize,
    /// Attacked clusters to simulate.
    #[arg(long, default_value_t = 10_000)]
    slots: usize,
    /// Consecutive votings per attacked cluster.
    #[arg(long, default_value_t = 3)]
    votings: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct ElectionArgs {
    #[arg(long, default_value_t = 100)]
    voters: u64,
    #[arg(long, default_value_t = 25)]
    cs: usize,
    #[arg(long, default_value_t = 3)]
    ao: usize,
    #[arg(long, default_value_t = 0)]
    dn: usize,
    #[arg(long, value_enum, default_value_t = AttackArg::Cheat1)]
    attack: AttackArg,
    #[arg(long, default_value_t = 3)]
    max_rounds: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Board file (JSON lines) to write.
    #[arg(long)]
    board: PathBuf,
    /// Census file (JSON) to write.
    #[arg(long)]
    census: PathBuf,
}

/// Failure with its exit status.
enum Failure {
    Findings,
    Usage(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Findings) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Tables { which, format } => {
            let out = match which {
                2 => render::table2(&table2(), format),
                3 => render::options(&table3(), "p_same", format),
                4 => render::options(&table4(), "p_reveal", format),
                _ => render::table5(&table5(), format),
            };
            print!("{out}");
            Ok(())
        }
        Command::Simulate(args) => simulate(args),
        Command::Scenario(args) => scenario(args),
        Command::Election(args) => election(args),
        Command::Verify { board, census, format } => verify(&board, census.as_deref(), format),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn campaign_config(args: &SimulateArgs) -> Result<CampaignConfig, Failure> {
    let file: SimulateFile = match &args.config {
        Some(p) => toml::from_str(&read(p)?)?,
        None => SimulateFile::default(),
    };
    let mut cluster = match file.cluster {
        Some(c) => c,
        None => ClusterConfig::new(args.sc.unwrap_or(25), args.ao.unwrap_or(3))?,
    };
    if let Some(v) = args.sc {
        cluster.sc = v;
    }
    if let Some(v) = args.ao {
        cluster.ao = v;
    }
    if let Some(v) = args.k {
        cluster.k = v;
    }
    if let Some(v) = args.fanout {
        cluster.fanout = Some(v);
    }
    if let Some(v) = args.warn_threshold {
        cluster.warn_threshold = v;
    }
    let mut mix = file.mix.unwrap_or_default();
    if let Some(v) = args.dn {
        mix.dn = v;
    }
    if let Some(a) = args.attack {
        mix.attack = match a {
            AttackArg::Cheat1 => Attack::Cheat1,
            AttackArg::Cheat2 => Attack::Cheat2,
        };
    }
    if let Some(v) = args.coordinated {
        mix.coordinated = v;
    }
    if let Some(v) = args.single_active {
        mix.single_active = v;
    }
    if let Some(v) = args.swaps {
        mix.swaps = v;
    }
    if args.target.is_some() {
        mix.target = args.target;
    }
    if let Some(v) = args.nt {
        mix.nt = v;
    }
    if let Some(v) = args.stallers {
        mix.stallers = v;
    }
    let trials = args.trials.or(file.trials).unwrap_or(1000);
    let seed = args.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let mut cfg = CampaignConfig::new(cluster, mix, trials, seed);
    cfg.votes = file.votes.unwrap_or_default();
    cfg.latency = file.latency.unwrap_or_default();
    cfg.census = args.census.or(file.census);
    cfg.validate()?;
    Ok(cfg)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let cfg = campaign_config(&args)?;
    let report = run_campaign(&cfg)?;
    let text = match args.format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => render::metric_csv(&report.rows()),
        Format::Text => render::metric_text(&report.rows()),
    };
    emit(&text, args.out.as_deref())
}

fn scenario(args: ScenarioArgs) -> Result<(), Failure> {
    if args.dn >= args.cs {
        return Err(Failure::Usage(format!("dn = {} must be below cs = {}", args.dn, args.cs)));
    }
    let s = concentration_scenario(args.voters, args.window, args.minutes_per_vote, args.cs, args.dn);
    let mut rows = vec![
        ("concurrent_voters".to_string(), format!("{:.0}", s.concurrent_voters)),
        ("required_concurrent_cheaters".into(), format!("{:.0}", s.required_concurrent_cheaters)),
    ];
    let mut json = serde_json::json!({ "scenario": s });
    if args.simulate && args.dn > 0 {
        let slots = (s.required_concurrent_cheaters / args.dn as f64).floor();
        let sim = ScenarioSim {
            slots: args.slots,
            votings: args.votings,
            cluster: ClusterConfig::new(args.cs, args.ao)?,
            dn: args.dn,
            seed: args.seed,
            scale_to: slots,
        };
        let e = run_scenario(&sim)?;
        let (a, alo, ahi) = e.altered_votes_scaled;
        let (p, plo, phi) = e.punished_scaled;
        rows.extend([
            ("attacked_clusters".to_string(), format!("{slots:.0}")),
            ("simulated_clusters".into(), e.slots.to_string()),
            ("simulated_elections".into(), e.elections.to_string()),
            ("per_election_success".into(), e.per_election_success.rate.to_string()),
            ("altered_votes".into(), format!("{a:.0}")),
            ("altered_votes_lo".into(), format!("{alo:.0}")),
            ("altered_votes_hi".into(), format!("{ahi:.0}")),
            ("punished".into(), format!("{p:.0}")),
            ("punished_lo".into(), format!("{plo:.0}")),
            ("punished_hi".into(), format!("{phi:.0}")),
        ]);
        json["simulation"] = serde_json::to_value(&e)?;
    }
    let text = match args.format {
        Format::Json => serde_json::to_string_pretty(&json)? + "\n",
        Format::Csv => render::metric_csv(&rows),
        Format::Text => render::metric_text(&rows),
    };
    emit(&text, None)
}

fn election(args: ElectionArgs) -> Result<(), Failure> {
    let plan = ElectionPlan {
        cluster: ClusterConfig::new(args.cs, args.ao)?,
        mix: AdversaryMix {
            dn: args.dn,
            attack: match args.attack {
                AttackArg::Cheat1 => Attack::Cheat1,
                AttackArg::Cheat2 => Attack::Cheat2,
            },
            ..AdversaryMix::default()
        },
        votes: VoteModel::Uniform,
        latency: LatencyModel::default(),
        seed: args.seed,
        max_rounds: args.max_rounds,
    };
    let voters: Vec<VoterId> = (0..args.voters).map(VoterId).collect();
    let run = run_full_election(&voters, &plan, &KeyedHashScheme::default())?;
    fs::write(&args.board, run.board.to_jsonl())?;
    fs::write(&args.census, serde_json::to_string_pretty(&run.census)? + "\n")?;
    let rows = vec![
        ("clusters_published".to_string(), run.board.entries().len().to_string()),
        ("clusters_cancelled".into(), run.cancelled_clusters.to_string()),
        ("voters_uncounted".into(), run.uncounted.len().to_string()),
        ("punished".into(), run.ledger.punished().count().to_string()),
        ("global_tally".into(), format!("{:?}", run.board.global_tally())),
    ];
    print!("{}", render::metric_text(&rows));
    Ok(())
}

fn verify(board: &Path, census: Option<&Path>, format: Format) -> Result<(), Failure> {
    let text = read(board)?;
    let scheme = KeyedHashScheme::default();
    let census = match census {
        Some(p) => serde_json::from_str::<BoardCensus>(&read(p)?)?,
        None => render::census_from_board(&text),
    };
    let report = audit_jsonl(&text, &census, &scheme);
    let out = match format {
        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
        Format::Csv => render::findings_csv(&report),
        Format::Text => render::findings_text(&report),
    };
    print!("{out}");
    if report.is_clean() {
        Ok(())
    } else {
        Err(Failure::Findings)
    }
}
