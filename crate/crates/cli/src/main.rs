//! `pgpp` — experiment driver and service entry points.
//!
//! Exit codes: 0 success, 2 configuration error, 3 partial sweep failure.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pgpp_cli::config::ExperimentConfig;
use pgpp_cli::{experiment, figures};
use pgpp_core::aka::{simulate_mass_attach, MassAttachConfig};
use pgpp_core::paging::{analyze_paging_log, LogEntry};
use pgpp_core::topology::{load_topology, synth_sites, SynthTopologyConfig, Topology};
use pgpp_gateway::{DecisionLog, Gateway, GatewayConfig, SliceConfig, SystemTimeSource};
use pgpp_tokens::keys::PrivateKeySetFile;
use pgpp_tokens::{
    gen_period_keys, issue_period_tokens, verify_and_spend, AcceptanceWindow, FileStore,
    MemoryStore, SlicePublicKeys, SpentTokenStore, VerifyOutcome, Wallet, DEFAULT_KEY_BITS,
};
use serde::Deserialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "pgpp", version, about = "Privacy-preserving cellular experiments and services")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a topology (synthetic or from CSV) and write its snapshot JSON
    Topology(TopologyArgs),
    /// Run the paging/anonymity experiment sweep from a config file
    Simulate(SimulateArgs),
    /// Recompute and print the metrics row for a finished run directory
    Metrics(MetricsArgs),
    /// Emit plot-ready CSV files from an experiment manifest
    Figures(FiguresArgs),
    /// Token scheme operations
    Tokens {
        #[command(subcommand)]
        cmd: TokensCmd,
    },
    /// Billing-side operations
    Billing {
        #[command(subcommand)]
        cmd: BillingCmd,
    },
    /// Gateway service
    Gateway {
        #[command(subcommand)]
        cmd: GatewayCmd,
    },
    /// Client-device agent
    Client {
        #[command(subcommand)]
        cmd: ClientCmd,
    },
    /// Shared-IMSI attach simulation
    Aka {
        #[command(subcommand)]
        cmd: AkaCmd,
    },
    /// Per-identifier page counts and inter-page intervals from a paging log
    AnalyzeLog(AnalyzeLogArgs),
}

#[derive(Args)]
struct TopologyArgs {
    /// Site CSV (`enb_id,lat,lon,ta_id`); omit to synthesize
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    sites: usize,
    #[arg(long, default_value_t = 50)]
    clusters: usize,
    #[arg(long, default_value_t = 40.0)]
    extent_km: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replace TA labels with k k-means clusters
    #[arg(long)]
    kmeans: Option<usize>,
    /// Output snapshot path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment TOML
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: `runs`)
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Parallel sweep workers
    #[arg(long, default_value_t = 2)]
    workers: usize,
}

#[derive(Args)]
struct MetricsArgs {
    /// A sweep-point directory containing report.json and topology.json
    #[arg(long)]
    run_dir: PathBuf,
    /// Per-eNB paging budget (pages/second)
    #[arg(long, default_value_t = 525)]
    page_budget_per_sec: u64,
}

#[derive(Args)]
struct FiguresArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum TokensCmd {
    /// Generate the slice keyset for a billing period
    GenKeys {
        #[arg(long)]
        period: String,
        #[arg(long)]
        slices: u64,
        #[arg(long, default_value_t = DEFAULT_KEY_BITS)]
        bits: u64,
        /// Directory for public.json / private.json
        #[arg(long)]
        out: PathBuf,
    },
    /// Verify wallet signatures against the published keys; optionally spend
    /// one slice's token against a store
    Verify {
        #[arg(long)]
        wallet: PathBuf,
        #[arg(long)]
        pub_keys: PathBuf,
        /// Spend the token of this slice index
        #[arg(long)]
        spend_slice: Option<u64>,
        /// Spent-store file (defaults to an in-memory store)
        #[arg(long)]
        store: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BillingCmd {
    /// Blind-sign a full period of tokens into a wallet (payment is out of
    /// band and precedes issuance)
    Issue {
        #[arg(long)]
        period: String,
        /// Directory holding private.json from `tokens gen-keys`
        #[arg(long)]
        keys: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum GatewayCmd {
    /// Generate the gateway TLS identity files
    GenIdentity {
        #[arg(long, default_value = "localhost")]
        host: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the authentication endpoint
    Serve {
        /// Gateway TOML config
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum ClientCmd {
    /// Authenticate for the current slice (and stage the next)
    Authenticate {
        #[arg(long)]
        wallet: PathBuf,
        /// Gateway address, host:port
        #[arg(long)]
        gateway: String,
        /// Pinned gateway certificate (PEM)
        #[arg(long)]
        cert: PathBuf,
        #[arg(long, default_value = "localhost")]
        server_name: String,
        /// Slice index to present; defaults to the slice covering now
        #[arg(long)]
        slice: Option<u64>,
        #[arg(long, default_value_t = 0)]
        period_start_epoch_s: u64,
        #[arg(long, default_value_t = 3600)]
        slice_seconds: u64,
        /// Also stage the next slice's token
        #[arg(long, default_value_t = true)]
        stage_next: bool,
    },
}

#[derive(Subcommand)]
enum AkaCmd {
    /// Mass-attach simulation; emits outcomes JSONL and a delay histogram
    Simulate {
        #[arg(long)]
        ues: usize,
        #[arg(long, default_value_t = false)]
        shared_imsi: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200.0)]
        round_latency_ms: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct AnalyzeLogArgs {
    /// CSV with header `timestamp_s,identifier`
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Topology(args) => cmd_topology(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Metrics(args) => cmd_metrics(args),
        Command::Figures(args) => cmd_figures(args),
        Command::Tokens { cmd } => cmd_tokens(cmd),
        Command::Billing { cmd } => cmd_billing(cmd),
        Command::Gateway { cmd } => cmd_gateway(cmd),
        Command::Client { cmd } => cmd_client(cmd),
        Command::Aka { cmd } => cmd_aka(cmd),
        Command::AnalyzeLog(args) => cmd_analyze_log(args),
    }
}

fn cmd_topology(args: TopologyArgs) -> Result<ExitCode> {
    let topo = match &args.csv {
        Some(path) => {
            let file = fs::File::open(path).with_context(|| format!("open {}", path.display()))?;
            match load_topology(file) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {e}");
                    return Ok(ExitCode::from(2));
                }
            }
        }
        None => Topology::from_sites(synth_sites(&SynthTopologyConfig {
            n_sites: args.sites,
            n_clusters: args.clusters,
            extent_km: args.extent_km,
            seed: args.seed,
            ..Default::default()
        }))?,
    };
    let topo = match args.kmeans {
        Some(k) => topo.with_kmeans_tas(k, args.seed)?,
        None => topo,
    };
    fs::write(&args.out, serde_json::to_vec_pretty(&topo.snapshot())?)?;
    println!(
        "topology: {} eNBs, {} TAs -> {}",
        topo.n_enbs(),
        topo.ta_map.ta_count(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("read {}", args.config.display()))?;
    let cfg = match ExperimentConfig::from_toml(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return Ok(ExitCode::from(2));
        }
    };
    let manifest = experiment::run_experiment(&cfg, &args.out, args.workers)?;
    let failed = manifest.failed_runs();
    println!(
        "{} runs ({} failed), manifest: {}",
        manifest.runs.len(),
        failed,
        args.out.join("manifest.json").display()
    );
    for run in &manifest.runs {
        let marker = if run.status == "ok" { "ok " } else { "FAIL" };
        println!(
            "  [{marker}] {} mode={} tal={} tas={}",
            run.id, run.mode, run.tal_length, run.ta_count
        );
    }
    Ok(if failed > 0 { ExitCode::from(3) } else { ExitCode::SUCCESS })
}

fn cmd_metrics(args: MetricsArgs) -> Result<ExitCode> {
    let row = experiment::recompute_metrics(&args.run_dir, args.page_budget_per_sec * 3600)?;
    println!("{}", serde_json::to_string_pretty(&row)?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_figures(args: FiguresArgs) -> Result<ExitCode> {
    let manifest = experiment::load_manifest(&args.manifest)?;
    let warnings = figures::emit_figures_data(&manifest, &args.out)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    println!("figure data written to {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_tokens(cmd: TokensCmd) -> Result<ExitCode> {
    match cmd {
        TokensCmd::GenKeys { period, slices, bits, out } => {
            let mut rng = rand::rngs::OsRng;
            let set = gen_period_keys(&period, slices, bits, &mut rng)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            fs::create_dir_all(&out)?;
            fs::write(out.join("public.json"), set.public_set().to_json()?)?;
            fs::write(
                out.join("private.json"),
                serde_json::to_string_pretty(&PrivateKeySetFile::from_keyset(&set))?,
            )?;
            println!(
                "{slices} slice keypairs ({bits}-bit) for period '{period}' -> {}",
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        TokensCmd::Verify { wallet, pub_keys, spend_slice, store } => {
            let wallet = Wallet::from_json(&fs::read_to_string(&wallet)?)?;
            let keys = SlicePublicKeys::from_json(&fs::read_to_string(&pub_keys)?)?;
            let tokens = wallet.signed_tokens()?;
            let mut ok = 0usize;
            for t in &tokens {
                let Some(key) = keys.key_for(t.token.slice_index) else {
                    continue;
                };
                if pgpp_tokens::verify(&t.token.message_bytes(), &t.signature, &key) {
                    ok += 1;
                }
            }
            println!("{ok}/{} wallet signatures verify", tokens.len());
            if let Some(slice) = spend_slice {
                let token = tokens
                    .iter()
                    .find(|t| t.token.slice_index == slice)
                    .with_context(|| format!("wallet has no token for slice {slice}"))?;
                let store: Arc<dyn SpentTokenStore> = match &store {
                    Some(path) => Arc::new(FileStore::open(path).map_err(|e| anyhow::anyhow!("{e}"))?),
                    None => Arc::new(MemoryStore::new()),
                };
                let outcome = verify_and_spend(
                    token,
                    &keys,
                    &*store,
                    slice,
                    AcceptanceWindow::exact(),
                )
                .map_err(|e| anyhow::anyhow!("{e}"))?;
                match outcome {
                    VerifyOutcome::Accepted => println!("slice {slice}: accepted"),
                    VerifyOutcome::Rejected(r) => println!("slice {slice}: rejected ({r:?})"),
                }
            }
            Ok(if ok == tokens.len() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn cmd_billing(cmd: BillingCmd) -> Result<ExitCode> {
    match cmd {
        BillingCmd::Issue { period, keys, out } => {
            let file: PrivateKeySetFile =
                serde_json::from_str(&fs::read_to_string(keys.join("private.json"))?)?;
            let set = file.into_keyset().map_err(|e| anyhow::anyhow!("{e}"))?;
            if set.period_id != period {
                bail!("keyset is for period '{}', not '{period}'", set.period_id);
            }
            let mut rng = rand::rngs::OsRng;
            let signed = issue_period_tokens(&set, &mut rng);
            let mut wallet = Wallet::new(&period);
            for t in &signed {
                wallet.push(t);
            }
            fs::write(&out, wallet.to_json()?)?;
            println!("{} tokens issued into {}", signed.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GatewayFileConfig {
    listen: String,
    pub_keys: String,
    /// "memory" or a file path
    store: String,
    cert: String,
    key: String,
    decision_log: String,
    period_start_epoch_s: u64,
    slice_seconds: u64,
    #[serde(default)]
    grace_slices: u64,
    #[serde(default = "default_hosts")]
    hosts: Vec<String>,
}

fn default_hosts() -> Vec<String> {
    vec!["localhost".into()]
}

fn cmd_gateway(cmd: GatewayCmd) -> Result<ExitCode> {
    match cmd {
        GatewayCmd::GenIdentity { host, out } => {
            let (cert, key) = pgpp_gateway::tls::generate_identity(&[host])
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            fs::create_dir_all(&out)?;
            fs::write(out.join("cert.pem"), cert)?;
            fs::write(out.join("key.pem"), key)?;
            println!("identity written to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        GatewayCmd::Serve { config } => {
            let cfg: GatewayFileConfig = match toml::from_str(&fs::read_to_string(&config)?) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return Ok(ExitCode::from(2));
                }
            };
            let keys = SlicePublicKeys::from_json(&fs::read_to_string(&cfg.pub_keys)?)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            let store: Arc<dyn SpentTokenStore> = if cfg.store == "memory" {
                Arc::new(MemoryStore::new())
            } else {
                Arc::new(FileStore::open(&cfg.store).map_err(|e| anyhow::anyhow!("{e}"))?)
            };
            if !Path::new(&cfg.cert).exists() {
                let (cert, key) = pgpp_gateway::tls::generate_identity(&cfg.hosts)
                    .map_err(|e| anyhow::anyhow!("{e}"))?;
                if let Some(parent) = Path::new(&cfg.cert).parent() {
                    fs::create_dir_all(parent)?;
                }
                fs::write(&cfg.cert, cert)?;
                fs::write(&cfg.key, key)?;
                println!("generated TLS identity at {}", cfg.cert);
            }
            let tls = pgpp_gateway::tls::server_config(
                &fs::read_to_string(&cfg.cert)?,
                &fs::read_to_string(&cfg.key)?,
            )
            .map_err(|e| anyhow::anyhow!("{e}"))?;
            let log_file = fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(&cfg.decision_log)?;
            let gateway = Arc::new(Gateway::new(
                GatewayConfig {
                    slice: SliceConfig {
                        period_start_epoch_s: cfg.period_start_epoch_s,
                        slice_seconds: cfg.slice_seconds,
                    },
                    acceptance: AcceptanceWindow::with_grace(cfg.grace_slices),
                },
                keys,
                store,
                Arc::new(SystemTimeSource),
                DecisionLog::new(Box::new(log_file)),
            ));
            let listener = std::net::TcpListener::bind(&cfg.listen)
                .with_context(|| format!("bind {}", cfg.listen))?;
            println!("gateway listening on {}", cfg.listen);
            let shutdown = Arc::new(std::sync::atomic::AtomicBool::new(false));
            pgpp_gateway::server::serve(gateway, listener, tls, shutdown)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn cmd_client(cmd: ClientCmd) -> Result<ExitCode> {
    match cmd {
        ClientCmd::Authenticate {
            wallet,
            gateway,
            cert,
            server_name,
            slice,
            period_start_epoch_s,
            slice_seconds,
            stage_next,
        } => {
            let wallet = Wallet::from_json(&fs::read_to_string(&wallet)?)?;
            let tls = pgpp_gateway::tls::client_config(&fs::read_to_string(&cert)?)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            let slice = slice.unwrap_or_else(|| {
                use pgpp_gateway::TimeSource;
                let now = SystemTimeSource.now_epoch_s();
                SliceConfig {
                    period_start_epoch_s,
                    slice_seconds,
                }
                .slice_of(now)
            });
            let token = pgpp_gateway::client::wallet_token_for_slice(&wallet, slice)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            let mut channel = pgpp_gateway::ClientChannel::connect(
                &gateway,
                &server_name,
                tls,
                &wallet.period_id,
            )
            .map_err(|e| anyhow::anyhow!("{e}"))?;
            match channel.authenticate(&token).map_err(|e| anyhow::anyhow!("{e}"))? {
                pgpp_gateway::AuthReply::Authorized { until_epoch_s } => {
                    println!("authorized until epoch {until_epoch_s}");
                    if stage_next {
                        match pgpp_gateway::client::wallet_token_for_slice(&wallet, slice + 1) {
                            Ok(next) => {
                                match channel.stage_next(&next).map_err(|e| anyhow::anyhow!("{e}"))? {
                                    pgpp_gateway::AuthReply::Authorized { .. } => {
                                        println!("next slice staged")
                                    }
                                    pgpp_gateway::AuthReply::Denied { reason, .. } => {
                                        println!("staging denied: {reason:?}")
                                    }
                                }
                            }
                            Err(_) => println!("no token for slice {}", slice + 1),
                        }
                    }
                    Ok(ExitCode::SUCCESS)
                }
                pgpp_gateway::AuthReply::Denied { reason, retryable } => {
                    println!("denied: {reason:?} (retryable: {retryable})");
                    Ok(ExitCode::from(1))
                }
            }
        }
    }
}

fn cmd_aka(cmd: AkaCmd) -> Result<ExitCode> {
    match cmd {
        AkaCmd::Simulate { ues, shared_imsi, seed, round_latency_ms, out } => {
            let outcomes = simulate_mass_attach(&MassAttachConfig {
                n_ues: ues,
                shared_imsi,
                round_latency_ms,
                sqn_window: 0,
                seed,
            });
            fs::create_dir_all(&out)?;
            let mut lines = String::new();
            for o in &outcomes {
                lines.push_str(&serde_json::to_string(o)?);
                lines.push('\n');
            }
            fs::write(out.join("outcomes.jsonl"), lines)?;
            experiment::write_delay_histogram(&outcomes, &out.join("delay_hist.csv"))?;
            let failures: u32 = outcomes.iter().map(|o| o.sync_failures).sum();
            println!(
                "{ues} UEs attached ({} sync_failures) -> {}",
                failures,
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn cmd_analyze_log(args: AnalyzeLogArgs) -> Result<ExitCode> {
    #[derive(Deserialize)]
    struct Row {
        timestamp_s: f64,
        identifier: String,
    }
    let mut rdr = csv::Reader::from_path(&args.log)?;
    let mut entries = Vec::new();
    for rec in rdr.deserialize::<Row>() {
        let r = rec?;
        entries.push(LogEntry {
            timestamp_s: r.timestamp_s,
            identifier: r.identifier,
        });
    }
    let analysis = analyze_paging_log(&entries).map_err(|e| anyhow::anyhow!("{e}"))?;
    fs::write(&args.out, serde_json::to_vec_pretty(&analysis)?)?;
    println!(
        "{} identifiers, {} intervals -> {}",
        analysis.page_counts.len(),
        analysis.intervals_s.len(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}
