//! `cookctl`: run the control plane, drive simulated probes, talk to the
//! assistant and replay scripted cooks.
//!
//! Exit codes: 0 success, 1 a scenario assertion failed, 2 bad usage or
//! configuration, 3 the server could not be reached.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand};
use smartcook_core::doneness::{CategoryId, Classification, DonenessTable};
use smartcook_core::thermal::{self, Simulator, TelemetrySink, ThermalParams};
use smartcook_service::clock::WallClock;
use smartcook_service::device::{Paced, TcpSink};
use smartcook_service::gateway::{SpeechRequest, SpeechResponse};
use smartcook_service::scenario::{self, Scenario, ScenarioError};
use smartcook_service::{Server, ServiceConfig};

#[derive(Parser)]
#[command(name = "cookctl", version, about = "Smart cooking thermometer toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the control plane until interrupted.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Stream a simulated probe to a running control plane.
    Simulate {
        #[arg(long)]
        device: String,
        #[arg(long)]
        t0: f64,
        #[arg(long)]
        env: f64,
        #[arg(long)]
        k: f64,
        #[arg(long)]
        cadence: f64,
        #[arg(long)]
        duration: f64,
        /// Telemetry address, e.g. 127.0.0.1:7070.
        #[arg(long)]
        server: SocketAddr,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Standard deviation of reading noise in °F.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Wait one cadence of wall time between samples.
        #[arg(long)]
        realtime: bool,
    },
    /// Send one typed utterance to the assistant and print the reply.
    Say {
        #[arg(long)]
        token: String,
        /// HTTP address of the control plane.
        #[arg(long)]
        server: String,
        #[arg(long, default_value = "")]
        session: String,
        text: String,
    },
    /// Run a scripted scenario on a simulated clock.
    Scenario {
        path: PathBuf,
        /// Print the full report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Query the doneness table.
    Kb {
        #[command(subcommand)]
        query: KbQuery,
    },
}

#[derive(Subcommand)]
enum KbQuery {
    /// Name the doneness level of a temperature.
    Classify {
        #[arg(long)]
        category: String,
        #[arg(long)]
        temp: f64,
        /// Alternative knowledge file.
        #[arg(long)]
        kb: Option<PathBuf>,
    },
}

const ASSERTION: u8 = 1;
const USAGE: u8 = 2;
const TRANSPORT: u8 = 3;

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl ToString) -> Failure {
    Failure {
        code,
        message: message.to_string(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    let default_filter = match cli.command {
        Command::Serve { .. } => "warn,smartcook_service=info",
        _ => "warn",
    };
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| default_filter.into()),
        )
        .with_writer(std::io::stderr)
        .init();

    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: cannot start runtime: {e}");
            return ExitCode::FAILURE;
        }
    };
    match runtime.block_on(dispatch(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}

async fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Serve { config } => serve(config).await,
        Command::Simulate {
            device,
            t0,
            env,
            k,
            cadence,
            duration,
            server,
            seed,
            noise,
            realtime,
        } => {
            let params = ThermalParams {
                t0_f: t0,
                env_f: env,
                k_per_s: k,
                noise_sigma_f: noise,
                seed,
            };
            tokio::task::spawn_blocking(move || {
                simulate(&device, params, cadence, duration, server, realtime)
            })
            .await
            .map_err(|e| fail(USAGE, e))?
        }
        Command::Say {
            token,
            server,
            session,
            text,
        } => say(&server, token, session, text).await,
        Command::Scenario { path, json } => run_scenario(path, json).await,
        Command::Kb {
            query: KbQuery::Classify { category, temp, kb },
        } => classify(&category, temp, kb),
    }
}

async fn serve(config: PathBuf) -> Result<(), Failure> {
    let cfg = ServiceConfig::load(&config).map_err(|e| fail(USAGE, e))?;
    let server = Server::start(&cfg, Arc::new(WallClock))
        .await
        .map_err(|e| fail(USAGE, e))?;
    println!(
        "listening: http {} telemetry {}",
        server.http_addr(),
        server.telemetry_addr()
    );
    let _ = tokio::signal::ctrl_c().await;
    server
        .shutdown()
        .await
        .map_err(|e| fail(USAGE, format!("flushing telemetry log: {e}")))
}

fn simulate(
    device: &str,
    params: ThermalParams,
    cadence: f64,
    duration: f64,
    server: SocketAddr,
    realtime: bool,
) -> Result<(), Failure> {
    let mut sim = Simulator::new(device, params, 0).map_err(|e| fail(USAGE, e))?;
    if !(cadence > 0.0 && cadence.is_finite()) {
        return Err(fail(USAGE, "--cadence must be positive"));
    }
    let sink = TcpSink::connect(server, device)
        .map_err(|e| fail(TRANSPORT, format!("cannot reach {server}: {e}")))?;
    let state = if realtime {
        let mut paced = Paced::new(sink, Duration::from_secs_f64(cadence));
        let state = run_sim(&mut sim, cadence, duration, &mut paced)?;
        paced.into_inner().close();
        state
    } else {
        let mut sink = sink;
        let state = run_sim(&mut sim, cadence, duration, &mut sink)?;
        sink.close();
        state
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&state).expect("state serializes")
    );
    Ok(())
}

fn run_sim<S: TelemetrySink<Error = std::io::Error>>(
    sim: &mut Simulator,
    cadence: f64,
    duration: f64,
    sink: &mut S,
) -> Result<thermal::DeviceState, Failure> {
    thermal::run(sim, cadence, duration, sink).map_err(|e| match e {
        thermal::RunError::Sim(e) => fail(USAGE, e),
        thermal::RunError::Transport(e) => fail(TRANSPORT, e),
    })
}

fn http_base(server: &str) -> String {
    let base = server.trim_end_matches('/');
    if base.contains("://") {
        base.to_string()
    } else {
        format!("http://{base}")
    }
}

async fn say(server: &str, token: String, session_id: String, text: String) -> Result<(), Failure> {
    let url = format!("{}/api/assistant/utterance", http_base(server));
    let req = SpeechRequest {
        text,
        token,
        session_id,
    };
    let reply: SpeechResponse = reqwest::Client::new()
        .post(&url)
        .json(&req)
        .send()
        .await
        .and_then(|r| r.error_for_status())
        .map_err(|e| fail(TRANSPORT, e))?
        .json()
        .await
        .map_err(|e| fail(TRANSPORT, e))?;
    println!("{}", reply.speech);
    Ok(())
}

async fn run_scenario(path: PathBuf, json: bool) -> Result<(), Failure> {
    let scenario = Scenario::load(&path).map_err(|e| fail(USAGE, e))?;
    let report = scenario::run(&scenario).await.map_err(|e| match e {
        ScenarioError::Parse(_) | ScenarioError::Invalid { .. } | ScenarioError::Serve(_) => {
            fail(USAGE, e)
        }
        _ => fail(TRANSPORT, e),
    })?;
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serializes")
        );
    } else {
        for c in &report.checks {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            print!("{mark} t={:>6}s {}", c.at_s, c.what);
            if c.passed {
                println!(" = {}", c.actual);
            } else {
                println!("\n       expected: {}\n       actual:   {}", c.expected, c.actual);
            }
        }
        let failed = report.failures().count();
        println!(
            "{}: {} checks, {} failed, {} samples, {} alarms",
            report.name,
            report.checks.len(),
            failed,
            report.samples.len(),
            report.alarms.len()
        );
    }
    if report.passed() {
        Ok(())
    } else {
        Err(fail(ASSERTION, ""))
    }
}

fn classify(category: &str, temp: f64, kb: Option<PathBuf>) -> Result<(), Failure> {
    let table = match kb {
        None => DonenessTable::default(),
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| fail(USAGE, format!("{}: {e}", path.display())))?;
            DonenessTable::load(&text).map_err(|e| fail(USAGE, e))?
        }
    };
    let id: CategoryId = category.parse().map_err(|e| fail(USAGE, e))?;
    match table.classify(id, temp).map_err(|e| fail(USAGE, e))? {
        Classification::Entry(e) => println!("{}: {}", e.name, e.description),
        Classification::BelowRange => println!(
            "below the lowest doneness level (USDA minimum {}°F)",
            table.usda_minimum(id).map_err(|e| fail(USAGE, e))?
        ),
    }
    Ok(())
}
