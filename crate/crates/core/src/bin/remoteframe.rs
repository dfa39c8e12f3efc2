use clap::{Args, Parser, Subcommand, ValueEnum};
use remoteframe::bench::{check_orderings, emit_report, mean_report, run_benchmark, BenchConfig, Pacing, ReportFormat};
use remoteframe::device::{standard_workload, Device, DeviceState, ScenarioScript, SimClock};
use remoteframe::encodings::EncodingId;
use remoteframe::transport::{serve, AuthPolicy, ServerConfig, TransportProfile, WebConfig, DEFAULT_WEB_PORT};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

#[derive(Parser)]
#[command(name = "remoteframe", version, about = "Remote framebuffer server and encoding benchmark for a simulated handset")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the RFB and command servers against a simulated device.
    Serve(ServeArgs),
    /// Encoding benchmark.
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
}

#[derive(Subcommand)]
enum BenchCommand {
    Run(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AuthMode {
    None,
    Secret,
}

#[derive(Args)]
struct LinkArgs {
    /// Bandwidth cap in bytes per second for `--profile custom`; omit for no cap.
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    latency_ms: f64,
    #[arg(long, default_value_t = 0.0)]
    jitter_ms: f64,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    bind: String,
    #[arg(long, default_value_t = 5901)]
    rfb_port: u16,
    #[arg(long, default_value_t = 7001)]
    cmd_port: u16,
    #[arg(long, value_enum, default_value = "none")]
    auth: AuthMode,
    /// File holding the shared secret; REMOTEFRAME_SECRET takes precedence.
    #[arg(long)]
    secret_file: Option<PathBuf>,
    /// Encrypt both channels after login (requires --auth secret).
    #[arg(long)]
    encrypt: bool,
    /// usb | wifi | unthrottled | custom
    #[arg(long, default_value = "unthrottled")]
    profile: String,
    #[command(flatten)]
    link: LinkArgs,
    /// Scenario TOML; the built-in workload otherwise.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Serve the browser viewer and the WebSocket bridge.
    #[arg(long)]
    web: bool,
    #[arg(long, default_value_t = DEFAULT_WEB_PORT)]
    web_port: u16,
    /// Directory served under /viewer instead of the built-in page.
    #[arg(long)]
    web_root: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',', default_value = "raw,rre,hextile,zlib,tight")]
    encodings: Vec<EncodingId>,
    #[arg(long, value_delimiter = ',', default_value = "usb,wifi")]
    profiles: Vec<String>,
    #[command(flatten)]
    link: LinkArgs,
    #[arg(long, default_value = "table")]
    format: ReportFormat,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit non-zero when an expected ordering does not hold.
    #[arg(long)]
    check: bool,
    /// Runs per (encoding, profile); the report holds the mean.
    #[arg(long, default_value_t = 1)]
    repeat: u32,
    /// Advance the device clock by this many ms per screen read instead of
    /// following wall time.
    #[arg(long)]
    lockstep_ms: Option<u64>,
    /// Stop each run after this many seconds.
    #[arg(long)]
    duration_s: Option<f64>,
}

fn load_scenario(path: Option<&Path>, seed: Option<u64>) -> Result<ScenarioScript, String> {
    let mut script = match path {
        Some(p) => ScenarioScript::load(p).map_err(|e| e.to_string())?,
        None => standard_workload(),
    };
    if let Some(s) = seed {
        script.seed = s;
    }
    script.validate().map_err(|e| e.to_string())?;
    Ok(script)
}

fn profile(name: &str, link: &LinkArgs) -> Result<TransportProfile, String> {
    if name == "custom" {
        TransportProfile::custom(link.bandwidth, link.latency_ms, link.jitter_ms).map_err(|e| e.to_string())
    } else {
        TransportProfile::by_name(name).map_err(|e| e.to_string())
    }
}

fn read_secret(file: Option<&Path>) -> Result<Vec<u8>, String> {
    if let Ok(s) = std::env::var("REMOTEFRAME_SECRET") {
        return Ok(s.into_bytes());
    }
    let path = file.ok_or("--auth secret needs REMOTEFRAME_SECRET or --secret-file")?;
    let mut bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    while bytes.last().is_some_and(|b| *b == b'\n' || *b == b'\r') {
        bytes.pop();
    }
    Ok(bytes)
}

fn run_serve(args: ServeArgs) -> Result<(), String> {
    let script = load_scenario(args.scenario.as_deref(), args.seed)?;
    let auth = match args.auth {
        AuthMode::None => AuthPolicy::None,
        AuthMode::Secret => AuthPolicy::shared_secret(read_secret(args.secret_file.as_deref())?).map_err(|e| e.to_string())?,
    };
    if args.encrypt && matches!(auth, AuthPolicy::None) {
        return Err("--encrypt requires --auth secret".into());
    }
    let config = ServerConfig {
        bind: args.bind,
        rfb_port: args.rfb_port,
        cmd_port: args.cmd_port,
        auth,
        encrypt: args.encrypt,
        profile: profile(&args.profile, &args.link)?,
        web: args.web.then(|| WebConfig { port: args.web_port, root: args.web_root }),
        ..ServerConfig::default()
    };
    let device = Device::new(DeviceState::fixture(), script, SimClock::wall()).map_err(|e| e.to_string())?;
    let handle = serve(config, device).map_err(|e| e.to_string())?;
    println!("rfb  listening on {}", handle.rfb_addr());
    println!("cmd  listening on {}", handle.cmd_addr());
    if let Some(web) = handle.web_addr() {
        println!("web  viewer at http://{web}/viewer/");
    }
    loop {
        std::thread::park();
    }
}

fn run_bench(args: BenchArgs) -> Result<bool, String> {
    let script = load_scenario(args.scenario.as_deref(), args.seed)?;
    if args.repeat == 0 {
        return Err("--repeat must be at least 1".into());
    }
    let mut reports = Vec::new();
    for name in &args.profiles {
        let profile = profile(name, &args.link)?;
        for &encoding in &args.encodings {
            let mut cfg = BenchConfig::new(script.clone(), encoding, profile.clone());
            if let Some(step) = args.lockstep_ms {
                cfg.pacing = Pacing::Lockstep { step_ms: step };
            }
            cfg.duration_cap = args.duration_s.map(Duration::from_secs_f64);
            let mut runs = Vec::new();
            for _ in 0..args.repeat {
                runs.push(run_benchmark(&cfg).map_err(|e| format!("{encoding} over {name}: {e}"))?);
            }
            let r = mean_report(&runs).expect("at least one run");
            eprintln!("{:>8} {:>11}: {:>4} updates, ratio {:.2}", r.encoding, r.profile, r.updates, r.compression_ratio);
            reports.push(r);
        }
    }
    let bytes = emit_report(&reports, args.format);
    match &args.out {
        Some(p) => std::fs::write(p, &bytes).map_err(|e| format!("{}: {e}", p.display()))?,
        None => print!("{}", String::from_utf8_lossy(&bytes)),
    }
    if !args.check {
        return Ok(true);
    }
    let failures = check_orderings(&reports);
    for f in &failures {
        eprintln!("ordering violated: {f}");
    }
    Ok(failures.is_empty())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Serve(args) => run_serve(args).map(|_| true),
        Command::Bench { command: BenchCommand::Run(args) } => run_bench(args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
