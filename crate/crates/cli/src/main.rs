mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use inkcheck_core::battery::{builtin_template, score_session, TestTemplate};
use inkcheck_core::features::{feature_matrix, session_features};
use inkcheck_core::ink::InkFile;
use inkcheck_core::recognize::NoTextRecognizer;
use inkcheck_core::synth::{gen_test_session, SessionParams, Style};
use inkcheck_core::InkError;
use inkcheck_service::store::{DERIVED, GRAPH, RAW_LOG};
use inkcheck_service::{
    parse_raw, play, rebuild, replay_schedule, serve, Listeners, Service, ServiceError, SessionStore,
};
use serde_json::json;

use crate::config::{CliConfig, ConfigError, FeatureFormat};

#[derive(Debug, Parser)]
#[command(name = "inkcheck", version, about = "Digital-ink cognitive assessment engine")]
struct Cli {
    /// Flat JSON configuration file; INKCHECK_<KEY> variables override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the feature matrix of an ink-json file.
    Analyze {
        ink: PathBuf,
        /// Export format; the configured `feature_format` by default.
        #[arg(long, value_enum)]
        features: Option<FeatureFormat>,
        /// Write to a file instead of stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Score an ink-json file and print the test result.
    Score {
        ink: PathBuf,
        /// template-json file; the built-in layout of the test by default.
        #[arg(long)]
        template: Option<PathBuf>,
    },
    /// Generate a synthetic session with its ground-truth manifest.
    Synth {
        test_id: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        tremor_mm: f64,
        #[arg(long, default_value_t = 8.0)]
        tremor_hz: f64,
        #[arg(long, default_value_t = 0.0)]
        jitter_mm: f64,
        /// Clock time for CDT, e.g. 11:10.
        #[arg(long)]
        clock_time: Option<String>,
        /// Wrong transitions injected into a trail.
        #[arg(long, default_value_t = 0)]
        trail_errors: usize,
        /// Extra pen-up pause halfway through, in seconds.
        #[arg(long)]
        long_pause_s: Option<f64>,
        /// Redraw one clock digit a few seconds later.
        #[arg(long)]
        correction: bool,
    },
    /// Run the ingestion service until interrupted.
    Serve,
    /// Replay a stored session in real time, scaled by --speed.
    Replay {
        session_id: String,
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
        #[arg(long)]
        from_t: Option<u64>,
        #[arg(long)]
        to_t: Option<u64>,
    },
    /// Regenerate derived.json and graph.nt from a session's raw.jsonl.
    Rebuild {
        session_dir: PathBuf,
        /// Compare with the stored artifacts instead of writing them.
        #[arg(long)]
        check: bool,
    },
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct CheckFailed(String);

fn read_ink(path: &Path) -> anyhow::Result<inkcheck_core::ink::InkSession> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(InkFile::parse(&text)?.into_session()?)
}

fn fmt_cell(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn analyze(cfg: &CliConfig, ink: &Path, format: FeatureFormat, out: Option<&Path>) -> anyhow::Result<()> {
    let session = read_ink(ink)?;
    let features = session_features(&session, cfg.thresholds.pause_threshold_us());
    let mut buf = Vec::new();
    match format {
        FeatureFormat::Csv => {
            let (ids, rows) = feature_matrix(&features);
            let mut w = csv::Writer::from_writer(&mut buf);
            let mut header = vec!["session_id", "level", "index"];
            header.extend(&ids);
            w.write_record(&header)?;
            for (fv, row) in features.rows().zip(rows) {
                let mut record =
                    vec![fv.scope.session_id.clone(), fv.scope.level.as_str().to_string(), fv.scope.index.to_string()];
                record.extend(row.into_iter().map(fmt_cell));
                w.write_record(&record)?;
            }
            w.flush()?;
        }
        FeatureFormat::Json => {
            serde_json::to_writer_pretty(&mut buf, &features)?;
            buf.push(b'\n');
        }
    }
    match out {
        Some(p) => std::fs::write(p, buf).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}

fn score(cfg: &CliConfig, ink: &Path, template: Option<&Path>) -> anyhow::Result<()> {
    let session = read_ink(ink)?;
    let template = match template {
        Some(p) => {
            TestTemplate::parse(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?
        }
        None => builtin_template(&session.meta.test_id)?,
    };
    let result = score_session(&session, &template, &cfg.thresholds, &NoTextRecognizer)?;
    println!("{}", serde_json::to_string_pretty(&result)?);
    Ok(())
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn synth(test_id: &str, seed: u64, out: &Path, params: SessionParams) -> anyhow::Result<()> {
    let g = gen_test_session(test_id, &params, seed)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let id = &g.session.meta.session_id;
    let ink = out.join(format!("{id}.ink.json"));
    let manifest = out.join(format!("{id}.manifest.json"));
    let template = out.join(format!("{id}.template.json"));
    write_file(&ink, &(InkFile::from_session(&g.session).to_json() + "\n"))?;
    write_file(&manifest, &(serde_json::to_string_pretty(&g.manifest)? + "\n"))?;
    write_file(&template, &(g.template.to_json() + "\n"))?;
    println!("{}", json!({ "ink": ink, "manifest": manifest, "template": template }));
    Ok(())
}

async fn shutdown_signal() {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        let mut term = signal(SignalKind::terminate()).expect("installing SIGTERM handler");
        tokio::select! {
            _ = tokio::signal::ctrl_c() => {}
            _ = term.recv() => {}
        }
    }
    #[cfg(not(unix))]
    let _ = tokio::signal::ctrl_c().await;
}

fn run_serve(cfg: &CliConfig) -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let store = SessionStore::open(&cfg.store_root)?;
        let service = Service::new(store, cfg.thresholds.clone(), Arc::new(NoTextRecognizer));
        let listeners = Listeners::bind(cfg.listen, cfg.http_listen).await?;
        // One line on stdout so callers binding port 0 can find the service.
        println!("{}", json!({ "listen": listeners.tcp_addr()?, "http_listen": listeners.http_addr()? }));
        std::io::stdout().flush()?;
        serve(service, listeners, shutdown_signal()).await?;
        Ok(())
    })
}

fn run_replay(cfg: &CliConfig, id: &str, speed: f64, from_t: Option<u64>, to_t: Option<u64>) -> anyhow::Result<()> {
    let store = SessionStore::open(&cfg.store_root)?;
    let records = store.read_raw(id)?;
    let schedule = replay_schedule(&records, speed, from_t, to_t)?;
    let rt = tokio::runtime::Builder::new_current_thread().enable_time().build()?;
    rt.block_on(async {
        let (tx, mut rx) = tokio::sync::mpsc::channel(256);
        let start = Instant::now();
        let player = async move { play(id, &schedule, &tx).await };
        let printer = async {
            let mut stdout = std::io::stdout().lock();
            while let Some(event) = rx.recv().await {
                let wall_ms = start.elapsed().as_secs_f64() * 1e3;
                writeln!(stdout, "{}", json!({ "wall_ms": wall_ms, "event": event }))?;
                stdout.flush()?;
            }
            Ok::<(), std::io::Error>(())
        };
        let ((), printed) = tokio::join!(player, printer);
        printed
    })?;
    Ok(())
}

fn run_rebuild(dir: &Path, check: bool) -> anyhow::Result<()> {
    let raw = dir.join(RAW_LOG);
    let text = std::fs::read_to_string(&raw).with_context(|| format!("reading {}", raw.display()))?;
    let artifacts = rebuild(&parse_raw(&text)?, Arc::new(NoTextRecognizer))?;
    if check {
        let mut differ = Vec::new();
        for (name, bytes) in [(DERIVED, &artifacts.derived_json), (GRAPH, &artifacts.graph_nt)] {
            let stored =
                std::fs::read(dir.join(name)).with_context(|| format!("reading {}", dir.join(name).display()))?;
            if &stored != bytes {
                differ.push(name);
            }
        }
        if !differ.is_empty() {
            return Err(CheckFailed(format!("rebuilt artifacts differ: {}", differ.join(", "))).into());
        }
        println!("{}", json!({ "session_dir": dir, "identical": true }));
        return Ok(());
    }
    let id =
        dir.file_name().and_then(|n| n.to_str()).ok_or_else(|| anyhow!("bad session directory {}", dir.display()))?;
    let parent = dir.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    SessionStore::open(parent)?.write_artifacts(id, &artifacts)?;
    println!("{}", json!({ "derived": dir.join(DERIVED), "graph": dir.join(GRAPH) }));
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = CliConfig::from_env(cli.config.as_deref())?;
    match cli.command {
        Command::Analyze { ink, features, out } => {
            analyze(&cfg, &ink, features.unwrap_or(cfg.feature_format), out.as_deref())
        }
        Command::Score { ink, template } => score(&cfg, &ink, template.as_deref()),
        Command::Synth {
            test_id,
            seed,
            out,
            tremor_mm,
            tremor_hz,
            jitter_mm,
            clock_time,
            trail_errors,
            long_pause_s,
            correction,
        } => {
            let style = Style {
                tremor_amplitude_mm: tremor_mm,
                tremor_freq_hz: tremor_hz,
                jitter_sigma_mm: jitter_mm,
                ..Style::default()
            };
            let params = SessionParams {
                style,
                clock_time,
                trail_errors,
                long_pause_us: long_pause_s.map(|s| (s * 1e6).round() as u64),
                correction,
                ..SessionParams::default()
            };
            synth(&test_id, seed, &out, params)
        }
        Command::Serve => run_serve(&cfg),
        Command::Replay { session_id, speed, from_t, to_t } => run_replay(&cfg, &session_id, speed, from_t, to_t),
        Command::Rebuild { session_dir, check } => run_rebuild(&session_dir, check),
    }
}

/// Machine-readable code and exit status of a failure.
fn classify(e: &anyhow::Error) -> (String, u8) {
    if e.downcast_ref::<ConfigError>().is_some() {
        return ("config_error".into(), 2);
    }
    if e.downcast_ref::<CheckFailed>().is_some() {
        return ("check_failed".into(), 1);
    }
    let code = if let Some(s) = e.downcast_ref::<ServiceError>() {
        s.code()
    } else if let Some(i) = e.downcast_ref::<InkError>() {
        ServiceError::from(i.clone()).code()
    } else {
        return ("runtime_error".into(), 1);
    };
    (serde_json::to_value(code).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default(), 1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, status) = classify(&e);
            eprintln!("{}", json!({ "error": { "code": code, "message": format!("{e:#}") } }));
            ExitCode::from(status)
        }
    }
}
