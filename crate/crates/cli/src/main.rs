mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info};

use config::{CommandKind, RunConfig};
use output::{Output, Summary};
use phasefunnel::{Error, Result};

/// Reachable funnels, averaging checks, contraction certificates and funnel
/// control for phase-indexed differential inclusions.
#[derive(Parser)]
#[command(name = "phasefunnel", version)]
struct Cli {
    /// Only print errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    /// Debug logging.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set numerics.h=0.02`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ScalingArgs {
    #[command(flatten)]
    common: Common,
    /// Fail (exit 2) when a ratio d_H(eps/2) / d_H(eps) exceeds this.
    #[arg(long)]
    assert_ratio_max: Option<f64>,
    /// Fail (exit 2) when a ratio falls below this.
    #[arg(long)]
    assert_ratio_min: Option<f64>,
}

#[derive(Args, Clone)]
struct WalkerArgs {
    #[command(flatten)]
    common: Common,
    /// Number of jumps per run.
    #[arg(long)]
    steps: Option<usize>,
    /// `path-integral` or `open-loop`.
    #[arg(long)]
    controller: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Funnel sections CSV replacing the shipped funnel.
    #[arg(long)]
    funnel_file: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the command named in the config's `command` field.
    Run(Common),
    /// Phase average of a field at given states, with hypothesis checks.
    Average(Common),
    /// Time-parameterized reachable funnel.
    Reach(Common),
    /// One-revolution return map of the phase funnel.
    Poincare(Common),
    /// Periodic funnel by iterating the return map.
    Periodic(Common),
    /// Contraction certificate for a quadratic candidate.
    Certify(Common),
    /// Contraction outside a periodic funnel plus its invariance.
    CertifyFunnel(Common),
    /// O(eps) gap between original and averaged funnels.
    Theorem1(ScalingArgs),
    /// Averaged gap and approach to a critical point over a long horizon.
    Theorem2(ScalingArgs),
    /// Averaged gap and approach to an invariant set over a long horizon.
    Theorem3(ScalingArgs),
    /// Windowed graph distance between two funnels.
    GraphDistance(Common),
    /// Hybrid walker under funnel control.
    Walker(WalkerArgs),
    /// List the built-in systems.
    Systems,
}

fn load(kind: Option<CommandKind>, common: &Common, extra: Vec<String>) -> Result<(CommandKind, RunConfig)> {
    let mut overrides = common.set.clone();
    overrides.extend(extra);
    let cfg = config::load(common.config.as_deref(), &overrides)?;
    let kind = match (kind, cfg.command) {
        (Some(k), Some(c)) if k != c => {
            return Err(Error::InvalidInput(format!(
                "config is for `{}`, not `{}`",
                c.name(),
                k.name()
            )))
        }
        (Some(k), _) | (None, Some(k)) => k,
        (None, None) => {
            return Err(Error::InvalidInput(
                "`run` needs a `command` field in the config".into(),
            ))
        }
    };
    Ok((kind, cfg))
}

fn flag<T: ToString>(key: &str, v: &Option<T>) -> Option<String> {
    v.as_ref().map(|v| format!("{key}={}", v.to_string()))
}

fn json_flag(key: &str, v: &Option<String>) -> Option<String> {
    v.as_ref().map(|v| format!("{key}={}", serde_json::Value::String(v.clone())))
}

fn dispatch(cmd: &Cmd) -> Result<(Option<CommandKind>, Common, Vec<String>)> {
    use CommandKind as K;
    let simple = |k: Option<K>, c: &Common| Ok((k, c.clone(), Vec::new()));
    match cmd {
        Cmd::Run(c) => simple(None, c),
        Cmd::Average(c) => simple(Some(K::Average), c),
        Cmd::Reach(c) => simple(Some(K::Reach), c),
        Cmd::Poincare(c) => simple(Some(K::Poincare), c),
        Cmd::Periodic(c) => simple(Some(K::Periodic), c),
        Cmd::Certify(c) => simple(Some(K::Certify), c),
        Cmd::CertifyFunnel(c) => simple(Some(K::CertifyFunnel), c),
        Cmd::GraphDistance(c) => simple(Some(K::GraphDistance), c),
        Cmd::Theorem1(a) | Cmd::Theorem2(a) | Cmd::Theorem3(a) => {
            let kind = match cmd {
                Cmd::Theorem1(_) => K::Theorem1,
                Cmd::Theorem2(_) => K::Theorem2,
                _ => K::Theorem3,
            };
            let extra = [
                flag("assertions.ratio_max", &a.assert_ratio_max),
                flag("assertions.ratio_min", &a.assert_ratio_min),
            ];
            Ok((Some(kind), a.common.clone(), extra.into_iter().flatten().collect()))
        }
        Cmd::Walker(a) => {
            let path = a.funnel_file.as_ref().map(|p| p.display().to_string());
            let extra = [
                flag("numerics.steps", &a.steps),
                json_flag("walker.controller", &a.controller),
                flag("numerics.seed", &a.seed),
                json_flag("walker.funnel_file", &path),
            ];
            Ok((Some(K::Walker), a.common.clone(), extra.into_iter().flatten().collect()))
        }
        Cmd::Systems => unreachable!("handled before dispatch"),
    }
}

fn run(cli: &Cli) -> Result<i32> {
    if let Cmd::Systems = cli.command {
        for entry in commands::list_systems().as_array().into_iter().flatten() {
            println!(
                "{:<28} {}",
                entry["name"].as_str().unwrap_or_default(),
                entry["summary"].as_str().unwrap_or_default()
            );
        }
        return Ok(0);
    }
    let (kind, common, extra) = dispatch(&cli.command)?;
    let (kind, cfg) = load(kind, &common, extra)?;
    let dir = common.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    let mut out = Output::new(&dir)?;
    info!("running {} into {}", kind.name(), out.dir().display());
    let outcome = commands::execute(kind, &cfg, &mut out)?;
    let code = outcome.exit_code();
    let status = if code == 0 { "pass" } else { "fail" };
    let mut files = out.files().to_vec();
    files.push("summary.json".into());
    let summary = Summary {
        command: kind.name(),
        anchor: kind.anchor(),
        status,
        exit_code: code,
        summary: &outcome.summary,
        assertions: &outcome.checks,
        files: &files,
        details: &outcome.details,
    };
    out.write("summary.json", serde_json::to_string_pretty(&summary)?.as_bytes())?;
    for c in outcome.checks.iter().filter(|c| !c.passed) {
        error!("assertion {} failed: {}", c.name, c.detail);
    }
    println!("{} [{status}] {}", kind.name(), outcome.summary);
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet {
        "error"
    } else if cli.verbose {
        "debug"
    } else {
        "info"
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
