//! Driver for the `subfrac` binary: argument parsing, configuration layers,
//! the result cache, reports and replay.

pub mod cache;
pub mod cli;
pub mod commands;
pub mod config;
pub mod dsl;
pub mod error;
pub mod report;
pub mod verify;

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use crate::cache::Cache;
use crate::cli::{Cli, Command, FormatArg, Global};
use crate::commands::{execute, params, Ctx};
use crate::config::{parse_file, Format, Layers, RunConfig};
use crate::error::{CliError, CliResult};
use crate::report::{read_report, Emitter, RunHeader};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Runs the command line `argv` (program name first) and returns the exit
/// code: 0 on success, 1 on usage or evaluation errors, 2 when a
/// verification check or a replay comparison fails.
pub fn run<I>(argv: &[String], env: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = (String, String)>,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    1
                }
            };
            return code;
        }
    };
    match dispatch(&cli, argv, env, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn flag_layer(g: &Global) -> CliResult<BTreeMap<String, String>> {
    let mut m = BTreeMap::new();
    let mut put = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            m.insert(k.to_string(), v);
        }
    };
    put("n", g.n.map(|v| v.to_string()));
    put("paths", g.paths.map(|v| v.to_string()));
    put("steps", g.steps.map(|v| v.to_string()));
    put("seed", g.seed.map(|v| v.to_string()));
    put("cache_dir", g.cache_dir.as_ref().map(|p| p.display().to_string()));
    put(
        "format",
        g.format.map(|f| match f {
            FormatArg::Json => "json".to_string(),
            FormatArg::Csv => "csv".to_string(),
        }),
    );
    for kv in &g.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        m.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(m)
}

fn resolve(g: &Global, env: impl IntoIterator<Item = (String, String)>) -> CliResult<RunConfig> {
    let file = match &g.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            Some((path.clone(), parse_file(&text, path)?))
        }
        None => None,
    };
    let layers = Layers {
        file,
        env: Layers::env_from(env),
        flags: flag_layer(g)?,
    };
    layers.resolve(RunConfig::default())
}

fn dispatch(
    cli: &Cli,
    argv: &[String],
    env: impl IntoIterator<Item = (String, String)>,
    out: &mut dyn Write,
) -> CliResult<i32> {
    if let Command::Replay { report } = &cli.command {
        let text = fs::read_to_string(report)?;
        return replay(&text, out);
    }
    let cfg = resolve(&cli.global, env)?;
    let cache = match (&cfg.cache_dir, cli.global.no_cache) {
        (Some(dir), false) => Some(Cache::open(dir)?),
        _ => None,
    };
    let format = if matches!(cli.command, Command::Table { .. }) {
        Format::Csv
    } else {
        cfg.format
    };
    let mut file = match &cli.global.out {
        Some(p) => Some(io::BufWriter::new(fs::File::create(p)?)),
        None => None,
    };
    let mut sinks: Vec<&mut dyn Write> = vec![out];
    if let Some(f) = file.as_mut() {
        sinks.push(f);
    }
    let mut emit = Emitter::new(format, sinks);
    emit.header(&RunHeader {
        version: VERSION.to_string(),
        argv: argv.iter().skip(1).cloned().collect(),
        config: cfg.clone(),
        config_digest: cfg.digest(),
    })?;
    let mut ctx = Ctx::new(cfg, cache, cli.global.force, emit);
    let code = execute(&mut ctx, &cli.command)?;
    ctx.emit.flush()?;
    Ok(code)
}

/// Re-runs a JSON report's command under its embedded configuration with
/// the cache off and compares every record bitwise.
fn replay(text: &str, out: &mut dyn Write) -> CliResult<i32> {
    let (header, old) = read_report(text)?;
    let header = header.ok_or_else(|| CliError::Usage("report has no run header".into()))?;
    let mut argv = vec!["subfrac".to_string()];
    argv.extend(header.argv.iter().cloned());
    let cli = Cli::try_parse_from(&argv).map_err(|e| CliError::Usage(e.to_string()))?;
    if matches!(cli.command, Command::Replay { .. } | Command::Table { .. }) {
        return Err(CliError::Usage("only value and verify reports can be replayed".into()));
    }
    let mut cfg = header.config.clone();
    cfg.cache_dir = None;
    if cfg.digest() != header.config_digest {
        return Err(CliError::Usage("embedded configuration does not match its digest".into()));
    }
    let mut sink = io::sink();
    let fresh = {
        let mut ctx = Ctx::new(cfg.clone(), None, cli.global.force, Emitter::new(Format::Json, vec![&mut sink]));
        execute(&mut ctx, &cli.command)?;
        ctx.records
    };

    let mut emit = Emitter::new(Format::Json, vec![out]);
    emit.header(&RunHeader {
        version: VERSION.to_string(),
        argv: vec!["replay".to_string()],
        config: cfg.clone(),
        config_digest: cfg.digest(),
    })?;
    let ctx = Ctx::new(cfg, None, false, Emitter::new(Format::Json, Vec::new()));
    let mut all = old.len() == fresh.len();
    for (k, (a, b)) in old.iter().zip(&fresh).enumerate() {
        let same = a.op == b.op
            && a.params == b.params
            && a.value.to_bits() == b.value.to_bits()
            && a.error.to_bits() == b.error.to_bits();
        all &= same;
        let p = params([("index", json!(k)), ("op", json!(a.op))]);
        let mut r = ctx.record("replay", p, b.value, b.error, "bitwise");
        r.target = Some(a.value);
        r.tol = Some(0.0);
        r.pass = Some(same);
        emit.record(&r)?;
    }
    if old.len() != fresh.len() {
        let p = params([("reported", json!(old.len())), ("replayed", json!(fresh.len()))]);
        let mut r = ctx.record("replay.count", p, fresh.len() as f64, 0.0, "count");
        r.target = Some(old.len() as f64);
        r.pass = Some(false);
        emit.record(&r)?;
    }
    emit.flush()?;
    Ok(if all { 0 } else { 2 })
}
