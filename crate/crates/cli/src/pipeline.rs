//! Config-driven sequences of commands.
//!
//! A config lists stages; each stage names a command in `run` (for example
//! `"corr2omni"` or `"omni build"`) and gives its options as keys, spelled
//! like the long flags with `_` or `-`. Stages run in order inside the
//! artifact directory, so relative paths resolve there and stages can read
//! each other's outputs. The string `{config_dir}` expands to the directory
//! holding the config.
//!
//! ```toml
//! out_dir = "artifacts"
//! seed = 7
//!
//! [[stages]]
//! run = "corr2omni"
//! R = "identity:3"
//! target = "flat:3:0.6666666666666666"
//! out_alpha = "A.csv"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Parser;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::args::{Cli, Command, PipelineArgs};
use crate::manifest::{Ctx, FileHash, RunManifest, VERSION};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Config {
    #[serde(default = "default_out_dir")]
    out_dir: PathBuf,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    stages: Vec<Map<String, Value>>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("artifacts")
}

#[derive(Debug, Serialize)]
struct StageRecord {
    index: usize,
    name: String,
    argv: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    manifest: Option<RunManifest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct PipelineManifest {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: FileHash,
    seed: u64,
    stages: Vec<StageRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn parse_config(path: &Path, text: &str) -> Result<Config> {
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        return serde_json::from_str(text).with_context(|| format!("parsing {}", path.display()));
    }
    let value: toml::Value = toml::from_str(text).with_context(|| format!("parsing {}", path.display()))?;
    serde_json::from_value(serde_json::to_value(value)?).with_context(|| format!("reading {}", path.display()))
}

fn scalar(v: &Value, config_dir: &str) -> Option<String> {
    match v {
        Value::String(s) => Some(s.replace("{config_dir}", config_dir)),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

/// `{run = "omni build", out = "x.csv", binarize = true}` →
/// `["omnikit", "omni", "build", "--out", "x.csv", "--binarize"]`.
fn stage_argv(stage: &Map<String, Value>, seed: u64, config_dir: &str) -> Result<(String, Vec<String>)> {
    let run = stage
        .get("run")
        .and_then(Value::as_str)
        .ok_or_else(|| anyhow!("missing 'run' (the command to execute)"))?;
    let mut argv = vec!["omnikit".to_string()];
    argv.extend(run.split_whitespace().map(str::to_string));
    let name = stage.get("name").and_then(Value::as_str).unwrap_or(run).to_string();
    for (key, v) in stage {
        if key == "run" || key == "name" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            Value::Bool(true) => argv.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let parts: Option<Vec<String>> = items.iter().map(|i| scalar(i, config_dir)).collect();
                let parts = parts.ok_or_else(|| anyhow!("'{key}' must be a list of numbers or strings"))?;
                argv.push(flag);
                argv.push(parts.join(","));
            }
            other => {
                let s = scalar(other, config_dir).ok_or_else(|| anyhow!("'{key}' has an unsupported value"))?;
                argv.push(flag);
                argv.push(s);
            }
        }
    }
    if !stage.contains_key("seed") {
        argv.push("--seed".into());
        argv.push(seed.to_string());
    }
    Ok((name, argv))
}

fn run_stage(argv: &[String]) -> Result<(Command, Ctx)> {
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        let msg = e.render().to_string();
        anyhow!("{}", msg.trim_start_matches("error: ").trim_end())
    })?;
    if matches!(cli.command, Command::Pipeline(_)) {
        bail!("pipelines cannot be nested");
    }
    let mut ctx = Ctx::default();
    ctx.seed("master", cli.seed);
    crate::execute(&cli.command, cli.seed, &mut ctx).map(|()| (cli.command, ctx))
}

pub fn run(a: &PipelineArgs, cli_seed: u64) -> Result<()> {
    let text = fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let cfg = parse_config(&a.config, &text)?;
    let config_dir = fs::canonicalize(&a.config)?
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let out_dir = config_dir.join(&cfg.out_dir);
    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let config_hash = {
        let mut ctx = Ctx::default();
        ctx.input(&a.config)?;
        ctx.into_manifest("", Value::Null).inputs.remove(0)
    };
    // stages resolve relative paths against the artifact directory
    std::env::set_current_dir(&out_dir).with_context(|| format!("entering {}", out_dir.display()))?;
    let seed = cfg.seed.unwrap_or(cli_seed);
    let config_dir = config_dir.to_string_lossy().into_owned();

    let mut records = Vec::new();
    let mut failure = None;
    for (i, stage) in cfg.stages.iter().enumerate() {
        let index = i + 1;
        let (name, argv) = match stage_argv(stage, seed, &config_dir) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e.context(format!("stage {index}")));
                break;
            }
        };
        log::info!("stage {index} ({name}): {}", argv[1..].join(" "));
        let mut record = StageRecord {
            index,
            name: name.clone(),
            argv: argv[1..].to_vec(),
            manifest: None,
            error: None,
        };
        match run_stage(&argv) {
            Ok((cmd, ctx)) => {
                record.manifest = Some(ctx.into_manifest(cmd.name(), serde_json::to_value(&cmd)?));
                records.push(record);
            }
            Err(e) => {
                let e = e.context(format!("stage {index} ({name})"));
                record.error = Some(format!("{e:#}"));
                records.push(record);
                failure = Some(e);
                break;
            }
        }
    }

    let manifest = PipelineManifest {
        tool: "omnikit",
        version: VERSION,
        command: "pipeline",
        config: config_hash,
        seed,
        stages: records,
        error: failure.as_ref().map(|e| format!("{e:#}")),
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    fs::write("manifest.json", json).context("writing manifest.json")?;
    match failure {
        Some(e) => Err(e),
        None => {
            println!("pipeline finished: {} stage(s), artifacts in {}", cfg.stages.len(), out_dir.display());
            Ok(())
        }
    }
}
