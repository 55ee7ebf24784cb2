//! `omnikit`: generalized Omnibus embeddings from the command line.
//!
//! Exit codes: 0 success, 1 a validation or acceptance check failed, 2 usage
//! or I/O error.

mod args;
mod commands;
mod manifest;
mod pipeline;
mod repro;

use std::fs;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use args::{Cli, Command, CorrCommand, OmniCommand};
use manifest::{Ctx, Failed};

/// Runs one non-pipeline command, recording files and seeds in `ctx`.
pub(crate) fn execute(cmd: &Command, seed: u64, ctx: &mut Ctx) -> Result<()> {
    match cmd {
        Command::Sample(a) => commands::sample(a, seed, ctx),
        Command::Omni(OmniCommand::Build(a)) => commands::omni_build(a, ctx),
        Command::Omni(OmniCommand::Validate(a)) => commands::omni_validate(a, ctx),
        Command::Omni(OmniCommand::Special(a)) => commands::omni_special(a, ctx),
        Command::Embed(a) => commands::embed(a, ctx),
        Command::Corr(CorrCommand::Induced(a)) => commands::corr_induced(a, ctx),
        Command::Corr(CorrCommand::Edges(a)) => commands::corr_edges(a, ctx),
        Command::Corr(CorrCommand::Alignment(a)) => commands::corr_alignment(a, ctx),
        Command::Corr(CorrCommand::Blocks(a)) => commands::corr_blocks(a, ctx),
        Command::Bounds(a) => commands::bounds(a, seed, ctx),
        Command::Corr2omni(a) => commands::corr2omni(a, seed, ctx),
        Command::Analyze(a) => commands::analyze(a, ctx),
        Command::Repro(a) => repro::run(a, seed, ctx),
        Command::Pipeline(_) => unreachable!("pipelines are dispatched by main"),
    }
}

fn run(cli: &Cli) -> Result<()> {
    if let Command::Pipeline(a) = &cli.command {
        return pipeline::run(a, cli.seed);
    }
    let mut ctx = Ctx::default();
    ctx.seed("master", cli.seed);
    let res = execute(&cli.command, cli.seed, &mut ctx);
    let completed = match &res {
        Ok(()) => true,
        Err(e) => e.downcast_ref::<Failed>().is_some(),
    };
    let at = cli.manifest.clone().or_else(|| ctx.manifest_path().map(|p| p.to_path_buf()));
    if let (true, Some(path)) = (completed, at) {
        let m = ctx.into_manifest(cli.command.name(), serde_json::to_value(&cli.command)?);
        let mut json = serde_json::to_string_pretty(&m)?;
        json.push('\n');
        fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
    }
    res
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("OMNIKIT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("OMNIKIT_THREADS must be a positive integer, got '{v}'"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let res = init_threads().and_then(|()| run(&cli));
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Failed>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
