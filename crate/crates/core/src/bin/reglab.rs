use clap::{Parser, Subcommand};
use reglab::scenario::{preset, run_scenario, PresetParams, RunOptions, Scenario, CHECKS, PRESETS};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "reglab", version, about = "Regularity certificates for collections of closed sets")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario file.
    Run {
        file: PathBuf,
        /// Fail unless every check with a verdict holds.
        #[arg(long)]
        assert_holds: bool,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the report; `.json` gives the full payload, anything else the text summary.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write sampled (point, ratio) rows as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print or save a built-in scenario.
    Preset {
        name: String,
        /// Preset parameter as key=value, repeatable.
        #[arg(long = "param", value_parser = parse_kv)]
        params: Vec<(String, f64)>,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// List the available checks and presets.
    ListChecks,
}

fn parse_kv(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got '{s}'"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("bad value for '{k}': {e}"))?;
    Ok((k.trim().to_string(), v))
}

const USAGE: u8 = 2;

fn write(path: &Path, text: &str) -> Result<(), ExitCode> {
    std::fs::write(path, text).map_err(|e| {
        eprintln!("error: cannot write {}: {e}", path.display());
        ExitCode::from(USAGE)
    })
}

fn main() -> ExitCode {
    if let Some(t) = std::env::var("REGLAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        reglab::par::configure_threads(t);
    }
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match cli.cmd {
        Cmd::ListChecks => {
            println!("checks:");
            for (name, _, about) in CHECKS {
                println!("  {name:<22} {about}");
            }
            println!("presets:");
            for (name, _, about) in PRESETS {
                println!("  {name:<22} {about}");
            }
            ExitCode::SUCCESS
        }
        Cmd::Preset { name, params, emit } => {
            let params: PresetParams = params.into_iter().collect();
            let sc = match preset(&name, &params) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(USAGE);
                }
            };
            let text = sc.to_json() + "\n";
            match emit {
                Some(p) => match write(&p, &text) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(c) => c,
                },
                None => {
                    print!("{text}");
                    ExitCode::SUCCESS
                }
            }
        }
        Cmd::Run { file, assert_holds, seed, out, csv } => {
            let text = match std::fs::read_to_string(&file) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", file.display());
                    return ExitCode::from(USAGE);
                }
            };
            let sc = match Scenario::from_json(&text) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {}: {e}", file.display());
                    return ExitCode::from(USAGE);
                }
            };
            let report = match run_scenario(&sc, RunOptions { seed, assert_holds }) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(USAGE);
                }
            };
            print!("{}", report.to_text());
            if let Some(p) = out {
                let body = if p.extension().is_some_and(|e| e == "json") { report.to_json() + "\n" } else { report.to_text() };
                if let Err(c) = write(&p, &body) {
                    return c;
                }
            }
            if let Some(p) = csv {
                if let Err(c) = write(&p, &report.to_csv()) {
                    return c;
                }
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
