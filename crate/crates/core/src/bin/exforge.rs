use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use exforge::gamify::{leaderboard, LeaderboardRow, Scope};
use exforge::judge::{BaselineCache, ExternalRunner, Outcome, RunnerSet};
use exforge::manifest::{parse_manifest, validate_manifest, ExerciseManifest, FILE_SUFFIX};
use exforge::service::{self, Registry, Service, ServiceConfig, SubmissionRequest, ADMIN_TOKEN_ENV};
use exforge::stats::{compute_stats, read_log, score_records, EventLog};
use exforge::toylang::{run_source, Limits, RunStatus};
use exforge::{judge_submission, present};

#[derive(Parser)]
#[command(name = "exforge", version, about = "Author, judge and serve programming exercises")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct RunnerArgs {
    /// External runner as NAME=COMMAND, where COMMAND may contain {source}.
    /// Manifests select it with `"language": "external:NAME"`.
    #[arg(long = "external", value_name = "NAME=COMMAND")]
    external: Vec<String>,
}

impl RunnerArgs {
    fn runners(&self) -> Result<RunnerSet> {
        let mut set = RunnerSet::new();
        for spec in &self.external {
            let Some((name, command)) = spec.split_once('=') else {
                bail!("--external expects NAME=COMMAND, got '{spec}'");
            };
            set = set.with_external(name, ExternalRunner::from_template(command));
        }
        Ok(set)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check manifests (files or directories of *.exercise.json).
    Validate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[command(flatten)]
        runners: RunnerArgs,
    },
    /// Print the student bundle of an exercise.
    Present {
        manifest: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Judge a submission file and print the verdict.
    Judge {
        manifest: PathBuf,
        submission: PathBuf,
        #[command(flatten)]
        runners: RunnerArgs,
    },
    /// Run a toy program, then print its metrics.
    Run {
        file: PathBuf,
        /// File whose contents are the program's input.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = Limits::default().max_steps)]
        max_steps: u64,
        #[arg(long, default_value_t = Limits::default().max_cells)]
        max_cells: u64,
    },
    /// Rank students from an event log.
    Leaderboard {
        log: PathBuf,
        #[arg(long)]
        exercise: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Statistics of one exercise from an event log.
    Stats {
        log: PathBuf,
        #[arg(long)]
        exercise: String,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        exercises: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[command(flatten)]
        runners: RunnerArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_manifest(path: &Path) -> Result<ExerciseManifest> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_manifest(&text).with_context(|| format!("{}", path.display()))
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Validate { paths, runners } => validate(&paths, &runners.runners()?),
        Command::Present { manifest, seed } => {
            print_json(&present(&load_manifest(&manifest)?, seed));
            Ok(ExitCode::SUCCESS)
        }
        Command::Judge { manifest, submission, runners } => {
            let m = load_manifest(&manifest)?;
            let text =
                std::fs::read_to_string(&submission).with_context(|| format!("reading {}", submission.display()))?;
            let req: SubmissionRequest =
                serde_json::from_str(&text).with_context(|| format!("{}", submission.display()))?;
            let runners = runners.runners()?;
            let runner = runners.for_metadata(&m.metadata)?;
            let verdict = judge_submission(&m, &req.payload, runner, &BaselineCache::new());
            print_json(&verdict);
            Ok(match verdict.outcome {
                Outcome::Accepted => ExitCode::SUCCESS,
                Outcome::PayloadError => ExitCode::from(2),
                _ => ExitCode::from(1),
            })
        }
        Command::Run { file, input, max_steps, max_cells } => {
            let source = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let input = match input {
                Some(p) => std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?,
                None => String::new(),
            };
            let result = match run_source(&source, &input, &Limits { max_steps, max_cells }) {
                Ok(r) => r,
                Err(d) => {
                    eprintln!("{d}");
                    return Ok(ExitCode::from(1));
                }
            };
            print!("{}", result.output);
            println!("steps={} peak_cells={}", result.metrics.steps, result.metrics.peak_cells);
            Ok(match result.status {
                RunStatus::Ok => ExitCode::SUCCESS,
                RunStatus::RuntimeError(d) => {
                    eprintln!("runtime error: {d}");
                    ExitCode::from(1)
                }
                RunStatus::StepLimit => {
                    eprintln!("step limit exceeded");
                    ExitCode::from(1)
                }
                RunStatus::CellLimit => {
                    eprintln!("cell limit exceeded");
                    ExitCode::from(1)
                }
            })
        }
        Command::Leaderboard { log, exercise, json } => {
            let events = read_log(&log)?;
            let scope = exercise.map_or(Scope::Global, Scope::Exercise);
            let rows = leaderboard(&score_records(&events), &scope);
            if json {
                print_json(&rows);
            } else {
                print_table(&rows);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Stats { log, exercise } => {
            print_json(&compute_stats(&read_log(&log)?, &exercise));
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve { port, exercises, log, host, runners } => {
            let runners = runners.runners()?;
            let registry = Registry::load_dir(&exercises, &runners)?;
            let log = EventLog::open(&log)?;
            let config = ServiceConfig {
                runners,
                admin_token: std::env::var(ADMIN_TOKEN_ENV).ok(),
                exercises_dir: Some(exercises),
                clock: service::system_clock(),
            };
            eprintln!("serving {} exercises on http://{host}:{port}", registry.len());
            let svc = Arc::new(Service::new(registry, log, config));
            serve(svc, &host, port)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn validate(paths: &[PathBuf], runners: &RunnerSet) -> Result<ExitCode> {
    let mut files = Vec::new();
    for path in paths {
        if path.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(path)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.to_string_lossy().ends_with(FILE_SUFFIX))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(path.clone());
        }
    }
    let mut failed = false;
    for file in &files {
        let m = load_manifest(file)?;
        let runner = runners.for_metadata(&m.metadata)?;
        let report = validate_manifest(&m, runner);
        if report.is_ok() {
            println!("ok      {}", file.display());
        } else {
            failed = true;
            println!("invalid {}", file.display());
            for v in &report.violations {
                println!("  - {v}");
            }
        }
    }
    Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn print_table(rows: &[LeaderboardRow]) {
    println!("{:>4}  {:<24} {:>7}  accepted_at", "rank", "student", "total");
    for r in rows {
        println!("{:>4}  {:<24} {:>7}  {}", r.rank, r.student, r.total, r.accepted_at);
    }
}

fn serve(svc: Arc<Service>, host: &str, port: u16) -> Result<()> {
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port)).await?;
        axum::serve(listener, service::router(svc))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
