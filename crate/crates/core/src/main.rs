use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mrmp::bench::report::write_tables;
use mrmp::bench::runner::read_results;
use mrmp::bench::tune::write_log;
use mrmp::bench::{
    gen_suite_with, render, run_solver, run_suite, summarize, tune, verify, DensityProfile,
    Metrics, RoadmapsDoc, ScenarioConfig, SolutionDoc, SolverKind, SolverParams, SuiteConfig,
    TuneSpec,
};
use mrmp::error::{BenchError, SolveError};
use mrmp::instance::Instance;
use mrmp::robots::Scenario;

/// Multi-robot motion planning toolkit.
#[derive(Parser)]
#[command(name = "mrmp", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate random instances into a directory.
    Gen {
        #[arg(long)]
        scenario: Scenario,
        /// Fixed robot count; otherwise drawn from --n-min..=--n-max.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 2)]
        n_min: usize,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "standard")]
        profile: Profile,
        /// Scenario config JSON overriding the built-in density defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one instance and print (or write) the solution JSON.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "sssp")]
        solver: SolverKind,
        #[arg(long, default_value_t = 300.0)]
        time_limit: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Solver parameter JSON.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the final SSSP roadmaps here.
        #[arg(long)]
        roadmaps_out: Option<PathBuf>,
        /// Skip smoothing-based travel-time metrics.
        #[arg(long)]
        no_metrics: bool,
    },
    /// Run solvers over a directory of instances.
    Bench {
        #[arg(long)]
        instances: PathBuf,
        /// Comma-separated solver names.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "sssp,prm,rrt,rrtc,pp,cbs"
        )]
        solvers: Vec<SolverKind>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value_t = 300.0)]
        time_limit: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        params: Option<PathBuf>,
        /// JSON-lines results, appended to.
        #[arg(long)]
        out: PathBuf,
        /// Also write summary tables here.
        #[arg(long)]
        tables: Option<PathBuf>,
    },
    /// Random-search hyperparameter tuning.
    Tune {
        #[arg(long)]
        solver: SolverKind,
        #[arg(long)]
        scenario: Scenario,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, default_value_t = 30.0)]
        time_limit: f64,
        #[arg(long, default_value_t = 2)]
        n_min: usize,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a solution against its instance.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Draw an instance, optionally with a solution and roadmaps, as SVG.
    Render {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long)]
        roadmaps: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize a results file into CSV tables.
    Report {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Profile {
    Standard,
    Scalability,
}

impl From<Profile> for DensityProfile {
    fn from(p: Profile) -> Self {
        match p {
            Profile::Standard => DensityProfile::Standard,
            Profile::Scalability => DensityProfile::Scalability,
        }
    }
}

/// `MRMP_SEED`, when set, takes precedence over any seed flag.
fn seed(flag: u64) -> Result<u64, BenchError> {
    match std::env::var("MRMP_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| BenchError::Invalid(format!("MRMP_SEED `{v}` is not an integer"))),
        Err(_) => Ok(flag),
    }
}

fn read(path: &Path) -> Result<String, BenchError> {
    std::fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), BenchError> {
    std::fs::write(path, text).map_err(|source| BenchError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn load_params(path: Option<&Path>) -> Result<SolverParams, BenchError> {
    match path {
        Some(p) => Ok(serde_json::from_str(&read(p)?)?),
        None => Ok(SolverParams::default()),
    }
}

/// Every `*.json` instance in `dir`, by file name.
fn load_instances(dir: &Path) -> Result<Vec<Instance>, BenchError> {
    let io = |source| BenchError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io)?;
    files.retain(|p| p.extension().is_some_and(|e| e == "json"));
    files.sort();
    files
        .iter()
        .map(|p| Instance::from_json(&read(p)?))
        .collect()
}

fn run(cmd: Cmd) -> Result<ExitCode, BenchError> {
    match cmd {
        Cmd::Gen {
            scenario,
            n,
            n_min,
            n_max,
            count,
            seed: s,
            profile,
            config,
            out,
        } => {
            let cfg = match config {
                Some(p) => serde_json::from_str(&read(&p)?)?,
                None => ScenarioConfig::defaults(scenario, profile.into()),
            };
            let range = n.map_or((n_min, n_max), |n| (n, n));
            let instances = gen_suite_with(scenario, range, count, seed(s)?, &cfg)?;
            std::fs::create_dir_all(&out).map_err(|source| BenchError::Io {
                path: out.display().to_string(),
                source,
            })?;
            for inst in &instances {
                let p = out.join(format!("{}.json", inst.id));
                write(&p, &inst.to_json())?;
                println!("{}", p.display());
            }
        }
        Cmd::Solve {
            instance,
            solver,
            time_limit,
            seed: s,
            params,
            out,
            roadmaps_out,
            no_metrics,
        } => {
            let inst = Instance::from_json(&read(&instance)?)?;
            let s = seed(s)?;
            let params = load_params(params.as_deref())?.with_run(time_limit, s);
            match run_solver(solver, &inst, &params) {
                Ok(res) => {
                    let metrics = (!no_metrics).then(|| {
                        Metrics::compute(&res.solution, &inst.models(), &inst.obstacles, s)
                    });
                    let doc = SolutionDoc::new(&inst.id, solver, &res.solution, metrics);
                    match out {
                        Some(p) => write(&p, &format!("{}\n", doc.to_json()))?,
                        None => println!("{}", doc.to_json()),
                    }
                    if let Some(p) = roadmaps_out {
                        match res.roadmaps {
                            Some(rms) => write(&p, &RoadmapsDoc::new(&inst.id, &rms).to_json())?,
                            None => {
                                eprintln!("{solver} keeps no roadmaps; {} not written", p.display())
                            }
                        }
                    }
                }
                Err(SolveError::InitFailure { robot }) => {
                    eprintln!("INIT_FAILURE (robot {robot})");
                    return Ok(ExitCode::from(2));
                }
                Err(SolveError::Timeout | SolveError::Exhausted) => {
                    eprintln!("TIMEOUT");
                    return Ok(ExitCode::from(2));
                }
                Err(e) => return Err(e.into()),
            }
        }
        Cmd::Bench {
            instances,
            solvers,
            workers,
            time_limit,
            seed: s,
            params,
            out,
            tables,
        } => {
            let insts = load_instances(&instances)?;
            let cfg = SuiteConfig {
                time_limit,
                workers,
                seed: seed(s)?,
                params: load_params(params.as_deref())?,
                metrics: true,
            };
            let results = run_suite(&insts, &solvers, &cfg, Some(&out))?;
            let summary = summarize(&results);
            for row in &summary.solved {
                println!(
                    "{:<5} solved {}/{} (invalid {}, crashed {})",
                    row.solver, row.solved, row.runs, row.invalid, row.crashed
                );
            }
            if let Some(dir) = tables {
                write_tables(&summary, &dir)?;
            }
            if summary.solved.iter().any(|r| r.invalid > 0) {
                eprintln!("some solutions failed verification");
                return Ok(ExitCode::FAILURE);
            }
        }
        Cmd::Tune {
            solver,
            scenario,
            trials,
            instances,
            time_limit,
            n_min,
            n_max,
            workers,
            seed: s,
            out,
        } => {
            let spec = TuneSpec {
                trials,
                instances,
                time_limit,
                n_range: (n_min, n_max),
                workers,
                ..TuneSpec::new(solver, scenario)
            };
            let log = tune(&spec, seed(s)?, |t| {
                eprintln!(
                    "trial {:>3}: solved {:>3}, mean {:.2}s",
                    t.index, t.solved, t.mean_runtime
                );
            })?;
            write_log(&log, &out)?;
            if let Some(b) = log.best {
                println!(
                    "best trial {b}: {}",
                    serde_json::to_string(&log.trials[b].params)?
                );
            }
        }
        Cmd::Verify { instance, solution } => {
            let inst = Instance::from_json(&read(&instance)?)?;
            let sol = SolutionDoc::from_json(&read(&solution)?)?.solution();
            let violations = verify(&inst, &sol);
            if violations.is_empty() {
                println!("OK");
            } else {
                for v in &violations {
                    println!("{v}");
                }
                return Ok(ExitCode::FAILURE);
            }
        }
        Cmd::Render {
            instance,
            solution,
            roadmaps,
            out,
        } => {
            let inst = Instance::from_json(&read(&instance)?)?;
            let sol = solution
                .map(|p| read(&p).and_then(|t| SolutionDoc::from_json(&t)))
                .transpose()?;
            let rms = roadmaps
                .map(|p| read(&p).and_then(|t| RoadmapsDoc::from_json(&t)))
                .transpose()?;
            let svg = render(
                &inst,
                sol.map(|d| d.solution()).as_ref(),
                rms.as_ref().map(|d| d.roadmaps.as_slice()),
            );
            write(&out, &svg)?;
        }
        Cmd::Report { results, out } => {
            let summary = summarize(&read_results(&results)?);
            write_tables(&summary, &out)?;
            print!("{}", mrmp::bench::report::solved_csv(&summary));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse().cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
