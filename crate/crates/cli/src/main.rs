use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use clap::{Parser, Subcommand};

use hslab_cli::config::{BudgetLevel, FileConfig, FlagOverrides, Format, RunConfig};
use hslab_cli::report::Collector;
use hslab_cli::suites::{cutoff_profile, hartogs_profile, run_suite, BmoPart, Selection};

/// Numerical checks for subharmonic and pluriharmonic function estimates.
#[derive(Parser, Debug)]
#[command(name = "hslab", version)]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML file with run settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true, value_enum)]
    budget: Option<BudgetLevel>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Neumann eigenvalues of the ball and Bessel-zero inequalities.
    Eigen,
    /// BMO bounds, doubling, reverse Hölder and Riesz decomposition.
    Bmo {
        #[arg(value_enum)]
        part: Option<BmoPart>,
    },
    /// Hardy, Poincaré, Caccioppoli and Carleman inequalities.
    Ineq {
        /// Keep only reports of this inequality.
        #[arg(long)]
        name: Option<String>,
        /// Override the corpus size.
        #[arg(long)]
        corpus: Option<usize>,
    },
    /// Extension of holomorphic and pluriharmonic data from a shell.
    Hartogs {
        #[arg(long)]
        case: Option<String>,
        /// Also write a CSV of radius, |F - truth| and |u| for `--case`.
        #[arg(long, requires = "case")]
        profile: Option<PathBuf>,
    },
    /// Capacity, cutoff functions and the divergence criterion.
    Liouville {
        #[command(subcommand)]
        action: Option<LiouvilleAction>,
    },
    /// Every suite in turn.
    All,
}

#[derive(Subcommand, Debug)]
enum LiouvilleAction {
    /// Classify one named family.
    Classify {
        #[arg(long)]
        family: String,
    },
    /// Sample a cutoff function on R^n as CSV `t,chi,chi_prime`.
    Cutoff {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        big_r: f64,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
}

/// Errors that are the caller's fault exit with 2.
struct UsageError(anyhow::Error);

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(UsageError(e))) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

enum Failure {
    Usage(UsageError),
    Run(anyhow::Error),
}

fn usage(e: anyhow::Error) -> Failure {
    Failure::Usage(UsageError(e))
}

fn open_out(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p).map_err(usage)?,
        None => FileConfig::default(),
    };
    let flags = FlagOverrides { seed: cli.seed, output_path: cli.out.clone(), format: cli.format, budget: cli.budget };
    let mut sel = Selection::default();
    let mut corpus = None;
    let mut profile = None;
    let suite = match cli.command {
        None => None,
        Some(Command::Eigen) => Some("eigen"),
        Some(Command::Bmo { part }) => {
            sel.bmo_part = part;
            Some("bmo")
        }
        Some(Command::Ineq { name, corpus: c }) => {
            sel.ineq_name = name;
            corpus = c;
            Some("ineq")
        }
        Some(Command::Hartogs { case, profile: p }) => {
            sel.hartogs_case = case;
            profile = p;
            Some("hartogs")
        }
        Some(Command::Liouville { action: Some(LiouvilleAction::Cutoff { r, big_r, eps, dim, points }) }) => {
            let rows = cutoff_profile(dim, r, big_r, eps, points).map_err(usage)?;
            let cfg = RunConfig::resolve(Some("liouville"), &file, &flags).map_err(usage)?;
            let write = || -> anyhow::Result<()> {
                let mut w = csv::Writer::from_writer(open_out(cfg.output_path.as_deref())?);
                w.write_record(["t", "chi", "chi_prime"])?;
                for (t, c, d) in rows {
                    w.serialize((t, c, d))?;
                }
                w.flush()?;
                Ok(())
            };
            write().map_err(Failure::Run)?;
            return Ok(true);
        }
        Some(Command::Liouville { action }) => {
            if let Some(LiouvilleAction::Classify { family }) = action {
                sel.liouville_family = Some(family);
            }
            Some("liouville")
        }
        Some(Command::All) => Some("all"),
    };
    let mut cfg = RunConfig::resolve(suite, &file, &flags).map_err(usage)?;
    if let Some(n) = corpus {
        if n == 0 {
            return Err(usage(anyhow::anyhow!("--corpus must be positive")));
        }
        cfg.budgets.ineq_corpus = n;
    }
    check_selection(&sel).map_err(usage)?;

    let started_at = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let t = Instant::now();
    let mut c = Collector::new();
    run_suite(&cfg, &sel, &mut c).map_err(Failure::Run)?;
    let report = c.finish(&cfg, started_at, t.elapsed().as_secs_f64());

    let write = || -> anyhow::Result<()> {
        let w = open_out(cfg.output_path.as_deref())?;
        match cfg.format {
            Format::Json => report.write_json(w)?,
            Format::Csv => report.write_csv(w, cfg.seed)?,
        }
        if let (Some(path), Some(case)) = (&profile, &sel.hartogs_case) {
            let rows = hartogs_profile(case, &cfg.budgets, cfg.seed, 41)?;
            let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
            w.write_record(["radius", "truth_error", "u"])?;
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Ok(())
    };
    write().map_err(Failure::Run)?;
    let s = &report.summary;
    eprintln!(
        "{}: {} records, {} holds, {} violated, {} inconclusive, {} errors in {:.1}s",
        cfg.suite, s.total, s.holds, s.violated, s.inconclusive, s.errors, report.meta.total_seconds
    );
    Ok(s.success())
}

/// Rejects unknown names before any work starts.
fn check_selection(sel: &Selection) -> anyhow::Result<()> {
    if let Some(c) = &sel.hartogs_case {
        anyhow::ensure!(hslab::hartogs::CASES.contains(&c.as_str()), "unknown case {c:?}; expected one of {:?}", hslab::hartogs::CASES);
    }
    if let Some(f) = &sel.liouville_family {
        anyhow::ensure!(
            hslab::liouville::FAMILIES.contains(&f.as_str()),
            "unknown family {f:?}; expected one of {:?}",
            hslab::liouville::FAMILIES
        );
    }
    if let Some(n) = &sel.ineq_name {
        const NAMES: [&str; 6] = ["hardy", "prop14", "poincare-subharmonic", "laplace-3pi", "caccioppoli", "carleman"];
        anyhow::ensure!(NAMES.contains(&n.as_str()), "unknown inequality {n:?}; expected one of {NAMES:?}");
    }
    Ok(())
}
