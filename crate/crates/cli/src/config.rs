//! Run configuration: defaults, an optional TOML file and command-line flags,
//! merged with precedence flags > file > defaults.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

pub const SUITES: [&str; 6] = ["eigen", "bmo", "ineq", "hartogs", "liouville", "all"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BudgetLevel {
    Low,
    Default,
    High,
}

impl fmt::Display for BudgetLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BudgetLevel::Low => "low",
            BudgetLevel::Default => "default",
            BudgetLevel::High => "high",
        })
    }
}

/// Sample counts and tolerances of every suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Budgets {
    /// Balls sampled for each BMO lower bound.
    pub bmo_balls: usize,
    pub bmo_samples_per_ball: usize,
    /// Balls per (dimension, model, γ) doubling sweep.
    pub doubling_balls: usize,
    /// Entries of the seeded inequality corpus.
    pub ineq_corpus: usize,
    /// Test functions per Carleman exponent.
    pub carleman_functions: usize,
    /// Relative tolerance of the deterministic quadrature in the corpus suites.
    pub rel_tol: f64,
    /// Multiplier on the default Hartogs quadrature budget.
    pub hartogs_scale: f64,
    /// Seeded cutoff configurations.
    pub cutoff_configs: usize,
    /// Largest radius of the divergence classifier.
    pub t_max: f64,
}

impl Budgets {
    pub fn for_level(level: BudgetLevel) -> Self {
        let base = Self {
            bmo_balls: 10_000,
            bmo_samples_per_ball: 2048,
            doubling_balls: 100,
            ineq_corpus: 100,
            carleman_functions: 8,
            rel_tol: 1e-8,
            hartogs_scale: 1.0,
            cutoff_configs: 50,
            t_max: 1e12,
        };
        match level {
            BudgetLevel::Default => base,
            BudgetLevel::Low => Self {
                bmo_balls: 500,
                bmo_samples_per_ball: 512,
                doubling_balls: 10,
                ineq_corpus: 10,
                carleman_functions: 2,
                rel_tol: 1e-7,
                hartogs_scale: 0.25,
                cutoff_configs: 10,
                ..base
            },
            BudgetLevel::High => Self {
                bmo_balls: 40_000,
                bmo_samples_per_ball: 4096,
                doubling_balls: 300,
                ineq_corpus: 300,
                carleman_functions: 16,
                rel_tol: 1e-9,
                hartogs_scale: 4.0,
                cutoff_configs: 200,
                ..base
            },
        }
    }

    fn apply(&mut self, o: &BudgetOverrides) {
        macro_rules! take {
            ($($f:ident),*) => {$(if let Some(v) = o.$f { self.$f = v; })*};
        }
        take!(bmo_balls, bmo_samples_per_ball, doubling_balls, ineq_corpus, carleman_functions, rel_tol, hartogs_scale, cutoff_configs, t_max);
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let counts = [
            ("bmo_balls", self.bmo_balls),
            ("bmo_samples_per_ball", self.bmo_samples_per_ball),
            ("doubling_balls", self.doubling_balls),
            ("ineq_corpus", self.ineq_corpus),
            ("carleman_functions", self.carleman_functions),
            ("cutoff_configs", self.cutoff_configs),
        ];
        for (k, v) in counts {
            if v == 0 {
                bail!("budgets.{k} must be positive");
            }
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            bail!("budgets.rel_tol must lie in (0, 1), got {}", self.rel_tol);
        }
        if !(self.hartogs_scale > 0.0 && self.hartogs_scale.is_finite()) {
            bail!("budgets.hartogs_scale must be positive, got {}", self.hartogs_scale);
        }
        if !(self.t_max >= 1e4 && self.t_max <= 1e30) {
            bail!("budgets.t_max must lie in [1e4, 1e30], got {}", self.t_max);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetOverrides {
    pub bmo_balls: Option<usize>,
    pub bmo_samples_per_ball: Option<usize>,
    pub doubling_balls: Option<usize>,
    pub ineq_corpus: Option<usize>,
    pub carleman_functions: Option<usize>,
    pub rel_tol: Option<f64>,
    pub hartogs_scale: Option<f64>,
    pub cutoff_configs: Option<usize>,
    pub t_max: Option<f64>,
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub suite: Option<String>,
    pub seed: Option<u64>,
    pub output_path: Option<PathBuf>,
    pub format: Option<Format>,
    pub budget: Option<BudgetLevel>,
    pub budgets: Option<BudgetOverrides>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }
}

impl FromStr for FileConfig {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(s)?)
    }
}

/// Values given on the command line.
#[derive(Debug, Clone, Default)]
pub struct FlagOverrides {
    pub seed: Option<u64>,
    pub output_path: Option<PathBuf>,
    pub format: Option<Format>,
    pub budget: Option<BudgetLevel>,
}

pub const DEFAULT_SEED: u64 = 20_240_601;

/// Effective configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub suite: String,
    pub seed: u64,
    pub budget: BudgetLevel,
    pub budgets: Budgets,
    /// `None` writes to standard output.
    pub output_path: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    /// Merges `suite` (from the subcommand, if any), the file and the flags.
    pub fn resolve(suite: Option<&str>, file: &FileConfig, flags: &FlagOverrides) -> anyhow::Result<Self> {
        let suite = match suite.map(str::to_string).or_else(|| file.suite.clone()) {
            Some(s) => s,
            None => bail!("no suite given; expected a subcommand or `suite` in the config, one of {SUITES:?}"),
        };
        if !SUITES.contains(&suite.as_str()) {
            bail!("unknown suite {suite:?}; expected one of {SUITES:?}");
        }
        let budget = flags.budget.or(file.budget).unwrap_or(BudgetLevel::Default);
        let mut budgets = Budgets::for_level(budget);
        if let Some(o) = &file.budgets {
            budgets.apply(o);
        }
        budgets.validate()?;
        Ok(Self {
            suite,
            seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            budget,
            budgets,
            output_path: flags.output_path.clone().or_else(|| file.output_path.clone()),
            format: flags.format.or(file.format).unwrap_or(Format::Json),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_named() {
        let err = FileConfig::from_str("seed = 3\nsamples = 4\n").unwrap_err();
        assert!(format!("{err:#}").contains("samples"), "{err:#}");
        let err = FileConfig::from_str("[budgets]\nbmo_ball = 4\n").unwrap_err();
        assert!(format!("{err:#}").contains("bmo_ball"), "{err:#}");
    }

    #[test]
    fn precedence_flags_file_defaults() {
        let file = FileConfig::from_str("suite = \"eigen\"\nseed = 5\nformat = \"csv\"\n[budgets]\nineq_corpus = 7\n").unwrap();
        let flags = FlagOverrides { seed: Some(9), ..FlagOverrides::default() };
        let c = RunConfig::resolve(None, &file, &flags).unwrap();
        assert_eq!((c.suite.as_str(), c.seed, c.format), ("eigen", 9, Format::Csv));
        assert_eq!(c.budgets.ineq_corpus, 7);
        assert_eq!(c.budgets.bmo_balls, 10_000);
        let c = RunConfig::resolve(Some("bmo"), &FileConfig::default(), &FlagOverrides::default()).unwrap();
        assert_eq!((c.seed, c.budget, c.format), (DEFAULT_SEED, BudgetLevel::Default, Format::Json));
    }

    #[test]
    fn bad_suite_and_budget_rejected() {
        let file = FileConfig::from_str("suite = \"nope\"").unwrap();
        assert!(RunConfig::resolve(None, &file, &FlagOverrides::default()).is_err());
        assert!(RunConfig::resolve(None, &FileConfig::default(), &FlagOverrides::default()).is_err());
        let file = FileConfig::from_str("[budgets]\nrel_tol = 0.0").unwrap();
        assert!(RunConfig::resolve(Some("eigen"), &file, &FlagOverrides::default()).is_err());
    }
}
