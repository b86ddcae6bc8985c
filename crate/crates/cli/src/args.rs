use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use trendopt_core::model::lambdas_from_components;
use trendopt_core::{Variance, VarianceComponents};

use crate::CliError;

/// Largest disagreement allowed between given lambdas and those implied by
/// the given variance components.
pub const LAMBDA_CONSISTENCY_TOL: f64 = 1e-9;

/// Environment variable that overrides the default enumeration budget.
pub const BUDGET_ENV: &str = "TRENDOPT_ORACLE_BUDGET";

#[derive(Debug, Parser)]
#[command(
    name = "trendopt",
    version,
    about = "Maximin optimal block designs for units ordered within blocks"
)]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,

    /// Write the result to this file instead of stdout.
    #[arg(short, long, global = true, value_name = "FILE")]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build and certify the optimal design for (v, k, b).
    Design {
        #[arg(long)]
        v: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        b: usize,
        #[command(flatten)]
        lambdas: LambdaArgs,
    },
    /// Optimal within-block order and its statistics.
    Order {
        #[arg(long)]
        v: usize,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        lambdas: LambdaArgs,
    },
    /// Row-uniform semibalanced array with kstar rows and b columns.
    Sba {
        #[arg(long)]
        v: usize,
        #[arg(long)]
        kstar: usize,
        #[arg(long)]
        b: usize,
    },
    /// Minimal information matrix of a design file.
    Analyze {
        /// Design document (JSON) or a CSV of cells.
        #[arg(long, value_name = "FILE")]
        design: PathBuf,
        /// Number of treatments, for CSV input (defaults to the largest label).
        #[arg(long)]
        v: Option<usize>,
        #[command(flatten)]
        lambdas: LambdaArgs,
    },
    /// Efficiencies of the candidate orders over a lambda grid.
    Efficiency {
        #[arg(long)]
        v: usize,
        #[arg(long)]
        k: usize,
        /// Use the grid of the published v=7, k=4 table.
        #[arg(long, conflicts_with = "grid")]
        table1: bool,
        /// Grid points as lambda0:lambda1, comma separated (fractions allowed).
        #[arg(long, value_delimiter = ',', value_parser = parse_grid_point)]
        grid: Vec<(f64, f64)>,
        /// Also write gnuplot data of efficiency against lambda0/lambda1.
        #[arg(long, value_name = "FILE")]
        plot_data: Option<PathBuf>,
        /// lambda1 held fixed along the plotted curves.
        #[arg(long, default_value = "1", value_parser = parse_real)]
        curve_lambda1: f64,
        /// Number of plotted points.
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Certify a design file, optionally against full enumeration.
    Verify {
        #[arg(long, value_name = "FILE")]
        design: PathBuf,
        #[arg(long)]
        v: Option<usize>,
        #[command(flatten)]
        lambdas: LambdaArgs,
        /// Enumerate every design with the same (v, k, b).
        #[arg(long)]
        exhaustive: bool,
        /// Largest number of designs to enumerate.
        #[arg(long, env = BUDGET_ENV)]
        budget: Option<u128>,
    },
    /// Best order by brute force over all v^k orders.
    Oracle {
        #[arg(long)]
        v: usize,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        lambdas: LambdaArgs,
        /// Largest number of orders to evaluate.
        #[arg(long, env = BUDGET_ENV)]
        budget: Option<u128>,
    },
}

/// Covariance weights, given directly or through variance components.
#[derive(Debug, Clone, Default, Args)]
pub struct LambdaArgs {
    #[arg(long, value_parser = parse_real)]
    pub lambda0: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    pub lambda1: Option<f64>,
    /// Unit error variance (default 1 when other components are given).
    #[arg(long, value_parser = parse_real)]
    pub sigma_eps2: Option<f64>,
    /// Block variance, or `inf`.
    #[arg(long)]
    pub sigma_beta2: Option<Variance>,
    /// Slope variance, or `inf`.
    #[arg(long)]
    pub sigma_theta2: Option<Variance>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lambdas {
    pub lambda0: f64,
    pub lambda1: f64,
    pub components: Option<VarianceComponents>,
}

impl LambdaArgs {
    fn has_components(&self) -> bool {
        self.sigma_eps2.is_some() || self.sigma_beta2.is_some() || self.sigma_theta2.is_some()
    }

    /// The lambdas for block size `k`, or `None` when nothing was given.
    pub fn resolve(&self, k: usize) -> Result<Option<Lambdas>, CliError> {
        let direct = match (self.lambda0, self.lambda1) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => {
                return Err(CliError::Input(
                    "--lambda0 and --lambda1 must be given together".into(),
                ))
            }
        };
        let components = if self.has_components() {
            let (Some(beta2), Some(theta2)) = (self.sigma_beta2, self.sigma_theta2) else {
                return Err(CliError::Input(
                    "variance components need both --sigma-beta2 and --sigma-theta2".into(),
                ));
            };
            Some(VarianceComponents {
                sigma0_eps2: self.sigma_eps2.unwrap_or(1.0),
                sigma0_beta2: beta2,
                sigma0_theta2: theta2,
            })
        } else {
            None
        };
        let implied = match components {
            Some(c) => Some(lambdas_from_components(
                c.sigma0_eps2,
                c.sigma0_beta2,
                c.sigma0_theta2,
                k,
            )?),
            None => None,
        };
        let (lambda0, lambda1) = match (direct, implied) {
            (None, None) => return Ok(None),
            (Some(d), None) => d,
            (None, Some(i)) => i,
            (Some(d), Some(i)) => {
                if (d.0 - i.0).abs() > LAMBDA_CONSISTENCY_TOL
                    || (d.1 - i.1).abs() > LAMBDA_CONSISTENCY_TOL
                {
                    return Err(CliError::Input(format!(
                        "lambdas ({}, {}) disagree with the variance components, which give ({}, {})",
                        d.0, d.1, i.0, i.1
                    )));
                }
                d
            }
        };
        trendopt_core::model::check_lambdas(k, lambda0, lambda1)?;
        Ok(Some(Lambdas {
            lambda0,
            lambda1,
            components,
        }))
    }

    pub fn require(&self, k: usize) -> Result<Lambdas, CliError> {
        self.resolve(k)?.ok_or_else(|| {
            CliError::Input(
                "give --lambda0 and --lambda1, or --sigma-beta2 and --sigma-theta2".into(),
            )
        })
    }
}

/// Parses a real number or a fraction `a/b`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let x = match t.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| format!("bad number '{s}'"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("bad number '{s}'"))?;
            if b == 0.0 {
                return Err(format!("zero denominator in '{s}'"));
            }
            a / b
        }
        None => t.parse().map_err(|_| format!("bad number '{s}'"))?,
    };
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

/// Parses `lambda0:lambda1`.
pub fn parse_grid_point(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("grid point '{s}' must look like lambda0:lambda1"))?;
    Ok((parse_real(a)?, parse_real(b)?))
}
