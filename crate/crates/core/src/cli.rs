//! The `fxinv` command line.
//!
//! Exit codes: 0 on success, 1 when a computation or input file is rejected,
//! 2 on a usage error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::calibration::{calibrate_heston, calibrate_sabr, default_heston_starts, DEFAULT_HESTON_STARTS};
use crate::error::{Error, Result};
use crate::inversion::{inverse_sabr, invert_constant_jump, invert_heston, jump_compensation_residual};
use crate::inversion::{CompensationCheck, ConstantJumpSpec, Measure};
use crate::jump_densities::{foreign_jump_law, mean_jump, no_arb_residual, CompoundJumpSpec, JumpLaw};
use crate::market_data::load_smile;
use crate::montecarlo::{
    simulate_heston, simulate_inverse_sabr, simulate_jump_gbm_exact, write_binary, write_csv, Estimate, JumpModel, McConfig,
    SampleFlags, Scheme, TerminalSample,
};
use crate::pricing::{HestonParams, SabrParams};
use crate::report::{
    heston_consistency_experiment, naive_inverse_sabr, sabr_inconsistency_experiment, smile_distance, write_report,
    OutputFormat,
};

const DEFAULT_PATHS: usize = 200_000;
const DEFAULT_SEED: u64 = 2024;

#[derive(Parser, Debug)]
#[command(name = "fxinv", version, about = "FX rate dynamics under inversion of the quote")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Monte Carlo seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo path count.
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Time steps per path for Euler schemes.
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Structured)]
    format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Format {
    Csv,
    Structured,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Structured => OutputFormat::Structured,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Model {
    Heston,
    Sabr,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit Heston or SABR to a smile file.
    Calibrate {
        #[arg(long, value_enum)]
        model: Model,
        #[arg(long)]
        smile: PathBuf,
        /// SABR backbone exponent, held fixed in the fit.
        #[arg(long, default_value_t = 0.5)]
        beta: f64,
        /// Heston multi-start count.
        #[arg(long, default_value_t = DEFAULT_HESTON_STARTS)]
        starts: usize,
    },
    /// Map model parameters to the dynamics of the inverse rate.
    Invert {
        #[arg(long, value_enum)]
        model: Model,
        #[arg(long)]
        params: PathBuf,
        /// Domestic minus foreign rate, used for the SABR drift.
        #[arg(long, default_value_t = 0.0)]
        rate_differential: f64,
        /// Forward for the naive SABR parameter map.
        #[arg(long)]
        forward: Option<f64>,
    },
    /// Compare the duality smile with the inverse model's smile.
    Consistency {
        #[arg(long, value_enum)]
        model: Model,
        #[arg(long)]
        params: PathBuf,
        /// Smile file whose strikes, forward and maturity set the layout.
        #[arg(long)]
        smile: PathBuf,
    },
    /// Foreign-measure law of 1/S for a constant jump size.
    JumpInvert {
        #[arg(long, allow_hyphen_values = true)]
        gamma: f64,
        #[arg(long)]
        lambda: f64,
        /// Measure the input is stated under.
        #[arg(long, value_enum, default_value_t = MeasureArg::Domestic)]
        measure: MeasureArg,
    },
    /// Foreign-measure law of 1/S for compound-Poisson jumps.
    DensityInvert {
        #[arg(long, required_unless_present = "density", requires = "q")]
        alpha: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        /// Density file (`{"family": ...}`) instead of `--alpha`/`--q`.
        #[arg(long, conflicts_with_all = ["alpha", "q"])]
        density: Option<PathBuf>,
        #[arg(long)]
        lambda: f64,
    },
    /// Simulate terminal levels from a JSON model file.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        antithetic: bool,
        /// Write the sample in the binary layout (requires `--out`).
        #[arg(long, requires = "out")]
        binary: bool,
    },
    /// Sup and l2 distance between two smiles on the same strikes.
    SmileDistance {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MeasureArg {
    Domestic,
    Foreign,
}

impl From<MeasureArg> for Measure {
    fn from(m: MeasureArg) -> Self {
        match m {
            MeasureArg::Domestic => Measure::Domestic,
            MeasureArg::Foreign => Measure::Foreign,
        }
    }
}

/// Model file for `simulate`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum SimulationSpec {
    JumpGbm {
        s0: f64,
        rate_differential: f64,
        sigma: f64,
        #[serde(default = "no_jumps")]
        jumps: JumpModel,
        maturity: f64,
    },
    Heston {
        params: HestonParams,
        s0: f64,
        rate_differential: f64,
        maturity: f64,
    },
    InverseSabr {
        params: SabrParams,
        rate_differential: f64,
        y0: f64,
        maturity: f64,
    },
}

fn no_jumps() -> JumpModel {
    JumpModel::None
}

#[derive(Serialize)]
struct HestonInversion {
    params: HestonParams,
    inverse: HestonParams,
    kappa_minus_rho_sigma: f64,
    feller_satisfied: bool,
}

#[derive(Serialize)]
struct SabrInversion {
    params: SabrParams,
    rate_differential: f64,
    inverse_correlation: f64,
    level_exponent: f64,
    vol_drift: bool,
    stays_sabr: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    naive_map: Option<SabrParams>,
}

#[derive(Serialize)]
struct JumpInversion {
    input: ConstantJumpSpec,
    inverse: ConstantJumpSpec,
    compensation: CompensationCheck,
}

#[derive(Serialize)]
struct DensityInversion {
    domestic: CompoundJumpSpec,
    mean_jump: f64,
    foreign_intensity: f64,
    foreign_inverse_law: JumpLaw,
    no_arb_residual: f64,
}

#[derive(Serialize)]
struct SimulationSummary {
    config: McConfig,
    paths: usize,
    mean: Estimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    weight_mean: Option<Estimate>,
    flags: SampleFlags,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

struct Context<'a> {
    common: &'a Common,
    out: &'a mut dyn Write,
}

impl Context<'_> {
    fn emit<T: Serialize>(&mut self, value: &T) -> Result<()> {
        let format = self.common.format.into();
        match &self.common.out {
            Some(path) => {
                let mut w = BufWriter::new(File::create(path)?);
                write_report(value, format, &mut w)?;
                w.flush()?;
                Ok(())
            }
            None => write_report(value, format, &mut *self.out),
        }
    }

    fn emit_text(&mut self, text: &str) -> Result<()> {
        match &self.common.out {
            Some(path) => Ok(std::fs::write(path, text)?),
            None => Ok(self.out.write_all(text.as_bytes())?),
        }
    }

    fn mc_config(&self, antithetic: bool, scheme: Scheme, default_steps: usize) -> Result<McConfig> {
        let steps = match scheme {
            Scheme::Exact => 1,
            Scheme::EulerFullTruncation => self.common.steps.unwrap_or(default_steps),
        };
        McConfig::new(
            self.common.paths.unwrap_or(DEFAULT_PATHS),
            steps,
            self.common.seed.unwrap_or(DEFAULT_SEED),
            antithetic,
            scheme,
        )
    }
}

/// Euler steps giving at least 256 per year.
fn default_steps(maturity: f64) -> usize {
    ((256.0 * maturity).ceil() as usize).max(16)
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let mut ctx = Context { common: &cli.common, out };
    match &cli.command {
        Command::Calibrate { model, smile, beta, starts } => {
            let smile = load_smile(smile)?;
            match model {
                Model::Heston => ctx.emit(&calibrate_heston(&smile, &default_heston_starts(&smile, *starts))?),
                Model::Sabr => ctx.emit(&calibrate_sabr(&smile, *beta)?),
            }
        }
        Command::Invert {
            model,
            params,
            rate_differential,
            forward,
        } => match model {
            Model::Heston => {
                let p: HestonParams = read_json(params)?;
                p.validate()?;
                ctx.emit(&HestonInversion {
                    params: p,
                    inverse: invert_heston(&p)?,
                    kappa_minus_rho_sigma: p.kappa - p.rho * p.sigma,
                    feller_satisfied: p.feller_satisfied(),
                })
            }
            Model::Sabr => {
                let p: SabrParams = read_json(params)?;
                let d = inverse_sabr(&p, *rate_differential)?;
                ctx.emit(&SabrInversion {
                    params: p,
                    rate_differential: *rate_differential,
                    inverse_correlation: d.correlation,
                    level_exponent: d.diffusion_exponent(),
                    vol_drift: d.has_vol_drift(),
                    stays_sabr: !d.has_vol_drift() && p.beta == 1.0,
                    naive_map: forward.map(|f| naive_inverse_sabr(&p, f)).transpose()?,
                })
            }
        },
        Command::Consistency { model, params, smile } => {
            let layout = load_smile(smile)?;
            let report = match model {
                Model::Heston => {
                    let p: HestonParams = read_json(params)?;
                    heston_consistency_experiment(&p, &layout)?
                }
                Model::Sabr => {
                    let p: SabrParams = read_json(params)?;
                    let cfg = ctx.mc_config(true, Scheme::EulerFullTruncation, default_steps(layout.maturity()))?;
                    sabr_inconsistency_experiment(&p, &layout, &cfg)?
                }
            };
            match cli.common.format {
                Format::Csv => ctx.emit_text(&report.csv_table()),
                Format::Structured => ctx.emit(&report),
            }
        }
        Command::JumpInvert { gamma, lambda, measure } => {
            let input = ConstantJumpSpec::new(*gamma, *lambda, (*measure).into())?;
            let inverse = invert_constant_jump(&input)?;
            ctx.emit(&JumpInversion {
                input,
                inverse,
                compensation: jump_compensation_residual(&input, &inverse),
            })
        }
        Command::DensityInvert { alpha, q, density, lambda } => {
            let law = match (density, alpha, q) {
                (Some(path), _, _) => read_json::<JumpLaw>(path)?,
                (None, Some(a), Some(q)) => JumpLaw::power_law_cutoff(*a, *q)?,
                _ => return Err(Error::invalid("density", "give --density or both --alpha and --q")),
            };
            let spec = CompoundJumpSpec::new(law.clone(), *lambda, Measure::Domestic)?;
            let foreign = foreign_jump_law(&spec)?;
            ctx.emit(&DensityInversion {
                mean_jump: mean_jump(&law)?,
                foreign_intensity: foreign.lambda_f,
                foreign_inverse_law: law.foreign_inverse_law(*lambda)?,
                no_arb_residual: no_arb_residual(&spec)?,
                domestic: spec,
            })
        }
        Command::Simulate { spec, antithetic, binary } => {
            let spec: SimulationSpec = read_json(spec)?;
            let sample = simulate(&ctx, &spec, *antithetic)?;
            match &cli.common.out {
                Some(path) => {
                    let mut w = BufWriter::new(File::create(path)?);
                    if *binary {
                        write_binary(&sample, &mut w)?;
                    } else {
                        write_csv(&sample, &mut w)?;
                    }
                    w.flush()?;
                    let summary = summarize(&sample)?;
                    write_report(&summary, cli.common.format.into(), &mut *ctx.out)
                }
                None => write_report(&summarize(&sample)?, cli.common.format.into(), &mut *ctx.out),
            }
        }
        Command::SmileDistance { a, b } => ctx.emit(&smile_distance(&load_smile(a)?, &load_smile(b)?)?),
    }
}

fn simulate(ctx: &Context<'_>, spec: &SimulationSpec, antithetic: bool) -> Result<TerminalSample> {
    match spec {
        SimulationSpec::JumpGbm {
            s0,
            rate_differential,
            sigma,
            jumps,
            maturity,
        } => simulate_jump_gbm_exact(
            *s0,
            *rate_differential,
            *sigma,
            jumps,
            *maturity,
            &ctx.mc_config(antithetic, Scheme::Exact, 1)?,
        ),
        SimulationSpec::Heston {
            params,
            s0,
            rate_differential,
            maturity,
        } => simulate_heston(
            params,
            *s0,
            *rate_differential,
            *maturity,
            &ctx.mc_config(antithetic, Scheme::EulerFullTruncation, default_steps(*maturity))?,
        ),
        SimulationSpec::InverseSabr {
            params,
            rate_differential,
            y0,
            maturity,
        } => simulate_inverse_sabr(
            &inverse_sabr(params, *rate_differential)?,
            *y0,
            *maturity,
            &ctx.mc_config(antithetic, Scheme::EulerFullTruncation, default_steps(*maturity))?,
        ),
    }
}

fn summarize(sample: &TerminalSample) -> Result<SimulationSummary> {
    Ok(SimulationSummary {
        config: sample.config,
        paths: sample.len(),
        mean: sample.mean(),
        weight_mean: sample.rn_weights.as_ref().map(|_| sample.weight_mean()).transpose()?,
        flags: sample.flags,
    })
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}
