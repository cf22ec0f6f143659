//! `sawkit` command-line front end.

mod commands;
mod config;
mod report;
mod svg;
mod synth;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};
use sawkit::Execution;

use commands::{Common, XpsInputs};
use config::{ModelChoice, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "sawkit",
    version,
    about = "Batch analysis of resonator, XPS, AFM and walk-off data"
)]
struct Cli {
    /// Seed for synthetic data.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Process every input even after a failure; the exit status is still
    /// nonzero when any input failed.
    #[arg(long, global = true)]
    keep_going: bool,
    /// Write an SVG plot next to each JSON report.
    #[arg(long, global = true)]
    emit_svg: bool,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// JSON run configuration; see README for the schema.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Process batch inputs one at a time.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LineOrder {
    None,
    Degree(usize),
}

fn parse_line_order(s: &str) -> Result<LineOrder, String> {
    match s {
        "none" => Ok(LineOrder::None),
        "0" | "1" | "2" => Ok(LineOrder::Degree(s.parse().expect("digit"))),
        _ => Err(format!("`{s}` is not one of 0, 1, 2, none")),
    }
}

fn parse_pixel(s: &str) -> Result<[usize; 2], String> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| format!("`{s}` is not `X,Y`"))?;
    let p = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("`{v}`: {e}"));
    Ok([p(x)?, p(y)?])
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit reflection traces (`freq_hz,re,im` CSV).
    FitResonance {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum)]
        model: Option<ModelChoice>,
    },
    /// Fit F·δ0 to resonance frequency versus temperature.
    FitTempsweep {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Fit the power-saturation model to Qi versus phonon number.
    FitPowersweep {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Pin β instead of the span-dependent default.
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Quantify atomic percentages; each input is a directory of per-line CSVs.
    XpsQuant {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// JSON map of line to relative sensitivity factor.
        #[arg(long, value_name = "FILE")]
        sensitivity: Option<PathBuf>,
        /// JSON map of line to band model.
        #[arg(long, value_name = "FILE")]
        bands: Option<PathBuf>,
        /// Use binding energies as given.
        #[arg(long)]
        no_charge_shift: bool,
        /// Measured Nb3d5/2 position; detected from the Nb3d spectrum when absent.
        #[arg(long, value_name = "EV")]
        nb3d52_ev: Option<f64>,
    },
    /// Flatten, level and analyze AFM height grids.
    Afm {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Row polynomial degree, or `none` to skip line flattening.
        #[arg(long, value_parser = parse_line_order)]
        line_order: Option<LineOrder>,
        /// Plane-leveling pixel `X,Y`; give exactly three.
        #[arg(long = "level-point", value_name = "X,Y", value_parser = parse_pixel)]
        level_points: Vec<[usize; 2]>,
    },
    /// Locate zero crossings of walk-off curves (`theta_deg,eta_deg` CSV).
    Walkoff {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Moving-average half width in samples; 0 disables smoothing.
        #[arg(long)]
        half_width: Option<usize>,
        #[arg(long)]
        tangency_threshold_deg: Option<f64>,
    },
    /// Write deterministic synthetic fixtures.
    Synth {
        #[command(subcommand)]
        kind: synth::SynthKind,
    },
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    let common = Common {
        out: cli.out.clone(),
        keep_going: cli.keep_going,
        emit_svg: cli.emit_svg,
        exec: if cli.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
    };
    std::fs::create_dir_all(&common.out)?;
    let summary = match &cli.command {
        Command::FitResonance { inputs, model } => {
            commands::fit_resonance_cmd(&common, inputs, model.unwrap_or(cfg.resonance.model))?
        }
        Command::FitTempsweep { inputs } => commands::fit_tempsweep_cmd(&common, inputs)?,
        Command::FitPowersweep { inputs, beta } => {
            if let Some(b) = beta {
                if !(*b > 0.0 && *b <= 2.0) {
                    bail!("--beta {b} outside (0, 2]");
                }
            }
            commands::fit_powersweep_cmd(&common, inputs, beta.or(cfg.powersweep.beta))?
        }
        Command::XpsQuant {
            dirs,
            sensitivity,
            bands,
            no_charge_shift,
            nb3d52_ev,
        } => commands::xps_quant_cmd(
            &common,
            dirs,
            &XpsInputs {
                sensitivity: sensitivity.clone(),
                bands: bands.clone(),
                no_charge_shift: *no_charge_shift,
                nb3d52_measured_ev: *nb3d52_ev,
            },
            &cfg,
        )?,
        Command::Afm {
            inputs,
            line_order,
            level_points,
        } => {
            let order = match line_order {
                Some(LineOrder::None) => None,
                Some(LineOrder::Degree(d)) => Some(*d),
                None => cfg.afm.line_order,
            };
            let points = match level_points.len() {
                0 => cfg.afm.level_points,
                3 => Some([level_points[0], level_points[1], level_points[2]]),
                n => bail!("--level-point given {n} times; plane leveling needs exactly 3"),
            };
            commands::afm_cmd(&common, inputs, order, points)?
        }
        Command::Walkoff {
            inputs,
            half_width,
            tangency_threshold_deg,
        } => {
            let thr = tangency_threshold_deg.unwrap_or(cfg.walkoff.tangency_threshold_deg);
            if !(thr >= 0.0) {
                bail!("--tangency-threshold-deg must be >= 0");
            }
            commands::walkoff_cmd(
                &common,
                inputs,
                half_width.unwrap_or(cfg.walkoff.half_width),
                thr,
            )?
        }
        Command::Synth { kind } => {
            synth::run(kind, cli.seed, &common.out)?;
            return Ok(true);
        }
    };
    eprintln!("{} succeeded, {} failed", summary.succeeded, summary.failed);
    Ok(summary.failed == 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn line_order_values() {
        assert_eq!(parse_line_order("none"), Ok(LineOrder::None));
        assert_eq!(parse_line_order("2"), Ok(LineOrder::Degree(2)));
        assert!(parse_line_order("3").is_err());
    }

    #[test]
    fn pixel_parsing() {
        assert_eq!(parse_pixel("3, 14"), Ok([3, 14]));
        assert!(parse_pixel("3").is_err());
        assert!(parse_pixel("-1,2").is_err());
    }

    #[test]
    fn unknown_flags_rejected() {
        assert!(Cli::try_parse_from(["sawkit", "walkoff", "a.csv", "--smooth", "3"]).is_err());
        assert!(Cli::try_parse_from(["sawkit", "walkoff", "a.csv", "--half-width", "3"]).is_ok());
    }
}
