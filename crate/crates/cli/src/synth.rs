//! `synth` subcommand: deterministic fixture files plus a `.truth.json`
//! holding the generator settings.

use std::path::Path;

use anyhow::{bail, Result};
use clap::{Args, Subcommand};
use sawkit::spectra::{
    linewidth_grid, noise_sigma_for_snr_db, synth_afm_terraces, synth_power_sweep, synth_s11,
    synth_temperature_sweep, synth_walkoff_sine, synth_xps_peak_on_step, write_afm_grid,
    write_power_sweep_csv, write_s11_csv, write_temperature_sweep_csv, write_walkoff_csv,
    write_xps_csv, DarkModeSpec, ElementLine, S11Spec, TerraceSpec, XpsPeakSpec,
};
use sawkit::tls::PowerModelParams;
use serde::Serialize;

use crate::report::{write_atomic, write_json};

#[derive(Debug, Subcommand)]
pub enum SynthKind {
    /// Reflection trace, optionally with a coupled dark mode.
    S11(S11Args),
    /// Resonance frequency versus temperature.
    Tempsweep(TempsweepArgs),
    /// Internal Q versus mean phonon number.
    Powersweep(PowersweepArgs),
    /// One photoelectron peak on a step background.
    Xps(XpsArgs),
    /// Terraced height map with white noise.
    Afm(AfmArgs),
    /// Sinusoidal walk-off curve.
    Walkoff(WalkoffArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct S11Args {
    #[arg(long, default_value = "s11")]
    pub name: String,
    #[arg(long, default_value_t = 688.4e6)]
    pub f0_hz: f64,
    #[arg(long, default_value_t = 6.8e3)]
    pub qi: f64,
    #[arg(long, default_value_t = 1.4e4)]
    pub qe: f64,
    #[arg(long, default_value_t = 40.0)]
    pub snr_db: f64,
    #[arg(long, default_value_t = 20)]
    pub points_per_linewidth: usize,
    #[arg(long, default_value_t = 3.0)]
    pub span_linewidths: f64,
    /// Dark-mode coupling; giving it enables the dark mode.
    #[arg(long, requires_all = ["dark_offset_hz", "dark_gamma_hz"])]
    pub dark_g_hz: Option<f64>,
    /// Dark-mode frequency minus f0.
    #[arg(long, requires = "dark_g_hz")]
    pub dark_offset_hz: Option<f64>,
    #[arg(long, requires = "dark_g_hz")]
    pub dark_gamma_hz: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct TempsweepArgs {
    #[arg(long, default_value = "tempsweep")]
    pub name: String,
    #[arg(long, default_value_t = 5.8e-6)]
    pub f_delta: f64,
    #[arg(long, default_value_t = 690e6)]
    pub f0_hz: f64,
    #[arg(long, default_value_t = 10.0)]
    pub noise_hz: f64,
    #[arg(long, default_value_t = 0.010)]
    pub t_min_k: f64,
    #[arg(long, default_value_t = 0.200)]
    pub t_max_k: f64,
    #[arg(long, default_value_t = 20)]
    pub points: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct PowersweepArgs {
    #[arg(long, default_value = "powersweep")]
    pub name: String,
    #[arg(long, default_value_t = 5.66e-4)]
    pub f_delta: f64,
    #[arg(long, default_value_t = 1e3)]
    pub n_c: f64,
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    #[arg(long, default_value_t = 2.6e3)]
    pub q_res: f64,
    #[arg(long, default_value_t = 0.010)]
    pub temperature_k: f64,
    #[arg(long, default_value_t = 690e6)]
    pub f0_hz: f64,
    /// Relative Gaussian noise on Qi.
    #[arg(long, default_value_t = 0.02)]
    pub rel_noise: f64,
    #[arg(long, default_value_t = 0.1)]
    pub n_min: f64,
    #[arg(long, default_value_t = 1e8)]
    pub n_max: f64,
    #[arg(long, default_value_t = 25)]
    pub points: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct XpsArgs {
    #[arg(long, default_value = "xps")]
    pub name: String,
    #[arg(long, default_value = "O1s")]
    pub line: String,
    #[arg(long, default_value_t = 530.0)]
    pub center_ev: f64,
    #[arg(long, default_value_t = 0.6)]
    pub sigma_ev: f64,
    /// Lorentzian half width at half maximum.
    #[arg(long, default_value_t = 0.4)]
    pub gamma_ev: f64,
    #[arg(long, default_value_t = 0.3)]
    pub mix: f64,
    #[arg(long, default_value_t = 5000.0)]
    pub area: f64,
    #[arg(long, default_value_t = 200.0)]
    pub low_level: f64,
    #[arg(long, default_value_t = 300.0)]
    pub step: f64,
    #[arg(long, default_value_t = 515.0)]
    pub be_min_ev: f64,
    #[arg(long, default_value_t = 545.0)]
    pub be_max_ev: f64,
    #[arg(long, default_value_t = 601)]
    pub points: usize,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct AfmArgs {
    #[arg(long, default_value = "afm")]
    pub name: String,
    #[arg(long, default_value_t = 256)]
    pub nx: usize,
    #[arg(long, default_value_t = 256)]
    pub ny: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub pixel_m: f64,
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    #[arg(long, default_value_t = 240e-12)]
    pub step_m: f64,
    #[arg(long, default_value_t = 80e-12)]
    pub noise_m: f64,
    /// Plane tilt along x, meters per pixel.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub tilt_x: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub tilt_y: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct WalkoffArgs {
    #[arg(long, default_value = "walkoff")]
    pub name: String,
    #[arg(long, default_value_t = 10.0)]
    pub amplitude_deg: f64,
    /// Position of the rising zero; the next zero is 90° later.
    #[arg(long, default_value_t = 17.3, allow_hyphen_values = true)]
    pub zero_deg: f64,
    #[arg(long, default_value_t = -90.0, allow_hyphen_values = true)]
    pub theta_min_deg: f64,
    #[arg(long, default_value_t = 90.0, allow_hyphen_values = true)]
    pub theta_max_deg: f64,
    #[arg(long, default_value_t = 1.0)]
    pub step_deg: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise_deg: f64,
}

#[derive(Serialize)]
struct Truth<'a, A: Serialize> {
    kind: &'a str,
    seed: u64,
    settings: &'a A,
}

fn emit<A: Serialize>(
    out: &Path,
    kind: &str,
    name: &str,
    ext: &str,
    data: &str,
    args: &A,
    seed: u64,
) -> Result<()> {
    if name.is_empty() || name.contains(['/', '\\']) {
        bail!("--name must be a plain file stem");
    }
    write_atomic(&out.join(format!("{name}.{ext}")), data)?;
    write_json(
        &out.join(format!("{name}.truth.json")),
        &Truth {
            kind,
            seed,
            settings: args,
        },
    )
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

pub fn run(kind: &SynthKind, seed: u64, out: &Path) -> Result<()> {
    match kind {
        SynthKind::S11(a) => {
            let mut spec = S11Spec::from_q(a.f0_hz, a.qi, a.qe);
            if let (Some(g), Some(off), Some(gamma)) =
                (a.dark_g_hz, a.dark_offset_hz, a.dark_gamma_hz)
            {
                spec.dark = Some(DarkModeSpec {
                    g_hz: g,
                    offset_hz: off,
                    gamma_hz: gamma,
                });
            }
            if a.points_per_linewidth == 0 || !(a.span_linewidths > 0.0) {
                bail!("points per linewidth and span must be positive");
            }
            let grid = linewidth_grid(
                spec.f0_hz,
                spec.kappa_hz,
                a.points_per_linewidth,
                a.span_linewidths,
            );
            let s = synth_s11(&spec, &grid, noise_sigma_for_snr_db(a.snr_db), seed)?;
            emit(out, "s11", &a.name, "csv", &write_s11_csv(&s), a, seed)
        }
        SynthKind::Tempsweep(a) => {
            if a.points == 0 {
                bail!("--points must be positive");
            }
            let temps = linspace(a.t_min_k, a.t_max_k, a.points);
            let s = synth_temperature_sweep(a.f_delta, a.f0_hz, &temps, a.noise_hz, seed)?;
            emit(
                out,
                "tempsweep",
                &a.name,
                "csv",
                &write_temperature_sweep_csv(&s),
                a,
                seed,
            )
        }
        SynthKind::Powersweep(a) => {
            if !(a.n_min > 0.0 && a.n_max > a.n_min) || a.points < 2 {
                bail!("need 0 < n_min < n_max and at least 2 points");
            }
            let n: Vec<f64> = linspace(a.n_min.log10(), a.n_max.log10(), a.points)
                .into_iter()
                .map(|x| 10f64.powf(x))
                .collect();
            let params = PowerModelParams {
                f_delta_tls: a.f_delta,
                n_c: a.n_c,
                beta: a.beta,
                q_i_res: a.q_res,
                temperature_k: a.temperature_k,
                f0_hz: a.f0_hz,
            };
            let s = synth_power_sweep(&params, &n, a.rel_noise, seed)?;
            emit(
                out,
                "powersweep",
                &a.name,
                "csv",
                &write_power_sweep_csv(&s),
                a,
                seed,
            )
        }
        SynthKind::Xps(a) => {
            let spec = XpsPeakSpec {
                line: a.line.parse::<ElementLine>()?,
                center_ev: a.center_ev,
                sigma_ev: a.sigma_ev,
                gamma_ev: a.gamma_ev,
                mix: a.mix,
                area: a.area,
                low_level: a.low_level,
                step: a.step,
                be_min_ev: a.be_min_ev,
                be_max_ev: a.be_max_ev,
                n_points: a.points,
                noise_sigma: a.noise,
            };
            let (s, _) = synth_xps_peak_on_step(&spec, seed)?;
            emit(out, "xps", &a.name, "csv", &write_xps_csv(&s), a, seed)
        }
        SynthKind::Afm(a) => {
            let spec = TerraceSpec {
                nx: a.nx,
                ny: a.ny,
                pixel_m: a.pixel_m,
                levels: a.levels,
                step_m: a.step_m,
                noise_sigma_m: a.noise_m,
                tilt_x_m_per_px: a.tilt_x,
                tilt_y_m_per_px: a.tilt_y,
            };
            let img = synth_afm_terraces(&spec, seed)?;
            emit(out, "afm", &a.name, "txt", &write_afm_grid(&img), a, seed)
        }
        SynthKind::Walkoff(a) => {
            if !(a.step_deg > 0.0 && a.theta_max_deg > a.theta_min_deg) {
                bail!("need a positive step and theta_max > theta_min");
            }
            let n = ((a.theta_max_deg - a.theta_min_deg) / a.step_deg).round() as usize + 1;
            let theta: Vec<f64> = (0..n)
                .map(|i| a.theta_min_deg + i as f64 * a.step_deg)
                .collect();
            let c = synth_walkoff_sine(a.amplitude_deg, a.zero_deg, &theta, a.noise_deg, seed)?;
            emit(
                out,
                "walkoff",
                &a.name,
                "csv",
                &write_walkoff_csv(&c),
                a,
                seed,
            )
        }
    }
}
