//! Analysis subcommands. Each maps one input to one report and optional plot.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sawkit::afm::{
    fit_step_heights, height_histogram, remove_line_tilt, rms_roughness, three_point_level, Plane,
    StepHeightResult,
};
use sawkit::resonance::{eval_s11, fit_resonance, ModelKind, ResonanceFitResult};
use sawkit::spectra::{
    parse_afm_grid, parse_power_sweep_csv, parse_s11_csv, parse_temperature_sweep_csv,
    parse_walkoff_csv, parse_xps_csv, ComplexSpectrum, ElementLine,
};
use sawkit::tls::{
    fit_fdelta, fit_power_sweep, qi_power_model, tls_frequency_shift, PowerFitResult, TlsFitResult,
};
use sawkit::walkoff::{analyze, WalkoffReport};
use sawkit::xps::{quantify, BandFit, BandModel, QuantConfig, SensitivityTable, XpsQuantReport};
use sawkit::Execution;
use serde::Serialize;

use crate::config::{ModelChoice, RunConfig};
use crate::report::{expand_inputs, write_batch, write_json, BatchSummary, Processed};
use crate::svg::{render, Panel, Series, Style};

/// Settings shared by every analysis command.
pub struct Common {
    pub out: PathBuf,
    pub keep_going: bool,
    pub emit_svg: bool,
    pub exec: Execution,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn run_batch<R, F>(common: &Common, inputs: &[PathBuf], f: F) -> Result<BatchSummary>
where
    R: Serialize + Send,
    F: Fn(&Path) -> Result<Processed<R>> + Sync + Send,
{
    let results = sawkit::par::map(common.exec, inputs, |p| f(p));
    write_batch(&common.out, inputs, results, common.keep_going)
}

pub fn fit_resonance_cmd(
    common: &Common,
    inputs: &[PathBuf],
    model: ModelChoice,
) -> Result<BatchSummary> {
    let files = expand_inputs(inputs, &["csv"])?;
    let kind = match model {
        ModelChoice::Lorentzian => ModelKind::Lorentzian,
        ModelChoice::Dark => ModelKind::DarkMode,
    };
    run_batch(common, &files, |p| {
        let spectrum = parse_s11_csv(&read(p)?).with_context(|| p.display().to_string())?;
        let fit = fit_resonance(&spectrum, kind, None)?;
        let svg = common
            .emit_svg
            .then(|| resonance_svg(&stem_of(p), &spectrum, &fit));
        Ok(Processed { report: fit, svg })
    })
}

fn stem_of(p: &Path) -> String {
    crate::report::stem(p)
}

fn resonance_svg(name: &str, spectrum: &ComplexSpectrum, fit: &ResonanceFitResult) -> String {
    let (freqs, values) = (spectrum.frequencies_hz(), spectrum.values());
    let mhz: Vec<f64> = freqs.iter().map(|f| f / 1e6).collect();
    let model: Vec<_> = freqs.iter().map(|&f| eval_s11(&fit.params, f)).collect();
    let mag = Panel::new("Magnitude", "frequency (MHz)", "|S11|")
        .with(Series::from_xy(
            "data",
            Style::Points,
            &mhz,
            &values.iter().map(|v| v.norm()).collect::<Vec<_>>(),
        ))
        .with(Series::from_xy(
            "fit",
            Style::Line,
            &mhz,
            &model.iter().map(|v| v.norm()).collect::<Vec<_>>(),
        ));
    let phase = Panel::new("Phase", "frequency (MHz)", "arg S11 (rad)")
        .with(Series::from_xy(
            "data",
            Style::Points,
            &mhz,
            &values.iter().map(|v| v.arg()).collect::<Vec<_>>(),
        ))
        .with(Series::from_xy(
            "fit",
            Style::Line,
            &mhz,
            &model.iter().map(|v| v.arg()).collect::<Vec<_>>(),
        ));
    render(
        &format!("{name}: Qi = {:.4e}, Qe = {:.4e}", fit.qi, fit.qe),
        &[mag, phase],
    )
}

pub fn fit_tempsweep_cmd(common: &Common, inputs: &[PathBuf]) -> Result<BatchSummary> {
    let files = expand_inputs(inputs, &["csv"])?;
    run_batch(common, &files, |p| {
        let series =
            parse_temperature_sweep_csv(&read(p)?).with_context(|| p.display().to_string())?;
        let fit = fit_fdelta(&series)?;
        let svg = if common.emit_svg {
            Some(tempsweep_svg(&stem_of(p), &series, &fit)?)
        } else {
            None
        };
        Ok(Processed { report: fit, svg })
    })
}

fn tempsweep_svg(
    name: &str,
    series: &sawkit::spectra::TemperatureSweepSeries,
    fit: &TlsFitResult,
) -> Result<String> {
    let pts = series.points();
    let t_mk: Vec<f64> = pts.iter().map(|p| p.temperature_k * 1e3).collect();
    let data: Vec<f64> = pts
        .iter()
        .map(|p| (p.f0_hz - fit.f0_hz) / fit.f0_hz * 1e6)
        .collect();
    let (t_lo, t_hi) = pts.iter().fold((f64::INFINITY, 0.0f64), |(a, b), p| {
        (a.min(p.temperature_k), b.max(p.temperature_k))
    });
    let mut curve = Vec::with_capacity(200);
    for k in 0..200 {
        let t = t_lo + (t_hi - t_lo) * k as f64 / 199.0;
        let s = tls_frequency_shift(fit.f_delta_tls, fit.f0_hz, t, fit.reference_temperature_k)?;
        curve.push((t * 1e3, s * 1e6));
    }
    let panel = Panel::new("Frequency shift", "temperature (mK)", "Δf/f (ppm)")
        .with(Series::from_xy("data", Style::Points, &t_mk, &data))
        .with(Series::new("model", Style::Line, curve));
    Ok(render(
        &format!("{name}: F·δ0 = {:.4e}", fit.f_delta_tls),
        &[panel],
    ))
}

pub fn fit_powersweep_cmd(
    common: &Common,
    inputs: &[PathBuf],
    beta: Option<f64>,
) -> Result<BatchSummary> {
    let files = expand_inputs(inputs, &["csv"])?;
    run_batch(common, &files, |p| {
        let series = parse_power_sweep_csv(&read(p)?).with_context(|| p.display().to_string())?;
        let fit = fit_power_sweep(&series, beta)?;
        let svg = common
            .emit_svg
            .then(|| powersweep_svg(&stem_of(p), &series, &fit));
        Ok(Processed { report: fit, svg })
    })
}

fn powersweep_svg(
    name: &str,
    series: &sawkit::spectra::PowerSweepSeries,
    fit: &PowerFitResult,
) -> String {
    let pts = series.points();
    let log_n: Vec<f64> = pts.iter().map(|p| p.mean_phonon_number.log10()).collect();
    let qi: Vec<f64> = pts.iter().map(|p| p.qi).collect();
    let (lo, hi) = log_n
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(*v), b.max(*v))
        });
    let curve = (0..200)
        .map(|k| {
            let x = lo + (hi - lo) * k as f64 / 199.0;
            (x, qi_power_model(&fit.params, 10f64.powf(x)))
        })
        .collect();
    let panel = Panel::new("Internal Q versus drive", "log10 mean phonon number", "Qi")
        .with(Series::from_xy("data", Style::Points, &log_n, &qi))
        .with(Series::new("model", Style::Line, curve));
    render(
        &format!(
            "{name}: F·δ0 = {:.4e}, β = {:.3}",
            fit.params.f_delta_tls, fit.params.beta
        ),
        &[panel],
    )
}

#[derive(Debug, Serialize)]
pub struct XpsCliReport {
    #[serde(flatten)]
    pub quant: XpsQuantReport,
    /// Added to every binding energy before analysis.
    pub charge_shift_ev: f64,
    pub shirley_iterations: BTreeMap<ElementLine, usize>,
    pub band_fits: BTreeMap<ElementLine, BandFit>,
}

pub struct XpsInputs {
    pub sensitivity: Option<PathBuf>,
    pub bands: Option<PathBuf>,
    pub no_charge_shift: bool,
    pub nb3d52_measured_ev: Option<f64>,
}

pub fn xps_quant_cmd(
    common: &Common,
    dirs: &[PathBuf],
    opts: &XpsInputs,
    cfg: &RunConfig,
) -> Result<BatchSummary> {
    let factors: BTreeMap<ElementLine, f64> = match (&opts.sensitivity, &cfg.xps.sensitivity) {
        (Some(path), _) => serde_json::from_str(&read(path)?)
            .with_context(|| format!("parsing sensitivity table {}", path.display()))?,
        (None, Some(f)) => f.clone(),
        (None, None) => bail!("a sensitivity table is required (--sensitivity or xps.sensitivity)"),
    };
    let table = SensitivityTable::new(factors)?;
    let mut bands = cfg.xps.bands.clone();
    if let Some(path) = &opts.bands {
        let extra: BTreeMap<ElementLine, BandModel> = serde_json::from_str(&read(path)?)
            .with_context(|| format!("parsing band models {}", path.display()))?;
        for m in extra.values() {
            m.validate()?;
        }
        bands.extend(extra);
    }
    let config = QuantConfig {
        windows: cfg.xps.windows.clone(),
        bands,
        nb3d52_measured_ev: opts.nb3d52_measured_ev.or(cfg.xps.nb3d52_measured_ev),
        skip_charge_shift: opts.no_charge_shift || cfg.xps.skip_charge_shift,
        shirley: cfg.xps.shirley.unwrap_or_default(),
    };
    for d in dirs {
        if !d.is_dir() {
            bail!("{} is not a directory of per-line spectra", d.display());
        }
    }
    run_batch(common, dirs, |dir| {
        let files = expand_inputs(&[dir.to_path_buf()], &["csv"])?;
        let spectra = files
            .iter()
            .map(|f| parse_xps_csv(&read(f)?).with_context(|| f.display().to_string()))
            .collect::<Result<Vec<_>>>()?;
        let (quant, lines, shift) = quantify(&spectra, &table, &config)?;
        let svg = common.emit_svg.then(|| {
            let panels: Vec<Panel> = lines
                .iter()
                .map(|l| {
                    let bg = &l.background;
                    let mut p = Panel::new(l.line.as_str(), "binding energy (eV)", "counts")
                        .with(Series::from_xy(
                            "data",
                            Style::Points,
                            &bg.energy_ev,
                            &bg.counts,
                        ))
                        .with(Series::from_xy(
                            "Shirley",
                            Style::Line,
                            &bg.energy_ev,
                            &bg.background,
                        ));
                    if let Some(fit) = &l.bands {
                        for (k, band) in fit.model.bands.iter().enumerate() {
                            let y: Vec<f64> = bg
                                .energy_ev
                                .iter()
                                .zip(&bg.background)
                                .map(|(e, b)| b + band.eval(*e))
                                .collect();
                            p = p.with(Series::from_xy(
                                format!("band {}", k + 1),
                                Style::Line,
                                &bg.energy_ev,
                                &y,
                            ));
                        }
                    }
                    p
                })
                .collect();
            render(&format!("{}: atomic percentages", stem_of(dir)), &panels)
        });
        let report = XpsCliReport {
            quant,
            charge_shift_ev: shift,
            shirley_iterations: lines
                .iter()
                .map(|l| (l.line.clone(), l.background.iterations))
                .collect(),
            band_fits: lines
                .into_iter()
                .filter_map(|l| l.bands.map(|b| (l.line, b)))
                .collect(),
        };
        Ok(Processed { report, svg })
    })
}

#[derive(Debug, Serialize)]
pub struct AfmReport {
    pub nx: usize,
    pub ny: usize,
    pub line_order: Option<usize>,
    pub plane: Option<Plane>,
    pub rq_m: f64,
    pub step_heights: Option<StepHeightResult>,
    /// Why step heights are absent, e.g. fewer than three terraces.
    pub step_heights_error: Option<String>,
}

#[derive(Debug, Serialize)]
struct AfmSummary {
    inputs: Vec<String>,
    n_images: usize,
    rq_mean_m: f64,
    /// Sample standard deviation across images.
    rq_stdev_m: f64,
}

pub fn afm_cmd(
    common: &Common,
    inputs: &[PathBuf],
    line_order: Option<usize>,
    level_points: Option<[[usize; 2]; 3]>,
) -> Result<BatchSummary> {
    let files = expand_inputs(inputs, &["txt", "afm", "grid"])?;
    let results = sawkit::par::map(common.exec, &files, |p| -> Result<Processed<AfmReport>> {
        let mut image = parse_afm_grid(&read(p)?).with_context(|| p.display().to_string())?;
        let plane = match level_points {
            Some(pts) => {
                let (leveled, plane) = three_point_level(&image, pts.map(|[x, y]| (x, y)))?;
                image = leveled;
                Some(plane)
            }
            None => None,
        };
        if let Some(order) = line_order {
            image = remove_line_tilt(&image, order)?;
        }
        let rq = rms_roughness(&image);
        let (steps, step_err) = match fit_step_heights(&image) {
            Ok(s) => (Some(s), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let svg = common.emit_svg.then(|| {
            let hist = height_histogram(&image);
            let pm: Vec<f64> = hist.centers_m.iter().map(|c| c * 1e12).collect();
            let mut panel = Panel::new("Height histogram", "height (pm)", "pixels per bin")
                .with(Series::from_xy("histogram", Style::Bars, &pm, &hist.counts));
            if let Some(s) = &steps {
                let y: Vec<f64> = hist
                    .centers_m
                    .iter()
                    .map(|x| {
                        (0..s.centers_m.len())
                            .map(|k| {
                                s.amplitudes[k]
                                    * (-0.5 * ((x - s.centers_m[k]) / s.sigmas_m[k]).powi(2)).exp()
                            })
                            .sum()
                    })
                    .collect();
                panel = panel.with(Series::from_xy("Gaussian fit", Style::Line, &pm, &y));
                panel.markers_x = s.centers_m.iter().map(|c| c * 1e12).collect();
            }
            render(&format!("{}: Rq = {:.4e} m", stem_of(p), rq), &[panel])
        });
        Ok(Processed {
            report: AfmReport {
                nx: image.nx(),
                ny: image.ny(),
                line_order,
                plane,
                rq_m: rq,
                step_heights: steps,
                step_heights_error: step_err,
            },
            svg,
        })
    });
    let ok: Vec<(String, f64)> = files
        .iter()
        .zip(&results)
        .filter_map(|(f, r)| r.as_ref().ok().map(|p| (stem_of(f), p.report.rq_m)))
        .collect();
    let summary = write_batch(&common.out, &files, results, common.keep_going)?;
    if ok.len() > 1 && (summary.failed == 0 || common.keep_going) {
        let n = ok.len() as f64;
        let mean = ok.iter().map(|o| o.1).sum::<f64>() / n;
        let var = ok.iter().map(|o| (o.1 - mean).powi(2)).sum::<f64>() / (n - 1.0);
        write_json(
            &common.out.join("afm_summary.json"),
            &AfmSummary {
                inputs: ok.iter().map(|o| o.0.clone()).collect(),
                n_images: ok.len(),
                rq_mean_m: mean,
                rq_stdev_m: var.sqrt(),
            },
        )?;
    }
    Ok(summary)
}

pub fn walkoff_cmd(
    common: &Common,
    inputs: &[PathBuf],
    half_width: usize,
    tangency_threshold_deg: f64,
) -> Result<BatchSummary> {
    let files = expand_inputs(inputs, &["csv"])?;
    run_batch(common, &files, |p| -> Result<Processed<WalkoffReport>> {
        let curve = parse_walkoff_csv(&read(p)?).with_context(|| p.display().to_string())?;
        let (report, searched) = analyze(&curve, half_width, tangency_threshold_deg)?;
        let svg = common.emit_svg.then(|| {
            let mut panel =
                Panel::new("Walk-off angle", "propagation angle θ (deg)", "η (deg)").with(
                    Series::from_xy("raw", Style::Points, curve.theta_deg(), curve.eta_deg()),
                );
            if half_width > 0 {
                panel = panel.with(Series::from_xy(
                    format!("smoothed (half width {half_width})"),
                    Style::Line,
                    searched.theta_deg(),
                    searched.eta_deg(),
                ));
            }
            panel.markers_x = report.zeros.iter().map(|z| z.theta_deg).collect();
            render(
                &format!("{}: {} zero crossing(s)", stem_of(p), report.zeros.len()),
                &[panel],
            )
        });
        Ok(Processed { report, svg })
    })
}
