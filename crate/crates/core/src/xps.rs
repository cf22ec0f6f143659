//! XPS quantification: charge referencing, Shirley background, pseudo-Voigt
//! band deconvolution and sensitivity-weighted atomic percentages.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::constants::{NB3D52_REFERENCE_EV, O1S_BAND_CENTERS_EV};
use crate::error::{Error, Result};
use crate::lsq::{self, Bounds, Options, Problem};
use crate::spectra::{ElementLine, XpsSpectrum};

/// Position of the strongest Nb3d sample, refined by a parabola through it
/// and its neighbours.
pub fn detect_peak_ev(spectrum: &XpsSpectrum) -> f64 {
    let e = spectrum.binding_energy_ev();
    let y = spectrum.counts();
    let (i, _) = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("spectrum is non-empty");
    if i == 0 || i + 1 == y.len() {
        return e[i];
    }
    let (ym, y0, yp) = (y[i - 1], y[i], y[i + 1]);
    let curvature = ym - 2.0 * y0 + yp;
    if curvature >= 0.0 {
        return e[i];
    }
    let t = (0.5 * (ym - yp) / curvature).clamp(-0.5, 0.5);
    let h = if t >= 0.0 {
        e[i + 1] - e[i]
    } else {
        e[i] - e[i - 1]
    };
    e[i] + t * h
}

/// Translates every axis so the Nb3d5/2 line lands on its reference energy.
/// Returns the shifted spectra and the applied shift in eV.
///
/// With `measured_nb3d52_ev` absent the position is taken from the Nb3d
/// spectrum's maximum.
pub fn charge_shift(
    spectra: &[XpsSpectrum],
    measured_nb3d52_ev: Option<f64>,
) -> Result<(Vec<XpsSpectrum>, f64)> {
    let measured = match measured_nb3d52_ev {
        Some(m) if m.is_finite() => m,
        Some(_) => return Err(Error::invalid("Nb3d5/2 position", "must be finite")),
        None => {
            let nb = spectra
                .iter()
                .find(|s| *s.element_line() == ElementLine::Nb3d)
                .ok_or(Error::MissingReferenceLine)?;
            detect_peak_ev(nb)
        }
    };
    let shift = NB3D52_REFERENCE_EV - measured;
    Ok((spectra.iter().map(|s| s.shifted(shift)).collect(), shift))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShirleyOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ShirleyOptions {
    fn default() -> Self {
        ShirleyOptions {
            tol: 1e-6,
            max_iter: 50,
        }
    }
}

/// Converged Shirley background over a window, in ascending binding energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShirleyBackground {
    pub energy_ev: Vec<f64>,
    pub counts: Vec<f64>,
    pub background: Vec<f64>,
    pub iterations: usize,
}

impl ShirleyBackground {
    /// Counts minus background.
    pub fn subtracted(&self) -> Vec<f64> {
        self.counts
            .iter()
            .zip(&self.background)
            .map(|(c, b)| c - b)
            .collect()
    }

    /// Trapezoid area of the background-subtracted counts.
    pub fn peak_area(&self) -> f64 {
        trapezoid(&self.energy_ev, &self.subtracted())
    }
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1]))
        .sum()
}

/// Samples of `spectrum` inside `window`, sorted by ascending energy.
fn window_ascending(spectrum: &XpsSpectrum, window: (f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
    let (lo, hi) = (window.0.min(window.1), window.0.max(window.1));
    let e = spectrum.binding_energy_ev();
    let (e_min, e_max) = (
        e.iter().cloned().fold(f64::INFINITY, f64::min),
        e.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    if lo < e_min || hi > e_max {
        return Err(Error::invalid(
            "Shirley window",
            format!("[{lo}, {hi}] eV lies outside the spectrum range [{e_min}, {e_max}] eV"),
        ));
    }
    let mut pairs: Vec<(f64, f64)> = e
        .iter()
        .zip(spectrum.counts())
        .filter(|(x, _)| **x >= lo && **x <= hi)
        .map(|(x, y)| (*x, *y))
        .collect();
    if pairs.len() < 5 {
        return Err(Error::invalid(
            "Shirley window",
            format!("{} points in window, need at least 5", pairs.len()),
        ));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs.into_iter().unzip())
}

/// Iterative Shirley background over `window` (eV, either order).
///
/// The background rises from the low-energy endpoint level to the
/// high-energy one in proportion to the background-subtracted area
/// accumulated from the low-energy end. Endpoint levels are 3-sample
/// averages. The iteration starts from the monotone lower envelope of the
/// data and the background is clipped to the data every pass.
pub fn shirley_background(
    spectrum: &XpsSpectrum,
    window: (f64, f64),
    opts: ShirleyOptions,
) -> Result<ShirleyBackground> {
    let (e, y) = window_ascending(spectrum, window)?;
    let n = y.len();
    let i_lo = y[..3].iter().sum::<f64>() / 3.0;
    let i_hi = y[n - 3..].iter().sum::<f64>() / 3.0;
    let (b_min, b_max) = (i_lo.min(i_hi), i_lo.max(i_hi));
    let y_scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let eps = f64::EPSILON * y_scale.max(1.0);
    let threshold = opts.tol * ((i_hi - i_lo).abs() + eps);

    // Running minimum from the high-level side.
    let mut b = vec![0.0; n];
    if i_hi >= i_lo {
        let mut m = f64::INFINITY;
        for i in (0..n).rev() {
            m = m.min(y[i]);
            b[i] = m.clamp(b_min, b_max).min(y[i]);
        }
    } else {
        let mut m = f64::INFINITY;
        for i in 0..n {
            m = m.min(y[i]);
            b[i] = m.clamp(b_min, b_max).min(y[i]);
        }
    }

    let mut cumulative = vec![0.0; n];
    for iteration in 1..=opts.max_iter {
        for i in 1..n {
            let d0 = y[i - 1] - b[i - 1];
            let d1 = y[i] - b[i];
            cumulative[i] = cumulative[i - 1] + 0.5 * (e[i] - e[i - 1]) * (d0 + d1);
        }
        let total = cumulative[n - 1];
        // Net area below what the tolerance resolves: nothing sits on the
        // step, so the envelope is the background.
        if total.abs() <= threshold * (e[n - 1] - e[0]) {
            return Ok(ShirleyBackground {
                energy_ev: e,
                counts: y,
                background: b,
                iterations: iteration,
            });
        }
        let mut change = 0.0f64;
        for i in 0..n {
            let next = (i_lo + (i_hi - i_lo) * cumulative[i] / total).min(y[i]);
            change = change.max((next - b[i]).abs());
            b[i] = next;
        }
        if change < threshold {
            return Ok(ShirleyBackground {
                energy_ev: e,
                counts: y,
                background: b,
                iterations: iteration,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
    })
}

/// Pseudo-Voigt `mix·L + (1 − mix)·G`, both normalized to unit area.
/// `gamma` is the Lorentzian half width at half maximum.
pub fn pseudo_voigt(x: f64, center: f64, sigma: f64, gamma: f64, mix: f64) -> f64 {
    let dx = x - center;
    let g =
        (-dx * dx / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let l = gamma / (std::f64::consts::PI * (dx * dx + gamma * gamma));
    mix * l + (1.0 - mix) * g
}

pub const DEFAULT_MIX: f64 = 0.3;
pub const DEFAULT_CENTER_FREEDOM_EV: f64 = 0.5;

/// One band. `amplitude` is the band's area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub center_ev: f64,
    pub sigma_ev: f64,
    pub gamma_ev: f64,
    #[serde(default = "default_mix")]
    pub mix: f64,
    #[serde(default)]
    pub amplitude: f64,
    /// Allowed center range; defaults to ±0.5 eV around `center_ev`.
    #[serde(default)]
    pub center_bounds_ev: Option<(f64, f64)>,
}

fn default_mix() -> f64 {
    DEFAULT_MIX
}

impl Band {
    pub fn new(center_ev: f64, sigma_ev: f64, gamma_ev: f64) -> Self {
        Band {
            center_ev,
            sigma_ev,
            gamma_ev,
            mix: DEFAULT_MIX,
            amplitude: 0.0,
            center_bounds_ev: None,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.amplitude * pseudo_voigt(x, self.center_ev, self.sigma_ev, self.gamma_ev, self.mix)
    }

    fn center_bounds(&self) -> (f64, f64) {
        self.center_bounds_ev.unwrap_or((
            self.center_ev - DEFAULT_CENTER_FREEDOM_EV,
            self.center_ev + DEFAULT_CENTER_FREEDOM_EV,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandModel {
    pub bands: Vec<Band>,
}

impl BandModel {
    /// Metal-oxide, C=O and C–O bands of the O1s line.
    pub fn o1s_default() -> Self {
        BandModel {
            bands: O1S_BAND_CENTERS_EV
                .iter()
                .map(|&c| Band::new(c, 0.6, 0.3))
                .collect(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.bands.iter().map(|b| b.eval(x)).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.bands.is_empty() {
            return Err(Error::invalid("band model", "no bands"));
        }
        for (i, b) in self.bands.iter().enumerate() {
            if !(b.sigma_ev > 0.0 && b.gamma_ev > 0.0) {
                return Err(Error::invalid(
                    "band model",
                    format!("band {i}: widths must be positive"),
                ));
            }
            if !(0.0..=1.0).contains(&b.mix) {
                return Err(Error::invalid(
                    "band model",
                    format!("band {i}: mix must be in [0, 1]"),
                ));
            }
            if !(b.amplitude >= 0.0) {
                return Err(Error::invalid(
                    "band model",
                    format!("band {i}: amplitude must be >= 0"),
                ));
            }
            let (lo, hi) = b.center_bounds();
            if !(lo <= b.center_ev && b.center_ev <= hi) {
                return Err(Error::invalid(
                    "band model",
                    format!("band {i}: center outside its bounds"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandFit {
    pub model: BandModel,
    pub areas: Vec<f64>,
    pub area_errors: Vec<f64>,
    /// Largest |correlation| between any two band areas; 1 when a pair is
    /// not separately identifiable.
    pub max_area_correlation: f64,
    pub degenerate: bool,
    pub residual_rms: f64,
    pub n_iterations: usize,
}

/// Correlation above which two band areas are reported as degenerate.
pub const DEGENERATE_CORRELATION: f64 = 0.95;

/// Per band: `[center, width scale, amplitude]`. The Gaussian and Lorentzian
/// widths scale together from the template and mix stays fixed; with
/// independent widths a vanishing Lorentzian width hides area between
/// samples.
struct BandProblem<'a> {
    x: &'a [f64],
    y: &'a [f64],
    template: &'a BandModel,
    scales: Vec<f64>,
}

impl BandProblem<'_> {
    fn model(&self, p: &[f64]) -> BandModel {
        BandModel {
            bands: self
                .template
                .bands
                .iter()
                .enumerate()
                .map(|(k, b)| Band {
                    center_ev: p[3 * k],
                    sigma_ev: p[3 * k + 1] * b.sigma_ev,
                    gamma_ev: p[3 * k + 1] * b.gamma_ev,
                    amplitude: p[3 * k + 2],
                    ..b.clone()
                })
                .collect(),
        }
    }
}

impl Problem for BandProblem<'_> {
    fn n_params(&self) -> usize {
        3 * self.template.bands.len()
    }

    fn n_residuals(&self) -> usize {
        self.x.len()
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        let m = self.model(p);
        for ((o, &x), &y) in out.iter_mut().zip(self.x).zip(self.y) {
            *o = m.eval(x) - y;
        }
    }

    fn scales(&self) -> Vec<f64> {
        self.scales.clone()
    }
}

/// Fits `model` to a background-subtracted signal by damped least squares
/// over centers, one width scale per band, and amplitudes. Bands with zero starting amplitude
/// are seeded from the signal height at their center.
pub fn fit_bands(energy_ev: &[f64], signal: &[f64], model: &BandModel) -> Result<BandFit> {
    model.validate()?;
    if energy_ev.len() != signal.len() || energy_ev.len() < 5 {
        return Err(Error::invalid(
            "band fit",
            "need >= 5 matching energy/signal samples",
        ));
    }
    let n = energy_ev.len();
    let step = (energy_ev[n - 1] - energy_ev[0]).abs() / (n - 1) as f64;
    let total_area = trapezoid(energy_ev, signal).abs().max(f64::MIN_POSITIVE);

    let mut seeded = model.clone();
    for b in seeded.bands.iter_mut() {
        if b.amplitude == 0.0 {
            let k = nearest(energy_ev, b.center_ev);
            let peak = pseudo_voigt(b.center_ev, b.center_ev, b.sigma_ev, b.gamma_ev, b.mix);
            b.amplitude = (signal[k].max(0.0) / peak) / model.bands.len() as f64;
        }
    }
    let mut x0 = Vec::new();
    let mut bounds = Bounds::unbounded(3 * seeded.bands.len());
    let mut scales = Vec::new();
    for (k, b) in seeded.bands.iter().enumerate() {
        x0.extend([b.center_ev, 1.0, b.amplitude]);
        let (lo, hi) = b.center_bounds();
        bounds.lower[3 * k] = lo;
        bounds.upper[3 * k] = hi;
        bounds.lower[3 * k + 1] = 1e-3 * step / b.sigma_ev.max(b.gamma_ev);
        bounds.lower[3 * k + 2] = 0.0;
        scales.extend([0.1, 1.0, total_area]);
    }
    let problem = BandProblem {
        x: energy_ev,
        y: signal,
        template: &seeded,
        scales,
    };
    // Widths held at the template first; freeing them from a poor start lets
    // a weak band trade shape with a strong neighbour and spike.
    let mut pinned = bounds.clone();
    for k in 0..seeded.bands.len() {
        pinned.lower[3 * k + 1] = 1.0;
        pinned.upper[3 * k + 1] = 1.0;
    }
    let start = lsq::minimize(&problem, &x0, &pinned, &Options::default())?;
    let out = lsq::minimize(&problem, &start.params, &bounds, &Options::default())?;
    let fitted = problem.model(&out.params);
    for (index, b) in fitted.bands.iter().enumerate() {
        let significant = b.amplitude > 1e-3 * total_area;
        if significant && b.sigma_ev.max(b.gamma_ev) < step {
            return Err(Error::BandCollapse {
                index,
                width: b.sigma_ev.max(b.gamma_ev),
                step,
            });
        }
    }
    let nb = fitted.bands.len();
    let areas: Vec<f64> = fitted.bands.iter().map(|b| b.amplitude).collect();
    let area_errors: Vec<f64> = (0..nb).map(|k| out.errors[3 * k + 2]).collect();
    let mut max_corr = 0.0f64;
    for i in 0..nb {
        for j in i + 1..nb {
            let (a, b) = (3 * i + 2, 3 * j + 2);
            let c = out.covariance_at(a, b) / (out.errors[a] * out.errors[b]);
            let c = if c.is_finite() { c.abs() } else { 1.0 };
            max_corr = max_corr.max(c);
        }
    }
    let degenerate =
        max_corr > DEGENERATE_CORRELATION || area_errors.iter().any(|e| !e.is_finite());
    Ok(BandFit {
        model: fitted,
        areas,
        area_errors,
        max_area_correlation: max_corr,
        degenerate,
        residual_rms: out.residual_rms(),
        n_iterations: start.iterations + out.iterations,
    })
}

fn nearest(x: &[f64], v: f64) -> usize {
    x.iter()
        .enumerate()
        .min_by(|a, b| (a.1 - v).abs().total_cmp(&(b.1 - v).abs()))
        .map(|(i, _)| i)
        .expect("non-empty")
}

/// Relative atomic sensitivity factor per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityTable {
    pub factors: BTreeMap<ElementLine, f64>,
}

impl SensitivityTable {
    pub fn new(factors: BTreeMap<ElementLine, f64>) -> Result<Self> {
        let t = SensitivityTable { factors };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for (line, f) in &self.factors {
            if !(*f > 0.0 && f.is_finite()) {
                return Err(Error::invalid(
                    "sensitivity table",
                    format!("factor for {line} must be positive"),
                ));
            }
        }
        Ok(())
    }

    pub fn uniform(lines: impl IntoIterator<Item = ElementLine>) -> Self {
        SensitivityTable {
            factors: lines.into_iter().map(|l| (l, 1.0)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatiosToNb {
    #[serde(rename = "O/Nb", skip_serializing_if = "Option::is_none", default)]
    pub o: Option<f64>,
    #[serde(rename = "C/Nb", skip_serializing_if = "Option::is_none", default)]
    pub c: Option<f64>,
    #[serde(rename = "Li/Nb", skip_serializing_if = "Option::is_none", default)]
    pub li: Option<f64>,
}

/// Ratios of O, C and Li to Nb from atomic percentages. Lines absent from
/// `percent` give `None`.
pub fn ratios_to_nb(percent: &BTreeMap<ElementLine, f64>) -> Result<RatiosToNb> {
    let nb = *percent
        .get(&ElementLine::Nb3d)
        .ok_or(Error::MissingNiobium)?;
    if !(nb > 0.0) {
        return Err(Error::MissingNiobium);
    }
    let ratio = |l: ElementLine| percent.get(&l).map(|p| p / nb);
    Ok(RatiosToNb {
        o: ratio(ElementLine::O1s),
        c: ratio(ElementLine::C1s),
        li: ratio(ElementLine::Li1s),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XpsQuantReport {
    pub atomic_percent: BTreeMap<ElementLine, f64>,
    /// Present when Nb3d was quantified.
    pub ratios_to_nb: Option<RatiosToNb>,
    /// Integrated background-subtracted area per line.
    pub areas: BTreeMap<ElementLine, f64>,
    /// Fitted band areas for lines with a band model.
    pub band_areas: BTreeMap<ElementLine, Vec<f64>>,
}

/// `C_x = (A_x/F_x) / Σ_i (A_i/F_i) × 100`.
pub fn atomic_percentages(
    areas: &BTreeMap<ElementLine, f64>,
    table: &SensitivityTable,
) -> Result<XpsQuantReport> {
    table.validate()?;
    let mut weighted = BTreeMap::new();
    for (line, &a) in areas {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::invalid(
                "area",
                format!("{line} area must be finite and >= 0"),
            ));
        }
        let f = table
            .factors
            .get(line)
            .ok_or_else(|| Error::MissingSensitivity(line.to_string()))?;
        weighted.insert(line.clone(), a / f);
    }
    let total: f64 = weighted.values().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroAreas);
    }
    let atomic_percent: BTreeMap<ElementLine, f64> = weighted
        .into_iter()
        .map(|(l, w)| (l, 100.0 * w / total))
        .collect();
    let ratios = if atomic_percent.contains_key(&ElementLine::Nb3d) {
        Some(ratios_to_nb(&atomic_percent)?)
    } else {
        None
    };
    Ok(XpsQuantReport {
        atomic_percent,
        ratios_to_nb: ratios,
        areas: areas.clone(),
        band_areas: BTreeMap::new(),
    })
}

/// Settings for [`quantify`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct QuantConfig {
    /// Shirley window per line (eV, after charge referencing); the full
    /// spectrum range when absent.
    pub windows: BTreeMap<ElementLine, (f64, f64)>,
    /// Band model per line to deconvolve after background subtraction.
    pub bands: BTreeMap<ElementLine, BandModel>,
    /// Measured Nb3d5/2 position; auto-detected when absent.
    pub nb3d52_measured_ev: Option<f64>,
    /// Skip charge referencing entirely.
    pub skip_charge_shift: bool,
    pub shirley: ShirleyOptions,
}

/// Per-line intermediate results, kept for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct LineQuant {
    pub line: ElementLine,
    pub background: ShirleyBackground,
    pub area: f64,
    pub bands: Option<BandFit>,
}

/// Full pipeline: charge shift, Shirley subtraction, optional band fits,
/// atomic percentages.
pub fn quantify(
    spectra: &[XpsSpectrum],
    table: &SensitivityTable,
    config: &QuantConfig,
) -> Result<(XpsQuantReport, Vec<LineQuant>, f64)> {
    if spectra.is_empty() {
        return Err(Error::invalid("XPS input", "no spectra"));
    }
    let (shifted, shift) = if config.skip_charge_shift {
        (spectra.to_vec(), 0.0)
    } else {
        charge_shift(spectra, config.nb3d52_measured_ev)?
    };
    let mut lines = Vec::new();
    let mut areas = BTreeMap::new();
    let mut band_areas = BTreeMap::new();
    for s in &shifted {
        let line = s.element_line().clone();
        if areas.contains_key(&line) {
            return Err(Error::invalid(
                "XPS input",
                format!("duplicate spectrum for {line}"),
            ));
        }
        let e = s.binding_energy_ev();
        let window = config
            .windows
            .get(&line)
            .copied()
            .unwrap_or((e[0].min(e[e.len() - 1]), e[0].max(e[e.len() - 1])));
        let bg = shirley_background(s, window, config.shirley)?;
        let area = bg.peak_area().max(0.0);
        let bands = match config.bands.get(&line) {
            Some(model) => {
                let fit = fit_bands(&bg.energy_ev, &bg.subtracted(), model)?;
                band_areas.insert(line.clone(), fit.areas.clone());
                Some(fit)
            }
            None => None,
        };
        areas.insert(line.clone(), area);
        lines.push(LineQuant {
            line,
            background: bg,
            area,
            bands,
        });
    }
    let mut report = atomic_percentages(&areas, table)?;
    report.band_areas = band_areas;
    Ok((report, lines, shift))
}
