//! Shared domain types, their text formats and synthetic generators.
//!
//! Every constructor validates its invariants, so a value of any of these
//! types is always safe to hand to the analysis modules.

mod io;
mod synth;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{
    parse_afm_grid, parse_power_sweep_csv, parse_s11_csv, parse_temperature_sweep_csv,
    parse_walkoff_csv, parse_xps_csv, write_afm_grid, write_power_sweep_csv, write_s11_csv,
    write_temperature_sweep_csv, write_walkoff_csv, write_xps_csv,
};
pub use synth::{
    linewidth_grid, noise_sigma_for_snr_db, synth_afm_gaussian_noise, synth_afm_terraces,
    synth_power_sweep, synth_s11, synth_temperature_sweep, synth_walkoff_sine,
    synth_xps_peak_on_step, DarkModeSpec, S11Spec, TerraceSpec, XpsPeakSpec, XpsTruth,
};

/// Free-form key/value annotations carried alongside a trace.
pub type Meta = BTreeMap<String, String>;

/// A frequency-indexed complex reflection trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexSpectrum {
    frequencies_hz: Vec<f64>,
    values: Vec<Complex64>,
    meta: Meta,
}

pub const MIN_SPECTRUM_LEN: usize = 8;

impl ComplexSpectrum {
    pub fn new(frequencies_hz: Vec<f64>, values: Vec<Complex64>, meta: Meta) -> Result<Self> {
        if frequencies_hz.len() != values.len() {
            return Err(Error::invalid(
                "spectrum",
                format!(
                    "{} frequencies but {} values",
                    frequencies_hz.len(),
                    values.len()
                ),
            ));
        }
        if frequencies_hz.len() < MIN_SPECTRUM_LEN {
            return Err(Error::invalid(
                "spectrum",
                format!(
                    "{} samples, need at least {MIN_SPECTRUM_LEN}",
                    frequencies_hz.len()
                ),
            ));
        }
        if let Some(i) = frequencies_hz.iter().position(|f| !f.is_finite()) {
            return Err(Error::invalid(
                "spectrum",
                format!("frequency {i} is not finite"),
            ));
        }
        if let Some(i) = frequencies_hz.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "spectrum",
                format!("frequency axis not strictly increasing at sample {}", i + 1),
            ));
        }
        if let Some(i) = values
            .iter()
            .position(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::invalid(
                "spectrum",
                format!("value {i} is not finite"),
            ));
        }
        Ok(ComplexSpectrum {
            frequencies_hz,
            values,
            meta,
        })
    }

    pub fn frequencies_hz(&self) -> &[f64] {
        &self.frequencies_hz
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn meta(&self) -> &Meta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.meta.insert(key.into(), value.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperaturePoint {
    pub temperature_k: f64,
    pub f0_hz: f64,
    pub f0_err_hz: f64,
}

/// Fitted resonance frequencies of one mode across a temperature sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureSweepSeries {
    points: Vec<TemperaturePoint>,
    reference_temperature_k: f64,
}

pub const DEFAULT_REFERENCE_TEMPERATURE_K: f64 = 0.200;

impl TemperatureSweepSeries {
    pub fn new(points: Vec<TemperaturePoint>, reference_temperature_k: f64) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if !(p.temperature_k > 0.0 && p.temperature_k <= 1.0) {
                return Err(Error::invalid(
                    "temperature sweep",
                    format!(
                        "point {i}: temperature {} K outside (0, 1]",
                        p.temperature_k
                    ),
                ));
            }
            if !(p.f0_hz > 0.0 && p.f0_hz.is_finite()) {
                return Err(Error::invalid(
                    "temperature sweep",
                    format!("point {i}: f0 {} Hz is not positive", p.f0_hz),
                ));
            }
            if !(p.f0_err_hz >= 0.0 && p.f0_err_hz.is_finite()) {
                return Err(Error::invalid(
                    "temperature sweep",
                    format!("point {i}: negative or non-finite f0 error"),
                ));
            }
        }
        let mut temps: Vec<f64> = points.iter().map(|p| p.temperature_k).collect();
        temps.sort_by(f64::total_cmp);
        temps.dedup();
        if temps.len() < 4 {
            return Err(Error::invalid(
                "temperature sweep",
                format!("{} distinct temperatures, need at least 4", temps.len()),
            ));
        }
        if !(reference_temperature_k > 0.0 && reference_temperature_k <= 1.0) {
            return Err(Error::invalid(
                "temperature sweep",
                format!("reference temperature {reference_temperature_k} K outside (0, 1]"),
            ));
        }
        Ok(TemperatureSweepSeries {
            points,
            reference_temperature_k,
        })
    }

    pub fn points(&self) -> &[TemperaturePoint] {
        &self.points
    }

    pub fn reference_temperature_k(&self) -> f64 {
        self.reference_temperature_k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerPoint {
    pub mean_phonon_number: f64,
    pub qi: f64,
    pub qi_err: f64,
}

/// Internal quality factor versus mean phonon number at fixed temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSweepSeries {
    points: Vec<PowerPoint>,
    temperature_k: f64,
    f0_hz: f64,
}

impl PowerSweepSeries {
    pub fn new(points: Vec<PowerPoint>, temperature_k: f64, f0_hz: f64) -> Result<Self> {
        if points.len() < 5 {
            return Err(Error::invalid(
                "power sweep",
                format!("{} points, need at least 5", points.len()),
            ));
        }
        for (i, p) in points.iter().enumerate() {
            if !(p.mean_phonon_number > 0.0 && p.mean_phonon_number.is_finite()) {
                return Err(Error::invalid(
                    "power sweep",
                    format!("point {i}: phonon number must be positive"),
                ));
            }
            if !(p.qi > 0.0 && p.qi.is_finite()) {
                return Err(Error::invalid(
                    "power sweep",
                    format!("point {i}: Qi must be positive"),
                ));
            }
            if !(p.qi_err >= 0.0 && p.qi_err.is_finite()) {
                return Err(Error::invalid(
                    "power sweep",
                    format!("point {i}: Qi error must be non-negative"),
                ));
            }
        }
        let (lo, hi) = points.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), p| {
            (lo.min(p.mean_phonon_number), hi.max(p.mean_phonon_number))
        });
        if (hi / lo).log10() < 3.0 {
            return Err(Error::invalid(
                "power sweep",
                format!(
                    "phonon numbers span {:.2} decades, need 3",
                    (hi / lo).log10()
                ),
            ));
        }
        if !(temperature_k > 0.0 && f0_hz > 0.0) {
            return Err(Error::invalid(
                "power sweep",
                "temperature and f0 must be positive",
            ));
        }
        Ok(PowerSweepSeries {
            points,
            temperature_k,
            f0_hz,
        })
    }

    pub fn points(&self) -> &[PowerPoint] {
        &self.points
    }

    pub fn temperature_k(&self) -> f64 {
        self.temperature_k
    }

    pub fn f0_hz(&self) -> f64 {
        self.f0_hz
    }

    /// log10 of the ratio between the largest and smallest phonon number.
    pub fn decades(&self) -> f64 {
        let (lo, hi) = self
            .points
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), p| {
                (lo.min(p.mean_phonon_number), hi.max(p.mean_phonon_number))
            });
        (hi / lo).log10()
    }
}

/// The photoelectron line an XPS window covers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ElementLine {
    C1s,
    O1s,
    Nb3d,
    Li1s,
    Other(String),
}

impl ElementLine {
    pub fn as_str(&self) -> &str {
        match self {
            ElementLine::C1s => "C1s",
            ElementLine::O1s => "O1s",
            ElementLine::Nb3d => "Nb3d",
            ElementLine::Li1s => "Li1s",
            ElementLine::Other(s) => s,
        }
    }
}

impl fmt::Display for ElementLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ElementLine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::invalid("element line", "empty label"));
        }
        Ok(match s {
            "C1s" => ElementLine::C1s,
            "O1s" => ElementLine::O1s,
            "Nb3d" => ElementLine::Nb3d,
            "Li1s" => ElementLine::Li1s,
            other => ElementLine::Other(other.to_string()),
        })
    }
}

impl From<ElementLine> for String {
    fn from(e: ElementLine) -> String {
        e.as_str().to_string()
    }
}

impl TryFrom<String> for ElementLine {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Binding-energy-indexed photoelectron counts for one line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XpsSpectrum {
    binding_energy_ev: Vec<f64>,
    counts: Vec<f64>,
    element_line: ElementLine,
}

impl XpsSpectrum {
    pub fn new(
        binding_energy_ev: Vec<f64>,
        counts: Vec<f64>,
        element_line: ElementLine,
    ) -> Result<Self> {
        if binding_energy_ev.len() != counts.len() {
            return Err(Error::invalid(
                "XPS spectrum",
                format!(
                    "{} energies but {} counts",
                    binding_energy_ev.len(),
                    counts.len()
                ),
            ));
        }
        if binding_energy_ev.len() < 2 {
            return Err(Error::invalid("XPS spectrum", "fewer than 2 samples"));
        }
        if let Some(i) = counts.iter().position(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::invalid(
                "XPS spectrum",
                format!("count {i} is negative or not finite"),
            ));
        }
        if binding_energy_ev.iter().any(|e| !e.is_finite()) {
            return Err(Error::invalid("XPS spectrum", "non-finite binding energy"));
        }
        let increasing = binding_energy_ev.windows(2).all(|w| w[1] > w[0]);
        let decreasing = binding_energy_ev.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return Err(Error::invalid(
                "XPS spectrum",
                "binding-energy axis is not strictly monotone",
            ));
        }
        Ok(XpsSpectrum {
            binding_energy_ev,
            counts,
            element_line,
        })
    }

    pub fn binding_energy_ev(&self) -> &[f64] {
        &self.binding_energy_ev
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn element_line(&self) -> &ElementLine {
        &self.element_line
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Returns a copy with every binding energy moved by `shift_ev`.
    pub fn shifted(&self, shift_ev: f64) -> XpsSpectrum {
        XpsSpectrum {
            binding_energy_ev: self
                .binding_energy_ev
                .iter()
                .map(|e| e + shift_ev)
                .collect(),
            counts: self.counts.clone(),
            element_line: self.element_line.clone(),
        }
    }
}

/// Row-major height map in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AfmImage {
    nx: usize,
    ny: usize,
    dx_m: f64,
    dy_m: f64,
    heights_m: Vec<f64>,
}

pub const MIN_AFM_SIDE: usize = 16;

impl AfmImage {
    pub fn new(nx: usize, ny: usize, dx_m: f64, dy_m: f64, heights_m: Vec<f64>) -> Result<Self> {
        if nx < MIN_AFM_SIDE || ny < MIN_AFM_SIDE {
            return Err(Error::invalid(
                "AFM image",
                format!("{nx}x{ny} is smaller than {MIN_AFM_SIDE}x{MIN_AFM_SIDE}"),
            ));
        }
        if heights_m.len() != nx * ny {
            return Err(Error::invalid(
                "AFM image",
                format!("{} heights for a {nx}x{ny} grid", heights_m.len()),
            ));
        }
        if !(dx_m > 0.0 && dy_m > 0.0 && dx_m.is_finite() && dy_m.is_finite()) {
            return Err(Error::invalid("AFM image", "pixel pitch must be positive"));
        }
        if let Some(i) = heights_m.iter().position(|h| !h.is_finite()) {
            return Err(Error::invalid(
                "AFM image",
                format!("height at row {}, column {} is not finite", i / nx, i % nx),
            ));
        }
        Ok(AfmImage {
            nx,
            ny,
            dx_m,
            dy_m,
            heights_m,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn pixel_pitch_m(&self) -> (f64, f64) {
        (self.dx_m, self.dy_m)
    }

    pub fn heights_m(&self) -> &[f64] {
        &self.heights_m
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.heights_m[y * self.nx..(y + 1) * self.nx]
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.heights_m[y * self.nx + x]
    }

    /// Same geometry, new heights. Caller guarantees finiteness.
    pub(crate) fn with_heights(&self, heights_m: Vec<f64>) -> AfmImage {
        debug_assert_eq!(heights_m.len(), self.heights_m.len());
        AfmImage { heights_m, ..*self }
    }

    pub fn map_heights(&self, f: impl Fn(f64) -> f64) -> Result<AfmImage> {
        AfmImage::new(
            self.nx,
            self.ny,
            self.dx_m,
            self.dy_m,
            self.heights_m.iter().map(|h| f(*h)).collect(),
        )
    }
}

/// Tabulated beam-steering angle versus drive orientation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkoffCurve {
    theta_deg: Vec<f64>,
    eta_deg: Vec<f64>,
}

impl WalkoffCurve {
    pub fn new(theta_deg: Vec<f64>, eta_deg: Vec<f64>) -> Result<Self> {
        if theta_deg.len() != eta_deg.len() {
            return Err(Error::invalid(
                "walk-off curve",
                format!("{} angles but {} samples", theta_deg.len(), eta_deg.len()),
            ));
        }
        if theta_deg.len() < 3 {
            return Err(Error::invalid("walk-off curve", "fewer than 3 samples"));
        }
        if theta_deg.iter().chain(&eta_deg).any(|v| !v.is_finite()) {
            return Err(Error::invalid("walk-off curve", "non-finite sample"));
        }
        if let Some(i) = theta_deg.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "walk-off curve",
                format!("theta not strictly increasing at sample {}", i + 1),
            ));
        }
        let span = theta_deg[theta_deg.len() - 1] - theta_deg[0];
        if span < 90.0 {
            return Err(Error::invalid(
                "walk-off curve",
                format!("theta spans {span}°, need at least 90°"),
            ));
        }
        Ok(WalkoffCurve { theta_deg, eta_deg })
    }

    pub fn theta_deg(&self) -> &[f64] {
        &self.theta_deg
    }

    pub fn eta_deg(&self) -> &[f64] {
        &self.eta_deg
    }

    pub fn len(&self) -> usize {
        self.theta_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta_deg.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| 1e6 + i as f64).collect()
    }

    #[test]
    fn spectrum_rejects_short_and_unsorted() {
        let v = vec![Complex64::new(1.0, 0.0); 7];
        assert!(ComplexSpectrum::new(grid(7), v, Meta::new()).is_err());
        let mut f = grid(8);
        f.swap(2, 3);
        let v = vec![Complex64::new(1.0, 0.0); 8];
        assert!(ComplexSpectrum::new(f, v, Meta::new()).is_err());
    }

    #[test]
    fn spectrum_rejects_nan_values() {
        let mut v = vec![Complex64::new(1.0, 0.0); 8];
        v[4].im = f64::NAN;
        assert!(ComplexSpectrum::new(grid(8), v, Meta::new()).is_err());
    }

    #[test]
    fn temperature_sweep_needs_four_distinct_points() {
        let pts: Vec<_> = [0.01, 0.02, 0.02, 0.05]
            .iter()
            .map(|&t| TemperaturePoint {
                temperature_k: t,
                f0_hz: 1e9,
                f0_err_hz: 0.0,
            })
            .collect();
        assert!(TemperatureSweepSeries::new(pts, 0.2).is_err());
    }

    #[test]
    fn temperature_sweep_rejects_out_of_range() {
        let pts: Vec<_> = [0.01, 0.02, 0.05, 1.5]
            .iter()
            .map(|&t| TemperaturePoint {
                temperature_k: t,
                f0_hz: 1e9,
                f0_err_hz: 0.0,
            })
            .collect();
        assert!(TemperatureSweepSeries::new(pts, 0.2).is_err());
    }

    #[test]
    fn power_sweep_needs_three_decades() {
        let pts: Vec<_> = [1.0, 2.0, 10.0, 50.0, 900.0]
            .iter()
            .map(|&n| PowerPoint {
                mean_phonon_number: n,
                qi: 1e3,
                qi_err: 0.0,
            })
            .collect();
        assert!(PowerSweepSeries::new(pts, 0.01, 6.9e8).is_err());
    }

    #[test]
    fn xps_accepts_decreasing_axis_rejects_negative_counts() {
        let be: Vec<f64> = (0..10).map(|i| 540.0 - i as f64).collect();
        assert!(XpsSpectrum::new(be.clone(), vec![1.0; 10], ElementLine::O1s).is_ok());
        let mut c = vec![1.0; 10];
        c[3] = -0.5;
        assert!(XpsSpectrum::new(be, c, ElementLine::O1s).is_err());
    }

    #[test]
    fn element_line_round_trips_through_strings() {
        for s in ["C1s", "O1s", "Nb3d", "Li1s", "Nb4s"] {
            let e: ElementLine = s.parse().unwrap();
            assert_eq!(e.to_string(), s);
        }
        assert_eq!(
            "Mg2p".parse::<ElementLine>().unwrap(),
            ElementLine::Other("Mg2p".into())
        );
    }

    #[test]
    fn afm_rejects_small_and_nonfinite() {
        assert!(AfmImage::new(15, 16, 1e-9, 1e-9, vec![0.0; 240]).is_err());
        let mut h = vec![0.0; 256];
        h[17] = f64::INFINITY;
        assert!(AfmImage::new(16, 16, 1e-9, 1e-9, h).is_err());
    }

    #[test]
    fn walkoff_curve_needs_ninety_degrees() {
        let t: Vec<f64> = (0..80).map(|i| i as f64).collect();
        assert!(WalkoffCurve::new(t.clone(), vec![0.0; 80]).is_err());
        let t: Vec<f64> = (0..=90).map(|i| i as f64).collect();
        assert!(WalkoffCurve::new(t, vec![0.0; 91]).is_ok());
    }
}
