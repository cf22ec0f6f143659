//! Deterministic synthetic data. Every generator is a pure function of its
//! arguments and seed; the forward models here are written out directly and
//! do not go through the fitting code they are used to validate.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{
    AfmImage, ComplexSpectrum, ElementLine, Meta, PowerPoint, PowerSweepSeries, TemperaturePoint,
    TemperatureSweepSeries, WalkoffCurve, XpsSpectrum, DEFAULT_REFERENCE_TEMPERATURE_K,
};
use crate::error::{Error, Result};
use crate::tls::{qi_power_model, tls_frequency_shift, PowerModelParams};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(r: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(r)
}

/// Dark mode coupled to the primary resonance. Rates in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DarkModeSpec {
    pub g_hz: f64,
    /// Dark-mode frequency minus primary frequency.
    pub offset_hz: f64,
    pub gamma_hz: f64,
}

/// Generator parameters for a reflection trace. Rates are cyclic (Hz), so
/// `Qi = f0/(κ−κe)` and `Qe = f0/κe`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct S11Spec {
    pub f0_hz: f64,
    pub kappa_hz: f64,
    pub kappa_e_hz: f64,
    pub dark: Option<DarkModeSpec>,
}

impl S11Spec {
    pub fn from_q(f0_hz: f64, qi: f64, qe: f64) -> Self {
        let kappa_e_hz = f0_hz / qe;
        S11Spec {
            f0_hz,
            kappa_hz: f0_hz / qi + kappa_e_hz,
            kappa_e_hz,
            dark: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.f0_hz > 0.0) {
            return Err(Error::invalid("S11 parameters", "f0 must be positive"));
        }
        if !(self.kappa_e_hz > 0.0 && self.kappa_hz > 0.0) {
            return Err(Error::invalid("S11 parameters", "rates must be positive"));
        }
        if self.kappa_e_hz >= self.kappa_hz {
            return Err(Error::invalid(
                "S11 parameters",
                format!(
                    "kappa_e ({}) must be below kappa ({})",
                    self.kappa_e_hz, self.kappa_hz
                ),
            ));
        }
        if let Some(d) = self.dark {
            if !(d.gamma_hz > 0.0 && d.g_hz >= 0.0 && d.offset_hz.is_finite()) {
                return Err(Error::invalid(
                    "S11 parameters",
                    "dark mode needs gamma > 0 and g >= 0",
                ));
            }
        }
        Ok(())
    }

    /// Noise-free response at `f_hz`.
    pub fn response(&self, f_hz: f64) -> Complex64 {
        let i = Complex64::i();
        let delta = f_hz - self.f0_hz;
        let mut denom = i * delta + self.kappa_hz / 2.0;
        if let Some(d) = self.dark {
            let delta_b = f_hz - (self.f0_hz + d.offset_hz);
            denom += d.g_hz * d.g_hz / (i * delta_b + d.gamma_hz / 2.0);
        }
        Complex64::new(1.0, 0.0) - self.kappa_e_hz / denom
    }
}

/// Uniform grid of `f0 ± span_linewidths·κ` with `points_per_linewidth`
/// samples per κ.
pub fn linewidth_grid(
    f0_hz: f64,
    kappa_hz: f64,
    points_per_linewidth: usize,
    span_linewidths: f64,
) -> Vec<f64> {
    let n = (2.0 * span_linewidths * points_per_linewidth as f64).round() as usize + 1;
    let start = f0_hz - span_linewidths * kappa_hz;
    let step = 2.0 * span_linewidths * kappa_hz / (n - 1) as f64;
    (0..n).map(|k| start + k as f64 * step).collect()
}

/// Per-quadrature noise σ that puts total complex noise power `snr_db`
/// below a unit-magnitude background.
pub fn noise_sigma_for_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 20.0) / std::f64::consts::SQRT_2
}

/// Samples `S11(f) = 1 − κe/(iΔ + κ/2 + g²/(iΔb + γ/2))` on `freq_grid` and
/// adds independent Gaussian noise of σ `noise_sigma` to each quadrature.
pub fn synth_s11(
    spec: &S11Spec,
    freq_grid: &[f64],
    noise_sigma: f64,
    seed: u64,
) -> Result<ComplexSpectrum> {
    spec.validate()?;
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::invalid("noise", "sigma must be non-negative"));
    }
    let mut r = rng(seed);
    let values = freq_grid
        .iter()
        .map(|&f| {
            let clean = spec.response(f);
            if noise_sigma > 0.0 {
                clean + Complex64::new(noise_sigma * normal(&mut r), noise_sigma * normal(&mut r))
            } else {
                clean
            }
        })
        .collect();
    ComplexSpectrum::new(freq_grid.to_vec(), values, Meta::new())
}

/// Resonance frequencies following the TLS shift relative to 200 mK, plus
/// Gaussian frequency noise. `f0_err_hz` of each point is set to the noise σ.
pub fn synth_temperature_sweep(
    f_delta_tls: f64,
    f0_hz: f64,
    temperatures_k: &[f64],
    noise_sigma_hz: f64,
    seed: u64,
) -> Result<TemperatureSweepSeries> {
    if temperatures_k.is_empty() {
        return Err(Error::invalid(
            "temperature sweep",
            "empty temperature list",
        ));
    }
    if !(f_delta_tls >= 0.0 && f0_hz > 0.0 && noise_sigma_hz >= 0.0) {
        return Err(Error::invalid(
            "temperature sweep",
            "F·δ0 and noise must be non-negative, f0 positive",
        ));
    }
    if let Some(t) = temperatures_k.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
        return Err(Error::invalid(
            "temperature sweep",
            format!("temperature {t} K outside (0, 1]"),
        ));
    }
    let t_ref = DEFAULT_REFERENCE_TEMPERATURE_K;
    let mut r = rng(seed);
    let points = temperatures_k
        .iter()
        .map(|&t| {
            let shift = tls_frequency_shift(f_delta_tls, f0_hz, t, t_ref)?;
            let noise = if noise_sigma_hz > 0.0 {
                noise_sigma_hz * normal(&mut r)
            } else {
                0.0
            };
            Ok(TemperaturePoint {
                temperature_k: t,
                f0_hz: f0_hz + f0_hz * shift + noise,
                f0_err_hz: noise_sigma_hz,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    TemperatureSweepSeries::new(points, t_ref)
}

/// Qi(n) from the saturation model with multiplicative Gaussian noise of
/// relative σ `rel_noise`; `qi_err` is set to `rel_noise·Qi_model`.
pub fn synth_power_sweep(
    params: &PowerModelParams,
    phonon_numbers: &[f64],
    rel_noise: f64,
    seed: u64,
) -> Result<PowerSweepSeries> {
    params.validate()?;
    if !(0.0..0.5).contains(&rel_noise) {
        return Err(Error::invalid(
            "power sweep",
            "relative noise must be in [0, 0.5)",
        ));
    }
    let mut r = rng(seed);
    let points = phonon_numbers
        .iter()
        .map(|&n| {
            let q = qi_power_model(params, n);
            let noisy = if rel_noise > 0.0 {
                q * (1.0 + rel_noise * normal(&mut r))
            } else {
                q
            };
            PowerPoint {
                mean_phonon_number: n,
                qi: noisy,
                qi_err: rel_noise * q,
            }
        })
        .collect();
    PowerSweepSeries::new(points, params.temperature_k, params.f0_hz)
}

/// One pseudo-Voigt peak sitting on a Shirley-type step.
#[derive(Debug, Clone, PartialEq)]
pub struct XpsPeakSpec {
    pub line: ElementLine,
    pub center_ev: f64,
    pub sigma_ev: f64,
    /// Lorentzian half width at half maximum.
    pub gamma_ev: f64,
    pub mix: f64,
    pub area: f64,
    /// Background level on the low binding-energy side.
    pub low_level: f64,
    /// Background rise across the peak toward high binding energy.
    pub step: f64,
    pub be_min_ev: f64,
    pub be_max_ev: f64,
    pub n_points: usize,
    pub noise_sigma: f64,
}

/// Returned alongside the synthetic spectrum: what was put in.
#[derive(Debug, Clone, PartialEq)]
pub struct XpsTruth {
    /// Noise-free peak counts, in the spectrum's sample order.
    pub peak: Vec<f64>,
    /// Noise-free background, in the spectrum's sample order.
    pub background: Vec<f64>,
    /// Trapezoid integral of `peak` over the sampled window.
    pub area_in_window: f64,
}

fn pseudo_voigt(x: f64, center: f64, sigma: f64, gamma: f64, mix: f64) -> f64 {
    let dx = x - center;
    let g =
        (-dx * dx / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let l = gamma / (std::f64::consts::PI * (dx * dx + gamma * gamma));
    mix * l + (1.0 - mix) * g
}

/// Samples the peak plus its step background on a decreasing binding-energy
/// axis (the usual export order). The step is the cumulative peak integral
/// scaled to `step`, which is the exact discrete Shirley shape.
pub fn synth_xps_peak_on_step(spec: &XpsPeakSpec, seed: u64) -> Result<(XpsSpectrum, XpsTruth)> {
    if spec.n_points < 5 || !(spec.be_max_ev > spec.be_min_ev) {
        return Err(Error::invalid(
            "XPS synthesis",
            "need >= 5 points and a positive range",
        ));
    }
    if !(spec.sigma_ev > 0.0 && spec.gamma_ev > 0.0 && (0.0..=1.0).contains(&spec.mix)) {
        return Err(Error::invalid(
            "XPS synthesis",
            "widths positive and mix in [0, 1]",
        ));
    }
    let n = spec.n_points;
    let h = (spec.be_max_ev - spec.be_min_ev) / (n - 1) as f64;
    let ascending: Vec<f64> = (0..n).map(|i| spec.be_min_ev + i as f64 * h).collect();
    let peak: Vec<f64> = ascending
        .iter()
        .map(|&e| {
            spec.area * pseudo_voigt(e, spec.center_ev, spec.sigma_ev, spec.gamma_ev, spec.mix)
        })
        .collect();
    let mut cumulative = vec![0.0; n];
    for i in 1..n {
        cumulative[i] = cumulative[i - 1] + 0.5 * h * (peak[i] + peak[i - 1]);
    }
    let total = cumulative[n - 1];
    let background: Vec<f64> = cumulative
        .iter()
        .map(|c| spec.low_level + spec.step * c / total)
        .collect();
    let mut r = rng(seed);
    let counts: Vec<f64> = peak
        .iter()
        .zip(&background)
        .map(|(p, b)| {
            let noise = if spec.noise_sigma > 0.0 {
                spec.noise_sigma * normal(&mut r)
            } else {
                0.0
            };
            (p + b + noise).max(0.0)
        })
        .collect();
    let rev = |v: &[f64]| v.iter().rev().copied().collect::<Vec<_>>();
    let spectrum = XpsSpectrum::new(rev(&ascending), rev(&counts), spec.line.clone())?;
    Ok((
        spectrum,
        XpsTruth {
            peak: rev(&peak),
            background: rev(&background),
            area_in_window: total,
        },
    ))
}

/// Terraced topography: `levels` equal-width stripes along x, each
/// `step_m` above the previous, with white height noise and an optional
/// global plane tilt (meters per pixel).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerraceSpec {
    pub nx: usize,
    pub ny: usize,
    pub pixel_m: f64,
    pub levels: usize,
    pub step_m: f64,
    pub noise_sigma_m: f64,
    pub tilt_x_m_per_px: f64,
    pub tilt_y_m_per_px: f64,
}

pub fn synth_afm_terraces(spec: &TerraceSpec, seed: u64) -> Result<AfmImage> {
    if spec.levels == 0 {
        return Err(Error::invalid(
            "terrace synthesis",
            "need at least one level",
        ));
    }
    let mut r = rng(seed);
    let mut heights = Vec::with_capacity(spec.nx * spec.ny);
    for y in 0..spec.ny {
        for x in 0..spec.nx {
            let level = (x * spec.levels / spec.nx) as f64;
            let noise = if spec.noise_sigma_m > 0.0 {
                spec.noise_sigma_m * normal(&mut r)
            } else {
                0.0
            };
            heights.push(
                level * spec.step_m
                    + spec.tilt_x_m_per_px * x as f64
                    + spec.tilt_y_m_per_px * y as f64
                    + noise,
            );
        }
    }
    AfmImage::new(spec.nx, spec.ny, spec.pixel_m, spec.pixel_m, heights)
}

/// `η(θ) = amplitude·sin(2(θ − zero))` in degrees plus white noise; zeros
/// sit at `zero + k·90°`.
pub fn synth_walkoff_sine(
    amplitude_deg: f64,
    zero_deg: f64,
    theta_deg: &[f64],
    noise_sigma_deg: f64,
    seed: u64,
) -> Result<WalkoffCurve> {
    if !(amplitude_deg.is_finite() && zero_deg.is_finite() && noise_sigma_deg >= 0.0) {
        return Err(Error::invalid(
            "walk-off synthesis",
            "finite amplitude and zero, noise >= 0",
        ));
    }
    let mut r = rng(seed);
    let eta = theta_deg
        .iter()
        .map(|t| {
            let clean = amplitude_deg * (2.0 * (t - zero_deg)).to_radians().sin();
            if noise_sigma_deg > 0.0 {
                clean + noise_sigma_deg * normal(&mut r)
            } else {
                clean
            }
        })
        .collect();
    WalkoffCurve::new(theta_deg.to_vec(), eta)
}

/// White Gaussian height noise of σ `sigma_m`.
pub fn synth_afm_gaussian_noise(
    nx: usize,
    ny: usize,
    pixel_m: f64,
    sigma_m: f64,
    seed: u64,
) -> Result<AfmImage> {
    let mut r = rng(seed);
    let heights = (0..nx * ny).map(|_| sigma_m * normal(&mut r)).collect();
    AfmImage::new(nx, ny, pixel_m, pixel_m, heights)
}
