//! Standard-tunneling-model relations for resonator loss and frequency shift,
//! and the inverse fits that extract the `F·δ⁰` product.
//!
//! Frequencies are cyclic (Hz) at the interface; `ω = 2π f` is formed
//! internally where the physics needs it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{HBAR, K_B};
use crate::error::{Error, Result};
use crate::lsq::{self, Bounds, Options, Problem};
use crate::spectra::{PowerSweepSeries, TemperatureSweepSeries};

/// B_{2k}/(2k) for k = 1..=8.
const DIGAMMA_ASYMPTOTIC: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
];

const ASYMPTOTIC_THRESHOLD: f64 = 8.0;

fn digamma_asymptotic(w: Complex64) -> Complex64 {
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut pow = inv2;
    for c in DIGAMMA_ASYMPTOTIC {
        series += pow * c;
        pow *= inv2;
    }
    w.ln() - inv * 0.5 - series
}

/// `Re ψ(1/2 + i·y)`.
///
/// For `|y| ≥ 8` the asymptotic expansion is used directly; otherwise the
/// argument is shifted up by 8 with `ψ(z) = ψ(z+1) − 1/z` first. Absolute
/// error is below 1e-13 everywhere.
pub fn re_digamma_half_plus_imag(y: f64) -> f64 {
    let y = y.abs();
    if y >= ASYMPTOTIC_THRESHOLD {
        digamma_asymptotic(Complex64::new(0.5, y)).re
    } else {
        via_recurrence(y)
    }
}

fn via_recurrence(y: f64) -> f64 {
    let shift = ASYMPTOTIC_THRESHOLD as usize;
    let mut correction = 0.0;
    for k in 0..shift {
        let x = 0.5 + k as f64;
        correction += x / (x * x + y * y);
    }
    digamma_asymptotic(Complex64::new(0.5 + shift as f64, y)).re - correction
}

/// `ħω/(2π k_B T)` with `ω = 2π f0`, i.e. `ħ f0/(k_B T)`.
fn reduced_frequency(f0_hz: f64, temperature_k: f64) -> f64 {
    HBAR * f0_hz / (K_B * temperature_k)
}

/// `Re ψ(1/2 + y/i) − ln y`. Conjugate symmetry makes the sign of the
/// imaginary part irrelevant.
fn shift_bracket(f0_hz: f64, temperature_k: f64) -> f64 {
    let y = reduced_frequency(f0_hz, temperature_k);
    re_digamma_half_plus_imag(y) - y.ln()
}

/// Fractional frequency shift `Δf/f` at `temperature_k` relative to
/// `reference_temperature_k`:
///
/// `(F·δ⁰/π)·[B(T) − B(T_ref)]`, `B(T) = Re ψ(1/2 + ħω/(2πi k_B T)) − ln(ħω/(2π k_B T))`.
pub fn tls_frequency_shift(
    f_delta_tls: f64,
    f0_hz: f64,
    temperature_k: f64,
    reference_temperature_k: f64,
) -> Result<f64> {
    if !(temperature_k > 0.0 && reference_temperature_k > 0.0) {
        return Err(Error::invalid(
            "temperature",
            format!(
                "T = {temperature_k} K, T_ref = {reference_temperature_k} K; both must be positive"
            ),
        ));
    }
    if !(f0_hz > 0.0) {
        return Err(Error::invalid("frequency", "f0 must be positive"));
    }
    if temperature_k == reference_temperature_k {
        return Ok(0.0);
    }
    let diff = shift_bracket(f0_hz, temperature_k) - shift_bracket(f0_hz, reference_temperature_k);
    Ok(f_delta_tls / std::f64::consts::PI * diff)
}

/// `tanh(ħω/(2 k_B T))`, the thermal population factor of resonant TLS.
pub fn thermal_factor(f0_hz: f64, temperature_k: f64) -> f64 {
    let omega = 2.0 * std::f64::consts::PI * f0_hz;
    (HBAR * omega / (2.0 * K_B * temperature_k)).tanh()
}

/// Quality factor limited by resonant TLS absorption alone:
/// `1/(F·δ⁰·tanh(ħω/2k_BT))`.
pub fn q_tls(f_delta_tls: f64, f0_hz: f64, temperature_k: f64) -> f64 {
    1.0 / (f_delta_tls * thermal_factor(f0_hz, temperature_k))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TlsFitResult {
    pub f_delta_tls: f64,
    pub f_delta_err: f64,
    /// Frequency at the anchoring temperature; the shift is measured from it.
    pub f0_hz: f64,
    #[serde(rename = "reference_temperature_K")]
    pub reference_temperature_k: f64,
    /// RMS frequency residual in Hz.
    pub residual_rms: f64,
    pub n_points: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Closed-form weighted least squares for `F·δ⁰`.
///
/// The point nearest the series' reference temperature anchors the shift:
/// its frequency is the nominal `f_r`, and every other point contributes
/// `(f_i − f_r)/f_r = F·δ⁰ · s(T_i)` where `s` is the shift shape above.
/// Weights are `1/σ_i²` when every point carries an error, uniform otherwise.
pub fn fit_fdelta(series: &TemperatureSweepSeries) -> Result<TlsFitResult> {
    let points = series.points();
    let t_ref = series.reference_temperature_k();
    let anchor = points
        .iter()
        .min_by(|a, b| {
            (a.temperature_k - t_ref)
                .abs()
                .total_cmp(&(b.temperature_k - t_ref).abs())
        })
        .ok_or_else(|| Error::invalid("temperature sweep", "empty"))?;
    let f_ref = anchor.f0_hz;
    let t_anchor = anchor.temperature_k;
    let weighted = points.iter().all(|p| p.f0_err_hz > 0.0);

    let mut shapes = Vec::with_capacity(points.len());
    let mut sww = 0.0;
    let mut swy = 0.0;
    for p in points {
        let s = tls_frequency_shift(1.0, f_ref, p.temperature_k, t_anchor)?;
        let y = (p.f0_hz - f_ref) / f_ref;
        let w = if weighted {
            (f_ref / p.f0_err_hz).powi(2)
        } else {
            1.0
        };
        sww += w * s * s;
        swy += w * s * y;
        shapes.push((s, y));
    }
    if !(sww > 0.0) {
        return Err(Error::Degenerate(
            "temperature shape is identically zero (all temperatures equal the reference)".into(),
        ));
    }
    let f_delta = swy / sww;
    let rss: f64 = shapes
        .iter()
        .map(|(s, y)| ((y - f_delta * s) * f_ref).powi(2))
        .sum();
    let informative = shapes.iter().filter(|(s, _)| *s != 0.0).count();
    let f_delta_err = if weighted {
        (1.0 / sww).sqrt()
    } else {
        let dof = informative.saturating_sub(1).max(1) as f64;
        let s2 = rss / (f_ref * f_ref) / dof;
        (s2 / sww).sqrt()
    };
    let mut warnings = Vec::new();
    if f_delta <= 0.0 {
        warnings.push(format!("non-positive fitted F·δ0 ({f_delta:.3e})"));
    }
    Ok(TlsFitResult {
        f_delta_tls: f_delta,
        f_delta_err,
        f0_hz: f_ref,
        reference_temperature_k: t_anchor,
        residual_rms: (rss / points.len() as f64).sqrt(),
        n_points: points.len(),
        warnings,
    })
}

/// Parameters of the power-saturation model
/// `1/Q = F·δ⁰·tanh(ħω/2k_BT)/√(1 + (n/n_c)^β) + 1/Q_res`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerModelParams {
    pub f_delta_tls: f64,
    pub n_c: f64,
    pub beta: f64,
    pub q_i_res: f64,
    #[serde(rename = "temperature_K")]
    pub temperature_k: f64,
    pub f0_hz: f64,
}

impl PowerModelParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.n_c, self.q_i_res, self.temperature_k, self.f0_hz];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) || !(self.f_delta_tls >= 0.0) {
            return Err(Error::invalid(
                "power model",
                "n_c, Q_res, T and f0 must be positive and F·δ0 non-negative",
            ));
        }
        if !(self.beta > 0.0 && self.beta <= 2.0) {
            return Err(Error::invalid(
                "power model",
                format!("beta {} outside (0, 2]", self.beta),
            ));
        }
        Ok(())
    }
}

/// Total internal Q at mean phonon number `n`.
pub fn qi_power_model(params: &PowerModelParams, mean_phonon_number: f64) -> f64 {
    1.0 / inverse_q(
        params.f_delta_tls * thermal_factor(params.f0_hz, params.temperature_k),
        params.n_c,
        params.beta,
        1.0 / params.q_i_res,
        mean_phonon_number,
    )
}

fn inverse_q(tls_loss: f64, n_c: f64, beta: f64, residual_loss: f64, n: f64) -> f64 {
    tls_loss / (1.0 + (n / n_c).powf(beta)).sqrt() + residual_loss
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerModelErrors {
    pub f_delta_tls: f64,
    pub n_c: f64,
    pub beta: f64,
    pub q_i_res: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFitResult {
    pub params: PowerModelParams,
    pub param_errors: PowerModelErrors,
    pub beta_fixed: bool,
    /// RMS residual in 1/Q.
    pub residual_rms: f64,
    pub n_iterations: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// β used when the sweep is too short to identify it.
pub const DEFAULT_BETA: f64 = 0.5;
/// Minimum span in decades before β is fitted.
pub const BETA_FREE_MIN_DECADES: f64 = 4.0;

struct PowerProblem<'a> {
    n: Vec<f64>,
    inv_q: Vec<f64>,
    sigma: Vec<f64>,
    thermal: f64,
    fixed_beta: Option<f64>,
    scales: [f64; 4],
    _series: &'a PowerSweepSeries,
}

impl PowerProblem<'_> {
    /// Free vector → (F·δ⁰, n_c, β, 1/Q_res).
    fn unpack(&self, p: &[f64]) -> (f64, f64, f64, f64) {
        match self.fixed_beta {
            Some(b) => (p[0], 10f64.powf(p[1]), b, p[2]),
            None => (p[0], 10f64.powf(p[1]), p[2], p[3]),
        }
    }
}

impl Problem for PowerProblem<'_> {
    fn n_params(&self) -> usize {
        if self.fixed_beta.is_some() {
            3
        } else {
            4
        }
    }

    fn n_residuals(&self) -> usize {
        self.n.len()
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        let (fd, nc, beta, r) = self.unpack(p);
        for (i, o) in out.iter_mut().enumerate() {
            let model = inverse_q(fd * self.thermal, nc, beta, r, self.n[i]);
            *o = (model - self.inv_q[i]) / self.sigma[i];
        }
    }

    fn scales(&self) -> Vec<f64> {
        match self.fixed_beta {
            Some(_) => vec![self.scales[0], self.scales[1], self.scales[3]],
            None => self.scales.to_vec(),
        }
    }
}

/// Damped least squares on `1/Q_i` over (F·δ⁰, n_c, β, Q_res).
///
/// `fixed_beta` pins β; without it β is fitted only when the sweep covers at
/// least four decades and is otherwise held at 0.5.
pub fn fit_power_sweep(
    series: &PowerSweepSeries,
    fixed_beta: Option<f64>,
) -> Result<PowerFitResult> {
    let fixed = match fixed_beta {
        Some(b) if !(b > 0.0 && b <= 2.0) => {
            return Err(Error::invalid("beta", format!("{b} outside (0, 2]")))
        }
        Some(b) => Some(b),
        None if series.decades() < BETA_FREE_MIN_DECADES => Some(DEFAULT_BETA),
        None => None,
    };
    let mut pts = series.points().to_vec();
    pts.sort_by(|a, b| a.mean_phonon_number.total_cmp(&b.mean_phonon_number));
    let n: Vec<f64> = pts.iter().map(|p| p.mean_phonon_number).collect();
    let inv_q: Vec<f64> = pts.iter().map(|p| 1.0 / p.qi).collect();
    let weighted = pts.iter().all(|p| p.qi_err > 0.0);
    let mean_inv = inv_q.iter().sum::<f64>() / inv_q.len() as f64;
    let sigma: Vec<f64> = pts
        .iter()
        .map(|p| {
            if weighted {
                p.qi_err / (p.qi * p.qi)
            } else {
                mean_inv
            }
        })
        .collect();
    let thermal = thermal_factor(series.f0_hz(), series.temperature_k());

    let r0 = inv_q.iter().cloned().fold(f64::INFINITY, f64::min);
    let top = inv_q.iter().cloned().fold(0.0, f64::max);
    let a0 = (top - r0).max(1e-3 * r0);
    let half = r0 + a0 / std::f64::consts::SQRT_2;
    let mut log_nc0 = (n[0].log10() + n[n.len() - 1].log10()) / 2.0;
    for i in 1..n.len() {
        if inv_q[i - 1] >= half && inv_q[i] < half {
            let t = (inv_q[i - 1] - half) / (inv_q[i - 1] - inv_q[i]);
            log_nc0 = n[i - 1].log10() + t * (n[i].log10() - n[i - 1].log10());
            break;
        }
    }
    let fd0 = a0 / thermal;
    let beta0 = fixed.unwrap_or(DEFAULT_BETA);

    let problem = PowerProblem {
        n,
        inv_q,
        sigma,
        thermal,
        fixed_beta: fixed,
        scales: [fd0, 1.0, 0.5, r0],
        _series: series,
    };
    let (x0, bounds) = match fixed {
        Some(_) => (
            vec![fd0, log_nc0, r0],
            Bounds {
                lower: vec![0.0, -20.0, 1e-6 * r0],
                upper: vec![f64::INFINITY, 30.0, f64::INFINITY],
            },
        ),
        None => (
            vec![fd0, log_nc0, beta0, r0],
            Bounds {
                lower: vec![0.0, -20.0, 1e-3, 1e-6 * r0],
                upper: vec![f64::INFINITY, 30.0, 2.0, f64::INFINITY],
            },
        ),
    };
    let out = lsq::minimize(&problem, &x0, &bounds, &Options::default())?;
    let (fd, nc, beta, r) = problem.unpack(&out.params);
    let e = &out.errors;
    let ln10 = std::f64::consts::LN_10;
    let (e_fd, e_lognc, e_beta, e_r) = match fixed {
        Some(_) => (e[0], e[1], 0.0, e[2]),
        None => (e[0], e[1], e[2], e[3]),
    };
    let mut warnings = Vec::new();
    if fixed.is_none() && !(e_beta <= beta) {
        warnings.push(format!(
            "beta is unidentifiable: uncertainty {e_beta:.3e} exceeds value {beta:.3e}"
        ));
    }
    if fd == 0.0 {
        warnings.push("F·δ0 at its lower bound of zero".into());
    }
    let inv_rms = {
        let mut buf = vec![0.0; problem.n.len()];
        problem.residuals(&out.params, &mut buf);
        let ss: f64 = buf
            .iter()
            .zip(&problem.sigma)
            .map(|(r, s)| (r * s).powi(2))
            .sum();
        (ss / buf.len() as f64).sqrt()
    };
    Ok(PowerFitResult {
        params: PowerModelParams {
            f_delta_tls: fd,
            n_c: nc,
            beta,
            q_i_res: 1.0 / r,
            temperature_k: series.temperature_k(),
            f0_hz: series.f0_hz(),
        },
        param_errors: PowerModelErrors {
            f_delta_tls: e_fd,
            n_c: nc * ln10 * e_lognc,
            beta: e_beta,
            q_i_res: e_r / (r * r),
        },
        beta_fixed: fixed.is_some(),
        residual_rms: inv_rms,
        n_iterations: out.iterations,
        warnings,
    })
}
