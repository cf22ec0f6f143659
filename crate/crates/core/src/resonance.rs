//! Reflection-spectrum fits of a single resonance, optionally coupled to a
//! weakly coupled dark mode.
//!
//! Model:
//!
//! ```text
//! S11(f) = a·exp(2πiτ(f − f0))·[1 − κe/(iΔ + κ/2 + g²/(iΔb + γ/2))]
//! Δ = f − f0,  Δb = f − f_dark
//! ```
//!
//! All rates are cyclic (Hz), so `Qi = f0/(κ − κe)` and `Qe = f0/κe`.
//! The cable-delay phase is referenced to `f0`; a constant phase is absorbed
//! into the complex scale `a`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lsq::{self, Bounds, Options, Outcome, Problem};
use crate::par::{self, Execution};
use crate::spectra::ComplexSpectrum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DarkMode {
    pub f_dark_hz: f64,
    pub gamma_hz: f64,
    pub g_hz: f64,
}

/// Complex scale `a` and cable delay `τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Background {
    pub a_re: f64,
    pub a_im: f64,
    pub tau_s: f64,
}

impl Default for Background {
    fn default() -> Self {
        Background {
            a_re: 1.0,
            a_im: 0.0,
            tau_s: 0.0,
        }
    }
}

impl Background {
    pub fn scale(&self) -> Complex64 {
        Complex64::new(self.a_re, self.a_im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceModelParams {
    pub f0_hz: f64,
    pub kappa_hz: f64,
    pub kappa_e_hz: f64,
    pub dark: Option<DarkMode>,
    pub background: Background,
}

impl ResonanceModelParams {
    pub fn lorentzian(f0_hz: f64, kappa_hz: f64, kappa_e_hz: f64) -> Self {
        ResonanceModelParams {
            f0_hz,
            kappa_hz,
            kappa_e_hz,
            dark: None,
            background: Background::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa_hz > 0.0) {
            return Err(Error::invalid(
                "resonance parameters",
                "kappa must be positive",
            ));
        }
        if !(self.kappa_e_hz > 0.0 && self.kappa_e_hz < self.kappa_hz) {
            return Err(Error::invalid(
                "resonance parameters",
                "need 0 < kappa_e < kappa",
            ));
        }
        if let Some(d) = self.dark {
            if !(d.gamma_hz > 0.0 && d.g_hz >= 0.0) {
                return Err(Error::invalid(
                    "resonance parameters",
                    "dark mode needs gamma > 0 and g >= 0",
                ));
            }
        }
        Ok(())
    }
}

/// Evaluates the reflection model at `freq_hz`.
pub fn eval_s11(params: &ResonanceModelParams, freq_hz: f64) -> Complex64 {
    let i = Complex64::i();
    let delta = freq_hz - params.f0_hz;
    let mut denom = i * delta + params.kappa_hz / 2.0;
    if let Some(d) = params.dark {
        let delta_b = freq_hz - d.f_dark_hz;
        denom += d.g_hz * d.g_hz / (i * delta_b + d.gamma_hz / 2.0);
    }
    let cavity = Complex64::new(1.0, 0.0) - params.kappa_e_hz / denom;
    let phase = Complex64::from_polar(
        1.0,
        2.0 * std::f64::consts::PI * params.background.tau_s * delta,
    );
    params.background.scale() * phase * cavity
}

/// `(Qi, Qe) = (f0/(κ − κe), f0/κe)`.
pub fn q_factors(params: &ResonanceModelParams) -> Result<(f64, f64)> {
    if !(params.kappa_e_hz > 0.0) || params.kappa_hz <= params.kappa_e_hz {
        return Err(Error::invalid(
            "resonance parameters",
            format!(
                "kappa ({}) must exceed kappa_e ({}) > 0",
                params.kappa_hz, params.kappa_e_hz
            ),
        ));
    }
    Ok((
        params.f0_hz / (params.kappa_hz - params.kappa_e_hz),
        params.f0_hz / params.kappa_e_hz,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    Lorentzian,
    DarkMode,
}

/// One-sigma uncertainties, laid out like [`ResonanceModelParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceParamErrors {
    pub f0_hz: f64,
    pub kappa_hz: f64,
    pub kappa_e_hz: f64,
    pub dark: Option<DarkMode>,
    pub background: Background,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceFitResult {
    pub model: ModelKind,
    pub params: ResonanceModelParams,
    pub param_errors: ResonanceParamErrors,
    pub qi: f64,
    pub qe: f64,
    pub qi_err: f64,
    pub qe_err: f64,
    /// RMS of the real and imaginary residuals.
    pub residual_rms: f64,
    pub n_iterations: usize,
    /// Cost after each accepted step.
    #[serde(skip)]
    pub cost_history: Vec<f64>,
}

fn moving_average(x: &[f64], half: usize) -> Vec<f64> {
    if half == 0 {
        return x.to_vec();
    }
    let n = x.len();
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + x[i];
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Per-quadrature noise σ estimated from second differences of the trace
/// (insensitive to smooth structure).
pub fn estimate_noise_sigma(values: &[Complex64]) -> f64 {
    let d2: Vec<f64> = values
        .windows(3)
        .map(|w| (w[2] - 2.0 * w[1] + w[0]).norm())
        .collect();
    // |d2| is Rayleigh with scale σ√6; its median is σ√6·√(2 ln 2).
    median(d2) / (6f64.sqrt() * (2.0 * std::f64::consts::LN_2).sqrt())
}

/// Initial guess from the dip in |S11|: f0 at the minimum, κ from the full
/// width at half depth of |S11|², κe from the dip depth, and the background
/// from the edge samples. No dark mode.
pub fn estimate_initial_params(spectrum: &ComplexSpectrum) -> Result<ResonanceModelParams> {
    let f = spectrum.frequencies_hz();
    let z = spectrum.values();
    let n = z.len();
    let k = (n / 20).max(3).min(n / 3);
    let mean_of = |r: std::ops::Range<usize>| {
        let len = r.len() as f64;
        let zs = z[r.clone()].iter().sum::<Complex64>() / len;
        let fs = f[r].iter().sum::<f64>() / len;
        (zs, fs)
    };
    let (z_lo, f_lo) = mean_of(0..k);
    let (z_hi, f_hi) = mean_of(n - k..n);
    let scale = 0.5 * (z_lo.norm() + z_hi.norm());
    if !(scale > 0.0) {
        return Err(Error::NoResolvableDip {
            depth: 0.0,
            noise: 0.0,
        });
    }
    let turn = (z_hi / z_lo).arg();
    let tau = turn / (2.0 * std::f64::consts::PI * (f_hi - f_lo));
    let phase_mid = z_lo.arg() + turn / 2.0;
    let f_mid = 0.5 * (f_lo + f_hi);

    let mags: Vec<f64> = z.iter().map(|v| v.norm() / scale).collect();
    let half = n / 400;
    let smooth = moving_average(&mags, half);
    let (imin, &m_min) = smooth
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("spectrum is non-empty");
    let noise = estimate_noise_sigma(z) / scale;
    let depth = 1.0 - m_min;
    if depth <= 3.0 * noise {
        return Err(Error::NoResolvableDip { depth, noise });
    }
    if imin < k || imin >= n - k {
        return Err(Error::TruncatedResonance);
    }
    let level = 0.5 * (1.0 + m_min * m_min);
    let crossing = |range: &mut dyn Iterator<Item = usize>, step: isize| -> Option<f64> {
        for i in range {
            let j = (i as isize - step) as usize;
            let (a, b) = (smooth[j] * smooth[j], smooth[i] * smooth[i]);
            if b >= level {
                let t = (level - a) / (b - a);
                return Some(f[j] + t * (f[i] - f[j]));
            }
        }
        None
    };
    let left = crossing(&mut (0..imin).rev(), -1).ok_or(Error::TruncatedResonance)?;
    let right = crossing(&mut (imin + 1..n), 1).ok_or(Error::TruncatedResonance)?;
    let kappa = right - left;
    let f0 = f[imin];
    let kappa_e = (kappa * depth / 2.0).max(1e-6 * kappa);
    let phase = phase_mid + 2.0 * std::f64::consts::PI * tau * (f0 - f_mid);
    let a = Complex64::from_polar(scale, phase);
    Ok(ResonanceModelParams {
        f0_hz: f0,
        kappa_hz: kappa,
        kappa_e_hz: kappa_e,
        dark: None,
        background: Background {
            a_re: a.re,
            a_im: a.im,
            tau_s: tau,
        },
    })
}

/// Free-parameter layout: `[δf0, κi, κe, a_re, a_im, τ, (δf_dark, γ, g)]`
/// with `κi = κ − κe` and frequencies as offsets from `f_anchor`.
struct S11Problem<'a> {
    freqs: &'a [f64],
    data: &'a [Complex64],
    f_anchor: f64,
    dark: bool,
    scales: Vec<f64>,
}

impl S11Problem<'_> {
    fn params_from(&self, p: &[f64]) -> ResonanceModelParams {
        let f0 = self.f_anchor + p[0];
        ResonanceModelParams {
            f0_hz: f0,
            kappa_hz: p[1] + p[2],
            kappa_e_hz: p[2],
            dark: self.dark.then(|| DarkMode {
                f_dark_hz: self.f_anchor + p[6],
                gamma_hz: p[7],
                g_hz: p[8],
            }),
            background: Background {
                a_re: p[3],
                a_im: p[4],
                tau_s: p[5],
            },
        }
    }

    fn vector_from(&self, m: &ResonanceModelParams) -> Vec<f64> {
        let mut v = vec![
            m.f0_hz - self.f_anchor,
            m.kappa_hz - m.kappa_e_hz,
            m.kappa_e_hz,
            m.background.a_re,
            m.background.a_im,
            m.background.tau_s,
        ];
        if self.dark {
            let d = m.dark.expect("dark-mode vector needs dark parameters");
            v.extend([d.f_dark_hz - self.f_anchor, d.gamma_hz, d.g_hz]);
        }
        v
    }

    fn bounds(&self) -> Bounds {
        let n = self.n_params();
        let mut b = Bounds::unbounded(n);
        b.lower[1] = 0.0;
        b.lower[2] = 0.0;
        if self.dark {
            b.lower[7] = 1e-9 * self.scales[1];
            b.lower[8] = 0.0;
        }
        b
    }
}

impl Problem for S11Problem<'_> {
    fn n_params(&self) -> usize {
        if self.dark {
            9
        } else {
            6
        }
    }

    fn n_residuals(&self) -> usize {
        2 * self.data.len()
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        let model = self.params_from(p);
        let n = self.data.len();
        let (re, im) = out.split_at_mut(n);
        for (k, (&f, &d)) in self.freqs.iter().zip(self.data).enumerate() {
            let r = eval_s11(&model, f) - d;
            re[k] = r.re;
            im[k] = r.im;
        }
    }

    fn scales(&self) -> Vec<f64> {
        self.scales.clone()
    }
}

fn run_fit<'a>(
    spectrum: &'a ComplexSpectrum,
    init: &ResonanceModelParams,
    dark: bool,
    exec: Execution,
) -> Result<(Outcome, S11Problem<'a>)> {
    let f = spectrum.frequencies_hz();
    let span = f[f.len() - 1] - f[0];
    let kappa = init.kappa_hz;
    let mag = init.background.scale().norm().max(1e-12);
    let tau_scale = 1.0 / (2.0 * std::f64::consts::PI * span);
    let mut scales = vec![kappa, kappa, kappa, mag, mag, tau_scale];
    if dark {
        scales.extend([kappa, kappa, kappa]);
    }
    let problem = S11Problem {
        freqs: f,
        data: spectrum.values(),
        f_anchor: init.f0_hz,
        dark,
        scales,
    };
    let x0 = problem.vector_from(init);
    let opts = Options {
        execution: exec,
        ..Options::default()
    };
    let out = lsq::minimize(&problem, &x0, &problem.bounds(), &opts)?;
    Ok((out, problem))
}

fn assemble(kind: ModelKind, out: Outcome, problem: &S11Problem<'_>) -> Result<ResonanceFitResult> {
    let p = problem.params_from(&out.params);
    let x = &out.params;
    if x[1] <= 1e-9 * (x[1] + x[2]) {
        return Err(Error::PinnedAtBound { name: "kappa_e" });
    }
    if x[2] <= 0.0 {
        return Err(Error::PinnedAtBound { name: "kappa_e" });
    }
    let e = &out.errors;
    let cov = |i: usize, j: usize| out.covariance_at(i, j);
    let kappa_err = (cov(1, 1) + cov(2, 2) + 2.0 * cov(1, 2)).max(0.0).sqrt();
    let (qi, qe) = q_factors(&p)?;
    let rel_f0 = e[0] / p.f0_hz;
    let qi_err = qi * ((e[1] / x[1]).powi(2) + rel_f0 * rel_f0).sqrt();
    let qe_err = qe * ((e[2] / x[2]).powi(2) + rel_f0 * rel_f0).sqrt();
    let param_errors = ResonanceParamErrors {
        f0_hz: e[0],
        kappa_hz: if kappa_err.is_nan() {
            f64::INFINITY
        } else {
            kappa_err
        },
        kappa_e_hz: e[2],
        dark: problem.dark.then(|| DarkMode {
            f_dark_hz: e[6],
            gamma_hz: e[7],
            g_hz: e[8],
        }),
        background: Background {
            a_re: e[3],
            a_im: e[4],
            tau_s: e[5],
        },
    };
    Ok(ResonanceFitResult {
        model: kind,
        params: p,
        param_errors,
        qi,
        qe,
        qi_err,
        qe_err,
        residual_rms: (out.cost / out.n_residuals as f64).sqrt(),
        n_iterations: out.iterations,
        cost_history: out.cost_history,
    })
}

/// Initial dark-mode parameters from the residual left by a Lorentzian fit:
/// the strongest remaining feature sets `f_dark`, its width sets `γ`, and
/// its height sets `g` through first-order perturbation of the denominator.
fn dark_guess(spectrum: &ComplexSpectrum, prefit: &ResonanceModelParams) -> DarkMode {
    let f = spectrum.frequencies_hz();
    let z = spectrum.values();
    let n = f.len();
    let scale = prefit.background.scale().norm().max(1e-12);
    let resid: Vec<f64> = f
        .iter()
        .zip(z)
        .map(|(&fk, &zk)| (zk - eval_s11(prefit, fk)).norm() / scale)
        .collect();
    let smooth = moving_average(&resid, (n / 400).max(1));
    let (j, &peak) = smooth
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let half = 0.5 * peak;
    let mut lo = j;
    while lo > 0 && smooth[lo] > half {
        lo -= 1;
    }
    let mut hi = j;
    while hi + 1 < n && smooth[hi] > half {
        hi += 1;
    }
    let step = (f[n - 1] - f[0]) / (n - 1) as f64;
    let gamma = (f[hi] - f[lo]).clamp(3.0 * step, prefit.kappa_hz);
    let detune = Complex64::new(prefit.kappa_hz / 2.0, f[j] - prefit.f0_hz);
    let g2 = peak * (gamma / 2.0) * detune.norm_sqr() / prefit.kappa_e_hz;
    DarkMode {
        f_dark_hz: f[j],
        gamma_hz: gamma,
        g_hz: g2.sqrt(),
    }
}

/// Fits `spectrum` by minimizing the summed squared real and imaginary
/// residuals.
///
/// `init` defaults to [`estimate_initial_params`]. For [`ModelKind::DarkMode`]
/// without a dark-mode initial guess, a Lorentzian prefit is run first and the
/// dark mode is seeded from its residual; a few seed widths are tried and the
/// lowest-cost fit wins.
pub fn fit_resonance(
    spectrum: &ComplexSpectrum,
    kind: ModelKind,
    init: Option<ResonanceModelParams>,
) -> Result<ResonanceFitResult> {
    fit_resonance_with(spectrum, kind, init, Execution::Sequential)
}

/// [`fit_resonance`] with an explicit execution policy for the Jacobian.
pub fn fit_resonance_with(
    spectrum: &ComplexSpectrum,
    kind: ModelKind,
    init: Option<ResonanceModelParams>,
    exec: Execution,
) -> Result<ResonanceFitResult> {
    let init = match init {
        Some(p) => {
            p.validate()?;
            p
        }
        None => estimate_initial_params(spectrum)?,
    };
    match kind {
        ModelKind::Lorentzian => {
            let init = ResonanceModelParams { dark: None, ..init };
            let (out, problem) = run_fit(spectrum, &init, false, exec)?;
            assemble(kind, out, &problem)
        }
        ModelKind::DarkMode => {
            let seeds: Vec<ResonanceModelParams> = match init.dark {
                Some(_) => vec![init],
                None => {
                    let (out, problem) = run_fit(spectrum, &init, false, exec)?;
                    let pre = problem.params_from(&out.params);
                    let d = dark_guess(spectrum, &pre);
                    [1.0, 0.5, 2.0]
                        .iter()
                        .map(|m| ResonanceModelParams {
                            dark: Some(DarkMode {
                                gamma_hz: d.gamma_hz * m,
                                g_hz: d.g_hz * m.sqrt(),
                                ..d
                            }),
                            ..pre
                        })
                        .collect()
                }
            };
            let mut best: Option<(Outcome, S11Problem<'_>)> = None;
            let mut last_err = None;
            for seed in &seeds {
                match run_fit(spectrum, seed, true, exec) {
                    Ok((out, problem)) => {
                        if best.as_ref().is_none_or(|(b, _)| out.cost < b.cost) {
                            best = Some((out, problem));
                        }
                    }
                    Err(e) => last_err = Some(e),
                }
            }
            match best {
                Some((out, problem)) => assemble(kind, out, &problem),
                None => Err(last_err.unwrap_or(Error::NonConvergence { iterations: 0 })),
            }
        }
    }
}

/// Fits every spectrum independently; results keep input order.
pub fn fit_batch(
    spectra: &[ComplexSpectrum],
    kind: ModelKind,
    exec: Execution,
) -> Vec<Result<ResonanceFitResult>> {
    par::map(exec, spectra, |s| fit_resonance(s, kind, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{linewidth_grid, synth_s11, Meta, S11Spec};
    use proptest::prelude::*;

    fn direct(p: &ResonanceModelParams, f: f64) -> Complex64 {
        // Hand-expanded complex arithmetic, independent of eval_s11.
        let d = f - p.f0_hz;
        let (mut dr, mut di) = (p.kappa_hz / 2.0, d);
        if let Some(dm) = p.dark {
            let (br, bi) = (dm.gamma_hz / 2.0, f - dm.f_dark_hz);
            let m2 = br * br + bi * bi;
            let g2 = dm.g_hz * dm.g_hz;
            dr += g2 * br / m2;
            di -= g2 * bi / m2;
        }
        let m2 = dr * dr + di * di;
        let (cr, ci) = (1.0 - p.kappa_e_hz * dr / m2, p.kappa_e_hz * di / m2);
        let ph = 2.0 * std::f64::consts::PI * p.background.tau_s * d;
        let (pr, pi) = (ph.cos(), ph.sin());
        let (ar, ai) = (p.background.a_re, p.background.a_im);
        let (sr, si) = (ar * pr - ai * pi, ar * pi + ai * pr);
        Complex64::new(sr * cr - si * ci, sr * ci + si * cr)
    }

    #[test]
    fn critical_coupling_zero() {
        let p = ResonanceModelParams::lorentzian(1e9, 2e5, 1e5);
        assert_eq!(eval_s11(&p, 1e9), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn decoupled_cavity_is_background() {
        let mut p = ResonanceModelParams::lorentzian(1e9, 2e5, 1e-30);
        p.background = Background {
            a_re: 0.7,
            a_im: -0.2,
            tau_s: 3e-8,
        };
        for f in [1e9 - 1e6, 1e9, 1e9 + 3e5] {
            let bg = p.background.scale()
                * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * 3e-8 * (f - 1e9));
            assert!((eval_s11(&p, f) - bg).norm() < 1e-15);
        }
    }

    #[test]
    fn dark_mode_matches_direct_arithmetic() {
        let mut s = 0x1234_5678_u64;
        let mut next = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..10 {
            let f0 = 6.8e8 + 1e7 * next();
            let kappa = 5e4 + 2e5 * next();
            let p = ResonanceModelParams {
                f0_hz: f0,
                kappa_hz: kappa,
                kappa_e_hz: kappa * (0.05 + 0.9 * next()),
                dark: Some(DarkMode {
                    f_dark_hz: f0 + 2e5 * (next() - 0.5),
                    gamma_hz: 1e3 + 5e4 * next(),
                    g_hz: 1e5 * next(),
                }),
                background: Background {
                    a_re: 0.5 + next(),
                    a_im: next() - 0.5,
                    tau_s: 1e-7 * (next() - 0.5),
                },
            };
            let f = f0 + 4e5 * (next() - 0.5);
            let a = eval_s11(&p, f);
            let b = direct(&p, f);
            assert!((a - b).norm() < 1e-12 * (1.0 + b.norm()), "{a} vs {b}");
        }
    }

    #[test]
    fn strong_dark_mode_shields_response() {
        let p = ResonanceModelParams {
            dark: Some(DarkMode {
                f_dark_hz: 1e9,
                gamma_hz: 1e2,
                g_hz: 1e5,
            }),
            ..ResonanceModelParams::lorentzian(1e9, 2e5, 1e5)
        };
        let v = eval_s11(&p, 1e9);
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-3);
        assert!((v - direct(&p, 1e9)).norm() < 1e-14);
    }

    proptest! {
        #[test]
        fn conjugate_detuning_conjugates_response(
            d in -1e6f64..1e6, db in -1e6f64..1e6, kappa in 1e3f64..1e6, frac in 0.01f64..0.99,
            gamma in 1e2f64..1e5, g in 0.0f64..1e5, a in 0.1f64..2.0,
        ) {
            let f0 = 1e9;
            let f = f0 + d;
            let f_dark = f - db;
            let p = ResonanceModelParams {
                f0_hz: f0, kappa_hz: kappa, kappa_e_hz: kappa * frac,
                dark: Some(DarkMode { f_dark_hz: f_dark, gamma_hz: gamma, g_hz: g }),
                background: Background { a_re: a, a_im: 0.0, tau_s: 0.0 },
            };
            let mirrored = ResonanceModelParams {
                dark: Some(DarkMode { f_dark_hz: 2.0 * f0 - f_dark, gamma_hz: gamma, g_hz: g }),
                ..p
            };
            let v = eval_s11(&p, f);
            let w = eval_s11(&mirrored, 2.0 * f0 - f);
            prop_assert!((v.conj() - w).norm() < 1e-9 * (1.0 + v.norm()));
        }
    }

    #[test]
    fn q_factor_conventions() {
        let f0 = 690e6;
        let ke = 49.3e3;
        let p = ResonanceModelParams::lorentzian(f0, ke + 101.5e3, ke);
        let (qi, qe) = q_factors(&p).unwrap();
        assert!((qi - 6.8e3).abs() / 6.8e3 < 0.01, "{qi}");
        assert!((qe - 1.4e4).abs() / 1.4e4 < 0.01, "{qe}");
        let sym = ResonanceModelParams::lorentzian(f0, 2e5, 1e5);
        let (qi, qe) = q_factors(&sym).unwrap();
        assert_eq!(qi, qe);
        let bad = ResonanceModelParams::lorentzian(f0, 1e5, 1e5);
        assert!(q_factors(&bad).is_err());
    }

    fn fig1_spec() -> S11Spec {
        S11Spec::from_q(688.4e6, 6.8e3, 1.4e4)
    }

    #[test]
    fn initial_guess_within_one_grid_step() {
        let spec = fig1_spec();
        let grid = linewidth_grid(spec.f0_hz, spec.kappa_hz, 20, 4.0);
        let step = grid[1] - grid[0];
        let sp = synth_s11(&spec, &grid, 0.0, 0).unwrap();
        let init = estimate_initial_params(&sp).unwrap();
        assert!((init.f0_hz - spec.f0_hz).abs() <= step);
        assert!((init.kappa_hz - spec.kappa_hz).abs() / spec.kappa_hz < 0.05);
        assert!((init.kappa_e_hz - spec.kappa_e_hz).abs() / spec.kappa_e_hz < 0.05);
    }

    #[test]
    fn flat_trace_has_no_dip() {
        let f: Vec<f64> = (0..200).map(|i| 1e9 + i as f64 * 100.0).collect();
        let sp = ComplexSpectrum::new(f, vec![Complex64::new(1.0, 0.0); 200], Meta::new()).unwrap();
        assert!(matches!(
            estimate_initial_params(&sp),
            Err(Error::NoResolvableDip { .. })
        ));
    }

    #[test]
    fn dip_at_edge_is_truncated() {
        let spec = fig1_spec();
        let grid: Vec<f64> = (0..400)
            .map(|i| spec.f0_hz - 0.1 * spec.kappa_hz + i as f64 * spec.kappa_hz / 100.0)
            .collect();
        let sp = synth_s11(&spec, &grid, 0.0, 0).unwrap();
        assert!(matches!(
            estimate_initial_params(&sp),
            Err(Error::TruncatedResonance)
        ));
    }

    #[test]
    fn noiseless_fit_is_exact() {
        let spec = fig1_spec();
        let grid = linewidth_grid(spec.f0_hz, spec.kappa_hz, 30, 4.0);
        let sp = synth_s11(&spec, &grid, 0.0, 0).unwrap();
        let fit = fit_resonance(&sp, ModelKind::Lorentzian, None).unwrap();
        assert!(fit.residual_rms < 1e-10, "{}", fit.residual_rms);
        assert!((fit.qi - 6.8e3).abs() / 6.8e3 < 1e-8);
        assert!((fit.qe - 1.4e4).abs() / 1.4e4 < 1e-8);
        for w in fit.cost_history.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn background_and_delay_are_recovered() {
        let spec = fig1_spec();
        let grid = linewidth_grid(spec.f0_hz, spec.kappa_hz, 30, 4.0);
        let clean = synth_s11(&spec, &grid, 0.0, 0).unwrap();
        let a = Complex64::from_polar(0.8, 1.1);
        let tau = 2.5e-7;
        let vals: Vec<Complex64> = grid
            .iter()
            .zip(clean.values())
            .map(|(f, v)| {
                a * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * tau * (f - spec.f0_hz))
                    * v
            })
            .collect();
        let sp = ComplexSpectrum::new(grid, vals, Meta::new()).unwrap();
        let fit = fit_resonance(&sp, ModelKind::Lorentzian, None).unwrap();
        assert!(fit.residual_rms < 1e-9, "{}", fit.residual_rms);
        assert!((fit.params.background.tau_s - tau).abs() < 1e-12);
        assert!((fit.params.background.scale() - a).norm() < 1e-9);
    }

    #[test]
    fn invalid_init_is_rejected() {
        let spec = fig1_spec();
        let grid = linewidth_grid(spec.f0_hz, spec.kappa_hz, 10, 4.0);
        let sp = synth_s11(&spec, &grid, 0.0, 0).unwrap();
        let bad = ResonanceModelParams::lorentzian(spec.f0_hz, 1e5, 2e5);
        assert!(fit_resonance(&sp, ModelKind::Lorentzian, Some(bad)).is_err());
    }

    #[test]
    fn result_json_field_names() {
        let spec = fig1_spec();
        let grid = linewidth_grid(spec.f0_hz, spec.kappa_hz, 10, 4.0);
        let sp = synth_s11(&spec, &grid, 0.0, 0).unwrap();
        let fit = fit_resonance(&sp, ModelKind::Lorentzian, None).unwrap();
        let v = serde_json::to_value(&fit).unwrap();
        for key in [
            "params",
            "param_errors",
            "qi",
            "qe",
            "residual_rms",
            "n_iterations",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        for key in ["f0_hz", "kappa_hz", "kappa_e_hz", "dark", "background"] {
            assert!(v["params"].get(key).is_some(), "missing params.{key}");
        }
    }
}
