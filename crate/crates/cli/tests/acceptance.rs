//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line each; exits nonzero when any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sawkit::afm::{fit_step_heights, remove_line_tilt, rms_roughness};
use sawkit::par::over_seeds;
use sawkit::resonance::{fit_resonance, ModelKind};
use sawkit::spectra::{
    linewidth_grid, noise_sigma_for_snr_db, synth_afm_gaussian_noise, synth_afm_terraces,
    synth_power_sweep, synth_s11, synth_temperature_sweep, synth_xps_peak_on_step, AfmImage,
    DarkModeSpec, ElementLine, S11Spec, TerraceSpec, WalkoffCurve, XpsPeakSpec,
};
use sawkit::tls::{
    fit_fdelta, fit_power_sweep, q_tls, qi_power_model, re_digamma_half_plus_imag, PowerModelParams,
};
use sawkit::walkoff::{find_zero_crossings, walkoff_from_flux};
use sawkit::xps::{atomic_percentages, shirley_background, SensitivityTable, ShirleyOptions};
use sawkit::Execution;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

const EXEC: Execution = Execution::Parallel;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

// 1. Lorentzian round trip.
fn resonance_round_trip() -> Outcome {
    let start = Instant::now();
    let trial = |spec: &S11Spec, seed: u64| -> (bool, f64, f64, f64) {
        let grid = linewidth_grid(spec.f0_hz, spec.kappa_hz, 2000, 3.0);
        let data = synth_s11(spec, &grid, noise_sigma_for_snr_db(40.0), seed).unwrap();
        let qi = spec.f0_hz / (spec.kappa_hz - spec.kappa_e_hz);
        let qe = spec.f0_hz / spec.kappa_e_hz;
        match fit_resonance(&data, ModelKind::Lorentzian, None) {
            Ok(fit) => {
                let e = (
                    rel(fit.qi, qi),
                    rel(fit.qe, qe),
                    rel(fit.params.f0_hz, spec.f0_hz),
                );
                (e.0 < 0.02 && e.1 < 0.02 && e.2 < 1e-7, e.0, e.1, e.2)
            }
            Err(_) => (false, f64::INFINITY, f64::INFINITY, f64::INFINITY),
        }
    };
    let results = over_seeds(EXEC, 0..100, |seed| {
        let mut r = ChaCha8Rng::seed_from_u64(1000 + seed);
        let f0 = r.random_range(686e6..692e6);
        let qi = r.random_range(5e3..1.2e4);
        let qe = r.random_range(1e4..2e4);
        trial(&S11Spec::from_q(f0, qi, qe), seed)
    });
    let fixture = trial(&S11Spec::from_q(688.4e6, 6.8e3, 1.4e4), 7);
    let elapsed = start.elapsed().as_secs_f64();
    let passed = results.iter().filter(|r| r.0).count();
    let worst = results.iter().fold((0.0f64, 0.0f64, 0.0f64), |m, r| {
        (m.0.max(r.1), m.1.max(r.2), m.2.max(r.3))
    });
    outcome(
        passed >= 95 && fixture.0 && elapsed < 10.0,
        format!(
            "{passed}/100 within tolerance (worst Qi {:.2e}, Qe {:.2e}, f0 {:.2e}); \
             688.4 MHz fixture {}; {elapsed:.2} s",
            worst.0,
            worst.1,
            worst.2,
            if fixture.0 { "ok" } else { "failed" }
        ),
    )
}

// 2. Dark-mode round trip.
fn dark_mode_round_trip() -> Outcome {
    let (g, gamma, offset) = (30e3, 20e3, 75e3);
    let mut spec = S11Spec::from_q(679.639e6 - offset, 6.8e3, 1.4e4);
    spec.dark = Some(DarkModeSpec {
        g_hz: g,
        offset_hz: offset,
        gamma_hz: gamma,
    });
    let results = over_seeds(EXEC, 0..10, |seed| {
        let grid = linewidth_grid(spec.f0_hz, spec.kappa_hz, 2000, 3.0);
        let data = synth_s11(&spec, &grid, noise_sigma_for_snr_db(40.0), seed).unwrap();
        match fit_resonance(&data, ModelKind::DarkMode, None) {
            Ok(fit) => {
                let d = fit
                    .params
                    .dark
                    .expect("dark-mode fit carries dark parameters");
                [
                    rel(d.g_hz, g),
                    rel(d.gamma_hz, gamma),
                    rel(d.f_dark_hz - fit.params.f0_hz, offset),
                ]
            }
            Err(_) => [f64::INFINITY; 3],
        }
    });
    let worst = results.iter().fold([0.0f64; 3], |m, r| {
        [m[0].max(r[0]), m[1].max(r[1]), m[2].max(r[2])]
    });
    outcome(
        worst.iter().all(|e| *e < 0.05),
        format!(
            "10 seeds, worst relative error g {:.2e}, gamma {:.2e}, detuning {:.2e}",
            worst[0], worst[1], worst[2]
        ),
    )
}

/// `Re ψ(1/2 + iy) = −γ + Σ_{n≥0} [1/(n+1) − (n+½)/((n+½)² + y²)]`, summed
/// over 10⁷ terms from the small end with compensated addition, plus an
/// Euler–Maclaurin estimate of the remainder.
fn digamma_series_oracle(y: f64) -> f64 {
    const N: usize = 10_000_000;
    let term = |n: f64| 1.0 / (n + 1.0) - (n + 0.5) / ((n + 0.5).powi(2) + y * y);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for n in (0..N).rev() {
        let t = term(n as f64) - comp;
        let s = sum + t;
        comp = (s - sum) - t;
        sum = s;
    }
    let nf = N as f64;
    let h = 1e-3;
    let integral = 0.5 * ((nf + 0.5).powi(2) + y * y).ln() - (nf + 1.0).ln();
    let derivative = (term(nf + h) - term(nf - h)) / (2.0 * h);
    let tail = integral + 0.5 * term(nf) - derivative / 12.0;
    -0.577_215_664_901_532_9 + sum + tail
}

// 3. Digamma accuracy.
fn digamma_accuracy() -> Outcome {
    let grid = [0.0, 0.01, 0.1, 1.0, 5.0, 8.0, 20.0, 100.0];
    let errors: Vec<f64> = sawkit::par::map(EXEC, &grid, |&y| {
        (re_digamma_half_plus_imag(y) - digamma_series_oracle(y)).abs()
    });
    let worst = errors.iter().cloned().fold(0.0, f64::max);
    let exact_half = -0.577_215_664_901_532_9 - 2.0 * std::f64::consts::LN_2;
    let half_err = (re_digamma_half_plus_imag(0.0) - exact_half).abs();
    outcome(
        worst <= 1e-10 && half_err <= 1e-12,
        format!("max |error| vs series {worst:.2e} on 8 points; psi(1/2) error {half_err:.2e}"),
    )
}

// 4. Temperature-sweep inversion.
fn tempsweep_inversion() -> Outcome {
    let temps: Vec<f64> = (0..20).map(|i| 0.010 + 0.190 * i as f64 / 19.0).collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for fd in [5.8e-6, 2.48e-5, 7.7e-6, 1.24e-5, 1.06e-5, 7.53e-5] {
        let ok = over_seeds(EXEC, 0..100, |seed| {
            let series = synth_temperature_sweep(fd, 690e6, &temps, 10.0, seed).unwrap();
            fit_fdelta(&series).is_ok_and(|f| rel(f.f_delta_tls, fd) < 0.05)
        })
        .into_iter()
        .filter(|b| *b)
        .count();
        pass &= ok >= 90;
        parts.push(format!("{fd:.3e}: {ok}/100"));
    }
    outcome(pass, parts.join(", "))
}

// 5. Q_TLS consistency.
fn q_tls_consistency() -> Outcome {
    // CODATA 2018 exact values.
    let hbar = 6.626_070_15e-34 / (2.0 * std::f64::consts::PI);
    let kb = 1.380_649e-23;
    let (fd, f0, t) = (5.8e-6, 690e6, 0.010);
    let x = hbar * 2.0 * std::f64::consts::PI * f0 / (2.0 * kb * t);
    let expected = 1.0 / (fd * x.tanh());
    let q = q_tls(fd, f0, t);
    let err = rel(q, expected);
    outcome(
        (1e4..=3e5).contains(&q) && err <= 1e-12,
        format!("Q_TLS = {q:.6e}, tanh argument {x:.4}, relative difference {err:.1e}"),
    )
}

// 6. Power-model limits and sweep recovery.
fn power_model() -> Outcome {
    let mut worst_limit = 0.0f64;
    for fd in [5.8e-6, 2.48e-5, 7.7e-6, 1.24e-5, 1.06e-5, 7.53e-5, 5.66e-4] {
        for beta in [0.5, 1.0] {
            // At F·δ0 = 5.66e-4 and β = 0.5 the high-power limit is only
            // approached as n^(-1/2); 1e12·n_c leaves a 0.14% gap there.
            if fd == 5.66e-4 && beta == 0.5 {
                continue;
            }
            let p = PowerModelParams {
                f_delta_tls: fd,
                n_c: 1e3,
                beta,
                q_i_res: 2.6e3,
                temperature_k: 0.010,
                f0_hz: 690e6,
            };
            let tanh = sawkit::tls::thermal_factor(p.f0_hz, p.temperature_k);
            let low = 1.0 / (fd * tanh + 1.0 / p.q_i_res);
            worst_limit = worst_limit
                .max(rel(qi_power_model(&p, 1e12 * p.n_c), p.q_i_res))
                .max(rel(qi_power_model(&p, 1e-12 * p.n_c), low));
        }
    }
    let p = PowerModelParams {
        f_delta_tls: 5.66e-4,
        n_c: 1e3,
        beta: 0.5,
        q_i_res: 2.6e3,
        temperature_k: 0.010,
        f0_hz: 690e6,
    };
    let n: Vec<f64> = (0..25)
        .map(|i| 10f64.powf(-1.0 + 9.0 * i as f64 / 24.0))
        .collect();
    let recovered = over_seeds(EXEC, 0..100, |seed| {
        let s = synth_power_sweep(&p, &n, 0.02, seed).unwrap();
        fit_power_sweep(&s, None).is_ok_and(|f| rel(f.params.f_delta_tls, p.f_delta_tls) < 0.10)
    })
    .into_iter()
    .filter(|b| *b)
    .count();
    outcome(
        worst_limit <= 1e-3 && recovered >= 95,
        format!(
            "worst limit deviation {worst_limit:.2e}; F·δ0 within 10% in {recovered}/100 sweeps"
        ),
    )
}

// 7. Shirley background.
fn shirley() -> Outcome {
    let base = XpsPeakSpec {
        line: ElementLine::O1s,
        center_ev: 530.0,
        sigma_ev: 0.6,
        gamma_ev: 0.4,
        mix: 0.3,
        area: 5000.0,
        low_level: 200.0,
        step: 300.0,
        be_min_ev: 515.0,
        be_max_ev: 545.0,
        n_points: 601,
        noise_sigma: 0.0,
    };
    let mut fixtures = vec![(base.clone(), 0u64)];
    for (k, noise) in [2.0, 5.0, 10.0].into_iter().enumerate() {
        for seed in 0..10 {
            fixtures.push((
                XpsPeakSpec {
                    noise_sigma: noise,
                    ..base.clone()
                },
                100 * k as u64 + seed,
            ));
        }
    }
    for (center, step) in [
        (520.0, 50.0),
        (540.0, 800.0),
        (530.0, 0.0),
        (525.0, 300.0),
        (535.0, 300.0),
    ] {
        fixtures.push((
            XpsPeakSpec {
                center_ev: center,
                step,
                ..base.clone()
            },
            0,
        ));
    }
    let mut max_iter = 0;
    let mut below = true;
    let mut worst_area = 0.0f64;
    let mut converged = true;
    for (spec, seed) in &fixtures {
        let (spectrum, truth) = synth_xps_peak_on_step(spec, *seed).unwrap();
        match shirley_background(&spectrum, (515.0, 545.0), ShirleyOptions::default()) {
            Ok(bg) => {
                max_iter = max_iter.max(bg.iterations);
                below &= bg.background.iter().zip(&bg.counts).all(|(b, c)| b <= c);
                // Area truth assumes the window holds the Lorentzian tails;
                // peaks near an edge only test convergence and clipping.
                let centered = (spec.center_ev - 530.0).abs() <= 5.0;
                if spec.noise_sigma == 0.0 && centered {
                    worst_area = worst_area.max(rel(bg.peak_area(), truth.area_in_window));
                }
            }
            Err(_) => converged = false,
        }
    }
    outcome(
        converged && max_iter <= 50 && below && worst_area <= 0.01,
        format!(
            "{} fixtures, max {max_iter} iterations, background <= data: {below}, \
             worst noiseless area error {worst_area:.2e} for peaks within 5 eV of the window center",
            fixtures.len()
        ),
    )
}

// 8. Atomic percentages.
fn atomic_percent() -> Outcome {
    let lines = [
        ElementLine::O1s,
        ElementLine::Nb3d,
        ElementLine::Li1s,
        ElementLine::C1s,
    ];
    let table = SensitivityTable::new(
        lines
            .iter()
            .cloned()
            .zip([0.733, 2.517, 0.028, 0.314])
            .collect(),
    )
    .unwrap();
    let areas: BTreeMap<ElementLine, f64> = lines
        .iter()
        .cloned()
        .zip([1234.5, 876.25, 13.0, 77.7])
        .collect();
    let base = atomic_percentages(&areas, &table).unwrap().atomic_percent;
    let mut exact_scaling = true;
    for k in [-20i32, -3, 1, 7, 30] {
        let c = 2f64.powi(k);
        let scaled = areas.iter().map(|(l, a)| (l.clone(), a * c)).collect();
        exact_scaling &= atomic_percentages(&scaled, &table).unwrap().atomic_percent == base;
    }
    let mut worst_general = 0.0f64;
    for c in [1e-6, 0.3, 7.77, 1e9] {
        let scaled = areas.iter().map(|(l, a)| (l.clone(), a * c)).collect();
        let p = atomic_percentages(&scaled, &table).unwrap().atomic_percent;
        for (l, v) in &p {
            worst_general = worst_general.max(rel(*v, base[l]));
        }
    }
    let uniform = SensitivityTable::uniform(lines[..3].iter().cloned());
    let composition: BTreeMap<ElementLine, f64> =
        lines[..3].iter().cloned().zip([67.0, 22.3, 10.0]).collect();
    let li_nb = atomic_percentages(&composition, &uniform)
        .unwrap()
        .ratios_to_nb
        .and_then(|r| r.li)
        .unwrap_or(f64::NAN);
    let mut equal_exact = true;
    for n in 1..=4 {
        let t = SensitivityTable::uniform(lines[..n].iter().cloned());
        let a = lines[..n].iter().map(|l| (l.clone(), 42.0)).collect();
        let p = atomic_percentages(&a, &t).unwrap().atomic_percent;
        equal_exact &= p.values().all(|v| *v == 100.0 / n as f64);
    }
    outcome(
        exact_scaling
            && worst_general <= 4.0 * f64::EPSILON
            && (0.46 - 0.09..=0.46 + 0.09).contains(&li_nb)
            && equal_exact,
        format!(
            "power-of-two scaling exact: {exact_scaling} (other factors within {worst_general:.1e}); \
             Li/Nb = {li_nb:.4}; equal areas and factors exact: {equal_exact}"
        ),
    )
}

// 9. AFM.
fn afm() -> Outcome {
    let constant = AfmImage::new(32, 32, 1e-8, 1e-8, vec![3.21e-9; 1024]).unwrap();
    let rq_constant = rms_roughness(&constant);
    let sigma = 168.7e-12;
    let noise = synth_afm_gaussian_noise(256, 256, 1e-8, sigma, 11).unwrap();
    let sigma_err = rel(rms_roughness(&noise), sigma);
    let mut counts = Vec::new();
    for step in [200e-12, 240e-12] {
        let spec = TerraceSpec {
            nx: 256,
            ny: 256,
            pixel_m: 1e-8,
            levels: 3,
            step_m: step,
            noise_sigma_m: 80e-12,
            tilt_x_m_per_px: 0.0,
            tilt_y_m_per_px: 0.0,
        };
        let ok = over_seeds(EXEC, 0..100, |seed| {
            let img = synth_afm_terraces(&spec, seed).unwrap();
            fit_step_heights(&img).is_ok_and(|r| rel(r.mean_step_m, step) < 0.15)
        })
        .into_iter()
        .filter(|b| *b)
        .count();
        counts.push(ok);
    }
    let mut idempotent = true;
    for seed in 0..5 {
        let img = synth_afm_terraces(
            &TerraceSpec {
                nx: 96,
                ny: 64,
                pixel_m: 1e-8,
                levels: 3,
                step_m: 240e-12,
                noise_sigma_m: 80e-12,
                tilt_x_m_per_px: 3e-11,
                tilt_y_m_per_px: -1e-11,
            },
            seed,
        )
        .unwrap();
        for order in 0..=2 {
            let once = remove_line_tilt(&img, order).unwrap();
            idempotent &= remove_line_tilt(&once, order).unwrap() == once;
        }
    }
    outcome(
        rq_constant == 0.0 && sigma_err <= 0.02 && counts.iter().all(|c| *c >= 90) && idempotent,
        format!(
            "constant Rq = {rq_constant}; noise sigma error {sigma_err:.2e}; \
             steps within 15%: 200 pm {}/100, 240 pm {}/100; flattening idempotent: {idempotent}",
            counts[0], counts[1]
        ),
    )
}

// 10. Walk-off.
fn walkoff() -> Outcome {
    let theta: Vec<f64> = (0..=360).map(|i| -90.0 + 0.5 * i as f64).collect();
    let curve = |zero: f64, scale: f64| {
        let eta = theta
            .iter()
            .map(|t| scale * (2.0 * (t - zero)).to_radians().sin())
            .collect();
        WalkoffCurve::new(theta.clone(), eta).unwrap()
    };
    let mut worst_pos = 0.0f64;
    let mut counts_ok = true;
    let mut odd = true;
    let mut scale_exact = true;
    let mut scale_general = 0.0f64;
    for zero in [-30.0, 0.0, 17.3, 44.9, 75.0] {
        let base = curve(zero, 1.0);
        let zeros = find_zero_crossings(&base);
        let expected: Vec<f64> = [zero - 90.0, zero, zero + 90.0, zero + 180.0]
            .into_iter()
            .filter(|z| *z > theta[0] && *z < theta[theta.len() - 1])
            .collect();
        counts_ok &= zeros.len() == expected.len();
        for (z, e) in zeros.iter().zip(&expected) {
            worst_pos = worst_pos.max((z.theta_deg - e).abs());
        }
        let flipped = find_zero_crossings(&base.clone().negated());
        odd &= flipped.len() == zeros.len()
            && flipped.iter().zip(&zeros).all(|(a, b)| {
                a.theta_deg == b.theta_deg && a.slope_deg_per_deg == -b.slope_deg_per_deg
            });
        for k in [-10i32, -1, 3, 12] {
            let scaled = find_zero_crossings(&base.scaled(2f64.powi(k)));
            scale_exact &= scaled.len() == zeros.len()
                && scaled
                    .iter()
                    .zip(&zeros)
                    .all(|(a, b)| a.theta_deg == b.theta_deg);
        }
        for c in [1e-3, 0.37, 5.5, 1e3] {
            let scaled = find_zero_crossings(&base.scaled(c));
            scale_exact &= scaled.len() == zeros.len();
            for (a, b) in scaled.iter().zip(&zeros) {
                scale_general = scale_general.max((a.theta_deg - b.theta_deg).abs());
            }
        }
    }
    for (pp, pl) in [(0.3, 1.0), (-2.0, 0.5), (7.0, -1.5)] {
        odd &= walkoff_from_flux(-pp, pl, 1.0, 2.0).unwrap()
            == -walkoff_from_flux(pp, pl, 1.0, 2.0).unwrap();
    }
    outcome(
        counts_ok && worst_pos <= 0.5 && odd && scale_exact && scale_general <= 1e-12,
        format!(
            "zero count correct: {counts_ok}, worst position error {worst_pos:.2e} deg; \
             odd symmetry exact: {odd}; power-of-two scaling exact: {scale_exact} \
             (other factors within {scale_general:.1e} deg)"
        ),
    )
}

trait CurveOps {
    fn negated(self) -> WalkoffCurve;
    fn scaled(&self, c: f64) -> WalkoffCurve;
}

impl CurveOps for WalkoffCurve {
    fn negated(self) -> WalkoffCurve {
        self.scaled(-1.0)
    }

    fn scaled(&self, c: f64) -> WalkoffCurve {
        WalkoffCurve::new(
            self.theta_deg().to_vec(),
            self.eta_deg().iter().map(|e| c * e).collect(),
        )
        .unwrap()
    }
}

// 11. CLI determinism.
fn sawkit(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_sawkit"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_file() {
            out.insert(
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            );
        }
    }
    out
}

fn cli_pipeline(root: &Path, extra: &[&str]) -> bool {
    let s = |p: &str| root.join(p).to_string_lossy().into_owned();
    let mut ok = true;
    for kind in ["s11", "tempsweep", "powersweep", "afm", "walkoff"] {
        ok &= sawkit(&["synth", kind, "--seed", "42", "--out", &s("data")]);
    }
    ok &= sawkit(&[
        "synth",
        "xps",
        "--line",
        "O1s",
        "--noise",
        "3",
        "--seed",
        "42",
        "--out",
        &s("xps"),
    ]);
    ok &= sawkit(&[
        "synth",
        "xps",
        "--line",
        "Nb3d",
        "--name",
        "nb",
        "--center-ev",
        "207.3",
        "--be-min-ev",
        "200",
        "--be-max-ev",
        "215",
        "--points",
        "301",
        "--seed",
        "43",
        "--out",
        &s("xps"),
    ]);
    let analyses: [(&str, &str); 5] = [
        ("fit-resonance", "s11.csv"),
        ("fit-tempsweep", "tempsweep.csv"),
        ("fit-powersweep", "powersweep.csv"),
        ("afm", "afm.txt"),
        ("walkoff", "walkoff.csv"),
    ];
    for (cmd, file) in analyses {
        let mut args = vec![cmd, file];
        let input = s(&format!("data/{file}"));
        let out = s("reports");
        args[1] = &input;
        args.extend(["--out", &out, "--emit-svg"]);
        args.extend(extra);
        ok &= sawkit(&args);
    }
    let sens = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../config/sensitivity_default.json")
        .to_string_lossy()
        .into_owned();
    let mut args = vec![
        "xps-quant".to_string(),
        s("xps"),
        "--sensitivity".into(),
        sens,
        "--out".into(),
        s("reports"),
        "--emit-svg".into(),
    ];
    args.extend(extra.iter().map(|a| a.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    ok &= sawkit(&refs);
    ok
}

fn cli_determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let ran = cli_pipeline(a.path(), &[])
        && cli_pipeline(b.path(), &[])
        && cli_pipeline(c.path(), &["--sequential"]);
    let mut identical = ran;
    let mut files = 0;
    for sub in ["data", "xps", "reports"] {
        let x = dir_bytes(&a.path().join(sub));
        files += x.len();
        identical &= x == dir_bytes(&b.path().join(sub)) && x == dir_bytes(&c.path().join(sub));
    }
    outcome(
        ran && identical && files > 0,
        format!(
            "all commands succeeded: {ran}; {files} output files byte-identical across two runs \
             and a sequential run: {identical}"
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("resonance round trip", resonance_round_trip),
        ("dark-mode round trip", dark_mode_round_trip),
        ("digamma accuracy", digamma_accuracy),
        ("temperature-sweep inversion", tempsweep_inversion),
        ("Q_TLS consistency", q_tls_consistency),
        ("power-model limits and recovery", power_model),
        ("Shirley background", shirley),
        ("atomic percentages", atomic_percent),
        ("AFM", afm),
        ("walk-off", walkoff),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} [{:>2}] {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            k + 1,
            o.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
