//! Multi-step workflows through the public API.

use std::collections::BTreeMap;

use sawkit::resonance::{fit_batch, ModelKind};
use sawkit::spectra::*;
use sawkit::xps::{quantify, BandModel, QuantConfig, SensitivityTable};
use sawkit::Execution;

#[test]
fn batch_fits_agree_across_execution_policies() {
    let spectra: Vec<ComplexSpectrum> = (0..6)
        .map(|k| {
            let spec = S11Spec::from_q(688e6 + 1e6 * k as f64, 6e3 + 500.0 * k as f64, 1.5e4);
            let grid = linewidth_grid(spec.f0_hz, spec.kappa_hz, 200, 3.0);
            synth_s11(&spec, &grid, noise_sigma_for_snr_db(40.0), k).unwrap()
        })
        .collect();
    let seq = fit_batch(&spectra, ModelKind::Lorentzian, Execution::Sequential);
    let par = fit_batch(&spectra, ModelKind::Lorentzian, Execution::Parallel);
    assert_eq!(seq, par);
    assert!(seq.iter().all(Result::is_ok));
}

fn peak(line: ElementLine, center: f64, area: f64, lo: f64, hi: f64) -> XpsSpectrum {
    let spec = XpsPeakSpec {
        line,
        center_ev: center,
        sigma_ev: 0.5,
        gamma_ev: 0.2,
        mix: 0.3,
        area,
        low_level: 100.0,
        step: 150.0,
        be_min_ev: lo,
        be_max_ev: hi,
        n_points: ((hi - lo) / 0.05) as usize + 1,
        noise_sigma: 0.0,
    };
    synth_xps_peak_on_step(&spec, 0).unwrap().0
}

#[test]
fn charge_shift_then_quantify_recovers_composition() {
    // Every spectrum is charged by +1.2 eV.
    let charge = 1.2;
    let spectra = vec![
        peak(ElementLine::Nb3d, 207.3 + charge, 2230.0, 197.0, 218.0),
        peak(ElementLine::O1s, 530.0 + charge, 6700.0, 520.0, 541.0),
        peak(ElementLine::Li1s, 55.0 + charge, 1000.0, 45.0, 66.0),
    ];
    let table = SensitivityTable::uniform([ElementLine::Nb3d, ElementLine::O1s, ElementLine::Li1s]);
    let mut bands = BTreeMap::new();
    bands.insert(ElementLine::O1s, BandModel::o1s_default());
    let config = QuantConfig {
        bands,
        ..QuantConfig::default()
    };
    let (report, lines, shift) = quantify(&spectra, &table, &config).unwrap();
    assert!((shift + charge).abs() < 0.01, "shift {shift}");
    let ratios = report.ratios_to_nb.unwrap();
    assert!((ratios.o.unwrap() / (6700.0 / 2230.0) - 1.0).abs() < 0.02);
    assert!((ratios.li.unwrap() / (1000.0 / 2230.0) - 1.0).abs() < 0.02);
    let o1s = lines.iter().find(|l| l.line == ElementLine::O1s).unwrap();
    let fit = o1s.bands.as_ref().unwrap();
    let total: f64 = fit.areas.iter().sum();
    assert!(
        fit.areas[0] / total > 0.9,
        "metal-oxide band dominates: {:?}",
        fit.areas
    );
    assert!((report.atomic_percent.values().sum::<f64>() - 100.0).abs() < 1e-9);
}
