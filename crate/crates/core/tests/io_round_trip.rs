//! Writers and parsers are exact inverses on every supported format.

use num_complex::Complex64;
use proptest::prelude::*;
use sawkit::spectra::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6f64..1e6, -1e-9f64..1e-9, Just(0.0)]
}

proptest! {
    #[test]
    fn s11(values in proptest::collection::vec((finite(), finite()), 8..40), f0 in 1e6f64..1e10) {
        let freqs: Vec<f64> = (0..values.len()).map(|i| f0 + 17.25 * i as f64).collect();
        let vals = values.iter().map(|(a, b)| Complex64::new(*a, *b)).collect();
        let s = ComplexSpectrum::new(freqs, vals, Meta::new()).unwrap().with_meta("instrument", "vna");
        let back = parse_s11_csv(&write_s11_csv(&s)).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn xps(counts in proptest::collection::vec(0.0f64..1e6, 5..50)) {
        let be: Vec<f64> = (0..counts.len()).map(|i| 540.0 - 0.1 * i as f64).collect();
        let s = XpsSpectrum::new(be, counts, ElementLine::Other("Fe2p".into())).unwrap();
        prop_assert_eq!(parse_xps_csv(&write_xps_csv(&s)).unwrap(), s);
    }

    #[test]
    fn afm(h in proptest::collection::vec(-1e-8f64..1e-8, 16 * 17)) {
        let img = AfmImage::new(16, 17, 2e-9, 3e-9, h).unwrap();
        prop_assert_eq!(parse_afm_grid(&write_afm_grid(&img)).unwrap(), img);
    }

    #[test]
    fn walkoff(eta in proptest::collection::vec(-89.0f64..89.0, 91..120)) {
        let theta: Vec<f64> = (0..eta.len()).map(|i| -45.0 + i as f64).collect();
        let c = WalkoffCurve::new(theta, eta).unwrap();
        prop_assert_eq!(parse_walkoff_csv(&write_walkoff_csv(&c)).unwrap(), c);
    }

    #[test]
    fn sweeps(seed in 0u64..1000) {
        let temps: Vec<f64> = (0..20).map(|i| 0.01 + 0.01 * i as f64).collect();
        let t = synth_temperature_sweep(1e-5, 690e6, &temps, 10.0, seed).unwrap();
        prop_assert_eq!(parse_temperature_sweep_csv(&write_temperature_sweep_csv(&t)).unwrap(), t);
        let params = sawkit::tls::PowerModelParams {
            f_delta_tls: 5.66e-4,
            n_c: 1e3,
            beta: 0.5,
            q_i_res: 2.6e3,
            temperature_k: 0.01,
            f0_hz: 690e6,
        };
        let n: Vec<f64> = (0..10).map(|i| 10f64.powi(i)).collect();
        let p = synth_power_sweep(&params, &n, 0.02, seed).unwrap();
        prop_assert_eq!(parse_power_sweep_csv(&write_power_sweep_csv(&p)).unwrap(), p);
    }
}

#[test]
fn parse_errors_carry_line_numbers() {
    let text = "# a=b\nfreq_hz,re,im\n1,0,0\n2,0,0\n3,x,0\n";
    match parse_s11_csv(text) {
        Err(sawkit::Error::Parse { line, .. }) => assert_eq!(line, 5),
        other => panic!("unexpected {other:?}"),
    }
}
