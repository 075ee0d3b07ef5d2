use std::collections::HashSet;

use optomech::analysis::{fit_lorentzian_xy, fit_rotation, FitOptions, MaskSpec};
use optomech::model::{effective_mechanics, hz, DriveScheme, EffectiveMechanics, SystemParams};
use optomech::protocols::{params_for_nc, point_seed};
use optomech::spectra::{
    cavity_output_noise, lorentzian, s_quadratures_bae, s_x_dtt, uniform_grid, voltage_noise, Backend, ModelKnobs,
    ReadoutChain, Reference, Spectrum, SpectrumKind,
};
use proptest::prelude::*;

fn eff(p: &SystemParams, scheme: &DriveScheme, n_m: f64) -> EffectiveMechanics {
    effective_mechanics(p, scheme).unwrap().with_occupancy(n_m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lorentzian_fit_recovers_noiseless_parameters(
        center in -2.0f64..2.0,
        fwhm in 0.5f64..5.0,
        area in 1e-3f64..1e3,
        floor_frac in 0.0f64..0.5,
        scale in prop::sample::select(vec![1e-30, 1.0, 1e12]),
    ) {
        let x = uniform_grid(30.0, 801);
        let floor = floor_frac * area / fwhm;
        let y: Vec<f64> = x
            .iter()
            .map(|&o| scale * (floor + area * lorentzian(o - center, fwhm)))
            .collect();
        let f = fit_lorentzian_xy(&x, &y, &MaskSpec::none(), &FitOptions::default()).unwrap();
        prop_assert!((f.center - center).abs() < 1e-4 * fwhm);
        prop_assert!((f.fwhm / fwhm - 1.0).abs() < 1e-4);
        prop_assert!((f.area / (scale * area) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn rotation_fit_is_exact_on_model_data(
        x1 in 0.1f64..10.0,
        extra in 0.0f64..200.0,
        n in 2usize..12,
    ) {
        let pts: Vec<(f64, f64, f64)> = (0..n)
            .map(|k| {
                let phi = std::f64::consts::FRAC_PI_2 * k as f64 / (n - 1) as f64;
                (phi, x1 + extra * phi.sin().powi(2), 1.0)
            })
            .collect();
        let r = fit_rotation(&pts).unwrap();
        prop_assert!((r.x1_variance() - x1).abs() < 1e-9 * (x1 + extra));
        prop_assert!((r.x2_variance() - (x1 + extra)).abs() < 1e-9 * (x1 + extra));
    }

    #[test]
    fn readout_round_trip_recovers_occupancy(
        n_c in 0.105f64..5.0,
        alpha in 0.05f64..2.0,
        n_add in 0.0f64..30.0,
    ) {
        let p = SystemParams::device_default().with_total_cavity_occupancy(n_c).unwrap();
        let chain = ReadoutChain::with_added_quanta(&p, alpha, n_add).unwrap();
        let back = chain.n_c_from_delta_eta(&p, chain.delta_eta(&p));
        prop_assert!((back - n_c).abs() < 1e-9 * n_c.max(1.0));
    }

    #[test]
    fn params_for_nc_sets_total_occupancy(n_c in 0.0f64..3.0) {
        let p = params_for_nc(&SystemParams::device_default(), n_c).unwrap();
        prop_assert!((p.n_c() - n_c).abs() < 1e-12 * n_c.max(1.0));
        let b = p.n_c_bath();
        prop_assert!(b.l >= 0.0 && b.r >= 0.0 && b.int >= 0.0);
    }

    #[test]
    fn spectrum_csv_round_trip(
        vals in prop::collection::vec(0.0f64..1e6, 2..50),
        exp in -40i32..10,
    ) {
        let scale = 10f64.powi(exp);
        let grid: Vec<f64> = (0..vals.len()).map(|i| i as f64 * 0.37 - 3.0).collect();
        let values: Vec<f64> = vals.iter().map(|v| v * scale).collect();
        let s = Spectrum::new(grid, values, SpectrumKind::MechanicalX, Reference::MechanicalResonance, Backend::Floquet)
            .unwrap();
        let back = Spectrum::from_csv(&s.to_csv(&["note".into()])).unwrap();
        prop_assert_eq!((back.kind, back.reference, back.source), (s.kind, s.reference, s.source));
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-11 * y.abs());
        prop_assert!(back.len() == s.len());
        prop_assert!(close(&back.freq_grid, &s.freq_grid) && close(&back.values, &s.values));
    }

    #[test]
    fn point_seeds_are_distinct(seed in any::<u64>()) {
        let set: HashSet<u64> = (0..256).map(|i| point_seed(seed, i)).collect();
        prop_assert_eq!(set.len(), 256);
    }

    #[test]
    fn closed_form_spectra_are_positive(
        n_p in 1e4f64..1e7,
        n_c in 0.0f64..2.0,
        n_m in 0.0f64..200.0,
        delta_hz in 100.0f64..2000.0,
    ) {
        let p = params_for_nc(&SystemParams::device_default(), n_c).unwrap();
        let grid = uniform_grid(hz(200.0), 101);

        let dtt = DriveScheme::dtt(hz(delta_hz), n_p);
        let s = s_x_dtt(&grid, &p, &eff(&p, &dtt, n_m), &dtt).unwrap();
        prop_assert!(s.values.iter().all(|v| *v > 0.0));

        let bae = DriveScheme::bae(2.0 * n_p);
        let q = s_quadratures_bae(&grid, &p, &eff(&p, &bae, n_m), &bae, &ModelKnobs::default()).unwrap();
        for (a, b) in q.x1.values.iter().zip(&q.x2.values) {
            prop_assert!(*a > 0.0 && b >= a);
        }

        let v = voltage_noise(&cavity_output_noise(&grid, &p).unwrap(), &ReadoutChain::new(0.2, 1.0).unwrap(), &p)
            .unwrap();
        prop_assert!(v.values.iter().all(|x| *x > 0.0));
    }
}
