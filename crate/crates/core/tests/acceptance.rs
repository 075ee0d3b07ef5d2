//! Acceptance criteria 1-10. Each test writes one `[PASS]`, `[FAIL]` or
//! `[NOTE]` line straight to stdout (so it shows without `--nocapture`)
//! and fails only when a gating criterion fails. Tolerances are pinned here.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;
use std::time::Instant;

use optomech::analysis::{
    fit_lorentzian, fit_lorentzian_xy, sideband_asymmetry, weighted_linear_fit, FitOptions, MaskSpec,
};
use optomech::config::Config;
use optomech::floquet::{displacement_spectrum, FloquetOptions};
use optomech::model::{
    derive_xzp, hz, mass_for_xzp, n_p_for_gamma_opt, CavityBath, DeviceParams, DriveScheme, EffectiveMechanics,
    SystemParams,
};
use optomech::protocols::{
    measure_dtt, measure_quadrature, noise_injection_sweep, params_for_nc, reproduce, simulate_spectrum,
    synth_thermal_points, thermal_calibration, tone_balance, Context, FigureId, Target,
};
use optomech::spectra::{
    bad_cavity_factor, bae_budget, dtt_budget, lorentzian, uniform_grid, Backend, ModelKnobs, Side,
};
use optomech::stochastic::{integrate, mean_stderr, psd, Channel, EnsembleConfig, WelchConfig, Window};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const SEED: u64 = 2016;

fn ctx(backend: Backend) -> Context {
    Context::new(Config::device_default(), SEED, backend).unwrap()
}

fn verdict(id: u32, name: &str, pass: bool, gating: bool, detail: String) {
    let tag = match (gating, pass) {
        (false, _) => "NOTE",
        (true, true) => "PASS",
        (true, false) => "FAIL",
    };
    let line = format!("[{tag}] criterion {id:>2}: {name}: {detail}\n");
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    assert!(pass || !gating, "criterion {id} failed: {detail}");
}

fn within(v: f64, target: f64, tol: f64) -> bool {
    (v - target).abs() <= tol
}

#[test]
fn criterion_01_suppression_ratio() {
    let t0 = Instant::now();
    let c = ctx(Backend::Floquet);
    let cfg = &c.cfg;
    let eff = cfg.mechanics();
    let p = params_for_nc(&c.params, cfg.bae.n_c).unwrap();
    let s = cfg.bae_scheme();
    let target = bad_cavity_factor(&p);

    let b = bae_budget(&p, &eff, &s, &ModelKnobs::default()).unwrap();
    let closed = b.n_bad / b.n_ba_bae;

    let thermal = 1.0 + 2.0 * eff.n_m_t;
    let mask = c.bae_mask();
    let v = |phi| {
        measure_quadrature(&c, &p, &eff, &s, phi, &mask, 0)
            .unwrap()
            .variance_xzp2
            - thermal
    };
    let floquet = v(0.0) / v(FRAC_PI_2);
    let secs = t0.elapsed().as_secs_f64();

    let pass = ((closed - target) / target).abs() < 1e-9
        && ((floquet - closed) / closed).abs() <= 0.05
        && within(1.0 / target, 692.0, 5.0)
        && secs < 60.0;
    verdict(
        1,
        "X1/X2 back-action suppression",
        pass,
        true,
        format!(
            "closed form 1/{:.1}, floquet 1/{:.1} vs (kappa/omega_m)^2/32 = 1/{:.1} (tol 5%, ~1/692), {secs:.1} s (< 60 s)",
            1.0 / closed,
            1.0 / floquet,
            1.0 / target
        ),
    );
}

#[test]
fn criterion_02_residual_bae_backaction() {
    let mut vals = Vec::new();
    for backend in [Backend::ClosedForm, Backend::Floquet] {
        let c = ctx(backend);
        let eff = c.cfg.mechanics();
        let p = params_for_nc(&c.params, 0.0).unwrap();
        let s = DriveScheme::bae(4.7e6);
        let m = measure_quadrature(&c, &p, &eff, &s, 0.0, &c.bae_mask(), 0).unwrap();
        vals.push(m.variance_xzp2 - (1.0 + 2.0 * eff.n_m_t));
    }
    let pass = vals.iter().all(|v| within(*v, 0.12, 0.01));
    verdict(
        2,
        "residual X1 back-action at n_p = 4.7e6, n_c = 0",
        pass,
        true,
        format!(
            "closed form {:.4}, floquet {:.4} x_zp^2 vs 0.12 (tol 0.01)",
            vals[0], vals[1]
        ),
    );
}

#[test]
fn criterion_03_two_tone_heating() {
    let c = ctx(Backend::Floquet);
    let eff = c.cfg.mechanics();
    let p = params_for_nc(&c.params, 0.6).unwrap();
    let s = DriveScheme::dtt(hz(c.cfg.dtt.delta_hz), 2.3e6);
    let model = dtt_budget(&p, &eff, &s).unwrap().n_bar();
    let fl = measure_dtt(&c, &p, &eff, &s, 0).unwrap().n_bar;
    let pass =
        within(model, 60.0, 3.0) && ((model - 65.0) / 65.0).abs() <= 0.15 && ((fl - model) / model).abs() <= 0.01;
    verdict(
        3,
        "two-tone heating at n_p = 2.3e6 per tone",
        pass,
        true,
        format!(
            "model n_bar {model:.2} vs 60 (tol 3), {:+.1}% from the measured 65 (tol 15%); floquet sidebands give {fl:.2} (tol 1%)",
            100.0 * (model - 65.0) / 65.0
        ),
    );
}

#[test]
fn criterion_04_sideband_asymmetry() {
    let mut ratios = Vec::new();
    for backend in [Backend::ClosedForm, Backend::Floquet] {
        let c = ctx(backend);
        let eff = c.cfg.mechanics();
        let p = params_for_nc(&c.params, 0.6).unwrap();
        let s = c.cfg.dtt_scheme();
        let n_ba = dtt_budget(&p, &eff, &s).unwrap().n_ba;
        let eff65 = EffectiveMechanics {
            n_m_t: 65.0 - n_ba,
            ..eff
        };
        let grid = c.grid(eff.gamma_m);
        let red = simulate_spectrum(&c, &p, &eff65, &s, Target::Sideband(Side::Red), &grid, 0).unwrap();
        let blue = simulate_spectrum(&c, &p, &eff65, &s, Target::Sideband(Side::Blue), &grid, 0).unwrap();
        ratios.push(
            sideband_asymmetry(&red, &blue, &MaskSpec::none(), &FitOptions::default())
                .unwrap()
                .ratio,
        );
    }
    let pass = ratios.iter().all(|r| within(*r, 1.047, 0.005));
    verdict(
        4,
        "blue/red sideband area ratio at n_bar = 65, n_c = 0.6, n_cR = 0.2",
        pass,
        true,
        format!(
            "closed form {:.4}, floquet {:.4} vs 1.047 (tol 0.005)",
            ratios[0], ratios[1]
        ),
    );
}

#[test]
fn criterion_05_noise_injection_pipeline() {
    let run = |backend, n_c_r: f64, phis: &[f64]| {
        let mut cfg = Config::device_default();
        cfg.device.n_c_r = n_c_r;
        let c = Context::new(cfg, SEED, backend).unwrap();
        noise_injection_sweep(&c, &c.cfg.noise_injection.delta_eta, phis)
            .unwrap()
            .fit
    };
    let all: Vec<f64> = Config::device_default()
        .probe
        .phi_deg
        .iter()
        .map(|d| d.to_radians())
        .collect();
    let cf = run(Backend::ClosedForm, 0.2, &all);
    // two angles fix the rotation fit; the full set costs minutes on one core
    let fl = run(Backend::Floquet, 0.2, &[0.0, FRAC_PI_2]);
    let cold = run(Backend::ClosedForm, 0.0, &all);
    let pass = [&cf, &fl]
        .iter()
        .all(|f| within(f.slope, 0.44, 0.02) && within(f.intercept, 1.21, 0.05))
        && within(cold.intercept, 1.0, 0.05);
    verdict(
        5,
        "normalised X2 back-action vs injected noise",
        pass,
        true,
        format!(
            "slope {:.4} / {:.4} (closed form / floquet) vs 0.44 (tol 0.02); intercept {:.4} / {:.4} vs 1.21 (tol 0.05); \
             n_cR = 0 intercept {:.4} vs 1.00 (tol 0.05)",
            cf.slope, fl.slope, cf.intercept, fl.intercept, cold.intercept
        ),
    );
}

#[test]
fn criterion_06_thermal_calibration() {
    let c = ctx(Backend::ClosedForm);
    let cal = &c.cfg.calibration;
    let pts = synth_thermal_points(&c.params, &cal.temperatures_k, cal.thermal_relative_noise, SEED);
    let r = thermal_calibration(&c.params, &pts).unwrap();
    let slope = r.result.value;
    let g0_err = (r.g0 - c.params.g0()) / c.params.g0();
    let pass = ((slope - 9.71e8) / 9.71e8).abs() <= 0.02 && g0_err.abs() <= 0.005;
    // g0 implied by the measured slope (9.92 +- 0.16)e8
    let g0_measured = c.params.kappa() / (2.0 * 9.92e8f64.sqrt()) / hz(1.0);
    verdict(
        6,
        "thermal calibration slope (kappa/g0)^2/4",
        pass,
        true,
        format!(
            "{slope:.4e} vs 9.71e8 (tol 2%), g0 recovered to {:+.3}% (tol 0.5%); the measured 9.92e8 is {:+.1}% off, \
             i.e. g0 = {g0_measured:.2} Hz instead of {:.1} Hz",
            100.0 * g0_err,
            100.0 * (9.92e8 - 9.71e8) / 9.71e8,
            c.params.g0() / hz(1.0)
        ),
    );
}

#[test]
fn criterion_07_tone_balancing() {
    let c = ctx(Backend::Floquet);
    let eff = c.cfg.mechanics();
    let p = params_for_nc(&c.params, 0.6).unwrap();
    let g_opt = hz(1e3);
    let n_p = n_p_for_gamma_opt(&p, g_opt);
    let mut parts = Vec::new();
    let mut pass = true;
    for (backend, start) in [
        (Backend::ClosedForm, 1.01),
        (Backend::Floquet, 1.01),
        (Backend::Floquet, 0.99),
    ] {
        match tone_balance(
            &p,
            &eff,
            hz(c.cfg.dtt.delta_hz),
            n_p,
            start,
            0.01,
            hz(5.0),
            100,
            backend,
            &c.floquet,
        ) {
            Ok(r) => {
                let resid = g_opt * (1.0 - r.ratio).abs() / hz(1.0);
                pass &= r.iterations <= 100 && resid <= 5.0;
                parts.push(format!(
                    "{} from {start}: {} iterations, |dGamma| {resid:.2} Hz",
                    backend.name(),
                    r.iterations
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{} from {start}: {e}", backend.name()));
            }
        }
    }
    verdict(
        7,
        "tone balancing from a 1% imbalance at Gamma_opt = 2 pi 1 kHz",
        pass,
        true,
        format!("{} (tol 5 Hz within 100 iterations, 0.01 dB steps)", parts.join("; ")),
    );
}

/// Scaled-unit device: omega_m = 2 pi, x_zp = 1e-15 m.
fn scaled_device(kappa: f64, gamma: f64, n_t: f64) -> SystemParams {
    let wm = 2.0 * PI;
    SystemParams::new(DeviceParams {
        omega_m: wm,
        omega_c: 1e3 * wm,
        kappa_l: 0.1 * kappa,
        kappa_r: 0.5 * kappa,
        kappa_int: 0.4 * kappa,
        g0: 1e-4 * kappa,
        gamma_m0: gamma,
        mass: mass_for_xzp(1e-15, wm).unwrap(),
        n_m0_thermal: n_t,
        n_c_bath: CavityBath::default(),
    })
    .unwrap()
}

#[test]
fn criterion_08_oracle_equivalence() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let welch = WelchConfig::new(1024, 0.5, Window::Hann).unwrap();
    let mut worst_z = 0.0f64;
    let mut worst_draw = 0;
    for i in 0..20u64 {
        let kappa = rng.random_range(0.05..0.25) * 2.0 * PI;
        let gamma = kappa * rng.random_range(0.002..0.005);
        let n_t = rng.random_range(2.0..20.0);
        let n_c = rng.random_range(0.0..0.5);
        // small Gamma_opt / kappa: the closed forms are weak-coupling results
        let coop = rng.random_range(0.25..1.5);
        let p = params_for_nc(&scaled_device(kappa, gamma, n_t), n_c).unwrap();
        let eff = EffectiveMechanics {
            gamma_m: gamma,
            n_m_t: n_t,
        };
        let n_p = n_p_for_gamma_opt(&p, coop * gamma);
        let bae = i % 2 == 0;
        let scheme = if bae {
            DriveScheme::bae(2.0 * n_p)
        } else {
            DriveScheme::dtt(0.02 * kappa, n_p)
        };
        let (m1, m2) = if bae {
            let b = bae_budget(&p, &eff, &scheme, &ModelKnobs::default()).unwrap();
            (1.0 + 2.0 * b.n_x1(), 1.0 + 2.0 * b.n_x2())
        } else {
            let n = dtt_budget(&p, &eff, &scheme).unwrap().n_bar();
            (1.0 + 2.0 * n, 1.0 + 2.0 * n)
        };
        let cfg = EnsembleConfig {
            dt: None,
            duration: 4000.0 / gamma,
            n_traj: 16,
            seed: i,
            burn_in: None,
            rwa: true,
            decimation: 250,
        };
        let ens = integrate(&p, &eff, &scheme, &cfg).unwrap();
        let x2 = derive_xzp(&p).powi(2);
        for (ch, model) in [(Channel::X1, m1), (Channel::X2, m2)] {
            let pw: Vec<f64> = psd(&ens, ch, &welch)
                .unwrap()
                .per_traj_power
                .iter()
                .map(|v| v / x2)
                .collect();
            let (m, se) = mean_stderr(&pw);
            let z = (m - model) / se;
            if z.abs() > worst_z.abs() {
                worst_z = z;
                worst_draw = i;
            }
        }
    }

    // Floquet against the closed form as the sideband resolution improves.
    let base = params_for_nc(&SystemParams::device_default(), 0.6).unwrap();
    let k = base.kappa();
    let eff = EffectiveMechanics {
        gamma_m: hz(10.0),
        n_m_t: 15.0,
    };
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for r in [0.25, 0.18, 0.125, 0.09, 0.0625, 0.045] {
        let p = base.modified(|d| d.omega_m = k / r).unwrap();
        let s = DriveScheme::dtt(hz(500.0), n_p_for_gamma_opt(&p, hz(10.0)));
        let grid = uniform_grid(25.0 * eff.gamma_m, 2001);
        let f = displacement_spectrum(&p, &eff, &s, &grid, &FloquetOptions::default()).unwrap();
        let fit = fit_lorentzian(&f, &MaskSpec::none(), &FitOptions::default()).unwrap();
        let model = 1.0 + 2.0 * dtt_budget(&p, &eff, &s).unwrap().n_bar();
        let err = (fit.area / derive_xzp(&p).powi(2) / model - 1.0).abs();
        lx.push(r.ln());
        ly.push(err.ln());
    }
    let exponent = weighted_linear_fit(&lx, &ly, &vec![1.0; lx.len()]).unwrap().slope;
    let secs = t0.elapsed().as_secs_f64();

    let pass = worst_z.abs() <= 3.0 && within(exponent, 2.0, 0.3) && secs < 600.0;
    verdict(
        8,
        "oracle equivalence over 20 random draws",
        pass,
        true,
        format!(
            "stochastic X1/X2 PSD power vs closed form: worst |z| = {:.2} (draw {worst_draw}, tol 3); \
             floquet error exponent in kappa/omega_m {exponent:.3} vs 2 (tol 0.3); {secs:.0} s (< 600 s)",
            worst_z.abs()
        ),
    );
}

#[test]
fn criterion_09_fit_coverage() {
    let gamma = hz(100.0);
    let grid = uniform_grid(25.0 * gamma, 2001);
    let mask = MaskSpec::centered(0.0, hz(5.0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (area, floor) = (1.0, 0.05 * 4.0 / gamma);
    let n = 500;
    let (mut hit_area, mut hit_fwhm) = (0usize, 0usize);
    for _ in 0..n {
        let truth: Vec<f64> = grid.iter().map(|&o| floor + area * lorentzian(o, gamma)).collect();
        // averaged periodogram bins: Gaussian scatter of 1/sqrt(50)
        let sigma: Vec<f64> = truth.iter().map(|v| v / 50f64.sqrt()).collect();
        let y: Vec<f64> = truth
            .iter()
            .zip(&sigma)
            .map(|(v, s)| {
                let z: f64 = StandardNormal.sample(&mut rng);
                v + s * z
            })
            .collect();
        let f = fit_lorentzian_xy(&grid, &y, &mask, &FitOptions::with_sigma(sigma)).unwrap();
        hit_area += usize::from((f.area - area).abs() <= f.sigma_area());
        hit_fwhm += usize::from((f.fwhm - gamma).abs() <= f.sigma_fwhm());
    }
    let (ca, cw) = (hit_area as f64 / n as f64, hit_fwhm as f64 / n as f64);
    let pass = within(ca, 0.68, 0.05) && within(cw, 0.68, 0.05);
    verdict(
        9,
        "68% interval coverage over 500 masked Lorentzian fits",
        pass,
        true,
        format!("area {:.1}%, linewidth {:.1}% vs 68% (tol 5%)", 100.0 * ca, 100.0 * cw),
    );
}

#[test]
fn criterion_10_annotated_comparisons() {
    let reports = reproduce(&ctx(Backend::ClosedForm), FigureId::parse("2b").unwrap()).unwrap();
    let notes: Vec<String> = reports
        .iter()
        .flat_map(|r| &r.checks)
        .filter(|c| !c.gating)
        .map(|c| {
            format!(
                "{} {:.3} vs {} (tol {:.0}%, {})",
                c.name,
                c.value,
                c.target,
                100.0 * c.tolerance / c.target,
                if c.pass { "within" } else { "outside" }
            )
        })
        .collect();
    assert_eq!(notes.len(), 3);
    verdict(
        10,
        "desk-scale comparisons (annotated, non-gating)",
        true,
        false,
        notes.join("; "),
    );
}
