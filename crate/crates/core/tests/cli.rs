use std::fs;
use std::path::Path;

use optomech::analysis::{fit_lorentzian, FitOptions, MaskSpec};
use optomech::cli::run;
use optomech::config::DEVICE_TOML;
use optomech::spectra::Spectrum;

fn go(args: &[&str]) -> i32 {
    let mut v = vec!["optomech"];
    v.extend_from_slice(args);
    run(v)
}

fn out(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn default_spectrum_has_2001_rows_and_header() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(go(&["spectrum", "--out", &out(d.path())]), 0);
    let text = fs::read_to_string(d.path().join("spectrum_bae_x2_closed-form.csv")).unwrap();
    assert!(text.starts_with("# config_digest="));
    assert!(text.lines().next().unwrap().contains("seed=2016"));
    let rows = text.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(rows, 2001);
}

#[test]
fn floquet_and_closed_form_areas_agree() {
    let d = tempfile::tempdir().unwrap();
    let o = out(d.path());
    assert_eq!(go(&["spectrum", "--out", &o]), 0);
    assert_eq!(go(&["spectrum", "--backend", "floquet", "--out", &o]), 0);
    let area = |f: &str| {
        let s = Spectrum::from_csv(&fs::read_to_string(d.path().join(f)).unwrap()).unwrap();
        fit_lorentzian(&s, &MaskSpec::none(), &FitOptions::default())
            .unwrap()
            .area
    };
    let a = area("spectrum_bae_x2_closed-form.csv");
    let b = area("spectrum_bae_x2_floquet.csv");
    assert!(((a - b) / a).abs() < 0.01, "{a} vs {b}");
}

#[test]
fn identical_invocations_are_byte_identical() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    for d in [&d1, &d2] {
        assert_eq!(go(&["reproduce", "2b", "--seed", "5", "--out", &out(d.path())]), 0);
    }
    for f in ["fig2b_dtt.csv", "fig2b_bae.csv", "manifest.csv"] {
        let a = fs::read(d1.path().join(f)).unwrap();
        let b = fs::read(d2.path().join(f)).unwrap();
        assert_eq!(a, b, "{f}");
        assert!(String::from_utf8(a).unwrap().starts_with("# config_digest="));
    }
}

#[test]
fn missing_key_is_a_configuration_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.toml");
    fs::write(&cfg, DEVICE_TOML.replace("kappa_r_hz = 0.45e6\n", "")).unwrap();
    let code = go(&["--config", cfg.to_str().unwrap(), "spectrum", "--out", &out(d.path())]);
    assert_eq!(code, 2);
    let err = optomech::config::Config::load(&cfg).unwrap_err().to_string();
    assert!(err.contains("kappa_r_hz"), "{err}");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(go(&["reproduce", "4a"]), 2);
    assert_eq!(go(&["spectrum", "--backend", "quantum"]), 2);
}

#[test]
fn validate_passes_and_fails_at_truncation_one() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(go(&["validate", "--out", &out(d.path())]), 0);
    assert_eq!(go(&["validate", "--truncation", "1", "--out", &out(d.path())]), 1);
}

#[test]
fn calibrate_writes_results() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(go(&["calibrate", "--out", &out(d.path())]), 0);
    let text = fs::read_to_string(d.path().join("calibration.csv")).unwrap();
    assert!(text.starts_with("# config_digest="));
    for kind in [
        "ThermalSlope",
        "PhotonNumberBeta",
        "NoiseFloorAlpha",
        "CavityPortOccupancy",
    ] {
        assert!(text.contains(kind), "{kind}");
    }
}

#[test]
fn plots_are_written_on_request() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(go(&["reproduce", "3e", "--plot", "--out", &out(d.path())]), 0);
    let svg = fs::read_to_string(d.path().join("fig3e.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}
