//! Coupling, photon-number, readout-gain and port-occupancy calibrations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::{digest_of, CalibrationKind, CalibrationResult};
use crate::analysis::{fit_lorentzian_xy, FitOptions, MaskSpec};
use crate::error::{invalid, Error, Result};
use crate::model::{occupancy_from_temperature, SystemParams};
use crate::spectra::{cavity_output_noise, voltage_noise, ReadoutChain, Spectrum, SpectrumKind};
use crate::{HBAR, KB};

/// Fits y = s x through the origin; returns (s, sigma_s, reduced chi^2).
fn fit_origin(x: &[f64], y: &[f64], sigma: &[f64]) -> Result<(f64, f64, f64)> {
    if sigma.iter().any(|s| !(*s > 0.0)) {
        return Err(invalid("sigma", "uncertainties must be > 0"));
    }
    let sxx: f64 = x.iter().zip(sigma).map(|(x, s)| (x / s).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).zip(sigma).map(|((x, y), s)| x * y / (s * s)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("all abscissae are zero".into()));
    }
    let s = sxy / sxx;
    let chi2: f64 = x
        .iter()
        .zip(y)
        .zip(sigma)
        .map(|((x, y), sg)| ((y - s * x) / sg).powi(2))
        .sum();
    Ok((s, sxx.sqrt().recip(), chi2 / (x.len() - 1) as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermalCalibration {
    pub result: CalibrationResult,
    /// Fitted g0, rad/s.
    pub g0: f64,
    pub g0_sigma: f64,
    pub reduced_chi2: f64,
}

/// Sideband-to-through power ratio against mode temperature. Points are
/// (T in K, ratio, sigma). The ratio is 4 (g0/kappa)^2 n_m(T); the reported
/// slope is phonons per unit ratio, (kappa/g0)^2 / 4.
pub fn thermal_calibration(params: &SystemParams, points: &[(f64, f64, f64)]) -> Result<ThermalCalibration> {
    if points.len() < 3 {
        return Err(Error::CalibrationInvalid(format!(
            "thermal calibration needs >= 3 temperatures, got {}",
            points.len()
        )));
    }
    let x: Vec<f64> = points
        .iter()
        .map(|p| occupancy_from_temperature(params, p.0))
        .collect::<Result<_>>()?;
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let s: Vec<f64> = points.iter().map(|p| p.2).collect();
    let (slope, sigma, chi2) = fit_origin(&x, &y, &s)?;
    if chi2 > 3.0 {
        return Err(Error::CalibrationInvalid(format!(
            "thermal data not linear in temperature (reduced chi2 = {chi2:.2})"
        )));
    }
    if !(slope > 0.0) {
        return Err(Error::CalibrationInvalid("non-positive thermal slope".into()));
    }
    let g0 = 0.5 * params.kappa() * slope.sqrt();
    #[derive(Serialize)]
    struct In<'a> {
        points: &'a [(f64, f64, f64)],
        kappa: f64,
        omega_m: f64,
    }
    Ok(ThermalCalibration {
        result: CalibrationResult {
            kind: CalibrationKind::ThermalSlope,
            value: 1.0 / slope,
            uncertainty: sigma / (slope * slope),
            inputs_digest: digest_of(&In {
                points,
                kappa: params.kappa(),
                omega_m: params.omega_m(),
            }),
            flags: Vec::new(),
        },
        g0,
        g0_sigma: g0 * sigma / (2.0 * slope),
        reduced_chi2: chi2,
    })
}

pub fn synth_thermal_points(params: &SystemParams, temps: &[f64], rel_noise: f64, seed: u64) -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = 4.0 * (params.g0() / params.kappa()).powi(2);
    temps
        .iter()
        .map(|&t| {
            let truth = k * KB * t / (HBAR * params.omega_m());
            let z: f64 = StandardNormal.sample(&mut rng);
            (t, truth * (1.0 + rel_noise * z), rel_noise * truth)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhotonCalibration {
    pub result: CalibrationResult,
    /// d Gamma_opt / d P_thru, (rad/s)/W.
    pub slope: f64,
}

/// Intracavity photons per watt of through power, from optical damping
/// against through power. Points are (P_thru in W, Gamma_opt in rad/s,
/// sigma). The uncertainty folds in the relative error of g0.
pub fn photon_calibration(
    params: &SystemParams,
    g0: f64,
    g0_sigma: f64,
    points: &[(f64, f64, f64)],
) -> Result<PhotonCalibration> {
    if points.len() < 2 {
        return Err(Error::CalibrationInvalid("photon calibration needs >= 2 powers".into()));
    }
    if !(g0 > 0.0) {
        return Err(invalid("g0", "must be > 0"));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let s: Vec<f64> = points.iter().map(|p| p.2).collect();
    let (slope, sigma, chi2) = fit_origin(&x, &y, &s)?;
    if chi2 > 3.0 {
        return Err(Error::CalibrationInvalid(format!(
            "damping not linear in power (reduced chi2 = {chi2:.2})"
        )));
    }
    let per_photon = 4.0 * g0 * g0 / params.kappa();
    let beta = slope / per_photon;
    let rel = ((sigma / slope).powi(2) + (2.0 * g0_sigma / g0).powi(2)).sqrt();
    #[derive(Serialize)]
    struct In<'a> {
        points: &'a [(f64, f64, f64)],
        g0: f64,
        g0_sigma: f64,
        kappa: f64,
    }
    Ok(PhotonCalibration {
        result: CalibrationResult {
            kind: CalibrationKind::PhotonNumberBeta,
            value: beta,
            uncertainty: beta * rel,
            inputs_digest: digest_of(&In {
                points,
                g0,
                g0_sigma,
                kappa: params.kappa(),
            }),
            flags: Vec::new(),
        },
        slope,
    })
}

pub fn synth_photon_points(
    params: &SystemParams,
    beta: f64,
    powers: &[f64],
    rel_noise: f64,
    seed: u64,
) -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = 4.0 * params.g0().powi(2) / params.kappa() * beta;
    powers
        .iter()
        .map(|&p| {
            let z: f64 = StandardNormal.sample(&mut rng);
            (p, k * p * (1.0 + rel_noise * z), rel_noise * k * p)
        })
        .collect()
}

/// Readout gain from the calibration-mode floor `eta0` and the amplifier
/// added quanta.
pub fn calibrate_alpha(params: &SystemParams, eta0: f64, eta0_sigma: f64, n_add: f64) -> Result<CalibrationResult> {
    if !(eta0 > 0.0) {
        return Err(invalid("eta0", "must be > 0"));
    }
    let q = params.kappa() / (4.0 * params.kappa_r()) * (0.5 + n_add);
    let alpha = q / eta0;
    Ok(CalibrationResult {
        kind: CalibrationKind::NoiseFloorAlpha,
        value: alpha,
        uncertainty: alpha * eta0_sigma / eta0,
        inputs_digest: digest_of(&(eta0, eta0_sigma, n_add, params.kappa(), params.kappa_r())),
        flags: Vec::new(),
    })
}

/// Right-port bath occupancy from the dip in the pump-off voltage noise
/// around the cavity. Other port baths are taken as empty.
pub fn estimate_ncr(params: &SystemParams, chain: &ReadoutChain, spectrum: &Spectrum) -> Result<CalibrationResult> {
    if spectrum.kind != SpectrumKind::VoltageNoise {
        return Err(Error::NotAllowed(format!(
            "port occupancy needs VoltageNoise, got {}",
            spectrum.kind.name()
        )));
    }
    let (k, kr) = (params.kappa(), params.kappa_r());
    if (k - kr).abs() <= 1e-9 * k {
        return Err(Error::Degenerate(
            "kappa_R = kappa: the dip vanishes and n_cR is unidentifiable".into(),
        ));
    }
    let neg: Vec<f64> = spectrum.values.iter().map(|v| -v).collect();
    let fit = fit_lorentzian_xy(&spectrum.freq_grid, &neg, &MaskSpec::none(), &FitOptions::default())?;
    let scale = 4.0 * chain.alpha / (k * (1.0 - kr / k));
    let mut flags = Vec::new();
    if fit.low_signal {
        flags.push("low_signal".into());
    }
    Ok(CalibrationResult {
        kind: CalibrationKind::CavityPortOccupancy,
        value: if fit.low_signal { 0.0 } else { scale * fit.area },
        uncertainty: scale * fit.sigma_area(),
        inputs_digest: digest_of(&(&spectrum.freq_grid, &spectrum.values, chain.alpha)),
        flags,
    })
}

/// Pump-off voltage noise on `grid` with multiplicative Gaussian noise.
pub fn synth_pump_off_spectrum(
    params: &SystemParams,
    chain: &ReadoutChain,
    grid: &[f64],
    rel_noise: f64,
    seed: u64,
) -> Result<Spectrum> {
    let clean = voltage_noise(&cavity_output_noise(grid, params)?, chain, params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = clean
        .values
        .iter()
        .map(|&v| {
            let z: f64 = StandardNormal.sample(&mut rng);
            (v * (1.0 + rel_noise * z)).max(0.0)
        })
        .collect();
    Spectrum::new(
        clean.freq_grid.clone(),
        values,
        clean.kind,
        clean.reference,
        clean.source,
    )
}
