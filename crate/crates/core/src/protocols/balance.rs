//! Iterative blue/red power balancing of a detuned two-tone drive.

use serde::{Deserialize, Serialize};

use crate::analysis::{fit_lorentzian, FitOptions, MaskSpec};
use crate::error::{invalid, Error, Result};
use crate::floquet::{self, FloquetOptions, Ordering};
use crate::model::{gamma_opt, DriveScheme, EffectiveMechanics, Scheme, SystemParams};
use crate::spectra::{uniform_grid, Backend, Side};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceStep {
    pub iteration: usize,
    pub ratio_db: f64,
    /// Measured mechanical linewidth, rad/s.
    pub gamma_measured: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceResult {
    /// Final blue/red power ratio.
    pub ratio: f64,
    pub ratio_db: f64,
    pub iterations: usize,
    pub trace: Vec<BalanceStep>,
}

fn measured_linewidth(
    params: &SystemParams,
    eff: &EffectiveMechanics,
    scheme: &DriveScheme,
    backend: Backend,
    opts: &FloquetOptions,
) -> Result<f64> {
    let Scheme::DetunedTwoTone {
        n_p_per_tone,
        blue_to_red_ratio,
        ..
    } = scheme.variant
    else {
        return Err(Error::UnsupportedScheme("balancing needs a two-tone scheme".into()));
    };
    match backend {
        Backend::ClosedForm => Ok(eff.gamma_m + gamma_opt(params, n_p_per_tone)? * (1.0 - blue_to_red_ratio)),
        Backend::Floquet => {
            // Window wide enough for a few percent imbalance.
            let g_max = eff.gamma_m + gamma_opt(params, n_p_per_tone)? * (1.0 - blue_to_red_ratio).abs();
            let grid = uniform_grid(25.0 * g_max, 1201);
            let red = floquet::sideband_spectrum(params, eff, scheme, &grid, Side::Red, Ordering::Symmetrized, opts)?;
            Ok(fit_lorentzian(&red, &MaskSpec::none(), &FitOptions::default())?.fwhm)
        }
        _ => Err(Error::NotAllowed(format!(
            "tone balancing is not available with the {} backend",
            backend.name()
        ))),
    }
}

/// Steps the blue/red ratio in `granularity_db` increments until the
/// measured linewidth is within `tolerance` (rad/s) of `eff.gamma_m`.
#[allow(clippy::too_many_arguments)]
pub fn tone_balance(
    params: &SystemParams,
    eff: &EffectiveMechanics,
    delta: f64,
    n_p_per_tone: f64,
    start_ratio: f64,
    granularity_db: f64,
    tolerance: f64,
    max_iter: usize,
    backend: Backend,
    opts: &FloquetOptions,
) -> Result<BalanceResult> {
    if !(start_ratio > 0.0) {
        return Err(invalid("start_ratio", "must be > 0"));
    }
    if !(granularity_db > 0.0) || !(tolerance > 0.0) {
        return Err(invalid("granularity_db", "granularity and tolerance must be > 0"));
    }
    let mut ratio_db = 10.0 * start_ratio.log10();
    let mut trace = Vec::new();
    for iteration in 0..=max_iter {
        let scheme = DriveScheme::new(Scheme::DetunedTwoTone {
            delta,
            n_p_per_tone,
            blue_to_red_ratio: 10f64.powf(ratio_db / 10.0),
        });
        let g = measured_linewidth(params, eff, &scheme, backend, opts)?;
        let error = g - eff.gamma_m;
        trace.push(BalanceStep {
            iteration,
            ratio_db,
            gamma_measured: g,
            error,
        });
        if error.abs() <= tolerance {
            return Ok(BalanceResult {
                ratio: 10f64.powf(ratio_db / 10.0),
                ratio_db,
                iterations: iteration,
                trace,
            });
        }
        // Excess damping means the red tone dominates.
        ratio_db += granularity_db * error.signum();
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        last: trace.iter().rev().take(10).map(|s| s.ratio_db).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{hz, n_p_for_gamma_opt};

    fn setup() -> (SystemParams, EffectiveMechanics, f64) {
        let p = SystemParams::device_default();
        let eff = EffectiveMechanics {
            gamma_m: hz(200.0),
            n_m_t: 15.0,
        };
        (p.clone(), eff, n_p_for_gamma_opt(&p, hz(1000.0)))
    }

    #[test]
    fn balanced_start_returns_immediately() {
        let (p, eff, n) = setup();
        let r = tone_balance(
            &p,
            &eff,
            hz(3e4),
            n,
            1.0,
            0.01,
            hz(5.0),
            100,
            Backend::ClosedForm,
            &FloquetOptions::default(),
        )
        .unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.trace.len(), 1);
    }

    #[test]
    fn one_percent_imbalance_converges() {
        let (p, eff, n) = setup();
        for backend in [Backend::ClosedForm, Backend::Floquet] {
            let r = tone_balance(
                &p,
                &eff,
                hz(3e4),
                n,
                0.99,
                0.01,
                hz(5.0),
                100,
                backend,
                &FloquetOptions::default(),
            )
            .unwrap();
            assert!(r.iterations > 0 && r.iterations < 100);
            assert!(r.trace.last().unwrap().error.abs() <= hz(5.0));
            assert!((r.trace[0].error - hz(10.0)).abs() < hz(2.0), "{:?}", r.trace[0]);
        }
    }

    #[test]
    fn coarse_steps_fail_with_trace() {
        let (p, eff, n) = setup();
        let err = tone_balance(
            &p,
            &eff,
            hz(3e4),
            n,
            0.99,
            0.5,
            hz(5.0),
            20,
            Backend::ClosedForm,
            &FloquetOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonConvergence { iterations: 20, ref last } if !last.is_empty()));
    }
}
