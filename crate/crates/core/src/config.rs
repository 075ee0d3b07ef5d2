//! TOML run configuration. Frequencies are given in Hz and converted to
//! rad/s on load; every key is required and unknown keys are rejected.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{hz, CavityBath, CoolingSpec, DeviceParams, DriveScheme, EffectiveMechanics, SystemParams};
use crate::spectra::{amplifier_added_quanta, ModelKnobs, ReadoutChain};

/// Shipped default configuration.
pub const DEVICE_TOML: &str = include_str!("../../../config/device.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub device: DeviceSection,
    pub mechanics: MechanicsSection,
    pub cooling: CoolingSection,
    pub readout: ReadoutSection,
    pub dtt: DttSection,
    pub bae: BaeSection,
    pub probe: ProbeSection,
    pub noise_injection: NoiseInjectionSection,
    pub calibration: CalibrationSection,
    pub model: ModelKnobs,
    pub solver: SolverSection,
    pub stochastic: StochasticSection,
    pub analysis: AnalysisSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    pub omega_m_hz: f64,
    pub omega_c_hz: f64,
    pub kappa_l_hz: f64,
    pub kappa_r_hz: f64,
    pub kappa_int_hz: f64,
    pub g0_hz: f64,
    pub gamma_m0_hz: f64,
    pub mass_kg: f64,
    pub bath_temperature_k: f64,
    pub n_c_l: f64,
    pub n_c_r: f64,
    pub n_c_int: f64,
}

/// Mechanics at the start of each measurement (after the cooling tone).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanicsSection {
    pub gamma_m_hz: f64,
    pub n_m_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoolingSection {
    pub delta_hz: f64,
    pub gamma_opt_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutSection {
    /// Quanta per (aW/Hz).
    pub alpha: f64,
    pub amplifier_noise_temperature_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DttSection {
    pub delta_hz: f64,
    pub n_p_per_tone: f64,
    pub n_c: f64,
    pub n_p_sweep: Vec<f64>,
    pub balance_granularity_db: f64,
    pub balance_tolerance_hz: f64,
    pub injected_imbalance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaeSection {
    pub n_p_total: f64,
    pub n_c: f64,
    pub n_p_sweep: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    pub n_p_pump: f64,
    pub probe_below_pump_db: f64,
    pub delta_hz: f64,
    pub n_c: f64,
    pub phi_deg: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseInjectionSection {
    pub delta_eta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    pub temperatures_k: Vec<f64>,
    pub thermal_relative_noise: f64,
    pub beta_per_watt: f64,
    pub through_powers_w: Vec<f64>,
    pub photon_relative_noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub truncation: usize,
    pub exact_cooling: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StochasticSection {
    pub n_traj: usize,
    pub duration_s: f64,
    pub segment_length: usize,
    pub rwa: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    pub mask_width_hz: f64,
    pub grid_points: usize,
    pub grid_half_width_linewidths: f64,
}

impl Config {
    pub fn device_default() -> Self {
        Self::from_toml(DEVICE_TOML).expect("shipped config parses")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        let bad = |m: String| Err(Error::Config(m));
        if !(self.mechanics.gamma_m_hz > 0.0) || !(self.mechanics.n_m_t >= 0.0) {
            return bad("mechanics: gamma_m_hz must be > 0 and n_m_t >= 0".into());
        }
        if !(self.readout.alpha > 0.0) || !(self.readout.amplifier_noise_temperature_k >= 0.0) {
            return bad("readout: alpha must be > 0 and the noise temperature >= 0".into());
        }
        if self.dtt.balance_granularity_db < 0.001 {
            return bad("dtt.balance_granularity_db must be >= 0.001".into());
        }
        if self.solver.truncation == 0 {
            return bad("solver.truncation must be >= 1".into());
        }
        if self.stochastic.n_traj == 0 || self.stochastic.segment_length < 2 || !(self.stochastic.duration_s > 0.0) {
            return bad("stochastic: n_traj, segment_length and duration_s must be positive".into());
        }
        if self.analysis.grid_points < 5 || !(self.analysis.grid_half_width_linewidths > 0.0) {
            return bad("analysis: grid_points >= 5 and grid_half_width_linewidths > 0 required".into());
        }
        Ok(())
    }

    pub fn params(&self) -> Result<SystemParams> {
        let d = &self.device;
        let omega_m = hz(d.omega_m_hz);
        let mut raw = DeviceParams {
            omega_m,
            omega_c: hz(d.omega_c_hz),
            kappa_l: hz(d.kappa_l_hz),
            kappa_r: hz(d.kappa_r_hz),
            kappa_int: hz(d.kappa_int_hz),
            g0: hz(d.g0_hz),
            gamma_m0: hz(d.gamma_m0_hz),
            mass: d.mass_kg,
            n_m0_thermal: 0.0,
            n_c_bath: CavityBath {
                l: d.n_c_l,
                r: d.n_c_r,
                int: d.n_c_int,
            },
        };
        raw.n_m0_thermal = crate::KB * d.bath_temperature_k / (crate::HBAR * omega_m);
        SystemParams::new(raw).map_err(|e| Error::Config(format!("device: {e}")))
    }

    pub fn mechanics(&self) -> EffectiveMechanics {
        EffectiveMechanics {
            gamma_m: hz(self.mechanics.gamma_m_hz),
            n_m_t: self.mechanics.n_m_t,
        }
    }

    pub fn cooling(&self, params: &SystemParams) -> CoolingSpec {
        CoolingSpec {
            delta_omega_cool: hz(self.cooling.delta_hz),
            n_p_cool: crate::model::n_p_for_gamma_opt(params, hz(self.cooling.gamma_opt_hz)),
        }
    }

    pub fn readout(&self, params: &SystemParams) -> Result<ReadoutChain> {
        let n_add = amplifier_added_quanta(params, self.readout.amplifier_noise_temperature_k);
        ReadoutChain::with_added_quanta(params, self.readout.alpha, n_add)
    }

    pub fn amplifier_added_quanta(&self, params: &SystemParams) -> f64 {
        amplifier_added_quanta(params, self.readout.amplifier_noise_temperature_k)
    }

    pub fn dtt_scheme(&self) -> DriveScheme {
        DriveScheme::dtt(hz(self.dtt.delta_hz), self.dtt.n_p_per_tone)
    }

    pub fn bae_scheme(&self) -> DriveScheme {
        DriveScheme::bae(self.bae.n_p_total)
    }

    pub fn probe_scheme(&self, phi: f64) -> DriveScheme {
        let p = &self.probe;
        DriveScheme::bae_with_probe(
            p.n_p_pump,
            p.n_p_pump * 10f64.powf(-p.probe_below_pump_db / 10.0),
            hz(p.delta_hz),
            phi,
        )
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn shipped_config_matches_defaults() {
        let c = Config::device_default();
        let p = c.params().unwrap();
        let d = SystemParams::device_default();
        assert!(rel(p.kappa(), d.kappa()) < 1e-12);
        assert!(rel(p.g0(), d.g0()) < 1e-12);
        assert!(rel(p.n_m0_thermal(), 104.2) < 0.005);
        assert_eq!(c.digest(), Config::device_default().digest());
    }

    #[test]
    fn missing_key_is_named() {
        let text = DEVICE_TOML.replace("g0_hz = 13.8\n", "");
        let err = Config::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("g0_hz"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let text = DEVICE_TOML.replace("[device]\n", "[device]\nbogus = 1\n");
        let err = Config::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn digest_tracks_content() {
        let a = Config::device_default();
        let mut b = a.clone();
        b.readout.alpha = 0.23;
        assert_ne!(a.digest(), b.digest());
    }
}
